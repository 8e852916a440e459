#include "hgcn/archive.hpp"

#include "hgcn/error.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

namespace hgcn {

namespace {

constexpr std::array<char, 8> kMagic = {'H', 'G', 'C', 'N', 'A', 'R', 'C', 'H'};
constexpr std::size_t kPrefix = 8 + 4 + 8;

template <typename U>
void put_le(std::string& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
    }
}

template <typename U>
U get_le(const std::string& in, std::size_t pos) {
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        value |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    }
    return value;
}

} // namespace

void TensorArchive::add(std::string name, Matrix value) {
    tensors.emplace_back(std::move(name), std::move(value));
}

const Matrix* TensorArchive::find(const std::string& name) const noexcept {
    for (const auto& [n, m] : tensors) {
        if (n == name) {
            return &m;
        }
    }
    return nullptr;
}

const Matrix& TensorArchive::require(const std::string& name) const {
    if (const Matrix* m = find(name)) {
        return *m;
    }
    throw IoError("archive is missing tensor '" + name + "'");
}

void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
    nlohmann::json header;
    header["meta"] = archive.meta;
    header["tensors"] = nlohmann::json::array();
    std::string payload;
    std::unordered_set<std::string> seen;
    for (const auto& [name, m] : archive.tensors) {
        if (!seen.insert(name).second) {
            throw IoError("duplicate tensor name '" + name + "'");
        }
        header["tensors"].push_back(
            {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", payload.size()}});
        for (double v : m.data()) {
            put_le(payload, std::bit_cast<std::uint64_t>(v));
        }
    }
    const std::string header_text = header.dump();

    std::string out(kMagic.begin(), kMagic.end());
    put_le(out, kArchiveVersion);
    put_le(out, static_cast<std::uint64_t>(header_text.size()));
    out += header_text;
    out += payload;

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

TensorArchive read_archive(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const std::string where = "'" + path.string() + "': ";
    if (bytes.size() < kPrefix || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
        throw IoError(where + "not an archive (bad magic)");
    }
    const auto version = get_le<std::uint32_t>(bytes, 8);
    if (version != kArchiveVersion) {
        throw IoError(where + "unsupported container version " + std::to_string(version));
    }
    const auto header_len = get_le<std::uint64_t>(bytes, 12);
    if (header_len > bytes.size() - kPrefix) {
        throw IoError(where + "truncated header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(kPrefix, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(where + "corrupt header: " + e.what());
    }
    const std::size_t payload_start = kPrefix + header_len;
    const std::size_t payload_size = bytes.size() - payload_start;

    TensorArchive archive;
    try {
        archive.meta = header.at("meta");
        for (const auto& t : header.at("tensors")) {
            const auto name = t.at("name").get<std::string>();
            const auto rows = t.at("rows").get<std::uint64_t>();
            const auto cols = t.at("cols").get<std::uint64_t>();
            const auto offset = t.at("offset").get<std::uint64_t>();
            if (cols != 0 && rows > payload_size / 8 / cols) {
                throw IoError(where + "tensor '" + name + "' shape " + std::to_string(rows) + "x" +
                              std::to_string(cols) + " exceeds payload");
            }
            const std::uint64_t nbytes = rows * cols * 8;
            if (offset % 8 != 0 || offset > payload_size || nbytes > payload_size - offset) {
                throw IoError(where + "tensor '" + name + "' shape " + std::to_string(rows) + "x" +
                              std::to_string(cols) + " at offset " + std::to_string(offset) +
                              " exceeds payload of " + std::to_string(payload_size) + " bytes");
            }
            std::vector<double> data(rows * cols);
            for (std::size_t i = 0; i < data.size(); ++i) {
                data[i] = std::bit_cast<double>(
                    get_le<std::uint64_t>(bytes, payload_start + offset + 8 * i));
            }
            archive.add(name, Matrix(rows, cols, std::move(data)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(where + "malformed tensor table: " + e.what());
    }
    return archive;
}

} // namespace hgcn
