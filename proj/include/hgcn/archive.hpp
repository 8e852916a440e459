#ifndef HGCN_ARCHIVE_HPP
#define HGCN_ARCHIVE_HPP

#include "hgcn/matrix.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace hgcn {

/// Named-tensor container used for checkpoints and precomputed embeddings.
///
/// Layout on disk:
///
///     offset 0   8 bytes   magic "HGCNARCH"
///     offset 8   u32 LE    container version (kArchiveVersion)
///     offset 12  u64 LE    header length H in bytes
///     offset 20  H bytes   UTF-8 JSON header:
///                          {"meta": {...},
///                           "tensors": [{"name", "rows", "cols", "offset"}, ...]}
///     offset 20+H          payload: IEEE-754 binary64 values, little-endian,
///                          row-major; "offset" is in bytes from payload start
///
/// Values round-trip bit-exactly.
struct TensorArchive {
    nlohmann::json meta = nlohmann::json::object();
    std::vector<std::pair<std::string, Matrix>> tensors;

    void add(std::string name, Matrix value);
    const Matrix* find(const std::string& name) const noexcept;
    /// Throws IoError naming the missing tensor.
    const Matrix& require(const std::string& name) const;
};

inline constexpr std::uint32_t kArchiveVersion = 1;

void write_archive(const std::filesystem::path& path, const TensorArchive& archive);
/// Throws IoError on unreadable, truncated or inconsistent files.
TensorArchive read_archive(const std::filesystem::path& path);

} // namespace hgcn

#endif // HGCN_ARCHIVE_HPP
