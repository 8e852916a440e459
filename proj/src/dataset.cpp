#include "hgcn/dataset.hpp"

#include "hgcn/encoder.hpp"
#include "hgcn/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

namespace hgcn {

nlohmann::json sample_to_json(const Sample& s) {
    nlohmann::json j = {{"id", s.id}, {"tokens", s.tokens}, {"labels", s.labels}};
    if (!s.annotations.empty()) {
        nlohmann::json ann = nlohmann::json::array();
        for (const auto& a : s.annotations) {
            ann.push_back({{"token", a.token_index}, {"label", a.label}, {"intensity", a.intensity}});
        }
        j["annotations"] = std::move(ann);
    }
    return j;
}

Sample sample_from_json(const nlohmann::json& j, std::span<const std::string> label_set,
                        std::size_t line_no) {
    auto fail = [line_no](const std::string& msg) {
        return ValidationError(fmt::format("line {}: {}", line_no, msg));
    };
    if (!j.is_object()) {
        throw fail("expected a JSON object");
    }
    auto known = [&](const std::string& name) {
        return std::find(label_set.begin(), label_set.end(), name) != label_set.end();
    };
    Sample s;
    try {
        if (!j.contains("id") || !j["id"].is_string()) {
            throw fail("missing string field \"id\"");
        }
        s.id = j["id"].get<std::string>();
        if (j.contains("tokens")) {
            s.tokens = j["tokens"].get<std::vector<std::string>>();
        } else if (j.contains("text")) {
            s.tokens = split_whitespace(j["text"].get<std::string>());
        } else {
            throw fail("sample '" + s.id + "' has neither \"tokens\" nor \"text\"");
        }
        if (!j.contains("labels")) {
            throw fail("sample '" + s.id + "' has no \"labels\" field");
        }
        s.labels = j["labels"].get<std::vector<std::string>>();
        std::set<std::string> seen;
        for (const auto& l : s.labels) {
            if (!known(l)) {
                throw fail(fmt::format("unknown label \"{}\" in sample '{}'", l, s.id));
            }
            if (!seen.insert(l).second) {
                throw fail(fmt::format("duplicate label \"{}\" in sample '{}'", l, s.id));
            }
        }
        if (j.contains("annotations")) {
            for (const auto& a : j["annotations"]) {
                KeywordAnnotation k;
                k.token_index = a.at("token").get<std::size_t>();
                k.label = a.at("label").get<std::string>();
                k.intensity = a.at("intensity").get<double>();
                if (k.token_index >= s.tokens.size()) {
                    throw fail(fmt::format("annotation token index {} out of range ({} tokens)",
                                           k.token_index, s.tokens.size()));
                }
                if (!known(k.label)) {
                    throw fail(fmt::format("unknown label \"{}\" in annotation", k.label));
                }
                if (!(k.intensity >= 0.0 && k.intensity <= 1.0)) {
                    throw fail(fmt::format("annotation intensity {} outside [0, 1]", k.intensity));
                }
                s.annotations.push_back(std::move(k));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw fail(std::string("malformed field: ") + e.what());
    }
    return s;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path,
                                 std::span<const std::string> label_set) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("cannot open dataset '" + path.string() + "'");
    }
    std::vector<Sample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(fmt::format("{}: line {}: malformed JSON ({})", path.string(),
                                              line_no, e.what()));
        }
        try {
            out.push_back(sample_from_json(j, label_set, line_no));
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ": " + e.what());
        }
    }
    return out;
}

void write_dataset(const std::filesystem::path& path, std::span<const Sample> samples) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    for (const auto& s : samples) {
        f << sample_to_json(s).dump() << '\n';
    }
    if (!f) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

} // namespace hgcn
