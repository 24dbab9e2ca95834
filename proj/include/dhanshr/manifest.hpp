#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace dhanshr {

struct ManifestRecord {
    std::string split;   // train | test
    std::string source;  // PSD | SHIQ | SSHR | other
    std::string input_path;
    std::string gt_path;
};

struct Manifest {
    std::vector<ManifestRecord> records;
};

// (split, source) -> pair count
using ManifestSummary = std::map<std::pair<std::string, std::string>, std::size_t>;

inline ManifestSummary summarize(const Manifest& m) {
    ManifestSummary s;
    for (const auto& r : m.records) ++s[{r.split, r.source}];
    return s;
}

// The hybrid benchmark's expected per-source pair counts.
struct BenchmarkSourceCounts {
    const char* source;
    std::size_t train;
    std::size_t test;
};

inline constexpr BenchmarkSourceCounts kBenchmarkCounts[] = {
    {"PSD", 9481, 947},
    {"SHIQ", 9825, 1000},
    {"SSHR", 10000, 1000},
};
inline constexpr std::size_t kBenchmarkTrainTotal = 29306;
inline constexpr std::size_t kBenchmarkTestTotal = 2947;

// When all three canonical sources are present, the per-source and total
// counts must match the benchmark split exactly. Returns an error message on
// mismatch, std::nullopt when valid or when validation does not apply.
inline std::optional<std::string> check_benchmark_split_totals(const ManifestSummary& summary) {
    bool all_present = true;
    for (const auto& c : kBenchmarkCounts) {
        bool found = false;
        for (const auto& [key, count] : summary)
            if (key.second == c.source) found = true;
        if (!found) all_present = false;
    }
    if (!all_present) return std::nullopt;

    std::size_t train_total = 0, test_total = 0;
    for (const auto& c : kBenchmarkCounts) {
        const auto train_it = summary.find({"train", c.source});
        const auto test_it = summary.find({"test", c.source});
        const std::size_t train_n = train_it == summary.end() ? 0 : train_it->second;
        const std::size_t test_n = test_it == summary.end() ? 0 : test_it->second;
        train_total += train_n;
        test_total += test_n;
        if (train_n != c.train)
            return std::string("benchmark split mismatch: train/") + c.source + " has " +
                   std::to_string(train_n) + " pairs, expected " + std::to_string(c.train);
        if (test_n != c.test)
            return std::string("benchmark split mismatch: test/") + c.source + " has " +
                   std::to_string(test_n) + " pairs, expected " + std::to_string(c.test);
    }
    if (train_total != kBenchmarkTrainTotal)
        return "benchmark split mismatch: train total " + std::to_string(train_total) +
               ", expected " + std::to_string(kBenchmarkTrainTotal);
    if (test_total != kBenchmarkTestTotal)
        return "benchmark split mismatch: test total " + std::to_string(test_total) +
               ", expected " + std::to_string(kBenchmarkTestTotal);
    return std::nullopt;
}

inline std::string summary_table(const ManifestSummary& summary) {
    std::ostringstream os;
    std::map<std::string, std::size_t> split_totals;
    for (const auto& [key, count] : summary) {
        os << key.first << "/" << key.second << ": " << count << " pairs\n";
        split_totals[key.first] += count;
    }
    for (const auto& [split, total] : split_totals)
        os << split << " total: " << total << " pairs\n";
    return os.str();
}

namespace manifestdetail {

inline bool is_image_name(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    return ext == ".png" || ext == ".ppm";
}

// stem -> full path; a stem appearing with two extensions is a collision.
inline std::map<std::string, std::string> stems_of_dir(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_image_name(entry.path())) continue;
        const std::string stem = entry.path().stem().string();
        auto [it, inserted] = out.emplace(stem, entry.path().string());
        if (!inserted)
            throw std::runtime_error("ambiguous stem '" + stem + "' in " + dir.string() +
                                     " (multiple extensions)");
    }
    return out;
}

}  // namespace manifestdetail

// Pairs input/ and gt/ files by shared stem under root/<split>/<source>/.
// Records come out in lexicographic (split, source, stem) order.
inline Manifest build_manifest(const std::string& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root))
        throw std::runtime_error("manifest root is not a directory: " + root);

    Manifest m;
    std::vector<fs::path> splits;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) splits.push_back(e.path());
    std::sort(splits.begin(), splits.end());

    for (const auto& split_dir : splits) {
        std::vector<fs::path> sources;
        for (const auto& e : fs::directory_iterator(split_dir))
            if (e.is_directory()) sources.push_back(e.path());
        std::sort(sources.begin(), sources.end());

        for (const auto& source_dir : sources) {
            const auto inputs = manifestdetail::stems_of_dir(source_dir / "input");
            const auto gts = manifestdetail::stems_of_dir(source_dir / "gt");
            if (inputs.empty()) continue;

            std::vector<std::string> missing;
            for (const auto& [stem, path] : inputs)
                if (!gts.count(stem)) missing.push_back(stem);
            if (!missing.empty()) {
                std::string msg = "missing ground truth under " + (source_dir / "gt").string() +
                                  " for stem(s):";
                for (const auto& s : missing) msg += " " + s;
                throw std::runtime_error(msg);
            }
            for (const auto& [stem, path] : inputs)  // std::map iterates sorted
                m.records.push_back({split_dir.filename().string(),
                                     source_dir.filename().string(), path, gts.at(stem)});
        }
    }
    return m;
}

inline nlohmann::ordered_json manifest_to_json(const Manifest& m) {
    nlohmann::ordered_json j;
    j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : m.records)
        j["records"].push_back({{"split", r.split},
                                {"source", r.source},
                                {"input_path", r.input_path},
                                {"gt_path", r.gt_path}});
    return j;
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
    Manifest m;
    if (!j.contains("records") || !j.at("records").is_array())
        throw std::runtime_error("manifest: missing records array");
    std::map<std::pair<std::string, std::string>, int> seen;
    for (const auto& rec : j.at("records")) {
        ManifestRecord r;
        r.split = rec.at("split").get<std::string>();
        r.source = rec.at("source").get<std::string>();
        r.input_path = rec.at("input_path").get<std::string>();
        r.gt_path = rec.at("gt_path").get<std::string>();
        if (++seen[{r.split, r.input_path}] > 1)
            throw std::runtime_error("manifest: duplicate input_path within split '" + r.split +
                                     "': " + r.input_path);
        m.records.push_back(std::move(r));
    }
    return m;
}

inline void save_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << manifest_to_json(m).dump(2) << "\n";
}

inline Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("manifest parse error in " + path + ": " + e.what());
    }
    return manifest_from_json(j);
}

}  // namespace dhanshr
