#pragma once

#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dhanshr/image_io.hpp"
#include "dhanshr/manifest.hpp"
#include "dhanshr/network.hpp"
#include "dhanshr/quality.hpp"
#include "dhanshr/version.hpp"

namespace dhanshr {

// PSNR values above this (including the +inf identical-pair sentinel) are
// written to reports as exactly 99.0 dB; infinity is not representable in
// JSON.
inline constexpr double kPsnrReportCap = 99.0;

inline double cap_psnr(double v) { return v > kPsnrReportCap ? kPsnrReportCap : v; }

inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

struct PairResult {
    ManifestRecord record;
    int height = 0;
    int width = 0;
    double psnr_db = 0.0;  // capped
    double ssim = 0.0;
    std::string error;  // non-empty means the pair was skipped

    bool ok() const { return error.empty(); }
};

struct SourceAggregate {
    std::string source;
    std::size_t count = 0;
    double mean_psnr_db = 0.0;
    double mean_ssim = 0.0;
};

struct EvalReport {
    std::string tool_version = kToolVersion;
    std::string config_hash = "none";
    std::string lpips = "n/a";
    std::vector<PairResult> pairs;
    std::vector<SourceAggregate> aggregates;
};

// Scores every manifest pair at native resolution. With a model, predictions
// are forward passes over the inputs; without one the input paths are taken
// to be precomputed predictions. Per-pair failures (unreadable file, size
// mismatch) are recorded and the run continues.
template <typename T>
EvalReport evaluate(const Manifest& manifest, const ModelWeights<T>* model,
                    const SsimParams& ssim_params = {}) {
    EvalReport report;
    if (model) report.config_hash = fnv1a_hex(canonical_config_json(model->config));

    for (const auto& rec : manifest.records) {
        PairResult pr;
        pr.record = rec;
        try {
            FeatureMap<T> pred = load_image<T>(rec.input_path);
            const FeatureMap<T> gt = load_image<T>(rec.gt_path);
            if (model) pred = forward(*model, pred);
            if (!pred.same_shape(gt))
                throw std::runtime_error(
                    "size mismatch: prediction " + std::to_string(pred.width) + "x" +
                    std::to_string(pred.height) + " vs ground truth " + std::to_string(gt.width) +
                    "x" + std::to_string(gt.height));
            pr.height = pred.height;
            pr.width = pred.width;
            pr.psnr_db = cap_psnr(static_cast<double>(psnr(pred, gt, T(1))));
            pr.ssim = static_cast<double>(ssim(pred, gt, ssim_params));
        } catch (const std::exception& e) {
            pr.error = e.what();
        }
        report.pairs.push_back(std::move(pr));
    }

    std::map<std::string, SourceAggregate> agg;
    for (const auto& pr : report.pairs) {
        if (!pr.ok()) continue;
        auto& a = agg[pr.record.source];
        a.source = pr.record.source;
        ++a.count;
        a.mean_psnr_db += pr.psnr_db;
        a.mean_ssim += pr.ssim;
    }
    for (auto& [name, a] : agg) {
        a.mean_psnr_db /= static_cast<double>(a.count);
        a.mean_ssim /= static_cast<double>(a.count);
        report.aggregates.push_back(a);
    }
    return report;
}

inline nlohmann::ordered_json eval_to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["tool_version"] = r.tool_version;
    j["config_hash"] = r.config_hash;
    j["lpips"] = r.lpips;
    j["pairs"] = nlohmann::ordered_json::array();
    for (const auto& p : r.pairs) {
        nlohmann::ordered_json e;
        e["split"] = p.record.split;
        e["source"] = p.record.source;
        e["input_path"] = p.record.input_path;
        e["gt_path"] = p.record.gt_path;
        if (p.ok()) {
            e["height"] = p.height;
            e["width"] = p.width;
            e["psnr_db"] = p.psnr_db;
            e["ssim"] = p.ssim;
        } else {
            e["error"] = p.error;
        }
        j["pairs"].push_back(std::move(e));
    }
    j["aggregates"] = nlohmann::ordered_json::array();
    for (const auto& a : r.aggregates)
        j["aggregates"].push_back({{"source", a.source},
                                   {"count", a.count},
                                   {"mean_psnr_db", a.mean_psnr_db},
                                   {"mean_ssim", a.mean_ssim}});
    return j;
}

inline std::string eval_to_table(const EvalReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(10) << "source" << std::setw(8) << "pairs" << std::setw(12)
       << "PSNR(dB)" << std::setw(10) << "SSIM" << std::setw(8) << "LPIPS" << "\n";
    for (const auto& a : r.aggregates)
        os << std::left << std::setw(10) << a.source << std::setw(8) << a.count << std::setw(12)
           << std::fixed << std::setprecision(4) << a.mean_psnr_db << std::setw(10) << a.mean_ssim
           << std::setw(8) << r.lpips << "\n";
    std::size_t failed = 0;
    for (const auto& p : r.pairs)
        if (!p.ok()) ++failed;
    if (failed) os << failed << " pair(s) failed; see the JSON report for details\n";
    return os.str();
}

}  // namespace dhanshr
