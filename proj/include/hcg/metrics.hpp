#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "hcg/dataset.hpp"
#include "hcg/image.hpp"
#include "hcg/resample.hpp"
#include "hcg/threading.hpp"

namespace hcg {

namespace detail {

inline void check_metric_inputs(const DepthImage& pred, const DepthImage& gt, int crop_border) {
    if (pred.width != gt.width || pred.height != gt.height) {
        throw ShapeError("metric: size mismatch " + std::to_string(pred.width) + "x" +
                         std::to_string(pred.height) + " vs " + std::to_string(gt.width) + "x" +
                         std::to_string(gt.height));
    }
    if (crop_border < 0 || 2 * crop_border >= pred.width || 2 * crop_border >= pred.height) {
        throw ShapeError("metric: crop border " + std::to_string(crop_border) +
                         " leaves no pixels");
    }
}

}  // namespace detail

/// Mean absolute difference in native depth units.
inline double mad(const DepthImage& pred, const DepthImage& gt, int crop_border = 0) {
    detail::check_metric_inputs(pred, gt, crop_border);
    double acc = 0.0;
    std::int64_t count = 0;
    for (int y = crop_border; y < pred.height - crop_border; ++y) {
        for (int x = crop_border; x < pred.width - crop_border; ++x) {
            acc += std::abs(pred.at(y, x) - gt.at(y, x));
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

/// Root mean square error in native depth units.
inline double rmse(const DepthImage& pred, const DepthImage& gt, int crop_border = 0) {
    detail::check_metric_inputs(pred, gt, crop_border);
    double acc = 0.0;
    std::int64_t count = 0;
    for (int y = crop_border; y < pred.height - crop_border; ++y) {
        for (int x = crop_border; x < pred.width - crop_border; ++x) {
            const double d = pred.at(y, x) - gt.at(y, x);
            acc += d * d;
            ++count;
        }
    }
    return std::sqrt(acc / static_cast<double>(count));
}

/// The reference non-learned method: bicubic upsampling of the LR depth.
inline DepthImage bicubic_baseline(const DepthImage& lr_depth, int scale) {
    return bicubic_resize(lr_depth, lr_depth.width * scale, lr_depth.height * scale);
}

struct EvalEntry {
    std::string id;
    double mad = 0.0;
    double rmse = 0.0;
    bool ok = false;
    std::string error;
};

struct EvalReport {
    std::vector<EvalEntry> entries;
    int scale = 0;
    int crop_border = 0;
    std::string model_id;
    double avg_mad = 0.0;
    double avg_rmse = 0.0;
    bool any_failed = false;

    std::string to_csv() const {
        std::ostringstream out;
        out << "image,mad,rmse\n" << std::fixed << std::setprecision(6);
        for (const auto& e : entries) {
            if (e.ok) out << e.id << "," << e.mad << "," << e.rmse << "\n";
        }
        out << "average," << avg_mad << "," << avg_rmse << "\n";
        return out.str();
    }

    std::string summary() const {
        std::ostringstream out;
        out << "model: " << model_id << "  scale: x" << scale << "\n";
        out << std::fixed << std::setprecision(4);
        for (const auto& e : entries) {
            if (e.ok) {
                out << "  " << std::left << std::setw(28) << e.id << " MAD " << std::setw(10)
                    << e.mad << " RMSE " << e.rmse << "\n";
            } else {
                out << "  " << std::left << std::setw(28) << e.id << " FAILED: " << e.error
                    << "\n";
            }
        }
        out << "  " << std::left << std::setw(28) << "Average" << " MAD " << std::setw(10)
            << avg_mad << " RMSE " << avg_rmse << "\n";
        return out.str();
    }
};

/// Maps (LR depth, HR color) to an HR depth prediction in native units.
using Predictor = std::function<DepthImage(const DepthImage&, const ColorImage&)>;

/// Whole-image evaluation: each manifest pair is loaded, the LR input is the
/// bicubic downsample of the HR depth, and metrics are taken against the HR
/// ground truth. Per-entry failures are recorded and evaluation continues.
/// Averages are order-normalized (sorted before summation), so they do not
/// depend on manifest order.
inline EvalReport evaluate(const Predictor& predictor, const std::vector<ManifestEntry>& manifest,
                           int scale, int crop_border = 0, const std::string& model_id = "model") {
    EvalReport report;
    report.scale = scale;
    report.crop_border = crop_border;
    report.model_id = model_id;
    report.entries.resize(manifest.size());

    parallel_for(static_cast<std::int64_t>(manifest.size()), [&](std::int64_t i) {
        EvalEntry& e = report.entries[static_cast<std::size_t>(i)];
        const auto& m = manifest[static_cast<std::size_t>(i)];
        e.id = m.depth_path;
        try {
            const DepthImage hr = load_pgm(m.depth_path);
            const ColorImage color = load_ppm(m.color_path);
            if (hr.width != color.width || hr.height != color.height) {
                throw ShapeError("depth/color size mismatch");
            }
            if (hr.width % scale != 0 || hr.height % scale != 0) {
                throw ShapeError("image size not divisible by scale");
            }
            const DepthImage lr = bicubic_resize(hr, hr.width / scale, hr.height / scale);
            const DepthImage pred = predictor(lr, color);
            e.mad = mad(pred, hr, crop_border);
            e.rmse = rmse(pred, hr, crop_border);
            e.ok = true;
        } catch (const std::exception& ex) {
            e.ok = false;
            e.error = ex.what();
        }
    });

    std::vector<double> mads, rmses;
    for (const auto& e : report.entries) {
        if (e.ok) {
            mads.push_back(e.mad);
            rmses.push_back(e.rmse);
        } else {
            report.any_failed = true;
        }
    }
    std::sort(mads.begin(), mads.end());
    std::sort(rmses.begin(), rmses.end());
    double macc = 0.0, racc = 0.0;
    for (const double v : mads) macc += v;
    for (const double v : rmses) racc += v;
    if (!mads.empty()) {
        report.avg_mad = macc / static_cast<double>(mads.size());
        report.avg_rmse = racc / static_cast<double>(rmses.size());
    }
    return report;
}

}  // namespace hcg
