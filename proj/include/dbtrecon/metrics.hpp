#pragma once

#include "dbtrecon/filters.hpp"
#include "dbtrecon/geometry.hpp"
#include "dbtrecon/types.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <vector>

namespace dbtrecon {

/// Per-iteration solver telemetry. Channel-lo fields stay NaN in single mode;
/// image_rmse stays NaN without a reference image.
struct IterationRecord {
    std::size_t iteration = 0;
    double image_rmse = std::numeric_limits<double>::quiet_NaN();
    double residual_hi_norm = 0.0;
    double residual_lo_norm = std::numeric_limits<double>::quiet_NaN();
    double objective_value = 0.0;
    double slack_hi = 0.0;
    double slack_lo = std::numeric_limits<double>::quiet_NaN();
    double peak_abs_value = 0.0;  // max |f|; not part of the CSV schema
};

inline double image_rmse(const ImageGrid& f, const ImageGrid& truth) {
    if (!f.same_shape(truth) || f.values.size() != truth.values.size())
        throw ValidationError("image_rmse: shape mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        const double d = f.values[k] - truth.values[k];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(f.values.size()));
}

enum class ModeAxis { x, z };

struct ModeGainProfile {
    std::vector<std::size_t> frequencies;
    std::vector<double> gains;
};

/// Real cosine probe image at frequency index k along the chosen axis.
inline ImageGrid cosine_mode(std::size_t n_rows, std::size_t n_cols, double pixel_size, std::size_t k,
                             ModeAxis axis = ModeAxis::x, double amplitude = 1.0) {
    ImageGrid e = ImageGrid::zeros(n_rows, n_cols, pixel_size);
    const double n = static_cast<double>(axis == ModeAxis::x ? n_cols : n_rows);
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t j = 0; j < n_cols; ++j) {
            const double pos = static_cast<double>(axis == ModeAxis::x ? j : i);
            e(i, j) = amplitude * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) * pos / n);
        }
    return e;
}

/// ‖R X e_k‖ / ‖e_k‖ for each requested mode.
inline ModeGainProfile mode_gain_profile(const SystemMatrix& A, const FilterResponse& r,
                                         const std::vector<std::size_t>& modes, ModeAxis axis = ModeAxis::x) {
    const auto& sh = A.shape();
    if (r.size() != sh.n_bins) throw ValidationError("mode_gain_profile: filter length does not match detector");
    const std::size_t limit = axis == ModeAxis::x ? sh.n_cols : sh.n_rows;
    const DetectorFilter R(r);
    ModeGainProfile out;
    for (std::size_t k : modes) {
        if (k >= limit) throw ValidationError("mode_gain_profile: mode index exceeds grid size");
        const ImageGrid e = cosine_mode(sh.n_rows, sh.n_cols, sh.pixel_size, k, axis);
        const Sinogram proj = R.apply(forward_project(A, e));
        out.frequencies.push_back(k);
        out.gains.push_back(vec::norm2(proj.values) / vec::norm2(e.values));
    }
    return out;
}

/// Standard deviation (population) of the first differences of image_rmse over
/// the records whose iteration lies in [first, last].
inline double oscillation_index(const std::vector<IterationRecord>& records, std::size_t first, std::size_t last) {
    std::vector<double> series;
    for (const auto& r : records)
        if (r.iteration >= first && r.iteration <= last) series.push_back(r.image_rmse);
    if (series.size() < 2) throw ValidationError("oscillation_index: window holds fewer than two records");
    std::vector<double> d(series.size() - 1);
    double mean = 0.0;
    for (std::size_t k = 0; k + 1 < series.size(); ++k) {
        d[k] = series[k + 1] - series[k];
        mean += d[k];
    }
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(d.size()));
}

}  // namespace dbtrecon
