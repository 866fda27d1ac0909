#pragma once

#include "dbtrecon/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace dbtrecon {

enum class DetectorMotion {
    stationary,  // flat detector fixed below the isocenter; only the source moves
    rotating,    // detector turns with the source, always perpendicular to the central ray
};

/// Limited-angle fan-beam scan. Lengths in cm, angles in degrees.
///
/// The source travels on a circle of radius `source_to_isocenter` about the
/// isocenter; view angles are measured from the vertical (z) axis. The flat
/// detector sits at distance `source_to_detector` from the source along the
/// central (view-0) ray.
struct ScanGeometry {
    std::size_t n_views = 25;
    double arc_span = 50.0;
    double source_to_isocenter = 50.0;
    double source_to_detector = 100.0;
    std::size_t n_detector_bins = 1024;
    double detector_length = default_detector_length(10.0, 50.0, 100.0);
    double fov_side = 10.0;
    DetectorMotion detector_motion = DetectorMotion::stationary;

    /// Detector wide enough for the fan to span the circle circumscribing the
    /// FOV square: fov·√2 times the magnification.
    static double default_detector_length(double fov_side, double sid, double sdd) {
        return fov_side * std::numbers::sqrt2 * (sdd / sid);
    }

    std::size_t n_rays() const { return n_views * n_detector_bins; }
    double bin_width() const { return detector_length / static_cast<double>(n_detector_bins); }

    void validate() const {
        if (n_views < 1) throw ValidationError("geometry: n_views must be >= 1");
        if (!(arc_span > 0.0)) throw ValidationError("geometry: arc_span must be > 0");
        if (!(source_to_isocenter > 0.0))
            throw ValidationError("geometry: source_to_isocenter must be > 0");
        if (!(source_to_detector > source_to_isocenter))
            throw ValidationError("geometry: source_to_detector must exceed source_to_isocenter");
        if (n_detector_bins < 1) throw ValidationError("geometry: n_detector_bins must be >= 1");
        if (!(detector_length > 0.0)) throw ValidationError("geometry: detector_length must be > 0");
        if (!(fov_side > 0.0)) throw ValidationError("geometry: fov_side must be > 0");
    }
};

inline std::string to_string(DetectorMotion m) {
    return m == DetectorMotion::stationary ? "stationary" : "rotating";
}

inline DetectorMotion detector_motion_from_string(const std::string& s) {
    if (s == "stationary") return DetectorMotion::stationary;
    if (s == "rotating") return DetectorMotion::rotating;
    throw ValidationError("unknown detector_motion '" + s + "'");
}

/// Equally spaced view angles on [-arc/2, +arc/2], endpoints included.
inline std::vector<double> view_angles(const ScanGeometry& geom) {
    geom.validate();
    std::vector<double> angles(geom.n_views);
    if (geom.n_views == 1) {
        angles[0] = 0.0;
        return angles;
    }
    const double step = geom.arc_span / static_cast<double>(geom.n_views - 1);
    for (std::size_t v = 0; v < geom.n_views; ++v)
        angles[v] = -0.5 * geom.arc_span + step * static_cast<double>(v);
    return angles;
}

struct Point2 {
    double x = 0.0;
    double z = 0.0;
};

struct RaySegment {
    Point2 source;
    Point2 target;  // detector-bin center
};

/// Ray from the source at view angle `angle_deg` to the center of bin `bin`.
inline RaySegment ray_for(const ScanGeometry& geom, double angle_deg, std::size_t bin) {
    const double theta = angle_deg * std::numbers::pi / 180.0;
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const Point2 src{geom.source_to_isocenter * s, geom.source_to_isocenter * c};
    const double offset = -0.5 * geom.detector_length + (static_cast<double>(bin) + 0.5) * geom.bin_width();

    if (geom.detector_motion == DetectorMotion::stationary) {
        const double det_z = geom.source_to_isocenter - geom.source_to_detector;
        return {src, {offset, det_z}};
    }
    const Point2 center{src.x - geom.source_to_detector * s, src.z - geom.source_to_detector * c};
    return {src, {center.x + offset * c, center.z - offset * s}};
}

/// Square grid of n×n pixels covering the scan FOV, centered on the isocenter.
inline ImageGrid make_grid(const ScanGeometry& geom, std::size_t n) {
    if (n == 0) throw ValidationError("make_grid: zero pixels");
    return ImageGrid::zeros(n, n, geom.fov_side / static_cast<double>(n));
}

/// Exact intersection lengths of segment p0→p1 with each pixel of the grid
/// (Siddon-style parametric traversal). Appends (pixel index, length) pairs in
/// order along the ray.
inline void trace_ray(const Point2& p0, const Point2& p1, const ImageGrid& grid,
                      std::vector<std::pair<std::uint32_t, double>>& out) {
    const double ps = grid.pixel_size;
    const double x_min = grid.origin_x - 0.5 * static_cast<double>(grid.n_cols) * ps;
    const double x_max = grid.origin_x + 0.5 * static_cast<double>(grid.n_cols) * ps;
    const double z_min = grid.origin_z - 0.5 * static_cast<double>(grid.n_rows) * ps;
    const double z_max = grid.origin_z + 0.5 * static_cast<double>(grid.n_rows) * ps;
    const double dx = p1.x - p0.x;
    const double dz = p1.z - p0.z;
    const double length = std::hypot(dx, dz);
    if (length == 0.0) return;

    double a_lo = 0.0;
    double a_hi = 1.0;
    auto clip = [&](double p, double d, double lo, double hi) {
        if (d == 0.0) {
            if (p < lo || p >= hi) a_hi = -1.0;
            return;
        }
        double a0 = (lo - p) / d;
        double a1 = (hi - p) / d;
        if (a0 > a1) std::swap(a0, a1);
        a_lo = std::max(a_lo, a0);
        a_hi = std::min(a_hi, a1);
    };
    clip(p0.x, dx, x_min, x_max);
    clip(p0.z, dz, z_min, z_max);
    if (!(a_hi > a_lo)) return;

    std::vector<double> alphas;
    alphas.reserve(grid.n_cols + grid.n_rows + 4);
    alphas.push_back(a_lo);
    if (dx != 0.0) {
        for (std::size_t k = 0; k <= grid.n_cols; ++k) {
            const double a = (x_min + static_cast<double>(k) * ps - p0.x) / dx;
            if (a > a_lo && a < a_hi) alphas.push_back(a);
        }
    }
    if (dz != 0.0) {
        for (std::size_t k = 0; k <= grid.n_rows; ++k) {
            const double a = (z_min + static_cast<double>(k) * ps - p0.z) / dz;
            if (a > a_lo && a < a_hi) alphas.push_back(a);
        }
    }
    alphas.push_back(a_hi);
    std::sort(alphas.begin(), alphas.end());

    const auto last_col = static_cast<long>(grid.n_cols) - 1;
    const auto last_row = static_cast<long>(grid.n_rows) - 1;
    const std::size_t first_out = out.size();
    for (std::size_t k = 0; k + 1 < alphas.size(); ++k) {
        const double seg = (alphas[k + 1] - alphas[k]) * length;
        if (seg <= 1e-12 * ps) continue;
        const double am = 0.5 * (alphas[k] + alphas[k + 1]);
        const double xm = p0.x + am * dx;
        const double zm = p0.z + am * dz;
        const long col = std::clamp(static_cast<long>(std::floor((xm - x_min) / ps)), 0L, last_col);
        const long row = std::clamp(static_cast<long>(std::floor((z_max - zm) / ps)), 0L, last_row);
        const auto pix = static_cast<std::uint32_t>(row * static_cast<long>(grid.n_cols) + col);
        if (out.size() > first_out && out.back().first == pix)
            out.back().second += seg;
        else
            out.emplace_back(pix, seg);
    }
}

struct Triplet {
    std::uint32_t ray;
    std::uint32_t pixel;
    double value;
};

/// Sparse ray-by-pixel projection operator, stored both row-compressed (for
/// the forward product) and column-compressed (for the adjoint) from the same
/// entry values, so the adjoint is the exact transpose.
///
/// Reduction order: forward sums each ray's entries in increasing pixel index;
/// adjoint sums each pixel's entries in increasing ray index. Both are
/// independent of thread count.
class SystemMatrix {
public:
    struct Shape {
        std::size_t n_views = 0;
        std::size_t n_bins = 0;
        std::size_t n_rows = 0;
        std::size_t n_cols = 0;
        double pixel_size = 0.0;
    };

    SystemMatrix() = default;

    /// Duplicate (ray, pixel) pairs are summed.
    SystemMatrix(const Shape& shape, std::vector<Triplet> entries) : shape_(shape) {
        const std::size_t n_rays = shape.n_views * shape.n_bins;
        const std::size_t n_pix = shape.n_rows * shape.n_cols;
        for (const auto& t : entries) {
            if (t.ray >= n_rays || t.pixel >= n_pix)
                throw ValidationError("SystemMatrix: triplet index out of range");
            if (!(t.value >= 0.0) || !std::isfinite(t.value))
                throw ValidationError("SystemMatrix: entries must be finite and nonnegative");
        }
        std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return a.ray != b.ray ? a.ray < b.ray : a.pixel < b.pixel;
        });
        row_ptr_.assign(n_rays + 1, 0);
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto& t = entries[k];
            if (!row_col_.empty() && k > 0 && entries[k - 1].ray == t.ray && entries[k - 1].pixel == t.pixel) {
                row_val_.back() += t.value;
                continue;
            }
            row_col_.push_back(t.pixel);
            row_val_.push_back(t.value);
            ++row_ptr_[t.ray + 1];
        }
        for (std::size_t r = 0; r < n_rays; ++r) row_ptr_[r + 1] += row_ptr_[r];
        build_transpose();
    }

    const Shape& shape() const { return shape_; }
    std::size_t n_rays() const { return shape_.n_views * shape_.n_bins; }
    std::size_t n_pixels() const { return shape_.n_rows * shape_.n_cols; }
    std::size_t nnz() const { return row_val_.size(); }

    /// Entries of one ray as (pixel, length), increasing pixel order.
    std::vector<std::pair<std::uint32_t, double>> row(std::size_t ray) const {
        std::vector<std::pair<std::uint32_t, double>> out;
        for (std::size_t k = row_ptr_[ray]; k < row_ptr_[ray + 1]; ++k)
            out.emplace_back(row_col_[k], row_val_[k]);
        return out;
    }

    double ray_length(std::size_t ray) const {
        double s = 0.0;
        for (std::size_t k = row_ptr_[ray]; k < row_ptr_[ray + 1]; ++k) s += row_val_[k];
        return s;
    }

    void forward(std::span<const double> f, std::span<double> g) const {
        if (f.size() != n_pixels() || g.size() != n_rays())
            throw ValidationError("forward: shape mismatch");
        const auto n = static_cast<std::ptrdiff_t>(n_rays());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t r = 0; r < n; ++r) {
            double acc = 0.0;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += row_val_[k] * f[row_col_[k]];
            g[r] = acc;
        }
    }

    void adjoint(std::span<const double> g, std::span<double> f) const {
        if (f.size() != n_pixels() || g.size() != n_rays())
            throw ValidationError("adjoint: shape mismatch");
        const auto n = static_cast<std::ptrdiff_t>(n_pixels());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t p = 0; p < n; ++p) {
            double acc = 0.0;
            for (std::size_t k = col_ptr_[p]; k < col_ptr_[p + 1]; ++k) acc += col_val_[k] * g[col_row_[k]];
            f[p] = acc;
        }
    }

private:
    void build_transpose() {
        const std::size_t n_pix = n_pixels();
        col_ptr_.assign(n_pix + 1, 0);
        for (auto c : row_col_) ++col_ptr_[c + 1];
        for (std::size_t p = 0; p < n_pix; ++p) col_ptr_[p + 1] += col_ptr_[p];
        col_row_.resize(row_col_.size());
        col_val_.resize(row_val_.size());
        std::vector<std::size_t> next(col_ptr_.begin(), col_ptr_.end() - 1);
        for (std::size_t r = 0; r < n_rays(); ++r) {
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                const std::size_t dst = next[row_col_[k]]++;
                col_row_[dst] = static_cast<std::uint32_t>(r);
                col_val_[dst] = row_val_[k];
            }
        }
    }

    Shape shape_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> row_col_;
    std::vector<double> row_val_;
    std::vector<std::size_t> col_ptr_;
    std::vector<std::uint32_t> col_row_;
    std::vector<double> col_val_;
};

/// Ray-driven system matrix: one ray per detector-bin center per view.
inline SystemMatrix build_system_matrix(const ScanGeometry& geom, const ImageGrid& grid) {
    geom.validate();
    if (!(grid.pixel_size > 0.0) || grid.n_rows == 0 || grid.n_cols == 0)
        throw ValidationError("build_system_matrix: degenerate image grid");
    const std::size_t n_pix = grid.size();
    if (geom.n_rays() > UINT32_MAX || n_pix > UINT32_MAX)
        throw ValidationError("build_system_matrix: problem too large for 32-bit indices");

    const auto angles = view_angles(geom);
    const std::size_t n_rays = geom.n_rays();
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n_rays);
    const auto n = static_cast<std::ptrdiff_t>(n_rays);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        const std::size_t v = static_cast<std::size_t>(r) / geom.n_detector_bins;
        const std::size_t b = static_cast<std::size_t>(r) % geom.n_detector_bins;
        const auto ray = ray_for(geom, angles[v], b);
        trace_ray(ray.source, ray.target, grid, rows[r]);
    }

    std::size_t total = 0;
    for (const auto& r : rows) total += r.size();
    std::vector<Triplet> entries;
    entries.reserve(total);
    for (std::size_t r = 0; r < n_rays; ++r) {
        for (const auto& [pix, len] : rows[r])
            entries.push_back({static_cast<std::uint32_t>(r), pix, len});
        std::vector<std::pair<std::uint32_t, double>>().swap(rows[r]);
    }
    return SystemMatrix({geom.n_views, geom.n_detector_bins, grid.n_rows, grid.n_cols, grid.pixel_size},
                        std::move(entries));
}

inline Sinogram forward_project(const SystemMatrix& A, const ImageGrid& f) {
    if (f.n_rows != A.shape().n_rows || f.n_cols != A.shape().n_cols || f.values.size() != f.size())
        throw ValidationError("forward_project: image shape does not match system matrix");
    Sinogram g = Sinogram::zeros(A.shape().n_views, A.shape().n_bins);
    A.forward(f.values, g.values);
    return g;
}

inline ImageGrid back_project(const SystemMatrix& A, const Sinogram& y) {
    if (y.n_views != A.shape().n_views || y.n_bins != A.shape().n_bins || y.values.size() != y.size())
        throw ValidationError("back_project: sinogram shape does not match system matrix");
    ImageGrid f = ImageGrid::zeros(A.shape().n_rows, A.shape().n_cols, A.shape().pixel_size);
    A.adjoint(y.values, f.values);
    return f;
}

}  // namespace dbtrecon
