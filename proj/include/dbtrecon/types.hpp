#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbtrecon {

/// Invalid configuration, shape mismatch or violated invariant on input data.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Failure while iterating (non-finite iterate, unstable step sizes).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 2D attenuation image, row-major. Rows run along depth (z, row 0 nearest the
/// source), columns along the detector-parallel axis (x). Units are 1/cm.
struct ImageGrid {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    double pixel_size = 0.0;  // cm
    double origin_x = 0.0;    // grid center offset from isocenter, cm
    double origin_z = 0.0;
    std::vector<double> values;

    static ImageGrid zeros(std::size_t rows, std::size_t cols, double pixel_size) {
        return ImageGrid{rows, cols, pixel_size, 0.0, 0.0, std::vector<double>(rows * cols, 0.0)};
    }

    /// Same geometry as `like`, zero values.
    static ImageGrid zeros_like(const ImageGrid& like) {
        ImageGrid g = like;
        g.values.assign(like.values.size(), 0.0);
        return g;
    }

    std::size_t size() const { return n_rows * n_cols; }
    double& operator()(std::size_t row, std::size_t col) { return values[row * n_cols + col]; }
    double operator()(std::size_t row, std::size_t col) const { return values[row * n_cols + col]; }

    bool same_shape(const ImageGrid& other) const {
        return n_rows == other.n_rows && n_cols == other.n_cols;
    }
};

/// Line-integral data indexed by (view, detector bin), row-major.
struct Sinogram {
    std::size_t n_views = 0;
    std::size_t n_bins = 0;
    std::vector<double> values;

    static Sinogram zeros(std::size_t views, std::size_t bins) {
        return Sinogram{views, bins, std::vector<double>(views * bins, 0.0)};
    }

    std::size_t size() const { return n_views * n_bins; }
    std::span<double> view(std::size_t v) { return {values.data() + v * n_bins, n_bins}; }
    std::span<const double> view(std::size_t v) const { return {values.data() + v * n_bins, n_bins}; }

    bool same_shape(const Sinogram& other) const {
        return n_views == other.n_views && n_bins == other.n_bins;
    }
};

/// One finite-difference component (∂x f or ∂z f), shaped like the image.
struct DiffField {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> values;

    static DiffField zeros(std::size_t rows, std::size_t cols) {
        return DiffField{rows, cols, std::vector<double>(rows * cols, 0.0)};
    }
    static DiffField zeros_like(const ImageGrid& f) { return zeros(f.n_rows, f.n_cols); }

    std::size_t size() const { return n_rows * n_cols; }
    double& operator()(std::size_t row, std::size_t col) { return values[row * n_cols + col]; }
    double operator()(std::size_t row, std::size_t col) const { return values[row * n_cols + col]; }
};

namespace vec {

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("dot: length mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace vec
}  // namespace dbtrecon
