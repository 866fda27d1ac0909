#pragma once

#include "dbtrecon/fft.hpp"
#include "dbtrecon/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace dbtrecon {

/// mt19937_64 with hand-rolled uniform/normal transforms. The std::
/// distributions are implementation-defined, so they are avoided to keep
/// phantoms identical across standard libraries.
class PortableRng {
public:
    explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller, both variates used.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n) {
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

enum class Tissue : std::uint8_t { background = 0, adipose = 1, fibroglandular = 2, calcification = 3 };

struct TissueWeights {
    double adipose = 0.5;
    double fibroglandular = 1.0;
    double calcification = 2.0;

    double of(Tissue t) const {
        switch (t) {
            case Tissue::adipose: return adipose;
            case Tissue::fibroglandular: return fibroglandular;
            case Tissue::calcification: return calcification;
            case Tissue::background: return 0.0;
        }
        return 0.0;
    }
};

struct PhantomSpec {
    std::size_t n_pixels = 256;
    std::uint64_t seed = 20240611;
    double noise_exponent = 3.0;
    double glandular_fraction = 0.3;
    std::size_t n_calcifications = 10;
    // Speck radius range in pixels at `calc_radius_reference` pixels per side;
    // scaled with resolution so specks keep their physical size.
    int calc_radius_min = 1;
    int calc_radius_max = 2;
    std::size_t calc_radius_reference = 256;
    TissueWeights weights;
    double fov_side = 10.0;

    void validate() const {
        if (n_pixels < 8) throw ValidationError("phantom: n_pixels must be >= 8");
        if (!(noise_exponent >= 0.0) || !std::isfinite(noise_exponent))
            throw ValidationError("phantom: noise_exponent must be finite and >= 0");
        if (!(glandular_fraction > 0.0 && glandular_fraction < 1.0))
            throw ValidationError("phantom: glandular_fraction must lie in (0, 1)");
        if (calc_radius_min < 0 || calc_radius_max < calc_radius_min)
            throw ValidationError("phantom: invalid calcification radius range");
        if (calc_radius_reference == 0) throw ValidationError("phantom: calc_radius_reference must be > 0");
        for (double w : {weights.adipose, weights.fibroglandular, weights.calcification})
            if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("phantom: tissue weights must be finite and > 0");
        if (!(fov_side > 0.0)) throw ValidationError("phantom: fov_side must be > 0");
    }
};

struct PhantomImage {
    ImageGrid values;
    std::vector<Tissue> labels;
};

/// n×n field with radially averaged power spectrum ∝ 1/ν^exponent, zero mean
/// and unit variance. Unit white noise is shaped in the 2D Fourier domain.
inline ImageGrid power_law_noise(std::size_t n, double exponent, std::uint64_t seed) {
    if (n < 8) throw ValidationError("power_law_noise: n must be >= 8 for spectral shaping");
    if (!(exponent >= 0.0)) throw ValidationError("power_law_noise: exponent must be >= 0");

    PortableRng rng(seed);
    std::vector<std::complex<double>> field(n * n);
    for (auto& c : field) c = {rng.normal(), 0.0};

    fft::transform_2d(field, n, n, false);
    const auto nn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double fi = (2 * i <= n ? static_cast<double>(i) : static_cast<double>(i) - nn) / nn;
        for (std::size_t j = 0; j < n; ++j) {
            const double fj = (2 * j <= n ? static_cast<double>(j) : static_cast<double>(j) - nn) / nn;
            const double nu = std::hypot(fi, fj);
            field[i * n + j] *= nu == 0.0 ? 0.0 : std::pow(nu, -0.5 * exponent);
        }
    }
    fft::transform_2d(field, n, n, true);

    ImageGrid out = ImageGrid::zeros(n, n, 1.0);
    double mean = 0.0;
    for (std::size_t k = 0; k < field.size(); ++k) {
        out.values[k] = field[k].real();
        mean += out.values[k];
    }
    mean /= static_cast<double>(field.size());
    double var = 0.0;
    for (double& v : out.values) {
        v -= mean;
        var += v * v;
    }
    var /= static_cast<double>(field.size());
    const double inv_sd = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    for (double& v : out.values) v *= inv_sd;
    return out;
}

inline PhantomImage assemble_phantom(std::vector<Tissue> labels, std::size_t n, const PhantomSpec& spec) {
    PhantomImage ph;
    ph.values = ImageGrid::zeros(n, n, spec.fov_side / static_cast<double>(n));
    for (std::size_t k = 0; k < labels.size(); ++k) ph.values.values[k] = spec.weights.of(labels[k]);
    ph.labels = std::move(labels);
    return ph;
}

/// Breast slice: thresholded power-law noise for fibroglandular tissue on an
/// adipose background filling the square FOV, plus disc-shaped calcifications
/// centered on distinct glandular pixels.
inline PhantomImage make_phantom(const PhantomSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_pixels;
    const std::size_t total = n * n;
    const ImageGrid noise = power_law_noise(n, spec.noise_exponent, spec.seed);

    // Glandular = the round(fraction·N) largest noise values; ties broken by index.
    std::vector<std::uint32_t> order(total);
    for (std::size_t k = 0; k < total; ++k) order[k] = static_cast<std::uint32_t>(k);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return noise.values[a] != noise.values[b] ? noise.values[a] > noise.values[b] : a < b;
    });
    const auto n_gland = static_cast<std::size_t>(std::llround(spec.glandular_fraction * static_cast<double>(total)));

    std::vector<Tissue> labels(total, Tissue::adipose);
    std::vector<std::uint32_t> glandular(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_gland));
    for (auto k : glandular) labels[k] = Tissue::fibroglandular;

    if (spec.n_calcifications > glandular.size())
        throw ValidationError("phantom: glandular region too small to host the requested calcifications");

    // Distinct centers: partial Fisher-Yates over the glandular pixels in index order.
    std::sort(glandular.begin(), glandular.end());
    PortableRng rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    const double scale = static_cast<double>(n) / static_cast<double>(spec.calc_radius_reference);
    for (std::size_t c = 0; c < spec.n_calcifications; ++c) {
        const std::size_t pick = c + static_cast<std::size_t>(rng.index(glandular.size() - c));
        std::swap(glandular[c], glandular[pick]);
        const auto span = static_cast<std::uint64_t>(spec.calc_radius_max - spec.calc_radius_min + 1);
        const double radius = (spec.calc_radius_min + static_cast<double>(rng.index(span))) * scale;
        const auto ci = static_cast<long>(glandular[c] / n);
        const auto cj = static_cast<long>(glandular[c] % n);
        const long reach = static_cast<long>(std::ceil(radius));
        for (long di = -reach; di <= reach; ++di) {
            for (long dj = -reach; dj <= reach; ++dj) {
                const long i = ci + di;
                const long j = cj + dj;
                if (i < 0 || j < 0 || i >= static_cast<long>(n) || j >= static_cast<long>(n)) continue;
                if (static_cast<double>(di * di + dj * dj) > radius * radius) continue;
                labels[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] = Tissue::calcification;
            }
        }
    }
    return assemble_phantom(std::move(labels), n, spec);
}

enum class Resampling {
    native,      // regenerate at the target size with the same seed and parameters
    downsample,  // generate at spec.n_pixels and take the block-majority label
};

inline std::string to_string(Resampling r) { return r == Resampling::native ? "native" : "downsample"; }

inline Resampling resampling_from_string(const std::string& s) {
    if (s == "native") return Resampling::native;
    if (s == "downsample") return Resampling::downsample;
    throw ValidationError("unknown phantom resampling '" + s + "'");
}

/// Phantom at `n_target` pixels per side. Block-majority downsampling keeps
/// the value set {adipose, fibroglandular, calcification}; ties go to the
/// denser tissue.
inline PhantomImage downsample_consistent(const PhantomSpec& spec, std::size_t n_target,
                                          Resampling mode = Resampling::native) {
    spec.validate();
    if (n_target < 8) throw ValidationError("downsample_consistent: target size must be >= 8");
    if (n_target == spec.n_pixels) return make_phantom(spec);
    if (mode == Resampling::native) {
        PhantomSpec s = spec;
        s.n_pixels = n_target;
        return make_phantom(s);
    }
    if (n_target > spec.n_pixels || spec.n_pixels % n_target != 0)
        throw ValidationError("downsample_consistent: target size must divide the phantom size");
    const PhantomImage full = make_phantom(spec);
    const std::size_t f = spec.n_pixels / n_target;
    std::vector<Tissue> labels(n_target * n_target);
    for (std::size_t i = 0; i < n_target; ++i) {
        for (std::size_t j = 0; j < n_target; ++j) {
            std::array<std::size_t, 4> counts{};
            for (std::size_t a = 0; a < f; ++a)
                for (std::size_t b = 0; b < f; ++b)
                    ++counts[static_cast<std::size_t>(full.labels[(i * f + a) * spec.n_pixels + j * f + b])];
            std::size_t best = 0;
            for (std::size_t t = 1; t < counts.size(); ++t)
                if (counts[t] >= counts[best]) best = t;
            labels[i * n_target + j] = static_cast<Tissue>(best);
        }
    }
    return assemble_phantom(std::move(labels), n_target, spec);
}

}  // namespace dbtrecon
