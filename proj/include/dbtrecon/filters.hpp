#pragma once

#include "dbtrecon/fft.hpp"
#include "dbtrecon/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <complex>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

namespace dbtrecon {

enum class FilterKind { hann_sqrt, hann_sqrt_complement, identity };

inline std::string to_string(FilterKind k) {
    switch (k) {
        case FilterKind::hann_sqrt: return "hann_sqrt";
        case FilterKind::hann_sqrt_complement: return "hann_sqrt_complement";
        case FilterKind::identity: return "identity";
    }
    return "?";
}

inline FilterKind filter_kind_from_string(const std::string& s) {
    if (s == "hann_sqrt") return FilterKind::hann_sqrt;
    if (s == "hann_sqrt_complement") return FilterKind::hann_sqrt_complement;
    if (s == "identity") return FilterKind::identity;
    throw ValidationError("unknown filter kind '" + s + "'");
}

struct FilterSpec {
    FilterKind kind = FilterKind::hann_sqrt;
    double cutoff = 4.0;  // c: passband edge at ν_Nyquist / c
    std::size_t n_bins = 0;

    void validate() const {
        if (kind != FilterKind::identity && !(cutoff > 0.0))
            throw ValidationError("filter: cutoff parameter must be > 0");
        if (n_bins == 0) throw ValidationError("filter: n_bins must be > 0");
    }
};

/// Gains indexed by DFT bin k = 0..n-1 of a length-n transform along the
/// detector axis. Real and symmetric under k -> n-k.
struct FilterResponse {
    std::vector<double> gains;
    std::size_t size() const { return gains.size(); }
};

/// Signed frequency of DFT bin k in cycles per bin, in (-1/2, 1/2].
inline double bin_frequency(std::size_t k, std::size_t n) {
    const auto kk = static_cast<double>(k);
    const auto nn = static_cast<double>(n);
    return (2 * k <= n ? kk : kk - nn) / nn;
}

inline constexpr double nyquist = 0.5;

inline double hann_sqrt_gain(double nu, double cutoff) {
    const double nu_c = nyquist / cutoff;
    const double a = std::abs(nu);
    if (a > nu_c) return 0.0;
    return std::sqrt(std::max(0.0, 0.5 * (1.0 + std::cos(std::numbers::pi * a / nu_c))));
}

inline FilterResponse hann_sqrt_response(std::size_t n_bins, double cutoff) {
    if (!(cutoff > 0.0)) throw ValidationError("hann_sqrt_response: cutoff must be > 0");
    FilterResponse r;
    r.gains.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) r.gains[k] = hann_sqrt_gain(bin_frequency(k, n_bins), cutoff);
    return r;
}

inline FilterResponse identity_response(std::size_t n_bins) { return {std::vector<double>(n_bins, 1.0)}; }

/// sqrt(1 - base²): base² + complement² == 1 at every frequency.
inline FilterResponse complement_response(const FilterResponse& base) {
    FilterResponse r;
    r.gains.resize(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
        const double g = base.gains[k];
        if (g < 0.0 || g > 1.0) throw ValidationError("complement_response: base gain outside [0,1]");
        r.gains[k] = std::sqrt(1.0 - g * g);
    }
    return r;
}

inline FilterResponse make_response(const FilterSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case FilterKind::hann_sqrt: return hann_sqrt_response(spec.n_bins, spec.cutoff);
        case FilterKind::hann_sqrt_complement:
            return complement_response(hann_sqrt_response(spec.n_bins, spec.cutoff));
        case FilterKind::identity: return identity_response(spec.n_bins);
    }
    throw ValidationError("make_response: bad kind");
}

/// Cyclic per-view filtering along the detector axis, R = F⁻¹ diag(gains) F.
/// With a real symmetric response the operator is real and self-adjoint.
class DetectorFilter {
public:
    explicit DetectorFilter(FilterResponse response)
        : response_(std::move(response)), fft_(response_.size()) {
        if (response_.size() == 0) throw ValidationError("DetectorFilter: empty response");
    }

    const FilterResponse& response() const { return response_; }

    /// `out` may alias `in`.
    void apply(const Sinogram& in, Sinogram& out) const {
        const std::size_t n = response_.size();
        if (in.n_bins != n) throw ValidationError("apply_filter: sinogram bins do not match filter length");
        if (!out.same_shape(in)) out = Sinogram::zeros(in.n_views, in.n_bins);
        const double scale = 1.0 / static_cast<double>(n);
        const auto n_views = static_cast<std::ptrdiff_t>(in.n_views);
#pragma omp parallel
        {
            std::vector<double> row(n);
            std::vector<std::complex<double>> spec(n / 2 + 1);
#pragma omp for schedule(static)
            for (std::ptrdiff_t v = 0; v < n_views; ++v) {
                auto src = in.view(static_cast<std::size_t>(v));
                std::copy(src.begin(), src.end(), row.begin());
                fft_.forward(row, spec);
                for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= response_.gains[k] * scale;
                fft_.inverse(spec, out.view(static_cast<std::size_t>(v)));
            }
        }
    }

    Sinogram apply(const Sinogram& in) const {
        Sinogram out = Sinogram::zeros(in.n_views, in.n_bins);
        apply(in, out);
        return out;
    }

private:
    FilterResponse response_;
    fft::RealFft1d fft_;
};

inline Sinogram apply_filter(const Sinogram& s, const FilterResponse& r) {
    if (s.n_bins != r.size()) throw ValidationError("apply_filter: sinogram bins do not match filter length");
    return DetectorFilter(r).apply(s);
}

/// max over |ν| <= passband_limit (cycles/bin) of |hi² + lo² - 1|.
inline double complementarity_deviation(const FilterResponse& hi, const FilterResponse& lo,
                                        double passband_limit) {
    if (hi.size() != lo.size()) throw ValidationError("complementarity_deviation: length mismatch");
    double worst = 0.0;
    for (std::size_t k = 0; k < hi.size(); ++k) {
        if (std::abs(bin_frequency(k, hi.size())) > passband_limit) continue;
        worst = std::max(worst, std::abs(hi.gains[k] * hi.gains[k] + lo.gains[k] * lo.gains[k] - 1.0));
    }
    return worst;
}

inline void write_response_csv(std::ostream& os, const FilterResponse& r) {
    os << "frequency_index,frequency_cycles_per_bin,gain\n";
    char buf[96];
    for (std::size_t k = 0; k < r.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k, bin_frequency(k, r.size()), r.gains[k]);
        os << buf;
    }
}

}  // namespace dbtrecon
