#pragma once

#include "dbtrecon/diffops.hpp"
#include "dbtrecon/filters.hpp"
#include "dbtrecon/geometry.hpp"
#include "dbtrecon/metrics.hpp"
#include "dbtrecon/phantom.hpp"
#include "dbtrecon/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dbtrecon {

enum class SolverMode { single, two_channel };
enum class RelaxationScope { primal_only, primal_and_dual };

/// How the fidelity dual is updated.
enum class FidelityProx {
    shrink,           // conjugate prox of the ℓ2-ball indicator (ℓ2 shrink)
    ball_projection,  // projection of the ascent point onto the radius-ε ball
};

inline std::string to_string(SolverMode m) { return m == SolverMode::single ? "single" : "two_channel"; }
inline std::string to_string(RelaxationScope s) {
    return s == RelaxationScope::primal_only ? "primal_only" : "primal_and_dual";
}
inline std::string to_string(FidelityProx p) { return p == FidelityProx::shrink ? "shrink" : "ball_projection"; }

inline SolverMode solver_mode_from_string(const std::string& s) {
    if (s == "single") return SolverMode::single;
    if (s == "two_channel") return SolverMode::two_channel;
    throw ValidationError("unknown solver mode '" + s + "'");
}
inline RelaxationScope relaxation_scope_from_string(const std::string& s) {
    if (s == "primal_only") return RelaxationScope::primal_only;
    if (s == "primal_and_dual") return RelaxationScope::primal_and_dual;
    throw ValidationError("unknown relaxation scope '" + s + "'");
}
inline FidelityProx fidelity_prox_from_string(const std::string& s) {
    if (s == "shrink") return FidelityProx::shrink;
    if (s == "ball_projection") return FidelityProx::ball_projection;
    throw ValidationError("unknown fidelity prox '" + s + "'");
}

struct SolverConfig {
    SolverMode mode = SolverMode::single;
    double alpha_x = 1.95;
    double alpha_z = 1.95;
    double beta = 10.0;
    // Per-sample tolerances; the ball radius is ε·sqrt(size(g)).
    double eps_hi = 1e-5;
    double eps_lo = 1.25e-5;
    double sigma_ratio = 4.0;  // σ_lo / σ_hi
    double rho = 1.75;
    std::size_t n_iter = 500;
    FilterSpec filter_hi{FilterKind::hann_sqrt, 4.0, 0};  // n_bins 0: taken from the data
    std::optional<FilterSpec> filter_lo;
    std::size_t power_iters = 100;
    std::uint64_t power_seed = 1;
    RelaxationScope relaxation_scope = RelaxationScope::primal_and_dual;
    FidelityProx fidelity_prox = FidelityProx::shrink;
    Boundary boundary = Boundary::neumann;
    double step_margin = 0.95;
    // Explicit steps bypass the power-iteration sizing but are still checked.
    std::optional<double> tau;
    std::optional<double> sigma;
    std::size_t checkpoint_every = 0;

    void validate() const {
        if (!(rho > 0.0 && rho < 2.0)) throw ValidationError("solver: rho must lie in (0, 2)");
        if (!(eps_hi >= 0.0) || !(eps_lo >= 0.0)) throw ValidationError("solver: tolerances must be >= 0");
        if (n_iter < 1) throw ValidationError("solver: n_iter must be >= 1");
        if (!(sigma_ratio > 0.0)) throw ValidationError("solver: sigma_ratio must be > 0");
        if (!(alpha_x >= 0.0) || !(alpha_z >= 0.0) || !(beta >= 0.0))
            throw ValidationError("solver: regularization weights must be >= 0");
        if (!(step_margin > 0.0 && step_margin < 1.0)) throw ValidationError("solver: step_margin must lie in (0, 1)");
        if (power_iters < 1) throw ValidationError("solver: power_iters must be >= 1");
        if (mode == SolverMode::two_channel && !filter_lo)
            throw ValidationError("solver: two_channel mode requires filter_lo");
        if (tau.has_value() != sigma.has_value())
            throw ValidationError("solver: tau and sigma must be given together");
    }
};

struct StepSizes {
    double tau = 0.0;
    double sigma_hi = 0.0;
    double sigma_lo = 0.0;
    double sigma_x = 0.0;
    double sigma_z = 0.0;
    double norm_hi = 0.0;  // ‖R_hi X‖
    double norm_lo = 0.0;  // ‖R_lo X‖ (two-channel only)
    double norm_x = 0.0;
    double norm_z = 0.0;

    /// τ(σ_hi‖R_hi X‖² + σ_lo‖R_lo X‖² + σ_x‖∂x‖² + σ_z‖∂z‖²); must stay below 1.
    double stability_product() const {
        return tau * (sigma_hi * norm_hi * norm_hi + sigma_lo * norm_lo * norm_lo + sigma_x * norm_x * norm_x +
                      sigma_z * norm_z * norm_z);
    }
};

/// Non-finite iterate; carries the telemetry of the offending iteration.
struct DivergenceError : SolverError {
    DivergenceError(const std::string& what, IterationRecord rec) : SolverError(what), record(rec) {}
    IterationRecord record;
};

/// Largest singular value of a linear map by power iteration on AᵀA.
///
/// `apply` maps domain_size -> range_size values, `adjoint` the reverse. The
/// pair is spot-checked for adjointness before iterating. The estimate ‖A x_k‖
/// (unit x_k) is nondecreasing in the iteration count.
template <class Apply, class Adjoint>
double estimate_operator_norm(Apply&& apply, Adjoint&& adjoint, std::size_t domain_size, std::size_t range_size,
                              std::size_t iters, std::uint64_t seed) {
    if (domain_size == 0 || range_size == 0) throw ValidationError("estimate_operator_norm: empty operator");
    PortableRng rng(seed);
    std::vector<double> x(domain_size);
    std::vector<double> y(range_size);
    std::vector<double> z(domain_size);

    {
        std::vector<double> v(range_size);
        for (auto& e : x) e = rng.normal();
        for (auto& e : v) e = rng.normal();
        apply(std::span<const double>(x), std::span<double>(y));
        adjoint(std::span<const double>(v), std::span<double>(z));
        const double lhs = vec::dot(y, v);
        const double rhs = vec::dot(x, z);
        const double scale = vec::norm2(y) * vec::norm2(v) + vec::norm2(x) * vec::norm2(z);
        if (scale > 0.0 && std::abs(lhs - rhs) > 1e-8 * scale)
            throw ValidationError("estimate_operator_norm: apply/adjoint are not an adjoint pair");
    }

    for (auto& e : x) e = rng.normal();
    double nx = vec::norm2(x);
    for (auto& e : x) e /= nx;
    double estimate = 0.0;
    for (std::size_t k = 0; k < iters; ++k) {
        apply(std::span<const double>(x), std::span<double>(y));
        estimate = std::max(estimate, vec::norm2(y));
        adjoint(std::span<const double>(y), std::span<double>(z));
        nx = vec::norm2(z);
        if (!std::isfinite(nx)) throw SolverError("estimate_operator_norm: non-finite iterate");
        if (nx == 0.0) return estimate;
        for (std::size_t i = 0; i < domain_size; ++i) x[i] = z[i] / nx;
    }
    apply(std::span<const double>(x), std::span<double>(y));
    return std::max(estimate, vec::norm2(y));
}

/// u = y + σ·r; shrink: u·max(0, 1 - σρ/‖u‖), ball_projection: u·min(1, ρ/‖u‖).
/// `residual_filtered` is R(X f̄ - g). Updates y in place.
inline void dual_update_fidelity(std::span<double> y, std::span<const double> residual_filtered, double sigma,
                                 double eps_radius, FidelityProx mode = FidelityProx::shrink) {
    if (y.size() != residual_filtered.size()) throw ValidationError("dual_update_fidelity: shape mismatch");
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += sigma * residual_filtered[k];
    const double nu = vec::norm2(y);
    double factor = 1.0;
    if (mode == FidelityProx::shrink)
        factor = nu > 0.0 ? std::max(0.0, 1.0 - sigma * eps_radius / nu) : 0.0;
    else
        factor = nu > eps_radius ? eps_radius / nu : 1.0;
    for (auto& v : y) v *= factor;
}

inline Sinogram dual_update_fidelity(const Sinogram& y, const Sinogram& residual_filtered, double sigma,
                                     double eps_radius, FidelityProx mode = FidelityProx::shrink) {
    if (!y.same_shape(residual_filtered)) throw ValidationError("dual_update_fidelity: shape mismatch");
    Sinogram out = y;
    dual_update_fidelity(std::span<double>(out.values), residual_filtered.values, sigma, eps_radius, mode);
    return out;
}

/// clamp(p + σ·∂f̄, -α, α) in place: conjugate prox of α‖·‖₁.
inline void dual_update_l1(std::span<double> p, std::span<const double> grad_fbar, double sigma, double alpha) {
    if (p.size() != grad_fbar.size()) throw ValidationError("dual_update_l1: shape mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::clamp(p[k] + sigma * grad_fbar[k], -alpha, alpha);
}

inline DiffField dual_update_l1(const DiffField& p, const DiffField& grad_fbar, double sigma, double alpha) {
    if (p.n_rows != grad_fbar.n_rows || p.n_cols != grad_fbar.n_cols)
        throw ValidationError("dual_update_l1: shape mismatch");
    DiffField out = p;
    dual_update_l1(std::span<double>(out.values), grad_fbar.values, sigma, alpha);
    return out;
}

/// max(0, f - τ·ascent - τβ): prox of τβ‖·‖₁ plus the nonnegativity indicator.
inline void primal_update(std::span<double> f, std::span<const double> ascent_sum, double tau, double beta) {
    if (f.size() != ascent_sum.size()) throw ValidationError("primal_update: shape mismatch");
    const double shift = tau * beta;
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::max(0.0, f[k] - tau * ascent_sum[k] - shift);
}

inline ImageGrid primal_update(const ImageGrid& f, const ImageGrid& ascent_sum, double tau, double beta) {
    if (!f.same_shape(ascent_sum)) throw ValidationError("primal_update: shape mismatch");
    ImageGrid out = f;
    primal_update(std::span<double>(out.values), ascent_sum.values, tau, beta);
    return out;
}

struct SolverState {
    ImageGrid f;
    ImageGrid f_bar;
    Sinogram y_hi;
    Sinogram y_lo;  // empty in single-channel mode
    DiffField p_x;
    DiffField p_z;
    StepSizes steps;
    std::size_t iteration = 0;
};

/// primal_only: f̄ = f_new + ρ(f_new - f_prev), everything else from `next`.
/// primal_and_dual: every primal and dual block becomes x + ρ(x̃ - x) with x
/// from `prev` and x̃ from `next` (the predictor); f̄ is then the standard
/// extrapolation 2f - f_prev of the relaxed primal.
inline SolverState relax(const SolverState& prev, const SolverState& next, double rho, RelaxationScope scope) {
    if (!(rho > 0.0 && rho < 2.0)) throw ValidationError("relax: rho must lie in (0, 2)");
    if (!prev.f.same_shape(next.f)) throw ValidationError("relax: shape mismatch");
    auto blend = [rho](std::vector<double>& out, const std::vector<double>& a, const std::vector<double>& b) {
        out.resize(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + rho * (b[k] - a[k]);
    };
    SolverState out = next;
    if (scope == RelaxationScope::primal_only) {
        for (std::size_t k = 0; k < out.f.values.size(); ++k)
            out.f_bar.values[k] = next.f.values[k] + rho * (next.f.values[k] - prev.f.values[k]);
        return out;
    }
    blend(out.f.values, prev.f.values, next.f.values);
    blend(out.y_hi.values, prev.y_hi.values, next.y_hi.values);
    blend(out.y_lo.values, prev.y_lo.values, next.y_lo.values);
    blend(out.p_x.values, prev.p_x.values, next.p_x.values);
    blend(out.p_z.values, prev.p_z.values, next.p_z.values);
    for (std::size_t k = 0; k < out.f.values.size(); ++k)
        out.f_bar.values[k] = 2.0 * out.f.values[k] - prev.f.values[k];
    return out;
}

/// Resolved filters for a configuration, sized to the data.
struct ChannelFilters {
    DetectorFilter hi;
    std::optional<DetectorFilter> lo;
};

inline ChannelFilters make_channel_filters(const SolverConfig& cfg, std::size_t n_bins) {
    FilterSpec hi = cfg.filter_hi;
    if (hi.n_bins == 0) hi.n_bins = n_bins;
    if (hi.n_bins != n_bins) throw ValidationError("solver: filter_hi length does not match detector bins");
    ChannelFilters out{DetectorFilter(make_response(hi)), std::nullopt};
    if (cfg.mode == SolverMode::two_channel) {
        FilterSpec lo = *cfg.filter_lo;
        if (lo.n_bins == 0) lo.n_bins = n_bins;
        if (lo.n_bins != n_bins) throw ValidationError("solver: filter_lo length does not match detector bins");
        out.lo.emplace(make_response(lo));
    }
    return out;
}

/// Block norms by power iteration, then σ_hi = σ_x = σ_z = s, σ_lo = ratio·s,
/// τ = s with s chosen so the stability product equals step_margin.
inline StepSizes compute_step_sizes(const SystemMatrix& A, const ChannelFilters& filters, const SolverConfig& cfg) {
    cfg.validate();
    const auto& sh = A.shape();
    const std::size_t n_pix = A.n_pixels();
    const std::size_t n_ray = A.n_rays();
    const ImageGrid like = ImageGrid::zeros(sh.n_rows, sh.n_cols, sh.pixel_size);

    auto filtered_norm = [&](const DetectorFilter& R, std::uint64_t seed) {
        Sinogram tmp = Sinogram::zeros(sh.n_views, sh.n_bins);
        auto fwd = [&](std::span<const double> x, std::span<double> y) {
            A.forward(x, tmp.values);
            R.apply(tmp, tmp);
            std::copy(tmp.values.begin(), tmp.values.end(), y.begin());
        };
        auto adj = [&](std::span<const double> y, std::span<double> x) {
            std::copy(y.begin(), y.end(), tmp.values.begin());
            R.apply(tmp, tmp);
            A.adjoint(tmp.values, x);
        };
        return estimate_operator_norm(fwd, adj, n_pix, n_ray, cfg.power_iters, seed);
    };
    auto diff_norm = [&](bool along_x, std::uint64_t seed) {
        auto fwd = [&](std::span<const double> x, std::span<double> y) {
            ImageGrid img = like;
            std::copy(x.begin(), x.end(), img.values.begin());
            const DiffField d = along_x ? grad_x(img, cfg.boundary) : grad_z(img, cfg.boundary);
            std::copy(d.values.begin(), d.values.end(), y.begin());
        };
        auto adj = [&](std::span<const double> y, std::span<double> x) {
            DiffField p = DiffField::zeros_like(like);
            std::copy(y.begin(), y.end(), p.values.begin());
            const ImageGrid img = along_x ? grad_adjoint_x(p, like, cfg.boundary) : grad_adjoint_z(p, like, cfg.boundary);
            std::copy(img.values.begin(), img.values.end(), x.begin());
        };
        return estimate_operator_norm(fwd, adj, n_pix, n_pix, cfg.power_iters, seed);
    };

    StepSizes st;
    st.norm_hi = filtered_norm(filters.hi, cfg.power_seed);
    if (filters.lo) st.norm_lo = filtered_norm(*filters.lo, cfg.power_seed + 1);
    st.norm_x = diff_norm(true, cfg.power_seed + 2);
    st.norm_z = diff_norm(false, cfg.power_seed + 3);

    const double ratio = filters.lo ? cfg.sigma_ratio : 0.0;
    if (cfg.tau) {
        st.tau = *cfg.tau;
        st.sigma_hi = st.sigma_x = st.sigma_z = *cfg.sigma;
        st.sigma_lo = ratio * *cfg.sigma;
        if (!(st.tau > 0.0) || !(*cfg.sigma > 0.0)) throw ValidationError("solver: explicit steps must be > 0");
        if (!(st.stability_product() < 1.0))
            throw ValidationError("solver: step sizes violate the stability condition (product " +
                                  std::to_string(st.stability_product()) + " >= 1)");
        return st;
    }
    const double q = st.norm_hi * st.norm_hi + ratio * st.norm_lo * st.norm_lo + st.norm_x * st.norm_x +
                     st.norm_z * st.norm_z;
    const double s = std::sqrt(cfg.step_margin / q);
    st.tau = s;
    st.sigma_hi = st.sigma_x = st.sigma_z = s;
    st.sigma_lo = ratio * s;
    return st;
}

struct RunObserver {
    std::function<void(const IterationRecord&)> on_iteration;
    std::function<void(std::size_t, const ImageGrid&)> on_checkpoint;
};

struct RunResult {
    ImageGrid image;
    std::vector<IterationRecord> history;
    StepSizes steps;
};

/// Constrained PDHG for
///   min_{f>=0} αx‖∂x f‖₁ + αz‖∂z f‖₁ + β‖f‖₁
///   s.t. ‖R_c (X f - g)‖₂ <= ε_c·sqrt(size(g)) for each channel c.
/// One dual block per fidelity channel and per difference direction; the
/// β term and nonnegativity are handled by the primal prox. Starts from
/// f = 0 with all duals zero.
inline RunResult run(const SystemMatrix& A, const Sinogram& g, const SolverConfig& cfg,
                     const ImageGrid* truth = nullptr, const RunObserver& observer = {}) {
    cfg.validate();
    const auto& sh = A.shape();
    if (g.n_views != sh.n_views || g.n_bins != sh.n_bins || g.values.size() != g.size())
        throw ValidationError("solver: sinogram shape does not match system matrix");
    if (!vec::all_finite(g.values)) throw ValidationError("solver: sinogram contains non-finite values");
    if (truth && (truth->n_rows != sh.n_rows || truth->n_cols != sh.n_cols))
        throw ValidationError("solver: reference image shape does not match system matrix");

    const bool two = cfg.mode == SolverMode::two_channel;
    const ChannelFilters filters = make_channel_filters(cfg, sh.n_bins);
    const StepSizes st = compute_step_sizes(A, filters, cfg);
    const double root_size = std::sqrt(static_cast<double>(g.size()));
    const double radius_hi = cfg.eps_hi * root_size;
    const double radius_lo = cfg.eps_lo * root_size;
    const Boundary bc = cfg.boundary;

    const ImageGrid zero_img = ImageGrid::zeros(sh.n_rows, sh.n_cols, sh.pixel_size);
    const Sinogram zero_sino = Sinogram::zeros(sh.n_views, sh.n_bins);

    ImageGrid f = zero_img;       // current primal iterate
    ImageGrid f_prev = zero_img;
    ImageGrid f_bar = zero_img;   // point at which the duals are evaluated
    Sinogram xf = zero_sino;      // X f
    Sinogram xf_bar = zero_sino;  // X f̄
    Sinogram y_hi = zero_sino;
    Sinogram y_lo = two ? zero_sino : Sinogram{};
    DiffField p_x = DiffField::zeros_like(zero_img);
    DiffField p_z = DiffField::zeros_like(zero_img);

    Sinogram resid = zero_sino;
    Sinogram filt = zero_sino;
    Sinogram back_sum = zero_sino;
    ImageGrid ascent = zero_img;

    RunResult result;
    result.steps = st;
    result.history.reserve(cfg.n_iter);

    // Dual ascent at the point whose projection is `x_at` / image `at`.
    auto dual_step = [&](const Sinogram& x_at, const ImageGrid& at) {
        for (std::size_t k = 0; k < resid.values.size(); ++k) resid.values[k] = x_at.values[k] - g.values[k];
        filters.hi.apply(resid, filt);
        dual_update_fidelity(std::span<double>(y_hi.values), filt.values, st.sigma_hi, radius_hi, cfg.fidelity_prox);
        if (two) {
            filters.lo->apply(resid, filt);
            dual_update_fidelity(std::span<double>(y_lo.values), filt.values, st.sigma_lo, radius_lo,
                                 cfg.fidelity_prox);
        }
        dual_update_l1(std::span<double>(p_x.values), grad_x(at, bc).values, st.sigma_x, cfg.alpha_x);
        dual_update_l1(std::span<double>(p_z.values), grad_z(at, bc).values, st.sigma_z, cfg.alpha_z);
    };

    // Xᵀ(R_hiᵀ y_hi + R_loᵀ y_lo) + ∂xᵀ p_x + ∂zᵀ p_z
    auto ascent_of = [&](const Sinogram& yh, const Sinogram& yl, const DiffField& px, const DiffField& pz) {
        filters.hi.apply(yh, back_sum);
        if (two) {
            filters.lo->apply(yl, filt);
            for (std::size_t k = 0; k < back_sum.values.size(); ++k) back_sum.values[k] += filt.values[k];
        }
        A.adjoint(back_sum.values, ascent.values);
        const ImageGrid ax = grad_adjoint_x(px, zero_img, bc);
        const ImageGrid az = grad_adjoint_z(pz, zero_img, bc);
        for (std::size_t k = 0; k < ascent.values.size(); ++k) ascent.values[k] += ax.values[k] + az.values[k];
    };

    auto record_for = [&](std::size_t iter) {
        IterationRecord rec;
        rec.iteration = iter;
        if (truth) rec.image_rmse = image_rmse(f, *truth);
        for (std::size_t k = 0; k < resid.values.size(); ++k) resid.values[k] = xf.values[k] - g.values[k];
        filters.hi.apply(resid, filt);
        rec.residual_hi_norm = vec::norm2(filt.values);
        rec.slack_hi = radius_hi - rec.residual_hi_norm;
        if (two) {
            filters.lo->apply(resid, filt);
            rec.residual_lo_norm = vec::norm2(filt.values);
            rec.slack_lo = radius_lo - rec.residual_lo_norm;
        }
        rec.peak_abs_value = vec::norm_inf(f.values);
        rec.objective_value = vec::all_finite(f.values)
                                  ? dtv_value(f, cfg.alpha_x, cfg.alpha_z, cfg.beta, bc)
                                  : std::numeric_limits<double>::quiet_NaN();
        return rec;
    };

    for (std::size_t it = 1; it <= cfg.n_iter; ++it) {
        f_prev.values = f.values;
        if (cfg.relaxation_scope == RelaxationScope::primal_only) {
            dual_step(xf_bar, f_bar);
            ascent_of(y_hi, y_lo, p_x, p_z);
            primal_update(std::span<double>(f.values), ascent.values, st.tau, cfg.beta);
            const Sinogram xf_prev = xf;
            A.forward(f.values, xf.values);
            for (std::size_t k = 0; k < f.values.size(); ++k)
                f_bar.values[k] = f.values[k] + cfg.rho * (f.values[k] - f_prev.values[k]);
            for (std::size_t k = 0; k < xf.values.size(); ++k)
                xf_bar.values[k] = xf.values[k] + cfg.rho * (xf.values[k] - xf_prev.values[k]);
        } else {
            // Predictor: primal step from (f, y), dual step at 2f̃ - f; then
            // relax both sequences toward the predictor.
            SolverState prev{f, f_bar, y_hi, y_lo, p_x, p_z, st, it - 1};
            ascent_of(y_hi, y_lo, p_x, p_z);
            ImageGrid f_tilde = f;
            primal_update(std::span<double>(f_tilde.values), ascent.values, st.tau, cfg.beta);
            Sinogram xf_tilde = zero_sino;
            A.forward(f_tilde.values, xf_tilde.values);
            for (std::size_t k = 0; k < f.values.size(); ++k) f_bar.values[k] = 2.0 * f_tilde.values[k] - f.values[k];
            for (std::size_t k = 0; k < xf.values.size(); ++k)
                xf_bar.values[k] = 2.0 * xf_tilde.values[k] - xf.values[k];
            dual_step(xf_bar, f_bar);
            SolverState next{f_tilde, f_bar, y_hi, y_lo, p_x, p_z, st, it};
            SolverState relaxed = relax(prev, next, cfg.rho, RelaxationScope::primal_and_dual);
            f = std::move(relaxed.f);
            f_bar = std::move(relaxed.f_bar);
            y_hi = std::move(relaxed.y_hi);
            y_lo = std::move(relaxed.y_lo);
            p_x = std::move(relaxed.p_x);
            p_z = std::move(relaxed.p_z);
            for (std::size_t k = 0; k < xf.values.size(); ++k)
                xf.values[k] = xf.values[k] + cfg.rho * (xf_tilde.values[k] - xf.values[k]);
        }

        IterationRecord rec = record_for(it);
        if (!vec::all_finite(f.values))
            throw DivergenceError("solver: non-finite iterate at iteration " + std::to_string(it), rec);
        result.history.push_back(rec);
        if (observer.on_iteration) observer.on_iteration(rec);
        if (observer.on_checkpoint && cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0)
            observer.on_checkpoint(it, f);
    }
    result.image = std::move(f);
    return result;
}

}  // namespace dbtrecon
