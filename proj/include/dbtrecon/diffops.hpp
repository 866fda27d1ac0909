#pragma once

#include "dbtrecon/types.hpp"

#include <cmath>
#include <string>

namespace dbtrecon {

enum class Boundary {
    neumann,   // forward difference, zero in the trailing row/column
    periodic,  // forward difference wrapping around
};

inline std::string to_string(Boundary b) { return b == Boundary::neumann ? "neumann" : "periodic"; }

inline Boundary boundary_from_string(const std::string& s) {
    if (s == "neumann") return Boundary::neumann;
    if (s == "periodic") return Boundary::periodic;
    throw ValidationError("unknown boundary rule '" + s + "'");
}

namespace detail {
inline void require_2x2(std::size_t rows, std::size_t cols) {
    if (rows < 2 || cols < 2) throw ValidationError("finite differences need at least a 2x2 grid");
}
}  // namespace detail

/// ∂x f: f[i, j+1] - f[i, j] along columns.
inline DiffField grad_x(const ImageGrid& f, Boundary bc = Boundary::neumann) {
    detail::require_2x2(f.n_rows, f.n_cols);
    DiffField d = DiffField::zeros_like(f);
    const std::size_t nc = f.n_cols;
    for (std::size_t i = 0; i < f.n_rows; ++i) {
        for (std::size_t j = 0; j + 1 < nc; ++j) d(i, j) = f(i, j + 1) - f(i, j);
        d(i, nc - 1) = bc == Boundary::periodic ? f(i, 0) - f(i, nc - 1) : 0.0;
    }
    return d;
}

/// ∂z f: f[i+1, j] - f[i, j] along rows.
inline DiffField grad_z(const ImageGrid& f, Boundary bc = Boundary::neumann) {
    detail::require_2x2(f.n_rows, f.n_cols);
    DiffField d = DiffField::zeros_like(f);
    const std::size_t nr = f.n_rows;
    for (std::size_t i = 0; i + 1 < nr; ++i)
        for (std::size_t j = 0; j < f.n_cols; ++j) d(i, j) = f(i + 1, j) - f(i, j);
    for (std::size_t j = 0; j < f.n_cols; ++j)
        d(nr - 1, j) = bc == Boundary::periodic ? f(0, j) - f(nr - 1, j) : 0.0;
    return d;
}

/// Transpose of grad_x; `like` supplies the image geometry of the result.
inline ImageGrid grad_adjoint_x(const DiffField& p, const ImageGrid& like, Boundary bc = Boundary::neumann) {
    if (p.n_rows != like.n_rows || p.n_cols != like.n_cols)
        throw ValidationError("grad_adjoint_x: shape mismatch");
    detail::require_2x2(p.n_rows, p.n_cols);
    ImageGrid out = ImageGrid::zeros_like(like);
    const std::size_t nc = p.n_cols;
    for (std::size_t i = 0; i < p.n_rows; ++i) {
        for (std::size_t j = 0; j + 1 < nc; ++j) {
            out(i, j) -= p(i, j);
            out(i, j + 1) += p(i, j);
        }
        if (bc == Boundary::periodic) {
            out(i, nc - 1) -= p(i, nc - 1);
            out(i, 0) += p(i, nc - 1);
        }
    }
    return out;
}

inline ImageGrid grad_adjoint_z(const DiffField& p, const ImageGrid& like, Boundary bc = Boundary::neumann) {
    if (p.n_rows != like.n_rows || p.n_cols != like.n_cols)
        throw ValidationError("grad_adjoint_z: shape mismatch");
    detail::require_2x2(p.n_rows, p.n_cols);
    ImageGrid out = ImageGrid::zeros_like(like);
    const std::size_t nr = p.n_rows;
    for (std::size_t i = 0; i + 1 < nr; ++i) {
        for (std::size_t j = 0; j < p.n_cols; ++j) {
            out(i, j) -= p(i, j);
            out(i + 1, j) += p(i, j);
        }
    }
    if (bc == Boundary::periodic) {
        for (std::size_t j = 0; j < p.n_cols; ++j) {
            out(nr - 1, j) -= p(nr - 1, j);
            out(0, j) += p(nr - 1, j);
        }
    }
    return out;
}

/// Regularizer αx‖∂x f‖₁ + αz‖∂z f‖₁ + β‖f‖₁ (2D, no y term).
inline double dtv_value(const ImageGrid& f, double alpha_x, double alpha_z, double beta,
                        Boundary bc = Boundary::neumann) {
    double tx = 0.0;
    double tz = 0.0;
    double l1 = 0.0;
    for (double v : grad_x(f, bc).values) tx += std::abs(v);
    for (double v : grad_z(f, bc).values) tz += std::abs(v);
    for (double v : f.values) l1 += std::abs(v);
    return alpha_x * tx + alpha_z * tz + beta * l1;
}

}  // namespace dbtrecon
