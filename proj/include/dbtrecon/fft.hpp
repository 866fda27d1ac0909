#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace dbtrecon::fft {

// FFTW planning is not thread-safe; execution with the new-array interface is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan p) const {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

/// Real 1D transform pair of fixed length, planned once and reusable on any
/// (unaligned) buffers.
class RealFft1d {
public:
    explicit RealFft1d(std::size_t n) : n_(n) {
        std::vector<double> re(n);
        std::vector<std::complex<double>> spec(n / 2 + 1);
        std::lock_guard lock(planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), re.data(),
                                        reinterpret_cast<fftw_complex*>(spec.data()), flags));
        inv_.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(spec.data()),
                                        re.data(), flags));
    }

    std::size_t size() const { return n_; }

    /// spectrum.size() == n/2 + 1
    void forward(std::span<const double> in, std::span<std::complex<double>> spectrum) const {
        fftw_execute_dft_r2c(fwd_.get(), const_cast<double*>(in.data()),
                             reinterpret_cast<fftw_complex*>(spectrum.data()));
    }

    /// Unnormalized inverse; destroys `spectrum`.
    void inverse(std::span<std::complex<double>> spectrum, std::span<double> out) const {
        fftw_execute_dft_c2r(inv_.get(), reinterpret_cast<fftw_complex*>(spectrum.data()), out.data());
    }

private:
    std::size_t n_;
    Plan fwd_;
    Plan inv_;
};

/// In-place complex 2D transform on a row-major n_rows × n_cols array.
inline void transform_2d(std::vector<std::complex<double>>& data, std::size_t n_rows, std::size_t n_cols,
                         bool inverse) {
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    Plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan.reset(fftw_plan_dft_2d(static_cast<int>(n_rows), static_cast<int>(n_cols), ptr, ptr,
                                    inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE));
    }
    fftw_execute(plan.get());
}

}  // namespace dbtrecon::fft
