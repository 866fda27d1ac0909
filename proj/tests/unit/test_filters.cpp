#include "dbtrecon/filters.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

using namespace dbtrecon;

namespace {

Sinogram random_sinogram(std::size_t views, std::size_t bins, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Sinogram s = Sinogram::zeros(views, bins);
    for (auto& v : s.values) v = n(rng);
    return s;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

// Textbook O(n²) DFT, multiply, inverse DFT of one row.
std::vector<double> dft_filter(const std::vector<double>& x, const std::vector<double>& gains) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> X(n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            X[k] += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) X[k] *= gains[k];
    std::vector<double> y(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::complex<double> acc = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            acc += X[k] * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(n));
        y[j] = acc.real() / static_cast<double>(n);
    }
    return y;
}

}  // namespace

TEST(HannSqrt, GainIsOneAtZeroAndZeroAtCutoff) {
    for (double c : {1.0, 2.0, 4.0, 8.0}) {
        EXPECT_EQ(hann_sqrt_gain(0.0, c), 1.0);
        EXPECT_EQ(hann_sqrt_gain(0.5 / c, c), 0.0);
        EXPECT_NEAR(hann_sqrt_gain(0.25 / c, c), std::sqrt(0.5), 1e-15);
        EXPECT_EQ(hann_sqrt_gain(0.6 / c, c), 0.0);
    }
    const auto r = hann_sqrt_response(64, 4.0);
    EXPECT_EQ(r.gains[0], 1.0);
    EXPECT_EQ(r.gains[8], 0.0);  // bin 8 of 64 sits exactly on ν_Nyquist/4
    EXPECT_NEAR(r.gains[4], std::sqrt(0.5), 1e-15);
}

TEST(HannSqrt, GainsBoundedAndSymmetric) {
    for (std::size_t n : {15u, 64u, 1024u}) {
        const auto r = hann_sqrt_response(n, 4.0);
        for (std::size_t k = 0; k < n; ++k) {
            EXPECT_GE(r.gains[k], 0.0);
            EXPECT_LE(r.gains[k], 1.0);
            if (k > 0) {
                EXPECT_EQ(r.gains[k], r.gains[n - k]);
            }
        }
    }
}

TEST(HannSqrt, NarrowerCutoffNests) {
    const auto wide = hann_sqrt_response(1024, 4.0);
    const auto narrow = hann_sqrt_response(1024, 8.0);
    for (std::size_t k = 0; k < 1024; ++k) EXPECT_LE(narrow.gains[k], wide.gains[k]);
}

TEST(HannSqrt, InvalidCutoffIsRejected) {
    EXPECT_THROW(hann_sqrt_response(64, 0.0), ValidationError);
    EXPECT_THROW(make_response(FilterSpec{FilterKind::hann_sqrt, -1.0, 64}), ValidationError);
    EXPECT_THROW(make_response(FilterSpec{FilterKind::hann_sqrt, 4.0, 0}), ValidationError);
    EXPECT_THROW(filter_kind_from_string("ramp"), ValidationError);
}

TEST(Complement, ExamplesAndExactComplementarity) {
    const FilterResponse base{{1.0, 0.0, std::sqrt(0.5)}};
    const auto c = complement_response(base);
    EXPECT_EQ(c.gains[0], 0.0);
    EXPECT_EQ(c.gains[1], 1.0);
    EXPECT_NEAR(c.gains[2], std::sqrt(0.5), 1e-15);

    const auto hi = hann_sqrt_response(1024, 4.0);
    const auto lo = make_response(FilterSpec{FilterKind::hann_sqrt_complement, 4.0, 1024});
    EXPECT_LT(complementarity_deviation(hi, lo, 0.5), 1e-12);
    EXPECT_THROW(complement_response(FilterResponse{{1.5}}), ValidationError);
}

TEST(ApplyFilter, IdentityAndZero) {
    const Sinogram s = random_sinogram(4, 50, 1);
    const Sinogram out = apply_filter(s, identity_response(50));
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(out.values[k], s.values[k], 1e-12 * std::abs(s.values[k]) + 1e-15);
    const Sinogram z = apply_filter(Sinogram::zeros(3, 50), hann_sqrt_response(50, 4.0));
    for (double v : z.values) EXPECT_EQ(v, 0.0);
}

TEST(ApplyFilter, CenterDeltaMatchesDirectDft) {
    const std::size_t n = 64;
    Sinogram s = Sinogram::zeros(1, n);
    s.values[n / 2] = 1.0;
    const auto r = hann_sqrt_response(n, 4.0);
    const Sinogram out = apply_filter(s, r);
    const auto oracle = dft_filter(s.values, r.gains);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(out.values[k], oracle[k], 1e-10);
}

TEST(ApplyFilter, RandomRowsMatchDirectDftForOddLength) {
    const std::size_t n = 45;
    const Sinogram s = random_sinogram(3, n, 4);
    const auto r = hann_sqrt_response(n, 2.5);
    const Sinogram out = apply_filter(s, r);
    for (std::size_t v = 0; v < 3; ++v) {
        std::vector<double> row(s.view(v).begin(), s.view(v).end());
        const auto oracle = dft_filter(row, r.gains);
        for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(out.values[v * n + k], oracle[k], 1e-10);
    }
}

TEST(ApplyFilter, SelfAdjoint) {
    for (std::size_t n : {128u, 1024u}) {
        const auto r = hann_sqrt_response(n, 4.0);
        for (std::uint64_t t = 0; t < 10; ++t) {
            const Sinogram a = random_sinogram(25, n, 10 + t);
            const Sinogram b = random_sinogram(25, n, 50 + t);
            const double lhs = dot(apply_filter(a, r).values, b.values);
            const double rhs = dot(a.values, apply_filter(b, r).values);
            EXPECT_LT(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs)));
        }
    }
}

TEST(ApplyFilter, TwiceEqualsSquaredResponse) {
    const auto r = hann_sqrt_response(128, 4.0);
    FilterResponse r2 = r;
    for (auto& g : r2.gains) g *= g;
    const Sinogram s = random_sinogram(5, 128, 7);
    const Sinogram twice = apply_filter(apply_filter(s, r), r);
    const Sinogram once = apply_filter(s, r2);
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(twice.values[k], once.values[k], 1e-10);
}

TEST(ApplyFilter, InPlaceMatchesOutOfPlace) {
    const DetectorFilter R(hann_sqrt_response(96, 4.0));
    Sinogram s = random_sinogram(6, 96, 11);
    const Sinogram expected = R.apply(s);
    R.apply(s, s);
    EXPECT_EQ(s.values, expected.values);
}

TEST(ApplyFilter, ShapeMismatchIsRejected) {
    EXPECT_THROW(apply_filter(Sinogram::zeros(2, 32), hann_sqrt_response(64, 4.0)), ValidationError);
}

TEST(FilterCsv, HasHeaderAndOneRowPerBin) {
    std::ostringstream os;
    write_response_csv(os, hann_sqrt_response(8, 4.0));
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "frequency_index,frequency_cycles_per_bin,gain");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 8u);
}
