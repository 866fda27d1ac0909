#include "dbtrecon/geometry.hpp"
#include "dbtrecon/phantom.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace dbtrecon;

namespace {

ScanGeometry small_geometry(std::size_t views, std::size_t bins) {
    ScanGeometry g;
    g.n_views = views;
    g.n_detector_bins = bins;
    return g;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& e : v) e = u(rng);
    return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

// Per-pixel length by sampling the part of the ray inside the square at
// `samples` midpoints.
std::vector<double> sampled_row(const RaySegment& ray, const ImageGrid& grid, std::size_t samples) {
    const double half = 0.5 * static_cast<double>(grid.n_cols) * grid.pixel_size;
    const double dx = ray.target.x - ray.source.x;
    const double dz = ray.target.z - ray.source.z;
    double t0 = 0.0, t1 = 1.0;
    auto clip = [&](double p, double d) {
        if (d == 0.0) {
            if (p < -half || p > half) t1 = -1.0;
            return;
        }
        double a = (-half - p) / d, b = (half - p) / d;
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
    };
    clip(ray.source.x, dx);
    clip(ray.source.z, dz);
    std::vector<double> row(grid.size(), 0.0);
    if (t1 <= t0) return row;
    const double length = std::hypot(dx, dz) * (t1 - t0);
    const double ds = length / static_cast<double>(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        const double t = t0 + (t1 - t0) * (static_cast<double>(s) + 0.5) / static_cast<double>(samples);
        const double x = ray.source.x + t * dx;
        const double z = ray.source.z + t * dz;
        const auto col = static_cast<long>(std::floor((x + half) / grid.pixel_size));
        const auto r = static_cast<long>(std::floor((half - z) / grid.pixel_size));
        if (col < 0 || r < 0 || col >= static_cast<long>(grid.n_cols) || r >= static_cast<long>(grid.n_rows)) continue;
        row[static_cast<std::size_t>(r) * grid.n_cols + static_cast<std::size_t>(col)] += ds;
    }
    return row;
}

}  // namespace

TEST(ViewAngles, PaperArcIsSymmetricWithEqualSpacing) {
    const auto a = view_angles(ScanGeometry{});
    ASSERT_EQ(a.size(), 25u);
    EXPECT_DOUBLE_EQ(a.front(), -25.0);
    EXPECT_DOUBLE_EQ(a.back(), 25.0);
    EXPECT_NEAR(a[12], 0.0, 1e-12);
    for (std::size_t k = 1; k < a.size(); ++k) EXPECT_NEAR(a[k] - a[k - 1], 50.0 / 24.0, 1e-12);
}

TEST(ViewAngles, SingleViewIsCentral) {
    ScanGeometry g;
    g.n_views = 1;
    EXPECT_EQ(view_angles(g), std::vector<double>{0.0});
}

TEST(ViewAngles, ThreeViewsOverNinetyDegrees) {
    ScanGeometry g;
    g.n_views = 3;
    g.arc_span = 90.0;
    const auto a = view_angles(g);
    ASSERT_EQ(a.size(), 3u);
    EXPECT_DOUBLE_EQ(a[0], -45.0);
    EXPECT_NEAR(a[1], 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(a[2], 45.0);
}

TEST(ScanGeometryTest, DefaultDetectorSpansMagnifiedCircumcircle) {
    EXPECT_NEAR(ScanGeometry{}.detector_length, 10.0 * std::numbers::sqrt2 * 2.0, 1e-12);
    EXPECT_EQ(ScanGeometry{}.n_rays(), 25600u);
}

TEST(ScanGeometryTest, DegenerateGeometryIsRejected) {
    ScanGeometry g;
    g.n_detector_bins = 0;
    EXPECT_THROW(g.validate(), ValidationError);
    g = ScanGeometry{};
    g.source_to_detector = 40.0;
    EXPECT_THROW(g.validate(), ValidationError);
    g = ScanGeometry{};
    g.arc_span = 0.0;
    EXPECT_THROW(g.validate(), ValidationError);
    EXPECT_THROW(make_grid(ScanGeometry{}, 0), ValidationError);
    ImageGrid grid = ImageGrid::zeros(4, 4, 0.0);
    EXPECT_THROW(build_system_matrix(ScanGeometry{}, grid), ValidationError);
}

TEST(SystemMatrixTest, CentralRayThroughUniformSquareHasLengthTen) {
    ScanGeometry g = small_geometry(1, 1025);  // odd: bin 512 is centered on the axis
    const ImageGrid f = [&] {
        ImageGrid img = make_grid(g, 16);
        std::fill(img.values.begin(), img.values.end(), 1.0);
        return img;
    }();
    const SystemMatrix A = build_system_matrix(g, f);
    const Sinogram s = forward_project(A, f);
    EXPECT_NEAR(s.values[512], 10.0, 1e-9);
    EXPECT_NEAR(A.ray_length(512), 10.0, 1e-9);
}

TEST(SystemMatrixTest, MatchesDenseSamplingOracle) {
    const ScanGeometry g = small_geometry(3, 16);
    const ImageGrid grid = make_grid(g, 8);
    const SystemMatrix A = build_system_matrix(g, grid);
    const auto angles = view_angles(g);
    double worst = 0.0;
    for (std::size_t v = 0; v < g.n_views; ++v) {
        for (std::size_t b = 0; b < g.n_detector_bins; ++b) {
            const std::size_t r = v * g.n_detector_bins + b;
            const auto oracle = sampled_row(ray_for(g, angles[v], b), grid, 100000);
            std::vector<double> row(grid.size(), 0.0);
            for (auto [p, len] : A.row(r)) row[p] = len;
            for (std::size_t p = 0; p < row.size(); ++p) worst = std::max(worst, std::abs(row[p] - oracle[p]));
        }
    }
    EXPECT_LT(worst, 1e-3);
}

TEST(SystemMatrixTest, RotatingDetectorAlsoMatchesSamplingOracle) {
    ScanGeometry g = small_geometry(3, 16);
    g.detector_motion = DetectorMotion::rotating;
    const ImageGrid grid = make_grid(g, 8);
    const SystemMatrix A = build_system_matrix(g, grid);
    const auto angles = view_angles(g);
    double worst = 0.0;
    for (std::size_t v = 0; v < g.n_views; ++v)
        for (std::size_t b = 0; b < g.n_detector_bins; ++b) {
            const auto oracle = sampled_row(ray_for(g, angles[v], b), grid, 100000);
            std::vector<double> row(grid.size(), 0.0);
            for (auto [p, len] : A.row(v * g.n_detector_bins + b)) row[p] = len;
            for (std::size_t p = 0; p < row.size(); ++p) worst = std::max(worst, std::abs(row[p] - oracle[p]));
        }
    EXPECT_LT(worst, 1e-3);
}

TEST(SystemMatrixTest, GridOutsideAllRaysGivesEmptyMatrix) {
    const ScanGeometry g = small_geometry(5, 32);
    ImageGrid grid = make_grid(g, 8);
    grid.origin_x = 1000.0;
    const SystemMatrix A = build_system_matrix(g, grid);
    EXPECT_EQ(A.nnz(), 0u);
}

TEST(SystemMatrixTest, EntriesNonnegativeAndRayLengthsBounded) {
    for (auto motion : {DetectorMotion::stationary, DetectorMotion::rotating}) {
        ScanGeometry g;
        g.detector_motion = motion;
        const SystemMatrix A = build_system_matrix(g, make_grid(g, 64));
        for (std::size_t r = 0; r < A.n_rays(); ++r) {
            for (auto [p, len] : A.row(r)) ASSERT_GE(len, 0.0);
            ASSERT_LE(A.ray_length(r), g.fov_side * std::numbers::sqrt2 + 1e-9);
        }
    }
}

TEST(SystemMatrixTest, ForwardOfZeroAndOfPixelIndicator) {
    const ScanGeometry g = small_geometry(5, 64);
    const ImageGrid grid = make_grid(g, 16);
    const SystemMatrix A = build_system_matrix(g, grid);
    const Sinogram zero = forward_project(A, grid);
    EXPECT_TRUE(std::all_of(zero.values.begin(), zero.values.end(), [](double v) { return v == 0.0; }));

    ImageGrid e = grid;
    const std::size_t pixel = 7 * 16 + 9;
    e.values[pixel] = 1.0;
    const Sinogram col = forward_project(A, e);
    for (std::size_t r = 0; r < A.n_rays(); ++r) {
        double expected = 0.0;
        for (auto [p, len] : A.row(r))
            if (p == pixel) expected = len;
        EXPECT_EQ(col.values[r], expected);
    }
}

TEST(SystemMatrixTest, ForwardMatchesDenseProduct) {
    const ScanGeometry g = small_geometry(25, 128);
    ImageGrid f = make_grid(g, 16);
    f.values = random_vector(f.size(), 3);
    const SystemMatrix A = build_system_matrix(g, f);
    const Sinogram s = forward_project(A, f);
    std::vector<double> dense(A.n_rays() * A.n_pixels(), 0.0);
    for (std::size_t r = 0; r < A.n_rays(); ++r)
        for (auto [p, len] : A.row(r)) dense[r * A.n_pixels() + p] = len;
    double err = 0.0, ref = 0.0;
    for (std::size_t r = 0; r < A.n_rays(); ++r) {
        double acc = 0.0;
        for (std::size_t p = 0; p < A.n_pixels(); ++p) acc += dense[r * A.n_pixels() + p] * f.values[p];
        err = std::max(err, std::abs(acc - s.values[r]));
        ref = std::max(ref, std::abs(acc));
    }
    EXPECT_LE(err, 1e-12 * ref);
}

TEST(SystemMatrixTest, BackProjectionOfZeroAndOfRayIndicator) {
    const ScanGeometry g = small_geometry(5, 64);
    const SystemMatrix A = build_system_matrix(g, make_grid(g, 16));
    Sinogram y = Sinogram::zeros(5, 64);
    const ImageGrid zero = back_project(A, y);
    EXPECT_TRUE(std::all_of(zero.values.begin(), zero.values.end(), [](double v) { return v == 0.0; }));

    const std::size_t ray = 2 * 64 + 31;
    y.values[ray] = 1.0;
    const ImageGrid footprint = back_project(A, y);
    std::vector<double> expected(A.n_pixels(), 0.0);
    for (auto [p, len] : A.row(ray)) expected[p] = len;
    EXPECT_EQ(footprint.values, expected);
}

TEST(SystemMatrixTest, AdjointIdentityOnRandomPairs) {
    const ScanGeometry g = small_geometry(25, 128);
    for (std::size_t n : {16u, 32u, 64u}) {
        const SystemMatrix A = build_system_matrix(g, make_grid(g, n));
        for (std::uint64_t trial = 0; trial < 20; ++trial) {
            ImageGrid f = make_grid(g, n);
            f.values = random_vector(f.size(), 100 + trial);
            Sinogram y = Sinogram::zeros(g.n_views, g.n_detector_bins);
            y.values = random_vector(y.size(), 200 + trial);
            const double lhs = dot(forward_project(A, f).values, y.values);
            const double rhs = dot(f.values, back_project(A, y).values);
            ASSERT_LT(std::abs(lhs - rhs), 1e-10 * std::max(std::abs(lhs), 1.0)) << "n=" << n;
        }
    }
}

TEST(SystemMatrixTest, ForwardIsLinear) {
    const ScanGeometry g = small_geometry(9, 96);
    const SystemMatrix A = build_system_matrix(g, make_grid(g, 24));
    ImageGrid f = make_grid(g, 24), h = make_grid(g, 24), mix = make_grid(g, 24);
    f.values = random_vector(f.size(), 1);
    h.values = random_vector(h.size(), 2);
    for (std::size_t k = 0; k < mix.size(); ++k) mix.values[k] = 2.5 * f.values[k] - 0.75 * h.values[k];
    const auto af = forward_project(A, f).values;
    const auto ah = forward_project(A, h).values;
    const auto am = forward_project(A, mix).values;
    for (std::size_t r = 0; r < am.size(); ++r) EXPECT_NEAR(am[r], 2.5 * af[r] - 0.75 * ah[r], 1e-12);
}

TEST(SystemMatrixTest, ShapeMismatchIsRejected) {
    const ScanGeometry g = small_geometry(5, 64);
    const SystemMatrix A = build_system_matrix(g, make_grid(g, 16));
    EXPECT_THROW(forward_project(A, make_grid(g, 8)), ValidationError);
    EXPECT_THROW(back_project(A, Sinogram::zeros(5, 32)), ValidationError);
}

TEST(SystemMatrixTest, TripletsAreValidatedAndDuplicatesSummed) {
    SystemMatrix::Shape sh{1, 2, 1, 2, 1.0};
    EXPECT_THROW(SystemMatrix(sh, {{0, 0, -1.0}}), ValidationError);
    EXPECT_THROW(SystemMatrix(sh, {{0, 5, 1.0}}), ValidationError);
    const SystemMatrix A(sh, {{1, 0, 0.25}, {0, 1, 1.0}, {1, 0, 0.5}});
    EXPECT_EQ(A.nnz(), 2u);
    EXPECT_DOUBLE_EQ(A.ray_length(1), 0.75);
}

TEST(SystemMatrixTest, PaperGeometryMeasurementCount) {
    const ScanGeometry g;
    const SystemMatrix A = build_system_matrix(g, make_grid(g, 32));
    EXPECT_EQ(A.n_rays(), 25600u);
}

TEST(SystemMatrixTest, ConstructionIsDeterministic) {
    const ScanGeometry g;
    const SystemMatrix A = build_system_matrix(g, make_grid(g, 64));
    const SystemMatrix B = build_system_matrix(g, make_grid(g, 64));
    ASSERT_EQ(A.nnz(), B.nnz());
    ImageGrid f = make_grid(g, 64);
    f.values = random_vector(f.size(), 9);
    EXPECT_EQ(forward_project(A, f).values, forward_project(B, f).values);
}
