#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "qtopo/quantization.hpp"
#include "support.hpp"

using namespace qtopo;
using Catch::Matchers::WithinAbs;

namespace {

double op_dist(const ComplexMatrix& a, const ComplexMatrix& b) { return operator_norm(ComplexMatrix(a - b)); }

// psi_m(u) straight from the binomial formula.
double psi_direct(int k, int m, double u) {
  const double binom = std::tgamma(k + 1.0) / (std::tgamma(m + 1.0) * std::tgamma(k - m + 1.0));
  const double t = 0.5 * (1.0 + u);
  return std::sqrt((k + 1.0) * binom * std::pow(t, m) * std::pow(1.0 - t, k - m));
}

double smooth_f(const SpherePoint& x) { return x.z() + 0.5 * x.x(); }
double smooth_g(const SpherePoint& x) { return std::exp(0.4 * x.y()); }

}  // namespace

TEST_CASE("context construction", "[quantization]") {
  CHECK_THROWS_WITH(make_context(8, 9, 40), Catch::Matchers::ContainsSubstring("n_theta >= k+2"));
  CHECK_THROWS_WITH(make_context(8, 10, 17), Catch::Matchers::ContainsSubstring("n_phi >= 2k+2"));
  CHECK_THROWS_AS(make_context(0, 10, 10), ValidationError);
  const auto ctx = make_context(1, 3, 4);
  CHECK(ctx.dim() == 2);
  CHECK(ctx.hbar() == 1.0);
  for (int k : {1, 16, 64, 256}) {
    const auto c = make_context(k, k + 2, 2 * k + 2);
    double total = 0.0;
    for (int r = 0; r < c.n_theta(); ++r) {
      CHECK(c.ring_weights()[r] > 0.0);
      total += c.node_weight(r) * c.n_phi();
    }
    CHECK_THAT(total, WithinAbs(1.0, 1e-13));
    CHECK(c.dim() == k + 1);
    CHECK_THAT(semiclassical_dimension(c) + 1.0, WithinAbs(c.dim(), 0.0));
  }
}

TEST_CASE("basis amplitudes match the binomial formula", "[quantization][oracle]") {
  const auto ctx = make_context(10);
  for (double u : {-0.99, -0.3, 0.0, 0.41, 0.97}) {
    const auto a = ctx.amplitudes_at(u);
    for (int m = 0; m <= 10; ++m) CHECK_THAT(a[m], WithinAbs(psi_direct(10, m, u), 1e-13));
  }
}

TEST_CASE("basis densities integrate to the identity Gram matrix", "[quantization]") {
  for (int k : {1, 7, 32}) {
    const auto ctx = make_context(k, k + 2, 2 * k + 2);
    ComplexMatrix gram = ComplexMatrix::Zero(ctx.dim(), ctx.dim());
    for (int r = 0; r < ctx.n_theta(); ++r) {
      for (int p = 0; p < ctx.n_phi(); ++p) {
        const auto psi = ctx.basis_at(ctx.node(r, p));
        gram += ctx.node_weight(r) * psi.conjugate() * psi.transpose();
      }
    }
    CHECK(op_dist(gram, ComplexMatrix::Identity(ctx.dim(), ctx.dim())) < 1e-12);
  }
}

TEST_CASE("normalization T(1) = Id on every assembly path", "[quantization]") {
  for (int k : {1, 16, 64, 256}) {
    const auto ctx = make_context(k, k + 2, 2 * k + 2);
    const ComplexMatrix id = ComplexMatrix::Identity(ctx.dim(), ctx.dim());
    CHECK(op_dist(toeplitz_on_grid(ctx, [](const SpherePoint&) { return 1.0; }).matrix(), id) < 1e-12);
    CHECK(op_dist(toeplitz(ctx, Symbol::constant(1.0)).matrix(), id) < 1e-12);
    CHECK(op_dist(toeplitz(ctx, Symbol::indicator(Region::full())).matrix(), id) < 1e-12);
    CHECK(op_dist(toeplitz(ctx, Symbol::constant(-2.5)).matrix(), -2.5 * id) < 1e-12);
  }
}

TEST_CASE("zonal cos(theta) is diagonal with Beta-moment entries", "[quantization][oracle]") {
  // E[2t - 1] under Beta(m + 1, k - m + 1).
  const int k = 4;
  const auto ctx = make_context(k, k + 2, 2 * k + 2);
  const auto grid = toeplitz_on_grid(ctx, [](const SpherePoint& x) { return x.z(); }).matrix();
  const auto zonal = toeplitz(ctx, Symbol::zonal([](double u) { return u; })).matrix();
  const auto exact = toeplitz_zonal_exact(ctx, {PolynomialPiece{-1.0, 1.0, {0.0, 1.0}}}).matrix();
  for (int i = 0; i <= k; ++i) {
    const double oracle = (2.0 * i - k) / (k + 2.0);
    CHECK_THAT(grid(i, i).real(), WithinAbs(oracle, 1e-13));
    CHECK_THAT(zonal(i, i).real(), WithinAbs(oracle, 1e-13));
    CHECK_THAT(exact(i, i).real(), WithinAbs(oracle, 1e-13));
    for (int j = 0; j <= k; ++j) {
      if (i != j) CHECK(std::abs(grid(i, j)) < 1e-14);
    }
  }
}

TEST_CASE("k = 1 hemisphere spectrum is {1/4, 3/4}", "[quantization][oracle]") {
  const auto ctx = make_context(1);
  const auto exact = toeplitz_zonal_exact(ctx, polar_cap_profile(kPi / 2)).matrix();
  // int_{1/2}^{1} 2(1 - t) dt and int_{1/2}^{1} 2t dt.
  CHECK_THAT(exact(0, 0).real(), WithinAbs(0.25, 1e-15));
  CHECK_THAT(exact(1, 1).real(), WithinAbs(0.75, 1e-15));
  const auto region = toeplitz(ctx, Symbol::indicator(Region::hemisphere())).matrix();
  CHECK_THAT(region(0, 0).real(), WithinAbs(0.25, 1e-14));
  CHECK_THAT(region(1, 1).real(), WithinAbs(0.75, 1e-14));
  const auto zonal = toeplitz(ctx, Symbol::zonal([](double u) { return u > 0.0 ? 1.0 : 0.0; }, {0.0})).matrix();
  CHECK_THAT(zonal(0, 0).real(), WithinAbs(0.25, 1e-14));
}

TEST_CASE("exact zonal path edge cases", "[quantization]") {
  for (int k : {1, 5, 40, 256}) {
    const auto ctx = make_context(k, k + 2, 2 * k + 2);
    const auto full = toeplitz_zonal_exact(ctx, polar_cap_profile(kPi)).matrix();
    CHECK(op_dist(full, ComplexMatrix::Identity(k + 1, k + 1)) < 1e-12);
  }
  const auto ctx1 = make_context(1);
  const auto lin = toeplitz_zonal_exact(ctx1, {PolynomialPiece{-1.0, 1.0, {0.0, 1.0}}}).matrix();
  CHECK_THAT(lin(0, 0).real(), WithinAbs(-1.0 / 3.0, 1e-15));
  CHECK_THAT(lin(1, 1).real(), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THROWS_AS(toeplitz_zonal_exact(ctx1, {PolynomialPiece{0.5, 0.2, {1.0}}}), ValidationError);
}

TEST_CASE("exact zonal entries agree with Gauss panels for a polynomial cap profile", "[quantization][oracle]") {
  const int k = 64;
  const auto ctx = make_context(k);
  const double u0 = std::cos(0.8);
  const auto exact = toeplitz_zonal_exact(ctx, {PolynomialPiece{u0, 1.0, {0.2, -0.5, 1.5}}}).matrix();
  const auto quad =
      toeplitz(ctx, Symbol::zonal([&](double u) { return u > u0 ? 0.2 - 0.5 * u + 1.5 * u * u : 0.0; }, {u0})).matrix();
  CHECK(op_dist(exact, quad) < 1e-13);
}

TEST_CASE("rotated cap operators are unitarily equivalent to the polar cap", "[quantization][oracle]") {
  // Rotations act unitarily on the quantum space, so the spectrum of T(chi_cap)
  // depends only on the radius and equals the exact diagonal of the polar cap.
  std::mt19937_64 rng(23);
  for (int k : {8, 32, 96}) {
    const auto ctx = make_context(k);
    for (double radius : {0.35, 1.1, 2.4}) {
      const auto center = testing_support::random_point(rng);
      const auto op = toeplitz(ctx, Symbol::indicator(Region::cap(center, radius)));
      Eigen::VectorXd ev = op.eigenvalues();
      Eigen::VectorXd oracle = toeplitz_zonal_exact(ctx, polar_cap_profile(radius)).matrix().diagonal().real();
      std::sort(oracle.data(), oracle.data() + oracle.size());
      INFO("k = " << k << " radius = " << radius);
      CHECK((ev - oracle).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
}

TEST_CASE("complementary regions sum to the identity and stay in [0, 1]", "[quantization][property]") {
  const auto ctx = make_context(40);
  const auto a = Region::cap(SpherePoint::from_angles(0.9, 0.4), 0.7) | Region::cap(SpherePoint::from_angles(1.6, 1.2), 0.5);
  const auto ta = toeplitz(ctx, Symbol::indicator(a));
  const auto tc = toeplitz(ctx, Symbol::indicator(a.complement()));
  CHECK(op_dist(ComplexMatrix(ta.matrix() + tc.matrix()), ComplexMatrix::Identity(41, 41)) < 1e-12);
  const auto ev = ta.eigenvalues();
  CHECK(ev.minCoeff() >= -1e-10);
  CHECK(ev.maxCoeff() <= 1.0 + 1e-10);
}

TEST_CASE("positivity for non-negative smooth symbols", "[quantization][property]") {
  std::mt19937_64 rng(29);
  const auto ctx = make_context(24);
  for (int trial = 0; trial < 5; ++trial) {
    const auto c = testing_support::random_point(rng);
    const auto op = toeplitz(ctx, Symbol::smooth([&](const SpherePoint& x) {
      const double d = geodesic_distance(c, x);
      return d < 0.6 ? smoothstep5((0.6 - d) / 0.3) : 0.0;
    }, Cap{c, 0.6}));
    CHECK(op.eigenvalues().minCoeff() >= -1e-10);
  }
  CHECK_THROWS_AS(toeplitz(ctx, Symbol::smooth([](const SpherePoint&) { return std::nan(""); })), NumericalError);
}

TEST_CASE("Hermitian operator validation", "[quantization]") {
  ComplexMatrix m = ComplexMatrix::Identity(3, 3);
  m(0, 1) = Complex(0.3, 0.1);
  CHECK_THROWS_AS(HermitianOperator(m), ValidationError);
  m(1, 0) = Complex(0.3, -0.1);
  CHECK_NOTHROW(HermitianOperator(m));
  CHECK_THROWS_AS(HermitianOperator(ComplexMatrix::Zero(2, 3)), ValidationError);
}

TEST_CASE("Bergman kernel from the basis matches the coherent-state formula", "[quantization][oracle]") {
  std::mt19937_64 rng(31);
  const auto ctx = make_context(20);
  for (int i = 0; i < 200; ++i) {
    const auto x = testing_support::random_point(rng);
    const auto y = testing_support::random_point(rng);
    const double closed = kernel_intensity_closed(20, x.vec(), y.vec());
    CHECK_THAT(kernel_intensity(ctx, x, y), WithinAbs(closed, 1e-11 * 441.0));
  }
  // Diagonal: |K(x,x)| = d, the ratio to 1/hbar is (k + 1)/k -> 1.
  double prev = 10.0;
  for (int k : {4, 16, 64, 256}) {
    const auto c = make_context(k, k + 2, 2 * k + 2);
    const auto x = testing_support::random_point(rng);
    const double ratio = std::sqrt(kernel_intensity(c, x, x)) * c.hbar();
    CHECK_THAT(ratio, WithinAbs(1.0 + 1.0 / k, 1e-10));
    CHECK(std::abs(ratio - 1.0) < prev);
    prev = std::abs(ratio - 1.0);
  }
}

TEST_CASE("Bergman kernel off-diagonal decay", "[quantization]") {
  const int k = 8;
  const auto ctx = make_context(k);
  const auto x = SpherePoint::north();
  const double diag = kernel_intensity(ctx, x, x);
  CHECK(kernel_intensity(ctx, x, SpherePoint::south()) < 1e-8 * diag);
  for (double d = 0.05; d < kPi; d += 0.05) {
    const double v = kernel_intensity(ctx, x, SpherePoint::from_angles(d, 0.7));
    CHECK(v <= diag * std::exp(-k * d * d / 4.0) * (1.0 + 1e-10) + 1e-300);
  }
}

TEST_CASE("double integral of the kernel equals the dimension", "[quantization]") {
  // int int |K|^2 = tr(T(1) T(1)) = d for the normalized measure.
  const int k = 6;
  const auto ctx = make_context(k, k + 2, 2 * k + 2);
  double total = 0.0;
  for (int r = 0; r < ctx.n_theta(); ++r) {
    for (int p = 0; p < ctx.n_phi(); ++p) {
      for (int r2 = 0; r2 < ctx.n_theta(); ++r2) {
        for (int p2 = 0; p2 < ctx.n_phi(); ++p2) {
          total += ctx.node_weight(r) * ctx.node_weight(r2) *
                   kernel_intensity_closed(k, ctx.node_vector(r, p), ctx.node_vector(r2, p2));
        }
      }
    }
  }
  CHECK_THAT(total, WithinAbs(ctx.dim(), 1e-12));
}

TEST_CASE("normalized trace", "[quantization]") {
  CHECK(normalized_trace(HermitianOperator::identity(7)) == 1.0);
  CHECK_THROWS_AS(normalized_trace(HermitianOperator()), ValidationError);
  // On the sphere the normalized trace reproduces the integral exactly; the
  // unnormalized form tr(T f) hbar differs from the integral by hbar * int f.
  const auto profile = [](double u) { return std::exp(1.3 * u) / (1.2 + 0.5 * u * u); };
  std::vector<double> hbars, gaps;
  const auto fine = make_context(512);
  const double integral = integrate(fine, Symbol::zonal(profile));
  for (int k : {16, 32, 64, 128, 256}) {
    const auto ctx = make_context(k);
    const auto op = toeplitz(ctx, Symbol::zonal(profile));
    CHECK(std::abs(normalized_trace(op) - integral) < 1e-13);
    hbars.push_back(ctx.hbar());
    gaps.push_back(std::abs(op.trace() * ctx.hbar() - integral));
  }
  CHECK(testing_support::loglog_slope(hbars, gaps) > 0.99);
}

TEST_CASE("quasi-multiplicativity for smooth symbols", "[quantization][scaling]") {
  std::vector<double> hbars, defects;
  for (int k : {16, 32, 64, 128, 256}) {
    const auto ctx = make_context(k, 1.25);
    const auto tf = toeplitz_on_grid(ctx, smooth_f).matrix();
    const auto tg = toeplitz_on_grid(ctx, smooth_g).matrix();
    const auto tfg = toeplitz_on_grid(ctx, [](const SpherePoint& x) { return smooth_f(x) * smooth_g(x); }).matrix();
    hbars.push_back(ctx.hbar());
    defects.push_back(op_dist(ComplexMatrix(tf * tg), tfg));
  }
  const double slope = testing_support::loglog_slope(hbars, defects);
  INFO("slope " << slope);
  CHECK(slope >= 0.9);
}

TEST_CASE("operator cache round trip", "[quantization][io]") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "qtopo_op.btop").string();
  save_operator(path, HermitianOperator::identity(5), 4);
  const auto loaded = load_operator(path);
  CHECK(loaded.k == 4);
  CHECK(loaded.op.matrix() == ComplexMatrix::Identity(5, 5));

  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  ComplexMatrix m(9, 9);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) m(i, j) = Complex(g(rng), g(rng));
  }
  const HermitianOperator h(ComplexMatrix(m + m.adjoint()));
  save_operator(path, h, 8);
  const auto back = load_operator(path).op.matrix();
  CHECK(std::memcmp(back.data(), h.matrix().data(), sizeof(Complex) * 81) == 0);

  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
  CHECK_THROWS_WITH(load_operator(path), Catch::Matchers::ContainsSubstring("truncated"));
  {
    std::ofstream out(path, std::ios::binary);
    out << "XXXX";
  }
  CHECK_THROWS_WITH(load_operator(path), Catch::Matchers::ContainsSubstring("magic"));
  CHECK_THROWS_AS(load_operator((dir / "missing_dir" / "x.btop").string()), IoError);
}
