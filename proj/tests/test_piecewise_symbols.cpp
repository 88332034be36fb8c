#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qtopo/piecewise_symbols.hpp"
#include "support.hpp"

using namespace qtopo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const std::vector<int> kScan = {16, 32, 64, 128, 256};

Region cap_a() { return Region::cap(SpherePoint::from_angles(0.4, 0.0), 1.0); }
Region cap_b() { return Region::cap(SpherePoint::from_angles(1.0, 0.8), 0.9); }
Region cap_c() { return Region::cap(SpherePoint::from_angles(0.9, -0.6), 1.1); }

}  // namespace

TEST_CASE("normalized Schatten norms", "[symbols]") {
  for (double p : {1.0, 2.0, 3.5}) CHECK_THAT(schatten_norm(HermitianOperator::identity(7), p), WithinAbs(1.0, 1e-15));
  ComplexMatrix proj = ComplexMatrix::Zero(5, 5);
  proj(2, 2) = 1.0;
  CHECK_THAT(schatten_norm(HermitianOperator(proj), 1.0), WithinAbs(0.2, 1e-15));
  Eigen::VectorXd diag(2);
  diag << 0.25, 0.75;
  CHECK_THAT(schatten_norm(HermitianOperator::diagonal(diag), 2.0), WithinAbs(std::sqrt(5.0 / 16.0), 1e-15));
  CHECK_THROWS_AS(schatten_norm(HermitianOperator::identity(2), 0.5), ValidationError);
  ComplexMatrix shift = ComplexMatrix::Zero(3, 3);
  shift(0, 1) = 2.0;
  CHECK_THAT(schatten_norm(shift, 2.0), WithinAbs(2.0 / std::sqrt(3.0), 1e-14));
}

TEST_CASE("good-set defect trivial regions", "[symbols]") {
  const auto ctx = make_context(24);
  CHECK_THAT(good_set_defect(ctx, Region::empty()), WithinAbs(0.0, 1e-14));
  CHECK_THAT(good_set_defect(ctx, Region::full()), WithinAbs(0.0, 1e-13));
  CHECK(good_set_integral(ctx, Region::empty()) == 0.0);
}

TEST_CASE("region operators lie between 0 and 1 and respect complements", "[symbols][property]") {
  const auto ctx = make_context(40);
  const std::vector<Region> regions = {cap_a(), cap_b(), cap_a() & cap_b(), cap_a() | cap_c(), cap_b() - cap_c(),
                                       Region::hemisphere()};
  for (const auto& r : regions) {
    const auto t = region_operator(ctx, r);
    const auto tc = region_operator(ctx, r.complement());
    CHECK((t.matrix() + tc.matrix() - ComplexMatrix::Identity(ctx.dim(), ctx.dim())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THAT(good_set_defect(ctx, r.complement()), WithinAbs(good_set_defect(ctx, r), 1e-12));
  }
}

TEST_CASE("hemisphere good-set defect decays like hbar^(1/2)", "[symbols][scaling]") {
  const auto r = scaling_scan(
      kScan, [](const QuantizationContext& c) { return good_set_defect(c, Region::hemisphere()); }, "hemisphere", 0.5,
      0.45);
  INFO("slope " << r.slope);
  CHECK(r.pass);
  CHECK(r.samples.size() == 5);
}

TEST_CASE("kernel integral equals the operator defect", "[symbols]") {
  for (int k : {8, 33, 128}) {
    const auto ctx = make_context(k);
    const double op = good_set_defect(ctx, Region::hemisphere()) * ctx.dim();
    CHECK_THAT(good_set_integral(ctx, Region::hemisphere()), WithinRel(op, 1e-6));
  }
  for (int k : {6, 16}) {
    const auto ctx = make_context(k);
    const double op = good_set_defect(ctx, cap_a()) * ctx.dim();
    CHECK_THAT(good_set_integral(ctx, cap_a()), WithinRel(op, 1e-6));
  }
}

TEST_CASE("normalized kernel integral decays like hbar^(1/2)", "[symbols][scaling]") {
  const auto r = scaling_scan(
      kScan, [](const QuantizationContext& c) { return good_set_integral(c, Region::hemisphere()) / c.dim(); },
      "hemisphere kernel integral", 0.5, 0.45);
  INFO("slope " << r.slope);
  CHECK(r.pass);
}

TEST_CASE("intersections of good sets: kernel integral inequality", "[symbols][property]") {
  const auto ctx = make_context(12);
  const double ab = good_set_integral(ctx, cap_a() & cap_b());
  CHECK(ab <= good_set_integral(ctx, cap_a()) + good_set_integral(ctx, cap_b()) + 1e-9);
}

TEST_CASE("product defects", "[symbols][scaling]") {
  const auto ctx = make_context(20);
  const auto whole = SimpleFunction::indicator(Region::full());
  CHECK(product_defect(ctx, whole, whole) < 1e-13);

  const auto complementary = scaling_scan(
      kScan,
      [](const QuantizationContext& c) {
        return product_defect(c, SimpleFunction::indicator(cap_a()), SimpleFunction::indicator(cap_a().complement()));
      },
      "A, A^c", 0.25, 0.2);
  INFO("complementary slope " << complementary.slope);
  CHECK(complementary.pass);

  const auto overlap = scaling_scan(
      kScan,
      [](const QuantizationContext& c) {
        return product_defect(c, SimpleFunction::indicator(cap_a()), SimpleFunction::indicator(cap_b()));
      },
      "A, B", 0.5, 0.2);
  INFO("overlap slope " << overlap.slope);
  CHECK(overlap.pass);

  // Simple functions with several levels.
  const SimpleFunction f({{2.0, cap_a()}, {-1.0, cap_c()}});
  const SimpleFunction g({{0.5, cap_b()}, {3.0, Region::hemisphere()}});
  const auto mixed = scaling_scan(
      kScan, [&](const QuantizationContext& c) { return product_defect(c, f, g); }, "simple f, g", 0.25, 0.2);
  INFO("simple slope " << mixed.slope);
  CHECK(mixed.pass);
}

TEST_CASE("square-root defects", "[symbols][scaling]") {
  const auto ctx = make_context(20);
  CHECK(sqrt_defect(ctx, SimpleFunction::indicator(Region::full())) < 1e-13);
  const auto one = scaling_scan(
      kScan, [](const QuantizationContext& c) { return sqrt_defect(c, SimpleFunction::indicator(cap_a())); }, "chi_A",
      0.125, 0.1);
  INFO("chi_A slope " << one.slope);
  CHECK(one.pass);
  const auto four = scaling_scan(
      kScan, [](const QuantizationContext& c) { return sqrt_defect(c, SimpleFunction::indicator(cap_a(), 4.0)); },
      "4 chi_A", 0.125, 0.1);
  INFO("4 chi_A slope " << four.slope);
  CHECK(four.pass);
  for (std::size_t i = 0; i < one.samples.size(); ++i) {
    CHECK_THAT(four.samples[i].second, WithinRel(2.0 * one.samples[i].second, 1e-9));
  }
  CHECK_THROWS_AS(sqrt_defect(ctx, SimpleFunction::indicator(cap_a(), -1.0)), std::exception);
}

TEST_CASE("multi-time products of square roots", "[symbols][scaling]") {
  const auto ctx = make_context(18);
  const auto whole = SimpleFunction::indicator(Region::full());
  const auto trivial = multi_time_check(ctx, {whole, whole, whole});
  CHECK_THAT(trivial.lhs, WithinAbs(1.0, 1e-12));
  CHECK_THAT(trivial.rhs, WithinAbs(1.0, 1e-12));

  std::vector<double> disjoint;
  for (int k : kScan) {
    const auto r = multi_time_check(make_context(k), {SimpleFunction::indicator(Region::polar_cap(0.8)),
                                                      SimpleFunction::indicator(Region::cap(SpherePoint::south(), 0.8))});
    CHECK(r.rhs == 0.0);
    disjoint.push_back(r.lhs);
  }
  CHECK(disjoint.back() < 1e-20);
  CHECK(disjoint[1] < disjoint[0]);

  const auto three = scaling_scan(
      kScan,
      [](const QuantizationContext& c) {
        return multi_time_check(c, {SimpleFunction::indicator(cap_a()), SimpleFunction::indicator(cap_b()),
                                    SimpleFunction::indicator(cap_c())})
            .gap;
      },
      "three caps", 0.125, 0.1);
  INFO("slope " << three.slope);
  CHECK(three.pass);
}

TEST_CASE("hemisphere spectrum", "[symbols]") {
  const auto one = cap_spectrum(make_context(1), kPi / 2);
  REQUIRE(one.eigenvalues.size() == 2);
  CHECK_THAT(one.eigenvalues[0], WithinAbs(0.25, 1e-15));
  CHECK_THAT(one.eigenvalues[1], WithinAbs(0.75, 1e-15));
  CHECK_THAT(one.min_gap_to_half, WithinAbs(0.25, 1e-15));

  double prev = 1.0;
  for (int k : {15, 31, 63, 127, 255}) {
    const auto s = cap_spectrum(make_context(k), kPi / 2);
    CHECK(s.min_gap_to_half < prev);
    prev = s.min_gap_to_half;
  }
  CHECK(std::abs(cap_spectrum(make_context(256), kPi / 2).idempotency_defect - 0.25) < 0.02);

  const auto full = cap_spectrum(make_context(10), kPi);
  for (double l : full.eigenvalues) CHECK_THAT(l, WithinAbs(1.0, 1e-14));
}

TEST_CASE("scaling fits", "[symbols]") {
  std::vector<std::pair<double, double>> half, linear;
  for (int k : kScan) {
    half.emplace_back(1.0 / k, std::sqrt(1.0 / k));
    linear.emplace_back(1.0 / k, 3.0 / k);
  }
  CHECK_THAT(fit_scaling_exponent(half).slope, WithinAbs(0.5, 1e-10));
  const auto lin = fit_scaling_exponent(linear, "linear", 1.0, 0.9);
  CHECK_THAT(lin.slope, WithinAbs(1.0, 1e-10));
  CHECK_THAT(lin.intercept, WithinAbs(std::log(3.0), 1e-10));
  CHECK(lin.pass);
  linear.emplace_back(1.0 / 512, 0.0);
  CHECK(fit_scaling_exponent(linear).notes.size() == 1);
  CHECK_THROWS_AS(fit_scaling_exponent({{0.5, 1.0}, {0.25, 0.5}, {0.1, 0.0}, {0.05, 0.1}}), ValidationError);

  const auto back = schatten_report_from_json(nlohmann::json::parse(to_json(lin).dump()));
  CHECK(back.slope == lin.slope);
  CHECK(back.samples == lin.samples);
  CHECK(back.quantity == "linear");
}
