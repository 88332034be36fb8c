#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "qtopo/complexes.hpp"
#include "qtopo/persistence.hpp"
#include "support.hpp"

using namespace qtopo;
using Catch::Matchers::WithinAbs;

using testing_support::random_filtered_complex;

TEST_CASE("brute-force homology examples", "[persistence][oracle]") {
  const auto triangle = SimplicialComplex::with_vertices(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(betti_numbers_bruteforce(triangle, 1) == std::vector<std::size_t>{1, 1});
  const auto sphere = flag_complex(4, [](std::size_t, std::size_t) { return true; }, 2);
  CHECK(betti_numbers_bruteforce(sphere, 2) == std::vector<std::size_t>{1, 0, 1});
  CHECK(homology_rank_bruteforce(SimplicialComplex::with_vertices(4, {{0, 1}, {2, 3}}), 0) == 2);
  const auto big = flag_complex(60, [](std::size_t, std::size_t) { return true; }, 3);
  CHECK_THROWS_WITH(homology_rank_bruteforce(big, 1), Catch::Matchers::ContainsSubstring("limit"));
}

TEST_CASE("single vertex barcode", "[persistence]") {
  auto fc = FilteredComplex::with_vertices(1);
  fc.add({0}, 0.25);
  const auto b = reduce_to_barcode(fc, 2);
  REQUIRE(b.degree(0).size() == 1);
  CHECK(b.degree(0)[0] == Bar{0.25, kInfinity});
  CHECK(b.degree(1).empty());
  CHECK(b.degree(2).empty());
}

TEST_CASE("non-monotone filtrations are rejected", "[persistence]") {
  auto fc = FilteredComplex::with_vertices(2);
  fc.add({0}, 0.0);
  fc.add({1}, 2.0);
  fc.add({0, 1}, 1.0);
  CHECK_THROWS_WITH(reduce_to_barcode(fc, 1), Catch::Matchers::ContainsSubstring("[1]") &&
                                                   Catch::Matchers::ContainsSubstring("[0,1]"));
  auto open = FilteredComplex::with_vertices(3);
  open.add({0}, 0.0);
  open.add({0, 1}, 1.0);
  CHECK_THROWS_WITH(reduce_to_barcode(open, 1), Catch::Matchers::ContainsSubstring("missing"));
}

TEST_CASE("square point cloud H1 bar", "[persistence][oracle]") {
  // Unit square: sides 1, diagonals sqrt 2.
  const double xy[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto fc = flag_filtration(4, [&](std::size_t i, std::size_t j) {
    return std::hypot(xy[i][0] - xy[j][0], xy[i][1] - xy[j][1]);
  });
  const auto b = reduce_to_barcode(fc, 2);
  REQUIRE(b.degree(1).size() == 1);
  CHECK(b.degree(1)[0].birth == 1.0);
  CHECK(b.degree(1)[0].death == std::sqrt(2.0));
  CHECK(b.degree(2).empty());
  CHECK(b.infinite_count(0) == 1);
  CHECK(b.degree(0).size() == 4);
  // Explicit oracle: at every scale between the side and the diagonal the
  // complex is a 4-cycle with one independent loop.
  for (double v : {1.0, 1.2, 1.4}) CHECK(homology_rank_bruteforce(fc.at(v), 1) == 1);
  CHECK(homology_rank_bruteforce(fc.at(std::sqrt(2.0)), 1) == 0);
}

TEST_CASE("barcodes agree with brute-force ranks on random filtered complexes", "[persistence][oracle]") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(3, 8);
  int complexes = 0;
  for (int trial = 0; trial < 250; ++trial) {
    const auto fc = random_filtered_complex(rng, size(rng), 6);
    const auto bars = reduce_to_barcode(fc, 2);
    for (double v : fc.grid()) {
      const auto k = fc.at(v);
      for (int q = 0; q <= 2; ++q) REQUIRE(bars.rank_at(q, v) == homology_rank_bruteforce(k, q));
    }
    ++complexes;
  }
  CHECK(complexes >= 200);
}

TEST_CASE("flag filtrations agree with brute-force ranks", "[persistence][oracle]") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> w(1, 9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 8;
    std::vector<std::vector<double>> weight(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) weight[i][j] = weight[j][i] = w(rng);
    }
    const auto fc = flag_filtration(n, [&](std::size_t i, std::size_t j) { return weight[i][j]; });
    const auto bars = reduce_to_barcode(fc, 2);
    for (double v : fc.grid()) {
      const auto k = fc.at(v);
      for (int q = 0; q <= 2; ++q) REQUIRE(bars.rank_at(q, v) == homology_rank_bruteforce(k, q));
    }
  }
}

TEST_CASE("barcode does not depend on the tie-break order", "[persistence][property]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto fc = random_filtered_complex(rng, 8, 3);
    const auto base = reduce_to_barcode(fc, 2);
    for (std::uint64_t seed : {1u, 2u, 3u}) CHECK(reduce_to_barcode(fc, 2, seed) == base);
  }
}

TEST_CASE("Euler characteristic identity", "[persistence][property]") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 60; ++trial) {
    const auto fc = random_filtered_complex(rng, 8, 4);
    const auto k = fc.final_space();
    const auto betti = betti_numbers_bruteforce(k, 3);
    long long chi = 0;
    for (int q = 0; q <= 3; ++q) chi += (q % 2 == 0 ? 1 : -1) * static_cast<long long>(betti[q]);
    CHECK(chi == k.euler_characteristic());
  }
  const auto rips = vietoris_rips(fibonacci_net(30), 0.9);
  const auto betti = betti_numbers_bruteforce(rips, 3);
  CHECK(static_cast<long long>(betti[0]) - static_cast<long long>(betti[1]) + static_cast<long long>(betti[2]) -
            static_cast<long long>(betti[3]) ==
        rips.euler_characteristic());
}

TEST_CASE("persistent image ranks", "[persistence]") {
  const auto ka = SimplicialComplex::with_vertices(2);
  const auto kb = SimplicialComplex::with_vertices(2, {{0, 1}});
  CHECK(persistent_image_rank(ka, kb, 0) == 1);
  CHECK_THROWS_WITH(persistent_image_rank(kb, ka, 0), Catch::Matchers::ContainsSubstring("not contained"));

  const auto sphere = flag_complex(4, [](std::size_t, std::size_t) { return true; }, 2);
  CHECK(persistent_image_ranks(sphere, sphere, 2) == std::vector<std::size_t>{1, 0, 1});
  const auto circle = SimplicialComplex::with_vertices(3, {{0, 1}, {1, 2}, {0, 2}});
  const auto disk = SimplicialComplex::with_vertices(3, {{0, 1}, {1, 2}, {0, 2}, {0, 1, 2}});
  CHECK(persistent_image_ranks(circle, circle, 1) == std::vector<std::size_t>{1, 1});
  CHECK(persistent_image_ranks(circle, disk, 1) == std::vector<std::size_t>{1, 0});

  // Interval module F([1, 3)) on the grid 0..4.
  const std::vector<double> grid = {0, 1, 2, 3, 4};
  std::vector<SimplicialComplex> family;
  for (double g : grid) {
    if (g < 1) family.push_back(SimplicialComplex::with_vertices(3, {{0, 1}, {1, 2}}));
    else if (g < 3) family.push_back(circle);
    else family.push_back(disk);
  }
  const auto bars = reduce_to_barcode(filtration_from_family(grid, family), 1);
  for (double s : grid) {
    for (double t : grid) {
      if (t < s) continue;
      CHECK(bars.containing(1, s, t) == ((s >= 1 && t < 3) ? 1u : 0u));
    }
  }
}

TEST_CASE("persistent image rank counts bars containing the interval", "[persistence][property]") {
  const auto net = fibonacci_net(40);
  std::vector<double> grid;
  std::vector<SimplicialComplex> family;
  for (double t = 0.3; t < 1.2; t += 0.1) {
    grid.push_back(t);
    family.push_back(vietoris_rips(net, t));
  }
  const auto bars = reduce_to_barcode(filtration_from_family(grid, family), 2);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i; j < grid.size(); ++j) {
      const auto ranks = persistent_image_ranks(family[i], family[j], 2);
      for (int q = 0; q <= 2; ++q) REQUIRE(ranks[q] == bars.containing(q, grid[i], grid[j]));
    }
    for (int q = 0; q <= 2; ++q) {
      for (std::size_t j = i + 1; j < grid.size(); ++j) CHECK(bars.containing(q, grid[i], grid[j]) <= bars.containing(q, grid[i], grid[j - 1]));
    }
  }
}

TEST_CASE("truncated modules", "[persistence]") {
  const auto circle = SimplicialComplex::with_vertices(3, {{0, 1}, {1, 2}, {0, 2}});
  const std::vector<double> grid = {1, 2, 3};
  const std::vector<SimplicialComplex> family(3, circle);
  const auto none = truncated_module(grid, family, 5, 6, 1);
  for (const auto& row : none.ranks) {
    for (auto r : row) CHECK(r == 0);
  }
  const auto all = truncated_module(grid, family, 0, 10, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(all.ranks[0][i] == 1);
    CHECK(all.ranks[1][i] == 1);
    for (std::size_t j = i; j < 3; ++j) CHECK(all.transitions[1][i][j] == 1);
  }
  const auto part = truncated_module(grid, family, 1.5, 2.5, 1);
  CHECK(part.ranks[1] == std::vector<std::size_t>{0, 1, 0});
  CHECK(part.transitions[1][0][1] == 0);
}

TEST_CASE("truncated classical module matches per-value oracle", "[persistence][oracle]") {
  const auto net = fibonacci_net(12);
  const double lambda = 1.05;
  std::vector<double> grid;
  std::vector<SimplicialComplex> family;
  for (double e = 0.6; e < 2.2; e += 0.1) {
    grid.push_back(e);
    family.push_back(classical_complex(net, e, lambda));
  }
  const auto m = truncated_module(grid, family, 0.8, 1.9, 2);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (int q = 0; q <= 2; ++q) {
      const std::size_t expected = m.in_window(i) ? homology_rank_bruteforce(family[i], q) : 0;
      CHECK(m.ranks[q][i] == expected);
    }
  }
}

TEST_CASE("interleaving checks", "[persistence][interleaving]") {
  const auto net = fibonacci_net(80);
  std::vector<double> grid;
  for (double t = 0.2; t < 1.0; t += 0.05) grid.push_back(t);
  const ComplexFamily rips = [&](double t) { return vietoris_rips(net, t, 2); };
  const ComplexFamily classical = [&](double t) { return classical_complex(net, t, 1.05, 2); };
  const ComplexFamily shrunk = [&](double t) { return classical_complex(net, t, 1.05, 2, 0.5); };

  CHECK(interleaving_check(rips, rips, 1.0, grid).holds());
  CHECK(interleaving_check(rips, classical, 1.05, grid).holds());

  const auto bad = interleaving_check(rips, shrunk, 1.05, grid);
  CHECK_FALSE(bad.holds());
  CHECK(bad.failures_in("B->A") == 0);
  REQUIRE(bad.failures_in("A->B") > 0);
  const auto& f = bad.failures.front();
  CHECK(f.witness.size() >= 2);
  CHECK(net.distance(f.witness[0], f.witness[1]) < f.parameter);
  CHECK(to_json(bad)["holds"] == false);
}

TEST_CASE("barcode JSON round trip", "[persistence][io]") {
  Barcode b;
  b.bars = {{{0.0, kInfinity}, {0.0, 0.5}}, {{1.0, 1.5}}, {}};
  const auto j = to_json(b);
  CHECK(j["0"][0][1].is_null());
  CHECK(barcode_from_json(nlohmann::json::parse(j.dump())) == b);
  CHECK(to_text(b).find("H1: 1 bars") != std::string::npos);
  CHECK(greedy_log_bottleneck(b.degree(1), b.degree(1)) == 0.0);
}
