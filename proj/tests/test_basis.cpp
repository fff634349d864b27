#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>

#include "dtc/basis.hpp"
#include "dtc/errors.hpp"
#include "dtc/rng.hpp"

using namespace dtc;

namespace {

// Oracle: smallest cyclic-rotation period of an n-bit pattern. Any n-cycle
// permutation is conjugate to a rotation, so period class counts agree.
int rotation_period(std::uint64_t pattern, int n) {
  auto rotate = [n](std::uint64_t p, int k) {
    const std::uint64_t mask = (1ull << n) - 1;
    return ((p >> k) | (p << (n - k))) & mask;
  };
  for (int k = 1; k <= n; ++k)
    if (n % k == 0 && rotate(pattern, k) == pattern) return k;
  return n;
}

BasisState from_pattern(const std::string& arrows) {
  // "v^^v" with site 0 first; 'v' = down.
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < arrows.size(); ++i)
    if (arrows[i] == 'v') bits |= 1ull << i;
  return BasisState(bits, static_cast<int>(arrows.size()));
}

}  // namespace

TEST_CASE("network layers for small even drives") {
  const SwapNetwork net2 = permutation_network(2, 4);
  CHECK(net2.layers[0] == std::vector<std::pair<int, int>>{{0, 1}, {2, 3}});
  CHECK(net2.layers[1].empty());  // all even bonds sit on unit boundaries
  for (std::uint64_t z = 0; z < 16; ++z)
    CHECK(net2.apply(net2.apply(z)) == z);

  const SwapNetwork net4 = permutation_network(4, 4);
  CHECK(net4.layers[0] == std::vector<std::pair<int, int>>{{0, 1}, {2, 3}});
  CHECK(net4.layers[1] == std::vector<std::pair<int, int>>{{1, 2}});
  // Every spin visits all four sites of the unit.
  std::set<int> visited;
  int site = 0;
  for (int step = 0; step < 4; ++step) {
    visited.insert(site);
    site = net4.site_map[site];
  }
  CHECK(visited.size() == 4);
  CHECK(site == 0);
}

TEST_CASE("odd drive uses mirror-symmetric 2n-site units") {
  const SwapNetwork net = permutation_network(3, 6);
  // Mid-unit odd bond (sites 2,3) is excluded.
  CHECK(net.layers[0] == std::vector<std::pair<int, int>>{{0, 1}, {4, 5}});
  CHECK(net.layers[1] == std::vector<std::pair<int, int>>{{1, 2}, {3, 4}});
  // Two disjoint 3-cycles, one per half.
  for (int start : {0, 3}) {
    std::set<int> cycle;
    int site = start;
    do {
      cycle.insert(site);
      site = net.site_map[site];
    } while (site != start);
    CHECK(cycle.size() == 3);
  }
  for (std::uint64_t z = 0; z < 64; ++z) {
    std::uint64_t cur = z;
    for (int step = 0; step < 3; ++step) cur = net.apply(cur);
    CHECK(cur == z);
  }
}

TEST_CASE("divisibility violations are rejected") {
  CHECK_THROWS_AS(permutation_network(4, 6), config_error);
  CHECK_THROWS_AS(permutation_network(3, 9), config_error);   // odd n needs 2n | L
  CHECK_THROWS_AS(permutation_network(2, 4, 6), config_error);  // lcm 4
}

TEST_CASE("whole network returns after n periods") {
  for (auto [n, L] : std::vector<std::pair<int, int>>{
           {2, 4}, {2, 8}, {3, 6}, {3, 12}, {4, 8}, {4, 12}, {5, 10}, {6, 12}}) {
    const SwapNetwork net = permutation_network(n, L);
    const std::uint64_t dim = 1ull << L;
    for (std::uint64_t z = 0; z < dim; ++z) {
      std::uint64_t cur = z;
      for (int step = 0; step < n; ++step) cur = net.apply(cur);
      REQUIRE(cur == z);
    }
  }
}

TEST_CASE("state periods divide the drive period") {
  const SwapNetwork net = permutation_network(4, 4);
  CHECK(state_period(from_pattern("^vv^"), net) == 2);
  CHECK(state_period(from_pattern("^^^^"), net) == 1);
  CHECK(state_period(from_pattern("v^^^"), net) == 4);
  for (std::uint64_t z = 0; z < 16; ++z)
    CHECK(4 % state_period(BasisState(z, 4), net) == 0);
}

TEST_CASE("orbits partition the basis") {
  SUBCASE("two sites, period two") {
    const auto orbits = decompose_orbits(permutation_network(2, 2));
    REQUIRE(orbits.size() == 3);
    std::multiset<int> periods;
    for (const auto& orbit : orbits) periods.insert(orbit.period);
    CHECK(periods == std::multiset<int>{1, 1, 2});
  }
  SUBCASE("sizes sum to the full dimension, states unique") {
    for (auto [n, L] : std::vector<std::pair<int, int>>{{4, 4}, {4, 8}, {3, 6}}) {
      const auto orbits = decompose_orbits(permutation_network(n, L));
      std::set<std::uint64_t> all;
      std::uint64_t total = 0;
      for (const auto& orbit : orbits) {
        CHECK(orbit.period == static_cast<int>(orbit.states.size()));
        CHECK(n % orbit.period == 0);
        total += orbit.states.size();
        for (const auto& s : orbit.states) all.insert(s.bits);
      }
      CHECK(total == (1ull << L));
      CHECK(all.size() == (1ull << L));
    }
  }
  SUBCASE("orbit ordering follows the permutation") {
    const SwapNetwork net = permutation_network(4, 8);
    for (const auto& orbit : decompose_orbits(net))
      for (std::size_t m = 0; m < orbit.states.size(); ++m)
        CHECK(net.apply(orbit.states[m].bits) ==
              orbit.states[(m + 1) % orbit.states.size()].bits);
  }
  SUBCASE("enumeration cap") {
    CHECK_THROWS_AS(decompose_orbits(permutation_network(2, 16), 14), size_error);
  }
}

TEST_CASE("full-period unit counts") {
  const SwapNetwork net = permutation_network(4, 8);
  const auto orbits = decompose_orbits(net);
  auto find_orbit = [&](std::uint64_t bits) {
    for (const auto& orbit : orbits)
      for (const auto& s : orbit.states)
        if (s.bits == bits) return orbit;
    FAIL("state not found");
    return orbits[0];
  };
  // One down spin in each 4-site unit: both units oscillate at full period.
  CHECK(find_orbit(from_pattern("v^^^v^^^").bits).full_period_units == 2);
  // Ferromagnetic: no full-period unit.
  CHECK(find_orbit(0).full_period_units == 0);
  // One unit frozen, one at full period.
  CHECK(find_orbit(from_pattern("^^^^v^^^").bits).full_period_units == 1);
  // Half-period unit (pattern symmetric under two steps) contributes nothing.
  CHECK(find_orbit(from_pattern("^vv^^^^^").bits).full_period_units == 0);
}

TEST_CASE("transition-mode units count charge oscillation period") {
  const SwapNetwork net = permutation_network(2, 4, 8);
  CHECK(net.period == 4);
  const auto orbits = decompose_orbits(net);
  auto count_for = [&](std::uint64_t bits) {
    for (const auto& orbit : orbits)
      for (const auto& s : orbit.states)
        if (s.bits == bits) return orbit.full_period_units;
    FAIL("state not found");
    return -1;
  };
  // One down per unit: charge pattern alternates with the full gcd period.
  CHECK(count_for(from_pattern("v^^^v^^^").bits) == 2);
  // Ferromagnetic states have constant charges.
  CHECK(count_for(0) == 0);
}

TEST_CASE("minimal-period state counts match brute force") {
  CHECK(count_min_period_states(1).at(1) == 2);
  CHECK(count_min_period_states(3).at(3) == 6);
  CHECK(count_min_period_states(4).at(4) == 12);  // 16 - C(1) - C(2)
  for (int p : {2, 3, 5, 7})
    CHECK(count_min_period_states(p).at(p) == (1ull << p) - 2);

  for (int n = 1; n <= 12; ++n) {
    const auto counts = count_min_period_states(n);
    std::uint64_t total = 0;
    for (auto [k, c] : counts) total += c;
    CHECK(total == (1ull << n));  // partition of all unit configurations
    if (n <= 10) {
      std::map<int, std::uint64_t> brute;
      for (std::uint64_t pattern = 0; pattern < (1ull << n); ++pattern)
        ++brute[rotation_period(pattern, n)];
      CHECK(brute == counts);
    }
  }
}

TEST_CASE("unit Hamming distance") {
  const BasisState a = from_pattern("v^^^v^^^");
  CHECK(unit_hamming_distance(a, a, 4) == 0);
  const BasisState b = from_pattern("v^v^v^^^");  // differs at site 2 only
  CHECK(unit_hamming_distance(a, b, 4) == 1);
  CHECK_THROWS_AS(unit_hamming_distance(a, b, 3), config_error);

  SUBCASE("metric properties on random triples") {
    SplitRng rng(7, 0, 0);
    for (int trial = 0; trial < 500; ++trial) {
      const BasisState x(rng.next_u64() & 0xff, 8);
      const BasisState y(rng.next_u64() & 0xff, 8);
      const BasisState z(rng.next_u64() & 0xff, 8);
      const int dxy = unit_hamming_distance(x, y, 4);
      CHECK(dxy >= 0);
      CHECK(dxy == unit_hamming_distance(y, x, 4));
      CHECK((dxy == 0) == (x.bits == y.bits));
      CHECK(dxy <= unit_hamming_distance(x, z, 4) +
                       unit_hamming_distance(z, y, 4));
    }
  }

  SUBCASE("distance between cycle members is at least the unit count") {
    const SwapNetwork net = permutation_network(4, 8);
    for (const auto& orbit : decompose_orbits(net)) {
      if (orbit.period != 4) continue;
      for (std::size_t m = 0; m < orbit.states.size(); ++m)
        for (std::size_t mp = m + 1; mp < orbit.states.size(); ++mp)
          CHECK(unit_hamming_distance(orbit.states[m], orbit.states[mp], 4) >=
                orbit.full_period_units);
    }
  }
}

TEST_CASE("basis state invariants") {
  CHECK_THROWS_AS(BasisState(0b10000, 4), config_error);
  const BasisState s = from_pattern("^v");
  CHECK(s.sz(0) == 1);
  CHECK(s.sz(1) == -1);
}
