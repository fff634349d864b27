#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace dtc {

/// A length-L spin-1/2 configuration in the Z basis. Site 0 is the
/// least-significant bit; a set bit means spin down (sigma^z = -1).
struct BasisState {
  std::uint64_t bits = 0;
  int num_sites = 0;

  BasisState() = default;
  BasisState(std::uint64_t bits, int num_sites);

  bool down(int site) const { return (bits >> site) & 1ull; }
  /// sigma^z eigenvalue at a site: +1 for up, -1 for down.
  int sz(int site) const { return down(site) ? -1 : +1; }

  friend bool operator==(const BasisState&, const BasisState&) = default;
};

/// One layer of disjoint swaps plus the composite one-period site
/// permutation of the driving. `site_map[i]` is where the spin at site i
/// sits after one period.
struct SwapNetwork {
  enum class Mode { Single, Transition };

  int num_sites = 0;
  /// Drive period of the permutation: n, or lcm(n1, n2) in transition mode.
  int period = 1;
  Mode mode = Mode::Single;
  int n1 = 0, n2 = 0;  // transition endpoints (Transition mode only)

  /// Ordered layers, applied first to last; each layer is a set of
  /// disjoint site pairs.
  std::vector<std::vector<std::pair<int, int>>> layers;

  std::vector<int> site_map;          // composite permutation
  std::vector<int> inverse_site_map;  // site_map^{-1}

  /// Spatial permutation unit size: period for even period, 2*period odd.
  int unit_sites() const { return (period % 2 == 0) ? period : 2 * period; }
  int num_units() const { return num_sites / unit_sites(); }

  /// Applies one full period of the permutation to a bit pattern.
  std::uint64_t apply(std::uint64_t state_bits) const;
  BasisState apply(const BasisState& state) const;
};

/// A dynamically closed cycle of Z-basis states under the unperturbed
/// one-period permutation. `states[m+1 mod k]` is the image of `states[m]`.
struct Orbit {
  std::vector<BasisState> states;
  int period = 0;            // k, divides the network period
  int full_period_units = 0; // number of units oscillating at the full period
  int sector_id = -1;
};

/// Two-layer swap network for the n-tuple model: the odd-bond layer and the
/// even-bond layer with unit-boundary bonds removed. Requires n | L for even
/// n and 2n | L for odd n; violations raise config_error.
SwapNetwork permutation_network(int n, int num_sites);

/// Network for the transition model n1 -> n2, built on lcm(n1, n2)-site
/// units (this is the permutation both endpoint models share charges with).
SwapNetwork permutation_network(int n1, int n2, int num_sites);

/// Bond lists (0-based site pairs) of the two swap layers for period n,
/// after boundary exclusions. Shared by the network builder and the swap
/// Hamiltonian assembly.
std::pair<std::vector<std::pair<int, int>>, std::vector<std::pair<int, int>>>
layer_bonds(int n, int num_sites);

/// Smallest k >= 1 with network^k(state) = state; always divides the
/// network period.
int state_period(const BasisState& state, const SwapNetwork& network);

/// Partitions all 2^L basis states into orbits. Enumeration is O(2^L); sizes
/// beyond `max_sites` raise size_error.
std::vector<Orbit> decompose_orbits(const SwapNetwork& network,
                                    int max_sites = 14);

/// C(k) for all divisors k of n: the number of single-unit configurations
/// whose smallest period under the unit permutation is exactly k.
/// Satisfies sum_{k|n} C(k) = 2^n.
std::map<int, std::uint64_t> count_min_period_states(int n);

/// Number of unit_len-site blocks on which two states differ.
int unit_hamming_distance(const BasisState& a, const BasisState& b,
                          int unit_len);

std::vector<int> divisors(int n);

}  // namespace dtc
