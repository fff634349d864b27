#include "dtc/basis.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "dtc/errors.hpp"

namespace dtc {

BasisState::BasisState(std::uint64_t bits, int num_sites)
    : bits(bits), num_sites(num_sites) {
  if (num_sites < 1 || num_sites > 63)
    throw config_error("basis state needs 1..63 sites");
  if (bits >> num_sites)
    throw config_error("basis state has bits beyond the chain length");
}

std::uint64_t SwapNetwork::apply(std::uint64_t state_bits) const {
  std::uint64_t out = 0;
  for (int i = 0; i < num_sites; ++i)
    out |= ((state_bits >> i) & 1ull) << site_map[i];
  return out;
}

BasisState SwapNetwork::apply(const BasisState& state) const {
  return BasisState(apply(state.bits), state.num_sites);
}

std::pair<std::vector<std::pair<int, int>>, std::vector<std::pair<int, int>>>
layer_bonds(int n, int num_sites) {
  const int L = num_sites;
  std::vector<std::pair<int, int>> odd, even;
  if (n % 2 == 0) {
    // Odd bonds (1,2),(3,4),... never touch a unit boundary for even n.
    for (int i = 0; i + 1 < L; i += 2) odd.emplace_back(i, i + 1);
    // Even bonds minus the unit-boundary bonds (n, n+1), (2n, 2n+1), ...
    for (int i = 1; i + 1 < L; i += 2)
      if ((i + 1) % n != 0) even.emplace_back(i, i + 1);
  } else {
    // Odd n: 2n-site units; the mid-unit bond ((2i-1)n, (2i-1)n+1) is an
    // odd bond and is excluded, the unit boundary (2ni, 2ni+1) is even.
    for (int i = 0; i + 1 < L; i += 2)
      if ((i + 1) % n != 0 || ((i + 1) / n) % 2 == 0) odd.emplace_back(i, i + 1);
    for (int i = 1; i + 1 < L; i += 2)
      if ((i + 1) % (2 * n) != 0) even.emplace_back(i, i + 1);
  }
  return {odd, even};
}

namespace {

void check_divisibility(int n, int num_sites) {
  if (n < 1) throw config_error("drive period must be >= 1");
  if (num_sites < 2) throw config_error("need at least 2 sites");
  const int unit = (n % 2 == 0) ? n : 2 * n;
  if (num_sites % unit != 0)
    throw config_error("chain length " + std::to_string(num_sites) +
                       " is not divisible by the " + std::to_string(unit) +
                       "-site permutation unit");
}

SwapNetwork assemble_network(int n, int num_sites) {
  check_divisibility(n, num_sites);
  SwapNetwork net;
  net.num_sites = num_sites;
  net.period = n;
  auto [odd, even] = layer_bonds(n, num_sites);
  net.layers = {odd, even};

  net.site_map.resize(num_sites);
  std::iota(net.site_map.begin(), net.site_map.end(), 0);
  for (const auto& layer : net.layers)
    for (auto [a, b] : layer)
      for (int i = 0; i < num_sites; ++i) {
        if (net.site_map[i] == a)
          net.site_map[i] = b;
        else if (net.site_map[i] == b)
          net.site_map[i] = a;
      }
  net.inverse_site_map.resize(num_sites);
  for (int i = 0; i < num_sites; ++i) net.inverse_site_map[net.site_map[i]] = i;
  return net;
}

int cycle_period(const std::vector<int>& perm, std::uint64_t bits,
                 const std::vector<int>& sites, int cap) {
  // Period of the bit pattern restricted to `sites` under `perm` (which must
  // map `sites` onto itself).
  auto step = [&](std::uint64_t b) {
    std::uint64_t out = b;
    for (int s : sites) {
      out &= ~(1ull << perm[s]);
      out |= ((b >> s) & 1ull) << perm[s];
    }
    return out;
  };
  std::uint64_t cur = step(bits);
  int k = 1;
  while (cur != bits) {
    cur = step(cur);
    if (++k > cap) throw std::logic_error("unit pattern period exceeds cap");
  }
  return k;
}

/// Site sequence visited by one logical cycle of the permutation, starting
/// from `start`: start, perm^{-1}(start), perm^{-2}(start), ...
std::vector<int> logical_cycle(const SwapNetwork& net, int start) {
  std::vector<int> seq;
  int s = start;
  do {
    seq.push_back(s);
    s = net.inverse_site_map[s];
  } while (s != start);
  return seq;
}

int full_period_unit_count(const SwapNetwork& net, std::uint64_t bits) {
  if (net.mode == SwapNetwork::Mode::Single) {
    const int u = net.unit_sites();
    int count = 0;
    for (int base = 0; base < net.num_sites; base += u) {
      std::vector<int> sites(u);
      std::iota(sites.begin(), sites.end(), base);
      if (cycle_period(net.site_map, bits, sites, net.period) == net.period)
        ++count;
    }
    return count;
  }
  // Transition mode: count lcm-site units whose charge configuration
  // oscillates with the full gcd period.
  const int n_l = net.period;
  const int n_g = std::gcd(net.n1, net.n2);
  const int groups = n_l / n_g;
  int count = 0;
  for (int base = 0; base < net.num_sites; base += n_l) {
    std::vector<int> seq = logical_cycle(net, base);
    if (static_cast<int>(seq.size()) != n_l)
      throw std::logic_error("relabel cycle length does not match the unit");
    std::vector<int> q(n_g, 0);
    for (int j = 0; j < n_g; ++j)
      for (int m = 0; m < groups; ++m) {
        int site = seq[j + m * n_g];
        q[j] += ((bits >> site) & 1ull) ? -1 : +1;
      }
    // smallest cyclic period of the charge tuple
    int period = n_g;
    for (int k = 1; k < n_g; ++k) {
      if (n_g % k != 0) continue;
      bool match = true;
      for (int j = 0; j < n_g && match; ++j) match = (q[j] == q[(j + k) % n_g]);
      if (match) {
        period = k;
        break;
      }
    }
    if (period == n_g) ++count;
  }
  return count;
}

}  // namespace

SwapNetwork permutation_network(int n, int num_sites) {
  return assemble_network(n, num_sites);
}

SwapNetwork permutation_network(int n1, int n2, int num_sites) {
  if (n1 < 1 || n2 < 1) throw config_error("transition periods must be >= 1");
  const int n_l = std::lcm(n1, n2);
  SwapNetwork net = assemble_network(n_l, num_sites);
  net.mode = SwapNetwork::Mode::Transition;
  net.n1 = n1;
  net.n2 = n2;
  return net;
}

int state_period(const BasisState& state, const SwapNetwork& network) {
  if (state.num_sites != network.num_sites)
    throw config_error("state/network size mismatch");
  std::uint64_t cur = network.apply(state.bits);
  int k = 1;
  while (cur != state.bits) {
    cur = network.apply(cur);
    if (++k > network.period)
      throw std::logic_error("state period exceeds the drive period");
  }
  return k;
}

std::vector<Orbit> decompose_orbits(const SwapNetwork& network, int max_sites) {
  const int L = network.num_sites;
  if (L > max_sites)
    throw size_error("orbit enumeration over 2^" + std::to_string(L) +
                     " states exceeds the " + std::to_string(max_sites) +
                     "-site cap");
  const std::uint64_t dim = 1ull << L;
  std::vector<bool> seen(dim, false);
  std::vector<Orbit> orbits;
  for (std::uint64_t z = 0; z < dim; ++z) {
    if (seen[z]) continue;
    Orbit orbit;
    orbit.sector_id = static_cast<int>(orbits.size());
    std::uint64_t cur = z;
    do {
      seen[cur] = true;
      orbit.states.emplace_back(cur, L);
      cur = network.apply(cur);
    } while (cur != z);
    orbit.period = static_cast<int>(orbit.states.size());
    orbit.full_period_units = full_period_unit_count(network, z);
    orbits.push_back(std::move(orbit));
  }
  return orbits;
}

std::vector<int> divisors(int n) {
  std::vector<int> out;
  for (int k = 1; k <= n; ++k)
    if (n % k == 0) out.push_back(k);
  return out;
}

std::map<int, std::uint64_t> count_min_period_states(int n) {
  if (n < 1) throw config_error("period must be >= 1");
  std::map<int, std::uint64_t> counts;
  for (int k : divisors(n)) {
    std::uint64_t c = 1ull << k;
    for (int kp : divisors(k))
      if (kp < k) c -= counts.at(kp);
    counts[k] = c;
  }
  return counts;
}

int unit_hamming_distance(const BasisState& a, const BasisState& b,
                          int unit_len) {
  if (a.num_sites != b.num_sites) throw config_error("state size mismatch");
  if (unit_len < 1 || a.num_sites % unit_len != 0)
    throw config_error("unit length must divide the chain length");
  const std::uint64_t diff = a.bits ^ b.bits;
  const std::uint64_t mask = (unit_len == 64) ? ~0ull : (1ull << unit_len) - 1;
  int d = 0;
  for (int base = 0; base < a.num_sites; base += unit_len)
    if ((diff >> base) & mask) ++d;
  return d;
}

}  // namespace dtc
