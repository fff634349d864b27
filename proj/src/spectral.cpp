#include "dtc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "dtc/errors.hpp"

namespace dtc {

using cxd = std::complex<double>;
constexpr cxd kI{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

double wrap_angle(double angle) {
  double w = std::remainder(angle, 2 * kPi);
  if (w <= -kPi) w += 2 * kPi;
  return w;
}

double circle_distance(double a, double b) {
  return std::abs(std::remainder(a - b, 2 * kPi));
}

double QuasiSpectrum::max_residual(const Eigen::MatrixXcd& u) const {
  double worst = 0.0;
  for (int i = 0; i < dim(); ++i) {
    const Eigen::VectorXcd r =
        u * vectors.col(i) - std::exp(-kI * energies(i)) * vectors.col(i);
    worst = std::max(worst, r.norm());
  }
  return worst;
}

namespace {

void sort_spectrum(QuasiSpectrum& spec) {
  const int d = spec.dim();
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return spec.energies(a) < spec.energies(b);
  });
  Eigen::VectorXd energies(d);
  Eigen::MatrixXcd vectors(spec.vectors.rows(), d);
  std::vector<QuasiSpectrum::Label> labels;
  if (!spec.labels.empty()) labels.resize(d);
  for (int i = 0; i < d; ++i) {
    energies(i) = spec.energies(order[i]);
    vectors.col(i) = spec.vectors.col(order[i]);
    if (!spec.labels.empty()) labels[i] = spec.labels[order[i]];
  }
  spec.energies = std::move(energies);
  spec.vectors = std::move(vectors);
  spec.labels = std::move(labels);
}

double unitarity_defect(const Eigen::MatrixXcd& u) {
  return (u.adjoint() * u -
          Eigen::MatrixXcd::Identity(u.rows(), u.cols()))
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace

QuasiSpectrum diagonalize_unitary(const Eigen::MatrixXcd& u,
                                  const DiagonalizeOptions& options) {
  if (u.rows() != u.cols()) throw numerical_error("matrix is not square");
  const int d = static_cast<int>(u.rows());
  if (unitarity_defect(u) > options.unitarity_tol)
    throw numerical_error("input is not unitary to tolerance");

  QuasiSpectrum spec;
  spec.energies.resize(d);
  if (d == 1) {
    spec.vectors = Eigen::MatrixXcd::Ones(1, 1);
    spec.energies(0) = wrap_angle(-std::arg(u(0, 0)));
    return spec;
  }

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(u);
  if (schur.info() != Eigen::Success)
    throw numerical_error("Schur decomposition failed");
  spec.vectors = schur.matrixU();
  for (int i = 0; i < d; ++i) {
    // Eigenvalues of a normal matrix sit on the Schur diagonal; push them
    // onto the unit circle before reading the phase.
    const cxd lambda = schur.matrixT()(i, i);
    spec.energies(i) = wrap_angle(-std::arg(lambda));
  }
  sort_spectrum(spec);

  // Re-diagonalize within (near-)degenerate clusters, where the Schur basis
  // only spans the invariant subspace.
  int begin = 0;
  while (begin < d) {
    int end = begin + 1;
    while (end < d &&
           circle_distance(spec.energies(end), spec.energies(end - 1)) <
               options.cluster_tol)
      ++end;
    const int size = end - begin;
    if (size > 1) {
      const Eigen::MatrixXcd basis = spec.vectors.middleCols(begin, size);
      const Eigen::MatrixXcd small = basis.adjoint() * u * basis;
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(small);
      if (solver.info() != Eigen::Success)
        throw numerical_error("cluster re-diagonalization failed");
      // Orthonormalize the refined directions.
      Eigen::HouseholderQR<Eigen::MatrixXcd> qr(solver.eigenvectors());
      Eigen::MatrixXcd q = qr.householderQ() *
                           Eigen::MatrixXcd::Identity(size, size);
      std::vector<std::pair<double, int>> cluster(size);
      for (int i = 0; i < size; ++i)
        cluster[i] = {wrap_angle(-std::arg(solver.eigenvalues()(i))), i};
      std::sort(cluster.begin(), cluster.end());
      Eigen::MatrixXcd refined(d, size);
      for (int i = 0; i < size; ++i) {
        spec.energies(begin + i) = cluster[i].first;
        refined.col(i) = basis * q.col(cluster[i].second);
      }
      spec.vectors.middleCols(begin, size) = refined;
    }
    begin = end;
  }
  return spec;
}

CycleEigensystem solvable_spectrum(const std::vector<double>& entering_phases) {
  const int k = static_cast<int>(entering_phases.size());
  if (k < 1) throw config_error("empty cycle");
  const double mean =
      std::accumulate(entering_phases.begin(), entering_phases.end(), 0.0) / k;

  CycleEigensystem sys;
  sys.energies.resize(k);
  sys.coefficients.resize(k, k);
  sys.ladder_index.resize(k);
  for (int j = 1; j <= k; ++j) {
    sys.energies(j - 1) = wrap_angle(mean + j * 2 * kPi / k);
    sys.ladder_index[j - 1] = j;
    for (int m = 1; m <= k; ++m) {
      double theta = 0.0;
      for (int i = 1; i <= k; ++i)
        theta += (((m - i) % k + k) % k) * entering_phases[i - 1];
      theta /= k;
      sys.coefficients(m - 1, j - 1) =
          std::exp(kI * (theta + m * j * 2 * kPi / k)) / std::sqrt(double(k));
    }
  }
  // Sort the ladder by quasi-energy.
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return sys.energies(a) < sys.energies(b); });
  CycleEigensystem sorted;
  sorted.energies.resize(k);
  sorted.coefficients.resize(k, k);
  sorted.ladder_index.resize(k);
  for (int i = 0; i < k; ++i) {
    sorted.energies(i) = sys.energies(order[i]);
    sorted.coefficients.col(i) = sys.coefficients.col(order[i]);
    sorted.ladder_index[i] = sys.ladder_index[order[i]];
  }
  return sorted;
}

QuasiSpectrum solvable_point_spectrum(const SwapNetwork& network,
                                      const DisorderRealization& realization,
                                      double t3,
                                      const std::vector<Orbit>* orbits_in) {
  std::vector<Orbit> computed;
  if (!orbits_in) {
    computed = decompose_orbits(network);
    orbits_in = &computed;
  }
  const int L = network.num_sites;
  const std::uint64_t dim = 1ull << L;
  QuasiSpectrum spec;
  spec.energies.resize(dim);
  spec.vectors = Eigen::MatrixXcd::Zero(dim, dim);
  spec.labels.resize(dim);
  int col = 0;
  for (const auto& orbit : *orbits_in) {
    std::vector<double> phases(orbit.period);
    for (int m = 0; m < orbit.period; ++m)
      phases[m] = interaction_energy(orbit.states[m].bits, realization, L) * t3;
    const CycleEigensystem sys = solvable_spectrum(phases);
    for (int j = 0; j < orbit.period; ++j, ++col) {
      spec.energies(col) = sys.energies(j);
      for (int m = 0; m < orbit.period; ++m)
        spec.vectors(orbit.states[m].bits, col) = sys.coefficients(m, j);
      spec.labels[col] = {orbit.sector_id, sys.ladder_index[j], orbit.period};
    }
  }
  sort_spectrum(spec);
  return spec;
}

GapStatistics gap_statistics(const Eigen::VectorXd& sorted_energies,
                             double clamp_floor) {
  const int n = static_cast<int>(sorted_energies.size());
  if (n < 2) throw insufficient_data_error("need at least two levels");
  GapStatistics stats;
  stats.spacings.resize(n);
  for (int i = 0; i + 1 < n; ++i)
    stats.spacings(i) = sorted_energies(i + 1) - sorted_energies(i);
  stats.spacings(n - 1) =
      sorted_energies(0) + 2 * kPi - sorted_energies(n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = stats.spacings(i);
    if (s < clamp_floor) {
      s = clamp_floor;
      ++stats.clamped;
    }
    acc += std::log10(s);
  }
  stats.mean_log10 = acc / n;
  return stats;
}

SubspaceGapDeviation subspace_gap_deviation(const Eigen::VectorXd& energies,
                                            int n, double clamp_floor) {
  const int m = static_cast<int>(energies.size());
  if (n < 1 || m == 0 || m % n != 0)
    throw labeling_error("sector cardinality " + std::to_string(m) +
                         " is not a positive multiple of " + std::to_string(n));
  Eigen::VectorXd sorted = energies;
  std::sort(sorted.data(), sorted.data() + m);
  const int stride = m / n;
  SubspaceGapDeviation result;
  result.deviations.resize(m);
  for (int i = 0; i < m; ++i) {
    const int partner = (i + stride) % m;
    double delta = sorted(partner) - sorted(i);
    if (partner <= i) delta += 2 * kPi;
    result.deviations(i) = std::abs(delta - 2 * kPi / n);
  }
  result.max = result.deviations.maxCoeff();
  result.log10_max = std::log10(std::max(result.max, clamp_floor));
  return result;
}

namespace {

/// Minimum-cost rectangular assignment (rows <= cols), shortest augmenting
/// paths with potentials. Returns the column matched to each row.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n > m) throw std::logic_error("assignment needs rows <= cols");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, n);  // p[j] = row matched to column j (n = none)
  std::vector<int> way(m + 1, 0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    int j0 = m;  // virtual start column
    p[j0] = i;
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 0; j < m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != n);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != m);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 0; j < m; ++j)
    if (p[j] != n) row_to_col[p[j]] = j;
  return row_to_col;
}

}  // namespace

EigenMatch match_eigenstates(const QuasiSpectrum& unperturbed,
                             const QuasiSpectrum& perturbed,
                             const std::vector<int>& subset,
                             double energy_window,
                             double ambiguity_threshold) {
  const int rows = static_cast<int>(subset.size());
  if (rows == 0) throw config_error("empty matching subset");
  const int full = perturbed.dim();
  if (rows > full) throw config_error("subset larger than the spectrum");

  // Candidate columns: union of per-row quasi-energy windows. Rows with no
  // candidate in the window fall back to the full column set.
  std::vector<char> in_window(full, 0);
  bool widen_all = false;
  for (int r = 0; r < rows; ++r) {
    const double e0 = unperturbed.energies(subset[r]);
    bool any = false;
    for (int c = 0; c < full; ++c)
      if (circle_distance(e0, perturbed.energies(c)) <= energy_window) {
        in_window[c] = 1;
        any = true;
      }
    if (!any) widen_all = true;
  }
  std::vector<int> columns;
  for (int c = 0; c < full; ++c)
    if (widen_all || in_window[c]) columns.push_back(c);
  if (static_cast<int>(columns.size()) < rows) {
    columns.resize(full);
    std::iota(columns.begin(), columns.end(), 0);
  }

  Eigen::MatrixXd cost(rows, columns.size());
  Eigen::MatrixXd overlap(rows, columns.size());
  for (int r = 0; r < rows; ++r) {
    const double e0 = unperturbed.energies(subset[r]);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const bool windowed =
          widen_all || circle_distance(e0, perturbed.energies(columns[c])) <=
                           energy_window;
      const double ov =
          windowed ? std::abs(unperturbed.vectors.col(subset[r])
                                  .dot(perturbed.vectors.col(columns[c])))
                   : 0.0;
      overlap(r, c) = ov;
      cost(r, c) = -ov * ov;
    }
  }
  const std::vector<int> assignment = min_cost_assignment(cost);

  EigenMatch match;
  match.source = subset;
  match.matched.resize(rows);
  match.overlaps.resize(rows);
  for (int r = 0; r < rows; ++r) {
    match.matched[r] = columns[assignment[r]];
    match.overlaps(r) = overlap(r, assignment[r]);
  }
  match.min_overlap = match.overlaps.minCoeff();
  match.ambiguous = match.min_overlap < ambiguity_threshold;
  return match;
}

double level_ratio(const Eigen::VectorXd& sorted_energies) {
  const int n = static_cast<int>(sorted_energies.size());
  if (n < 3) throw insufficient_data_error("need at least three levels for r");
  const GapStatistics stats = gap_statistics(sorted_energies, 0.0);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = stats.spacings(i);
    const double b = stats.spacings((i + 1) % n);
    const double hi = std::max(a, b);
    acc += (hi <= 0.0) ? 1.0 : std::min(a, b) / hi;
  }
  return acc / n;
}

std::vector<int> dynamical_subspace(const Eigen::MatrixXcd& u,
                                    const BasisState& seed, double tol) {
  const int dim = static_cast<int>(u.rows());
  if (seed.bits >= static_cast<std::uint64_t>(dim))
    throw config_error("seed outside the Hilbert space");
  std::vector<char> in_set(dim, 0);
  std::deque<int> frontier;
  in_set[seed.bits] = 1;
  frontier.push_back(static_cast<int>(seed.bits));
  while (!frontier.empty()) {
    const int j = frontier.front();
    frontier.pop_front();
    for (int i = 0; i < dim; ++i) {
      if (in_set[i]) continue;
      if (std::abs(u(i, j)) > tol || std::abs(u(j, i)) > tol) {
        in_set[i] = 1;
        frontier.push_back(i);
      }
    }
  }
  std::vector<int> support;
  for (int i = 0; i < dim; ++i)
    if (in_set[i]) support.push_back(i);
  return support;
}

namespace {

Eigen::MatrixXcd submatrix(const Eigen::MatrixXcd& u,
                           const std::vector<int>& idx) {
  Eigen::MatrixXcd sub(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c)
      sub(r, c) = u(idx[r], idx[c]);
  return sub;
}

}  // namespace

double subspace_level_ratio(const Eigen::MatrixXcd& u, const BasisState& seed,
                            double tol) {
  const std::vector<int> support = dynamical_subspace(u, seed, tol);
  if (support.size() < 3)
    throw insufficient_data_error("dynamical subspace has fewer than 3 states");
  DiagonalizeOptions options;
  options.unitarity_tol = 1e-8;  // closure leakage below tol per element
  const QuasiSpectrum spec = diagonalize_unitary(submatrix(u, support), options);
  return level_ratio(spec.energies);
}

std::vector<SectorSpectrum> sector_spectra(const Eigen::MatrixXcd& u,
                                           const std::vector<int>& family,
                                           int n, double group_tol) {
  if (family.empty()) throw labeling_error("empty basis family");
  DiagonalizeOptions options;
  options.unitarity_tol = 1e-8;
  const QuasiSpectrum spec = diagonalize_unitary(submatrix(u, family), options);
  const int fdim = spec.dim();

  // Ladders of the same sector share n * energy modulo 2pi.
  std::vector<int> order(fdim);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> key(fdim);
  for (int i = 0; i < fdim; ++i) key[i] = wrap_angle(n * spec.energies(i));
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return key[a] < key[b]; });

  std::vector<std::vector<int>> groups;
  for (int idx : order) {
    if (!groups.empty() &&
        circle_distance(key[groups.back().back()], key[idx]) < group_tol)
      groups.back().push_back(idx);
    else
      groups.push_back({idx});
  }
  // The key is circular: merge the first and last groups if they touch.
  if (groups.size() > 1 &&
      circle_distance(key[groups.front().front()], key[groups.back().back()]) <
          group_tol) {
    groups.front().insert(groups.front().end(), groups.back().begin(),
                          groups.back().end());
    groups.pop_back();
  }

  std::vector<SectorSpectrum> sectors;
  for (const auto& group : groups) {
    if (group.size() % n != 0)
      throw labeling_error("sector of size " + std::to_string(group.size()) +
                           " is not a multiple of the probe period");
    SectorSpectrum sector;
    sector.energies.resize(group.size());
    sector.vectors =
        Eigen::MatrixXcd::Zero(u.rows(), static_cast<int>(group.size()));
    std::vector<int> sorted_group = group;
    std::sort(sorted_group.begin(), sorted_group.end(), [&](int a, int b) {
      return spec.energies(a) < spec.energies(b);
    });
    for (std::size_t i = 0; i < sorted_group.size(); ++i) {
      sector.energies(i) = spec.energies(sorted_group[i]);
      for (std::size_t f = 0; f < family.size(); ++f)
        sector.vectors(family[f], i) = spec.vectors(f, sorted_group[i]);
    }
    sectors.push_back(std::move(sector));
  }
  return sectors;
}

void export_spectrum_csv(const QuasiSpectrum& spectrum, const std::string& path,
                         const Eigen::VectorXd* overlaps) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open " + path + " for writing");
  out.precision(15);
  out << "index,quasi_energy,sector,j,k";
  if (overlaps) out << ",overlap";
  out << "\n";
  for (int i = 0; i < spectrum.dim(); ++i) {
    const QuasiSpectrum::Label label =
        spectrum.labels.empty() ? QuasiSpectrum::Label{} : spectrum.labels[i];
    out << i << "," << spectrum.energies(i) << "," << label.sector << ","
        << label.j << "," << label.k;
    if (overlaps) out << "," << (*overlaps)(i);
    out << "\n";
  }
}

}  // namespace dtc
