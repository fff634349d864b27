#include "dtc/dynamics.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "dtc/errors.hpp"

namespace dtc {

using cxd = std::complex<double>;
constexpr cxd kI{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

Trajectory evolve_stroboscopic(const FloquetOperator& op,
                               const BasisState& initial, int n_max,
                               const std::vector<DiagonalObservable>& charges,
                               double drift_tol) {
  if (n_max < 1) throw config_error("need at least one period");
  const int dim = op.dim();
  if (initial.bits >= static_cast<std::uint64_t>(dim))
    throw config_error("initial state outside the Hilbert space");

  Trajectory traj;
  traj.initial = initial;
  traj.expectations.resize(n_max + 1, charges.size());
  Eigen::VectorXcd state = Eigen::VectorXcd::Zero(dim);
  state(initial.bits) = 1.0;
  for (int step = 0; step <= n_max; ++step) {
    const Eigen::VectorXd density = state.cwiseAbs2();
    for (std::size_t c = 0; c < charges.size(); ++c)
      traj.expectations(step, c) = charges[c].diag.dot(density);
    if (std::abs(density.sum() - 1.0) > drift_tol)
      throw numerical_error("state norm drifted by more than tolerance at step " +
                            std::to_string(step));
    if (step < n_max) state = op.matrix * state;
  }
  return traj;
}

StroboscopicPropagator::StroboscopicPropagator(const FloquetOperator& op)
    : spec_(diagonalize_unitary(op.matrix)) {}

Eigen::VectorXcd StroboscopicPropagator::state_at(const BasisState& initial,
                                                  long periods) const {
  const int dim = spec_.dim();
  if (initial.bits >= static_cast<std::uint64_t>(dim))
    throw config_error("initial state outside the Hilbert space");
  const Eigen::VectorXcd amplitudes =
      spec_.vectors.row(initial.bits).conjugate().transpose();
  Eigen::VectorXcd phased(dim);
  for (int i = 0; i < dim; ++i)
    phased(i) =
        amplitudes(i) * std::exp(-kI * (spec_.energies(i) * double(periods)));
  return spec_.vectors * phased;
}

UnitProbe unit_probe(int unit, int n_probe,
                     const std::vector<DiagonalObservable>& charges) {
  UnitProbe probe;
  probe.unit = unit;
  int found = 0;
  for (const auto& charge : charges) {
    if (charge.unit != unit || charge.slot >= n_probe) continue;
    const cxd weight = std::exp(-kI * ((charge.slot + 1) * 2 * kPi / n_probe));
    if (probe.diag.size() == 0)
      probe.diag = Eigen::VectorXcd::Zero(charge.diag.size());
    probe.diag += weight * charge.diag.cast<cxd>();
    ++found;
  }
  if (found != n_probe)
    throw config_error("unit " + std::to_string(unit) + " has " +
                       std::to_string(found) + " slots, expected " +
                       std::to_string(n_probe));
  return probe;
}

std::vector<BasisState> one_down_per_unit_states(
    const std::vector<std::vector<int>>& relabel, int num_sites) {
  std::vector<std::uint64_t> partial{0};
  for (const auto& unit_sites : relabel) {
    std::vector<std::uint64_t> next;
    for (std::uint64_t base : partial)
      for (int site : unit_sites) next.push_back(base | (1ull << site));
    partial = std::move(next);
  }
  std::vector<BasisState> states;
  states.reserve(partial.size());
  for (std::uint64_t bits : partial) states.emplace_back(bits, num_sites);
  return states;
}

SubharmonicSeries subharmonic_series(
    const FloquetOperator& op, const std::vector<DiagonalObservable>& charges,
    int n_probe, int n_max, const std::vector<BasisState>& initials,
    double expectation_floor, double drift_tol) {
  if (initials.empty()) throw config_error("empty initial-state set");
  const int dim = op.dim();
  const int num_states = static_cast<int>(initials.size());

  int num_units = 0;
  for (const auto& charge : charges)
    num_units = std::max(num_units, charge.unit + 1);
  std::vector<UnitProbe> probes;
  for (int unit = 0; unit < num_units; ++unit)
    probes.push_back(unit_probe(unit, n_probe, charges));

  // Evolve the whole initial family as one block.
  Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(dim, num_states);
  for (int s = 0; s < num_states; ++s) {
    if (initials[s].bits >= static_cast<std::uint64_t>(dim))
      throw config_error("initial state outside the Hilbert space");
    block(initials[s].bits, s) = 1.0;
  }

  // Initial probe expectations; states below the floor are excluded from
  // that unit's average.
  Eigen::MatrixXcd reference(num_units, num_states);
  for (int u = 0; u < num_units; ++u)
    for (int s = 0; s < num_states; ++s)
      reference(u, s) = probes[u].diag(initials[s].bits);
  int valid_total = 0;
  for (int u = 0; u < num_units; ++u)
    for (int s = 0; s < num_states; ++s)
      if (std::abs(reference(u, s)) >= expectation_floor) ++valid_total;
  if (valid_total == 0)
    throw config_error("no initial state has a nonzero probe expectation");

  SubharmonicSeries series;
  series.values.resize(n_max + 1);
  series.n_probe = n_probe;
  series.lambda = op.config.lambda;
  series.num_sites = op.config.num_sites;

  for (int step = 0; step <= n_max; ++step) {
    const Eigen::MatrixXd density = block.cwiseAbs2();
    cxd unit_mean = 0.0;
    for (int u = 0; u < num_units; ++u) {
      cxd state_mean = 0.0;
      int valid = 0;
      for (int s = 0; s < num_states; ++s) {
        if (std::abs(reference(u, s)) < expectation_floor) continue;
        const cxd value =
            (probes[u].diag.array() * density.col(s).array().cast<cxd>())
                .sum();
        state_mean += value / reference(u, s);
        ++valid;
      }
      if (valid > 0) unit_mean += state_mean / double(valid);
    }
    series.values(step) = unit_mean / double(num_units);

    const double worst_drift =
        (density.colwise().sum().array() - 1.0).abs().maxCoeff();
    if (worst_drift > drift_tol)
      throw numerical_error("block norm drifted beyond tolerance at step " +
                            std::to_string(step));
    if (step < n_max) block = op.matrix * block;
  }
  return series;
}

FourierResult fourier_analysis(const Eigen::VectorXcd& series) {
  const int size = static_cast<int>(series.size());
  if (size < 2) throw config_error("series too short for a transform");
  std::vector<cxd> in(series.data(), series.data() + size), out(size);
  Eigen::FFT<double> fft;
  fft.fwd(out, in);

  FourierResult result;
  result.frequencies.resize(size);
  result.magnitudes.resize(size);
  double total = 0.0;
  for (int q = 0; q < size; ++q) {
    result.frequencies(q) = double(q) / size;
    result.magnitudes(q) = std::abs(out[q]) / size;
    total += result.magnitudes(q) * result.magnitudes(q);
  }
  int peak = 0;
  result.peak_magnitude = result.magnitudes.maxCoeff(&peak);
  result.peak_frequency = result.frequencies(peak);
  result.peak_weight =
      total > 0 ? result.peak_magnitude * result.peak_magnitude / total : 0.0;
  return result;
}

double spectral_weight_near(const FourierResult& result, double center,
                            double half_width) {
  double total = 0.0, near = 0.0;
  for (int q = 0; q < result.frequencies.size(); ++q) {
    const double w = result.magnitudes(q) * result.magnitudes(q);
    total += w;
    double dist = std::abs(result.frequencies(q) - center);
    dist = std::min(dist, 1.0 - dist);  // frequency axis is circular
    if (dist <= half_width) near += w;
  }
  return total > 0 ? near / total : 0.0;
}

void export_series_csv(const SubharmonicSeries& series,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open " + path + " for writing");
  out.precision(15);
  out << "N,re_A,im_A,abs_A,arg_A\n";
  for (int n = 0; n < series.values.size(); ++n) {
    const cxd a = series.values(n);
    out << n << "," << a.real() << "," << a.imag() << "," << std::abs(a) << ","
        << std::arg(a) << "\n";
  }
}

void export_fourier_csv(const FourierResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open " + path + " for writing");
  out.precision(15);
  out << "omega_over_omega0,magnitude\n";
  for (int q = 0; q < result.frequencies.size(); ++q)
    out << result.frequencies(q) << "," << result.magnitudes(q) << "\n";
}

}  // namespace dtc
