#include "dtc/charges.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <numeric>

#include "dtc/errors.hpp"

namespace dtc {

using cxd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

std::vector<std::vector<int>> relabel_sites(const SwapNetwork& network) {
  const int cycle = network.period;
  std::vector<std::vector<int>> relabel;
  for (int base = 0; base < network.num_sites; base += cycle) {
    std::vector<int> seq;
    int site = base;
    do {
      seq.push_back(site);
      site = network.inverse_site_map[site];
    } while (site != base);
    if (static_cast<int>(seq.size()) != cycle)
      throw config_error("unit start site is not on a full-period cycle");
    relabel.push_back(std::move(seq));
  }
  return relabel;
}

std::vector<std::vector<int>> relabel_sites(int n, int num_sites) {
  return relabel_sites(permutation_network(n, num_sites));
}

std::vector<std::vector<int>> relabel_sites(int n1, int n2, int num_sites) {
  return relabel_sites(permutation_network(n1, n2, num_sites));
}

DiagonalObservable sigma_z_charge(int unit, int slot,
                                  const std::vector<std::vector<int>>& relabel,
                                  int num_sites) {
  if (unit < 0 || unit >= static_cast<int>(relabel.size()))
    throw config_error("unit index out of range");
  const auto& seq = relabel[unit];
  if (slot < 0 || slot >= static_cast<int>(seq.size()))
    throw config_error("slot index out of range");
  DiagonalObservable obs;
  obs.unit = unit;
  obs.slot = slot;
  obs.sites = {seq[slot]};
  const std::uint64_t dim = 1ull << num_sites;
  obs.diag.resize(dim);
  for (std::uint64_t z = 0; z < dim; ++z)
    obs.diag(z) = ((z >> seq[slot]) & 1ull) ? -1.0 : 1.0;
  return obs;
}

std::vector<DiagonalObservable> q_charges(int n1, int n2, int num_sites) {
  const auto relabel = relabel_sites(n1, n2, num_sites);
  const int n_l = std::lcm(n1, n2);
  const int n_g = std::gcd(n1, n2);
  const int groups = n_l / n_g;
  const std::uint64_t dim = 1ull << num_sites;
  std::vector<DiagonalObservable> charges;
  for (int unit = 0; unit < static_cast<int>(relabel.size()); ++unit)
    for (int slot = 0; slot < n_g; ++slot) {
      DiagonalObservable obs;
      obs.unit = unit;
      obs.slot = slot;
      obs.diag = Eigen::VectorXd::Zero(dim);
      for (int m = 0; m < groups; ++m) {
        const int site = relabel[unit][slot + m * n_g];
        obs.sites.push_back(site);
        for (std::uint64_t z = 0; z < dim; ++z)
          obs.diag(z) += ((z >> site) & 1ull) ? -1.0 : 1.0;
      }
      charges.push_back(std::move(obs));
    }
  return charges;
}

SymmetryOperator symmetry_generator(const QuasiSpectrum& spectrum, int order) {
  if (spectrum.labels.empty())
    throw labeling_error("spectrum carries no sector labels");
  const int d = spectrum.dim();
  SymmetryOperator s;
  s.order = order;
  s.matrix = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const auto& label = spectrum.labels[i];
    if (label.k < 1 || order % label.k != 0)
      throw labeling_error("sector period " + std::to_string(label.k) +
                           " does not divide the generator order");
    const cxd weight = std::exp(cxd(0, -label.j * 2 * kPi / label.k));
    s.matrix.noalias() +=
        weight * spectrum.vectors.col(i) * spectrum.vectors.col(i).adjoint();
  }
  return s;
}

namespace {

void fix_column_phase(Eigen::VectorXcd& v) {
  int arg_max = 0;
  v.cwiseAbs().maxCoeff(&arg_max);
  const cxd a = v(arg_max);
  if (std::abs(a) > 0) v *= std::conj(a) / std::abs(a);
}

}  // namespace

Eigen::MatrixXcd eigen_match_rotation(const QuasiSpectrum& unperturbed,
                                      const QuasiSpectrum& perturbed,
                                      const EigenMatch& match,
                                      double overlap_threshold, int* excluded) {
  const int d = unperturbed.dim();
  Eigen::MatrixXcd rotation = Eigen::MatrixXcd::Zero(d, d);
  int skipped = 0;
  for (std::size_t r = 0; r < match.source.size(); ++r) {
    if (match.overlaps(r) < overlap_threshold) {
      ++skipped;
      continue;
    }
    Eigen::VectorXcd phi = unperturbed.vectors.col(match.source[r]);
    Eigen::VectorXcd psi = perturbed.vectors.col(match.matched[r]);
    fix_column_phase(phi);
    // Align the partner against the (phase-fixed) reference rather than by
    // its own largest component: ladder eigenvectors have equal-magnitude
    // components, so the intra-pair overlap is the stable phase anchor.
    const cxd overlap = phi.dot(psi);
    if (std::abs(overlap) > 0) psi *= std::conj(overlap) / std::abs(overlap);
    rotation.noalias() += psi * phi.adjoint();
  }
  if (excluded) *excluded = skipped;
  return rotation;
}

double charge_commutator_norm(const Eigen::MatrixXcd& u,
                              const Eigen::MatrixXcd& charge, int power,
                              const Eigen::MatrixXcd* projector) {
  if (power < 1) throw config_error("power must be >= 1");
  Eigen::MatrixXcd u_pow = u;
  for (int p = 1; p < power; ++p) u_pow = u * u_pow;
  Eigen::MatrixXcd commutator = u_pow * charge - charge * u_pow;
  if (projector) commutator = (*projector) * commutator * (*projector);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(commutator);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

void export_charges_csv(const std::vector<DiagonalObservable>& charges,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open " + path + " for writing");
  out << "unit,slot,sites\n";
  for (const auto& charge : charges) {
    out << charge.unit << "," << charge.slot << ",";
    for (std::size_t i = 0; i < charge.sites.size(); ++i)
      out << (i ? ";" : "") << charge.sites[i];
    out << "\n";
  }
}

}  // namespace dtc
