#include "dtc/uptt.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "dtc/errors.hpp"

namespace dtc {

using cxd = std::complex<double>;
constexpr cxd kI{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

namespace {

void require_hermitian(const Eigen::MatrixXcd& a, const char* what) {
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.norm()))
    throw numerical_error(std::string(what) + " is not Hermitian");
}

double spectral_norm_hermitian(const Eigen::MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a);
  return a.rows() == 0 ? 0.0 : solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

PerturbationProblem make_perturbation_problem(QuasiSpectrum spec0,
                                              const Eigen::MatrixXcd& generator,
                                              double lambda) {
  require_hermitian(generator, "perturbation generator");
  PerturbationProblem problem;
  problem.generator = generator;
  problem.lambda = lambda;
  const Eigen::MatrixXcd tan_half = hermitian_tangent(generator, 0.5);
  problem.tangent = spec0.vectors.adjoint() * tan_half * spec0.vectors;
  problem.tangent_norm = spectral_norm_hermitian(tan_half);
  problem.generator_norm = spectral_norm_hermitian(generator);
  problem.spec0 = std::move(spec0);
  return problem;
}

Eigen::MatrixXcd extract_effective_v(const Eigen::MatrixXcd& u0,
                                     const Eigen::MatrixXcd& u_full) {
  const Eigen::MatrixXcd w = u0.adjoint() * u_full;
  const QuasiSpectrum spec = diagonalize_unitary(w);
  for (int i = 0; i < spec.dim(); ++i)
    if (kPi - std::abs(spec.energies(i)) < 1e-8)
      throw numerical_error(
          "generator eigenphase at the +-pi branch cut; principal logarithm "
          "is ambiguous");
  // w = e^{-iG}: the quasi-energies are exactly the eigenvalues of G.
  const Eigen::MatrixXcd g =
      spec.vectors * spec.energies.cast<cxd>().asDiagonal() *
      spec.vectors.adjoint();
  return (g + g.adjoint()) / 2.0;
}

Eigen::MatrixXcd hermitian_tangent(const Eigen::MatrixXcd& a, double factor) {
  require_hermitian(a, "tangent argument");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a);
  if (solver.info() != Eigen::Success)
    throw numerical_error("eigendecomposition failed");
  Eigen::VectorXcd tans(a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    const double x = factor * solver.eigenvalues()(i);
    if (kPi / 2 - std::abs(std::remainder(x, kPi)) < 1e-8)
      throw numerical_error("tangent pole at eigenvalue " + std::to_string(x));
    tans(i) = std::tan(x);
  }
  return solver.eigenvectors() * tans.asDiagonal() *
         solver.eigenvectors().adjoint();
}

Eigen::MatrixXcd unitary_from_tangent(const Eigen::MatrixXcd& tangent) {
  const int d = static_cast<int>(tangent.rows());
  const Eigen::MatrixXcd i_plus =
      kI * Eigen::MatrixXcd::Identity(d, d) + tangent;
  const Eigen::MatrixXcd i_minus =
      kI * Eigen::MatrixXcd::Identity(d, d) - tangent;
  return i_minus * i_plus.inverse();
}

std::vector<int> degenerate_cluster(const QuasiSpectrum& spec0, int index,
                                    double threshold) {
  const int d = spec0.dim();
  std::vector<char> in(d, 0);
  in[index] = 1;
  bool grew = true;
  while (grew) {
    grew = false;
    for (int m = 0; m < d; ++m) {
      if (in[m]) continue;
      for (int c = 0; c < d; ++c)
        if (in[c] &&
            circle_distance(spec0.energies(m), spec0.energies(c)) < threshold) {
          in[m] = 1;
          grew = true;
          break;
        }
    }
  }
  std::vector<int> cluster;
  for (int m = 0; m < d; ++m)
    if (in[m]) cluster.push_back(m);
  return cluster;
}

double cluster_threshold(const PerturbationProblem& problem) {
  return std::max(1e-6, 10.0 * problem.generator_norm);
}

namespace {

double half_tan(double e, double eps) { return std::tan((e - eps) / 2.0); }

/// Sum of the first `order` terms of the energy expansion, with the energy
/// estimate inserted in the denominators.
cxd series_rhs(const PerturbationProblem& problem, int target, int order,
               double energy) {
  const int d = problem.dim();
  cxd rhs = problem.tangent(target, target);
  if (order < 2) return rhs;

  Eigen::VectorXcd w(d);  // (G T')^{r-2} G col, padded with 0 at target
  for (int m = 0; m < d; ++m)
    w(m) = (m == target) ? 0.0
                         : problem.tangent(m, target) /
                               half_tan(energy, problem.spec0.energies(m));
  const Eigen::RowVectorXcd row = problem.tangent.row(target);
  rhs += (row * w).value();
  for (int r = 3; r <= order; ++r) {
    Eigen::VectorXcd tw = problem.tangent * w;
    for (int m = 0; m < d; ++m)
      tw(m) = (m == target)
                  ? 0.0
                  : tw(m) / half_tan(energy, problem.spec0.energies(m));
    w = std::move(tw);
    rhs += (row * w).value();
  }
  return rhs;
}

void fill_margins(const PerturbationProblem& problem, int target, double energy,
                  SeriesResult& result) {
  double min_tan = std::numeric_limits<double>::infinity();
  double min_dist = std::numeric_limits<double>::infinity();
  for (int m = 0; m < problem.dim(); ++m) {
    if (m == target) continue;
    min_tan = std::min(min_tan,
                       std::abs(half_tan(energy, problem.spec0.energies(m))));
    min_dist =
        std::min(min_dist, circle_distance(energy, problem.spec0.energies(m)));
  }
  result.radius_margin = min_tan - problem.tangent_norm;
  result.linear_margin = min_dist - problem.generator_norm;
  result.converged = result.radius_margin > 0.0;
}

}  // namespace

SeriesResult perturbed_energy_series(const PerturbationProblem& problem,
                                     int target, int max_order) {
  if (target < 0 || target >= problem.dim())
    throw config_error("target index out of range");
  if (max_order < 1) throw config_error("series order must be >= 1");
  const std::vector<int> cluster =
      degenerate_cluster(problem.spec0, target, cluster_threshold(problem));
  if (cluster.size() > 1)
    throw degenerate_target_error(
        "target level sits in a cluster of " + std::to_string(cluster.size()) +
        "; use degenerate_block_solve");

  const double eps_i = problem.spec0.energies(target);
  SeriesResult result;
  double energy = eps_i + 2 * std::atan(problem.tangent(target, target).real());
  result.energies.push_back(energy);
  for (int order = 2; order <= max_order; ++order) {
    const cxd rhs = series_rhs(problem, target, order, energy);
    energy = eps_i + 2 * std::atan(rhs.real());
    result.energies.push_back(energy);
  }
  fill_margins(problem, target, energy, result);
  return result;
}

Eigen::VectorXcd perturbed_state_expansion(const PerturbationProblem& problem,
                                           int target, int max_order,
                                           const double* energy) {
  if (target < 0 || target >= problem.dim())
    throw config_error("target index out of range");
  double e;
  if (energy) {
    e = *energy;
  } else {
    const SeriesResult series =
        perturbed_energy_series(problem, target, std::max(1, max_order));
    e = series.energies.back();
  }
  const int d = problem.dim();
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(d);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
  acc(target) = v(target) = 1.0;
  for (int r = 1; r <= max_order; ++r) {
    Eigen::VectorXcd tv = problem.tangent * v;
    for (int m = 0; m < d; ++m)
      tv(m) =
          (m == target) ? 0.0 : tv(m) / half_tan(e, problem.spec0.energies(m));
    v = std::move(tv);
    acc += v;
  }
  // `acc` solves the half-angle equation; the eigenvector of U0 e^{-iG}
  // is recovered through (1 + e^{-iG})^{-1}.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> gen_eig(problem.generator);
  Eigen::VectorXcd weights(d);
  for (int m = 0; m < d; ++m)
    weights(m) = 1.0 / (1.0 + std::exp(-kI * gen_eig.eigenvalues()(m)));
  Eigen::VectorXcd state =
      gen_eig.eigenvectors() *
      weights.asDiagonal() *
      (gen_eig.eigenvectors().adjoint() * (problem.spec0.vectors * acc));
  return state / state.norm();
}

DegenerateSolveResult degenerate_block_solve(
    const PerturbationProblem& problem, const std::vector<int>& cluster,
    int reference, const DegenerateSolveOptions& options) {
  const int k = static_cast<int>(cluster.size());
  if (k == 0) throw config_error("empty cluster");
  if (std::find(cluster.begin(), cluster.end(), reference) == cluster.end())
    throw config_error("reference index must belong to the cluster");
  const int d = problem.dim();
  std::vector<char> in_cluster(d, 0);
  for (int c : cluster) in_cluster[c] = 1;
  const double eps_ref = problem.spec0.energies(reference);

  // Projected block of T (1 - R T)^{-1}, expanded to the requested order,
  // as a function of the energy estimate.
  auto block = [&](double energy) {
    Eigen::MatrixXcd b(d, k);
    for (int c = 0; c < k; ++c) b.col(c) = problem.tangent.col(cluster[c]);
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(k, k);
    auto accumulate = [&](const Eigen::MatrixXcd& term) {
      for (int r = 0; r < k; ++r) w.row(r) += term.row(cluster[r]);
    };
    accumulate(b);
    for (int order = 2; order <= options.max_order; ++order) {
      for (int m = 0; m < d; ++m) {
        if (in_cluster[m])
          b.row(m).setZero();
        else
          b.row(m) /= half_tan(energy, problem.spec0.energies(m));
      }
      b = problem.tangent * b;
      accumulate(b);
    }
    // Near-degeneracy correction on the diagonal, relative to the reference.
    for (int c = 0; c < k; ++c) {
      const double eps_c = problem.spec0.energies(cluster[c]);
      if (cluster[c] != reference)
        w(c, c) += half_tan(energy, eps_ref) - half_tan(energy, eps_c);
    }
    if ((w - w.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
      throw numerical_error("degenerate block lost Hermiticity");
    return w;
  };

  DegenerateSolveResult result;
  result.energies.resize(k);
  result.coefficients.resize(k, k);

  for (int member = 0; member < k; ++member) {
    double energy = eps_ref;
    Eigen::VectorXcd tracked;
    int iter = 0;
    bool done = false;
    for (; iter < options.max_iterations && !done; ++iter) {
      const Eigen::MatrixXcd w = block(energy);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
          (w + w.adjoint()) / 2.0);
      int pick = member;
      if (iter > 0) {
        // Follow the eigenvector from the previous iterate.
        double best = -1.0;
        for (int q = 0; q < k; ++q) {
          const double overlap =
              std::abs(tracked.dot(solver.eigenvectors().col(q)));
          if (overlap > best) {
            best = overlap;
            pick = q;
          }
        }
      }
      tracked = solver.eigenvectors().col(pick);
      const double next = eps_ref + 2 * std::atan(solver.eigenvalues()(pick));
      done = std::abs(next - energy) < options.tolerance;
      energy = next;
    }
    if (!done)
      throw nonconvergence_error("degenerate fixed point did not converge",
                                 energy);
    result.energies(member) = wrap_angle(energy);
    result.coefficients.col(member) = tracked;
    result.iterations = std::max(result.iterations, iter);
  }
  return result;
}

}  // namespace dtc
