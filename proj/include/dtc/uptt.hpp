#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dtc/spectral.hpp"

namespace dtc {

/// Perturbed-unitary eigenproblem U0 e^{-i G} with G = lambda*V Hermitian.
/// Stores the unperturbed eigensystem and the tangent of the generator in
/// the unperturbed eigenbasis, which is all the series needs.
struct PerturbationProblem {
  QuasiSpectrum spec0;
  Eigen::MatrixXcd generator;          // lambda * V, Hermitian
  double lambda = 0.0;
  Eigen::MatrixXcd tangent;            // <m| tan(G/2) |k> in the eigenbasis
  double tangent_norm = 0.0;           // || tan(G/2) ||_2
  double generator_norm = 0.0;         // || G ||_2

  int dim() const { return spec0.dim(); }
};

PerturbationProblem make_perturbation_problem(QuasiSpectrum spec0,
                                              const Eigen::MatrixXcd& generator,
                                              double lambda);

/// Principal-branch Hermitian generator G with u0^dag u_full = e^{-i G}.
/// Raises numerical_error if an eigenphase sits within 1e-8 of the branch
/// cut at +-pi.
Eigen::MatrixXcd extract_effective_v(const Eigen::MatrixXcd& u0,
                                     const Eigen::MatrixXcd& u_full);

/// tan(factor * A) for Hermitian A by functional calculus; raises
/// numerical_error near a tangent pole.
Eigen::MatrixXcd hermitian_tangent(const Eigen::MatrixXcd& a, double factor);

/// Inverse of the half-angle map: e^{iA} = (i - T)(i + T)^{-1} for
/// T = tan(A/2).
Eigen::MatrixXcd unitary_from_tangent(const Eigen::MatrixXcd& tangent);

/// Quasi-energies within the given circle distance of index i's, grown to
/// transitive closure. Always contains i.
std::vector<int> degenerate_cluster(const QuasiSpectrum& spec0, int index,
                                    double threshold);

/// Threshold grouping near-degenerate eigenpairs for this problem.
double cluster_threshold(const PerturbationProblem& problem);

struct SeriesResult {
  std::vector<double> energies;  // energies[j-1] = j-th order approximation
  bool converged = false;        // tangent margin positive at the last order
  double radius_margin = 0.0;    // min_m |tan((E-e_m)/2)| - ||tan(G/2)||
  double linear_margin = 0.0;    // min_m dist(E, e_m)     - ||G||
};

/// Recursive quasi-energy series for an isolated target level. Each order
/// re-evaluates the expansion with the previous estimate inserted in the
/// tangent denominators. A clustered target raises degenerate_target_error;
/// a non-positive margin only clears `converged`.
SeriesResult perturbed_energy_series(const PerturbationProblem& problem,
                                     int target, int max_order);

/// Geometric-series eigenstate expansion around the target level, mapped
/// back from the half-angle equation to an eigenvector of U0 e^{-iG}, in
/// the original basis, normalized. `energy` defaults to the highest-order
/// series value.
Eigen::VectorXcd perturbed_state_expansion(const PerturbationProblem& problem,
                                           int target, int max_order,
                                           const double* energy = nullptr);

struct DegenerateSolveOptions {
  int max_order = 2;
  int max_iterations = 200;
  double tolerance = 1e-12;
};

struct DegenerateSolveResult {
  Eigen::VectorXd energies;        // one perturbed level per cluster member
  Eigen::MatrixXcd coefficients;   // mixing amplitudes over cluster members
  int iterations = 0;              // worst case over members
};

/// Self-consistent block solver for a (near-)degenerate cluster: builds the
/// projected tangent resolvent block, adds the near-degeneracy diagonal
/// shifts relative to the reference member, and iterates the eigenvalue
/// relation to a fixed point.
DegenerateSolveResult degenerate_block_solve(
    const PerturbationProblem& problem, const std::vector<int>& cluster,
    int reference, const DegenerateSolveOptions& options = {});

}  // namespace dtc
