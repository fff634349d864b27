#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dtc/basis.hpp"
#include "dtc/model.hpp"

namespace dtc {

/// Maps an angle to the principal branch (-pi, pi].
double wrap_angle(double angle);

/// Distance between two angles on the circle, in [0, pi].
double circle_distance(double a, double b);

/// Complete eigensystem of a unitary matrix. energies[i] is the
/// quasi-energy of column i of `vectors`: U v = e^{-i energy} v, sorted
/// ascending in (-pi, pi].
struct QuasiSpectrum {
  Eigen::VectorXd energies;
  Eigen::MatrixXcd vectors;

  struct Label {
    int sector = -1;  // orbit / sector id
    int j = 0;        // index within the sector's 2pi/k ladder
    int k = 0;        // sector period
  };
  std::vector<Label> labels;  // empty, or one per eigenpair

  int dim() const { return static_cast<int>(energies.size()); }
  /// max_i ||U v_i - e^{-i e_i} v_i||_2
  double max_residual(const Eigen::MatrixXcd& u) const;
};

struct DiagonalizeOptions {
  double unitarity_tol = 1e-10;
  double cluster_tol = 1e-8;
};

/// Schur-based eigensystem of a (numerically) unitary matrix. Degenerate
/// clusters are re-diagonalized and re-orthonormalized. Non-unitary input
/// raises numerical_error.
QuasiSpectrum diagonalize_unitary(const Eigen::MatrixXcd& u,
                                  const DiagonalizeOptions& options = {});

/// Closed-form eigensystem of one permutation cycle. `entering_phases[m]`
/// is the phase picked up when the drive maps states[m-1] to states[m]
/// (indices mod k). Returns k quasi-energies (ladder spacing 2pi/k) and the
/// k x k coefficient matrix over the cycle states (column j = eigenvector).
struct CycleEigensystem {
  Eigen::VectorXd energies;
  Eigen::MatrixXcd coefficients;
  std::vector<int> ladder_index;  // j label per column, 1..k
};
CycleEigensystem solvable_spectrum(const std::vector<double>& entering_phases);

/// Full solvable-point spectrum at lambda = 0: every orbit contributes its
/// closed-form ladder. Labels carry (sector, j, k).
QuasiSpectrum solvable_point_spectrum(const SwapNetwork& network,
                                      const DisorderRealization& realization,
                                      double t3,
                                      const std::vector<Orbit>* orbits = nullptr);

/// Consecutive quasi-energy spacings on the circle (the wrap-around gap
/// included) and the per-sample mean of log10 spacing. Spacings below the
/// clamp floor are counted and clamped before taking logs.
struct GapStatistics {
  Eigen::VectorXd spacings;
  double mean_log10 = 0.0;
  int clamped = 0;
};
GapStatistics gap_statistics(const Eigen::VectorXd& sorted_energies,
                             double clamp_floor = 1e-15);

/// Deviations of a sector ladder from exact 2pi/n spacing. The sector may
/// hold one or more period-n ladders (cardinality k*n); the i-th sorted
/// level is compared against the (i+k)-th around the circle.
struct SubspaceGapDeviation {
  Eigen::VectorXd deviations;
  double max = 0.0;
  double log10_max = 0.0;
};
SubspaceGapDeviation subspace_gap_deviation(const Eigen::VectorXd& energies,
                                            int n,
                                            double clamp_floor = 1e-15);

/// Assignment between unperturbed and perturbed eigenpairs by maximal total
/// squared overlap, restricted to quasi-energy windows.
struct EigenMatch {
  std::vector<int> source;    // indices into the unperturbed spectrum
  std::vector<int> matched;   // assigned indices into the perturbed spectrum
  Eigen::VectorXd overlaps;   // |<phi_i | psi_matched(i)>|
  double min_overlap = 1.0;
  bool ambiguous = false;     // some overlap below the ambiguity threshold
};
EigenMatch match_eigenstates(const QuasiSpectrum& unperturbed,
                             const QuasiSpectrum& perturbed,
                             const std::vector<int>& subset,
                             double energy_window,
                             double ambiguity_threshold = 0.5);

/// Mean level-spacing ratio <r> of a sorted spectrum on the circle.
double level_ratio(const Eigen::VectorXd& sorted_energies);

/// Basis indices dynamically coupled to the seed state: closure of {seed}
/// under U and U^dag with matrix elements above `tol`.
std::vector<int> dynamical_subspace(const Eigen::MatrixXcd& u,
                                    const BasisState& seed,
                                    double tol = 1e-12);

/// <r> of the spectrum of U restricted to the dynamical subspace of `seed`.
double subspace_level_ratio(const Eigen::MatrixXcd& u, const BasisState& seed,
                            double tol = 1e-12);

/// Quasi-energies and full-space eigenvectors of U restricted to a
/// dynamically closed family of basis states, grouped into sectors whose
/// ladders share the same quasi-energy modulo 2pi/n.
struct SectorSpectrum {
  Eigen::VectorXd energies;   // sorted, multiple of n entries
  Eigen::MatrixXcd vectors;   // full-dimension columns
};
std::vector<SectorSpectrum> sector_spectra(const Eigen::MatrixXcd& u,
                                           const std::vector<int>& family,
                                           int n, double group_tol = 1e-7);

/// CSV export: index, quasi-energy, sector, j, k, overlap (optional column).
void export_spectrum_csv(const QuasiSpectrum& spectrum, const std::string& path,
                         const Eigen::VectorXd* overlaps = nullptr);

}  // namespace dtc
