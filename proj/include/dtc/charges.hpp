#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dtc/basis.hpp"
#include "dtc/spectral.hpp"

namespace dtc {

/// A Z-basis-diagonal observable (single-site sigma^z or a sum of them)
/// with its unit/slot labels and the physical sites it sums.
struct DiagonalObservable {
  Eigen::VectorXd diag;
  int unit = -1;
  int slot = -1;
  std::vector<int> sites;

  Eigen::MatrixXcd matrix() const {
    return diag.cast<std::complex<double>>().asDiagonal();
  }
};

/// Site sequences visited by repeated drive conjugation of sigma^z on the
/// first site of each unit: relabel[i][j] is the physical site of slot j+1
/// in unit i+1 (0-based here).
std::vector<std::vector<int>> relabel_sites(const SwapNetwork& network);
std::vector<std::vector<int>> relabel_sites(int n, int num_sites);
std::vector<std::vector<int>> relabel_sites(int n1, int n2, int num_sites);

/// sigma^z at the (unit, slot) position of the relabel map.
DiagonalObservable sigma_z_charge(int unit, int slot,
                                  const std::vector<std::vector<int>>& relabel,
                                  int num_sites);

/// Transition charges: for each unit, the gcd(n1,n2) sums of sigma^z over
/// every gcd-th slot of the unit's conjugation cycle. Ordered by
/// (unit, slot).
std::vector<DiagonalObservable> q_charges(int n1, int n2, int num_sites);

/// Cyclic symmetry generator assembled from labeled eigenprojectors:
/// each eigenpair contributes e^{-i j 2pi/k} |v><v|.
struct SymmetryOperator {
  Eigen::MatrixXcd matrix;
  int order = 1;
};
SymmetryOperator symmetry_generator(const QuasiSpectrum& labeled_spectrum,
                                    int order);

/// Unitary rotation carrying unperturbed eigenvectors to perturbed ones,
/// assembled pairwise from a matching. Pairs with overlap below
/// `overlap_threshold` are skipped (the rotation stays a partial isometry);
/// `excluded` reports how many were skipped. Column phases are fixed by
/// making each eigenvector's largest component real positive.
Eigen::MatrixXcd eigen_match_rotation(const QuasiSpectrum& unperturbed,
                                      const QuasiSpectrum& perturbed,
                                      const EigenMatch& match,
                                      double overlap_threshold = 0.5,
                                      int* excluded = nullptr);

/// Operator norm of [U^power, charge], optionally compressed by a
/// projector.
double charge_commutator_norm(const Eigen::MatrixXcd& u,
                              const Eigen::MatrixXcd& charge, int power,
                              const Eigen::MatrixXcd* projector = nullptr);

/// CSV export: unit, slot, sites (semicolon separated).
void export_charges_csv(const std::vector<DiagonalObservable>& charges,
                        const std::string& path);

}  // namespace dtc
