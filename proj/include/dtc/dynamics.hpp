#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "dtc/charges.hpp"
#include "dtc/model.hpp"
#include "dtc/spectral.hpp"

namespace dtc {

/// Stroboscopic expectation record: row N holds the expectations of the
/// requested diagonal charges at time NT.
struct Trajectory {
  BasisState initial;
  Eigen::MatrixXd expectations;  // (n_max + 1) x charges
};

/// Dense matrix-vector evolution, one period per step. The state is never
/// renormalized; a norm drift beyond `drift_tol` raises numerical_error.
Trajectory evolve_stroboscopic(const FloquetOperator& op,
                               const BasisState& initial, int n_max,
                               const std::vector<DiagonalObservable>& charges,
                               double drift_tol = 1e-6);

/// Eigenbasis propagator: expands states once and evaluates any period
/// directly. Complements the matvec path for sparse time sampling.
class StroboscopicPropagator {
 public:
  explicit StroboscopicPropagator(const FloquetOperator& op);
  Eigen::VectorXcd state_at(const BasisState& initial, long periods) const;

 private:
  QuasiSpectrum spec_;
};

/// Complex-weighted unit observable: sum over the unit's slots of
/// e^{-i k 2pi/n_probe} times the slot charge, k = slot + 1.
struct UnitProbe {
  Eigen::VectorXcd diag;
  int unit = -1;
};
UnitProbe unit_probe(int unit, int n_probe,
                     const std::vector<DiagonalObservable>& charges);

/// All Z-basis states with exactly one down spin in each relabel unit.
std::vector<BasisState> one_down_per_unit_states(
    const std::vector<std::vector<int>>& relabel, int num_sites);

/// Normalized subharmonic response: per unit and initial state, the probe
/// expectation at NT over its initial value, averaged over valid initial
/// states and over units. Disorder averaging happens in the harness.
struct SubharmonicSeries {
  Eigen::VectorXcd values;  // A(NT), N = 0..n_max
  int n_probe = 1;
  double lambda = 0.0;
  int num_sites = 0;
};
SubharmonicSeries subharmonic_series(const FloquetOperator& op,
                                     const std::vector<DiagonalObservable>& charges,
                                     int n_probe, int n_max,
                                     const std::vector<BasisState>& initials,
                                     double expectation_floor = 1e-12,
                                     double drift_tol = 1e-6);

/// Discrete Fourier transform of a stroboscopic series. Frequencies are in
/// units of the driving frequency (omega/omega_0 = q / size in [0, 1));
/// magnitudes are normalized so a pure unit tone peaks at 1.
struct FourierResult {
  Eigen::VectorXd frequencies;
  Eigen::VectorXd magnitudes;
  double peak_frequency = 0.0;
  double peak_magnitude = 0.0;
  double peak_weight = 0.0;  // squared-magnitude fraction in the peak bin
};
FourierResult fourier_analysis(const Eigen::VectorXcd& series);

/// Fraction of the squared spectral weight within +-half_width (in
/// omega/omega_0 units, circular) of the given frequency.
double spectral_weight_near(const FourierResult& result, double center,
                            double half_width);

void export_series_csv(const SubharmonicSeries& series, const std::string& path);
void export_fourier_csv(const FourierResult& result, const std::string& path);

}  // namespace dtc
