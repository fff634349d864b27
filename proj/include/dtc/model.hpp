#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>

#include "dtc/basis.hpp"

namespace dtc {

enum class ModelKind { NTuple, Transition, KickedIsing };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Static description of a driven chain: geometry, drive mode, disorder
/// scales, segment durations and the overall perturbation strength.
struct ModelConfig {
  int num_sites = 8;                  // L
  ModelKind kind = ModelKind::NTuple;
  int n = 4;                          // drive period (NTuple)
  int n1 = 2, n2 = 4;                 // transition endpoints (Transition)
  double s = 0.0;                     // transition parameter in [0, 1]
  double j_bar = 4.0;                 // mean coupling
  double hz_bar = 12.0;               // longitudinal field scale
  double kappa = 0.5;                 // power-law exponent
  double lambda = 0.0;                // overall perturbation strength
  double t1 = 0.5, t2 = 0.5, t3 = 1.0;
  double eps1_ratio = 0.9;            // eps1 = eps1_ratio * lambda
  double eps2_ratio = 1.1;            // eps2 = eps2_ratio * lambda
  double ex_ratio = 1.0;              // transverse amplitude = ex_ratio * lambda
  std::optional<int> j_cutoff;        // short-range alternative: uniform
                                      // couplings up to this range, 0 beyond
  bool periodic = false;              // ring distance for couplings

  void validate() const;  // throws config_error

  /// Drive period probed by charges/observables: n, gcd(n1,n2), or 2.
  int probe_period() const;
  /// Permutation unit length: n (or 2n for odd n), lcm for transitions.
  int network_period() const;

  SwapNetwork network() const;

  static ModelConfig kicked_ising_defaults();
};

/// Plain-text key=value serialization (one pair per line, '#' comments).
std::string to_key_value(const ModelConfig& config);
ModelConfig model_config_from_key_value(std::istream& in);
ModelConfig load_model_config(const std::string& path);

/// One sampled set of couplings, fields and imperfections.
struct DisorderRealization {
  Eigen::MatrixXd coupling;   // J_ij, symmetric, zero diagonal
  Eigen::VectorXd field_z;    // h_i^z in [0, 2 hz_bar]
  Eigen::VectorXd field_x;    // eps_i^x in [-ex, ex]
  double eps1 = 0.0, eps2 = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t sample_index = 0;

  std::string to_json() const;
};

/// Kac-style extensivity coefficient for a power-law coupling.
double kac_coefficient(int num_sites, double kappa);

/// Draws all disorder streams for one ensemble member. The same
/// (seed, sample) always yields bit-identical values, and the J/h streams
/// do not depend on lambda (perturbation scales multiply fixed raw draws).
DisorderRealization sample_disorder(const ModelConfig& config,
                                    std::uint64_t master_seed,
                                    std::uint64_t sample_index = 0);

/// Classical energy of a Z-basis state under couplings and fields,
/// evaluated by bit arithmetic.
double interaction_energy(std::uint64_t state_bits,
                          const DisorderRealization& realization,
                          int num_sites);

/// Dense interaction Hamiltonian: ZZ couplings and longitudinal fields on
/// the diagonal, transverse single-spin-flip terms off it. Real symmetric.
Eigen::MatrixXd build_h_int(const DisorderRealization& realization,
                            int num_sites);

/// The two swap-layer Hamiltonians of the drive (Heisenberg bonds with the
/// pi/(2 t) prefactor and imperfection factors).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_swap_hamiltonians(
    const ModelConfig& config, const DisorderRealization& realization);

/// Convex combination of the two endpoint models' layer Hamiltonians.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_transition_hamiltonians(
    const ModelConfig& config, const DisorderRealization& realization);

/// One-period evolution operator with model metadata.
struct FloquetOperator {
  Eigen::MatrixXcd matrix;
  ModelConfig config;
  std::uint64_t master_seed = 0;
  std::uint64_t sample_index = 0;

  int dim() const { return static_cast<int>(matrix.rows()); }
  int num_sites() const { return config.num_sites; }

  /// max |(U^dag U - 1)_{ab}|
  double unitarity_defect() const;
};

/// Builds the one-period Floquet operator for the configured model kind.
/// Layer exponentials are assembled from exact per-bond blocks; the
/// interaction segment is exponentiated by eigendecomposition.
FloquetOperator build_floquet(const ModelConfig& config,
                              const DisorderRealization& realization);

/// Two-segment kicked-chain Floquet operator (Ising segment + global
/// near-pi x rotation).
FloquetOperator build_kicked_ising(const ModelConfig& config,
                                   const DisorderRealization& realization);

/// e^{-i theta H} for Hermitian H via eigendecomposition.
Eigen::MatrixXcd hermitian_exponential(const Eigen::MatrixXd& h, double theta);

}  // namespace dtc
