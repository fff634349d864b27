#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dtc/dynamics.hpp"
#include "dtc/model.hpp"

namespace dtc {

/// One experiment: a model template, the analysis to run, sweep axes, the
/// ensemble size per point and the output location.
struct ExperimentSpec {
  ModelConfig base;
  std::string analysis;            // gap-scaling | r-curve | dynamics |
                                   // uptt-validate | charge-norms
  std::vector<double> lambdas;     // gap-scaling sweep
  std::vector<double> s_values;    // r-curve sweep
  std::vector<int> sizes;          // chain-length sweep
  int samples = 100;
  std::uint64_t seed = 1;
  int threads = 0;                 // 0 = hardware concurrency
  std::string out_dir;             // empty = no files
  int n_max = 20000;               // dynamics periods
  int uptt_problems = 50;          // uptt-validate ensemble

  void validate() const;
};

std::uint64_t spec_hash(const ExperimentSpec& spec);

/// Per-sample outcome: metric values, or the error that aborted the sample.
struct SampleRecord {
  int index = 0;
  std::map<std::string, double> metrics;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

/// Runs `count` independent tasks on a small pool and returns records in
/// index order. Exceptions are captured per sample; the run continues.
std::vector<SampleRecord> run_ensemble(
    int count, int threads,
    const std::function<std::map<std::string, double>(int)>& task);

/// Mean and standard error per metric. Metrics named log10_* arrive already
/// on the log scale, so the plain mean realizes the log-average convention.
struct AggregateResult {
  std::map<std::string, double> mean;
  std::map<std::string, double> sem;
  int count = 0;
  int failures = 0;
};
AggregateResult disorder_average(const std::vector<SampleRecord>& records);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of the fit residuals
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Free-slope fit of mean log10 gap deviation against log10 lambda, plus
/// the residual of the fixed-slope alternative for comparison.
struct GapSlopeFit {
  LineFit free_fit;
  double fixed_slope = 0.0;
  double fixed_residual = 0.0;
};
GapSlopeFit fit_gap_slope(const std::vector<double>& log10_lambda,
                          const std::vector<double>& mean_log10_dev,
                          double fixed_slope);

/// (L, s, <r>) observation for the scaling collapse.
struct RPoint {
  int num_sites;
  double s;
  double r;
};
struct CollapseResult {
  double nu = 0.0;
  double s_star = 0.0;
  double score = 0.0;
};
/// Grid search minimizing the spread of r curves plotted against
/// L^{1/nu} (s - s*). Needs at least two system sizes.
CollapseResult finite_size_collapse(const std::vector<RPoint>& data,
                                    std::pair<double, double> s_star_window,
                                    const std::vector<double>& nu_grid,
                                    int s_star_points = 41);

// ---- analysis drivers ----

struct GapScalingRow {
  double lambda = 0.0;
  double mean_log10_dev = 0.0;
  double sem_log10_dev = 0.0;
  double mean_log10_spacing = 0.0;
  double sem_log10_spacing = 0.0;
  int count = 0;
  int failures = 0;
};
/// Per lambda: disorder-averaged log10 of the worst subharmonic-ladder
/// deviation in the one-down-per-unit family, and the mean log10 level
/// spacing of the full spectrum.
std::vector<GapScalingRow> gap_scaling_experiment(const ExperimentSpec& spec,
                                                  int num_sites);

/// Per-sample gap metrics behind the experiment; exposed for reuse.
std::map<std::string, double> gap_scaling_sample(const ModelConfig& with_lambda,
                                                 std::uint64_t master_seed,
                                                 int sample_index);

struct RCurveRow {
  double s = 0.0;
  double mean_r = 0.0;
  double sem_r = 0.0;
  int count = 0;
  int failures = 0;
};
/// <r> in the dynamical subspace seeded by the one-down-per-unit pattern.
std::vector<RCurveRow> r_curve_experiment(const ExperimentSpec& spec,
                                          int num_sites);

struct DynamicsResult {
  SubharmonicSeries mean_series;  // disorder-averaged A(NT)
  FourierResult fourier;          // transform over one fundamental window
  int count = 0;
  int failures = 0;
};
DynamicsResult dynamics_experiment(const ExperimentSpec& spec, int num_sites);

struct UpttValidationResult {
  std::vector<double> mean_slopes;   // index j-1: log-log slope at order j
  double worst_degenerate_error = 0.0;
  int problems = 0;
  int rejected = 0;  // non-positive margin or clustered target
};
/// Random-problem scaling check of the energy series plus the engineered
/// two-fold-degeneracy check of the block solver.
UpttValidationResult uptt_validation(int problems, std::uint64_t seed,
                                     const std::vector<double>& lambdas,
                                     int dim = 8, int max_order = 3);

struct ChargeNormRow {
  std::string label;
  double value = 0.0;
};
/// Conjugation-advance residuals and commutator norms for the configured
/// model at its lambda.
std::vector<ChargeNormRow> charge_norms_experiment(const ExperimentSpec& spec,
                                                   int num_sites);

/// Dispatches on spec.analysis, writes result files under spec.out_dir
/// (manifest, per-point samples and aggregates). Re-running an identical
/// spec skips completed points.
void run_experiment(const ExperimentSpec& spec);

}  // namespace dtc
