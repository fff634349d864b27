#include "dtc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dtc/charges.hpp"
#include "dtc/errors.hpp"
#include "dtc/rng.hpp"
#include "dtc/spectral.hpp"
#include "dtc/uptt.hpp"

namespace dtc {

namespace fs = std::filesystem;
using cxd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

static const char* kVersion = "dtcsim 1.0.0";

void ExperimentSpec::validate() const {
  base.validate();
  if (samples < 1) throw config_error("ensemble size must be >= 1");
  if (analysis != "gap-scaling" && analysis != "r-curve" &&
      analysis != "dynamics" && analysis != "uptt-validate" &&
      analysis != "charge-norms")
    throw config_error("unknown analysis: " + analysis);
  if (analysis == "gap-scaling" && lambdas.empty())
    throw config_error("gap-scaling needs a lambda sweep");
  if (analysis == "r-curve" && s_values.empty())
    throw config_error("r-curve needs an s sweep");
  if (n_max < 1) throw config_error("n_max must be >= 1");
}

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string spec_fingerprint(const ExperimentSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  out << spec.analysis << "|" << to_key_value(spec.base) << "|seed="
      << spec.seed << "|samples=" << spec.samples << "|n_max=" << spec.n_max
      << "|uptt=" << spec.uptt_problems << "|lam=";
  for (double l : spec.lambdas) out << l << ",";
  out << "|s=";
  for (double s : spec.s_values) out << s << ",";
  out << "|L=";
  for (int l : spec.sizes) out << l << ",";
  return out.str();
}

int effective_threads(int requested, int count) {
  int t = requested > 0
              ? requested
              : std::max(1u, std::thread::hardware_concurrency());
  return std::max(1, std::min(t, count));
}

}  // namespace

std::uint64_t spec_hash(const ExperimentSpec& spec) {
  return fnv1a(spec_fingerprint(spec));
}

std::vector<SampleRecord> run_ensemble(
    int count, int threads,
    const std::function<std::map<std::string, double>(int)>& task) {
  std::vector<SampleRecord> records(count);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int index = next.fetch_add(1);
      if (index >= count) return;
      records[index].index = index;
      try {
        records[index].metrics = task(index);
      } catch (const std::exception& e) {
        records[index].error = e.what();
      }
    }
  };
  const int pool = effective_threads(threads, count);
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> team;
    for (int t = 0; t < pool; ++t) team.emplace_back(worker);
    for (auto& thread : team) thread.join();
  }
  return records;
}

AggregateResult disorder_average(const std::vector<SampleRecord>& records) {
  AggregateResult agg;
  std::map<std::string, std::vector<double>> columns;
  for (const auto& record : records) {
    if (!record.ok()) {
      ++agg.failures;
      continue;
    }
    ++agg.count;
    for (const auto& [key, value] : record.metrics)
      columns[key].push_back(value);
  }
  for (auto& [key, values] : columns) {
    if (static_cast<int>(values.size()) != agg.count)
      throw config_error("metric " + key + " missing from some samples");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const int n = static_cast<int>(values.size());
    agg.mean[key] = mean;
    agg.sem[key] = n > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
  }
  return agg;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n < 2 || y.size() != x.size())
    throw insufficient_data_error("need at least two points to fit");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300)
    throw insufficient_data_error("degenerate abscissae");
  LineFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double rss = 0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - fit.slope * x[i] - fit.intercept;
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

GapSlopeFit fit_gap_slope(const std::vector<double>& log10_lambda,
                          const std::vector<double>& mean_log10_dev,
                          double fixed_slope) {
  if (log10_lambda.size() < 3)
    throw insufficient_data_error("need at least three sweep points");
  GapSlopeFit fit;
  fit.free_fit = fit_line(log10_lambda, mean_log10_dev);
  fit.fixed_slope = fixed_slope;
  // Best intercept at the fixed slope, then the rms residual.
  double intercept = 0.0;
  const int n = static_cast<int>(log10_lambda.size());
  for (int i = 0; i < n; ++i)
    intercept += mean_log10_dev[i] - fixed_slope * log10_lambda[i];
  intercept /= n;
  double rss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r =
        mean_log10_dev[i] - fixed_slope * log10_lambda[i] - intercept;
    rss += r * r;
  }
  fit.fixed_residual = std::sqrt(rss / n);
  return fit;
}

CollapseResult finite_size_collapse(const std::vector<RPoint>& data,
                                    std::pair<double, double> s_star_window,
                                    const std::vector<double>& nu_grid,
                                    int s_star_points) {
  std::vector<int> sizes;
  for (const auto& p : data)
    if (std::find(sizes.begin(), sizes.end(), p.num_sites) == sizes.end())
      sizes.push_back(p.num_sites);
  if (sizes.size() < 2)
    throw insufficient_data_error("collapse needs at least two system sizes");
  if (nu_grid.empty()) throw config_error("empty exponent grid");

  struct Scaled {
    double x, y;
    int size;
  };
  auto quality = [&](double nu, double s_star) {
    std::vector<Scaled> points;
    points.reserve(data.size());
    for (const auto& p : data)
      points.push_back({std::pow(double(p.num_sites), 1.0 / nu) * (p.s - s_star),
                        p.r, p.num_sites});
    std::sort(points.begin(), points.end(),
              [](const Scaled& a, const Scaled& b) { return a.x < b.x; });
    // Spread of each point against the master curve interpolated from the
    // nearest neighbors belonging to other sizes.
    double score = 0.0;
    int used = 0;
    const int n = static_cast<int>(points.size());
    for (int i = 0; i < n; ++i) {
      int left = -1, right = -1;
      for (int l = i - 1; l >= 0; --l)
        if (points[l].size != points[i].size) {
          left = l;
          break;
        }
      for (int r = i + 1; r < n; ++r)
        if (points[r].size != points[i].size) {
          right = r;
          break;
        }
      if (left < 0 || right < 0) continue;
      const double dx = points[right].x - points[left].x;
      const double t =
          dx > 0 ? (points[i].x - points[left].x) / dx : 0.5;
      const double y_hat =
          points[left].y + t * (points[right].y - points[left].y);
      score += (points[i].y - y_hat) * (points[i].y - y_hat);
      ++used;
    }
    return used > 0 ? score / used : std::numeric_limits<double>::infinity();
  };

  CollapseResult best;
  best.score = std::numeric_limits<double>::infinity();
  for (double nu : nu_grid)
    for (int k = 0; k < s_star_points; ++k) {
      const double s_star =
          s_star_window.first +
          (s_star_window.second - s_star_window.first) *
              (s_star_points > 1 ? double(k) / (s_star_points - 1) : 0.5);
      const double score = quality(nu, s_star);
      if (score < best.score) best = {nu, s_star, score};
    }
  return best;
}

// ---- per-sample kernels ----

std::map<std::string, double> gap_scaling_sample(const ModelConfig& with_lambda,
                                                 std::uint64_t master_seed,
                                                 int sample_index) {
  ModelConfig solvable = with_lambda;
  solvable.lambda = 0.0;
  const DisorderRealization r0 =
      sample_disorder(solvable, master_seed, sample_index);
  const DisorderRealization rl =
      sample_disorder(with_lambda, master_seed, sample_index);
  const FloquetOperator op0 = build_floquet(solvable, r0);
  const FloquetOperator opl = build_floquet(with_lambda, rl);

  const SwapNetwork network = with_lambda.network();
  const int probe = with_lambda.probe_period();
  const auto relabel = relabel_sites(network);
  std::vector<int> family;
  for (const BasisState& state :
       one_down_per_unit_states(relabel, with_lambda.num_sites))
    family.push_back(static_cast<int>(state.bits));
  std::sort(family.begin(), family.end());

  const auto sectors = sector_spectra(op0.matrix, family, probe);
  const QuasiSpectrum specl = diagonalize_unitary(opl.matrix);
  const double window = std::max(10.0 * with_lambda.lambda, 1e-6);

  double worst = 0.0;
  double ambiguous = 0.0;
  for (const auto& sector : sectors) {
    QuasiSpectrum source;
    source.energies = sector.energies;
    source.vectors = sector.vectors;
    std::vector<int> subset(sector.energies.size());
    for (std::size_t i = 0; i < subset.size(); ++i) subset[i] = int(i);
    const EigenMatch match = match_eigenstates(source, specl, subset, window);
    if (match.ambiguous) ambiguous = 1.0;
    Eigen::VectorXd matched(match.matched.size());
    for (std::size_t i = 0; i < match.matched.size(); ++i)
      matched(i) = specl.energies(match.matched[i]);
    worst = std::max(worst, subspace_gap_deviation(matched, probe).max);
  }
  return {{"log10_gap_dev", std::log10(std::max(worst, 1e-15))},
          {"mean_log10_spacing", gap_statistics(specl.energies).mean_log10},
          {"ambiguous", ambiguous}};
}

namespace {

BasisState subspace_seed_state(const ModelConfig& config) {
  const SwapNetwork network = config.network();
  std::uint64_t bits = 0;
  for (int base = 0; base < config.num_sites; base += network.period)
    bits |= 1ull << base;
  return BasisState(bits, config.num_sites);
}

// ---- persistence helpers ----

void write_samples(const fs::path& dir,
                   const std::vector<SampleRecord>& records) {
  fs::create_directories(dir / "samples");
  for (const auto& record : records) {
    nlohmann::json j;
    j["index"] = record.index;
    if (record.ok())
      j["metrics"] = record.metrics;
    else
      j["error"] = record.error;
    std::ostringstream name;
    name << std::setw(4) << std::setfill('0') << record.index << ".json";
    std::ofstream out(dir / "samples" / name.str());
    out << j.dump(2) << "\n";
  }
}

bool point_complete(const fs::path& dir, std::uint64_t hash,
                    const std::string& aggregate_name) {
  std::ifstream meta(dir / "point.json");
  if (!meta) return false;
  try {
    nlohmann::json j;
    meta >> j;
    return j.value("hash", 0ull) == hash &&
           fs::exists(dir / aggregate_name);
  } catch (...) {
    return false;
  }
}

void write_point_meta(const fs::path& dir, std::uint64_t hash) {
  fs::create_directories(dir);
  nlohmann::json j;
  j["hash"] = hash;
  std::ofstream out(dir / "point.json");
  out << j.dump(2) << "\n";
}

std::vector<std::map<std::string, double>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw config_error("empty csv " + path.string());
  std::vector<std::string> headers;
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) headers.push_back(cell);
  std::vector<std::map<std::string, double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::map<std::string, double> row;
    for (const auto& h : headers) {
      if (!std::getline(ls, cell, ',')) break;
      try {
        row[h] = std::stod(cell);
      } catch (...) {
        row[h] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::uint64_t point_hash(const ExperimentSpec& spec, const std::string& tag) {
  return fnv1a(spec_fingerprint(spec) + "|" + tag);
}

}  // namespace

std::vector<GapScalingRow> gap_scaling_experiment(const ExperimentSpec& spec,
                                                  int num_sites) {
  ModelConfig config = spec.base;
  config.num_sites = num_sites;
  std::vector<GapScalingRow> rows;
  for (double lambda : spec.lambdas) {
    config.lambda = lambda;
    config.validate();

    fs::path dir;
    std::uint64_t hash = 0;
    if (!spec.out_dir.empty()) {
      std::ostringstream tag;
      tag << "L" << num_sites << "/lambda_" << std::setprecision(10) << lambda;
      dir = fs::path(spec.out_dir) / tag.str();
      hash = point_hash(spec, tag.str());
      if (point_complete(dir, hash, "aggregate.csv")) {
        const auto cached = read_csv(dir / "aggregate.csv");
        if (cached.size() == 1) {
          const auto& c = cached[0];
          rows.push_back({lambda, c.at("mean_log10_dev"), c.at("sem_log10_dev"),
                          c.at("mean_log10_spacing"), c.at("sem_log10_spacing"),
                          int(c.at("count")), int(c.at("failures"))});
          continue;
        }
      }
    }

    const ModelConfig point_config = config;
    const auto records = run_ensemble(
        spec.samples, spec.threads, [&point_config, &spec](int k) {
          return gap_scaling_sample(point_config, spec.seed, k);
        });
    const AggregateResult agg = disorder_average(records);
    if (agg.count == 0)
      throw numerical_error("all samples failed at lambda " +
                            std::to_string(lambda));
    GapScalingRow row{lambda,
                      agg.mean.at("log10_gap_dev"),
                      agg.sem.at("log10_gap_dev"),
                      agg.mean.at("mean_log10_spacing"),
                      agg.sem.at("mean_log10_spacing"),
                      agg.count,
                      agg.failures};
    rows.push_back(row);

    if (!dir.empty()) {
      write_samples(dir, records);
      std::ofstream out(dir / "aggregate.csv");
      out.precision(15);
      out << "lambda,mean_log10_dev,sem_log10_dev,mean_log10_spacing,"
             "sem_log10_spacing,count,failures\n"
          << row.lambda << "," << row.mean_log10_dev << ","
          << row.sem_log10_dev << "," << row.mean_log10_spacing << ","
          << row.sem_log10_spacing << "," << row.count << "," << row.failures
          << "\n";
      write_point_meta(dir, hash);
    }
  }
  return rows;
}

std::vector<RCurveRow> r_curve_experiment(const ExperimentSpec& spec,
                                          int num_sites) {
  ModelConfig config = spec.base;
  config.num_sites = num_sites;
  std::vector<RCurveRow> rows;
  for (double s : spec.s_values) {
    config.s = s;
    config.validate();

    fs::path dir;
    std::uint64_t hash = 0;
    if (!spec.out_dir.empty()) {
      std::ostringstream tag;
      tag << "L" << num_sites << "/s_" << std::setprecision(10) << s;
      dir = fs::path(spec.out_dir) / tag.str();
      hash = point_hash(spec, tag.str());
      if (point_complete(dir, hash, "aggregate.csv")) {
        const auto cached = read_csv(dir / "aggregate.csv");
        if (cached.size() == 1) {
          const auto& c = cached[0];
          rows.push_back({s, c.at("mean_r"), c.at("sem_r"), int(c.at("count")),
                          int(c.at("failures"))});
          continue;
        }
      }
    }

    const ModelConfig point_config = config;
    const BasisState seed_state = subspace_seed_state(point_config);
    const auto records = run_ensemble(
        spec.samples, spec.threads, [&](int k) -> std::map<std::string, double> {
          const DisorderRealization r =
              sample_disorder(point_config, spec.seed, k);
          const FloquetOperator op = build_floquet(point_config, r);
          const std::vector<int> support =
              dynamical_subspace(op.matrix, seed_state);
          return {{"r", subspace_level_ratio(op.matrix, seed_state)},
                  {"subspace_dim", double(support.size())}};
        });
    const AggregateResult agg = disorder_average(records);
    if (agg.count == 0)
      throw numerical_error("all samples failed at s " + std::to_string(s));
    RCurveRow row{s, agg.mean.at("r"), agg.sem.at("r"), agg.count,
                  agg.failures};
    rows.push_back(row);

    if (!dir.empty()) {
      write_samples(dir, records);
      std::ofstream out(dir / "aggregate.csv");
      out.precision(15);
      out << "s,mean_r,sem_r,count,failures\n"
          << row.s << "," << row.mean_r << "," << row.sem_r << "," << row.count
          << "," << row.failures << "\n";
      write_point_meta(dir, hash);
    }
  }
  return rows;
}

DynamicsResult dynamics_experiment(const ExperimentSpec& spec, int num_sites) {
  ModelConfig config = spec.base;
  config.num_sites = num_sites;
  config.validate();
  const SwapNetwork network = config.network();
  const int probe = config.probe_period();
  const auto relabel = relabel_sites(network);

  std::vector<DiagonalObservable> charges;
  if (config.kind == ModelKind::Transition) {
    charges = q_charges(config.n1, config.n2, num_sites);
  } else {
    for (int unit = 0; unit < static_cast<int>(relabel.size()); ++unit)
      for (int slot = 0; slot < network.period; ++slot)
        charges.push_back(sigma_z_charge(unit, slot, relabel, num_sites));
  }
  const auto initials = one_down_per_unit_states(relabel, num_sites);

  std::vector<Eigen::VectorXcd> per_sample(spec.samples);
  const auto records = run_ensemble(
      spec.samples, spec.threads, [&](int k) -> std::map<std::string, double> {
        const DisorderRealization r = sample_disorder(config, spec.seed, k);
        const FloquetOperator op = build_floquet(config, r);
        const SubharmonicSeries series = subharmonic_series(
            op, charges, probe, spec.n_max, initials);
        per_sample[k] = series.values;
        const FourierResult f =
            fourier_analysis(series.values.head(spec.n_max));
        return {{"peak_frequency", f.peak_frequency},
                {"peak_weight", f.peak_weight}};
      });

  DynamicsResult result;
  result.mean_series.values = Eigen::VectorXcd::Zero(spec.n_max + 1);
  result.mean_series.n_probe = probe;
  result.mean_series.lambda = config.lambda;
  result.mean_series.num_sites = num_sites;
  for (int k = 0; k < spec.samples; ++k) {
    if (!records[k].ok()) {
      ++result.failures;
      continue;
    }
    result.mean_series.values += per_sample[k];
    ++result.count;
  }
  if (result.count == 0) throw numerical_error("all dynamics samples failed");
  result.mean_series.values /= double(result.count);
  // One fundamental window: the endpoint duplicates N = 0 in circular time.
  result.fourier = fourier_analysis(result.mean_series.values.head(spec.n_max));

  if (!spec.out_dir.empty()) {
    std::ostringstream tag;
    tag << "L" << num_sites;
    const fs::path dir = fs::path(spec.out_dir) / tag.str();
    fs::create_directories(dir);
    write_samples(dir, records);
    export_series_csv(result.mean_series, (dir / "series.csv").string());
    export_fourier_csv(result.fourier, (dir / "fourier.csv").string());
    write_point_meta(dir, point_hash(spec, tag.str()));
  }
  return result;
}

UpttValidationResult uptt_validation(int problems, std::uint64_t seed,
                                     const std::vector<double>& lambdas,
                                     int dim, int max_order) {
  if (lambdas.size() < 2)
    throw config_error("need at least two strengths for a scaling fit");
  UpttValidationResult result;
  result.mean_slopes.assign(max_order, 0.0);

  auto haar = [&](SplitRng& rng) {
    Eigen::MatrixXcd g(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        const double u1 = std::max(rng.next_double(), 1e-300);
        const double u2 = rng.next_double();
        const double u3 = std::max(rng.next_double(), 1e-300);
        const double u4 = rng.next_double();
        g(i, j) = cxd(std::sqrt(-2 * std::log(u1)) * std::cos(2 * kPi * u2),
                      std::sqrt(-2 * std::log(u3)) * std::cos(2 * kPi * u4));
      }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i)
      q.col(i) *= r(i, i) / std::abs(r(i, i));
    return q;
  };
  auto hermitian = [&](SplitRng& rng) {
    Eigen::MatrixXcd g(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        g(i, j) = cxd(rng.uniform(-1, 1), rng.uniform(-1, 1));
    Eigen::MatrixXcd h = (g + g.adjoint()) / 2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
    return Eigen::MatrixXcd(h / eig.eigenvalues().cwiseAbs().maxCoeff());
  };
  auto expi_neg = [](const Eigen::MatrixXcd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(a);
    Eigen::VectorXcd phases(a.rows());
    for (int i = 0; i < a.rows(); ++i)
      phases(i) = std::exp(cxd(0, -eig.eigenvalues()(i)));
    return Eigen::MatrixXcd(eig.eigenvectors() * phases.asDiagonal() *
                            eig.eigenvectors().adjoint());
  };

  int accepted = 0;
  std::uint64_t attempt = 0;
  const std::uint64_t max_attempts = 50ull * problems;
  while (accepted < problems && attempt < max_attempts) {
    SplitRng rng(seed, attempt++, 7);
    const Eigen::MatrixXcd u0 = haar(rng);
    const QuasiSpectrum spec0 = diagonalize_unitary(u0);
    const Eigen::MatrixXcd direction = hermitian(rng);
    const int target = static_cast<int>(rng.next_u64() % dim);

    std::vector<std::vector<double>> errors(max_order);
    bool usable = true;
    for (double lambda : lambdas) {
      const Eigen::MatrixXcd gen = lambda * direction;
      try {
        const auto problem = make_perturbation_problem(spec0, gen, lambda);
        const SeriesResult series =
            perturbed_energy_series(problem, target, max_order);
        if (!series.converged) {
          usable = false;
          break;
        }
        // Exact level matched by eigenvector overlap.
        const QuasiSpectrum exact = diagonalize_unitary(u0 * expi_neg(gen));
        int best = 0;
        double best_overlap = -1;
        for (int i = 0; i < dim; ++i) {
          const double overlap =
              std::abs(spec0.vectors.col(target).dot(exact.vectors.col(i)));
          if (overlap > best_overlap) {
            best_overlap = overlap;
            best = i;
          }
        }
        for (int order = 1; order <= max_order; ++order) {
          const double err = std::abs(series.energies[order - 1] -
                                      exact.energies(best));
          if (err < 1e-14) {
            usable = false;  // cancellation floor; slope undefined
            break;
          }
          errors[order - 1].push_back(std::log(err));
        }
        if (!usable) break;
      } catch (const degenerate_target_error&) {
        usable = false;
        break;
      }
    }
    if (!usable) {
      ++result.rejected;
      continue;
    }
    std::vector<double> logl(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i)
      logl[i] = std::log(lambdas[i]);
    for (int order = 1; order <= max_order; ++order)
      result.mean_slopes[order - 1] +=
          fit_line(logl, errors[order - 1]).slope;
    ++accepted;
  }
  if (accepted < problems)
    throw numerical_error("could not assemble enough usable problems");
  for (double& slope : result.mean_slopes) slope /= accepted;
  result.problems = accepted;

  // Engineered exact two-fold degeneracies for the block solver.
  for (int trial = 0; trial < 10; ++trial) {
    SplitRng rng(seed, trial, 11);
    Eigen::VectorXd eps0(dim);
    const double base = rng.uniform(-2.0, 2.0);
    eps0(0) = eps0(1) = base;
    for (int i = 2; i < dim; ++i) {
      eps0(i) = rng.uniform(-kPi, kPi);
      if (circle_distance(eps0(i), base) < 0.5) eps0(i) = wrap_angle(base + 1.0 + i);
    }
    Eigen::MatrixXcd u0 = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) u0(i, i) = std::exp(cxd(0, -eps0(i)));
    const QuasiSpectrum spec0 = diagonalize_unitary(u0);
    std::vector<int> cluster;
    for (int i = 0; i < dim; ++i)
      if (circle_distance(spec0.energies(i), wrap_angle(base)) < 1e-9)
        cluster.push_back(i);
    const double eps = 0.02;
    const Eigen::MatrixXcd pair = spec0.vectors.col(cluster[0]) *
                                  spec0.vectors.col(cluster[1]).adjoint();
    const Eigen::MatrixXcd gen = eps * (pair + pair.adjoint());
    const auto problem = make_perturbation_problem(spec0, gen, eps);
    const auto solved =
        degenerate_block_solve(problem, cluster, cluster[0], {.max_order = 2});
    Eigen::VectorXd got = solved.energies;
    std::sort(got.data(), got.data() + got.size());
    const double lo = wrap_angle(base - eps), hi = wrap_angle(base + eps);
    const double err = std::max(circle_distance(got(0), std::min(lo, hi)),
                                circle_distance(got(1), std::max(lo, hi)));
    result.worst_degenerate_error =
        std::max(result.worst_degenerate_error, err);
  }
  return result;
}

std::vector<ChargeNormRow> charge_norms_experiment(const ExperimentSpec& spec,
                                                   int num_sites) {
  ModelConfig config = spec.base;
  config.num_sites = num_sites;
  config.validate();
  std::vector<ChargeNormRow> rows;

  if (config.kind == ModelKind::KickedIsing) {
    const DisorderRealization r = sample_disorder(config, spec.seed, 0);
    const FloquetOperator op = build_floquet(config, r);
    const QuasiSpectrum spec_l = diagonalize_unitary(op.matrix);
    // pi pairing: the spectrum must be invariant under a half-turn shift.
    Eigen::VectorXd shifted(spec_l.dim());
    for (int i = 0; i < spec_l.dim(); ++i)
      shifted(i) = wrap_angle(spec_l.energies(i) + kPi);
    std::sort(shifted.data(), shifted.data() + shifted.size());
    double defect = 0.0;
    for (int i = 0; i < spec_l.dim(); ++i)
      defect = std::max(defect,
                        circle_distance(shifted(i), spec_l.energies(i)));
    rows.push_back({"pi_pairing_defect", defect});
    return rows;
  }

  ModelConfig solvable = config;
  solvable.lambda = 0.0;
  const DisorderRealization r0 = sample_disorder(solvable, spec.seed, 0);
  const FloquetOperator op0 = build_floquet(solvable, r0);
  const SwapNetwork network = config.network();
  const int probe = config.probe_period();
  const auto relabel = relabel_sites(network);

  std::vector<DiagonalObservable> charges;
  if (config.kind == ModelKind::Transition)
    charges = q_charges(config.n1, config.n2, num_sites);
  else
    for (int unit = 0; unit < static_cast<int>(relabel.size()); ++unit)
      for (int slot = 0; slot < network.period; ++slot)
        charges.push_back(sigma_z_charge(unit, slot, relabel, num_sites));

  double advance = 0.0;
  for (const auto& charge : charges) {
    const int slots = config.kind == ModelKind::Transition ? probe
                                                           : network.period;
    const auto next = std::find_if(
        charges.begin(), charges.end(), [&](const DiagonalObservable& c) {
          return c.unit == charge.unit && c.slot == (charge.slot + 1) % slots;
        });
    const Eigen::MatrixXcd advanced =
        op0.matrix.adjoint() * charge.matrix() * op0.matrix;
    advance = std::max(
        advance, (advanced - next->matrix()).cwiseAbs().maxCoeff());
  }
  rows.push_back({"advance_residual_lambda0", advance});
  rows.push_back(
      {"commutator_power_probe_lambda0",
       charge_commutator_norm(op0.matrix, charges[0].matrix(), probe)});

  if (config.kind == ModelKind::NTuple) {
    const QuasiSpectrum spec0 =
        solvable_point_spectrum(network, r0, config.t3);
    const SymmetryOperator s = symmetry_generator(spec0, network.period);
    Eigen::MatrixXcd power = Eigen::MatrixXcd::Identity(op0.dim(), op0.dim());
    for (int k = 0; k < network.period; ++k) power = s.matrix * power;
    rows.push_back(
        {"symmetry_order_defect",
         (power - Eigen::MatrixXcd::Identity(op0.dim(), op0.dim()))
             .cwiseAbs()
             .maxCoeff()});
    rows.push_back({"symmetry_commutator",
                    (s.matrix * op0.matrix - op0.matrix * s.matrix)
                        .cwiseAbs()
                        .maxCoeff()});
  }

  if (config.lambda > 0) {
    const DisorderRealization rl = sample_disorder(config, spec.seed, 0);
    const FloquetOperator opl = build_floquet(config, rl);
    rows.push_back(
        {"commutator_power_probe",
         charge_commutator_norm(opl.matrix, charges[0].matrix(), probe)});
    const QuasiSpectrum specl = diagonalize_unitary(opl.matrix);
    const QuasiSpectrum spec0 = diagonalize_unitary(op0.matrix);
    std::vector<int> all(spec0.dim());
    for (int i = 0; i < spec0.dim(); ++i) all[i] = i;
    const EigenMatch match =
        match_eigenstates(spec0, specl, all, 10 * config.lambda);
    const Eigen::MatrixXcd rotation = eigen_match_rotation(spec0, specl, match);
    const Eigen::MatrixXcd tau =
        rotation * charges[0].matrix() * rotation.adjoint();
    rows.push_back({"commutator_dressed_power_probe",
                    charge_commutator_norm(opl.matrix, tau, probe)});
  }
  return rows;
}

void run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<int> sizes = spec.sizes;
  if (sizes.empty()) sizes.push_back(spec.base.num_sites);

  if (!spec.out_dir.empty()) {
    fs::create_directories(spec.out_dir);
    nlohmann::json manifest;
    manifest["analysis"] = spec.analysis;
    manifest["seed"] = spec.seed;
    manifest["samples"] = spec.samples;
    manifest["n_max"] = spec.n_max;
    manifest["sizes"] = sizes;
    manifest["lambdas"] = spec.lambdas;
    manifest["s_values"] = spec.s_values;
    manifest["config"] = to_key_value(spec.base);
    manifest["version"] = kVersion;
    manifest["hash"] = spec_hash(spec);
    std::ofstream out(fs::path(spec.out_dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
  }

  for (int num_sites : sizes) {
    if (spec.analysis == "gap-scaling") {
      const auto rows = gap_scaling_experiment(spec, num_sites);
      if (!spec.out_dir.empty()) {
        std::ofstream out(fs::path(spec.out_dir) /
                          ("gap_scaling_L" + std::to_string(num_sites) +
                           ".csv"));
        out.precision(15);
        out << "lambda,mean_log10_dev,sem_log10_dev,mean_log10_spacing,"
               "sem_log10_spacing,count,failures\n";
        for (const auto& row : rows)
          out << row.lambda << "," << row.mean_log10_dev << ","
              << row.sem_log10_dev << "," << row.mean_log10_spacing << ","
              << row.sem_log10_spacing << "," << row.count << ","
              << row.failures << "\n";
        if (rows.size() >= 3) {
          std::vector<double> x, y;
          for (const auto& row : rows) {
            x.push_back(std::log10(row.lambda));
            y.push_back(row.mean_log10_dev);
          }
          const GapSlopeFit fit = fit_gap_slope(x, y, num_sites / 4.0);
          nlohmann::json j;
          j["slope"] = fit.free_fit.slope;
          j["intercept"] = fit.free_fit.intercept;
          j["residual"] = fit.free_fit.residual;
          j["fixed_slope"] = fit.fixed_slope;
          j["fixed_residual"] = fit.fixed_residual;
          std::ofstream fout(fs::path(spec.out_dir) /
                             ("gap_fit_L" + std::to_string(num_sites) +
                              ".json"));
          fout << j.dump(2) << "\n";
        }
      }
    } else if (spec.analysis == "r-curve") {
      const auto rows = r_curve_experiment(spec, num_sites);
      if (!spec.out_dir.empty()) {
        std::ofstream out(fs::path(spec.out_dir) /
                          ("r_curve_L" + std::to_string(num_sites) + ".csv"));
        out.precision(15);
        out << "s,mean_r,sem_r,count,failures\n";
        for (const auto& row : rows)
          out << row.s << "," << row.mean_r << "," << row.sem_r << ","
              << row.count << "," << row.failures << "\n";
      }
    } else if (spec.analysis == "dynamics") {
      dynamics_experiment(spec, num_sites);
    } else if (spec.analysis == "charge-norms") {
      const auto rows = charge_norms_experiment(spec, num_sites);
      if (!spec.out_dir.empty()) {
        std::ofstream out(fs::path(spec.out_dir) /
                          ("charge_norms_L" + std::to_string(num_sites) +
                           ".csv"));
        out.precision(15);
        out << "label,value\n";
        for (const auto& row : rows)
          out << row.label << "," << row.value << "\n";

        // Companion tables: the charge site lists and the labeled spectrum
        // (with overlaps against the unperturbed eigenbasis when perturbed).
        ModelConfig config = spec.base;
        config.num_sites = num_sites;
        if (config.kind != ModelKind::KickedIsing) {
          std::vector<DiagonalObservable> charges;
          if (config.kind == ModelKind::Transition)
            charges = q_charges(config.n1, config.n2, num_sites);
          else {
            const auto relabel = relabel_sites(config.network());
            for (int unit = 0; unit < static_cast<int>(relabel.size()); ++unit)
              for (int slot = 0; slot < config.network_period(); ++slot)
                charges.push_back(
                    sigma_z_charge(unit, slot, relabel, num_sites));
          }
          export_charges_csv(charges,
                             (fs::path(spec.out_dir) /
                              ("charges_L" + std::to_string(num_sites) +
                               ".csv"))
                                 .string());

          ModelConfig solvable = config;
          solvable.lambda = 0.0;
          const DisorderRealization r0 =
              sample_disorder(solvable, spec.seed, 0);
          QuasiSpectrum spec0;
          if (config.kind == ModelKind::NTuple)
            spec0 = solvable_point_spectrum(config.network(), r0, config.t3);
          else
            spec0 =
                diagonalize_unitary(build_floquet(solvable, r0).matrix);
          const fs::path spectrum_path =
              fs::path(spec.out_dir) /
              ("spectrum_L" + std::to_string(num_sites) + ".csv");
          if (config.lambda > 0) {
            const DisorderRealization rl =
                sample_disorder(config, spec.seed, 0);
            const QuasiSpectrum specl =
                diagonalize_unitary(build_floquet(config, rl).matrix);
            std::vector<int> all(spec0.dim());
            for (int i = 0; i < spec0.dim(); ++i) all[i] = i;
            const EigenMatch match =
                match_eigenstates(spec0, specl, all, 10 * config.lambda);
            QuasiSpectrum labeled = specl;
            labeled.labels.assign(specl.dim(), {});
            Eigen::VectorXd overlaps = Eigen::VectorXd::Zero(specl.dim());
            for (int i = 0; i < spec0.dim(); ++i) {
              if (!spec0.labels.empty())
                labeled.labels[match.matched[i]] = spec0.labels[i];
              overlaps(match.matched[i]) = match.overlaps(i);
            }
            export_spectrum_csv(labeled, spectrum_path.string(), &overlaps);
          } else {
            export_spectrum_csv(spec0, spectrum_path.string());
          }
        }
      }
    } else if (spec.analysis == "uptt-validate") {
      const UpttValidationResult result = uptt_validation(
          spec.uptt_problems, spec.seed, {0.04, 0.02, 0.01});
      if (!spec.out_dir.empty()) {
        std::ofstream out(fs::path(spec.out_dir) / "uptt_validate.csv");
        out.precision(15);
        out << "order,mean_slope\n";
        for (std::size_t j = 0; j < result.mean_slopes.size(); ++j)
          out << (j + 1) << "," << result.mean_slopes[j] << "\n";
        nlohmann::json summary;
        summary["problems"] = result.problems;
        summary["rejected"] = result.rejected;
        summary["worst_degenerate_error"] = result.worst_degenerate_error;
        std::ofstream sout(fs::path(spec.out_dir) / "uptt_summary.json");
        sout << summary.dump(2) << "\n";
      }
      break;  // size-independent
    }
  }
}

}  // namespace dtc
