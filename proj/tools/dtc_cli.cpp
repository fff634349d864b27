// Command-line front end: configure a model, sweep disorder ensembles and
// write plot-ready CSV tables.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "dtc/errors.hpp"
#include "dtc/harness.hpp"
#include "dtc/model.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::uint64_t seed = 1;
  int samples = 100;
  int threads = 0;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path,
                  "model config file (key = value lines)");
  cmd->add_option("--seed", opts.seed, "master seed for the ensemble");
  cmd->add_option("--samples", opts.samples, "disorder samples per point");
  cmd->add_option("--threads", opts.threads,
                  "worker threads (0 = hardware concurrency)");
  cmd->add_option("--out", opts.out, "output directory");
}

dtc::ExperimentSpec make_spec(const CommonOptions& opts,
                              const std::string& analysis) {
  dtc::ExperimentSpec spec;
  if (!opts.config_path.empty())
    spec.base = dtc::load_model_config(opts.config_path);
  spec.analysis = analysis;
  spec.seed = opts.seed;
  spec.samples = opts.samples;
  spec.threads = opts.threads;
  spec.out_dir = opts.out;
  return spec;
}

int run_collapse(const std::string& in_dir, double nu_min, double nu_max,
                 double nu_step, double s_lo, double s_hi,
                 const std::string& out) {
  std::vector<dtc::RPoint> data;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("r_curve_L", 0) != 0 || entry.path().extension() != ".csv")
      continue;
    const int num_sites = std::stoi(name.substr(9));
    std::ifstream in(entry.path());
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ls(line);
      std::string cell;
      std::vector<double> cells;
      while (std::getline(ls, cell, ',')) cells.push_back(std::stod(cell));
      if (cells.size() >= 2) data.push_back({num_sites, cells[0], cells[1]});
    }
  }
  if (data.empty())
    throw dtc::config_error("no r_curve_L*.csv tables in " + in_dir);
  std::vector<double> nu_grid;
  for (double nu = nu_min; nu <= nu_max + 1e-12; nu += nu_step)
    nu_grid.push_back(nu);
  const dtc::CollapseResult best =
      dtc::finite_size_collapse(data, {s_lo, s_hi}, nu_grid);
  std::cout << "nu = " << best.nu << "  s* = " << best.s_star
            << "  score = " << best.score << "\n";
  if (!out.empty()) {
    fs::create_directories(out);
    nlohmann::json j;
    j["nu"] = best.nu;
    j["s_star"] = best.s_star;
    j["score"] = best.score;
    std::ofstream file(fs::path(out) / "collapse.json");
    file << j.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Floquet permutation-drive simulator"};
  app.require_subcommand(1);

  CommonOptions gap_opts, r_opts, dyn_opts, uptt_opts, charge_opts;
  std::vector<double> lambdas{0.05, 0.02, 0.01, 0.005};
  std::vector<double> s_values;
  std::vector<int> sizes;
  int n_max = 20000;
  int uptt_problems = 50;
  double s_from = 0.0, s_to = 1.0;
  int s_points = 0;

  auto* gap = app.add_subcommand("gap-scaling",
                                 "subharmonic-ladder deviation vs strength");
  add_common(gap, gap_opts);
  gap->add_option("--lambdas", lambdas, "perturbation strengths");
  gap->add_option("--sizes", sizes, "chain lengths (default: config value)");

  auto* rcurve = app.add_subcommand("r-curve",
                                    "level statistics across the transition");
  add_common(rcurve, r_opts);
  rcurve->add_option("--s-values", s_values, "mixing parameters");
  rcurve->add_option("--s-points", s_points,
                     "alternatively: a uniform grid of this many points");
  rcurve->add_option("--s-from", s_from, "grid start");
  rcurve->add_option("--s-to", s_to, "grid end");
  rcurve->add_option("--sizes", sizes, "chain lengths");

  auto* dynamics = app.add_subcommand("dynamics", "stroboscopic response");
  add_common(dynamics, dyn_opts);
  dynamics->add_option("--n-max", n_max, "number of drive periods");
  dynamics->add_option("--sizes", sizes, "chain lengths");

  auto* uptt = app.add_subcommand("uptt-validate",
                                  "perturbation-series scaling checks");
  add_common(uptt, uptt_opts);
  uptt->add_option("--problems", uptt_problems, "random test problems");

  auto* charges = app.add_subcommand("charge-norms",
                                     "charge algebra residuals and norms");
  add_common(charges, charge_opts);
  charges->add_option("--sizes", sizes, "chain lengths");

  std::string collapse_in, collapse_out;
  double nu_min = 0.3, nu_max = 1.2, nu_step = 0.01;
  double s_window_lo = 0.0, s_window_hi = 1.0;
  auto* collapse = app.add_subcommand("collapse",
                                      "finite-size scaling fit of r curves");
  collapse->add_option("--in", collapse_in, "directory with r_curve_L*.csv")
      ->required();
  collapse->add_option("--out", collapse_out, "output directory");
  collapse->add_option("--nu-min", nu_min, "exponent grid start");
  collapse->add_option("--nu-max", nu_max, "exponent grid end");
  collapse->add_option("--nu-step", nu_step, "exponent grid step");
  collapse->add_option("--s-lo", s_window_lo, "critical-point window start");
  collapse->add_option("--s-hi", s_window_hi, "critical-point window end");

  CLI11_PARSE(app, argc, argv);

  try {
    if (collapse->parsed())
      return run_collapse(collapse_in, nu_min, nu_max, nu_step, s_window_lo,
                          s_window_hi, collapse_out);

    dtc::ExperimentSpec spec;
    if (gap->parsed()) {
      spec = make_spec(gap_opts, "gap-scaling");
      spec.lambdas = lambdas;
    } else if (rcurve->parsed()) {
      spec = make_spec(r_opts, "r-curve");
      if (!s_values.empty()) {
        spec.s_values = s_values;
      } else if (s_points > 1) {
        for (int k = 0; k < s_points; ++k)
          spec.s_values.push_back(s_from +
                                  (s_to - s_from) * k / (s_points - 1));
      } else {
        throw dtc::config_error("r-curve needs --s-values or --s-points");
      }
    } else if (dynamics->parsed()) {
      spec = make_spec(dyn_opts, "dynamics");
      spec.n_max = n_max;
    } else if (uptt->parsed()) {
      spec = make_spec(uptt_opts, "uptt-validate");
      spec.uptt_problems = uptt_problems;
    } else if (charges->parsed()) {
      spec = make_spec(charge_opts, "charge-norms");
    }
    spec.sizes = sizes;
    dtc::run_experiment(spec);

    // Console summary for quick runs.
    if (spec.analysis == "gap-scaling" && !spec.out_dir.empty())
      std::cout << "wrote gap tables under " << spec.out_dir << "\n";
    else if (!spec.out_dir.empty())
      std::cout << "wrote results under " << spec.out_dir << "\n";
    return 0;
  } catch (const dtc::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const dtc::insufficient_data_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const dtc::numerical_error& e) {
    std::cerr << "numerical-integrity error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
