#include "dtc/model.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dtc/errors.hpp"
#include "dtc/rng.hpp"

namespace dtc {

using cxd = std::complex<double>;
constexpr cxd kI{0.0, 1.0};

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::NTuple: return "n-tuple";
    case ModelKind::Transition: return "transition";
    case ModelKind::KickedIsing: return "kicked-ising";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "n-tuple" || name == "ntuple" || name == "ndtc")
    return ModelKind::NTuple;
  if (name == "transition" || name == "st") return ModelKind::Transition;
  if (name == "kicked-ising" || name == "kicked_ising" || name == "ki")
    return ModelKind::KickedIsing;
  throw config_error("unknown model kind: " + name);
}

void ModelConfig::validate() const {
  if (num_sites < 2) throw config_error("need at least 2 sites");
  if (num_sites > 24) throw config_error("dense simulation capped at 24 sites");
  if (t1 <= 0 || t2 <= 0 || t3 <= 0)
    throw config_error("segment durations must be positive");
  if (s < 0 || s > 1) throw config_error("transition parameter s must be in [0,1]");
  if (lambda < 0) throw config_error("perturbation strength must be >= 0");
  if (kappa < 0) throw config_error("power-law exponent must be >= 0");
  if (eps1_ratio < 0 || eps2_ratio < 0 || ex_ratio < 0)
    throw config_error("imperfection ratios must be >= 0");
  if (j_cutoff && *j_cutoff < 1) throw config_error("coupling cutoff must be >= 1");
  if (kind != ModelKind::KickedIsing) network();  // checks divisibility
}

int ModelConfig::probe_period() const {
  switch (kind) {
    case ModelKind::NTuple: return n;
    case ModelKind::Transition: return std::gcd(n1, n2);
    case ModelKind::KickedIsing: return 2;
  }
  return 1;
}

int ModelConfig::network_period() const {
  switch (kind) {
    case ModelKind::NTuple: return n;
    case ModelKind::Transition: return std::lcm(n1, n2);
    default:
      throw config_error("kicked chain has no swap network");
  }
}

SwapNetwork ModelConfig::network() const {
  if (kind == ModelKind::NTuple) return permutation_network(n, num_sites);
  if (kind == ModelKind::Transition)
    return permutation_network(n1, n2, num_sites);
  throw config_error("kicked chain has no swap network");
}

ModelConfig ModelConfig::kicked_ising_defaults() {
  ModelConfig config;
  config.kind = ModelKind::KickedIsing;
  config.t1 = 1.0;
  config.t2 = 1.0;   // makes the unperturbed kick an exact global flip
  config.eps1_ratio = 1.0;  // kick deviation = lambda
  return config;
}

std::string to_key_value(const ModelConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "sites = " << c.num_sites << "\n"
      << "kind = " << to_string(c.kind) << "\n"
      << "n = " << c.n << "\n"
      << "n1 = " << c.n1 << "\n"
      << "n2 = " << c.n2 << "\n"
      << "s = " << c.s << "\n"
      << "j_bar = " << c.j_bar << "\n"
      << "hz_bar = " << c.hz_bar << "\n"
      << "kappa = " << c.kappa << "\n"
      << "lambda = " << c.lambda << "\n"
      << "t1 = " << c.t1 << "\n"
      << "t2 = " << c.t2 << "\n"
      << "t3 = " << c.t3 << "\n"
      << "eps1_ratio = " << c.eps1_ratio << "\n"
      << "eps2_ratio = " << c.eps2_ratio << "\n"
      << "ex_ratio = " << c.ex_ratio << "\n"
      << "j_cutoff = " << (c.j_cutoff ? std::to_string(*c.j_cutoff) : "none")
      << "\n"
      << "periodic = " << (c.periodic ? 1 : 0) << "\n";
  return out.str();
}

ModelConfig model_config_from_key_value(std::istream& in) {
  ModelConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw config_error("config line " + std::to_string(line_no) +
                           ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "sites") c.num_sites = std::stoi(value);
      else if (key == "kind") c.kind = model_kind_from_string(value);
      else if (key == "n") c.n = std::stoi(value);
      else if (key == "n1") c.n1 = std::stoi(value);
      else if (key == "n2") c.n2 = std::stoi(value);
      else if (key == "s") c.s = std::stod(value);
      else if (key == "j_bar") c.j_bar = std::stod(value);
      else if (key == "hz_bar") c.hz_bar = std::stod(value);
      else if (key == "kappa") c.kappa = std::stod(value);
      else if (key == "lambda") c.lambda = std::stod(value);
      else if (key == "t1") c.t1 = std::stod(value);
      else if (key == "t2") c.t2 = std::stod(value);
      else if (key == "t3") c.t3 = std::stod(value);
      else if (key == "eps1_ratio") c.eps1_ratio = std::stod(value);
      else if (key == "eps2_ratio") c.eps2_ratio = std::stod(value);
      else if (key == "ex_ratio") c.ex_ratio = std::stod(value);
      else if (key == "j_cutoff")
        c.j_cutoff = (value == "none") ? std::nullopt
                                       : std::optional<int>(std::stoi(value));
      else if (key == "periodic") c.periodic = (std::stoi(value) != 0);
      else throw config_error("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
      throw config_error("config line " + std::to_string(line_no) +
                         ": bad value for " + key);
    }
  }
  c.validate();
  return c;
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  return model_config_from_key_value(in);
}

std::string DisorderRealization::to_json() const {
  nlohmann::json j;
  j["master_seed"] = master_seed;
  j["sample_index"] = sample_index;
  j["eps1"] = eps1;
  j["eps2"] = eps2;
  const int L = static_cast<int>(field_z.size());
  j["field_z"] = std::vector<double>(field_z.data(), field_z.data() + L);
  j["field_x"] = std::vector<double>(field_x.data(), field_x.data() + L);
  auto& couplings = j["coupling"] = nlohmann::json::array();
  for (int i = 0; i < L; ++i)
    for (int k = i + 1; k < L; ++k)
      if (coupling(i, k) != 0.0)
        couplings.push_back({i, k, coupling(i, k)});
  return j.dump(2);
}

double kac_coefficient(int num_sites, double kappa) {
  if (num_sites < 2) throw config_error("need at least 2 sites");
  if (kappa < 1.0) return std::pow(num_sites, 1.0 - kappa);
  if (kappa == 1.0) return std::log(static_cast<double>(num_sites));
  return 1.0;
}

namespace {

int site_distance(int i, int j, int num_sites, bool periodic) {
  int d = std::abs(i - j);
  if (periodic) d = std::min(d, num_sites - d);
  return d;
}

}  // namespace

DisorderRealization sample_disorder(const ModelConfig& config,
                                    std::uint64_t master_seed,
                                    std::uint64_t sample_index) {
  config.validate();
  const int L = config.num_sites;
  DisorderRealization r;
  r.master_seed = master_seed;
  r.sample_index = sample_index;
  r.coupling = Eigen::MatrixXd::Zero(L, L);
  r.field_z = Eigen::VectorXd::Zero(L);
  r.field_x = Eigen::VectorXd::Zero(L);

  // Raw coupling draws are taken for every pair in a fixed order, so the
  // same seed gives the same underlying field regardless of range options.
  SplitRng coupling_rng(master_seed, sample_index,
                        static_cast<std::uint64_t>(RngStream::Coupling));
  const double kac = kac_coefficient(L, config.kappa);
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j) {
      const double raw = coupling_rng.uniform(0.5, 1.5) * config.j_bar;
      const int d = site_distance(i, j, L, config.periodic);
      double value = 0.0;
      if (config.kind == ModelKind::KickedIsing) {
        if (d == 1) value = raw;
      } else if (config.j_cutoff) {
        if (d <= *config.j_cutoff) value = raw;
      } else {
        value = raw / (kac * std::pow(d, config.kappa));
      }
      r.coupling(i, j) = r.coupling(j, i) = value;
    }

  SplitRng field_rng(master_seed, sample_index,
                     static_cast<std::uint64_t>(RngStream::FieldZ));
  for (int i = 0; i < L; ++i)
    r.field_z(i) = field_rng.uniform(0.0, 2.0 * config.hz_bar);

  const double ex = config.ex_ratio * config.lambda;
  SplitRng x_rng(master_seed, sample_index,
                 static_cast<std::uint64_t>(RngStream::FieldX));
  for (int i = 0; i < L; ++i) r.field_x(i) = ex * x_rng.uniform(-1.0, 1.0);

  r.eps1 = config.eps1_ratio * config.lambda;
  r.eps2 = config.eps2_ratio * config.lambda;
  return r;
}

double interaction_energy(std::uint64_t state_bits,
                          const DisorderRealization& realization,
                          int num_sites) {
  double e = 0.0;
  for (int i = 0; i < num_sites; ++i) {
    const int zi = ((state_bits >> i) & 1ull) ? -1 : +1;
    e += realization.field_z(i) * zi;
    for (int j = i + 1; j < num_sites; ++j) {
      const int zj = ((state_bits >> j) & 1ull) ? -1 : +1;
      e += realization.coupling(i, j) * zi * zj;
    }
  }
  return e;
}

Eigen::MatrixXd build_h_int(const DisorderRealization& realization,
                            int num_sites) {
  const int L = num_sites;
  const std::uint64_t dim = 1ull << L;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  // Diagonal accumulated term by term (pair couplings, then fields).
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j) {
      const double coupling = realization.coupling(i, j);
      if (coupling == 0.0) continue;
      for (std::uint64_t z = 0; z < dim; ++z) {
        const bool anti = ((z >> i) ^ (z >> j)) & 1ull;
        h(z, z) += anti ? -coupling : coupling;
      }
    }
  for (int i = 0; i < L; ++i) {
    const double field = realization.field_z(i);
    if (field == 0.0) continue;
    for (std::uint64_t z = 0; z < dim; ++z)
      h(z, z) += ((z >> i) & 1ull) ? -field : field;
  }
  for (int i = 0; i < L; ++i) {
    const double x = realization.field_x(i);
    if (x == 0.0) continue;
    for (std::uint64_t z = 0; z < dim; ++z) h(z ^ (1ull << i), z) += x;
  }
  return h;
}

namespace {

void add_heisenberg_bond(Eigen::MatrixXd& h, int a, int b, double weight,
                         int num_sites) {
  // weight * (sigma_a . sigma_b - 1) / 2
  const std::uint64_t dim = 1ull << num_sites;
  const std::uint64_t mask = (1ull << a) | (1ull << b);
  for (std::uint64_t z = 0; z < dim; ++z) {
    const bool anti = ((z >> a) ^ (z >> b)) & 1ull;
    if (anti) {
      h(z, z) -= weight;
      h(z ^ mask, z) += weight;
    }
  }
}

struct WeightedBond {
  int a, b;
  double weight;
};

std::vector<WeightedBond> merge_bonds(
    const std::vector<std::pair<int, int>>& first, double w1,
    const std::vector<std::pair<int, int>>& second, double w2) {
  std::vector<WeightedBond> out;
  for (auto [a, b] : first) out.push_back({a, b, w1});
  for (auto [a, b] : second) {
    bool merged = false;
    for (auto& bond : out)
      if (bond.a == a && bond.b == b) {
        bond.weight += w2;
        merged = true;
        break;
      }
    if (!merged) out.push_back({a, b, w2});
  }
  return out;
}

std::pair<std::vector<WeightedBond>, std::vector<WeightedBond>> drive_bonds(
    const ModelConfig& config) {
  if (config.kind == ModelKind::NTuple) {
    auto [odd, even] = layer_bonds(config.n, config.num_sites);
    return {merge_bonds(odd, 1.0, {}, 0.0), merge_bonds(even, 1.0, {}, 0.0)};
  }
  if (config.kind == ModelKind::Transition) {
    auto [odd1, even1] = layer_bonds(config.n1, config.num_sites);
    auto [odd2, even2] = layer_bonds(config.n2, config.num_sites);
    return {merge_bonds(odd1, 1.0 - config.s, odd2, config.s),
            merge_bonds(even1, 1.0 - config.s, even2, config.s)};
  }
  throw config_error("kicked chain has no swap layers");
}

Eigen::MatrixXd layer_hamiltonian(const std::vector<WeightedBond>& bonds,
                                  double prefactor, int num_sites) {
  const std::uint64_t dim = 1ull << num_sites;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& bond : bonds)
    add_heisenberg_bond(h, bond.a, bond.b, prefactor * bond.weight, num_sites);
  return h;
}

/// Left-multiplies m by the two-site bond gate exp(-i theta (s.s - 1)/2).
void apply_bond_gate(Eigen::MatrixXcd& m, int a, int b, double theta) {
  const std::uint64_t dim = m.rows();
  const cxd phase = std::exp(kI * theta);
  const cxd diag = phase * std::cos(theta);
  const cxd flip = phase * (-kI) * std::sin(theta);
  const std::uint64_t mask = (1ull << a) | (1ull << b);
  for (std::uint64_t z = 0; z < dim; ++z) {
    if (!((z >> a) & 1ull) || ((z >> b) & 1ull)) continue;  // visit each pair once
    const std::uint64_t z2 = z ^ mask;
    Eigen::RowVectorXcd row = diag * m.row(z) + flip * m.row(z2);
    m.row(z2) = diag * m.row(z2) + flip * m.row(z);
    m.row(z) = row;
  }
}

/// Left-multiplies m by the single-site gate exp(-i theta sigma^x_a).
void apply_x_gate(Eigen::MatrixXcd& m, int a, double theta) {
  const std::uint64_t dim = m.rows();
  const cxd c = std::cos(theta);
  const cxd s = -kI * std::sin(theta);
  for (std::uint64_t z = 0; z < dim; ++z) {
    if ((z >> a) & 1ull) continue;
    const std::uint64_t z2 = z | (1ull << a);
    Eigen::RowVectorXcd row = c * m.row(z) + s * m.row(z2);
    m.row(z2) = c * m.row(z2) + s * m.row(z);
    m.row(z) = row;
  }
}

void check_unitarity(const FloquetOperator& op) {
  // Full check is O(dim^3); above 2^10 spot-check a handful of columns.
  const int dim = op.dim();
  double defect = 0.0;
  if (dim <= 1024) {
    defect = op.unitarity_defect();
  } else {
    SplitRng rng(12345, dim, static_cast<std::uint64_t>(RngStream::Generic));
    for (int trial = 0; trial < 8; ++trial) {
      const int k = static_cast<int>(rng.next_u64() % dim);
      const int l = static_cast<int>(rng.next_u64() % dim);
      const cxd dot = op.matrix.col(k).dot(op.matrix.col(l));
      defect = std::max(defect, std::abs(dot - (k == l ? 1.0 : 0.0)));
    }
  }
  if (defect > 1e-10)
    throw numerical_error("Floquet operator unitarity defect " +
                          std::to_string(defect));
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_swap_hamiltonians(
    const ModelConfig& config, const DisorderRealization& realization) {
  if (config.kind != ModelKind::NTuple)
    throw config_error("swap Hamiltonians are defined for the n-tuple model");
  auto [odd, even] = drive_bonds(config);
  const double pi = std::numbers::pi;
  return {layer_hamiltonian(odd, pi / (2 * config.t1) * (1 - realization.eps1),
                            config.num_sites),
          layer_hamiltonian(even, pi / (2 * config.t2) * (1 - realization.eps2),
                            config.num_sites)};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_transition_hamiltonians(
    const ModelConfig& config, const DisorderRealization& realization) {
  if (config.kind != ModelKind::Transition)
    throw config_error("transition Hamiltonians need the transition model");
  auto [odd, even] = drive_bonds(config);
  const double pi = std::numbers::pi;
  return {layer_hamiltonian(odd, pi / (2 * config.t1) * (1 - realization.eps1),
                            config.num_sites),
          layer_hamiltonian(even, pi / (2 * config.t2) * (1 - realization.eps2),
                            config.num_sites)};
}

double FloquetOperator::unitarity_defect() const {
  const Eigen::MatrixXcd gram = matrix.adjoint() * matrix;
  return (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols()))
      .cwiseAbs()
      .maxCoeff();
}

Eigen::MatrixXcd hermitian_exponential(const Eigen::MatrixXd& h, double theta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success)
    throw numerical_error("eigendecomposition failed");
  const Eigen::VectorXcd phases =
      (-kI * theta * solver.eigenvalues().cast<cxd>().array()).exp();
  return solver.eigenvectors().cast<cxd>() * phases.asDiagonal() *
         solver.eigenvectors().transpose().cast<cxd>();
}

FloquetOperator build_floquet(const ModelConfig& config,
                              const DisorderRealization& realization) {
  config.validate();
  if (config.kind == ModelKind::KickedIsing)
    return build_kicked_ising(config, realization);

  const int L = config.num_sites;
  const std::uint64_t dim = 1ull << L;
  const double pi = std::numbers::pi;
  auto [odd, even] = drive_bonds(config);

  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
  for (const auto& bond : odd)
    apply_bond_gate(u, bond.a, bond.b,
                    pi / 2 * (1 - realization.eps1) * bond.weight);
  for (const auto& bond : even)
    apply_bond_gate(u, bond.a, bond.b,
                    pi / 2 * (1 - realization.eps2) * bond.weight);

  if (realization.field_x.isZero(0.0)) {
    // Diagonal interaction segment: scale rows by the Z-basis phases.
    for (std::uint64_t z = 0; z < dim; ++z)
      u.row(z) *= std::exp(-kI * config.t3 *
                           interaction_energy(z, realization, L));
  } else {
    const Eigen::MatrixXd h_int = build_h_int(realization, L);
    u = hermitian_exponential(h_int, config.t3) * u;
  }

  FloquetOperator op{std::move(u), config, realization.master_seed,
                     realization.sample_index};
  check_unitarity(op);
  return op;
}

FloquetOperator build_kicked_ising(const ModelConfig& config,
                                   const DisorderRealization& realization) {
  if (config.kind != ModelKind::KickedIsing)
    throw config_error("build_kicked_ising needs the kicked-ising model kind");
  config.validate();
  const int L = config.num_sites;
  const std::uint64_t dim = 1ull << L;
  const double pi = std::numbers::pi;

  const Eigen::MatrixXd h_ising = build_h_int(realization, L);
  Eigen::MatrixXcd u = realization.field_x.isZero(0.0)
                           ? Eigen::MatrixXcd(
                                 (-kI * config.t1 *
                                  h_ising.diagonal().array().cast<cxd>())
                                     .exp()
                                     .matrix()
                                     .asDiagonal())
                           : hermitian_exponential(h_ising, config.t1);
  const double theta = (pi / 2 - realization.eps1) * config.t2;
  for (int i = 0; i < L; ++i) apply_x_gate(u, i, theta);

  FloquetOperator op{std::move(u), config, realization.master_seed,
                     realization.sample_index};
  check_unitarity(op);
  return op;
}

}  // namespace dtc
