#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "dtc/errors.hpp"
#include "dtc/model.hpp"
#include "dtc/rng.hpp"
#include "dtc/spectral.hpp"

using namespace dtc;
using cxd = std::complex<double>;

namespace {

ModelConfig ntuple_config(int n, int L, double lambda) {
  ModelConfig config;
  config.kind = ModelKind::NTuple;
  config.n = n;
  config.num_sites = L;
  config.lambda = lambda;
  return config;
}

ModelConfig transition_config(int n1, int n2, int L, double s, double lambda) {
  ModelConfig config;
  config.kind = ModelKind::Transition;
  config.n1 = n1;
  config.n2 = n2;
  config.num_sites = L;
  config.s = s;
  config.lambda = lambda;
  return config;
}

/// Reference product of the three segment exponentials, all taken by full
/// Hermitian eigendecomposition.
Eigen::MatrixXcd dense_floquet(const ModelConfig& config,
                               const DisorderRealization& realization) {
  auto [h1, h2] = config.kind == ModelKind::Transition
                      ? build_transition_hamiltonians(config, realization)
                      : build_swap_hamiltonians(config, realization);
  const Eigen::MatrixXd h_int = build_h_int(realization, config.num_sites);
  return hermitian_exponential(h_int, config.t3) *
         hermitian_exponential(h2, config.t2) *
         hermitian_exponential(h1, config.t1);
}

double phase_free_distance(const Eigen::MatrixXcd& a,
                           const Eigen::MatrixXcd& b) {
  // min over global phase of max-abs difference
  const cxd trace = (a.adjoint() * b).trace();
  const cxd phase = trace / std::abs(trace);
  return (a * phase - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("extensivity coefficient branches") {
  CHECK(kac_coefficient(12, 1.5) == 1.0);
  CHECK(kac_coefficient(5, 1.5) == 1.0);
  CHECK(kac_coefficient(12, 0.5) ==
        doctest::Approx(3.4641016151377544).epsilon(1e-12));
  CHECK(kac_coefficient(12, 1.0) == doctest::Approx(std::log(12.0)));
}

TEST_CASE("disorder sampling ranges and determinism") {
  const ModelConfig config = ntuple_config(4, 12, 0.02);
  const DisorderRealization r = sample_disorder(config, 42, 3);

  SUBCASE("same key gives bit-identical draws") {
    const DisorderRealization r2 = sample_disorder(config, 42, 3);
    CHECK(r.coupling == r2.coupling);
    CHECK(r.field_z == r2.field_z);
    CHECK(r.field_x == r2.field_x);
    const DisorderRealization other = sample_disorder(config, 42, 4);
    CHECK(r.coupling != other.coupling);
  }

  SUBCASE("couplings stay inside the sampling bounds") {
    const double kac = kac_coefficient(12, 0.5);
    for (int i = 0; i < 12; ++i)
      for (int j = i + 1; j < 12; ++j) {
        const double d = std::abs(i - j);
        const double lo = 2.0 / (kac * std::pow(d, 0.5));
        const double hi = 6.0 / (kac * std::pow(d, 0.5));
        CHECK(r.coupling(i, j) >= lo);
        CHECK(r.coupling(i, j) <= hi);
        CHECK(r.coupling(i, j) == r.coupling(j, i));
      }
    for (int i = 0; i < 12; ++i) {
      CHECK(r.field_z(i) >= 0.0);
      CHECK(r.field_z(i) <= 24.0);
      CHECK(std::abs(r.field_x(i)) <= 0.02);
    }
    CHECK(r.eps1 == doctest::Approx(0.018));
    CHECK(r.eps2 == doctest::Approx(0.022));
  }

  SUBCASE("zero perturbation zeroes all imperfections") {
    const DisorderRealization r0 =
        sample_disorder(ntuple_config(4, 12, 0.0), 42, 3);
    CHECK(r0.eps1 == 0.0);
    CHECK(r0.eps2 == 0.0);
    CHECK(r0.field_x.isZero(0.0));
    // Couplings and fields do not depend on the perturbation strength.
    CHECK(r0.coupling == r.coupling);
    CHECK(r0.field_z == r.field_z);
  }

  SUBCASE("short-range alternative") {
    ModelConfig cut = config;
    cut.j_cutoff = 2;
    const DisorderRealization rc = sample_disorder(cut, 42, 3);
    for (int i = 0; i < 12; ++i)
      for (int j = i + 1; j < 12; ++j) {
        if (j - i > 2)
          CHECK(rc.coupling(i, j) == 0.0);
        else {
          CHECK(rc.coupling(i, j) >= 2.0);
          CHECK(rc.coupling(i, j) <= 6.0);
        }
      }
  }
}

TEST_CASE("interaction Hamiltonian") {
  SUBCASE("single site with transverse field") {
    DisorderRealization r;
    r.coupling = Eigen::MatrixXd::Zero(1, 1);
    r.field_z = Eigen::VectorXd::Constant(1, 2.0);
    r.field_x = Eigen::VectorXd::Constant(1, 0.5);
    const Eigen::MatrixXd h = build_h_int(r, 1);
    CHECK(h(0, 0) == 2.0);
    CHECK(h(1, 1) == -2.0);
    CHECK(h(0, 1) == 0.5);
    CHECK(h(1, 0) == 0.5);
  }

  const ModelConfig config = ntuple_config(4, 8, 0.02);
  const DisorderRealization r = sample_disorder(config, 7, 0);
  const Eigen::MatrixXd h = build_h_int(r, 8);

  SUBCASE("Hermitian") {
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("diagonal matches the bit-arithmetic energy on random states") {
    SplitRng rng(1, 2, 3);
    for (int trial = 0; trial < 100; ++trial) {
      const std::uint64_t z = rng.next_u64() & 0xff;
      CHECK(h(z, z) ==
            doctest::Approx(interaction_energy(z, r, 8)).epsilon(1e-12));
    }
  }

  SUBCASE("no transverse field means exactly diagonal") {
    const DisorderRealization r0 =
        sample_disorder(ntuple_config(4, 8, 0.0), 7, 0);
    const Eigen::MatrixXd h0 = build_h_int(r0, 8);
    CHECK((h0 - Eigen::MatrixXd(h0.diagonal().asDiagonal()))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("swap layers act as exact swaps at zero imperfection") {
  const ModelConfig config = ntuple_config(2, 2, 0.0);
  const DisorderRealization r = sample_disorder(config, 11, 0);
  auto [h1, h2] = build_swap_hamiltonians(config, r);
  CHECK((h1 - h1.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXcd u1 = hermitian_exponential(h1, config.t1);

  // |up down> (bits 10) -> |down up> (bits 01) up to a global phase
  CHECK(std::abs(u1(1, 2)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(u1(2, 1)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(u1(1, 1)) < 1e-12);

  // Applying the layer twice is the identity up to a global phase.
  CHECK(phase_free_distance(u1 * u1, Eigen::MatrixXcd::Identity(4, 4)) < 1e-12);
}

TEST_CASE("layer exponential deviation is linear in the imperfection") {
  const ModelConfig config = ntuple_config(2, 4, 0.0);
  const DisorderRealization r0 = sample_disorder(config, 11, 0);
  auto [h1_exact, h2_exact] = build_swap_hamiltonians(config, r0);
  const Eigen::MatrixXcd swap_layer = hermitian_exponential(h1_exact, 0.5);

  auto deviation = [&](double eps1) {
    DisorderRealization r = r0;
    r.eps1 = eps1;
    auto [h1, h2] = build_swap_hamiltonians(config, r);
    return (hermitian_exponential(h1, 0.5) - swap_layer).norm();
  };
  const double d1 = deviation(0.018);
  const double d2 = deviation(0.009);
  CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.01));
  CHECK(d1 < 10 * 0.018);
}

TEST_CASE("Floquet operator structure") {
  SUBCASE("unperturbed operator is monomial") {
    for (auto [n, L] : std::vector<std::pair<int, int>>{{4, 4}, {3, 6}, {2, 6}}) {
      const ModelConfig config = ntuple_config(n, L, 0.0);
      const FloquetOperator op =
          build_floquet(config, sample_disorder(config, 5, 0));
      for (int col = 0; col < op.dim(); ++col) {
        int nonzero = 0;
        for (int row = 0; row < op.dim(); ++row) {
          const double a = std::abs(op.matrix(row, col));
          if (a > 1e-12) {
            ++nonzero;
            CHECK(a == doctest::Approx(1.0).epsilon(1e-10));
          }
        }
        CHECK(nonzero == 1);
      }
    }
  }

  SUBCASE("n-th power restricted to an orbit is a pure phase") {
    const ModelConfig config = ntuple_config(4, 4, 0.0);
    const FloquetOperator op =
        build_floquet(config, sample_disorder(config, 5, 0));
    Eigen::MatrixXcd power = Eigen::MatrixXcd::Identity(16, 16);
    for (int step = 0; step < 4; ++step) power = op.matrix * power;
    const auto orbits = decompose_orbits(config.network());
    for (const auto& orbit : orbits) {
      const cxd phase = power(orbit.states[0].bits, orbit.states[0].bits);
      CHECK(std::abs(phase) == doctest::Approx(1.0).epsilon(1e-10));
      for (const auto& s : orbit.states)
        CHECK(std::abs(power(s.bits, s.bits) - phase) < 1e-9);
    }
  }

  SUBCASE("unitary to tolerance at finite perturbation") {
    const ModelConfig config = ntuple_config(4, 8, 0.02);
    const FloquetOperator op =
        build_floquet(config, sample_disorder(config, 5, 0));
    CHECK(op.unitarity_defect() < 1e-10);
  }

  SUBCASE("gate assembly matches full-matrix exponentiation") {
    const ModelConfig config = ntuple_config(4, 8, 0.02);
    const DisorderRealization r = sample_disorder(config, 5, 0);
    const FloquetOperator op = build_floquet(config, r);
    CHECK((op.matrix - dense_floquet(config, r)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("transition Hamiltonians interpolate the endpoints") {
  const DisorderRealization r =
      sample_disorder(transition_config(2, 4, 4, 0.0, 0.0), 9, 0);

  auto [h1_n1, h2_n1] = build_swap_hamiltonians(ntuple_config(2, 4, 0.0), r);
  auto [h1_n2, h2_n2] = build_swap_hamiltonians(ntuple_config(4, 4, 0.0), r);

  auto [h1_s0, h2_s0] =
      build_transition_hamiltonians(transition_config(2, 4, 4, 0.0, 0.0), r);
  CHECK((h1_s0 - h1_n1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((h2_s0 - h2_n1).cwiseAbs().maxCoeff() == 0.0);

  auto [h1_s1, h2_s1] =
      build_transition_hamiltonians(transition_config(2, 4, 4, 1.0, 0.0), r);
  CHECK((h1_s1 - h1_n2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((h2_s1 - h2_n2).cwiseAbs().maxCoeff() == 0.0);

  SUBCASE("interior point conserves the paired-site charge after two periods") {
    const ModelConfig config = transition_config(2, 4, 4, 0.6, 0.0);
    const FloquetOperator op = build_floquet(config, r);
    Eigen::VectorXd charge(16);
    for (std::uint64_t z = 0; z < 16; ++z)
      charge(z) = (((z >> 0) & 1) ? -1 : 1) + (((z >> 3) & 1) ? -1 : 1);
    const Eigen::MatrixXcd u2 = op.matrix * op.matrix;
    const Eigen::MatrixXcd commutator =
        u2 * charge.asDiagonal() - charge.asDiagonal() * u2;
    CHECK(commutator.cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("gate assembly matches dense exponentiation at interior s") {
    const ModelConfig config = transition_config(2, 4, 8, 0.6, 0.02);
    const DisorderRealization r8 = sample_disorder(config, 9, 0);
    const FloquetOperator op = build_floquet(config, r8);
    CHECK((op.matrix - dense_floquet(config, r8)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("kicked chain") {
  ModelConfig config = ModelConfig::kicked_ising_defaults();
  config.num_sites = 2;
  config.lambda = 0.0;
  const FloquetOperator op = build_floquet(config, sample_disorder(config, 3, 0));

  SUBCASE("unperturbed kick flips every site") {
    // |up up> (index 0) maps to |down down> (index 3)
    CHECK(std::abs(op.matrix(3, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(op.matrix(0, 0)) < 1e-12);
  }

  SUBCASE("couplings are nearest-neighbor only") {
    ModelConfig big = ModelConfig::kicked_ising_defaults();
    big.num_sites = 6;
    const DisorderRealization r = sample_disorder(big, 3, 0);
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j)
        CHECK((r.coupling(i, j) != 0.0) == (j - i == 1));
  }

  SUBCASE("pairing survives a small kick imperfection") {
    // The half-turn pairing deviation stays far below the mean level
    // spacing 2 pi / 2^L.
    ModelConfig perturbed = ModelConfig::kicked_ising_defaults();
    perturbed.num_sites = 8;
    perturbed.lambda = 0.02;
    const FloquetOperator op =
        build_floquet(perturbed, sample_disorder(perturbed, 3, 0));
    const QuasiSpectrum spec = diagonalize_unitary(op.matrix);
    Eigen::VectorXd shifted(spec.dim());
    for (int i = 0; i < spec.dim(); ++i)
      shifted(i) = wrap_angle(spec.energies(i) + M_PI);
    std::sort(shifted.data(), shifted.data() + shifted.size());
    double pairing = 0.0;
    for (int i = 0; i < spec.dim(); ++i)
      pairing = std::max(pairing,
                         circle_distance(shifted(i), spec.energies(i)));
    CHECK(pairing < (2 * M_PI / 256) / 100);
  }
}

TEST_CASE("config serialization round-trips") {
  ModelConfig config = transition_config(2, 4, 8, 0.37, 0.015);
  config.j_cutoff = 5;
  config.periodic = true;
  config.kappa = 0.75;
  std::istringstream in(to_key_value(config));
  const ModelConfig parsed = model_config_from_key_value(in);
  CHECK(to_key_value(parsed) == to_key_value(config));

  std::istringstream bad("sites = 8\nwat = 3\n");
  CHECK_THROWS_AS(model_config_from_key_value(bad), config_error);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(ntuple_config(4, 6, 0.0).validate(), config_error);
  ModelConfig negative = ntuple_config(4, 4, -0.1);
  CHECK_THROWS_AS(negative.validate(), config_error);
  ModelConfig bad_s = transition_config(2, 4, 4, 1.5, 0.0);
  CHECK_THROWS_AS(bad_s.validate(), config_error);
}

TEST_CASE("realization JSON provenance") {
  const ModelConfig config = ntuple_config(2, 4, 0.01);
  const DisorderRealization r = sample_disorder(config, 77, 5);
  const std::string json = r.to_json();
  CHECK(json.find("\"master_seed\": 77") != std::string::npos);
  CHECK(json.find("\"sample_index\": 5") != std::string::npos);
  CHECK(json.find("coupling") != std::string::npos);
}
