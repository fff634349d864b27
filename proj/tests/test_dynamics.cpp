#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "dtc/dynamics.hpp"
#include "dtc/errors.hpp"
#include "dtc/rng.hpp"

using namespace dtc;
using cxd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

namespace {

ModelConfig ntuple_config(int n, int L, double lambda) {
  ModelConfig config;
  config.kind = ModelKind::NTuple;
  config.n = n;
  config.num_sites = L;
  config.lambda = lambda;
  return config;
}

std::vector<DiagonalObservable> all_sigma_charges(int n, int L) {
  const auto relabel = relabel_sites(n, L);
  std::vector<DiagonalObservable> charges;
  for (int unit = 0; unit < static_cast<int>(relabel.size()); ++unit)
    for (int slot = 0; slot < n; ++slot)
      charges.push_back(sigma_z_charge(unit, slot, relabel, L));
  return charges;
}

}  // namespace

TEST_CASE("stroboscopic evolution") {
  SUBCASE("identity drive keeps the trajectory constant") {
    FloquetOperator op;
    op.matrix = Eigen::MatrixXcd::Identity(16, 16);
    op.config = ntuple_config(4, 4, 0.0);
    const auto charges = all_sigma_charges(4, 4);
    const Trajectory traj =
        evolve_stroboscopic(op, BasisState(0b0101, 4), 16, charges);
    for (int n = 0; n <= 16; ++n)
      CHECK((traj.expectations.row(n) - traj.expectations.row(0)).norm() ==
            0.0);
  }

  SUBCASE("row zero equals the initial diagonal expectations") {
    const ModelConfig config = ntuple_config(4, 4, 0.01);
    const FloquetOperator op =
        build_floquet(config, sample_disorder(config, 2, 0));
    const auto charges = all_sigma_charges(4, 4);
    const BasisState initial(0b0010, 4);
    const Trajectory traj = evolve_stroboscopic(op, initial, 4, charges);
    for (std::size_t c = 0; c < charges.size(); ++c)
      CHECK(traj.expectations(0, c) == charges[c].diag(initial.bits));
  }

  SUBCASE("solvable drive is exactly periodic for every orbit") {
    const ModelConfig config = ntuple_config(4, 8, 0.0);
    const FloquetOperator op =
        build_floquet(config, sample_disorder(config, 2, 0));
    const auto charges = all_sigma_charges(4, 8);
    const auto orbits = decompose_orbits(config.network());
    for (const auto& orbit : orbits) {
      const int k = orbit.period;
      const Trajectory traj =
          evolve_stroboscopic(op, orbit.states[0], 2 * k, charges);
      for (std::size_t c = 0; c < charges.size(); ++c) {
        CHECK(std::abs(traj.expectations(k, c) - traj.expectations(0, c)) <
              1e-9);
        CHECK(std::abs(traj.expectations(2 * k, c) - traj.expectations(0, c)) <
              1e-9);
      }
    }
  }

  SUBCASE("norm drift raises a numerical-integrity error") {
    FloquetOperator op;
    op.matrix = 0.9 * Eigen::MatrixXcd::Identity(16, 16);
    op.config = ntuple_config(4, 4, 0.0);
    CHECK_THROWS_AS(evolve_stroboscopic(op, BasisState(1, 4), 4,
                                        all_sigma_charges(4, 4)),
                    numerical_error);
  }

  SUBCASE("norm stays within budget over many periods") {
    const ModelConfig config = ntuple_config(4, 8, 0.02);
    const FloquetOperator op =
        build_floquet(config, sample_disorder(config, 2, 0));
    Eigen::VectorXcd state = Eigen::VectorXcd::Zero(256);
    state(17) = 1.0;
    for (int step = 0; step < 20000; ++step) state = op.matrix * state;
    CHECK(std::abs(state.norm() - 1.0) < 1e-8);
  }

  SUBCASE("eigenbasis propagator agrees with repeated application") {
    const ModelConfig config = ntuple_config(4, 4, 0.02);
    const FloquetOperator op =
        build_floquet(config, sample_disorder(config, 5, 0));
    const StroboscopicPropagator prop(op);
    const BasisState initial(0b0110, 4);
    Eigen::VectorXcd state = Eigen::VectorXcd::Zero(16);
    state(initial.bits) = 1.0;
    for (int step = 0; step <= 50; ++step) {
      if (step == 7 || step == 50) {
        const Eigen::VectorXcd direct = prop.state_at(initial, step);
        CHECK((direct - state).norm() < 1e-8);
      }
      state = op.matrix * state;
    }
  }
}

TEST_CASE("unit probe") {
  const auto charges = all_sigma_charges(4, 4);
  const UnitProbe probe = unit_probe(0, 4, charges);

  SUBCASE("conjugation advances the probe by one phase step") {
    const ModelConfig config = ntuple_config(4, 4, 0.0);
    const FloquetOperator op =
        build_floquet(config, sample_disorder(config, 9, 0));
    const Eigen::MatrixXcd lambda_matrix = probe.diag.asDiagonal();
    const Eigen::MatrixXcd advanced =
        op.matrix.adjoint() * lambda_matrix * op.matrix;
    const cxd phase = std::exp(cxd(0, 2 * kPi / 4));
    CHECK((advanced - phase * lambda_matrix).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("lower-period units give zero expectation") {
    // all-up unit: period 1
    CHECK(std::abs(probe.diag(0)) < 1e-12);
    // pattern symmetric under two permutation steps: period 2
    const auto relabel = relabel_sites(4, 4);
    std::uint64_t bits = 0;
    bits |= 1ull << relabel[0][0];
    bits |= 1ull << relabel[0][2];
    CHECK(std::abs(probe.diag(bits)) < 1e-12);
    // single down: full period, expectation magnitude 2
    CHECK(std::abs(probe.diag(1ull << relabel[0][1])) ==
          doctest::Approx(2.0));
  }

  SUBCASE("two-slot probe reduces to a charge difference") {
    const auto charges2 = all_sigma_charges(2, 4);
    const UnitProbe probe2 = unit_probe(0, 2, charges2);
    // weights: e^{-i pi} = -1 for slot 1, e^{-2 i pi} = +1 for slot 2
    const Eigen::VectorXcd expected =
        (charges2[1].diag - charges2[0].diag).cast<cxd>();
    CHECK((probe2.diag - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("one-down-per-unit initial family") {
  const auto relabel = relabel_sites(4, 8);
  const auto states = one_down_per_unit_states(relabel, 8);
  CHECK(states.size() == 16);
  for (const auto& s : states) {
    int downs_unit0 = 0, downs_unit1 = 0;
    for (int site = 0; site < 4; ++site) downs_unit0 += s.down(site);
    for (int site = 4; site < 8; ++site) downs_unit1 += s.down(site);
    CHECK(downs_unit0 == 1);
    CHECK(downs_unit1 == 1);
  }
}

TEST_CASE("subharmonic series") {
  SUBCASE("solvable n-tuple drive oscillates exactly") {
    const ModelConfig config = ntuple_config(4, 8, 0.0);
    const FloquetOperator op =
        build_floquet(config, sample_disorder(config, 7, 0));
    const auto charges = all_sigma_charges(4, 8);
    const auto initials = one_down_per_unit_states(relabel_sites(4, 8), 8);
    const SubharmonicSeries series =
        subharmonic_series(op, charges, 4, 32, initials);
    CHECK(std::abs(series.values(0) - 1.0) < 1e-12);
    for (int n = 0; n <= 32; ++n)
      CHECK(std::abs(series.values(n) - std::exp(cxd(0, n * 2 * kPi / 4))) <
            1e-9);
  }

  SUBCASE("solvable transition drive oscillates with the common period") {
    ModelConfig config;
    config.kind = ModelKind::Transition;
    config.n1 = 2;
    config.n2 = 4;
    config.num_sites = 8;
    config.s = 0.6;
    config.lambda = 0.0;
    const FloquetOperator op =
        build_floquet(config, sample_disorder(config, 7, 0));
    const auto charges = q_charges(2, 4, 8);
    const auto initials = one_down_per_unit_states(relabel_sites(2, 4, 8), 8);
    const SubharmonicSeries series =
        subharmonic_series(op, charges, 2, 32, initials);
    for (int n = 0; n <= 32; ++n)
      CHECK(std::abs(series.values(n) - double(n % 2 ? -1 : 1)) < 1e-9);
  }

  SUBCASE("states with vanishing probe expectation are excluded") {
    const ModelConfig config = ntuple_config(4, 4, 0.0);
    const FloquetOperator op =
        build_floquet(config, sample_disorder(config, 7, 0));
    const auto charges = all_sigma_charges(4, 4);
    std::vector<BasisState> initials = {BasisState(0, 4),  // all up: excluded
                                        BasisState(1, 4)};
    const SubharmonicSeries series =
        subharmonic_series(op, charges, 4, 8, initials);
    CHECK(std::abs(series.values(4) - 1.0) < 1e-9);

    CHECK_THROWS_AS(
        subharmonic_series(op, charges, 4, 8, {BasisState(0, 4)}),
        config_error);
    CHECK_THROWS_AS(subharmonic_series(op, charges, 4, 8, {}), config_error);
  }
}

TEST_CASE("subharmonic lifetime grows with system size") {
  // First period where the disorder-averaged |A| dips below one half.
  auto half_time = [](int L) {
    const ModelConfig config = ntuple_config(4, L, 0.02);
    const auto relabel = relabel_sites(4, L);
    const auto initials = one_down_per_unit_states(relabel, L);
    std::vector<DiagonalObservable> charges;
    for (int unit = 0; unit < static_cast<int>(relabel.size()); ++unit)
      for (int slot = 0; slot < 4; ++slot)
        charges.push_back(sigma_z_charge(unit, slot, relabel, L));
    Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(2001);
    const int samples = 5;
    for (int seed = 0; seed < samples; ++seed) {
      const FloquetOperator op =
          build_floquet(config, sample_disorder(config, 200 + seed, 0));
      mean +=
          subharmonic_series(op, charges, 4, 2000, initials).values / samples;
    }
    for (int n = 0; n <= 2000; ++n)
      if (std::abs(mean(n)) < 0.5) return n;
    return 2001;
  };
  const int small_chain = half_time(4);
  const int large_chain = half_time(8);
  CHECK(small_chain < 500);  // the short chain dephases inside the window
  CHECK(large_chain > 4 * small_chain);
}

TEST_CASE("charges stay localized while spins diffuse in the thermal phase") {
  ModelConfig config;
  config.kind = ModelKind::Transition;
  config.n1 = 2;
  config.n2 = 4;
  config.num_sites = 8;
  config.s = 0.6;
  config.lambda = 0.0;
  const auto relabel = relabel_sites(2, 4, 8);
  const auto qs = q_charges(2, 4, 8);
  std::vector<DiagonalObservable> obs;
  obs.push_back(sigma_z_charge(0, 0, relabel, 8));
  obs.push_back(qs[0]);

  const int n_max = 512, samples = 20;
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n_max + 1, obs.size());
  for (int seed = 0; seed < samples; ++seed) {
    const FloquetOperator op =
        build_floquet(config, sample_disorder(config, 100 + seed, 0));
    mean += evolve_stroboscopic(op, BasisState(0b00010001, 8), n_max, obs)
                .expectations /
            samples;
  }
  double sigma_amplitude = 0.0, charge_amplitude = 1e9, relaxed = 0.0;
  for (int n = 256; n < n_max; n += 2) {
    sigma_amplitude =
        std::max(sigma_amplitude, std::abs(mean(n, 0) - mean(n + 1, 0)) / 2);
    charge_amplitude =
        std::min(charge_amplitude, std::abs(mean(n, 1) - mean(n + 1, 1)) / 2);
    relaxed = std::max(relaxed, std::abs(mean(n, 0)));
  }
  // Spin oscillation is reduced to roughly gcd/lcm of the full amplitude,
  // the stroboscopic spin value itself has relaxed, and the charge keeps
  // oscillating at full amplitude.
  CHECK(sigma_amplitude < 0.5 + 0.25);
  CHECK(relaxed < 0.5);
  CHECK(charge_amplitude > 0.999);
}

TEST_CASE("Fourier analysis") {
  SUBCASE("pure subharmonic tone") {
    Eigen::VectorXcd series(64);
    for (int n = 0; n < 64; ++n) series(n) = std::exp(cxd(0, n * kPi / 2));
    const FourierResult result = fourier_analysis(series);
    CHECK(result.peak_frequency == doctest::Approx(0.25));
    CHECK(result.peak_magnitude == doctest::Approx(1.0));
    CHECK(result.peak_weight == doctest::Approx(1.0));
  }

  SUBCASE("peak location is robust to small noise") {
    SplitRng rng(3, 0, 0);
    Eigen::VectorXcd series(256);
    for (int n = 0; n < 256; ++n)
      series(n) = std::exp(cxd(0, n * kPi / 2)) +
                  1e-3 * cxd(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const FourierResult result = fourier_analysis(series);
    CHECK(result.peak_frequency == doctest::Approx(0.25));
    CHECK(result.peak_weight > 0.99);
  }

  SUBCASE("half-frequency tone") {
    Eigen::VectorXcd series(64);
    for (int n = 0; n < 64; ++n) series(n) = (n % 2) ? -1.0 : 1.0;
    const FourierResult result = fourier_analysis(series);
    CHECK(result.peak_frequency == doctest::Approx(0.5));
  }
}

TEST_CASE("csv exports") {
  SubharmonicSeries series;
  series.values.resize(3);
  series.values << cxd(1, 0), cxd(0, 1), cxd(-1, 0);
  series.n_probe = 4;
  export_series_csv(series, "/tmp/dtc_test_series.csv");
  std::ifstream in("/tmp/dtc_test_series.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "N,re_A,im_A,abs_A,arg_A");

  const FourierResult fr = fourier_analysis(series.values);
  export_fourier_csv(fr, "/tmp/dtc_test_fourier.csv");
  std::ifstream in2("/tmp/dtc_test_fourier.csv");
  std::getline(in2, header);
  CHECK(header == "omega_over_omega0,magnitude");
}
