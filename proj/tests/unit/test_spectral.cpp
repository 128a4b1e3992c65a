#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "conveyance/fitting.hpp"
#include "conveyance/spectral.hpp"

using namespace conveyance;
using Catch::Approx;

TEST_CASE("hopping and 3-point spectrum", "[spectral]") {
  CHECK(spectral::hopping(1.0, 0.1) == Approx(50.0).epsilon(1e-14));
  const Grid grid(0.0, 2.0, 1.0);
  const auto h = spectral::build_hamiltonian(grid, model::PhysicalParams{}, [](double) { return 0.0; });
  const auto d = spectral::diagonalize(h);
  const double t = h.t_hop;
  REQUIRE(d.size() == 3);
  CHECK(d.energies[0] == Approx(2 * t - std::sqrt(2.0) * t).epsilon(1e-14));
  CHECK(d.energies[1] == Approx(2 * t).epsilon(1e-14));
  CHECK(d.energies[2] == Approx(2 * t + std::sqrt(2.0) * t).epsilon(1e-14));
}

TEST_CASE("free particle in a box", "[spectral]") {
  const double length = 10.0;
  const Grid grid(0.0, length, 0.005);
  const auto h = spectral::build_hamiltonian(grid, model::PhysicalParams{}, [](double) { return 0.0; });
  const auto s = spectral::lowest_states(h, 1);
  // walls sit one step outside the stored points
  const double box = length + 2.0 * grid.dx();
  CHECK(s.energies[0] == Approx(std::numbers::pi * std::numbers::pi / (2.0 * box * box)).epsilon(1e-5));
}

TEST_CASE("diagonalization contract", "[spectral]") {
  const Grid grid(-10.0, 10.0, 0.1);
  const model::PotentialSpec spec{model::PhysicalParams{}, 0.2};
  const auto h = spectral::build_hamiltonian(grid, spec);
  const auto d = spectral::diagonalize(h);
  REQUIRE(d.size() == grid.size());
  CHECK(std::is_sorted(d.energies.begin(), d.energies.end()));
  const Eigen::MatrixXd gram = d.vectors.transpose() * d.vectors;
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-8);
  double sum = 0.0;
  for (double e : d.energies) sum += e;
  CHECK(sum == Approx(h.trace()).epsilon(1e-6));
  double worst = 0.0;
  for (std::size_t k = 0; k < d.size(); k += 13) {
    Eigen::VectorXd v = d.vectors.col(static_cast<Eigen::Index>(k));
    Eigen::VectorXd hv = h.apply(v);
    worst = std::max(worst, (hv - d.energies[k] * v).norm());
  }
  CHECK(worst <= 1e-8 * h.norm_bound());
}

TEST_CASE("bound-state counts on the grid", "[spectral]") {
  const Grid grid(-10.0, 10.0, 0.1);
  for (auto [mass, count] : {std::pair{1.0, 1}, std::pair{10.0, 4}}) {
    model::PhysicalParams p;
    p.mass = mass;
    const auto ev = spectral::eigenvalues(spectral::build_hamiltonian(grid, {p, 0.0}));
    CHECK(std::count_if(ev.begin(), ev.end(), [](double e) { return e < 0.0; }) == count);
  }
  const auto ground = spectral::lowest_states(
      spectral::build_hamiltonian(grid, {model::PhysicalParams{}, 0.0}), 1);
  CHECK(ground.energies[0] == Approx(-0.5).margin(2e-3));
}

TEST_CASE("energy diagram", "[spectral]") {
  const Grid grid(-10.0, 10.0, 0.1);
  std::vector<double> as{0.0, 0.05, 0.1};
  const auto rows = spectral::energy_diagram(model::PhysicalParams{}, as, grid, 12);
  REQUIRE(rows.size() == 3);
  REQUIRE(rows[0].energies.size() == 12);
  CHECK(rows[0].energies[0] == Approx(-0.5).margin(2e-3));
}

TEST_CASE("left-localized levels slope downward in a", "[spectral]") {
  // Hellmann-Feynman: dE_k/da = m <x>_k
  const Grid grid(-60.0, 20.0, 0.1);
  const model::PhysicalParams p;
  const double a = 0.2, da = 1e-5;
  const auto d = spectral::diagonalize(spectral::build_hamiltonian(grid, {p, a}));
  const auto up = spectral::eigenvalues(spectral::build_hamiltonian(grid, {p, a + da}));
  int checked = 0;
  for (std::size_t k = 0; k < 60; ++k) {
    const auto psi = d.state(k);
    double mean_x = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) mean_x += std::norm(psi[j]) * grid.x(j) * grid.dx();
    if (mean_x < -5.0) {
      CHECK((up[k] - d.energies[k]) / da < 0.0);
      ++checked;
    }
  }
  CHECK(checked > 10);
}

TEST_CASE("continuum spacing scales as 1/sqrt(m)", "[spectral]") {
  const Grid grid(-10.0, 10.0, 0.1);
  auto mean_spacing = [&](double mass) {
    model::PhysicalParams p;
    p.mass = mass;
    const auto ev = spectral::eigenvalues(spectral::build_hamiltonian(grid, {p, 0.0}));
    std::vector<double> sel;
    for (double e : ev)
      if (e > 0.0 && e < 1.0) sel.push_back(e);
    return (sel.back() - sel.front()) / static_cast<double>(sel.size() - 1);
  };
  const double ratio = mean_spacing(1.0) / mean_spacing(10.0);
  CHECK(ratio == Approx(std::sqrt(10.0)).epsilon(0.2));
}

TEST_CASE("expansion coefficients", "[spectral]") {
  const Grid grid(-30.0, 30.0, 0.1);
  const model::PhysicalParams p;
  const auto d0 = spectral::diagonalize(spectral::build_hamiltonian(grid, {p, 0.0}));
  const auto c0 = spectral::expansion_coefficients(d0.state(0), d0);
  CHECK(std::abs(c0.amplitudes[0]) == Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 1; k < c0.amplitudes.size(); ++k) CHECK(std::abs(c0.amplitudes[k]) < 1e-10);

  const auto psi = spectral::discrete_ground_state(grid, p);
  double previous_var = 0.0;
  for (double a : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    const auto d = spectral::diagonalize(spectral::build_hamiltonian(grid, {p, a}));
    const auto c = spectral::expansion_coefficients(psi, d);
    CHECK(c.total_weight() == Approx(1.0).margin(1e-8));
    const auto w = c.weights();
    double mean = 0.0, var = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) mean += w[k] * c.energies[k];
    for (std::size_t k = 0; k < w.size(); ++k) var += w[k] * (c.energies[k] - mean) * (c.energies[k] - mean);
    CHECK(var > previous_var);
    previous_var = var;
    if (a == 0.2) {
      const auto peak = std::max_element(w.begin(), w.end()) - w.begin();
      CHECK(c.energies[static_cast<std::size_t>(peak)] == Approx(-0.5).margin(0.1));
    }
  }
  const Grid other(-30.0, 30.0, 0.05);
  CHECK_THROWS_AS(spectral::expansion_coefficients(WaveFunction(other), d0), Error);
}

TEST_CASE("dephasing survival algebra", "[spectral]") {
  spectral::OverlapCoefficients one{{-0.3, 0.1}, {cplx{1.0, 0.0}, cplx{0.0, 0.0}}};
  std::vector<double> ts{0.0, 1.0, 17.5, 300.0};
  for (double p : spectral::dephasing_survival(one, ts)) CHECK(p == Approx(1.0).epsilon(1e-15));

  const double gap = 0.37;
  spectral::OverlapCoefficients two{{0.0, gap}, {cplx{std::sqrt(0.5), 0.0}, cplx{0.0, std::sqrt(0.5)}}};
  const auto p2 = spectral::dephasing_survival(two, ts);
  for (std::size_t i = 0; i < ts.size(); ++i)
    CHECK(p2[i] == Approx(0.5 * (1.0 + std::cos(gap * ts[i]))).margin(1e-14));

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  spectral::OverlapCoefficients rnd;
  double norm = 0.0;
  for (int k = 0; k < 40; ++k) {
    rnd.energies.push_back(3.0 * u(rng));
    rnd.amplitudes.push_back({u(rng), u(rng)});
    norm += std::norm(rnd.amplitudes.back());
  }
  for (auto& a : rnd.amplitudes) a /= std::sqrt(norm);
  std::vector<double> many;
  for (int i = 0; i < 50; ++i) many.push_back(0.77 * i);
  const auto single = spectral::dephasing_survival(rnd, many);
  const auto dbl = spectral::dephasing_survival_double_sum(rnd, many);
  for (std::size_t i = 0; i < many.size(); ++i) CHECK(single[i] == Approx(dbl[i]).margin(1e-12));

  // long-time average approaches the inverse participation ratio
  std::vector<double> long_t;
  for (int i = 0; i < 200000; ++i) long_t.push_back(0.731 * i);
  const auto pl = spectral::dephasing_survival(rnd, long_t);
  double avg = 0.0;
  for (double v : pl) avg += v;
  avg /= static_cast<double>(pl.size());
  double ipr = 0.0;
  for (double w : rnd.weights()) ipr += w * w;
  CHECK(avg == Approx(ipr).margin(1e-3));
}

TEST_CASE("exponential fits recover exact data", "[spectral][fit]") {
  std::vector<double> t, y, z;
  for (int i = 0; i <= 400; ++i) {
    t.push_back(0.25 * i);
    y.push_back(std::exp(-0.1 * t.back()));
    z.push_back(0.2 + 0.8 * std::exp(-0.05 * t.back()));
  }
  const auto pure = fit::fit_exponential(t, y, {0.0, 100.0});
  CHECK(pure.rate == Approx(0.1).margin(1e-10));
  CHECK(pure.r_squared == Approx(1.0).margin(1e-12));
  const auto off = fit::fit_exponential(t, z, {0.0, 100.0}, fit::DecayForm::with_offset);
  CHECK(off.offset == Approx(0.2).margin(1e-6));
  CHECK(off.amplitude == Approx(0.8).margin(1e-6));
  CHECK(off.rate == Approx(0.05).margin(1e-6));

  y[10] = 0.0;
  try {
    fit::fit_exponential(t, y, {0.0, 100.0});
    FAIL("expected fit-domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::fit_domain);
  }
}

TEST_CASE("Lorentzian fit recovers exact data", "[spectral][fit]") {
  std::vector<double> e, w;
  const double c = 0.013, e0 = -0.5612, g = 0.0221;
  for (int k = 0; k < 60; ++k) {
    e.push_back(-0.9 + 0.011 * k);
    const double d = e.back() - e0;
    w.push_back(c / (d * d + g * g));
  }
  const auto f = fit::lorentzian_fit(e, w);
  CHECK(f.center == Approx(e0).margin(1e-8));
  CHECK(f.half_width == Approx(g).margin(1e-8));
  CHECK(f.scale * 0.011 == Approx(c).margin(1e-8));
  CHECK(f.rate() == Approx(2 * g).margin(1e-8));
  fit::LorentzianOptions raw;
  raw.per_unit_energy = false;
  const auto fr = fit::lorentzian_fit(e, w, raw);
  CHECK(fr.center == Approx(e0).margin(1e-8));
  CHECK(fr.half_width == Approx(g).margin(1e-8));
  CHECK(fr.scale == Approx(c).margin(1e-8));

  std::vector<double> mono(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) mono[k] = static_cast<double>(k * k);
  try {
    fit::lorentzian_fit(e, mono);
    FAIL("expected no-resonance error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::no_resonance);
  }
}

TEST_CASE("relaxation window detection", "[spectral]") {
  std::vector<double> t{0, 1, 2, 3, 4, 5};
  std::vector<double> p{1.0, 0.95, 0.85, 0.55, 0.5, 0.4};
  const auto w = spectral::relaxation_window(t, p, 4.0);
  CHECK(w.t_start == 3.0);
  CHECK(w.t_end == 4.0);
  CHECK_THROWS_AS(spectral::relaxation_window(t, p, 2.0), Error);
}
