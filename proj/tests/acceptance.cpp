// One line per acceptance criterion; exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qsky/pipeline.hpp"

using namespace qsky;

namespace {

constexpr double kPi = std::numbers::pi;
const double kTsirelson = 2.0 * std::numbers::sqrt2;
const std::vector<double> kThetaA{0.0, kPi / 2, kPi, 3 * kPi / 2};

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

DensityMatrix bell(double phase = 0.0) { return pure_density(ideal_hybrid_state(phase)); }

DensityMatrix random_density(std::mt19937_64& rng, int rank) {
  std::normal_distribution<double> g;
  Eigen::Matrix<cplx, 4, Eigen::Dynamic> a(4, rank);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = cplx(g(rng), g(rng));
  DensityMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

Matrix2c random_su2(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Vector4d q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  Matrix2c u;
  u << cplx(q(0), q(1)), cplx(q(2), q(3)), cplx(-q(2), q(3)), cplx(q(0), -q(1));
  return u;
}

CountTable noiseless(const DensityMatrix& rho) { return simulate_tomography(rho, 1e12, 0, 0.0, Sampling::Expected); }

double n_of(const DensityMatrix& rho, const Subspace& s, GridSpec grid = {}) {
  return skyrmion_number(stokes_field(rho, s.first, s.second, 1.0, grid));
}

void topology_table() {
  ExperimentConfig c;
  c.sampling = Sampling::Expected;
  c.output = std::filesystem::temp_directory_path() / "qsky_acceptance_table";
  const auto start = std::chrono::steady_clock::now();
  const auto run = run_table(c);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double worst = 0.0;
  bool ok = run.rows.size() == 12 && run.failures().empty();
  for (const auto& r : run.rows) worst = std::max(worst, std::abs(r.n_measured - r.n_predicted));
  ok = ok && worst <= 0.02 && seconds < 60.0;
  report(1, ok, fmt("12 subspaces, 512^2 at 6w: max |dN| = %.2e (tol 0.02), run %.1f s (limit 60 s)", worst, seconds));
}

void bell_physics() {
  const ChshEstimate ideal = chsh_from_counts(sample_chsh(bell(), 1e5, 1));
  bool ok = std::abs(ideal.s - kTsirelson) <= 1e-3;
  std::string detail = fmt("ideal S = %.4f +- %.4f vs 2.8284 (tol 1e-3)", ideal.s, ideal.sigma);
  for (double p : {0.83, 0.88, 0.91}) {
    const DensityMatrix rho = apply_noise(bell(), NoiseChannel::dephasing(p));
    const ChshEstimate e = chsh_from_counts(sample_chsh(rho, 1e5, 1));
    ok = ok && std::abs(e.s - kTsirelson * p) <= 0.04;
    detail += fmt("; p=%.2f S = %.4f vs %.4f (tol 0.04)", p, e.s, kTsirelson * p);
  }
  report(2, ok, detail);
}

void curve_shape() {
  const auto tb = uniform_angles(72);
  const CoincidenceCurve c = expected_curve(bell(), kThetaA, tb);
  double worst = 0.0;
  for (std::size_t i = 0; i < kThetaA.size(); ++i) {
    const double peak = c.values.row(Eigen::Index(i)).maxCoeff();
    for (std::size_t k = 0; k < tb.size(); ++k) {
      const double expect = std::pow(std::cos((kThetaA[i] - tb[k]) / 2), 2);
      worst = std::max(worst, std::abs(c.values(Eigen::Index(i), Eigen::Index(k)) / peak - expect));
    }
  }
  report(3, worst < 1e-9, fmt("max |J/J_max - cos^2((tA-tB)/2)| = %.2e (tol 1e-9)", worst));
}

void visibility_range() {
  bool ok = true;
  std::string detail;
  for (double p : {0.86, 0.88, 0.91}) {
    const DensityMatrix rho = apply_noise(bell(), NoiseChannel::dephasing(p));
    const double v = visibility(coincidence_curve(rho, kThetaA, uniform_angles(72), 1e4, 1));
    ok = ok && std::abs(v - p) <= 0.02;
    detail += fmt("%sp=%.2f V = %.4f", detail.empty() ? "" : "; ", p, v);
  }
  report(4, ok, detail + " (tol 0.02, n0 = 1e4)");
}

void mle_round_trip() {
  std::mt19937_64 rng(5);
  double worst = 1.0, mean = 0.0;
  for (int i = 0; i < 20; ++i) {
    const DensityMatrix rho = random_density(rng, 1 + i % 4);
    MleOptions o;
    o.seed = static_cast<std::uint64_t>(i);
    worst = std::min(worst, fidelity(mle_reconstruct(noiseless(rho), o).rho, rho));
    mean += fidelity(mle_reconstruct(simulate_tomography(rho, 1e4, 100 + i), o).rho, rho) / 20;
  }
  report(5, worst >= 0.9999 && mean >= 0.99,
         fmt("20 random states: min noiseless F = %.6f (tol 0.9999), mean Poisson F = %.5f (tol 0.99)", worst, mean));
}

void metric_oracles() {
  double worst = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double p = k / 100.0;
    const DensityMatrix rho = apply_noise(bell(), NoiseChannel::isotropic(p));
    const double c = std::max(0.0, (3 * p - 1) / 2);
    worst = std::max({worst, std::abs(purity(rho) - (1 + 3 * p * p) / 4), std::abs(concurrence(rho) - c),
                      std::abs(concurrence_from_product(rho) - c)});
  }
  report(6, worst <= 1e-8, fmt("101 values of p: max closed-form deviation = %.2e (tol 1e-8)", worst));
}

void table_plausibility() {
  const DensityMatrix rho = apply_noise(bell(), NoiseChannel::dephasing(0.88));
  int inside = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    MleOptions o;
    o.seed = seed;
    const ReconstructionResult r = mle_reconstruct(simulate_tomography(rho, 1e4, seed), o);
    const bool in = r.fidelity >= 0.80 && r.fidelity <= 0.94 && r.purity >= 0.82 && r.purity <= 0.89 &&
                    r.concurrence >= 0.80 && r.concurrence <= 0.91;
    inside += in;
    detail += fmt(" (%.3f %.3f %.3f)%s", r.fidelity, r.purity, r.concurrence, in ? "" : "*");
  }
  report(7, inside >= 8, fmt("dephasing 0.88, n0 = 1e4: %d/10 seeds inside (need 8); F gamma C:", inside) + detail);
}

void coherence() {
  const double lc = coherence_length(810.0, 10.0);
  report(8, std::abs(lc - 65.6) <= 0.1, fmt("L_C(810 nm, 10 nm) = %.3f um (65.6 +- 0.1)", lc));
}

void phase_extraction() {
  bool ok = true;
  std::string detail;
  for (double chi : {kPi / 6, -3 * kPi / 8, -7 * kPi / 12}) {
    MleOptions o;
    o.target = ideal_hybrid_state(chi);
    const auto exact = mle_reconstruct(noiseless(bell(chi)), o).relative_phase;
    const auto noisy = mle_reconstruct(simulate_tomography(bell(chi), 1e4, 9), o).relative_phase;
    if (!exact || !noisy) {
      ok = false;
      continue;
    }
    const double de = std::abs(std::remainder(*exact - chi, 2 * kPi));
    const double dn = std::abs(std::remainder(*noisy - chi, 2 * kPi));
    ok = ok && de <= 1e-6 && dn <= 0.05;
    detail += fmt("%schi=%+.4f err %.1e / %.1e", detail.empty() ? "" : "; ", chi, de, dn);
  }
  report(9, ok, detail + " (tol 1e-6 noiseless / 0.05 at n0 = 1e4)");
}

void properties() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
  double s_max = 0.0;
  for (int i = 0; i < 2000; ++i)
    s_max = std::max(s_max, std::abs(chsh_s(random_density(rng, 1 + i % 4),
                                            {angle(rng), angle(rng), angle(rng), angle(rng)})));

  double c_worst = 0.0;
  for (const auto& s : table_subspaces())
    for (double ell0 : {0.5, 2.0, 6.0}) {
      HybridStateSpec spec;
      spec.ell1 = s.first;
      spec.ell2 = s.second;
      const DensityMatrix rho = make_hybrid_density(spec, spdc_spectrum(spectrum_model::Exponential{ell0}, 10));
      c_worst = std::max(c_worst, std::abs(concurrence(rho) - 1.0));
    }

  double rot_worst = 0.0;
  for (const Subspace& s : {Subspace{1, 0}, Subspace{3, -2}, Subspace{-3, 1}, Subspace{2, 1}}) {
    const double base = n_of(bell(), s);
    for (int k = 0; k < 3; ++k)
      rot_worst = std::max(rot_worst, std::abs(n_of(basis_rotation(bell(), random_su2(rng)), s) - base));
  }

  double grid_worst = 0.0;
  for (const auto& s : table_subspaces())
    grid_worst = std::max(grid_worst, std::abs(n_of(bell(), s) - n_of(bell(), s, {1024, 6.0})));

  const bool ok = s_max <= kTsirelson + 1e-9 && c_worst <= 1e-9 && rot_worst <= 0.02 && grid_worst < 5e-3;
  report(10, ok,
         fmt("max |S| = %.6f (<= 2.828427 + 1e-9); max |C - 1| = %.1e (tol 1e-9); "
             "rotation max |dN| = %.1e (tol 0.02); max |N512 - N1024| = %.1e (tol 5e-3)",
             s_max, c_worst, rot_worst, grid_worst));
}

}  // namespace

int main() {
  topology_table();
  bell_physics();
  curve_shape();
  visibility_range();
  mle_round_trip();
  metric_oracles();
  table_plausibility();
  coherence();
  phase_extraction();
  properties();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
