#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "qsky/circuit.hpp"
#include "qsky/tomography.hpp"

using namespace qsky;

namespace {

constexpr double kPi = std::numbers::pi;

DensityMatrix bell(double phase = 0.0) { return pure_density(ideal_hybrid_state(phase)); }

DensityMatrix random_density(std::mt19937_64& rng, int rank = 4) {
  std::normal_distribution<double> g;
  Eigen::Matrix<cplx, 4, Eigen::Dynamic> a(4, rank);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = cplx(g(rng), g(rng));
  DensityMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

Vector4c product_state(const Vector2c& a, const Vector2c& b) { return tensor_product(a, b); }

Errc error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::BadConfig;
}

// Counts so large that rounding to integers is invisible at the 1e-9 level.
CountTable noiseless(const DensityMatrix& rho) { return simulate_tomography(rho, 1e12, 0, 0.0, Sampling::Expected); }

void check_physical(const ReconstructionResult& r) {
  CHECK(std::abs(r.rho.trace() - cplx(1.0)) < 1e-9);
  CHECK(hermitian_eig(r.rho).values(3) >= -1e-9);
  for (double v : {r.fidelity, r.purity, r.concurrence}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(r.linear_entropy == doctest::Approx(1.0 - r.purity));
  CHECK(std::abs(r.gellmann[0] - 0.25) < 1e-9);
}

}  // namespace

TEST_CASE("tomography settings cover the 6 x 6 label grid") {
  const auto& s = tomography_settings();
  CHECK(s.size() == 36);
  CHECK(s[0].a == Analyzer::basis(BasisLabel::Zero));
  CHECK(s[1].b == Analyzer::basis(BasisLabel::One));
  CHECK(s[6].a == Analyzer::basis(BasisLabel::One));
  for (std::size_t i = 0; i < 36; ++i)
    for (std::size_t j = i + 1; j < 36; ++j) CHECK(!(s[i] == s[j]));
}

TEST_CASE("simulated tomography means") {
  const CountTable t = simulate_tomography(bell(), 1e4, 0, 0.0, Sampling::Expected);
  CHECK(t.find({Analyzer::basis(BasisLabel::Zero), Analyzer::basis(BasisLabel::Zero)})->counts == 5000);
  CHECK(t.find({Analyzer::basis(BasisLabel::Zero), Analyzer::basis(BasisLabel::One)})->counts == 0);
  const CountTable m = simulate_tomography(DensityMatrix::Identity() / 4.0, 1e4, 0, 0.0, Sampling::Expected);
  for (const auto& e : m.entries) CHECK(e.counts == 2500);
  CHECK(simulate_tomography(bell(), 1e3, 77) == simulate_tomography(bell(), 1e3, 77));
}

TEST_CASE("fidelity oracles") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    const DensityMatrix p = random_density(rng, 1);
    CHECK(fidelity(p, p) == doctest::Approx(1.0).epsilon(1e-9));
  }
  const Vector2c h(1.0, 0.0), v(0.0, 1.0);
  CHECK(fidelity(pure_density(product_state(h, h)), pure_density(product_state(v, v))) < 1e-12);
  CHECK(fidelity(bell(), DensityMatrix::Identity() / 4.0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("fidelity is symmetric") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const DensityMatrix a = random_density(rng, 1 + i % 4), b = random_density(rng, 1 + (i / 4) % 4);
    CHECK(std::abs(fidelity(a, b) - fidelity(b, a)) < 1e-9);
  }
}

TEST_CASE("purity and linear entropy") {
  CHECK(purity(bell()) == doctest::Approx(1.0));
  CHECK(purity(DensityMatrix::Identity() / 4.0) == doctest::Approx(0.25));
  CHECK(linear_entropy(DensityMatrix::Identity() / 4.0) == doctest::Approx(0.75));
}

TEST_CASE("concurrence of reference states") {
  CHECK(concurrence(bell()) == doctest::Approx(1.0).epsilon(1e-12));
  const Vector2c a(0.6, cplx(0, 0.8)), b(std::sqrt(0.5), std::sqrt(0.5));
  CHECK(concurrence(pure_density(product_state(a, b))) < 1e-7);
  CHECK(concurrence(apply_noise(bell(), NoiseChannel::isotropic(0.9))) == doctest::Approx(0.85).epsilon(1e-10));
}

TEST_CASE("isotropic noise closed forms") {
  for (int k = 0; k <= 20; ++k) {
    const double p = k / 20.0;
    const DensityMatrix rho = apply_noise(bell(0.4), NoiseChannel::isotropic(p));
    CHECK(std::abs(purity(rho) - (1 + 3 * p * p) / 4) < 1e-8);
    CHECK(std::abs(concurrence(rho) - std::max(0.0, (3 * p - 1) / 2)) < 1e-8);
    CHECK(std::abs(concurrence_from_product(rho) - std::max(0.0, (3 * p - 1) / 2)) < 1e-8);
  }
}

TEST_CASE("both concurrence routes agree on random states") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const DensityMatrix rho = random_density(rng, 1 + i % 4);
    CHECK(std::abs(concurrence(rho) - concurrence_from_product(rho)) < 1e-8);
  }
}

TEST_CASE("spin flip of the singlet-like hybrid state") {
  CHECK((spin_flip(bell()) - bell()).norm() < 1e-15);
}

TEST_CASE("relative phase extraction") {
  CHECK(std::abs(extract_relative_phase(bell())) < 1e-15);
  for (double chi : {kPi / 6, -3 * kPi / 8, -7 * kPi / 12})
    CHECK(std::abs(extract_relative_phase(bell(chi)) - chi) < 1e-9);
  const DensityMatrix dephased = apply_noise(bell(), NoiseChannel::dephasing(0.0));
  CHECK(error_of([&] { extract_relative_phase(dephased); }) == Errc::NoCoherence);
}

TEST_CASE("gell-mann coefficients rebuild the state") {
  std::mt19937_64 rng(5);
  const DensityMatrix rho = random_density(rng);
  const auto b = gellmann_coefficients(rho);
  DensityMatrix back = DensityMatrix::Zero();
  for (int m = 0; m < 16; ++m) back += b[static_cast<std::size_t>(m)] * gellmann_basis()[static_cast<std::size_t>(m)];
  CHECK((back - rho).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(b[0] == doctest::Approx(0.25));
}

TEST_CASE("linear inversion is exact on noiseless data") {
  std::mt19937_64 rng(6);
  const DensityMatrix rho = random_density(rng);
  CHECK((linear_inversion(noiseless(rho)) - rho).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("reconstruction round-trips random states from noiseless data") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    const DensityMatrix rho = random_density(rng, 1 + i % 4);
    MleOptions o;
    o.seed = static_cast<std::uint64_t>(i);
    const ReconstructionResult r = mle_reconstruct(noiseless(rho), o);
    check_physical(r);
    CHECK(fidelity(r.rho, rho) >= 0.9999);
  }
}

TEST_CASE("reconstruction of the hybrid Bell state") {
  const ReconstructionResult r = mle_reconstruct(noiseless(bell()));
  check_physical(r);
  CHECK(r.fidelity >= 0.9999);
  CHECK(r.concurrence >= 0.999);
  CHECK(r.converged);
  CHECK(r.residual < 1e-10);
  CHECK(r.iterations > 0);
}

TEST_CASE("flat counts reconstruct the maximally mixed state") {
  CountTable t;
  for (const auto& s : tomography_settings()) t.set(s, 1000);
  const ReconstructionResult r = mle_reconstruct(t);
  check_physical(r);
  CHECK((r.rho - DensityMatrix::Identity() / 4.0).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(!r.relative_phase.has_value());
}

TEST_CASE("phase from noisy counts") {
  const ReconstructionResult r = mle_reconstruct(simulate_tomography(bell(kPi / 6), 1e4, 11));
  REQUIRE(r.relative_phase.has_value());
  CHECK(std::abs(*r.relative_phase - kPi / 6) < 0.05);
}

TEST_CASE("reconstructions stay physical under heavy noise") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    const CountTable t = simulate_tomography(random_density(rng, 1), 20.0, static_cast<std::uint64_t>(i));
    check_physical(mle_reconstruct(t));
  }
}

TEST_CASE("fidelity falls monotonically with isotropic noise") {
  double previous = 2.0;
  for (int k = 10; k >= 1; --k) {
    const double p = k / 10.0;
    const ReconstructionResult r = mle_reconstruct(noiseless(apply_noise(bell(), NoiseChannel::isotropic(p))));
    CHECK(r.fidelity < previous);
    CHECK(std::abs(r.fidelity - (1 + 3 * p) / 4) < 1e-6);
    previous = r.fidelity;
  }
}

TEST_CASE("missing settings and empty tables are rejected") {
  CountTable t = simulate_tomography(bell(), 100.0, 1);
  t.entries.erase(t.entries.begin() + 5);
  CHECK(error_of([&] { mle_reconstruct(t); }) == Errc::MissingSetting);
  CountTable zero;
  for (const auto& s : tomography_settings()) zero.set(s, 0);
  CHECK(error_of([&] { mle_reconstruct(zero); }) == Errc::Degenerate);
}

TEST_CASE("reconstruction report layout") {
  const ReconstructionResult r = mle_reconstruct(noiseless(bell(0.3)));
  std::stringstream ss;
  write_reconstruction(ss, r);
  const std::string text = ss.str();
  for (const char* key : {"fidelity", "purity", "linear_entropy", "concurrence", "relative_phase", "iterations",
                          "residual"})
    CHECK(text.find(key) != std::string::npos);
  const auto rho_at = text.find("\nrho\n");
  REQUIRE(rho_at != std::string::npos);
  std::istringstream block(text.substr(rho_at + 5));
  DensityMatrix back;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double re, im;
      block >> re >> im;
      back(i, j) = cplx(re, im);
    }
  CHECK((back - r.rho).cwiseAbs().maxCoeff() < 1e-11);
}
