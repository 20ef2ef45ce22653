#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "qsky/circuit.hpp"
#include "qsky/measurement.hpp"

using namespace qsky;

namespace {

constexpr double kPi = std::numbers::pi;
const double kTsirelson = 2.0 * std::numbers::sqrt2;

ProjectionSetting phases(double a, double b) { return {Analyzer::phase(a), Analyzer::phase(b)}; }

DensityMatrix bell() { return pure_density(ideal_hybrid_state()); }

DensityMatrix random_density(std::mt19937_64& rng, int rank = 4) {
  std::normal_distribution<double> g;
  Eigen::Matrix<cplx, 4, Eigen::Dynamic> a(4, rank);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = cplx(g(rng), g(rng));
  DensityMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

Errc error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::BadConfig;
}

}  // namespace

TEST_CASE("analyser states are normalized equatorial states") {
  for (double t : {0.0, 0.4, 3.0}) {
    const Vector2c a = analyzer_state(Analyzer::phase(t), Side::A);
    const Vector2c b = analyzer_state(Analyzer::phase(t), Side::B);
    CHECK(std::abs(a.norm() - 1.0) < 1e-15);
    CHECK(std::abs(a(1) / a(0) - std::polar(1.0, t)) < 1e-14);
    CHECK(std::abs(b(1) / b(0) - std::polar(1.0, -t)) < 1e-14);
  }
  const Vector2c plus_i = analyzer_state(Analyzer::basis(BasisLabel::PlusI), Side::B);
  CHECK(std::abs(plus_i(1) / plus_i(0) - cplx(0, 1)) < 1e-15);
}

TEST_CASE("phase analysers wrap into [0, 2pi)") {
  CHECK(Analyzer::phase(-kPi / 2).theta == doctest::Approx(3 * kPi / 2));
  CHECK(Analyzer::phase(5 * kPi).theta == doctest::Approx(kPi));
  CHECK(Analyzer::phase(2 * kPi).theta < 1e-12);
}

TEST_CASE("joint probabilities of the hybrid Bell state") {
  for (double t : {0.0, 1.0, 4.0}) {
    CHECK(joint_probability(bell(), phases(t, t)) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(joint_probability(bell(), phases(t, t + kPi)) < 1e-15);
  }
  CHECK(joint_probability(DensityMatrix::Identity() / 4.0, phases(0.3, 2.0)) == doctest::Approx(0.25));
}

TEST_CASE("coincidences depend on the phase difference only") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
  for (int i = 0; i < 100; ++i) {
    const double a = angle(rng), b = angle(rng), d = angle(rng);
    const double j = joint_probability(bell(), phases(a, b));
    CHECK(std::abs(j - joint_probability(bell(), phases(a + d, b + d))) < 1e-14);
    CHECK(std::abs(j - 0.5 * std::pow(std::cos((a - b) / 2), 2)) < 1e-14);
  }
}

TEST_CASE("noiseless curve has the cos^2 shape") {
  const std::vector<double> ta{0.0, kPi / 2, kPi, 3 * kPi / 2};
  const std::vector<double> tb = uniform_angles(72);
  const CoincidenceCurve c = expected_curve(bell(), ta, tb);
  double worst = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i)
    for (std::size_t k = 0; k < tb.size(); ++k) {
      const double normalized = c.values(Eigen::Index(i), Eigen::Index(k)) / c.values.row(Eigen::Index(i)).maxCoeff();
      worst = std::max(worst, std::abs(normalized - std::pow(std::cos((ta[i] - tb[k]) / 2), 2)));
    }
  CHECK(worst < 1e-9);
}

TEST_CASE("visibility of noiseless and flat curves") {
  const auto tb = uniform_angles(72);
  CHECK(visibility(expected_curve(bell(), {0.0, kPi / 2}, tb)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(visibility(expected_curve(DensityMatrix::Identity() / 4.0, {0.0}, tb)) < 1e-12);
  const DensityMatrix d = apply_noise(bell(), NoiseChannel::dephasing(0.9));
  CHECK(std::abs(visibility(expected_curve(d, {0.0, kPi / 2, kPi, 3 * kPi / 2}, tb)) - 0.9) < 1e-9);
}

TEST_CASE("visibility rejects empty or dark curves") {
  CoincidenceCurve dark{{0.0}, {0.0, 1.0}, Eigen::MatrixXd::Zero(1, 2)};
  CHECK(error_of([&] { visibility(dark); }) == Errc::Degenerate);
  CoincidenceCurve one{{0.0}, {0.0}, Eigen::MatrixXd::Ones(1, 1)};
  CHECK(error_of([&] { visibility(one); }) == Errc::Degenerate);
}

TEST_CASE("sampled visibility under dephasing") {
  const DensityMatrix d = apply_noise(bell(), NoiseChannel::dephasing(0.86));
  const CountTable t = coincidence_curve(d, {0.0, kPi / 2, kPi, 3 * kPi / 2}, uniform_angles(72), 1e4, 99);
  CHECK(std::abs(visibility(t) - 0.86) < 0.02);
}

TEST_CASE("sampling is deterministic in the seed") {
  const auto tb = uniform_angles(36);
  const CountTable a = coincidence_curve(bell(), {0.0, 1.0}, tb, 500.0, 42);
  const CountTable b = coincidence_curve(bell(), {0.0, 1.0}, tb, 500.0, 42);
  const CountTable c = coincidence_curve(bell(), {0.0, 1.0}, tb, 500.0, 43);
  CHECK(a == b);
  CHECK(!(a == c));
  for (const auto& e : a.entries) CHECK(e.counts >= 0);
}

TEST_CASE("accidental floor raises every bin") {
  const CountTable t = coincidence_curve(bell(), {0.0}, {kPi}, 1000.0, 1, 25.0, Sampling::Expected);
  CHECK(t.entries.front().counts == 25);
  CHECK(t.accidental == 25.0);
}

TEST_CASE("poisson sampler mean") {
  Rng rng(8);
  const double mean = 37.5;
  const int draws = 10000;
  double sum = 0.0;
  for (int i = 0; i < draws; ++i) sum += static_cast<double>(sample_count(rng, mean, Sampling::Poisson));
  CHECK(std::abs(sum / draws - mean) < 3.0 * std::sqrt(mean / draws));
  CHECK(sample_count(rng, 2.5, Sampling::Expected) == 3);
  CHECK(sample_count(rng, -1.0, Sampling::Poisson) == 0);
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, {1, 2}) == derive_seed(1, {1, 2}));
  CHECK(derive_seed(1, {1, 2}) != derive_seed(1, {2, 1}));
  CHECK(derive_seed(1, {1, 2}) != derive_seed(2, {1, 2}));
}

TEST_CASE("chsh on exact states") {
  CHECK(chsh_s(bell()) == doctest::Approx(kTsirelson).epsilon(1e-13));
  CHECK(std::abs(chsh_s(DensityMatrix::Identity() / 4.0)) < 1e-14);
  for (double p : {0.5, 0.83, 0.9}) {
    const DensityMatrix d = apply_noise(bell(), NoiseChannel::dephasing(p));
    CHECK(chsh_s(d) == doctest::Approx(kTsirelson * p).epsilon(1e-13));
  }
}

TEST_CASE("chsh respects the tsirelson ceiling on random states and angles") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
  for (int i = 0; i < 2000; ++i) {
    const DensityMatrix rho = random_density(rng, 1 + i % 4);
    const ChshAngles a{angle(rng), angle(rng), angle(rng), angle(rng)};
    CHECK(std::abs(correlation(rho, a.a, a.b)) <= 1.0 + 1e-12);
    CHECK(std::abs(chsh_s(rho, a)) <= kTsirelson + 1e-9);
  }
}

TEST_CASE("separable states never violate the classical bound") {
  const DensityMatrix sep = bell().diagonal().asDiagonal();
  double worst = 0.0;
  const int n = 20;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double step = 2 * kPi / n;
          worst = std::max(worst, std::abs(chsh_s(sep, {i * step, j * step, k * step, l * step})));
        }
  CHECK(worst <= 2.0 + 1e-9);
}

TEST_CASE("chsh from sampled counts") {
  const CountTable t = sample_chsh(bell(), 1e5, 2024);
  CHECK(t.entries.size() == 16);
  const ChshEstimate e = chsh_from_counts(t);
  CHECK(std::abs(e.s - kTsirelson) < 0.01);
  CHECK(e.sigma > 0.0);
  CHECK(e.sigma < 0.01);
}

TEST_CASE("flat counts give S = 0") {
  CountTable t;
  for (const auto& s : chsh_settings()) t.set(s, 1000);
  const ChshEstimate e = chsh_from_counts(t);
  CHECK(std::abs(e.s) < 1e-15);
}

TEST_CASE("missing chsh settings are named") {
  CountTable t = sample_chsh(bell(), 100.0, 1);
  t.entries.pop_back();
  try {
    chsh_from_counts(t);
    FAIL("expected MissingSetting");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingSetting);
    CHECK(std::string(e.what()).find('(') != std::string::npos);
  }
}

TEST_CASE("count tables round-trip through text") {
  CountTable t = coincidence_curve(bell(), {0.0, kPi / 3}, uniform_angles(12), 200.0, 5, 1.5);
  t.set({Analyzer::basis(BasisLabel::PlusI), Analyzer::basis(BasisLabel::Minus)}, 17);
  std::stringstream ss;
  write_count_table(ss, t);
  const CountTable back = read_count_table(ss);
  REQUIRE(back.entries.size() == t.entries.size());
  CHECK(back.n0 == t.n0);
  CHECK(back.accidental == t.accidental);
  CHECK(back.seed == t.seed);
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    CHECK(back.entries[i].setting == t.entries[i].setting);
    CHECK(back.entries[i].counts == t.entries[i].counts);
  }
  CHECK(ss.str().find("|+i> |->") != std::string::npos);
}

TEST_CASE("malformed count tables are rejected") {
  std::istringstream bad("# n0 10\n0.000000 nonsense 5\n");
  CHECK(error_of([&] { read_count_table(bad); }) == Errc::BadFormat);
  std::istringstream negative("0.000000 1.000000 -3\n");
  CHECK(error_of([&] { read_count_table(negative); }) == Errc::BadFormat);
}

TEST_CASE("coherence length") {
  CHECK(coherence_length(810.0, 10.0) == doctest::Approx(65.61).epsilon(1e-12));
  CHECK(coherence_length(810.0, 810.0) == doctest::Approx(0.81).epsilon(1e-12));
  CHECK(coherence_length(810.0, 20.0) == coherence_length(810.0, 10.0) / 2.0);
}
