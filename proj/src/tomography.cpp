#include "qsky/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>

#include "qsky/simplex.hpp"

namespace qsky {

namespace {

constexpr std::array<BasisLabel, 6> kLabels = {BasisLabel::Zero, BasisLabel::One,   BasisLabel::Plus,
                                               BasisLabel::PlusI, BasisLabel::Minus, BasisLabel::MinusI};

// Pauli index (1 = x, 2 = y, 3 = z) measured by a label, and its eigenvalue.
int pauli_of(BasisLabel l) {
  switch (l) {
    case BasisLabel::Zero:
    case BasisLabel::One: return 3;
    case BasisLabel::Plus:
    case BasisLabel::Minus: return 1;
    case BasisLabel::PlusI:
    case BasisLabel::MinusI: return 2;
  }
  return 0;
}

double sign_of(BasisLabel l) {
  return (l == BasisLabel::One || l == BasisLabel::Minus || l == BasisLabel::MinusI) ? -1.0 : 1.0;
}

Matrix2c pauli(int k) {
  switch (k) {
    case 1: return pauli_x();
    case 2: return pauli_y();
    case 3: return pauli_z();
    default: return Matrix2c::Identity();
  }
}

// Counts for the 36 settings normalised within each basis-pair block.
std::array<double, 36> normalized_frequencies(const CountTable& table) {
  const auto& settings = tomography_settings();
  std::array<double, 36> raw{};
  std::string missing;
  double total = 0.0;
  for (std::size_t k = 0; k < 36; ++k) {
    const CountEntry* e = table.find(settings[k]);
    if (!e) {
      missing += " " + std::to_string(k);
      continue;
    }
    raw[k] = static_cast<double>(e->counts);
    total += raw[k];
  }
  if (!missing.empty()) throw Error(Errc::MissingSetting, "tomography table lacks setting indices" + missing);
  if (total <= 0.0) throw Error(Errc::Degenerate, "tomography table has no counts");

  std::array<double, 9> block_sum{};
  auto block_of = [&](std::size_t k) {
    return static_cast<std::size_t>(3 * (pauli_of(settings[k].a.label) - 1) + (pauli_of(settings[k].b.label) - 1));
  };
  for (std::size_t k = 0; k < 36; ++k) block_sum[block_of(k)] += raw[k];
  std::array<double, 36> out{};
  for (std::size_t k = 0; k < 36; ++k) {
    const double s = block_sum[block_of(k)];
    out[k] = s > 0.0 ? raw[k] / s : 0.0;
  }
  return out;
}

DensityMatrix project_to_physical(const DensityMatrix& m) {
  auto eig = hermitian_eig(m);
  auto vals = eig.values.cwiseMax(0.0).eval();
  const double tr = vals.sum();
  if (tr <= 0.0) return DensityMatrix::Identity() / 4.0;
  vals /= tr;
  return eig.vectors * vals.asDiagonal() * eig.vectors.adjoint();
}

using Factor = Matrix4c;

// 16 reals → lower-triangular T with real diagonal.
Factor unpack(const Eigen::VectorXd& x) {
  Factor t = Factor::Zero();
  int k = 0;
  for (int i = 0; i < 4; ++i) t(i, i) = x(k++);
  for (int i = 1; i < 4; ++i)
    for (int j = 0; j < i; ++j) {
      t(i, j) = cplx(x(k), x(k + 1));
      k += 2;
    }
  return t;
}

Eigen::VectorXd pack(const Factor& t) {
  Eigen::VectorXd x(16);
  int k = 0;
  for (int i = 0; i < 4; ++i) x(k++) = t(i, i).real();
  for (int i = 1; i < 4; ++i)
    for (int j = 0; j < i; ++j) {
      x(k++) = t(i, j).real();
      x(k++) = t(i, j).imag();
    }
  return x;
}

DensityMatrix density_from_factor(const Factor& t) {
  const DensityMatrix r = t.adjoint() * t;
  return r / r.trace().real();
}

// Lower-triangular T with T†T = ρ, for full-rank ρ: with J the exchange
// matrix and J ρ J = L L†, T = J L† J.
Factor factor_from_density(const DensityMatrix& rho) {
  const Matrix4c j = Matrix4c::Identity().rowwise().reverse();
  const Eigen::LLT<Matrix4c> llt(j * rho * j);
  const Matrix4c l = llt.matrixL();
  return j * l.adjoint() * j;  // LLT leaves a real positive diagonal
}

}  // namespace

const std::array<ProjectionSetting, 36>& tomography_settings() {
  static const std::array<ProjectionSetting, 36> settings = [] {
    std::array<ProjectionSetting, 36> s;
    std::size_t k = 0;
    for (BasisLabel a : kLabels)
      for (BasisLabel b : kLabels) s[k++] = {Analyzer::basis(a), Analyzer::basis(b)};
    return s;
  }();
  return settings;
}

CountTable simulate_tomography(const DensityMatrix& rho, double n0, std::uint64_t seed, double accidental,
                               Sampling mode) {
  if (!(n0 > 0.0)) throw Error(Errc::BadConfig, "n0 must be positive");
  CountTable table;
  table.n0 = n0;
  table.accidental = accidental;
  table.seed = seed;
  Rng rng(seed);
  for (const auto& s : tomography_settings())
    table.entries.push_back({s, sample_count(rng, n0 * joint_probability(rho, s) + accidental, mode)});
  return table;
}

DensityMatrix linear_inversion(const CountTable& table) {
  const auto freq = normalized_frequencies(table);
  const auto& settings = tomography_settings();
  Eigen::Matrix4d expect = Eigen::Matrix4d::Zero();
  expect(0, 0) = 1.0;
  for (std::size_t k = 0; k < 36; ++k) {
    const auto la = settings[k].a.label, lb = settings[k].b.label;
    const int pa = pauli_of(la), pb = pauli_of(lb);
    const double sa = sign_of(la), sb = sign_of(lb);
    expect(pa, pb) += sa * sb * freq[k];
    expect(pa, 0) += sa * freq[k] / 3.0;  // each single-side term appears in 3 blocks
    expect(0, pb) += sb * freq[k] / 3.0;
  }
  DensityMatrix rho = DensityMatrix::Zero();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) rho += expect(a, b) * tensor_product(pauli(a), pauli(b));
  return rho / 4.0;
}

ReconstructionResult mle_reconstruct(const CountTable& table, const MleOptions& options) {
  const auto freq = normalized_frequencies(table);
  const auto& settings = tomography_settings();
  std::array<Vector4c, 36> analyzers;
  for (std::size_t k = 0; k < 36; ++k)
    analyzers[k] = tensor_product(analyzer_state(settings[k].a, Side::A), analyzer_state(settings[k].b, Side::B));

  auto objective = [&](const Eigen::VectorXd& x) {
    const Factor t = unpack(x);
    const double norm = t.squaredNorm();
    if (norm <= 0.0) return 1e6;
    double err = 0.0;
    for (std::size_t k = 0; k < 36; ++k) {
      const double model = (t * analyzers[k]).squaredNorm() / norm;
      const double d = freq[k] - model;
      err += d * d;
    }
    return err;
  };

  const DensityMatrix start =
      0.999 * project_to_physical(linear_inversion(table)) + 0.001 * DensityMatrix::Identity() / 4.0;
  Eigen::VectorXd x = pack(factor_from_density(start));

  SimplexOptions sopts{options.tolerance, options.stall_iterations, options.max_evaluations};
  SimplexResult best = nelder_mead(objective, axis_simplex(x, 0.02), sopts);
  long evaluations = best.evaluations, iterations = best.iterations;
  bool converged = best.converged;

  Rng rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < options.restarts && evaluations < options.max_evaluations; ++r) {
    std::vector<Eigen::VectorXd> simplex{best.x};
    const double step = 0.02 * std::max(best.x.norm(), 1e-3);
    for (int i = 0; i < 16; ++i) {
      Eigen::VectorXd dir(16);
      for (Eigen::Index k = 0; k < 16; ++k) dir(k) = normal(rng);
      simplex.push_back(best.x + step * dir / dir.norm());
    }
    sopts.max_evaluations = options.max_evaluations - evaluations;
    SimplexResult run = nelder_mead(objective, std::move(simplex), sopts);
    evaluations += run.evaluations;
    iterations += run.iterations;
    converged = run.converged;
    if (run.value < best.value) {
      const long e = best.evaluations;
      best = std::move(run);
      best.evaluations = e;
    }
  }

  ReconstructionResult out;
  out.rho = density_from_factor(unpack(best.x));
  out.rho = (out.rho + out.rho.adjoint()) / 2.0;
  out.fidelity = fidelity(out.rho, pure_density(options.target));
  out.purity = purity(out.rho);
  out.linear_entropy = 1.0 - out.purity;
  out.concurrence = concurrence(out.rho);
  try {
    out.relative_phase = extract_relative_phase(out.rho);
  } catch (const Error&) {
    out.relative_phase.reset();
  }
  out.gellmann = gellmann_coefficients(out.rho);
  out.iterations = iterations;
  out.evaluations = evaluations;
  out.residual = best.value;
  out.converged = converged;
  return out;
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  const DensityMatrix s = psd_sqrt(rho);
  const DensityMatrix m = s * sigma * s;
  const double root_trace = psd_sqrt((m + m.adjoint()) / 2.0).trace().real();
  return std::clamp(root_trace * root_trace, 0.0, 1.0);
}

double purity(const DensityMatrix& rho) { return (rho * rho).trace().real(); }

double linear_entropy(const DensityMatrix& rho) { return 1.0 - purity(rho); }

DensityMatrix spin_flip(const DensityMatrix& rho) {
  const Matrix4c yy = tensor_product(pauli_y(), pauli_y());
  return yy * rho.conjugate() * yy;
}

double concurrence(const DensityMatrix& rho) {
  const DensityMatrix s = psd_sqrt(rho);
  const DensityMatrix inner = s * spin_flip(rho) * s;
  const DensityMatrix r = psd_sqrt((inner + inner.adjoint()) / 2.0);
  const auto lam = hermitian_eig(r).values;
  return std::clamp(lam(0) - lam(1) - lam(2) - lam(3), 0.0, 1.0);
}

double concurrence_from_product(const DensityMatrix& rho) {
  const Matrix4c prod = rho * spin_flip(rho);
  Eigen::ComplexEigenSolver<Matrix4c> solver(prod);
  Eigen::Vector4d mu = solver.eigenvalues().real();
  const double floor = 4.0 * std::numeric_limits<double>::epsilon() * mu.cwiseAbs().maxCoeff();
  Eigen::Vector4d lam;
  for (int i = 0; i < 4; ++i) lam(i) = mu(i) > floor ? std::sqrt(mu(i)) : 0.0;
  std::sort(lam.data(), lam.data() + 4, std::greater<>());
  return std::clamp(lam(0) - lam(1) - lam(2) - lam(3), 0.0, 1.0);
}

double extract_relative_phase(const DensityMatrix& rho) {
  const cplx coherence = rho(3, 0);
  if (std::abs(coherence) < 1e-6) throw Error(Errc::NoCoherence, "|<11|rho|00>| below 1e-6");
  return std::arg(coherence);
}

std::array<double, 16> gellmann_coefficients(const DensityMatrix& rho) {
  const auto& basis = gellmann_basis();
  std::array<double, 16> b{};
  for (std::size_t m = 0; m < 16; ++m)
    b[m] = (rho * basis[m]).trace().real() / (basis[m] * basis[m]).trace().real();
  return b;
}

void write_reconstruction(std::ostream& os, const ReconstructionResult& r) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(12);
  os << "fidelity " << r.fidelity << '\n';
  os << "purity " << r.purity << '\n';
  os << "linear_entropy " << r.linear_entropy << '\n';
  os << "concurrence " << r.concurrence << '\n';
  if (r.relative_phase)
    os << "relative_phase " << *r.relative_phase << '\n';
  else
    os << "relative_phase none\n";
  os << "iterations " << r.iterations << '\n';
  os << "evaluations " << r.evaluations << '\n';
  os << "residual " << r.residual << '\n';
  os << "converged " << (r.converged ? "true" : "false") << '\n';
  os << "gellmann";
  for (double b : r.gellmann) os << ' ' << b;
  os << '\n';
  os << "rho\n" << std::scientific << std::setprecision(11);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) os << r.rho(i, j).real() << ' ' << r.rho(i, j).imag() << '\n';
  os.flags(flags);
  os.precision(prec);
}

}  // namespace qsky
