#include "qsky/circuit.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace qsky {

void HybridStateSpec::validate() const {
  if (ell1 == ell2)
    throw Error(Errc::BadConfig, "subspace needs l1 != l2, got l1 = l2 = " + std::to_string(ell1));
  if (!(efficiency_base > 0.0 && efficiency_base <= 1.0))
    throw Error(Errc::BadConfig, "efficiency base must lie in (0, 1]");
}

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::BadConfig, "noise parameter p must lie in [0, 1]");
}

double arm_weight(const OAMSpectrum& spectrum, int ell, double efficiency_base) {
  return spectrum.coefficient(ell) * std::sqrt(std::pow(efficiency_base, std::abs(ell)));
}

}  // namespace

NoiseChannel NoiseChannel::isotropic(double p) {
  check_probability(p);
  return {Kind::Isotropic, p, 0.0};
}

NoiseChannel NoiseChannel::dephasing(double p) {
  check_probability(p);
  return {Kind::Dephasing, p, 0.0};
}

NoiseChannel NoiseChannel::background(double rate) {
  if (!(rate >= 0.0)) throw Error(Errc::BadConfig, "background rate must be non-negative");
  return {Kind::Background, 1.0, rate};
}

Matrix2c hwp_jones(double theta) {
  const double c = std::cos(2 * theta), s = std::sin(2 * theta);
  return (Matrix2c() << c, s, s, -c).finished();
}

Matrix2c qwp_jones(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Matrix2c rot;
  rot << c, s, -s, c;
  const Matrix2c retarder = Eigen::Vector2cd(1.0, cplx(0, 1)).asDiagonal();
  return rot.transpose() * retarder * rot;
}

Ket apply_polarization(const Ket& state, const Matrix2c& jones) {
  std::vector<Ket::Term> terms;
  terms.reserve(2 * state.labels().size());
  for (std::size_t i = 0; i < state.labels().size(); ++i) {
    const ModeLabel& in = state.labels()[i];
    const cplx amp = state.amplitudes()(static_cast<Eigen::Index>(i));
    const int col = static_cast<int>(in.pol);
    for (int row = 0; row < 2; ++row) {
      const cplx w = jones(row, col);
      if (w == cplx(0.0, 0.0)) continue;
      terms.push_back({{static_cast<Polarization>(row), in.ell_a, in.ell_b}, w * amp});
    }
  }
  return Ket::from_terms(terms);
}

Ket interferometer_gate(const Ket& state, const HybridStateSpec& spec) {
  const cplx path_phase = std::polar(1.0, spec.chi);
  std::vector<Ket::Term> terms;
  terms.reserve(state.labels().size());
  for (std::size_t i = 0; i < state.labels().size(); ++i) {
    const ModeLabel& in = state.labels()[i];
    const cplx amp = state.amplitudes()(static_cast<Eigen::Index>(i));
    if (in.pol == Polarization::V)
      terms.push_back({{Polarization::H, in.ell_a + spec.ell1, in.ell_b}, amp});
    else
      terms.push_back({{Polarization::V, in.ell_a + spec.ell2, in.ell_b}, path_phase * amp});
  }
  return Ket::from_terms(terms);
}

PostselectedState postselect_smf(const Ket& state, int ell1, int ell2, double efficiency_base) {
  if (ell1 == ell2) throw Error(Errc::BadBasis, "post-selection needs l1 != l2");
  PostselectedState out;
  out.ell1 = ell1;
  out.ell2 = ell2;
  out.amplitudes.setZero();
  bool survived = false;
  for (std::size_t i = 0; i < state.labels().size(); ++i) {
    const ModeLabel& label = state.labels()[i];
    if (label.ell_a != 0) continue;
    int b;
    if (label.ell_b == ell1)
      b = 0;
    else if (label.ell_b == ell2)
      b = 1;
    else
      throw Error(Errc::BadBasis, "surviving term " + to_string(label) + " has photon-B mode outside {l1, l2}");
    const double eta = std::pow(efficiency_base, std::abs(label.ell_b));
    out.amplitudes(2 * static_cast<int>(label.pol) + b) +=
        std::sqrt(eta) * state.amplitudes()(static_cast<Eigen::Index>(i));
    survived = true;
  }
  const double weight = out.amplitudes.squaredNorm();
  if (!survived || weight == 0.0)
    throw Error(Errc::EmptyPostselection, "no term with l_A = 0 survives for (l1, l2) = (" +
                                              std::to_string(ell1) + ", " + std::to_string(ell2) + ")");
  out.success_probability = weight;
  out.amplitudes /= std::sqrt(weight);
  return out;
}

double balance_hwp1(const OAMSpectrum& spectrum, int ell1, int ell2, double efficiency_base) {
  const double a = arm_weight(spectrum, ell1, efficiency_base);
  const double b = arm_weight(spectrum, ell2, efficiency_base);
  if (a <= 0.0 || b <= 0.0)
    throw Error(Errc::Unbalanceable, "spectrum has no weight on l = " + std::to_string(a <= 0.0 ? ell1 : ell2));
  return 0.5 * std::atan2(b, a);
}

DensityMatrix apply_noise(const DensityMatrix& rho, const NoiseChannel& channel) {
  switch (channel.kind) {
    case NoiseChannel::Kind::Isotropic:
      return channel.p * rho + (1.0 - channel.p) * DensityMatrix::Identity() / 4.0;
    case NoiseChannel::Kind::Dephasing: {
      const DensityMatrix diag = rho.diagonal().asDiagonal();
      return channel.p * rho + (1.0 - channel.p) * diag;
    }
    case NoiseChannel::Kind::None:
    case NoiseChannel::Kind::Background:
      break;
  }
  return rho;
}

PostselectedState prepare_hybrid_state(const HybridStateSpec& spec, const OAMSpectrum& spectrum) {
  spec.validate();
  const double theta =
      spec.hwp1_angle ? *spec.hwp1_angle : balance_hwp1(spectrum, spec.ell1, spec.ell2, spec.efficiency_base);
  const Ket input = build_input_state(spectrum);
  const Ket rotated = apply_polarization(input, hwp_jones(theta));
  const Ket gated = interferometer_gate(rotated, spec);
  return postselect_smf(gated, spec.ell1, spec.ell2, spec.efficiency_base);
}

DensityMatrix make_hybrid_density(const HybridStateSpec& spec, const OAMSpectrum& spectrum,
                                  const NoiseChannel& channel) {
  const PostselectedState state = prepare_hybrid_state(spec, spectrum);
  const Matrix2c phase = Eigen::Vector2cd(1.0, std::polar(1.0, spec.extra_phase)).asDiagonal();
  const Matrix4c u = tensor_product(phase, Matrix2c::Identity());
  const DensityMatrix rho = u * pure_density(state.amplitudes) * u.adjoint();
  return apply_noise(rho, channel);
}

Vector4c ideal_hybrid_state(double relative_phase) {
  Vector4c psi = Vector4c::Zero();
  psi(0) = 1.0 / std::numbers::sqrt2;
  psi(3) = std::polar(1.0 / std::numbers::sqrt2, relative_phase);
  return psi;
}

}  // namespace qsky
