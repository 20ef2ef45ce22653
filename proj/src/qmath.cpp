#include "qsky/qmath.hpp"

#include <cmath>
#include <map>

namespace qsky {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NotHermitian: return "NotHermitian";
    case Errc::NotPSD: return "NotPSD";
    case Errc::NotUnitary: return "NotUnitary";
    case Errc::BadSpectrum: return "BadSpectrum";
    case Errc::BadBasis: return "BadBasis";
    case Errc::EmptyPostselection: return "EmptyPostselection";
    case Errc::Unbalanceable: return "Unbalanceable";
    case Errc::Degenerate: return "Degenerate";
    case Errc::MissingSetting: return "MissingSetting";
    case Errc::NoCoherence: return "NoCoherence";
    case Errc::TooDegenerate: return "TooDegenerate";
    case Errc::BadConfig: return "BadConfig";
    case Errc::BadFormat: return "BadFormat";
  }
  return "Unknown";
}

namespace {

std::array<Matrix4c, 16> build_gellmann() {
  constexpr int d = 4;
  std::array<Matrix4c, 16> basis;
  basis[0] = Matrix4c::Identity();
  int m = 1;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      Matrix4c g = Matrix4c::Zero();
      g(j, k) = 1.0;
      g(k, j) = 1.0;
      basis[m++] = g;
    }
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      Matrix4c g = Matrix4c::Zero();
      g(j, k) = cplx(0, -1);
      g(k, j) = cplx(0, 1);
      basis[m++] = g;
    }
  for (int l = 1; l < d; ++l) {
    Matrix4c g = Matrix4c::Zero();
    const double scale = std::sqrt(2.0 / (l * (l + 1.0)));
    for (int j = 0; j < l; ++j) g(j, j) = scale;
    g(l, l) = -scale * l;
    basis[m++] = g;
  }
  return basis;
}

}  // namespace

const std::array<Matrix4c, 16>& gellmann_basis() {
  static const std::array<Matrix4c, 16> basis = build_gellmann();
  return basis;
}

std::string to_string(const ModeLabel& label) {
  return std::string("|") + (label.pol == Polarization::H ? "H" : "V") + "," +
         std::to_string(label.ell_a) + ">_A|" + std::to_string(label.ell_b) + ">_B";
}

Ket::Ket(std::vector<ModeLabel> labels, Eigen::VectorXcd amplitudes)
    : labels_(std::move(labels)), amplitudes_(std::move(amplitudes)) {
  if (static_cast<Eigen::Index>(labels_.size()) != amplitudes_.size())
    throw Error(Errc::BadBasis, "label count does not match amplitude count");
}

Ket Ket::from_terms(const std::vector<Term>& terms) {
  std::map<ModeLabel, cplx> merged;
  for (const auto& t : terms) merged[t.label] += t.amplitude;
  std::vector<ModeLabel> labels;
  Eigen::VectorXcd amps(static_cast<Eigen::Index>(merged.size()));
  Eigen::Index i = 0;
  for (const auto& [label, amp] : merged) {
    labels.push_back(label);
    amps(i++) = amp;
  }
  return Ket(std::move(labels), std::move(amps));
}

void Ket::normalize() {
  const double n = norm();
  if (n > 0) amplitudes_ /= n;
}

cplx Ket::amplitude(const ModeLabel& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return amplitudes_(static_cast<Eigen::Index>(i));
  return {0.0, 0.0};
}

}  // namespace qsky
