#include "qsky/source.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace qsky {

namespace {

// log of sqrt(2 / (π |l|!)); factorial through lgamma so large |l| stays finite.
double log_lg_norm(int abs_ell) {
  return 0.5 * (std::log(2.0 / std::numbers::pi) - std::lgamma(abs_ell + 1.0));
}

cplx lg_core(const LGMode& mode, double r, double phi, double envelope_exponent) {
  const int m = std::abs(mode.ell);
  const double w = mode.waist;
  const double rho = r * std::numbers::sqrt2 / w;
  double magnitude;
  if (m == 0) {
    magnitude = std::exp(log_lg_norm(0) + envelope_exponent) / w;
  } else if (rho == 0.0) {
    return {0.0, 0.0};
  } else {
    magnitude = std::exp(log_lg_norm(m) + m * std::log(rho) + envelope_exponent) / w;
  }
  return std::polar(magnitude, mode.ell * phi);
}

}  // namespace

cplx lg_amplitude(const LGMode& mode, double r, double phi) {
  return lg_core(mode, r, phi, -(r * r) / (mode.waist * mode.waist));
}

cplx lg_amplitude_unenveloped(const LGMode& mode, double r, double phi) {
  return lg_core(mode, r, phi, 0.0);
}

OAMSpectrum::OAMSpectrum(std::vector<double> coefficients) : coefficients_(std::move(coefficients)) {
  if (coefficients_.empty()) throw Error(Errc::BadSpectrum, "empty coefficient list");
  double total = 0.0;
  for (std::size_t k = 0; k < coefficients_.size(); ++k) {
    const double c = coefficients_[k];
    if (!(c >= 0.0) || !std::isfinite(c))
      throw Error(Errc::BadSpectrum, "coefficient c_" + std::to_string(k) + " is negative or not finite");
    total += (k == 0 ? 1.0 : 2.0) * c * c;
  }
  if (total <= 0.0) throw Error(Errc::BadSpectrum, "all coefficients are zero");
  const double scale = 1.0 / std::sqrt(total);
  for (double& c : coefficients_) c *= scale;
}

double OAMSpectrum::coefficient(int ell) const {
  const auto k = static_cast<std::size_t>(std::abs(ell));
  return k < coefficients_.size() ? coefficients_[k] : 0.0;
}

OAMSpectrum spdc_spectrum(const SpectrumModel& model, int cutoff) {
  if (cutoff < 0) throw Error(Errc::BadSpectrum, "cutoff L must be non-negative");
  const auto n = static_cast<std::size_t>(cutoff) + 1;
  std::vector<double> c(n, 1.0);
  if (const auto* e = std::get_if<spectrum_model::Exponential>(&model)) {
    if (!(e->ell0 > 0.0)) throw Error(Errc::BadSpectrum, "exponential model needs l0 > 0");
    for (std::size_t k = 0; k < n; ++k) c[k] = std::exp(-static_cast<double>(k) / (2.0 * e->ell0));
  } else if (const auto* u = std::get_if<spectrum_model::UserList>(&model)) {
    if (u->coefficients.size() != n)
      throw Error(Errc::BadSpectrum, "user list has " + std::to_string(u->coefficients.size()) +
                                         " entries, expected L + 1 = " + std::to_string(n));
    c = u->coefficients;
  }
  return OAMSpectrum(std::move(c));
}

Ket build_input_state(const OAMSpectrum& spectrum) {
  const int L = spectrum.cutoff();
  std::vector<Ket::Term> terms;
  terms.reserve(static_cast<std::size_t>(2 * L + 1));
  for (int ell = -L; ell <= L; ++ell)
    terms.push_back({{Polarization::H, ell, -ell}, spectrum.coefficient(ell)});
  return Ket::from_terms(terms);
}

}  // namespace qsky
