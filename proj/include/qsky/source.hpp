#pragma once

// SPDC biphoton source: the OAM spectrum c_|l| of the down-converted pair and
// the p = 0 Laguerre-Gaussian transverse modes |l> used to evaluate it in
// position space.

#include <complex>
#include <variant>
#include <vector>

#include "qsky/qmath.hpp"

namespace qsky {

/// p = 0 Laguerre-Gaussian mode with OAM index `ell` and beam waist `waist`.
struct LGMode {
  int ell = 0;
  double waist = 1.0;
};

/// u_l(r, φ) = sqrt(2/(π |l|!)) (1/w) (r√2/w)^|l| exp(−r²/w²) exp(i l φ).
cplx lg_amplitude(const LGMode& mode, double r, double phi);

/// Same mode with the common Gaussian factor exp(−r²/w²) removed. All modes
/// of one waist share that factor, so ratios of these amplitudes equal ratios
/// of the physical ones without underflowing far from the axis.
cplx lg_amplitude_unenveloped(const LGMode& mode, double r, double phi);

/// Coefficients c_|l| for |l| = 0..L, normalised so that
/// Σ_{l=−L}^{L} c_|l|² = c₀² + 2 Σ_{k≥1} c_k² = 1.
class OAMSpectrum {
 public:
  OAMSpectrum() : coefficients_{1.0} {}

  /// Validates non-negativity and normalises. Throws Errc::BadSpectrum.
  explicit OAMSpectrum(std::vector<double> coefficients);

  int cutoff() const { return static_cast<int>(coefficients_.size()) - 1; }

  /// c_|ell|; zero outside the cutoff.
  double coefficient(int ell) const;

  const std::vector<double>& coefficients() const { return coefficients_; }

 private:
  std::vector<double> coefficients_;
};

namespace spectrum_model {
struct Uniform {};
/// c_|l| ∝ exp(−|l| / (2 l₀)).
struct Exponential {
  double ell0 = 2.0;
};
/// Explicit c_|l| for |l| = 0..L.
struct UserList {
  std::vector<double> coefficients;
};
}  // namespace spectrum_model

using SpectrumModel =
    std::variant<spectrum_model::Uniform, spectrum_model::Exponential, spectrum_model::UserList>;

/// Throws Errc::BadSpectrum for L < 0, l₀ ≤ 0 or a user list of the wrong
/// length or with negative entries.
OAMSpectrum spdc_spectrum(const SpectrumModel& model, int cutoff);

/// Σ_l c_|l| |H, l>_A |−l>_B, one term per l ∈ [−L, L].
Ket build_input_state(const OAMSpectrum& spectrum);

}  // namespace qsky
