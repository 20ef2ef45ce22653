#pragma once

// The reconfigurable gate acting on photon A: waveplate Jones optics, the
// polarisation-controlled OAM shift of the self-locking interferometer,
// single-mode-fibre post-selection and phenomenological noise channels.

#include <optional>

#include "qsky/qmath.hpp"
#include "qsky/source.hpp"

namespace qsky {

struct HybridStateSpec {
  int ell1 = 1;  // OAM shift written on the path that ends up horizontal
  int ell2 = 0;  // OAM shift written on the path that ends up vertical
  double chi = 0.0;          // path-mismatch phase on the vertical output
  std::optional<double> hwp1_angle;  // nullopt: balance the arms automatically
  double extra_phase = 0.0;  // Gouy / mirror phase, applied as e^{iφ}|V><V| ⊗ I
  double efficiency_base = 1.0;  // per-mode coupling efficiency η(l) = η₀^|l|

  /// Throws Errc::BadConfig when ell1 == ell2 or η₀ is outside (0, 1].
  void validate() const;
};

struct NoiseChannel {
  enum class Kind { None, Isotropic, Dephasing, Background };
  Kind kind = Kind::None;
  double p = 1.0;     // retained fraction for Isotropic / Dephasing
  double rate = 0.0;  // accidental counts per setting for Background

  static NoiseChannel none() { return {}; }
  static NoiseChannel isotropic(double p);
  static NoiseChannel dephasing(double p);
  static NoiseChannel background(double rate);

  /// Accidental floor consumed by the count simulators.
  double accidental_rate() const { return kind == Kind::Background ? rate : 0.0; }
};

/// Half-wave plate with fast axis at θ: [[cos2θ, sin2θ], [sin2θ, −cos2θ]].
Matrix2c hwp_jones(double theta);

/// Quarter-wave plate with fast axis at θ: R(−θ) diag(1, i) R(θ).
Matrix2c qwp_jones(double theta);

/// Applies a 2×2 Jones matrix to photon A's polarisation on every term.
Ket apply_polarization(const Ket& state, const Matrix2c& jones);

/// Interferometer action on photon A:
///   |V, l>_A → |H, l + l1>_A,   |H, l>_A → e^{iχ} |V, l + l2>_A.
/// Photon B labels are untouched.
Ket interferometer_gate(const Ket& state, const HybridStateSpec& spec);

/// Two-qubit state left after photon A is coupled into a single-mode fibre.
struct PostselectedState {
  Vector4c amplitudes;  // |H l1>, |H l2>, |V l1>, |V l2>
  int ell1 = 0;
  int ell2 = 0;
  double success_probability = 0.0;
};

/// Keeps terms with l_A = 0 and relabels photon B onto {|l1> ≡ |0>, |l2> ≡ |1>}.
/// Each surviving term is weighted by sqrt(η₀^|l_B|). Throws
/// Errc::EmptyPostselection when nothing survives and Errc::BadBasis when a
/// surviving photon-B mode is neither l1 nor l2.
PostselectedState postselect_smf(const Ket& state, int ell1, int ell2, double efficiency_base = 1.0);

/// HWP₁ angle that equalises the two post-selected arm amplitudes:
/// θ = ½ atan2(c_|l2| √η(l2), c_|l1| √η(l1)).
/// Throws Errc::Unbalanceable if either weight vanishes.
double balance_hwp1(const OAMSpectrum& spectrum, int ell1, int ell2, double efficiency_base = 1.0);

/// isotropic(p): pρ + (1−p) I/4;  dephasing(p): pρ + (1−p) diag(ρ);
/// background and none leave ρ unchanged.
DensityMatrix apply_noise(const DensityMatrix& rho, const NoiseChannel& channel);

/// Source → HWP₁ → interferometer → fibre post-selection.
PostselectedState prepare_hybrid_state(const HybridStateSpec& spec, const OAMSpectrum& spectrum);

/// Full pipeline: prepare_hybrid_state, outer product, extra phase, noise.
DensityMatrix make_hybrid_density(const HybridStateSpec& spec, const OAMSpectrum& spectrum,
                                  const NoiseChannel& channel = NoiseChannel::none());

/// (|H>|l1> + e^{iφ}|V>|l2>)/√2.
Vector4c ideal_hybrid_state(double relative_phase = 0.0);

}  // namespace qsky
