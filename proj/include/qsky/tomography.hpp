#pragma once

// Overcomplete 36-setting two-qubit tomography, least-squares maximum
// likelihood reconstruction and the state-quality metrics reported for each
// subspace (fidelity, purity, linear entropy, concurrence, relative phase).

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>

#include "qsky/measurement.hpp"
#include "qsky/qmath.hpp"

namespace qsky {

/// The 6 × 6 joint settings, photon A outer, in the order
/// |0>, |1>, |+>, |+i>, |->, |-i> on each side.
const std::array<ProjectionSetting, 36>& tomography_settings();

/// Counts with mean n0·Tr(ρ P_i ⊗ P_j) + accidental for the 36 settings.
CountTable simulate_tomography(const DensityMatrix& rho, double n0, std::uint64_t seed, double accidental = 0.0,
                               Sampling mode = Sampling::Poisson);

struct MleOptions {
  Vector4c target = Vector4c(0.7071067811865476, 0.0, 0.0, 0.7071067811865476);  // fidelity reference
  int restarts = 5;
  double tolerance = 1e-12;
  int stall_iterations = 50;
  long max_evaluations = 200000;
  std::uint64_t seed = 0;  // restart directions
};

struct ReconstructionResult {
  DensityMatrix rho;
  double fidelity = 0.0;
  double purity = 0.0;
  double linear_entropy = 0.0;
  double concurrence = 0.0;
  std::optional<double> relative_phase;  // empty when the state carries no coherence
  std::array<double, 16> gellmann{};     // b_m with ρ = Σ b_m Γ_m
  long iterations = 0;
  long evaluations = 0;
  double residual = 0.0;  // final squared error
  bool converged = false;
};

/// Physical ρ̂ = T†T / Tr(T†T), T lower triangular with real diagonal, that
/// minimises Σ (ñ_s − Tr(ρ̂ P_s))² over the 36 settings, where ñ_s are counts
/// normalised within their measurement-basis block. Starts from the
/// linear-inversion estimate, then restarts the simplex around the best point.
/// Throws Errc::MissingSetting or Errc::Degenerate (no counts). Hitting the
/// evaluation cap is reported through `converged = false`.
ReconstructionResult mle_reconstruct(const CountTable& table, const MleOptions& options = {});

/// Unconstrained linear-inversion estimate from the same normalised data.
DensityMatrix linear_inversion(const CountTable& table);

/// (Tr √(√ρ σ √ρ))², clamped into [0, 1].
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

double purity(const DensityMatrix& rho);
double linear_entropy(const DensityMatrix& rho);

/// ρ̃ = (σ_y ⊗ σ_y) ρ* (σ_y ⊗ σ_y).
DensityMatrix spin_flip(const DensityMatrix& rho);

/// Wootters concurrence from the eigenvalues of R = √(√ρ ρ̃ √ρ).
double concurrence(const DensityMatrix& rho);

/// Same quantity from the square roots of the eigenvalues of ρρ̃.
double concurrence_from_product(const DensityMatrix& rho);

/// arg <11|ρ|00>, the phase of the |V l2> arm relative to |H l1>.
/// Throws Errc::NoCoherence when |<11|ρ|00>| < 1e-6.
double extract_relative_phase(const DensityMatrix& rho);

/// b_m = Tr(ρ Γ_m) / Tr(Γ_m²).
std::array<double, 16> gellmann_coefficients(const DensityMatrix& rho);

/// Key-value report followed by the 16-line row-major "re im" block of ρ̂.
void write_reconstruction(std::ostream& os, const ReconstructionResult& result);

}  // namespace qsky
