#pragma once

// Projective measurements on the hybrid pair: analyser states, coincidence
// count synthesis, visibility and the CHSH parameter.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qsky/qmath.hpp"
#include "qsky/random.hpp"

namespace qsky {

/// Overcomplete qubit projector set {|0>, |1>, |+>, |+i>, |->, |-i>}.
enum class BasisLabel { Zero, One, Plus, PlusI, Minus, MinusI };

enum class Side { A, B };

/// One side of a joint projection: either a tomography label or an
/// equatorial analyser at phase θ.
///
/// Photon A's analyser is (|H> + e^{iθ}|V>)/√2. Photon B is analysed by the
/// conjugate hologram, (|l1> + e^{−iθ}|l2>)/√2, so that coincidences on the
/// hybrid state depend on θ_A − θ_B only.
struct Analyzer {
  enum class Kind { Label, Phase };
  Kind kind = Kind::Phase;
  BasisLabel label = BasisLabel::Zero;
  double theta = 0.0;  // wrapped into [0, 2π)

  static Analyzer basis(BasisLabel label) { return {Kind::Label, label, 0.0}; }
  static Analyzer phase(double theta);

  friend bool operator==(const Analyzer& a, const Analyzer& b);
};

struct ProjectionSetting {
  Analyzer a;
  Analyzer b;

  friend bool operator==(const ProjectionSetting&, const ProjectionSetting&) = default;
};

Vector2c analyzer_state(const Analyzer& analyzer, Side side);

/// P_A ⊗ P_B for a normalised joint projector.
Matrix4c projector(const ProjectionSetting& setting);

struct CountEntry {
  ProjectionSetting setting;
  std::int64_t counts = 0;

  friend bool operator==(const CountEntry&, const CountEntry&) = default;
};

struct CountTable {
  std::vector<CountEntry> entries;
  double n0 = 0.0;
  double accidental = 0.0;
  std::uint64_t seed = 0;

  /// Appends, or overwrites the counts of an existing setting.
  void set(const ProjectionSetting& setting, std::int64_t counts);
  const CountEntry* find(const ProjectionSetting& setting) const;

  friend bool operator==(const CountTable&, const CountTable&) = default;
};

/// Flat text format, one row per setting: "θ_A θ_B counts". Phase analysers
/// print as radians with six decimals; tomography labels print as |0>, |1>,
/// |+>, |->, |+i>, |-i>. Header lines start with '#'.
void write_count_table(std::ostream& os, const CountTable& table);
CountTable read_count_table(std::istream& is);

/// Tr(ρ P_A ⊗ P_B), clamped into [0, 1].
double joint_probability(const DensityMatrix& rho, const ProjectionSetting& setting);

/// Noiseless coincidence probabilities J(θ_A, θ_B): one row per θ_A.
struct CoincidenceCurve {
  std::vector<double> theta_a;
  std::vector<double> theta_b;
  Eigen::MatrixXd values;
};

CoincidenceCurve expected_curve(const DensityMatrix& rho, const std::vector<double>& theta_a,
                                const std::vector<double>& theta_b);

/// n points evenly spaced on [0, 2π).
std::vector<double> uniform_angles(int n);

/// Counts with mean n0·J + accidental for every (θ_A, θ_B); deterministic in `seed`.
CountTable coincidence_curve(const DensityMatrix& rho, const std::vector<double>& theta_a,
                             const std::vector<double>& theta_b, double n0, std::uint64_t seed,
                             double accidental = 0.0, Sampling mode = Sampling::Poisson);

/// Groups a table of phase settings into one trace per θ_A.
CoincidenceCurve to_curve(const CountTable& table);

/// (J_max − J_min)/(J_max + J_min) per θ_A trace, averaged over traces.
/// Throws Errc::Degenerate on a trace with fewer than two samples or J_max + J_min = 0.
double visibility(const CoincidenceCurve& curve);
double visibility(const CountTable& table);

struct ChshAngles {
  double a = 0.0;
  double a_prime = 1.5707963267948966;
  double b = 0.7853981633974483;
  double b_prime = 2.356194490192345;
};

/// E(a, b) = [J(a,b) + J(a+π,b+π) − J(a+π,b) − J(a,b+π)] / Σ.
double correlation(const DensityMatrix& rho, double theta_a, double theta_b);

/// S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′).
double chsh_s(const DensityMatrix& rho, const ChshAngles& angles = {});

/// The 16 phase settings needed by chsh_from_counts.
std::vector<ProjectionSetting> chsh_settings(const ChshAngles& angles = {});

CountTable sample_chsh(const DensityMatrix& rho, double n0, std::uint64_t seed, const ChshAngles& angles = {},
                       double accidental = 0.0, Sampling mode = Sampling::Poisson);

struct ChshEstimate {
  double s = 0.0;
  double sigma = 0.0;
};

/// S from raw counts with Poisson (√N per bin) error propagation.
/// Throws Errc::MissingSetting naming every absent (θ_A, θ_B) pair.
ChshEstimate chsh_from_counts(const CountTable& table, const ChshAngles& angles = {});

/// L_C ≈ λ²/Δλ, inputs in nanometres, result in micrometres.
double coherence_length(double lambda_nm, double delta_lambda_nm);

}  // namespace qsky
