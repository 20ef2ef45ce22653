#pragma once

// Nonlocal Stokes texture S_A(r_B) of the hybrid state, its skyrmion number,
// Stokes phases and the analytic polarity × vorticity prediction.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qsky/qmath.hpp"

namespace qsky {

/// Square grid of n × n points on [−extent, extent]², coordinates in waists.
struct GridSpec {
  int n = 512;
  double extent = 6.0;
};

inline constexpr double kIntensityFloor = 1e-12;
inline constexpr double kPolarizationFloor = 1e-9;

struct StokesField {
  int n = 0;
  double extent = 0.0;
  double waist = 1.0;
  int ell1 = 0;
  int ell2 = 0;
  Eigen::MatrixX3d vectors;  // unit vectors, zero where masked; row j*n + i
  Eigen::MatrixX3d raw;      // conditional Stokes vectors, |S| = degree of polarisation
  std::vector<std::uint8_t> mask;

  Eigen::Index index(int i, int j) const { return static_cast<Eigen::Index>(j) * n + i; }
  double coordinate(int i) const { return -extent + 2.0 * extent * i / (n - 1); }
  double spacing() const { return 2.0 * extent / (n - 1); }
  std::size_t masked_count() const;
};

struct StokesSample {
  Eigen::Vector3d raw;      // Tr(σ M)/Tr M
  double intensity = 0.0;   // Tr M with the common Gaussian envelope removed
};

/// Conditional polarisation of photon A when photon B is found at (x, y)
/// (in waists): M_ij = Σ_mn u_m ρ_(i m),(j n) u_n*, S_k = Tr(σ_k M)/Tr M.
StokesSample stokes_sample(const DensityMatrix& rho, int ell1, int ell2, double waist, double x, double y);

/// Samples the texture on `grid`, normalises each vector to the unit sphere
/// and masks points whose intensity is below 1e-12 or whose degree of
/// polarisation is below 1e-9.
StokesField stokes_field(const DensityMatrix& rho, int ell1, int ell2, double waist, const GridSpec& grid = {});

struct SkyrmionIntegral {
  double total = 0.0;     // interior + closure
  double interior = 0.0;  // (1/4π) ∫ S·(∂xS × ∂yS) over the trapezoid region
  double closure = 0.0;   // exterior contribution from the boundary loop
  bool closed = false;    // false when the boundary does not settle near a pole
};

/// Skyrmion number over the whole plane. The interior integral uses
/// fourth-order central differences and trapezoidal weights on the grid minus
/// a two-node border. The
/// region outside is mapped onto the spherical cap bounded by the image of
/// the integration boundary; its signed area is added when the boundary
/// vectors cluster around a common limit direction.
/// Throws Errc::TooDegenerate when half or more of the points are masked.
SkyrmionIntegral skyrmion_integral(const StokesField& field);

inline double skyrmion_number(const StokesField& field) { return skyrmion_integral(field).total; }

/// Interior integral of the unnormalised (raw) field, no closure.
double raw_skyrmion_number(const StokesField& field);

struct StokesPhases {
  Eigen::MatrixXd xy, yz, zx;  // (n × n), row j, column i; zero where masked
};

/// φ_ij = atan2(S_j, S_i) in (−π, π].
StokesPhases stokes_phases(const StokesField& field);

struct TopologyPrediction {
  int skyrmion_number = 0;
  int polarity = 0;   // sgn(|l1| − |l2|), sgn(0) = 0
  int vorticity = 0;  // l1 − l2
};

TopologyPrediction predict_topology(int ell1, int ell2);

/// (U ⊗ I) ρ (U ⊗ I)†. Throws Errc::NotUnitary.
DensityMatrix basis_rotation(const DensityMatrix& rho, const Matrix2c& u_pol);

struct TopologyReport {
  double skyrmion_number = 0.0;
  double interior = 0.0;
  double closure = 0.0;
  bool closed = false;
  double raw_skyrmion_number = 0.0;
  TopologyPrediction predicted;
  int n = 0;
  double extent = 0.0;
  std::size_t masked = 0;
};

TopologyReport analyze_topology(const StokesField& field);

void write_stokes_field(std::ostream& os, const StokesField& field);
/// The file holds unit vectors only, so `raw` comes back equal to `vectors`.
StokesField read_stokes_field(std::istream& is);

/// Same header and row layout as the field file with a single value column.
void write_phase_grid(std::ostream& os, const StokesField& field, const Eigen::MatrixXd& phase, const char* name);

void write_topology_report(std::ostream& os, const TopologyReport& report);

}  // namespace qsky
