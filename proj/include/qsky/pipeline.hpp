#pragma once

// Configuration-driven runs behind the command-line tool: the subspace table,
// Bell curves and CHSH, Stokes textures and single reconstructions.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qsky/circuit.hpp"
#include "qsky/measurement.hpp"
#include "qsky/random.hpp"
#include "qsky/source.hpp"
#include "qsky/tomography.hpp"
#include "qsky/topology.hpp"

namespace qsky {

using Subspace = std::pair<int, int>;

/// (1,0) (−1,0) (2,0) (−2,0) (3,0) (−3,0) (1,−1) (2,1) (−3,1) (3,−1) (−3,2) (3,−2).
const std::vector<Subspace>& table_subspaces();

struct PolarizationRotation {
  enum class Plate { None, Half, Quarter };
  Plate plate = Plate::None;
  double angle = 0.0;

  std::optional<Matrix2c> jones() const;
};

struct ExperimentConfig {
  std::vector<Subspace> subspaces = table_subspaces();
  SpectrumModel spectrum = spectrum_model::Exponential{};
  int cutoff = 10;
  double efficiency_base = 1.0;
  std::optional<double> hwp1_angle;
  NoiseChannel noise;
  double chi = 0.0;
  double extra_phase = 0.0;
  double n0 = 1e4;
  Sampling sampling = Sampling::Poisson;
  std::uint64_t seed = 1;
  GridSpec grid;
  double waist = 1.0;
  PolarizationRotation rotation;
  std::vector<double> bell_theta_a{0.0, 1.5707963267948966, 3.141592653589793, 4.71238898038469};
  int bell_points = 72;
  ChshAngles chsh;
  int restarts = 5;
  int jobs = 0;  // 0: hardware concurrency
  std::filesystem::path output;

  /// Throws Errc::BadConfig.
  void validate() const;

  HybridStateSpec state_spec(const Subspace& s) const;
  DensityMatrix state(const Subspace& s) const;
};

/// Keys absent from `j` keep their defaults; unknown keys are rejected.
/// Throws Errc::BadConfig.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
nlohmann::json to_json(const ExperimentConfig& config);

/// Output directory: the configured one, else $QSKY_OUT_DIR, else "qsky_out".
std::filesystem::path output_directory(const ExperimentConfig& config);

/// "KIND:P" with KIND in none, isotropic, dephasing, background.
NoiseChannel parse_noise(const std::string& text);
/// "N:EXTENT".
GridSpec parse_grid(const std::string& text);
/// "L1,L2".
Subspace parse_subspace(const std::string& text);

struct TableRow {
  Subspace subspace;
  double fidelity = 0.0;
  double purity = 0.0;
  double concurrence = 0.0;
  std::optional<double> relative_phase;
  int n_predicted = 0;
  double n_measured = 0.0;
  double n_raw = 0.0;
  bool converged = false;
  std::string error;
};

struct BellRow {
  Subspace subspace;
  double visibility = 0.0;
  double s = 0.0;
  double sigma = 0.0;
  std::string error;
};

struct TextureRow {
  Subspace subspace;
  TopologyReport report;
  std::string error;
};

template <typename Row>
struct RunResult {
  std::vector<Row> rows;
  std::vector<std::string> artifacts;  // relative to the output directory, sorted
  std::filesystem::path directory;

  std::vector<const Row*> failures() const {
    std::vector<const Row*> out;
    for (const auto& r : rows)
      if (!r.error.empty()) out.push_back(&r);
    return out;
  }
};

RunResult<TableRow> run_table(const ExperimentConfig& config);
RunResult<BellRow> run_bell(const ExperimentConfig& config);
RunResult<TextureRow> run_texture(const ExperimentConfig& config);

/// Reconstructs one CountTable file. Errors propagate as exceptions.
RunResult<TableRow> run_tomo(const ExperimentConfig& config, const std::filesystem::path& counts);

/// "<stem>_<l1>_<l2>".
std::string subspace_stem(const std::string& stem, const Subspace& s);

/// CRC-32 of a file's bytes.
std::uint32_t file_crc32(const std::filesystem::path& path);

}  // namespace qsky
