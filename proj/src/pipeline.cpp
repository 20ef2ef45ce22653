#include "qsky/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <sstream>
#include <thread>

#include <zlib.h>

namespace qsky {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<Subspace>& table_subspaces() {
  static const std::vector<Subspace> s{{1, 0},  {-1, 0}, {2, 0},  {-2, 0},  {3, 0},  {-3, 0},
                                       {1, -1}, {2, 1},  {-3, 1}, {3, -1}, {-3, 2}, {3, -2}};
  return s;
}

std::optional<Matrix2c> PolarizationRotation::jones() const {
  switch (plate) {
    case Plate::Half:
      return hwp_jones(angle);
    case Plate::Quarter:
      return qwp_jones(angle);
    case Plate::None:
      break;
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::BadConfig, what); };
  for (const auto& [l1, l2] : subspaces)
    if (l1 == l2) fail("subspace (" + std::to_string(l1) + ", " + std::to_string(l2) + ") needs l1 != l2");
  if (!(n0 >= 1.0)) fail("n0 must be at least 1");
  if (grid.n < 64) fail("grid n must be at least 64");
  if (!(grid.extent > 0.0)) fail("grid extent must be positive");
  if (!(waist > 0.0)) fail("waist must be positive");
  if (cutoff < 0) fail("spectrum cutoff must be non-negative");
  if (!(efficiency_base > 0.0 && efficiency_base <= 1.0)) fail("efficiency base must lie in (0, 1]");
  if (bell_points < 2) fail("bell curve needs at least two points");
  if (restarts < 0) fail("restarts must be non-negative");
  if (jobs < 0) fail("jobs must be non-negative");
}

HybridStateSpec ExperimentConfig::state_spec(const Subspace& s) const {
  HybridStateSpec spec;
  spec.ell1 = s.first;
  spec.ell2 = s.second;
  spec.chi = chi;
  spec.hwp1_angle = hwp1_angle;
  spec.extra_phase = extra_phase;
  spec.efficiency_base = efficiency_base;
  return spec;
}

DensityMatrix ExperimentConfig::state(const Subspace& s) const {
  return make_hybrid_density(state_spec(s), spdc_spectrum(spectrum, cutoff), noise);
}

// --- configuration text -----------------------------------------------------

namespace {

[[noreturn]] void bad_config(const std::string& what) { throw Error(Errc::BadConfig, what); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) bad_config(where + " must be an object");
  for (const auto& item : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; }))
      bad_config("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

const char* noise_name(NoiseChannel::Kind k) {
  switch (k) {
    case NoiseChannel::Kind::Isotropic:
      return "isotropic";
    case NoiseChannel::Kind::Dephasing:
      return "dephasing";
    case NoiseChannel::Kind::Background:
      return "background";
    case NoiseChannel::Kind::None:
      break;
  }
  return "none";
}

NoiseChannel make_noise(const std::string& kind, double value) {
  if (kind == "none") return NoiseChannel::none();
  if (kind == "isotropic") return NoiseChannel::isotropic(value);
  if (kind == "dephasing") return NoiseChannel::dephasing(value);
  if (kind == "background") return NoiseChannel::background(value);
  bad_config("unknown noise kind '" + kind + "'");
}

}  // namespace

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  try {
    check_keys(j,
               {"subspaces", "spectrum", "efficiency_base", "hwp1_angle", "noise", "phases", "n0", "sampling", "seed",
                "grid", "rotation", "bell", "restarts", "jobs", "output"},
               "config");
    if (j.contains("subspaces")) {
      c.subspaces.clear();
      for (const auto& s : j.at("subspaces")) {
        if (!s.is_array() || s.size() != 2) bad_config("each subspace is a pair [l1, l2]");
        c.subspaces.emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
      }
    }
    if (j.contains("spectrum")) {
      const json& s = j.at("spectrum");
      check_keys(s, {"model", "ell0", "cutoff", "coefficients"}, "spectrum");
      read_if(s, "cutoff", c.cutoff);
      const std::string model = s.value("model", std::string("exponential"));
      if (model == "uniform") {
        c.spectrum = spectrum_model::Uniform{};
      } else if (model == "exponential") {
        c.spectrum = spectrum_model::Exponential{s.value("ell0", 2.0)};
      } else if (model == "list") {
        spectrum_model::UserList list{s.at("coefficients").get<std::vector<double>>()};
        if (!s.contains("cutoff")) c.cutoff = static_cast<int>(list.coefficients.size()) - 1;
        c.spectrum = std::move(list);
      } else {
        bad_config("unknown spectrum model '" + model + "'");
      }
    }
    read_if(j, "efficiency_base", c.efficiency_base);
    if (j.contains("hwp1_angle")) {
      if (j.at("hwp1_angle").is_null())
        c.hwp1_angle.reset();
      else
        c.hwp1_angle = j.at("hwp1_angle").get<double>();
    }
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      check_keys(n, {"kind", "p", "rate"}, "noise");
      const std::string kind = n.value("kind", std::string("none"));
      c.noise = make_noise(kind, kind == "background" ? n.value("rate", 0.0) : n.value("p", 1.0));
    }
    if (j.contains("phases")) {
      const json& p = j.at("phases");
      check_keys(p, {"chi", "extra"}, "phases");
      read_if(p, "chi", c.chi);
      read_if(p, "extra", c.extra_phase);
    }
    read_if(j, "n0", c.n0);
    if (j.contains("sampling")) {
      const std::string s = j.at("sampling").get<std::string>();
      if (s == "poisson")
        c.sampling = Sampling::Poisson;
      else if (s == "expected")
        c.sampling = Sampling::Expected;
      else
        bad_config("sampling must be 'poisson' or 'expected'");
    }
    read_if(j, "seed", c.seed);
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      check_keys(g, {"n", "extent", "waist"}, "grid");
      read_if(g, "n", c.grid.n);
      read_if(g, "extent", c.grid.extent);
      read_if(g, "waist", c.waist);
    }
    if (j.contains("rotation")) {
      const json& r = j.at("rotation");
      check_keys(r, {"plate", "angle"}, "rotation");
      const std::string plate = r.value("plate", std::string("none"));
      if (plate == "none")
        c.rotation.plate = PolarizationRotation::Plate::None;
      else if (plate == "hwp")
        c.rotation.plate = PolarizationRotation::Plate::Half;
      else if (plate == "qwp")
        c.rotation.plate = PolarizationRotation::Plate::Quarter;
      else
        bad_config("rotation plate must be none, hwp or qwp");
      read_if(r, "angle", c.rotation.angle);
    }
    if (j.contains("bell")) {
      const json& b = j.at("bell");
      check_keys(b, {"theta_a", "points", "chsh"}, "bell");
      read_if(b, "theta_a", c.bell_theta_a);
      read_if(b, "points", c.bell_points);
      if (b.contains("chsh")) {
        const json& a = b.at("chsh");
        check_keys(a, {"a", "a_prime", "b", "b_prime"}, "bell.chsh");
        read_if(a, "a", c.chsh.a);
        read_if(a, "a_prime", c.chsh.a_prime);
        read_if(a, "b", c.chsh.b);
        read_if(a, "b_prime", c.chsh.b_prime);
      }
    }
    read_if(j, "restarts", c.restarts);
    read_if(j, "jobs", c.jobs);
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
  } catch (const json::exception& e) {
    bad_config(e.what());
  }
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["subspaces"] = json::array();
  for (const auto& [l1, l2] : c.subspaces) j["subspaces"].push_back({l1, l2});
  json spectrum{{"cutoff", c.cutoff}};
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, spectrum_model::Uniform>) {
          spectrum["model"] = "uniform";
        } else if constexpr (std::is_same_v<M, spectrum_model::Exponential>) {
          spectrum["model"] = "exponential";
          spectrum["ell0"] = m.ell0;
        } else {
          spectrum["model"] = "list";
          spectrum["coefficients"] = m.coefficients;
        }
      },
      c.spectrum);
  j["spectrum"] = spectrum;
  j["efficiency_base"] = c.efficiency_base;
  j["hwp1_angle"] = c.hwp1_angle ? json(*c.hwp1_angle) : json(nullptr);
  j["noise"] = {{"kind", noise_name(c.noise.kind)}, {"p", c.noise.p}, {"rate", c.noise.rate}};
  j["phases"] = {{"chi", c.chi}, {"extra", c.extra_phase}};
  j["n0"] = c.n0;
  j["sampling"] = c.sampling == Sampling::Poisson ? "poisson" : "expected";
  j["seed"] = c.seed;
  j["grid"] = {{"n", c.grid.n}, {"extent", c.grid.extent}, {"waist", c.waist}};
  const char* plate = c.rotation.plate == PolarizationRotation::Plate::Half      ? "hwp"
                      : c.rotation.plate == PolarizationRotation::Plate::Quarter ? "qwp"
                                                                                 : "none";
  j["rotation"] = {{"plate", plate}, {"angle", c.rotation.angle}};
  j["bell"] = {{"theta_a", c.bell_theta_a},
               {"points", c.bell_points},
               {"chsh", {{"a", c.chsh.a}, {"a_prime", c.chsh.a_prime}, {"b", c.chsh.b}, {"b_prime", c.chsh.b_prime}}}};
  j["restarts"] = c.restarts;
  j["jobs"] = c.jobs;
  j["output"] = c.output.string();
  return j;
}

fs::path output_directory(const ExperimentConfig& config) {
  if (!config.output.empty()) return config.output;
  if (const char* env = std::getenv("QSKY_OUT_DIR"); env && *env) return env;
  return "qsky_out";
}

NoiseChannel parse_noise(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (kind == "none" && colon == std::string::npos) return NoiseChannel::none();
  if (colon == std::string::npos) bad_config("noise expects KIND:P, got '" + text + "'");
  try {
    return make_noise(kind, std::stod(text.substr(colon + 1)));
  } catch (const std::logic_error&) {
    bad_config("noise expects KIND:P, got '" + text + "'");
  }
}

GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  char tail;
  if (std::sscanf(text.c_str(), "%d:%lf%c", &g.n, &g.extent, &tail) != 2)
    bad_config("grid expects N:EXTENT, got '" + text + "'");
  return g;
}

Subspace parse_subspace(const std::string& text) {
  Subspace s;
  char tail;
  if (std::sscanf(text.c_str(), "%d,%d%c", &s.first, &s.second, &tail) != 2)
    bad_config("subspace expects L1,L2, got '" + text + "'");
  return s;
}

std::string subspace_stem(const std::string& stem, const Subspace& s) {
  return stem + "_" + std::to_string(s.first) + "_" + std::to_string(s.second);
}

std::uint32_t file_crc32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  uLong crc = crc32(0L, Z_NULL, 0);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    const auto got = in.gcount();
    if (got > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(got));
  }
  return static_cast<std::uint32_t>(crc);
}

// --- runs -------------------------------------------------------------------

namespace {

enum Stream : std::int64_t { TomographyCounts = 1, Restarts = 2, BellCurve = 3, ChshCounts = 4 };

std::uint64_t stream_seed(const ExperimentConfig& c, Stream stream, const Subspace& s) {
  return derive_seed(c.seed, {stream, s.first, s.second});
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(dir_ / name);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    body(out);
    out.close();
    if (!out) throw std::runtime_error("write failed for " + (dir_ / name).string());
    names_.push_back(name);
  }

  std::vector<std::string>& names() { return names_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

// Runs fn(i) for i in [0, count) on `jobs` workers (0: hardware concurrency).
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers == 0) return;
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) fn(i);
  };
  std::vector<std::jthread> pool;
  for (std::size_t k = 1; k < workers; ++k) pool.emplace_back(drain);
  drain();
}

template <typename Row, typename Body>
RunResult<Row> run_subspaces(const ExperimentConfig& config, Body body) {
  config.validate();
  RunResult<Row> result;
  result.directory = output_directory(config);
  fs::create_directories(result.directory);
  const std::size_t count = config.subspaces.size();
  result.rows.resize(count);
  std::vector<std::vector<std::string>> names(count);
  parallel_for(count, config.jobs, [&](std::size_t i) {
    Row& row = result.rows[i];
    row.subspace = config.subspaces[i];
    Artifacts files(result.directory);
    try {
      body(row, files);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    names[i] = std::move(files.names());
  });
  for (auto& n : names) result.artifacts.insert(result.artifacts.end(), n.begin(), n.end());
  return result;
}

void finish(const ExperimentConfig& config, const char* command, std::vector<std::string>& artifacts,
            const fs::path& dir) {
  std::sort(artifacts.begin(), artifacts.end());
  json manifest;
  manifest["command"] = command;
  manifest["config"] = to_json(config);
  manifest["seed"] = config.seed;
  json files = json::object();
  for (const auto& name : artifacts) {
    char crc[9];
    std::snprintf(crc, sizeof crc, "%08x", file_crc32(dir / name));
    files[name] = {{"crc32", crc}, {"bytes", fs::file_size(dir / name)}};
  }
  manifest["artifacts"] = files;
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
}

const char* status(const std::string& error) { return error.empty() ? "ok" : "failed"; }

std::string field_or_nan(bool ok, double v) { return ok ? num(v) : "nan"; }

TableRow metrics_row(const Subspace& s, const ReconstructionResult& r) {
  TableRow row;
  row.subspace = s;
  row.fidelity = r.fidelity;
  row.purity = r.purity;
  row.concurrence = r.concurrence;
  row.relative_phase = r.relative_phase;
  row.converged = r.converged;
  row.n_predicted = predict_topology(s.first, s.second).skyrmion_number;
  return row;
}

void add_topology(TableRow& row, const ExperimentConfig& config, const DensityMatrix& rho) {
  const StokesField field = stokes_field(rho, row.subspace.first, row.subspace.second, config.waist, config.grid);
  row.n_measured = skyrmion_number(field);
  row.n_raw = raw_skyrmion_number(field);
}

MleOptions mle_options(const ExperimentConfig& config, const Subspace& s) {
  MleOptions o;
  o.target = ideal_hybrid_state(config.chi + config.extra_phase);
  o.restarts = config.restarts;
  o.seed = stream_seed(config, Restarts, s);
  return o;
}

void write_table(std::ostream& os, const std::vector<TableRow>& rows) {
  os << "l1\tl2\tF\tgamma\tC\tphase\tN_predicted\tN_measured\tN_raw\tstatus\n";
  for (const auto& r : rows) {
    const bool ok = r.error.empty();
    os << r.subspace.first << '\t' << r.subspace.second << '\t' << field_or_nan(ok, r.fidelity) << '\t'
       << field_or_nan(ok, r.purity) << '\t' << field_or_nan(ok, r.concurrence) << '\t'
       << field_or_nan(ok && r.relative_phase.has_value(), r.relative_phase.value_or(0.0)) << '\t'
       << predict_topology(r.subspace.first, r.subspace.second).skyrmion_number << '\t'
       << field_or_nan(ok, r.n_measured) << '\t' << field_or_nan(ok, r.n_raw) << '\t' << status(r.error) << '\n';
  }
}

void write_table_summary(std::ostream& os, const std::vector<TableRow>& rows) {
  char line[200];
  std::snprintf(line, sizeof line, "%4s %4s %8s %8s %8s %6s %10s\n", "l1", "l2", "F", "gamma", "C", "N", "N_meas");
  os << line;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::snprintf(line, sizeof line, "%4d %4d  ", r.subspace.first, r.subspace.second);
      os << line << "failed: " << r.error << '\n';
      continue;
    }
    std::snprintf(line, sizeof line, "%4d %4d %8.4f %8.4f %8.4f %6d %10.4f\n", r.subspace.first, r.subspace.second,
                  r.fidelity, r.purity, r.concurrence, r.n_predicted, r.n_measured);
    os << line;
  }
}

}  // namespace

RunResult<TableRow> run_table(const ExperimentConfig& config) {
  auto result = run_subspaces<TableRow>(config, [&](TableRow& row, Artifacts& files) {
    const Subspace s = row.subspace;
    const DensityMatrix rho = config.state(s);
    const CountTable counts = simulate_tomography(rho, config.n0, stream_seed(config, TomographyCounts, s),
                                                  config.noise.accidental_rate(), config.sampling);
    files.write(subspace_stem("tomo", s) + ".counts", [&](std::ostream& os) { write_count_table(os, counts); });
    const ReconstructionResult r = mle_reconstruct(counts, mle_options(config, s));
    files.write(subspace_stem("tomo", s) + ".rho", [&](std::ostream& os) { write_reconstruction(os, r); });
    row = metrics_row(s, r);
    add_topology(row, config, r.rho);
  });
  Artifacts files(result.directory);
  files.write("table.tsv", [&](std::ostream& os) { write_table(os, result.rows); });
  files.write("table.txt", [&](std::ostream& os) { write_table_summary(os, result.rows); });
  result.artifacts.insert(result.artifacts.end(), files.names().begin(), files.names().end());
  finish(config, "table", result.artifacts, result.directory);
  return result;
}

RunResult<BellRow> run_bell(const ExperimentConfig& config) {
  auto result = run_subspaces<BellRow>(config, [&](BellRow& row, Artifacts& files) {
    const Subspace s = row.subspace;
    const DensityMatrix rho = config.state(s);
    const double acc = config.noise.accidental_rate();
    const CountTable curve = coincidence_curve(rho, config.bell_theta_a, uniform_angles(config.bell_points), config.n0,
                                               stream_seed(config, BellCurve, s), acc, config.sampling);
    files.write(subspace_stem("bell", s) + ".curve", [&](std::ostream& os) { write_count_table(os, curve); });
    const CountTable chsh =
        sample_chsh(rho, config.n0, stream_seed(config, ChshCounts, s), config.chsh, acc, config.sampling);
    files.write(subspace_stem("bell", s) + ".chsh", [&](std::ostream& os) { write_count_table(os, chsh); });
    row.visibility = visibility(curve);
    const ChshEstimate est = chsh_from_counts(chsh, config.chsh);
    row.s = est.s;
    row.sigma = est.sigma;
  });
  Artifacts files(result.directory);
  files.write("bell.tsv", [&](std::ostream& os) {
    os << "l1\tl2\tV\tS\tsigma_S\tstatus\n";
    for (const auto& r : result.rows) {
      const bool ok = r.error.empty();
      os << r.subspace.first << '\t' << r.subspace.second << '\t' << field_or_nan(ok, r.visibility) << '\t'
         << field_or_nan(ok, r.s) << '\t' << field_or_nan(ok, r.sigma) << '\t' << status(r.error) << '\n';
    }
  });
  result.artifacts.insert(result.artifacts.end(), files.names().begin(), files.names().end());
  finish(config, "bell", result.artifacts, result.directory);
  return result;
}

RunResult<TextureRow> run_texture(const ExperimentConfig& config) {
  auto result = run_subspaces<TextureRow>(config, [&](TextureRow& row, Artifacts& files) {
    const Subspace s = row.subspace;
    DensityMatrix rho = config.state(s);
    if (const auto u = config.rotation.jones()) rho = basis_rotation(rho, *u);
    const StokesField field = stokes_field(rho, s.first, s.second, config.waist, config.grid);
    const std::string stem = subspace_stem("texture", s);
    files.write(stem + ".field", [&](std::ostream& os) { write_stokes_field(os, field); });
    row.report = analyze_topology(field);
    const StokesPhases phases = stokes_phases(field);
    files.write(stem + ".phi_xy", [&](std::ostream& os) { write_phase_grid(os, field, phases.xy, "phi_xy"); });
    files.write(stem + ".phi_yz", [&](std::ostream& os) { write_phase_grid(os, field, phases.yz, "phi_yz"); });
    files.write(stem + ".phi_zx", [&](std::ostream& os) { write_phase_grid(os, field, phases.zx, "phi_zx"); });
    files.write(stem + ".report", [&](std::ostream& os) { write_topology_report(os, row.report); });
  });
  Artifacts files(result.directory);
  files.write("texture.tsv", [&](std::ostream& os) {
    os << "l1\tl2\tN_predicted\tN\tN_raw\tclosed\tmasked\tstatus\n";
    for (const auto& r : result.rows) {
      const bool ok = r.error.empty();
      os << r.subspace.first << '\t' << r.subspace.second << '\t'
         << predict_topology(r.subspace.first, r.subspace.second).skyrmion_number << '\t'
         << field_or_nan(ok, r.report.skyrmion_number) << '\t' << field_or_nan(ok, r.report.raw_skyrmion_number)
         << '\t' << (ok ? std::to_string(r.report.closed) : "nan") << '\t'
         << (ok ? std::to_string(r.report.masked) : "nan") << '\t' << status(r.error) << '\n';
    }
  });
  result.artifacts.insert(result.artifacts.end(), files.names().begin(), files.names().end());
  finish(config, "texture", result.artifacts, result.directory);
  return result;
}

RunResult<TableRow> run_tomo(const ExperimentConfig& config, const fs::path& counts_path) {
  config.validate();
  std::ifstream in(counts_path);
  if (!in) throw Error(Errc::BadFormat, "cannot open " + counts_path.string());
  const CountTable counts = read_count_table(in);

  RunResult<TableRow> result;
  result.directory = output_directory(config);
  fs::create_directories(result.directory);
  const Subspace s = config.subspaces.size() == 1 ? config.subspaces.front() : Subspace{0, 0};
  const ReconstructionResult r = mle_reconstruct(counts, mle_options(config, s));
  TableRow row = metrics_row(s, r);
  if (config.subspaces.size() == 1) add_topology(row, config, r.rho);
  result.rows.push_back(row);

  Artifacts files(result.directory);
  const std::string stem = counts_path.stem().string();
  files.write(stem + ".rho", [&](std::ostream& os) { write_reconstruction(os, r); });
  result.artifacts = files.names();
  finish(config, "tomo", result.artifacts, result.directory);
  return result;
}

}  // namespace qsky
