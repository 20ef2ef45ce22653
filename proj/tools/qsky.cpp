// qsky: command-line front end for the hybrid-entanglement twin.
//
//   qsky table   [flags]          tomography + metrics + topology per subspace
//   qsky bell    [flags]          coincidence curves, visibility and CHSH
//   qsky texture [flags]          Stokes fields, phase grids, skyrmion numbers
//   qsky tomo COUNTS [flags]      one reconstruction from a count-table file

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qsky/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> subspaces;
  std::string noise;
  std::string grid;
  std::optional<double> n0;
  std::optional<int> jobs;
  std::string sampling;
};

void add_common(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  cmd.add_option("--seed", o.seed, "root seed");
  cmd.add_option("--out", o.out, "output directory (default $QSKY_OUT_DIR or ./qsky_out)");
  cmd.add_option("--subspace", o.subspaces, "L1,L2 (repeatable; replaces the configured list)");
  cmd.add_option("--noise", o.noise, "KIND:P with KIND in none, isotropic, dephasing, background");
  cmd.add_option("--grid", o.grid, "N:EXTENT texture grid");
  cmd.add_option("--n0", o.n0, "expected counts scale");
  cmd.add_option("--jobs", o.jobs, "worker threads (0: all cores)");
  cmd.add_option("--sampling", o.sampling, "poisson or expected");
}

qsky::ExperimentConfig build_config(const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw qsky::Error(qsky::Errc::BadConfig, o.config_path + ": " + e.what());
    }
  }
  if (o.seed) j["seed"] = *o.seed;
  if (!o.out.empty()) j["output"] = o.out;
  if (o.n0) j["n0"] = *o.n0;
  if (o.jobs) j["jobs"] = *o.jobs;
  if (!o.sampling.empty()) j["sampling"] = o.sampling;
  qsky::ExperimentConfig c = qsky::config_from_json(j);
  if (!o.subspaces.empty()) {
    c.subspaces.clear();
    for (const auto& s : o.subspaces) c.subspaces.push_back(qsky::parse_subspace(s));
  }
  if (!o.noise.empty()) c.noise = qsky::parse_noise(o.noise);
  if (!o.grid.empty()) {
    const qsky::GridSpec g = qsky::parse_grid(o.grid);
    c.grid.n = g.n;
    c.grid.extent = g.extent;
  }
  c.validate();
  return c;
}

template <typename Row>
int report_failures(const qsky::RunResult<Row>& r) {
  const auto failed = r.failures();
  for (const Row* row : failed)
    std::cerr << "subspace (" << row->subspace.first << ", " << row->subspace.second << ") failed: " << row->error
              << '\n';
  std::cout << "wrote " << r.artifacts.size() << (r.artifacts.size() == 1 ? " file" : " files") << " and manifest.json to "
            << r.directory.string() << '\n';
  return failed.empty() ? 0 : 1;
}

void print_table(const std::vector<qsky::TableRow>& rows) {
  std::printf("%4s %4s %8s %8s %8s %9s %4s %9s\n", "l1", "l2", "F", "gamma", "C", "phase", "N", "N_meas");
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    std::printf("%4d %4d %8.4f %8.4f %8.4f %9.4f %4d %9.4f\n", r.subspace.first, r.subspace.second, r.fidelity,
                r.purity, r.concurrence, r.relative_phase.value_or(0.0), r.n_predicted, r.n_measured);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital twin of a reconfigurable hybrid polarisation-OAM entanglement circuit"};
  app.require_subcommand(1);
  Overrides o;
  std::string counts_path;

  auto* table = app.add_subcommand("table", "per-subspace tomography, metrics and skyrmion number");
  auto* bell = app.add_subcommand("bell", "coincidence curves, visibility and CHSH S");
  auto* texture = app.add_subcommand("texture", "Stokes fields, Stokes phases and topology reports");
  auto* tomo = app.add_subcommand("tomo", "reconstruct one count-table file");
  tomo->add_option("counts", counts_path, "count-table file")->required()->check(CLI::ExistingFile);
  for (auto* cmd : {table, bell, texture, tomo}) add_common(*cmd, o);

  CLI11_PARSE(app, argc, argv);

  try {
    const qsky::ExperimentConfig config = build_config(o);
    if (table->parsed()) {
      const auto r = qsky::run_table(config);
      print_table(r.rows);
      return report_failures(r);
    }
    if (bell->parsed()) {
      const auto r = qsky::run_bell(config);
      std::printf("%4s %4s %8s %8s %8s\n", "l1", "l2", "V", "S", "sigma");
      for (const auto& row : r.rows)
        if (row.error.empty())
          std::printf("%4d %4d %8.4f %8.4f %8.4f\n", row.subspace.first, row.subspace.second, row.visibility, row.s,
                      row.sigma);
      return report_failures(r);
    }
    if (texture->parsed()) {
      const auto r = qsky::run_texture(config);
      std::printf("%4s %4s %4s %10s %10s\n", "l1", "l2", "N", "N_meas", "N_raw");
      for (const auto& row : r.rows)
        if (row.error.empty())
          std::printf("%4d %4d %4d %10.5f %10.5f\n", row.subspace.first, row.subspace.second,
                      row.report.predicted.skyrmion_number, row.report.skyrmion_number,
                      row.report.raw_skyrmion_number);
      return report_failures(r);
    }
    const auto r = qsky::run_tomo(config, counts_path);
    print_table(r.rows);
    return report_failures(r);
  } catch (const std::exception& e) {
    std::cerr << "qsky: " << e.what() << '\n';
    return 2;
  }
}
