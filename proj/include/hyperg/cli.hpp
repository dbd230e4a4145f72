// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "hyperg/dataset.hpp"
#include "hyperg/sampler.hpp"
#include "hyperg/search.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hyperg {

/// Resolved settings of one run. Keys and defaults are listed in
/// docs/config.md.
struct RunConfig {
  std::filesystem::path data_path;
  std::string response;
  std::vector<std::string> covariates;  // empty: every other column
  std::string weights_column;           // empty: unit weights

  std::string family = "gaussian";
  std::string link = "identity";
  double phi = 1.0;

  std::string hyperprior = "F1";  // F1, F2, F3, ig, iig
  double prior_a = 0.0;
  double prior_b = 0.0;
  Criterion criterion = Criterion::bayes;

  SpaceKind space = SpaceKind::variable_selection;
  long iterations = 100000;
  std::uint64_t seed = 1;
  std::optional<int> order;  // default: 6 for canonical links, else 2
  int nodes = 20;
  double bracket_cap = 30.0;
  int threads = 1;
  std::filesystem::path out_dir = ".";
  bool shift_to_positive = false;  // add (1 - min) to covariates with a nonpositive entry

  ChainConfig chain;
  int fit_top_k = 20;
  int g_top_k = 1000;
  int curve_points = 101;

  /// Key/value echo that load_config_map accepts back unchanged.
  std::map<std::string, std::string> echo() const;
};

/// Reads an INI-style file (sections optional, ';' or '#' comments). Relative
/// data paths are resolved against the file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig load_config_map(const std::map<std::string, std::string>& kv,
                          const std::filesystem::path& base_dir = {});

/// Reads the CSV named in the config into a Dataset. Throws DataError naming
/// the row and column of the first unusable cell.
Dataset ingest_csv(const RunConfig& cfg);

HyperPrior make_hyperprior(const RunConfig& cfg, double n);
EvidenceSpec make_evidence_spec(const RunConfig& cfg, const Dataset& ds);

// Report files.
void write_models_csv(std::ostream& os, const ModelPosterior& mp);
ModelPosterior read_models_csv(std::istream& is, SearchMethod method);
void write_inclusion_csv(std::ostream& os, const ModelPosterior& mp,
                         const std::vector<std::string>& names);

/// Entry point of the command-line tool. Returns the process exit code:
/// 0 success, 1 usage or configuration error, 2 data error, 3 numerical
/// failure (including runs where some models failed).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hyperg
