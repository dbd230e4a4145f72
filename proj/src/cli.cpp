// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/cli.hpp"

#include "hyperg/errors.hpp"
#include "hyperg/format.hpp"
#include "hyperg/glm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <sstream>

#ifndef HYPERG_VERSION
#define HYPERG_VERSION "0.0.0"
#endif

namespace hyperg {

namespace {

// Comma split honoring double quotes (FP model indices contain commas).
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.emplace_back();
    } else if (c != '\r') {
      out.back().push_back(c);
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  return s.find(',') == std::string::npos ? s : '"' + s + '"';
}

}  // namespace

void write_models_csv(std::ostream& os, const ModelPosterior& mp) {
  os << "model,log_marglik,log_prior,post_prob,fell_back,visits\n";
  for (std::size_t i = 0; i < mp.entries().size(); ++i) {
    const ModelEntry& e = mp.entries()[i];
    os << csv_field(e.model.to_string()) << ',' << format_double(e.log_marglik) << ','
       << format_double(e.log_prior) << ',' << format_double(mp.probability(i)) << ','
       << (e.fell_back ? 1 : 0) << ',' << e.visits << '\n';
  }
}

ModelPosterior read_models_csv(std::istream& is, SearchMethod method) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("models file is empty");
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 3 || header[0] != "model" || header[1] != "log_marglik" ||
      header[2] != "log_prior") {
    throw DataError("models file: unexpected header '" + line + "'");
  }
  auto col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int fb_col = col("fell_back");
  const int visits_col = col("visits");
  std::vector<ModelEntry> entries;
  long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != header.size()) {
      throw DataError("models file line " + std::to_string(line_no) + ": wrong field count");
    }
    try {
      ModelEntry e{ModelIndex::parse(f[0]), parse_double(f[1]), parse_double(f[2]),
                   fb_col >= 0 && f[static_cast<std::size_t>(fb_col)] == "1", 0};
      if (visits_col >= 0) e.visits = std::stol(f[static_cast<std::size_t>(visits_col)]);
      entries.push_back(std::move(e));
    } catch (const Error& err) {
      throw DataError("models file line " + std::to_string(line_no) + ": " + err.what());
    } catch (const std::exception&) {
      throw DataError("models file line " + std::to_string(line_no) + ": bad visits count");
    }
  }
  if (entries.empty()) throw DataError("models file has no models");
  return ModelPosterior(std::move(entries), method);
}

void write_inclusion_csv(std::ostream& os, const ModelPosterior& mp,
                         const std::vector<std::string>& names) {
  const std::vector<double> inc = inclusion_probabilities(mp);
  os << "covariate,inclusion_prob\n";
  for (std::size_t k = 0; k < inc.size(); ++k) {
    const std::string name = k < names.size() && !names[k].empty() ? names[k] : "x" + std::to_string(k + 1);
    os << name << ',' << format_double(inc[k]) << '\n';
  }
}

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

nlohmann::ordered_json failures_json(const std::vector<ModelFailure>& failures) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& f : failures) arr.push_back({{"model", f.model.to_string()}, {"error", f.error}});
  return arr;
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    std::chrono::steady_clock::time_point start,
                    nlohmann::ordered_json summary, nlohmann::ordered_json failures) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["version"] = HYPERG_VERSION;
  nlohmann::ordered_json echo;
  for (const auto& [k, v] : cfg.echo()) echo[k] = v;
  m["config"] = echo;
  m["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m["failures"] = std::move(failures);
  m["summary"] = std::move(summary);
  auto os = open_out(cfg.out_dir / "manifest.json");
  os << m.dump(2) << '\n';
}

Dataset load_dataset(const RunConfig& cfg) {
  Dataset ds = ingest_csv(cfg);
  if (cfg.shift_to_positive) return ds.shifted_to_positive();
  if (cfg.space == SpaceKind::fractional_polynomial) {
    for (Eigen::Index k = 0; k < ds.x_raw().cols(); ++k) {
      if (ds.x_raw().col(k).minCoeff() <= 0.0) {
        throw DataError("covariate '" + ds.covariate_names()[static_cast<std::size_t>(k)] +
                        "' has nonpositive values; fractional polynomials need x > 0 (set shift_to_positive = true)");
      }
    }
  }
  return ds;
}

nlohmann::ordered_json posterior_summary(const ModelPosterior& mp) {
  const MapMedian mm = map_and_median_models(mp);
  nlohmann::ordered_json s;
  s["models"] = mp.entries().size();
  s["map_model"] = mm.map.to_string();
  s["median_model"] = mm.median.to_string();
  s["inclusion"] = inclusion_probabilities(mp);
  return s;
}

void write_sweep(const RunConfig& cfg, const ModelPosterior& mp, const Dataset& ds) {
  {
    auto os = open_out(cfg.out_dir / "models.csv");
    write_models_csv(os, mp);
  }
  auto os = open_out(cfg.out_dir / "inclusion.csv");
  write_inclusion_csv(os, mp, ds.covariate_names());
}

int cmd_enumerate(const RunConfig& cfg, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Dataset ds = load_dataset(cfg);
  const ModelEvaluator ev(ds, make_evidence_spec(cfg, ds));
  const ModelPosterior mp = exhaustive_posterior(ev, cfg.space, cfg.threads);
  write_sweep(cfg, mp, ds);
  write_manifest(cfg, "enumerate", start, posterior_summary(mp), failures_json(mp.failures()));
  out << "evaluated " << mp.entries().size() + mp.failures().size() << " models, "
      << mp.failures().size() << " failed; MAP " << map_and_median_models(mp).map.to_string() << '\n';
  return mp.failures().empty() ? 0 : 3;
}

int cmd_search(const RunConfig& cfg, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Dataset ds = load_dataset(cfg);
  const ModelEvaluator ev(ds, make_evidence_spec(cfg, ds));
  const Mc3Result r = mc3_search(ev, cfg.space, cfg.iterations, cfg.seed);
  write_sweep(cfg, r.posterior, ds);
  nlohmann::ordered_json s = posterior_summary(r.posterior);
  s["iterations"] = r.iterations;
  s["acceptance_rate"] = r.acceptance_rate;
  write_manifest(cfg, "search", start, std::move(s), failures_json(r.posterior.failures()));
  out << "visited " << r.posterior.visited_count() << " models, " << r.posterior.failures().size()
      << " failed; MAP " << map_and_median_models(r.posterior).map.to_string() << '\n';
  return r.posterior.failures().empty() ? 0 : 3;
}

int cmd_sample(const RunConfig& cfg, const std::string& model_text, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg.criterion == Criterion::aic || cfg.criterion == Criterion::bic) {
    throw ConfigError("sample needs criterion bayes or eb");
  }
  const ModelIndex model = [&] {
    try {
      return ModelIndex::parse(model_text);
    } catch (const Error& e) {
      throw ConfigError(std::string("--model: ") + e.what());
    }
  }();
  if (model.kind() != cfg.space) throw ConfigError("--model does not match the configured space");
  const Dataset ds = load_dataset(cfg);
  if (model.num_covariates() != ds.m()) {
    throw ConfigError("--model has " + std::to_string(model.num_covariates()) + " covariates, data has " +
                      std::to_string(ds.m()));
  }
  if (model.size() == 0) {
    throw ConfigError(
        "the null model has no g to sample; its evidence is a one-dimensional integral "
        "reported by enumerate");
  }
  const EvidenceSpec spec = make_evidence_spec(cfg, ds);
  const GlmProblem problem(ds, build_design(ds, model));
  const HyperPrior hp = spec.prior ? *spec.prior : HyperPrior::empirical_bayes();
  const SamplerSetup setup = prepare_sampler(problem, hp, spec.ila);
  ChainConfig chain = cfg.chain;
  chain.seed = cfg.seed;
  const PosteriorDraws draws = run_chain(problem, setup, chain);
  {
    auto os = open_out(cfg.out_dir / "draws.csv");
    write_draws_csv(os, draws);
  }
  nlohmann::ordered_json s;
  s["model"] = model.to_string();
  s["acceptance_rate"] = draws.acceptance_rate;
  s["failed_steps"] = draws.failed_steps;
  s["z_star"] = setup.z_star;
  if (!setup.empirical_bayes()) {
    const ChibJeliazkov cj = chib_jeliazkov(problem, setup, draws, chain);
    s["log_evidence_ila"] = setup.ila.log_evidence;
    s["log_evidence_cj"] = cj.log_evidence;
    s["cj_standard_error"] = cj.standard_error;
    out << "ILA " << format_double(setup.ila.log_evidence) << "  CJ " << format_double(cj.log_evidence)
        << " (se " << format_double(cj.standard_error) << ")\n";
  }
  out << "acceptance " << format_double(draws.acceptance_rate) << '\n';
  write_manifest(cfg, "sample", start, std::move(s), nlohmann::ordered_json::array());
  return draws.failed_steps == 0 ? 0 : 3;
}

int cmd_report(const RunConfig& cfg, const std::string& from, bool fit, bool curves, bool gpost,
               std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path src = from.empty() ? cfg.out_dir / "models.csv" : std::filesystem::path(from);
  std::ifstream is(src, std::ios::binary);
  if (!is) throw DataError("cannot open " + src.string());
  // Slurp first: src may be the file about to be rewritten.
  std::stringstream buf;
  buf << is.rdbuf();
  is.close();
  ModelPosterior mp = read_models_csv(buf, SearchMethod::exhaustive);
  bool visited = false;
  for (const auto& e : mp.entries()) visited = visited || e.visits > 0;
  if (visited) {
    std::stringstream again(buf.str());
    mp = read_models_csv(again, SearchMethod::mc3);
  }
  const Dataset ds = load_dataset(cfg);
  if (mp.num_covariates() != ds.m() || mp.kind() != cfg.space) {
    throw DataError(src.string() + " does not match the configured data and space");
  }
  write_sweep(cfg, mp, ds);
  nlohmann::ordered_json s = posterior_summary(mp);
  const ModelEvaluator ev(ds, make_evidence_spec(cfg, ds));
  ChainConfig chain = cfg.chain;
  chain.seed = cfg.seed;
  if (fit) {
    const AveragedFit af = model_average_fit(ev, mp, cfg.fit_top_k, chain);
    auto os = open_out(cfg.out_dir / "fit.csv");
    os << "row,y,fitted\n";
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      os << i + 1 << ',' << format_double(ds.y()[i]) << ',' << format_double(af.fitted[i]) << '\n';
    }
    s["fit_models"] = af.models.size();
  }
  if (curves) {
    if (cfg.space != SpaceKind::fractional_polynomial) throw ConfigError("--curves needs space = fp");
    const ModelIndex map = map_and_median_models(mp).map;
    nlohmann::ordered_json written = nlohmann::ordered_json::array();
    for (int k = 0; k < ds.m(); ++k) {
      if (!map.includes(k)) continue;
      const Eigen::VectorXd orig = ds.x_raw().col(k).array() - ds.covariate_shift()[k];
      const Eigen::VectorXd grid =
          Eigen::VectorXd::LinSpaced(cfg.curve_points, orig.minCoeff(), orig.maxCoeff());
      const EffectCurve c = fp_effect_curve(ev, mp, k, grid, chain);
      const std::string name = "curve_" + std::to_string(k + 1) + ".csv";
      auto os = open_out(cfg.out_dir / name);
      os << "x,mean,lower,upper,simultaneous_lower,simultaneous_upper\n";
      for (Eigen::Index i = 0; i < c.x.size(); ++i) {
        os << format_double(c.x[i]) << ',' << format_double(c.mean[i]) << ',' << format_double(c.lower[i])
           << ',' << format_double(c.upper[i]) << ',' << format_double(c.simultaneous_lower[i]) << ','
           << format_double(c.simultaneous_upper[i]) << '\n';
      }
      written.push_back(name);
    }
    s["curves"] = written;
  }
  if (gpost) {
    const GPosteriorSummary g = g_posterior_summary(ev, mp, cfg.g_top_k, chain, cfg.threads);
    auto os = open_out(cfg.out_dir / "gposterior.csv");
    os << "z,weight\n";
    for (std::size_t i = 0; i < g.z.size(); ++i) {
      os << format_double(g.z[i]) << ',' << format_double(g.weights[i]) << '\n';
    }
    s["mean_g"] = g.mean_g;
    s["prob_g_below_n"] = g.prob_g_below_n;
    s["mean_z"] = g.mean_z;
    s["g_models"] = g.models.size();
    out << "E(g|y) " << format_double(g.mean_g) << "  P(g<n|y) " << format_double(g.prob_g_below_n) << '\n';
  }
  write_manifest(cfg, "report", start, std::move(s), nlohmann::ordered_json::array());
  out << "report of " << mp.entries().size() << " models written to " << cfg.out_dir.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian model selection for GLMs under hyper-g priors", "hyperg"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("--config", flags.config, "configuration file")->required();
  app.add_option("--seed", flags.seed, "random seed (overrides config)");
  app.add_option("--threads", flags.threads, "worker thread cap (overrides config)");
  app.add_option("--out", flags.out, "output directory (overrides config)");
  app.set_version_flag("--version", HYPERG_VERSION);

  auto* enumerate = app.add_subcommand("enumerate", "exhaustive sweep of the model space");
  auto* search = app.add_subcommand("search", "MC3 search of the model space");
  auto* sample = app.add_subcommand("sample", "posterior draws and Chib-Jeliazkov estimate for one model");
  std::string model_text;
  sample->add_option("--model", model_text, "model index, e.g. 1100110 or x1:();x2:(1)")->required();
  auto* report = app.add_subcommand("report", "summaries from a saved sweep");
  std::string from;
  bool fit = false, curves = false, gpost = false;
  report->add_option("--from", from, "saved models.csv (default: <out>/models.csv)");
  report->add_flag("--fit", fit, "model-averaged fitted values");
  report->add_flag("--curves", curves, "FP effect curves of MAP covariates");
  report->add_flag("--gposterior", gpost, "pooled posterior of g");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg = load_config(flags.config);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) {
      if (*flags.threads < 1) throw ConfigError("--threads must be at least 1");
      cfg.threads = *flags.threads;
    }
    if (flags.out) cfg.out_dir = *flags.out;
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + cfg.out_dir.string());

    if (enumerate->parsed()) return cmd_enumerate(cfg, out);
    if (search->parsed()) return cmd_search(cfg, out);
    if (sample->parsed()) return cmd_sample(cfg, model_text, out);
    return cmd_report(cfg, from, fit, curves, gpost, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const UnsupportedError& e) {
    err << "unsupported: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace hyperg
