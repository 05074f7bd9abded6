#include "fhmm/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <omp.h>

#include "CLI11.hpp"
#include "fhmm/errors.hpp"
#include "fhmm/posterior_io.hpp"

namespace fhmm::cli {

namespace fs = std::filesystem;

namespace {

Dataset load_data(const DataSettings& d) {
  if (!fs::exists(d.input)) throw DataError("input file not found: " + d.input.string());
  const ColumnSchema schema = d.schema ? ColumnSchema::from_mapping_file(*d.schema) : ColumnSchema{};
  Dataset ds = load_trajectories(d.input, schema);
  if (d.downsample > 1) {
    for (auto& traj : ds.trajectories) {
      try {
        traj = downsample(traj, d.downsample);
      } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
      }
    }
  }
  ds = filter_min_duration(std::move(ds), d.min_duration);
  if (ds.trajectories.empty())
    throw DataError("no trajectories of at least " + format_double(d.min_duration) + " s in " + d.input.string());
  return ds;
}

void make_dirs(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

struct LabelFile {
  std::vector<std::string> ids;
  std::map<std::string, StateChain> chains;
};

/// Any CSV whose first columns are traj_id,t,k_B,k_S (segmentation or truth).
LabelFile read_label_file(const fs::path& path, const JointStateSpace& space) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("traj_id,t,k_B,k_S", 0) != 0)
    throw SchemaError(path.string() + ": header must start with traj_id,t,k_B,k_S");
  LabelFile out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, t, kb, ks;
    std::getline(ss, id, ',');
    std::getline(ss, t, ',');
    std::getline(ss, kb, ',');
    std::getline(ss, ks, ',');
    int b = 0, s = 0;
    try {
      b = std::stoi(kb);
      s = std::stoi(ks);
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": labels must be integers");
    }
    if (b < 1 || b > space.regimes() || s < 1 || s > space.scenarios())
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": label outside the fitted state space");
    if (!out.chains.count(id)) out.ids.push_back(id);
    out.chains[id].push_back(space.index({b, s}));
  }
  return out;
}

void set_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

std::string join(const std::vector<int>& v, int offset) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i] + offset);
  return s;
}

double mean_of(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  return m / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

void cmd_fit(const RunConfig& config, std::ostream& log) {
  const FitSettings s = fit_settings(config);
  set_threads(s.threads);
  Dataset ds = fit_standardizer(load_data(s.data));
  const PreparedData data = PreparedData::from_dataset(ds);
  make_dirs(s.output);
  config.write(s.output / "config.resolved");

  RunMetadata meta;
  meta.k_b = s.space.regimes();
  meta.k_s = s.space.scenarios();
  meta.seed = s.seed;
  meta.chains = s.chains;
  meta.latent = to_string(s.options.latent);
  meta.adaptation = to_string(s.options.adaptation);
  meta.log_space_proposal = s.options.log_space_proposal;
  meta.mh_steps = s.options.mh_steps;
  meta.standardizer = data.standardizer;
  meta.hyper = s.hyper;
  write_run_metadata(meta, s.output / "run.json");

  log << "fit: " << data.trajectories() << " trajectories, " << data.total_steps() << " steps, K_B=" << meta.k_b
      << " K_S=" << meta.k_s << ", " << s.chains << " chain(s) x " << s.hyper.m1 << "+" << s.hyper.m2
      << " sweeps\n";
  const PosteriorSamples samples = run_chains(data, s.space, s.hyper, s.options, s.seed, s.chains);
  if (samples.draws.empty()) throw InferenceError("no draws retained; raise m2 or lower thin");

  write_samples(samples.draws, s.output / "samples.ndjson");
  write_segmentation(data, samples.gamma_mean, s.space, s.output / "segmentation.csv");
  write_diagnostics(samples, s.output / "diagnostics.json");
  mean_transition_matrix(samples.draws).write_csv(s.output / "transition_matrix.csv", s.space);

  for (const auto& c : samples.chains) {
    log << "chain " << c.chain << ": acceptance";
    for (double a : c.acceptance_retained) log << ' ' << std::setprecision(3) << a;
    log << ", final log marginal " << std::setprecision(10) << c.log_marginal_trace.back() << '\n';
  }
  log << "wrote " << samples.draws.size() << " draws to " << (s.output / "samples.ndjson").string() << '\n';
}

void cmd_simulate(const RunConfig& config, std::ostream& log) {
  const SimulateSettings s = simulate_settings(config);
  const LabeledDataset gen = generate_dataset(s.generator);
  make_dirs(s.output.parent_path());
  save_trajectories(gen.dataset, s.output);
  const fs::path stem = s.output.parent_path() / s.output.stem();
  const fs::path truth = stem.string() + "_truth.csv";
  const fs::path params = stem.string() + "_truth.json";
  write_truth_chains(gen.dataset, gen.true_chains, s.generator.space, truth);
  write_truth_params(s.generator, gen, params);
  log << "simulate: " << s.generator.D << " trajectories x " << s.generator.T << " steps (" << to_string(s.generator.mode)
      << ") -> " << s.output.string() << ", " << truth.string() << '\n';
  for (const auto& w : gen.warnings) log << "warning: " << w << '\n';
}

void cmd_report(const RunConfig& config, std::ostream& log) {
  const ReportSettings s = report_settings(config);
  const RunMetadata meta = read_run_metadata(s.run / "run.json");
  const auto draws = read_samples(s.run / "samples.ndjson");
  const JointStateSpace space = meta.space();
  if (static_cast<int>(draws[0].params.theta.size()) != space.regimes() ||
      static_cast<int>(draws[0].params.scenarios.size()) != space.scenarios())
    throw SchemaError("samples do not match the K_B/K_S recorded in run.json");
  make_dirs(s.output);

  // Regime table: theta and noise std, posterior mean and std over draws.
  std::vector<IdmParams> theta_mean;
  {
    std::ofstream out(s.output / "regimes.csv", std::ios::binary);
    if (!out) throw DataError("cannot write " + (s.output / "regimes.csv").string());
    out << "regime,stat,v_f,s0,T,a_max,b,sigma\n";
    for (int k = 0; k < space.regimes(); ++k) {
      std::vector<std::vector<double>> cols(6);
      for (const auto& d : draws) {
        const ThetaVec v = d.params.theta[k].to_vector();
        for (int i = 0; i < 5; ++i) cols[i].push_back(v[i]);
        cols[5].push_back(std::sqrt(d.params.sigma2[k]));
      }
      ThetaVec m;
      std::string mean_row = std::to_string(k + 1) + ",mean", std_row = std::to_string(k + 1) + ",std";
      for (int i = 0; i < 6; ++i) {
        const double mu = mean_of(cols[i]);
        if (i < 5) m[i] = mu;
        mean_row += "," + format_double(mu);
        std_row += "," + format_double(std_of(cols[i]));
      }
      theta_mean.push_back(IdmParams::from_vector(m));
      out << mean_row << '\n' << std_row << '\n';
      log << "regime " << k + 1 << ": " << mean_row.substr(mean_row.find(",mean,") + 6) << '\n';
    }
  }

  // Scenario table: means in physical units next to the standardized values.
  {
    std::ofstream out(s.output / "scenarios.csv", std::ios::binary);
    if (!out) throw DataError("cannot write " + (s.output / "scenarios.csv").string());
    out << "scenario,stat,mu_v,mu_dv,mu_s,z_v,z_dv,z_s\n";
    for (int k = 0; k < space.scenarios(); ++k) {
      std::vector<std::vector<double>> z(3);
      for (const auto& d : draws)
        for (int i = 0; i < 3; ++i) z[i].push_back(d.params.scenarios[k].mean[i]);
      Eigen::Vector3d zm, zs;
      for (int i = 0; i < 3; ++i) {
        zm[i] = mean_of(z[i]);
        zs[i] = std_of(z[i]);
      }
      const Eigen::Vector3d phys = meta.standardizer.destandardize(zm);
      const Eigen::Vector3d phys_sd = zs.cwiseProduct(meta.standardizer.std);
      std::string mean_row = std::to_string(k + 1) + ",mean", std_row = std::to_string(k + 1) + ",std";
      for (int i = 0; i < 3; ++i) {
        mean_row += "," + format_double(phys[i]);
        std_row += "," + format_double(phys_sd[i]);
      }
      for (int i = 0; i < 3; ++i) {
        mean_row += "," + format_double(zm[i]);
        std_row += "," + format_double(zs[i]);
      }
      out << mean_row << '\n' << std_row << '\n';
      log << "scenario " << k + 1 << ": " << mean_row.substr(mean_row.find(",mean,") + 6) << '\n';
    }
  }
  mean_transition_matrix(draws).write_csv(s.output / "transition_matrix.csv", space);

  if (s.truth) {
    const auto inferred = read_label_file(s.run / "segmentation.csv", space);
    const auto truth = read_label_file(*s.truth, space);
    std::vector<StateChain> a, b;
    for (const auto& id : truth.ids) {
      const auto it = inferred.chains.find(id);
      if (it == inferred.chains.end()) throw DataError("segmentation has no trajectory '" + id + "'");
      if (it->second.size() != truth.chains.at(id).size())
        throw DataError("trajectory '" + id + "' differs in length between segmentation and truth");
      a.push_back(it->second);
      b.push_back(truth.chains.at(id));
    }
    std::vector<IdmParams> true_theta;
    if (s.truth_params) true_theta = read_truth_theta(*s.truth_params);
    if (!true_theta.empty() && static_cast<int>(true_theta.size()) != space.regimes())
      throw DataError("truth parameters have " + std::to_string(true_theta.size()) + " regimes, fit has " +
                      std::to_string(space.regimes()));
    const auto rep = align_labels(a, b, space, true_theta.empty() ? std::vector<IdmParams>{} : theta_mean, true_theta);

    std::ofstream out(s.output / "alignment.csv", std::ios::binary);
    if (!out) throw DataError("cannot write " + (s.output / "alignment.csv").string());
    out << "metric,value\n";
    out << "joint_accuracy," << format_double(rep.score.joint_accuracy) << '\n';
    out << "regime_accuracy," << format_double(rep.score.regime_accuracy) << '\n';
    out << "scenario_accuracy," << format_double(rep.score.scenario_accuracy) << '\n';
    out << "regime_permutation," << join(rep.score.permutation.regime, 1) << '\n';
    out << "scenario_permutation," << join(rep.score.permutation.scenario, 1) << '\n';
    for (std::size_t k = 0; k < rep.theta_relative_error.size(); ++k)
      for (int i = 0; i < 5; ++i)
        out << "theta_rel_error_" << k + 1 << '_' << kThetaNames[i] << ','
            << format_double(rep.theta_relative_error[k][i]) << '\n';
    log << "alignment: joint " << rep.score.joint_accuracy << ", regime " << rep.score.regime_accuracy
        << ", scenario " << rep.score.scenario_accuracy << '\n';
  }
}

void cmd_segment(const RunConfig& config, std::ostream& log) {
  const SegmentSettings s = segment_settings(config);
  set_threads(s.threads);
  const RunMetadata meta = read_run_metadata(s.run / "run.json");
  const auto draws = read_samples(s.run / "samples.ndjson");
  Dataset ds = load_data(s.data);
  ds.standardizer = meta.standardizer;
  const PreparedData data = PreparedData::from_dataset(ds);
  const auto gamma = gamma_over_draws(data, draws, meta.space());
  make_dirs(s.output.parent_path());
  write_segmentation(data, gamma, meta.space(), s.output);
  log << "segment: " << draws.size() << " draws, " << data.trajectories() << " trajectories -> " << s.output.string()
      << '\n';
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Factorial HMM with IDM emissions: fit, simulate, report, segment"};
  app.require_subcommand(1);
  struct Sub {
    CLI::App* app;
    std::string config;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  const std::map<std::string, std::string> descriptions = {
      {"fit", "run the Gibbs sampler on a trajectory CSV"},
      {"simulate", "generate a labeled synthetic dataset"},
      {"report", "summarize a fit as regime and scenario tables"},
      {"segment", "recompute the segmentation from stored draws"}};
  std::map<std::string, Sub> subs;
  for (const auto& [name, desc] : descriptions) {
    Sub& sub = subs[name];
    sub.app = app.add_subcommand(name, desc);
    sub.app->add_option("--config", sub.config, "key=value settings file");
    for (const auto& k : keys_for(name)) {
      std::string help = k.help;
      if (!k.default_value.empty()) help += (help.empty() ? "" : " ") + std::string("[") + k.default_value + "]";
      sub.options[k.key] = sub.app->add_option("--" + k.key, sub.values[k.key], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    for (auto& [name, sub] : subs) {
      if (!sub.app->parsed()) continue;
      std::map<std::string, std::string> overrides;
      for (const auto& [key, opt] : sub.options)
        if (opt->count() > 0) overrides[key] = sub.values[key];
      std::optional<fs::path> file;
      if (!sub.config.empty()) {
        if (!fs::exists(sub.config)) throw ConfigError("config file not found: " + sub.config);
        file = sub.config;
      }
      const RunConfig config = RunConfig::resolve(name, file, overrides);
      if (name == "fit") cmd_fit(config, out);
      else if (name == "simulate") cmd_simulate(config, out);
      else if (name == "report") cmd_report(config, out);
      else cmd_segment(config, out);
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return kData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const InferenceError& e) {
    err << "inference error: " << e.what() << '\n';
    return kInference;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kOther;
  }
}

}  // namespace fhmm::cli
