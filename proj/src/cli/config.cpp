#include "fhmm/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "fhmm/errors.hpp"

namespace fhmm::cli {

namespace {

const std::vector<KeySpec> kDataKeys = {
    {"input", "", "trajectory CSV"},
    {"schema", "", "column mapping file (key=value) for foreign CSV layouts"},
    {"downsample", "1", "keep every n-th step"},
    {"min_duration", "50", "drop trajectories shorter than this many seconds"},
};

std::vector<KeySpec> fit_keys() {
  std::vector<KeySpec> k = kDataKeys;
  const std::vector<KeySpec> rest = {
      {"output", "", "output directory"},
      {"K_B", "1", "number of driving regimes"},
      {"K_S", "1", "number of traffic scenarios"},
      {"seed", "", "RNG seed (required)"},
      {"chains", "1", "independent chains"},
      {"threads", "0", "OpenMP threads, 0 = runtime default"},
      {"exec", "parallel", "kernel backend: parallel or serial"},
      {"latent", "marginal", "latent sampling: marginal or exact"},
      {"adaptation", "scale", "proposal adaptation during burn-in: none, scale or covariance"},
      {"target_acceptance", "0.23", "adaptation target"},
      {"log_space_proposal", "false", "random walk on ln(theta)"},
      {"mh_steps", "1", "theta proposals per regime per sweep"},
      {"resample_initial", "false", "sample p(z_1) instead of keeping it uniform"},
      {"check_invariants", "false", "validate the state after every block"},
      {"m1", "6000", "burn-in sweeps"},
      {"m2", "2000", "retained sweeps"},
      {"thin", "1", "keep every n-th retained sweep"},
      {"dirichlet_c", "0", "Dirichlet concentration per entry, 0 = 1/|Z|"},
      {"mu0", "33,2,1.6,1.5,1.67", "prior mean of theta (v_f,s0,T,a_max,b)"},
      {"kappa0", "0.01", ""},
      {"nu0", "7", ""},
      {"W0", "0.1,0.1,0.1,0.1,0.1", "diagonal (5) or full row-major (25)"},
      {"gamma_a", "100", "inverse-gamma shape"},
      {"gamma_b", "1", "inverse-gamma rate"},
      {"mu_x0", "0,0,0", ""},
      {"kappa_x0", "0.01", ""},
      {"nu_x0", "5", ""},
      {"W_x0", "0.1,0.1,0.1", "diagonal (3) or full row-major (9)"},
      {"proposal_cov", "", "diagonal (5) or full (25); empty = diag((0.05 mu0)^2)"},
  };
  k.insert(k.end(), rest.begin(), rest.end());
  return k;
}

std::vector<KeySpec> simulate_keys() {
  return {
      {"output", "", "dataset CSV; _truth.csv and _truth.json are written next to it"},
      {"seed", "", "RNG seed (required)"},
      {"preset", "two_by_two", "two_by_two or single_regime"},
      {"mode", "", "covariates: emission or kinematic (preset default)"},
      {"D", "", "trajectories"},
      {"T", "", "steps per trajectory"},
      {"dt", "", "time step in seconds"},
      {"stay", "", "self-transition probability"},
      {"theta", "", "per-regime v_f,s0,T,a_max,b rows separated by ';'"},
      {"sigma", "", "per-regime noise std"},
      {"max_clamp_fraction", "0.01", "warn when more steps hit the gap floor"},
  };
}

std::vector<KeySpec> report_keys() {
  return {
      {"run", "", "fit output directory"},
      {"output", "", "report directory (default: the run directory)"},
      {"truth", "", "truth labels traj_id,t,k_B,k_S"},
      {"truth_params", "", "generator JSON (default: truth file with .json)"},
  };
}

std::vector<KeySpec> segment_keys() {
  std::vector<KeySpec> k = kDataKeys;
  k.push_back({"run", "", "fit output directory"});
  k.push_back({"output", "", "segmentation CSV (default: <run>/segmentation.csv)"});
  k.push_back({"threads", "0", "OpenMP threads, 0 = runtime default"});
  return k;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

template <class Int>
Int parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(parse_double(key, text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

Mat square_or_diagonal(const std::string& key, const std::vector<double>& v, int n) {
  if (static_cast<int>(v.size()) == n) return Eigen::Map<const Vec>(v.data(), n).asDiagonal();
  if (static_cast<int>(v.size()) == n * n) {
    Mat m(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) m(r, c) = v[static_cast<std::size_t>(r * n + c)];
    return m;
  }
  throw ConfigError(key + ": expected " + std::to_string(n) + " or " + std::to_string(n * n) + " entries");
}

Vec fixed_vec(const std::string& key, const std::vector<double>& v, int n) {
  if (static_cast<int>(v.size()) != n) throw ConfigError(key + ": expected " + std::to_string(n) + " entries");
  return Eigen::Map<const Vec>(v.data(), n);
}

DataSettings data_settings(const RunConfig& c) {
  DataSettings d;
  d.input = c.get("input");
  if (c.has("schema")) d.schema = c.get("schema");
  d.downsample = c.get_int("downsample");
  d.min_duration = c.get_double("min_duration");
  if (d.downsample < 1) throw ConfigError("downsample must be >= 1");
  if (!(d.min_duration >= 0.0)) throw ConfigError("min_duration must be >= 0");
  return d;
}

int threads_of(const RunConfig& c) {
  const int t = c.get_int("threads");
  if (t < 0) throw ConfigError("threads must be >= 0");
  return t;
}

}  // namespace

const std::vector<KeySpec>& keys_for(const std::string& command) {
  static const std::map<std::string, std::vector<KeySpec>> table = {
      {"fit", fit_keys()}, {"simulate", simulate_keys()}, {"report", report_keys()}, {"segment", segment_keys()}};
  const auto it = table.find(command);
  if (it == table.end()) throw ConfigError("unknown command '" + command + "'");
  return it->second;
}

RunConfig RunConfig::resolve(const std::string& command, const std::optional<std::filesystem::path>& file,
                             const std::map<std::string, std::string>& overrides) {
  RunConfig c;
  c.command_ = command;
  const auto& keys = keys_for(command);
  std::set<std::string> own, any;
  for (const auto& k : keys) {
    own.insert(k.key);
    if (!k.default_value.empty()) c.values_[k.key] = k.default_value;
  }
  for (const char* other : {"fit", "simulate", "report", "segment"})
    for (const auto& k : keys_for(other)) any.insert(k.key);

  if (file) {
    std::map<std::string, std::string> kv;
    try {
      kv = read_key_value_file(*file);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    for (const auto& [key, value] : kv) {
      // Keys of sibling commands are skipped so one file can drive fit and segment.
      if (own.count(key)) {
        c.values_[key] = value;
      } else if (!any.count(key)) {
        throw ConfigError(file->string() + ": unknown key '" + key + "'");
      }
    }
  }
  for (const auto& [key, value] : overrides) {
    if (!own.count(key)) throw ConfigError("unknown option '" + key + "' for " + command);
    c.values_[key] = value;
  }
  for (auto it = c.values_.begin(); it != c.values_.end();) {
    it = it->second.empty() ? c.values_.erase(it) : std::next(it);
  }
  return c;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required setting '" + key + "' for " + command_);
  return it->second;
}

int RunConfig::get_int(const std::string& key) const { return parse_integer<int>(key, get(key)); }
std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_integer<std::uint64_t>(key, get(key)); }
double RunConfig::get_double(const std::string& key) const { return parse_double(key, get(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  std::string v = trim(get(key));
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + get(key) + "'");
}

std::vector<double> RunConfig::get_list(const std::string& key) const { return parse_list(key, get(key)); }

void RunConfig::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# " << command_ << '\n';
  for (const auto& k : keys_for(command_)) {
    const auto it = values_.find(k.key);
    if (it != values_.end()) out << k.key << '=' << it->second << '\n';
  }
}

FitSettings fit_settings(const RunConfig& c) {
  FitSettings s;
  s.data = data_settings(c);
  s.output = c.get("output");
  const int kb = c.get_int("K_B");
  const int ks = c.get_int("K_S");
  if (kb < 1 || ks < 1) throw ConfigError("K_B and K_S must be >= 1");
  s.space = JointStateSpace(kb, ks);
  s.seed = c.get_u64("seed");
  s.chains = c.get_int("chains");
  if (s.chains < 1) throw ConfigError("chains must be >= 1");
  s.threads = threads_of(c);

  Hyperparams& h = s.hyper;
  h.dirichlet_c = c.get_double("dirichlet_c");
  h.mu0 = fixed_vec("mu0", c.get_list("mu0"), 5);
  h.kappa0 = c.get_double("kappa0");
  h.nu0 = c.get_double("nu0");
  h.W0 = square_or_diagonal("W0", c.get_list("W0"), 5);
  h.gamma_a = c.get_double("gamma_a");
  h.gamma_b = c.get_double("gamma_b");
  h.mu_x0 = fixed_vec("mu_x0", c.get_list("mu_x0"), 3);
  h.kappa_x0 = c.get_double("kappa_x0");
  h.nu_x0 = c.get_double("nu_x0");
  h.W_x0 = square_or_diagonal("W_x0", c.get_list("W_x0"), 3);
  if (c.has("proposal_cov")) h.proposal_cov = square_or_diagonal("proposal_cov", c.get_list("proposal_cov"), 5);
  h.m1 = c.get_int("m1");
  h.m2 = c.get_int("m2");
  h.thin = c.get_int("thin");
  h.validate();

  SamplerOptions& o = s.options;
  o.latent = parse_latent_sampling(c.get("latent"));
  o.adaptation = parse_adaptation(c.get("adaptation"));
  o.target_acceptance = c.get_double("target_acceptance");
  if (!(o.target_acceptance > 0.0 && o.target_acceptance < 1.0))
    throw ConfigError("target_acceptance must be in (0, 1)");
  o.log_space_proposal = c.get_bool("log_space_proposal");
  o.mh_steps = c.get_int("mh_steps");
  if (o.mh_steps < 1) throw ConfigError("mh_steps must be >= 1");
  o.resample_initial = c.get_bool("resample_initial");
  o.check_invariants = c.get_bool("check_invariants");
  const std::string exec = c.get("exec");
  if (exec == "parallel")
    o.exec = Exec::Parallel;
  else if (exec == "serial")
    o.exec = Exec::Serial;
  else
    throw ConfigError("exec must be 'parallel' or 'serial', got '" + exec + "'");
  return s;
}

SimulateSettings simulate_settings(const RunConfig& c) {
  SimulateSettings s;
  s.output = c.get("output");
  const std::string preset = c.get("preset");
  GeneratorConfig& g = s.generator;
  if (preset == "two_by_two")
    g = GeneratorConfig::two_by_two();
  else if (preset == "single_regime")
    g = GeneratorConfig::single_regime();
  else
    throw ConfigError("preset must be 'two_by_two' or 'single_regime', got '" + preset + "'");
  g.seed = c.get_u64("seed");
  if (c.has("mode")) g.mode = parse_covariate_mode(c.get("mode"));
  if (c.has("D")) g.D = c.get_int("D");
  if (c.has("T")) g.T = c.get_int("T");
  if (c.has("dt")) g.dt = c.get_double("dt");
  if (c.has("stay")) {
    const double stay = c.get_double("stay");
    if (!(stay >= 0.0 && stay <= 1.0)) throw ConfigError("stay must be in [0, 1]");
    g.true_pi = TransitionMatrix::sticky(g.space.size(), stay);
  }
  if (c.has("theta")) {
    const std::string text = c.get("theta");
    g.true_theta.clear();
    std::size_t start = 0;
    while (true) {
      const auto semi = text.find(';', start);
      const auto row = fixed_vec("theta", parse_list("theta", text.substr(start, semi - start)), 5);
      IdmParams p;
      p.v_f = row[0];
      p.s0 = row[1];
      p.T = row[2];
      p.a_max = row[3];
      p.b = row[4];
      g.true_theta.push_back(p);
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
  }
  if (c.has("sigma")) g.true_sigma = c.get_list("sigma");
  g.max_clamp_fraction = c.get_double("max_clamp_fraction");
  g.validate();
  return s;
}

ReportSettings report_settings(const RunConfig& c) {
  ReportSettings s;
  s.run = c.get("run");
  s.output = c.has("output") ? std::filesystem::path(c.get("output")) : s.run;
  if (c.has("truth")) {
    s.truth = c.get("truth");
    if (c.has("truth_params")) {
      s.truth_params = c.get("truth_params");
    } else {
      auto guess = *s.truth;
      guess.replace_extension(".json");
      if (std::filesystem::exists(guess)) s.truth_params = guess;
    }
  } else if (c.has("truth_params")) {
    throw ConfigError("truth_params needs truth");
  }
  return s;
}

SegmentSettings segment_settings(const RunConfig& c) {
  SegmentSettings s;
  s.data = data_settings(c);
  s.run = c.get("run");
  s.output = c.has("output") ? std::filesystem::path(c.get("output")) : s.run / "segmentation.csv";
  s.threads = threads_of(c);
  return s;
}

}  // namespace fhmm::cli
