#include "fhmm/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include "json.hpp"

#include "fhmm/errors.hpp"
#include "fhmm/stats.hpp"

namespace fhmm {

namespace {

int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng) {
  double u = rng.uniform();
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    u -= probs[k];
    if (u <= 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size() - 1);
}

StateChain sample_chain(const GeneratorConfig& config, Rng& rng) {
  StateChain chain(static_cast<std::size_t>(config.T));
  chain[0] = sample_categorical(config.init.probs, rng);
  for (int t = 1; t < config.T; ++t) chain[t] = sample_categorical(config.true_pi.matrix().row(chain[t - 1]).transpose(), rng);
  return chain;
}

std::vector<double> leader_speeds(const GeneratorConfig& config, Rng& rng) {
  const auto& lp = config.leader;
  const double half = 0.5 * std::min(lp.band, lp.max_speed - lp.min_speed);
  const double center = lp.min_speed + half + rng.uniform() * (lp.max_speed - lp.min_speed - 2.0 * half);
  auto draw_target = [&] { return center - half + 2.0 * half * rng.uniform(); };
  auto draw_hold = [&] { return lp.hold_min + (lp.hold_max - lp.hold_min) * rng.uniform(); };

  std::vector<double> v(static_cast<std::size_t>(config.T) + 1);
  double target = draw_target();
  double hold = draw_hold();
  v[0] = target;
  const double max_dv = lp.max_accel * config.dt;
  for (std::size_t i = 1; i < v.size(); ++i) {
    hold -= config.dt;
    if (hold <= 0.0) {
      target = draw_target();
      hold = draw_hold();
    }
    v[i] = v[i - 1] + std::clamp(target - v[i - 1], -max_dv, max_dv);
  }
  return v;
}

std::size_t kinematic_trajectory(const GeneratorConfig& config, const StateChain& chain, Rng& rng,
                                 Trajectory& traj) {
  const auto vl = leader_speeds(config, rng);
  const auto& space = config.space;
  const IdmParams& first = config.true_theta[space.regime_of(chain[0])];
  StateVector x;
  x.v = std::min(vl[0], 0.9 * first.v_f);
  x.dv = x.v - vl[0];
  x.s = idm_equilibrium_gap(x.v, first);

  std::size_t clamps = 0;
  for (int t = 0; t < config.T; ++t) {
    const int k = space.regime_of(chain[t]);
    const auto step = simulate_step(x, vl[t + 1], config.true_theta[k], config.true_sigma[k], config.dt, rng);
    traj.steps.push_back({x, step.acceleration});
    clamps += step.gap_clamped ? 1 : 0;
    x = step.next;
  }
  return clamps;
}

void emission_trajectory(const GeneratorConfig& config, const StateChain& chain,
                         const std::vector<Eigen::Matrix3d>& factors, Rng& rng, Trajectory& traj) {
  const auto& space = config.space;
  for (int t = 0; t < config.T; ++t) {
    const int ks = space.scenario_of(chain[t]);
    const int kb = space.regime_of(chain[t]);
    StateVector x;
    for (int attempt = 0;; ++attempt) {
      if (attempt == 10000)
        throw ConfigError("scenario " + std::to_string(ks + 1) + " covariates almost never satisfy v >= 0, s > " +
                          format_double(kMinSimulatedGap));
      Eigen::Vector3d e(rng.normal(), rng.normal(), rng.normal());
      const Eigen::Vector3d draw = config.scenarios[ks].mean + factors[ks] * e;
      x = {draw[0], draw[1], draw[2]};
      if (x.v >= 0.0 && x.s > kMinSimulatedGap) break;
    }
    double y = idm_acceleration(x, config.true_theta[kb]);
    if (config.true_sigma[kb] > 0.0) y += config.true_sigma[kb] * rng.normal();
    traj.steps.push_back({x, y});
  }
}

}  // namespace

const char* to_string(CovariateMode mode) { return mode == CovariateMode::Kinematic ? "kinematic" : "emission"; }

CovariateMode parse_covariate_mode(const std::string& text) {
  if (text == "kinematic") return CovariateMode::Kinematic;
  if (text == "emission") return CovariateMode::Emission;
  throw ConfigError("covariate mode must be 'kinematic' or 'emission', got '" + text + "'");
}

GeneratorConfig GeneratorConfig::two_by_two() {
  GeneratorConfig c;
  c.space = JointStateSpace(2, 2);
  c.true_pi = TransitionMatrix::sticky(4, 0.97);
  c.init = InitialDistribution::uniform(4);
  c.true_theta = {IdmParams::from_vector((ThetaVec() << 39.26, 1.80, 0.59, 0.30, 1.40).finished()),
                  IdmParams::from_vector((ThetaVec() << 9.84, 5.10, 1.29, 0.08, 0.50).finished())};
  c.true_sigma = {0.47, 0.15};
  c.mode = CovariateMode::Emission;
  c.scenarios = {
      {Eigen::Vector3d(3.95, -0.08, 9.12), Eigen::Vector3d(1.2 * 1.2, 0.6 * 0.6, 2.5 * 2.5).asDiagonal()},
      {Eigen::Vector3d(8.30, 0.10, 21.82), Eigen::Vector3d(2.5 * 2.5, 0.8 * 0.8, 6.0 * 6.0).asDiagonal()},
  };
  return c;
}

GeneratorConfig GeneratorConfig::single_regime() {
  GeneratorConfig c;
  c.space = JointStateSpace(1, 1);
  c.true_pi = TransitionMatrix::uniform(1);
  c.init = InitialDistribution::uniform(1);
  c.true_theta = {IdmParams::from_vector((ThetaVec() << 38.57, 2.71, 0.86, 0.14, 1.33).finished())};
  c.true_sigma = {0.0};
  c.mode = CovariateMode::Kinematic;
  c.scenarios = {{Eigen::Vector3d(5.73, 0.0, 14.32), Eigen::Vector3d(2.0 * 2.0, 0.7 * 0.7, 5.0 * 5.0).asDiagonal()}};
  c.D = 10;
  return c;
}

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("generator: " + msg); };
  if (true_pi.size() != space.size()) fail("transition matrix must be |Z| x |Z|");
  if (init.probs.size() != space.size()) fail("initial distribution must have |Z| entries");
  try {
    init.validate();
  } catch (const std::exception& e) {
    fail(e.what());
  }
  if (static_cast<int>(true_theta.size()) != space.regimes()) fail("need one IDM parameter set per regime");
  for (const auto& th : true_theta)
    if (!th.is_valid()) fail("IDM parameters must be finite and > 0");
  if (static_cast<int>(true_sigma.size()) != space.regimes()) fail("need one noise std per regime");
  for (double s : true_sigma)
    if (!(s >= 0.0) || !std::isfinite(s)) fail("noise stds must be finite and >= 0");
  if (T < 2) fail("T must be >= 2");
  if (D < 1) fail("D must be >= 1");
  if (!(dt > 0.0)) fail("dt must be > 0");
  if (!(max_clamp_fraction >= 0.0)) fail("max clamp fraction must be >= 0");
  if (mode == CovariateMode::Emission) {
    if (static_cast<int>(scenarios.size()) != space.scenarios()) fail("need one covariate Gaussian per scenario");
    for (const auto& sc : scenarios)
      if (!is_spd(sc.covariance)) fail("scenario covariances must be SPD");
  } else {
    const auto& lp = leader;
    if (!(lp.min_speed >= 0.0 && lp.max_speed > lp.min_speed)) fail("leader speeds need 0 <= min < max");
    if (!(lp.band >= 0.0 && lp.hold_min > 0.0 && lp.hold_max >= lp.hold_min && lp.max_accel > 0.0))
      fail("leader hold times and max_accel must be positive, band >= 0");
  }
}

LabeledDataset generate_dataset(const GeneratorConfig& config) {
  config.validate();
  std::vector<Eigen::Matrix3d> factors;
  for (const auto& sc : config.scenarios) factors.push_back(Eigen::LLT<Eigen::Matrix3d>(sc.covariance).matrixL());

  const int D = config.D;
  LabeledDataset out;
  out.dataset.trajectories.resize(static_cast<std::size_t>(D));
  out.true_chains.resize(static_cast<std::size_t>(D));
  std::vector<std::size_t> clamps(static_cast<std::size_t>(D), 0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(D));
  const Rng root(config.seed);

#pragma omp parallel for schedule(dynamic, 1)
  for (int d = 0; d < D; ++d) {
    try {
      Rng rng = root.derive(static_cast<std::uint64_t>(d));
      auto& traj = out.dataset.trajectories[d];
      traj.id = std::to_string(d + 1);
      traj.dt = config.dt;
      traj.steps.reserve(static_cast<std::size_t>(config.T));
      out.true_chains[d] = sample_chain(config, rng);
      if (config.mode == CovariateMode::Kinematic)
        clamps[d] = kinematic_trajectory(config, out.true_chains[d], rng, traj);
      else
        emission_trajectory(config, out.true_chains[d], factors, rng, traj);
    } catch (...) {
      errors[d] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (auto c : clamps) out.clamp_events += c;
  const double total = static_cast<double>(D) * config.T;
  if (static_cast<double>(out.clamp_events) > config.max_clamp_fraction * total) {
    std::ostringstream msg;
    msg << "gap clamped at " << kMinSimulatedGap << " m in " << out.clamp_events << " of "
        << static_cast<std::size_t>(total) << " steps";
    out.warnings.push_back(msg.str());
  }
  return out;
}

AlignmentReport align_labels(const std::vector<StateChain>& inferred, const std::vector<StateChain>& truth,
                             const JointStateSpace& space, const std::vector<IdmParams>& inferred_theta,
                             const std::vector<IdmParams>& true_theta) {
  if (inferred_theta.size() != true_theta.size())
    throw std::invalid_argument("align_labels: inferred and true parameter sets differ in size");
  if (!true_theta.empty() && static_cast<int>(true_theta.size()) != space.regimes())
    throw std::invalid_argument("align_labels: parameter sets must have K_B entries");
  AlignmentReport report;
  report.score = best_alignment(inferred, truth, space);
  if (!true_theta.empty()) {
    report.theta_relative_error.resize(true_theta.size());
    for (std::size_t k = 0; k < inferred_theta.size(); ++k) {
      const int ref = report.score.permutation.regime[k];
      const ThetaVec truth_vec = true_theta[ref].to_vector();
      report.theta_relative_error[ref] = ((inferred_theta[k].to_vector() - truth_vec).array().abs() / truth_vec.array()).matrix();
    }
  }
  return report;
}

void write_truth_chains(const Dataset& dataset, const std::vector<StateChain>& chains, const JointStateSpace& space,
                        const std::filesystem::path& path) {
  if (chains.size() != dataset.trajectories.size())
    throw std::invalid_argument("write_truth_chains: one chain per trajectory required");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "traj_id,t,k_B,k_S\n";
  for (std::size_t d = 0; d < chains.size(); ++d) {
    const auto& traj = dataset.trajectories[d];
    if (chains[d].size() != traj.size()) throw std::invalid_argument("write_truth_chains: chain length mismatch");
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const auto st = space.state(chains[d][t]);
      out << traj.id << ',' << format_double(traj.start_time + static_cast<double>(t) * traj.dt) << ','
          << st.k_B << ',' << st.k_S << '\n';
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<StateChain> read_truth_chains(const std::filesystem::path& path, const Dataset& dataset,
                                          const JointStateSpace& space) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "traj_id,t,k_B,k_S") throw SchemaError(path.string() + ": expected header traj_id,t,k_B,k_S");

  std::map<std::string, StateChain> by_id;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (cells.size() != 4) throw DataError(where + ": expected 4 fields");
    int kb = 0, ks = 0;
    try {
      kb = std::stoi(cells[2]);
      ks = std::stoi(cells[3]);
    } catch (const std::exception&) {
      throw DataError(where + ": labels must be integers");
    }
    if (kb < 1 || kb > space.regimes() || ks < 1 || ks > space.scenarios())
      throw DataError(where + ": label outside the " + std::to_string(space.regimes()) + "x" +
                      std::to_string(space.scenarios()) + " state space");
    by_id[cells[0]].push_back(space.index({kb, ks}));
  }
  std::vector<StateChain> out;
  for (const auto& traj : dataset.trajectories) {
    auto it = by_id.find(traj.id);
    if (it == by_id.end()) throw DataError(path.string() + ": no labels for trajectory " + traj.id);
    if (it->second.size() != traj.size())
      throw DataError(path.string() + ": trajectory " + traj.id + " has " + std::to_string(it->second.size()) +
                      " labels for " + std::to_string(traj.size()) + " steps");
    out.push_back(it->second);
  }
  return out;
}

void write_truth_params(const GeneratorConfig& config, const LabeledDataset& generated,
                        const std::filesystem::path& path) {
  using nlohmann::json;
  json j;
  j["K_B"] = config.space.regimes();
  j["K_S"] = config.space.scenarios();
  j["mode"] = to_string(config.mode);
  for (const auto& th : config.true_theta) {
    const ThetaVec v = th.to_vector();
    j["theta"].push_back(std::vector<double>(v.data(), v.data() + v.size()));
  }
  j["sigma"] = config.true_sigma;
  const Eigen::MatrixXd& p = config.true_pi.matrix();
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index k = 0; k < p.cols(); ++k) j["pi"].push_back(p(i, k));
  for (const auto& sc : config.scenarios) {
    json s;
    s["mean"] = std::vector<double>(sc.mean.data(), sc.mean.data() + 3);
    std::vector<double> cov;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) cov.push_back(sc.covariance(r, c));
    s["covariance"] = cov;
    j["scenarios"].push_back(s);
  }
  j["T"] = config.T;
  j["D"] = config.D;
  j["dt"] = config.dt;
  j["seed"] = config.seed;
  const Dataset standardized = fit_standardizer(generated.dataset);
  j["standardizer"] = {{"mean", std::vector<double>(standardized.standardizer->mean.data(), standardized.standardizer->mean.data() + 3)},
                       {"std", std::vector<double>(standardized.standardizer->std.data(), standardized.standardizer->std.data() + 3)}};
  j["clamp_events"] = generated.clamp_events;
  j["warnings"] = generated.warnings;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<IdmParams> read_truth_theta(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    std::vector<IdmParams> out;
    for (const auto& row : j.at("theta")) {
      const auto v = row.get<std::vector<double>>();
      if (v.size() != 5) throw SchemaError(path.string() + ": theta rows need 5 entries");
      out.push_back(IdmParams::from_vector(Eigen::Map<const ThetaVec>(v.data())));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace fhmm
