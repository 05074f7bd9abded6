#include "fhmm/posterior_io.hpp"

#include <cmath>
#include <exception>
#include <fstream>

#include "fhmm/errors.hpp"
#include "fhmm/evidence.hpp"
#include "json.hpp"

namespace fhmm {

using nlohmann::json;

namespace {

std::vector<double> flat(const Eigen::Ref<const Mat>& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

std::vector<double> flat_vec(const Eigen::Ref<const Vec>& v) { return {v.data(), v.data() + v.size()}; }

Vec to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Mat to_square(const json& j, const char* name) {
  const auto v = j.get<std::vector<double>>();
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (n * n != static_cast<Eigen::Index>(v.size()))
    throw SchemaError(std::string("'") + name + "' is not a square matrix");
  Mat m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = v[static_cast<std::size_t>(r * n + c)];
  return m;
}

json hyper_to_json(const Hyperparams& h) {
  json j;
  j["dirichlet_c"] = h.dirichlet_c;
  j["mu0"] = flat_vec(h.mu0);
  j["kappa0"] = h.kappa0;
  j["nu0"] = h.nu0;
  j["W0"] = flat(h.W0);
  j["gamma_a"] = h.gamma_a;
  j["gamma_b"] = h.gamma_b;
  j["mu_x0"] = flat_vec(h.mu_x0);
  j["kappa_x0"] = h.kappa_x0;
  j["nu_x0"] = h.nu_x0;
  j["W_x0"] = flat(h.W_x0);
  j["proposal_cov"] = flat(h.proposal_cov);
  j["m1"] = h.m1;
  j["m2"] = h.m2;
  j["thin"] = h.thin;
  return j;
}

Hyperparams hyper_from_json(const json& j) {
  Hyperparams h;
  h.dirichlet_c = j.at("dirichlet_c").get<double>();
  h.mu0 = to_vec(j.at("mu0"));
  h.kappa0 = j.at("kappa0").get<double>();
  h.nu0 = j.at("nu0").get<double>();
  h.W0 = to_square(j.at("W0"), "W0");
  h.gamma_a = j.at("gamma_a").get<double>();
  h.gamma_b = j.at("gamma_b").get<double>();
  h.mu_x0 = to_vec(j.at("mu_x0"));
  h.kappa_x0 = j.at("kappa_x0").get<double>();
  h.nu_x0 = j.at("nu_x0").get<double>();
  h.W_x0 = to_square(j.at("W_x0"), "W_x0");
  if (!j.at("proposal_cov").empty()) h.proposal_cov = to_square(j.at("proposal_cov"), "proposal_cov");
  h.m1 = j.at("m1").get<int>();
  h.m2 = j.at("m2").get<int>();
  h.thin = j.at("thin").get<int>();
  return h;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

void write_run_metadata(const RunMetadata& meta, const std::filesystem::path& path) {
  json j;
  j["K_B"] = meta.k_b;
  j["K_S"] = meta.k_s;
  j["seed"] = meta.seed;
  j["chains"] = meta.chains;
  j["latent_sampling"] = meta.latent;
  j["adaptation"] = meta.adaptation;
  j["log_space_proposal"] = meta.log_space_proposal;
  j["mh_steps"] = meta.mh_steps;
  j["standardizer"] = {{"mean", flat_vec(meta.standardizer.mean)}, {"std", flat_vec(meta.standardizer.std)}};
  j["hyperparams"] = hyper_to_json(meta.hyper);
  write_text(path, j.dump(2) + "\n");
}

RunMetadata read_run_metadata(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    const json j = json::parse(in);
    RunMetadata m;
    m.k_b = j.at("K_B").get<int>();
    m.k_s = j.at("K_S").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.chains = j.at("chains").get<int>();
    m.latent = j.at("latent_sampling").get<std::string>();
    m.adaptation = j.at("adaptation").get<std::string>();
    m.log_space_proposal = j.at("log_space_proposal").get<bool>();
    m.mh_steps = j.value("mh_steps", 1);
    const Vec mean = to_vec(j.at("standardizer").at("mean"));
    const Vec sd = to_vec(j.at("standardizer").at("std"));
    if (mean.size() != 3 || sd.size() != 3) throw SchemaError("standardizer needs 3 entries");
    m.standardizer.mean = mean;
    m.standardizer.std = sd;
    m.hyper = hyper_from_json(j.at("hyperparams"));
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string draw_to_line(const Draw& draw) {
  const Parameters& p = draw.params;
  json j;
  j["chain"] = draw.chain;
  j["iter"] = draw.iteration;
  j["log_marginal"] = draw.log_marginal;
  j["pi"] = flat(p.pi.matrix());
  j["init"] = flat_vec(p.init.probs);
  j["theta"] = json::array();
  for (const auto& th : p.theta) j["theta"].push_back(flat_vec(th.to_vector()));
  j["sigma"] = json::array();
  for (double s2 : p.sigma2) j["sigma"].push_back(std::sqrt(s2));
  j["sigma2"] = p.sigma2;
  j["mu_x"] = json::array();
  j["lambda_x"] = json::array();
  for (const auto& sc : p.scenarios) {
    j["mu_x"].push_back(flat_vec(sc.mean));
    j["lambda_x"].push_back(flat(sc.precision));
  }
  j["log_mu"] = flat_vec(p.log_mu);
  j["lambda"] = flat(p.lambda);
  return j.dump();
}

Draw draw_from_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    Draw d;
    d.chain = j.at("chain").get<int>();
    d.iteration = j.at("iter").get<int>();
    d.log_marginal = j.at("log_marginal").get<double>();
    Parameters& p = d.params;
    p.pi = TransitionMatrix(to_square(j.at("pi"), "pi"));
    p.init.probs = to_vec(j.at("init"));
    for (const auto& row : j.at("theta")) {
      const Vec v = to_vec(row);
      if (v.size() != 5) throw SchemaError("theta rows need 5 entries");
      p.theta.push_back(IdmParams::from_vector(v));
    }
    p.sigma2 = j.at("sigma2").get<std::vector<double>>();
    const auto& mus = j.at("mu_x");
    const auto& lams = j.at("lambda_x");
    if (mus.size() != lams.size()) throw SchemaError("mu_x and lambda_x differ in length");
    for (std::size_t k = 0; k < mus.size(); ++k)
      p.scenarios.push_back({to_vec(mus[k]), to_square(lams[k], "lambda_x")});
    p.log_mu = to_vec(j.at("log_mu"));
    p.lambda = to_square(j.at("lambda"), "lambda");
    if (p.theta.empty() || p.scenarios.empty()) throw SchemaError("draw has no regimes or scenarios");
    const JointStateSpace space(static_cast<int>(p.theta.size()), static_cast<int>(p.scenarios.size()));
    p.validate(space);
    return d;
  } catch (const json::exception& e) {
    throw SchemaError(e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  } catch (const std::domain_error& e) {
    throw SchemaError(e.what());
  }
}

void write_samples(const std::vector<Draw>& draws, const std::filesystem::path& path) {
  std::string text;
  for (const auto& d : draws) text += draw_to_line(d) + "\n";
  write_text(path, text);
}

std::vector<Draw> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Draw> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(draw_from_line(line));
    } catch (const std::exception& e) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (out.back().params.theta.size() != out.front().params.theta.size() ||
        out.back().params.scenarios.size() != out.front().params.scenarios.size())
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": state space differs from the first draw");
  }
  if (out.empty()) throw SchemaError(path.string() + ": no draws");
  return out;
}

void write_segmentation(const PreparedData& data, const std::vector<RowMat>& gamma_mean, const JointStateSpace& space,
                        const std::filesystem::path& path) {
  if (static_cast<int>(gamma_mean.size()) != data.trajectories())
    throw std::invalid_argument("write_segmentation: one gamma table per trajectory required");
  std::string text = "traj_id,t,k_B,k_S,gamma_max\n";
  for (int d = 0; d < data.trajectories(); ++d) {
    const auto& g = gamma_mean[d];
    for (Eigen::Index t = 0; t < g.rows(); ++t) {
      Eigen::Index best = 0;
      const double gmax = g.row(t).maxCoeff(&best);
      const auto st = space.state(static_cast<int>(best));
      text += data.ids[d] + "," + format_double(data.start_times[d] + static_cast<double>(t) * data.dts[d]) + "," +
              std::to_string(st.k_B) + "," + std::to_string(st.k_S) + "," + format_double(gmax) + "\n";
    }
  }
  write_text(path, text);
}

std::vector<RowMat> gamma_over_draws(const PreparedData& data, const std::vector<Draw>& draws,
                                     const JointStateSpace& space, Exec exec) {
  if (draws.empty()) throw std::invalid_argument("gamma_over_draws: no draws");
  std::vector<std::vector<GaussianPrecision>> densities;
  for (const auto& dr : draws) densities.push_back(scenario_densities(dr.params));
  const int D = data.trajectories();
  std::vector<RowMat> out(static_cast<std::size_t>(D));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(D));
  auto one = [&](int d) {
    try {
      RowMat acc = RowMat::Zero(static_cast<Eigen::Index>(data.length(d)), space.size());
      RowMat table;
      for (std::size_t i = 0; i < draws.size(); ++i) {
        trajectory_evidence(data, d, draws[i].params, densities[i], space, table);
        acc += forward_backward(table, draws[i].params.pi, draws[i].params.init).gamma;
      }
      out[d] = acc / static_cast<double>(draws.size());
    } catch (...) {
      errors[d] = std::current_exception();
    }
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int d = 0; d < D; ++d) one(d);
  } else {
    for (int d = 0; d < D; ++d) one(d);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_diagnostics(const PosteriorSamples& samples, const std::filesystem::path& path) {
  json j;
  j["K_B"] = samples.space.regimes();
  j["K_S"] = samples.space.scenarios();
  j["retained_draws"] = samples.draws.size();
  j["chains"] = json::array();
  for (const auto& c : samples.chains) {
    json cj;
    cj["chain"] = c.chain;
    cj["seed"] = c.seed;
    cj["acceptance_burn_in"] = c.acceptance_burn_in;
    cj["acceptance_retained"] = c.acceptance_retained;
    cj["prior_redraws"] = c.prior_redraws;
    cj["proposal_scale"] = c.proposal_scale;
    cj["empty_regime_events"] = c.empty_regime_events;
    cj["empty_scenario_events"] = c.empty_scenario_events;
    cj["nonfinite_evidence"] = c.nonfinite_evidence;
    cj["alignment"] = {{"regime", c.alignment.regime}, {"scenario", c.alignment.scenario}};
    cj["log_marginal_trace"] = c.log_marginal_trace;
    j["chains"].push_back(std::move(cj));
  }
  write_text(path, j.dump(2) + "\n");
}

TransitionMatrix mean_transition_matrix(const std::vector<Draw>& draws) {
  if (draws.empty()) throw std::invalid_argument("mean_transition_matrix: no draws");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(draws[0].params.pi.size(), draws[0].params.pi.size());
  for (const auto& d : draws) acc += d.params.pi.matrix();
  acc /= static_cast<double>(draws.size());
  for (Eigen::Index r = 0; r < acc.rows(); ++r) acc.row(r) /= acc.row(r).sum();
  return TransitionMatrix(std::move(acc));
}

}  // namespace fhmm
