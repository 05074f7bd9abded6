#include "fhmm/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "fhmm/errors.hpp"

namespace fhmm {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string row_location(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

double parse_number(std::string_view field, const std::filesystem::path& path, std::size_t line_no,
                    const std::string& column) {
  const std::string text = trim(field);
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw DataError("unparsable value '" + text + "' in column '" + column + "' at " + row_location(path, line_no));
  if (!std::isfinite(value))
    throw DataError("non-finite value in column '" + column + "' at " + row_location(path, line_no));
  return value;
}

struct Row {
  double t;
  Step step;
  std::size_t line_no;
};

}  // namespace

void Trajectory::validate() const {
  if (steps.size() < 2) throw DataError("trajectory '" + id + "' has fewer than 2 steps");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DataError("trajectory '" + id + "' has non-positive dt");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!steps[i].x.is_valid() || !std::isfinite(steps[i].y))
      throw DataError("trajectory '" + id + "' step " + std::to_string(i) + " violates state invariants");
  }
}

std::size_t Dataset::total_steps() const {
  std::size_t n = 0;
  for (const auto& tr : trajectories) n += tr.size();
  return n;
}

std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value at " + row_location(path, line_no));
    out[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

ColumnSchema ColumnSchema::from_mapping_file(const std::filesystem::path& path) {
  ColumnSchema schema;
  bool dv_given = false;
  for (const auto& [key, value] : read_key_value_file(path)) {
    if (key == "traj_id") schema.traj_id = value;
    else if (key == "t") schema.t = value;
    else if (key == "v") schema.v = value;
    else if (key == "dv") { schema.dv = value; dv_given = true; }
    else if (key == "v_lead") schema.v_lead = value;
    else if (key == "s") schema.s = value;
    else if (key == "a") schema.a = value;
    else if (key == "time_scale") {
      try {
        schema.time_scale = std::stod(value);
      } catch (const std::exception&) {
        throw SchemaError("time_scale is not a number in " + path.string());
      }
    } else {
      throw SchemaError("unknown schema key '" + key + "' in " + path.string());
    }
  }
  if (schema.v_lead && !dv_given) schema.dv.reset();
  if (schema.v_lead && schema.dv) throw SchemaError("schema sets both dv and v_lead");
  if (!(schema.time_scale > 0.0)) throw SchemaError("time_scale must be > 0");
  return schema;
}

Dataset load_trajectories(const std::filesystem::path& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trajectory file " + path.string());
  if (schema.dv.has_value() == schema.v_lead.has_value())
    throw SchemaError("schema must name exactly one of dv or v_lead");

  std::string header;
  if (!std::getline(in, header)) throw SchemaError("empty file " + path.string());
  std::unordered_map<std::string, std::size_t> columns;
  {
    const auto fields = split_commas(header);
    for (std::size_t i = 0; i < fields.size(); ++i) columns[trim(fields[i])] = i;
  }
  auto column = [&](const std::string& name) {
    const auto it = columns.find(name);
    if (it == columns.end()) throw SchemaError("missing column '" + name + "' in " + path.string());
    return it->second;
  };
  const std::size_t c_id = column(schema.traj_id);
  const std::size_t c_t = column(schema.t);
  const std::size_t c_v = column(schema.v);
  const bool leader_speed = schema.v_lead.has_value();
  const std::string& rel_name = leader_speed ? *schema.v_lead : *schema.dv;
  const std::size_t c_rel = column(rel_name);
  const std::size_t c_s = column(schema.s);
  const std::size_t c_a = column(schema.a);
  const std::size_t needed = std::max({c_id, c_t, c_v, c_rel, c_s, c_a}) + 1;

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> groups;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() < needed) throw DataError("too few fields at " + row_location(path, line_no));
    const std::string id = trim(fields[c_id]);
    Row row;
    row.line_no = line_no;
    row.t = parse_number(fields[c_t], path, line_no, schema.t) * schema.time_scale;
    row.step.x.v = parse_number(fields[c_v], path, line_no, schema.v);
    const double rel = parse_number(fields[c_rel], path, line_no, rel_name);
    row.step.x.dv = leader_speed ? row.step.x.v - rel : rel;
    row.step.x.s = parse_number(fields[c_s], path, line_no, schema.s);
    row.step.y = parse_number(fields[c_a], path, line_no, schema.a);
    if (!(row.step.x.s > 0.0)) throw DataError("gap must be > 0 at " + row_location(path, line_no));
    if (row.step.x.v < 0.0) throw DataError("speed must be >= 0 at " + row_location(path, line_no));
    auto [it, inserted] = groups.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(row);
  }

  Dataset ds;
  for (const auto& id : order) {
    auto& rows = groups[id];
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    Trajectory tr;
    tr.id = id;
    if (rows.size() < 2) throw DataError("trajectory '" + id + "' has fewer than 2 rows");
    tr.start_time = rows.front().t;
    tr.dt = rows[1].t - rows[0].t;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double step = rows[i].t - rows[i - 1].t;
      if (!(step > 0.0))
        throw DataError("non-monotone time in trajectory '" + id + "' at " + row_location(path, rows[i].line_no));
      if (std::abs(step - tr.dt) > 1e-6 * std::max(1.0, tr.dt))
        throw DataError("irregular sampling in trajectory '" + id + "' at " + row_location(path, rows[i].line_no));
    }
    tr.steps.reserve(rows.size());
    for (const auto& r : rows) tr.steps.push_back(r.step);
    tr.validate();
    ds.trajectories.push_back(std::move(tr));
  }
  if (ds.trajectories.empty()) throw DataError("no trajectories in " + path.string());
  return ds;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void save_trajectories(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "traj_id,t,v,dv,s,a\n";
  for (const auto& tr : dataset.trajectories) {
    for (std::size_t i = 0; i < tr.steps.size(); ++i) {
      const auto& st = tr.steps[i];
      out << tr.id << ',' << format_double(tr.start_time + static_cast<double>(i) * tr.dt) << ','
          << format_double(st.x.v) << ',' << format_double(st.x.dv) << ',' << format_double(st.x.s) << ','
          << format_double(st.y) << '\n';
    }
  }
}

Trajectory downsample(const Trajectory& traj, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
  if (traj.size() <= static_cast<std::size_t>(factor) && factor > 1)
    throw std::invalid_argument("downsample: factor too large for trajectory '" + traj.id + "'");
  Trajectory out;
  out.id = traj.id;
  out.dt = traj.dt * factor;
  out.start_time = traj.start_time;
  for (std::size_t i = 0; i < traj.size(); i += static_cast<std::size_t>(factor)) out.steps.push_back(traj.steps[i]);
  return out;
}

Dataset filter_min_duration(Dataset dataset, double min_seconds) {
  auto& trs = dataset.trajectories;
  trs.erase(std::remove_if(trs.begin(), trs.end(),
                           [&](const Trajectory& t) { return t.duration() + 1e-9 < min_seconds; }),
            trs.end());
  dataset.standardizer.reset();
  return dataset;
}

Dataset fit_standardizer(Dataset dataset) {
  const std::size_t n = dataset.total_steps();
  if (n < 2) throw DataError("standardizer needs at least 2 steps");
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& tr : dataset.trajectories)
    for (const auto& st : tr.steps) sum += st.x.to_vector();
  const Eigen::Vector3d mean = sum / static_cast<double>(n);
  Eigen::Vector3d sq = Eigen::Vector3d::Zero();
  for (const auto& tr : dataset.trajectories)
    for (const auto& st : tr.steps) sq += (st.x.to_vector() - mean).cwiseAbs2();
  Standardizer s;
  s.mean = mean;
  s.std = (sq / static_cast<double>(n)).cwiseSqrt();
  static const char* names[] = {"v", "dv", "s"};
  for (int i = 0; i < 3; ++i)
    if (!(s.std[i] >= 1e-9)) throw DataError(std::string("feature '") + names[i] + "' is constant; cannot standardize");
  dataset.standardizer = s;
  return dataset;
}

}  // namespace fhmm
