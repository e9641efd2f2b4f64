#include "lfhcp/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lfhcp/parallel.hpp"
#include "lfhcp/stdio_planner.hpp"
#include "lfhcp/version.hpp"

namespace lfhcp {

namespace fs = std::filesystem;

namespace {

template <class C, class F>
void ingest_fields(C& c, F&& f) {
  f("dt", c.dt);
  f("horizon", c.horizon);
  f("stride", c.stride);
}

template <class C, class F>
void filter_fields(C& c, F&& f) {
  f("n_max", c.n_max);
  f("samples_per_hypothesis", c.samples_per_hypothesis);
}

template <class C, class F>
void simulation_fields(C& c, F&& f) {
  f("worlds", c.worlds);
  f("trial", c.trial);
  f("gap", c.gap);
  f("trials_per_world", c.trials_per_world);
}

template <class C, class Fields>
void read_object(const json& j, C& c, const std::string& what, Fields fields) {
  if (!j.is_object()) throw InvalidInput(what + " must be a JSON object");
  std::vector<std::string> known;
  fields(c, [&](const char* key, auto& v) {
    known.emplace_back(key);
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(v);
    } catch (const json::exception& e) {
      throw InvalidInput(what + "." + key + ": " + e.what());
    }
  });
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InvalidInput("unknown key '" + key + "' in " + what);
    }
  }
}

template <class C, class Fields>
json write_object(const C& c, Fields fields) {
  json j = json::object();
  fields(c, [&](const char* key, const auto& v) { j[key] = v; });
  return j;
}

/// Shortest round-trip decimal form.
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void log_line(const RunOptions& o, const std::string& s) {
  if (o.log) *o.log << s << '\n';
}

bool is_meta(const json& j) {
  return j.is_object() && (j.contains("header") || j.contains("summary"));
}

std::ofstream open_out(const std::string& path) {
  if (path.empty()) throw InvalidInput("missing --out path");
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path);
  return out;
}

std::string csv_comment_header(const std::string& command, const PipelineManifest& m) {
  std::ostringstream os;
  os << "# tool: " << kToolName << ' ' << kToolVersion << '\n';
  os << "# command: " << command << '\n';
  os << "# manifest: " << json(m).dump() << '\n';
  return os.str();
}

// Quoted when the value holds a separator, e.g. subset names like "r,theta".
std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.emplace_back(trim(cell));
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw InvalidInput(where + ": '" + s + "' is not a finite number");
  }
  return v;
}

struct Odometry {
  std::vector<double> t, x, y, yaw, v, w;
};

Odometry read_odometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path + " is empty");
  const auto header = split_csv(line);
  const std::vector<std::string> names{"t", "x", "y", "yaw", "v", "w"};
  std::vector<std::size_t> col;
  for (const auto& n : names) {
    const auto it = std::find(header.begin(), header.end(), n);
    if (it == header.end()) throw InvalidInput(path + ": missing column '" + n + "'");
    col.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  Odometry o;
  std::vector<double>* dst[] = {&o.t, &o.x, &o.y, &o.yaw, &o.v, &o.w};
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty() || line[0] == '#') continue;
    const auto cells = split_csv(line);
    const std::string where = path + ":" + std::to_string(number);
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (col[k] >= cells.size()) throw InvalidInput(where + ": too few columns");
      dst[k]->push_back(parse_double(cells[col[k]], where));
    }
    if (o.t.size() > 1 && !(o.t.back() > o.t[o.t.size() - 2])) {
      throw InvalidInput(where + ": timestamps must increase");
    }
  }
  return o;
}

/// Linear interpolation at `time`; yaw must already be unwrapped.
double interp(const std::vector<double>& t, const std::vector<double>& v, std::size_t i, double time) {
  if (i + 1 >= t.size()) return v.back();
  const double u = (time - t[i]) / (t[i + 1] - t[i]);
  return v[i] + u * (v[i + 1] - v[i]);
}

}  // namespace

// ---- manifest ---------------------------------------------------------------

void PipelineManifest::validate() const {
  try {
    if (ingest.horizon < 2 || !(ingest.dt > 0.0) || ingest.stride < 1) {
      throw std::invalid_argument("ingest needs horizon >= 2, dt > 0 and stride >= 1");
    }
    if (filter.n_max < 1 || filter.samples_per_hypothesis < 1) {
      throw std::invalid_argument("filter counts must be >= 1");
    }
    hallucination.validate();
    generator.validate();
    render.validate();
    coverage.validate();
    simulation.worlds.validate();
    simulation.trial.validate();
    if (simulation.trials_per_world < 1) throw std::invalid_argument("trials_per_world must be >= 1");
  } catch (const std::invalid_argument& e) {
    throw InvalidInput(std::string("invalid configuration: ") + e.what());
  }
}

void to_json(json& j, const IngestConfig& c) { j = write_object(c, [](const auto& cc, auto&& f) { ingest_fields(cc, f); }); }
void from_json(const json& j, IngestConfig& c) { read_object(j, c, "ingest", [](auto& cc, auto&& f) { ingest_fields(cc, f); }); }
void to_json(json& j, const FilterStageConfig& c) { j = write_object(c, [](const auto& cc, auto&& f) { filter_fields(cc, f); }); }
void from_json(const json& j, FilterStageConfig& c) { read_object(j, c, "filter", [](auto& cc, auto&& f) { filter_fields(cc, f); }); }
void to_json(json& j, const SimulationConfig& c) { j = write_object(c, [](const auto& cc, auto&& f) { simulation_fields(cc, f); }); }
void from_json(const json& j, SimulationConfig& c) { read_object(j, c, "simulation", [](auto& cc, auto&& f) { simulation_fields(cc, f); }); }

namespace {
template <class C, class F>
void manifest_fields(C& c, F&& f) {
  f("seed", c.seed);
  f("ingest", c.ingest);
  f("hallucination", c.hallucination);
  f("filter", c.filter);
  f("generator", c.generator);
  f("augment", c.augment);
  f("render", c.render);
  f("coverage", c.coverage);
  f("simulation", c.simulation);
  f("paths", c.paths);
}
}  // namespace

void to_json(json& j, const PipelineManifest& m) {
  j = write_object(m, [](const auto& cc, auto&& f) { manifest_fields(cc, f); });
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
}

void from_json(const json& j, PipelineManifest& m) {
  json rest = j;
  if (rest.is_object()) {
    rest.erase("tool");
    rest.erase("version");
  }
  read_object(rest, m, "manifest", [](auto& cc, auto&& f) { manifest_fields(cc, f); });
}

PipelineManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("config " + path + ": " + e.what());
  }
  PipelineManifest m;
  from_json(j, m);
  return m;
}

void apply_override(json& manifest_json, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw InvalidInput("override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &manifest_json;
  std::istringstream is(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(is, key, '.')) keys.push_back(key);
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->is_object()) throw InvalidInput("override path " + path + " does not name an object");
    node = &(*node)[keys[i]];
  }
  if (!node->is_object()) throw InvalidInput("override path " + path + " does not name an object");
  (*node)[keys.back()] = value;
}

void use_reduced_iterations(HallucinationConfig& config) {
  config.phase1_iters = 200;
  config.phase2_anneal_iters = 200;
  config.phase2_hard_iters = 100;
}

json output_header(const std::string& command, const PipelineManifest& m) {
  return json{{"header",
               {{"tool", kToolName}, {"version", kToolVersion}, {"command", command}, {"manifest", m}}}};
}

// ---- loaders ----------------------------------------------------------------

std::vector<PlanRecord> load_plans(const std::string& path, std::size_t* malformed) {
  auto lines = read_json_lines_file(path);
  std::vector<PlanRecord> plans;
  std::size_t bad = lines.malformed;
  for (const auto& j : lines.values) {
    if (is_meta(j)) continue;
    try {
      const json& p = j.contains("plan") ? j.at("plan") : j;
      plans.push_back(p.get<PlanRecord>());
    } catch (const std::exception&) {
      ++bad;
    }
  }
  if (malformed) *malformed = bad;
  return plans;
}

std::vector<Scenario> load_scenarios(const std::string& path) {
  auto lines = read_json_lines_file(path);
  if (lines.malformed) throw InvalidInput(path + ": " + lines.warnings.front());
  std::vector<Scenario> out;
  for (const auto& j : lines.values) {
    if (is_meta(j)) continue;
    if (j.contains("scans")) {
      throw InvalidInput(path + " holds training records; they carry no obstacle states, "
                                "pass the scenarios file instead");
    }
    Scenario s;
    try {
      s.plan_id = j.at("plan_id").get<std::string>();
      s.trajectories = j.at("trajectories").get<std::vector<ObstacleTrajectory>>();
      s.augmented = j.at("augmented").get<std::vector<ObstacleTrajectory>>();
    } catch (const json::exception& e) {
      throw InvalidInput(path + ": malformed scenario: " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---- ingest -----------------------------------------------------------------

CommandResult cmd_ingest(const PipelineManifest& m, const std::vector<std::string>& inputs,
                         const std::string& out_path, const RunOptions& options) {
  m.validate();
  if (inputs.empty()) throw InvalidInput("no odometry logs given");
  CommandResult result;
  auto out = open_out(out_path);
  out << output_header("ingest", m).dump() << '\n';
  const auto& cfg = m.ingest;
  std::size_t windows = 0;
  for (const auto& path : inputs) {
    auto odo = read_odometry(path);
    if (odo.t.size() < 2) {
      result.warnings.push_back(path + ": fewer than two samples");
      continue;
    }
    // unwrap yaw before interpolating
    for (std::size_t i = 1; i < odo.yaw.size(); ++i) {
      odo.yaw[i] = odo.yaw[i - 1] + normalize_angle(odo.yaw[i] - odo.yaw[i - 1]);
    }
    std::vector<double> tx, ty, tyaw, tv, tw;
    std::size_t seg = 0;
    for (std::size_t k = 0;; ++k) {
      const double time = odo.t.front() + static_cast<double>(k) * cfg.dt;
      if (time > odo.t.back() + 1e-12) break;
      while (seg + 1 < odo.t.size() && odo.t[seg + 1] <= time) ++seg;
      tx.push_back(interp(odo.t, odo.x, seg, time));
      ty.push_back(interp(odo.t, odo.y, seg, time));
      tyaw.push_back(interp(odo.t, odo.yaw, seg, time));
      tv.push_back(interp(odo.t, odo.v, seg, time));
      tw.push_back(interp(odo.t, odo.w, seg, time));
    }
    const std::string stem = fs::path(path).stem().string();
    for (std::size_t s = 0; s + cfg.horizon <= tx.size(); s += cfg.stride) {
      const Pose2 frame(tx[s], ty[s], tyaw[s]);
      PlanRecord rec;
      rec.id = stem + "#" + std::to_string(s);
      rec.plan.dt = cfg.dt;
      for (std::size_t k = 0; k < cfg.horizon; ++k) {
        const Vec2 q = k == 0 ? Vec2::Zero() : to_frame(frame, Vec2(tx[s + k], ty[s + k]));
        rec.plan.poses.emplace_back(q.x(), q.y(), k == 0 ? 0.0 : tyaw[s + k] - tyaw[s]);
        if (k + 1 < cfg.horizon) rec.plan.actions.push_back({tv[s + k], tw[s + k]});
      }
      out << json(rec).dump() << '\n';
      ++windows;
    }
    log_line(options, "[ingest] " + path + ": " + std::to_string(tx.size()) + " resampled poses");
  }
  result.summary = {{"logs", inputs.size()}, {"windows", windows}};
  out << json{{"summary", result.summary}}.dump() << '\n';
  if (windows == 0) result.warnings.push_back("no complete windows; logs shorter than the horizon");
  return result;
}

// ---- hallucinate ------------------------------------------------------------

HallucinationOutcome hallucinate_plan(const Plan& plan, const PipelineManifest& m, Rng& rng) {
  HallucinationOutcome o;
  o.phase1 = fit_phase1(plan, m.hallucination, rng);
  o.phase2 = fit_phase2(plan, o.phase1.hypotheses, m.hallucination, rng);
  o.candidates = extract_critical_points(o.phase2.hypotheses, rng, m.filter.samples_per_hypothesis);
  o.report = filter_critical_points(o.candidates, plan, m.hallucination.radius,
                                    m.hallucination.decoder, m.filter.n_max);
  return o;
}

CommandResult cmd_hallucinate(const PipelineManifest& m, const std::string& plans_path,
                              const std::string& out_path, const RunOptions& options) {
  m.validate();
  CommandResult result;
  auto lines = read_json_lines_file(plans_path);
  for (const auto& w : lines.warnings) result.warnings.push_back(plans_path + " " + w);
  std::vector<PlanRecord> plans;
  std::size_t malformed = lines.malformed, wrong_horizon = 0;
  for (std::size_t i = 0; i < lines.values.size(); ++i) {
    const auto& j = lines.values[i];
    if (is_meta(j)) continue;
    try {
      auto rec = j.get<PlanRecord>();
      if (rec.plan.horizon() != m.ingest.horizon) {
        ++wrong_horizon;
        result.warnings.push_back("plan " + rec.id + " has horizon " +
                                  std::to_string(rec.plan.horizon()) + ", expected " +
                                  std::to_string(m.ingest.horizon));
        continue;
      }
      plans.push_back(std::move(rec));
    } catch (const std::exception& e) {
      ++malformed;
      result.warnings.push_back(plans_path + " line " + std::to_string(lines.line_numbers[i]) +
                                ": " + e.what());
    }
  }
  if (plans.empty()) throw InvalidInput("no plans");

  enum class Kind { accepted, rejected, open_space, straight_rejected };
  struct Item {
    Kind kind = Kind::rejected;
    std::string line;
  };
  std::vector<Item> items(plans.size());
  parallel_for(plans.size(), options.workers, [&](std::size_t i) {
    const auto& rec = plans[i];
    Rng rng = make_rng(m.seed, "hallucinate", i);
    Item& item = items[i];
    json line{{"plan_id", rec.id}, {"plan", rec}};
    const double baseline = critical_set_loss({}, rec.plan, m.hallucination.radius, m.hallucination.decoder);
    if (baseline < kOpenSpaceLoss) {
      if (!is_open_space_plan(rec.plan, m.generator)) {
        item.kind = Kind::straight_rejected;
        return;
      }
      FilterReport report;
      report.baseline_loss = report.final_loss = baseline;
      report.loss_history = {baseline};
      report.open_space = true;
      line["kind"] = "open_space";
      line["kept"] = json::array();
      line["report"] = report;
      item.kind = Kind::open_space;
      item.line = line.dump();
      return;
    }
    const auto o = hallucinate_plan(rec.plan, m, rng);
    item.kind = o.report.accepted ? Kind::accepted : Kind::rejected;
    log_line(options, "[hallucinate] " + rec.id + (o.report.accepted ? " accepted" : " rejected") +
                          ", kept " + std::to_string(o.report.kept.size()) + ", loss ratio " +
                          num(o.report.final_loss / o.report.baseline_loss));
    if (!o.report.accepted) return;
    line["kind"] = "critical";
    line["kept"] = o.report.kept;
    line["report"] = o.report;
    line["candidates"] = o.candidates;
    json p2 = o.phase2.diagnostics;
    p2["soft_mse_end_of_anneal"] = o.phase2.soft_mse_end_of_anneal;
    p2["hard_mse"] = o.phase2.hard_mse;
    line["phase1"] = o.phase1.diagnostics;
    line["phase2"] = p2;
    item.line = line.dump();
  });

  auto out = open_out(out_path);
  out << output_header("hallucinate", m).dump() << '\n';
  std::size_t counts[4] = {0, 0, 0, 0};
  for (const auto& item : items) {
    ++counts[static_cast<int>(item.kind)];
    if (!item.line.empty()) out << item.line << '\n';
  }
  result.summary = {{"plans", plans.size()},
                    {"accepted", counts[0]},
                    {"rejected", counts[1]},
                    {"open_space", counts[2]},
                    {"straight_rejected", counts[3]},
                    {"malformed_lines", malformed},
                    {"wrong_horizon", wrong_horizon}};
  out << json{{"summary", result.summary}}.dump() << '\n';
  return result;
}

// ---- generate ---------------------------------------------------------------

CommandResult cmd_generate(const PipelineManifest& m, const std::string& sets_path,
                           const std::string& out_path, const RunOptions& options) {
  m.validate();
  CommandResult result;
  auto lines = read_json_lines_file(sets_path);
  if (lines.malformed) throw InvalidInput(sets_path + " " + lines.warnings.front());
  struct Input {
    PlanRecord plan;
    std::string kind;
    std::vector<CriticalPoint> kept;
  };
  std::vector<Input> inputs;
  for (const auto& j : lines.values) {
    if (is_meta(j)) continue;
    try {
      Input in;
      in.plan = j.at("plan").get<PlanRecord>();
      in.kind = j.value("kind", std::string("critical"));
      in.kept = j.at("kept").get<std::vector<CriticalPoint>>();
      inputs.push_back(std::move(in));
    } catch (const json::exception& e) {
      throw InvalidInput(sets_path + ": malformed critical set: " + e.what());
    }
  }

  struct Output {
    std::vector<Scenario> scenarios;
    std::size_t dropped = 0, failed = 0;
  };
  std::vector<Output> outputs(inputs.size());
  parallel_for(inputs.size(), options.workers, [&](std::size_t i) {
    const auto& in = inputs[i];
    Rng rng = make_rng(m.seed, "generate", i);
    auto& o = outputs[i];
    if (in.kind == "open_space") {
      o.scenarios.push_back(Scenario{in.plan.id, {}, {}});
      return;
    }
    auto gen = generate_scenarios(in.plan.plan, in.plan.id, in.kept, m.generator, rng);
    o.dropped = gen.dropped_scenarios;
    o.failed = gen.failed_samples;
    for (auto& s : gen.scenarios) {
      o.scenarios.push_back(m.augment ? augment_random_obstacles(std::move(s), in.plan.plan,
                                                                 m.generator, rng)
                                      : std::move(s));
    }
  });

  auto out = open_out(out_path);
  out << output_header("generate", m).dump() << '\n';
  std::ofstream plot;
  if (!options.plot_dir.empty()) {
    plot = open_out((fs::path(options.plot_dir) / "trajectories.csv").string());
    plot << csv_comment_header("generate", m) << "scenario_id,group,index,t,x,y\n";
  }
  std::size_t scenarios = 0, dropped = 0, failed = 0, trajectories = 0, augmented = 0, zero_kept = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].kind != "open_space" && inputs[i].kept.empty()) {
      ++zero_kept;
      result.warnings.push_back("plan " + inputs[i].plan.id + " has no kept critical points");
    }
    dropped += outputs[i].dropped;
    failed += outputs[i].failed;
    for (std::size_t k = 0; k < outputs[i].scenarios.size(); ++k) {
      const auto& s = outputs[i].scenarios[k];
      const std::string id = s.plan_id + "/" + std::to_string(k);
      out << json{{"scenario_id", id},
                  {"plan_id", s.plan_id},
                  {"trajectories", s.trajectories},
                  {"augmented", s.augmented}}
                 .dump()
          << '\n';
      ++scenarios;
      trajectories += s.trajectories.size();
      augmented += s.augmented.size();
      if (plot.is_open()) {
        const auto& plan = inputs[i].plan.plan;
        auto dump = [&](const std::vector<ObstacleTrajectory>& group, const char* name) {
          for (std::size_t g = 0; g < group.size(); ++g) {
            for (std::size_t t = 1; t <= plan.horizon(); ++t) {
              const Vec2 p = group[g].position(t, plan.dt);
              plot << id << ',' << name << ',' << g << ',' << t << ',' << num(p.x()) << ','
                   << num(p.y()) << '\n';
            }
          }
        };
        dump(s.trajectories, "critical");
        dump(s.augmented, "augmented");
      }
    }
  }
  result.summary = {{"records", inputs.size()},     {"scenarios", scenarios},
                    {"dropped_scenarios", dropped}, {"failed_samples", failed},
                    {"trajectories", trajectories}, {"augmented", augmented},
                    {"zero_kept", zero_kept}};
  out << json{{"summary", result.summary}}.dump() << '\n';
  return result;
}

// ---- render -----------------------------------------------------------------

CommandResult cmd_render(const PipelineManifest& m, const std::string& scenarios_path,
                         const std::string& plans_path, const std::string& out_path,
                         const RunOptions& options) {
  m.validate();
  CommandResult result;
  const auto scenarios = load_scenarios(scenarios_path);
  std::size_t malformed = 0;
  const auto plan_list = load_plans(plans_path, &malformed);
  std::map<std::string, const Plan*> plans;
  for (const auto& p : plan_list) plans.emplace(p.id, &p.plan);
  if (malformed) result.warnings.push_back(plans_path + ": skipped " + std::to_string(malformed) + " malformed lines");

  auto out = open_out(out_path);
  out << output_header("render", m).dump() << '\n';
  std::size_t records = 0, missing = 0;
  std::map<std::string, std::size_t> scenario_index;
  std::vector<std::string> ids(scenarios.size());
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    ids[i] = scenarios[i].plan_id + "/" + std::to_string(scenario_index[scenarios[i].plan_id]++);
  }
  const std::size_t block = std::max<std::size_t>(1, options.workers) * 4;
  for (std::size_t start = 0; start < scenarios.size(); start += block) {
    const std::size_t n = std::min(block, scenarios.size() - start);
    std::vector<std::string> text(n);
    std::vector<std::size_t> counts(n, 0);
    std::vector<char> found(n, 0);
    parallel_for(n, options.workers, [&](std::size_t k) {
      const std::size_t i = start + k;
      const auto it = plans.find(scenarios[i].plan_id);
      if (it == plans.end()) return;
      found[k] = 1;
      Rng rng = make_rng(m.seed, "render", i);
      const auto recs = build_records(*it->second, scenarios[i], m.render, rng);
      const std::size_t expected = record_count(it->second->horizon(), m.render);
      if (recs.size() != expected) {
        throw std::logic_error("record count " + std::to_string(recs.size()) + " != " +
                               std::to_string(expected));
      }
      std::string buf;
      for (const auto& r : recs) {
        json j = r;
        j["scenario_id"] = ids[i];
        buf += j.dump();
        buf += '\n';
      }
      text[k] = std::move(buf);
      counts[k] = recs.size();
    });
    for (std::size_t k = 0; k < n; ++k) {
      if (!found[k]) {
        ++missing;
        result.warnings.push_back("no plan '" + scenarios[start + k].plan_id + "' for scenario " +
                                  ids[start + k]);
        continue;
      }
      out << text[k];
      records += counts[k];
    }
  }
  result.summary = {{"scenarios", scenarios.size()},
                    {"records", records},
                    {"missing_plans", missing},
                    {"m_l", m.render.m_l},
                    {"m_a", m.render.m_a},
                    {"pad_start", m.render.pad_start}};
  out << json{{"summary", result.summary}}.dump() << '\n';
  log_line(options, "[render] " + std::to_string(records) + " records");
  return result;
}

// ---- coverage ---------------------------------------------------------------

std::vector<FeatureSample> scenario_samples(const Plan& plan, const Scenario& scenario) {
  std::vector<FeatureSample> out;
  out.reserve(plan.horizon() * (scenario.trajectories.size() + scenario.augmented.size()));
  for (std::size_t t = 1; t <= plan.horizon(); ++t) {
    const Pose2& robot = plan.poses[t - 1];
    for (const auto* group : {&scenario.trajectories, &scenario.augmented}) {
      for (const auto& tr : *group) out.push_back(features_of(robot, tr.position(t, plan.dt), tr.velocity));
    }
  }
  return out;
}

CommandResult cmd_coverage(const PipelineManifest& m, const std::string& scenarios_path,
                           const std::string& plans_path, const std::string& out_path,
                           const std::string& curve_path, const RunOptions& options) {
  m.validate();
  CommandResult result;
  const auto scenarios = load_scenarios(scenarios_path);
  const auto plan_list = load_plans(plans_path);
  std::map<std::string, const Plan*> plans;
  for (const auto& p : plan_list) plans.emplace(p.id, &p.plan);

  // Ten prefix chunks; each is accumulated independently and merged in order.
  constexpr std::size_t kSteps = 10;
  std::vector<std::size_t> bounds;
  for (std::size_t k = 1; k <= kSteps; ++k) bounds.push_back((scenarios.size() * k + kSteps - 1) / kSteps);
  std::vector<CoverageAccumulator> chunks(kSteps, CoverageAccumulator(m.coverage));
  std::vector<std::size_t> chunk_samples(kSteps, 0);
  std::vector<std::size_t> missing(kSteps, 0);
  parallel_for(kSteps, options.workers, [&](std::size_t c) {
    const std::size_t begin = c == 0 ? 0 : bounds[c - 1];
    for (std::size_t i = begin; i < bounds[c]; ++i) {
      const auto it = plans.find(scenarios[i].plan_id);
      if (it == plans.end()) {
        ++missing[c];
        continue;
      }
      for (const auto& s : scenario_samples(*it->second, scenarios[i])) {
        chunks[c].add(s);
        ++chunk_samples[c];
      }
    }
  });
  CoverageAccumulator total(m.coverage);
  std::size_t samples = 0, missing_total = 0;
  std::ostringstream curve;
  curve << csv_comment_header("coverage", m) << "fraction,scenarios,samples,subset,dcs_percent\n";
  for (std::size_t c = 0; c < kSteps; ++c) {
    total.merge(chunks[c]);
    samples += chunk_samples[c];
    missing_total += missing[c];
    for (const auto& row : total.rows()) {
      curve << num(static_cast<double>(c + 1) / kSteps) << ',' << bounds[c] << ',' << samples << ','
            << csv_field(subset_name(row.subset)) << ',' << num(100.0 * row.dcs) << '\n';
    }
  }
  if (missing_total) {
    result.warnings.push_back(std::to_string(missing_total) + " scenarios reference unknown plans");
  }

  const auto rows = total.rows();
  auto out = open_out(out_path);
  out << csv_comment_header("coverage", m);
  out << "# bins: r=" << m.coverage.axes[kRange].bins() << " theta=" << m.coverage.axes[kBearing].bins()
      << " s=" << m.coverage.axes[kSpeed].bins() << " psi=" << m.coverage.axes[kHeading].bins() << '\n';
  out << "# samples: " << samples << '\n';
  out << "subset,occupied,total,dcs_percent\n";
  json table = json::array();
  for (const auto& row : rows) {
    out << csv_field(subset_name(row.subset)) << ',' << row.occupied << ',' << row.total << ','
        << num(100.0 * row.dcs) << '\n';
    table.push_back({{"subset", subset_name(row.subset)}, {"occupied", row.occupied},
                     {"total", row.total}, {"dcs", row.dcs}});
  }
  {
    fs::path text_path(out_path);
    text_path.replace_extension(".txt");
    if (text_path == fs::path(out_path)) text_path += ".txt";
    auto tf = open_out(text_path.string());
    tf << csv_comment_header("coverage", m);
    char line[128];
    std::snprintf(line, sizeof line, "%-16s %12s %12s %10s\n", "subset", "occupied", "total", "DCS");
    tf << line;
    for (const auto& row : rows) {
      std::snprintf(line, sizeof line, "%-16s %12llu %12llu %10s\n", subset_name(row.subset).c_str(),
                    static_cast<unsigned long long>(row.occupied),
                    static_cast<unsigned long long>(row.total), format_percent(row.dcs).c_str());
      tf << line;
    }
  }
  if (!curve_path.empty()) {
    auto cf = open_out(curve_path);
    cf << curve.str();
  }
  if (!options.plot_dir.empty()) {
    auto cf = open_out((fs::path(options.plot_dir) / "coverage_curve.csv").string());
    cf << curve.str();
  }
  result.summary = {{"scenarios", scenarios.size()}, {"samples", samples}, {"table", table}};
  return result;
}

// ---- simulation -------------------------------------------------------------

std::unique_ptr<Planner> make_planner(const std::string& selector, const PipelineManifest& m) {
  if (selector == "gap") {
    GapFollowerConfig cfg = m.simulation.gap;
    cfg.lidar = m.simulation.trial.lidar;
    return std::make_unique<GapFollowerPlanner>(cfg);
  }
  if (selector == "replay") return std::make_unique<ReplayPlanner>();
  if (selector.rfind("constant:", 0) == 0) {
    const auto args = split_csv(selector.substr(9));
    if (args.size() != 2) throw InvalidInput("constant planner needs constant:v,w");
    return std::make_unique<ConstantPlanner>(
        Action{parse_double(args[0], "constant v"), parse_double(args[1], "constant w")});
  }
  if (selector.rfind("stdio:", 0) == 0) {
    const std::string command = selector.substr(6);
    if (command.empty()) throw InvalidInput("stdio planner needs a command");
    return std::make_unique<StdioPlanner>(command, m.simulation.trial.planner_deadline);
  }
  throw InvalidInput("unknown planner '" + selector + "' (gap, replay, constant:v,w, stdio:cmd)");
}

namespace {

std::vector<WorldSpec> load_worlds(const std::string& dir) {
  if (!fs::is_directory(dir)) throw InvalidInput(dir + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InvalidInput("no world files in " + dir);
  std::vector<WorldSpec> worlds;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw InvalidInput(f.string() + ": " + e.what());
    }
    if (j.is_object()) j.erase("header");
    worlds.push_back(j.get<WorldSpec>());
  }
  return worlds;
}

void write_world(const fs::path& path, const WorldSpec& w, const PipelineManifest& m) {
  json j = w;
  j["header"] = output_header("worlds", m).at("header");
  auto out = open_out(path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

CommandResult cmd_worlds(const PipelineManifest& m, const std::string& out_dir,
                         const RunOptions& options) {
  m.validate();
  std::vector<WorldSpec> worlds;
  try {
    worlds = generate_worlds(m.simulation.worlds, m.seed);
  } catch (const WorldGenerationError& e) {
    throw InvalidInput(e.what());
  }
  for (const auto& w : worlds) write_world(fs::path(out_dir) / (w.id + ".json"), w, m);
  log_line(options, "[worlds] wrote " + std::to_string(worlds.size()) + " worlds to " + out_dir);
  CommandResult result;
  result.summary = {{"worlds", worlds.size()}};
  return result;
}

CommandResult cmd_simulate(const PipelineManifest& m, const std::string& worlds_dir,
                           const std::string& planner, const std::string& out_path,
                           const std::string& record_dir, const RunOptions& options) {
  m.validate();
  std::vector<WorldSpec> worlds;
  if (worlds_dir.empty()) {
    try {
      worlds = generate_worlds(m.simulation.worlds, m.seed);
    } catch (const WorldGenerationError& e) {
      throw InvalidInput(e.what());
    }
  } else {
    worlds = load_worlds(worlds_dir);
  }
  make_planner(planner, m);  // validate the selector before fanning out

  const std::size_t trials = m.simulation.trials_per_world;
  const std::size_t jobs = worlds.size() * trials;
  std::vector<TrialResult> results(jobs);
  std::vector<std::vector<TraceStep>> traces(jobs);
  const bool keep_traces = !record_dir.empty() || !options.plot_dir.empty();
  parallel_for(jobs, options.workers, [&](std::size_t i) {
    const auto& world = worlds[i / trials];
    const std::size_t trial = i % trials;
    auto p = make_planner(planner, m);
    results[i] = run_trial(world, *p, m.simulation.trial, child_seed(world.seed, "trial", trial),
                           keep_traces ? &traces[i] : nullptr);
  });

  CommandResult result;
  std::vector<Difficulty> tiers;
  std::ostringstream csv;
  csv << csv_comment_header("simulate", m);
  csv << "# planner: " << planner << '\n';
  csv << "# goal_tolerance_m: " << num(m.simulation.trial.goal_tolerance)
      << " timeout_s: " << num(m.simulation.trial.max_time) << '\n';
  csv << "world_id,trial,outcome,elapsed_s,path_length_m,min_clearance_m\n";
  std::size_t collisions = 0;
  for (std::size_t i = 0; i < jobs; ++i) {
    const auto& w = worlds[i / trials];
    const auto& r = results[i];
    tiers.push_back(w.difficulty);
    collisions += r.outcome == Outcome::collision;
    csv << w.id << ',' << i % trials << ',' << to_string(r.outcome) << ',' << num(r.elapsed) << ','
        << num(r.path_length) << ',' << num(r.min_clearance_seen) << '\n';
    if (!r.diagnostic.empty() && r.outcome == Outcome::timeout && r.diagnostic != "time limit reached") {
      result.warnings.push_back(w.id + " trial " + std::to_string(i % trials) + ": " + r.diagnostic);
    }
  }
  const auto summary = success_rate(results, tiers);
  json tier_json = json::object();
  csv << "# success overall " << summary.overall.successes << '/' << summary.overall.total << ' '
      << format_percent(summary.overall.rate()) << '\n';
  for (const auto& [d, t] : summary.tiers) {
    csv << "# success " << to_string(d) << ' ' << t.successes << '/' << t.total << ' '
        << format_percent(t.rate()) << '\n';
    tier_json[to_string(d)] = {{"successes", t.successes}, {"total", t.total},
                               {"rate", format_percent(t.rate())}};
  }
  auto out = open_out(out_path);
  out << csv.str();

  if (!record_dir.empty()) {
    for (std::size_t w = 0; w < worlds.size(); ++w) {
      WorldSpec rec = worlds[w];
      rec.recorded_actions.clear();
      for (const auto& s : traces[w * trials]) rec.recorded_actions.push_back(s.command);
      write_world(fs::path(record_dir) / (rec.id + ".json"), rec, m);
    }
  }
  if (!options.plot_dir.empty()) {
    auto tf = open_out((fs::path(options.plot_dir) / "sim_traces.csv").string());
    tf << csv_comment_header("simulate", m) << "world_id,trial,time,x,y,heading,v,w,clearance,safety\n";
    for (std::size_t i = 0; i < jobs; ++i) {
      for (const auto& s : traces[i]) {
        tf << worlds[i / trials].id << ',' << i % trials << ',' << num(s.time) << ','
           << num(s.pose.x) << ',' << num(s.pose.y) << ',' << num(s.pose.heading) << ','
           << num(s.command.v) << ',' << num(s.command.omega) << ',' << num(s.clearance) << ','
           << (s.intervened ? 1 : 0) << '\n';
      }
    }
  }
  result.summary = {{"worlds", worlds.size()},
                    {"trials", jobs},
                    {"successes", summary.overall.successes},
                    {"collisions", collisions},
                    {"success_rate", format_percent(summary.overall.rate())},
                    {"tiers", tier_json}};
  return result;
}

}  // namespace lfhcp
