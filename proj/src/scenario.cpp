#include "cascade/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "cascade/error.hpp"

namespace cascade {

namespace {

const std::vector<std::pair<SolverKind, std::string_view>> kSolverNames = {
    {SolverKind::FullQuantumSteady, "full-quantum-steady"},
    {SolverKind::FullQuantumMcwf, "full-quantum-mcwf"},
    {SolverKind::Linearized, "linearized"},
};

const std::vector<std::pair<OutputKind, std::string_view>> kOutputNames = {
    {OutputKind::G2, "g2"},           {OutputKind::Wigner, "wigner"},
    {OutputKind::Fidelity, "fidelity"}, {OutputKind::Duan, "duan"},
    {OutputKind::Bistability, "bistability"}, {OutputKind::Populations, "populations"},
};

using LineOf = std::function<int(const std::string&)>;

[[noreturn]] void fail(int line, const std::string& msg) {
  if (line > 0) throw Error(ErrorCode::Config, "line " + std::to_string(line) + ": " + msg);
  throw Error(ErrorCode::Config, msg);
}

int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  if (!map.IsMap()) fail(line_of(map), where + " must be a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(line_of(kv.first), "unknown key '" + key + "' in " + where);
  }
}

template <class T>
T read(const YAML::Node& n, const std::string& what) {
  try {
    return n.as<T>();
  } catch (const YAML::BadConversion&) {
    fail(line_of(n), "type mismatch for '" + what + "'");
  }
}

template <class T>
void read_opt(const YAML::Node& map, const char* key, T& out, const std::string& prefix) {
  if (const auto n = map[key]) out = read<T>(n, prefix + key);
}

AxisSpec read_axis(const YAML::Node& n, const std::string& what) {
  AxisSpec a;
  if (n.IsSequence()) {
    a.values = read<std::vector<double>>(n, what);
    if (a.values.empty()) fail(line_of(n), "sweep axis '" + what + "' is empty");
    return a;
  }
  if (n.IsScalar()) {
    a.values = {read<double>(n, what)};
    return a;
  }
  check_keys(n, {"from", "to", "count"}, what);
  for (const char* k : {"from", "to", "count"})
    if (!n[k]) fail(line_of(n), "sweep axis '" + what + "' needs from, to and count");
  a.from = read<double>(n["from"], what + ".from");
  a.to = read<double>(n["to"], what + ".to");
  a.count = read<int>(n["count"], what + ".count");
  return a;
}

void validate_impl(const Scenario& s, const LineOf& line) {
  const auto& m = s.model;
  if (m.modes < 1) fail(line("model.modes"), "model.modes must be >= 1");
  if (!(m.gamma > 0.0) || !std::isfinite(m.gamma)) fail(line("model.gamma"), "model.gamma must be > 0");
  if (!std::isfinite(m.kerr) || !std::isfinite(m.delta) || !std::isfinite(m.drive))
    fail(line("model"), "model parameters must be finite");
  if (!m.eta.empty() && static_cast<int>(m.eta.size()) != m.modes - 1)
    fail(line("model.eta"), "model.eta needs one entry per link (" + std::to_string(m.modes - 1) + ")");
  for (double e : m.eta)
    if (!(e >= 0.0 && e <= 1.0)) fail(line("model.eta"), "link efficiencies must lie in [0, 1]");

  if (s.outputs.empty()) fail(line("outputs"), "at least one output is required");
  std::set<OutputKind> seen;
  for (auto o : s.outputs)
    if (!seen.insert(o).second) fail(line("outputs"), "duplicate output '" + std::string(to_string(o)) + "'");

  const bool full = s.solver.kind != SolverKind::Linearized;
  if (full) {
    if (s.solver.truncation.empty()) fail(line("solver"), "full-quantum solvers need solver.truncation");
    if (s.solver.truncation.size() != 1 && static_cast<int>(s.solver.truncation.size()) != m.modes)
      fail(line("solver.truncation"), "solver.truncation needs 1 or model.modes entries");
    for (int d : s.solver.truncation)
      if (d < 2) fail(line("solver.truncation"), "truncation must be >= 2 per mode");
    if (s.solver.kind == SolverKind::FullQuantumMcwf) {
      if (s.solver.trajectories < 1) fail(line("solver.trajectories"), "solver.trajectories must be >= 1");
      if (!(s.solver.t_final > 0.0)) fail(line("solver.t_final"), "solver.t_final must be > 0");
      if (!(s.solver.step > 0.0)) fail(line("solver.step"), "solver.step must be > 0");
      for (double e : m.eta)
        if (e != 1.0) fail(line("model.eta"), "the trajectory solver needs a perfect chain (every eta = 1)");
    }
  }
  if (!(s.solver.convergence_tol > 0.0)) fail(line("solver.convergence_tol"), "convergence_tol must be > 0");

  for (auto o : {OutputKind::Wigner, OutputKind::Fidelity})
    if (s.wants(o) && !full)
      fail(line("outputs"), "output '" + std::string(to_string(o)) + "' requires a full-quantum solver");
  if (s.wants(OutputKind::Bistability)) {
    if (full) fail(line("outputs"), "output 'bistability' requires the linearized (mean-field) solver");
    if (!s.sweep.drive) fail(line("sweep"), "output 'bistability' needs a drive sweep axis");
  }
  if (s.wants(OutputKind::Duan)) {
    const auto [a, b] = s.duan_pair;
    if (m.modes < 2) fail(line("outputs"), "output 'duan' needs at least two modes");
    if (a == b) fail(line("duan_pair"), "duan_pair must name two distinct modes");
    if (a < 0 || b < 0 || a >= m.modes || b >= m.modes) fail(line("duan_pair"), "duan_pair mode out of range");
  }
  if (s.wants(OutputKind::Wigner) && (s.wigner.points < 2 || !(s.wigner.extent > 0.0)))
    fail(line("wigner"), "wigner needs points >= 2 and extent > 0");

  if (s.sweep.n_last && s.sweep.drive) fail(line("sweep"), "sweep may set n_last or drive, not both");
  if (!full && !s.sweep.n_last && !s.sweep.drive)
    fail(line("sweep"), "the linearized solver needs an n_last or drive sweep axis");
  auto check_axis = [&](const std::optional<AxisSpec>& a, const std::string& name, bool non_negative) {
    if (!a) return;
    if (a->is_range() && a->count < 1) fail(line("sweep." + name), "sweep axis '" + name + "' is empty");
    for (double v : a->points()) {
      if (!std::isfinite(v)) fail(line("sweep." + name), "sweep axis '" + name + "' has non-finite values");
      if (non_negative && v < 0.0) fail(line("sweep." + name), "sweep axis '" + name + "' must be >= 0");
    }
  };
  check_axis(s.sweep.n_last, "n_last", true);
  check_axis(s.sweep.delta, "delta", false);
  check_axis(s.sweep.drive, "drive", true);
}

void emit_axis(YAML::Emitter& out, const AxisSpec& a) {
  if (a.is_range()) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "from" << YAML::Value << a.from << YAML::Key << "to"
        << YAML::Value << a.to << YAML::Key << "count" << YAML::Value << a.count << YAML::EndMap;
  } else {
    out << YAML::Flow << YAML::BeginSeq;
    for (double v : a.values) out << v;
    out << YAML::EndSeq;
  }
}

}  // namespace

std::string_view to_string(SolverKind s) {
  for (const auto& [k, name] : kSolverNames)
    if (k == s) return name;
  return "unknown";
}

std::string_view to_string(OutputKind o) {
  for (const auto& [k, name] : kOutputNames)
    if (k == o) return name;
  return "unknown";
}

std::vector<double> AxisSpec::points() const {
  if (!is_range()) return values;
  std::vector<double> v;
  if (count == 1) return {from};
  for (int i = 0; i < count; ++i) v.push_back(from + (to - from) * i / (count - 1));
  return v;
}

ChainParams ModelSpec::chain_params() const {
  ChainParams p = ChainParams::chain(modes, gamma, kerr, delta, drive);
  for (std::size_t i = 0; i < eta.size(); ++i) p.eta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = eta[i];
  return p;
}

FockDims SolverSpec::dims(int n_modes, int extra) const {
  std::vector<int> d = truncation.size() == 1 ? std::vector<int>(static_cast<std::size_t>(n_modes), truncation[0])
                                              : truncation;
  for (int& x : d) x += extra;
  return FockDims(d);
}

bool Scenario::wants(OutputKind o) const { return std::find(outputs.begin(), outputs.end(), o) != outputs.end(); }

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    fail(e.mark.line + 1, std::string("malformed document: ") + e.msg);
  }
  if (!root.IsMap()) fail(0, "scenario must be a mapping");
  check_keys(root, {"version", "description", "model", "solver", "sweep", "outputs", "duan_pair", "wigner", "seed",
                    "output_dir"},
             "scenario");

  std::map<std::string, int> lines;
  auto remember = [&](const std::string& key, const YAML::Node& n) {
    if (n) lines[key] = line_of(n);
  };

  Scenario s;
  if (const auto v = root["version"]) {
    if (read<int>(v, "version") != 1) fail(line_of(v), "unsupported scenario version");
  }
  read_opt(root, "description", s.description, "");

  const auto model = root["model"];
  if (!model) fail(0, "missing 'model' section");
  check_keys(model, {"modes", "gamma", "kerr", "delta", "drive", "eta"}, "model");
  remember("model", model);
  for (const char* k : {"modes", "gamma", "kerr", "delta", "drive", "eta"}) remember(std::string("model.") + k, model[k]);
  read_opt(model, "modes", s.model.modes, "model.");
  read_opt(model, "gamma", s.model.gamma, "model.");
  read_opt(model, "kerr", s.model.kerr, "model.");
  read_opt(model, "delta", s.model.delta, "model.");
  read_opt(model, "drive", s.model.drive, "model.");
  if (const auto eta = model["eta"]) {
    if (eta.IsSequence()) {
      s.model.eta = read<std::vector<double>>(eta, "model.eta");
    } else {
      const double e = read<double>(eta, "model.eta");
      if (e != 1.0) s.model.eta.assign(static_cast<std::size_t>(std::max(0, s.model.modes - 1)), e);
    }
  }

  if (const auto solver = root["solver"]) {
    check_keys(solver, {"kind", "truncation", "convergence_check", "convergence_tol", "trajectories", "t_final", "step"},
               "solver");
    remember("solver", solver);
    for (const char* k : {"kind", "truncation", "convergence_tol", "trajectories", "t_final", "step"})
      remember(std::string("solver.") + k, solver[k]);
    if (const auto kind = solver["kind"]) {
      const auto name = read<std::string>(kind, "solver.kind");
      const auto it = std::find_if(kSolverNames.begin(), kSolverNames.end(), [&](const auto& p) { return p.second == name; });
      if (it == kSolverNames.end()) fail(line_of(kind), "unknown solver kind '" + name + "'");
      s.solver.kind = it->first;
    }
    if (const auto t = solver["truncation"]) {
      s.solver.truncation = t.IsSequence() ? read<std::vector<int>>(t, "solver.truncation")
                                           : std::vector<int>{read<int>(t, "solver.truncation")};
    }
    read_opt(solver, "convergence_check", s.solver.convergence_check, "solver.");
    read_opt(solver, "convergence_tol", s.solver.convergence_tol, "solver.");
    read_opt(solver, "trajectories", s.solver.trajectories, "solver.");
    read_opt(solver, "t_final", s.solver.t_final, "solver.");
    read_opt(solver, "step", s.solver.step, "solver.");
  }

  const auto sweep = root["sweep"];
  if (!sweep) fail(0, "missing 'sweep' section");
  check_keys(sweep, {"n_last", "delta", "drive"}, "sweep");
  remember("sweep", sweep);
  if (const auto a = sweep["n_last"]) s.sweep.n_last = read_axis(a, "n_last"), remember("sweep.n_last", a);
  if (const auto a = sweep["delta"]) s.sweep.delta = read_axis(a, "delta"), remember("sweep.delta", a);
  if (const auto a = sweep["drive"]) s.sweep.drive = read_axis(a, "drive"), remember("sweep.drive", a);

  const auto outputs = root["outputs"];
  if (!outputs) fail(0, "missing 'outputs' list");
  if (!outputs.IsSequence()) fail(line_of(outputs), "'outputs' must be a list");
  remember("outputs", outputs);
  for (const auto& o : outputs) {
    const auto name = read<std::string>(o, "outputs");
    const auto it = std::find_if(kOutputNames.begin(), kOutputNames.end(), [&](const auto& p) { return p.second == name; });
    if (it == kOutputNames.end()) fail(line_of(o), "unknown output '" + name + "'");
    s.outputs.push_back(it->first);
  }

  if (const auto dp = root["duan_pair"]) {
    remember("duan_pair", dp);
    const auto v = read<std::vector<int>>(dp, "duan_pair");
    if (v.size() != 2) fail(line_of(dp), "duan_pair needs exactly two modes");
    s.duan_pair = {v[0] - 1, v[1] - 1};
  }
  if (const auto w = root["wigner"]) {
    check_keys(w, {"extent", "points"}, "wigner");
    remember("wigner", w);
    read_opt(w, "extent", s.wigner.extent, "wigner.");
    read_opt(w, "points", s.wigner.points, "wigner.");
  }
  read_opt(root, "seed", s.seed, "");
  read_opt(root, "output_dir", s.output_dir, "");

  validate_impl(s, [&](const std::string& field) {
    for (std::string f = field;; f = f.substr(0, f.rfind('.'))) {
      if (const auto it = lines.find(f); it != lines.end()) return it->second;
      if (f.find('.') == std::string::npos) return 0;
    }
  });
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
}

void validate_scenario(const Scenario& s) {
  validate_impl(s, [](const std::string&) { return 0; });
}

std::string serialize_scenario(const Scenario& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "version" << YAML::Value << 1;
  if (!s.description.empty()) out << YAML::Key << "description" << YAML::Value << s.description;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "modes" << YAML::Value << s.model.modes;
  out << YAML::Key << "gamma" << YAML::Value << s.model.gamma;
  out << YAML::Key << "kerr" << YAML::Value << s.model.kerr;
  out << YAML::Key << "delta" << YAML::Value << s.model.delta;
  out << YAML::Key << "drive" << YAML::Value << s.model.drive;
  if (!s.model.eta.empty()) out << YAML::Key << "eta" << YAML::Value << YAML::Flow << s.model.eta;
  out << YAML::EndMap;

  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(to_string(s.solver.kind));
  if (!s.solver.truncation.empty()) out << YAML::Key << "truncation" << YAML::Value << YAML::Flow << s.solver.truncation;
  out << YAML::Key << "convergence_check" << YAML::Value << s.solver.convergence_check;
  out << YAML::Key << "convergence_tol" << YAML::Value << s.solver.convergence_tol;
  out << YAML::Key << "trajectories" << YAML::Value << s.solver.trajectories;
  out << YAML::Key << "t_final" << YAML::Value << s.solver.t_final;
  out << YAML::Key << "step" << YAML::Value << s.solver.step;
  out << YAML::EndMap;

  out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  if (s.sweep.n_last) out << YAML::Key << "n_last" << YAML::Value, emit_axis(out, *s.sweep.n_last);
  if (s.sweep.delta) out << YAML::Key << "delta" << YAML::Value, emit_axis(out, *s.sweep.delta);
  if (s.sweep.drive) out << YAML::Key << "drive" << YAML::Value, emit_axis(out, *s.sweep.drive);
  out << YAML::EndMap;

  out << YAML::Key << "outputs" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto o : s.outputs) out << std::string(to_string(o));
  out << YAML::EndSeq;
  out << YAML::Key << "duan_pair" << YAML::Value << YAML::Flow << YAML::BeginSeq << s.duan_pair.first + 1
      << s.duan_pair.second + 1 << YAML::EndSeq;
  out << YAML::Key << "wigner" << YAML::Value << YAML::BeginMap << YAML::Key << "extent" << YAML::Value
      << s.wigner.extent << YAML::Key << "points" << YAML::Value << s.wigner.points << YAML::EndMap;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "output_dir" << YAML::Value << s.output_dir;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace cascade
