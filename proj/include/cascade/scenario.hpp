#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cascade/liouvillian.hpp"

namespace cascade {

enum class SolverKind { FullQuantumSteady, FullQuantumMcwf, Linearized };
enum class OutputKind { G2, Wigner, Fidelity, Duan, Bistability, Populations };

std::string_view to_string(SolverKind s);
std::string_view to_string(OutputKind o);

/// Grid along one sweep axis: either explicit values or `count` points from `from` to `to`.
struct AxisSpec {
  std::vector<double> values;
  double from = 0.0;
  double to = 0.0;
  int count = 0;

  bool is_range() const { return values.empty(); }
  std::vector<double> points() const;
  bool operator==(const AxisSpec&) const = default;
};

struct ModelSpec {
  int modes = 1;
  double gamma = 1.0;
  double kerr = 0.0;
  double delta = 0.0;
  double drive = 0.0;
  /// Efficiency of each link m -> m+1; empty means a perfect chain.
  std::vector<double> eta;

  ChainParams chain_params() const;
  bool operator==(const ModelSpec&) const = default;
};

struct SolverSpec {
  SolverKind kind = SolverKind::Linearized;
  /// Per-mode Fock truncation (full-quantum only); one entry means all modes.
  std::vector<int> truncation;
  bool convergence_check = true;
  /// |value(d) - value(d + 2)| below this marks a point converged.
  double convergence_tol = 1e-3;
  int trajectories = 500;
  double t_final = 50.0;
  double step = 0.01;

  FockDims dims(int n_modes, int extra = 0) const;
  bool operator==(const SolverSpec&) const = default;
};

struct SweepSpec {
  std::optional<AxisSpec> n_last;
  std::optional<AxisSpec> delta;
  std::optional<AxisSpec> drive;
  bool operator==(const SweepSpec&) const = default;
};

struct WignerSpec {
  double extent = 3.0;
  int points = 61;
  bool operator==(const WignerSpec&) const = default;
};

struct Scenario {
  std::string description;
  ModelSpec model;
  SolverSpec solver;
  SweepSpec sweep;
  std::vector<OutputKind> outputs;
  /// 0-based internally; written 1-based in configuration files.
  std::pair<int, int> duan_pair{0, 1};
  WignerSpec wigner;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  bool wants(OutputKind o) const;
  bool operator==(const Scenario&) const = default;
};

/// Parses a YAML scenario document. Errors carry ErrorCode::Config and a
/// "line N:" prefix pointing at the offending entry.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// YAML with full double precision, so that parse(serialize(s)) == s.
std::string serialize_scenario(const Scenario& s);

/// Cross-field checks shared by the parser and programmatic construction.
void validate_scenario(const Scenario& s);

}  // namespace cascade
