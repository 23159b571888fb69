#include "cascade/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cascade/error.hpp"
#include "cascade/fluctuations.hpp"
#include "cascade/meanfield.hpp"
#include "cascade/observables.hpp"

namespace cascade {

namespace {

namespace fs = std::filesystem;
using Values = std::map<std::string, double>;

constexpr const char* kMissing = "NA";

std::string mode_col(const char* stem, int m) { return std::string(stem) + "_" + std::to_string(m + 1); }

std::string format_number(double v) {
  if (!std::isfinite(v)) return kMissing;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join(const std::vector<std::string>& cells, char sep) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += sep;
    out += cells[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void note(std::vector<std::string>& reasons, const std::string& what, const Error& e) {
  reasons.push_back(what + ":" + std::string(to_string(e.code())));
}

struct PointResult {
  Values values;
  std::vector<std::string> reasons;
  std::string converged = "n/a";
  bool solver_failed = false;
  double drive = std::nan("");
};

PointResult evaluate_linearized(const Scenario& s, const GridPoint& pt) {
  PointResult r;
  const int n = s.model.modes;
  ChainParams p = s.model.chain_params();
  p.delta = pt.delta;
  const bool duan = s.wants(OutputKind::Duan);

  std::optional<FluctuationModel> model;
  try {
    ClassicalFixedPoint fp;
    if (pt.n_last) {
      double f = 0.0;
      fp = fixed_point_from_last_population(*pt.n_last, p, n, &f);
      r.drive = f;
    } else {
      r.drive = *pt.drive;
      p.drive = *pt.drive;
      const auto all = chain_fixed_points(*pt.drive, p);
      int stable = 0;
      const ClassicalFixedPoint* lowest = nullptr;
      for (const auto& b : all) {
        if (!b.all_stable()) continue;
        ++stable;
        if (!lowest || b.populations < lowest->populations) lowest = &b;
      }
      if (s.wants(OutputKind::Bistability)) r.values["stable_branches"] = stable;
      if (!lowest) throw Error(ErrorCode::UnstablePoint, "no stable fixed point");
      fp = *lowest;
    }
    for (int m = 0; m < n; ++m) r.values[mode_col("n", m)] = fp.populations[static_cast<std::size_t>(m)];
    if (s.wants(OutputKind::G2) || duan) model = linearize(fp, p);
  } catch (const Error& e) {
    note(r.reasons, "linearize", e);
    r.solver_failed = true;
    return r;
  }
  if (model && s.wants(OutputKind::G2))
    for (int m = 0; m < n; ++m) r.values[mode_col("g2", m)] = g2_linearized(*model, m);
  if (model && duan) {
    r.values["duan"] = duan_witness_linearized(*model, s.duan_pair);
    r.values["duan_operator_form"] = duan_witness_moments(*model, s.duan_pair);
  }
  return r;
}

Values full_quantum_values(const Scenario& s, const GridPoint& pt, double drive, int extra,
                           std::vector<std::string>& reasons, const std::string* image_dir) {
  const int n = s.model.modes;
  ChainParams p = s.model.chain_params();
  p.delta = pt.delta;
  p.drive = drive;
  const FockDims dims = s.solver.dims(n, extra);

  std::optional<DensityMatrix> rho;
  if (s.solver.kind == SolverKind::FullQuantumSteady) {
    rho = steady_state(build_cascade_liouvillian(p, dims));
  } else {
    McwfOptions mo;
    mo.step = s.solver.step;
    mo.threads = 1;
    for (int i = 0; i <= 20; ++i) mo.sample_times.push_back(s.solver.t_final * (0.5 + 0.5 * i / 20.0));
    Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dims.total()));
    vac(0) = 1.0;
    rho = mcwf_run(lindblad_recast(p, dims), vac, s.solver.t_final, s.solver.trajectories,
                   mix_seed(s.seed, pt.index), mo);
  }

  Values v;
  for (int m = 0; m < n; ++m) v[mode_col("n", m)] = population(*rho, m);
  if (s.wants(OutputKind::G2))
    for (int m = 0; m < n; ++m) try {
        v[mode_col("g2", m)] = g2_from_rho(*rho, m);
      } catch (const Error& e) {
        note(reasons, mode_col("g2", m), e);
      }
  const bool per_mode = s.wants(OutputKind::Fidelity) || s.wants(OutputKind::Wigner);
  for (int m = 0; per_mode && m < n; ++m) {
    const DensityMatrix r = n == 1 ? *rho : partial_trace(*rho, m);
    if (s.wants(OutputKind::Fidelity)) v[mode_col("fidelity", m)] = fidelity_single_photon(r);
    if (s.wants(OutputKind::Wigner)) {
      const auto axis = linspace(-s.wigner.extent, s.wigner.extent, s.wigner.points);
      const auto w = wigner(r, axis, axis);
      v[mode_col("wigner_min", m)] = w.min_value();
      v[mode_col("wigner_negative_volume", m)] = w.negative_volume();
      if (image_dir)
        write_wigner_ppm((fs::path(*image_dir) / ("wigner_" + std::to_string(pt.index) + "_" + std::to_string(m + 1) + ".ppm")).string(),
                         w.values);
    }
  }
  if (s.wants(OutputKind::Duan)) {
    const auto scan = duan_witness_from_rho(*rho, s.duan_pair);
    v["duan"] = scan.e_min;
    v["duan_phi"] = scan.phi_min;
  }
  return v;
}

PointResult evaluate_full(const Scenario& s, const GridPoint& pt, const std::string* image_dir) {
  PointResult r;
  try {
    if (pt.drive) {
      r.drive = *pt.drive;
    } else if (pt.n_last) {
      ChainParams p = s.model.chain_params();
      p.delta = pt.delta;
      double f = 0.0;
      fixed_point_from_last_population(*pt.n_last, p, s.model.modes, &f);
      r.drive = f;
    } else {
      r.drive = s.model.drive;
    }
    r.values = full_quantum_values(s, pt, r.drive, 0, r.reasons, image_dir);
  } catch (const Error& e) {
    note(r.reasons, "solver", e);
    r.solver_failed = true;
    return r;
  }
  if (!s.solver.convergence_check) {
    r.converged = "unchecked";
    return r;
  }
  try {
    std::vector<std::string> ignored;
    const Values bigger = full_quantum_values(s, pt, r.drive, 2, ignored, nullptr);
    double worst = 0.0;
    for (const auto& [k, val] : r.values) {
      if (k == "duan_phi") continue;
      if (const auto it = bigger.find(k); it != bigger.end()) worst = std::max(worst, std::abs(it->second - val));
    }
    r.converged = worst < s.solver.convergence_tol ? "yes" : "no";
  } catch (const Error& e) {
    r.converged = "unknown";
    note(r.reasons, "convergence", e);
  }
  return r;
}

std::vector<std::string> evaluate(const Scenario& s, const GridPoint& pt, const std::string* image_dir) {
  const PointResult r = s.solver.kind == SolverKind::Linearized ? evaluate_linearized(s, pt) : evaluate_full(s, pt, image_dir);
  std::vector<std::string> cells;
  for (const auto& col : table_columns(s)) {
    if (col == "index") {
      cells.push_back(std::to_string(pt.index));
    } else if (col == "n_last") {
      cells.push_back(format_number(*pt.n_last));
    } else if (col == "delta") {
      cells.push_back(format_number(pt.delta));
    } else if (col == "drive") {
      cells.push_back(format_number(r.drive));
    } else if (col == "converged") {
      cells.push_back(r.converged);
    } else if (col == "status") {
      cells.push_back(r.solver_failed ? "failed" : (r.reasons.empty() ? "ok" : "partial"));
    } else if (col == "reason") {
      cells.push_back(r.reasons.empty() ? "-" : join(r.reasons, ';'));
    } else {
      const auto it = r.values.find(col);
      cells.push_back(it == r.values.end() ? kMissing : format_number(it->second));
    }
  }
  return cells;
}

// Appends rows strictly in index order, whatever order workers finish in.
class OrderedWriter {
public:
  OrderedWriter(std::ofstream& out, std::size_t next) : out_(out), next_(next) {}

  void submit(std::size_t index, std::string line) {
    std::lock_guard lock(mtx_);
    pending_.emplace(index, std::move(line));
    while (!pending_.empty() && pending_.begin()->first == next_) {
      out_ << pending_.begin()->second << '\n';
      pending_.erase(pending_.begin());
      ++next_;
    }
    out_.flush();
  }

private:
  std::ofstream& out_;
  std::size_t next_;
  std::mutex mtx_;
  std::map<std::size_t, std::string> pending_;
};

// Number of complete rows already present, or nullopt if the table must be rewritten.
std::optional<std::size_t> completed_prefix(const fs::path& table, const std::string& header,
                                            const std::vector<GridPoint>& points) {
  std::ifstream in(table, std::ios::binary);
  if (!in) return std::nullopt;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto first_nl = content.find('\n');
  if (first_nl == std::string::npos || content.substr(0, first_nl) != header) return std::nullopt;
  std::size_t done = 0;
  std::size_t pos = first_nl + 1;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    if (nl == std::string::npos) break;
    const auto cells = split(content.substr(pos, nl - pos), '\t');
    if (done >= points.size() || cells.empty() || cells[0] != std::to_string(points[done].index)) break;
    ++done;
    pos = nl + 1;
  }
  fs::resize_file(table, pos);
  return done;
}

void rgb(std::vector<unsigned char>& px, double r, double g, double b) {
  px.push_back(static_cast<unsigned char>(std::clamp(r, 0.0, 1.0) * 255.0 + 0.5));
  px.push_back(static_cast<unsigned char>(std::clamp(g, 0.0, 1.0) * 255.0 + 0.5));
  px.push_back(static_cast<unsigned char>(std::clamp(b, 0.0, 1.0) * 255.0 + 0.5));
}

void write_ppm(const std::string& path, int width, int height, const std::vector<unsigned char>& px) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Config, "cannot write " + path);
  out << "P6\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

int upscale(Eigen::Index rows, Eigen::Index cols) {
  const Eigen::Index side = std::max<Eigen::Index>(1, std::max(rows, cols));
  return static_cast<int>(std::max<Eigen::Index>(1, (400 + side - 1) / side));
}

}  // namespace

std::vector<GridPoint> grid_points(const Scenario& s) {
  const std::vector<double> deltas = s.sweep.delta ? s.sweep.delta->points() : std::vector<double>{s.model.delta};
  std::vector<GridPoint> out;
  auto push = [&](std::optional<double> n_last, std::optional<double> drive) {
    for (double d : deltas) out.push_back({out.size(), n_last, drive, d});
  };
  if (s.sweep.n_last) {
    for (double n : s.sweep.n_last->points()) push(n, std::nullopt);
  } else if (s.sweep.drive) {
    for (double f : s.sweep.drive->points()) push(std::nullopt, f);
  } else {
    push(std::nullopt, std::nullopt);
  }
  return out;
}

std::vector<std::string> table_columns(const Scenario& s) {
  const int n = s.model.modes;
  const bool full = s.solver.kind != SolverKind::Linearized;
  std::vector<std::string> c{"index"};
  if (s.sweep.n_last) c.emplace_back("n_last");
  c.emplace_back("delta");
  c.emplace_back("drive");
  if (s.wants(OutputKind::Populations) || s.wants(OutputKind::Bistability))
    for (int m = 0; m < n; ++m) c.push_back(mode_col("n", m));
  if (s.wants(OutputKind::Bistability)) c.emplace_back("stable_branches");
  if (s.wants(OutputKind::G2))
    for (int m = 0; m < n; ++m) c.push_back(mode_col("g2", m));
  if (s.wants(OutputKind::Fidelity))
    for (int m = 0; m < n; ++m) c.push_back(mode_col("fidelity", m));
  if (s.wants(OutputKind::Wigner))
    for (int m = 0; m < n; ++m) {
      c.push_back(mode_col("wigner_min", m));
      c.push_back(mode_col("wigner_negative_volume", m));
    }
  if (s.wants(OutputKind::Duan)) {
    c.emplace_back("duan");
    c.emplace_back(full ? "duan_phi" : "duan_operator_form");
  }
  c.emplace_back("converged");
  c.emplace_back("status");
  c.emplace_back("reason");
  return c;
}

std::vector<std::string> evaluate_point(const Scenario& s, const GridPoint& point) {
  return evaluate(s, point, nullptr);
}

void write_heatmap_ppm(const std::string& path, const Eigen::MatrixXd& values, double level) {
  const auto rows = values.rows(), cols = values.cols();
  if (rows == 0 || cols == 0) throw Error(ErrorCode::EmptyGrid, "heatmap needs a non-empty grid");
  // Log-ratio colour scale, clipped at the 98th percentile so that a few
  // diverging points near an instability do not wash out the map.
  std::vector<double> dev;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (std::isfinite(values(i, j)) && values(i, j) > 0.0) dev.push_back(std::abs(std::log(values(i, j) / level)));
  double span = 1.0;
  if (!dev.empty()) {
    const auto q = dev.begin() + static_cast<std::ptrdiff_t>(0.98 * static_cast<double>(dev.size() - 1));
    std::nth_element(dev.begin(), q, dev.end());
    if (*q > 0.0) span = *q;
  }

  auto side = [&](Eigen::Index i, Eigen::Index j) {
    const double v = values(i, j);
    return std::isfinite(v) ? (v < level ? -1 : 1) : 0;
  };
  const int k = upscale(rows, cols);
  std::vector<unsigned char> px;
  px.reserve(static_cast<std::size_t>(rows * cols * k * k * 3));
  for (Eigen::Index yy = rows * k - 1; yy >= 0; --yy) {
    const Eigen::Index i = yy / k;
    for (Eigen::Index xx = 0; xx < cols * k; ++xx) {
      const Eigen::Index j = xx / k;
      const double v = values(i, j);
      const int here = side(i, j);
      bool contour = false;
      if (here != 0) {
        if (i + 1 < rows && side(i + 1, j) == -here) contour = true;
        if (j + 1 < cols && side(i, j + 1) == -here) contour = true;
      }
      if (contour) {
        rgb(px, 0, 0, 0);
      } else if (!std::isfinite(v)) {
        rgb(px, 0.6, 0.6, 0.6);
      } else {
        const double t = v > 0.0 ? std::min(1.0, std::abs(std::log(v / level)) / span) : 1.0;
        if (v < level) rgb(px, 1.0 - t, 1.0 - 0.6 * t, 1.0);
        else rgb(px, 1.0, 1.0 - 0.8 * t, 1.0 - t);
      }
    }
  }
  write_ppm(path, static_cast<int>(cols * k), static_cast<int>(rows * k), px);
}

void write_wigner_ppm(const std::string& path, const Eigen::MatrixXd& values) {
  // values(i, j): x_i horizontal, p_j vertical; the heatmap wants rows = vertical.
  Eigen::MatrixXd img = values.transpose();
  const double peak = std::max(1e-300, img.cwiseAbs().maxCoeff());
  const auto rows = img.rows(), cols = img.cols();
  const int k = upscale(rows, cols);
  std::vector<unsigned char> px;
  for (Eigen::Index yy = rows * k - 1; yy >= 0; --yy)
    for (Eigen::Index xx = 0; xx < cols * k; ++xx) {
      const double t = img(yy / k, xx / k) / peak;
      if (t >= 0.0) rgb(px, 1.0, 1.0 - t, 1.0 - t);
      else rgb(px, 1.0 + t, 1.0 + t, 1.0);
    }
  write_ppm(path, static_cast<int>(cols * k), static_cast<int>(rows * k), px);
}

RunReport run_scenario(const Scenario& scenario, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  Scenario s = scenario;
  if (opts.out_dir) s.output_dir = *opts.out_dir;
  if (opts.seed) s.seed = *opts.seed;
  validate_scenario(s);

  const fs::path dir(s.output_dir);
  fs::create_directories(dir);
  const fs::path table = dir / "results.tsv";
  const auto columns = table_columns(s);
  const std::string header = join(columns, '\t');
  const auto points = grid_points(s);

  RunReport report;
  report.table_path = table.string();
  report.manifest_path = (dir / "manifest.json").string();
  report.rows = points.size();

  const std::size_t done = completed_prefix(table, header, points).value_or(0);
  report.resumed_rows = done;
  std::ofstream out;
  if (done > 0) {
    out.open(table, std::ios::binary | std::ios::app);
  } else {
    out.open(table, std::ios::binary | std::ios::trunc);
    out << header << '\n';
  }
  if (!out) throw Error(ErrorCode::Config, "cannot write " + table.string());

  const std::string image_dir = (dir / "images").string();
  if (opts.render) fs::create_directories(image_dir);
  const std::string* images = opts.render && s.wants(OutputKind::Wigner) ? &image_dir : nullptr;

  OrderedWriter writer(out, done);
  std::atomic<std::size_t> next{done};
  std::mutex fail_mtx;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      try {
        writer.submit(i, join(evaluate(s, points[i], images), '\t'));
      } catch (...) {
        std::lock_guard lock(fail_mtx);
        if (!failure) failure = std::current_exception();
        next = points.size();
        return;
      }
    }
  };
  unsigned jobs = opts.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.jobs;
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(1, points.size() - done)));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  out.close();
  if (failure) std::rethrow_exception(failure);

  // Re-read the finished table: it is the single source for counts and images.
  std::ifstream in(table);
  std::string line;
  std::getline(in, line);
  const auto status_col = static_cast<std::size_t>(std::find(columns.begin(), columns.end(), "status") - columns.begin());
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) rows.push_back(split(line, '\t'));
  for (const auto& r : rows) {
    if (r.size() > status_col && r[status_col] == "failed") ++report.failed_rows;
    else ++report.ok_rows;
  }

  nlohmann::json manifest;
  nlohmann::json extra = nlohmann::json::object();
  if (s.wants(OutputKind::Bistability)) {
    std::ofstream bt(dir / "bistability.tsv", std::ios::binary);
    std::ofstream ft(dir / "folds.tsv", std::ios::binary);
    std::vector<std::string> bh{"delta", "drive", "branch"};
    for (int m = 0; m < s.model.modes; ++m) bh.push_back(mode_col("n", m));
    bh.emplace_back("stable");
    bt << join(bh, '\t') << '\n';
    ft << "delta\tmode\tjumps\tmultistable_intervals\n";
    const std::vector<double> deltas = s.sweep.delta ? s.sweep.delta->points() : std::vector<double>{s.model.delta};
    for (double d : deltas) {
      ChainParams p = s.model.chain_params();
      p.delta = d;
      const auto scan = bistability_scan(s.sweep.drive->points(), p);
      for (const auto& row : scan)
        for (std::size_t b = 0; b < row.branches.size(); ++b) {
          std::vector<std::string> cells{format_number(d), format_number(row.drive), std::to_string(b)};
          for (double n : row.branches[b].populations) cells.push_back(format_number(n));
          cells.emplace_back(row.branches[b].all_stable() ? "1" : "0");
          bt << join(cells, '\t') << '\n';
        }
      for (int m = 0; m < s.model.modes; ++m) {
        const int jumps = count_jumps(scan, m);
        const int intervals = count_multistable_intervals(scan, m);
        ft << format_number(d) << '\t' << m + 1 << '\t' << jumps << '\t' << intervals << '\n';
        extra["bistability"].push_back({{"delta", d}, {"mode", m + 1}, {"jumps", jumps}, {"multistable_intervals", intervals}});
      }
    }
  }

  if (opts.render) {
    const std::size_t n_delta = s.sweep.delta ? s.sweep.delta->points().size() : 1;
    const std::size_t n_outer = n_delta ? rows.size() / n_delta : 0;
    std::vector<std::string> heat_cols;
    for (const auto& c : columns)
      if (c.rfind("g2_", 0) == 0 || c == "duan") heat_cols.push_back(c);
    for (const auto& c : heat_cols) {
      if (n_outer == 0) break;
      const auto col = static_cast<std::size_t>(std::find(columns.begin(), columns.end(), c) - columns.begin());
      Eigen::MatrixXd grid(static_cast<Eigen::Index>(n_outer), static_cast<Eigen::Index>(n_delta));
      for (std::size_t i = 0; i < n_outer; ++i)
        for (std::size_t j = 0; j < n_delta; ++j) {
          const auto& cell = rows[i * n_delta + j][col];
          grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cell == kMissing ? std::nan("") : std::stod(cell);
        }
      write_heatmap_ppm((fs::path(image_dir) / (c + ".ppm")).string(), grid, 1.0);
    }
  }

  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.exit_code = (report.rows > 0 && report.failed_rows == report.rows) ? 2 : 0;

  manifest["code_version"] = kCodeVersion;
  manifest["table_schema_version"] = kTableSchemaVersion;
  manifest["scenario"] = serialize_scenario(s);
  manifest["seed"] = s.seed;
  manifest["solver"] = std::string(to_string(s.solver.kind));
  manifest["columns"] = columns;
  manifest["rows"] = report.rows;
  manifest["ok_rows"] = report.ok_rows;
  manifest["failed_rows"] = report.failed_rows;
  manifest["resumed_rows"] = report.resumed_rows;
  manifest["jobs"] = jobs;
  manifest["wall_seconds"] = report.wall_seconds;
  if (s.wants(OutputKind::Wigner)) manifest["wigner_convention"] = kWignerConvention;
  for (auto& [k, v] : extra.items()) manifest[k] = v;
  std::ofstream(report.manifest_path) << manifest.dump(2) << '\n';
  return report;
}

}  // namespace cascade
