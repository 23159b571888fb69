#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "cascade/error.hpp"
#include "cascade/liouvillian.hpp"

namespace cascade {

namespace {

using Vec = Eigen::VectorXcd;

constexpr int kBlockSize = 32;

struct Propagator {
  SparseMatrix generator;  // -i (h_eff - i/2 sum c^+ c)

  Vec rk4(const Vec& psi, double h) const {
    const Vec k1 = generator * psi;
    const Vec k2 = generator * (psi + 0.5 * h * k1);
    const Vec k3 = generator * (psi + 0.5 * h * k2);
    const Vec k4 = generator * (psi + h * k3);
    return psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

struct TrajectoryResult {
  DenseMatrix rho;                // sum over sample times of |psi><psi|
  std::vector<cplx> observables;  // averaged over sample times
  std::size_t jumps = 0;
};

class TrajectoryRunner {
public:
  TrajectoryRunner(const LindbladForm& lf, const Vec& psi0, std::vector<double> sample_times,
                   const std::vector<FockOperator>& observables, const McwfOptions& opts)
      : jumps_(lf.jumps), psi0_(psi0 / psi0.norm()), samples_(std::move(sample_times)),
        observables_(observables), opts_(opts) {
    SparseMatrix hnh = lf.h_eff.matrix();
    for (const auto& c : jumps_) hnh -= cplx(0.0, 0.5) * SparseMatrix(c.matrix().adjoint() * c.matrix());
    prop_.generator = cplx(0.0, -1.0) * hnh;
    prop_.generator.makeCompressed();
  }

  TrajectoryResult run(std::uint64_t seed, bool keep_rho) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const auto n = psi0_.size();

    TrajectoryResult res;
    if (keep_rho) res.rho = DenseMatrix::Zero(n, n);
    res.observables.assign(observables_.size(), 0.0);

    Vec psi = psi0_;
    double threshold = uniform(rng);
    double t = 0.0;
    for (double target : samples_) {
      while (t < target) {
        const double h = std::min(opts_.step, target - t);
        Vec trial = prop_.rk4(psi, h);
        if (jumps_.empty() || trial.squaredNorm() > threshold) {
          psi = std::move(trial);
          t += h;
          continue;
        }
        // Step halving until the crossing time is bracketed to the requested tolerance.
        double lo = 0.0, hi = h;
        const double tol = opts_.jump_time_rel_tol * opts_.step;
        while (hi - lo > tol) {
          const double mid = 0.5 * (lo + hi);
          if (prop_.rk4(psi, mid).squaredNorm() > threshold) lo = mid;
          else hi = mid;
        }
        psi = prop_.rk4(psi, hi);
        t += hi;
        apply_jump(psi, rng, uniform);
        ++res.jumps;
        threshold = uniform(rng);
      }
      const Vec unit = psi / psi.norm();
      if (keep_rho) res.rho.noalias() += unit * unit.adjoint();
      for (std::size_t o = 0; o < observables_.size(); ++o)
        res.observables[o] += unit.dot(observables_[o].matrix() * unit);
    }
    for (auto& v : res.observables) v /= static_cast<double>(samples_.size());
    return res;
  }

private:
  void apply_jump(Vec& psi, std::mt19937_64& rng, std::uniform_real_distribution<double>& uniform) const {
    std::vector<double> weights(jumps_.size());
    std::vector<Vec> images(jumps_.size());
    double total = 0.0;
    for (std::size_t c = 0; c < jumps_.size(); ++c) {
      images[c] = jumps_[c].matrix() * psi;
      weights[c] = images[c].squaredNorm();
      total += weights[c];
    }
    if (!(total > 0.0)) {
      if (psi.squaredNorm() < 1e-12) {
        throw Error(ErrorCode::IntegratorFailure, "state norm collapsed with no jump channel available");
      }
      throw Error(ErrorCode::IntegratorFailure, "jump requested but every channel annihilates the state");
    }
    double pick = uniform(rng) * total;
    std::size_t chosen = jumps_.size() - 1;
    for (std::size_t c = 0; c < jumps_.size(); ++c) {
      if (pick < weights[c]) {
        chosen = c;
        break;
      }
      pick -= weights[c];
    }
    psi = images[chosen] / std::sqrt(weights[chosen]);
  }

  const std::vector<FockOperator>& jumps_;
  Vec psi0_;
  std::vector<double> samples_;
  const std::vector<FockOperator>& observables_;
  McwfOptions opts_;
  Propagator prop_;
};

}  // namespace

McwfSamples mcwf_sample(const LindbladForm& lf, const Eigen::VectorXcd& psi0, double t_final, int n_traj,
                        std::uint64_t seed, const std::vector<FockOperator>& observables,
                        const McwfOptions& opts) {
  const auto n = static_cast<Eigen::Index>(lf.h_eff.dims().total());
  if (n_traj < 1) throw Error(ErrorCode::InvalidParameter, "n_traj must be >= 1");
  if (!(t_final >= 0.0)) throw Error(ErrorCode::InvalidParameter, "t_final must be >= 0");
  if (!(opts.step > 0.0)) throw Error(ErrorCode::InvalidParameter, "step must be > 0");
  if (psi0.size() != n) throw Error(ErrorCode::DimensionMismatch, "psi0 length does not match h_eff");
  if (psi0.norm() == 0.0) throw Error(ErrorCode::InvalidParameter, "psi0 is the zero vector");
  for (const auto& c : lf.jumps)
    if (!(c.dims() == lf.h_eff.dims())) throw Error(ErrorCode::DimensionMismatch, "jump operator dims differ");
  for (const auto& o : observables)
    if (!(o.dims() == lf.h_eff.dims())) throw Error(ErrorCode::DimensionMismatch, "observable dims differ");

  std::vector<double> samples = opts.sample_times.empty() ? std::vector<double>{t_final} : opts.sample_times;
  if (!std::is_sorted(samples.begin(), samples.end()) || samples.front() < 0.0 || samples.back() > t_final) {
    throw Error(ErrorCode::InvalidParameter, "sample times must be sorted and lie in [0, t_final]");
  }

  const TrajectoryRunner runner(lf, psi0, samples, observables, opts);
  const int n_blocks = (n_traj + kBlockSize - 1) / kBlockSize;

  McwfSamples out{DensityMatrix::pure(lf.h_eff.dims(), psi0), {}, 0};
  out.samples.assign(observables.size(), std::vector<cplx>(static_cast<std::size_t>(n_traj)));
  DenseMatrix total = DenseMatrix::Zero(n, n);

  // Blocks finish in any order but are folded into `total` strictly in block
  // order, so the floating-point sum does not depend on scheduling.
  std::mutex mtx;
  std::map<int, DenseMatrix> pending;
  int next_to_merge = 0;
  std::atomic<int> next_block{0};
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const int b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      {
        std::lock_guard lock(mtx);
        if (failure) return;
      }
      try {
        DenseMatrix block = DenseMatrix::Zero(n, n);
        std::size_t block_jumps = 0;
        const int first = b * kBlockSize;
        const int last = std::min(n_traj, first + kBlockSize);
        for (int tr = first; tr < last; ++tr) {
          auto res = runner.run(seed + static_cast<std::uint64_t>(tr), true);
          block += res.rho;
          block_jumps += res.jumps;
          for (std::size_t o = 0; o < observables.size(); ++o)
            out.samples[o][static_cast<std::size_t>(tr)] = res.observables[o];
        }
        std::lock_guard lock(mtx);
        out.jumps += block_jumps;
        pending.emplace(b, std::move(block));
        while (!pending.empty() && pending.begin()->first == next_to_merge) {
          total += pending.begin()->second;
          pending.erase(pending.begin());
          ++next_to_merge;
        }
      } catch (...) {
        std::lock_guard lock(mtx);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.threads;
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n_blocks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  out.rho = DensityMatrix(lf.h_eff.dims(), hermitize_normalized(total));
  return out;
}

DensityMatrix mcwf_run(const LindbladForm& lf, const Eigen::VectorXcd& psi0, double t_final, int n_traj,
                       std::uint64_t seed, const McwfOptions& opts) {
  return mcwf_sample(lf, psi0, t_final, n_traj, seed, {}, opts).rho;
}

}  // namespace cascade
