#include "linresp/oracle.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "linresp/errors.hpp"
#include "linresp/response.hpp"

namespace linresp {

void FdOracleConfig::check() const {
  if (gamma_grid.size() < 3)
    throw ConfigError("oracle: gamma_grid needs at least 3 values");
  for (std::size_t i = 0; i + 1 < gamma_grid.size(); ++i)
    if (!(gamma_grid[i] < gamma_grid[i + 1]))
      throw ConfigError("oracle: gamma_grid must be sorted and distinct");
  for (double g : gamma_grid)
    if (!std::isfinite(g)) throw ConfigError("oracle: non-finite gamma");
  if (steps_per_run < 1)
    throw ConfigError("oracle: steps_per_run must be >= 1");
  if (runs_per_gamma < 1)
    throw ConfigError("oracle: runs_per_gamma must be >= 1");
  if (spinup < 0) throw ConfigError("oracle: spinup must be >= 0");
}

double long_run_mean(const MapSystem& sys, const Observable& obs, double gamma,
                     long spinup, long steps, std::uint64_t seed) {
  check_system_shape(sys);
  Vec x = uniform_in_box(seed, sys.init_lo, sys.init_hi);
  wrap_state(x, sys.periods);
  for (long k = 0; k < spinup; ++k) {
    x = sys.step(x, gamma);
    if (!x.allFinite())
      throw BlowupError("oracle run blew up during spin-up step " +
                            std::to_string(k),
                        k);
  }
  KahanSum s;
  for (long k = 0; k < steps; ++k) {
    const double v = obs.value(x);
    if (!std::isfinite(v))
      throw BlowupError("oracle run: observable non-finite at step " +
                            std::to_string(k),
                        k);
    s.add(v);
    x = sys.step(x, gamma);
    if (!x.allFinite())
      throw BlowupError("oracle run blew up at step " + std::to_string(k), k);
  }
  return s.value() / static_cast<double>(steps);
}

FdRegression fd_regression(const MapSystem& sys, const Observable& obs,
                           const FdOracleConfig& cfg) {
  cfg.check();
  const int G = static_cast<int>(cfg.gamma_grid.size());
  const int R = cfg.runs_per_gamma;

  // One task per (grid point, run); seeds depend only on the task index so
  // the schedule cannot affect results.
  std::vector<double> run_means(static_cast<std::size_t>(G) * R, 0.0);
  std::vector<char> run_ok(static_cast<std::size_t>(G) * R, 0);
  const int jobs = G * R;
  const int workers = resolve_threads(cfg.threads, jobs);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= jobs) return;
      const int gi = t / R;
      const std::size_t idx = static_cast<std::size_t>(t);
      try {
        run_means[idx] = long_run_mean(
            sys, obs, cfg.gamma_grid[static_cast<std::size_t>(gi)],
            cfg.spinup, cfg.steps_per_run,
            mix_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        run_ok[idx] = 1;
      } catch (const BlowupError&) {
        run_ok[idx] = 0;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  FdRegression reg;
  reg.points.resize(static_cast<std::size_t>(G));
  std::vector<double> xs, ys, ws;
  for (int gi = 0; gi < G; ++gi) {
    FdGridPoint& pt = reg.points[static_cast<std::size_t>(gi)];
    pt.gamma = cfg.gamma_grid[static_cast<std::size_t>(gi)];
    std::vector<double> means;
    bool all_ok = true;
    for (int r = 0; r < R; ++r) {
      const std::size_t idx = static_cast<std::size_t>(gi) * R +
                              static_cast<std::size_t>(r);
      if (run_ok[idx])
        means.push_back(run_means[idx]);
      else
        all_ok = false;
    }
    pt.runs_ok = static_cast<int>(means.size());
    // A grid point is kept only if every run finished; partial data would
    // bias the regression weights.
    pt.ok = all_ok && !means.empty();
    if (pt.ok) {
      const MeanStd ms = mean_std(means);
      pt.mean = ms.mean;
      pt.se = ms.n >= 2 ? ms.std / std::sqrt(static_cast<double>(ms.n)) : 0.0;
      xs.push_back(pt.gamma);
      ys.push_back(pt.mean);
      // Inverse-variance weights, with the standard error floored at double
      // round-off scale: a point measured (effectively) exactly must not
      // turn into an infinite weight and poison the normal equations.
      const double se_floor = 1e-15 * (1.0 + std::abs(pt.mean));
      const double se = std::max(pt.se, se_floor);
      ws.push_back(cfg.weighted ? 1.0 / (se * se) : 1.0);
    }
  }

  if (xs.size() < 3)
    throw ConditioningError(
        "oracle: fewer than 3 grid points survived (blow-ups on the rest); "
        "cannot fit a slope");

  const LineFit fit = cfg.weighted ? fit_line_weighted(xs, ys, ws)
                                   : fit_line(xs, ys);
  reg.slope = fit.slope;
  reg.slope_stderr = fit.slope_stderr;
  reg.intercept = fit.intercept;
  return reg;
}

}  // namespace linresp
