#include "linresp/response.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "linresp/errors.hpp"

namespace linresp {

namespace {
using nlohmann::json;

json config_json(const ResponseConfig& cfg) {
  return json{{"N", cfg.orbit.N},
              {"A", cfg.orbit.A},
              {"W", cfg.orbit.W},
              {"warmup_segments", cfg.orbit.warmup_segments},
              {"spinup", cfg.orbit.spinup},
              {"seed", cfg.orbit.seed},
              {"gamma", cfg.orbit.gamma},
              {"unstable_override", cfg.unstable_override},
              {"discard_segments", cfg.discard_segments},
              {"solver", cfg.solver == SolverKind::Dense    ? "dense"
                         : cfg.solver == SolverKind::Banded ? "banded"
                                                            : "auto"},
              {"validate", cfg.validate}};
}

json report_data_json(const ResponseReport& rep) {
  return json{{"map", rep.map_name},
              {"observable", rep.observable_name},
              {"unstable_dim", rep.unstable_dim},
              {"derivative", rep.derivative},
              {"shadowing", rep.shadowing},
              {"unstable", rep.unstable},
              {"phi_mean", rep.phi_mean},
              {"lyapunov", rep.lyapunov},
              {"trace_terms", rep.trace_terms},
              {"vmax", rep.vmax},
              {"constraint_residual", rep.constraint_residual},
              {"stationarity_residual", rep.stationarity_residual},
              {"max_start_projection", rep.max_start_projection},
              {"config", config_json(rep.config)}};
}
}  // namespace

int ResponseConfig::resolved_unstable(const MapSystem& sys) const {
  const int u = unstable_override >= 0 ? unstable_override : sys.unstable_dim;
  if (u < 0 || u > sys.dim)
    throw ConfigError("response: unstable dimension " + std::to_string(u) +
                      " outside [0, dim]");
  return u;
}

ResponseReport compute_response(const MapSystem& sys, const Observable& obs,
                                const ResponseConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.orbit.check();
  if (cfg.discard_segments < 0 || cfg.discard_segments >= cfg.orbit.A)
    throw ConfigError("response: discard_segments must lie in [0, A)");

  if (cfg.validate) {
    const ValidationReport v =
        validate_system(sys, obs, cfg.orbit.gamma, cfg.validate_probes,
                        mix_seed(cfg.orbit.seed, 0xa11d));
    if (!v.ok())
      throw ConfigError("response: callback validation failed\n" +
                        v.summary());
  }

  // The sweep tracks sys.unstable_dim directions; apply any override on a
  // copy so the caller's system is untouched.
  MapSystem tracked = sys;
  tracked.unstable_dim = cfg.resolved_unstable(sys);

  const Orbit orbit = generate_orbit(tracked, obs, cfg.orbit);
  const TangentSweep sweep = run_tangent_sweep(tracked, orbit);
  const auto [plain, windowed] = solve_nilss_both(sweep.records, cfg.solver);
  const ShadowingContribution sc =
      shadowing_contribution(tracked, obs, orbit, sweep, plain);
  const UnstableContribution uc = unstable_contribution(
      tracked, orbit, sweep, windowed, cfg.discard_segments);

  ResponseReport rep;
  rep.map_name = sys.name;
  rep.observable_name = obs.name;
  rep.unstable_dim = tracked.unstable_dim;
  rep.shadowing = sc.value;
  rep.unstable = uc.value;
  rep.derivative = rep.shadowing - rep.unstable;
  rep.phi_mean = orbit.phi_mean();
  rep.lyapunov = sweep.lyapunov;
  rep.trace_terms = uc.trace_terms;
  rep.vmax = sc.vmax;
  rep.constraint_residual =
      std::max(plain.constraint_residual, windowed.constraint_residual);
  rep.stationarity_residual =
      std::max(plain.stationarity_residual, windowed.stationarity_residual);
  rep.max_start_projection = uc.max_start_projection;
  rep.config = cfg;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

int resolve_threads(int requested, int jobs) {
  int t = requested;
  if (t <= 0) {
    if (const char* env = std::getenv("LINRESP_THREADS")) t = std::atoi(env);
  }
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  if (t <= 0) t = 1;
  return std::max(1, std::min(t, jobs));
}

ReplicaSet replicate(const MapSystem& sys, const Observable& obs,
                     const ResponseConfig& cfg, int reps, int threads) {
  if (reps < 1) throw ConfigError("replicate: reps must be >= 1");

  ReplicaSet set;
  set.reports.resize(static_cast<std::size_t>(reps));
  set.errors.resize(static_cast<std::size_t>(reps));
  set.seeds.resize(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i)
    set.seeds[static_cast<std::size_t>(i)] =
        mix_seed(cfg.orbit.seed, static_cast<std::uint64_t>(i));

  const int workers = resolve_threads(threads, reps);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= reps) return;
      ResponseConfig local = cfg;
      local.orbit.seed = set.seeds[static_cast<std::size_t>(i)];
      try {
        set.reports[static_cast<std::size_t>(i)] =
            compute_response(sys, obs, local);
      } catch (const std::exception& e) {
        set.errors[static_cast<std::size_t>(i)] = e.what();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::vector<double> derivs;
  for (int i = 0; i < reps; ++i) {
    if (set.errors[static_cast<std::size_t>(i)].empty())
      derivs.push_back(set.reports[static_cast<std::size_t>(i)].derivative);
    else
      ++set.failures;
  }
  if (derivs.empty())
    throw ConditioningError("replicate: every replica failed; first error: " +
                            set.errors[0]);
  const MeanStd ms = mean_std(derivs);
  set.derivative_mean = ms.mean;
  set.derivative_std = ms.std;
  return set;
}

std::string report_to_json(const ResponseReport& rep) {
  json j;
  j["data"] = report_data_json(rep);
  j["meta"] = json{{"wall_seconds", rep.wall_seconds}};
  return j.dump(2);
}

std::string replica_set_to_json(const ReplicaSet& set) {
  json replicas = json::array();
  double wall = 0.0;
  for (std::size_t i = 0; i < set.reports.size(); ++i) {
    if (set.errors[i].empty()) {
      replicas.push_back(report_data_json(set.reports[i]));
      wall += set.reports[i].wall_seconds;
    } else {
      replicas.push_back(nullptr);
    }
  }
  json j;
  j["data"] = json{{"replicas", replicas},
                   {"seeds", set.seeds},
                   {"errors", set.errors},
                   {"derivative_mean", set.derivative_mean},
                   {"derivative_std", set.derivative_std},
                   {"failures", set.failures}};
  j["meta"] = json{{"wall_seconds_total", wall}};
  return j.dump(2);
}

}  // namespace linresp
