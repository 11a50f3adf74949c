#include <cmath>
#include <limits>

#include "acceptance.hpp"
#include "dcabc/error.hpp"
#include "dcabc/experiment.hpp"
#include "dcabc/lookahead.hpp"
#include "dcabc/synthetic_likelihood.hpp"

namespace dcabc::acceptance {

namespace {

struct GuardProbe {
  SlEstimate sl;
  bool failed = false;  // the particle system itself degenerated
};

// Mirrors one sampler attempt: lookahead SIS, one backward draw as s_eval,
// then the synthetic-likelihood ratio, on the attempt's stream layout.
GuardProbe probe(const ExperimentConfig& cfg, const SdeModel& model, const Trajectory& obs, const TimeGrid& grid,
                 const SummaryStatistic& summary, const ParamVector& theta, int P, StreamKey attempt) {
  GuardProbe out;
  try {
    const ParticleSystem sys = run_lookahead_sis(model, theta, obs, grid, P, cfg.sampler.weighting,
                                                 cfg.sampler.scheme, attempt.child(1));
    const BackwardSampler sampler(sys, model, cfg.sampler.backward);
    Engine bwd = attempt.child(2).engine();
    const Eigen::VectorXd s_eval = summary.summarize(sampler.sample(bwd));
    Engine syn = attempt.child(3).engine();
    out.sl = sl_log_ratio(sampler, s_eval, summary, P, cfg.sampler.guards, syn);
  } catch (const DegenerateSystem&) {
    out.failed = true;
  } catch (const DegenerateBackward&) {
    out.failed = true;
  }
  return out;
}

}  // namespace

Outcome criterion_3(const Context& ctx) {
  Stopwatch clock;
  Verdict v;
  ExperimentConfig cfg = load_config(ctx.source_dir / "configs" / "ou.json");
  cfg.summary.kind = SummaryConfig::Kind::Plugin;
  cfg.subintervals = 10;
  const int P = 20;
  const auto model = build_model(cfg);
  const auto summaries = build_summaries(cfg, nullptr);
  const SummaryPtr summary = summaries->current();

  {
    const Trajectory obs = build_observation(cfg, *model);
    const TimeGrid grid = build_grid(cfg, obs);
    ParamVector poor(3);
    poor << 15, 5, 2;
    const GuardProbe g = probe(cfg, *model, obs, grid, *summary, poor, P, StreamKey(cfg.sampler.seed).child(1).child(0));
    const double weight =
        g.failed ? -std::numeric_limits<double>::infinity() : smc_weight_dc(poor, nullptr, nullptr, model->prior(), g.sl);
    v.note("poor_bwd_condition", g.failed ? std::numeric_limits<double>::infinity() : g.sl.bwd_condition)
        .note("poor_status", g.failed ? "degenerate-system" : to_string(g.sl.status));
    v.check(g.failed || g.sl.bwd_condition > 1e3, "condition number at (15,5,2) not above 1e3");
    v.check(weight == -std::numeric_limits<double>::infinity(), "weight at (15,5,2) not zero");
  }

  int quiet = 0;
  const int repeats = 50;
  for (int r = 0; r < repeats; ++r) {
    ExperimentConfig rc = cfg;
    rc.sampler.seed = cfg.sampler.seed + 1 + static_cast<std::uint64_t>(r);
    const Trajectory obs = build_observation(rc, *model);
    const TimeGrid grid = build_grid(rc, obs);
    const GuardProbe g = probe(rc, *model, obs, grid, *summary, rc.theta_true, P, StreamKey(rc.sampler.seed).child(1).child(0));
    if (!g.failed && !g.sl.rejected()) ++quiet;
  }
  v.note("truth_untriggered", std::to_string(quiet) + "/" + std::to_string(repeats));
  v.check(quiet >= 45, "guard triggers too often at the truth");
  v.note("seconds", clock.seconds());
  v.check(clock.seconds() < 60.0, "runtime");
  return v.outcome();
}

}  // namespace dcabc::acceptance
