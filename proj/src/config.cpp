#include "perc/config.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "perc/oracle.hpp"
#include "perc/rng.hpp"

namespace perc {

using nlohmann::json;

const char* const kCsvHeader =
    "experiment,model,event,level,r,n,p_hat,ci_low,ci_high,bias,"
    "unresolved_rate,master_seed,rep_lo,rep_hi,wall_ms";

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown field '" + it.key() + "' in " + ctx);
  }
}

PullTable parse_pull(const json& j, const std::string& ctx) {
  if (j.is_number()) return PullTable(j.get<double>());
  check_keys(j, {"constant", "thresholds", "values"}, ctx);
  if (j.contains("constant")) return PullTable(j.at("constant").get<double>());
  return PullTable(j.at("thresholds").get<std::vector<double>>(),
                   j.at("values").get<std::vector<double>>());
}

json pull_to_json(const PullTable& t) {
  // describe() is lossy for tables, so reconstruct from survival jumps is
  // not attempted; tables round-trip via the raw config echo instead.
  json j;
  j["describe"] = t.describe();
  return j;
}

RadiusLaw parse_law(const json& j) {
  check_keys(j,
             {"kind", "rho", "a", "b", "alpha", "xmin", "x0", "truncate_at"},
             "law");
  const std::string kind = j.at("kind").get<std::string>();
  RadiusLaw law = RadiusLaw::constant(1.0);
  if (kind == "constant")
    law = RadiusLaw::constant(j.at("rho").get<double>());
  else if (kind == "uniform")
    law = RadiusLaw::uniform(j.at("a").get<double>(), j.at("b").get<double>());
  else if (kind == "pareto_tail")
    law = RadiusLaw::pareto_tail(j.at("alpha").get<double>(),
                                 j.at("xmin").get<double>());
  else if (kind == "pareto2")
    law = RadiusLaw::pareto2(j.at("xmin").get<double>());
  else if (kind == "log_pareto2")
    law = RadiusLaw::log_pareto2(j.at("x0").get<double>());
  else if (kind == "log_pareto2_alpha")
    law = RadiusLaw::log_pareto2_alpha(j.at("alpha").get<double>(),
                                       j.at("x0").get<double>());
  else
    throw ConfigError("unknown radius law kind: " + kind);
  if (j.contains("truncate_at"))
    law = law.truncated(j.at("truncate_at").get<double>());
  return law;
}

json law_to_json(const RadiusLaw& law) {
  json j;
  switch (law.kind()) {
    case RadiusLaw::Kind::kConstant:
      j = {{"kind", "constant"}, {"rho", law.param_a()}};
      break;
    case RadiusLaw::Kind::kUniform:
      j = {{"kind", "uniform"}, {"a", law.param_a()}, {"b", law.param_b()}};
      break;
    case RadiusLaw::Kind::kParetoTail:
      j = {{"kind", "pareto_tail"},
           {"alpha", law.param_a()},
           {"xmin", law.param_b()}};
      break;
    case RadiusLaw::Kind::kPareto2:
      j = {{"kind", "pareto2"}, {"xmin", law.param_a()}};
      break;
    case RadiusLaw::Kind::kLogPareto2:
      j = {{"kind", "log_pareto2"}, {"x0", law.param_a()}};
      break;
    case RadiusLaw::Kind::kLogPareto2Alpha:
      j = {{"kind", "log_pareto2_alpha"},
           {"alpha", law.param_a()},
           {"x0", law.param_b()}};
      break;
  }
  double cap = 0.0;
  if (law.truncated_at(&cap)) j["truncate_at"] = cap;
  return j;
}

ModelSpec parse_model(const json& j) {
  check_keys(j, {"type", "lambda", "law", "q", "g0", "g1"}, "model");
  const std::string type = j.at("type").get<std::string>();
  if (type == "boolean") {
    BooleanModel m;
    m.lambda = j.at("lambda").get<double>();
    if (m.lambda < 0.0) throw ConfigError("lambda must be >= 0");
    m.law = parse_law(j.at("law"));
    return m;
  }
  const double q = j.at("q").get<double>();
  if (q < 0.0 || q > 1.0) throw ConfigError("q must be in [0,1]");
  PullTable g0 = j.contains("g0") ? parse_pull(j.at("g0"), "g0") : PullTable(1.0);
  PullTable g1 = j.contains("g1") ? parse_pull(j.at("g1"), "g1") : PullTable(1.0);
  if (type == "voronoi") return VoronoiModel{q, g0, g1};
  if (type == "confetti") return ConfettiModel{q, g0, g1};
  throw ConfigError("unknown model type: " + type);
}

json model_to_json(const ModelSpec& m, const json* raw_echo) {
  // Pull tables are echoed from the raw config when available; otherwise a
  // descriptive stub is emitted (sufficient for boolean replay rows).
  if (const auto* b = std::get_if<BooleanModel>(&m)) {
    json j;
    j["type"] = "boolean";
    j["lambda"] = b->lambda;
    j["law"] = law_to_json(b->law);
    return j;
  }
  if (raw_echo) {
    json j = *raw_echo;
    if (const auto* v = std::get_if<VoronoiModel>(&m))
      j["q"] = v->q;
    else
      j["q"] = std::get<ConfettiModel>(m).q;
    return j;
  }
  json j;
  if (const auto* v = std::get_if<VoronoiModel>(&m)) {
    j["type"] = "voronoi";
    j["q"] = v->q;
    j["g0"] = pull_to_json(v->g0);
    j["g1"] = pull_to_json(v->g1);
  } else {
    const auto& c = std::get<ConfettiModel>(m);
    j["type"] = "confetti";
    j["q"] = c.q;
    j["g0"] = pull_to_json(c.g0);
    j["g1"] = pull_to_json(c.g1);
  }
  return j;
}

Phase parse_phase(const json& j) {
  const std::string p = j.get<std::string>();
  if (p == "occupied") return Phase::occupied;
  if (p == "vacant") return Phase::vacant;
  throw ConfigError("phase must be 'occupied' or 'vacant'");
}

EventSpec parse_event(const json& j) {
  check_keys(j,
             {"kind", "phase", "width", "height", "y_low", "r_inner",
              "r_outer", "r"},
             "event");
  const std::string kind = j.at("kind").get<std::string>();
  const Phase ph = parse_phase(j.at("phase"));
  if (kind == "cross")
    return EventSpec::cross(j.at("width").get<double>(),
                            j.at("height").get<double>(), ph);
  if (kind == "cross_to_sub")
    return EventSpec::cross_to_sub(j.at("width").get<double>(),
                                   j.at("height").get<double>(),
                                   j.at("y_low").get<double>(), ph);
  if (kind == "arm")
    return EventSpec::arm(j.at("r_inner").get<double>(),
                          j.at("r_outer").get<double>(), ph);
  if (kind == "circuit")
    return EventSpec::circuit(j.at("r_inner").get<double>(),
                              j.at("r_outer").get<double>(), ph);
  if (kind == "origin_arm")
    return EventSpec::origin_arm(j.at("r").get<double>(), ph);
  throw ConfigError("unknown event kind: " + kind);
}

json event_to_json(const EventSpec& e) {
  json j;
  j["phase"] = e.phase == Phase::occupied ? "occupied" : "vacant";
  switch (e.kind) {
    case EventSpec::Kind::cross:
      j["kind"] = "cross";
      j["width"] = e.width;
      j["height"] = e.height;
      break;
    case EventSpec::Kind::cross_to_sub:
      j["kind"] = "cross_to_sub";
      j["width"] = e.width;
      j["height"] = e.height;
      j["y_low"] = e.y_low;
      break;
    case EventSpec::Kind::arm:
      j["kind"] = "arm";
      j["r_inner"] = e.r_inner;
      j["r_outer"] = e.r_outer;
      break;
    case EventSpec::Kind::circuit:
      j["kind"] = "circuit";
      j["r_inner"] = e.r_inner;
      j["r_outer"] = e.r_outer;
      break;
    case EventSpec::Kind::origin_arm:
      j["kind"] = "origin_arm";
      j["r"] = e.r_outer;
      break;
  }
  return j;
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config does not parse: ") + e.what());
  }
  check_keys(j,
             {"experiment", "model", "event", "n", "master_seed", "threads",
              "policy", "theta", "levels", "kappa", "r_list", "phase",
              "r_schedule", "bracket", "radii", "arm_phase", "corr", "russo",
              "duality", "coverage", "truncation", "out_dir", "oracle"},
             "config");
  ExperimentConfig cfg;
  cfg.experiment = j.at("experiment").get<std::string>();
  static const char* known[] = {"estimate", "curve",    "critical",
                                "arm",      "corr",     "russo",
                                "duality-check", "coverage", "truncation"};
  bool ok = false;
  for (const char* k : known) ok = ok || cfg.experiment == k;
  if (!ok) throw ConfigError("unknown experiment: " + cfg.experiment);

  if (j.contains("model")) cfg.model = parse_model(j.at("model"));
  if (j.contains("event")) cfg.event = parse_event(j.at("event"));
  if (j.contains("n")) cfg.n = j.at("n").get<std::uint64_t>();
  if (cfg.n == 0) throw ConfigError("n must be >= 1");
  if (j.contains("master_seed"))
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (j.contains("theta")) cfg.theta = j.at("theta").get<double>();
  if (j.contains("oracle")) cfg.oracle_crosscheck = j.at("oracle").get<bool>();
  if (j.contains("policy")) {
    const json& p = j.at("policy");
    check_keys(p, {"exact_first", "raster_only", "pixels0", "pixels_min", "eps"},
               "policy");
    if (p.contains("exact_first"))
      cfg.policy.exact_first = p.at("exact_first").get<bool>();
    if (p.contains("raster_only"))
      cfg.policy.raster_only = p.at("raster_only").get<bool>();
    if (p.contains("pixels0")) cfg.policy.pixels0 = p.at("pixels0").get<int>();
    if (p.contains("pixels_min"))
      cfg.policy.pixels_min = p.at("pixels_min").get<int>();
    if (p.contains("eps")) cfg.policy.eps = p.at("eps").get<double>();
    if (!(cfg.policy.eps > 0.0 && cfg.policy.eps <= 1.0))
      throw ConfigError("policy.eps must be in (0,1]");
    if (cfg.policy.pixels_min < cfg.policy.pixels0)
      throw ConfigError("pixels_min must be >= pixels0");
  }
  if (j.contains("levels")) cfg.levels = j.at("levels").get<std::vector<double>>();
  if (j.contains("kappa")) cfg.kappa = j.at("kappa").get<double>();
  if (j.contains("r_list")) cfg.r_list = j.at("r_list").get<std::vector<double>>();
  if (j.contains("phase")) cfg.curve_phase = parse_phase(j.at("phase"));
  if (j.contains("r_schedule"))
    cfg.r_schedule = j.at("r_schedule").get<std::vector<double>>();
  if (j.contains("bracket")) {
    const json& b = j.at("bracket");
    check_keys(b, {"lo", "hi", "rel_tolerance", "max_classify_calls",
                   "extensions"},
               "bracket");
    cfg.bracket.lo = b.at("lo").get<double>();
    cfg.bracket.hi = b.at("hi").get<double>();
    if (b.contains("rel_tolerance"))
      cfg.bracket.rel_tolerance = b.at("rel_tolerance").get<double>();
    if (b.contains("max_classify_calls"))
      cfg.bracket.max_classify_calls = b.at("max_classify_calls").get<int>();
    if (b.contains("extensions"))
      cfg.bracket.extensions = b.at("extensions").get<int>();
  }
  if (j.contains("radii")) cfg.radii = j.at("radii").get<std::vector<double>>();
  if (j.contains("arm_phase")) cfg.arm_phase = parse_phase(j.at("arm_phase"));
  if (j.contains("corr")) {
    const json& c = j.at("corr");
    check_keys(c, {"r", "s"}, "corr");
    cfg.corr.r = c.at("r").get<double>();
    cfg.corr.s = c.at("s").get<double>();
  }
  if (j.contains("russo")) {
    const json& rj = j.at("russo");
    check_keys(rj, {"lambda_target", "r", "m", "dp"}, "russo");
    cfg.russo.lambda_target = rj.at("lambda_target").get<double>();
    cfg.russo.r = rj.at("r").get<double>();
    if (rj.contains("m")) cfg.russo.m = rj.at("m").get<int>();
    if (rj.contains("dp")) cfg.russo.dp = rj.at("dp").get<double>();
  }
  if (j.contains("duality")) {
    const json& d = j.at("duality");
    check_keys(d, {"levels", "r_list", "pixel_list"}, "duality");
    cfg.duality.levels = d.at("levels").get<std::vector<double>>();
    cfg.duality.r_list = d.at("r_list").get<std::vector<double>>();
    cfg.duality.pixel_list = d.at("pixel_list").get<std::vector<int>>();
  }
  if (j.contains("coverage")) {
    const json& c = j.at("coverage");
    check_keys(c, {"r_pad", "lambdas"}, "coverage");
    cfg.coverage.r_pad = c.at("r_pad").get<double>();
    cfg.coverage.lambdas = c.at("lambdas").get<std::vector<double>>();
  }
  if (j.contains("truncation")) {
    const json& t = j.at("truncation");
    check_keys(t, {"caps"}, "truncation");
    cfg.truncation.caps = t.at("caps").get<std::vector<double>>();
  }
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  cfg.echo = j.dump(2);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_json(text);
}

// ---------------------------------------------------------------------------
// Result rows and writers

namespace {

struct ResultRow {
  std::string experiment, model, event;
  double level = 0.0, r = 0.0;
  std::uint64_t n = 0;
  double p_hat = 0.0, ci_low = 0.0, ci_high = 1.0, bias = 0.0,
         unresolved = 0.0;
  std::uint64_t master_seed = 0, rep_lo = 0, rep_hi = 0;
  double wall_ms = 0.0;
  std::uint64_t digest = 0;
  std::string replay_kind = "none";
  json replay;  // parameters needed to re-execute this row
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  out << kCsvHeader << "\n";
  for (const ResultRow& r : rows) {
    out << r.experiment << ',' << r.model << ',' << r.event << ','
        << fmt_double(r.level) << ',' << fmt_double(r.r) << ',' << r.n << ','
        << fmt_double(r.p_hat) << ',' << fmt_double(r.ci_low) << ','
        << fmt_double(r.ci_high) << ',' << fmt_double(r.bias) << ','
        << fmt_double(r.unresolved) << ',' << r.master_seed << ',' << r.rep_lo
        << ',' << r.rep_hi << ',' << fmt_double(r.wall_ms) << "\n";
  }
}

ResultRow row_from_estimate(const ExperimentConfig& cfg,
                            const ModelSpec& model, const EventSpec& spec,
                            const Estimate& est, double level, double r) {
  ResultRow row;
  row.experiment = cfg.experiment;
  row.model = describe_model(model);
  row.event = spec.describe();
  row.level = level;
  row.r = r;
  row.n = est.n;
  row.p_hat = est.p_hat;
  row.ci_low = est.ci_low;
  row.ci_high = est.ci_high;
  row.bias = est.bias;
  row.unresolved = est.unresolved_rate;
  row.master_seed = est.master_seed;
  row.rep_lo = est.rep_lo;
  row.rep_hi = est.rep_hi;
  row.wall_ms = est.wall_ms;
  row.digest = est.outcome_digest;
  if (std::holds_alternative<BooleanModel>(model)) {
    row.replay_kind = "estimate";
    row.replay = {{"model", model_to_json(model, nullptr)},
                  {"event", event_to_json(spec)}};
  } else {
    row.replay_kind = "estimate_field";
    row.replay = {{"level", model_level(model)},
                  {"event", event_to_json(spec)}};
  }
  return row;
}

json row_to_json(const ResultRow& r) {
  return {{"experiment", r.experiment},
          {"model", r.model},
          {"event", r.event},
          {"level", r.level},
          {"r", r.r},
          {"n", r.n},
          {"p_hat", r.p_hat},
          {"ci_low", r.ci_low},
          {"ci_high", r.ci_high},
          {"bias", r.bias},
          {"unresolved_rate", r.unresolved},
          {"master_seed", r.master_seed},
          {"rep_lo", r.rep_lo},
          {"rep_hi", r.rep_hi},
          {"wall_ms", r.wall_ms},
          {"outcome_digest", r.digest},
          {"replay_kind", r.replay_kind},
          {"replay", r.replay}};
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  std::vector<ResultRow> rows;
  json verdicts = json::object();
  std::string error;
  int exit_code = 0;
  const auto t_start = std::chrono::steady_clock::now();

  try {
    if (cfg.experiment == "estimate") {
      if (!cfg.event) throw ConfigError("estimate needs an event");
      Estimate est = estimate(cfg.model, *cfg.event, cfg.n, cfg.master_seed,
                              cfg.policy, cfg.threads);
      rows.push_back(row_from_estimate(cfg, cfg.model, *cfg.event, est,
                                       model_level(cfg.model), 0.0));
      if (cfg.oracle_crosscheck &&
          std::holds_alternative<BooleanModel>(cfg.model)) {
        // Cross-validate the policy detector against the fixed-resolution
        // reference on the same realizations.
        const EventSpec& spec = *cfg.event;
        const Rect w = spec.query_window();
        const double delta = cfg.policy.delta0_for(w);
        const auto outcomes = run_replicates(0, cfg.n, cfg.threads,
            [&](std::uint64_t rep) {
              const Outcome fast = evaluate_replicate(cfg.model, spec,
                                                      cfg.master_seed, rep,
                                                      cfg.policy);
              RngStream stream(derive_seed(cfg.master_seed, 0), rep);
              const auto& bm = std::get<BooleanModel>(cfg.model);
              Realization real = realize_boolean(bm.lambda, w, bm.law,
                                                 cfg.policy.eps, stream);
              std::vector<Disc> discs;
              for (const MarkedPoint& p : real.points)
                discs.push_back({p.pos, p.z});
              const bool ref = raster_oracle(spec, discs, delta);
              return (fast == (ref ? Outcome::kTrue : Outcome::kFalse))
                         ? Outcome::kTrue
                         : Outcome::kFalse;
            });
        const Tally t = tally_outcomes(outcomes);
        ResultRow row;
        row.experiment = cfg.experiment;
        row.model = describe_model(cfg.model);
        row.event = "oracle_agreement(" + spec.describe() + ")";
        row.level = model_level(cfg.model);
        row.n = t.total();
        row.p_hat = static_cast<double>(t.yes) / std::max<std::uint64_t>(1, t.total());
        std::tie(row.ci_low, row.ci_high) = wilson_interval(t.yes, t.total());
        row.master_seed = cfg.master_seed;
        row.rep_hi = cfg.n;
        row.digest = digest_outcomes(outcomes);
        rows.push_back(row);
        verdicts["oracle_agreement"] = row.p_hat;
      }
    } else if (cfg.experiment == "curve") {
      if (cfg.levels.empty() || cfg.r_list.empty())
        throw ConfigError("curve needs levels and r_list");
      auto points = crossing_curve(cfg.model, cfg.levels, cfg.kappa,
                                   cfg.r_list, cfg.curve_phase, cfg.n,
                                   cfg.master_seed, cfg.policy, cfg.threads);
      for (std::size_t i = 0; i < points.size(); ++i) {
        const CurvePoint& cp = points[i];
        const ModelSpec m = with_level(cfg.model, cp.level);
        ResultRow row = row_from_estimate(cfg, m, cp.spec, cp.est, cp.level,
                                          cp.r);
        row.replay_kind = "curve";
        row.replay = {{"levels", cfg.levels},
                      {"level_index", i % cfg.levels.size()},
                      {"event", event_to_json(cp.spec)}};
        rows.push_back(std::move(row));
      }
    } else if (cfg.experiment == "critical") {
      if (cfg.r_schedule.empty())
        throw ConfigError("critical needs an r_schedule");
      Bracket br = bisect_critical(
          cfg.model, cfg.bracket.lo, cfg.bracket.hi, cfg.bracket.rel_tolerance,
          cfg.bracket.max_classify_calls, cfg.theta, cfg.r_schedule, cfg.n,
          cfg.master_seed, cfg.policy, cfg.threads, cfg.bracket.extensions);
      for (const CurvePoint& cp : br.evidence) {
        const ModelSpec m = with_level(cfg.model, cp.level);
        rows.push_back(row_from_estimate(cfg, m, cp.spec, cp.est, cp.level,
                                         cp.r));
      }
      verdicts["bracket"] = {{"lo", br.lo},
                             {"hi", br.hi},
                             {"converged", br.converged},
                             {"classify_calls", br.classify_calls},
                             {"rel_width", br.rel_width()}};
    } else if (cfg.experiment == "arm") {
      if (cfg.radii.empty()) throw ConfigError("arm needs radii");
      DecayFit fit = fit_arm_decay(cfg.model, cfg.arm_phase, cfg.radii, cfg.n,
                                   cfg.master_seed, cfg.policy, cfg.threads);
      for (std::size_t i = 0; i < fit.radii.size(); ++i) {
        const EventSpec spec =
            EventSpec::origin_arm(fit.radii[i], cfg.arm_phase);
        rows.push_back(row_from_estimate(cfg, cfg.model, spec, fit.points[i],
                                         model_level(cfg.model),
                                         fit.radii[i]));
      }
      verdicts["decay_fit"] = {{"slope", fit.slope},
                               {"slope_halfwidth", fit.slope_halfwidth},
                               {"r_squared", fit.r_squared}};
    } else if (cfg.experiment == "corr") {
      const auto& bm = std::get<BooleanModel>(cfg.model);
      CorrEstimate ce = estimate_correlation(bm, cfg.corr.r, cfg.corr.s, cfg.n,
                                             cfg.master_seed, cfg.policy,
                                             cfg.threads);
      char evbuf[64];
      std::snprintf(evbuf, sizeof evbuf, "rho(r=%g,s=%g)", cfg.corr.r,
                    cfg.corr.s);
      ResultRow rho;
      rho.experiment = cfg.experiment;
      rho.model = describe_model(cfg.model);
      rho.event = evbuf;
      rho.level = bm.lambda;
      rho.r = cfg.corr.r;
      rho.n = cfg.n;
      rho.p_hat = ce.rho_hat;
      rho.ci_low = ce.rho_hat - 1.96 * ce.sigma;
      rho.ci_high = ce.rho_hat + 1.96 * ce.sigma;
      rho.bias = ce.bound;
      rho.master_seed = cfg.master_seed;
      rho.rep_hi = cfg.n;
      rho.digest = ce.bits_digest;
      rho.replay_kind = "corr";
      rho.replay = {{"r", cfg.corr.r}, {"s", cfg.corr.s}};
      rows.push_back(rho);
      verdicts["corr"] = {{"rho_hat", ce.rho_hat},
                          {"sigma", ce.sigma},
                          {"bound", ce.bound},
                          {"f1_p", ce.f1.p_hat},
                          {"f2_p", ce.f2.p_hat}};
    } else if (cfg.experiment == "russo") {
      const auto& bm = std::get<BooleanModel>(cfg.model);
      RussoCheck rc =
          russo_check(bm, cfg.russo.lambda_target, cfg.russo.r, cfg.russo.m,
                      cfg.russo.dp, cfg.n, cfg.master_seed, cfg.policy,
                      cfg.threads);
      auto mk = [&](const char* name, double v, double sg, std::uint64_t dg,
                    const char* which) {
        ResultRow row;
        row.experiment = cfg.experiment;
        row.model = describe_model(cfg.model);
        row.event = name;
        row.level = cfg.russo.lambda_target;
        row.r = cfg.russo.r;
        row.n = cfg.n;
        row.p_hat = v;
        row.ci_low = v - 1.96 * sg;
        row.ci_high = v + 1.96 * sg;
        row.master_seed = cfg.master_seed;
        row.rep_hi = cfg.n;
        row.digest = dg;
        row.replay_kind = "russo";
        row.replay = {{"lambda_target", cfg.russo.lambda_target},
                      {"r", cfg.russo.r},
                      {"m", cfg.russo.m},
                      {"dp", cfg.russo.dp},
                      {"which", which}};
        return row;
      };
      rows.push_back(mk("russo_fd", rc.fd, rc.fd_sigma, rc.diff_digest,
                        "diff"));
      rows.push_back(mk("russo_pivotal", rc.pivotal_sum, rc.pivotal_sigma,
                        rc.pivots_digest, "pivots"));
      const double comb =
          std::sqrt(rc.fd_sigma * rc.fd_sigma +
                    rc.pivotal_sigma * rc.pivotal_sigma);
      verdicts["russo"] = {{"fd", rc.fd},
                           {"pivotal_sum", rc.pivotal_sum},
                           {"gap", std::fabs(rc.fd - rc.pivotal_sum)},
                           {"combined_sigma", comb},
                           {"within_3_sigma",
                            std::fabs(rc.fd - rc.pivotal_sum) <= 3.0 * comb}};
    } else if (cfg.experiment == "duality-check") {
      const auto& bm = std::get<BooleanModel>(cfg.model);
      for (double level : cfg.duality.levels)
        for (double r : cfg.duality.r_list)
          for (int pixels : cfg.duality.pixel_list) {
            BooleanModel m{level, bm.law};
            const std::uint64_t seed =
                derive_seed(cfg.master_seed,
                            fnv1a64(&pixels, sizeof pixels,
                                    fnv1a64(&r, sizeof r)));
            const auto t0 = std::chrono::steady_clock::now();
            const auto outcomes = run_replicates(
                0, cfg.n, cfg.threads, [&](std::uint64_t rep) {
                  return duality_replicate(m, r, pixels, seed, rep,
                                           cfg.policy.eps);
                });
            const Tally t = tally_outcomes(outcomes);
            ResultRow row;
            row.experiment = cfg.experiment;
            row.model = describe_model(ModelSpec{m});
            char evbuf[64];
            std::snprintf(evbuf, sizeof evbuf, "xor_agree(r=%g,px=%d)", r,
                          pixels);
            row.event = evbuf;
            row.level = level;
            row.r = r;
            row.n = t.total();
            row.p_hat =
                static_cast<double>(t.yes) / std::max<std::uint64_t>(1, t.total());
            std::tie(row.ci_low, row.ci_high) =
                wilson_interval(t.yes, t.total());
            row.master_seed = seed;
            row.rep_hi = cfg.n;
            row.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            row.digest = digest_outcomes(outcomes);
            row.replay_kind = "duality";
            row.replay = {{"model", model_to_json(ModelSpec{m}, nullptr)},
                          {"r", r},
                          {"pixels", pixels}};
            rows.push_back(std::move(row));
          }
    } else if (cfg.experiment == "coverage") {
      const auto& bm = std::get<BooleanModel>(cfg.model);
      for (double lambda : cfg.coverage.lambdas) {
        const std::uint64_t seed =
            derive_seed(cfg.master_seed, fnv1a64(&lambda, sizeof lambda));
        VoidCheck vc = void_probability_check(bm.law, lambda,
                                              cfg.coverage.r_pad, cfg.n, seed,
                                              cfg.threads);
        const auto outcomes =
            run_replicates(0, cfg.n, cfg.threads, [&](std::uint64_t rep) {
              return void_replicate(bm.law, lambda, cfg.coverage.r_pad, seed,
                                    rep)
                         ? Outcome::kTrue
                         : Outcome::kFalse;
            });
        ResultRow row;
        row.experiment = cfg.experiment;
        row.model = describe_model(ModelSpec{BooleanModel{lambda, bm.law}});
        char evbuf[64];
        std::snprintf(evbuf, sizeof evbuf, "origin_vacant(rpad=%g)",
                      cfg.coverage.r_pad);
        row.event = evbuf;
        row.level = lambda;
        row.n = cfg.n;
        row.p_hat = vc.empirical;
        std::tie(row.ci_low, row.ci_high) = wilson_interval(
            static_cast<std::uint64_t>(
                std::llround(vc.empirical * static_cast<double>(cfg.n))),
            cfg.n);
        row.bias = std::fabs(vc.empirical - vc.analytic);
        row.master_seed = seed;
        row.rep_hi = cfg.n;
        row.digest = digest_outcomes(outcomes);
        row.replay_kind = "coverage";
        row.replay = {{"law", law_to_json(bm.law)},
                      {"lambda", lambda},
                      {"r_pad", cfg.coverage.r_pad}};
        rows.push_back(std::move(row));
        verdicts["coverage"][fmt_double(lambda)] = {
            {"analytic", vc.analytic}, {"empirical", vc.empirical}};
      }
    } else if (cfg.experiment == "truncation") {
      const auto& bm = std::get<BooleanModel>(cfg.model);
      auto table = truncation_convergence(
          bm, cfg.truncation.caps, cfg.bracket.lo, cfg.bracket.hi,
          cfg.bracket.rel_tolerance, cfg.theta, cfg.r_schedule, cfg.n,
          cfg.master_seed, cfg.policy, cfg.threads);
      for (const TruncationRow& tr : table) {
        BooleanModel m{bm.lambda, bm.law.truncated(tr.cap)};
        for (const CurvePoint& cp : tr.bracket.evidence) {
          const ModelSpec ms = with_level(ModelSpec{m}, cp.level);
          rows.push_back(
              row_from_estimate(cfg, ms, cp.spec, cp.est, cp.level, cp.r));
        }
        verdicts["truncation"][fmt_double(tr.cap)] = {
            {"lo", tr.bracket.lo},
            {"hi", tr.bracket.hi},
            {"converged", tr.bracket.converged}};
      }
    } else {
      throw ConfigError("unhandled experiment: " + cfg.experiment);
    }
  } catch (const ConfigError& e) {
    error = e.what();
    exit_code = 2;
  } catch (const std::exception& e) {
    error = e.what();
    exit_code = 3;
  }

  std::filesystem::create_directories(cfg.out_dir);
  write_csv(cfg.out_dir + "/results.csv", rows);
  json summary;
  summary["config"] = json::parse(cfg.echo);
  summary["rows"] = json::array();
  for (const ResultRow& r : rows) summary["rows"].push_back(row_to_json(r));
  summary["verdicts"] = verdicts;
  summary["totals"] = {
      {"rows", rows.size()},
      {"wall_ms", std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count()}};
  summary["error"] = error;
  std::ofstream(cfg.out_dir + "/summary.json") << summary.dump(2) << "\n";
  return exit_code;
}

// ---------------------------------------------------------------------------
// Replay

namespace {

std::vector<std::size_t> parse_selector(const std::string& sel,
                                        std::size_t n_rows) {
  std::vector<std::size_t> out;
  if (sel == "all") {
    for (std::size_t i = 0; i < n_rows; ++i) out.push_back(i);
    return out;
  }
  std::size_t pos = 0;
  while (pos < sel.size()) {
    std::size_t comma = sel.find(',', pos);
    if (comma == std::string::npos) comma = sel.size();
    out.push_back(std::stoul(sel.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int replay_summary(const std::string& summary_path, const std::string& rows,
                   int threads_override) {
  json summary;
  {
    std::ifstream in(summary_path);
    if (!in) {
      std::fprintf(stderr, "replay: cannot open %s\n", summary_path.c_str());
      return 4;
    }
    in >> summary;
  }
  ExperimentConfig cfg = parse_config_json(summary.at("config").dump());
  if (threads_override > 0) cfg.threads = threads_override;
  const auto& jrows = summary.at("rows");
  const auto selected = parse_selector(rows, jrows.size());

  int mismatches = 0;
  for (std::size_t idx : selected) {
    if (idx >= jrows.size()) {
      std::fprintf(stderr, "replay: row %zu out of range\n", idx);
      ++mismatches;
      continue;
    }
    const json& row = jrows[idx];
    const std::string kind = row.at("replay_kind").get<std::string>();
    const std::uint64_t want = row.at("outcome_digest").get<std::uint64_t>();
    const std::uint64_t seed = row.at("master_seed").get<std::uint64_t>();
    const std::uint64_t rep_lo = row.at("rep_lo").get<std::uint64_t>();
    const std::uint64_t rep_hi = row.at("rep_hi").get<std::uint64_t>();
    std::uint64_t got = 0;
    bool skipped = false;

    if (kind == "estimate" || kind == "estimate_field") {
      ModelSpec model =
          kind == "estimate"
              ? parse_model(row.at("replay").at("model"))
              : with_level(cfg.model,
                           row.at("replay").at("level").get<double>());
      const EventSpec spec = parse_event(row.at("replay").at("event"));
      const auto outcomes = run_replicates(
          rep_lo, rep_hi, cfg.threads, [&](std::uint64_t rep) {
            return evaluate_replicate(model, spec, seed, rep, cfg.policy);
          });
      got = digest_outcomes(outcomes);
    } else if (kind == "curve") {
      const auto levels =
          row.at("replay").at("levels").get<std::vector<double>>();
      const std::size_t li = row.at("replay").at("level_index").get<std::size_t>();
      const EventSpec spec = parse_event(row.at("replay").at("event"));
      std::vector<Outcome> col(rep_hi - rep_lo);
      run_replicates(rep_lo, rep_hi, cfg.threads, [&](std::uint64_t rep) {
        col[rep - rep_lo] =
            curve_replicate(cfg.model, spec, levels, seed, rep, cfg.policy)[li];
        return Outcome::kTrue;
      });
      got = digest_outcomes(col);
    } else if (kind == "duality") {
      const BooleanModel m =
          std::get<BooleanModel>(parse_model(row.at("replay").at("model")));
      const double r = row.at("replay").at("r").get<double>();
      const int pixels = row.at("replay").at("pixels").get<int>();
      const auto outcomes = run_replicates(
          rep_lo, rep_hi, cfg.threads, [&](std::uint64_t rep) {
            return duality_replicate(m, r, pixels, seed, rep, cfg.policy.eps);
          });
      got = digest_outcomes(outcomes);
    } else if (kind == "coverage") {
      const RadiusLaw law = parse_law(row.at("replay").at("law"));
      const double lambda = row.at("replay").at("lambda").get<double>();
      const double r_pad = row.at("replay").at("r_pad").get<double>();
      const auto outcomes = run_replicates(
          rep_lo, rep_hi, cfg.threads, [&](std::uint64_t rep) {
            return void_replicate(law, lambda, r_pad, seed, rep)
                       ? Outcome::kTrue
                       : Outcome::kFalse;
          });
      got = digest_outcomes(outcomes);
    } else if (kind == "corr") {
      const auto& bm = std::get<BooleanModel>(cfg.model);
      const double r = row.at("replay").at("r").get<double>();
      const double s = row.at("replay").at("s").get<double>();
      std::vector<std::uint8_t> bits(rep_hi - rep_lo);
      run_replicates(rep_lo, rep_hi, cfg.threads, [&](std::uint64_t rep) {
        bits[rep - rep_lo] = corr_replicate(bm, r, s, seed, rep,
                                            cfg.policy.eps);
        return Outcome::kTrue;
      });
      got = fnv1a64(bits.data(), bits.size());
    } else if (kind == "russo") {
      const auto& bm = std::get<BooleanModel>(cfg.model);
      const auto& rp = row.at("replay");
      const double lt = rp.at("lambda_target").get<double>();
      const double r = rp.at("r").get<double>();
      const int m = rp.at("m").get<int>();
      const double dp = rp.at("dp").get<double>();
      const std::string which = rp.at("which").get<std::string>();
      std::vector<std::int8_t> diff(rep_hi - rep_lo);
      std::vector<std::uint32_t> pivots(rep_hi - rep_lo);
      run_replicates(rep_lo, rep_hi, cfg.threads, [&](std::uint64_t rep) {
        const RussoReplicate rr =
            russo_replicate(bm, lt, r, m, dp, seed, rep, cfg.policy.eps);
        diff[rep - rep_lo] = rr.diff;
        pivots[rep - rep_lo] = rr.pivots;
        return Outcome::kTrue;
      });
      got = which == "diff"
                ? fnv1a64(diff.data(), diff.size())
                : fnv1a64(pivots.data(), pivots.size() * sizeof(pivots[0]));
    } else {
      skipped = true;
    }

    if (skipped) {
      std::printf("row %zu: skipped (%s)\n", idx, kind.c_str());
    } else if (got == want) {
      std::printf("row %zu: match (digest %016llx)\n", idx,
                  static_cast<unsigned long long>(got));
    } else {
      std::printf("row %zu: MISMATCH (have %016llx want %016llx)\n", idx,
                  static_cast<unsigned long long>(got),
                  static_cast<unsigned long long>(want));
      ++mismatches;
    }
  }
  return mismatches == 0 ? 0 : 4;
}

}  // namespace perc
