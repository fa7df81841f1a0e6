#include "rflab/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <sstream>

#include "rflab/ball_inclusion.hpp"
#include "rflab/perelman.hpp"
#include "rflab/singularity.hpp"
#include "rflab/solutions.hpp"

namespace rflab {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kScenarios{"sphere", "cylinder", "gaussian", "neckpinch"};
const std::vector<std::string> kChecks{"fidelity",    "type_one",       "reduced_distance", "density",
                                       "monotonicity", "subsolution",   "naber",            "classification",
                                       "blowup",       "volume_decay",  "ball_inclusion"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string v(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("key '" + std::string(key) + "': not a number: '" + v + "'");
  return out;
}

long long parse_integer(std::string_view key, std::string_view value, long long lo) {
  const std::string v(value);
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("key '" + std::string(key) + "': not an integer: '" + v + "'");
  if (out < lo) throw ConfigError("key '" + std::string(key) + "': must be >= " + std::to_string(lo));
  return out;
}

double positive(std::string_view key, std::string_view value) {
  const double x = parse_double(key, value);
  if (!(x > 0.0)) throw ConfigError("key '" + std::string(key) + "': must be positive");
  return x;
}

std::string format(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Round-sphere and round-cylinder densities from the Gaussian integral of
// the constant-l soliton volume.
double sphere_density(int n) {
  return std::pow(4.0 * std::numbers::pi, -0.5 * n) * std::pow(2.0 * (n - 1), 0.5 * n) * unit_sphere_volume(n) *
         std::exp(-0.5 * n);
}

double cylinder_density(int n) {
  return std::pow(4.0 * std::numbers::pi, -0.5 * (n - 1)) * std::pow(2.0 * (n - 2), 0.5 * (n - 1)) *
         unit_sphere_volume(n - 1) * std::exp(-0.5 * (n - 1));
}

// Type I product (T-t)|Rm| of the round shrinkers.
double sphere_rate(int n) { return std::sqrt(2.0 * n * (n - 1)) / (2.0 * (n - 1)); }
double cylinder_rate(int n) { return std::sqrt(2.0 * (n - 1) * (n - 2)) / (2.0 * (n - 2)); }

class Check {
 public:
  explicit Check(std::string name) : name_(std::move(name)) {}

  void within(const std::string& what, double value, double reference, double tolerance, bool relative) {
    const double err = relative ? std::abs(value / reference - 1.0) : std::abs(value - reference);
    const bool ok = err <= tolerance;
    push({{"name", what},
          {"value", value},
          {"reference", reference},
          {"tolerance", tolerance},
          {"relation", relative ? "|value/reference - 1| <= tolerance" : "|value - reference| <= tolerance"}},
         ok);
  }
  void at_most(const std::string& what, double value, double bound) {
    push({{"name", what}, {"value", value}, {"tolerance", bound}, {"relation", "value <= tolerance"}}, value <= bound);
  }
  void at_least(const std::string& what, double value, double bound) {
    push({{"name", what}, {"value", value}, {"tolerance", bound}, {"relation", "value >= tolerance"}}, value >= bound);
  }
  void finite(const std::string& what, double value) {
    push({{"name", what}, {"value", std::isfinite(value) ? json(value) : json(nullptr)}, {"relation", "finite"}},
         std::isfinite(value));
  }
  void holds(const std::string& what, bool value) {
    push({{"name", what}, {"value", value}, {"relation", "true"}}, value);
  }
  void count(const std::string& what, std::size_t value, std::size_t expected) {
    push({{"name", what}, {"value", value}, {"reference", expected}, {"relation", "value == reference"}},
         value == expected);
  }
  void note(std::string text) { notes_.push_back(std::move(text)); }
  void inconclusive(std::string text) {
    inconclusive_ = true;
    note(std::move(text));
  }
  void fail(std::string text) {
    failed_ = true;
    note(std::move(text));
  }

  std::string status() const { return failed_ ? "fail" : (inconclusive_ ? "inconclusive" : "pass"); }
  json to_json() const {
    json j{{"name", name_}, {"status", status()}, {"values", values_}};
    if (!notes_.empty()) j["notes"] = notes_;
    return j;
  }

 private:
  void push(json value, bool ok) {
    value["pass"] = ok;
    values_.push_back(std::move(value));
    failed_ = failed_ || !ok;
  }

  std::string name_;
  json values_ = json::array();
  std::vector<std::string> notes_;
  bool failed_ = false;
  bool inconclusive_ = false;
};

struct Setup {
  bool exact = false;
  ExactFlow flow;
  WarpedMetric initial;
  FlowConfig solver;
  double centre = 0.0;          // singular basepoint
  std::vector<double> regular;  // regular basepoints
  Basepoint sub_base;           // subsolution basepoint
  SubsolutionRegion region;
};

Setup make_setup(const ScenarioConfig& c) {
  Setup s;
  s.solver.sigma = c.sigma;
  s.solver.tolerance = c.tolerance;
  s.solver.stop_curvature = c.stop_curvature;
  s.solver.snapshots_per_decade = c.snapshots_per_decade;
  s.solver.resolution_cells = c.resolution_cells;
  if (c.scenario == "neckpinch") {
    s.initial = dumbbell_profile(c.n, c.neck_ratio, c.points);
    s.centre = 0.5 * s.initial.length();
    s.regular = {0.0, s.initial.length()};
    s.region = {0.05, 0.45, 0.6, 0.9, 8, 4};  // times as fractions of T-hat
    return s;
  }
  s.exact = true;
  s.flow = make_exact_flow(family_from_name(c.scenario), c.n, 1.0);
  s.initial = s.flow.evaluate(0.0, c.points);
  if (c.scenario == "gaussian") {
    s.solver.final_time = c.final_time;
    s.solver.stop_curvature = std::numeric_limits<double>::infinity();
    s.centre = 0.0;
    s.region = {0.5, 3.0, 0.2, 0.7, 8, 4};
  } else if (c.scenario == "sphere") {
    const double r = s.flow.radius(0.0);
    s.centre = 0.5 * s.initial.length();
    s.region = {0.4 * r, 1.2 * r, 0.5, 0.8, 8, 4};
  } else {
    s.centre = 0.0;
    s.region = {-2.0, 2.0, 0.5, 0.8, 8, 4};
  }
  return s;
}

LOptions l_options(const ScenarioConfig& c) {
  LOptions o;
  o.nodes = c.nodes;
  o.seed = c.seed;
  return o;
}

Basepoint base_at(const FlowHistory& h, double label) {
  if (h.singular()) return singular_basepoint(h, label);
  Basepoint b;
  b.label = label;
  b.time = h.last_time();
  return b;
}

std::string tag(double label) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << label;
  std::string s = os.str();
  std::replace(s.begin(), s.end(), '-', 'm');
  return s;
}

struct Context {
  const ScenarioConfig& config;
  const Setup& setup;
  const FlowHistory& history;
  const MaterialFlow& flow;
  std::map<std::string, std::string>& artifacts;
  std::vector<std::pair<double, DensityEstimate>> densities;
  std::vector<bool> density_regular;  // expected verdict per density
  bool unreliable = false;
};

void check_fidelity(Context& ctx, Check& ck) {
  const FlowHistory& h = ctx.history;
  const ExactFlow& ex = ctx.setup.flow;
  const double T = ex.singular_time;
  double worst = 0.0, min_tau = kNaN;
  for (const WarpedMetric& g : h.snapshots) {
    const double tau = T - g.time;
    if (ex.family != ExactFamily::GaussianFlat && tau < 1e-3) continue;
    min_tau = std::isnan(min_tau) ? tau : std::min(min_tau, tau);
    double err = 0.0;
    switch (ex.family) {
      case ExactFamily::ShrinkingSphere: {
        const double r = ex.radius(g.time);
        for (std::size_t i = 0; i < g.size(); ++i) {
          err = std::max(err, std::abs(g.psi[i] - r * std::sin((g.s[i] - g.s.front()) / r)) / r);
        }
        err = std::max(err, std::abs(g.length() / (std::numbers::pi * r) - 1.0));
        break;
      }
      case ExactFamily::ShrinkingCylinder: {
        const double r = ex.radius(g.time);
        for (double p : g.psi) err = std::max(err, std::abs(p / r - 1.0));
        err = std::max(err, std::abs(g.period / ex.cylinder_period - 1.0));
        break;
      }
      case ExactFamily::GaussianFlat:
        for (std::size_t i = 0; i < g.size(); ++i) {
          err = std::max(err, std::abs(g.psi[i] - (g.s[i] - g.s.front())) / ex.flat_radius);
        }
        break;
    }
    worst = std::max(worst, err);
  }
  ck.at_most("max_relative_profile_error", worst, 1e-4);
  if (ex.family == ExactFamily::GaussianFlat) {
    ck.within("final_time", h.last_time(), ctx.config.final_time, 1e-12, true);
  } else {
    ck.at_most("closest_recorded_tau_before_1e-3_cut", 1.0 - h.last_time(), 1e-3);
  }
}

void check_type_one(Context& ctx, Check& ck) {
  const FlowHistory& h = ctx.history;
  const int n = h.n();
  ck.at_least("min_scaled_curvature", h.type_one.lower_all, 0.125 - 1e-3);
  ck.finite("max_scaled_curvature", h.type_one.upper);
  ck.within("blowup_exponent", h.estimate.exponent, 1.0, 0.1, false);
  if (!ctx.setup.exact) ck.at_most("scaled_curvature_ratio", h.type_one.upper / h.type_one.lower_all, 20.0);
  if (ctx.setup.exact) {
    ck.within("singular_time", h.singular_time, ctx.setup.flow.singular_time, 1e-4, true);
    const double rate = ctx.config.scenario == "sphere" ? sphere_rate(n) : cylinder_rate(n);
    ck.within("max_scaled_curvature_vs_shrinker", h.type_one.upper, rate, 1e-2, true);
    ck.within("min_scaled_curvature_vs_shrinker", h.type_one.lower_all, rate, 1e-2, true);
  }
  std::ostringstream csv;
  csv << "t,tau,scaled_sup_riem\n" << std::setprecision(12);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double tau = h.singular_time - h.snapshots[k].time;
    csv << h.snapshots[k].time << ',' << tau << ',' << tau * h.curvatures[k].sup_riem() << '\n';
  }
  ctx.artifacts["type_one.csv"] = csv.str();
}

void check_reduced_distance(Context& ctx, Check& ck) {
  const FlowHistory& h = ctx.history;
  const ScenarioConfig& c = ctx.config;
  const int n = h.n();
  const LOptions opt = l_options(c);
  std::ostringstream csv;
  csv << "q,tbar,l,reference,converged\n" << std::setprecision(12);
  if (c.scenario == "neckpinch") {
    // l of the rescaled flow at (sqrt(lambda) q, -1) against l at (q, T - 1/lambda).
    const double T = h.singular_time;
    const double lambda = 4.0 / T;
    const RescaledHistory rh = parabolic_rescale(h, lambda, ctx.setup.centre);
    const MaterialFlow rflow(rh.history);
    const double a = std::sqrt(lambda);
    ReducedDistance orig(ctx.flow, singular_basepoint(h, ctx.setup.centre), opt);
    ReducedDistance resc(rflow, singular_basepoint(rh.history, a * ctx.setup.centre), opt);
    double worst = 0.0;
    bool conv = true;
    for (int i = 0; i < 10; ++i) {
      const double q = ctx.setup.centre + 0.01 * i;
      const ReducedDistanceValue l0 = orig(q, T - 1.0 / lambda);
      const ReducedDistanceValue l1 = resc(a * q, -1.0);
      conv = conv && l0.converged && l1.converged;
      worst = std::max(worst, std::abs(l1.l / l0.l - 1.0));
      csv << q << ',' << T - 1.0 / lambda << ',' << l1.l << ',' << l0.l << ',' << (l0.converged && l1.converged)
          << '\n';
    }
    ck.at_most("rescaled_l_relative_error", worst, 1e-2);
    ck.holds("all_converged", conv);
    ctx.artifacts["reduced_distance.csv"] = csv.str();
    return;
  }
  const Basepoint base = base_at(h, ctx.setup.centre);
  ReducedDistance rd(ctx.flow, base, opt);
  double worst = 0.0;
  bool conv = true;
  const double t0 = base.time;
  for (int k = 0; k < 10; ++k) {
    double tbar = 0.0;
    if (c.scenario == "gaussian") tbar = 0.09 * k * t0;
    if (c.scenario == "sphere" || c.scenario == "cylinder") tbar = t0 - (0.7 - 0.06 * k);
    rd.reset_warm_start();
    for (int i = 0; i < 10; ++i) {
      double q = 0.0, ref = 0.0;
      if (c.scenario == "gaussian") {
        q = 0.3 * (i + 1);
        ref = q * q / (4.0 * (t0 - tbar));
      } else if (c.scenario == "sphere") {
        q = ctx.flow.label_min() + (ctx.flow.label_max() - ctx.flow.label_min()) * (i + 0.5) / 10.0;
        ref = 0.5 * n;
      } else {
        q = -4.0 + 8.0 * i / 9.0;
        ref = q * q / (4.0 * (t0 - tbar)) + 0.5 * (n - 1);
      }
      const ReducedDistanceValue v = rd(q, tbar);
      conv = conv && v.converged;
      worst = std::max(worst, std::abs(v.l / ref - 1.0));
      csv << q << ',' << tbar << ',' << v.l << ',' << ref << ',' << v.converged << '\n';
    }
  }
  const double tol = c.scenario == "gaussian" ? 1e-3 : (c.scenario == "sphere" ? 1e-2 : 2e-2);
  ck.at_most("max_relative_error_vs_closed_form", worst, tol);
  ck.holds("all_converged", conv);
  ctx.artifacts["reduced_distance.csv"] = csv.str();
}

void check_density(Context& ctx, Check& ck) {
  const ScenarioConfig& c = ctx.config;
  const int n = ctx.history.n();
  DensityOptions opt;
  opt.eta = c.eta;
  opt.margin = c.margin;
  opt.monotone_slack = c.monotone_slack;
  opt.volume.q_points = c.q_points;
  opt.volume.l = l_options(c);
  std::vector<std::pair<double, bool>> bases;  // label, expected regular
  double reference = kNaN;
  if (c.scenario == "gaussian") {
    bases = {{ctx.setup.centre, true}};
  } else if (c.scenario == "sphere") {
    bases = {{ctx.setup.centre, false}};
    reference = sphere_density(n);
  } else if (c.scenario == "cylinder") {
    bases = {{ctx.setup.centre, false}};
    reference = cylinder_density(n);
  } else {
    bases = {{ctx.setup.regular.front(), true}, {ctx.setup.centre, false}};
    reference = cylinder_density(n);
  }
  for (const auto& [label, regular] : bases) {
    const DensityEstimate d = density(ctx.flow, label, opt);
    const std::string at = "label " + tag(label) + ": ";
    if (regular) {
      ck.within(at + "theta", d.theta, 1.0, 1e-2, false);
    } else {
      ck.within(at + "theta", d.theta, reference, 1e-2, true);
    }
    ck.holds(at + "verdict " + std::string(to_string(d.verdict)) + " expected " + (regular ? "Regular" : "Singular"),
             d.verdict == (regular ? GapVerdict::Regular : GapVerdict::Singular));
    if (d.verdict == GapVerdict::Inconclusive) ck.inconclusive(at + "theta inside the eta margin");
    ck.at_most(at + "fit_residual", d.fit_residual, c.monotone_slack);

    std::ostringstream series, field;
    series << "tbar,tau,V,tail,approximate\n" << std::setprecision(12);
    field << "q,tbar,l,converged,v,V\n" << std::setprecision(12);
    for (const ReducedVolumeSample& s : d.series.samples) {
      series << s.time << ',' << d.series.base.time - s.time << ',' << s.value << ',' << s.tail << ','
             << s.approximate << '\n';
      for (std::size_t i = 0; i < s.labels.size(); ++i) {
        field << s.labels[i] << ',' << s.time << ',' << s.l[i] << ',' << static_cast<int>(s.converged[i]) << ','
              << s.v[i] << ',' << s.value << '\n';
      }
    }
    ctx.artifacts["density_" + tag(label) + ".csv"] = series.str();
    ctx.artifacts["reduced_volume_" + tag(label) + ".csv"] = field.str();
    ctx.densities.emplace_back(label, d);
    ctx.density_regular.push_back(regular);
  }
}

void check_monotonicity(Context& ctx, Check& ck) {
  const ScenarioConfig& c = ctx.config;
  if (ctx.densities.empty()) {
    ck.inconclusive("no reduced volume series: the density check is disabled");
    return;
  }
  MonotonicityOptions mo;
  mo.slack = c.monotone_slack;
  mo.bound_tolerance = c.bound_tolerance;
  mo.constancy_tolerance = c.constancy_tolerance;
  for (std::size_t i = 0; i < ctx.densities.size(); ++i) {
    const auto& [label, d] = ctx.densities[i];
    const std::string at = "label " + tag(label) + ": ";
    if (d.series.samples.size() < 4) {
      ck.inconclusive(at + "fewer than 4 reduced volume samples before the guard");
      continue;
    }
    const MonotonicityReport r = monotonicity_check(d.series, mo, &ctx.flow);
    ck.at_most(at + "worst_decrease", r.worst_decrease, mo.slack);
    ck.at_most(at + "max_value_minus_one", r.max_value - 1.0, mo.bound_tolerance);
    if (ctx.setup.exact) {
      ck.at_most(at + "spread", r.spread, mo.constancy_tolerance);
      ck.holds(at + "soliton_residual_passes", r.soliton_checked && r.soliton_passes);
    } else if (ctx.density_regular[i]) {
      ck.holds(at + "strictly_increasing", r.strictly_increasing);
    }
  }
}

struct StudyResult {
  RefinementStudy study;
  bool ran = false;
};

StudyResult run_study(Context& ctx) {
  const ScenarioConfig& c = ctx.config;
  const FlowHistory& h = ctx.history;
  SubsolutionRegion region = ctx.setup.region;
  region.q_cells = c.subsolution_q_cells;
  region.t_cells = c.subsolution_t_cells;
  const Basepoint base = base_at(h, ctx.setup.sub_base.label);
  const double span = h.singular() ? h.singular_time : base.time;
  region.time_lo *= span;
  region.time_hi *= span;
  StudyResult r;
  r.study = subsolution_refinement(ctx.flow, base, region, l_options(c), c.refinement_levels);
  r.ran = true;
  return r;
}

void check_subsolution(Context& ctx, Check& ck, const StudyResult& sr) {
  const ScenarioConfig& c = ctx.config;
  const SubsolutionReport& finest = sr.study.reports.back();
  ck.at_most("max_scaled_box_v", finest.max_value, c.subsolution_tolerance);
  ck.at_least("interior_points", static_cast<double>(finest.points), 1.0);
  if (finest.excluded > 0) ck.note(std::to_string(finest.excluded) + " points excluded near the basepoint or unconverged");
  if (ctx.setup.exact) {
    ck.at_most("max_abs_scaled_box_v", finest.max_abs, c.subsolution_tolerance);
    for (std::size_t i = 0; i < sr.study.ratios.size(); ++i) {
      ck.at_least("refinement_ratio_" + std::to_string(i), sr.study.ratios[i], c.refinement_ratio);
    }
  }
  std::ostringstream csv;
  csv << "q,tbar,box\n" << std::setprecision(12);
  for (std::size_t k = 0; k < finest.box.size(); ++k) {
    for (std::size_t i = 0; i < finest.box[k].size(); ++i) {
      if (!std::isfinite(finest.box[k][i])) continue;
      csv << finest.field.labels[i] << ',' << finest.field.times[k] << ',' << finest.box[k][i] << '\n';
    }
  }
  ctx.artifacts["subsolution.csv"] = csv.str();
}

void check_naber(Context& ctx, Check& ck, const StudyResult& sr) {
  const auto& reports = sr.study.reports;
  if (reports.size() < 2) {
    ck.inconclusive("refinement needs at least two levels");
    return;
  }
  const NaberEnvelope coarse = naber_envelope(ctx.flow, reports[reports.size() - 2].field);
  const NaberEnvelope fine = naber_envelope(ctx.flow, reports.back().field);
  ck.finite("k_fit", fine.k_fit);
  ck.finite("k_fit_coarser_grid", coarse.k_fit);
  ck.at_most("k_fit_relative_drift", std::abs(fine.k_fit / coarse.k_fit - 1.0), ctx.config.naber_drift);
  ck.at_least("samples", static_cast<double>(fine.samples), 1.0);
}

void check_classification(Context& ctx, Check& ck, SingularSetReport& rep) {
  const ScenarioConfig& c = ctx.config;
  const FlowHistory& h = ctx.history;
  ClassificationOptions opt;
  opt.points = c.classification_points;
  opt.rho = c.rho;
  if (!h.singular()) {
    double sup = 0.0;
    for (const CurvatureField& f : h.curvatures) sup = std::max(sup, f.sup_riem());
    ck.at_most("sup_riem_over_run", sup, 1e-8);
    ck.note("no singular time: every singular set is empty");
    ctx.artifacts["singular_set.json"] = json{{"status", "no singular time"}, {"points", json::array()}}.dump(2);
    return;
  }
  rep = classify_singular_points(h, opt);
  if (!rep.reliable) {
    ctx.unreliable = true;
    ck.inconclusive(rep.status);
  }
  ck.holds("nested", rep.nested());
  // Membership verdicts need the full decade window; nesting holds regardless.
  if (rep.reliable) {
    const CoincidenceVerdict cv = verify_coincidence(rep, c.boundary_cells);
    ck.count("interior_disagreements", cv.interior_violations, 0);
    const RhoStability rs = rho_stability(h, opt);
    ck.holds("rho_stable", rs.stable);
    const std::size_t all = rep.points.size();
    if (ctx.setup.exact) {
      for (int set = 0; set < 5; ++set) ck.count("members_set_" + std::to_string(set), rep.count(set), all);
    } else {
      auto nearest = [&](double label) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < all; ++i) {
          if (std::abs(rep.points[i].label - label) < std::abs(rep.points[best].label - label)) best = i;
        }
        return best;
      };
      ck.holds("centre_in_scalar_set", rep.points[nearest(ctx.setup.centre)].in_scalar);
      for (double p : ctx.setup.regular) {
        ck.holds("label " + tag(p) + " in no set", !rep.points[nearest(p)].in_singular);
      }
    }
  }
  json pts = json::array();
  for (const SingularPoint& p : rep.points) {
    pts.push_back({{"label", p.label},
                   {"sets", {p.in_scalar, p.in_riem, p.in_special, p.in_essential, p.in_singular}},
                   {"rate_scalar", p.rate_scalar},
                   {"rate_riem", p.rate_riem},
                   {"ball_bounds", p.ball_bounds}});
  }
  ctx.artifacts["singular_set.json"] = json{{"status", rep.status},
                                            {"rho", rep.rho},
                                            {"scalar_floor", rep.scalar_floor},
                                            {"decades", rep.decades},
                                            {"r0", rep.r0},
                                            {"halvings", rep.halvings},
                                            {"set_order", {"scalar", "riem", "special", "essential", "singular"}},
                                            {"points", pts}}
                                           .dump(2);
}

void write_profile(Context& ctx, const ProfileComparison& pc) {
  if (pc.samples.empty()) return;
  const ProfileSample& s = pc.samples.back();
  std::ostringstream csv;
  csv << "s,psi,model\n" << std::setprecision(12);
  for (std::size_t i = 0; i < s.sigma.size(); ++i) csv << s.sigma[i] << ',' << s.psi[i] << ',' << s.model[i] << '\n';
  ctx.artifacts["profile_" + tag(pc.base_label) + ".csv"] = csv.str();
}

void check_blowup(Context& ctx, Check& ck) {
  const FlowHistory& h = ctx.history;
  const int n = h.n();
  const std::vector<double> lambdas = default_lambdas(h);
  const ProfileComparison pc = blowup_profile(h, ctx.setup.centre, lambdas, 4.0, ctx.config.rho);
  write_profile(ctx, pc);
  const std::string s = ctx.config.scenario;
  const ShrinkerFamily expected = s == "sphere" ? ShrinkerFamily::Sphere : ShrinkerFamily::Cylinder;
  ck.holds("centre family " + std::string(to_string(pc.family)) + " expected " + std::string(to_string(expected)),
           pc.family == expected);
  ck.holds("centre nontrivial", pc.nontrivial);
  if (s == "sphere") {
    ck.within("centre_scaled_scalar_limit", pc.scalar_limit, 0.5 * n, 5e-2, true);
  } else {
    ck.within("centre_scaled_scalar_limit", pc.scalar_limit, 0.5 * (n - 1), 5e-2, true);
  }
  if (s == "neckpinch") {
    const ProfileComparison cap = blowup_profile(h, ctx.setup.regular.front(), lambdas, 4.0, ctx.config.rho);
    write_profile(ctx, cap);
    ck.holds("cap family " + std::string(to_string(cap.family)) + " expected Flat", cap.family == ShrinkerFamily::Flat);
    ck.within("cap_scaled_riem_limit", cap.riem_limit, 0.0, 1e-2, false);
  }
  const RescaledHistory rh = parabolic_rescale(h, lambdas.back(), ctx.setup.centre);
  // Pole stencils amplify the rounding of the rescaled grid like eps / h^3.
  ck.at_most("rescaled_curvature_scaling_error", rh.curvature_scaling_error, 1e-5);
  ck.holds("rescaled_type_one_bound", rh.type_one_bound);
}

void check_volume_decay(Context& ctx, Check& ck, const SingularSetReport& rep) {
  const FlowHistory& h = ctx.history;
  const int n = h.n();
  if (!h.singular()) {
    ck.at_most("singular_set_volume", 0.0, 0.0);
    ck.note("no singular time: the singular set is empty");
    return;
  }
  if (rep.points.empty()) {
    ck.inconclusive("needs the classification check");
    return;
  }
  const VolumeDecay vd = volume_decay(h, rep, membership_mask(rep, 4));
  const std::string s = ctx.config.scenario;
  if (s == "sphere") ck.within("volume_exponent", vd.exponent, 0.5 * n, 5e-2, false);
  if (s == "cylinder") ck.within("volume_exponent", vd.exponent, 0.5 * (n - 1), 5e-2, false);
  if (s == "neckpinch") ck.at_most("final_volume_fraction", vd.final_ratio, vd.limit_fraction);
  const SigmaRkDecomposition dec = sigma_rk_decomposition(h, rep);
  double margin = kNaN;
  bool volume_ok = true;
  for (const SigmaRkLevel& lv : dec.levels) {
    volume_ok = volume_ok && lv.volume_bound;
    if (!lv.labels.empty()) margin = std::isnan(margin) ? lv.worst_integral_margin : std::min(margin, lv.worst_integral_margin);
  }
  ck.holds("shell_volume_bounds", volume_ok);
  ck.holds("integral_bounds", dec.holds);
  std::ostringstream csv;
  csv << "t,volume\n" << std::setprecision(12);
  for (std::size_t k = 0; k < vd.times.size(); ++k) csv << vd.times[k] << ',' << vd.volumes[k] << '\n';
  ctx.artifacts["singular_volume.csv"] = csv.str();
}

void check_ball_inclusion(Context& ctx, Check& ck) {
  const FlowHistory& h = ctx.history;
  // |Ric| bound over the first half of the run; later snapshots fail the
  // precondition and carry no verdict.
  const double t_end = h.singular() ? 0.5 * h.singular_time : h.last_time();
  double M = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (h.snapshots[k].time <= t_end) M = std::max(M, h.curvatures[k].sup_abs_ric());
  }
  BallInclusionOptions opt;
  opt.curves = ctx.config.ball_curves;
  opt.seed = ctx.config.seed;
  const double r = ctx.config.scenario == "sphere" ? 0.25 * ctx.setup.flow.radius(0.0) : 1.0;
  const BallInclusionCheck b = ball_inclusion_check(h, ctx.setup.centre, r, M, opt);
  std::size_t with = 0;
  for (const BallInclusionSample& s : b.samples) with += s.precondition ? 1 : 0;
  ck.at_least("snapshots_meeting_precondition", static_cast<double>(with), 2.0);
  ck.holds("inclusion_where_precondition", b.holds);
  ck.at_least("length_curves", static_cast<double>(b.lengths.curves), 100.0);
  ck.at_most("worst_length_ratio", b.lengths.worst_ratio, 1.0 + opt.tolerance);
}

json provenance(const ScenarioConfig& c, const FlowHistory& h) {
  const LOptions lo = l_options(c);
  return {{"config_hash", config_hash(c)},
          {"seed", c.seed},
          {"grid",
           {{"points", c.points},
            {"snapshots", h.size()},
            {"curve_links", lo.nodes},
            {"singular_basepoint_levels", lo.levels},
            {"multistarts", lo.starts},
            {"volume_q_points", c.q_points},
            {"subsolution_cells", {c.subsolution_q_cells, c.subsolution_t_cells}},
            {"refinement_levels", c.refinement_levels},
            {"classification_points", c.classification_points}}},
          {"models",
           {{"singular_time", "log-log fit of sup|Rm| plus secant-drift extrapolation"},
            {"density", "affine in (T - tbar), last 3 samples"},
            {"singular_basepoint",
             "curve ends at T - eps_k, eps_k halving; polynomial extrapolation in sqrt(eps) to 0; single sequence, "
             "no infimum over subsequences"},
            {"blowup_limits", "least squares in 1/log(lambda (T - t_first))"},
            {"classification", "rate floor rho over the final decade window"}}},
          {"tolerances",
           {{"eta", c.eta},
            {"margin", c.margin},
            {"rho", c.rho},
            {"monotone_slack", c.monotone_slack},
            {"bound_tolerance", c.bound_tolerance},
            {"constancy_tolerance", c.constancy_tolerance},
            {"subsolution_tolerance", c.subsolution_tolerance},
            {"refinement_ratio", c.refinement_ratio},
            {"naber_drift", c.naber_drift},
            {"boundary_cells", c.boundary_cells}}}};
}

json estimate_json(const SingularTimeEstimate& e) {
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  return {{"determined", e.determined}, {"time", num(e.time)},         {"fit_time", num(e.fit_time)},
          {"rate", num(e.rate)},        {"residual", num(e.residual)}, {"uncertainty", num(e.uncertainty)},
          {"exponent", num(e.exponent)}, {"note", e.note}};
}

}  // namespace

std::vector<std::string> scenario_names() { return kScenarios; }
std::vector<std::string> check_names() { return kChecks; }

bool ScenarioConfig::enabled(std::string_view check) const {
  return checks.empty() || std::find(checks.begin(), checks.end(), check) != checks.end();
}

ScenarioConfig default_config(std::string_view scenario) {
  if (std::find(kScenarios.begin(), kScenarios.end(), scenario) == kScenarios.end()) {
    throw ConfigError("unknown scenario '" + std::string(scenario) + "'");
  }
  ScenarioConfig c;
  c.scenario = std::string(scenario);
  if (scenario == "neckpinch") {
    c.points = 9001;
    c.tolerance = 1e-7;
    c.stop_curvature = 1e6;
    c.resolution_cells = 4.0;
  }
  return c;
}

ConfigEntries parse_config_text(std::istream& is) {
  ConfigEntries out;
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    const std::string key = lower(trim(std::string_view(t).substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
    out.emplace_back(key, trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

ConfigEntries config_from_environment() {
  ConfigEntries out;
  const ScenarioConfig probe;
  std::istringstream keys(to_text(probe));
  std::string line;
  while (std::getline(keys, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string name = std::string(kEnvPrefix);
    for (char ch : key) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (const char* v = std::getenv(name.c_str())) out.emplace_back(key, v);
  }
  return out;
}

void apply_entry(ScenarioConfig& c, std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (key == "scenario") {
    if (v != c.scenario) throw ConfigError("scenario must be set before other keys");
  } else if (key == "n") {
    c.n = static_cast<int>(parse_integer(key, v, 2));
  } else if (key == "points") {
    c.points = static_cast<std::size_t>(parse_integer(key, v, 11));
  } else if (key == "sigma") {
    c.sigma = positive(key, v);
  } else if (key == "tolerance") {
    c.tolerance = positive(key, v);
  } else if (key == "stop_curvature") {
    c.stop_curvature = positive(key, v);
  } else if (key == "final_time") {
    c.final_time = positive(key, v);
  } else if (key == "snapshots_per_decade") {
    c.snapshots_per_decade = static_cast<int>(parse_integer(key, v, 4));
  } else if (key == "resolution_cells") {
    c.resolution_cells = parse_double(key, v);
    if (c.resolution_cells < 0.0) throw ConfigError("key 'resolution_cells': must be >= 0");
  } else if (key == "neck_ratio") {
    c.neck_ratio = positive(key, v);
    if (c.neck_ratio >= 1.0) throw ConfigError("key 'neck_ratio': must be below 1");
  } else if (key == "checks") {
    c.checks.clear();
    if (v == "all" || v.empty()) return;
    std::istringstream is(v);
    std::string item;
    while (std::getline(is, item, ',')) {
      item = trim(item);
      if (std::find(kChecks.begin(), kChecks.end(), item) == kChecks.end()) {
        throw ConfigError("unknown check '" + item + "'");
      }
      c.checks.push_back(item);
    }
  } else if (key == "eta") {
    c.eta = positive(key, v);
  } else if (key == "margin") {
    c.margin = parse_double(key, v);
  } else if (key == "rho") {
    c.rho = positive(key, v);
  } else if (key == "monotone_slack") {
    c.monotone_slack = positive(key, v);
  } else if (key == "bound_tolerance") {
    c.bound_tolerance = positive(key, v);
  } else if (key == "constancy_tolerance") {
    c.constancy_tolerance = positive(key, v);
  } else if (key == "subsolution_tolerance") {
    c.subsolution_tolerance = positive(key, v);
  } else if (key == "refinement_ratio") {
    c.refinement_ratio = positive(key, v);
  } else if (key == "naber_drift") {
    c.naber_drift = positive(key, v);
  } else if (key == "boundary_cells") {
    c.boundary_cells = static_cast<int>(parse_integer(key, v, 0));
  } else if (key == "nodes") {
    c.nodes = static_cast<int>(parse_integer(key, v, 4));
  } else if (key == "q_points") {
    c.q_points = static_cast<int>(parse_integer(key, v, 9));
  } else if (key == "subsolution_q_cells") {
    c.subsolution_q_cells = static_cast<int>(parse_integer(key, v, 4));
  } else if (key == "subsolution_t_cells") {
    c.subsolution_t_cells = static_cast<int>(parse_integer(key, v, 4));
  } else if (key == "refinement_levels") {
    c.refinement_levels = static_cast<int>(parse_integer(key, v, 2));
  } else if (key == "classification_points") {
    c.classification_points = static_cast<std::size_t>(parse_integer(key, v, 5));
  } else if (key == "ball_curves") {
    c.ball_curves = static_cast<std::size_t>(parse_integer(key, v, 1));
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(parse_integer(key, v, 0));
  } else if (key == "out") {
    c.out = v;
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

ScenarioConfig make_config(const ConfigEntries& entries) {
  std::string scenario = "sphere";
  for (const auto& [k, v] : entries) {
    if (k == "scenario") scenario = trim(v);
  }
  ScenarioConfig c = default_config(scenario);
  for (const auto& [k, v] : entries) {
    if (k != "scenario") apply_entry(c, k, v);
  }
  return c;
}

std::string to_text(const ScenarioConfig& c) {
  std::ostringstream os;
  std::string checks;
  for (const std::string& s : c.checks) checks += (checks.empty() ? "" : ",") + s;
  os << "scenario = " << c.scenario << '\n'
     << "n = " << c.n << '\n'
     << "points = " << c.points << '\n'
     << "sigma = " << format(c.sigma) << '\n'
     << "tolerance = " << format(c.tolerance) << '\n'
     << "stop_curvature = " << format(c.stop_curvature) << '\n'
     << "final_time = " << format(c.final_time) << '\n'
     << "snapshots_per_decade = " << c.snapshots_per_decade << '\n'
     << "resolution_cells = " << format(c.resolution_cells) << '\n'
     << "neck_ratio = " << format(c.neck_ratio) << '\n'
     << "checks = " << (checks.empty() ? "all" : checks) << '\n'
     << "eta = " << format(c.eta) << '\n'
     << "margin = " << format(c.margin) << '\n'
     << "rho = " << format(c.rho) << '\n'
     << "monotone_slack = " << format(c.monotone_slack) << '\n'
     << "bound_tolerance = " << format(c.bound_tolerance) << '\n'
     << "constancy_tolerance = " << format(c.constancy_tolerance) << '\n'
     << "subsolution_tolerance = " << format(c.subsolution_tolerance) << '\n'
     << "refinement_ratio = " << format(c.refinement_ratio) << '\n'
     << "naber_drift = " << format(c.naber_drift) << '\n'
     << "boundary_cells = " << c.boundary_cells << '\n'
     << "nodes = " << c.nodes << '\n'
     << "q_points = " << c.q_points << '\n'
     << "subsolution_q_cells = " << c.subsolution_q_cells << '\n'
     << "subsolution_t_cells = " << c.subsolution_t_cells << '\n'
     << "refinement_levels = " << c.refinement_levels << '\n'
     << "classification_points = " << c.classification_points << '\n'
     << "ball_curves = " << c.ball_curves << '\n'
     << "seed = " << c.seed << '\n'
     << "out = " << c.out << '\n';
  return os.str();
}

std::string config_hash(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  c.out.clear();
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a(to_text(c));
  return os.str();
}

ScenarioOutcome run_scenario(const ScenarioConfig& config) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };
  ScenarioOutcome out;
  Setup setup;
  try {
    setup = make_setup(config);
    validate(setup.initial);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  json timings = json::object();
  const auto t_evolve = clock::now();
  json manifest{{"schema", "rflab.manifest/1"},
                {"scenario", config.scenario},
                {"config", to_text(config)},
                {"config_hash", config_hash(config)}};
  json report{{"schema", kReportSchema}, {"scenario", config.scenario}, {"config_hash", config_hash(config)}};
  try {
    out.history = evolve(setup.initial, setup.solver);
  } catch (const SolverInstability& e) {
    report["error"] = std::string("solver instability: ") + e.what();
    report["checks"] = json::array();
    manifest["error"] = report["error"];
    out.report = report;
    out.manifest = manifest;
    out.exit_code = kExitSolver;
    return out;
  }
  timings["evolve"] = seconds(t_evolve);
  const FlowHistory& h = out.history;
  const MaterialFlow flow(h);
  Context ctx{config, setup, h, flow, out.artifacts, {}, {}, false};

  json checks = json::array();
  json skipped = json::array();
  bool solver_error = false;
  SingularSetReport singular_set;
  StudyResult study;
  auto stage = [&](const std::string& name, bool applicable, auto&& body) {
    if (!config.enabled(name)) return;
    if (!applicable) {
      skipped.push_back(name);
      return;
    }
    const auto t0 = clock::now();
    Check ck(name);
    try {
      body(ck);
    } catch (const SolverInconsistency& e) {
      solver_error = true;
      ck.fail(std::string("solver inconsistency: ") + e.what());
    } catch (const SolverInstability& e) {
      solver_error = true;
      ck.fail(std::string("solver instability: ") + e.what());
    } catch (const std::exception& e) {
      ck.fail(e.what());
    }
    timings[name] = seconds(t0);
    checks.push_back(ck.to_json());
  };

  const bool singular = h.singular();
  const std::string& s = config.scenario;
  stage("fidelity", setup.exact, [&](Check& ck) { check_fidelity(ctx, ck); });
  stage("type_one", singular, [&](Check& ck) { check_type_one(ctx, ck); });
  stage("reduced_distance", true, [&](Check& ck) { check_reduced_distance(ctx, ck); });
  stage("density", true, [&](Check& ck) { check_density(ctx, ck); });
  stage("monotonicity", true, [&](Check& ck) { check_monotonicity(ctx, ck); });
  const bool want_study = config.enabled("subsolution") || config.enabled("naber");
  if (want_study) {
    const auto t0 = clock::now();
    try {
      study = run_study(ctx);
    } catch (const std::exception& e) {
      stage("subsolution", true, [&](Check& ck) { ck.fail(e.what()); });
    }
    timings["refinement_study"] = seconds(t0);
  }
  if (study.ran) {
    stage("subsolution", true, [&](Check& ck) { check_subsolution(ctx, ck, study); });
    stage("naber", true, [&](Check& ck) { check_naber(ctx, ck, study); });
  }
  stage("classification", true, [&](Check& ck) { check_classification(ctx, ck, singular_set); });
  stage("blowup", singular, [&](Check& ck) { check_blowup(ctx, ck); });
  stage("volume_decay", true, [&](Check& ck) {
    if (singular && singular_set.points.empty()) {
      ClassificationOptions opt;
      opt.points = config.classification_points;
      opt.rho = config.rho;
      singular_set = classify_singular_points(h, opt);
    }
    check_volume_decay(ctx, ck, singular_set);
  });
  stage("ball_inclusion", s == "sphere" || s == "gaussian", [&](Check& ck) { check_ball_inclusion(ctx, ck); });

  std::size_t n_pass = 0, n_fail = 0, n_inc = 0;
  for (const json& c : checks) {
    const std::string st = c["status"];
    n_pass += st == "pass";
    n_fail += st == "fail";
    n_inc += st == "inconclusive";
  }
  report["provenance"] = provenance(config, h);
  report["checks"] = checks;
  report["skipped"] = skipped;
  report["summary"] = {{"pass", n_pass}, {"fail", n_fail}, {"inconclusive", n_inc}};

  if (solver_error) {
    out.exit_code = kExitSolver;
  } else if (n_fail > 0) {
    out.exit_code = kExitCheckFailed;
  } else if (ctx.unreliable) {
    out.exit_code = kExitUnreliable;
  } else if (n_inc > 0) {
    out.exit_code = kExitInconclusive;
  }

  std::ostringstream snap;
  write_history(snap, h);
  out.artifacts["snapshots.txt"] = snap.str();
  json files = json::array({"report.json", "manifest.json"});
  for (const auto& [name, body] : out.artifacts) files.push_back(name);
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  manifest["initial_data"] = h.initial_data;
  manifest["run_status"] = std::string(to_string(h.status));
  manifest["singular_time"] = num(h.singular_time);
  manifest["estimate"] = estimate_json(h.estimate);
  manifest["type_one"] = {{"upper", num(h.type_one.upper)},
                          {"lower", num(h.type_one.lower)},
                          {"lower_all", num(h.type_one.lower_all)},
                          {"lower_bound_ok", h.type_one.lower_bound_ok},
                          {"upper_bounded", h.type_one.upper_bounded}};
  manifest["diagnostics"] = {{"accepted_steps", h.diagnostics.accepted_steps},
                             {"rejected_steps", h.diagnostics.rejected_steps},
                             {"min_step", num(h.diagnostics.min_step)},
                             {"max_step", num(h.diagnostics.max_step)},
                             {"wall_seconds", h.diagnostics.wall_seconds}};
  manifest["snapshots"] = h.size();
  manifest["timings"] = timings;
  manifest["exit_code"] = out.exit_code;
  manifest["artifacts"] = files;
  out.report = std::move(report);
  out.manifest = std::move(manifest);
  return out;
}

void write_outcome(const ScenarioOutcome& outcome, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& body) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    os << body;
  };
  put("report.json", outcome.report.dump(2) + "\n");
  put("manifest.json", outcome.manifest.dump(2) + "\n");
  for (const auto& [name, body] : outcome.artifacts) put(name, body);
}

json compare_reports(const json& a, const json& b, double relative) {
  if (!a.contains("schema") || !b.contains("schema") || a["schema"] != b["schema"]) {
    throw ConfigError("report schema mismatch");
  }
  json diff{{"schema", a["schema"]},
            {"relative_tolerance", relative},
            {"differences", json::array()},
            {"status_changes", json::array()},
            {"only_in_first", json::array()},
            {"only_in_second", json::array()}};
  auto index = [](const json& r) {
    std::map<std::string, json> m;
    if (r.contains("checks")) {
      for (const json& c : r["checks"]) m[c["name"].get<std::string>()] = c;
    }
    return m;
  };
  const auto ia = index(a), ib = index(b);
  for (const auto& [name, ca] : ia) {
    const auto it = ib.find(name);
    if (it == ib.end()) {
      diff["only_in_first"].push_back(name);
      continue;
    }
    const json& cb = it->second;
    if (ca["status"] != cb["status"]) {
      diff["status_changes"].push_back({{"check", name}, {"first", ca["status"]}, {"second", cb["status"]}});
    }
    std::map<std::string, json> vb;
    for (const json& v : cb["values"]) vb[v["name"].get<std::string>()] = v;
    for (const json& va : ca["values"]) {
      const std::string vn = va["name"];
      const auto jt = vb.find(vn);
      if (jt == vb.end()) {
        diff["only_in_first"].push_back(name + "/" + vn);
        continue;
      }
      const json& x = va["value"];
      const json& y = jt->second["value"];
      if (x.is_number() && y.is_number()) {
        const double p = x.get<double>(), q = y.get<double>();
        const double scale = std::max(std::abs(p), std::abs(q));
        const double rel = scale > 0.0 ? std::abs(p - q) / scale : 0.0;
        if (rel > relative) {
          diff["differences"].push_back({{"check", name}, {"value", vn}, {"first", p}, {"second", q}, {"relative", rel}});
        }
      } else if (x != y) {
        diff["differences"].push_back({{"check", name}, {"value", vn}, {"first", x}, {"second", y}});
      }
    }
  }
  for (const auto& [name, cb] : ib) {
    if (!ia.count(name)) diff["only_in_second"].push_back(name);
  }
  diff["identical"] = diff["differences"].empty() && diff["status_changes"].empty() && diff["only_in_first"].empty() &&
                      diff["only_in_second"].empty();
  return diff;
}

}  // namespace rflab
