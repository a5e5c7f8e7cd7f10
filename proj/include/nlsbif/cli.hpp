#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nlsbif/asymptotics.hpp"
#include "nlsbif/bifurcation.hpp"
#include "nlsbif/config.hpp"
#include "nlsbif/continuation.hpp"
#include "nlsbif/error.hpp"
#include "nlsbif/potentials.hpp"
#include "nlsbif/svg.hpp"

namespace nlsbif::cli {

inline constexpr const char* kVersion = "1.0.0";

enum class Scenario { Trace, Pitchfork, Scaling, Localized, ReproduceFigure };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Trace: return "trace";
    case Scenario::Pitchfork: return "pitchfork";
    case Scenario::Scaling: return "scaling";
    case Scenario::Localized: return "localized";
    default: return "reproduce_figure";
  }
}

inline Scenario parse_scenario(const std::string& s) {
  for (auto sc : {Scenario::Trace, Scenario::Pitchfork, Scenario::Scaling, Scenario::Localized, Scenario::ReproduceFigure})
    if (s == to_string(sc)) return sc;
  throw Error(Errc::ConfigError, "unknown scenario '" + s + "'");
}

/// Any module failure, tagged with the scenario stage it came from.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const Error& e)
      : std::runtime_error("stage '" + stage + "': " + e.what()), stage_(std::move(stage)), code_(e.code()) {}
  const std::string& stage() const noexcept { return stage_; }
  Errc code() const noexcept { return code_; }

 private:
  std::string stage_;
  Errc code_;
};

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

/// f(0..n-1) on up to `workers` threads; results keep index order.
template <class F>
auto parallel_map(std::size_t n, int workers, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<R> out;
  out.reserve(n);
  const auto w = static_cast<std::size_t>(std::max(1, workers));
  for (std::size_t start = 0; start < n; start += w) {
    const std::size_t stop = std::min(n, start + w);
    if (w == 1) {
      out.push_back(f(start));
      continue;
    }
    std::vector<std::future<R>> futs;
    for (std::size_t i = start; i < stop; ++i) futs.push_back(std::async(std::launch::async, [&f, i] { return f(i); }));
    for (auto& fu : futs) out.push_back(fu.get());
  }
  return out;
}

struct PotentialSpec {
  std::string kind = "double_well";  // single_well | double_well | table | zero
  double s = 0.7;
  std::string table;
  double edge_tol = 1e-6;

  Potential build() const {
    if (kind == "single_well") return Potential::single_well();
    if (kind == "double_well") return Potential::double_well(s);
    if (kind == "zero") return Potential::zero();
    return Potential::from_file(table, edge_tol);
  }
};

struct GridSpec {
  double L = 25.0;
  double dx = 0.0125;
  int order = 4;
  Grid build() const { return Grid::from_spacing(L, dx); }
};

struct ContinuationSpec {
  double E_max = 20.0;
  ContinuationControls controls = [] {
    ContinuationControls c;
    c.dE_initial = 0.005;
    return c;
  }();
  std::vector<BranchSymmetry> branches{BranchSymmetry::Even};
};

struct BifurcationSpec {
  bool switch_branches = true;
  std::optional<double> E_switch_max;
  double a0 = 0.05;  // switch amplitude, relative to ||psi*||
  std::vector<double> fit_a0{0.01, 0.02, 0.04};
  std::optional<double> profile_E;
};

struct ScalingSpec {
  double x0 = 0.0;
  double E_min = 50.0;
  double E_max = 500.0;
  int samples = 9;
  double points_per_width = 8.0;
};

struct LocalizedSpec {
  std::vector<std::string> points{"center", "min", "-min"};
  std::vector<double> R{0.15, 0.125, 0.1, 0.075, 0.05};
  std::optional<double> probe_x0;
  double probe_E = 100.0;
  double points_per_width = 40.0;
};

struct AuditSpec {
  bool enabled = false;
  std::optional<double> E_max;
};

struct RunConfig {
  Scenario scenario = Scenario::Trace;
  PotentialSpec potential;
  ProblemParams params;
  GridSpec grid;
  ContinuationSpec cont;
  BifurcationSpec bif;
  ScalingSpec scaling;
  LocalizedSpec loc;
  AuditSpec audit;
  std::string figure;
  std::optional<std::string> out_dir;
  double stationarity_tol = 1e-6;
  /// Effective settings, echoed into the manifest.
  std::map<std::string, std::string> echo;
};

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline const std::set<std::string>& figure_ids() {
  static const std::set<std::string> ids{"fig1", "fig1a", "fig2", "fig2a", "figNew"};
  return ids;
}

/// Validates and types a parsed config for one scenario. Sections the
/// scenario does not read, and unknown keys, are rejected.
inline RunConfig parse_run_config(const ConfigFile& cf, Scenario sc) {
  RunConfig rc;
  rc.scenario = sc;
  auto positive = [&](const std::string& key, double v) {
    if (!(v > 0.0)) cf.fail_key(key, "must be positive");
    return v;
  };
  std::set<std::string> allowed{"output"};
  if (auto t = cf.get_double("output.stationarity_tol")) rc.stationarity_tol = positive("output.stationarity_tol", *t);
  rc.out_dir = cf.get_string("output.dir");

  if (sc == Scenario::ReproduceFigure) {
    allowed.insert("figure");
    auto id = cf.get_string("figure.id");
    if (!id) cf.fail(0, "reproduce_figure needs [figure] id");
    if (!figure_ids().count(*id)) cf.fail_key("figure.id", "unknown figure '" + *id + "'");
    rc.figure = *id;
    rc.echo["figure.id"] = *id;
    cf.reject_unused(allowed);
    return rc;
  }

  allowed.insert({"potential", "model", "grid"});
  if (auto k = cf.get_string("potential.kind")) {
    static const std::set<std::string> kinds{"single_well", "double_well", "table", "zero"};
    if (!kinds.count(*k)) cf.fail_key("potential.kind", "expected single_well, double_well, table or zero");
    rc.potential.kind = *k;
  }
  if (auto s = cf.get_double("potential.s")) {
    if (rc.potential.kind != "double_well") cf.fail_key("potential.s", "only double_well takes a separation");
    if (*s < 0.0) cf.fail_key("potential.s", "must be >= 0");
    rc.potential.s = *s;
  }
  if (auto t = cf.get_string("potential.table")) rc.potential.table = *t;
  if (auto e = cf.get_double("potential.edge_tol")) rc.potential.edge_tol = positive("potential.edge_tol", *e);
  if (rc.potential.kind == "table" && rc.potential.table.empty()) cf.fail(0, "potential kind 'table' needs a table path");

  if (auto p = cf.get_double("model.p")) rc.params.p = positive("model.p", *p);
  if (auto s = cf.get_double("model.sigma")) {
    if (*s == 0.0) cf.fail_key("model.sigma", "must be nonzero");
    rc.params.sigma = *s;
  }
  if (auto n = cf.get_string("model.normalization")) {
    if (*n == "standard")
      rc.params.normalization = Normalization::Standard;
    else if (*n == "half_scaled")
      rc.params.normalization = Normalization::HalfScaled;
    else
      cf.fail_key("model.normalization", "expected standard or half_scaled");
  }

  if (auto L = cf.get_double("grid.L")) rc.grid.L = positive("grid.L", *L);
  const auto dx = cf.get_double("grid.dx");
  const auto n = cf.get_int("grid.n");
  if (dx && n) cf.fail_key("grid.n", "give either dx or n, not both");
  if (dx) rc.grid.dx = positive("grid.dx", *dx);
  if (n) {
    if (*n < 3 || *n % 2 == 0) cf.fail_key("grid.n", "must be odd and >= 3");
    rc.grid.dx = 2.0 * rc.grid.L / (*n - 1);
  }
  if (auto o = cf.get_int("grid.order")) {
    if (*o != 2 && *o != 4) cf.fail_key("grid.order", "must be 2 or 4");
    rc.grid.order = *o;
  }
  if (rc.grid.dx >= rc.grid.L) cf.fail_key(dx ? "grid.dx" : "grid.L", "spacing must be smaller than the half width");
  rc.params.order = stencil_order_from_int(rc.grid.order);

  if (sc == Scenario::Trace || sc == Scenario::Pitchfork) {
    allowed.insert({"continuation", "audit"});
    auto& c = rc.cont;
    if (auto v = cf.get_double("continuation.E_max")) c.E_max = *v;
    if (auto v = cf.get_double("continuation.dE_initial")) c.controls.dE_initial = positive("continuation.dE_initial", *v);
    if (auto v = cf.get_double("continuation.dE_min")) c.controls.dE_min = positive("continuation.dE_min", *v);
    if (auto v = cf.get_double("continuation.dE_max")) c.controls.dE_max = positive("continuation.dE_max", *v);
    if (auto v = cf.get_double("continuation.grow")) {
      if (!(*v >= 1.0)) cf.fail_key("continuation.grow", "must be >= 1");
      c.controls.grow = *v;
    }
    if (c.controls.dE_min > c.controls.dE_max) cf.fail_key("continuation.dE_min", "must not exceed dE_max");
    if (auto b = cf.get_list("continuation.branches")) {
      c.branches.clear();
      for (const auto& s : *b) {
        if (s == "even")
          c.branches.push_back(BranchSymmetry::Even);
        else if (s == "odd")
          c.branches.push_back(BranchSymmetry::Odd);
        else
          cf.fail_key("continuation.branches", "items must be even or odd");
      }
    }
    if (auto v = cf.get_bool("audit.enabled")) rc.audit.enabled = *v;
    if (auto v = cf.get_double("audit.E_max")) rc.audit.E_max = *v;
  }
  if (sc == Scenario::Pitchfork) {
    allowed.insert("bifurcation");
    auto& b = rc.bif;
    if (auto v = cf.get_bool("bifurcation.switch")) b.switch_branches = *v;
    if (auto v = cf.get_double("bifurcation.E_switch_max")) b.E_switch_max = *v;
    if (auto v = cf.get_double("bifurcation.a0")) b.a0 = positive("bifurcation.a0", *v);
    if (auto v = cf.get_double_list("bifurcation.fit_a0")) {
      for (double a : *v) positive("bifurcation.fit_a0", a);
      b.fit_a0 = *v;
    }
    if (auto v = cf.get_double("bifurcation.profile_E")) b.profile_E = *v;
  }
  if (sc == Scenario::Scaling) {
    allowed.insert("scaling");
    auto& s = rc.scaling;
    if (auto v = cf.get_double("scaling.x0")) s.x0 = *v;
    if (auto v = cf.get_double("scaling.E_min")) s.E_min = positive("scaling.E_min", *v);
    if (auto v = cf.get_double("scaling.E_max")) s.E_max = positive("scaling.E_max", *v);
    if (!(s.E_max > s.E_min)) cf.fail_key("scaling.E_max", "must exceed E_min");
    if (auto v = cf.get_int("scaling.samples")) {
      if (*v < 3) cf.fail_key("scaling.samples", "must be >= 3");
      s.samples = *v;
    }
    if (auto v = cf.get_double("scaling.points_per_width")) {
      if (!(*v >= 8.0)) cf.fail_key("scaling.points_per_width", "must be >= 8");
      s.points_per_width = *v;
    }
  }
  if (sc == Scenario::Localized) {
    allowed.insert("localized");
    auto& l = rc.loc;
    if (auto v = cf.get_list("localized.points")) l.points = *v;
    for (const auto& p : l.points) {
      if (p == "center" || p == "min" || p == "-min") continue;
      std::istringstream ss(p);
      double x;
      if (!(ss >> x) || !ss.eof()) cf.fail_key("localized.points", "items must be center, min, -min or a number");
    }
    if (auto v = cf.get_double_list("localized.R")) {
      if (v->size() < 3) cf.fail_key("localized.R", "need at least 3 widths");
      for (double r : *v) positive("localized.R", r);
      l.R = *v;
    }
    if (auto v = cf.get_double("localized.probe_x0")) l.probe_x0 = *v;
    if (auto v = cf.get_double("localized.probe_E")) l.probe_E = positive("localized.probe_E", *v);
    if (auto v = cf.get_double("localized.points_per_width")) {
      if (!(*v >= 8.0)) cf.fail_key("localized.points_per_width", "must be >= 8");
      l.points_per_width = *v;
    }
  }
  try {
    rc.params.validate();
  } catch (const Error& e) {
    cf.fail(0, e.what());
  }
  cf.reject_unused(allowed);
  for (const auto& [k, e] : cf.entries()) rc.echo[k] = e.value;
  return rc;
}

/// In-memory artifacts, written only after every stage succeeded so a failed
/// run leaves nothing behind but its error.
struct Artifacts {
  std::map<std::string, std::string> files;
  std::vector<std::string> summary;
  std::size_t unverified_rows = 0;

  std::ostringstream& open(const std::string& name) {
    streams_[name] = std::make_unique<std::ostringstream>();
    return *streams_[name];
  }
  void close_all() {
    for (auto& [n, s] : streams_) files[n] = s->str();
    streams_.clear();
  }
  void note(const std::string& s) { summary.push_back(s); }

 private:
  std::map<std::string, std::unique_ptr<std::ostringstream>> streams_;
};

struct RunOptions {
  int workers = 1;
  bool allow_unverified = false;
};

struct Context {
  const RunConfig& cfg;
  RunOptions opt;
  Artifacts& out;
  std::string prefix;  // artifact name prefix, used by figure runs
};

/// Rows whose stationary identity misses the tolerance block the run unless
/// --allow-unverified was given.
inline void verify_rows(Context& ctx, const std::string& what, const std::vector<const StationaryState*>& states) {
  std::size_t bad = 0;
  double worst = 0.0;
  for (auto* s : states) {
    worst = std::max(worst, s->stationarity_residual);
    if (!(s->stationarity_residual <= ctx.cfg.stationarity_tol)) ++bad;
  }
  if (bad == 0) return;
  if (!ctx.opt.allow_unverified)
    throw Error(Errc::UnverifiedState, std::to_string(bad) + " rows of " + what + " exceed the stationarity tolerance " +
                                           num(ctx.cfg.stationarity_tol) + " (worst " + num(worst) +
                                           "); rerun with --allow-unverified to emit them");
  ctx.out.unverified_rows += bad;
  ctx.out.note(what + ": " + std::to_string(bad) + " unverified rows emitted (worst " + num(worst) + ")");
}

inline void verify_branch(Context& ctx, const Branch& br) {
  std::vector<const StationaryState*> v;
  for (const auto& p : br.points) v.push_back(&p.state);
  verify_rows(ctx, "branch " + br.label, v);
}

inline Model build_model(const RunConfig& cfg) { return Model(cfg.grid.build(), cfg.potential.build(), cfg.params); }

template <class G>
std::vector<double> column(const Branch& br, G g) {
  std::vector<double> v;
  for (const auto& p : br.points) v.push_back(g(p));
  return v;
}

inline std::vector<double> energies(const Branch& br) {
  return column(br, [](const BranchPoint& p) { return p.E(); });
}

inline std::string branch_name(BranchSymmetry s) {
  switch (s) {
    case BranchSymmetry::Even: return "even";
    case BranchSymmetry::Odd: return "odd";
    case BranchSymmetry::AsymmetricPlus: return "asym_plus";
    default: return "asym_minus";
  }
}

inline std::vector<Branch> trace_linear_branches(Context& ctx, const Model& model, const LinearModes& modes) {
  const auto& c = ctx.cfg.cont;
  if (!(c.E_max > modes.E0))
    throw Error(Errc::ConfigError, "continuation.E_max = " + num(c.E_max) + " does not exceed E0 = " + num(modes.E0));
  return parallel_map(c.branches.size(), ctx.opt.workers, [&](std::size_t i) {
    return stage("trace " + branch_name(c.branches[i]), [&] {
      return trace_from_linear(model, modes, c.branches[i], c.E_max, c.controls);
    });
  });
}

inline void emit_branch(Context& ctx, const Branch& br) {
  verify_branch(ctx, br);
  write_branch_csv(ctx.out.open(ctx.prefix + "branch_" + branch_name(br.symmetry) + ".csv"), br);
}

inline void note_slope_changes(Context& ctx, const Model& model, const Branch& br) {
  const auto sc = stage("slope changes", [&] { return find_slope_changes(model, br); });
  for (const auto& c : sc)
    ctx.out.note("branch " + br.label + ": dN/dE turns " + (c.to_negative ? "negative" : "positive") + " at E = " + num(c.E));
  if (sc.empty()) ctx.out.note("branch " + br.label + ": dN/dE keeps its sign");
}

inline void plot_branches(Context& ctx, const std::vector<const Branch*>& brs, const std::string& title) {
  SvgPlot n{title + ": N(E)", "E", "N = ||phi||^2"};
  SvgPlot l{title + ": second eigenvalue of L+", "E", "lambda1"};
  l.hline = 0.0;
  for (auto* b : brs) {
    n.add(b->label, energies(*b), column(*b, [](const BranchPoint& p) { return p.state.N; }),
          b->symmetry == BranchSymmetry::Odd);
    if (b->symmetry != BranchSymmetry::Odd)
      l.add(b->label, energies(*b), column(*b, [](const BranchPoint& p) { return p.lambda1(); }));
  }
  n.write(ctx.out.open(ctx.prefix + "N_E.svg"));
  l.write(ctx.out.open(ctx.prefix + "lambda_E.svg"));
}

struct AuditArm {
  double dx = 0.0;
  Branch branch;
  std::vector<LambdaCrossing> crossings;
};

struct ResolutionAudit {
  AuditArm coarse, fine;
  std::vector<double> only_coarse, only_fine;
  bool discrepancy() const { return !only_coarse.empty() || !only_fine.empty(); }
};

/// Two crossings match when they lie within 1% of max(1, |E|) of each other.
inline std::vector<double> unmatched(const std::vector<LambdaCrossing>& a, const std::vector<LambdaCrossing>& b) {
  std::vector<double> out;
  for (const auto& x : a) {
    bool hit = false;
    for (const auto& y : b)
      if (x.to_negative == y.to_negative && std::abs(x.E - y.E) <= 0.01 * std::max(1.0, std::abs(x.E))) hit = true;
    if (!hit) out.push_back(x.E);
  }
  return out;
}

/// Even-branch lambda1 trace at dx and at dx_fine, with the crossings that
/// appear in only one of them.
inline ResolutionAudit resolution_audit(const RunConfig& cfg, double dx, double dx_fine, double E_max, int workers) {
  const double dxs[2] = {dx, dx_fine};
  auto arms = parallel_map(2, workers, [&](std::size_t i) {
    return stage(i == 0 ? "audit coarse" : "audit fine", [&] {
      AuditArm a;
      a.dx = dxs[i];
      const Model m(Grid::from_spacing(cfg.grid.L, dxs[i]), cfg.potential.build(), cfg.params);
      const auto modes = model_linear_modes(m);
      a.branch = trace_from_linear(m, modes, BranchSymmetry::Even, E_max, cfg.cont.controls);
      a.crossings = all_crossings(a.branch);
      return a;
    });
  });
  ResolutionAudit r;
  r.coarse = std::move(arms[0]);
  r.fine = std::move(arms[1]);
  r.only_coarse = unmatched(r.coarse.crossings, r.fine.crossings);
  r.only_fine = unmatched(r.fine.crossings, r.coarse.crossings);
  return r;
}

inline void emit_audit(Context& ctx, const ResolutionAudit& a) {
  auto& os = ctx.out.open(ctx.prefix + "audit.txt");
  os.precision(12);
  auto list = [&](const std::vector<LambdaCrossing>& cs) {
    std::string s;
    for (const auto& c : cs) s += (s.empty() ? "" : ", ") + num(c.E) + (c.to_negative ? " (down)" : " (up)");
    return s.empty() ? std::string("none") : s;
  };
  auto vals = [&](const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ", ") + num(x);
    return s.empty() ? std::string("none") : s;
  };
  os << "dx_coarse = " << a.coarse.dx << '\n'
     << "dx_fine = " << a.fine.dx << '\n'
     << "crossings_coarse = " << list(a.coarse.crossings) << '\n'
     << "crossings_fine = " << list(a.fine.crossings) << '\n'
     << "only_coarse = " << vals(a.only_coarse) << '\n'
     << "only_fine = " << vals(a.only_fine) << '\n'
     << "discrepancy = " << (a.discrepancy() ? "true" : "false") << '\n';
  ctx.out.note(std::string("resolution audit: ") +
               (a.discrepancy() ? "crossing sets differ between dx = " + num(a.coarse.dx) + " and " + num(a.fine.dx)
                                : "both resolutions agree"));
  SvgPlot p{"resolution audit: lambda1(E)", "E", "lambda1"};
  p.hline = 0.0;
  p.add("dx = " + num(a.coarse.dx), energies(a.coarse.branch),
        column(a.coarse.branch, [](const BranchPoint& q) { return q.lambda1(); }), true);
  p.add("dx = " + num(a.fine.dx), energies(a.fine.branch),
        column(a.fine.branch, [](const BranchPoint& q) { return q.lambda1(); }));
  p.write(ctx.out.open(ctx.prefix + "audit_lambda.svg"));
  verify_branch(ctx, a.coarse.branch);
  verify_branch(ctx, a.fine.branch);
}

inline void maybe_audit(Context& ctx) {
  if (!ctx.cfg.audit.enabled) return;
  const double E_max = ctx.cfg.audit.E_max.value_or(ctx.cfg.cont.E_max);
  emit_audit(ctx, resolution_audit(ctx.cfg, ctx.cfg.grid.dx, 0.5 * ctx.cfg.grid.dx, E_max, ctx.opt.workers));
}

inline void run_trace(Context& ctx) {
  const Model model = stage("setup", [&] { return build_model(ctx.cfg); });
  const auto modes = stage("linear modes", [&] { return model_linear_modes(model); });
  ctx.out.note("E0 = " + num(modes.E0) + (modes.E1 ? ", E1 = " + num(*modes.E1) : ""));
  const auto brs = trace_linear_branches(ctx, model, modes);
  std::vector<const Branch*> ptrs;
  for (const auto& b : brs) {
    emit_branch(ctx, b);
    note_slope_changes(ctx, model, b);
    if (b.symmetry == BranchSymmetry::Even)
      for (const auto& c : all_crossings(b))
        ctx.out.note(std::string("lambda1 crosses zero ") + (c.to_negative ? "downward" : "upward") + " near E = " + num(c.E));
    ptrs.push_back(&b);
  }
  plot_branches(ctx, ptrs, to_string(ctx.cfg.scenario));
  maybe_audit(ctx);
}

/// State on `br` moved to exactly E by Newton from the nearest point.
inline StationaryState state_at(const Model& model, const Branch& br, double E) {
  const BranchPoint* best = &br.points.front();
  for (const auto& p : br.points)
    if (std::abs(p.E() - E) < std::abs(best->E() - E)) best = &p;
  NewtonOptions o;
  o.symmetric_constraint = br.symmetry == BranchSymmetry::Even;
  o.odd_constraint = br.symmetry == BranchSymmetry::Odd;
  return newton_solve(model, best->state.phi, E, o);
}

inline void run_pitchfork(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Model model = stage("setup", [&] { return build_model(cfg); });
  const auto modes = stage("linear modes", [&] { return model_linear_modes(model); });
  ctx.out.note("E0 = " + num(modes.E0) + (modes.E1 ? ", E1 = " + num(*modes.E1) : ""));
  auto brs = trace_linear_branches(ctx, model, modes);
  const Branch* even = nullptr;
  for (const auto& b : brs)
    if (b.symmetry == BranchSymmetry::Even) even = &b;
  if (!even) throw Error(Errc::ConfigError, "pitchfork needs the even branch in continuation.branches");

  const auto rep = stage("bifurcation", [&] { return find_bifurcation(model, *even, modes); });
  std::vector<Branch> asym;
  if (!rep) {
    ctx.out.note("no crossing of lambda1 up to E = " + num(cfg.cont.E_max));
    ctx.out.open(ctx.prefix + "report.txt") << "crossing = none\nE_max = " << num(cfg.cont.E_max) << '\n';
  } else {
    auto& os = ctx.out.open(ctx.prefix + "report.txt");
    write_report(os, *rep, cfg.params);
    ctx.out.note("pitchfork at E* = " + num(rep->E_star) + ", " + to_string(rep->classification));
    if (cfg.bif.switch_branches) {
      const double E_sw = cfg.bif.E_switch_max.value_or(cfg.cont.E_max);
      const double a0 = cfg.bif.a0 * l2_norm(rep->psi_star.phi);
      ContinuationControls c = cfg.cont.controls;
      c.dE_initial = std::min(c.dE_initial, 0.5 * std::abs(rep->Q.Q) * a0 * a0);
      asym = parallel_map(2, ctx.opt.workers, [&](std::size_t i) {
        return stage("branch switch", [&] { return branch_switch(model, *rep, a0, i == 0 ? +1 : -1, E_sw, c); });
      });
      std::vector<double> fit_a0;
      for (double r : cfg.bif.fit_a0) fit_a0.push_back(r * l2_norm(rep->psi_star.phi));
      const auto fit = stage("quadratic law", [&] { return quadratic_law_fit(model, *rep, fit_a0); });
      os << "quadratic_fit_half_Q = " << num(fit.half_Q_fit) << '\n'
         << "quadratic_fit_quartic = " << num(fit.quartic) << '\n'
         << "quadratic_fit_relative_error = " << num(fit.relative_error) << '\n';
      // mirror identity on shared E values
      double mirror = 0.0;
      for (const auto& p : asym[0].points)
        for (const auto& q : asym[1].points)
          if (p.E() == q.E())
            mirror = std::max(mirror, l2_norm(reflect(p.state.phi) - q.state.phi) / l2_norm(p.state.phi));
      os << "mirror_identity_residual = " << num(mirror) << '\n';
    }
  }
  std::vector<const Branch*> ptrs;
  for (const auto& b : brs) ptrs.push_back(&b);
  for (const auto& b : asym) ptrs.push_back(&b);
  for (auto* b : ptrs) {
    emit_branch(ctx, *b);
    note_slope_changes(ctx, model, *b);
  }
  plot_branches(ctx, ptrs, "pitchfork");

  if (!asym.empty()) {
    SvgPlot x{"pitchfork diagram", "E", "x_cm"};
    for (auto* b : ptrs)
      if (b->symmetry != BranchSymmetry::Odd)
        x.add(b->label, energies(*b), column(*b, [](const BranchPoint& p) { return p.state.x_cm; }));
    x.write(ctx.out.open(ctx.prefix + "xcm_E.svg"));

    const double Ep = cfg.bif.profile_E.value_or(asym[0].points.back().E());
    if (Ep > rep->E_star) {
      const auto ss = stage("profiles", [&] { return state_at(model, *even, Ep); });
      const auto sa = stage("profiles", [&] { return state_at(model, asym[0], Ep); });
      SvgPlot pr{"states at E = " + num(Ep), "x", "phi"};
      const auto xs = model.grid().nodes();
      pr.add("symmetric", xs, ss.phi.data());
      pr.add("asymmetric", xs, sa.phi.data(), true);
      pr.write(ctx.out.open(ctx.prefix + "profiles.svg"));
      auto& csv = ctx.out.open(ctx.prefix + "profiles.csv");
      csv.precision(12);
      csv << "x,symmetric,asymmetric\n";
      for (std::size_t i = 0; i < xs.size(); ++i) csv << xs[i] << ',' << ss.phi[i] << ',' << sa.phi[i] << '\n';
      verify_rows(ctx, "profiles", {&ss, &sa});
    }
  }
  maybe_audit(ctx);
}

inline void run_scaling(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& sc = cfg.scaling;
  const Potential v = cfg.potential.build();
  LocalizedOptions o;
  o.dx = cfg.grid.dx;
  o.L = cfg.grid.L;
  o.order = cfg.params.order;
  o.points_per_width = sc.points_per_width;
  std::vector<double> Es;
  for (int i = 0; i < sc.samples; ++i)
    Es.push_back(sc.E_min * std::pow(sc.E_max / sc.E_min, static_cast<double>(i) / (sc.samples - 1)));
  const auto samples = parallel_map(Es.size(), ctx.opt.workers, [&](std::size_t i) {
    return stage("solve E = " + num(Es[i]), [&] { return solve_localized(v, cfg.params, sc.x0, Es[i], o); });
  });
  std::vector<const StationaryState*> st;
  for (const auto& s : samples) st.push_back(&s.state);
  verify_rows(ctx, "scaling samples", st);

  double vsup = 0.0;
  for (double x : cfg.grid.build().nodes()) vsup = std::max(vsup, std::abs(v.value(x)));
  // the top of the window is inclusive up to rounding of the log spacing
  const ScalingWindow w{sc.E_min, sc.E_max * (1.0 + 1e-12), vsup, 0.1};
  const auto rep = stage("fit", [&] { return fit_scaling(samples, cfg.params, w); });

  auto& csv = ctx.out.open(ctx.prefix + "scaling.csv");
  csv.precision(12);
  csv << "E,R,dx,N,norm_2p2,grad_norm2,profile_distance,stationarity_residual,resolved\n";
  for (const auto& s : samples)
    csv << s.E << ',' << s.R << ',' << s.dx << ',' << s.state.N << ',' << s.state.norm_2p2 << ',' << s.state.grad_norm2
        << ',' << s.profile_distance << ',' << s.state.stationarity_residual << ',' << (s.resolved ? 1 : 0) << '\n';
  auto& sum = ctx.out.open(ctx.prefix + "scaling_summary.txt");
  sum.precision(12);
  for (const auto& f : rep.fits)
    sum << to_string(f.quantity) << ".exponent_fitted = " << f.exponent_fitted << '\n'
        << to_string(f.quantity) << ".exponent_expected = " << f.exponent_expected << '\n'
        << to_string(f.quantity) << ".prefactor_fitted = " << f.prefactor_fitted << '\n'
        << to_string(f.quantity) << ".b_estimate = " << f.b_estimate << '\n'
        << to_string(f.quantity) << ".r2 = " << f.r2 << '\n';
  sum << "ratio_N = " << rep.ratio_N << "\nratio_N_expected = " << rep.ratio_N_expected
      << "\nratio_N_error = " << rep.ratio_N_error << "\nratio_grad = " << rep.ratio_grad
      << "\nratio_grad_expected = " << rep.ratio_grad_expected << "\nratio_grad_error = " << rep.ratio_grad_error
      << "\nsamples_used = " << rep.used << "\nexcluded_unresolved = " << rep.excluded_unresolved
      << "\nexcluded_distorted = " << rep.excluded_distorted
      << "\nprofile_monotone = " << (rep.profile_monotone ? "true" : "false") << '\n';
  for (const auto& f : rep.fits)
    ctx.out.note(std::string(to_string(f.quantity)) + " ~ E^" + num(f.exponent_fitted) + " (expected " +
                 num(f.exponent_expected) + ")");

  SvgPlot p{"large-E scaling", "E", "value"};
  p.logx = p.logy = true;
  auto col = [&](auto g) {
    std::vector<double> v2;
    for (const auto& s : samples) v2.push_back(g(s));
    return v2;
  };
  p.add("||phi||_{2p+2}^{2p+2}", Es, col([](const LocalizedSample& s) { return s.state.norm_2p2; }));
  p.add("N", Es, col([](const LocalizedSample& s) { return s.state.N; }));
  p.add("||phi'||^2", Es, col([](const LocalizedSample& s) { return s.state.grad_norm2; }));
  p.write(ctx.out.open(ctx.prefix + "scaling.svg"));
}

inline double resolve_point(const std::string& p, const Potential& v) {
  if (p == "center") return 0.0;
  if (p == "min" || p == "-min") {
    const double m = double_well_minimum(v);
    if (m == 0.0) throw Error(Errc::NotCriticalPoint, "potential has no off-center minimum");
    return p == "min" ? m : -m;
  }
  return std::stod(p);
}

inline void run_localized(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& lc = cfg.loc;
  const Potential v = cfg.potential.build();
  LocalizedOptions o;
  o.dx = cfg.grid.dx;
  o.L = cfg.grid.L;
  o.order = cfg.params.order;
  o.points_per_width = lc.points_per_width;
  const auto reps = parallel_map(lc.points.size(), ctx.opt.workers, [&](std::size_t i) {
    return stage("localized " + lc.points[i], [&] {
      const double x0 = resolve_point(lc.points[i], v);
      std::vector<double> Es;
      for (double R : lc.R) Es.push_back(cfg.params.scale() * (1.0 / (R * R) - v.value(x0)));
      return localized_branch_check(x0, v, cfg.params, Es, o);
    });
  });
  auto& csv = ctx.out.open(ctx.prefix + "localized.csv");
  csv.precision(12);
  csv << "x0,E,R,dx,n_negative,lambda2_rescaled,rescaled_mass,dN_dE,stationarity_residual\n";
  auto& sum = ctx.out.open(ctx.prefix + "localized_summary.txt");
  sum.precision(12);
  SvgPlot p{"second L+ eigenvalue law", "R", "lambda2 / R^4"};
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = reps[i];
    std::vector<const StationaryState*> st;
    std::vector<double> rs, ls;
    for (const auto& s : r.samples) {
      st.push_back(&s.state);
      csv << r.x0 << ',' << s.E << ',' << s.R << ',' << s.dx << ',' << s.n_negative << ',' << s.lambda2_rescaled << ','
          << s.rescaled_mass << ',' << s.dN_dE << ',' << s.state.stationarity_residual << '\n';
      rs.push_back(s.R);
      ls.push_back(s.lambda2_rescaled / std::pow(s.R, 4));
    }
    verify_rows(ctx, "localized " + lc.points[i], st);
    const std::string k = "point." + lc.points[i] + ".";
    sum << k << "x0 = " << r.x0 << '\n'
        << k << "V2 = " << r.V2 << '\n'
        << k << "morse_counts_ok = " << (r.counts_ok ? "true" : "false") << '\n'
        << k << "lambda2_R4_coefficient = " << r.lambda2_fit.c4 << '\n'
        << k << "lambda2_half_V2 = " << r.lambda2_expected << '\n'
        << k << "lambda2_rayleigh = " << r.lambda2_rayleigh << '\n'
        << k << "lambda2_sign_ok = " << (r.sign_ok ? "true" : "false") << '\n'
        << k << "mass_R4_coefficient = " << r.mass_fit.c4 << '\n'
        << k << "mass_R4_expected = " << r.mass_slope_expected << '\n'
        << k << "stability = " << r.stability << '\n';
    p.add(lc.points[i], rs, ls);
    ctx.out.note("point " + lc.points[i] + " (x0 = " + num(r.x0) + "): n_negative " +
                 (r.counts_ok ? "matches" : "does not match") + " the Morse index, " + r.stability);
  }
  p.write(ctx.out.open(ctx.prefix + "lambda2_law.svg"));
  if (lc.probe_x0) {
    const auto pr = stage("probe", [&] { return nonexistence_probe(*lc.probe_x0, v, cfg.params, lc.probe_E, o); });
    sum << "probe.x0 = " << *lc.probe_x0 << "\nprobe.E = " << lc.probe_E << "\nprobe.outcome = " << to_string(pr.outcome)
        << "\nprobe.x_cm = " << pr.x_cm << "\nprobe.R = " << pr.R << '\n';
    ctx.out.note("probe at x0 = " + num(*lc.probe_x0) + ": " + to_string(pr.outcome));
  }
}

/// Figure presets run in the half-scaled normalization with sigma = -2, so
/// the nonlinear term reads -|psi|^{2p} psi as in the figures.
inline RunConfig figure_config(const std::string& id, double s, double p, double E_max, const RunConfig& base) {
  RunConfig rc = base;
  rc.potential.kind = "double_well";
  rc.potential.s = s;
  rc.params.p = p;
  rc.params.sigma = -2.0;
  rc.params.normalization = Normalization::HalfScaled;
  rc.grid = GridSpec{};
  rc.cont = ContinuationSpec{};
  rc.cont.E_max = E_max;
  rc.bif = BifurcationSpec{};
  rc.audit = AuditSpec{};
  if (id == "fig2a") rc.grid = GridSpec{30.0, 0.1, 2};
  rc.params.order = stencil_order_from_int(rc.grid.order);
  return rc;
}

inline void echo_figure(RunConfig& base, const std::string& tag, const RunConfig& rc) {
  base.echo[tag + ".s"] = num(rc.potential.s);
  base.echo[tag + ".p"] = num(rc.params.p);
  base.echo[tag + ".sigma"] = num(rc.params.sigma);
  base.echo[tag + ".normalization"] = "half_scaled";
  base.echo[tag + ".L"] = num(rc.grid.L);
  base.echo[tag + ".dx"] = num(rc.grid.dx);
  base.echo[tag + ".order"] = std::to_string(rc.grid.order);
  base.echo[tag + ".E_max"] = num(rc.cont.E_max);
}

inline void run_figure(RunConfig& base, const RunOptions& opt, Artifacts& out) {
  const std::string id = base.figure;
  auto sub = [&](RunConfig& rc, const std::string& tag, auto fn) {
    echo_figure(base, tag, rc);
    Context c{rc, opt, out, tag + "_"};
    fn(c);
  };
  if (id == "fig1" || id == "fig2") {
    const double p = id == "fig1" ? 1.0 : 3.0;
    RunConfig a = figure_config(id, 0.6, p, 20.0, base);
    RunConfig b = figure_config(id, 0.7, p, 20.0, base);
    sub(a, id + "_s0.6", run_trace);
    if (id == "fig2") {
      b.audit.enabled = true;
      b.audit.E_max = 30.0;
      b.grid.dx = 0.025;
    }
    sub(b, id + "_s0.7", run_trace);
    if (id == "fig1") {
      RunConfig big = figure_config(id, 0.7, p, 100.0, base);
      sub(big, id + "_s0.7_large", run_trace);
    }
  } else if (id == "fig1a") {
    RunConfig a = figure_config(id, 0.7, 1.0, 20.0, base);
    a.bif.profile_E = 15.0;
    sub(a, id, run_pitchfork);
  } else if (id == "fig2a") {
    RunConfig a = figure_config(id, 10.0, 3.0, 1.0, base);
    a.cont.branches = {BranchSymmetry::Even, BranchSymmetry::Odd};
    sub(a, id, run_pitchfork);
  } else {
    RunConfig a = figure_config(id, 4.0, 5.0, 0.4, base);
    a.cont.branches = {BranchSymmetry::Even, BranchSymmetry::Odd};
    sub(a, id, run_pitchfork);
  }
}

struct RunResult {
  std::vector<std::string> written;
  std::vector<std::string> summary;
  double wall_seconds = 0.0;
};

/// Executes the scenario and writes its artifacts plus manifest.txt into `out_dir`.
inline RunResult run(RunConfig cfg, const std::string& config_path, const std::string& out_dir, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  Artifacts out;
  Context ctx{cfg, opt, out, ""};
  switch (cfg.scenario) {
    case Scenario::Trace: run_trace(ctx); break;
    case Scenario::Pitchfork: run_pitchfork(ctx); break;
    case Scenario::Scaling: run_scaling(ctx); break;
    case Scenario::Localized: run_localized(ctx); break;
    case Scenario::ReproduceFigure: run_figure(cfg, opt, out); break;
  }
  out.close_all();
  {
    std::ostringstream s;
    for (const auto& l : out.summary) s << l << '\n';
    out.files["summary.txt"] = s.str();
  }

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create output directory " + out_dir + ": " + ec.message());
  RunResult res;
  for (const auto& [name, content] : out.files) {
    std::ofstream f(fs::path(out_dir) / name, std::ios::binary);
    if (!(f << content)) throw Error(Errc::IoError, "cannot write " + name);
    res.written.push_back(name);
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.summary = out.summary;

  std::ofstream m(fs::path(out_dir) / "manifest.txt");
  m << "tool = nlsbif\nversion = " << kVersion << "\ncompiler = " << __VERSION__ << "\nscenario = "
    << to_string(cfg.scenario) << "\nconfig_path = " << config_path << "\nworkers = " << opt.workers
    << "\nallow_unverified = " << (opt.allow_unverified ? "true" : "false")
    << "\nunverified_rows = " << out.unverified_rows << "\nwall_time_s = " << num(res.wall_seconds) << "\n[config]\n";
  for (const auto& [k, v] : cfg.echo) m << k << " = " << v << '\n';
  m << "[artifacts]\n";
  for (const auto& n : res.written) m << n << '\n';
  if (!m) throw Error(Errc::IoError, "cannot write manifest.txt");
  res.written.push_back("manifest.txt");
  return res;
}

}  // namespace nlsbif::cli
