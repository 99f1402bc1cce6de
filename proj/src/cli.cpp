#include "hm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hm/heegner.hpp"
#include "hm/moments.hpp"
#include "hm/summation.hpp"
#include "hm/workspace.hpp"

namespace hm::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

Json est(Estimate e) { return Json{{"value", e.value}, {"error", e.error}}; }

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Csv {
 public:
  Csv(const std::string& kind, const CurveData& curve, std::uint64_t seed, const std::vector<std::string>& columns) {
    os_ << "# hm-csv v1 " << kind << " curve=" << curve.label << " N=" << curve.conductor << " seed=" << seed << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
    os_ << "\n";
  }
  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << "\n";
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(double x) { return num(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class T>
    requires std::is_integral_v<T>
  static std::string cell(T v) {
    return std::to_string(v);
  }
  std::ostringstream os_;
};

struct Context {
  const RunConfig& cfg;
  CurveData curve;
  RunResult& result;
  Json report;
  std::ostringstream text;

  void check(bool ok, const std::string& invariant, const std::string& detail) {
    report["checks"].push_back(Json{{"invariant", invariant}, {"passed", ok}, {"detail", detail}});
    text << (ok ? "ok   " : "FAIL ") << invariant << ": " << detail << "\n";
    if (!ok) result.failures.push_back({invariant, detail});
  }
};

CurveData resolve_curve(const RunConfig& cfg) {
  CurveData curve;
  if (fs::exists(cfg.curve)) {
    try {
      curve = load_curve(cfg.curve);
    } catch (const std::ios_base::failure& e) {
      throw IoError(e.what());
    } catch (const std::exception& e) {
      throw ConfigError("curve file " + cfg.curve + ": " + e.what());
    }
  } else if (cfg.curve.find('/') != std::string::npos || cfg.curve.ends_with(".json")) {
    throw IoError("curve file not found: " + cfg.curve);
  } else {
    try {
      curve = builtin_curve(cfg.curve);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  if (cfg.conductor && *cfg.conductor != curve.conductor)
    throw ConfigError("--conductor " + std::to_string(*cfg.conductor) + " disagrees with the curve's conductor " +
                      std::to_string(curve.conductor));
  return curve;
}

BadSym2Factor parse_bad_factor(const std::string& s) {
  if (s == "unshifted") return BadSym2Factor::kUnshifted;
  if (s == "shifted") return BadSym2Factor::kShifted;
  throw ConfigError("--bad-factor must be 'unshifted' or 'shifted'");
}

WorkspaceOptions base_options(const RunConfig& cfg) {
  WorkspaceOptions o;
  o.cutoff.c = cfg.contour_c;
  o.sym2.bad_factor = parse_bad_factor(cfg.bad_factor);
  o.threads = cfg.threads;
  return o;
}

Json curve_json(const CurveData& c) {
  const auto& m = c.model;
  Json j{{"label", c.label}, {"a_invariants", {m.a1, m.a2, m.a3, m.a4, m.a6}}, {"conductor", c.conductor}};
  j["modular_degree"] = c.modular_degree ? Json(*c.modular_degree) : Json(nullptr);
  return j;
}

Json constants_json(const CurveConstants& k, const Workspace& ws) {
  Json j;
  j["c_N"] = est({k.cN, 1e-15 * k.cN});
  j["omega"] = est({k.omega, 1e-14 * k.omega});
  j["sym2_at_2"] = est(k.sym2_at_2);
  j["sym2_at_2_alternative"] = est(k.sym2_at_2_shifted);
  j["correction_at_2"] = est(k.correction_at_2);
  j["L1"] = est(k.L1);
  j["Lp1"] = est(k.Lp1);
  j["Lp1_analytic"] = est(k.Lp1_analytic);
  j["zeta_ratio_term"] = est({k.zeta_ratio_term, 1e-15});
  j["Lp1_zeta_ratio_free"] = est(k.Lp1_zeta_ratio_free());
  if (k.degree_identity_ratio) {
    j["degree_identity_ratio"] = est({*k.degree_identity_ratio, k.sym2_at_2.error / k.sym2_at_2.value});
    j["degree_identity_ratio_alternative"] =
        est({*k.degree_identity_ratio_shifted, k.sym2_at_2_shifted.error / k.sym2_at_2_shifted.value});
  }
  j["sym2_bad_factor"] = to_string(ws.sym2().params().bad_factor);
  return j;
}

Json decisions_json(const Workspace& ws) {
  const BadSym2Factor sel = ws.options().sym2.bad_factor;
  const BadSym2Factor alt = sel == BadSym2Factor::kUnshifted ? BadSym2Factor::kShifted : BadSym2Factor::kUnshifted;
  return Json{{"sym2_bad_factor", to_string(sel)},
              {"sym2_bad_factor_alternative", to_string(alt)},
              {"sym2_x0", ws.options().sym2.x0},
              {"contour_c", ws.options().cutoff.c},
              {"tail_tolerance", ws.options().truncation.tail_tolerance},
              {"coefficient_table", ws.coefficients().n_max()}};
}

double h_hat(std::int64_t d, double lprime, double omega) {
  const double u = unit_count(d);
  return u * u * std::sqrt(static_cast<double>(-d)) * lprime / (2.0 * omega);
}

// --- density ---------------------------------------------------------------

void run_density(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const std::uint64_t N = ctx.curve.conductor;
  const std::uint64_t Y = cfg.ymax;
  const PrimeSieve sieve(static_cast<std::uint32_t>(std::min<std::uint64_t>(Y + 1, 1u << 30)));
  const HeegnerSet set = enumerate_D(N, Y, sieve);
  const ResidueSet residues(N);

  const double cN = density_constant(N);
  const double density = static_cast<double>(set.discriminants.size()) / static_cast<double>(Y);
  const double ratio = density / (2.0 * cN);
  const double ratio_half = density / (0.5 * cN);

  std::uint64_t phi = 0, omega = 0;
  for (std::uint64_t v = 1; v < 4 * N; ++v)
    if (std::gcd(v, 4 * N) == 1) ++phi;
  for (std::uint64_t p = 2, rest = 4 * N; rest > 1; ++p) {
    if (p * p > rest) {
      ++omega;
      break;
    }
    if (rest % p) continue;
    ++omega;
    while (rest % p == 0) rest /= p;
  }

  Json& r = ctx.report;
  r["Y"] = Y;
  r["count"] = set.discriminants.size();
  r["residue_classes"] = residues.size();
  r["density"] = est({density, 0.0});
  r["c_N"] = est({cN, 1e-15 * cN});
  r["ratio_to_2cN"] = est({ratio, 1e-15 * ratio});
  r["ratio_to_half_cN"] = est({ratio_half, 1e-15 * ratio_half});

  Csv per_d("heegner", ctx.curve, cfg.seed, {"d", "witness_nu"});
  for (const auto& h : set.discriminants) per_d.row(h.d, h.witness_nu);
  Csv summary("density", ctx.curve, cfg.seed, {"Y", "count", "density", "two_cN", "ratio_to_two_cN", "ratio_to_half_cN"});
  summary.row(Y, set.discriminants.size(), density, 2.0 * cN, ratio, ratio_half);
  ctx.result.artifacts["per_d.csv"] = per_d.str();
  ctx.result.artifacts["summary.csv"] = summary.str();

  ctx.text << "N=" << N << " Y=" << Y << " count=" << set.discriminants.size() << " density=" << num(density)
           << " 2c_N=" << num(2 * cN) << " ratio=" << num(ratio) << "\n";
  // Squares have index 2 in (Z/p)* for odd p and in (Z/4)*, index 4 in (Z/8)*.
  const std::uint64_t expected = phi >> (omega + (N % 2 == 0 ? 1 : 0));
  ctx.check(residues.size() == expected, "residue_set_cardinality",
            std::to_string(residues.size()) + " classes, expected " + std::to_string(expected));
  ctx.check(std::fabs(ratio - 1.0) <= 0.02, "density_vs_2cN",
            "count/Y = " + num(density) + ", 2c_N = " + num(2 * cN) + ", ratio " + num(ratio));
}

// --- lprime ----------------------------------------------------------------

void run_lprime(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const std::int64_t d = cfg.d;
  if (d >= 0 || mod_floor(d, 4) != 1) throw ConfigError("--d must be negative and = 1 mod 4");
  const ResidueSet residues(ctx.curve.conductor);
  if (!residues.contains(d) || !is_squarefree_trial(static_cast<std::uint64_t>(-d)))
    throw ConfigError("--d " + std::to_string(d) + " is not a Heegner discriminant for N = " +
                      std::to_string(ctx.curve.conductor));

  WorkspaceOptions o = base_options(cfg);
  o.d_abs_max = static_cast<std::uint64_t>(-d);
  o.fe_d_abs_max = o.d_abs_max;
  const Workspace ws(ctx.curve, o);
  const LPrimeEvaluator& ev = ws.evaluator();

  const auto parts = ev.decomposition(d);
  const Estimate value{parts.total, ev.tail_bound(d) + 1e-9 * std::max(1.0, std::fabs(parts.total))};
  const double rebuilt = (parts.diagonal + parts.off_diagonal - parts.boundary) / parts.units;
  const double s2 = ev.fe_sum(d, 2.0), shalf = ev.fe_sum(d, 0.5);
  const double fe_rel = std::fabs(s2 - shalf) / (std::fabs(s2) + std::fabs(shalf));

  CutoffParams other = o.cutoff;
  other.c = o.cutoff.c < 1.0 ? o.cutoff.c + 0.5 : o.cutoff.c - 0.5;
  const CutoffFunction cutoff2(other);
  const LPrimeEvaluator ev2(ws.coefficients(), cutoff2, o.truncation);
  const double contour_diff = std::fabs(ev2.l_prime(d) - parts.total);
  const double scale = std::max(1.0, std::fabs(parts.total));
  const double h = h_hat(d, parts.total, ws.period().volume);

  Json& r = ctx.report;
  r["decisions"] = decisions_json(ws);
  r["d"] = d;
  r["lprime"] = est(value);
  r["h_hat"] = est({h, h_hat(d, value.error, ws.period().volume)});
  r["diagonal"] = est({parts.diagonal, 1e-15 * std::fabs(parts.diagonal)});
  r["off_diagonal"] = est({parts.off_diagonal, 1e-15 * parts.off_diagonal_abs});
  r["boundary"] = est({parts.boundary, 1e-15 * std::fabs(parts.boundary)});
  r["series_limit"] = parts.limit;
  r["fe_S_2"] = est({s2, 1e-14 * std::fabs(s2)});
  r["fe_S_half"] = est({shalf, 1e-14 * std::fabs(shalf)});
  r["fe_relative_residual"] = est({fe_rel, 1e-14});
  r["contour_alternative_c"] = other.c;
  r["contour_difference"] = est({contour_diff, 1e-14});

  Csv per_d("lprime", ctx.curve, cfg.seed, {"d", "lprime", "lprime_error", "h_hat", "fe_residual", "contour_difference"});
  per_d.row(d, value.value, value.error, h, fe_rel, contour_diff);
  ctx.result.artifacts["per_d.csv"] = per_d.str();
  Csv summary("lprime-summary", ctx.curve, cfg.seed, {"d", "lprime", "diagonal", "off_diagonal", "boundary", "units", "limit"});
  summary.row(d, parts.total, parts.diagonal, parts.off_diagonal, parts.boundary, parts.units, parts.limit);
  ctx.result.artifacts["summary.csv"] = summary.str();

  ctx.text << "d=" << d << " L'_d=" << num(value.value) << " +- " << num(value.error) << "\n";
  ctx.check(value.value >= -1e-6, "gross_zagier_positivity", "L'_d = " + num(value.value));
  ctx.check(fe_rel <= 1e-8, "functional_equation", "|S(2) - S(1/2)| / (|S(2)| + |S(1/2)|) = " + num(fe_rel));
  ctx.check(contour_diff <= 1e-8 * scale, "contour_stability",
            "|L'_d(c) - L'_d(c')| = " + num(contour_diff) + " with c' = " + num(other.c));
  ctx.check(std::fabs(rebuilt - parts.total) <= 1e-12 * scale, "decomposition_identity",
            "|L'_d - (diag + err - bnd)/u| = " + num(std::fabs(rebuilt - parts.total)));
}

// --- moment ----------------------------------------------------------------

std::uint64_t support_max(const RunConfig& cfg) {
  return static_cast<std::uint64_t>(std::floor(cfg.t1 * static_cast<double>(cfg.ylist.back())));
}

void run_moment(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  WorkspaceOptions o = base_options(cfg);
  o.d_abs_max = support_max(cfg);
  o.l_function = true;
  const Workspace ws(ctx.curve, o);
  const CurveConstants k = ws.constants();
  const BumpFunction F(cfg.t0, cfg.t1);
  const std::uint64_t N = ctx.curve.conductor;
  const MainTerms terms = main_term_constants(N, k.cN, k.L1, k.Lp1, F);
  const MainTerms free_terms = main_term_constants(N, k.cN, k.L1, k.Lp1_zeta_ratio_free(), F);
  MomentEngine engine(ws.evaluator(), ws.sieve(), cfg.threads);

  Json& r = ctx.report;
  r["decisions"] = decisions_json(ws);
  r["constants"] = constants_json(k, ws);
  r["F"] = Json{{"t0", cfg.t0}, {"t1", cfg.t1}, {"I0", est({F.I0(), 1e-12})}, {"I1", est({F.I1(), 1e-12})}};
  r["alpha"] = est(terms.alpha);
  r["beta"] = est(terms.beta);
  r["beta_zeta_ratio_free"] = est(free_terms.beta);

  Csv per_d("moment-per-d", ctx.curve, cfg.seed, {"Y", "d", "lprime", "lprime_error", "h_hat", "weight"});
  Csv summary("moment", ctx.curve, cfg.seed,
              {"Y", "count", "empirical", "empirical_error", "alpha", "beta", "main", "residual", "ratio",
               "main_zeta_ratio_free", "residual_zeta_ratio_free"});
  Csv plot("plotdata_residual", ctx.curve, cfg.seed, {"Y", "residual", "main", "ratio"});

  std::vector<double> Ys, res, res_free;
  for (std::uint64_t Yi : cfg.ylist) {
    const double Y = static_cast<double>(Yi);
    const MomentReport m = engine.empirical_moment(F, Y, terms);
    const auto ds = engine.support(F, Y);
    const auto values = engine.l_primes(ds);
    for (std::size_t i = 0; i < ds.size(); ++i)
      per_d.row(Yi, ds[i], values[i].value, values[i].error, h_hat(ds[i], values[i].value, k.omega),
                F(static_cast<double>(-ds[i]) / Y));
    const Estimate main_free = free_terms.main(Y);
    const Estimate residual_free = m.empirical - main_free;
    const Estimate ratio = m.empirical / m.main;
    summary.row(Yi, m.count, m.empirical.value, m.empirical.error, m.alpha.value, m.beta.value, m.main.value,
                m.residual.value, m.ratio, main_free.value, residual_free.value);
    plot.row(Yi, m.residual.value, m.main.value, m.ratio);
    r["reports"].push_back(Json{{"Y", Yi},
                                {"count", m.count},
                                {"empirical", est(m.empirical)},
                                {"main", est(m.main)},
                                {"residual", est(m.residual)},
                                {"ratio", est(ratio)},
                                {"main_zeta_ratio_free", est(main_free)},
                                {"residual_zeta_ratio_free", est(residual_free)}});
    ctx.text << "Y=" << Yi << " n=" << m.count << " empirical=" << num(m.empirical.value) << " main=" << num(m.main.value)
             << " ratio=" << num(m.ratio) << " residual=" << num(m.residual.value) << "\n";
    Ys.push_back(Y);
    res.push_back(m.residual.value);
    res_free.push_back(residual_free.value);
  }
  ctx.result.artifacts["per_d.csv"] = per_d.str();
  ctx.result.artifacts["summary.csv"] = summary.str();
  ctx.result.artifacts["plotdata_residual.csv"] = plot.str();

  const DecompositionReport dec = engine.decomposition(F, Ys.front());
  r["decomposition"] = Json{{"Y", cfg.ylist.front()},
                            {"empirical", est({dec.empirical, 1e-15 * dec.error_abs})},
                            {"diagonal", est({dec.diagonal, 1e-15 * std::fabs(dec.diagonal)})},
                            {"error_direct", est({dec.error_direct, 1e-15 * dec.error_abs})},
                            {"boundary", est({dec.boundary, 1e-15 * std::fabs(dec.boundary)})},
                            {"relative_mismatch", est({dec.relative_mismatch, 1e-15})}};
  ctx.check(dec.relative_mismatch <= 1e-6, "decomposition_identity",
            "relative mismatch " + num(dec.relative_mismatch) + " at Y = " + std::to_string(cfg.ylist.front()));

  if (Ys.size() >= 3) {
    int inversions = 0;
    for (std::size_t i = 1; i < Ys.size(); ++i)
      if (std::fabs(res[i]) / Ys[i] > std::fabs(res[i - 1]) / Ys[i - 1]) ++inversions;
    ctx.check(inversions <= 1, "residual_trend", "|residual|/Y increases " + std::to_string(inversions) + " time(s)");
  }
  if (Ys.size() >= 2) {
    const Estimate slope = residual_slope(Ys, res);
    const Estimate slope_free = residual_slope(Ys, res_free);
    r["slope"] = est(slope);
    r["slope_zeta_ratio_free"] = est(slope_free);
    ctx.text << "slope=" << num(slope.value) << " (zeta-ratio-free " << num(slope_free.value) << ")\n";
    if (Ys.size() >= 4) ctx.check(slope.value <= 0.97, "exponent_slope", "slope " + num(slope.value));
  }
}

// --- error -----------------------------------------------------------------

void run_error(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  WorkspaceOptions o = base_options(cfg);
  o.d_abs_max = support_max(cfg);
  o.extra_table = cfg.twist_x;
  const Workspace ws(ctx.curve, o);
  const BumpFunction F(cfg.t0, cfg.t1);
  const MomentEngine engine(ws.evaluator(), ws.sieve(), cfg.threads);

  Json& r = ctx.report;
  r["decisions"] = decisions_json(ws);
  Csv summary("error", ctx.curve, cfg.seed,
              {"Y", "empirical", "diagonal", "error_direct", "error_abs", "boundary", "decomposition_mismatch", "A", "E1",
               "E2", "E1_abs", "E2_abs", "observed", "reassembled", "mobius_mismatch"});
  for (std::uint64_t Yi : cfg.ylist) {
    const double Y = static_cast<double>(Yi);
    const DecompositionReport dec = engine.decomposition(F, Y);
    const ErrorSplit split = engine.error_split(F, Y);
    summary.row(Yi, dec.empirical, dec.diagonal, dec.error_direct, dec.error_abs, dec.boundary, dec.relative_mismatch,
                split.A, split.E1, split.E2, split.E1_abs, split.E2_abs, split.observed, split.reassembled,
                split.relative_mismatch);
    Json per_a = Json::array();
    for (const auto& [a, v] : split.per_a) per_a.push_back(Json{{"a", a}, {"error", est({v, 1e-15 * split.E1_abs + 1e-15 * split.E2_abs})}});
    Json tails = Json::array();
    for (double t : split.tail_abs_by_threshold) tails.push_back(est({t, 1e-15 * t}));
    const double rnd = 1e-15 * dec.error_abs;
    r["reports"].push_back(Json{{"Y", Yi},
                                {"empirical", est({dec.empirical, rnd})},
                                {"diagonal", est({dec.diagonal, 1e-15 * std::fabs(dec.diagonal)})},
                                {"error_direct", est({dec.error_direct, rnd})},
                                {"error_abs", est({dec.error_abs, rnd})},
                                {"boundary", est({dec.boundary, 1e-15 * std::fabs(dec.boundary)})},
                                {"decomposition_mismatch", est({dec.relative_mismatch, 1e-15})},
                                {"A", split.A},
                                {"E1", est({split.E1, rnd})},
                                {"E2", est({split.E2, rnd})},
                                {"observed", est({split.observed, rnd})},
                                {"reassembled", est({split.reassembled, rnd})},
                                {"mobius_mismatch", est({split.relative_mismatch, 1e-15})},
                                {"per_a", per_a},
                                {"tail_abs_by_threshold", tails}});
    ctx.text << "Y=" << Yi << " error_direct=" << num(dec.error_direct) << " A=" << split.A << " E1=" << num(split.E1)
             << " E2=" << num(split.E2) << "\n";
    ctx.check(dec.relative_mismatch <= 1e-6, "decomposition_identity",
              "Y = " + std::to_string(Yi) + ": relative mismatch " + num(dec.relative_mismatch));
    ctx.check(split.relative_mismatch <= 1e-6, "mobius_reassembly",
              "Y = " + std::to_string(Yi) + ": relative mismatch " + num(split.relative_mismatch));
  }
  ctx.result.artifacts["summary.csv"] = summary.str();

  const auto configs = sample_twist_configs(ctx.curve.conductor, cfg.twist_count, cfg.twist_q_max, cfg.seed);
  Csv twist("twist", ctx.curve, cfg.seed, {"m", "a", "v", "u", "q", "S", "majorant", "ratio", "support", "cancels"});
  std::size_t cancels = 0;
  double max_ratio = 0;
  for (const auto& c : configs) {
    const TwistResult t = twisted_partial_sum(ws.coefficients(), engine.residues(), c, cfg.twist_x);
    const bool ok = std::fabs(t.S) <= 0.1 * t.majorant;
    cancels += ok;
    max_ratio = std::max(max_ratio, t.ratio);
    twist.row(c.m, c.a, c.v, c.u, t.q, t.S, t.majorant, t.ratio, t.support, ok ? 1 : 0);
  }
  ctx.result.artifacts["twist.csv"] = twist.str();
  r["twist"] = Json{{"x", cfg.twist_x},
                    {"count", cfg.twist_count},
                    {"q_max", cfg.twist_q_max},
                    {"cancelling", cancels},
                    {"max_ratio", est({max_ratio, 1e-15 * max_ratio})}};
  ctx.text << "twisted sums: " << cancels << "/" << cfg.twist_count << " with |S| <= 0.1 majorant, max ratio "
           << num(max_ratio) << "\n";
  ctx.check(10 * cancels >= 9 * cfg.twist_count, "twist_cancellation",
            std::to_string(cancels) + " of " + std::to_string(cfg.twist_count) + " configurations cancel");

  if (!cfg.twist_baseline.empty()) {
    if (fs::exists(cfg.twist_baseline)) {
      std::ifstream in(cfg.twist_baseline);
      if (!in) throw IoError("cannot read " + cfg.twist_baseline);
      double recorded = 0;
      try {
        recorded = Json::parse(in).at("max_ratio").at("value").get<double>();
      } catch (const std::exception& e) {
        throw ConfigError("twist baseline " + cfg.twist_baseline + ": " + e.what());
      }
      ctx.check(max_ratio <= recorded, "twist_constant_non_increasing",
                "max ratio " + num(max_ratio) + ", recorded " + num(recorded));
    } else {
      std::ofstream outf(cfg.twist_baseline);
      if (!outf) throw IoError("cannot write " + cfg.twist_baseline);
      outf << Json{{"max_ratio", est({max_ratio, 0.0})}, {"seed", cfg.seed}, {"x", cfg.twist_x}}.dump(2) << "\n";
      ctx.text << "recorded twisted-sum constant in " << cfg.twist_baseline << "\n";
    }
  }
}

// --- heights ---------------------------------------------------------------

void run_heights(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  WorkspaceOptions o = base_options(cfg);
  o.d_abs_max = cfg.ylist.back();
  o.l_function = true;
  const Workspace ws(ctx.curve, o);
  const CurveConstants k = ws.constants();
  MomentEngine engine(ws.evaluator(), ws.sieve(), cfg.threads);

  Json& r = ctx.report;
  r["decisions"] = decisions_json(ws);
  r["constants"] = constants_json(k, ws);
  Csv per_d("heights-per-d", ctx.curve, cfg.seed, {"Y", "d", "lprime", "lprime_error", "h_hat", "weight"});
  Csv summary("heights", ctx.curve, cfg.seed,
              {"Y", "count", "empirical", "empirical_error", "predicted_theorem", "ratio_theorem", "predicted_printed",
               "ratio_printed", "ratio_zeta_ratio_free"});

  double worst_roundtrip = 0, min_lprime = 0;
  for (std::uint64_t Yi : cfg.ylist) {
    const double Y = static_cast<double>(Yi);
    const HeightReport h =
        engine.height_sum(Y, k.omega, k.cN, k.L1, k.Lp1, k.sym2_at_2, k.correction_at_2);
    const HeightReport hf =
        engine.height_sum(Y, k.omega, k.cN, k.L1, k.Lp1_zeta_ratio_free(), k.sym2_at_2, k.correction_at_2);
    const auto ds = heegner_discriminants(engine.residues(), 1, Yi, ws.sieve());
    const auto values = engine.l_primes(ds);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double hh = h_hat(ds[i], values[i].value, k.omega);
      const double u = unit_count(ds[i]);
      const double back = 2.0 * k.omega * hh / (u * u * std::sqrt(static_cast<double>(-ds[i])));
      worst_roundtrip = std::max(worst_roundtrip, std::fabs(back - values[i].value) / std::max(1e-300, std::fabs(values[i].value)));
      min_lprime = std::min(min_lprime, values[i].value);
      per_d.row(Yi, ds[i], values[i].value, values[i].error, hh, u * u * std::sqrt(static_cast<double>(-ds[i])) / (2.0 * k.omega));
    }
    summary.row(Yi, h.count, h.empirical.value, h.empirical.error, h.predicted_theorem.value, h.ratio_theorem,
                h.predicted_printed.value, h.ratio_printed, hf.ratio_theorem);
    r["reports"].push_back(Json{{"Y", Yi},
                                {"count", h.count},
                                {"empirical", est(h.empirical)},
                                {"cp_theorem", est(h.cp_theorem)},
                                {"cp_prime_theorem", est(h.cp_prime_theorem)},
                                {"predicted_theorem", est(h.predicted_theorem)},
                                {"ratio_theorem", est(h.empirical / h.predicted_theorem)},
                                {"cp_printed", est(h.cp_printed)},
                                {"cp_prime_printed", est(h.cp_prime_printed)},
                                {"predicted_printed", est(h.predicted_printed)},
                                {"ratio_printed", est(h.empirical / h.predicted_printed)},
                                {"printed_over_theorem_cp", est(h.cp_printed / h.cp_theorem)},
                                {"cp_prime_zeta_ratio_free", est(hf.cp_prime_theorem)},
                                {"ratio_zeta_ratio_free", est(hf.empirical / hf.predicted_theorem)}});
    ctx.text << "Y=" << Yi << " n=" << h.count << " sum h=" << num(h.empirical.value) << " ratio theorem "
             << num(h.ratio_theorem) << ", printed " << num(h.ratio_printed) << ", zeta-ratio-free "
             << num(hf.ratio_theorem) << "\n";
    if (Yi >= 10000)
      ctx.check(std::fabs(h.ratio_theorem - 1.0) <= 0.15, "height_ratio_theorem",
                "Y = " + std::to_string(Yi) + ": empirical / predicted = " + num(h.ratio_theorem));
  }
  ctx.result.artifacts["per_d.csv"] = per_d.str();
  ctx.result.artifacts["summary.csv"] = summary.str();
  ctx.check(min_lprime >= -1e-6, "height_nonnegative", "min L'_d = " + num(min_lprime));
  ctx.check(worst_roundtrip <= 1e-12, "gross_zagier_roundtrip", "max relative error " + num(worst_roundtrip));
}

// --- constants -------------------------------------------------------------

void run_constants(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  WorkspaceOptions o = base_options(cfg);
  o.l_function = true;
  const Workspace ws(ctx.curve, o);
  const CurveConstants k = ws.constants();
  const BumpFunction F(cfg.t0, cfg.t1);
  const std::uint64_t N = ctx.curve.conductor;
  const MainTerms terms = main_term_constants(N, k.cN, k.L1, k.Lp1, F);
  const HeightConstants hc = height_constants(N, k.omega, k.cN, k.L1, k.Lp1, k.sym2_at_2, k.correction_at_2);
  const PeriodData& p = ws.period();

  Json& r = ctx.report;
  r["decisions"] = decisions_json(ws);
  r["constants"] = constants_json(k, ws);
  r["periods"] = Json{{"omega1", est({p.omega1, 1e-14 * p.omega1})},
                      {"omega2_re", est({p.omega2_re, 1e-14 * std::fabs(p.omega2_re)})},
                      {"omega2_im", est({p.omega2_im, 1e-14 * p.omega2_im})},
                      {"two_real_components", p.two_real_components}};
  r["F"] = Json{{"t0", cfg.t0}, {"t1", cfg.t1}, {"I0", est({F.I0(), 1e-12})}, {"I1", est({F.I1(), 1e-12})}};
  r["alpha"] = est(terms.alpha);
  r["beta"] = est(terms.beta);
  r["cp_theorem"] = est(hc.cp_theorem);
  r["cp_prime_theorem"] = est(hc.cp_prime_theorem);
  r["cp_printed"] = est(hc.cp_printed);
  r["cp_prime_printed"] = est(hc.cp_prime_printed);

  Csv summary("constants", ctx.curve, cfg.seed, {"name", "value", "error"});
  auto put = [&](const char* name, Estimate e) { summary.row(name, e.value, e.error); };
  put("c_N", {k.cN, 1e-15 * k.cN});
  put("omega", {k.omega, 1e-14 * k.omega});
  put("sym2_at_2", k.sym2_at_2);
  put("sym2_at_2_alternative", k.sym2_at_2_shifted);
  put("correction_at_2", k.correction_at_2);
  put("L1", k.L1);
  put("Lp1", k.Lp1);
  put("Lp1_analytic", k.Lp1_analytic);
  put("Lp1_zeta_ratio_free", k.Lp1_zeta_ratio_free());
  put("alpha", terms.alpha);
  put("beta", terms.beta);
  put("cp_theorem", hc.cp_theorem);
  put("cp_prime_theorem", hc.cp_prime_theorem);
  put("cp_printed", hc.cp_printed);
  put("cp_prime_printed", hc.cp_prime_printed);
  ctx.result.artifacts["summary.csv"] = summary.str();

  ctx.text << "L(Sym^2,2)=" << num(k.sym2_at_2.value) << " L(1)=" << num(k.L1.value) << " L'(1)=" << num(k.Lp1.value)
           << " Omega=" << num(k.omega) << " c_N=" << num(k.cN) << "\n";
  if (k.degree_identity_ratio)
    ctx.check(std::fabs(*k.degree_identity_ratio - 1.0) <= 1e-3, "sym2_degree_identity",
              "L(Sym^2,2) N / (pi Omega deg) = " + num(*k.degree_identity_ratio) + " (" +
                  to_string(ws.sym2().params().bad_factor) + "), alternative " + num(*k.degree_identity_ratio_shifted));
  const double gap = std::fabs(k.Lp1.value - k.Lp1_analytic.value);
  ctx.check(gap <= 1e-6, "derivative_consistency", "|L'(1) difference quotient - analytic| = " + num(gap));
}

Json config_json(const RunConfig& c) {
  Json j{{"subcommand", c.subcommand}, {"curve", c.curve},   {"ymax", c.ymax},
         {"ylist", c.ylist},           {"t0", c.t0},         {"t1", c.t1},
         {"contour_c", c.contour_c},   {"seed", c.seed},     {"d", c.d},
         {"twist_x", c.twist_x},       {"twist_count", c.twist_count}, {"twist_q_max", c.twist_q_max},
         {"bad_factor", c.bad_factor}};
  j["conductor"] = c.conductor ? Json(*c.conductor) : Json(nullptr);
  return j;
}

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void RunConfig::finalize() {
  static const std::vector<std::string> known = {"density", "lprime", "moment", "error", "heights", "constants"};
  if (std::find(known.begin(), known.end(), subcommand) == known.end())
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  if (ylist.empty()) {
    if (subcommand == "moment") ylist = {2000, 4000, 8000, 16000};
    if (subcommand == "error") ylist = {2000};
    if (subcommand == "heights") ylist = {10000};
  }
  if (ymax == 0) ymax = 1000000;
  for (std::size_t i = 1; i < ylist.size(); ++i)
    if (ylist[i] <= ylist[i - 1]) throw ConfigError("--ylist must be strictly increasing");
  for (std::uint64_t y : ylist)
    if (y < 10) throw ConfigError("--ylist entries must be at least 10");
  if (!(t0 > 0 && t1 > t0)) throw ConfigError("need 0 < t0 < t1");
  if (!(contour_c > 0.3 && contour_c < 1.5)) throw ConfigError("--contour-c must lie in (0.3, 1.5)");
  if (twist_x < 2 || twist_count == 0) throw ConfigError("--twist-x must be >= 2 and --twist-count >= 1");
  parse_bad_factor(bad_factor);
}

RunResult run(const RunConfig& config) {
  RunResult result;
  Context ctx{config, resolve_curve(config), result, Json::object(), {}};
  ctx.report["tool"] = "hm";
  ctx.report["format"] = 1;
  ctx.report["subcommand"] = config.subcommand;
  ctx.report["seed"] = config.seed;
  ctx.report["config"] = config_json(config);
  ctx.report["curve"] = curve_json(ctx.curve);
  ctx.report["checks"] = Json::array();

  if (config.subcommand == "density") run_density(ctx);
  else if (config.subcommand == "lprime") run_lprime(ctx);
  else if (config.subcommand == "moment") run_moment(ctx);
  else if (config.subcommand == "error") run_error(ctx);
  else if (config.subcommand == "heights") run_heights(ctx);
  else if (config.subcommand == "constants") run_constants(ctx);

  Json failures = Json::array();
  for (const auto& f : result.failures) failures.push_back(Json{{"invariant", f.invariant}, {"detail", f.detail}});
  ctx.report["failures"] = failures;
  result.artifacts["run.json"] = ctx.report.dump(2) + "\n";
  result.exit_code = result.failures.empty() ? kExitOk : kExitInvariant;
  result.summary_text = ctx.text.str();
  return result;
}

namespace {

void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "curve") cfg.curve = v.get<std::string>();
      else if (key == "conductor") cfg.conductor = v.get<std::uint64_t>();
      else if (key == "ymax") cfg.ymax = v.get<std::uint64_t>();
      else if (key == "ylist") cfg.ylist = v.get<std::vector<std::uint64_t>>();
      else if (key == "t0") cfg.t0 = v.get<double>();
      else if (key == "t1") cfg.t1 = v.get<double>();
      else if (key == "contour-c" || key == "contour_c") cfg.contour_c = v.get<double>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "out") cfg.out = v.get<std::string>();
      else if (key == "threads") cfg.threads = v.get<unsigned>();
      else if (key == "d") cfg.d = v.get<std::int64_t>();
      else if (key == "twist-x" || key == "twist_x") cfg.twist_x = v.get<std::uint64_t>();
      else if (key == "twist-count" || key == "twist_count") cfg.twist_count = v.get<std::size_t>();
      else if (key == "twist-q-max" || key == "twist_q_max") cfg.twist_q_max = v.get<std::uint64_t>();
      else if (key == "twist-baseline" || key == "twist_baseline") cfg.twist_baseline = v.get<std::string>();
      else if (key == "bad-factor" || key == "bad_factor") cfg.bad_factor = v.get<std::string>();
      else throw ConfigError("config file: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    for (int i = 1; i + 1 < argc; ++i)
      if (std::string(argv[i]) == "--config") apply_config_file(argv[i + 1], cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  }

  CLI::App app{"hm: first moment of L'(E x chi_d, 1) over Heegner discriminants"};
  app.require_subcommand(1);
  std::string config_path;
  std::uint64_t conductor = 0;
  app.add_option("--config", config_path, "JSON file with option defaults (flags override it)");
  app.add_option("--curve", cfg.curve, "curve JSON file or built-in label");
  auto* cond = app.add_option("--conductor", conductor, "expected conductor (checked against the curve)");
  app.add_option("--ymax", cfg.ymax, "bound for density");
  app.add_option("--ylist", cfg.ylist, "increasing list of Y values")->delimiter(',');
  app.add_option("--t0", cfg.t0, "left end of the support of F");
  app.add_option("--t1", cfg.t1, "right end of the support of F");
  app.add_option("--contour-c", cfg.contour_c, "abscissa of the cutoff contour");
  app.add_option("--seed", cfg.seed, "seed for sampled configurations");
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
  app.add_option("--d", cfg.d, "discriminant for lprime")->allow_extra_args(false);
  app.add_option("--twist-x", cfg.twist_x, "length of the twisted sums");
  app.add_option("--twist-count", cfg.twist_count, "number of sampled twisted sums");
  app.add_option("--twist-q-max", cfg.twist_q_max, "largest modulus of a sampled twisted sum");
  app.add_option("--twist-baseline", cfg.twist_baseline, "file holding the recorded twisted-sum constant");
  app.add_option("--bad-factor", cfg.bad_factor, "Sym^2 factor at bad primes: unshifted or shifted");
  const std::pair<const char*, const char*> subcommands[] = {
      {"density", "count the Heegner discriminants up to --ymax"},
      {"lprime", "L'_d(E, 1) for one discriminant --d, with consistency checks"},
      {"moment", "smoothed first moment against its main term for each Y in --ylist"},
      {"error", "diagonal/off-diagonal split, Mobius decomposition and twisted sums"},
      {"heights", "sum of Heegner point heights against the predicted constants"},
      {"constants", "L(Sym^2 E, 2), L(1), L'(1) and the degree identity"},
  };
  for (const auto& [name, help] : subcommands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  if (cond->count() > 0) cfg.conductor = conductor;

  const auto started = std::chrono::steady_clock::now();
  const std::string started_iso = iso_now();
  RunResult result;
  try {
    cfg.finalize();
    result = run(cfg);
    fs::create_directories(cfg.out);
    for (const auto& [name, content] : result.artifacts) write_file(fs::path(cfg.out) / name, content);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const Json meta{{"started", started_iso},
                    {"finished", iso_now()},
                    {"wall_seconds", Json{{"value", wall}, {"error", 1e-3}}},
                    {"threads", resolve_threads(cfg.threads)}};
    write_file(fs::path(cfg.out) / "run_meta.json", meta.dump(2) + "\n");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    err << "FAILURES " << Json::array({Json{{"invariant", "internal_error"}, {"detail", e.what()}}}).dump() << "\n";
    return kExitInvariant;
  }

  out << result.summary_text;
  if (!result.failures.empty()) {
    Json list = Json::array();
    for (const auto& f : result.failures) list.push_back(Json{{"invariant", f.invariant}, {"detail", f.detail}});
    err << "FAILURES " << list.dump() << "\n";
  }
  return result.exit_code;
}

}  // namespace hm::cli
