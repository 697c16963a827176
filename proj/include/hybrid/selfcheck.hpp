#ifndef HYBRID_SELFCHECK_HPP
#define HYBRID_SELFCHECK_HPP

// Acceptance checks and property suites, shared by `hybridsim selfcheck` and
// the acceptance test binary.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "hybrid/analytic_oracles.hpp"
#include "hybrid/figures.hpp"
#include "hybrid/pipeline.hpp"

namespace hybrid::selfcheck {

struct Check {
  std::string name;
  std::string expected;
  std::string actual;
  std::string tolerance;
  bool pass = false;
};

struct Criterion {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

using Coefficient = std::function<double(int, int, int, int, double)>;

struct Options {
  Coefficient bs_coefficient = bs_fock_coefficient;
  int threads = 1;
};

/// The printed coefficient with its sign dropped; the property suite must reject it.
inline double unsigned_bs_coefficient(int n, int m, int p, int q, double t) {
  return std::abs(bs_fock_coefficient(n, m, p, q, t));
}

namespace detail {

inline std::string num(double x, const char* fmt = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

inline Check near(std::string name, double expected, double actual, double tol) {
  return {std::move(name), num(expected), num(actual), "+-" + num(tol, "%.1e"),
          std::abs(actual - expected) <= tol};
}

inline Check at_least(std::string name, double bound, double actual) {
  return {std::move(name), ">= " + num(bound), num(actual), "-", actual >= bound};
}

inline Check below(std::string name, double bound, double actual) {
  return {std::move(name), "< " + num(bound), num(actual), "-", actual < bound};
}

inline Check within(std::string name, double lo, double hi, double actual) {
  return {std::move(name), "[" + num(lo) + ", " + num(hi) + "]", num(actual), "-", actual >= lo && actual <= hi};
}

inline Check relative(std::string name, double expected, double actual, double rel) {
  return {std::move(name), num(expected), num(actual), "rel " + num(rel, "%.0e"),
          std::abs(actual - expected) <= rel * std::abs(expected)};
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline SchemeConfig ideal_config(double alpha_i, double t, double eta) {
  SchemeConfig c;
  c.amplitude = {analytic::AmplitudeKind::alpha_i, alpha_i};
  c.t = t;
  c.detectors = {DetectorKind::pnr, eta};
  return c;
}

inline SchemeConfig squeezed_config(double s, double alpha_i, double t, double eta, PairSourceSpec pair,
                                    DetectorKind kind) {
  SchemeConfig c;
  c.amplitude = {analytic::AmplitudeKind::alpha_i, alpha_i};
  c.t = t;
  c.scs_source = SqueezedScs{s, 7};
  c.pair_source = pair;
  c.detectors = {kind, eta};
  return c;
}

inline std::string label(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Property suites

/// Columns of the fixed-photon-number block of the splitter, built from `coef`,
/// must be orthonormal for every n + m <= 6 and t in {0.3, 0.5, 0.9}.
inline Check bs_coefficient_unitarity(const Coefficient& coef) {
  double worst = 0.0;
  for (double t : {0.3, 0.5, 0.9})
    for (int total = 0; total <= 6; ++total) {
      std::vector<std::map<std::pair<int, int>, double>> cols;
      for (int n = 0; n <= total; ++n) cols.push_back(bs_output_amplitudes(n, total - n, t, coef));
      for (std::size_t x = 0; x < cols.size(); ++x)
        for (std::size_t y = 0; y < cols.size(); ++y) {
          double dot = 0.0;
          for (const auto& [kl, v] : cols[x]) {
            auto it = cols[y].find(kl);
            if (it != cols[y].end()) dot += v * it->second;
          }
          worst = std::max(worst, std::abs(dot - (x == y ? 1.0 : 0.0)));
        }
    }
  return {"bs_coefficient_unitarity (n+m<=6, t in {0.3,0.5,0.9})", "0", detail::num(worst, "%.3e"), "1e-10",
          worst <= 1e-10};
}

inline std::vector<Check> povm_completeness() {
  const int cutoff = 12;
  double pnr = 0.0, onoff = 0.0;
  for (double eta : {0.1, 0.5, 0.9, 1.0}) {
    std::vector<double> sum(cutoff + 1, 0.0);
    for (int n = 0; n <= cutoff; ++n) {
      const auto e = povm_pnr(n, eta, cutoff);
      for (int k = 0; k <= cutoff; ++k) sum[k] += e.weights[k];
    }
    for (double s : sum) pnr = std::max(pnr, std::abs(s - 1.0));
    const auto c = povm_click(eta, cutoff), d = povm_no_click(eta, cutoff);
    for (int k = 0; k <= cutoff; ++k) onoff = std::max(onoff, std::abs(c.weights[k] + d.weights[k] - 1.0));
  }
  return {{"povm_pnr_completeness", "0", detail::num(pnr, "%.3e"), "1e-10", pnr <= 1e-10},
          {"povm_no_click_plus_click", "0", detail::num(onoff, "%.3e"), "1e-12", onoff <= 1e-12}};
}

/// Balanced splitter on two displaced vacua equals two displaced vacua at the outputs.
inline Check interference_identity() {
  const int cutoff = 30;
  double worst = 0.0;
  const double grid[] = {-0.8, -0.3, 0.0, 0.5, 1.0};
  for (double a : grid)
    for (double b : grid) {
      auto in = vacuum_state(build_register({{"4", cutoff}, {"2", cutoff}}));
      in = apply_displacement(in, {a, "4"});
      in = apply_displacement(in, {b, "2"});
      auto lhs = apply_beam_splitter(in, "4", "2", BsParams::balanced(), "6", "5", 1.0);
      lhs = rename_mode(rename_mode(lhs, "6", "x6"), "5", "x5");
      auto rhs = vacuum_state(build_register({{"x6", cutoff}, {"x5", cutoff}}));
      rhs = apply_displacement(rhs, {(a + b) / std::numbers::sqrt2, "x6"});
      rhs = apply_displacement(rhs, {(b - a) / std::numbers::sqrt2, "x5"});
      // Compare on the bulk of the space; the top rows carry truncation error.
      const auto& reg = lhs.reg();
      double diff = 0.0;
      for (std::size_t i = 0; i < reg.dimension(); ++i) {
        if (reg.occupation(i, 0) + reg.occupation(i, 1) > 15) continue;
        diff = std::max(diff, std::abs(lhs.amplitudes()[i] - rhs.amplitudes()[i]));
      }
      worst = std::max(worst, diff);
    }
  return {"interference_identity (balanced splitter on displaced vacua)", "0", detail::num(worst, "%.3e"), "1e-10",
          worst <= 1e-10};
}

// P_vac vanishes identically; at finite cutoffs it is bounded by the
// truncation error, so exactness is checked with a generous detector cutoff.
inline std::vector<Check> vacuum_filtering() {
  double exact = 0.0, ratio = 0.0;
  for (double eta : {0.5, 1.0}) {
    auto c = detail::ideal_config(1.0, 0.9, eta);
    c.pair_source = VacuumMixed{0.5};
    const auto d = run_scheme(c).diagnostics;
    ratio = std::max(ratio, *d.p_vac / std::max(d.tail_mass, 1e-300));
    c.cutoffs.detector = 14;
    c.cutoffs.source = 30;
    exact = std::max(exact, run_scheme(c).diagnostics.p_vac.value());
  }
  return {{"vacuum_filtering P_vac (ideal cat, PNR, raised cutoffs)", "0", detail::num(exact, "%.3e"), "<= 1e-24",
           exact <= 1e-24},
          {"vacuum_filtering P_vac / tail mass at default cutoffs", "<= 10", detail::num(ratio, "%.3e"), "-",
           ratio <= 10.0}};
}

inline Check z_scaling() {
  auto c = detail::ideal_config(1.0, 0.9, 0.8);
  c.cutoffs.detector = 14;
  c.cutoffs.source = 30;
  c.pair_source = VacuumMixed{1.0};
  const double p1 = run_scheme(c).probability_total;
  double worst = 0.0;
  for (double z : {0.25, 0.5, 0.75}) {
    c.pair_source = VacuumMixed{z};
    worst = std::max(worst, std::abs(run_scheme(c).probability_total / (z * p1) - 1.0));
  }
  return {"z_scaling P_tot(z) / (z P_tot(1))", "1", detail::num(1.0 + worst, "%.15f"), "rel 1e-12", worst <= 1e-12};
}

inline Check herald_symmetry() {
  double worst = 0.0;
  for (auto c : {detail::ideal_config(0.7, 0.9, 0.7), detail::ideal_config(1.0, 0.99, 1.0),
                 detail::squeezed_config(0.313, 1.0, 0.99, 0.5, Spdc{0.03, 2, SpdcWeighting::paper},
                                         DetectorKind::onoff)}) {
    const auto d = run_scheme(c).diagnostics;
    worst = std::max(worst, std::abs(d.p_pi - d.p_pi_prime) / (d.p_pi + d.p_pi_prime));
  }
  return {"herald_symmetry |P_Pi - P_Pi'| / P_tot", "0", detail::num(worst, "%.3e"), "1e-9", worst <= 1e-9};
}

/// P_tot of the coherent SPDC superposition (three pair orders kept) against
/// (1 - lambda^2)(P_vac + lambda^2 P_chi + lambda^4 P_phi2).
inline Check spdc_lambda_scaling() {
  double worst = 0.0;
  for (double lambda : {0.01, 0.03, 0.05}) {
    auto c = detail::squeezed_config(0.161, 0.7, 0.99, 0.5, Spdc{lambda, 3, SpdcWeighting::paper},
                                     DetectorKind::onoff);
    const auto pre = build_prestate(c);
    double full = 0.0;
    for (bool flipped : {false, true})
      for (const auto& b : pre.branches())
        full += b.weight *
                herald_probability(b.state, build_scheme_herald(c.detectors.kind, c.detectors.eta, flipped, pre.reg()));
    c.pair_source = Spdc{lambda, 2, SpdcWeighting::paper};
    const auto d = run_scheme(c).diagnostics;
    const double l2 = lambda * lambda;
    const double fit = (1.0 - l2) * (*d.p_vac + l2 * *d.p_chi + l2 * l2 * *d.p_phi2);
    worst = std::max(worst, std::abs(full / fit - 1.0));
  }
  return {"spdc_lambda_scaling (lambda <= 0.05)", "1", detail::num(1.0 + worst, "%.8f"), "rel 1e-2", worst <= 1e-2};
}

// ---------------------------------------------------------------------------
// Criteria

inline Criterion criterion(int id, const Options& opt = {}) {
  using detail::label;
  Criterion cr{id, "", {}, 0.0};
  detail::Stopwatch clock;
  switch (id) {
    case 1: {
      cr.title = "squeezed-photon cat fidelity";
      detail::Stopwatch t;
      const double f1 = analytic::scs_fidelity(0.7, 0.161);
      const double f2 = analytic::scs_fidelity(1.0, 0.313);
      const double ms = t.seconds() * 1e3;
      cr.checks.push_back(detail::near("scs_fidelity(0.7, 0.161)", 0.9998, f1, 5e-4));
      cr.checks.push_back(detail::near("scs_fidelity(1.0, 0.313)", 0.997, f2, 5e-3));
      cr.checks.push_back(detail::below("runtime [ms]", 1.0, ms));
      break;
    }
    case 2:
    case 3: {
      cr.title = id == 2 ? "ideal-scheme exactness" : "probability consistency with the closed form";
      std::vector<double> ratios;
      for (double a : {0.7, 1.0})
        for (double t : {0.75, 0.9, 0.99}) {
          detail::Stopwatch pt;
          const auto r = run_scheme(detail::ideal_config(a, t, 1.0));
          const double s = pt.seconds();
          if (id == 2) {
            cr.checks.push_back(detail::at_least(label("fidelity alpha_i=%.2f t=%.2f", a, t), 1.0 - 1e-8, r.fidelity));
            cr.checks.push_back(detail::below(label("runtime [s] alpha_i=%.2f t=%.2f", a, t), 10.0, s));
          } else {
            ratios.push_back(r.diagnostics.oracle->ratio_to_printed);
          }
        }
      if (id == 3) {
        const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
        cr.checks.push_back(detail::below("relative spread of numeric/closed-form ratio", 1e-6, (*hi - *lo) / *lo));
        cr.checks.push_back(
            detail::relative("ratio equals the convention factor", analytic::convention_factor, ratios.front(), 1e-6));
      }
      break;
    }
    case 4: {
      cr.title = "fidelity under detector loss";
      for (double eta : {0.7, 0.9})
        for (double t : {0.9, 0.99})
          for (double af : {0.7, 1.0}) {
            SchemeConfig c = detail::ideal_config(0.0, t, eta);
            c.amplitude = {analytic::AmplitudeKind::alpha_f, af};
            const auto r = run_scheme(c);
            cr.checks.push_back(detail::near(label("fidelity eta=%.1f t=%.2f alpha_f=%.1f", eta, t, af),
                                             analytic::fidelity_eta(af, t, eta), r.fidelity, 1e-4));
          }
      break;
    }
    case 5: {
      cr.title = "asymptotic optimum of the success probability";
      const double a = 10.0;
      const double p = analytic::p_success_ideal(a, analytic::optimal_t(a), std::numbers::pi);
      cr.checks.push_back(detail::relative("p_success_ideal(10, t_opt)", 1.0 / (8.0 * std::numbers::e), p, 1e-2));
      break;
    }
    case 6: {
      cr.title = "negativity of the target state";
      for (auto [af, quoted] : {std::pair{0.7, 0.927}, std::pair{1.0, 0.991}}) {
        auto reg = build_register({{"A_H", 1}, {"A_V", 1}, {"B_H", 30}});
        const auto target = target_hybrid(af, std::numbers::pi, reg);
        Ensemble e(reg);
        e.add(1.0, target);
        const double n = negativity(to_density(e), Bipartition{{"A_H", "A_V"}, {"B_H"}});
        cr.checks.push_back(detail::near(label("negativity alpha_f=%.1f (quoted)", af), quoted, n, 1e-3));
        cr.checks.push_back(
            detail::near(label("negativity alpha_f=%.1f (closed form)", af), analytic::ideal_negativity(af), n, 1e-9));
      }
      break;
    }
    case 7: {
      cr.title = "heralded negativity with squeezed-photon cats";
      for (auto [s, a, quoted] : {std::tuple{0.161, 0.7, 0.922}, std::tuple{0.313, 1.0, 0.982}}) {
        detail::Stopwatch pt;
        const auto r = run_scheme(detail::squeezed_config(s, a, 0.99, 0.7, VacuumMixed{0.5}, DetectorKind::pnr));
        const double sec = pt.seconds();
        cr.checks.push_back(detail::near(label("negativity s=%.3f", s), quoted, r.negativity, 5e-3));
        cr.checks.push_back(detail::below(label("runtime [s] s=%.3f", s), 60.0, sec));
      }
      break;
    }
    case 8: {
      cr.title = "fidelity and probability thresholds with squeezed-photon cats";
      for (auto [s, a, bound] : {std::tuple{0.161, 0.7, 0.996}, std::tuple{0.313, 1.0, 0.986}}) {
        double fmin = 1.0, plo = 1.0, phi = 0.0;
        for (double t : {0.99, 0.999})
          for (double eta : {0.4, 0.7, 1.0}) {
            const auto r = run_scheme(detail::squeezed_config(s, a, t, eta, VacuumMixed{0.5}, DetectorKind::pnr));
            fmin = std::min(fmin, r.fidelity);
            if (t == 0.99) plo = std::min(plo, r.probability_total), phi = std::max(phi, r.probability_total);
          }
        cr.checks.push_back(detail::at_least(label("min fidelity s=%.3f", s), bound, fmin));
        cr.checks.push_back(detail::within(label("min P_tot s=%.3f t=0.99", s), 5e-5, 5e-3, plo));
        cr.checks.push_back(detail::within(label("max P_tot s=%.3f t=0.99", s), 5e-5, 5e-3, phi));
      }
      break;
    }
    case 9: {
      cr.title = "effective fidelity with an SPDC pair source";
      struct Spot {
        double lambda, s, a, f_eff, f_tol, p_tot;
      };
      for (const auto& sp : {Spot{0.022, 0.161, 0.7, 0.939, 0.010, 5.1e-7}, Spot{0.038, 0.313, 1.0, 0.842, 0.015, 2.4e-6}}) {
        const auto r = run_scheme(
            detail::squeezed_config(sp.s, sp.a, 0.99, 0.5, Spdc{sp.lambda, 2, SpdcWeighting::paper}, DetectorKind::onoff));
        cr.checks.push_back(detail::near(label("F_eff lambda=%.3f s=%.3f", sp.lambda, sp.s), sp.f_eff,
                                         r.diagnostics.spdc->f_eff, sp.f_tol));
        cr.checks.push_back(
            detail::relative(label("P_tot lambda=%.3f s=%.3f", sp.lambda, sp.s), sp.p_tot, r.probability_total, 0.2));
      }
      detail::Stopwatch grid;
      std::size_t failures = 0;
      for (const auto& panel : figures::panels(5)) failures += sweep(panel.base, panel.grid, opt.threads).failures();
      cr.checks.push_back(detail::below("full grid runtime [s]", 600.0, grid.seconds()));
      cr.checks.push_back({"full grid failed points", "0", std::to_string(failures), "-", failures == 0});
      break;
    }
    case 10: {
      cr.title = "property suites";
      cr.checks.push_back(bs_coefficient_unitarity(opt.bs_coefficient));
      for (auto& c : povm_completeness()) cr.checks.push_back(std::move(c));
      cr.checks.push_back(interference_identity());
      for (auto& c : vacuum_filtering()) cr.checks.push_back(std::move(c));
      cr.checks.push_back(z_scaling());
      cr.checks.push_back(herald_symmetry());
      cr.checks.push_back(spdc_lambda_scaling());
      break;
    }
    default:
      throw ValidationError("unknown criterion " + std::to_string(id));
  }
  cr.seconds = clock.seconds();
  return cr;
}

inline constexpr int criterion_count = 10;

}  // namespace hybrid::selfcheck

#endif  // HYBRID_SELFCHECK_HPP
