#ifndef HYBRID_CLI_HPP
#define HYBRID_CLI_HPP

// Scenario files, result tables and the run/sweep/reproduce/selfcheck commands.
//
// A scenario is a flat list of `key = value` lines; `#` starts a comment.
// Physical parameters have no defaults. Grid axes are written
// `sweep.<param> = v1, v2, ...` or `sweep.<param> = linspace(first, last, count)`.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hybrid/figures.hpp"
#include "hybrid/pipeline.hpp"
#include "hybrid/selfcheck.hpp"

namespace hybrid::cli {

enum ExitCode { ok = 0, invalid_input = 1, check_failed = 2, numerical_failure = 3 };

struct Scenario {
  SchemeConfig config;
  std::vector<SweepAxis> grid;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline double parse_number(const std::string& key, const std::string& text) {
  const auto v = trim(text);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(x))
    throw ValidationError("'" + key + "': expected a number, got '" + v + "'");
  return x;
}

inline int parse_int(const std::string& key, const std::string& text) {
  const double x = parse_number(key, text);
  if (x != std::floor(x) || std::abs(x) > 1e6) throw ValidationError("'" + key + "': expected an integer");
  return static_cast<int>(x);
}

// Accepts plain numbers and multiples or fractions of pi: pi, -pi, 0.5*pi, pi/2, 2pi.
inline double parse_phase(const std::string& key, const std::string& text) {
  std::string v;
  for (char ch : text)
    if (ch != ' ' && ch != '\t') v += ch;
  const auto at = v.find("pi");
  if (at == std::string::npos) return parse_number(key, v);
  std::string head = v.substr(0, at), tail = v.substr(at + 2);
  double factor = 1.0;
  if (head == "-") factor = -1.0;
  else if (!head.empty()) {
    if (head.back() == '*') head.pop_back();
    factor = parse_number(key, head);
  }
  if (!tail.empty()) {
    if (tail.front() != '/') throw ValidationError("'" + key + "': cannot parse '" + text + "'");
    factor /= parse_number(key, tail.substr(1));
  }
  return factor * std::numbers::pi;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  const auto v = trim(text);
  std::vector<double> out;
  if (v.rfind("linspace(", 0) == 0) {
    if (v.back() != ')') throw ValidationError("'" + key + "': unterminated linspace(");
    const auto args = parse_list(key, v.substr(9, v.size() - 10));
    if (args.size() != 3) throw ValidationError("'" + key + "': linspace takes (first, last, count)");
    const int n = parse_int(key, std::to_string(args[2]));
    if (n < 1) throw ValidationError("'" + key + "': linspace count must be >= 1");
    for (int k = 0; k < n; ++k) {
      const double x = n == 1 ? args[0] : args[0] + (args[1] - args[0]) * k / (n - 1);
      out.push_back(std::round(x * 1e12) / 1e12);
    }
    return out;
  }
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
  if (out.empty()) throw ValidationError("'" + key + "': empty list");
  return out;
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "phi",      "alpha_i",   "alpha_f",        "t",        "scs_source", "s",           "n_cut",
      "pair_source", "z",      "lambda",         "order_max", "spdc_weighting", "detector", "eta",
      "convention", "cutoff.a", "cutoff.detector", "cutoff.b", "cutoff.source"};
  return keys;
}

}  // namespace detail

/// Parses a scenario document; `origin` names it in error messages.
inline Scenario parse_scenario(std::istream& in, const std::string& origin = "scenario") {
  std::map<std::string, std::string> kv;
  std::map<std::string, std::vector<double>> sweeps;
  std::vector<std::string> sweep_order;
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(no) + ": ";
    if (eq == std::string::npos) throw ValidationError(where + "expected 'key = value'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (value.empty()) throw ValidationError(where + "missing value for '" + key + "'");
    if (key.rfind("sweep.", 0) == 0) {
      const auto p = key.substr(6);
      const auto& names = sweep_parameters();
      if (std::find(names.begin(), names.end(), p) == names.end())
        throw ValidationError(where + "unknown sweep parameter '" + p + "'");
      if (sweeps.count(p)) throw ValidationError(where + "duplicate key '" + key + "'");
      try {
        sweeps[p] = detail::parse_list(key, value);
      } catch (const ValidationError& e) {
        throw ValidationError(where + e.what());
      }
      sweep_order.push_back(p);
      continue;
    }
    if (!detail::known_keys().count(key)) throw ValidationError(where + "unknown key '" + key + "'");
    if (kv.count(key)) throw ValidationError(where + "duplicate key '" + key + "'");
    kv[key] = value;
  }

  for (const auto& [p, v] : sweeps)
    if (kv.count(p)) throw ValidationError("'" + p + "' is both fixed and swept");

  std::set<std::string> used;
  auto has = [&](const std::string& k) { return kv.count(k) > 0; };
  auto take = [&](const std::string& k) -> const std::string& {
    used.insert(k);
    return kv.at(k);
  };
  // Value of a physical key: the fixed value, or the first grid value when swept.
  auto physical = [&](const std::string& k) -> double {
    if (has(k)) return detail::parse_number(k, take(k));
    if (sweeps.count(k)) return sweeps.at(k).front();
    throw ValidationError("missing required key '" + k + "'");
  };

  Scenario sc;
  auto& c = sc.config;
  if (!has("phi")) throw ValidationError("missing required key 'phi'");
  c.phi = detail::parse_phase("phi", take("phi"));

  if (!has("scs_source")) throw ValidationError("missing required key 'scs_source'");
  const auto scs = take("scs_source");
  if (scs == "ideal") {
    c.scs_source = IdealScs{};
  } else if (scs == "squeezed") {
    SqueezedScs sq;
    sq.s = physical("s");
    if (has("n_cut")) sq.n_cut = detail::parse_int("n_cut", take("n_cut"));
    c.scs_source = sq;
  } else {
    throw ValidationError("scs_source must be 'ideal' or 'squeezed', got '" + scs + "'");
  }

  const bool fi = has("alpha_i"), ff = has("alpha_f") || sweeps.count("alpha_f");
  if (fi && ff) throw ValidationError("give exactly one of alpha_i and alpha_f");
  if (!fi && !ff) throw ValidationError("missing required key 'alpha_i' or 'alpha_f'");
  c.t = physical("t");
  if (fi) c.amplitude = {analytic::AmplitudeKind::alpha_i, detail::parse_number("alpha_i", take("alpha_i"))};
  else c.amplitude = {analytic::AmplitudeKind::alpha_f, physical("alpha_f")};

  if (!has("pair_source")) throw ValidationError("missing required key 'pair_source'");
  const auto pair = take("pair_source");
  if (pair == "chi") {
    c.pair_source = IdealChi{};
  } else if (pair == "vacuum_mixed") {
    c.pair_source = VacuumMixed{physical("z")};
  } else if (pair == "spdc") {
    Spdc sp;
    sp.lambda = physical("lambda");
    if (has("order_max")) sp.order_max = detail::parse_int("order_max", take("order_max"));
    if (has("spdc_weighting")) {
      const auto w = take("spdc_weighting");
      if (w == "paper") sp.weighting = SpdcWeighting::paper;
      else if (w == "exact") sp.weighting = SpdcWeighting::exact;
      else throw ValidationError("spdc_weighting must be 'paper' or 'exact', got '" + w + "'");
    }
    c.pair_source = sp;
  } else {
    throw ValidationError("pair_source must be 'chi', 'vacuum_mixed' or 'spdc', got '" + pair + "'");
  }

  if (!has("detector")) throw ValidationError("missing required key 'detector'");
  const auto det = take("detector");
  if (det == "pnr") c.detectors.kind = DetectorKind::pnr;
  else if (det == "onoff") c.detectors.kind = DetectorKind::onoff;
  else throw ValidationError("detector must be 'pnr' or 'onoff', got '" + det + "'");
  c.detectors.eta = physical("eta");

  if (has("convention")) {
    const auto v = take("convention");
    if (v == "diagonal") c.convention = Convention::diagonal;
    else if (v == "parallel_h") c.convention = Convention::parallel_h;
    else throw ValidationError("convention must be 'diagonal' or 'parallel_h', got '" + v + "'");
  }
  const std::pair<const char*, std::optional<int>*> cut[] = {{"cutoff.a", &c.cutoffs.a},
                                                             {"cutoff.detector", &c.cutoffs.detector},
                                                             {"cutoff.b", &c.cutoffs.b},
                                                             {"cutoff.source", &c.cutoffs.source}};
  for (const auto& [k, slot] : cut)
    if (has(k)) *slot = detail::parse_int(k, take(k));

  for (const auto& [k, v] : kv)
    if (!used.count(k)) throw ValidationError("key '" + k + "' does not apply to this configuration");
  for (const auto& p : sweep_order) sc.grid.push_back({p, sweeps.at(p)});

  if (sc.grid.empty()) {
    validate(c);
    return sc;
  }
  // Individual invalid grid points become marked rows; a grid with no valid
  // point at all is an input error.
  std::optional<ValidationError> first;
  std::vector<std::size_t> idx(sc.grid.size(), 0);
  for (;;) {
    SchemeConfig p = c;
    for (std::size_t a = 0; a < sc.grid.size(); ++a) p = with_parameter(p, sc.grid[a].name, sc.grid[a].values[idx[a]]);
    try {
      validate(p);
      return sc;
    } catch (const ValidationError& e) {
      if (!first) first = e;
    }
    std::size_t a = 0;
    while (a < sc.grid.size() && ++idx[a] == sc.grid[a].values.size()) idx[a++] = 0;
    if (a == sc.grid.size()) break;
  }
  throw *first;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open scenario file '" + path + "'");
  return parse_scenario(f, path);
}

// ---------------------------------------------------------------------------
// Result tables

inline const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols{"fidelity", "probability_total", "negativity", "p_vac",
                                             "p_chi",    "p_phi2",            "tail_mass",  "f_eff"};
  return cols;
}

/// 12 significant digits; "nan" for missing values.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.11e", x);
  return buf;
}

/// Comma-separated table. `leading` adds constant-valued columns in front (e.g. a panel id).
inline void write_table(std::ostream& out, const SweepTable& table,
                        const std::vector<std::pair<std::string, std::string>>& leading = {}, bool header = true) {
  if (header) {
    std::vector<std::string> cols;
    for (const auto& [k, v] : leading) cols.push_back(k);
    cols.insert(cols.end(), table.params.begin(), table.params.end());
    cols.insert(cols.end(), metric_columns().begin(), metric_columns().end());
    cols.push_back("status");
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
  }
  for (const auto& r : table.rows) {
    for (const auto& [k, v] : leading) out << v << ',';
    for (double p : r.params) out << format_number(p) << ',';
    for (double m : {r.fidelity, r.probability_total, r.negativity, r.p_vac, r.p_chi, r.p_phi2, r.tail_mass, r.f_eff})
      out << format_number(m) << ',';
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << status << '\n';
  }
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << text;
}

// ---------------------------------------------------------------------------
// Commands

/// Runs `body`, mapping library exceptions to exit codes.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return invalid_input;
  } catch (const TruncationError& e) {
    err << "truncation failure: " << e.what() << '\n';
    if (e.required_cutoff() >= 0) err << "  required cutoff: " << e.required_cutoff() << '\n';
    return numerical_failure;
  } catch (const HeraldingImpossible& e) {
    err << "heralding failure: " << e.what() << '\n';
    return numerical_failure;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  }
}

namespace detail {

inline void print_result(std::ostream& out, const SchemeConfig& c, const SchemeResult& r) {
  char buf[256];
  auto line = [&](const char* key, const char* fmt, double v) {
    std::snprintf(buf, sizeof buf, fmt, v);
    out << key << std::string(20 - std::min<std::size_t>(19, std::strlen(key)), ' ') << buf << '\n';
  };
  const auto& d = r.diagnostics;
  line("fidelity", "%.6f", r.fidelity);
  line("probability_total", "%.6e", r.probability_total);
  line("negativity", "%.6f", r.negativity);
  line("p_pi", "%.6e", d.p_pi);
  line("p_pi_prime", "%.6e", d.p_pi_prime);
  for (const auto& [name, p] : d.branch_probabilities) line(("p_" + name).c_str(), "%.6e", p);
  line("tail_mass", "%.3e", d.tail_mass);
  if (d.source_model_loss > 0.0) line("source_model_loss", "%.3e", d.source_model_loss);
  std::snprintf(buf, sizeof buf, "a=%d detector=%d b=%d source=%d", d.cutoffs.a, d.cutoffs.detector, d.cutoffs.b,
                d.cutoffs.source);
  out << "cutoffs             " << buf << '\n';
  if (d.spdc) {
    line("f_chi", "%.6f", d.spdc->f_chi);
    line("f_eff", "%.6f", d.spdc->f_eff);
    line("f_eff_exact", "%.6f", d.spdc->f_eff_exact);
  }
  if (d.oracle) {
    const auto& o = *d.oracle;
    std::snprintf(buf, sizeof buf,
                  "closed-form cross-check ran: probability %.6e (numeric/closed-form %.9f), "
                  "single-mode expression %.6e (ratio %.9f, documented factor %.1f)",
                  o.analytic_probability, r.probability_total / o.analytic_probability, o.printed_probability,
                  o.ratio_to_printed, analytic::convention_factor);
    out << "oracle              " << buf << '\n';
    std::snprintf(buf, sizeof buf, "closed-form fidelity %.9f (|difference| %.2e)", o.analytic_fidelity,
                  std::abs(o.analytic_fidelity - r.fidelity));
    out << "oracle              " << buf << '\n';
  } else {
    out << "oracle              none: no closed form for this configuration; numerics are authoritative\n";
  }
  (void)c;
}

}  // namespace detail

inline int cmd_run(const std::string& scenario, const std::optional<std::string>& output, std::ostream& out,
                   std::ostream& err) {
  return guarded(err, [&] {
    const auto sc = load_scenario(scenario);
    if (!sc.grid.empty()) throw ValidationError("scenario defines a sweep grid; use the sweep command");
    const auto r = run_scheme(sc.config);
    detail::print_result(out, sc.config, r);
    if (output) {
      SweepTable t;
      SweepRow row;
      fill_row(row, r);
      t.rows.push_back(std::move(row));
      std::ostringstream s;
      write_table(s, t);
      write_file(*output, s.str());
    }
    return static_cast<int>(ok);
  });
}

inline int cmd_sweep(const std::string& scenario, const std::optional<std::string>& output, int threads,
                     std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto sc = load_scenario(scenario);
    if (sc.grid.empty()) throw ValidationError("scenario has no sweep.<param> entries");
    const auto table = sweep(sc.config, sc.grid, threads);
    std::ostringstream s;
    write_table(s, table);
    if (output) write_file(*output, s.str());
    else out << s.str();
    if (const auto f = table.failures())
      err << "warning: " << f << " of " << table.rows.size() << " grid points failed\n";
    return static_cast<int>(ok);
  });
}

// Spot comparisons printed by `reproduce`.
namespace detail {

inline const SweepRow* find_row(const SweepTable& t, const std::map<std::string, double>& at) {
  for (const auto& r : t.rows) {
    bool match = true;
    for (std::size_t i = 0; i < t.params.size() && match; ++i)
      if (auto it = at.find(t.params[i]); it != at.end()) match = std::abs(r.params[i] - it->second) < 1e-9;
    if (match) return &r;
  }
  return nullptr;
}

inline std::size_t column(const SweepTable& t, const std::string& name) {
  return static_cast<std::size_t>(std::find(t.params.begin(), t.params.end(), name) - t.params.begin());
}

inline std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

inline void compare(std::ostream& out, const std::string& what, double published, double computed) {
  out << "# " << what << fmt(": published %.4g, computed %.6g, delta %+.3g", published, computed, computed - published) << '\n';
}

// For each value of `group`, is `metric` increasing along `along`?
inline bool monotone(const SweepTable& t, const std::string& group, const std::string& along) {
  const auto g = column(t, group), a = column(t, along);
  std::map<double, std::vector<std::pair<double, double>>> curves;
  for (const auto& r : t.rows)
    if (r.ok()) curves[r.params[g]].emplace_back(r.params[a], r.fidelity);
  for (auto& [k, pts] : curves) {
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (!(pts[i].second > pts[i - 1].second)) return false;
  }
  return true;
}

inline void summarize(std::ostream& out, const figures::Panel& p, const SweepTable& t) {
  out << "# panel " << p.id << ": " << p.description << '\n';
  out << "# points " << t.rows.size() << ", failed " << t.failures() << '\n';
  const char fig = p.id[0];
  if (fig == '2' || fig == '3') {
    double worst = 0.0, rlo = 1e300, rhi = 0.0;
    for (const auto& r : t.rows) {
      if (!r.ok() || !r.result->diagnostics.oracle) continue;
      const auto& o = *r.result->diagnostics.oracle;
      worst = std::max(worst, std::abs(r.fidelity - o.analytic_fidelity));
      rlo = std::min(rlo, o.ratio_to_printed), rhi = std::max(rhi, o.ratio_to_printed);
    }
    out << "# max |fidelity - closed form| " << fmt("%.3e", worst) << '\n';
    out << "# numeric / single-mode probability expression in " << fmt("[%.9f, %.9f]", rlo, rhi)
        << fmt(" (documented factor %.1f)", analytic::convention_factor) << '\n';
    if (fig == '2')
      out << "# fidelity increasing in t for every eta: " << (monotone(t, "eta", "t") ? "true" : "false") << '\n';
    else
      out << "# fidelity increasing in eta for every alpha_f: " << (monotone(t, "alpha_f", "eta") ? "true" : "false")
          << '\n';
  }
  if (fig == '4') {
    const bool small = p.id[1] == 'a' || p.id[1] == 'b';
    const double bound = small ? 0.996 : 0.986;
    bool all = true;
    double fmin = 1.0, plo = 1e300, phi = 0.0;
    const auto ct = column(t, "t"), ce = column(t, "eta");
    for (const auto& r : t.rows) {
      if (!r.ok()) {
        all = false;
        continue;
      }
      const double tv = r.params[ct], ev = r.params[ce];
      if (tv >= 0.99 - 1e-12 && ev >= 0.4 - 1e-12) {
        fmin = std::min(fmin, r.fidelity);
        all = all && r.fidelity > bound;
      }
      if (std::abs(tv - 0.99) < 1e-12 && ev >= 0.4 - 1e-12)
        plo = std::min(plo, r.probability_total), phi = std::max(phi, r.probability_total);
    }
    out << "# all F > " << fmt("%.3f", bound) << " for t >= 0.99, eta >= 0.4: " << (all ? "true" : "false")
        << fmt(" (minimum %.6f)", fmin) << '\n';
    out << "# P_tot at t = 0.99 over eta in [0.4, 1]: " << fmt("%.3e to %.3e", plo, phi)
        << " (published: about 1e-4 to 1e-3)\n";
    if (const auto* r = find_row(t, {{"t", 0.99}, {"eta", 0.7}}); r && r->ok())
      compare(out, "negativity at t = 0.99, eta = 0.7", small ? 0.922 : 0.982, r->negativity);
  }
  if (fig == '5') {
    const bool small = p.id[1] == 'a';
    const double lambda = small ? 0.022 : 0.038;
    if (const auto* r = find_row(t, {{"lambda", lambda}, {"eta", 0.5}}); r && r->ok()) {
      compare(out, fmt("F_eff at lambda = %.3f, eta = 0.5", lambda), small ? 0.939 : 0.842, r->f_eff);
      compare(out, fmt("P_tot at lambda = %.3f, eta = 0.5", lambda), small ? 5.1e-7 : 2.4e-6, r->probability_total);
    }
  }
}

}  // namespace detail

inline int cmd_reproduce(int figure, std::optional<char> panel, const std::optional<std::string>& output, int threads,
                         std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto panels = figures::panels(figure, panel);
    std::ostringstream table;
    std::map<std::string, SweepTable> memo;  // panels sharing a grid share the data
    bool first = true;
    for (const auto& p : panels) {
      std::ostringstream key;
      key << prestate_key(p.base) << '|' << static_cast<int>(p.base.detectors.kind);
      for (const auto& ax : p.grid) key << '|' << ax.name << ax.values.size() << ',' << ax.values.front();
      auto it = memo.find(key.str());
      if (it == memo.end()) it = memo.emplace(key.str(), sweep(p.base, p.grid, threads)).first;
      detail::summarize(out, p, it->second);
      write_table(table, it->second, {{"panel", p.id}}, first);
      first = false;
    }
    if (output) write_file(*output, table.str());
    else out << table.str();
    return static_cast<int>(ok);
  });
}

inline int cmd_selfcheck(const selfcheck::Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    int failed = 0;
    for (int id = 1; id <= selfcheck::criterion_count; ++id) {
      const auto cr = selfcheck::criterion(id, opt);
      for (const auto& c : cr.checks) {
        out << (c.pass ? "PASS " : "FAIL ") << "[" << id << "] " << c.name << " | expected " << c.expected
            << " | actual " << c.actual << " | tolerance " << c.tolerance << '\n';
        failed += !c.pass;
      }
    }
    out << (failed ? "selfcheck: " + std::to_string(failed) + " check(s) failed" : std::string("selfcheck: all passed"))
        << '\n';
    return static_cast<int>(failed ? check_failed : ok);
  });
}

}  // namespace hybrid::cli

#endif  // HYBRID_CLI_HPP
