#ifndef HYBRID_PIPELINE_HPP
#define HYBRID_PIPELINE_HPP

// The full generation scheme: cat beam split on an unbalanced splitter, the
// reflected part interfered with the displaced second photon of a
// polarization pair, PBS routing into four detector channels, heralding, and
// the resulting qubit/coherent-state hybrid.
//
// Mode names: A_H, A_V (first pair photon, kept), 2H/2V (second pair photon),
// 3 (cat source), 4H/4V (reflected cat), 5H..6V (detector channels),
// B_H/B_V (transmitted cat, the output beam).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "hybrid/analytic_oracles.hpp"
#include "hybrid/detection.hpp"
#include "hybrid/fock_core.hpp"
#include "hybrid/metrics.hpp"
#include "hybrid/optics.hpp"
#include "hybrid/resource_states.hpp"

namespace hybrid {

/// Polarization carried by the cat beam and the matching displacement.
enum class Convention {
  diagonal,   // equal H/V superposition; both herald patterns fire
  parallel_h  // everything horizontally polarized
};

struct IdealScs {};
struct SqueezedScs {
  double s = 0.0;
  int n_cut = 7;
};
using ScsSource = std::variant<IdealScs, SqueezedScs>;

struct Amplitude {
  analytic::AmplitudeKind kind = analytic::AmplitudeKind::alpha_i;
  double value = 0.0;
};

struct Detectors {
  DetectorKind kind = DetectorKind::pnr;
  double eta = 1.0;
};

struct CutoffOverrides {
  std::optional<int> a, detector, b, source;
};

struct SchemeConfig {
  double phi = std::numbers::pi;
  Amplitude amplitude;
  double t = 1.0;
  ScsSource scs_source = IdealScs{};
  PairSourceSpec pair_source = IdealChi{};
  Detectors detectors;
  Convention convention = Convention::diagonal;
  CutoffOverrides cutoffs;

  double alpha_i() const {
    return amplitude.kind == analytic::AmplitudeKind::alpha_i ? amplitude.value : amplitude.value / std::sqrt(t);
  }
  double alpha_f() const {
    return amplitude.kind == analytic::AmplitudeKind::alpha_f ? amplitude.value : amplitude.value * std::sqrt(t);
  }
};

inline void validate(const SchemeConfig& c) {
  if (!std::isfinite(c.phi)) throw ValidationError("phi must be finite");
  if (!(c.t > 0.0 && c.t <= 1.0)) throw ValidationError("t must be in (0, 1], got " + std::to_string(c.t));
  if (!(c.amplitude.value >= 0.0) || !std::isfinite(c.amplitude.value))
    throw ValidationError("cat amplitude must be real and >= 0");
  if (!(c.detectors.eta >= 0.0 && c.detectors.eta <= 1.0))
    throw ValidationError("eta must be in [0, 1], got " + std::to_string(c.detectors.eta));
  if (const auto* sq = std::get_if<SqueezedScs>(&c.scs_source)) {
    if (!(sq->s >= 0.0)) throw ValidationError("squeezing s must be >= 0");
    if (sq->n_cut < 1) throw ValidationError("n_cut must be >= 1");
    if (detail::unit_phase(c.phi) != cplx(-1.0, 0.0))
      throw ValidationError("a squeezed single photon approximates the odd cat; phi must be pi");
    if (c.cutoffs.source) throw ValidationError("cutoff.source is fixed by n_cut for squeezed sources");
  } else {
    validate(ScsSpec{c.alpha_i(), c.phi});
  }
  validate(c.pair_source);
  for (const auto& o : {c.cutoffs.a, c.cutoffs.detector, c.cutoffs.b, c.cutoffs.source})
    if (o && *o < 0) throw ValidationError("cutoffs must be >= 0");
  if (c.cutoffs.a && *c.cutoffs.a < 1) throw ValidationError("cutoff.a must be >= 1");
}

struct Cutoffs {
  int a = 1;
  int detector = 4;
  int b = 14;
  int source = 14;
};

inline constexpr double cutoff_tail_target = 1e-12;
inline constexpr double tail_mass_limit = 1e-8;
inline constexpr double residual_channel_limit = 1e-9;

/// Smallest c with sum_{m>c} |<m|D(gamma)|n>|^2 <= tol for every n <= n_max.
inline int displaced_fock_cutoff(double gamma, int n_max, double tol) {
  const int big = displacement_min_cutoff(gamma) + n_max + 40;
  const auto& d = displacement_matrix(gamma, big).matrix();
  for (int c = n_max;; ++c) {
    if (c >= big) return big;
    double worst = 0.0;
    for (int n = 0; n <= n_max; ++n) {
      double tail = 0.0;
      for (int m = c + 1; m <= big; ++m) tail += std::norm(d(m, n));
      worst = std::max(worst, tail);
    }
    if (worst <= tol) return c;
  }
}

namespace detail {

inline bool diagonal(const SchemeConfig& c) { return c.convention == Convention::diagonal; }

// Coherent amplitude of the displacement on each polarization of mode 2.
inline double displacement_per_mode(const SchemeConfig& c) {
  const double g = std::sqrt(1.0 - c.t) * c.alpha_i();
  return diagonal(c) ? g / std::numbers::sqrt2 : g;
}

inline int pair_order(const SchemeConfig& c) {
  if (const auto* s = std::get_if<Spdc>(&c.pair_source)) return std::max(1, s->order_max);
  return 1;
}

}  // namespace detail

inline Cutoffs resolve_cutoffs(const SchemeConfig& c) {
  Cutoffs k;
  k.a = c.cutoffs.a.value_or(detail::pair_order(c));
  if (k.a < detail::pair_order(c))
    throw TruncationError("cutoff.a is below the pair order " + std::to_string(detail::pair_order(c)),
                          detail::pair_order(c));

  const double g2 = detail::displacement_per_mode(c);
  // After the balanced splitter the surviving displacement is sqrt(2) times larger.
  const double g56 = g2 * std::numbers::sqrt2;
  if (c.cutoffs.detector) {
    k.detector = *c.cutoffs.detector;
  } else {
    k.detector = std::max({4, displacement_min_cutoff(g2), displaced_fock_cutoff(g56, k.a, cutoff_tail_target)});
  }
  if (k.detector < displacement_min_cutoff(g2))
    throw TruncationError("detector cutoff " + std::to_string(k.detector) + " is below the displacement bound " +
                              std::to_string(displacement_min_cutoff(g2)),
                          displacement_min_cutoff(g2));

  const auto* sq = std::get_if<SqueezedScs>(&c.scs_source);
  if (c.cutoffs.b) {
    k.b = *c.cutoffs.b;
  } else {
    k.b = std::max(14, coherent_cutoff(c.alpha_f(), cutoff_tail_target));
    if (sq) k.b = std::max(k.b, 2 * sq->n_cut + 1);
  }
  if (sq) {
    k.source = 2 * sq->n_cut + 1;
  } else {
    k.source = c.cutoffs.source.value_or(std::max(k.b, coherent_cutoff(c.alpha_i(), cutoff_tail_target)));
  }
  return k;
}

namespace detail {

inline PureState set_cutoff(const PureState& s, const std::string& label, int cutoff) {
  const int now = s.reg().mode(s.reg().position(label)).cutoff;
  return cutoff >= now ? extend_mode(s, label, cutoff) : truncate_mode(s, label, cutoff);
}

inline void check_tail(const PureState& s, const std::string& stage) {
  if (s.truncation_loss() > tail_mass_limit)
    throw TruncationError("truncation tail mass " + sci(s.truncation_loss()) + " after " + stage + " exceeds " +
                          sci(tail_mass_limit) + "; raise the cutoffs");
}

}  // namespace detail

/// Mass dropped by the squeezed photon's n_cut renormalization.
inline double source_model_loss(const SchemeConfig& c) {
  if (const auto* sq = std::get_if<SqueezedScs>(&c.scs_source))
    return squeezed_single_photon({sq->s, sq->n_cut}).truncation_loss();
  return 0.0;
}

/// Cat beam after the unbalanced splitter, on (4H, 4V, B_H, B_V) with B
/// already rotated so that the whole beam sits in B_H (B_V has cutoff 0).

inline PureState cat_stage(const SchemeConfig& c, const Cutoffs& k) {
  const int cs = k.source;
  PureState src = std::holds_alternative<IdealScs>(c.scs_source)
                      ? scs(ScsSpec{c.alpha_i(), c.phi}, cs, "3H")
                      : squeezed_single_photon({std::get<SqueezedScs>(c.scs_source).s,
                                                std::get<SqueezedScs>(c.scs_source).n_cut},
                                               "3H");
  // The squeezed photon's n_cut renormalization belongs to the resource model,
  // not to the numerical truncation budget; it is reported separately.
  src = PureState(src.register_ptr(), {src.amplitudes().begin(), src.amplitudes().end()}, 0.0);
  src = tensor(src, vacuum_state(build_register({{"3V", cs}})));
  if (detail::diagonal(c)) src = polarization_rotation(src, "3H", "3V", -std::numbers::pi / 4, tail_mass_limit);

  auto s = tensor(vacuum_state(build_register({{"4H", cs}, {"4V", cs}})), src);
  const auto bs = BsParams::transmissivity(c.t);
  s = apply_beam_splitter(s, "4H", "3H", bs, "4H", "B_H", tail_mass_limit);
  if (detail::diagonal(c)) s = apply_beam_splitter(s, "4V", "3V", bs, "4V", "B_V", tail_mass_limit);
  else s = rename_mode(s, "3V", "B_V");

  for (const char* m : {"4H", "4V"}) s = detail::set_cutoff(s, m, k.detector);
  for (const char* m : {"B_H", "B_V"}) s = detail::set_cutoff(s, m, k.b);
  if (detail::diagonal(c)) s = polarization_rotation(s, "B_H", "B_V", std::numbers::pi / 4, tail_mass_limit);

  const double before = s.truncation_loss();
  s = truncate_mode(s, "B_V", 0);
  if (s.truncation_loss() - before > residual_channel_limit)
    throw TruncationError("output beam is not confined to one polarization channel (residual " +
                          detail::sci(s.truncation_loss() - before) + ")");
  detail::check_tail(s, "cat stage");
  return s;
}

/// Joins a pair state on (A_H, A_V, 2H, 2V) with the cat stage and runs the
/// displacement, balanced splitter and PBS routing. Output register order is
/// (A_H, A_V, 5H, 5V, 6H, 6V, B_H, B_V).
inline PureState propagate_pair(const SchemeConfig& c, const Cutoffs& k, const PureState& pair,
                                const PureState& cat) {
  auto s = tensor(pair, cat);
  for (const char* m : {"2H", "2V"}) s = extend_mode(s, m, k.detector);
  const double g = detail::displacement_per_mode(c);
  s = apply_displacement(s, {g, "2H"});
  if (detail::diagonal(c)) s = apply_displacement(s, {g, "2V"});
  const auto bal = BsParams::balanced();
  s = apply_beam_splitter(s, "4H", "2H", bal, "6H", "5H", tail_mass_limit);
  s = apply_beam_splitter(s, "4V", "2V", bal, "6V", "5V", tail_mass_limit);
  s = pbs_route(s, "5");
  s = pbs_route(s, "6");
  detail::check_tail(s, "interference stage");
  return s;
}

inline PairModes scheme_pair_modes(const Cutoffs& k) { return PairModes{{"A_H", "A_V", "2H", "2V"}, k.a}; }

/// Pre-measurement ensemble on (A_H, A_V, 5H, 5V, 6H, 6V, B_H, B_V): one
/// branch per branch of the pair source.
inline Ensemble build_prestate(const SchemeConfig& c) {
  validate(c);
  const auto k = resolve_cutoffs(c);
  const auto cat = cat_stage(c, k);
  const auto pairs = pair_source(c.pair_source, scheme_pair_modes(k));
  std::optional<Ensemble> out;
  for (const auto& b : pairs.branches()) {
    auto psi = propagate_pair(c, k, b.state, cat);
    if (!out) out.emplace(psi.register_ptr());
    out->add(b.weight, std::move(psi));
  }
  return *out;
}

/// Propagated pair components |Phi_n> for every order the pair source needs.
struct Prestate {
  Cutoffs cutoffs;
  std::vector<int> orders;
  std::vector<PureState> components;
  double tail_mass = 0.0;
};

inline std::vector<int> component_orders(const SchemeConfig& c) {
  if (const auto* v = std::get_if<VacuumMixed>(&c.pair_source))
    return v->z < 1.0 ? std::vector<int>{1, 0} : std::vector<int>{1};
  if (const auto* s = std::get_if<Spdc>(&c.pair_source)) {
    std::vector<int> o;
    for (int n = 0; n <= s->order_max; ++n) o.push_back(n);
    return o;
  }
  return {1};
}

inline Prestate prepare_prestate(const SchemeConfig& c) {
  validate(c);
  Prestate p;
  p.cutoffs = resolve_cutoffs(c);
  p.orders = component_orders(c);
  const auto cat = cat_stage(c, p.cutoffs);
  const auto modes = scheme_pair_modes(p.cutoffs);
  for (int n : p.orders) {
    p.components.push_back(propagate_pair(c, p.cutoffs, phi_n(n, modes), cat));
    p.tail_mass = std::max(p.tail_mass, p.components.back().truncation_loss());
  }
  return p;
}

/// Both herald patterns applied to one component, Pi' corrected by the bit flip.
struct HeraldedComponent {
  int order = 0;
  double p_pi = 0.0;
  double p_pi_prime = 0.0;
  std::optional<DensityOperator> rho;  // unnormalized, on (A_H, A_V, B_H); empty if both patterns vanish

  double probability() const { return p_pi + p_pi_prime; }
};

inline std::vector<HeraldedComponent> herald_components(const Prestate& p, const Detectors& d) {
  std::vector<HeraldedComponent> out;
  const std::string keep[] = {"A_H", "A_V", "B_H", "B_V"};
  const std::string keep_ab[] = {"A_H", "A_V", "B_H"};
  for (std::size_t i = 0; i < p.components.size(); ++i) {
    const auto& psi = p.components[i];
    Ensemble e(psi.register_ptr());
    e.add(1.0, psi);
    HeraldedComponent h;
    h.order = p.orders[i];
    std::optional<DensityOperator> sum;
    for (bool flipped : {false, true}) {
      const auto spec = build_scheme_herald(d.kind, d.eta, flipped, psi.reg());
      std::vector<TracedWeights> w;
      for (const auto& [mode, el] : spec.outcomes) w.push_back({mode, el.weights});
      auto r = partial_trace(weighted_partial_trace(e, keep, w), keep_ab);
      const double pr = r.trace();
      (flipped ? h.p_pi_prime : h.p_pi) = pr;
      if (flipped) r = bit_flip(r);
      sum = sum ? DensityOperator(r.register_ptr(), sum->matrix() + r.matrix()) : std::move(r);
    }
    if (h.probability() > 0.0) h.rho = std::move(sum);
    out.push_back(std::move(h));
  }
  return out;
}

struct OracleCheck {
  double analytic_probability;  // convention-corrected closed form, times z
  double printed_probability;   // single-mode closed form, times z
  double ratio_to_printed;      // numeric / printed
  double analytic_fidelity;
};

struct SpdcDecomposition {
  double p_vac = 0.0, p_chi = 0.0, p_phi2 = 0.0;
  double f_chi = 0.0;
  double f_eff = 0.0;        // O(lambda^6)-truncated expansion
  double f_eff_exact = 0.0;  // w_chi P_chi F_chi / P_tot
  double p_tot = 0.0;
};

struct Diagnostics {
  double p_pi = 0.0;
  double p_pi_prime = 0.0;
  std::vector<std::pair<std::string, double>> branch_probabilities;  // conditional on each pair branch
  double tail_mass = 0.0;
  double source_model_loss = 0.0;  // mass dropped by the squeezed photon's n_cut
  Cutoffs cutoffs;
  std::optional<double> p_vac, p_chi, p_phi2;
  std::optional<OracleCheck> oracle;
  std::optional<SpdcDecomposition> spdc;
};

struct SchemeResult {
  double probability_total = 0.0;
  DensityOperator post_state;
  double fidelity = 0.0;
  double negativity = 0.0;
  Diagnostics diagnostics;
};

inline double component_weight(const SchemeConfig& c, int order) {
  if (const auto* v = std::get_if<VacuumMixed>(&c.pair_source)) return order == 1 ? v->z : 1.0 - v->z;
  if (const auto* s = std::get_if<Spdc>(&c.pair_source)) return spdc_weight(order, s->lambda, s->weighting);
  return order == 1 ? 1.0 : 0.0;
}

inline std::string component_name(int order) {
  if (order == 0) return "vacuum";
  if (order == 1) return "chi";
  return "phi" + std::to_string(order);
}

inline bool oracle_applies(const SchemeConfig& c) {
  return std::holds_alternative<IdealScs>(c.scs_source) && c.detectors.kind == DetectorKind::pnr &&
         !std::holds_alternative<Spdc>(c.pair_source) && c.convention == Convention::diagonal;
}

/// Mixes heralded components with the weights of `c`'s pair source.
inline SchemeResult combine(const SchemeConfig& c, const Prestate& p, const std::vector<HeraldedComponent>& h) {
  SchemeResult res{0.0, DensityOperator(build_register({{"A_H", 0}}), Eigen::MatrixXcd::Zero(1, 1)), 0.0, 0.0, {}};
  auto& dg = res.diagnostics;
  dg.cutoffs = p.cutoffs;
  dg.tail_mass = p.tail_mass;
  dg.source_model_loss = source_model_loss(c);

  std::optional<Eigen::MatrixXcd> acc;
  RegisterPtr reg;
  for (const auto& hc : h) {
    const double w = component_weight(c, hc.order);
    dg.p_pi += w * hc.p_pi;
    dg.p_pi_prime += w * hc.p_pi_prime;
    dg.branch_probabilities.emplace_back(component_name(hc.order), hc.probability());
    if (hc.order == 0) dg.p_vac = hc.probability();
    if (hc.order == 1) dg.p_chi = hc.probability();
    if (hc.order == 2) dg.p_phi2 = hc.probability();
    if (!hc.rho || w == 0.0) continue;
    if (!acc) {
      acc = Eigen::MatrixXcd::Zero(hc.rho->matrix().rows(), hc.rho->matrix().cols());
      reg = hc.rho->register_ptr();
    }
    *acc += w * hc.rho->matrix();
  }
  res.probability_total = dg.p_pi + dg.p_pi_prime;
  if (!acc || !(res.probability_total >= 1e-300))
    throw HeraldingImpossible("no heralding event is possible for this configuration");
  res.post_state = DensityOperator(reg, *acc / res.probability_total);

  const auto target = target_hybrid(c.alpha_f(), c.phi, reg);
  res.fidelity = fidelity(res.post_state, target);
  res.negativity = negativity(res.post_state, Bipartition{{"A_H", "A_V"}, {"B_H"}});

  if (oracle_applies(c)) {
    const double z = component_weight(c, 1);
    OracleCheck o;
    o.analytic_probability = z * analytic::p_tot_eta(c.alpha_f(), c.t, c.detectors.eta, c.phi);
    o.printed_probability = z * analytic::printed::p_tot_eta(c.alpha_f(), c.t, c.detectors.eta, c.phi);
    o.ratio_to_printed = o.printed_probability > 0.0 ? res.probability_total / o.printed_probability
                                                     : std::numeric_limits<double>::quiet_NaN();
    o.analytic_fidelity = analytic::fidelity_eta(c.alpha_f(), c.t, c.detectors.eta);
    dg.oracle = o;
  }

  if (const auto* s = std::get_if<Spdc>(&c.pair_source); s && s->order_max >= 2) {
    SpdcDecomposition d;
    d.p_vac = dg.p_vac.value_or(0.0);
    d.p_chi = dg.p_chi.value_or(0.0);
    d.p_phi2 = dg.p_phi2.value_or(0.0);
    d.p_tot = res.probability_total;
    for (const auto& hc : h)
      if (hc.order == 1 && hc.rho) {
        const DensityOperator chi(hc.rho->register_ptr(), hc.rho->matrix() / hc.probability());
        d.f_chi = fidelity(chi, target);
      }
    if (d.p_vac > 0.0 || d.p_chi > 0.0 || d.p_phi2 > 0.0)
      d.f_eff = analytic::f_eff_expansion(d.p_vac, d.p_chi, d.p_phi2, s->lambda, d.f_chi);
    // Unexpanded form with the |chi> weight of the configured weighting.
    d.f_eff_exact = component_weight(c, 1) * d.p_chi * d.f_chi / d.p_tot;
    dg.spdc = d;
  }
  return res;
}

inline SchemeResult run_scheme(const SchemeConfig& c) {
  const auto p = prepare_prestate(c);
  return combine(c, p, herald_components(p, c.detectors));
}

inline SpdcDecomposition spdc_decomposition(const SchemeConfig& c) {
  const auto* s = std::get_if<Spdc>(&c.pair_source);
  if (!s) throw ValidationError("spdc_decomposition needs an SPDC pair source");
  if (s->order_max < 2) throw ValidationError("spdc_decomposition needs order_max >= 2");
  return *run_scheme(c).diagnostics.spdc;
}

// ---------------------------------------------------------------------------
// Sweeps

/// Grid parameters in canonical column order.
inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> names{"t", "eta", "alpha_f", "lambda", "s", "z"};
  return names;
}

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct SweepRow {
  std::vector<double> params;
  double fidelity = std::numeric_limits<double>::quiet_NaN();
  double probability_total = std::numeric_limits<double>::quiet_NaN();
  double negativity = std::numeric_limits<double>::quiet_NaN();
  double p_vac = std::numeric_limits<double>::quiet_NaN();
  double p_chi = std::numeric_limits<double>::quiet_NaN();
  double p_phi2 = std::numeric_limits<double>::quiet_NaN();
  double tail_mass = std::numeric_limits<double>::quiet_NaN();
  double f_eff = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
  std::optional<SchemeResult> result;

  bool ok() const { return status == "ok"; }
};

struct SweepTable {
  std::vector<std::string> params;
  std::vector<SweepRow> rows;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok(); }));
  }
};

/// Sets one grid parameter on a copy of `c`; throws if the parameter does not
/// apply to the configured resources.
inline SchemeConfig with_parameter(SchemeConfig c, const std::string& name, double v) {
  if (name == "t") {
    c.t = v;
  } else if (name == "eta") {
    c.detectors.eta = v;
  } else if (name == "alpha_f") {
    c.amplitude = {analytic::AmplitudeKind::alpha_f, v};
  } else if (name == "lambda") {
    auto* s = std::get_if<Spdc>(&c.pair_source);
    if (!s) throw ValidationError("sweep over lambda needs an SPDC pair source");
    s->lambda = v;
  } else if (name == "s") {
    auto* s = std::get_if<SqueezedScs>(&c.scs_source);
    if (!s) throw ValidationError("sweep over s needs a squeezed cat source");
    s->s = v;
  } else if (name == "z") {
    auto* s = std::get_if<VacuumMixed>(&c.pair_source);
    if (!s) throw ValidationError("sweep over z needs a vacuum-mixed pair source");
    s->z = v;
  } else {
    throw ValidationError("unknown sweep parameter '" + name + "'");
  }
  return c;
}

/// Identifies configurations that share a pre-measurement state.
inline std::string prestate_key(const SchemeConfig& c) {
  std::ostringstream k;
  k.precision(17);
  k << c.phi << '|' << c.alpha_i() << '|' << c.t << '|' << static_cast<int>(c.convention) << '|';
  if (const auto* s = std::get_if<SqueezedScs>(&c.scs_source)) k << "sq" << s->s << ',' << s->n_cut;
  else k << "ideal";
  k << '|';
  for (int o : component_orders(c)) k << o << ',';
  const auto& o = c.cutoffs;
  for (const auto& x : {o.a, o.detector, o.b, o.source}) k << '|' << (x ? *x : -1);
  return k.str();
}

inline void fill_row(SweepRow& row, SchemeResult r) {
  row.fidelity = r.fidelity;
  row.probability_total = r.probability_total;
  row.negativity = r.negativity;
  const auto& d = r.diagnostics;
  if (d.p_vac) row.p_vac = *d.p_vac;
  if (d.p_chi) row.p_chi = *d.p_chi;
  if (d.p_phi2) row.p_phi2 = *d.p_phi2;
  row.tail_mass = d.tail_mass;
  if (d.spdc) row.f_eff = d.spdc->f_eff;
  row.result = std::move(r);
}

/// Evaluates every point of the Cartesian grid. Rows come out in
/// lexicographic order of the sorted parameter values; failing points are
/// marked rather than aborting the sweep. Points sharing a pre-measurement
/// state reuse it.
inline SweepTable sweep(const SchemeConfig& base, std::vector<SweepAxis> grid, int threads = 1) {
  if (grid.empty()) throw ValidationError("sweep grid is empty");
  const auto& canon = sweep_parameters();
  for (auto& ax : grid) {
    if (std::find(canon.begin(), canon.end(), ax.name) == canon.end())
      throw ValidationError("unknown sweep parameter '" + ax.name + "'");
    if (ax.values.empty()) throw ValidationError("sweep axis '" + ax.name + "' has no values");
    std::sort(ax.values.begin(), ax.values.end());
    ax.values.erase(std::unique(ax.values.begin(), ax.values.end()), ax.values.end());
    with_parameter(base, ax.name, ax.values.front());  // resource compatibility
  }
  std::sort(grid.begin(), grid.end(), [&](const SweepAxis& x, const SweepAxis& y) {
    return std::find(canon.begin(), canon.end(), x.name) < std::find(canon.begin(), canon.end(), y.name);
  });
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i].name == grid[i - 1].name) throw ValidationError("sweep parameter '" + grid[i].name + "' given twice");

  SweepTable table;
  for (const auto& ax : grid) table.params.push_back(ax.name);

  std::vector<SchemeConfig> configs;
  std::vector<std::size_t> idx(grid.size(), 0);
  for (;;) {
    SweepRow row;
    SchemeConfig c = base;
    for (std::size_t a = 0; a < grid.size(); ++a) {
      row.params.push_back(grid[a].values[idx[a]]);
      c = with_parameter(c, grid[a].name, grid[a].values[idx[a]]);
    }
    table.rows.push_back(std::move(row));
    configs.push_back(std::move(c));
    std::size_t a = grid.size();
    while (a > 0) {
      --a;
      if (++idx[a] < grid[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) goto done;
    }
  }
done:
  // Group points by shared pre-measurement state; groups run concurrently.
  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::string> group_errors(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    try {
      validate(configs[i]);
      groups[prestate_key(configs[i])].push_back(i);
    } catch (const std::exception& e) {
      table.rows[i].status = std::string("error: ") + e.what();
    }
  }
  std::vector<const std::vector<std::size_t>*> work;
  for (const auto& [key, members] : groups) work.push_back(&members);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t g; (g = next.fetch_add(1)) < work.size();) {
      const auto& members = *work[g];
      std::optional<Prestate> pre;
      try {
        pre = prepare_prestate(configs[members.front()]);
      } catch (const std::exception& e) {
        for (auto i : members) table.rows[i].status = std::string("error: ") + e.what();
        continue;
      }
      std::map<std::pair<int, double>, std::vector<HeraldedComponent>> heralded;
      for (auto i : members) {
        const auto& c = configs[i];
        try {
          const auto key = std::make_pair(static_cast<int>(c.detectors.kind), c.detectors.eta);
          auto it = heralded.find(key);
          if (it == heralded.end()) it = heralded.emplace(key, herald_components(*pre, c.detectors)).first;
          fill_row(table.rows[i], combine(c, *pre, it->second));
        } catch (const std::exception& e) {
          table.rows[i].status = std::string("error: ") + e.what();
        }
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(work.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return table;
}

}  // namespace hybrid

#endif  // HYBRID_PIPELINE_HPP
