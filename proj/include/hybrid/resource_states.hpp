#ifndef HYBRID_RESOURCE_STATES_HPP
#define HYBRID_RESOURCE_STATES_HPP

// Input states: coherent states, cat states (SCS), squeezed single photons,
// the polarization Bell pair and its vacuum-mixed and SPDC relatives.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "hybrid/fock_core.hpp"

namespace hybrid {

namespace detail {

// e^{i phi} with multiples of pi/2 snapped to exact values, so that symmetric
// and antisymmetric cat states have exactly vanishing amplitudes.
inline cplx unit_phase(double phi) {
  const double q = phi / (std::numbers::pi / 2);
  const double r = std::round(q);
  if (std::abs(q - r) < 1e-12) {
    switch (((static_cast<long long>(r) % 4) + 4) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  return std::polar(1.0, phi);
}

// |alpha> amplitudes e^{-|a|^2/2} a^n / sqrt(n!) for n = 0..cutoff.
inline std::vector<cplx> coherent_amplitudes(cplx alpha, int cutoff) {
  std::vector<cplx> c(static_cast<std::size_t>(cutoff) + 1);
  c[0] = std::exp(-std::norm(alpha) / 2);
  for (int n = 1; n <= cutoff; ++n) c[n] = c[n - 1] * alpha / std::sqrt(double(n));
  return c;
}

}  // namespace detail

/// Probability mass of |alpha> above `cutoff`, summed directly (no cancellation).
inline double coherent_tail_mass(double abs_alpha, int cutoff) {
  const double x = abs_alpha * abs_alpha;
  double term = std::exp(-x);  // P(0)
  for (int n = 1; n <= cutoff; ++n) term *= x / n;
  double tail = 0.0;
  for (int n = cutoff + 1; n < cutoff + 2000; ++n) {
    term *= x / n;
    tail += term;
    if (term < 1e-30 * (tail + 1e-300) && n > x) break;
  }
  return tail;
}

/// Smallest cutoff whose coherent tail mass is at most `tol`.
inline int coherent_cutoff(double abs_alpha, double tol) {
  int c = 0;
  while (coherent_tail_mass(abs_alpha, c) > tol) ++c;
  return c;
}

inline PureState coherent(cplx alpha, int cutoff, const std::string& label = "a") {
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
    throw ValidationError("coherent amplitude must be finite");
  if (cutoff < 0) throw ValidationError("negative cutoff");
  const double tail = coherent_tail_mass(std::abs(alpha), cutoff);
  if (tail > tolerance::truncation) {
    const int need = coherent_cutoff(std::abs(alpha), tolerance::truncation);
    throw TruncationError("coherent state |" + std::to_string(std::abs(alpha)) +
                              "> needs cutoff " + std::to_string(need) + ", got " +
                              std::to_string(cutoff),
                          need);
  }
  auto c = detail::coherent_amplitudes(alpha, cutoff);
  double n2 = 0.0;
  for (const auto& x : c) n2 += std::norm(x);
  for (auto& x : c) x /= std::sqrt(n2);
  return PureState(build_register({{label, cutoff}}), std::move(c), tail);
}

inline PureState coherent(double alpha, int cutoff, const std::string& label = "a") {
  return coherent(cplx(alpha, 0.0), cutoff, label);
}

struct ScsSpec {
  double alpha = 0.0;
  double phi = 0.0;

  /// (2 + 2 e^{-2 alpha^2} cos phi)^{-1/2}
  double normalization() const {
    return 1.0 / std::sqrt(2.0 + 2.0 * std::exp(-2.0 * alpha * alpha) * detail::unit_phase(phi).real());
  }
};

inline void validate(const ScsSpec& spec) {
  if (!std::isfinite(spec.alpha) || spec.alpha < 0.0)
    throw ValidationError("cat amplitude must be real and non-negative");
  if (!std::isfinite(spec.phi)) throw ValidationError("cat phase must be finite");
  if (detail::unit_phase(spec.phi) == cplx(-1.0, 0.0) && spec.alpha <= 1e-6)
    throw ValidationError("odd cat state needs alpha > 1e-6");
}

/// N_phi (|alpha> + e^{i phi} |-alpha>), renormalized on the truncated space.
inline PureState scs(const ScsSpec& spec, int cutoff, const std::string& label = "a") {
  validate(spec);
  const auto a = coherent(spec.alpha, cutoff, label);
  const cplx ph = detail::unit_phase(spec.phi);
  const double nphi = spec.normalization();
  const auto c = detail::coherent_amplitudes(spec.alpha, cutoff);
  std::vector<cplx> out(c.size());
  for (std::size_t n = 0; n < c.size(); ++n) {
    const cplx f = (n % 2 == 0) ? cplx(1.0) + ph : cplx(1.0) - ph;
    out[n] = nphi * f * c[n];
  }
  double n2 = 0.0;
  for (const auto& x : out) n2 += std::norm(x);
  const double lost = std::max(0.0, 1.0 - n2);
  for (auto& x : out) x /= std::sqrt(n2);
  return PureState(a.register_ptr(), std::move(out), lost);
}

struct SqueezedPhotonSpec {
  double s = 0.0;
  int n_cut = 7;

  int cutoff() const { return 2 * n_cut + 1; }
};

/// Unnormalized amplitudes of S(s)|1> on |2n+1>, n = 0..n_cut.
inline std::vector<double> squeezed_photon_coefficients(double s, int n_cut) {
  std::vector<double> a(static_cast<std::size_t>(n_cut) + 1);
  a[0] = std::pow(std::cosh(s), -1.5);
  for (int n = 1; n <= n_cut; ++n)
    a[n] = a[n - 1] * std::tanh(s) * std::sqrt(2.0 * n * (2.0 * n + 1.0)) / (2.0 * n);
  return a;
}

inline PureState squeezed_single_photon(const SqueezedPhotonSpec& spec, const std::string& label = "a") {
  if (!std::isfinite(spec.s) || spec.s < 0.0) throw ValidationError("squeezing s must be >= 0");
  if (spec.n_cut < 1) throw ValidationError("n_cut must be >= 1");
  const auto a = squeezed_photon_coefficients(spec.s, spec.n_cut);
  std::vector<cplx> out(static_cast<std::size_t>(spec.cutoff()) + 1, 0.0);
  double n2 = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    out[2 * n + 1] = a[n];
    n2 += a[n] * a[n];
  }
  for (auto& x : out) x /= std::sqrt(n2);
  return PureState(build_register({{label, spec.cutoff()}}), std::move(out), std::max(0.0, 1.0 - n2));
}

/// Labels of the pair modes in (1H, 1V, 2H, 2V) order; all share one cutoff.
struct PairModes {
  std::array<std::string, 4> labels{"1H", "1V", "2H", "2V"};
  int cutoff = 1;

  RegisterPtr make_register() const {
    return build_register({{labels[0], cutoff}, {labels[1], cutoff}, {labels[2], cutoff}, {labels[3], cutoff}});
  }
};

/// |Phi_n> = (n+1)^{-1/2} sum_m |m, n-m, n-m, m> in (1H, 1V, 2H, 2V); |Phi_1> is |chi>.
inline PureState phi_n(int n, const PairModes& modes = {}) {
  if (n < 0) throw ValidationError("pair order must be >= 0");
  if (n > modes.cutoff)
    throw TruncationError("pair order " + std::to_string(n) + " exceeds pair mode cutoff " +
                              std::to_string(modes.cutoff),
                          n);
  auto reg = modes.make_register();
  std::vector<cplx> a(reg->dimension(), 0.0);
  const double amp = 1.0 / std::sqrt(n + 1.0);
  for (int m = 0; m <= n; ++m) {
    const std::array<int, 4> occ{m, n - m, n - m, m};
    a[reg->index(occ)] = amp;
  }
  return PureState(std::move(reg), std::move(a));
}

/// (|H>_1|V>_2 + |V>_1|H>_2)/sqrt(2).
inline PureState bell_chi(const PairModes& modes = {}) {
  if (modes.cutoff < 1) throw ValidationError("Bell pair needs pair mode cutoff >= 1");
  return phi_n(1, modes);
}

enum class SpdcWeighting { paper, exact };

struct IdealChi {};
struct VacuumMixed {
  double z = 1.0;
};
struct Spdc {
  double lambda = 0.0;
  int order_max = 2;
  SpdcWeighting weighting = SpdcWeighting::paper;
};

using PairSourceSpec = std::variant<IdealChi, VacuumMixed, Spdc>;

inline void validate(const PairSourceSpec& spec) {
  if (const auto* v = std::get_if<VacuumMixed>(&spec)) {
    if (!(v->z > 0.0 && v->z <= 1.0)) throw ValidationError("vacuum-mixing weight z must be in (0, 1]");
  } else if (const auto* sp = std::get_if<Spdc>(&spec)) {
    if (!(sp->lambda >= 0.0 && sp->lambda < 1.0)) throw ValidationError("SPDC lambda must be in [0, 1)");
    if (sp->order_max < 0) throw ValidationError("SPDC order_max must be >= 0");
  }
}

/// Probability weight of |Phi_n> in the SPDC state.
inline double spdc_weight(int n, double lambda, SpdcWeighting weighting) {
  const double l2n = std::pow(lambda, 2 * n);
  const double g = 1.0 - lambda * lambda;
  return weighting == SpdcWeighting::paper ? g * l2n : g * g * (n + 1.0) * l2n;
}

/// Amplitude of |Phi_n> in the SPDC state (the square root of spdc_weight).
inline double spdc_amplitude(int n, double lambda, SpdcWeighting weighting) {
  const double ln = std::pow(lambda, n);
  const double g = 1.0 - lambda * lambda;
  return weighting == SpdcWeighting::paper ? std::sqrt(g) * ln : g * ln * std::sqrt(n + 1.0);
}

inline Ensemble pair_source(const PairSourceSpec& spec, const PairModes& modes = {}) {
  validate(spec);
  auto reg = modes.make_register();
  Ensemble out(reg);
  if (std::holds_alternative<IdealChi>(spec)) {
    out.add(1.0, bell_chi(modes));
  } else if (const auto* v = std::get_if<VacuumMixed>(&spec)) {
    out.add(v->z, bell_chi(modes));
    if (v->z < 1.0) out.add(1.0 - v->z, phi_n(0, modes));
  } else {
    const auto& sp = std::get<Spdc>(spec);
    if (sp.order_max > modes.cutoff)
      throw TruncationError("SPDC order_max exceeds pair mode cutoff", sp.order_max);
    std::vector<cplx> a(reg->dimension(), 0.0);
    for (int n = 0; n <= sp.order_max; ++n) {
      const auto phi = phi_n(n, modes);
      const double c = spdc_amplitude(n, sp.lambda, sp.weighting);
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += c * phi.amplitudes()[i];
    }
    PureState psi(reg, std::move(a));
    const double n2 = psi.norm_squared();
    // Higher orders are cut off; the kept part is renormalized and the loss recorded.
    auto kept = psi.normalized();
    out.add(1.0, PureState(reg, {kept.amplitudes().begin(), kept.amplitudes().end()},
                           std::max(0.0, 1.0 - n2)));
  }
  return out;
}

}  // namespace hybrid

#endif  // HYBRID_RESOURCE_STATES_HPP
