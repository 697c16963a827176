#ifndef HYBRID_ANALYTIC_ORACLES_HPP
#define HYBRID_ANALYTIC_ORACLES_HPP

// Closed-form success probabilities and fidelities of the ideal-cat scheme.
//
// The simulated scheme sends one diagonally polarized cat beam through the
// setup, so each herald pattern fires with half the probability of the
// single-mode expressions. p_success_ideal and p_tot_eta include that factor;
// the uncorrected expressions live in analytic::printed.

#include <cmath>
#include <string>

#include "hybrid/errors.hpp"
#include "hybrid/resource_states.hpp"

namespace hybrid::analytic {

/// Ratio between the simulated success probability and the single-mode expressions.
inline constexpr double convention_factor = 0.5;

enum class AmplitudeKind { alpha_i, alpha_f };

namespace detail {

inline void check_t(double t) {
  if (!(t > 0.0 && t <= 1.0)) throw ValidationError("transmissivity must be in (0, 1]");
}
inline void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("detector efficiency must be in [0, 1]");
}

// (alpha_i, r alpha_i^2) from either parameterization.
inline double alpha_initial(double alpha, double t, AmplitudeKind kind) {
  check_t(t);
  if (!(alpha >= 0.0)) throw ValidationError("amplitude must be >= 0");
  return kind == AmplitudeKind::alpha_i ? alpha : alpha / std::sqrt(t);
}

}  // namespace detail

/// N_phi = (2 + 2 e^{-2 alpha^2} cos phi)^{-1/2}; diverges for the odd cat at alpha -> 0.
inline double cat_normalization(double alpha, double phi) {
  ScsSpec spec{alpha, phi};
  validate(spec);
  return spec.normalization();
}

namespace printed {

/// N^2 (1-t) alpha_i^2 e^{-2(1-t) alpha_i^2}, or its alpha_f form.
inline double p_success_ideal(double alpha, double t, double phi, AmplitudeKind kind) {
  const double ai = detail::alpha_initial(alpha, t, kind);
  const double n = cat_normalization(ai, phi);
  if (kind == AmplitudeKind::alpha_i) {
    const double x = (1.0 - t) * ai * ai;
    return n * n * x * std::exp(-2.0 * x);
  }
  const double x = (1.0 / t - 1.0) * alpha * alpha;
  return n * n * x * std::exp(-2.0 * x);
}

/// 2 N^2 eta^2 (1/t-1) alpha_f^2 e^{-2 eta (1/t-1) alpha_f^2}.
inline double p_tot_eta(double alpha_f, double t, double eta, double phi) {
  detail::check_eta(eta);
  const double ai = detail::alpha_initial(alpha_f, t, AmplitudeKind::alpha_f);
  const double n = cat_normalization(ai, phi);
  const double x = (1.0 / t - 1.0) * alpha_f * alpha_f;
  return 2.0 * n * n * eta * eta * x * std::exp(-2.0 * eta * x);
}

}  // namespace printed

/// Success probability of one herald pattern with ideal resources and detectors.
inline double p_success_ideal(double alpha, double t, double phi, AmplitudeKind kind = AmplitudeKind::alpha_i) {
  return convention_factor * printed::p_success_ideal(alpha, t, phi, kind);
}

/// Total (both patterns) success probability with efficiency-eta PNR detectors.
inline double p_tot_eta(double alpha_f, double t, double eta, double phi) {
  return convention_factor * printed::p_tot_eta(alpha_f, t, eta, phi);
}

/// Transmissivity maximizing p_success_ideal at fixed alpha_i (valid for alpha_i^2 >= 1/2).
inline double optimal_t(double alpha_i) {
  if (!(alpha_i * alpha_i >= 0.5)) throw ValidationError("optimal t needs alpha_i^2 >= 1/2");
  return 1.0 - 1.0 / (2.0 * alpha_i * alpha_i);
}

/// 1/2 (1 + e^{-2(1-eta)(1/t-1) alpha_f^2}).
inline double fidelity_eta(double alpha_f, double t, double eta) {
  detail::check_t(t);
  detail::check_eta(eta);
  return 0.5 * (1.0 + std::exp(-2.0 * (1.0 - eta) * (1.0 / t - 1.0) * alpha_f * alpha_f));
}

/// Fidelity of the squeezed single photon S(s)|1> to the odd cat of amplitude alpha.
inline double scs_fidelity(double alpha, double s) {
  if (!(alpha > 0.0)) throw ValidationError("scs_fidelity needs alpha > 0");
  if (!(s >= 0.0)) throw ValidationError("squeezing must be >= 0");
  const double a2 = alpha * alpha;
  const double c = std::cosh(s);
  // 1 - e^{-2a^2} via expm1 keeps small-alpha accuracy.
  return 2.0 * a2 * std::exp(a2 * (std::tanh(s) - 1.0)) / (c * c * c * -std::expm1(-2.0 * a2));
}

/// Effective fidelity with the O(lambda^6) terms of the SPDC expansion dropped.
inline double f_eff_expansion(double p_vac, double p_chi, double p_phi2, double lambda, double f_chi) {
  if (p_vac < 0.0 || p_chi < 0.0 || p_phi2 < 0.0) throw ValidationError("probabilities must be >= 0");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ValidationError("lambda must be in [0, 1)");
  if (p_vac == 0.0 && p_chi == 0.0 && p_phi2 == 0.0) throw ValidationError("all probabilities are zero");
  if (lambda == 0.0) return p_vac > 0.0 ? 0.0 : (p_chi > 0.0 ? f_chi : 0.0);
  const double l2 = lambda * lambda;
  return p_chi / (p_vac / l2 + p_chi + l2 * p_phi2) * f_chi;
}

/// Effective fidelity (1 - lambda^2) lambda^2 P_chi F_chi / P_tot.
inline double f_eff_exact(double p_chi, double p_tot, double lambda, double f_chi) {
  if (!(p_tot > 0.0)) throw ValidationError("total probability must be > 0");
  const double l2 = lambda * lambda;
  return (1.0 - l2) * l2 * p_chi * f_chi / p_tot;
}

/// Negativity of the ideal hybrid state, sqrt(1 - e^{-4 alpha_f^2}).
inline double ideal_negativity(double alpha_f) {
  if (!(alpha_f >= 0.0)) throw ValidationError("alpha_f must be >= 0");
  return std::sqrt(-std::expm1(-4.0 * alpha_f * alpha_f));
}

}  // namespace hybrid::analytic

#endif  // HYBRID_ANALYTIC_ORACLES_HPP
