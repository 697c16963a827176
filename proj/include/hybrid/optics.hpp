#ifndef HYBRID_OPTICS_HPP
#define HYBRID_OPTICS_HPP

// Linear-optical elements on truncated Fock modes.

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hybrid/fock_core.hpp"

namespace hybrid {

namespace detail {

inline double log_factorial(int n) { return std::lgamma(n + 1.0); }

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(log_factorial(n) - log_factorial(k) - log_factorial(n - k)));
}

inline cplx ipow(cplx x, int n) {
  cplx r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

}  // namespace detail

/// Two-mode mixer acting on creation operators:
///   a_i^dag -> u00 a_i'^dag + u10 a_j'^dag,   a_j^dag -> u01 a_i'^dag + u11 a_j'^dag.
struct BsParams {
  cplx u00, u01, u10, u11;

  /// Transmissivity form; light reflected out of mode i picks up a minus sign.
  static BsParams transmissivity(double t) {
    if (!(t > 0.0 && t <= 1.0)) throw ValidationError("transmissivity must be in (0, 1]");
    const double st = std::sqrt(t), sr = std::sqrt(1.0 - t);
    return {st, sr, -sr, st};
  }

  /// Angle/phase form: mixing angle xi in [0, pi/2] with phase phi.
  static BsParams angles(double xi, double phi) {
    if (!(xi >= 0.0 && xi <= std::numbers::pi / 2)) throw ValidationError("mixing angle must be in [0, pi/2]");
    const cplx mi(0.0, -1.0);
    const double c = std::cos(xi), s = std::sin(xi);
    return {c, mi * std::polar(1.0, phi) * s, mi * std::polar(1.0, -phi) * s, c};
  }

  /// Balanced splitter with xi = pi/4, phi = pi/2: a_i -> (a_i' - a_j')/sqrt2, a_j -> (a_i' + a_j')/sqrt2.
  static BsParams balanced() {
    const double h = 1.0 / std::numbers::sqrt2;
    return {h, h, -h, h};
  }

  /// Real rotation by theta, used for polarization: H -> cos H - sin V, V -> sin H + cos V.
  static BsParams rotation(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c, s, -s, c};
  }
};

/// Printed Fock-basis splitter coefficient for n photons in i and m in j:
/// p of the n stay in i, q of the m stay in j.
inline double bs_fock_coefficient(int n, int m, int p, int q, double t) {
  if (n < 0 || m < 0 || p < 0 || q < 0 || p > n || q > m)
    throw ValidationError("beam-splitter coefficient index out of range");
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("transmissivity must be in [0, 1]");
  const double r = 1.0 - t;
  const double mag2 = detail::binomial(n, p) * detail::binomial(m, q) * std::pow(t, p + q) *
                      std::pow(r, n + m - p - q);
  return std::sqrt(mag2) * (((n - p) % 2 == 0) ? 1.0 : -1.0);
}

/// Output Fock amplitudes {(k, l) -> amplitude} for |n>_i |m>_j through a
/// transmissivity-t splitter, built from a coefficient function with the
/// signature of bs_fock_coefficient. k = p + (m - q) photons leave in i, l = (n - p) + q in j.
template <class Coefficient>
std::map<std::pair<int, int>, double> bs_output_amplitudes(int n, int m, double t, Coefficient&& coef) {
  std::map<std::pair<int, int>, double> out;
  for (int p = 0; p <= n; ++p)
    for (int q = 0; q <= m; ++q) {
      const int k = p + (m - q), l = (n - p) + q;
      const double bose = 0.5 * (detail::log_factorial(k) + detail::log_factorial(l) -
                                 detail::log_factorial(p) - detail::log_factorial(n - p) -
                                 detail::log_factorial(q) - detail::log_factorial(m - q));
      out[{k, l}] += coef(n, m, p, q, t) * std::exp(bose);
    }
  return out;
}

inline std::map<std::pair<int, int>, double> bs_output_amplitudes(int n, int m, double t) {
  return bs_output_amplitudes(n, m, t, bs_fock_coefficient);
}

/// Two-mode block of the mixer on cutoffs (ci, cj); outputs above the cutoffs are dropped.
inline ModeOperator two_mode_operator(const BsParams& u, int ci, int cj) {
  const auto di = ci + 1, dj = cj + 1;
  Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(di * dj, di * dj);
  for (int n = 0; n <= ci; ++n)
    for (int m = 0; m <= cj; ++m)
      for (int p = 0; p <= n; ++p)
        for (int q = 0; q <= m; ++q) {
          // p of mode i's photons stay in i, q of mode j's photons move to i.
          const int k = p + q, l = (n - p) + (m - q);
          if (k > ci || l > cj) continue;
          const cplx c = detail::binomial(n, p) * detail::binomial(m, q) * detail::ipow(u.u00, p) *
                         detail::ipow(u.u10, n - p) * detail::ipow(u.u01, q) * detail::ipow(u.u11, m - q);
          if (c == cplx(0.0)) continue;
          const double bose = std::exp(0.5 * (detail::log_factorial(k) + detail::log_factorial(l) -
                                              detail::log_factorial(n) - detail::log_factorial(m)));
          mat(k * dj + l, n * dj + m) += c * bose;
        }
  return ModeOperator({ci, cj}, std::move(mat), Unitarity::truncated);
}

namespace detail {

inline PureState relabel(const PureState& s, const std::vector<std::pair<std::string, std::string>>& map) {
  if (map.empty()) return s;
  auto specs = s.reg().modes();
  for (const auto& [from, to] : map) specs[s.reg().position(from)].label = to;
  return PureState(build_register(std::move(specs)), {s.amplitudes().begin(), s.amplitudes().end()},
                   s.truncation_loss());
}

}  // namespace detail

/// Mixes modes i and j; the outputs may be relabeled (out_i replaces i, out_j replaces j).
/// Throws TruncationError when the mass pushed above the cutoffs exceeds max_loss.
inline PureState apply_beam_splitter(const PureState& state, const std::string& mode_i,
                                     const std::string& mode_j, const BsParams& params,
                                     const std::string& out_i = {}, const std::string& out_j = {},
                                     double max_loss = tolerance::truncation) {
  const auto& reg = state.reg();
  const int ci = reg.mode(reg.position(mode_i)).cutoff;
  const int cj = reg.mode(reg.position(mode_j)).cutoff;
  const auto op = two_mode_operator(params, ci, cj);
  const std::string targets[] = {mode_i, mode_j};
  auto out = apply(op, targets, state);
  const double loss = out.truncation_loss() - state.truncation_loss();
  if (loss > max_loss)
    throw TruncationError("beam splitter on (" + mode_i + ", " + mode_j + ") loses " +
                              detail::sci(loss) + " above the cutoffs",
                          ci + cj);
  std::vector<std::pair<std::string, std::string>> names;
  if (!out_i.empty() && out_i != mode_i) names.emplace_back(mode_i, out_i);
  if (!out_j.empty() && out_j != mode_j) names.emplace_back(mode_j, out_j);
  return detail::relabel(out, names);
}

/// Smallest cutoff accepted for a displacement of magnitude |alpha|.
inline int displacement_min_cutoff(double abs_alpha) {
  if (abs_alpha == 0.0) return 0;
  return static_cast<int>(std::ceil(abs_alpha * abs_alpha + 6.0 * abs_alpha + 4.0));
}

/// <m|D(alpha)|n> from the associated-Laguerre closed form, evaluated by
/// three-term recurrence in the lower index.
inline ModeOperator displacement_matrix(cplx alpha, int cutoff) {
  const double a = std::abs(alpha);
  if (cutoff < 0) throw ValidationError("negative cutoff");
  if (cutoff < displacement_min_cutoff(a))
    throw TruncationError("displacement by |alpha| = " + std::to_string(a) + " needs cutoff >= " +
                              std::to_string(displacement_min_cutoff(a)),
                          displacement_min_cutoff(a));
  const int d = cutoff + 1;
  Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(d, d);
  const double x = a * a;
  const double gauss = std::exp(-x / 2);
  for (int diff = 0; diff <= cutoff; ++diff) {
    // L_k^{(diff)}(x) for k = 0..cutoff-diff
    std::vector<double> lag(static_cast<std::size_t>(cutoff - diff) + 1);
    lag[0] = 1.0;
    if (lag.size() > 1) lag[1] = 1.0 + diff - x;
    for (std::size_t k = 2; k < lag.size(); ++k) {
      const double kk = static_cast<double>(k);
      lag[k] = ((2 * kk - 1 + diff - x) * lag[k - 1] - (kk - 1 + diff) * lag[k - 2]) / kk;
    }
    const cplx up = detail::ipow(alpha, diff);                // m >= n
    const cplx down = detail::ipow(-std::conj(alpha), diff);  // m < n
    for (int lo = 0; lo + diff <= cutoff; ++lo) {
      const int hi = lo + diff;
      const double scale = gauss * std::exp(0.5 * (detail::log_factorial(lo) - detail::log_factorial(hi)));
      mat(hi, lo) = scale * up * lag[lo];
      if (diff > 0) mat(lo, hi) = scale * down * lag[lo];
    }
  }
  return ModeOperator({cutoff}, std::move(mat), Unitarity::truncated);
}

/// Memoized displacement matrices keyed on (alpha, cutoff). Safe for concurrent use.
class DisplacementCache {
 public:
  std::shared_ptr<const ModeOperator> get(cplx alpha, int cutoff) {
    const auto key = std::make_tuple(alpha.real(), alpha.imag(), cutoff);
    {
      std::lock_guard lock(mu_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    auto op = std::make_shared<const ModeOperator>(displacement_matrix(alpha, cutoff));
    std::lock_guard lock(mu_);
    return memo_.emplace(key, std::move(op)).first->second;
  }

  static DisplacementCache& global() {
    static DisplacementCache cache;
    return cache;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<double, double, int>, std::shared_ptr<const ModeOperator>> memo_;
};

struct DisplacementSpec {
  cplx alpha;
  std::string mode;
};

inline PureState apply_displacement(const PureState& state, const DisplacementSpec& spec) {
  if (spec.alpha == cplx(0.0)) return state;
  const int cutoff = state.reg().mode(state.reg().position(spec.mode)).cutoff;
  const auto op = DisplacementCache::global().get(spec.alpha, cutoff);
  const std::string targets[] = {spec.mode};
  return apply(*op, targets, state);
}

/// Splits spatial mode `spatial` into its H and V detector channels. The
/// channels already exist as modes `<spatial>H` and `<spatial>V`, so this is a
/// pure bookkeeping step: amplitudes are untouched.
inline PureState pbs_route(const PureState& state, const std::string& spatial) {
  const auto& reg = state.reg();
  if (!reg.contains(spatial + "H") || !reg.contains(spatial + "V"))
    throw ValidationError("mode '" + spatial + "' lacks an H/V channel pair");
  for (const auto& r : reg.routed())
    if (r == spatial) throw ValidationError("mode '" + spatial + "' is already routed");
  auto routed = std::make_shared<const Register>(reg.with_routed(spatial));
  return PureState(routed, {state.amplitudes().begin(), state.amplitudes().end()}, state.truncation_loss());
}

/// Rotates the polarization basis of (mode_h, mode_v) by `angle`; +pi/4 maps diagonal onto H.
inline PureState polarization_rotation(const PureState& state, const std::string& mode_h,
                                       const std::string& mode_v, double angle,
                                       double max_loss = tolerance::truncation) {
  if (angle == 0.0) return state;
  return apply_beam_splitter(state, mode_h, mode_v, BsParams::rotation(angle), {}, {}, max_loss);
}

}  // namespace hybrid

#endif  // HYBRID_OPTICS_HPP
