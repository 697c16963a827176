#ifndef HYBRID_DETECTION_HPP
#define HYBRID_DETECTION_HPP

// Fock-diagonal detector POVMs and exact heralding.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hybrid/fock_core.hpp"
#include "hybrid/optics.hpp"

namespace hybrid {

struct PovmElement {
  std::string label;            // what the element reports, e.g. "n=1" or "click"
  std::vector<double> weights;  // d_k for k = 0..cutoff

  int cutoff() const { return static_cast<int>(weights.size()) - 1; }
};

namespace detail {
inline void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("detector efficiency must be in [0, 1]");
}
}  // namespace detail

/// Inefficient photon-number-resolving detector reporting n photons.
inline PovmElement povm_pnr(int n, double eta, int cutoff) {
  detail::check_eta(eta);
  if (n < 0 || n > cutoff) throw ValidationError("photon number outside detector range");
  PovmElement e{"n=" + std::to_string(n), std::vector<double>(static_cast<std::size_t>(cutoff) + 1, 0.0)};
  for (int k = n; k <= cutoff; ++k)
    e.weights[k] = detail::binomial(k, n) * std::pow(eta, n) * std::pow(1.0 - eta, k - n);
  return e;
}

/// On-off detector: probability of at least one registered photon.
inline PovmElement povm_click(double eta, int cutoff) {
  detail::check_eta(eta);
  if (cutoff < 0) throw ValidationError("negative cutoff");
  PovmElement e{"click", std::vector<double>(static_cast<std::size_t>(cutoff) + 1, 0.0)};
  for (int m = 0; m <= cutoff; ++m) e.weights[m] = 1.0 - std::pow(1.0 - eta, m);
  return e;
}

/// On-off detector that stays dark; complement of povm_click.
inline PovmElement povm_no_click(double eta, int cutoff) {
  auto e = povm_click(eta, cutoff);
  for (auto& w : e.weights) w = 1.0 - w;
  e.label = "no-click";
  return e;
}

enum class DetectorKind { pnr, onoff };

struct HeraldSpec {
  std::vector<std::pair<std::string, PovmElement>> outcomes;
};

/// Measured channels: 5H, 5V, 6H, 6V. Unflipped fires on (5V, 6H), flipped on (5H, 6V).
inline HeraldSpec build_scheme_herald(DetectorKind kind, double eta, bool flipped, const Register& reg) {
  detail::check_eta(eta);
  const char* channels[] = {"5H", "5V", "6H", "6V"};
  const bool fire_unflipped[] = {false, true, true, false};
  HeraldSpec spec;
  for (int c = 0; c < 4; ++c) {
    if (!reg.contains(channels[c]))
      throw ValidationError(std::string("herald needs detector channel ") + channels[c]);
    const int cutoff = reg.mode(reg.position(channels[c])).cutoff;
    const bool fire = fire_unflipped[c] != flipped;
    PovmElement e = kind == DetectorKind::pnr
                        ? povm_pnr(fire ? 1 : 0, eta, cutoff)
                        : (fire ? povm_click(eta, cutoff) : povm_no_click(eta, cutoff));
    spec.outcomes.emplace_back(channels[c], std::move(e));
  }
  return spec;
}

struct HeraldResult {
  double probability = 0.0;
  DensityOperator unnormalized;           // Tr_measured[Pi rho]
  DensityOperator post;                   // unnormalized / probability
  std::vector<double> branch_probabilities;  // w_i <psi_i|Pi|psi_i>
};

/// Outcome probability of `spec` on one pure branch.
inline double herald_probability(const PureState& psi, const HeraldSpec& spec) {
  const auto& reg = psi.reg();
  std::vector<std::size_t> pos;
  std::vector<const std::vector<double>*> w;
  for (const auto& [mode, el] : spec.outcomes) {
    pos.push_back(reg.position(mode));
    w.push_back(&el.weights);
  }
  double p = 0.0;
  const auto a = psi.amplitudes();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == cplx(0.0)) continue;
    double f = 1.0;
    for (std::size_t k = 0; k < pos.size() && f != 0.0; ++k) f *= (*w[k])[reg.occupation(i, pos[k])];
    p += f * std::norm(a[i]);
  }
  return p;
}

/// Exact post-selection: weights the measured modes by their POVM diagonals and
/// traces them out. Throws HeraldingImpossible below probability 1e-300.
inline HeraldResult herald(const Ensemble& source, const HeraldSpec& spec) {
  const auto& reg = source.reg();
  std::vector<std::string> measured;
  std::vector<TracedWeights> weights;
  for (const auto& [mode, el] : spec.outcomes) {
    const auto p = reg.position(mode);
    if (el.cutoff() != reg.mode(p).cutoff)
      throw ValidationError("POVM on '" + mode + "' does not match the mode cutoff");
    for (double d : el.weights)
      if (!(d >= 0.0 && d <= 1.0)) throw ValidationError("POVM weights must lie in [0, 1]");
    for (const auto& m : measured)
      if (m == mode) throw ValidationError("mode '" + mode + "' measured twice");
    measured.push_back(mode);
    weights.push_back({mode, el.weights});
  }
  std::vector<std::string> keep;
  for (const auto& m : reg.modes())
    if (std::find(measured.begin(), measured.end(), m.label) == measured.end()) keep.push_back(m.label);

  std::vector<double> branch;
  for (const auto& b : source.branches()) branch.push_back(b.weight * herald_probability(b.state, spec));

  auto rho = weighted_partial_trace(source, keep, weights);
  const double p = rho.trace();
  if (!(p >= 1e-300)) throw HeraldingImpossible("herald outcome has zero probability");
  DensityOperator post(rho.register_ptr(), rho.matrix() / p);
  return {p, std::move(rho), std::move(post), std::move(branch)};
}

/// Swaps the two polarization modes of qubit A (a bit flip in the H/V basis).
inline DensityOperator bit_flip(const DensityOperator& rho, const std::string& a_h = "A_H",
                                const std::string& a_v = "A_V") {
  const auto& reg = rho.reg();
  const int c = reg.mode(reg.position(a_h)).cutoff;
  if (reg.mode(reg.position(a_v)).cutoff != c)
    throw ValidationError("bit flip needs equal cutoffs on both polarization modes");
  const std::string targets[] = {a_h, a_v};
  return apply(swap_operator(c), targets, rho);
}

}  // namespace hybrid

#endif  // HYBRID_DETECTION_HPP
