#ifndef HYBRID_FIGURES_HPP
#define HYBRID_FIGURES_HPP

// Parameter grids of the published figures.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hybrid/pipeline.hpp"

namespace hybrid::figures {

struct Panel {
  std::string id;           // e.g. "4a"
  std::string description;  // human-readable caption summary
  SchemeConfig base;
  std::vector<SweepAxis> grid;
};

/// first, first+step, ..., last; values are rounded to 1e-9 so that grid points
/// print as their decimal literals.
inline std::vector<double> steps(double first, double last, double step) {
  std::vector<double> v;
  const auto n = static_cast<int>(std::floor((last - first) / step + 1e-9));
  for (int k = 0; k <= n; ++k) v.push_back(std::round((first + k * step) * 1e9) / 1e9);
  return v;
}

namespace detail {

inline SchemeConfig ideal_base() {
  SchemeConfig c;
  c.phi = std::numbers::pi;
  c.scs_source = IdealScs{};
  c.pair_source = IdealChi{};
  c.detectors = {DetectorKind::pnr, 1.0};
  return c;
}

// Squeezing values and the cat amplitudes they approximate.
struct SqueezedCase {
  double s;
  double alpha_i;
};
inline constexpr SqueezedCase small_cat{0.161, 0.7};
inline constexpr SqueezedCase large_cat{0.313, 1.0};

inline Panel fig2() {
  auto c = ideal_base();
  c.amplitude = {analytic::AmplitudeKind::alpha_f, 1.0};
  return {"2", "fidelity and total success probability vs t; alpha_f = 1, PNR eta in {0.7, 0.8, 0.9, 0.99}", c,
          {{"t", steps(0.80, 0.99, 0.01)}, {"eta", {0.7, 0.8, 0.9, 0.99}}}};
}

inline Panel fig3(char panel) {
  auto c = ideal_base();
  c.t = 0.99;
  c.amplitude = {analytic::AmplitudeKind::alpha_f, 1.0};
  const std::string what = panel == 'a' ? "fidelity" : "total success probability";
  return {std::string("3") + panel, what + " vs (alpha_f, eta); t = 0.99, PNR", c,
          {{"eta", steps(0.1, 1.0, 0.1)}, {"alpha_f", steps(0.1, 2.0, 0.1)}}};
}

inline Panel fig4(char panel) {
  const auto sc = (panel == 'a' || panel == 'b') ? small_cat : large_cat;
  auto c = ideal_base();
  c.amplitude = {analytic::AmplitudeKind::alpha_i, sc.alpha_i};
  c.scs_source = SqueezedScs{sc.s, 7};
  c.pair_source = VacuumMixed{0.5};
  const std::string what = (panel == 'a' || panel == 'c') ? "fidelity" : "total success probability";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s vs eta; squeezed photon s = %.3f (alpha_i = %.1f), z = 0.5, PNR", what.c_str(),
                sc.s, sc.alpha_i);
  return {std::string("4") + panel, buf, c, {{"t", {0.9, 0.99, 0.999}}, {"eta", steps(0.1, 1.0, 0.05)}}};
}

inline Panel fig5(char panel) {
  const auto sc = panel == 'a' ? small_cat : large_cat;
  auto c = ideal_base();
  c.t = 0.99;
  c.amplitude = {analytic::AmplitudeKind::alpha_i, sc.alpha_i};
  c.scs_source = SqueezedScs{sc.s, 7};
  c.pair_source = Spdc{0.0, 2, SpdcWeighting::paper};
  c.detectors = {DetectorKind::onoff, 0.5};
  char buf[160];
  std::snprintf(buf, sizeof buf, "effective fidelity vs lambda; squeezed photon s = %.3f (alpha_i = %.1f), on-off, t = 0.99",
                sc.s, sc.alpha_i);
  return {std::string("5") + panel, buf, c, {{"eta", {0.1, 0.3, 0.5, 0.7, 0.9}}, {"lambda", steps(0.002, 0.05, 0.002)}}};
}

}  // namespace detail

inline std::vector<char> panel_letters(int figure) {
  switch (figure) {
    case 2: return {};
    case 3: return {'a', 'b'};
    case 4: return {'a', 'b', 'c', 'd'};
    case 5: return {'a', 'b'};
    default: throw ValidationError("unknown figure " + std::to_string(figure) + " (expected 2, 3, 4 or 5)");
  }
}

/// Panels of `figure`; all of them when `panel` is empty.
inline std::vector<Panel> panels(int figure, std::optional<char> panel = std::nullopt) {
  const auto letters = panel_letters(figure);
  if (panel && figure == 2) throw ValidationError("figure 2 has no panels");
  if (panel && std::find(letters.begin(), letters.end(), *panel) == letters.end())
    throw ValidationError(std::string("figure ") + std::to_string(figure) + " has no panel '" + *panel + "'");
  std::vector<Panel> out;
  if (figure == 2) return {detail::fig2()};
  for (char l : letters) {
    if (panel && l != *panel) continue;
    if (figure == 3) out.push_back(detail::fig3(l));
    if (figure == 4) out.push_back(detail::fig4(l));
    if (figure == 5) out.push_back(detail::fig5(l));
  }
  return out;
}

}  // namespace hybrid::figures

#endif  // HYBRID_FIGURES_HPP
