#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hybrid/pipeline.hpp"
#include "hybrid/selfcheck.hpp"

using namespace hybrid;

namespace {

constexpr double pi = std::numbers::pi;

SchemeConfig ideal(double alpha_i, double t, double eta = 1.0) {
  SchemeConfig c;
  c.amplitude = {analytic::AmplitudeKind::alpha_i, alpha_i};
  c.t = t;
  c.detectors = {DetectorKind::pnr, eta};
  return c;
}

SchemeConfig squeezed(double s, double alpha_i, double eta, PairSourceSpec pair, DetectorKind kind) {
  SchemeConfig c = ideal(alpha_i, 0.99, eta);
  c.scs_source = SqueezedScs{s, 7};
  c.pair_source = pair;
  c.detectors.kind = kind;
  return c;
}

// Truncated coherent amplitude, no renormalization.
cplx coh(cplx a, int n) {
  return std::exp(-std::norm(a) / 2) * std::pow(a, n) / std::sqrt(std::tgamma(n + 1.0));
}

// The ideal pre-measurement state written out term by term: for each cat
// branch s = +-1 the reflected light and the displacement leave port 6
// (s = +1) or port 5 (s = -1) in a coherent state of amplitude sqrt(2) g per
// polarization; the pair photon in 2H or 2V becomes (a6^+ + a5^+)/sqrt(2) - g
// acting on it (a displaced Fock state after the balanced splitter).
PureState direct_prestate(const SchemeConfig& c, RegisterPtr reg) {
  const double g = std::sqrt(1.0 - c.t) * c.alpha_i() / std::numbers::sqrt2;
  const double af = c.alpha_f();
  const auto& R = *reg;
  std::vector<cplx> amp(R.dimension(), 0.0);
  const auto pos = [&](const char* l) { return R.position(l); };
  const std::size_t ah = pos("A_H"), av = pos("A_V"), p5h = pos("5H"), p5v = pos("5V"), p6h = pos("6H"),
                    p6v = pos("6V"), bh = pos("B_H");
  for (int sign : {+1, -1}) {
    const cplx branch = sign > 0 ? cplx(1.0) : std::polar(1.0, c.phi);
    const double g6 = sign > 0 ? std::numbers::sqrt2 * g : 0.0;
    const double g5 = sign > 0 ? 0.0 : std::numbers::sqrt2 * g;
    for (bool photon_h : {true, false}) {  // which polarization of mode 2 carries the pair photon
      for (std::size_t i = 0; i < R.dimension(); ++i) {
        const auto o = R.occupations(i);
        if (o[ah] + o[av] != 1 || (o[ah] == 1) != !photon_h) continue;
        const std::size_t q5 = photon_h ? p5h : p5v, q6 = photon_h ? p6h : p6v;
        const std::size_t r5 = photon_h ? p5v : p5h, r6 = photon_h ? p6v : p6h;
        // spectator polarization: plain coherent states
        cplx v = coh(g5, o[r5]) * coh(g6, o[r6]) * coh(sign * af, o[bh]);
        // photon polarization: ((a6^+ + a5^+)/sqrt2 - g) |g5>|g6>
        const int n5 = o[q5], n6 = o[q6];
        cplx w = -g * coh(g5, n5) * coh(g6, n6);
        if (n6 > 0) w += std::sqrt(double(n6)) * coh(g6, n6 - 1) * coh(g5, n5) / std::numbers::sqrt2;
        if (n5 > 0) w += std::sqrt(double(n5)) * coh(g5, n5 - 1) * coh(g6, n6) / std::numbers::sqrt2;
        amp[i] += branch * v * w / std::numbers::sqrt2;
      }
    }
  }
  double n2 = 0.0;
  for (auto x : amp) n2 += std::norm(x);
  for (auto& x : amp) x /= std::sqrt(n2);
  return PureState(reg, std::move(amp));
}

}  // namespace

TEST(Prestate, MatchesDirectConstruction) {
  for (auto [a, t, phi] : {std::tuple{1.0, 0.9, pi}, std::tuple{0.7, 0.75, pi}, std::tuple{1.2, 0.95, 0.0}}) {
    auto c = ideal(a, t);
    c.phi = phi;
    const auto pre = build_prestate(c);
    ASSERT_EQ(pre.size(), 1u);
    const auto& psi = pre.branches()[0].state;
    EXPECT_EQ(psi.reg().labels(), (std::vector<std::string>{"A_H", "A_V", "5H", "5V", "6H", "6V", "B_H", "B_V"}));
    const auto direct = direct_prestate(c, psi.register_ptr());
    EXPECT_NEAR(std::abs(inner(direct, psi)) / psi.norm(), 1.0, 1e-10) << a << " " << t;
  }
}

TEST(Prestate, MeanPhotonNumberInOutputBeam) {
  // Odd cat: <n> = alpha^2 coth(alpha^2); the splitter passes a fraction t.
  const double a = 1.0, t = 0.8;
  const auto psi = build_prestate(ideal(a, t)).branches()[0].state;
  const auto pb = psi.reg().position("B_H");
  double mean = 0.0;
  for (std::size_t i = 0; i < psi.dimension(); ++i) mean += psi.reg().occupation(i, pb) * std::norm(psi.amplitudes()[i]);
  EXPECT_NEAR(mean, t * a * a / std::tanh(a * a), 1e-9);
}

TEST(Prestate, VacuumPairNeverHeralds) {
  auto c = ideal(1.0, 0.9);
  c.pair_source = VacuumMixed{0.5};
  c.cutoffs.detector = 14;
  c.cutoffs.source = 30;
  const auto pre = build_prestate(c);
  ASSERT_EQ(pre.size(), 2u);
  const auto& vac = pre.branches()[1].state;
  EXPECT_LT(herald_probability(vac, build_scheme_herald(DetectorKind::pnr, 1.0, false, vac.reg())), 1e-24);
}

TEST(RunScheme, IdealResourcesGiveTheTarget) {
  for (double a : {0.7, 1.0})
    for (double t : {0.75, 0.9, 0.99}) {
      const auto r = run_scheme(ideal(a, t));
      EXPECT_GE(r.fidelity, 1.0 - 1e-8) << a << " " << t;
      EXPECT_NEAR(r.post_state.trace(), 1.0, 1e-12);
      EXPECT_LE(r.post_state.hermiticity_defect(), 1e-12);
      EXPECT_NEAR(r.negativity, analytic::ideal_negativity(a * std::sqrt(t)), 1e-7);
    }
}

TEST(RunScheme, ProbabilityIsHalfTheSingleModeExpression) {
  for (double a : {0.7, 1.0})
    for (double t : {0.75, 0.9, 0.99}) {
      const auto r = run_scheme(ideal(a, t));
      ASSERT_TRUE(r.diagnostics.oracle);
      EXPECT_NEAR(r.diagnostics.oracle->ratio_to_printed, analytic::convention_factor, 1e-8);
      EXPECT_NEAR(r.probability_total / r.diagnostics.oracle->analytic_probability, 1.0, 1e-8);
    }
}

TEST(RunScheme, DetectorLossFidelityMatchesClosedForm) {
  for (double eta : {0.7, 0.9})
    for (double t : {0.9, 0.99})
      for (double af : {0.7, 1.0}) {
        auto c = ideal(0.0, t, eta);
        c.amplitude = {analytic::AmplitudeKind::alpha_f, af};
        EXPECT_NEAR(run_scheme(c).fidelity, analytic::fidelity_eta(af, t, eta), 1e-8);
      }
  auto c = ideal(0.0, 0.99, 0.7);
  c.amplitude = {analytic::AmplitudeKind::alpha_f, 1.0};
  EXPECT_NEAR(run_scheme(c).fidelity, 0.996979, 1e-6);
}

TEST(RunScheme, HeraldPatternsAreSymmetric) { EXPECT_TRUE(selfcheck::herald_symmetry().pass); }

TEST(RunScheme, BothHeraldPatternsGiveTheSamePostState) {
  const std::string keep[] = {"A_H", "A_V", "B_H"};
  for (double a : {0.7, 1.0})
    for (double t : {0.75, 0.9, 0.99}) {
      const auto pre = build_prestate(ideal(a, t));
      std::vector<DensityOperator> post;
      for (bool flipped : {false, true}) {
        auto r = partial_trace(herald(pre, build_scheme_herald(DetectorKind::pnr, 1.0, flipped, pre.reg())).post, keep);
        post.push_back(flipped ? bit_flip(r) : r);
      }
      EXPECT_LT((post[0].matrix() - post[1].matrix()).cwiseAbs().maxCoeff(), 1e-9) << a << " " << t;
      EXPECT_GE(fidelity(post[0], target_hybrid(a * std::sqrt(t), pi, post[0].register_ptr())), 1.0 - 1e-8);
    }
}

TEST(RunScheme, SqueezedCatNegativity) {
  const auto a = run_scheme(squeezed(0.161, 0.7, 0.7, VacuumMixed{0.5}, DetectorKind::pnr));
  const auto b = run_scheme(squeezed(0.313, 1.0, 0.7, VacuumMixed{0.5}, DetectorKind::pnr));
  EXPECT_NEAR(a.negativity, 0.922, 5e-3);
  EXPECT_NEAR(b.negativity, 0.982, 5e-3);
  EXPECT_GT(a.diagnostics.source_model_loss, 0.0);
  EXPECT_LT(a.diagnostics.tail_mass, tail_mass_limit);
}

TEST(RunScheme, SqueezedCatThresholds) {
  for (auto [s, a, bound] : {std::tuple{0.161, 0.7, 0.996}, std::tuple{0.313, 1.0, 0.986}})
    for (double t : {0.99, 0.999})
      for (double eta : {0.4, 0.7, 1.0}) {
        auto c = squeezed(s, a, eta, VacuumMixed{0.5}, DetectorKind::pnr);
        c.t = t;
        const auto r = run_scheme(c);
        EXPECT_GT(r.fidelity, bound) << s << " " << t << " " << eta;
        if (t == 0.99) {
          EXPECT_GE(r.probability_total, 5e-5);
          EXPECT_LE(r.probability_total, 5e-3);
        }
      }
}

TEST(RunScheme, VacuumFilteringAndZScaling) {
  for (const auto& c : selfcheck::vacuum_filtering()) EXPECT_TRUE(c.pass) << c.name << " " << c.actual;
  EXPECT_TRUE(selfcheck::z_scaling().pass);
}

TEST(SpdcDecomposition, ComponentsAndEffectiveFidelity) {
  const auto c = squeezed(0.161, 0.7, 0.5, Spdc{0.022, 2, SpdcWeighting::paper}, DetectorKind::onoff);
  const auto r = run_scheme(c);
  ASSERT_TRUE(r.diagnostics.spdc);
  const auto& d = *r.diagnostics.spdc;
  const double l2 = 0.022 * 0.022;
  EXPECT_NEAR(d.p_tot, (1 - l2) * (d.p_vac + l2 * d.p_chi + l2 * l2 * d.p_phi2), 1e-18);
  EXPECT_NEAR(d.f_eff, analytic::f_eff_expansion(d.p_vac, d.p_chi, d.p_phi2, 0.022, d.f_chi), 1e-15);
  EXPECT_NEAR(d.f_eff_exact, (1 - l2) * l2 * d.p_chi * d.f_chi / d.p_tot, 1e-12);
  EXPECT_GT(d.p_vac, 0.0);  // squeezed photons and on-off detectors let vacuum through
  EXPECT_LT(d.f_eff, d.f_chi);
  // Published total probability: 5.1e-7 within 20%.
  EXPECT_NEAR(r.probability_total / 5.1e-7, 1.0, 0.2);
}

TEST(SpdcDecomposition, LambdaScalingOfTheCoherentSuperposition) { EXPECT_TRUE(selfcheck::spdc_lambda_scaling().pass); }

TEST(SpdcDecomposition, RequiresSecondOrder) {
  auto c = squeezed(0.161, 0.7, 0.5, Spdc{0.02, 1, SpdcWeighting::paper}, DetectorKind::onoff);
  EXPECT_THROW(spdc_decomposition(c), ValidationError);
  EXPECT_THROW(spdc_decomposition(ideal(1.0, 0.9)), ValidationError);
}

TEST(Validation, RejectsBadConfigurations) {
  EXPECT_THROW(run_scheme(ideal(1.0, 1.5)), ValidationError);
  EXPECT_THROW(run_scheme(ideal(1.0, 0.9, 1.2)), ValidationError);
  auto c = squeezed(0.161, 0.7, 0.5, VacuumMixed{0.5}, DetectorKind::pnr);
  c.phi = 0.0;
  EXPECT_THROW(validate(c), ValidationError);
  c.phi = pi;
  c.cutoffs.source = 20;
  EXPECT_THROW(validate(c), ValidationError);
}

TEST(Cutoffs, ForcedTruncationFailure) {
  auto c = ideal(3.0, 0.9);
  c.cutoffs.b = 5;
  EXPECT_THROW(run_scheme(c), TruncationError);
  auto d = ideal(1.0, 0.9);
  d.cutoffs.detector = 2;
  EXPECT_THROW(resolve_cutoffs(d), TruncationError);
}

TEST(Cutoffs, PolicyMeetsTailTarget) {
  const auto k = resolve_cutoffs(ideal(1.5, 0.9));
  EXPECT_LE(coherent_tail_mass(1.5 * std::sqrt(0.9), k.b), cutoff_tail_target);
  EXPECT_LE(coherent_tail_mass(1.5, k.source), cutoff_tail_target);
  EXPECT_EQ(k.a, 1);
  auto s = squeezed(0.313, 1.0, 0.5, Spdc{0.03, 2, SpdcWeighting::paper}, DetectorKind::onoff);
  const auto ks = resolve_cutoffs(s);
  EXPECT_EQ(ks.a, 2);
  EXPECT_EQ(ks.source, 15);
  EXPECT_GE(ks.b, 15);
}

TEST(Sweep, GridSizeOrderAndThreads) {
  const std::vector<SweepAxis> grid{{"eta", {0.9, 0.5, 0.7}}, {"t", {0.9, 0.95}}};
  const auto one = sweep(ideal(1.0, 0.9), grid, 1);
  const auto many = sweep(ideal(1.0, 0.9), grid, 4);
  ASSERT_EQ(one.rows.size(), 6u);
  EXPECT_EQ(one.params, (std::vector<std::string>{"t", "eta"}));
  EXPECT_EQ(one.rows[0].params, (std::vector<double>{0.9, 0.5}));
  EXPECT_EQ(one.rows[1].params, (std::vector<double>{0.9, 0.7}));
  EXPECT_EQ(one.rows[3].params, (std::vector<double>{0.95, 0.5}));
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    EXPECT_EQ(one.rows[i].fidelity, many.rows[i].fidelity);
    EXPECT_EQ(one.rows[i].probability_total, many.rows[i].probability_total);
  }
}

TEST(Sweep, SharedPrestateGivesSameNumbersAsSingleRuns) {
  const auto table = sweep(ideal(1.0, 0.9), {{"eta", {0.6, 0.8}}}, 1);
  for (const auto& row : table.rows) {
    const auto r = run_scheme(ideal(1.0, 0.9, row.params[0]));
    EXPECT_EQ(row.fidelity, r.fidelity);
    EXPECT_EQ(row.probability_total, r.probability_total);
  }
}

TEST(Sweep, InvalidPointsAreMarked) {
  const auto table = sweep(ideal(1.0, 0.9), {{"t", {0.9, 1.5}}}, 2);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_TRUE(table.rows[0].ok());
  EXPECT_FALSE(table.rows[1].ok());
  EXPECT_EQ(table.failures(), 1u);
  EXPECT_TRUE(std::isnan(table.rows[1].fidelity));
}

TEST(Sweep, RejectsIncompatibleAxes) {
  EXPECT_THROW(sweep(ideal(1.0, 0.9), {{"lambda", {0.01}}}), ValidationError);
  EXPECT_THROW(sweep(ideal(1.0, 0.9), {{"q", {0.01}}}), ValidationError);
  EXPECT_THROW(sweep(ideal(1.0, 0.9), {}), ValidationError);
}
