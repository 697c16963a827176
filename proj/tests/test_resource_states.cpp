#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hybrid/analytic_oracles.hpp"
#include "hybrid/resource_states.hpp"

using namespace hybrid;

TEST(Coherent, ZeroAmplitudeIsVacuum) {
  auto s = coherent(0.0, 5);
  EXPECT_EQ(s.amplitudes()[0], cplx(1.0));
  for (int n = 1; n <= 5; ++n) EXPECT_EQ(s.amplitudes()[n], cplx(0.0));
}

TEST(Coherent, VacuumAmplitudeAndTail) {
  auto s = coherent(1.0, 15);
  EXPECT_NEAR(s.amplitudes()[0].real(), 0.60653065971263342, 1e-12);
  EXPECT_LT(s.truncation_loss(), 1e-12);
  EXPECT_LT(coherent_tail_mass(1.0, 15), 1e-12);
}

TEST(Coherent, TooSmallCutoffThrowsWithRequiredCutoff) {
  try {
    coherent(3.0, 5);
    FAIL() << "expected TruncationError";
  } catch (const TruncationError& e) {
    EXPECT_GT(e.required_cutoff(), 5);
    EXPECT_LE(coherent_tail_mass(3.0, e.required_cutoff()), 1e-10);
  }
}

TEST(Coherent, CutoffSearchMeetsTolerance) {
  for (double a : {0.3, 1.0, 2.5}) {
    const int c = coherent_cutoff(a, 1e-12);
    EXPECT_LE(coherent_tail_mass(a, c), 1e-12);
    EXPECT_GT(coherent_tail_mass(a, c - 1), 1e-12);
  }
}

TEST(Scs, OddCatHasNoEvenComponents) {
  auto s = scs({1.0, std::numbers::pi}, 20);
  for (int n = 0; n <= 20; n += 2) EXPECT_EQ(s.amplitudes()[n], cplx(0.0)) << n;
  EXPECT_NEAR(s.norm(), 1.0, 1e-12);
}

TEST(Scs, EvenCatHasNoOddComponents) {
  auto s = scs({0.8, 0.0}, 20);
  for (int n = 1; n <= 20; n += 2) EXPECT_EQ(s.amplitudes()[n], cplx(0.0)) << n;
}

TEST(Scs, OddCatNormalization) {
  // (2 - 2 e^{-2})^{-1/2}
  EXPECT_NEAR(ScsSpec({1.0, std::numbers::pi}).normalization(), 0.7604333115894075, 1e-12);
  EXPECT_THROW(validate(ScsSpec{0.0, std::numbers::pi}), ValidationError);
  EXPECT_THROW(validate(ScsSpec{-1.0, 0.0}), ValidationError);
}

TEST(SqueezedPhoton, NoSqueezingIsSinglePhoton) {
  auto s = squeezed_single_photon({0.0, 7});
  EXPECT_NEAR(s.amplitudes()[1].real(), 1.0, 1e-15);
  for (std::size_t n = 0; n < s.dimension(); ++n)
    if (n != 1) EXPECT_EQ(s.amplitudes()[n], cplx(0.0));
}

TEST(SqueezedPhoton, HighOrderCoefficientIsSmall) {
  const auto c = squeezed_photon_coefficients(0.313, 7);
  EXPECT_LT(std::abs(c[7] / c[0]), 0.0005);
}

TEST(SqueezedPhoton, OverlapWithOddCatMatchesClosedForm) {
  for (auto [a, s] : {std::pair{0.7, 0.161}, std::pair{1.0, 0.313}}) {
    auto sq = squeezed_single_photon({s, 12});
    auto cat = scs({a, std::numbers::pi}, static_cast<int>(sq.dimension()) - 1);
    const double f = std::norm(inner(cat, sq));
    EXPECT_NEAR(f, analytic::scs_fidelity(a, s), 2e-6);
  }
  EXPECT_NEAR(analytic::scs_fidelity(0.7, 0.161), 0.9998, 5e-4);
}

TEST(BellChi, TwoEqualAmplitudes) {
  auto chi = bell_chi();
  EXPECT_NEAR(chi.norm(), 1.0, 1e-15);
  int nonzero = 0;
  for (auto a : chi.amplitudes())
    if (a != cplx(0.0)) {
      ++nonzero;
      EXPECT_NEAR(a.real(), 1.0 / std::sqrt(2.0), 1e-15);
    }
  EXPECT_EQ(nonzero, 2);
}

TEST(BellChi, ReducedFirstPhotonIsMaximallyMixed) {
  Ensemble e(PairModes{}.make_register());
  e.add(1.0, bell_chi());
  auto rho = partial_trace(e, {"1H", "1V"});
  EXPECT_NEAR(rho.element(std::vector<int>{1, 0}, std::vector<int>{1, 0}).real(), 0.5, 1e-15);
  EXPECT_NEAR(rho.element(std::vector<int>{0, 1}, std::vector<int>{0, 1}).real(), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(rho.element(std::vector<int>{1, 0}, std::vector<int>{0, 1})), 0.0, 1e-15);
}

TEST(PhiN, StructureAndCutoff) {
  PairModes m{{"1H", "1V", "2H", "2V"}, 2};
  auto p2 = phi_n(2, m);
  EXPECT_NEAR(p2.amplitude({1, 1, 1, 1}).real(), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(p2.amplitude({2, 0, 0, 2}).real(), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_THROW(phi_n(3, m), TruncationError);
}

TEST(PairSource, VacuumMixedFullWeightIsChi) {
  auto e = pair_source(VacuumMixed{1.0});
  ASSERT_EQ(e.size(), 1u);
  EXPECT_NEAR(std::abs(inner(e.branches()[0].state, bell_chi())), 1.0, 1e-15);
  EXPECT_THROW(pair_source(VacuumMixed{0.0}), ValidationError);
}

TEST(PairSource, SpdcAtZeroCouplingIsVacuum) {
  PairModes m{{"1H", "1V", "2H", "2V"}, 2};
  auto e = pair_source(Spdc{0.0, 2, SpdcWeighting::paper}, m);
  EXPECT_NEAR(std::norm(e.branches()[0].state.amplitude({0, 0, 0, 0})), 1.0, 1e-15);
}

TEST(PairSource, PaperWeightingRatioIsLambdaSquared) {
  const double l = 0.03;
  EXPECT_NEAR(spdc_weight(1, l, SpdcWeighting::paper) / spdc_weight(0, l, SpdcWeighting::paper), l * l, 1e-15);
  EXPECT_NEAR(spdc_weight(2, l, SpdcWeighting::paper) / spdc_weight(1, l, SpdcWeighting::paper), l * l, 1e-15);
  EXPECT_NEAR(spdc_weight(1, l, SpdcWeighting::exact) / spdc_weight(0, l, SpdcWeighting::exact), 2 * l * l, 1e-15);
  for (int n = 0; n < 4; ++n)
    EXPECT_NEAR(spdc_amplitude(n, l, SpdcWeighting::exact) * spdc_amplitude(n, l, SpdcWeighting::exact),
                spdc_weight(n, l, SpdcWeighting::exact), 1e-18);
}

TEST(PairSource, ExactWeightsSumToOne) {
  double s = 0.0;
  for (int n = 0; n < 200; ++n) s += spdc_weight(n, 0.4, SpdcWeighting::exact);
  EXPECT_NEAR(s, 1.0, 1e-12);
}
