#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hybrid/fock_core.hpp"
#include "hybrid/optics.hpp"
#include "hybrid/resource_states.hpp"

using namespace hybrid;

namespace {

PureState ket(RegisterPtr reg, std::vector<std::pair<std::vector<int>, cplx>> terms) {
  std::vector<cplx> a(reg->dimension(), 0.0);
  for (const auto& [occ, v] : terms) a[reg->index(occ)] += v;
  return PureState(std::move(reg), std::move(a));
}

}  // namespace

TEST(Register, DimensionIsProductOfModeDimensions) {
  auto reg = build_register({{"A_H", 2}, {"A_V", 2}});
  EXPECT_EQ(reg->dimension(), 9u);
}

TEST(Register, RejectsEmptyDuplicateAndNegative) {
  EXPECT_THROW(build_register({}), ValidationError);
  EXPECT_THROW(build_register({{"x", 1}, {"x", 1}}), ValidationError);
  EXPECT_THROW(build_register({{"x", -1}}), ValidationError);
}

TEST(Register, IndexRoundTripWithLastModeFastest) {
  auto reg = build_register({{"a", 2}, {"b", 3}, {"c", 1}});
  EXPECT_EQ(reg->index(std::vector<int>{0, 0, 1}), 1u);
  EXPECT_EQ(reg->index(std::vector<int>{0, 1, 0}), 2u);
  for (std::size_t i = 0; i < reg->dimension(); ++i) EXPECT_EQ(reg->index(reg->occupations(i)), i);
  EXPECT_THROW(reg->position("zz"), ValidationError);
}

TEST(BasisState, VacuumAndSinglePhoton) {
  auto reg = build_register({{"a", 2}, {"b", 2}});
  auto vac = vacuum_state(reg);
  EXPECT_DOUBLE_EQ(vac.norm(), 1.0);
  EXPECT_EQ(vac.amplitude({0, 0}), cplx(1.0));
  auto one = basis_state(reg, {1, 0});
  EXPECT_EQ(one.amplitude({1, 0}), cplx(1.0));
  EXPECT_DOUBLE_EQ(one.norm_squared(), 1.0);
  EXPECT_THROW(basis_state(reg, {3, 0}), ValidationError);
}

TEST(PureState, RejectsNormAboveOne) {
  auto reg = build_register({{"a", 1}});
  EXPECT_THROW(PureState(reg, {1.0, 1.0}), ValidationError);
  EXPECT_THROW(PureState(reg, {1.0}), ValidationError);
}

TEST(Tensor, ProductOfBasisStates) {
  auto a = basis_state(build_register({{"x", 1}}), {1});
  auto b = basis_state(build_register({{"y", 1}}), {0});
  auto ab = tensor(a, b);
  EXPECT_EQ(ab.reg().labels(), (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(ab.amplitude({1, 0}), cplx(1.0));
}

TEST(Tensor, NormIsMultiplicative) {
  auto a = PureState(build_register({{"x", 1}}), {0.6, 0.0});
  auto b = PureState(build_register({{"y", 2}}), {0.0, 0.5, cplx(0.0, 0.5)});
  EXPECT_NEAR(tensor(a, b).norm(), a.norm() * b.norm(), 1e-15);
  EXPECT_THROW(tensor(a, a), ValidationError);
}

TEST(Tensor, PairTimesCatIsNormalizedFiveModeState) {
  auto joint = tensor(bell_chi(), scs({1.0, std::numbers::pi}, 15, "3"));
  EXPECT_EQ(joint.reg().size(), 5u);
  EXPECT_NEAR(joint.norm(), 1.0, 1e-12);
}

TEST(Inner, NormalizedOrthogonalAndCoherentOverlap) {
  auto reg = build_register({{"a", 2}});
  EXPECT_EQ(inner(basis_state(reg, {0}), basis_state(reg, {1})), cplx(0.0));
  auto p = coherent(1.0, 25), m = coherent(-1.0, 25);
  EXPECT_NEAR(std::abs(inner(p, p)), 1.0, 1e-12);
  // <alpha|-alpha> = e^{-2 alpha^2}
  EXPECT_NEAR(inner(p, m).real(), 0.13533528323661270, 1e-12);
}

TEST(TruncateMode, RecordsDiscardedMass) {
  auto reg = build_register({{"a", 2}});
  auto s = PureState(reg, {std::sqrt(0.5), std::sqrt(0.3), std::sqrt(0.2)});
  auto t = truncate_mode(s, "a", 1);
  EXPECT_EQ(t.reg().mode(0).cutoff, 1);
  EXPECT_NEAR(t.truncation_loss(), 0.2, 1e-15);
  EXPECT_NEAR(t.norm_squared(), 0.8, 1e-15);
  EXPECT_THROW(truncate_mode(s, "a", 3), ValidationError);
}

TEST(ExtendMode, PreservesAmplitudes) {
  auto s = basis_state(build_register({{"a", 1}, {"b", 1}}), {1, 1});
  auto e = extend_mode(s, "a", 4);
  EXPECT_EQ(e.reg().mode(0).cutoff, 4);
  EXPECT_EQ(e.amplitude({1, 1}), cplx(1.0));
  EXPECT_THROW(extend_mode(e, "a", 2), ValidationError);
}

TEST(Apply, IdentityLeavesStateBitIdentical) {
  auto s = tensor(coherent(0.7, 10, "a"), coherent(cplx(0.2, -0.4), 8, "b"));
  auto out = apply(identity_operator({10}), {"a"}, s);
  ASSERT_EQ(out.dimension(), s.dimension());
  for (std::size_t i = 0; i < s.dimension(); ++i) EXPECT_EQ(out.amplitudes()[i], s.amplitudes()[i]);
}

TEST(Apply, SwapExchangesModes) {
  auto s = basis_state(build_register({{"a", 2}, {"b", 2}}), {2, 0});
  auto out = apply(swap_operator(2), {"a", "b"}, s);
  EXPECT_EQ(out.amplitude({0, 2}), cplx(1.0));
}

TEST(Apply, TruncatedUnitaryTracksLostMass) {
  // A two-photon state pushed through a splitter whose output cutoffs are too small.
  auto narrow = basis_state(build_register({{"a", 1}, {"b", 1}}), {1, 1});
  EXPECT_DOUBLE_EQ(narrow.truncation_loss(), 0.0);
  auto out = apply(two_mode_operator(BsParams::balanced(), 1, 1), {"a", "b"}, narrow);
  const double lost = narrow.norm_squared() - out.norm_squared();
  EXPECT_GT(lost, 1e-10);
  EXPECT_NEAR(out.truncation_loss(), lost, 1e-15);
}

TEST(ModeOperator, ExactFlagRejectsNonUnitary) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(2, 2) * 2.0;
  EXPECT_THROW(ModeOperator({1}, m, Unitarity::exact), ValidationError);
  EXPECT_NO_THROW(ModeOperator({1}, m, Unitarity::none));
}

TEST(PartialTrace, BellPairReducesToMaximallyMixed) {
  auto reg = build_register({{"a", 1}, {"b", 1}});
  const double h = 1.0 / std::sqrt(2.0);
  auto psi = ket(reg, {{{1, 0}, h}, {{0, 1}, h}});
  Ensemble e(reg);
  e.add(1.0, psi);
  auto rho = partial_trace(e, {"a"});
  EXPECT_NEAR(rho.matrix()(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(rho.matrix()(1, 1).real(), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(rho.matrix()(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(rho.purity(), 0.5, 1e-15);
}

TEST(PartialTrace, ProductStateGivesPureReducedState) {
  auto s = tensor(coherent(0.5, 12, "a"), coherent(0.9, 12, "b"));
  Ensemble e(s.register_ptr());
  e.add(1.0, s);
  auto rho = partial_trace(e, {"b"});
  EXPECT_NEAR(rho.purity(), 1.0, 1e-12);
  EXPECT_NEAR(rho.trace(), to_density(e).trace(), 1e-12);
}

TEST(PartialTrace, DensityOperatorOverloadPreservesTrace) {
  auto s = tensor(bell_chi(), coherent(0.8, 14, "x"));
  Ensemble e(s.register_ptr());
  e.add(0.7, s);
  auto full = to_density(e);
  auto reduced = partial_trace(full, {"1H", "x"});
  EXPECT_NEAR(reduced.trace(), full.trace(), 1e-12);
}

TEST(ToDensity, ProjectorMixtureAndEmpty) {
  auto reg = build_register({{"a", 1}});
  Ensemble one(reg);
  one.add(1.0, basis_state(reg, {1}));
  auto p = to_density(one);
  EXPECT_NEAR(p.purity(), 1.0, 1e-15);
  EXPECT_EQ(p.matrix()(1, 1), cplx(1.0));

  Ensemble mix(reg);
  mix.add(0.5, basis_state(reg, {0}));
  mix.add(0.5, basis_state(reg, {1}));
  auto m = to_density(mix);
  EXPECT_NEAR(m.matrix()(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(m.matrix()(1, 1).real(), 0.5, 1e-15);

  Ensemble empty(reg);
  EXPECT_EQ(to_density(empty).trace(), 0.0);
  EXPECT_THROW(mix.add(-0.1, basis_state(reg, {0})), ValidationError);
}

TEST(DensityOperator, HermitianAndPositiveForMixtures) {
  auto reg = build_register({{"a", 10}});
  Ensemble e(reg);
  e.add(0.3, coherent(0.6, 10, "a").normalized());
  e.add(0.7, coherent(cplx(0.0, 0.4), 10, "a").normalized());
  auto rho = to_density(e);
  EXPECT_LE(rho.hermiticity_defect(), tolerance::hermiticity);
  EXPECT_GE(rho.min_eigenvalue(), tolerance::eigenvalue_floor);
  EXPECT_NEAR(rho.trace(), 1.0, 1e-12);
}

TEST(WeightedPartialTrace, WeightsSelectOccupations) {
  auto reg = build_register({{"a", 1}, {"b", 1}});
  const double h = 1.0 / std::sqrt(2.0);
  Ensemble e(reg);
  e.add(1.0, ket(reg, {{{1, 0}, h}, {{0, 1}, h}}));
  const std::string keep[] = {"a"};
  std::vector<TracedWeights> w{{"b", {0.0, 1.0}}};  // project b onto |1>
  auto rho = weighted_partial_trace(e, keep, w);
  EXPECT_NEAR(rho.trace(), 0.5, 1e-15);
  EXPECT_NEAR(rho.matrix()(0, 0).real(), 0.5, 1e-15);
}
