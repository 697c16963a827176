#ifndef HYBRID_METRICS_HPP
#define HYBRID_METRICS_HPP

// Fidelity to the target hybrid state and negativity of the partial transpose.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "hybrid/fock_core.hpp"
#include "hybrid/resource_states.hpp"

namespace hybrid {

/// (|1,0>_A |alpha_f>_B + e^{i phi} |0,1>_A |-alpha_f>_B) / sqrt(2) on `reg`,
/// whose modes must include the two A channels and the B channel. Any other
/// modes of `reg` are left in vacuum.
inline PureState target_hybrid(double alpha_f, double phi, RegisterPtr reg, const std::string& a_h = "A_H",
                               const std::string& a_v = "A_V", const std::string& b = "B_H") {
  const auto ph = reg->position(a_h), pv = reg->position(a_v), pb = reg->position(b);
  if (reg->mode(ph).cutoff < 1 || reg->mode(pv).cutoff < 1)
    throw ValidationError("target needs A channel cutoffs >= 1");
  const int cb = reg->mode(pb).cutoff;
  const auto plus = coherent(alpha_f, cb);
  const auto minus = coherent(-alpha_f, cb);
  const cplx e = detail::unit_phase(phi);
  std::vector<cplx> amp(reg->dimension(), 0.0);
  std::vector<int> occ(reg->size(), 0);
  const double h = 1.0 / std::sqrt(2.0);
  for (int n = 0; n <= cb; ++n) {
    occ[pb] = n;
    occ[ph] = 1, occ[pv] = 0;
    amp[reg->index(occ)] = h * plus.amplitudes()[n];
    occ[ph] = 0, occ[pv] = 1;
    amp[reg->index(occ)] = h * e * minus.amplitudes()[n];
  }
  return PureState(std::move(reg), std::move(amp), plus.truncation_loss());
}

/// <psi| rho |psi>.
inline double fidelity(const DensityOperator& rho, const PureState& target) {
  if (!(rho.reg() == target.reg())) throw ValidationError("fidelity: register mismatch");
  const auto a = target.amplitudes();
  Eigen::Map<const Eigen::VectorXcd> v(a.data(), static_cast<Eigen::Index>(a.size()));
  return (v.adjoint() * rho.matrix() * v)(0, 0).real();
}

struct Bipartition {
  std::vector<std::string> a;
  std::vector<std::string> b;
};

inline void validate(const Bipartition& part, const Register& reg) {
  std::vector<std::size_t> seen;
  for (const auto* side : {&part.a, &part.b})
    for (const auto& l : *side) {
      const auto p = reg.position(l);
      if (std::find(seen.begin(), seen.end(), p) != seen.end())
        throw ValidationError("bipartition sides overlap on '" + l + "'");
      seen.push_back(p);
    }
  if (seen.size() != reg.size()) throw ValidationError("bipartition does not cover the register");
  if (part.a.empty() || part.b.empty()) throw ValidationError("bipartition sides must be non-empty");
}

/// rho^{T_A}: transposes the indices of the A-side modes.
inline DensityOperator partial_transpose(const DensityOperator& rho, const Bipartition& part) {
  const auto& reg = rho.reg();
  validate(part, reg);
  std::vector<std::size_t> apos;
  for (const auto& l : part.a) apos.push_back(reg.position(l));
  const auto aoff = detail::offsets_of(reg, apos);
  const auto boff = detail::offsets_of(reg, detail::complement(reg, apos));
  const auto& m = rho.matrix();
  Eigen::MatrixXcd out(m.rows(), m.cols());
  for (auto ai : aoff)
    for (auto aj : aoff)
      for (auto bi : boff)
        for (auto bj : boff)
          out(static_cast<Eigen::Index>(ai + bi), static_cast<Eigen::Index>(aj + bj)) =
              m(static_cast<Eigen::Index>(aj + bi), static_cast<Eigen::Index>(ai + bj));
  return DensityOperator(rho.register_ptr(), std::move(out));
}

inline constexpr std::size_t negativity_max_dimension = 4096;

/// -2 x (sum of negative eigenvalues of rho^{T_A}).
inline double negativity(const DensityOperator& rho, const Bipartition& part) {
  if (rho.reg().dimension() > negativity_max_dimension)
    throw ValidationError("negativity: dimension " + std::to_string(rho.reg().dimension()) +
                          " too large for a dense eigensolve");
  const auto pt = partial_transpose(rho, part);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pt.matrix(), Eigen::EigenvaluesOnly);
  double neg = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) neg += std::min(0.0, es.eigenvalues()(i));
  return -2.0 * neg;
}

}  // namespace hybrid

#endif  // HYBRID_METRICS_HPP
