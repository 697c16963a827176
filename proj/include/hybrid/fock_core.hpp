#ifndef HYBRID_FOCK_CORE_HPP
#define HYBRID_FOCK_CORE_HPP

// Truncated multimode Fock-space linear algebra.
//
// A Register is an ordered list of bosonic modes, each truncated at its own
// cutoff. Basis states are addressed by a mixed-radix flat index in which the
// last listed mode varies fastest. States and operators are immutable values;
// every operation returns a new value.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hybrid/errors.hpp"

namespace hybrid {

using cplx = std::complex<double>;

namespace tolerance {
inline constexpr double norm = 1e-10;
inline constexpr double hermiticity = 1e-10;
inline constexpr double eigenvalue_floor = -1e-9;
inline constexpr double truncation = 1e-10;
}  // namespace tolerance

struct ModeSpec {
  std::string label;
  int cutoff = 0;  // maximum occupation, inclusive

  std::size_t dimension() const { return static_cast<std::size_t>(cutoff) + 1; }
  friend bool operator==(const ModeSpec&, const ModeSpec&) = default;
};

class Register {
 public:
  explicit Register(std::vector<ModeSpec> modes) : modes_(std::move(modes)) {
    if (modes_.empty()) throw ValidationError("register needs at least one mode");
    std::unordered_set<std::string> seen;
    for (const auto& m : modes_) {
      if (m.cutoff < 0) throw ValidationError("mode '" + m.label + "' has negative cutoff");
      if (!seen.insert(m.label).second)
        throw ValidationError("duplicate mode label '" + m.label + "'");
    }
    strides_.assign(modes_.size(), 1);
    dimension_ = 1;
    for (std::size_t k = modes_.size(); k-- > 0;) {
      strides_[k] = dimension_;
      const auto d = modes_[k].dimension();
      if (dimension_ > std::numeric_limits<std::size_t>::max() / 16 / d)
        throw ValidationError("register dimension overflows");
      dimension_ *= d;
    }
  }

  std::size_t size() const { return modes_.size(); }
  std::size_t dimension() const { return dimension_; }
  const std::vector<ModeSpec>& modes() const { return modes_; }
  const ModeSpec& mode(std::size_t pos) const { return modes_.at(pos); }
  std::size_t stride(std::size_t pos) const { return strides_[pos]; }

  bool contains(const std::string& label) const {
    return std::any_of(modes_.begin(), modes_.end(),
                       [&](const ModeSpec& m) { return m.label == label; });
  }

  std::size_t position(const std::string& label) const {
    for (std::size_t k = 0; k < modes_.size(); ++k)
      if (modes_[k].label == label) return k;
    throw ValidationError("unknown mode label '" + label + "'");
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(modes_.size());
    for (const auto& m : modes_) out.push_back(m.label);
    return out;
  }

  std::size_t index(std::span<const int> occupations) const {
    if (occupations.size() != modes_.size())
      throw ValidationError("occupation tuple has wrong length");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      const int n = occupations[k];
      if (n < 0 || n > modes_[k].cutoff)
        throw ValidationError("occupation " + std::to_string(n) + " of mode '" +
                              modes_[k].label + "' exceeds cutoff " +
                              std::to_string(modes_[k].cutoff));
      idx += static_cast<std::size_t>(n) * strides_[k];
    }
    return idx;
  }

  int occupation(std::size_t index, std::size_t pos) const {
    return static_cast<int>((index / strides_[pos]) % modes_[pos].dimension());
  }

  std::vector<int> occupations(std::size_t index) const {
    std::vector<int> occ(modes_.size());
    for (std::size_t k = 0; k < modes_.size(); ++k) occ[k] = occupation(index, k);
    return occ;
  }

  /// Spatial modes whose H/V pair has been split into detector channels.
  const std::vector<std::string>& routed() const { return routed_; }

  Register with_routed(const std::string& spatial) const {
    Register copy = *this;
    copy.routed_.push_back(spatial);
    return copy;
  }

  friend bool operator==(const Register& a, const Register& b) { return a.modes_ == b.modes_; }

 private:
  std::vector<ModeSpec> modes_;
  std::vector<std::size_t> strides_;
  std::size_t dimension_ = 1;
  std::vector<std::string> routed_;
};

using RegisterPtr = std::shared_ptr<const Register>;

inline RegisterPtr build_register(std::vector<ModeSpec> specs) {
  return std::make_shared<const Register>(std::move(specs));
}

namespace detail {

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

// Calls fn(offset) for every occupation combination of `positions`, last
// position fastest. offset = sum_k occ_k * stride(positions[k]).
template <class Fn>
void for_each_offset(const Register& reg, std::span<const std::size_t> positions, Fn&& fn) {
  const std::size_t n = positions.size();
  std::vector<int> occ(n, 0);
  std::size_t offset = 0;
  for (;;) {
    fn(offset);
    std::size_t k = n;
    for (;;) {
      if (k == 0) return;
      --k;
      const auto pos = positions[k];
      if (occ[k] < reg.mode(pos).cutoff) {
        ++occ[k];
        offset += reg.stride(pos);
        break;
      }
      offset -= static_cast<std::size_t>(occ[k]) * reg.stride(pos);
      occ[k] = 0;
    }
  }
}

inline std::vector<std::size_t> complement(const Register& reg,
                                           std::span<const std::size_t> positions) {
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < reg.size(); ++k)
    if (std::find(positions.begin(), positions.end(), k) == positions.end()) rest.push_back(k);
  return rest;
}

inline std::vector<std::size_t> positions_of(const Register& reg,
                                             std::span<const std::string> labels) {
  std::vector<std::size_t> pos;
  pos.reserve(labels.size());
  for (const auto& l : labels) {
    const auto p = reg.position(l);
    if (std::find(pos.begin(), pos.end(), p) != pos.end())
      throw ValidationError("mode '" + l + "' listed twice");
    pos.push_back(p);
  }
  return pos;
}

// Flat offsets (in the full register) of every occupation combination of
// `positions`, enumerated in sub-register order.
inline std::vector<std::size_t> offsets_of(const Register& reg,
                                           std::span<const std::size_t> positions) {
  std::vector<std::size_t> out;
  for_each_offset(reg, positions, [&](std::size_t off) { out.push_back(off); });
  return out;
}

inline RegisterPtr sub_register(const Register& reg, std::span<const std::size_t> positions) {
  std::vector<ModeSpec> specs;
  for (auto p : positions) specs.push_back(reg.mode(p));
  return build_register(std::move(specs));
}

}  // namespace detail

class PureState {
 public:
  PureState(RegisterPtr reg, std::vector<cplx> amplitudes, double truncation_loss = 0.0)
      : reg_(std::move(reg)), amps_(std::move(amplitudes)), truncation_loss_(truncation_loss) {
    if (!reg_) throw ValidationError("state needs a register");
    if (amps_.size() != reg_->dimension())
      throw ValidationError("amplitude vector does not match register dimension");
    if (norm() > 1.0 + tolerance::norm)
      throw ValidationError("state norm " + detail::sci(norm()) + " exceeds 1");
  }

  const Register& reg() const { return *reg_; }
  const RegisterPtr& register_ptr() const { return reg_; }
  std::span<const cplx> amplitudes() const { return amps_; }
  std::size_t dimension() const { return amps_.size(); }

  cplx amplitude(std::span<const int> occupations) const { return amps_[reg_->index(occupations)]; }
  cplx amplitude(std::initializer_list<int> occupations) const {
    return amplitude(std::span<const int>(occupations.begin(), occupations.size()));
  }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
  }
  double norm() const { return std::sqrt(norm_squared()); }

  /// Probability mass discarded by truncation while producing this state.
  double truncation_loss() const { return truncation_loss_; }

  bool is_normalized(double tol = tolerance::norm) const { return std::abs(norm() - 1.0) <= tol; }

  PureState normalized() const {
    const double n = norm();
    if (n == 0.0) throw ValidationError("cannot normalize the zero vector");
    std::vector<cplx> a(amps_);
    for (auto& x : a) x /= n;
    return PureState(reg_, std::move(a), truncation_loss_);
  }

 private:
  RegisterPtr reg_;
  std::vector<cplx> amps_;
  double truncation_loss_;
};

inline PureState basis_state(RegisterPtr reg, std::span<const int> occupations) {
  std::vector<cplx> a(reg->dimension(), 0.0);
  a[reg->index(occupations)] = 1.0;
  return PureState(std::move(reg), std::move(a));
}

inline PureState basis_state(RegisterPtr reg, std::initializer_list<int> occupations) {
  return basis_state(std::move(reg), std::span<const int>(occupations.begin(), occupations.size()));
}

inline PureState vacuum_state(RegisterPtr reg) {
  std::vector<int> zeros(reg->size(), 0);
  return basis_state(std::move(reg), zeros);
}

/// a ⊗ b on the concatenated register (modes of `a` first).
inline PureState tensor(const PureState& a, const PureState& b) {
  std::vector<ModeSpec> specs = a.reg().modes();
  for (const auto& m : b.reg().modes()) {
    if (a.reg().contains(m.label))
      throw ValidationError("tensor: mode '" + m.label + "' appears in both factors");
    specs.push_back(m);
  }
  auto reg = build_register(std::move(specs));
  std::vector<cplx> out(reg->dimension());
  const auto aa = a.amplitudes();
  const auto bb = b.amplitudes();
  for (std::size_t i = 0; i < aa.size(); ++i)
    for (std::size_t j = 0; j < bb.size(); ++j) out[i * bb.size() + j] = aa[i] * bb[j];
  return PureState(std::move(reg), std::move(out), a.truncation_loss() + b.truncation_loss());
}

/// <a|b>, conjugate-linear in a.
inline cplx inner(const PureState& a, const PureState& b) {
  if (!(a.reg() == b.reg())) throw ValidationError("inner: register mismatch");
  cplx s = 0.0;
  const auto x = a.amplitudes();
  const auto y = b.amplitudes();
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

inline double norm(const PureState& a) { return a.norm(); }

/// Relabels one mode; amplitudes untouched.
inline PureState rename_mode(const PureState& s, const std::string& from, const std::string& to) {
  auto specs = s.reg().modes();
  specs[s.reg().position(from)].label = to;
  std::vector<cplx> a(s.amplitudes().begin(), s.amplitudes().end());
  return PureState(build_register(std::move(specs)), std::move(a), s.truncation_loss());
}

/// Lowers the cutoff of one mode, dropping (and recording) the discarded mass.
inline PureState truncate_mode(const PureState& s, const std::string& label, int cutoff) {
  const auto& reg = s.reg();
  const auto pos = reg.position(label);
  if (cutoff < 0) throw ValidationError("negative cutoff");
  if (cutoff >= reg.mode(pos).cutoff) {
    if (cutoff == reg.mode(pos).cutoff) return s;
    throw ValidationError("truncate_mode cannot raise a cutoff");
  }
  auto specs = reg.modes();
  specs[pos].cutoff = cutoff;
  auto out_reg = build_register(std::move(specs));
  std::vector<cplx> out(out_reg->dimension(), 0.0);
  double lost = 0.0;
  const auto in = s.amplitudes();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto occ = reg.occupations(i);
    if (occ[pos] > cutoff) {
      lost += std::norm(in[i]);
      continue;
    }
    out[out_reg->index(occ)] = in[i];
  }
  return PureState(std::move(out_reg), std::move(out), s.truncation_loss() + lost);
}

/// Raises the cutoff of one mode; new occupations start with zero amplitude.
inline PureState extend_mode(const PureState& s, const std::string& label, int cutoff) {
  const auto& reg = s.reg();
  const auto pos = reg.position(label);
  if (cutoff < reg.mode(pos).cutoff) throw ValidationError("extend_mode cannot lower a cutoff");
  if (cutoff == reg.mode(pos).cutoff) return s;
  auto specs = reg.modes();
  specs[pos].cutoff = cutoff;
  auto out_reg = build_register(std::move(specs));
  std::vector<cplx> out(out_reg->dimension(), 0.0);
  const auto in = s.amplitudes();
  for (std::size_t i = 0; i < in.size(); ++i)
    if (in[i] != cplx(0.0)) out[out_reg->index(reg.occupations(i))] = in[i];
  return PureState(std::move(out_reg), std::move(out), s.truncation_loss());
}

enum class Unitarity {
  none,       // generic operator
  truncated,  // truncation of a unitary; norm loss on application is tracked
  exact       // unitary on the truncated block, checked at construction
};

/// Matrix block acting on one or two modes. Row/column index of a two-mode
/// block is n_first * (cutoff_second + 1) + n_second.
class ModeOperator {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    cplx value;
  };

  ModeOperator(std::vector<int> cutoffs, Eigen::MatrixXcd matrix,
               Unitarity unitarity = Unitarity::none, double tolerance = 1e-12)
      : cutoffs_(std::move(cutoffs)), matrix_(std::move(matrix)), unitarity_(unitarity) {
    if (cutoffs_.empty() || cutoffs_.size() > 2)
      throw ValidationError("mode operators act on one or two modes");
    std::size_t d = 1;
    for (int c : cutoffs_) {
      if (c < 0) throw ValidationError("negative cutoff in mode operator");
      d *= static_cast<std::size_t>(c) + 1;
    }
    if (static_cast<std::size_t>(matrix_.rows()) != d || static_cast<std::size_t>(matrix_.cols()) != d)
      throw ValidationError("operator matrix does not match target cutoffs");
    if (unitarity_ == Unitarity::exact && unitarity_defect() > tolerance)
      throw ValidationError("operator flagged unitary has defect " +
                            std::to_string(unitarity_defect()));
    // Column-major sparse entries so zero input amplitudes can be skipped.
    for (Eigen::Index c = 0; c < matrix_.cols(); ++c) {
      col_begin_.push_back(entries_.size());
      for (Eigen::Index r = 0; r < matrix_.rows(); ++r)
        if (matrix_(r, c) != cplx(0.0))
          entries_.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), matrix_(r, c)});
    }
    col_begin_.push_back(entries_.size());
  }

  std::size_t arity() const { return cutoffs_.size(); }
  const std::vector<int>& cutoffs() const { return cutoffs_; }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  Unitarity unitarity() const { return unitarity_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::span<const Entry> column(std::size_t c) const {
    return {entries_.data() + col_begin_[c], col_begin_[c + 1] - col_begin_[c]};
  }

  /// max |(U†U − 1)_ij| over the leading `block` rows/cols (whole matrix by default).
  double unitarity_defect(std::size_t block = 0) const {
    const auto n = block == 0 ? matrix_.cols() : static_cast<Eigen::Index>(block);
    const Eigen::MatrixXcd g = matrix_.adjoint() * matrix_;
    return (g.topLeftCorner(n, n) - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  }

 private:
  std::vector<int> cutoffs_;
  Eigen::MatrixXcd matrix_;
  Unitarity unitarity_;
  std::vector<Entry> entries_;
  std::vector<std::size_t> col_begin_;
};

inline ModeOperator identity_operator(std::vector<int> cutoffs) {
  std::size_t d = 1;
  for (int c : cutoffs) d *= static_cast<std::size_t>(c) + 1;
  return ModeOperator(std::move(cutoffs), Eigen::MatrixXcd::Identity(d, d), Unitarity::exact);
}

/// Applies `op` to the named modes by stride iteration over the remaining
/// index space; the global matrix is never formed.
inline PureState apply(const ModeOperator& op, std::span<const std::string> targets,
                       const PureState& state) {
  const auto& reg = state.reg();
  if (targets.size() != op.arity()) throw ValidationError("apply: wrong number of target modes");
  const auto pos = detail::positions_of(reg, targets);
  for (std::size_t k = 0; k < pos.size(); ++k)
    if (reg.mode(pos[k]).cutoff != op.cutoffs()[k])
      throw ValidationError("apply: operator dimension does not match cutoff of mode '" +
                            reg.mode(pos[k]).label + "'");

  const auto local = detail::offsets_of(reg, pos);
  const auto rest = detail::complement(reg, pos);
  const auto in = state.amplitudes();
  std::vector<cplx> out(in.size(), 0.0);

  detail::for_each_offset(reg, rest, [&](std::size_t base) {
    for (std::size_t c = 0; c < local.size(); ++c) {
      const cplx x = in[base + local[c]];
      if (x == cplx(0.0)) continue;
      for (const auto& e : op.column(c)) out[base + local[e.row]] += e.value * x;
    }
  });

  double loss = state.truncation_loss();
  if (op.unitarity() != Unitarity::none) {
    double before = 0.0, after = 0.0;
    for (const auto& x : in) before += std::norm(x);
    for (const auto& x : out) after += std::norm(x);
    loss += std::max(0.0, before - after);
  }
  return PureState(state.register_ptr(), std::move(out), loss);
}

inline PureState apply(const ModeOperator& op, std::initializer_list<std::string> targets,
                       const PureState& state) {
  return apply(op, std::span<const std::string>(targets.begin(), targets.size()), state);
}

struct Branch {
  double weight;
  PureState state;
};

/// Weighted pure-state mixture over a fixed register.
class Ensemble {
 public:
  explicit Ensemble(RegisterPtr reg) : reg_(std::move(reg)) {}
  Ensemble(RegisterPtr reg, std::vector<Branch> branches) : reg_(std::move(reg)) {
    for (auto& b : branches) add(b.weight, std::move(b.state));
  }

  void add(double weight, PureState state) {
    if (!(weight >= 0.0)) throw ValidationError("ensemble weights must be non-negative");
    if (!(state.reg() == *reg_)) throw ValidationError("ensemble branch register mismatch");
    branches_.push_back({weight, std::move(state)});
  }

  const Register& reg() const { return *reg_; }
  const RegisterPtr& register_ptr() const { return reg_; }
  const std::vector<Branch>& branches() const { return branches_; }
  std::size_t size() const { return branches_.size(); }

  double total_weight() const {
    double s = 0.0;
    for (const auto& b : branches_) s += b.weight * b.state.norm_squared();
    return s;
  }

 private:
  RegisterPtr reg_;
  std::vector<Branch> branches_;
};

class DensityOperator {
 public:
  DensityOperator(RegisterPtr reg, Eigen::MatrixXcd matrix)
      : reg_(std::move(reg)), m_(std::move(matrix)) {
    if (!reg_) throw ValidationError("density operator needs a register");
    const auto d = static_cast<Eigen::Index>(reg_->dimension());
    if (m_.rows() != d || m_.cols() != d)
      throw ValidationError("density matrix does not match register dimension");
  }

  const Register& reg() const { return *reg_; }
  const RegisterPtr& register_ptr() const { return reg_; }
  const Eigen::MatrixXcd& matrix() const { return m_; }

  double trace() const { return m_.trace().real(); }
  double purity() const { return (m_ * m_).trace().real(); }

  double hermiticity_defect() const {
    if (m_.size() == 0) return 0.0;
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  }
  bool is_hermitian(double tol = tolerance::hermiticity) const { return hermiticity_defect() <= tol; }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  DensityOperator normalized() const {
    const double tr = trace();
    if (!(tr > 0.0)) throw ValidationError("cannot normalize a traceless operator");
    return DensityOperator(reg_, m_ / tr);
  }

  cplx element(std::span<const int> row, std::span<const int> col) const {
    return m_(static_cast<Eigen::Index>(reg_->index(row)), static_cast<Eigen::Index>(reg_->index(col)));
  }

 private:
  RegisterPtr reg_;
  Eigen::MatrixXcd m_;
};

/// sum_i w_i |psi_i><psi_i|.
inline DensityOperator to_density(const Ensemble& e) {
  const auto d = static_cast<Eigen::Index>(e.reg().dimension());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& b : e.branches()) {
    const auto a = b.state.amplitudes();
    Eigen::Map<const Eigen::VectorXcd> v(a.data(), d);
    m.noalias() += b.weight * (v * v.adjoint());
  }
  return DensityOperator(e.register_ptr(), std::move(m));
}

/// Per-mode diagonal weights d_k applied to a traced mode before tracing it.
struct TracedWeights {
  std::string label;
  std::vector<double> weights;
};

/// Tr_traced[ W (sum_i w_i |psi_i><psi_i|) ] where W is the product of the
/// diagonal weights listed in `weights` (identity on unlisted traced modes).
/// The result is left unnormalized; its trace is the outcome probability.
inline DensityOperator weighted_partial_trace(const Ensemble& e, std::span<const std::string> keep,
                                              std::span<const TracedWeights> weights = {}) {
  const auto& reg = e.reg();
  if (keep.empty()) throw ValidationError("partial trace needs a non-empty keep set");
  auto kept = detail::positions_of(reg, keep);
  std::sort(kept.begin(), kept.end());
  const auto traced = detail::complement(reg, kept);

  const auto kept_off = detail::offsets_of(reg, kept);
  const auto traced_off = detail::offsets_of(reg, traced);

  // Diagonal weight of every traced basis combination.
  std::vector<double> w(traced_off.size(), 1.0);
  for (const auto& tw : weights) {
    const auto p = reg.position(tw.label);
    if (std::find(traced.begin(), traced.end(), p) == traced.end())
      throw ValidationError("weighted mode '" + tw.label + "' is not traced out");
    if (tw.weights.size() != reg.mode(p).dimension())
      throw ValidationError("weight vector for '" + tw.label + "' has wrong length");
    for (std::size_t t = 0; t < traced_off.size(); ++t)
      w[t] *= tw.weights[static_cast<std::size_t>(reg.occupation(traced_off[t], p))];
  }
  std::vector<std::size_t> cols;
  for (std::size_t t = 0; t < w.size(); ++t)
    if (w[t] != 0.0) cols.push_back(t);

  const auto dk = static_cast<Eigen::Index>(kept_off.size());
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dk, dk);
  Eigen::MatrixXcd m(dk, static_cast<Eigen::Index>(cols.size()));
  for (const auto& b : e.branches()) {
    if (b.weight == 0.0) continue;
    const auto a = b.state.amplitudes();
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double s = std::sqrt(w[cols[c]]);
      const auto toff = traced_off[cols[c]];
      for (Eigen::Index k = 0; k < dk; ++k) m(k, static_cast<Eigen::Index>(c)) = s * a[kept_off[k] + toff];
    }
    rho.noalias() += b.weight * (m * m.adjoint());
  }
  return DensityOperator(detail::sub_register(reg, kept), std::move(rho));
}

inline DensityOperator partial_trace(const Ensemble& e, std::span<const std::string> keep) {
  return weighted_partial_trace(e, keep);
}

inline DensityOperator partial_trace(const DensityOperator& rho, std::span<const std::string> keep) {
  const auto& reg = rho.reg();
  if (keep.empty()) throw ValidationError("partial trace needs a non-empty keep set");
  auto kept = detail::positions_of(reg, keep);
  std::sort(kept.begin(), kept.end());
  const auto traced = detail::complement(reg, kept);
  const auto ko = detail::offsets_of(reg, kept);
  const auto to = detail::offsets_of(reg, traced);
  const auto dk = static_cast<Eigen::Index>(ko.size());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dk, dk);
  const auto& m = rho.matrix();
  for (auto t : to)
    for (Eigen::Index i = 0; i < dk; ++i)
      for (Eigen::Index j = 0; j < dk; ++j)
        out(i, j) += m(static_cast<Eigen::Index>(ko[i] + t), static_cast<Eigen::Index>(ko[j] + t));
  return DensityOperator(detail::sub_register(reg, kept), std::move(out));
}

inline DensityOperator partial_trace(const Ensemble& e, std::initializer_list<std::string> keep) {
  return partial_trace(e, std::span<const std::string>(keep.begin(), keep.size()));
}
inline DensityOperator partial_trace(const DensityOperator& rho, std::initializer_list<std::string> keep) {
  return partial_trace(rho, std::span<const std::string>(keep.begin(), keep.size()));
}

/// U rho U† with U a mode operator on the named modes.
inline DensityOperator apply(const ModeOperator& op, std::span<const std::string> targets,
                             const DensityOperator& rho) {
  const auto& reg = rho.reg();
  if (targets.size() != op.arity()) throw ValidationError("apply: wrong number of target modes");
  const auto pos = detail::positions_of(reg, targets);
  for (std::size_t k = 0; k < pos.size(); ++k)
    if (reg.mode(pos[k]).cutoff != op.cutoffs()[k])
      throw ValidationError("apply: operator dimension does not match cutoff");
  const auto local = detail::offsets_of(reg, pos);
  const auto rest = detail::offsets_of(reg, detail::complement(reg, pos));
  const auto d = static_cast<Eigen::Index>(reg.dimension());
  const auto& u = op.matrix();

  // Acting on rows then columns, block by block of the untouched modes.
  Eigen::MatrixXcd left = Eigen::MatrixXcd::Zero(d, d);
  const auto& m = rho.matrix();
  for (auto base : rest)
    for (std::size_t r = 0; r < local.size(); ++r)
      for (std::size_t c = 0; c < local.size(); ++c) {
        const cplx v = u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        if (v == cplx(0.0)) continue;
        left.row(static_cast<Eigen::Index>(base + local[r])) +=
            v * m.row(static_cast<Eigen::Index>(base + local[c]));
      }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (auto base : rest)
    for (std::size_t r = 0; r < local.size(); ++r)
      for (std::size_t c = 0; c < local.size(); ++c) {
        const cplx v = std::conj(u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        if (v == cplx(0.0)) continue;
        out.col(static_cast<Eigen::Index>(base + local[r])) +=
            v * left.col(static_cast<Eigen::Index>(base + local[c]));
      }
  return DensityOperator(rho.register_ptr(), std::move(out));
}

inline DensityOperator apply(const ModeOperator& op, std::initializer_list<std::string> targets,
                             const DensityOperator& rho) {
  return apply(op, std::span<const std::string>(targets.begin(), targets.size()), rho);
}

/// Exchanges the occupations of two modes with equal cutoffs.
inline ModeOperator swap_operator(int cutoff) {
  const auto d = static_cast<Eigen::Index>(cutoff) + 1;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d * d, d * d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) m(b * d + a, a * d + b) = 1.0;
  return ModeOperator({cutoff, cutoff}, std::move(m), Unitarity::exact);
}

}  // namespace hybrid

#endif  // HYBRID_FOCK_CORE_HPP
