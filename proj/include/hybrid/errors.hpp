#ifndef HYBRID_ERRORS_HPP
#define HYBRID_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hybrid {

/// Bad input: out-of-range physical parameter, malformed register, unknown label.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A Fock cutoff is too small for the requested state or operation.
class TruncationError : public std::runtime_error {
 public:
  explicit TruncationError(const std::string& what, int required_cutoff = -1)
      : std::runtime_error(what), required_cutoff_(required_cutoff) {}

  /// Smallest cutoff that satisfies the bound, or -1 when unknown.
  int required_cutoff() const { return required_cutoff_; }

 private:
  int required_cutoff_;
};

/// The herald outcome has (numerically) zero probability, so no post-state exists.
class HeraldingImpossible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hybrid

#endif  // HYBRID_ERRORS_HPP
