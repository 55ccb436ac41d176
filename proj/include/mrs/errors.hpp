#ifndef MRS_ERRORS_HPP
#define MRS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mrs {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, invalid models, arguments out of range.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure could not produce a usable answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Every reachable hidden state assigns zero density to x_t.
class ZeroLikelihoodError : public NumericalError {
 public:
  ZeroLikelihoodError(std::size_t t, const std::string& what)
      : NumericalError(what), t_(t) {}
  std::size_t time() const { return t_; }

 private:
  std::size_t t_;
};

// The linear-scale forward recursion underflowed to exactly zero.
class UnderflowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A regime received no posterior weight, so its M-step is undefined.
class DegenerateRegimeError : public NumericalError {
 public:
  DegenerateRegimeError(int regime, const std::string& what)
      : NumericalError(what), regime_(regime) {}
  int regime() const { return regime_; }

 private:
  int regime_;
};

// Forward and backward quantities disagree; indicates a bug upstream.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace mrs

#endif  // MRS_ERRORS_HPP
