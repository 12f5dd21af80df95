#ifndef STROM_ERROR_HPP
#define STROM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace strom {

// Base class for all toolkit failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Precondition / argument violations (maps to CLI exit code 2 when caused by user input).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

// Numerical failures (positivity loss, Newton divergence, singular data): CLI exit code 3.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// A (2,2)-form (or metric) left the positive cone. Carries the worst point diagnostics.
class PositivityError : public NumericalError {
 public:
  PositivityError(const std::string& msg, double worst_eigenvalue, std::size_t site)
      : NumericalError(msg), worst_eigenvalue(worst_eigenvalue), site(site) {}
  double worst_eigenvalue;
  std::size_t site;
};

// rhs of a linear solve has a component outside the operator's range.
class RangeError : public NumericalError {
 public:
  RangeError(const std::string& msg, double defect) : NumericalError(msg), defect(defect) {}
  double defect;
};

}  // namespace strom

#endif
