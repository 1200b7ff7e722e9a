#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qpr {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// change of variables x -> x + beta fails to be a diffeomorphism
class DiffeoError : public Error {
public:
  using Error::Error;
};

class SmallDivisorError : public Error {
public:
  SmallDivisorError(const std::string& what, std::vector<int> ell, int j, int jp, double divisor)
      : Error(what), ell(std::move(ell)), j(j), jp(jp), divisor(divisor) {}
  std::vector<int> ell;
  int j, jp;
  double divisor;
};

class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, std::vector<double> history = {})
      : Error(what), history(std::move(history)) {}
  std::vector<double> history;
};

class WindowError : public Error {
public:
  using Error::Error;
};

class SmallnessError : public Error {
public:
  using Error::Error;
};

// reality or Hamiltonian structure lost beyond tolerance
class StructureError : public Error {
public:
  using Error::Error;
};

// step size too coarse for the requested resolution
class RefinementError : public Error {
public:
  using Error::Error;
};

// omega falls in an excluded set; `set` names it
class ExclusionError : public Error {
public:
  ExclusionError(const std::string& what, std::string set, std::vector<int> ell = {}, int j = 0, int jp = 0,
                 double divisor = 0.0, double bound = 0.0)
      : Error(what), set(std::move(set)), ell(std::move(ell)), j(j), jp(jp), divisor(divisor), bound(bound) {}
  std::string set;
  std::vector<int> ell;
  int j, jp;
  double divisor, bound;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace qpr
