#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace moverfv {

/// Invalid user input: bad configuration values, out-of-range parameters.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the domain of a mathematical evaluator.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// A flat cell with (numerically) zero area.
class DegenerateCellError : public std::runtime_error {
 public:
  explicit DegenerateCellError(const std::string& what) : std::runtime_error(what) {}
};

/// A moved triangle whose area fell below the relative collapse threshold.
class GeometryCollapseError : public std::runtime_error {
 public:
  GeometryCollapseError(std::size_t cell, const std::string& what)
      : std::runtime_error(what), cell_(cell) {}
  std::size_t cell() const { return cell_; }

 private:
  std::size_t cell_;
};

/// Non-finite intermediate result in a numerical kernel.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite cell value produced by a time step.
class BlowUpError : public NumericalError {
 public:
  BlowUpError(std::size_t step, std::size_t cell, const std::string& what)
      : NumericalError(what), step_(step), cell_(cell) {}
  std::size_t step() const { return step_; }
  std::size_t cell() const { return cell_; }

 private:
  std::size_t step_;
  std::size_t cell_;
};

}  // namespace moverfv
