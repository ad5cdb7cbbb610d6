#ifndef COMMUTE_ERROR_HPP
#define COMMUTE_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace commute {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI diagnostics.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

/// Caller broke a documented precondition (shape mismatch, bad diagonal, ...).
class ContractViolation : public Error {
public:
  explicit ContractViolation(const std::string& what) : Error("contract_violation", what) {}
};

/// Malformed or inconsistent input file.
class LoadError : public Error {
public:
  explicit LoadError(const std::string& what) : Error("load_error", what) {}
};

/// Aggregate demand exceeds aggregate capacity, or a by-difference entry is negative.
class InfeasibleInputs : public Error {
public:
  explicit InfeasibleInputs(const std::string& what) : Error("infeasible_inputs", what) {}
};

/// A dense allocation could not be satisfied.
class CapacityError : public Error {
public:
  explicit CapacityError(const std::string& what) : Error("capacity_error", what) {}
};

/// Value outside the domain of a metric (empty networks, degenerate distributions).
class DomainError : public Error {
public:
  explicit DomainError(const std::string& what) : Error("domain_error", what) {}
};

/// A pending origin has no admissible destination with positive weight.
class StuckOrigin : public Error {
public:
  StuckOrigin(std::size_t origin, std::string origin_id, const std::string& what)
      : Error("stuck_origin", what), origin_(origin), origin_id_(std::move(origin_id)) {}

  std::size_t origin() const noexcept { return origin_; }
  const std::string& origin_id() const noexcept { return origin_id_; }

private:
  std::size_t origin_;
  std::string origin_id_;
};

/// The 1-D search ran out of probes before reaching its tolerance.
class NonConvergence : public Error {
public:
  NonConvergence(const std::string& what, std::string trace_json)
      : Error("non_convergence", what), trace_json_(std::move(trace_json)) {}

  const std::string& trace_json() const noexcept { return trace_json_; }

private:
  std::string trace_json_;
};

} // namespace commute

#endif // COMMUTE_ERROR_HPP
