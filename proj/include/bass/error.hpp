#pragma once

#include <stdexcept>
#include <string>

namespace bass {

enum class Errc {
  duplicate_id,
  disconnected_graph,
  non_positive_capacity,
  no_path,
  insufficient_residual,
  unknown_reservation,
  zero_bandwidth,
  no_available_node,
  undefined_rate,
  infeasible_schedule,
  inconsistent_schedule,
  budget_exceeded,
  parse_error,
  validation_error,
  unmapped_class,
};

/// All library errors derive from this; `code()` drives the CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

/// 0 success, 2 parse/validation, 3 infeasible/inconsistent schedule, 4 oracle budget.
inline int exit_code(Errc code) {
  switch (code) {
    case Errc::infeasible_schedule:
    case Errc::inconsistent_schedule:
      return 3;
    case Errc::budget_exceeded:
      return 4;
    default:
      return 2;
  }
}

}  // namespace bass
