#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace transportlab {

enum class Err {
  CycleDetected,
  DuplicateNode,
  DanglingEdge,
  NotADag,
  UnknownNode,
  InterveneOnUnmeasured,
  InvalidQuery,
  UnknownScenario,
  PositivityViolation,
  InvalidSpec,
  InvalidEstimand,
  EmptyDataset,
  NonfiniteWeight,
  NoParticipants,
  NoNonParticipants,
  MismatchedEstimands,
  ParseError,
  IoError,
};

std::string_view err_name(Err e);

/// Library-wide exception carrying a stable error code plus a human message.
class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

}  // namespace transportlab
