#include "transportlab/errors.hpp"

namespace transportlab {

std::string_view err_name(Err e) {
  switch (e) {
    case Err::CycleDetected: return "CycleDetected";
    case Err::DuplicateNode: return "DuplicateNode";
    case Err::DanglingEdge: return "DanglingEdge";
    case Err::NotADag: return "NotADag";
    case Err::UnknownNode: return "UnknownNode";
    case Err::InterveneOnUnmeasured: return "InterveneOnUnmeasured";
    case Err::InvalidQuery: return "InvalidQuery";
    case Err::UnknownScenario: return "UnknownScenario";
    case Err::PositivityViolation: return "PositivityViolation";
    case Err::InvalidSpec: return "InvalidSpec";
    case Err::InvalidEstimand: return "InvalidEstimand";
    case Err::EmptyDataset: return "EmptyDataset";
    case Err::NonfiniteWeight: return "NonfiniteWeight";
    case Err::NoParticipants: return "NoParticipants";
    case Err::NoNonParticipants: return "NoNonParticipants";
    case Err::MismatchedEstimands: return "MismatchedEstimands";
    case Err::ParseError: return "ParseError";
    case Err::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace transportlab
