#pragma once

#include <stdexcept>
#include <string>

namespace nystab {

// Failure conditions reported by the library. The CLI prints the enum name on
// stderr and exits nonzero, so the names are part of the interface.
enum class Errc {
  NonFiniteInput,
  DimensionMismatch,
  RankOutOfRange,
  CountOutOfRange,
  ParamOutOfRange,
  NegativePivotDominant,
  PivotBreakdown,
  CholeskyBreakdown,
  SingularSubmatrix,
  RankDeficientSample,
  SolverSingular,
  MalformedLine,
  EmptyInput,
  SpecInvalid,
  ConfigInvalid,
  MatrixSourceUnavailable,
  IoError,
  NetworkError,
  ChecksumMismatch,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::RankOutOfRange: return "RankOutOfRange";
    case Errc::CountOutOfRange: return "CountOutOfRange";
    case Errc::ParamOutOfRange: return "ParamOutOfRange";
    case Errc::NegativePivotDominant: return "NegativePivotDominant";
    case Errc::PivotBreakdown: return "PivotBreakdown";
    case Errc::CholeskyBreakdown: return "CholeskyBreakdown";
    case Errc::SingularSubmatrix: return "SingularSubmatrix";
    case Errc::RankDeficientSample: return "RankDeficientSample";
    case Errc::SolverSingular: return "SolverSingular";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::SpecInvalid: return "SpecInvalid";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::MatrixSourceUnavailable: return "MatrixSourceUnavailable";
    case Errc::IoError: return "IoError";
    case Errc::NetworkError: return "NetworkError";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) raise(code, msg);
}

}  // namespace nystab
