#pragma once

#include <stdexcept>
#include <string>

namespace hrom {

enum class ErrorKind {
  InvalidInput,
  UnstableLinearization,
  InfeasibleTail,
  DivergedState,
  NoImpact,
  NoFixedPoint,
  EmptyDataset,
  TrainingDiverged,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base class for every failure raised by the library. The kind tells the CLI
/// which exit code to use and lets tests match on the failure category.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class TypedError : public Error {
 public:
  explicit TypedError(const std::string& what) : Error(K, what) {}
};

using InvalidInput = TypedError<ErrorKind::InvalidInput>;
using InfeasibleTail = TypedError<ErrorKind::InfeasibleTail>;
using DivergedState = TypedError<ErrorKind::DivergedState>;
using NoImpact = TypedError<ErrorKind::NoImpact>;
using NoFixedPoint = TypedError<ErrorKind::NoFixedPoint>;
using EmptyDataset = TypedError<ErrorKind::EmptyDataset>;
using TrainingDiverged = TypedError<ErrorKind::TrainingDiverged>;
using IoError = TypedError<ErrorKind::Io>;

/// Raised when a linearization is not Schur stable; carries the measured
/// spectral radius so callers can report it.
class UnstableLinearization : public Error {
 public:
  UnstableLinearization(double spectral_radius, const std::string& what)
      : Error(ErrorKind::UnstableLinearization, what),
        spectral_radius_(spectral_radius) {}
  double spectral_radius() const noexcept { return spectral_radius_; }

 private:
  double spectral_radius_;
};

}  // namespace hrom
