#pragma once

#include <stdexcept>
#include <string>

namespace sparsetile {

/// Base of every error raised by the library. Each subclass corresponds to
/// one failure category that callers (the CLI in particular) map to an exit
/// status or diagnostic.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

class UnsupportedInput : public Error {
public:
  using Error::Error;
};

class InvalidChain : public Error {
public:
  using Error::Error;
};

class DepthExceeded : public Error {
public:
  using Error::Error;
};

class InspectionError : public Error {
public:
  using Error::Error;
};

/// Recoloring did not converge within the round budget.
class NonTermination : public InspectionError {
public:
  using InspectionError::InspectionError;
};

class RegistrationError : public Error {
public:
  using Error::Error;
};

class ExecutionError : public Error {
public:
  using Error::Error;
};

class StaleSchedule : public ExecutionError {
public:
  using ExecutionError::ExecutionError;
};

class PartitionBug : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class VerificationFailure : public Error {
public:
  using Error::Error;
};

} // namespace sparsetile
