#pragma once

#include <stdexcept>
#include <string>

namespace icsatk {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A value outside the domain an operation accepts (non-finite input, bad index).
class InputDomainError : public Error {
public:
  using Error::Error;
};

/// Violated precondition on a function argument (length mismatch, empty input).
class ContractError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent attack schedule.
class ScheduleError : public Error {
public:
  using Error::Error;
};

/// Genome value outside the problem alphabet.
class DecodeError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration (plant, evolution, experiment, missing signal range).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A detector could not be trained on the given data.
class TrainingError : public Error {
public:
  using Error::Error;
};

/// A quality metric or statistic is undefined for the given input.
class MetricError : public Error {
public:
  using Error::Error;
};

/// Fitness evaluation failed.
class EvaluationError : public Error {
public:
  using Error::Error;
};

/// File could not be read or written; the message carries the path.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace icsatk
