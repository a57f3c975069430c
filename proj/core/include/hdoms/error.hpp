#pragma once

#include <stdexcept>
#include <string>

namespace hdoms {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values or combinations (caught before any work runs).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Input file parsed but contained nothing usable, or a binary file is corrupt.
class FormatError : public Error {
public:
  using Error::Error;
};

/// A spectrum has no usable peaks after filtering. Callers usually count and skip.
class EmptySpectrum : public Error {
public:
  using Error::Error;
};

class MissingId : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class RowLimitExceeded : public Error {
public:
  using Error::Error;
};

class ChunkMismatch : public Error {
public:
  using Error::Error;
};

/// Pipeline failure tagged with the stage that raised it.
class StageError : public Error {
public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

  [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

}  // namespace hdoms
