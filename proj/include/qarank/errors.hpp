#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qarank {

/// Root of every error the library raises.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Errors caused by bad user input (files, configs, shapes). The CLI maps
/// these to exit code 2.
class InputError : public Error {
  public:
    using Error::Error;
};

class FileNotFound : public InputError {
  public:
    explicit FileNotFound(const std::string& path) : InputError("file not found: " + path), path_(path) {}
    const std::string& path() const noexcept { return path_; }

  private:
    std::string path_;
};

/// Bad JSON, missing fields, non-finite scores. `location` is the record
/// index (JSON arrays) or 1-based line number (line-oriented formats).
class MalformedFormat : public InputError {
  public:
    MalformedFormat(const std::string& source, std::size_t location, const std::string& what)
        : InputError(source + ":" + std::to_string(location) + ": " + what), location_(location) {}
    explicit MalformedFormat(const std::string& what) : InputError(what) {}

    std::size_t location() const noexcept { return location_; }

  private:
    std::size_t location_ = 0;
};

class IoError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public InputError {
  public:
    using InputError::InputError;
};

class ShapeMismatch : public InputError {
  public:
    using InputError::InputError;
};

class NonFiniteValue : public InputError {
  public:
    explicit NonFiniteValue(std::size_t row)
        : InputError("non-finite value in row " + std::to_string(row)), row_(row) {}
    std::size_t row() const noexcept { return row_; }

  private:
    std::size_t row_;
};

class DimMismatch : public InputError {
  public:
    DimMismatch(std::size_t expected, std::size_t actual)
        : InputError("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                     std::to_string(actual)) {}
};

class ZeroVector : public InputError {
  public:
    ZeroVector() : InputError("zero vector is not allowed under cosine similarity") {}
};

class LengthMismatch : public InputError {
  public:
    using InputError::InputError;
};

class EmptyDataset : public InputError {
  public:
    EmptyDataset() : InputError("dataset has no documents") {}
};

/// A scorer, comparator or window scorer could not produce a result.
class ScorerFailure : public Error {
  public:
    using Error::Error;
};

/// A window scorer or remote re-ranker answered with something that is not
/// a permutation of the ids it was given.
class PermutationViolation : public ScorerFailure {
  public:
    using ScorerFailure::ScorerFailure;
};

/// Network-level failure (connect, timeout, 5xx, 429). Retryable.
class TransportError : public ScorerFailure {
  public:
    using ScorerFailure::ScorerFailure;
};

/// The remote answered, but not in the agreed wire format. Not retried.
class ProtocolError : public ScorerFailure {
  public:
    using ScorerFailure::ScorerFailure;
};

}  // namespace qarank
