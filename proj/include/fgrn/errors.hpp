#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fgrn {

// Numeric failures map to CLI exit code 1, input failures to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

/// A message with no positive mass: contradictory evidence met a zero belief.
class AllZeroMessage : public NumericError {
 public:
  AllZeroMessage() : NumericError("all-zero message") {}
  explicit AllZeroMessage(const std::string& where)
      : NumericError("all-zero message: " + where) {}
};

/// Every sample handed to an ML update had a zero denominator.
class NoValidSamples : public NumericError {
 public:
  NoValidSamples() : NumericError("no valid samples for ML update") {}
};

class LengthMismatch : public InputError {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : InputError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class EmptyDims : public InputError {
 public:
  EmptyDims() : InputError("empty dimension list") {}
};

class Paused : public InputError {
 public:
  Paused() : InputError("SISO block is paused") {}
};

class NotInBatchMode : public InputError {
 public:
  NotInBatchMode() : InputError("SISO block is not in batch mode") {}
};

class EmptyDataset : public InputError {
 public:
  EmptyDataset() : InputError("empty dataset") {}
};

class ShapeMismatch : public InputError {
 public:
  explicit ShapeMismatch(const std::string& what) : InputError("shape mismatch: " + what) {}
};

class InvalidSpec : public InputError {
 public:
  explicit InvalidSpec(const std::string& what) : InputError("invalid spec: " + what) {}
};

class IndexOutOfRange : public InputError {
 public:
  IndexOutOfRange(std::size_t index, std::size_t bound)
      : InputError("index " + std::to_string(index) + " out of range [0," +
                   std::to_string(bound) + ")") {}
};

class TooFewRecords : public InputError {
 public:
  explicit TooFewRecords(std::size_t n)
      : InputError("too few records to split: " + std::to_string(n)) {}
};

/// Row and column are 1-based; column 0 means "whole row".
class ParseError : public InputError {
 public:
  ParseError(std::size_t row, std::size_t col, const std::string& what)
      : InputError("parse error at row " + std::to_string(row) + ", column " +
                   std::to_string(col) + ": " + what),
        row_(row),
        col_(col) {}
  explicit ParseError(const std::string& what) : InputError("parse error: " + what) {}

  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_ = 0;
  std::size_t col_ = 0;
};

class UnknownLabel : public InputError {
 public:
  UnknownLabel(std::size_t row, std::size_t col, const std::string& label)
      : InputError("unknown label '" + label + "' at row " + std::to_string(row) +
                   ", column " + std::to_string(col)),
        row_(row),
        col_(col) {}
  explicit UnknownLabel(const std::string& what) : InputError("unknown label: " + what) {}

  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_ = 0;
  std::size_t col_ = 0;
};

}  // namespace fgrn
