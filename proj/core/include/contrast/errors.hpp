#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace contrast {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroNormRow : public Error {
 public:
  explicit ZeroNormRow(std::size_t row)
      : Error("row " + std::to_string(row) + " has (near-)zero norm"), row(row) {}
  std::size_t row;
};

class SimilarityOutOfRange : public Error {
 public:
  explicit SimilarityOutOfRange(double value)
      : Error("similarity " + std::to_string(value) + " outside [-1, 1]"), value(value) {}
  double value;
};

class EmptyNegatives : public Error {
 public:
  EmptyNegatives() : Error("logits row has no negatives") {}
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class NonPositiveTau : public Error {
 public:
  explicit NonPositiveTau(double tau)
      : Error("temperature must be > 0, got " + std::to_string(tau)), tau(tau) {}
  double tau;
};

class EmptyBatch : public Error {
 public:
  EmptyBatch() : Error("batch contains no rows") {}
};

class BatchTooSmall : public Error {
 public:
  explicit BatchTooSmall(std::size_t n)
      : Error("in-batch contrast needs N >= 2, got N = " + std::to_string(n)), n(n) {}
  std::size_t n;
};

class EmptyInput : public Error {
 public:
  EmptyInput() : Error("input sequence is empty") {}
};

class EmptyGrid : public Error {
 public:
  EmptyGrid() : Error("sweep grid is empty") {}
};

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

class NonFiniteOutput : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class FileNotFound : public Error {
 public:
  explicit FileNotFound(const std::string& path) : Error("file not found: " + path) {}
};

class MalformedRecord : public Error {
 public:
  using Error::Error;
};

class LabelOutOfRange : public Error {
 public:
  explicit LabelOutOfRange(int label)
      : Error("class label " + std::to_string(label) + " out of range"), label(label) {}
  int label;
};

}  // namespace contrast
