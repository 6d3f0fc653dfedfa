#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dissect {

// Base class for all library errors. CLI maps subtypes onto stable exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroVectorError : public Error {
 public:
  ZeroVectorError() : Error("zero vector: norm below 1e-12") {}
};

class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

class EmptyBatchError : public Error {
 public:
  EmptyBatchError() : Error("empty batch") {}
};

class EmptyGalleryError : public Error {
 public:
  EmptyGalleryError() : Error("empty gallery") {}
};

class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

class ConfigMismatchError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::uint64_t offset = 0)
      : Error(what), offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_ = 0;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class CountMismatchError : public Error {
 public:
  using Error::Error;
};

class AlreadyInitializedError : public Error {
 public:
  AlreadyInitializedError() : Error("ledger history already initialized") {}
};

class MissingScoreError : public Error {
 public:
  explicit MissingScoreError(std::uint64_t id)
      : Error("missing hist/curr score for sample id " + std::to_string(id)), id_(id) {}
  std::uint64_t id() const { return id_; }

 private:
  std::uint64_t id_;
};

class InvalidBetaError : public Error {
 public:
  explicit InvalidBetaError(double beta)
      : Error("beta must lie in (0,1), got " + std::to_string(beta)) {}
};

class MissingContextError : public Error {
 public:
  explicit MissingContextError(const std::string& field)
      : Error("selection context missing required field: " + field), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class InvalidStrategyError : public Error {
 public:
  using Error::Error;
};

class GroundTruthUnavailableError : public Error {
 public:
  GroundTruthUnavailableError() : Error("dataset carries no ground-truth noise flags") {}
};

class MetricMissingError : public Error {
 public:
  using Error::Error;
};

class NumericalDivergenceError : public Error {
 public:
  NumericalDivergenceError(int epoch, std::uint64_t step, double loss)
      : Error("numerical divergence at epoch " + std::to_string(epoch) + ", step " +
              std::to_string(step) + ": loss = " + std::to_string(loss)),
        epoch_(epoch),
        step_(step) {}
  int epoch() const { return epoch_; }
  std::uint64_t step() const { return step_; }

 private:
  int epoch_;
  std::uint64_t step_;
};

}  // namespace dissect
