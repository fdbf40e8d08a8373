#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mlmem {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (dimension mismatch, bad label, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// A parameter became NaN/Inf during optimization.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, std::size_t step)
      : Error("training diverged at epoch " + std::to_string(epoch) + ", step " +
              std::to_string(step)),
        epoch_(epoch),
        step_(step) {}
  int epoch() const { return epoch_; }
  std::size_t step() const { return step_; }

 private:
  int epoch_;
  std::size_t step_;
};

// Payload does not fit the carrier (parameters, synthetic points, bit budget).
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Malformed file. Carries the path and the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& path, std::uint64_t offset, const std::string& what)
      : Error(path + " (byte " + std::to_string(offset) + "): " + what),
        path_(path),
        offset_(offset) {}
  const std::string& path() const { return path_; }
  std::uint64_t offset() const { return offset_; }

 private:
  std::string path_;
  std::uint64_t offset_;
};

}  // namespace mlmem
