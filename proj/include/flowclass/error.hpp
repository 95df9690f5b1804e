#pragma once

#include <stdexcept>
#include <string>

namespace flowclass {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  EmptyInput,
  Schema,
  Parse,
  Bounds,
  InsufficientData,
  Config,
  Contract,
  DegenerateLabel,
  DegenerateBatch,
  Divergence,
  Format,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when training produces a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, int batch, const std::string& what)
      : Error(ErrorKind::Divergence, what), epoch_(epoch), batch_(batch) {}

  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }

 private:
  int epoch_;
  int batch_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace flowclass
