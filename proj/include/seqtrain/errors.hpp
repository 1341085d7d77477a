#ifndef SEQTRAIN_ERRORS_HPP_
#define SEQTRAIN_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqtrain {

/// Raised when a precondition of a library call does not hold
/// (dimension mismatch, index out of range, invalid hyperparameter).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t stage, std::size_t epoch)
      : std::runtime_error("training diverged (non-finite loss) at stage " + std::to_string(stage) +
                           ", epoch " + std::to_string(epoch)),
        stage_(stage),
        epoch_(epoch) {}

  std::size_t stage() const { return stage_; }
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t stage_;
  std::size_t epoch_;
};

/// Malformed text input (CSV, model file, config). Line numbers are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace seqtrain

#endif  // SEQTRAIN_ERRORS_HPP_
