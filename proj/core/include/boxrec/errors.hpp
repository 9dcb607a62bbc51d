#pragma once

#include <stdexcept>
#include <string>

namespace boxrec {

/// A precondition of an operation was not met (bad sizes, empty inputs, invalid config).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or unreadable input (files, TSV lines, config values).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A line that failed to parse. Carries the 1-based line number.
class ParseError : public InputError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : InputError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// An entity index or external id that does not exist.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

#define BOXREC_REQUIRE(cond, msg)                          \
  do {                                                     \
    if (!(cond)) throw ::boxrec::ContractViolation(msg);   \
  } while (0)

}  // namespace boxrec
