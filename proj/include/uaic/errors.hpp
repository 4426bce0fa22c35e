#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uaic {

/// Malformed or inconsistent input data (files, checkpoints, configs).
/// `line` is 1-based when the error is tied to a line of a text file, else 0.
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

} // namespace uaic
