#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sgm {

/// Thrown on precondition violations and unrecoverable I/O problems.
/// Recoverable conditions (program execution, parsing) are status values instead.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(what);
}

}  // namespace sgm
