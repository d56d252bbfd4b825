#pragma once

#include <stdexcept>
#include <string>

namespace refform {

// All recoverable failures in the toolkit surface as this type. The CLI
// prefixes the message with the pipeline stage that raised it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

}  // namespace refform
