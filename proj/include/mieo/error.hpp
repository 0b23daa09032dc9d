#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mieo {

// Error categories map 1:1 onto CLI exit codes and C API status values.
enum class ErrorCode { usage = 1, validation = 2, runtime = 3 };

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail_usage(const std::string& msg) { throw Error(ErrorCode::usage, msg); }
[[noreturn]] inline void fail_validation(const std::string& msg) { throw Error(ErrorCode::validation, msg); }
[[noreturn]] inline void fail_runtime(const std::string& msg) { throw Error(ErrorCode::runtime, msg); }

}  // namespace mieo
