#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace home {

enum class ErrorCode {
  kInvalidArgument,
  kOracleFailure,
  kSolverDiverged,
  kResourceLimit,
  kIoFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for everything thrown by the library. The code lets
/// callers (notably the CLI) map failures to exit statuses without string
/// matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::kInvalidArgument, what) {}
};

class OracleFailure : public Error {
 public:
  explicit OracleFailure(const std::string& what)
      : Error(ErrorCode::kOracleFailure, what) {}
};

class SolverDiverged : public Error {
 public:
  explicit SolverDiverged(const std::string& what)
      : Error(ErrorCode::kSolverDiverged, what) {}
};

class ResourceLimit : public Error {
 public:
  explicit ResourceLimit(const std::string& what)
      : Error(ErrorCode::kResourceLimit, what) {}
};

class IoFailure : public Error {
 public:
  explicit IoFailure(const std::string& what)
      : Error(ErrorCode::kIoFailure, what) {}
};

}  // namespace home
