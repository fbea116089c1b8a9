#pragma once

#include <stdexcept>
#include <string>

namespace esv {

/// Error taxonomy shared by the library and the CLI. The numeric value of
/// each class doubles as the process exit code.
enum class ErrorClass {
  validation = 2,
  capacity = 3,
  undefined_metric = 4,
  io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }
  int exit_code() const noexcept { return static_cast<int>(cls_); }

 private:
  ErrorClass cls_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(ErrorClass::validation, what) {}
};

struct CapacityError : Error {
  explicit CapacityError(const std::string& what) : Error(ErrorClass::capacity, what) {}
};

struct UndefinedMetricError : Error {
  explicit UndefinedMetricError(const std::string& what) : Error(ErrorClass::undefined_metric, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorClass::io, what) {}
};

/// Stable lowercase name for error lines and logs.
inline const char* error_class_name(ErrorClass cls) noexcept {
  switch (cls) {
    case ErrorClass::validation: return "validation";
    case ErrorClass::capacity: return "capacity";
    case ErrorClass::undefined_metric: return "undefined-metric";
    case ErrorClass::io: return "io";
  }
  return "error";
}

}  // namespace esv
