#pragma once

#include <stdexcept>
#include <string>

namespace mp4bag {

// Broad failure classes. Each maps onto a process exit code in the CLI.
enum class ErrorClass {
  kValidation = 1,   // bad input data, bad parameters, usage
  kEnvironment = 2,  // missing external tool or unreadable environment
  kRuntime = 3,      // a step failed while running (encoder crash, I/O, sink)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string kind, const std::string& message);

  ErrorClass error_class() const noexcept { return class_; }
  // Short machine-readable tag, e.g. "invalid-mosaic" or "intrinsics-shape".
  const std::string& kind() const noexcept { return kind_; }

 private:
  ErrorClass class_;
  std::string kind_;
};

// Input violates a documented invariant. `field` and `value` are always named.
class ValidationError : public Error {
 public:
  ValidationError(std::string kind, std::string field, std::string value, const std::string& detail = {});

  const std::string& field() const noexcept { return field_; }
  const std::string& value() const noexcept { return value_; }

 private:
  std::string field_;
  std::string value_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& message) : Error(ErrorClass::kValidation, "parameter", message) {}
};

class ParseError : public Error {
 public:
  ParseError(std::string location, const std::string& message);
  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

class IoError : public Error {
 public:
  IoError(std::string locator, const std::string& message);
  const std::string& locator() const noexcept { return locator_; }

 private:
  std::string locator_;
};

class EnvironmentError : public Error {
 public:
  explicit EnvironmentError(const std::string& message) : Error(ErrorClass::kEnvironment, "environment", message) {}
};

// External encoder/decoder/scorer exited non-zero. Carries the tail of its output.
class ToolFailure : public Error {
 public:
  ToolFailure(std::string tool, int exit_code, std::string diagnostics);
  int exit_code() const noexcept { return exit_code_; }
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  int exit_code_;
  std::string diagnostics_;
};

class RuntimeFailure : public Error {
 public:
  RuntimeFailure(std::string kind, const std::string& message) : Error(ErrorClass::kRuntime, std::move(kind), message) {}
};

}  // namespace mp4bag
