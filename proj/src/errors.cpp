#include "mp4bag/errors.hpp"

#include <fmt/format.h>

namespace mp4bag {

Error::Error(ErrorClass cls, std::string kind, const std::string& message)
    : std::runtime_error(message), class_(cls), kind_(std::move(kind)) {}

ValidationError::ValidationError(std::string kind, std::string field, std::string value, const std::string& detail)
    : Error(ErrorClass::kValidation, kind,
            detail.empty() ? fmt::format("{}: field '{}' has invalid value '{}'", kind, field, value)
                           : fmt::format("{}: field '{}' has invalid value '{}' ({})", kind, field, value, detail)),
      field_(std::move(field)),
      value_(std::move(value)) {}

ParseError::ParseError(std::string location, const std::string& message)
    : Error(ErrorClass::kValidation, "parse", fmt::format("parse error at '{}': {}", location, message)),
      location_(std::move(location)) {}

IoError::IoError(std::string locator, const std::string& message)
    : Error(ErrorClass::kRuntime, "io", fmt::format("I/O error on '{}': {}", locator, message)),
      locator_(std::move(locator)) {}

ToolFailure::ToolFailure(std::string tool, int exit_code, std::string diagnostics)
    : Error(ErrorClass::kRuntime, "tool-failure",
            fmt::format("'{}' exited with status {}{}{}", tool, exit_code, diagnostics.empty() ? "" : ": ", diagnostics)),
      exit_code_(exit_code),
      diagnostics_(std::move(diagnostics)) {}

}  // namespace mp4bag
