#pragma once

#include <stdexcept>
#include <string>

namespace sv6d {

enum class ErrorKind {
  kInvalidArgument,
  kParse,
  kConfig,
  kTaxonomy,
  kInvalidDocument,
  kUnknownLabel,
  kGeneration,
  kUnsupported,
  kIo,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the engine. `field` carries a JSON-pointer-like path
// ("overrides.alpha", "shots[2].end_s") when the error is tied to an input field.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string field = {})
      : std::runtime_error(message), kind_(kind), field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace sv6d
