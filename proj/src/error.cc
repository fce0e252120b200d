#include "sv6d/error.h"

namespace sv6d {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kParse: return "parse_error";
    case ErrorKind::kConfig: return "config_error";
    case ErrorKind::kTaxonomy: return "taxonomy_error";
    case ErrorKind::kInvalidDocument: return "invalid_document";
    case ErrorKind::kUnknownLabel: return "unknown_label";
    case ErrorKind::kGeneration: return "generation_error";
    case ErrorKind::kUnsupported: return "unsupported_task";
    case ErrorKind::kIo: return "io_error";
  }
  return "unknown";
}

}  // namespace sv6d
