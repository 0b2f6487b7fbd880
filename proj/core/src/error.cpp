#include "bnmarket/error.hpp"

namespace bnmarket {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadSpec: return "bad_spec";
    case ErrorCode::kUnknownVariable: return "bad_spec";
    case ErrorCode::kDegeneratePrice: return "degenerate_price";
    case ErrorCode::kNotStructurePreserving: return "not_structure_preserving";
    case ErrorCode::kCompatCheckTooLarge: return "compat_check_too_large";
    case ErrorCode::kNullEvent: return "null_event";
    case ErrorCode::kSizeLimit: return "bad_spec";
    case ErrorCode::kOutOfRange: return "bad_request";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kStaleQuote: return "stale_quote";
  }
  return "internal";
}

ParseError::ParseError(ErrorCode code, std::size_t offset,
                       const std::string& detail)
    : MarketError(code, "at byte " + std::to_string(offset) + ": " + detail),
      offset_(offset) {}

}  // namespace bnmarket
