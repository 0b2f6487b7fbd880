#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bnmarket {

// Error categories surfaced by the engine. The service and CLI map these
// onto wire codes and exit statuses.
enum class ErrorCode {
  kBadSpec,                 // malformed network, security, or argument
  kUnknownVariable,
  kDegeneratePrice,         // trade against a price of exactly 0 or 1
  kNotStructurePreserving,  // exact update requested for an incompatible security
  kCompatCheckTooLarge,
  kNullEvent,               // conditioning on a probability-zero event
  kSizeLimit,               // dense oracle table would exceed its guard
  kOutOfRange,              // budget or quantity outside the achievable range
  kNotFound,
  kStaleQuote,
};

std::string_view error_code_name(ErrorCode code);

class MarketError : public std::runtime_error {
 public:
  MarketError(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parse failure inside a security string. offset is a byte offset into the
// source text.
class ParseError : public MarketError {
 public:
  ParseError(ErrorCode code, std::size_t offset, const std::string& detail);

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace bnmarket
