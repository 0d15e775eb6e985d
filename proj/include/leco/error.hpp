#pragma once

#include <stdexcept>
#include <string>

namespace leco {

enum class errc {
  invalid_argument,
  out_of_range,
  context_required,
  underdetermined,
  singular_basis,
  too_short,
  oracle_size_limit,
  model_divergence,
  format_error,
  unmappable_character,
  mapping_overflow,
  not_sorted,
  insufficient_classes,
  parse_error,
  roundtrip_mismatch,
};

inline const char* to_string(errc code) {
  switch (code) {
    case errc::invalid_argument: return "invalid argument";
    case errc::out_of_range: return "index out of range";
    case errc::context_required: return "context required";
    case errc::underdetermined: return "underdetermined";
    case errc::singular_basis: return "singular basis";
    case errc::too_short: return "too short";
    case errc::oracle_size_limit: return "oracle size limit";
    case errc::model_divergence: return "model divergence";
    case errc::format_error: return "format error";
    case errc::unmappable_character: return "unmappable character";
    case errc::mapping_overflow: return "mapping overflow";
    case errc::not_sorted: return "not sorted";
    case errc::insufficient_classes: return "insufficient classes";
    case errc::parse_error: return "parse error";
    case errc::roundtrip_mismatch: return "roundtrip mismatch";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the `errc` codes so
/// callers can branch on the kind without parsing messages.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

}  // namespace leco
