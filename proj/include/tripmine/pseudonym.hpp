#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace tripmine {

/// De-identified user key: 64 lowercase hex characters (32 bytes of keyed
/// hash output). Raw identifiers are never representable as a Pseudonym.
class Pseudonym {
 public:
  static constexpr std::size_t kHexLength = 64;

  Pseudonym() = default;
  /// Throws InvalidArgument unless text is 64 lowercase hex characters.
  explicit Pseudonym(std::string hex);

  static bool is_valid(std::string_view text) noexcept;

  const std::string& value() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const Pseudonym&, const Pseudonym&) = default;

 private:
  std::string value_;
};

}  // namespace tripmine
