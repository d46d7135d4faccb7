#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fabric {

// UTC instant with millisecond resolution. The wire format everywhere is
// RFC 3339 with a 'Z' offset, e.g. "2024-03-01T08:30:00Z" or
// "2024-03-01T08:30:00.250Z" (at most 3 fraction digits).
class Instant {
 public:
  Instant() = default;
  static Instant from_millis(std::int64_t ms) { return Instant(ms); }
  static Instant from_seconds(std::int64_t s) { return Instant(s * 1000); }

  std::int64_t millis() const { return ms_; }
  std::int64_t seconds() const;  // floor

  Instant floor_to_hour() const;
  Instant floor_to_day() const;

  // "yyyy-mm-dd" of the UTC day.
  std::string date() const;
  std::string to_rfc3339() const;

  friend auto operator<=>(const Instant&, const Instant&) = default;

 private:
  explicit Instant(std::int64_t ms) : ms_(ms) {}
  std::int64_t ms_ = 0;
};

// Strict parse: full date-time, 'T' separator, 'Z' offset, optional
// 1..3-digit fraction. Returns nullopt on anything else.
std::optional<Instant> parse_rfc3339(std::string_view text);

Instant now_utc();

}  // namespace fabric
