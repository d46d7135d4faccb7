#include "fabric/time.hpp"

#include <chrono>
#include <cstdio>

namespace fabric {
namespace {

constexpr std::int64_t kMsPerDay = 86400000;

// Days since 1970-01-01 from a civil date (Gregorian, proleptic).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yy + (m <= 2));
}

bool days_in_month_ok(int y, int m, int d) {
  static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m < 1 || m > 12 || d < 1) return false;
  int max = lengths[m - 1];
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (m == 2 && leap) max = 29;
  return d <= max;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

}  // namespace

std::int64_t Instant::seconds() const { return floor_div(ms_, 1000); }

Instant Instant::floor_to_hour() const { return from_millis(floor_div(ms_, 3600000) * 3600000); }

Instant Instant::floor_to_day() const { return from_millis(floor_div(ms_, kMsPerDay) * kMsPerDay); }

std::string Instant::date() const { return to_rfc3339().substr(0, 10); }

std::string Instant::to_rfc3339() const {
  const std::int64_t day = floor_div(ms_, kMsPerDay);
  const std::int64_t rem = floor_mod(ms_, kMsPerDay);
  int y;
  unsigned mo, d;
  civil_from_days(day, y, mo, d);
  const int h = static_cast<int>(rem / 3600000);
  const int mi = static_cast<int>(rem / 60000 % 60);
  const int s = static_cast<int>(rem / 1000 % 60);
  const int frac = static_cast<int>(rem % 1000);
  char buf[40];
  if (frac == 0) {
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", y, mo, d, h, mi, s);
  } else {
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", y, mo, d, h, mi, s,
                  frac);
  }
  return buf;
}

std::optional<Instant> parse_rfc3339(std::string_view text) {
  const auto digits = [&](std::size_t pos, int n, int& out) {
    out = 0;
    if (pos + n > text.size()) return false;
    for (int i = 0; i < n; ++i) {
      const char c = text[pos + i];
      if (c < '0' || c > '9') return false;
      out = out * 10 + (c - '0');
    }
    return true;
  };
  int y, mo, d, h, mi, s;
  if (!digits(0, 4, y) || text.size() < 20 || text[4] != '-' || !digits(5, 2, mo) ||
      text[7] != '-' || !digits(8, 2, d) || text[10] != 'T' || !digits(11, 2, h) ||
      text[13] != ':' || !digits(14, 2, mi) || text[16] != ':' || !digits(17, 2, s)) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  int frac_ms = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int n = 0, value = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      value = value * 10 + (text[pos] - '0');
      ++n;
      ++pos;
    }
    if (n < 1 || n > 3) return std::nullopt;
    for (int i = n; i < 3; ++i) value *= 10;
    frac_ms = value;
  }
  if (pos + 1 != text.size() || text[pos] != 'Z') return std::nullopt;
  if (!days_in_month_ok(y, mo, d) || h > 23 || mi > 59 || s > 59) return std::nullopt;
  const std::int64_t ms =
      (days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s) * 1000 + frac_ms;
  return Instant::from_millis(ms);
}

Instant now_utc() {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
  return Instant::from_millis(ms);
}

}  // namespace fabric
