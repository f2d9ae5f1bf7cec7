#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lifesim {

/// Seconds since the Unix epoch, UTC. Local rendering applies an explicit
/// per-record zone offset; no process-global timezone state is consulted.
struct Timestamp {
    std::int64_t epoch_sec = 0;

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct ParsedTimestamp {
    Timestamp ts;
    int tz_offset_min = 0;  // offset present in the input, 0 when absent (UTC assumed)
};

/// Parses "YYYY-MM-DD HH:MM:SS" / "YYYY-MM-DDTHH:MM:SS" with optional "Z" or
/// "+HH:MM"/"-HH:MM" suffix. Throws ValidationError on malformed input.
ParsedTimestamp parse_iso8601(std::string_view text);

std::int64_t days_from_civil(int year, unsigned month, unsigned day);
void civil_from_days(std::int64_t days, int& year, unsigned& month, unsigned& day);

/// 0 = Sunday ... 6 = Saturday.
int weekday_index(Timestamp ts, int tz_offset_min);
std::string_view weekday_name(int index);

/// "YYYY-MM-DD HH:MM:SS" in the given zone.
std::string format_local(Timestamp ts, int tz_offset_min);
/// "YYYY-MM-DD" in the given zone.
std::string format_local_date(Timestamp ts, int tz_offset_min);
/// "YYYY-MM-DD HH:MM:SS, Weekday" in the given zone.
std::string format_local_with_weekday(Timestamp ts, int tz_offset_min);

}  // namespace lifesim
