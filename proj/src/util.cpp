#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lifesim/errors.hpp"
#include "lifesim/hash.hpp"
#include "lifesim/jsonl.hpp"
#include "lifesim/rng.hpp"
#include "lifesim/timeutil.hpp"

namespace lifesim {

// ---------------------------------------------------------------------------
// hashing
// ---------------------------------------------------------------------------

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf);
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read file for hashing: " + path.string());
    std::uint64_t h = kFnvOffset64;
    char buf[8192];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
        if (!in) break;
    }
    return h;
}

// ---------------------------------------------------------------------------
// rng
// ---------------------------------------------------------------------------

std::size_t StreamRng::categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw Error("categorical draw: negative weight");
        total += w;
    }
    if (total <= 0.0) throw Error("categorical draw: empty support");
    double u = uniform01() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        if (u < cum) return i;
    }
    return weights.size() - 1;  // u landed on accumulated rounding slack
}

double StreamRng::gaussian() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 1e-300) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// ---------------------------------------------------------------------------
// civil time
// ---------------------------------------------------------------------------

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, unsigned& month, unsigned& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = doy - (153 * mp + 2) / 5 + 1;
    month = mp + (mp < 10 ? 3 : -9);
    year = static_cast<int>(y + (month <= 2));
}

namespace {

int parse_int_field(std::string_view s, std::size_t pos, std::size_t len) {
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
            throw ValidationError("malformed timestamp: " + std::string(s));
        value = value * 10 + (s[i] - '0');
    }
    return value;
}

}  // namespace

ParsedTimestamp parse_iso8601(std::string_view text) {
    // YYYY-MM-DD[T ]HH:MM:SS[Z|+HH:MM|-HH:MM]
    if (text.size() < 19 || text[4] != '-' || text[7] != '-' ||
        (text[10] != 'T' && text[10] != ' ') || text[13] != ':' || text[16] != ':')
        throw ValidationError("malformed timestamp: " + std::string(text));
    int year = parse_int_field(text, 0, 4);
    unsigned month = static_cast<unsigned>(parse_int_field(text, 5, 2));
    unsigned day = static_cast<unsigned>(parse_int_field(text, 8, 2));
    int hour = parse_int_field(text, 11, 2);
    int minute = parse_int_field(text, 14, 2);
    int second = parse_int_field(text, 17, 2);
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 ||
        second > 60)
        throw ValidationError("timestamp field out of range: " + std::string(text));

    int offset_min = 0;
    if (text.size() > 19) {
        std::string_view tail = text.substr(19);
        if (tail == "Z") {
            offset_min = 0;
        } else if ((tail[0] == '+' || tail[0] == '-') && tail.size() == 6 && tail[3] == ':') {
            int oh = parse_int_field(tail, 1, 2);
            int om = parse_int_field(tail, 4, 2);
            offset_min = oh * 60 + om;
            if (tail[0] == '-') offset_min = -offset_min;
        } else {
            throw ValidationError("malformed timestamp zone: " + std::string(text));
        }
    }

    std::int64_t days = days_from_civil(year, month, day);
    std::int64_t local_sec = days * 86400 + hour * 3600 + minute * 60 + second;
    return ParsedTimestamp{Timestamp{local_sec - std::int64_t(offset_min) * 60}, offset_min};
}

int weekday_index(Timestamp ts, int tz_offset_min) {
    std::int64_t local = ts.epoch_sec + std::int64_t(tz_offset_min) * 60;
    std::int64_t days = local / 86400;
    if (local < 0 && local % 86400 != 0) --days;
    // 1970-01-01 was a Thursday (index 4).
    std::int64_t w = (days + 4) % 7;
    if (w < 0) w += 7;
    return static_cast<int>(w);
}

std::string_view weekday_name(int index) {
    static constexpr std::string_view names[7] = {"Sunday",   "Monday", "Tuesday",
                                                  "Wednesday", "Thursday", "Friday",
                                                  "Saturday"};
    return names[index % 7];
}

namespace {

void split_local(Timestamp ts, int tz_offset_min, int& year, unsigned& month, unsigned& day,
                 int& hour, int& minute, int& second) {
    std::int64_t local = ts.epoch_sec + std::int64_t(tz_offset_min) * 60;
    std::int64_t days = local / 86400;
    std::int64_t rem = local % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    civil_from_days(days, year, month, day);
    hour = static_cast<int>(rem / 3600);
    minute = static_cast<int>((rem % 3600) / 60);
    second = static_cast<int>(rem % 60);
}

}  // namespace

std::string format_local(Timestamp ts, int tz_offset_min) {
    int y, h, mi, s;
    unsigned mo, d;
    split_local(ts, tz_offset_min, y, mo, d, h, mi, s);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02d:%02d:%02d", y, mo, d, h, mi, s);
    return buf;
}

std::string format_local_date(Timestamp ts, int tz_offset_min) {
    int y, h, mi, s;
    unsigned mo, d;
    split_local(ts, tz_offset_min, y, mo, d, h, mi, s);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, mo, d);
    return buf;
}

std::string format_local_with_weekday(Timestamp ts, int tz_offset_min) {
    return format_local(ts, tz_offset_min) + ", " +
           std::string(weekday_name(weekday_index(ts, tz_offset_min)));
}

// ---------------------------------------------------------------------------
// jsonl
// ---------------------------------------------------------------------------

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    std::vector<Json> out;
    for_each_jsonl(path, [&](std::size_t, const Json& j) { out.push_back(j); });
    return out;
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool blank = true;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) {
                blank = false;
                break;
            }
        if (blank) continue;
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed record");
        fn(line_no, j);
    }
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path.string());
    for (const Json& j : records) out << j.dump() << '\n';
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path.string());
    out << content;
}

bool json_flag(const Json& v, const char* field) {
    const Json& f = v.at(field);
    if (f.is_boolean()) return f.get<bool>();
    if (f.is_string()) {
        std::string s = f.get<std::string>();
        if (s == "true" || s == "True") return true;
        if (s == "false" || s == "False") return false;
    }
    throw ValidationError(std::string(field) + " must be a boolean");
}

Json provenance_record(const std::string& config_hash, std::uint64_t seed) {
    return Json{{"record", "provenance"}, {"config_hash", config_hash}, {"seed", seed}};
}

bool is_provenance_record(const Json& record) {
    return record.is_object() && record.contains("record") &&
           record.at("record").is_string() &&
           record.at("record").get<std::string>() == "provenance";
}

}  // namespace lifesim
