#pragma once

// Projection of full tweet objects onto the eight-field archive record.

#include <cstdint>
#include <string>
#include <string_view>

#include "tweetvault/civil_time.hpp"
#include "tweetvault/io.hpp"
#include "tweetvault/tweet.hpp"

namespace tweetvault {

// Parses `EEE MMM dd HH:mm:ss ±ZZZZ yyyy` into UTC epoch milliseconds. The
// weekday must agree with the written (local) date.
inline EpochMs parse_created_at(std::string_view s) {
  const std::string input(s);
  auto fail = [&](const char* why) { throw TimeParseError(std::string("bad created_at (") + why + ")", input); };
  if (s.size() != 30) fail("length");
  if (s[3] != ' ' || s[7] != ' ' || s[10] != ' ' || s[13] != ':' || s[16] != ':' || s[19] != ' ' || s[25] != ' ')
    fail("layout");
  int weekday = -1;
  for (int i = 0; i < 7; ++i)
    if (s.substr(0, 3) == kWeekdayNames[i]) weekday = i;
  if (weekday < 0) fail("weekday");
  CivilDateTime t;
  t.date.month = 0;
  for (int i = 0; i < 12; ++i)
    if (s.substr(4, 3) == kMonthNames[i]) t.date.month = i + 1;
  if (t.date.month == 0) fail("month");
  int off_h = 0, off_m = 0;
  if (!detail::read_digits(s, 8, 2, t.date.day) || !detail::read_digits(s, 11, 2, t.hour) ||
      !detail::read_digits(s, 14, 2, t.minute) || !detail::read_digits(s, 17, 2, t.second) ||
      !detail::read_digits(s, 21, 2, off_h) || !detail::read_digits(s, 23, 2, off_m) ||
      !detail::read_digits(s, 26, 4, t.date.year))
    fail("digits");
  if (s[20] != '+' && s[20] != '-') fail("offset sign");
  if (t.date.day < 1 || t.date.day > days_in_month(t.date.year, t.date.month)) fail("day");
  if (t.hour > 23 || t.minute > 59 || t.second > 60 || off_h > 23 || off_m > 59) fail("range");
  if (weekday_from_days(days_from_civil(t.date.year, t.date.month, t.date.day)) != weekday) fail("weekday mismatch");
  const EpochMs offset = (off_h * 60 + off_m) * 60'000LL * (s[20] == '-' ? -1 : 1);
  return to_epoch_ms(t) - offset;
}

namespace detail {

inline std::optional<std::string> id_field(const json& obj, const char* str_key, const char* num_key) {
  if (auto it = obj.find(str_key); it != obj.end() && it->is_string() && !it->get_ref<const std::string&>().empty())
    return it->get<std::string>();
  if (auto it = obj.find(num_key); it != obj.end()) {
    if (it->is_number_unsigned()) return std::to_string(it->get<std::uint64_t>());
    if (it->is_number_integer() && it->get<std::int64_t>() >= 0) return std::to_string(it->get<std::int64_t>());
  }
  return std::nullopt;
}

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

}  // namespace detail

// Throws RecordError when a mandatory field is missing or invalid.
inline DehydratedTweet dehydrate(const json& h) {
  if (!h.is_object()) throw RecordError("record is not an object");
  DehydratedTweet d;
  auto id = detail::id_field(h, "id_str", "id");
  if (!id || !detail::all_digits(*id)) throw RecordError("missing or invalid id");
  if (id->size() > 10 || std::stoull(*id) < kMinTweetId || std::stoull(*id) > kMaxTweetId)
    throw RecordError("id out of range: " + *id);
  d.id_str = *id;

  auto created = h.find("created_at");
  if (created == h.end() || !created->is_string()) throw RecordError("missing created_at for id " + d.id_str);
  d.created_at = created->get<std::string>();
  try {
    d.timestamp = parse_created_at(d.created_at);
  } catch (const TimeParseError& e) {
    throw RecordError(std::string(e.what()) + " for id " + d.id_str);
  }

  auto text = h.find("text");
  if (text == h.end() || !text->is_string()) throw RecordError("missing text for id " + d.id_str);
  d.text = text->get<std::string>();

  auto user = h.find("user");
  std::optional<std::string> user_id;
  if (user != h.end() && user->is_object()) user_id = detail::id_field(*user, "id_str", "id");
  // Already dehydrated records carry the user id at top level.
  if (!user_id) user_id = detail::id_field(h, "user_id_str", "user_id");
  if (!user_id) throw RecordError("missing user id for id " + d.id_str);
  d.user_id_str = *user_id;

  d.in_reply_to_status_id_str = detail::id_field(h, "in_reply_to_status_id_str", "in_reply_to_status_id");
  d.in_reply_to_user_id_str = detail::id_field(h, "in_reply_to_user_id_str", "in_reply_to_user_id");
  if (d.in_reply_to_status_id_str.has_value() != d.in_reply_to_user_id_str.has_value())
    throw RecordError("partial reply fields for id " + d.id_str);

  auto lang = h.find("lang");
  d.lang = (lang != h.end() && lang->is_string() && !lang->get_ref<const std::string&>().empty())
               ? lang->get<std::string>()
               : "und";
  return d;
}

inline DehydratedTweet dehydrate(const HydratedTweet& h) { return dehydrate(to_json(h)); }

struct DehydrateStats {
  std::uint64_t read = 0;
  std::uint64_t written = 0;
  std::uint64_t rejected = 0;
};

// Converts every `*.ndjson.gz` file in `in_dir` into a file of the same name
// in `out_dir`. Rejected records are counted and skipped.
inline DehydrateStats dehydrate_directory(const fs::path& in_dir, const fs::path& out_dir) {
  DehydrateStats stats;
  fs::create_directories(out_dir);
  std::string line;
  for (const auto& in : list_files(in_dir, ".ndjson.gz")) {
    GzipLineReader reader(in);
    GzipFileWriter writer(out_dir / in.filename());
    while (reader.next(line)) {
      if (line.empty()) continue;
      ++stats.read;
      json h = json::parse(line, nullptr, false);
      try {
        if (h.is_discarded()) throw RecordError("malformed json");
        writer.write_line(to_json_line(dehydrate(h)));
        ++stats.written;
      } catch (const RecordError&) {
        ++stats.rejected;
      }
    }
    writer.commit();
  }
  return stats;
}

}  // namespace tweetvault
