#pragma once

// Time partitioning of the archive: all of 2006 in one partition, one per
// calendar month for 2007-2008, one per ISO-8601 week for 2009. Timestamps
// outside the archive bounds go to a quarantine partition.

#include <algorithm>
#include <compare>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tweetvault/civil_time.hpp"

namespace tweetvault {

struct ArchiveBounds {
  EpochMs begin = to_epoch_ms(CivilDate{2006, 3, 1});
  EpochMs end = to_epoch_ms(CivilDate{2009, 8, 1});  // exclusive

  void validate() const {
    if (begin >= end) throw std::invalid_argument("archive bounds: begin must precede end");
    if (begin < to_epoch_ms(CivilDate{2006, 1, 1}) || end > to_epoch_ms(CivilDate{2010, 1, 1}))
      throw std::invalid_argument("archive bounds must lie within 2006-01-01 .. 2010-01-01");
  }
};

class PartitionKey {
 public:
  enum class Kind { kYear2006, kMonth, kWeek2009, kQuarantine };

  static PartitionKey year2006() { return {Kind::kYear2006, 2006, 0}; }
  static PartitionKey month(int year, int month) {
    if ((year != 2007 && year != 2008) || month < 1 || month > 12)
      throw std::invalid_argument("monthly partitions exist for 2007 and 2008 only");
    return {Kind::kMonth, year, month};
  }
  static PartitionKey week2009(int iso_week) {
    if (iso_week < 1 || iso_week > 53) throw std::invalid_argument("ISO week out of range");
    return {Kind::kWeek2009, 2009, iso_week};
  }
  static PartitionKey quarantine() { return {Kind::kQuarantine, 0, 0}; }

  Kind kind() const { return kind_; }
  int year() const { return year_; }
  int month() const { return kind_ == Kind::kMonth ? index_ : 0; }
  int week() const { return kind_ == Kind::kWeek2009 ? index_ : 0; }
  bool is_quarantine() const { return kind_ == Kind::kQuarantine; }

  // `2006`, `2007-03`, `2009-W07`, `quarantine`
  std::string name() const {
    char buf[16];
    switch (kind_) {
      case Kind::kYear2006: return "2006";
      case Kind::kMonth: std::snprintf(buf, sizeof buf, "%04d-%02d", year_, index_); return buf;
      case Kind::kWeek2009: std::snprintf(buf, sizeof buf, "2009-W%02d", index_); return buf;
      case Kind::kQuarantine: return "quarantine";
    }
    return {};
  }

  static std::optional<PartitionKey> parse(std::string_view s) {
    int a = 0, b = 0;
    if (s == "2006") return year2006();
    if (s == "quarantine") return quarantine();
    const std::string str(s);
    char tail = 0;
    try {
      if (s.size() == 8 && std::sscanf(str.c_str(), "2009-W%2d%c", &b, &tail) == 1) return week2009(b);
      if (s.size() == 7 && std::sscanf(str.c_str(), "%4d-%2d%c", &a, &b, &tail) == 2) return month(a, b);
    } catch (const std::invalid_argument&) {
    }
    return std::nullopt;
  }

  // Unclipped [begin, end) of the partition's calendar span.
  EpochMs calendar_begin() const {
    switch (kind_) {
      case Kind::kYear2006: return to_epoch_ms(CivilDate{2006, 1, 1});
      case Kind::kMonth: return to_epoch_ms(CivilDate{year_, index_, 1});
      case Kind::kWeek2009:
        return std::max(iso_week_start_days(2009, index_) * kMsPerDay, to_epoch_ms(CivilDate{2009, 1, 1}));
      case Kind::kQuarantine: break;
    }
    throw std::logic_error("quarantine has no time span");
  }
  EpochMs calendar_end() const {
    switch (kind_) {
      case Kind::kYear2006: return to_epoch_ms(CivilDate{2007, 1, 1});
      case Kind::kMonth:
        return index_ == 12 ? to_epoch_ms(CivilDate{year_ + 1, 1, 1}) : to_epoch_ms(CivilDate{year_, index_ + 1, 1});
      case Kind::kWeek2009:
        return std::min(iso_week_start_days(2009, index_ + 1) * kMsPerDay, to_epoch_ms(CivilDate{2010, 1, 1}));
      case Kind::kQuarantine: break;
    }
    throw std::logic_error("quarantine has no time span");
  }

  friend auto operator<=>(const PartitionKey&, const PartitionKey&) = default;

 private:
  PartitionKey(Kind k, int y, int i) : kind_(k), year_(y), index_(i) {}

  // Declaration order gives time order.
  Kind kind_;
  int year_;
  int index_;
};

struct TimeSpan {
  EpochMs begin = 0;  // inclusive
  EpochMs end = 0;    // exclusive
};

inline TimeSpan partition_span(const PartitionKey& key, const ArchiveBounds& bounds = {}) {
  return {std::max(key.calendar_begin(), bounds.begin), std::min(key.calendar_end(), bounds.end)};
}

inline PartitionKey partition_key(EpochMs ts, const ArchiveBounds& bounds = {}) {
  if (ts < bounds.begin || ts >= bounds.end) return PartitionKey::quarantine();
  const auto date = to_civil(ts).date;
  if (date.year == 2006) return PartitionKey::year2006();
  if (date.year == 2007 || date.year == 2008) return PartitionKey::month(date.year, date.month);
  return PartitionKey::week2009(iso_week(ts).week);
}

// Every non-quarantine partition with a non-empty span inside the bounds, in
// time order.
inline std::vector<PartitionKey> all_partitions(const ArchiveBounds& bounds = {}) {
  std::vector<PartitionKey> keys;
  auto consider = [&](PartitionKey k) {
    auto s = partition_span(k, bounds);
    if (s.begin < s.end) keys.push_back(k);
  };
  consider(PartitionKey::year2006());
  for (int y : {2007, 2008})
    for (int m = 1; m <= 12; ++m) consider(PartitionKey::month(y, m));
  for (int w = 1; w <= 53; ++w) consider(PartitionKey::week2009(w));
  return keys;
}

// Partitions whose span intersects the closed interval [t0, t1].
inline std::vector<PartitionKey> partitions_for_range(EpochMs t0, EpochMs t1, const ArchiveBounds& bounds = {}) {
  if (t0 > t1) throw std::invalid_argument("partitions_for_range: t0 > t1");
  std::vector<PartitionKey> out;
  for (const auto& k : all_partitions(bounds)) {
    auto s = partition_span(k, bounds);
    if (s.begin <= t1 && t0 < s.end) out.push_back(k);
  }
  return out;
}

}  // namespace tweetvault
