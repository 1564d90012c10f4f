#pragma once

// Deterministic synthetic tweet corpus. Every property of a tweet is a pure
// function of (seed, id), so arbitrarily large corpora regenerate exactly
// without being stored.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tweetvault/civil_time.hpp"
#include "tweetvault/ids.hpp"
#include "tweetvault/io.hpp"
#include "tweetvault/tweet.hpp"
#include "tweetvault/wordlists.hpp"

namespace tweetvault {

struct WeightedEntry {
  std::string value;
  double weight = 1.0;
  friend bool operator==(const WeightedEntry&, const WeightedEntry&) = default;
};

// Existence fraction implied by 1,483,823,453 retrievable tweets among
// 2,292,166,175 candidates.
inline constexpr double kDefaultExistenceRate = 0.647;
inline constexpr EpochMs kDefaultCorpusStart = to_epoch_ms(CivilDateTime{{2006, 3, 21}, 20, 50, 14, 0});
inline constexpr EpochMs kDefaultCorpusEnd = to_epoch_ms(CivilDateTime{{2009, 7, 31}, 23, 59, 59, 0});

inline std::vector<WeightedEntry> default_vocabulary();
inline std::vector<WeightedEntry> default_languages();
inline std::vector<WeightedEntry> default_url_domains();

struct CorpusSpec {
  std::uint64_t seed = 42;
  RangeTable id_domain = RangeTable::builtin();
  double existence_rate = kDefaultExistenceRate;
  std::vector<WeightedEntry> vocab = default_vocabulary();
  std::vector<WeightedEntry> lang_weights = default_languages();
  EpochMs t0 = kDefaultCorpusStart;
  EpochMs t1 = kDefaultCorpusEnd;
  TweetId anchor_id0 = 20;
  TweetId anchor_id1 = kArchiveEndId;
  // Fraction of tweets carrying one URL, and the weighted host list.
  double url_rate = 0.253;
  std::vector<WeightedEntry> url_domains = default_url_domains();
  double reply_rate = 0.2;
  // Fraction of words drawn from a Zipf-distributed synthetic long tail.
  double tail_rate = 0.15;
  std::size_t tail_size = 20000;
  std::size_t min_words = 3;
  std::size_t max_words = 12;

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0 && p <= 1)) throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
    };
    prob(existence_rate, "existence_rate");
    prob(url_rate, "url_rate");
    prob(reply_rate, "reply_rate");
    prob(tail_rate, "tail_rate");
    if (!(t0 < t1)) throw std::invalid_argument("t0 must be before t1");
    if (!(anchor_id0 < anchor_id1) || anchor_id0 < 1) throw std::invalid_argument("anchor_id0 must be below anchor_id1");
    if (id_domain.empty()) throw std::invalid_argument("empty id domain");
    if (min_words < 1 || min_words > max_words) throw std::invalid_argument("bad word count bounds");
    for (const auto* list : {&vocab, &lang_weights, &url_domains}) {
      if (list->empty()) throw std::invalid_argument("weighted lists must be non-empty");
      for (const auto& e : *list)
        if (!(e.weight > 0)) throw std::invalid_argument("weights must be positive: " + e.value);
    }
  }
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t id) {
  return mix64(mix64(seed ^ mix64(stream)) ^ id);
}

inline double to_unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// Thin wrapper that fixes how raw engine output maps to doubles and ranges,
// since the standard distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return to_unit(engine_()); }
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

class WeightedSampler {
 public:
  WeightedSampler() = default;
  explicit WeightedSampler(const std::vector<double>& weights) {
    cumulative_.reserve(weights.size());
    double acc = 0;
    for (double w : weights) cumulative_.push_back(acc += w);
  }
  std::size_t sample(Rng& rng) const {
    double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

inline WeightedSampler sampler_for(const std::vector<WeightedEntry>& entries) {
  std::vector<double> w;
  for (const auto& e : entries) w.push_back(e.weight);
  return WeightedSampler(w);
}

inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

// Pronounceable pseudo-word for long-tail rank k.
inline std::string tail_word(std::size_t k) {
  static constexpr std::array<std::string_view, 20> kSyllables = {
      "ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "ze", "po",
      "da", "fe", "gu", "hi", "jo", "ku", "la", "me", "no", "qu"};
  std::string w;
  std::size_t v = k + 20;
  while (v > 0) {
    w += kSyllables[v % 20];
    v /= 20;
  }
  return w;
}

inline const std::array<std::string_view, 12>& locations() {
  static const std::array<std::string_view, 12> kLocations = {
      "San Francisco, CA", "New York", "London", "Tokyo", "Madrid", "Tehran",
      "Sao Paulo",         "Berlin",   "Austin, TX", "Oviedo", "Toronto", ""};
  return kLocations;
}

inline const std::array<std::string_view, 6>& sources() {
  static const std::array<std::string_view, 6> kSources = {
      "web",
      "<a href=\"http://twitterrific.com\" rel=\"nofollow\">Twitterrific</a>",
      "<a href=\"http://www.tweetdeck.com/\" rel=\"nofollow\">TweetDeck</a>",
      "txt",
      "im",
      "<a href=\"http://twitterfeed.com\" rel=\"nofollow\">twitterfeed</a>"};
  return kSources;
}

}  // namespace detail

inline std::vector<WeightedEntry> default_vocabulary() {
  std::vector<WeightedEntry> v;
  for (auto w : kCommonEnglishWords) v.push_back({std::string(w), 3.0});
  for (auto w : {"the", "a", "to", "I", "and", "of", "my", "in", "you", "is"}) {
    auto it = std::find_if(v.begin(), v.end(), [&](const WeightedEntry& e) { return e.value == w; });
    if (it != v.end()) it->weight = 10.0;
    else v.push_back({w, 10.0});
  }
  for (auto w : {"twitter", "blog", "post", "coffee", "lunch", "tonight", "today", "morning", "night", "home",
                 "office", "movie", "music", "game", "book", "weekend", "friends", "news", "sandwich", "pizza",
                 "rain", "sun", "city", "desk", "code", "phone", "iphone", "bed", "school", "party",
                 "obama", "mccain", "biden", "palin", "election", "vote", "iran", "tehran", "bowl", "super",
                 "justin", "bieber", "google", "apple", "web", "friend", "love", "lol", "tired", "happy"})
    v.push_back({w, 1.0});
  for (auto w : {"watching", "eating", "going", "reading", "working", "listening", "playing", "thinking",
                 "waiting", "drinking", "getting", "looking", "trying", "writing", "sleeping", "coding"})
    v.push_back({w, 1.5});
  for (auto w : {"#barcamp", "#iranelection", "#obama", "#sxsw", "#followfriday", "#superbowl"})
    v.push_back({w, 0.3});
  for (auto w : {"eating a sandwich", "justin bieber", "super bowl"}) v.push_back({w, 0.05});
  for (auto w : {"hola", "gracias", "obrigado", "danke", "café", "ایران", "انتخابات", "آزادی", "日本", "東京",
                 "привет", "שלום"})
    v.push_back({w, 0.2});
  return v;
}

inline std::vector<WeightedEntry> default_languages() {
  return {{"en", 0.86}, {"ja", 0.04}, {"es", 0.03}, {"pt", 0.02}, {"de", 0.02}, {"fa", 0.01}, {"ru", 0.01},
          {"fr", 0.01}};
}

inline std::vector<WeightedEntry> default_url_domains() {
  return {{"tinyurl.com", 0.40}, {"bit.ly", 0.20}, {"is.gd", 0.08}, {"ow.ly", 0.04}, {"tr.im", 0.03},
          {"twitpic.com", 0.10}, {"youtube.com", 0.06}, {"flickr.com", 0.05}, {"blogspot.com", 0.04}};
}

// Membership and neighbour queries over the id domain.
class IdDomain {
 public:
  explicit IdDomain(const RangeTable& table) : ranges_(table.ranges()) {}

  bool contains(TweetId id) const {
    auto r = locate(id);
    for (std::size_t k = 0; k < 2 && r >= k; ++k) {
      const auto& range = ranges_[r - k];
      if (id >= range.start && id <= range.end && (id - range.start) % range.step == 0) return true;
      if (r == 0) break;
    }
    return false;
  }

  // Largest member strictly below id.
  std::optional<TweetId> previous(TweetId id) const {
    if (id <= 1) return std::nullopt;
    for (std::size_t r = locate(id - 1) + 1; r-- > 0;) {
      const auto& range = ranges_[r];
      if (range.start > id - 1) continue;
      TweetId hi = std::min(id - 1, range.end);
      return range.start + range.step * ((hi - range.start) / range.step);
    }
    return std::nullopt;
  }

  TweetId first() const { return ranges_.front().start; }

 private:
  // Index of the last range whose start is <= id (0 when none).
  std::size_t locate(TweetId id) const {
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), id,
                               [](TweetId v, const IdRange& r) { return v < r.start; });
    return it == ranges_.begin() ? 0 : static_cast<std::size_t>(it - ranges_.begin() - 1);
  }

  std::vector<IdRange> ranges_;
};

struct TimeMapping {
  EpochMs ms = 0;
  bool clamped = false;
};

// Prepared generator; cheap to query per id, safe to share across threads.
class CorpusGenerator {
 public:
  explicit CorpusGenerator(CorpusSpec spec) : spec_(std::move(spec)), domain_(spec_.id_domain) {
    spec_.validate();
    vocab_ = detail::sampler_for(spec_.vocab);
    langs_ = detail::sampler_for(spec_.lang_weights);
    hosts_ = detail::sampler_for(spec_.url_domains);
    std::vector<double> zipf(spec_.tail_size);
    for (std::size_t k = 0; k < zipf.size(); ++k) zipf[k] = 1.0 / static_cast<double>(k + 1);
    if (!zipf.empty()) tail_ = detail::WeightedSampler(zipf);
    log_span_ = std::log(static_cast<double>(spec_.anchor_id1) / static_cast<double>(spec_.anchor_id0));
  }

  const CorpusSpec& spec() const { return spec_; }

  // Logarithmic interpolation between the anchors, so that uniformly dense
  // ids produce exponentially growing volume over time.
  TimeMapping id_to_time(TweetId id) const {
    TimeMapping m;
    if (id < spec_.anchor_id0 || id > spec_.anchor_id1) {
      m.clamped = true;
      id = std::clamp(id, spec_.anchor_id0, spec_.anchor_id1);
    }
    if (id == spec_.anchor_id0) {
      m.ms = spec_.t0;
    } else if (id == spec_.anchor_id1) {
      m.ms = spec_.t1;
    } else {
      const double f = std::log(static_cast<double>(id) / static_cast<double>(spec_.anchor_id0)) / log_span_;
      m.ms = spec_.t0 + static_cast<EpochMs>(std::floor(static_cast<double>(spec_.t1 - spec_.t0) * f));
    }
    return m;
  }

  bool exists(TweetId id) const {
    if (!domain_.contains(id)) return false;
    return detail::to_unit(detail::hash_key(spec_.seed, kExistStream, id)) < spec_.existence_rate;
  }

  std::uint64_t user_of(TweetId id) const {
    return 1 + detail::hash_key(spec_.seed, kUserStream, id) % kUserPool;
  }

  std::optional<HydratedTweet> tweet(TweetId id) const {
    if (!exists(id)) return std::nullopt;
    detail::Rng rng(detail::hash_key(spec_.seed, kFieldStream, id));
    HydratedTweet t;
    t.id = id;
    t.created_at = format_created_at(id_to_time(id).ms);
    t.user = profile(user_of(id));
    t.source = std::string(detail::sources()[rng.below(detail::sources().size())]);
    t.lang = spec_.lang_weights[langs_.sample(rng)].value;

    std::vector<std::string> words;
    if (rng.chance(spec_.reply_rate)) {
      if (auto target = reply_target(id, rng)) {
        t.in_reply_to_status_id = *target;
        t.in_reply_to_user_id = user_of(*target);
        words.push_back("@" + screen_name(*t.in_reply_to_user_id));
      }
    }
    const std::size_t n = spec_.min_words + rng.below(spec_.max_words - spec_.min_words + 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (tail_ && rng.chance(spec_.tail_rate)) {
        words.push_back(detail::tail_word(tail_->sample(rng)));
      } else {
        words.push_back(spec_.vocab[vocab_.sample(rng)].value);
      }
    }
    std::optional<std::string> url;
    if (rng.chance(spec_.url_rate)) {
      url = "http://" + spec_.url_domains[hosts_.sample(rng)].value + "/" + short_code(rng);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)), *url);
    }
    auto join = [&] {
      std::string s;
      for (const auto& w : words) {
        if (!s.empty()) s += ' ';
        s += w;
      }
      return s;
    };
    t.text = join();
    // Truncation drops trailing words but keeps the URL and the reply mention.
    const std::size_t keep_prefix = t.in_reply_to_status_id ? 1 : 0;
    while (detail::utf8_length(t.text) > 140 && words.size() > keep_prefix + 1) {
      auto victim = words.size() - 1;
      if (url && words[victim] == *url) --victim;
      if (victim < keep_prefix) break;
      words.erase(words.begin() + static_cast<std::ptrdiff_t>(victim));
      t.text = join();
    }
    if (url) {
      if (auto pos = t.text.find(*url); pos != std::string::npos) {
        auto begin = detail::utf8_length(std::string_view(t.text).substr(0, pos));
        t.urls.push_back({*url, begin, begin + url->size()});
      }
    }
    for (const auto& w : words)
      if (w.size() > 1 && w[0] == '#') t.hashtags.push_back(w.substr(1));
    return t;
  }

 private:
  static constexpr std::uint64_t kExistStream = 1;
  static constexpr std::uint64_t kUserStream = 2;
  static constexpr std::uint64_t kFieldStream = 3;
  static constexpr std::uint64_t kProfileStream = 5;
  static constexpr std::uint64_t kUserPool = 1'000'000;

  std::string screen_name(std::uint64_t user) const { return detail::tail_word(user % 997) + std::to_string(user); }

  UserProfile profile(std::uint64_t user) const {
    detail::Rng rng(detail::hash_key(spec_.seed, kProfileStream, user));
    UserProfile p;
    p.id = user;
    p.screen_name = screen_name(user);
    p.name = detail::tail_word(rng.below(5000));
    p.name[0] = static_cast<char>(p.name[0] - 'a' + 'A');
    const std::size_t desc_words = 4 + rng.below(12);
    for (std::size_t i = 0; i < desc_words; ++i) {
      if (!p.description.empty()) p.description += ' ';
      p.description += spec_.vocab[vocab_.sample(rng)].value;
    }
    p.location = std::string(detail::locations()[rng.below(detail::locations().size())]);
    p.created_at = format_created_at(spec_.t0 + static_cast<EpochMs>(rng.below(
                                                    static_cast<std::uint64_t>(spec_.t1 - spec_.t0))));
    p.profile_image_url = "http://s3.amazonaws.com/twitter_production/profile_images/" +
                          std::to_string(rng.below(100'000'000)) + "/avatar_normal.jpg";
    p.time_zone = rng.chance(0.5) ? "Pacific Time (US & Canada)" : "London";
    p.followers_count = static_cast<std::uint32_t>(rng.below(5000));
    p.friends_count = static_cast<std::uint32_t>(rng.below(2000));
    p.statuses_count = static_cast<std::uint32_t>(rng.below(20000));
    p.favourites_count = static_cast<std::uint32_t>(rng.below(500));
    p.verified = rng.chance(0.001);
    return p;
  }

  std::string short_code(detail::Rng& rng) const {
    static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::string s;
    for (int i = 0; i < 6; ++i) s += kAlphabet[rng.below(kAlphabet.size())];
    return s;
  }

  // A uniformly chosen smaller id, walked down to the nearest existing tweet.
  std::optional<TweetId> reply_target(TweetId id, detail::Rng& rng) const {
    const TweetId lo = domain_.first();
    if (id <= lo) return std::nullopt;
    TweetId cand = lo + rng.below(id - lo);
    if (!domain_.contains(cand)) {
      auto prev = domain_.previous(cand + 1);
      if (!prev) return std::nullopt;
      cand = *prev;
    }
    for (int tries = 0; tries < 64; ++tries) {
      if (exists(cand)) return cand;
      auto prev = domain_.previous(cand);
      if (!prev) return std::nullopt;
      cand = *prev;
    }
    return std::nullopt;
  }

  CorpusSpec spec_;
  IdDomain domain_;
  detail::WeightedSampler vocab_;
  detail::WeightedSampler langs_;
  detail::WeightedSampler hosts_;
  std::optional<detail::WeightedSampler> tail_;
  double log_span_ = 1;
};

inline TimeMapping id_to_time(TweetId id, const CorpusSpec& spec) { return CorpusGenerator(spec).id_to_time(id); }

inline std::optional<HydratedTweet> gen_tweet(TweetId id, const CorpusSpec& spec) {
  return CorpusGenerator(spec).tweet(id);
}

namespace detail {

inline std::vector<WeightedEntry> parse_weighted_list(std::string_view s, const std::string& key) {
  std::vector<WeightedEntry> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    auto item = trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (!item.empty()) {
      auto colon = item.rfind(':');
      WeightedEntry e;
      if (colon == std::string_view::npos) {
        e.value = std::string(item);
      } else {
        e.value = std::string(trim(item.substr(0, colon)));
        try {
          e.weight = std::stod(std::string(item.substr(colon + 1)));
        } catch (const std::exception&) {
          throw std::invalid_argument(key + ": bad weight in '" + std::string(item) + "'");
        }
      }
      out.push_back(std::move(e));
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not a number: '" + v + "'");
  }
}

}  // namespace detail

// `key = value` lines; `#` comments. Unknown keys are rejected. Relative file
// references resolve against `base_dir`.
inline CorpusSpec parse_corpus_spec(std::string_view text, const fs::path& base_dir = {}) {
  CorpusSpec spec;
  std::size_t lineno = 0;
  for_each_line(text, [&](std::string_view raw) {
    ++lineno;
    auto line = raw;
    if (auto h = line.find('#'); h != std::string_view::npos && (h == 0 || line[h - 1] == ' ' || line[h - 1] == '\t'))
      line = line.substr(0, h);
    line = detail::trim(line);
    if (line.empty()) return;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
    std::string key(detail::trim(line.substr(0, eq)));
    std::string value(detail::trim(line.substr(eq + 1)));
    auto u64 = [&] { return detail::parse_u64(value, key); };
    if (key == "seed") spec.seed = u64();
    else if (key == "existence_rate") spec.existence_rate = detail::parse_double(value, key);
    else if (key == "url_rate") spec.url_rate = detail::parse_double(value, key);
    else if (key == "reply_rate") spec.reply_rate = detail::parse_double(value, key);
    else if (key == "tail_rate") spec.tail_rate = detail::parse_double(value, key);
    else if (key == "tail_size") spec.tail_size = u64();
    else if (key == "min_words") spec.min_words = u64();
    else if (key == "max_words") spec.max_words = u64();
    else if (key == "anchor_id0") spec.anchor_id0 = u64();
    else if (key == "anchor_id1") spec.anchor_id1 = u64();
    else if (key == "t0") spec.t0 = parse_iso8601(value);
    else if (key == "t1") spec.t1 = parse_iso8601(value);
    else if (key == "vocab") spec.vocab = detail::parse_weighted_list(value, key);
    else if (key == "lang") spec.lang_weights = detail::parse_weighted_list(value, key);
    else if (key == "url_domains") spec.url_domains = detail::parse_weighted_list(value, key);
    else if (key == "vocab_file") {
      // One entry per line: `weight<whitespace>word or phrase`.
      spec.vocab.clear();
      for_each_line(read_file(base_dir / value), [&](std::string_view l) {
        l = detail::trim(l);
        if (l.empty() || l.front() == '#') return;
        auto sp = l.find_first_of(" \t");
        if (sp == std::string_view::npos) throw std::invalid_argument("vocab_file: expected 'weight word'");
        spec.vocab.push_back({std::string(detail::trim(l.substr(sp))),
                              detail::parse_double(std::string(l.substr(0, sp)), "vocab_file")});
      });
    } else if (key == "domain") {
      if (value == "builtin") {
        spec.id_domain = RangeTable::builtin();
      } else if (value == "full") {
        spec.id_domain = RangeTable({IdRange{kMinTweetId, 1, kMaxTweetId}});
      } else if (value.rfind("table:", 0) == 0) {
        spec.id_domain = RangeTable::parse(read_file(base_dir / value.substr(6)));
      } else {
        spec.id_domain = RangeTable::parse(value);
      }
    } else {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  });
  spec.validate();
  return spec;
}

}  // namespace tweetvault
