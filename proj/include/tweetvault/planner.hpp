#pragma once

// Campaign arithmetic: collection throughput, duration and storage footprint.
// Byte figures are decimal (1 GB = 1e9 bytes).

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "tweetvault/ids.hpp"

namespace tweetvault {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr std::uint64_t kBulkUnit = 5'000'000;

struct RatePolicy {
  std::size_t batch_size = kMaxBatchSize;
  double min_interval = 5.0;  // seconds between request starts
  std::size_t workers = 1;

  void validate() const {
    if (batch_size < 1 || batch_size > kMaxBatchSize) throw std::invalid_argument("batch_size must be in [1, 100]");
    if (!(min_interval > 0)) throw std::invalid_argument("min_interval must be positive");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  }
};

struct StorageModel {
  double compressed_bytes_per_5m = 300e6;
  double decompressed_bytes_per_5m = 2.5e9;

  void validate() const {
    if (!(compressed_bytes_per_5m > 0) || !(decompressed_bytes_per_5m > 0))
      throw std::invalid_argument("storage model constants must be positive");
    if (compressed_bytes_per_5m > decompressed_bytes_per_5m)
      throw std::invalid_argument("compressed size exceeds decompressed size");
  }
};

inline std::uint64_t throughput_per_day(const RatePolicy& policy) {
  policy.validate();
  auto requests = static_cast<std::uint64_t>(std::floor(kSecondsPerDay / policy.min_interval));
  return policy.workers * policy.batch_size * requests;
}

struct Duration {
  double days = 0;
  std::uint64_t whole_days = 0;
};

inline Duration collection_days(std::uint64_t num_ids, const RatePolicy& policy) {
  auto per_day = throughput_per_day(policy);
  if (per_day == 0) throw std::invalid_argument("policy yields zero throughput");
  Duration d;
  d.days = static_cast<double>(num_ids) / static_cast<double>(per_day);
  d.whole_days = num_ids / per_day;
  return d;
}

struct StorageEstimate {
  double compressed_bytes = 0;
  double decompressed_bytes = 0;
};

inline StorageEstimate storage_estimate(std::uint64_t num_tweets, const StorageModel& model = {}) {
  model.validate();
  const double units = static_cast<double>(num_tweets) / static_cast<double>(kBulkUnit);
  return {units * model.compressed_bytes_per_5m, units * model.decompressed_bytes_per_5m};
}

}  // namespace tweetvault
