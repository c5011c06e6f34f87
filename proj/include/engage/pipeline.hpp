#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace engage {

enum class EngagementKind { like = 0, reply = 1, retweet = 2, retweet_with_comment = 3 };

const char* to_string(EngagementKind kind);
EngagementKind engagement_kind_from_string(const std::string& name);

struct InteractionRecord {
    std::string user_id;
    std::string tweet_id;
    int topic = 0;
    std::int64_t tweet_ts = 0;
    // indexed by EngagementKind; absent means the tweet was not engaged with
    std::array<std::optional<std::int64_t>, 4> engagement_ts;

    const std::optional<std::int64_t>& engagement(EngagementKind k) const {
        return engagement_ts[static_cast<std::size_t>(k)];
    }
};

struct InteractionLog {
    std::vector<InteractionRecord> records;
    int num_topics = 0;

    // Engagement timestamps must not precede the tweet; topics must be in
    // [0, num_topics). Throws InputError naming the offending record.
    void validate() const;
};

struct PeriodGrid {
    std::int64_t period_length_seconds = 43200;  // 12 hours
    int num_periods = 14;
    std::int64_t origin_timestamp = 0;

    void validate() const;
    std::int64_t end_timestamp() const {
        return origin_timestamp + period_length_seconds * num_periods;
    }
    int period_of(std::int64_t ts) const {
        return static_cast<int>((ts - origin_timestamp) / period_length_seconds);
    }
};

// Per (user, period, topic) binary exposure and engagement indicators.
// Engagement implies exposure: e <= r elementwise.
struct EngagementTensor {
    int num_users = 0;
    int num_periods = 0;
    int num_topics = 0;
    std::vector<std::string> user_ids;  // index -> external id, sorted
    std::vector<std::uint8_t> e_bits;
    std::vector<std::uint8_t> r_bits;

    std::size_t idx(int i, int t, int j) const {
        return (static_cast<std::size_t>(i) * num_periods + t) * num_topics + j;
    }
    std::uint8_t e(int i, int t, int j) const { return e_bits[idx(i, t, j)]; }
    std::uint8_t r(int i, int t, int j) const { return r_bits[idx(i, t, j)]; }
};

// One training/evaluation instance: user context at a target period.
struct ModelInputs {
    int user_index = 0;
    int target_period = 0;
    Eigen::MatrixXd e_hist;  // J x T engagement history, newest column first
    Eigen::VectorXd e_freq;  // J lifetime engagement frequencies in [0,1]
    Eigen::VectorXd r_next;  // J exposure indicators at the target period
    Eigen::VectorXd y;       // J observed engagements at the target period
};

struct Dataset {
    int num_topics = 0;
    int history_len = 0;  // T
    std::vector<ModelInputs> instances;

    bool empty() const { return instances.empty(); }
    std::size_t size() const { return instances.size(); }
};

struct SplitRatios {
    double train = 0.8;
    double valid = 0.1;
    double test = 0.1;
};

struct PeriodSplit {
    std::vector<int> train, valid, test;
};

struct SplitDataset {
    Dataset train, valid, test;
};

// interval between a tweet's publication and its engagement
struct ActiveState {
    std::size_t record = 0;
    std::int64_t begin = 0;
    std::int64_t end = 0;
};

// Buckets the log into the period grid. r marks a topic exposed in the
// period of the tweet's publication; e additionally requires the selected
// engagement kind, credited to the publication period no matter when the
// engagement itself happened.
EngagementTensor split_periods(const InteractionLog& log, const PeriodGrid& grid,
                               EngagementKind kind);

std::vector<ActiveState> label_active_states(const InteractionLog& log, EngagementKind kind);

// One instance per user at `target_period`. e_freq is computed over periods
// 0..target-1 with the elapsed period count as denominator; e_hist covers
// periods target-T..target-1 with column 0 the newest.
std::vector<ModelInputs> build_model_inputs(const EngagementTensor& tensor, int history_len,
                                            int target_period);

// Eligible target periods are T..num_periods-1, assigned chronologically:
// earliest to train, then validation, then test. Validation and test each
// get at least one period.
PeriodSplit split_eligible_periods(int history_len, int num_periods, const SplitRatios& ratios);

SplitDataset split_train_valid_test(const std::map<int, std::vector<ModelInputs>>& by_period,
                                    int num_topics, int history_len, const SplitRatios& ratios);

// Convenience: build_model_inputs for every eligible period, then split.
SplitDataset prepare_splits(const EngagementTensor& tensor, int history_len,
                            const SplitRatios& ratios);

// Drops users with fewer than min_tweets records (0 disables).
InteractionLog filter_min_tweets(const InteractionLog& log, std::size_t min_tweets);

// Text log format: a tab-separated header line
//   user_id tweet_id topic tweet_ts like_ts reply_ts retweet_ts rt_comment_ts
// followed by one record per line; missing engagement timestamps are empty
// fields.
InteractionLog read_log_file(const std::string& path);
void write_log_file(const std::string& path, const InteractionLog& log);

// Binary dataset container, magic ENGT1. Header: magic, u32 I, u32 J, u32 T,
// u32 period count, u64 instance count. Each instance: u32 user index,
// u32 target period, then e_hist/r_next/y as packed row-major bit matrices
// (LSB first, each field padded to a byte boundary) and e_freq as J
// little-endian 64-bit floats.
void save_dataset(const std::string& path, const Dataset& dataset, int num_users);
Dataset load_dataset(const std::string& path);

}  // namespace engage
