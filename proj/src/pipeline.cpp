#include "engage/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "engage/binio.hpp"
#include "engage/errors.hpp"

namespace engage {

const char* to_string(EngagementKind kind) {
    switch (kind) {
        case EngagementKind::like: return "like";
        case EngagementKind::reply: return "reply";
        case EngagementKind::retweet: return "retweet";
        case EngagementKind::retweet_with_comment: return "retweet_with_comment";
    }
    return "?";
}

EngagementKind engagement_kind_from_string(const std::string& name) {
    if (name == "like") return EngagementKind::like;
    if (name == "reply") return EngagementKind::reply;
    if (name == "retweet") return EngagementKind::retweet;
    if (name == "retweet_with_comment" || name == "rt_comment")
        return EngagementKind::retweet_with_comment;
    throw ConfigError("unknown engagement kind: " + name);
}

void InteractionLog::validate() const {
    for (const auto& rec : records) {
        if (rec.topic < 0 || rec.topic >= num_topics)
            throw InputError("log record " + rec.tweet_id + ": topic " +
                             std::to_string(rec.topic) + " outside [0," +
                             std::to_string(num_topics) + ")");
        for (const auto& ts : rec.engagement_ts)
            if (ts && *ts < rec.tweet_ts)
                throw InputError("log record " + rec.tweet_id +
                                 ": engagement precedes tweet timestamp");
    }
}

void PeriodGrid::validate() const {
    if (period_length_seconds <= 0)
        throw ConfigError("period grid: period length must be positive");
    if (num_periods < 3)
        throw ConfigError("period grid: need at least 3 periods");
}

EngagementTensor split_periods(const InteractionLog& log, const PeriodGrid& grid,
                               EngagementKind kind) {
    grid.validate();
    log.validate();

    std::vector<std::string> users;
    users.reserve(log.records.size());
    for (const auto& rec : log.records)
        users.push_back(rec.user_id);
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());

    EngagementTensor tensor;
    tensor.num_users = static_cast<int>(users.size());
    tensor.num_periods = grid.num_periods;
    tensor.num_topics = log.num_topics;
    tensor.user_ids = users;
    std::size_t n = static_cast<std::size_t>(tensor.num_users) * grid.num_periods *
                    std::max(log.num_topics, 0);
    tensor.e_bits.assign(n, 0);
    tensor.r_bits.assign(n, 0);

    for (const auto& rec : log.records) {
        if (rec.tweet_ts < grid.origin_timestamp || rec.tweet_ts >= grid.end_timestamp())
            throw InputError("log record " + rec.tweet_id + ": timestamp " +
                             std::to_string(rec.tweet_ts) + " outside the period grid");
        int t = grid.period_of(rec.tweet_ts);
        int i = static_cast<int>(
            std::lower_bound(users.begin(), users.end(), rec.user_id) - users.begin());
        tensor.r_bits[tensor.idx(i, t, rec.topic)] = 1;
        if (rec.engagement(kind))
            tensor.e_bits[tensor.idx(i, t, rec.topic)] = 1;
    }
    return tensor;
}

std::vector<ActiveState> label_active_states(const InteractionLog& log, EngagementKind kind) {
    log.validate();
    std::vector<ActiveState> out;
    for (std::size_t idx = 0; idx < log.records.size(); ++idx) {
        const auto& rec = log.records[idx];
        if (rec.engagement(kind))
            out.push_back(ActiveState{idx, rec.tweet_ts, *rec.engagement(kind)});
    }
    return out;
}

std::vector<ModelInputs> build_model_inputs(const EngagementTensor& tensor, int history_len,
                                            int target_period) {
    if (history_len < 1)
        throw InputError("build_model_inputs: history length must be >= 1");
    if (target_period < history_len)
        throw InputError("build_model_inputs: target period " +
                         std::to_string(target_period) + " has insufficient history (T=" +
                         std::to_string(history_len) + ")");
    if (target_period >= tensor.num_periods)
        throw InputError("build_model_inputs: target period beyond the grid");

    const int J = tensor.num_topics;
    std::vector<ModelInputs> out;
    out.reserve(static_cast<std::size_t>(tensor.num_users));
    for (int i = 0; i < tensor.num_users; ++i) {
        ModelInputs m;
        m.user_index = i;
        m.target_period = target_period;
        m.e_hist = Eigen::MatrixXd::Zero(J, history_len);
        m.e_freq = Eigen::VectorXd::Zero(J);
        m.r_next = Eigen::VectorXd::Zero(J);
        m.y = Eigen::VectorXd::Zero(J);
        for (int j = 0; j < J; ++j) {
            for (int k = 0; k < history_len; ++k)
                m.e_hist(j, k) = tensor.e(i, target_period - 1 - k, j);
            int engaged = 0;
            for (int t = 0; t < target_period; ++t)
                engaged += tensor.e(i, t, j);
            m.e_freq(j) = static_cast<double>(engaged) / static_cast<double>(target_period);
            m.r_next(j) = tensor.r(i, target_period, j);
            m.y(j) = tensor.e(i, target_period, j);
        }
        out.push_back(std::move(m));
    }
    return out;
}

PeriodSplit split_eligible_periods(int history_len, int num_periods, const SplitRatios& ratios) {
    if (!(ratios.train > 0.0) || ratios.valid < 0.0 || ratios.test < 0.0 ||
        std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9)
        throw ConfigError("split ratios must be nonnegative and sum to 1");

    int n = num_periods - history_len;
    if (n < 3)
        throw InputError("split: need at least 3 eligible target periods, have " +
                         std::to_string(n));
    int n_valid = std::max(1, static_cast<int>(std::floor(n * ratios.valid)));
    int n_test = std::max(1, static_cast<int>(std::floor(n * ratios.test)));
    int n_train = n - n_valid - n_test;
    if (n_train < 1)
        throw InputError("split: ratios leave no training periods");

    PeriodSplit split;
    for (int k = 0; k < n; ++k) {
        int period = history_len + k;
        if (k < n_train)
            split.train.push_back(period);
        else if (k < n_train + n_valid)
            split.valid.push_back(period);
        else
            split.test.push_back(period);
    }
    return split;
}

SplitDataset split_train_valid_test(const std::map<int, std::vector<ModelInputs>>& by_period,
                                    int num_topics, int history_len, const SplitRatios& ratios) {
    if (by_period.size() < 3)
        throw InputError("split: need at least 3 eligible target periods, have " +
                         std::to_string(by_period.size()));
    int n = static_cast<int>(by_period.size());
    int n_valid = std::max(1, static_cast<int>(std::floor(n * ratios.valid)));
    int n_test = std::max(1, static_cast<int>(std::floor(n * ratios.test)));
    int n_train = n - n_valid - n_test;
    if (n_train < 1)
        throw InputError("split: ratios leave no training periods");

    SplitDataset out;
    for (Dataset* d : {&out.train, &out.valid, &out.test}) {
        d->num_topics = num_topics;
        d->history_len = history_len;
    }
    int k = 0;
    for (const auto& [period, instances] : by_period) {
        Dataset& dest = k < n_train ? out.train : (k < n_train + n_valid ? out.valid : out.test);
        dest.instances.insert(dest.instances.end(), instances.begin(), instances.end());
        ++k;
    }
    return out;
}

SplitDataset prepare_splits(const EngagementTensor& tensor, int history_len,
                            const SplitRatios& ratios) {
    PeriodSplit periods = split_eligible_periods(history_len, tensor.num_periods, ratios);
    std::map<int, std::vector<ModelInputs>> by_period;
    for (const auto* set : {&periods.train, &periods.valid, &periods.test})
        for (int t : *set)
            by_period[t] = build_model_inputs(tensor, history_len, t);
    return split_train_valid_test(by_period, tensor.num_topics, history_len, ratios);
}

InteractionLog filter_min_tweets(const InteractionLog& log, std::size_t min_tweets) {
    if (min_tweets <= 1)
        return log;
    std::map<std::string, std::size_t> counts;
    for (const auto& rec : log.records)
        ++counts[rec.user_id];
    InteractionLog out;
    out.num_topics = log.num_topics;
    for (const auto& rec : log.records)
        if (counts[rec.user_id] >= min_tweets)
            out.records.push_back(rec);
    return out;
}

namespace {

constexpr const char* kLogHeader =
    "user_id\ttweet_id\ttopic\ttweet_ts\tlike_ts\treply_ts\tretweet_ts\trt_comment_ts";

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

std::int64_t parse_i64(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError(context + ": bad integer '" + s + "'");
    }
}

}  // namespace

InteractionLog read_log_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open log file: " + path);

    std::string line;
    if (!std::getline(in, line) || line != kLogHeader)
        throw InputError(path + ": missing or malformed header line");

    InteractionLog log;
    int max_topic = -1;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        auto fields = split_tabs(line);
        if (fields.size() != 8)
            throw InputError(path + ":" + std::to_string(lineno) + ": expected 8 fields, got " +
                             std::to_string(fields.size()));
        std::string where = path + ":" + std::to_string(lineno);
        InteractionRecord rec;
        rec.user_id = fields[0];
        rec.tweet_id = fields[1];
        rec.topic = static_cast<int>(parse_i64(fields[2], where));
        rec.tweet_ts = parse_i64(fields[3], where);
        for (int k = 0; k < 4; ++k)
            if (!fields[4 + static_cast<std::size_t>(k)].empty())
                rec.engagement_ts[static_cast<std::size_t>(k)] =
                    parse_i64(fields[4 + static_cast<std::size_t>(k)], where);
        max_topic = std::max(max_topic, rec.topic);
        log.records.push_back(std::move(rec));
    }
    log.num_topics = max_topic + 1;
    log.validate();
    return log;
}

void write_log_file(const std::string& path, const InteractionLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write log file: " + path);
    out << kLogHeader << '\n';
    for (const auto& rec : log.records) {
        out << rec.user_id << '\t' << rec.tweet_id << '\t' << rec.topic << '\t' << rec.tweet_ts;
        for (const auto& ts : rec.engagement_ts) {
            out << '\t';
            if (ts)
                out << *ts;
        }
        out << '\n';
    }
    if (!out)
        throw IoError("failed writing log file: " + path);
}

namespace {

constexpr const char* kDatasetMagic = "ENGT1";

void pack_bits(std::ostream& out, const double* values, std::size_t count) {
    std::uint8_t byte = 0;
    int filled = 0;
    for (std::size_t k = 0; k < count; ++k) {
        if (values[k] != 0.0)
            byte |= static_cast<std::uint8_t>(1u << filled);
        if (++filled == 8) {
            out.put(static_cast<char>(byte));
            byte = 0;
            filled = 0;
        }
    }
    if (filled > 0)
        out.put(static_cast<char>(byte));
}

void unpack_bits(std::istream& in, double* values, std::size_t count, const std::string& path) {
    std::size_t bytes = (count + 7) / 8;
    std::vector<char> buf(bytes);
    if (!in.read(buf.data(), static_cast<std::streamsize>(bytes)))
        throw InputError(path + ": truncated dataset file");
    for (std::size_t k = 0; k < count; ++k)
        values[k] = (static_cast<unsigned char>(buf[k / 8]) >> (k % 8)) & 1u ? 1.0 : 0.0;
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& dataset, int num_users) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write dataset: " + path);

    std::vector<int> periods;
    for (const auto& m : dataset.instances)
        periods.push_back(m.target_period);
    std::sort(periods.begin(), periods.end());
    periods.erase(std::unique(periods.begin(), periods.end()), periods.end());

    out.write(kDatasetMagic, 5);
    binio::write_u32(out, static_cast<std::uint32_t>(num_users));
    binio::write_u32(out, static_cast<std::uint32_t>(dataset.num_topics));
    binio::write_u32(out, static_cast<std::uint32_t>(dataset.history_len));
    binio::write_u32(out, static_cast<std::uint32_t>(periods.size()));
    binio::write_u64(out, dataset.instances.size());

    const int J = dataset.num_topics;
    const int T = dataset.history_len;
    for (const auto& m : dataset.instances) {
        binio::write_u32(out, static_cast<std::uint32_t>(m.user_index));
        binio::write_u32(out, static_cast<std::uint32_t>(m.target_period));
        // row-major J x T: row j's history bits are contiguous
        std::vector<double> hist(static_cast<std::size_t>(J) * T);
        for (int j = 0; j < J; ++j)
            for (int k = 0; k < T; ++k)
                hist[static_cast<std::size_t>(j) * T + k] = m.e_hist(j, k);
        pack_bits(out, hist.data(), hist.size());
        pack_bits(out, m.r_next.data(), static_cast<std::size_t>(J));
        pack_bits(out, m.y.data(), static_cast<std::size_t>(J));
        for (int j = 0; j < J; ++j)
            binio::write_f64(out, m.e_freq(j));
    }
    if (!out)
        throw IoError("failed writing dataset: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open dataset: " + path);
    if (!binio::read_magic(in, kDatasetMagic))
        throw InputError(path + ": not a dataset file (bad magic)");

    std::uint32_t num_users = 0, J = 0, T = 0, period_count = 0;
    std::uint64_t count = 0;
    if (!binio::read_u32(in, num_users) || !binio::read_u32(in, J) || !binio::read_u32(in, T) ||
        !binio::read_u32(in, period_count) || !binio::read_u64(in, count))
        throw InputError(path + ": truncated dataset header");
    (void)num_users;

    Dataset dataset;
    dataset.num_topics = static_cast<int>(J);
    dataset.history_len = static_cast<int>(T);
    dataset.instances.reserve(count);
    for (std::uint64_t n = 0; n < count; ++n) {
        ModelInputs m;
        std::uint32_t user = 0, period = 0;
        if (!binio::read_u32(in, user) || !binio::read_u32(in, period))
            throw InputError(path + ": truncated dataset file");
        m.user_index = static_cast<int>(user);
        m.target_period = static_cast<int>(period);
        std::vector<double> hist(static_cast<std::size_t>(J) * T);
        unpack_bits(in, hist.data(), hist.size(), path);
        m.e_hist.resize(J, T);
        for (std::uint32_t j = 0; j < J; ++j)
            for (std::uint32_t k = 0; k < T; ++k)
                m.e_hist(j, k) = hist[static_cast<std::size_t>(j) * T + k];
        m.r_next.resize(J);
        m.y.resize(J);
        unpack_bits(in, m.r_next.data(), J, path);
        unpack_bits(in, m.y.data(), J, path);
        m.e_freq.resize(J);
        for (std::uint32_t j = 0; j < J; ++j)
            if (!binio::read_f64(in, m.e_freq(j)))
                throw InputError(path + ": truncated dataset file");
        dataset.instances.push_back(std::move(m));
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw InputError(path + ": trailing bytes after dataset payload");
    return dataset;
}

}  // namespace engage
