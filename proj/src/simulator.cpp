#include "engage/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "engage/binio.hpp"
#include "engage/errors.hpp"
#include "engage/evaluation.hpp"
#include "engage/rng.hpp"

namespace engage {

namespace {

double sigmoid(double x) {
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// |logit| <= 30 keeps sigmoid away from exactly 0 or 1 in double precision.
constexpr double kLogitBound = 30.0;

}  // namespace

double SimConfig::max_abs_logit() const {
    double base = 0.0;
    for (const auto& arch : archetypes)
        base = std::max(base, arch.cwiseAbs().maxCoeff());
    double rec = recency_weights.cwiseAbs().sum();
    double sub = 0.0;
    for (int j = 0; j < num_topics; ++j)
        sub = std::max(sub, substitution.col(j).cwiseAbs().sum());
    return base + rec + sub;
}

void SimConfig::validate() const {
    if (num_users < 1 || num_topics < 1 || num_periods < 1 || history_len < 1)
        throw ConfigError("sim: users, topics, periods and history must be positive");
    if (period_length_seconds <= 0)
        throw ConfigError("sim: period length must be positive");
    if (exposure_rate.size() != num_topics)
        throw ConfigError("sim: exposure_rate must have one entry per topic");
    for (int j = 0; j < num_topics; ++j)
        if (exposure_rate(j) < 0.0 || exposure_rate(j) > 1.0)
            throw ConfigError("sim: exposure rates must lie in [0,1]");
    if (archetypes.empty())
        throw ConfigError("sim: need at least one archetype");
    for (const auto& arch : archetypes)
        if (arch.size() != num_topics)
            throw ConfigError("sim: archetype length must equal the topic count");
    if (substitution.rows() != num_topics || substitution.cols() != num_topics)
        throw ConfigError("sim: substitution matrix must be J x J");
    for (int j = 0; j < num_topics; ++j)
        if (substitution(j, j) != 0.0)
            throw ConfigError("sim: substitution diagonal must be zero");
    if (recency_weights.size() != history_len)
        throw ConfigError("sim: recency weights must have one entry per history period");
    if (max_abs_logit() > kLogitBound)
        throw ConfigError("sim: achievable |logit| " + std::to_string(max_abs_logit()) +
                          " exceeds " + std::to_string(kLogitBound) +
                          "; probabilities would saturate");
}

SimOutput generate_log(const SimConfig& cfg) {
    cfg.validate();
    const int I = cfg.num_users;
    const int J = cfg.num_topics;
    const int P = cfg.num_periods;
    const int T = cfg.history_len;

    SimOutput out;
    out.log.num_topics = J;
    out.truth.num_users = I;
    out.truth.num_periods = P;
    out.truth.num_topics = J;
    out.truth.probs.assign(static_cast<std::size_t>(I) * P * J, 0.0);
    out.user_ids.reserve(static_cast<std::size_t>(I));
    out.archetype_of.reserve(static_cast<std::size_t>(I));

    Rng master(cfg.seed);
    std::vector<std::uint8_t> shown(static_cast<std::size_t>(J));
    std::vector<std::uint8_t> engaged(static_cast<std::size_t>(P) * J);

    for (int i = 0; i < I; ++i) {
        Rng rng = master.derive(static_cast<std::uint64_t>(i));
        int arch = static_cast<int>(rng.next_index(cfg.archetypes.size()));
        const Eigen::VectorXd& base = cfg.archetypes[static_cast<std::size_t>(arch)];

        char buf[16];
        std::snprintf(buf, sizeof(buf), "u%05d", i);
        std::string user_id(buf);
        out.user_ids.push_back(user_id);
        out.archetype_of.push_back(arch);

        std::fill(engaged.begin(), engaged.end(), 0);
        for (int t = 0; t < P; ++t) {
            // the whole period's slate is drawn before any engagement,
            // because substitution couples topics within the period
            for (int j = 0; j < J; ++j)
                shown[static_cast<std::size_t>(j)] = rng.bernoulli(cfg.exposure_rate(j));

            for (int j = 0; j < J; ++j) {
                if (!shown[static_cast<std::size_t>(j)])
                    continue;
                double logit = base(j);
                for (int k = 0; k < T; ++k) {
                    int src = t - 1 - k;
                    if (src >= 0 && engaged[static_cast<std::size_t>(src) * J + j])
                        logit += cfg.recency_weights(k);
                }
                for (int a = 0; a < J; ++a)
                    if (shown[static_cast<std::size_t>(a)])
                        logit += cfg.substitution(a, j);

                double p = sigmoid(logit);
                out.truth.probs[out.truth.idx(i, t, j)] = p;
                bool hit = rng.bernoulli(p);
                if (hit)
                    engaged[static_cast<std::size_t>(t) * J + j] = 1;

                InteractionRecord rec;
                rec.user_id = user_id;
                rec.tweet_id = user_id + "_p" + std::to_string(t) + "_j" + std::to_string(j);
                rec.topic = j;
                rec.tweet_ts = cfg.origin_timestamp +
                               static_cast<std::int64_t>(t) * cfg.period_length_seconds +
                               cfg.period_length_seconds / 2;
                if (hit)
                    rec.engagement_ts[static_cast<std::size_t>(EngagementKind::retweet)] =
                        rec.tweet_ts + 60;
                out.log.records.push_back(std::move(rec));
            }
        }
    }
    return out;
}

double ground_truth_auc_bound(const TruthTensor& truth, const EngagementTensor& tensor,
                              const std::vector<int>& periods) {
    if (truth.num_users != tensor.num_users || truth.num_periods != tensor.num_periods ||
        truth.num_topics != tensor.num_topics)
        throw InputError("truth bound: tensor shapes differ");
    std::vector<double> scores;
    std::vector<int> labels;
    for (int t : periods) {
        if (t < 0 || t >= truth.num_periods)
            throw InputError("truth bound: period out of range");
        for (int i = 0; i < truth.num_users; ++i)
            for (int j = 0; j < truth.num_topics; ++j) {
                scores.push_back(truth.at(i, t, j));
                labels.push_back(tensor.e(i, t, j));
            }
    }
    return auc(scores, labels);
}

SimConfig make_sim_config(std::uint64_t seed, bool with_substitution, int num_users,
                          int num_topics, int num_periods, int history_len) {
    constexpr int kBlock = 6;
    if (num_topics < kBlock || num_topics % kBlock != 0)
        throw ConfigError("sim: topic count must be a positive multiple of 6");
    SimConfig cfg;
    cfg.seed = seed;
    cfg.num_users = num_users;
    cfg.num_topics = num_topics;
    cfg.num_periods = num_periods;
    cfg.history_len = history_len;
    const int J = num_topics;
    const int nb = J / kBlock;

    cfg.exposure_rate = Eigen::VectorXd::Constant(J, 0.55);

    cfg.archetypes.clear();
    for (int a = 0; a < 4; ++a) {
        Eigen::VectorXd base(J);
        for (int j = 0; j < J; ++j) {
            int b = j / kBlock;
            double v = -2.0;
            if (b == a % nb)
                v += 1.5;
            else if (b == (a + 2) % nb)
                v += 0.8;
            else if (b == (a + 4) % nb)
                v += 0.3;
            v += 0.05 * (j % kBlock);
            base(j) = v;
        }
        cfg.archetypes.push_back(base);
    }

    cfg.substitution = Eigen::MatrixXd::Zero(J, J);
    if (with_substitution) {
        for (int a = 0; a < J; ++a)
            for (int j = 0; j < J; ++j)
                if (a != j && a / kBlock == j / kBlock)
                    cfg.substitution(a, j) = -0.55;
    }

    // geometric recency decay, strongest weight on the newest period
    cfg.recency_weights = Eigen::VectorXd(history_len);
    for (int k = 0; k < history_len; ++k)
        cfg.recency_weights(k) = 0.8 * std::pow(0.6, k);
    return cfg;
}

SimConfig make_default_sim_config(std::uint64_t seed, bool with_substitution) {
    return make_sim_config(seed, with_substitution, 2000, 30, 14, 4);
}

GroundTruthScorer::GroundTruthScorer(SimConfig cfg, std::vector<int> archetype_of)
    : cfg_(std::move(cfg)), archetype_of_(std::move(archetype_of)) {
    cfg_.validate();
    for (int a : archetype_of_)
        if (a < 0 || a >= static_cast<int>(cfg_.archetypes.size()))
            throw InputError("truth scorer: archetype index out of range");
}

Eigen::VectorXd GroundTruthScorer::score_user(int user_index, const Eigen::VectorXd& slate,
                                              const Eigen::MatrixXd& e_hist) const {
    if (user_index < 0 || user_index >= static_cast<int>(archetype_of_.size()))
        throw InputError("truth scorer: unknown user index " + std::to_string(user_index));
    const int J = cfg_.num_topics;
    const int T = cfg_.history_len;
    if (slate.size() != J || e_hist.rows() != J || e_hist.cols() != T)
        throw InputError("truth scorer: input shapes do not match the configuration");

    const Eigen::VectorXd& base =
        cfg_.archetypes[static_cast<std::size_t>(archetype_of_[static_cast<std::size_t>(
            user_index)])];
    Eigen::VectorXd shift = cfg_.substitution.transpose() * slate;
    Eigen::VectorXd p(J);
    for (int j = 0; j < J; ++j) {
        double logit = base(j) + shift(j);
        for (int k = 0; k < T; ++k)
            logit += cfg_.recency_weights(k) * e_hist(j, k);
        p(j) = slate(j) * sigmoid(logit);
    }
    return p;
}

Eigen::VectorXd GroundTruthScorer::score(const ModelInputs& inputs,
                                         const Eigen::VectorXd& slate) const {
    return score_user(inputs.user_index, slate, inputs.e_hist);
}

namespace {

// Binds the scorer to one user so it fits the slate-only Predictor shape.
class TruthUserPredictor : public Predictor {
public:
    TruthUserPredictor(const GroundTruthScorer& scorer, int user)
        : scorer_(&scorer), user_(user) {}
    int num_topics() const override { return scorer_->config().num_topics; }
    Eigen::VectorXd predict(const Eigen::VectorXd& slate, const Eigen::MatrixXd& e_hist,
                            const Eigen::VectorXd&) const override {
        return scorer_->score_user(user_, slate, e_hist);
    }

private:
    const GroundTruthScorer* scorer_;
    int user_;
};

}  // namespace

std::unique_ptr<Predictor> GroundTruthScorer::predictor_for(int user_index) const {
    return std::make_unique<TruthUserPredictor>(*this, user_index);
}

namespace {
constexpr const char* kTruthMagic = "GTPR1";
constexpr const char* kScorerMagic = "GTSC1";
}  // namespace

void save_truth(const std::string& path, const TruthTensor& truth) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write truth sidecar: " + path);
    out.write(kTruthMagic, 5);
    binio::write_u32(out, static_cast<std::uint32_t>(truth.num_users));
    binio::write_u32(out, static_cast<std::uint32_t>(truth.num_periods));
    binio::write_u32(out, static_cast<std::uint32_t>(truth.num_topics));
    for (double p : truth.probs)
        binio::write_f64(out, p);
    if (!out)
        throw IoError("failed writing truth sidecar: " + path);
}

TruthTensor load_truth(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open truth sidecar: " + path);
    if (!binio::read_magic(in, kTruthMagic))
        throw InputError(path + ": not a truth sidecar (bad magic)");
    std::uint32_t I = 0, P = 0, J = 0;
    if (!binio::read_u32(in, I) || !binio::read_u32(in, P) || !binio::read_u32(in, J))
        throw InputError(path + ": truncated header");
    TruthTensor truth;
    truth.num_users = static_cast<int>(I);
    truth.num_periods = static_cast<int>(P);
    truth.num_topics = static_cast<int>(J);
    truth.probs.resize(static_cast<std::size_t>(I) * P * J);
    for (double& p : truth.probs)
        if (!binio::read_f64(in, p))
            throw InputError(path + ": truncated payload");
    if (in.peek() != std::char_traits<char>::eof())
        throw InputError(path + ": trailing bytes after payload");
    return truth;
}

void save_truth_model(const std::string& path, const SimConfig& cfg,
                      const std::vector<int>& archetype_of) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write truth model: " + path);
    out.write(kScorerMagic, 5);
    binio::write_u32(out, static_cast<std::uint32_t>(cfg.num_users));
    binio::write_u32(out, static_cast<std::uint32_t>(cfg.num_topics));
    binio::write_u32(out, static_cast<std::uint32_t>(cfg.num_periods));
    binio::write_u32(out, static_cast<std::uint32_t>(cfg.history_len));
    binio::write_u64(out, static_cast<std::uint64_t>(cfg.period_length_seconds));
    binio::write_u64(out, static_cast<std::uint64_t>(cfg.origin_timestamp));
    binio::write_u64(out, cfg.seed);
    for (int j = 0; j < cfg.num_topics; ++j)
        binio::write_f64(out, cfg.exposure_rate(j));
    binio::write_u32(out, static_cast<std::uint32_t>(cfg.archetypes.size()));
    for (const auto& arch : cfg.archetypes)
        for (int j = 0; j < cfg.num_topics; ++j)
            binio::write_f64(out, arch(j));
    for (int a = 0; a < cfg.num_topics; ++a)
        for (int j = 0; j < cfg.num_topics; ++j)
            binio::write_f64(out, cfg.substitution(a, j));
    for (int k = 0; k < cfg.history_len; ++k)
        binio::write_f64(out, cfg.recency_weights(k));
    binio::write_u32(out, static_cast<std::uint32_t>(archetype_of.size()));
    for (int a : archetype_of)
        binio::write_u32(out, static_cast<std::uint32_t>(a));
    if (!out)
        throw IoError("failed writing truth model: " + path);
}

std::pair<SimConfig, std::vector<int>> load_truth_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open truth model: " + path);
    if (!binio::read_magic(in, kScorerMagic))
        throw InputError(path + ": not a truth model (bad magic)");
    auto fail = [&]() { return InputError(path + ": truncated payload"); };

    SimConfig cfg;
    std::uint32_t users = 0, topics = 0, periods = 0, hist = 0;
    std::uint64_t plen = 0, origin = 0;
    if (!binio::read_u32(in, users) || !binio::read_u32(in, topics) ||
        !binio::read_u32(in, periods) || !binio::read_u32(in, hist) ||
        !binio::read_u64(in, plen) || !binio::read_u64(in, origin) ||
        !binio::read_u64(in, cfg.seed))
        throw fail();
    cfg.num_users = static_cast<int>(users);
    cfg.num_topics = static_cast<int>(topics);
    cfg.num_periods = static_cast<int>(periods);
    cfg.history_len = static_cast<int>(hist);
    cfg.period_length_seconds = static_cast<std::int64_t>(plen);
    cfg.origin_timestamp = static_cast<std::int64_t>(origin);

    cfg.exposure_rate.resize(cfg.num_topics);
    for (int j = 0; j < cfg.num_topics; ++j)
        if (!binio::read_f64(in, cfg.exposure_rate(j)))
            throw fail();
    std::uint32_t num_arch = 0;
    if (!binio::read_u32(in, num_arch))
        throw fail();
    cfg.archetypes.assign(num_arch, Eigen::VectorXd(cfg.num_topics));
    for (auto& arch : cfg.archetypes)
        for (int j = 0; j < cfg.num_topics; ++j)
            if (!binio::read_f64(in, arch(j)))
                throw fail();
    cfg.substitution.resize(cfg.num_topics, cfg.num_topics);
    for (int a = 0; a < cfg.num_topics; ++a)
        for (int j = 0; j < cfg.num_topics; ++j)
            if (!binio::read_f64(in, cfg.substitution(a, j)))
                throw fail();
    cfg.recency_weights.resize(cfg.history_len);
    for (int k = 0; k < cfg.history_len; ++k)
        if (!binio::read_f64(in, cfg.recency_weights(k)))
            throw fail();
    std::uint32_t n = 0;
    if (!binio::read_u32(in, n))
        throw fail();
    std::vector<int> archetype_of(n);
    for (auto& a : archetype_of) {
        std::uint32_t v = 0;
        if (!binio::read_u32(in, v))
            throw fail();
        a = static_cast<int>(v);
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw InputError(path + ": trailing bytes after payload");
    return {std::move(cfg), std::move(archetype_of)};
}

}  // namespace engage
