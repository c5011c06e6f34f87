#include "engage/net.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "engage/binio.hpp"
#include "engage/errors.hpp"

namespace engage {

void ModelConfig::validate() const {
    if (num_topics < 2)
        throw ConfigError("model: need at least 2 topics");
    if (history_len < 1)
        throw ConfigError("model: history length must be >= 1");
    if (num_filters < 1)
        throw ConfigError("model: need at least one time filter");
    if (bottleneck_dim < 1 || bottleneck_dim >= num_topics)
        throw ConfigError("model: bottleneck dim must lie in [1, num_topics)");
}

namespace {

double sigmoid(double x) {
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double leaky(double x) { return x >= 0.0 ? x : kLeakySlope * x; }

// Derivative at 0 pinned to the positive branch.
double leaky_grad(double x) { return x >= 0.0 ? 1.0 : kLeakySlope; }

void fill_uniform(Eigen::MatrixXd& w, double bound, Rng& rng) {
    for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            w(r, c) = rng.uniform(-bound, bound);
}

void fill_uniform(Eigen::VectorXd& w, double bound, Rng& rng) {
    for (Eigen::Index r = 0; r < w.size(); ++r)
        w(r) = rng.uniform(-bound, bound);
}

void check_inputs(const ModelConfig& cfg, const Eigen::VectorXd& slate,
                  const Eigen::MatrixXd& e_hist, const Eigen::VectorXd& e_freq) {
    if (slate.size() != cfg.num_topics || e_freq.size() != cfg.num_topics ||
        e_hist.rows() != cfg.num_topics || e_hist.cols() != cfg.history_len)
        throw InputError("model forward: input shapes do not match the configuration");
}

}  // namespace

ModelParams init_params(const ModelConfig& config, Rng& rng) {
    config.validate();
    const int J = config.num_topics;
    const int T = config.history_len;
    const int H = config.num_filters;
    const int L = config.bottleneck_dim;
    const int K = config.feature_dim();

    ModelParams p;
    p.config = config;
    p.w_time.resize(T, H);
    p.w_avail.resize(L, J);
    p.w_freq.resize(L, J);
    p.w_hist.resize(L, J);
    p.theta.resize(K);
    fill_uniform(p.w_time, 1.0 / std::sqrt(static_cast<double>(T)), rng);
    fill_uniform(p.w_avail, 1.0 / std::sqrt(static_cast<double>(J)), rng);
    fill_uniform(p.w_freq, 1.0 / std::sqrt(static_cast<double>(J)), rng);
    fill_uniform(p.w_hist, 1.0 / std::sqrt(static_cast<double>(J)), rng);
    fill_uniform(p.theta, 1.0 / std::sqrt(static_cast<double>(K)), rng);

    p.adam.step = 0;
    p.adam.m_w_time = Eigen::MatrixXd::Zero(T, H);
    p.adam.v_w_time = Eigen::MatrixXd::Zero(T, H);
    p.adam.m_w_avail = Eigen::MatrixXd::Zero(L, J);
    p.adam.v_w_avail = Eigen::MatrixXd::Zero(L, J);
    p.adam.m_w_freq = Eigen::MatrixXd::Zero(L, J);
    p.adam.v_w_freq = Eigen::MatrixXd::Zero(L, J);
    p.adam.m_w_hist = Eigen::MatrixXd::Zero(L, J);
    p.adam.v_w_hist = Eigen::MatrixXd::Zero(L, J);
    p.adam.m_theta = Eigen::VectorXd::Zero(K);
    p.adam.v_theta = Eigen::VectorXd::Zero(K);
    return p;
}

ForwardTrace forward(const ModelParams& params, const Eigen::VectorXd& slate,
                     const Eigen::MatrixXd& e_hist, const Eigen::VectorXd& e_freq) {
    const ModelConfig& cfg = params.config;
    check_inputs(cfg, slate, e_hist, e_freq);
    const int J = cfg.num_topics;
    const int H = cfg.num_filters;
    const int K = cfg.feature_dim();

    ForwardTrace t;
    t.act_pre = e_hist * params.w_time;  // J x H
    t.e_filt = t.act_pre.unaryExpr([](double x) { return leaky(x); });

    t.code_avail = params.w_avail * slate;
    t.recon_avail = params.w_avail.transpose() * t.code_avail;
    t.code_freq = params.w_freq * e_freq;
    t.recon_freq = params.w_freq.transpose() * t.code_freq;
    t.code_hist = params.w_hist * t.e_filt;  // L x H
    t.recon_hist = params.w_hist.transpose() * t.code_hist;  // J x H

    t.z.resize(J, K);
    t.z.col(0).setOnes();
    t.z.col(1) = slate;
    t.z.col(2) = t.recon_avail;
    t.z.col(3) = e_freq;
    t.z.col(4) = t.recon_freq;
    t.z.middleCols(5, H) = t.e_filt;
    t.z.middleCols(5 + H, H) = t.recon_hist;

    t.p = (t.z * params.theta).unaryExpr([](double x) { return sigmoid(x); });
    return t;
}

ForwardTrace forward(const ModelParams& params, const ModelInputs& inputs) {
    return forward(params, inputs.r_next, inputs.e_hist, inputs.e_freq);
}

Eigen::VectorXd predict_probs(const ModelParams& params, const Eigen::VectorXd& slate,
                              const Eigen::MatrixXd& e_hist, const Eigen::VectorXd& e_freq) {
    return forward(params, slate, e_hist, e_freq).p;
}

double loss_bce(const Eigen::VectorXd& p, const Eigen::VectorXd& y) {
    if (p.size() != y.size())
        throw InputError("loss: probability and label lengths differ");
    double total = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        double q = std::min(std::max(p(j), kBceEps), 1.0 - kBceEps);
        total += -(y(j) * std::log(q) + (1.0 - y(j)) * std::log(1.0 - q));
    }
    return total;
}

ParamGrads zero_grads(const ModelConfig& config) {
    ParamGrads g;
    g.w_time = Eigen::MatrixXd::Zero(config.history_len, config.num_filters);
    g.w_avail = Eigen::MatrixXd::Zero(config.bottleneck_dim, config.num_topics);
    g.w_freq = Eigen::MatrixXd::Zero(config.bottleneck_dim, config.num_topics);
    g.w_hist = Eigen::MatrixXd::Zero(config.bottleneck_dim, config.num_topics);
    g.theta = Eigen::VectorXd::Zero(config.feature_dim());
    return g;
}

void accumulate(ParamGrads& into, const ParamGrads& grads) {
    into.w_time += grads.w_time;
    into.w_avail += grads.w_avail;
    into.w_freq += grads.w_freq;
    into.w_hist += grads.w_hist;
    into.theta += grads.theta;
}

ParamGrads backward(const ModelParams& params, const ModelInputs& inputs,
                    const ForwardTrace& trace) {
    const ModelConfig& cfg = params.config;
    const int H = cfg.num_filters;

    ParamGrads g = zero_grads(cfg);

    // d(sum_j bce_j)/d(logit_j) = p_j - y_j
    Eigen::VectorXd glogit = trace.p - inputs.y;
    g.theta = trace.z.transpose() * glogit;
    Eigen::MatrixXd dz = glogit * params.theta.transpose();  // J x K

    // Column blocks of dz. Columns 0/1/3 hit constants or raw inputs, which
    // carry no parameters.
    Eigen::VectorXd d_recon_avail = dz.col(2);
    Eigen::VectorXd d_recon_freq = dz.col(4);
    Eigen::MatrixXd d_e_filt = dz.middleCols(5, H);
    Eigen::MatrixXd d_recon_hist = dz.middleCols(5 + H, H);

    // Tied bottleneck: code f = W x, recon = W^T f. The weight gradient is
    // the encoder term (df x^T) plus the decoder term (f drecon^T).
    Eigen::VectorXd df_avail = params.w_avail * d_recon_avail;
    g.w_avail = df_avail * inputs.r_next.transpose() +
                trace.code_avail * d_recon_avail.transpose();

    Eigen::VectorXd df_freq = params.w_freq * d_recon_freq;
    g.w_freq = df_freq * inputs.e_freq.transpose() +
               trace.code_freq * d_recon_freq.transpose();

    // The history bottleneck is applied per filter column; its input also
    // feeds z directly, so the filter gradient sums both paths.
    for (int h = 0; h < H; ++h) {
        Eigen::VectorXd d_recon = d_recon_hist.col(h);
        Eigen::VectorXd df = params.w_hist * d_recon;
        g.w_hist += df * trace.e_filt.col(h).transpose() +
                    trace.code_hist.col(h) * d_recon.transpose();
        d_e_filt.col(h) += params.w_hist.transpose() * df;
    }

    Eigen::MatrixXd d_act =
        d_e_filt.cwiseProduct(trace.act_pre.unaryExpr([](double x) { return leaky_grad(x); }));
    g.w_time = inputs.e_hist.transpose() * d_act;
    return g;
}

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

template <typename Mat>
void adam_update(Mat& w, Mat& m, Mat& v, const Mat& g, double lr, double c1, double c2) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
    w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
}

}  // namespace

void adam_step(ModelParams& params, const ParamGrads& grads, double learning_rate) {
    AdamState& a = params.adam;
    a.step += 1;
    double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(a.step));
    double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(a.step));
    adam_update(params.w_time, a.m_w_time, a.v_w_time, grads.w_time, learning_rate, c1, c2);
    adam_update(params.w_avail, a.m_w_avail, a.v_w_avail, grads.w_avail, learning_rate, c1, c2);
    adam_update(params.w_freq, a.m_w_freq, a.v_w_freq, grads.w_freq, learning_rate, c1, c2);
    adam_update(params.w_hist, a.m_w_hist, a.v_w_hist, grads.w_hist, learning_rate, c1, c2);
    adam_update(params.theta, a.m_theta, a.v_theta, grads.theta, learning_rate, c1, c2);
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0))
        throw ConfigError("train: learning rate must be positive");
    if (batch_size < 1)
        throw ConfigError("train: batch size must be >= 1");
    if (epochs < 1)
        throw ConfigError("train: epochs must be >= 1");
}

double mean_bce(const ModelParams& params, const Dataset& data) {
    if (data.empty())
        return std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
    for (const auto& m : data.instances)
        total += loss_bce(forward(params, m).p, m.y);
    return total / static_cast<double>(data.size());
}

std::vector<EpochStats> train_net(ModelParams& params, const Dataset& train,
                                  const Dataset& valid, const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty())
        throw InputError("train: empty training set");
    if (train.num_topics != params.config.num_topics ||
        train.history_len != params.config.history_len)
        throw InputError("train: dataset shape does not match the model");

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<EpochStats> curve;
    curve.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        std::size_t pos = 0;
        while (pos < order.size()) {
            std::size_t end = std::min(pos + static_cast<std::size_t>(cfg.batch_size),
                                       order.size());
            ParamGrads batch = zero_grads(params.config);
            for (std::size_t k = pos; k < end; ++k) {
                const ModelInputs& m = train.instances[order[k]];
                ForwardTrace trace = forward(params, m);
                accumulate(batch, backward(params, m, trace));
            }
            adam_step(params, batch, cfg.learning_rate);
            pos = end;
        }
        curve.push_back(EpochStats{epoch, mean_bce(params, train), mean_bce(params, valid)});
    }
    return curve;
}

namespace {

constexpr const char* kNetMagic = "CAEM1";
constexpr std::uint32_t kNetVersion = 1;

void write_mat(std::ostream& out, const Eigen::MatrixXd& w) {
    for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            binio::write_f64(out, w(r, c));
}

void write_vec(std::ostream& out, const Eigen::VectorXd& w) {
    for (Eigen::Index r = 0; r < w.size(); ++r)
        binio::write_f64(out, w(r));
}

bool read_mat(std::istream& in, Eigen::MatrixXd& w) {
    for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            if (!binio::read_f64(in, w(r, c)))
                return false;
    return true;
}

bool read_vec(std::istream& in, Eigen::VectorXd& w) {
    for (Eigen::Index r = 0; r < w.size(); ++r)
        if (!binio::read_f64(in, w(r)))
            return false;
    return true;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write checkpoint: " + path);
    out.write(kNetMagic, 5);
    binio::write_u32(out, kNetVersion);
    binio::write_u32(out, static_cast<std::uint32_t>(params.config.num_topics));
    binio::write_u32(out, static_cast<std::uint32_t>(params.config.history_len));
    binio::write_u32(out, static_cast<std::uint32_t>(params.config.num_filters));
    binio::write_u32(out, static_cast<std::uint32_t>(params.config.bottleneck_dim));
    write_mat(out, params.w_time);
    write_mat(out, params.w_avail);
    write_mat(out, params.w_freq);
    write_mat(out, params.w_hist);
    write_vec(out, params.theta);
    binio::write_u64(out, params.adam.step);
    write_mat(out, params.adam.m_w_time);
    write_mat(out, params.adam.m_w_avail);
    write_mat(out, params.adam.m_w_freq);
    write_mat(out, params.adam.m_w_hist);
    write_vec(out, params.adam.m_theta);
    write_mat(out, params.adam.v_w_time);
    write_mat(out, params.adam.v_w_avail);
    write_mat(out, params.adam.v_w_freq);
    write_mat(out, params.adam.v_w_hist);
    write_vec(out, params.adam.v_theta);
    if (!out)
        throw IoError("failed writing checkpoint: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open checkpoint: " + path);
    if (!binio::read_magic(in, kNetMagic))
        throw CheckpointError(CheckpointError::Code::bad_magic,
                              path + ": not a model checkpoint");
    std::uint32_t version = 0;
    if (!binio::read_u32(in, version))
        throw CheckpointError(CheckpointError::Code::truncated, path + ": truncated header");
    if (version != kNetVersion)
        throw CheckpointError(CheckpointError::Code::bad_version,
                              path + ": unsupported checkpoint version " +
                                  std::to_string(version));

    std::uint32_t J = 0, T = 0, H = 0, L = 0;
    if (!binio::read_u32(in, J) || !binio::read_u32(in, T) || !binio::read_u32(in, H) ||
        !binio::read_u32(in, L))
        throw CheckpointError(CheckpointError::Code::truncated, path + ": truncated header");

    ModelConfig cfg;
    cfg.num_topics = static_cast<int>(J);
    cfg.history_len = static_cast<int>(T);
    cfg.num_filters = static_cast<int>(H);
    cfg.bottleneck_dim = static_cast<int>(L);
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw CheckpointError(CheckpointError::Code::dim_mismatch,
                              path + ": invalid dimensions (" + e.what() + ")");
    }

    ModelParams p;
    p.config = cfg;
    p.w_time.resize(cfg.history_len, cfg.num_filters);
    p.w_avail.resize(cfg.bottleneck_dim, cfg.num_topics);
    p.w_freq.resize(cfg.bottleneck_dim, cfg.num_topics);
    p.w_hist.resize(cfg.bottleneck_dim, cfg.num_topics);
    p.theta.resize(cfg.feature_dim());
    p.adam.m_w_time.resize(cfg.history_len, cfg.num_filters);
    p.adam.v_w_time.resize(cfg.history_len, cfg.num_filters);
    p.adam.m_w_avail.resize(cfg.bottleneck_dim, cfg.num_topics);
    p.adam.v_w_avail.resize(cfg.bottleneck_dim, cfg.num_topics);
    p.adam.m_w_freq.resize(cfg.bottleneck_dim, cfg.num_topics);
    p.adam.v_w_freq.resize(cfg.bottleneck_dim, cfg.num_topics);
    p.adam.m_w_hist.resize(cfg.bottleneck_dim, cfg.num_topics);
    p.adam.v_w_hist.resize(cfg.bottleneck_dim, cfg.num_topics);
    p.adam.m_theta.resize(cfg.feature_dim());
    p.adam.v_theta.resize(cfg.feature_dim());

    bool ok = read_mat(in, p.w_time) && read_mat(in, p.w_avail) && read_mat(in, p.w_freq) &&
              read_mat(in, p.w_hist) && read_vec(in, p.theta) &&
              binio::read_u64(in, p.adam.step) && read_mat(in, p.adam.m_w_time) &&
              read_mat(in, p.adam.m_w_avail) && read_mat(in, p.adam.m_w_freq) &&
              read_mat(in, p.adam.m_w_hist) && read_vec(in, p.adam.m_theta) &&
              read_mat(in, p.adam.v_w_time) && read_mat(in, p.adam.v_w_avail) &&
              read_mat(in, p.adam.v_w_freq) && read_mat(in, p.adam.v_w_hist) &&
              read_vec(in, p.adam.v_theta);
    if (!ok)
        throw CheckpointError(CheckpointError::Code::truncated, path + ": truncated payload");
    if (in.peek() != std::char_traits<char>::eof())
        throw CheckpointError(CheckpointError::Code::trailing_data,
                              path + ": trailing bytes after payload");
    return p;
}

}  // namespace engage
