#include "engage/logit.hpp"

#include <cmath>
#include <fstream>

#include "engage/binio.hpp"
#include "engage/errors.hpp"

namespace engage {

void LogitTrainConfig::validate() const {
    if (ridge < 0.0)
        throw ConfigError("logit: ridge must be nonnegative");
    if (max_iterations < 1)
        throw ConfigError("logit: max iterations must be >= 1");
    if (!(tolerance > 0.0))
        throw ConfigError("logit: tolerance must be positive");
}

namespace {

double sigmoid(double x) {
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// bce(sigmoid(s), y) = softplus(s) - y*s, stable in both tails.
double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

Eigen::VectorXd topic_features(const ModelInputs& m, int j, int T) {
    Eigen::VectorXd x(T + 3);
    x(0) = 1.0;
    x(1) = m.r_next(j);
    x(2) = m.e_freq(j);
    for (int k = 0; k < T; ++k)
        x(3 + k) = m.e_hist(j, k);
    return x;
}

}  // namespace

double logit_objective(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                       const Eigen::VectorXd& w, double ridge) {
    Eigen::VectorXd s = features * w;
    double total = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        total += softplus(s(i)) - labels(i) * s(i);
    return total / static_cast<double>(s.size()) + 0.5 * ridge * w.squaredNorm();
}

LogitParams train_logit(const Dataset& data, const LogitTrainConfig& cfg) {
    cfg.validate();
    if (data.empty())
        throw InputError("logit: empty training set");

    const int J = data.num_topics;
    const int T = data.history_len;
    const int K = T + 3;
    const Eigen::Index n = static_cast<Eigen::Index>(data.size());

    LogitParams params;
    params.num_topics = J;
    params.history_len = T;
    params.weights = Eigen::MatrixXd::Zero(J, K);
    params.degenerate.assign(static_cast<std::size_t>(J), 0);

    Eigen::MatrixXd X(n, K);
    Eigen::VectorXd y(n);
    for (int j = 0; j < J; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const ModelInputs& m = data.instances[static_cast<std::size_t>(i)];
            X.row(i) = topic_features(m, j, T).transpose();
            y(i) = m.y(j);
        }
        double pos = y.sum();
        if (pos == 0.0 || pos == static_cast<double>(n))
            params.degenerate[static_cast<std::size_t>(j)] = 1;

        Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
        double f = logit_objective(X, y, w, cfg.ridge);
        for (int iter = 0; iter < cfg.max_iterations; ++iter) {
            Eigen::VectorXd p = (X * w).unaryExpr([](double s) { return sigmoid(s); });
            Eigen::VectorXd grad =
                X.transpose() * (p - y) / static_cast<double>(n) + cfg.ridge * w;
            if (grad.lpNorm<Eigen::Infinity>() < cfg.tolerance)
                break;
            // Armijo backtracking: accept f decrease of c * step * |g|^2.
            double gg = grad.squaredNorm();
            double step = 1.0;
            while (step > 1e-20) {
                double f_new = logit_objective(X, y, w - step * grad, cfg.ridge);
                if (f_new <= f - 1e-4 * step * gg) {
                    w -= step * grad;
                    f = f_new;
                    break;
                }
                step *= 0.5;
            }
            if (step <= 1e-20)
                break;
        }
        params.weights.row(j) = w.transpose();
    }
    return params;
}

Eigen::VectorXd predict_logit(const LogitParams& params, const Eigen::VectorXd& slate,
                              const Eigen::MatrixXd& e_hist, const Eigen::VectorXd& e_freq) {
    const int J = params.num_topics;
    const int T = params.history_len;
    if (slate.size() != J || e_freq.size() != J || e_hist.rows() != J || e_hist.cols() != T)
        throw InputError("logit predict: input shapes do not match the parameters");
    Eigen::VectorXd p(J);
    for (int j = 0; j < J; ++j) {
        double s = params.weights(j, 0) + params.weights(j, 1) * slate(j) +
                   params.weights(j, 2) * e_freq(j);
        for (int k = 0; k < T; ++k)
            s += params.weights(j, 3 + k) * e_hist(j, k);
        p(j) = sigmoid(s);
    }
    return p;
}

namespace {
constexpr const char* kLogitMagic = "BLGT1";
}

void save_logit(const std::string& path, const LogitParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write logit checkpoint: " + path);
    out.write(kLogitMagic, 5);
    binio::write_u32(out, static_cast<std::uint32_t>(params.num_topics));
    binio::write_u32(out, static_cast<std::uint32_t>(params.history_len));
    for (int j = 0; j < params.num_topics; ++j)
        for (int k = 0; k < params.feature_dim(); ++k)
            binio::write_f64(out, params.weights(j, k));
    if (!out)
        throw IoError("failed writing logit checkpoint: " + path);
}

LogitParams load_logit(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open logit checkpoint: " + path);
    if (!binio::read_magic(in, kLogitMagic))
        throw CheckpointError(CheckpointError::Code::bad_magic,
                              path + ": not a logit checkpoint");
    std::uint32_t J = 0, T = 0;
    if (!binio::read_u32(in, J) || !binio::read_u32(in, T))
        throw CheckpointError(CheckpointError::Code::truncated, path + ": truncated header");
    if (J < 1 || T < 1)
        throw CheckpointError(CheckpointError::Code::dim_mismatch,
                              path + ": invalid dimensions");
    LogitParams params;
    params.num_topics = static_cast<int>(J);
    params.history_len = static_cast<int>(T);
    params.weights.resize(params.num_topics, params.feature_dim());
    params.degenerate.assign(J, 0);
    for (int j = 0; j < params.num_topics; ++j)
        for (int k = 0; k < params.feature_dim(); ++k)
            if (!binio::read_f64(in, params.weights(j, k)))
                throw CheckpointError(CheckpointError::Code::truncated,
                                      path + ": truncated payload");
    if (in.peek() != std::char_traits<char>::eof())
        throw CheckpointError(CheckpointError::Code::trailing_data,
                              path + ": trailing bytes after payload");
    return params;
}

}  // namespace engage
