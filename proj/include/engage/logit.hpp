#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "engage/pipeline.hpp"
#include "engage/predictor.hpp"

namespace engage {

// Per-topic independent binary logistic regression baseline. Topic j sees
// only its own features; no weight couples two topics.

struct LogitTrainConfig {
    double ridge = 1e-4;   // L2 on every weight, bias included; keeps
                           // separable and single-class fits finite
    int max_iterations = 500;
    double tolerance = 1e-7;  // stop when the gradient inf-norm drops below
    void validate() const;
};

struct LogitParams {
    int num_topics = 0;
    int history_len = 0;
    // J x (T+3); row j is [bias, slate_j, e_freq_j, history newest..oldest].
    Eigen::MatrixXd weights;
    // 1 where the topic's training labels were single-class. Not serialized;
    // recomputable from the data.
    std::vector<std::uint8_t> degenerate;

    int feature_dim() const { return history_len + 3; }
};

// Full-batch gradient descent with Armijo backtracking on the ridge-penalized
// mean BCE. Convex, starts at zero, so the fit is seed-free.
LogitParams train_logit(const Dataset& data, const LogitTrainConfig& cfg);

Eigen::VectorXd predict_logit(const LogitParams& params, const Eigen::VectorXd& slate,
                              const Eigen::MatrixXd& e_hist, const Eigen::VectorXd& e_freq);

// Ridge-penalized mean objective the trainer minimizes for one topic.
double logit_objective(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                       const Eigen::VectorXd& w, double ridge);

// Binary checkpoint, magic "BLGT1": J, T, then J x (T+3) weights row by row,
// little-endian.
void save_logit(const std::string& path, const LogitParams& params);
LogitParams load_logit(const std::string& path);

class LogitPredictor : public Predictor {
public:
    explicit LogitPredictor(LogitParams params) : params_(std::move(params)) {}
    int num_topics() const override { return params_.num_topics; }
    Eigen::VectorXd predict(const Eigen::VectorXd& slate, const Eigen::MatrixXd& e_hist,
                            const Eigen::VectorXd& e_freq) const override {
        return predict_logit(params_, slate, e_hist, e_freq);
    }
    const LogitParams& params() const { return params_; }

private:
    LogitParams params_;
};

}  // namespace engage
