#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "engage/pipeline.hpp"
#include "engage/predictor.hpp"
#include "engage/rng.hpp"

namespace engage {

// Choice-aware engagement model. For one user instance it maps
//   slate R (J), engagement history E_hist (J x T, newest column first),
//   lifetime engagement frequency E_freq (J)
// to per-topic engagement probabilities p (J).
//
// Pipeline: H leaky-ReLU time filters compress the history into E_H (J x H);
// three tied-weight linear bottlenecks (L x J each) produce low-rank
// reconstructions R_bar, E_freq_bar and, filter column by filter column,
// E_H_bar. Features per topic j are the row
//   z_j = [1, R_j, R_bar_j, E_freq_j, E_freq_bar_j, E_H_j(1..H), E_H_bar_j(1..H)]
// and p_j = sigmoid(z_j . theta). The bottleneck rows couple topics, so a
// probability depends on the whole slate, not only on entry j.

struct ModelConfig {
    int num_topics = 0;    // J
    int history_len = 0;   // T
    int num_filters = 0;   // H
    int bottleneck_dim = 0;  // L, must be < J

    int feature_dim() const { return 5 + 2 * num_filters; }
    void validate() const;
};

struct AdamState {
    std::uint64_t step = 0;
    Eigen::MatrixXd m_w_time, v_w_time;
    Eigen::MatrixXd m_w_avail, v_w_avail;
    Eigen::MatrixXd m_w_freq, v_w_freq;
    Eigen::MatrixXd m_w_hist, v_w_hist;
    Eigen::VectorXd m_theta, v_theta;
};

struct ModelParams {
    ModelConfig config;
    Eigen::MatrixXd w_time;   // T x H, one filter per column
    Eigen::MatrixXd w_avail;  // L x J, bottleneck over the slate
    Eigen::MatrixXd w_freq;   // L x J, bottleneck over lifetime frequency
    Eigen::MatrixXd w_hist;   // L x J, bottleneck over each filter output column
    Eigen::VectorXd theta;    // K = 5 + 2H
    AdamState adam;
};

struct ParamGrads {
    Eigen::MatrixXd w_time;
    Eigen::MatrixXd w_avail;
    Eigen::MatrixXd w_freq;
    Eigen::MatrixXd w_hist;
    Eigen::VectorXd theta;
};

// Intermediates retained for the backward pass.
struct ForwardTrace {
    Eigen::MatrixXd act_pre;    // J x H, filter pre-activations
    Eigen::MatrixXd e_filt;     // J x H, leaky-ReLU outputs
    Eigen::VectorXd code_avail;   // L
    Eigen::VectorXd recon_avail;  // J
    Eigen::VectorXd code_freq;    // L
    Eigen::VectorXd recon_freq;   // J
    Eigen::MatrixXd code_hist;    // L x H
    Eigen::MatrixXd recon_hist;   // J x H
    Eigen::MatrixXd z;          // J x K
    Eigen::VectorXd p;          // J
};

constexpr double kLeakySlope = 0.01;
constexpr double kBceEps = 1e-7;

// Symmetric uniform init, bound 1/sqrt(fan-in). Draw order is fixed
// (w_time, w_avail, w_freq, w_hist, theta; matrices row by row) so a seed
// pins the parameters exactly.
ModelParams init_params(const ModelConfig& config, Rng& rng);

ForwardTrace forward(const ModelParams& params, const Eigen::VectorXd& slate,
                     const Eigen::MatrixXd& e_hist, const Eigen::VectorXd& e_freq);
ForwardTrace forward(const ModelParams& params, const ModelInputs& inputs);

Eigen::VectorXd predict_probs(const ModelParams& params, const Eigen::VectorXd& slate,
                              const Eigen::MatrixXd& e_hist, const Eigen::VectorXd& e_freq);

// Per-instance loss: sum over topics of binary cross-entropy, probabilities
// clamped to [eps, 1-eps] before the logs.
double loss_bce(const Eigen::VectorXd& p, const Eigen::VectorXd& y);

// Gradient of the per-instance loss for every parameter tensor. Each tied
// bottleneck weight collects both its encoder and its decoder term.
ParamGrads backward(const ModelParams& params, const ModelInputs& inputs,
                    const ForwardTrace& trace);

ParamGrads zero_grads(const ModelConfig& config);
void accumulate(ParamGrads& into, const ParamGrads& grads);

// One Adam update from an (unnormalized) gradient sum. Advances the shared
// step counter; bias correction uses the advanced count.
void adam_step(ModelParams& params, const ParamGrads& grads, double learning_rate);

struct TrainConfig {
    double learning_rate = 1e-5;
    int batch_size = 32;
    int epochs = 50;
    std::uint64_t seed = 0;
    void validate() const;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_bce = 0.0;
    double valid_bce = 0.0;
};

// Mean over instances of the topic-summed BCE. NaN on an empty set.
double mean_bce(const ModelParams& params, const Dataset& data);

// Mini-batch Adam. Instance order reshuffles every epoch from one seeded
// stream; the batch gradient is the plain sum over the batch.
std::vector<EpochStats> train_net(ModelParams& params, const Dataset& train,
                                  const Dataset& valid, const TrainConfig& cfg);

// Binary checkpoint, magic "CAEM1": version, dims (J, T, H, L), weights,
// then Adam state (step, first moments, second moments), all little-endian.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

class NetPredictor : public Predictor {
public:
    explicit NetPredictor(ModelParams params) : params_(std::move(params)) {}
    int num_topics() const override { return params_.config.num_topics; }
    Eigen::VectorXd predict(const Eigen::VectorXd& slate, const Eigen::MatrixXd& e_hist,
                            const Eigen::VectorXd& e_freq) const override {
        return predict_probs(params_, slate, e_hist, e_freq);
    }
    const ModelParams& params() const { return params_; }

private:
    ModelParams params_;
};

}  // namespace engage
