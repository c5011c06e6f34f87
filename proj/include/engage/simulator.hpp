#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "engage/evaluation.hpp"
#include "engage/pipeline.hpp"
#include "engage/predictor.hpp"

namespace engage {

// Synthetic choice process with real cross-topic substitution. Each user
// draws an archetype; in every period each topic is shown independently,
// and a shown topic is engaged with probability
//   sigmoid(base[j] + sum_k recency[k] * e(t-1-k, j) + sum_a sub(a,j) * r[a]).
// The functional form is a flat logistic, deliberately not the neural
// architecture, so fitting it requires generalization.

struct SimConfig {
    int num_users = 2000;
    int num_topics = 30;
    int num_periods = 14;
    int history_len = 4;  // recency window, matches the model's T
    std::int64_t period_length_seconds = 43200;
    std::int64_t origin_timestamp = 0;
    Eigen::VectorXd exposure_rate;            // J, per-topic show probability
    std::vector<Eigen::VectorXd> archetypes;  // base engagement logits, each J
    Eigen::MatrixXd substitution;  // J x J; (a,j) = effect of shown topic a
                                   // on topic j's logit; diagonal must be 0
    Eigen::VectorXd recency_weights;  // history_len
    std::uint64_t seed = 0;

    // Largest achievable |logit|; capped so probabilities stay strictly
    // inside (0,1) in double precision.
    double max_abs_logit() const;
    void validate() const;
};

// True P(e=1) per (user, period, topic): exposure times the engagement
// sigmoid, 0 where the topic was not shown. The Bayes-optimal predictor of
// the sampled labels.
struct TruthTensor {
    int num_users = 0;
    int num_periods = 0;
    int num_topics = 0;
    std::vector<double> probs;

    std::size_t idx(int i, int t, int j) const {
        return (static_cast<std::size_t>(i) * static_cast<std::size_t>(num_periods) +
                static_cast<std::size_t>(t)) *
                   static_cast<std::size_t>(num_topics) +
               static_cast<std::size_t>(j);
    }
    double at(int i, int t, int j) const { return probs[idx(i, t, j)]; }
};

struct SimOutput {
    InteractionLog log;
    TruthTensor truth;
    std::vector<std::string> user_ids;  // generation order == sorted order
    std::vector<int> archetype_of;      // per user
};

// Per-user derived RNG streams; record order is (user, period, topic), so
// the log is deterministic and sorted by user id.
SimOutput generate_log(const SimConfig& cfg);

// Pooled AUC of the true probabilities against the sampled labels over the
// given target periods: the ceiling no trained model can reliably beat.
double ground_truth_auc_bound(const TruthTensor& truth, const EngagementTensor& tensor,
                              const std::vector<int>& periods);

// Desk-scale default: 5 preference blocks of 6 topics, 4 archetypes, positive
// recency. with_substitution adds negative within-block interaction, which a
// per-topic model cannot express.
SimConfig make_default_sim_config(std::uint64_t seed, bool with_substitution);

// General builder behind the default: num_topics must be a multiple of 6
// (topics come in preference blocks of 6).
SimConfig make_sim_config(std::uint64_t seed, bool with_substitution, int num_users,
                          int num_topics, int num_periods, int history_len);

// Scores slates with the generative model itself.
class GroundTruthScorer : public SlateScorer {
public:
    GroundTruthScorer(SimConfig cfg, std::vector<int> archetype_of);

    // inputs.user_index selects the archetype
    Eigen::VectorXd score(const ModelInputs& inputs,
                          const Eigen::VectorXd& slate) const override;

    Eigen::VectorXd score_user(int user_index, const Eigen::VectorXd& slate,
                               const Eigen::MatrixXd& e_hist) const;

    // Predictor view bound to one user, for running the optimizer directly
    // against the truth.
    std::unique_ptr<Predictor> predictor_for(int user_index) const;

    const SimConfig& config() const { return cfg_; }

private:
    SimConfig cfg_;
    std::vector<int> archetype_of_;
};

// Probability sidecar, magic "GTPR1": I, P, J then I*P*J little-endian
// doubles.
void save_truth(const std::string& path, const TruthTensor& truth);
TruthTensor load_truth(const std::string& path);

// Generative-model sidecar, magic "GTSC1": enough state to rebuild a
// GroundTruthScorer (archetype assignment and parameters).
void save_truth_model(const std::string& path, const SimConfig& cfg,
                      const std::vector<int>& archetype_of);
std::pair<SimConfig, std::vector<int>> load_truth_model(const std::string& path);

}  // namespace engage
