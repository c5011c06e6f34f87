#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "engage/pipeline.hpp"
#include "engage/predictor.hpp"

namespace engage {

struct EvalReport {
    std::string model_name;
    double bce = 0.0;
    double auc = 0.0;
    std::optional<double> mean_uplift;
    std::size_t instances = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

// Rank-sum AUC with average ranks on ties: equals the fraction of
// (positive, negative) pairs ranked correctly, ties counted half.
// Throws UndefinedAucError unless both classes are present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Mean over instances of the topic-summed clipped BCE.
double mean_bce(const std::vector<Eigen::VectorXd>& probs,
                const std::vector<Eigen::VectorXd>& labels);

// Scores a slate for one instance; lets ground-truth models use the user
// identity that the plain Predictor interface does not carry.
class SlateScorer {
public:
    virtual ~SlateScorer() = default;
    virtual Eigen::VectorXd score(const ModelInputs& inputs,
                                  const Eigen::VectorXd& slate) const = 0;
};

class PredictorScorer : public SlateScorer {
public:
    explicit PredictorScorer(const Predictor& model) : model_(&model) {}
    Eigen::VectorXd score(const ModelInputs& inputs,
                          const Eigen::VectorXd& slate) const override {
        return model_->predict(slate, inputs.e_hist, inputs.e_freq);
    }

private:
    const Predictor* model_;
};

// BCE and AUC over all pooled (instance, topic) predictions. When slate_size
// is given, also runs the greedy optimizer per instance and reports the mean
// uplift; slates are scored by `scorer` when given (e.g. the most complex
// model, or ground truth), else by `model` itself.
EvalReport evaluate_model(const Predictor& model, const Dataset& data,
                          const std::string& name,
                          std::optional<int> slate_size = std::nullopt,
                          const SlateScorer* scorer = nullptr);

// Header `model,bce,auc,mean_uplift,instances`; mean_uplift empty when absent.
void write_report(const std::string& path, const std::vector<EvalReport>& reports);

struct TopicStats {
    int topic = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    double bce = 0.0;
    std::optional<double> auc;  // absent when the topic is single-class
};

std::vector<TopicStats> per_topic_stats(const Predictor& model, const Dataset& data);
void write_topic_report(const std::string& path, const std::vector<TopicStats>& stats);

}  // namespace engage
