#include "engage/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "engage/errors.hpp"
#include "engage/net.hpp"
#include "engage/optimizer.hpp"

namespace engage {

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw InputError("auc: score and label counts differ");
    if (scores.empty())
        throw UndefinedAucError("auc undefined: no observations");

    std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks within tied score runs, 1-based
    double pos_rank_sum = 0.0;
    std::size_t positives = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t k = i;
        while (k < n && scores[order[k]] == scores[order[i]])
            ++k;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(k));
        for (std::size_t r = i; r < k; ++r) {
            if (labels[order[r]] != 0) {
                pos_rank_sum += avg_rank;
                ++positives;
            }
        }
        i = k;
    }
    std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0)
        throw UndefinedAucError("auc undefined: need both classes, have " +
                                std::to_string(positives) + " positives and " +
                                std::to_string(negatives) + " negatives");
    double p = static_cast<double>(positives);
    return (pos_rank_sum - 0.5 * p * (p + 1.0)) /
           (p * static_cast<double>(negatives));
}

double mean_bce(const std::vector<Eigen::VectorXd>& probs,
                const std::vector<Eigen::VectorXd>& labels) {
    if (probs.size() != labels.size())
        throw InputError("mean_bce: prediction and label counts differ");
    if (probs.empty())
        throw InputError("mean_bce: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        total += loss_bce(probs[i], labels[i]);
    return total / static_cast<double>(probs.size());
}

EvalReport evaluate_model(const Predictor& model, const Dataset& data,
                          const std::string& name, std::optional<int> slate_size,
                          const SlateScorer* scorer) {
    if (data.empty())
        throw InputError("evaluate: empty dataset");

    EvalReport report;
    report.model_name = name;
    report.instances = data.size();

    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(data.size() * static_cast<std::size_t>(data.num_topics));
    labels.reserve(scores.capacity());

    double total_bce = 0.0;
    for (const auto& m : data.instances) {
        Eigen::VectorXd p = model.predict(m.r_next, m.e_hist, m.e_freq);
        total_bce += loss_bce(p, m.y);
        for (int j = 0; j < data.num_topics; ++j) {
            scores.push_back(p(j));
            int y = m.y(j) != 0.0 ? 1 : 0;
            labels.push_back(y);
            if (y)
                ++report.positives;
            else
                ++report.negatives;
        }
    }
    report.bce = total_bce / static_cast<double>(data.size());
    report.auc = auc(scores, labels);

    if (slate_size) {
        double total_uplift = 0.0;
        for (const auto& m : data.instances) {
            SlateProblem problem;
            problem.model = &model;
            problem.e_hist = m.e_hist;
            problem.e_freq = m.e_freq;
            problem.slate_size = *slate_size;
            SlateResult res = greedy_slate(problem);
            if (scorer)
                total_uplift += uplift(scorer->score(m, res.slate), res.slate);
            else
                total_uplift += res.uplift;
        }
        report.mean_uplift = total_uplift / static_cast<double>(data.size());
    }
    return report;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

void write_report(const std::string& path, const std::vector<EvalReport>& reports) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write report: " + path);
    out << "model,bce,auc,mean_uplift,instances\n";
    for (const auto& r : reports) {
        out << r.model_name << ',' << fmt(r.bce) << ',' << fmt(r.auc) << ',';
        if (r.mean_uplift)
            out << fmt(*r.mean_uplift);
        out << ',' << r.instances << '\n';
    }
    if (!out)
        throw IoError("failed writing report: " + path);
}

std::vector<TopicStats> per_topic_stats(const Predictor& model, const Dataset& data) {
    if (data.empty())
        throw InputError("evaluate: empty dataset");
    const int J = data.num_topics;
    std::vector<std::vector<double>> scores(static_cast<std::size_t>(J));
    std::vector<std::vector<int>> labels(static_cast<std::size_t>(J));
    for (const auto& m : data.instances) {
        Eigen::VectorXd p = model.predict(m.r_next, m.e_hist, m.e_freq);
        for (int j = 0; j < J; ++j) {
            scores[static_cast<std::size_t>(j)].push_back(p(j));
            labels[static_cast<std::size_t>(j)].push_back(m.y(j) != 0.0 ? 1 : 0);
        }
    }
    std::vector<TopicStats> stats;
    stats.reserve(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        const auto& s = scores[static_cast<std::size_t>(j)];
        const auto& l = labels[static_cast<std::size_t>(j)];
        TopicStats t;
        t.topic = j;
        double bce = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            Eigen::VectorXd pv(1), yv(1);
            pv(0) = s[i];
            yv(0) = l[i];
            bce += loss_bce(pv, yv);
            if (l[i])
                ++t.positives;
            else
                ++t.negatives;
        }
        t.bce = bce / static_cast<double>(s.size());
        if (t.positives > 0 && t.negatives > 0)
            t.auc = auc(s, l);
        stats.push_back(t);
    }
    return stats;
}

void write_topic_report(const std::string& path, const std::vector<TopicStats>& stats) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write topic report: " + path);
    out << "topic,positives,negatives,bce,auc\n";
    for (const auto& t : stats) {
        out << t.topic << ',' << t.positives << ',' << t.negatives << ',' << fmt(t.bce) << ',';
        if (t.auc)
            out << fmt(*t.auc);
        out << '\n';
    }
    if (!out)
        throw IoError("failed writing topic report: " + path);
}

}  // namespace engage
