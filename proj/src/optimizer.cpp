#include "engage/optimizer.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "engage/errors.hpp"

namespace engage {

const char* to_string(SlateMethod method) {
    switch (method) {
        case SlateMethod::greedy: return "greedy";
        case SlateMethod::exhaustive: return "exhaustive";
        case SlateMethod::top_n: return "top_n";
    }
    return "?";
}

void SlateProblem::validate() const {
    if (model == nullptr)
        throw InputError("slate problem: no model");
    int J = model->num_topics();
    if (slate_size < 1 || slate_size > J)
        throw InputError("slate problem: slate size " + std::to_string(slate_size) +
                         " outside [1," + std::to_string(J) + "]");
    if (e_hist.rows() != J || e_freq.size() != J)
        throw InputError("slate problem: context shapes do not match the model");
}

double uplift(const Eigen::VectorXd& probs, const Eigen::VectorXd& slate) {
    if (probs.size() != slate.size())
        throw InputError("uplift: shape mismatch");
    return probs.dot(slate);
}

namespace {

SlateResult finish(const SlateProblem& problem, std::vector<int> chosen, SlateMethod method) {
    std::sort(chosen.begin(), chosen.end());
    SlateResult res;
    res.method = method;
    res.chosen = std::move(chosen);
    res.slate = Eigen::VectorXd::Zero(problem.model->num_topics());
    for (int j : res.chosen)
        res.slate(j) = 1.0;
    res.probs = problem.model->predict(res.slate, problem.e_hist, problem.e_freq);
    res.uplift = uplift(res.probs, res.slate);
    return res;
}

}  // namespace

SlateResult greedy_slate(const SlateProblem& problem, bool frozen_marginals) {
    problem.validate();
    const int J = problem.model->num_topics();
    const int n = problem.slate_size;

    std::vector<int> chosen;
    std::vector<char> in_slate(static_cast<std::size_t>(J), 0);
    Eigen::VectorXd slate = Eigen::VectorXd::Zero(J);
    double frozen_sum = 0.0;

    for (int step = 0; step < n; ++step) {
        double best_obj = -std::numeric_limits<double>::infinity();
        int best = -1;
        double best_prob = 0.0;
        for (int c = 0; c < J; ++c) {
            if (in_slate[static_cast<std::size_t>(c)])
                continue;
            slate(c) = 1.0;
            Eigen::VectorXd probs = problem.model->predict(slate, problem.e_hist,
                                                           problem.e_freq);
            slate(c) = 0.0;
            double obj;
            if (frozen_marginals) {
                obj = frozen_sum + probs(c);
            } else {
                obj = probs(c);
                for (int j : chosen)
                    obj += probs(j);
            }
            // strict comparison with ascending c keeps the lowest id on ties
            if (obj > best_obj) {
                best_obj = obj;
                best = c;
                best_prob = probs(c);
            }
        }
        chosen.push_back(best);
        in_slate[static_cast<std::size_t>(best)] = 1;
        slate(best) = 1.0;
        frozen_sum += best_prob;
    }
    return finish(problem, std::move(chosen), SlateMethod::greedy);
}

double binomial_count(int n, int k) {
    if (k < 0 || k > n)
        return 0.0;
    k = std::min(k, n - k);
    double c = 1.0;
    for (int i = 1; i <= k; ++i)
        c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    return c;
}

SlateResult exhaustive_slate(const SlateProblem& problem, double max_subsets) {
    problem.validate();
    const int J = problem.model->num_topics();
    const int n = problem.slate_size;

    double count = binomial_count(J, n);
    if (count > max_subsets) {
        std::ostringstream msg;
        msg << std::setprecision(18) << "exhaustive slate: C(" << J << "," << n << ")="
            << count << " subsets exceed the cap " << max_subsets;
        throw InputError(msg.str());
    }

    std::vector<int> subset(static_cast<std::size_t>(n));
    std::iota(subset.begin(), subset.end(), 0);

    std::vector<int> best_subset;
    double best_obj = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd slate = Eigen::VectorXd::Zero(J);
    while (true) {
        slate.setZero();
        for (int j : subset)
            slate(j) = 1.0;
        Eigen::VectorXd probs = problem.model->predict(slate, problem.e_hist, problem.e_freq);
        double obj = 0.0;
        for (int j : subset)
            obj += probs(j);
        // lexicographic enumeration + strict comparison keeps the smallest
        // maximizing subset
        if (obj > best_obj) {
            best_obj = obj;
            best_subset = subset;
        }
        // advance to the next combination
        int i = n - 1;
        while (i >= 0 && subset[static_cast<std::size_t>(i)] == J - n + i)
            --i;
        if (i < 0)
            break;
        ++subset[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k)
            subset[static_cast<std::size_t>(k)] = subset[static_cast<std::size_t>(k - 1)] + 1;
    }
    return finish(problem, std::move(best_subset), SlateMethod::exhaustive);
}

SlateResult top_n_slate(const SlateProblem& problem) {
    problem.validate();
    const int J = problem.model->num_topics();
    Eigen::VectorXd probs =
        problem.model->predict(Eigen::VectorXd::Ones(J), problem.e_hist, problem.e_freq);
    std::vector<int> order(static_cast<std::size_t>(J));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return probs(a) > probs(b); });
    order.resize(static_cast<std::size_t>(problem.slate_size));
    return finish(problem, std::move(order), SlateMethod::top_n);
}

}  // namespace engage
