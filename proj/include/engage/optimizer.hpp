#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "engage/predictor.hpp"

namespace engage {

// Slate selection: pick n of J topics maximizing the sum of predicted
// engagement probabilities, where each probability may depend on the whole
// slate. Greedy is the production heuristic; exhaustive enumeration is the
// exactness oracle at small J; top-n covers slate-independent models.

struct SlateProblem {
    const Predictor* model = nullptr;
    Eigen::MatrixXd e_hist;
    Eigen::VectorXd e_freq;
    int slate_size = 0;
    void validate() const;
};

enum class SlateMethod { greedy, exhaustive, top_n };
const char* to_string(SlateMethod method);

struct SlateResult {
    std::vector<int> chosen;  // sorted topic ids, size n
    Eigen::VectorXd slate;    // indicator of chosen
    Eigen::VectorXd probs;    // model probabilities under the final slate
    double uplift = 0.0;      // probs . slate, in [0, n]
    SlateMethod method = SlateMethod::greedy;
};

double uplift(const Eigen::VectorXd& probs, const Eigen::VectorXd& slate);

// Adds one topic per step. Every candidate is scored by re-predicting all
// probabilities under the tentative slate, so already-chosen topics'
// probabilities move with each addition. Ties go to the lowest topic id.
// frozen_marginals instead keeps each chosen topic's probability at its
// value when selected and only the candidate's probability varies.
SlateResult greedy_slate(const SlateProblem& problem, bool frozen_marginals = false);

// Lexicographic scan over all C(J,n) subsets; ties keep the lexicographically
// smallest subset. Refuses when C(J,n) exceeds the cap.
SlateResult exhaustive_slate(const SlateProblem& problem, double max_subsets = 1e6);

// Picks the n largest probabilities under the full slate. Optimal only for
// models whose probabilities ignore the slate.
SlateResult top_n_slate(const SlateProblem& problem);

double binomial_count(int n, int k);

}  // namespace engage
