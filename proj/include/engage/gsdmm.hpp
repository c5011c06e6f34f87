#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "engage/corpus.hpp"
#include "engage/rng.hpp"

namespace engage {

struct ClusteringConfig {
    int max_clusters = 40;
    double alpha = 0.1;
    double beta = 0.1;
    int iterations = 30;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

// The fixed topic label set produced by clustering.
struct TopicUniverse {
    int num_topics = 0;
    std::vector<std::size_t> doc_counts;  // per topic
};

struct TopicAssignment {
    std::vector<int> labels;              // one per document
    std::vector<int> occupied_clusters;   // sorted, >= 1 document each
    TopicUniverse topic_universe;
    std::vector<int> occupied_per_sweep;  // occupied-cluster count after each sweep

    static TopicAssignment from_labels(std::vector<int> labels);
    void validate() const;  // throws InputError
};

// Collapsed Gibbs sampler for the Dirichlet multinomial mixture: every
// document sits in exactly one cluster, and one sweep reassigns each document
// by sampling from its conditional given all other assignments.
class GsdmmSampler {
public:
    GsdmmSampler(const Corpus& corpus, const ClusteringConfig& cfg);

    void sweep();

    // Normalized conditional p(z_d = k | rest) with document d's own counts
    // removed, exactly as used during reassignment.
    std::vector<double> conditional(std::size_t doc) const;

    const std::vector<int>& labels() const { return labels_; }
    int occupied_count() const;
    std::size_t total_documents_assigned() const;

private:
    void remove_doc(std::size_t d);
    void add_doc(std::size_t d, int k);
    std::vector<double> scores_normalized(std::size_t d, int exclude) const;

    const Corpus* corpus_;
    ClusteringConfig cfg_;
    Rng rng_;
    std::vector<int> labels_;
    std::vector<int> cluster_docs_;                // m_z
    std::vector<long long> cluster_tokens_;        // n_z
    std::vector<std::vector<int>> cluster_word_;   // n_zw, dense K x V
};

// Runs `cfg.iterations` sweeps from a seeded random initialization and
// returns the compacted assignment (empty clusters dropped, labels dense).
TopicAssignment fit_gsdmm(const Corpus& corpus, const ClusteringConfig& cfg);

// (topic, count) sorted by count descending, ties by topic id ascending.
std::vector<std::pair<int, std::size_t>> topic_histogram(const TopicAssignment& assignment);

// Maps occupied cluster ids to 0..J-1 in order of first appearance; the
// partition itself is unchanged.
TopicAssignment relabel_compact(const TopicAssignment& assignment);

// Adjusted Rand index between two labelings of the same documents.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace engage
