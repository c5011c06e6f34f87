#include "engage/gsdmm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "engage/errors.hpp"

namespace engage {

void ClusteringConfig::validate() const {
    if (max_clusters < 1)
        throw ConfigError("clustering: max_clusters must be >= 1");
    if (!(alpha > 0.0))
        throw ConfigError("clustering: alpha must be > 0");
    if (!(beta > 0.0))
        throw ConfigError("clustering: beta must be > 0");
    if (iterations < 1)
        throw ConfigError("clustering: iterations must be >= 1");
}

TopicAssignment TopicAssignment::from_labels(std::vector<int> labels) {
    TopicAssignment a;
    a.labels = std::move(labels);
    std::map<int, std::size_t> counts;
    for (int l : a.labels) {
        if (l < 0)
            throw InputError("assignment: negative label");
        ++counts[l];
    }
    for (const auto& [label, n] : counts)
        a.occupied_clusters.push_back(label);
    int max_label = a.occupied_clusters.empty() ? -1 : a.occupied_clusters.back();
    a.topic_universe.num_topics = static_cast<int>(a.occupied_clusters.size());
    a.topic_universe.doc_counts.assign(static_cast<std::size_t>(max_label) + 1, 0);
    for (const auto& [label, n] : counts)
        a.topic_universe.doc_counts[static_cast<std::size_t>(label)] = n;
    return a;
}

void TopicAssignment::validate() const {
    if (labels.empty())
        throw InputError("assignment: no labels");
    for (int l : labels)
        if (!std::binary_search(occupied_clusters.begin(), occupied_clusters.end(), l))
            throw InputError("assignment: label " + std::to_string(l) +
                             " not in occupied_clusters");
    std::size_t total = std::accumulate(topic_universe.doc_counts.begin(),
                                        topic_universe.doc_counts.end(), std::size_t{0});
    if (total != labels.size())
        throw InputError("assignment: topic counts do not sum to document count");
}

GsdmmSampler::GsdmmSampler(const Corpus& corpus, const ClusteringConfig& cfg)
    : corpus_(&corpus), cfg_(cfg), rng_(cfg.seed) {
    corpus.validate();
    cfg.validate();

    const int K = cfg_.max_clusters;
    const std::size_t D = corpus.size();
    cluster_docs_.assign(K, 0);
    cluster_tokens_.assign(K, 0);
    cluster_word_.assign(K, std::vector<int>(corpus.vocab_size, 0));
    labels_.assign(D, -1);
    for (std::size_t d = 0; d < D; ++d)
        add_doc(d, static_cast<int>(rng_.next_index(static_cast<std::size_t>(K))));
}

void GsdmmSampler::remove_doc(std::size_t d) {
    int k = labels_[d];
    --cluster_docs_[k];
    cluster_tokens_[k] -= static_cast<long long>(corpus_->documents[d].size());
    for (int w : corpus_->documents[d])
        --cluster_word_[k][w];
    labels_[d] = -1;
}

void GsdmmSampler::add_doc(std::size_t d, int k) {
    labels_[d] = k;
    ++cluster_docs_[k];
    cluster_tokens_[k] += static_cast<long long>(corpus_->documents[d].size());
    for (int w : corpus_->documents[d])
        ++cluster_word_[k][w];
}

// Log-space conditional over clusters for document d. For cluster k with
// m_k docs, n_k tokens and per-word counts n_kw (all excluding document d),
// the unnormalized mass is
//   (m_k + alpha) * prod_w prod_{j=1..c_w} (n_kw + beta + j - 1)
//                 / prod_{i=1..N_d} (n_k + V*beta + i - 1)
// where c_w is the word's multiplicity in the document and N_d its length.
// `exclude` is the cluster whose counts still include d (-1 if d is removed).
std::vector<double> GsdmmSampler::scores_normalized(std::size_t d, int exclude) const {
    const auto& doc = corpus_->documents[d];
    const int K = cfg_.max_clusters;
    const double vbeta = static_cast<double>(corpus_->vocab_size) * cfg_.beta;

    // word -> multiplicity, ordered for determinism
    std::map<int, int> word_counts;
    for (int w : doc)
        ++word_counts[w];

    std::vector<double> score(K);
    for (int k = 0; k < K; ++k) {
        const bool own = (k == exclude);
        const double m = cluster_docs_[k] - (own ? 1 : 0);
        const double n = static_cast<double>(cluster_tokens_[k]) -
                         (own ? static_cast<double>(doc.size()) : 0.0);
        double s = std::log(m + cfg_.alpha);
        for (const auto& [w, c] : word_counts) {
            const int base = cluster_word_[k][w] - (own ? c : 0);
            for (int j = 1; j <= c; ++j)
                s += std::log(base + cfg_.beta + (j - 1));
        }
        for (std::size_t i = 1; i <= doc.size(); ++i)
            s -= std::log(n + vbeta + static_cast<double>(i - 1));
        score[k] = s;
    }

    double mx = *std::max_element(score.begin(), score.end());
    double sum = 0.0;
    for (double& s : score) {
        s = std::exp(s - mx);
        sum += s;
    }
    for (double& s : score)
        s /= sum;
    return score;
}

std::vector<double> GsdmmSampler::conditional(std::size_t doc) const {
    return scores_normalized(doc, labels_[doc]);
}

void GsdmmSampler::sweep() {
    for (std::size_t d = 0; d < corpus_->size(); ++d) {
        remove_doc(d);
        auto p = scores_normalized(d, -1);
        double r = rng_.next_double();
        double cum = 0.0;
        int pick = cfg_.max_clusters - 1;
        for (int k = 0; k < cfg_.max_clusters; ++k) {
            cum += p[k];
            if (r < cum) {
                pick = k;
                break;
            }
        }
        add_doc(d, pick);
    }
}

int GsdmmSampler::occupied_count() const {
    return static_cast<int>(
        std::count_if(cluster_docs_.begin(), cluster_docs_.end(), [](int m) { return m > 0; }));
}

std::size_t GsdmmSampler::total_documents_assigned() const {
    return static_cast<std::size_t>(
        std::accumulate(cluster_docs_.begin(), cluster_docs_.end(), 0LL));
}

TopicAssignment fit_gsdmm(const Corpus& corpus, const ClusteringConfig& cfg) {
    GsdmmSampler sampler(corpus, cfg);
    std::vector<int> occupied_trace;
    for (int it = 0; it < cfg.iterations; ++it) {
        sampler.sweep();
        occupied_trace.push_back(sampler.occupied_count());
    }
    TopicAssignment raw = TopicAssignment::from_labels(sampler.labels());
    TopicAssignment compact = relabel_compact(raw);
    compact.occupied_per_sweep = std::move(occupied_trace);
    return compact;
}

std::vector<std::pair<int, std::size_t>> topic_histogram(const TopicAssignment& assignment) {
    assignment.validate();
    std::map<int, std::size_t> counts;
    for (int l : assignment.labels)
        ++counts[l];
    std::vector<std::pair<int, std::size_t>> hist(counts.begin(), counts.end());
    std::sort(hist.begin(), hist.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    return hist;
}

TopicAssignment relabel_compact(const TopicAssignment& assignment) {
    assignment.validate();
    std::map<int, int> remap;  // old label -> dense label, first-appearance order
    std::vector<int> labels;
    labels.reserve(assignment.labels.size());
    for (int l : assignment.labels) {
        auto it = remap.find(l);
        if (it == remap.end())
            it = remap.emplace(l, static_cast<int>(remap.size())).first;
        labels.push_back(it->second);
    }
    TopicAssignment out = TopicAssignment::from_labels(std::move(labels));
    out.occupied_per_sweep = assignment.occupied_per_sweep;
    return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size() || a.empty())
        throw InputError("ari: labelings must be non-empty and equal length");

    std::map<std::pair<int, int>, long long> cells;
    std::map<int, long long> row_sums, col_sums;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++cells[{a[i], b[i]}];
        ++row_sums[a[i]];
        ++col_sums[b[i]];
    }
    auto choose2 = [](long long n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); };

    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, n] : cells)
        sum_cells += choose2(n);
    for (const auto& [key, n] : row_sums)
        sum_rows += choose2(n);
    for (const auto& [key, n] : col_sums)
        sum_cols += choose2(n);

    double total = choose2(static_cast<long long>(a.size()));
    double expected = sum_rows * sum_cols / total;
    double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected)
        return 1.0;  // both partitions trivial and identical in structure
    return (sum_cells - expected) / (max_index - expected);
}

}  // namespace engage
