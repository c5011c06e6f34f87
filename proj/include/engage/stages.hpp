#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "engage/config.hpp"
#include "engage/gsdmm.hpp"
#include "engage/logit.hpp"
#include "engage/net.hpp"
#include "engage/pipeline.hpp"

namespace engage {

// One run directory holds every artifact of a pipeline. Artifact names embed
// a hash of the producing stage's inputs and parameters, and manifest.tsv
// maps stable keys to (filename, content hash). A downstream stage resolves
// its inputs through the manifest, so running stages out of order fails with
// the missing artifact named, and rerunning with identical inputs rewrites
// identical bytes.

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64_str(const std::string& s);
std::uint64_t hash_file(const std::string& path);
std::string hex16(std::uint64_t v);

class Manifest {
public:
    static Manifest load(const std::string& dir);

    void put(const std::string& key, const std::string& filename, std::uint64_t hash);
    bool has(const std::string& key) const;
    // full path of the artifact; throws ConfigError naming the artifact and
    // the stage that should have produced it
    std::string require(const std::string& key, const std::string& stage,
                        const std::string& producer) const;
    std::uint64_t hash_of(const std::string& key) const;  // 0 when absent
    void save() const;

private:
    std::string dir_;
    std::map<std::string, std::pair<std::string, std::uint64_t>> rows_;
};

struct RunConfig {
    std::string out_dir = "runs";
    std::string log_path;     // io.log; empty means use the simulate artifact
    std::string corpus_path;  // io.corpus, cluster input
    std::uint64_t seed = 42;
    int workers = 1;

    EngagementKind kind = EngagementKind::retweet;
    PeriodGrid grid;  // 12-hour periods, 14 of them
    int history_len = 4;
    SplitRatios ratios;
    std::size_t min_tweets = 1;

    ClusteringConfig cluster;

    int filters = 20;    // H
    int bottleneck = 8;  // L
    TrainConfig train;   // lr 1e-5, batch 32, epochs 50

    LogitTrainConfig logit;

    int slate_size = 5;

    int sim_users = 2000;
    int sim_topics = 30;
    bool sim_substitution = true;

    std::vector<int> sweep_filters = {5, 10, 15, 20, 30};
    std::vector<int> sweep_batches = {16, 32, 64, 128};
    std::vector<double> sweep_lrs = {1e-3, 1e-4, 5e-5, 1e-5, 1e-6};
    int sweep_epochs = 5;
};

// Applies file values over the defaults above. Unset keys keep the
// documented defaults.
RunConfig run_config_from(const Config& raw);

void run_simulate(const RunConfig& cfg);
void run_cluster(const RunConfig& cfg);
void run_prepare(const RunConfig& cfg);
void run_train(const RunConfig& cfg);
void run_evaluate(const RunConfig& cfg);
void run_optimize(const RunConfig& cfg);
void run_sweep(const RunConfig& cfg);

// Chunked deterministic parallel map: fn(begin, end) over [0, n) split across
// workers; results must be written to disjoint preallocated slots.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace engage
