#include "engage/stages.hpp"

#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "engage/corpus.hpp"
#include "engage/errors.hpp"
#include "engage/evaluation.hpp"
#include "engage/optimizer.hpp"
#include "engage/simulator.hpp"

namespace fs = std::filesystem;

namespace engage {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a64_str(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot hash missing file: " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf)))
            break;
    }
    return h;
}

std::string hex16(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << v;
    return os.str();
}

Manifest Manifest::load(const std::string& dir) {
    Manifest man;
    man.dir_ = dir;
    std::ifstream in(dir + "/manifest.tsv");
    if (!in)
        return man;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::string key, filename, hash;
        if (!std::getline(row, key, '\t') || !std::getline(row, filename, '\t') ||
            !std::getline(row, hash, '\t'))
            throw InputError(dir + "/manifest.tsv: malformed row '" + line + "'");
        man.rows_[key] = {filename, std::stoull(hash, nullptr, 16)};
    }
    return man;
}

void Manifest::put(const std::string& key, const std::string& filename, std::uint64_t hash) {
    rows_[key] = {filename, hash};
}

bool Manifest::has(const std::string& key) const { return rows_.count(key) > 0; }

std::string Manifest::require(const std::string& key, const std::string& stage,
                              const std::string& producer) const {
    auto it = rows_.find(key);
    if (it == rows_.end())
        throw ConfigError(stage + ": missing artifact '" + key + "' in " + dir_ +
                          "; run the " + producer + " stage first");
    std::string path = dir_ + "/" + it->second.first;
    if (!fs::exists(path))
        throw ConfigError(stage + ": artifact '" + key + "' points at missing file " + path +
                          "; rerun the " + producer + " stage");
    return path;
}

std::uint64_t Manifest::hash_of(const std::string& key) const {
    auto it = rows_.find(key);
    return it == rows_.end() ? 0 : it->second.second;
}

void Manifest::save() const {
    std::string path = dir_ + "/manifest.tsv";
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path);
    for (const auto& [key, row] : rows_)
        out << key << '\t' << row.first << '\t' << hex16(row.second) << '\n';
}

RunConfig run_config_from(const Config& raw) {
    RunConfig cfg;
    cfg.out_dir = raw.get_string("io.workdir", cfg.out_dir);
    cfg.log_path = raw.get_string("io.log", cfg.log_path);
    cfg.corpus_path = raw.get_string("io.corpus", cfg.corpus_path);
    cfg.seed = raw.get_u64("run.seed", cfg.seed);
    cfg.workers = raw.get_int("run.workers", cfg.workers);

    cfg.kind = engagement_kind_from_string(raw.get_string("data.kind", "retweet"));
    cfg.grid.period_length_seconds =
        raw.get_i64("data.period_seconds", cfg.grid.period_length_seconds);
    cfg.grid.num_periods = raw.get_int("data.num_periods", cfg.grid.num_periods);
    cfg.grid.origin_timestamp = raw.get_i64("data.origin", cfg.grid.origin_timestamp);
    cfg.history_len = raw.get_int("data.history_len", cfg.history_len);
    cfg.ratios.train = raw.get_double("data.train_ratio", cfg.ratios.train);
    cfg.ratios.valid = raw.get_double("data.valid_ratio", cfg.ratios.valid);
    cfg.ratios.test = raw.get_double("data.test_ratio", cfg.ratios.test);
    cfg.min_tweets =
        static_cast<std::size_t>(raw.get_i64("data.min_tweets",
                                             static_cast<std::int64_t>(cfg.min_tweets)));

    cfg.cluster.max_clusters = raw.get_int("cluster.max_clusters", cfg.cluster.max_clusters);
    cfg.cluster.alpha = raw.get_double("cluster.alpha", cfg.cluster.alpha);
    cfg.cluster.beta = raw.get_double("cluster.beta", cfg.cluster.beta);
    cfg.cluster.iterations = raw.get_int("cluster.iterations", cfg.cluster.iterations);

    cfg.filters = raw.get_int("model.filters", cfg.filters);
    cfg.bottleneck = raw.get_int("model.bottleneck", cfg.bottleneck);

    cfg.train.learning_rate = raw.get_double("train.lr", cfg.train.learning_rate);
    cfg.train.batch_size = raw.get_int("train.batch", cfg.train.batch_size);
    cfg.train.epochs = raw.get_int("train.epochs", cfg.train.epochs);

    cfg.logit.ridge = raw.get_double("logit.ridge", cfg.logit.ridge);
    cfg.logit.max_iterations = raw.get_int("logit.max_iterations", cfg.logit.max_iterations);
    cfg.logit.tolerance = raw.get_double("logit.tolerance", cfg.logit.tolerance);

    cfg.slate_size = raw.get_int("slate.n", cfg.slate_size);

    cfg.sim_users = raw.get_int("sim.users", cfg.sim_users);
    cfg.sim_topics = raw.get_int("sim.topics", cfg.sim_topics);
    cfg.sim_substitution = raw.get_bool("sim.substitution", cfg.sim_substitution);

    cfg.sweep_filters = raw.get_int_list("sweep.filters", cfg.sweep_filters);
    cfg.sweep_batches = raw.get_int_list("sweep.batches", cfg.sweep_batches);
    cfg.sweep_lrs = raw.get_double_list("sweep.lrs", cfg.sweep_lrs);
    cfg.sweep_epochs = raw.get_int("sweep.epochs", cfg.sweep_epochs);
    return cfg;
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
    if (workers <= 1 || n < 2) {
        fn(0, n);
        return;
    }
    std::size_t parts = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(parts);
    std::size_t chunk = (n + parts - 1) / parts;
    for (std::size_t w = 0; w < parts; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(begin + chunk, n);
        threads.emplace_back([&, w, begin, end]() {
            try {
                if (begin < end)
                    fn(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

namespace {

// stage seed streams off the master seed
constexpr std::uint64_t kStreamSim = 11;
constexpr std::uint64_t kStreamCluster = 12;
constexpr std::uint64_t kStreamNetInit = 13;
constexpr std::uint64_t kStreamNetShuffle = 14;
constexpr std::uint64_t kStreamSweep = 15;

std::string fmt17(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path);
    return out;
}

SimConfig sim_config_for(const RunConfig& cfg) {
    SimConfig sim = make_sim_config(Rng::seed_mix(cfg.seed, kStreamSim),
                                    cfg.sim_substitution, cfg.sim_users, cfg.sim_topics,
                                    cfg.grid.num_periods, cfg.history_len);
    sim.period_length_seconds = cfg.grid.period_length_seconds;
    sim.origin_timestamp = cfg.grid.origin_timestamp;
    return sim;
}

std::string describe_grid(const RunConfig& cfg) {
    std::ostringstream os;
    os << cfg.grid.period_length_seconds << '|' << cfg.grid.num_periods << '|'
       << cfg.grid.origin_timestamp;
    return os.str();
}

// pooled BCE/AUC of a scorer evaluated at the realized slates
EvalReport scorer_report(const SlateScorer& scorer, const Dataset& data,
                         const std::string& name) {
    if (data.empty())
        throw InputError("evaluate: empty dataset");
    EvalReport report;
    report.model_name = name;
    report.instances = data.size();
    std::vector<double> scores;
    std::vector<int> labels;
    double total_bce = 0.0;
    for (const auto& m : data.instances) {
        Eigen::VectorXd p = scorer.score(m, m.r_next);
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
    return report;
}

std::vector<std::string> read_users_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open users file: " + path);
    std::vector<std::string> users;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw InputError(path + ": malformed row '" + line + "'");
        users.push_back(line.substr(tab + 1));
    }
    return users;
}

}  // namespace

void run_simulate(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    Manifest man = Manifest::load(cfg.out_dir);

    SimConfig sim = sim_config_for(cfg);
    SimOutput out = generate_log(sim);

    std::ostringstream params;
    params << "simulate|" << sim.seed << '|' << sim.num_users << '|' << sim.num_topics << '|'
           << sim.num_periods << '|' << sim.history_len << '|' << cfg.sim_substitution << '|'
           << describe_grid(cfg);
    std::string h = hex16(fnv1a64_str(params.str()));

    std::string log_name = "sim-log-" + h + ".tsv";
    std::string truth_name = "truth-probs-" + h + ".bin";
    std::string model_name = "truth-model-" + h + ".bin";
    write_log_file(cfg.out_dir + "/" + log_name, out.log);
    save_truth(cfg.out_dir + "/" + truth_name, out.truth);
    save_truth_model(cfg.out_dir + "/" + model_name, sim, out.archetype_of);

    man.put("sim_log", log_name, hash_file(cfg.out_dir + "/" + log_name));
    man.put("truth_probs", truth_name, hash_file(cfg.out_dir + "/" + truth_name));
    man.put("truth_model", model_name, hash_file(cfg.out_dir + "/" + model_name));
    man.save();
}

void run_cluster(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    Manifest man = Manifest::load(cfg.out_dir);

    if (cfg.corpus_path.empty())
        throw ConfigError("cluster: no corpus; set io.corpus to a token file");
    Vocabulary vocab;
    Corpus corpus = read_token_file(cfg.corpus_path, vocab);

    ClusteringConfig cc = cfg.cluster;
    cc.seed = Rng::seed_mix(cfg.seed, kStreamCluster);
    TopicAssignment assignment = fit_gsdmm(corpus, cc);

    std::ostringstream params;
    params << "cluster|" << hex16(hash_file(cfg.corpus_path)) << '|' << cc.max_clusters << '|'
           << cc.alpha << '|' << cc.beta << '|' << cc.iterations << '|' << cc.seed;
    std::string h = hex16(fnv1a64_str(params.str()));

    std::string assign_name = "cluster-assign-" + h + ".tsv";
    std::string summary_name = "cluster-summary-" + h + ".txt";
    {
        auto out = open_out(cfg.out_dir + "/" + assign_name);
        for (std::size_t d = 0; d < corpus.size(); ++d)
            out << corpus.doc_ids[d] << '\t' << assignment.labels[d] << '\n';
    }
    {
        auto out = open_out(cfg.out_dir + "/" + summary_name);
        out << "J=" << assignment.topic_universe.num_topics << '\n';
        for (const auto& [topic, count] : topic_histogram(assignment))
            out << topic << '\t' << count << '\n';
    }

    man.put("cluster_assignments", assign_name,
            hash_file(cfg.out_dir + "/" + assign_name));
    man.put("cluster_summary", summary_name, hash_file(cfg.out_dir + "/" + summary_name));
    man.save();
}

void run_prepare(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    Manifest man = Manifest::load(cfg.out_dir);

    std::string log_path;
    if (!cfg.log_path.empty())
        log_path = cfg.log_path;
    else if (man.has("sim_log"))
        log_path = man.require("sim_log", "prepare", "simulate");
    else
        throw ConfigError("prepare: no input log; set io.log or run the simulate stage first");

    InteractionLog log = read_log_file(log_path);
    if (cfg.min_tweets > 1)
        log = filter_min_tweets(log, cfg.min_tweets);
    EngagementTensor tensor = split_periods(log, cfg.grid, cfg.kind);
    SplitDataset splits = prepare_splits(tensor, cfg.history_len, cfg.ratios);

    std::ostringstream params;
    params << "prepare|" << hex16(hash_file(log_path)) << '|' << to_string(cfg.kind) << '|'
           << describe_grid(cfg) << '|' << cfg.history_len << '|' << cfg.ratios.train << '|'
           << cfg.ratios.valid << '|' << cfg.ratios.test << '|' << cfg.min_tweets;
    std::string h = hex16(fnv1a64_str(params.str()));

    std::string train_name = "dataset-train-" + h + ".bin";
    std::string valid_name = "dataset-valid-" + h + ".bin";
    std::string test_name = "dataset-test-" + h + ".bin";
    std::string users_name = "users-" + h + ".tsv";
    save_dataset(cfg.out_dir + "/" + train_name, splits.train, tensor.num_users);
    save_dataset(cfg.out_dir + "/" + valid_name, splits.valid, tensor.num_users);
    save_dataset(cfg.out_dir + "/" + test_name, splits.test, tensor.num_users);
    {
        auto out = open_out(cfg.out_dir + "/" + users_name);
        for (std::size_t i = 0; i < tensor.user_ids.size(); ++i)
            out << i << '\t' << tensor.user_ids[i] << '\n';
    }

    man.put("dataset_train", train_name, hash_file(cfg.out_dir + "/" + train_name));
    man.put("dataset_valid", valid_name, hash_file(cfg.out_dir + "/" + valid_name));
    man.put("dataset_test", test_name, hash_file(cfg.out_dir + "/" + test_name));
    man.put("users", users_name, hash_file(cfg.out_dir + "/" + users_name));
    man.save();
}

void run_train(const RunConfig& cfg) {
    Manifest man = Manifest::load(cfg.out_dir);
    std::string train_path = man.require("dataset_train", "train", "prepare");
    std::string valid_path = man.require("dataset_valid", "train", "prepare");
    Dataset train = load_dataset(train_path);
    Dataset valid = load_dataset(valid_path);

    ModelConfig mc;
    mc.num_topics = train.num_topics;
    mc.history_len = train.history_len;
    mc.num_filters = cfg.filters;
    mc.bottleneck_dim = cfg.bottleneck;

    Rng init_rng(Rng::seed_mix(cfg.seed, kStreamNetInit));
    ModelParams params = init_params(mc, init_rng);
    TrainConfig tc = cfg.train;
    tc.seed = Rng::seed_mix(cfg.seed, kStreamNetShuffle);
    std::vector<EpochStats> curve = train_net(params, train, valid, tc);

    LogitParams logit = train_logit(train, cfg.logit);

    std::ostringstream ps;
    ps << "train|" << hex16(man.hash_of("dataset_train")) << '|'
       << hex16(man.hash_of("dataset_valid")) << '|' << mc.num_filters << '|'
       << mc.bottleneck_dim << '|' << tc.learning_rate << '|' << tc.batch_size << '|'
       << tc.epochs << '|' << cfg.seed << '|' << cfg.logit.ridge << '|'
       << cfg.logit.max_iterations << '|' << cfg.logit.tolerance;
    std::string h = hex16(fnv1a64_str(ps.str()));

    std::string net_name = "net-" + h + ".bin";
    std::string logit_name = "logit-" + h + ".bin";
    std::string curve_name = "curve-" + h + ".tsv";
    std::string flags_name = "logit-flags-" + h + ".tsv";
    save_checkpoint(cfg.out_dir + "/" + net_name, params);
    save_logit(cfg.out_dir + "/" + logit_name, logit);
    {
        auto out = open_out(cfg.out_dir + "/" + curve_name);
        out << "epoch\ttrain_bce\tvalid_bce\n";
        for (const auto& row : curve)
            out << row.epoch << '\t' << fmt17(row.train_bce) << '\t' << fmt17(row.valid_bce)
                << '\n';
    }
    {
        auto out = open_out(cfg.out_dir + "/" + flags_name);
        out << "topic\tdegenerate\n";
        for (std::size_t j = 0; j < logit.degenerate.size(); ++j)
            out << j << '\t' << static_cast<int>(logit.degenerate[j]) << '\n';
    }

    man.put("net_ckpt", net_name, hash_file(cfg.out_dir + "/" + net_name));
    man.put("logit_ckpt", logit_name, hash_file(cfg.out_dir + "/" + logit_name));
    man.put("train_curve", curve_name, hash_file(cfg.out_dir + "/" + curve_name));
    man.put("logit_flags", flags_name, hash_file(cfg.out_dir + "/" + flags_name));
    man.save();
}

void run_evaluate(const RunConfig& cfg) {
    Manifest man = Manifest::load(cfg.out_dir);
    NetPredictor net(load_checkpoint(man.require("net_ckpt", "evaluate", "train")));
    LogitPredictor logit(load_logit(man.require("logit_ckpt", "evaluate", "train")));
    Dataset test = load_dataset(man.require("dataset_test", "evaluate", "prepare"));

    // slates from every model are scored under the most complex model (the
    // net); a ground-truth row is added when the simulator produced the data
    PredictorScorer net_scorer(net);
    std::vector<EvalReport> reports;
    reports.push_back(evaluate_model(net, test, "net", cfg.slate_size, &net_scorer));
    reports.push_back(evaluate_model(logit, test, "logit", cfg.slate_size, &net_scorer));
    if (man.has("truth_model")) {
        auto [sim, archetypes] =
            load_truth_model(man.require("truth_model", "evaluate", "simulate"));
        GroundTruthScorer scorer(std::move(sim), std::move(archetypes));
        reports.push_back(scorer_report(scorer, test, "ground_truth"));
    }

    std::ostringstream ps;
    ps << "evaluate|" << hex16(man.hash_of("net_ckpt")) << '|'
       << hex16(man.hash_of("logit_ckpt")) << '|' << hex16(man.hash_of("dataset_test")) << '|'
       << cfg.slate_size;
    std::string h = hex16(fnv1a64_str(ps.str()));

    std::string report_name = "report-" + h + ".csv";
    std::string tnet_name = "topics-net-" + h + ".csv";
    std::string tlogit_name = "topics-logit-" + h + ".csv";
    write_report(cfg.out_dir + "/" + report_name, reports);
    write_topic_report(cfg.out_dir + "/" + tnet_name, per_topic_stats(net, test));
    write_topic_report(cfg.out_dir + "/" + tlogit_name, per_topic_stats(logit, test));

    man.put("report", report_name, hash_file(cfg.out_dir + "/" + report_name));
    man.put("topics_net", tnet_name, hash_file(cfg.out_dir + "/" + tnet_name));
    man.put("topics_logit", tlogit_name, hash_file(cfg.out_dir + "/" + tlogit_name));
    man.save();
}

void run_optimize(const RunConfig& cfg) {
    Manifest man = Manifest::load(cfg.out_dir);
    NetPredictor net(load_checkpoint(man.require("net_ckpt", "optimize", "train")));
    LogitPredictor logit(load_logit(man.require("logit_ckpt", "optimize", "train")));
    Dataset test = load_dataset(man.require("dataset_test", "optimize", "prepare"));
    std::vector<std::string> users = read_users_file(man.require("users", "optimize",
                                                                 "prepare"));

    std::unique_ptr<GroundTruthScorer> truth;
    if (man.has("truth_model")) {
        auto [sim, archetypes] =
            load_truth_model(man.require("truth_model", "optimize", "simulate"));
        truth = std::make_unique<GroundTruthScorer>(std::move(sim), std::move(archetypes));
    }

    std::ostringstream ps;
    ps << "optimize|" << hex16(man.hash_of("net_ckpt")) << '|'
       << hex16(man.hash_of("logit_ckpt")) << '|' << hex16(man.hash_of("dataset_test")) << '|'
       << cfg.slate_size;
    std::string h = hex16(fnv1a64_str(ps.str()));

    struct Row {
        std::string user;
        std::string ids;
        double uplift = 0.0;
        double truth_uplift = 0.0;
    };

    const Predictor* models[2] = {&net, &logit};
    const char* names[2] = {"net", "logit"};
    for (int m = 0; m < 2; ++m) {
        std::vector<Row> rows(test.size());
        const Predictor* model = models[m];
        parallel_for(test.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const ModelInputs& inst = test.instances[i];
                SlateProblem problem;
                problem.model = model;
                problem.e_hist = inst.e_hist;
                problem.e_freq = inst.e_freq;
                problem.slate_size = cfg.slate_size;
                SlateResult res = greedy_slate(problem);

                Row& row = rows[i];
                row.user = users.at(static_cast<std::size_t>(inst.user_index));
                std::ostringstream ids;
                for (std::size_t k = 0; k < res.chosen.size(); ++k) {
                    if (k)
                        ids << ',';
                    ids << res.chosen[k];
                }
                row.ids = ids.str();
                // slates scored under the most complex model for comparison
                row.uplift =
                    uplift(net.predict(res.slate, inst.e_hist, inst.e_freq), res.slate);
                if (truth)
                    row.truth_uplift = uplift(truth->score(inst, res.slate), res.slate);
            }
        });

        std::string slate_name = std::string("slates-") + names[m] + "-" + h + ".tsv";
        double mean = 0.0;
        {
            auto out = open_out(cfg.out_dir + "/" + slate_name);
            for (const auto& row : rows) {
                out << row.user << "\tgreedy\t" << row.ids << '\t' << fmt17(row.uplift)
                    << '\n';
                mean += row.uplift;
            }
            mean /= static_cast<double>(rows.size());
            out << "#mean_uplift\t" << fmt17(mean) << '\n';
        }
        man.put(std::string("slates_") + names[m], slate_name,
                hash_file(cfg.out_dir + "/" + slate_name));

        if (truth) {
            std::string truth_name =
                std::string("slates-") + names[m] + "-truth-" + h + ".tsv";
            double tmean = 0.0;
            auto out = open_out(cfg.out_dir + "/" + truth_name);
            for (const auto& row : rows) {
                out << row.user << "\tgreedy\t" << row.ids << '\t' << fmt17(row.truth_uplift)
                    << '\n';
                tmean += row.truth_uplift;
            }
            tmean /= static_cast<double>(rows.size());
            out << "#mean_uplift\t" << fmt17(tmean) << '\n';
            out.close();
            man.put(std::string("slates_") + names[m] + "_truth", truth_name,
                    hash_file(cfg.out_dir + "/" + truth_name));
        }
    }
    man.save();
}

void run_sweep(const RunConfig& cfg) {
    if (cfg.sweep_filters.empty() || cfg.sweep_batches.empty() || cfg.sweep_lrs.empty())
        throw ConfigError("sweep: filter, batch and learning-rate grids must be nonempty");
    Manifest man = Manifest::load(cfg.out_dir);
    Dataset train = load_dataset(man.require("dataset_train", "sweep", "prepare"));
    Dataset valid = load_dataset(man.require("dataset_valid", "sweep", "prepare"));

    struct Point {
        int filters;
        int batch;
        double lr;
        double valid_bce;
    };
    std::vector<Point> points;
    std::uint64_t combo = 0;
    for (int f : cfg.sweep_filters)
        for (int b : cfg.sweep_batches)
            for (double lr : cfg.sweep_lrs) {
                ModelConfig mc;
                mc.num_topics = train.num_topics;
                mc.history_len = train.history_len;
                mc.num_filters = f;
                mc.bottleneck_dim = cfg.bottleneck;
                Rng init_rng(Rng::seed_mix(cfg.seed, kStreamSweep + 2 * combo));
                ModelParams params = init_params(mc, init_rng);
                TrainConfig tc;
                tc.learning_rate = lr;
                tc.batch_size = b;
                tc.epochs = cfg.sweep_epochs;
                tc.seed = Rng::seed_mix(cfg.seed, kStreamSweep + 2 * combo + 1);
                std::vector<EpochStats> curve = train_net(params, train, valid, tc);
                points.push_back(Point{f, b, lr, curve.back().valid_bce});
                ++combo;
            }

    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].valid_bce < points[best].valid_bce)
            best = i;

    std::ostringstream ps;
    ps << "sweep|" << hex16(man.hash_of("dataset_train")) << '|'
       << hex16(man.hash_of("dataset_valid")) << '|' << cfg.seed << '|' << cfg.sweep_epochs
       << '|' << cfg.bottleneck;
    for (int f : cfg.sweep_filters)
        ps << '|' << f;
    for (int b : cfg.sweep_batches)
        ps << '|' << b;
    for (double lr : cfg.sweep_lrs)
        ps << '|' << lr;
    std::string h = hex16(fnv1a64_str(ps.str()));

    std::string table_name = "sweep-" + h + ".tsv";
    std::string best_name = "sweep-best-" + h + ".ini";
    {
        auto out = open_out(cfg.out_dir + "/" + table_name);
        out << "filters\tbatch\tlr\tvalid_bce\n";
        for (const auto& p : points)
            out << p.filters << '\t' << p.batch << '\t' << fmt17(p.lr) << '\t'
                << fmt17(p.valid_bce) << '\n';
        out << "#best\t" << points[best].filters << '\t' << points[best].batch << '\t'
            << fmt17(points[best].lr) << '\t' << fmt17(points[best].valid_bce) << '\n';
    }
    {
        auto out = open_out(cfg.out_dir + "/" + best_name);
        out << "[model]\nfilters = " << points[best].filters << "\n\n[train]\nlr = "
            << fmt17(points[best].lr) << "\nbatch = " << points[best].batch << '\n';
    }

    man.put("sweep_table", table_name, hash_file(cfg.out_dir + "/" + table_name));
    man.put("sweep_best", best_name, hash_file(cfg.out_dir + "/" + best_name));
    man.save();
}

}  // namespace engage
