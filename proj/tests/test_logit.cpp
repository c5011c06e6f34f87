#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "engage/errors.hpp"
#include "engage/logit.hpp"
#include "engage/rng.hpp"

using namespace engage;

namespace {

ModelInputs random_inputs(Rng& rng, int J, int T) {
    ModelInputs m;
    m.e_hist = Eigen::MatrixXd(J, T);
    m.e_freq = Eigen::VectorXd(J);
    m.r_next = Eigen::VectorXd(J);
    m.y = Eigen::VectorXd(J);
    for (int j = 0; j < J; ++j) {
        for (int t = 0; t < T; ++t)
            m.e_hist(j, t) = rng.bernoulli(0.4) ? 1.0 : 0.0;
        m.e_freq(j) = rng.next_double();
        m.r_next(j) = rng.bernoulli(0.7) ? 1.0 : 0.0;
        m.y(j) = (m.r_next(j) > 0 && rng.bernoulli(0.5)) ? 1.0 : 0.0;
    }
    return m;
}

Dataset random_dataset(std::uint64_t seed, int n, int J, int T) {
    Rng rng(seed);
    Dataset data;
    data.num_topics = J;
    data.history_len = T;
    for (int k = 0; k < n; ++k)
        data.instances.push_back(random_inputs(rng, J, T));
    return data;
}

// labels copy the newest history bit: separable with margin 1
Dataset separable_dataset(std::uint64_t seed, int n, int J, int T) {
    Dataset data = random_dataset(seed, n, J, T);
    for (auto& m : data.instances)
        for (int j = 0; j < J; ++j)
            m.y(j) = m.e_hist(j, 0);
    return data;
}

}  // namespace

TEST_CASE("config validation") {
    LogitTrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.ridge = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = LogitTrainConfig{};
    cfg.max_iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("prediction matches a scalar dot-product oracle") {
    Dataset data = random_dataset(11, 60, 5, 4);
    LogitParams P = train_logit(data, LogitTrainConfig{});
    REQUIRE(P.weights.rows() == 5);
    REQUIRE(P.weights.cols() == 7);

    Rng rng(202);
    for (int trial = 0; trial < 20; ++trial) {
        ModelInputs m = random_inputs(rng, 5, 4);
        Eigen::VectorXd p = predict_logit(P, m.r_next, m.e_hist, m.e_freq);
        for (int j = 0; j < 5; ++j) {
            double dot = P.weights(j, 0);
            dot += P.weights(j, 1) * m.r_next(j);
            dot += P.weights(j, 2) * m.e_freq(j);
            for (int t = 0; t < 4; ++t)
                dot += P.weights(j, 3 + t) * m.e_hist(j, t);
            CHECK(std::abs(p(j) - 1.0 / (1.0 + std::exp(-dot))) < 1e-12);
        }
    }
}

TEST_CASE("zero weights predict one half") {
    LogitParams P;
    P.num_topics = 3;
    P.history_len = 2;
    P.weights = Eigen::MatrixXd::Zero(3, 5);
    Eigen::VectorXd slate = Eigen::VectorXd::Ones(3);
    Eigen::MatrixXd hist = Eigen::MatrixXd::Zero(3, 2);
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd p = predict_logit(P, slate, hist, freq);
    for (int j = 0; j < 3; ++j)
        CHECK(p(j) == 0.5);
}

TEST_CASE("topics are independent") {
    Dataset data = random_dataset(19, 80, 4, 3);
    LogitParams P = train_logit(data, LogitTrainConfig{});
    Rng rng(7);
    ModelInputs m = random_inputs(rng, 4, 3);

    Eigen::VectorXd base = predict_logit(P, m.r_next, m.e_hist, m.e_freq);
    // perturb every feature of topic 0
    Eigen::VectorXd slate = m.r_next;
    Eigen::MatrixXd hist = m.e_hist;
    Eigen::VectorXd freq = m.e_freq;
    slate(0) = 1.0 - slate(0);
    freq(0) = 1.0 - freq(0);
    for (int t = 0; t < 3; ++t)
        hist(0, t) = 1.0 - hist(0, t);
    Eigen::VectorXd moved = predict_logit(P, slate, hist, freq);
    for (int j = 1; j < 4; ++j)
        CHECK(moved(j) == base(j));
}

TEST_CASE("separable data is fit to high accuracy") {
    Dataset data = separable_dataset(23, 300, 3, 2);
    LogitTrainConfig cfg;
    cfg.ridge = 1e-6;  // light penalty lets the margin grow
    cfg.max_iterations = 2000;
    LogitParams P = train_logit(data, cfg);
    int correct = 0, total = 0;
    for (const auto& m : data.instances) {
        Eigen::VectorXd p = predict_logit(P, m.r_next, m.e_hist, m.e_freq);
        for (int j = 0; j < 3; ++j) {
            correct += ((p(j) > 0.5) == (m.y(j) > 0.5)) ? 1 : 0;
            ++total;
        }
    }
    CHECK(correct == total);
}

TEST_CASE("single-class topics are flagged and stay finite") {
    Dataset data = random_dataset(31, 120, 3, 2);
    for (auto& m : data.instances) {
        m.y(1) = 0.0;  // topic 1 never engages
        m.y(2) = 1.0;  // topic 2 always engages
    }
    LogitParams P = train_logit(data, LogitTrainConfig{});
    REQUIRE(P.degenerate.size() == 3);
    CHECK(P.degenerate[0] == 0);
    CHECK(P.degenerate[1] == 1);
    CHECK(P.degenerate[2] == 1);
    CHECK(P.weights.allFinite());

    // all-negative topic drives probabilities low, all-positive high
    Eigen::VectorXd slate = Eigen::VectorXd::Ones(3);
    Eigen::MatrixXd hist = Eigen::MatrixXd::Zero(3, 2);
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd p = predict_logit(P, slate, hist, freq);
    CHECK(p(1) < 0.2);
    CHECK(p(2) > 0.8);
}

TEST_CASE("training reduces the penalized objective per topic") {
    Dataset data = random_dataset(47, 150, 4, 3);
    LogitTrainConfig cfg;
    cfg.max_iterations = 5000;
    LogitParams P = train_logit(data, cfg);

    // rebuild the per-topic design matrices independently
    for (int j = 0; j < 4; ++j) {
        std::size_t n = data.instances.size();
        Eigen::MatrixXd X(n, 6);
        Eigen::VectorXd y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const ModelInputs& m = data.instances[i];
            X(static_cast<Eigen::Index>(i), 0) = 1.0;
            X(static_cast<Eigen::Index>(i), 1) = m.r_next(j);
            X(static_cast<Eigen::Index>(i), 2) = m.e_freq(j);
            for (int t = 0; t < 3; ++t)
                X(static_cast<Eigen::Index>(i), 3 + t) = m.e_hist(j, t);
            y(static_cast<Eigen::Index>(i)) = m.y(j);
        }
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(6);
        Eigen::VectorXd w = P.weights.row(j).transpose();
        double at_zero = logit_objective(X, y, zero, cfg.ridge);
        double at_fit = logit_objective(X, y, w, cfg.ridge);
        CHECK(at_fit < at_zero);
        CHECK(at_zero == doctest::Approx(std::log(2.0)).epsilon(1e-12));

        // local optimality: nudging any coordinate barely helps
        for (int k = 0; k < 6; ++k) {
            Eigen::VectorXd up = w, down = w;
            up(k) += 1e-3;
            down(k) -= 1e-3;
            CHECK(logit_objective(X, y, up, cfg.ridge) >= at_fit - 1e-6);
            CHECK(logit_objective(X, y, down, cfg.ridge) >= at_fit - 1e-6);
        }
    }
}

TEST_CASE("fit is deterministic") {
    Dataset data = random_dataset(59, 100, 3, 2);
    LogitParams a = train_logit(data, LogitTrainConfig{});
    LogitParams b = train_logit(data, LogitTrainConfig{});
    CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("checkpoint round trip and failure codes") {
    Dataset data = random_dataset(67, 80, 4, 3);
    LogitParams P = train_logit(data, LogitTrainConfig{});
    std::string path = "logit_ckpt_test.bin";
    save_logit(path, P);
    LogitParams Q = load_logit(path);
    CHECK(Q.num_topics == 4);
    CHECK(Q.history_len == 3);
    CHECK((P.weights - Q.weights).cwiseAbs().maxCoeff() == 0.0);

    {
        std::ofstream out(path, std::ios::binary);
        out << "XXXXXjunk";
    }
    try {
        load_logit(path);
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        CHECK(e.code() == CheckpointError::Code::bad_magic);
    }

    save_logit(path, P);
    std::string bytes;
    {
        std::ifstream in(path, std::ios::binary);
        bytes.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    {
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 8));
    }
    try {
        load_logit(path);
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        CHECK(e.code() == CheckpointError::Code::truncated);
    }

    {
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.put('x');
    }
    try {
        load_logit(path);
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        CHECK(e.code() == CheckpointError::Code::trailing_data);
    }
    std::remove(path.c_str());
}

TEST_CASE("training rejects empty data") {
    Dataset empty;
    empty.num_topics = 3;
    empty.history_len = 2;
    CHECK_THROWS_AS(train_logit(empty, LogitTrainConfig{}), InputError);
}
