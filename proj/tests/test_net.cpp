#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "engage/binio.hpp"
#include "engage/errors.hpp"
#include "engage/net.hpp"
#include "engage/rng.hpp"

using namespace engage;
using engage::binio::write_u32;

namespace {

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.num_topics = 6;
    cfg.history_len = 4;
    cfg.num_filters = 3;
    cfg.bottleneck_dim = 2;
    return cfg;
}

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
        m.r_next(j) = rng.bernoulli(0.6) ? 1.0 : 0.0;
        m.y(j) = (m.r_next(j) > 0 && rng.bernoulli(0.5)) ? 1.0 : 0.0;
    }
    return m;
}

// Straight-line scalar reimplementation of the forward map. Shares nothing
// with the library beyond the parameter struct.
Eigen::VectorXd reference_forward(const ModelParams& P, const Eigen::VectorXd& slate,
                                  const Eigen::MatrixXd& e_hist,
                                  const Eigen::VectorXd& e_freq) {
    const int J = P.config.num_topics;
    const int T = P.config.history_len;
    const int H = P.config.num_filters;
    const int L = P.config.bottleneck_dim;

    std::vector<double> filt(static_cast<std::size_t>(J) * H);
    for (int j = 0; j < J; ++j)
        for (int h = 0; h < H; ++h) {
            double s = 0.0;
            for (int t = 0; t < T; ++t)
                s += e_hist(j, t) * P.w_time(t, h);
            filt[static_cast<std::size_t>(j) * H + h] = s > 0.0 ? s : 0.01 * s;
        }

    std::vector<double> recon_avail(static_cast<std::size_t>(J), 0.0);
    std::vector<double> recon_freq(static_cast<std::size_t>(J), 0.0);
    for (int l = 0; l < L; ++l) {
        double code_a = 0.0, code_f = 0.0;
        for (int j = 0; j < J; ++j) {
            code_a += P.w_avail(l, j) * slate(j);
            code_f += P.w_freq(l, j) * e_freq(j);
        }
        for (int j = 0; j < J; ++j) {
            recon_avail[static_cast<std::size_t>(j)] += P.w_avail(l, j) * code_a;
            recon_freq[static_cast<std::size_t>(j)] += P.w_freq(l, j) * code_f;
        }
    }

    std::vector<double> recon_hist(static_cast<std::size_t>(J) * H, 0.0);
    for (int h = 0; h < H; ++h)
        for (int l = 0; l < L; ++l) {
            double code = 0.0;
            for (int j = 0; j < J; ++j)
                code += P.w_hist(l, j) * filt[static_cast<std::size_t>(j) * H + h];
            for (int j = 0; j < J; ++j)
                recon_hist[static_cast<std::size_t>(j) * H + h] += P.w_hist(l, j) * code;
        }

    Eigen::VectorXd p(J);
    for (int j = 0; j < J; ++j) {
        double dot = P.theta(0);
        dot += P.theta(1) * slate(j);
        dot += P.theta(2) * recon_avail[static_cast<std::size_t>(j)];
        dot += P.theta(3) * e_freq(j);
        dot += P.theta(4) * recon_freq[static_cast<std::size_t>(j)];
        for (int h = 0; h < H; ++h)
            dot += P.theta(5 + h) * filt[static_cast<std::size_t>(j) * H + h];
        for (int h = 0; h < H; ++h)
            dot += P.theta(5 + H + h) * recon_hist[static_cast<std::size_t>(j) * H + h];
        p(j) = 1.0 / (1.0 + std::exp(-dot));
    }
    return p;
}

double loss_at(const ModelParams& P, const ModelInputs& m) {
    return loss_bce(forward(P, m).p, m.y);
}

template <typename A, typename B>
double max_abs_diff(const A& a, const B& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("config validation") {
    ModelConfig cfg = small_config();
    CHECK_NOTHROW(cfg.validate());
    cfg.bottleneck_dim = 6;  // L must stay below J
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.history_len = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.num_topics = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.num_filters = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("init bounds and determinism") {
    ModelConfig cfg = small_config();
    Rng r1(99), r2(99), r3(100);
    ModelParams a = init_params(cfg, r1);
    ModelParams b = init_params(cfg, r2);
    ModelParams c = init_params(cfg, r3);

    CHECK(a.w_time.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(4.0));
    CHECK(a.w_avail.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0));
    CHECK(a.w_freq.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0));
    CHECK(a.w_hist.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0));
    CHECK(a.theta.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(11.0));

    CHECK(max_abs_diff(a.w_time, b.w_time) == 0.0);
    CHECK(max_abs_diff(a.theta, b.theta) == 0.0);
    CHECK(max_abs_diff(a.w_time, c.w_time) > 0.0);

    CHECK(a.adam.step == 0);
    CHECK(a.adam.m_w_time.cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.adam.v_theta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward matches the straight-line reference") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        ModelConfig cfg;
        cfg.num_topics = 5 + static_cast<int>(rng.next_index(6));
        cfg.history_len = 2 + static_cast<int>(rng.next_index(4));
        cfg.num_filters = 1 + static_cast<int>(rng.next_index(4));
        cfg.bottleneck_dim = 1 + static_cast<int>(rng.next_index(
                                     static_cast<std::size_t>(cfg.num_topics - 1)));
        Rng init = rng.derive(trial);
        ModelParams P = init_params(cfg, init);
        ModelInputs m = random_inputs(rng, cfg.num_topics, cfg.history_len);
        Eigen::VectorXd got = predict_probs(P, m.r_next, m.e_hist, m.e_freq);
        Eigen::VectorXd want = reference_forward(P, m.r_next, m.e_hist, m.e_freq);
        CHECK(max_abs_diff(got, want) < 1e-12);
    }
}

TEST_CASE("forward overloads agree and trace layout is as documented") {
    ModelConfig cfg = small_config();
    Rng rng(7);
    ModelParams P = init_params(cfg, rng);
    ModelInputs m = random_inputs(rng, 6, 4);

    ForwardTrace tr = forward(P, m);
    ForwardTrace tr2 = forward(P, m.r_next, m.e_hist, m.e_freq);
    CHECK(max_abs_diff(tr.p, tr2.p) == 0.0);

    CHECK(tr.z.rows() == 6);
    CHECK(tr.z.cols() == cfg.feature_dim());
    CHECK((tr.z.col(0).array() == 1.0).all());
    CHECK(max_abs_diff(tr.z.col(1), m.r_next) == 0.0);
    CHECK(max_abs_diff(tr.z.col(2), tr.recon_avail) == 0.0);
    CHECK(max_abs_diff(tr.z.col(3), m.e_freq) == 0.0);
    CHECK(max_abs_diff(tr.z.col(4), tr.recon_freq) == 0.0);
    CHECK(max_abs_diff(tr.z.middleCols(5, 3), tr.e_filt) == 0.0);
    CHECK(max_abs_diff(tr.z.middleCols(8, 3), tr.recon_hist) == 0.0);

    for (int j = 0; j < 6; ++j) {
        double dot = tr.z.row(j).dot(P.theta);
        CHECK(tr.p(j) == doctest::Approx(1.0 / (1.0 + std::exp(-dot))).epsilon(1e-12));
    }
}

TEST_CASE("probabilities depend on the whole slate") {
    ModelConfig cfg = small_config();
    Rng rng(13);
    ModelParams P = init_params(cfg, rng);
    ModelInputs m = random_inputs(rng, 6, 4);

    Eigen::VectorXd slate = Eigen::VectorXd::Ones(6);
    Eigen::VectorXd p1 = predict_probs(P, slate, m.e_hist, m.e_freq);
    slate(2) = 0.0;
    Eigen::VectorXd p2 = predict_probs(P, slate, m.e_hist, m.e_freq);
    // removing topic 2 moves every other topic's probability through the
    // bottleneck reconstruction
    for (int j = 0; j < 6; ++j)
        if (j != 2)
            CHECK(std::abs(p1(j) - p2(j)) > 1e-9);
}

TEST_CASE("loss clamps probabilities before the logs") {
    Eigen::VectorXd p(1), y(1);
    p << 0.5;
    y << 1.0;
    CHECK(loss_bce(p, y) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    y << 0.0;
    CHECK(loss_bce(p, y) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    p << 0.0;
    y << 1.0;
    CHECK(loss_bce(p, y) == doctest::Approx(-std::log(kBceEps)).epsilon(1e-14));
    p << 1.0;
    y << 0.0;
    // 1 - (1 - eps) is not exactly eps in doubles, so compare loosely
    CHECK(loss_bce(p, y) == doctest::Approx(-std::log(kBceEps)).epsilon(1e-8));

    Eigen::VectorXd pv(3), yv(3);
    pv << 0.2, 0.7, 0.9;
    yv << 0.0, 1.0, 1.0;
    double want = -std::log(0.8) - std::log(0.7) - std::log(0.9);
    CHECK(loss_bce(pv, yv) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("analytic gradients match central differences") {
    const double h = 1e-5;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        Rng rng(1000 + seed);
        ModelConfig cfg = small_config();
        ModelParams P = init_params(cfg, rng);
        ModelInputs m = random_inputs(rng, 6, 4);

        ParamGrads g = backward(P, m, forward(P, m));

        auto check_tensor = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& grad) {
            for (int c = 0; c < param.cols(); ++c)
                for (int r = 0; r < param.rows(); ++r) {
                    double orig = param(r, c);
                    param(r, c) = orig + h;
                    double up = loss_at(P, m);
                    param(r, c) = orig - h;
                    double down = loss_at(P, m);
                    param(r, c) = orig;
                    double fd = (up - down) / (2.0 * h);
                    double a = grad(r, c);
                    double rel = std::abs(a - fd) /
                                 std::max({std::abs(a), std::abs(fd), 1e-3});
                    CHECK(rel < 1e-4);
                }
        };
        check_tensor(P.w_time, g.w_time);
        check_tensor(P.w_avail, g.w_avail);
        check_tensor(P.w_freq, g.w_freq);
        check_tensor(P.w_hist, g.w_hist);

        for (int k = 0; k < P.theta.size(); ++k) {
            double orig = P.theta(k);
            P.theta(k) = orig + h;
            double up = loss_at(P, m);
            P.theta(k) = orig - h;
            double down = loss_at(P, m);
            P.theta(k) = orig;
            double fd = (up - down) / (2.0 * h);
            double a = g.theta(k);
            double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-3});
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("adam matches the scalar update formulas") {
    ModelConfig cfg = small_config();
    Rng rng(55);
    ModelParams P = init_params(cfg, rng);
    double w0 = P.w_time(1, 2);
    double th0 = P.theta(3);
    Eigen::MatrixXd w_avail_before = P.w_avail;

    ParamGrads g = zero_grads(cfg);
    g.w_time(1, 2) = 0.7;
    g.theta(3) = -0.25;
    const double lr = 0.01;

    adam_step(P, g, lr);
    CHECK(P.adam.step == 1);

    auto expect = [&](double g1, int steps) {
        double m = 0.0, v = 0.0, x = 0.0;
        for (int t = 1; t <= steps; ++t) {
            m = 0.9 * m + 0.1 * g1;
            v = 0.999 * v + 0.001 * g1 * g1;
            double mhat = m / (1.0 - std::pow(0.9, t));
            double vhat = v / (1.0 - std::pow(0.999, t));
            x -= lr * mhat / (std::sqrt(vhat) + 1e-8);
        }
        return x;
    };
    CHECK(P.w_time(1, 2) == doctest::Approx(w0 + expect(0.7, 1)).epsilon(1e-14));
    CHECK(P.theta(3) == doctest::Approx(th0 + expect(-0.25, 1)).epsilon(1e-14));
    // untouched entries keep their values: zero gradient, zero moments
    CHECK(max_abs_diff(P.w_avail, w_avail_before) == 0.0);

    adam_step(P, g, lr);
    CHECK(P.adam.step == 2);
    CHECK(P.w_time(1, 2) == doctest::Approx(w0 + expect(0.7, 2)).epsilon(1e-13));
    CHECK(P.theta(3) == doctest::Approx(th0 + expect(-0.25, 2)).epsilon(1e-13));
}

TEST_CASE("one train step equals a hand-assembled batch update") {
    ModelConfig cfg = small_config();
    Rng rng(321);
    ModelInputs m = random_inputs(rng, 6, 4);
    Dataset train;
    train.num_topics = 6;
    train.history_len = 4;
    train.instances = {m, m};

    Rng i1(500);
    ModelParams trained = init_params(cfg, i1);
    TrainConfig tc;
    tc.learning_rate = 0.05;
    tc.batch_size = 2;
    tc.epochs = 1;
    tc.seed = 9;
    train_net(trained, train, train, tc);

    Rng i2(500);
    ModelParams manual = init_params(cfg, i2);
    ParamGrads total = zero_grads(cfg);
    ParamGrads one = backward(manual, m, forward(manual, m));
    accumulate(total, one);
    accumulate(total, one);  // batch gradient is the plain sum
    adam_step(manual, total, tc.learning_rate);

    CHECK(max_abs_diff(trained.w_time, manual.w_time) == 0.0);
    CHECK(max_abs_diff(trained.w_avail, manual.w_avail) == 0.0);
    CHECK(max_abs_diff(trained.w_freq, manual.w_freq) == 0.0);
    CHECK(max_abs_diff(trained.w_hist, manual.w_hist) == 0.0);
    CHECK(max_abs_diff(trained.theta, manual.theta) == 0.0);
    CHECK(trained.adam.step == 1);
}

TEST_CASE("training lowers the loss and is deterministic") {
    ModelConfig cfg = small_config();
    Rng data_rng(77);
    Dataset train, valid;
    train.num_topics = valid.num_topics = 6;
    train.history_len = valid.history_len = 4;
    for (int n = 0; n < 200; ++n)
        train.instances.push_back(random_inputs(data_rng, 6, 4));
    for (int n = 0; n < 50; ++n)
        valid.instances.push_back(random_inputs(data_rng, 6, 4));

    TrainConfig tc;
    tc.learning_rate = 5e-3;
    tc.batch_size = 32;
    tc.epochs = 8;
    tc.seed = 3;

    Rng i1(42);
    ModelParams a = init_params(cfg, i1);
    double before = mean_bce(a, train);
    auto stats = train_net(a, train, valid, tc);
    REQUIRE(stats.size() == 8);
    CHECK(stats.front().epoch == 1);
    CHECK(stats.back().epoch == 8);
    CHECK(mean_bce(a, train) < before);
    for (const auto& s : stats) {
        CHECK(std::isfinite(s.train_bce));
        CHECK(std::isfinite(s.valid_bce));
    }

    Rng i2(42);
    ModelParams b = init_params(cfg, i2);
    train_net(b, train, valid, tc);
    CHECK(max_abs_diff(a.w_time, b.w_time) == 0.0);
    CHECK(max_abs_diff(a.w_avail, b.w_avail) == 0.0);
    CHECK(max_abs_diff(a.w_freq, b.w_freq) == 0.0);
    CHECK(max_abs_diff(a.w_hist, b.w_hist) == 0.0);
    CHECK(max_abs_diff(a.theta, b.theta) == 0.0);
    CHECK(a.adam.step == b.adam.step);
}

TEST_CASE("training rejects malformed inputs") {
    ModelConfig cfg = small_config();
    Rng rng(5);
    ModelParams P = init_params(cfg, rng);
    Dataset empty;
    empty.num_topics = 6;
    empty.history_len = 4;
    TrainConfig tc;
    CHECK_THROWS_AS(train_net(P, empty, empty, tc), InputError);

    Dataset wrong;
    wrong.num_topics = 5;
    wrong.history_len = 4;
    wrong.instances.push_back(random_inputs(rng, 5, 4));
    CHECK_THROWS_AS(train_net(P, wrong, wrong, tc), InputError);

    tc.batch_size = 0;
    CHECK_THROWS_AS(tc.validate(), ConfigError);
}

TEST_CASE("checkpoint round trip is elementwise exact") {
    ModelConfig cfg = small_config();
    Rng rng(88);
    ModelParams P = init_params(cfg, rng);
    // advance the optimizer so moments and step are nontrivial
    ModelInputs m = random_inputs(rng, 6, 4);
    for (int it = 0; it < 3; ++it) {
        ParamGrads g = backward(P, m, forward(P, m));
        adam_step(P, g, 0.01);
    }

    std::string path = "net_ckpt_test.bin";
    save_checkpoint(path, P);
    ModelParams Q = load_checkpoint(path);

    CHECK(Q.config.num_topics == 6);
    CHECK(Q.config.history_len == 4);
    CHECK(Q.config.num_filters == 3);
    CHECK(Q.config.bottleneck_dim == 2);
    CHECK(max_abs_diff(P.w_time, Q.w_time) == 0.0);
    CHECK(max_abs_diff(P.w_avail, Q.w_avail) == 0.0);
    CHECK(max_abs_diff(P.w_freq, Q.w_freq) == 0.0);
    CHECK(max_abs_diff(P.w_hist, Q.w_hist) == 0.0);
    CHECK(max_abs_diff(P.theta, Q.theta) == 0.0);
    CHECK(Q.adam.step == P.adam.step);
    CHECK(max_abs_diff(P.adam.m_w_time, Q.adam.m_w_time) == 0.0);
    CHECK(max_abs_diff(P.adam.v_w_time, Q.adam.v_w_time) == 0.0);
    CHECK(max_abs_diff(P.adam.m_theta, Q.adam.m_theta) == 0.0);
    CHECK(max_abs_diff(P.adam.v_theta, Q.adam.v_theta) == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint load failures carry distinct codes") {
    std::string path = "net_ckpt_bad.bin";

    {
        std::ofstream out(path, std::ios::binary);
        out << "WRONGfile";
    }
    try {
        load_checkpoint(path);
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        CHECK(e.code() == CheckpointError::Code::bad_magic);
    }

    {
        std::ofstream out(path, std::ios::binary);
        out << "CAEM1";
        write_u32(out, 2);
    }
    try {
        load_checkpoint(path);
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        CHECK(e.code() == CheckpointError::Code::bad_version);
    }

    {
        std::ofstream out(path, std::ios::binary);
        out << "CAEM1";
        write_u32(out, 1);
        write_u32(out, 4);  // J
        write_u32(out, 2);  // T
        write_u32(out, 1);  // H
        write_u32(out, 7);  // L >= J is not a valid shape
    }
    try {
        load_checkpoint(path);
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        CHECK(e.code() == CheckpointError::Code::dim_mismatch);
    }

    ModelConfig cfg = small_config();
    Rng rng(3);
    ModelParams P = init_params(cfg, rng);
    save_checkpoint(path, P);
    std::string bytes;
    {
        std::ifstream in(path, std::ios::binary);
        bytes.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    {
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 16));
    }
    try {
        load_checkpoint(path);
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        CHECK(e.code() == CheckpointError::Code::truncated);
    }

    {
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.put('\0');
    }
    try {
        load_checkpoint(path);
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        CHECK(e.code() == CheckpointError::Code::trailing_data);
    }
    std::remove(path.c_str());
}

TEST_CASE("mean_bce averages per-instance losses") {
    ModelConfig cfg = small_config();
    Rng rng(31);
    ModelParams P = init_params(cfg, rng);
    Dataset data;
    data.num_topics = 6;
    data.history_len = 4;
    data.instances.push_back(random_inputs(rng, 6, 4));
    data.instances.push_back(random_inputs(rng, 6, 4));
    double want = 0.5 * (loss_at(P, data.instances[0]) + loss_at(P, data.instances[1]));
    CHECK(mean_bce(P, data) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("predictor adapter forwards to the model") {
    ModelConfig cfg = small_config();
    Rng rng(61);
    ModelParams P = init_params(cfg, rng);
    ModelInputs m = random_inputs(rng, 6, 4);
    NetPredictor pred(P);
    CHECK(pred.num_topics() == 6);
    Eigen::VectorXd got = pred.predict(m.r_next, m.e_hist, m.e_freq);
    CHECK(max_abs_diff(got, predict_probs(P, m.r_next, m.e_hist, m.e_freq)) == 0.0);
}
