#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fd_check.hpp"
#include "pqn/autodiff.hpp"
#include "pqn/nn.hpp"
#include "pqn/rng.hpp"

using namespace pqn;

namespace {

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Gate-by-gate reference LSTM, written independently of the tape ops.
LstmCellState lstm_reference(const Vec& x, const LstmCellState& prev, const LstmParams& p) {
    std::size_t k = p.hidden_size();
    Vec pre(4 * k);
    for (std::size_t row = 0; row < 4 * k; ++row) {
        double acc = p.b.values[row];
        for (std::size_t j = 0; j < p.Wx.cols(); ++j)
            acc += p.Wx.values[row * p.Wx.cols() + j] * x[j];
        for (std::size_t j = 0; j < k; ++j)
            acc += p.Wh.values[row * k + j] * prev.h[j];
        pre[row] = acc;
    }
    LstmCellState out{Vec(k), Vec(k)};
    for (std::size_t i = 0; i < k; ++i) {
        double gi = sigmoid_ref(pre[i]);
        double gf = sigmoid_ref(pre[k + i]);
        double gg = std::tanh(pre[2 * k + i]);
        double go = sigmoid_ref(pre[3 * k + i]);
        out.c[i] = gf * prev.c[i] + gi * gg;
        out.h[i] = go * std::tanh(out.c[i]);
    }
    return out;
}

} // namespace

TEST_CASE("dense_forward computes activation(Wx + b)") {
    ParamTensor W("W", {3, 2});
    ParamTensor b("b", {3});
    Vec x = {0.5, -1.0};

    SECTION("zero weights with tanh give zero") {
        Vec y = dense_forward(x, W, b, Activation::Tanh);
        REQUIRE(y == Vec{0.0, 0.0, 0.0});
    }

    SECTION("identity passes the input through") {
        ParamTensor eye("I", {2, 2});
        eye.values = {1.0, 0.0, 0.0, 1.0};
        ParamTensor zero_b("b", {2});
        REQUIRE(dense_forward(x, eye, zero_b, Activation::None) == x);
    }

    SECTION("random case against an independent matrix multiply") {
        Rng rng(11);
        init_uniform(W, rng, 1.0);
        init_uniform(b, rng, 1.0);
        Vec y = dense_forward(x, W, b, Activation::Sigmoid);
        for (std::size_t i = 0; i < 3; ++i) {
            double acc = b.values[i];
            for (std::size_t j = 0; j < 2; ++j)
                acc += W.values[i * 2 + j] * x[j];
            REQUIRE(y[i] == Catch::Approx(1.0 / (1.0 + std::exp(-acc))).epsilon(1e-14));
        }
    }

    SECTION("shape mismatch throws") {
        Vec wrong = {1.0, 2.0, 3.0};
        REQUIRE_THROWS_AS(dense_forward(wrong, W, b, Activation::None), std::invalid_argument);
    }
}

TEST_CASE("lstm_step matches the analytic zero-weight cases") {
    LstmParams params("lstm", 3, 2);
    Vec x = {0.7, -0.2};

    SECTION("zero state stays zero") {
        LstmCellState out = lstm_step(x, {Vec(3, 0.0), Vec(3, 0.0)}, params);
        REQUIRE(out.c == Vec{0.0, 0.0, 0.0});
        REQUIRE(out.h == Vec{0.0, 0.0, 0.0});
    }

    SECTION("cell memory decays by the 0.5 forget gate") {
        Vec c0 = {1.0, -2.0, 0.5};
        LstmCellState out = lstm_step(x, {Vec(3, 0.0), c0}, params);
        for (std::size_t i = 0; i < 3; ++i) {
            REQUIRE(out.c[i] == Catch::Approx(0.5 * c0[i]).epsilon(1e-14));
            REQUIRE(out.h[i] == Catch::Approx(0.5 * std::tanh(0.5 * c0[i])).epsilon(1e-14));
        }
    }

    SECTION("random parameters against the gate-by-gate reference") {
        Rng rng(21);
        init_uniform(params.Wx, rng, 0.6);
        init_uniform(params.Wh, rng, 0.6);
        init_uniform(params.b, rng, 0.6);
        LstmCellState prev{Vec{0.1, -0.4, 0.9}, Vec{0.3, 0.2, -0.7}};
        LstmCellState got = lstm_step(x, prev, params);
        LstmCellState want = lstm_reference(x, prev, params);
        for (std::size_t i = 0; i < 3; ++i) {
            REQUIRE(got.h[i] == Catch::Approx(want.h[i]).epsilon(1e-13));
            REQUIRE(got.c[i] == Catch::Approx(want.c[i]).epsilon(1e-13));
        }
    }

    SECTION("state size mismatch throws") {
        REQUIRE_THROWS_AS(lstm_step(x, {Vec(2, 0.0), Vec(2, 0.0)}, params),
                          std::invalid_argument);
    }
}

TEST_CASE("backward populates exactly the reachable gradients") {
    ParamTensor W("W", {3, 2});
    ParamTensor untouched("other", {2, 2});
    Rng rng(5);
    init_uniform(W, rng, 1.0);
    Vec x = {0.25, -1.5};

    Tape tape;
    Tape::NodeId loss = tape.sum(tape.affine(W, tape.input(x)));
    tape.backward(loss);

    // d sum(Wx) / dW[i][j] == x[j]
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            REQUIRE(W.grad[i * 2 + j] == x[j]);
    REQUIRE(untouched.grad == Vec(4, 0.0));
}

TEST_CASE("softmax cross-entropy adjoint is probs minus onehot") {
    Tape tape;
    Vec logits = {0.3, -1.2, 2.0, 0.0};
    Tape::NodeId z = tape.input(logits);
    Tape::NodeId loss = tape.softmax_cross_entropy(z, 2);
    tape.backward(loss);

    double zmax = 2.0;
    double denom = 0.0;
    for (double v : logits)
        denom += std::exp(v - zmax);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        double p = std::exp(logits[i] - zmax) / denom;
        double expected = p - (i == 2 ? 1.0 : 0.0);
        REQUIRE(tape.adjoint(z)[i] == Catch::Approx(expected).epsilon(1e-13));
    }
}

TEST_CASE("gradients agree with central finite differences") {
    Rng rng(77);

    SECTION("dense layers, every activation") {
        for (Activation act : {Activation::None, Activation::Tanh, Activation::Sigmoid}) {
            ParamTensor W("W", {4, 3});
            ParamTensor b("b", {4});
            init_uniform(W, rng, 0.8);
            init_uniform(b, rng, 0.8);
            Vec x = {0.2, -0.5, 0.9};
            auto loss = [&](bool with_grad) {
                Tape tape(with_grad);
                Tape::NodeId out = dense_on_tape(tape, tape.input(x), W, b, act);
                Tape::NodeId l = tape.sum(tape.square(out));
                if (with_grad)
                    tape.backward(l);
                return tape.scalar(l);
            };
            auto report = testing::fd_check({&W, &b}, loss);
            REQUIRE(report.max_rel_err <= 1e-4);
        }
    }

    SECTION("one LSTM step") {
        LstmParams params("lstm", 3, 2);
        init_uniform(params.Wx, rng, 0.7);
        init_uniform(params.Wh, rng, 0.7);
        init_uniform(params.b, rng, 0.7);
        Vec x = {0.4, -0.9};
        LstmCellState prev{Vec{0.2, -0.1, 0.6}, Vec{-0.3, 0.5, 0.1}};
        auto loss = [&](bool with_grad) {
            Tape tape(with_grad);
            LstmNodeState out = lstm_step_on_tape(
                tape, tape.input(x), {tape.input(prev.h), tape.input(prev.c)}, params);
            Tape::NodeId l = tape.sum(tape.square(tape.concat({out.h, out.c})));
            if (with_grad)
                tape.backward(l);
            return tape.scalar(l);
        };
        auto report = testing::fd_check({&params.Wx, &params.Wh, &params.b}, loss);
        REQUIRE(report.max_rel_err <= 1e-4);
    }

    SECTION("clamp subgradient away from the kinks") {
        ParamTensor w("w", {1});
        w.values = {0.4};
        auto loss = [&](bool with_grad) {
            Tape tape(with_grad);
            Tape::NodeId l = tape.sum(tape.clamp(tape.param_leaf(w), 1e-3, 2.0));
            if (with_grad)
                tape.backward(l);
            return tape.scalar(l);
        };
        auto report = testing::fd_check({&w}, loss);
        REQUIRE(report.max_rel_err <= 1e-4);

        w.values = {5.0}; // above the ceiling: zero gradient on both sides
        report = testing::fd_check({&w}, loss);
        REQUIRE(report.max_rel_err <= 1e-4);
    }
}

TEST_CASE("adam optimizer") {
    SECTION("zero gradients leave parameters unchanged") {
        ParamTensor w("w", {3});
        w.values = {1.0, -2.0, 0.5};
        AdamOptimizer adam({&w}, 0.05);
        adam.step();
        REQUIRE(w.values == Vec{1.0, -2.0, 0.5});
    }

    SECTION("first step moves by about -lr * sign(grad)") {
        ParamTensor w("w", {1});
        w.values = {2.0};
        w.grad = {3.0};
        AdamOptimizer adam({&w}, 0.05);
        adam.step();
        REQUIRE(w.values[0] == Catch::Approx(2.0 - 0.05).epsilon(1e-6));
        REQUIRE(w.grad[0] == 0.0); // cleared after the update
    }

    SECTION("quadratic bowl converges") {
        ParamTensor w("w", {1});
        w.values = {1.0};
        AdamOptimizer adam({&w}, 0.01);
        for (int i = 0; i < 1000; ++i) {
            w.grad[0] = 2.0 * w.values[0];
            adam.step();
        }
        REQUIRE(std::abs(w.values[0]) <= 1e-3);
    }
}

TEST_CASE("forward passes stay finite and deterministic") {
    Rng rng(123);
    LstmParams params("lstm", 8, 8);
    init_uniform(params.Wx, rng, 1.5);
    init_uniform(params.Wh, rng, 1.5);
    init_uniform(params.b, rng, 1.5);
    LstmCellState state{Vec(8, 0.0), Vec(8, 0.0)};
    Vec x(8);
    for (int t = 0; t < 50; ++t) {
        for (double& v : x)
            v = rng.uniform(-3.0, 3.0);
        state = lstm_step(x, state, params);
        for (double v : state.h)
            REQUIRE(std::isfinite(v));
        for (double v : state.c)
            REQUIRE(std::isfinite(v));
    }
    LstmCellState again = lstm_step(x, state, params);
    LstmCellState again2 = lstm_step(x, state, params);
    REQUIRE(again.h == again2.h);
    REQUIRE(again.c == again2.c);
}
