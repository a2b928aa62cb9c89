#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fd_check.hpp"
#include "pqn/pointer.hpp"

using namespace pqn;

namespace {

PointerParams random_params(std::size_t k, std::uint64_t seed) {
    PointerParams params(k);
    Rng rng(seed);
    params.init(rng, 0.5);
    return params;
}

} // namespace

TEST_CASE("encode produces one embedding per city") {
    TspInstance instance = generate_instance(6, 3);
    PointerParams params = random_params(4, 1);
    EncodedInstance encoded = encode(instance, params);
    REQUIRE(encoded.embeddings.size() == 6);
    for (const Vec& e : encoded.embeddings) {
        REQUIRE(e.size() == 4);
        for (double v : e)
            REQUIRE(std::isfinite(v));
    }
    REQUIRE(encoded.final_state.h.size() == 4);

    SECTION("zero weights give zero embeddings") {
        PointerParams zeros(4);
        EncodedInstance flat = encode(instance, zeros);
        for (const Vec& e : flat.embeddings)
            REQUIRE(e == Vec(4, 0.0));
    }

    SECTION("instances without coordinates cannot be encoded") {
        TspInstance stripped = perturb_instance(instance, 0.9, 1.1, 5);
        REQUIRE_THROWS_AS(encode(stripped, params), std::invalid_argument);
    }

    SECTION("deterministic") {
        EncodedInstance again = encode(instance, params);
        REQUIRE(again.embeddings == encoded.embeddings);
    }
}

TEST_CASE("decode_state consumes the current city's embedding") {
    TspInstance instance = generate_instance(5, 8);
    PointerParams params = random_params(3, 2);
    EncodedInstance encoded = encode(instance, params);
    EpisodeState state = reset(instance, 0);

    // At t == 0 the decoder is primed with the encoder's final state and the
    // learned start token; decode_prefix follows the same contract.
    LstmCellState first = decode_state(state, encoded, params, encoded.final_state);
    LstmCellState via_prefix = decode_prefix({0}, encoded, params);
    REQUIRE(first.h == via_prefix.h);
    REQUIRE(first.c == via_prefix.c);

    SECTION("identical inputs give identical h") {
        LstmCellState again = decode_state(state, encoded, params, encoded.final_state);
        REQUIRE(again.h == first.h);
    }

    SECTION("hidden entries stay inside the tanh range") {
        LstmCellState cursor = first;
        EpisodeState s = state;
        for (int action : {2, 4, 1}) {
            s = step(instance, s, action).next_state;
            cursor = decode_state(s, encoded, params, cursor);
            for (double v : cursor.h) {
                REQUIRE(v > -1.0);
                REQUIRE(v < 1.0);
            }
        }
    }

    SECTION("longer prefixes chain decoder steps") {
        EpisodeState s = reset(instance, 0);
        LstmCellState cursor = decode_state(s, encoded, params, encoded.final_state);
        s = step(instance, s, 3).next_state;
        cursor = decode_state(s, encoded, params, cursor);
        LstmCellState direct = decode_prefix({0, 3}, encoded, params);
        REQUIRE(cursor.h == direct.h);
        REQUIRE(cursor.c == direct.c);
    }
}

TEST_CASE("attention scores follow v . tanh(W1 h + W2 e)") {
    TspInstance instance = generate_instance(5, 12);
    PointerParams params = random_params(3, 9);
    EncodedInstance encoded = encode(instance, params);
    Vec h = {0.3, -0.6, 0.1};
    std::vector<int> feasible = {1, 2, 4};

    SECTION("zero v zeroes every score") {
        PointerParams zero_v = params;
        std::fill(zero_v.attention.v.values.begin(), zero_v.attention.v.values.end(), 0.0);
        for (const auto& [city, score] : attention_scores(h, encoded, feasible, zero_v.attention))
            REQUIRE(score == 0.0);
    }

    SECTION("zero projections zero the tanh argument") {
        PointerParams zero_w(3);
        Rng rng(4);
        init_uniform(zero_w.attention.v, rng, 0.5);
        for (const auto& [city, score] :
             attention_scores(h, encoded, feasible, zero_w.attention))
            REQUIRE(score == 0.0);
    }

    SECTION("scalar hand evaluation at k = 1") {
        AttentionParams tiny(1);
        tiny.W1.values = {1.0};
        tiny.W2.values = {1.0};
        tiny.v.values = {1.0};
        EncodedInstance enc;
        enc.embeddings = {Vec{0.25}};
        enc.final_state = {Vec{0.0}, Vec{0.0}};
        auto scores = attention_scores(Vec{0.5}, enc, {0}, tiny);
        REQUIRE(scores.at(0) == Catch::Approx(std::tanh(0.75)).epsilon(1e-14));
    }

    SECTION("only feasible actions receive logits") {
        auto scores = attention_scores(h, encoded, feasible, params.attention);
        REQUIRE(scores.size() == feasible.size());
        for (int city : feasible)
            REQUIRE(scores.count(city) == 1);
        REQUIRE(scores.count(0) == 0);
        REQUIRE(scores.count(3) == 0);
    }

    SECTION("empty feasible set throws") {
        REQUIRE_THROWS_AS(attention_scores(h, encoded, {}, params.attention),
                          std::invalid_argument);
    }
}

TEST_CASE("context vector shares the attention projections") {
    PointerParams params = random_params(4, 33);
    TspInstance instance = generate_instance(6, 6);
    EncodedInstance encoded = encode(instance, params);
    Vec h = {0.2, -0.8, 0.5, 0.05};

    SECTION("zero parameters give the zero vector") {
        AttentionParams zeros(4);
        REQUIRE(context_vector(h, encoded.embeddings[1], zeros) == Vec(4, 0.0));
    }

    SECTION("u equals v dot context, to machine precision") {
        auto scores = attention_scores(h, encoded, {0, 1, 2, 3, 4, 5}, params.attention);
        for (int city = 0; city < 6; ++city) {
            Vec ctx = context_vector(h, encoded.embeddings[city], params.attention);
            double dot = 0.0;
            for (std::size_t i = 0; i < ctx.size(); ++i)
                dot += params.attention.v.values[i] * ctx[i];
            REQUIRE(scores.at(city) == Catch::Approx(dot).margin(1e-15));
        }
    }

    SECTION("entries stay inside (-1, 1)") {
        Vec ctx = context_vector(h, encoded.embeddings[2], params.attention);
        for (double v : ctx) {
            REQUIRE(v > -1.0);
            REQUIRE(v < 1.0);
        }
    }
}

TEST_CASE("attention gradients pass the finite-difference check") {
    AttentionParams params(3);
    Rng rng(55);
    init_uniform(params.W1, rng, 0.7);
    init_uniform(params.W2, rng, 0.7);
    init_uniform(params.v, rng, 0.7);
    Vec h = {0.4, -0.3, 0.8};
    Vec e = {0.1, 0.9, -0.5};

    auto loss = [&](bool with_grad) {
        Tape tape(with_grad);
        Tape::NodeId ctx = tape.tanh(tape.add(tape.affine(params.W1, tape.input(h)),
                                              tape.affine(params.W2, tape.input(e))));
        Tape::NodeId u = tape.dot_param(params.v, ctx);
        Tape::NodeId l = tape.sum(tape.square(u));
        if (with_grad)
            tape.backward(l);
        return tape.scalar(l);
    };
    auto report = testing::fd_check({&params.W1, &params.W2, &params.v}, loss);
    REQUIRE(report.max_rel_err <= 1e-4);
}
