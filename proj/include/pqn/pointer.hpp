#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "pqn/autodiff.hpp"
#include "pqn/mdp.hpp"
#include "pqn/nn.hpp"
#include "pqn/tsp.hpp"

namespace pqn {

/// Attention projections: score u_a = v . tanh(W1 h_t + W2 e_a).
struct AttentionParams {
    ParamTensor W1; // (k, k)
    ParamTensor W2; // (k, k)
    ParamTensor v;  // (k)

    AttentionParams() = default;
    explicit AttentionParams(std::size_t k)
        : W1("att.W1", {k, k}), W2("att.W2", {k, k}), v("att.v", {k}) {}
};

/// All trainable arrays of the sequence model: coordinate embedding,
/// encoder/decoder LSTMs, the decoder start token, and attention.
struct PointerParams {
    std::size_t hidden = 0; // k
    ParamTensor embed_W;    // (k, 2) city coordinate projection
    ParamTensor embed_b;    // (k)
    LstmParams encoder;     // input k
    LstmParams decoder;     // input k
    ParamTensor start_token; // (k) decoder input at t == 0
    AttentionParams attention;

    PointerParams() = default;
    explicit PointerParams(std::size_t k)
        : hidden(k), embed_W("embed.W", {k, 2}), embed_b("embed.b", {k}),
          encoder("enc", k, k), decoder("dec", k, k), start_token("dec.start", {k}),
          attention(k) {}

    template <class F> void for_each_param(F&& fn) {
        fn(embed_W);
        fn(embed_b);
        fn(encoder.Wx);
        fn(encoder.Wh);
        fn(encoder.b);
        fn(decoder.Wx);
        fn(decoder.Wh);
        fn(decoder.b);
        fn(start_token);
        fn(attention.W1);
        fn(attention.W2);
        fn(attention.v);
    }

    void init(Rng& rng, double bound = 0.08) {
        for_each_param([&](ParamTensor& p) { init_uniform(p, rng, bound); });
    }
};

/// Per-city embeddings e_a (encoder hidden state at each position) plus the
/// final encoder state. Note the encoder consumes cities in index order, so
/// embeddings are not permutation-equivariant; they depend on the LSTM's
/// scan order by construction.
struct EncodedInstance {
    std::vector<Vec> embeddings;
    LstmCellState final_state;
};

struct EncodedTape {
    std::vector<Tape::NodeId> embeddings;
    LstmNodeState final_state;
};

inline EncodedTape encode_on_tape(Tape& tape, const TspInstance& instance,
                                  const PointerParams& params) {
    if (!instance.coords)
        throw std::invalid_argument("encode: instance has no coordinates to embed");
    std::size_t k = params.hidden;
    EncodedTape encoded;
    LstmNodeState state{tape.input(Vec(k, 0.0)), tape.input(Vec(k, 0.0))};
    for (int city = 0; city < instance.n; ++city) {
        Tape::NodeId token =
            tape.input(Vec{(*instance.coords)[city][0], (*instance.coords)[city][1]});
        Tape::NodeId projected = tape.affine(params.embed_W, token, &params.embed_b);
        state = lstm_step_on_tape(tape, projected, state, params.encoder);
        encoded.embeddings.push_back(state.h);
    }
    encoded.final_state = state;
    return encoded;
}

/// Runs the encoder over the city sequence; requires coordinates.
inline EncodedInstance encode(const TspInstance& instance, const PointerParams& params) {
    Tape tape(false);
    EncodedTape nodes = encode_on_tape(tape, instance, params);
    EncodedInstance encoded;
    for (Tape::NodeId id : nodes.embeddings)
        encoded.embeddings.push_back(tape.val(id));
    encoded.final_state = {tape.val(nodes.final_state.h), tape.val(nodes.final_state.c)};
    return encoded;
}

/// One decoder step for the given state. The input token is the embedding of
/// the current city, except at t == 0 where a learned start token is fed; the
/// caller passes the encoder's final state as prev for that first step.
inline LstmNodeState decode_state_on_tape(Tape& tape, const EpisodeState& state,
                                          const EncodedTape& encoded,
                                          const PointerParams& params,
                                          const LstmNodeState& prev) {
    Tape::NodeId token = state.t == 0 ? tape.param_leaf(params.start_token)
                                      : encoded.embeddings[state.current];
    return lstm_step_on_tape(tape, token, prev, params.decoder);
}

inline LstmCellState decode_state(const EpisodeState& state, const EncodedInstance& encoded,
                                  const PointerParams& params, const LstmCellState& prev) {
    const Vec& token =
        state.t == 0 ? params.start_token.values : encoded.embeddings[state.current];
    return lstm_step(token, prev, params.decoder);
}

/// Runs the decoder over a visited prefix: the start token first, then the
/// embeddings of each subsequently visited city. Returns the decoder state
/// whose h scores the next action.
inline LstmCellState decode_prefix(const std::vector<int>& visited,
                                   const EncodedInstance& encoded,
                                   const PointerParams& params) {
    if (visited.empty())
        throw std::invalid_argument("decode_prefix: empty visited sequence");
    LstmCellState state = lstm_step(params.start_token.values, encoded.final_state,
                                    params.decoder);
    for (std::size_t i = 1; i < visited.size(); ++i)
        state = lstm_step(encoded.embeddings[visited[i]], state, params.decoder);
    return state;
}

/// Context vector c = tanh(W1 h + W2 e_a); shares W1/W2 with the scores.
inline Vec context_vector(const Vec& h, const Vec& e_a, const AttentionParams& params) {
    Tape tape(false);
    Tape::NodeId ctx = tape.tanh(
        tape.add(tape.affine(params.W1, tape.input(h)), tape.affine(params.W2, tape.input(e_a))));
    return tape.val(ctx);
}

/// Attention score per feasible action only; visited cities get no entry.
inline std::map<int, double> attention_scores(const Vec& h, const EncodedInstance& encoded,
                                              const std::vector<int>& feasible,
                                              const AttentionParams& params) {
    if (feasible.empty())
        throw std::invalid_argument("attention_scores: empty feasible set");
    Tape tape(false);
    Tape::NodeId w1h = tape.affine(params.W1, tape.input(h));
    std::map<int, double> scores;
    for (int city : feasible) {
        Tape::NodeId ctx = tape.tanh(
            tape.add(w1h, tape.affine(params.W2, tape.input(encoded.embeddings[city]))));
        scores[city] = tape.scalar(tape.dot_param(params.v, ctx));
    }
    return scores;
}

} // namespace pqn
