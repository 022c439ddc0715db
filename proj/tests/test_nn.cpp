#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "nsm/io.hpp"
#include "nsm/nn.hpp"
#include "nsm/rng.hpp"
#include "nsm/tape.hpp"
#include "util.hpp"

using namespace nsm;
using testutil::bit_equal;
using testutil::identity_matrix;
using testutil::max_abs_diff;
using testutil::rand_matrix;
using testutil::set_param;
using testutil::TmpDir;

namespace {

// Row-at-a-time double-loop attention with long-double softmax.
Matrix attention_oracle(const Matrix& Q, const Matrix& K, const Matrix& V) {
    double s = 1.0 / std::sqrt(static_cast<double>(Q.cols));
    Matrix out(Q.rows, V.cols);
    for (int i = 0; i < Q.rows; ++i) {
        std::vector<long double> logits(static_cast<size_t>(K.rows));
        long double mx = -1e400L;
        for (int j = 0; j < K.rows; ++j) {
            long double dot = 0.0L;
            for (int c = 0; c < Q.cols; ++c) dot += (long double)Q.at(i, c) * K.at(j, c);
            logits[static_cast<size_t>(j)] = dot * s;
            mx = std::max(mx, logits[static_cast<size_t>(j)]);
        }
        long double denom = 0.0L;
        for (auto& l : logits) {
            l = std::exp(l - mx);
            denom += l;
        }
        for (int j = 0; j < K.rows; ++j) {
            double w = static_cast<double>(logits[static_cast<size_t>(j)] / denom);
            for (int c = 0; c < V.cols; ++c) out.at(i, c) += w * V.at(j, c);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("mlp with identity weights passes input through unchanged") {
    ParameterStore store;
    Rng rng(201);
    MlpSpec mlp{"id", {3, 3}};
    mlp.register_params(store, rng);
    set_param(store, "id.w0", identity_matrix(3));
    set_param(store, "id.b0", Matrix(1, 3));

    Tape t(false);
    auto leaves = leaf_params(t, store);
    Matrix x = rand_matrix(rng, 4, 3);
    const Matrix& y = t.val(mlp.forward(t, store, leaves, t.constant(x)));
    CHECK(bit_equal(y, x));
}

TEST_CASE("relu hidden layer kills an all-negative input") {
    ParameterStore store;
    Rng rng(203);
    MlpSpec mlp{"m", {2, 2, 2}};
    mlp.register_params(store, rng);
    set_param(store, "m.w0", identity_matrix(2));
    set_param(store, "m.b0", Matrix(1, 2));
    set_param(store, "m.w1", identity_matrix(2));
    set_param(store, "m.b1", Matrix(1, 2));

    Tape t(false);
    auto leaves = leaf_params(t, store);
    Matrix x(3, 2);
    for (size_t i = 0; i < x.data.size(); ++i) x.data[i] = -1.0 - 0.5 * static_cast<double>(i);
    const Matrix& y = t.val(mlp.forward(t, store, leaves, t.constant(x)));
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("mlp rows are processed independently") {
    ParameterStore store;
    Rng rng(207);
    MlpSpec mlp{"m", {4, 8, 3}};
    mlp.register_params(store, rng);

    Matrix X = rand_matrix(rng, 5, 4);
    Tape t(false);
    auto leaves = leaf_params(t, store);
    const Matrix batch = t.val(mlp.forward(t, store, leaves, t.constant(X)));

    for (int r = 0; r < 5; ++r) {
        Matrix row(1, 4);
        for (int c = 0; c < 4; ++c) row.at(0, c) = X.at(r, c);
        const Matrix& one = t.val(mlp.forward(t, store, leaves, t.constant(row)));
        for (int c = 0; c < 3; ++c) CHECK(one.at(0, c) == batch.at(r, c));
    }
}

TEST_CASE("mlp forward matches the tape-free evaluator") {
    ParameterStore store;
    Rng rng(209);
    MlpSpec mlp{"m", {3, 6, 6, 2}};
    mlp.register_params(store, rng);
    Matrix X = rand_matrix(rng, 7, 3);

    Tape t(false);
    auto leaves = leaf_params(t, store);
    const Matrix& y = t.val(mlp.forward(t, store, leaves, t.constant(X)));
    CHECK(max_abs_diff(y, testutil::mlp_manual(mlp, store, X)) < 1e-13);
}

TEST_CASE("gru with all-zero parameters halves the hidden state") {
    ParameterStore store;
    Rng rng(211);
    GruSpec gru{"g", 3, 4};
    gru.register_params(store, rng);
    for (const char* gate : {"z", "r", "h"}) {
        set_param(store, std::string("g.w") + gate, Matrix(3, 4));
        set_param(store, std::string("g.u") + gate, Matrix(4, 4));
    }

    Tape t(false);
    auto leaves = leaf_params(t, store);
    Matrix x = rand_matrix(rng, 2, 3), h = rand_matrix(rng, 2, 4);
    const Matrix& hn = t.val(gru.step(t, store, leaves, t.constant(x), t.constant(h)));
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 4; ++c) CHECK(hn.at(r, c) == 0.5 * h.at(r, c));
}

TEST_CASE("gru with a saturated update gate returns exactly the candidate") {
    ParameterStore store;
    Rng rng(213);
    GruSpec gru{"g", 2, 3};
    gru.register_params(store, rng);
    set_param(store, "g.bz", Matrix(1, 3, 40.0));  // sigmoid(40) rounds to 1.0

    Tape t(false);
    auto leaves = leaf_params(t, store);
    Matrix x = rand_matrix(rng, 2, 2), h = rand_matrix(rng, 2, 3);
    VarId xv = t.constant(x), hv = t.constant(h);
    const Matrix hn = t.val(gru.step(t, store, leaves, xv, hv));

    // candidate recomputed through the same public pieces, update gate aside
    const Matrix& wr = store.at(store.index_of("g.wr")).value;
    const Matrix& ur = store.at(store.index_of("g.ur")).value;
    const Matrix& br = store.at(store.index_of("g.br")).value;
    const Matrix& wh = store.at(store.index_of("g.wh")).value;
    const Matrix& uh = store.at(store.index_of("g.uh")).value;
    const Matrix& bh = store.at(store.index_of("g.bh")).value;
    Matrix pre_r = matmul(x, wr);
    Matrix hr = matmul(h, ur);
    Matrix cand(2, 3);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) {
            double rr = pre_r.at(r, c) + hr.at(r, c) + br.at(0, c);
            rr = rr >= 0.0 ? 1.0 / (1.0 + std::exp(-rr)) : std::exp(rr) / (1.0 + std::exp(rr));
            cand.at(r, c) = rr * h.at(r, c);
        }
    Matrix pre_h = matmul(x, wh);
    Matrix ch = matmul(cand, uh);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            cand.at(r, c) = std::tanh(pre_h.at(r, c) + ch.at(r, c) + bh.at(0, c));
    CHECK(bit_equal(hn, cand));
}

TEST_CASE("gru fixed point: candidate equal to the state keeps the state") {
    // x = 0, gates saturated open, and Uh chosen so tanh(h·Uh) = h at h = 0.5.
    ParameterStore store;
    Rng rng(217);
    GruSpec gru{"g", 1, 1};
    gru.register_params(store, rng);
    set_param(store, "g.bz", Matrix(1, 1, 40.0));
    set_param(store, "g.br", Matrix(1, 1, 40.0));
    set_param(store, "g.bh", Matrix(1, 1));
    double target = 0.5;
    set_param(store, "g.uh", Matrix(1, 1, std::atanh(target) / target));

    Tape t(false);
    auto leaves = leaf_params(t, store);
    const Matrix& hn =
        t.val(gru.step(t, store, leaves, t.constant(Matrix(1, 1)), t.constant(Matrix(1, 1, target))));
    CHECK(std::abs(hn.at(0, 0) - target) < 1e-12);
}

TEST_CASE("attention over a single key returns that value row exactly") {
    Rng rng(219);
    Matrix Q = rand_matrix(rng, 4, 3), K = rand_matrix(rng, 1, 3), V = rand_matrix(rng, 1, 5);
    Tape t(false);
    auto a = scaled_dot_attention(t, t.constant(Q), t.constant(K), t.constant(V));
    const Matrix& w = t.val(a.weights);
    const Matrix& o = t.val(a.output);
    for (int r = 0; r < 4; ++r) {
        CHECK(w.at(r, 0) == 1.0);
        for (int c = 0; c < 5; ++c) CHECK(o.at(r, c) == V.at(0, c));
    }
}

TEST_CASE("attention over identical keys averages the values") {
    Rng rng(223);
    Matrix Q = rand_matrix(rng, 3, 4);
    Matrix K(6, 4), V = rand_matrix(rng, 6, 2);
    Matrix key = rand_matrix(rng, 1, 4);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 4; ++c) K.at(r, c) = key.at(0, c);

    Tape t(false);
    auto a = scaled_dot_attention(t, t.constant(Q), t.constant(K), t.constant(V));
    const Matrix& o = t.val(a.output);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 2; ++c) {
            double mean = 0.0;
            for (int j = 0; j < 6; ++j) mean += V.at(j, c);
            mean /= 6.0;
            CHECK(std::abs(o.at(r, c) - mean) < 1e-12);
        }
}

TEST_CASE("attention matches a double-loop extended-precision oracle") {
    Rng rng(227);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix Q = rand_matrix(rng, 2, 3, 2.0), K = rand_matrix(rng, 5, 3, 2.0),
               V = rand_matrix(rng, 5, 4, 2.0);
        Tape t(false);
        auto a = scaled_dot_attention(t, t.constant(Q), t.constant(K), t.constant(V));
        CHECK(max_abs_diff(t.val(a.output), attention_oracle(Q, K, V)) < 1e-12);

        const Matrix& w = t.val(a.weights);
        for (int r = 0; r < w.rows; ++r) {
            double sum = 0.0;
            for (int c = 0; c < w.cols; ++c) sum += w.at(r, c);
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("attention output is invariant to permuting key/value rows together") {
    Rng rng(229);
    Matrix Q = rand_matrix(rng, 3, 4), K = rand_matrix(rng, 7, 4), V = rand_matrix(rng, 7, 5);
    std::vector<int> perm = {3, 0, 6, 1, 5, 2, 4};
    Matrix Kp(7, 4), Vp(7, 5);
    for (int r = 0; r < 7; ++r) {
        for (int c = 0; c < 4; ++c) Kp.at(r, c) = K.at(perm[static_cast<size_t>(r)], c);
        for (int c = 0; c < 5; ++c) Vp.at(r, c) = V.at(perm[static_cast<size_t>(r)], c);
    }
    Tape t(false);
    auto a = scaled_dot_attention(t, t.constant(Q), t.constant(K), t.constant(V));
    auto b = scaled_dot_attention(t, t.constant(Q), t.constant(Kp), t.constant(Vp));
    CHECK(max_abs_diff(t.val(a.output), t.val(b.output)) < 1e-12);
}

TEST_CASE("parameter store basics") {
    ParameterStore store;
    Rng rng(233);
    store.add_weight("a", 2, 3, rng);
    store.add_zeros("b", 1, 4);
    CHECK(store.count() == 2);
    CHECK(store.scalar_count() == 10);
    CHECK(store.index_of("a") == 0);
    CHECK(store.index_of("missing") == -1);
    CHECK_THROWS_AS((void)store.add_zeros("a", 2, 3), std::invalid_argument);

    // default init bound is ±√(6/(fan_in+fan_out))
    for (double v : store.at(0).value.data) CHECK(std::abs(v) <= std::sqrt(6.0 / 5.0));
}

TEST_CASE("gradient harvest adds into the store and skips unused parameters") {
    ParameterStore store;
    Rng rng(237);
    store.add_weight("used", 1, 3, rng);
    store.add_weight("idle", 2, 2, rng);

    Tape t;
    auto leaves = leaf_params(t, store);
    VarId loss = t.matmul(leaves[0], t.constant(Matrix(3, 1, 1.0)));
    t.backward(loss);

    harvest_grads(t, leaves, store);
    harvest_grads(t, leaves, store);  // second harvest doubles
    for (double v : store.at(0).grad.data) CHECK(v == 2.0);
    for (double v : store.at(1).grad.data) CHECK(v == 0.0);

    store.zero_grads();
    for (double v : store.at(0).grad.data) CHECK(v == 0.0);
}

TEST_CASE("checkpoints round-trip byte-exactly and carry the seed") {
    TmpDir tmp("ckpt");
    ParameterStore store;
    Rng rng(241);
    MlpSpec mlp{"m", {3, 5, 2}};
    mlp.register_params(store, rng);
    GruSpec gru{"g", 3, 4};
    gru.register_params(store, rng);

    const std::string p1 = tmp.str("a.ckpt"), p2 = tmp.str("b.ckpt");
    store.save(p1, 0xFEEDULL);

    uint64_t seed = 0;
    ParameterStore loaded = ParameterStore::load(p1, &seed);
    CHECK(seed == 0xFEEDULL);
    REQUIRE(loaded.count() == store.count());
    for (int i = 0; i < store.count(); ++i) {
        CHECK(loaded.at(i).name == store.at(i).name);
        CHECK(bit_equal(loaded.at(i).value, store.at(i).value));
    }

    loaded.save(p2, seed);
    CHECK(testutil::files_equal(p1, p2));
}

TEST_CASE("corrupt checkpoints are rejected") {
    TmpDir tmp("ckpt_bad");
    ParameterStore store;
    Rng rng(243);
    store.add_weight("w", 2, 2, rng);
    const std::string good = tmp.str("good.ckpt");
    store.save(good, 1);

    std::string bytes = io::slurp(good);

    const std::string trailing = tmp.str("trailing.ckpt");
    io::atomic_write(trailing, bytes + "x");
    CHECK_THROWS_AS((void)ParameterStore::load(trailing), io::FileError);

    const std::string truncated = tmp.str("truncated.ckpt");
    io::atomic_write(truncated, bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS((void)ParameterStore::load(truncated), io::FileError);

    std::string wrong = bytes;
    wrong[0] ^= 0x40;
    const std::string badmagic = tmp.str("badmagic.ckpt");
    io::atomic_write(badmagic, wrong);
    CHECK_THROWS_AS((void)ParameterStore::load(badmagic), io::FileError);

    CHECK_THROWS_AS((void)ParameterStore::load(tmp.str("absent.ckpt")), io::FileError);
}

TEST_CASE("finite differences on the composite blocks") {
    Rng rng(251);

    SUBCASE("mlp") {
        ParameterStore store;
        MlpSpec mlp{"m", {3, 5, 2}};
        mlp.register_params(store, rng);
        Matrix x = rand_matrix(rng, 4, 3);
        Matrix u = rand_matrix(rng, 1, 4), v = rand_matrix(rng, 2, 1);
        LossBuilder build = [&](Tape& t, const std::vector<VarId>& leaves) {
            VarId y = mlp.forward(t, store, leaves, t.constant(x));
            return t.matmul(t.matmul(t.constant(u), y), t.constant(v));
        };
        std::string worst;
        double err = fd_max_rel_error(store, build, 1e-5, &worst);
        INFO("worst: ", worst);
        CHECK(err < 1e-4);
    }

    SUBCASE("gru") {
        ParameterStore store;
        GruSpec gru{"g", 3, 4};
        gru.register_params(store, rng);
        Matrix x = rand_matrix(rng, 2, 3), h = rand_matrix(rng, 2, 4);
        Matrix u = rand_matrix(rng, 1, 2), v = rand_matrix(rng, 4, 1);
        LossBuilder build = [&](Tape& t, const std::vector<VarId>& leaves) {
            VarId y = gru.step(t, store, leaves, t.constant(x), t.constant(h));
            return t.matmul(t.matmul(t.constant(u), y), t.constant(v));
        };
        CHECK(fd_max_rel_error(store, build) < 1e-4);
    }

    SUBCASE("attention with projections") {
        ParameterStore store;
        store.add_weight("wq", 3, 4, rng);
        store.add_weight("wk", 3, 4, rng);
        store.add_weight("wv", 3, 5, rng);
        Matrix q0 = rand_matrix(rng, 2, 3), kv0 = rand_matrix(rng, 6, 3);
        Matrix u = rand_matrix(rng, 1, 2), v = rand_matrix(rng, 5, 1);
        LossBuilder build = [&](Tape& t, const std::vector<VarId>& leaves) {
            VarId q = t.matmul(t.constant(q0), leaves[0]);
            VarId k = t.matmul(t.constant(kv0), leaves[1]);
            VarId vv = t.matmul(t.constant(kv0), leaves[2]);
            auto a = scaled_dot_attention(t, q, k, vv);
            return t.matmul(t.matmul(t.constant(u), a.output), t.constant(v));
        };
        CHECK(fd_max_rel_error(store, build) < 1e-4);
    }
}
