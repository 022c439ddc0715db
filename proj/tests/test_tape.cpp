#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "nsm/matrix.hpp"
#include "nsm/nn.hpp"
#include "nsm/rng.hpp"
#include "nsm/tape.hpp"
#include "util.hpp"

using namespace nsm;
using testutil::bit_equal;
using testutil::max_abs_diff;
using testutil::rand_matrix;

namespace {

// Scalarize y = u·op(x)·v with fixed random u, v and finite-difference the
// store-held x. Central differences; returns the max relative error.
double fd_for_op(const Matrix& x0, const std::function<VarId(Tape&, VarId)>& op,
                 uint64_t seed) {
    ParameterStore store;
    int xi = store.add_zeros("x", x0.rows, x0.cols);
    store.at(xi).value = x0;

    Matrix u, v;
    {
        Tape probe(false);
        VarId y = op(probe, probe.constant(x0));
        Rng rng(seed);
        u = rand_matrix(rng, 1, probe.val(y).rows);
        v = rand_matrix(rng, probe.val(y).cols, 1);
    }
    LossBuilder build = [&](Tape& t, const std::vector<VarId>& leaves) {
        VarId y = op(t, leaves[0]);
        return t.matmul(t.matmul(t.constant(u), y), t.constant(v));
    };
    return fd_max_rel_error(store, build);
}

std::vector<double> softmax_extended(const std::vector<double>& row) {
    long double mx = row[0];
    for (double v : row) mx = std::max<long double>(mx, v);
    long double sum = 0.0L;
    std::vector<long double> e(row.size());
    for (size_t i = 0; i < row.size(); ++i) {
        e[i] = std::exp(static_cast<long double>(row[i]) - mx);
        sum += e[i];
    }
    std::vector<double> out(row.size());
    for (size_t i = 0; i < row.size(); ++i) out[i] = static_cast<double>(e[i] / sum);
    return out;
}

}  // namespace

TEST_CASE("matrix products match brute-force loops and the serial reference") {
    Rng rng(101);
    Matrix A = rand_matrix(rng, 7, 5), B = rand_matrix(rng, 5, 9);

    Matrix C = matmul(A, B);
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 9; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 5; ++k) acc += A.at(r, k) * B.at(k, c);
            CHECK(C.at(r, c) == doctest::Approx(acc).epsilon(1e-14));
        }
    CHECK(bit_equal(C, ref::matmul(A, B)));

    Matrix Bt = rand_matrix(rng, 9, 5);
    CHECK(bit_equal(matmul_nt(A, Bt), ref::matmul_nt(A, Bt)));
    Matrix At = rand_matrix(rng, 5, 7);
    CHECK(bit_equal(matmul_tn(At, B), ref::matmul_tn(At, B)));

    // A·Bᵀ and Aᵀ·B agree with plain matmul of explicit transposes
    Matrix BtT(5, 9);
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 5; ++c) BtT.at(c, r) = Bt.at(r, c);
    CHECK(max_abs_diff(matmul_nt(A, Bt), matmul(A, BtT)) == 0.0);

    CHECK_THROWS_AS((void)matmul(A, A), std::invalid_argument);
}

TEST_CASE("tape rejects non-finite values at creation") {
    Tape t;
    Matrix bad(1, 2);
    bad.at(0, 1) = std::nan("");
    CHECK_THROWS_AS((void)t.leaf(bad, true), NumericError);
}

TEST_CASE("softmax rows sum to one, even under extreme logits") {
    Tape t(false);

    VarId a = t.constant(Matrix(1, 2));  // [0, 0]
    const Matrix& p = t.val(t.softmax_rows(a));
    CHECK(p.at(0, 0) == 0.5);
    CHECK(p.at(0, 1) == 0.5);

    Matrix big(1, 2);
    big.at(0, 0) = 1000.0;
    const Matrix& q = t.val(t.softmax_rows(t.constant(big)));
    CHECK(std::isfinite(q.at(0, 0)));
    CHECK(std::abs(q.at(0, 0) + q.at(0, 1) - 1.0) <= 1e-12);

    Rng rng(103);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix z = rand_matrix(rng, 4, 6, 30.0);
        const Matrix& s = t.val(t.softmax_rows(t.constant(z)));
        for (int r = 0; r < s.rows; ++r) {
            double sum = 0.0;
            std::vector<double> row(static_cast<size_t>(z.cols));
            for (int c = 0; c < s.cols; ++c) {
                sum += s.at(r, c);
                row[static_cast<size_t>(c)] = z.at(r, c);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            auto oracle = softmax_extended(row);
            for (int c = 0; c < s.cols; ++c)
                CHECK(std::abs(s.at(r, c) - oracle[static_cast<size_t>(c)]) < 1e-14);
        }
    }
}

TEST_CASE("linear loss has exact gradient x") {
    Rng rng(107);
    Matrix w0 = rand_matrix(rng, 1, 6), x0 = rand_matrix(rng, 6, 1);
    Tape t;
    VarId w = t.leaf(w0, true);
    VarId loss = t.matmul(w, t.constant(x0));
    t.backward(loss);
    const Matrix& g = t.grad(w);
    for (int c = 0; c < 6; ++c) CHECK(g.at(0, c) == x0.at(c, 0));
}

TEST_CASE("sum of squares has exact gradient 2p") {
    Rng rng(109);
    Matrix p0 = rand_matrix(rng, 1, 5);
    Tape t;
    VarId p = t.leaf(p0, true);
    VarId sq = t.hadamard(p, p);
    VarId loss = t.matmul(sq, t.constant(Matrix(5, 1, 1.0)));
    t.backward(loss);
    const Matrix& g = t.grad(p);
    for (int c = 0; c < 5; ++c) CHECK(g.at(0, c) == 2.0 * p0.at(0, c));
}

TEST_CASE("finite differences: quadratic is near-exact, smooth ops tight") {
    Rng rng(113);
    Matrix x = rand_matrix(rng, 3, 4);

    CHECK(fd_for_op(x, [](Tape& t, VarId v) { return t.hadamard(v, v); }, 1) < 1e-7);
    CHECK(fd_for_op(x, [](Tape& t, VarId v) { return t.scale(v, -2.5); }, 2) < 1e-7);
    CHECK(fd_for_op(x, [](Tape& t, VarId v) { return t.sigmoid(v); }, 3) < 1e-6);
    CHECK(fd_for_op(x, [](Tape& t, VarId v) { return t.tanh_(v); }, 4) < 1e-6);
    CHECK(fd_for_op(x, [](Tape& t, VarId v) { return t.softmax_rows(v); }, 5) < 1e-5);

    // matmul against a fixed right factor
    Matrix r = rand_matrix(rng, 4, 3);
    CHECK(fd_for_op(x, [r](Tape& t, VarId v) { return t.matmul(v, t.constant(r)); }, 6) < 1e-7);
    Matrix rn = rand_matrix(rng, 5, 4);  // a·bᵀ needs matching column counts
    CHECK(fd_for_op(x, [rn](Tape& t, VarId v) { return t.matmul_nt(t.constant(rn), v); }, 16) <
          1e-7);

    // add / sub / add_rowvec against constants
    Matrix c34 = rand_matrix(rng, 3, 4), c14 = rand_matrix(rng, 1, 4);
    CHECK(fd_for_op(x, [c34](Tape& t, VarId v) { return t.add(v, t.constant(c34)); }, 7) < 1e-7);
    CHECK(fd_for_op(x, [c34](Tape& t, VarId v) { return t.sub(t.constant(c34), v); }, 8) < 1e-7);
    CHECK(fd_for_op(x, [c14](Tape& t, VarId v) { return t.add_rowvec(v, t.constant(c14)); }, 9) <
          1e-7);
    CHECK(fd_for_op(c14, [x](Tape& t, VarId v) { return t.add_rowvec(t.constant(x), v); }, 10) <
          1e-7);

    // relu away from the kink
    Matrix far = rand_matrix(rng, 3, 4);
    for (double& v : far.data) v += (v >= 0.0 ? 0.2 : -0.2);
    CHECK(fd_for_op(far, [](Tape& t, VarId v) { return t.relu(v); }, 11) < 1e-6);

    // structural ops are linear: near-exact
    CHECK(fd_for_op(x, [c34](Tape& t, VarId v) { return t.concat_cols(v, t.constant(c34)); },
                    12) < 1e-7);
    CHECK(fd_for_op(x, [c34](Tape& t, VarId v) { return t.concat_rows(t.constant(c34), v); },
                    13) < 1e-7);
    CHECK(fd_for_op(x, [](Tape& t, VarId v) { return t.gather_rows(v, {2, 0, 0, 1}); }, 14) <
          1e-7);
    CHECK(fd_for_op(x,
                    [](Tape& t, VarId v) {
                        return t.interp_rows(v, {0, 1, 1, 2}, {0.25, 0.75, 0.5, 0.5}, 2);
                    },
                    15) < 1e-7);
}

TEST_CASE("relu zeroes negatives and keeps positives bitwise") {
    Tape t(false);
    Matrix x(2, 2);
    x.at(0, 0) = -3.5;
    x.at(0, 1) = 2.25;
    x.at(1, 0) = 0.0;
    x.at(1, 1) = -1e-300;
    const Matrix& y = t.val(t.relu(t.constant(x)));
    CHECK(y.at(0, 0) == 0.0);
    CHECK(y.at(0, 1) == 2.25);
    CHECK(y.at(1, 0) == 0.0);
    CHECK(y.at(1, 1) == 0.0);
}

TEST_CASE("gather and interp rows compute the expected rows") {
    Tape t(false);
    Matrix a(3, 2);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 2; ++c) a.at(r, c) = 10.0 * r + c;
    VarId v = t.constant(a);

    const Matrix& g = t.val(t.gather_rows(v, {2, 2, 0}));
    CHECK(g.rows == 3);
    CHECK(g.at(0, 0) == 20.0);
    CHECK(g.at(1, 1) == 21.0);
    CHECK(g.at(2, 0) == 0.0);

    const Matrix& w = t.val(t.interp_rows(v, {0, 1, 1, 2}, {0.25, 0.75, 0.5, 0.5}, 2));
    CHECK(w.rows == 2);
    CHECK(w.at(0, 0) == doctest::Approx(0.25 * 0.0 + 0.75 * 10.0).epsilon(1e-15));
    CHECK(w.at(1, 1) == doctest::Approx(0.5 * 11.0 + 0.5 * 21.0).epsilon(1e-15));

    CHECK_THROWS_AS((void)t.gather_rows(v, {3}), std::invalid_argument);
    CHECK_THROWS_AS((void)t.interp_rows(v, {0, 1}, {0.5}, 2), std::invalid_argument);
}

TEST_CASE("segment max picks channelwise maxima and routes gradients to them") {
    Matrix a(4, 2);
    a.at(0, 0) = 1.0; a.at(0, 1) = 9.0;
    a.at(1, 0) = 5.0; a.at(1, 1) = 2.0;
    a.at(2, 0) = -1.0; a.at(2, 1) = 0.5;
    a.at(3, 0) = -2.0; a.at(3, 1) = 4.0;

    Tape t;
    VarId v = t.leaf(a, true);
    VarId m = t.segment_max_rows(v, {0, 2, 4});
    const Matrix& mv = t.val(m);
    CHECK(mv.at(0, 0) == 5.0);
    CHECK(mv.at(0, 1) == 9.0);
    CHECK(mv.at(1, 0) == -1.0);
    CHECK(mv.at(1, 1) == 4.0);

    VarId loss = t.matmul(t.matmul(t.constant(Matrix(1, 2, 1.0)), m),
                          t.constant(Matrix(2, 1, 1.0)));
    t.backward(loss);
    const Matrix& g = t.grad(v);
    Matrix expect(4, 2);
    expect.at(1, 0) = 1.0;  // argmax of column 0, segment 0
    expect.at(0, 1) = 1.0;
    expect.at(2, 0) = 1.0;
    expect.at(3, 1) = 1.0;
    CHECK(bit_equal(g, expect));

    Tape t2(false);
    VarId v2 = t2.constant(a);
    CHECK_THROWS_AS((void)t2.segment_max_rows(v2, {0, 2, 2, 4}), std::invalid_argument);
    CHECK_THROWS_AS((void)t2.segment_max_rows(v2, {0, 3}), std::invalid_argument);
}

TEST_CASE("cross-entropy node matches an extended-precision oracle") {
    Rng rng(127);
    Matrix z = rand_matrix(rng, 6, 5, 8.0);
    std::vector<int> targets = {0, 4, 2, 2, 1, 3};

    Tape t(false);
    double got = t.val(t.softmax_xent_mean(t.constant(z), targets)).at(0, 0);

    long double total = 0.0L;
    for (int r = 0; r < z.rows; ++r) {
        long double mx = z.at(r, 0);
        for (int c = 0; c < z.cols; ++c) mx = std::max<long double>(mx, z.at(r, c));
        long double sum = 0.0L;
        for (int c = 0; c < z.cols; ++c) sum += std::exp(static_cast<long double>(z.at(r, c)) - mx);
        total += std::log(sum) + mx - z.at(r, targets[static_cast<size_t>(r)]);
    }
    CHECK(std::abs(got - static_cast<double>(total / z.rows)) < 1e-12);

    CHECK_THROWS_AS((void)t.softmax_xent_mean(t.constant(z), {0, 1}), std::invalid_argument);
    CHECK_THROWS_AS((void)t.softmax_xent_mean(t.constant(z), {0, 1, 2, 3, 4, 9}),
                    std::invalid_argument);
}

TEST_CASE("backward demands a recording tape and a scalar loss") {
    Matrix x(1, 1, 2.0);
    {
        Tape t(false);
        VarId v = t.leaf(x, true);
        CHECK_THROWS_AS(t.backward(v), std::invalid_argument);
    }
    {
        Tape t;
        VarId v = t.leaf(Matrix(2, 2, 1.0), true);
        CHECK_THROWS_AS(t.backward(v), std::invalid_argument);
    }
}

TEST_CASE("values are identical with recording on and off") {
    Rng rng(131);
    Matrix a = rand_matrix(rng, 4, 4), b = rand_matrix(rng, 4, 4);
    auto run = [&](bool rec) {
        Tape t(rec);
        VarId x = t.leaf(a, rec);
        VarId y = t.constant(b);
        VarId out = t.softmax_rows(t.add(t.matmul(x, y), t.relu(t.sub(x, y))));
        return t.val(out);
    };
    CHECK(bit_equal(run(true), run(false)));
}
