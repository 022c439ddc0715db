#include "nsm/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace nsm {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Tape::Node& Tape::node_at(VarId id) {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
        throw std::invalid_argument("tape: variable " + std::to_string(id) + " not on this tape");
    return nodes_[static_cast<size_t>(id)];
}

const Tape::Node& Tape::node_at(VarId id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
        throw std::invalid_argument("tape: variable " + std::to_string(id) + " not on this tape");
    return nodes_[static_cast<size_t>(id)];
}

VarId Tape::push(Matrix value, bool requires_grad, std::function<void(Tape&)> back,
                 const char* what) {
    check_finite(value, what);
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (recording_ && requires_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<VarId>(nodes_.size() - 1);
}

VarId Tape::leaf(Matrix value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr, "leaf");
}

const Matrix& Tape::grad(VarId id) const {
    const Node& n = node_at(id);
    if (!n.has_adjoint)
        throw std::invalid_argument("tape: no gradient recorded for variable " + std::to_string(id));
    return n.adjoint;
}

Matrix& Tape::adjoint(VarId id) {
    Node& n = node_at(id);
    if (!n.has_adjoint) {
        n.adjoint = Matrix(n.value.rows, n.value.cols);
        n.has_adjoint = true;
    }
    return n.adjoint;
}

void Tape::accumulate(VarId id, const Matrix& delta) {
    Node& n = node_at(id);
    if (!n.requires_grad) return;
    if (!n.value.same_shape(delta))
        throw std::invalid_argument("tape: adjoint shape mismatch");
    Matrix& g = adjoint(id);
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += delta.data[i];
}

void Tape::backward(VarId loss) {
    Node& out = node_at(loss);
    if (out.value.rows != 1 || out.value.cols != 1)
        throw std::invalid_argument("tape: backward target must be a 1x1 scalar");
    if (!recording_)
        throw std::invalid_argument("tape: backward called on a non-recording tape");
    adjoint(loss).at(0, 0) += 1.0;
    for (VarId id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.has_adjoint || !n.back) continue;
        check_finite(n.adjoint, "backward adjoint");
        n.back(*this);
    }
}

VarId Tape::matmul(VarId a, VarId b) {
    Matrix C = nsm::matmul(val(a), val(b));
    bool rg = node_at(a).requires_grad || node_at(b).requires_grad;
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), rg,
                [a, b, out](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    if (t.node_at(a).requires_grad) t.accumulate(a, nsm::matmul_nt(g, t.val(b)));
                    if (t.node_at(b).requires_grad) t.accumulate(b, nsm::matmul_tn(t.val(a), g));
                },
                "matmul");
}

VarId Tape::matmul_nt(VarId a, VarId b) {
    Matrix C = nsm::matmul_nt(val(a), val(b));
    bool rg = node_at(a).requires_grad || node_at(b).requires_grad;
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), rg,
                [a, b, out](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    // C = A·Bᵀ: dA = g·B, dB = gᵀ·A
                    if (t.node_at(a).requires_grad) t.accumulate(a, nsm::matmul(g, t.val(b)));
                    if (t.node_at(b).requires_grad) t.accumulate(b, nsm::matmul_tn(g, t.val(a)));
                },
                "matmul_nt");
}

VarId Tape::add(VarId a, VarId b) {
    const Matrix& A = val(a);
    const Matrix& B = val(b);
    require(A.same_shape(B), "tape add: shape mismatch");
    Matrix C(A.rows, A.cols);
    for (size_t i = 0; i < C.data.size(); ++i) C.data[i] = A.data[i] + B.data[i];
    bool rg = node_at(a).requires_grad || node_at(b).requires_grad;
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), rg,
                [a, b, out](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    t.accumulate(a, g);
                    t.accumulate(b, g);
                },
                "add");
}

VarId Tape::sub(VarId a, VarId b) {
    const Matrix& A = val(a);
    const Matrix& B = val(b);
    require(A.same_shape(B), "tape sub: shape mismatch");
    Matrix C(A.rows, A.cols);
    for (size_t i = 0; i < C.data.size(); ++i) C.data[i] = A.data[i] - B.data[i];
    bool rg = node_at(a).requires_grad || node_at(b).requires_grad;
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), rg,
                [a, b, out](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    t.accumulate(a, g);
                    if (t.node_at(b).requires_grad) {
                        Matrix neg(g.rows, g.cols);
                        for (size_t i = 0; i < neg.data.size(); ++i) neg.data[i] = -g.data[i];
                        t.accumulate(b, neg);
                    }
                },
                "sub");
}

VarId Tape::add_rowvec(VarId a, VarId bias) {
    const Matrix& A = val(a);
    const Matrix& B = val(bias);
    require(B.rows == 1 && B.cols == A.cols, "tape add_rowvec: bias must be 1 x cols(a)");
    Matrix C(A.rows, A.cols);
    for (int r = 0; r < A.rows; ++r)
        for (int c = 0; c < A.cols; ++c) C.at(r, c) = A.at(r, c) + B.at(0, c);
    bool rg = node_at(a).requires_grad || node_at(bias).requires_grad;
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), rg,
                [a, bias, out](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    t.accumulate(a, g);
                    if (t.node_at(bias).requires_grad) {
                        Matrix db(1, g.cols);
                        for (int r = 0; r < g.rows; ++r)
                            for (int c = 0; c < g.cols; ++c) db.at(0, c) += g.at(r, c);
                        t.accumulate(bias, db);
                    }
                },
                "add_rowvec");
}

VarId Tape::hadamard(VarId a, VarId b) {
    const Matrix& A = val(a);
    const Matrix& B = val(b);
    require(A.same_shape(B), "tape hadamard: shape mismatch");
    Matrix C(A.rows, A.cols);
    for (size_t i = 0; i < C.data.size(); ++i) C.data[i] = A.data[i] * B.data[i];
    bool rg = node_at(a).requires_grad || node_at(b).requires_grad;
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), rg,
                [a, b, out](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    if (t.node_at(a).requires_grad) {
                        Matrix da(g.rows, g.cols);
                        const Matrix& B2 = t.val(b);
                        for (size_t i = 0; i < da.data.size(); ++i) da.data[i] = g.data[i] * B2.data[i];
                        t.accumulate(a, da);
                    }
                    if (t.node_at(b).requires_grad) {
                        Matrix db(g.rows, g.cols);
                        const Matrix& A2 = t.val(a);
                        for (size_t i = 0; i < db.data.size(); ++i) db.data[i] = g.data[i] * A2.data[i];
                        t.accumulate(b, db);
                    }
                },
                "hadamard");
}

VarId Tape::scale(VarId a, double c) {
    require(std::isfinite(c), "tape scale: factor must be finite");
    const Matrix& A = val(a);
    Matrix C(A.rows, A.cols);
    for (size_t i = 0; i < C.data.size(); ++i) C.data[i] = A.data[i] * c;
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), node_at(a).requires_grad,
                [a, c, out](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    Matrix da(g.rows, g.cols);
                    for (size_t i = 0; i < da.data.size(); ++i) da.data[i] = g.data[i] * c;
                    t.accumulate(a, da);
                },
                "scale");
}

VarId Tape::relu(VarId a) {
    const Matrix& A = val(a);
    Matrix C(A.rows, A.cols);
    for (size_t i = 0; i < C.data.size(); ++i) C.data[i] = A.data[i] > 0.0 ? A.data[i] : 0.0;
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), node_at(a).requires_grad,
                [a, out](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    const Matrix& A2 = t.val(a);
                    Matrix da(g.rows, g.cols);
                    for (size_t i = 0; i < da.data.size(); ++i)
                        da.data[i] = A2.data[i] > 0.0 ? g.data[i] : 0.0;
                    t.accumulate(a, da);
                },
                "relu");
}

VarId Tape::sigmoid(VarId a) {
    const Matrix& A = val(a);
    Matrix C(A.rows, A.cols);
    for (size_t i = 0; i < C.data.size(); ++i) {
        double x = A.data[i];
        // split on sign for numerical stability
        C.data[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                             : std::exp(x) / (1.0 + std::exp(x));
    }
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), node_at(a).requires_grad,
                [a, out](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    const Matrix& Y = t.nodes_[static_cast<size_t>(out)].value;
                    Matrix da(g.rows, g.cols);
                    for (size_t i = 0; i < da.data.size(); ++i)
                        da.data[i] = g.data[i] * Y.data[i] * (1.0 - Y.data[i]);
                    t.accumulate(a, da);
                },
                "sigmoid");
}

VarId Tape::tanh_(VarId a) {
    const Matrix& A = val(a);
    Matrix C(A.rows, A.cols);
    for (size_t i = 0; i < C.data.size(); ++i) C.data[i] = std::tanh(A.data[i]);
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), node_at(a).requires_grad,
                [a, out](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    const Matrix& Y = t.nodes_[static_cast<size_t>(out)].value;
                    Matrix da(g.rows, g.cols);
                    for (size_t i = 0; i < da.data.size(); ++i)
                        da.data[i] = g.data[i] * (1.0 - Y.data[i] * Y.data[i]);
                    t.accumulate(a, da);
                },
                "tanh");
}

VarId Tape::softmax_rows(VarId a) {
    const Matrix& A = val(a);
    require(A.cols > 0, "tape softmax_rows: empty rows");
    Matrix C(A.rows, A.cols);
    for (int r = 0; r < A.rows; ++r) {
        double mx = A.at(r, 0);
        for (int c = 1; c < A.cols; ++c) mx = std::max(mx, A.at(r, c));
        double sum = 0.0;
        for (int c = 0; c < A.cols; ++c) {
            double e = std::exp(A.at(r, c) - mx);
            C.at(r, c) = e;
            sum += e;
        }
        if (!(sum > 0.0) || !std::isfinite(sum))
            throw NumericError("softmax_rows: degenerate row " + std::to_string(r));
        for (int c = 0; c < A.cols; ++c) C.at(r, c) /= sum;
    }
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), node_at(a).requires_grad,
                [a, out](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    const Matrix& Y = t.nodes_[static_cast<size_t>(out)].value;
                    Matrix da(g.rows, g.cols);
                    for (int r = 0; r < g.rows; ++r) {
                        double dot = 0.0;
                        for (int c = 0; c < g.cols; ++c) dot += g.at(r, c) * Y.at(r, c);
                        for (int c = 0; c < g.cols; ++c)
                            da.at(r, c) = Y.at(r, c) * (g.at(r, c) - dot);
                    }
                    t.accumulate(a, da);
                },
                "softmax_rows");
}

VarId Tape::concat_cols(VarId a, VarId b) {
    const Matrix& A = val(a);
    const Matrix& B = val(b);
    require(A.rows == B.rows, "tape concat_cols: row mismatch");
    Matrix C(A.rows, A.cols + B.cols);
    for (int r = 0; r < A.rows; ++r) {
        for (int c = 0; c < A.cols; ++c) C.at(r, c) = A.at(r, c);
        for (int c = 0; c < B.cols; ++c) C.at(r, A.cols + c) = B.at(r, c);
    }
    bool rg = node_at(a).requires_grad || node_at(b).requires_grad;
    VarId out = static_cast<VarId>(nodes_.size());
    int acols = A.cols;
    return push(std::move(C), rg,
                [a, b, out, acols](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    if (t.node_at(a).requires_grad) {
                        Matrix da(g.rows, acols);
                        for (int r = 0; r < g.rows; ++r)
                            for (int c = 0; c < acols; ++c) da.at(r, c) = g.at(r, c);
                        t.accumulate(a, da);
                    }
                    if (t.node_at(b).requires_grad) {
                        Matrix db(g.rows, g.cols - acols);
                        for (int r = 0; r < g.rows; ++r)
                            for (int c = 0; c < db.cols; ++c) db.at(r, c) = g.at(r, acols + c);
                        t.accumulate(b, db);
                    }
                },
                "concat_cols");
}

VarId Tape::concat_rows(VarId a, VarId b) {
    const Matrix& A = val(a);
    const Matrix& B = val(b);
    require(A.cols == B.cols, "tape concat_rows: column mismatch");
    Matrix C(A.rows + B.rows, A.cols);
    for (int r = 0; r < A.rows; ++r)
        for (int c = 0; c < A.cols; ++c) C.at(r, c) = A.at(r, c);
    for (int r = 0; r < B.rows; ++r)
        for (int c = 0; c < B.cols; ++c) C.at(A.rows + r, c) = B.at(r, c);
    bool rg = node_at(a).requires_grad || node_at(b).requires_grad;
    VarId out = static_cast<VarId>(nodes_.size());
    int arows = A.rows;
    return push(std::move(C), rg,
                [a, b, out, arows](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    if (t.node_at(a).requires_grad) {
                        Matrix da(arows, g.cols);
                        for (int r = 0; r < arows; ++r)
                            for (int c = 0; c < g.cols; ++c) da.at(r, c) = g.at(r, c);
                        t.accumulate(a, da);
                    }
                    if (t.node_at(b).requires_grad) {
                        Matrix db(g.rows - arows, g.cols);
                        for (int r = 0; r < db.rows; ++r)
                            for (int c = 0; c < g.cols; ++c) db.at(r, c) = g.at(arows + r, c);
                        t.accumulate(b, db);
                    }
                },
                "concat_rows");
}

VarId Tape::gather_rows(VarId a, std::vector<int> indices) {
    const Matrix& A = val(a);
    for (int idx : indices)
        require(idx >= 0 && idx < A.rows, "tape gather_rows: index out of range");
    Matrix C(static_cast<int>(indices.size()), A.cols);
    for (size_t r = 0; r < indices.size(); ++r)
        for (int c = 0; c < A.cols; ++c) C.at(static_cast<int>(r), c) = A.at(indices[r], c);
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), node_at(a).requires_grad,
                [a, out, idx = std::move(indices)](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    const Matrix& A2 = t.val(a);
                    Matrix da(A2.rows, A2.cols);
                    for (size_t r = 0; r < idx.size(); ++r)
                        for (int c = 0; c < g.cols; ++c)
                            da.at(idx[r], c) += g.at(static_cast<int>(r), c);
                    t.accumulate(a, da);
                },
                "gather_rows");
}

VarId Tape::interp_rows(VarId a, std::vector<int> indices, std::vector<double> weights, int k) {
    const Matrix& A = val(a);
    require(k > 0, "tape interp_rows: k must be positive");
    require(indices.size() == weights.size(), "tape interp_rows: indices/weights size mismatch");
    require(indices.size() % static_cast<size_t>(k) == 0,
            "tape interp_rows: list size must be a multiple of k");
    for (int idx : indices)
        require(idx >= 0 && idx < A.rows, "tape interp_rows: index out of range");
    for (double w : weights)
        require(std::isfinite(w), "tape interp_rows: weight must be finite");
    int out_rows = static_cast<int>(indices.size()) / k;
    Matrix C(out_rows, A.cols);
    for (int r = 0; r < out_rows; ++r)
        for (int j = 0; j < k; ++j) {
            int src = indices[static_cast<size_t>(r) * k + j];
            double w = weights[static_cast<size_t>(r) * k + j];
            for (int c = 0; c < A.cols; ++c) C.at(r, c) += w * A.at(src, c);
        }
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), node_at(a).requires_grad,
                [a, out, k, idx = std::move(indices), w = std::move(weights)](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    const Matrix& A2 = t.val(a);
                    Matrix da(A2.rows, A2.cols);
                    for (int r = 0; r < g.rows; ++r)
                        for (int j = 0; j < k; ++j) {
                            int src = idx[static_cast<size_t>(r) * k + j];
                            double ww = w[static_cast<size_t>(r) * k + j];
                            for (int c = 0; c < g.cols; ++c)
                                da.at(src, c) += ww * g.at(r, c);
                        }
                    t.accumulate(a, da);
                },
                "interp_rows");
}

VarId Tape::segment_max_rows(VarId a, std::vector<int> offsets) {
    const Matrix& A = val(a);
    require(offsets.size() >= 2, "tape segment_max_rows: need at least one segment");
    require(offsets.front() == 0 && offsets.back() == A.rows,
            "tape segment_max_rows: offsets must span all rows");
    int nseg = static_cast<int>(offsets.size()) - 1;
    for (int s = 0; s < nseg; ++s)
        require(offsets[s] < offsets[s + 1], "tape segment_max_rows: empty segment");
    Matrix C(nseg, A.cols);
    std::vector<int> argmax(static_cast<size_t>(nseg) * A.cols);
    for (int s = 0; s < nseg; ++s)
        for (int c = 0; c < A.cols; ++c) {
            int best = offsets[s];
            double bv = A.at(best, c);
            for (int r = offsets[s] + 1; r < offsets[s + 1]; ++r)
                if (A.at(r, c) > bv) {
                    bv = A.at(r, c);
                    best = r;
                }
            C.at(s, c) = bv;
            argmax[static_cast<size_t>(s) * A.cols + c] = best;
        }
    VarId out = static_cast<VarId>(nodes_.size());
    return push(std::move(C), node_at(a).requires_grad,
                [a, out, am = std::move(argmax)](Tape& t) {
                    const Matrix& g = t.nodes_[static_cast<size_t>(out)].adjoint;
                    const Matrix& A2 = t.val(a);
                    Matrix da(A2.rows, A2.cols);
                    for (int s = 0; s < g.rows; ++s)
                        for (int c = 0; c < g.cols; ++c)
                            da.at(am[static_cast<size_t>(s) * g.cols + c], c) += g.at(s, c);
                    t.accumulate(a, da);
                },
                "segment_max_rows");
}

VarId Tape::softmax_xent_mean(VarId logits, std::vector<int> targets) {
    const Matrix& Z = val(logits);
    require(static_cast<int>(targets.size()) == Z.rows,
            "tape softmax_xent_mean: one target per row required");
    require(Z.rows > 0 && Z.cols > 0, "tape softmax_xent_mean: empty logits");
    for (int tgt : targets)
        require(tgt >= 0 && tgt < Z.cols, "tape softmax_xent_mean: target out of range");
    Matrix probs(Z.rows, Z.cols);
    double total = 0.0;
    for (int r = 0; r < Z.rows; ++r) {
        double mx = Z.at(r, 0);
        for (int c = 1; c < Z.cols; ++c) mx = std::max(mx, Z.at(r, c));
        double sum = 0.0;
        for (int c = 0; c < Z.cols; ++c) {
            double e = std::exp(Z.at(r, c) - mx);
            probs.at(r, c) = e;
            sum += e;
        }
        if (!(sum > 0.0) || !std::isfinite(sum))
            throw NumericError("softmax_xent_mean: degenerate row " + std::to_string(r));
        for (int c = 0; c < Z.cols; ++c) probs.at(r, c) /= sum;
        total += (mx + std::log(sum)) - Z.at(r, targets[static_cast<size_t>(r)]);
    }
    Matrix L(1, 1);
    L.at(0, 0) = total / Z.rows;
    VarId out = static_cast<VarId>(nodes_.size());
    int rows = Z.rows;
    return push(std::move(L), node_at(logits).requires_grad,
                [logits, out, rows, p = std::move(probs), tg = std::move(targets)](Tape& t) {
                    double g = t.nodes_[static_cast<size_t>(out)].adjoint.at(0, 0);
                    Matrix dz(p.rows, p.cols);
                    for (int r = 0; r < p.rows; ++r)
                        for (int c = 0; c < p.cols; ++c) {
                            double onehot = (c == tg[static_cast<size_t>(r)]) ? 1.0 : 0.0;
                            dz.at(r, c) = (p.at(r, c) - onehot) * g / rows;
                        }
                    t.accumulate(logits, dz);
                },
                "softmax_xent_mean");
}

}  // namespace nsm
