#pragma once

#include <functional>
#include <vector>

#include "nsm/matrix.hpp"

namespace nsm {

using VarId = int;
constexpr VarId kInvalidVar = -1;

// Reverse-mode tape over Matrix values. Ops append nodes; backward replays
// recorded closures in reverse creation order and accumulates adjoints into
// every node that requires a gradient. With recording off, ops only compute
// values (used for evaluation and finite-difference probes).
//
// Every op validates shapes and rejects non-finite results.
class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    VarId leaf(Matrix value, bool requires_grad = true);
    VarId constant(Matrix value) { return leaf(std::move(value), false); }
    VarId zeros(int rows, int cols) { return leaf(Matrix(rows, cols), false); }

    const Matrix& val(VarId id) const { return node_at(id).value; }
    const Matrix& grad(VarId id) const;
    bool has_grad(VarId id) const { return node_at(id).has_adjoint; }  // false when backward never reached it
    bool recording() const { return recording_; }
    size_t size() const { return nodes_.size(); }

    VarId matmul(VarId a, VarId b);      // A·B
    VarId matmul_nt(VarId a, VarId b);   // A·Bᵀ
    VarId add(VarId a, VarId b);
    VarId sub(VarId a, VarId b);
    VarId add_rowvec(VarId a, VarId bias);  // bias is 1×C, broadcast over rows
    VarId hadamard(VarId a, VarId b);
    VarId scale(VarId a, double c);
    VarId relu(VarId a);
    VarId sigmoid(VarId a);
    VarId tanh_(VarId a);
    VarId softmax_rows(VarId a);
    VarId concat_cols(VarId a, VarId b);
    VarId concat_rows(VarId a, VarId b);
    VarId gather_rows(VarId a, std::vector<int> indices);
    // out[r] = Σ_j weights[r*k+j] · a[indices[r*k+j]]; weights are constants.
    VarId interp_rows(VarId a, std::vector<int> indices, std::vector<double> weights, int k);
    // Channelwise max over each row range [offsets[s], offsets[s+1]).
    VarId segment_max_rows(VarId a, std::vector<int> offsets);
    // Mean over rows of (logsumexp(row) − row[target]); 1×1 output.
    VarId softmax_xent_mean(VarId logits, std::vector<int> targets);

    // Gradient of `loss` (a 1×1 node of this tape) w.r.t. every recorded node.
    void backward(VarId loss);

private:
    struct Node {
        Matrix value;
        Matrix adjoint;
        bool requires_grad = false;
        bool has_adjoint = false;
        std::function<void(Tape&)> back;
    };

    Node& node_at(VarId id);
    const Node& node_at(VarId id) const;
    VarId push(Matrix value, bool requires_grad, std::function<void(Tape&)> back,
               const char* what);
    void accumulate(VarId id, const Matrix& delta);
    Matrix& adjoint(VarId id);

    std::vector<Node> nodes_;
    bool recording_;
};

}  // namespace nsm
