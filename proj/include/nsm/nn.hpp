#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nsm/matrix.hpp"
#include "nsm/rng.hpp"
#include "nsm/tape.hpp"

namespace nsm {

// Named, ordered collection of trainable matrices plus gradient and momentum
// slots. Order of registration is the serialization order, so two stores
// built by the same registration code are byte-compatible.
class ParameterStore {
public:
    struct Param {
        std::string name;
        Matrix value;
        Matrix grad;
        Matrix momentum;
    };

    // Glorot-uniform init in ±gain·√(6/(fan_in+fan_out)) for x·W (fan_in =
    // rows). Pass gain √2 for weights feeding a relu, 1 otherwise; anything
    // much smaller shrinks activations layer over layer until attention
    // logits flatten out and training stalls on a uniform-attention plateau.
    int add_weight(const std::string& name, int rows, int cols, Rng& rng, double gain = 1.0);
    int add_zeros(const std::string& name, int rows, int cols);

    int index_of(const std::string& name) const;  // -1 when absent
    Param& at(int idx) { return params_[static_cast<size_t>(idx)]; }
    const Param& at(int idx) const { return params_[static_cast<size_t>(idx)]; }
    int count() const { return static_cast<int>(params_.size()); }
    size_t scalar_count() const;

    void zero_grads();

    // Versioned binary checkpoint: header with the producing seed and one
    // (name, rows, cols) entry per parameter, then all values as flat
    // little-endian f64. Round-trips byte-exactly.
    void save(const std::string& path, uint64_t seed) const;
    static ParameterStore load(const std::string& path, uint64_t* seed = nullptr);

private:
    std::vector<Param> params_;
};

// Parameter leaves on a tape, indexed like the store.
std::vector<VarId> leaf_params(Tape& tape, const ParameterStore& store);

// After backward: add each parameter's tape gradient into store grad slots.
void harvest_grads(const Tape& tape, const std::vector<VarId>& leaves, ParameterStore& store);

// Fully connected stack; hidden layers ReLU, output layer identity.
struct MlpSpec {
    std::string prefix;
    std::vector<int> dims;  // [in, hidden..., out]

    void register_params(ParameterStore& store, Rng& rng) const;
    VarId forward(Tape& tape, const ParameterStore& store, const std::vector<VarId>& leaves,
                  VarId x) const;
    int in_dim() const { return dims.front(); }
    int out_dim() const { return dims.back(); }
};

// Gated recurrent cell over row-wise states:
//   z = σ(x·Wz + h·Uz + bz), r = σ(x·Wr + h·Ur + br)
//   h~ = tanh(x·Wh + (r⊙h)·Uh + bh), h' = (1−z)⊙h + z⊙h~
struct GruSpec {
    std::string prefix;
    int input = 0;
    int hidden = 0;

    void register_params(ParameterStore& store, Rng& rng) const;
    VarId step(Tape& tape, const ParameterStore& store, const std::vector<VarId>& leaves,
               VarId x, VarId h) const;
};

struct Attention {
    VarId weights;  // softmax(q·kᵀ/√d), rows sum to 1
    VarId output;   // weights·v
};

Attention scaled_dot_attention(Tape& tape, VarId q, VarId k, VarId v);

// Max relative error between analytic and central-difference gradients over
// every parameter scalar. `build` must construct the loss from fresh leaves.
using LossBuilder = std::function<VarId(Tape&, const std::vector<VarId>&)>;
double fd_max_rel_error(ParameterStore& store, const LossBuilder& build, double eps = 1e-5,
                        std::string* worst = nullptr);

}  // namespace nsm
