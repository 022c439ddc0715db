#include "nsm/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "nsm/io.hpp"

namespace nsm {

namespace {
constexpr char kMagic[8] = {'N', 'S', 'M', '4', 'D', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;
}  // namespace

int ParameterStore::add_weight(const std::string& name, int rows, int cols, Rng& rng, double gain) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("parameter " + name + ": bad shape");
    if (index_of(name) >= 0) throw std::invalid_argument("duplicate parameter " + name);
    double bound = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
    Param p{name, Matrix(rows, cols), Matrix(rows, cols), Matrix(rows, cols)};
    for (double& v : p.value.data) v = rng.uniform(-bound, bound);
    params_.push_back(std::move(p));
    return count() - 1;
}

int ParameterStore::add_zeros(const std::string& name, int rows, int cols) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("parameter " + name + ": bad shape");
    if (index_of(name) >= 0) throw std::invalid_argument("duplicate parameter " + name);
    params_.push_back({name, Matrix(rows, cols), Matrix(rows, cols), Matrix(rows, cols)});
    return count() - 1;
}

int ParameterStore::index_of(const std::string& name) const {
    for (size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return static_cast<int>(i);
    return -1;
}

size_t ParameterStore::scalar_count() const {
    size_t n = 0;
    for (const Param& p : params_) n += p.value.data.size();
    return n;
}

void ParameterStore::zero_grads() {
    for (Param& p : params_)
        std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

void ParameterStore::save(const std::string& path, uint64_t seed) const {
    std::ostringstream os(std::ios::binary);
    io::write_bytes(os, kMagic, sizeof kMagic);
    io::write_u32(os, kVersion);
    io::write_u64(os, seed);
    io::write_u32(os, static_cast<uint32_t>(params_.size()));
    for (const Param& p : params_) {
        io::write_string(os, p.name);
        io::write_u32(os, static_cast<uint32_t>(p.value.rows));
        io::write_u32(os, static_cast<uint32_t>(p.value.cols));
    }
    for (const Param& p : params_)
        for (double v : p.value.data) io::write_f64(os, v);
    io::atomic_write(path, os.str());
}

ParameterStore ParameterStore::load(const std::string& path, uint64_t* seed) {
    std::istringstream is(io::slurp(path), std::ios::binary);
    char magic[8];
    io::read_bytes(is, magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw io::FileError(path + ": not a checkpoint file");
    uint32_t version = io::read_u32(is);
    if (version != kVersion)
        throw io::FileError(path + ": unsupported checkpoint version " + std::to_string(version));
    uint64_t stored_seed = io::read_u64(is);
    if (seed) *seed = stored_seed;
    uint32_t count = io::read_u32(is);
    ParameterStore store;
    std::unordered_set<std::string> seen;
    for (uint32_t i = 0; i < count; ++i) {
        std::string name = io::read_string(is);
        if (!seen.insert(name).second)
            throw io::FileError(path + ": duplicate parameter " + name);
        uint32_t rows = io::read_u32(is);
        uint32_t cols = io::read_u32(is);
        if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20))
            throw io::FileError(path + ": bad shape for " + name);
        store.add_zeros(name, static_cast<int>(rows), static_cast<int>(cols));
    }
    for (Param& p : store.params_)
        for (double& v : p.value.data) v = io::read_f64(is);
    if (is.peek() != std::istringstream::traits_type::eof())
        throw io::FileError(path + ": trailing bytes");
    for (const Param& p : store.params_) check_finite(p.value, ("checkpoint " + p.name).c_str());
    return store;
}

std::vector<VarId> leaf_params(Tape& tape, const ParameterStore& store) {
    std::vector<VarId> ids;
    ids.reserve(static_cast<size_t>(store.count()));
    for (int i = 0; i < store.count(); ++i) ids.push_back(tape.leaf(store.at(i).value, true));
    return ids;
}

void harvest_grads(const Tape& tape, const std::vector<VarId>& leaves, ParameterStore& store) {
    if (static_cast<int>(leaves.size()) != store.count())
        throw std::invalid_argument("harvest_grads: leaf list does not match store");
    for (int i = 0; i < store.count(); ++i) {
        if (!tape.has_grad(leaves[static_cast<size_t>(i)])) continue;  // unused by this loss
        Matrix& g = store.at(i).grad;
        const Matrix& tg = tape.grad(leaves[static_cast<size_t>(i)]);
        if (!g.same_shape(tg)) throw std::invalid_argument("harvest_grads: shape drift");
        for (size_t j = 0; j < g.data.size(); ++j) g.data[j] += tg.data[j];
    }
}

void MlpSpec::register_params(ParameterStore& store, Rng& rng) const {
    if (dims.size() < 2) throw std::invalid_argument("mlp " + prefix + ": needs >= 2 dims");
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        double gain = (l + 2 < dims.size()) ? std::sqrt(2.0) : 1.0;  // relu-fed layers
        store.add_weight(prefix + ".w" + std::to_string(l), dims[l], dims[l + 1], rng, gain);
        store.add_zeros(prefix + ".b" + std::to_string(l), 1, dims[l + 1]);
    }
}

VarId MlpSpec::forward(Tape& tape, const ParameterStore& store, const std::vector<VarId>& leaves,
                       VarId x) const {
    VarId h = x;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        int wi = store.index_of(prefix + ".w" + std::to_string(l));
        int bi = store.index_of(prefix + ".b" + std::to_string(l));
        if (wi < 0 || bi < 0) throw std::invalid_argument("mlp " + prefix + ": unregistered layer");
        h = tape.add_rowvec(tape.matmul(h, leaves[static_cast<size_t>(wi)]),
                            leaves[static_cast<size_t>(bi)]);
        if (l + 2 < dims.size()) h = tape.relu(h);
    }
    return h;
}

void GruSpec::register_params(ParameterStore& store, Rng& rng) const {
    if (input <= 0 || hidden <= 0) throw std::invalid_argument("gru " + prefix + ": bad dims");
    for (const char* gate : {"z", "r", "h"}) {
        store.add_weight(prefix + ".w" + gate, input, hidden, rng);
        store.add_weight(prefix + ".u" + gate, hidden, hidden, rng);
        store.add_zeros(prefix + ".b" + gate, 1, hidden);
    }
}

VarId GruSpec::step(Tape& tape, const ParameterStore& store, const std::vector<VarId>& leaves,
                    VarId x, VarId h) const {
    auto lv = [&](const std::string& n) {
        int i = store.index_of(prefix + n);
        if (i < 0) throw std::invalid_argument("gru " + prefix + ": unregistered");
        return leaves[static_cast<size_t>(i)];
    };
    auto gate = [&](const char* g, VarId hh) {
        return tape.add_rowvec(
            tape.add(tape.matmul(x, lv(std::string(".w") + g)),
                     tape.matmul(hh, lv(std::string(".u") + g))),
            lv(std::string(".b") + g));
    };
    VarId z = tape.sigmoid(gate("z", h));
    VarId r = tape.sigmoid(gate("r", h));
    VarId rh = tape.hadamard(r, h);
    VarId cand = tape.tanh_(tape.add_rowvec(
        tape.add(tape.matmul(x, lv(".wh")), tape.matmul(rh, lv(".uh"))), lv(".bh")));
    const Matrix& zv = tape.val(z);
    Matrix ones(zv.rows, zv.cols);
    std::fill(ones.data.begin(), ones.data.end(), 1.0);
    VarId one = tape.constant(std::move(ones));
    return tape.add(tape.hadamard(tape.sub(one, z), h), tape.hadamard(z, cand));
}

Attention scaled_dot_attention(Tape& tape, VarId q, VarId k, VarId v) {
    const Matrix& Q = tape.val(q);
    const Matrix& K = tape.val(k);
    const Matrix& V = tape.val(v);
    if (Q.cols != K.cols) throw std::invalid_argument("attention: q/k width mismatch");
    if (K.rows != V.rows) throw std::invalid_argument("attention: k/v row mismatch");
    VarId scores = tape.scale(tape.matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(Q.cols)));
    Attention a;
    a.weights = tape.softmax_rows(scores);
    a.output = tape.matmul(a.weights, v);
    return a;
}

double fd_max_rel_error(ParameterStore& store, const LossBuilder& build, double eps,
                        std::string* worst) {
    Matrix analytic_loss;
    std::vector<Matrix> analytic;
    {
        Tape tape(true);
        std::vector<VarId> leaves = leaf_params(tape, store);
        VarId loss = build(tape, leaves);
        tape.backward(loss);
        analytic.reserve(leaves.size());
        for (VarId id : leaves)
            analytic.push_back(tape.has_grad(id)
                                   ? tape.grad(id)
                                   : Matrix(tape.val(id).rows, tape.val(id).cols));
    }
    auto eval_loss = [&]() {
        Tape tape(false);
        std::vector<VarId> leaves = leaf_params(tape, store);
        return tape.val(build(tape, leaves)).at(0, 0);
    };
    double max_rel = 0.0;
    for (int pi = 0; pi < store.count(); ++pi) {
        Matrix& value = store.at(pi).value;
        for (size_t j = 0; j < value.data.size(); ++j) {
            double saved = value.data[j];
            value.data[j] = saved + eps;
            double lp = eval_loss();
            value.data[j] = saved - eps;
            double lm = eval_loss();
            value.data[j] = saved;
            double fd = (lp - lm) / (2.0 * eps);
            double an = analytic[static_cast<size_t>(pi)].data[j];
            double rel = std::fabs(fd - an) /
                         std::max({std::fabs(fd), std::fabs(an), 1e-8});
            if (rel > max_rel) {
                max_rel = rel;
                if (worst)
                    *worst = store.at(pi).name + "[" + std::to_string(j) + "] analytic=" +
                             std::to_string(an) + " fd=" + std::to_string(fd);
            }
        }
    }
    return max_rel;
}

}  // namespace nsm
