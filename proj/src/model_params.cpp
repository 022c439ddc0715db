#include "nsm/model_params.hpp"

#include <stdexcept>

namespace nsm {

void ModelConfig::validate() const {
    auto pos = [](int v, const char* what) {
        if (v < 1) throw std::invalid_argument(std::string("config: ") + what + " must be >= 1");
    };
    pos(r_s, "r_s");
    pos(n_tokens, "n_tokens");
    pos(k_samples, "k_samples");
    pos(d_g, "d_g");
    pos(d_m, "d_m");
    pos(d_k, "d_k");
    pos(fused_dim, "fused_dim");
    pos(sa_hidden, "sa_hidden");
    pos(head_hidden, "head_hidden");
    pos(action_classes, "action_classes");
    pos(semantic_classes, "semantic_classes");
    pos(interp_k, "interp_k");
    pos(interp_power, "interp_power");
    if (!(radius > 0.0)) throw std::invalid_argument("config: radius must be positive");
}

namespace {

ModelParams make_specs(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.cfg = cfg;
    p.geo_sa = {"tok.geo_sa", {3, cfg.sa_hidden, cfg.d_g}};
    p.motion_embed = {"tok.motion_embed", {3, cfg.d_m}};
    p.gru = {"tok.gru", cfg.d_m, cfg.d_m};
    p.motion_sa = {"tok.motion_sa", {3 + cfg.d_m, cfg.sa_hidden, cfg.d_m}};
    p.update_sa = {"upd.sa", {3 + cfg.d_m, cfg.sa_hidden, cfg.d_m}};
    p.fusion = {"upd.fusion", {2 * cfg.d_m, cfg.d_m}};
    p.merge_sg = {"merge.sg", {3 + cfg.d_g, cfg.sa_hidden, cfg.d_g}};
    p.merge_sm = {"merge.sm", {3 + cfg.d_m, cfg.sa_hidden, cfg.d_m}};
    p.action_head = {"head.action", {cfg.fused_dim, cfg.head_hidden, cfg.action_classes}};
    // +3: each point's offset from its interpolation centroid rides along with
    // the upsampled feature, so points inside one anchor's footprint stay
    // distinguishable.
    p.sem_head = {"head.sem", {cfg.fused_dim + 3, cfg.head_hidden, cfg.semantic_classes}};
    return p;
}

void register_all(ModelParams& p, Rng& rng) {
    const ModelConfig& cfg = p.cfg;
    p.geo_sa.register_params(p.store, rng);
    p.motion_embed.register_params(p.store, rng);
    p.gru.register_params(p.store, rng);
    p.motion_sa.register_params(p.store, rng);
    p.update_sa.register_params(p.store, rng);
    p.fusion.register_params(p.store, rng);
    p.merge_sg.register_params(p.store, rng);
    p.merge_sm.register_params(p.store, rng);
    p.wq = p.store.add_weight("query.wq", cfg.d_g, cfg.d_k, rng);
    p.wkg = p.store.add_weight("query.wkg", cfg.d_g, cfg.d_k, rng);
    p.wvg = p.store.add_weight("query.wvg", cfg.d_g, cfg.fused_dim, rng);
    p.wkm = p.store.add_weight("query.wkm", cfg.d_m, cfg.d_k, rng);
    p.wvm = p.store.add_weight("query.wvm", cfg.d_m, cfg.fused_dim, rng);
    p.action_head.register_params(p.store, rng);
    p.sem_head.register_params(p.store, rng);
}

}  // namespace

ModelParams ModelParams::create(const ModelConfig& cfg, uint64_t seed) {
    ModelParams p = make_specs(cfg);
    Rng rng(mix_seed(seed, 0x70));
    register_all(p, rng);
    return p;
}

ModelParams ModelParams::from_checkpoint(const ModelConfig& cfg, const std::string& path) {
    ModelParams expect = ModelParams::create(cfg, 0);
    ParameterStore loaded = ParameterStore::load(path);
    if (loaded.count() != expect.store.count())
        throw std::invalid_argument("checkpoint: parameter count does not match configuration");
    for (int i = 0; i < loaded.count(); ++i) {
        const auto& a = loaded.at(i);
        const auto& b = expect.store.at(i);
        if (a.name != b.name || !a.value.same_shape(b.value))
            throw std::invalid_argument("checkpoint: parameter " + a.name +
                                        " does not match configuration (expected " + b.name + ")");
    }
    expect.store = std::move(loaded);
    return expect;
}

}  // namespace nsm
