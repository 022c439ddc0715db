#include "nsm/cli.hpp"

#include <sys/resource.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "nsm/heads.hpp"
#include "nsm/io.hpp"

namespace nsm {

static std::string fmt_f(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.6f", v);
    return b;
}

std::string model_config_text(const ModelConfig& cfg, Task task, uint64_t seed) {
    std::ostringstream os;
    os << "# seed=" << seed << "\n";
    os << "format=nsm4d-model-v1\n";
    os << "task=" << task_name(task) << "\n";
    os << "r_s=" << cfg.r_s << "\n";
    os << "n_tokens=" << cfg.n_tokens << "\n";
    char radius[40];
    std::snprintf(radius, sizeof radius, "%.17g", cfg.radius);
    os << "radius=" << radius << "\n";
    os << "k_samples=" << cfg.k_samples << "\n";
    os << "d_g=" << cfg.d_g << "\n";
    os << "d_m=" << cfg.d_m << "\n";
    os << "d_k=" << cfg.d_k << "\n";
    os << "fused_dim=" << cfg.fused_dim << "\n";
    os << "sa_hidden=" << cfg.sa_hidden << "\n";
    os << "head_hidden=" << cfg.head_hidden << "\n";
    os << "action_classes=" << cfg.action_classes << "\n";
    os << "semantic_classes=" << cfg.semantic_classes << "\n";
    os << "interp_k=" << cfg.interp_k << "\n";
    os << "interp_power=" << cfg.interp_power << "\n";
    return os.str();
}

ModelSidecar parse_model_config(const std::string& text) {
    ModelSidecar sc;
    std::istringstream is(text);
    std::string line;
    bool have_format = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("# seed=", 0) == 0) {
            sc.seed = std::stoull(line.substr(7));
            continue;
        }
        if (line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("model config: malformed line '" + line + "'");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        try {
            if (key == "format") {
                if (value != "nsm4d-model-v1")
                    throw std::invalid_argument("model config: unknown format " + value);
                have_format = true;
            } else if (key == "task") {
                sc.task = task_from_name(value);
            } else if (key == "r_s") {
                sc.cfg.r_s = std::stoi(value);
            } else if (key == "n_tokens") {
                sc.cfg.n_tokens = std::stoi(value);
            } else if (key == "radius") {
                sc.cfg.radius = std::stod(value);
            } else if (key == "k_samples") {
                sc.cfg.k_samples = std::stoi(value);
            } else if (key == "d_g") {
                sc.cfg.d_g = std::stoi(value);
            } else if (key == "d_m") {
                sc.cfg.d_m = std::stoi(value);
            } else if (key == "d_k") {
                sc.cfg.d_k = std::stoi(value);
            } else if (key == "fused_dim") {
                sc.cfg.fused_dim = std::stoi(value);
            } else if (key == "sa_hidden") {
                sc.cfg.sa_hidden = std::stoi(value);
            } else if (key == "head_hidden") {
                sc.cfg.head_hidden = std::stoi(value);
            } else if (key == "action_classes") {
                sc.cfg.action_classes = std::stoi(value);
            } else if (key == "semantic_classes") {
                sc.cfg.semantic_classes = std::stoi(value);
            } else if (key == "interp_k") {
                sc.cfg.interp_k = std::stoi(value);
            } else if (key == "interp_power") {
                sc.cfg.interp_power = std::stoi(value);
            }  // unknown keys are informational
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("model config: bad value for " + key);
        }
    }
    if (!have_format) throw std::invalid_argument("model config: missing format line");
    sc.cfg.validate();
    return sc;
}

std::string sidecar_path(const std::string& checkpoint_path) {
    const std::string ext = ".ckpt";
    if (checkpoint_path.size() > ext.size() &&
        checkpoint_path.compare(checkpoint_path.size() - ext.size(), ext.size(), ext) == 0)
        return checkpoint_path.substr(0, checkpoint_path.size() - ext.size()) + ".cfg";
    return checkpoint_path + ".cfg";
}

static long peak_rss_kb() {
    rusage ru{};
    getrusage(RUSAGE_SELF, &ru);
    return ru.ru_maxrss;
}

static PointFlowField rest_flow(size_t n) {
    PointFlowField f;
    f.forward_flow.assign(n, Vec3{});
    f.current_displacement.assign(n, Vec3{});
    return f;
}

std::vector<BenchRow> run_stream_bench(const ModelParams& params, const LabeledSequence& master,
                                       const std::vector<int>& lengths) {
    std::vector<BenchRow> rows;
    for (int len : lengths) {
        if (len < 1 || len > static_cast<int>(master.frames.size()))
            throw std::invalid_argument("bench: length exceeds the master sequence");
        StepEngine engine(params, Variant::Full);
        auto start = std::chrono::steady_clock::now();
        for (int t = 0; t < len; ++t) {
            Tape tape(false);
            std::vector<VarId> leaves = leaf_params(tape, params.store);
            engine.attach(tape);
            StepResult res = engine.step(tape, leaves, master.frames[static_cast<size_t>(t)],
                                         master.flows[static_cast<size_t>(t)]);
            VarId logits = action_logits(tape, params, leaves, res.fused);
            (void)tape.val(logits);
            engine.detach(tape);
        }
        auto stop = std::chrono::steady_clock::now();
        double ms = std::chrono::duration<double, std::milli>(stop - start).count();
        rows.push_back({"stream", len, 0, ms / len, peak_rss_kb()});
    }
    return rows;
}

std::vector<BenchRow> run_sliding_bench(const ModelParams& params, const LabeledSequence& master,
                                        int frames, const std::vector<int>& windows) {
    frames = std::min(frames, static_cast<int>(master.frames.size()));
    if (frames < 1) throw std::invalid_argument("bench: no frames");
    std::vector<BenchRow> rows;
    for (int w : windows) {
        if (w < 1) throw std::invalid_argument("bench: window must be >= 1");
        auto start = std::chrono::steady_clock::now();
        for (int t = 0; t < frames; ++t) {
            StepEngine engine(params, Variant::Full);  // history rebuilt from raw frames
            int first = std::max(0, t - w + 1);
            for (int j = first; j <= t; ++j) {
                Tape tape(false);
                std::vector<VarId> leaves = leaf_params(tape, params.store);
                engine.attach(tape);
                const auto& frame = master.frames[static_cast<size_t>(j)];
                if (j == first) {
                    engine.step(tape, leaves, frame, rest_flow(frame.size()));
                } else {
                    engine.step(tape, leaves, frame, master.flows[static_cast<size_t>(j)]);
                }
                engine.detach(tape);
            }
        }
        auto stop = std::chrono::steady_clock::now();
        double ms = std::chrono::duration<double, std::milli>(stop - start).count();
        rows.push_back({"sliding", frames, w, ms / frames, peak_rss_kb()});
    }
    return rows;
}

namespace {

struct GenArgs {
    std::string out;
    DatasetSpec spec;
};

struct TrainArgs {
    std::string data, out;
    std::string flow = "oracle";
    std::string variant = "full";
    double sigma = 0.01;
    ModelConfig mc;
    TrainConfig tc;
};

struct EvalArgs {
    std::string data, model, out, dump;
    std::string split = "test";
    std::string flow = "oracle";
    std::string variant = "full";
    double sigma = 0.01;
    int max_frames = 0;
    int stitch = 1;
    uint64_t seed = 0;
    bool seed_given = false;
};

struct AblateArgs {
    std::string data, out;
    std::vector<std::string> variants = {"full", "geometry_only", "motion_only", "memoryless"};
    std::vector<int> tokens = {32, 64, 128};
    std::vector<std::string> flows = {"oracle", "noisy", "naive"};
    std::vector<int> lengths = {1, 2, 4};
    double sigma = 0.01;
    ModelConfig mc;
    TrainConfig tc;
};

struct BenchArgs {
    std::string out;
    std::string model;
    std::vector<int> lengths = {10, 100, 1000};
    std::vector<int> windows = {2, 4, 8};
    int win_frames = 20;
    int points = 256;
    uint64_t seed = 7;
    ModelConfig mc;
};

void add_model_flags(CLI::App* sub, ModelConfig& mc, bool with_tokens) {
    sub->add_option("--rs", mc.r_s, "anchors per frame")->capture_default_str();
    if (with_tokens)
        sub->add_option("--tokens", mc.n_tokens, "scene-model capacity")->capture_default_str();
    sub->add_option("--radius", mc.radius, "grouping radius")->capture_default_str();
    sub->add_option("--ksamples", mc.k_samples, "max neighbors per group")->capture_default_str();
    sub->add_option("--dg", mc.d_g, "geometry feature width")->capture_default_str();
    sub->add_option("--dm", mc.d_m, "motion feature width")->capture_default_str();
    sub->add_option("--dk", mc.d_k, "attention key width")->capture_default_str();
    sub->add_option("--fused", mc.fused_dim, "attention value width")->capture_default_str();
    sub->add_option("--sa-hidden", mc.sa_hidden, "set-abstraction hidden width")
        ->capture_default_str();
    sub->add_option("--head-hidden", mc.head_hidden, "classifier hidden width")
        ->capture_default_str();
    sub->add_option("--interp-k", mc.interp_k, "interpolation neighbors")->capture_default_str();
    sub->add_option("--interp-power", mc.interp_power, "inverse-distance power")
        ->capture_default_str();
}

void add_train_flags(CLI::App* sub, TrainConfig& tc) {
    sub->add_option("--epochs", tc.total_epochs, "training epochs")->capture_default_str();
    sub->add_option("--batch", tc.batch, "sequences per optimizer step")->capture_default_str();
    sub->add_option("--lr", tc.base_lr, "base learning rate")->capture_default_str();
    sub->add_option("--warmup", tc.warmup_epochs, "linear warm-up epochs")->capture_default_str();
    sub->add_option("--decay", tc.decay_epochs, "decay epochs")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--decay-factor", tc.decay_factor, "decay multiplier")->capture_default_str();
    sub->add_option("--momentum", tc.momentum, "SGD momentum")->capture_default_str();
    sub->add_option("--window", tc.unroll_window, "backprop window (0 = whole sequence)")
        ->capture_default_str();
    sub->add_option("--seed", tc.seed, "run seed")->capture_default_str();
}

// Class counts always follow the dataset, not flags.
void fit_classes(ModelConfig& mc, const DatasetSpec& spec) {
    mc.action_classes = 2 * spec.base_action_classes();  // reversed phases get their own ids
    mc.semantic_classes = spec.point_classes();
}

LabeledSequence stitched_test_sequence(const DatasetSpec& spec, int index, int mult) {
    LabeledSequence s = regenerate(spec, false, index);
    for (int m = 1; m < mult; m *= 2) s = reverse_stitch(s, 0);
    return s;
}

std::string metrics_csv(const MetricsReport& r, uint64_t seed) {
    std::string csv = "# seed=" + std::to_string(seed) + "\n";
    csv += "acc,edit,f1_10,f1_25,f1_50,miou\n";
    csv += fmt_f(r.acc) + "," + fmt_f(r.edit) + "," + fmt_f(r.f1_10) + "," + fmt_f(r.f1_25) +
           "," + fmt_f(r.f1_50) + "," + fmt_f(r.miou) + "\n";
    return csv;
}

void cmd_gen_data(const GenArgs& a) {
    Dataset ds = make_dataset(a.out, a.spec);
    std::printf("%s\n", (ds.dir + "/manifest.txt").c_str());
}

void cmd_train(const TrainArgs& a) {
    Dataset ds = open_dataset(a.data);
    Task task = task_from_name(ds.spec.task);
    ModelConfig mc = a.mc;
    fit_classes(mc, ds.spec);
    mc.validate();
    a.tc.validate();
    Variant variant = variant_from_name(a.variant);
    FlowOptions flow{flow_source_from_name(a.flow), a.sigma, a.tc.seed};

    std::filesystem::create_directories(a.out);
    ModelParams params = ModelParams::create(mc, a.tc.seed);
    TrainData td = load_dataset_sequences(ds);
    TrainPaths paths{a.out + "/train_log.csv", a.out + "/model.ckpt", a.out + "/model_best.ckpt"};
    TrainResult res = train(params, td, task, a.tc, flow, variant, paths);

    std::string sidecar = model_config_text(mc, task, a.tc.seed);
    io::atomic_write(sidecar_path(paths.checkpoint), sidecar);
    io::atomic_write(sidecar_path(paths.best_checkpoint), sidecar);
    std::printf("%s\n", paths.checkpoint.c_str());
    std::printf("best epoch %d val_acc %s\n", res.best_epoch, fmt_f(res.best_val_acc).c_str());
}

void cmd_eval(const EvalArgs& a) {
    ModelSidecar sc = parse_model_config(io::slurp(sidecar_path(a.model)));
    ModelParams params = ModelParams::from_checkpoint(sc.cfg, a.model);
    Dataset ds = open_dataset(a.data);
    if (task_from_name(ds.spec.task) != sc.task)
        throw std::invalid_argument("eval: dataset task does not match the checkpoint");
    if (a.stitch != 1 && a.stitch != 2 && a.stitch != 4)
        throw std::invalid_argument("eval: --stitch must be 1, 2, or 4");
    if (a.split != "test" && a.split != "train")
        throw std::invalid_argument("eval: --split must be 'test' or 'train'");

    std::vector<LabeledSequence> seqs;
    bool test = a.split == "test";
    const auto& files = test ? ds.test_files : ds.train_files;
    if (a.stitch == 1) {
        for (const auto& f : files) seqs.push_back(load_sequence(f));
    } else {  // stitching needs generator metadata, so rebuild from the manifest
        int count = test ? ds.spec.test_count : ds.spec.train_count;
        for (int i = 0; i < count; ++i) {
            LabeledSequence s = regenerate(ds.spec, !test, i);
            for (int m = 1; m < a.stitch; m *= 2) s = reverse_stitch(s, 0);
            seqs.push_back(std::move(s));
        }
    }

    EvalOptions eo;
    eo.task = sc.task;
    eo.flow = FlowOptions{flow_source_from_name(a.flow), a.sigma,
                          a.seed_given ? a.seed : sc.seed};
    eo.variant = variant_from_name(a.variant);
    eo.max_frames = a.max_frames;
    eo.dump_path = a.dump;
    eo.seed = a.seed_given ? a.seed : sc.seed;
    MetricsReport r = evaluate_online(params, std::move(seqs), eo);

    std::string csv = metrics_csv(r, eo.seed);
    if (!a.out.empty()) io::atomic_write(a.out, csv);
    std::fputs(csv.c_str(), stdout);
}

void cmd_ablate(const AblateArgs& a) {
    Dataset ds = open_dataset(a.data);
    Task task = task_from_name(ds.spec.task);
    a.tc.validate();
    std::filesystem::create_directories(a.out);
    TrainData td = load_dataset_sequences(ds);

    // shared eval sets per requested length multiplier
    std::vector<std::pair<int, std::vector<LabeledSequence>>> eval_sets;
    for (int mult : a.lengths) {
        if (mult != 1 && mult != 2 && mult != 4)
            throw std::invalid_argument("ablate: --lengths entries must be 1, 2, or 4");
        std::vector<LabeledSequence> set;
        for (int i = 0; i < ds.spec.test_count; ++i)
            set.push_back(stitched_test_sequence(ds.spec, i, mult));
        eval_sets.emplace_back(ds.spec.frames * mult, std::move(set));
    }

    std::string csv = "# seed=" + std::to_string(a.tc.seed) + "\n";
    csv += "variant,tokens,flow,eval_len,acc,edit,f1_10,f1_25,f1_50,miou\n";
    for (const auto& vname : a.variants) {
        Variant variant = variant_from_name(vname);
        for (int n : a.tokens) {
            ModelConfig mc = a.mc;
            mc.n_tokens = n;
            fit_classes(mc, ds.spec);
            mc.validate();
            ModelParams params = ModelParams::create(mc, a.tc.seed);
            TrainPaths paths;
            paths.log_csv = a.out + "/train_" + vname + "_" + std::to_string(n) + ".csv";
            train(params, td, task, a.tc, FlowOptions{FlowSource::Stored, 0.0, a.tc.seed},
                  variant, paths);
            for (const auto& fname : a.flows) {
                FlowSource source = flow_source_from_name(fname);
                for (const auto& [len, set] : eval_sets) {
                    EvalOptions eo;
                    eo.task = task;
                    eo.flow = FlowOptions{source, a.sigma, a.tc.seed};
                    eo.variant = variant;
                    eo.seed = a.tc.seed;
                    MetricsReport r = evaluate_online(params, set, eo);
                    csv += vname + "," + std::to_string(n) + "," + fname + "," +
                           std::to_string(len) + "," + fmt_f(r.acc) + "," + fmt_f(r.edit) + "," +
                           fmt_f(r.f1_10) + "," + fmt_f(r.f1_25) + "," + fmt_f(r.f1_50) + "," +
                           fmt_f(r.miou) + "\n";
                }
            }
            io::atomic_write(a.out + "/ablate.csv", csv);  // refresh after each cell
        }
    }
    std::printf("%s\n", (a.out + "/ablate.csv").c_str());
}

void cmd_bench(const BenchArgs& a) {
    ModelConfig mc = a.mc;
    uint64_t seed = a.seed;
    std::unique_ptr<ModelParams> params;
    if (!a.model.empty()) {
        ModelSidecar sc = parse_model_config(io::slurp(sidecar_path(a.model)));
        mc = sc.cfg;
        seed = sc.seed;
        params = std::make_unique<ModelParams>(ModelParams::from_checkpoint(mc, a.model));
    } else {
        mc.validate();
        params = std::make_unique<ModelParams>(ModelParams::create(mc, seed));
    }

    int max_len = 1;
    for (int len : a.lengths) max_len = std::max(max_len, len);
    SceneScript script =
        make_action_script(mix_seed(seed, 0xB1), std::max(max_len, a.win_frames), a.points, 0.5,
                           0.0);
    LabeledSequence master = generate_sequence(script);

    std::vector<BenchRow> rows = run_stream_bench(*params, master, a.lengths);
    std::vector<BenchRow> sliding = run_sliding_bench(*params, master, a.win_frames, a.windows);
    rows.insert(rows.end(), sliding.begin(), sliding.end());

    std::string csv = "# seed=" + std::to_string(seed) + "\n";
    csv += "mode,length,window,mean_step_ms,peak_rss_kb\n";
    for (const auto& r : rows)
        csv += r.mode + "," + std::to_string(r.length) + "," + std::to_string(r.window) + "," +
               fmt_f(r.mean_step_ms) + "," + std::to_string(r.peak_rss_kb) + "\n";
    if (!a.out.empty()) io::atomic_write(a.out, csv);
    std::fputs(csv.c_str(), stdout);
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"online 4D point-cloud perception over a token scene memory"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* sub_gen = app.add_subcommand("gen-data", "generate a synthetic labeled dataset");
    sub_gen->add_option("--out", gen.out, "output directory")->required();
    sub_gen->add_option("--task", gen.spec.task, "action | semantic")->capture_default_str();
    sub_gen->add_option("--train", gen.spec.train_count, "training sequences")
        ->capture_default_str();
    sub_gen->add_option("--test", gen.spec.test_count, "test sequences")->capture_default_str();
    sub_gen->add_option("--frames", gen.spec.frames, "frames per sequence")
        ->capture_default_str();
    sub_gen->add_option("--points", gen.spec.point_budget, "points per frame budget")
        ->capture_default_str();
    sub_gen->add_option("--visible", gen.spec.visible_fraction, "visible fraction per frame")
        ->capture_default_str();
    sub_gen->add_option("--noise", gen.spec.noise_sigma, "sensor noise sigma")
        ->capture_default_str();
    sub_gen->add_option("--seed", gen.spec.base_seed, "dataset seed")->capture_default_str();
    sub_gen->callback([&] { cmd_gen_data(gen); });

    TrainArgs tr;
    auto* sub_train = app.add_subcommand("train", "train a model on a dataset");
    sub_train->add_option("--data", tr.data, "dataset directory")->required();
    sub_train->add_option("--out", tr.out, "output directory")->required();
    sub_train->add_option("--flow", tr.flow, "oracle | noisy | naive")->capture_default_str();
    sub_train->add_option("--sigma", tr.sigma, "flow noise sigma")->capture_default_str();
    sub_train->add_option("--variant", tr.variant,
                          "full | geometry_only | motion_only | memoryless")
        ->capture_default_str();
    add_train_flags(sub_train, tr.tc);
    add_model_flags(sub_train, tr.mc, true);
    sub_train->callback([&] { cmd_train(tr); });

    EvalArgs ev;
    auto* sub_eval = app.add_subcommand("eval", "streaming evaluation of a checkpoint");
    sub_eval->add_option("--data", ev.data, "dataset directory")->required();
    sub_eval->add_option("--model", ev.model, "checkpoint path")->required();
    sub_eval->add_option("--out", ev.out, "metrics CSV path");
    sub_eval->add_option("--dump", ev.dump, "per-frame prediction CSV path");
    sub_eval->add_option("--split", ev.split, "test | train")->capture_default_str();
    sub_eval->add_option("--flow", ev.flow, "oracle | noisy | naive")->capture_default_str();
    sub_eval->add_option("--sigma", ev.sigma, "flow noise sigma")->capture_default_str();
    sub_eval->add_option("--max-frames", ev.max_frames, "evaluate only the first k frames")
        ->capture_default_str();
    sub_eval->add_option("--stitch", ev.stitch, "eval length multiplier (1, 2, 4)")
        ->capture_default_str();
    sub_eval->add_option("--variant", ev.variant, "stream masking variant")
        ->capture_default_str();
    auto* seed_opt = sub_eval->add_option("--seed", ev.seed, "noise-stream seed");
    sub_eval->callback([&] {
        ev.seed_given = seed_opt->count() > 0;
        cmd_eval(ev);
    });

    AblateArgs ab;
    auto* sub_ablate = app.add_subcommand("ablate", "train/eval the ablation grid");
    sub_ablate->add_option("--data", ab.data, "dataset directory")->required();
    sub_ablate->add_option("--out", ab.out, "output directory")->required();
    sub_ablate->add_option("--variants", ab.variants, "variants to run")
        ->delimiter(',')
        ->capture_default_str();
    sub_ablate->add_option("--tokens-grid", ab.tokens, "token-count grid")
        ->delimiter(',')
        ->capture_default_str();
    sub_ablate->add_option("--flows", ab.flows, "flow sources to evaluate")
        ->delimiter(',')
        ->capture_default_str();
    sub_ablate->add_option("--lengths", ab.lengths, "eval length multipliers (1, 2, 4)")
        ->delimiter(',')
        ->capture_default_str();
    sub_ablate->add_option("--sigma", ab.sigma, "flow noise sigma")->capture_default_str();
    ab.tc.total_epochs = 12;
    add_train_flags(sub_ablate, ab.tc);
    add_model_flags(sub_ablate, ab.mc, false);
    sub_ablate->callback([&] { cmd_ablate(ab); });

    BenchArgs be;
    be.mc = []() {  // bench default: small dims keep the 1000-frame run quick
        ModelConfig mc;
        mc.r_s = 32;
        mc.n_tokens = 64;
        mc.k_samples = 16;
        mc.d_g = 32;
        mc.d_m = 32;
        mc.d_k = 16;
        mc.fused_dim = 32;
        mc.sa_hidden = 32;
        mc.head_hidden = 32;
        return mc;
    }();
    auto* sub_bench = app.add_subcommand("bench", "streaming-cost benchmark");
    sub_bench->add_option("--out", be.out, "bench CSV path");
    sub_bench->add_option("--model", be.model, "checkpoint to benchmark (default: fresh init)");
    sub_bench->add_option("--frames", be.lengths, "stream lengths")
        ->delimiter(',')
        ->capture_default_str();
    sub_bench->add_option("--windows", be.windows, "sliding-window sizes")
        ->delimiter(',')
        ->capture_default_str();
    sub_bench->add_option("--win-frames", be.win_frames, "frames for the sliding baseline")
        ->capture_default_str();
    sub_bench->add_option("--points", be.points, "points per frame")->capture_default_str();
    sub_bench->add_option("--seed", be.seed, "model/scene seed")->capture_default_str();
    add_model_flags(sub_bench, be.mc, true);
    sub_bench->callback([&] { cmd_bench(be); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

}  // namespace nsm
