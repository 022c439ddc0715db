#include "nsm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nsm/io.hpp"
#include "nsm/rng.hpp"

namespace nsm {

namespace {

constexpr uint64_t kSurfaceStream = 0x51;
constexpr uint64_t kVisibilityStream = 0x52;
constexpr uint64_t kNoiseStream = 0x53;
constexpr double kMovingEps = 1e-6;

// Phase index covering each frame of the timeline.
std::vector<int> phase_table(const SceneScript& script) {
    std::vector<int> table;
    table.reserve(static_cast<size_t>(script.total_frames()));
    for (size_t p = 0; p < script.phases.size(); ++p)
        for (int d = 0; d < script.phases[p].duration; ++d) table.push_back(static_cast<int>(p));
    return table;
}

std::vector<Vec3> sample_surface(const BodySpec& body, Rng& rng) {
    std::vector<Vec3> pts;
    pts.reserve(static_cast<size_t>(body.surface_points));
    const Vec3& s = body.size;
    switch (body.primitive) {
        case Primitive::Box: {
            double ax = s.y * s.z, ay = s.x * s.z, az = s.x * s.y;  // face area / 4
            double total = 2.0 * (ax + ay + az);
            for (int i = 0; i < body.surface_points; ++i) {
                double u = rng.uniform(0.0, total);
                double sign = (rng.uniform() < 0.5) ? -1.0 : 1.0;
                double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0);
                if (u < 2.0 * ax)
                    pts.push_back({sign * s.x, a * s.y, b * s.z});
                else if (u < 2.0 * (ax + ay))
                    pts.push_back({a * s.x, sign * s.y, b * s.z});
                else
                    pts.push_back({a * s.x, b * s.y, sign * s.z});
            }
            break;
        }
        case Primitive::Sphere: {
            for (int i = 0; i < body.surface_points; ++i) {
                Vec3 d;
                do {
                    d = {rng.normal(), rng.normal(), rng.normal()};
                } while (d.norm() < 1e-9);
                pts.push_back(d * (s.x / d.norm()));
            }
            break;
        }
        case Primitive::Plane: {
            for (int i = 0; i < body.surface_points; ++i)
                pts.push_back({rng.uniform(-s.x, s.x), rng.uniform(-s.y, s.y), 0.0});
            break;
        }
    }
    return pts;
}

void hash_motion(std::ostringstream& os, const RigidMotion& m) {
    for (double v : m.rotation) io::write_f64(os, v);
    io::write_f64(os, m.translation.x);
    io::write_f64(os, m.translation.y);
    io::write_f64(os, m.translation.z);
}

uint64_t fnv1a(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

PointFlowField zero_flow(size_t prev_n, size_t cur_n) {
    PointFlowField f;
    f.forward_flow.assign(prev_n, Vec3{});
    f.current_displacement.assign(cur_n, Vec3{});
    return f;
}

}  // namespace

int SceneScript::total_frames() const {
    int total = 0;
    for (const Phase& p : phases) total += p.duration;
    return total;
}

void SceneScript::validate() const {
    if (bodies.empty()) throw std::invalid_argument("script: no bodies");
    if (phases.empty()) throw std::invalid_argument("script: no phases");
    for (const Phase& p : phases) {
        if (p.duration < 1) throw std::invalid_argument("script: phase duration must be >= 1");
        if (p.action_class < 0 || p.action_class >= action_classes)
            throw std::invalid_argument("script: action class out of range");
        if (p.body_step.size() != bodies.size())
            throw std::invalid_argument("script: phase must carry one delta per body");
        for (const RigidMotion& m : p.body_step)
            if (!m.valid()) throw std::invalid_argument("script: invalid body delta");
    }
    if (total_frames() < 2) throw std::invalid_argument("script: total frames must be >= 2");
    if (!camera.empty() && static_cast<int>(camera.size()) != total_frames())
        throw std::invalid_argument("script: camera trajectory length must equal total frames");
    for (const RigidMotion& m : camera)
        if (!m.valid()) throw std::invalid_argument("script: invalid camera pose");
    for (const BodySpec& b : bodies) {
        if (b.surface_points < 1) throw std::invalid_argument("script: body needs surface points");
        if (b.static_label < 0 || b.static_label >= point_classes || b.moving_label < 0 ||
            b.moving_label >= point_classes)
            throw std::invalid_argument("script: point class out of range");
        if (!b.initial_pose.valid()) throw std::invalid_argument("script: invalid initial pose");
        bool ok = b.size.x > 0.0 &&
                  (b.primitive == Primitive::Plane ? b.size.y > 0.0
                                                   : b.primitive == Primitive::Box
                                                         ? (b.size.y > 0.0 && b.size.z > 0.0)
                                                         : true);
        if (!ok) throw std::invalid_argument("script: nonpositive body size");
    }
    if (!(visible_fraction > 0.0 && visible_fraction <= 1.0))
        throw std::invalid_argument("script: visible_fraction must be in (0, 1]");
    if (noise_sigma < 0.0) throw std::invalid_argument("script: negative noise sigma");
    if (action_classes < 1 || point_classes < 1)
        throw std::invalid_argument("script: class counts must be positive");
}

void LabeledSequence::validate() const {
    if (frames.size() != flows.size())
        throw std::invalid_argument("sequence: frame/flow count mismatch");
    if (frames.empty()) throw std::invalid_argument("sequence: empty");
    for (size_t t = 0; t < frames.size(); ++t) {
        frames[t].validate();
        if (frames[t].frame_index != static_cast<int>(t))
            throw std::invalid_argument("sequence: frame indices must be consecutive from 0");
        size_t prev_n = t == 0 ? frames[0].positions.size() : frames[t - 1].positions.size();
        flows[t].validate(prev_n, frames[t].positions.size());
    }
}

uint64_t script_hash(const SceneScript& script) {
    std::ostringstream os(std::ios::binary);
    io::write_u32(os, static_cast<uint32_t>(script.bodies.size()));
    for (const BodySpec& b : script.bodies) {
        io::write_u32(os, static_cast<uint32_t>(b.primitive));
        io::write_f64(os, b.size.x);
        io::write_f64(os, b.size.y);
        io::write_f64(os, b.size.z);
        io::write_u32(os, static_cast<uint32_t>(b.surface_points));
        io::write_u32(os, static_cast<uint32_t>(b.static_label));
        io::write_u32(os, static_cast<uint32_t>(b.moving_label));
        hash_motion(os, b.initial_pose);
    }
    io::write_u32(os, static_cast<uint32_t>(script.phases.size()));
    for (const Phase& p : script.phases) {
        io::write_u32(os, static_cast<uint32_t>(p.duration));
        io::write_u32(os, static_cast<uint32_t>(p.action_class));
        for (const RigidMotion& m : p.body_step) hash_motion(os, m);
    }
    io::write_u32(os, static_cast<uint32_t>(script.camera.size()));
    for (const RigidMotion& m : script.camera) hash_motion(os, m);
    io::write_f64(os, script.noise_sigma);
    io::write_f64(os, script.visible_fraction);
    io::write_u64(os, script.seed);
    io::write_u32(os, static_cast<uint32_t>(script.action_classes));
    io::write_u32(os, static_cast<uint32_t>(script.point_classes));
    return fnv1a(os.str());
}

LabeledSequence generate_sequence(const SceneScript& script) {
    script.validate();
    const int T = script.total_frames();
    const size_t B = script.bodies.size();
    std::vector<int> phase_of = phase_table(script);

    // Material points, sampled once per body.
    std::vector<std::vector<Vec3>> material(B);
    for (size_t b = 0; b < B; ++b) {
        Rng rng(mix_seed(script.seed, kSurfaceStream + b));
        material[b] = sample_surface(script.bodies[b], rng);
    }

    // Cumulative body poses per frame.
    std::vector<std::vector<RigidMotion>> poses(static_cast<size_t>(T));
    poses[0].reserve(B);
    for (size_t b = 0; b < B; ++b) poses[0].push_back(script.bodies[b].initial_pose);
    for (int t = 1; t < T; ++t) {
        const Phase& ph = script.phases[static_cast<size_t>(phase_of[static_cast<size_t>(t)])];
        poses[static_cast<size_t>(t)].reserve(B);
        for (size_t b = 0; b < B; ++b)
            poses[static_cast<size_t>(t)].push_back(
                ph.body_step[b].compose(poses[static_cast<size_t>(t) - 1][b]));
    }

    LabeledSequence seq;
    seq.seed = script.seed;
    seq.script_hash = script_hash(script);
    seq.has_meta = true;
    seq.meta.base_action_classes = script.action_classes;
    for (const BodySpec& b : script.bodies)
        seq.meta.body_labels.emplace_back(b.static_label, b.moving_label);

    // Exact per-body step displacement (max over material points).
    seq.meta.body_step_disp.assign(static_cast<size_t>(T), std::vector<double>(B, 0.0));
    for (int t = 1; t < T; ++t)
        for (size_t b = 0; b < B; ++b) {
            double worst = 0.0;
            for (const Vec3& local : material[b]) {
                Vec3 before = poses[static_cast<size_t>(t) - 1][b].apply(local);
                Vec3 after = poses[static_cast<size_t>(t)][b].apply(local);
                worst = std::max(worst, (after - before).norm());
            }
            seq.meta.body_step_disp[static_cast<size_t>(t)][b] = worst;
        }

    Rng vis_rng(mix_seed(script.seed, kVisibilityStream));
    Rng noise_rng(mix_seed(script.seed, kNoiseStream));
    seq.frames.reserve(static_cast<size_t>(T));
    seq.meta.snapshots.reserve(static_cast<size_t>(T));

    for (int t = 0; t < T; ++t) {
        RigidMotion camera = script.camera.empty() ? RigidMotion::identity()
                                                   : script.camera[static_cast<size_t>(t)];
        RigidMotion cam_inv = camera.inverse();

        PointCloudFrame frame;
        frame.frame_index = t;
        frame.action_label =
            script.phases[static_cast<size_t>(phase_of[static_cast<size_t>(t)])].action_class;
        SceneSnapshot snap;
        snap.frame_index = static_cast<uint32_t>(t);
        snap.camera = camera;
        snap.body_pose = poses[static_cast<size_t>(t)];

        for (size_t b = 0; b < B; ++b) {
            int n_mat = script.bodies[b].surface_points;
            int n_vis = script.visible_fraction >= 1.0
                            ? n_mat
                            : std::max(1, static_cast<int>(
                                              std::llround(script.visible_fraction * n_mat)));
            std::vector<int> chosen;
            if (n_vis >= n_mat) {
                chosen.resize(static_cast<size_t>(n_mat));
                std::iota(chosen.begin(), chosen.end(), 0);
            } else {
                chosen = vis_rng.sample_indices(n_mat, n_vis);
            }
            bool moving = seq.meta.body_step_disp[static_cast<size_t>(t)][b] > kMovingEps;
            int label = moving ? script.bodies[b].moving_label : script.bodies[b].static_label;
            for (int idx : chosen) {
                const Vec3& local = material[b][static_cast<size_t>(idx)];
                Vec3 p = cam_inv.apply(poses[static_cast<size_t>(t)][b].apply(local));
                if (script.noise_sigma > 0.0) {
                    p.x += script.noise_sigma * noise_rng.normal();
                    p.y += script.noise_sigma * noise_rng.normal();
                    p.z += script.noise_sigma * noise_rng.normal();
                }
                frame.positions.push_back(p);
                frame.point_labels.push_back(label);
                snap.point_body.push_back(static_cast<int>(b));
                snap.point_local.push_back(local);
            }
        }
        frame.validate();
        seq.frames.push_back(std::move(frame));
        seq.meta.snapshots.push_back(std::move(snap));
    }

    seq.flows.reserve(static_cast<size_t>(T));
    seq.flows.push_back(zero_flow(seq.frames[0].positions.size(), seq.frames[0].positions.size()));
    for (int t = 1; t < T; ++t)
        seq.flows.push_back(oracle_flow(seq.meta.snapshots[static_cast<size_t>(t) - 1],
                                        seq.meta.snapshots[static_cast<size_t>(t)]));
    seq.validate();
    return seq;
}

LabeledSequence reverse_stitch(const LabeledSequence& seq, int start_index) {
    if (!seq.has_meta)
        throw std::invalid_argument(
            "reverse_stitch: sequence lacks generator metadata (regenerate it from its script)");
    const int L = seq.length();
    const int M = 2 * L;
    if (start_index < 0 || start_index >= M)
        throw std::invalid_argument("reverse_stitch: start index out of range");
    const int C = seq.meta.base_action_classes;
    const size_t B = seq.meta.body_labels.size();

    // Stitched timeline position j → source frame of the input sequence.
    auto src_of = [&](int j) { return j < L ? j : M - 1 - j; };
    // Per-body displacement of stitched step j (j = 0 wraps the loop; both
    // seams are duplicate frames, hence zero).
    auto step_disp = [&](int j) -> std::vector<double> {
        if (j == 0 || j == L) return std::vector<double>(B, 0.0);
        if (j < L) return seq.meta.body_step_disp[static_cast<size_t>(j)];
        return seq.meta.body_step_disp[static_cast<size_t>(M - j)];
    };

    LabeledSequence out;
    out.seed = seq.seed;
    out.script_hash = seq.script_hash;
    out.has_meta = true;
    out.meta.base_action_classes = C;
    out.meta.body_labels = seq.meta.body_labels;
    out.frames.reserve(static_cast<size_t>(M));
    out.flows.reserve(static_cast<size_t>(M));
    out.meta.snapshots.reserve(static_cast<size_t>(M));
    out.meta.body_step_disp.reserve(static_cast<size_t>(M));

    for (int k = 0; k < M; ++k) {
        int j = (start_index + k) % M;
        int s = src_of(j);
        const PointCloudFrame& fsrc = seq.frames[static_cast<size_t>(s)];
        const SceneSnapshot& ssrc = seq.meta.snapshots[static_cast<size_t>(s)];

        PointCloudFrame frame;
        frame.frame_index = k;
        frame.positions = fsrc.positions;
        frame.action_label = j < L ? fsrc.action_label
                                   : (fsrc.action_label < C ? fsrc.action_label + C
                                                            : fsrc.action_label - C);
        std::vector<double> disp = k == 0 ? std::vector<double>(B, 0.0) : step_disp(j);
        frame.point_labels.resize(fsrc.positions.size());
        for (size_t i = 0; i < fsrc.positions.size(); ++i) {
            int b = ssrc.point_body[i];
            bool moving = disp[static_cast<size_t>(b)] > kMovingEps;
            frame.point_labels[i] = moving ? out.meta.body_labels[static_cast<size_t>(b)].second
                                           : out.meta.body_labels[static_cast<size_t>(b)].first;
        }
        out.frames.push_back(std::move(frame));

        SceneSnapshot snap = ssrc;
        snap.frame_index = static_cast<uint32_t>(k);
        out.meta.snapshots.push_back(std::move(snap));
        out.meta.body_step_disp.push_back(std::move(disp));

        if (k == 0) {
            size_t n0 = fsrc.positions.size();
            out.flows.push_back(zero_flow(n0, n0));
        } else if (j == 0 || j == L) {
            // duplicate-frame seam
            size_t n = fsrc.positions.size();
            out.flows.push_back(zero_flow(n, n));
        } else if (j < L) {
            out.flows.push_back(seq.flows[static_cast<size_t>(j)]);
        } else {
            // reversed step: original frames (M−j) → (M−1−j)
            const PointFlowField& fwd = seq.flows[static_cast<size_t>(M - j)];
            PointFlowField rev;
            rev.forward_flow.reserve(fwd.current_displacement.size());
            for (const Vec3& v : fwd.current_displacement) rev.forward_flow.push_back(-v);
            rev.current_displacement.reserve(fwd.forward_flow.size());
            for (const Vec3& v : fwd.forward_flow) rev.current_displacement.push_back(-v);
            out.flows.push_back(std::move(rev));
        }
    }
    out.validate();
    return out;
}

LabeledSequence crop_sequence(const LabeledSequence& seq, int start, int len) {
    if (start < 0 || len < 1 || start + len > seq.length())
        throw std::invalid_argument("crop_sequence: range out of bounds");
    LabeledSequence out;
    out.seed = seq.seed;
    out.script_hash = seq.script_hash;
    out.has_meta = seq.has_meta;
    if (seq.has_meta) {
        out.meta.base_action_classes = seq.meta.base_action_classes;
        out.meta.body_labels = seq.meta.body_labels;
    }
    for (int k = 0; k < len; ++k) {
        int s = start + k;
        PointCloudFrame frame = seq.frames[static_cast<size_t>(s)];
        frame.frame_index = k;
        if (seq.has_meta) {
            const SceneSnapshot& snap = seq.meta.snapshots[static_cast<size_t>(s)];
            std::vector<double> disp = k == 0
                                           ? std::vector<double>(seq.meta.body_labels.size(), 0.0)
                                           : seq.meta.body_step_disp[static_cast<size_t>(s)];
            for (size_t i = 0; i < frame.positions.size(); ++i) {
                int b = snap.point_body[i];
                bool moving = disp[static_cast<size_t>(b)] > kMovingEps;
                frame.point_labels[i] = moving
                                            ? seq.meta.body_labels[static_cast<size_t>(b)].second
                                            : seq.meta.body_labels[static_cast<size_t>(b)].first;
            }
            SceneSnapshot out_snap = snap;
            out_snap.frame_index = static_cast<uint32_t>(k);
            out.meta.snapshots.push_back(std::move(out_snap));
            out.meta.body_step_disp.push_back(std::move(disp));
        }
        out.frames.push_back(std::move(frame));
        if (k == 0) {
            size_t n0 = seq.frames[static_cast<size_t>(s)].positions.size();
            out.flows.push_back(zero_flow(n0, n0));
        } else {
            out.flows.push_back(seq.flows[static_cast<size_t>(s)]);
        }
    }
    out.validate();
    return out;
}

namespace {

// Evenly split `frames` into `parts` durations, remainder spread from the front.
std::vector<int> split_frames(int frames, int parts) {
    std::vector<int> out(static_cast<size_t>(parts), frames / parts);
    for (int i = 0; i < frames % parts; ++i) out[static_cast<size_t>(i)] += 1;
    return out;
}

std::vector<RigidMotion> drift_camera(int frames, const Vec3& per_frame) {
    std::vector<RigidMotion> cam;
    cam.reserve(static_cast<size_t>(frames));
    for (int t = 0; t < frames; ++t) cam.push_back(RigidMotion::translate(per_frame * t));
    return cam;
}

}  // namespace

SceneScript make_action_script(uint64_t seed, int frames, int point_budget,
                               double visible_fraction, double noise_sigma) {
    if (frames < 6) throw std::invalid_argument("action script: needs at least 6 frames");
    if (point_budget < 12) throw std::invalid_argument("action script: point budget too small");
    Rng rng(mix_seed(seed, 0x11));

    Vec3 box_pos{rng.uniform(0.6, 1.0), rng.uniform(-0.2, 0.2), 0.25};
    Vec3 sph_pos{rng.uniform(-1.2, -0.8), rng.uniform(-0.2, 0.2), rng.uniform(0.5, 0.7)};
    double speed = rng.uniform(0.8, 1.2);

    SceneScript script;
    script.seed = seed;
    script.action_classes = kActionClasses;
    script.point_classes = kSemanticClasses;
    script.noise_sigma = noise_sigma;
    script.visible_fraction = visible_fraction;

    BodySpec ground;
    ground.primitive = Primitive::Plane;
    ground.size = {3.0, 3.0, 0.0};
    ground.surface_points = point_budget / 4;
    ground.static_label = ground.moving_label = 6;
    script.bodies.push_back(ground);

    BodySpec box;
    box.primitive = Primitive::Box;
    box.size = {0.25, 0.25, 0.25};
    box.surface_points = (point_budget * 3 / 4) / 2;
    box.static_label = 0;
    box.moving_label = 1;
    box.initial_pose = RigidMotion::translate(box_pos);
    script.bodies.push_back(box);

    BodySpec sphere;
    sphere.primitive = Primitive::Sphere;
    sphere.size = {0.2, 0.0, 0.0};
    sphere.surface_points = point_budget * 3 / 4 - box.surface_points;
    sphere.static_label = 2;
    sphere.moving_label = 3;
    sphere.initial_pose = RigidMotion::translate(sph_pos);
    script.bodies.push_back(sphere);

    std::vector<int> dur = split_frames(frames, kActionClasses);
    // Where the sphere must land to sit on the box.
    Vec3 hover = box_pos + Vec3{0.0, 0.0, 0.45} - sph_pos;
    double lift = 0.9 * speed;
    double carry = -1.1 * speed;

    auto phase = [&](int d, int cls, Vec3 dbox, Vec3 dsph) {
        Phase p;
        p.duration = d;
        p.action_class = cls;
        p.body_step = {RigidMotion::identity(), RigidMotion::translate(dbox),
                       RigidMotion::translate(dsph)};
        script.phases.push_back(std::move(p));
    };
    phase(dur[0], 0, {}, {});                                         // idle
    phase(dur[1], 1, {}, hover / static_cast<double>(dur[1]));        // approach
    phase(dur[2], 2, {}, {0.0, 0.05 * speed, 0.0});                   // contact rub
    Vec3 up{0.0, 0.0, lift / dur[3]};
    phase(dur[3], 3, up, up);                                         // lift
    Vec3 side{carry / dur[4], 0.0, 0.0};
    phase(dur[4], 4, side, side);                                     // carry
    Vec3 down{0.0, 0.0, -lift / dur[5]};
    phase(dur[5], 5, down, down);                                     // place

    script.camera = drift_camera(frames, {0.015, 0.007, 0.0});
    return script;
}

SceneScript make_semantic_script(uint64_t seed, int frames, int point_budget,
                                 double visible_fraction, double noise_sigma) {
    if (frames < 5) throw std::invalid_argument("semantic script: needs at least 5 frames");
    if (point_budget < 28) throw std::invalid_argument("semantic script: point budget too small");
    Rng rng(mix_seed(seed, 0x21));

    SceneScript script;
    script.seed = seed;
    script.action_classes = 5;
    script.point_classes = kSemanticClasses;
    script.noise_sigma = noise_sigma;
    script.visible_fraction = visible_fraction;

    BodySpec ground;
    ground.primitive = Primitive::Plane;
    ground.size = {3.0, 3.0, 0.0};
    ground.surface_points = point_budget / 4;
    ground.static_label = ground.moving_label = 6;
    script.bodies.push_back(ground);

    // Staggered slots, shuffled per sequence so position never encodes class.
    std::vector<Vec3> slots = {{-1.0, -1.0, 0.0}, {0.0, -1.15, 0.0}, {1.0, -1.0, 0.0},
                               {-1.0, 1.0, 0.0},  {0.0, 1.15, 0.0},  {1.0, 1.0, 0.0}};
    rng.shuffle(slots);
    auto jitter = [&]() { return Vec3{rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), 0.0}; };

    int per_body = (point_budget - ground.surface_points) / 6;
    auto add_twin = [&](Primitive prim, Vec3 size, double z, int static_lbl, int moving_lbl,
                        size_t slot_a, size_t slot_b) {
        for (size_t s : {slot_a, slot_b}) {
            BodySpec b;
            b.primitive = prim;
            b.size = size;
            b.surface_points = per_body;
            b.static_label = static_lbl;
            b.moving_label = moving_lbl;
            b.initial_pose = RigidMotion::translate(slots[s] + jitter() + Vec3{0.0, 0.0, z});
            script.bodies.push_back(b);
        }
    };
    add_twin(Primitive::Box, {0.25, 0.25, 0.25}, 0.25, 0, 1, 0, 1);
    add_twin(Primitive::Sphere, {0.24, 0.0, 0.0}, 0.3, 2, 3, 2, 3);
    add_twin(Primitive::Plane, {0.4, 0.3, 0.0}, 0.5, 4, 5, 4, 5);

    // Which twin of each pair moves this sequence (body indices 1..6).
    size_t box_m = 1 + rng.uniform_int(2);
    size_t sph_m = 3 + rng.uniform_int(2);
    size_t plate_m = 5 + rng.uniform_int(2);
    Vec3 sph_center = script.bodies[sph_m].initial_pose.translation;

    double v = 0.08 * rng.uniform(0.8, 1.2);
    double omega = 0.5 * rng.uniform(0.8, 1.2);
    RigidMotion spin = RigidMotion::rotate_axis({0.0, 0.0, 1.0}, omega);
    // rotate in place about the sphere's own center
    RigidMotion spin_in_place =
        RigidMotion::translate(sph_center).compose(spin).compose(
            RigidMotion::translate(-sph_center));
    RigidMotion spin_back = RigidMotion::translate(sph_center)
                                .compose(RigidMotion::rotate_axis({0.0, 0.0, 1.0}, -omega))
                                .compose(RigidMotion::translate(-sph_center));

    std::vector<int> dur = split_frames(frames, 5);
    auto phase = [&](int d, int cls) {
        Phase p;
        p.duration = d;
        p.action_class = cls;
        p.body_step.assign(script.bodies.size(), RigidMotion::identity());
        script.phases.push_back(std::move(p));
        return static_cast<int>(script.phases.size()) - 1;
    };
    int p0 = phase(dur[0], 0);  // all still
    (void)p0;
    int p1 = phase(dur[1], 1);  // all three movers active
    script.phases[static_cast<size_t>(p1)].body_step[box_m] = RigidMotion::translate({v, 0, 0});
    script.phases[static_cast<size_t>(p1)].body_step[sph_m] = spin_in_place;
    script.phases[static_cast<size_t>(p1)].body_step[plate_m] =
        RigidMotion::translate({0, 0, v});
    int p2 = phase(dur[2], 2);  // pause
    (void)p2;
    int p3 = phase(dur[3], 3);  // movers return
    script.phases[static_cast<size_t>(p3)].body_step[box_m] = RigidMotion::translate({-v, 0, 0});
    script.phases[static_cast<size_t>(p3)].body_step[sph_m] = spin_back;
    script.phases[static_cast<size_t>(p3)].body_step[plate_m] =
        RigidMotion::translate({0, 0, -v});
    int p4 = phase(dur[4], 4);  // sphere only
    script.phases[static_cast<size_t>(p4)].body_step[sph_m] = spin_in_place;

    script.camera = drift_camera(frames, {0.012, 0.006, 0.0});
    return script;
}

}  // namespace nsm
