#include "nsm/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "nsm/io.hpp"
#include "nsm/rng.hpp"

namespace nsm {

namespace {

constexpr char kSeqMagic[8] = {'N', 'S', 'M', '4', 'D', 'S', 'E', 'Q'};
constexpr uint32_t kSeqVersion = 1;

void write_vec3s(std::ostream& os, const std::vector<Vec3>& v) {
    for (const Vec3& p : v) {
        io::write_f64(os, p.x);
        io::write_f64(os, p.y);
        io::write_f64(os, p.z);
    }
}

std::vector<Vec3> read_vec3s(std::istream& is, size_t n) {
    std::vector<Vec3> v(n);
    for (Vec3& p : v) {
        p.x = io::read_f64(is);
        p.y = io::read_f64(is);
        p.z = io::read_f64(is);
    }
    return v;
}

std::string seq_name(bool train, int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03d.seq", train ? "train" : "test", index);
    return buf;
}

}  // namespace

void DatasetSpec::validate() const {
    if (task != "action" && task != "semantic")
        throw std::invalid_argument("dataset: task must be 'action' or 'semantic'");
    if (train_count < 1 || test_count < 1)
        throw std::invalid_argument("dataset: need at least one sequence per split");
    if (frames < 6) throw std::invalid_argument("dataset: frames must be >= 6");
    if (point_budget < 28) throw std::invalid_argument("dataset: point budget too small");
    if (!(visible_fraction > 0.0 && visible_fraction <= 1.0))
        throw std::invalid_argument("dataset: visible_fraction must be in (0, 1]");
    if (noise_sigma < 0.0) throw std::invalid_argument("dataset: negative noise sigma");
}

int DatasetSpec::base_action_classes() const { return task == "action" ? kActionClasses : 5; }
int DatasetSpec::point_classes() const { return kSemanticClasses; }

void save_sequence(const LabeledSequence& seq, const std::string& path) {
    seq.validate();
    std::ostringstream os(std::ios::binary);
    io::write_bytes(os, kSeqMagic, sizeof kSeqMagic);
    io::write_u32(os, kSeqVersion);
    io::write_u32(os, static_cast<uint32_t>(seq.frames.size()));
    io::write_u64(os, seq.seed);
    io::write_u64(os, seq.script_hash);
    for (size_t t = 0; t < seq.frames.size(); ++t) {
        const PointCloudFrame& f = seq.frames[t];
        if (f.action_label < 0 || f.action_label > 0xffff)
            throw std::invalid_argument("save_sequence: action label out of u16 range");
        if (f.point_labels.size() != f.positions.size())
            throw std::invalid_argument("save_sequence: per-point labels required");
        io::write_u32(os, static_cast<uint32_t>(f.frame_index));
        io::write_u32(os, static_cast<uint32_t>(f.positions.size()));
        write_vec3s(os, f.positions);
        io::write_u16(os, static_cast<uint16_t>(f.action_label));
        for (int lbl : f.point_labels) {
            if (lbl < 0 || lbl > 0xffff)
                throw std::invalid_argument("save_sequence: point label out of u16 range");
            io::write_u16(os, static_cast<uint16_t>(lbl));
        }
        write_vec3s(os, seq.flows[t].forward_flow);
        write_vec3s(os, seq.flows[t].current_displacement);
    }
    io::atomic_write(path, os.str());
}

LabeledSequence load_sequence(const std::string& path) {
    std::istringstream is(io::slurp(path), std::ios::binary);
    char magic[8];
    io::read_bytes(is, magic, sizeof magic);
    if (std::memcmp(magic, kSeqMagic, sizeof kSeqMagic) != 0)
        throw io::FileError(path + ": not a sequence file");
    uint32_t version = io::read_u32(is);
    if (version != kSeqVersion)
        throw io::FileError(path + ": unsupported sequence version " + std::to_string(version));
    uint32_t count = io::read_u32(is);
    if (count == 0 || count > (1u << 24)) throw io::FileError(path + ": bad frame count");
    LabeledSequence seq;
    seq.seed = io::read_u64(is);
    seq.script_hash = io::read_u64(is);
    size_t prev_n = 0;
    for (uint32_t t = 0; t < count; ++t) {
        PointCloudFrame f;
        f.frame_index = static_cast<int>(io::read_u32(is));
        uint32_t n = io::read_u32(is);
        if (n == 0 || n > (1u << 24)) throw io::FileError(path + ": bad point count");
        f.positions = read_vec3s(is, n);
        f.action_label = io::read_u16(is);
        f.point_labels.resize(n);
        for (uint32_t i = 0; i < n; ++i) f.point_labels[i] = io::read_u16(is);
        PointFlowField flow;
        size_t fwd_n = t == 0 ? n : prev_n;
        flow.forward_flow = read_vec3s(is, fwd_n);
        flow.current_displacement = read_vec3s(is, n);
        prev_n = n;
        seq.frames.push_back(std::move(f));
        seq.flows.push_back(std::move(flow));
    }
    if (is.peek() != std::istringstream::traits_type::eof())
        throw io::FileError(path + ": trailing bytes");
    seq.validate();
    return seq;
}

uint64_t sequence_seed(const DatasetSpec& spec, bool train, int index) {
    return mix_seed(spec.base_seed, (train ? 0x1000u : 0x2000u) + static_cast<uint64_t>(index));
}

SceneScript script_for(const DatasetSpec& spec, bool train, int index) {
    spec.validate();
    uint64_t seed = sequence_seed(spec, train, index);
    if (spec.task == "action")
        return make_action_script(seed, spec.frames, spec.point_budget, spec.visible_fraction,
                                  spec.noise_sigma);
    return make_semantic_script(seed, spec.frames, spec.point_budget, spec.visible_fraction,
                                spec.noise_sigma);
}

LabeledSequence regenerate(const DatasetSpec& spec, bool train, int index) {
    return generate_sequence(script_for(spec, train, index));
}

std::string manifest_text(const DatasetSpec& spec) {
    std::ostringstream os;
    os << "format=nsm4d-dataset-v1\n";
    os << "task=" << spec.task << "\n";
    os << "train_count=" << spec.train_count << "\n";
    os << "test_count=" << spec.test_count << "\n";
    os << "frames=" << spec.frames << "\n";
    os << "point_budget=" << spec.point_budget << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", spec.visible_fraction);
    os << "visible_fraction=" << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", spec.noise_sigma);
    os << "noise_sigma=" << buf << "\n";
    os << "base_seed=" << spec.base_seed << "\n";
    os << "action_classes=" << spec.base_action_classes() << "\n";
    os << "point_classes=" << spec.point_classes() << "\n";
    if (spec.task == "action")
        os << "action_class_names=idle,approach,contact,lift,carry,place\n";
    else
        os << "action_class_names=still,spread,pause,return,spin\n";
    os << "point_class_names=box_static,box_moving,sphere_static,sphere_moving,plate_static,"
          "plate_moving,ground\n";
    for (int i = 0; i < spec.train_count; ++i)
        os << "train_seed_" << i << "=" << sequence_seed(spec, true, i) << "\n";
    for (int i = 0; i < spec.test_count; ++i)
        os << "test_seed_" << i << "=" << sequence_seed(spec, false, i) << "\n";
    return os.str();
}

DatasetSpec parse_manifest(const std::string& text) {
    DatasetSpec spec;
    bool have_format = false;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("manifest: malformed line '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        try {
            if (key == "format") {
                if (value != "nsm4d-dataset-v1")
                    throw std::invalid_argument("manifest: unknown format " + value);
                have_format = true;
            } else if (key == "task") {
                spec.task = value;
            } else if (key == "train_count") {
                spec.train_count = std::stoi(value);
            } else if (key == "test_count") {
                spec.test_count = std::stoi(value);
            } else if (key == "frames") {
                spec.frames = std::stoi(value);
            } else if (key == "point_budget") {
                spec.point_budget = std::stoi(value);
            } else if (key == "visible_fraction") {
                spec.visible_fraction = std::stod(value);
            } else if (key == "noise_sigma") {
                spec.noise_sigma = std::stod(value);
            } else if (key == "base_seed") {
                spec.base_seed = std::stoull(value);
            }
            // class counts/names and per-sequence seeds are informational
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("manifest: bad value for " + key);
        }
    }
    if (!have_format) throw std::invalid_argument("manifest: missing format line");
    spec.validate();
    return spec;
}

Dataset make_dataset(const std::string& dir, const DatasetSpec& spec) {
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io::FileError("cannot create " + dir + ": " + ec.message());
    Dataset ds;
    ds.dir = dir;
    ds.spec = spec;
    for (int i = 0; i < spec.train_count; ++i) {
        std::string path = dir + "/" + seq_name(true, i);
        save_sequence(regenerate(spec, true, i), path);
        ds.train_files.push_back(path);
    }
    for (int i = 0; i < spec.test_count; ++i) {
        std::string path = dir + "/" + seq_name(false, i);
        save_sequence(regenerate(spec, false, i), path);
        ds.test_files.push_back(path);
    }
    io::atomic_write(dir + "/manifest.txt", manifest_text(spec));
    return ds;
}

Dataset open_dataset(const std::string& dir) {
    Dataset ds;
    ds.dir = dir;
    ds.spec = parse_manifest(io::slurp(dir + "/manifest.txt"));
    for (int i = 0; i < ds.spec.train_count; ++i) {
        std::string path = dir + "/" + seq_name(true, i);
        if (!std::filesystem::exists(path)) throw io::FileError("missing sequence " + path);
        ds.train_files.push_back(path);
    }
    for (int i = 0; i < ds.spec.test_count; ++i) {
        std::string path = dir + "/" + seq_name(false, i);
        if (!std::filesystem::exists(path)) throw io::FileError("missing sequence " + path);
        ds.test_files.push_back(path);
    }
    return ds;
}

}  // namespace nsm
