#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsm/synth.hpp"

namespace nsm {

// Everything needed to regenerate a dataset bit-exactly; round-trips through
// the human-readable manifest.
struct DatasetSpec {
    std::string task = "action";  // "action" | "semantic"
    int train_count = 8;
    int test_count = 4;
    int frames = 60;
    int point_budget = 1024;
    double visible_fraction = 0.5;
    double noise_sigma = 0.005;
    uint64_t base_seed = 7;

    void validate() const;
    int base_action_classes() const;
    int point_classes() const;
};

void save_sequence(const LabeledSequence& seq, const std::string& path);
LabeledSequence load_sequence(const std::string& path);  // loses generator metadata

uint64_t sequence_seed(const DatasetSpec& spec, bool train, int index);
SceneScript script_for(const DatasetSpec& spec, bool train, int index);
LabeledSequence regenerate(const DatasetSpec& spec, bool train, int index);

std::string manifest_text(const DatasetSpec& spec);
DatasetSpec parse_manifest(const std::string& text);

struct Dataset {
    std::string dir;
    DatasetSpec spec;
    std::vector<std::string> train_files;
    std::vector<std::string> test_files;
};

Dataset make_dataset(const std::string& dir, const DatasetSpec& spec);
Dataset open_dataset(const std::string& dir);

}  // namespace nsm
