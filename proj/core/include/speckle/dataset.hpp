#pragma once

#include "speckle/optics.hpp"
#include "speckle/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace speckle {

inline constexpr int kManifestFormatVersion = 1;

struct DatasetOptions {
    int count = 10;
    std::uint64_t master_seed = 0;
    int size = 512;
    int mask_pitch_px = 8;
    OpticsConfig optics;
    SynthConfig synth;

    void validate() const;
};

struct PairFiles {
    std::string reference;
    std::string sample;
    std::string phase;
    std::string transmission;
    std::string disp_x;
    std::string disp_y;
};

struct PairRecord {
    int index = 0;
    PairFiles paths;    // relative to the dataset root
    PairFiles digests;  // SHA-256 of each file
    double scale_vp = 0.0;
    double scale_vt = 0.0;
    bool correlated = false;
};

struct DatasetSplit {
    std::vector<int> train;
    std::vector<int> validation;
};

/// floor(0.8 count) training pairs (the first ones), the rest validation.
DatasetSplit split_indices(int count);

struct DatasetManifest {
    int format_version = kManifestFormatVersion;
    DatasetOptions options;
    DatasetSplit split;
    std::vector<PairRecord> pairs;
};

/// Seeds for pair i: SeedContext(master).derive(i), then "mask" and "sample".
SeedContext pair_mask_seed(std::uint64_t master_seed, int index);
SeedContext pair_sample_seed(std::uint64_t master_seed, int index);

/// Generates every pair (parallel over pairs), writes SPGRID1 grids under
/// out_dir/pairs/NNNNNN/ and out_dir/manifest.json.
DatasetManifest generate_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

struct VerifyReport {
    int pairs_checked = 0;
    int digest_failures = 0;
    int forward_model_failures = 0;
    bool regenerated = false;  // noisy datasets are audited by regeneration
    std::vector<std::string> messages;

    bool ok() const { return digest_failures == 0 && forward_model_failures == 0; }
};

/// Forward-model audit: every stored file matches its manifest digest and
/// warp_apply(stored ref, stored truth) reproduces the stored sample
/// bit-exactly. When noise was added the pair is regenerated from its seeds
/// and compared by digest instead.
VerifyReport verify_dataset(const std::filesystem::path& dataset_dir);

}  // namespace speckle
