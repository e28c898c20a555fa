#include "speckle/dataset.hpp"

#include "speckle/config.hpp"
#include "speckle/digest.hpp"
#include "speckle/error.hpp"
#include "speckle/gridio.hpp"
#include "speckle/parallel.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <cstring>
#include <sstream>

namespace speckle {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string pair_dir(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "pairs/%06d", index);
    return buf;
}

PairFiles pair_paths(int index) {
    const std::string d = pair_dir(index);
    return {d + "/ref.spgrid", d + "/sample.spgrid", d + "/phase.spgrid",
            d + "/transmission.spgrid", d + "/disp_x.spgrid", d + "/disp_y.spgrid"};
}

json files_json(const PairFiles& f) {
    return {{"ref", f.reference},           {"sample", f.sample}, {"phase", f.phase},
            {"transmission", f.transmission}, {"disp_x", f.disp_x}, {"disp_y", f.disp_y}};
}

PairFiles files_from_json(const json& j) {
    return {j.at("ref").get<std::string>(),          j.at("sample").get<std::string>(),
            j.at("phase").get<std::string>(),        j.at("transmission").get<std::string>(),
            j.at("disp_x").get<std::string>(),       j.at("disp_y").get<std::string>()};
}

bool bit_equal(const Image2D& a, const Image2D& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        if (std::memcmp(&a.data()[i], &b.data()[i], sizeof(double)) != 0) return false;
    }
    return true;
}

struct PairImages {
    Image2D reference;
    Image2D sample;
    SampleTruth truth;
};

PairImages generate_images(const DatasetOptions& opt, int index) {
    SamplePair p = make_pair(pair_mask_seed(opt.master_seed, index), pair_sample_seed(opt.master_seed, index),
                             opt.synth, opt.optics, opt.size, opt.mask_pitch_px);
    return {std::move(p.reference), std::move(p.sample), std::move(p.truth)};
}

PairFiles write_pair(const fs::path& root, const PairFiles& paths, const PairImages& img) {
    write_image(root / paths.reference, img.reference, GridSemantic::Intensity);
    write_image(root / paths.sample, img.sample, GridSemantic::Intensity);
    write_image(root / paths.phase, img.truth.phase, GridSemantic::PhaseRad);
    write_image(root / paths.transmission, img.truth.transmission, GridSemantic::Transmission);
    write_image(root / paths.disp_x, img.truth.displacement.dx(), GridSemantic::DispPxX);
    write_image(root / paths.disp_y, img.truth.displacement.dy(), GridSemantic::DispPxY);
    return {sha256_file(root / paths.reference), sha256_file(root / paths.sample),
            sha256_file(root / paths.phase),     sha256_file(root / paths.transmission),
            sha256_file(root / paths.disp_x),    sha256_file(root / paths.disp_y)};
}

}  // namespace

void DatasetOptions::validate() const {
    if (count < 1) throw ParameterError("pair count must be at least 1");
    if (size < 64) throw ParameterError("image size must be at least 64");
    if (mask_pitch_px < 1 || size % mask_pitch_px != 0) {
        throw ParameterError("mask pitch " + std::to_string(mask_pitch_px) + " must divide image size " +
                             std::to_string(size));
    }
    optics.validate();
    synth.validate();
}

DatasetSplit split_indices(int count) {
    if (count < 0) throw ParameterError("pair count must be non-negative");
    DatasetSplit split;
    const int train = static_cast<int>((static_cast<long long>(count) * 8) / 10);
    for (int i = 0; i < count; ++i) (i < train ? split.train : split.validation).push_back(i);
    return split;
}

SeedContext pair_mask_seed(std::uint64_t master_seed, int index) {
    return SeedContext(master_seed).derive(static_cast<std::uint64_t>(index)).derive("mask");
}

SeedContext pair_sample_seed(std::uint64_t master_seed, int index) {
    return SeedContext(master_seed).derive(static_cast<std::uint64_t>(index)).derive("sample");
}

DatasetManifest generate_dataset(const DatasetOptions& options, const fs::path& out_dir) {
    options.validate();
    DatasetManifest manifest;
    manifest.options = options;
    manifest.split = split_indices(options.count);
    manifest.pairs.resize(static_cast<std::size_t>(options.count));

    std::error_code ec;
    fs::create_directories(out_dir / "pairs", ec);
    if (ec) throw IoError("cannot create '" + (out_dir / "pairs").string() + "': " + ec.message());

    // Pairs are independent; each thread writes only its own directory.
    parallel_for(0, options.count, [&](int i) {
        PairRecord& rec = manifest.pairs[static_cast<std::size_t>(i)];
        rec.index = i;
        rec.paths = pair_paths(i);
        std::error_code dir_ec;
        fs::create_directories(out_dir / pair_dir(i), dir_ec);
        if (dir_ec) throw IoError("cannot create '" + (out_dir / pair_dir(i)).string() + "': " + dir_ec.message());
        const PairImages img = generate_images(options, i);
        rec.scale_vp = img.truth.scale_vp;
        rec.scale_vt = img.truth.scale_vt;
        rec.correlated = img.truth.correlated;
        rec.digests = write_pair(out_dir, rec.paths, img);
    });

    save_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

std::string manifest_to_json(const DatasetManifest& m) {
    json pairs = json::array();
    for (const auto& p : m.pairs) {
        pairs.push_back({{"index", p.index},
                         {"paths", files_json(p.paths)},
                         {"sha256", files_json(p.digests)},
                         {"scale_vp", p.scale_vp},
                         {"scale_vt", p.scale_vt},
                         {"correlated", p.correlated}});
    }
    ToolkitConfig cfg;
    cfg.optics = m.options.optics;
    cfg.synth = m.options.synth;
    const json configs = json::parse(config_to_json(cfg));
    const json j = {{"format_version", m.format_version},
                    {"master_seed", m.options.master_seed},
                    {"count", m.options.count},
                    {"size", m.options.size},
                    {"mask_pitch_px", m.options.mask_pitch_px},
                    {"split", {{"train", m.split.train}, {"validation", m.split.validation}}},
                    {"optics", configs.at("optics")},
                    {"synth", configs.at("synth")},
                    {"geometry", configs.at("synth").at("geometry")},
                    {"pairs", pairs}};
    return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
    DatasetManifest m;
    try {
        const json j = json::parse(text);
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != kManifestFormatVersion) {
            throw ParameterError("unsupported manifest format_version " + std::to_string(m.format_version));
        }
        m.options.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.options.count = j.at("count").get<int>();
        m.options.size = j.at("size").get<int>();
        m.options.mask_pitch_px = j.at("mask_pitch_px").get<int>();
        m.split.train = j.at("split").at("train").get<std::vector<int>>();
        m.split.validation = j.at("split").at("validation").get<std::vector<int>>();
        const json cfg = {{"optics", j.at("optics")}, {"synth", j.at("synth")}};
        const ToolkitConfig parsed = parse_config(cfg.dump());
        m.options.optics = parsed.optics;
        m.options.synth = parsed.synth;
        for (const auto& p : j.at("pairs")) {
            PairRecord rec;
            rec.index = p.at("index").get<int>();
            rec.paths = files_from_json(p.at("paths"));
            rec.digests = files_from_json(p.at("sha256"));
            rec.scale_vp = p.at("scale_vp").get<double>();
            rec.scale_vt = p.at("scale_vt").get<double>();
            rec.correlated = p.at("correlated").get<bool>();
            m.pairs.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("malformed manifest: ") + e.what());
    }
    if (static_cast<int>(m.pairs.size()) != m.options.count) {
        throw ParameterError("manifest lists " + std::to_string(m.pairs.size()) + " pairs but count is " +
                             std::to_string(m.options.count));
    }
    return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
    const std::string text = manifest_to_json(manifest);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return manifest_from_json(ss.str());
}

VerifyReport verify_dataset(const fs::path& dataset_dir) {
    const DatasetManifest m = load_manifest(dataset_dir / "manifest.json");
    VerifyReport report;
    report.regenerated = m.options.synth.noise_sigma > 0.0;
    std::vector<int> digest_bad(m.pairs.size(), 0);
    std::vector<int> model_bad(m.pairs.size(), 0);
    std::vector<std::string> notes(m.pairs.size());

    parallel_for(0, static_cast<int>(m.pairs.size()), [&](int i) {
        const PairRecord& rec = m.pairs[static_cast<std::size_t>(i)];
        const auto check = [&](const std::string& rel, const std::string& want) {
            if (sha256_file(dataset_dir / rel) != want) {
                digest_bad[static_cast<std::size_t>(i)] = 1;
                notes[static_cast<std::size_t>(i)] += "digest mismatch: " + rel + "; ";
            }
        };
        check(rec.paths.reference, rec.digests.reference);
        check(rec.paths.sample, rec.digests.sample);
        check(rec.paths.phase, rec.digests.phase);
        check(rec.paths.transmission, rec.digests.transmission);
        check(rec.paths.disp_x, rec.digests.disp_x);
        check(rec.paths.disp_y, rec.digests.disp_y);

        const Image2D sample = read_image(dataset_dir / rec.paths.sample);
        if (report.regenerated) {
            const PairImages img = generate_images(m.options, rec.index);
            const Image2D ref = read_image(dataset_dir / rec.paths.reference);
            if (!bit_equal(img.sample, sample) || !bit_equal(img.reference, ref)) {
                model_bad[static_cast<std::size_t>(i)] = 1;
                notes[static_cast<std::size_t>(i)] += "regenerated pair differs from stored pair; ";
            }
        } else {
            const Image2D ref = read_image(dataset_dir / rec.paths.reference);
            const Image2D t = read_image(dataset_dir / rec.paths.transmission);
            VectorField2D disp(read_image(dataset_dir / rec.paths.disp_x), read_image(dataset_dir / rec.paths.disp_y));
            Image2D again = warp_apply(ref, disp, t);
            round_to_float(again);
            if (!bit_equal(again, sample)) {
                model_bad[static_cast<std::size_t>(i)] = 1;
                notes[static_cast<std::size_t>(i)] += "warp_apply(ref, truth) differs from stored sample; ";
            }
        }
    });

    for (std::size_t i = 0; i < m.pairs.size(); ++i) {
        ++report.pairs_checked;
        report.digest_failures += digest_bad[i];
        report.forward_model_failures += model_bad[i];
        if (!notes[i].empty()) report.messages.push_back("pair " + std::to_string(m.pairs[i].index) + ": " + notes[i]);
    }
    return report;
}

}  // namespace speckle
