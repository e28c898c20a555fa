#include "cli_common.hpp"

#include "speckle/digest.hpp"
#include "speckle/error.hpp"
#include "speckle/parallel.hpp"

#include <fstream>
#include <iostream>
#include <thread>

namespace speckle::cli {

void add_common_options(CLI::App& cmd, CommonOptions& opts, bool out_required) {
    cmd.add_option("--seed", opts.seed, "Master seed")->capture_default_str();
    auto* out = cmd.add_option("--out", opts.out, "Output directory");
    if (out_required) out->required();
    cmd.add_option("--threads", opts.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    cmd.add_option("--config", opts.config, "JSON config file (optics, synth, geometry, track sections)");
    cmd.add_flag("--json", opts.json, "Print the JSON summary on stdout");
}

int apply_threads(const CommonOptions& opts) {
    int n = opts.threads;
    if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    set_num_threads(n);
    return n;
}

ToolkitConfig load_toolkit_config(const CommonOptions& opts) {
    return opts.config.empty() ? ToolkitConfig{} : load_config(opts.config);
}

fs::path prepare_out_dir(const std::string& out) {
    const fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out + "': " + ec.message());
    return dir;
}

void write_output(const fs::path& dir, const std::string& name, const Image2D& img, GridSemantic semantic,
                  json& outputs) {
    const fs::path path = dir / name;
    write_image(path, img, semantic);
    outputs[name] = sha256_file(path);
}

Image2D with_pitch(const Image2D& img, double pixel_pitch) {
    return Image2D(img.width(), img.height(), pixel_pitch, std::vector<double>(img.data().begin(), img.data().end()));
}

void emit_summary(const CommonOptions& opts, const fs::path& dir, const json& summary, const std::string& message) {
    const std::string text = summary.dump(2) + "\n";
    if (!dir.empty()) {
        const fs::path path = dir / "summary.json";
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out << text;
        if (!out) throw IoError("write to '" + path.string() + "' failed");
    }
    if (opts.json) {
        std::cout << text;
    } else {
        std::cout << message << "\n";
    }
}

}  // namespace speckle::cli
