#include "commands.hpp"

#include "cli_common.hpp"
#include "speckle/costvol.hpp"
#include "speckle/dataset.hpp"
#include "speckle/digest.hpp"
#include "speckle/error.hpp"
#include "speckle/optics.hpp"
#include "speckle/parallel.hpp"
#include "speckle/phase.hpp"
#include "speckle/synth.hpp"
#include "speckle/track.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace speckle::cli {

namespace {

std::string fmt(double v, int precision = 4) {
    std::ostringstream ss;
    ss.precision(precision);
    ss << v;
    return ss.str();
}

json config_json(const std::string& text) { return json::parse(text); }

// Geometry flags shared by integrate and lens. Explicit flags override the
// config file, which overrides the beamline defaults.
struct GeometryFlags {
    double energy_kev = 14.0;
    double wavelength_m = 0.0;
    double distance_m = 0.628;
    double pixel_um = 0.65;
    CLI::Option* energy = nullptr;
    CLI::Option* wavelength = nullptr;
    CLI::Option* distance = nullptr;
    CLI::Option* pixel = nullptr;

    void add(CLI::App& cmd) {
        energy = cmd.add_option("--energy-kev", energy_kev, "Photon energy (keV)")->capture_default_str();
        wavelength = cmd.add_option("--wavelength-m", wavelength_m, "Wavelength (m); overrides --energy-kev");
        distance = cmd.add_option("--distance-m", distance_m, "Sample-to-detector distance (m)")->capture_default_str();
        pixel = cmd.add_option("--pixel-um", pixel_um, "Detector pixel pitch (um)")->capture_default_str();
    }

    GeometryConfig resolve(const CommonOptions& common) const {
        GeometryConfig g = common.config.empty() ? GeometryConfig::beamline() : load_toolkit_config(common).geometry;
        if (wavelength->count() > 0) {
            g.wavelength_m = wavelength_m;
        } else if (energy->count() > 0 || common.config.empty()) {
            g.wavelength_m = wavelength_from_kev(energy_kev);
        }
        if (distance->count() > 0 || common.config.empty()) {
            g.mask_to_sample_m = 0.0;
            g.mask_to_camera_m = distance_m;
        }
        if (pixel->count() > 0 || common.config.empty()) g.pixel_pitch_m = pixel_um * 1e-6;
        g.validate();
        return g;
    }
};

json geometry_echo(const GeometryConfig& g) {
    const double hc_kev_m = 1.239841984e-9;
    return {{"wavelength_m", g.wavelength_m},
            {"energy_kev", hc_kev_m / g.wavelength_m},
            {"sample_to_detector_m", g.sample_to_camera_m()},
            {"pixel_pitch_m", g.pixel_pitch_m},
            {"displacement_per_gradient_px", g.displacement_per_gradient()}};
}

// ---------------------------------------------------------------- mask

struct MaskArgs {
    CommonOptions common;
    int size = 512;
    int pitch_px = 8;
    bool reference = true;
};

int run_mask(const MaskArgs& a) {
    const int threads = apply_threads(a.common);
    const ToolkitConfig cfg = load_toolkit_config(a.common);
    const fs::path dir = prepare_out_dir(a.common.out);
    const double pitch = cfg.synth.geometry.pixel_pitch_m;
    const CodedMask mask = generate_coded_mask(a.size, a.pitch_px, SeedContext(a.common.seed), pitch);

    json outputs = json::object();
    write_output(dir, "mask.spgrid", mask.pattern, GridSemantic::Feature, outputs);
    json summary = {{"command", "mask"},
                    {"seed", a.common.seed},
                    {"size", a.size},
                    {"pitch_px", a.pitch_px},
                    {"coarse_cells", mask.coarse.size()},
                    {"coarse_ones", mask.ones()}};
    Stopwatch sw;
    if (a.reference) {
        const Image2D ref = render_reference(mask, cfg.optics, pitch);
        write_output(dir, "reference.spgrid", ref, GridSemantic::Intensity, outputs);
        summary["optics"] = config_json(to_json(cfg.optics));
        summary["reference_mean"] = ref.mean();
        summary["speckle_contrast"] = speckle_contrast(ref, std::min(16, a.size / 8));
    }
    summary["outputs"] = outputs;
    summary["threads"] = threads;
    summary["timing"] = {{"seconds", sw.seconds()}};
    emit_summary(a.common, dir, summary,
                 "mask " + std::to_string(a.size) + "x" + std::to_string(a.size) + ", pitch " +
                     std::to_string(a.pitch_px) + ": " + std::to_string(mask.ones()) + " of " +
                     std::to_string(mask.coarse.size()) + " coarse cells open -> " + dir.string());
    return kOk;
}

// ---------------------------------------------------------------- dataset

struct DatasetArgs {
    CommonOptions common;
    int count = 10;
    int size = 512;
    int pitch_px = 8;
    double noise_sigma = 0.0;
    CLI::Option* noise = nullptr;
    bool verify = false;
    bool verify_only = false;
};

json verify_json(const VerifyReport& r) {
    return {{"pairs_checked", r.pairs_checked},
            {"digest_failures", r.digest_failures},
            {"forward_model_failures", r.forward_model_failures},
            {"mode", r.regenerated ? "regenerate" : "warp_apply"},
            {"ok", r.ok()},
            {"messages", r.messages}};
}

int run_dataset(const DatasetArgs& a) {
    const int threads = apply_threads(a.common);
    const fs::path dir = prepare_out_dir(a.common.out);
    json summary = {{"command", "dataset"}};
    json timing = json::object();
    int status = kOk;

    if (!a.verify_only) {
        const ToolkitConfig cfg = load_toolkit_config(a.common);
        DatasetOptions opts;
        opts.count = a.count;
        opts.master_seed = a.common.seed;
        opts.size = a.size;
        opts.mask_pitch_px = a.pitch_px;
        opts.optics = cfg.optics;
        opts.synth = cfg.synth;
        if (a.noise->count() > 0) opts.synth.noise_sigma = a.noise_sigma;
        Stopwatch sw;
        const DatasetManifest m = generate_dataset(opts, dir);
        timing["generate_seconds"] = sw.seconds();
        summary["seed"] = opts.master_seed;
        summary["count"] = opts.count;
        summary["size"] = opts.size;
        summary["pitch_px"] = opts.mask_pitch_px;
        summary["train"] = m.split.train.size();
        summary["validation"] = m.split.validation.size();
    }
    summary["outputs"] = {{"manifest.json", sha256_file(dir / "manifest.json")}};

    if (a.verify || a.verify_only) {
        Stopwatch sw;
        const VerifyReport report = verify_dataset(dir);
        timing["verify_seconds"] = sw.seconds();
        summary["verify"] = verify_json(report);
        if (!report.ok()) status = kVerification;
    }
    summary["threads"] = threads;
    summary["timing"] = timing;

    std::string msg = "dataset -> " + (dir / "manifest.json").string();
    if (summary.contains("count")) {
        msg += " (" + std::to_string(summary["train"].get<int>()) + " train, " +
               std::to_string(summary["validation"].get<int>()) + " validation)";
    }
    if (summary.contains("verify")) msg += status == kOk ? "; verify passed" : "; VERIFY FAILED";
    emit_summary(a.common, dir, summary, msg);
    if (status != kOk) {
        for (const auto& line : summary["verify"]["messages"]) std::cerr << line.get<std::string>() << "\n";
    }
    return status;
}

// ---------------------------------------------------------------- track

struct TrackArgs {
    CommonOptions common;
    std::string ref;
    std::string sample;
    std::string method = "dic";
    std::string truth;
    int template_half = -1;
    int search_half = -1;
    int pyramid_levels = -1;
    int level_search_half = -1;
    int stride = -1;
    std::string subpixel;
    bool no_median = false;
    double outlier_threshold = -1.0;
    int levels = 4;
    int search_range = 3;
    int patch_half = 3;
};

int run_track(const TrackArgs& a) {
    const int threads = apply_threads(a.common);
    ToolkitConfig cfg = load_toolkit_config(a.common);
    TrackConfig& tc = cfg.track;
    if (a.template_half >= 0) tc.template_half = a.template_half;
    if (a.search_half >= 0) tc.search_half = a.search_half;
    if (a.pyramid_levels >= 0) tc.pyramid_levels = a.pyramid_levels;
    if (a.level_search_half >= 0) tc.level_search_half = a.level_search_half;
    if (a.stride >= 0) tc.stride = a.stride;
    if (!a.subpixel.empty()) tc.subpixel = a.subpixel == "none" ? SubpixelMode::None : SubpixelMode::Parabolic;
    if (a.no_median) tc.median_transmission = false;
    if (a.outlier_threshold >= 0.0) tc.outlier_threshold = a.outlier_threshold;
    tc.validate();

    const Image2D ref = read_image(a.ref);
    const Image2D sample = read_image(a.sample);
    if (!ref.same_shape(sample)) {
        throw ParameterError("reference is " + std::to_string(ref.width()) + "x" + std::to_string(ref.height()) +
                             " but sample is " + std::to_string(sample.width()) + "x" +
                             std::to_string(sample.height()));
    }
    const fs::path dir = prepare_out_dir(a.common.out);
    const double pitch = ref.pixel_pitch();

    json summary = {{"command", "track"}, {"method", a.method}};
    json timing = json::object();
    VectorField2D disp;
    Image2D score;
    Image2D valid;
    Stopwatch sw;
    if (a.method == "dic" || a.method == "dic-pyramid") {
        MatchResult m = a.method == "dic" ? dic_track_full(ref, sample, tc) : dic_track_pyramid(ref, sample, tc);
        timing["track_seconds"] = sw.seconds();
        disp = std::move(m.displacement);
        score = std::move(m.peak_score);
        valid = std::move(m.valid_mask);
        summary["config"] = config_json(to_json(tc));
    } else if (a.method == "costvol") {
        MultiscaleOptions mo;
        mo.patch_half = a.patch_half;
        mo.subpixel = tc.subpixel == SubpixelMode::Parabolic;
        MultiscaleResult r = multiscale_costvol_track(ref, sample, a.levels, a.search_range, mo);
        timing["track_seconds"] = sw.seconds();
        timing["level_seconds"] = r.level_seconds;
        disp = std::move(r.displacement);
        score = std::move(r.peak_score);
        valid = Image2D(ref.width(), ref.height(), pitch, 1.0);
        summary["config"] = {{"levels", a.levels},
                             {"search_range", a.search_range},
                             {"patch_half", a.patch_half},
                             {"subpixel", mo.subpixel}};
        summary["planes"] = r.planes;
    } else {
        throw ParameterError("unknown method '" + a.method + "' (expected dic, dic-pyramid or costvol)");
    }

    Stopwatch tw;
    const Image2D transmission = transmission_recover(ref, sample, disp, tc.median_transmission);
    timing["transmission_seconds"] = tw.seconds();

    long long valid_count = 0;
    for (double v : valid.data()) valid_count += v > 0.5 ? 1 : 0;
    const double valid_fraction = static_cast<double>(valid_count) / static_cast<double>(valid.size());
    summary["valid_fraction"] = valid_fraction;
    summary["width"] = ref.width();
    summary["height"] = ref.height();

    json outputs = json::object();
    write_output(dir, "disp_x.spgrid", with_pitch(disp.dx(), pitch), GridSemantic::DispPxX, outputs);
    write_output(dir, "disp_y.spgrid", with_pitch(disp.dy(), pitch), GridSemantic::DispPxY, outputs);
    write_output(dir, "transmission.spgrid", with_pitch(transmission, pitch), GridSemantic::Transmission, outputs);
    write_output(dir, "score.spgrid", with_pitch(score, pitch), GridSemantic::Feature, outputs);
    write_output(dir, "valid.spgrid", with_pitch(valid, pitch), GridSemantic::Feature, outputs);
    summary["outputs"] = outputs;

    std::string msg = a.method + ": valid fraction " + fmt(valid_fraction) + ", " +
                      fmt(timing["track_seconds"].get<double>(), 3) + " s -> " + dir.string();
    if (!a.truth.empty()) {
        const fs::path t(a.truth);
        const VectorField2D truth_disp(read_image(t / "disp_x.spgrid"), read_image(t / "disp_y.spgrid"));
        const Image2D truth_t = read_image(t / "transmission.spgrid");
        const MetricsReport rep = prediction_loss(disp, transmission, truth_disp, truth_t, &valid);
        summary["loss"] = {{"L", rep.total},
                           {"term_dx", rep.term_dx},
                           {"term_dy", rep.term_dy},
                           {"term_t", rep.term_t},
                           {"percent_error", rep.percent_error},
                           {"regime", to_string(rep.regime)},
                           {"evaluated_on", "valid mask"},
                           {"notes", rep.notes}};
        msg += "; L = " + fmt(rep.total) + " (" + to_string(rep.regime) + ")";
    }
    summary["threads"] = threads;
    summary["timing"] = timing;
    emit_summary(a.common, dir, summary, msg);
    return kOk;
}

// ---------------------------------------------------------------- integrate

struct IntegrateArgs {
    CommonOptions common;
    std::string dx;
    std::string dy;
    GeometryFlags geometry;
    bool plot = false;
};

int run_integrate(const IntegrateArgs& a) {
    const int threads = apply_threads(a.common);
    const GeometryConfig g = a.geometry.resolve(a.common);
    const VectorField2D disp(read_image(a.dx), read_image(a.dy));
    if (!disp.dx().same_shape(disp.dy())) throw ParameterError("dx and dy grids differ in size");
    const fs::path dir = prepare_out_dir(a.common.out);

    Stopwatch sw;
    const auto [gx, gy] = displacement_to_gradient(disp, g);
    const Image2D phase = integrate_gradients(gx, gy);
    const double seconds = sw.seconds();

    json outputs = json::object();
    write_output(dir, "phase.spgrid", with_pitch(phase, g.pixel_pitch_m), GridSemantic::PhaseRad, outputs);
    if (a.plot) {
        write_pgm(dir / "phase.pgm", phase);
        outputs["phase.pgm"] = sha256_file(dir / "phase.pgm");
    }
    const json summary = {{"command", "integrate"},
                          {"geometry", geometry_echo(g)},
                          {"curl_rms_rad_per_px", gradient_curl_rms(gx, gy)},
                          {"phase_min_rad", phase.min()},
                          {"phase_max_rad", phase.max()},
                          {"outputs", outputs},
                          {"threads", threads},
                          {"timing", {{"seconds", seconds}}}};
    emit_summary(a.common, dir, summary,
                 "phase range [" + fmt(phase.min()) + ", " + fmt(phase.max()) + "] rad at " +
                     fmt(1.239841984e-9 / g.wavelength_m) + " keV, D = " + fmt(g.sample_to_camera_m()) + " m -> " +
                     dir.string());
    return kOk;
}

// ---------------------------------------------------------------- lens

struct LensArgs {
    CommonOptions common;
    std::string phase;
    double aperture_um = 800.0;
    double center_x = std::numeric_limits<double>::quiet_NaN();
    double center_y = std::numeric_limits<double>::quiet_NaN();
    GeometryFlags geometry;
};

int run_lens(const LensArgs& a) {
    const int threads = apply_threads(a.common);
    const GeometryConfig g = a.geometry.resolve(a.common);
    if (!(a.aperture_um > 0.0)) throw ParameterError("--aperture-um must be positive");
    const Image2D phase = read_image(a.phase);
    const double radius_px = 0.5 * a.aperture_um * 1e-6 / g.pixel_pitch_m;
    const double cx = std::isnan(a.center_x) ? 0.5 * (phase.width() - 1) : a.center_x;
    const double cy = std::isnan(a.center_y) ? 0.5 * (phase.height() - 1) : a.center_y;

    Stopwatch sw;
    const LensFit fit = fit_paraboloid(phase, cx, cy, radius_px);
    const double seconds = sw.seconds();
    const double k = 2.0 * std::numbers::pi / g.wavelength_m;
    const double p2 = g.pixel_pitch_m * g.pixel_pitch_m;
    // phi = -k r^2 / (2 f)  =>  f = -k p^2 / (2 a) with a in rad/px^2.
    auto focal = [&](double curvature) -> json {
        if (curvature == 0.0) return nullptr;
        return -k * p2 / (2.0 * curvature);
    };

    json outputs = json::object();
    std::string msg;
    fs::path dir;
    if (!a.common.out.empty()) {
        dir = prepare_out_dir(a.common.out);
        write_output(dir, "residual.spgrid", with_pitch(fit.residual, g.pixel_pitch_m), GridSemantic::PhaseRad,
                     outputs);
    }
    const json summary = {{"command", "lens"},
                          {"geometry", geometry_echo(g)},
                          {"aperture_um", a.aperture_um},
                          {"aperture_radius_px", radius_px},
                          {"aperture_pixels", fit.aperture_pixels},
                          {"center_px", {fit.center_x, fit.center_y}},
                          {"curvature_rad_per_px2", {fit.curvature_x, fit.curvature_y}},
                          {"focal_length_m", {focal(fit.curvature_x), focal(fit.curvature_y)}},
                          {"offset_rad", fit.offset},
                          {"residual_rms_rad", fit.residual_rms},
                          {"residual_rms_waves", fit.residual_rms / (2.0 * std::numbers::pi)},
                          {"residual_rms_m", fit.residual_rms / k},
                          {"outputs", outputs},
                          {"threads", threads},
                          {"timing", {{"seconds", seconds}}}};
    emit_summary(a.common, dir, summary,
                 "aperture radius " + fmt(radius_px, 5) + " px, residual rms " + fmt(fit.residual_rms) + " rad (" +
                     fmt(fit.residual_rms / (2.0 * std::numbers::pi)) + " lambda)");
    return kOk;
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs {
    CommonOptions common;
    std::string pred;
    std::string truth;
    std::string mask;
    int border = 0;
    std::string threshold = "high";
};

int run_metrics(const MetricsArgs& a) {
    const int threads = apply_threads(a.common);
    const ErrorRegime threshold = parse_regime(a.threshold);
    const fs::path pred(a.pred);
    const fs::path truth(a.truth);
    const VectorField2D pd(read_image(pred / "disp_x.spgrid"), read_image(pred / "disp_y.spgrid"));
    const Image2D pt = read_image(pred / "transmission.spgrid");
    const VectorField2D td(read_image(truth / "disp_x.spgrid"), read_image(truth / "disp_y.spgrid"));
    const Image2D tt = read_image(truth / "transmission.spgrid");
    if (!pd.same_shape(tt) || !pt.same_shape(tt) || !td.same_shape(tt)) {
        throw ParameterError("prediction and ground-truth grids differ in size");
    }
    if (a.border < 0 || 2 * a.border >= std::min(tt.width(), tt.height())) {
        throw ParameterError("--border leaves no pixels to evaluate");
    }
    Image2D mask(tt.width(), tt.height(), tt.pixel_pitch(), 1.0);
    if (!a.mask.empty()) {
        mask = read_image(a.mask);
        if (!mask.same_shape(tt)) throw ParameterError("mask grid differs in size");
    }
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (x < a.border || y < a.border || x >= mask.width() - a.border || y >= mask.height() - a.border) {
                mask(x, y) = 0.0;
            }
        }
    }
    const MetricsReport rep = prediction_loss(pd, pt, td, tt, &mask);
    const bool pass = static_cast<int>(rep.regime) <= static_cast<int>(threshold);
    fs::path dir;
    if (!a.common.out.empty()) dir = prepare_out_dir(a.common.out);
    const json summary = {{"command", "metrics"},
                          {"L", rep.total},
                          {"term_dx", rep.term_dx},
                          {"term_dy", rep.term_dy},
                          {"term_t", rep.term_t},
                          {"included", {{"dx", rep.dx_included}, {"dy", rep.dy_included}, {"t", rep.t_included}}},
                          {"percent_error", rep.percent_error},
                          {"percent_convention", "100 * L / number of included terms"},
                          {"regime", to_string(rep.regime)},
                          {"threshold", to_string(threshold)},
                          {"pass", pass},
                          {"border", a.border},
                          {"notes", rep.notes},
                          {"threads", threads}};
    emit_summary(a.common, dir, summary,
                 "L = " + fmt(rep.total, 6) + ", " + fmt(rep.percent_error) + " % -> " + to_string(rep.regime) +
                     (pass ? " (within " : " (exceeds ") + to_string(threshold) + ")");
    return pass ? kOk : kVerification;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    CommonOptions common;
    int size = 512;
    std::string method = "all";
    int repeats = 5;
    int pitch_px = 1;
    double amplitude = 5.0;
};

struct BenchRun {
    double seconds = 0.0;
    std::string digest;
    std::vector<double> level_seconds;
};

BenchRun bench_once(const std::string& method, const Image2D& ref, const Image2D& sample) {
    Stopwatch sw;
    BenchRun run;
    VectorField2D disp;
    if (method == "costvol") {
        MultiscaleResult r = multiscale_costvol_track(ref, sample, 4, 3);
        run.level_seconds = r.level_seconds;
        disp = std::move(r.displacement);
    } else {
        const TrackConfig tc;
        disp = (method == "dic" ? dic_track_full(ref, sample, tc) : dic_track_pyramid(ref, sample, tc)).displacement;
    }
    run.seconds = sw.seconds();
    run.digest = sha256_hex(digest_image(disp.dx()) + digest_image(disp.dy()));
    return run;
}

int run_bench(const BenchArgs& a) {
    const int threads = apply_threads(a.common);
    if (a.repeats < 1) throw ParameterError("--repeats must be at least 1");
    std::vector<std::string> methods;
    if (a.method == "all") {
        methods = {"dic", "dic-pyramid", "costvol"};
    } else if (a.method == "dic" || a.method == "dic-pyramid" || a.method == "costvol") {
        methods = {a.method};
    } else {
        throw ParameterError("unknown method '" + a.method + "' (expected dic, dic-pyramid, costvol or all)");
    }
    const ToolkitConfig cfg = load_toolkit_config(a.common);
    const double pitch = cfg.synth.geometry.pixel_pitch_m;
    const CodedMask mask = generate_coded_mask(a.size, a.pitch_px, SeedContext(a.common.seed), pitch);
    const Image2D ref = render_reference(mask, cfg.optics, pitch);
    const Image2D sample = warp_apply(ref, smooth_displacement_field(a.size, a.size, a.amplitude, pitch),
                                      Image2D(a.size, a.size, pitch, 1.0));

    json results = json::object();
    json timing = json::object();
    bool deterministic = true;
    std::map<std::string, double> medians;
    for (const auto& method : methods) {
        set_num_threads(1);
        const BenchRun single = bench_once(method, ref, sample);
        set_num_threads(threads);
        std::vector<double> times;
        bool same = true;
        std::vector<double> levels;
        for (int r = 0; r < a.repeats; ++r) {
            const BenchRun run = bench_once(method, ref, sample);
            times.push_back(run.seconds);
            same = same && run.digest == single.digest;
            if (r == 0) levels = run.level_seconds;
        }
        std::vector<double> sorted = times;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[sorted.size() / 2];
        medians[method] = median;
        deterministic = deterministic && same;
        results[method] = {{"digest", single.digest}, {"deterministic_vs_1_thread", same}};
        timing[method] = {{"median_seconds", median}, {"runs", times}, {"single_thread_seconds", single.seconds}};
        if (!levels.empty()) timing[method]["level_seconds"] = levels;
    }
    if (medians.count("dic") && medians.count("dic-pyramid")) {
        timing["pyramid_speedup"] = medians["dic"] / medians["dic-pyramid"];
    }
    fs::path dir;
    if (!a.common.out.empty()) dir = prepare_out_dir(a.common.out);
    const json summary = {{"command", "bench"},
                          {"size", a.size},
                          {"pitch_px", a.pitch_px},
                          {"repeats", a.repeats},
                          {"methods", results},
                          {"deterministic", deterministic},
                          {"threads", threads},
                          {"timing", timing}};
    std::string msg;
    for (const auto& [m, t] : medians) msg += m + " " + fmt(t, 3) + " s; ";
    if (timing.contains("pyramid_speedup")) msg += "pyramid speedup " + fmt(timing["pyramid_speedup"].get<double>(), 3) + "x; ";
    msg += deterministic ? "digests match 1 thread" : "DIGEST MISMATCH across thread counts";
    emit_summary(a.common, dir, summary, msg);
    if (!deterministic) throw VerificationError("bench outputs differ between 1 and " + std::to_string(threads) + " threads");
    return kOk;
}

}  // namespace

void register_commands(CLI::App& app, std::function<int()>& action) {
    app.require_subcommand(1);

    auto mask = std::make_shared<MaskArgs>();
    auto* m = app.add_subcommand("mask", "Generate a coded mask and its speckle reference image");
    add_common_options(*m, mask->common, true);
    m->add_option("--size", mask->size, "Mask size M (pixels)")->capture_default_str();
    m->add_option("--pitch-px", mask->pitch_px, "Mask pitch n (pixels)")->capture_default_str();
    m->add_flag("!--no-reference", mask->reference, "Skip the propagated reference image");
    m->callback([&action, mask] { action = [mask] { return run_mask(*mask); }; });

    auto ds = std::make_shared<DatasetArgs>();
    auto* d = app.add_subcommand("dataset", "Generate a seeded dataset of reference/sample pairs with a manifest");
    add_common_options(*d, ds->common, true);
    d->add_option("--count", ds->count, "Number of pairs")->capture_default_str();
    d->add_option("--size", ds->size, "Image size (pixels)")->capture_default_str();
    d->add_option("--pitch-px", ds->pitch_px, "Coded-mask pitch (pixels)")->capture_default_str();
    ds->noise = d->add_option("--noise-sigma", ds->noise_sigma, "Additive noise, fraction of mean reference intensity");
    d->add_flag("--verify", ds->verify, "Run the forward-model audit after generation");
    d->add_flag("--verify-only", ds->verify_only, "Audit an existing dataset in --out without generating");
    d->callback([&action, ds] { action = [ds] { return run_dataset(*ds); }; });

    auto tr = std::make_shared<TrackArgs>();
    auto* t = app.add_subcommand("track", "Recover displacement and transmission from a reference/sample pair");
    add_common_options(*t, tr->common, true);
    t->add_option("--ref", tr->ref, "Reference grid (SPGRID1)")->required();
    t->add_option("--sample", tr->sample, "Sample grid (SPGRID1)")->required();
    t->add_option("--method", tr->method, "dic | dic-pyramid | costvol")->capture_default_str();
    t->add_option("--truth", tr->truth, "Pair directory with ground truth; adds the loss to the summary");
    t->add_option("--template-half", tr->template_half, "DIC template half-width");
    t->add_option("--search-half", tr->search_half, "DIC full-search half-width");
    t->add_option("--pyramid-levels", tr->pyramid_levels, "DIC pyramid levels");
    t->add_option("--level-search-half", tr->level_search_half, "DIC per-level search half-width");
    t->add_option("--stride", tr->stride, "DIC pixel stride");
    t->add_option("--subpixel", tr->subpixel, "parabolic | none")->check(CLI::IsMember({"parabolic", "none"}));
    t->add_flag("--no-median", tr->no_median, "Skip the 3x3 median on the recovered transmission");
    t->add_option("--outlier-threshold", tr->outlier_threshold, "DIC normalized median validity threshold (0 = off)");
    t->add_option("--levels", tr->levels, "Cost-volume pyramid levels")->capture_default_str();
    t->add_option("--search-range", tr->search_range, "Cost-volume search range N per level")->capture_default_str();
    t->add_option("--patch-half", tr->patch_half, "Cost-volume feature neighbourhood half-width (0 = raw intensity)")
        ->capture_default_str();
    t->callback([&action, tr] { action = [tr] { return run_track(*tr); }; });

    auto in = std::make_shared<IntegrateArgs>();
    auto* i = app.add_subcommand("integrate", "Integrate displacement grids into a phase map");
    add_common_options(*i, in->common, true);
    i->add_option("--dx", in->dx, "Horizontal displacement grid")->required();
    i->add_option("--dy", in->dy, "Vertical displacement grid")->required();
    in->geometry.add(*i);
    i->add_flag("--plot", in->plot, "Also write phase.pgm");
    i->callback([&action, in] { action = [in] { return run_integrate(*in); }; });

    auto ln = std::make_shared<LensArgs>();
    auto* l = app.add_subcommand("lens", "Fit and subtract a paraboloid inside a circular aperture");
    add_common_options(*l, ln->common, false);
    l->add_option("--phase", ln->phase, "Phase grid (rad)")->required();
    l->add_option("--aperture-um", ln->aperture_um, "Aperture diameter (um)")->capture_default_str();
    l->add_option("--center-x", ln->center_x, "Aperture centre x (px); default image centre");
    l->add_option("--center-y", ln->center_y, "Aperture centre y (px); default image centre");
    ln->geometry.add(*l);
    l->callback([&action, ln] { action = [ln] { return run_lens(*ln); }; });

    auto me = std::make_shared<MetricsArgs>();
    auto* mt = app.add_subcommand("metrics", "Relative-error loss and regime of predicted grids against truth");
    add_common_options(*mt, me->common, false);
    mt->add_option("--pred", me->pred, "Directory with disp_x, disp_y, transmission grids")->required();
    mt->add_option("--truth", me->truth, "Directory with ground-truth grids")->required();
    mt->add_option("--mask", me->mask, "Grid selecting evaluated pixels (> 0.5)");
    mt->add_option("--border", me->border, "Exclude this many border pixels")->capture_default_str();
    mt->add_option("--threshold", me->threshold, "Highest regime that still exits 0")
        ->check(CLI::IsMember({"low", "medium", "high"}))
        ->capture_default_str();
    mt->callback([&action, me] { action = [me] { return run_metrics(*me); }; });

    auto be = std::make_shared<BenchArgs>();
    auto* b = app.add_subcommand("bench", "Median-of-N timings and thread-count determinism of the trackers");
    add_common_options(*b, be->common, false);
    b->add_option("--size", be->size, "Image size (pixels)")->capture_default_str();
    b->add_option("--method", be->method, "dic | dic-pyramid | costvol | all")->capture_default_str();
    b->add_option("--repeats", be->repeats, "Timed runs per method")->capture_default_str();
    b->add_option("--pitch-px", be->pitch_px, "Coded-mask pitch of the synthetic reference")->capture_default_str();
    b->add_option("--amplitude", be->amplitude, "Peak displacement of the smooth test field (px)")
        ->capture_default_str();
    b->callback([&action, be] { action = [be] { return run_bench(*be); }; });
}

}  // namespace speckle::cli
