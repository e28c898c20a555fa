#include "speckle/config.hpp"

#include "speckle/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace speckle {

using nlohmann::json;

namespace {

json optics_json(const OpticsConfig& c) {
    return {{"wavelength_m", c.wavelength_m}, {"distance_m", c.distance_m},   {"amplitude", c.amplitude},
            {"modulation", c.modulation},     {"mask_phase", c.mask_phase},   {"detector_blur_px", c.detector_blur_px}};
}

json geometry_json(const GeometryConfig& c) {
    return {{"wavelength_m", c.wavelength_m},
            {"mask_to_sample_m", c.mask_to_sample_m},
            {"mask_to_camera_m", c.mask_to_camera_m},
            {"pixel_pitch_m", c.pixel_pitch_m}};
}

json synth_json(const SynthConfig& c) {
    return {{"noise_blur_px", c.noise_blur_px},
            {"phase_scale_min", c.phase_scale_min},
            {"phase_scale_max", c.phase_scale_max},
            {"transmission_depth_min", c.transmission_depth_min},
            {"transmission_depth_max", c.transmission_depth_max},
            {"correlated_fraction", c.correlated_fraction},
            {"contour_points_min", c.contour_points_min},
            {"contour_points_max", c.contour_points_max},
            {"contour_perturbation", c.contour_perturbation},
            {"edge_blur_px", c.edge_blur_px},
            {"noise_sigma", c.noise_sigma},
            {"geometry", geometry_json(c.geometry)}};
}

json track_json(const TrackConfig& c) {
    return {{"template_half", c.template_half},
            {"search_half", c.search_half},
            {"pyramid_levels", c.pyramid_levels},
            {"level_search_half", c.level_search_half},
            {"subpixel", c.subpixel == SubpixelMode::Parabolic ? "parabolic" : "none"},
            {"stride", c.stride},
            {"median_transmission", c.median_transmission},
            {"outlier_threshold", c.outlier_threshold},
            {"outlier_epsilon", c.outlier_epsilon}};
}

// Copies recognised keys into the target, rejecting unknown ones.
class Reader {
public:
    Reader(const json& j, std::string section) : j_(j), section_(std::move(section)) {
        if (!j_.is_object()) throw ParameterError("config section '" + section_ + "' must be an object");
    }
    template <typename T>
    Reader& get(const char* key, T& target) {
        seen_.insert(key);
        if (!j_.contains(key)) return *this;
        try {
            target = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ParameterError("config key '" + section_ + "." + key + "' has the wrong type");
        }
        return *this;
    }
    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) throw ParameterError("unknown config key '" + section_ + "." + key + "'");
        }
    }

private:
    const json& j_;
    std::string section_;
    std::set<std::string> seen_;
};

void read_geometry(const json& j, GeometryConfig& c, const std::string& section) {
    Reader r(j, section);
    r.get("wavelength_m", c.wavelength_m)
        .get("mask_to_sample_m", c.mask_to_sample_m)
        .get("mask_to_camera_m", c.mask_to_camera_m)
        .get("pixel_pitch_m", c.pixel_pitch_m);
    r.finish();
}

}  // namespace

void ToolkitConfig::validate() const {
    optics.validate();
    synth.validate();
    geometry.validate();
    track.validate();
}

ToolkitConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParameterError(std::string("config is not valid JSON: ") + e.what());
    }
    ToolkitConfig cfg;
    Reader top(root, "config");
    if (const json* j = top.child("optics")) {
        Reader r(*j, "optics");
        r.get("wavelength_m", cfg.optics.wavelength_m)
            .get("distance_m", cfg.optics.distance_m)
            .get("amplitude", cfg.optics.amplitude)
            .get("modulation", cfg.optics.modulation)
            .get("mask_phase", cfg.optics.mask_phase)
            .get("detector_blur_px", cfg.optics.detector_blur_px);
        r.finish();
    }
    if (const json* j = top.child("synth")) {
        Reader r(*j, "synth");
        auto& s = cfg.synth;
        r.get("noise_blur_px", s.noise_blur_px)
            .get("phase_scale_min", s.phase_scale_min)
            .get("phase_scale_max", s.phase_scale_max)
            .get("transmission_depth_min", s.transmission_depth_min)
            .get("transmission_depth_max", s.transmission_depth_max)
            .get("correlated_fraction", s.correlated_fraction)
            .get("contour_points_min", s.contour_points_min)
            .get("contour_points_max", s.contour_points_max)
            .get("contour_perturbation", s.contour_perturbation)
            .get("edge_blur_px", s.edge_blur_px)
            .get("noise_sigma", s.noise_sigma);
        if (const json* g = r.child("geometry")) read_geometry(*g, s.geometry, "synth.geometry");
        r.finish();
    }
    if (const json* j = top.child("geometry")) read_geometry(*j, cfg.geometry, "geometry");
    if (const json* j = top.child("track")) {
        Reader r(*j, "track");
        std::string subpixel = cfg.track.subpixel == SubpixelMode::Parabolic ? "parabolic" : "none";
        r.get("template_half", cfg.track.template_half)
            .get("search_half", cfg.track.search_half)
            .get("pyramid_levels", cfg.track.pyramid_levels)
            .get("level_search_half", cfg.track.level_search_half)
            .get("subpixel", subpixel)
            .get("stride", cfg.track.stride)
            .get("median_transmission", cfg.track.median_transmission)
            .get("outlier_threshold", cfg.track.outlier_threshold)
            .get("outlier_epsilon", cfg.track.outlier_epsilon);
        r.finish();
        if (subpixel == "parabolic") {
            cfg.track.subpixel = SubpixelMode::Parabolic;
        } else if (subpixel == "none") {
            cfg.track.subpixel = SubpixelMode::None;
        } else {
            throw ParameterError("track.subpixel must be 'parabolic' or 'none'");
        }
    }
    top.finish();
    cfg.validate();
    return cfg;
}

ToolkitConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ToolkitConfig& cfg, int indent) {
    const json j = {{"optics", optics_json(cfg.optics)},
                    {"synth", synth_json(cfg.synth)},
                    {"geometry", geometry_json(cfg.geometry)},
                    {"track", track_json(cfg.track)}};
    return j.dump(indent);
}

std::string to_json(const OpticsConfig& cfg) { return optics_json(cfg).dump(); }
std::string to_json(const SynthConfig& cfg) { return synth_json(cfg).dump(); }
std::string to_json(const GeometryConfig& cfg) { return geometry_json(cfg).dump(); }
std::string to_json(const TrackConfig& cfg) { return track_json(cfg).dump(); }

}  // namespace speckle
