#pragma once

#include "speckle/geometry.hpp"
#include "speckle/optics.hpp"
#include "speckle/synth.hpp"
#include "speckle/track.hpp"

#include <filesystem>
#include <string>

namespace speckle {

/// Every tunable of the toolkit. The file form is a JSON object with the
/// sections "optics", "synth", "geometry" and "track"; omitted keys keep
/// their defaults and unknown keys are rejected.
struct ToolkitConfig {
    OpticsConfig optics;
    SynthConfig synth;
    GeometryConfig geometry = GeometryConfig::beamline();  // used for integration and lens analysis
    TrackConfig track;

    void validate() const;
};

ToolkitConfig parse_config(const std::string& text);
ToolkitConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ToolkitConfig& cfg, int indent = 2);

/// Single-section serializers; the returned strings are JSON objects.
std::string to_json(const OpticsConfig& cfg);
std::string to_json(const SynthConfig& cfg);
std::string to_json(const GeometryConfig& cfg);
std::string to_json(const TrackConfig& cfg);

}  // namespace speckle
