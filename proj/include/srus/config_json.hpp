#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "srus/errors.hpp"
#include "srus/grid.hpp"
#include "srus/localize.hpp"
#include "srus/preprocess.hpp"
#include "srus/svd_filter.hpp"
#include "srus/synth.hpp"

// JSON (de)serialization for every user-facing configuration structure.
// Field names use explicit units so config files read unambiguously.

namespace srus {

using Json = nlohmann::json;

inline void to_json(Json& j, const GridGeometry& g) {
    j = Json{{"ny", g.ny},         {"nx", g.nx},
             {"dy_m", g.dy},       {"dx_m", g.dx},
             {"dt_s", g.dt},       {"wavelength_m", g.wavelength}};
}

inline void from_json(const Json& j, GridGeometry& g) {
    GridGeometry d;
    g.ny = j.value("ny", d.ny);
    g.nx = j.value("nx", d.nx);
    g.dy = j.value("dy_m", d.dy);
    g.dx = j.value("dx_m", d.dx);
    g.dt = j.value("dt_s", d.dt);
    g.wavelength = j.value("wavelength_m", d.wavelength);
}

inline void to_json(Json& j, const SvdFilterConfig& c) {
    j = Json{{"rel_threshold", c.rel_threshold}, {"drop_smallest", c.drop_smallest}};
}

inline void from_json(const Json& j, SvdFilterConfig& c) {
    SvdFilterConfig d;
    c.rel_threshold = j.value("rel_threshold", d.rel_threshold);
    c.drop_smallest = j.value("drop_smallest", d.drop_smallest);
}

inline void to_json(Json& j, const PreprocessConfig& c) {
    j = Json{{"factor_y", c.factor_y},
             {"factor_x", c.factor_x},
             {"method", to_string(c.method)},
             {"smooth_sigma_m", c.smooth_sigma}};
}

inline void from_json(const Json& j, PreprocessConfig& c) {
    PreprocessConfig d;
    c.factor_y = j.value("factor_y", d.factor_y);
    c.factor_x = j.value("factor_x", d.factor_x);
    c.method = interp_method_from_string(j.value("method", std::string("bicubic")));
    c.smooth_sigma = j.value("smooth_sigma_m", d.smooth_sigma);
}

inline std::string to_string(MarkerMode m) {
    return m == MarkerMode::Subtractive ? "subtractive" : "multiplicative";
}

inline MarkerMode marker_mode_from_string(const std::string& s) {
    if (s == "subtractive") return MarkerMode::Subtractive;
    if (s == "multiplicative") return MarkerMode::Multiplicative;
    throw ConfigError("unknown marker mode: " + s);
}

inline void to_json(Json& j, const LocalizeConfig& c) {
    j = Json{{"h", c.h},
             {"mode", to_string(c.mode)},
             {"retention_fraction", c.retention_fraction},
             {"region_floor", c.region_floor},
             {"psf_sigma_m", c.psf_sigma},
             {"baseline_threshold", c.baseline_threshold},
             {"connectivity", c.connectivity}};
}

inline void from_json(const Json& j, LocalizeConfig& c) {
    LocalizeConfig d;
    c.h = j.value("h", d.h);
    c.mode = marker_mode_from_string(j.value("mode", std::string("subtractive")));
    c.retention_fraction = j.value("retention_fraction", d.retention_fraction);
    c.region_floor = j.value("region_floor", d.region_floor);
    c.psf_sigma = j.value("psf_sigma_m", d.psf_sigma);
    c.baseline_threshold = j.value("baseline_threshold", d.baseline_threshold);
    c.connectivity = j.value("connectivity", d.connectivity);
}

inline void to_json(Json& j, const VesselSpec& v) {
    j = Json{{"y0_m", v.y0},       {"x0_m", v.x0},
             {"y1_m", v.y1},       {"x1_m", v.x1},
             {"diameter_m", v.diameter},
             {"flow_mps", v.flow_speed},
             {"bubbles_per_frame", v.bubbles_per_frame},
             {"amp_lo", v.amp_lo}, {"amp_hi", v.amp_hi}};
}

inline void from_json(const Json& j, VesselSpec& v) {
    VesselSpec d;
    v.y0 = j.value("y0_m", d.y0);
    v.x0 = j.value("x0_m", d.x0);
    v.y1 = j.value("y1_m", d.y1);
    v.x1 = j.value("x1_m", d.x1);
    v.diameter = j.value("diameter_m", d.diameter);
    v.flow_speed = j.value("flow_mps", d.flow_speed);
    v.bubbles_per_frame = j.value("bubbles_per_frame", d.bubbles_per_frame);
    v.amp_lo = j.value("amp_lo", d.amp_lo);
    v.amp_hi = j.value("amp_hi", d.amp_hi);
}

inline void to_json(Json& j, const PhantomSpec& s) {
    j = Json{{"geometry", s.geometry},
             {"vessels", s.vessels},
             {"psf_sigma_m", s.psf_sigma},
             {"clutter_amplitude", s.clutter_amplitude},
             {"clutter_drift", s.clutter_drift},
             {"noise_rel", s.noise_rel},
             {"nframes", s.nframes},
             {"warmup_frames", s.warmup_frames},
             {"seed", s.seed},
             {"mask_factor_y", s.mask_factor_y},
             {"mask_factor_x", s.mask_factor_x},
             {"elongated_psf", s.elongated_psf}};
}

inline void from_json(const Json& j, PhantomSpec& s) {
    PhantomSpec d;
    s.geometry = j.value("geometry", d.geometry);
    s.vessels = j.value("vessels", d.vessels);
    s.psf_sigma = j.value("psf_sigma_m", d.psf_sigma);
    s.clutter_amplitude = j.value("clutter_amplitude", d.clutter_amplitude);
    s.clutter_drift = j.value("clutter_drift", d.clutter_drift);
    s.noise_rel = j.value("noise_rel", d.noise_rel);
    s.nframes = j.value("nframes", d.nframes);
    s.warmup_frames = j.value("warmup_frames", d.warmup_frames);
    s.seed = j.value("seed", d.seed);
    s.mask_factor_y = j.value("mask_factor_y", d.mask_factor_y);
    s.mask_factor_x = j.value("mask_factor_x", d.mask_factor_x);
    s.elongated_psf = j.value("elongated_psf", d.elongated_psf);
}

} // namespace srus
