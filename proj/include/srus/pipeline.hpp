#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "srus/config_json.hpp"
#include "srus/csv.hpp"
#include "srus/errors.hpp"
#include "srus/evaluate.hpp"
#include "srus/fst.hpp"
#include "srus/grid.hpp"
#include "srus/localize.hpp"
#include "srus/preprocess.hpp"
#include "srus/render.hpp"
#include "srus/svd_filter.hpp"

namespace srus {

struct PipelineConfig {
    std::string input;         // FST stack to process
    std::string output_prefix; // <prefix>_sr.pgm/.json/.fst, _peaks.csv, _report.json
    std::string mask;          // optional FST mask; enables the accuracy report
    SvdFilterConfig svd;
    PreprocessConfig pre;
    LocalizeConfig loc;
    double sr_sigma = 0.0; // meters; 0 selects wavelength/8
    bool baseline = false; // threshold baseline instead of dome extraction
    double noise_rel = 0.0;
    std::uint64_t seed = 1;
    int threads = 1;
    std::vector<double> tolerances = {0.0, 20e-6, 50e-6}; // meters

    void validate() const {
        svd.validate();
        pre.validate();
        loc.validate();
        if (threads < 1) throw ConfigError("pipeline: threads must be >= 1");
        if (!(noise_rel >= 0)) throw ConfigError("pipeline: noise_rel must be >= 0");
        if (!(sr_sigma >= 0)) throw ConfigError("pipeline: sr_sigma must be >= 0");
    }
};

inline void to_json(Json& j, const PipelineConfig& c) {
    j = Json{{"input", c.input},
             {"output_prefix", c.output_prefix},
             {"mask", c.mask},
             {"svd", c.svd},
             {"preprocess", c.pre},
             {"localize", c.loc},
             {"sr_sigma_m", c.sr_sigma},
             {"baseline", c.baseline},
             {"noise_rel", c.noise_rel},
             {"seed", c.seed},
             {"threads", c.threads},
             {"tolerances_m", c.tolerances}};
}

inline void from_json(const Json& j, PipelineConfig& c) {
    PipelineConfig d;
    c.input = j.value("input", d.input);
    c.output_prefix = j.value("output_prefix", d.output_prefix);
    c.mask = j.value("mask", d.mask);
    c.svd = j.value("svd", d.svd);
    c.pre = j.value("preprocess", d.pre);
    c.loc = j.value("localize", d.loc);
    c.sr_sigma = j.value("sr_sigma_m", d.sr_sigma);
    c.baseline = j.value("baseline", d.baseline);
    c.noise_rel = j.value("noise_rel", d.noise_rel);
    c.seed = j.value("seed", d.seed);
    c.threads = j.value("threads", d.threads);
    c.tolerances = j.value("tolerances_m", d.tolerances);
}

struct StageTiming {
    double svd_ms = 0.0;
    double per_frame_ms_mean = 0.0;
    double per_frame_ms_std = 0.0;
};

struct PipelineResult {
    SRImage sr;
    std::vector<Localization> peaks; // frame-ordered
    std::vector<int> peaks_per_frame;
    StageTiming timing;
    bool blank = false; // post-filter stack was constant; nothing to localize
};

namespace detail {

inline void mean_std(const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    sd = 0.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / static_cast<double>(v.size()));
}

// Round every sample through float32. Pins intermediate precision to the FST
// interchange format so staged CLI runs match the monolithic pipeline
// bit-for-bit.
inline void quantize_f32(FrameStack& s) {
    for (auto& f : s.frames)
        for (double& v : f) v = static_cast<double>(static_cast<float>(v));
}

template <class Fn>
void parallel_frames(int nframes, int threads, Fn&& fn) {
    if (threads <= 1 || nframes <= 1) {
        for (int t = 0; t < nframes; ++t) fn(t);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int t; (t = next.fetch_add(1)) < nframes;) fn(t);
    };
    std::vector<std::thread> pool;
    int n = std::min(threads, nframes);
    pool.reserve(n);
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

} // namespace detail

// Filtering front half of the pipeline: optional noise injection, global
// normalization, SVD clutter filtering, renormalization, float32 pinning.
// A constant post-filter stack comes back as all zeros (nothing to localize).
inline FrameStack filter_stage(const FrameStack& input, const PipelineConfig& cfg,
                               double* svd_ms = nullptr) {
    FrameStack stack = cfg.noise_rel > 0 ? add_noise(input, cfg.noise_rel, cfg.seed) : input;
    FrameStack norm = normalize_stack(stack);
    auto t0 = std::chrono::steady_clock::now();
    FrameStack filt = svd_clutter_filter(norm, cfg.svd);
    if (svd_ms)
        *svd_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    auto [lo, hi] = stack_min_max(filt);
    // The input was normalized to [0,1], so anything this far down is solver
    // dust, not signal; renormalizing it would amplify noise to full scale.
    if (!(hi - lo > 1e-6)) {
        for (auto& f : filt.frames) std::fill(f.begin(), f.end(), 0.0);
    } else {
        filt = normalize_stack(filt);
    }
    detail::quantize_f32(filt);
    return filt;
}

// Per-frame back half: interpolate, smooth, localize. frame_index is stamped
// on every localization.
inline std::vector<Localization> localize_stage_frame(const Frame& fr, int frame_index,
                                                      const PipelineConfig& cfg) {
    Frame up = interpolate(fr, cfg.pre.factor_y, cfg.pre.factor_x, cfg.pre.method);
    Frame sm = gaussian_smooth(up, cfg.pre.smooth_sigma);
    std::vector<Localization> locs =
        cfg.baseline ? threshold_baseline(sm, cfg.loc) : localize_frame(sm, cfg.loc);
    for (auto& l : locs) l.frame_index = frame_index;
    return locs;
}

inline GridGeometry fine_geometry(const GridGeometry& g, const PreprocessConfig& pre) {
    GridGeometry f = g;
    f.ny = g.ny * pre.factor_y;
    f.nx = g.nx * pre.factor_x;
    f.dy = g.dy / pre.factor_y;
    f.dx = g.dx / pre.factor_x;
    return f;
}

// Whole pipeline on an in-memory stack. Frames are processed in parallel;
// results are reduced in frame order, so the output is identical for any
// thread count.
inline PipelineResult run_pipeline_stack(const FrameStack& input, const PipelineConfig& cfg) {
    cfg.validate();
    check_stack(input);

    PipelineResult res;
    FrameStack filt;
    try {
        filt = filter_stage(input, cfg, &res.timing.svd_ms);
    } catch (const DataError& e) {
        throw DataError(std::string("filter stage: ") + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("filter stage: ") + e.what());
    }

    const int n = filt.nframes();
    std::vector<std::vector<Localization>> per_frame(n);
    std::vector<double> frame_ms(n, 0.0);
    std::vector<std::string> frame_err(n);
    detail::parallel_frames(n, cfg.threads, [&](int t) {
        auto t0 = std::chrono::steady_clock::now();
        try {
            per_frame[t] = localize_stage_frame(filt.frame(t), t, cfg);
        } catch (const std::exception& e) {
            frame_err[t] = e.what();
        }
        frame_ms[t] = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    });
    for (int t = 0; t < n; ++t)
        if (!frame_err[t].empty())
            throw DataError("localize stage: frame " + std::to_string(t) + ": " + frame_err[t]);

    res.peaks_per_frame.resize(n);
    for (int t = 0; t < n; ++t) {
        res.peaks_per_frame[t] = static_cast<int>(per_frame[t].size());
        res.peaks.insert(res.peaks.end(), per_frame[t].begin(), per_frame[t].end());
    }
    detail::mean_std(frame_ms, res.timing.per_frame_ms_mean, res.timing.per_frame_ms_std);

    res.sr = accumulate_sr(res.peaks, fine_geometry(filt.geom, cfg.pre), cfg.sr_sigma);
    res.blank = res.peaks.empty();
    return res;
}

// File-level pipeline run: reads cfg.input, writes <prefix>_sr.{pgm,json,fst},
// <prefix>_peaks.csv and <prefix>_report.json.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    if (cfg.input.empty() || cfg.output_prefix.empty())
        throw ConfigError("pipeline: input and output_prefix are required");
    FrameStack input = load_stack(cfg.input);
    PipelineResult res = run_pipeline_stack(input, cfg);

    write_peaks_csv(res.peaks, cfg.output_prefix + "_peaks.csv");
    auto [lo, hi] = write_pgm16(res.sr, cfg.output_prefix + "_sr.pgm");
    {
        FrameStack sr_stack{res.sr.geom, {res.sr.data}};
        save_stack(sr_stack, cfg.output_prefix + "_sr.fst");
    }

    Json report;
    report["config"] = cfg;
    report["nframes"] = input.nframes();
    report["n_localizations"] = static_cast<long>(res.peaks.size());
    {
        std::vector<double> ppf(res.peaks_per_frame.begin(), res.peaks_per_frame.end());
        double m, s;
        detail::mean_std(ppf, m, s);
        report["peaks_per_frame_mean"] = m;
        report["peaks_per_frame_std"] = s;
    }
    report["svd_ms"] = res.timing.svd_ms;
    report["per_frame_ms_mean"] = res.timing.per_frame_ms_mean;
    report["per_frame_ms_std"] = res.timing.per_frame_ms_std;
    report["sr"] = Json{{"min", lo}, {"max", hi},
                        {"geometry", res.sr.geom},
                        {"n_localizations", res.sr.n_localizations}};
    std::ofstream(cfg.output_prefix + "_sr.json") << Json(report["sr"]).dump(2) << '\n';

    if (!cfg.mask.empty()) {
        VesselMask mask = load_mask(cfg.mask);
        AccuracyReport acc = in_vessel_fraction(res.peaks, mask, cfg.tolerances);
        Json ja;
        ja["n_total"] = acc.n_total;
        ja["tolerances_m"] = acc.tolerances;
        ja["n_within"] = acc.n_within;
        ja["defined"] = acc.defined;
        if (acc.defined) ja["fraction_within"] = acc.fraction_within;
        report["accuracy"] = ja;
    }
    std::ofstream rep(cfg.output_prefix + "_report.json");
    if (!rep) throw DataError("cannot open for writing: " + cfg.output_prefix + "_report.json");
    rep << report.dump(2) << '\n';
    return res;
}

// One row of the benchmark study.
struct BenchRow {
    int factor = 1;
    double h = 0.0;       // ignored for the baseline method
    bool baseline = false;
    double ms_mean = 0.0, ms_std = 0.0;
    double peaks_mean = 0.0, peaks_std = 0.0;
};

// Per-frame localization cost and yield across interpolation factors and
// offsets. SVD filtering runs once up front and is excluded from the timings.
inline std::vector<BenchRow> bench(const FrameStack& input, const PipelineConfig& base_cfg,
                                   const std::vector<int>& factors,
                                   const std::vector<double>& h_values, int repeats) {
    if (repeats < 3) throw ConfigError("bench: repeats must be >= 3");
    if (factors.empty() || h_values.empty())
        throw ConfigError("bench: need at least one factor and one h");
    base_cfg.validate();

    FrameStack filt = filter_stage(input, base_cfg);
    const int n = filt.nframes();

    auto run_variant = [&](int factor, double h, bool baseline) {
        PipelineConfig cfg = base_cfg;
        cfg.pre.factor_y = factor;
        cfg.pre.factor_x = factor;
        cfg.loc.h = h;
        cfg.baseline = baseline;
        std::vector<double> ms;
        std::vector<double> peaks;
        ms.reserve(static_cast<size_t>(n) * repeats);
        for (int r = 0; r < repeats; ++r)
            for (int t = 0; t < n; ++t) {
                auto t0 = std::chrono::steady_clock::now();
                auto locs = localize_stage_frame(filt.frame(t), t, cfg);
                ms.push_back(std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count());
                if (r == 0) peaks.push_back(static_cast<double>(locs.size()));
            }
        BenchRow row;
        row.factor = factor;
        row.h = h;
        row.baseline = baseline;
        detail::mean_std(ms, row.ms_mean, row.ms_std);
        detail::mean_std(peaks, row.peaks_mean, row.peaks_std);
        return row;
    };

    std::vector<BenchRow> rows;
    for (int f : factors) {
        for (double h : h_values) rows.push_back(run_variant(f, h, false));
        rows.push_back(run_variant(f, base_cfg.loc.h, true));
    }
    return rows;
}

inline void to_json(Json& j, const BenchRow& r) {
    j = Json{{"factor", r.factor},       {"h", r.h},
             {"baseline", r.baseline},   {"ms_mean", r.ms_mean},
             {"ms_std", r.ms_std},       {"peaks_mean", r.peaks_mean},
             {"peaks_std", r.peaks_std}};
}

} // namespace srus
