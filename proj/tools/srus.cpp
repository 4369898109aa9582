// Command-line driver for the morphological-reconstruction super-resolution
// ultrasound pipeline. Subcommands mirror the pipeline stages; `run` composes
// them end to end. Exit codes: 0 ok, 2 config error, 3 data error,
// 4 numerical error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "srus/config_json.hpp"
#include "srus/csv.hpp"
#include "srus/evaluate.hpp"
#include "srus/fst.hpp"
#include "srus/pipeline.hpp"
#include "srus/render.hpp"
#include "srus/synth.hpp"
#include "srus/track.hpp"

namespace {

std::pair<int, int> parse_interp(const std::string& s) {
    auto x = s.find('x');
    try {
        if (x == std::string::npos) {
            int f = std::stoi(s);
            return {f, f};
        }
        return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
    } catch (const std::exception&) {
        throw srus::ConfigError("bad --interp value, expected N or NyxNx: " + s);
    }
}

std::vector<long> parse_rect(const std::string& s, const srus::GridGeometry& g) {
    int r0, c0, r1, c1;
    if (std::sscanf(s.c_str(), "%d,%d,%d,%d", &r0, &c0, &r1, &c1) != 4)
        throw srus::ConfigError("bad rectangle, expected r0,c0,r1,c1: " + s);
    return srus::rect_pixels(g, r0, c0, r1, c1);
}

srus::Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw srus::DataError("cannot open: " + path);
    try {
        return srus::Json::parse(in);
    } catch (const std::exception& e) {
        throw srus::ConfigError(path + ": " + e.what());
    }
}

struct PreFlags {
    std::string interp = "12x12";
    std::string method = "bicubic";
    double smooth_um = 30.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--interp", interp, "upsampling factors, N or NyxNx");
        cmd->add_option("--interp-method", method, "nearest|bilinear|bicubic");
        cmd->add_option("--smooth-um", smooth_um, "Gaussian smoothing sigma [um]");
    }
    srus::PreprocessConfig config() const {
        srus::PreprocessConfig c;
        auto [fy, fx] = parse_interp(interp);
        c.factor_y = fy;
        c.factor_x = fx;
        c.method = srus::interp_method_from_string(method);
        c.smooth_sigma = smooth_um / 1e6;
        c.validate();
        return c;
    }
};

struct LocFlags {
    double h = 0.05;
    std::string mode = "subtractive";
    double retention = 0.10;
    double region_floor = 0.5;
    double psf_um = 30.0;
    double baseline_threshold = 0.90;
    int connectivity = 8;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--h", h, "morphological offset in (0,1)");
        cmd->add_option("--mode", mode, "subtractive|multiplicative marker");
        cmd->add_option("--retention", retention, "keep peaks within this fraction of the max");
        cmd->add_option("--region-floor", region_floor, "zero domes below floor*h before labeling");
        cmd->add_option("--psf-um", psf_um, "PSF sigma for super-localization [um]");
        cmd->add_option("--baseline-threshold", baseline_threshold, "non-MR binarization level");
        cmd->add_option("--connectivity", connectivity, "4 or 8");
    }
    srus::LocalizeConfig config() const {
        srus::LocalizeConfig c;
        c.h = h;
        c.mode = srus::marker_mode_from_string(mode);
        c.retention_fraction = retention;
        c.region_floor = region_floor;
        c.psf_sigma = psf_um / 1e6;
        c.baseline_threshold = baseline_threshold;
        c.connectivity = connectivity;
        c.validate();
        return c;
    }
};

std::map<int, std::vector<srus::Localization>> group_by_frame(
    const std::vector<srus::Localization>& locs) {
    std::map<int, std::vector<srus::Localization>> by_frame;
    for (const auto& l : locs) by_frame[l.frame_index].push_back(l);
    return by_frame;
}

void cmd_synth(const std::string& spec_path, const std::string& out,
               const std::string& truth_path, const std::string& mask_path) {
    srus::PhantomSpec spec = load_json(spec_path).get<srus::PhantomSpec>();
    auto [stack, truth] = srus::generate_phantom(spec);
    srus::save_stack(stack, out);
    long nbubbles = 0;
    for (const auto& f : truth.per_frame) nbubbles += static_cast<long>(f.size());
    if (!truth_path.empty()) srus::write_truth_csv(truth, truth_path);
    if (!mask_path.empty()) {
        if (!truth.mask)
            throw srus::ConfigError("phantom has no vessels; no mask to write");
        srus::save_mask(*truth.mask, mask_path);
    }
    std::cout << "wrote " << stack.nframes() << " frames (" << spec.geometry.ny << "x"
              << spec.geometry.nx << "), " << nbubbles << " true bubbles\n";
}

void cmd_filter(const std::string& in, const std::string& out, double rel_threshold,
                bool keep_smallest, double noise_rel, std::uint64_t seed) {
    srus::PipelineConfig cfg;
    cfg.svd.rel_threshold = rel_threshold;
    cfg.svd.drop_smallest = !keep_smallest;
    cfg.noise_rel = noise_rel;
    cfg.seed = seed;
    srus::FrameStack stack = srus::load_stack(in);
    double svd_ms = 0.0;
    srus::FrameStack filt = srus::filter_stage(stack, cfg, &svd_ms);
    srus::save_stack(filt, out);
    std::cout << "filtered " << stack.nframes() << " frames in " << svd_ms << " ms\n";
}

void cmd_preprocess(const std::string& in, const std::string& out, const PreFlags& pf) {
    srus::PreprocessConfig pre = pf.config();
    srus::FrameStack stack = srus::load_stack(in);
    srus::FrameStack fine;
    fine.geom = srus::fine_geometry(stack.geom, pre);
    fine.frames.reserve(stack.nframes());
    for (int t = 0; t < stack.nframes(); ++t) {
        srus::Frame up = srus::interpolate(stack.frame(t), pre.factor_y, pre.factor_x, pre.method);
        fine.frames.push_back(srus::gaussian_smooth(up, pre.smooth_sigma).data);
    }
    srus::save_stack(fine, out);
    std::cout << "preprocessed to " << fine.geom.ny << "x" << fine.geom.nx << "\n";
}

void cmd_hdome(const std::string& in, const std::string& out, double h,
               const std::string& mode, int connectivity) {
    srus::FrameStack stack = srus::load_stack(in);
    if (stack.nframes() != 1)
        throw srus::DataError("hdome expects a single-frame FST file");
    srus::Frame fr = stack.frame(0);
    auto [lo, hi] = srus::stack_min_max(stack);
    if (lo < 0.0 || hi > 1.0) {
        std::ostringstream os;
        os << "frame must be normalized to [0,1] (min=" << lo << ", max=" << hi << ")";
        throw srus::DataError(os.str());
    }
    srus::DomeImage dome = srus::hdome(fr, h, srus::marker_mode_from_string(mode),
                                       srus::StructuringElement::flat(connectivity));
    srus::save_stack(srus::FrameStack{dome.geom, {dome.data}}, out);
    double dmax = 0.0;
    for (double v : dome.data) dmax = std::max(dmax, v);
    std::cout << "dome max " << dmax << " (h=" << h << ")\n";
}

void cmd_localize(const std::string& in, const std::string& out, const PreFlags& pf,
                  const LocFlags& lf, bool baseline, int threads) {
    srus::PipelineConfig cfg;
    cfg.pre = pf.config();
    cfg.loc = lf.config();
    cfg.baseline = baseline;
    cfg.threads = threads;
    srus::FrameStack stack = srus::load_stack(in);
    const int n = stack.nframes();
    std::vector<std::vector<srus::Localization>> per_frame(n);
    std::vector<std::string> errs(n);
    srus::detail::parallel_frames(n, threads, [&](int t) {
        try {
            per_frame[t] = srus::localize_stage_frame(stack.frame(t), t, cfg);
        } catch (const std::exception& e) {
            errs[t] = e.what();
        }
    });
    for (int t = 0; t < n; ++t)
        if (!errs[t].empty())
            throw srus::DataError("frame " + std::to_string(t) + ": " + errs[t]);
    std::vector<srus::Localization> all;
    for (auto& v : per_frame) all.insert(all.end(), v.begin(), v.end());
    srus::write_peaks_csv(all, out);
    std::cout << all.size() << " localizations over " << n << " frames\n";
}

void cmd_render(const std::string& peaks_path, const std::string& like,
                const std::string& interp, double sigma_um, const std::string& out,
                const std::string& profile_spec, const std::string& profile_out) {
    auto locs = srus::read_peaks_csv(peaks_path);
    srus::GridGeometry g = srus::load_geometry(like);
    auto [fy, fx] = parse_interp(interp);
    srus::PreprocessConfig pre;
    pre.factor_y = fy;
    pre.factor_x = fx;
    srus::GridGeometry fine = srus::fine_geometry(g, pre);
    srus::SRImage sr = srus::accumulate_sr(locs, fine, sigma_um / 1e6);
    auto [lo, hi] = srus::write_pgm16(sr, out + ".pgm");
    srus::save_stack(srus::FrameStack{sr.geom, {sr.data}}, out + ".fst");
    srus::Json sidecar{{"min", lo}, {"max", hi}, {"geometry", sr.geom},
                       {"n_localizations", sr.n_localizations}};
    std::ofstream(out + ".json") << sidecar.dump(2) << '\n';
    if (!profile_spec.empty()) {
        double y0, x0, y1, x1;
        int n;
        if (std::sscanf(profile_spec.c_str(), "%lf,%lf,%lf,%lf,%d", &y0, &x0, &y1, &x1, &n) != 5)
            throw srus::ConfigError("bad --profile, expected y0_um,x0_um,y1_um,x1_um,n: " +
                                    profile_spec);
        auto prof = srus::line_profile(sr, y0 / 1e6, x0 / 1e6, y1 / 1e6, x1 / 1e6, n);
        srus::write_profile_csv(prof, profile_out.empty() ? out + "_profile.csv" : profile_out);
    }
    std::cout << "rendered " << sr.n_localizations << " localizations to " << out
              << ".pgm (" << fine.ny << "x" << fine.nx << ")\n";
}

void cmd_evaluate(const std::string& peaks_path, const std::string& mask_path,
                  const std::vector<double>& tolerances_um, const std::string& report_path,
                  const std::string& sr_path, const std::string& roi_s,
                  const std::string& bg_s) {
    auto locs = srus::read_peaks_csv(peaks_path);
    srus::VesselMask mask = srus::load_mask(mask_path);
    std::vector<double> tol;
    for (double t : tolerances_um) tol.push_back(t / 1e6);
    srus::AccuracyReport acc = srus::in_vessel_fraction(locs, mask, tol);

    srus::Json rep;
    rep["n_total"] = acc.n_total;
    rep["tolerances_m"] = acc.tolerances;
    rep["n_within"] = acc.n_within;
    rep["defined"] = acc.defined;
    if (acc.defined) rep["fraction_within"] = acc.fraction_within;
    rep["upper_bound_bubbles"] = srus::upper_bound(mask, mask.geom.wavelength);

    if (!sr_path.empty()) {
        if (roi_s.empty() || bg_s.empty())
            throw srus::ConfigError("--sr needs both --roi and --bg rectangles");
        srus::FrameStack sr = srus::load_stack(sr_path);
        srus::Frame img = sr.frame(0);
        auto v = srus::cnr(img, parse_rect(roi_s, img.geom), parse_rect(bg_s, img.geom));
        rep["cnr_linear"] = v.linear;
        if (v.linear > 0) rep["cnr_db"] = v.db;
    }
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw srus::DataError("cannot open for writing: " + report_path);
        out << rep.dump(2) << '\n';
    }
    std::cout << rep.dump(2) << '\n';
}

void cmd_track(const std::string& peaks_path, const std::string& out, double max_disp_um,
               double dt_s, const std::string& like) {
    if (dt_s <= 0) {
        if (like.empty())
            throw srus::ConfigError("need --dt-s or --like to supply the frame interval");
        dt_s = srus::load_geometry(like).dt;
    }
    auto by_frame = group_by_frame(srus::read_peaks_csv(peaks_path));
    std::vector<srus::VelocityVector> all;
    for (auto it = by_frame.begin(); it != by_frame.end(); ++it) {
        auto next = by_frame.find(it->first + 1);
        if (next == by_frame.end()) continue;
        auto v = srus::nn_pair_velocities(it->second, next->second, dt_s, max_disp_um / 1e6);
        all.insert(all.end(), v.begin(), v.end());
    }
    srus::write_velocities_csv(all, out);
    std::cout << all.size() << " velocity vectors\n";
}

void cmd_run(const std::string& config_path, int threads_override) {
    srus::PipelineConfig cfg = load_json(config_path).get<srus::PipelineConfig>();
    if (threads_override > 0) cfg.threads = threads_override;
    srus::PipelineResult res = srus::run_pipeline(cfg);
    std::cout << res.peaks.size() << " localizations; SR " << res.sr.geom.ny << "x"
              << res.sr.geom.nx << "; svd " << res.timing.svd_ms << " ms; localize "
              << res.timing.per_frame_ms_mean << " +/- " << res.timing.per_frame_ms_std
              << " ms/frame\n";
}

void cmd_bench(const std::string& in, const std::vector<int>& factors,
               const std::vector<double>& h_values, int repeats, const std::string& out,
               const LocFlags& lf, const PreFlags& pf) {
    srus::PipelineConfig cfg;
    cfg.pre = pf.config();
    cfg.loc = lf.config();
    srus::FrameStack stack = srus::load_stack(in);
    auto rows = srus::bench(stack, cfg, factors, h_values, repeats);
    std::printf("%8s %8s %10s %12s %12s\n", "factor", "h", "method", "ms/frame", "peaks/frame");
    for (const auto& r : rows)
        std::printf("%8d %8.3f %10s %6.2f+/-%-5.2f %6.1f+/-%-5.1f\n", r.factor, r.h,
                    r.baseline ? "threshold" : "mr", r.ms_mean, r.ms_std, r.peaks_mean,
                    r.peaks_std);
    if (!out.empty()) {
        std::ofstream o(out);
        if (!o) throw srus::DataError("cannot open for writing: " + out);
        o << srus::Json(rows).dump(2) << '\n';
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Super-resolution ultrasound localization via morphological reconstruction"};
    app.require_subcommand(1);
    // long-form help only: -h would clash with the --h offset flag
    app.set_help_flag("--help", "print help and exit");
    auto add_subcommand = [&](const char* name, const char* desc) {
        CLI::App* c = app.add_subcommand(name, desc);
        c->set_help_flag("--help", "print help and exit");
        return c;
    };

    // synth
    auto* synth = add_subcommand("synth", "generate a synthetic phantom stack");
    std::string sy_spec, sy_out, sy_truth, sy_mask;
    synth->add_option("--spec", sy_spec, "phantom spec JSON")->required();
    synth->add_option("--out", sy_out, "output FST stack")->required();
    synth->add_option("--truth", sy_truth, "ground-truth CSV");
    synth->add_option("--mask", sy_mask, "vessel mask FST");
    synth->callback([&] { cmd_synth(sy_spec, sy_out, sy_truth, sy_mask); });

    // filter
    auto* filter = add_subcommand("filter", "SVD clutter filter (normalizes in and out)");
    std::string fi_in, fi_out;
    double fi_thr = 0.10, fi_noise = 0.0;
    std::uint64_t fi_seed = 1;
    bool fi_keep = false;
    filter->add_option("--in", fi_in)->required();
    filter->add_option("--out", fi_out)->required();
    filter->add_option("--rel-threshold", fi_thr, "singular value cutoff vs sigma_1");
    filter->add_flag("--keep-smallest", fi_keep,
                     "keep the smallest singular value (removed by default)");
    filter->add_option("--noise-rel", fi_noise, "inject Gaussian noise before filtering");
    filter->add_option("--seed", fi_seed, "noise seed");
    filter->callback([&] { cmd_filter(fi_in, fi_out, fi_thr, fi_keep, fi_noise, fi_seed); });

    // preprocess
    auto* prep = add_subcommand("preprocess", "interpolate and smooth a stack");
    std::string pp_in, pp_out;
    PreFlags pp_flags;
    prep->add_option("--in", pp_in)->required();
    prep->add_option("--out", pp_out)->required();
    pp_flags.add_to(prep);
    prep->callback([&] { cmd_preprocess(pp_in, pp_out, pp_flags); });

    // hdome
    auto* hd = add_subcommand("hdome", "dome extraction on a single frame (debug aid)");
    std::string hd_in, hd_out, hd_mode = "subtractive";
    double hd_h = 0.05;
    int hd_conn = 8;
    hd->add_option("--in", hd_in)->required();
    hd->add_option("--out", hd_out)->required();
    hd->add_option("--h", hd_h);
    hd->add_option("--mode", hd_mode);
    hd->add_option("--connectivity", hd_conn);
    hd->callback([&] { cmd_hdome(hd_in, hd_out, hd_h, hd_mode, hd_conn); });

    // localize
    auto* loc = add_subcommand("localize", "per-frame peak extraction on a filtered stack");
    std::string lo_in, lo_out;
    PreFlags lo_pre;
    LocFlags lo_loc;
    bool lo_baseline = false;
    int lo_threads = 1;
    loc->add_option("--in", lo_in)->required();
    loc->add_option("--out", lo_out)->required();
    lo_pre.add_to(loc);
    lo_loc.add_to(loc);
    loc->add_flag("--baseline", lo_baseline, "use the 90% threshold baseline instead of MR");
    loc->add_option("--threads", lo_threads);
    loc->callback([&] { cmd_localize(lo_in, lo_out, lo_pre, lo_loc, lo_baseline, lo_threads); });

    // render
    auto* ren = add_subcommand("render", "accumulate an SR image from a peaks CSV");
    std::string re_peaks, re_like, re_interp = "12x12", re_out, re_prof, re_prof_out;
    double re_sigma = 0.0;
    ren->add_option("--peaks", re_peaks)->required();
    ren->add_option("--like", re_like, "FST whose geometry defines the native grid")->required();
    ren->add_option("--interp", re_interp, "fine-grid factors, N or NyxNx");
    ren->add_option("--sigma-um", re_sigma, "rendering sigma [um]; 0 = wavelength/8");
    ren->add_option("--out", re_out, "output basename (.pgm/.json/.fst)")->required();
    ren->add_option("--profile", re_prof, "line profile y0_um,x0_um,y1_um,x1_um,n");
    ren->add_option("--profile-out", re_prof_out, "profile CSV path");
    ren->callback([&] {
        cmd_render(re_peaks, re_like, re_interp, re_sigma, re_out, re_prof, re_prof_out);
    });

    // evaluate
    auto* ev = add_subcommand("evaluate", "score localizations against a vessel mask");
    std::string ev_peaks, ev_mask, ev_report, ev_sr, ev_roi, ev_bg;
    std::vector<double> ev_tol = {0.0, 20.0, 50.0};
    ev->add_option("--peaks", ev_peaks)->required();
    ev->add_option("--mask", ev_mask)->required();
    ev->add_option("--tolerances-um", ev_tol, "tolerance distances [um]")->delimiter(',');
    ev->add_option("--report", ev_report, "write the JSON report here");
    ev->add_option("--sr", ev_sr, "SR image FST for CNR");
    ev->add_option("--roi", ev_roi, "CNR ROI rectangle r0,c0,r1,c1");
    ev->add_option("--bg", ev_bg, "CNR background rectangle r0,c0,r1,c1");
    ev->callback([&] { cmd_evaluate(ev_peaks, ev_mask, ev_tol, ev_report, ev_sr, ev_roi, ev_bg); });

    // track
    auto* tr = add_subcommand("track", "nearest-neighbor velocities between frames");
    std::string tr_peaks, tr_out, tr_like;
    double tr_disp = 60.0, tr_dt = 0.0;
    tr->add_option("--peaks", tr_peaks)->required();
    tr->add_option("--out", tr_out)->required();
    tr->add_option("--max-disp-um", tr_disp, "pairing gate [um]");
    tr->add_option("--dt-s", tr_dt, "frame interval [s]");
    tr->add_option("--like", tr_like, "FST supplying dt when --dt-s is absent");
    tr->callback([&] { cmd_track(tr_peaks, tr_out, tr_disp, tr_dt, tr_like); });

    // run
    auto* run = add_subcommand("run", "full pipeline from a JSON config");
    std::string ru_cfg;
    int ru_threads = 0;
    run->add_option("--config", ru_cfg)->required();
    run->add_option("--threads", ru_threads, "override the configured thread count");
    run->callback([&] { cmd_run(ru_cfg, ru_threads); });

    // bench
    auto* be = add_subcommand("bench", "per-frame timing across factors and offsets");
    std::string be_in, be_out;
    std::vector<int> be_factors = {1, 2, 4};
    std::vector<double> be_h = {0.025, 0.05, 0.075};
    int be_repeats = 3;
    PreFlags be_pre;
    LocFlags be_loc;
    be->add_option("--in", be_in)->required();
    be->add_option("--factors", be_factors)->delimiter(',');
    be->add_option("--offsets", be_h)->delimiter(',');
    be->add_option("--repeats", be_repeats);
    be->add_option("--out", be_out, "write rows as JSON");
    be_pre.add_to(be);
    be_loc.add_to(be);
    be->callback([&] { cmd_bench(be_in, be_factors, be_h, be_repeats, be_out, be_loc, be_pre); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const srus::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const srus::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const srus::NumericError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
