#pragma once

#include "dbtrecon/filters.hpp"
#include "dbtrecon/geometry.hpp"
#include "dbtrecon/io.hpp"
#include "dbtrecon/metrics.hpp"
#include "dbtrecon/phantom.hpp"
#include "dbtrecon/solver.hpp"

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dbtrecon::harness {

namespace fs = std::filesystem;
using json = io::json;

struct Regularization {
    double alpha_x = 0.0;
    double alpha_z = 0.0;
    double beta = 0.0;
};

struct SpectrumConfig {
    std::size_t grid = 64;
    std::size_t n_detector_bins = 128;  // paper geometry scaled down with the grid
    std::vector<double> cutoffs{4.0, 8.0};
    std::vector<std::size_t> modes;  // empty: 0 .. grid/2
    ModeAxis axis = ModeAxis::x;
};

struct ExperimentConfig {
    ScanGeometry geometry;
    PhantomSpec phantom;
    Resampling resampling = Resampling::native;
    std::vector<std::size_t> resolutions{128, 256, 512};
    std::map<std::size_t, Regularization> regularization{
        {128, {1.95, 1.95, 10.0}}, {256, {1.9, 1.9, 10.0}}, {512, {1.7, 1.7, 5.0}}};
    // Template for both modes; mode and (α, β) are filled per run.
    SolverConfig solver = default_solver();
    std::size_t oscillation_first = 50;
    std::size_t oscillation_last = 200;
    SpectrumConfig spectrum;
    fs::path output_dir = "out";

    static SolverConfig default_solver() {
        SolverConfig s;
        s.filter_lo = FilterSpec{FilterKind::hann_sqrt, 8.0, 0};
        return s;
    }

    void validate() const {
        geometry.validate();
        phantom.validate();
        if (resolutions.empty()) throw ValidationError("config: resolutions must not be empty");
        for (std::size_t n : resolutions) {
            if (n < 8) throw ValidationError("config: resolutions must be >= 8");
            if (!regularization.count(n))
                throw ValidationError("config: no (alpha, beta) entry for resolution " + std::to_string(n));
        }
        if (!solver.filter_lo) throw ValidationError("config: solver.filter_lo is required");
        solver_for(resolutions.front(), SolverMode::two_channel).validate();
        if (oscillation_first > oscillation_last)
            throw ValidationError("config: oscillation window is empty");
        if (spectrum.grid < 2 || spectrum.n_detector_bins < 1)
            throw ValidationError("config: spectrum grid and bins must be positive");
    }

    SolverConfig solver_for(std::size_t n, SolverMode mode) const {
        const auto it = regularization.find(n);
        if (it == regularization.end())
            throw ValidationError("config: no (alpha, beta) entry for resolution " + std::to_string(n));
        SolverConfig s = solver;
        s.mode = mode;
        s.alpha_x = it->second.alpha_x;
        s.alpha_z = it->second.alpha_z;
        s.beta = it->second.beta;
        if (mode == SolverMode::single) s.filter_lo.reset();
        return s;
    }
};

// ---------------------------------------------------------------------------
// Config (de)serialization

inline json filter_to_json(const FilterSpec& f) { return {{"kind", to_string(f.kind)}, {"cutoff", f.cutoff}}; }

inline FilterSpec filter_from_json(const json& j) {
    return FilterSpec{filter_kind_from_string(j.at("kind").get<std::string>()), j.at("cutoff").get<double>(), 0};
}

inline json to_json(const ExperimentConfig& c, bool include_output_dir = true) {
    json j;
    const auto& g = c.geometry;
    j["geometry"] = {{"n_views", g.n_views},
                     {"arc_span_deg", g.arc_span},
                     {"source_to_isocenter_cm", g.source_to_isocenter},
                     {"source_to_detector_cm", g.source_to_detector},
                     {"n_detector_bins", g.n_detector_bins},
                     {"detector_length_cm", g.detector_length},
                     {"fov_side_cm", g.fov_side},
                     {"detector_motion", to_string(g.detector_motion)}};
    const auto& p = c.phantom;
    j["phantom"] = {{"n_pixels", p.n_pixels},
                    {"seed", p.seed},
                    {"noise_exponent", p.noise_exponent},
                    {"glandular_fraction", p.glandular_fraction},
                    {"n_calcifications", p.n_calcifications},
                    {"calc_radius_px", {p.calc_radius_min, p.calc_radius_max}},
                    {"calc_radius_reference", p.calc_radius_reference},
                    {"tissue_weights",
                     {{"adipose", p.weights.adipose},
                      {"fibroglandular", p.weights.fibroglandular},
                      {"calcification", p.weights.calcification}}},
                    {"resampling", to_string(c.resampling)}};
    j["resolutions"] = c.resolutions;
    json reg = json::object();
    for (const auto& [n, r] : c.regularization)
        reg[std::to_string(n)] = {{"alpha_x", r.alpha_x}, {"alpha_z", r.alpha_z}, {"beta", r.beta}};
    j["regularization"] = reg;
    const auto& s = c.solver;
    j["solver"] = {{"eps_hi", s.eps_hi},
                   {"eps_lo", s.eps_lo},
                   {"sigma_ratio", s.sigma_ratio},
                   {"rho", s.rho},
                   {"n_iter", s.n_iter},
                   {"filter_hi", filter_to_json(s.filter_hi)},
                   {"filter_lo", s.filter_lo ? filter_to_json(*s.filter_lo) : json(nullptr)},
                   {"power_iters", s.power_iters},
                   {"power_seed", s.power_seed},
                   {"relaxation_scope", to_string(s.relaxation_scope)},
                   {"fidelity_prox", to_string(s.fidelity_prox)},
                   {"boundary", to_string(s.boundary)},
                   {"step_margin", s.step_margin},
                   {"tau", s.tau ? json(*s.tau) : json(nullptr)},
                   {"sigma", s.sigma ? json(*s.sigma) : json(nullptr)},
                   {"checkpoint_every", s.checkpoint_every}};
    j["oscillation_window"] = {c.oscillation_first, c.oscillation_last};
    j["spectrum"] = {{"grid", c.spectrum.grid},
                     {"n_detector_bins", c.spectrum.n_detector_bins},
                     {"cutoffs", c.spectrum.cutoffs},
                     {"modes", c.spectrum.modes},
                     {"axis", c.spectrum.axis == ModeAxis::x ? "x" : "z"}};
    if (include_output_dir) j["output_dir"] = c.output_dir.string();
    return j;
}

inline ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    try {
        const auto& g = j.at("geometry");
        c.geometry.n_views = g.at("n_views").get<std::size_t>();
        c.geometry.arc_span = g.at("arc_span_deg").get<double>();
        c.geometry.source_to_isocenter = g.at("source_to_isocenter_cm").get<double>();
        c.geometry.source_to_detector = g.at("source_to_detector_cm").get<double>();
        c.geometry.n_detector_bins = g.at("n_detector_bins").get<std::size_t>();
        c.geometry.fov_side = g.at("fov_side_cm").get<double>();
        // null or absent: derived from the FOV and magnification
        if (g.contains("detector_length_cm") && !g.at("detector_length_cm").is_null())
            c.geometry.detector_length = g.at("detector_length_cm").get<double>();
        else
            c.geometry.detector_length = ScanGeometry::default_detector_length(
                c.geometry.fov_side, c.geometry.source_to_isocenter, c.geometry.source_to_detector);
        c.geometry.detector_motion = detector_motion_from_string(g.at("detector_motion").get<std::string>());

        const auto& p = j.at("phantom");
        c.phantom.n_pixels = p.at("n_pixels").get<std::size_t>();
        c.phantom.seed = p.at("seed").get<std::uint64_t>();
        c.phantom.noise_exponent = p.at("noise_exponent").get<double>();
        c.phantom.glandular_fraction = p.at("glandular_fraction").get<double>();
        c.phantom.n_calcifications = p.at("n_calcifications").get<std::size_t>();
        const auto& radius = p.at("calc_radius_px");
        if (!radius.is_array() || radius.size() != 2)
            throw ValidationError("config: phantom.calc_radius_px must be [min, max]");
        c.phantom.calc_radius_min = radius[0].get<int>();
        c.phantom.calc_radius_max = radius[1].get<int>();
        c.phantom.calc_radius_reference = p.at("calc_radius_reference").get<std::size_t>();
        const auto& w = p.at("tissue_weights");
        c.phantom.weights.adipose = w.at("adipose").get<double>();
        c.phantom.weights.fibroglandular = w.at("fibroglandular").get<double>();
        c.phantom.weights.calcification = w.at("calcification").get<double>();
        c.phantom.fov_side = c.geometry.fov_side;
        c.resampling = resampling_from_string(p.at("resampling").get<std::string>());

        c.resolutions = j.at("resolutions").get<std::vector<std::size_t>>();
        c.regularization.clear();
        for (const auto& [key, r] : j.at("regularization").items()) {
            std::size_t n = 0;
            try {
                n = std::stoul(key);
            } catch (const std::exception&) {
                throw ValidationError("config: regularization keys must be resolutions, got '" + key + "'");
            }
            Regularization reg;
            if (r.contains("alpha")) reg.alpha_x = reg.alpha_z = r.at("alpha").get<double>();
            if (r.contains("alpha_x")) reg.alpha_x = r.at("alpha_x").get<double>();
            if (r.contains("alpha_z")) reg.alpha_z = r.at("alpha_z").get<double>();
            if (!r.contains("alpha") && !(r.contains("alpha_x") && r.contains("alpha_z")))
                throw ValidationError("config: regularization entry " + key + " needs alpha or alpha_x/alpha_z");
            reg.beta = r.at("beta").get<double>();
            c.regularization[n] = reg;
        }

        const auto& s = j.at("solver");
        auto& sc = c.solver;
        sc.eps_hi = s.at("eps_hi").get<double>();
        sc.eps_lo = s.at("eps_lo").get<double>();
        sc.sigma_ratio = s.at("sigma_ratio").get<double>();
        sc.rho = s.at("rho").get<double>();
        sc.n_iter = s.at("n_iter").get<std::size_t>();
        sc.filter_hi = filter_from_json(s.at("filter_hi"));
        if (s.contains("filter_lo") && !s.at("filter_lo").is_null())
            sc.filter_lo = filter_from_json(s.at("filter_lo"));
        else
            sc.filter_lo.reset();
        sc.power_iters = s.at("power_iters").get<std::size_t>();
        sc.power_seed = s.at("power_seed").get<std::uint64_t>();
        sc.relaxation_scope = relaxation_scope_from_string(s.at("relaxation_scope").get<std::string>());
        sc.fidelity_prox = fidelity_prox_from_string(s.at("fidelity_prox").get<std::string>());
        sc.boundary = boundary_from_string(s.at("boundary").get<std::string>());
        sc.step_margin = s.at("step_margin").get<double>();
        auto opt = [&](const char* key) -> std::optional<double> {
            if (!s.contains(key) || s.at(key).is_null()) return std::nullopt;
            return s.at(key).get<double>();
        };
        sc.tau = opt("tau");
        sc.sigma = opt("sigma");
        sc.checkpoint_every = s.at("checkpoint_every").get<std::size_t>();

        const auto& win = j.at("oscillation_window");
        if (!win.is_array() || win.size() != 2)
            throw ValidationError("config: oscillation_window must be [first, last]");
        c.oscillation_first = win[0].get<std::size_t>();
        c.oscillation_last = win[1].get<std::size_t>();

        const auto& sp = j.at("spectrum");
        c.spectrum.grid = sp.at("grid").get<std::size_t>();
        c.spectrum.n_detector_bins = sp.at("n_detector_bins").get<std::size_t>();
        c.spectrum.cutoffs = sp.at("cutoffs").get<std::vector<double>>();
        c.spectrum.modes = sp.at("modes").get<std::vector<std::size_t>>();
        const auto axis = sp.at("axis").get<std::string>();
        if (axis != "x" && axis != "z") throw ValidationError("config: spectrum.axis must be 'x' or 'z'");
        c.spectrum.axis = axis == "x" ? ModeAxis::x : ModeAxis::z;

        c.output_dir = j.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

/// Rejects keys absent from the schema; the regularization table is open.
inline void check_known_keys(const json& user, const json& schema, const std::string& prefix = "") {
    if (!user.is_object()) return;
    for (const auto& [key, value] : user.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!schema.contains(key)) throw ValidationError("config: unknown key '" + path + "'");
        if (path == "regularization") continue;
        if (schema.at(key).is_object()) check_known_keys(value, schema.at(key), path);
    }
}

/// `dotted.key=value`; the value parses as JSON when it can, else as a string.
inline void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ValidationError("override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }
    json* node = &j;
    std::string path;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        path += (path.empty() ? "" : ".") + part;
        const bool open_table = path.rfind("regularization.", 0) == 0;
        if (!node->is_object() || (!node->contains(part) && !open_table))
            throw ValidationError("override: unknown key '" + path + "'");
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = std::move(value);
}

inline ExperimentConfig load_config(const std::optional<fs::path>& file, const std::vector<std::string>& overrides = {}) {
    json j = to_json(ExperimentConfig{});
    j["geometry"]["detector_length_cm"] = nullptr;  // follows fov / magnification unless set
    if (file) {
        std::ifstream is(*file);
        if (!is) throw ValidationError("cannot open config file '" + file->string() + "'");
        json user;
        try {
            user = json::parse(is);
        } catch (const json::exception& e) {
            throw ValidationError("config file '" + file->string() + "' is not valid JSON: " + e.what());
        }
        check_known_keys(user, j);
        if (user.contains("regularization")) j["regularization"] = json::object();
        j.merge_patch(user);
    }
    for (const auto& o : overrides) apply_override(j, o);
    return from_json(j);
}

// ---------------------------------------------------------------------------
// Problem construction

/// SHA-256 over the exact double bit patterns (little-endian).
inline std::string hash_values(std::span<const double> v) {
    std::vector<std::uint8_t> bytes(v.size() * 8);
    for (std::size_t k = 0; k < v.size(); ++k) {
        const auto bits = std::bit_cast<std::uint64_t>(v[k]);
        for (int b = 0; b < 8; ++b) bytes[8 * k + b] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    return io::sha256_hex(bytes);
}

struct Problem {
    std::size_t n = 0;
    PhantomImage phantom;
    SystemMatrix A;
    Sinogram g;
    std::string geometry_hash;
    std::string phantom_hash;
    std::string sinogram_hash;
};

inline PhantomImage phantom_for(const ExperimentConfig& cfg, std::size_t n) {
    PhantomSpec spec = cfg.phantom;
    spec.fov_side = cfg.geometry.fov_side;
    return downsample_consistent(spec, n, cfg.resampling);
}

/// Phantom, matched-grid system matrix and noiseless data g = X f_true.
inline Problem make_problem(const ExperimentConfig& cfg, std::size_t n) {
    Problem p;
    p.n = n;
    p.phantom = phantom_for(cfg, n);
    p.A = build_system_matrix(cfg.geometry, p.phantom.values);
    p.g = forward_project(p.A, p.phantom.values);
    p.geometry_hash = io::geometry_hash(cfg.geometry, n, n);
    p.phantom_hash = hash_values(p.phantom.values.values);
    p.sinogram_hash = hash_values(p.g.values);
    return p;
}

// ---------------------------------------------------------------------------
// Report writers

inline std::string telemetry_csv(const std::vector<IterationRecord>& history) {
    std::ostringstream os;
    os << "iteration,image_rmse,residual_hi_norm,residual_lo_norm,objective_value,slack_hi,slack_lo\n";
    for (const auto& r : history)
        os << r.iteration << ',' << io::fmt(r.image_rmse) << ',' << io::fmt(r.residual_hi_norm) << ','
           << io::fmt(r.residual_lo_norm) << ',' << io::fmt(r.objective_value) << ',' << io::fmt(r.slack_hi) << ','
           << io::fmt(r.slack_lo) << '\n';
    return os.str();
}

/// Paired RMSE series with log-log columns for convergence plots.
inline std::string convergence_csv(const std::vector<IterationRecord>& single, const std::vector<IterationRecord>& two) {
    if (single.size() != two.size()) throw SolverError("convergence series lengths differ");
    std::ostringstream os;
    os << "iteration,rmse_single,rmse_two,log10_iteration,log10_rmse_single,log10_rmse_two\n";
    for (std::size_t k = 0; k < single.size(); ++k) {
        const double it = static_cast<double>(single[k].iteration);
        os << single[k].iteration << ',' << io::fmt(single[k].image_rmse) << ',' << io::fmt(two[k].image_rmse) << ','
           << io::fmt(std::log10(it)) << ',' << io::fmt(std::log10(single[k].image_rmse)) << ','
           << io::fmt(std::log10(two[k].image_rmse)) << '\n';
    }
    return os.str();
}

inline double improvement_percent(double rmse_single, double rmse_two) {
    return 100.0 * (rmse_single - rmse_two) / rmse_single;
}

inline json steps_to_json(const StepSizes& s) {
    return {{"tau", s.tau},         {"sigma_hi", s.sigma_hi}, {"sigma_lo", s.sigma_lo},
            {"sigma_x", s.sigma_x}, {"sigma_z", s.sigma_z},   {"norm_hi", s.norm_hi},
            {"norm_lo", s.norm_lo}, {"norm_x", s.norm_x},     {"norm_z", s.norm_z},
            {"stability_product", s.stability_product()}};
}

inline std::string tag(SolverMode m) { return to_string(m); }

// ---------------------------------------------------------------------------
// Subcommands

inline json provenance(const ExperimentConfig& cfg, const Problem& p) {
    return {{"resolution", p.n},
            {"geometry_hash", p.geometry_hash},
            {"phantom_seed", cfg.phantom.seed},
            {"phantom_sha256", p.phantom_hash},
            {"sinogram_sha256", p.sinogram_hash},
            {"config", to_json(cfg, false)}};
}

inline void write_phantom_files(const ExperimentConfig& cfg, const PhantomImage& ph, std::size_t n,
                                const fs::path& dir) {
    json meta = {{"resolution", n},
                 {"geometry_hash", io::geometry_hash(cfg.geometry, n, n)},
                 {"phantom_seed", cfg.phantom.seed},
                 {"config", to_json(cfg, false)}};
    const std::string stem = "phantom_" + std::to_string(n);
    io::write_image(dir / (stem + ".f32"), ph.values, meta);
    io::write_labels(dir / ("labels_" + std::to_string(n) + ".u8"), ph, meta);
    io::write_bytes(dir / (stem + ".pgm"), io::render_pgm(ph.values.values, n, n, 0.0, 2.0));
}

inline void cli_phantom(const ExperimentConfig& cfg, std::ostream& log) {
    fs::create_directories(cfg.output_dir);
    for (std::size_t n : cfg.resolutions) {
        const PhantomImage ph = phantom_for(cfg, n);
        write_phantom_files(cfg, ph, n, cfg.output_dir);
        log << "phantom " << n << "x" << n << " written\n";
    }
}

inline void cli_project(const ExperimentConfig& cfg, std::ostream& log) {
    fs::create_directories(cfg.output_dir);
    for (std::size_t n : cfg.resolutions) {
        const Problem p = make_problem(cfg, n);
        write_phantom_files(cfg, p.phantom, n, cfg.output_dir);
        json meta = provenance(cfg, p);
        meta["filtering"] = "none";
        io::write_sinogram(cfg.output_dir / ("sinogram_" + std::to_string(n) + ".f32"), p.g, meta);
        log << "sinogram " << p.g.n_views << "x" << p.g.n_bins << " for " << n << "x" << n << " written ("
            << p.A.nnz() << " matrix entries)\n";
    }
}

struct RunOutcome {
    SolverMode mode = SolverMode::single;
    RunResult result;
    double final_rmse = 0.0;
    double oscillation = 0.0;
    double peak_abs_value = 0.0;  // over all iterates
};

/// One reconstruction with its image, telemetry, renderings and checkpoints.
inline RunOutcome run_and_write(const ExperimentConfig& cfg, const Problem& p, SolverMode mode, const fs::path& dir,
                                std::ostream& log) {
    const SolverConfig sc = cfg.solver_for(p.n, mode);
    const std::string stem = tag(mode) + "_" + std::to_string(p.n);
    json meta = provenance(cfg, p);
    meta["mode"] = tag(mode);

    RunObserver obs;
    obs.on_iteration = [&](const IterationRecord& r) {
        if (r.iteration % 100 == 0 || r.iteration == sc.n_iter)
            log << "  [" << stem << "] iter " << r.iteration << " rmse " << io::fmt(r.image_rmse) << " objective "
                << io::fmt(r.objective_value) << '\n';
    };
    obs.on_checkpoint = [&](std::size_t it, const ImageGrid& f) {
        json m = meta;
        m["iteration"] = it;
        io::write_image(dir / ("checkpoint_" + stem + "_" + std::to_string(it) + ".f32"), f, m);
    };

    RunOutcome out;
    out.mode = mode;
    out.result = run(p.A, p.g, sc, &p.phantom.values, obs);
    const auto& hist = out.result.history;
    out.final_rmse = hist.back().image_rmse;
    for (const auto& r : hist) out.peak_abs_value = std::max(out.peak_abs_value, r.peak_abs_value);
    const bool window_ok = hist.size() >= 2 && cfg.oscillation_first < hist.back().iteration;
    out.oscillation = window_ok ? oscillation_index(hist, cfg.oscillation_first, cfg.oscillation_last)
                                : std::numeric_limits<double>::quiet_NaN();

    meta["steps"] = steps_to_json(out.result.steps);
    meta["final_rmse"] = out.final_rmse;
    io::write_image(dir / ("recon_" + stem + ".f32"), out.result.image, meta);
    io::write_text(dir / ("telemetry_" + stem + ".csv"), telemetry_csv(hist));
    io::write_bytes(dir / ("recon_" + stem + ".pgm"), io::render_pgm(out.result.image.values, p.n, p.n, 0.0, 2.0));
    std::vector<double> diff(out.result.image.values.size());
    for (std::size_t k = 0; k < diff.size(); ++k)
        diff[k] = out.result.image.values[k] - p.phantom.values.values[k];
    io::write_bytes(dir / ("diff_" + stem + ".pgm"), io::render_pgm(diff, p.n, p.n, -0.75, 0.75));
    return out;
}

inline RunOutcome cli_reconstruct(const ExperimentConfig& cfg, SolverMode mode, std::ostream& log) {
    fs::create_directories(cfg.output_dir);
    RunOutcome last;
    for (std::size_t n : cfg.resolutions) {
        const Problem p = make_problem(cfg, n);
        log << "reconstruct " << tag(mode) << " " << n << "x" << n << '\n';
        last = run_and_write(cfg, p, mode, cfg.output_dir, log);
    }
    return last;
}

struct ComparisonRow {
    std::size_t resolution = 0;
    double rmse_single = 0.0;
    double rmse_two = 0.0;
    double improvement_percent = 0.0;
    double oscillation_single = 0.0;
    double oscillation_two = 0.0;
    double peak_single = 0.0;
    double peak_two = 0.0;
    double phantom_max = 0.0;
    std::size_t iterations_single = 0;
    std::size_t iterations_two = 0;
};

/// Paired single- vs two-channel runs on identical inputs per resolution.
inline std::vector<ComparisonRow> cli_compare(const ExperimentConfig& cfg, std::ostream& log) {
    fs::create_directories(cfg.output_dir);
    std::vector<ComparisonRow> rows;
    json report;
    report["config"] = to_json(cfg, false);
    report["resolutions"] = json::array();
    for (std::size_t n : cfg.resolutions) {
        const Problem p = make_problem(cfg, n);
        log << "compare " << n << "x" << n << " (" << p.A.nnz() << " matrix entries)\n";
        const RunOutcome s = run_and_write(cfg, p, SolverMode::single, cfg.output_dir, log);
        const RunOutcome t = run_and_write(cfg, p, SolverMode::two_channel, cfg.output_dir, log);
        io::write_text(cfg.output_dir / ("convergence_" + std::to_string(n) + ".csv"),
                       convergence_csv(s.result.history, t.result.history));

        ComparisonRow row;
        row.resolution = n;
        row.rmse_single = s.final_rmse;
        row.rmse_two = t.final_rmse;
        row.improvement_percent = improvement_percent(s.final_rmse, t.final_rmse);
        row.oscillation_single = s.oscillation;
        row.oscillation_two = t.oscillation;
        row.peak_single = s.peak_abs_value;
        row.peak_two = t.peak_abs_value;
        row.phantom_max = vec::norm_inf(p.phantom.values.values);
        row.iterations_single = s.result.history.size();
        row.iterations_two = t.result.history.size();
        rows.push_back(row);

        const std::string ns = std::to_string(n);
        report["resolutions"].push_back(
            {{"resolution", n},
             {"geometry_hash", p.geometry_hash},
             {"phantom_sha256", p.phantom_hash},
             {"sinogram_sha256", p.sinogram_hash},
             {"alpha_x", cfg.regularization.at(n).alpha_x},
             {"alpha_z", cfg.regularization.at(n).alpha_z},
             {"beta", cfg.regularization.at(n).beta},
             {"rmse_single", row.rmse_single},
             {"rmse_two", row.rmse_two},
             {"improvement_percent", row.improvement_percent},
             {"oscillation_single", row.oscillation_single},
             {"oscillation_two", row.oscillation_two},
             {"oscillation_window", {cfg.oscillation_first, cfg.oscillation_last}},
             {"peak_abs_single", row.peak_single},
             {"peak_abs_two", row.peak_two},
             {"phantom_max", row.phantom_max},
             {"steps_single", steps_to_json(s.result.steps)},
             {"steps_two", steps_to_json(t.result.steps)},
             {"difference_images", {"diff_single_" + ns + ".pgm", "diff_two_channel_" + ns + ".pgm"}}});
        log << "  rmse single " << io::fmt(row.rmse_single) << " two " << io::fmt(row.rmse_two) << " improvement "
            << io::fmt(row.improvement_percent) << "%\n";
    }

    std::ostringstream csv;
    csv << "resolution,rmse_single,rmse_two,improvement_percent\n";
    for (const auto& r : rows)
        csv << r.resolution << ',' << io::fmt(r.rmse_single) << ',' << io::fmt(r.rmse_two) << ','
            << io::fmt(r.improvement_percent) << '\n';
    io::write_text(cfg.output_dir / "report.csv", csv.str());
    io::write_text(cfg.output_dir / "report.json", report.dump(2) + "\n");
    return rows;
}

struct SpectrumResult {
    std::string name;
    ModeGainProfile profile;
};

/// Mode-gain profiles of R X for the identity filter and each Hann^{1/2} cutoff.
inline std::vector<SpectrumResult> cli_spectrum(const ExperimentConfig& cfg, std::ostream& log) {
    fs::create_directories(cfg.output_dir);
    ScanGeometry geom = cfg.geometry;
    geom.n_detector_bins = cfg.spectrum.n_detector_bins;
    const std::size_t n = cfg.spectrum.grid;
    const SystemMatrix A = build_system_matrix(geom, make_grid(geom, n));
    std::vector<std::size_t> modes = cfg.spectrum.modes;
    if (modes.empty())
        for (std::size_t k = 0; k <= n / 2; ++k) modes.push_back(k);

    std::vector<std::pair<std::string, FilterResponse>> filters{{"identity", identity_response(geom.n_detector_bins)}};
    for (double c : cfg.spectrum.cutoffs) {
        char name[64];
        std::snprintf(name, sizeof name, "hann_sqrt_c%g", c);
        filters.emplace_back(name, hann_sqrt_response(geom.n_detector_bins, c));
    }

    std::vector<SpectrumResult> out;
    for (const auto& [name, resp] : filters) {
        SpectrumResult r{name, mode_gain_profile(A, resp, modes, cfg.spectrum.axis)};
        std::ostringstream csv;
        csv << "k,gain\n";
        for (std::size_t i = 0; i < modes.size(); ++i) csv << modes[i] << ',' << io::fmt(r.profile.gains[i]) << '\n';
        io::write_text(cfg.output_dir / ("mode_gain_" + name + ".csv"), csv.str());
        std::ostringstream resp_csv;
        write_response_csv(resp_csv, resp);
        io::write_text(cfg.output_dir / ("filter_response_" + name + ".csv"), resp_csv.str());
        log << "mode gains for " << name << " written\n";
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace dbtrecon::harness
