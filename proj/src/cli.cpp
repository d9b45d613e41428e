#include "zpi/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "zpi/config.hpp"
#include "zpi/error.hpp"
#include "zpi/fit.hpp"
#include "zpi/io.hpp"
#include "zpi/quality.hpp"
#include "zpi/recon.hpp"
#include "zpi/stats.hpp"

namespace zpi::cli {
namespace {

namespace fs = std::filesystem;
using io::format_double;

// Flags that map one-to-one onto config keys.
struct KeyFlag {
    const char* flag;
    const char* key;
    const char* help;
};

constexpr KeyFlag kPhysicsFlags[] = {
    {"--q", "q", "per-pixel flip probability"},
    {"--lambda", "lambda", "mean photons per ON pixel per frame"},
    {"--nbar", "nbar", "mean photons per frame; derives lambda = nbar / (M q)"},
    {"--M", "M", "number of object pixels (when no mask is given)"},
    {"--mask", "mask", "object mask, plain PBM"},
};

constexpr KeyFlag kSimFlags[] = {
    {"--frames", "frames", "number of patterns / frames"},
    {"--pulses", "pulses_per_frame", "laser pulses per frame"},
    {"--seed", "seed", "64-bit master seed"},
    {"--mode", "mode", "poisson or pulse"},
    {"--threads", "threads", "worker threads (outputs do not depend on it)"},
};

constexpr KeyFlag kReconFlags[] = {
    {"--patterns", "patterns", "pattern file (default <out>/patterns.zpipat)"},
    {"--frames-file", "frames_file", "frames CSV (default <out>/frames.csv)"},
    {"--method", "methods", "comma list of zpi,kphoton,cgi,ffgi"},
    {"--k", "k", "comma list of photon numbers for kphoton"},
};

constexpr KeyFlag kFitFlags[] = {
    {"--hist", "hist", "histogram CSV to fit"},
    {"--max-evals", "max_evaluations", "evaluation budget"},
};

struct Command {
    explicit Command(CLI::App* sub) : app(sub) {}

    CLI::App* app;
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::vector<std::pair<std::string, CLI::Option*>> bool_flags;
    std::string out;
    CLI::Option* out_opt = nullptr;
};

template <std::size_t N>
void add_flags(Command& cmd, const KeyFlag (&flags)[N]) {
    for (const auto& f : flags) {
        cmd.options[f.key] = cmd.app->add_option(f.flag, cmd.values[f.key], f.help);
    }
}

void add_common(Command& cmd) {
    cmd.app->add_option("--config", cmd.config_path, "key = value run configuration");
    cmd.out_opt = cmd.app->add_option("--out", cmd.out, "output directory (default $ZPI_OUT_DIR or zpi_out)");
    add_flags(cmd, kPhysicsFlags);
}

void add_bool(Command& cmd, const char* flag, const char* key, const char* help) {
    cmd.bool_flags.emplace_back(key, cmd.app->add_flag(flag)->description(help));
}

RunConfig build_config(const Command& cmd) {
    RunConfig cfg;
    cfg.out_dir = default_out_dir();
    if (!cmd.config_path.empty()) cfg = RunConfig::load(cmd.config_path);
    for (const auto& [key, opt] : cmd.options) {
        if (opt->count() > 0) {
            try {
                cfg.set(key, cmd.values.at(key));
            } catch (const ConfigError& e) {
                throw ConfigError(std::string("command line: ") + e.what());
            }
        }
    }
    for (const auto& [key, opt] : cmd.bool_flags) {
        if (opt->count() > 0) cfg.set(key, "true");
    }
    if (cmd.out_opt->count() > 0) cfg.out_dir = cmd.out;
    return cfg;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

ObjectMask load_mask(const RunConfig& cfg) {
    if (!cfg.mask) throw ConfigError("key 'mask': required");
    if (!fs::exists(*cfg.mask)) throw ConfigError("key 'mask': file '" + cfg.mask->string() + "' does not exist");
    if (cfg.mask_digest && io::file_digest_hex(*cfg.mask) != *cfg.mask_digest) {
        throw ConfigError("key 'mask_digest': mask '" + cfg.mask->string() + "' does not match the recorded digest");
    }
    ObjectMask mask = io::read_mask(*cfg.mask);
    if ((cfg.width && *cfg.width != mask.width()) || (cfg.height && *cfg.height != mask.height())) {
        throw ConfigError("keys 'width'/'height': do not match the " + std::to_string(mask.width()) + "x" +
                          std::to_string(mask.height()) + " mask");
    }
    if (cfg.M && *cfg.M != mask.count()) {
        throw ConfigError("key 'M': " + std::to_string(*cfg.M) + " disagrees with the mask's " +
                          std::to_string(mask.count()) + " object pixels");
    }
    return mask;
}

std::string metric_or_nan(double (*metric)(const ClassMoments&), const ClassMoments& m) {
    try {
        return format_double(metric(m));
    } catch (const UndefinedMetricError&) {
        return "nan";
    }
}

std::string abs_or_nan(const std::string& v) {
    if (v == "nan") return v;
    return format_double(std::abs(std::stod(v)));
}

// ---------------------------------------------------------------------------
// theory

int cmd_theory(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const int M = cfg.resolve_M();
    const ModePhysics phys = cfg.resolve_physics(M);
    const SceneSpec scene{M};
    const PhotonPdf pdf = multimode_pdf(phys, scene);
    ensure_dir(cfg.out_dir);
    io::write_histogram(cfg.out_dir / "theory_hist.csv", pdf);
    const SmoothKernel kernel = cfg.effective_kernel();
    if (!(kernel == SmoothKernel::identity())) {
        io::write_histogram(cfg.out_dir / "theory_hist_smoothed.csv", smooth_pdf(pdf, kernel));
    }

    const ImageValues iv = image_values(phys, scene);
    const double v = theoretical_visibility(phys);
    std::ostringstream report;
    report << "q = " << format_double(phys.q) << '\n'
           << "lambda = " << format_double(phys.lambda) << '\n'
           << "M = " << M << '\n'
           << "nbar = " << format_double(M * phys.q * phys.lambda) << '\n'
           << "n_max = " << pdf.n_max() << '\n'
           << "zero_weight = " << format_double(zero_weight(phys, scene)) << '\n'
           << "g1 = " << format_double(iv.g1) << '\n'
           << "g0 = " << format_double(iv.g0) << '\n'
           << "dg1 = " << format_double(iv.g1 - iv.g1 * iv.g1) << '\n'
           << "dg0 = " << format_double(iv.g0 - iv.g0 * iv.g0) << '\n'
           << "v = " << format_double(v) << '\n'
           << "abs_v = " << format_double(std::abs(v)) << '\n';
    int code = kSuccess;
    bool degenerate = iv.g1 == iv.g0;
    try {
        const QualityTheory t = quality_theory(phys, scene);
        report << "r = " << format_double(t.r) << '\n'
               << "rp = " << format_double(t.rp) << '\n'
               << "abs_r = " << format_double(std::abs(t.r)) << '\n'
               << "abs_rp = " << format_double(std::abs(t.rp)) << '\n';
    } catch (const UndefinedMetricError& e) {
        report << "r = nan\nrp = nan\nabs_r = nan\nabs_rp = nan\n";
        err << "warning: " << e.what() << '\n';
        degenerate = true;
        code = kNumericalError;
    }
    report << "degenerate = " << (degenerate ? "true" : "false") << '\n';
    {
        std::ofstream os(cfg.out_dir / "theory_quality.txt");
        os << report.str();
        if (!os) throw DataError("cannot write theory report");
    }
    out << report.str();
    return code;
}

// ---------------------------------------------------------------------------
// simulate

std::string manifest_body(const RunConfig& cfg, const ModePhysics& phys, const fs::path& mask_path,
                          const std::string& mask_digest) {
    std::ostringstream os;
    os << "q = " << format_double(phys.q) << '\n'
       << "lambda = " << format_double(phys.lambda) << '\n'
       << "mask = " << fs::absolute(mask_path).lexically_normal().string() << '\n'
       << "mask_digest = " << mask_digest << '\n'
       << "frames = " << cfg.frames << '\n'
       << "pulses_per_frame = " << cfg.pulses_per_frame << '\n'
       << "seed = " << cfg.seed << '\n'
       << "mode = " << to_string(cfg.mode) << '\n';
    return os.str();
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const ObjectMask mask = load_mask(cfg);
    if (mask.count() < 1) throw DataError("mask '" + cfg.mask->string() + "' has no object pixels");
    SimConfig sim;
    sim.phys = cfg.resolve_physics(mask.count());
    sim.pulses_per_frame = cfg.pulses_per_frame;
    sim.frames = cfg.frames;
    sim.seed = cfg.seed;
    sim.mode = cfg.mode;
    sim.threads = cfg.threads;
    if (auto warning = sim.fidelity_warning(mask.count())) err << "warning: " << *warning << '\n';

    const Experiment exp = run_experiment(mask, sim);
    ensure_dir(cfg.out_dir);
    const fs::path patterns_path = cfg.out_dir / "patterns.zpipat";
    const fs::path frames_path = cfg.out_dir / "frames.csv";
    io::write_patterns(patterns_path, exp.patterns);
    io::write_frames(frames_path, exp.frames);

    const std::string body = manifest_body(cfg, sim.phys, *cfg.mask, io::file_digest_hex(*cfg.mask));
    std::ofstream manifest(cfg.out_dir / "manifest.txt");
    manifest << "# zpi simulate manifest; rerun with: zpi simulate --config manifest.txt --out <dir>\n"
             << "# config_digest = " << io::digest_hex(body) << '\n'
             << "# patterns_digest = " << io::file_digest_hex(patterns_path) << '\n'
             << "# frames_digest = " << io::file_digest_hex(frames_path) << '\n'
             << body;
    if (!manifest) throw DataError("cannot write manifest");

    double total = 0.0;
    for (const auto& f : exp.frames) total += f.n;
    out << "frames = " << exp.frames.size() << '\n'
        << "mean_n = " << format_double(exp.frames.empty() ? 0.0 : total / static_cast<double>(exp.frames.size()))
        << '\n'
        << "config_digest = " << io::digest_hex(body) << '\n';
    return kSuccess;
}

// ---------------------------------------------------------------------------
// reconstruct

int cmd_reconstruct(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const fs::path patterns_path = cfg.patterns_file.value_or(cfg.out_dir / "patterns.zpipat");
    const fs::path frames_path = cfg.frames_file.value_or(cfg.out_dir / "frames.csv");
    for (const auto& p : {patterns_path, frames_path}) {
        if (!fs::exists(p)) throw ConfigError("input file '" + p.string() + "' does not exist");
    }
    const PatternSet patterns = io::read_patterns(patterns_path);
    const std::vector<FrameRecord> frames = io::read_frames(frames_path);
    std::optional<ObjectMask> mask;
    if (cfg.mask) mask = load_mask(cfg);

    struct Job {
        std::string method;
        std::optional<int> k;
    };
    std::vector<Job> jobs;
    for (const auto& m : cfg.methods) {
        if (m == "kphoton") {
            for (int k : cfg.k) jobs.push_back({m, k});
        } else {
            jobs.push_back({m, m == "zpi" ? std::optional<int>(0) : std::nullopt});
        }
    }
    // Fail before writing anything when a requested k has no frames.
    for (const auto& job : jobs) {
        if (job.k && std::none_of(frames.begin(), frames.end(), [&](const FrameRecord& f) { return f.n == *job.k; })) {
            throw EmptySelectionError(*job.k);
        }
    }

    double total = 0.0;
    for (const auto& f : frames) total += f.n;
    const double nbar = frames.empty() ? 0.0 : total / static_cast<double>(frames.size());

    ensure_dir(cfg.out_dir);
    const fs::path quality_path = cfg.out_dir / "quality.csv";
    const bool new_quality = !fs::exists(quality_path);
    std::ofstream quality;
    if (mask) {
        quality.open(quality_path, std::ios::app);
        if (new_quality) quality << "method,k,nbar,g1,g0,dg1,dg0,v,r,rp,abs_v,abs_r,abs_rp\n";
    }

    for (const auto& job : jobs) {
        Image img = job.method == "cgi"    ? cgi_reconstruct(patterns, frames, cfg.threads)
                    : job.method == "ffgi" ? ffgi_reconstruct(patterns, frames, cfg.pulses_per_frame, cfg.threads)
                                           : kphoton_reconstruct(patterns, frames, *job.k, cfg.threads);
        if (cfg.normalize) img = normalize_max(img);
        const std::string name = job.method == "kphoton" ? "kphoton_k" + std::to_string(*job.k) : job.method;
        io::write_image_csv(cfg.out_dir / (name + ".csv"), img);
        io::write_image_pgm(cfg.out_dir / (name + ".pgm"), img);
        out << "wrote " << name << '\n';
        if (mask) {
            const ClassMoments m = class_moments(img, *mask);
            const std::string v = metric_or_nan(visibility, m);
            const std::string r = metric_or_nan(cnr, m);
            const std::string rp = metric_or_nan(peak_cnr, m);
            quality << job.method << ',' << (job.k ? std::to_string(*job.k) : "") << ',' << format_double(nbar) << ','
                    << format_double(m.g1) << ',' << format_double(m.g0) << ',' << format_double(m.dg1) << ','
                    << format_double(m.dg0) << ',' << v << ',' << r << ',' << rp << ',' << abs_or_nan(v) << ','
                    << abs_or_nan(r) << ',' << abs_or_nan(rp) << '\n';
            out << "  v = " << v << "  r = " << r << "  rp = " << rp << '\n';
        }
    }
    if (mask && !quality) throw DataError("cannot write quality.csv");
    return kSuccess;
}

// ---------------------------------------------------------------------------
// histogram

int cmd_histogram(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const fs::path frames_path = cfg.frames_file.value_or(cfg.out_dir / "frames.csv");
    if (!fs::exists(frames_path)) throw ConfigError("input file '" + frames_path.string() + "' does not exist");
    const auto frames = io::read_frames(frames_path);
    const PhotonPdf hist = empirical_histogram(frames);
    ensure_dir(cfg.out_dir);
    io::write_histogram(cfg.out_dir / "histogram.csv", hist);
    out << "bins = " << hist.size() << "\nzero_bin = " << format_double(hist(0))
        << "\nmean_n = " << format_double(pdf_mean(hist)) << '\n';
    return kSuccess;
}

// ---------------------------------------------------------------------------
// fit

void write_fit_report(std::ostream& os, const ModePhysics& init, const FitResult& r, const SmoothKernel& kernel,
                      int M) {
    os << "method = least-squares pattern search over (q, lambda); stands in for the unspecified Gaussian fitting "
          "step\n"
       << "M = " << M << '\n'
       << "kernel = " << format_double(kernel.l1) << ',' << format_double(kernel.l2) << ','
       << format_double(kernel.l3) << '\n'
       << "init_q = " << format_double(init.q) << '\n'
       << "init_lambda = " << format_double(init.lambda) << '\n'
       << "q = " << format_double(r.params.q) << '\n'
       << "lambda = " << format_double(r.params.lambda) << '\n'
       << "sigma = " << format_double(r.sigma) << '\n'
       << "nbar = " << format_double(r.nbar) << '\n'
       << "residual = " << format_double(r.residual) << '\n'
       << "evaluations = " << r.evaluations << '\n'
       << "converged = " << (r.converged ? "true" : "false") << '\n'
       << "degenerate = " << (r.degenerate ? "true" : "false") << '\n';
}

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (!cfg.hist_file) throw ConfigError("key 'hist': required");
    if (!fs::exists(*cfg.hist_file)) {
        throw ConfigError("key 'hist': file '" + cfg.hist_file->string() + "' does not exist");
    }
    const PhotonPdf hist = io::read_histogram(*cfg.hist_file);
    const int M = cfg.resolve_M();
    const ModePhysics init = cfg.resolve_physics(M);
    const SmoothKernel kernel = cfg.effective_kernel();
    FitOptions opts;
    opts.max_evaluations = cfg.max_evaluations;
    opts.fit_gaussian_width = cfg.fit_sigma;

    ensure_dir(cfg.out_dir);
    std::ofstream report(cfg.out_dir / "fit_report.txt");
    int code = kSuccess;
    FitResult result;
    try {
        result = fit_params(hist, M, init, kernel, opts);
    } catch (const FitError& e) {
        err << "error: " << e.what() << '\n';
        result = e.best();
        code = kNumericalError;
    }
    write_fit_report(report, init, result, kernel, M);
    write_fit_report(out, init, result, kernel, M);
    if (!report) throw DataError("cannot write fit report");
    if (result.degenerate) err << "warning: fit is degenerate; q and lambda are not separately identifiable\n";
    return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Zero-photon imaging: photon statistics, acquisition simulation, reconstruction and fitting"};
    app.require_subcommand(1);

    Command theory{app.add_subcommand("theory", "closed-form histogram and image-quality report")};
    add_common(theory);
    theory.options["kernel"] = theory.app->add_option("--kernel", theory.values["kernel"],
                                                      "smoothing kernel: identity, tapered (alias default), or l1,l2,l3");
    add_bool(theory, "--renormalize", "renormalize", "scale the smoothing kernel to unit sum");

    Command simulate{app.add_subcommand("simulate", "simulate patterns and photon-count frames")};
    add_common(simulate);
    add_flags(simulate, kSimFlags);

    Command reconstruct{app.add_subcommand("reconstruct", "reconstruct and score images")};
    add_common(reconstruct);
    add_flags(reconstruct, kReconFlags);
    reconstruct.options["pulses_per_frame"] =
        reconstruct.app->add_option("--pulses", reconstruct.values["pulses_per_frame"], "laser pulses per frame");
    reconstruct.options["threads"] =
        reconstruct.app->add_option("--threads", reconstruct.values["threads"], "worker threads");
    add_bool(reconstruct, "--normalize", "normalize", "divide each image by its maximum before writing");

    Command histogram{app.add_subcommand("histogram", "empirical photon-number histogram of a frames file")};
    add_common(histogram);
    histogram.options["frames_file"] =
        histogram.app->add_option("--frames-file", histogram.values["frames_file"], "frames CSV");

    Command fit{app.add_subcommand("fit", "calibrate (q, lambda) against a histogram")};
    add_common(fit);
    add_flags(fit, kFitFlags);
    fit.options["kernel"] =
        fit.app->add_option("--kernel", fit.values["kernel"], "smoothing kernel: identity, tapered (alias default), or l1,l2,l3");
    add_bool(fit, "--renormalize", "renormalize", "scale the smoothing kernel to unit sum");
    add_bool(fit, "--fit-sigma", "fit_sigma", "also fit a Gaussian smoothing width");

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        if (*theory.app) return cmd_theory(build_config(theory), out, err);
        if (*simulate.app) return cmd_simulate(build_config(simulate), out, err);
        if (*reconstruct.app) return cmd_reconstruct(build_config(reconstruct), out, err);
        if (*histogram.app) return cmd_histogram(build_config(histogram), out, err);
        if (*fit.app) return cmd_fit(build_config(fit), out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const UndefinedMetricError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    } catch (const TruncationError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    } catch (const FitError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    } catch (const Error& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    }
    return kConfigError;
}

}  // namespace zpi::cli
