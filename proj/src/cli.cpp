#include "herit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "herit/error.hpp"
#include "herit/io.hpp"
#include "herit/pipeline.hpp"
#include "herit/study.hpp"
#include "herit/synth.hpp"

namespace herit {

namespace fs = std::filesystem;
using nlohmann::json;

void configure_logging()
{
    auto logger = spdlog::get("herit");
    if (!logger) {
        logger = spdlog::stderr_logger_mt("herit");
        spdlog::set_default_logger(logger);
    }
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("HERIT_LOG")) {
        const auto parsed = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only honour it when asked for.
        if (parsed != spdlog::level::off || std::string(env) == "off") level = parsed;
    }
    spdlog::set_level(level);
}

namespace {

struct SolverFlags {
    double delta = 0.01;
    std::vector<double> inits{0.1, 0.5, 0.9};
    double level = 0.95;

    void attach(CLI::App& app)
    {
        app.add_option("--delta", delta, "boundary margin; eta is searched in [0, 1 - delta]")
            ->capture_default_str();
        app.add_option("--inits", inits, "Newton starting points")->delimiter(',')->capture_default_str();
        app.add_option("--level", level, "confidence level of the interval")->capture_default_str();
    }

    EstimateOptions options() const
    {
        EstimateOptions o;
        o.solver.delta = delta;
        o.solver.inits = inits;
        o.solver.validate();
        if (!(level > 0.0 && level < 1.0)) throw ConfigError("--level must lie in (0, 1)");
        o.level = level;
        return o;
    }
};

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

json fingerprint(const std::string& role, const fs::path& path, std::size_t rows, std::size_t cols)
{
    return {{"role", role}, {"path", path.string()}, {"sha256", io::sha256_file(path)}, {"rows", rows}, {"cols", cols}};
}

void emit(const json& j, const std::string& out_path, std::ostream& out)
{
    const std::string text = io::dump(j);
    if (out_path.empty())
        out << text;
    else
        io::write_text(out_path, text);
}

struct EstimateArgs {
    std::string geno, pheno, covar, out;
    std::optional<double> q;
    bool drop_monomorphic = false;
    bool no_intercept = false;
    bool real_design = false;
    SolverFlags solver;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out)
{
    EstimateOptions opts = a.solver.options();
    opts.q = a.q;
    opts.policy = a.drop_monomorphic ? MonomorphicPolicy::Drop : MonomorphicPolicy::Error;
    opts.project_intercept = !a.no_intercept;

    const Eigen::VectorXd y = io::read_phenotype(a.pheno);
    std::optional<Eigen::MatrixXd> covar;
    if (!a.covar.empty()) covar = io::read_covariates(a.covar);

    json inputs = json::array();
    EstimateReport report;
    std::vector<std::size_t> dropped;
    if (a.real_design) {
        const Eigen::MatrixXd w = io::read_covariates(a.geno);
        inputs.push_back(fingerprint("design", a.geno, w.rows(), w.cols()));
        if (static_cast<Eigen::Index>(y.size()) != w.rows())
            throw ShapeError("phenotype has " + std::to_string(y.size()) + " rows, design has " +
                             std::to_string(w.rows()));
        const StandardizedDesign sd = standardize(w, opts.policy);
        dropped = sd.dropped;
        report = estimate(sd.z, y, covar, opts);
    } else {
        const GenotypeMatrix w = io::read_genotypes(a.geno);
        inputs.push_back(fingerprint("genotypes", a.geno, w.n(), w.markers()));
        if (static_cast<std::size_t>(y.size()) != w.n())
            throw ShapeError("phenotype has " + std::to_string(y.size()) + " rows, genotypes have " +
                             std::to_string(w.n()));
        GenotypeEstimate ge = estimate(w, y, covar, opts);
        report = ge.report;
        dropped = ge.dropped_columns;
    }
    inputs.push_back(fingerprint("phenotype", a.pheno, y.size(), 1));
    if (covar) inputs.push_back(fingerprint("covariates", a.covar, covar->rows(), covar->cols()));

    json j = io::to_json(report);
    j["inputs"] = inputs;
    j["dropped_columns"] = dropped;
    emit(j, a.out, out);
    return 0;
}

struct SimulateArgs {
    std::string config, out_dir;
    std::optional<std::uint64_t> seed;
};

void write_real_design(const fs::path& path, const Eigen::MatrixXd& z)
{
    std::string text;
    for (Eigen::Index j = 0; j < z.cols(); ++j) text += (j ? ",x" : "x") + std::to_string(j + 1);
    text += '\n';
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            if (j) text += ',';
            text += io::format_double(z(i, j));
        }
        text += '\n';
    }
    io::write_text(path, text);
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out)
{
    SimulationConfig cfg = io::config_from_json(json::parse(io::read_text(a.config)));
    if (a.seed) cfg.seed = *a.seed;
    ensure_dir(a.out_dir);

    json written = json::array();
    for (std::size_t k = 0; k < cfg.replicates; ++k) {
        const std::string suffix = cfg.replicates == 1 ? "" : "_r" + std::to_string(k);
        const std::uint64_t seed = replicate_seed(cfg.seed, 0, k);
        const Cohort c = simulate_cohort(cfg, seed);

        const fs::path dir(a.out_dir);
        const fs::path design = dir / ((cfg.design == DesignKind::Genotype ? "genotypes" : "design") + suffix + ".csv");
        const fs::path pheno = dir / ("phenotype" + suffix + ".txt");
        const fs::path truth = dir / ("truth" + suffix + ".json");
        if (cfg.design == DesignKind::Genotype)
            io::write_genotypes(design, c.genotypes);
        else
            write_real_design(design, c.z);
        io::write_phenotype(pheno, c.y);

        json t = {{"eta_star", cfg.eta_star},
                  {"sigma_star2", cfg.sigma_star2},
                  {"q", cfg.q},
                  {"sigma_u2", c.scale.sigma_u2},
                  {"sigma_e2", c.scale.sigma_e2},
                  {"seed", seed},
                  {"master_seed", cfg.seed},
                  {"replicate", k},
                  {"n", cfg.n},
                  {"N", cfg.N},
                  {"design", to_string(cfg.design)},
                  {"support_indices", c.effects.support_indices()},
                  {"config", io::to_json(cfg)}};
        io::write_text(truth, io::dump(t));
        written.push_back({{"design", design.string()}, {"phenotype", pheno.string()}, {"truth", truth.string()}});
    }
    out << io::dump({{"written", written}});
    return 0;
}

struct StudyArgs {
    std::string spec, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    bool allow_large = false;
    bool no_intercept = false;
    SolverFlags solver;
};

int cmd_mc_study(const StudyArgs& a, std::ostream& out)
{
    json raw = json::parse(io::read_text(a.spec));
    if (a.allow_large && raw.is_object()) raw["allow_large"] = true;
    StudySpec spec = study_from_json(raw);
    if (a.seed) spec.base.seed = *a.seed;
    if (a.workers) spec.workers = *a.workers;
    spec.validate();
    EstimateOptions opts = a.solver.options();
    opts.project_intercept = !a.no_intercept;
    ensure_dir(a.out_dir);

    const auto records = run_study(spec, opts);
    const auto summary = summarize(records);
    const fs::path rep_path = fs::path(a.out_dir) / spec.replicates_csv;
    const fs::path sum_path = fs::path(a.out_dir) / spec.summary_csv;
    io::write_text(rep_path, replicates_to_csv(records));
    io::write_text(sum_path, summary_to_csv(summary));

    std::size_t failures = 0;
    for (const auto& r : records) failures += r.ok() ? 0 : 1;
    out << io::dump({{"replicates", rep_path.string()},
                     {"summary", sum_path.string()},
                     {"cells", summary.size()},
                     {"records", records.size()},
                     {"failures", failures}});
    return 0;
}

struct MpArgs {
    std::size_t n = 0, N = 0;
    std::string dist = "gaussian";
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_mp_check(const MpArgs& a, std::ostream& out)
{
    const MpCheckResult r = mp_check(a.n, a.N, design_kind_from_string(a.dist), a.seed);
    emit(to_json(r), a.out, out);
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Heritability estimation by spectral maximum likelihood", "herit"};
    app.require_subcommand(1);

    EstimateArgs ea;
    auto* est = app.add_subcommand("estimate", "estimate heritability from genotype and phenotype files");
    est->add_option("genotypes", ea.geno, "genotype file (0/1/2, comma or tab separated)")->required();
    est->add_option("phenotype", ea.pheno, "phenotype file, one value per line")->required();
    est->add_option("covariates", ea.covar, "optional covariate file");
    est->add_option("--out", ea.out, "write the JSON report here instead of stdout");
    est->add_option("--q", ea.q, "assumed fraction of causal markers; enables the sparse standard error");
    est->add_flag("--drop-monomorphic", ea.drop_monomorphic, "drop constant markers instead of failing");
    est->add_flag("--no-intercept", ea.no_intercept, "do not project the phenotype off the constant vector");
    est->add_flag("--real-design", ea.real_design, "the design file holds real values rather than genotypes");
    ea.solver.attach(*est);

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "simulate a cohort from a JSON configuration");
    sim->add_option("config", sa.config, "simulation config (JSON)")->required();
    sim->add_option("out_dir", sa.out_dir, "output directory");
    sim->add_option("--out", sa.out_dir, "output directory");
    sim->add_option("--seed", sa.seed, "override the config seed");

    StudyArgs st;
    auto* mc = app.add_subcommand("mc-study", "run a Monte-Carlo study over a parameter grid");
    mc->add_option("study", st.spec, "study file (JSON)")->required();
    mc->add_option("out_dir", st.out_dir, "output directory");
    mc->add_option("--out", st.out_dir, "output directory");
    mc->add_option("--seed", st.seed, "override the master seed");
    mc->add_option("--workers", st.workers, "worker threads");
    mc->add_flag("--allow-large", st.allow_large, "permit cells with more than 20000 markers");
    mc->add_flag("--no-intercept", st.no_intercept, "do not project the phenotype off the constant vector");
    st.solver.attach(*mc);

    MpArgs ma;
    auto* mp = app.add_subcommand("mp-check", "compare the kinship spectrum with the Marchenko-Pastur law");
    mp->add_option("n", ma.n, "individuals")->required();
    mp->add_option("N", ma.N, "markers")->required();
    mp->add_option("dist", ma.dist, "gaussian or genotype")->check(CLI::IsMember({"gaussian", "genotype"}));
    mp->add_option("--seed", ma.seed, "random seed")->capture_default_str();
    mp->add_option("--out", ma.out, "write the JSON here instead of stdout");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*est) return cmd_estimate(ea, out);
        if (*sim) {
            if (sa.out_dir.empty()) throw ConfigError("simulate: an output directory is required");
            return cmd_simulate(sa, out);
        }
        if (*mc) {
            if (st.out_dir.empty()) throw ConfigError("mc-study: an output directory is required");
            return cmd_mc_study(st, out);
        }
        if (*mp) return cmd_mp_check(ma, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const nlohmann::json::exception& e) {
        err << "error: invalid JSON: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace herit
