#include "herit/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "herit/error.hpp"
#include "herit/io.hpp"

namespace herit {

void StudySpec::validate() const
{
    base.validate();
    for (double e : eta_grid)
        if (!(e >= 0.0 && e < 1.0)) throw ConfigError("eta_grid values must lie in [0, 1)");
    for (double a : a_grid)
        if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("a_grid values must be positive");
    for (double q : q_grid)
        if (!(q > 0.0 && q <= 1.0)) throw ConfigError("q_grid values must lie in (0, 1]");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    for (const StudyCell& c : study_cells(*this)) {
        if (c.N < 1) throw ConfigError("a = " + io::format_double(c.a) + " gives N = 0");
        if (c.N > kMaxDeskMarkers && !allow_large)
            throw ConfigError("cell with a = " + io::format_double(c.a) + " needs N = " + std::to_string(c.N) +
                              " > " + std::to_string(kMaxDeskMarkers) + " markers; pass --allow-large to run it");
    }
}

std::vector<StudyCell> study_cells(const StudySpec& spec)
{
    const std::vector<double> etas = spec.eta_grid.empty() ? std::vector<double>{spec.base.eta_star} : spec.eta_grid;
    const std::vector<double> as = spec.a_grid.empty()
                                       ? std::vector<double>{static_cast<double>(spec.base.n) /
                                                             static_cast<double>(spec.base.N)}
                                       : spec.a_grid;
    const std::vector<double> qs = spec.q_grid.empty() ? std::vector<double>{spec.base.q} : spec.q_grid;
    std::vector<StudyCell> cells;
    for (double e : etas)
        for (double a : as)
            for (double q : qs) {
                StudyCell c;
                c.index = cells.size();
                c.eta_star = e;
                c.a = a;
                c.q = q;
                c.n = spec.base.n;
                c.N = spec.a_grid.empty() ? spec.base.N
                                          : static_cast<std::size_t>(std::llround(static_cast<double>(c.n) / a));
                cells.push_back(c);
            }
    return cells;
}

namespace {

std::vector<double> doubles(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key)) return {};
    return j.at(key).get<std::vector<double>>();
}

} // namespace

StudySpec study_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw ConfigError("study spec must be a JSON object");
    StudySpec s;
    try {
        s.base = io::config_from_json(j.at("base"));
        s.eta_grid = doubles(j, "eta_grid");
        s.a_grid = doubles(j, "a_grid");
        s.q_grid = doubles(j, "q_grid");
        if (j.contains("outputs")) {
            const auto& o = j.at("outputs");
            s.replicates_csv = o.value("replicates", s.replicates_csv);
            s.summary_csv = o.value("summary", s.summary_csv);
        }
        s.workers = j.value("workers", std::size_t{1});
        s.allow_large = j.value("allow_large", false);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("study spec: ") + e.what());
    }
    s.validate();
    return s;
}

nlohmann::json to_json(const StudySpec& s)
{
    return {{"base", io::to_json(s.base)},
            {"eta_grid", s.eta_grid},
            {"a_grid", s.a_grid},
            {"q_grid", s.q_grid},
            {"outputs", {{"replicates", s.replicates_csv}, {"summary", s.summary_csv}}},
            {"workers", s.workers},
            {"allow_large", s.allow_large}};
}

ReplicateRecord run_replicate(const SimulationConfig& base, const StudyCell& cell, std::size_t replicate,
                              const EstimateOptions& opts)
{
    ReplicateRecord r;
    r.cell = cell.index;
    r.replicate_id = replicate;
    r.seed = replicate_seed(base.seed, cell.index, replicate);
    r.eta_star = cell.eta_star;
    r.a = cell.a;
    r.q = cell.q;
    r.n = cell.n;
    r.N = cell.N;
    try {
        SimulationConfig cfg = base;
        cfg.eta_star = cell.eta_star;
        cfg.q = cell.q;
        cfg.n = cell.n;
        cfg.N = cell.N;
        const Cohort cohort = simulate_cohort(cfg, r.seed);
        EstimateOptions eo = opts;
        eo.q = cell.q;
        const EstimateReport rep = estimate(cohort.z, cohort.y, std::nullopt, eo);
        r.eta_hat = rep.eta_hat;
        r.sigma2_hat = rep.sigma2_hat;
        r.se_q1 = rep.se_q1;
        r.se_sparse = *rep.se_sparse;
        r.pivot_q1 = (rep.eta_hat - cell.eta_star) / rep.se_q1;
        r.pivot_sparse = (rep.eta_hat - cell.eta_star) / r.se_sparse;
        r.ci_lo = rep.ci_lo;
        r.ci_hi = rep.ci_hi;
        r.covered = rep.ci_lo <= cell.eta_star && cell.eta_star <= rep.ci_hi;
        r.iterations = rep.solver.iterations();
        r.clamped = rep.solver.clamped;
    } catch (const std::exception& e) {
        r.error = e.what();
        if (r.error.empty()) r.error = "unknown error";
    }
    return r;
}

std::vector<ReplicateRecord> run_study(const StudySpec& spec, const EstimateOptions& opts)
{
    spec.validate();
    const auto cells = study_cells(spec);
    const std::size_t reps = spec.base.replicates;
    const std::size_t total = cells.size() * reps;
    std::vector<ReplicateRecord> out(total);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= total) return;
            const StudyCell& cell = cells[k / reps];
            out[k] = run_replicate(spec.base, cell, k % reps, opts);
            const std::size_t d = done.fetch_add(1) + 1;
            if (d % 50 == 0 || d == total) spdlog::debug("mc-study: {}/{} replicates", d, total);
        }
    };

    const std::size_t nthreads = std::min(spec.workers, std::max<std::size_t>(total, 1));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return out;
}

MeanVar mean_var(const std::vector<double>& xs)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (xs.empty()) return {nan, nan};
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {m, nan};
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    return {m, v / static_cast<double>(xs.size() - 1)};
}

std::vector<SummaryRow> summarize(const std::vector<ReplicateRecord>& records)
{
    std::map<std::size_t, std::vector<const ReplicateRecord*>> by_cell;
    for (const auto& r : records) by_cell[r.cell].push_back(&r);

    std::vector<SummaryRow> rows;
    for (const auto& [cell, recs] : by_cell) {
        SummaryRow s;
        const ReplicateRecord& first = *recs.front();
        s.cell = cell;
        s.eta_star = first.eta_star;
        s.a = first.a;
        s.q = first.q;
        s.n = first.n;
        s.N = first.N;
        s.replicates = recs.size();
        std::vector<double> eta, se1, sesp, p1, psp;
        std::size_t covered = 0;
        for (const ReplicateRecord* r : recs) {
            if (!r->ok()) {
                ++s.failures;
                continue;
            }
            eta.push_back(r->eta_hat);
            se1.push_back(r->se_q1);
            sesp.push_back(r->se_sparse);
            p1.push_back(r->pivot_q1);
            psp.push_back(r->pivot_sparse);
            covered += r->covered ? 1 : 0;
            s.clamped += r->clamped ? 1 : 0;
        }
        const MeanVar e = mean_var(eta);
        s.mean_eta_hat = e.mean;
        s.sd_eta_hat = std::sqrt(e.var);
        s.mean_se_q1 = mean_var(se1).mean;
        s.mean_se_sparse = mean_var(sesp).mean;
        s.coverage = eta.empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : static_cast<double>(covered) / static_cast<double>(eta.size());
        const MeanVar a = mean_var(p1);
        const MeanVar b = mean_var(psp);
        s.pivot_q1_mean = a.mean;
        s.pivot_q1_var = a.var;
        s.pivot_sparse_mean = b.mean;
        s.pivot_sparse_var = b.var;
        rows.push_back(s);
    }
    return rows;
}

namespace {

const char* kReplicateHeader = "cell,replicate_id,seed,eta_star,a,q,n,N,eta_hat,sigma2_hat,se_q1,se_sparse,"
                               "pivot_q1,pivot_sparse,ci_lo,ci_hi,covered,iterations,clamped,error";

std::string quote(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::vector<std::string> csv_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                in_quotes = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string num_or_empty(bool ok, double v) { return ok ? io::format_double(v) : std::string(); }

double parse_num(const std::string& s)
{
    if (s.empty() || s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ParseError("replicate CSV: bad number '" + s + "'");
    return v;
}

} // namespace

std::string replicates_to_csv(const std::vector<ReplicateRecord>& records)
{
    std::string out = std::string(kReplicateHeader) + "\n";
    for (const auto& r : records) {
        const bool ok = r.ok();
        out += std::to_string(r.cell) + "," + std::to_string(r.replicate_id) + "," + std::to_string(r.seed) + "," +
               io::format_double(r.eta_star) + "," + io::format_double(r.a) + "," + io::format_double(r.q) + "," +
               std::to_string(r.n) + "," + std::to_string(r.N) + "," + num_or_empty(ok, r.eta_hat) + "," +
               num_or_empty(ok, r.sigma2_hat) + "," + num_or_empty(ok, r.se_q1) + "," +
               num_or_empty(ok, r.se_sparse) + "," + num_or_empty(ok, r.pivot_q1) + "," +
               num_or_empty(ok, r.pivot_sparse) + "," + num_or_empty(ok, r.ci_lo) + "," +
               num_or_empty(ok, r.ci_hi) + "," + (ok ? (r.covered ? "1" : "0") : "") + "," +
               (ok ? std::to_string(r.iterations) : "") + "," + (ok ? (r.clamped ? "1" : "0") : "") + "," +
               quote(r.error) + "\n";
    }
    return out;
}

std::vector<ReplicateRecord> replicates_from_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kReplicateHeader)
        throw ParseError("replicate CSV: unexpected header");
    std::vector<ReplicateRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = csv_fields(line);
        if (f.size() != 20) throw ParseError("replicate CSV: expected 20 fields, got " + std::to_string(f.size()));
        ReplicateRecord r;
        r.cell = std::stoull(f[0]);
        r.replicate_id = std::stoull(f[1]);
        r.seed = std::stoull(f[2]);
        r.eta_star = parse_num(f[3]);
        r.a = parse_num(f[4]);
        r.q = parse_num(f[5]);
        r.n = std::stoull(f[6]);
        r.N = std::stoull(f[7]);
        r.error = f[19];
        if (r.ok()) {
            r.eta_hat = parse_num(f[8]);
            r.sigma2_hat = parse_num(f[9]);
            r.se_q1 = parse_num(f[10]);
            r.se_sparse = parse_num(f[11]);
            r.pivot_q1 = parse_num(f[12]);
            r.pivot_sparse = parse_num(f[13]);
            r.ci_lo = parse_num(f[14]);
            r.ci_hi = parse_num(f[15]);
            r.covered = f[16] == "1";
            r.iterations = std::stoi(f[17]);
            r.clamped = f[18] == "1";
        }
        out.push_back(r);
    }
    return out;
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows)
{
    std::string out = "cell,eta_star,a,q,n,N,replicates,failures,mean_eta_hat,sd_eta_hat,mean_se_q1,"
                      "mean_se_sparse,coverage,pivot_q1_mean,pivot_q1_var,pivot_sparse_mean,pivot_sparse_var,"
                      "clamped\n";
    for (const auto& s : rows) {
        out += std::to_string(s.cell) + "," + io::format_double(s.eta_star) + "," + io::format_double(s.a) + "," +
               io::format_double(s.q) + "," + std::to_string(s.n) + "," + std::to_string(s.N) + "," +
               std::to_string(s.replicates) + "," + std::to_string(s.failures) + "," +
               io::format_double(s.mean_eta_hat) + "," + io::format_double(s.sd_eta_hat) + "," +
               io::format_double(s.mean_se_q1) + "," + io::format_double(s.mean_se_sparse) + "," +
               io::format_double(s.coverage) + "," + io::format_double(s.pivot_q1_mean) + "," +
               io::format_double(s.pivot_q1_var) + "," + io::format_double(s.pivot_sparse_mean) + "," +
               io::format_double(s.pivot_sparse_var) + "," + std::to_string(s.clamped) + "\n";
    }
    return out;
}

MpCheckResult mp_check(std::size_t n, std::size_t N, DesignKind dist, std::uint64_t seed, double threshold)
{
    if (n < 2 || N < 2) throw ConfigError("mp-check: n and N must be at least 2");
    MpCheckResult res;
    res.n = n;
    res.N = N;
    res.dist = dist;
    res.seed = seed;
    res.threshold = threshold;

    Eigen::MatrixXd z;
    if (dist == DesignKind::Gaussian) {
        Rng rng = Rng::stream(seed, {streams::gaussian_design});
        z = standardize(sample_gaussian_design(n, N, rng), MonomorphicPolicy::Error).z;
    } else {
        Rng freq_rng = Rng::stream(seed, {streams::frequencies});
        Rng geno_rng = Rng::stream(seed, {streams::genotypes});
        const auto freqs = sample_allele_frequencies(N, 0.1, 0.5, freq_rng);
        z = standardize(sample_polymorphic_genotypes(n, freqs, geno_rng), MonomorphicPolicy::Error).z;
    }
    const Eigen::MatrixXd r = kinship(z);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalFailure("mp-check: eigensolver did not converge");
    Eigen::VectorXd lambdas = es.eigenvalues();
    for (Eigen::Index i = 0; i < lambdas.size(); ++i)
        if (lambdas(i) < 0.0 && lambdas(i) > -kEigenClampTolerance) lambdas(i) = 0.0;

    res.a = static_cast<double>(n) / static_cast<double>(N);
    const MPLaw law(res.a);
    const double lo = -0.1;
    const double hi = law.a_plus + 0.1;
    constexpr int kPoints = 2001;
    double sup = 0.0;
    for (int k = 0; k < kPoints; ++k) {
        const double x = lo + (hi - lo) * static_cast<double>(k) / (kPoints - 1);
        sup = std::max(sup, std::abs(esd(lambdas, x) - mp_cdf(law, x)));
    }
    res.ks_distance = sup;
    res.pass = sup < threshold;
    return res;
}

nlohmann::json to_json(const MpCheckResult& r)
{
    return {{"n", r.n},          {"N", r.N},
            {"dist", to_string(r.dist)}, {"seed", r.seed},
            {"a", r.a},          {"ks_distance", r.ks_distance},
            {"threshold", r.threshold}, {"pass", r.pass}};
}

} // namespace herit
