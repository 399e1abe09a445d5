#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "herit/pipeline.hpp"
#include "herit/synth.hpp"

namespace herit {

inline constexpr std::size_t kMaxDeskMarkers = 20000;

struct StudySpec {
    SimulationConfig base;
    std::vector<double> eta_grid; // empty: {base.eta_star}
    std::vector<double> a_grid;   // empty: {base.n / base.N}; N = round(n / a)
    std::vector<double> q_grid;   // empty: {base.q}
    std::string replicates_csv = "replicates.csv";
    std::string summary_csv = "summary.csv";
    std::size_t workers = 1;
    bool allow_large = false;

    void validate() const;
};

StudySpec study_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StudySpec& s);

struct StudyCell {
    std::size_t index = 0;
    double eta_star = 0.0;
    double a = 0.0;
    double q = 1.0;
    std::size_t n = 0;
    std::size_t N = 0;
};

// Cells in (eta, a, q) order, q varying fastest.
std::vector<StudyCell> study_cells(const StudySpec& spec);

struct ReplicateRecord {
    std::size_t cell = 0;
    std::size_t replicate_id = 0;
    std::uint64_t seed = 0;
    double eta_star = 0.0;
    double a = 0.0;
    double q = 1.0;
    std::size_t n = 0;
    std::size_t N = 0;
    double eta_hat = 0.0;
    double sigma2_hat = 0.0;
    double se_q1 = 0.0;
    double se_sparse = 0.0; // with the cell's q as the assumed q
    double pivot_q1 = 0.0;
    double pivot_sparse = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    bool covered = false;
    int iterations = 0;
    bool clamped = false;
    std::string error; // non-empty when the replicate failed

    bool ok() const { return error.empty(); }
};

// Simulates and fits one replicate. Failures are captured in `error`.
ReplicateRecord run_replicate(const SimulationConfig& base, const StudyCell& cell, std::size_t replicate,
                              const EstimateOptions& opts);

// All replicates of all cells, ordered by (cell, replicate) whatever the
// worker count.
std::vector<ReplicateRecord> run_study(const StudySpec& spec, const EstimateOptions& opts);

struct SummaryRow {
    std::size_t cell = 0;
    double eta_star = 0.0;
    double a = 0.0;
    double q = 1.0;
    std::size_t n = 0;
    std::size_t N = 0;
    std::size_t replicates = 0;
    std::size_t failures = 0;
    double mean_eta_hat = 0.0;
    double sd_eta_hat = 0.0;
    double mean_se_q1 = 0.0;
    double mean_se_sparse = 0.0;
    double coverage = 0.0;
    double pivot_q1_mean = 0.0;
    double pivot_q1_var = 0.0;
    double pivot_sparse_mean = 0.0;
    double pivot_sparse_var = 0.0;
    std::size_t clamped = 0;
};

std::vector<SummaryRow> summarize(const std::vector<ReplicateRecord>& records);

std::string replicates_to_csv(const std::vector<ReplicateRecord>& records);
std::vector<ReplicateRecord> replicates_from_csv(const std::string& text);
std::string summary_to_csv(const std::vector<SummaryRow>& rows);

struct MpCheckResult {
    std::size_t n = 0;
    std::size_t N = 0;
    DesignKind dist = DesignKind::Gaussian;
    std::uint64_t seed = 0;
    double a = 0.0;
    double ks_distance = 0.0;
    double threshold = 0.05;
    bool pass = false;
};

// Sup distance between the eigenvalue ESD of R and the Marchenko-Pastur CDF
// on 2001 points spanning [-0.1, a_plus + 0.1].
MpCheckResult mp_check(std::size_t n, std::size_t N, DesignKind dist, std::uint64_t seed, double threshold = 0.05);

nlohmann::json to_json(const MpCheckResult& r);

// Sample mean and (n - 1)-denominator variance.
struct MeanVar {
    double mean;
    double var;
};
MeanVar mean_var(const std::vector<double>& xs);

} // namespace herit
