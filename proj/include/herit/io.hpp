#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>
#include "json.hpp"

#include "herit/inference.hpp"
#include "herit/synth.hpp"

namespace herit::io {

namespace fs = std::filesystem;

// Text formats
//
// Genotypes: rows = individuals, columns = markers, entries 0/1/2 separated by
// commas or tabs (detected from the first line), optional single header row.
// Phenotype: one decimal per line, optional header line.
// Covariates: same layout as genotypes with real-valued entries.
//
// Parse failures throw ParseError naming the file, line and column.

GenotypeMatrix read_genotypes(const fs::path& path);
Eigen::VectorXd read_phenotype(const fs::path& path);
Eigen::MatrixXd read_covariates(const fs::path& path);

void write_genotypes(const fs::path& path, const GenotypeMatrix& w);
void write_phenotype(const fs::path& path, const Eigen::VectorXd& y);

// 17 significant digits, so doubles survive a text round trip.
std::string format_double(double v);

std::string sha256_file(const fs::path& path);

// Writes `text` to `path`, throwing IoError when the file cannot be written.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

nlohmann::json to_json(const SimulationConfig& cfg);
SimulationConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SolverResult& r);
nlohmann::json to_json(const EstimateReport& r);

// Serializes with 17-significant-digit floats.
std::string dump(const nlohmann::json& j);

} // namespace herit::io
