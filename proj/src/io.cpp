#include "herit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <openssl/evp.h>

#include "herit/error.hpp"

namespace herit::io {

namespace {

std::string strip(std::string_view s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line, char delim)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        out.push_back(strip(std::string_view(line).substr(start, pos == std::string::npos ? pos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

bool parse_double(const std::string& tok, double& v)
{
    if (tok.empty()) return false;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    return ec == std::errc() && ptr == last && std::isfinite(v);
}

struct Table {
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> line_numbers;
    bool header = false;
};

std::ifstream open_input(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

[[noreturn]] void parse_fail(const fs::path& path, std::size_t line, std::size_t col, const std::string& msg)
{
    std::string where = path.string() + ":" + std::to_string(line);
    if (col > 0) where += ", column " + std::to_string(col);
    throw ParseError(where + ": " + msg);
}

Table read_table(const fs::path& path)
{
    auto in = open_input(path);
    Table t;
    std::string line;
    std::size_t lineno = 0;
    char delim = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        if (delim == 0) delim = line.find('\t') != std::string::npos ? '\t' : ',';
        const auto toks = split(line, delim);
        std::vector<double> row(toks.size());
        bool numeric = true;
        std::size_t bad = 0;
        for (std::size_t k = 0; k < toks.size(); ++k) {
            if (!parse_double(toks[k], row[k])) {
                numeric = false;
                bad = k;
                break;
            }
        }
        if (!numeric) {
            if (t.rows.empty() && !t.header) {
                t.header = true;
                width = toks.size();
                continue;
            }
            parse_fail(path, lineno, bad + 1, "'" + toks[bad] + "' is not a number");
        }
        if (width == 0) width = row.size();
        if (row.size() != width)
            parse_fail(path, lineno, 0,
                       "expected " + std::to_string(width) + " fields, found " + std::to_string(row.size()));
        t.rows.push_back(std::move(row));
        t.line_numbers.push_back(lineno);
    }
    if (t.rows.empty()) throw ParseError(path.string() + ": no data rows");
    return t;
}

} // namespace

GenotypeMatrix read_genotypes(const fs::path& path)
{
    const Table t = read_table(path);
    GenotypeMatrix g;
    const auto n = static_cast<Eigen::Index>(t.rows.size());
    const auto m = static_cast<Eigen::Index>(t.rows.front().size());
    g.entries.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double v = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (v != 0.0 && v != 1.0 && v != 2.0)
                parse_fail(path, t.line_numbers[static_cast<std::size_t>(i)], static_cast<std::size_t>(j) + 1,
                           "genotype " + format_double(v) + " is not 0, 1 or 2");
            g.entries(i, j) = static_cast<std::uint8_t>(v);
        }
    }
    return g;
}

Eigen::VectorXd read_phenotype(const fs::path& path)
{
    const Table t = read_table(path);
    if (t.rows.front().size() != 1)
        parse_fail(path, t.line_numbers.front(), 0, "phenotype file must have exactly one value per line");
    Eigen::VectorXd y(static_cast<Eigen::Index>(t.rows.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = t.rows[i][0];
    return y;
}

Eigen::MatrixXd read_covariates(const fs::path& path)
{
    const Table t = read_table(path);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.rows.front().size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < t.rows[i].size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.rows[i][j];
    return x;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path)
{
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_genotypes(const fs::path& path, const GenotypeMatrix& w)
{
    std::string text;
    const Eigen::Index n = w.entries.rows();
    const Eigen::Index m = w.entries.cols();
    text.reserve(static_cast<std::size_t>((n + 1) * m * 2 + 16 * m));
    for (Eigen::Index j = 0; j < m; ++j) {
        if (j) text += ',';
        text += "snp" + std::to_string(j + 1);
    }
    text += '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            if (j) text += ',';
            text += static_cast<char>('0' + w.entries(i, j));
        }
        text += '\n';
    }
    write_text(path, text);
}

void write_phenotype(const fs::path& path, const Eigen::VectorXd& y)
{
    std::string text;
    for (Eigen::Index i = 0; i < y.size(); ++i) text += format_double(y(i)) + "\n";
    write_text(path, text);
}

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string sha256_file(const fs::path& path)
{
    auto in = open_input(path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw IoError("sha256: cannot allocate digest context");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

nlohmann::json to_json(const SimulationConfig& c)
{
    return {{"n", c.n},
            {"N", c.N},
            {"q", c.q},
            {"eta_star", c.eta_star},
            {"sigma_star2", c.sigma_star2},
            {"freq_lo", c.freq_lo},
            {"freq_hi", c.freq_hi},
            {"seed", c.seed},
            {"replicates", c.replicates},
            {"design", to_string(c.design)}};
}

SimulationConfig config_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw ConfigError("simulation config must be a JSON object");
    static const char* known[] = {"n",       "N",       "q",    "eta_star",   "sigma_star2",
                                  "freq_lo", "freq_hi", "seed", "replicates", "design"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw ConfigError("simulation config: unknown field '" + key + "'");
    }
    SimulationConfig c;
    try {
        c.n = j.at("n").get<std::size_t>();
        c.N = j.at("N").get<std::size_t>();
        c.q = j.at("q").get<double>();
        c.eta_star = j.at("eta_star").get<double>();
        c.sigma_star2 = j.value("sigma_star2", 1.0);
        c.freq_lo = j.value("freq_lo", 0.1);
        c.freq_hi = j.value("freq_hi", 0.5);
        c.seed = j.value("seed", std::uint64_t{1});
        c.replicates = j.value("replicates", std::size_t{1});
        c.design = design_kind_from_string(j.value("design", std::string("genotype")));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("simulation config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const SolverResult& r)
{
    return {{"eta_hat", r.eta_hat},
            {"sigma2_hat", r.sigma2_hat},
            {"loglik", r.loglik},
            {"iterations_per_start", r.iterations_per_start},
            {"converged", r.converged},
            {"start_estimates", r.start_estimates},
            {"chosen_start", r.chosen_start},
            {"clamped", r.clamped},
            {"grid_fallback", r.grid_fallback}};
}

nlohmann::json to_json(const EstimateReport& r)
{
    nlohmann::json j = {{"eta_hat", r.eta_hat},
                        {"sigma2_hat", r.sigma2_hat},
                        {"gamma_n2", r.gamma_n2},
                        {"se_q1", r.se_q1},
                        {"ci_level", r.ci_level},
                        {"ci_lo", r.ci_lo},
                        {"ci_hi", r.ci_hi},
                        {"a", r.a},
                        {"n", r.n},
                        {"n_effective", r.n_effective},
                        {"N", r.markers},
                        {"projected_dimensions", r.projected},
                        {"solver", to_json(r.solver)}};
    if (r.q_assumed) {
        j["q_assumed"] = *r.q_assumed;
        j["s_n"] = *r.s_n;
        j["tau_n2"] = *r.tau_n2;
        j["se_sparse"] = *r.se_sparse;
        j["ci_se"] = "se_sparse (assumed q)";
    } else {
        j["q_assumed"] = nullptr;
        j["ci_se"] = "se_q1";
    }
    return j;
}

namespace {

void dump_into(const nlohmann::json& j, std::string& out, int indent)
{
    const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
    const std::string close(static_cast<std::size_t>(indent), ' ');
    switch (j.type()) {
    case nlohmann::json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (const auto& [key, val] : j.items()) {
            if (!first) out += ",\n";
            first = false;
            out += pad + nlohmann::json(key).dump() + ": ";
            dump_into(val, out, indent + 2);
        }
        out += "\n" + close + "}";
        return;
    }
    case nlohmann::json::value_t::array: {
        const bool nested = std::any_of(j.begin(), j.end(), [](const nlohmann::json& v) { return v.is_structured(); });
        out += nested ? "[\n" + pad : "[";
        bool first = true;
        for (const auto& val : j) {
            if (!first) out += nested ? ",\n" + pad : ", ";
            first = false;
            dump_into(val, out, indent + 2);
        }
        out += nested ? "\n" + close + "]" : "]";
        return;
    }
    case nlohmann::json::value_t::number_float: {
        const double v = j.get<double>();
        out += std::isfinite(v) ? format_double(v) : "null";
        return;
    }
    default:
        out += j.dump();
    }
}

} // namespace

std::string dump(const nlohmann::json& j)
{
    std::string out;
    dump_into(j, out, 0);
    out += "\n";
    return out;
}

} // namespace herit::io
