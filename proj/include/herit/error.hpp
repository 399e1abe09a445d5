#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace herit {

// Exit-code classes surfaced by the CLI: usage/config problems map to 1,
// data and numerical problems map to 2.
enum class ErrorKind {
    Config,
    Shape,
    Parse,
    MonomorphicColumn,
    RankDeficientCovariates,
    DegenerateData,
    UnidentifiableModel,
    NumericalFailure,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    int exit_code() const noexcept
    {
        switch (kind_) {
        case ErrorKind::Config:
        case ErrorKind::Io:
            return 1;
        default:
            return 2;
        }
    }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& w) : Error(ErrorKind::Shape, w) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& w) : Error(ErrorKind::Parse, w) {}
};
struct RankDeficientCovariates : Error {
    explicit RankDeficientCovariates(const std::string& w) : Error(ErrorKind::RankDeficientCovariates, w) {}
};
struct DegenerateData : Error {
    explicit DegenerateData(const std::string& w) : Error(ErrorKind::DegenerateData, w) {}
};
struct UnidentifiableModel : Error {
    explicit UnidentifiableModel(const std::string& w) : Error(ErrorKind::UnidentifiableModel, w) {}
};
struct NumericalFailure : Error {
    explicit NumericalFailure(const std::string& w) : Error(ErrorKind::NumericalFailure, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};

class MonomorphicColumn : public Error {
public:
    explicit MonomorphicColumn(std::vector<std::size_t> columns)
        : Error(ErrorKind::MonomorphicColumn, describe(columns)), columns_(std::move(columns))
    {
    }
    const std::vector<std::size_t>& columns() const noexcept { return columns_; }

private:
    static std::string describe(const std::vector<std::size_t>& cols)
    {
        std::string msg = "monomorphic column(s) with zero variance:";
        const std::size_t shown = cols.size() < 20 ? cols.size() : 20;
        for (std::size_t i = 0; i < shown; ++i) msg += " " + std::to_string(cols[i]);
        if (shown < cols.size()) msg += " ... (" + std::to_string(cols.size()) + " total)";
        return msg;
    }

    std::vector<std::size_t> columns_;
};

} // namespace herit
