#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbnet {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: files, schemas, column types.
class DataError : public Error {
public:
    using Error::Error;
};

/// A model could not be fitted or evaluated.
class ModelError : public Error {
public:
    using Error::Error;
};

class RankDeficientError : public ModelError {
public:
    RankDeficientError(const std::string& what, std::vector<std::string> aliased)
        : ModelError(what), aliased_(std::move(aliased)) {}

    const std::vector<std::string>& aliased() const noexcept { return aliased_; }

private:
    std::vector<std::string> aliased_;
};

/// Raised by likelihood weighting when every particle carries zero weight.
class ZeroWeightError : public ModelError {
public:
    ZeroWeightError(const std::string& what, std::vector<std::size_t> rows = {})
        : ModelError(what), rows_(std::move(rows)) {}

    const std::vector<std::size_t>& rows() const noexcept { return rows_; }

private:
    std::vector<std::size_t> rows_;
};

}  // namespace hbnet
