#pragma once

#include <stdexcept>
#include <string>

namespace bbox {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violates an operation's precondition (bad label, non-finite logits, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Array lengths or image shapes do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Tile grid does not fit the image.
class InvalidGrid : public Error {
public:
    using Error::Error;
};

/// The per-attack query budget is used up.
class BudgetExhausted : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

/// Failure reported by a model oracle. Remote oracles distinguish the causes.
class OracleError : public Error {
public:
    enum class Kind { Timeout, Transport, Http, Malformed, Shape };

    OracleError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace bbox
