#pragma once

#include <stdexcept>
#include <string>

namespace advforge {

/// Base class for all advforge errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file (JSON, embeddings, lexicon, ...).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

/// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(what) {}
};

/// Distractor generation exhausted its retry budget without passing the
/// semantic difference check.
class NoDistractorError : public Error {
public:
    explicit NoDistractorError(const std::string& what) : Error(what) {}
};

/// The requested (negative, positive) transformation pair cannot be applied.
class UnsupportedCompositionError : public Error {
public:
    explicit UnsupportedCompositionError(const std::string& what) : Error(what) {}
};

/// Linear-algebra failure (e.g. Cholesky breakdown after max jitter).
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what) {}
};

/// Invalid run configuration (missing paths, bad flag combinations).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

} // namespace advforge
