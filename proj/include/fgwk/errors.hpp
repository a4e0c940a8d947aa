#pragma once

#include <stdexcept>
#include <string>

namespace fgwk {

// Base of every error the library throws. Commands map any Error to a
// nonzero exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or widths.
class DimensionError : public Error {
public:
    using Error::Error;
};

// An index (label, class, gather position) outside its valid range.
class IndexError : public Error {
public:
    using Error::Error;
};

// A precondition on arguments that is not a shape or index problem.
class ContractError : public Error {
public:
    using Error::Error;
};

// Invalid configuration values; the message names the offending key.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or incompatible files (checkpoints, manifests, images).
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace fgwk
