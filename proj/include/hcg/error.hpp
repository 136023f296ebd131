#pragma once

#include <stdexcept>
#include <string>

namespace hcg {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor or operator shape contract violated.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// API misuse (missing gradient, backward on non-scalar, unknown name).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (PNM header, manifest, config text).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Checkpoint magic bytes do not match.
class MagicError : public Error {
public:
    using Error::Error;
};

/// Checkpoint format version is not supported.
class VersionError : public Error {
public:
    using Error::Error;
};

/// Checkpoint checksum mismatch (corrupted or truncated file).
class ChecksumError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure (unreadable/unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace hcg
