#pragma once

#include <stdexcept>
#include <string>

namespace loadcast {

/// Bad caller input: violated precondition, malformed file, invalid config.
/// The CLI maps this to exit code 2.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input that is well-formed but numerically degenerate for the requested
/// computation (e.g. zero-variance residuals).
class DegenerateInput : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// A file that a phase needs is missing.
class MissingArtifact : public InvalidInput {
public:
    MissingArtifact(const std::string& path, const std::string& producer)
        : InvalidInput("missing artifact '" + path + "' (produced by `loadcast " + producer + "`)"),
          path_(path), producer_(producer) {}

    const std::string& path() const noexcept { return path_; }
    const std::string& producer() const noexcept { return producer_; }

private:
    std::string path_;
    std::string producer_;
};

}  // namespace loadcast
