#pragma once

#include <stdexcept>
#include <string>

namespace trichome {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad caller input: malformed files, violated preconditions, undetectable
/// markers. The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

/// A fiducial could not be located or the layout is incomplete.
class DetectionError : public InputError {
public:
    using InputError::InputError;
};

}  // namespace trichome
