#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace vimu {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Base class for every error the toolkit reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A malformed input file; carries the 1-based line it was detected on.
class ParseError : public Error {
public:
    ParseError(std::string_view source, std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input data violates a documented precondition (shape, units, ranges).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Where a window or trace came from.
enum class Provenance { real, virtual_text, virtual_video, augmented };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

}  // namespace vimu
