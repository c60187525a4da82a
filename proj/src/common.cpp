#include "vimu/common.hpp"

#include <fmt/format.h>

namespace vimu {

ParseError::ParseError(std::string_view source, std::size_t line, const std::string& what)
    : Error(fmt::format("{}:{}: {}", source, line, what)), line_(line) {}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::real: return "real";
        case Provenance::virtual_text: return "virtual_text";
        case Provenance::virtual_video: return "virtual_video";
        case Provenance::augmented: return "augmented";
    }
    return "unknown";
}

Provenance provenance_from_string(std::string_view s) {
    if (s == "real") return Provenance::real;
    if (s == "virtual_text") return Provenance::virtual_text;
    if (s == "virtual_video") return Provenance::virtual_video;
    if (s == "augmented") return Provenance::augmented;
    throw InvalidArgument(fmt::format("unknown provenance '{}'", s));
}

}  // namespace vimu
