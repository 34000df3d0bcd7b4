#include "perpl/diagnostics.hpp"

namespace perpl {

const char *stage_name(Stage s) {
    switch (s) {
    case Stage::Parse: return "parse";
    case Stage::Desugar: return "desugar";
    case Stage::Typecheck: return "typecheck";
    case Stage::Transform: return "transform";
    case Stage::Semantics: return "semantics";
    case Stage::Solver: return "solver";
    case Stage::Internal: return "internal";
    }
    return "?";
}

std::string format_diagnostic(const Error &e, const std::string &file) {
    return file + ":" + std::to_string(e.pos().line) + ":" + std::to_string(e.pos().col) + ": error: " +
           e.what();
}

}  // namespace perpl
