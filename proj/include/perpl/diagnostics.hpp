#pragma once

#include <stdexcept>
#include <string>

namespace perpl {

struct SourcePos {
    int line = 0;
    int col = 0;
};

enum class Stage { Parse, Desugar, Typecheck, Transform, Semantics, Solver, Internal };

const char *stage_name(Stage s);

class Error : public std::runtime_error {
public:
    Error(Stage stage, SourcePos pos, const std::string &message)
        : std::runtime_error(message), stage_(stage), pos_(pos) {}

    Stage stage() const { return stage_; }
    SourcePos pos() const { return pos_; }

private:
    Stage stage_;
    SourcePos pos_;
};

// Raised when the DR-graph admits no elimination order.
class NoDRSequence : public Error {
public:
    NoDRSequence(const std::string &message, std::string residual_dot)
        : Error(Stage::Transform, {}, message), dot_(std::move(residual_dot)) {}
    const std::string &residual_dot() const { return dot_; }

private:
    std::string dot_;
};

// `file:line:col: error: message`
std::string format_diagnostic(const Error &e, const std::string &file);

}  // namespace perpl
