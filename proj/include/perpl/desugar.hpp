#pragma once

#include "perpl/core.hpp"
#include "perpl/syntax.hpp"

namespace perpl {

// Name of the placeholder global that stands for `==` until operand types are known.
inline const char *const eq_placeholder = "==";

// Lowers a surface program to core. Missing annotations become metavariables and every
// datatype mention gets a fresh μ tag; infer_tags resolves both.
Program desugar(const SurfaceProgram &p);

}  // namespace perpl
