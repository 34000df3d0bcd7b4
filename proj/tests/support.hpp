#pragma once

#include "perpl/pipeline.hpp"

#include <string>

#ifndef PERPL_CORPUS_DIR
#define PERPL_CORPUS_DIR "corpus"
#endif

namespace perpl::test {

inline std::string corpus_path(const std::string &name) { return std::string(PERPL_CORPUS_DIR) + "/" + name + ".ppl"; }
inline std::string corpus_source(const std::string &name) { return read_file(corpus_path(name)); }

// Cons A (Cons A ... Nil) with n terminals.
inline std::string a_string(int n) {
    std::string s = "Nil";
    for (int i = 0; i < n; ++i) s = "(Cons A " + s + ")";
    return s;
}

// Replaces the input string literal of a corpus main expression (always aaa) by a^n.
inline std::string with_input(std::string source, int n) {
    const std::string aaa = a_string(3);
    auto at = source.rfind(aaa);
    if (at != std::string::npos) source.replace(at, aaa.size(), a_string(n));
    return source;
}

inline const std::vector<std::string> &corpus_names() {
    static const std::vector<std::string> names{"coin", "fair_loop", "pcfg_unit", "cfg_parse", "counter", "pda", "epda"};
    return names;
}

}  // namespace perpl::test
