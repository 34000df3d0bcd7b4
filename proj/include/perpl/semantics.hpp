#pragma once

#include "perpl/typecheck.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace perpl {

// An element of a finite type denotation. Products and function pairs are Tuples;
// sums and additive products are Tagged (index plus payload in items[0]).
struct SemValue {
    enum class Kind { Tuple, Tagged } kind = Kind::Tuple;
    std::size_t index = 0;
    std::vector<SemValue> items;

    bool operator==(const SemValue &) const = default;
};

// |⟦t⟧|, saturating at domain_cap.
inline constexpr std::uint64_t domain_cap = std::uint64_t{1} << 62;
std::uint64_t domain_size(const TypePtr &t);

std::vector<SemValue> enumerate_domain(const TypePtr &t);

// Values are numbered 0 .. |⟦t⟧|-1 in enumerate_domain order.
SemValue decode_value(const TypePtr &t, std::uint64_t index);
std::uint64_t encode_value(const TypePtr &t, const SemValue &v);

std::string render_value(const TypePtr &t, const SemValue &v);
inline std::string render_value(const TypePtr &t, std::uint64_t index) {
    return render_value(t, decode_value(t, index));
}

using VarId = std::uint32_t;

struct Monomial {
    std::uint32_t coef = 0;  // index into MSPE::coefs
    std::vector<VarId> vars;
};

struct MSPE {
    // Variables come in blocks: one per node (indexed by context assignment and value)
    // and one per global (indexed by value).
    struct Block {
        std::string label;  // "n12" or the global's name
        Context context;
        TypePtr type;
        std::uint64_t offset = 0, ctx_size = 1, type_size = 1;
    };
    struct Root {
        std::string value;
        VarId var;
    };

    std::vector<Rational> coefs;  // coefs[0] == 1
    std::vector<std::vector<Monomial>> eqs;
    std::vector<Root> roots;
    std::vector<Block> blocks;

    std::size_t size() const { return eqs.size(); }
    std::uint32_t coef_id(const Rational &q);
    std::string var_name(VarId v) const;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

// Denotation equations for every node, context assignment and value, plus one equation per
// global value. Throws BudgetExceeded when the variable count would exceed max_vars.
MSPE compile_mspe(const TypedProgram &p, std::uint64_t max_vars = 20'000'000);

// Σ over nodes of |⟦context⟧|·|⟦type⟧|, computed from annotations alone.
std::uint64_t count_expr_vars(const TypedProgram &p);

// Builds an MSPE by hand (for tests and the CLI's raw-system mode).
MSPE make_mspe(std::size_t nvars, const std::vector<std::vector<std::pair<Rational, std::vector<VarId>>>> &eqs);

std::string mspe_to_text(const MSPE &m);
std::string mspe_to_json(const MSPE &m);

}  // namespace perpl
