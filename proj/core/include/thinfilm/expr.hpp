#ifndef THINFILM_EXPR_HPP
#define THINFILM_EXPR_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace thinfilm {

// Exact rational scalars. All symbolic coefficients are exact; doubles appear
// only in numeric evaluation.
using Rat = mpq_class;

bool rat_is_int(const Rat& q);
long rat_to_long(const Rat& q);
double rat_to_double(const Rat& q);
Rat rat_pow_int(const Rat& q, long n);
std::string rat_to_string(const Rat& q);
std::uint64_t rat_hash(const Rat& q);

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t position)
        : Error(msg + " (at position " + std::to_string(position) + ")"), pos(position) {}
    std::size_t pos;
};
struct UnsupportedError : Error {
    using Error::Error;
};
struct JetOrderError : Error {
    using Error::Error;
};
struct EvalDomainError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Expression trees.
//
// Node kinds:
//   Number   exact rational constant
//   Symbol   coordinate or parameter (t, x, u, y, m, lambda, ...)
//   Jet      derivative coordinate of a registered dependent symbol,
//            e.g. u_xx, v_yyy, tau_tu, f_u; the multi-index is aligned with
//            the dependent's independents and is never all-zero (that is the
//            bare Symbol)
//   Func     opaque unary application with derivative order, e.g. f(u),
//            df2(u), dv3(x - alpha*t)
//   Sum, Product, Power, Exp (e^arg), Log (ln arg)
//
// Trees are immutable; every operation returns fresh trees.
// ---------------------------------------------------------------------------

enum class Kind : std::uint8_t { Number, Symbol, Jet, Func, Sum, Product, Power, Exp, Log };

class Expr;

struct Node {
    Kind kind;
    std::uint64_t h = 0;
    Rat value;                       // Number
    int id = -1;                     // Symbol id, Jet dependent id, Func id
    int order = 0;                   // Func derivative order
    std::vector<std::uint8_t> midx;  // Jet multi-index
    std::vector<Expr> kids;          // args / terms / factors / {base,exp} / {arg}
};

class Expr {
public:
    Expr() = default;
    explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}

    bool null() const { return !n_; }
    const Node& node() const { return *n_; }
    Kind kind() const { return n_->kind; }
    std::uint64_t hash() const { return n_->h; }
    const Rat& value() const { return n_->value; }
    int id() const { return n_->id; }
    int order() const { return n_->order; }
    const std::vector<std::uint8_t>& midx() const { return n_->midx; }
    const std::vector<Expr>& kids() const { return n_->kids; }

    bool is_number() const { return n_ && n_->kind == Kind::Number; }
    bool is_zero() const { return is_number() && n_->value == 0; }
    bool is_one() const { return is_number() && n_->value == 1; }
    bool is_integer() const { return is_number() && rat_is_int(n_->value); }

private:
    std::shared_ptr<const Node> n_;
};

// Total order on expressions: (hash, structural). Deterministic across runs.
int cmp(const Expr& a, const Expr& b);
bool same(const Expr& a, const Expr& b);

// ---------------------------------------------------------------------------
// Symbol / function registry. Fixed vocabulary, immutable after start-up.
// ---------------------------------------------------------------------------

struct SymbolDef {
    std::string name;
    bool parameter = false;
    std::vector<int> indeps;  // non-empty => dependent symbol with jets
    int jet_cap = 0;          // max total derivative order
};

struct FuncDef {
    std::string name;
    int dcap = 0;        // max derivative order
    int linked_sym = -1; // func(arg == canonical independent) collapses to a jet
};

class Registry {
public:
    static const Registry& get();

    int symbol_id(const std::string& name) const;  // -1 if unknown
    int func_id(const std::string& name) const;
    const SymbolDef& sym(int id) const { return syms_.at(static_cast<std::size_t>(id)); }
    const FuncDef& fn(int id) const { return fns_.at(static_cast<std::size_t>(id)); }
    int num_symbols() const { return static_cast<int>(syms_.size()); }

private:
    Registry();
    std::vector<SymbolDef> syms_;
    std::vector<FuncDef> fns_;
    std::map<std::string, int> sym_by_name_;
    std::map<std::string, int> fn_by_name_;
};

// ---------------------------------------------------------------------------
// Builders. Light construction only; canonicalization happens in normalize().
// ---------------------------------------------------------------------------

Expr num(long n);
Expr num(long n, long d);
Expr num(const Rat& q);
Expr sym(int id);
Expr sym(const std::string& name);
Expr jet(int dep, std::vector<std::uint8_t> midx);
Expr jet(const std::string& dep, const std::string& suffix);  // e.g. jet("u","xx")
Expr fapply(int fn, int order, Expr arg);
Expr fapply(const std::string& fn, int order, Expr arg);
Expr sum(std::vector<Expr> terms);
Expr prod(std::vector<Expr> factors);
Expr pow(Expr base, Expr exponent);
Expr pow(Expr base, long exponent);
Expr exp_(Expr arg);
Expr log_(Expr arg);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr div(const Expr& a, const Expr& b);

// ---------------------------------------------------------------------------
// Core operations.
// ---------------------------------------------------------------------------

// Canonical form: sums of monomials with exact rational coefficients over a
// single monomial denominator; idempotent; normalize(a - b) == 0 iff a and b
// are equal within the supported rational-exponential-logarithmic class.
Expr normalize(const Expr& e);

// Partial derivative with respect to a symbol or an atom (jet or opaque
// application). All other atoms, including jets, are treated as independent;
// opaque applications chain through their argument.
Expr diff(const Expr& e, const Expr& atom);
Expr diff(const Expr& e, const std::string& symbol_name);

// Total derivative along a registered direction symbol. Dependent symbols and
// their jets chain through their independents; jet caps are enforced.
Expr total_derivative(const Expr& e, int direction);
Expr total_derivative(const Expr& e, const std::string& direction);

// Capture-free atom replacement followed by normalize().
Expr substitute(const Expr& e, const Expr& target, const Expr& replacement);
Expr substitute_all(const Expr& e, const std::vector<std::pair<Expr, Expr>>& rules);

// All distinct atoms (symbols, jets, opaque applications) in e, in canonical
// order.
std::vector<Expr> collect_atoms(const Expr& e);

// Grammar-conformant rendering; parse(to_string(normalize(e))) round-trips.
std::string to_string(const Expr& e);

// Parser for the documented grammar (docs/grammar.md).
Expr parse(const std::string& text);

}  // namespace thinfilm

#endif
