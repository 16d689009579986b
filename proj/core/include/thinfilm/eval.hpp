#ifndef THINFILM_EVAL_HPP
#define THINFILM_EVAL_HPP

#include <random>
#include <span>
#include <vector>

#include "thinfilm/expr.hpp"

namespace thinfilm {

// Bindings from canonical atoms (symbols, jets, opaque applications) to
// IEEE doubles. Evaluation order is the deterministic tree order.
class EvalContext {
public:
    EvalContext() = default;
    explicit EvalContext(std::vector<std::pair<Expr, double>> bindings);
    void bind(const Expr& atom, double value);
    const double* find(const Expr& atom) const;

private:
    std::vector<std::pair<Expr, double>> b_;  // sorted by cmp
};

double eval_numeric(const Expr& e, const EvalContext& ctx);

// Exact or floating parameter bindings with the admissibility constraints
// enforced when binding (lambda != 0, m != 0, eps4/eps5/eps6 != 0).
class ParameterTable {
public:
    void bind(const std::string& name, const Rat& value);
    void bind(const std::string& name, double value);
    bool has(const std::string& name) const;
    double value(const std::string& name) const;
    const std::vector<std::pair<int, Rat>>& exact() const { return exact_; }
    const std::vector<std::pair<int, double>>& approx() const { return approx_; }

    // substitution rules (exact values only)
    std::vector<std::pair<Expr, Expr>> rules() const;
    void fill(EvalContext& ctx) const;

private:
    std::vector<std::pair<int, Rat>> exact_;
    std::vector<std::pair<int, double>> approx_;
};

double eval_numeric(const Expr& e, const EvalContext& ctx, const ParameterTable& params);

// Probabilistic zero test: binds every atom uniformly in [lo, hi] and
// compares |value| against the term-magnitude scale.
struct ZeroSample {
    bool zero = false;
    double max_rel = 0.0;
    int points = 0;
};

ZeroSample sampled_zero(const Expr& e, std::mt19937_64& rng, int points = 20, double lo = 0.3,
                        double hi = 2.7, double tol = 1e-9);

// Relative magnitude of e at one sampled point: |value| / sum of |terms|.
double relative_residual_at(const Expr& e, const EvalContext& ctx);

// ---------------------------------------------------------------------------
// Flattened stack program for hot numeric loops (ODE right-hand sides,
// boundary forcing). Slots are bound atoms in caller-chosen order.
// ---------------------------------------------------------------------------

class CompiledExpr {
public:
    CompiledExpr() = default;
    CompiledExpr(const Expr& e, const std::vector<Expr>& slot_atoms);
    double operator()(std::span<const double> slots) const;
    bool empty() const { return ops_.empty(); }

private:
    enum class Op : std::uint8_t { Const, Slot, Add, Mul, PowInt, Pow, Exp, Log, Neg };
    struct Ins {
        Op op;
        int a = 0;       // slot/const index, arity, or integer exponent
        double c = 0.0;  // constant payload
    };
    std::vector<Ins> ops_;
    int max_stack_ = 0;
};

}  // namespace thinfilm

#endif
