#include <algorithm>
#include <cmath>

#include "thinfilm/eval.hpp"

namespace thinfilm {

EvalContext::EvalContext(std::vector<std::pair<Expr, double>> bindings) : b_(std::move(bindings)) {
    std::sort(b_.begin(), b_.end(),
              [](const auto& a, const auto& b) { return cmp(a.first, b.first) < 0; });
}

void EvalContext::bind(const Expr& atom, double value) {
    auto it = std::lower_bound(b_.begin(), b_.end(), atom, [](const auto& p, const Expr& a) {
        return cmp(p.first, a) < 0;
    });
    if (it != b_.end() && same(it->first, atom))
        it->second = value;
    else
        b_.insert(it, {atom, value});
}

const double* EvalContext::find(const Expr& atom) const {
    auto it = std::lower_bound(b_.begin(), b_.end(), atom, [](const auto& p, const Expr& a) {
        return cmp(p.first, a) < 0;
    });
    if (it != b_.end() && same(it->first, atom)) return &it->second;
    return nullptr;
}

namespace {

double pow_checked(double b, const Expr& exp_expr, const EvalContext& ctx);

double eval_rec(const Expr& e, const EvalContext& ctx) {
    switch (e.kind()) {
        case Kind::Number:
            return rat_to_double(e.value());
        case Kind::Symbol:
        case Kind::Jet:
        case Kind::Func: {
            if (const double* v = ctx.find(e)) return *v;
            throw EvalDomainError("unbound atom: " + to_string(e));
        }
        case Kind::Sum: {
            double s = 0;
            for (const auto& k : e.kids()) s += eval_rec(k, ctx);
            return s;
        }
        case Kind::Product: {
            double p = 1;
            for (const auto& k : e.kids()) p *= eval_rec(k, ctx);
            return p;
        }
        case Kind::Power:
            return pow_checked(eval_rec(e.kids()[0], ctx), e.kids()[1], ctx);
        case Kind::Exp:
            return std::exp(eval_rec(e.kids()[0], ctx));
        case Kind::Log: {
            double a = eval_rec(e.kids()[0], ctx);
            if (!(a > 0)) throw EvalDomainError("log of non-positive value");
            return std::log(a);
        }
    }
    throw Error("unreachable");
}

double pow_checked(double b, const Expr& exp_expr, const EvalContext& ctx) {
    if (exp_expr.is_number()) {
        const Rat& q = exp_expr.value();
        if (rat_is_int(q)) {
            long n = rat_to_long(q);
            if (b == 0 && n <= 0) throw EvalDomainError("division by zero");
            return std::pow(b, static_cast<double>(n));
        }
        if (b > 0) return std::pow(b, rat_to_double(q));
        if (b == 0) {
            if (q > 0) return 0.0;
            throw EvalDomainError("zero base with non-positive exponent");
        }
        // negative base: real only for odd denominators
        long den = q.get_den().fits_slong_p() ? q.get_den().get_si() : 0;
        long nmr = q.get_num().fits_slong_p() ? q.get_num().get_si() : 0;
        if (den != 0 && den % 2 == 1) {
            double mag = std::pow(-b, rat_to_double(q));
            return (nmr % 2 == 0) ? mag : -mag;
        }
        throw EvalDomainError("negative base with even-root exponent");
    }
    double e = eval_rec(exp_expr, ctx);
    if (b > 0) return std::pow(b, e);
    double r = std::round(e);
    if (std::abs(e - r) < 1e-9) {
        if (b == 0 && r <= 0) throw EvalDomainError("division by zero");
        return std::pow(b, r);
    }
    throw EvalDomainError("negative base with non-integer exponent");
}

}  // namespace

double eval_numeric(const Expr& e, const EvalContext& ctx) { return eval_rec(e, ctx); }

void ParameterTable::bind(const std::string& name, const Rat& value) {
    if ((name == "lambda" || name == "m" || name == "eps4" || name == "eps5" || name == "eps6") &&
        value == 0)
        throw EvalDomainError("parameter " + name + " must be nonzero");
    int id = Registry::get().symbol_id(name);
    if (id < 0) throw Error("unknown parameter: " + name);
    exact_.emplace_back(id, value);
}

void ParameterTable::bind(const std::string& name, double value) {
    if ((name == "lambda" || name == "m" || name == "eps4" || name == "eps5" || name == "eps6") &&
        value == 0.0)
        throw EvalDomainError("parameter " + name + " must be nonzero");
    int id = Registry::get().symbol_id(name);
    if (id < 0) throw Error("unknown parameter: " + name);
    approx_.emplace_back(id, value);
}

bool ParameterTable::has(const std::string& name) const {
    int id = Registry::get().symbol_id(name);
    for (const auto& [i, q] : exact_)
        if (i == id) return true;
    for (const auto& [i, v] : approx_)
        if (i == id) return true;
    return false;
}

double ParameterTable::value(const std::string& name) const {
    int id = Registry::get().symbol_id(name);
    for (const auto& [i, q] : exact_)
        if (i == id) return rat_to_double(q);
    for (const auto& [i, v] : approx_)
        if (i == id) return v;
    throw Error("parameter not bound: " + name);
}

std::vector<std::pair<Expr, Expr>> ParameterTable::rules() const {
    std::vector<std::pair<Expr, Expr>> r;
    for (const auto& [id, q] : exact_) r.emplace_back(sym(id), num(q));
    return r;
}

void ParameterTable::fill(EvalContext& ctx) const {
    for (const auto& [id, q] : exact_) ctx.bind(sym(id), rat_to_double(q));
    for (const auto& [id, v] : approx_) ctx.bind(sym(id), v);
}

double eval_numeric(const Expr& e, const EvalContext& ctx, const ParameterTable& params) {
    EvalContext c = ctx;
    params.fill(c);
    return eval_numeric(e, c);
}

double relative_residual_at(const Expr& e, const EvalContext& ctx) {
    double val = eval_numeric(e, ctx);
    double scale = 0;
    if (e.kind() == Kind::Sum)
        for (const auto& t : e.kids()) scale += std::abs(eval_numeric(t, ctx));
    else
        scale = std::abs(val);
    if (scale < 1e-300) scale = 1.0;
    return std::abs(val) / scale;
}

ZeroSample sampled_zero(const Expr& e, std::mt19937_64& rng, int points, double lo, double hi,
                        double tol) {
    Expr n = normalize(e);
    ZeroSample out;
    out.points = points;
    if (n.is_zero()) {
        out.zero = true;
        return out;
    }
    auto atoms = collect_atoms(n);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (int i = 0; i < points; ++i) {
        EvalContext ctx;
        for (const auto& a : atoms) ctx.bind(a, dist(rng));
        out.max_rel = std::max(out.max_rel, relative_residual_at(n, ctx));
    }
    out.zero = out.max_rel < tol;
    return out;
}

// ---------------------------------------------------------------------------

CompiledExpr::CompiledExpr(const Expr& e, const std::vector<Expr>& slot_atoms) {
    int depth = 0;
    auto bump = [this, &depth](int d) {
        depth += d;
        max_stack_ = std::max(max_stack_, depth);
    };
    auto emit = [&](auto&& self, const Expr& n) -> void {
        switch (n.kind()) {
            case Kind::Number:
                ops_.push_back({Op::Const, 0, rat_to_double(n.value())});
                bump(1);
                return;
            case Kind::Symbol:
            case Kind::Jet:
            case Kind::Func: {
                for (std::size_t i = 0; i < slot_atoms.size(); ++i)
                    if (same(slot_atoms[i], n)) {
                        ops_.push_back({Op::Slot, static_cast<int>(i), 0});
                        bump(1);
                        return;
                    }
                throw Error("compile: unbound atom " + to_string(n));
            }
            case Kind::Sum: {
                for (const auto& k : n.kids()) self(self, k);
                ops_.push_back({Op::Add, static_cast<int>(n.kids().size()), 0});
                bump(1 - static_cast<int>(n.kids().size()));
                return;
            }
            case Kind::Product: {
                for (const auto& k : n.kids()) self(self, k);
                ops_.push_back({Op::Mul, static_cast<int>(n.kids().size()), 0});
                bump(1 - static_cast<int>(n.kids().size()));
                return;
            }
            case Kind::Power: {
                self(self, n.kids()[0]);
                if (n.kids()[1].is_integer()) {
                    ops_.push_back({Op::PowInt, static_cast<int>(rat_to_long(n.kids()[1].value())), 0});
                } else {
                    self(self, n.kids()[1]);
                    ops_.push_back({Op::Pow, 0, 0});
                    bump(-1);
                }
                return;
            }
            case Kind::Exp:
                self(self, n.kids()[0]);
                ops_.push_back({Op::Exp, 0, 0});
                return;
            case Kind::Log:
                self(self, n.kids()[0]);
                ops_.push_back({Op::Log, 0, 0});
                return;
        }
    };
    emit(emit, e);
}

double CompiledExpr::operator()(std::span<const double> slots) const {
    double stack[64];
    int sp = 0;
    for (const auto& ins : ops_) {
        switch (ins.op) {
            case Op::Const:
                stack[sp++] = ins.c;
                break;
            case Op::Slot:
                stack[sp++] = slots[static_cast<std::size_t>(ins.a)];
                break;
            case Op::Add: {
                double s = 0;
                for (int i = 0; i < ins.a; ++i) s += stack[--sp];
                stack[sp++] = s;
                break;
            }
            case Op::Mul: {
                double p = 1;
                for (int i = 0; i < ins.a; ++i) p *= stack[--sp];
                stack[sp++] = p;
                break;
            }
            case Op::PowInt: {
                double b = stack[sp - 1];
                long n = ins.a;
                double r = std::pow(b, static_cast<double>(n));
                stack[sp - 1] = r;
                break;
            }
            case Op::Pow: {
                double e = stack[--sp];
                double b = stack[sp - 1];
                stack[sp - 1] = std::pow(b, e);
                break;
            }
            case Op::Exp:
                stack[sp - 1] = std::exp(stack[sp - 1]);
                break;
            case Op::Log:
                stack[sp - 1] = std::log(stack[sp - 1]);
                break;
            case Op::Neg:
                stack[sp - 1] = -stack[sp - 1];
                break;
        }
    }
    return stack[0];
}

}  // namespace thinfilm
