#include "thinfilm/expr.hpp"

namespace thinfilm {
namespace {

// Partial derivative; atoms other than `by` are independent, opaque
// applications chain through their argument.
Expr d_rec(const Expr& e, const Expr& by) {
    if (same(e, by)) return num(1);
    switch (e.kind()) {
        case Kind::Number:
        case Kind::Symbol:
        case Kind::Jet:
            return num(0);
        case Kind::Func: {
            Expr da = d_rec(e.kids()[0], by);
            if (da.is_zero()) return num(0);
            return fapply(e.id(), e.order() + 1, e.kids()[0]) * da;
        }
        case Kind::Sum: {
            std::vector<Expr> parts;
            for (const auto& k : e.kids()) {
                Expr d = d_rec(k, by);
                if (!d.is_zero()) parts.push_back(d);
            }
            return sum(std::move(parts));
        }
        case Kind::Product: {
            std::vector<Expr> parts;
            for (std::size_t i = 0; i < e.kids().size(); ++i) {
                Expr d = d_rec(e.kids()[i], by);
                if (d.is_zero()) continue;
                std::vector<Expr> fs;
                for (std::size_t j = 0; j < e.kids().size(); ++j)
                    fs.push_back(i == j ? d : e.kids()[j]);
                parts.push_back(prod(std::move(fs)));
            }
            return sum(std::move(parts));
        }
        case Kind::Power: {
            const Expr& b = e.kids()[0];
            const Expr& ex = e.kids()[1];
            Expr db = d_rec(b, by);
            Expr de = d_rec(ex, by);
            if (de.is_zero()) {
                if (db.is_zero()) return num(0);
                return ex * pow(b, normalize(ex - num(1))) * db;
            }
            Expr inner = de * log_(b);
            if (!db.is_zero()) inner = inner + ex * db * pow(b, -1);
            return e * inner;
        }
        case Kind::Exp: {
            Expr da = d_rec(e.kids()[0], by);
            if (da.is_zero()) return num(0);
            return e * da;
        }
        case Kind::Log: {
            Expr da = d_rec(e.kids()[0], by);
            if (da.is_zero()) return num(0);
            return da * pow(e.kids()[0], -1);
        }
    }
    throw Error("unreachable expression kind");
}

// Total derivative along direction symbol d; dependents chain through their
// independents.
Expr td_rec(const Expr& e, int dir) {
    const auto& reg = Registry::get();
    switch (e.kind()) {
        case Kind::Number:
            return num(0);
        case Kind::Symbol: {
            if (e.id() == dir) return num(1);
            const auto& sd = reg.sym(e.id());
            for (std::size_t slot = 0; slot < sd.indeps.size(); ++slot) {
                // chain only through the independents that see `dir`
            }
            if (!sd.indeps.empty()) {
                std::vector<Expr> parts;
                for (std::size_t slot = 0; slot < sd.indeps.size(); ++slot) {
                    Expr ds = td_rec(sym(sd.indeps[slot]), dir);
                    if (ds.is_zero()) continue;
                    std::vector<std::uint8_t> midx(sd.indeps.size(), 0);
                    midx[slot] = 1;
                    parts.push_back(jet(e.id(), std::move(midx)) * ds);
                }
                return sum(std::move(parts));
            }
            return num(0);
        }
        case Kind::Jet: {
            const auto& sd = reg.sym(e.id());
            std::vector<Expr> parts;
            for (std::size_t slot = 0; slot < sd.indeps.size(); ++slot) {
                Expr ds = td_rec(sym(sd.indeps[slot]), dir);
                if (ds.is_zero()) continue;
                auto midx = e.midx();
                ++midx[slot];
                parts.push_back(jet(e.id(), std::move(midx)) * ds);
            }
            return sum(std::move(parts));
        }
        case Kind::Func: {
            Expr da = td_rec(e.kids()[0], dir);
            if (da.is_zero()) return num(0);
            return fapply(e.id(), e.order() + 1, e.kids()[0]) * da;
        }
        case Kind::Sum: {
            std::vector<Expr> parts;
            for (const auto& k : e.kids()) {
                Expr d = td_rec(k, dir);
                if (!d.is_zero()) parts.push_back(d);
            }
            return sum(std::move(parts));
        }
        case Kind::Product: {
            std::vector<Expr> parts;
            for (std::size_t i = 0; i < e.kids().size(); ++i) {
                Expr d = td_rec(e.kids()[i], dir);
                if (d.is_zero()) continue;
                std::vector<Expr> fs;
                for (std::size_t j = 0; j < e.kids().size(); ++j)
                    fs.push_back(i == j ? d : e.kids()[j]);
                parts.push_back(prod(std::move(fs)));
            }
            return sum(std::move(parts));
        }
        case Kind::Power: {
            const Expr& b = e.kids()[0];
            const Expr& ex = e.kids()[1];
            Expr db = td_rec(b, dir);
            Expr de = td_rec(ex, dir);
            if (de.is_zero()) {
                if (db.is_zero()) return num(0);
                return ex * pow(b, normalize(ex - num(1))) * db;
            }
            Expr inner = de * log_(b);
            if (!db.is_zero()) inner = inner + ex * db * pow(b, -1);
            return e * inner;
        }
        case Kind::Exp: {
            Expr da = td_rec(e.kids()[0], dir);
            if (da.is_zero()) return num(0);
            return e * da;
        }
        case Kind::Log: {
            Expr da = td_rec(e.kids()[0], dir);
            if (da.is_zero()) return num(0);
            return da * pow(e.kids()[0], -1);
        }
    }
    throw Error("unreachable expression kind");
}

Expr subst_rec(const Expr& e, const std::vector<std::pair<Expr, Expr>>& rules) {
    for (const auto& [target, repl] : rules)
        if (same(e, target)) return repl;
    switch (e.kind()) {
        case Kind::Number:
        case Kind::Symbol:
        case Kind::Jet:
            return e;
        default:
            break;
    }
    std::vector<Expr> kids;
    kids.reserve(e.kids().size());
    bool changed = false;
    for (const auto& k : e.kids()) {
        Expr nk = subst_rec(k, rules);
        changed = changed || !same(nk, k);
        kids.push_back(std::move(nk));
    }
    if (!changed) return e;
    switch (e.kind()) {
        case Kind::Func:
            return fapply(e.id(), e.order(), kids[0]);
        case Kind::Sum:
            return sum(std::move(kids));
        case Kind::Product:
            return prod(std::move(kids));
        case Kind::Power:
            return pow(kids[0], kids[1]);
        case Kind::Exp:
            return exp_(kids[0]);
        case Kind::Log:
            return log_(kids[0]);
        default:
            throw Error("unreachable");
    }
}

}  // namespace

Expr diff(const Expr& e, const Expr& atom) { return normalize(d_rec(e, atom)); }

Expr diff(const Expr& e, const std::string& symbol_name) { return diff(e, sym(symbol_name)); }

Expr total_derivative(const Expr& e, int direction) { return normalize(td_rec(e, direction)); }

Expr total_derivative(const Expr& e, const std::string& direction) {
    int id = Registry::get().symbol_id(direction);
    if (id < 0) throw Error("unknown direction symbol: " + direction);
    return total_derivative(e, id);
}

Expr substitute(const Expr& e, const Expr& target, const Expr& replacement) {
    return normalize(subst_rec(e, {{target, replacement}}));
}

Expr substitute_all(const Expr& e, const std::vector<std::pair<Expr, Expr>>& rules) {
    return normalize(subst_rec(e, rules));
}

}  // namespace thinfilm
