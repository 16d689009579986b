#include <algorithm>
#include <map>
#include <optional>

#include "thinfilm/expr.hpp"

// Canonical form: an expression is flattened into a sum of terms
//   coeff * prod(base_i ^ exp_i) * e^(ear)
// with exact rational coeff, bases drawn from {Symbol, Jet, Func, Log-atom,
// primitive sum, rational surd}, and normalized exponent expressions.
// Positive integer powers of sums are expanded; sums carrying negative
// integer powers of primitive sums are brought over a single monomial
// denominator and reduced by exact division.

namespace thinfilm {
namespace {

struct Factor {
    Expr base;
    Expr exp;
};

struct Mono {
    std::vector<Factor> fs;  // sorted by base
    Expr ear;                // e^(ear); null if absent
};

int cmp_mono(const Mono& a, const Mono& b) {
    std::size_t n = std::min(a.fs.size(), b.fs.size());
    for (std::size_t i = 0; i < n; ++i) {
        int c = cmp(a.fs[i].base, b.fs[i].base);
        if (c != 0) return c;
        c = cmp(a.fs[i].exp, b.fs[i].exp);
        if (c != 0) return c;
    }
    if (a.fs.size() != b.fs.size()) return a.fs.size() < b.fs.size() ? -1 : 1;
    return cmp(a.ear, b.ear);
}

struct MonoLess {
    bool operator()(const Mono& a, const Mono& b) const { return cmp_mono(a, b) < 0; }
};

using TermMap = std::map<Mono, Rat, MonoLess>;

struct Poly {
    TermMap ts;
};

Poly poly_const(const Rat& c) {
    Poly p;
    if (c != 0) p.ts.emplace(Mono{}, c);
    return p;
}

Poly poly_atom(const Expr& base) {
    Poly p;
    Mono m;
    m.fs.push_back(Factor{base, num(1)});
    p.ts.emplace(std::move(m), Rat(1));
    return p;
}

void poly_acc(Poly& into, const Mono& m, const Rat& c) {
    if (c == 0) return;
    auto it = into.ts.find(m);
    if (it == into.ts.end()) {
        into.ts.emplace(m, c);
    } else {
        it->second += c;
        if (it->second == 0) into.ts.erase(it);
    }
}

Poly from_expr(const Expr& e);
Expr to_expr(const Poly& p);

Expr norm_rec(const Expr& e) { return to_expr(from_expr(e)); }

bool is_int_number(const Expr& e) { return e.is_integer(); }

// --- monomial products -----------------------------------------------------

Expr exp_add(const Expr& a, const Expr& b) { return norm_rec(a + b); }
Expr exp_mul(const Expr& a, const Expr& b) { return norm_rec(a * b); }

// Multiplies factor lists, merging equal bases by exponent addition.
// The result may contain foldable factors (integer powers of numbers or
// positive integer powers of sums); term_to_poly resolves those.
Mono mono_mul(const Mono& a, const Mono& b) {
    Mono r;
    r.fs.reserve(a.fs.size() + b.fs.size());
    std::size_t i = 0, j = 0;
    while (i < a.fs.size() || j < b.fs.size()) {
        if (j == b.fs.size() || (i < a.fs.size() && cmp(a.fs[i].base, b.fs[j].base) < 0)) {
            r.fs.push_back(a.fs[i++]);
        } else if (i == a.fs.size() || cmp(b.fs[j].base, a.fs[i].base) < 0) {
            r.fs.push_back(b.fs[j++]);
        } else {
            Expr e = exp_add(a.fs[i].exp, b.fs[j].exp);
            if (!e.is_zero()) r.fs.push_back(Factor{a.fs[i].base, e});
            ++i;
            ++j;
        }
    }
    if (a.ear.null())
        r.ear = b.ear;
    else if (b.ear.null())
        r.ear = a.ear;
    else {
        Expr s = exp_add(a.ear, b.ear);
        if (!s.is_zero()) r.ear = s;
    }
    return r;
}

Poly poly_mul(const Poly& a, const Poly& b);
Poly rationalize(Poly p);

// Folds resolvable factors of a term into a polynomial.
Poly term_to_poly(Mono m, Rat c) {
    if (c == 0) return Poly{};
    Poly acc = poly_const(1);
    std::vector<Factor> kept;
    std::vector<std::pair<Expr, long>> expansions;  // (sum base, positive power)
    for (auto& f : m.fs) {
        if (f.base.is_number() && is_int_number(f.exp)) {
            c *= rat_pow_int(f.base.value(), rat_to_long(f.exp.value()));
        } else if (f.base.is_number() && f.base.is_one()) {
            // 1^anything
        } else if (f.base.kind() == Kind::Sum && is_int_number(f.exp) && f.exp.value() > 0) {
            expansions.emplace_back(f.base, rat_to_long(f.exp.value()));
        } else {
            kept.push_back(f);
        }
    }
    Mono base;
    base.fs = std::move(kept);
    base.ear = m.ear;
    Poly p;
    p.ts.emplace(std::move(base), c);
    if (!expansions.empty()) {
        for (auto& [s, n] : expansions) {
            if (n > 64) throw UnsupportedError("sum power too large to expand");
            Poly sp = from_expr(s);
            for (long q = 0; q < n; ++q) p = poly_mul(p, sp);
        }
    }
    return p;
}

Poly poly_add(const Poly& a, const Poly& b) {
    Poly r = a;
    for (const auto& [m, c] : b.ts) poly_acc(r, m, c);
    return r;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r;
    for (const auto& [ma, ca] : a.ts)
        for (const auto& [mb, cb] : b.ts) {
            Poly t = term_to_poly(mono_mul(ma, mb), ca * cb);
            r = poly_add(r, t);
        }
    return r;
}

Poly poly_neg(const Poly& a) {
    Poly r;
    for (const auto& [m, c] : a.ts) r.ts.emplace(m, -c);
    return r;
}

// --- content extraction ----------------------------------------------------

// Splits p into content * common-monomial * primitive-sum. The content is
// positive; the primitive part keeps the sign of the original sum so that a
// sum base is the same atom regardless of the exponent it later carries.
struct SumSplit {
    Rat content;
    Mono common;   // factors with numeric exponents present in all terms, plus shared ear
    Poly primitive;
};

SumSplit extract_content(const Poly& p) {
    SumSplit s;
    s.content = 1;
    if (p.ts.empty()) return s;
    // rational content: gcd of numerators / lcm of denominators
    mpz_class gnum = 0, lden = 1;
    for (const auto& [m, c] : p.ts) {
        mpz_gcd(gnum.get_mpz_t(), gnum.get_mpz_t(), c.get_num().get_mpz_t());
        mpz_lcm(lden.get_mpz_t(), lden.get_mpz_t(), c.get_den().get_mpz_t());
    }
    Rat content(gnum, lden);
    content.canonicalize();
    if (content <= 0) content = 1;

    // common factors with rational exponents in all terms
    std::vector<Factor> common;
    const Mono& first = p.ts.begin()->first;
    for (const auto& f : first.fs) {
        if (!f.exp.is_number()) continue;
        Rat mn = f.exp.value();
        bool everywhere = true;
        for (const auto& [m, c] : p.ts) {
            bool found = false;
            for (const auto& g : m.fs) {
                if (same(g.base, f.base) && g.exp.is_number()) {
                    mn = std::min(mn, g.exp.value());
                    found = true;
                    break;
                }
            }
            if (!found) {
                everywhere = false;
                break;
            }
        }
        if (everywhere && mn != 0) common.push_back(Factor{f.base, num(mn)});
    }
    // shared exponential part
    Expr shared_ear = first.ear;
    if (!shared_ear.null()) {
        for (const auto& [m, c] : p.ts)
            if (m.ear.null() || !same(m.ear, shared_ear)) {
                shared_ear = Expr();
                break;
            }
    }

    Poly prim;
    for (const auto& [m, c] : p.ts) {
        Mono r;
        for (const auto& f : m.fs) {
            const Factor* com = nullptr;
            for (const auto& g : common)
                if (same(g.base, f.base)) {
                    com = &g;
                    break;
                }
            if (com) {
                Expr e = exp_add(f.exp, norm_rec(-com->exp));
                if (!e.is_zero()) r.fs.push_back(Factor{f.base, e});
            } else {
                r.fs.push_back(f);
            }
        }
        if (!shared_ear.null()) {
            // ears are identical across terms; drop
        } else {
            r.ear = m.ear;
        }
        prim.ts.emplace(std::move(r), c / content);
    }
    s.content = content;
    s.common.fs = std::move(common);
    s.common.ear = shared_ear;
    s.primitive = std::move(prim);
    return s;
}

// --- exact division (integer-exponent polynomials) --------------------------

bool all_integer_exponents(const Poly& p) {
    for (const auto& [m, c] : p.ts) {
        if (!m.ear.null()) return false;
        for (const auto& f : m.fs)
            if (!is_int_number(f.exp)) return false;
    }
    return true;
}

long total_degree(const Mono& m) {
    long d = 0;
    for (const auto& f : m.fs) d += rat_to_long(f.exp.value());
    return d;
}

// graded order for division
bool div_less(const Mono& a, const Mono& b) {
    long da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    return cmp_mono(a, b) < 0;
}

std::optional<Mono> mono_div(const Mono& a, const Mono& b) {
    Mono r;
    std::size_t i = 0;
    for (const auto& fb : b.fs) {
        bool found = false;
        while (i < a.fs.size()) {
            int c = cmp(a.fs[i].base, fb.base);
            if (c < 0) {
                r.fs.push_back(a.fs[i++]);
            } else if (c == 0) {
                long ea = rat_to_long(a.fs[i].exp.value()), eb = rat_to_long(fb.exp.value());
                if (ea < eb) return std::nullopt;
                if (ea > eb) r.fs.push_back(Factor{a.fs[i].base, num(ea - eb)});
                ++i;
                found = true;
                break;
            } else {
                break;
            }
        }
        if (!found) return std::nullopt;
    }
    while (i < a.fs.size()) r.fs.push_back(a.fs[i++]);
    return r;
}

std::optional<Poly> poly_divide_exact(Poly p, const Poly& b) {
    if (b.ts.empty()) return std::nullopt;
    if (!all_integer_exponents(p) || !all_integer_exponents(b)) return std::nullopt;
    // Laurent shift: make all exponents non-negative
    auto min_exps = [](const Poly& q, std::map<Mono, Rat>*) {};
    (void)min_exps;
    std::map<std::uint64_t, std::pair<Expr, long>> shift;  // base-hash -> (base, min exponent)
    auto scan = [&shift](const Poly& q) {
        for (const auto& [m, c] : q.ts)
            for (const auto& f : m.fs) {
                long e = rat_to_long(f.exp.value());
                auto it = shift.find(f.base.hash());
                if (it == shift.end())
                    shift.emplace(f.base.hash(), std::make_pair(f.base, std::min(0L, e)));
                else
                    it->second.second = std::min(it->second.second, e);
            }
    };
    scan(p);
    scan(b);
    Mono shift_mono;
    for (auto& [h, be] : shift)
        if (be.second < 0) shift_mono.fs.push_back(Factor{be.first, num(-be.second)});
    std::sort(shift_mono.fs.begin(), shift_mono.fs.end(),
              [](const Factor& a, const Factor& bb) { return cmp(a.base, bb.base) < 0; });
    auto apply_shift = [&shift_mono](const Poly& q) {
        Poly r;
        for (const auto& [m, c] : q.ts) poly_acc(r, mono_mul(m, shift_mono), c);
        return r;
    };
    Poly P = apply_shift(p);
    Poly B = apply_shift(b);
    // leading term of B
    auto lead = [](const Poly& q) {
        auto best = q.ts.begin();
        for (auto it = q.ts.begin(); it != q.ts.end(); ++it)
            if (div_less(best->first, it->first)) best = it;
        return best;
    };
    auto ltB = lead(B);
    Poly Q;
    int guard = 0;
    while (!P.ts.empty()) {
        if (++guard > 20000) return std::nullopt;
        auto ltP = lead(P);
        auto q = mono_div(ltP->first, ltB->first);
        if (!q) return std::nullopt;
        Rat qc = ltP->second / ltB->second;
        poly_acc(Q, *q, qc);
        // P -= q*B  (shift cancels out since B was shifted once on both sides)
        for (const auto& [mb, cb] : B.ts) poly_acc(P, mono_mul(*q, mb), -qc * cb);
    }
    // undo shift: Q corresponds to (p*s)/(b*s) = p/b, no correction needed
    return Q;
}

// --- rationalization ---------------------------------------------------------

// Collects primitive-sum bases carried with negative integer exponents, puts
// the whole sum over the common monomial denominator, expands, reduces by
// exact division, and reattaches the remaining denominator to every term.
Poly rationalize(Poly p) {
    if (p.ts.size() < 2) return p;
    std::map<std::uint64_t, std::pair<Expr, long>> dens;  // base-hash -> (base, max |neg exp|)
    for (const auto& [m, c] : p.ts)
        for (const auto& f : m.fs)
            if (f.base.kind() == Kind::Sum && is_int_number(f.exp) && f.exp.value() < 0) {
                long e = -rat_to_long(f.exp.value());
                auto it = dens.find(f.base.hash());
                if (it == dens.end())
                    dens.emplace(f.base.hash(), std::make_pair(f.base, e));
                else
                    it->second.second = std::max(it->second.second, e);
            }
    if (dens.empty()) return p;

    // numerator = p * prod(base^maxexp)
    Poly numtor;
    for (const auto& [m, c] : p.ts) {
        Mono scaled = m;
        // remove denominator factors, compute complement power
        Mono stripped;
        std::map<std::uint64_t, long> have;
        for (const auto& f : scaled.fs) {
            auto it = dens.find(f.base.hash());
            if (it != dens.end() && is_int_number(f.exp) && f.exp.value() < 0 &&
                same(f.base, it->second.first)) {
                have[f.base.hash()] = -rat_to_long(f.exp.value());
            } else {
                stripped.fs.push_back(f);
            }
        }
        stripped.ear = scaled.ear;
        Poly t;
        t.ts.emplace(stripped, c);
        for (const auto& [h, be] : dens) {
            long complement = be.second - (have.count(h) ? have.at(h) : 0);
            if (complement > 0) {
                Poly bp = from_expr(be.first);
                for (long i = 0; i < complement; ++i) t = poly_mul(t, bp);
            }
        }
        numtor = poly_add(numtor, t);
    }

    // reduce by exact division where possible
    std::vector<std::pair<Expr, long>> rem;
    for (const auto& [h, be] : dens) rem.emplace_back(be.first, be.second);
    std::sort(rem.begin(), rem.end(),
              [](const auto& a, const auto& b) { return cmp(a.first, b.first) < 0; });
    for (auto& [base, e] : rem) {
        Poly bp = from_expr(base);
        while (e > 0) {
            auto q = poly_divide_exact(numtor, bp);
            if (!q) break;
            numtor = std::move(*q);
            --e;
        }
    }

    // reattach remaining denominators to every term
    Mono den;
    for (auto& [base, e] : rem)
        if (e > 0) den.fs.push_back(Factor{base, num(-e)});
    if (den.fs.empty()) return numtor;
    std::sort(den.fs.begin(), den.fs.end(),
              [](const Factor& a, const Factor& b) { return cmp(a.base, b.base) < 0; });
    Poly out;
    for (const auto& [m, c] : numtor.ts) poly_acc(out, mono_mul(m, den), c);
    return out;
}

// --- powers ------------------------------------------------------------------

Poly term_pow_expr(const Mono& m, const Rat& c, const Expr& e) {
    // (c * prod b^k * e^ear)^e with symbolic or non-integer exponent e
    Mono r;
    for (const auto& f : m.fs) {
        Expr ne = exp_mul(f.exp, e);
        if (!ne.is_zero()) r.fs.push_back(Factor{f.base, ne});
    }
    Rat coeff = 1;
    if (c != 1) {
        if (c == 0) {
            return Poly{};  // 0^e, e > 0 assumed in class
        }
        if (is_int_number(e)) {
            coeff = rat_pow_int(c, rat_to_long(e.value()));
        } else {
            // keep |c|^e as a rational surd atom; sign stays with the base
            r.fs.push_back(Factor{num(c), e});
        }
    }
    if (!m.ear.null()) {
        Expr ne = exp_mul(m.ear, e);
        if (!ne.is_zero()) r.ear = ne;
    }
    std::sort(r.fs.begin(), r.fs.end(),
              [](const Factor& a, const Factor& b) { return cmp(a.base, b.base) < 0; });
    return term_to_poly(std::move(r), coeff);
}

Poly poly_pow(const Poly& base, const Expr& e) {
    if (e.is_zero()) return poly_const(1);
    if (e.is_one()) return base;
    if (base.ts.empty()) {
        if (e.is_number() && e.value() > 0) return Poly{};
        throw EvalDomainError("zero base with non-positive exponent");
    }
    if (base.ts.size() == 1) {
        const auto& [m, c] = *base.ts.begin();
        return term_pow_expr(m, c, e);
    }
    if (is_int_number(e)) {
        long n = rat_to_long(e.value());
        if (n > 0) {
            if (n > 64) throw UnsupportedError("sum power too large to expand");
            Poly r = poly_const(1);
            for (long i = 0; i < n; ++i) r = poly_mul(r, base);
            return r;
        }
        // negative integer power of a sum: primitive base with folded content
        SumSplit s = extract_content(base);
        Poly r = term_pow_expr(s.common, s.content, e);
        Expr prim = to_expr(s.primitive);
        if (prim.kind() == Kind::Sum) {
            Mono pm;
            pm.fs.push_back(Factor{prim, num(n)});
            r = poly_mul(r, term_to_poly(std::move(pm), Rat(1)));
        } else {
            r = poly_mul(r, poly_pow(s.primitive, e));
        }
        return r;
    }
    // symbolic / fractional power of a sum
    SumSplit s = extract_content(base);
    Poly r = term_pow_expr(s.common, s.content, e);
    Expr prim = to_expr(s.primitive);
    if (prim.kind() == Kind::Sum) {
        Mono pm;
        pm.fs.push_back(Factor{prim, e});
        r = poly_mul(r, term_to_poly(std::move(pm), Rat(1)));
    } else {
        r = poly_mul(r, poly_pow(s.primitive, e));
    }
    return r;
}

// --- logarithms ---------------------------------------------------------------

Poly log_of_rat(const Rat& q);

Poly log_of_atom(const Expr& base) {
    if (base.is_number()) return log_of_rat(base.value());
    Poly p;
    Mono m;
    m.fs.push_back(Factor{log_(base), num(1)});
    p.ts.emplace(std::move(m), Rat(1));
    return p;
}

Poly log_of_rat(const Rat& q) {
    if (q <= 0) throw UnsupportedError("log of non-positive constant");
    if (q == 1) return Poly{};
    Poly r;
    auto add_factored = [&r](mpz_class z, int sign) {
        // trial division; large leftovers stay as single log atoms
        for (mpz_class d = 2; d * d <= z && d < 1000000; ++d) {
            while (mpz_divisible_p(z.get_mpz_t(), d.get_mpz_t())) {
                z /= d;
                Mono m;
                m.fs.push_back(Factor{log_(num(Rat(d))), num(1)});
                poly_acc(r, m, Rat(sign));
            }
        }
        if (z > 1) {
            Mono m;
            m.fs.push_back(Factor{log_(num(Rat(z))), num(1)});
            poly_acc(r, m, Rat(sign));
        }
    };
    add_factored(q.get_num(), 1);
    add_factored(q.get_den(), -1);
    return r;
}

// --- main recursion -------------------------------------------------------------

Poly from_expr(const Expr& e) {
    switch (e.kind()) {
        case Kind::Number:
            return poly_const(e.value());
        case Kind::Symbol:
        case Kind::Jet:
            return poly_atom(e);
        case Kind::Func: {
            Expr arg = norm_rec(e.kids()[0]);
            const auto& fd = Registry::get().fn(e.id());
            if (fd.linked_sym >= 0) {
                const auto& sd = Registry::get().sym(fd.linked_sym);
                if (arg.kind() == Kind::Symbol && sd.indeps.size() == 1 &&
                    arg.id() == sd.indeps[0]) {
                    std::vector<std::uint8_t> midx{static_cast<std::uint8_t>(e.order())};
                    return poly_atom(jet(fd.linked_sym, std::move(midx)));
                }
            }
            return poly_atom(fapply(e.id(), e.order(), arg));
        }
        case Kind::Sum: {
            Poly r;
            for (const auto& k : e.kids()) r = poly_add(r, from_expr(k));
            return rationalize(std::move(r));
        }
        case Kind::Product: {
            Poly r = poly_const(1);
            for (const auto& k : e.kids()) r = poly_mul(r, from_expr(k));
            return rationalize(std::move(r));
        }
        case Kind::Power: {
            Expr ex = norm_rec(e.kids()[1]);
            return poly_pow(from_expr(e.kids()[0]), ex);
        }
        case Kind::Exp: {
            Poly a = from_expr(e.kids()[0]);
            Poly out = poly_const(1);
            Poly ear_terms;
            for (const auto& [m, c] : a.ts) {
                if (m.ear.null() && m.fs.size() == 1 && m.fs[0].base.kind() == Kind::Log &&
                    m.fs[0].exp.is_one()) {
                    out = poly_mul(out, poly_pow(from_expr(m.fs[0].base.kids()[0]), num(c)));
                } else {
                    poly_acc(ear_terms, m, c);
                }
            }
            if (!ear_terms.ts.empty()) {
                Mono m;
                m.ear = to_expr(ear_terms);
                out = poly_mul(out, term_to_poly(std::move(m), Rat(1)));
            }
            return out;
        }
        case Kind::Log:
            return rationalize(log_split(e.kids()[0]));
    }
    throw Error("unreachable expression kind");
}

Expr to_expr(const Poly& p) {
    if (p.ts.empty()) return num(0);
    std::vector<Expr> terms;
    terms.reserve(p.ts.size());
    for (const auto& [m, c] : p.ts) {
        std::vector<Expr> factors;
        if (c != 1 || (m.fs.empty() && m.ear.null())) factors.push_back(num(c));
        for (const auto& f : m.fs) {
            if (f.exp.is_one())
                factors.push_back(f.base);
            else
                factors.push_back(pow(f.base, f.exp));
        }
        if (!m.ear.null()) factors.push_back(exp_(m.ear));
        terms.push_back(factors.size() == 1 ? factors[0] : prod(std::move(factors)));
    }
    return terms.size() == 1 ? terms[0] : sum(std::move(terms));
}

}  // namespace

Expr normalize(const Expr& e) {
    if (e.null()) throw Error("normalize of null expression");
    return norm_rec(e);
}

}  // namespace thinfilm
