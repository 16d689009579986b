#include <cctype>

#include "thinfilm/expr.hpp"

namespace thinfilm {
namespace {

struct Parser {
    const std::string& s;
    std::size_t pos = 0;

    explicit Parser(const std::string& text) : s(text) {}

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool peek(char c) {
        skip();
        return pos < s.size() && s[pos] == c;
    }
    bool eat(char c) {
        if (peek(c)) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) throw ParseError(std::string("expected '") + c + "'", pos);
    }

    Expr parse_expr() {
        Expr e = parse_term();
        while (true) {
            if (eat('+'))
                e = e + parse_term();
            else if (eat('-'))
                e = e - parse_term();
            else
                break;
        }
        return e;
    }

    Expr parse_term() {
        Expr e = parse_unary();
        while (true) {
            if (eat('*'))
                e = e * parse_unary();
            else if (eat('/'))
                e = div(e, parse_unary());
            else
                break;
        }
        return e;
    }

    Expr parse_unary() {
        int sign = 1;
        while (true) {
            if (eat('-'))
                sign = -sign;
            else if (eat('+'))
                ;
            else
                break;
        }
        Expr e = parse_power();
        return sign < 0 ? -e : e;
    }

    Expr parse_power() {
        bool euler = false;
        Expr base = parse_primary(&euler);
        if (eat('^')) {
            Expr ex = parse_unary();
            return euler ? exp_(ex) : pow(base, ex);
        }
        if (euler) throw ParseError("'e' must be followed by '^'", pos);
        return base;
    }

    Expr parse_primary(bool* euler) {
        skip();
        if (pos >= s.size()) throw ParseError("unexpected end of input", pos);
        char c = s[pos];
        if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
        if (c == '(') {
            ++pos;
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier(euler);
        throw ParseError(std::string("unexpected character '") + c + "'", pos);
    }

    Expr parse_number() {
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            std::size_t frac_start = pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
            std::string digits = s.substr(start, frac_start - 1 - start) + s.substr(frac_start, pos - frac_start);
            mpz_class n(digits);
            mpz_class d;
            mpz_ui_pow_ui(d.get_mpz_t(), 10, pos - frac_start);
            Rat q(n, d);
            q.canonicalize();
            return num(q);
        }
        return num(Rat(mpz_class(s.substr(start, pos - start))));
    }

    Expr parse_identifier(bool* euler) {
        std::size_t start = pos;
        while (pos < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[pos]))))
            ++pos;
        std::string name = s.substr(start, pos - start);
        const auto& reg = Registry::get();

        if (name == "e") {
            skip();
            if (pos < s.size() && s[pos] == '^') {
                *euler = true;
                return Expr();
            }
            throw ParseError("'e' must be followed by '^'", start);
        }
        if (name == "exp" && peek('(')) {
            expect('(');
            Expr a = parse_expr();
            expect(')');
            return exp_(a);
        }
        if (name == "ln" && peek('(')) {
            expect('(');
            Expr a = parse_expr();
            expect(')');
            return log_(a);
        }
        // derivative application: d<func><order>(arg)
        if (name.size() >= 3 && name[0] == 'd' &&
            std::isdigit(static_cast<unsigned char>(name.back())) && peek('(')) {
            std::size_t dig = name.size();
            while (dig > 1 && std::isdigit(static_cast<unsigned char>(name[dig - 1]))) --dig;
            std::string fname = name.substr(1, dig - 1);
            int fid = reg.func_id(fname);
            if (fid >= 0) {
                int order = std::stoi(name.substr(dig));
                expect('(');
                Expr a = parse_expr();
                expect(')');
                return fapply(fid, order, a);
            }
        }
        // plain application: f(arg), v(arg)
        if (reg.func_id(name) >= 0 && peek('(')) {
            expect('(');
            Expr a = parse_expr();
            expect(')');
            return fapply(name, 0, a);
        }
        int sid = reg.symbol_id(name);
        if (sid < 0) throw ParseError("unknown identifier '" + name + "'", start);
        // derivative suffix
        if (pos < s.size() && s[pos] == '_') {
            ++pos;
            std::size_t sstart = pos;
            while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
            std::string suffix = s.substr(sstart, pos - sstart);
            if (suffix.empty()) throw ParseError("empty derivative suffix", sstart);
            return jet(name, suffix);
        }
        return sym(sid);
    }
};

}  // namespace

Expr parse(const std::string& text) {
    Parser p(text);
    Expr e = p.parse_expr();
    p.skip();
    if (p.pos != text.size()) throw ParseError("trailing input", p.pos);
    return e;
}

}  // namespace thinfilm
