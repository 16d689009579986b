#include <sstream>

#include "thinfilm/expr.hpp"

namespace thinfilm {
namespace {

// precedence: 1 sum, 2 product, 3 power, 4 atom
int prec_of(const Expr& e) {
    switch (e.kind()) {
        case Kind::Sum:
            return 1;
        case Kind::Product:
            return 2;
        case Kind::Power:
        case Kind::Exp:
            return 3;
        case Kind::Number:
            return (e.value() < 0 || !rat_is_int(e.value())) ? 2 : 4;
        default:
            return 4;
    }
}

std::string render(const Expr& e, int min_prec);

std::string render_exponent(const Expr& e) {
    bool atomic = false;
    switch (e.kind()) {
        case Kind::Symbol:
        case Kind::Jet:
        case Kind::Func:
            atomic = true;
            break;
        case Kind::Number:
            atomic = rat_is_int(e.value()) && e.value() >= 0;
            break;
        default:
            break;
    }
    std::string body = render(e, 0);
    return atomic ? body : "(" + body + ")";
}

std::string jet_name(const Expr& e) {
    const auto& reg = Registry::get();
    const auto& sd = reg.sym(e.id());
    std::string out = sd.name + "_";
    for (std::size_t slot = 0; slot < e.midx().size(); ++slot)
        for (int i = 0; i < e.midx()[slot]; ++i) out += reg.sym(sd.indeps[slot]).name;
    return out;
}

std::string render_product(const Expr& e) {
    // split numerator/denominator; negative integer powers go below the bar
    bool negative = false;
    std::vector<std::string> nums;
    std::vector<std::string> dens;
    auto handle_number = [&](const Rat& q) {
        Rat a = q;
        if (a < 0) {
            negative = !negative;
            a = -a;
        }
        nums.push_back(a.get_num().get_str());
        if (a.get_den() != 1) dens.push_back(a.get_den().get_str());
    };
    std::vector<Expr> factors;
    if (e.kind() == Kind::Product)
        factors = e.kids();
    else
        factors = {e};
    for (const auto& f : factors) {
        if (f.is_number()) {
            handle_number(f.value());
            continue;
        }
        if (f.kind() == Kind::Power && f.kids()[1].is_number() && f.kids()[1].value() < 0) {
            Rat ne = -f.kids()[1].value();
            Expr base = f.kids()[0];
            std::string b = rat_is_int(ne) && ne == 1
                                ? render(base, 3)
                                : render(base, 4) + "^" + render_exponent(num(ne));
            dens.push_back(b);
            continue;
        }
        nums.push_back(render(f, 2));
    }
    // drop a leading bare "1" numerator when other factors exist
    if (nums.size() > 1 && nums.front() == "1") nums.erase(nums.begin());
    if (nums.empty()) nums.push_back("1");
    std::string out = negative ? "-" : "";
    for (std::size_t i = 0; i < nums.size(); ++i) {
        if (i) out += "*";
        out += nums[i];
    }
    for (const auto& d : dens) out += "/" + d;
    return out;
}

std::string render(const Expr& e, int min_prec) {
    std::string out;
    switch (e.kind()) {
        case Kind::Number: {
            const Rat& q = e.value();
            if (q < 0)
                out = "-" + Rat(-q).get_str();
            else
                out = q.get_str();
            break;
        }
        case Kind::Symbol:
            out = Registry::get().sym(e.id()).name;
            break;
        case Kind::Jet:
            out = jet_name(e);
            break;
        case Kind::Func: {
            const auto& fd = Registry::get().fn(e.id());
            std::string head = e.order() == 0 ? fd.name : "d" + fd.name + std::to_string(e.order());
            out = head + "(" + render(e.kids()[0], 0) + ")";
            break;
        }
        case Kind::Sum: {
            std::ostringstream os;
            bool first = true;
            for (const auto& t : e.kids()) {
                std::string ts = render(t, 2);
                if (first) {
                    os << ts;
                    first = false;
                } else if (!ts.empty() && ts[0] == '-') {
                    os << " - " << ts.substr(1);
                } else {
                    os << " + " << ts;
                }
            }
            out = os.str();
            break;
        }
        case Kind::Product:
            out = render_product(e);
            break;
        case Kind::Power: {
            if (e.kids()[1].is_number() && e.kids()[1].value() < 0) {
                out = render_product(e);  // renders as 1/base^k
                break;
            }
            out = render(e.kids()[0], 4) + "^" + render_exponent(e.kids()[1]);
            break;
        }
        case Kind::Exp:
            out = "e^" + render_exponent(e.kids()[0]);
            break;
        case Kind::Log:
            out = "ln(" + render(e.kids()[0], 0) + ")";
            break;
    }
    if (prec_of(e) < min_prec || (!out.empty() && out[0] == '-' && min_prec >= 2))
        return "(" + out + ")";
    return out;
}

}  // namespace

std::string to_string(const Expr& e) {
    if (e.null()) return "<null>";
    return render(e, 0);
}

}  // namespace thinfilm
