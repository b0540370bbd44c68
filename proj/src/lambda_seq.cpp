#include "slope/lambda_seq.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "slope/errors.hpp"

namespace slope {

double expected_order_stat(int i, int p) {
    if (p < 1 || i < 1 || i > p) throw DomainError("expected_order_stat: need 1 <= i <= p");
    return -std_normal_quantile((i - 0.375) / (p + 1 - 0.75));
}

TuningSequence gaussian_order_stat_lambda(int p) {
    if (p < 2) throw DomainError("gaussian_order_stat_lambda: p must be at least 2");
    const double shift = expected_order_stat(p - 1, p) - 2.0 * expected_order_stat(p, p);
    Vector lam(p);
    for (int i = 1; i <= p; ++i) lam(i - 1) = expected_order_stat(i, p) + shift;
    return TuningSequence(std::move(lam));
}

TuningSequence oscar_lambda(int p, double a_base, double a_step, bool require_strict) {
    if (p < 1) throw DomainError("oscar_lambda: p must be positive");
    if (!(a_base > 0.0) || !(a_step >= 0.0)) throw InvalidTuning("oscar_lambda: need a_base > 0, a_step >= 0");
    Vector lam(p);
    for (int i = 0; i < p; ++i) lam(i) = a_base - i * a_step;
    TuningSequence seq(std::move(lam));
    if (require_strict) seq.require_strict();
    return seq;
}

TuningSequence constant_lambda(int p, double value) {
    if (p < 1) throw DomainError("constant_lambda: p must be positive");
    if (!(value > 0.0)) throw InvalidTuning("constant_lambda: value must be positive");
    return TuningSequence(Vector::Constant(p, value));
}

namespace {

double parse_number(std::string_view tok) {
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw InputError("lambda recipe: bad number '" + std::string(tok) + "'");
    }
    return v;
}

}  // namespace

LambdaRecipe LambdaRecipe::parse(std::string_view text) {
    LambdaRecipe r;
    if (text == "gauss-os") return r;
    if (text.rfind("oscar:", 0) == 0) {
        const std::string_view args = text.substr(6);
        const auto comma = args.find(',');
        if (comma == std::string_view::npos) throw InputError("lambda recipe: oscar needs 'oscar:a,b'");
        r.kind = Kind::oscar;
        r.a = parse_number(args.substr(0, comma));
        r.b = parse_number(args.substr(comma + 1));
        return r;
    }
    if (text.rfind("const:", 0) == 0) {
        r.kind = Kind::constant;
        r.a = parse_number(text.substr(6));
        return r;
    }
    throw InputError("unknown lambda recipe '" + std::string(text) + "'");
}

TuningSequence LambdaRecipe::make(int p) const {
    switch (kind) {
        case Kind::gaussian_order_stats: return gaussian_order_stat_lambda(p);
        case Kind::oscar: return oscar_lambda(p, a, b);
        case Kind::constant: return constant_lambda(p, a);
    }
    throw InputError("lambda recipe: unknown kind");
}

std::string LambdaRecipe::to_string() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case Kind::gaussian_order_stats: os << "gauss-os"; break;
        case Kind::oscar: os << "oscar:" << a << ',' << b; break;
        case Kind::constant: os << "const:" << a; break;
    }
    return os.str();
}

}  // namespace slope
