#pragma once

#include <string>
#include <string_view>

#include "slope/sorted_l1.hpp"

namespace slope {

/// -Phi^{-1}((i - 0.375) / (p + 0.25)), 1 <= i <= p.
double expected_order_stat(int i, int p);

/// lambda_i = E(i,p) + E(p-1,p) - 2 E(p,p); strictly decreasing and positive. p >= 2.
TuningSequence gaussian_order_stat_lambda(int p);

/// lambda_i = a_base - (i-1) a_step. With require_strict the tail must stay
/// positive and a_step > 0; otherwise only the TuningSequence rules apply.
TuningSequence oscar_lambda(int p, double a_base, double a_step, bool require_strict = false);

TuningSequence constant_lambda(int p, double value);

/// Named recipe from a config or command line: "gauss-os", "oscar:a,b", "const:l".
struct LambdaRecipe {
    enum class Kind { gaussian_order_stats, oscar, constant };
    Kind kind = Kind::gaussian_order_stats;
    double a = 0.0;  // oscar base or constant value
    double b = 0.0;  // oscar step

    /// Throws InputError on an unknown or malformed recipe.
    static LambdaRecipe parse(std::string_view text);
    TuningSequence make(int p) const;
    std::string to_string() const;
};

}  // namespace slope
