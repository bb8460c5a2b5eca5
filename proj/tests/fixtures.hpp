#pragma once

#include <vector>

#include "stochecon/equilibrium.hpp"
#include "stochecon/types.hpp"

namespace fixtures {

using namespace stochecon;

inline Characteristics cd(double a1, double e1, double e2)
{
    Vector a(2), e(2);
    a << a1, 1.0 - a1;
    e << e1, e2;
    return make_cd_characteristics(a, e);
}

// Two equiprobable agents with shares 0.3 / 0.7 and unit endowments.
// p*_e = (0.5, 0.5); realized p*^1 is the mean share.
inline EconomyModel two_atom(std::int64_t n)
{
    return EconomyModel(make_cd_structure(1), MicroDistribution::discrete({cd(0.3, 1, 1), cd(0.7, 1, 1)}, {0.5, 0.5}),
                        n);
}

inline EconomyModel tri_atom(std::int64_t n)
{
    return EconomyModel(make_cd_structure(1),
                        MicroDistribution::discrete({cd(0.2, 1, 1), cd(0.5, 1, 1), cd(0.8, 1, 1)},
                                                    {1.0 / 3, 1.0 / 3, 1.0 / 3}),
                        n);
}

// A poor class (wealth below 0.5 at every price) next to two rich classes.
inline EconomyModel survival_model(std::int64_t n)
{
    return EconomyModel(make_cd_structure(1),
                        MicroDistribution::discrete({cd(0.7, 0.4, 0.2), cd(0.3, 1, 1), cd(0.6, 1, 1)},
                                                    {0.3, 0.35, 0.35}),
                        n);
}

inline MacroStructure non_survival(double level)
{
    const auto spec = SurvivalSpec::constant(level);
    return MacroStructure{1, [spec](const Characteristics& t, const Price& p) {
                              Vector x(1);
                              x[0] = is_non_surviving(t, p, spec) ? 1.0 : 0.0;
                              return x;
                          }};
}

// Price-independent excess demand with prescribed support values.
inline EconomyModel tabulated(const std::vector<std::vector<double>>& rows, const std::vector<double>& q,
                              std::int64_t n = 1)
{
    const int l = static_cast<int>(rows.front().size());
    std::vector<Characteristics> atoms;
    for (const auto& r : rows) {
        atoms.push_back(Eigen::Map<const Vector>(r.data(), l));
    }
    return EconomyModel(make_tabulated_structure(l), MicroDistribution::discrete(atoms, q), n);
}

inline Price mid_price(int l)
{
    return Price(Vector::Constant(l + 1, 1.0 / (l + 1)));
}

}  // namespace fixtures
