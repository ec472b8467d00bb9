#pragma once

#include "maslag/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace maslag {

struct LatticeDirection {
    int di = 0, dj = 0;
    double length() const { return std::hypot(double(di), double(dj)); }
};

/// Three stencil directions e1, e2, e3 with e1 + e2 + e3 = 0 up to signs
/// and |det(e1, e2)| = 1.
struct Superbase {
    std::array<int, 3> dir{};
};

/// Wide stencil of lattice directions arranged in orthogonal pairs.
///
/// Direction 2k and 2k+1 are perpendicular; only the half-turn is stored,
/// each direction is used with both signs.
struct WideStencil {
    std::vector<LatticeDirection> directions;
    std::vector<Superbase> superbases;

    int pair_count() const { return int(directions.size()) / 2; }
    int width() const {
        int w = 0;
        for (const auto& d : directions) w = std::max({w, std::abs(d.di), std::abs(d.dj)});
        return w;
    }

    /// `count` directions per half-turn; must be even and >= 2.
    static WideStencil make(int count) {
        if (count < 2 || count % 2 != 0)
            throw Error("stencil_directions must be even and >= 2, got " + std::to_string(count));
        // Primitive vectors (a, b) with a >= 1, 0 <= b, ordered by length
        // then angle; (a, b) and (b, a) are kept together so the direction
        // set stays symmetric under the lattice reflections.
        struct Cand {
            int a, b;
        };
        std::vector<Cand> cands;
        for (int a = 1; a <= 12; ++a)
            for (int b = 0; b <= a; ++b)
                if (std::gcd(a, b) == 1) cands.push_back({a, b});
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
            return x.a * x.a + x.b * x.b < y.a * y.a + y.b * y.b;
        });
        WideStencil s;
        for (const auto& c : cands) {
            if (int(s.directions.size()) >= count) break;
            s.directions.push_back({c.a, c.b});
            s.directions.push_back({-c.b, c.a});
            if (c.b != 0 && c.b != c.a && int(s.directions.size()) < count) {
                s.directions.push_back({c.b, c.a});
                s.directions.push_back({-c.a, c.b});
            }
        }
        if (int(s.directions.size()) != count)
            throw Error("unsupported stencil_directions " + std::to_string(count));
        s.find_superbases();
        return s;
    }

    int find(int di, int dj) const {
        for (int k = 0; k < int(directions.size()); ++k) {
            const auto& d = directions[k];
            if ((d.di == di && d.dj == dj) || (d.di == -di && d.dj == -dj)) return k;
        }
        return -1;
    }

private:
    void find_superbases() {
        const int n = int(directions.size());
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                const auto& e1 = directions[a];
                const auto& e2 = directions[b];
                if (std::abs(e1.di * e2.dj - e1.dj * e2.di) != 1) continue;
                // Both sign choices of e2 give a candidate third vector.
                for (int sign : {1, -1}) {
                    const int c = find(e1.di + sign * e2.di, e1.dj + sign * e2.dj);
                    if (c > b) superbases.push_back({{a, b, c}});
                }
            }
    }
};

} // namespace maslag
