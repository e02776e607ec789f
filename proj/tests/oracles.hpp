// Independent reference computations used by the tests. Deliberately naive:
// plain nested vectors, no shared code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Bits = std::vector<int>;
using Dense = std::vector<Bits>;

inline Bits random_bits(std::mt19937_64& rng, std::size_t n)
{
    Bits b(n);
    for (auto& x : b) {
        x = static_cast<int>(rng() & 1U);
    }
    return b;
}

inline Dense random_dense(std::mt19937_64& rng, std::size_t rows, std::size_t cols)
{
    Dense m(rows);
    for (auto& r : m) {
        r = random_bits(rng, cols);
    }
    return m;
}

inline Bits mat_vec(const Dense& m, const Bits& v)
{
    Bits out(m.size(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        int acc = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            acc += m[i][j] * v[j];
        }
        out[i] = acc % 2;
    }
    return out;
}

/// Rank by textbook column-by-column elimination.
inline std::size_t rank(Dense m)
{
    if (m.empty()) {
        return 0;
    }
    std::size_t r = 0;
    const std::size_t cols = m[0].size();
    for (std::size_t c = 0; c < cols && r < m.size(); ++c) {
        std::size_t p = r;
        while (p < m.size() && m[p][c] == 0) {
            ++p;
        }
        if (p == m.size()) {
            continue;
        }
        std::swap(m[p], m[r]);
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (i != r && m[i][c]) {
                for (std::size_t j = 0; j < cols; ++j) {
                    m[i][j] ^= m[r][j];
                }
            }
        }
        ++r;
    }
    return r;
}

/// Solves A x = b over GF(2) by enumeration when A has few columns.
inline std::vector<Bits> solve_all(const Dense& a, const Bits& b)
{
    const std::size_t n = a.empty() ? 0 : a[0].size();
    std::vector<Bits> sols;
    for (std::uint64_t v = 0; v < (1ULL << n); ++v) {
        Bits x(n);
        for (std::size_t j = 0; j < n; ++j) {
            x[j] = static_cast<int>((v >> j) & 1U);
        }
        if (mat_vec(a, x) == b) {
            sols.push_back(x);
        }
    }
    return sols;
}

/// Coefficients of D^0..D^deg.
inline Bits poly(std::uint64_t p)
{
    Bits c;
    while (p) {
        c.push_back(static_cast<int>(p & 1U));
        p >>= 1;
    }
    return c;
}

/// Truncated product of polynomial p with sequence x (first x.size() terms).
inline Bits convolve(const Bits& p, const Bits& x)
{
    Bits y(x.size(), 0);
    for (std::size_t t = 0; t < x.size(); ++t) {
        for (std::size_t d = 0; d < p.size() && d <= t; ++d) {
            y[t] ^= p[d] & x[t - d];
        }
    }
    return y;
}

/// Interleaved rate-1/2 encoding with generators g1, g2.
inline Bits encode(std::uint64_t g1, std::uint64_t g2, const Bits& u)
{
    const Bits a = convolve(poly(g1), u);
    const Bits b = convolve(poly(g2), u);
    Bits out;
    for (std::size_t t = 0; t < u.size(); ++t) {
        out.push_back(a[t]);
        out.push_back(b[t]);
    }
    return out;
}

/// g2 * z1 + g1 * z2.
inline Bits syndrome(std::uint64_t g1, std::uint64_t g2, const Bits& z)
{
    Bits z1;
    Bits z2;
    for (std::size_t t = 0; 2 * t < z.size(); ++t) {
        z1.push_back(z[2 * t]);
        z2.push_back(z[2 * t + 1]);
    }
    Bits s = convolve(poly(g2), z1);
    const Bits s2 = convolve(poly(g1), z2);
    for (std::size_t t = 0; t < s.size(); ++t) {
        s[t] ^= s2[t];
    }
    return s;
}

inline double fold(double x, int M)
{
    double r = std::fmod(x + M / 2.0, static_cast<double>(M));
    if (r < 0) {
        r += M;
    }
    return r - M / 2.0;
}

/// Minimum folded energy over every member leader + C of the coset, by
/// enumerating all 2^(s/2) information sequences. `symbol(z, i)` gives the
/// mapped point of symbol i for sign bit z.
inline double coset_minimum(std::uint64_t g1, std::uint64_t g2, const Bits& leader,
                            const std::function<double(int, std::size_t)>& symbol, const std::vector<double>& offset,
                            int M)
{
    const std::size_t steps = leader.size() / 2;
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t v = 0; v < (1ULL << steps); ++v) {
        Bits u(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            u[t] = static_cast<int>((v >> t) & 1U);
        }
        const Bits c = encode(g1, g2, u);
        double e = 0.0;
        for (std::size_t i = 0; i < leader.size(); ++i) {
            const double x = fold(symbol(leader[i] ^ c[i], i) - offset[i], M);
            e += x * x;
        }
        best = std::min(best, e);
    }
    return best;
}

/// LLRs by direct summation in long double. `weights` may be empty.
inline std::vector<double> demap(const std::vector<double>& points, const std::vector<unsigned>& labels, int l,
                                 double y, double noise_var, const std::vector<double>& weights = {})
{
    std::vector<double> out(l);
    for (int b = 0; b < l; ++b) {
        long double s0 = 0;
        long double s1 = 0;
        for (std::size_t p = 0; p < points.size(); ++p) {
            const long double d = static_cast<long double>(y) - points[p];
            long double e = std::exp(-d * d / (2.0L * noise_var));
            if (!weights.empty()) {
                e *= weights[p];
            }
            if ((labels[p] >> (l - 1 - b)) & 1U) {
                s1 += e;
            } else {
                s0 += e;
            }
        }
        out[b] = static_cast<double>(std::log(s0) - std::log(s1));
    }
    return out;
}

/// Maximum-likelihood codeword for BPSK (0 -> +1) over AWGN, by enumeration.
inline Bits ml_decode(const std::vector<Bits>& codebook, const std::vector<double>& y)
{
    double best = -std::numeric_limits<double>::infinity();
    const Bits* arg = nullptr;
    for (const auto& c : codebook) {
        double corr = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            corr += (c[i] ? -1.0 : 1.0) * y[i];
        }
        if (corr > best) {
            best = corr;
            arg = &c;
        }
    }
    return *arg;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) {
            ++i;
        }
        while (j < b.size() && b[j] <= x) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

/// Critical value of the two-sample KS statistic; c = 1.628 at the 1% level.
inline double ks_critical(std::size_t n, std::size_t m, double c = 1.628)
{
    return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

/// Pooled two-proportion z statistic.
inline double two_proportion_z(double x1, double n1, double x2, double n2)
{
    const double p = (x1 + x2) / (n1 + n2);
    const double se = std::sqrt(p * (1 - p) * (1 / n1 + 1 / n2));
    return se > 0 ? (x1 / n1 - x2 / n2) / se : 0.0;
}

} // namespace oracle
