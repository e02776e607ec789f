#include "dpc/shaping.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <stdexcept>
#include <string>

namespace dpc {

int poly_degree(Gf2Poly p)
{
    if (p == 0) {
        throw std::invalid_argument("poly_degree: zero polynomial");
    }
    return 63 - std::countl_zero(p);
}

Gf2Poly poly_mul(Gf2Poly a, Gf2Poly b)
{
    Gf2Poly r = 0;
    while (b != 0) {
        const int d = std::countr_zero(b);
        r ^= a << d;
        b &= b - 1;
    }
    return r;
}

namespace {

// Polynomial division over GF(2): a = q*b + r.
void poly_divmod(Gf2Poly a, Gf2Poly b, Gf2Poly& q, Gf2Poly& r)
{
    q = 0;
    r = a;
    const int db = poly_degree(b);
    while (r != 0 && poly_degree(r) >= db) {
        const int shift = poly_degree(r) - db;
        q ^= Gf2Poly{1} << shift;
        r ^= b << shift;
    }
}

} // namespace

Gf2Poly parse_generator(std::string_view text)
{
    int base = 8;
    if (text.starts_with("0b") || text.starts_with("0B")) {
        base = 2;
        text.remove_prefix(2);
    } else if (text.starts_with("0o") || text.starts_with("0O")) {
        text.remove_prefix(2);
    }
    if (text.empty()) {
        throw std::invalid_argument("parse_generator: empty polynomial");
    }
    Gf2Poly p = 0;
    for (char c : text) {
        const int digit = c - '0';
        if (digit < 0 || digit >= base) {
            throw std::invalid_argument("parse_generator: bad digit in '" + std::string(text) + "'");
        }
        p = p * static_cast<Gf2Poly>(base) + static_cast<Gf2Poly>(digit);
    }
    return p;
}

ConvCode::ConvCode(Gf2Poly g1, Gf2Poly g2) : g1_(g1), g2_(g2)
{
    if ((g1 & 1U) == 0 || (g2 & 1U) == 0) {
        throw std::invalid_argument("ConvCode: generators need a nonzero constant term");
    }
    if (g1 == 1 || g2 == 1) {
        throw std::invalid_argument("ConvCode: shaping code must be non-systematic");
    }
    memory_ = std::max(poly_degree(g1), poly_degree(g2));
    if (memory_ > 20) {
        throw std::invalid_argument("ConvCode: memory too large");
    }

    // Extended Euclid on (g2, g1) tracking a*g2 + b*g1 = r.
    Gf2Poly r0 = g2;
    Gf2Poly r1 = g1;
    Gf2Poly a0 = 1;
    Gf2Poly a1 = 0;
    Gf2Poly b0 = 0;
    Gf2Poly b1 = 1;
    while (r1 != 0) {
        Gf2Poly q = 0;
        Gf2Poly r = 0;
        poly_divmod(r0, r1, q, r);
        r0 = r1;
        r1 = r;
        const Gf2Poly a = a0 ^ poly_mul(q, a1);
        const Gf2Poly b = b0 ^ poly_mul(q, b1);
        a0 = a1;
        a1 = a;
        b0 = b1;
        b1 = b;
    }
    if (r0 != 1) {
        throw std::invalid_argument("ConvCode: generators share a common factor (catastrophic code)");
    }
    bezout_a_ = a0;
    bezout_b_ = b0;
}

ShapingTrellis::ShapingTrellis(const ConvCode& code)
    : num_states_(1 << code.memory()), memory_(code.memory()), outputs_(static_cast<std::size_t>(num_states_) * 2)
{
    for (int state = 0; state < num_states_; ++state) {
        for (int u = 0; u < 2; ++u) {
            // Register contents: bit 0 = current input, bit d = input d steps ago.
            const Gf2Poly reg = (static_cast<Gf2Poly>(state) << 1) | static_cast<Gf2Poly>(u);
            const int c1 = std::popcount(reg & code.generator(0)) & 1;
            const int c2 = std::popcount(reg & code.generator(1)) & 1;
            outputs_[static_cast<std::size_t>(state * 2 + u)] = static_cast<std::uint8_t>((c1 << 1) | c2);
        }
    }
}

namespace {

// Truncated causal convolution y = p * x over the first x.size() terms.
std::vector<std::uint8_t> convolve(Gf2Poly p, std::span<const std::uint8_t> x)
{
    const int deg = poly_degree(p);
    std::vector<std::uint8_t> y(x.size(), 0);
    for (std::size_t t = 0; t < x.size(); ++t) {
        std::uint8_t acc = 0;
        for (int d = 0; d <= deg && static_cast<std::size_t>(d) <= t; ++d) {
            if ((p >> d) & 1U) {
                acc ^= x[t - static_cast<std::size_t>(d)];
            }
        }
        y[t] = acc;
    }
    return y;
}

} // namespace

BitVector conv_encode(const ConvCode& code, const BitVector& input)
{
    const auto c1 = convolve(code.generator(0), input.bits());
    const auto c2 = convolve(code.generator(1), input.bits());
    std::vector<std::uint8_t> out(input.size() * 2);
    for (std::size_t t = 0; t < input.size(); ++t) {
        out[2 * t] = c1[t];
        out[2 * t + 1] = c2[t];
    }
    return BitVector::from_bits(std::move(out));
}

BitVector syndrome_former(const ConvCode& code, const BitVector& z)
{
    if (z.size() % 2 != 0) {
        throw std::invalid_argument("syndrome_former: length must be a multiple of 2");
    }
    const std::size_t steps = z.size() / 2;
    std::vector<std::uint8_t> z1(steps);
    std::vector<std::uint8_t> z2(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        z1[t] = z[2 * t];
        z2[t] = z[2 * t + 1];
    }
    auto s = convolve(code.generator(1), z1);
    const auto s2 = convolve(code.generator(0), z2);
    for (std::size_t t = 0; t < steps; ++t) {
        s[t] ^= s2[t];
    }
    return BitVector::from_bits(std::move(s));
}

BitVector inverse_syndrome_former(const ConvCode& code, const BitVector& syndrome)
{
    const auto z1 = convolve(code.bezout_a(), syndrome.bits());
    const auto z2 = convolve(code.bezout_b(), syndrome.bits());
    std::vector<std::uint8_t> out(syndrome.size() * 2);
    for (std::size_t t = 0; t < syndrome.size(); ++t) {
        out[2 * t] = z1[t];
        out[2 * t + 1] = z2[t];
    }
    return BitVector::from_bits(std::move(out));
}

CosetSpec CosetSpec::from_syndrome(const ConvCode& code, const BitVector& syndrome)
{
    return CosetSpec{&code, inverse_syndrome_former(code, syndrome)};
}

double folded_energy(const PamMapping& mapping, const BitVector& z, std::span<const std::uint8_t> lower,
                     std::span<const double> offset)
{
    if (z.size() != lower.size() || z.size() != offset.size()) {
        throw std::invalid_argument("folded_energy: length mismatch");
    }
    double e = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double x = mod_fold(mapping.symbol(z[i] != 0, lower[i]) - offset[i], mapping.order());
        e += x * x;
    }
    return e;
}

BitVector shape(const CosetSpec& spec, std::span<const std::uint8_t> lower, std::span<const double> offset,
                const PamMapping& mapping)
{
    if (spec.code == nullptr) {
        throw std::invalid_argument("shape: coset has no code");
    }
    const BitVector& leader = spec.coset_leader;
    const std::size_t s = leader.size();
    if (lower.size() != s || offset.size() != s) {
        throw std::invalid_argument("shape: length mismatch");
    }
    if (s % 2 != 0) {
        throw std::invalid_argument("shape: block length must be even");
    }
    const std::size_t steps = s / 2;
    const ShapingTrellis trellis(*spec.code);
    const int ns = trellis.num_states();
    const int half = ns / 2;

    // Per-symbol cost of each sign-bit value.
    std::vector<double> cost(2 * s);
    for (std::size_t i = 0; i < s; ++i) {
        if (lower[i] >= mapping.lower_patterns()) {
            throw std::invalid_argument("shape: lower bits out of range");
        }
        for (int z = 0; z < 2; ++z) {
            const double x = mod_fold(mapping.symbol(z != 0, lower[i]) - offset[i], mapping.order());
            cost[2 * i + static_cast<std::size_t>(z)] = x * x;
        }
    }

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> metric(static_cast<std::size_t>(ns), inf);
    std::vector<double> next(static_cast<std::size_t>(ns));
    metric[0] = 0.0;
    // decisions[t * ns + state] = 1 when the surviving predecessor had its
    // departing bit set.
    std::vector<std::uint8_t> decisions(steps * static_cast<std::size_t>(ns));

    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t i0 = 2 * t;
        const int t0 = leader[i0];
        const int t1 = leader[i0 + 1];
        double branch[4];
        for (int out = 0; out < 4; ++out) {
            const int z0 = ((out >> 1) & 1) ^ t0;
            const int z1 = (out & 1) ^ t1;
            branch[out] = cost[2 * i0 + static_cast<std::size_t>(z0)] + cost[2 * (i0 + 1) + static_cast<std::size_t>(z1)];
        }
        std::uint8_t* dec = decisions.data() + t * static_cast<std::size_t>(ns);
        for (int state = 0; state < ns; ++state) {
            const int u = state & 1;
            const int p0 = state >> 1;
            const int p1 = p0 | half;
            const double m0 = metric[static_cast<std::size_t>(p0)] + branch[trellis.output(p0, u)];
            const double m1 = metric[static_cast<std::size_t>(p1)] + branch[trellis.output(p1, u)];
            if (m1 < m0) {
                next[static_cast<std::size_t>(state)] = m1;
                dec[state] = 1;
            } else {
                next[static_cast<std::size_t>(state)] = m0;
                dec[state] = 0;
            }
        }
        metric.swap(next);
    }

    int best = 0;
    for (int state = 1; state < ns; ++state) {
        if (metric[static_cast<std::size_t>(state)] < metric[static_cast<std::size_t>(best)]) {
            best = state;
        }
    }

    BitVector input(steps);
    int state = best;
    for (std::size_t t = steps; t-- > 0;) {
        input.set(t, (state & 1) != 0);
        const int prev = (state >> 1) | (decisions[t * static_cast<std::size_t>(ns) + static_cast<std::size_t>(state)] ? half : 0);
        state = prev;
    }
    return leader ^ conv_encode(*spec.code, input);
}

BitVector shape(const CosetSpec& spec, std::span<const std::uint8_t> lower, std::span<const double> interference,
                double alpha, const PamMapping& mapping)
{
    std::vector<double> offset(interference.begin(), interference.end());
    for (auto& x : offset) {
        x *= alpha;
    }
    return shape(spec, lower, offset, mapping);
}

} // namespace dpc
