#include "dpc/selftest.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <set>
#include <string>

#include "dpc/ldpc.hpp"
#include "dpc/modulation.hpp"
#include "dpc/pipeline.hpp"
#include "dpc/shaping.hpp"

namespace dpc {

namespace {

BitVector random_bits(std::mt19937_64& rng, std::size_t n)
{
    std::vector<std::uint8_t> b(n);
    for (auto& x : b) {
        x = static_cast<std::uint8_t>(rng() & 1U);
    }
    return BitVector::from_bits(std::move(b));
}

BitVector from_integer(std::uint64_t v, std::size_t n)
{
    BitVector b(n);
    for (std::size_t i = 0; i < n; ++i) {
        b.set(i, ((v >> i) & 1U) != 0);
    }
    return b;
}

// Returns an empty string on success, else a failure detail.
using Check = std::function<std::string()>;

} // namespace

bool run_property_suite(std::ostream& out, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const ConvCode small(07, 05);
    const ConvCode paper = ConvCode::paper_256_state();
    const PamMapping mapping(16);

    const std::vector<std::pair<std::string, Check>> checks = {
        {"syndrome former inverts the inverse syndrome former (memory 2, all syndromes up to 12 bits)",
         [&]() -> std::string {
             for (std::size_t len = 1; len <= 12; ++len) {
                 for (std::uint64_t v = 0; v < (1ULL << len); ++v) {
                     const auto syn = from_integer(v, len);
                     if (syndrome_former(small, inverse_syndrome_former(small, syn)) != syn) {
                         return "length " + std::to_string(len) + " value " + std::to_string(v);
                     }
                 }
             }
             return {};
         }},
        {"syndrome former inverts the inverse syndrome former (memory 8, 1000 random syndromes)",
         [&]() -> std::string {
             for (int t = 0; t < 1000; ++t) {
                 const auto syn = random_bits(rng, 1 + rng() % 600);
                 if (syndrome_former(paper, inverse_syndrome_former(paper, syn)) != syn) {
                     return "trial " + std::to_string(t);
                 }
             }
             return {};
         }},
        {"shape() output stays in the requested coset",
         [&]() -> std::string {
             std::normal_distribution<double> g(0.0, 20.0);
             for (int t = 0; t < 200; ++t) {
                 const ConvCode& code = t % 2 ? paper : small;
                 const std::size_t s = 2 * (1 + rng() % 150);
                 const auto syn = random_bits(rng, s / 2);
                 std::vector<std::uint8_t> lower(s);
                 std::vector<double> offset(s);
                 for (std::size_t i = 0; i < s; ++i) {
                     lower[i] = static_cast<std::uint8_t>(rng() % 8);
                     offset[i] = g(rng);
                 }
                 const auto z = shape(CosetSpec::from_syndrome(code, syn), lower, offset, mapping);
                 if (syndrome_former(code, z) != syn) {
                     return "trial " + std::to_string(t);
                 }
             }
             return {};
         }},
        {"interleaver round trip",
         [&]() -> std::string {
             for (int t = 0; t < 20; ++t) {
                 const Interleaver pi(1 + rng() % 5000, rng());
                 const auto x = random_bits(rng, pi.size());
                 const auto y = pi.deinterleave(std::span<const std::uint8_t>(pi.interleave(x.bits())));
                 if (BitVector::from_bits(y) != x) {
                     return "trial " + std::to_string(t);
                 }
             }
             return {};
         }},
        {"mod_fold is idempotent and lands in [-M/2, M/2)",
         [&]() -> std::string {
             std::uniform_real_distribution<double> u(-1e4, 1e4);
             for (int t = 0; t < 100000; ++t) {
                 const double x = u(rng);
                 const double f = mod_fold(x, 16);
                 if (!(f >= -8.0 && f < 8.0) || mod_fold(f, 16) != f) {
                     return "x = " + std::to_string(x);
                 }
                 if (std::abs(std::remainder(x - f, 16.0)) > 1e-9) {
                     return "not congruent, x = " + std::to_string(x);
                 }
             }
             return {};
         }},
        {"label table is a bijection",
         [&]() -> std::string {
             std::set<double> seen;
             for (std::uint32_t label = 0; label < 16; ++label) {
                 const double a = mapping.symbol(label);
                 if (!seen.insert(a).second || mapping.label_of_symbol(a) != label) {
                     return "label " + std::to_string(label);
                 }
             }
             return {};
         }},
        {"sign-bit flip moves every point by M/2",
         [&]() -> std::string {
             for (std::uint32_t lower = 0; lower < 8; ++lower) {
                 const double d = mapping.symbol(true, lower) - mapping.symbol(false, lower);
                 if (std::abs(std::abs(mod_fold(d, 16)) - 8.0) > 0.0) {
                     return "lower bits " + std::to_string(lower);
                 }
             }
             return {};
         }},
        {"LDPC encoding gives a zero syndrome (1000 random messages)",
         [&]() -> std::string {
             const auto code = LdpcCode::construct(2000, 1750, DegreeDistribution::parse("0.1256x+0.7140x^2+0.1604x^9"),
                                                   DegreeDistribution::parse("x^31"), seed);
             for (int t = 0; t < 1000; ++t) {
                 if (!code.is_codeword(code.encode_systematic(random_bits(rng, code.K())))) {
                     return "message " + std::to_string(t);
                 }
             }
             return {};
         }},
        {"BP convergence implies a zero syndrome",
         [&]() -> std::string {
             const auto code = LdpcCode::construct(1000, 500, DegreeDistribution::parse("x^3"),
                                                   DegreeDistribution::parse("x^6"), seed + 1);
             BpDecoder dec(code);
             int converged = 0;
             for (int t = 0; t < 200; ++t) {
                 const auto cw = code.encode_systematic(random_bits(rng, code.K()));
                 const double sigma = 0.5 + 0.5 * (t % 5) / 4.0;
                 std::normal_distribution<double> g(0.0, sigma);
                 std::vector<double> llr(code.n());
                 for (std::size_t i = 0; i < code.n(); ++i) {
                     const double y = (cw[i] ? -1.0 : 1.0) + g(rng);
                     llr[i] = 2.0 * y / (sigma * sigma);
                 }
                 const auto r = dec.decode(llr);
                 if (r.converged) {
                     ++converged;
                     if (!code.is_codeword(r.hard_bits)) {
                         return "trial " + std::to_string(t);
                     }
                 }
             }
             if (converged == 0) {
                 return "decoder never converged";
             }
             return {};
         }},
    };

    bool all = true;
    for (const auto& [name, check] : checks) {
        std::string detail;
        try {
            detail = check();
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (detail.empty()) {
            out << "PASS  " << name << '\n';
        } else {
            out << "FAIL  " << name << ": " << detail << '\n';
            all = false;
        }
    }
    return all;
}

} // namespace dpc
