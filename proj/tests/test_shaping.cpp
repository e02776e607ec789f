#include "doctest.h"

#include <random>

#include "dpc/shaping.hpp"
#include "oracles.hpp"

using namespace dpc;

namespace {

BitVector to_bv(const oracle::Bits& b)
{
    return BitVector::from_bits(std::vector<std::uint8_t>(b.begin(), b.end()));
}

oracle::Bits to_bits(const BitVector& v)
{
    return oracle::Bits(v.bits().begin(), v.bits().end());
}

BitVector random_bv(std::mt19937_64& rng, std::size_t n)
{
    return to_bv(oracle::random_bits(rng, n));
}

const ConvCode small_code(07, 05);

} // namespace

TEST_CASE("generator parsing and polynomial helpers")
{
    CHECK(parse_generator("0o467") == 0467);
    CHECK(parse_generator("625") == 0625);
    CHECK(parse_generator("0b100110111") == 0467);
    CHECK(poly_degree(0467) == 8);
    CHECK(poly_mul(0b11, 0b11) == 0b101);
    CHECK_THROWS(parse_generator("0o9"));
    CHECK_THROWS(ConvCode(06, 05));
    CHECK_THROWS(ConvCode(1, 05));
}

TEST_CASE("paper code has 256 states and a valid Bezout pair")
{
    const auto code = ConvCode::paper_256_state();
    CHECK(code.memory() == 8);
    CHECK(ShapingTrellis(code).num_states() == 256);
    CHECK((poly_mul(code.bezout_a(), code.generator(1)) ^ poly_mul(code.bezout_b(), code.generator(0))) == 1);
}

TEST_CASE("conv_encode impulse response")
{
    BitVector in(4);
    in.set(0, true);
    CHECK(conv_encode(small_code, in).to_string() == "11101100");
    CHECK(conv_encode(small_code, BitVector(5)).count() == 0);
}

TEST_CASE("conv_encode matches polynomial convolution")
{
    std::mt19937_64 rng(20);
    for (int t = 0; t < 200; ++t) {
        const auto u = oracle::random_bits(rng, 1 + rng() % 40);
        CHECK(to_bits(conv_encode(ConvCode::paper_256_state(), to_bv(u))) == oracle::encode(0467, 0625, u));
    }
}

TEST_CASE("syndrome former")
{
    std::mt19937_64 rng(21);
    CHECK(syndrome_former(small_code, BitVector(16)).count() == 0);
    for (int t = 0; t < 200; ++t) {
        const auto u = random_bv(rng, 8);
        CHECK(syndrome_former(small_code, conv_encode(small_code, u)).count() == 0);
        const auto z = oracle::random_bits(rng, 16);
        CHECK(to_bits(syndrome_former(small_code, to_bv(z))) == oracle::syndrome(07, 05, z));
    }
    CHECK_THROWS(syndrome_former(small_code, BitVector(7)));
}

TEST_CASE("inverse syndrome former: exhaustive on the memory-2 code")
{
    CHECK(inverse_syndrome_former(small_code, BitVector(6)).count() == 0);
    for (std::size_t len = 1; len <= 12; ++len) {
        for (std::uint64_t v = 0; v < (1ULL << len); ++v) {
            BitVector m(len);
            for (std::size_t j = 0; j < len; ++j) {
                m.set(j, (v >> j) & 1U);
            }
            const auto z = inverse_syndrome_former(small_code, m);
            REQUIRE(z.size() == 2 * len);
            REQUIRE(syndrome_former(small_code, z) == m);
        }
    }
}

TEST_CASE("inverse syndrome former: paper code, 5000-bit syndromes")
{
    const auto code = ConvCode::paper_256_state();
    std::mt19937_64 rng(22);
    for (int t = 0; t < 20; ++t) {
        const auto m = random_bv(rng, 5000);
        CHECK(syndrome_former(code, inverse_syndrome_former(code, m)) == m);
    }
}

TEST_CASE("shape returns a coset member of minimum folded energy")
{
    const PamMapping mapping(16);
    const std::size_t s = 12;
    std::mt19937_64 rng(23);
    std::normal_distribution<double> gauss(0.0, 6.0);
    for (int t = 0; t < 1000; ++t) {
        const auto m = random_bv(rng, s / 2);
        const auto spec = CosetSpec::from_syndrome(small_code, m);
        std::vector<std::uint8_t> lower(s);
        std::vector<double> offset(s);
        for (std::size_t i = 0; i < s; ++i) {
            lower[i] = static_cast<std::uint8_t>(rng() % 8);
            offset[i] = t % 4 == 0 ? 0.0 : 0.8 * gauss(rng);
        }
        const auto z = shape(spec, lower, offset, mapping);
        CHECK(syndrome_former(small_code, z) == m);

        const auto sym = [&](int zi, std::size_t i) { return mapping.symbol(zi != 0, lower[i]); };
        const double best = oracle::coset_minimum(07, 05, to_bits(spec.coset_leader), sym, offset, 16);
        CHECK(folded_energy(mapping, z, lower, offset) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("shape never exceeds the coset leader energy")
{
    const PamMapping mapping(16);
    const auto code = ConvCode::paper_256_state();
    const std::size_t s = 400;
    const std::vector<std::uint8_t> zeros(s, 0);
    const std::vector<double> no_offset(s, 0.0);
    const auto spec0 = CosetSpec::from_syndrome(code, BitVector(s / 2));
    const auto z0 = shape(spec0, zeros, no_offset, mapping);
    CHECK(folded_energy(mapping, z0, zeros, no_offset) <= s * 3.5 * 3.5);

    std::mt19937_64 rng(24);
    std::normal_distribution<double> gauss(0.0, 5.0);
    for (int t = 0; t < 20; ++t) {
        const auto spec = CosetSpec::from_syndrome(code, random_bv(rng, s / 2));
        std::vector<std::uint8_t> lower(s);
        std::vector<double> interference(s);
        for (std::size_t i = 0; i < s; ++i) {
            lower[i] = static_cast<std::uint8_t>(rng() % 8);
            interference[i] = gauss(rng);
        }
        const double alpha = 0.99;
        const auto z = shape(spec, lower, interference, alpha, mapping);
        std::vector<double> offset(s);
        for (std::size_t i = 0; i < s; ++i) {
            offset[i] = alpha * interference[i];
        }
        CHECK(syndrome_former(code, z) == syndrome_former(code, spec.coset_leader));
        CHECK(folded_energy(mapping, z, lower, offset) <= folded_energy(mapping, spec.coset_leader, lower, offset));
    }
}

TEST_CASE("shaped power of the paper code sits well below the uniform constellation")
{
    const PamMapping mapping(16);
    const auto code = ConvCode::paper_256_state();
    const std::size_t s = 2000;
    std::mt19937_64 rng(25);
    double energy = 0.0;
    for (int t = 0; t < 10; ++t) {
        const auto spec = CosetSpec::from_syndrome(code, random_bv(rng, s / 2));
        std::vector<std::uint8_t> lower(s);
        for (auto& b : lower) {
            b = static_cast<std::uint8_t>(rng() % 8);
        }
        const std::vector<double> offset(s, 0.0);
        energy += folded_energy(mapping, shape(spec, lower, offset, mapping), lower, offset);
    }
    const double power = energy / (10.0 * s);
    // Uniform 16-PAM has 21.25; a 256-state sign-bit shaper lands near 8.
    CHECK(power > 7.0);
    CHECK(power < 9.0);
}
