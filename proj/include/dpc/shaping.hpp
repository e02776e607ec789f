// Rate-1/2 feed-forward convolutional code used for sign-bit shaping: encoder,
// syndrome former, feedback-free inverse syndrome former, and the Viterbi
// search for the minimum-energy member of a coset.
//
// Polynomials are stored with bit d holding the coefficient of D^d. Code bits
// are interleaved per trellis step: (c1_0, c2_0, c1_1, c2_1, ...), and each
// step covers two PAM symbols of the block.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dpc/gf2.hpp"
#include "dpc/modulation.hpp"

namespace dpc {

using Gf2Poly = std::uint64_t;

/// Degree of a nonzero polynomial.
int poly_degree(Gf2Poly p);
Gf2Poly poly_mul(Gf2Poly a, Gf2Poly b);

/// Parses "0o467" / "467" (octal, MSB is the highest power) or
/// "0b100110111" (binary, MSB first).
Gf2Poly parse_generator(std::string_view text);

class ConvCode {
public:
    /// Rate-1/2: exactly two generators, each with nonzero constant term, the
    /// larger of the two setting the memory. Neither may be the trivial
    /// polynomial 1 (that would make the code systematic).
    ConvCode(Gf2Poly g1, Gf2Poly g2);

    static ConvCode paper_256_state() { return ConvCode(0467, 0625); }

    Gf2Poly generator(int i) const { return i == 0 ? g1_ : g2_; }
    int memory() const { return memory_; }
    int rate_num() const { return 1; }
    int rate_den() const { return 2; }

    /// Polynomials (a, b) with a*g2 + b*g1 = 1, used by the inverse
    /// syndrome former.
    Gf2Poly bezout_a() const { return bezout_a_; }
    Gf2Poly bezout_b() const { return bezout_b_; }

private:
    Gf2Poly g1_;
    Gf2Poly g2_;
    int memory_;
    Gf2Poly bezout_a_ = 0;
    Gf2Poly bezout_b_ = 0;
};

/// State = last `memory` input bits, newest in bit 0.
class ShapingTrellis {
public:
    explicit ShapingTrellis(const ConvCode& code);

    int num_states() const { return num_states_; }
    int memory() const { return memory_; }
    int next_state(int state, int input) const { return ((state << 1) | input) & (num_states_ - 1); }
    /// Two output bits packed as (c1 << 1) | c2.
    int output(int state, int input) const { return outputs_[static_cast<std::size_t>(state * 2 + input)]; }

private:
    int num_states_;
    int memory_;
    std::vector<std::uint8_t> outputs_;
};

/// Feed-forward encoding from the all-zero state, no termination; output
/// length is twice the input length.
BitVector conv_encode(const ConvCode& code, const BitVector& input);

/// s(D) = g2(D) z1(D) + g1(D) z2(D), truncated to the block. Input length must
/// be even; output length is half of it.
BitVector syndrome_former(const ConvCode& code, const BitVector& z);

/// z1 = a m', z2 = b m' with a g2 + b g1 = 1, so syndrome_former(result) == m'.
BitVector inverse_syndrome_former(const ConvCode& code, const BitVector& syndrome);

/// A coset of the (block-truncated) code, identified by its syndrome.
struct CosetSpec {
    const ConvCode* code = nullptr;
    BitVector coset_leader;

    static CosetSpec from_syndrome(const ConvCode& code, const BitVector& syndrome);
};

/// Folded energy sum_i mod_fold(f_M(z_i, lower_i) - offset_i, M)^2.
double folded_energy(const PamMapping& mapping, const BitVector& z, std::span<const std::uint8_t> lower,
                     std::span<const double> offset);

/// Minimum folded-energy coset member. `offset[i]` is the value subtracted
/// from symbol i before folding (alpha * S_i, plus the dither when enabled).
/// Viterbi from state 0 with a free end (best final state); ties keep the
/// predecessor whose departing register bit is 0 and the lowest end state.
BitVector shape(const CosetSpec& spec, std::span<const std::uint8_t> lower, std::span<const double> offset,
                const PamMapping& mapping);

/// Convenience overload taking S and alpha separately.
BitVector shape(const CosetSpec& spec, std::span<const std::uint8_t> lower, std::span<const double> interference,
                double alpha, const PamMapping& mapping);

} // namespace dpc
