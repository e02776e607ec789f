// M-PAM constellation with a sign-bit labelling, modulo-M folding and the
// bitwise LLR demappers.
//
// Labels are l = log2(M) bits (z, b2, ..., bl). z selects the inner (z = 0) or
// outer (z = 1) half of the constellation; the lower bits are Gray coded along
// the line inside each half. Flipping z moves a point by exactly M/2 modulo M.
//
// LLR convention everywhere: log(P(bit = 0) / P(bit = 1)).

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dpc/gf2.hpp"

namespace dpc {

/// Folds x into [-M/2, M/2). Throws on non-finite input.
double mod_fold(double x, int M);

std::uint32_t gray_encode(std::uint32_t u);
std::uint32_t gray_decode(std::uint32_t g);

class PamMapping {
public:
    /// M must be a power of two, at least 4.
    explicit PamMapping(int M = 16);

    int order() const { return M_; }
    int bits_per_symbol() const { return l_; }
    /// Number of lower-bit patterns, M/2.
    int lower_patterns() const { return M_ / 2; }

    /// Label is packed with z as the most significant of the l bits.
    double symbol(std::uint32_t label) const { return symbol_of_label_[label]; }
    double symbol(bool z, std::uint32_t lower) const
    {
        return symbol_of_label_[(static_cast<std::uint32_t>(z) << (l_ - 1)) | lower];
    }
    std::uint32_t label_of_symbol(double a) const;

    /// The alphabet A in increasing order.
    const std::vector<double>& alphabet() const { return alphabet_; }
    /// Labels of alphabet() entries, index-aligned.
    const std::vector<std::uint32_t>& alphabet_labels() const { return alphabet_labels_; }

    /// Mean square of A, (M^2 - 1) / 12.
    double average_power() const;

    /// Number of adjacent pairs in A whose labels differ in more than one bit.
    int non_gray_transitions() const;

    /// "label,symbol" CSV, label written as l binary digits (z first).
    void write_csv(std::ostream& out) const;

private:
    int M_;
    int l_;
    std::vector<double> symbol_of_label_;
    std::vector<double> alphabet_;
    std::vector<std::uint32_t> alphabet_labels_;
};

/// Componentwise f_M(z, lower). `lower[i]` packs b2..bl of symbol i with b2
/// as the most significant bit.
std::vector<double> map_symbols(const PamMapping& mapping, const BitVector& z,
                                std::span<const std::uint8_t> lower);

/// Points a + jM, |j| <= r, each carrying the label of a.
class ReplicatedConstellation {
public:
    ReplicatedConstellation(const PamMapping& base, int r);

    const PamMapping& base() const { return base_; }
    int replication() const { return r_; }
    const std::vector<double>& points() const { return points_; }
    const std::vector<std::uint32_t>& labels() const { return labels_; }
    double mean_square() const;

private:
    PamMapping base_;
    int r_;
    std::vector<double> points_;
    std::vector<std::uint32_t> labels_;
};

/// Writes l LLRs into `out`. Throws if noise_var <= 0.
void demap_llr(const ReplicatedConstellation& rc, double y_hat, double noise_var, std::span<double> out);
std::vector<double> demap_llr(const ReplicatedConstellation& rc, double y_hat, double noise_var);

/// Same sum with each term weighted by prior[label-of-alphabet-index]; prior
/// is index-aligned with mapping.alphabet(), positive and summing to one.
/// A zero prior entry is allowed (degenerate priors saturate the LLRs).
void demap_llr_with_prior(const PamMapping& mapping, double y, double noise_var,
                          std::span<const double> prior, std::span<double> out);
std::vector<double> demap_llr_with_prior(const PamMapping& mapping, double y, double noise_var,
                                         std::span<const double> prior);

/// Discretised zero-mean Gaussian over the alphabet, renormalised.
std::vector<double> gaussian_prior(const PamMapping& mapping, double variance);

inline constexpr int kMaxReplication = 4;

/// Smallest r whose replicated constellation has mean square >= total_power,
/// capped at kMaxReplication.
int choose_replication(const PamMapping& base, double total_power);

} // namespace dpc
