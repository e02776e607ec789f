// Channel models and the information-theoretic reference numbers used to
// judge the link simulations.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dpc {

/// Seeded i.i.d. Gaussian source; each stream owns its generator.
class GaussianSource {
public:
    GaussianSource(std::uint64_t seed, double variance);

    double variance() const { return variance_; }
    std::vector<double> draw(std::size_t count);
    void fill(std::span<double> out);

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> dist_;
    double variance_;
};

/// Y = X + S + N, N ~ N(0, noise_var) drawn from `noise`. A zero-variance
/// source adds nothing.
std::vector<double> dirty_paper_channel(std::span<const double> x, std::span<const double> s, GaussianSource& noise);

enum class DitherMode { off, uniform };

/// Shared-seed dither, uniform on [-M/2, M/2) per symbol. Transmitter and
/// receiver construct it with the same seed and draw the same sequence.
class DitherSource {
public:
    DitherSource(DitherMode mode, std::uint64_t seed, int M);

    DitherMode mode() const { return mode_; }
    std::vector<double> draw(std::size_t count);

private:
    DitherMode mode_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> dist_;
};

/// MMSE scaling P_X / (P_X + P_N).
double mmse_alpha(double tx_power, double noise_power);

/// 10 log10(2^(2 rate) - 1): SNR at which the AWGN capacity equals `rate`.
double awgn_capacity_snr_for_rate(double rate_bits);

/// 0.5 log2(1 + snr).
double awgn_capacity(double snr_linear);

struct RatePair {
    double beta;
    double r1;
    double r2;
};

struct BroadcastRegion {
    std::vector<RatePair> boundary; // superposition boundary over the beta grid
    double c1 = 0.0;                // single-user capacity of receiver 1
    double c2 = 0.0;                // single-user capacity of receiver 2

    /// True when (r1, r2) lies strictly above the time-sharing chord
    /// between (c1, 0) and (0, c2).
    bool outside_time_sharing(double r1, double r2) const { return r1 / c1 + r2 / c2 > 1.0; }
};

/// Degraded two-user region: R1 = C((1-b)P / (bP + N1)), R2 = C(bP / N2).
/// Throws unless noise1 > noise2.
BroadcastRegion bc_capacity_region(double total_power, double noise1, double noise2, std::span<const double> betas);
BroadcastRegion bc_capacity_region(double total_power, double noise1, double noise2, std::size_t points);

struct ShapingFigures {
    double gain_linear;
    double gain_db;
    double normalized_second_moment;
    double loss_db;
};

/// Granular gain 2^(2C*) / (6 S_x), G = 1 / (12 gain) and the finite-rate
/// shaping loss 10 log10((2 pi e G 2^(2C*) - 1) / (2^(2C*) - 1)).
ShapingFigures granular_gain_and_shaping_loss(double c_star, double tx_power);

/// 0.5 log2(1 + snr) - 0.5 log2(2 pi e G): lattice lower bound on the rate.
double lattice_rate_bound(double snr_linear, double normalized_second_moment);

} // namespace dpc
