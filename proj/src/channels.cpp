#include "dpc/channels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpc {

GaussianSource::GaussianSource(std::uint64_t seed, double variance)
    : rng_(seed), dist_(0.0, std::sqrt(std::max(variance, 0.0))), variance_(variance)
{
    if (!(variance >= 0.0)) {
        throw std::invalid_argument("GaussianSource: negative variance");
    }
}

std::vector<double> GaussianSource::draw(std::size_t count)
{
    std::vector<double> out(count);
    fill(out);
    return out;
}

void GaussianSource::fill(std::span<double> out)
{
    if (variance_ == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    for (auto& x : out) {
        x = dist_(rng_);
    }
}

std::vector<double> dirty_paper_channel(std::span<const double> x, std::span<const double> s, GaussianSource& noise)
{
    if (x.size() != s.size()) {
        throw std::invalid_argument("dirty_paper_channel: length mismatch");
    }
    std::vector<double> y = noise.draw(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += x[i] + s[i];
    }
    return y;
}

DitherSource::DitherSource(DitherMode mode, std::uint64_t seed, int M)
    : mode_(mode), rng_(seed), dist_(-M / 2.0, M / 2.0)
{
}

std::vector<double> DitherSource::draw(std::size_t count)
{
    std::vector<double> u(count, 0.0);
    if (mode_ == DitherMode::uniform) {
        for (auto& x : u) {
            x = dist_(rng_);
        }
    }
    return u;
}

double mmse_alpha(double tx_power, double noise_power)
{
    if (!(tx_power > 0.0) || !(noise_power >= 0.0)) {
        throw std::invalid_argument("mmse_alpha: powers out of range");
    }
    return tx_power / (tx_power + noise_power);
}

double awgn_capacity_snr_for_rate(double rate_bits)
{
    if (!(rate_bits > 0.0)) {
        throw std::invalid_argument("awgn_capacity_snr_for_rate: rate must be positive");
    }
    return 10.0 * std::log10(std::exp2(2.0 * rate_bits) - 1.0);
}

double awgn_capacity(double snr_linear)
{
    return 0.5 * std::log2(1.0 + snr_linear);
}

BroadcastRegion bc_capacity_region(double total_power, double noise1, double noise2, std::span<const double> betas)
{
    if (!(noise1 > noise2) || !(noise2 > 0.0) || !(total_power > 0.0)) {
        throw std::invalid_argument("bc_capacity_region: need P > 0 and P_N1 > P_N2 > 0");
    }
    BroadcastRegion region;
    region.c1 = awgn_capacity(total_power / noise1);
    region.c2 = awgn_capacity(total_power / noise2);
    for (double b : betas) {
        if (b < 0.0 || b > 1.0) {
            throw std::invalid_argument("bc_capacity_region: beta outside [0, 1]");
        }
        region.boundary.push_back(RatePair{b, awgn_capacity((1.0 - b) * total_power / (b * total_power + noise1)),
                                           awgn_capacity(b * total_power / noise2)});
    }
    return region;
}

BroadcastRegion bc_capacity_region(double total_power, double noise1, double noise2, std::size_t points)
{
    if (points < 2) {
        throw std::invalid_argument("bc_capacity_region: need at least two grid points");
    }
    std::vector<double> betas(points);
    for (std::size_t i = 0; i < points; ++i) {
        betas[i] = static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return bc_capacity_region(total_power, noise1, noise2, betas);
}

ShapingFigures granular_gain_and_shaping_loss(double c_star, double tx_power)
{
    if (!(tx_power > 0.0)) {
        throw std::invalid_argument("granular_gain_and_shaping_loss: transmit power must be positive");
    }
    ShapingFigures f{};
    const double expansion = std::exp2(2.0 * c_star);
    f.gain_linear = expansion / (6.0 * tx_power);
    f.gain_db = 10.0 * std::log10(f.gain_linear);
    f.normalized_second_moment = 1.0 / (12.0 * f.gain_linear);
    const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
    f.loss_db = 10.0 * std::log10((two_pi_e * f.normalized_second_moment * expansion - 1.0) / (expansion - 1.0));
    return f;
}

double lattice_rate_bound(double snr_linear, double normalized_second_moment)
{
    const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
    return awgn_capacity(snr_linear) - 0.5 * std::log2(two_pi_e * normalized_second_moment);
}

} // namespace dpc
