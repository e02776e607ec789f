#include "dpc/modulation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dpc {

double mod_fold(double x, int M)
{
    if (!std::isfinite(x)) {
        throw std::invalid_argument("mod_fold: non-finite input");
    }
    const double m = static_cast<double>(M);
    double r = x - m * std::floor((x + m / 2) / m);
    // floor() rounding can land exactly on +M/2 for inputs just below it.
    if (r >= m / 2) {
        r -= m;
    } else if (r < -m / 2) {
        r += m;
    }
    return r;
}

std::uint32_t gray_encode(std::uint32_t u)
{
    return u ^ (u >> 1);
}

std::uint32_t gray_decode(std::uint32_t g)
{
    std::uint32_t u = g;
    for (std::uint32_t shift = 1; shift < 32; shift <<= 1) {
        u ^= u >> shift;
    }
    return u;
}

PamMapping::PamMapping(int M) : M_(M)
{
    if (M < 4 || !std::has_single_bit(static_cast<unsigned>(M))) {
        throw std::invalid_argument("PamMapping: M must be a power of two >= 4");
    }
    l_ = std::countr_zero(static_cast<unsigned>(M));
    const std::uint32_t half = static_cast<std::uint32_t>(M / 2);
    const double centre = (static_cast<double>(half) - 1.0) / 2.0;

    symbol_of_label_.resize(static_cast<std::size_t>(M));
    for (std::uint32_t label = 0; label < static_cast<std::uint32_t>(M); ++label) {
        const bool z = (label >> (l_ - 1)) & 1U;
        const std::uint32_t u = gray_decode(label & (half - 1));
        symbol_of_label_[label] = mod_fold(static_cast<double>(u) - centre + (z ? M / 2 : 0), M);
    }

    std::vector<std::pair<double, std::uint32_t>> sorted;
    for (std::uint32_t label = 0; label < static_cast<std::uint32_t>(M); ++label) {
        sorted.emplace_back(symbol_of_label_[label], label);
    }
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [a, label] : sorted) {
        alphabet_.push_back(a);
        alphabet_labels_.push_back(label);
    }
}

std::uint32_t PamMapping::label_of_symbol(double a) const
{
    const auto it = std::find(alphabet_.begin(), alphabet_.end(), a);
    if (it == alphabet_.end()) {
        throw std::invalid_argument("PamMapping::label_of_symbol: not a constellation point");
    }
    return alphabet_labels_[static_cast<std::size_t>(it - alphabet_.begin())];
}

double PamMapping::average_power() const
{
    const double m = static_cast<double>(M_);
    return (m * m - 1.0) / 12.0;
}

int PamMapping::non_gray_transitions() const
{
    int count = 0;
    for (std::size_t i = 1; i < alphabet_labels_.size(); ++i) {
        if (std::popcount(alphabet_labels_[i] ^ alphabet_labels_[i - 1]) > 1) {
            ++count;
        }
    }
    return count;
}

void PamMapping::write_csv(std::ostream& out) const
{
    out << "label,symbol\n";
    for (std::uint32_t label = 0; label < static_cast<std::uint32_t>(M_); ++label) {
        for (int b = l_ - 1; b >= 0; --b) {
            out << ((label >> b) & 1U);
        }
        out << ',' << symbol_of_label_[label] << '\n';
    }
}

std::vector<double> map_symbols(const PamMapping& mapping, const BitVector& z,
                                std::span<const std::uint8_t> lower)
{
    if (z.size() != lower.size()) {
        throw std::invalid_argument("map_symbols: length mismatch");
    }
    std::vector<double> v(z.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (lower[i] >= mapping.lower_patterns()) {
            throw std::invalid_argument("map_symbols: lower bits out of range");
        }
        v[i] = mapping.symbol(z[i] != 0, lower[i]);
    }
    return v;
}

ReplicatedConstellation::ReplicatedConstellation(const PamMapping& base, int r) : base_(base), r_(r)
{
    if (r < 0) {
        throw std::invalid_argument("ReplicatedConstellation: negative replication");
    }
    const double m = static_cast<double>(base.order());
    for (int j = -r; j <= r; ++j) {
        for (std::size_t i = 0; i < base.alphabet().size(); ++i) {
            points_.push_back(base.alphabet()[i] + j * m);
            labels_.push_back(base.alphabet_labels()[i]);
        }
    }
}

double ReplicatedConstellation::mean_square() const
{
    double acc = 0.0;
    for (double p : points_) {
        acc += p * p;
    }
    return acc / static_cast<double>(points_.size());
}

namespace {

// log-sum-exp split by each label bit. `metric` holds per-point log weights
// (-inf for excluded points).
void bitwise_llr(std::span<const double> metric, std::span<const std::uint32_t> labels, int l,
                 std::span<double> out)
{
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    const double gmax = *std::max_element(metric.begin(), metric.end());

    double sums[2][32] = {};
    for (std::size_t p = 0; p < metric.size(); ++p) {
        const double e = std::exp(metric[p] - gmax);
        for (int b = 0; b < l; ++b) {
            sums[(labels[p] >> (l - 1 - b)) & 1U][b] += e;
        }
    }
    for (int b = 0; b < l; ++b) {
        double s0 = sums[0][b];
        double s1 = sums[1][b];
        if (s0 > 1e-250 && s1 > 1e-250) {
            out[static_cast<std::size_t>(b)] = std::log(s0) - std::log(s1);
            continue;
        }
        // One side underflowed against the global maximum: redo this bit
        // with per-side maxima.
        double mx[2] = {ninf, ninf};
        for (std::size_t p = 0; p < metric.size(); ++p) {
            const auto bit = (labels[p] >> (l - 1 - b)) & 1U;
            mx[bit] = std::max(mx[bit], metric[p]);
        }
        if (mx[0] == ninf || mx[1] == ninf) {
            out[static_cast<std::size_t>(b)] = mx[0] == ninf ? -std::numeric_limits<double>::infinity()
                                                             : std::numeric_limits<double>::infinity();
            continue;
        }
        s0 = 0.0;
        s1 = 0.0;
        for (std::size_t p = 0; p < metric.size(); ++p) {
            if ((labels[p] >> (l - 1 - b)) & 1U) {
                s1 += std::exp(metric[p] - mx[1]);
            } else {
                s0 += std::exp(metric[p] - mx[0]);
            }
        }
        out[static_cast<std::size_t>(b)] = (mx[0] - mx[1]) + std::log(s0) - std::log(s1);
    }
}

} // namespace

void demap_llr(const ReplicatedConstellation& rc, double y_hat, double noise_var, std::span<double> out)
{
    if (!(noise_var > 0.0)) {
        throw std::invalid_argument("demap_llr: noise variance must be positive");
    }
    const int l = rc.base().bits_per_symbol();
    if (out.size() != static_cast<std::size_t>(l)) {
        throw std::invalid_argument("demap_llr: output size mismatch");
    }
    const auto& pts = rc.points();
    double metric[1024];
    if (pts.size() > std::size(metric)) {
        throw std::invalid_argument("demap_llr: constellation too large");
    }
    const double inv = 1.0 / (2.0 * noise_var);
    for (std::size_t p = 0; p < pts.size(); ++p) {
        const double d = y_hat - pts[p];
        metric[p] = -d * d * inv;
    }
    bitwise_llr(std::span<const double>(metric, pts.size()), rc.labels(), l, out);
}

std::vector<double> demap_llr(const ReplicatedConstellation& rc, double y_hat, double noise_var)
{
    std::vector<double> out(static_cast<std::size_t>(rc.base().bits_per_symbol()));
    demap_llr(rc, y_hat, noise_var, out);
    return out;
}

void demap_llr_with_prior(const PamMapping& mapping, double y, double noise_var,
                          std::span<const double> prior, std::span<double> out)
{
    if (!(noise_var > 0.0)) {
        throw std::invalid_argument("demap_llr_with_prior: noise variance must be positive");
    }
    const auto& pts = mapping.alphabet();
    if (prior.size() != pts.size()) {
        throw std::invalid_argument("demap_llr_with_prior: prior size mismatch");
    }
    const int l = mapping.bits_per_symbol();
    if (out.size() != static_cast<std::size_t>(l)) {
        throw std::invalid_argument("demap_llr_with_prior: output size mismatch");
    }
    double total = 0.0;
    for (double p : prior) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("demap_llr_with_prior: invalid prior entry");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("demap_llr_with_prior: prior does not sum to one");
    }
    double metric[512];
    const double inv = 1.0 / (2.0 * noise_var);
    for (std::size_t p = 0; p < pts.size(); ++p) {
        const double d = y - pts[p];
        metric[p] = prior[p] > 0.0 ? std::log(prior[p]) - d * d * inv : -std::numeric_limits<double>::infinity();
    }
    bitwise_llr(std::span<const double>(metric, pts.size()), mapping.alphabet_labels(), l, out);
}

std::vector<double> demap_llr_with_prior(const PamMapping& mapping, double y, double noise_var,
                                         std::span<const double> prior)
{
    std::vector<double> out(static_cast<std::size_t>(mapping.bits_per_symbol()));
    demap_llr_with_prior(mapping, y, noise_var, prior, out);
    return out;
}

std::vector<double> gaussian_prior(const PamMapping& mapping, double variance)
{
    if (!(variance > 0.0)) {
        throw std::invalid_argument("gaussian_prior: variance must be positive");
    }
    std::vector<double> p;
    double total = 0.0;
    for (double a : mapping.alphabet()) {
        p.push_back(std::exp(-a * a / (2.0 * variance)));
        total += p.back();
    }
    for (auto& x : p) {
        x /= total;
    }
    return p;
}

int choose_replication(const PamMapping& base, double total_power)
{
    // Mean square of {a + jM : |j| <= r} is E[a^2] + M^2 r (r + 1) / 3.
    const double m2 = static_cast<double>(base.order()) * base.order();
    int r = 0;
    while (r < kMaxReplication && base.average_power() + m2 * r * (r + 1) / 3.0 < total_power) {
        ++r;
    }
    return r;
}

} // namespace dpc
