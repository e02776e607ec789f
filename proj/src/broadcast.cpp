#include "dpc/broadcast.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpc {

namespace {

BitVector random_message(std::mt19937_64& rng, std::size_t n)
{
    std::vector<std::uint8_t> bits(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) {
            word = rng();
        }
        bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
    }
    return BitVector::from_bits(std::move(bits));
}

void tally(const std::optional<DecodedBlock>& dec, const std::optional<BitVector>& sent, std::size_t k,
           StreamStats& stats)
{
    if (!dec || !sent) {
        return;
    }
    const std::size_t errors = hamming_distance(dec->message, *sent);
    ++stats.blocks_decoded;
    stats.bits += k;
    stats.bit_errors += errors;
    stats.block_errors += errors > 0 ? 1 : 0;
}

} // namespace

PriorMode parse_prior_mode(std::string_view text)
{
    if (text == "own") {
        return PriorMode::own;
    }
    if (text == "interferer") {
        return PriorMode::interferer;
    }
    if (text == "uniform") {
        return PriorMode::uniform;
    }
    throw std::invalid_argument("unknown prior mode '" + std::string(text) + "' (own, interferer, uniform)");
}

std::string_view to_string(PriorMode mode)
{
    switch (mode) {
    case PriorMode::own:
        return "own";
    case PriorMode::interferer:
        return "interferer";
    case PriorMode::uniform:
        return "uniform";
    }
    return "own";
}

BcConfig BcConfig::from_snrs(const DpcSystemParams& user, double noise1, double noise2, double snr1_db,
                             double snr2_db)
{
    BcConfig cfg;
    cfg.user = user;
    cfg.noise1 = noise1;
    cfg.noise2 = noise2;
    const double p2 = noise2 * std::pow(10.0, snr2_db / 10.0);
    const double p1 = (p2 + noise1) * std::pow(10.0, snr1_db / 10.0);
    cfg.total_power = p1 + p2;
    cfg.beta = p2 / cfg.total_power;
    return cfg;
}

void BcConfig::validate() const
{
    user.validate();
    if (!(noise1 > noise2) || !(noise2 > 0.0)) {
        throw std::invalid_argument("BcConfig: need P_N1 > P_N2 > 0");
    }
    if (!(total_power > 0.0) || !(beta >= 0.0) || !(beta < 1.0)) {
        throw std::invalid_argument("BcConfig: need P > 0 and 0 <= beta < 1");
    }
    if (!(unit_power1 > 0.0) || !(unit_power2 > 0.0)) {
        throw std::invalid_argument("BcConfig: unit constellation powers must be positive");
    }
}

double BcConfig::scale1() const
{
    return std::sqrt(power1() / unit_power1);
}

double BcConfig::scale2() const
{
    return std::sqrt(power2() / unit_power2);
}

double BcConfig::snr1_db() const
{
    return 10.0 * std::log10(power1() / (power2() + noise1));
}

double BcConfig::snr2_db() const
{
    return 10.0 * std::log10(power2() / noise2);
}

DpcSystemParams BcConfig::user1_params() const
{
    DpcSystemParams p = user;
    const double c1 = scale1();
    p.tx_power = unit_power1;
    p.interference_power = 0.0;
    p.noise_power = (power2() + noise1) / (c1 * c1);
    p.dither = false;
    return p;
}

DpcSystemParams BcConfig::user2_params() const
{
    DpcSystemParams p = user;
    if (!user2_active()) {
        p.tx_power = unit_power2;
        p.interference_power = 0.0;
        p.noise_power = 0.0;
        return p;
    }
    const double c2 = scale2();
    p.tx_power = unit_power2;
    p.interference_power = power1() / (c2 * c2);
    p.noise_power = noise2 / (c2 * c2);
    return p;
}

FrontEnd BcConfig::user1_front_end(const PamMapping& mapping) const
{
    const double c1 = scale1();
    FrontEnd fe;
    fe.scale = 1.0 / c1;
    fe.noise_var = (power2() + noise1) / (c1 * c1);
    fe.replication = 0;
    fe.fold = false;
    switch (prior) {
    case PriorMode::own:
        fe.prior = gaussian_prior(mapping, unit_power1);
        break;
    case PriorMode::interferer:
        fe.prior = gaussian_prior(mapping, std::max(power2() / (c1 * c1), 1e-3));
        break;
    case PriorMode::uniform:
        break;
    }
    return fe;
}

FrontEnd BcConfig::user2_front_end(const PamMapping& mapping) const
{
    FrontEnd fe = FrontEnd::modulo(user2_params(), mapping);
    fe.scale /= scale2();
    return fe;
}

BcEncoded bc_encode(const BcConfig& cfg, DpcEncoder& user1, DpcEncoder* user2, const BitVector& m1,
                    const BitVector& m2)
{
    const std::size_t s = cfg.user.s();
    const std::vector<double> zero(s, 0.0);
    BcEncoded out;
    out.x1 = user1.encode_block(m1, zero).x;
    const double c1 = cfg.scale1();
    for (auto& v : out.x1) {
        v *= c1;
    }
    out.x2.assign(s, 0.0);
    if (cfg.user2_active()) {
        if (user2 == nullptr) {
            throw std::invalid_argument("bc_encode: User 2 encoder missing");
        }
        const double c2 = cfg.scale2();
        std::vector<double> known(s);
        for (std::size_t i = 0; i < s; ++i) {
            known[i] = out.x1[i] / c2;
        }
        out.x2 = user2->encode_block(m2, known).x;
        for (auto& v : out.x2) {
            v *= c2;
        }
    }
    out.x.resize(s);
    for (std::size_t i = 0; i < s; ++i) {
        out.x[i] = out.x1[i] + out.x2[i];
    }
    return out;
}

DpcDecoder make_user1_decoder(const BcConfig& cfg, const DpcCodes& codes, BpOptions bp)
{
    return DpcDecoder(cfg.user1_params(), codes, cfg.user1_front_end(codes.mapping), bp);
}

DpcDecoder make_user2_decoder(const BcConfig& cfg, const DpcCodes& codes, BpOptions bp)
{
    if (!cfg.user2_active()) {
        return DpcDecoder(cfg.user2_params(), codes, bp);
    }
    return DpcDecoder(cfg.user2_params(), codes, cfg.user2_front_end(codes.mapping), bp);
}

BcStats& BcStats::operator+=(const BcStats& o)
{
    user1 += o.user1;
    user2 += o.user2;
    energy1 += o.energy1;
    energy2 += o.energy2;
    energy += o.energy;
    symbols += o.symbols;
    return *this;
}

BroadcastLink::BroadcastLink(const BcConfig& cfg, const DpcCodes& codes, BpOptions bp, StreamSeeds seeds)
    : cfg_(cfg),
      codes_(&codes),
      enc1_(cfg.user1_params(), codes),
      enc2_(cfg.user2_params(), codes),
      dec1_(make_user1_decoder(cfg, codes, bp)),
      dec2_(make_user2_decoder(cfg, codes, bp)),
      rng1_(seeds.message),
      rng2_(seeds.interference),
      noise1_(seeds.noise, cfg.noise1),
      noise2_(seeds.dither, cfg.noise2)
{
    cfg_.validate();
}

void BroadcastLink::run(std::size_t blocks, BcStats& stats)
{
    const std::size_t s = cfg_.user.s();
    const std::size_t k = cfg_.user.k;
    const bool two = cfg_.user2_active();
    for (std::size_t b = 0; b < blocks; ++b) {
        BitVector m1 = random_message(rng1_, k);
        BitVector m2 = two ? random_message(rng2_, k) : BitVector(k);
        const auto enc = bc_encode(cfg_, enc1_, two ? &enc2_ : nullptr, m1, m2);
        for (std::size_t i = 0; i < s; ++i) {
            stats.energy1 += enc.x1[i] * enc.x1[i];
            stats.energy2 += enc.x2[i] * enc.x2[i];
            stats.energy += enc.x[i] * enc.x[i];
        }
        stats.symbols += s;
        ++stats.user1.blocks_sent;

        const std::vector<double> none(s, 0.0);
        const auto y1 = dirty_paper_channel(enc.x, none, noise1_);
        tally(dec1_.decode_block(y1), pending1_, k, stats.user1);
        pending1_ = std::move(m1);

        if (two) {
            ++stats.user2.blocks_sent;
            const auto y2 = dirty_paper_channel(enc.x, none, noise2_);
            tally(dec2_.decode_block(y2), pending2_, k, stats.user2);
            pending2_ = std::move(m2);
        }
    }
}

} // namespace dpc
