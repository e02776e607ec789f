// Two-user degraded Gaussian broadcast with superposition coding.
//
// User 1 is shaped and LDPC coded with S = 0 and scaled to power (1-b)P.
// User 2 is dirty-paper coded against User 1's signal and scaled to bP.
// Receiver 1 demaps its own constellation with a symbol prior, treating
// User 2 as noise; Receiver 2 runs the modulo receiver.
//
// Both encoders work on unit-spacing PAM; c1 and c2 scale to the channel.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "dpc/pipeline.hpp"

namespace dpc {

enum class PriorMode {
    own,        // Gaussian with User 1's shaped power (the known interference of User 2)
    interferer, // Gaussian with User 2's power seen in User 1's units
    uniform,    // no prior
};

PriorMode parse_prior_mode(std::string_view text);
std::string_view to_string(PriorMode mode);

struct BcConfig {
    DpcSystemParams user;      // n, k, k', M and dither; powers are filled per user
    double total_power = 1.0;  // P
    double beta = 0.0;         // share of User 2
    double noise1 = 0.9;       // P_N1
    double noise2 = 0.09;      // P_N2
    double unit_power1 = 7.94; // measured power of the shaped unit constellation, User 1
    double unit_power2 = 7.94; // same for User 2's dirty-paper output
    PriorMode prior = PriorMode::own;

    /// P_X2 = N2 10^(snr2/10), P_X1 = (P_X2 + N1) 10^(snr1/10).
    static BcConfig from_snrs(const DpcSystemParams& user, double noise1, double noise2, double snr1_db,
                              double snr2_db);

    void validate() const;
    double power1() const { return (1.0 - beta) * total_power; }
    double power2() const { return beta * total_power; }
    double scale1() const;
    double scale2() const;
    /// 10 log10(P_X1 / (P_X2 + N1)).
    double snr1_db() const;
    /// 10 log10(P_X2 / N2).
    double snr2_db() const;
    bool user2_active() const { return beta > 0.0; }

    DpcSystemParams user1_params() const;
    DpcSystemParams user2_params() const;
    FrontEnd user1_front_end(const PamMapping& mapping) const;
    FrontEnd user2_front_end(const PamMapping& mapping) const;
};

struct BcEncoded {
    std::vector<double> x1;
    std::vector<double> x2;
    std::vector<double> x;
};

/// Encodes one block of each user. User 2's encoder is skipped when b = 0.
BcEncoded bc_encode(const BcConfig& cfg, DpcEncoder& user1, DpcEncoder* user2, const BitVector& m1,
                    const BitVector& m2);

DpcDecoder make_user1_decoder(const BcConfig& cfg, const DpcCodes& codes, BpOptions bp = {});
DpcDecoder make_user2_decoder(const BcConfig& cfg, const DpcCodes& codes, BpOptions bp = {});

struct BcStats {
    StreamStats user1;
    StreamStats user2;
    double energy1 = 0.0;
    double energy2 = 0.0;
    double energy = 0.0;
    std::uint64_t symbols = 0;

    BcStats& operator+=(const BcStats& o);
    double power1() const { return symbols ? energy1 / static_cast<double>(symbols) : 0.0; }
    double power2() const { return symbols ? energy2 / static_cast<double>(symbols) : 0.0; }
    double power() const { return symbols ? energy / static_cast<double>(symbols) : 0.0; }
};

/// Superposition transmitter, broadcast channel and both receivers for one
/// sequential stream.
class BroadcastLink {
public:
    BroadcastLink(const BcConfig& cfg, const DpcCodes& codes, BpOptions bp, StreamSeeds seeds);

    void run(std::size_t blocks, BcStats& stats);

private:
    BcConfig cfg_;
    const DpcCodes* codes_;
    DpcEncoder enc1_;
    DpcEncoder enc2_;
    DpcDecoder dec1_;
    DpcDecoder dec2_;
    std::mt19937_64 rng1_;
    std::mt19937_64 rng2_;
    GaussianSource noise1_;
    GaussianSource noise2_;
    std::optional<BitVector> pending1_;
    std::optional<BitVector> pending2_;
};

} // namespace dpc
