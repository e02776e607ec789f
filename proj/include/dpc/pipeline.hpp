// Block encoder and decoder of the shaped, LDPC-coded dirty-paper scheme.
//
// Block T carries: sign bits z_T (shaped, encode the first k' message bits as
// a coset), and lower-bit planes a_2..a_l holding the remaining k-k' message
// bits of block T together with the LDPC parity of block T-1, permuted by a
// fixed interleaver. The LDPC codeword of block T is [z_T | m_T(k'..k) | p_T],
// so the receiver can run the LDPC decoder for block T-1 as soon as block T
// has arrived, then recover the first k' bits through the syndrome former.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dpc/channels.hpp"
#include "dpc/gf2.hpp"
#include "dpc/ldpc.hpp"
#include "dpc/modulation.hpp"
#include "dpc/shaping.hpp"

namespace dpc {

struct DpcSystemParams {
    std::size_t n = 40000;
    std::size_t k = 30000;
    std::size_t k_prime = 5000;
    int M = 16;

    double tx_power = 1.0;           // P_X
    double interference_power = 0.0; // P_S
    double noise_power = 0.0;        // P_N
    bool dither = false;

    static DpcSystemParams paper() { return {}; }

    std::size_t l() const;
    std::size_t s() const { return n / l(); }
    std::size_t ldpc_k() const { return k - k_prime + s(); }
    std::size_t parity_length() const { return n - ldpc_k(); }
    /// Bits carried by the lower planes, n - s.
    std::size_t lower_length() const { return n - s(); }
    double alpha() const { return mmse_alpha(tx_power, noise_power); }
    /// Message bits per PAM symbol.
    double rate() const { return static_cast<double>(k) / static_cast<double>(s()); }
    /// Bits per symbol entering the mapper before channel coding.
    double c_star() const { return static_cast<double>(ldpc_k()) / static_cast<double>(s()); }

    /// Structural invariants; throws std::invalid_argument with the reason.
    void validate() const;
};

/// Fixed permutation of the n - s lower-plane bits.
class Interleaver {
public:
    Interleaver() = default;
    Interleaver(std::size_t size, std::uint64_t seed);

    std::size_t size() const { return perm_.size(); }
    const std::vector<std::uint32_t>& permutation() const { return perm_; }

    /// out[i] = in[perm[i]]
    template <typename T>
    std::vector<T> interleave(std::span<const T> in) const
    {
        check(in.size());
        std::vector<T> out(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
            out[i] = in[perm_[i]];
        }
        return out;
    }

    /// out[perm[i]] = in[i]
    template <typename T>
    std::vector<T> deinterleave(std::span<const T> in) const
    {
        check(in.size());
        std::vector<T> out(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
            out[perm_[i]] = in[i];
        }
        return out;
    }

private:
    void check(std::size_t n) const;

    std::vector<std::uint32_t> perm_;
};

/// Codes shared read-only by every stream of one configuration.
struct DpcCodes {
    ConvCode shaping;
    LdpcCode ldpc;
    PamMapping mapping;
    Interleaver interleaver;

    struct Spec {
        Gf2Poly g1 = 0467;
        Gf2Poly g2 = 0625;
        DegreeDistribution var_dist = DegreeDistribution::parse("0.1256x+0.7140x^2+0.1604x^9");
        DegreeDistribution chk_dist = DegreeDistribution::parse("x^31");
        std::uint64_t ldpc_seed = 1;
        std::uint64_t interleaver_seed = 2;
        /// Optional alist path; loaded if present, written after construction.
        std::string cache_path;
    };

    static DpcCodes build(const DpcSystemParams& params, const Spec& spec);
    static DpcCodes build(const DpcSystemParams& params) { return build(params, Spec{}); }
};

struct EncoderState {
    BitVector previous_parity;
    std::int64_t block_index = 0;
};

struct EncodedBlock {
    std::int64_t block_index = 0;
    std::vector<double> x;           // transmitted symbols, folded into [-M/2, M/2)
    BitVector z;                     // shaped sign bits
    std::vector<std::uint8_t> lower; // packed lower bits per symbol
    BitVector parity;                // parity of this block's codeword, sent next block
    BitVector embedded_parity;       // parity carried in this block (previous block's)
};

class DpcEncoder {
public:
    /// Block 0 carries an all-zero parity vector known at both ends.
    DpcEncoder(const DpcSystemParams& params, const DpcCodes& codes);

    /// `interference` is S (one value per symbol); `dither` may be empty
    /// (treated as zero).
    EncodedBlock encode_block(const BitVector& message, std::span<const double> interference,
                              std::span<const double> dither = {});

    const EncoderState& state() const { return state_; }
    const DpcSystemParams& params() const { return params_; }

private:
    DpcSystemParams params_;
    const DpcCodes* codes_;
    EncoderState state_;
};

/// How received samples are turned into bit LLRs.
struct FrontEnd {
    double scale = 1.0;     // y_hat = scale * y + dither
    double noise_var = 1.0; // variance used by the demapper
    int replication = 0;    // replicas of the constellation on each side
    bool fold = false;      // fold y_hat into [-M/2, M/2) before demapping
    std::vector<double> prior; // optional symbol prior (index-aligned with the alphabet)

    /// Modulo receiver of the dirty-paper link: scale alpha, variance
    /// alpha * P_N, replicas chosen from P_X + P_S (at least one when folding).
    static FrontEnd modulo(const DpcSystemParams& params, const PamMapping& mapping);
};

struct DecodedBlock {
    std::int64_t block_index = 0;
    BitVector message;
    BitVector z;
    bool converged = false;
    int iterations = 0;
};

class DpcDecoder {
public:
    DpcDecoder(const DpcSystemParams& params, const DpcCodes& codes, BpOptions bp = {});
    DpcDecoder(const DpcSystemParams& params, const DpcCodes& codes, FrontEnd front_end, BpOptions bp = {});

    /// Consumes block T; returns the message of block T-1, or nothing for the
    /// first block (no delayed LLRs yet).
    std::optional<DecodedBlock> decode_block(std::span<const double> y, std::span<const double> dither = {});

    /// Bit LLRs per symbol, row-major s x l (sign bit first).
    std::vector<double> demap(std::span<const double> y, std::span<const double> dither = {}) const;

    const FrontEnd& front_end() const { return front_end_; }
    std::int64_t blocks_received() const { return received_; }

private:
    DpcSystemParams params_;
    const DpcCodes* codes_;
    FrontEnd front_end_;
    ReplicatedConstellation constellation_;
    BpDecoder bp_;
    std::int64_t received_ = 0;
    std::vector<double> delayed_sign_;
    std::vector<double> delayed_message_;
};

inline constexpr double kLlrClamp = 30.0;

/// Per-stream random sources. Dither uses one generator shared by both ends.
struct StreamSeeds {
    std::uint64_t message = 1;
    std::uint64_t interference = 2;
    std::uint64_t noise = 3;
    std::uint64_t dither = 4;

    /// Deterministic derivation from a base seed and stream coordinates.
    static StreamSeeds derive(std::uint64_t base, std::uint64_t point, std::uint64_t stream);
};

struct StreamStats {
    std::uint64_t blocks_sent = 0;
    std::uint64_t blocks_decoded = 0;
    std::uint64_t bits = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t block_errors = 0;
    double tx_energy = 0.0;
    std::uint64_t tx_symbols = 0;

    StreamStats& operator+=(const StreamStats& o);
    double ber() const { return bits ? static_cast<double>(bit_errors) / static_cast<double>(bits) : 0.0; }
    double tx_power() const { return tx_symbols ? tx_energy / static_cast<double>(tx_symbols) : 0.0; }
};

class FrameWriter;

/// Encoder, dirty-paper channel and decoder for one sequential stream of
/// random messages. The first block sent only primes the delay line.
class LinkStream {
public:
    LinkStream(const DpcSystemParams& params, const DpcCodes& codes, BpOptions bp, StreamSeeds seeds);

    /// Sends `blocks` more blocks, accumulating into `stats`.
    void run(std::size_t blocks, StreamStats& stats, FrameWriter* frames = nullptr);
    /// Replaces the Gaussian interference with fixed samples, consumed in
    /// order and wrapped around.
    void set_interference_samples(std::shared_ptr<const std::vector<double>> samples);

private:
    DpcSystemParams params_;
    const DpcCodes* codes_;
    DpcEncoder encoder_;
    DpcDecoder decoder_;
    std::mt19937_64 message_rng_;
    GaussianSource interference_;
    GaussianSource noise_;
    DitherSource dither_;
    std::optional<BitVector> pending_; // message of the last block sent
    std::shared_ptr<const std::vector<double>> samples_;
    std::size_t sample_pos_ = 0;
};

/// Whitespace-separated interference samples ('#' starts a comment).
std::vector<double> read_interference_samples(std::istream& in);

struct RoundtripResult {
    BitVector decoded;
    std::size_t bit_errors = 0;
};

/// Sends a warm-up block, `message` with interference `interference`, and a
/// flush block, then decodes `message` only.
RoundtripResult one_shot_roundtrip(const DpcSystemParams& params, const DpcCodes& codes, const BitVector& message,
                                   std::span<const double> interference, std::uint64_t noise_seed,
                                   BpOptions bp = {});

/// Measures the mean transmit power over `blocks` encoder-only blocks with
/// random messages and Gaussian interference of power params.interference_power.
double measure_tx_power(const DpcSystemParams& params, const DpcCodes& codes, std::size_t blocks,
                        std::uint64_t seed);

/// Binary frame log: a one-line JSON header, then per block
/// u64 T | u32 len + hex m | u32 len + hex z | u32 len + hex parity |
/// u32 count + f64[count] X, all little-endian.
class FrameWriter {
public:
    FrameWriter(std::ostream& out, const std::string& header_json);
    void write(std::int64_t block_index, const BitVector& message, const BitVector& z, const BitVector& parity,
               std::span<const double> x);

private:
    std::ostream* out_;
};

struct FrameRecord {
    std::int64_t block_index = 0;
    std::string message_hex;
    std::string z_hex;
    std::string parity_hex;
    std::vector<double> x;
};

class FrameReader {
public:
    explicit FrameReader(std::istream& in);
    const std::string& header() const { return header_; }
    std::optional<FrameRecord> next();

private:
    std::istream* in_;
    std::string header_;
};

} // namespace dpc
