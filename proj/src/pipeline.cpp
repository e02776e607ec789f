#include "dpc/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dpc {

namespace {

constexpr double kMinNoiseVar = 1e-6;

BitVector random_bits(std::mt19937_64& rng, std::size_t n)
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

} // namespace

std::size_t DpcSystemParams::l() const
{
    if (M < 4 || !std::has_single_bit(static_cast<unsigned>(M))) {
        throw std::invalid_argument("DpcSystemParams: M must be a power of two >= 4");
    }
    return static_cast<std::size_t>(std::countr_zero(static_cast<unsigned>(M)));
}

void DpcSystemParams::validate() const
{
    const std::size_t bits = l();
    if (n == 0 || n % bits != 0) {
        throw std::invalid_argument("DpcSystemParams: n must be a positive multiple of log2(M)");
    }
    if (s() % 2 != 0) {
        throw std::invalid_argument("DpcSystemParams: s = n / log2(M) must be even");
    }
    if (2 * k_prime != s()) {
        throw std::invalid_argument("DpcSystemParams: k' must equal s / 2");
    }
    if (k <= k_prime) {
        throw std::invalid_argument("DpcSystemParams: k must exceed k'");
    }
    if (ldpc_k() >= n) {
        throw std::invalid_argument("DpcSystemParams: k - k' + s must be below n");
    }
    if (!(tx_power > 0.0) || !(noise_power >= 0.0) || !(interference_power >= 0.0)) {
        throw std::invalid_argument("DpcSystemParams: powers out of range");
    }
}

Interleaver::Interleaver(std::size_t size, std::uint64_t seed) : perm_(size)
{
    std::iota(perm_.begin(), perm_.end(), 0U);
    std::mt19937_64 rng(seed);
    // Explicit Fisher-Yates so the permutation does not depend on the
    // standard library's shuffle.
    for (std::size_t i = size; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(perm_[i - 1], perm_[j]);
    }
}

void Interleaver::check(std::size_t n) const
{
    if (n != perm_.size()) {
        throw std::invalid_argument("Interleaver: length mismatch");
    }
}

DpcCodes DpcCodes::build(const DpcSystemParams& params, const Spec& spec)
{
    params.validate();
    ConvCode shaping(spec.g1, spec.g2);
    LdpcCode ldpc;
    bool loaded = false;
    if (!spec.cache_path.empty() && std::filesystem::exists(spec.cache_path)) {
        ldpc = load_code(spec.cache_path);
        if (ldpc.n() != params.n || ldpc.K() != params.ldpc_k()) {
            throw std::runtime_error("DpcCodes: cached LDPC code " + spec.cache_path + " has the wrong size");
        }
        loaded = true;
    }
    if (!loaded) {
        ldpc = LdpcCode::construct(params.n, params.ldpc_k(), spec.var_dist, spec.chk_dist, spec.ldpc_seed);
        if (!spec.cache_path.empty()) {
            save_code(ldpc, spec.cache_path);
        }
    }
    return DpcCodes{std::move(shaping), std::move(ldpc), PamMapping(params.M),
                    Interleaver(params.lower_length(), spec.interleaver_seed)};
}

DpcEncoder::DpcEncoder(const DpcSystemParams& params, const DpcCodes& codes) : params_(params), codes_(&codes)
{
    params_.validate();
    state_.previous_parity = BitVector(params_.parity_length());
}

EncodedBlock DpcEncoder::encode_block(const BitVector& message, std::span<const double> interference,
                                      std::span<const double> dither)
{
    const std::size_t s = params_.s();
    const std::size_t l = params_.l();
    const std::size_t k_low = params_.k - params_.k_prime;
    if (message.size() != params_.k) {
        throw std::invalid_argument("DpcEncoder: message length must be k");
    }
    if (interference.size() != s || (!dither.empty() && dither.size() != s)) {
        throw std::invalid_argument("DpcEncoder: interference and dither need one value per symbol");
    }

    const BitVector shaped_part = message.slice(0, params_.k_prime);
    const BitVector low_part = message.slice(params_.k_prime, k_low);

    const BitVector parts[] = {low_part, state_.previous_parity};
    const BitVector plane_input = BitVector::concat(parts);
    const auto planes = codes_->interleaver.interleave(plane_input.bits());

    EncodedBlock out;
    out.block_index = state_.block_index;
    out.embedded_parity = state_.previous_parity;
    out.lower.assign(s, 0);
    for (std::size_t j = 0; j + 1 < l; ++j) {
        const unsigned shift = static_cast<unsigned>(l - 2 - j);
        for (std::size_t i = 0; i < s; ++i) {
            out.lower[i] |= static_cast<std::uint8_t>(planes[j * s + i] << shift);
        }
    }

    const double alpha = params_.alpha();
    std::vector<double> offset(s);
    for (std::size_t i = 0; i < s; ++i) {
        offset[i] = alpha * interference[i] + (dither.empty() ? 0.0 : dither[i]);
    }

    const auto coset = CosetSpec::from_syndrome(codes_->shaping, shaped_part);
    out.z = shape(coset, out.lower, offset, codes_->mapping);

    out.x.resize(s);
    for (std::size_t i = 0; i < s; ++i) {
        out.x[i] = mod_fold(codes_->mapping.symbol(out.z[i] != 0, out.lower[i]) - offset[i], params_.M);
    }

    const BitVector info_parts[] = {out.z, low_part};
    out.parity = codes_->ldpc.parity(BitVector::concat(info_parts));

    state_.previous_parity = out.parity;
    ++state_.block_index;
    return out;
}

FrontEnd FrontEnd::modulo(const DpcSystemParams& params, const PamMapping& mapping)
{
    FrontEnd fe;
    const double alpha = params.alpha();
    fe.scale = alpha;
    fe.noise_var = std::max(alpha * params.noise_power, kMinNoiseVar);
    fe.fold = true;
    fe.replication = std::max(1, choose_replication(mapping, params.tx_power + params.interference_power));
    return fe;
}

DpcDecoder::DpcDecoder(const DpcSystemParams& params, const DpcCodes& codes, BpOptions bp)
    : DpcDecoder(params, codes, FrontEnd::modulo(params, codes.mapping), bp)
{
}

DpcDecoder::DpcDecoder(const DpcSystemParams& params, const DpcCodes& codes, FrontEnd front_end, BpOptions bp)
    : params_(params),
      codes_(&codes),
      front_end_(std::move(front_end)),
      constellation_(codes.mapping, front_end_.replication),
      bp_(codes.ldpc, bp)
{
    params_.validate();
    if (!(front_end_.noise_var > 0.0)) {
        throw std::invalid_argument("DpcDecoder: demapper noise variance must be positive");
    }
    if (!front_end_.prior.empty() && front_end_.prior.size() != codes.mapping.alphabet().size()) {
        throw std::invalid_argument("DpcDecoder: prior must match the alphabet size");
    }
}

std::vector<double> DpcDecoder::demap(std::span<const double> y, std::span<const double> dither) const
{
    const std::size_t s = params_.s();
    const std::size_t l = params_.l();
    if (y.size() != s || (!dither.empty() && dither.size() != s)) {
        throw std::invalid_argument("DpcDecoder: expected one received value per symbol");
    }
    std::vector<double> llr(s * l);
    for (std::size_t i = 0; i < s; ++i) {
        double yh = front_end_.scale * y[i] + (dither.empty() ? 0.0 : dither[i]);
        if (front_end_.fold) {
            yh = mod_fold(yh, params_.M);
        }
        const std::span<double> out(llr.data() + i * l, l);
        if (front_end_.prior.empty()) {
            demap_llr(constellation_, yh, front_end_.noise_var, out);
        } else {
            demap_llr_with_prior(codes_->mapping, yh, front_end_.noise_var, front_end_.prior, out);
        }
        for (auto& v : out) {
            v = std::clamp(v, -kLlrClamp, kLlrClamp);
        }
    }
    return llr;
}

std::optional<DecodedBlock> DpcDecoder::decode_block(std::span<const double> y, std::span<const double> dither)
{
    const std::size_t s = params_.s();
    const std::size_t l = params_.l();
    const std::size_t k_low = params_.k - params_.k_prime;
    const auto llr = demap(y, dither);

    std::vector<double> sign(s);
    std::vector<double> planes(params_.lower_length());
    for (std::size_t i = 0; i < s; ++i) {
        sign[i] = llr[i * l];
        for (std::size_t j = 1; j < l; ++j) {
            planes[(j - 1) * s + i] = llr[i * l + j];
        }
    }
    const auto lowered = codes_->interleaver.deinterleave(std::span<const double>(planes));

    std::optional<DecodedBlock> result;
    if (received_ > 0) {
        std::vector<double> word;
        word.reserve(params_.n);
        word.insert(word.end(), delayed_sign_.begin(), delayed_sign_.end());
        word.insert(word.end(), delayed_message_.begin(), delayed_message_.end());
        word.insert(word.end(), lowered.begin() + static_cast<std::ptrdiff_t>(k_low), lowered.end());

        auto bp = bp_.decode(word);
        DecodedBlock d;
        d.block_index = received_ - 1;
        d.z = bp.hard_bits.slice(0, s);
        const BitVector parts[] = {syndrome_former(codes_->shaping, d.z), bp.hard_bits.slice(s, k_low)};
        d.message = BitVector::concat(parts);
        d.converged = bp.converged;
        d.iterations = bp.iterations;
        result = std::move(d);
    }

    delayed_sign_ = std::move(sign);
    delayed_message_.assign(lowered.begin(), lowered.begin() + static_cast<std::ptrdiff_t>(k_low));
    ++received_;
    return result;
}

StreamSeeds StreamSeeds::derive(std::uint64_t base, std::uint64_t point, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(point), static_cast<std::uint32_t>(stream)};
    std::uint32_t w[8];
    seq.generate(w, w + 8);
    auto pair = [&](int i) { return (static_cast<std::uint64_t>(w[2 * i]) << 32) | w[2 * i + 1]; };
    return StreamSeeds{pair(0), pair(1), pair(2), pair(3)};
}

StreamStats& StreamStats::operator+=(const StreamStats& o)
{
    blocks_sent += o.blocks_sent;
    blocks_decoded += o.blocks_decoded;
    bits += o.bits;
    bit_errors += o.bit_errors;
    block_errors += o.block_errors;
    tx_energy += o.tx_energy;
    tx_symbols += o.tx_symbols;
    return *this;
}

LinkStream::LinkStream(const DpcSystemParams& params, const DpcCodes& codes, BpOptions bp, StreamSeeds seeds)
    : params_(params),
      codes_(&codes),
      encoder_(params, codes),
      decoder_(params, codes, bp),
      message_rng_(seeds.message),
      interference_(seeds.interference, params.interference_power),
      noise_(seeds.noise, params.noise_power),
      dither_(params.dither ? DitherMode::uniform : DitherMode::off, seeds.dither, params.M)
{
}

void LinkStream::run(std::size_t blocks, StreamStats& stats, FrameWriter* frames)
{
    const std::size_t s = params_.s();
    for (std::size_t b = 0; b < blocks; ++b) {
        BitVector message = random_bits(message_rng_, params_.k);
        std::vector<double> S;
        if (samples_) {
            S.resize(s);
            for (auto& v : S) {
                v = (*samples_)[sample_pos_];
                sample_pos_ = (sample_pos_ + 1) % samples_->size();
            }
        } else {
            S = interference_.draw(s);
        }
        const auto U = dither_.draw(s);
        const auto enc = encoder_.encode_block(message, S, U);
        for (double x : enc.x) {
            stats.tx_energy += x * x;
        }
        stats.tx_symbols += s;
        ++stats.blocks_sent;
        if (frames != nullptr) {
            frames->write(enc.block_index, message, enc.z, enc.embedded_parity, enc.x);
        }

        const auto y = dirty_paper_channel(enc.x, S, noise_);
        const auto dec = decoder_.decode_block(y, U);
        if (dec && pending_) {
            const std::size_t errors = hamming_distance(dec->message, *pending_);
            ++stats.blocks_decoded;
            stats.bits += params_.k;
            stats.bit_errors += errors;
            stats.block_errors += errors > 0 ? 1 : 0;
        }
        pending_ = std::move(message);
    }
}

void LinkStream::set_interference_samples(std::shared_ptr<const std::vector<double>> samples)
{
    if (samples && samples->empty()) {
        throw std::invalid_argument("LinkStream: empty interference sample set");
    }
    samples_ = std::move(samples);
    sample_pos_ = 0;
}

std::vector<double> read_interference_samples(std::istream& in)
{
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        line = line.substr(0, line.find('#'));
        std::istringstream fields(line);
        std::string tok;
        while (fields >> tok) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size() || !std::isfinite(v)) {
                throw std::invalid_argument("interference samples: bad value '" + tok + "'");
            }
            out.push_back(v);
        }
    }
    if (out.empty()) {
        throw std::invalid_argument("interference samples: no values");
    }
    return out;
}

RoundtripResult one_shot_roundtrip(const DpcSystemParams& params, const DpcCodes& codes, const BitVector& message,
                                   std::span<const double> interference, std::uint64_t noise_seed, BpOptions bp)
{
    DpcEncoder enc(params, codes);
    DpcDecoder dec(params, codes, bp);
    GaussianSource noise(noise_seed, params.noise_power);
    const std::vector<double> quiet(params.s(), 0.0);
    const BitVector idle(params.k);

    std::optional<DecodedBlock> got;
    const BitVector* messages[] = {&idle, &message, &idle};
    const std::span<const double> interferences[] = {quiet, interference, quiet};
    for (int t = 0; t < 3; ++t) {
        const auto block = enc.encode_block(*messages[t], interferences[t]);
        const auto y = dirty_paper_channel(block.x, interferences[t], noise);
        auto d = dec.decode_block(y);
        if (t == 2) {
            got = std::move(d);
        }
    }
    RoundtripResult r;
    r.decoded = got->message;
    r.bit_errors = hamming_distance(r.decoded, message);
    return r;
}

double measure_tx_power(const DpcSystemParams& params, const DpcCodes& codes, std::size_t blocks, std::uint64_t seed)
{
    if (blocks == 0) {
        throw std::invalid_argument("measure_tx_power: need at least one block");
    }
    const auto seeds = StreamSeeds::derive(seed, 0xCA1, 0);
    DpcEncoder enc(params, codes);
    std::mt19937_64 rng(seeds.message);
    GaussianSource interference(seeds.interference, params.interference_power);
    DitherSource dither(params.dither ? DitherMode::uniform : DitherMode::off, seeds.dither, params.M);
    double energy = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto S = interference.draw(params.s());
        const auto U = dither.draw(params.s());
        const auto block = enc.encode_block(random_bits(rng, params.k), S, U);
        for (double x : block.x) {
            energy += x * x;
        }
    }
    return energy / static_cast<double>(blocks * params.s());
}

namespace {

template <typename T>
void put_le(std::ostream& out, T v)
{
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(buf, buf + sizeof(T));
    }
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
bool get_le(std::istream& in, T& v)
{
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
        return false;
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(buf, buf + sizeof(T));
    }
    std::memcpy(&v, buf, sizeof(T));
    return true;
}

void put_string(std::ostream& out, const std::string& s)
{
    put_le(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in)
{
    std::uint32_t len = 0;
    if (!get_le(in, len)) {
        throw std::runtime_error("FrameReader: truncated record");
    }
    std::string s(len, '\0');
    if (!in.read(s.data(), len)) {
        throw std::runtime_error("FrameReader: truncated record");
    }
    return s;
}

} // namespace

FrameWriter::FrameWriter(std::ostream& out, const std::string& header_json) : out_(&out)
{
    if (header_json.find('\n') != std::string::npos) {
        throw std::invalid_argument("FrameWriter: header must be a single line");
    }
    *out_ << header_json << '\n';
}

void FrameWriter::write(std::int64_t block_index, const BitVector& message, const BitVector& z,
                        const BitVector& parity, std::span<const double> x)
{
    put_le(*out_, static_cast<std::uint64_t>(block_index));
    put_string(*out_, message.to_hex());
    put_string(*out_, z.to_hex());
    put_string(*out_, parity.to_hex());
    put_le(*out_, static_cast<std::uint32_t>(x.size()));
    for (double v : x) {
        put_le(*out_, v);
    }
}

FrameReader::FrameReader(std::istream& in) : in_(&in)
{
    if (!std::getline(*in_, header_)) {
        throw std::runtime_error("FrameReader: missing header line");
    }
}

std::optional<FrameRecord> FrameReader::next()
{
    std::uint64_t index = 0;
    if (!get_le(*in_, index)) {
        return std::nullopt;
    }
    FrameRecord r;
    r.block_index = static_cast<std::int64_t>(index);
    r.message_hex = get_string(*in_);
    r.z_hex = get_string(*in_);
    r.parity_hex = get_string(*in_);
    std::uint32_t count = 0;
    if (!get_le(*in_, count)) {
        throw std::runtime_error("FrameReader: truncated record");
    }
    r.x.resize(count);
    for (auto& v : r.x) {
        if (!get_le(*in_, v)) {
            throw std::runtime_error("FrameReader: truncated record");
        }
    }
    return r;
}

} // namespace dpc
