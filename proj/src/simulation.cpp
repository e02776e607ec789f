#include "dpc/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace dpc {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view key, std::string_view text)
{
    const std::string t = trim(text);
    if (t == "inf" || t == "+inf") {
        return std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
        throw std::invalid_argument("config: '" + std::string(key) + "' expects a number, got '" + t + "'");
    }
    return v;
}

std::uint64_t parse_uint(std::string_view key, std::string_view text)
{
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
        throw std::invalid_argument("config: '" + std::string(key) + "' expects a non-negative integer, got '" + t +
                                    "'");
    }
    return v;
}

bool parse_bool(std::string_view key, std::string_view text)
{
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") {
        return true;
    }
    if (t == "false" || t == "0" || t == "no" || t == "off") {
        return false;
    }
    throw std::invalid_argument("config: '" + std::string(key) + "' expects true/false, got '" + t + "'");
}

std::vector<std::string> split(std::string_view text, char sep)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = text.find(sep, pos);
        out.push_back(trim(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) {
            break;
        }
        pos = next + 1;
    }
    return out;
}

std::string fmt(const char* spec, double v)
{
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

double linear(double db)
{
    return std::pow(10.0, db / 10.0);
}

// Runs `task(i)` for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task)
{
    const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            task(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

// Blocks each stream sends in the next round.
std::vector<std::size_t> round_quota(std::size_t remaining, std::size_t streams, std::size_t chunk)
{
    std::vector<std::size_t> q(streams);
    for (std::size_t i = 0; i < streams; ++i) {
        const std::size_t share = remaining / streams + (i < remaining % streams ? 1 : 0);
        q[i] = std::min(chunk, share);
    }
    return q;
}

double elapsed(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BerRecord run_link_point(const ExperimentConfig& cfg, const DpcCodes& codes, std::size_t point, double snr_db,
                         const RunOptions& opts)
{
    const auto t0 = std::chrono::steady_clock::now();
    const double ratio = cfg.mode == Mode::dpc ? cfg.interference_ratio : 0.0;
    DpcSystemParams params = cfg.params;
    params.tx_power = cfg.tx_power ? *cfg.tx_power
                                   : calibrate_tx_power(params, codes, snr_db, ratio, cfg.calibration_blocks, cfg.seed);
    params.noise_power = std::isinf(snr_db) ? 0.0 : params.tx_power / linear(snr_db);
    params.interference_power = ratio * params.tx_power;
    std::shared_ptr<const std::vector<double>> samples;
    if (cfg.mode == Mode::dpc && !cfg.interference_file.empty()) {
        std::ifstream in(cfg.interference_file);
        if (!in) {
            throw std::runtime_error("cannot open interference file " + cfg.interference_file);
        }
        samples = std::make_shared<const std::vector<double>>(read_interference_samples(in));
        double sq = 0.0;
        for (double v : *samples) {
            sq += v * v;
        }
        params.interference_power = sq / static_cast<double>(samples->size());
    }

    std::vector<std::unique_ptr<LinkStream>> streams;
    for (std::size_t i = 0; i < cfg.streams; ++i) {
        streams.push_back(
            std::make_unique<LinkStream>(params, codes, cfg.bp, StreamSeeds::derive(cfg.seed, point, i)));
        if (samples) {
            streams.back()->set_interference_samples(samples);
        }
    }
    std::unique_ptr<std::ofstream> dump_file;
    std::unique_ptr<FrameWriter> dump;
    if (!cfg.frame_dump.empty() && point == 0) {
        dump_file = std::make_unique<std::ofstream>(cfg.frame_dump, std::ios::binary);
        if (!*dump_file) {
            throw std::runtime_error("cannot open frame dump " + cfg.frame_dump);
        }
        nlohmann::json header = {{"n", params.n},
                                 {"k", params.k},
                                 {"k_prime", params.k_prime},
                                 {"M", params.M},
                                 {"tx_power", params.tx_power},
                                 {"noise_power", params.noise_power},
                                 {"interference_power", params.interference_power},
                                 {"alpha", params.alpha()},
                                 {"dither", params.dither},
                                 {"snr_db", std::isinf(snr_db) ? nlohmann::json("inf") : nlohmann::json(snr_db)},
                                 {"seed", cfg.seed},
                                 {"ldpc_seed", cfg.codes.ldpc_seed},
                                 {"interleaver_seed", cfg.codes.interleaver_seed},
                                 {"parity", "carried in block"}};
        dump = std::make_unique<FrameWriter>(*dump_file, header.dump());
    }

    std::vector<StreamStats> stats(cfg.streams);
    StreamStats total;
    while (total.blocks_sent < cfg.blocks &&
           (total.bit_errors < cfg.min_errors || total.block_errors < cfg.min_block_errors)) {
        const auto quota = round_quota(cfg.blocks - total.blocks_sent, cfg.streams, cfg.chunk_blocks);
        parallel_for(cfg.streams, opts.threads, [&](std::size_t i) {
            if (quota[i] > 0) {
                streams[i]->run(quota[i], stats[i], i == 0 ? dump.get() : nullptr);
            }
        });
        total = StreamStats{};
        for (const auto& s : stats) {
            total += s;
        }
    }

    BerRecord r;
    r.snr_db = snr_db;
    r.bits = total.bits;
    r.errors = total.bit_errors;
    r.ber = total.ber();
    r.block_errors = total.block_errors;
    r.blocks_sent = total.blocks_sent;
    r.tx_power_model = params.tx_power;
    r.tx_power_measured = total.tx_power();
    r.noise_power = params.noise_power;
    r.interference_power = params.interference_power;
    r.low_confidence = r.errors < cfg.min_errors;
    r.seconds = cfg.timing ? elapsed(t0) : 0.0;
    return r;
}

double measure_unit_power(const ExperimentConfig& cfg, const DpcCodes& codes)
{
    DpcSystemParams p = cfg.params;
    p.tx_power = 1.0;
    p.noise_power = 0.0;
    p.interference_power = 0.0;
    p.dither = false;
    return measure_tx_power(p, codes, cfg.calibration_blocks, cfg.seed);
}

BerRecord run_broadcast_point(const ExperimentConfig& cfg, const DpcCodes& codes, std::size_t point,
                              double unit_power, const RunOptions& opts)
{
    const auto t0 = std::chrono::steady_clock::now();
    BcConfig bc = BcConfig::from_snrs(cfg.params, cfg.noise1, cfg.noise2, cfg.user1_snr_db[point],
                                      cfg.user2_snr_db[point]);
    bc.unit_power1 = unit_power;
    bc.unit_power2 = unit_power;
    bc.prior = cfg.prior;
    bc.validate();

    std::vector<std::unique_ptr<BroadcastLink>> links;
    for (std::size_t i = 0; i < cfg.streams; ++i) {
        links.push_back(std::make_unique<BroadcastLink>(bc, codes, cfg.bp, StreamSeeds::derive(cfg.seed, point, i)));
    }
    std::vector<BcStats> stats(cfg.streams);
    BcStats total;
    auto done = [&] {
        const bool u1 =
            total.user1.bit_errors >= cfg.min_errors && total.user1.block_errors >= cfg.min_block_errors;
        const bool u2 =
            total.user2.bit_errors >= cfg.min_errors && total.user2.block_errors >= cfg.min_block_errors;
        if (cfg.track_user == "user1") {
            return u1;
        }
        if (cfg.track_user == "user2") {
            return u2;
        }
        return u1 && u2;
    };
    while (total.user1.blocks_sent < cfg.blocks && !done()) {
        const auto quota = round_quota(cfg.blocks - total.user1.blocks_sent, cfg.streams, cfg.chunk_blocks);
        parallel_for(cfg.streams, opts.threads, [&](std::size_t i) {
            if (quota[i] > 0) {
                links[i]->run(quota[i], stats[i]);
            }
        });
        total = BcStats{};
        for (const auto& s : stats) {
            total += s;
        }
    }

    BerRecord r;
    r.snr_db = 10.0 * std::log10(bc.total_power / bc.noise1);
    r.bits = total.user1.bits + total.user2.bits;
    r.errors = total.user1.bit_errors + total.user2.bit_errors;
    r.ber = r.bits ? static_cast<double>(r.errors) / static_cast<double>(r.bits) : 0.0;
    r.block_errors = total.user1.block_errors + total.user2.block_errors;
    r.blocks_sent = total.user1.blocks_sent;
    r.tx_power_model = bc.total_power;
    r.tx_power_measured = total.power();
    r.noise_power = bc.noise1;
    r.low_confidence = !done();
    BroadcastPointInfo info;
    info.user1_ber = total.user1.ber();
    info.user2_ber = total.user2.ber();
    info.user1_snr_db = bc.snr1_db();
    info.user2_snr_db = bc.snr2_db();
    info.beta = bc.beta;
    info.total_power = bc.total_power;
    info.power1 = total.power1();
    info.power2 = total.power2();
    info.user1 = total.user1;
    info.user2 = total.user2;
    r.broadcast = info;
    r.seconds = cfg.timing ? elapsed(t0) : 0.0;
    return r;
}

BerRecord run_shaping_point(const ExperimentConfig& cfg, const DpcCodes& codes)
{
    const auto t0 = std::chrono::steady_clock::now();
    DpcSystemParams p = cfg.params;
    p.tx_power = cfg.tx_power.value_or(1.0);
    p.noise_power = 0.0;
    p.interference_power = cfg.interference_ratio * p.tx_power;
    BerRecord r;
    r.snr_db = std::numeric_limits<double>::infinity();
    r.blocks_sent = cfg.blocks;
    r.tx_power_model = p.tx_power;
    r.tx_power_measured = measure_tx_power(p, codes, cfg.blocks, cfg.seed);
    r.interference_power = p.interference_power;
    r.seconds = cfg.timing ? elapsed(t0) : 0.0;
    return r;
}

BerRecord user_record(const BerRecord& r, int user)
{
    BerRecord u = r;
    const StreamStats& s = user == 1 ? r.broadcast->user1 : r.broadcast->user2;
    u.snr_db = user == 1 ? r.broadcast->user1_snr_db : r.broadcast->user2_snr_db;
    u.bits = s.bits;
    u.errors = s.bit_errors;
    u.ber = s.ber();
    u.block_errors = s.block_errors;
    return u;
}

} // namespace

Mode parse_mode(std::string_view text)
{
    if (text == "awgn") {
        return Mode::awgn;
    }
    if (text == "dpc") {
        return Mode::dpc;
    }
    if (text == "broadcast") {
        return Mode::broadcast;
    }
    if (text == "shaping") {
        return Mode::shaping;
    }
    throw std::invalid_argument("config: unknown mode '" + std::string(text) + "' (awgn, dpc, broadcast, shaping)");
}

std::string_view to_string(Mode mode)
{
    switch (mode) {
    case Mode::awgn:
        return "awgn";
    case Mode::dpc:
        return "dpc";
    case Mode::broadcast:
        return "broadcast";
    case Mode::shaping:
        return "shaping";
    }
    return "dpc";
}

std::vector<double> parse_snr_list(std::string_view text)
{
    std::vector<double> out;
    for (const auto& item : split(text, ',')) {
        if (item.empty()) {
            continue;
        }
        const auto parts = split(item, ':');
        if (parts.size() == 1) {
            out.push_back(parse_double("snr", parts[0]));
        } else if (parts.size() == 3) {
            const double a = parse_double("snr", parts[0]);
            const double step = parse_double("snr", parts[1]);
            const double b = parse_double("snr", parts[2]);
            if (!(step > 0.0) || !(b >= a) || !std::isfinite(a) || !std::isfinite(b)) {
                throw std::invalid_argument("config: bad SNR range '" + item + "'");
            }
            const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
            for (std::size_t i = 0; i < count; ++i) {
                out.push_back(a + static_cast<double>(i) * step);
            }
        } else {
            throw std::invalid_argument("config: bad SNR item '" + item + "'");
        }
    }
    return out;
}

ExperimentConfig ExperimentConfig::parse(std::istream& in)
{
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        cfg.raw[key] = value;

        if (key == "mode") {
            cfg.mode = parse_mode(value);
        } else if (key == "n") {
            cfg.params.n = parse_uint(key, value);
        } else if (key == "k") {
            cfg.params.k = parse_uint(key, value);
        } else if (key == "k_prime") {
            cfg.params.k_prime = parse_uint(key, value);
        } else if (key == "M") {
            cfg.params.M = static_cast<int>(parse_uint(key, value));
        } else if (key == "generators") {
            const auto g = split(value, ',');
            if (g.size() != 2) {
                throw std::invalid_argument("config: 'generators' expects two octal polynomials");
            }
            cfg.codes.g1 = parse_generator(g[0]);
            cfg.codes.g2 = parse_generator(g[1]);
        } else if (key == "var_degrees") {
            cfg.codes.var_dist = DegreeDistribution::parse(value);
        } else if (key == "check_degrees") {
            cfg.codes.chk_dist = DegreeDistribution::parse(value);
        } else if (key == "ldpc_seed") {
            cfg.codes.ldpc_seed = parse_uint(key, value);
        } else if (key == "interleaver_seed") {
            cfg.codes.interleaver_seed = parse_uint(key, value);
        } else if (key == "code_cache") {
            cfg.codes.cache_path = value;
        } else if (key == "seed") {
            cfg.seed = parse_uint(key, value);
        } else if (key == "snr_db") {
            cfg.snr_db = parse_snr_list(value);
        } else if (key == "blocks") {
            cfg.blocks = parse_uint(key, value);
        } else if (key == "min_block_errors") {
            cfg.min_block_errors = parse_uint(key, value);
        } else if (key == "min_errors") {
            cfg.min_errors = parse_uint(key, value);
        } else if (key == "streams") {
            cfg.streams = parse_uint(key, value);
        } else if (key == "chunk_blocks") {
            cfg.chunk_blocks = parse_uint(key, value);
        } else if (key == "interference_ratio") {
            cfg.interference_ratio = parse_double(key, value);
        } else if (key == "interference_file") {
            cfg.interference_file = value;
        } else if (key == "tx_power") {
            if (value == "auto") {
                cfg.tx_power.reset();
            } else {
                cfg.tx_power = parse_double(key, value);
            }
        } else if (key == "stop_ber") {
            if (value == "none") {
                cfg.stop_ber.reset();
            } else {
                cfg.stop_ber = parse_double(key, value);
            }
        } else if (key == "calibration_blocks") {
            cfg.calibration_blocks = parse_uint(key, value);
        } else if (key == "bp") {
            if (value == "sum_product") {
                cfg.bp.variant = BpVariant::sum_product;
            } else if (value == "min_sum") {
                cfg.bp.variant = BpVariant::min_sum;
            } else {
                throw std::invalid_argument("config: 'bp' expects sum_product or min_sum");
            }
        } else if (key == "max_iter") {
            cfg.bp.max_iter = static_cast<int>(parse_uint(key, value));
        } else if (key == "min_sum_scale") {
            cfg.bp.min_sum_scale = parse_double(key, value);
        } else if (key == "timing") {
            cfg.timing = parse_bool(key, value);
        } else if (key == "dither") {
            cfg.params.dither = parse_bool(key, value);
        } else if (key == "frame_dump") {
            cfg.frame_dump = value;
        } else if (key == "noise1") {
            cfg.noise1 = parse_double(key, value);
        } else if (key == "noise2") {
            cfg.noise2 = parse_double(key, value);
        } else if (key == "user1_snr_db") {
            cfg.user1_snr_db = parse_snr_list(value);
        } else if (key == "user2_snr_db") {
            cfg.user2_snr_db = parse_snr_list(value);
        } else if (key == "prior") {
            cfg.prior = parse_prior_mode(value);
        } else if (key == "unit_power") {
            if (value == "auto") {
                cfg.unit_power.reset();
            } else {
                cfg.unit_power = parse_double(key, value);
            }
        } else if (key == "track_user") {
            cfg.track_user = value;
        } else {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config " + path);
    }
    try {
        auto cfg = parse(in);
        if (!cfg.interference_file.empty() && std::filesystem::path(cfg.interference_file).is_relative()) {
            cfg.interference_file =
                (std::filesystem::path(path).parent_path() / cfg.interference_file).lexically_normal().string();
        }
        return cfg;
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

void ExperimentConfig::validate() const
{
    DpcSystemParams p = params;
    p.tx_power = 1.0;
    p.noise_power = 0.0;
    p.interference_power = 0.0;
    p.validate();
    ConvCode(codes.g1, codes.g2);
    codes.var_dist.validate();
    codes.chk_dist.validate();
    if (blocks == 0 || streams == 0 || chunk_blocks == 0 || min_errors == 0) {
        throw std::invalid_argument("config: blocks, streams, chunk_blocks and min_errors must be positive");
    }
    if (bp.max_iter <= 0) {
        throw std::invalid_argument("config: max_iter must be positive");
    }
    if (tx_power && !(*tx_power > 0.0)) {
        throw std::invalid_argument("config: tx_power must be positive");
    }
    if (!(interference_ratio >= 0.0)) {
        throw std::invalid_argument("config: interference_ratio must be non-negative");
    }
    if (stop_ber && !(*stop_ber > 0.0 && *stop_ber < 1.0)) {
        throw std::invalid_argument("config: stop_ber must lie in (0, 1)");
    }
    if (!tx_power && calibration_blocks == 0 && mode != Mode::shaping) {
        throw std::invalid_argument("config: calibration_blocks must be positive when tx_power is auto");
    }
    switch (mode) {
    case Mode::awgn:
    case Mode::dpc:
        if (snr_db.empty()) {
            throw std::invalid_argument("config: snr_db is required");
        }
        for (double s : snr_db) {
            if (std::isnan(s) || s == -std::numeric_limits<double>::infinity()) {
                throw std::invalid_argument("config: SNR values must be finite or +inf");
            }
        }
        break;
    case Mode::broadcast:
        if (user1_snr_db.empty() || user1_snr_db.size() != user2_snr_db.size()) {
            throw std::invalid_argument("config: user1_snr_db and user2_snr_db need the same, non-zero length");
        }
        if (!(noise1 > noise2) || !(noise2 > 0.0)) {
            throw std::invalid_argument("config: broadcast needs noise1 > noise2 > 0");
        }
        if (track_user != "both" && track_user != "user1" && track_user != "user2") {
            throw std::invalid_argument("config: track_user must be both, user1 or user2");
        }
        if (unit_power && !(*unit_power > 0.0)) {
            throw std::invalid_argument("config: unit_power must be positive");
        }
        break;
    case Mode::shaping:
        break;
    }
}

std::string csv_header(Mode)
{
    return "snr_db,bits,errors,ber,block_errors,seconds";
}

std::string csv_row(const BerRecord& r, Mode, bool timing)
{
    return fmt("%.4f", r.snr_db) + "," + std::to_string(r.bits) + "," + std::to_string(r.errors) + "," +
           fmt("%.6e", r.ber) + "," + std::to_string(r.block_errors) + "," + fmt("%.3f", timing ? r.seconds : 0.0);
}

DpcCodes build_codes(const ExperimentConfig& cfg)
{
    DpcSystemParams p = cfg.params;
    p.tx_power = 1.0;
    p.noise_power = 0.0;
    p.interference_power = 0.0;
    return DpcCodes::build(p, cfg.codes);
}

double calibrate_tx_power(DpcSystemParams params, const DpcCodes& codes, double snr_db, double interference_ratio,
                          std::size_t blocks, std::uint64_t seed)
{
    // Start from the uniform cube at the message rate scaled by the typical
    // shaping gain.
    double p = std::exp2(2.0 * params.rate()) / 6.0 / 1.33;
    for (int it = 0; it < 6; ++it) {
        params.tx_power = p;
        params.noise_power = std::isinf(snr_db) ? 0.0 : p / linear(snr_db);
        params.interference_power = interference_ratio * p;
        const double measured = measure_tx_power(params, codes, blocks, seed);
        const bool settled = std::abs(measured - p) < 1e-3 * p;
        p = measured;
        if (settled) {
            break;
        }
    }
    return p;
}

std::vector<BerRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts)
{
    cfg.validate();
    const DpcCodes codes = build_codes(cfg);
    if (opts.csv != nullptr) {
        *opts.csv << csv_header(cfg.mode) << '\n' << std::flush;
    }
    std::vector<BerRecord> records;
    auto emit = [&](const BerRecord& r) {
        records.push_back(r);
        if (opts.csv != nullptr) {
            *opts.csv << csv_row(r, cfg.mode, cfg.timing) << '\n' << std::flush;
        }
        if (opts.log != nullptr) {
            *opts.log << "snr " << fmt("%.3f", r.snr_db) << " dB: " << r.errors << " errors / " << r.bits
                      << " bits, ber " << fmt("%.3e", r.ber) << ", P_X " << fmt("%.4f", r.tx_power_measured)
                      << (r.low_confidence && cfg.mode != Mode::shaping ? " (low confidence)" : "") << '\n'
                      << std::flush;
        }
    };

    switch (cfg.mode) {
    case Mode::shaping:
        emit(run_shaping_point(cfg, codes));
        break;
    case Mode::awgn:
    case Mode::dpc:
        for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
            emit(run_link_point(cfg, codes, i, cfg.snr_db[i], opts));
            if (cfg.stop_ber && records.back().bits > 0 && records.back().ber <= *cfg.stop_ber) {
                break;
            }
        }
        break;
    case Mode::broadcast: {
        const double unit = cfg.unit_power ? *cfg.unit_power : measure_unit_power(cfg, codes);
        for (std::size_t i = 0; i < cfg.user1_snr_db.size(); ++i) {
            emit(run_broadcast_point(cfg, codes, i, unit, opts));
            if (cfg.stop_ber) {
                const auto& b = *records.back().broadcast;
                const double ber = cfg.track_user == "user1"   ? b.user1_ber
                                   : cfg.track_user == "user2" ? b.user2_ber
                                                               : std::max(b.user1_ber, b.user2_ber);
                if (ber <= *cfg.stop_ber) {
                    break;
                }
            }
        }
        break;
    }
    }
    return records;
}

std::string sidecar_json(const ExperimentConfig& cfg, const std::vector<BerRecord>& records)
{
    using nlohmann::json;
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf"); };
    json j;
    j["mode"] = std::string(to_string(cfg.mode));
    j["config"] = cfg.raw;
    j["seed"] = cfg.seed;
    j["rate"] = cfg.params.rate();
    j["c_star"] = cfg.params.c_star();
    json points = json::array();
    for (const auto& r : records) {
        json p = {{"snr_db", num(r.snr_db)},
                  {"bits", r.bits},
                  {"errors", r.errors},
                  {"ber", r.ber},
                  {"block_errors", r.block_errors},
                  {"blocks_sent", r.blocks_sent},
                  {"tx_power_model", r.tx_power_model},
                  {"tx_power_measured", r.tx_power_measured},
                  {"noise_power", r.noise_power},
                  {"interference_power", r.interference_power},
                  {"low_confidence", r.low_confidence}};
        if (r.broadcast) {
            const auto& b = *r.broadcast;
            p["broadcast"] = {{"beta", b.beta},
                              {"total_power", b.total_power},
                              {"user1_snr_db", b.user1_snr_db},
                              {"user2_snr_db", b.user2_snr_db},
                              {"user1_ber", b.user1_ber},
                              {"user2_ber", b.user2_ber},
                              {"user1_power_measured", b.power1},
                              {"user2_power_measured", b.power2},
                              {"user1_errors", b.user1.bit_errors},
                              {"user2_errors", b.user2.bit_errors}};
        }
        points.push_back(p);
    }
    j["points"] = points;
    if (cfg.mode == Mode::awgn || cfg.mode == Mode::dpc) {
        json v = json::array();
        for (double s : monotonicity_violations(records)) {
            v.push_back(num(s));
        }
        j["monotonicity_violations"] = v;
    }
    return j.dump(2);
}

std::optional<double> waterfall_snr(const std::vector<BerRecord>& records, double target)
{
    std::vector<std::pair<double, double>> curve;
    for (const auto& r : records) {
        if (r.bits == 0 || !std::isfinite(r.snr_db)) {
            continue;
        }
        const double ber = r.errors > 0 ? r.ber : 0.5 / static_cast<double>(r.bits);
        curve.emplace_back(r.snr_db, ber);
    }
    std::sort(curve.begin(), curve.end());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].second > target) {
            continue;
        }
        if (i == 0) {
            return curve[0].first;
        }
        const auto [s0, b0] = curve[i - 1];
        const auto [s1, b1] = curve[i];
        const double t = (std::log10(b0) - std::log10(target)) / (std::log10(b0) - std::log10(b1));
        return s0 + t * (s1 - s0);
    }
    return std::nullopt;
}

std::vector<double> monotonicity_violations(const std::vector<BerRecord>& records)
{
    std::vector<const BerRecord*> sorted;
    for (const auto& r : records) {
        sorted.push_back(&r);
    }
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->snr_db < b->snr_db; });
    std::vector<double> out;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const auto& lo = *sorted[i - 1];
        const auto& hi = *sorted[i];
        if (hi.ber > lo.ber && lo.errors >= 10 && hi.errors >= 10) {
            out.push_back(hi.snr_db);
        }
    }
    return out;
}

MetricsReport report_metrics(double tx_power, double rate_bits, double operating_snr_db)
{
    MetricsReport m;
    const auto f = granular_gain_and_shaping_loss(rate_bits, tx_power);
    m.tx_power = tx_power;
    m.rate = rate_bits;
    m.gain_db = f.gain_db;
    m.normalized_second_moment = f.normalized_second_moment;
    m.shaping_loss_db = f.loss_db;
    m.operating_snr_db = operating_snr_db;
    m.capacity_snr_db = awgn_capacity_snr_for_rate(rate_bits);
    m.total_gap_db = operating_snr_db - m.capacity_snr_db;
    m.shaping_gap_db = f.loss_db;
    m.coding_gap_db = m.total_gap_db - m.shaping_gap_db;
    return m;
}

std::string format_metrics(const MetricsReport& m)
{
    std::ostringstream out;
    out << "tx_power             " << fmt("%.4f", m.tx_power) << '\n'
        << "rate_bits            " << fmt("%.4f", m.rate) << '\n'
        << "granular_gain_db     " << fmt("%.4f", m.gain_db) << '\n'
        << "second_moment        " << fmt("%.6f", m.normalized_second_moment) << '\n'
        << "shaping_loss_db      " << fmt("%.4f", m.shaping_loss_db) << '\n'
        << "operating_snr_db     " << fmt("%.4f", m.operating_snr_db) << '\n'
        << "capacity_snr_db      " << fmt("%.4f", m.capacity_snr_db) << '\n'
        << "total_gap_db         " << fmt("%.4f", m.total_gap_db) << '\n'
        << "shaping_gap_db       " << fmt("%.4f", m.shaping_gap_db) << '\n'
        << "coding_gap_db        " << fmt("%.4f", m.coding_gap_db) << '\n';
    return out.str();
}

std::optional<BroadcastTuning> tune_broadcast(const ExperimentConfig& cfg, const std::vector<double>& user1_grid,
                                              const std::vector<double>& user2_grid, double target,
                                              const RunOptions& opts)
{
    if (user1_grid.empty() || user2_grid.empty()) {
        throw std::invalid_argument("tune_broadcast: empty SNR grid");
    }
    ExperimentConfig c = cfg;
    c.mode = Mode::broadcast;
    c.stop_ber = target;
    const DpcCodes codes = build_codes(c);
    const double unit = c.unit_power ? *c.unit_power : measure_unit_power(c, codes);
    c.unit_power = unit;

    BroadcastTuning t;
    const double user1_high = *std::max_element(user1_grid.begin(), user1_grid.end()) + 3.0;
    c.user2_snr_db = user2_grid;
    c.user1_snr_db.assign(user2_grid.size(), user1_high);
    c.track_user = "user2";
    RunOptions quiet = opts;
    quiet.csv = nullptr;
    for (const auto& r : run_experiment(c, quiet)) {
        t.user2_sweep.push_back(user_record(r, 2));
    }
    const auto snr2 = waterfall_snr(t.user2_sweep, target);
    if (!snr2) {
        return std::nullopt;
    }

    c.user1_snr_db = user1_grid;
    c.user2_snr_db.assign(user1_grid.size(), *snr2);
    c.track_user = "user1";
    for (const auto& r : run_experiment(c, quiet)) {
        t.user1_sweep.push_back(user_record(r, 1));
    }
    const auto snr1 = waterfall_snr(t.user1_sweep, target);
    if (!snr1) {
        return std::nullopt;
    }

    const BcConfig bc = BcConfig::from_snrs(c.params, c.noise1, c.noise2, *snr1, *snr2);
    t.user1_snr_db = *snr1;
    t.user2_snr_db = *snr2;
    t.power1 = bc.power1();
    t.power2 = bc.power2();
    t.total_power = bc.total_power;
    t.beta = bc.beta;
    return t;
}

void write_region_csv(std::ostream& out, const BroadcastRegion& region)
{
    out << "beta,r1,r2\n";
    for (const auto& p : region.boundary) {
        out << fmt("%.10g", p.beta) << ',' << fmt("%.17g", p.r1) << ',' << fmt("%.17g", p.r2) << '\n';
    }
}

BroadcastRegion read_region_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || trim(line) != "beta,r1,r2") {
        throw std::runtime_error("read_region_csv: missing header");
    }
    BroadcastRegion region;
    bool have_c1 = false;
    bool have_c2 = false;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 3) {
            throw std::runtime_error("read_region_csv: bad row '" + line + "'");
        }
        const RatePair p{parse_double("beta", f[0]), parse_double("r1", f[1]), parse_double("r2", f[2])};
        if (p.beta == 0.0) {
            region.c1 = p.r1;
            have_c1 = true;
        }
        if (p.beta == 1.0) {
            region.c2 = p.r2;
            have_c2 = true;
        }
        region.boundary.push_back(p);
    }
    if (!have_c1 || !have_c2) {
        throw std::runtime_error("read_region_csv: need rows for beta = 0 and beta = 1");
    }
    return region;
}

} // namespace dpc
