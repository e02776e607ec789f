// Monte-Carlo experiment runner, metric reports and CSV/JSON artifacts.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpc/broadcast.hpp"
#include "dpc/pipeline.hpp"

namespace dpc {

enum class Mode { awgn, dpc, broadcast, shaping };

Mode parse_mode(std::string_view text);
std::string_view to_string(Mode mode);

/// One experiment, read from a key = value file ('#' starts a comment).
struct ExperimentConfig {
    Mode mode = Mode::dpc;
    DpcSystemParams params;
    DpcCodes::Spec codes;

    std::uint64_t seed = 1;
    /// SNR points in dB; +inf means a noiseless channel.
    std::vector<double> snr_db;
    std::size_t blocks = 1000; // blocks sent per point, warm-up blocks included
    std::size_t min_errors = 100;
    std::size_t min_block_errors = 0; // also required before a point stops
    std::size_t streams = 1;      // independent Monte-Carlo streams per point
    std::size_t chunk_blocks = 8; // blocks per stream between stopping checks
    double interference_ratio = 5.0; // P_S / P_X in dpc mode
    /// Interference samples read from a file instead of the Gaussian source
    /// (dpc mode); relative paths are taken from the config's directory.
    std::string interference_file;
    std::optional<double> tx_power;  // fixed P_X; measured when absent
    std::size_t calibration_blocks = 20;
    /// Ends a sweep after the first point whose BER is at or below this
    /// value (the tracked user's BER in broadcast mode).
    std::optional<double> stop_ber;
    BpOptions bp;
    bool timing = true;
    std::string frame_dump;

    // broadcast
    double noise1 = 0.9;
    double noise2 = 0.09;
    std::vector<double> user1_snr_db;
    std::vector<double> user2_snr_db;
    PriorMode prior = PriorMode::own;
    std::optional<double> unit_power;
    /// Which receivers must collect min_errors before a point stops:
    /// "both", "user1" or "user2".
    std::string track_user = "both";

    /// Keys that were present in the file, for echoing into artifacts.
    std::map<std::string, std::string> raw;

    static ExperimentConfig parse(std::istream& in);
    static ExperimentConfig load(const std::string& path);
    /// Throws std::invalid_argument with a readable reason.
    void validate() const;
};

/// Parses "19.0, 19.5", "19:0.25:20" (inclusive) or "inf".
std::vector<double> parse_snr_list(std::string_view text);

struct BroadcastPointInfo {
    double user1_ber = 0.0;
    double user2_ber = 0.0;
    double user1_snr_db = 0.0;
    double user2_snr_db = 0.0;
    double beta = 0.0;
    double total_power = 0.0;
    double power1 = 0.0; // measured
    double power2 = 0.0; // measured
    StreamStats user1;
    StreamStats user2;
};

struct BerRecord {
    double snr_db = 0.0;
    std::uint64_t bits = 0;
    std::uint64_t errors = 0;
    double ber = 0.0;
    std::uint64_t block_errors = 0;
    double seconds = 0.0;

    std::uint64_t blocks_sent = 0;
    double tx_power_model = 0.0;    // P_X used for alpha and the noise level
    double tx_power_measured = 0.0; // mean |X|^2 over the point
    double noise_power = 0.0;
    double interference_power = 0.0;
    bool low_confidence = false;
    std::optional<BroadcastPointInfo> broadcast;
};

struct RunOptions {
    std::size_t threads = 1;
    std::ostream* csv = nullptr; // flushed after every point
    std::ostream* log = nullptr; // progress lines
};

/// Same six columns in every mode; per-user broadcast figures go to the
/// sidecar JSON.
std::string csv_header(Mode mode);
std::string csv_row(const BerRecord& r, Mode mode, bool timing);

/// Runs every point of the experiment. Deterministic in (config, seed) and
/// independent of the thread count.
std::vector<BerRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Codes for the experiment, built or loaded from the cache path.
DpcCodes build_codes(const ExperimentConfig& cfg);

/// P_X for a modulo link at the given SNR: iterates alpha and the measured
/// encoder power to a fixed point.
double calibrate_tx_power(DpcSystemParams params, const DpcCodes& codes, double snr_db, double interference_ratio,
                          std::size_t blocks, std::uint64_t seed);

/// Sidecar JSON next to the CSV: config echo plus per-point powers and flags.
std::string sidecar_json(const ExperimentConfig& cfg, const std::vector<BerRecord>& records);

/// First SNR at which the BER curve crosses `target`, log-linear between the
/// bracketing points. Zero-error points count as 0.5 / bits. Empty when the
/// curve never reaches the target.
std::optional<double> waterfall_snr(const std::vector<BerRecord>& records, double target);

/// Points where BER rises with SNR by more than the noise allowed for points
/// with fewer than 10 errors.
std::vector<double> monotonicity_violations(const std::vector<BerRecord>& records);

struct MetricsReport {
    double tx_power = 0.0;
    double rate = 0.0;
    double gain_db = 0.0;
    double normalized_second_moment = 0.0;
    double shaping_loss_db = 0.0;
    double operating_snr_db = 0.0;
    double capacity_snr_db = 0.0;
    double total_gap_db = 0.0;
    double shaping_gap_db = 0.0;
    double coding_gap_db = 0.0;
};

/// The granular gain is referenced to the uniform cube at the message rate,
/// 2^(2R) / 6 for unit-spacing PAM with one shaping bit per two symbols.
MetricsReport report_metrics(double tx_power, double rate_bits, double operating_snr_db);
std::string format_metrics(const MetricsReport& m);

struct BroadcastTuning {
    double user1_snr_db = 0.0;
    double user2_snr_db = 0.0;
    double power1 = 0.0;
    double power2 = 0.0;
    double total_power = 0.0;
    double beta = 0.0;
    std::vector<BerRecord> user2_sweep;
    std::vector<BerRecord> user1_sweep;
};

/// Finds User 2's threshold over `user2_grid` with User 1 far above its own,
/// then User 1's threshold over `user1_grid` with User 2 at its threshold.
std::optional<BroadcastTuning> tune_broadcast(const ExperimentConfig& cfg, const std::vector<double>& user1_grid,
                                              const std::vector<double>& user2_grid, double target,
                                              const RunOptions& opts = {});

/// "beta,r1,r2" rows over `points` betas in [0, 1].
void write_region_csv(std::ostream& out, const BroadcastRegion& region);
/// Reads the CSV back; endpoints come from the beta = 0 and beta = 1 rows.
BroadcastRegion read_region_csv(std::istream& in);

} // namespace dpc
