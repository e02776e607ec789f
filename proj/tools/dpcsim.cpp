// dpcsim: run experiments, post-process them and emit reference curves.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpc/channels.hpp"
#include "dpc/selftest.hpp"
#include "dpc/simulation.hpp"

namespace {

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_path,
                 std::size_t threads)
{
    auto cfg = dpc::ExperimentConfig::load(config_path);
    if (seed) {
        cfg.seed = *seed;
        cfg.raw["seed"] = std::to_string(*seed);
    }
    cfg.validate();

    std::ofstream csv_file;
    std::ostream* csv = &std::cout;
    if (!out_path.empty()) {
        csv_file.open(out_path);
        if (!csv_file) {
            throw std::runtime_error("cannot write " + out_path);
        }
        csv = &csv_file;
    }
    dpc::RunOptions opts;
    opts.threads = threads;
    opts.csv = csv;
    opts.log = &std::cerr;
    const auto records = dpc::run_experiment(cfg, opts);

    if (!out_path.empty()) {
        std::ofstream side(out_path + ".json");
        side << dpc::sidecar_json(cfg, records) << '\n';
    }
    for (double s : dpc::monotonicity_violations(records)) {
        std::cerr << "warning: BER rises at " << s << " dB\n";
    }
    for (const auto& r : records) {
        if (r.low_confidence && cfg.mode != dpc::Mode::shaping) {
            std::cerr << "note: " << r.snr_db << " dB has fewer than " << cfg.min_errors << " errors\n";
        }
    }
    if (cfg.mode == dpc::Mode::shaping && !records.empty()) {
        const auto f = dpc::granular_gain_and_shaping_loss(cfg.params.rate(), records.front().tx_power_measured);
        std::cerr << "tx_power " << records.front().tx_power_measured << "  granular_gain_db " << f.gain_db
                  << "  shaping_loss_db " << f.loss_db << '\n';
    }
    return 0;
}

int cmd_metrics(const std::string& run_path, std::optional<double> tx_power, std::optional<double> snr,
                double target)
{
    double rate = 3.0;
    std::optional<double> power = tx_power;
    std::optional<double> op = snr;
    if (!run_path.empty()) {
        std::ifstream side(run_path + ".json");
        if (!side) {
            throw std::runtime_error("missing sidecar " + run_path + ".json");
        }
        const auto j = nlohmann::json::parse(side);
        rate = j.at("rate").get<double>();
        std::vector<dpc::BerRecord> records;
        double power_sum = 0.0;
        std::size_t power_count = 0;
        for (const auto& p : j.at("points")) {
            dpc::BerRecord r;
            if (p.at("snr_db").is_string()) {
                r.snr_db = std::numeric_limits<double>::infinity();
            } else {
                r.snr_db = p.at("snr_db").get<double>();
            }
            r.bits = p.at("bits").get<std::uint64_t>();
            r.errors = p.at("errors").get<std::uint64_t>();
            r.ber = p.at("ber").get<double>();
            records.push_back(r);
            power_sum += p.at("tx_power_measured").get<double>();
            ++power_count;
        }
        if (!power && power_count > 0) {
            power = power_sum / static_cast<double>(power_count);
        }
        if (!op) {
            op = dpc::waterfall_snr(records, target);
        }
    }
    if (!power) {
        throw std::runtime_error("metrics: no transmit power (give --run or --tx-power)");
    }
    if (!op) {
        throw std::runtime_error("metrics: the run never reaches the target BER (give --snr)");
    }
    std::cout << dpc::format_metrics(dpc::report_metrics(*power, rate, *op));
    return 0;
}

int cmd_region(double total_power, double noise1, double noise2, std::size_t points, const std::string& out_path,
               std::optional<double> r1, std::optional<double> r2)
{
    const auto region = dpc::bc_capacity_region(total_power, noise1, noise2, points);
    if (out_path.empty()) {
        dpc::write_region_csv(std::cout, region);
    } else {
        std::ofstream out(out_path);
        dpc::write_region_csv(out, region);
    }
    if (r1 && r2) {
        std::cerr << "c1 " << region.c1 << "  c2 " << region.c2 << "  (" << *r1 << ", " << *r2 << ") "
                  << (region.outside_time_sharing(*r1, *r2) ? "outside" : "inside") << " time sharing\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Dirty-paper coding link simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    std::size_t threads = 1;
    auto* simulate = app.add_subcommand("simulate", "Run an experiment config and write the BER CSV");
    simulate->add_option("--config", config_path, "Experiment config (key = value)")->required();
    simulate->add_option("--seed", seed, "Override the config seed");
    simulate->add_option("--out", out_path, "CSV path (stdout if omitted); a .json sidecar is written next to it");
    simulate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    std::string run_path;
    std::optional<double> tx_power;
    std::optional<double> snr;
    double target = 1e-5;
    auto* metrics = app.add_subcommand("metrics", "Shaping and gap-to-capacity figures of a finished run");
    metrics->add_option("--run", run_path, "CSV written by simulate (reads its sidecar)");
    metrics->add_option("--tx-power", tx_power, "Measured transmit power");
    metrics->add_option("--snr", snr, "Operating SNR in dB");
    metrics->add_option("--target", target, "Target BER for the operating point");

    double total_power = 739.9;
    double noise1 = 0.9;
    double noise2 = 0.09;
    std::size_t points = 201;
    std::string region_out;
    std::optional<double> r1;
    std::optional<double> r2;
    auto* region = app.add_subcommand("region", "Broadcast capacity region as CSV");
    region->add_option("--power", total_power, "Total transmit power P");
    region->add_option("--noise1", noise1, "Noise power of the weaker receiver");
    region->add_option("--noise2", noise2, "Noise power of the stronger receiver");
    region->add_option("--points", points, "Number of beta grid points");
    region->add_option("--out", region_out, "CSV path (stdout if omitted)");
    region->add_option("--r1", r1, "Rate of User 1 to test against time sharing");
    region->add_option("--r2", r2, "Rate of User 2 to test against time sharing");

    std::uint64_t selftest_seed = 1;
    auto* selftest = app.add_subcommand("selftest", "Run the property suite");
    selftest->add_option("--seed", selftest_seed, "Seed for the randomised properties");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            return cmd_simulate(config_path, seed, out_path, threads);
        }
        if (*metrics) {
            return cmd_metrics(run_path, tx_power, snr, target);
        }
        if (*region) {
            return cmd_region(total_power, noise1, noise2, points, region_out, r1, r2);
        }
        if (*selftest) {
            return dpc::run_property_suite(std::cout, selftest_seed) ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "dpcsim: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
