// Acceptance run: one PASS/FAIL line per criterion. Runs at n = 4000 where a
// criterion allows it; DPC_ACCEPTANCE_FULL=1 switches the long runs to the
// full n = 40000 configuration. Criterion numbers given on the command line
// select a subset.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "dpc/selftest.hpp"
#include "dpc/simulation.hpp"
#include "oracles.hpp"

using namespace dpc;

namespace {

namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig load(const std::string& name)
{
    return ExperimentConfig::load((fs::path(DPC_CONFIG_DIR) / name).string());
}

fs::path out_dir()
{
    const fs::path dir = fs::path(DPC_ACCEPTANCE_OUT);
    fs::create_directories(dir);
    return dir;
}

std::string run_command(const std::string& cmd, int& status)
{
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        status = -1;
        return out;
    }
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) {
        out += buf.data();
    }
    status = pclose(pipe);
    return out;
}

std::vector<BerRecord> run_to_files(const ExperimentConfig& cfg, const fs::path& csv_path)
{
    std::ofstream csv(csv_path);
    RunOptions opts;
    opts.csv = &csv;
    opts.log = &std::cerr;
    const auto records = run_experiment(cfg, opts);
    std::ofstream(csv_path.string() + ".json") << sidecar_json(cfg, records) << '\n';
    return records;
}

BitVector bits_of(std::mt19937_64& rng, std::size_t n)
{
    const auto b = oracle::random_bits(rng, n);
    return BitVector::from_bits(std::vector<std::uint8_t>(b.begin(), b.end()));
}

Outcome criterion1()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream log;
    const bool ok = run_property_suite(log, 1);
    std::cerr << log.str();
    const double t = seconds_since(t0);
    return {ok && t < 300.0, "property suite " + std::string(ok ? "clean" : "has failures") + " in " +
                                 fmt("%.1f", t) + " s"};
}

Outcome criterion2()
{
    const auto t0 = std::chrono::steady_clock::now();
    const PamMapping mapping(16);
    std::mt19937_64 rng(2024);

    // Viterbi against exhaustive coset search, memory-2 code, s = 12.
    const ConvCode code(07, 05);
    int shape_bad = 0;
    std::normal_distribution<double> gauss(0.0, 5.0);
    for (int t = 0; t < 1000; ++t) {
        const auto spec = CosetSpec::from_syndrome(code, bits_of(rng, 6));
        std::vector<std::uint8_t> lower(12);
        std::vector<double> offset(12);
        for (std::size_t i = 0; i < 12; ++i) {
            lower[i] = static_cast<std::uint8_t>(rng() % 8);
            offset[i] = gauss(rng);
        }
        const auto z = shape(spec, lower, offset, mapping);
        const auto sym = [&](int zi, std::size_t i) { return mapping.symbol(zi != 0, lower[i]); };
        const double best = oracle::coset_minimum(07, 05, oracle::Bits(spec.coset_leader.bits().begin(),
                                                                         spec.coset_leader.bits().end()),
                                                  sym, offset, 16);
        const double got = folded_energy(mapping, z, lower, offset);
        if (std::abs(got - best) > 1e-9 * std::max(1.0, best) ||
            syndrome_former(code, z) != syndrome_former(code, spec.coset_leader)) {
            ++shape_bad;
        }
    }

    // Demapper against extended-precision summation.
    double worst = 0.0;
    std::uniform_real_distribution<double> uy(-24.0, 24.0);
    std::uniform_real_distribution<double> uv(0.05, 4.0);
    for (int t = 0; t < 1000; ++t) {
        const ReplicatedConstellation rc(mapping, static_cast<int>(rng() % 3));
        const double y = uy(rng);
        const double var = uv(rng);
        const auto got = demap_llr(rc, y, var);
        const auto want = oracle::demap(rc.points(), rc.labels(), 4, y, var);
        for (int b = 0; b < 4; ++b) {
            worst = std::max(worst, std::abs(got[b] - want[b]) / std::max(1.0, std::abs(want[b])));
        }
    }

    // BP against exhaustive ML on a (12, 8) code.
    const std::vector<std::vector<std::size_t>> cols = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3},
                                                        {0, 1, 3}, {0, 2, 3}, {0}, {1}, {2}, {3}};
    std::vector<Gf2Matrix::Entry> entries;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (auto r : cols[j]) {
            entries.emplace_back(r, j);
        }
    }
    const auto small = LdpcCode::from_parity_check(Gf2Matrix(4, 12, entries));
    std::vector<oracle::Bits> book;
    for (std::uint64_t v = 0; v < 256; ++v) {
        BitVector m(8);
        for (std::size_t j = 0; j < 8; ++j) {
            m.set(j, (v >> j) & 1U);
        }
        const auto c = small.encode_systematic(m);
        book.emplace_back(c.bits().begin(), c.bits().end());
    }
    const double sigma = 0.55;
    std::normal_distribution<double> noise(0.0, sigma);
    BpDecoder dec(small);
    int bp_err = 0;
    int ml_err = 0;
    for (int t = 0; t < 10000; ++t) {
        const auto& c = book[rng() % 256];
        std::vector<double> y(12);
        std::vector<double> llr(12);
        for (std::size_t i = 0; i < 12; ++i) {
            y[i] = (c[i] ? -1.0 : 1.0) + noise(rng);
            llr[i] = 2 * y[i] / (sigma * sigma);
        }
        const auto r = dec.decode(llr);
        bp_err += oracle::Bits(r.hard_bits.bits().begin(), r.hard_bits.bits().end()) != c;
        ml_err += oracle::ml_decode(book, y) != c;
    }
    const double t = seconds_since(t0);
    const bool ok = shape_bad == 0 && worst <= 1e-9 && ml_err > 0 && bp_err <= 2 * ml_err && t < 600.0;
    return {ok, "viterbi mismatches " + std::to_string(shape_bad) + "/1000, demapper max rel err " +
                    fmt("%.2e", worst) + ", BP/ML block errors " + std::to_string(bp_err) + "/" +
                    std::to_string(ml_err) + ", " + fmt("%.1f", t) + " s"};
}

Outcome criterion3()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = load("paper_noiseless.cfg");
    const auto r = run_experiment(cfg);
    const double t = seconds_since(t0);
    const auto& p = r.at(0);
    const bool ok = cfg.params.n == 40000 && p.errors == 0 && p.bits == (cfg.blocks - 1) * cfg.params.k && t < 120.0;
    return {ok, "n=" + std::to_string(cfg.params.n) + ", " + std::to_string(p.blocks_sent) + " blocks, P_S/P_X " +
                    fmt("%g", cfg.interference_ratio) + ": " + std::to_string(p.errors) + " errors in " +
                    std::to_string(p.bits) + " bits, " + fmt("%.1f", t) + " s"};
}

Outcome criterion4()
{
    const std::array<const char*, 3> names = {"desk_interference_0.5.cfg", "desk_interference_5.cfg",
                                              "desk_interference_50.cfg"};
    std::vector<BerRecord> pts;
    for (const auto* name : names) {
        pts.push_back(run_experiment(load(name)).at(0));
    }
    // Errors inside one block are correlated, so the proportions compared
    // are block-error rates; bit-level z is reported alongside.
    bool ok = true;
    std::string detail = "at " + fmt("%.2f", pts[0].snr_db) + " dB:";
    for (std::size_t i = 0; i < 3; ++i) {
        detail += " [" + fmt("%g", pts[i].interference_power / pts[i].tx_power_model) + "P_X ber " +
                  fmt("%.3e", pts[i].ber) + " blocks " + std::to_string(pts[i].block_errors) + "/" +
                  std::to_string(pts[i].blocks_sent - 1) + "]";
        ok = ok && pts[i].errors >= 100;
    }
    double worst_block = 0.0;
    double worst_bit = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = i + 1; j < 3; ++j) {
            const double bi = static_cast<double>(pts[i].blocks_sent - 1);
            const double bj = static_cast<double>(pts[j].blocks_sent - 1);
            const double zb = oracle::two_proportion_z(static_cast<double>(pts[i].block_errors), bi,
                                                       static_cast<double>(pts[j].block_errors), bj);
            const double zs = oracle::two_proportion_z(static_cast<double>(pts[i].errors),
                                                       static_cast<double>(pts[i].bits),
                                                       static_cast<double>(pts[j].errors),
                                                       static_cast<double>(pts[j].bits));
            worst_block = std::max(worst_block, std::abs(zb));
            worst_bit = std::max(worst_bit, std::abs(zs));
        }
    }
    ok = ok && worst_block < 1.96;
    detail += "; max |z| block " + fmt("%.2f", worst_block) + " (bit-level " + fmt("%.2f", worst_bit) + ")";
    return {ok, detail};
}

Outcome criterion5()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = load("paper_shaping.cfg");
    const auto r = run_experiment(cfg).at(0);
    const auto m = report_metrics(r.tx_power_measured, cfg.params.rate(), 0.0);
    const double t = seconds_since(t0);
    const bool ok = cfg.params.n == 40000 && std::abs(m.gain_db - 1.282) <= 0.15 &&
                    std::abs(m.shaping_loss_db - 0.2548) <= 0.05 && t < 1800.0;
    return {ok, "n=" + std::to_string(cfg.params.n) + ", " + std::to_string(cfg.blocks) + " blocks: P_X " +
                    fmt("%.4f", r.tx_power_measured) + ", gain " + fmt("%.4f", m.gain_db) + " dB, loss " +
                    fmt("%.4f", m.shaping_loss_db) + " dB, " + fmt("%.1f", t) + " s"};
}

struct Waterfalls {
    std::optional<double> dpc;
    std::optional<double> awgn;
    fs::path dpc_csv;
};

Waterfalls waterfalls(bool full)
{
    Waterfalls w;
    auto dpc = load(full ? "paper_waterfall_dpc.cfg" : "desk_waterfall_dpc.cfg");
    auto awgn = load(full ? "paper_waterfall_awgn.cfg" : "desk_waterfall_awgn.cfg");
    dpc.stop_ber = 1e-5;
    awgn.stop_ber = 1e-5;
    w.dpc_csv = out_dir() / (full ? "paper_waterfall_dpc.csv" : "desk_waterfall_dpc.csv");
    w.dpc = waterfall_snr(run_to_files(dpc, w.dpc_csv), 1e-5);
    w.awgn = waterfall_snr(run_to_files(awgn, out_dir() / (full ? "paper_waterfall_awgn.csv"
                                                                 : "desk_waterfall_awgn.csv")),
                           1e-5);
    return w;
}

Outcome criterion6(const Waterfalls& w, bool full)
{
    const auto show = [](const std::optional<double>& v) { return v ? fmt("%.3f", *v) + " dB" : "not reached"; };
    std::string detail = std::string(full ? "n=40000" : "n=4000") + ": BER 1e-5 with interference at " +
                         show(w.dpc) + ", without at " + show(w.awgn);
    bool ok = w.dpc && w.awgn;
    if (ok && full) {
        ok = std::abs(*w.dpc - 19.45) <= 0.25 && std::abs(*w.awgn - 19.33) <= 0.25;
    } else if (ok) {
        // Shorter codes may only lose ground, by at most 1 dB.
        ok = *w.dpc >= 19.45 && *w.dpc <= 20.45 && *w.awgn >= 19.33 && *w.awgn <= 20.33;
    }
    return {ok, detail};
}

Outcome criterion7(const Waterfalls& w)
{
    const double cap = awgn_capacity_snr_for_rate(3.0);
    bool ok = std::abs(cap - 17.99) <= 0.01;
    if (!w.dpc) {
        return {false, "no operating point from the waterfall run"};
    }
    int status = 0;
    const std::string cmd = std::string("\"") + DPCSIM_PATH + "\" metrics --run \"" + w.dpc_csv.string() + "\"";
    const std::string out = run_command(cmd, status);
    std::map<std::string, double> v;
    std::istringstream lines(out);
    std::string key;
    double value = 0.0;
    while (lines >> key >> value) {
        v[key] = value;
    }
    const char* need[] = {"operating_snr_db", "capacity_snr_db", "total_gap_db", "shaping_gap_db", "coding_gap_db",
                          "tx_power"};
    for (const auto* k : need) {
        if (!v.count(k)) {
            return {false, "metrics output lacks " + std::string(k) + " (exit " + std::to_string(status) + ")"};
        }
    }
    // Printed values carry four decimals.
    ok = ok && status == 0 && std::abs(v["operating_snr_db"] - *w.dpc) <= 1e-4 &&
         std::abs(v["capacity_snr_db"] - 17.99) <= 0.01 &&
         std::abs(v["total_gap_db"] - (v["operating_snr_db"] - v["capacity_snr_db"])) <= 1.5e-4 &&
         std::abs(v["shaping_gap_db"] + v["coding_gap_db"] - v["total_gap_db"]) <= 1.5e-4;
    // The unrounded split is exact.
    const auto m = report_metrics(v["tx_power"], 3.0, *w.dpc);
    ok = ok && m.shaping_gap_db + m.coding_gap_db == m.total_gap_db &&
         m.total_gap_db == m.operating_snr_db - m.capacity_snr_db;
    return {ok, "capacity " + fmt("%.4f", cap) + " dB; metrics: operating " + fmt("%.4f", v["operating_snr_db"]) +
                    " total gap " + fmt("%.4f", v["total_gap_db"]) + " = shaping " +
                    fmt("%.4f", v["shaping_gap_db"]) + " + coding " + fmt("%.4f", v["coding_gap_db"])};
}

Outcome criterion8(bool full)
{
    auto cfg = load(full ? "paper_broadcast.cfg" : "desk_broadcast.cfg");
    RunOptions opts;
    opts.log = &std::cerr;
    const auto t = tune_broadcast(cfg, cfg.user1_snr_db, cfg.user2_snr_db, 1e-5, opts);
    if (!t) {
        return {false, "a receiver never reached BER 1e-5 on its grid"};
    }

    // Verify the tuned split and measure the powers actually transmitted.
    cfg.user1_snr_db = {t->user1_snr_db};
    cfg.user2_snr_db = {t->user2_snr_db};
    cfg.track_user = "both";
    cfg.stop_ber.reset();
    const auto check = run_experiment(cfg, opts).at(0);
    const auto& b = *check.broadcast;
    const double p_measured = b.power1 + b.power2;

    const fs::path region_csv = out_dir() / (full ? "paper_region.csv" : "desk_region.csv");
    int status = 0;
    const std::string cmd = std::string("\"") + DPCSIM_PATH + "\" region --power " + fmt("%.17g", p_measured) +
                            " --noise1 " + fmt("%.17g", cfg.noise1) + " --noise2 " + fmt("%.17g", cfg.noise2) +
                            " --points 201 --out \"" + region_csv.string() + "\"";
    run_command(cmd, status);
    std::ifstream in(region_csv);
    if (status != 0 || !in) {
        return {false, "region CSV not written (exit " + std::to_string(status) + ")"};
    }
    const auto region = read_region_csv(in);
    const double chord = 3.0 / region.c1 + 3.0 / region.c2;
    bool ok = region.outside_time_sharing(3.0, 3.0);
    if (full) {
        ok = ok && std::abs(t->user1_snr_db - 19.1791) <= 0.3 && std::abs(t->user2_snr_db - 19.4574) <= 0.3;
    }
    return {ok, std::string(full ? "n=40000" : "n=4000") + ": thresholds User 1 " + fmt("%.3f", t->user1_snr_db) +
                    " dB, User 2 " + fmt("%.3f", t->user2_snr_db) + " dB, beta " + fmt("%.4f", t->beta) +
                    "; check run BER " + fmt("%.2e", b.user1_ber) + " / " + fmt("%.2e", b.user2_ber) +
                    ", measured P " + fmt("%.1f", p_measured) + "; 3/C1 + 3/C2 = " + fmt("%.4f", chord)};
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> want;
    for (int i = 1; i < argc; ++i) {
        want.insert(std::atoi(argv[i]));
    }
    const auto selected = [&](int c) { return want.empty() || want.count(c) > 0; };
    const char* env = std::getenv("DPC_ACCEPTANCE_FULL");
    const bool full = env != nullptr && std::string(env) == "1";

    int failures = 0;
    const auto report = [&](int n, const Outcome& o) {
        std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
        failures += o.pass ? 0 : 1;
    };
    const auto guarded = [&](int n, const std::function<Outcome()>& f) {
        if (!selected(n)) {
            return;
        }
        try {
            report(n, f());
        } catch (const std::exception& e) {
            report(n, {false, std::string("error: ") + e.what()});
        }
    };

    guarded(1, criterion1);
    guarded(2, criterion2);
    guarded(3, criterion3);
    guarded(4, criterion4);
    guarded(5, criterion5);
    if (selected(6) || selected(7)) {
        std::optional<Waterfalls> w;
        std::string error;
        try {
            w = waterfalls(full);
        } catch (const std::exception& e) {
            error = e.what();
        }
        guarded(6, [&] { return w ? criterion6(*w, full) : Outcome{false, "error: " + error}; });
        guarded(7, [&] { return w ? criterion7(*w) : Outcome{false, "error: " + error}; });
    }
    guarded(8, [&] { return criterion8(full); });
    return failures == 0 ? 0 : 1;
}
