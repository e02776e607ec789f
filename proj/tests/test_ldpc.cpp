#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "dpc/ldpc.hpp"
#include "oracles.hpp"

using namespace dpc;

namespace {

BitVector random_bv(std::mt19937_64& rng, std::size_t n)
{
    const auto b = oracle::random_bits(rng, n);
    return BitVector::from_bits(std::vector<std::uint8_t>(b.begin(), b.end()));
}

oracle::Dense dense_of(const Gf2Matrix& m)
{
    const auto d = m.to_dense();
    oracle::Dense out(m.rows(), oracle::Bits(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out[i][j] = d.get(i, j) ? 1 : 0;
        }
    }
    return out;
}

// A (12, 8) code: six weight-2 columns on distinct row pairs, two weight-3
// columns and an identity parity part.
LdpcCode small_code()
{
    const std::vector<std::vector<std::size_t>> cols = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3},
                                                        {0, 1, 3}, {0, 2, 3}, {0}, {1}, {2}, {3}};
    std::vector<Gf2Matrix::Entry> entries;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (auto r : cols[j]) {
            entries.emplace_back(r, j);
        }
    }
    return LdpcCode::from_parity_check(Gf2Matrix(4, 12, entries));
}

} // namespace

TEST_CASE("degree distribution parsing and arithmetic")
{
    const auto v = DegreeDistribution::parse("0.1256x+0.7140x^2+0.1604x^9");
    CHECK(v.terms.size() == 3);
    CHECK(v.mean_degree() == doctest::Approx(3.9972));
    const double edges = 40000 * v.mean_degree();
    CHECK(std::round(edges) == 159888);
    CHECK(std::ceil(std::round(edges) / 32.0) == 4997);
    CHECK(std::abs(edges / 32.0 - 5000.0) < 5.0);
    CHECK(DegreeDistribution::parse("x^31").mean_degree() == 32.0);
    CHECK(DegreeDistribution::parse(v.to_string()).mean_degree() == doctest::Approx(v.mean_degree()));
    CHECK_THROWS(DegreeDistribution::parse("0.5x+0.4x^2").validate());
    CHECK_THROWS(DegreeDistribution::parse("1").validate());

    const auto counts = node_counts(v, 40000);
    std::size_t total = 0;
    for (const auto& [d, c] : counts) {
        total += c;
    }
    CHECK(total == 40000);
    CHECK(counts[0].second == 5024);
}

TEST_CASE("construct: tiny regular code")
{
    const auto code = LdpcCode::construct(8, 4, DegreeDistribution::parse("x"), DegreeDistribution::parse("x^3"), 3);
    CHECK(code.H().rows() == 4);
    CHECK(code.H().cols() == 8);
    CHECK(code.K() == 4);
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(code.H().row(r).size() == 4);
    }
}

TEST_CASE("construct is deterministic in the seed")
{
    const auto v = DegreeDistribution::parse("0.1256x+0.7140x^2+0.1604x^9");
    const auto c = DegreeDistribution::parse("x^31");
    const auto a = LdpcCode::construct(4000, 3500, v, c, 7);
    const auto b = LdpcCode::construct(4000, 3500, v, c, 7);
    CHECK(a.H() == b.H());
    CHECK(a.column_permutation() == b.column_permutation());
    const auto other = LdpcCode::construct(4000, 3500, v, c, 8);
    CHECK(!(other.H() == a.H()));
}

TEST_CASE("construct: desk-scale paper profile")
{
    const auto v = DegreeDistribution::parse("0.1256x+0.7140x^2+0.1604x^9");
    const auto code = LdpcCode::construct(4000, 3500, v, DegreeDistribution::parse("x^31"), 1);
    CHECK(code.parity_length() == 500);
    CHECK(row_reduce(code.H()).rank == 500);

    // Variable degree audit against the integer node counts.
    std::map<std::size_t, std::size_t> hist;
    std::vector<std::size_t> weight(4000, 0);
    for (std::size_t r = 0; r < code.H().rows(); ++r) {
        for (auto c : code.H().row(r)) {
            ++weight[c];
        }
    }
    for (auto w : weight) {
        ++hist[w];
    }
    for (const auto& [d, c] : node_counts(v, 4000)) {
        CHECK(hist[static_cast<std::size_t>(d)] == doctest::Approx(static_cast<double>(c)).epsilon(0.01));
    }

    std::mt19937_64 rng(30);
    CHECK(code.encode_systematic(BitVector(3500)).count() == 0);
    for (int t = 0; t < 1000; ++t) {
        const auto msg = random_bv(rng, 3500);
        const auto c = code.encode_systematic(msg);
        CHECK(c.slice(0, 3500) == msg);
        CHECK(code.is_codeword(c));
    }
}

TEST_CASE("systematic parity matches an independent dense solve")
{
    const auto code = small_code();
    CHECK(code.K() == 8);
    const auto h = dense_of(code.H());
    std::mt19937_64 rng(31);
    for (int t = 0; t < 256; ++t) {
        const auto msg = random_bv(rng, 8);
        // Unknowns are the four parity bits; the message moves to the right side.
        oracle::Dense a(4, oracle::Bits(4));
        oracle::Bits rhs(4, 0);
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t j = 0; j < 8; ++j) {
                rhs[r] ^= h[r][j] & static_cast<int>(msg[j]);
            }
            for (std::size_t j = 0; j < 4; ++j) {
                a[r][j] = h[r][8 + j];
            }
        }
        const auto sols = oracle::solve_all(a, rhs);
        REQUIRE(sols.size() == 1);
        const auto p = code.parity(msg);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(static_cast<int>(p[j]) == sols[0][j]);
        }
    }
}

TEST_CASE("save and load round trip")
{
    const auto code = LdpcCode::construct(400, 350, DegreeDistribution::parse("0.1256x+0.7140x^2+0.1604x^9"),
                                          DegreeDistribution::parse("x^31"), 5);
    const auto dir = std::filesystem::temp_directory_path() / "dpc_ldpc_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "code.alist").string();
    save_code(code, path);
    const auto back = load_code(path);
    CHECK(back.H() == code.H());
    std::mt19937_64 rng(32);
    const auto msg = random_bv(rng, 350);
    CHECK(back.encode_systematic(msg) == code.encode_systematic(msg));
    std::filesystem::remove_all(dir);
}

TEST_CASE("boxplus")
{
    CHECK(boxplus(0.0, 5.0) == doctest::Approx(0.0));
    CHECK(boxplus(2.0, 3.0) == doctest::Approx(2 * std::atanh(std::tanh(1.0) * std::tanh(1.5))));
    CHECK(boxplus(-2.0, 3.0) == doctest::Approx(-boxplus(2.0, 3.0)));
    CHECK(boxplus(50.0, 60.0) == doctest::Approx(50.0).epsilon(1e-6));
}

TEST_CASE("BP: trivial inputs")
{
    const auto code = LdpcCode::construct(1000, 875, DegreeDistribution::parse("0.1256x+0.7140x^2+0.1604x^9"),
                                          DegreeDistribution::parse("x^31"), 9);
    BpDecoder dec(code);
    const std::vector<double> strong(1000, 20.0);
    const auto r = dec.decode(strong);
    CHECK(r.converged);
    CHECK(r.iterations <= 1);
    CHECK(r.hard_bits.count() == 0);

    std::vector<double> bad(1000, 1.0);
    bad[3] = std::nan("");
    CHECK_THROWS(dec.decode(bad));
    CHECK_THROWS(dec.decode(std::vector<double>(999, 1.0)));
}

TEST_CASE("BP: high-SNR recovery, validity and sign symmetry")
{
    const auto code = LdpcCode::construct(1000, 875, DegreeDistribution::parse("0.1256x+0.7140x^2+0.1604x^9"),
                                          DegreeDistribution::parse("x^31"), 9);
    std::mt19937_64 rng(33);
    for (auto variant : {BpVariant::sum_product, BpVariant::min_sum}) {
        BpDecoder dec(code, BpOptions{50, variant, 0.8});
        for (int t = 0; t < 20; ++t) {
            const auto c = code.encode_systematic(random_bv(rng, 875));
            std::normal_distribution<double> noise(0.0, 0.3);
            std::vector<double> llr(1000);
            for (std::size_t i = 0; i < 1000; ++i) {
                const double y = (c[i] ? -1.0 : 1.0) + noise(rng);
                llr[i] = 2 * y / 0.09;
            }
            const auto r = dec.decode(llr);
            CHECK(r.converged);
            CHECK(r.hard_bits == c);
            CHECK(code.is_codeword(r.hard_bits));
        }
    }

    // Flipping the LLR signs of a codeword's positions maps the decoding of
    // the all-zero word onto that codeword.
    BpDecoder dec(code);
    std::normal_distribution<double> noise(0.0, 0.75);
    for (int t = 0; t < 30; ++t) {
        const auto c = code.encode_systematic(random_bv(rng, 875));
        std::vector<double> llr0(1000);
        std::vector<double> llr1(1000);
        for (std::size_t i = 0; i < 1000; ++i) {
            llr0[i] = 2 * (1.0 + noise(rng)) / 0.5625;
            llr1[i] = c[i] ? -llr0[i] : llr0[i];
        }
        const auto a = dec.decode(llr0);
        const auto b = dec.decode(llr1);
        CHECK(a.converged == b.converged);
        CHECK(a.iterations == b.iterations);
        CHECK((a.hard_bits ^ c) == b.hard_bits);
        if (a.converged) {
            CHECK(code.is_codeword(a.hard_bits));
        }
    }
}

TEST_CASE("BP block error rate is within twice the ML rate on a (12, 8) code")
{
    const auto code = small_code();
    std::vector<oracle::Bits> book;
    for (std::uint64_t v = 0; v < 256; ++v) {
        BitVector m(8);
        for (std::size_t j = 0; j < 8; ++j) {
            m.set(j, (v >> j) & 1U);
        }
        const auto c = code.encode_systematic(m);
        book.emplace_back(c.bits().begin(), c.bits().end());
    }
    std::mt19937_64 rng(34);
    const double sigma = 0.55;
    std::normal_distribution<double> noise(0.0, sigma);
    BpDecoder dec(code, BpOptions{50, BpVariant::sum_product, 0.8});
    int bp_err = 0;
    int ml_err = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        const auto& c = book[rng() % 256];
        std::vector<double> y(12);
        std::vector<double> llr(12);
        for (std::size_t i = 0; i < 12; ++i) {
            y[i] = (c[i] ? -1.0 : 1.0) + noise(rng);
            llr[i] = 2 * y[i] / (sigma * sigma);
        }
        const auto r = dec.decode(llr);
        if (oracle::Bits(r.hard_bits.bits().begin(), r.hard_bits.bits().end()) != c) {
            ++bp_err;
        }
        if (oracle::ml_decode(book, y) != c) {
            ++ml_err;
        }
    }
    MESSAGE("BP block errors " << bp_err << ", ML block errors " << ml_err);
    CHECK(ml_err > 50);
    CHECK(bp_err >= ml_err / 2);
    CHECK(bp_err <= 2 * ml_err);
}
