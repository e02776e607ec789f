// Irregular LDPC codes: random construction from node-perspective degree
// distributions, systematic encoding, and flooding belief propagation.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpc/gf2.hpp"

namespace dpc {

/// Node-perspective degree distribution: fraction of nodes having each degree.
struct DegreeDistribution {
    std::vector<std::pair<int, double>> terms; // (degree, node fraction)

    /// Throws unless fractions sum to 1 (+-1e-9) and all degrees are >= 2.
    void validate() const;
    double mean_degree() const;

    /// Polynomial notation where the coefficient of x^(d-1) is the fraction
    /// of degree-d nodes, e.g. "0.1256x+0.7140x^2+0.1604x^9" or "x^31".
    static DegreeDistribution parse(std::string_view text);
    std::string to_string() const;
};

/// Integer node counts for `nodes` nodes, largest-remainder rounding.
std::vector<std::pair<int, std::size_t>> node_counts(const DegreeDistribution& dist, std::size_t nodes);

class LdpcCode {
public:
    LdpcCode() = default;

    /// Random socket-interleaved construction. Duplicate edges are removed and
    /// 4-cycles through two degree-2 variable nodes avoided by edge swaps;
    /// dependent rows are replaced by fresh random rows of the same weight
    /// until H has full row rank.
    static LdpcCode construct(std::size_t n, std::size_t K, const DegreeDistribution& var_dist,
                              const DegreeDistribution& chk_dist, std::uint64_t seed);

    /// Builds the systematic encoder for a full-rank parity-check matrix.
    /// Columns are reordered so that the first K positions carry the message.
    static LdpcCode from_parity_check(const Gf2Matrix& H);

    /// Reassembles a code from a systematic-order H plus its cached generator.
    static LdpcCode from_parts(Gf2Matrix H_systematic, std::vector<std::size_t> column_permutation,
                               DenseBitMatrix generator);

    std::size_t n() const { return H_.cols(); }
    std::size_t K() const { return H_.cols() - H_.rows(); }
    std::size_t parity_length() const { return H_.rows(); }

    /// Parity-check matrix in systematic column order: c = [msg | parity].
    const Gf2Matrix& H() const { return H_; }
    /// Systematic column j is column column_permutation()[j] of the matrix
    /// as constructed.
    const std::vector<std::size_t>& column_permutation() const { return column_permutation_; }
    /// K x (n-K): parity = msg * generator.
    const DenseBitMatrix& generator() const { return generator_; }

    BitVector parity(const BitVector& msg) const;
    BitVector encode_systematic(const BitVector& msg) const;

    /// Per-edge Tanner graph layout used by the decoder. Edges are numbered
    /// row by row; `var_edges(v)` lists the edge ids incident to column v.
    std::span<const std::uint32_t> edge_var() const { return edge_var_; }
    std::span<const std::uint32_t> row_start() const { return row_start_; }
    std::span<const std::uint32_t> var_edges(std::size_t v) const
    {
        return {var_edge_ids_.data() + var_start_[v], var_start_[v + 1] - var_start_[v]};
    }

    bool is_codeword(const BitVector& c) const;

private:
    void build_graph();

    Gf2Matrix H_;
    std::vector<std::size_t> column_permutation_;
    DenseBitMatrix generator_;

    std::vector<std::uint32_t> edge_var_;
    std::vector<std::uint32_t> row_start_;
    std::vector<std::uint32_t> var_start_;
    std::vector<std::uint32_t> var_edge_ids_;
};

/// Writes H (systematic order) as alist plus a ".gen" dense generator file
/// next to it. load_code() reverses this.
void save_code(const LdpcCode& code, const std::string& alist_path);
LdpcCode load_code(const std::string& alist_path);

enum class BpVariant { sum_product, min_sum };

struct BpOptions {
    int max_iter = 50;
    BpVariant variant = BpVariant::sum_product;
    /// Normalisation applied to min-sum check messages.
    double min_sum_scale = 0.8;
};

struct BpResult {
    BitVector hard_bits;
    bool converged = false;
    int iterations = 0;
    std::vector<double> posterior; // a-posteriori LLRs
};

/// Flooding belief propagation with per-call message storage. Reusing one
/// decoder across blocks avoids reallocating the edge arrays.
class BpDecoder {
public:
    explicit BpDecoder(const LdpcCode& code, BpOptions options = {});

    /// llr[i] = log(P(c_i = 0) / P(c_i = 1)) in systematic order. Throws on
    /// non-finite input.
    BpResult decode(std::span<const double> llr);

private:
    const LdpcCode* code_;
    BpOptions options_;
    std::vector<double> v2c_;
    std::vector<double> c2v_;
    std::vector<double> fwd_;
    std::vector<double> bwd_;
};

BpResult bp_decode(const LdpcCode& code, std::span<const double> llr, int max_iter = 50);

/// Exact box-plus: 2 atanh(tanh(a/2) tanh(b/2)), computed in the log domain.
double boxplus(double a, double b);

} // namespace dpc
