#include "dpc/ldpc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dpc {

// ---------------------------------------------------------------------------
// Degree distributions

void DegreeDistribution::validate() const
{
    if (terms.empty()) {
        throw std::invalid_argument("DegreeDistribution: empty");
    }
    double total = 0.0;
    for (const auto& [deg, frac] : terms) {
        if (deg < 2) {
            throw std::invalid_argument("DegreeDistribution: degrees must be >= 2");
        }
        if (!(frac >= 0.0 && frac <= 1.0)) {
            throw std::invalid_argument("DegreeDistribution: fraction outside [0, 1]");
        }
        total += frac;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("DegreeDistribution: fractions sum to " + std::to_string(total));
    }
}

double DegreeDistribution::mean_degree() const
{
    double m = 0.0;
    for (const auto& [deg, frac] : terms) {
        m += deg * frac;
    }
    return m;
}

DegreeDistribution DegreeDistribution::parse(std::string_view text)
{
    std::string s;
    for (char c : text) {
        if (c != ' ' && c != '\t') {
            s.push_back(c);
        }
    }
    DegreeDistribution d;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t end = s.find('+', pos);
        if (end == std::string::npos) {
            end = s.size();
        }
        const std::string term = s.substr(pos, end - pos);
        pos = end + 1;
        const auto xpos = term.find('x');
        double coef = 1.0;
        int power = 0;
        try {
            if (xpos == std::string::npos) {
                coef = std::stod(term);
            } else {
                if (xpos > 0) {
                    std::string c = term.substr(0, xpos);
                    if (!c.empty() && c.back() == '*') {
                        c.pop_back();
                    }
                    coef = std::stod(c);
                }
                power = 1;
                if (xpos + 1 < term.size()) {
                    if (term[xpos + 1] != '^') {
                        throw std::invalid_argument("");
                    }
                    power = std::stoi(term.substr(xpos + 2));
                }
            }
        } catch (const std::exception&) {
            throw std::invalid_argument("DegreeDistribution::parse: bad term '" + term + "'");
        }
        d.terms.emplace_back(power + 1, coef);
    }
    d.validate();
    return d;
}

std::string DegreeDistribution::to_string() const
{
    std::ostringstream os;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i > 0) {
            os << '+';
        }
        os << terms[i].second << "x^" << terms[i].first - 1;
    }
    return os.str();
}

std::vector<std::pair<int, std::size_t>> node_counts(const DegreeDistribution& dist, std::size_t nodes)
{
    dist.validate();
    std::vector<std::pair<int, std::size_t>> out;
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < dist.terms.size(); ++i) {
        const double exact = dist.terms[i].second * static_cast<double>(nodes);
        const auto base = static_cast<std::size_t>(std::floor(exact));
        out.emplace_back(dist.terms[i].first, base);
        remainders.emplace_back(exact - static_cast<double>(base), i);
        assigned += base;
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < nodes; ++i, ++assigned) {
        out[remainders[i % remainders.size()].second].second += 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

struct Systematic {
    std::vector<std::size_t> perm;
    DenseBitMatrix generator;
};

// `reduced` is H after gauss_jordan with full row rank.
Systematic systematic_from_reduced(const DenseBitMatrix& reduced, const EliminationResult& elim)
{
    const std::size_t m = reduced.rows();
    const std::size_t n = reduced.cols();
    const std::size_t K = n - m;
    std::vector<std::uint8_t> is_pivot(n, 0);
    for (auto p : elim.pivot_of_row) {
        is_pivot[static_cast<std::size_t>(p)] = 1;
    }
    Systematic out;
    out.perm.reserve(n);
    std::vector<std::size_t> position(n);
    for (std::size_t c = 0; c < n; ++c) {
        if (!is_pivot[c]) {
            position[c] = out.perm.size();
            out.perm.push_back(c);
        }
    }
    for (std::size_t r = 0; r < m; ++r) {
        const auto c = static_cast<std::size_t>(elim.pivot_of_row[r]);
        position[c] = out.perm.size();
        out.perm.push_back(c);
    }

    out.generator = DenseBitMatrix(K, m);
    for (std::size_t r = 0; r < m; ++r) {
        const auto rw = reduced.row(r);
        for (std::size_t w = 0; w < rw.size(); ++w) {
            std::uint64_t bits = rw[w];
            while (bits != 0) {
                const std::size_t c = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
                bits &= bits - 1;
                if (!is_pivot[c]) {
                    out.generator.set(position[c], r, true);
                }
            }
        }
    }
    return out;
}

// Swaps check endpoints between edges until no variable node has a repeated
// check and no two degree-2 variable nodes share the same check pair.
void repair_edges(std::vector<std::uint32_t>& edge_check, const std::vector<std::uint32_t>& edge_var,
                  const std::vector<std::size_t>& var_start, std::mt19937_64& rng)
{
    const std::size_t E = edge_check.size();
    const std::size_t n = var_start.size() - 1;
    std::uniform_int_distribution<std::size_t> pick(0, E - 1);

    const auto has_check = [&](std::size_t v, std::uint32_t c, std::size_t skip) {
        for (std::size_t e = var_start[v]; e < var_start[v + 1]; ++e) {
            if (e != skip && edge_check[e] == c) {
                return true;
            }
        }
        return false;
    };
    const auto try_swap = [&](std::size_t e) {
        const std::size_t v = edge_var[e];
        for (int attempt = 0; attempt < 1000; ++attempt) {
            const std::size_t e2 = pick(rng);
            const std::size_t w = edge_var[e2];
            if (w == v || edge_check[e2] == edge_check[e]) {
                continue;
            }
            if (has_check(v, edge_check[e2], e) || has_check(w, edge_check[e], e2)) {
                continue;
            }
            std::swap(edge_check[e], edge_check[e2]);
            return true;
        }
        return false;
    };

    for (int pass = 0; pass < 50; ++pass) {
        bool changed = false;
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> pairs;
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t e = var_start[v]; e < var_start[v + 1]; ++e) {
                if (has_check(v, edge_check[e], e) && try_swap(e)) {
                    changed = true;
                }
            }
            if (var_start[v + 1] - var_start[v] == 2) {
                auto a = edge_check[var_start[v]];
                auto b = edge_check[var_start[v] + 1];
                const auto key = std::make_pair(std::min(a, b), std::max(a, b));
                if (!pairs.emplace(key, v).second && try_swap(var_start[v])) {
                    changed = true;
                }
            }
        }
        if (!changed) {
            break;
        }
    }
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t e = var_start[v]; e < var_start[v + 1]; ++e) {
            if (has_check(v, edge_check[e], e)) {
                throw std::runtime_error("LdpcCode::construct: could not remove duplicate edges");
            }
        }
    }
}

} // namespace

LdpcCode LdpcCode::construct(std::size_t n, std::size_t K, const DegreeDistribution& var_dist,
                             const DegreeDistribution& chk_dist, std::uint64_t seed)
{
    if (K == 0 || K >= n) {
        throw std::invalid_argument("LdpcCode::construct: need 0 < K < n");
    }
    const std::size_t m = n - K;
    std::mt19937_64 rng(seed);

    std::vector<int> var_deg;
    for (const auto& [deg, count] : node_counts(var_dist, n)) {
        var_deg.insert(var_deg.end(), count, deg);
    }
    std::shuffle(var_deg.begin(), var_deg.end(), rng);
    const std::size_t E = std::accumulate(var_deg.begin(), var_deg.end(), std::size_t{0},
                                          [](std::size_t a, int d) { return a + static_cast<std::size_t>(d); });

    std::vector<int> chk_deg;
    for (const auto& [deg, count] : node_counts(chk_dist, m)) {
        chk_deg.insert(chk_deg.end(), count, deg);
    }
    std::shuffle(chk_deg.begin(), chk_deg.end(), rng);
    // Balance edge counts by moving check degrees one at a time, round robin.
    auto chk_edges = static_cast<long long>(std::accumulate(chk_deg.begin(), chk_deg.end(), 0LL));
    for (std::size_t i = 0; chk_edges != static_cast<long long>(E); i = (i + 1) % m) {
        const int step = chk_edges < static_cast<long long>(E) ? 1 : -1;
        chk_deg[i] += step;
        chk_edges += step;
    }
    for (int d : chk_deg) {
        if (d < 2 || static_cast<std::size_t>(d) > n) {
            throw std::invalid_argument("LdpcCode::construct: infeasible degree balance");
        }
    }
    for (int d : var_deg) {
        if (static_cast<std::size_t>(d) > m) {
            throw std::invalid_argument("LdpcCode::construct: variable degree exceeds check count");
        }
    }

    std::vector<std::uint32_t> edge_var;
    std::vector<std::size_t> var_start{0};
    for (std::size_t v = 0; v < n; ++v) {
        edge_var.insert(edge_var.end(), static_cast<std::size_t>(var_deg[v]), static_cast<std::uint32_t>(v));
        var_start.push_back(edge_var.size());
    }
    std::vector<std::uint32_t> edge_check;
    for (std::size_t c = 0; c < m; ++c) {
        edge_check.insert(edge_check.end(), static_cast<std::size_t>(chk_deg[c]), static_cast<std::uint32_t>(c));
    }
    std::shuffle(edge_check.begin(), edge_check.end(), rng);
    repair_edges(edge_check, edge_var, var_start, rng);

    std::vector<std::vector<std::uint32_t>> rows(m);
    for (std::size_t e = 0; e < E; ++e) {
        rows[edge_check[e]].push_back(edge_var[e]);
    }

    for (int round = 0;; ++round) {
        std::vector<Gf2Matrix::Entry> entries;
        for (std::size_t r = 0; r < m; ++r) {
            for (auto c : rows[r]) {
                entries.emplace_back(r, c);
            }
        }
        Gf2Matrix H(m, n, entries);
        DenseBitMatrix reduced = H.to_dense();
        const auto elim = gauss_jordan(reduced);
        const auto dependent = elim.dependent_rows();
        if (dependent.empty()) {
            auto sys = systematic_from_reduced(reduced, elim);
            Gf2Matrix H_sys = H.permute_columns(sys.perm);
            return from_parts(std::move(H_sys), std::move(sys.perm), std::move(sys.generator));
        }
        if (round >= 100) {
            throw std::runtime_error("LdpcCode::construct: could not reach full rank");
        }
        std::vector<std::uint32_t> cols(n);
        std::iota(cols.begin(), cols.end(), 0U);
        for (auto r : dependent) {
            const std::size_t w = rows[r].size();
            // Partial Fisher-Yates draw of w distinct columns.
            for (std::size_t i = 0; i < w; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n - 1);
                std::swap(cols[i], cols[pick(rng)]);
            }
            rows[r].assign(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(w));
        }
    }
}

LdpcCode LdpcCode::from_parity_check(const Gf2Matrix& H)
{
    DenseBitMatrix reduced = H.to_dense();
    const auto elim = gauss_jordan(reduced);
    if (elim.rank != H.rows()) {
        throw std::invalid_argument("LdpcCode::from_parity_check: H is not full rank");
    }
    auto sys = systematic_from_reduced(reduced, elim);
    Gf2Matrix H_sys = H.permute_columns(sys.perm);
    return from_parts(std::move(H_sys), std::move(sys.perm), std::move(sys.generator));
}

LdpcCode LdpcCode::from_parts(Gf2Matrix H_systematic, std::vector<std::size_t> column_permutation,
                              DenseBitMatrix generator)
{
    const std::size_t n = H_systematic.cols();
    const std::size_t m = H_systematic.rows();
    if (m >= n || column_permutation.size() != n || generator.rows() != n - m || generator.cols() != m) {
        throw std::invalid_argument("LdpcCode::from_parts: inconsistent dimensions");
    }
    LdpcCode code;
    code.H_ = std::move(H_systematic);
    code.column_permutation_ = std::move(column_permutation);
    code.generator_ = std::move(generator);
    code.build_graph();
    return code;
}

void LdpcCode::build_graph()
{
    const std::size_t n = H_.cols();
    const std::size_t m = H_.rows();
    edge_var_.clear();
    row_start_.assign(1, 0);
    for (std::size_t r = 0; r < m; ++r) {
        for (auto c : H_.row(r)) {
            edge_var_.push_back(c);
        }
        row_start_.push_back(static_cast<std::uint32_t>(edge_var_.size()));
    }
    var_start_.assign(n + 1, 0);
    for (auto v : edge_var_) {
        ++var_start_[v + 1];
    }
    for (std::size_t v = 0; v < n; ++v) {
        var_start_[v + 1] += var_start_[v];
    }
    var_edge_ids_.assign(edge_var_.size(), 0);
    std::vector<std::uint32_t> fill(var_start_.begin(), var_start_.end() - 1);
    for (std::size_t e = 0; e < edge_var_.size(); ++e) {
        var_edge_ids_[fill[edge_var_[e]]++] = static_cast<std::uint32_t>(e);
    }
}

BitVector LdpcCode::parity(const BitVector& msg) const
{
    if (msg.size() != K()) {
        throw std::invalid_argument("LdpcCode::parity: message length mismatch");
    }
    std::vector<std::uint64_t> acc(generator_.words_per_row(), 0);
    for (std::size_t i = 0; i < msg.size(); ++i) {
        if (msg[i]) {
            const auto row = generator_.row(i);
            for (std::size_t w = 0; w < acc.size(); ++w) {
                acc[w] ^= row[w];
            }
        }
    }
    BitVector p(parity_length());
    for (std::size_t r = 0; r < p.size(); ++r) {
        p.set(r, (acc[r / 64] >> (r % 64)) & 1U);
    }
    return p;
}

BitVector LdpcCode::encode_systematic(const BitVector& msg) const
{
    const BitVector parts[] = {msg, parity(msg)};
    return BitVector::concat(parts);
}

bool LdpcCode::is_codeword(const BitVector& c) const
{
    if (c.size() != n()) {
        throw std::invalid_argument("LdpcCode::is_codeword: length mismatch");
    }
    for (std::size_t r = 0; r < H_.rows(); ++r) {
        std::uint8_t acc = 0;
        for (auto v : H_.row(r)) {
            acc ^= c[v];
        }
        if (acc) {
            return false;
        }
    }
    return true;
}

void save_code(const LdpcCode& code, const std::string& alist_path)
{
    std::ofstream alist(alist_path);
    if (!alist) {
        throw std::runtime_error("save_code: cannot open " + alist_path);
    }
    write_alist(alist, code.H());
    std::ofstream gen(alist_path + ".gen", std::ios::binary);
    if (!gen) {
        throw std::runtime_error("save_code: cannot open " + alist_path + ".gen");
    }
    write_dense_matrix(gen, code.generator());
}

LdpcCode load_code(const std::string& alist_path)
{
    std::ifstream alist(alist_path);
    if (!alist) {
        throw std::runtime_error("load_code: cannot open " + alist_path);
    }
    Gf2Matrix H = read_alist(alist);
    std::ifstream gen(alist_path + ".gen", std::ios::binary);
    if (!gen) {
        return LdpcCode::from_parity_check(H);
    }
    std::vector<std::size_t> identity(H.cols());
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    return LdpcCode::from_parts(std::move(H), std::move(identity), read_dense_matrix(gen));
}

// ---------------------------------------------------------------------------
// Belief propagation

double boxplus(double a, double b)
{
    const double s = ((a < 0) != (b < 0)) ? -1.0 : 1.0;
    return s * std::min(std::abs(a), std::abs(b)) + std::log1p(std::exp(-std::abs(a + b))) -
           std::log1p(std::exp(-std::abs(a - b)));
}

BpDecoder::BpDecoder(const LdpcCode& code, BpOptions options)
    : code_(&code), options_(options), v2c_(code.edge_var().size()), c2v_(code.edge_var().size())
{
    if (options_.max_iter < 0) {
        throw std::invalid_argument("BpDecoder: negative iteration limit");
    }
    std::size_t max_deg = 0;
    const auto rs = code.row_start();
    for (std::size_t r = 0; r + 1 < rs.size(); ++r) {
        max_deg = std::max<std::size_t>(max_deg, rs[r + 1] - rs[r]);
    }
    fwd_.resize(max_deg + 1);
    bwd_.resize(max_deg + 1);
}

namespace {

constexpr double kMessageClamp = 30.0;
// 2 atanh(x) saturates here for |x| rounding to 1.
constexpr double kCheckClamp = 38.0;

} // namespace

BpResult BpDecoder::decode(std::span<const double> llr)
{
    const LdpcCode& code = *code_;
    const std::size_t n = code.n();
    if (llr.size() != n) {
        throw std::invalid_argument("bp_decode: LLR length mismatch");
    }
    for (double x : llr) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("bp_decode: non-finite LLR");
        }
    }
    const auto edge_var = code.edge_var();
    const auto row_start = code.row_start();
    const std::size_t m = row_start.size() - 1;

    BpResult res;
    res.posterior.assign(llr.begin(), llr.end());
    std::vector<std::uint8_t> hard(n);
    for (std::size_t v = 0; v < n; ++v) {
        hard[v] = llr[v] < 0.0;
    }
    const auto syndrome_ok = [&]() {
        for (std::size_t r = 0; r < m; ++r) {
            std::uint8_t acc = 0;
            for (auto e = row_start[r]; e < row_start[r + 1]; ++e) {
                acc ^= hard[edge_var[e]];
            }
            if (acc) {
                return false;
            }
        }
        return true;
    };

    res.converged = syndrome_ok();
    if (!res.converged) {
        for (std::size_t e = 0; e < edge_var.size(); ++e) {
            v2c_[e] = std::clamp(llr[edge_var[e]], -kMessageClamp, kMessageClamp);
        }
    }

    for (int it = 1; it <= options_.max_iter && !res.converged; ++it) {
        for (std::size_t r = 0; r < m; ++r) {
            const std::size_t b = row_start[r];
            const std::size_t d = row_start[r + 1] - b;
            if (options_.variant == BpVariant::sum_product) {
                // Box-plus of all other inputs, evaluated as forward/backward
                // products in the tanh domain.
                fwd_[0] = 1.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double t = std::tanh(0.5 * v2c_[b + j]);
                    c2v_[b + j] = t;
                    fwd_[j + 1] = fwd_[j] * t;
                }
                bwd_[d] = 1.0;
                for (std::size_t j = d; j-- > 0;) {
                    bwd_[j] = bwd_[j + 1] * c2v_[b + j];
                }
                for (std::size_t j = 0; j < d; ++j) {
                    const double p = fwd_[j] * bwd_[j + 1];
                    c2v_[b + j] = std::clamp(2.0 * std::atanh(p), -kCheckClamp, kCheckClamp);
                }
            } else {
                double min1 = std::numeric_limits<double>::infinity();
                double min2 = min1;
                std::size_t arg = 0;
                bool negative = false;
                for (std::size_t j = 0; j < d; ++j) {
                    const double x = v2c_[b + j];
                    negative ^= x < 0.0;
                    const double a = std::abs(x);
                    if (a < min1) {
                        min2 = min1;
                        min1 = a;
                        arg = j;
                    } else if (a < min2) {
                        min2 = a;
                    }
                }
                for (std::size_t j = 0; j < d; ++j) {
                    const double x = v2c_[b + j];
                    const bool neg = negative ^ (x < 0.0);
                    const double mag = options_.min_sum_scale * (j == arg ? min2 : min1);
                    c2v_[b + j] = neg ? -mag : mag;
                }
            }
        }

        for (std::size_t v = 0; v < n; ++v) {
            double post = llr[v];
            const auto edges = code.var_edges(v);
            for (auto e : edges) {
                post += c2v_[e];
            }
            res.posterior[v] = post;
            hard[v] = post < 0.0;
            for (auto e : edges) {
                v2c_[e] = std::clamp(post - c2v_[e], -kMessageClamp, kMessageClamp);
            }
        }
        res.iterations = it;
        res.converged = syndrome_ok();
    }

    res.hard_bits = BitVector::from_bits(std::move(hard));
    return res;
}

BpResult bp_decode(const LdpcCode& code, std::span<const double> llr, int max_iter)
{
    BpOptions opt;
    opt.max_iter = max_iter;
    BpDecoder dec(code, opt);
    return dec.decode(llr);
}

} // namespace dpc
