#include "dpc/gf2.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace dpc {

// ---------------------------------------------------------------------------
// BitVector

BitVector::BitVector(std::size_t length, bool value) : bits_(length, value ? 1 : 0) {}

BitVector BitVector::from_bits(std::vector<std::uint8_t> bits)
{
    for (auto b : bits) {
        if (b > 1) {
            throw std::invalid_argument("BitVector::from_bits: value other than 0/1");
        }
    }
    BitVector v;
    v.bits_ = std::move(bits);
    return v;
}

BitVector BitVector::from_string(std::string_view text)
{
    std::vector<std::uint8_t> bits;
    bits.reserve(text.size());
    for (char c : text) {
        if (c == '0' || c == '1') {
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        } else if (c != ' ' && c != '\t' && c != '\n') {
            throw std::invalid_argument("BitVector::from_string: unexpected character");
        }
    }
    return from_bits(std::move(bits));
}

BitVector BitVector::from_hex(std::string_view hex, std::size_t length)
{
    if (hex.size() * 4 < length) {
        throw std::invalid_argument("BitVector::from_hex: not enough digits");
    }
    BitVector v(length);
    for (std::size_t i = 0; i < length; ++i) {
        const char c = hex[i / 4];
        int nibble = 0;
        if (c >= '0' && c <= '9') {
            nibble = c - '0';
        } else if (c >= 'a' && c <= 'f') {
            nibble = c - 'a' + 10;
        } else if (c >= 'A' && c <= 'F') {
            nibble = c - 'A' + 10;
        } else {
            throw std::invalid_argument("BitVector::from_hex: bad digit");
        }
        v.bits_[i] = static_cast<std::uint8_t>((nibble >> (3 - i % 4)) & 1);
    }
    return v;
}

BitVector BitVector::concat(std::span<const BitVector> parts)
{
    BitVector out;
    std::size_t total = 0;
    for (const auto& p : parts) {
        total += p.size();
    }
    out.bits_.reserve(total);
    for (const auto& p : parts) {
        out.bits_.insert(out.bits_.end(), p.bits_.begin(), p.bits_.end());
    }
    return out;
}

BitVector BitVector::slice(std::size_t pos, std::size_t len) const
{
    if (pos + len > bits_.size()) {
        throw std::out_of_range("BitVector::slice");
    }
    BitVector out;
    out.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(pos),
                     bits_.begin() + static_cast<std::ptrdiff_t>(pos + len));
    return out;
}

std::size_t BitVector::count() const
{
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BitVector& BitVector::operator^=(const BitVector& other)
{
    if (other.size() != size()) {
        throw std::invalid_argument("BitVector xor: length mismatch");
    }
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        bits_[i] ^= other.bits_[i];
    }
    return *this;
}

std::string BitVector::to_string() const
{
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        s[i] = static_cast<char>('0' + bits_[i]);
    }
    return s;
}

std::string BitVector::to_hex() const
{
    static constexpr std::array<char, 16> digits{'0', '1', '2', '3', '4', '5', '6', '7',
                                                 '8', '9', 'a', 'b', 'c', 'd', 'e', 'f'};
    std::string s((bits_.size() + 3) / 4, '0');
    for (std::size_t d = 0; d < s.size(); ++d) {
        int nibble = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            const std::size_t i = d * 4 + j;
            nibble = (nibble << 1) | (i < bits_.size() ? bits_[i] : 0);
        }
        s[d] = digits[static_cast<std::size_t>(nibble)];
    }
    return s;
}

std::size_t hamming_distance(const BitVector& a, const BitVector& b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("hamming_distance: length mismatch");
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] != b[i];
    }
    return d;
}

// ---------------------------------------------------------------------------
// DenseBitMatrix

DenseBitMatrix::DenseBitMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), words_((cols + 63) / 64), data_(rows * words_, 0)
{
}

void DenseBitMatrix::set(std::size_t r, std::size_t c, bool value)
{
    auto& w = data_[r * words_ + c / 64];
    const std::uint64_t mask = std::uint64_t{1} << (c % 64);
    w = value ? (w | mask) : (w & ~mask);
}

void DenseBitMatrix::xor_rows(std::size_t dst, std::size_t src)
{
    std::uint64_t* d = data_.data() + dst * words_;
    const std::uint64_t* s = data_.data() + src * words_;
    for (std::size_t w = 0; w < words_; ++w) {
        d[w] ^= s[w];
    }
}

void DenseBitMatrix::swap_rows(std::size_t a, std::size_t b)
{
    if (a == b) {
        return;
    }
    std::swap_ranges(data_.begin() + static_cast<std::ptrdiff_t>(a * words_),
                     data_.begin() + static_cast<std::ptrdiff_t>((a + 1) * words_),
                     data_.begin() + static_cast<std::ptrdiff_t>(b * words_));
}

bool DenseBitMatrix::row_is_zero(std::size_t r) const
{
    const auto rw = row(r);
    return std::all_of(rw.begin(), rw.end(), [](std::uint64_t w) { return w == 0; });
}

BitVector DenseBitMatrix::multiply(const BitVector& v) const
{
    if (v.size() != cols_) {
        throw std::invalid_argument("DenseBitMatrix::multiply: dimension mismatch");
    }
    std::vector<std::uint64_t> packed(words_, 0);
    for (std::size_t c = 0; c < cols_; ++c) {
        if (v[c]) {
            packed[c / 64] |= std::uint64_t{1} << (c % 64);
        }
    }
    BitVector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        const auto rw = row(r);
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < words_; ++w) {
            acc ^= rw[w] & packed[w];
        }
        out.set(r, std::popcount(acc) & 1);
    }
    return out;
}

DenseBitMatrix DenseBitMatrix::transpose() const
{
    DenseBitMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        const auto rw = row(r);
        for (std::size_t w = 0; w < words_; ++w) {
            std::uint64_t bits = rw[w];
            while (bits != 0) {
                const int b = std::countr_zero(bits);
                t.flip(w * 64 + static_cast<std::size_t>(b), r);
                bits &= bits - 1;
            }
        }
    }
    return t;
}

std::vector<std::size_t> EliminationResult::dependent_rows() const
{
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < pivot_of_row.size(); ++r) {
        if (pivot_of_row[r] < 0) {
            out.push_back(r);
        }
    }
    return out;
}

EliminationResult gauss_jordan(DenseBitMatrix& m)
{
    EliminationResult res;
    res.pivot_of_row.assign(m.rows(), -1);
    const std::size_t words = m.words_per_row();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        // Row r has already been cleared of every earlier pivot column.
        const auto rw = m.row(r);
        std::ptrdiff_t pivot = -1;
        for (std::size_t w = 0; w < words; ++w) {
            if (rw[w] != 0) {
                pivot = static_cast<std::ptrdiff_t>(w * 64 + static_cast<std::size_t>(std::countr_zero(rw[w])));
                break;
            }
        }
        if (pivot < 0) {
            continue;
        }
        res.pivot_of_row[r] = pivot;
        ++res.rank;
        const std::size_t pw = static_cast<std::size_t>(pivot) / 64;
        const std::uint64_t mask = std::uint64_t{1} << (static_cast<std::size_t>(pivot) % 64);
        for (std::size_t other = 0; other < m.rows(); ++other) {
            if (other != r && (m.row(other)[pw] & mask) != 0) {
                m.xor_rows(other, r);
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Gf2Matrix

Gf2Matrix::Gf2Matrix(std::size_t rows, std::size_t cols, std::span<const Entry> entries)
    : rows_(rows), cols_(cols), nnz_(entries.size()), row_adj_(rows), col_adj_(cols)
{
    for (const auto& [r, c] : entries) {
        if (r >= rows || c >= cols) {
            throw std::invalid_argument("Gf2Matrix: entry out of range");
        }
        row_adj_[r].push_back(static_cast<std::uint32_t>(c));
        col_adj_[c].push_back(static_cast<std::uint32_t>(r));
    }
    for (auto& adj : row_adj_) {
        std::sort(adj.begin(), adj.end());
        if (std::adjacent_find(adj.begin(), adj.end()) != adj.end()) {
            throw std::invalid_argument("Gf2Matrix: duplicate entry");
        }
    }
    for (auto& adj : col_adj_) {
        std::sort(adj.begin(), adj.end());
    }
}

Gf2Matrix Gf2Matrix::identity(std::size_t n)
{
    std::vector<Entry> e;
    e.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        e.emplace_back(i, i);
    }
    return Gf2Matrix(n, n, e);
}

Gf2Matrix Gf2Matrix::from_dense(const DenseBitMatrix& dense)
{
    std::vector<Entry> e;
    for (std::size_t r = 0; r < dense.rows(); ++r) {
        const auto rw = dense.row(r);
        for (std::size_t w = 0; w < rw.size(); ++w) {
            std::uint64_t bits = rw[w];
            while (bits != 0) {
                e.emplace_back(r, w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
                bits &= bits - 1;
            }
        }
    }
    return Gf2Matrix(dense.rows(), dense.cols(), e);
}

bool Gf2Matrix::contains(std::size_t r, std::size_t c) const
{
    const auto& adj = row_adj_.at(r);
    return std::binary_search(adj.begin(), adj.end(), static_cast<std::uint32_t>(c));
}

std::vector<Gf2Matrix::Entry> Gf2Matrix::entries() const
{
    std::vector<Entry> e;
    e.reserve(nnz_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (auto c : row_adj_[r]) {
            e.emplace_back(r, c);
        }
    }
    return e;
}

DenseBitMatrix Gf2Matrix::to_dense() const
{
    DenseBitMatrix d(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (auto c : row_adj_[r]) {
            d.set(r, c, true);
        }
    }
    return d;
}

Gf2Matrix Gf2Matrix::permute_columns(std::span<const std::size_t> perm) const
{
    if (perm.size() != cols_) {
        throw std::invalid_argument("Gf2Matrix::permute_columns: size mismatch");
    }
    std::vector<std::size_t> inverse(cols_, cols_);
    for (std::size_t j = 0; j < cols_; ++j) {
        if (perm[j] >= cols_ || inverse[perm[j]] != cols_) {
            throw std::invalid_argument("Gf2Matrix::permute_columns: not a permutation");
        }
        inverse[perm[j]] = j;
    }
    std::vector<Entry> e;
    e.reserve(nnz_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (auto c : row_adj_[r]) {
            e.emplace_back(r, inverse[c]);
        }
    }
    return Gf2Matrix(rows_, cols_, e);
}

BitVector mat_vec_mul(const Gf2Matrix& m, const BitVector& v)
{
    if (v.size() != m.cols()) {
        throw std::invalid_argument("mat_vec_mul: dimension mismatch");
    }
    BitVector out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::uint8_t acc = 0;
        for (auto c : m.row(r)) {
            acc ^= v[c];
        }
        out.set(r, acc != 0);
    }
    return out;
}

RowReduction row_reduce(const Gf2Matrix& m)
{
    auto dense = m.to_dense();
    const auto elim = gauss_jordan(dense);

    std::vector<std::pair<std::size_t, std::size_t>> order; // (pivot col, row)
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (elim.pivot_of_row[r] >= 0) {
            order.emplace_back(static_cast<std::size_t>(elim.pivot_of_row[r]), r);
        }
    }
    std::sort(order.begin(), order.end());

    DenseBitMatrix sorted(m.rows(), m.cols());
    RowReduction out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto src = dense.row(order[i].second);
        std::copy(src.begin(), src.end(), sorted.row(i).begin());
        out.pivots.push_back(order[i].first);
    }
    out.rank = order.size();
    out.reduced = Gf2Matrix::from_dense(sorted);
    return out;
}

// ---------------------------------------------------------------------------
// alist

namespace {

std::size_t read_count(std::istream& in, const char* what)
{
    long long v = 0;
    if (!(in >> v) || v < 0) {
        throw std::runtime_error(std::string("read_alist: malformed ") + what);
    }
    return static_cast<std::size_t>(v);
}

} // namespace

Gf2Matrix read_alist(std::istream& in)
{
    const std::size_t cols = read_count(in, "dimensions");
    const std::size_t rows = read_count(in, "dimensions");
    read_count(in, "max degrees");
    read_count(in, "max degrees");

    std::vector<std::size_t> col_weight(cols);
    std::vector<std::size_t> row_weight(rows);
    for (auto& w : col_weight) {
        w = read_count(in, "column weights");
    }
    for (auto& w : row_weight) {
        w = read_count(in, "row weights");
    }

    std::vector<Gf2Matrix::Entry> entries;
    for (std::size_t c = 0; c < cols; ++c) {
        std::size_t got = 0;
        while (got < col_weight[c]) {
            const std::size_t idx = read_count(in, "column list");
            if (idx == 0) {
                continue;
            }
            entries.emplace_back(idx - 1, c);
            ++got;
        }
        // Swallow zero padding up to the end of the line.
        in >> std::ws;
        while (in.peek() == '0') {
            read_count(in, "padding");
            in >> std::ws;
        }
    }

    // Row lists must agree with the column lists.
    std::vector<Gf2Matrix::Entry> from_rows;
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t got = 0;
        while (got < row_weight[r]) {
            const std::size_t idx = read_count(in, "row list");
            if (idx == 0) {
                continue;
            }
            from_rows.emplace_back(r, idx - 1);
            ++got;
        }
        in >> std::ws;
        while (in.peek() == '0') {
            read_count(in, "padding");
            in >> std::ws;
        }
    }
    Gf2Matrix m(rows, cols, entries);
    if (Gf2Matrix(rows, cols, from_rows) != m) {
        throw std::runtime_error("read_alist: row and column lists disagree");
    }
    return m;
}

void write_alist(std::ostream& out, const Gf2Matrix& m)
{
    std::size_t max_col = 0;
    std::size_t max_row = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        max_col = std::max(max_col, m.col(c).size());
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        max_row = std::max(max_row, m.row(r).size());
    }
    out << m.cols() << ' ' << m.rows() << '\n' << max_col << ' ' << max_row << '\n';
    for (std::size_t c = 0; c < m.cols(); ++c) {
        out << m.col(c).size() << (c + 1 < m.cols() ? ' ' : '\n');
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << m.row(r).size() << (r + 1 < m.rows() ? ' ' : '\n');
    }
    const auto write_list = [&out](std::span<const std::uint32_t> idx, std::size_t width) {
        for (std::size_t i = 0; i < width; ++i) {
            if (i > 0) {
                out << ' ';
            }
            out << (i < idx.size() ? idx[i] + 1 : 0);
        }
        out << '\n';
    };
    for (std::size_t c = 0; c < m.cols(); ++c) {
        write_list(m.col(c), max_col);
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        write_list(m.row(r), max_row);
    }
}

// ---------------------------------------------------------------------------
// dense matrix file

namespace {

constexpr std::array<char, 8> kDenseMagic{'D', 'P', 'C', 'G', 'E', 'N', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v)
{
    std::array<char, 8> b{};
    for (std::size_t i = 0; i < 8; ++i) {
        b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    }
    out.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& in)
{
    std::array<unsigned char, 8> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 8)) {
        throw std::runtime_error("read_dense_matrix: truncated header");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        v |= std::uint64_t{b[i]} << (8 * i);
    }
    return v;
}

} // namespace

void write_dense_matrix(std::ostream& out, const DenseBitMatrix& m)
{
    out.write(kDenseMagic.data(), kDenseMagic.size());
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    const std::size_t bytes = (m.cols() + 7) / 8;
    std::vector<char> buf(bytes);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::fill(buf.begin(), buf.end(), 0);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (m.get(r, c)) {
                buf[c / 8] = static_cast<char>(buf[c / 8] | (0x80 >> (c % 8)));
            }
        }
        out.write(buf.data(), static_cast<std::streamsize>(bytes));
    }
}

DenseBitMatrix read_dense_matrix(std::istream& in)
{
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kDenseMagic) {
        throw std::runtime_error("read_dense_matrix: bad magic");
    }
    const auto rows = static_cast<std::size_t>(get_u64(in));
    const auto cols = static_cast<std::size_t>(get_u64(in));
    DenseBitMatrix m(rows, cols);
    const std::size_t bytes = (cols + 7) / 8;
    std::vector<unsigned char> buf(bytes);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes))) {
            throw std::runtime_error("read_dense_matrix: truncated body");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if ((buf[c / 8] >> (7 - c % 8)) & 1U) {
                m.set(r, c, true);
            }
        }
    }
    return m;
}

} // namespace dpc
