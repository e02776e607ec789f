// Binary vectors, sparse GF(2) matrices and the elimination routines used by
// the shaping code and the LDPC encoder.
//
// Bit order: index 0 is the first transmitted position everywhere. External
// text formats (hex) write index 0 as the most significant bit.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dpc {

class BitVector {
public:
    BitVector() = default;
    explicit BitVector(std::size_t length, bool value = false);

    /// Takes ownership of a 0/1 byte sequence; any other byte value throws.
    static BitVector from_bits(std::vector<std::uint8_t> bits);
    /// Parses "0110..." (whitespace ignored).
    static BitVector from_string(std::string_view text);
    /// Inverse of to_hex(); `length` trims the nibble padding.
    static BitVector from_hex(std::string_view hex, std::size_t length);
    static BitVector concat(std::span<const BitVector> parts);

    std::size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }

    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }
    void flip(std::size_t i) { bits_[i] ^= 1; }

    std::span<const std::uint8_t> bits() const { return bits_; }

    BitVector slice(std::size_t pos, std::size_t len) const;
    std::size_t count() const;
    bool any() const { return count() != 0; }

    BitVector& operator^=(const BitVector& other);
    friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }
    friend bool operator==(const BitVector&, const BitVector&) = default;

    std::string to_string() const;
    /// Hex with bit 0 as the MSB of the first nibble, zero-padded to a nibble.
    std::string to_hex() const;

private:
    std::vector<std::uint8_t> bits_;
};

std::size_t hamming_distance(const BitVector& a, const BitVector& b);

/// Row-major packed dense bit matrix. Used for elimination and for the LDPC
/// generator; rows are padded to a whole number of 64-bit words.
class DenseBitMatrix {
public:
    DenseBitMatrix() = default;
    DenseBitMatrix(std::size_t rows, std::size_t cols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t words_per_row() const { return words_; }

    bool get(std::size_t r, std::size_t c) const
    {
        return (data_[r * words_ + c / 64] >> (c % 64)) & 1U;
    }
    void set(std::size_t r, std::size_t c, bool value);
    void flip(std::size_t r, std::size_t c) { data_[r * words_ + c / 64] ^= std::uint64_t{1} << (c % 64); }

    std::span<std::uint64_t> row(std::size_t r) { return {data_.data() + r * words_, words_}; }
    std::span<const std::uint64_t> row(std::size_t r) const { return {data_.data() + r * words_, words_}; }

    /// row(dst) ^= row(src)
    void xor_rows(std::size_t dst, std::size_t src);
    void swap_rows(std::size_t a, std::size_t b);
    bool row_is_zero(std::size_t r) const;

    BitVector multiply(const BitVector& v) const;
    DenseBitMatrix transpose() const;

    friend bool operator==(const DenseBitMatrix&, const DenseBitMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> data_;
};

/// Result of in-place Gauss-Jordan elimination processed row by row.
/// `pivot_of_row[r]` is the pivot column of original row r, or -1 when row r
/// was a GF(2) combination of rows before it (it is left as zero).
struct EliminationResult {
    std::vector<std::ptrdiff_t> pivot_of_row;
    std::size_t rank = 0;

    std::vector<std::size_t> dependent_rows() const;
};

/// Reduces `m` in place to reduced row-echelon form without reordering rows.
EliminationResult gauss_jordan(DenseBitMatrix& m);

/// Sparse GF(2) matrix stored as sorted row and column adjacency lists.
class Gf2Matrix {
public:
    using Entry = std::pair<std::size_t, std::size_t>;

    Gf2Matrix() = default;
    /// Throws on duplicate or out-of-range positions.
    Gf2Matrix(std::size_t rows, std::size_t cols, std::span<const Entry> entries);

    static Gf2Matrix identity(std::size_t n);
    static Gf2Matrix from_dense(const DenseBitMatrix& dense);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return nnz_; }

    std::span<const std::uint32_t> row(std::size_t r) const { return row_adj_[r]; }
    std::span<const std::uint32_t> col(std::size_t c) const { return col_adj_[c]; }
    bool contains(std::size_t r, std::size_t c) const;

    std::vector<Entry> entries() const;
    DenseBitMatrix to_dense() const;
    /// Column j of the result is column perm[j] of this matrix.
    Gf2Matrix permute_columns(std::span<const std::size_t> perm) const;

    friend bool operator==(const Gf2Matrix& a, const Gf2Matrix& b)
    {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.row_adj_ == b.row_adj_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t nnz_ = 0;
    std::vector<std::vector<std::uint32_t>> row_adj_;
    std::vector<std::vector<std::uint32_t>> col_adj_;
};

BitVector mat_vec_mul(const Gf2Matrix& m, const BitVector& v);

struct RowReduction {
    Gf2Matrix reduced;
    std::vector<std::size_t> pivots;
    std::size_t rank = 0;
};

/// Reduced row-echelon form (zero rows moved to the bottom), pivot columns in
/// increasing order.
RowReduction row_reduce(const Gf2Matrix& m);

/// MacKay "alist" format: "cols rows", max column/row weights, column
/// weights, row weights, then per-column and per-row 1-based index lists.
/// Zero entries used as padding are skipped when reading.
Gf2Matrix read_alist(std::istream& in);
void write_alist(std::ostream& out, const Gf2Matrix& m);

/// Binary dense matrix file: 8-byte magic "DPCGEN01", u64 rows, u64 cols
/// (little-endian), then each row packed MSB-first into ceil(cols/8) bytes.
void write_dense_matrix(std::ostream& out, const DenseBitMatrix& m);
DenseBitMatrix read_dense_matrix(std::istream& in);

} // namespace dpc
