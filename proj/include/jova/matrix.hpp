// Dense row-major matrices and the seedable RNG used everywhere else.
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace jova {

struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, size rows*cols

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row_ptr(std::size_t i) { return data.data() + i * cols; }
    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const;
};

enum class ElemOp { add, sub, mul };

// Standard product; throws std::invalid_argument naming both shapes on mismatch.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// c = a^T * b without materializing the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);

// c = a * b^T without materializing the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);

// Pointwise op over identically shaped matrices.
DenseMatrix elementwise(const DenseMatrix& a, const DenseMatrix& b, ElemOp op);

// Deterministic seed derivation for independent streams (splitmix64 based).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Seedable generator. Identical seed yields an identical stream of uniform
// and standard-normal draws; fork() derives independent child streams.
// Single-owner: never share one instance across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // N(0, 1) via Box-Muller, spare cached.
    double normal();

    // Uniform integer in [0, n), rejection sampled (unbiased).
    std::uint64_t uniform_below(std::uint64_t n);

    Rng fork(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Matrix of i.i.d. N(0,1) draws, filled row-major.
DenseMatrix sample_standard_normal(Rng& rng, std::size_t rows, std::size_t cols);

}  // namespace jova
