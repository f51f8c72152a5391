#include "jova/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace jova {

std::string DenseMatrix::shape_str() const {
    return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

namespace {

void require_nonempty(const DenseMatrix& m, const char* who) {
    if (m.rows == 0 || m.cols == 0) {
        throw std::invalid_argument(std::string(who) + ": empty matrix " + m.shape_str());
    }
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    require_nonempty(a, "matmul");
    require_nonempty(b, "matmul");
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: dimension mismatch " + a.shape_str() + " * " +
                                    b.shape_str());
    }
    DenseMatrix c(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    require_nonempty(a, "matmul_tn");
    require_nonempty(b, "matmul_tn");
    if (a.rows != b.rows) {
        throw std::invalid_argument("matmul_tn: dimension mismatch " + a.shape_str() + "^T * " +
                                    b.shape_str());
    }
    DenseMatrix c(a.cols, b.cols, 0.0);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row_ptr(k);
        const double* brow = b.row_ptr(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.row_ptr(i);
            for (std::size_t j = 0; j < b.cols; ++j) {
                crow[j] += aki * brow[j];
            }
        }
    }
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    require_nonempty(a, "matmul_nt");
    require_nonempty(b, "matmul_nt");
    if (a.cols != b.cols) {
        throw std::invalid_argument("matmul_nt: dimension mismatch " + a.shape_str() + " * " +
                                    b.shape_str() + "^T");
    }
    DenseMatrix c(a.rows, b.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) {
                acc += arow[k] * brow[k];
            }
            crow[j] = acc;
        }
    }
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            t(j, i) = a(i, j);
        }
    }
    return t;
}

DenseMatrix elementwise(const DenseMatrix& a, const DenseMatrix& b, ElemOp op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("elementwise: shape mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
    }
    DenseMatrix c(a.rows, a.cols);
    const std::size_t n = a.data.size();
    switch (op) {
        case ElemOp::add:
            for (std::size_t i = 0; i < n; ++i) c.data[i] = a.data[i] + b.data[i];
            break;
        case ElemOp::sub:
            for (std::size_t i = 0; i < n; ++i) c.data[i] = a.data[i] - b.data[i];
            break;
        case ElemOp::mul:
            for (std::size_t i = 0; i < n; ++i) c.data[i] = a.data[i] * b.data[i];
            break;
    }
    return c;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined state
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 in (0,1] so log() stays finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

DenseMatrix sample_standard_normal(Rng& rng, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) {
        throw std::invalid_argument("sample_standard_normal: rows and cols must be positive");
    }
    DenseMatrix m(rows, cols);
    for (double& v : m.data) v = rng.normal();
    return m;
}

}  // namespace jova
