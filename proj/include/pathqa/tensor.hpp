#pragma once
// Minimal dense linear algebra for the reference models. Everything is f64;
// the models are tiny (d <= a few hundred) so clarity beats BLAS here.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace pathqa {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const Vec& x, Vec& y) {
    assert(x.size() == y.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
    for (double& v : x) v *= alpha;
}

// y = M x, with M stored row-major as rows*cols doubles.
inline void matvec(const double* m, size_t rows, size_t cols, const double* x, double* y) {
    for (size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        const double* row = m + r * cols;
        for (size_t c = 0; c < cols; ++c) s += row[c] * x[c];
        y[r] = s;
    }
}

// y = M^T x (x has `rows` entries, y has `cols`).
inline void matvec_t(const double* m, size_t rows, size_t cols, const double* x, double* y) {
    for (size_t c = 0; c < cols; ++c) y[c] = 0.0;
    for (size_t r = 0; r < rows; ++r) {
        const double* row = m + r * cols;
        for (size_t c = 0; c < cols; ++c) y[c] += row[c] * x[r];
    }
}

inline double sigmoid(double z) {
    if (z >= 0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

inline double clamp_prob(double p) {
    // Probabilities are clipped before logs; 1e-12 matches the other
    // numerical guards in the retriever.
    if (p < 1e-12) return 1e-12;
    if (p > 1.0 - 1e-12) return 1.0 - 1e-12;
    return p;
}

inline void fill_uniform(Vec& v, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& x : v) x = dist(rng);
}

}  // namespace pathqa
