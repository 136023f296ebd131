#pragma once

#include <cstdint>

#ifdef HCG_HAVE_OPENBLAS
#include <cblas.h>
#endif

namespace hcg {

// Row-major GEMM wrappers. Each call computes with a fixed summation order,
// so results do not depend on the process-wide worker count.

#ifdef HCG_HAVE_OPENBLAS

inline void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const float* a, const float* b,
                    float* c, float beta = 0.0f) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), 1.0f, a, static_cast<int>(k), b, static_cast<int>(n), beta, c,
                static_cast<int>(n));
}

inline void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const double* a, const double* b,
                    double* c, double beta = 0.0) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), 1.0, a, static_cast<int>(k), b, static_cast<int>(n), beta, c,
                static_cast<int>(n));
}

/// c(m,n) += / = a(m,k) * b(n,k)^T
inline void gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k, const float* a, const float* b,
                    float* c, float beta = 0.0f) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), 1.0f, a, static_cast<int>(k), b, static_cast<int>(k), beta, c,
                static_cast<int>(n));
}

inline void gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k, const double* a, const double* b,
                    double* c, double beta = 0.0) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), 1.0, a, static_cast<int>(k), b, static_cast<int>(k), beta, c,
                static_cast<int>(n));
}

/// c(m,n) += / = a(k,m)^T * b(k,n)
inline void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k, const float* a, const float* b,
                    float* c, float beta = 0.0f) {
    cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), 1.0f, a, static_cast<int>(m), b, static_cast<int>(n), beta, c,
                static_cast<int>(n));
}

inline void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k, const double* a, const double* b,
                    double* c, double beta = 0.0) {
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), 1.0, a, static_cast<int>(m), b, static_cast<int>(n), beta, c,
                static_cast<int>(n));
}

#else  // portable fallback

template <typename T>
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const T* a, const T* b, T* c,
             T beta = T(0)) {
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) c[i * n + j] *= beta;
        for (std::int64_t p = 0; p < k; ++p) {
            const T av = a[i * k + p];
            if (av == T(0)) continue;
            const T* brow = b + p * n;
            T* crow = c + i * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
void gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k, const T* a, const T* b, T* c,
             T beta = T(0)) {
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
            T acc = 0;
            for (std::int64_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
            c[i * n + j] = beta * c[i * n + j] + acc;
        }
    }
}

template <typename T>
void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k, const T* a, const T* b, T* c,
             T beta = T(0)) {
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) c[i * n + j] *= beta;
    }
    for (std::int64_t p = 0; p < k; ++p) {
        for (std::int64_t i = 0; i < m; ++i) {
            const T av = a[p * m + i];
            if (av == T(0)) continue;
            const T* brow = b + p * n;
            T* crow = c + i * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

#endif

/// Unrolls one image (c,h,w) into a (c*kh*kw) x (oh*ow) patch matrix.
/// Out-of-bounds taps are zero (zero padding).
template <typename T>
void im2col(const T* x, std::int64_t c, std::int64_t h, std::int64_t w, std::int64_t kh,
            std::int64_t kw, std::int64_t stride, std::int64_t pad, std::int64_t dil,
            std::int64_t oh, std::int64_t ow, T* cols) {
    const std::int64_t span = oh * ow;
    for (std::int64_t ci = 0; ci < c; ++ci) {
        for (std::int64_t ky = 0; ky < kh; ++ky) {
            for (std::int64_t kx = 0; kx < kw; ++kx) {
                T* row = cols + ((ci * kh + ky) * kw + kx) * span;
                for (std::int64_t oy = 0; oy < oh; ++oy) {
                    const std::int64_t iy = oy * stride - pad + ky * dil;
                    if (iy < 0 || iy >= h) {
                        for (std::int64_t ox = 0; ox < ow; ++ox) row[oy * ow + ox] = T(0);
                        continue;
                    }
                    const T* src = x + (ci * h + iy) * w;
                    for (std::int64_t ox = 0; ox < ow; ++ox) {
                        const std::int64_t ix = ox * stride - pad + kx * dil;
                        row[oy * ow + ox] = (ix < 0 || ix >= w) ? T(0) : src[ix];
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col: scatter-adds a patch matrix back onto the (c,h,w) image.
template <typename T>
void col2im_add(const T* cols, std::int64_t c, std::int64_t h, std::int64_t w, std::int64_t kh,
                std::int64_t kw, std::int64_t stride, std::int64_t pad, std::int64_t dil,
                std::int64_t oh, std::int64_t ow, T* x) {
    const std::int64_t span = oh * ow;
    for (std::int64_t ci = 0; ci < c; ++ci) {
        for (std::int64_t ky = 0; ky < kh; ++ky) {
            for (std::int64_t kx = 0; kx < kw; ++kx) {
                const T* row = cols + ((ci * kh + ky) * kw + kx) * span;
                for (std::int64_t oy = 0; oy < oh; ++oy) {
                    const std::int64_t iy = oy * stride - pad + ky * dil;
                    if (iy < 0 || iy >= h) continue;
                    T* dst = x + (ci * h + iy) * w;
                    for (std::int64_t ox = 0; ox < ow; ++ox) {
                        const std::int64_t ix = ox * stride - pad + kx * dil;
                        if (ix >= 0 && ix < w) dst[ix] += row[oy * ow + ox];
                    }
                }
            }
        }
    }
}

}  // namespace hcg
