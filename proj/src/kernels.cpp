#include "fv/kernels.hpp"

#include <atomic>
#include <cstring>

namespace fv::kernels {

namespace {
std::atomic<Mode> g_mode{Mode::parallel};
}

void set_mode(Mode m) { g_mode.store(m, std::memory_order_relaxed); }
Mode mode() { return g_mode.load(std::memory_order_relaxed); }
bool par_default() { return mode() == Mode::parallel; }

template <typename T>
void gemm_nn(const T* A, const T* B, T* C, std::int64_t M, std::int64_t K,
             std::int64_t N, bool accumulate, bool par) {
#pragma omp parallel for schedule(static) if (par && M > 1)
    for (std::int64_t i = 0; i < M; ++i) {
        T* crow = C + i * N;
        if (!accumulate) {
            for (std::int64_t j = 0; j < N; ++j) crow[j] = T{0};
        }
        const T* arow = A + i * K;
        for (std::int64_t k = 0; k < K; ++k) {
            const T a = arow[k];
            const T* brow = B + k * N;
            for (std::int64_t j = 0; j < N; ++j) crow[j] += a * brow[j];
        }
    }
}

namespace {

// Eight-lane dot product with a fixed combine order. Deterministic for a
// given K, and wide enough for the compiler to vectorize each lane.
template <typename T>
inline T dot_lanes(const T* a, const T* b, std::int64_t K) {
    T acc[8] = {T{0}, T{0}, T{0}, T{0}, T{0}, T{0}, T{0}, T{0}};
    std::int64_t k = 0;
    for (; k + 8 <= K; k += 8) {
        for (int u = 0; u < 8; ++u) acc[u] += a[k + u] * b[k + u];
    }
    for (int u = 0; k < K; ++k, ++u) acc[u] += a[k] * b[k];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

}  // namespace

template <typename T>
void gemm_nt(const T* A, const T* B, T* C, std::int64_t M, std::int64_t K,
             std::int64_t N, bool accumulate, bool par) {
#pragma omp parallel for schedule(static) if (par && M > 1)
    for (std::int64_t i = 0; i < M; ++i) {
        const T* arow = A + i * K;
        T* crow = C + i * N;
        for (std::int64_t j = 0; j < N; ++j) {
            const T d = dot_lanes(arow, B + j * K, K);
            crow[j] = accumulate ? crow[j] + d : d;
        }
    }
}

template <typename T>
void transpose(const T* A, T* out, std::int64_t M, std::int64_t N, bool par) {
#pragma omp parallel for schedule(static) if (par && N > 1)
    for (std::int64_t j = 0; j < N; ++j) {
        for (std::int64_t i = 0; i < M; ++i) out[j * M + i] = A[i * N + j];
    }
}

template <typename T>
void im2col(const T* img, T* col, std::int64_t C, std::int64_t H, std::int64_t W,
            std::int64_t k, std::int64_t stride, std::int64_t pad) {
    const std::int64_t OH = conv_out_dim(H, k, stride, pad);
    const std::int64_t OW = conv_out_dim(W, k, stride, pad);
    const std::int64_t P = OH * OW;
    for (std::int64_t c = 0; c < C; ++c) {
        for (std::int64_t ky = 0; ky < k; ++ky) {
            for (std::int64_t kx = 0; kx < k; ++kx) {
                T* crow = col + ((c * k + ky) * k + kx) * P;
                for (std::int64_t oy = 0; oy < OH; ++oy) {
                    const std::int64_t iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) {
                        for (std::int64_t ox = 0; ox < OW; ++ox) crow[oy * OW + ox] = T{0};
                        continue;
                    }
                    const T* irow = img + (c * H + iy) * W;
                    for (std::int64_t ox = 0; ox < OW; ++ox) {
                        const std::int64_t ix = ox * stride - pad + kx;
                        crow[oy * OW + ox] = (ix < 0 || ix >= W) ? T{0} : irow[ix];
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im(const T* col, T* img, std::int64_t C, std::int64_t H, std::int64_t W,
            std::int64_t k, std::int64_t stride, std::int64_t pad) {
    const std::int64_t OH = conv_out_dim(H, k, stride, pad);
    const std::int64_t OW = conv_out_dim(W, k, stride, pad);
    const std::int64_t P = OH * OW;
    std::memset(img, 0, static_cast<std::size_t>(C * H * W) * sizeof(T));
    for (std::int64_t c = 0; c < C; ++c) {
        for (std::int64_t ky = 0; ky < k; ++ky) {
            for (std::int64_t kx = 0; kx < k; ++kx) {
                const T* crow = col + ((c * k + ky) * k + kx) * P;
                for (std::int64_t oy = 0; oy < OH; ++oy) {
                    const std::int64_t iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) continue;
                    T* irow = img + (c * H + iy) * W;
                    for (std::int64_t ox = 0; ox < OW; ++ox) {
                        const std::int64_t ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < W) irow[ix] += crow[oy * OW + ox];
                    }
                }
            }
        }
    }
}

template <typename T>
void relu_forward(T* x, std::int64_t n, bool par) {
#pragma omp parallel for schedule(static) if (par && n > 16384)
    for (std::int64_t i = 0; i < n; ++i) {
        if (x[i] < T{0}) x[i] = T{0};
    }
}

template <typename T>
void relu_backward(const T* y, T* grad, std::int64_t n, bool par) {
#pragma omp parallel for schedule(static) if (par && n > 16384)
    for (std::int64_t i = 0; i < n; ++i) {
        if (y[i] <= T{0}) grad[i] = T{0};
    }
}

template <typename T>
void leaky_relu_forward(T* x, std::int64_t n, T slope, bool par) {
#pragma omp parallel for schedule(static) if (par && n > 16384)
    for (std::int64_t i = 0; i < n; ++i) {
        if (x[i] < T{0}) x[i] *= slope;
    }
}

template <typename T>
void leaky_relu_backward(const T* y, T* grad, std::int64_t n, T slope, bool par) {
#pragma omp parallel for schedule(static) if (par && n > 16384)
    for (std::int64_t i = 0; i < n; ++i) {
        if (y[i] < T{0}) grad[i] *= slope;
    }
}

template <typename T>
void add_bias_rows(T* y, const T* bias, std::int64_t rows, std::int64_t cols, bool par) {
#pragma omp parallel for schedule(static) if (par && rows > 1)
    for (std::int64_t r = 0; r < rows; ++r) {
        T* yr = y + r * cols;
        for (std::int64_t c = 0; c < cols; ++c) yr[c] += bias[c];
    }
}

template <typename T>
void add_bias_channels(T* y, const T* bias, std::int64_t B, std::int64_t C,
                       std::int64_t HW, bool par) {
#pragma omp parallel for schedule(static) if (par && B > 1)
    for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t c = 0; c < C; ++c) {
            T* p = y + (b * C + c) * HW;
            const T v = bias[c];
            for (std::int64_t i = 0; i < HW; ++i) p[i] += v;
        }
    }
}

template <typename T>
void bias_grad_rows(const T* grad, T* dbias, std::int64_t rows, std::int64_t cols, bool par) {
#pragma omp parallel for schedule(static) if (par && cols > 64)
    for (std::int64_t c = 0; c < cols; ++c) {
        T acc = T{0};
        for (std::int64_t r = 0; r < rows; ++r) acc += grad[r * cols + c];
        dbias[c] += acc;
    }
}

template <typename T>
void bias_grad_channels(const T* grad, T* dbias, std::int64_t B, std::int64_t C,
                        std::int64_t HW, bool par) {
#pragma omp parallel for schedule(static) if (par && C > 1)
    for (std::int64_t c = 0; c < C; ++c) {
        T acc = T{0};
        for (std::int64_t b = 0; b < B; ++b) {
            const T* p = grad + (b * C + c) * HW;
            for (std::int64_t i = 0; i < HW; ++i) acc += p[i];
        }
        dbias[c] += acc;
    }
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::int64_t n, bool par) {
#pragma omp parallel for schedule(static) if (par && n > 16384)
    for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Explicit instantiations for the two scalar types used in the project.
#define FV_INSTANTIATE(T)                                                                   \
    template void gemm_nn<T>(const T*, const T*, T*, std::int64_t, std::int64_t,            \
                             std::int64_t, bool, bool);                                     \
    template void gemm_nt<T>(const T*, const T*, T*, std::int64_t, std::int64_t,            \
                             std::int64_t, bool, bool);                                     \
    template void transpose<T>(const T*, T*, std::int64_t, std::int64_t, bool);             \
    template void im2col<T>(const T*, T*, std::int64_t, std::int64_t, std::int64_t,         \
                            std::int64_t, std::int64_t, std::int64_t);                      \
    template void col2im<T>(const T*, T*, std::int64_t, std::int64_t, std::int64_t,         \
                            std::int64_t, std::int64_t, std::int64_t);                      \
    template void relu_forward<T>(T*, std::int64_t, bool);                                  \
    template void relu_backward<T>(const T*, T*, std::int64_t, bool);                       \
    template void leaky_relu_forward<T>(T*, std::int64_t, T, bool);                         \
    template void leaky_relu_backward<T>(const T*, T*, std::int64_t, T, bool);              \
    template void add_bias_rows<T>(T*, const T*, std::int64_t, std::int64_t, bool);         \
    template void add_bias_channels<T>(T*, const T*, std::int64_t, std::int64_t,            \
                                       std::int64_t, bool);                                 \
    template void bias_grad_rows<T>(const T*, T*, std::int64_t, std::int64_t, bool);        \
    template void bias_grad_channels<T>(const T*, T*, std::int64_t, std::int64_t,           \
                                        std::int64_t, bool);                                \
    template void axpy<T>(T, const T*, T*, std::int64_t, bool);

FV_INSTANTIATE(float)
FV_INSTANTIATE(double)
#undef FV_INSTANTIATE

}  // namespace fv::kernels
