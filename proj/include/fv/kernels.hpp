#pragma once

#include <cstdint>

#include "fv/tensor.hpp"

// Low-level numeric kernels. Every kernel comes in one body that runs either
// serially or under OpenMP, selected per call (or by the global mode). The
// parallel path splits work only across independent output elements and
// keeps the per-element arithmetic order fixed, so serial and parallel
// results are bit-identical — that property is asserted in the tests and is
// what makes training runs reproducible regardless of thread count.

namespace fv::kernels {

enum class Mode { serial, parallel };

void set_mode(Mode m);
Mode mode();
bool par_default();

// ---- GEMM -----------------------------------------------------------------

// C (M x N) = (accumulate ? C : 0) + A (M x K) * B (K x N).
// ikj order: each C row accumulates over k ascending; the j loop vectorizes
// without reassociation.
template <typename T>
void gemm_nn(const T* A, const T* B, T* C, std::int64_t M, std::int64_t K,
             std::int64_t N, bool accumulate, bool par);

// C (M x N) = (accumulate ? C : 0) + A (M x K) * B^T, with B stored (N x K).
template <typename T>
void gemm_nt(const T* A, const T* B, T* C, std::int64_t M, std::int64_t K,
             std::int64_t N, bool accumulate, bool par);

// OUT (N x M) = transpose of A (M x N).
template <typename T>
void transpose(const T* A, T* out, std::int64_t M, std::int64_t N, bool par);

// ---- im2col / col2im --------------------------------------------------------

// Single image (C, H, W) -> col (C*k*k, OH*OW) for a k x k kernel with the
// given stride and padding. OH = (H + 2p - k) / s + 1.
template <typename T>
void im2col(const T* img, T* col, std::int64_t C, std::int64_t H, std::int64_t W,
            std::int64_t k, std::int64_t stride, std::int64_t pad);

// Scatter-add inverse of im2col: col (C*k*k, OH*OW) -> img (C, H, W).
// img is overwritten (zeroed first). Accumulation order is fixed.
template <typename T>
void col2im(const T* col, T* img, std::int64_t C, std::int64_t H, std::int64_t W,
            std::int64_t k, std::int64_t stride, std::int64_t pad);

inline std::int64_t conv_out_dim(std::int64_t in, std::int64_t k, std::int64_t stride,
                                 std::int64_t pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// ---- elementwise ------------------------------------------------------------

template <typename T>
void relu_forward(T* x, std::int64_t n, bool par);

// dx (in place on grad): grad *= (activation_out > 0).
template <typename T>
void relu_backward(const T* y, T* grad, std::int64_t n, bool par);

template <typename T>
void leaky_relu_forward(T* x, std::int64_t n, T slope, bool par);

template <typename T>
void leaky_relu_backward(const T* y, T* grad, std::int64_t n, T slope, bool par);

// Y (rows x cols) += bias broadcast over rows.
template <typename T>
void add_bias_rows(T* y, const T* bias, std::int64_t rows, std::int64_t cols, bool par);

// Image batch (B, C, H, W) += bias per channel.
template <typename T>
void add_bias_channels(T* y, const T* bias, std::int64_t B, std::int64_t C,
                       std::int64_t HW, bool par);

// dbias[c] += sum over rows of grad (rows x cols); fixed summation order.
template <typename T>
void bias_grad_rows(const T* grad, T* dbias, std::int64_t rows, std::int64_t cols, bool par);

template <typename T>
void bias_grad_channels(const T* grad, T* dbias, std::int64_t B, std::int64_t C,
                        std::int64_t HW, bool par);

template <typename T>
void axpy(T alpha, const T* x, T* y, std::int64_t n, bool par);

}  // namespace fv::kernels
