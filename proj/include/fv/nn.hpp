#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fv/kernels.hpp"
#include "fv/rng.hpp"
#include "fv/tensor.hpp"

// Layer primitives with explicit forward/backward passes. Gradients
// accumulate into per-layer buffers; parameter updates live in the
// optimiser. Convolutions use im2col + GEMM; all batch-level parallelism
// keeps per-element arithmetic order fixed (see kernels.hpp).

namespace fv::nn {

namespace k = fv::kernels;

constexpr std::int64_t kKernel = 4;
constexpr std::int64_t kStride = 2;
constexpr std::int64_t kPad = 1;

// Fan-in scaled uniform init: U(-sqrt(3/fan_in), sqrt(3/fan_in)).
template <typename T>
void lecun_uniform_init(Tensor<T>& w, std::int64_t fan_in, CounterRng& rng) {
    const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
    for (std::int64_t i = 0; i < w.numel(); ++i) {
        w[i] = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
    }
}

template <typename T>
struct Dense {
    Tensor<T> W, b, dW, db;  // W: (out, in)
    std::int64_t in = 0, out = 0;

    void init(std::int64_t in_dim, std::int64_t out_dim, CounterRng& rng, bool zero = false) {
        in = in_dim;
        out = out_dim;
        W = Tensor<T>({out, in});
        b = Tensor<T>({out});
        dW = Tensor<T>({out, in});
        db = Tensor<T>({out});
        if (!zero) lecun_uniform_init(W, in, rng);
    }

    // y (B, out) = x (B, in) * W^T + b
    void forward(const Tensor<T>& x, Tensor<T>& y, bool par) const {
        const std::int64_t B = x.dim(0);
        y = Tensor<T>({B, out});
        k::gemm_nt(x.data(), W.data(), y.data(), B, in, out, false, par);
        k::add_bias_rows(y.data(), b.data(), B, out, par);
    }

    // Accumulates dW/db; writes dx if non-null.
    void backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx, bool par) {
        const std::int64_t B = x.dim(0);
        Tensor<T> dyt({out, B});
        k::transpose(dy.data(), dyt.data(), B, out, par);
        k::gemm_nn(dyt.data(), x.data(), dW.data(), out, B, in, true, par);
        k::bias_grad_rows(dy.data(), db.data(), B, out, par);
        if (dx) {
            *dx = Tensor<T>({B, in});
            k::gemm_nn(dy.data(), W.data(), dx->data(), B, out, in, false, par);
        }
    }

    void zero_grad() {
        dW.zero();
        db.zero();
    }
};

// 4x4 stride-2 convolution (spatial halving). Weight is stored in GEMM
// layout (C_out, C_in * k * k).
template <typename T>
struct Conv2d {
    Tensor<T> W, b, dW, db;
    std::int64_t cin = 0, cout = 0;

    void init(std::int64_t in_ch, std::int64_t out_ch, CounterRng& rng) {
        cin = in_ch;
        cout = out_ch;
        const std::int64_t kk = kKernel * kKernel;
        W = Tensor<T>({cout, cin * kk});
        b = Tensor<T>({cout});
        dW = Tensor<T>({cout, cin * kk});
        db = Tensor<T>({cout});
        lecun_uniform_init(W, cin * kk, rng);
    }

    // x (B, cin, H, W) -> y (B, cout, H/2, W/2). cols is the im2col cache
    // reused by backward: (B, cin*k*k, OH*OW).
    void forward(const Tensor<T>& x, Tensor<T>& y, Tensor<T>& cols, bool par) const {
        const std::int64_t B = x.dim(0), H = x.dim(2), Wd = x.dim(3);
        const std::int64_t OH = k::conv_out_dim(H, kKernel, kStride, kPad);
        const std::int64_t OW = k::conv_out_dim(Wd, kKernel, kStride, kPad);
        const std::int64_t P = OH * OW;
        const std::int64_t ck = cin * kKernel * kKernel;
        y = Tensor<T>({B, cout, OH, OW});
        cols = Tensor<T>({B, ck, P});
#pragma omp parallel for schedule(static) if (par && B > 1)
        for (std::int64_t i = 0; i < B; ++i) {
            T* col = cols.data() + i * ck * P;
            k::im2col(x.data() + i * cin * H * Wd, col, cin, H, Wd, kKernel, kStride, kPad);
            k::gemm_nn(W.data(), col, y.data() + i * cout * P, cout, ck, P, false, false);
        }
        k::add_bias_channels(y.data(), b.data(), B, cout, P, par);
    }

    // dy (B, cout, OH, OW); cols from forward. Writes dx if non-null.
    void backward(const Tensor<T>& dy, const Tensor<T>& cols, Tensor<T>* dx,
                  std::int64_t H, std::int64_t Wd, bool par) {
        const std::int64_t B = dy.dim(0), OH = dy.dim(2), OW = dy.dim(3);
        const std::int64_t P = OH * OW;
        const std::int64_t ck = cin * kKernel * kKernel;
        k::bias_grad_channels(dy.data(), db.data(), B, cout, P, par);
        // Weight gradient: serial over batch items keeps accumulation order
        // fixed; the GEMM parallelises over output rows.
        for (std::int64_t i = 0; i < B; ++i) {
            k::gemm_nt(dy.data() + i * cout * P, cols.data() + i * ck * P, dW.data(), cout, P,
                       ck, true, par);
        }
        if (dx) {
            *dx = Tensor<T>({B, cin, H, Wd});
            Tensor<T> Wt({ck, cout});
            k::transpose(W.data(), Wt.data(), cout, ck, par);
#pragma omp parallel for schedule(static) if (par && B > 1)
            for (std::int64_t i = 0; i < B; ++i) {
                Tensor<T> colgrad({ck, P});
                k::gemm_nn(Wt.data(), dy.data() + i * cout * P, colgrad.data(), ck, cout, P,
                           false, false);
                k::col2im(colgrad.data(), dx->data() + i * cin * H * Wd, cin, H, Wd, kKernel,
                          kStride, kPad);
            }
        }
    }

    void zero_grad() {
        dW.zero();
        db.zero();
    }
};

// 4x4 stride-2 transposed convolution (spatial doubling); the adjoint of
// Conv2d. Weight layout (C_in, C_out * k * k).
template <typename T>
struct ConvTranspose2d {
    Tensor<T> W, b, dW, db;
    std::int64_t cin = 0, cout = 0;

    void init(std::int64_t in_ch, std::int64_t out_ch, CounterRng& rng) {
        cin = in_ch;
        cout = out_ch;
        const std::int64_t kk = kKernel * kKernel;
        W = Tensor<T>({cin, cout * kk});
        b = Tensor<T>({cout});
        dW = Tensor<T>({cin, cout * kk});
        db = Tensor<T>({cout});
        // Each output pixel receives cin * (k/stride)^2 contributions.
        lecun_uniform_init(W, cin * (kKernel / kStride) * (kKernel / kStride), rng);
    }

    // x (B, cin, h, w) -> y (B, cout, 2h, 2w)
    void forward(const Tensor<T>& x, Tensor<T>& y, bool par) const {
        const std::int64_t B = x.dim(0), h = x.dim(2), w = x.dim(3);
        const std::int64_t H = h * kStride, Wd = w * kStride;
        const std::int64_t P = h * w;
        const std::int64_t ck = cout * kKernel * kKernel;
        y = Tensor<T>({B, cout, H, Wd});
        Tensor<T> Wt({ck, cin});
        k::transpose(W.data(), Wt.data(), cin, ck, par);
#pragma omp parallel for schedule(static) if (par && B > 1)
        for (std::int64_t i = 0; i < B; ++i) {
            Tensor<T> cols({ck, P});
            k::gemm_nn(Wt.data(), x.data() + i * cin * P, cols.data(), ck, cin, P, false, false);
            k::col2im(cols.data(), y.data() + i * cout * H * Wd, cout, H, Wd, kKernel, kStride,
                      kPad);
        }
        k::add_bias_channels(y.data(), b.data(), B, cout, H * Wd, par);
    }

    void backward(const Tensor<T>& dy, const Tensor<T>& x, Tensor<T>* dx, bool par) {
        const std::int64_t B = dy.dim(0), H = dy.dim(2), Wd = dy.dim(3);
        const std::int64_t h = H / kStride, w = Wd / kStride;
        const std::int64_t P = h * w;
        const std::int64_t ck = cout * kKernel * kKernel;
        k::bias_grad_channels(dy.data(), db.data(), B, cout, H * Wd, par);
        Tensor<T> dcols({B, ck, P});
#pragma omp parallel for schedule(static) if (par && B > 1)
        for (std::int64_t i = 0; i < B; ++i) {
            k::im2col(dy.data() + i * cout * H * Wd, dcols.data() + i * ck * P, cout, H, Wd,
                      kKernel, kStride, kPad);
        }
        if (dx) {
            *dx = Tensor<T>({B, cin, h, w});
#pragma omp parallel for schedule(static) if (par && B > 1)
            for (std::int64_t i = 0; i < B; ++i) {
                k::gemm_nn(W.data(), dcols.data() + i * ck * P, dx->data() + i * cin * P, cin,
                           ck, P, false, false);
            }
        }
        for (std::int64_t i = 0; i < B; ++i) {
            k::gemm_nt(x.data() + i * cin * P, dcols.data() + i * ck * P, dW.data(), cin, P, ck,
                       true, par);
        }
    }

    void zero_grad() {
        dW.zero();
        db.zero();
    }
};

}  // namespace fv::nn
