#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "ssfi/error.hpp"
#include "ssfi/rng.hpp"
#include "ssfi/tensor.hpp"

namespace ssfi {

// ---------------------------------------------------------------------------
// 3x3 cross-correlation with zero same-padding. Kernels are stored
// [kh][kw][ci][co] so both hot loops stride contiguously over co.
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> conv2d(const Tensor<S>& in, std::span<const S> kernels, std::span<const S> bias,
                 long out_channels) {
    const long N = in.n(), H = in.h(), W = in.w(), Ci = in.c(), Co = out_channels;
    if (kernels.size() != static_cast<std::size_t>(9 * Ci * Co))
        throw argument_error("conv2d: kernel buffer does not match 3x3 x in x out channels");
    if (bias.size() != static_cast<std::size_t>(Co))
        throw argument_error("conv2d: bias size mismatch");

    Tensor<S> out(N, H, W, Co);
    for (long n = 0; n < N; ++n) {
        for (long y = 0; y < H; ++y) {
            for (long x = 0; x < W; ++x) {
                S* opx = &out.at(n, y, x, 0);
                for (long co = 0; co < Co; ++co) opx[co] = bias[co];
                for (long u = 0; u < 3; ++u) {
                    long iy = y + u - 1;
                    if (iy < 0 || iy >= H) continue;
                    for (long v = 0; v < 3; ++v) {
                        long ix = x + v - 1;
                        if (ix < 0 || ix >= W) continue;
                        const S* ipx = &in.at(n, iy, ix, 0);
                        const S* krow = kernels.data() + (u * 3 + v) * Ci * Co;
                        for (long ci = 0; ci < Ci; ++ci) {
                            S val = ipx[ci];
                            const S* k = krow + ci * Co;
                            for (long co = 0; co < Co; ++co) opx[co] += val * k[co];
                        }
                    }
                }
            }
        }
    }
    return out;
}

template <typename S>
struct ConvGrads {
    Tensor<S> dinput;
    std::vector<S> dkernels;
    std::vector<S> dbias;
};

template <typename S>
ConvGrads<S> conv2d_backward(const Tensor<S>& in, std::span<const S> kernels,
                             const Tensor<S>& dout) {
    const long N = in.n(), H = in.h(), W = in.w(), Ci = in.c(), Co = dout.c();
    if (dout.n() != N || dout.h() != H || dout.w() != W)
        throw argument_error("conv2d_backward: shape mismatch");
    if (kernels.size() != static_cast<std::size_t>(9 * Ci * Co))
        throw argument_error("conv2d_backward: kernel buffer size mismatch");

    ConvGrads<S> g;
    g.dinput = Tensor<S>(N, H, W, Ci);
    g.dkernels.assign(kernels.size(), S(0));
    g.dbias.assign(Co, S(0));

    for (long n = 0; n < N; ++n) {
        for (long y = 0; y < H; ++y) {
            for (long x = 0; x < W; ++x) {
                const S* dpx = &dout.at(n, y, x, 0);
                for (long co = 0; co < Co; ++co) g.dbias[co] += dpx[co];
                for (long u = 0; u < 3; ++u) {
                    long iy = y + u - 1;
                    if (iy < 0 || iy >= H) continue;
                    for (long v = 0; v < 3; ++v) {
                        long ix = x + v - 1;
                        if (ix < 0 || ix >= W) continue;
                        const S* ipx = &in.at(n, iy, ix, 0);
                        S* dipx = &g.dinput.at(n, iy, ix, 0);
                        const S* krow = kernels.data() + (u * 3 + v) * Ci * Co;
                        S* dkrow = g.dkernels.data() + (u * 3 + v) * Ci * Co;
                        for (long ci = 0; ci < Ci; ++ci) {
                            S val = ipx[ci];
                            const S* k = krow + ci * Co;
                            S* dk = dkrow + ci * Co;
                            S acc = 0;
                            for (long co = 0; co < Co; ++co) {
                                dk[co] += val * dpx[co];
                                acc += k[co] * dpx[co];
                            }
                            dipx[ci] += acc;
                        }
                    }
                }
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2. Ties go to the first element in row-major scan
// order, so the backward route is unambiguous.
// ---------------------------------------------------------------------------

template <typename S>
struct PoolResult {
    Tensor<S> out;
    std::vector<std::size_t> argmax;  // flat index into the input tensor
};

template <typename S>
PoolResult<S> maxpool2x2(const Tensor<S>& in) {
    const long N = in.n(), H = in.h(), W = in.w(), C = in.c();
    if (H % 2 != 0 || W % 2 != 0)
        throw argument_error("maxpool2x2 requires even spatial dimensions");

    PoolResult<S> r;
    r.out = Tensor<S>(N, H / 2, W / 2, C);
    r.argmax.resize(r.out.size());
    for (long n = 0; n < N; ++n) {
        for (long y = 0; y < H / 2; ++y) {
            for (long x = 0; x < W / 2; ++x) {
                for (long c = 0; c < C; ++c) {
                    S best = in.at(n, 2 * y, 2 * x, c);
                    long bu = 0, bv = 0;
                    for (long u = 0; u < 2; ++u) {
                        for (long v = 0; v < 2; ++v) {
                            S cand = in.at(n, 2 * y + u, 2 * x + v, c);
                            if (cand > best) {
                                best = cand;
                                bu = u;
                                bv = v;
                            }
                        }
                    }
                    r.out.at(n, y, x, c) = best;
                    std::size_t flat =
                        ((static_cast<std::size_t>(n) * H + (2 * y + bu)) * W + (2 * x + bv)) * C +
                        c;
                    r.argmax[((static_cast<std::size_t>(n) * (H / 2) + y) * (W / 2) + x) * C + c] =
                        flat;
                }
            }
        }
    }
    return r;
}

template <typename S>
Tensor<S> maxpool2x2_backward(const Tensor<S>& dout, const std::vector<std::size_t>& argmax,
                              const std::array<long, 4>& in_shape) {
    Tensor<S> din(in_shape[0], in_shape[1], in_shape[2], in_shape[3]);
    for (std::size_t i = 0; i < dout.size(); ++i) din.data[argmax[i]] += dout.data[i];
    return din;
}

// ---------------------------------------------------------------------------
// Per-channel batch normalization over (N, H, W). Train mode normalizes with
// biased batch statistics and decays them into the running buffers; infer
// mode is the affine map (x - running_mean) / sqrt(running_var + eps).
// ---------------------------------------------------------------------------

template <typename S>
struct BnCache {
    Tensor<S> xhat;
    std::vector<S> inv_std;  // per channel
    bool train_stats = false;
};

template <typename S>
Tensor<S> batchnorm_train(const Tensor<S>& in, std::span<const S> gamma, std::span<const S> beta,
                          std::span<S> running_mean, std::span<S> running_var, double momentum,
                          double eps, BnCache<S>& cache) {
    const long N = in.n(), H = in.h(), W = in.w(), C = in.c();
    if (N < 2) throw argument_error("batchnorm train mode requires batch size >= 2");
    if (gamma.size() != static_cast<std::size_t>(C) || beta.size() != gamma.size())
        throw argument_error("batchnorm parameter size mismatch");

    const double m = static_cast<double>(N) * H * W;
    std::vector<double> mean(C, 0.0), var(C, 0.0);
    for (std::size_t i = 0; i < in.size(); ++i) mean[i % C] += in.data[i];
    for (long c = 0; c < C; ++c) mean[c] /= m;
    for (std::size_t i = 0; i < in.size(); ++i) {
        double d = in.data[i] - mean[i % C];
        var[i % C] += d * d;
    }
    for (long c = 0; c < C; ++c) var[c] /= m;

    cache.train_stats = true;
    cache.inv_std.resize(C);
    cache.xhat = Tensor<S>(N, H, W, C);
    for (long c = 0; c < C; ++c) {
        cache.inv_std[c] = static_cast<S>(1.0 / std::sqrt(var[c] + eps));
        running_mean[c] = static_cast<S>(momentum * running_mean[c] + (1.0 - momentum) * mean[c]);
        running_var[c] = static_cast<S>(momentum * running_var[c] + (1.0 - momentum) * var[c]);
    }

    Tensor<S> out(N, H, W, C);
    for (std::size_t i = 0; i < in.size(); ++i) {
        long c = static_cast<long>(i % C);
        S xh = static_cast<S>((in.data[i] - mean[c]) * cache.inv_std[c]);
        cache.xhat.data[i] = xh;
        out.data[i] = gamma[c] * xh + beta[c];
    }
    return out;
}

template <typename S>
Tensor<S> batchnorm_infer(const Tensor<S>& in, std::span<const S> gamma, std::span<const S> beta,
                          std::span<const S> running_mean, std::span<const S> running_var,
                          double eps, BnCache<S>* cache = nullptr) {
    const long C = in.c();
    if (gamma.size() != static_cast<std::size_t>(C))
        throw argument_error("batchnorm parameter size mismatch");
    std::vector<S> inv_std(C);
    for (long c = 0; c < C; ++c)
        inv_std[c] = static_cast<S>(1.0 / std::sqrt(static_cast<double>(running_var[c]) + eps));

    Tensor<S> out = in;
    Tensor<S> xhat(in.n(), in.h(), in.w(), C);
    for (std::size_t i = 0; i < in.size(); ++i) {
        long c = static_cast<long>(i % C);
        S xh = (in.data[i] - running_mean[c]) * inv_std[c];
        xhat.data[i] = xh;
        out.data[i] = gamma[c] * xh + beta[c];
    }
    if (cache) {
        cache->train_stats = false;
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

template <typename S>
struct BnGrads {
    Tensor<S> dinput;
    std::vector<S> dgamma;
    std::vector<S> dbeta;
};

template <typename S>
BnGrads<S> batchnorm_backward(const BnCache<S>& cache, std::span<const S> gamma,
                              const Tensor<S>& dout) {
    const long C = dout.c();
    const double m = static_cast<double>(dout.n()) * dout.h() * dout.w();

    BnGrads<S> g;
    g.dgamma.assign(C, S(0));
    g.dbeta.assign(C, S(0));
    for (std::size_t i = 0; i < dout.size(); ++i) {
        long c = static_cast<long>(i % C);
        g.dgamma[c] += dout.data[i] * cache.xhat.data[i];
        g.dbeta[c] += dout.data[i];
    }

    g.dinput = Tensor<S>(dout.shape[0], dout.shape[1], dout.shape[2], dout.shape[3]);
    if (cache.train_stats) {
        // d/dx through the batch statistics:
        // din = gamma * inv_std * (dout - mean(dout) - xhat * mean(dout * xhat))
        for (std::size_t i = 0; i < dout.size(); ++i) {
            long c = static_cast<long>(i % C);
            double term = dout.data[i] - g.dbeta[c] / m - cache.xhat.data[i] * g.dgamma[c] / m;
            g.dinput.data[i] = static_cast<S>(gamma[c] * cache.inv_std[c] * term);
        }
    } else {
        for (std::size_t i = 0; i < dout.size(); ++i) {
            long c = static_cast<long>(i % C);
            g.dinput.data[i] = dout.data[i] * gamma[c] * cache.inv_std[c];
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Inverted dropout: survivors are scaled by 1/(1-rate) at train time so
// inference is the identity.
// ---------------------------------------------------------------------------

template <typename S>
struct DropoutResult {
    Tensor<S> out;
    std::vector<S> mask;  // 0 or 1/(1-rate), multiplies gradients too
};

template <typename S>
DropoutResult<S> dropout_train(const Tensor<S>& in, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw argument_error("dropout rate must be in [0, 1)");
    DropoutResult<S> r;
    r.out = in;
    r.mask.assign(in.size(), S(1));
    if (rate == 0.0) return r;
    const S keep_scale = static_cast<S>(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (rng.bernoulli(rate)) {
            r.mask[i] = S(0);
            r.out.data[i] = S(0);
        } else {
            r.mask[i] = keep_scale;
            r.out.data[i] = in.data[i] * keep_scale;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// ReLU, dense, softmax cross-entropy.
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> relu(const Tensor<S>& in) {
    Tensor<S> out = in;
    for (auto& v : out.data) v = std::max(v, S(0));
    return out;
}

template <typename S>
Tensor<S> relu_backward(const Tensor<S>& pre, const Tensor<S>& dout) {
    Tensor<S> din = dout;
    for (std::size_t i = 0; i < din.size(); ++i) {
        if (pre.data[i] <= S(0)) din.data[i] = S(0);
    }
    return din;
}

// in: [N, 1, 1, D]; weights: [D][M] row-major; out: [N, 1, 1, M]
template <typename S>
Tensor<S> dense(const Tensor<S>& in, std::span<const S> weights, std::span<const S> bias,
                long out_units) {
    const long N = in.n(), D = in.h() * in.w() * in.c(), M = out_units;
    if (weights.size() != static_cast<std::size_t>(D * M))
        throw argument_error("dense: weight size mismatch");
    if (bias.size() != static_cast<std::size_t>(M)) throw argument_error("dense: bias size mismatch");

    Tensor<S> out(N, 1, 1, M);
    for (long n = 0; n < N; ++n) {
        const S* row = in.data.data() + n * D;
        S* orow = out.data.data() + n * M;
        for (long m_ = 0; m_ < M; ++m_) orow[m_] = bias[m_];
        for (long d = 0; d < D; ++d) {
            S val = row[d];
            const S* wrow = weights.data() + d * M;
            for (long m_ = 0; m_ < M; ++m_) orow[m_] += val * wrow[m_];
        }
    }
    return out;
}

template <typename S>
struct DenseGrads {
    Tensor<S> dinput;
    std::vector<S> dweights;
    std::vector<S> dbias;
};

template <typename S>
DenseGrads<S> dense_backward(const Tensor<S>& in, std::span<const S> weights,
                             const Tensor<S>& dout) {
    const long N = in.n(), D = in.h() * in.w() * in.c(), M = dout.c();
    DenseGrads<S> g;
    g.dinput = Tensor<S>(in.shape[0], in.shape[1], in.shape[2], in.shape[3]);
    g.dweights.assign(static_cast<std::size_t>(D) * M, S(0));
    g.dbias.assign(M, S(0));
    for (long n = 0; n < N; ++n) {
        const S* row = in.data.data() + n * D;
        const S* drow = dout.data.data() + n * M;
        S* dirow = g.dinput.data.data() + n * D;
        for (long m_ = 0; m_ < M; ++m_) g.dbias[m_] += drow[m_];
        for (long d = 0; d < D; ++d) {
            const S* wrow = weights.data() + d * M;
            S* dwrow = g.dweights.data() + d * M;
            S acc = 0;
            for (long m_ = 0; m_ < M; ++m_) {
                dwrow[m_] += row[d] * drow[m_];
                acc += wrow[m_] * drow[m_];
            }
            dirow[d] = acc;
        }
    }
    return g;
}

// Max-subtracted softmax; rows of the result are strictly inside (0,1).
template <typename S>
Tensor<S> softmax(const Tensor<S>& logits) {
    const long N = logits.n(), K = logits.c();
    Tensor<S> probs = logits;
    for (long n = 0; n < N; ++n) {
        S* row = probs.data.data() + n * K;
        S mx = row[0];
        for (long k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        double denom = 0.0;
        for (long k = 0; k < K; ++k) denom += std::exp(static_cast<double>(row[k] - mx));
        for (long k = 0; k < K; ++k)
            row[k] = static_cast<S>(std::exp(static_cast<double>(row[k] - mx)) / denom);
    }
    return probs;
}

template <typename S>
struct SoftmaxCeResult {
    double loss = 0.0;      // mean of -log p[label] over the batch
    Tensor<S> probs;
    Tensor<S> dlogits;      // (p - onehot) / N
};

template <typename S>
SoftmaxCeResult<S> softmax_crossentropy(const Tensor<S>& logits, std::span<const int> labels) {
    const long N = logits.n(), K = logits.c();
    if (labels.size() != static_cast<std::size_t>(N))
        throw argument_error("softmax_crossentropy: one label per batch row required");

    SoftmaxCeResult<S> r;
    r.probs = softmax(logits);
    r.dlogits = r.probs;
    for (long n = 0; n < N; ++n) {
        int y = labels[n];
        if (y < 0 || y >= K) throw argument_error("label index out of range");
        double p = static_cast<double>(r.probs.data[n * K + y]);
        r.loss += -std::log(std::max(p, 1e-300));
        r.dlogits.data[n * K + y] -= S(1);
    }
    r.loss /= static_cast<double>(N);
    for (auto& v : r.dlogits.data) v /= static_cast<S>(N);
    return r;
}

}  // namespace ssfi
