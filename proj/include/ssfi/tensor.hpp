#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ssfi/error.hpp"

namespace ssfi {

// Dense NHWC activation/parameter storage. Double for verification work,
// float for training runs; everything downstream is templated on the scalar.
template <typename S>
struct Tensor {
    std::array<long, 4> shape{0, 0, 0, 0};  // N, H, W, C
    std::vector<S> data;

    Tensor() = default;
    Tensor(long n, long h, long w, long c)
        : shape{n, h, w, c},
          data(static_cast<std::size_t>(n) * h * w * c, S(0)) {}

    static Tensor zeros(long n, long h, long w, long c) { return Tensor(n, h, w, c); }

    long n() const { return shape[0]; }
    long h() const { return shape[1]; }
    long w() const { return shape[2]; }
    long c() const { return shape[3]; }
    std::size_t size() const { return data.size(); }

    S& at(long n_, long h_, long w_, long c_) {
        return data[((static_cast<std::size_t>(n_) * shape[1] + h_) * shape[2] + w_) * shape[3] +
                    c_];
    }
    const S& at(long n_, long h_, long w_, long c_) const {
        return data[((static_cast<std::size_t>(n_) * shape[1] + h_) * shape[2] + w_) * shape[3] +
                    c_];
    }

    // NHWC data is already contiguous per item; flattening only reshapes.
    Tensor reshaped(long n_, long h_, long w_, long c_) const {
        if (static_cast<std::size_t>(n_) * h_ * w_ * c_ != data.size())
            throw argument_error("reshape changes element count");
        Tensor t = *this;
        t.shape = {n_, h_, w_, c_};
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// NaN/Inf anywhere in an activation is a hard failure; a double
// accumulator of |v| goes non-finite whenever any element is.
template <typename S>
void assert_finite(const Tensor<S>& t, const char* where) {
    double acc = 0.0;
    for (S v : t.data) acc += std::abs(static_cast<double>(v));
    if (!std::isfinite(acc))
        throw std::runtime_error(std::string("non-finite values after ") + where);
}

}  // namespace ssfi
