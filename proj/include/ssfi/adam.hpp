#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ssfi/error.hpp"

namespace ssfi {

// Adam with the standard bias correction. Moment buffers mirror the shape
// (and scalar type) of the parameter vector they serve.
template <typename S>
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    std::vector<S> m;
    std::vector<S> v;

    explicit AdamState(std::size_t n_params, double lr_ = 1e-3)
        : lr(lr_), m(n_params, S(0)), v(n_params, S(0)) {}
};

template <typename S>
void adam_step(std::span<S> params, std::span<const S> grads, AdamState<S>& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw argument_error("adam_step: parameter/gradient/state size mismatch");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = static_cast<double>(grads[i]);
        double m = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        double v = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        state.m[i] = static_cast<S>(m);
        state.v[i] = static_cast<S>(v);
        double mhat = m / bc1;
        double vhat = v / bc2;
        params[i] -= static_cast<S>(state.lr * mhat / (std::sqrt(vhat) + state.epsilon));
    }
}

}  // namespace ssfi
