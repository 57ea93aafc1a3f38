#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ssfi/error.hpp"
#include "ssfi/montage.hpp"

namespace ssfi {

namespace detail {

// Dense LU with partial pivoting; enough for the 17x17 spline system.
struct Lu {
    int n = 0;
    std::vector<double> a;    // row-major, factored in place
    std::vector<int> perm;

    void factor(std::vector<double> m, int size) {
        n = size;
        a = std::move(m);
        perm.resize(n);
        for (int i = 0; i < n; ++i) perm[i] = i;
        for (int col = 0; col < n; ++col) {
            int piv = col;
            double best = std::abs(a[col * n + col]);
            for (int r = col + 1; r < n; ++r) {
                double v = std::abs(a[r * n + col]);
                if (v > best) {
                    best = v;
                    piv = r;
                }
            }
            if (best < 1e-12) throw argument_error("interpolation system is singular");
            if (piv != col) {
                for (int c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
                std::swap(perm[piv], perm[col]);
            }
            double d = a[col * n + col];
            for (int r = col + 1; r < n; ++r) {
                double f = a[r * n + col] / d;
                a[r * n + col] = f;
                for (int c = col + 1; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            }
        }
    }

    std::vector<double> solve(std::span<const double> rhs) const {
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[i] = rhs[perm[i]];
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < i; ++j) x[i] -= a[i * n + j] * x[j];
        }
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) x[i] -= a[i * n + j] * x[j];
            x[i] /= a[i * n + i];
        }
        return x;
    }
};

inline double tps_kernel(double r2) {
    // phi(r) = r^2 log(r) = r^2/2 log(r^2), with phi(0) = 0.
    return r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0;
}

}  // namespace detail

// Thin-plate spline over the fixed electrode layout: 14 radial terms plus an
// affine part, exact at the electrodes and smooth across the whole square.
// The (14+3)x(14+3) system is factored once; fitting a band is one solve.
class Interpolator {
public:
    explicit Interpolator(const MontageLayout& layout) : layout_(layout) {
        const int n = static_cast<int>(kNumChannels);
        const int m = n + 3;
        std::vector<double> a(m * m, 0.0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double dx = layout_[i].x - layout_[j].x;
                double dy = layout_[i].y - layout_[j].y;
                a[i * m + j] = detail::tps_kernel(dx * dx + dy * dy);
            }
            a[i * m + n] = 1.0;
            a[i * m + n + 1] = layout_[i].x;
            a[i * m + n + 2] = layout_[i].y;
            a[(n + 0) * m + i] = 1.0;
            a[(n + 1) * m + i] = layout_[i].x;
            a[(n + 2) * m + i] = layout_[i].y;
        }
        lu_.factor(std::move(a), m);
    }

    // Spline coefficients for one set of electrode values: 14 radial weights
    // followed by the affine terms (1, x, y).
    std::vector<double> fit(std::span<const double> values) const {
        check_values(values);
        std::vector<double> rhs(kNumChannels + 3, 0.0);
        for (std::size_t i = 0; i < kNumChannels; ++i) rhs[i] = values[i];
        return lu_.solve(rhs);
    }

    double evaluate(std::span<const double> coeffs, double x, double y) const {
        const std::size_t n = kNumChannels;
        double v = coeffs[n] + coeffs[n + 1] * x + coeffs[n + 2] * y;
        for (std::size_t i = 0; i < n; ++i) {
            double dx = x - layout_[i].x;
            double dy = y - layout_[i].y;
            v += coeffs[i] * detail::tps_kernel(dx * dx + dy * dy);
        }
        return v;
    }

    double evaluate_at(std::span<const double> values, double x, double y) const {
        return evaluate(fit(values), x, y);
    }

    // Full grid over the head's bounding square [-1,1]^2, cell centers,
    // row-major with row 0 at y = +1 (nose up) and column 0 at x = -1.
    std::vector<double> interpolate(std::span<const double> values, int grid_size) const {
        auto coeffs = fit(values);
        std::vector<double> grid(static_cast<std::size_t>(grid_size) * grid_size);
        for (int i = 0; i < grid_size; ++i) {
            double y = 1.0 - (i + 0.5) * 2.0 / grid_size;
            for (int j = 0; j < grid_size; ++j) {
                double x = -1.0 + (j + 0.5) * 2.0 / grid_size;
                grid[static_cast<std::size_t>(i) * grid_size + j] = evaluate(coeffs, x, y);
            }
        }
        return grid;
    }

    const MontageLayout& layout() const { return layout_; }

    // Grid cell whose center is nearest to an electrode.
    static std::pair<int, int> nearest_cell(double x, double y, int grid_size) {
        int j = static_cast<int>(std::floor((x + 1.0) * grid_size / 2.0));
        int i = static_cast<int>(std::floor((1.0 - y) * grid_size / 2.0));
        j = std::min(std::max(j, 0), grid_size - 1);
        i = std::min(std::max(i, 0), grid_size - 1);
        return {i, j};
    }

private:
    static void check_values(std::span<const double> values) {
        if (values.size() != kNumChannels)
            throw argument_error("expected one value per electrode (14)");
        for (double v : values) {
            if (!std::isfinite(v)) throw argument_error("non-finite electrode value");
        }
    }

    MontageLayout layout_;
    detail::Lu lu_;
};

// Single-band convenience entry point.
inline std::vector<double> interpolate_band(std::span<const double> values,
                                            const MontageLayout& layout,
                                            int grid_size = 64) {
    return Interpolator(layout).interpolate(values, grid_size);
}

}  // namespace ssfi
