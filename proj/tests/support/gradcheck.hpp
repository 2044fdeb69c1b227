#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pvdis/rng.hpp"
#include "pvdis/types.hpp"

namespace pvdis::testsupport {

// Central finite differences, the independent oracle for every analytic
// gradient in the project. `scalar_fn` must evaluate the loss from plain
// matrices; the helper never touches the graph that produced the analytic
// gradients.
struct GradCheck {
    double max_rel_err = 0.0;
    int entries_checked = 0;
};

inline GradCheck finite_diff_check(
    std::vector<Matrix> inputs,
    const std::function<double(const std::vector<Matrix>&)>& scalar_fn,
    const std::vector<Matrix>& analytic, double step = 1e-5,
    double grad_floor = 1e-6) {
    GradCheck result;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (Index r = 0; r < inputs[i].rows(); ++r) {
            for (Index c = 0; c < inputs[i].cols(); ++c) {
                const double saved = inputs[i](r, c);
                inputs[i](r, c) = saved + step;
                const double up = scalar_fn(inputs);
                inputs[i](r, c) = saved - step;
                const double down = scalar_fn(inputs);
                inputs[i](r, c) = saved;
                const double numeric = (up - down) / (2.0 * step);
                const double a = analytic[i](r, c);
                if (std::abs(a) <= grad_floor && std::abs(numeric) <= grad_floor) continue;
                const double rel =
                    std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric));
                result.max_rel_err = std::max(result.max_rel_err, rel);
                ++result.entries_checked;
            }
        }
    }
    return result;
}

// Uniform [-1, 1] matrix with entries pushed away from `margin` of zero,
// so finite differences never straddle a ReLU kink.
inline Matrix random_matrix(Index rows, Index cols, rng::Engine& eng,
                            double kink_margin = 0.0) {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            double v = eng.uniform(-1.0, 1.0);
            while (kink_margin > 0.0 && std::abs(v) < kink_margin) v = eng.uniform(-1.0, 1.0);
            m(r, c) = v;
        }
    }
    return m;
}

} // namespace pvdis::testsupport
