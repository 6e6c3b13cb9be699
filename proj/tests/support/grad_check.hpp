#pragma once

#include "sag/common/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace sag::testing {

struct GroupError {
    std::string name;
    double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
    double analytic_norm = 0.0;
    std::size_t checked = 0;
};

/// Central finite differences over up to `max_entries` evenly spaced entries
/// of every parameter group. Parameters are float, so the step actually
/// taken is measured after rounding.
template <class Weights, class Grad, class LossFn>
std::vector<GroupError> gradient_check(Weights& weights, const Grad& grad, LossFn&& loss, double h = 1e-3,
                                       std::size_t max_entries = 48) {
    std::vector<std::pair<std::string, Mat<float>*>> params;
    weights.visit([&](const std::string& name, Mat<float>& m) { params.emplace_back(name, &m); });
    std::vector<const Mat<double>*> grads;
    grad.visit([&](const std::string&, const Mat<double>& m) { grads.push_back(&m); });

    std::vector<GroupError> out;
    for (std::size_t g = 0; g < params.size(); ++g) {
        auto& values = params[g].second->data;
        const auto& analytic = grads[g]->data;
        GroupError e{params[g].first};
        const std::size_t n = values.size();
        const std::size_t stride = std::max<std::size_t>(1, n / max_entries);
        double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (std::size_t i = 0; i < n; i += stride) {
            const float orig = values[i];
            const float up = static_cast<float>(orig + h);
            const float down = static_cast<float>(orig - h);
            values[i] = up;
            const double lp = loss();
            values[i] = down;
            const double lm = loss();
            values[i] = orig;
            const double numeric = (lp - lm) / (static_cast<double>(up) - static_cast<double>(down));
            diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
            a2 += analytic[i] * analytic[i];
            n2 += numeric * numeric;
            ++e.checked;
        }
        const double scale = std::max(std::sqrt(a2), std::sqrt(n2));
        e.analytic_norm = std::sqrt(a2);
        e.relative_error = scale < 1e-10 ? 0.0 : std::sqrt(diff2) / scale;
        out.push_back(e);
    }
    return out;
}

}  // namespace sag::testing
