#pragma once

// Central finite-difference gradient checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mcomp/nn/autodiff.hpp"

namespace mcomp::testing {

inline double relative_error(double analytic, double numeric)
{
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

inline nn::Mat random_mat(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    nn::Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = n(rng);
    }
    return m;
}

// f maps graph leaves for `inputs` to a scalar. Returns the worst relative
// error over every input coordinate.
inline double input_gradient_error(const std::function<nn::Var(nn::Graph&, const std::vector<nn::Var>&)>& f,
                                   std::vector<nn::Mat> inputs, double h = 1e-5)
{
    nn::Graph g;
    std::vector<nn::Var> leaves;
    for (const nn::Mat& m : inputs) {
        leaves.push_back(g.input(m));
    }
    g.backward(f(g, leaves));
    auto eval = [&]() {
        nn::Graph g2;
        std::vector<nn::Var> l2;
        for (const nn::Mat& m : inputs) {
            l2.push_back(nn::constant(m));
        }
        return nn::scalar(f(g2, l2));
    };
    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const nn::Mat analytic = leaves[k].grad();
        for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
            const double x0 = inputs[k].data()[i];
            inputs[k].data()[i] = x0 + h;
            const double fp = eval();
            inputs[k].data()[i] = x0 - h;
            const double fm = eval();
            inputs[k].data()[i] = x0;
            worst = std::max(worst, relative_error(analytic.data()[i], (fp - fm) / (2.0 * h)));
        }
    }
    return worst;
}

// Same check against parameters: `loss` must rebuild its graph from the
// current parameter values and be deterministic (fixed dropout streams).
struct ParamCoordinate {
    nn::Parameter* param;
    Eigen::Index index;
};

inline double parameter_gradient_error(const std::function<double()>& loss_value,
                                       const std::function<void()>& accumulate_grads,
                                       std::vector<nn::Parameter*> params, const std::vector<ParamCoordinate>& coords,
                                       double h = 1e-5)
{
    for (nn::Parameter* p : params) {
        p->grad = nn::Mat::Zero(p->value.rows(), p->value.cols());
    }
    accumulate_grads();
    double worst = 0.0;
    for (const ParamCoordinate& c : coords) {
        double& x = c.param->value.data()[c.index];
        const double x0 = x;
        x = x0 + h;
        const double fp = loss_value();
        x = x0 - h;
        const double fm = loss_value();
        x = x0;
        worst = std::max(worst, relative_error(c.param->grad.data()[c.index], (fp - fm) / (2.0 * h)));
    }
    return worst;
}

// Up to `per_param` coordinates from each parameter, chosen by rng.
inline std::vector<ParamCoordinate> sample_coordinates(std::vector<nn::Parameter*> params, int per_param,
                                                       std::mt19937_64& rng)
{
    std::vector<ParamCoordinate> out;
    for (nn::Parameter* p : params) {
        std::uniform_int_distribution<Eigen::Index> pick(0, p->value.size() - 1);
        for (int k = 0; k < per_param; ++k) {
            out.push_back({p, pick(rng)});
        }
    }
    return out;
}

} // namespace mcomp::testing
