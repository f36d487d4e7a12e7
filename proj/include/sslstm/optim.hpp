#pragma once

#include "sslstm/autodiff.hpp"

#include <cstddef>
#include <vector>

namespace sslstm::ad {

/// theta -= lr * grad for every trainable parameter.
void sgd_step(ParameterSet& params, double lr);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One bias-corrected Adam update of a single parameter at step t (t >= 1).
void adam_step(Parameter& p, std::vector<double>& m, std::vector<double>& v, const AdamConfig& cfg, std::size_t t);

class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(ParameterSet& params);
    std::size_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

/// L2 norm over all trainable gradients.
double grad_norm(const ParameterSet& params);

/// Rescales gradients so their global norm is at most max_norm; returns the
/// norm before clipping.
double clip_grad_norm(ParameterSet& params, double max_norm);

} // namespace sslstm::ad
