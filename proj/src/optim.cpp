#include "sslstm/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace sslstm::ad {

void sgd_step(ParameterSet& params, double lr)
{
    for (auto& p : params) {
        if (!p.trainable) continue;
        for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lr * p.grad[i];
    }
}

void adam_step(Parameter& p, std::vector<double>& m, std::vector<double>& v, const AdamConfig& cfg, std::size_t t)
{
    if (t == 0) throw std::invalid_argument("adam_step: t starts at 1");
    m.resize(p.value.size(), 0.0);
    v.resize(p.value.size(), 0.0);
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        p.value[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

void Adam::step(ParameterSet& params)
{
    if (m_.size() != params.size()) {
        m_.assign(params.size(), {});
        v_.assign(params.size(), {});
    }
    ++t_;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].trainable) adam_step(params[i], m_[i], v_[i], cfg_, t_);
    }
}

double grad_norm(const ParameterSet& params)
{
    double sq = 0.0;
    for (const auto& p : params) {
        if (!p.trainable) continue;
        for (double g : p.grad.data()) sq += g * g;
    }
    return std::sqrt(sq);
}

double clip_grad_norm(ParameterSet& params, double max_norm)
{
    const double norm = grad_norm(params);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (auto& p : params) {
            if (!p.trainable) continue;
            for (auto& g : p.grad.data()) g *= s;
        }
    }
    return norm;
}

} // namespace sslstm::ad
