#include "pathqa/optim.hpp"

namespace pathqa {

AdamW::AdamW(std::vector<Tensor*> params, OptimConfig config)
    : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Tensor* t : params_) {
        m_.emplace_back(t->size(), 0.0);
        v_.emplace_back(t->size(), 0.0);
    }
}

double AdamW::current_lr() const {
    if (config_.total_steps == 0) return config_.lr;
    double step = static_cast<double>(t_ + 1);
    double warmup = config_.warmup_fraction * static_cast<double>(config_.total_steps);
    if (warmup >= 1.0 && step <= warmup) return config_.lr * step / warmup;
    double total = static_cast<double>(config_.total_steps);
    double remaining = (total - step) / std::max(1.0, total - warmup);
    return config_.lr * std::max(0.0, remaining);
}

void AdamW::step() {
    const double lr = current_lr();
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (size_t p = 0; p < params_.size(); ++p) {
        Tensor* t = params_[p];
        Vec& m = m_[p];
        Vec& v = v_[p];
        for (size_t i = 0; i < t->size(); ++i) {
            double g = t->grad[i];
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            double update = mhat / (std::sqrt(vhat) + config_.eps);
            if (!t->no_decay) update += config_.weight_decay * t->value[i];
            t->value[i] -= lr * update;
        }
    }
}

}  // namespace pathqa
