#include "stsr/sgd.hpp"

#include <stdexcept>

namespace stsr {

void SgdConfig::validate() const {
    if (epochs <= 0) throw std::invalid_argument("sgd: epochs must be > 0");
    if (lr_schedule.empty()) throw std::invalid_argument("sgd: empty lr schedule");
    int prev = -1;
    for (const auto& [epoch, lr] : lr_schedule) {
        if (epoch <= prev) throw std::invalid_argument("sgd: schedule epochs must be strictly increasing");
        if (lr < 0.0) throw std::invalid_argument("sgd: lr must be >= 0");
        prev = epoch;
    }
}

double SgdConfig::lr_at(int epoch) const {
    double lr = lr_schedule.front().second;
    for (const auto& [e, l] : lr_schedule) {
        if (epoch >= e) lr = l;
    }
    return lr;
}

void sgd_step(Tensor& params, const Tensor& grads, Tensor& velocity, const SgdConfig& cfg,
              int epoch) {
    if (!params.same_shape(grads) || !params.same_shape(velocity))
        throw std::invalid_argument("sgd_step: shape mismatch between params/grads/velocity");
    const double lr = cfg.lr_at(epoch);
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity.data[i] = cfg.momentum * velocity.data[i] + grads.data[i] +
                           cfg.weight_decay * params.data[i];
        params.data[i] -= lr * velocity.data[i];
    }
}

}  // namespace stsr
