#pragma once

#include <utility>
#include <vector>

#include "stsr/tensor.hpp"

namespace stsr {

// SGD with momentum, weight decay, and a step learning-rate schedule.
// The schedule is a list of (epoch, lr) pairs; lr_at(e) picks the last entry
// whose epoch threshold is <= e.
struct SgdConfig {
    std::vector<std::pair<int, double>> lr_schedule{{0, 0.1}, {60, 0.02}, {120, 0.004}, {160, 0.0008}};
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int epochs = 200;

    void validate() const;
    double lr_at(int epoch) const;
};

// v <- momentum*v + grad + wd*param ; param <- param - lr(epoch)*v
void sgd_step(Tensor& params, const Tensor& grads, Tensor& velocity, const SgdConfig& cfg,
              int epoch);

}  // namespace stsr
