#pragma once
// Adam with decoupled weight decay and a linear warmup / linear decay
// schedule, the regime both trainers share.

#include <cmath>
#include <cstdint>
#include <vector>

#include "pathqa/params.hpp"

namespace pathqa {

struct OptimConfig {
    double lr = 1e-2;            // reference-model default; 3e-5 suits
                                 // pretrained-transformer plug-ins
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;  // skipped for no_decay tensors
    double warmup_fraction = 0.1;
    uint64_t total_steps = 0;    // 0 disables the schedule (constant lr)
};

class AdamW {
public:
    AdamW(std::vector<Tensor*> params, OptimConfig config);

    // Applies one update from the accumulated gradients. Does not zero them.
    void step();

    double current_lr() const;
    uint64_t steps_taken() const { return t_; }

private:
    std::vector<Tensor*> params_;
    OptimConfig config_;
    std::vector<Vec> m_;
    std::vector<Vec> v_;
    uint64_t t_ = 0;
};

}  // namespace pathqa
