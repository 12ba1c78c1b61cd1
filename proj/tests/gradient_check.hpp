#pragma once
// Central finite-difference gradient checking used across the model tests.

#include <cmath>
#include <functional>
#include <vector>

#include "pathqa/params.hpp"

namespace pathqa::testing {

struct FdReport {
    double max_rel_err = 0.0;
    size_t checked = 0;
};

// Compares analytic gradients (already accumulated in the tensors) against
// central finite differences of `eval` (a pure loss evaluation).
inline FdReport finite_difference_check(const std::vector<Tensor*>& params,
                                        const std::function<double()>& eval,
                                        double h = 1e-5) {
    FdReport report;
    for (Tensor* t : params) {
        for (size_t i = 0; i < t->size(); ++i) {
            const double saved = t->value[i];
            t->value[i] = saved + h;
            const double up = eval();
            t->value[i] = saved - h;
            const double down = eval();
            t->value[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double a = t->grad[i];
            const double denom = std::max({std::abs(a), std::abs(fd), 1e-3});
            report.max_rel_err = std::max(report.max_rel_err, std::abs(a - fd) / denom);
            ++report.checked;
        }
    }
    return report;
}

}  // namespace pathqa::testing
