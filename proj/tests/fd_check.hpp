#pragma once

// Central finite-difference gradient checking used by the unit tests and the
// acceptance suite. Independent of the tape's backward pass: it re-evaluates
// the loss with nudged parameter entries.

#include <cmath>
#include <functional>
#include <vector>

#include "pqn/autodiff.hpp"

namespace pqn::testing {

struct FdReport {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
};

/// loss(true) must build a recording tape, run backward, and return the loss
/// value (gradients accumulate into the given params); loss(false) must
/// evaluate the loss only. Relative error uses max(1, |a| + |fd|) as the
/// denominator so near-zero gradients compare absolutely.
inline FdReport fd_check(const std::vector<ParamTensor*>& params,
                         const std::function<double(bool)>& loss, double h = 1e-5) {
    for (auto* p : params)
        p->zero_grad();
    loss(true);
    FdReport report;
    for (auto* p : params) {
        for (std::size_t i = 0; i < p->size(); ++i) {
            double saved = p->values[i];
            p->values[i] = saved + h;
            double f_plus = loss(false);
            p->values[i] = saved - h;
            double f_minus = loss(false);
            p->values[i] = saved;
            double fd = (f_plus - f_minus) / (2.0 * h);
            double analytic = p->grad[i];
            double rel = std::abs(analytic - fd) /
                         std::max(1.0, std::abs(analytic) + std::abs(fd));
            report.max_rel_err = std::max(report.max_rel_err, rel);
            ++report.checked;
        }
    }
    for (auto* p : params)
        p->zero_grad();
    return report;
}

} // namespace pqn::testing
