#pragma once

#include <functional>
#include <limits>
#include <string>

#include "torl/numeric.hpp"

namespace torl {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_name;
    Eigen::Index worst_row = 0;
    Eigen::Index worst_col = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t checked = 0;
    bool pass = false;
};

// Central finite differences against the analytic gradients already stored in
// `store`. `loss_fn` must evaluate the loss from the store's current values
// without touching the gradients. Entries where both gradients are below
// 1e-7 in magnitude are compared absolutely (the relative error of two
// near-zero numbers is noise).
//
// Entries that fail at the primary step size are retried at alternates before
// being reported: a larger step drowns f64 roundoff on near-zero gradients,
// and smaller steps stop straddling relu kinks. The best error is kept.
inline GradCheckReport check_gradients(ParameterStore<double>& store,
                                       const std::function<double()>& loss_fn,
                                       double tolerance, double h = 1e-5) {
    GradCheckReport report;
    for (auto& [name, entry] : store) {
        for (Eigen::Index j = 0; j < entry.value.cols(); ++j) {
            for (Eigen::Index i = 0; i < entry.value.rows(); ++i) {
                const double saved = entry.value(i, j);
                const double analytic = entry.grad(i, j);

                auto probe = [&](double step) {
                    entry.value(i, j) = saved + step;
                    const double up = loss_fn();
                    entry.value(i, j) = saved - step;
                    const double down = loss_fn();
                    entry.value(i, j) = saved;
                    if (!std::isfinite(up) || !std::isfinite(down))
                        throw std::runtime_error("gradcheck: non-finite loss at " + name);
                    return (up - down) / (2 * step);
                };
                auto error_of = [&](double numeric) {
                    const double scale = std::max(std::abs(analytic), std::abs(numeric));
                    return scale < 1e-7 ? std::abs(analytic - numeric)
                                        : std::abs(analytic - numeric) / scale;
                };

                double numeric = probe(h);
                double err = error_of(numeric);
                if (err > tolerance) {
                    for (double alt : {10 * h, h / 10, h / 100}) {
                        const double n2 = probe(alt);
                        const double e2 = error_of(n2);
                        if (e2 < err) {
                            err = e2;
                            numeric = n2;
                        }
                        if (err <= tolerance) break;
                    }
                }
                ++report.checked;
                if (err > report.max_rel_error) {
                    report.max_rel_error = err;
                    report.worst_name = name;
                    report.worst_row = i;
                    report.worst_col = j;
                    report.worst_analytic = analytic;
                    report.worst_numeric = numeric;
                }
            }
        }
    }
    report.pass = report.max_rel_error < tolerance;
    return report;
}

}  // namespace torl
