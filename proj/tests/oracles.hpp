#pragma once

// Naive-loop reference implementations of the distillation losses. These
// deliberately avoid the library's vectorized code paths: every statistic
// is accumulated element by element, straight from the definitions.

#include <cmath>
#include <vector>

#include "distillkit/tensor.hpp"

namespace oracle {

using distillkit::MatX;

// Sum over classes of squared distance between feature means.
inline double dm_reference(const std::vector<MatX<double>>& real,
                           const std::vector<MatX<double>>& syn) {
    double total = 0;
    for (std::size_t c = 0; c < real.size(); ++c) {
        const auto d = real[c].cols();
        for (Eigen::Index k = 0; k < d; ++k) {
            double mr = 0, ms = 0;
            for (Eigen::Index i = 0; i < real[c].rows(); ++i) mr += real[c](i, k);
            for (Eigen::Index j = 0; j < syn[c].rows(); ++j) ms += syn[c](j, k);
            mr /= static_cast<double>(real[c].rows());
            ms /= static_cast<double>(syn[c].rows());
            total += (mr - ms) * (mr - ms);
        }
    }
    return total;
}

// Per-sample hinge of exponential around the class mean.
inline double cc_reference(const std::vector<MatX<double>>& groups, double alpha, double beta) {
    double total = 0;
    for (const auto& f : groups) {
        const auto k = f.rows();
        const auto d = f.cols();
        std::vector<double> mean(d, 0.0);
        for (Eigen::Index j = 0; j < k; ++j)
            for (Eigen::Index t = 0; t < d; ++t) mean[t] += f(j, t);
        for (auto& m : mean) m /= static_cast<double>(k);
        for (Eigen::Index j = 0; j < k; ++j) {
            double dist2 = 0;
            for (Eigen::Index t = 0; t < d; ++t) {
                const double dv = f(j, t) - mean[t];
                dist2 += dv * dv;
            }
            const double term = std::exp(alpha * dist2) - beta;
            total += term > 0 ? term : 0;
        }
    }
    return total;
}

// Biased covariance of descriptor rows via an explicit double loop.
inline MatX<double> covariance_reference(const std::vector<MatX<double>>& descriptors) {
    const int k = static_cast<int>(descriptors.size());
    const auto d = descriptors[0].rows();
    const auto hw = descriptors[0].cols();
    MatX<double> mean = MatX<double>::Zero(d, hw);
    for (const auto& m : descriptors)
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < hw; ++b) mean(a, b) += m(a, b);
    mean /= static_cast<double>(k);

    MatX<double> sigma = MatX<double>::Zero(d, d);
    for (const auto& m : descriptors)
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) {
                double acc = 0;
                for (Eigen::Index t = 0; t < hw; ++t)
                    acc += (m(a, t) - mean(a, t)) * (m(b, t) - mean(b, t));
                sigma(a, b) += acc;
            }
    return sigma / static_cast<double>(k);
}

// Sum of elementwise squared differences between covariance pairs.
inline double cm_reference(const std::vector<MatX<double>>& real_sigmas,
                           const std::vector<MatX<double>>& syn_sigmas) {
    double total = 0;
    for (std::size_t c = 0; c < real_sigmas.size(); ++c)
        for (Eigen::Index a = 0; a < real_sigmas[c].rows(); ++a)
            for (Eigen::Index b = 0; b < real_sigmas[c].cols(); ++b) {
                const double dv = syn_sigmas[c](a, b) - real_sigmas[c](a, b);
                total += dv * dv;
            }
    return total;
}

}  // namespace oracle
