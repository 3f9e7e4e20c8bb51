#pragma once

// The distillation objectives. Feature-mean matching, the class
// centralization penalty, and local-covariance matching, with analytic
// gradients with respect to the synthetic-side features.
//
// Conventions:
//  - pooled features of one class: matrix (n_samples, d), one row per sample
//  - local descriptors of one sample: matrix (d, hw), the feature map
//    (d, h, w) flattened along its spatial plane

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "distillkit/errors.hpp"
#include "distillkit/tensor.hpp"

namespace distillkit {

struct LossWeights {
    double lambda_cc = 0.05;
    double lambda_cm = 0.01;
    double alpha = 1.0;  // distance scale inside the centralization exponential
    double beta = 0.1;   // centralization threshold

    void validate() const {
        if (lambda_cc < 0 || lambda_cm < 0) throw ConfigError("weights: lambda must be >= 0");
        if (alpha <= 0) throw ConfigError("weights: alpha must be > 0");
        if (beta < 0) throw ConfigError("weights: beta must be >= 0");
    }
};

// Exponents are clamped here before exponentiation; the clamp is far outside
// the operating range and acceptance runs assert it never fires.
inline constexpr double kCcExponentClamp = 80.0;

namespace lossdetail {

template <typename T>
void check_class_grouping(const std::vector<MatX<T>>& real, const std::vector<MatX<T>>& syn) {
    if (real.size() != syn.size())
        throw ContractError("loss: class sets differ between real and synthetic sides");
    for (std::size_t c = 0; c < real.size(); ++c) {
        if (real[c].rows() == 0 || syn[c].rows() == 0)
            throw ContractError("loss: class " + std::to_string(c) + " empty on one side");
        if (real[c].cols() != syn[c].cols())
            throw ContractError("loss: feature dim mismatch in class " + std::to_string(c));
    }
}

}  // namespace lossdetail

// Squared distance between per-class feature means, summed over classes.
template <typename T>
double dm_loss(const std::vector<MatX<T>>& real_by_class, const std::vector<MatX<T>>& syn_by_class) {
    lossdetail::check_class_grouping(real_by_class, syn_by_class);
    double total = 0;
    for (std::size_t c = 0; c < real_by_class.size(); ++c) {
        VecX<T> diff = real_by_class[c].colwise().mean().transpose() -
                       syn_by_class[c].colwise().mean().transpose();
        total += static_cast<double>(diff.squaredNorm());
    }
    return total;
}

// d(dm_loss)/d(synthetic features), one matrix per class.
template <typename T>
std::vector<MatX<T>> dm_loss_grad_syn(const std::vector<MatX<T>>& real_by_class,
                                      const std::vector<MatX<T>>& syn_by_class) {
    lossdetail::check_class_grouping(real_by_class, syn_by_class);
    std::vector<MatX<T>> grads;
    grads.reserve(syn_by_class.size());
    for (std::size_t c = 0; c < real_by_class.size(); ++c) {
        const auto k = syn_by_class[c].rows();
        VecX<T> diff = syn_by_class[c].colwise().mean().transpose() -
                       real_by_class[c].colwise().mean().transpose();
        MatX<T> g(k, syn_by_class[c].cols());
        g.rowwise() = (T(2) / static_cast<T>(k)) * diff.transpose();
        grads.push_back(std::move(g));
    }
    return grads;
}

struct CcResult {
    double value = 0;
    long clamp_hits = 0;
};

// Centralization penalty: sum over classes and samples of
// max(0, exp(alpha * ||f_j - mean||^2) - beta). The class mean is part of
// the computation graph.
template <typename T>
CcResult cc_loss(const std::vector<MatX<T>>& syn_by_class, double alpha, double beta) {
    if (alpha <= 0) throw ConfigError("cc_loss: alpha must be > 0");
    CcResult res;
    for (std::size_t c = 0; c < syn_by_class.size(); ++c) {
        const MatX<T>& f = syn_by_class[c];
        if (f.rows() == 0) throw ContractError("cc_loss: empty class group " + std::to_string(c));
        VecX<T> mean = f.colwise().mean().transpose();
        for (Eigen::Index j = 0; j < f.rows(); ++j) {
            const double d2 = static_cast<double>((f.row(j).transpose() - mean).squaredNorm());
            double expo = alpha * d2;
            if (expo > kCcExponentClamp) {
                expo = kCcExponentClamp;
                ++res.clamp_hits;
            }
            res.value += std::max(0.0, std::exp(expo) - beta);
        }
    }
    return res;
}

// d(cc_loss)/d(synthetic embeddings). The hinge and the clamp both have
// zero derivative in their flat regions.
template <typename T>
std::vector<MatX<T>> cc_loss_grad(const std::vector<MatX<T>>& syn_by_class, double alpha,
                                  double beta) {
    if (alpha <= 0) throw ConfigError("cc_loss: alpha must be > 0");
    std::vector<MatX<T>> grads;
    grads.reserve(syn_by_class.size());
    for (const MatX<T>& f : syn_by_class) {
        if (f.rows() == 0) throw ContractError("cc_loss: empty class group");
        const auto k = f.rows();
        VecX<T> mean = f.colwise().mean().transpose();
        MatX<T> dev = f.rowwise() - mean.transpose();  // (k, d)
        // coef_j = alpha * exp(alpha d_j^2) where the term is active, else 0.
        VecX<T> coef(k);
        for (Eigen::Index j = 0; j < k; ++j) {
            const double d2 = static_cast<double>(dev.row(j).squaredNorm());
            const double expo = alpha * d2;
            if (expo > kCcExponentClamp || std::exp(expo) - beta <= 0) {
                coef[j] = T(0);
            } else {
                coef[j] = static_cast<T>(alpha * std::exp(expo));
            }
        }
        // dL/df_i = 2 [ coef_i dev_i - (1/k) sum_j coef_j dev_j ]
        MatX<T> weighted = dev.array().colwise() * coef.array();  // (k, d)
        VecX<T> colsum = weighted.colwise().sum().transpose();
        MatX<T> g = T(2) * (weighted.rowwise() - (colsum / static_cast<T>(k)).transpose());
        grads.push_back(std::move(g));
    }
    return grads;
}

struct ClassCovariance {
    MatX<double> matrix;  // (d, d)
    int class_id = 0;
    int sample_count = 0;
};

// Statistics of one class's local descriptors: the elementwise mean
// descriptor and the biased (1/K) covariance of descriptor rows.
template <typename T>
struct CovarianceStats {
    MatX<T> sigma;  // (d, d)
    MatX<T> mean;   // (d, hw)
    int sample_count = 0;
};

template <typename T>
CovarianceStats<T> class_covariance(const std::vector<MatX<T>>& descriptors) {
    const int k = static_cast<int>(descriptors.size());
    if (k < 2)
        throw DegenerateStatisticsError(
            "class_covariance: needs at least 2 samples, got " + std::to_string(k));
    const auto d = descriptors[0].rows();
    const auto hw = descriptors[0].cols();
    for (const auto& m : descriptors)
        if (m.rows() != d || m.cols() != hw)
            throw ContractError("class_covariance: descriptor shape mismatch");

    CovarianceStats<T> out;
    out.sample_count = k;
    out.mean = MatX<T>::Zero(d, hw);
    for (const auto& m : descriptors) out.mean += m;
    out.mean /= static_cast<T>(k);

    out.sigma = MatX<T>::Zero(d, d);
    for (const auto& m : descriptors) {
        MatX<T> dev = m - out.mean;
        out.sigma.noalias() += dev * dev.transpose();
    }
    out.sigma /= static_cast<T>(k);
    return out;
}

// Squared Frobenius distance between per-class covariance pairs, summed.
template <typename T>
double cm_loss(const std::vector<CovarianceStats<T>>& real_cov,
               const std::vector<CovarianceStats<T>>& syn_cov) {
    if (real_cov.size() != syn_cov.size())
        throw ContractError("cm_loss: class sets differ between sides");
    double total = 0;
    for (std::size_t c = 0; c < real_cov.size(); ++c) {
        if (real_cov[c].sigma.rows() != syn_cov[c].sigma.rows())
            throw ContractError("cm_loss: covariance dim mismatch in class " + std::to_string(c));
        total += static_cast<double>((syn_cov[c].sigma - real_cov[c].sigma).squaredNorm());
    }
    return total;
}

// d(cm_loss)/d(synthetic descriptor i of class c). Because deviations sum
// to zero, the mean path contributes nothing and the gradient is
// (4/K) (Sigma_s - Sigma_r) (S_i - mean).
template <typename T>
std::vector<std::vector<MatX<T>>> cm_loss_grad_syn(
    const std::vector<CovarianceStats<T>>& real_cov,
    const std::vector<std::vector<MatX<T>>>& syn_descriptors,
    const std::vector<CovarianceStats<T>>& syn_cov) {
    if (real_cov.size() != syn_cov.size() || syn_cov.size() != syn_descriptors.size())
        throw ContractError("cm_loss_grad: class sets differ");
    std::vector<std::vector<MatX<T>>> grads(syn_descriptors.size());
    for (std::size_t c = 0; c < syn_descriptors.size(); ++c) {
        const auto k = static_cast<T>(syn_descriptors[c].size());
        MatX<T> gsigma = T(2) * (syn_cov[c].sigma - real_cov[c].sigma);  // symmetric
        for (const auto& m : syn_descriptors[c]) {
            MatX<T> dev = m - syn_cov[c].mean;
            grads[c].push_back((T(2) / k) * (gsigma * dev));
        }
    }
    return grads;
}

// base + lambda_cc * cc + lambda_cm * cm, with finiteness checks that name
// the offending component.
inline double combined_loss(double base, double l_cc, double l_cm, const LossWeights& w) {
    w.validate();
    if (!std::isfinite(base)) throw NumericError("combined_loss: base loss is not finite");
    if (!std::isfinite(l_cc)) throw NumericError("combined_loss: cc loss is not finite");
    if (!std::isfinite(l_cm)) throw NumericError("combined_loss: cm loss is not finite");
    return base + w.lambda_cc * l_cc + w.lambda_cm * l_cm;
}

// (d, h, w) feature map of one sample viewed as d local descriptors of
// dimension hw.
template <typename T>
MatX<T> local_descriptors(const Tensor<T>& fmap, int sample) {
    MatX<T> out(fmap.c, fmap.plane());
    const T* p = fmap.sample_ptr(sample);
    for (int c = 0; c < fmap.c; ++c)
        for (int i = 0; i < fmap.plane(); ++i) out(c, i) = p[c * fmap.plane() + i];
    return out;
}

}  // namespace distillkit
