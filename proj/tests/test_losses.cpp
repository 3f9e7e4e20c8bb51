#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "distillkit/losses.hpp"
#include "distillkit/rng.hpp"

using namespace distillkit;

namespace {

std::vector<MatX<double>> random_groups(Rng& rng, int classes, int max_rows, int dim) {
    std::vector<MatX<double>> out;
    for (int c = 0; c < classes; ++c) {
        const int rows = 2 + static_cast<int>(rng.uniform_int(max_rows - 1));
        MatX<double> m(rows, dim);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<MatX<double>> random_descriptors(Rng& rng, int count, int d, int hw) {
    std::vector<MatX<double>> out;
    for (int i = 0; i < count; ++i) {
        MatX<double> m(d, hw);
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.normal();
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace

TEST_CASE("dm_loss identities and hand value") {
    std::vector<MatX<double>> a = {MatX<double>::Random(4, 3)};
    CHECK(dm_loss(a, a) == 0.0);

    // one class; real rows average to (1,0), synthetic rows to (0,1)
    MatX<double> real(2, 2), syn(2, 2);
    real << 2, 0, 0, 0;
    syn << 0, 2, 0, 0;
    CHECK(dm_loss<double>({real}, {syn}) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("dm_loss matches the naive oracle on random instances") {
    Rng rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        const int classes = 1 + static_cast<int>(rng.uniform_int(3));
        const int dim = 1 + static_cast<int>(rng.uniform_int(4));
        auto real = random_groups(rng, classes, 6, dim);
        auto syn = random_groups(rng, classes, 5, dim);
        const double got = dm_loss(real, syn);
        const double want = oracle::dm_reference(real, syn);
        CHECK(std::abs(got - want) <= 1e-6 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("dm_loss rejects mismatched class sets") {
    std::vector<MatX<double>> two = {MatX<double>::Random(3, 2), MatX<double>::Random(3, 2)};
    std::vector<MatX<double>> one = {MatX<double>::Random(3, 2)};
    CHECK_THROWS_AS(dm_loss(two, one), ContractError);
    std::vector<MatX<double>> with_empty = {MatX<double>::Random(3, 2), MatX<double>(0, 2)};
    CHECK_THROWS_AS(dm_loss(two, with_empty), ContractError);
}

TEST_CASE("cc_loss single-sample class vanishes for beta >= 1") {
    Rng rng(7);
    for (double beta : {1.0, 1.5, 7.0}) {
        MatX<double> f(1, 4);
        for (int k = 0; k < 4; ++k) f(0, k) = rng.normal();
        CHECK(cc_loss<double>({f}, 1.0, beta).value == 0.0);
    }
}

TEST_CASE("cc_loss hand example: C=1, K=2, scalars {0,2}, alpha=1, beta=0") {
    MatX<double> f(2, 1);
    f << 0, 2;
    const double got = cc_loss<double>({f}, 1.0, 0.0).value;
    CHECK(got == doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("cc_loss matches the loop oracle on random instances") {
    Rng rng(313);
    for (int trial = 0; trial < 100; ++trial) {
        const int classes = 1 + static_cast<int>(rng.uniform_int(3));
        const int dim = 1 + static_cast<int>(rng.uniform_int(4));
        auto groups = random_groups(rng, classes, 5, dim);
        const double alpha = 0.1 + rng.uniform();
        const double beta = 2.0 * rng.uniform();
        const double got = cc_loss(groups, alpha, beta).value;
        const double want = oracle::cc_reference(groups, alpha, beta);
        CHECK(std::abs(got - want) <= 1e-6 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("cc_loss is monotone non-increasing in beta") {
    Rng rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        auto groups = random_groups(rng, 2, 5, 3);
        const double alpha = 0.2 + rng.uniform();
        double b1 = rng.uniform() * 1.5;
        double b2 = b1 + rng.uniform();
        CHECK(cc_loss(groups, alpha, b1).value >= cc_loss(groups, alpha, b2).value);
    }
}

TEST_CASE("cc_loss clamps the exponent and counts the hits") {
    MatX<double> f(2, 1);
    f << 0, 40;  // squared distance 400: exp would overflow without the clamp
    const auto res = cc_loss<double>({f}, 1.0, 0.0);
    CHECK(res.clamp_hits == 2);
    CHECK(std::isfinite(res.value));
    CHECK(res.value == doctest::Approx(2.0 * std::exp(kCcExponentClamp)));
}

TEST_CASE("cc_loss rejects empty class groups") {
    std::vector<MatX<double>> groups = {MatX<double>(0, 3)};
    CHECK_THROWS_AS(cc_loss(groups, 1.0, 0.0), ContractError);
}

TEST_CASE("class_covariance identities and hand example") {
    MatX<double> m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    const auto cov = class_covariance<double>({m, m});
    CHECK(cov.sigma.norm() == 0.0);

    MatX<double> s1(1, 2), s2(1, 2);
    s1 << 1, 0;
    s2 << 0, 1;
    const auto hand = class_covariance<double>({s1, s2});
    CHECK(hand.sigma.rows() == 1);
    CHECK(hand.sigma(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hand.mean(0, 0) == doctest::Approx(0.5));
    CHECK(hand.mean(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("class_covariance matches the double-loop oracle and stays PSD") {
    Rng rng(271);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + static_cast<int>(rng.uniform_int(4));
        const int hw = 1 + static_cast<int>(rng.uniform_int(6));
        const int k = 2 + static_cast<int>(rng.uniform_int(4));
        auto desc = random_descriptors(rng, k, d, hw);
        const auto got = class_covariance(desc);
        const auto want = oracle::covariance_reference(desc);
        CHECK((got.sigma - want).norm() <= 1e-6 * std::max(1.0, want.norm()));
        CHECK((got.sigma - got.sigma.transpose()).norm() <= 1e-9);
        Eigen::SelfAdjointEigenSolver<MatX<double>> eig(got.sigma);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-6);
    }
}

TEST_CASE("class_covariance rejects fewer than two samples") {
    MatX<double> one = MatX<double>::Random(3, 4);
    CHECK_THROWS_AS(class_covariance<double>({one}), DegenerateStatisticsError);
    CHECK_THROWS_AS(class_covariance<double>({}), DegenerateStatisticsError);
}

TEST_CASE("cm_loss identities, hand value, symmetry") {
    Rng rng(55);
    auto desc = random_descriptors(rng, 4, 3, 4);
    const auto cov = class_covariance(desc);
    CHECK(cm_loss<double>({cov}, {cov}) == 0.0);

    // chained from the covariance hand example: sigma_s = 0.5, sigma_r = 2.0
    MatX<double> a1(1, 2), a2(1, 2), b1(1, 2), b2(1, 2);
    a1 << 1, 0;
    a2 << 0, 1;
    b1 << 2, 0;
    b2 << 0, 2;  // deviations +-(1,-1): sigma = 2.0
    const auto cov_s = class_covariance<double>({a1, a2});
    const auto cov_r = class_covariance<double>({b1, b2});
    CHECK(cov_r.sigma(0, 0) == doctest::Approx(2.0));
    CHECK(cm_loss<double>({cov_r}, {cov_s}) == doctest::Approx(2.25).epsilon(1e-12));
    CHECK(cm_loss<double>({cov_r}, {cov_s}) == cm_loss<double>({cov_s}, {cov_r}));
}

TEST_CASE("cm_loss matches the elementwise oracle on random PSD pairs") {
    Rng rng(777);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + static_cast<int>(rng.uniform_int(4));
        const int hw = 1 + static_cast<int>(rng.uniform_int(6));
        std::vector<CovarianceStats<double>> real_cov, syn_cov;
        std::vector<MatX<double>> real_sig, syn_sig;
        const int classes = 1 + static_cast<int>(rng.uniform_int(3));
        for (int c = 0; c < classes; ++c) {
            auto r = class_covariance(random_descriptors(rng, 3, d, hw));
            auto s = class_covariance(random_descriptors(rng, 4, d, hw));
            real_sig.push_back(r.sigma);
            syn_sig.push_back(s.sigma);
            real_cov.push_back(std::move(r));
            syn_cov.push_back(std::move(s));
        }
        const double got = cm_loss(real_cov, syn_cov);
        const double want = oracle::cm_reference(real_sig, syn_sig);
        CHECK(std::abs(got - want) <= 1e-6 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("cm_loss rejects dimension mismatches") {
    Rng rng(3);
    auto a = class_covariance(random_descriptors(rng, 3, 2, 4));
    auto b = class_covariance(random_descriptors(rng, 3, 3, 4));
    CHECK_THROWS_AS((cm_loss<double>({a}, {b})), ContractError);
}

TEST_CASE("combined_loss arithmetic and error naming") {
    LossWeights w;
    w.lambda_cc = 0;
    w.lambda_cm = 0;
    CHECK(combined_loss(3.25, 100, 100, w) == 3.25);

    w.lambda_cc = 0.05;
    w.lambda_cm = 0.01;
    CHECK(combined_loss(1, 2, 3, w) == doctest::Approx(1.13).epsilon(1e-12));

    // linearity of the form
    const double l1 = combined_loss(1.0, 2.0, 3.0, w);
    const double l2 = combined_loss(2.0, 4.0, 6.0, w);
    CHECK(l2 == doctest::Approx(2 * l1).epsilon(1e-12));

    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_WITH_AS(combined_loss(inf, 0, 0, w), doctest::Contains("base"), NumericError);
    CHECK_THROWS_WITH_AS(combined_loss(0, inf, 0, w), doctest::Contains("cc"), NumericError);
    CHECK_THROWS_WITH_AS(combined_loss(0, 0, inf, w), doctest::Contains("cm"), NumericError);
}

TEST_CASE("losses are invariant to sample order within a class") {
    Rng rng(41);
    auto real = random_groups(rng, 2, 6, 3);
    auto syn = random_groups(rng, 2, 6, 3);
    auto desc = random_descriptors(rng, 5, 3, 4);

    auto real_shuffled = real;
    auto syn_shuffled = syn;
    for (auto& g : real_shuffled) g = g.colwise().reverse().eval();
    for (auto& g : syn_shuffled) g = g.colwise().reverse().eval();
    CHECK(std::abs(dm_loss(real, syn) - dm_loss(real_shuffled, syn_shuffled)) <= 1e-9);
    CHECK(std::abs(cc_loss(syn, 0.7, 0.3).value - cc_loss(syn_shuffled, 0.7, 0.3).value) <= 1e-9);

    auto desc_rev = desc;
    std::reverse(desc_rev.begin(), desc_rev.end());
    CHECK((class_covariance(desc).sigma - class_covariance(desc_rev).sigma).norm() <= 1e-9);
}

TEST_CASE("analytic loss gradients match central finite differences") {
    Rng rng(1234);
    const double step = 1e-5;

    SUBCASE("dm") {
        auto real = random_groups(rng, 2, 4, 3);
        auto syn = random_groups(rng, 2, 4, 3);
        auto grads = dm_loss_grad_syn(real, syn);
        for (std::size_t c = 0; c < syn.size(); ++c)
            for (Eigen::Index i = 0; i < syn[c].size(); ++i) {
                auto probe = syn;
                probe[c].data()[i] += step;
                const double up = dm_loss(real, probe);
                probe[c].data()[i] -= 2 * step;
                const double down = dm_loss(real, probe);
                const double fd = (up - down) / (2 * step);
                const double an = grads[c].data()[i];
                CHECK(std::abs(fd - an) <= 1e-4 * std::max({std::abs(fd), std::abs(an), 1e-6}));
            }
    }

    SUBCASE("cc") {
        auto groups = random_groups(rng, 2, 4, 3);
        const double alpha = 0.6, beta = 1.2;
        auto grads = cc_loss_grad(groups, alpha, beta);
        for (std::size_t c = 0; c < groups.size(); ++c)
            for (Eigen::Index i = 0; i < groups[c].size(); ++i) {
                auto probe = groups;
                probe[c].data()[i] += step;
                const double up = cc_loss(probe, alpha, beta).value;
                probe[c].data()[i] -= 2 * step;
                const double down = cc_loss(probe, alpha, beta).value;
                const double fd = (up - down) / (2 * step);
                const double an = grads[c].data()[i];
                CHECK(std::abs(fd - an) <= 1e-4 * std::max({std::abs(fd), std::abs(an), 1e-6}));
            }
    }

    SUBCASE("cm through class_covariance") {
        const int d = 3, hw = 4;
        auto real_desc = random_descriptors(rng, 5, d, hw);
        auto syn_desc = random_descriptors(rng, 4, d, hw);
        const auto real_cov = class_covariance(real_desc);

        auto value = [&](const std::vector<MatX<double>>& sd) {
            return cm_loss<double>({real_cov}, {class_covariance(sd)});
        };
        const auto syn_cov = class_covariance(syn_desc);
        auto grads = cm_loss_grad_syn<double>({real_cov}, {syn_desc}, {syn_cov});
        for (std::size_t j = 0; j < syn_desc.size(); ++j)
            for (Eigen::Index i = 0; i < syn_desc[j].size(); ++i) {
                auto probe = syn_desc;
                probe[j].data()[i] += step;
                const double up = value(probe);
                probe[j].data()[i] -= 2 * step;
                const double down = value(probe);
                const double fd = (up - down) / (2 * step);
                const double an = grads[0][j].data()[i];
                CHECK(std::abs(fd - an) <= 1e-4 * std::max({std::abs(fd), std::abs(an), 1e-6}));
            }
    }
}
