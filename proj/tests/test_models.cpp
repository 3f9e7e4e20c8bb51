#include <cmath>

#include "doctest.h"

#include "distillkit/models.hpp"
#include "distillkit/training.hpp"

using namespace distillkit;

namespace {

Tensor<double> random_input(Rng& rng, int n, int c, int h, int w) {
    Tensor<double> t(n, c, h, w);
    for (auto& v : t.data) v = rng.uniform();
    return t;
}

const std::vector<Family> kFamilies = {Family::convnet, Family::resnet18, Family::alexnet,
                                       Family::vgg11};

}  // namespace

TEST_CASE("sample_params is deterministic and seed-sensitive") {
    ExtractorSpec spec;
    spec.family = Family::convnet;
    spec.width = 8;
    spec.in_channels = 1;

    Rng r1(5), r2(5), r3(6);
    const auto a = sample_params(spec, r1);
    const auto b = sample_params(spec, r2);
    const auto c = sample_params(spec, r3);
    CHECK(a.content_hash() == b.content_hash());
    CHECK(a.content_hash() != c.content_hash());
    CHECK_FALSE(a.trained);
}

TEST_CASE("first conv layer init std tracks the fan-in formula over 50 seeds") {
    ExtractorSpec spec;
    spec.family = Family::convnet;
    spec.width = 16;
    spec.in_channels = 3;
    const double predicted = std::sqrt(2.0 / (3 * 3 * 3));

    double sum = 0, sum_sq = 0;
    long count = 0;
    for (int s = 0; s < 50; ++s) {
        Rng rng(1000 + s);
        const auto params = sample_params(spec, rng);
        REQUIRE(params.arrays[0].name == "block0.conv.weight");
        for (float v : params.arrays[0].values) {
            sum += v;
            sum_sq += static_cast<double>(v) * v;
            ++count;
        }
    }
    const double mean = sum / count;
    const double std = std::sqrt(sum_sq / count - mean * mean);
    CHECK(std == doctest::Approx(predicted).epsilon(0.2));
}

TEST_CASE("zero input through a freshly initialized convnet gives a zero feature map") {
    ExtractorSpec spec;
    spec.family = Family::convnet;
    spec.width = 8;
    spec.in_channels = 1;
    Rng rng(9);
    const auto params = sample_params(spec, rng);
    Tensor<double> zeros(2, 1, 12, 12);
    const auto fm = extract(spec, params, zeros, OutputMode::feature_map);
    for (double v : fm.data) CHECK(v == 0.0);
}

TEST_CASE("batch leading dimension is preserved") {
    ExtractorSpec spec;
    spec.family = Family::convnet;
    spec.width = 4;
    spec.in_channels = 2;
    Rng rng(3);
    const auto params = sample_params(spec, rng);
    Rng data_rng(4);
    const auto fm = extract(spec, params, random_input(data_rng, 5, 2, 10, 10),
                            OutputMode::feature_map);
    CHECK(fm.n == 5);
}

TEST_CASE("32x32 output shapes match the frozen table for every family") {
    struct Row {
        Family family;
        int d, h, w;
    };
    const Row table[] = {{Family::convnet, 128, 4, 4},
                         {Family::resnet18, 512, 4, 4},
                         {Family::alexnet, 192, 4, 4},
                         {Family::vgg11, 512, 1, 1}};
    for (const Row& row : table) {
        ExtractorSpec spec;
        spec.family = row.family;
        spec.in_channels = 3;
        Rng rng(17);
        const auto params = sample_params(spec, rng);
        Tensor<double> x(1, 3, 32, 32);
        const auto fm = extract(spec, params, x, OutputMode::feature_map);
        CAPTURE(family_name(row.family));
        CHECK(fm.c == row.d);
        CHECK(fm.h == row.h);
        CHECK(fm.w == row.w);
        CHECK(fm.c == spec.feature_dim());
        CHECK(fm.c * fm.h * fm.w >= 1);
    }
}

TEST_CASE("forward pass is pure and pooled mode equals the spatial mean") {
    for (Family f : kFamilies) {
        ExtractorSpec spec;
        spec.family = f;
        spec.width = 4;
        spec.in_channels = 1;
        Rng rng(23);
        const auto params = sample_params(spec, rng);
        Rng data_rng(24);
        const auto x = random_input(data_rng, 2, 1, 10, 10);
        const auto f1 = extract(spec, params, x, OutputMode::feature_map);
        const auto f2 = extract(spec, params, x, OutputMode::feature_map);
        CHECK(f1.data == f2.data);

        const auto pooled = extract(spec, params, x, OutputMode::pooled_vector);
        CHECK(pooled.h == 1);
        CHECK(pooled.w == 1);
        for (int n = 0; n < f1.n; ++n)
            for (int c = 0; c < f1.c; ++c) {
                double mean = 0;
                for (int i = 0; i < f1.plane(); ++i)
                    mean += f1.sample_ptr(n)[c * f1.plane() + i];
                mean /= f1.plane();
                CHECK(pooled.at(n, c, 0, 0) == doctest::Approx(mean).epsilon(1e-9));
            }
    }
}

TEST_CASE("extract rejects channel mismatches") {
    ExtractorSpec spec;
    spec.family = Family::convnet;
    spec.width = 4;
    spec.in_channels = 3;
    Rng rng(31);
    const auto params = sample_params(spec, rng);
    Tensor<double> x(1, 1, 10, 10);
    CHECK_THROWS_AS(extract(spec, params, x, OutputMode::feature_map), ContractError);
}

TEST_CASE("input gradients match finite differences for every family") {
    for (Family f : kFamilies) {
        CAPTURE(family_name(f));
        ExtractorSpec spec;
        spec.family = f;
        spec.width = 3;
        spec.in_channels = 1;
        FeatureNet<double> net(spec);
        Rng rng(47);
        net.init(rng);

        Rng data_rng(48);
        auto x = random_input(data_rng, 1, 1, 8, 8);
        auto fm = net.forward(x, true);
        // L = <G, net(x)> with a fixed random cotangent G
        Tensor<double> g(fm.n, fm.c, fm.h, fm.w);
        Rng cot_rng(49);
        for (auto& v : g.data) v = cot_rng.normal();
        auto analytic = net.backward(g, false);

        auto loss_at = [&](const Tensor<double>& probe) {
            auto out = net.forward(probe, false);
            double acc = 0;
            for (std::size_t i = 0; i < out.data.size(); ++i) acc += out.data[i] * g.data[i];
            return acc;
        };
        const double step = 1e-5;
        double max_rel = 0;
        for (std::size_t i = 0; i < x.data.size(); i += 5) {
            auto probe = x;
            probe.data[i] += step;
            const double up = loss_at(probe);
            probe.data[i] -= 2 * step;
            const double down = loss_at(probe);
            const double fd = (up - down) / (2 * step);
            const double an = analytic.data[i];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
            max_rel = std::max(max_rel, std::abs(fd - an) / denom);
        }
        CHECK(max_rel < 1e-4);
    }
}

TEST_CASE("parameter gradients match finite differences on a small classifier") {
    ExtractorSpec spec;
    spec.family = Family::convnet;
    spec.width = 3;
    spec.in_channels = 1;
    ClassifierNet<double> net(spec, 3);
    Rng rng(61);
    net.init(rng);

    Rng data_rng(62);
    auto x = random_input(data_rng, 4, 1, 8, 8);
    const std::vector<int> labels = {0, 1, 2, 1};

    auto logits = net.forward(x, true);
    Tensor<double> grad;
    softmax_cross_entropy(logits, labels, grad);
    net.zero_grads();
    net.backward(grad, true);
    auto views = net.params();

    auto loss_at = [&]() {
        auto out = net.forward(x, false);
        Tensor<double> g;
        return softmax_cross_entropy(out, labels, g);
    };
    const double step = 1e-5;
    double max_rel = 0;
    for (auto& view : views) {
        for (std::size_t i = 0; i < view.size; i += 17) {
            const double orig = view.values[i];
            view.values[i] = orig + step;
            const double up = loss_at();
            view.values[i] = orig - step;
            const double down = loss_at();
            view.values[i] = orig;
            const double fd = (up - down) / (2 * step);
            const double an = view.grads[i];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
            max_rel = std::max(max_rel, std::abs(fd - an) / denom);
        }
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("pretrain_embedder separates a linearly separable two-class set") {
    // vertical vs horizontal stripes: a spatial pattern survives the
    // per-sample instance normalization (a pure intensity shift would not)
    LabeledImageSet set;
    const int per_class = 20;
    set.images = Tensor<float>(2 * per_class, 1, 8, 8);
    set.labels.resize(2 * per_class);
    Rng rng(71);
    for (int i = 0; i < 2 * per_class; ++i) {
        const int cls = i < per_class ? 0 : 1;
        set.labels[i] = cls;
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                const int phase = cls ? y % 2 : x % 2;
                set.images.at(i, 0, y, x) = static_cast<float>(
                    std::clamp(0.3 + 0.4 * phase + 0.05 * rng.normal(), 0.0, 1.0));
            }
    }
    set.finalize(2);

    ExtractorSpec spec;
    spec.family = Family::resnet18;
    spec.width = 2;
    spec.in_channels = 1;
    const auto result = pretrain_embedder(spec, set, 30, 5);
    CHECK(result.train_accuracy > 0.9);
    CHECK(result.params.trained);

    SUBCASE("same seed reproduces identical parameters") {
        const auto again = pretrain_embedder(spec, set, 30, 5);
        CHECK(again.params.content_hash() == result.params.content_hash());
    }
    SUBCASE("epochs below one are rejected") {
        CHECK_THROWS_AS(pretrain_embedder(spec, set, 0, 5), ConfigError);
    }
}
