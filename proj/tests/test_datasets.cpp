#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"

#include "distillkit/datasets.hpp"
#include "distillkit/errors.hpp"

using namespace distillkit;
namespace fs = std::filesystem;

namespace {

// Binary PGM (P5), enough for the folder-ingestion tests.
void write_pgm(const std::string& path, int w, int h, unsigned char value) {
    std::ofstream f(path, std::ios::binary);
    f << "P5\n" << w << " " << h << "\n255\n";
    for (int i = 0; i < w * h; ++i) f.put(static_cast<char>(value));
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("distillkit_test_" + tag + "_" +
                                            std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

double mean_pixel_distance(const Tensor<float>& images, const std::vector<int>& a,
                           const std::vector<int>& b) {
    double total = 0;
    long count = 0;
    for (int i : a)
        for (int j : b) {
            if (i == j) continue;
            double d = 0;
            const float* pi = images.sample_ptr(i);
            const float* pj = images.sample_ptr(j);
            for (int k = 0; k < images.sample_size(); ++k) {
                const double dv = pi[k] - pj[k];
                d += dv * dv;
            }
            total += std::sqrt(d);
            ++count;
        }
    return total / count;
}

}  // namespace

TEST_CASE("gaussian dataset: cardinality and determinism") {
    auto a = make_gaussian_class_dataset(2, 4, {1, 8, 8}, 0.5, 0.1, 7);
    CHECK(a.num_samples() == 8);
    CHECK(a.num_classes() == 2);
    CHECK(a.class_index[0].size() == 4);

    auto b = make_gaussian_class_dataset(2, 4, {1, 8, 8}, 0.5, 0.1, 7);
    CHECK(a.images.data == b.images.data);
    CHECK(a.labels == b.labels);

    auto c = make_gaussian_class_dataset(2, 4, {1, 8, 8}, 0.5, 0.1, 8);
    CHECK(a.images.data != c.images.data);
}

TEST_CASE("gaussian dataset: within-class distances are smaller than between-class") {
    auto set = make_gaussian_class_dataset(10, 100, {3, 16, 16}, 0.5, 0.05, 1);
    double within = 0, between = 0;
    int pairs = 0;
    for (int c = 0; c < 10; ++c) {
        within += mean_pixel_distance(set.images, set.class_index[c], set.class_index[c]);
        const int other = (c + 1) % 10;
        between += mean_pixel_distance(set.images, set.class_index[c], set.class_index[other]);
        ++pairs;
    }
    CHECK(within / pairs < between / pairs);
}

TEST_CASE("gaussian dataset: precondition violations") {
    CHECK_THROWS_AS(make_gaussian_class_dataset(1, 4, {1, 8, 8}, 0.5, 0.1, 7), ConfigError);
    CHECK_THROWS_AS(make_gaussian_class_dataset(2, 1, {1, 8, 8}, 0.5, 0.1, 7), ConfigError);
    CHECK_THROWS_AS(make_gaussian_class_dataset(2, 4, {1, 8, 8}, 0.5, 0.0, 7), ConfigError);
    CHECK_THROWS_AS(make_gaussian_class_dataset(2, 4, {0, 8, 8}, 0.5, 0.1, 7), ConfigError);
}

TEST_CASE("dataset invariants hold after construction") {
    auto set = make_gaussian_class_dataset(4, 7, {1, 6, 6}, 0.4, 0.2, 3);
    for (int c = 0; c < set.num_classes(); ++c)
        for (int idx : set.class_index[c]) CHECK(set.labels[idx] == c);
    int indexed = 0;
    for (const auto& cls : set.class_index) indexed += static_cast<int>(cls.size());
    CHECK(indexed == set.num_samples());
    for (float v : set.images.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("load_image_folder: counting, sorted class ids, errors") {
    TempDir dir("folder");
    fs::create_directories(dir.path / "b");
    fs::create_directories(dir.path / "a");
    for (int i = 0; i < 3; ++i) {
        write_pgm((dir.path / "a" / ("img" + std::to_string(i) + ".pgm")).string(), 12, 12, 40);
        write_pgm((dir.path / "b" / ("img" + std::to_string(i) + ".pgm")).string(), 12, 12, 200);
    }

    auto set = load_image_folder(dir.path.string(), {1, 8, 8});
    CHECK(set.num_samples() == 6);
    CHECK(set.num_classes() == 2);
    CHECK(set.images.h == 8);
    CHECK(set.images.w == 8);
    // sorted names: "a" is class 0; its constant gray level is 40/255
    CHECK(set.images.at(set.class_index[0][0], 0, 4, 4) ==
          doctest::Approx(40.0 / 255.0).epsilon(1e-6));
    CHECK(set.images.at(set.class_index[1][0], 0, 4, 4) ==
          doctest::Approx(200.0 / 255.0).epsilon(1e-6));

    SUBCASE("missing path") {
        CHECK_THROWS_AS(load_image_folder((dir.path / "nope").string(), {1, 8, 8}),
                        IngestionError);
    }
    SUBCASE("empty class directory") {
        fs::create_directories(dir.path / "c");
        CHECK_THROWS_AS(load_image_folder(dir.path.string(), {1, 8, 8}), IngestionError);
    }
    SUBCASE("undecodable file names the file") {
        std::ofstream bad(dir.path / "a" / "broken.png");
        bad << "not an image";
        bad.close();
        CHECK_THROWS_WITH_AS(load_image_folder(dir.path.string(), {1, 8, 8}),
                             doctest::Contains("broken.png"), IngestionError);
    }
}

TEST_CASE("sample_class_batch: replacement policy and determinism") {
    auto set = make_gaussian_class_dataset(3, 10, {1, 5, 5}, 0.4, 0.1, 21);

    SUBCASE("without replacement exhausts the class") {
        Rng rng(5);
        auto batch = sample_class_batch(set, 1, 10, rng);
        std::set<int> unique(batch.source_indices.begin(), batch.source_indices.end());
        CHECK(unique.size() == 10);
        for (int idx : batch.source_indices) CHECK(set.labels[idx] == 1);
    }
    SUBCASE("with replacement when the class is too small") {
        auto small = make_gaussian_class_dataset(2, 3, {1, 5, 5}, 0.4, 0.1, 22);
        Rng rng(5);
        auto batch = sample_class_batch(small, 0, 8, rng);
        CHECK(batch.images.n == 8);
        for (int idx : batch.source_indices) CHECK(small.labels[idx] == 0);
    }
    SUBCASE("fixed seed reproduces the index sequence") {
        Rng r1(123), r2(123);
        auto b1 = sample_class_batch(set, 2, 6, r1);
        auto b2 = sample_class_batch(set, 2, 6, r2);
        CHECK(b1.source_indices == b2.source_indices);
        CHECK(b1.images.data == b2.images.data);
    }
    SUBCASE("unknown class id") {
        Rng rng(9);
        CHECK_THROWS_AS(sample_class_batch(set, 17, 2, rng), LookupError);
        CHECK_THROWS_AS(sample_class_batch(set, -1, 2, rng), LookupError);
    }
    SUBCASE("labels always match the requested class") {
        Rng rng(77);
        for (int trial = 0; trial < 20; ++trial) {
            const int cls = static_cast<int>(rng.uniform_int(3));
            const int b = 1 + static_cast<int>(rng.uniform_int(12));
            auto batch = sample_class_batch(set, cls, b, rng);
            for (int idx : batch.source_indices) CHECK(set.labels[idx] == cls);
        }
    }
}

TEST_CASE("init_synthetic_from_real: copy semantics and provenance") {
    auto set = make_gaussian_class_dataset(10, 12, {1, 6, 6}, 0.4, 0.1, 31);

    SUBCASE("ipc=1 copies one real image per class") {
        auto syn = init_synthetic_from_real(set, 1, 4);
        CHECK(syn.pixels.n == 10);
        for (int c = 0; c < 10; ++c) {
            const int src = syn.provenance.source_ids[c];
            CHECK(set.labels[src] == c);
            for (int k = 0; k < set.images.sample_size(); ++k)
                CHECK(syn.pixels.sample_ptr(c)[k] == set.images.sample_ptr(src)[k]);
        }
    }
    SUBCASE("ipc=10 cardinality and invariants") {
        auto syn = init_synthetic_from_real(set, 10, 4);
        CHECK(syn.pixels.n == 100);
        CHECK(syn.ipc == 10);
        syn.check_invariants();
        // every initial pixel array equals its recorded source exactly
        for (int row = 0; row < syn.pixels.n; ++row) {
            const int src = syn.provenance.source_ids[row];
            for (int k = 0; k < set.images.sample_size(); ++k)
                CHECK(syn.pixels.sample_ptr(row)[k] == set.images.sample_ptr(src)[k]);
        }
        // per-class sources are distinct
        for (int c = 0; c < 10; ++c) {
            std::set<int> unique(syn.provenance.source_ids.begin() + c * 10,
                                 syn.provenance.source_ids.begin() + (c + 1) * 10);
            CHECK(unique.size() == 10);
        }
    }
    SUBCASE("different seeds draw different sources") {
        auto s1 = init_synthetic_from_real(set, 4, 1);
        auto s2 = init_synthetic_from_real(set, 4, 2);
        CHECK(s1.provenance.source_ids != s2.provenance.source_ids);
    }
    SUBCASE("class smaller than ipc is rejected") {
        CHECK_THROWS_AS(init_synthetic_from_real(set, 13, 4), ConfigError);
    }
}

TEST_CASE("remap_classes keeps images and relabels contiguously") {
    auto set = make_gaussian_class_dataset(5, 6, {1, 4, 4}, 0.4, 0.1, 41);
    auto sub = remap_classes(set, {3, 1});
    CHECK(sub.num_samples() == 12);
    CHECK(sub.num_classes() == 2);
    for (int i = 0; i < sub.num_samples(); ++i) {
        const int parent = sub.parent_index[i];
        CHECK(sub.labels[i] == (set.labels[parent] == 3 ? 0 : 1));
        for (int k = 0; k < set.images.sample_size(); ++k)
            CHECK(sub.images.sample_ptr(i)[k] == set.images.sample_ptr(parent)[k]);
    }
}
