#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "gradient_suite.hpp"
#include "insitu/seg/fcn.hpp"
#include "insitu/synth/synth.hpp"
#include "insitu/tensor/ops.hpp"

using namespace insitu;
using namespace insitu::seg;
using insitu::testing::random_tensor;
using tensor::Shape;
using tensor::Tensor;

namespace {

FCNConfig small(std::uint64_t seed = 1)
{
    return {{4, 6, 8}, seed};
}

} // namespace

TEST_CASE("segment shapes")
{
    FCN model(small());
    std::mt19937_64 rng(1);
    for (auto [h, w] : {std::pair{8, 8}, {16, 24}, {40, 32}}) {
        auto m = segment(model, random_tensor({1, std::size_t(h), std::size_t(w)}, rng, 0, 1, false));
        CHECK(m.height == std::size_t(h));
        CHECK(m.width == std::size_t(w));
        CHECK(m.labels.size() == std::size_t(h * w));
        CHECK(m.logits->shape() == Shape{3, std::size_t(h), std::size_t(w)});
        for (auto l : m.labels) CHECK(l <= 2);
    }

    auto frame300 = random_tensor({1, 300, 300}, rng, 0, 1, false);
    CHECK_THROWS_AS(segment(model, frame300), ShapeError);
    try {
        segment(model, frame300);
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("pad") != std::string::npos);
    }
    auto m = segment_padded(model, frame300);
    CHECK(m.height == 300);
    CHECK(m.width == 300);
    CHECK(m.labels.size() == 90000);
    CHECK(mask_from_logits(*m.logits).labels == m.labels);
}

TEST_CASE("argmax and probabilities")
{
    std::vector<double> v(3 * 4, 0.0);
    for (std::size_t p = 0; p < 4; ++p) v[2 * 4 + p] = 1.0;
    for (auto l : mask_from_logits(Tensor::from({3, 2, 2}, v)).labels) CHECK(l == plasma_arc);
    for (auto l : mask_from_logits(Tensor::full({3, 2, 2}, 0.3)).labels) CHECK(l == background);
    CHECK(mask_from_logits(Tensor::from({3, 1, 1}, {0.0, 2.0, 2.0})).labels[0] == molten_pool);

    FCN model(small());
    std::mt19937_64 rng(2);
    auto logits = model.logits(random_tensor({1, 16, 16}, rng, 0, 1, false), false);
    auto prob = tensor::softmax(logits, 0);
    for (std::size_t p = 0; p < 256; ++p) {
        const double s = prob.data()[p] + prob.data()[256 + p] + prob.data()[512 + p];
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("cross-entropy anchors")
{
    std::vector<std::uint8_t> labels{0, 1, 2, 1};
    CHECK(tensor::cross_entropy(Tensor::zeros({3, 2, 2}), labels).item() == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    std::vector<double> onehot(12, 0.0);
    for (std::size_t p = 0; p < 4; ++p) onehot[labels[p] * 4 + p] = 10.0;
    CHECK(tensor::cross_entropy(Tensor::from({3, 2, 2}, onehot), labels).item() < 1e-3);
}

TEST_CASE("training reduces the loss")
{
    FCN model(small(3));
    std::vector<SegSample> batch;
    for (std::size_t i = 0; i < 4; ++i) {
        auto f = synth::meltpool_frame(5, i, {32, true});
        batch.push_back({f.frame, f.labels});
    }
    SegTrainer trainer(model, 3e-3);
    const double first = trainer.step(batch);
    double last = first;
    for (int i = 0; i < 99; ++i) last = trainer.step(batch);
    CHECK(last < first);

    std::vector<SegSample> bad{{batch[0].frame, std::vector<std::uint8_t>(1024, 3)}};
    CHECK_THROWS_AS(trainer.step(bad), DataError);
}

TEST_CASE("FCN gradient check")
{
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto r = insitu::testing::fcn_gradient_check(seed, 4);
        INFO("seed ", seed, " worst ", r.worst, " err ", r.max_rel_error);
        CHECK(r.max_rel_error < 1e-3);
    }
}

TEST_CASE("areas and accuracy")
{
    SegMask empty{20, 20, std::vector<std::uint8_t>(400, 0), std::nullopt};
    CHECK(extract_areas(empty).molten_pool_px == 0);
    CHECK(extract_areas(empty).plasma_arc_px == 0);

    SegMask square = empty;
    for (std::size_t y = 5; y < 15; ++y) {
        for (std::size_t x = 3; x < 13; ++x) square.labels[y * 20 + x] = molten_pool;
    }
    CHECK(extract_areas(square).molten_pool_px == 100);
    CHECK(extract_areas(square).plasma_arc_px == 0);

    SegMask other = empty;
    for (std::size_t i = 0; i < 30; ++i) other.labels[i] = plasma_arc;
    for (std::size_t i = 380; i < 400; ++i) other.labels[i] = molten_pool;
    SegMask both = square;
    for (std::size_t i = 0; i < 400; ++i) {
        if (other.labels[i]) both.labels[i] = other.labels[i];
    }
    CHECK(extract_areas(both).molten_pool_px == extract_areas(square).molten_pool_px + extract_areas(other).molten_pool_px);
    CHECK(extract_areas(both).plasma_arc_px == extract_areas(square).plasma_arc_px + extract_areas(other).plasma_arc_px);

    CHECK(pixel_accuracy(square.labels, square.labels) == 1.0);
    std::vector<std::uint8_t> a(50), b(50);
    for (std::size_t i = 0; i < 50; ++i) {
        a[i] = i % 2;
        b[i] = 1 - a[i];
    }
    CHECK(pixel_accuracy(a, b) == 0.0);
    CHECK(pixel_accuracy(square.labels, other.labels) == pixel_accuracy(other.labels, square.labels));
    CHECK(pixel_accuracy(square.labels, other.labels) < 1.0);
    CHECK_THROWS_AS(pixel_accuracy(a, square.labels), ShapeError);
}

TEST_CASE("mask PNG and checkpoint round trips")
{
    auto dir = std::filesystem::temp_directory_path() / "insitu_test_seg";
    std::filesystem::create_directories(dir);
    auto f = synth::meltpool_frame(9, 0, {});
    SegMask m{64, 64, f.labels, std::nullopt};
    write_mask_png(dir / "m.png", m);
    CHECK(read_mask_png(dir / "m.png").labels == f.labels);

    FCN model(small(4));
    std::mt19937_64 rng(5);
    auto x = random_tensor({1, 16, 16}, rng, 0, 1, false);
    model.logits(x, true);
    model.save(dir / "fcn.vsr");
    auto loaded = FCN::load(dir / "fcn.vsr");
    auto a = segment(model, x).logits->data();
    auto b = segment(loaded, x).logits->data();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("synthetic data")
{
    SUBCASE("meltpool")
    {
        auto f = synth::meltpool_frame(3, 7);
        CHECK(f.frame.shape() == Shape{1, 64, 64});
        std::set<std::uint8_t> classes(f.labels.begin(), f.labels.end());
        CHECK(classes == std::set<std::uint8_t>{0, 1, 2});
        auto g = synth::meltpool_frame(3, 7);
        CHECK(std::vector<double>(f.frame.data().begin(), f.frame.data().end()) ==
              std::vector<double>(g.frame.data().begin(), g.frame.data().end()));
        CHECK(f.labels == g.labels);
        auto h = synth::meltpool_frame(4, 7);
        CHECK(h.labels != f.labels);
        for (double v : f.frame.data()) CHECK(std::abs(v * 255 - std::round(v * 255)) < 1e-9);
    }
    SUBCASE("motion")
    {
        auto clip = synth::motion_clip(1, 0);
        REQUIRE(clip.size() == 8);
        CHECK(clip[0].shape() == Shape{1, 128, 128});
        auto again = synth::motion_clip(1, 0);
        for (std::size_t t = 0; t < 8; ++t) {
            CHECK(std::vector<double>(clip[t].data().begin(), clip[t].data().end()) ==
                  std::vector<double>(again[t].data().begin(), again[t].data().end()));
        }
        bool moved = false;
        for (std::size_t i = 0; i < clip[0].numel(); ++i) moved = moved || clip[0].data()[i] != clip[1].data()[i];
        CHECK(moved);
        for (double v : clip[3].data()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}
