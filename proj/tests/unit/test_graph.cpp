#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "insitu/graph/benchmark.hpp"
#include "insitu/graph/build.hpp"
#include "insitu/graph/passes.hpp"
#include "insitu/tensor/ops.hpp"

using namespace insitu;
using namespace insitu::graph;
using insitu::testing::random_tensor;

namespace {

// Trained-looking BN statistics and a full-size value branch.
template <class Model>
void perturb(Model& model, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& [name, t] : model.named_tensors()) {
        auto d = t.mutable_data();
        auto has = [&](const char* s) { return name.find(s) != std::string::npos; };
        for (auto& v : d) {
            if (has("running_var")) v = 0.5 + 1.5 * u(rng);
            else if (has("running_mean")) v = u(rng) - 0.5;
            else if (has("gamma")) v = 0.5 + u(rng);
            else if (has("beta") || has("bias")) v = 0.4 * (u(rng) - 0.5);
            else if (has("v.conv.weight")) v = 0.3 * (u(rng) - 0.5);
        }
    }
}

sr::ViTSR tiny_vitsr(sr::Variant variant, std::uint64_t seed = 1)
{
    sr::ViTSRConfig cfg;
    cfg.r = 2;
    cfg.n_cells = 2;
    cfg.feat_channels = 6;
    cfg.variant = variant;
    cfg.seed = seed;
    sr::ViTSR m(cfg);
    perturb(m, seed + 10);
    return m;
}

std::vector<double> values(const Tensor& t)
{
    return {t.data().begin(), t.data().end()};
}

} // namespace

TEST_CASE("graphs reproduce eval-mode forwards")
{
    std::mt19937_64 rng(3);
    for (auto variant : {sr::Variant::full, sr::Variant::d1_no_encoding, sr::Variant::d2_duf_style, sr::Variant::d3_2d_conv}) {
        auto m = tiny_vitsr(variant);
        auto g = build_graph(m, 10, 12);
        CHECK(g.input_shape() == Shape{3, 10, 12});
        CHECK(g.output_shape() == Shape{1, 20, 24});
        Executor<double> exec(g);
        for (int i = 0; i < 3; ++i) {
            auto x = random_tensor({3, 10, 12}, rng, 0, 1, false);
            auto want = sr::super_resolve(m, x);
            CHECK(relative_deviation(values(exec.run(x)), values(want)) < 1e-10);
        }
    }

    sr::ViTSRConfig cfg;
    cfg.N = 0;
    cfg.r = 2;
    cfg.n_cells = 1;
    cfg.feat_channels = 4;
    sr::ViTSR single(cfg);
    perturb(single, 5);
    auto x0 = random_tensor({1, 6, 6}, rng, 0, 1, false);
    CHECK(relative_deviation(values(Executor<double>(build_graph(single, 6, 6)).run(x0)),
                             values(sr::super_resolve(single, x0))) < 1e-10);

    seg::FCN fcn({{4, 6, 8}, 2});
    perturb(fcn, 6);
    auto fg = build_graph(fcn, 16, 24);
    auto frame = random_tensor({1, 16, 24}, rng, 0, 1, false);
    tensor::NoGradGuard guard;
    CHECK(relative_deviation(values(Executor<double>(fg).run(frame)), values(fcn.logits(frame, false))) < 1e-10);
}

TEST_CASE("conv-BN folding")
{
    SUBCASE("identity normalization leaves the conv unchanged")
    {
        tensor::Rng rng(1);
        auto layer = tensor::Conv2dLayer::create(2, 3, 3, rng);
        InferenceGraph g;
        auto c = g.add_conv(g.add_input({2, 5, 5}), layer, "c");
        const double eps = 1e-5;
        BatchNormParams bn{{1, 1, 1}, {0, 0, 0}, {0, 0, 0}, {1 - eps, 1 - eps, 1 - eps}, eps};
        auto fused = fuse_conv_bn(g.node(c).conv, bn);
        for (std::size_t i = 0; i < fused.weight.size(); ++i) {
            CHECK(fused.weight[i] == doctest::Approx(g.node(c).conv.weight[i]).epsilon(1e-15));
        }
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(fused.bias[i] - g.node(c).conv.bias[i]) < 1e-15);
    }

    SUBCASE("one node fewer per pair, same outputs")
    {
        auto m = tiny_vitsr(sr::Variant::full, 4);
        auto g = build_graph(m, 8, 8);
        auto f = g;
        const std::size_t bns = g.count(OpKind::batch_norm);
        auto report = fuse_conv_bn(f);
        CHECK(report.fused == bns);
        CHECK(report.diagnostics.empty());
        CHECK(f.size() == g.size() - report.fused);
        CHECK(f.count(OpKind::batch_norm) == 0);
        CHECK(f.count(OpKind::conv) == g.count(OpKind::conv));

        Executor<double> a(g), b(f);
        std::mt19937_64 rng(8);
        for (int i = 0; i < 20; ++i) {
            auto x = random_tensor({3, 8, 8}, rng, 0, 1, false);
            CHECK(relative_deviation(values(b.run(x)), values(a.run(x))) < 1e-5);
        }

        seg::FCN fcn({{4, 6, 8}, 3});
        perturb(fcn, 9);
        auto sg = build_graph(fcn, 16, 16);
        auto sf = sg;
        CHECK(fuse_conv_bn(sf).fused == 12);
        CHECK(sf.size() == sg.size() - 12);
        auto frame = random_tensor({1, 16, 16}, rng, 0, 1, false);
        CHECK(relative_deviation(values(Executor<double>(sf).run(frame)), values(Executor<double>(sg).run(frame))) < 1e-10);
    }

    SUBCASE("unfusable BN nodes get a diagnostic")
    {
        tensor::Rng rng(2);
        auto layer = tensor::Conv2dLayer::create(1, 2, 3, rng);
        auto bn = tensor::BatchNormLayer::create(2);
        InferenceGraph g;
        auto c = g.add_conv(g.add_input({1, 4, 4}), layer, "c");
        auto b1 = g.add_batch_norm(g.add_relu(c), bn, "after_relu");
        auto shared = g.add_conv(b1, tensor::Conv2dLayer::create(2, 2, 1, rng), "shared");
        auto b2 = g.add_batch_norm(shared, bn, "second_use");
        g.set_output(g.add_add(b2, shared));
        const auto before = g.size();
        auto report = fuse_conv_bn(g);
        CHECK(report.fused == 0);
        REQUIRE(report.diagnostics.size() == 2);
        CHECK(report.diagnostics[0].find("after_relu") != std::string::npos);
        CHECK(report.diagnostics[1].find("2 consumers") != std::string::npos);
        CHECK(g.size() == before);
    }
}

TEST_CASE("magnitude pruning")
{
    auto prune = [](std::vector<std::vector<double>>& ws, double s) {
        std::vector<std::span<double>> spans(ws.begin(), ws.end());
        return prune_magnitude(spans, s);
    };
    std::vector<std::vector<double>> w{{1, -2, 3, -4}};
    auto masks = prune(w, 0.5);
    CHECK(w[0] == std::vector<double>{0, 0, 3, -4});
    CHECK(masks[0] == std::vector<std::uint8_t>{0, 0, 1, 1});

    w = {{1, -2, 3, -4}};
    prune(w, 0.0);
    CHECK(w[0] == std::vector<double>{1, -2, 3, -4});

    w = {{1, 1, -1, 1}};
    prune(w, 0.5);
    CHECK(w[0] == std::vector<double>{0, 0, -1, 1});

    w = {{5, 0.1, 2}, {0.2, 7, -0.05}};
    prune(w, 0.5);
    CHECK(w[0] == std::vector<double>{5, 0, 2});
    CHECK(w[1] == std::vector<double>{0, 7, 0});

    CHECK_THROWS_AS(prune(w, 1.0), UsageError);
    CHECK_THROWS_AS(prune(w, -0.1), UsageError);

    auto m = tiny_vitsr(sr::Variant::full, 7);
    auto g = build_graph(m, 8, 8);
    std::size_t biases = 0, bn_values = 0;
    for (const auto& n : g.nodes()) {
        biases += n.conv.bias.size();
        bn_values += n.bn.gamma.size();
    }
    auto base = g;
    for (double s : {0.0, 0.3, 0.75}) {
        auto p = base;
        auto r = prune_magnitude(p, s);
        CHECK(r.pruned == static_cast<std::size_t>(std::floor(s * static_cast<double>(r.weights))));
        CHECK(r.newly_zeroed == r.pruned);
        std::size_t zeros = 0, masked = 0, kept_biases = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const auto& n = p.node(i);
            zeros += static_cast<std::size_t>(std::count(n.conv.weight.begin(), n.conv.weight.end(), 0.0));
            masked += static_cast<std::size_t>(std::count(n.conv.mask.begin(), n.conv.mask.end(), 0));
            kept_biases += n.conv.bias == base.node(i).conv.bias && n.bn.gamma == base.node(i).bn.gamma;
        }
        CHECK(zeros == r.pruned);
        CHECK(masked == r.pruned);
        CHECK(kept_biases == p.size());

        std::mt19937_64 rng(9);
        auto x = random_tensor({3, 8, 8}, rng, 0, 1, false);
        auto once = values(Executor<double>(p).run(x));
        auto again_graph = p;
        auto again = prune_magnitude(again_graph, s);
        CHECK(again.newly_zeroed == 0);
        CHECK(values(Executor<double>(again_graph).run(x)) == once);
    }
    CHECK(biases > 0);
    CHECK(bn_values > 0);

    auto fused = base;
    prune_magnitude(fused, 0.5);
    fuse_conv_bn(fused);
    std::size_t zeros = 0, masked = 0;
    for (const auto& n : fused.nodes()) {
        zeros += static_cast<std::size_t>(std::count(n.conv.weight.begin(), n.conv.weight.end(), 0.0));
        masked += static_cast<std::size_t>(std::count(n.conv.mask.begin(), n.conv.mask.end(), 0));
    }
    CHECK(masked == zeros);
}

TEST_CASE("single precision executor")
{
    auto m = tiny_vitsr(sr::Variant::full, 11);
    auto g = build_graph(m, 12, 12);
    std::mt19937_64 rng(4);
    auto x = random_tensor({3, 12, 12}, rng, 0, 1, false);
    CHECK(relative_deviation(values(Executor<float>(g).run(x)), values(Executor<double>(g).run(x))) < 1e-5);

    InferenceGraph bad;
    bad.add_input({1, 2, 2});
    CHECK_THROWS_AS(Executor<double>(bad).run(random_tensor({1, 3, 2}, rng, 0, 1, false)), ShapeError);
    CHECK_THROWS_AS(bad.add_slice(0, 0, 0, 2), ShapeError);
    CHECK_THROWS_AS(bad.add_pixel_shuffle(0, 2), ShapeError);
}

TEST_CASE("benchmark reports")
{
    sr::ViTSRConfig cfg;
    cfg.n_cells = 2;
    cfg.feat_channels = 8;
    sr::ViTSR m(cfg);
    auto g = build_graph(m, 24, 24);

    auto r = benchmark(g, "full");
    CHECK(r.variant == "full");
    CHECK(r.warmup == 5);
    CHECK(r.iterations == 30);
    CHECK(r.input_shape == Shape{3, 24, 24});
    CHECK(r.p50_ms <= r.p95_ms);
    CHECK(r.mean_ms > 0.0);
    CHECK_THROWS_AS(benchmark(g, "x", {4, 30}), UsageError);
    CHECK_THROWS_AS(benchmark(g, "x", {5, 29}), UsageError);

    auto again = benchmark(g, "full");
    CHECK(again.mean_ms <= 1.25 * r.mean_ms);
    CHECK(again.mean_ms >= 0.75 * r.mean_ms);

    // more work never benchmarks faster
    auto heavier = g;
    tensor::Rng rng(5);
    heavier.set_output(heavier.add_conv(heavier.output(), tensor::Conv2dLayer::create(1, 16, 3, rng), "extra"));
    auto more = benchmark(heavier, "full+conv");
    auto base = benchmark(g, "full");
    CHECK(more.mean_ms >= 0.95 * base.mean_ms);
}

TEST_CASE("parallel benchmark mode is labeled")
{
    sr::ViTSRConfig cfg;
    cfg.n_cells = 1;
    cfg.feat_channels = 4;
    sr::ViTSR m(cfg);
    auto g = build_graph(m, 12, 12);

    CHECK(benchmark(g, "full").threads == 1);
    BenchOptions o;
    o.threads = 2;
    auto r = benchmark(g, "full", o);
    CHECK(r.threads == 2);
    CHECK(r.iterations == 30);
    CHECK(r.p50_ms <= r.p95_ms);
    o.threads = 0;
    CHECK_THROWS_AS(benchmark(g, "full", o), UsageError);
}
