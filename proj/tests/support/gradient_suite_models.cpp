#include <random>

#include "gradient_suite.hpp"
#include "insitu/seg/fcn.hpp"
#include "insitu/sr/fusion.hpp"
#include "insitu/sr/vitsr.hpp"
#include "insitu/tensor/ops.hpp"

namespace insitu::testing {

using namespace insitu::tensor;

std::vector<GradCase> model_op_gradient_cases()
{
    std::vector<GradCase> cases;
    for (bool dot : {false, true}) {
        cases.push_back({dot ? "vit_fusion_channel_dot" : "vit_fusion", [dot](std::uint64_t seed) {
                             std::mt19937_64 rng(seed);
                             auto q = random_tensor({3, 1, 4, 5}, rng);
                             auto k = random_tensor({3, 2, 4, 5}, rng);
                             auto v = random_tensor({3, 3, 4, 5}, rng);
                             auto probe = random_tensor({3, 4, 5}, rng, -1.0, 1.0, false);
                             return check_gradients({q, k, v}, [&] {
                                 return weighted_sum(sr::vit_fusion(q, k, v, 1, dot).fused, probe);
                             }, seed);
                         }});
    }
    cases.push_back({"vit_fusion_radius2", [](std::uint64_t seed) {
                         std::mt19937_64 rng(seed);
                         auto q = random_tensor({2, 1, 3, 3}, rng);
                         auto k = random_tensor({2, 4, 3, 3}, rng);
                         auto v = random_tensor({2, 5, 3, 3}, rng);
                         auto probe = random_tensor({2, 3, 3}, rng, -1.0, 1.0, false);
                         return check_gradients(
                             {q, k, v}, [&] { return weighted_sum(sr::vit_fusion(q, k, v, 2).fused, probe); }, seed);
                     }});
    cases.push_back({"temporal_mix", [](std::uint64_t seed) {
                         std::mt19937_64 rng(seed);
                         auto v = random_tensor({4, 3, 3, 2}, rng);
                         auto m = random_tensor({4, 3}, rng);
                         auto probe = random_tensor({4, 3, 2}, rng, -1.0, 1.0, false);
                         return check_gradients({v, m}, [&] { return weighted_sum(sr::temporal_mix(v, m), probe); },
                                                seed);
                     }});
    return cases;
}

GradCheckResult vitsr_gradient_check(std::uint64_t seed, const std::string& variant, std::size_t per_leaf)
{
    sr::ViTSRConfig cfg;
    cfg.N = 1;
    cfg.r = 2;
    cfg.n_cells = 1;
    cfg.feat_channels = 8;
    cfg.variant = sr::parse_variant(variant);
    cfg.seed = seed;
    sr::ViTSR model(cfg);
    std::mt19937_64 rng(seed ^ 0x5eedULL);
    auto window = random_tensor({3, 8, 8}, rng, 0.0, 1.0, false);
    auto target = random_tensor({1, 16, 16}, rng, 0.0, 1.0, false);
    return check_gradients(model.parameters(), [&] { return mse_loss(model.forward(window, true), target); }, seed,
                           1e-5, per_leaf, 2);
}

GradCheckResult fcn_gradient_check(std::uint64_t seed, std::size_t per_leaf)
{
    seg::FCNConfig cfg;
    cfg.channels = {2, 3, 4};
    cfg.seed = seed;
    seg::FCN model(cfg);
    std::mt19937_64 rng(seed ^ 0xfc0ULL);
    auto frame = random_tensor({1, 16, 16}, rng, 0.0, 1.0, false);
    std::vector<std::uint8_t> labels(256);
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % 3);
    return check_gradients(model.parameters(), [&] { return cross_entropy(model.logits(frame, true), labels); },
                           seed, 1e-5, per_leaf, 2);
}

} // namespace insitu::testing
