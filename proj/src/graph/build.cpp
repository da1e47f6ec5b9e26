#include "insitu/graph/build.hpp"

#include "insitu/sr/fusion.hpp"

namespace insitu::graph {

namespace {

std::size_t unit(InferenceGraph& g, std::size_t x, const tensor::Conv3dLayer& conv, const tensor::BatchNormLayer& bn,
                 const std::string& name)
{
    const auto c = g.add_conv(x, conv, name);
    return g.add_relu(g.add_batch_norm(c, bn, name + "_bn"));
}

std::size_t branch(InferenceGraph& g, std::size_t x, const sr::FusionBranch& b, const std::string& name)
{
    return g.add_conv(unit(g, x, b.reduce, b.reduce_bn, name + ".reduce"), b.conv, name + ".conv");
}

std::size_t seg_unit(InferenceGraph& g, std::size_t x, const seg::ConvUnit& u, const std::string& name)
{
    const auto c = g.add_conv(x, u.conv, name + ".conv");
    return g.add_relu(g.add_batch_norm(c, u.bn, name + ".bn"));
}

std::size_t seg_stage(InferenceGraph& g, std::size_t x, const seg::Stage& s, const std::string& name)
{
    return seg_unit(g, seg_unit(g, x, s.first, name + ".a"), s.second, name + ".b");
}

} // namespace

InferenceGraph build_graph(const sr::ViTSR& model, std::size_t h, std::size_t w)
{
    const auto& cfg = model.config();
    const std::size_t frames = cfg.window(), ref = cfg.N;
    InferenceGraph g;
    const auto window = g.add_input({frames, h, w}, "window");
    auto x = g.add_reshape(window, {1, frames, h, w});
    if (cfg.uses_encoding()) x = g.add_concat({x, g.add_constant(sr::positional_encoding(h, w, frames), "encoding")}, 0);

    std::vector<std::size_t> dense{x};
    std::size_t features = x;
    for (std::size_t i = 0; i < model.cells().size(); ++i) {
        const auto& cell = model.cells()[i];
        const std::string p = "cell" + std::to_string(i);
        const auto in = dense.size() == 1 ? dense.front() : g.add_concat(dense, 0);
        features = unit(g, unit(g, in, cell.reduce, cell.reduce_bn, p + ".reduce"), cell.conv, cell.conv_bn, p + ".conv");
        dense.push_back(features);
    }

    const auto v = branch(g, features, model.v_branch(), "v");
    std::size_t fused;
    if (cfg.uses_attention()) {
        const auto q_in = cfg.temporal_conv() ? features : g.add_slice(features, 1, ref, ref + 1);
        const auto q = branch(g, q_in, *model.q_branch(), "q");
        const auto kall = branch(g, features, *model.k_branch(), "k");
        std::size_t k;
        if (frames == 1) {
            k = g.add_slice(kall, 1, 0, 0);
        } else if (ref == 0) {
            k = g.add_slice(kall, 1, 1, frames);
        } else {
            k = g.add_concat({g.add_slice(kall, 1, 0, ref), g.add_slice(kall, 1, ref + 1, frames)}, 1);
        }
        fused = g.add_fusion(q, k, v, ref, cfg.channel_dot);
    } else {
        fused = g.add_temporal_mix(v, model.mix());
    }

    const auto bicubic = g.add_bicubic(g.add_slice(window, 0, ref, ref + 1), cfg.r);
    g.set_output(g.add_add(bicubic, g.add_pixel_shuffle(fused, cfg.r)));
    return g;
}

InferenceGraph build_graph(const seg::FCN& model, std::size_t h, std::size_t w)
{
    InferenceGraph g;
    auto x = g.add_input({1, h, w}, "frame");
    std::size_t skips[3];
    for (std::size_t i = 0; i < 3; ++i) {
        skips[i] = seg_stage(g, x, model.encoder()[i], "enc" + std::to_string(i));
        x = g.add_max_pool2(skips[i]);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        x = seg_stage(g, g.add_concat({g.add_upsample(x, 2), skips[2 - i]}, 0), model.decoder()[i],
                      "dec" + std::to_string(i));
    }
    g.set_output(g.add_conv(x, model.head(), "head"));
    return g;
}

} // namespace insitu::graph
