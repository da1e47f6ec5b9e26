#include "insitu/sr/vitsr.hpp"

#include "insitu/sr/fusion.hpp"
#include "insitu/tensor/ops.hpp"
#include "insitu/video/resample.hpp"

namespace insitu::sr {

using namespace insitu::tensor;

namespace {

constexpr double kValueInitScale = 0.01;
constexpr double kEncodingInitScale = 0.1; // encoding columns of each cell reduce

FusionBranch make_branch(std::size_t in, std::size_t out, std::size_t kt, std::size_t pad_t, Rng& rng)
{
    FusionBranch b;
    b.reduce = Conv3dLayer::create(in, in, 1, 1, 0, rng);
    b.reduce_bn = BatchNormLayer::create(in);
    b.conv = Conv3dLayer::create(in, out, kt, 3, pad_t, rng);
    return b;
}

Tensor run_cell(const Tensor& x, ResidualCell& cell, bool training)
{
    auto y = relu(batch_norm(conv3d(x, cell.reduce), cell.reduce_bn, training));
    return relu(batch_norm(conv3d(y, cell.conv), cell.conv_bn, training));
}

Tensor run_branch(const Tensor& x, FusionBranch& b, bool training)
{
    return conv3d(relu(batch_norm(conv3d(x, b.reduce), b.reduce_bn, training)), b.conv);
}

void add_conv(std::vector<std::pair<std::string, Tensor>>& out, const std::string& name, const Conv3dLayer& c)
{
    out.emplace_back(name + ".weight", c.weight);
    out.emplace_back(name + ".bias", c.bias);
}

void add_bn(std::vector<std::pair<std::string, Tensor>>& out, const std::string& name, const BatchNormLayer& b)
{
    out.emplace_back(name + ".gamma", b.gamma);
    out.emplace_back(name + ".beta", b.beta);
    out.emplace_back(name + ".running_mean", b.running_mean);
    out.emplace_back(name + ".running_var", b.running_var);
}

void add_branch(std::vector<std::pair<std::string, Tensor>>& out, const std::string& name, const FusionBranch& b)
{
    add_conv(out, name + ".reduce", b.reduce);
    add_bn(out, name + ".reduce_bn", b.reduce_bn);
    add_conv(out, name + ".conv", b.conv);
}

} // namespace

ViTSR::ViTSR(const ViTSRConfig& config) : config_(config)
{
    config_.validate();
    Rng rng(config_.seed);
    const std::size_t feat = config_.feat_channels, r2 = config_.subpixels(), frames = config_.window();
    const std::size_t kt = config_.temporal_conv() ? 3 : 1, pad_t = config_.temporal_conv() ? 1 : 0;

    for (std::size_t i = 0; i < config_.n_cells; ++i) {
        ResidualCell c;
        const std::size_t in = input_channels() + i * feat;
        c.reduce = Conv3dLayer::create(in, feat, 1, 1, 0, rng);
        if (config_.uses_encoding()) {
            auto w = c.reduce.weight.mutable_data();
            for (std::size_t o = 0; o < feat; ++o) {
                for (std::size_t j = 1; j < input_channels(); ++j) w[o * in + j] *= kEncodingInitScale;
            }
        }
        c.reduce_bn = BatchNormLayer::create(feat);
        c.conv = Conv3dLayer::create(feat, feat, kt, 3, pad_t, rng);
        c.conv_bn = BatchNormLayer::create(feat);
        cells_.push_back(std::move(c));
    }
    if (config_.uses_attention()) {
        q_ = make_branch(feat, r2, config_.temporal_conv() ? frames : 1, 0, rng);
        k_ = make_branch(feat, r2, kt, pad_t, rng);
    }
    v_ = make_branch(feat, r2, kt, pad_t, rng);
    for (auto& w : v_.conv.weight.mutable_data()) w *= kValueInitScale;
    if (!config_.uses_attention()) mix_ = Tensor::full({r2, frames}, 1.0 / static_cast<double>(frames), true);
}

ForwardTrace ViTSR::trace(const Tensor& window, bool training)
{
    const std::size_t frames = config_.window(), ref = config_.N, r = config_.r;
    const Shape& s = window.shape();
    if (s.size() != 3 || s[0] != frames) {
        throw ShapeError("vitsr: expected a window [" + std::to_string(frames) + ", H, W], got " + shape_str(s));
    }
    const std::size_t h = s[1], w = s[2];

    ForwardTrace tr;
    Tensor x = reshape(window, {1, frames, h, w});
    tr.input = config_.uses_encoding() ? concat({x, positional_encoding(h, w, frames)}, 0) : x;

    std::vector<Tensor> dense{tr.input};
    Tensor out;
    for (auto& cell : cells_) {
        out = run_cell(dense.size() == 1 ? dense.front() : concat(dense, 0), cell, training);
        dense.push_back(out);
    }
    tr.features = out;

    tr.v = run_branch(tr.features, v_, training);
    if (config_.uses_attention()) {
        const Tensor q_in = config_.temporal_conv() ? tr.features : slice(tr.features, 1, ref, ref + 1);
        tr.q = run_branch(q_in, *q_, training);
        const Tensor kall = run_branch(tr.features, *k_, training);
        if (frames == 1) {
            tr.k = Tensor::zeros({kall.dim(0), 0, h, w});
        } else if (ref == 0) {
            tr.k = slice(kall, 1, 1, frames);
        } else {
            tr.k = concat({slice(kall, 1, 0, ref), slice(kall, 1, ref + 1, frames)}, 1);
        }
        auto f = vit_fusion(tr.q, tr.k, tr.v, ref, config_.channel_dot);
        tr.fused = f.fused;
        tr.weights = f.weights;
    } else {
        tr.fused = temporal_mix(tr.v, mix_);
    }

    tr.bicubic = video::upscale_bicubic(slice(window, 0, ref, ref + 1).detach(), r);
    tr.output = add(tr.bicubic, pixel_shuffle(tr.fused, r));
    return tr;
}

std::vector<std::pair<std::string, Tensor>> ViTSR::named_tensors() const
{
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const std::string p = "cell" + std::to_string(i);
        add_conv(out, p + ".reduce", cells_[i].reduce);
        add_bn(out, p + ".reduce_bn", cells_[i].reduce_bn);
        add_conv(out, p + ".conv", cells_[i].conv);
        add_bn(out, p + ".conv_bn", cells_[i].conv_bn);
    }
    if (q_) add_branch(out, "q", *q_);
    if (k_) add_branch(out, "k", *k_);
    add_branch(out, "v", v_);
    if (mix_.defined()) out.emplace_back("mix", mix_);
    return out;
}

std::vector<Tensor> ViTSR::parameters() const
{
    std::vector<Tensor> out;
    for (auto& [name, t] : named_tensors()) {
        if (t.requires_grad()) out.push_back(t);
    }
    return out;
}

std::size_t ViTSR::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.numel();
    return n;
}

std::vector<NamedTensor> ViTSR::state(DType dtype) const
{
    std::vector<NamedTensor> out;
    auto meta = [&](const std::string& key, double v) { out.push_back({"meta." + key, DType::f64, {1}, {v}}); };
    meta("N", double(config_.N));
    meta("r", double(config_.r));
    meta("n_cells", double(config_.n_cells));
    meta("feat_channels", double(config_.feat_channels));
    meta("variant", double(static_cast<int>(config_.variant)));
    meta("channel_dot", config_.channel_dot ? 1.0 : 0.0);
    for (const auto& [name, t] : named_tensors()) {
        out.push_back({name, dtype, t.shape(), std::vector<double>(t.data().begin(), t.data().end())});
    }
    return out;
}

ViTSR ViTSR::from_state(const std::vector<NamedTensor>& state)
{
    auto meta = [&](const std::string& key) { return find_tensor(state, "meta." + key).values.at(0); };
    ViTSRConfig cfg;
    cfg.N = static_cast<std::size_t>(meta("N"));
    cfg.r = static_cast<std::size_t>(meta("r"));
    cfg.n_cells = static_cast<std::size_t>(meta("n_cells"));
    cfg.feat_channels = static_cast<std::size_t>(meta("feat_channels"));
    const int v = static_cast<int>(meta("variant"));
    if (v < 0 || v > 3) throw DataError("checkpoint: unknown variant id " + std::to_string(v));
    cfg.variant = static_cast<Variant>(v);
    cfg.channel_dot = meta("channel_dot") != 0.0;

    ViTSR model(cfg);
    for (auto& [name, t] : model.named_tensors()) {
        const auto& src = find_tensor(state, name);
        if (src.shape != t.shape()) {
            throw DataError("checkpoint: " + name + " has shape " + shape_str(src.shape) + ", model expects " +
                            shape_str(t.shape()));
        }
        auto dst = t.mutable_data();
        std::copy(src.values.begin(), src.values.end(), dst.begin());
    }
    return model;
}

void ViTSR::save(const std::filesystem::path& path) const
{
    save_checkpoint(path, state());
}

ViTSR ViTSR::load(const std::filesystem::path& path)
{
    return from_state(load_checkpoint(path));
}

ViTSR build_variant(ViTSRConfig config, Variant variant)
{
    config.variant = variant;
    return ViTSR(config);
}

Tensor window_tensor(const video::FrameWindow& window)
{
    if (window.frames.empty()) throw ShapeError("window_tensor: empty window");
    const std::size_t h = window.height(), w = window.width();
    std::vector<double> v;
    v.reserve(window.frames.size() * h * w);
    for (const auto& f : window.frames) {
        if (f.shape() != Shape{1, h, w}) throw ShapeError("window_tensor: frame " + shape_str(f.shape()));
        v.insert(v.end(), f.data().begin(), f.data().end());
    }
    return Tensor::from({window.frames.size(), h, w}, std::move(v));
}

Tensor super_resolve(ViTSR& model, const Tensor& window)
{
    NoGradGuard guard;
    return model.forward(window, false);
}

} // namespace insitu::sr
