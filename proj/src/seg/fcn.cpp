#include "insitu/seg/fcn.hpp"

#include <cmath>

#include "insitu/tensor/ops.hpp"
#include "insitu/video/png_io.hpp"

namespace insitu::seg {

using namespace insitu::tensor;

namespace {

ConvUnit make_unit(std::size_t in, std::size_t out, Rng& rng)
{
    return {Conv2dLayer::create(in, out, 3, rng), BatchNormLayer::create(out)};
}

Stage make_stage(std::size_t in, std::size_t out, Rng& rng)
{
    auto a = make_unit(in, out, rng);
    auto b = make_unit(out, out, rng);
    return {std::move(a), std::move(b)};
}

Tensor run_unit(const Tensor& x, ConvUnit& u, bool training)
{
    return relu(batch_norm(conv2d(x, u.conv), u.bn, training));
}

Tensor run_stage(const Tensor& x, Stage& s, bool training)
{
    return run_unit(run_unit(x, s.first, training), s.second, training);
}

void add_unit(std::vector<std::pair<std::string, Tensor>>& out, const std::string& name, const ConvUnit& u)
{
    out.emplace_back(name + ".conv.weight", u.conv.weight);
    out.emplace_back(name + ".conv.bias", u.conv.bias);
    out.emplace_back(name + ".bn.gamma", u.bn.gamma);
    out.emplace_back(name + ".bn.beta", u.bn.beta);
    out.emplace_back(name + ".bn.running_mean", u.bn.running_mean);
    out.emplace_back(name + ".bn.running_var", u.bn.running_var);
}

} // namespace

FCN::FCN(const FCNConfig& config) : config_(config)
{
    Rng rng(config_.seed);
    const auto& c = config_.channels;
    encoder_[0] = make_stage(1, c[0], rng);
    encoder_[1] = make_stage(c[0], c[1], rng);
    encoder_[2] = make_stage(c[1], c[2], rng);
    decoder_[0] = make_stage(c[2] + c[2], c[1], rng);
    decoder_[1] = make_stage(c[1] + c[1], c[0], rng);
    decoder_[2] = make_stage(c[0] + c[0], c[0], rng);
    head_ = Conv2dLayer::create(c[0], kClasses, 1, rng);
}

Tensor FCN::logits(const Tensor& frame, bool training)
{
    const Shape& s = frame.shape();
    if (s.size() != 3 || s[0] != 1) throw ShapeError("fcn: expected a [1, H, W] frame, got " + shape_str(s));
    if (s[1] % 8 != 0 || s[2] % 8 != 0) {
        throw ShapeError("fcn: frame " + shape_str(s) +
                         " must have H and W divisible by 8; pad to a multiple of 8 (segment_padded)");
    }
    std::array<Tensor, 3> skips;
    Tensor x = frame;
    for (std::size_t i = 0; i < 3; ++i) {
        skips[i] = run_stage(x, encoder_[i], training);
        x = max_pool2(skips[i]);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        x = run_stage(concat({upsample_nearest(x, 2), skips[2 - i]}, 0), decoder_[i], training);
    }
    return conv2d(x, head_);
}

std::vector<std::pair<std::string, Tensor>> FCN::named_tensors() const
{
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t i = 0; i < 3; ++i) {
        add_unit(out, "enc" + std::to_string(i) + ".a", encoder_[i].first);
        add_unit(out, "enc" + std::to_string(i) + ".b", encoder_[i].second);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        add_unit(out, "dec" + std::to_string(i) + ".a", decoder_[i].first);
        add_unit(out, "dec" + std::to_string(i) + ".b", decoder_[i].second);
    }
    out.emplace_back("head.weight", head_.weight);
    out.emplace_back("head.bias", head_.bias);
    return out;
}

std::vector<Tensor> FCN::parameters() const
{
    std::vector<Tensor> out;
    for (auto& [name, t] : named_tensors()) {
        if (t.requires_grad()) out.push_back(t);
    }
    return out;
}

std::size_t FCN::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.numel();
    return n;
}

std::vector<NamedTensor> FCN::state(DType dtype) const
{
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < 3; ++i) {
        out.push_back({"meta.channels" + std::to_string(i), DType::f64, {1}, {double(config_.channels[i])}});
    }
    for (const auto& [name, t] : named_tensors()) {
        out.push_back({name, dtype, t.shape(), std::vector<double>(t.data().begin(), t.data().end())});
    }
    return out;
}

FCN FCN::from_state(const std::vector<NamedTensor>& state)
{
    FCNConfig cfg;
    for (std::size_t i = 0; i < 3; ++i) {
        cfg.channels[i] = static_cast<std::size_t>(find_tensor(state, "meta.channels" + std::to_string(i)).values.at(0));
    }
    FCN model(cfg);
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

void FCN::save(const std::filesystem::path& path) const
{
    save_checkpoint(path, state());
}

FCN FCN::load(const std::filesystem::path& path)
{
    return from_state(load_checkpoint(path));
}

SegMask mask_from_logits(const Tensor& logits)
{
    const Shape& s = logits.shape();
    if (s.size() != 3 || s[0] != kClasses) throw ShapeError("mask_from_logits: expected [3, H, W], got " + shape_str(s));
    const std::size_t hw = s[1] * s[2];
    auto v = logits.data();
    SegMask m{s[1], s[2], std::vector<std::uint8_t>(hw, 0), logits};
    for (std::size_t p = 0; p < hw; ++p) {
        std::uint8_t best = 0;
        for (std::uint8_t c = 1; c < kClasses; ++c) {
            if (v[c * hw + p] > v[best * hw + p]) best = c;
        }
        m.labels[p] = best;
    }
    return m;
}

SegMask segment(FCN& model, const Tensor& frame)
{
    NoGradGuard guard;
    return mask_from_logits(model.logits(frame, false));
}

SegMask segment_padded(FCN& model, const Tensor& frame)
{
    const Shape& s = frame.shape();
    if (s.size() != 3 || s[0] != 1) throw ShapeError("segment: expected a [1, H, W] frame, got " + shape_str(s));
    const std::size_t h = s[1], w = s[2];
    const std::size_t ph = (h + 7) / 8 * 8, pw = (w + 7) / 8 * 8;
    if (ph == h && pw == w) return segment(model, frame);

    auto src = frame.data();
    std::vector<double> padded(ph * pw);
    for (std::size_t y = 0; y < ph; ++y) {
        for (std::size_t x = 0; x < pw; ++x) padded[y * pw + x] = src[std::min(y, h - 1) * w + std::min(x, w - 1)];
    }
    const SegMask full = segment(model, Tensor::from({1, ph, pw}, std::move(padded)));

    SegMask m{h, w, std::vector<std::uint8_t>(h * w), std::nullopt};
    std::vector<double> logits(kClasses * h * w);
    auto lv = full.logits->data();
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            m.labels[y * w + x] = full.labels[y * pw + x];
            for (std::size_t c = 0; c < kClasses; ++c) logits[(c * h + y) * w + x] = lv[(c * ph + y) * pw + x];
        }
    }
    m.logits = Tensor::from({kClasses, h, w}, std::move(logits));
    return m;
}

Areas extract_areas(const SegMask& mask)
{
    Areas a;
    for (auto l : mask.labels) {
        a.molten_pool_px += l == molten_pool;
        a.plasma_arc_px += l == plasma_arc;
    }
    return a;
}

double pixel_accuracy(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b)
{
    if (a.size() != b.size() || a.empty()) throw ShapeError("pixel_accuracy: masks differ in size");
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
    return static_cast<double>(same) / static_cast<double>(a.size());
}

void write_mask_png(const std::filesystem::path& path, const SegMask& mask)
{
    video::write_indexed_png(path, mask.width, mask.height, mask.labels, {{0, 0, 0}, {255, 0, 0}, {0, 0, 255}});
}

SegMask read_mask_png(const std::filesystem::path& path)
{
    const auto img = video::read_png(path, 3);
    SegMask m{img.height, img.width, std::vector<std::uint8_t>(img.width * img.height), std::nullopt};
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        const std::uint8_t r = img.pixels[3 * i], g = img.pixels[3 * i + 1], b = img.pixels[3 * i + 2];
        if (r == 0 && g == 0 && b == 0) {
            m.labels[i] = background;
        } else if (r == 255 && g == 0 && b == 0) {
            m.labels[i] = molten_pool;
        } else if (r == 0 && g == 0 && b == 255) {
            m.labels[i] = plasma_arc;
        } else {
            throw DataError("mask " + path.string() + ": pixel " + std::to_string(i) + " is not a class colour");
        }
    }
    return m;
}

SegTrainer::SegTrainer(FCN& model, double lr) : model_(model), adam_(model.parameters(), AdamOptions{lr})
{
}

double SegTrainer::step(std::span<const SegSample> batch)
{
    if (batch.empty()) throw UsageError("train_seg: empty batch");
    adam_.zero_grad();
    Tensor total;
    try {
        for (const auto& s : batch) {
            Tensor l = cross_entropy(model_.logits(s.frame, true), s.labels);
            total = total.defined() ? add(total, l) : l;
        }
        total = scale(total, 1.0 / static_cast<double>(batch.size()));
    } catch (const NumericError& e) {
        throw NumericError(std::string("train_seg: non-finite value at step ") + std::to_string(adam_.steps_taken()) +
                           ": " + e.what());
    }
    const double value = total.item();
    total.backward();
    adam_.step();
    return value;
}

} // namespace insitu::seg
