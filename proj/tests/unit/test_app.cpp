#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "insitu/app/commands.hpp"
#include "insitu/errors.hpp"
#include "insitu/tensor/ops.hpp"
#include "insitu/video/color.hpp"
#include "insitu/video/png_io.hpp"
#include "insitu/video/resample.hpp"
#include "insitu/video/sequence.hpp"

using namespace insitu;
using namespace insitu::app;
using tensor::Shape;
using tensor::Tensor;

namespace {

fs::path fresh_dir(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("insitu_test_app_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

video::Image8 noise_image(std::size_t w, std::size_t h, std::size_t channels, std::mt19937_64& rng)
{
    video::Image8 img;
    img.width = w;
    img.height = h;
    img.channels = channels;
    img.pixels.resize(w * h * channels);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() % 256);
    return img;
}

void write_frames(const fs::path& dir, std::size_t count, std::size_t w, std::size_t h, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    fs::create_directories(dir);
    for (std::size_t i = 1; i <= count; ++i) video::write_png(dir / video::frame_filename(i), noise_image(w, h, 1, rng));
}

std::size_t count_lines(const fs::path& p)
{
    std::istringstream in(read_file(p));
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

std::size_t count_png(const fs::path& dir)
{
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".png";
    return n;
}

struct Checkpoints {
    fs::path sr, seg;
};

Checkpoints tiny_checkpoints(const fs::path& dir)
{
    sr::ViTSRConfig c;
    c.feat_channels = 4;
    c.n_cells = 1;
    c.seed = 3;
    Checkpoints k{dir / "sr.vsr", dir / "seg.vsr"};
    sr::ViTSR(c).save(k.sr);
    seg::FCN({{4, 6, 8}, 5}).save(k.seg);
    return k;
}

PipelineConfig config(const fs::path& in, const fs::path& out, const fs::path& sr, const fs::path& seg)
{
    PipelineConfig c;
    c.input = in;
    c.output = out;
    c.sr_checkpoint = sr;
    c.seg_checkpoint = seg;
    return c;
}

} // namespace

TEST_CASE("downscale command")
{
    const auto root = fresh_dir("downscale");
    std::mt19937_64 rng(1);
    fs::create_directories(root / "gt");
    video::write_png(root / "gt" / "frame_000001.png", noise_image(300, 300, 3, rng));
    video::write_png(root / "gt" / "frame_000002.png", noise_image(300, 300, 1, rng));
    std::ostringstream log, err;

    SUBCASE("r = 1 copies bytes")
    {
        CHECK(cmd_downscale({root / "gt", root / "same", 1}, log, err) == 0);
        for (auto f : {"frame_000001.png", "frame_000002.png"}) {
            CHECK(read_file(root / "gt" / f) == read_file(root / "same" / f));
        }
        CHECK(count_lines(root / "same" / "pairs.csv") == 3);
    }
    SUBCASE("300 x 300 by 4 gives 75 x 75 top-left samples")
    {
        CHECK(cmd_downscale({root / "gt", root / "lr", 4}, log, err) == 0);
        for (auto f : {"frame_000001.png", "frame_000002.png"}) {
            const auto hr = video::read_png(root / "gt" / f, 3);
            const auto lr = video::read_png(root / "lr" / f, 3);
            CHECK(lr.width == 75);
            CHECK(lr.height == 75);
            bool exact = true;
            for (std::size_t y = 0; y < 75; ++y) {
                for (std::size_t x = 0; x < 75; ++x) {
                    for (std::size_t c = 0; c < 3; ++c) exact = exact && lr.at(y, x, c) == hr.at(4 * y, 4 * x, c);
                }
            }
            CHECK(exact);
        }
        CHECK(err.str().empty());
    }
    SUBCASE("a non-divisible frame fails alone")
    {
        video::write_png(root / "gt" / "frame_000003.png", noise_image(302, 300, 1, rng));
        CHECK(cmd_downscale({root / "gt", root / "lr", 4}, log, err) == 2);
        CHECK(err.str().find("frame_000003.png") != std::string::npos);
        CHECK(fs::exists(root / "lr" / "frame_000001.png"));
        CHECK(fs::exists(root / "lr" / "frame_000002.png"));
        CHECK_FALSE(fs::exists(root / "lr" / "frame_000003.png"));
        CHECK(count_lines(root / "lr" / "pairs.csv") == 3);
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(cmd_downscale({root / "missing", root / "lr", 4}, log, err), DataError);
        CHECK_THROWS_AS(cmd_downscale({root / "gt", root / "gt", 4}, log, err), UsageError);
    }
}

TEST_CASE("synth command")
{
    const auto root = fresh_dir("synth");
    std::ostringstream log;
    SynthOptions o;
    o.count = 3;
    o.size = 32;
    o.out = root / "a";
    CHECK(cmd_synth(o, log) == 0);
    o.out = root / "b";
    CHECK(cmd_synth(o, log) == 0);
    for (std::size_t c = 0; c < 3; ++c) {
        const auto clip = fs::path("clip_000" + std::to_string(c));
        CHECK(count_png(root / "a" / clip / "gt") == 8);
        CHECK(count_png(root / "a" / clip / "lr") == 8);
        for (std::size_t t = 1; t <= 8; ++t) {
            const auto f = clip / "lr" / video::frame_filename(t);
            CHECK(read_file(root / "a" / f) == read_file(root / "b" / f));
        }
    }
    CHECK(video::read_png(root / "a" / "clip_0000" / "lr" / "frame_000001.png").width == 8);

    o.kind = "meltpool";
    o.count = 4;
    o.out = root / "m";
    CHECK(cmd_synth(o, log) == 0);
    std::set<int> classes;
    for (const auto& s : load_seg_dataset(root / "m")) classes.insert(s.labels.begin(), s.labels.end());
    CHECK(classes == std::set<int>{0, 1, 2});

    o.kind = "video";
    CHECK_THROWS_AS(cmd_synth(o, log), UsageError);
}

TEST_CASE("learning-rate schedule")
{
    CHECK(lr_at(1.0, 0, 1000, 100) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(lr_at(1.0, 99, 1000, 100) == doctest::Approx(0.5 * (1 + std::cos(M_PI * 0.099))));
    CHECK(lr_at(1.0, 500, 1000, 100) == doctest::Approx(0.5));
    CHECK(lr_at(2.0, 0, 1000, 0) == doctest::Approx(2.0));
    CHECK(lr_at(1.0, 999, 1000, 100) < 1e-4);
}

TEST_CASE("quality CSV")
{
    const std::vector<metrics::QualityReport> rows{{"a.png", 30.0, 0.9}, {"b.png", metrics::kInfinity, 1.0}};
    CHECK(quality_csv(rows) == "frame_id,psnr_db,ssim\n"
                               "a.png,30.000000,0.900000\n"
                               "b.png,inf,1.000000\n"
                               "mean,30.000000,0.950000\n");
}

TEST_CASE("colour output keeps bicubic chroma")
{
    sr::ViTSRConfig c;
    c.feat_channels = 4;
    c.n_cells = 1;
    sr::ViTSR model(c);
    std::mt19937_64 rng(2);
    std::vector<video::ColorFrame> lr;
    for (int t = 0; t < 3; ++t) {
        auto img = noise_image(6, 5, 3, rng);
        for (auto& p : img.pixels) p = static_cast<std::uint8_t>(96 + p % 64);
        lr.push_back({video::image_to_tensor(img), std::nullopt});
    }
    const auto f = super_resolve_frame(model, lr, 1);
    CHECK(f.y.shape() == Shape{1, 20, 24});
    CHECK(f.rgb.shape() == Shape{3, 20, 24});
    const auto got = video::rgb_to_ycbcr(f.rgb);
    const auto want = video::rgb_to_ycbcr(lr[1].rgb);
    for (std::size_t ch : {1, 2}) {
        const auto a = tensor::slice(got, 0, ch, ch + 1);
        const auto b = video::upscale_bicubic(tensor::slice(want, 0, ch, ch + 1), 4);
        double worst = 0.0;
        for (std::size_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
        CHECK(worst < 1e-9);
    }
    const auto y = tensor::slice(got, 0, 0, 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) worst = std::max(worst, std::abs(y.data()[i] - f.y.data()[i]));
    CHECK(worst < 1e-9);
}

TEST_CASE("pipeline")
{
    const auto root = fresh_dir("pipeline");
    const auto k = tiny_checkpoints(root);
    std::ostringstream log;

    SUBCASE("58 frames, twice, byte-identical")
    {
        write_frames(root / "clip" / "lr", 58, 8, 8, 7);
        write_frames(root / "clip" / "gt", 58, 32, 32, 8);
        auto c = config(root / "clip", root / "out1", k.sr, k.seg);
        CHECK(cmd_pipeline(c, log) == 0);
        c.output = root / "out2";
        CHECK(cmd_pipeline(c, log) == 0);
        CHECK(count_png(root / "out1" / "sr") == 58);
        CHECK(count_png(root / "out1" / "masks") == 58);
        CHECK(count_lines(root / "out1" / "areas.csv") == 59);
        CHECK(count_lines(root / "out1" / "quality.csv") == 60); // header + 58 + mean
        for (const auto& e : fs::recursive_directory_iterator(root / "out1")) {
            if (!e.is_regular_file()) continue;
            const auto rel = fs::relative(e.path(), root / "out1");
            CHECK_MESSAGE(read_file(e.path()) == read_file(root / "out2" / rel), rel.string());
        }
        CHECK(video::read_png(root / "out1" / "sr" / "frame_000058.png").width == 32);
    }
    SUBCASE("75 x 75 in, 300 x 300 out")
    {
        write_frames(root / "lr75", 2, 75, 75, 9);
        auto c = config(root / "lr75", root / "out", k.sr, k.seg);
        run_pipeline(c);
        for (auto f : {"frame_000001.png", "frame_000002.png"}) {
            const auto sr = video::read_png(root / "out" / "sr" / f);
            CHECK(sr.width == 300);
            CHECK(sr.height == 300);
            const auto mask = seg::read_mask_png(root / "out" / "masks" / f);
            CHECK(mask.width == 300);
            CHECK(mask.height == 300);
        }
        CHECK_FALSE(fs::exists(root / "out" / "quality.csv"));
    }
    SUBCASE("parallel mode writes the same frames")
    {
        write_frames(root / "lr", 5, 8, 8, 10);
        auto c = config(root / "lr", root / "seq", k.sr, k.seg);
        run_pipeline(c);
        c.output = root / "par";
        c.deterministic = false;
        c.threads = 3;
        run_pipeline(c);
        CHECK(read_file(root / "seq" / "areas.csv") == read_file(root / "par" / "areas.csv"));
        for (std::size_t i = 1; i <= 5; ++i) {
            const auto f = video::frame_filename(i);
            CHECK(read_file(root / "seq" / "sr" / f) == read_file(root / "par" / "sr" / f));
        }
    }
    SUBCASE("errors")
    {
        fs::create_directories(root / "empty");
        CHECK_THROWS_AS(run_pipeline(config(root / "empty", root / "out", k.sr, k.seg)), DataError);
        CHECK_THROWS_AS(run_pipeline(config(root / "empty", root / "empty", k.sr, k.seg)), UsageError);
        try {
            run_pipeline(config(root / "empty", root / "out", root / "nope.vsr", k.seg));
            FAIL("no error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("train-sr") != std::string::npos);
        }
    }
}
