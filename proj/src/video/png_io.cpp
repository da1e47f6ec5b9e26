#include "insitu/video/png_io.hpp"

#include <png.h>

#include <cstring>

#include "insitu/errors.hpp"

namespace insitu::video {

Image8 read_png(const std::filesystem::path& path, std::size_t channels)
{
    if (channels != 1 && channels != 3) throw UsageError("read_png: channels must be 1 or 3");
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        throw DataError("cannot read PNG " + path.string() + ": " + img.message);
    }
    img.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    Image8 out;
    out.width = img.width;
    out.height = img.height;
    out.channels = channels;
    out.pixels.resize(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw DataError("cannot decode PNG " + path.string() + ": " + msg);
    }
    return out;
}

void write_png(const std::filesystem::path& path, const Image8& image)
{
    if (image.channels != 1 && image.channels != 3) throw UsageError("write_png: channels must be 1 or 3");
    if (image.pixels.size() != image.width * image.height * image.channels) {
        throw UsageError("write_png: pixel buffer does not match dimensions");
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
        throw DataError("cannot write PNG " + path.string() + ": " + img.message);
    }
}

void write_indexed_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
                       const std::vector<std::uint8_t>& indices, const std::vector<Rgb8>& palette)
{
    if (indices.size() != width * height) throw UsageError("write_indexed_png: index buffer does not match dimensions");
    if (palette.empty() || palette.size() > 256) throw UsageError("write_indexed_png: palette size must be 1..256");
    for (auto i : indices) {
        if (i >= palette.size()) throw UsageError("write_indexed_png: index outside palette");
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(width);
    img.height = static_cast<png_uint_32>(height);
    img.format = PNG_FORMAT_RGB_COLORMAP;
    img.colormap_entries = static_cast<png_uint_32>(palette.size());
    std::vector<std::uint8_t> cmap;
    for (const auto& c : palette) cmap.insert(cmap.end(), c.begin(), c.end());
    if (!png_image_write_to_file(&img, path.c_str(), 0, indices.data(), 0, cmap.data())) {
        throw DataError("cannot write PNG " + path.string() + ": " + img.message);
    }
}

} // namespace insitu::video
