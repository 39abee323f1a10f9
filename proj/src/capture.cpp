#include "sitewalk/capture.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <random>
#include <string_view>

#include <fmt/format.h>
#include <png.h>

#include "sitewalk/errors.hpp"

namespace sitewalk {

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string make_capture_id(const std::string& missionId, std::size_t sequence, const std::string& drpId)
{
    return fmt::format("{}-{:02d}-{}", missionId, sequence, drpId);
}

Bytes encode_png_rgb(std::span<const std::uint8_t> rgb, int width, int height)
{
    png_image image {};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr))
        throw Error(std::string("png sizing failed: ") + image.message);

    Bytes out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr))
        throw Error(std::string("png encoding failed: ") + image.message);
    out.resize(size);
    png_image_free(&image);
    return out;
}

namespace {

/* 3x5 bitmap glyphs, rows top to bottom, '#' lit */
struct Glyph
{
    char ch;
    std::array<std::string_view, 5> rows;
};

constexpr Glyph kFont[] = {
    { '0', { "###", "#.#", "#.#", "#.#", "###" } }, { '1', { ".#.", "##.", ".#.", ".#.", "###" } },
    { '2', { "###", "..#", "###", "#..", "###" } }, { '3', { "###", "..#", "###", "..#", "###" } },
    { '4', { "#.#", "#.#", "###", "..#", "..#" } }, { '5', { "###", "#..", "###", "..#", "###" } },
    { '6', { "###", "#..", "###", "#.#", "###" } }, { '7', { "###", "..#", "..#", "..#", "..#" } },
    { '8', { "###", "#.#", "###", "#.#", "###" } }, { '9', { "###", "#.#", "###", "..#", "###" } },
    { 'A', { ".#.", "#.#", "###", "#.#", "#.#" } }, { 'B', { "##.", "#.#", "##.", "#.#", "##." } },
    { 'C', { "###", "#..", "#..", "#..", "###" } }, { 'D', { "##.", "#.#", "#.#", "#.#", "##." } },
    { 'E', { "###", "#..", "##.", "#..", "###" } }, { 'F', { "###", "#..", "##.", "#..", "#.." } },
    { 'G', { "###", "#..", "#.#", "#.#", "###" } }, { 'H', { "#.#", "#.#", "###", "#.#", "#.#" } },
    { 'I', { "###", ".#.", ".#.", ".#.", "###" } }, { 'J', { "..#", "..#", "..#", "#.#", "###" } },
    { 'K', { "#.#", "#.#", "##.", "#.#", "#.#" } }, { 'L', { "#..", "#..", "#..", "#..", "###" } },
    { 'M', { "#.#", "###", "###", "#.#", "#.#" } }, { 'N', { "##.", "#.#", "#.#", "#.#", "#.#" } },
    { 'O', { ".#.", "#.#", "#.#", "#.#", ".#." } }, { 'P', { "###", "#.#", "###", "#..", "#.." } },
    { 'Q', { "###", "#.#", "#.#", "###", "..#" } }, { 'R', { "##.", "#.#", "##.", "#.#", "#.#" } },
    { 'S', { "###", "#..", "###", "..#", "###" } }, { 'T', { "###", ".#.", ".#.", ".#.", ".#." } },
    { 'U', { "#.#", "#.#", "#.#", "#.#", "###" } }, { 'V', { "#.#", "#.#", "#.#", "#.#", ".#." } },
    { 'W', { "#.#", "#.#", "###", "###", "#.#" } }, { 'X', { "#.#", "#.#", ".#.", "#.#", "#.#" } },
    { 'Y', { "#.#", "#.#", ".#.", ".#.", ".#." } }, { 'Z', { "###", "..#", ".#.", "#..", "###" } },
    { '/', { "..#", "..#", ".#.", "#..", "#.." } }, { '.', { "...", "...", "...", "...", ".#." } },
    { '-', { "...", "...", "###", "...", "..." } }, { '_', { "...", "...", "...", "...", "###" } },
    { ':', { "...", ".#.", "...", ".#.", "..." } }, { ' ', { "...", "...", "...", "...", "..." } },
    { '?', { "###", "..#", ".#.", "...", ".#." } },
};

const Glyph& glyph_for(char c)
{
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const Glyph& g : kFont)
        if (g.ch == up)
            return g;
    return kFont[std::size(kFont) - 1];
}

class Canvas
{
public:
    Canvas(int width, int height) :
        mWidth(width), mHeight(height), mRgb(static_cast<std::size_t>(width) * height * 3, 0) { }

    void fill(int x0, int y0, int w, int h, std::array<std::uint8_t, 3> color)
    {
        for (int y = std::max(0, y0); y < std::min(mHeight, y0 + h); ++y)
            for (int x = std::max(0, x0); x < std::min(mWidth, x0 + w); ++x) {
                const std::size_t i = (static_cast<std::size_t>(y) * mWidth + x) * 3;
                mRgb[i] = color[0];
                mRgb[i + 1] = color[1];
                mRgb[i + 2] = color[2];
            }
    }

    void text(int x, int y, std::string_view s, int scale)
    {
        const int advance = 4 * scale;
        for (char c : s) {
            if (x + 3 * scale > mWidth)
                break;
            const Glyph& g = glyph_for(c);
            for (int row = 0; row < 5; ++row)
                for (int col = 0; col < 3; ++col)
                    if (g.rows[row][col] == '#')
                        fill(x + col * scale, y + row * scale, scale, scale, { 0, 0, 0 });
            x += advance;
        }
    }

    const Bytes& rgb() const { return mRgb; }

private:
    int mWidth;
    int mHeight;
    Bytes mRgb;
};

constexpr int kBlock = 16;
constexpr int kBandTop = 120;
constexpr int kBandHeight = 16;
constexpr int kTextScale = 2;

} // namespace

Capture capture_panorama(const std::string& missionId, const std::string& drpId, const Pose2D& pose,
                         std::size_t sequence)
{
    const long long qx = std::llround(pose.x() * 1000.0);
    const long long qy = std::llround(pose.y() * 1000.0);
    const long long qt = std::llround(pose.theta() * 1000.0);

    std::string key = missionId;
    key += '\0';
    key += drpId;
    key += fmt::format("|{}|{}|{}", qx, qy, qt);
    std::mt19937_64 rng(fnv1a64(key));

    Canvas canvas(kPanoramaWidth, kPanoramaHeight);
    for (int by = 0; by < kPanoramaHeight; by += kBlock)
        for (int bx = 0; bx < kPanoramaWidth; bx += kBlock) {
            const std::uint64_t v = rng();
            canvas.fill(bx, by, kBlock, kBlock,
                        { static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                          static_cast<std::uint8_t>(v >> 16) });
        }

    canvas.fill(0, kBandTop, kPanoramaWidth, kBandHeight, { 255, 255, 255 });
    const std::string label = fmt::format("{}/{}/{:.3f}/{:.3f}/{:.3f}", missionId, drpId,
                                          static_cast<double>(qx) / 1000.0,
                                          static_cast<double>(qy) / 1000.0,
                                          static_cast<double>(qt) / 1000.0);
    canvas.text(4, kBandTop + 3, label, kTextScale);

    Capture capture;
    capture.capture_id = make_capture_id(missionId, sequence, drpId);
    capture.mission_id = missionId;
    capture.drp_id = drpId;
    capture.sequence = sequence;
    capture.pose_at_capture = pose;
    capture.payload = encode_png_rgb(canvas.rgb(), kPanoramaWidth, kPanoramaHeight);
    return capture;
}

} // namespace sitewalk
