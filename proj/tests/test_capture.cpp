#include <doctest.h>

#include "oracles.hpp"
#include "sitewalk/capture.hpp"
#include "sitewalk/codec.hpp"
#include "sitewalk/errors.hpp"

using namespace sitewalk;

TEST_CASE("panorama payload is deterministic")
{
    const Capture a = capture_panorama("m1", "drp_a", Pose2D(3.25, 4.5, 0.7), 2);
    const Capture b = capture_panorama("m1", "drp_a", Pose2D(3.25, 4.5, 0.7), 2);
    CHECK(a.payload == b.payload);
    CHECK(a.capture_id == "m1-02-drp_a");
    CHECK(a.sequence == 2);

    // Sub-millimetre jitter rounds away, 2 mm does not.
    CHECK(capture_panorama("m1", "drp_a", Pose2D(3.2501, 4.5, 0.7)).payload == a.payload);
    CHECK(capture_panorama("m1", "drp_a", Pose2D(3.252, 4.5, 0.7)).payload != a.payload);
    CHECK(capture_panorama("m1", "drp_a", Pose2D(3.25, 4.5, 0.702)).payload != a.payload);
    CHECK(capture_panorama("m2", "drp_a", Pose2D(3.25, 4.5, 0.7)).payload != a.payload);
    CHECK(capture_panorama("m1", "drp_b", Pose2D(3.25, 4.5, 0.7)).payload != a.payload);
}

TEST_CASE("panorama decodes as a 2:1 RGB image")
{
    const Capture c = capture_panorama("mission", "drp", Pose2D(1, 2, 3));
    const oracle::DecodedImage img = oracle::decode_png(c.payload);
    REQUIRE(img.ok);
    CHECK(img.width == 512);
    CHECK(img.height == 256);
    CHECK(img.rgb.size() == 512u * 256u * 3u);

    // The text band is white with dark glyph pixels.
    std::size_t white = 0, dark = 0;
    for (int y = 120; y < 136; ++y)
        for (int x = 0; x < 512; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * 512 + x) * 3;
            const int sum = img.rgb[i] + img.rgb[i + 1] + img.rgb[i + 2];
            white += sum == 765;
            dark += sum == 0;
        }
    CHECK(white > 0);
    CHECK(dark > 0);
    CHECK(white + dark == 512u * 16u);
}

TEST_CASE("base64 known vectors and round trip")
{
    auto bytes = [](std::string_view s) { return std::vector<std::uint8_t>(s.begin(), s.end()); };
    CHECK(base64_encode(bytes("")) == "");
    CHECK(base64_encode(bytes("f")) == "Zg==");
    CHECK(base64_encode(bytes("fo")) == "Zm8=");
    CHECK(base64_encode(bytes("foo")) == "Zm9v");
    CHECK(base64_encode(bytes("foobar")) == "Zm9vYmFy");
    CHECK(base64_decode("Zm9vYg==") == bytes("foob"));
    CHECK(base64_decode("Zm9vYmE=") == bytes("fooba"));
    CHECK(base64_decode("") == bytes(""));
    CHECK_THROWS_AS(base64_decode("Zm9"), ProtocolError);
    CHECK_THROWS_AS(base64_decode("Zm9v!!!!"), ProtocolError);

    const Capture c = capture_panorama("m", "d", Pose2D(0, 0, 0));
    CHECK(base64_decode(base64_encode(c.payload)) == c.payload);
}

TEST_CASE("sha256 known vectors")
{
    CHECK(sha256_hex(std::string_view("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex(std::string_view("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
