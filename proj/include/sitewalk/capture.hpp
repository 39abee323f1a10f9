#ifndef SITEWALK_CAPTURE_HPP
#define SITEWALK_CAPTURE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sitewalk/pose.hpp"

namespace sitewalk {

using Bytes = std::vector<std::uint8_t>;

/* One 360 capture taken at a DRP */
struct Capture
{
    std::string capture_id;
    std::string mission_id;
    std::string drp_id;
    /* Position of the DRP in the mission's visiting order */
    std::size_t sequence = 0;
    /* Estimated pose when the shutter fired */
    Pose2D pose_at_capture;
    /* Seconds since mission start */
    double timestamp = 0.0;
    /* PNG-encoded equirectangular image */
    Bytes payload;

    friend bool operator==(const Capture&, const Capture&) = default;
};

constexpr int kPanoramaWidth = 512;
constexpr int kPanoramaHeight = 256;

/*
 * Synthesizes the panorama for a capture. The image is a seeded block
 * pattern with a text band reading "mission/drp/x/y/theta"; the seed and the
 * text both use the pose rounded to 1 mm and 1 mrad, so equal inputs give
 * byte-identical PNGs.
 */
Capture capture_panorama(const std::string& missionId, const std::string& drpId, const Pose2D& pose,
                         std::size_t sequence = 0);

std::string make_capture_id(const std::string& missionId, std::size_t sequence, const std::string& drpId);

/* 8-bit RGB, row-major, no padding */
Bytes encode_png_rgb(std::span<const std::uint8_t> rgb, int width, int height);

/* 64-bit FNV-1a, used for deterministic seeds */
std::uint64_t fnv1a64(std::string_view data);

} // namespace sitewalk

#endif // SITEWALK_CAPTURE_HPP
