#ifndef SITEWALK_CODEC_HPP
#define SITEWALK_CODEC_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sitewalk {

std::string base64_encode(std::span<const std::uint8_t> data);
/* Throws ProtocolError on malformed input */
std::vector<std::uint8_t> base64_decode(std::string_view text);

/* Lowercase hex SHA-256 */
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);

} // namespace sitewalk

#endif // SITEWALK_CODEC_HPP
