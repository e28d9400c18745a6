#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace same {

// Standard base64 with padding; used by the gateway wire format.
std::string base64_encode(const std::uint8_t* data, std::size_t len);
std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace same
