#include "dscope/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace dscope {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> raw{};
  unsigned int raw_len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), raw.data(), &raw_len,
                 EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(raw_len * 2);
  for (unsigned int i = 0; i < raw_len; ++i) {
    out.push_back(hex[raw[i] >> 4]);
    out.push_back(hex[raw[i] & 0x0f]);
  }
  return out;
}

std::string canonical_digest(const nlohmann::json& value) {
  return sha256_hex(value.dump());
}

}  // namespace dscope
