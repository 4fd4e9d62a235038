#pragma once

#include <string>
#include <string_view>

namespace mtqe {

// Lowercase hex digest. Used for cache keys and request fingerprints where
// we only need a stable, collision-resistant content address.
std::string sha256_hex(std::string_view data);

}  // namespace mtqe
