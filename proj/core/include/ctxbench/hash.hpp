#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ctxbench {

std::string sha256_hex(std::string_view data);

std::uint64_t fnv1a64(std::string_view data) noexcept;

// splitmix64 finalizer over (seed, salt); used to derive independent
// per-record streams from one run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt) noexcept;

}  // namespace ctxbench
