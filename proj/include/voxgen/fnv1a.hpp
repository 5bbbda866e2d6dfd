// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace voxgen {

/// Streaming FNV-1a, 64-bit variant (Fowler/Noll/Vo; parameters from the
/// published reference). Not cryptographic; used for cross-run volume
/// fingerprints where speed at gigabyte scale matters.
class Fnv1a64 {
public:
    static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x00000100000001b3ULL;

    void update(std::span<const std::byte> bytes) {
        std::uint64_t h = hash_;
        for (std::byte b : bytes) {
            h ^= static_cast<std::uint64_t>(b);
            h *= kPrime;
        }
        hash_ = h;
    }

    void update(const void* data, std::size_t size) {
        update({static_cast<const std::byte*>(data), size});
    }

    std::uint64_t digest() const { return hash_; }

private:
    std::uint64_t hash_ = kOffsetBasis;
};

} // namespace voxgen
