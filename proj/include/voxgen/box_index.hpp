// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "voxgen/model.hpp"

namespace voxgen {

struct IndexEntry {
    Aabb box;
    std::uint32_t id = 0;
};

/// Static R-tree over (box, id) pairs, bulk-loaded with sort-tile-recursive
/// packing. Immutable after build; point queries return the ids of all boxes
/// containing the query point, sorted ascending. Concurrent read-only
/// queries are safe.
class BoxIndex {
public:
    BoxIndex() = default;

    /// Bulk-loads the index. Throws std::invalid_argument on duplicate ids.
    static BoxIndex build(std::span<const IndexEntry> entries);

    std::size_t size() const { return leaf_entries_.size(); }

    /// Appends the ids of all boxes containing (x,y,z) to out (out is
    /// cleared first) and returns them sorted ascending.
    void query_point(std::int32_t x, std::int32_t y, std::int32_t z,
                     std::vector<std::uint32_t>& out) const;

    std::vector<std::uint32_t> query_point(std::int32_t x, std::int32_t y,
                                           std::int32_t z) const {
        std::vector<std::uint32_t> out;
        query_point(x, y, z, out);
        return out;
    }

    /// Nodes per level, root level last; useful for sanity checks.
    std::vector<std::size_t> level_sizes() const;

private:
    static constexpr std::size_t kNodeCapacity = 16;

    void descend(std::uint32_t node_index, std::int32_t x, std::int32_t y,
                 std::int32_t z, std::vector<std::uint32_t>& out) const;

    struct Node {
        Aabb bounds;
        // Children are stored contiguously: [first, first+count) indexes
        // either leaf_entries_ (leaf) or nodes_ of the level below.
        std::uint32_t first = 0;
        std::uint32_t count = 0;
        bool leaf = true;
    };

    std::vector<IndexEntry> leaf_entries_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1; // index into nodes_, -1 when empty
};

} // namespace voxgen
