// SPDX-License-Identifier: Apache-2.0
#include "voxgen/box_index.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace voxgen {

namespace {

std::int64_t center2_x(const Aabb& b) {
    return static_cast<std::int64_t>(b.lo_x) + b.hi_x;
}
std::int64_t center2_y(const Aabb& b) {
    return static_cast<std::int64_t>(b.lo_y) + b.hi_y;
}
std::int64_t center2_z(const Aabb& b) {
    return static_cast<std::int64_t>(b.lo_z) + b.hi_z;
}

Aabb merge(const Aabb& a, const Aabb& b) {
    Aabb m;
    m.lo_x = std::min(a.lo_x, b.lo_x);
    m.lo_y = std::min(a.lo_y, b.lo_y);
    m.lo_z = std::min(a.lo_z, b.lo_z);
    m.hi_x = std::max(a.hi_x, b.hi_x);
    m.hi_y = std::max(a.hi_y, b.hi_y);
    m.hi_z = std::max(a.hi_z, b.hi_z);
    return m;
}

std::size_t div_ceil(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

} // namespace

BoxIndex BoxIndex::build(std::span<const IndexEntry> entries) {
    BoxIndex index;
    index.leaf_entries_.assign(entries.begin(), entries.end());
    const std::size_t n = index.leaf_entries_.size();
    if (n == 0) return index;

    {
        std::unordered_set<std::uint32_t> ids;
        ids.reserve(n);
        for (const IndexEntry& e : index.leaf_entries_)
            if (!ids.insert(e.id).second)
                throw std::invalid_argument("duplicate component id " +
                                            std::to_string(e.id) +
                                            " in index build");
    }

    // Sort-tile-recursive packing: slice the entry set by x-center into
    // vertical slabs, each slab by y-center into runs, each run by z-center,
    // then cut leaves of kNodeCapacity consecutive entries. Ties broken by
    // id so the structure is identical for identical inputs.
    auto& es = index.leaf_entries_;
    const std::size_t leaf_count = div_ceil(n, kNodeCapacity);
    const auto slabs = static_cast<std::size_t>(
        std::ceil(std::cbrt(static_cast<double>(leaf_count))));
    const std::size_t slab_size =
        div_ceil(n, std::max<std::size_t>(slabs, 1)); // entries per x-slab

    std::sort(es.begin(), es.end(), [](const IndexEntry& a, const IndexEntry& b) {
        auto ka = center2_x(a.box), kb = center2_x(b.box);
        return ka != kb ? ka < kb : a.id < b.id;
    });
    for (std::size_t s = 0; s < n; s += slab_size) {
        const std::size_t slab_end = std::min(n, s + slab_size);
        const std::size_t slab_n = slab_end - s;
        const std::size_t runs = static_cast<std::size_t>(std::ceil(std::sqrt(
            static_cast<double>(div_ceil(slab_n, kNodeCapacity)))));
        const std::size_t run_size = div_ceil(slab_n, std::max<std::size_t>(runs, 1));
        std::sort(es.begin() + s, es.begin() + slab_end,
                  [](const IndexEntry& a, const IndexEntry& b) {
                      auto ka = center2_y(a.box), kb = center2_y(b.box);
                      return ka != kb ? ka < kb : a.id < b.id;
                  });
        for (std::size_t r = s; r < slab_end; r += run_size) {
            const std::size_t run_end = std::min(slab_end, r + run_size);
            std::sort(es.begin() + r, es.begin() + run_end,
                      [](const IndexEntry& a, const IndexEntry& b) {
                          auto ka = center2_z(a.box), kb = center2_z(b.box);
                          return ka != kb ? ka < kb : a.id < b.id;
                      });
        }
    }

    // Leaf level.
    std::vector<std::uint32_t> level; // node indexes of the current level
    for (std::size_t s = 0; s < n; s += kNodeCapacity) {
        Node node;
        node.leaf = true;
        node.first = static_cast<std::uint32_t>(s);
        node.count =
            static_cast<std::uint32_t>(std::min(n, s + kNodeCapacity) - s);
        node.bounds = es[s].box;
        for (std::size_t i = s + 1; i < s + node.count; ++i)
            node.bounds = merge(node.bounds, es[i].box);
        level.push_back(static_cast<std::uint32_t>(index.nodes_.size()));
        index.nodes_.push_back(node);
    }

    // Upper levels: pack consecutive nodes (already in STR order).
    while (level.size() > 1) {
        std::vector<std::uint32_t> next;
        for (std::size_t s = 0; s < level.size(); s += kNodeCapacity) {
            Node node;
            node.leaf = false;
            node.first = level[s];
            node.count = static_cast<std::uint32_t>(
                std::min(level.size(), s + kNodeCapacity) - s);
            node.bounds = index.nodes_[level[s]].bounds;
            for (std::size_t i = s + 1; i < s + node.count; ++i)
                node.bounds =
                    merge(node.bounds, index.nodes_[level[i]].bounds);
            next.push_back(static_cast<std::uint32_t>(index.nodes_.size()));
            index.nodes_.push_back(node);
        }
        level = std::move(next);
    }
    index.root_ = static_cast<std::int32_t>(level.front());
    return index;
}

void BoxIndex::descend(std::uint32_t node_index, std::int32_t x,
                       std::int32_t y, std::int32_t z,
                       std::vector<std::uint32_t>& out) const {
    const Node& node = nodes_[node_index];
    if (!node.bounds.contains(x, y, z)) return;
    if (node.leaf) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
            if (leaf_entries_[i].box.contains(x, y, z))
                out.push_back(leaf_entries_[i].id);
    } else {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
            descend(i, x, y, z, out);
    }
}

void BoxIndex::query_point(std::int32_t x, std::int32_t y, std::int32_t z,
                           std::vector<std::uint32_t>& out) const {
    out.clear();
    if (root_ < 0) return;
    descend(static_cast<std::uint32_t>(root_), x, y, z, out);
    std::sort(out.begin(), out.end());
}

std::vector<std::size_t> BoxIndex::level_sizes() const {
    std::vector<std::size_t> sizes;
    if (root_ < 0) return sizes;
    std::vector<std::uint32_t> level{static_cast<std::uint32_t>(root_)};
    while (!level.empty()) {
        sizes.push_back(level.size());
        std::vector<std::uint32_t> next;
        for (std::uint32_t idx : level) {
            const Node& node = nodes_[idx];
            if (node.leaf) continue;
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
                next.push_back(i);
        }
        level = std::move(next);
    }
    std::reverse(sizes.begin(), sizes.end());
    return sizes;
}

} // namespace voxgen
