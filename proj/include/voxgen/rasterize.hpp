// SPDX-License-Identifier: Apache-2.0
//
// The rasterization engines. All of them evaluate, for every grid voxel, the
// combine of the value functions of the components whose box contains the
// voxel, presenting contributions in ascending component id ("canonical
// order"). That fixed order makes outputs bit-identical across engines even
// for non-associative float sums.
//
//   rasterize_bruteforce       per voxel, linear scan over all components
//   rasterize_component_order  per component into a random-access buffer
//   rasterize_spatial_index    per voxel, R-tree stabbing queries
//   rasterize_nested_sweeps    per voxel via nested z/y/x sweeps over
//                              queues and active sets
//
// The sink-based engines emit exactly one line per (z,y) in ascending order
// and never revisit a voxel, so they can stream volumes of any size.
#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "voxgen/box_index.hpp"
#include "voxgen/model.hpp"
#include "voxgen/volume_io.hpp"

namespace voxgen {

/// Instrumentation hook for sweep-state inspection. `active` carries the ids
/// in the current active set (for on_voxel: in combine order); `queued` the
/// ids still waiting in the current dimension's queue. Enabling an observer
/// switches the inner sweep to a per-voxel loop; output is unchanged.
class SweepObserver {
public:
    virtual ~SweepObserver() = default;
    virtual void on_slice(std::int32_t /*z*/,
                          std::span<const std::uint32_t> /*active*/,
                          std::span<const std::uint32_t> /*queued*/) {}
    virtual void on_line(std::int32_t /*y*/, std::int32_t /*z*/,
                         std::span<const std::uint32_t> /*active*/,
                         std::span<const std::uint32_t> /*queued*/) {}
    virtual void on_voxel(std::int32_t /*x*/, std::int32_t /*y*/,
                          std::int32_t /*z*/,
                          std::span<const std::uint32_t> /*active*/,
                          std::span<const std::uint32_t> /*queued*/) {}
};

struct NestedSweepOptions {
    bool per_line_stats = false;
    SweepObserver* observer = nullptr;
};

namespace detail {

template <typename T>
struct SweepEntry {
    Aabb box;
    std::uint32_t id = 0;
    const ValueFn<T>* value = nullptr;
};

template <typename T>
void validate_components(std::span<const Component<T>> comps,
                         const VoxelGrid& grid) {
    std::unordered_set<std::uint32_t> ids;
    ids.reserve(comps.size());
    for (const Component<T>& c : comps) {
        if (!c.box.within(grid))
            throw std::invalid_argument("component " + std::to_string(c.id) +
                                        " box exceeds the grid");
        if (!ids.insert(c.id).second)
            throw std::invalid_argument("duplicate component id " +
                                        std::to_string(c.id));
    }
}

template <typename T>
void insert_by_id(std::vector<SweepEntry<T>>& set, const SweepEntry<T>& e) {
    auto it = std::upper_bound(
        set.begin(), set.end(), e.id,
        [](std::uint32_t id, const SweepEntry<T>& s) { return id < s.id; });
    set.insert(it, e);
}

} // namespace detail

/// Incremental form of the nested-sweeps engine: produces one x-line per
/// call, in ascending (z,y) order. Several cursors can be stepped in lockstep
/// to compose multi-field volumes in one streaming pass. The component span
/// must outlive the cursor.
template <typename T, typename Op>
class NestedSweepCursor {
    using Entry = detail::SweepEntry<T>;

public:
    NestedSweepCursor(std::span<const Component<T>> comps,
                      const VoxelGrid& grid, NestedSweepOptions options = {})
        : grid_(grid), options_(options) {
        detail::validate_components(comps, grid);
        queue_z_.reserve(comps.size());
        for (const Component<T>& c : comps)
            queue_z_.push_back(Entry{c.box, c.id, &c.value});
        std::sort(queue_z_.begin(), queue_z_.end(),
                  [](const Entry& a, const Entry& b) {
                      return a.box.lo_z != b.box.lo_z ? a.box.lo_z < b.box.lo_z
                                                      : a.id < b.id;
                  });
        stats_.per_slice_active.resize(static_cast<std::size_t>(grid.dz));
        if (options_.per_line_stats)
            stats_.per_line_active.assign(grid.line_count(), 0);
        work_line_.resize(static_cast<std::size_t>(grid.dx));
        identity_line_.assign(static_cast<std::size_t>(grid.dx),
                              Op::identity());
    }

    /// The next line in stream order, or an empty span after the last one.
    std::span<const T> next_line() {
        if (z_ == grid_.dz) return {};
        if (y_ == 0) begin_slice();

        // Active-line update: drop components whose y-interval ended, then
        // pop queue entries that start on this line.
        std::erase_if(active_y_,
                      [this](const Entry& e) { return e.box.hi_y < y_; });
        while (queue_y_next_ < queue_y_.size() &&
               queue_y_[queue_y_next_].box.lo_y == y_)
            active_y_.push_back(queue_y_[queue_y_next_++]);

        if (options_.per_line_stats)
            stats_.per_line_active[static_cast<std::uint64_t>(z_) * grid_.dy +
                                   y_] =
                static_cast<std::uint32_t>(active_y_.size());

        queue_x_.assign(active_y_.begin(), active_y_.end());
        std::sort(queue_x_.begin(), queue_x_.end(),
                  [](const Entry& a, const Entry& b) {
                      return a.box.lo_x != b.box.lo_x ? a.box.lo_x < b.box.lo_x
                                                      : a.id < b.id;
                  });

        if (options_.observer) {
            options_.observer->on_line(y_, z_, ids_of(active_y_),
                                       ids_tail(queue_y_, queue_y_next_));
        }

        std::span<const T> line;
        if (options_.observer) {
            sweep_line_voxels();
            line = work_line_;
        } else if (active_y_.empty()) {
            line = identity_line_;
        } else {
            sweep_line_runs();
            line = work_line_;
        }

        line_z_ = z_;
        line_y_ = y_;
        if (++y_ == grid_.dy) {
            y_ = 0;
            ++z_;
        }
        return line;
    }

    std::int32_t line_z() const { return line_z_; }
    std::int32_t line_y() const { return line_y_; }

    const SweepStats& stats() const { return stats_; }
    SweepStats take_stats() { return std::move(stats_); }

private:
    void begin_slice() {
        std::erase_if(active_z_,
                      [this](const Entry& e) { return e.box.hi_z < z_; });
        while (queue_z_next_ < queue_z_.size() &&
               queue_z_[queue_z_next_].box.lo_z == z_)
            active_z_.push_back(queue_z_[queue_z_next_++]);
        stats_.per_slice_active[static_cast<std::size_t>(z_)] =
            static_cast<std::uint32_t>(active_z_.size());

        queue_y_.assign(active_z_.begin(), active_z_.end());
        std::sort(queue_y_.begin(), queue_y_.end(),
                  [](const Entry& a, const Entry& b) {
                      return a.box.lo_y != b.box.lo_y ? a.box.lo_y < b.box.lo_y
                                                      : a.id < b.id;
                  });
        queue_y_next_ = 0;
        active_y_.clear();

        if (options_.observer)
            options_.observer->on_slice(z_, ids_of(active_z_),
                                        ids_tail(queue_z_, queue_z_next_));
    }

    /// Event-driven inner sweep: between two activation/expiry boundaries the
    /// active set is constant, so each active component is applied over the
    /// whole run. Per-voxel combine order is still ascending id.
    void sweep_line_runs() {
        T* buf = work_line_.data();
        const std::int32_t dx = grid_.dx;
        std::size_t qi = 0;
        active_x_.clear();
        std::int32_t x = 0;
        while (x < dx) {
            std::erase_if(active_x_,
                          [x](const Entry& e) { return e.box.hi_x < x; });
            while (qi < queue_x_.size() && queue_x_[qi].box.lo_x == x)
                detail::insert_by_id(active_x_, queue_x_[qi++]);

            std::int32_t next = dx;
            if (qi < queue_x_.size())
                next = std::min(next, queue_x_[qi].box.lo_x);
            for (const Entry& e : active_x_)
                next = std::min(next, e.box.hi_x + 1);

            std::fill(buf + x, buf + next, Op::identity());
            for (const Entry& e : active_x_) {
                if (e.value->is_constant()) {
                    const T c = e.value->constant_value();
                    for (std::int32_t j = x; j < next; ++j)
                        buf[j] = Op::apply(buf[j], c);
                } else {
                    for (std::int32_t j = x; j < next; ++j)
                        buf[j] = Op::apply(buf[j], (*e.value)(j, y_, z_));
                }
            }
            x = next;
        }
    }

    /// Plain per-voxel sweep, used when an observer is attached.
    void sweep_line_voxels() {
        T* buf = work_line_.data();
        std::size_t qi = 0;
        active_x_.clear();
        for (std::int32_t x = 0; x < grid_.dx; ++x) {
            std::erase_if(active_x_,
                          [x](const Entry& e) { return e.box.hi_x < x; });
            while (qi < queue_x_.size() && queue_x_[qi].box.lo_x == x)
                detail::insert_by_id(active_x_, queue_x_[qi++]);

            T acc = Op::identity();
            for (const Entry& e : active_x_)
                acc = Op::apply(acc, (*e.value)(x, y_, z_));
            buf[x] = acc;

            if (options_.observer)
                options_.observer->on_voxel(x, y_, z_, ids_of(active_x_),
                                            ids_tail(queue_x_, qi));
        }
    }

    std::span<const std::uint32_t> ids_of(const std::vector<Entry>& v) {
        ids_scratch_.clear();
        for (const Entry& e : v) ids_scratch_.push_back(e.id);
        return ids_scratch_;
    }
    std::span<const std::uint32_t> ids_tail(const std::vector<Entry>& v,
                                            std::size_t from) {
        ids_tail_scratch_.clear();
        for (std::size_t i = from; i < v.size(); ++i)
            ids_tail_scratch_.push_back(v[i].id);
        return ids_tail_scratch_;
    }

    VoxelGrid grid_;
    NestedSweepOptions options_;

    std::vector<Entry> queue_z_;
    std::size_t queue_z_next_ = 0;
    std::vector<Entry> active_z_;
    std::vector<Entry> queue_y_;
    std::size_t queue_y_next_ = 0;
    std::vector<Entry> active_y_;
    std::vector<Entry> queue_x_;
    std::vector<Entry> active_x_; // kept sorted by id

    std::int32_t z_ = 0, y_ = 0;
    std::int32_t line_z_ = 0, line_y_ = 0;

    std::vector<T> work_line_;
    std::vector<T> identity_line_;
    std::vector<std::uint32_t> ids_scratch_;
    std::vector<std::uint32_t> ids_tail_scratch_;

    SweepStats stats_;
};

/// Nested-sweeps rasterization into a streaming sink. The caller finishes
/// the sink (so failures leave it unambiguously unfinished).
template <typename T, typename Op>
SweepStats rasterize_nested_sweeps(std::span<const Component<T>> comps,
                                   const VoxelGrid& grid, Op,
                                   LineSink<T>& sink,
                                   NestedSweepOptions options = {}) {
    NestedSweepCursor<T, Op> cursor(comps, grid, options);
    for (std::span<const T> line; !(line = cursor.next_line()).empty();)
        sink.accept_line(cursor.line_z(), cursor.line_y(), line);
    return cursor.take_stats();
}

/// Reference engine: for every voxel, scan every component. O(|G|*n); the
/// other engines are tested for bit-exact agreement against it.
template <typename T, typename Op>
SweepStats rasterize_bruteforce(std::span<const Component<T>> comps,
                                const VoxelGrid& grid, Op, LineSink<T>& sink) {
    detail::validate_components(comps, grid);
    std::vector<const Component<T>*> by_id;
    by_id.reserve(comps.size());
    for (const Component<T>& c : comps) by_id.push_back(&c);
    std::sort(by_id.begin(), by_id.end(),
              [](const Component<T>* a, const Component<T>* b) {
                  return a->id < b->id;
              });

    std::vector<T> line(static_cast<std::size_t>(grid.dx));
    std::vector<Aabb> boxes;
    boxes.reserve(comps.size());
    for (const Component<T>& c : comps) boxes.push_back(c.box);

    for (std::int32_t z = 0; z < grid.dz; ++z) {
        for (std::int32_t y = 0; y < grid.dy; ++y) {
            for (std::int32_t x = 0; x < grid.dx; ++x) {
                T acc = Op::identity();
                for (const Component<T>* c : by_id)
                    if (c->box.contains(x, y, z))
                        acc = Op::apply(acc, c->value(x, y, z));
                line[static_cast<std::size_t>(x)] = acc;
            }
            sink.accept_line(z, y, line);
        }
    }
    return compute_sweep_stats(boxes, grid, false);
}

/// Voxel-order rasterization answering "which components cover this voxel"
/// with a point-stabbing R-tree. Streams like nested sweeps but pays a tree
/// query per voxel.
template <typename T, typename Op>
SweepStats rasterize_spatial_index(std::span<const Component<T>> comps,
                                   const VoxelGrid& grid, Op,
                                   LineSink<T>& sink) {
    detail::validate_components(comps, grid);
    std::vector<IndexEntry> entries;
    entries.reserve(comps.size());
    std::vector<std::pair<std::uint32_t, const Component<T>*>> by_id;
    by_id.reserve(comps.size());
    std::vector<Aabb> boxes;
    boxes.reserve(comps.size());
    for (const Component<T>& c : comps) {
        entries.push_back(IndexEntry{c.box, c.id});
        by_id.emplace_back(c.id, &c);
        boxes.push_back(c.box);
    }
    std::sort(by_id.begin(), by_id.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const BoxIndex index = BoxIndex::build(entries);

    std::vector<T> line(static_cast<std::size_t>(grid.dx));
    std::vector<std::uint32_t> hits;
    for (std::int32_t z = 0; z < grid.dz; ++z) {
        for (std::int32_t y = 0; y < grid.dy; ++y) {
            for (std::int32_t x = 0; x < grid.dx; ++x) {
                index.query_point(x, y, z, hits);
                T acc = Op::identity();
                for (std::uint32_t id : hits) {
                    const auto it = std::lower_bound(
                        by_id.begin(), by_id.end(), id,
                        [](const auto& p, std::uint32_t key) {
                            return p.first < key;
                        });
                    acc = Op::apply(acc, it->second->value(x, y, z));
                }
                line[static_cast<std::size_t>(x)] = acc;
            }
            sink.accept_line(z, y, line);
        }
    }
    return compute_sweep_stats(boxes, grid, false);
}

/// Component-order rasterization into a random-access buffer (in-memory or
/// file-mapped): clear to the identity, then write every component's box.
/// Cannot stream; kept because its access pattern is the interesting
/// benchmark contrast. With sort_by_origin the components are processed in
/// ascending storage offset of their box origin, (lo_z*dy + lo_y)*dx + lo_x,
/// which improves write locality.
template <typename T, typename Op>
void rasterize_component_order(std::span<const Component<T>> comps,
                               const VoxelGrid& grid, Op,
                               std::span<T> volume, bool sort_by_origin) {
    detail::validate_components(comps, grid);
    if (volume.size() != grid.voxel_count())
        throw std::invalid_argument("buffer has " +
                                    std::to_string(volume.size()) +
                                    " voxels, grid needs " +
                                    std::to_string(grid.voxel_count()));

    std::fill(volume.begin(), volume.end(), Op::identity());

    std::vector<std::uint32_t> order(comps.size());
    for (std::uint32_t i = 0; i < comps.size(); ++i) order[i] = i;
    if (sort_by_origin) {
        std::sort(order.begin(), order.end(),
                  [&](std::uint32_t ia, std::uint32_t ib) {
                      const Component<T>&a = comps[ia], &b = comps[ib];
                      const std::uint64_t ka =
                          grid.linear_index(a.box.lo_x, a.box.lo_y, a.box.lo_z);
                      const std::uint64_t kb =
                          grid.linear_index(b.box.lo_x, b.box.lo_y, b.box.lo_z);
                      return ka != kb ? ka < kb : a.id < b.id;
                  });
    }

    T* buf = volume.data();
    for (std::uint32_t oi : order) {
        const Component<T>& c = comps[oi];
        const Aabb& b = c.box;
        const bool constant = c.value.is_constant();
        const T cv = constant ? c.value.constant_value() : T{};
        for (std::int32_t z = b.lo_z; z <= b.hi_z; ++z) {
            for (std::int32_t y = b.lo_y; y <= b.hi_y; ++y) {
                const std::uint64_t base =
                    (static_cast<std::uint64_t>(z) * grid.dy + y) * grid.dx;
                if (constant) {
                    for (std::int32_t x = b.lo_x; x <= b.hi_x; ++x)
                        buf[base + x] = Op::apply(buf[base + x], cv);
                } else {
                    for (std::int32_t x = b.lo_x; x <= b.hi_x; ++x)
                        buf[base + x] =
                            Op::apply(buf[base + x], c.value(x, y, z));
                }
            }
        }
    }
}

} // namespace voxgen
