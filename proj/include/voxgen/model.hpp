// SPDX-License-Identifier: Apache-2.0
//
// Core data model: voxel grids, inclusive integer bounding boxes, components
// (box + value function), combine operators and sweep occupancy statistics.
// All coordinates are 0-based; a grid spans {0,...,d-1} per axis. Volumes and
// linear offsets are carried as uint64 throughout.
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace voxgen {

enum class ScalarKind { U8, U32, F32 };

template <typename T>
struct scalar_traits;

template <>
struct scalar_traits<std::uint8_t> {
    static constexpr ScalarKind kind = ScalarKind::U8;
    static constexpr const char* name = "u8";
};
template <>
struct scalar_traits<std::uint32_t> {
    static constexpr ScalarKind kind = ScalarKind::U32;
    static constexpr const char* name = "u32";
};
template <>
struct scalar_traits<float> {
    static constexpr ScalarKind kind = ScalarKind::F32;
    static constexpr const char* name = "f32";
};

constexpr std::size_t scalar_size(ScalarKind k) {
    return k == ScalarKind::U8 ? 1 : 4;
}

constexpr const char* scalar_name(ScalarKind k) {
    switch (k) {
    case ScalarKind::U8: return "u8";
    case ScalarKind::U32: return "u32";
    case ScalarKind::F32: return "f32";
    }
    return "?";
}

inline ScalarKind parse_scalar_kind(const std::string& s) {
    if (s == "u8") return ScalarKind::U8;
    if (s == "u32") return ScalarKind::U32;
    if (s == "f32") return ScalarKind::F32;
    throw std::invalid_argument("unknown scalar type: " + s);
}

/// Calls f with a value of the runtime-selected scalar type as a tag.
template <typename F>
decltype(auto) dispatch_scalar(ScalarKind k, F&& f) {
    switch (k) {
    case ScalarKind::U8: return f(std::uint8_t{});
    case ScalarKind::U32: return f(std::uint32_t{});
    case ScalarKind::F32: return f(float{});
    }
    throw std::invalid_argument("invalid scalar kind");
}

namespace detail {
inline std::uint64_t checked_mul_u64(std::uint64_t a, std::uint64_t b,
                                     const char* what) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
        throw std::overflow_error(std::string(what) +
                                  " overflows 64-bit arithmetic");
    return a * b;
}
} // namespace detail

/// Output grid: positive extents plus the scalar type voxel values take.
/// Rejects extent combinations whose voxel count does not fit in uint64.
struct VoxelGrid {
    std::int32_t dx = 1;
    std::int32_t dy = 1;
    std::int32_t dz = 1;
    ScalarKind scalar = ScalarKind::U8;

    VoxelGrid() = default;
    VoxelGrid(std::int32_t dx_, std::int32_t dy_, std::int32_t dz_,
              ScalarKind scalar_ = ScalarKind::U8)
        : dx(dx_), dy(dy_), dz(dz_), scalar(scalar_) {
        if (dx < 1 || dy < 1 || dz < 1)
            throw std::invalid_argument("grid extents must be >= 1");
        voxel_count(); // validates the product
    }

    std::uint64_t voxel_count() const {
        using detail::checked_mul_u64;
        return checked_mul_u64(
            checked_mul_u64(static_cast<std::uint64_t>(dx),
                            static_cast<std::uint64_t>(dy), "voxel count"),
            static_cast<std::uint64_t>(dz), "voxel count");
    }

    std::uint64_t line_count() const {
        return static_cast<std::uint64_t>(dy) * static_cast<std::uint64_t>(dz);
    }

    std::uint64_t byte_count() const {
        return detail::checked_mul_u64(voxel_count(), scalar_size(scalar),
                                       "volume byte size");
    }

    bool contains(std::int32_t x, std::int32_t y, std::int32_t z) const {
        return x >= 0 && x < dx && y >= 0 && y < dy && z >= 0 && z < dz;
    }

    /// Offset of (x,y,z) in z-y-x storage order: (z*dy + y)*dx + x.
    /// x is the fastest-varying axis.
    std::uint64_t linear_index(std::int32_t x, std::int32_t y,
                               std::int32_t z) const {
        if (!contains(x, y, z))
            throw std::out_of_range(
                "coordinate (" + std::to_string(x) + "," + std::to_string(y) +
                "," + std::to_string(z) + ") outside grid " +
                std::to_string(dx) + "x" + std::to_string(dy) + "x" +
                std::to_string(dz));
        return (static_cast<std::uint64_t>(z) * dy + y) * dx + x;
    }

    friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;
};

/// Axis-aligned integer box, inclusive on both ends: every voxel p with
/// lo_D <= p_D <= hi_D belongs to the box.
struct Aabb {
    std::int32_t lo_x = 0, lo_y = 0, lo_z = 0;
    std::int32_t hi_x = 0, hi_y = 0, hi_z = 0;

    Aabb() = default;
    Aabb(std::int32_t lx, std::int32_t ly, std::int32_t lz, std::int32_t hx,
         std::int32_t hy, std::int32_t hz)
        : lo_x(lx), lo_y(ly), lo_z(lz), hi_x(hx), hi_y(hy), hi_z(hz) {
        if (lo_x > hi_x || lo_y > hi_y || lo_z > hi_z)
            throw std::invalid_argument("box has lo > hi");
    }

    bool contains(std::int32_t x, std::int32_t y, std::int32_t z) const {
        return lo_x <= x && x <= hi_x && lo_y <= y && y <= hi_y && lo_z <= z &&
               z <= hi_z;
    }

    std::int32_t side_x() const { return hi_x - lo_x + 1; }
    std::int32_t side_y() const { return hi_y - lo_y + 1; }
    std::int32_t side_z() const { return hi_z - lo_z + 1; }

    /// Voxel count, (hi-lo+1) per axis.
    std::uint64_t volume() const {
        using detail::checked_mul_u64;
        return checked_mul_u64(
            checked_mul_u64(static_cast<std::uint64_t>(side_x()),
                            static_cast<std::uint64_t>(side_y()),
                            "box volume"),
            static_cast<std::uint64_t>(side_z()), "box volume");
    }

    bool within(const VoxelGrid& g) const {
        return lo_x >= 0 && lo_y >= 0 && lo_z >= 0 && hi_x < g.dx &&
               hi_y < g.dy && hi_z < g.dz;
    }

    friend bool operator==(const Aabb&, const Aabb&) = default;
};

/// Voxel value function of a component. Pure: must return the same value for
/// the same coordinate. The constant case is stored unboxed so rasterizers
/// can recognize and batch it; everything else goes through std::function.
template <typename T>
class ValueFn {
public:
    using Fn = std::function<T(std::int32_t, std::int32_t, std::int32_t)>;

    ValueFn() = default;

    static ValueFn constant(T v) {
        ValueFn f;
        f.constant_ = v;
        return f;
    }

    ValueFn(Fn fn) : fn_(std::move(fn)) {}

    T operator()(std::int32_t x, std::int32_t y, std::int32_t z) const {
        return fn_ ? fn_(x, y, z) : constant_;
    }

    bool is_constant() const { return !fn_; }

    T constant_value() const {
        if (fn_) throw std::logic_error("value function is not a constant");
        return constant_;
    }

private:
    T constant_{};
    Fn fn_;
};

/// A component: id, bounding box, and the value function defined on the box.
/// The value function is never evaluated outside the box.
template <typename T>
struct Component {
    std::uint32_t id = 0;
    Aabb box;
    ValueFn<T> value;
};

// --- combine operators ------------------------------------------------------

enum class CombineKind { Sum, Max };

inline const char* combine_name(CombineKind k) {
    return k == CombineKind::Sum ? "sum" : "max";
}

inline CombineKind parse_combine_kind(const std::string& s) {
    if (s == "sum") return CombineKind::Sum;
    if (s == "max") return CombineKind::Max;
    throw std::invalid_argument("unknown combine op: " + s);
}

/// Sum with identity 0. Unsigned integer scalars saturate at the type
/// maximum instead of wrapping, which keeps the operation associative and
/// commutative; float addition is the plain IEEE operation.
template <typename T>
struct SumOp {
    static constexpr T identity() { return T{0}; }
    static T apply(T a, T b) {
        if constexpr (std::is_floating_point_v<T>) {
            return a + b;
        } else {
            const std::uint64_t s =
                static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b);
            constexpr std::uint64_t cap = std::numeric_limits<T>::max();
            return static_cast<T>(s < cap ? s : cap);
        }
    }
};

/// Max with the true identity of the scalar's order: 0 for unsigned
/// integers, -infinity for float (so max(identity, x) == x for every
/// representable x, including negative ones).
template <typename T>
struct MaxOp {
    static constexpr T identity() {
        if constexpr (std::is_floating_point_v<T>)
            return -std::numeric_limits<T>::infinity();
        else
            return std::numeric_limits<T>::lowest();
    }
    static T apply(T a, T b) { return a < b ? b : a; }
};

/// Calls f with a default-constructed op tag for the runtime-selected kind.
template <typename T, typename F>
decltype(auto) dispatch_combine(CombineKind k, F&& f) {
    switch (k) {
    case CombineKind::Sum: return f(SumOp<T>{});
    case CombineKind::Max: return f(MaxOp<T>{});
    }
    throw std::invalid_argument("invalid combine kind");
}

/// Left fold of the op over the sequence, starting from the identity.
/// Empty input yields the identity.
template <typename Op, typename T>
T combine_all(Op, std::span<const T> values) {
    T acc = Op::identity();
    for (const T& v : values) acc = Op::apply(acc, v);
    return acc;
}

// --- sweep occupancy statistics ---------------------------------------------

/// Per-slice and (optionally) per-line counts of simultaneously active
/// component boxes. per_slice_active[z] counts boxes with lo_z <= z <= hi_z;
/// per_line_active[z*dy + y] additionally restricts to lo_y <= y <= hi_y.
struct SweepStats {
    std::vector<std::uint32_t> per_slice_active;
    std::vector<std::uint32_t> per_line_active;

    bool has_per_line_counts() const { return !per_line_active.empty(); }
};

/// Occupancy of a box set, computed directly via difference arrays.
inline SweepStats compute_sweep_stats(std::span<const Aabb> boxes,
                                      const VoxelGrid& grid, bool per_line) {
    SweepStats stats;
    std::vector<std::int64_t> diff(static_cast<std::size_t>(grid.dz) + 1, 0);
    for (const Aabb& b : boxes) {
        diff[static_cast<std::size_t>(b.lo_z)] += 1;
        diff[static_cast<std::size_t>(b.hi_z) + 1] -= 1;
    }
    stats.per_slice_active.resize(static_cast<std::size_t>(grid.dz));
    std::int64_t run = 0;
    for (std::int32_t z = 0; z < grid.dz; ++z) {
        run += diff[static_cast<std::size_t>(z)];
        stats.per_slice_active[static_cast<std::size_t>(z)] =
            static_cast<std::uint32_t>(run);
    }

    if (per_line) {
        stats.per_line_active.assign(grid.line_count(), 0);
        std::vector<std::int64_t> ydiff(static_cast<std::size_t>(grid.dy) + 1);
        for (std::int32_t z = 0; z < grid.dz; ++z) {
            std::fill(ydiff.begin(), ydiff.end(), 0);
            for (const Aabb& b : boxes) {
                if (b.lo_z <= z && z <= b.hi_z) {
                    ydiff[static_cast<std::size_t>(b.lo_y)] += 1;
                    ydiff[static_cast<std::size_t>(b.hi_y) + 1] -= 1;
                }
            }
            std::int64_t yrun = 0;
            for (std::int32_t y = 0; y < grid.dy; ++y) {
                yrun += ydiff[static_cast<std::size_t>(y)];
                stats.per_line_active[static_cast<std::uint64_t>(z) * grid.dy +
                                      y] = static_cast<std::uint32_t>(yrun);
            }
        }
    }
    return stats;
}

} // namespace voxgen
