#ifndef SITEWALK_NAV_GRID_HPP
#define SITEWALK_NAV_GRID_HPP

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "sitewalk/building_model.hpp"
#include "sitewalk/geometry.hpp"

namespace sitewalk {

struct Cell
{
    int x = 0;
    int y = 0;

    friend constexpr bool operator==(Cell, Cell) = default;
    friend constexpr auto operator<=>(Cell, Cell) = default;
};

/*
 * Occupancy grid over the walkable region. A cell is walkable iff its
 * center lies in the region.
 */
class NavGrid
{
public:
    NavGrid(Point2 origin, double cellSize, int width, int height,
            std::vector<std::uint8_t> walkable);

    Point2 origin() const { return mOrigin; }
    double cell_size() const { return mCellSize; }
    int width() const { return mWidth; }
    int height() const { return mHeight; }
    std::size_t cell_count() const { return mWalkable.size(); }

    bool in_range(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < mWidth && c.y < mHeight; }
    bool walkable(Cell c) const { return in_range(c) && mWalkable[index(c)] != 0; }
    std::size_t index(Cell c) const
    {
        return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(mWidth) + static_cast<std::size_t>(c.x);
    }
    Cell cell_at(std::size_t index) const
    {
        return { static_cast<int>(index % static_cast<std::size_t>(mWidth)),
                 static_cast<int>(index / static_cast<std::size_t>(mWidth)) };
    }

    Point2 center(Cell c) const;
    /* Cell containing p, if p is inside the grid extent */
    std::optional<Cell> cell_of(Point2 p) const;

    std::size_t walkable_count() const;

private:
    Point2 mOrigin;
    double mCellSize;
    int mWidth;
    int mHeight;
    std::vector<std::uint8_t> mWalkable;
};

constexpr double kDefaultCellSize = 0.1;
constexpr double kMaxGridCells = 1e7;

/* Rasterize the region onto a grid anchored at its bounding box.
 * Throws ResolutionError beyond kMaxGridCells cells. */
NavGrid build_nav_grid(const WalkableRegion& region, double cellSize = kDefaultCellSize);

/*
 * Exact 8-connected path cost: `straight` unit steps plus `diagonal` steps of
 * length sqrt(2), in cells. Comparison is exact; two costs are equal iff their
 * step counts are equal, since sqrt(2) is irrational.
 */
struct GridCost
{
    std::int64_t straight = 0;
    std::int64_t diagonal = 0;

    double cells() const;
    double meters(double cellSize) const { return cells() * cellSize; }

    friend constexpr GridCost operator+(GridCost a, GridCost b)
    {
        return { a.straight + b.straight, a.diagonal + b.diagonal };
    }
    friend constexpr bool operator==(GridCost, GridCost) = default;
    friend std::strong_ordering operator<=>(GridCost a, GridCost b);
};

/* Admissible, consistent octile distance between two cells */
GridCost octile_distance(Cell a, Cell b);

} // namespace sitewalk

#endif // SITEWALK_NAV_GRID_HPP
