#include "sitewalk/nav_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

#include "sitewalk/errors.hpp"

namespace sitewalk {

NavGrid::NavGrid(Point2 origin, double cellSize, int width, int height,
                 std::vector<std::uint8_t> walkable) :
    mOrigin(origin),
    mCellSize(cellSize),
    mWidth(width),
    mHeight(height),
    mWalkable(std::move(walkable))
{
    if (!(cellSize > 0.0))
        throw ResolutionError("cell size must be positive");
    if (width <= 0 || height <= 0)
        throw ResolutionError("grid must have at least one cell");
    if (mWalkable.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw ResolutionError("occupancy size does not match grid dimensions");
}

Point2 NavGrid::center(Cell c) const
{
    return { mOrigin.x + (static_cast<double>(c.x) + 0.5) * mCellSize,
             mOrigin.y + (static_cast<double>(c.y) + 0.5) * mCellSize };
}

std::optional<Cell> NavGrid::cell_of(Point2 p) const
{
    const double fx = (p.x - mOrigin.x) / mCellSize;
    const double fy = (p.y - mOrigin.y) / mCellSize;
    if (!std::isfinite(fx) || !std::isfinite(fy))
        return std::nullopt;

    constexpr double slack = 1e-9;
    if (fx < -slack || fy < -slack || fx > mWidth + slack || fy > mHeight + slack)
        return std::nullopt;

    Cell c { static_cast<int>(std::floor(fx)), static_cast<int>(std::floor(fy)) };
    c.x = std::clamp(c.x, 0, mWidth - 1);
    c.y = std::clamp(c.y, 0, mHeight - 1);
    return c;
}

std::size_t NavGrid::walkable_count() const
{
    std::size_t n = 0;
    for (std::uint8_t w : mWalkable)
        n += w != 0;
    return n;
}

NavGrid build_nav_grid(const WalkableRegion& region, double cellSize)
{
    if (!(cellSize > 0.0))
        throw ResolutionError("cell size must be positive");

    const Box2& bounds = region.bounds();
    const double nx = std::ceil(bounds.width() / cellSize - 1e-9);
    const double ny = std::ceil(bounds.height() / cellSize - 1e-9);
    if (!(nx * ny <= kMaxGridCells))
        throw ResolutionError("grid of " + std::to_string(nx) + " x " + std::to_string(ny) +
                              " cells exceeds the cell limit");

    const int width = std::max(1, static_cast<int>(nx));
    const int height = std::max(1, static_cast<int>(ny));
    std::vector<std::uint8_t> walkable(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);

    NavGrid probe(bounds.min, cellSize, width, height, walkable);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            walkable[probe.index({ x, y })] = region.contains(probe.center({ x, y })) ? 1 : 0;

    return NavGrid(bounds.min, cellSize, width, height, std::move(walkable));
}

double GridCost::cells() const
{
    return static_cast<double>(straight) + static_cast<double>(diagonal) * std::numbers::sqrt2;
}

std::strong_ordering operator<=>(GridCost a, GridCost b)
{
    // a - b = ds + dd * sqrt(2); decide its sign without rounding.
    const std::int64_t ds = a.straight - b.straight;
    const std::int64_t dd = a.diagonal - b.diagonal;
    if (ds == 0 && dd == 0)
        return std::strong_ordering::equal;
    if (ds >= 0 && dd >= 0)
        return std::strong_ordering::greater;
    if (ds <= 0 && dd <= 0)
        return std::strong_ordering::less;

    // Opposite signs: compare ds^2 against 2 dd^2.
    const auto lhs = static_cast<__int128>(ds) * ds;
    const auto rhs = 2 * static_cast<__int128>(dd) * dd;
    if (ds > 0)
        return lhs > rhs ? std::strong_ordering::greater : std::strong_ordering::less;
    return lhs > rhs ? std::strong_ordering::less : std::strong_ordering::greater;
}

GridCost octile_distance(Cell a, Cell b)
{
    const std::int64_t dx = std::abs(a.x - b.x);
    const std::int64_t dy = std::abs(a.y - b.y);
    const std::int64_t diag = std::min(dx, dy);
    return { std::max(dx, dy) - diag, diag };
}

} // namespace sitewalk
