#ifndef SITEWALK_PLANNER_HPP
#define SITEWALK_PLANNER_HPP

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sitewalk/mission.hpp"
#include "sitewalk/nav_grid.hpp"
#include "sitewalk/pose.hpp"

namespace sitewalk {

/* Discrete reality point: a place where the robot takes a 360 capture */
struct Drp
{
    std::string id;
    Point2 position;

    friend bool operator==(const Drp&, const Drp&) = default;
};

struct Path
{
    std::vector<Point2> waypoints;
    double length = 0.0;
};

/* Cell sequence from start to goal and its exact step cost */
struct GridPath
{
    std::vector<Cell> cells;
    GridCost cost;
};

struct PlannedPath
{
    /* String-pulled polyline of corners */
    Path path;
    /* Start point, intermediate cell centers, goal point */
    Path raw;
    GridCost grid_cost;
};

/* DRP list document: [{"id","x","y"}, ...]. Throws ParseError */
std::vector<Drp> parse_drps(std::string_view document);
std::vector<Drp> load_drps_file(const std::string& path);

constexpr double kSnapRadius = 0.5;
constexpr double kDefaultSpeed = 0.4;
constexpr double kDefaultDwell = 20.667;

/*
 * Returns p when its cell is walkable, otherwise the nearest walkable cell
 * center within `snapRadius`. Throws NoPathError(subject) when none exists.
 */
Point2 snap_to_walkable(const NavGrid& grid, Point2 p, std::string_view subject,
                        double snapRadius = kSnapRadius);

/*
 * 8-connected neighbors of a walkable cell. Diagonal moves require both
 * orthogonally adjacent cells to be walkable, so paths never cut corners.
 */
template <typename Fn>
void for_each_neighbor(const NavGrid& grid, Cell c, Fn&& fn)
{
    static constexpr int kDx[] = { 1, -1, 0, 0, 1, 1, -1, -1 };
    static constexpr int kDy[] = { 0, 0, 1, -1, 1, -1, 1, -1 };
    for (int k = 0; k < 8; ++k) {
        const Cell n { c.x + kDx[k], c.y + kDy[k] };
        if (!grid.walkable(n))
            continue;
        const bool diagonal = k >= 4;
        if (diagonal && (!grid.walkable({ c.x + kDx[k], c.y }) || !grid.walkable({ c.x, c.y + kDy[k] })))
            continue;
        fn(n, diagonal ? GridCost { 0, 1 } : GridCost { 1, 0 });
    }
}

/* A* with the octile heuristic; nullopt when goal is unreachable */
std::optional<GridPath> grid_shortest_path(const NavGrid& grid, Cell start, Cell goal);

/* Single-source costs to every cell; nullopt for unreachable cells */
std::vector<std::optional<GridCost>> grid_distances(const NavGrid& grid, Cell source);

/* Every cell the closed segment ab passes through is walkable. Segments
 * through a cell corner require both side cells. */
bool line_of_sight(const NavGrid& grid, Point2 a, Point2 b);

/* Snaps both endpoints, runs A*, and string-pulls the result.
 * Throws NoPathError("start"/"goal") */
PlannedPath plan_path(const NavGrid& grid, Point2 start, Point2 goal);

inline Path shortest_path(const NavGrid& grid, Point2 start, Point2 goal)
{
    return plan_path(grid, start, goal).path;
}

double polyline_length(std::span<const Point2> points);

/*
 * Greedy visiting order: repeatedly take the unvisited DRP with the smallest
 * grid distance from the current position, breaking ties by id. Returned
 * DRPs carry snapped positions. Throws NoPathError naming the first
 * unreachable DRP.
 */
std::vector<Drp> order_drps_greedy(const NavGrid& grid, Point2 robotPosition, std::span<const Drp> drps);

struct MissionOptions
{
    std::string mission_id = "mission";
    std::string created_at = "1970-01-01T00:00:00Z";
    double speed = kDefaultSpeed;
    double dwell_per_drp = kDefaultDwell;
};

/* Robot position followed by the shortest paths robot -> DRP1 -> ... -> DRPn
 * in greedy order, DRP waypoints flagged */
Mission compose_mission(const NavGrid& grid, const Pose2D& robotPose, std::span<const Drp> drps,
                        const MissionOptions& options = {});

} // namespace sitewalk

#endif // SITEWALK_PLANNER_HPP
