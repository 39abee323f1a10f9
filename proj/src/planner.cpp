#include "sitewalk/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <fstream>
#include <queue>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sitewalk/errors.hpp"

namespace sitewalk {

std::vector<Drp> parse_drps(std::string_view document)
{
    std::vector<Drp> out;
    try {
        const auto doc = nlohmann::json::parse(document);
        if (!doc.is_array())
            throw ParseError("DRP list must be a JSON array");
        for (const auto& j : doc)
            out.push_back({ j.at("id").get<std::string>(), { j.at("x").get<double>(), j.at("y").get<double>() } });
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("DRP list: ") + e.what());
    }
    return out;
}

std::vector<Drp> load_drps_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return parse_drps(s.str());
}

Point2 snap_to_walkable(const NavGrid& grid, Point2 p, std::string_view subject, double snapRadius)
{
    if (const auto c = grid.cell_of(p); c && grid.walkable(*c))
        return p;

    const double cs = grid.cell_size();
    const int cx = static_cast<int>(std::floor((p.x - grid.origin().x) / cs));
    const int cy = static_cast<int>(std::floor((p.y - grid.origin().y) / cs));
    const int reach = static_cast<int>(std::ceil(snapRadius / cs)) + 1;

    std::optional<Point2> best;
    double bestDist = std::numeric_limits<double>::infinity();
    for (int y = cy - reach; y <= cy + reach; ++y)
        for (int x = cx - reach; x <= cx + reach; ++x) {
            if (!grid.walkable({ x, y }))
                continue;
            const Point2 center = grid.center({ x, y });
            const double d = distance(p, center);
            // Row-major scan order makes ties deterministic.
            if (d <= snapRadius && d < bestDist) {
                bestDist = d;
                best = center;
            }
        }

    if (!best)
        throw NoPathError(std::string(subject), "no walkable cell within snap radius");
    return *best;
}

namespace {

constexpr GridCost kZero {};

struct OpenEntry
{
    GridCost f;
    GridCost g;
    std::size_t index;
};

/* Min-heap order on f, deeper g first on ties, then cell index */
struct OpenLater
{
    bool operator()(const OpenEntry& a, const OpenEntry& b) const
    {
        if (const auto c = a.f <=> b.f; c != 0)
            return c > 0;
        if (const auto c = a.g <=> b.g; c != 0)
            return c < 0;
        return a.index > b.index;
    }
};

} // namespace

std::optional<GridPath> grid_shortest_path(const NavGrid& grid, Cell start, Cell goal)
{
    if (!grid.walkable(start) || !grid.walkable(goal))
        return std::nullopt;

    const std::size_t n = grid.cell_count();
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<GridCost> g(n);
    std::vector<std::uint8_t> seen(n, 0);
    std::vector<std::uint8_t> closed(n, 0);
    std::vector<std::size_t> parent(n, kNone);

    std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenLater> open;
    const std::size_t s = grid.index(start);
    const std::size_t t = grid.index(goal);
    g[s] = kZero;
    seen[s] = 1;
    open.push({ octile_distance(start, goal), kZero, s });

    while (!open.empty()) {
        const OpenEntry top = open.top();
        open.pop();
        if (closed[top.index] || top.g != g[top.index])
            continue;
        closed[top.index] = 1;
        if (top.index == t)
            break;

        const Cell c = grid.cell_at(top.index);
        for_each_neighbor(grid, c, [&](Cell nb, GridCost step) {
            const std::size_t ni = grid.index(nb);
            if (closed[ni])
                return;
            const GridCost candidate = top.g + step;
            if (!seen[ni] || candidate < g[ni]) {
                seen[ni] = 1;
                g[ni] = candidate;
                parent[ni] = top.index;
                open.push({ candidate + octile_distance(nb, goal), candidate, ni });
            }
        });
    }

    if (!closed[t])
        return std::nullopt;

    GridPath result;
    result.cost = g[t];
    for (std::size_t i = t; i != kNone; i = parent[i])
        result.cells.push_back(grid.cell_at(i));
    std::reverse(result.cells.begin(), result.cells.end());
    return result;
}

std::vector<std::optional<GridCost>> grid_distances(const NavGrid& grid, Cell source)
{
    std::vector<std::optional<GridCost>> dist(grid.cell_count());
    if (!grid.walkable(source))
        return dist;

    std::vector<std::uint8_t> closed(grid.cell_count(), 0);
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenLater> open;
    const std::size_t s = grid.index(source);
    dist[s] = kZero;
    open.push({ kZero, kZero, s });

    while (!open.empty()) {
        const OpenEntry top = open.top();
        open.pop();
        if (closed[top.index])
            continue;
        closed[top.index] = 1;

        for_each_neighbor(grid, grid.cell_at(top.index), [&](Cell nb, GridCost step) {
            const std::size_t ni = grid.index(nb);
            if (closed[ni])
                return;
            const GridCost candidate = top.g + step;
            if (!dist[ni] || candidate < *dist[ni]) {
                dist[ni] = candidate;
                open.push({ candidate, candidate, ni });
            }
        });
    }
    return dist;
}

bool line_of_sight(const NavGrid& grid, Point2 a, Point2 b)
{
    const auto ca = grid.cell_of(a);
    const auto cb = grid.cell_of(b);
    if (!ca || !cb || !grid.walkable(*ca) || !grid.walkable(*cb))
        return false;

    const double cs = grid.cell_size();
    const double fx = (a.x - grid.origin().x) / cs;
    const double fy = (a.y - grid.origin().y) / cs;
    const double dx = (b.x - a.x) / cs;
    const double dy = (b.y - a.y) / cs;

    Cell c = *ca;
    const int stepX = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
    const int stepY = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double tDeltaX = stepX != 0 ? 1.0 / std::abs(dx) : inf;
    const double tDeltaY = stepY != 0 ? 1.0 / std::abs(dy) : inf;
    double tMaxX = stepX > 0 ? (c.x + 1 - fx) * tDeltaX : (stepX < 0 ? (fx - c.x) * tDeltaX : inf);
    double tMaxY = stepY > 0 ? (c.y + 1 - fy) * tDeltaY : (stepY < 0 ? (fy - c.y) * tDeltaY : inf);

    const int budget = std::abs(cb->x - ca->x) + std::abs(cb->y - ca->y);
    constexpr double kCornerEps = 1e-12;
    for (int moved = 0; moved < budget && c != *cb;) {
        if (std::abs(tMaxX - tMaxY) <= kCornerEps) {
            if (!grid.walkable({ c.x + stepX, c.y }) || !grid.walkable({ c.x, c.y + stepY }))
                return false;
            c.x += stepX;
            c.y += stepY;
            tMaxX += tDeltaX;
            tMaxY += tDeltaY;
            moved += 2;
        } else if (tMaxX < tMaxY) {
            c.x += stepX;
            tMaxX += tDeltaX;
            ++moved;
        } else {
            c.y += stepY;
            tMaxY += tDeltaY;
            ++moved;
        }
        if (!grid.walkable(c))
            return false;
    }
    return true;
}

double polyline_length(std::span<const Point2> points)
{
    double total = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        total += distance(points[i - 1], points[i]);
    return total;
}

namespace {

std::vector<Point2> dedupe(std::vector<Point2> pts)
{
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

std::vector<Point2> string_pull(const NavGrid& grid, const std::vector<Point2>& raw)
{
    if (raw.size() <= 2)
        return raw;

    std::vector<Point2> out { raw.front() };
    std::size_t i = 0;
    const std::size_t last = raw.size() - 1;
    while (i < last) {
        std::size_t j = i + 1;
        while (j < last && line_of_sight(grid, raw[i], raw[j + 1]))
            ++j;
        out.push_back(raw[j]);
        i = j;
    }
    return out;
}

} // namespace

PlannedPath plan_path(const NavGrid& grid, Point2 start, Point2 goal)
{
    const Point2 s = snap_to_walkable(grid, start, "start");
    const Point2 t = snap_to_walkable(grid, goal, "goal");

    PlannedPath result;
    if (s == t) {
        result.path = { { s }, 0.0 };
        result.raw = result.path;
        return result;
    }

    const Cell sc = *grid.cell_of(s);
    const Cell tc = *grid.cell_of(t);
    const auto gp = grid_shortest_path(grid, sc, tc);
    if (!gp)
        throw NoPathError("goal", "goal is not reachable from start");
    result.grid_cost = gp->cost;

    std::vector<Point2> raw { s };
    for (std::size_t k = 1; k + 1 < gp->cells.size(); ++k)
        raw.push_back(grid.center(gp->cells[k]));
    raw.push_back(t);
    raw = dedupe(std::move(raw));

    result.raw = { raw, polyline_length(raw) };
    auto pulled = string_pull(grid, raw);
    result.path = { pulled, polyline_length(pulled) };
    return result;
}

std::vector<Drp> order_drps_greedy(const NavGrid& grid, Point2 robotPosition, std::span<const Drp> drps)
{
    const Point2 start = snap_to_walkable(grid, robotPosition, "robot");

    std::vector<Drp> pending;
    std::vector<Cell> cells;
    for (const Drp& d : drps) {
        const Point2 p = snap_to_walkable(grid, d.position, d.id);
        pending.push_back({ d.id, p });
        cells.push_back(*grid.cell_of(p));
    }

    std::vector<std::size_t> remaining(pending.size());
    std::iota(remaining.begin(), remaining.end(), 0);

    std::vector<Drp> order;
    Cell current = *grid.cell_of(start);
    bool first = true;
    while (!remaining.empty()) {
        const auto dist = grid_distances(grid, current);
        if (first) {
            for (std::size_t k : remaining)
                if (!dist[grid.index(cells[k])])
                    throw NoPathError(pending[k].id, "DRP is not reachable from the robot");
            first = false;
        }

        auto best = remaining.begin();
        for (auto it = remaining.begin(); it != remaining.end(); ++it) {
            const GridCost& c = *dist[grid.index(cells[*it])];
            const GridCost& b = *dist[grid.index(cells[*best])];
            if (const auto cmp = c <=> b; cmp < 0 || (cmp == 0 && pending[*it].id < pending[*best].id))
                best = it;
        }
        order.push_back(pending[*best]);
        current = cells[*best];
        remaining.erase(best);
    }
    return order;
}

Mission compose_mission(const NavGrid& grid, const Pose2D& robotPose, std::span<const Drp> drps,
                        const MissionOptions& options)
{
    Mission mission;
    mission.mission_id = options.mission_id;
    mission.created_at = options.created_at;
    mission.speed = options.speed;
    mission.dwell_per_drp = options.dwell_per_drp;

    const Point2 start = snap_to_walkable(grid, robotPose.position(), "robot");
    mission.waypoints.push_back({ start, false, std::nullopt });

    Point2 current = start;
    for (const Drp& drp : order_drps_greedy(grid, start, drps)) {
        const Path leg = shortest_path(grid, current, drp.position);
        for (std::size_t k = 1; k < leg.waypoints.size(); ++k)
            mission.waypoints.push_back({ leg.waypoints[k], false, std::nullopt });
        if (leg.waypoints.size() == 1)
            mission.waypoints.push_back({ drp.position, false, std::nullopt });
        mission.waypoints.back().is_drp = true;
        mission.waypoints.back().drp_id = drp.id;
        current = drp.position;
    }
    return mission;
}

} // namespace sitewalk
