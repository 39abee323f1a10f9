#include "sitewalk/geometry.hpp"

#include <algorithm>
#include <limits>

namespace sitewalk {

double signed_area(std::span<const Point2> ring)
{
    const std::size_t n = ring.size();
    if (n < 3)
        return 0.0;

    double twice = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = ring[i];
        const Point2& b = ring[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

Box2 bounding_box(std::span<const Point2> ring)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    Box2 box { { inf, inf }, { -inf, -inf } };
    for (const Point2& p : ring) {
        box.min.x = std::min(box.min.x, p.x);
        box.min.y = std::min(box.min.y, p.y);
        box.max.x = std::max(box.max.x, p.x);
        box.max.y = std::max(box.max.y, p.y);
    }
    return box;
}

bool point_in_polygon(Point2 p, std::span<const Point2> ring)
{
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2& a = ring[i];
        const Point2& b = ring[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xCross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < xCross)
                inside = !inside;
        }
    }
    return inside;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b)
{
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0)
        return distance(p, a);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + t * ab);
}

double distance_to_boundary(Point2 p, std::span<const Point2> ring)
{
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i)
        best = std::min(best, point_segment_distance(p, ring[i], ring[(i + 1) % n]));
    return best;
}

namespace {

int orientation(Point2 a, Point2 b, Point2 c)
{
    const double v = cross(b - a, c - a);
    if (v > 0.0)
        return 1;
    if (v < 0.0)
        return -1;
    return 0;
}

bool on_segment(Point2 a, Point2 b, Point2 p)
{
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

} // namespace

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d)
{
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);

    if (o1 != o2 && o3 != o4)
        return true;

    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

bool segment_hits_polygon(Point2 a, Point2 b, std::span<const Point2> ring)
{
    if (point_in_polygon(a, ring) || point_in_polygon(b, ring))
        return true;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i)
        if (segments_intersect(a, b, ring[i], ring[(i + 1) % n]))
            return true;
    return false;
}

bool is_simple(std::span<const Point2> ring)
{
    const std::size_t n = ring.size();
    if (n < 3)
        return false;

    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = ring[i];
        const Point2 b = ring[(i + 1) % n];
        if (a == b)
            return false;

        for (std::size_t j = i + 1; j < n; ++j) {
            const Point2 c = ring[j];
            const Point2 d = ring[(j + 1) % n];
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (!adjacent) {
                if (segments_intersect(a, b, c, d))
                    return false;
                continue;
            }
            // Adjacent edges may only meet at their shared vertex: reject a
            // fold-back where the edges overlap collinearly.
            const Point2 shared = (j == i + 1) ? b : a;
            const Point2 u = (j == i + 1) ? a : b;
            const Point2 w = (j == i + 1) ? d : c;
            if (cross(u - shared, w - shared) == 0.0 && dot(u - shared, w - shared) > 0.0)
                return false;
        }
    }
    return true;
}

} // namespace sitewalk
