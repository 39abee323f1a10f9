#ifndef SITEWALK_GEOMETRY_HPP
#define SITEWALK_GEOMETRY_HPP

#include <cmath>
#include <span>
#include <vector>

namespace sitewalk {

/* Point or free vector in the plane (meters) */
struct Point2
{
    double x = 0.0;
    double y = 0.0;

    friend constexpr Point2 operator+(Point2 a, Point2 b) { return { a.x + b.x, a.y + b.y }; }
    friend constexpr Point2 operator-(Point2 a, Point2 b) { return { a.x - b.x, a.y - b.y }; }
    friend constexpr Point2 operator*(double s, Point2 p) { return { s * p.x, s * p.y }; }
    friend constexpr bool operator==(Point2, Point2) = default;
};

inline double norm(Point2 v) { return std::hypot(v.x, v.y); }
inline double distance(Point2 a, Point2 b) { return norm(b - a); }
constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

/* Axis-aligned rectangle, min corner inclusive */
struct Box2
{
    Point2 min;
    Point2 max;

    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
    bool contains(Point2 p) const
    {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
    }
    Box2 inflated(double r) const { return { { min.x - r, min.y - r }, { max.x + r, max.y + r } }; }
    friend bool operator==(const Box2&, const Box2&) = default;
};

using Polygon = std::vector<Point2>;

/* Signed shoelace area, positive for counter-clockwise rings */
double signed_area(std::span<const Point2> ring);
inline double area(std::span<const Point2> ring) { return std::abs(signed_area(ring)); }

Box2 bounding_box(std::span<const Point2> ring);

/* Even-odd point-in-polygon test; points on the boundary may go either way */
bool point_in_polygon(Point2 p, std::span<const Point2> ring);

double point_segment_distance(Point2 p, Point2 a, Point2 b);

/* Distance from p to the polygon's boundary (0 on the boundary) */
double distance_to_boundary(Point2 p, std::span<const Point2> ring);

/* Closed-segment intersection, including touching and collinear overlap */
bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d);

/* True when segment ab touches the closed polygon (crosses an edge or lies inside) */
bool segment_hits_polygon(Point2 a, Point2 b, std::span<const Point2> ring);

/* Simple ring: no two non-adjacent edges intersect and adjacent edges only
 * share their common vertex */
bool is_simple(std::span<const Point2> ring);

} // namespace sitewalk

#endif // SITEWALK_GEOMETRY_HPP
