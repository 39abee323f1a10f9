#ifndef SITEWALK_TESTS_ORACLES_HPP
#define SITEWALK_TESTS_ORACLES_HPP

// Test-only reference computations. Nothing here calls into the code paths
// it is used to check: the Dijkstra works on a plain occupancy vector with its
// own cost arithmetic, the rasterizer re-derives walkability from rectangle
// distances, and PNG decoding goes through libpng's reader.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#ifndef SITEWALK_FIXTURE_DIR
#error "SITEWALK_FIXTURE_DIR must point at the fixtures directory"
#endif

namespace oracle {

inline std::string fixture_path(const std::string& name)
{
    return std::string(SITEWALK_FIXTURE_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/* Path cost a + b*sqrt(2) as an (a, b) pair; ordering decided with integers */
struct Cost
{
    long long a = 0;
    long long b = 0;
};

inline bool less(const Cost& p, const Cost& q)
{
    // sign of (p.a - q.a) + (p.b - q.b) * sqrt(2)
    const long long da = p.a - q.a;
    const long long db = p.b - q.b;
    const __int128 a2 = static_cast<__int128>(da) * da;
    const __int128 b2 = 2 * static_cast<__int128>(db) * db;
    if (da <= 0 && db <= 0)
        return da != 0 || db != 0;
    if (da >= 0 && db >= 0)
        return false;
    if (da < 0)
        return a2 > b2;
    return a2 < b2;
}

inline bool equal(const Cost& p, const Cost& q) { return p.a == q.a && p.b == q.b; }

/*
 * Textbook Dijkstra over an 8-connected occupancy grid (row-major, 1 =
 * free). Diagonal steps need both orthogonal neighbours free.
 */
inline std::vector<std::optional<Cost>> dijkstra(const std::vector<std::uint8_t>& free, int w, int h, int sx, int sy)
{
    const int n = w * h;
    std::vector<std::optional<Cost>> dist(n);
    std::vector<bool> done(n, false);
    auto ok = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && free[y * w + x]; };
    if (!ok(sx, sy))
        return dist;
    dist[sy * w + sx] = Cost {};

    using Entry = std::pair<Cost, int>;
    auto later = [](const Entry& x, const Entry& y) { return less(y.first, x.first); };
    std::priority_queue<Entry, std::vector<Entry>, decltype(later)> heap(later);
    heap.push({ Cost {}, sy * w + sx });
    while (!heap.empty()) {
        const int u = heap.top().second;
        heap.pop();
        if (done[u])
            continue;
        done[u] = true;
        const int ux = u % w, uy = u / w;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0)
                    continue;
                const int vx = ux + dx, vy = uy + dy;
                if (!ok(vx, vy))
                    continue;
                const bool diag = dx != 0 && dy != 0;
                if (diag && (!ok(ux + dx, uy) || !ok(ux, uy + dy)))
                    continue;
                const int v = vy * w + vx;
                if (done[v])
                    continue;
                Cost c = *dist[u];
                if (diag)
                    ++c.b;
                else
                    ++c.a;
                if (!dist[v] || less(c, *dist[v])) {
                    dist[v] = c;
                    heap.push({ c, v });
                }
            }
    }
    return dist;
}

struct Rect
{
    double x0, y0, x1, y1;
};

inline double rect_distance(double px, double py, const Rect& r)
{
    const double dx = std::max({ r.x0 - px, 0.0, px - r.x1 });
    const double dy = std::max({ r.y0 - py, 0.0, py - r.y1 });
    return std::hypot(dx, dy);
}

/* Walkable iff inside some floor rect and farther than radius from every obstacle rect */
inline bool rect_walkable(double px, double py, const std::vector<Rect>& floors,
                          const std::vector<Rect>& obstacles, double radius)
{
    bool onFloor = false;
    for (const Rect& f : floors)
        onFloor = onFloor || (px > f.x0 && px < f.x1 && py > f.y0 && py < f.y1);
    if (!onFloor)
        return false;
    for (const Rect& o : obstacles)
        if (!(rect_distance(px, py, o) > radius))
            return false;
    return true;
}

/* Liang-Barsky clip of segment (ax,ay)-(bx,by) against a closed rectangle */
inline bool segment_hits_rect(double ax, double ay, double bx, double by, const Rect& r)
{
    double t0 = 0.0, t1 = 1.0;
    const double dx = bx - ax, dy = by - ay;
    const double p[4] = { -dx, dx, -dy, dy };
    const double q[4] = { ax - r.x0, r.x1 - ax, ay - r.y0, r.y1 - ay };
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0)
                return false;
            continue;
        }
        const double t = q[i] / p[i];
        if (p[i] < 0.0)
            t0 = std::max(t0, t);
        else
            t1 = std::min(t1, t);
        if (t0 > t1)
            return false;
    }
    return true;
}

/* 4-connected flood fill; returns component labels (-1 blocked) */
inline std::vector<int> flood_fill(const std::vector<std::uint8_t>& free, int w, int h)
{
    std::vector<int> label(free.size(), -1);
    int next = 0;
    for (int start = 0; start < w * h; ++start) {
        if (!free[start] || label[start] != -1)
            continue;
        std::queue<int> q;
        q.push(start);
        label[start] = next;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            const int ux = u % w, uy = u / w;
            const int nb[4][2] = { { 1, 0 }, { -1, 0 }, { 0, 1 }, { 0, -1 } };
            for (const auto& d : nb) {
                const int vx = ux + d[0], vy = uy + d[1];
                if (vx < 0 || vy < 0 || vx >= w || vy >= h)
                    continue;
                const int v = vy * w + vx;
                if (free[v] && label[v] == -1) {
                    label[v] = next;
                    q.push(v);
                }
            }
        }
        ++next;
    }
    return label;
}

struct DecodedImage
{
    bool ok = false;
    unsigned width = 0;
    unsigned height = 0;
    std::vector<std::uint8_t> rgb;
};

inline DecodedImage decode_png(const std::vector<std::uint8_t>& bytes)
{
    DecodedImage out;
    png_image image {};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        return out;
    image.format = PNG_FORMAT_RGB;
    out.rgb.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
        png_image_free(&image);
        return out;
    }
    out.ok = true;
    out.width = image.width;
    out.height = image.height;
    return out;
}

/* Shortest open tour from a start over all points given a distance function */
template <typename Dist>
double brute_force_tour(int count, Dist&& dist)
{
    std::vector<int> order(count);
    std::iota(order.begin(), order.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = dist(-1, order[0]);
        for (int k = 1; k < count; ++k)
            total += dist(order[k - 1], order[k]);
        best = std::min(best, total);
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
}

/*
 * Nearest-first order given a full cost table. `fromStart[k]` is the cost
 * from the start, `between[i][k]` between points; ties go to the smaller key.
 * Returns indices in visiting order.
 */
template <typename C, typename Less, typename Key>
std::vector<int> greedy_order(const std::vector<C>& fromStart, const std::vector<std::vector<C>>& between,
                              Less&& lessThan, Key&& key)
{
    const int n = static_cast<int>(fromStart.size());
    std::vector<bool> used(n, false);
    std::vector<int> order;
    int current = -1;
    for (int step = 0; step < n; ++step) {
        int best = -1;
        for (int k = 0; k < n; ++k) {
            if (used[k])
                continue;
            if (best < 0) {
                best = k;
                continue;
            }
            const C& ck = current < 0 ? fromStart[k] : between[current][k];
            const C& cb = current < 0 ? fromStart[best] : between[current][best];
            if (lessThan(ck, cb) || (!lessThan(cb, ck) && key(k) < key(best)))
                best = k;
        }
        used[best] = true;
        order.push_back(best);
        current = best;
    }
    return order;
}

} // namespace oracle

#endif // SITEWALK_TESTS_ORACLES_HPP
