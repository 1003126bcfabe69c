#pragma once

// Synthetic numerosity scenes: 1..6 non-overlapping shapes on a square
// canvas, rendered as binary images. The count must carry no area signal,
// so every scene draws a total-foreground-area budget from a distribution
// independent of the count, splits it across objects (Dirichlet weights
// with optional extra per-object jitter), and derives object sizes from
// the split. Placement is rejection sampling with a best-of-k candidate
// rule and whole-scene restarts, capped at 10,000 position draws.
//
// Variant families share scene streams so that seed-matched datasets are
// comparable: color_swap/triangles/squares reuse the circle scenes
// exactly; larger50 reuses their sizes scaled by 1.5 and re-places;
// boundary_smaller50 keeps positions (shrinking preserves separation).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "holosub/errors.hpp"
#include "holosub/rng.hpp"

namespace holosub::data {

enum class Shape { Circle, Polygon };
enum class Fill { Solid, Outline };
enum class Polarity { WhiteOnBlack, BlackOnWhite };

struct ObjectSpec {
    Shape shape = Shape::Circle;
    int sides = 0;  // polygon only
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;  // circumradius in pixels
    double rotation = 0.0;
    Fill fill = Fill::Solid;
    double thickness = 2.0;  // outline only
};

struct SceneSpec {
    int count = 0;
    std::vector<ObjectSpec> objects;
    Polarity polarity = Polarity::WhiteOnBlack;
    int canvas = 0;  // square canvas side in pixels

    void validate() const {
        if (count < 1 || count > 6 ||
            objects.size() != static_cast<std::size_t>(count))
            throw ValidationError("SceneSpec: object list does not match count");
        for (const auto& o : objects) {
            if (o.radius < 2.0)
                throw ValidationError("SceneSpec: degenerate sub-2-px object");
            if (o.cx - o.radius < 2.0 || o.cy - o.radius < 2.0 ||
                o.cx + o.radius > canvas - 2.0 || o.cy + o.radius > canvas - 2.0)
                throw ValidationError("SceneSpec: object violates canvas margin");
        }
        for (std::size_t a = 0; a < objects.size(); ++a)
            for (std::size_t b = a + 1; b < objects.size(); ++b) {
                const double dx = objects[a].cx - objects[b].cx;
                const double dy = objects[a].cy - objects[b].cy;
                if (std::sqrt(dx * dx + dy * dy) <=
                    objects[a].radius + objects[b].radius + 2.0)
                    throw ValidationError("SceneSpec: bounding circles intersect");
            }
    }
};

struct ImageGray {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;  // row-major, strictly 0.0 or 1.0 here

    double at(int y, int x) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

enum class VariantId {
    TrainCircles,
    Larger50,
    Triangles,
    Squares,
    ColorSwap,
    WhiteRings,
    BoundaryPolygons,
    BoundaryLarger50,
    BoundarySmaller50,
};

inline const std::vector<std::pair<VariantId, std::string>>& variant_names() {
    static const std::vector<std::pair<VariantId, std::string>> names = {
        {VariantId::TrainCircles, "train_circles"},
        {VariantId::Larger50, "larger50"},
        {VariantId::Triangles, "triangles"},
        {VariantId::Squares, "squares"},
        {VariantId::ColorSwap, "color_swap"},
        {VariantId::WhiteRings, "white_rings"},
        {VariantId::BoundaryPolygons, "boundary_polygons"},
        {VariantId::BoundaryLarger50, "boundary_larger50"},
        {VariantId::BoundarySmaller50, "boundary_smaller50"},
    };
    return names;
}

inline std::string to_string(VariantId v) {
    for (const auto& [id, name] : variant_names())
        if (id == v) return name;
    throw ValidationError("unknown variant id");
}

inline VariantId variant_from(const std::string& name) {
    for (const auto& [id, name_] : variant_names())
        if (name_ == name) return id;
    throw ValidationError("unknown variant: " + name);
}

// Scene-generation family: which budget semantics and object style a
// variant draws from. Members of one family share scene streams.
enum class Family { Solid, Rings, Boundary };

inline Family family_of(VariantId v) {
    switch (v) {
        case VariantId::WhiteRings:
            return Family::Rings;
        case VariantId::BoundaryPolygons:
        case VariantId::BoundaryLarger50:
        case VariantId::BoundarySmaller50:
            return Family::Boundary;
        default:
            return Family::Solid;
    }
}

namespace geom {

inline double polygon_perimeter_coef(int sides) {
    // perimeter = coef * circumradius
    return 2.0 * sides * std::sin(std::numbers::pi / sides);
}

// Area of the band within distance w of a regular k-gon boundary: the
// outer offset region minus the inset hole. The hole vanishes once the
// apothem drops to w, which is what makes a plain perimeter*2w model
// overestimate small polygons.
inline double polygon_band_area(int sides, double r, double w) {
    const double poly = 0.5 * sides * r * r * std::sin(2.0 * std::numbers::pi / sides);
    const double perimeter = polygon_perimeter_coef(sides) * r;
    const double apothem = r * std::cos(std::numbers::pi / sides);
    const double outer = poly + perimeter * w + std::numbers::pi * w * w;
    if (apothem <= w) return outer;
    const double shrink = (apothem - w) / apothem;
    return outer - poly * shrink * shrink;
}

// Inverse of polygon_band_area in r by bisection on [lo, hi].
inline double polygon_radius_for_band_area(int sides, double area, double w,
                                           double lo, double hi) {
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (polygon_band_area(sides, mid, w) < area)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline std::vector<std::pair<double, double>> polygon_vertices(const ObjectSpec& o) {
    std::vector<std::pair<double, double>> v;
    v.reserve(static_cast<std::size_t>(o.sides));
    for (int i = 0; i < o.sides; ++i) {
        const double a = o.rotation + 2.0 * std::numbers::pi * i / o.sides;
        v.emplace_back(o.cx + o.radius * std::cos(a), o.cy + o.radius * std::sin(a));
    }
    return v;
}

inline bool point_in_object(const ObjectSpec& o, double px, double py) {
    const double dx = px - o.cx, dy = py - o.cy;
    if (o.shape == Shape::Circle)
        return dx * dx + dy * dy <= o.radius * o.radius;
    // Convex regular polygon: inside iff within every edge half-plane.
    const double apothem = o.radius * std::cos(std::numbers::pi / o.sides);
    for (int i = 0; i < o.sides; ++i) {
        const double a = o.rotation + std::numbers::pi * (2.0 * i + 1.0) / o.sides;
        if (dx * std::cos(a) + dy * std::sin(a) > apothem) return false;
    }
    return true;
}

inline double point_segment_distance(double px, double py, double x1, double y1,
                                     double x2, double y2) {
    const double vx = x2 - x1, vy = y2 - y1;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((px - x1) * vx + (py - y1) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (x1 + t * vx), dy = py - (y1 + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

inline double boundary_distance(const ObjectSpec& o, double px, double py) {
    if (o.shape == Shape::Circle) {
        const double d = std::hypot(px - o.cx, py - o.cy);
        return std::abs(d - o.radius);
    }
    const auto verts = polygon_vertices(o);
    double best = 1e300;
    for (std::size_t i = 0; i < verts.size(); ++i) {
        const auto& [x1, y1] = verts[i];
        const auto& [x2, y2] = verts[(i + 1) % verts.size()];
        best = std::min(best, point_segment_distance(px, py, x1, y1, x2, y2));
    }
    return best;
}

}  // namespace geom

// Budget and size policy for one (family, canvas) combination. The full
// profile is the 100x100 reference; other canvases scale the budget by
// area (solid fills) or linearly (outline widths).
struct SizePolicy {
    double budget_lo = 0.0;
    double budget_hi = 0.0;
    double radius_floor = 0.0;
    std::array<double, 6> radius_cap{};  // indexed by count-1

    static SizePolicy make(Family family, int canvas) {
        SizePolicy p;
        const double s = static_cast<double>(canvas);
        const double area_scale = (s * s) / 10000.0;
        const double lin_scale = s / 100.0;
        // Sub-reference canvases get a slightly leaner solid budget: the
        // scaled-up variant must still pack six objects after a 1.5x blowup.
        const double crowding = canvas < 100 ? 0.85 : 1.0;
        switch (family) {
            case Family::Solid:
                p.budget_lo = 900.0 * area_scale * crowding;
                p.budget_hi = 1800.0 * area_scale * crowding;
                p.radius_floor = 3.0;
                for (int n = 1; n <= 6; ++n)
                    p.radius_cap[n - 1] =
                        s * std::array{0.24, 0.175, 0.142, 0.125, 0.112, 0.103}[n - 1];
                break;
            case Family::Rings:
                // The floor keeps six minimal rings above the budget low end
                // so small canvases do not pick up a count-area signal.
                p.budget_lo = std::max(300.0 * lin_scale,
                                       6.0 * 4.0 * std::numbers::pi * 3.0 * 1.06);
                p.budget_hi = std::max(460.0 * lin_scale, p.budget_lo + 90.0);
                p.radius_floor = 3.0;
                for (int n = 1; n <= 6; ++n)
                    p.radius_cap[n - 1] =
                        s * std::array{0.44, 0.30, 0.24, 0.20, 0.17, 0.15}[n - 1];
                break;
            case Family::Boundary:
                p.budget_lo = 295.0 * lin_scale;
                p.budget_hi = 312.0 * lin_scale;
                p.radius_floor = 4.0;  // halves to the 2 px hard minimum
                for (int n = 1; n <= 6; ++n)
                    p.radius_cap[n - 1] =
                        s * std::array{0.31, 0.20, 0.16, 0.14, 0.12, 0.105}[n - 1];
                break;
        }
        return p;
    }
};

namespace detail {

inline std::vector<double> dirichlet5(int n, CounterRng& rng) {
    std::vector<double> g(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (double& x : g) {
        double prod_log = 0.0;
        for (int i = 0; i < 5; ++i) prod_log += std::log(rng.next_unit_open());
        x = -prod_log;
        sum += x;
    }
    for (double& x : g) x /= sum;
    return g;
}

// Splits `total` into per-object areas within [min_i, max_i], preserving
// the total exactly whenever it is achievable.
inline std::vector<double> bounded_split(double total, const std::vector<double>& mins,
                                         const std::vector<double>& maxs,
                                         const std::vector<double>& shares) {
    const std::size_t n = mins.size();
    double min_sum = 0.0, max_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        min_sum += mins[i];
        max_sum += maxs[i];
    }
    // Floors win over caps; infeasible floor/cap combinations surface later
    // as placement failures.
    total = std::max(total, min_sum);
    total = std::min(total, std::max(max_sum, min_sum));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = mins[i] + shares[i] * (total - min_sum);
    for (int iter = 0; iter < 16; ++iter) {
        double excess = 0.0, headroom = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (x[i] > maxs[i]) {
                excess += x[i] - maxs[i];
                x[i] = maxs[i];
            } else {
                headroom += maxs[i] - x[i];
            }
        }
        if (excess <= 1e-9 || headroom <= 0.0) break;
        for (std::size_t i = 0; i < n; ++i)
            if (x[i] < maxs[i]) x[i] += excess * (maxs[i] - x[i]) / headroom;
    }
    return x;
}

struct SizeDraw {
    std::vector<double> radii;
    std::vector<int> sides;  // boundary only, else empty
};

// Object sizes for one scene. Consumes a fixed number-free pattern of rng
// draws so seed-matched variants stay aligned.
inline SizeDraw draw_sizes(int n, Family family, const SizePolicy& policy,
                           double budget, CounterRng& rng) {
    SizeDraw out;
    std::vector<double> shares = dirichlet5(n, rng);
    std::vector<double> mins(static_cast<std::size_t>(n)),
        maxs(static_cast<std::size_t>(n));
    if (family == Family::Boundary) {
        out.sides.resize(static_cast<std::size_t>(n));
        for (auto& k : out.sides) k = 3 + static_cast<int>(rng.next_below(6));
        // Extra per-object size jitter, folded into the shares so the
        // scene total stays on budget.
        double sum = 0.0;
        for (double& s : shares) {
            s *= rng.next_range(0.7, 1.3);
            sum += s;
        }
        for (double& s : shares) s /= sum;
        const double w = 1.0;  // half of the 2 px outline thickness
        for (int i = 0; i < n; ++i) {
            const int k = out.sides[static_cast<std::size_t>(i)];
            mins[static_cast<std::size_t>(i)] =
                geom::polygon_band_area(k, policy.radius_floor, w);
            maxs[static_cast<std::size_t>(i)] =
                geom::polygon_band_area(k, policy.radius_cap[n - 1], w);
        }
        const auto areas = bounded_split(budget, mins, maxs, shares);
        out.radii.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int k = out.sides[static_cast<std::size_t>(i)];
            out.radii[static_cast<std::size_t>(i)] = geom::polygon_radius_for_band_area(
                k, areas[static_cast<std::size_t>(i)], w, policy.radius_floor,
                policy.radius_cap[n - 1]);
        }
        return out;
    }
    const bool rings = family == Family::Rings;
    for (int i = 0; i < n; ++i) {
        if (rings) {
            mins[static_cast<std::size_t>(i)] = 4.0 * std::numbers::pi * policy.radius_floor;
            maxs[static_cast<std::size_t>(i)] =
                4.0 * std::numbers::pi * policy.radius_cap[n - 1];
        } else {
            mins[static_cast<std::size_t>(i)] =
                std::numbers::pi * policy.radius_floor * policy.radius_floor;
            maxs[static_cast<std::size_t>(i)] =
                std::numbers::pi * policy.radius_cap[n - 1] * policy.radius_cap[n - 1];
        }
    }
    const auto areas = bounded_split(budget, mins, maxs, shares);
    out.radii.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double a = areas[static_cast<std::size_t>(i)];
        out.radii[static_cast<std::size_t>(i)] =
            rings ? a / (4.0 * std::numbers::pi) : std::sqrt(a / std::numbers::pi);
    }
    return out;
}

struct Placement {
    std::vector<std::pair<double, double>> centers;  // in radius-sorted order
};

constexpr int kMaxPlacementAttempts = 10000;

// Places radii (descending) with uniform candidate positions; among each
// batch of 8 candidates the valid one with the largest clearance wins.
// Returns nullopt when `attempts` hits the cap.
inline std::optional<Placement> place_objects(const std::vector<double>& radii,
                                              int canvas, CounterRng& rng,
                                              int& attempts) {
    Placement out;
    out.centers.clear();
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const double r = radii[i];
        const double lo = r + 2.0, hi = static_cast<double>(canvas) - r - 2.0;
        if (hi <= lo) return std::nullopt;  // cannot fit at all
        bool placed = false;
        for (int batch = 0; batch < 8 && !placed; ++batch) {
            double best_clear = -1.0;
            std::pair<double, double> best{0.0, 0.0};
            for (int c = 0; c < 8; ++c) {
                if (attempts >= kMaxPlacementAttempts) return std::nullopt;
                ++attempts;
                const double x = rng.next_range(lo, hi);
                const double y = rng.next_range(lo, hi);
                double clearance = 1e300;
                for (std::size_t j = 0; j < out.centers.size(); ++j) {
                    const double dx = x - out.centers[j].first;
                    const double dy = y - out.centers[j].second;
                    clearance = std::min(clearance,
                                         std::sqrt(dx * dx + dy * dy) -
                                             (r + radii[j] + 2.0));
                }
                if (clearance > 1e-9 && clearance > best_clear) {
                    best_clear = clearance;
                    best = {x, y};
                }
            }
            if (best_clear > 0.0) {
                out.centers.push_back(best);
                placed = true;
            }
        }
        if (!placed) return std::nullopt;
    }
    return out;
}

}  // namespace detail

// One scene of the given family drawn from `rng`. When `area_budget` is
// unset the budget is drawn uniformly from the policy range; dataset
// generation passes stratified budgets instead. `scale` multiplies sizes
// after the draw (the larger/smaller variants) and triggers re-placement
// for scale > 1.
inline SceneSpec gen_scene(int n, VariantId variant, int canvas, CounterRng rng,
                           std::optional<double> area_budget = std::nullopt) {
    if (n < 1 || n > 6) throw ValidationError("gen_scene: count must be in [1,6]");
    const Family family = family_of(variant);

    // The scaled variants are pure transforms of their base scene: sizes are
    // taken from the seed-matched base draw, multiplied, and (for upscaling)
    // re-placed with a fresh position stream.
    if (variant == VariantId::Larger50 || variant == VariantId::BoundaryLarger50 ||
        variant == VariantId::BoundarySmaller50) {
        const bool up = variant != VariantId::BoundarySmaller50;
        const double scale = up ? 1.5 : 0.5;
        const VariantId base_variant = variant == VariantId::Larger50
                                           ? VariantId::TrainCircles
                                           : VariantId::BoundaryPolygons;
        SceneSpec scene = gen_scene(n, base_variant, canvas, rng, area_budget);
        for (auto& o : scene.objects) o.radius *= scale;
        if (variant == VariantId::Larger50)
            for (auto& o : scene.objects) o.shape = Shape::Circle;
        if (up) {
            int attempts = 0;
            std::vector<double> radii;
            for (const auto& o : scene.objects) radii.push_back(o.radius);
            for (int restart = 0; restart < 400; ++restart) {
                CounterRng place_rng =
                    rng.fork(9000 + static_cast<std::uint64_t>(restart));
                const auto placement =
                    detail::place_objects(radii, canvas, place_rng, attempts);
                if (placement) {
                    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
                        scene.objects[i].cx = placement->centers[i].first;
                        scene.objects[i].cy = placement->centers[i].second;
                    }
                    scene.validate();
                    return scene;
                }
                if (attempts >= detail::kMaxPlacementAttempts) break;
            }
            throw PlacementFailure("gen_scene: cannot re-place scaled scene, count " +
                                   std::to_string(n) + ", variant " +
                                   to_string(variant));
        }
        // Shrinking preserves margins and separation; keep base positions.
        scene.validate();
        return scene;
    }

    const SizePolicy policy = SizePolicy::make(family, canvas);
    const double budget =
        area_budget ? *area_budget : rng.next_range(policy.budget_lo, policy.budget_hi);

    int attempts = 0;
    for (int restart = 0; restart < 400; ++restart) {
        CounterRng scene_rng = rng.fork(static_cast<std::uint64_t>(restart));
        detail::SizeDraw sizes = detail::draw_sizes(n, family, policy, budget, scene_rng);
        std::vector<double> rotations(static_cast<std::size_t>(n));
        for (double& rot : rotations)
            rot = scene_rng.next_range(0.0, 2.0 * std::numbers::pi);

        // Sort by descending radius; big objects place first.
        std::vector<std::size_t> order(sizes.radii.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return sizes.radii[a] > sizes.radii[b];
        });
        std::vector<double> sorted_radii;
        for (std::size_t i : order) sorted_radii.push_back(sizes.radii[i]);

        CounterRng place_rng = scene_rng.fork(77);
        const auto placement =
            detail::place_objects(sorted_radii, canvas, place_rng, attempts);
        if (!placement) {
            if (attempts >= detail::kMaxPlacementAttempts) break;
            continue;
        }

        SceneSpec scene;
        scene.count = n;
        scene.canvas = canvas;
        scene.polarity = variant == VariantId::ColorSwap ? Polarity::BlackOnWhite
                                                         : Polarity::WhiteOnBlack;
        for (std::size_t i = 0; i < order.size(); ++i) {
            ObjectSpec o;
            o.cx = placement->centers[i].first;
            o.cy = placement->centers[i].second;
            o.radius = sorted_radii[i];
            o.rotation = rotations[order[i]];
            switch (variant) {
                case VariantId::Triangles:
                    o.shape = Shape::Polygon;
                    o.sides = 3;
                    break;
                case VariantId::Squares:
                    o.shape = Shape::Polygon;
                    o.sides = 4;
                    break;
                case VariantId::BoundaryPolygons:
                    o.shape = Shape::Polygon;
                    o.sides = sizes.sides[order[i]];
                    o.fill = Fill::Outline;
                    break;
                case VariantId::WhiteRings:
                    o.shape = Shape::Circle;
                    o.fill = Fill::Outline;
                    break;
                default:
                    o.shape = Shape::Circle;
                    break;
            }
            scene.objects.push_back(o);
        }
        scene.validate();
        return scene;
    }
    throw PlacementFailure("gen_scene: no valid placement for count " +
                           std::to_string(n) + ", variant " + to_string(variant) +
                           ", canvas " + std::to_string(canvas));
}

// Pixel-center rasterization; strictly binary output.
inline ImageGray rasterize(const SceneSpec& scene) {
    ImageGray img;
    img.height = scene.canvas;
    img.width = scene.canvas;
    img.pixels.assign(static_cast<std::size_t>(scene.canvas) * scene.canvas, 0.0);
    for (int y = 0; y < scene.canvas; ++y) {
        for (int x = 0; x < scene.canvas; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            bool on = false;
            for (const auto& o : scene.objects) {
                const double dx = px - o.cx, dy = py - o.cy;
                const double bound = o.radius + o.thickness;
                if (dx * dx + dy * dy > bound * bound) continue;
                if (o.fill == Fill::Solid) {
                    on = geom::point_in_object(o, px, py);
                } else {
                    on = geom::boundary_distance(o, px, py) <= o.thickness / 2.0;
                }
                if (on) break;
            }
            const bool white = scene.polarity == Polarity::WhiteOnBlack ? on : !on;
            img.pixels[static_cast<std::size_t>(y) * scene.canvas + x] =
                white ? 1.0 : 0.0;
        }
    }
    return img;
}

inline double white_pixel_count(const ImageGray& img) {
    double s = 0.0;
    for (double v : img.pixels) s += v;
    return s;
}

// 8-connectivity component count of the foreground (values > 0.5 for
// white-on-black scenes; callers invert first for swapped polarity).
inline int count_components(const ImageGray& img, bool foreground_is_white = true) {
    const int h = img.height, w = img.width;
    std::vector<int> label(static_cast<std::size_t>(h) * w, 0);
    const auto fg = [&](int y, int x) {
        const double v = img.at(y, x);
        return foreground_is_white ? v > 0.5 : v < 0.5;
    };
    int components = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!fg(y, x) || label[static_cast<std::size_t>(y) * w + x]) continue;
            ++components;
            stack.push_back({y, x});
            label[static_cast<std::size_t>(y) * w + x] = components;
            while (!stack.empty()) {
                const auto [cy, cx] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int ny = cy + dy, nx = cx + dx;
                        if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
                        if (!fg(ny, nx) ||
                            label[static_cast<std::size_t>(ny) * w + nx])
                            continue;
                        label[static_cast<std::size_t>(ny) * w + nx] = components;
                        stack.push_back({ny, nx});
                    }
            }
        }
    return components;
}

}  // namespace holosub::data
