#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "declutter/core.hpp"

namespace declutter {

// Uniform square-cell grid over the work surface. `origin` is the world
// coordinate of the center of cell (0, 0); cells are addressed row-major.
struct GridMeta {
    int width = 0;
    int height = 0;
    double cell_size = 0.0;
    Point origin;

    GridMeta() = default;
    GridMeta(int w, int h, double cell, Point org = {}) : width(w), height(h), cell_size(cell), origin(org) {
        if (w < 1 || h < 1 || !(cell > 0.0))
            throw std::invalid_argument("GridMeta: width/height must be >= 1 and cell_size > 0");
    }

    std::size_t cell_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * width + ix; }
    bool contains(int ix, int iy) const { return ix >= 0 && ix < width && iy >= 0 && iy < height; }

    Point cell_center(int ix, int iy) const {
        return {origin.x + ix * cell_size, origin.y + iy * cell_size};
    }
    int to_ix(double x) const { return static_cast<int>(std::lround((x - origin.x) / cell_size)); }
    int to_iy(double y) const { return static_cast<int>(std::lround((y - origin.y) / cell_size)); }

    // Outer bounds of the covered rectangle (cells own a cell_size square).
    double min_x() const { return origin.x - cell_size / 2; }
    double min_y() const { return origin.y - cell_size / 2; }
    double max_x() const { return min_x() + width * cell_size; }
    double max_y() const { return min_y() + height * cell_size; }

    bool operator==(const GridMeta& o) const {
        return width == o.width && height == o.height && cell_size == o.cell_size &&
               origin.x == o.origin.x && origin.y == o.origin.y;
    }
    bool operator!=(const GridMeta& o) const { return !(*this == o); }
};

struct BitMask {
    GridMeta meta;
    std::vector<std::uint8_t> cells;  // row-major, 0/1

    BitMask() = default;
    explicit BitMask(const GridMeta& m) : meta(m), cells(m.cell_count(), 0) {}

    std::uint8_t at(int ix, int iy) const { return cells[meta.index(ix, iy)]; }
    void set(int ix, int iy, bool v = true) { cells[meta.index(ix, iy)] = v ? 1 : 0; }
    bool test(int ix, int iy) const { return meta.contains(ix, iy) && cells[meta.index(ix, iy)] != 0; }

    bool operator==(const BitMask& o) const { return meta == o.meta && cells == o.cells; }
};

struct ScalarField {
    GridMeta meta;
    std::vector<double> values;  // row-major

    ScalarField() = default;
    explicit ScalarField(const GridMeta& m, double fill = 0.0) : meta(m), values(m.cell_count(), fill) {}

    double at(int ix, int iy) const { return values[meta.index(ix, iy)]; }
    double& at(int ix, int iy) { return values[meta.index(ix, iy)]; }
};

// Gripper footprint: axis lengths d1 >= d2 are full diameters, theta is the
// major-axis angle in [-pi/2, pi/2].
struct EllipseSpec {
    double cx = 0.0;
    double cy = 0.0;
    double theta = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;

    void validate() const {
        if (!(d1 >= d2 && d2 > 0.0))
            throw std::invalid_argument("EllipseSpec: need d1 >= d2 > 0");
        if (theta < -std::numbers::pi / 2 - 1e-12 || theta > std::numbers::pi / 2 + 1e-12)
            throw std::invalid_argument("EllipseSpec: theta out of [-pi/2, pi/2]");
    }
};

inline std::size_t area_pixels(const BitMask& mask) {
    std::size_t n = 0;
    for (auto c : mask.cells) n += c;
    return n;
}

// Cell is set iff its center lies inside the ellipse; cells off the grid are
// clipped silently.
inline BitMask rasterize_ellipse(const EllipseSpec& spec, const GridMeta& meta) {
    spec.validate();
    BitMask out(meta);
    const double a = spec.d1 / 2, b = spec.d2 / 2;
    const double ct = std::cos(spec.theta), st = std::sin(spec.theta);
    // Axis-aligned bounding box of the rotated ellipse.
    const double ex = std::sqrt(a * a * ct * ct + b * b * st * st);
    const double ey = std::sqrt(a * a * st * st + b * b * ct * ct);
    int x0 = std::max(0, meta.to_ix(spec.cx - ex) - 1);
    int x1 = std::min(meta.width - 1, meta.to_ix(spec.cx + ex) + 1);
    int y0 = std::max(0, meta.to_iy(spec.cy - ey) - 1);
    int y1 = std::min(meta.height - 1, meta.to_iy(spec.cy + ey) + 1);
    for (int iy = y0; iy <= y1; ++iy) {
        for (int ix = x0; ix <= x1; ++ix) {
            Point p = meta.cell_center(ix, iy);
            const double dx = p.x - spec.cx, dy = p.y - spec.cy;
            const double u = (dx * ct + dy * st) / a;
            const double v = (-dx * st + dy * ct) / b;
            if (u * u + v * v <= 1.0) out.cells[meta.index(ix, iy)] = 1;
        }
    }
    return out;
}

inline BitMask intersect(const BitMask& a, const BitMask& b) {
    if (a.meta != b.meta) throw std::invalid_argument("intersect: grid metas differ");
    BitMask out(a.meta);
    for (std::size_t i = 0; i < out.cells.size(); ++i) out.cells[i] = a.cells[i] & b.cells[i];
    return out;
}

// Count of set cells of `mask` inside the k x k window centered at each cell
// (zero padding outside the grid). Uses a 2D prefix sum.
inline std::vector<int> box_counts(const BitMask& mask, int kernel) {
    const int w = mask.meta.width, h = mask.meta.height, r = kernel / 2;
    std::vector<int> prefix(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            prefix[(y + 1) * (w + 1) + (x + 1)] = prefix[y * (w + 1) + (x + 1)] +
                                                  prefix[(y + 1) * (w + 1) + x] -
                                                  prefix[y * (w + 1) + x] + mask.cells[mask.meta.index(x, y)];
    std::vector<int> out(mask.meta.cell_count());
    for (int y = 0; y < h; ++y) {
        const int ylo = std::max(0, y - r), yhi = std::min(h - 1, y + r);
        for (int x = 0; x < w; ++x) {
            const int xlo = std::max(0, x - r), xhi = std::min(w - 1, x + r);
            out[mask.meta.index(x, y)] = prefix[(yhi + 1) * (w + 1) + (xhi + 1)] -
                                         prefix[ylo * (w + 1) + (xhi + 1)] -
                                         prefix[(yhi + 1) * (w + 1) + xlo] + prefix[ylo * (w + 1) + xlo];
        }
    }
    return out;
}

// Two passes of all-ones box convolution with majority thresholding: a cell
// survives a pass iff at least half the k*k window is set (a strict majority,
// since the window size is odd). Fills holes and removes speckle smaller than
// the kernel; right-angle convexities get chamfered once and then stay fixed.
inline BitMask fill_holes(const BitMask& mask, int kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("fill_holes: kernel must be odd and >= 1");
    const int threshold = (kernel * kernel + 1) / 2;
    BitMask cur = mask;
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<int> counts = box_counts(cur, kernel);
        for (std::size_t i = 0; i < cur.cells.size(); ++i)
            cur.cells[i] = counts[i] >= threshold ? 1 : 0;
    }
    return cur;
}

// Exact squared Euclidean distance (in cell units) from every cell to the
// nearest set cell. Felzenszwalb-Huttenlocher two-pass transform.
inline std::vector<double> distance_sq_cells(const BitMask& mask) {
    constexpr double INF = std::numeric_limits<double>::infinity();
    const int w = mask.meta.width, h = mask.meta.height;
    std::vector<double> grid(mask.meta.cell_count());
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = mask.cells[i] ? 0.0 : INF;

    const int n_max = std::max(w, h);
    std::vector<double> f(n_max), d(n_max), z(n_max + 1);
    std::vector<int> v(n_max);

    auto dt_1d = [&](int n) {
        int k = 0;
        v[0] = 0;
        z[0] = -INF;
        z[1] = INF;
        for (int q = 1; q < n; ++q) {
            if (f[q] == INF) continue;
            if (f[v[0]] == INF && k == 0) {  // first finite sample
                v[0] = q;
                z[0] = -INF;
                z[1] = INF;
                continue;
            }
            double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
            while (s <= z[k]) {
                --k;
                s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = INF;
        }
        if (f[v[0]] == INF) {  // no finite sample in this scanline
            for (int q = 0; q < n; ++q) d[q] = INF;
            return;
        }
        k = 0;
        for (int q = 0; q < n; ++q) {
            while (z[k + 1] < q) ++k;
            d[q] = (q - v[k]) * static_cast<double>(q - v[k]) + f[v[k]];
        }
    };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = grid[mask.meta.index(x, y)];
        dt_1d(w);
        for (int x = 0; x < w; ++x) grid[mask.meta.index(x, y)] = d[x];
    }
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = grid[mask.meta.index(x, y)];
        dt_1d(h);
        for (int y = 0; y < h; ++y) grid[mask.meta.index(x, y)] = d[y];
    }
    return grid;
}

// Cell is set iff the Euclidean distance from its center to some set cell of
// `mask` is <= r (meters).
inline BitMask dilate_within(const BitMask& mask, double r) {
    if (r < 0.0) throw std::invalid_argument("dilate_within: r must be >= 0");
    BitMask out(mask.meta);
    const double rc = r / mask.meta.cell_size;
    const double limit = rc * rc;
    std::vector<double> d2 = distance_sq_cells(mask);
    for (std::size_t i = 0; i < out.cells.size(); ++i) out.cells[i] = d2[i] <= limit ? 1 : 0;
    return out;
}

struct PcaResult {
    double angle = 0.0;  // radians in [-pi/2, pi/2]
    bool degenerate = false;
};

// Orientation of the principal axis of the foreground cells within `radius`
// of `center`, weighted by the height field. Isotropic neighborhoods (or
// fewer than 2 cells) are reported as degenerate with angle 0.
inline PcaResult local_pca_angle(const ScalarField& field, const BitMask& foreground, Point center,
                                 double radius, double eig_tol = 1e-9) {
    if (field.meta != foreground.meta) throw std::invalid_argument("local_pca_angle: grid metas differ");
    const GridMeta& meta = field.meta;
    const double r2 = radius * radius;
    int x0 = std::max(0, meta.to_ix(center.x - radius) - 1);
    int x1 = std::min(meta.width - 1, meta.to_ix(center.x + radius) + 1);
    int y0 = std::max(0, meta.to_iy(center.y - radius) - 1);
    int y1 = std::min(meta.height - 1, meta.to_iy(center.y + radius) + 1);

    struct Sample {
        double x, y, w;
    };
    std::vector<Sample> pts;
    for (int iy = y0; iy <= y1; ++iy) {
        for (int ix = x0; ix <= x1; ++ix) {
            if (!foreground.cells[meta.index(ix, iy)]) continue;
            Point p = meta.cell_center(ix, iy);
            const double dx = p.x - center.x, dy = p.y - center.y;
            if (dx * dx + dy * dy > r2) continue;
            pts.push_back({p.x, p.y, std::max(0.0, field.values[meta.index(ix, iy)])});
        }
    }
    if (pts.size() < 2) return {0.0, true};

    double wsum = 0.0;
    for (const auto& s : pts) wsum += s.w;
    if (wsum <= 0.0) {  // unweighted fallback for flat fields
        for (auto& s : pts) s.w = 1.0;
        wsum = static_cast<double>(pts.size());
    }
    double mx = 0.0, my = 0.0;
    for (const auto& s : pts) {
        mx += s.w * s.x;
        my += s.w * s.y;
    }
    mx /= wsum;
    my /= wsum;
    double cxx = 0.0, cyy = 0.0, cxy = 0.0;
    for (const auto& s : pts) {
        const double dx = s.x - mx, dy = s.y - my;
        cxx += s.w * dx * dx;
        cyy += s.w * dy * dy;
        cxy += s.w * dx * dy;
    }
    cxx /= wsum;
    cyy /= wsum;
    cxy /= wsum;

    const double gap = std::sqrt((cxx - cyy) * (cxx - cyy) + 4.0 * cxy * cxy);
    if (gap < eig_tol) return {0.0, true};
    double angle = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
    if (angle > std::numbers::pi / 2) angle -= std::numbers::pi;
    if (angle < -std::numbers::pi / 2) angle += std::numbers::pi;
    return {angle, false};
}

// Sum of field values over the disc of radius `r` (meters) around each cell,
// zeros outside the grid. Per-row spans with 1D prefix sums keep it exact.
inline ScalarField disc_sums(const ScalarField& field, double r) {
    const GridMeta& meta = field.meta;
    const int w = meta.width, h = meta.height;
    const double rc = r / meta.cell_size;
    const int rci = static_cast<int>(std::floor(rc));
    // Half-width of the disc row at vertical offset dy.
    std::vector<int> span(2 * rci + 1, -1);
    for (int dy = -rci; dy <= rci; ++dy) {
        const double rem = rc * rc - static_cast<double>(dy) * dy;
        if (rem >= 0.0) span[dy + rci] = static_cast<int>(std::floor(std::sqrt(rem)));
    }
    std::vector<double> rowsum(static_cast<std::size_t>(h) * (w + 1), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            rowsum[static_cast<std::size_t>(y) * (w + 1) + x + 1] =
                rowsum[static_cast<std::size_t>(y) * (w + 1) + x] + field.values[meta.index(x, y)];

    ScalarField out(meta);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -rci; dy <= rci; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                const int hw = span[dy + rci];
                if (hw < 0) continue;
                const int xlo = std::max(0, x - hw), xhi = std::min(w - 1, x + hw);
                acc += rowsum[static_cast<std::size_t>(yy) * (w + 1) + xhi + 1] -
                       rowsum[static_cast<std::size_t>(yy) * (w + 1) + xlo];
            }
            out.values[meta.index(x, y)] = acc;
        }
    }
    return out;
}

}  // namespace declutter
