#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "tryon/error.hpp"
#include "tryon/image.hpp"

namespace tryon {

// ============================================================================
// Parameters and grids
// ============================================================================

/// Control-point displacement field for a thin-plate-spline warp. The k*k
/// control lattice is uniform over [-1,1]^2 in normalized device coordinates;
/// dx/dy hold per-point displacements in the same units, row-major (y outer).
struct TpsParams {
    int grid_k = 5;
    std::vector<double> dx;
    std::vector<double> dy;
    double clamp = 2.0;  // |displacement| bound; <= 0 disables

    static TpsParams zeros(int k) {
        TpsParams p;
        p.grid_k = k;
        p.dx.assign(static_cast<std::size_t>(k) * k, 0.0);
        p.dy.assign(static_cast<std::size_t>(k) * k, 0.0);
        return p;
    }

    int control_count() const { return grid_k * grid_k; }

    void validate() const {
        if (grid_k < 2) throw RangeError("TpsParams: grid_k must be >= 2");
        const std::size_t m = static_cast<std::size_t>(grid_k) * grid_k;
        if (dx.size() != m || dy.size() != m)
            throw RangeError("TpsParams: displacement arrays must have grid_k^2 entries");
        for (std::size_t i = 0; i < m; ++i) {
            if (!std::isfinite(dx[i]) || !std::isfinite(dy[i]))
                throw RangeError("TpsParams: non-finite displacement");
            if (clamp > 0.0 && (std::abs(dx[i]) > clamp || std::abs(dy[i]) > clamp))
                throw RangeError("TpsParams: displacement exceeds clamp");
        }
    }
};

/// Dense sampling grid: for every output pixel, the source-pixel coordinate
/// to sample (inverse mapping).
struct WarpGrid {
    int width = 0;
    int height = 0;
    std::vector<double> gx;
    std::vector<double> gy;

    WarpGrid() = default;
    WarpGrid(int w, int h)
        : width(w), height(h), gx(static_cast<std::size_t>(w) * h, 0.0),
          gy(static_cast<std::size_t>(w) * h, 0.0) {}

    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

// ============================================================================
// TPS linear algebra
// ============================================================================

namespace detail {

/// TPS radial kernel U(r) = r^2 log(r^2) written in terms of r^2, with U(0)=0.
inline double tps_kernel(double r2) { return r2 > 0.0 ? r2 * std::log(r2) : 0.0; }

/// Interpolation system for a k*k uniform control lattice on [-1,1]^2:
/// the symmetric (m+3) x (m+3) matrix [[K, P], [P^T, 0]] with K_ij = U(r_ij^2)
/// and P_i = (1, x_i, y_i), LU-factorized once and reused for both axes
/// (and, in the fitter, for the transposed solve — the matrix is symmetric).
class TpsSystem {
  public:
    explicit TpsSystem(int k) : k_(k), m_(k * k), n_(k * k + 3) {
        if (k < 2) throw RangeError("TpsSystem: grid_k must be >= 2");
        px_.resize(m_);
        py_.resize(m_);
        for (int row = 0; row < k; ++row) {
            for (int col = 0; col < k; ++col) {
                px_[row * k + col] = lattice_coord(col);
                py_[row * k + col] = lattice_coord(row);
            }
        }
        build_and_factor();
    }

    int k() const { return k_; }
    int control_count() const { return m_; }
    int size() const { return n_; }
    double control_x(int i) const { return px_[i]; }
    double control_y(int i) const { return py_[i]; }

    double lattice_coord(int i) const {
        return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(k_ - 1);
    }

    /// Basis row for an evaluation point: U-terms for every control point
    /// followed by the affine monomials (1, qx, qy).
    void phi(double qx, double qy, std::vector<double>& out) const {
        out.resize(n_);
        for (int i = 0; i < m_; ++i) {
            const double ddx = qx - px_[i];
            const double ddy = qy - py_[i];
            out[i] = tps_kernel(ddx * ddx + ddy * ddy);
        }
        out[m_] = 1.0;
        out[m_ + 1] = qx;
        out[m_ + 2] = qy;
    }

    /// Solve [[K,P],[P^T,0]] z = [v; 0] for control values v; returns the
    /// full coefficient vector [w; a].
    std::vector<double> solve(const std::vector<double>& v) const {
        std::vector<double> rhs(n_, 0.0);
        for (int i = 0; i < m_; ++i) rhs[i] = v[i];
        solve_in_place(rhs);
        return rhs;
    }

    /// In-place solve for an arbitrary right-hand side of size m+3.
    void solve_in_place(std::vector<double>& rhs) const {
        for (int j = 0; j < n_; ++j) std::swap(rhs[j], rhs[piv_[j]]);
        for (int j = 0; j < n_; ++j)
            for (int i = j + 1; i < n_; ++i) rhs[i] -= lu_[at(i, j)] * rhs[j];
        for (int j = n_ - 1; j >= 0; --j) {
            rhs[j] /= lu_[at(j, j)];
            for (int i = 0; i < j; ++i) rhs[i] -= lu_[at(i, j)] * rhs[j];
        }
    }

  private:
    std::size_t at(int r, int c) const { return static_cast<std::size_t>(r) * n_ + c; }

    void build_and_factor() {
        lu_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
        for (int i = 0; i < m_; ++i) {
            for (int j = 0; j < m_; ++j) {
                const double ddx = px_[i] - px_[j];
                const double ddy = py_[i] - py_[j];
                lu_[at(i, j)] = tps_kernel(ddx * ddx + ddy * ddy);
            }
            lu_[at(i, m_)] = lu_[at(m_, i)] = 1.0;
            lu_[at(i, m_ + 1)] = lu_[at(m_ + 1, i)] = px_[i];
            lu_[at(i, m_ + 2)] = lu_[at(m_ + 2, i)] = py_[i];
        }

        piv_.resize(n_);
        for (int j = 0; j < n_; ++j) {
            int pivot = j;
            double best = std::abs(lu_[at(j, j)]);
            for (int i = j + 1; i < n_; ++i) {
                const double cand = std::abs(lu_[at(i, j)]);
                if (cand > best) {
                    best = cand;
                    pivot = i;
                }
            }
            if (best == 0.0) throw NumericalError("TpsSystem: singular interpolation system");
            piv_[j] = pivot;
            if (pivot != j)
                for (int c = 0; c < n_; ++c) std::swap(lu_[at(j, c)], lu_[at(pivot, c)]);
            const double d = lu_[at(j, j)];
            for (int i = j + 1; i < n_; ++i) {
                lu_[at(i, j)] /= d;
                const double f = lu_[at(i, j)];
                if (f == 0.0) continue;
                for (int c = j + 1; c < n_; ++c) lu_[at(i, c)] -= f * lu_[at(j, c)];
            }
        }
    }

    int k_, m_, n_;
    std::vector<double> px_, py_;
    std::vector<double> lu_;
    std::vector<int> piv_;
};

/// Pixel index -> normalized device coordinate in [-1,1] (0 for extent 1).
inline double to_ndc(int v, int extent) {
    return extent > 1 ? 2.0 * static_cast<double>(v) / static_cast<double>(extent - 1) - 1.0
                      : 0.0;
}

/// Normalized device coordinate -> pixel coordinate.
inline double from_ndc(double n, int extent) { return (n + 1.0) * 0.5 * (extent - 1); }

}  // namespace detail

// ============================================================================
// Grid generation and warping
// ============================================================================

/// Generate the dense sampling grid for a target of the given size. The
/// interpolant passes through every control displacement exactly; zero
/// displacements yield the identity grid.
inline WarpGrid tps_grid(const TpsParams& params, int width, int height) {
    params.validate();
    if (width < 1 || height < 1) throw DimensionError("tps_grid: bad output size");

    const detail::TpsSystem sys(params.grid_k);
    const std::vector<double> wx = sys.solve(params.dx);
    const std::vector<double> wy = sys.solve(params.dy);
    const int m = sys.control_count();

    WarpGrid grid(width, height);
    for (int y = 0; y < height; ++y) {
        const double ny = detail::to_ndc(y, height);
        for (int x = 0; x < width; ++x) {
            const double nx = detail::to_ndc(x, width);
            double fx = wx[m] + wx[m + 1] * nx + wx[m + 2] * ny;
            double fy = wy[m] + wy[m + 1] * nx + wy[m + 2] * ny;
            for (int i = 0; i < m; ++i) {
                const double ddx = nx - sys.control_x(i);
                const double ddy = ny - sys.control_y(i);
                const double u = detail::tps_kernel(ddx * ddx + ddy * ddy);
                fx += wx[i] * u;
                fy += wy[i] * u;
            }
            const std::size_t idx = grid.idx(x, y);
            grid.gx[idx] = detail::from_ndc(nx + fx, width);
            grid.gy[idx] = detail::from_ndc(ny + fy, height);
        }
    }
    return grid;
}

namespace detail {

/// Bilinear sample with a constant fill outside the source bounds, plus the
/// partial derivatives with respect to the sampling coordinate.
struct BilinearSample {
    double value = 0.0;
    double dgx = 0.0;
    double dgy = 0.0;
};

template <typename GetPixel>
inline BilinearSample sample_bilinear(double gx, double gy, int width, int height, double fill,
                                      GetPixel&& pixel) {
    if (!(gx > -1.0e9 && gx < 1.0e9 && gy > -1.0e9 && gy < 1.0e9)) return {fill, 0.0, 0.0};
    const double fgx = std::floor(gx);
    const double fgy = std::floor(gy);
    const int x0 = static_cast<int>(fgx);
    const int y0 = static_cast<int>(fgy);
    const double fx = gx - fgx;
    const double fy = gy - fgy;

    auto corner = [&](int x, int y) -> double {
        if (x < 0 || y < 0 || x >= width || y >= height) return fill;
        return pixel(x, y);
    };
    const double v00 = corner(x0, y0);
    const double v10 = corner(x0 + 1, y0);
    const double v01 = corner(x0, y0 + 1);
    const double v11 = corner(x0 + 1, y0 + 1);

    BilinearSample s;
    s.value = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) +
              fy * ((1.0 - fx) * v01 + fx * v11);
    s.dgx = (1.0 - fy) * (v10 - v00) + fy * (v11 - v01);
    s.dgy = (1.0 - fx) * (v01 - v00) + fx * (v11 - v10);
    return s;
}

}  // namespace detail

/// Warp an 8-bit image through the grid with bilinear sampling; coordinates
/// outside the source take the fill value. An identity grid reproduces the
/// input bit-exactly.
inline ImageBuffer warp_image(const ImageBuffer& img, const WarpGrid& grid, std::uint8_t fill) {
    ImageBuffer out(grid.width, grid.height, img.channels);
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) {
            const std::size_t idx = grid.idx(x, y);
            for (int c = 0; c < img.channels; ++c) {
                const auto s = detail::sample_bilinear(
                    grid.gx[idx], grid.gy[idx], img.width, img.height,
                    static_cast<double>(fill),
                    [&](int sx, int sy) { return static_cast<double>(img.at(sx, sy, c)); });
                out.at(x, y, c) =
                    static_cast<std::uint8_t>(std::lround(std::clamp(s.value, 0.0, 255.0)));
            }
        }
    }
    return out;
}

/// Float-path warp used by the objective and the fitter (no quantization).
inline FloatImage warp_image(const FloatImage& img, const WarpGrid& grid, double fill) {
    FloatImage out(grid.width, grid.height, img.channels);
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) {
            const std::size_t idx = grid.idx(x, y);
            for (int c = 0; c < img.channels; ++c) {
                const auto s = detail::sample_bilinear(
                    grid.gx[idx], grid.gy[idx], img.width, img.height, fill,
                    [&](int sx, int sy) { return img.at(sx, sy, c); });
                out.at(x, y, c) = s.value;
            }
        }
    }
    return out;
}

// ============================================================================
// Losses
// ============================================================================

/// Mean absolute difference over samples in [0,1].
inline double l1_loss(const FloatImage& a, const FloatImage& b) {
    if (!a.same_shape(b)) throw DimensionError("l1_loss: shape mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) total += std::abs(a.data[i] - b.data[i]);
    return total / static_cast<double>(a.data.size());
}

inline double l1_loss(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) throw DimensionError("l1_loss: shape mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        total += std::abs(static_cast<double>(a.data[i]) - b.data[i]) / 255.0;
    return total / static_cast<double>(a.data.size());
}

/// Stride matching the control-point spacing, kept small enough that the
/// sampled lattice has at least 3 points per axis.
inline int gic_auto_stride(int width, int height, int grid_k) {
    const int ext = std::min(width, height) - 1;
    int s = std::max(1, ext / std::max(1, grid_k - 1));
    s = std::min(s, std::max(1, (width - 1) / 2));
    s = std::min(s, std::max(1, (height - 1) / 2));
    return s;
}

/// Grid-consistency regularizer in the distance form: for each interior
/// lattice point, |d(right) - d(left)| + |d(down) - d(up)| of the warped
/// neighbor distances, summed. Zero for any uniformly spaced grid.
inline double gic_loss(const WarpGrid& grid, int stride) {
    if (stride < 1) throw RangeError("gic_loss: stride must be >= 1");
    const int nx = (grid.width - 1) / stride + 1;
    const int ny = (grid.height - 1) / stride + 1;
    if (nx < 3 || ny < 3) throw DimensionError("gic_loss: lattice smaller than 3x3");

    auto gpt = [&](int a, int b) {
        const std::size_t i = grid.idx(a * stride, b * stride);
        return Vec2{grid.gx[i], grid.gy[i]};
    };

    double total = 0.0;
    for (int b = 1; b < ny - 1; ++b) {
        for (int a = 1; a < nx - 1; ++a) {
            const Vec2 c = gpt(a, b);
            const double dr = (gpt(a + 1, b) - c).norm();
            const double dl = (gpt(a - 1, b) - c).norm();
            const double dd = (gpt(a, b + 1) - c).norm();
            const double du = (gpt(a, b - 1) - c).norm();
            total += std::abs(dr - dl) + std::abs(dd - du);
        }
    }
    return total;
}

/// Alternative regularizer summing first differences of the x-grid only, in
/// both lattice axes. Unlike the distance form it is nonzero on the identity
/// grid; kept selectable for comparison.
inline double gic_loss_printed(const WarpGrid& grid, int stride) {
    if (stride < 1) throw RangeError("gic_loss_printed: stride must be >= 1");
    const int nx = (grid.width - 1) / stride + 1;
    const int ny = (grid.height - 1) / stride + 1;
    if (nx < 3 || ny < 3) throw DimensionError("gic_loss_printed: lattice smaller than 3x3");

    auto gxv = [&](int a, int b) { return grid.gx[grid.idx(a * stride, b * stride)]; };

    double total = 0.0;
    for (int b = 0; b < ny; ++b) {
        for (int a = 0; a < nx; ++a) {
            for (int i : {-1, 1})
                if (a + i >= 0 && a + i < nx) total += std::abs(gxv(a + i, b) - gxv(a, b));
            for (int j : {-1, 1})
                if (b + j >= 0 && b + j < ny) total += std::abs(gxv(a, b + j) - gxv(a, b));
        }
    }
    return total;
}

// ============================================================================
// Composite objective
// ============================================================================

enum class GicForm { distance, printed };

/// Optimizer and loss configuration for warp fitting.
struct GmmConfig {
    double lambda_l1 = 1.0;
    double lambda_reg = 0.5;
    double lr = 0.01;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int decay_every = 10000;
    double decay_factor = 0.5;
    int max_steps = 2000;
    int grid_k = 5;
    int gic_stride = 0;  // 0 = derive from grid_k
    GicForm gic_form = GicForm::distance;
    double warp_fill = 1.0;  // fill for samples outside the accessory, in [0,1]
    double clamp = 2.0;      // displacement bound; <= 0 disables

    void validate() const {
        if (lambda_l1 < 0.0 || lambda_reg < 0.0)
            throw RangeError("GmmConfig: loss weights must be >= 0");
        if (!(lr > 0.0)) throw RangeError("GmmConfig: lr must be > 0");
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
            throw RangeError("GmmConfig: betas must lie in [0,1)");
        if (!(epsilon > 0.0)) throw RangeError("GmmConfig: epsilon must be > 0");
        if (decay_every < 1) throw RangeError("GmmConfig: decay_every must be >= 1");
        if (decay_factor <= 0.0 || decay_factor > 1.0)
            throw RangeError("GmmConfig: decay_factor must lie in (0,1]");
        if (max_steps < 0) throw RangeError("GmmConfig: max_steps must be >= 0");
        if (grid_k < 2) throw RangeError("GmmConfig: grid_k must be >= 2");
        if (warp_fill < 0.0 || warp_fill > 1.0)
            throw RangeError("GmmConfig: warp_fill must lie in [0,1]");
    }

    int stride_for(int width, int height, int lattice_k) const {
        return gic_stride > 0 ? gic_stride : gic_auto_stride(width, height, lattice_k);
    }
};

/// Composite warp-fitting loss:
///   lambda_l1 * L1(warp(accessory), target) + lambda_reg * GIC(grid).
inline double gmm_objective(const TpsParams& params, const FloatImage& accessory,
                            const FloatImage& target, const GmmConfig& cfg) {
    if (!accessory.same_shape(target))
        throw DimensionError("gmm_objective: accessory/target shape mismatch");
    cfg.validate();
    const WarpGrid grid = tps_grid(params, target.width, target.height);
    const FloatImage warped = warp_image(accessory, grid, cfg.warp_fill);
    const int stride = cfg.stride_for(target.width, target.height, params.grid_k);
    const double reg = cfg.gic_form == GicForm::printed ? gic_loss_printed(grid, stride)
                                                        : gic_loss(grid, stride);
    return cfg.lambda_l1 * l1_loss(warped, target) + cfg.lambda_reg * reg;
}

inline double gmm_objective(const TpsParams& params, const ImageBuffer& accessory,
                            const ImageBuffer& target, const GmmConfig& cfg) {
    return gmm_objective(params, to_float(accessory), to_float(target), cfg);
}

// ============================================================================
// Feature correlation
// ============================================================================

/// Dense feature grid (h*w positions, d channels).
struct FeatureGrid {
    int h = 0;
    int w = 0;
    int d = 0;
    std::vector<double> v;

    FeatureGrid() = default;
    FeatureGrid(int hh, int ww, int dd)
        : h(hh), w(ww), d(dd), v(static_cast<std::size_t>(hh) * ww * dd, 0.0) {}

    double& at(int y, int x, int c) {
        return v[(static_cast<std::size_t>(y) * w + x) * d + c];
    }
    double at(int y, int x, int c) const {
        return v[(static_cast<std::size_t>(y) * w + x) * d + c];
    }
};

/// All-pairs correlation of two feature grids after per-position L2
/// normalization (zero vectors stay zero). Output channel qy*w + qx holds the
/// dot product with b's feature at (qy, qx).
inline FeatureGrid correlate_features(const FeatureGrid& a, const FeatureGrid& b) {
    if (a.h != b.h || a.w != b.w || a.d != b.d)
        throw DimensionError("correlate_features: grid shape mismatch");
    if (a.d < 1) throw DimensionError("correlate_features: feature depth must be >= 1");

    auto normalized = [](const FeatureGrid& g) {
        FeatureGrid out = g;
        for (int y = 0; y < g.h; ++y) {
            for (int x = 0; x < g.w; ++x) {
                double sq = 0.0;
                for (int c = 0; c < g.d; ++c) sq += g.at(y, x, c) * g.at(y, x, c);
                if (sq > 0.0) {
                    const double inv = 1.0 / std::sqrt(sq);
                    for (int c = 0; c < g.d; ++c) out.at(y, x, c) *= inv;
                }
            }
        }
        return out;
    };
    const FeatureGrid na = normalized(a);
    const FeatureGrid nb = normalized(b);

    FeatureGrid out(a.h, a.w, a.h * a.w);
    for (int y = 0; y < a.h; ++y)
        for (int x = 0; x < a.w; ++x)
            for (int qy = 0; qy < a.h; ++qy)
                for (int qx = 0; qx < a.w; ++qx) {
                    double dot = 0.0;
                    for (int c = 0; c < a.d; ++c) dot += na.at(y, x, c) * nb.at(qy, qx, c);
                    out.at(y, x, qy * a.w + qx) = dot;
                }
    return out;
}

// ============================================================================
// Serialization
// ============================================================================

/// Plain-text form: three lines, "grid_k <k>", "dx <k*k values>",
/// "dy <k*k values>", full double precision.
inline std::string to_text(const TpsParams& p) {
    std::ostringstream os;
    char buf[40];
    os << "grid_k " << p.grid_k << "\n";
    os << "dx";
    for (double v : p.dx) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        os << buf;
    }
    os << "\ndy";
    for (double v : p.dy) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        os << buf;
    }
    os << "\n";
    return os.str();
}

inline TpsParams tps_params_from_text(const std::string& text) {
    std::istringstream is(text);
    std::string tag;
    TpsParams p;
    if (!(is >> tag) || tag != "grid_k" || !(is >> p.grid_k) || p.grid_k < 2)
        throw SchemaError("TpsParams: expected \"grid_k <k>\"");
    const std::size_t m = static_cast<std::size_t>(p.grid_k) * p.grid_k;
    if (!(is >> tag) || tag != "dx") throw SchemaError("TpsParams: expected \"dx\" row");
    p.dx.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        if (!(is >> p.dx[i])) throw SchemaError("TpsParams: short dx row");
    if (!(is >> tag) || tag != "dy") throw SchemaError("TpsParams: expected \"dy\" row");
    p.dy.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        if (!(is >> p.dy[i])) throw SchemaError("TpsParams: short dy row");
    return p;
}

}  // namespace tryon
