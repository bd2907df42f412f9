#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tryon/error.hpp"
#include "tryon/image.hpp"
#include "tryon/tps.hpp"

namespace tryon {

namespace detail {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Per-fit state: the TPS system, the per-pixel basis matrix, and the GIC
/// lattice, all of which depend only on image size and lattice order. One
/// fused pass evaluates the objective and, optionally, its analytic gradient
/// with respect to the control displacements.
class FitWorkspace {
  public:
    FitWorkspace(const FloatImage& accessory, const FloatImage& target, const GmmConfig& cfg,
                 int grid_k)
        : acc_(accessory), tgt_(target), cfg_(cfg), sys_(grid_k) {
        if (!accessory.same_shape(target))
            throw DimensionError("fit: accessory/target shape mismatch");
        w_ = target.width;
        h_ = target.height;
        ch_ = target.channels;
        npix_ = static_cast<std::size_t>(w_) * h_;
        m_ = sys_.control_count();
        n_ = sys_.size();
        scale_x_ = 0.5 * (w_ - 1);
        scale_y_ = 0.5 * (h_ - 1);

        // Basis rows are parameter-independent; computing them once makes a
        // fit step two matrix-vector products per axis.
        phi_.resize(npix_ * static_cast<std::size_t>(n_));
        std::vector<double> row;
        for (int y = 0; y < h_; ++y) {
            const double ny = to_ndc(y, h_);
            for (int x = 0; x < w_; ++x) {
                const double nx = to_ndc(x, w_);
                sys_.phi(nx, ny, row);
                std::copy(row.begin(), row.end(),
                          phi_.begin() + (static_cast<std::size_t>(y) * w_ + x) * n_);
            }
        }

        stride_ = cfg.stride_for(w_, h_, grid_k);
        lat_nx_ = (w_ - 1) / stride_ + 1;
        lat_ny_ = (h_ - 1) / stride_ + 1;
        if (lat_nx_ < 3 || lat_ny_ < 3)
            throw DimensionError("fit: image too small for the GIC lattice");

        grid_x_.resize(npix_);
        grid_y_.resize(npix_);
        gpix_x_.resize(npix_);
        gpix_y_.resize(npix_);
    }

    int param_count() const { return 2 * m_; }

    /// Objective value; when `grad` is non-null it receives d(loss)/d(dx,dy)
    /// as a 2m vector (dx block first).
    double eval(const TpsParams& params, std::vector<double>* grad) {
        const std::vector<double> wax = sys_.solve(params.dx);
        const std::vector<double> way = sys_.solve(params.dy);

        // dense grid in source-pixel coordinates
        for (std::size_t p = 0; p < npix_; ++p) {
            const double* row = &phi_[p * n_];
            double fx = 0.0, fy = 0.0;
            for (int j = 0; j < n_; ++j) {
                fx += row[j] * wax[j];
                fy += row[j] * way[j];
            }
            const double nx = row[m_ + 1];
            const double ny = row[m_ + 2];
            grid_x_[p] = (nx + fx + 1.0) * scale_x_;
            grid_y_[p] = (ny + fy + 1.0) * scale_y_;
        }

        const bool want_grad = grad != nullptr;
        if (want_grad) {
            std::fill(gpix_x_.begin(), gpix_x_.end(), 0.0);
            std::fill(gpix_y_.begin(), gpix_y_.end(), 0.0);
        }

        // L1 term through bilinear sampling
        const double l1_w = cfg_.lambda_l1 / static_cast<double>(npix_ * ch_);
        double l1_sum = 0.0;
        for (std::size_t p = 0; p < npix_; ++p) {
            double dvx = 0.0, dvy = 0.0;
            for (int c = 0; c < ch_; ++c) {
                const auto s = sample_bilinear(
                    grid_x_[p], grid_y_[p], w_, h_, cfg_.warp_fill,
                    [&](int sx, int sy) { return acc_.at(sx, sy, c); });
                const double r = s.value - tgt_.data[p * ch_ + c];
                l1_sum += std::abs(r);
                if (want_grad) {
                    const double g = sign(r);
                    dvx += g * s.dgx;
                    dvy += g * s.dgy;
                }
            }
            if (want_grad) {
                gpix_x_[p] += l1_w * dvx;
                gpix_y_[p] += l1_w * dvy;
            }
        }

        double loss = l1_w * l1_sum;
        loss += cfg_.lambda_reg * (cfg_.gic_form == GicForm::printed
                                       ? gic_printed(want_grad)
                                       : gic_distance(want_grad));

        if (want_grad) {
            // chain through the pixel scale and the (symmetric) TPS solve
            std::vector<double> ux(n_, 0.0), uy(n_, 0.0);
            for (std::size_t p = 0; p < npix_; ++p) {
                const double gx = gpix_x_[p] * scale_x_;
                const double gy = gpix_y_[p] * scale_y_;
                if (gx == 0.0 && gy == 0.0) continue;
                const double* row = &phi_[p * n_];
                for (int j = 0; j < n_; ++j) {
                    ux[j] += gx * row[j];
                    uy[j] += gy * row[j];
                }
            }
            sys_.solve_in_place(ux);
            sys_.solve_in_place(uy);
            grad->assign(2 * m_, 0.0);
            for (int i = 0; i < m_; ++i) {
                (*grad)[i] = ux[i];
                (*grad)[m_ + i] = uy[i];
            }
        }
        return loss;
    }

  private:
    std::size_t lat_idx(int a, int b) const {
        return (static_cast<std::size_t>(b) * stride_) * w_ + static_cast<std::size_t>(a) * stride_;
    }

    double gic_distance(bool want_grad) {
        double total = 0.0;
        for (int b = 1; b < lat_ny_ - 1; ++b) {
            for (int a = 1; a < lat_nx_ - 1; ++a) {
                const std::size_t ic = lat_idx(a, b);
                const std::size_t ir = lat_idx(a + 1, b), il = lat_idx(a - 1, b);
                const std::size_t id = lat_idx(a, b + 1), iu = lat_idx(a, b - 1);
                total += axis_term(ic, ir, il, want_grad);
                total += axis_term(ic, id, iu, want_grad);
            }
        }
        return total;
    }

    /// |d(c,fwd) - d(c,bwd)| and its gradient into the pixel-grid buffers.
    double axis_term(std::size_t ic, std::size_t ifwd, std::size_t ibwd, bool want_grad) {
        const double fx = grid_x_[ifwd] - grid_x_[ic], fy = grid_y_[ifwd] - grid_y_[ic];
        const double bx = grid_x_[ibwd] - grid_x_[ic], by = grid_y_[ibwd] - grid_y_[ic];
        const double df = std::hypot(fx, fy);
        const double db = std::hypot(bx, by);
        if (want_grad) {
            const double s = cfg_.lambda_reg * sign(df - db);
            if (s != 0.0) {
                if (df > 0.0) {
                    const double w = s / df;
                    gpix_x_[ifwd] += w * fx;
                    gpix_y_[ifwd] += w * fy;
                    gpix_x_[ic] -= w * fx;
                    gpix_y_[ic] -= w * fy;
                }
                if (db > 0.0) {
                    const double w = s / db;
                    gpix_x_[ibwd] -= w * bx;
                    gpix_y_[ibwd] -= w * by;
                    gpix_x_[ic] += w * bx;
                    gpix_y_[ic] += w * by;
                }
            }
        }
        return std::abs(df - db);
    }

    double gic_printed(bool want_grad) {
        double total = 0.0;
        for (int b = 0; b < lat_ny_; ++b) {
            for (int a = 0; a < lat_nx_; ++a) {
                const std::size_t ip = lat_idx(a, b);
                for (int i : {-1, 1}) {
                    if (a + i < 0 || a + i >= lat_nx_) continue;
                    const std::size_t iq = lat_idx(a + i, b);
                    total += diff_term(ip, iq, want_grad);
                }
                for (int j : {-1, 1}) {
                    if (b + j < 0 || b + j >= lat_ny_) continue;
                    const std::size_t iq = lat_idx(a, b + j);
                    total += diff_term(ip, iq, want_grad);
                }
            }
        }
        return total;
    }

    double diff_term(std::size_t ip, std::size_t iq, bool want_grad) {
        const double d = grid_x_[iq] - grid_x_[ip];
        if (want_grad) {
            const double s = cfg_.lambda_reg * sign(d);
            gpix_x_[iq] += s;
            gpix_x_[ip] -= s;
        }
        return std::abs(d);
    }

    FloatImage acc_, tgt_;
    GmmConfig cfg_;
    TpsSystem sys_;
    int w_ = 0, h_ = 0, ch_ = 0, m_ = 0, n_ = 0;
    std::size_t npix_ = 0;
    double scale_x_ = 0.0, scale_y_ = 0.0;
    int stride_ = 1, lat_nx_ = 0, lat_ny_ = 0;
    std::vector<double> phi_;
    std::vector<double> grid_x_, grid_y_;
    std::vector<double> gpix_x_, gpix_y_;
};

}  // namespace detail

// ============================================================================
// Analytic gradient
// ============================================================================

struct GradResult {
    double loss = 0.0;
    std::vector<double> grad;  // d/d(dx) block then d/d(dy) block
};

/// Objective value and analytic gradient in one pass. The value matches
/// gmm_objective up to floating-point reassociation.
inline GradResult gmm_gradient(const TpsParams& params, const FloatImage& accessory,
                               const FloatImage& target, const GmmConfig& cfg) {
    cfg.validate();
    params.validate();
    detail::FitWorkspace ws(accessory, target, cfg, params.grid_k);
    GradResult out;
    out.loss = ws.eval(params, &out.grad);
    return out;
}

// ============================================================================
// Fitting
// ============================================================================

struct FitResult {
    TpsParams params;                  // best-loss parameters seen
    std::vector<double> loss_history;  // loss at step s for s = 0..max_steps
    double best_loss = 0.0;
    int best_step = 0;
};

/// Fit TPS displacements by Adam on the analytic gradient of the composite
/// objective. The learning rate decays by decay_factor every decay_every
/// steps; the history records the loss at every visited parameter vector
/// (max_steps + 1 entries), and the best-loss parameters are returned.
inline FitResult fit_tps(const FloatImage& accessory, const FloatImage& target,
                         const GmmConfig& cfg, const TpsParams& init) {
    cfg.validate();
    init.validate();
    detail::FitWorkspace ws(accessory, target, cfg, init.grid_k);
    const int m = init.control_count();
    const int dim = 2 * m;

    TpsParams theta = init;
    theta.clamp = cfg.clamp;
    std::vector<double> grad(dim, 0.0);
    std::vector<double> mom1(dim, 0.0), mom2(dim, 0.0);

    FitResult result;
    result.params = theta;
    result.best_loss = std::numeric_limits<double>::infinity();
    result.loss_history.reserve(static_cast<std::size_t>(cfg.max_steps) + 1);

    auto record = [&](double loss, int step) {
        if (!std::isfinite(loss)) throw DivergenceError("fit_tps: non-finite loss", step);
        result.loss_history.push_back(loss);
        if (loss < result.best_loss) {
            result.best_loss = loss;
            result.best_step = step;
            result.params = theta;
        }
    };

    for (int step = 0; step < cfg.max_steps; ++step) {
        const double loss = ws.eval(theta, &grad);
        record(loss, step);

        const double lr =
            cfg.lr * std::pow(cfg.decay_factor, static_cast<double>(step / cfg.decay_every));
        const double t = static_cast<double>(step + 1);
        const double corr1 = 1.0 - std::pow(cfg.beta1, t);
        const double corr2 = 1.0 - std::pow(cfg.beta2, t);

        auto update = [&](std::vector<double>& v, int offset) {
            for (int i = 0; i < m; ++i) {
                const int j = offset + i;
                mom1[j] = cfg.beta1 * mom1[j] + (1.0 - cfg.beta1) * grad[j];
                mom2[j] = cfg.beta2 * mom2[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
                const double mhat = mom1[j] / corr1;
                const double vhat = mom2[j] / corr2;
                v[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
                if (cfg.clamp > 0.0) v[i] = std::clamp(v[i], -cfg.clamp, cfg.clamp);
                if (!std::isfinite(v[i]))
                    throw DivergenceError("fit_tps: non-finite parameter", step);
            }
        };
        update(theta.dx, 0);
        update(theta.dy, m);
    }

    record(ws.eval(theta, nullptr), cfg.max_steps);
    if (cfg.max_steps == 0) result.params = init;  // nothing fitted
    return result;
}

inline FitResult fit_tps(const ImageBuffer& accessory, const ImageBuffer& target,
                         const GmmConfig& cfg, const TpsParams& init) {
    return fit_tps(to_float(accessory), to_float(target), cfg, init);
}

inline FitResult fit_tps(const FloatImage& accessory, const FloatImage& target,
                         const GmmConfig& cfg) {
    TpsParams init = TpsParams::zeros(cfg.grid_k);
    init.clamp = cfg.clamp;
    return fit_tps(accessory, target, cfg, init);
}

}  // namespace tryon
