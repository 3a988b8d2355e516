#include "clickmask/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "clickmask/levelset_math.hpp"

namespace clickmask::kernels {

void Workspace::resize(int width, int height)
{
    if (gx.width() == width && gx.height() == height)
        return;
    for (ScalarField* f : {&gx, &gy, &mag, &vx, &vy, &dirac})
        *f = ScalarField(width, height);
}

namespace {

void reshape(ScalarField& f, int width, int height)
{
    if (f.width() != width || f.height() != height)
        f = ScalarField(width, height);
}

void reshape(ForceTerms& t, int width, int height)
{
    reshape(t.regularization, width, height);
    reshape(t.area, width, height);
    reshape(t.ed, width, height);
}

}  // namespace

// --- serial reference ------------------------------------------------------

namespace serial {

void gradient(const ScalarField& f, ScalarField& gx, ScalarField& gy)
{
    const int w = f.width(), h = f.height();
    reshape(gx, w, h);
    reshape(gy, w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int cl = std::max(c - 1, 0), cr = std::min(c + 1, w - 1);
            const int ru = std::max(r - 1, 0), rd = std::min(r + 1, h - 1);
            gx(r, c) = (f(r, cr) - f(r, cl)) * 0.5;
            gy(r, c) = (f(rd, c) - f(ru, c)) * 0.5;
        }
    }
}

void divergence(const ScalarField& vx, const ScalarField& vy, ScalarField& out)
{
    const int w = vx.width(), h = vx.height();
    reshape(out, w, h);
    // Transpose of the replicated-edge central difference, one axis at a time:
    // cell j receives +v[j-1]/2 and -v[j+1]/2, and each edge cell also absorbs
    // the contribution of its own ghost.
    auto axis = [](auto v, int j, int n) {
        double fwd = 0.0, back = 0.0;
        if (j + 1 < n)
            fwd += v(j + 1);
        if (j == 0)
            fwd += v(0);
        if (j > 0)
            back += v(j - 1);
        if (j == n - 1)
            back += v(n - 1);
        return (fwd - back) * 0.5;
    };
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double dx = axis([&](int k) { return vx(r, k); }, c, w);
            const double dy = axis([&](int k) { return vy(k, c); }, r, h);
            out(r, c) = dx + dy;
        }
    }
}

void force_terms(const ScalarField& phi, const ScalarField& edge, const ForceParams& p,
                 Workspace& ws, ForceTerms& out)
{
    const int w = phi.width(), h = phi.height();
    require_same_shape(phi, edge, "force_terms");
    ws.resize(w, h);
    reshape(out, w, h);
    const std::size_t n = phi.size();

    gradient(phi, ws.gx, ws.gy);
    for (std::size_t i = 0; i < n; ++i) {
        ws.mag[i] = std::sqrt(ws.gx[i] * ws.gx[i] + ws.gy[i] * ws.gy[i]);
        ws.dirac[i] = dirac(phi[i], p.epsilon);
        const double d = dp(ws.mag[i]);
        ws.vx[i] = d * ws.gx[i];
        ws.vy[i] = d * ws.gy[i];
    }
    divergence(ws.vx, ws.vy, out.regularization);
    for (std::size_t i = 0; i < n; ++i) {
        out.regularization[i] = p.mu * out.regularization[i];
        out.area[i] = p.area * edge[i] * ws.dirac[i];
    }

    if (p.ed == 0.0) {
        std::fill(out.ed.values().begin(), out.ed.values().end(), 0.0);
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::max(ws.mag[i], p.grad_floor);
        ws.vx[i] = ws.dirac[i] * ws.gx[i] / s;
        ws.vy[i] = ws.dirac[i] * ws.gy[i] / s;
    }
    divergence(ws.vx, ws.vy, out.ed);
    for (std::size_t i = 0; i < n; ++i)
        out.ed[i] = p.ed * (out.ed[i] - dirac_derivative(phi[i], p.epsilon) * ws.mag[i]);
}

void apply(ScalarField& phi, const ForceTerms& t, double step)
{
    for (std::size_t i = 0; i < phi.size(); ++i)
        phi[i] += step * (t.regularization[i] + t.area[i] + t.ed[i]);
}

}  // namespace serial

// --- OpenMP ----------------------------------------------------------------

namespace parallel {

void gradient(const ScalarField& f, ScalarField& gx, ScalarField& gy)
{
    const int w = f.width(), h = f.height();
    reshape(gx, w, h);
    reshape(gy, w, h);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < h; ++r) {
        const auto row = f.row(r);
        const auto up = f.row(std::max(r - 1, 0));
        const auto down = f.row(std::min(r + 1, h - 1));
        auto ox = gx.row(r);
        auto oy = gy.row(r);
        if (w == 1) {
            ox[0] = (row[0] - row[0]) * 0.5;
        } else {
            ox[0] = (row[1] - row[0]) * 0.5;
            for (int c = 1; c + 1 < w; ++c)
                ox[c] = (row[c + 1] - row[c - 1]) * 0.5;
            ox[w - 1] = (row[w - 1] - row[w - 2]) * 0.5;
        }
        for (int c = 0; c < w; ++c)
            oy[c] = (down[c] - up[c]) * 0.5;
    }
}

void divergence(const ScalarField& vx, const ScalarField& vy, ScalarField& out)
{
    const int w = vx.width(), h = vx.height();
    reshape(out, w, h);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < h; ++r) {
        const auto x = vx.row(r);
        const auto y = vy.row(r);
        const auto y_up = vy.row(std::max(r - 1, 0));
        const auto y_down = vy.row(std::min(r + 1, h - 1));
        auto o = out.row(r);
        for (int c = 0; c < w; ++c) {
            double dx;
            if (w == 1)
                dx = (x[0] - x[0]) * 0.5;
            else if (c == 0)
                dx = (x[1] + x[0]) * 0.5;
            else if (c == w - 1)
                dx = (0.0 - (x[w - 2] + x[w - 1])) * 0.5;
            else
                dx = (x[c + 1] - x[c - 1]) * 0.5;

            double dy;
            if (h == 1)
                dy = (y[c] - y[c]) * 0.5;
            else if (r == 0)
                dy = (y_down[c] + y[c]) * 0.5;
            else if (r == h - 1)
                dy = (0.0 - (y_up[c] + y[c])) * 0.5;
            else
                dy = (y_down[c] - y_up[c]) * 0.5;
            o[c] = dx + dy;
        }
    }
}

void force_terms(const ScalarField& phi, const ScalarField& edge, const ForceParams& p,
                 Workspace& ws, ForceTerms& out)
{
    const int w = phi.width(), h = phi.height();
    require_same_shape(phi, edge, "force_terms");
    ws.resize(w, h);
    reshape(out, w, h);
    const auto n = static_cast<std::ptrdiff_t>(phi.size());

    gradient(phi, ws.gx, ws.gy);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double gx = ws.gx[i], gy = ws.gy[i];
        const double mag = std::sqrt(gx * gx + gy * gy);
        ws.mag[i] = mag;
        ws.dirac[i] = dirac(phi[i], p.epsilon);
        const double d = dp(mag);
        ws.vx[i] = d * gx;
        ws.vy[i] = d * gy;
    }
    divergence(ws.vx, ws.vy, out.regularization);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out.regularization[i] = p.mu * out.regularization[i];
        out.area[i] = p.area * edge[i] * ws.dirac[i];
    }

    if (p.ed == 0.0) {
        std::fill(out.ed.values().begin(), out.ed.values().end(), 0.0);
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double s = std::max(ws.mag[i], p.grad_floor);
        ws.vx[i] = ws.dirac[i] * ws.gx[i] / s;
        ws.vy[i] = ws.dirac[i] * ws.gy[i] / s;
    }
    divergence(ws.vx, ws.vy, out.ed);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        out.ed[i] = p.ed * (out.ed[i] - dirac_derivative(phi[i], p.epsilon) * ws.mag[i]);
}

void apply(ScalarField& phi, const ForceTerms& t, double step)
{
    const auto n = static_cast<std::ptrdiff_t>(phi.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        phi[i] += step * (t.regularization[i] + t.area[i] + t.ed[i]);
}

}  // namespace parallel

}  // namespace clickmask::kernels
