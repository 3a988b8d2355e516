#include "clickmask/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace clickmask {

namespace {

void require(bool ok, const char* message)
{
    if (!ok)
        throw std::invalid_argument(message);
}

}  // namespace

void EvolutionParams::validate() const
{
    require(c0 > 0.0, "c0 must be > 0");
    require(i >= 0.0 && i <= 1.0, "i must lie in [0,1]");
    require(std::isfinite(mu) && mu >= 0.0, "mu must be >= 0");
    require(std::isfinite(alpha), "alpha must be finite");
    require(delta > 0.0 && std::isfinite(delta), "delta must be > 0");
    require(effective_beta() >= 0.0 && std::isfinite(effective_beta()), "beta must be >= 0");
    require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be > 0");
    require(dt > 0.0 && std::isfinite(dt), "dt must be > 0");
    require(mu * dt < 0.25, "mu*dt must be < 0.25");
    require(band_radius >= 1, "band_radius must be >= 1");
    require(max_iters >= 0, "max_iters must be >= 0");
    require(stall_window >= 1, "stall_window must be >= 1");
    require(osc_window >= 2, "osc_window must be >= 2");
    require(edge_sigma >= 0.0 && std::isfinite(edge_sigma), "edge_sigma must be >= 0");
    require(edge_scale > 0.0 && std::isfinite(edge_scale), "edge_scale must be > 0");
    require(cfl > 0.0 && std::isfinite(cfl), "cfl must be > 0");
    require(grad_floor > 0.0, "grad_floor must be > 0");
    require(tie_sign >= -1 && tie_sign <= 1, "tie_sign must be -1, 0 or 1");
}

LevelSetField init_lsf(const GrayImage& roi, const EvolutionParams& params)
{
    if (roi.empty())
        throw std::invalid_argument("init_lsf: empty roi");
    LevelSetField phi(roi.width(), roi.height(), params.c0);
    std::size_t seeds = 0;
    for (std::size_t k = 0; k < roi.size(); ++k) {
        if (roi[k] > params.i) {
            phi[k] = -params.c0;
            ++seeds;
        }
    }
    if (seeds == 0)
        throw NoSeedPixels();
    if (seeds == roi.size())
        throw AllSeedPixels();
    return phi;
}

BinaryMask extract_mask(const LevelSetField& phi)
{
    BinaryMask m(phi.width(), phi.height());
    for (std::size_t k = 0; k < phi.size(); ++k)
        m[k] = phi[k] < 0.0 ? 1 : 0;
    return m;
}

RegionStats region_stats(const GrayImage& roi, const LevelSetField& phi, int band_radius)
{
    require_same_shape(roi, phi, "region_stats");
    const BinaryMask inside = extract_mask(phi);
    const BinaryMask grown = dilate(inside, band_radius);
    RegionStats s;
    double sum1 = 0.0, sum2 = 0.0;
    for (std::size_t k = 0; k < roi.size(); ++k) {
        if (inside[k]) {
            sum1 += roi[k];
            ++s.interior_area;
        } else if (grown[k]) {
            sum2 += roi[k];
            ++s.band_area;
        }
    }
    if (s.interior_area > 0)
        s.c1 = sum1 / static_cast<double>(s.interior_area);
    if (s.band_area > 0)
        s.c2 = sum2 / static_cast<double>(s.band_area);
    return s;
}

double ed_weight(const RegionStats& stats, double delta)
{
    const double d = stats.c1 - stats.c2;
    return 1.0 / (d * d + delta);
}

ScalarField edge_indicator(const GrayImage& roi)
{
    return edge_indicator(roi, 0.0, 1.0);
}

ScalarField edge_indicator(const GrayImage& roi, double sigma, double scale)
{
    ScalarField smooth = gaussian_blur(roi, sigma);
    for (double& v : smooth.values())
        v *= scale;
    const Gradient g = gradient(smooth);
    ScalarField out(roi.width(), roi.height());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = 1.0 / (1.0 + g.gx[k] * g.gx[k] + g.gy[k] * g.gy[k]);
    return out;
}

int signed_coefficient(double c1, double c1max, const EvolutionParams& params)
{
    if (!params.signed_coefficient)
        return 1;
    if (c1 > c1max)
        return 1;
    if (c1 < c1max)
        return -1;
    return params.tie_sign;
}

kernels::ForceParams force_params(const EvolutionParams& params, int sign, double e)
{
    kernels::ForceParams f;
    f.mu = params.mu;
    f.area = params.alpha * sign;
    f.ed = params.use_ed ? params.effective_beta() * e : 0.0;
    f.epsilon = params.epsilon;
    f.grad_floor = params.grad_floor;
    return f;
}

EnergyBreakdown energy(const LevelSetField& phi, const ScalarField& edge,
                       const kernels::ForceParams& w)
{
    require_same_shape(phi, edge, "energy");
    ScalarField gx, gy;
    kernels::serial::gradient(phi, gx, gy);
    double r = 0.0, a = 0.0, l = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
        const double mag = std::sqrt(gx[k] * gx[k] + gy[k] * gy[k]);
        r += double_well(mag);
        a += heaviside(-phi[k], w.epsilon) * edge[k];
        l += dirac(phi[k], w.epsilon) * mag;
    }
    EnergyBreakdown e;
    e.regularization = w.mu * r;
    e.area = w.area * a;
    e.ed = w.ed * l;
    e.total = e.regularization + e.area + e.ed;
    return e;
}

EnergyBreakdown energy(const LevelSetField& phi, const GrayImage& roi,
                       const EvolutionParams& params, double c1max)
{
    const RegionStats s = region_stats(roi, phi, params.band_radius);
    const int sign = signed_coefficient(s.c1, c1max, params);
    const ScalarField edge = edge_indicator(roi, params.edge_sigma, params.edge_scale);
    return energy(phi, edge, force_params(params, sign, ed_weight(s, params.delta)));
}

ScalarField flow(const LevelSetField& phi, const ScalarField& edge,
                 const kernels::ForceParams& weights, Backend backend)
{
    kernels::Workspace ws;
    kernels::ForceTerms terms;
    if (backend == Backend::serial)
        kernels::serial::force_terms(phi, edge, weights, ws, terms);
    else
        kernels::parallel::force_terms(phi, edge, weights, ws, terms);
    ScalarField out(phi.width(), phi.height());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = terms.regularization[k] + terms.area[k] + terms.ed[k];
    return out;
}

EvolutionState initial_state(const GrayImage& roi, LevelSetField phi, const EvolutionParams& params)
{
    require_same_shape(roi, phi, "initial_state");
    EvolutionState s;
    s.stats = region_stats(roi, phi, params.band_radius);
    s.c1max = s.stats.c1;
    s.mask_history.push_back({extract_mask(phi), phi, s.stats, 0});
    s.phi = std::move(phi);
    return s;
}

EvolutionState evolution_step(EvolutionState state, const GrayImage& roi, const ScalarField& edge,
                              const EvolutionParams& params, Backend backend)
{
    require_same_shape(roi, state.phi, "evolution_step");
    const RegionStats before = state.stats;
    const int sign = signed_coefficient(before.c1, state.c1max, params);
    const kernels::ForceParams w = force_params(params, sign, ed_weight(before, params.delta));

    const double stiffness = (std::abs(w.ed) + std::abs(w.area)) * dirac(0.0, w.epsilon) + w.mu;
    const int substeps = std::max(1, static_cast<int>(std::ceil(params.dt * stiffness / params.cfl)));
    const double step = params.dt / substeps;

    kernels::Workspace ws;
    kernels::ForceTerms terms;
    for (int k = 0; k < substeps; ++k) {
        if (backend == Backend::serial) {
            kernels::serial::force_terms(state.phi, edge, w, ws, terms);
            kernels::serial::apply(state.phi, terms, step);
        } else {
            kernels::parallel::force_terms(state.phi, edge, w, ws, terms);
            kernels::parallel::apply(state.phi, terms, step);
        }
    }

    state.c1max = std::max(state.c1max, before.c1);
    state.iteration += 1;
    state.last_sign = sign;
    state.last_substeps = substeps;
    state.stats = region_stats(roi, state.phi, params.band_radius);

    BinaryMask mask = extract_mask(state.phi);
    auto& hist = state.mask_history;
    if (!hist.empty() && hist.back().mask == mask) {
        if (++state.unchanged_run >= params.stall_window)
            state.converged = true;
    } else {
        state.unchanged_run = 0;
        // A match further back than the previous iterate is a cycle of period >= 2.
        for (std::size_t k = 0; k + 1 < hist.size(); ++k) {
            if (hist[k].mask == mask) {
                state.oscillating = true;
                break;
            }
        }
    }
    hist.push_back({std::move(mask), state.phi, state.stats, state.iteration});
    while (hist.size() > static_cast<std::size_t>(params.osc_window))
        hist.pop_front();
    return state;
}

EvolutionState evolution_step(EvolutionState state, const GrayImage& roi,
                              const EvolutionParams& params)
{
    const ScalarField edge = edge_indicator(roi, params.edge_sigma, params.edge_scale);
    return evolution_step(std::move(state), roi, edge, params, Backend::parallel);
}

EvolutionResult evolve(const GrayImage& roi, const EvolutionParams& params, Backend backend)
{
    params.validate();
    return evolve_from(roi, init_lsf(roi, params), params, backend);
}

EvolutionResult evolve_from(const GrayImage& roi, LevelSetField phi, const EvolutionParams& params,
                            Backend backend)
{
    params.validate();
    const ScalarField edge = edge_indicator(roi, params.edge_sigma, params.edge_scale);
    EvolutionState state = initial_state(roi, std::move(phi), params);
    while (state.iteration < params.max_iters && !state.converged && !state.oscillating)
        state = evolution_step(std::move(state), roi, edge, params, backend);

    EvolutionResult out;
    out.iterations = state.iteration;
    out.converged = state.converged;
    out.oscillating = state.oscillating;
    if (state.oscillating) {
        // The cycle brackets the target; keep the member with the brightest interior.
        const MaskSnapshot* best = &state.mask_history.back();
        for (const auto& snap : state.mask_history)
            if (snap.stats.interior_area > 0 &&
                (best->stats.interior_area == 0 || snap.stats.c1 > best->stats.c1))
                best = &snap;
        out.phi = best->phi;
        out.stats = best->stats;
    } else {
        out.phi = std::move(state.phi);
        out.stats = state.stats;
    }
    return out;
}

}  // namespace clickmask
