#pragma once

#include <deque>
#include <optional>
#include <stdexcept>

#include "clickmask/grid.hpp"
#include "clickmask/imaging.hpp"
#include "clickmask/kernels.hpp"
#include "clickmask/levelset_math.hpp"

namespace clickmask {

/// Negative = interior.
class LevelSetField : public ScalarField {
public:
    using ScalarField::ScalarField;
    LevelSetField() = default;
    explicit LevelSetField(ScalarField f) : ScalarField(std::move(f)) {}
};

struct EvolutionParams {
    double c0 = 1.0;
    double i = 50.0 / 255.0;          // seed threshold on normalized intensity
    double mu = 0.2;
    double alpha = 1.5;               // -0.1 is the documented alternative
    std::optional<double> beta;       // unset: 10 * delta
    double delta = 1e-3;
    double epsilon = 1.5;
    double dt = 1.0;
    int band_radius = 3;
    int max_iters = 300;
    int stall_window = 10;
    int osc_window = 20;

    // Edge indicator: g = 1 / (1 + |grad(scale * G_sigma * I)|^2).
    double edge_sigma = 1.5;
    double edge_scale = 50.0;

    // Sign used when c1 equals the running maximum: -1 expand, 0 hold (no
    // area force), +1 shrink.
    int tie_sign = 1;

    // Explicit-step budget: each iteration is split into substeps so that
    // dt_sub * ((beta*e + |alpha|) * dirac(0) + mu) <= cfl.
    double cfl = 0.25;
    double grad_floor = 1e-8;

    // Ablation switches.
    bool use_ed = true;
    bool signed_coefficient = true;   // false: sign fixed at +1

    double effective_beta() const noexcept { return beta.value_or(10.0 * delta); }

    /// Throws std::invalid_argument naming the violated invariant.
    void validate() const;
};

struct RegionStats {
    double c1 = 0.0;
    double c2 = 0.0;
    std::size_t interior_area = 0;
    std::size_t band_area = 0;
};

class SeedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    /// Window the seeding was attempted on, filled in by callers that crop.
    std::optional<RoiSpec> roi;
};

/// No pixel of the ROI exceeds the threshold.
class NoSeedPixels : public SeedError {
public:
    NoSeedPixels() : SeedError("no pixel exceeds the seed threshold") {}
};

/// Every pixel of the ROI exceeds the threshold.
class AllSeedPixels : public SeedError {
public:
    AllSeedPixels() : SeedError("every pixel exceeds the seed threshold") {}
};

struct MaskSnapshot {
    BinaryMask mask;
    LevelSetField phi;
    RegionStats stats;
    int iteration = 0;
};

struct EvolutionState {
    LevelSetField phi;
    RegionStats stats;     // of `phi`
    int iteration = 0;
    double c1max = 0.0;
    std::deque<MaskSnapshot> mask_history;   // newest last, at most osc_window
    int unchanged_run = 0;
    bool converged = false;
    bool oscillating = false;
    int last_sign = 0;      // signed coefficient used by the last step
    int last_substeps = 0;
};

struct EvolutionResult {
    LevelSetField phi;
    RegionStats stats;
    int iterations = 0;
    bool converged = false;
    bool oscillating = false;
};

struct EnergyBreakdown {
    double total = 0.0;
    double regularization = 0.0;   // mu * R
    double area = 0.0;             // alpha * sgn * A
    double ed = 0.0;               // beta * e * sum(dirac(phi) |grad phi|)
};

enum class Backend { serial, parallel };

LevelSetField init_lsf(const GrayImage& roi, const EvolutionParams& params);

RegionStats region_stats(const GrayImage& roi, const LevelSetField& phi, int band_radius);

double ed_weight(const RegionStats& stats, double delta);

/// 1 / (1 + |grad I|^2) on the raw normalized image.
ScalarField edge_indicator(const GrayImage& roi);
ScalarField edge_indicator(const GrayImage& roi, double sigma, double scale);

/// +1 if c1 > c1max, -1 if below, `tie_sign` on equality; always +1 when the
/// signed coefficient is disabled.
int signed_coefficient(double c1, double c1max, const EvolutionParams& params);

/// Weights with the signed coefficient and ED weight frozen.
kernels::ForceParams force_params(const EvolutionParams& params, int sign, double e);

/// Discrete energy with frozen coefficients; the force of `kernels::force_terms`
/// with the same parameters is its exact negative gradient.
EnergyBreakdown energy(const LevelSetField& phi, const ScalarField& edge,
                       const kernels::ForceParams& weights);

/// Energy with sign and ED weight derived from `phi` and `c1max`.
EnergyBreakdown energy(const LevelSetField& phi, const GrayImage& roi,
                       const EvolutionParams& params, double c1max);

/// Right-hand side of the flow (sum of the three force terms).
ScalarField flow(const LevelSetField& phi, const ScalarField& edge,
                 const kernels::ForceParams& weights, Backend backend = Backend::parallel);

EvolutionState initial_state(const GrayImage& roi, LevelSetField phi, const EvolutionParams& params);

/// One iteration. `edge` must be `edge_indicator(roi, params.edge_sigma, params.edge_scale)`.
EvolutionState evolution_step(EvolutionState state, const GrayImage& roi, const ScalarField& edge,
                              const EvolutionParams& params, Backend backend = Backend::parallel);
EvolutionState evolution_step(EvolutionState state, const GrayImage& roi,
                              const EvolutionParams& params);

EvolutionResult evolve(const GrayImage& roi, const EvolutionParams& params,
                       Backend backend = Backend::parallel);

/// Evolution from a caller-supplied initial field.
EvolutionResult evolve_from(const GrayImage& roi, LevelSetField phi, const EvolutionParams& params,
                            Backend backend = Backend::parallel);

BinaryMask extract_mask(const LevelSetField& phi);

}  // namespace clickmask
