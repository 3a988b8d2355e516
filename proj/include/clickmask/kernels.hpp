#pragma once

#include "clickmask/grid.hpp"

// Grid stencils behind the level-set update. `serial` is a direct cell-by-cell
// transcription kept as the reference; `parallel` splits rows across OpenMP
// threads and special-cases the borders. Both perform the same floating-point
// operations per cell, so their outputs compare equal bit for bit.

namespace clickmask::kernels {

struct ForceParams {
    double mu = 0.2;          // regularizer weight
    double area = 0.0;        // alpha * signed coefficient
    double ed = 0.0;          // beta * e
    double epsilon = 1.5;
    double grad_floor = 1e-8;
};

/// Each term already carries its weight; the total force is their sum.
struct ForceTerms {
    ScalarField regularization;
    ScalarField area;
    ScalarField ed;
};

/// Scratch buffers reused across iterations.
struct Workspace {
    ScalarField gx, gy, mag, vx, vy, dirac;
    void resize(int width, int height);
};

namespace serial {

void gradient(const ScalarField& f, ScalarField& gx, ScalarField& gy);

/// Negative adjoint of `gradient`. Equals the central-difference divergence in
/// the interior and differs only in the first and last row/column.
void divergence(const ScalarField& vx, const ScalarField& vy, ScalarField& out);

void force_terms(const ScalarField& phi, const ScalarField& edge, const ForceParams& p,
                 Workspace& ws, ForceTerms& out);

/// phi += step * (regularization + area + ed)
void apply(ScalarField& phi, const ForceTerms& terms, double step);

}  // namespace serial

namespace parallel {

void gradient(const ScalarField& f, ScalarField& gx, ScalarField& gy);
void divergence(const ScalarField& vx, const ScalarField& vy, ScalarField& out);
void force_terms(const ScalarField& phi, const ScalarField& edge, const ForceParams& p,
                 Workspace& ws, ForceTerms& out);
void apply(ScalarField& phi, const ForceTerms& terms, double step);

}  // namespace parallel

}  // namespace clickmask::kernels
