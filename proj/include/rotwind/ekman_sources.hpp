#pragma once

#include "rotwind/boundary_layers.hpp"
#include "rotwind/forcing.hpp"
#include "rotwind/spectral_field.hpp"

namespace rotwind {

/// |k_h'|^2/(2 sqrt2 a |k'|^2) sum_pm (1 pm lambda)/sqrt(1 -+ lambda) (1 pm i).
cplx pumping_coefficient_A(const TorusGeometry& g, const ModeIndex& k);

/// Diagonal multiplication by A_k.
SpectralField S_B_apply(const SpectralField& w);

/// Top pumping source at damping delta, slow time t, phases w, truncation N.
SpectralField S_T_delta(const WindStress& ws, double delta, double t, const PhasePoint& w,
                        int truncation);

/// delta -> 0 limit. Throws HypothesisError when a contributing mode has |lambda_k -+ 1| < h2_eta.
SpectralField S_T_limit(const WindStress& ws, double t, const PhasePoint& w, int truncation,
                        double h2_eta = 1e-6);

/// Phase average E[S_T] (only deterministic atoms survive).
SpectralField S_T_limit_mean(const WindStress& ws, double t, int truncation);

/// S_bar[c_B3, c_T3] from the almost-periodic means of the boundary fluxes.
SpectralField S_bar(const TorusGeometry& g, int truncation, const OscillatorySeries& cB,
                    const OscillatorySeries& cT, const LayerParams& p);

/// (1/theta) int_0^theta L(-tau) P[d_tau v + e3 ^ v] dtau with v the lift built from the fluxes.
/// Projections by Gauss-Legendre quadrature in z; tau by Gauss-Legendre panels.
SpectralField source_average_Stheta(const TorusGeometry& g, int truncation,
                                    const OscillatorySeries& cB, const OscillatorySeries& cT,
                                    const LayerParams& p, double theta,
                                    LiftProfile lift = LiftProfile::Linear,
                                    double panel_length = 0.5);

}  // namespace rotwind
