//! Thresholds and trace maps attached to the flux bound at the origin.
//!
//! A bound F on the flux through x = 0 singles out, on each marker curve,
//! the states whose flux equals F. Two speed thresholds bracket where such
//! states exist in the congested region:
//!
//! * `v_lo` - speed of the flux-F state on the upper marker curve w_plus;
//! * `v_hi` - speed of the flux-F state on the lower curve w_minus, capped
//!   at the free-flow speed V once F reaches the critical free flux.
//!
//! Between them the map `flux_marker` (v -> v + p(F/v)) returns the marker
//! of the flux-F state travelling at speed v; it is strictly decreasing and
//! strictly convex, so its inverse `speed_at_marker` is computed by
//! bisection. A marker threshold `w_cut` marks the heaviest free state with
//! flux at most F.
//!
//! The trace maps `upstream_trace` and `downstream_trace` give the states
//! glued to the left and right of the origin by the constrained Riemann
//! solver whenever the bound is active; both have flux exactly F.

use crate::model::{middle_state, marker_companion, MarkerEdge, ModelParams, Phase, State};
use crate::numerics::bisect;
use crate::{Error, Result};
use serde::Serialize;

/// Absolute tolerance for snapping a flux bound onto the regime landmarks.
pub const REGIME_TOL: f64 = 1e-12;

/// Position of the flux bound relative to the critical fluxes of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FluxRegime {
    /// F = 0: the gate is shut.
    Zero,
    /// 0 < F below the critical free flux V rho_minus.
    BelowCritical,
    /// Between the critical free flux and the maximal flux.
    BelowMax,
    /// F equals the maximal flux V rho_plus: the bound never binds.
    AtMax,
}

/// Flux bound together with its derived thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintData {
    /// The bound F itself.
    pub flux_bound: f64,
    pub regime: FluxRegime,
    /// Speed of the flux-F state on the w_plus curve (0 when F = 0).
    pub v_lo: f64,
    /// Speed of the flux-F state on the w_minus curve, capped at V.
    pub v_hi: f64,
    /// Marker of the heaviest trace state on the downstream free branch.
    pub w_cut: f64,
}

impl ConstraintData {
    pub fn new(flux_bound: f64, params: &ModelParams) -> Result<Self> {
        if !flux_bound.is_finite() {
            return Err(Error::InvalidFluxBound("non-finite bound".into()));
        }
        let mut f = flux_bound;
        if f.abs() <= REGIME_TOL {
            f = 0.0;
        }
        if (f - params.flux_lower).abs() <= REGIME_TOL {
            f = params.flux_lower;
        }
        if (f - params.flux_upper).abs() <= REGIME_TOL {
            f = params.flux_upper;
        }
        if f < 0.0 || f > params.flux_upper {
            return Err(Error::InvalidFluxBound(format!(
                "F = {} outside [0, {}] (maximal flux V rho_plus)",
                f, params.flux_upper
            )));
        }

        let p = &params.pressure;
        let v_max = params.v_max;
        // Bisection bracket for both thresholds: at v = F / rho_max the
        // flux-F state is the fully jammed one (marker above w_plus), while
        // at v = V its marker falls below the relevant edge.
        let lower_bracket = f / params.rho_max;
        let data = if f == 0.0 {
            ConstraintData {
                flux_bound: 0.0,
                regime: FluxRegime::Zero,
                v_lo: 0.0,
                v_hi: 0.0,
                w_cut: params.w_floor(),
            }
        } else if f < params.flux_lower {
            let v_hi = bisect(
                |v| v + p.value(f / v) - params.w_minus,
                lower_bracket,
                v_max,
            );
            let v_lo = bisect(
                |v| v + p.value(f / v) - params.w_plus,
                lower_bracket,
                v_max,
            );
            ConstraintData {
                flux_bound: f,
                regime: FluxRegime::BelowCritical,
                v_lo,
                v_hi,
                w_cut: params.w_minus - 1.0 + f / params.flux_lower,
            }
        } else if f < params.flux_upper {
            let v_lo = bisect(
                |v| v + p.value(f / v) - params.w_plus,
                lower_bracket,
                v_max,
            );
            let mut w_cut = v_max + p.value(f / v_max);
            // Rounding in f / V can leave w_cut an ulp away from the band
            // edge it must coincide with when f is a critical flux.
            if (w_cut - params.w_minus).abs() <= REGIME_TOL {
                w_cut = params.w_minus;
            }
            ConstraintData {
                flux_bound: f,
                regime: FluxRegime::BelowMax,
                v_lo,
                v_hi: v_max,
                w_cut,
            }
        } else {
            ConstraintData {
                flux_bound: f,
                regime: FluxRegime::AtMax,
                v_lo: v_max,
                v_hi: v_max,
                w_cut: params.w_plus,
            }
        };
        Ok(data)
    }

    /// Marker of the flux-F state travelling at speed v. Defined for
    /// v in [v_lo, v_hi]; strictly decreasing and strictly convex there.
    pub fn flux_marker(&self, v: f64, params: &ModelParams) -> Result<f64> {
        if self.regime == FluxRegime::Zero {
            return Err(Error::OutOfBracket(
                "flux marker undefined for a zero bound".into(),
            ));
        }
        if v < self.v_lo - 1e-12 || v > self.v_hi + 1e-12 {
            return Err(Error::OutOfBracket(format!(
                "speed {} outside [{}, {}]",
                v, self.v_lo, self.v_hi
            )));
        }
        // Exact values on the bracket edges keep grid nodes consistent.
        if v == self.v_lo {
            return Ok(params.w_plus);
        }
        if v == self.v_hi {
            return Ok(match self.regime {
                FluxRegime::BelowCritical => params.w_minus,
                _ => self.w_cut,
            });
        }
        let v = v.clamp(self.v_lo, self.v_hi);
        Ok(v + params.pressure.value(self.flux_bound / v))
    }

    /// Inverse of [`flux_marker`]: the speed of the flux-F state with the
    /// given marker. Defined for markers between max(w_minus, w_cut) and
    /// w_plus.
    pub fn speed_at_marker(&self, w: f64, params: &ModelParams) -> Result<f64> {
        if self.regime == FluxRegime::Zero {
            return Err(Error::OutOfBracket(
                "flux marker undefined for a zero bound".into(),
            ));
        }
        let w_low = params.w_minus.max(self.w_cut);
        if w < w_low - 1e-12 || w > params.w_plus + 1e-12 {
            return Err(Error::OutOfBracket(format!(
                "marker {} outside [{}, {}]",
                w, w_low, params.w_plus
            )));
        }
        if w == params.w_plus {
            return Ok(self.v_lo);
        }
        if w == w_low {
            return Ok(self.v_hi);
        }
        let w = w.clamp(w_low, params.w_plus);
        let f = self.flux_bound;
        Ok(bisect(
            |v| v + params.pressure.value(f / v) - w,
            self.v_lo,
            self.v_hi,
        ))
    }

    /// Trace state glued upstream (left) of the origin when the bound is
    /// active, as a function of the extended marker carried by the left
    /// datum. Its flux is exactly F. Left-continuous in w; continuous iff
    /// the bound is at least the critical free flux.
    pub fn upstream_trace(&self, w: f64, params: &ModelParams) -> Result<State> {
        if self.regime == FluxRegime::Zero {
            // Stopped traffic of the same (capped) marker; vacuum stays put.
            return if w <= params.w_floor() {
                State::from_vw(params.v_max, params.w_floor(), params)
            } else if w <= params.w_minus {
                State::from_vw(0.0, params.w_minus, params)
            } else {
                State::from_vw(0.0, w, params)
            };
        }
        let cut = params.w_minus.max(self.w_cut);
        if w > cut {
            State::from_vw(self.speed_at_marker(w, params)?, w, params)
        } else if w > self.w_cut {
            // Only reachable when w_cut < w_minus, i.e. below the critical
            // free flux.
            State::from_vw(self.v_hi, params.w_minus, params)
        } else {
            State::from_vw(params.v_max, self.w_cut, params)
        }
    }

    /// Trace state glued downstream (right) of the origin when the bound is
    /// active, as a function of the speed of the right datum. Its flux is
    /// exactly F.
    pub fn downstream_trace(&self, v: f64, params: &ModelParams) -> Result<State> {
        if self.regime == FluxRegime::Zero {
            return if v > 0.0 {
                State::from_vw(params.v_max, params.w_floor(), params)
            } else {
                State::from_vw(0.0, params.w_plus, params)
            };
        }
        if v > self.v_hi {
            State::from_vw(params.v_max, self.w_cut, params)
        } else if v >= self.v_lo {
            State::from_vw(v, self.flux_marker(v, params)?, params)
        } else {
            State::from_vw(self.v_lo, params.w_plus, params)
        }
    }

    /// Whether the unconstrained Riemann solution of the pair already
    /// respects the bound at the origin, so no non-classical shock is
    /// needed. Equivalent to the flux of the unconstrained solution traces
    /// at x = 0 staying at most F.
    pub fn admits_unconstrained(&self, u_l: State, u_r: State, params: &ModelParams) -> bool {
        // Ties go to the admissible side: states constructed to carry the
        // bound flux exactly (lattice nodes on the threshold curve, trace
        // states) must not flip into the constrained branch by rounding.
        let f = self.flux_bound + REGIME_TOL;
        if u_l.in_free(params) && u_r.in_free(params) && u_l.flux(params) <= f {
            return true;
        }
        if u_l.in_congested(params) && middle_state(u_l, u_r, params).flux(params) <= f {
            return true;
        }
        if u_l.phase(params) == Phase::FreeLow && u_r.phase(params) == Phase::Congested {
            let cross = marker_companion(u_r, MarkerEdge::Lower, params).flux(params);
            if u_l.flux(params).min(cross) <= f {
                return true;
            }
        }
        false
    }
}
