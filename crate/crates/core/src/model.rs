//! Model data: pressure laws, parameters and admissible states.
//!
//! A state u = (rho, v) of the two-phase model belongs to one of
//!
//! * the free phase, where v = V and the density stays below the critical
//!   value at which congestion sets in, or
//! * the congested phase, described by the Lagrangian marker w = v + p(rho)
//!   taking values in the band [w_minus, w_plus].
//!
//! The two phases overlap on a metastable band: states with v = V whose
//! marker already lies in [w_minus, w_plus]. The canonical representation
//! used throughout the crate is the pair (v, w), with w extended to free
//! states below the band by the affine formula
//!
//! ```text
//! w = w_minus - 1 + rho / rho_minus,        rho in [0, rho_minus),
//! ```
//!
//! so that w runs over [w_minus - 1, w_plus] and determines rho uniquely
//! together with v. Densities are always derived, never stored.
//!
//! The pressure p must satisfy p(0) = 0 (power laws), p' > 0 and
//! 2 p'(rho) + p''(rho) rho > 0, plus the speed condition v < p'(rho) rho on
//! the congested region, which for a power law reads (gamma + 1) V < gamma
//! w_minus and for the logarithmic law V < V_ref.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance used when snapping nearly-admissible coordinates onto the
/// domain boundary during state construction.
pub const DOMAIN_TOL: f64 = 1e-10;

/// Pressure law of the congested phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PressureLaw {
    /// p(rho) = rho^gamma, gamma > 0.
    PowerLaw { gamma: f64 },
    /// p(rho) = v_ref * ln(rho / rho_max). Only evaluated on the congested
    /// density range, which stays strictly positive.
    Logarithmic { v_ref: f64, rho_max: f64 },
}

impl PressureLaw {
    pub fn value(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::PowerLaw { gamma } => rho.powf(gamma),
            PressureLaw::Logarithmic { v_ref, rho_max } => v_ref * (rho / rho_max).ln(),
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::PowerLaw { gamma } => gamma * rho.powf(gamma - 1.0),
            PressureLaw::Logarithmic { v_ref, .. } => v_ref / rho,
        }
    }

    pub fn second_derivative(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::PowerLaw { gamma } => gamma * (gamma - 1.0) * rho.powf(gamma - 2.0),
            PressureLaw::Logarithmic { v_ref, .. } => -v_ref / (rho * rho),
        }
    }

    /// Inverse of the pressure, in closed form for both laws.
    pub fn inverse(&self, x: f64) -> f64 {
        match *self {
            PressureLaw::PowerLaw { gamma } => x.powf(1.0 / gamma),
            PressureLaw::Logarithmic { v_ref, rho_max } => rho_max * (x / v_ref).exp(),
        }
    }
}

/// Model parameters together with the derived landmark quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Maximal (free-flow) speed V.
    pub v_max: f64,
    /// Lower edge w_minus of the congested marker band.
    pub w_minus: f64,
    /// Upper edge w_plus of the congested marker band.
    pub w_plus: f64,
    pub pressure: PressureLaw,
    /// Critical density where the free phase meets the congested one.
    pub rho_minus: f64,
    /// Largest density of a metastable state.
    pub rho_plus: f64,
    /// Maximal density of the model, attained by stopped traffic at w_plus.
    pub rho_max: f64,
    /// Flux of the metastable state on the lower marker edge, V * rho_minus.
    pub flux_lower: f64,
    /// Largest flux of the model, V * rho_plus.
    pub flux_upper: f64,
}

impl ModelParams {
    pub fn new(v_max: f64, w_minus: f64, w_plus: f64, pressure: PressureLaw) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(v_max.is_finite() && w_minus.is_finite() && w_plus.is_finite()) {
            return bad("non-finite parameter".into());
        }
        if v_max <= 0.0 {
            return bad(format!("maximal speed must be positive, got {v_max}"));
        }
        if w_minus >= w_plus {
            return bad(format!(
                "marker band is empty: w_minus = {w_minus}, w_plus = {w_plus}"
            ));
        }
        match pressure {
            PressureLaw::PowerLaw { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return bad(format!("power-law exponent must be positive, got {gamma}"));
                }
                // Characteristic speed condition on the congested region.
                if (gamma + 1.0) * v_max >= gamma * w_minus {
                    return bad(format!(
                        "speed condition fails: need (gamma + 1) V < gamma w_minus, \
                         got ({} + 1) * {} >= {} * {}",
                        gamma, v_max, gamma, w_minus
                    ));
                }
            }
            PressureLaw::Logarithmic { v_ref, rho_max } => {
                if !(v_ref > 0.0 && rho_max > 0.0) {
                    return bad(format!(
                        "logarithmic law needs positive v_ref and rho_max, got {v_ref}, {rho_max}"
                    ));
                }
                if v_max >= v_ref {
                    return bad(format!(
                        "speed condition fails: need V < v_ref, got {v_max} >= {v_ref}"
                    ));
                }
            }
        }
        let rho_minus = pressure.inverse(w_minus - v_max);
        let rho_plus = pressure.inverse(w_plus - v_max);
        let rho_max_all = pressure.inverse(w_plus);
        if rho_minus.is_nan() || rho_minus <= 0.0 {
            return bad(format!(
                "critical density must be positive; w_minus - V = {}",
                w_minus - v_max
            ));
        }
        Ok(ModelParams {
            v_max,
            w_minus,
            w_plus,
            pressure,
            rho_minus,
            rho_plus,
            rho_max: rho_max_all,
            flux_lower: v_max * rho_minus,
            flux_upper: v_max * rho_plus,
        })
    }

    /// Extended marker floor w_minus - 1 carried by the vacuum.
    pub fn w_floor(&self) -> f64 {
        self.w_minus - 1.0
    }
}

/// Phase of an admissible state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    /// Strictly free: v = V, density below the critical one.
    FreeLow,
    /// Overlap of the phases: v = V with marker inside the band.
    Metastable,
    /// Strictly congested: v < V.
    Congested,
}

/// Admissible state in the canonical (v, w) representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    v: f64,
    w: f64,
}

impl State {
    /// Builds a state from speed and extended marker, snapping coordinates
    /// within [`DOMAIN_TOL`] of the admissible region onto it.
    pub fn from_vw(v: f64, w: f64, params: &ModelParams) -> Result<Self> {
        if !(v.is_finite() && w.is_finite()) {
            return Err(Error::OutsideDomain(format!("non-finite state ({v}, {w})")));
        }
        let mut v = v;
        let mut w = w;
        if (v - params.v_max).abs() <= DOMAIN_TOL {
            v = params.v_max;
        }
        if v.abs() <= DOMAIN_TOL {
            v = 0.0;
        }
        for snap in [params.w_floor(), params.w_minus, params.w_plus] {
            if (w - snap).abs() <= DOMAIN_TOL {
                w = snap;
            }
        }
        if !(0.0..=params.v_max).contains(&v) {
            return Err(Error::OutsideDomain(format!(
                "speed {} outside [0, {}]",
                v, params.v_max
            )));
        }
        if w < params.w_floor() || w > params.w_plus {
            return Err(Error::OutsideDomain(format!(
                "marker {} outside [{}, {}]",
                w,
                params.w_floor(),
                params.w_plus
            )));
        }
        if w < params.w_minus && v != params.v_max {
            return Err(Error::OutsideDomain(format!(
                "free state with marker {} must move at V = {}, got speed {}",
                w, params.v_max, v
            )));
        }
        Ok(State { v, w })
    }

    /// Builds a state from density and speed.
    pub fn from_rho_v(rho: f64, v: f64, params: &ModelParams) -> Result<Self> {
        if !(rho.is_finite() && v.is_finite()) {
            return Err(Error::OutsideDomain(format!("non-finite state ({rho}, {v})")));
        }
        let rho = if rho.abs() <= DOMAIN_TOL { 0.0 } else { rho };
        if rho < 0.0 {
            return Err(Error::OutsideDomain(format!("negative density {rho}")));
        }
        let v = if (v - params.v_max).abs() <= DOMAIN_TOL {
            params.v_max
        } else {
            v
        };
        if v == params.v_max && rho < params.rho_minus {
            // Strictly free: marker extends affinely down to the vacuum.
            let w = params.w_minus - 1.0 + rho / params.rho_minus;
            return State::from_vw(v, w, params);
        }
        if rho == 0.0 {
            return Err(Error::OutsideDomain(format!(
                "vacuum must move at V = {}, got speed {}",
                params.v_max, v
            )));
        }
        State::from_vw(v, v + params.pressure.value(rho), params)
    }

    pub fn speed(&self) -> f64 {
        self.v
    }

    /// Extended Lagrangian marker.
    pub fn marker(&self) -> f64 {
        self.w
    }

    /// Marker capped from below by the band edge: max(w_minus, w).
    pub fn capped_marker(&self, params: &ModelParams) -> f64 {
        self.w.max(params.w_minus)
    }

    /// Density, derived from the canonical coordinates.
    pub fn rho(&self, params: &ModelParams) -> f64 {
        if self.w >= params.w_minus {
            params.pressure.inverse(self.w - self.v)
        } else {
            (self.w - params.w_minus + 1.0) * params.rho_minus
        }
    }

    /// Density flux rho * v.
    pub fn flux(&self, params: &ModelParams) -> f64 {
        self.rho(params) * self.v
    }

    pub fn phase(&self, params: &ModelParams) -> Phase {
        if self.w < params.w_minus {
            Phase::FreeLow
        } else if self.v == params.v_max {
            Phase::Metastable
        } else {
            Phase::Congested
        }
    }

    /// Free phase membership (strictly free or metastable).
    pub fn in_free(&self, params: &ModelParams) -> bool {
        self.v == params.v_max
    }

    /// Congested phase membership (metastable or strictly congested).
    pub fn in_congested(&self, params: &ModelParams) -> bool {
        self.w >= params.w_minus
    }

    pub fn is_vacuum(&self, params: &ModelParams) -> bool {
        self.w == params.w_floor()
    }

    /// Speed of the genuinely nonlinear characteristic family at this
    /// state: v - p'(rho) rho on the congested region (negative there by
    /// the speed condition), V on the strictly free one where the dynamics
    /// reduce to a scalar law with linear flux.
    pub fn characteristic_speed(&self, params: &ModelParams) -> f64 {
        if self.phase(params) == Phase::FreeLow {
            params.v_max
        } else {
            let rho = self.rho(params);
            self.v - params.pressure.derivative(rho) * rho
        }
    }

    /// Largest distance between the canonical coordinates of two states.
    pub fn coord_distance(&self, other: &State) -> f64 {
        (self.v - other.v).abs().max((self.w - other.w).abs())
    }
}

/// Flux along the first-family Lax curve of marker w,
/// rho |-> (w - p(rho)) rho, restricted to its admissible density range
/// [p^-1(w - V), p^-1(w)]. Strictly concave and strictly decreasing there.
pub fn lax_flux(w: f64, rho: f64, params: &ModelParams) -> Result<f64> {
    let lo = params.pressure.inverse(w - params.v_max);
    let hi = params.pressure.inverse(w);
    if rho < lo - DOMAIN_TOL || rho > hi + DOMAIN_TOL {
        return Err(Error::OutOfBracket(format!(
            "density {rho} outside the Lax-curve range [{lo}, {hi}] of marker {w}"
        )));
    }
    Ok((w - params.pressure.value(rho)) * rho)
}

/// Which edge of the marker band to project onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerEdge {
    Lower,
    Upper,
}

/// Metastable state with the same marker as the given congested state:
/// the endpoint of its first-family Lax curve on the phase boundary.
pub fn free_companion(u: State, params: &ModelParams) -> Result<State> {
    if !u.in_congested(params) {
        return Err(Error::OutsideDomain(format!(
            "free companion needs a congested state, got marker {}",
            u.marker()
        )));
    }
    State::from_vw(params.v_max, u.marker(), params)
}

/// State with the same speed as u on an extremal marker curve.
pub fn marker_companion(u: State, edge: MarkerEdge, params: &ModelParams) -> State {
    let w = match edge {
        MarkerEdge::Lower => params.w_minus,
        MarkerEdge::Upper => params.w_plus,
    };
    State { v: u.speed(), w }
}

/// Intermediate state of the Riemann solution: speed of the right datum on
/// the (capped) marker curve of the left one. Always admissible; when the
/// right speed is V the result sits on the metastable band.
pub fn middle_state(u_l: State, u_r: State, params: &ModelParams) -> State {
    State {
        v: u_r.speed(),
        w: u_l.capped_marker(params),
    }
}

/// Rankine-Hugoniot speed of the jump between two states.
pub fn jump_speed(u_l: State, u_r: State, params: &ModelParams) -> Result<f64> {
    let rho_l = u_l.rho(params);
    let rho_r = u_r.rho(params);
    if (rho_l - rho_r).abs() < 1e-14 {
        return Err(Error::DegenerateSlope);
    }
    Ok((u_r.flux(params) - u_l.flux(params)) / (rho_r - rho_l))
}
