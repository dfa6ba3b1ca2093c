//! Exact and lattice-restricted Riemann solvers.
//!
//! A Riemann problem is a jump between two admissible states placed at the
//! origin; its solution is self-similar, a function of xi = x/t alone, and
//! is assembled here as a [`WaveFan`]: an ordered list of waves separating
//! constant states. The exact solver distinguishes four cases:
//!
//! * free to free - one contact discontinuity travelling at V;
//! * within the congested region - a wave of the genuinely nonlinear
//!   family (shock or rarefaction) to the middle state that carries the
//!   left marker at the right speed, then a contact discontinuity;
//! * congested to strictly-free - a rarefaction up to the free companion
//!   of the left state, then a contact discontinuity at V;
//! * strictly-free to congested (with speed below V) - a phase transition
//!   onto the lower marker curve, then a contact discontinuity. A phase
//!   transition out of the vacuum jumps directly to the right state.
//!
//! The constrained solver applies the unconstrained one whenever its trace
//! at the origin respects the flux bound; otherwise it glues the fan from
//! the left datum to the upstream trace (all speeds negative), a stationary
//! non-classical shock between the two trace states, and the fan from the
//! downstream trace to the right datum (all speeds positive).
//!
//! The lattice solvers replace every rarefaction by a fan of rarefaction
//! shocks through consecutive speed nodes at the same marker, each moving
//! at the chord speed of its endpoints; everything they emit stays on the
//! lattice. Profiles are evaluated right-continuously in xi; one-sided
//! traces are provided separately.

use crate::constraint::ConstraintData;
use crate::grid::Grid;
use crate::model::{
    free_companion, jump_speed, marker_companion, middle_state, MarkerEdge, ModelParams, Phase,
    State,
};
use crate::numerics::bisect;
use crate::{Error, Result};
use serde::Serialize;

/// Classification of a single wave in a fan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WaveKind {
    /// Contact discontinuity of the linearly degenerate family; its speed
    /// is the common speed of its endpoint states.
    Contact,
    /// Classical shock of the genuinely nonlinear family.
    Shock,
    /// Exact rarefaction of the genuinely nonlinear family, spread over a
    /// whole interval of characteristic speeds.
    Rarefaction,
    /// One lattice step of a discretised rarefaction.
    RarefactionShock,
    /// Jump between a strictly-free state and a congested one.
    PhaseTransition,
    /// Stationary jump at the origin between the two trace states of the
    /// flux bound.
    NonClassical,
}

impl WaveKind {
    /// Short label used in interaction names and output files.
    pub fn label(self) -> &'static str {
        match self {
            WaveKind::Contact => "CD",
            WaveKind::Shock => "S",
            WaveKind::Rarefaction => "R",
            WaveKind::RarefactionShock => "RS",
            WaveKind::PhaseTransition => "PT",
            WaveKind::NonClassical => "NS",
        }
    }
}

impl std::fmt::Display for WaveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One wave of a self-similar fan. Discrete waves occupy the single speed
/// `lo == hi`; exact rarefactions span the characteristic-speed interval
/// [lo, hi].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Wave {
    pub kind: WaveKind,
    pub left: State,
    pub right: State,
    pub lo: f64,
    pub hi: f64,
}

impl Wave {
    fn discrete(kind: WaveKind, left: State, right: State, speed: f64) -> Self {
        Wave { kind, left, right, lo: speed, hi: speed }
    }

    /// Propagation speed of a discrete wave.
    pub fn speed(&self) -> f64 {
        debug_assert!(self.lo == self.hi, "spread wave has no single speed");
        self.lo
    }

    pub fn is_spread(&self) -> bool {
        self.kind == WaveKind::Rarefaction
    }

    /// State seen at ray xi inside this wave; for a rarefaction the interior
    /// state whose characteristic speed is xi (clamped to the endpoints),
    /// for a discrete wave the side selected right-continuously.
    pub fn state_at(&self, xi: f64, params: &ModelParams) -> Result<State> {
        if !self.is_spread() {
            return Ok(if xi < self.lo { self.left } else { self.right });
        }
        if xi <= self.lo {
            return Ok(self.left);
        }
        if xi >= self.hi {
            return Ok(self.right);
        }
        let w = self.left.marker();
        let p = &params.pressure;
        let rho = bisect(
            |r| w - p.value(r) - p.derivative(r) * r - xi,
            self.right.rho(params),
            self.left.rho(params),
        );
        State::from_rho_v(rho, w - p.value(rho), params)
    }
}

/// Ordered wave fan separating constant states; the solution of a Riemann
/// problem as a function of xi = x/t.
#[derive(Debug, Clone, Serialize)]
pub struct WaveFan {
    pub leftmost: State,
    pub waves: Vec<Wave>,
}

impl WaveFan {
    fn new(leftmost: State) -> Self {
        WaveFan { leftmost, waves: Vec::new() }
    }

    fn push(&mut self, wave: Wave) {
        debug_assert!(wave.left == self.rightmost(), "fan states must chain");
        debug_assert!(wave.lo <= wave.hi);
        if let Some(prev) = self.waves.last() {
            debug_assert!(prev.hi <= wave.lo + 1e-12, "fan speeds must be ordered");
        }
        self.waves.push(wave);
    }

    pub fn rightmost(&self) -> State {
        self.waves.last().map_or(self.leftmost, |w| w.right)
    }

    /// Value at the ray xi, right-continuous at every discrete wave.
    pub fn eval(&self, xi: f64, params: &ModelParams) -> Result<State> {
        let mut state = self.leftmost;
        for wave in &self.waves {
            if xi < wave.lo {
                break;
            }
            if wave.is_spread() && xi < wave.hi {
                return wave.state_at(xi, params);
            }
            state = wave.right;
        }
        Ok(state)
    }

    /// Left limit at the ray xi.
    pub fn eval_left(&self, xi: f64, params: &ModelParams) -> Result<State> {
        let mut state = self.leftmost;
        for wave in &self.waves {
            if xi <= wave.lo {
                break;
            }
            if wave.is_spread() && xi <= wave.hi {
                return wave.state_at(xi, params);
            }
            state = wave.right;
        }
        Ok(state)
    }

    /// Index of the stationary non-classical wave, if the fan has one.
    pub fn non_classical_index(&self) -> Option<usize> {
        self.waves.iter().position(|w| w.kind == WaveKind::NonClassical)
    }

    /// Structural soundness: chained states, ordered speeds, jump
    /// conditions per wave kind. Violations are reported as guard
    /// breaches.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let mut prev_state = self.leftmost;
        let mut prev_hi = f64::NEG_INFINITY;
        for wave in &self.waves {
            if wave.left != prev_state {
                return Err(Error::GuardBreach("fan states do not chain".into()));
            }
            if wave.lo > wave.hi || wave.lo < prev_hi - 1e-12 {
                return Err(Error::GuardBreach("fan speeds out of order".into()));
            }
            let dr = wave.right.rho(params) - wave.left.rho(params);
            let df = wave.right.flux(params) - wave.left.flux(params);
            match wave.kind {
                WaveKind::Contact => {
                    if (wave.left.speed() - wave.right.speed()).abs() > 1e-12
                        || (wave.lo - wave.left.speed()).abs() > 1e-12
                    {
                        return Err(Error::GuardBreach(
                            "contact discontinuity must travel at the common speed".into(),
                        ));
                    }
                }
                WaveKind::Rarefaction => {
                    if (wave.left.marker() - wave.right.marker()).abs() > 1e-12
                        || (wave.lo - wave.left.characteristic_speed(params)).abs() > 1e-9
                        || (wave.hi - wave.right.characteristic_speed(params)).abs() > 1e-9
                    {
                        return Err(Error::GuardBreach(
                            "rarefaction endpoints must share a marker and span their \
                             characteristic speeds"
                                .into(),
                        ));
                    }
                }
                WaveKind::NonClassical => {
                    if wave.lo != 0.0 {
                        return Err(Error::GuardBreach(
                            "non-classical shock must be stationary".into(),
                        ));
                    }
                }
                WaveKind::Shock | WaveKind::RarefactionShock | WaveKind::PhaseTransition => {
                    if (df - wave.lo * dr).abs() > 1e-9 {
                        return Err(Error::GuardBreach(
                            "discrete wave violates the mass jump condition".into(),
                        ));
                    }
                }
            }
            prev_state = wave.right;
            prev_hi = wave.hi;
        }
        Ok(())
    }
}

/// Wave of the genuinely nonlinear family from `u_l` to the state at the
/// same marker with the target speed; `None` when the endpoints coincide.
fn nonlinear_wave(u_l: State, u_star: State, params: &ModelParams) -> Result<Option<Wave>> {
    debug_assert!((u_l.marker() - u_star.marker()).abs() <= 1e-12);
    if u_l == u_star {
        return Ok(None);
    }
    let wave = if u_star.speed() < u_l.speed() {
        Wave::discrete(WaveKind::Shock, u_l, u_star, jump_speed(u_l, u_star, params)?)
    } else {
        Wave {
            kind: WaveKind::Rarefaction,
            left: u_l,
            right: u_star,
            lo: u_l.characteristic_speed(params),
            hi: u_star.characteristic_speed(params),
        }
    };
    Ok(Some(wave))
}

/// Same wave discretised on the lattice: a fan of rarefaction shocks
/// through consecutive speed nodes replaces a rarefaction.
fn nonlinear_wave_grid(
    u_l: State,
    u_star: State,
    grid: &Grid,
    params: &ModelParams,
) -> Result<Vec<Wave>> {
    if u_l == u_star {
        return Ok(Vec::new());
    }
    if u_star.speed() < u_l.speed() {
        let s = jump_speed(u_l, u_star, params)?;
        return Ok(vec![Wave::discrete(WaveKind::Shock, u_l, u_star, s)]);
    }
    let i0 = grid.speed_index(u_l.speed())?;
    let i1 = grid.speed_index(u_star.speed())?;
    let w = u_l.marker();
    let mut waves = Vec::with_capacity(i1 - i0);
    let mut prev = u_l;
    for j in i0 + 1..=i1 {
        let next = if j == i1 {
            u_star
        } else {
            State::from_vw(grid.speeds[j], w, params)?
        };
        let s = jump_speed(prev, next, params)?;
        waves.push(Wave::discrete(WaveKind::RarefactionShock, prev, next, s));
        prev = next;
    }
    Ok(waves)
}

fn push_contact(fan: &mut WaveFan, left: State, right: State) {
    if left != right {
        fan.push(Wave::discrete(WaveKind::Contact, left, right, right.speed()));
    }
}

/// Case split of the unconstrained solver; the rarefaction treatment is
/// supplied by the caller so the exact and lattice solvers share it.
fn solve_with<FanFn>(
    u_l: State,
    u_r: State,
    params: &ModelParams,
    mut nonlinear: FanFn,
) -> Result<WaveFan>
where
    FanFn: FnMut(State, State) -> Result<Vec<Wave>>,
{
    let mut fan = WaveFan::new(u_l);
    match (u_l.phase(params), u_r.phase(params)) {
        (_, _) if u_l.in_free(params) && u_r.in_free(params) => {
            if u_l != u_r {
                fan.push(Wave::discrete(WaveKind::Contact, u_l, u_r, params.v_max));
            }
        }
        (_, _) if u_l.in_congested(params) && u_r.in_congested(params) => {
            let u_star = middle_state(u_l, u_r, params);
            for wave in nonlinear(u_l, u_star)? {
                fan.push(wave);
            }
            push_contact(&mut fan, u_star, u_r);
        }
        (Phase::Congested, Phase::FreeLow) => {
            let companion = free_companion(u_l, params)?;
            for wave in nonlinear(u_l, companion)? {
                fan.push(wave);
            }
            push_contact(&mut fan, companion, u_r);
        }
        (Phase::FreeLow, Phase::Congested) => {
            if u_l.is_vacuum(params) {
                let s = jump_speed(u_l, u_r, params)?;
                fan.push(Wave::discrete(WaveKind::PhaseTransition, u_l, u_r, s));
            } else {
                let edge = marker_companion(u_r, MarkerEdge::Lower, params);
                let s = jump_speed(u_l, edge, params)?;
                fan.push(Wave::discrete(WaveKind::PhaseTransition, u_l, edge, s));
                push_contact(&mut fan, edge, u_r);
            }
        }
        _ => unreachable!("phase dispatch is exhaustive"),
    }
    Ok(fan)
}

/// Unconstrained exact solver.
pub fn solve(u_l: State, u_r: State, params: &ModelParams) -> Result<WaveFan> {
    solve_with(u_l, u_r, params, |a, b| {
        Ok(nonlinear_wave(a, b, params)?.into_iter().collect())
    })
}

/// Unconstrained lattice solver: rarefactions become fans of rarefaction
/// shocks through consecutive speed nodes. Inputs must be lattice states.
pub fn solve_grid(u_l: State, u_r: State, grid: &Grid, params: &ModelParams) -> Result<WaveFan> {
    let u_l = grid.snap_state(u_l, params)?;
    let u_r = grid.snap_state(u_r, params)?;
    solve_with(u_l, u_r, params, |a, b| nonlinear_wave_grid(a, b, grid, params))
}

/// Glues a left fan, the stationary non-classical shock between the trace
/// states, and a right fan; checks the sign structure that makes the
/// gluing a valid profile.
fn glue_constrained(left: WaveFan, hat: State, check: State, right: WaveFan) -> Result<WaveFan> {
    if hat == check {
        return Err(Error::GuardBreach("null non-classical shock".into()));
    }
    if left.waves.iter().any(|w| w.hi >= 0.0) {
        return Err(Error::GuardBreach(
            "upstream fan of an active bound must have negative speeds".into(),
        ));
    }
    if right.waves.iter().any(|w| w.lo <= 0.0) {
        return Err(Error::GuardBreach(
            "downstream fan of an active bound must have positive speeds".into(),
        ));
    }
    let mut fan = left;
    fan.push(Wave::discrete(WaveKind::NonClassical, hat, check, 0.0));
    for wave in right.waves {
        fan.push(wave);
    }
    Ok(fan)
}

/// Constrained exact solver: defers to [`solve`] when its trace at the
/// origin respects the bound, and otherwise inserts the non-classical
/// shock between the upstream and downstream trace states.
pub fn solve_constrained(
    u_l: State,
    u_r: State,
    data: &ConstraintData,
    params: &ModelParams,
) -> Result<WaveFan> {
    if data.admits_unconstrained(u_l, u_r, params) {
        return solve(u_l, u_r, params);
    }
    let hat = data.upstream_trace(u_l.marker(), params)?;
    let check = data.downstream_trace(u_r.speed(), params)?;
    if !hat.in_congested(params) {
        return Err(Error::GuardBreach("upstream trace left the congested region".into()));
    }
    let left = solve(u_l, hat, params)?;
    let right = solve(check, u_r, params)?;
    glue_constrained(left, hat, check, right)
}

/// Constrained lattice solver; trace states are snapped onto the lattice,
/// where the construction places them up to rounding.
pub fn solve_grid_constrained(
    u_l: State,
    u_r: State,
    grid: &Grid,
    params: &ModelParams,
) -> Result<WaveFan> {
    let u_l = grid.snap_state(u_l, params)?;
    let u_r = grid.snap_state(u_r, params)?;
    let data = &grid.data;
    if data.admits_unconstrained(u_l, u_r, params) {
        return solve_grid(u_l, u_r, grid, params);
    }
    let hat = grid.snap_state(data.upstream_trace(u_l.marker(), params)?, params)?;
    let check = grid.snap_state(data.downstream_trace(u_r.speed(), params)?, params)?;
    if !hat.in_congested(params) {
        return Err(Error::GuardBreach("upstream trace left the congested region".into()));
    }
    let left = solve_grid(u_l, hat, grid, params)?;
    let right = solve_grid(check, u_r, grid, params)?;
    glue_constrained(left, hat, check, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PressureLaw;
    use proptest::prelude::*;

    fn toll_params() -> ModelParams {
        ModelParams::new(0.6, 1.0, 1.2, PressureLaw::PowerLaw { gamma: 2.0 }).unwrap()
    }

    fn toll_setup() -> (ModelParams, ConstraintData) {
        let p = toll_params();
        let c = ConstraintData::new(3.0f64.sqrt() / 5.0, &p).unwrap();
        (p, c)
    }

    fn vw(v: f64, w: f64, p: &ModelParams) -> State {
        State::from_vw(v, w, p).unwrap()
    }

    #[test]
    fn free_pair_is_one_contact_at_top_speed() {
        let p = toll_params();
        let vacuum = State::from_rho_v(0.0, p.v_max, &p).unwrap();
        let heavy = vw(p.v_max, p.w_plus, &p);
        let fan = solve(vacuum, heavy, &p).unwrap();
        fan.validate(&p).unwrap();
        assert_eq!(fan.waves.len(), 1);
        assert_eq!(fan.waves[0].kind, WaveKind::Contact);
        assert_eq!(fan.waves[0].speed(), p.v_max);
        assert!(solve(heavy, heavy, &p).unwrap().waves.is_empty());
    }

    #[test]
    fn congested_deceleration_is_shock_plus_contact() {
        let p = toll_params();
        let u_l = vw(0.5, 1.05, &p);
        let u_r = vw(0.2, 1.15, &p);
        let fan = solve(u_l, u_r, &p).unwrap();
        fan.validate(&p).unwrap();
        assert_eq!(fan.waves.len(), 2);
        assert_eq!(fan.waves[0].kind, WaveKind::Shock);
        assert!(fan.waves[0].speed() < 0.0);
        let mid = fan.waves[0].right;
        assert_eq!((mid.speed(), mid.marker()), (0.2, 1.05));
        assert_eq!(fan.waves[1].kind, WaveKind::Contact);
        assert_eq!(fan.waves[1].speed(), 0.2);
    }

    #[test]
    fn congested_acceleration_is_rarefaction_plus_contact() {
        let p = toll_params();
        let u_l = vw(0.1, 1.1, &p);
        let u_r = vw(0.4, 1.0, &p);
        let fan = solve(u_l, u_r, &p).unwrap();
        fan.validate(&p).unwrap();
        assert_eq!(fan.waves.len(), 2);
        let r = &fan.waves[0];
        assert_eq!(r.kind, WaveKind::Rarefaction);
        assert!(r.lo < r.hi && r.hi < 0.0);
        let mid = r.state_at(0.5 * (r.lo + r.hi), &p).unwrap();
        assert!((mid.marker() - 1.1).abs() < 1e-12);
        assert!((mid.characteristic_speed(&p) - 0.5 * (r.lo + r.hi)).abs() < 1e-10);
        assert!(mid.speed() > 0.1 && mid.speed() < 0.4);
        assert_eq!(fan.waves[1].kind, WaveKind::Contact);
    }

    #[test]
    fn congested_to_light_free_opens_to_the_companion() {
        let p = toll_params();
        let u_l = vw(0.2, 1.1, &p);
        let u_r = State::from_rho_v(0.3 * p.rho_minus, p.v_max, &p).unwrap();
        let fan = solve(u_l, u_r, &p).unwrap();
        fan.validate(&p).unwrap();
        assert_eq!(fan.waves.len(), 2);
        assert_eq!(fan.waves[0].kind, WaveKind::Rarefaction);
        let companion = fan.waves[0].right;
        assert_eq!(companion.speed(), p.v_max);
        assert_eq!(companion.marker(), 1.1);
        assert_eq!(fan.waves[1].kind, WaveKind::Contact);
        assert_eq!(fan.waves[1].speed(), p.v_max);
    }

    #[test]
    fn free_to_congested_passes_through_the_lower_marker_curve() {
        let p = toll_params();
        let u_l = State::from_rho_v(0.5 * p.rho_minus, p.v_max, &p).unwrap();
        let u_r = vw(0.3, 1.1, &p);
        let fan = solve(u_l, u_r, &p).unwrap();
        fan.validate(&p).unwrap();
        assert_eq!(fan.waves.len(), 2);
        assert_eq!(fan.waves[0].kind, WaveKind::PhaseTransition);
        assert_eq!(fan.waves[0].right.marker(), p.w_minus);
        assert_eq!(fan.waves[0].right.speed(), 0.3);
        assert_eq!(fan.waves[1].kind, WaveKind::Contact);
        assert!(fan.waves[0].speed() < fan.waves[1].speed());
    }

    #[test]
    fn vacuum_to_congested_is_a_single_phase_transition() {
        let p = toll_params();
        let vacuum = State::from_rho_v(0.0, p.v_max, &p).unwrap();
        let u_r = vw(0.3, 1.1, &p);
        let fan = solve(vacuum, u_r, &p).unwrap();
        fan.validate(&p).unwrap();
        assert_eq!(fan.waves.len(), 1);
        assert_eq!(fan.waves[0].kind, WaveKind::PhaseTransition);
        assert!((fan.waves[0].speed() - 0.3).abs() < 1e-12);
        assert_eq!(fan.waves[0].right, u_r);
    }

    #[test]
    fn toll_scenario_initial_jumps() {
        let (p, _) = toll_setup();
        let vacuum = State::from_rho_v(0.0, p.v_max, &p).unwrap();
        let stopped = vw(0.0, p.w_minus, &p);
        let jammed = vw(0.0, p.w_plus, &p);

        let at_entry = solve(vacuum, stopped, &p).unwrap();
        assert_eq!(at_entry.waves.len(), 1);
        assert_eq!(at_entry.waves[0].kind, WaveKind::PhaseTransition);
        assert_eq!(at_entry.waves[0].speed(), 0.0);

        let at_queue_tail = solve(stopped, jammed, &p).unwrap();
        assert_eq!(at_queue_tail.waves.len(), 1);
        assert_eq!(at_queue_tail.waves[0].kind, WaveKind::Contact);
        assert_eq!(at_queue_tail.waves[0].speed(), 0.0);

        let at_gate = solve(jammed, vacuum, &p).unwrap();
        assert_eq!(at_gate.waves.len(), 2);
        assert_eq!(at_gate.waves[0].kind, WaveKind::Rarefaction);
        assert_eq!(at_gate.waves[1].kind, WaveKind::Contact);
    }

    #[test]
    fn toll_scenario_gate_needs_the_non_classical_shock() {
        let (p, c) = toll_setup();
        let vacuum = State::from_rho_v(0.0, p.v_max, &p).unwrap();
        let jammed = vw(0.0, p.w_plus, &p);
        let fan = solve_constrained(jammed, vacuum, &c, &p).unwrap();
        fan.validate(&p).unwrap();
        assert_eq!(fan.waves.len(), 3);
        assert_eq!(fan.waves[0].kind, WaveKind::Rarefaction);
        assert!(fan.waves[0].hi < 0.0);
        let ns = fan.waves[1];
        assert_eq!(ns.kind, WaveKind::NonClassical);
        assert_eq!(ns.left.speed(), c.v_lo);
        assert_eq!(ns.left.marker(), p.w_plus);
        assert_eq!(ns.right.speed(), p.v_max);
        assert_eq!(ns.right.marker(), c.w_cut);
        assert!((ns.left.flux(&p) - c.flux_bound).abs() < 1e-12);
        assert!((ns.right.flux(&p) - c.flux_bound).abs() < 1e-12);
        assert_eq!(fan.waves[2].kind, WaveKind::Contact);
        assert_eq!(fan.waves[2].speed(), p.v_max);
    }

    #[test]
    fn shut_gate_jams_the_left_datum() {
        let p = toll_params();
        let c = ConstraintData::new(0.0, &p).unwrap();
        let vacuum = State::from_rho_v(0.0, p.v_max, &p).unwrap();
        let heavy = vw(p.v_max, p.w_plus, &p);
        let fan = solve_constrained(heavy, vacuum, &c, &p).unwrap();
        fan.validate(&p).unwrap();
        assert_eq!(fan.waves.len(), 2);
        assert_eq!(fan.waves[0].kind, WaveKind::Shock);
        let ns = fan.waves[1];
        assert_eq!(ns.kind, WaveKind::NonClassical);
        assert_eq!((ns.left.speed(), ns.left.marker()), (0.0, p.w_plus));
        assert!(ns.right.is_vacuum(&p));
    }

    #[test]
    fn evaluation_conventions_at_a_stationary_jump() {
        let p = toll_params();
        let stopped = vw(0.0, p.w_minus, &p);
        let jammed = vw(0.0, p.w_plus, &p);
        let fan = solve(stopped, jammed, &p).unwrap();
        assert_eq!(fan.eval(0.0, &p).unwrap(), jammed);
        assert_eq!(fan.eval_left(0.0, &p).unwrap(), stopped);
        assert_eq!(fan.eval(-1e-9, &p).unwrap(), stopped);
        assert_eq!(fan.eval(1e-9, &p).unwrap(), jammed);
    }

    #[test]
    fn lattice_solver_discretises_the_gate_rarefaction() {
        let (p, c) = toll_setup();
        let g = Grid::new(2, &p, c).unwrap();
        let vacuum = State::from_rho_v(0.0, p.v_max, &p).unwrap();
        let jammed = vw(0.0, p.w_plus, &p);

        let open = solve_grid(jammed, vacuum, &g, &p).unwrap();
        open.validate(&p).unwrap();
        let rs_count = open.waves.iter().filter(|w| w.kind == WaveKind::RarefactionShock).count();
        assert_eq!(rs_count, g.speeds.len() - 1);
        assert_eq!(open.waves.last().unwrap().kind, WaveKind::Contact);
        let dv: f64 = open
            .waves
            .iter()
            .filter(|w| w.kind == WaveKind::RarefactionShock)
            .map(|w| w.right.speed() - w.left.speed())
            .sum();
        assert!((dv - p.v_max).abs() < 1e-12);

        let gated = solve_grid_constrained(jammed, vacuum, &g, &p).unwrap();
        gated.validate(&p).unwrap();
        let rs_count = gated.waves.iter().filter(|w| w.kind == WaveKind::RarefactionShock).count();
        assert_eq!(rs_count, 4);
        let ns = gated.waves[gated.non_classical_index().unwrap()];
        assert_eq!(ns.left.speed(), c.v_lo);
        for w in &gated.waves {
            assert!(g.contains(w.left) && g.contains(w.right));
        }
    }

    #[test]
    fn lattice_and_exact_solvers_agree_without_rarefactions() {
        let (p, c) = toll_setup();
        let g = Grid::new(3, &p, c).unwrap();
        let u_l = vw(g.speeds[10], p.w_minus, &p);
        let u_r = vw(g.speeds[4], p.w_plus, &p);
        let exact = solve(u_l, u_r, &p).unwrap();
        let lattice = solve_grid(u_l, u_r, &g, &p).unwrap();
        assert_eq!(exact.waves.len(), lattice.waves.len());
        for (a, b) in exact.waves.iter().zip(&lattice.waves) {
            assert_eq!(a.kind, b.kind);
            assert!((a.speed() - b.speed()).abs() < 1e-12);
            assert_eq!(a.right, b.right);
        }
    }

    #[test]
    fn off_lattice_input_is_rejected() {
        let (p, c) = toll_setup();
        let g = Grid::new(2, &p, c).unwrap();
        let off = vw(0.5 * (g.speeds[3] + g.speeds[4]), p.w_plus, &p);
        assert!(matches!(
            solve_grid(off, off, &g, &p),
            Err(Error::OffGrid(_))
        ));
    }

    #[test]
    fn resolving_each_wave_reproduces_it() {
        let (p, c) = toll_setup();
        let vacuum = State::from_rho_v(0.0, p.v_max, &p).unwrap();
        let fans = [
            solve(vw(0.5, 1.05, &p), vw(0.2, 1.15, &p), &p).unwrap(),
            solve(State::from_rho_v(0.5 * p.rho_minus, p.v_max, &p).unwrap(), vw(0.3, 1.1, &p), &p)
                .unwrap(),
            solve_constrained(vw(0.0, p.w_plus, &p), vacuum, &c, &p).unwrap(),
        ];
        for fan in &fans {
            for wave in fan.waves.iter().filter(|w| !w.is_spread()) {
                if wave.kind == WaveKind::NonClassical {
                    continue;
                }
                let again = solve(wave.left, wave.right, &p).unwrap();
                assert_eq!(again.waves.len(), 1, "{:?}", wave.kind);
                assert_eq!(again.waves[0].kind, wave.kind);
                assert!((again.waves[0].speed() - wave.speed()).abs() < 1e-12);
            }
        }
    }

    fn any_state() -> impl Strategy<Value = State> {
        let p = toll_params();
        (0.0f64..=1.0, 0.0f64..=1.0, prop::bool::ANY).prop_map(move |(a, b, free)| {
            if free {
                let w = p.w_floor() + a * (p.w_plus - p.w_floor());
                State::from_vw(p.v_max, w, &p).unwrap()
            } else {
                let w = p.w_minus + b * (p.w_plus - p.w_minus);
                State::from_vw(a * p.v_max, w, &p).unwrap()
            }
        })
    }

    proptest! {
        #[test]
        fn admission_test_matches_the_solution_trace(u_l in any_state(), u_r in any_state(),
                                                     t in 0.0f64..=1.0) {
            let p = toll_params();
            let c = ConstraintData::new(t * p.flux_upper, &p).unwrap();
            let fan = solve(u_l, u_r, &p).unwrap();
            fan.validate(&p).unwrap();
            let trace = fan
                .eval(0.0, &p).unwrap().flux(&p)
                .max(fan.eval_left(0.0, &p).unwrap().flux(&p));
            let admitted = c.admits_unconstrained(u_l, u_r, &p);
            prop_assert_eq!(admitted, trace <= c.flux_bound + 1e-12,
                            "trace flux {} vs bound {}", trace, c.flux_bound);
        }

        #[test]
        fn constrained_solutions_respect_the_bound(u_l in any_state(), u_r in any_state(),
                                                   t in 0.0f64..=1.0) {
            let p = toll_params();
            let c = ConstraintData::new(t * p.flux_upper, &p).unwrap();
            let fan = solve_constrained(u_l, u_r, &c, &p).unwrap();
            fan.validate(&p).unwrap();
            prop_assert!(fan.eval(0.0, &p).unwrap().flux(&p) <= c.flux_bound + 1e-12);
            prop_assert!(fan.eval_left(0.0, &p).unwrap().flux(&p) <= c.flux_bound + 1e-12);
            prop_assert_eq!(fan.eval(-1e12, &p).unwrap(), u_l);
            prop_assert_eq!(fan.eval(1e12, &p).unwrap(), u_r);
        }

        #[test]
        fn lattice_solver_stays_on_the_lattice(i in 0usize..13, j in 0usize..13,
                                               k in 0usize..13, l in 0usize..13) {
            let (p, c) = toll_setup();
            let g = Grid::new(2, &p, c).unwrap();
            let pick = |si: usize, mi: usize| {
                let v = g.speeds[si % g.speeds.len()];
                let w = g.markers[mi % g.markers.len()];
                if w >= p.w_minus {
                    State::from_vw(v, w, &p).ok()
                } else if v == p.v_max {
                    State::from_vw(p.v_max, w, &p).ok()
                } else {
                    None
                }
            };
            if let (Some(u_l), Some(u_r)) = (pick(i, j), pick(k, l)) {
                let fan = solve_grid_constrained(u_l, u_r, &g, &p).unwrap();
                fan.validate(&p).unwrap();
                for w in &fan.waves {
                    prop_assert!(g.contains(w.left) && g.contains(w.right));
                    prop_assert!(!w.is_spread());
                }
            }
        }
    }
}
