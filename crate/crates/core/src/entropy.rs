//! Entropy diagnostics for computed trajectories.
//!
//! For every speed level k in [0, V] the model carries an entropy pair
//! (E^k, Q^k) that vanishes on states at least as fast as k and penalises
//! slower ones through the pressure law. Classical fronts dissipate these
//! entropies: contacts exactly conserve them, shocks and phase transitions
//! produce nonnegative dissipation, and the sampled rarefaction shocks may
//! produce at worst an amount proportional to their density jump. The
//! stationary non-classical shock is the one genuine violator, and its
//! deficit is balanced by a compensation term `n_flux` charged at the gate.
//!
//! The routines here post-process an immutable [`Trajectory`]: they measure
//! the two Rankine-Hugoniot residuals front by front, evaluate the
//! dissipation `speed * dE^k - dQ^k` of every tracked wave on a ladder of
//! k values, and check that the gate traces carry exactly the bounded flux
//! whenever a non-classical shock is present. Nothing is asserted here;
//! the reports carry the raw extremes and the callers pin the tolerances.


use serde::Serialize;

use crate::constraint::{ConstraintData, FluxRegime};
use crate::grid::Grid;
use crate::model::{ModelParams, State};
use crate::riemann::WaveKind;
use crate::wft::Trajectory;

/// Entropy E^k: zero at speed k and above, otherwise the relative excess of
/// the density over the flux-k density on the capped marker curve.
pub fn entropy_e(u: State, k: f64, params: &ModelParams) -> f64 {
    if u.speed() >= k {
        return 0.0;
    }
    let reference = params.pressure.inverse(u.capped_marker(params) - k);
    u.rho(params) / reference - 1.0
}

/// Entropy flux Q^k paired with [`entropy_e`].
pub fn entropy_q(u: State, k: f64, params: &ModelParams) -> f64 {
    if u.speed() >= k {
        return 0.0;
    }
    let reference = params.pressure.inverse(u.capped_marker(params) - k);
    u.flux(params) / reference - k
}

/// Compensation term charged at the gate: what the upstream trace may emit
/// against the entropy-flux drop of a non-classical shock.
pub fn n_flux(u: State, k: f64, data: &ConstraintData, params: &ModelParams) -> f64 {
    if data.regime == FluxRegime::Zero {
        return k;
    }
    let reference = params.pressure.inverse(u.capped_marker(params) - k);
    u.flux(params) * (k / data.flux_bound - 1.0 / reference).max(0.0)
}

/// Ladder of k values adapted to a grid: every speed node plus every
/// midpoint between consecutive nodes, in increasing order.
pub fn k_ladder(grid: &Grid) -> Vec<f64> {
    let speeds = &grid.speeds;
    let mut ks = Vec::with_capacity(2 * speeds.len());
    for (i, &v) in speeds.iter().enumerate() {
        if i > 0 {
            ks.push(0.5 * (speeds[i - 1] + v));
        }
        ks.push(v);
    }
    ks
}

/// Slope of the rarefaction-shock dissipation bound: each sampled
/// rarefaction shock dissipates at least `-slope * (rho_left - rho_right)`.
pub fn rs_bound_slope(params: &ModelParams) -> f64 {
    2.0 / params.rho_minus * max_density_pressure_slope(params)
}

fn max_density_pressure_slope(params: &ModelParams) -> f64 {
    let (lo, hi) = (params.rho_minus, params.rho_max);
    let steps = 4096;
    let mut worst: f64 = 0.0;
    for i in 0..=steps {
        let rho = lo + (hi - lo) * i as f64 / steps as f64;
        worst = worst.max((rho * params.pressure.derivative(rho)).abs());
    }
    worst
}

/// Extremes of the two jump conditions over a whole trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct RhReport {
    /// Number of distinct fronts inspected.
    pub fronts_checked: usize,
    /// Largest |speed * d(rho) - d(f)| over all fronts.
    pub max_mass_residual: f64,
    /// Largest |speed * d(rho W) - d(f W)| over all fronts except the
    /// non-classical ones, W being the capped marker.
    pub max_marker_residual: f64,
    /// Marker-condition residual of each non-classical front, the only
    /// permitted violators: the marker genuinely drops across them.
    pub ns_marker_residuals: Vec<f64>,
}

/// Measures both Rankine-Hugoniot conditions on every front of the run.
pub fn rh_check(trajectory: &Trajectory) -> RhReport {
    let params = &trajectory.params;
    let mut report = RhReport {
        fronts_checked: 0,
        max_mass_residual: 0.0,
        max_marker_residual: 0.0,
        ns_marker_residuals: Vec::new(),
    };
    for life in trajectory.front_segments() {
        let front = life.front;
        let (mass, marker) = rh_residuals(front.wave.left, front.wave.right, front.speed, params);
        report.fronts_checked += 1;
        report.max_mass_residual = report.max_mass_residual.max(mass);
        if front.wave.kind == WaveKind::NonClassical {
            report.ns_marker_residuals.push(marker);
        } else {
            report.max_marker_residual = report.max_marker_residual.max(marker);
        }
    }
    report
}

fn rh_residuals(left: State, right: State, speed: f64, params: &ModelParams) -> (f64, f64) {
    let (rho_l, rho_r) = (left.rho(params), right.rho(params));
    let (f_l, f_r) = (left.flux(params), right.flux(params));
    let (cap_l, cap_r) = (left.capped_marker(params), right.capped_marker(params));
    let mass = (speed * (rho_r - rho_l) - (f_r - f_l)).abs();
    let marker = (speed * (rho_r * cap_r - rho_l * cap_l) - (f_r * cap_r - f_l * cap_l)).abs();
    (mass, marker)
}

/// Dissipation of one wave at one k level.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WaveDissipation {
    pub front: u64,
    pub kind: WaveKind,
    pub k: f64,
    /// speed * dE^k - dQ^k across the wave.
    pub value: f64,
}

/// Entropy budget of a non-classical shock at one k level.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NsDissipation {
    pub front: u64,
    pub k: f64,
    /// Drop -dQ^k of the entropy flux across the shock; never positive.
    pub q_drop: f64,
    /// The drop plus the gate compensation of the upstream trace; never
    /// negative.
    pub compensated: f64,
}

/// Per-wave dissipation values over a k ladder, with the extremes that the
/// wave catalogue constrains.
#[derive(Debug, Clone, Serialize)]
pub struct DissipationReport {
    pub k_values: Vec<f64>,
    /// Values at the k levels each wave is active on: strictly inside the
    /// speed span of shocks and rarefaction shocks, above the right speed
    /// of phase transitions.
    pub entries: Vec<WaveDissipation>,
    /// Budget of every non-classical shock at every k level.
    pub ns_entries: Vec<NsDissipation>,
    /// Largest |value| over contacts at every k level; zero up to rounding.
    pub max_contact_abs: f64,
    /// Largest |value| of the other classical waves at the k levels they
    /// are inactive on; zero up to scaled jump-condition noise.
    pub max_silent_abs: f64,
    /// Smallest active shock value; positive when any shock is tracked.
    pub min_shock: Option<f64>,
    /// Smallest active phase-transition value; positive when any exists.
    pub min_transition: Option<f64>,
    /// Smallest slack of the rarefaction-shock lower bound
    /// `value + slope * (rho_left - rho_right)`; nonnegative up to rounding.
    pub worst_rs_margin: Option<f64>,
    /// Time integral of the summed rarefaction-shock dissipation, per k.
    pub rs_integral: Vec<f64>,
    /// Smallest entry of `rs_integral`.
    pub rs_integral_min: f64,
    /// A-priori floor for every `rs_integral` entry:
    /// `-slope * tv_bound * final_time`.
    pub rs_integral_floor: f64,
    /// The slope of the rarefaction-shock bound for these parameters.
    pub rs_bound_slope: f64,
}

/// Evaluates the entropy dissipation of every tracked wave on a k ladder.
pub fn dissipation(trajectory: &Trajectory, k_set: &[f64]) -> DissipationReport {
    let params = &trajectory.params;
    let data = &trajectory.grid.data;
    let slope = rs_bound_slope(params);
    let mut report = DissipationReport {
        k_values: k_set.to_vec(),
        entries: Vec::new(),
        ns_entries: Vec::new(),
        max_contact_abs: 0.0,
        max_silent_abs: 0.0,
        min_shock: None,
        min_transition: None,
        worst_rs_margin: None,
        rs_integral: vec![0.0; k_set.len()],
        rs_integral_min: 0.0,
        rs_integral_floor: -slope * trajectory.a_priori_constants().tv_bound
            * trajectory.final_time,
        rs_bound_slope: slope,
    };
    let shrink = |worst: &mut Option<f64>, value: f64| {
        *worst = Some(worst.map_or(value, |w: f64| w.min(value)));
    };
    for life in trajectory.front_segments() {
        let front = life.front;
        let (left, right) = (front.wave.left, front.wave.right);
        let lifetime = life.death - life.birth;
        for (ki, &k) in k_set.iter().enumerate() {
            let value = front.speed * (entropy_e(right, k, params) - entropy_e(left, k, params))
                - (entropy_q(right, k, params) - entropy_q(left, k, params));
            match front.wave.kind {
                WaveKind::Contact => {
                    report.max_contact_abs = report.max_contact_abs.max(value.abs());
                }
                WaveKind::NonClassical => {
                    report.ns_entries.push(NsDissipation {
                        front: front.id,
                        k,
                        q_drop: value,
                        compensated: value + n_flux(left, k, data, params),
                    });
                }
                kind => {
                    let active = match kind {
                        WaveKind::Shock => right.speed() < k && k <= left.speed(),
                        WaveKind::RarefactionShock => left.speed() < k && k <= right.speed(),
                        WaveKind::PhaseTransition => right.speed() < k,
                        _ => false,
                    };
                    if kind == WaveKind::RarefactionShock {
                        report.rs_integral[ki] += lifetime * value;
                    }
                    if !active {
                        report.max_silent_abs = report.max_silent_abs.max(value.abs());
                        continue;
                    }
                    match kind {
                        WaveKind::Shock => shrink(&mut report.min_shock, value),
                        WaveKind::PhaseTransition => shrink(&mut report.min_transition, value),
                        WaveKind::RarefactionShock => {
                            let margin =
                                value + slope * (left.rho(params) - right.rho(params));
                            shrink(&mut report.worst_rs_margin, margin);
                        }
                        _ => {}
                    }
                    report.entries.push(WaveDissipation {
                        front: front.id,
                        kind,
                        k,
                        value,
                    });
                }
            }
        }
    }
    report.rs_integral_min = report.rs_integral.iter().copied().fold(0.0, f64::min);
    report
}

/// Flux behaviour at the gate while a non-classical shock is present.
#[derive(Debug, Clone, Serialize)]
pub struct NsFluxReport {
    /// Maximal time spans on which a non-classical shock is active.
    pub intervals: Vec<(f64, f64)>,
    /// Number of distinct non-classical fronts over the run.
    pub ns_count: usize,
    /// Largest |flux - F| of either gate trace, sampled inside every active
    /// span between events.
    pub max_flux_gap: Option<f64>,
    /// Largest entropy-flux drop -dQ^k over the sampled k ladder.
    pub max_q_drop: Option<f64>,
    /// Smallest compensated drop -dQ^k + n_flux over the sampled k ladder.
    pub min_compensated: Option<f64>,
}

/// Checks that the gate runs exactly at the bound while a non-classical
/// shock sits on it, and that the shock's entropy deficit stays within the
/// gate compensation.
pub fn ns_flux_property(trajectory: &Trajectory, data: &ConstraintData) -> NsFluxReport {
    let params = &trajectory.params;
    let mut report = NsFluxReport {
        intervals: Vec::new(),
        ns_count: 0,
        max_flux_gap: None,
        max_q_drop: None,
        min_compensated: None,
    };

    let ends = || {
        (0..trajectory.epochs.len()).map(|i| {
            trajectory
                .epochs
                .get(i + 1)
                .map_or(trajectory.final_time, |next| next.start)
        })
    };
    for (epoch, end) in trajectory.epochs.iter().zip(ends()) {
        let active = epoch
            .fronts
            .iter()
            .any(|f| f.wave.kind == WaveKind::NonClassical);
        if !active {
            continue;
        }
        match report.intervals.last_mut() {
            Some(span) if span.1 == epoch.start => span.1 = end,
            _ => report.intervals.push((epoch.start, end)),
        }
        if end - epoch.start <= 1e-12 {
            continue;
        }
        let (hat, check) = trajectory
            .gate_traces(0.5 * (epoch.start + end))
            .expect("midpoint of an epoch lies inside the run");
        let gap = (hat.flux(params) - data.flux_bound)
            .abs()
            .max((check.flux(params) - data.flux_bound).abs());
        report.max_flux_gap = Some(report.max_flux_gap.map_or(gap, |g: f64| g.max(gap)));
    }

    let ks = k_ladder(&trajectory.grid);
    for life in trajectory.front_segments() {
        let front = life.front;
        if front.wave.kind != WaveKind::NonClassical {
            continue;
        }
        report.ns_count += 1;
        for &k in &ks {
            let drop = entropy_q(front.wave.left, k, params)
                - entropy_q(front.wave.right, k, params);
            let compensated = drop + n_flux(front.wave.left, k, data, params);
            report.max_q_drop = Some(report.max_q_drop.map_or(drop, |d: f64| d.max(drop)));
            report.min_compensated = Some(
                report
                    .min_compensated
                    .map_or(compensated, |c: f64| c.min(compensated)),
            );
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{jump_speed, ModelParams, PressureLaw};
    use crate::wft::{run, PiecewiseState, RunLimits};

    fn toll_params() -> ModelParams {
        ModelParams::new(0.6, 1.0, 1.2, PressureLaw::PowerLaw { gamma: 2.0 }).unwrap()
    }

    fn toll_bound() -> f64 {
        3f64.sqrt() / 5.0
    }

    fn toll_grid(level: u32) -> (ModelParams, Grid) {
        let params = toll_params();
        let data = ConstraintData::new(toll_bound(), &params).unwrap();
        (params, Grid::new(level, &params, data).unwrap())
    }

    fn toll_datum(params: &ModelParams) -> PiecewiseState {
        let vacuum = State::from_vw(params.v_max, params.w_floor(), params).unwrap();
        PiecewiseState::new(
            vacuum,
            vec![
                (-8.0, State::from_vw(0.0, 1.0, params).unwrap()),
                (-5.0, State::from_vw(0.0, 1.2, params).unwrap()),
                (0.0, vacuum),
            ],
        )
        .unwrap()
    }

    fn toll_run(level: u32, t_end: f64) -> Trajectory {
        let (params, grid) = toll_grid(level);
        let datum = toll_datum(&params);
        run(&params, grid, &datum, t_end, RunLimits::default()).unwrap()
    }

    #[test]
    fn entropy_pair_vanishes_at_and_above_the_speed() {
        let params = toll_params();
        let free = State::from_rho_v(0.3, params.v_max, &params).unwrap();
        let jammed = State::from_vw(0.2, 1.1, &params).unwrap();
        for &k in &[0.0, 0.1, 0.2] {
            assert_eq!(entropy_e(jammed, k, &params), 0.0);
            assert_eq!(entropy_q(jammed, k, &params), 0.0);
        }
        for &k in &[0.0, 0.3, params.v_max] {
            assert_eq!(entropy_e(free, k, &params), 0.0);
            assert_eq!(entropy_q(free, k, &params), 0.0);
        }
        assert!(entropy_e(jammed, 0.25, &params) > 0.0);
    }

    #[test]
    fn entropy_pair_matches_hand_values_on_the_stopped_state() {
        let params = toll_params();
        let stopped = State::from_vw(0.0, params.w_plus, &params).unwrap();
        // rho = sqrt(1.2), reference density at k = V is sqrt(0.6).
        let e = entropy_e(stopped, params.v_max, &params);
        assert!((e - (2f64.sqrt() - 1.0)).abs() <= 1e-12, "E = {e}");
        let q = entropy_q(stopped, params.v_max, &params);
        assert!((q + params.v_max).abs() <= 1e-12, "Q = {q}");
    }

    #[test]
    fn gate_compensation_matches_hand_values() {
        let params = toll_params();
        let open = ConstraintData::new(toll_bound(), &params).unwrap();
        let shut = ConstraintData::new(0.0, &params).unwrap();
        let stopped = State::from_vw(0.0, params.w_plus, &params).unwrap();
        let trace = open.upstream_trace(params.w_plus, &params).unwrap();

        assert_eq!(n_flux(stopped, 0.37, &shut, &params), 0.37);
        assert_eq!(n_flux(stopped, 0.37, &open, &params), 0.0);
        assert_eq!(n_flux(trace, 0.0, &open, &params), 0.0);

        // f(trace) = F on the w_plus curve, so at k = V the bracket is
        // V/F - 1/sqrt(0.6) and the product collapses to 0.6 - sqrt(0.2).
        let n = n_flux(trace, params.v_max, &open, &params);
        assert!((n - (0.6 - 0.2f64.sqrt())).abs() <= 1e-9, "N = {n}");
    }

    #[test]
    fn k_ladder_brackets_grid_speeds() {
        let (_, grid) = toll_grid(2);
        let ks = k_ladder(&grid);
        assert_eq!(ks.len(), 2 * grid.speeds.len() - 1);
        assert!(ks.windows(2).all(|p| p[0] < p[1]));
        for (i, &v) in grid.speeds.iter().enumerate() {
            assert_eq!(ks[2 * i], v);
        }
    }

    #[test]
    fn rankine_hugoniot_residuals_stay_small_off_the_gate() {
        let traj = toll_run(2, 8.0);
        let report = rh_check(&traj);
        assert!(report.fronts_checked > 10);
        assert!(
            report.max_mass_residual <= 1e-9,
            "mass residual {}",
            report.max_mass_residual
        );
        assert!(
            report.max_marker_residual <= 1e-9,
            "marker residual {}",
            report.max_marker_residual
        );
        // The marker genuinely drops across the non-classical shock: the
        // residual is F |dW| up to the stationary-speed cancellation.
        assert!(!report.ns_marker_residuals.is_empty());
        let worst = report
            .ns_marker_residuals
            .iter()
            .copied()
            .fold(0.0, f64::max);
        assert!(worst > 1e-2, "expected a real marker drop, got {worst}");
    }

    #[test]
    fn shock_values_match_the_chord_factorisation() {
        // Two routes to the same number: the direct speed*dE - dQ sum and
        // the product of chord-slope brackets it factors into.
        let (params, grid) = toll_grid(3);
        let chord = |a: State, b: State| jump_speed(a, b, &params).unwrap();
        let mut checked = 0usize;
        for (i, &w) in grid.markers.iter().enumerate() {
            if w < params.w_minus {
                continue;
            }
            let speeds: Vec<f64> = grid
                .speeds
                .iter()
                .copied()
                .filter(|&v| State::from_vw(v, w, &params).is_ok())
                .collect();
            for (a, &v_l) in speeds.iter().enumerate() {
                let v_r = speeds[(a + 7 * i + 3) % speeds.len()];
                if v_l == v_r {
                    continue;
                }
                let left = State::from_vw(v_l, w, &params).unwrap();
                let right = State::from_vw(v_r, w, &params).unwrap();
                let speed = chord(left, right);
                for &k in &k_ladder(&grid) {
                    let lo = v_l.min(v_r);
                    let hi = v_l.max(v_r);
                    if !(lo < k && k <= hi) {
                        continue;
                    }
                    let direct = speed
                        * (entropy_e(right, k, &params) - entropy_e(left, k, &params))
                        - (entropy_q(right, k, &params) - entropy_q(left, k, &params));
                    let reference = params.pressure.inverse(w - k);
                    let level = State::from_rho_v(reference, k, &params).unwrap();
                    let factored = if v_l > v_r {
                        (right.rho(&params) / reference - 1.0) * (speed - chord(level, right))
                    } else {
                        (left.rho(&params) / reference - 1.0) * (chord(left, level) - speed)
                    };
                    assert!(
                        (direct - factored).abs() <= 1e-11,
                        "w {w} v {v_l}->{v_r} k {k}: {direct} vs {factored}"
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 100, "only {checked} pairs exercised");
    }

    #[test]
    fn transition_into_vacuum_dissipates_the_speed_gap() {
        // A phase transition with vacuum on the left moves at the speed of
        // its right state, and its dissipation collapses to k - v_right.
        let params = toll_params();
        let vacuum = State::from_rho_v(0.0, params.v_max, &params).unwrap();
        let right = State::from_vw(0.25, 1.1, &params).unwrap();
        let speed = jump_speed(vacuum, right, &params).unwrap();
        assert!((speed - 0.25).abs() <= 1e-12);
        for &k in &[0.3, 0.45, params.v_max] {
            let value = speed * (entropy_e(right, k, &params) - entropy_e(vacuum, k, &params))
                - (entropy_q(right, k, &params) - entropy_q(vacuum, k, &params));
            assert!((value - (k - 0.25)).abs() <= 1e-12, "k {k}: {value}");
        }
    }

    #[test]
    fn dissipation_signs_follow_the_wave_catalogue() {
        let traj = toll_run(2, 30.0);
        let report = dissipation(&traj, &k_ladder(&traj.grid));
        assert!(!report.entries.is_empty());
        assert!(!report.ns_entries.is_empty());
        assert!(
            report.max_contact_abs <= 1e-10,
            "contacts leaked {}",
            report.max_contact_abs
        );
        assert!(
            report.max_silent_abs <= 1e-8,
            "inactive levels leaked {}",
            report.max_silent_abs
        );
        let pt = report.min_transition.expect("the run has transitions");
        assert!(pt > 0.0, "transition dissipation {pt}");
        if let Some(s) = report.min_shock {
            assert!(s > 0.0, "shock dissipation {s}");
        }
        let margin = report.worst_rs_margin.expect("the run has sampled fans");
        assert!(margin >= -1e-10, "rarefaction-shock margin {margin}");
        assert!(
            report.rs_integral_min >= report.rs_integral_floor - 1e-9,
            "integral {} under floor {}",
            report.rs_integral_min,
            report.rs_integral_floor
        );
        for entry in &report.ns_entries {
            assert!(entry.q_drop <= 1e-10, "q drop {}", entry.q_drop);
            assert!(
                entry.compensated >= -1e-10,
                "compensated drop {}",
                entry.compensated
            );
        }
    }

    #[test]
    fn heavy_inflow_shock_dissipates_strictly() {
        let (params, grid) = toll_grid(2);
        let heavy = State::from_vw(params.v_max, params.w_plus, &params).unwrap();
        let datum = PiecewiseState::new(heavy, vec![]).unwrap();
        let traj = run(&params, grid, &datum, 4.0, RunLimits::default()).unwrap();
        let report = dissipation(&traj, &k_ladder(&traj.grid));
        let s = report.min_shock.expect("the gate fan contains a shock");
        assert!(s > 0.0, "shock dissipation {s}");
    }

    #[test]
    fn non_classical_flux_holds_while_the_gate_binds() {
        let params = toll_params();
        let data = ConstraintData::new(toll_bound(), &params).unwrap();
        let traj = toll_run(2, 30.0);
        let report = ns_flux_property(&traj, &data);

        assert_eq!(report.intervals.len(), 1, "{:?}", report.intervals);
        let (start, end) = report.intervals[0];
        assert_eq!(start, 0.0);
        assert!((20.0..28.0).contains(&end), "gate released at {end}");
        assert!(report.ns_count >= 1);
        let gap = report.max_flux_gap.unwrap();
        assert!(gap <= 1e-10, "flux gap {gap}");
        assert!(report.max_q_drop.unwrap() <= 1e-10);
        assert!(report.min_compensated.unwrap() >= -1e-10);
    }

    #[test]
    fn quiet_runs_report_nothing_at_the_gate() {
        let (params, grid) = toll_grid(2);
        let data = grid.data;
        let light = State::from_vw(params.v_max, params.w_floor(), &params).unwrap();
        let datum = PiecewiseState::new(light, vec![]).unwrap();
        let traj = run(&params, grid, &datum, 2.0, RunLimits::default()).unwrap();
        let report = ns_flux_property(&traj, &data);
        assert!(report.intervals.is_empty());
        assert_eq!(report.ns_count, 0);
        assert!(report.max_flux_gap.is_none());
        let rh = rh_check(&traj);
        assert!(rh.ns_marker_residuals.is_empty());
    }
}
