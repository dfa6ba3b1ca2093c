//! Event-driven tracking of piecewise constant wave patterns.
//!
//! A simulation owns an ordered list of fronts, each carrying one discrete
//! wave produced by the lattice Riemann solver. Between events every front
//! moves at its own constant speed, so the profile stays exactly piecewise
//! constant. An event happens when neighbouring fronts meet, or when a
//! front whose flanking states violate the flux bound reaches the gate at
//! x = 0. Each event replaces the participating fronts by the lattice
//! solution of the local Riemann problem and appends a classified
//! interaction record.
//!
//! Termination rests on the decay functional
//! `T = TV(v) + TV(w) + 2 (upsilon_hat + upsilon_check)`,
//! where the two upsilon terms weigh the profile through the gate trace
//! maps upstream and downstream of x = 0. T never increases, and it drops
//! by at least the lattice spacing whenever the front count grows. Both
//! facts are checked at every event, as is membership of the outcome in
//! the catalogue of admissible interaction patterns.

use std::collections::HashMap;

use serde::Serialize;

use crate::constraint::FluxRegime;
use crate::grid::Grid;
use crate::model::{ModelParams, State};
use crate::riemann::{self, Wave, WaveKind};
use crate::{Error, Result};

/// Fronts closer than this are treated as sitting at the same location and
/// take part in the same interaction. A location within this distance of
/// the origin is treated as the gate itself.
pub const POSITION_MERGE_TOL: f64 = 1e-10;

/// A front predicted to cross x = 0 within this much time of an event at
/// the gate joins that event instead of crossing separately.
pub const CROSSING_TIME_TOL: f64 = 1e-12;

/// Speed differences below this never produce a meeting time.
const PARALLEL_TOL: f64 = 1e-14;

/// Numerical slack granted to every identity or monotonicity statement
/// about the decay functional.
const TEMPLE_SLACK: f64 = 1e-9;

/// Threshold separating a genuine strict decrease of the functional from
/// floating-point noise. Genuine drops are combinations of lattice gaps
/// and are many orders of magnitude larger.
const STRICT_DROP: f64 = 1e-11;

/// A piecewise constant profile: one leftmost value plus jumps at
/// ascending positions. The stored jumps are normalised, i.e. strictly
/// ascending and never trivial.
#[derive(Debug, Clone, Serialize)]
pub struct PiecewiseState {
    leftmost: State,
    jumps: Vec<(f64, State)>,
}

impl PiecewiseState {
    /// Builds a profile from raw pieces. Positions must be finite and
    /// non-decreasing; several values at one position collapse to the last
    /// one and jumps onto the current value are dropped.
    pub fn new(leftmost: State, jumps: Vec<(f64, State)>) -> Result<Self> {
        let mut collapsed: Vec<(f64, State)> = Vec::with_capacity(jumps.len());
        for (x, u) in jumps {
            if !x.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "datum jump at non-finite position {x}"
                )));
            }
            match collapsed.last_mut() {
                Some(last) if x < last.0 => {
                    return Err(Error::InvalidParams(format!(
                        "datum jumps out of order: {x} after {}",
                        last.0
                    )));
                }
                Some(last) if x == last.0 => last.1 = u,
                _ => collapsed.push((x, u)),
            }
        }
        let mut out = Vec::with_capacity(collapsed.len());
        let mut current = leftmost;
        for (x, u) in collapsed {
            if u != current {
                out.push((x, u));
                current = u;
            }
        }
        Ok(PiecewiseState { leftmost, jumps: out })
    }

    fn unchecked(leftmost: State, jumps: Vec<(f64, State)>) -> Self {
        PiecewiseState { leftmost, jumps }
    }

    pub fn leftmost(&self) -> State {
        self.leftmost
    }

    pub fn jumps(&self) -> &[(f64, State)] {
        &self.jumps
    }

    /// Value at x, right-continuous across jumps.
    pub fn eval(&self, x: f64) -> State {
        let mut u = self.leftmost;
        for &(pos, v) in &self.jumps {
            if pos <= x {
                u = v;
            } else {
                break;
            }
        }
        u
    }

    /// Value immediately to the left of x.
    pub fn eval_left(&self, x: f64) -> State {
        let mut u = self.leftmost;
        for &(pos, v) in &self.jumps {
            if pos < x {
                u = v;
            } else {
                break;
            }
        }
        u
    }

    /// Breakpoints of the profile clipped to a window, including both
    /// window ends.
    pub fn breakpoints(&self, window: (f64, f64)) -> Vec<f64> {
        let mut xs = vec![window.0];
        for &(pos, _) in &self.jumps {
            if pos > window.0 && pos < window.1 {
                xs.push(pos);
            }
        }
        xs.push(window.1);
        xs
    }

    /// Integral of the density over the window.
    pub fn mass(&self, window: (f64, f64), params: &ModelParams) -> f64 {
        debug_assert!(window.0 <= window.1);
        let xs = self.breakpoints(window);
        let mut total = 0.0;
        for pair in xs.windows(2) {
            let mid = 0.5 * (pair[0] + pair[1]);
            total += self.eval(mid).rho(params) * (pair[1] - pair[0]);
        }
        total
    }

    /// Total variation of the profile, coordinate by coordinate.
    pub fn variation(&self, params: &ModelParams) -> Variation {
        let mut out = Variation {
            v: 0.0,
            w: 0.0,
            rho: 0.0,
        };
        let mut prev = self.leftmost;
        for &(_, next) in &self.jumps {
            out.v += (next.speed() - prev.speed()).abs();
            out.w += (next.marker() - prev.marker()).abs();
            out.rho += (next.rho(params) - prev.rho(params)).abs();
            prev = next;
        }
        out
    }
}

/// Total variation of a piecewise constant profile in each coordinate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Variation {
    pub v: f64,
    pub w: f64,
    pub rho: f64,
}

/// Integral over the window of a pointwise distance between two profiles.
pub fn l1_distance(
    a: &PiecewiseState,
    b: &PiecewiseState,
    window: (f64, f64),
    metric: impl Fn(State, State) -> f64,
) -> f64 {
    debug_assert!(window.0 <= window.1);
    let mut xs = a.breakpoints(window);
    xs.extend(b.breakpoints(window));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut total = 0.0;
    for pair in xs.windows(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        total += metric(a.eval(mid), b.eval(mid)) * (pair[1] - pair[0]);
    }
    total
}

/// One tracked discontinuity. The position is current as of the owning
/// simulation's clock; the speed is the constant propagation speed of the
/// carried wave, zero for the non-classical shock pinned at the gate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Front {
    pub id: u64,
    pub position: f64,
    pub speed: f64,
    pub wave: Wave,
}

/// The decay functional split into its four summands.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct TempleBreakdown {
    pub tv_v: f64,
    pub tv_w: f64,
    pub upsilon_hat: f64,
    pub upsilon_check: f64,
    pub total: f64,
}

/// Front count and functional value right after one event.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StatSample {
    pub time: f64,
    pub front_count: usize,
    pub temple: TempleBreakdown,
}

/// Outcome of one event, classified against the interaction catalogue.
///
/// `table_row` is the incoming signature: wave labels joined by `-`, with
/// suffix `_0` for gate events that keep the flux bound inactive, `_F^+`
/// or `_F^-` for gate events that activate it (bound at least, or below,
/// the lower critical flux), and no suffix away from the gate. `novel`
/// marks outcomes outside the two-front catalogue — simultaneous arrivals
/// merged into one event — which are held only to the generic decay
/// guards.
#[derive(Debug, Clone, Serialize)]
pub struct InteractionRecord {
    pub time: f64,
    pub location: f64,
    pub table_row: String,
    pub incoming: Vec<Wave>,
    pub outgoing: Vec<Wave>,
    pub delta_front_count: i64,
    pub delta_temple: f64,
    pub novel: bool,
}

/// Hard budgets stopping a runaway simulation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RunLimits {
    pub max_events: usize,
    pub max_fronts: usize,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits { max_events: 1_000_000, max_fronts: 100_000 }
    }
}

/// Snapshot of the front pattern at the start of one inter-event interval.
#[derive(Debug, Clone, Serialize)]
pub struct Epoch {
    pub start: f64,
    pub leftmost: State,
    pub fronts: Vec<Front>,
}

impl Epoch {
    /// Profile after the fronts moved freely for `dt`.
    pub fn advanced(&self, dt: f64) -> PiecewiseState {
        let jumps = self
            .fronts
            .iter()
            .map(|f| (f.position + f.speed * dt, f.wave.right))
            .collect();
        PiecewiseState::unchecked(self.leftmost, jumps)
    }

    pub fn profile(&self) -> PiecewiseState {
        self.advanced(0.0)
    }
}

/// Full history of one run: initial datum, one epoch per event, the event
/// records and the sampled statistics.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub grid: Grid,
    pub datum: PiecewiseState,
    pub epochs: Vec<Epoch>,
    pub records: Vec<InteractionRecord>,
    pub stats: Vec<StatSample>,
    pub final_time: f64,
    pub novel_events: usize,
    pub merged_events: usize,
}

impl Trajectory {
    /// Profile at time t, left-continuous in t: at an event time this is
    /// the pre-event pattern, and at t = 0 the initial datum.
    pub fn profile_at(&self, t: f64) -> Result<PiecewiseState> {
        if !t.is_finite() || t < 0.0 || t > self.final_time {
            return Err(Error::InvalidParams(format!(
                "sample time {t} outside the simulated range [0, {}]",
                self.final_time
            )));
        }
        if t == 0.0 {
            return Ok(self.datum.clone());
        }
        let k = self.epochs.partition_point(|e| e.start < t);
        debug_assert!(k > 0);
        let epoch = &self.epochs[k - 1];
        Ok(epoch.advanced(t - epoch.start))
    }

    pub fn sample(&self, t: f64, xs: &[f64]) -> Result<Vec<State>> {
        let profile = self.profile_at(t)?;
        Ok(xs.iter().map(|&x| profile.eval(x)).collect())
    }

    /// States flanking the gate, `(u(t, 0-), u(t, 0+))`.
    pub fn gate_traces(&self, t: f64) -> Result<(State, State)> {
        let profile = self.profile_at(t)?;
        Ok((profile.eval_left(0.0), profile.eval(0.0)))
    }

    pub fn mass(&self, t: f64, window: (f64, f64)) -> Result<f64> {
        Ok(self.profile_at(t)?.mass(window, &self.params))
    }

    /// A-priori constants of the run, combining the decay functional right
    /// after initialisation with the coordinate-to-density slope of the
    /// model: every coordinate difference satisfies
    /// `|d rho| <= coord_to_density * (|d v| + |d w|)`, the total variation
    /// of (rho, v) stays below `tv_bound`, and the profile moves in L1 at
    /// rate at most `l1_rate`.
    pub fn a_priori_constants(&self) -> AprioriConstants {
        let p = &self.params;
        let mut slope = p.rho_minus;
        let steps = 4096;
        for i in 0..=steps {
            let rho = p.rho_minus + (p.rho_max - p.rho_minus) * i as f64 / steps as f64;
            slope = slope.max(1.0 / p.pressure.derivative(rho));
        }
        let initial = self.stats.first().map_or(0.0, |s| s.temple.total);
        let tv_bound = (1.0 + slope) * initial;
        let l1_rate = tv_bound * p.v_max.max(p.rho_max * p.pressure.derivative(p.rho_max));
        AprioriConstants {
            coord_to_density: slope,
            tv_bound,
            l1_rate,
        }
    }

    /// Collects each front once, in order of first appearance, with the
    /// time span it survives. A front keeps its id, states and speed from
    /// birth to death; only its position changes, so every segment is a
    /// straight line in the (x, t) plane.
    pub fn front_segments(&self) -> Vec<FrontSegment> {
        let mut seen: HashMap<u64, usize> = HashMap::new();
        let mut lives: Vec<FrontSegment> = Vec::new();
        for (i, epoch) in self.epochs.iter().enumerate() {
            let end = self
                .epochs
                .get(i + 1)
                .map_or(self.final_time, |next| next.start);
            for front in &epoch.fronts {
                match seen.get(&front.id) {
                    Some(&at) => lives[at].death = end,
                    None => {
                        seen.insert(front.id, lives.len());
                        lives.push(FrontSegment {
                            front: *front,
                            birth: epoch.start,
                            death: end,
                        });
                    }
                }
            }
        }
        lives
    }
}

/// One front over its whole life: `front.position` is the position at
/// birth, and the front dies in the event at time `death` (or survives to
/// the end of the run).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrontSegment {
    pub front: Front,
    pub birth: f64,
    pub death: f64,
}

/// Uniform bounds measured from a run's own initial data; see
/// [`Trajectory::a_priori_constants`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AprioriConstants {
    pub coord_to_density: f64,
    pub tv_bound: f64,
    pub l1_rate: f64,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    location: f64,
}

#[derive(Clone, Copy)]
enum SharpRule {
    Exact(i64),
    Within(i64, i64),
}

#[derive(Clone, Copy)]
enum TempleRule {
    Conserved,
    NonIncreasing,
    Decreasing,
}

struct RowSpec {
    patterns: &'static [&'static str],
    sharp: SharpRule,
    temple: TempleRule,
}

/// Catalogue of admissible two-front (and single-crossing) interactions.
///
/// Each row lists the allowed outgoing patterns (`RS+` standing for one or
/// more rarefaction shocks), the allowed change of the front count and the
/// behaviour of the decay functional. `fan_cap` is `2^n - 1`, the largest
/// front-count increase a rarefaction fan can produce at level n.
fn row_spec(label: &str, fan_cap: i64) -> Option<RowSpec> {
    use SharpRule::{Exact, Within};
    use TempleRule::{Conserved, Decreasing, NonIncreasing};
    let row = |patterns, sharp, temple| Some(RowSpec { patterns, sharp, temple });
    match label {
        // Meetings away from the gate.
        "CD-S" => row(&["S CD", "PT CD", "PT"], Within(-1, 0), Conserved),
        "CD-RS" => row(&["RS CD"], Exact(0), Conserved),
        "CD-PT" => row(&["PT CD", "PT", "S CD", "S"], Within(-1, 0), NonIncreasing),
        "S-S" => row(&["S"], Exact(-1), Conserved),
        "S-RS" => row(&["S"], Exact(-1), Decreasing),
        "RS-S" => row(&["S"], Exact(-1), Decreasing),
        "PT-S" => row(&["PT"], Exact(-1), Conserved),
        "PT-RS" => row(&["PT", "CD"], Exact(-1), Decreasing),

        // Single fronts reaching the gate with the bound active.
        "CD_F^+" => row(&["S NS CD", "S NS"], Within(1, 2), Decreasing),
        "RS_F^+" => row(&["NS CD"], Exact(1), Decreasing),
        "CD_F^-" => {
            row(&["S NS CD", "S NS", "PT NS CD", "PT NS"], Within(1, 2), Decreasing)
        }
        "RS_F^-" => row(&["NS PT", "NS CD"], Exact(1), Decreasing),

        // Meetings at the gate that leave the bound inactive.
        "CD-S_0" => row(&["S CD", "PT CD", "PT"], Within(-1, 0), NonIncreasing),
        "CD-RS_0" => row(&["RS CD"], Exact(0), NonIncreasing),
        "CD-NS_0" => row(&["RS+ CD", "RS+"], Within(-1, fan_cap), Decreasing),
        "CD-PT_0" => row(&["PT CD", "PT", "S CD", "S"], Within(-1, 0), NonIncreasing),
        "S-S_0" => row(&["S"], Exact(-1), Conserved),
        "S-RS_0" => row(&["S"], Exact(-1), Decreasing),
        "RS-S_0" => row(&["S"], Exact(-1), Decreasing),
        "NS-S_0" => row(&["S CD", "CD"], Within(-1, 0), Decreasing),
        "NS-PT_0" => row(&["S CD", "S", "CD"], Within(-1, 0), Decreasing),
        "PT-S_0" => row(&["PT"], Exact(-1), Conserved),
        "PT-RS_0" => row(&["PT", "CD"], Exact(-1), Decreasing),
        "PT-NS_0" => row(&["CD", "PT"], Exact(-1), Decreasing),

        // Meetings at the gate that activate the bound, which sits at or
        // above the lower critical flux ...
        "CD-S_F^+" => row(&["S NS CD"], Exact(1), Decreasing),
        "CD-RS_F^+" => {
            row(&["S NS CD", "NS CD", "S NS", "NS"], Within(-1, 1), Decreasing)
        }
        "CD-NS_F^+" => row(&["RS+ NS", "S NS"], Within(0, fan_cap), Decreasing),
        "CD-PT_F^+" => row(&["S NS CD"], Exact(1), Decreasing),
        "NS-S_F^+" => row(&["NS CD"], Exact(0), Decreasing),
        "NS-RS_F^+" => row(&["NS CD"], Exact(0), Decreasing),

        // ... and below it, where the downstream trace may be a light free
        // state and phase transitions appear on the outgoing side.
        "CD-S_F^-" => row(&["S NS CD"], Exact(1), Decreasing),
        "CD-RS_F^-" => row(
            &["S NS CD", "S NS PT", "NS CD", "NS PT", "S NS", "NS"],
            Within(-1, 1),
            Decreasing,
        ),
        "CD-NS_F^-" => row(&["RS+ NS", "S NS"], Within(0, fan_cap), Decreasing),
        "CD-PT_F^-" => row(&["S NS CD", "S NS"], Within(0, 1), Decreasing),
        "NS-S_F^-" => row(&["NS CD"], Exact(0), Decreasing),
        "NS-RS_F^-" => row(&["NS PT", "NS CD"], Exact(0), Decreasing),
        "NS-PT_F^-" => row(&["NS CD"], Exact(0), Decreasing),
        _ => None,
    }
}

fn pattern_matches(pattern: &str, kinds: &[WaveKind]) -> bool {
    let mut i = 0;
    for token in pattern.split_whitespace() {
        if token == "RS+" {
            let start = i;
            while i < kinds.len() && kinds[i] == WaveKind::RarefactionShock {
                i += 1;
            }
            if i == start {
                return false;
            }
        } else {
            if i >= kinds.len() || kinds[i].label() != token {
                return false;
            }
            i += 1;
        }
    }
    i == kinds.len()
}

fn validate_row(record: &InteractionRecord, spec: &RowSpec) -> Result<()> {
    let kinds: Vec<WaveKind> = record.outgoing.iter().map(|w| w.kind).collect();
    if !spec.patterns.iter().any(|p| pattern_matches(p, &kinds)) {
        let got: Vec<&str> = kinds.iter().map(|k| k.label()).collect();
        return Err(Error::InteractionMismatch(format!(
            "{} at t = {:.6}: outgoing pattern [{}] not among {:?}",
            record.table_row,
            record.time,
            got.join(" "),
            spec.patterns
        )));
    }
    let ok = match spec.sharp {
        SharpRule::Exact(k) => record.delta_front_count == k,
        SharpRule::Within(lo, hi) => {
            (lo..=hi).contains(&record.delta_front_count)
        }
    };
    if !ok {
        return Err(Error::InteractionMismatch(format!(
            "{} at t = {:.6}: front count changed by {}",
            record.table_row, record.time, record.delta_front_count
        )));
    }
    let ok = match spec.temple {
        TempleRule::Conserved => record.delta_temple.abs() <= TEMPLE_SLACK,
        TempleRule::NonIncreasing => record.delta_temple <= TEMPLE_SLACK,
        TempleRule::Decreasing => record.delta_temple <= -STRICT_DROP,
    };
    if !ok {
        return Err(Error::InteractionMismatch(format!(
            "{} at t = {:.6}: functional changed by {:+.3e}",
            record.table_row, record.time, record.delta_temple
        )));
    }
    Ok(())
}

/// The tracking engine: the current front pattern plus the accumulated
/// history. Construction solves the initial Riemann problems; afterwards
/// `advance_to` plays events forward in time.
pub struct Simulation {
    params: ModelParams,
    grid: Grid,
    limits: RunLimits,
    time: f64,
    leftmost: State,
    fronts: Vec<Front>,
    next_id: u64,
    /// Upstream trace of each marker node, indexed like `grid.markers`.
    hat_of: Vec<State>,
    /// Downstream trace of each speed node, indexed like `grid.speeds`.
    check_of: Vec<State>,
    datum: PiecewiseState,
    records: Vec<InteractionRecord>,
    stats: Vec<StatSample>,
    epochs: Vec<Epoch>,
    novel_events: usize,
    merged_events: usize,
}

impl Simulation {
    /// Sets up the front pattern at t = 0 from a lattice-valued datum.
    ///
    /// Every datum jump spawns the fan of its Riemann problem; the jump at
    /// x = 0 (inserted even where the datum is continuous) goes through
    /// the constrained solver, so a non-classical shock appears whenever
    /// the datum pushes more than the bound through the gate.
    pub fn new(
        params: &ModelParams,
        grid: Grid,
        datum: &PiecewiseState,
        limits: RunLimits,
    ) -> Result<Self> {
        let leftmost = grid.snap_state(datum.leftmost, params)?;
        let mut jumps = Vec::with_capacity(datum.jumps.len());
        for &(x, u) in &datum.jumps {
            let x = if x.abs() <= POSITION_MERGE_TOL { 0.0 } else { x };
            jumps.push((x, grid.snap_state(u, params)?));
        }
        let datum = PiecewiseState::new(leftmost, jumps)?;

        let hat_of = grid
            .markers
            .iter()
            .map(|&w| grid.data.upstream_trace(w, params))
            .collect::<Result<Vec<_>>>()?;
        let check_of = grid
            .speeds
            .iter()
            .map(|&v| grid.data.downstream_trace(v, params))
            .collect::<Result<Vec<_>>>()?;

        let mut work = datum.jumps.clone();
        if !work.iter().any(|&(x, _)| x == 0.0) {
            let at = work.partition_point(|&(x, _)| x < 0.0);
            work.insert(at, (0.0, datum.eval(0.0)));
        }

        let mut sim = Simulation {
            params: *params,
            grid,
            limits,
            time: 0.0,
            leftmost,
            fronts: Vec::new(),
            next_id: 0,
            hat_of,
            check_of,
            datum,
            records: Vec::new(),
            stats: Vec::new(),
            epochs: Vec::new(),
            novel_events: 0,
            merged_events: 0,
        };

        let mut current = leftmost;
        for (x, u) in work {
            let fan = if x == 0.0 {
                riemann::solve_grid_constrained(current, u, &sim.grid, &sim.params)?
            } else {
                riemann::solve_grid(current, u, &sim.grid, &sim.params)?
            };
            fan.validate(&sim.params)?;
            for &wave in &fan.waves {
                sim.push_front(x, wave);
            }
            current = u;
        }
        if sim.fronts.len() > sim.limits.max_fronts {
            return Err(Error::GuardBreach(format!(
                "initial datum spawns {} fronts, over the budget of {}",
                sim.fronts.len(),
                sim.limits.max_fronts
            )));
        }
        sim.assert_consistent();
        sim.push_checkpoint()?;
        Ok(sim)
    }

    fn push_front(&mut self, position: f64, wave: Wave) {
        let id = self.next_id;
        self.next_id += 1;
        self.fronts.push(Front { id, position, speed: wave.speed(), wave });
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn fronts(&self) -> &[Front] {
        &self.fronts
    }

    pub fn front_count(&self) -> usize {
        self.fronts.len()
    }

    pub fn records(&self) -> &[InteractionRecord] {
        &self.records
    }

    pub fn stats(&self) -> &[StatSample] {
        &self.stats
    }

    pub fn profile(&self) -> PiecewiseState {
        let jumps = self
            .fronts
            .iter()
            .map(|f| (f.position, f.wave.right))
            .collect();
        PiecewiseState::unchecked(self.leftmost, jumps)
    }

    /// Decay functional of the current pattern (post-event convention for
    /// fronts sitting exactly at the gate).
    pub fn temple(&self) -> Result<TempleBreakdown> {
        self.temple_signed(false)
    }

    /// The two variation terms split the line at the gate, so a front
    /// sitting exactly at x = 0 is attributed to the side it is leaving
    /// (post-event, `incoming = false`) or the side it came from
    /// (pre-event, `incoming = true`); the stationary non-classical shock
    /// belongs to neither side.
    fn temple_signed(&self, incoming: bool) -> Result<TempleBreakdown> {
        let mut out = TempleBreakdown::default();
        for f in &self.fronts {
            let (l, r) = (f.wave.left, f.wave.right);
            out.tv_v += (r.speed() - l.speed()).abs();
            out.tv_w += (r.marker() - l.marker()).abs();
            let side = if f.position != 0.0 {
                f.position
            } else if incoming {
                -f.speed
            } else {
                f.speed
            };
            if side < 0.0 {
                let (a, b) = (self.hat_state(l)?, self.hat_state(r)?);
                out.upsilon_hat += (b.speed() - a.speed()).max(0.0)
                    + (a.marker() - b.marker()).max(0.0);
            } else if side > 0.0 {
                let (a, b) = (self.check_state(l)?, self.check_state(r)?);
                out.upsilon_check += (b.speed() - a.speed()).max(0.0)
                    + (a.marker() - b.marker()).max(0.0);
            }
        }
        out.total = out.tv_v + out.tv_w + 2.0 * (out.upsilon_hat + out.upsilon_check);
        Ok(out)
    }

    fn hat_state(&self, u: State) -> Result<State> {
        let j = self.grid.marker_index(u.marker()).map_err(|_| {
            Error::GuardBreach("tracked front left the marker lattice".into())
        })?;
        Ok(self.hat_of[j])
    }

    fn check_state(&self, u: State) -> Result<State> {
        let i = self.grid.speed_index(u.speed()).map_err(|_| {
            Error::GuardBreach("tracked front left the speed lattice".into())
        })?;
        Ok(self.check_of[i])
    }

    fn push_checkpoint(&mut self) -> Result<()> {
        let temple = self.temple_signed(false)?;
        self.stats.push(StatSample {
            time: self.time,
            front_count: self.fronts.len(),
            temple,
        });
        self.epochs.push(Epoch {
            start: self.time,
            leftmost: self.leftmost,
            fronts: self.fronts.clone(),
        });
        Ok(())
    }

    /// Earliest pending event: the first meeting of neighbouring fronts,
    /// or the first arrival at the gate of a front whose flanking pair
    /// activates the bound. Arrivals of fronts whose pair keeps the bound
    /// inactive are not events: the constrained solution coincides with
    /// the free one there, so such fronts cross silently. Simultaneous
    /// candidates resolve left to right.
    fn next_event(&self) -> Option<Event> {
        let mut best: Option<Event> = None;
        let mut consider = |time: f64, location: f64| {
            if !time.is_finite() {
                return;
            }
            let better = match best {
                None => true,
                Some(b) => (time, location) < (b.time, b.location),
            };
            if better {
                best = Some(Event { time, location });
            }
        };

        for pair in self.fronts.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let closing = a.speed - b.speed;
            if closing <= PARALLEL_TOL {
                continue;
            }
            let dt = ((b.position - a.position) / closing).max(0.0);
            consider(self.time + dt, a.position + a.speed * dt);
        }

        for f in &self.fronts {
            let heading_in = (f.position < -POSITION_MERGE_TOL && f.speed > PARALLEL_TOL)
                || (f.position > POSITION_MERGE_TOL && f.speed < -PARALLEL_TOL);
            if !heading_in {
                continue;
            }
            if self
                .grid
                .data
                .admits_unconstrained(f.wave.left, f.wave.right, &self.params)
            {
                continue;
            }
            consider(self.time - f.position / f.speed, 0.0);
        }
        best
    }

    /// Advances the clock to the event, resolves it, and validates the
    /// outcome against the interaction catalogue and the decay guards.
    fn step(&mut self, ev: Event) -> Result<()> {
        let dt = ev.time - self.time;
        debug_assert!(dt >= 0.0);
        for f in &mut self.fronts {
            f.position += f.speed * dt;
        }
        self.time = ev.time;

        let at_gate = ev.location.abs() <= POSITION_MERGE_TOL;
        let location = if at_gate { 0.0 } else { ev.location };

        let mut first = None;
        let mut last = 0;
        for (i, f) in self.fronts.iter().enumerate() {
            if (f.position - location).abs() <= POSITION_MERGE_TOL {
                if first.is_none() {
                    first = Some(i);
                }
                last = i;
            } else if first.is_some() {
                break;
            }
        }
        let Some(mut first) = first else {
            return Err(Error::GuardBreach(format!(
                "event at t = {:.6}, x = {location:.6} has no participating front",
                self.time
            )));
        };
        if at_gate {
            while first > 0 {
                let f = &self.fronts[first - 1];
                if f.position < 0.0
                    && f.speed > 0.0
                    && -f.position <= f.speed * CROSSING_TIME_TOL
                {
                    first -= 1;
                } else {
                    break;
                }
            }
            while last + 1 < self.fronts.len() {
                let f = &self.fronts[last + 1];
                if f.position > 0.0
                    && f.speed < 0.0
                    && f.position <= -f.speed * CROSSING_TIME_TOL
                {
                    last += 1;
                } else {
                    break;
                }
            }
        }
        if first == last && !at_gate {
            return Err(Error::GuardBreach(format!(
                "meeting at t = {:.6}, x = {location:.6} with a single front",
                self.time
            )));
        }

        // Land the participants exactly on the event location before the
        // pre-event functional is taken: a leftover rounding residue of
        // the position update would otherwise put a front arriving at the
        // gate on an arbitrary side of x = 0.
        for f in &mut self.fronts[first..=last] {
            f.position = location;
        }

        let incoming: Vec<Wave> =
            self.fronts[first..=last].iter().map(|f| f.wave).collect();
        let u_l = incoming[0].left;
        let u_r = incoming[incoming.len() - 1].right;
        let before = self.temple_signed(true)?;

        let (fan, admitted) = if at_gate {
            let admitted =
                self.grid.data.admits_unconstrained(u_l, u_r, &self.params);
            let fan =
                riemann::solve_grid_constrained(u_l, u_r, &self.grid, &self.params)?;
            (fan, Some(admitted))
        } else {
            (riemann::solve_grid(u_l, u_r, &self.grid, &self.params)?, None)
        };
        fan.validate(&self.params)?;

        let outgoing = fan.waves.clone();
        let replacement: Vec<Front> = outgoing
            .iter()
            .map(|&wave| {
                let id = self.next_id;
                self.next_id += 1;
                Front { id, position: location, speed: wave.speed(), wave }
            })
            .collect();
        self.fronts.splice(first..=last, replacement);
        let after = self.temple_signed(false)?;

        let suffix = match admitted {
            None => "",
            Some(true) => "_0",
            Some(false) => match self.grid.data.regime {
                FluxRegime::BelowMax | FluxRegime::AtMax => "_F^+",
                FluxRegime::BelowCritical | FluxRegime::Zero => "_F^-",
            },
        };
        let labels: Vec<&str> = incoming.iter().map(|w| w.kind.label()).collect();
        let table_row = format!("{}{}", labels.join("-"), suffix);

        let record = InteractionRecord {
            time: self.time,
            location,
            table_row,
            delta_front_count: outgoing.len() as i64 - incoming.len() as i64,
            delta_temple: after.total - before.total,
            incoming,
            outgoing,
            novel: false,
        };
        self.finish_record(record, at_gate)?;

        self.assert_consistent();
        self.push_checkpoint()?;
        if self.records.len() > self.limits.max_events {
            return Err(Error::GuardBreach(format!(
                "interaction budget of {} events exhausted at t = {:.6}",
                self.limits.max_events, self.time
            )));
        }
        if self.fronts.len() > self.limits.max_fronts {
            return Err(Error::GuardBreach(format!(
                "front budget of {} exceeded at t = {:.6}",
                self.limits.max_fronts, self.time
            )));
        }
        Ok(())
    }

    /// Applies the generic decay guards, then the catalogue row if one
    /// exists. Merged simultaneous arrivals (three or more incoming
    /// fronts, or two moving fronts reaching the gate together) fall
    /// outside the catalogue and are recorded as novel instead.
    fn finish_record(&mut self, mut record: InteractionRecord, at_gate: bool) -> Result<()> {
        if record.delta_temple > TEMPLE_SLACK {
            return Err(Error::GuardBreach(format!(
                "{} at t = {:.6}: functional grew by {:+.3e}",
                record.table_row, record.time, record.delta_temple
            )));
        }
        let fan_cap = (1i64 << self.grid.level) - 1;
        if record.delta_front_count > fan_cap {
            return Err(Error::GuardBreach(format!(
                "{} at t = {:.6}: front count jumped by {}, over the fan bound {}",
                record.table_row, record.time, record.delta_front_count, fan_cap
            )));
        }
        if record.delta_front_count > 0
            && record.delta_temple > -self.grid.min_spacing + TEMPLE_SLACK
        {
            return Err(Error::GuardBreach(format!(
                "{} at t = {:.6}: {} new fronts but the functional only moved {:+.3e}",
                record.table_row,
                record.time,
                record.delta_front_count,
                record.delta_temple
            )));
        }

        match row_spec(&record.table_row, fan_cap) {
            Some(spec) => validate_row(&record, &spec)?,
            None => {
                let moving_pair_at_gate = at_gate
                    && record.incoming.len() == 2
                    && record.incoming.iter().all(|w| w.kind != WaveKind::NonClassical);
                if record.incoming.len() >= 3 {
                    self.merged_events += 1;
                } else if !moving_pair_at_gate {
                    return Err(Error::InteractionMismatch(format!(
                        "{} at t = {:.6}: configuration outside the catalogue",
                        record.table_row, record.time
                    )));
                }
                record.novel = true;
                self.novel_events += 1;
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// Plays all events up to and including `t_end`, then parks the
    /// pattern there.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        if !t_end.is_finite() || t_end < self.time {
            return Err(Error::InvalidParams(format!(
                "cannot advance to t = {t_end} from t = {}",
                self.time
            )));
        }
        while let Some(ev) = self.next_event() {
            if ev.time > t_end {
                break;
            }
            self.step(ev)?;
        }
        let dt = t_end - self.time;
        for f in &mut self.fronts {
            f.position += f.speed * dt;
        }
        self.time = t_end;
        Ok(())
    }

    pub fn into_trajectory(self) -> Trajectory {
        Trajectory {
            params: self.params,
            grid: self.grid,
            datum: self.datum,
            epochs: self.epochs,
            records: self.records,
            stats: self.stats,
            final_time: self.time,
            novel_events: self.novel_events,
            merged_events: self.merged_events,
        }
    }

    fn assert_consistent(&self) {
        #[cfg(debug_assertions)]
        {
            let mut current = self.leftmost;
            let mut position = f64::NEG_INFINITY;
            for f in &self.fronts {
                debug_assert!(
                    f.position >= position - POSITION_MERGE_TOL,
                    "fronts out of order at x = {}",
                    f.position
                );
                position = position.max(f.position);
                debug_assert!(
                    f.wave.left == current,
                    "front chain broken at x = {}",
                    f.position
                );
                current = f.wave.right;
            }
        }
    }
}

/// Runs a full simulation and returns its history.
pub fn run(
    params: &ModelParams,
    grid: Grid,
    datum: &PiecewiseState,
    t_end: f64,
    limits: RunLimits,
) -> Result<Trajectory> {
    let mut sim = Simulation::new(params, grid, datum, limits)?;
    sim.advance_to(t_end)?;
    Ok(sim.into_trajectory())
}
