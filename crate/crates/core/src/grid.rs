//! Speed/marker lattices underlying the approximate Riemann solvers.
//!
//! At refinement level n the approximate solvers only produce states whose
//! coordinates lie on two finite ladders: a speed ladder and a marker
//! ladder, each made of bands of 2^n sub-intervals. The bands depend on the
//! regime of the flux bound so that every landmark value (0, `v_lo`, `v_hi`,
//! V, the marker floor, `w_cut`, the band edges) is a node:
//!
//! * shut gate - one uniform speed band [0, V]; marker bands
//!   [floor, w_minus] and [w_minus, w_plus];
//! * bound below the critical free flux - speed bands [0, v_lo],
//!   (v_lo, v_hi] and (v_hi, V]; marker bands [floor, w_cut],
//!   (w_cut, w_minus] and (w_minus, w_plus];
//! * bound at least the critical free flux - speed bands [0, v_lo] and
//!   (v_lo, V]; marker bands [floor, w_minus], (w_minus, w_cut] and
//!   (w_cut, w_plus].
//!
//! The middle speed band is not uniform: its nodes are the speeds of the
//! flux-bound states whose markers are the nodes of the top marker band, so
//! the trace states produced at the origin land on the lattice exactly.
//! Bands degenerate when the bound sits on a critical flux; duplicate nodes
//! are then collapsed.
//!
//! The lattice also carries its two mesh parameters: `min_spacing`, the
//! smallest coordinate distance between distinct nodes (every interaction
//! that increases the wave count must pay at least this much of the shape
//! functional), and `max_speed_gap`, the largest gap between consecutive
//! speed nodes (the strength ceiling of a single rarefaction shock).

use crate::constraint::{ConstraintData, FluxRegime};
use crate::model::{ModelParams, State};
use crate::{Error, Result};
use serde::Serialize;

/// Tolerance for matching a coordinate onto a lattice node.
pub const SNAP_TOL: f64 = 1e-9;

/// Finite state lattice for one refinement level and one flux bound.
#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    /// Refinement level n; each band has 2^n sub-intervals.
    pub level: u32,
    pub data: ConstraintData,
    /// Ascending speed nodes, duplicates collapsed.
    pub speeds: Vec<f64>,
    /// Ascending marker nodes, duplicates collapsed.
    pub markers: Vec<f64>,
    /// Minimal coordinate distance between two distinct lattice states.
    pub min_spacing: f64,
    /// Maximal gap between consecutive speed nodes.
    pub max_speed_gap: f64,
}

/// Appends `a + t (b - a)` for t = 1/steps, ..., 1, forcing the final node
/// to exactly `b`. The caller seeds the band start.
fn fill_band(out: &mut Vec<f64>, a: f64, b: f64, steps: usize) {
    for i in 1..steps {
        out.push(a + (b - a) * (i as f64 / steps as f64));
    }
    out.push(b);
}

fn dedup_exact(mut nodes: Vec<f64>) -> Vec<f64> {
    nodes.dedup();
    nodes
}

fn min_gap(nodes: &[f64]) -> f64 {
    nodes.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min)
}

fn max_gap(nodes: &[f64]) -> f64 {
    nodes.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max)
}

impl Grid {
    pub fn new(level: u32, params: &ModelParams, data: ConstraintData) -> Result<Self> {
        if !(1..=16).contains(&level) {
            return Err(Error::InvalidParams(format!(
                "refinement level {level} outside supported range 1..=16"
            )));
        }
        let steps = 1usize << level;
        let floor = params.w_floor();

        let mut markers_raw = vec![floor];
        let mut speeds = vec![0.0];
        match data.regime {
            FluxRegime::Zero => {
                fill_band(&mut markers_raw, floor, params.w_minus, steps);
                fill_band(&mut markers_raw, params.w_minus, params.w_plus, steps);
                fill_band(&mut speeds, 0.0, params.v_max, steps);
            }
            FluxRegime::BelowCritical => {
                fill_band(&mut markers_raw, floor, data.w_cut, steps);
                fill_band(&mut markers_raw, data.w_cut, params.w_minus, steps);
                fill_band(&mut markers_raw, params.w_minus, params.w_plus, steps);
                fill_band(&mut speeds, 0.0, data.v_lo, steps);
                for i in steps + 1..=2 * steps {
                    speeds.push(data.speed_at_marker(markers_raw[4 * steps - i], params)?);
                }
                fill_band(&mut speeds, data.v_hi, params.v_max, steps);
            }
            FluxRegime::BelowMax | FluxRegime::AtMax => {
                fill_band(&mut markers_raw, floor, params.w_minus, steps);
                fill_band(&mut markers_raw, params.w_minus, data.w_cut, steps);
                fill_band(&mut markers_raw, data.w_cut, params.w_plus, steps);
                fill_band(&mut speeds, 0.0, data.v_lo, steps);
                for i in steps + 1..=2 * steps {
                    speeds.push(data.speed_at_marker(markers_raw[4 * steps - i], params)?);
                }
            }
        }

        let markers = dedup_exact(markers_raw);
        let speeds = dedup_exact(speeds);
        debug_assert!(markers.windows(2).all(|p| p[0] < p[1]));
        debug_assert!(speeds.windows(2).all(|p| p[0] < p[1]));

        let min_spacing = min_gap(&markers).min(min_gap(&speeds));
        if min_spacing.is_nan() || min_spacing <= 2.0 * SNAP_TOL {
            return Err(Error::InvalidParams(format!(
                "lattice spacing {min_spacing:e} degenerates at level {level}: \
                 the flux bound sits too close to a regime boundary"
            )));
        }
        let max_speed_gap = max_gap(&speeds);

        Ok(Grid {
            level,
            data,
            speeds,
            markers,
            min_spacing,
            max_speed_gap,
        })
    }

    fn nearest(nodes: &[f64], x: f64) -> (usize, f64) {
        let i = nodes.partition_point(|&node| node < x);
        let mut best = if i < nodes.len() { i } else { nodes.len() - 1 };
        if i > 0 && (x - nodes[i - 1]).abs() < (nodes[best] - x).abs() {
            best = i - 1;
        }
        (best, (nodes[best] - x).abs())
    }

    /// Index of the speed node matching v within [`SNAP_TOL`].
    pub fn speed_index(&self, v: f64) -> Result<usize> {
        let (i, err) = Self::nearest(&self.speeds, v);
        if err <= SNAP_TOL {
            Ok(i)
        } else {
            Err(Error::OffGrid(format!("speed {v} is not a lattice node")))
        }
    }

    /// Index of the marker node matching w within [`SNAP_TOL`].
    pub fn marker_index(&self, w: f64) -> Result<usize> {
        let (i, err) = Self::nearest(&self.markers, w);
        if err <= SNAP_TOL {
            Ok(i)
        } else {
            Err(Error::OffGrid(format!("marker {w} is not a lattice node")))
        }
    }

    /// Replaces both coordinates by the lattice nodes they match within
    /// [`SNAP_TOL`]; fails if either coordinate is further from every node.
    pub fn snap_state(&self, u: State, params: &ModelParams) -> Result<State> {
        let v = self.speeds[self.speed_index(u.speed())?];
        let w = self.markers[self.marker_index(u.marker())?];
        State::from_vw(v, w, params)
    }

    pub fn contains(&self, u: State) -> bool {
        self.speed_index(u.speed()).is_ok() && self.marker_index(u.marker()).is_ok()
    }

    /// Largest speed node not exceeding v (clamped to the bottom node).
    pub fn floor_speed(&self, v: f64) -> f64 {
        let i = self.speeds.partition_point(|&node| node <= v + SNAP_TOL);
        self.speeds[i.saturating_sub(1)]
    }

    /// Largest marker node not exceeding w (clamped to the bottom node).
    pub fn floor_marker(&self, w: f64) -> f64 {
        let i = self.markers.partition_point(|&node| node <= w + SNAP_TOL);
        self.markers[i.saturating_sub(1)]
    }

    /// Projects a state onto the lattice by flooring both coordinates.
    ///
    /// Free states keep v = V because V is a node, so the projection never
    /// moves a state across the phase boundary; congested states stay
    /// congested because the band edges are nodes. Each coordinate moves
    /// down by less than one lattice gap.
    pub fn project_state(&self, u: State, params: &ModelParams) -> State {
        let v = self.floor_speed(u.speed());
        let w = self.floor_marker(u.marker());
        State::from_vw(v, w, params)
            .expect("floor projection preserves admissibility")
    }

    /// Projects a piecewise constant profile (leftmost value plus jumps at
    /// ascending positions) and merges neighbouring pieces that end up
    /// equal.
    ///
    /// Sup-norms never increase and the values move by less than one
    /// lattice gap per coordinate. The total variation of each coordinate
    /// is preserved up to one lattice gap per jump; it cannot increase when
    /// the datum values are themselves nodes.
    pub fn project_datum(
        &self,
        leftmost: State,
        jumps: &[(f64, State)],
        params: &ModelParams,
    ) -> (State, Vec<(f64, State)>) {
        debug_assert!(jumps.windows(2).all(|p| p[0].0 <= p[1].0));
        let first = self.project_state(leftmost, params);
        let mut out: Vec<(f64, State)> = Vec::with_capacity(jumps.len());
        let mut current = first;
        for &(x, u) in jumps {
            let pu = self.project_state(u, params);
            if pu != current {
                out.push((x, pu));
                current = pu;
            }
        }
        (first, out)
    }
}
