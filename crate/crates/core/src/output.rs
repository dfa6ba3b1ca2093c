//! Result files for one run.
//!
//! Four artifacts, each behind its toggle in the scenario's `[output]`
//! section and each opening with a versioned header line:
//!
//! * `fronts.tsv` — one record per tracked front: its straight segment in
//!   the (x, t) plane, wave kind and flanking states;
//! * `fields.csv` — rows `t,x,rho,v,w,f` at the requested sample times,
//!   one row per constant piece inside the window plus a pair of rows for
//!   the gate traces, written at x = -0 and x = 0;
//! * `diagnostics.json` — run summary: parameters, decay-functional
//!   series, interaction records, jump-condition and dissipation audits;
//! * `plot/fronts.dat`, `plot/fields_<i>.dat` — blank-line separated
//!   segments and staircase profiles for standard plotting tools.
//!
//! Values are printed with the shortest round-trip float format, so equal
//! runs produce byte-identical files. Sampling in time is left
//! continuous: a time that hits an event exactly yields the pre-event
//! profile.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::constraint::FluxRegime;
use crate::entropy;
use crate::model::{ModelParams, State};
use crate::scenario::OutputSpec;
use crate::wft::{AprioriConstants, InteractionRecord, StatSample, Trajectory};
use crate::Result;

/// Writes every artifact `spec` enables into `dir`, creating it if
/// needed, and returns the written paths.
pub fn write_all(traj: &Trajectory, spec: &OutputSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |path: PathBuf, text: String| -> Result<()> {
        fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    if spec.fronts {
        emit(dir.join("fronts.tsv"), fronts_tsv(traj))?;
    }
    if spec.fields {
        emit(dir.join("fields.csv"), fields_csv(traj, spec)?)?;
    }
    if spec.diagnostics {
        emit(dir.join("diagnostics.json"), diagnostics_json(traj)?)?;
    }
    if spec.plot {
        fs::create_dir_all(dir.join("plot"))?;
        emit(dir.join("plot").join("fronts.dat"), plot_fronts(traj))?;
        for (index, &t) in spec.times.iter().enumerate() {
            emit(
                dir.join("plot").join(format!("fields_{index}.dat")),
                plot_fields(traj, t, spec.window)?,
            )?;
        }
    }
    Ok(written)
}

fn fronts_tsv(traj: &Trajectory) -> String {
    let mut out = String::from("phasefront-fronts 1\n");
    out.push_str("id\tt0\tx0\tt1\tx1\tkind\tv_l\tw_l\tv_r\tw_r\n");
    for life in traj.front_segments() {
        let f = life.front;
        let x1 = f.position + f.speed * (life.death - life.birth);
        let (l, r) = (f.wave.left, f.wave.right);
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            f.id,
            life.birth,
            f.position,
            life.death,
            x1,
            f.wave.kind.label(),
            l.speed(),
            l.marker(),
            r.speed(),
            r.marker(),
        );
    }
    out
}

fn fields_csv(traj: &Trajectory, spec: &OutputSpec) -> Result<String> {
    let mut out = String::from("phasefront-fields 1\n");
    out.push_str("t,x,rho,v,w,f\n");
    let p = &traj.params;
    for &t in &spec.times {
        let profile = traj.profile_at(t)?;
        for (x, u) in field_rows(&profile, spec.window, p) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                t,
                x,
                u.rho(p),
                u.speed(),
                u.marker(),
                u.flux(p)
            );
        }
    }
    Ok(out)
}

/// One row per constant piece, keyed by its left edge, plus the two gate
/// trace rows at x = -0 and x = 0 whenever the window covers the gate.
fn field_rows(
    profile: &crate::wft::PiecewiseState,
    window: (f64, f64),
    params: &ModelParams,
) -> Vec<(f64, State)> {
    let _ = params;
    let mut rows: Vec<(f64, State)> = Vec::new();
    let gated = window.0 <= 0.0 && window.1 >= 0.0;
    if gated {
        if window.0 < 0.0 {
            rows.push((-0.0, profile.eval_left(0.0)));
        }
        rows.push((0.0, profile.eval(0.0)));
    }
    let xs = profile.breakpoints(window);
    for pair in xs.windows(2) {
        if gated && pair[0] == 0.0 {
            continue;
        }
        rows.push((pair[0], profile.eval(0.5 * (pair[0] + pair[1]))));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    format: &'static str,
    version: u32,
    params: &'a ModelParams,
    flux_bound: f64,
    regime: FluxRegime,
    level: u32,
    final_time: f64,
    events: usize,
    novel_events: usize,
    merged_events: usize,
    a_priori: AprioriConstants,
    /// Largest trace flux seen at the gate over the run, sampled between
    /// events; stays at most `flux_bound` up to rounding.
    gate_max_trace_flux: f64,
    stats: &'a [StatSample],
    records: &'a [InteractionRecord],
    rank_hugoniot: entropy::RhReport,
    ns_flux: entropy::NsFluxReport,
    dissipation: DissipationSummary,
}

/// Aggregates of the per-wave dissipation audit; the raw entries stay in
/// memory only.
#[derive(Serialize)]
struct DissipationSummary {
    k_count: usize,
    max_contact_abs: f64,
    max_silent_abs: f64,
    min_shock: Option<f64>,
    min_transition: Option<f64>,
    worst_rs_margin: Option<f64>,
    rs_integral_min: f64,
    rs_integral_floor: f64,
    rs_bound_slope: f64,
    ns_max_q_drop: Option<f64>,
    ns_min_compensated: Option<f64>,
}

fn diagnostics_json(traj: &Trajectory) -> Result<String> {
    let k_set = entropy::k_ladder(&traj.grid);
    let dissipation = entropy::dissipation(traj, &k_set);
    let ns_max_q_drop = dissipation
        .ns_entries
        .iter()
        .map(|e| e.q_drop)
        .reduce(f64::max);
    let ns_min_compensated = dissipation
        .ns_entries
        .iter()
        .map(|e| e.compensated)
        .reduce(f64::min);
    let doc = Diagnostics {
        format: "phasefront-diagnostics",
        version: 1,
        params: &traj.params,
        flux_bound: traj.grid.data.flux_bound,
        regime: traj.grid.data.regime,
        level: traj.grid.level,
        final_time: traj.final_time,
        events: traj.records.len(),
        novel_events: traj.novel_events,
        merged_events: traj.merged_events,
        a_priori: traj.a_priori_constants(),
        gate_max_trace_flux: gate_max_trace_flux(traj)?,
        stats: &traj.stats,
        records: &traj.records,
        rank_hugoniot: entropy::rh_check(traj),
        ns_flux: entropy::ns_flux_property(traj, &traj.grid.data),
        dissipation: DissipationSummary {
            k_count: dissipation.k_values.len(),
            max_contact_abs: dissipation.max_contact_abs,
            max_silent_abs: dissipation.max_silent_abs,
            min_shock: dissipation.min_shock,
            min_transition: dissipation.min_transition,
            worst_rs_margin: dissipation.worst_rs_margin,
            rs_integral_min: dissipation.rs_integral_min,
            rs_integral_floor: dissipation.rs_integral_floor,
            rs_bound_slope: dissipation.rs_bound_slope,
            ns_max_q_drop,
            ns_min_compensated,
        },
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| crate::Error::Scenario(format!("diagnostics serialisation: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Largest flux of either gate trace, sampled at the midpoint of every
/// positive-length inter-event interval.
fn gate_max_trace_flux(traj: &Trajectory) -> Result<f64> {
    let p = &traj.params;
    let mut worst: f64 = 0.0;
    for (i, epoch) in traj.epochs.iter().enumerate() {
        let end = traj
            .epochs
            .get(i + 1)
            .map_or(traj.final_time, |next| next.start);
        if end - epoch.start <= 0.0 {
            continue;
        }
        let (l, r) = traj.gate_traces(0.5 * (epoch.start + end))?;
        worst = worst.max(l.flux(p)).max(r.flux(p));
    }
    Ok(worst)
}

fn plot_fronts(traj: &Trajectory) -> String {
    let mut out = String::from("# phasefront-plot-fronts 1\n");
    out.push_str("# columns: x t, one blank-line separated segment per front\n");
    for life in traj.front_segments() {
        let f = life.front;
        let x1 = f.position + f.speed * (life.death - life.birth);
        let _ = writeln!(out, "{} {}", f.position, life.birth);
        let _ = writeln!(out, "{} {}", x1, life.death);
        out.push('\n');
    }
    out
}

fn plot_fields(traj: &Trajectory, t: f64, window: (f64, f64)) -> Result<String> {
    let mut out = String::from("# phasefront-plot-fields 1\n");
    let _ = writeln!(out, "# t = {t}");
    out.push_str("# columns: x rho v w f\n");
    let p = &traj.params;
    let profile = traj.profile_at(t)?;
    let xs = profile.breakpoints(window);
    for pair in xs.windows(2) {
        let u = profile.eval(0.5 * (pair[0] + pair[1]));
        for &x in pair {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                x,
                u.rho(p),
                u.speed(),
                u.marker(),
                u.flux(p)
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    fn out_dir(name: &str) -> PathBuf {
        std::env::temp_dir().join(format!("phasefront-{}-{name}", std::process::id()))
    }

    fn read(dir: &Path, file: &str) -> String {
        fs::read_to_string(dir.join(file)).unwrap()
    }

    #[test]
    fn constant_datum_writes_empty_fronts_and_constant_fields() {
        let sc = parse_scenario("").unwrap();
        let traj = sc.run().unwrap();
        let dir = out_dir("constant");
        write_all(&traj, &sc.output, &dir).unwrap();

        let fronts = read(&dir, "fronts.tsv");
        assert_eq!(fronts.lines().count(), 2, "{fronts}");
        assert!(fronts.starts_with("phasefront-fronts 1\n"));

        let fields = read(&dir, "fields.csv");
        let mut rows = fields.lines().skip(2);
        let reference = rows.next().unwrap().split_once(',').unwrap().1.to_owned();
        for row in rows {
            assert!(row.ends_with(reference.split_once(',').unwrap().1), "{row}");
        }

        let doc: serde_json::Value = serde_json::from_str(&read(&dir, "diagnostics.json")).unwrap();
        assert_eq!(doc["format"], "phasefront-diagnostics");
        assert_eq!(doc["events"].as_u64(), Some(0));
        assert_eq!(doc["gate_max_trace_flux"].as_f64(), Some(0.0));

        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn artifacts_are_byte_identical_across_reruns() {
        let text = "[datum]\nrandom = 8\n[run]\nlevel = 2\nseed = 5\nt_end = 2\n";
        let sc = parse_scenario(text).unwrap();
        let dirs = [out_dir("rerun-a"), out_dir("rerun-b")];
        for dir in &dirs {
            let traj = sc.run().unwrap();
            write_all(&traj, &sc.output, dir).unwrap();
        }
        for file in ["fronts.tsv", "fields.csv", "diagnostics.json", "plot/fronts.dat"] {
            assert_eq!(read(&dirs[0], file), read(&dirs[1], file), "{file} differs");
        }
        for dir in &dirs {
            fs::remove_dir_all(dir).ok();
        }
    }

    #[test]
    fn gate_rows_come_in_trace_pairs_and_respect_the_bound() {
        let text = "\
[constraint]
flux_bound = sqrt(3)/5
[datum]
piece = -8, 0, 1
piece = -5, 0, 6/5
piece = 0, vacuum
[run]
level = 3
t_end = 20
[output]
times = 7.3, 13.7
";
        let sc = parse_scenario(text).unwrap();
        let traj = sc.run().unwrap();
        let dir = out_dir("gate");
        write_all(&traj, &sc.output, &dir).unwrap();

        let fields = read(&dir, "fields.csv");
        let gate_rows: Vec<&str> = fields
            .lines()
            .skip(2)
            .filter(|row| {
                let x = row.split(',').nth(1).unwrap();
                x == "-0" || x == "0"
            })
            .collect();
        assert_eq!(gate_rows.len(), 4, "{fields}");
        for row in gate_rows {
            let f: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
            assert!(f <= sc.flux_bound + 1e-10, "{row}");
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn front_records_are_consistent_segments() {
        let text = "\
[constraint]
flux_bound = sqrt(3)/5
[datum]
piece = -8, 0, 1
piece = -5, 0, 6/5
piece = 0, vacuum
[run]
level = 3
t_end = 25
";
        let sc = parse_scenario(text).unwrap();
        let traj = sc.run().unwrap();
        let dir = out_dir("segments");
        write_all(&traj, &sc.output, &dir).unwrap();

        let fronts = read(&dir, "fronts.tsv");
        let mut seen = std::collections::HashSet::new();
        let mut rows = 0;
        for row in fronts.lines().skip(2) {
            rows += 1;
            let cols: Vec<&str> = row.split('\t').collect();
            let id: u64 = cols[0].parse().unwrap();
            assert!(seen.insert(id), "front {id} listed twice");
            let (t0, x0): (f64, f64) = (cols[1].parse().unwrap(), cols[2].parse().unwrap());
            let (t1, x1): (f64, f64) = (cols[3].parse().unwrap(), cols[4].parse().unwrap());
            assert!(t1 >= t0);
            let slope = if t1 > t0 { (x1 - x0) / (t1 - t0) } else { 0.0 };
            match cols[5] {
                "CD" => assert!(slope >= 0.0, "{row}"),
                "S" | "RS" => assert!(slope < 0.0 || t1 == t0, "{row}"),
                "NS" => assert!(slope == 0.0 && x0 == 0.0, "{row}"),
                "PT" => assert!(slope < traj.params.v_max + 1e-12, "{row}"),
                kind => panic!("unknown kind {kind}"),
            }
        }
        assert!(rows > 10, "only {rows} front rows");
        fs::remove_dir_all(&dir).ok();
    }
}
