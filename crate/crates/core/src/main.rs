//! Command line driver: whole scenario runs with their output artifacts,
//! single Riemann problems at the terminal, and lattice refinement sweeps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phasefront::grid::Grid;
use phasefront::model::{ModelParams, PressureLaw, State};
use phasefront::riemann::{self, WaveFan};
use phasefront::scenario::{self, Scenario, StateSpec};
use phasefront::wft::{l1_distance, Trajectory};
use phasefront::{constraint::ConstraintData, output, Error, Result};

/// Wave-front tracking for two-phase traffic flow through a flux-limited
/// gate at x = 0.
#[derive(Parser)]
#[command(version, about, max_term_width = 80)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its output artifacts.
    #[command(after_help = RUN_ARTIFACTS)]
    Run(RunArgs),
    /// Solve a single Riemann problem and print the wave fan.
    Riemann(RiemannArgs),
    /// Run one scenario across several lattice levels and compare.
    Converge(ConvergeArgs),
}

const RUN_ARTIFACTS: &str = "\
Artifacts (per the scenario's [output] toggles):
  fronts.tsv        one row per front segment: id, birth and death in
                    time and space, wave kind, flanking states
  fields.csv        profile samples t, x, rho, v, w, f at the requested
                    times; the gate appears as a trace pair x = -0, 0
  diagnostics.json  parameters, regime, event and front counts, the
                    functional history, every interaction record, and
                    the conservation / dissipation audits
  plot/             gnuplot-ready front segments and field staircases";

#[derive(Args)]
struct RunArgs {
    /// Scenario file.
    scenario: PathBuf,
    /// Output directory [default: the scenario path with extension
    /// `out`, or $PHASEFRONT_OUT when set].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the scenario's random seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct RiemannArgs {
    /// Left state `v, w` (or `vacuum`).
    #[arg(long, value_name = "STATE")]
    left: String,
    /// Right state `v, w` (or `vacuum`).
    #[arg(long, value_name = "STATE")]
    right: String,
    /// Flux bound at x = 0; omit to solve unconstrained.
    #[arg(long = "F", value_name = "EXPR")]
    flux_bound: Option<String>,
    /// Lattice level for the discretised solver; omit for the exact one.
    #[arg(long, value_name = "LEVEL")]
    n: Option<u32>,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Scenario file; its own level is ignored in favour of --n.
    scenario: PathBuf,
    /// Comma separated lattice levels, e.g. `3,4,5,6`.
    #[arg(long, value_name = "LEVELS", value_delimiter = ',', required = true)]
    n: Vec<u32>,
    /// Overrides the scenario's random seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Riemann(args) => cmd_riemann(args),
        Command::Converge(args) => cmd_converge(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let mut scenario = scenario::parse_scenario(&text)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario, args.seed)?;
    let dir = args
        .out
        .or_else(|| std::env::var_os("PHASEFRONT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| args.scenario.with_extension("out"));
    let trajectory = scenario.run()?;
    print_summary(&scenario, &trajectory);
    for file in output::write_all(&trajectory, &scenario.output, &dir)? {
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn print_summary(scenario: &Scenario, trajectory: &Trajectory) {
    println!(
        "level {} | F = {} ({:?}) | t in [0, {}]",
        trajectory.grid.level,
        scenario.flux_bound,
        trajectory.grid.data.regime,
        trajectory.final_time,
    );
    let fronts = trajectory.epochs.last().map_or(0, |e| e.fronts.len());
    println!(
        "{} events ({} novel, {} merged) | {} fronts at the end",
        trajectory.records.len(),
        trajectory.novel_events,
        trajectory.merged_events,
        fronts,
    );
    if let (Some(first), Some(last)) = (trajectory.stats.first(), trajectory.stats.last()) {
        println!(
            "functional {:.6} -> {:.6}",
            first.temple.total, last.temple.total
        );
    }
}

/// Default model of the `riemann` command; scenario files spell out their
/// own.
fn default_params() -> Result<ModelParams> {
    ModelParams::new(0.6, 1.0, 1.2, PressureLaw::PowerLaw { gamma: 2.0 })
}

fn cmd_riemann(args: RiemannArgs) -> Result<()> {
    let params = default_params()?;
    let flux_bound = match &args.flux_bound {
        Some(expr) => Some(scenario::eval_expr(expr)?),
        None => None,
    };
    let mut u_l = StateSpec::parse(&args.left)?.resolve(&params)?;
    let mut u_r = StateSpec::parse(&args.right)?.resolve(&params)?;

    let fan = match args.n {
        None => match flux_bound {
            None => riemann::solve(u_l, u_r, &params)?,
            Some(f) => {
                let data = ConstraintData::new(f, &params)?;
                riemann::solve_constrained(u_l, u_r, &data, &params)?
            }
        },
        Some(level) => {
            if level > scenario::MAX_LEVEL {
                return Err(Error::InvalidParams(format!(
                    "level {level} exceeds the supported maximum {}",
                    scenario::MAX_LEVEL
                )));
            }
            let data = ConstraintData::new(flux_bound.unwrap_or(params.flux_upper), &params)?;
            let grid = Grid::new(level, &params, data)?;
            for u in [&mut u_l, &mut u_r] {
                let projected = grid.project_state(*u, &params);
                if projected != *u {
                    println!(
                        "note: {} moved onto the level-{level} lattice as {}",
                        describe(*u, &params),
                        describe(projected, &params)
                    );
                    *u = projected;
                }
            }
            match flux_bound {
                None => riemann::solve_grid(u_l, u_r, &grid, &params)?,
                Some(_) => riemann::solve_grid_constrained(u_l, u_r, &grid, &params)?,
            }
        }
    };
    print_fan(&fan, u_l, &params);
    Ok(())
}

fn describe(u: State, params: &ModelParams) -> String {
    if u.is_vacuum(params) {
        return "vacuum".into();
    }
    format!(
        "v = {:.6}, w = {:.6}, rho = {:.6}, f = {:.6}",
        u.speed(),
        u.marker(),
        u.rho(params),
        u.flux(params)
    )
}

fn print_fan(fan: &WaveFan, u_l: State, params: &ModelParams) {
    println!("  left   {}", describe(u_l, params));
    if fan.waves.is_empty() {
        println!("  no waves");
        return;
    }
    for wave in &fan.waves {
        let label = wave.kind.label();
        if wave.is_spread() && wave.lo < wave.hi {
            println!("  {:<4}   speed {:.6} .. {:.6}", label, wave.lo, wave.hi);
        } else {
            println!("  {:<4}   speed {:.6}", label, wave.speed());
        }
        println!("         {}", describe(wave.right, params));
    }
    if fan.non_classical_index().is_some() {
        println!("  flux bound active at x = 0");
    }
}

fn cmd_converge(args: ConvergeArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario, args.seed)?;
    let mut levels = args.n;
    levels.sort_unstable();
    levels.dedup();
    for &level in &levels {
        if level > scenario::MAX_LEVEL {
            return Err(Error::InvalidParams(format!(
                "level {level} exceeds the supported maximum {}",
                scenario::MAX_LEVEL
            )));
        }
    }

    let mut runs: Vec<(u32, Result<Trajectory>)> = Vec::with_capacity(levels.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = levels
            .iter()
            .map(|&level| {
                let scenario = &scenario;
                (level, scope.spawn(move || scenario.run_at(level)))
            })
            .collect();
        for (level, handle) in handles {
            let outcome = handle.join().expect("refinement worker panicked");
            runs.push((level, outcome));
        }
    });

    println!("level    events    fronts            T(0)          T(end)    TV v+w (end)");
    let mut profiles = Vec::new();
    for (level, outcome) in runs {
        let trajectory = outcome?;
        let variation = trajectory.profile_at(trajectory.final_time)?.variation(&scenario.params);
        let fronts = trajectory.epochs.last().map_or(0, |e| e.fronts.len());
        println!(
            "{:>5} {:>9} {:>9} {:>15.8} {:>15.8} {:>15.8}",
            level,
            trajectory.records.len(),
            fronts,
            trajectory.stats.first().map_or(0.0, |s| s.temple.total),
            trajectory.stats.last().map_or(0.0, |s| s.temple.total),
            variation.v + variation.w,
        );
        profiles.push((level, trajectory.profile_at(trajectory.final_time)?));
    }

    if profiles.len() < 2 {
        return Ok(());
    }
    let window = scenario.output.window;
    println!(
        "L1 distance in (v, w) at t = {} over [{}, {}]:",
        scenario.t_end, window.0, window.1
    );
    let mut previous: Option<f64> = None;
    for pair in profiles.windows(2) {
        let distance = l1_distance(&pair[0].1, &pair[1].1, window, |a, b| {
            (a.speed() - b.speed()).abs() + (a.marker() - b.marker()).abs()
        });
        match previous {
            Some(before) if before > 1e-12 => println!(
                "  n {} -> {}: {:.8}   ratio {:.3}",
                pair[0].0,
                pair[1].0,
                distance,
                distance / before
            ),
            _ => println!("  n {} -> {}: {:.8}", pair[0].0, pair[1].0, distance),
        }
        previous = Some(distance);
    }
    Ok(())
}
