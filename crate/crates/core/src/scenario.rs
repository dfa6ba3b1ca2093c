//! Scenario files: a flat text description of one run.
//!
//! A scenario is UTF-8 text split into `[model]`, `[constraint]`,
//! `[datum]`, `[run]` and `[output]` sections holding `key = value` lines;
//! `#` starts a comment and blank lines are ignored. Every numeric value
//! is an expression built from decimal literals, `*`, `/`, unary minus,
//! parentheses and `sqrt(..)`, so irrational model constants can be stated
//! exactly instead of rounded: `flux_bound = sqrt(3)/5`.
//!
//! ```text
//! [model]                      # defaults shown
//! pressure = power 2           # or: log <v_ref> <rho_max>
//! v_max    = 3/5
//! w_minus  = 1
//! w_plus   = 6/5
//!
//! [constraint]
//! flux_bound = sqrt(3)/5       # default: the maximal flux (bound inactive)
//!
//! [datum]                      # default: vacuum everywhere
//! left  = vacuum               # state left of the first piece
//! piece = -8, 0, 1             # from x = -8 onward: v = 0, w = 1
//! piece = -5, 0, 6/5
//! piece = 0, vacuum            # the last piece extends to infinity
//! # or instead of pieces:  random = 12   (lattice states, seeded)
//!
//! [run]
//! level = 4                    # lattice refinement
//! t_end = 1
//! seed  = 0                    # only used by a random datum
//!
//! [output]
//! window = -10, 10             # spatial clip for files and distances
//! times  = 0, 1                # field sample times; default 0 and t_end
//! fronts = on                  # emission toggles, all on by default
//! fields = on
//! diagnostics = on
//! plot = on
//! ```
//!
//! Parsing reports syntax problems with their line number and semantic
//! problems with the offending field path. An absent key keeps its
//! default, so the empty file is a valid scenario.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraint::ConstraintData;
use crate::grid::Grid;
use crate::model::{ModelParams, PressureLaw, State};
use crate::wft::{self, PiecewiseState, RunLimits, Trajectory};
use crate::{Error, Result};

/// Highest accepted refinement level; the lattice grows like 2^level.
pub const MAX_LEVEL: u32 = 12;

/// A parsed and validated run description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: ModelParams,
    pub flux_bound: f64,
    pub level: u32,
    pub t_end: f64,
    /// Seed for a random datum; the command line may override it.
    pub seed: u64,
    pub datum: DatumSpec,
    pub output: OutputSpec,
}

/// Initial condition: either listed pieces or a seeded random profile.
#[derive(Debug, Clone)]
pub enum DatumSpec {
    /// `left` holds up to the first edge; each piece holds from its edge
    /// to the next one, the last one forever.
    Pieces {
        left: StateSpec,
        pieces: Vec<(f64, StateSpec)>,
    },
    /// The given number of jumps at uniform positions inside the output
    /// window, between uniform lattice states.
    Random(usize),
}

/// A state as written in a scenario, resolved against the model late so
/// that parsing does not depend on section order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    Vacuum,
    Coords { v: f64, w: f64 },
}

impl StateSpec {
    /// Accepts `vacuum` or a `v, w` expression pair.
    pub fn parse(value: &str) -> Result<Self> {
        if value.trim() == "vacuum" {
            return Ok(StateSpec::Vacuum);
        }
        let xs = parse_list(value)?;
        if xs.len() != 2 {
            return Err(Error::Scenario(format!(
                "expected `v, w` or `vacuum`, got `{value}`"
            )));
        }
        Ok(StateSpec::Coords { v: xs[0], w: xs[1] })
    }

    pub fn resolve(&self, params: &ModelParams) -> Result<State> {
        match *self {
            StateSpec::Vacuum => State::from_vw(params.v_max, params.w_floor(), params),
            StateSpec::Coords { v, w } => State::from_vw(v, w, params),
        }
    }
}

/// Where and what the run writes.
#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub window: (f64, f64),
    pub times: Vec<f64>,
    pub fronts: bool,
    pub fields: bool,
    pub diagnostics: bool,
    pub plot: bool,
}

impl Scenario {
    pub fn constraint(&self) -> Result<ConstraintData> {
        ConstraintData::new(self.flux_bound, &self.params)
    }

    pub fn grid_at(&self, level: u32) -> Result<Grid> {
        Grid::new(level, &self.params, self.constraint()?)
    }

    /// Initial profile on the given lattice: listed pieces are projected
    /// onto the lattice, a random datum is drawn on it directly.
    pub fn datum_on(&self, grid: &Grid) -> Result<PiecewiseState> {
        let p = &self.params;
        match &self.datum {
            DatumSpec::Pieces { left, pieces } => {
                let leftmost = left.resolve(p)?;
                let jumps = pieces
                    .iter()
                    .map(|(x, spec)| Ok((*x, spec.resolve(p)?)))
                    .collect::<Result<Vec<_>>>()?;
                let (leftmost, jumps) = grid.project_datum(leftmost, &jumps, p);
                PiecewiseState::new(leftmost, jumps)
            }
            DatumSpec::Random(count) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let (a, b) = self.output.window;
                let mut jumps = Vec::with_capacity(*count);
                for _ in 0..*count {
                    let x = a + rng.gen::<f64>() * (b - a);
                    let w = grid.markers[rng.gen_range(0..grid.markers.len())];
                    let v = if w < p.w_minus {
                        p.v_max
                    } else {
                        grid.speeds[rng.gen_range(0..grid.speeds.len())]
                    };
                    jumps.push((x, State::from_vw(v, w, p)?));
                }
                jumps.sort_by(|l, r| l.0.total_cmp(&r.0));
                let leftmost = State::from_vw(p.v_max, p.w_floor(), p)?;
                PiecewiseState::new(leftmost, jumps)
            }
        }
    }

    pub fn run_at(&self, level: u32) -> Result<Trajectory> {
        let grid = self.grid_at(level)?;
        let datum = self.datum_on(&grid)?;
        wft::run(&self.params, grid, &datum, self.t_end, RunLimits::default())
    }

    pub fn run(&self) -> Result<Trajectory> {
        self.run_at(self.level)
    }
}

/// Parses and validates a scenario; see the module header for the format.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut raw = RawScenario::default();
    let mut section = None;
    for (index, full_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = match full_line.find('#') {
            Some(at) => &full_line[..at],
            None => full_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| syntax(line_no, "unterminated section header"))?
                .trim();
            section = Some(match name {
                "model" | "constraint" | "datum" | "run" | "output" => name.to_owned(),
                _ => return Err(syntax(line_no, &format!("unknown section [{name}]"))),
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(syntax(line_no, "expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = section.as_deref() else {
            return Err(syntax(line_no, "key outside any [section]"));
        };
        raw.apply(section, key, value, line_no)?;
    }
    raw.finish()
}

/// Evaluates the scenario expression grammar: decimal literals combined
/// with `*`, `/`, unary minus, parentheses and `sqrt(..)`.
pub fn eval_expr(text: &str) -> Result<f64> {
    let tokens = tokenize(text)?;
    let mut cursor = Cursor { tokens: &tokens, at: 0 };
    let value = cursor.product()?;
    match cursor.peek() {
        None => Ok(value),
        Some(t) => Err(expr_err(&format!("unexpected `{t}`"))),
    }
}

fn syntax(line: usize, msg: &str) -> Error {
    Error::Scenario(format!("line {line}: {msg}"))
}

fn expr_err(msg: &str) -> Error {
    Error::Scenario(format!("bad expression: {msg}"))
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Sqrt,
    Open,
    Close,
    Star,
    Slash,
    Minus,
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Token::Num(x) => write!(f, "{x}"),
            Token::Sqrt => write!(f, "sqrt"),
            Token::Open => write!(f, "("),
            Token::Close => write!(f, ")"),
            Token::Star => write!(f, "*"),
            Token::Slash => write!(f, "/"),
            Token::Minus => write!(f, "-"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if let Some(t) = match c {
            '(' => Some(Token::Open),
            ')' => Some(Token::Close),
            '*' => Some(Token::Star),
            '/' => Some(Token::Slash),
            '-' => Some(Token::Minus),
            _ => None,
        } {
            out.push(t);
            i += 1;
            continue;
        }
        match c {
            ' ' | '\t' => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                let lit = &text[start..i];
                let x: f64 = lit
                    .parse()
                    .map_err(|_| expr_err(&format!("bad number `{lit}`")))?;
                out.push(Token::Num(x));
            }
            _ if text[i..].starts_with("sqrt") => {
                out.push(Token::Sqrt);
                i += 4;
            }
            _ => return Err(expr_err(&format!("unexpected character `{c}`"))),
        }
    }
    if out.is_empty() {
        return Err(expr_err("empty"));
    }
    Ok(out)
}

struct Cursor<'a> {
    tokens: &'a [Token],
    at: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at)
    }

    fn next(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.at);
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some(t) if *t == want => Ok(()),
            Some(t) => Err(expr_err(&format!("expected `{want}`, found `{t}`"))),
            None => Err(expr_err(&format!("expected `{want}` at the end"))),
        }
    }

    fn product(&mut self) -> Result<f64> {
        let mut value = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.at += 1;
                    value *= self.unary()?;
                }
                Some(Token::Slash) => {
                    self.at += 1;
                    let d = self.unary()?;
                    if d == 0.0 {
                        return Err(expr_err("division by zero"));
                    }
                    value /= d;
                }
                _ => return Ok(value),
            }
        }
    }

    fn unary(&mut self) -> Result<f64> {
        match self.next().cloned() {
            Some(Token::Minus) => Ok(-self.unary()?),
            Some(Token::Num(x)) => Ok(x),
            Some(Token::Sqrt) => {
                self.expect(Token::Open)?;
                let inner = self.product()?;
                self.expect(Token::Close)?;
                if inner < 0.0 {
                    return Err(expr_err("square root of a negative number"));
                }
                Ok(inner.sqrt())
            }
            Some(Token::Open) => {
                let inner = self.product()?;
                self.expect(Token::Close)?;
                Ok(inner)
            }
            Some(t) => Err(expr_err(&format!("unexpected `{t}`"))),
            None => Err(expr_err("ended early")),
        }
    }
}

/// Collected key values before cross-field validation.
struct RawScenario {
    pressure: PressureLaw,
    v_max: f64,
    w_minus: f64,
    w_plus: f64,
    flux_bound: Option<f64>,
    level: u32,
    t_end: f64,
    seed: u64,
    left: StateSpec,
    pieces: Vec<(f64, StateSpec)>,
    random: Option<usize>,
    window: (f64, f64),
    times: Option<Vec<f64>>,
    fronts: bool,
    fields: bool,
    diagnostics: bool,
    plot: bool,
}

impl Default for RawScenario {
    fn default() -> Self {
        RawScenario {
            pressure: PressureLaw::PowerLaw { gamma: 2.0 },
            v_max: 3.0 / 5.0,
            w_minus: 1.0,
            w_plus: 6.0 / 5.0,
            flux_bound: None,
            level: 4,
            t_end: 1.0,
            seed: 0,
            left: StateSpec::Vacuum,
            pieces: Vec::new(),
            random: None,
            window: (-10.0, 10.0),
            times: None,
            fronts: true,
            fields: true,
            diagnostics: true,
            plot: true,
        }
    }
}

impl RawScenario {
    fn apply(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<()> {
        let wrap = |e: Error| syntax(line, &format!("{key}: {e}"));
        match (section, key) {
            ("model", "pressure") => self.pressure = parse_pressure(value).map_err(wrap)?,
            ("model", "v_max") => self.v_max = eval_expr(value).map_err(wrap)?,
            ("model", "w_minus") => self.w_minus = eval_expr(value).map_err(wrap)?,
            ("model", "w_plus") => self.w_plus = eval_expr(value).map_err(wrap)?,
            ("constraint", "flux_bound") => {
                self.flux_bound = Some(eval_expr(value).map_err(wrap)?);
            }
            ("run", "level") => {
                self.level = value
                    .parse()
                    .map_err(|_| syntax(line, &format!("level: `{value}` is not an integer")))?;
            }
            ("run", "t_end") => self.t_end = eval_expr(value).map_err(wrap)?,
            ("run", "seed") => {
                self.seed = value
                    .parse()
                    .map_err(|_| syntax(line, &format!("seed: `{value}` is not an integer")))?;
            }
            ("datum", "left") => self.left = StateSpec::parse(value).map_err(wrap)?,
            ("datum", "piece") => {
                let (x, state) = value
                    .split_once(',')
                    .ok_or_else(|| syntax(line, "piece: expected `x, state`"))?;
                let x = eval_expr(x).map_err(wrap)?;
                let state = StateSpec::parse(state).map_err(wrap)?;
                self.pieces.push((x, state));
            }
            ("datum", "random") => {
                let n = value
                    .parse()
                    .map_err(|_| syntax(line, &format!("random: `{value}` is not a count")))?;
                self.random = Some(n);
            }
            ("output", "window") => {
                let xs = parse_list(value).map_err(wrap)?;
                if xs.len() != 2 {
                    return Err(syntax(line, "window: expected two values"));
                }
                self.window = (xs[0], xs[1]);
            }
            ("output", "times") => self.times = Some(parse_list(value).map_err(wrap)?),
            ("output", "fronts") => self.fronts = parse_toggle(value, line)?,
            ("output", "fields") => self.fields = parse_toggle(value, line)?,
            ("output", "diagnostics") => self.diagnostics = parse_toggle(value, line)?,
            ("output", "plot") => self.plot = parse_toggle(value, line)?,
            _ => return Err(syntax(line, &format!("unknown key `{key}` in [{section}]"))),
        }
        Ok(())
    }

    fn finish(self) -> Result<Scenario> {
        let path = |field: &str, e: Error| Error::Scenario(format!("{field}: {e}"));
        let params = ModelParams::new(self.v_max, self.w_minus, self.w_plus, self.pressure)
            .map_err(|e| path("model", e))?;
        let flux_bound = self.flux_bound.unwrap_or(params.flux_upper);
        ConstraintData::new(flux_bound, &params)
            .map_err(|e| path("constraint.flux_bound", e))?;

        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Scenario(format!(
                "run.t_end: must be a positive time, got {}",
                self.t_end
            )));
        }
        if self.level > MAX_LEVEL {
            return Err(Error::Scenario(format!(
                "run.level: {} exceeds the supported maximum {MAX_LEVEL}",
                self.level
            )));
        }
        if !(self.window.0.is_finite() && self.window.1.is_finite())
            || self.window.0 >= self.window.1
        {
            return Err(Error::Scenario(format!(
                "output.window: not an interval: {}, {}",
                self.window.0, self.window.1
            )));
        }

        let datum = match self.random {
            Some(_) if !self.pieces.is_empty() => {
                return Err(Error::Scenario(
                    "datum: listed pieces and `random` are mutually exclusive".into(),
                ));
            }
            Some(count) => DatumSpec::Random(count),
            None => {
                for pair in self.pieces.windows(2) {
                    if pair[0].0 >= pair[1].0 {
                        return Err(Error::Scenario(format!(
                            "datum.piece: edges must be strictly increasing, got {} then {}",
                            pair[0].0, pair[1].0
                        )));
                    }
                }
                for (index, (x, spec)) in self.pieces.iter().enumerate() {
                    if !x.is_finite() {
                        return Err(Error::Scenario(format!(
                            "datum.piece {}: edge is not finite",
                            index + 1
                        )));
                    }
                    spec.resolve(&params)
                        .map_err(|e| path(&format!("datum.piece {}", index + 1), e))?;
                }
                self.left.resolve(&params).map_err(|e| path("datum.left", e))?;
                DatumSpec::Pieces { left: self.left, pieces: self.pieces }
            }
        };

        let mut times = self.times.unwrap_or_else(|| vec![0.0, self.t_end]);
        times.sort_by(f64::total_cmp);
        times.dedup();
        for &t in &times {
            if !(t.is_finite() && (0.0..=self.t_end).contains(&t)) {
                return Err(Error::Scenario(format!(
                    "output.times: sample time {t} outside [0, {}]",
                    self.t_end
                )));
            }
        }

        Ok(Scenario {
            params,
            flux_bound,
            level: self.level,
            t_end: self.t_end,
            seed: self.seed,
            datum,
            output: OutputSpec {
                window: self.window,
                times,
                fronts: self.fronts,
                fields: self.fields,
                diagnostics: self.diagnostics,
                plot: self.plot,
            },
        })
    }
}

fn parse_pressure(value: &str) -> Result<PressureLaw> {
    let mut parts = value.split_whitespace();
    let law = parts.next().unwrap_or_default();
    let args: Vec<&str> = parts.collect();
    match (law, args.as_slice()) {
        ("power", [gamma]) => Ok(PressureLaw::PowerLaw { gamma: eval_expr(gamma)? }),
        ("log", [v_ref, rho_max]) => Ok(PressureLaw::Logarithmic {
            v_ref: eval_expr(v_ref)?,
            rho_max: eval_expr(rho_max)?,
        }),
        _ => Err(Error::Scenario(
            "expected `power <gamma>` or `log <v_ref> <rho_max>`".into(),
        )),
    }
}

fn parse_list(value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|part| eval_expr(part.trim())).collect()
}

fn parse_toggle(value: &str, line: usize) -> Result<bool> {
    match value {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(syntax(line, &format!("expected `on` or `off`, got `{value}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: &str = "\
# toll gate drainage
[model]
pressure = power 2
v_max    = 3/5
w_minus  = 1
w_plus   = 6/5

[constraint]
flux_bound = sqrt(3)/5

[datum]
left  = vacuum
piece = -8, 0, 1
piece = -5, 0, 6/5
piece = 0, vacuum

[run]
level = 6
t_end = 30

[output]
window = -10, 10
times  = 0, 10, 30
";

    #[test]
    fn empty_text_yields_the_documented_defaults() {
        let sc = parse_scenario("").unwrap();
        assert_eq!(sc.level, 4);
        assert_eq!(sc.t_end, 1.0);
        assert_eq!(sc.output.window, (-10.0, 10.0));
        assert_eq!(sc.output.times, vec![0.0, 1.0]);
        assert_eq!(sc.flux_bound, sc.params.flux_upper);
        assert_eq!(sc.params.v_max, 0.6);
        assert!(matches!(
            sc.datum,
            DatumSpec::Pieces { left: StateSpec::Vacuum, ref pieces } if pieces.is_empty()
        ));
        assert!(sc.output.fronts && sc.output.fields && sc.output.diagnostics && sc.output.plot);
    }

    #[test]
    fn golden_file_parses_to_exact_parameters() {
        let sc = parse_scenario(GOLDEN).unwrap();
        assert_eq!(sc.params.v_max, 0.6);
        assert_eq!(sc.params.w_minus, 1.0);
        assert_eq!(sc.params.w_plus, 1.2);
        assert_eq!(sc.params.pressure, PressureLaw::PowerLaw { gamma: 2.0 });
        assert_eq!(sc.flux_bound, 3.0f64.sqrt() / 5.0);
        assert_eq!(sc.level, 6);
        assert_eq!(sc.t_end, 30.0);
        let DatumSpec::Pieces { left, pieces } = &sc.datum else {
            panic!("expected listed pieces");
        };
        assert_eq!(*left, StateSpec::Vacuum);
        assert_eq!(pieces.len(), 3);
        assert_eq!(pieces[0], (-8.0, StateSpec::Coords { v: 0.0, w: 1.0 }));
        assert_eq!(pieces[1], (-5.0, StateSpec::Coords { v: 0.0, w: 1.2 }));
        assert_eq!(pieces[2], (0.0, StateSpec::Vacuum));
    }

    #[test]
    fn expressions_cover_roots_fractions_and_signs() {
        assert_eq!(eval_expr("sqrt(3)/5").unwrap(), 3.0f64.sqrt() / 5.0);
        assert_eq!(eval_expr("6/5").unwrap(), 1.2);
        assert_eq!(eval_expr("-8").unwrap(), -8.0);
        assert_eq!(eval_expr("2*sqrt(2*2)").unwrap(), 4.0);
        assert_eq!(eval_expr("-(3/2)/3").unwrap(), -0.5);
        assert_eq!(eval_expr("0.45").unwrap(), 0.45);
        for bad in ["", "sqrt(-1)", "1/0", "1+1", "sqrt 3", "(1", "nope", "1..2"] {
            assert!(eval_expr(bad).is_err(), "accepted `{bad}`");
        }
    }

    #[test]
    fn bound_above_the_maximal_flux_names_the_ceiling() {
        let err = parse_scenario("[constraint]\nflux_bound = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("constraint.flux_bound"), "{msg}");
        assert!(msg.contains("maximal flux"), "{msg}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        for (text, needle) in [
            ("[nowhere]\n", "line 1"),
            ("[model]\nzzz = 1\n", "line 2"),
            ("[model]\n\nv_max\n", "line 3"),
            ("v_max = 1\n", "line 1"),
            ("[model]\nv_max = 1+1\n", "line 2"),
            ("[output]\nfields = maybe\n", "line 2"),
        ] {
            let err = parse_scenario(text).unwrap_err().to_string();
            assert!(err.contains(needle), "`{text}` gave `{err}`");
        }
    }

    #[test]
    fn datum_validation_rejects_disorder_and_mixtures() {
        let err = parse_scenario("[datum]\npiece = 1, vacuum\npiece = 0, vacuum\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("strictly increasing"), "{err}");

        let err = parse_scenario("[datum]\npiece = 0, vacuum\nrandom = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("mutually exclusive"), "{err}");

        let err = parse_scenario("[datum]\npiece = 0, 2, 1\n").unwrap_err().to_string();
        assert!(err.contains("datum.piece 1"), "{err}");
    }

    #[test]
    fn random_data_are_reproducible_and_on_the_lattice() {
        let text = "[datum]\nrandom = 6\n[run]\nseed = 9\n";
        let sc = parse_scenario(text).unwrap();
        let grid = sc.grid_at(sc.level).unwrap();
        let first = sc.datum_on(&grid).unwrap();
        let second = sc.datum_on(&grid).unwrap();
        assert_eq!(first.jumps(), second.jumps());
        assert!(grid.contains(first.leftmost()));
        assert!(first.jumps().iter().all(|(_, u)| grid.contains(*u)));

        let mut other = sc.clone();
        other.seed = 10;
        let third = other.datum_on(&grid).unwrap();
        assert_ne!(first.jumps(), third.jumps());
    }

    #[test]
    fn scenarios_drive_whole_runs() {
        let sc = parse_scenario("").unwrap();
        let traj = sc.run().unwrap();
        assert_eq!(traj.final_time, 1.0);
        assert!(traj.epochs[0].fronts.is_empty());

        let sc = parse_scenario(GOLDEN).unwrap();
        let traj = sc.run_at(3).unwrap();
        assert!(traj.records.iter().any(|r| r.table_row.ends_with("_F^-")));
    }
}
