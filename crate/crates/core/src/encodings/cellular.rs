//! Binary cellular automata on a finite grid.
//!
//! Sites are individuals `x{c}` (one row) or `x{r}_{c}`; fluents
//! `N1 .. Nk` give each site's neighbors (including itself) and
//! `Update(v1, .., vk)` holds the local rule as a table. The update schema
//!
//! ```text
//! schema step: -> State(i) = Update(State(N1(i)), .., State(Nk(i))) where i: Site;
//! ```
//!
//! is grouped (`group sync = step;`) for synchronous mode, so the program
//! must be built with strategies lowered; its config says so. Asynchronous mode sweeps the
//! sites in order with a stamp per site and a global clock:
//!
//! ```text
//! schema upd: Stamp(i) = Clock -> (State(i), Stamp(i)) = (Update(..), Clock + 1) where i: Site;
//! rule tick: Stamp(last) = Clock + 1 -> Clock = Clock + 1;
//! ```

use serde::Deserialize;

use super::{invalid, from_toml, EncodingError};
use crate::program::{Program, StrategyMode};
use crate::rules::{GroundRule, SchemaRule, VarDecl};
use crate::state::{Key, WorldState};
use crate::strategies::GroupDecl;
use crate::structure::{Concept, Operator, Structure, REAL};
use crate::term::{ops, sym, Assertion, Term, Value};

pub const SITE: &str = "Site";
pub const SITE_X: &str = "SiteX";
pub const CELL_VALUE: &str = "CellValue";
pub const EDGE: &str = "edge";
pub const VALUES: [&str; 2] = ["v0", "v1"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Wrap,
    /// Sites past the edge read as the fixed value.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Sync,
    Async,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellularDesc {
    pub width: usize,
    #[serde(default = "one")]
    pub height: usize,
    /// Wolfram number of an elementary (one row, radius 1) rule.
    pub rule: Option<u8>,
    /// Outer-totalistic rule on the Moore neighborhood, e.g. `B3/S23`.
    pub life: Option<String>,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub fixed: u8,
    /// Rows of `0`/`1` characters; missing rows and cells are 0.
    #[serde(default)]
    pub initial: Vec<String>,
    #[serde(default)]
    pub mode: Mode,
    pub generations: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
enum LocalRule {
    Elementary(u8),
    Life { birth: Vec<usize>, survive: Vec<usize> },
}

impl LocalRule {
    /// (row, column) offsets; the site itself comes first for Moore.
    fn offsets(&self) -> Vec<(isize, isize)> {
        match self {
            LocalRule::Elementary(_) => vec![(0, -1), (0, 0), (0, 1)],
            LocalRule::Life { .. } => {
                let mut v = vec![(0, 0)];
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        if (dr, dc) != (0, 0) {
                            v.push((dr, dc));
                        }
                    }
                }
                v
            }
        }
    }

    fn apply(&self, nb: &[u8]) -> u8 {
        match self {
            LocalRule::Elementary(n) => {
                let idx = 4 * nb[0] + 2 * nb[1] + nb[2];
                (n >> idx) & 1
            }
            LocalRule::Life { birth, survive } => {
                let count = nb[1..].iter().filter(|&&x| x == 1).count();
                let set = if nb[0] == 1 { survive } else { birth };
                u8::from(set.contains(&count))
            }
        }
    }
}

fn parse_life(spec: &str) -> Option<(Vec<usize>, Vec<usize>)> {
    let (b, s) = spec.split_once('/')?;
    let digits = |x: &str| x.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect::<Option<Vec<_>>>();
    let birth = digits(b.strip_prefix('B')?)?;
    let survive = digits(s.strip_prefix('S')?)?;
    (birth.iter().chain(&survive).all(|&n| n <= 8)).then_some((birth, survive))
}

impl CellularDesc {
    pub fn from_toml(src: &str) -> Result<CellularDesc, EncodingError> {
        let d: CellularDesc = from_toml(src)?;
        d.validate()?;
        Ok(d)
    }

    fn local_rule(&self) -> Result<LocalRule, EncodingError> {
        match (&self.rule, &self.life) {
            (Some(n), None) => {
                if self.height != 1 {
                    return invalid("elementary rules need height = 1");
                }
                Ok(LocalRule::Elementary(*n))
            }
            (None, Some(l)) => {
                let (birth, survive) =
                    parse_life(l).ok_or_else(|| EncodingError::Invalid(format!("bad life rule `{l}`")))?;
                Ok(LocalRule::Life { birth, survive })
            }
            _ => invalid("give exactly one of `rule` and `life`"),
        }
    }

    pub fn validate(&self) -> Result<(), EncodingError> {
        self.local_rule()?;
        if self.width == 0 || self.height == 0 {
            return invalid("the grid is empty");
        }
        if self.fixed > 1 {
            return invalid("the fixed boundary value must be 0 or 1");
        }
        if self.initial.len() > self.height {
            return invalid("more initial rows than the grid height");
        }
        for row in &self.initial {
            if row.len() > self.width || !row.chars().all(|c| c == '0' || c == '1') {
                return invalid(format!("bad initial row `{row}`"));
            }
        }
        Ok(())
    }

    pub fn initial_grid(&self) -> Vec<u8> {
        let mut g = vec![0; self.width * self.height];
        for (r, row) in self.initial.iter().enumerate() {
            for (c, ch) in row.chars().enumerate() {
                g[r * self.width + c] = u8::from(ch == '1');
            }
        }
        g
    }

    pub fn site_name(&self, idx: usize) -> String {
        if self.height == 1 {
            format!("x{idx}")
        } else {
            format!("x{}_{}", idx / self.width, idx % self.width)
        }
    }

    /// Neighbor index, or `None` past a fixed boundary.
    fn neighbor(&self, idx: usize, (dr, dc): (isize, isize)) -> Option<usize> {
        let (h, w) = (self.height as isize, self.width as isize);
        let (r, c) = ((idx / self.width) as isize + dr, (idx % self.width) as isize + dc);
        match self.boundary {
            Boundary::Wrap => Some((r.rem_euclid(h) * w + c.rem_euclid(w)) as usize),
            Boundary::Fixed => ((0..h).contains(&r) && (0..w).contains(&c)).then(|| (r * w + c) as usize),
        }
    }

    /// Steps a run needs to cover all generations.
    pub fn steps(&self) -> usize {
        match self.mode {
            Mode::Sync => self.generations,
            Mode::Async => self.generations * (self.width * self.height + 1),
        }
    }
}

pub fn compile_cellular(d: &CellularDesc) -> Result<Program, EncodingError> {
    d.validate()?;
    let rule = d.local_rule()?;
    let offsets = rule.offsets();
    let n = d.width * d.height;
    let sites: Vec<String> = (0..n).map(|i| d.site_name(i)).collect();
    let site_refs: Vec<&str> = sites.iter().map(String::as_str).collect();
    let mut sites_x = site_refs.clone();
    sites_x.push(EDGE);

    let mut s = Structure::new();
    s.add_concept(Concept::finite(CELL_VALUE, &VALUES))?;
    s.add_concept(Concept::finite(SITE, &site_refs))?;
    s.add_concept(Concept::finite(SITE_X, &sites_x))?;
    s.add_operator(Operator::fluent("State", &[SITE_X], Some(CELL_VALUE)))?;
    let nb_names: Vec<String> = (1..=offsets.len()).map(|k| format!("N{k}")).collect();
    for nb in &nb_names {
        s.add_operator(Operator::fluent(nb, &[SITE], Some(SITE_X)))?;
    }
    s.add_operator(Operator::fluent("Update", &vec![CELL_VALUE; offsets.len()], Some(CELL_VALUE)))?;
    if d.mode == Mode::Async {
        s.add_operator(Operator::fluent("Stamp", &[SITE], Some(REAL)))?;
        s.add_operator(Operator::fluent("Clock", &[], Some(REAL)))?;
    }

    let mut p = Program::new(s);
    let i = || Term::var("i");
    let update = Term::app(
        "Update",
        nb_names.iter().map(|nb| Term::app("State", vec![Term::app(nb, vec![i()])])).collect(),
    );
    let state_i = Term::app("State", vec![i()]);
    let decls = vec![VarDecl::new("i", SITE)];
    match d.mode {
        Mode::Sync => {
            p.rules.push(SchemaRule::new("step", decls, vec![], Assertion::eq(state_i, update)).into());
            p.strategy.groups.push(GroupDecl { id: sym("sync"), members: vec![sym("step")] });
            p.settings.strategy = Some(StrategyMode::Transformed);
        }
        Mode::Async => {
            let clock = Term::constant("Clock");
            let next = Term::app(ops::ADD, vec![clock.clone(), Term::Real(1.0)]);
            let stamp = |t: Term| Term::app("Stamp", vec![t]);
            p.rules.push(
                SchemaRule::new(
                    "upd",
                    decls,
                    vec![Assertion::eq(stamp(i()), clock.clone())],
                    Assertion::eq(Term::Tuple(vec![state_i, stamp(i())]), Term::Tuple(vec![update, next.clone()])),
                )
                .into(),
            );
            p.rules.push(
                GroundRule::new(
                    "tick",
                    vec![Assertion::eq(stamp(Term::ind(&sites[n - 1])), next.clone())],
                    Assertion::eq(clock.clone(), next),
                )
                .into(),
            );
            p.init.push(Assertion::eq(clock, Term::Real(0.0)));
            for site in &sites {
                p.init.push(Assertion::eq(stamp(Term::ind(site)), Term::Real(0.0)));
            }
        }
    }

    let grid = d.initial_grid();
    let val = |b: u8| Term::ind(VALUES[b as usize]);
    for (idx, site) in sites.iter().enumerate() {
        p.init.push(Assertion::eq(Term::app("State", vec![Term::ind(site)]), val(grid[idx])));
        for (k, off) in offsets.iter().enumerate() {
            let target = d.neighbor(idx, *off).map_or(EDGE, |j| sites[j].as_str());
            p.init.push(Assertion::eq(Term::app(&nb_names[k], vec![Term::ind(site)]), Term::ind(target)));
        }
    }
    if d.boundary == Boundary::Fixed {
        p.init.push(Assertion::eq(Term::app("State", vec![Term::ind(EDGE)]), val(d.fixed)));
    }
    let k = offsets.len();
    for code in 0..1usize << k {
        let nb: Vec<u8> = (0..k).map(|b| (code >> (k - 1 - b) & 1) as u8).collect();
        p.init.push(Assertion::eq(
            Term::app("Update", nb.iter().map(|&b| val(b)).collect()),
            val(rule.apply(&nb)),
        ));
    }
    p.settings.max_steps = Some(d.steps());
    Ok(p)
}

/// Grid of a compiled automaton's world state, row-major.
pub fn read_grid(d: &CellularDesc, w: &WorldState) -> Vec<u8> {
    (0..d.width * d.height)
        .map(|idx| {
            let v = w.get(&Key::new(sym("State"), vec![Value::ind(&d.site_name(idx))]));
            u8::from(v == Value::ind(VALUES[1]))
        })
        .collect()
}

/// Direct simulation. Asynchronous mode updates sites in place, in
/// row-major order.
pub fn simulate(d: &CellularDesc) -> Vec<u8> {
    let rule = d.local_rule().expect("validated description");
    let offsets = rule.offsets();
    let mut g = d.initial_grid();
    let read = |g: &[u8], idx: usize| -> Vec<u8> {
        offsets.iter().map(|&o| d.neighbor(idx, o).map_or(d.fixed, |j| g[j])).collect()
    };
    for _ in 0..d.generations {
        match d.mode {
            Mode::Sync => {
                let prev = g.clone();
                for (idx, cell) in g.iter_mut().enumerate() {
                    *cell = rule.apply(&read(&prev, idx));
                }
            }
            Mode::Async => {
                for idx in 0..g.len() {
                    g[idx] = rule.apply(&read(&g, idx));
                }
            }
        }
    }
    g
}

/// Renders a grid as rows of `.` and `#`.
pub fn render(d: &CellularDesc, g: &[u8]) -> String {
    g.chunks(d.width)
        .map(|row| row.iter().map(|&b| if b == 1 { '#' } else { '.' }).collect::<String>())
        .collect::<Vec<_>>()
        .join("\n")
}
