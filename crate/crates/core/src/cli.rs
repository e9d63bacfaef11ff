use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use sps_core::dsl;
use sps_core::encodings;
use sps_core::engine::{EngineConfig, HaltReason, Policy, RuleSelector, RunResult};
use sps_core::eval::eval_term;
use sps_core::program::{PolicyChoice, Program, StrategyMode};
use sps_core::term::{ops, Term};

#[derive(Parser, Debug)]
#[command(name = "sps", version, about = "Structured production system engine")]
pub struct Cli {
    /// TOML file with default flag values (section `[defaults]`).
    #[arg(long, global = true, env = "SPS_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a file, including its lowered strategies.
    Check { file: PathBuf },
    /// Run a file and print the final valuation and derivation.
    Run {
        file: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        /// Write one JSON trace record per line to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compile a formalism description into a DSL file.
    Compile {
        kind: Kind,
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Probability of a derivation under the derivation-probability layer.
    Prob {
        file: PathBuf,
        /// Comma-separated rule ids fired in this order; empty for the empty derivation.
        #[arg(long)]
        derivation_of: Option<String>,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(clap::Args, Debug)]
struct RunFlags {
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    policy: Option<PolicyArg>,
    #[arg(long)]
    strategy: Option<StrategyArg>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PolicyArg {
    First,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StrategyArg {
    Basic,
    Transformed,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "lower")]
enum Kind {
    Ts,
    Tm,
    Axioms,
    Ca,
    Pcfg,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    defaults: Defaults,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct Defaults {
    steps: Option<usize>,
    seed: Option<u64>,
    policy: Option<PolicyArg>,
    strategy: Option<StrategyArg>,
}

/// What went wrong, and which exit code it maps to.
pub enum Failure {
    Usage(String),
    Semantic(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Semantic(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Semantic(m) => m,
        }
    }
}

fn semantic(e: impl std::fmt::Display) -> Failure {
    Failure::Semantic(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Program, Failure> {
    let src = read(path)?;
    dsl::load(&src).map_err(|diags| {
        let mut msg = String::new();
        for d in diags {
            let _ = writeln!(msg, "{}:{d}", path.display());
        }
        Failure::Semantic(msg.trim_end().to_string())
    })
}

fn load_defaults(path: Option<&Path>) -> Result<Defaults, Failure> {
    let Some(path) = path else { return Ok(Defaults::default()) };
    let src = read(path)?;
    let cfg: ConfigFile =
        toml::from_str(&src).map_err(|e| Failure::Usage(format!("bad config {}: {e}", path.display())))?;
    Ok(cfg.defaults)
}

struct Resolved {
    steps: Option<usize>,
    seed: Option<u64>,
    policy: Option<PolicyChoice>,
    strategy: StrategyMode,
}

fn resolve(flags: &RunFlags, defaults: &Defaults, p: &Program) -> Resolved {
    let policy = flags.policy.or(defaults.policy).map(|x| match x {
        PolicyArg::First => PolicyChoice::First,
        PolicyArg::Random => PolicyChoice::Random,
    });
    let strategy = match flags.strategy.or(defaults.strategy) {
        Some(StrategyArg::Basic) => StrategyMode::Basic,
        Some(StrategyArg::Transformed) => StrategyMode::Transformed,
        None => p.settings.strategy.unwrap_or_default(),
    };
    Resolved { steps: flags.steps.or(defaults.steps), seed: flags.seed.or(defaults.seed), policy, strategy }
}

fn format_run(res: &RunResult) -> String {
    let mut out = String::new();
    for (k, v) in res.state.canonical() {
        let _ = writeln!(out, "{k} = {v}");
    }
    let ids: Vec<&str> = res.derivation.iter().map(|r| &**r).collect();
    let _ = writeln!(out, "derivation: {}", ids.join("; "));
    let _ = writeln!(out, "halt: {}", res.halt);
    out
}

/// `x` rounded to 12 significant digits, without trailing zeros.
pub fn format_probability(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (11 - x.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<String, Failure> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?;
            Ok(String::new())
        }
        None => Ok(text.to_string()),
    }
}

/// Runs a command; the text to print on success.
pub fn execute(cli: Cli) -> Result<String, Failure> {
    let defaults = load_defaults(cli.config.as_deref())?;
    match cli.command {
        Command::Check { file } => {
            let p = load(&file)?;
            p.build(StrategyMode::Basic).map_err(semantic)?;
            p.build(StrategyMode::Transformed).map_err(semantic)?;
            Ok(format!("{}: ok\n", file.display()))
        }
        Command::Run { file, run, trace } => {
            let p = load(&file)?;
            let r = resolve(&run, &defaults, &p);
            let sps = p.build(r.strategy).map_err(semantic)?;
            let res = sps.run(&p.engine_config(r.steps, r.seed, r.policy)).map_err(semantic)?;
            if let Some(path) = trace {
                let mut lines = String::new();
                for rec in &res.trace {
                    lines.push_str(&serde_json::to_string(rec).map_err(semantic)?);
                    lines.push('\n');
                }
                write_out(Some(&path), &lines)?;
            }
            Ok(format_run(&res))
        }
        Command::Compile { kind, input, output } => {
            let name = kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
            let p = encodings::compile(&name, &read(&input)?).map_err(semantic)?;
            write_out(output.as_deref(), &dsl::program_to_text(&p))
        }
        Command::Prob { file, derivation_of, run } => {
            let p = load(&file)?;
            if p.settings.probability.is_none() {
                return Err(Failure::Semantic(
                    "the derivation-probability layer is not active; set `probability = default` in config".into(),
                ));
            }
            let r = resolve(&run, &defaults, &p);
            let sps = p.build(r.strategy).map_err(semantic)?;
            let cfg = match &derivation_of {
                Some(ids) => {
                    let script: Vec<RuleSelector> =
                        ids.split(',').map(str::trim).filter(|x| !x.is_empty()).map(RuleSelector::rule).collect();
                    EngineConfig { max_steps: script.len(), policy: Policy::Script(script), events: p.events.clone() }
                }
                None => p.engine_config(r.steps, r.seed, r.policy),
            };
            let res = if cfg.max_steps == 0 {
                let w = sps.initial_state().map_err(semantic)?;
                RunResult { initial: w.clone(), state: w, derivation: vec![], halt: HaltReason::ScriptEnd, trace: vec![] }
            } else {
                sps.run(&cfg).map_err(semantic)?
            };
            if let Some(ids) = &derivation_of {
                let wanted = ids.split(',').map(str::trim).filter(|x| !x.is_empty()).count();
                if res.derivation.len() < wanted {
                    return Err(Failure::Semantic(format!(
                        "rule {} is not triggered after {} steps",
                        ids.split(',').nth(res.derivation.len()).unwrap_or("").trim(),
                        res.derivation.len()
                    )));
                }
            }
            let pr = eval_term(&Term::app(ops::PR, vec![Term::constant(ops::CD)]), &res.state, &sps.structure)
                .map_err(semantic)?;
            let pr = pr.as_real().ok_or_else(|| Failure::Semantic(format!("Pr(cd) is {pr}, not a number")))?;
            let ids: Vec<&str> = res.derivation.iter().map(|r| &**r).collect();
            Ok(format!("derivation: {}\nPr(cd) = {}\n", ids.join("; "), format_probability(pr)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::format_probability;

    #[test]
    fn probabilities_keep_twelve_significant_digits() {
        assert_eq!(format_probability(0.4 * 0.4 * 0.6), "0.096");
        assert_eq!(format_probability(1.0), "1");
        assert_eq!(format_probability(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_probability(0.0), "0");
        assert_eq!(format_probability(2.5e-7), "0.00000025");
    }
}
