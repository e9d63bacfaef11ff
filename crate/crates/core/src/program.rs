//! A complete SPS description: structure, rules, strategy declarations,
//! probabilities, initial state, events and run settings. This is what a
//! DSL file lowers to and what the formalism compilers produce.

use crate::engine::{EngineConfig, EngineError, Policy, Sps};
use crate::rules::Rule;
use crate::strategies::{lower, StrategyError, StrategySpec};
use crate::structure::Structure;
use crate::term::{ops, Assertion, Term};
use crate::uncertainty::{attach_derivation_probability, ProbabilityMode, UncertaintyError};

pub const DEFAULT_MAX_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    First,
    Random,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Settings {
    pub max_steps: Option<usize>,
    pub seed: Option<u64>,
    pub policy: Option<PolicyChoice>,
    /// Activates the derivation-probability layer.
    pub probability: Option<ProbabilityMode>,
    /// Mode used when the caller does not choose one.
    pub strategy: Option<StrategyMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StrategyMode {
    /// Rules as written; strategy declarations are ignored.
    #[default]
    Basic,
    /// Strategy declarations lowered to basic rules first.
    Transformed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub structure: Structure,
    pub rules: Vec<Rule>,
    pub strategy: StrategySpec,
    /// `Pr(subject) = value` annotations.
    pub probabilities: Vec<(Term, f64)>,
    pub init: Vec<Assertion>,
    pub events: Vec<Vec<Assertion>>,
    pub settings: Settings,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProgramError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
}

impl Program {
    pub fn new(structure: Structure) -> Program {
        Program {
            structure,
            rules: Vec::new(),
            strategy: StrategySpec::default(),
            probabilities: Vec::new(),
            init: Vec::new(),
            events: Vec::new(),
            settings: Settings::default(),
        }
    }

    fn initial_assertions(&self) -> Vec<Assertion> {
        let mut init = self.init.clone();
        for (subject, p) in &self.probabilities {
            init.push(Assertion::eq(Term::app(ops::PR, vec![subject.clone()]), Term::Real(*p)));
        }
        init
    }

    /// The runnable SPS.
    pub fn build(&self, mode: StrategyMode) -> Result<Sps, ProgramError> {
        let sps = Sps::with_parts(self.structure.clone(), self.rules.clone(), Vec::new(), self.initial_assertions())?;
        let sps = match mode {
            StrategyMode::Basic => sps,
            StrategyMode::Transformed => lower(&sps, &self.strategy)?,
        };
        Ok(match self.settings.probability {
            Some(m) => attach_derivation_probability(&sps, m)?,
            None => sps,
        })
    }

    /// Engine configuration from the settings, the events and any overrides.
    pub fn engine_config(&self, steps: Option<usize>, seed: Option<u64>, policy: Option<PolicyChoice>) -> EngineConfig {
        let policy = match policy.or(self.settings.policy).unwrap_or(PolicyChoice::First) {
            PolicyChoice::First => Policy::FirstMatch,
            PolicyChoice::Random => Policy::SeededRandom(seed.or(self.settings.seed).unwrap_or(0)),
        };
        EngineConfig {
            policy,
            max_steps: steps.or(self.settings.max_steps).unwrap_or(DEFAULT_MAX_STEPS),
            events: self.events.clone(),
        }
    }
}
