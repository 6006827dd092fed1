//! Declarative run configuration, read from TOML.

use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use rankone::odometer::{OdometerSpec, Supernatural};
use rankone::presets::{self, Preset};
use rankone::rational::{parse_rational, to_fraction_string};
use rankone::tower::{CuttingSpacerSpec, Stage, DEFAULT_SIZE_LIMIT};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational, written as `"p/q"`, `"0.25"` or an integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ratio(pub BigRational);

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_fraction_string(&self.0))
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => parse_rational(&s)
                .map(Ratio)
                .ok_or_else(|| serde::de::Error::custom(format!("not a rational: {s:?}"))),
            Raw::Int(i) => Ok(Ratio(BigRational::from_integer(i.into()))),
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_fraction_string(&self.0))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    /// `chacon`, `example51`, `dyadic`, `k_adic`, `cyclic_embedding` or `afp`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Modulus for `k_adic` and `cyclic_embedding`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    /// `afp` uses `k_n = base^(n+1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<u64>,
    /// Spacer run for `cyclic_embedding`; defaults to true.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacers: Option<bool>,
    /// Finite table of spacer rows, one per stage.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<Vec<u64>>>,
    /// Spacer rows repeated forever.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periodic: Option<Vec<Vec<u64>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    /// Largest explicit set (index sets, words, level sets).
    #[serde(default = "default_size_limit")]
    pub size_limit: usize,
}

fn default_size_limit() -> usize {
    DEFAULT_SIZE_LIMIT
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            size_limit: DEFAULT_SIZE_LIMIT,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reading {
    #[default]
    OffClass,
    Literal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitStep {
    pub l: usize,
    pub eps: Ratio,
    pub candidates: Vec<u64>,
    #[serde(default)]
    pub start: usize,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    Heights {
        depth: usize,
    },
    Words {
        depth: usize,
    },
    IndexSet {
        m: usize,
        n: usize,
    },
    MassCheck {
        depth: usize,
    },
    DiscrepancyGrid {
        k: Vec<u64>,
        #[serde(default)]
        start: usize,
        depth: usize,
    },
    CyclicFactor {
        k: u64,
        eta: Ratio,
        #[serde(default)]
        start: usize,
        depth: usize,
    },
    TotalErgodicity {
        k_max: u64,
        eta: Ratio,
        #[serde(default)]
        start: usize,
        depth: usize,
    },
    Summability {
        k: u64,
        q: Vec<usize>,
        #[serde(default)]
        reading: Reading,
    },
    OdometerFactor {
        /// Defaults to the preset's target, e.g. `"2^inf"`.
        #[serde(skip_serializing_if = "Option::is_none")]
        target: Option<String>,
        /// Defaults to the prime-power ladder of the target.
        #[serde(skip_serializing_if = "Option::is_none")]
        probes: Option<Vec<u64>>,
        #[serde(default = "default_ladder_bound")]
        ladder_bound: u64,
        eta: Ratio,
        #[serde(default)]
        start: usize,
        depth: usize,
    },
    SymmetricFit {
        l: usize,
        m: usize,
        k: u64,
    },
    Isomorphism {
        #[serde(skip_serializing_if = "Option::is_none")]
        target: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        probes: Option<Vec<u64>>,
        #[serde(default = "default_ladder_bound")]
        ladder_bound: u64,
        eta: Ratio,
        #[serde(default)]
        start: usize,
        depth: usize,
        schedule: Vec<FitStep>,
    },
    SearchOdometer {
        l_max: usize,
        eps: Vec<Ratio>,
        k_budget: u64,
        eta: Ratio,
        #[serde(default)]
        start: usize,
        depth: usize,
    },
    ApproximatingMaps {
        k: u64,
        maps: usize,
        depth: usize,
        /// Constant threshold; the halving schedule when absent.
        #[serde(skip_serializing_if = "Option::is_none")]
        eta: Option<Ratio>,
        #[serde(default = "default_true")]
        mass_floor: bool,
    },
}

fn default_ladder_bound() -> u64 {
    64
}

fn default_true() -> bool {
    true
}

impl Analysis {
    pub fn kind(&self) -> &'static str {
        match self {
            Analysis::Heights { .. } => "heights",
            Analysis::Words { .. } => "words",
            Analysis::IndexSet { .. } => "index_set",
            Analysis::MassCheck { .. } => "mass_check",
            Analysis::DiscrepancyGrid { .. } => "discrepancy_grid",
            Analysis::CyclicFactor { .. } => "cyclic_factor",
            Analysis::TotalErgodicity { .. } => "total_ergodicity",
            Analysis::Summability { .. } => "summability",
            Analysis::OdometerFactor { .. } => "odometer_factor",
            Analysis::SymmetricFit { .. } => "symmetric_fit",
            Analysis::Isomorphism { .. } => "isomorphism",
            Analysis::SearchOdometer { .. } => "search_odometer",
            Analysis::ApproximatingMaps { .. } => "approximating_maps",
        }
    }

    /// Deepest stage the analysis touches.
    pub fn max_stage(&self) -> usize {
        match self {
            Analysis::Heights { depth }
            | Analysis::Words { depth }
            | Analysis::MassCheck { depth }
            | Analysis::DiscrepancyGrid { depth, .. }
            | Analysis::CyclicFactor { depth, .. }
            | Analysis::TotalErgodicity { depth, .. }
            | Analysis::OdometerFactor { depth, .. }
            | Analysis::SearchOdometer { depth, .. }
            | Analysis::ApproximatingMaps { depth, .. } => *depth,
            Analysis::IndexSet { n, .. } => *n,
            Analysis::Summability { q, reading, .. } => {
                q.last().copied().unwrap_or(0) + usize::from(*reading == Reading::Literal)
            }
            Analysis::SymmetricFit { m, .. } => *m,
            Analysis::Isomorphism { depth, schedule, .. } => {
                schedule.iter().map(|s| s.depth).fold(*depth, usize::max)
            }
        }
    }

    /// Replaces every depth field.
    pub fn override_depth(&mut self, d: usize) {
        match self {
            Analysis::Heights { depth }
            | Analysis::Words { depth }
            | Analysis::MassCheck { depth }
            | Analysis::DiscrepancyGrid { depth, .. }
            | Analysis::CyclicFactor { depth, .. }
            | Analysis::TotalErgodicity { depth, .. }
            | Analysis::OdometerFactor { depth, .. }
            | Analysis::SearchOdometer { depth, .. }
            | Analysis::ApproximatingMaps { depth, .. } => *depth = d,
            Analysis::Isomorphism { depth, schedule, .. } => {
                *depth = d;
                for step in schedule {
                    step.depth = d;
                }
            }
            Analysis::IndexSet { .. } | Analysis::Summability { .. } | Analysis::SymmetricFit { .. } => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec: SpecConfig,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub analysis: Vec<Analysis>,
}

/// A configuration problem, located by its field path.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| invalid("<config>", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn with_depth_override(mut self, depth: Option<usize>) -> Self {
        if let Some(d) = depth {
            for a in &mut self.analysis {
                a.override_depth(d);
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.spec.build()?;
        if self.limits.size_limit == 0 {
            return Err(invalid("limits.size_limit", "must be positive"));
        }
        for (i, a) in self.analysis.iter().enumerate() {
            validate_analysis(a).map_err(|(field, msg)| invalid(format!("analysis[{i}].{field}"), msg))?;
        }
        Ok(())
    }
}

fn check_modulus(field: &'static str, k: u64) -> Result<(), (String, String)> {
    if k < 2 {
        return Err((field.into(), format!("modulus must be at least 2, got {k}")));
    }
    Ok(())
}

fn check_positive(field: &'static str, q: &Ratio) -> Result<(), (String, String)> {
    if q.0 <= BigRational::zero() {
        return Err((field.into(), format!("must be positive, got {q}")));
    }
    Ok(())
}

fn check_target(target: &Option<String>) -> Result<(), (String, String)> {
    if let Some(t) = target {
        t.parse::<Supernatural>()
            .map_err(|e| ("target".to_string(), e.to_string()))?;
    }
    Ok(())
}

fn validate_analysis(a: &Analysis) -> Result<(), (String, String)> {
    match a {
        Analysis::Heights { .. } | Analysis::Words { .. } | Analysis::MassCheck { .. } => Ok(()),
        Analysis::IndexSet { m, n } => {
            if m > n {
                return Err(("m".into(), format!("m = {m} exceeds n = {n}")));
            }
            Ok(())
        }
        Analysis::DiscrepancyGrid { k, .. } => {
            if k.is_empty() {
                return Err(("k".into(), "needs at least one modulus".into()));
            }
            k.iter().try_for_each(|&k| check_modulus("k", k))
        }
        Analysis::CyclicFactor { k, eta, .. } => {
            check_modulus("k", *k)?;
            check_positive("eta", eta)
        }
        Analysis::TotalErgodicity { k_max, eta, .. } => {
            check_modulus("k_max", *k_max)?;
            check_positive("eta", eta)
        }
        Analysis::Summability { k, .. } => check_modulus("k", *k),
        Analysis::OdometerFactor { target, eta, .. } => {
            check_target(target)?;
            check_positive("eta", eta)
        }
        Analysis::SymmetricFit { l, m, k } => {
            if l > m {
                return Err(("l".into(), format!("l = {l} exceeds m = {m}")));
            }
            check_modulus("k", *k)
        }
        Analysis::Isomorphism {
            target,
            eta,
            schedule,
            ..
        } => {
            check_target(target)?;
            check_positive("eta", eta)?;
            if schedule.is_empty() {
                return Err(("schedule".into(), "needs at least one step".into()));
            }
            for (i, step) in schedule.iter().enumerate() {
                check_positive("eps", &step.eps).map_err(|(f, m)| (format!("schedule[{i}].{f}"), m))?;
                if step.candidates.is_empty() {
                    return Err((format!("schedule[{i}].candidates"), "needs at least one modulus".into()));
                }
            }
            Ok(())
        }
        Analysis::SearchOdometer {
            eps, k_budget, eta, ..
        } => {
            check_modulus("k_budget", *k_budget)?;
            check_positive("eta", eta)?;
            if eps.is_empty() {
                return Err(("eps".into(), "needs at least one threshold".into()));
            }
            eps.iter().try_for_each(|e| check_positive("eps", e))
        }
        Analysis::ApproximatingMaps { k, eta, .. } => {
            check_modulus("k", *k)?;
            match eta {
                Some(e) => check_positive("eta", e),
                None => Ok(()),
            }
        }
    }
}

fn rows_to_stages(path: &str, rows: &[Vec<u64>]) -> Result<Vec<Stage>, ConfigError> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| Stage::new(row).map_err(|e| invalid(format!("{path}[{i}]"), e.to_string())))
        .collect()
}

impl SpecConfig {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.to_string()),
            ..Self::default()
        }
    }

    /// Parses `name` or `name:param`, e.g. `afp:4` or `cyclic_embedding:6`.
    pub fn from_preset_arg(arg: &str) -> Result<Self, ConfigError> {
        let (name, param) = match arg.split_once(':') {
            Some((n, p)) => {
                let p: u64 = p
                    .parse()
                    .map_err(|_| invalid("preset", format!("bad parameter in {arg:?}")))?;
                (n, Some(p))
            }
            None => (arg, None),
        };
        let mut spec = Self::preset(name);
        match name {
            "afp" => spec.base = param,
            "k_adic" | "cyclic_embedding" => spec.k = param,
            _ if param.is_some() => return Err(invalid("preset", format!("{name} takes no parameter"))),
            _ => {}
        }
        spec.build()?;
        Ok(spec)
    }

    /// Builds the construction, as a preset when one is named.
    pub fn build(&self) -> Result<Built, ConfigError> {
        let sources = [self.preset.is_some(), self.stages.is_some(), self.periodic.is_some()];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(invalid("spec", "set exactly one of preset, stages, periodic"));
        }
        if let Some(rows) = &self.stages {
            return Ok(Built::Spec(Box::new(CuttingSpacerSpec::table(rows_to_stages("spec.stages", rows)?))));
        }
        if let Some(rows) = &self.periodic {
            let spec = CuttingSpacerSpec::periodic(rows_to_stages("spec.periodic", rows)?)
                .map_err(|e| invalid("spec.periodic", e.to_string()))?;
            return Ok(Built::Spec(Box::new(spec)));
        }
        let name = self.preset.as_deref().expect("one source is set");
        let require = |field: &'static str, v: Option<u64>| {
            v.ok_or_else(|| invalid(format!("spec.{field}"), format!("preset {name} needs {field}")))
        };
        let preset = match name {
            "afp" => {
                let base = require("base", self.base)?;
                let odometer =
                    OdometerSpec::powers(base).map_err(|e| invalid("spec.base", e.to_string()))?;
                presets::afp(&odometer).map_err(|e| invalid("spec.base", e.to_string()))?
            }
            "cyclic_embedding" | "k_adic" => {
                let k = require("k", self.k)?;
                let spacers = name == "cyclic_embedding" && self.spacers.unwrap_or(true);
                presets::cyclic_embedding(k, spacers).map_err(|e| invalid("spec.k", e.to_string()))?
            }
            other => presets::by_name(other).map_err(|e| invalid("spec.preset", e.to_string()))?,
        };
        Ok(Built::Preset(Box::new(preset)))
    }
}

/// A built construction.
#[derive(Debug, Clone)]
pub enum Built {
    Preset(Box<Preset>),
    Spec(Box<CuttingSpacerSpec>),
}

impl Built {
    pub fn spec(&self) -> &CuttingSpacerSpec {
        match self {
            Built::Preset(p) => &p.spec,
            Built::Spec(s) => s,
        }
    }

    pub fn preset(&self) -> Option<&Preset> {
        match self {
            Built::Preset(p) => Some(p),
            Built::Spec(_) => None,
        }
    }
}
