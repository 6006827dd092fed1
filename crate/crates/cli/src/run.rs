//! Executes the analyses of a [`RunConfig`].

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use rankone::criteria::{
    self, CriterionVerdict, CyclicDiscrepancy, FitRequirement, IsomorphismCheck, OdometerSearch,
    SearchOutcome, SummabilityProfile, SummabilityReading, SymmetricDifferenceFit,
};
use rankone::measure::{self, ApproximatingMap, ApproximationPlan, EtaSchedule, MassFloor};
use rankone::odometer::Supernatural;
use rankone::tower::MassReport;
use rankone::words::generate_word;
use rayon::prelude::*;

use crate::config::{Analysis, Built, ConfigError, Reading, RunConfig};

/// Result of one analysis.
#[derive(Clone, Debug)]
pub enum Outcome {
    Heights(Vec<BigUint>),
    Words(Vec<String>),
    IndexSet(Vec<BigUint>),
    Mass(MassReport),
    Grid(Vec<CyclicDiscrepancy>),
    Verdict(CriterionVerdict),
    Probe(Vec<(u64, CriterionVerdict)>),
    Summability(SummabilityProfile),
    Fit(SymmetricDifferenceFit),
    Search(SearchOutcome),
    Maps {
        maps: Vec<ApproximatingMap>,
        equivariance: Vec<BigRational>,
    },
}

#[derive(Clone, Debug)]
pub struct Record {
    pub index: usize,
    pub kind: &'static str,
    pub outcome: Result<Outcome, String>,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub config: RunConfig,
    pub records: Vec<Record>,
    /// Only rendered in the text summary.
    pub wall_time: Duration,
}

impl Report {
    pub fn any_errors(&self) -> bool {
        self.records.iter().any(|r| r.outcome.is_err())
    }
}

/// Runs every analysis, on `threads` worker threads when given. Records are
/// ordered by their position in the config whatever the scheduling.
pub fn run(config: &RunConfig, threads: Option<usize>) -> Result<Report, ConfigError> {
    config.validate()?;
    let built = config.spec.build()?;
    let started = Instant::now();
    let work = || -> Vec<Record> {
        config
            .analysis
            .par_iter()
            .enumerate()
            .map(|(index, a)| Record {
                index,
                kind: a.kind(),
                outcome: execute(&built, config.limits.size_limit, a).map_err(|e| e.to_string()),
            })
            .collect()
    };
    let records = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ConfigError {
                path: "--threads".into(),
                message: e.to_string(),
            })?
            .install(work),
        None => work(),
    };
    Ok(Report {
        config: config.clone(),
        records,
        wall_time: started.elapsed(),
    })
}

fn target_of(built: &Built, target: &Option<String>) -> rankone::Result<Supernatural> {
    match target {
        Some(t) => t.parse(),
        None => built
            .preset()
            .and_then(|p| p.target.clone())
            .ok_or_else(|| rankone::Error::InvalidArgument("no target given and the construction declares none".into())),
    }
}

fn probes_of(target: &Supernatural, probes: &Option<Vec<u64>>, ladder_bound: u64) -> Vec<u64> {
    probes.clone().unwrap_or_else(|| target.prime_power_ladder(ladder_bound))
}

fn execute(built: &Built, limit: usize, analysis: &Analysis) -> rankone::Result<Outcome> {
    if let Some(preset) = built.preset() {
        preset.verify(analysis.max_stage())?;
    }
    let spec = built.spec();
    Ok(match analysis {
        Analysis::Heights { depth } => {
            Outcome::Heights((0..=*depth).map(|n| spec.height(n)).collect::<rankone::Result<_>>()?)
        }
        Analysis::Words { depth } => Outcome::Words(
            (0..=*depth)
                .map(|n| generate_word(spec, n, limit).map(|w| w.to_string()))
                .collect::<rankone::Result<_>>()?,
        ),
        Analysis::IndexSet { m, n } => Outcome::IndexSet(spec.index_set(*m, *n, limit)?.indices),
        Analysis::MassCheck { depth } => Outcome::Mass(spec.mass_check(*depth)?),
        Analysis::DiscrepancyGrid { k, start, depth } => {
            let mut rows = Vec::new();
            for &k in k {
                rows.extend(criteria::window_grid(spec, k, *start, *depth)?.into_iter().flatten());
            }
            Outcome::Grid(rows)
        }
        Analysis::CyclicFactor { k, eta, start, depth } => {
            Outcome::Verdict(criteria::check_cyclic_factor(spec, *k, &eta.0, *start, *depth)?)
        }
        Analysis::TotalErgodicity { k_max, eta, start, depth } => {
            Outcome::Probe(criteria::total_ergodicity_probe(spec, *k_max, &eta.0, *start, *depth)?)
        }
        Analysis::Summability { k, q, reading } => {
            let reading = match reading {
                Reading::OffClass => SummabilityReading::OffClassFraction,
                Reading::Literal => SummabilityReading::Literal,
            };
            Outcome::Summability(criteria::summability_profile(spec, *k, q, reading)?)
        }
        Analysis::OdometerFactor {
            target,
            probes,
            ladder_bound,
            eta,
            start,
            depth,
        } => {
            let target = target_of(built, target)?;
            let probes = probes_of(&target, probes, *ladder_bound);
            Outcome::Verdict(criteria::check_odometer_factor(spec, &target, &probes, &eta.0, *start, *depth)?)
        }
        Analysis::SymmetricFit { l, m, k } => Outcome::Fit(criteria::symmetric_difference_fit(spec, *l, *m, *k)?),
        Analysis::Isomorphism {
            target,
            probes,
            ladder_bound,
            eta,
            start,
            depth,
            schedule,
        } => {
            let target = target_of(built, target)?;
            let check = IsomorphismCheck {
                probes: probes_of(&target, probes, *ladder_bound),
                eta: eta.0.clone(),
                start: *start,
                depth: *depth,
                schedule: schedule
                    .iter()
                    .map(|s| FitRequirement {
                        l: s.l,
                        eps: s.eps.0.clone(),
                        candidates: s.candidates.clone(),
                        start: s.start,
                        depth: s.depth,
                    })
                    .collect(),
            };
            Outcome::Verdict(criteria::check_isomorphic_to_odometer(spec, &target, &check)?)
        }
        Analysis::SearchOdometer {
            l_max,
            eps,
            k_budget,
            eta,
            start,
            depth,
        } => {
            let search = OdometerSearch {
                l_max: *l_max,
                eps_schedule: eps.iter().map(|e| e.0.clone()).collect(),
                k_budget: *k_budget,
                eta: eta.0.clone(),
                start: *start,
                depth: *depth,
            };
            Outcome::Search(criteria::search_some_odometer(spec, &search)?)
        }
        Analysis::ApproximatingMaps {
            k,
            maps,
            depth,
            eta,
            mass_floor,
        } => {
            let plan = ApproximationPlan {
                modulus: *k,
                maps: *maps,
                depth: *depth,
                eta: eta
                    .as_ref()
                    .map_or(EtaSchedule::Halving, |e| EtaSchedule::Constant(e.0.clone())),
                mass_floor: if *mass_floor {
                    MassFloor::Halving
                } else {
                    MassFloor::Disabled
                },
            };
            let maps = measure::build_approximating_maps(spec, &plan)?;
            let equivariance = maps
                .iter()
                .map(|m| measure::equivariance_defect(m, limit))
                .collect::<rankone::Result<_>>()?;
            Outcome::Maps { maps, equivariance }
        }
    })
}
