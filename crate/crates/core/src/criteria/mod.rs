//! Finite-depth checkers for cyclic factors, odometer factors and odometer
//! isomorphism of rank-one constructions.
//!
//! The characterizations all have the shape "for every eta there is an N
//! such that every window past N is good". A finite scan can confirm the
//! window condition up to a depth, but it cannot refute it, so checkers
//! report [`Status::PassAtDepth`] or [`Status::UnknownAtDepth`] together with
//! the evidence that produced the verdict.

mod fit;

pub use fit::{symmetric_difference_fit, ResidueSelection, SymmetricDifferenceFit};

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::odometer::Supernatural;
use crate::rational::ratio;
use crate::tower::CuttingSpacerSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    PassAtDepth,
    /// Reserved for finite refutations; window evidence never produces it.
    FailWitness,
    UnknownAtDepth,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::PassAtDepth => "PASS_AT_DEPTH",
            Status::FailWitness => "FAIL_WITNESS",
            Status::UnknownAtDepth => "UNKNOWN_AT_DEPTH",
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::PassAtDepth
        } else {
            Status::UnknownAtDepth
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How far `I_{m,n}` is from a single residue class mod `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicDiscrepancy {
    pub m: usize,
    pub n: usize,
    pub k: u64,
    /// Most populated class; smallest on ties.
    pub best_j: u64,
    /// `|{i in I_{m,n} : [i]_k != best_j}| / |I_{m,n}|`.
    pub delta: BigRational,
}

pub fn cyclic_discrepancy(spec: &CuttingSpacerSpec, m: usize, n: usize, k: u64) -> Result<CyclicDiscrepancy> {
    let hist = spec.residue_histogram(m, n, k)?;
    Ok(discrepancy_of(&hist))
}

fn discrepancy_of(hist: &crate::tower::ResidueHistogram) -> CyclicDiscrepancy {
    let (best_j, best) = hist.argmax();
    CyclicDiscrepancy {
        m: hist.m(),
        n: hist.n(),
        k: hist.modulus(),
        best_j,
        delta: ratio(hist.total() - best, hist.total().clone()),
    }
}

/// Discrepancies of every window `from <= m <= n <= depth`; row `i` holds
/// `m = from + i` with `n` running from `m` to `depth`.
pub fn window_grid(
    spec: &CuttingSpacerSpec,
    k: u64,
    from: usize,
    depth: usize,
) -> Result<Vec<Vec<CyclicDiscrepancy>>> {
    if from > depth {
        return Err(Error::InvalidArgument(format!(
            "window start {from} is past depth {depth}"
        )));
    }
    (from..=depth)
        .map(|m| {
            Ok(spec
                .residue_histograms(m, depth, k)?
                .iter()
                .map(|h| discrepancy_of(h))
                .collect())
        })
        .collect()
}

/// The window scan behind one cyclic-factor check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowScan {
    pub k: u64,
    pub eta: BigRational,
    pub start: usize,
    pub depth: usize,
    pub passed: bool,
    /// The window with the largest discrepancy (first in scan order on ties).
    pub worst: CyclicDiscrepancy,
    /// For each candidate start `N'` in `start..=depth`, the largest
    /// discrepancy over windows `N' <= m <= n <= depth`.
    pub max_delta_by_start: Vec<(usize, BigRational)>,
    /// Smallest discrepancy over windows with `m < n`, if any.
    pub min_proper_delta: Option<BigRational>,
}

/// Evidence gathered for a requirement of the form "some `k` fits `B_l`
/// within `eps`".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FitRecord {
    pub l: usize,
    pub eps: BigRational,
    pub start: usize,
    pub depth: usize,
    /// First candidate whose fits stay below `eps` across `[start, depth]`.
    pub witness_k: Option<u64>,
    /// Fits of the witness for every `m`, or otherwise the worst fit of each
    /// candidate.
    pub fits: Vec<SymmetricDifferenceFit>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriterionVerdict {
    pub status: Status,
    pub depth: usize,
    /// Set when the pass is vacuous (nothing was actually probed).
    pub zero_evidence: bool,
    pub windows: Vec<WindowScan>,
    pub fits: Vec<FitRecord>,
    pub notes: Vec<String>,
}

impl CriterionVerdict {
    fn new(status: Status, depth: usize) -> Self {
        Self {
            status,
            depth,
            zero_evidence: false,
            windows: Vec::new(),
            fits: Vec::new(),
            notes: Vec::new(),
        }
    }
}

fn scan_windows(
    spec: &CuttingSpacerSpec,
    k: u64,
    eta: &BigRational,
    start: usize,
    depth: usize,
) -> Result<WindowScan> {
    let grid = window_grid(spec, k, start, depth)?;
    let mut worst: Option<&CyclicDiscrepancy> = None;
    let mut min_proper: Option<BigRational> = None;
    for d in grid.iter().flatten() {
        if worst.is_none_or(|w| d.delta > w.delta) {
            worst = Some(d);
        }
        if d.m < d.n && min_proper.as_ref().is_none_or(|q| &d.delta < q) {
            min_proper = Some(d.delta.clone());
        }
    }
    let worst = worst.expect("grid is nonempty").clone();
    let mut max_delta_by_start = Vec::with_capacity(grid.len());
    let mut running = BigRational::zero();
    for (i, row) in grid.iter().enumerate().rev() {
        if let Some(row_max) = row.iter().map(|d| &d.delta).max() {
            if row_max > &running {
                running = row_max.clone();
            }
        }
        max_delta_by_start.push((start + i, running.clone()));
    }
    max_delta_by_start.reverse();
    Ok(WindowScan {
        k,
        eta: eta.clone(),
        start,
        depth,
        passed: &worst.delta < eta,
        worst,
        max_delta_by_start,
        min_proper_delta: min_proper,
    })
}

/// Checks `delta(m, n, k) < eta` for every `start <= m <= n <= depth`.
pub fn check_cyclic_factor(
    spec: &CuttingSpacerSpec,
    k: u64,
    eta: &BigRational,
    start: usize,
    depth: usize,
) -> Result<CriterionVerdict> {
    let scan = scan_windows(spec, k, eta, start, depth)?;
    let mut verdict = CriterionVerdict::new(Status::from_pass(scan.passed), depth);
    verdict.windows.push(scan);
    Ok(verdict)
}

/// Runs [`check_cyclic_factor`] for every `2 <= k <= k_max`. Small
/// discrepancies are evidence of a cyclic factor; persistently large ones
/// are evidence of total ergodicity.
pub fn total_ergodicity_probe(
    spec: &CuttingSpacerSpec,
    k_max: u64,
    eta: &BigRational,
    start: usize,
    depth: usize,
) -> Result<Vec<(u64, CriterionVerdict)>> {
    if k_max < 2 {
        return Err(Error::InvalidModulus(k_max));
    }
    (2..=k_max)
        .map(|k| Ok((k, check_cyclic_factor(spec, k, eta, start, depth)?)))
        .collect()
}

/// Reading of the summability condition for cyclic factors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SummabilityReading {
    /// `|{i in I_{q_n, q_{n+1}} : [i]_k != 0}| / |I_{q_n, q_{n+1}}|`.
    #[default]
    OffClassFraction,
    /// `|{i in I_{q_n, q_n + 1} : [i]_k = 0}| / |I_{q_n, q_n}|`, taken as
    /// printed.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SummabilityProfile {
    pub k: u64,
    pub q_seq: Vec<usize>,
    pub reading: SummabilityReading,
    pub terms: Vec<BigRational>,
    /// Starts at 0; one more entry than `terms`.
    pub partial_sums: Vec<BigRational>,
}

pub fn summability_profile(
    spec: &CuttingSpacerSpec,
    k: u64,
    q_seq: &[usize],
    reading: SummabilityReading,
) -> Result<SummabilityProfile> {
    if q_seq.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("q sequence must be increasing".into()));
    }
    let mut terms = Vec::new();
    for w in q_seq.windows(2) {
        let term = match reading {
            SummabilityReading::OffClassFraction => {
                let h = spec.residue_histogram(w[0], w[1], k)?;
                ratio(h.total() - h.count(0), h.total().clone())
            }
            SummabilityReading::Literal => {
                let h = spec.residue_histogram(w[0], w[0] + 1, k)?;
                BigRational::from_integer(h.count(0).into())
            }
        };
        terms.push(term);
    }
    let mut partial_sums = vec![BigRational::zero()];
    for t in &terms {
        let next = partial_sums.last().unwrap() + t;
        partial_sums.push(next);
    }
    Ok(SummabilityProfile {
        k,
        q_seq: q_seq.to_vec(),
        reading,
        terms,
        partial_sums,
    })
}

fn check_membership(target: &Supernatural, probes: &[u64]) -> Result<()> {
    match probes.iter().find(|&&k| !target.divides(k)) {
        Some(&k) => Err(Error::ProbeNotInK(k)),
        None => Ok(()),
    }
}

/// Window check for every probe `k`, each of which must divide `target`.
pub fn check_odometer_factor(
    spec: &CuttingSpacerSpec,
    target: &Supernatural,
    probes: &[u64],
    eta: &BigRational,
    start: usize,
    depth: usize,
) -> Result<CriterionVerdict> {
    check_membership(target, probes)?;
    let mut verdict = CriterionVerdict::new(Status::PassAtDepth, depth);
    if probes.is_empty() {
        verdict.zero_evidence = true;
        verdict.notes.push("no probes supplied".into());
        return Ok(verdict);
    }
    for &k in probes {
        let scan = scan_windows(spec, k, eta, start, depth)?;
        if !scan.passed {
            verdict.status = Status::UnknownAtDepth;
        }
        verdict.windows.push(scan);
    }
    Ok(verdict)
}

/// One `(l, eps)` requirement of the isomorphism check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FitRequirement {
    pub l: usize,
    pub eps: BigRational,
    /// Tried in order; each must divide the target.
    pub candidates: Vec<u64>,
    pub start: usize,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsomorphismCheck {
    /// Moduli for the window condition.
    pub probes: Vec<u64>,
    pub eta: BigRational,
    pub start: usize,
    pub depth: usize,
    pub schedule: Vec<FitRequirement>,
}

/// Fits of `B_l` by residue classes mod `k` for every `m` in `from..=depth`,
/// stopping at the first fit that is not below `eps`.
fn fit_run(
    spec: &CuttingSpacerSpec,
    l: usize,
    k: u64,
    eps: &BigRational,
    from: usize,
    depth: usize,
) -> Result<(bool, Vec<SymmetricDifferenceFit>)> {
    let mut fits = Vec::new();
    for m in from.max(l)..=depth {
        let fit = symmetric_difference_fit(spec, l, m, k)?;
        let ok = &fit.eps_star < eps;
        fits.push(fit);
        if !ok {
            return Ok((false, fits));
        }
    }
    Ok((true, fits))
}

fn fit_requirement(spec: &CuttingSpacerSpec, req: &FitRequirement) -> Result<FitRecord> {
    let mut record = FitRecord {
        l: req.l,
        eps: req.eps.clone(),
        start: req.start,
        depth: req.depth,
        witness_k: None,
        fits: Vec::new(),
    };
    for &k in &req.candidates {
        let (ok, fits) = fit_run(spec, req.l, k, &req.eps, req.start, req.depth)?;
        if ok {
            record.witness_k = Some(k);
            record.fits = fits;
            return Ok(record);
        }
        record.fits.extend(fits.last().cloned());
    }
    Ok(record)
}

/// Window condition on the probes plus a fit requirement per `(l, eps)`.
pub fn check_isomorphic_to_odometer(
    spec: &CuttingSpacerSpec,
    target: &Supernatural,
    check: &IsomorphismCheck,
) -> Result<CriterionVerdict> {
    if check.schedule.is_empty() {
        return Err(Error::InvalidArgument("fit schedule is empty".into()));
    }
    for req in &check.schedule {
        check_membership(target, &req.candidates)?;
    }
    let mut verdict =
        check_odometer_factor(spec, target, &check.probes, &check.eta, check.start, check.depth)?;
    verdict.zero_evidence = false;
    verdict.notes.clear();
    if check.probes.is_empty() {
        verdict.notes.push("window condition not probed".into());
    }
    for req in &check.schedule {
        let record = fit_requirement(spec, req)?;
        if record.witness_k.is_none() {
            verdict.status = Status::UnknownAtDepth;
        }
        verdict.fits.push(record);
    }
    Ok(verdict)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdometerSearch {
    pub l_max: usize,
    pub eps_schedule: Vec<BigRational>,
    /// Largest modulus tried.
    pub k_budget: u64,
    pub eta: BigRational,
    pub start: usize,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub verdict: CriterionVerdict,
    /// `(l, eps, k)` for every requirement that found a modulus.
    pub found: Vec<(usize, BigRational, u64)>,
    /// Least common multiple of the found moduli, truncated at the depth.
    pub candidate: Option<Supernatural>,
}

/// For each `l <= l_max` and `eps` in the schedule, searches the least
/// `2 <= k <= k_budget` whose windows `start <= m <= n <= depth` stay below
/// `eta` and whose fits of `B_l` stay below `eps`.
pub fn search_some_odometer(spec: &CuttingSpacerSpec, search: &OdometerSearch) -> Result<SearchOutcome> {
    if search.k_budget < 2 || search.eps_schedule.is_empty() {
        return Err(Error::InvalidArgument(
            "search needs a modulus budget of at least 2 and a nonempty eps schedule".into(),
        ));
    }
    // window condition per k, shared by every (l, eps)
    let mut window_ok: Vec<Option<bool>> = vec![None; search.k_budget as usize + 1];
    let mut verdict = CriterionVerdict::new(Status::PassAtDepth, search.depth);
    let mut found = Vec::new();
    for l in 0..=search.l_max {
        for eps in &search.eps_schedule {
            let mut record = FitRecord {
                l,
                eps: eps.clone(),
                start: search.start,
                depth: search.depth,
                witness_k: None,
                fits: Vec::new(),
            };
            for k in 2..=search.k_budget {
                let slot = &mut window_ok[k as usize];
                if slot.is_none() {
                    let scan = scan_windows(spec, k, &search.eta, search.start, search.depth)?;
                    *slot = Some(scan.passed);
                    if scan.passed {
                        verdict.windows.push(scan);
                    }
                }
                if *slot != Some(true) {
                    continue;
                }
                let (ok, fits) = fit_run(spec, l, k, eps, search.start, search.depth)?;
                if ok {
                    record.witness_k = Some(k);
                    record.fits = fits;
                    break;
                }
            }
            match record.witness_k {
                Some(k) => {
                    if eps < &BigRational::one() && BigUint::from(k) < spec.height(l)? {
                        verdict
                            .notes
                            .push(format!("k = {k} for l = {l} is below h_{l}"));
                    }
                    found.push((l, eps.clone(), k));
                }
                None => verdict.status = Status::UnknownAtDepth,
            }
            verdict.fits.push(record);
        }
    }
    verdict.zero_evidence = search.l_max == 0 || search.eps_schedule.iter().all(|e| e >= &BigRational::one());
    let candidate = (verdict.status == Status::PassAtDepth).then(|| {
        let ks: Vec<u64> = found.iter().map(|&(_, _, k)| k).collect();
        Supernatural::lcm_truncated(&ks, search.depth)
    });
    Ok(SearchOutcome {
        verdict,
        found,
        candidate,
    })
}
