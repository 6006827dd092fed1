//! Rank-one towers built from cutting and spacer parameters.
//!
//! A construction is a sequence of stages. Stage `n` cuts the height-`h_n`
//! tower into `r_n` columns and stacks them with `s_{n,i}` spacer levels
//! above column `i`, so `h_{n+1} = r_n h_n + sum_i s_{n,i}` and `h_0 = 1`.
//!
//! Everything here is exact: heights are [`BigUint`], ratios are
//! [`BigRational`]. Heights and histograms are memoized per construction in
//! append-only caches that tolerate concurrent readers.

mod histogram;

pub use histogram::{ResidueHistogram, MAX_DENSE_MODULUS};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{size_limit, Error, Result};
use crate::odometer::KSequence;
use crate::rational::ratio;

/// Default bound on the number of explicitly materialized indices or symbols.
pub const DEFAULT_SIZE_LIMIT: usize = 1_000_000;

/// Histograms with a modulus at most this large are memoized.
const CACHED_MODULUS_LIMIT: u64 = 4096;

/// Cutting and spacer parameters of a single stage.
///
/// Spacer runs are stored sparsely: only nonzero `s_{n,i}` are kept, keyed by
/// the 1-based column index `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    cuts: u64,
    spacers: BTreeMap<u64, BigUint>,
}

impl Stage {
    /// Builds a stage from a dense list `(s_1, ..., s_r)`.
    pub fn new(spacers: &[u64]) -> Result<Self> {
        Self::sparse(
            spacers.len() as u64,
            spacers
                .iter()
                .enumerate()
                .map(|(i, &s)| (i as u64 + 1, BigUint::from(s))),
        )
    }

    /// Builds a stage with `cuts` columns and the given `(column, count)` runs.
    /// Columns not mentioned carry no spacers.
    pub fn sparse(cuts: u64, runs: impl IntoIterator<Item = (u64, BigUint)>) -> Result<Self> {
        if cuts < 2 {
            return Err(Error::InvalidArgument(format!(
                "cutting parameter must be at least 2, got {cuts}"
            )));
        }
        let mut spacers = BTreeMap::new();
        for (column, count) in runs {
            if column == 0 || column > cuts {
                return Err(Error::InvalidArgument(format!(
                    "spacer column {column} outside 1..={cuts}"
                )));
            }
            if !count.is_zero() {
                *spacers.entry(column).or_insert_with(BigUint::zero) += count;
            }
        }
        Ok(Self { cuts, spacers })
    }

    /// The cutting parameter `r_n`.
    pub fn cuts(&self) -> u64 {
        self.cuts
    }

    /// `s_{n,i}` for `1 <= i <= r_n`.
    pub fn spacer(&self, column: u64) -> BigUint {
        self.spacers.get(&column).cloned().unwrap_or_default()
    }

    /// Nonzero spacer runs in column order.
    pub fn spacer_runs(&self) -> impl Iterator<Item = (u64, &BigUint)> {
        self.spacers.iter().map(|(&c, s)| (c, s))
    }

    pub fn spacer_total(&self) -> BigUint {
        self.spacers.values().sum()
    }

    pub fn has_spacers(&self) -> bool {
        !self.spacers.is_empty()
    }
}

/// Closed-form parameter rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormulaRule {
    /// `r_n = 4` with a single run of `2^{n+1}` spacers after the second
    /// column: `v_{n+1} = v_n v_n 1^{2^{n+1}} v_n v_n`.
    CentralDyadicGap,
    /// `r_n = k_n - 1`, no spacers except a trailing run of `h_n`, so that
    /// `v_{n+1} = v_n^{k_n - 1} 1^{h_n}` and `h_{n+1} = k_n h_n`.
    TrailingTowerRun(KSequence),
}

/// Where the stage parameters come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParameterSource {
    /// A finite table; querying past its end is an error.
    Table(Vec<Stage>),
    /// A nonempty list of stages repeated forever.
    Periodic(Vec<Stage>),
    Formula(FormulaRule),
}

type OffsetCache = HashMap<(usize, u64), Arc<Vec<(u64, u64)>>>;

#[derive(Default)]
struct Caches {
    heights: RwLock<Vec<BigUint>>,
    offsets: RwLock<OffsetCache>,
    histograms: RwLock<HashMap<(usize, usize, u64), Arc<ResidueHistogram>>>,
}

/// A rank-one construction together with its memoization caches.
pub struct CuttingSpacerSpec {
    source: ParameterSource,
    caches: Caches,
}

impl fmt::Debug for CuttingSpacerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CuttingSpacerSpec")
            .field("source", &self.source)
            .finish_non_exhaustive()
    }
}

impl Clone for CuttingSpacerSpec {
    fn clone(&self) -> Self {
        Self::new(self.source.clone()).expect("source was validated")
    }
}

impl CuttingSpacerSpec {
    pub fn new(source: ParameterSource) -> Result<Self> {
        match &source {
            ParameterSource::Periodic(stages) if stages.is_empty() => {
                return Err(Error::InvalidArgument(
                    "periodic rule needs at least one stage".into(),
                ))
            }
            _ => {}
        }
        let caches = Caches::default();
        caches.heights.write().unwrap().push(BigUint::one());
        Ok(Self { source, caches })
    }

    pub fn table(stages: Vec<Stage>) -> Self {
        Self::new(ParameterSource::Table(stages)).expect("tables are always valid")
    }

    pub fn periodic(stages: Vec<Stage>) -> Result<Self> {
        Self::new(ParameterSource::Periodic(stages))
    }

    pub fn formula(rule: FormulaRule) -> Self {
        Self::new(ParameterSource::Formula(rule)).expect("formulas are always valid")
    }

    pub fn source(&self) -> &ParameterSource {
        &self.source
    }

    /// Number of queryable stages, or `None` when unbounded.
    pub fn max_stage(&self) -> Option<usize> {
        match &self.source {
            ParameterSource::Table(stages) => Some(stages.len()),
            _ => None,
        }
    }

    /// Parameters `(r_n, s_n)` of stage `n`.
    pub fn stage(&self, n: usize) -> Result<Stage> {
        match &self.source {
            ParameterSource::Table(stages) => stages.get(n).cloned().ok_or(Error::StageOutOfRange {
                stage: n,
                available: stages.len(),
            }),
            ParameterSource::Periodic(stages) => Ok(stages[n % stages.len()].clone()),
            ParameterSource::Formula(FormulaRule::CentralDyadicGap) => {
                Stage::sparse(4, [(2, BigUint::one() << (n + 1))])
            }
            ParameterSource::Formula(FormulaRule::TrailingTowerRun(seq)) => {
                let k = seq.term(n)?;
                let cuts = (&k - 1u32).to_u64().filter(|&r| r >= 2).ok_or_else(|| {
                    Error::InvalidStage {
                        stage: n,
                        reason: format!("k_{n} = {k} gives an unusable cutting parameter"),
                    }
                })?;
                Stage::sparse(cuts, [(cuts, self.height(n)?)])
            }
        }
    }

    /// `r_n`.
    pub fn cuts(&self, n: usize) -> Result<u64> {
        self.stage(n).map(|s| s.cuts())
    }

    /// `h_n`, memoized.
    pub fn height(&self, n: usize) -> Result<BigUint> {
        loop {
            let (known, last) = {
                let heights = self.caches.heights.read().unwrap();
                if let Some(h) = heights.get(n) {
                    return Ok(h.clone());
                }
                (heights.len(), heights[heights.len() - 1].clone())
            };
            let stage = self.stage(known - 1)?;
            let next = last * stage.cuts() + stage.spacer_total();
            let mut heights = self.caches.heights.write().unwrap();
            if heights.len() == known {
                heights.push(next);
            }
        }
    }

    /// `|I_{m,n}| = prod_{m <= j < n} r_j`.
    pub fn block_count(&self, m: usize, n: usize) -> Result<BigUint> {
        check_order(m, n)?;
        (m..n).try_fold(BigUint::one(), |acc, j| Ok(acc * self.cuts(j)?))
    }

    /// Start offsets of the `r_n` copies of the stage-`n` tower inside the
    /// stage-`n+1` tower: `o_j = j h_n + sum_{i <= j} s_{n,i}`.
    pub fn stage_offsets(&self, n: usize) -> Result<Vec<BigUint>> {
        let stage = self.stage(n)?;
        if stage.cuts() > DEFAULT_SIZE_LIMIT as u64 {
            return Err(size_limit("stage offset list", stage.cuts(), DEFAULT_SIZE_LIMIT));
        }
        let h = self.height(n)?;
        let mut offsets = Vec::with_capacity(stage.cuts() as usize);
        let mut o = BigUint::zero();
        for column in 1..=stage.cuts() {
            offsets.push(o.clone());
            o += &h + stage.spacer(column);
        }
        Ok(offsets)
    }

    /// Sparse histogram of the stage offsets modulo `k`, as `(residue, count)`
    /// pairs sorted by residue. Runs in time proportional to the number of
    /// spacer runs times `min(r_n, k)`.
    pub(crate) fn offset_residues(&self, n: usize, k: u64) -> Result<Arc<Vec<(u64, u64)>>> {
        if let Some(hit) = self.caches.offsets.read().unwrap().get(&(n, k)) {
            return Ok(hit.clone());
        }
        let stage = self.stage(n)?;
        let h_mod = residue(&self.height(n)?, k);
        let r = stage.cuts();
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        // Offsets between consecutive spacer columns form arithmetic
        // progressions with step h_n.
        let mut prefix = 0u64;
        let mut start = 0u64;
        let mut breaks: Vec<(u64, u64)> = stage
            .spacer_runs()
            .filter(|&(c, _)| c < r)
            .map(|(c, s)| (c, residue(s, k)))
            .collect();
        breaks.push((r, 0));
        for (column, s_mod) in breaks {
            let first = mod_add(mod_mul(start % k, h_mod, k), prefix, k);
            progression_histogram(first, h_mod, column - start, k, &mut counts);
            prefix = mod_add(prefix, s_mod, k);
            start = column;
        }
        let entry = Arc::new(counts.into_iter().collect::<Vec<_>>());
        if k <= CACHED_MODULUS_LIMIT {
            self.caches
                .offsets
                .write()
                .unwrap()
                .insert((n, k), entry.clone());
        }
        Ok(entry)
    }

    /// The index set `I_{m,n}`: levels of the stage-`n` tower that make up
    /// the base of the stage-`m` tower.
    pub fn index_set(&self, m: usize, n: usize, size_limit_: usize) -> Result<IndexSet> {
        let size = self.block_count(m, n)?;
        if size > BigUint::from(size_limit_) {
            return Err(size_limit("index set", size, size_limit_));
        }
        let mut indices = vec![BigUint::zero()];
        for j in m..n {
            let offsets = self.stage_offsets(j)?;
            // copies occupy disjoint consecutive ranges, so the result stays sorted
            indices = offsets
                .iter()
                .flat_map(|o| indices.iter().map(move |i| o + i))
                .collect();
        }
        Ok(IndexSet { m, n, indices })
    }

    /// Histogram of `I_{m,n}` modulo `k`, computed by iterated convolution of
    /// stage-offset histograms. Cost does not depend on `|I_{m,n}|`.
    pub fn residue_histogram(&self, m: usize, n: usize, k: u64) -> Result<Arc<ResidueHistogram>> {
        check_order(m, n)?;
        Ok(self.residue_histograms(m, n, k)?.pop().expect("chain is nonempty"))
    }

    /// Histograms of `I_{m,n}` modulo `k` for every `n` in `m..=n_max`.
    pub fn residue_histograms(
        &self,
        m: usize,
        n_max: usize,
        k: u64,
    ) -> Result<Vec<Arc<ResidueHistogram>>> {
        check_order(m, n_max)?;
        histogram::check_modulus(k)?;
        let cached: Vec<Option<Arc<ResidueHistogram>>> = {
            let cache = self.caches.histograms.read().unwrap();
            (m..=n_max).map(|n| cache.get(&(m, n, k)).cloned()).collect()
        };
        if cached.iter().all(Option::is_some) {
            return Ok(cached.into_iter().flatten().collect());
        }
        // resume from the deepest cached prefix
        let resume = cached.iter().take_while(|h| h.is_some()).count();
        let mut out: Vec<Arc<ResidueHistogram>> =
            cached.into_iter().take(resume).flatten().collect();
        let mut current = match out.last() {
            Some(h) => (**h).clone(),
            None => ResidueHistogram::singleton(m, k),
        };
        if out.is_empty() {
            out.push(Arc::new(current.clone()));
        }
        for j in current.n()..n_max {
            let offsets = self.offset_residues(j, k)?;
            current = current.advance(&offsets, self.cuts(j)?);
            out.push(Arc::new(current.clone()));
        }
        if k <= CACHED_MODULUS_LIMIT {
            let mut cache = self.caches.histograms.write().unwrap();
            for h in &out {
                cache.entry((m, h.n(), k)).or_insert_with(|| h.clone());
            }
        }
        Ok(out)
    }

    /// Exact partial sums of `sum_{n < depth} (h_{n+1} - r_n h_n) / h_{n+1}`.
    pub fn mass_check(&self, depth: usize) -> Result<MassReport> {
        let mut terms = Vec::with_capacity(depth);
        let mut partial_sums = Vec::with_capacity(depth + 1);
        let mut sum = BigRational::zero();
        partial_sums.push(sum.clone());
        for n in 0..depth {
            let stage = self.stage(n)?;
            let term = ratio(stage.spacer_total(), self.height(n + 1)?);
            sum += &term;
            terms.push(term);
            partial_sums.push(sum.clone());
        }
        Ok(MassReport {
            depth,
            terms,
            partial_sums,
        })
    }

    /// `mu(B_n) = 1 / prod_{j<n} r_j`, with `mu(B_0) = 1`.
    pub fn base_measure(&self, n: usize) -> Result<BigRational> {
        Ok(ratio(BigUint::one(), self.block_count(0, n)?))
    }

    /// Unnormalized measure of the stage-`n` tower, `h_n mu(B_n)`.
    pub fn tower_mass(&self, n: usize) -> Result<BigRational> {
        Ok(ratio(self.height(n)?, self.block_count(0, n)?))
    }
}

/// `I_{m,n}` in explicit form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    pub m: usize,
    pub n: usize,
    pub indices: Vec<BigUint>,
}

impl IndexSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices as machine integers, when they all fit.
    pub fn to_usize(&self) -> Option<Vec<usize>> {
        self.indices.iter().map(ToPrimitive::to_usize).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MassReport {
    pub depth: usize,
    /// `(sum_i s_{n,i}) / h_{n+1}` for `n < depth`.
    pub terms: Vec<BigRational>,
    /// `partial_sums[t]` is the sum of the first `t` terms.
    pub partial_sums: Vec<BigRational>,
}

impl MassReport {
    pub fn total(&self) -> &BigRational {
        self.partial_sums.last().expect("contains the empty sum")
    }
}

pub(crate) fn check_order(m: usize, n: usize) -> Result<()> {
    if n < m {
        return Err(Error::InvalidArgument(format!(
            "stage window requires m <= n, got m = {m}, n = {n}"
        )));
    }
    Ok(())
}

/// `[x]_k` for a big integer.
pub fn residue(x: &BigUint, k: u64) -> u64 {
    (x % k).to_u64().expect("residue is below k")
}

fn mod_add(a: u64, b: u64, k: u64) -> u64 {
    ((a as u128 + b as u128) % k as u128) as u64
}

fn mod_mul(a: u64, b: u64, k: u64) -> u64 {
    ((a as u128 * b as u128) % k as u128) as u64
}

/// Adds the residues of `first + t * step` for `0 <= t < len` to `counts`.
fn progression_histogram(first: u64, step: u64, len: u64, k: u64, counts: &mut BTreeMap<u64, u64>) {
    if len == 0 {
        return;
    }
    let period = k / step.gcd(&k);
    let distinct = len.min(period);
    for t in 0..distinct {
        let times = (len - 1 - t) / period + 1;
        *counts.entry(mod_add(first, mod_mul(t, step, k), k)).or_default() += times;
    }
}
