//! Exact measure arithmetic on unions of tower levels.
//!
//! Measures are unnormalized: `mu(B_0) = 1` and `mu(B_n) = 1 / prod_{j<n} r_j`.
//! Every quantity reported here is a ratio, so the total mass of the space
//! is never needed.

use std::collections::BTreeSet;

use bitvec::prelude::*;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::criteria::window_grid;
use crate::error::{size_limit, Error, Result};
use crate::rational::{inverse_power_of_two, ratio};
use crate::tower::{residue, CuttingSpacerSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Members {
    /// One bit per level `0..h_n`.
    Explicit(BitVec),
    /// `{ i < h_n : [i]_modulus in classes }`.
    Residues {
        modulus: u64,
        classes: BTreeSet<u64>,
    },
}

/// A union of levels of the stage-`depth` tower.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSet {
    depth: usize,
    height: BigUint,
    members: Members,
}

fn explicit_height(spec: &CuttingSpacerSpec, depth: usize, limit: usize) -> Result<usize> {
    let h = spec.height(depth)?;
    h.to_usize()
        .filter(|&h| h <= limit)
        .ok_or_else(|| size_limit("explicit level set", h, limit))
}

impl LevelSet {
    pub fn from_levels(
        spec: &CuttingSpacerSpec,
        depth: usize,
        levels: impl IntoIterator<Item = usize>,
        limit: usize,
    ) -> Result<Self> {
        let h = explicit_height(spec, depth, limit)?;
        let mut bits = bitvec![0; h];
        for i in levels {
            if i >= h {
                return Err(Error::InvalidArgument(format!(
                    "level {i} outside the height-{h} tower"
                )));
            }
            bits.set(i, true);
        }
        Ok(Self {
            depth,
            height: h.into(),
            members: Members::Explicit(bits),
        })
    }

    /// The base `B_depth`, i.e. level 0.
    pub fn base(spec: &CuttingSpacerSpec, depth: usize, limit: usize) -> Result<Self> {
        Self::from_levels(spec, depth, [0], limit)
    }

    pub fn residue_classes(
        spec: &CuttingSpacerSpec,
        depth: usize,
        modulus: u64,
        classes: impl IntoIterator<Item = u64>,
    ) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::InvalidModulus(modulus));
        }
        let classes: BTreeSet<u64> = classes.into_iter().collect();
        if let Some(&c) = classes.iter().find(|&&c| c >= modulus) {
            return Err(Error::InvalidArgument(format!(
                "class {c} is not a residue mod {modulus}"
            )));
        }
        Ok(Self {
            depth,
            height: spec.height(depth)?,
            members: Members::Residues { modulus, classes },
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn height(&self) -> &BigUint {
        &self.height
    }

    pub fn members(&self) -> &Members {
        &self.members
    }

    /// Number of levels in the set.
    pub fn level_count(&self) -> BigUint {
        match &self.members {
            Members::Explicit(bits) => bits.count_ones().into(),
            Members::Residues { modulus, classes } => classes
                .iter()
                .map(|&c| class_size(&self.height, *modulus, c))
                .sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.level_count().is_zero()
    }

    /// `|levels| * mu(B_depth)`.
    pub fn measure(&self, spec: &CuttingSpacerSpec) -> Result<BigRational> {
        Ok(ratio(self.level_count(), spec.block_count(0, self.depth)?))
    }

    pub fn contains(&self, level: &BigUint) -> bool {
        if level >= &self.height {
            return false;
        }
        match &self.members {
            Members::Explicit(bits) => level.to_usize().is_some_and(|i| bits[i]),
            Members::Residues { modulus, classes } => classes.contains(&residue(level, *modulus)),
        }
    }

    /// The same set with every level listed explicitly.
    pub fn materialize(&self, limit: usize) -> Result<Self> {
        match &self.members {
            Members::Explicit(_) => Ok(self.clone()),
            Members::Residues { modulus, classes } => {
                let h = self
                    .height
                    .to_usize()
                    .filter(|&h| h <= limit)
                    .ok_or_else(|| size_limit("explicit level set", &self.height, limit))?;
                let bits: BitVec = (0..h)
                    .map(|i| classes.contains(&(i as u64 % modulus)))
                    .collect();
                Ok(Self {
                    depth: self.depth,
                    height: self.height.clone(),
                    members: Members::Explicit(bits),
                })
            }
        }
    }

    /// Levels in increasing order.
    pub fn levels(&self, limit: usize) -> Result<Vec<usize>> {
        match self.materialize(limit)?.members {
            Members::Explicit(bits) => Ok(bits.iter_ones().collect()),
            Members::Residues { .. } => unreachable!("materialized"),
        }
    }

    /// Re-expresses the set at a deeper stage: level `i` becomes the levels
    /// `o + i` for `o` in `I_{depth, target}`.
    ///
    /// Residue families stay symbolic when no spacers are inserted between
    /// the two stages and the modulus divides `h_depth`; otherwise they are
    /// materialized.
    pub fn refine(&self, spec: &CuttingSpacerSpec, target: usize, limit: usize) -> Result<Self> {
        if target < self.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot refine from depth {} to {target}",
                self.depth
            )));
        }
        if target == self.depth {
            return Ok(self.clone());
        }
        if let Members::Residues { modulus, classes } = &self.members {
            let aligned = residue(&self.height, *modulus) == 0
                && (self.depth..target)
                    .map(|j| spec.stage(j).map(|s| !s.has_spacers()))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .all(|plain| plain);
            if aligned {
                return Self::residue_classes(spec, target, *modulus, classes.iter().copied());
            }
        }
        let source = self.materialize(limit)?;
        let Members::Explicit(bits) = &source.members else {
            unreachable!("materialized")
        };
        let h = explicit_height(spec, target, limit)?;
        let offsets = spec
            .index_set(self.depth, target, limit)?
            .to_usize()
            .expect("offsets are below the refined height");
        let mut refined = bitvec![0; h];
        for o in offsets {
            for i in bits.iter_ones() {
                refined.set(o + i, true);
            }
        }
        Ok(Self {
            depth: target,
            height: h.into(),
            members: Members::Explicit(refined),
        })
    }

    /// Levels not in the set.
    pub fn complement(&self) -> Self {
        let members = match &self.members {
            Members::Explicit(bits) => Members::Explicit(!bits.clone()),
            Members::Residues { modulus, classes } => Members::Residues {
                modulus: *modulus,
                classes: (0..*modulus).filter(|c| !classes.contains(c)).collect(),
            },
        };
        Self {
            depth: self.depth,
            height: self.height.clone(),
            members,
        }
    }

    /// `{ i + t : i in A, 0 <= i + t < h }`: the image under `T^t`, restricted
    /// to levels that stay inside the tower.
    pub fn shift(&self, t: i64, limit: usize) -> Result<Self> {
        let source = self.materialize(limit)?;
        let Members::Explicit(bits) = &source.members else {
            unreachable!("materialized")
        };
        let h = bits.len() as i64;
        let mut shifted = bitvec![0; bits.len()];
        for i in bits.iter_ones() {
            let j = i as i64 + t;
            if (0..h).contains(&j) {
                shifted.set(j as usize, true);
            }
        }
        Ok(Self {
            depth: self.depth,
            height: self.height.clone(),
            members: Members::Explicit(shifted),
        })
    }

    /// `|A \ B|` in levels, for two sets at the same depth.
    fn difference_count(&self, other: &Self, limit: usize) -> Result<BigUint> {
        debug_assert_eq!(self.depth, other.depth);
        if let (
            Members::Residues { modulus: qa, classes: ca },
            Members::Residues { modulus: qb, classes: cb },
        ) = (&self.members, &other.members)
        {
            if qa == qb {
                return Ok(ca
                    .difference(cb)
                    .map(|&c| class_size(&self.height, *qa, c))
                    .sum());
            }
        }
        let a = self.materialize(limit)?;
        let b = other.materialize(limit)?;
        match (&a.members, &b.members) {
            (Members::Explicit(x), Members::Explicit(y)) => {
                Ok((x.clone() & !y.clone()).count_ones().into())
            }
            _ => unreachable!("materialized"),
        }
    }
}

/// `|{ i < h : [i]_q = c }|`.
fn class_size(h: &BigUint, q: u64, c: u64) -> BigUint {
    if &BigUint::from(c) >= h {
        return BigUint::zero();
    }
    (h - 1u32 - c) / q + 1u32
}

/// `mu(A \ B) / mu(A)`, computed after refining both sets to the deeper of
/// their depths.
pub fn containment_fraction(
    spec: &CuttingSpacerSpec,
    a: &LevelSet,
    b: &LevelSet,
    limit: usize,
) -> Result<BigRational> {
    let depth = a.depth.max(b.depth);
    let a = a.refine(spec, depth, limit)?;
    let b = b.refine(spec, depth, limit)?;
    let size = a.level_count();
    if size.is_zero() {
        return Err(Error::EmptySet);
    }
    Ok(ratio(a.difference_count(&b, limit)?, size))
}

/// `A ⊆_ε B`: the containment fraction is below `eps`.
pub fn is_eps_contained(
    spec: &CuttingSpacerSpec,
    a: &LevelSet,
    b: &LevelSet,
    eps: &BigRational,
    limit: usize,
) -> Result<bool> {
    Ok(&containment_fraction(spec, a, b, limit)? < eps)
}

/// Threshold schedule for the approximating maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EtaSchedule {
    /// `eta_alpha = 1 / 2^(alpha + 2)`.
    Halving,
    Constant(BigRational),
    Explicit(Vec<BigRational>),
}

impl EtaSchedule {
    pub fn eta(&self, alpha: usize) -> Result<BigRational> {
        match self {
            EtaSchedule::Halving => Ok(inverse_power_of_two(alpha + 2)),
            EtaSchedule::Constant(q) => Ok(q.clone()),
            EtaSchedule::Explicit(v) => v.get(alpha).cloned().ok_or_else(|| {
                Error::InvalidArgument(format!("eta schedule has no entry {alpha}"))
            }),
        }
    }
}

/// Lower bound on the mass of the stage-`N_alpha` tower, relative to the
/// deepest computed tower.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MassFloor {
    /// `1 - 1 / 2^(alpha + 1)`.
    Halving,
    Disabled,
}

impl MassFloor {
    fn floor(&self, alpha: usize) -> BigRational {
        match self {
            MassFloor::Halving => BigRational::from_integer(1.into()) - inverse_power_of_two(alpha + 1),
            MassFloor::Disabled => BigRational::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproximationPlan {
    pub modulus: u64,
    /// Number of maps to build.
    pub maps: usize,
    /// Deepest stage consulted; also the reference tower for mass ratios.
    pub depth: usize,
    pub eta: EtaSchedule,
    pub mass_floor: MassFloor,
}

/// A finite-stage approximation to a factor map onto `Z/kZ`.
///
/// On the stage-`N` tower, `phi(level i) = [i]_k` and
/// `pi(level i) = [[i]_k - J]_k`, where `J` is the sum of the earlier
/// offsets `j_beta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproximatingMap {
    pub modulus: u64,
    pub alpha: usize,
    /// `N_alpha`.
    pub stage: usize,
    /// `N_{alpha+1}`.
    pub next_stage: usize,
    pub eta: BigRational,
    /// `j_alpha`: the dominant residue of `I_{N_alpha, N_{alpha+1}}`.
    pub offset: u64,
    /// `J_alpha` reduced mod `k`.
    pub accumulated: u64,
    /// Fiber of `pi_alpha` over each class.
    pub fibers: Vec<LevelSet>,
    /// Fraction of `I_{N_alpha, N_{alpha+1}}` outside class `j_alpha`.
    pub window_delta: BigRational,
    /// `mu{x in dom(phi_alpha) : phi_{alpha+1}(x) != phi_alpha(x) + j_alpha}`
    /// relative to the reference tower.
    pub defect: BigRational,
    /// Mass of the stage-`N_alpha` tower relative to the reference tower.
    pub tower_fraction: BigRational,
}

impl ApproximatingMap {
    /// `pi_alpha` on a level of the stage-`N_alpha` tower.
    pub fn class_of(&self, level: u64) -> u64 {
        let k = self.modulus;
        (level % k + k - self.accumulated) % k
    }
}

/// Chooses stages `N_0 < N_1 < ...` and builds the approximating maps.
///
/// `N_alpha` is the least stage after `N_{alpha-1}` whose tower meets the
/// mass floor and from which every window `N_alpha <= m <= n <= depth` has
/// discrepancy below `eta_alpha`. Failing to find one is reported as
/// [`Error::CriterionUnmetAtDepth`], which is not a refutation.
pub fn build_approximating_maps(
    spec: &CuttingSpacerSpec,
    plan: &ApproximationPlan,
) -> Result<Vec<ApproximatingMap>> {
    let k = plan.modulus;
    if k < 2 {
        return Err(Error::InvalidModulus(k));
    }
    if plan.maps == 0 {
        return Ok(Vec::new());
    }
    let depth = plan.depth;
    let grid = window_grid(spec, k, 0, depth)?;
    // worst[m] = max delta over windows starting at m or later
    let mut worst = vec![BigRational::zero(); depth + 2];
    for m in (0..=depth).rev() {
        let row_max = grid[m].iter().map(|d| &d.delta).max().cloned().unwrap_or_default();
        worst[m] = row_max.max(worst[m + 1].clone());
    }
    let reference = spec.tower_mass(depth)?;

    let mut stages: Vec<usize> = Vec::with_capacity(plan.maps + 1);
    for alpha in 0..=plan.maps {
        let eta = plan.eta.eta(alpha)?;
        let floor = plan.mass_floor.floor(alpha);
        let start = stages.last().map_or(0, |&s| s + 1);
        // leave room for the later stages
        let unmet = Error::CriterionUnmetAtDepth { alpha, depth };
        let last = (depth + alpha).checked_sub(plan.maps).ok_or(unmet.clone())?;
        let mut found = None;
        for (n, w) in worst.iter().enumerate().take(last + 1).skip(start) {
            if *w < eta && spec.tower_mass(n)? / &reference >= floor {
                found = Some(n);
                break;
            }
        }
        stages.push(found.ok_or(unmet)?);
    }

    let mut maps = Vec::with_capacity(plan.maps);
    let mut accumulated = 0u64;
    for alpha in 0..plan.maps {
        let (stage, next_stage) = (stages[alpha], stages[alpha + 1]);
        let hist = spec.residue_histogram(stage, next_stage, k)?;
        let (offset, best) = hist.argmax();
        let outside = hist.total() - &best;
        let window_delta = ratio(outside.clone(), hist.total().clone());
        let defect = ratio(spec.height(stage)? * outside, spec.block_count(0, next_stage)?)
            / &reference;
        let fibers = (0..k)
            .map(|c| LevelSet::residue_classes(spec, stage, k, [(c + accumulated) % k]))
            .collect::<Result<Vec<_>>>()?;
        maps.push(ApproximatingMap {
            modulus: k,
            alpha,
            stage,
            next_stage,
            eta: plan.eta.eta(alpha)?,
            offset,
            accumulated,
            fibers,
            window_delta,
            defect,
            tower_fraction: spec.tower_mass(stage)? / &reference,
        });
        accumulated = (accumulated + offset) % k;
    }
    Ok(maps)
}

/// Fraction of non-top levels `i` of the stage-`N_alpha` tower where the
/// fiber labels fail `pi(i + 1) = pi(i) + 1`. Levels outside every fiber
/// (or inside several) count as failures.
pub fn equivariance_defect(map: &ApproximatingMap, limit: usize) -> Result<BigRational> {
    let k = map.modulus;
    let Some(first) = map.fibers.first() else {
        return Err(Error::InvalidArgument("map has no fibers".into()));
    };
    let h = first.height().clone();
    if h <= BigUint::from(1u32) {
        return Ok(BigRational::zero());
    }
    let steps = &h - 1u32;
    let label = |found: Vec<u64>| if found.len() == 1 { Some(found[0]) } else { None };
    let ok = |a: Option<u64>, b: Option<u64>| matches!((a, b), (Some(x), Some(y)) if y == (x + 1) % k);

    let common_modulus = map.fibers.iter().try_fold(None, |acc: Option<u64>, f| match f.members() {
        Members::Residues { modulus, .. } if acc.is_none() || acc == Some(*modulus) => Some(Some(*modulus)),
        _ => None,
    });
    let bad: BigUint = match common_modulus.flatten() {
        Some(q) => {
            let labels: Vec<Option<u64>> = (0..q)
                .map(|r| {
                    label(
                        map.fibers
                            .iter()
                            .enumerate()
                            .filter(|(_, f)| f.contains(&BigUint::from(r)))
                            .map(|(c, _)| c as u64)
                            .collect(),
                    )
                })
                .collect();
            (0..q)
                .filter(|&r| !ok(labels[r as usize], labels[((r + 1) % q) as usize]))
                .map(|r| class_size(&steps, q, r))
                .sum()
        }
        None => {
            let explicit = map
                .fibers
                .iter()
                .map(|f| f.materialize(limit))
                .collect::<Result<Vec<_>>>()?;
            let h = explicit_len(&h, limit)?;
            let labels: Vec<Option<u64>> = (0..h)
                .map(|i| {
                    let i = BigUint::from(i);
                    label(
                        explicit
                            .iter()
                            .enumerate()
                            .filter(|(_, f)| f.contains(&i))
                            .map(|(c, _)| c as u64)
                            .collect(),
                    )
                })
                .collect();
            labels
                .windows(2)
                .filter(|w| !ok(w[0], w[1]))
                .count()
                .into()
        }
    };
    Ok(ratio(bad, steps))
}

fn explicit_len(h: &BigUint, limit: usize) -> Result<usize> {
    h.to_usize()
        .filter(|&h| h <= limit)
        .ok_or_else(|| size_limit("explicit level set", h, limit))
}
