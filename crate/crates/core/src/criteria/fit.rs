use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::ratio;
use crate::tower::CuttingSpacerSpec;

/// The residue classes `D` chosen by a fit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResidueSelection {
    Classes(Vec<u64>),
    /// When `k >= h_m` every level is its own class and the best `D` is the
    /// image of `I_{l,m}` itself; kept symbolic because it can be huge.
    IndexSetImage { l: usize, m: usize },
}

/// Best approximation of `I_{l,m}` by a union of residue classes mod `k`
/// intersected with `[0, h_m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricDifferenceFit {
    pub l: usize,
    pub m: usize,
    pub k: u64,
    pub best_d: ResidueSelection,
    /// `|{i < h_m : [i]_k in D} Δ I_{l,m}| / |I_{l,m}|` at the optimal `D`.
    pub eps_star: BigRational,
}

/// Majority rule: class `c` joins `D` exactly when more than half of the
/// levels `i < h_m` with `[i]_k = c` lie in `I_{l,m}`. The symmetric
/// difference splits into independent per-class terms, so this is optimal.
pub fn symmetric_difference_fit(
    spec: &CuttingSpacerSpec,
    l: usize,
    m: usize,
    k: u64,
) -> Result<SymmetricDifferenceFit> {
    crate::tower::check_order(l, m)?;
    if k < 2 {
        return Err(Error::InvalidModulus(k));
    }
    let h = spec.height(m)?;
    if h <= BigUint::from(k) {
        return Ok(SymmetricDifferenceFit {
            l,
            m,
            k,
            best_d: ResidueSelection::IndexSetImage { l, m },
            eps_star: BigRational::zero(),
        });
    }
    let hist = spec.residue_histogram(l, m, k)?;
    let mut classes = Vec::new();
    let mut mismatch = BigUint::zero();
    for c in 0..k {
        let inside = hist.count(c);
        let levels = (&h - 1u32 - c) / k + 1u32;
        let outside = &levels - &inside;
        if inside > outside {
            classes.push(c);
            mismatch += outside;
        } else {
            mismatch += inside;
        }
    }
    Ok(SymmetricDifferenceFit {
        l,
        m,
        k,
        best_d: ResidueSelection::Classes(classes),
        eps_star: ratio(mismatch, hist.total().clone()),
    })
}
