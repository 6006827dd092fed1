use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use super::residue;
use crate::error::{Error, Result};

/// Largest modulus for which a dense residue histogram is built.
pub const MAX_DENSE_MODULUS: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Counts {
    // used while the total fits, which bounds every count and product
    Small(Vec<u128>),
    Big(Vec<BigUint>),
}

/// Counts of `I_{m,n}` by residue class modulo `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueHistogram {
    m: usize,
    n: usize,
    k: u64,
    counts: Counts,
    total: BigUint,
}

pub(crate) fn check_modulus(k: u64) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidModulus(k));
    }
    if k > MAX_DENSE_MODULUS {
        return Err(Error::ModulusTooLarge {
            modulus: k,
            limit: MAX_DENSE_MODULUS,
        });
    }
    Ok(())
}

impl ResidueHistogram {
    /// Histogram of `I_{m,m} = {0}`.
    pub(crate) fn singleton(m: usize, k: u64) -> Self {
        let mut counts = vec![0u128; k as usize];
        counts[0] = 1;
        Self {
            m,
            n: m,
            k,
            counts: Counts::Small(counts),
            total: BigUint::from(1u32),
        }
    }

    /// Histogram of an explicit list of indices (labelled with the window it
    /// came from).
    pub fn from_indices<'a>(
        m: usize,
        n: usize,
        k: u64,
        indices: impl IntoIterator<Item = &'a BigUint>,
    ) -> Result<Self> {
        check_modulus(k)?;
        let mut counts = vec![BigUint::zero(); k as usize];
        let mut total = BigUint::zero();
        for i in indices {
            counts[residue(i, k) as usize] += 1u32;
            total += 1u32;
        }
        Ok(Self {
            m,
            n,
            k,
            counts: Counts::Big(counts),
            total,
        })
    }

    /// Convolves with a sparse stage-offset histogram, moving from `n` to
    /// `n + 1`. `cuts` is the number of offsets.
    pub(crate) fn advance(&self, offsets: &[(u64, u64)], cuts: u64) -> Self {
        let total = &self.total * cuts;
        let k = self.k as usize;
        let counts = match &self.counts {
            Counts::Small(old) if total.bits() <= 127 => {
                let mut new = vec![0u128; k];
                for &(shift, weight) in offsets {
                    convolve_into(&mut new, old, shift as usize, |acc, c| {
                        *acc += c * weight as u128
                    });
                }
                Counts::Small(new)
            }
            counts => {
                let old = match counts {
                    Counts::Small(v) => v.iter().map(|&c| BigUint::from(c)).collect(),
                    Counts::Big(v) => v.clone(),
                };
                let mut new = vec![BigUint::zero(); k];
                for &(shift, weight) in offsets {
                    convolve_into(&mut new, &old, shift as usize, |acc, c| {
                        if !c.is_zero() {
                            *acc += c * weight
                        }
                    });
                }
                Counts::Big(new)
            }
        };
        Self {
            m: self.m,
            n: self.n + 1,
            k: self.k,
            counts,
            total,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> u64 {
        self.k
    }

    /// `|I_{m,n}|`.
    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn count(&self, class: u64) -> BigUint {
        match &self.counts {
            Counts::Small(v) => BigUint::from(v[class as usize]),
            Counts::Big(v) => v[class as usize].clone(),
        }
    }

    pub fn counts(&self) -> Vec<BigUint> {
        (0..self.k).map(|c| self.count(c)).collect()
    }

    /// Residue class with the most indices; ties go to the smallest class.
    pub fn argmax(&self) -> (u64, BigUint) {
        match &self.counts {
            Counts::Small(v) => {
                let (c, &best) = v
                    .iter()
                    .enumerate()
                    .rev()
                    .max_by_key(|&(_, &x)| x)
                    .expect("modulus is at least 2");
                (c as u64, BigUint::from(best))
            }
            Counts::Big(v) => {
                let (c, best) = v
                    .iter()
                    .enumerate()
                    .rev()
                    .max_by_key(|&(_, x)| x)
                    .expect("modulus is at least 2");
                (c as u64, best.clone())
            }
        }
    }

    /// Classes with a nonzero count, with their counts.
    pub fn support(&self) -> Vec<(u64, BigUint)> {
        (0..self.k)
            .map(|c| (c, self.count(c)))
            .filter(|(_, x)| !x.is_zero())
            .collect()
    }

    /// Count as `u128` when it fits.
    pub fn count_u128(&self, class: u64) -> Option<u128> {
        match &self.counts {
            Counts::Small(v) => Some(v[class as usize]),
            Counts::Big(v) => v[class as usize].to_u128(),
        }
    }
}

fn convolve_into<T>(new: &mut [T], old: &[T], shift: usize, mut add: impl FnMut(&mut T, &T)) {
    let k = old.len();
    for (c, count) in old.iter().enumerate() {
        let mut target = c + shift;
        if target >= k {
            target -= k;
        }
        add(&mut new[target], count);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_smallest_class() {
        let idx: Vec<BigUint> = [0u32, 1, 2, 3].iter().map(|&x| x.into()).collect();
        let h = ResidueHistogram::from_indices(0, 1, 2, &idx).unwrap();
        assert_eq!(h.argmax(), (0, BigUint::from(2u32)));
        let h = ResidueHistogram::from_indices(0, 1, 4, &idx[1..]).unwrap();
        assert_eq!(h.argmax().0, 1);
    }

    #[test]
    fn advance_small_and_big_agree() {
        let base = ResidueHistogram::singleton(0, 5);
        let offsets = [(0, 2), (3, 1)];
        let small = base.advance(&offsets, 3);
        let mut big = base.clone();
        big.counts = Counts::Big(base.counts());
        let big = big.advance(&offsets, 3);
        assert_eq!(small.counts(), big.counts());
        assert_eq!(small.total(), &BigUint::from(3u32));
    }

    #[test]
    fn modulus_bounds() {
        assert_eq!(check_modulus(1), Err(Error::InvalidModulus(1)));
        assert!(check_modulus(MAX_DENSE_MODULUS + 1).is_err());
        assert!(check_modulus(2).is_ok());
    }
}
