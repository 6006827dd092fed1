//! Finite cyclic permutations, odometers, and their supernatural-number
//! classification.
//!
//! Two odometers along divisibility chains `(k_n)` and `(k'_n)` are
//! isomorphic exactly when the chains have the same set of divisors. That
//! set is encoded by a [`Supernatural`]: a finite map from primes to
//! exponents in `N ∪ {∞}`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::tower::residue;

const TRIAL_DIVISION_BOUND: u64 = 1_000_000;

/// The rotation `x -> [x + 1]_k` on `k` atoms of mass `1/k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CyclicSystem {
    k: u64,
}

impl CyclicSystem {
    pub fn new(k: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidModulus(k));
        }
        Ok(Self { k })
    }

    pub fn modulus(&self) -> u64 {
        self.k
    }

    pub fn step(&self, x: u64) -> u64 {
        (x % self.k + 1) % self.k
    }

    /// `[x]_k`.
    pub fn class_of(&self, x: &BigUint) -> u64 {
        residue(x, self.k)
    }
}

/// A finitely queryable sequence of integers greater than 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KSequence {
    Explicit(Vec<BigUint>),
    /// `k_0 = base`, `k_{n+1} = k_n * multipliers[n % len]`.
    Periodic {
        base: BigUint,
        multipliers: Vec<BigUint>,
    },
    /// `k_n = base^(n+1)`.
    Powers { base: u64 },
    /// `k_n = n + offset`. Not a divisibility chain; only meaningful as a
    /// multiplier sequence.
    Shifted { offset: u64 },
}

impl KSequence {
    pub fn explicit(terms: &[u64]) -> Self {
        KSequence::Explicit(terms.iter().map(|&k| BigUint::from(k)).collect())
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            KSequence::Explicit(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn is_formula(&self) -> bool {
        !matches!(self, KSequence::Explicit(_))
    }

    pub fn term(&self, n: usize) -> Result<BigUint> {
        let k = match self {
            KSequence::Explicit(v) => v.get(n).cloned().ok_or(Error::StageOutOfRange {
                stage: n,
                available: v.len(),
            })?,
            KSequence::Periodic { base, multipliers } => {
                if multipliers.is_empty() {
                    return Err(Error::InvalidArgument(
                        "periodic sequence needs at least one multiplier".into(),
                    ));
                }
                (0..n).fold(base.clone(), |acc, t| acc * &multipliers[t % multipliers.len()])
            }
            KSequence::Powers { base } => num_traits::pow(BigUint::from(*base), n + 1),
            KSequence::Shifted { offset } => BigUint::from(n as u64 + offset),
        };
        if k < BigUint::from(2u32) {
            return Err(Error::InvalidArgument(format!("k_{n} = {k} must exceed 1")));
        }
        Ok(k)
    }
}

/// Declared behavior of `sum_n 1 / k_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Summability {
    Converges,
    Diverges,
}

/// An odometer presented by a divisibility chain `(k_n)`.
///
/// Formula sequences must carry a divergence annotation for every prime in
/// their support; limits are never inferred from finitely many terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdometerSpec {
    seq: KSequence,
    divergence: BTreeMap<u64, bool>,
    summability: Option<Summability>,
}

impl OdometerSpec {
    pub fn new(seq: KSequence) -> Self {
        Self {
            seq,
            divergence: BTreeMap::new(),
            summability: None,
        }
    }

    /// `k_n = base^(n+1)`, annotated from the factorization of `base`: every
    /// prime of `base` has unbounded exponent, and `sum 1/base^(n+1)`
    /// converges.
    pub fn powers(base: u64) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidArgument(format!("base {base} must exceed 1")));
        }
        let mut spec = Self::new(KSequence::Powers { base });
        for (p, _) in factor_u64(base) {
            spec = spec.declare_prime(p, true);
        }
        Ok(spec.declare_summability(Summability::Converges))
    }

    /// Declares a prime of the support and whether its exponent diverges.
    pub fn declare_prime(mut self, prime: u64, diverges: bool) -> Self {
        self.divergence.insert(prime, diverges);
        self
    }

    pub fn declare_summability(mut self, s: Summability) -> Self {
        self.summability = Some(s);
        self
    }

    pub fn sequence(&self) -> &KSequence {
        &self.seq
    }

    pub fn summability(&self) -> Option<Summability> {
        self.summability
    }

    pub fn divergence(&self) -> &BTreeMap<u64, bool> {
        &self.divergence
    }

    /// `k_n`, checking that `k_{n-1}` divides it.
    pub fn k(&self, n: usize) -> Result<BigUint> {
        let k = self.seq.term(n)?;
        if n > 0 {
            let prev = self.seq.term(n - 1)?;
            if !(&k % &prev).is_zero() {
                return Err(Error::NotDivisibilityChain {
                    index: n - 1,
                    value: prev.to_string(),
                });
            }
        }
        Ok(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exponent {
    Finite(u32),
    Infinite,
}

impl Exponent {
    /// Whether `p^e` is dominated by this exponent.
    pub fn admits(&self, e: u32) -> bool {
        match self {
            Exponent::Finite(f) => e <= *f,
            Exponent::Infinite => true,
        }
    }
}

/// A formal product `prod p^{e_p}` with `e_p` in `N ∪ {∞}` and finite prime
/// support.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Supernatural {
    exponents: BTreeMap<u64, Exponent>,
    truncated_at: Option<usize>,
}

impl Supernatural {
    pub fn new(exponents: impl IntoIterator<Item = (u64, Exponent)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (p, e) in exponents {
            if !is_prime(p) {
                return Err(Error::InvalidArgument(format!("{p} is not prime")));
            }
            if e == Exponent::Finite(0) {
                return Err(Error::InvalidArgument(format!("exponent of {p} must be positive")));
            }
            if map.insert(p, e).is_some() {
                return Err(Error::InvalidArgument(format!("prime {p} listed twice")));
            }
        }
        Ok(Self {
            exponents: map,
            truncated_at: None,
        })
    }

    /// Every prime in `primes` with infinite exponent.
    pub fn infinite(primes: &[u64]) -> Result<Self> {
        Self::new(primes.iter().map(|&p| (p, Exponent::Infinite)))
    }

    /// The least common multiple of `divisors`, marked as read off at a
    /// finite depth.
    pub fn lcm_truncated(divisors: &[u64], depth: usize) -> Self {
        let mut exponents: BTreeMap<u64, Exponent> = BTreeMap::new();
        for &d in divisors {
            for (p, e) in factor_u64(d) {
                let slot = exponents.entry(p).or_insert(Exponent::Finite(e));
                if let Exponent::Finite(f) = slot {
                    *f = (*f).max(e);
                }
            }
        }
        Self {
            exponents,
            truncated_at: Some(depth),
        }
    }

    pub fn truncated(mut self, depth: usize) -> Self {
        self.truncated_at = Some(depth);
        self
    }

    pub fn truncated_at(&self) -> Option<usize> {
        self.truncated_at
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated_at.is_some()
    }

    pub fn exponent(&self, p: u64) -> Option<Exponent> {
        self.exponents.get(&p).copied()
    }

    pub fn exponents(&self) -> impl Iterator<Item = (u64, Exponent)> + '_ {
        self.exponents.iter().map(|(&p, &e)| (p, e))
    }

    /// Whether `k` belongs to the divisor set, i.e. each prime power of `k`
    /// is dominated.
    pub fn divides(&self, k: u64) -> bool {
        k >= 1
            && factor_u64(k)
                .into_iter()
                .all(|(p, e)| self.exponent(p).is_some_and(|x| x.admits(e)))
    }

    /// All prime powers `p^e > 1` in the divisor set with `p^e <= bound`,
    /// sorted.
    pub fn prime_power_ladder(&self, bound: u64) -> Vec<u64> {
        let mut out = Vec::new();
        for (p, exp) in self.exponents() {
            let mut q = p;
            let mut e = 1;
            while q <= bound && exp.admits(e) {
                out.push(q);
                e += 1;
                match q.checked_mul(p) {
                    Some(next) => q = next,
                    None => break,
                }
            }
        }
        out.sort_unstable();
        out
    }
}

impl fmt::Display for Supernatural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponents.is_empty() {
            return f.write_str("1");
        }
        let tokens: Vec<String> = self
            .exponents()
            .map(|(p, e)| match e {
                Exponent::Finite(x) => format!("{p}^{x}"),
                Exponent::Infinite => format!("{p}^inf"),
            })
            .collect();
        f.write_str(&tokens.join(","))
    }
}

impl FromStr for Supernatural {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "1" {
            return Ok(Self::default());
        }
        let bad = || Error::ParseSupernatural(s.to_string());
        let mut pairs = Vec::new();
        for token in s.split(',') {
            let token = token.trim();
            let (p, e) = token.split_once('^').unwrap_or((token, "1"));
            let p: u64 = p.trim().parse().map_err(|_| bad())?;
            let e = match e.trim() {
                "inf" | "∞" => Exponent::Infinite,
                e => Exponent::Finite(e.parse().map_err(|_| bad())?),
            };
            pairs.push((p, e));
        }
        Self::new(pairs)
    }
}

/// The supernatural number of an odometer, probing `k_n` for
/// `n < probe_depth`.
///
/// Explicit lists yield the exponents of their last probed term, marked as
/// truncated. Formula sequences use their declared divergence annotations;
/// every probed term must factor over the declared primes.
pub fn supernatural_of(o: &OdometerSpec, probe_depth: usize) -> Result<Supernatural> {
    if probe_depth == 0 {
        return Err(Error::InvalidArgument("probe depth must be positive".into()));
    }
    match o.sequence() {
        KSequence::Explicit(terms) => {
            let depth = probe_depth.min(terms.len());
            if depth == 0 {
                return Err(Error::InvalidArgument("empty sequence".into()));
            }
            for n in 0..depth {
                o.k(n)?;
            }
            let exps = factor_big(&terms[depth - 1])?
                .into_iter()
                .map(|(p, e)| (p, Exponent::Finite(e)));
            Ok(Supernatural::new(exps)?.truncated(depth))
        }
        _ => {
            if o.divergence.is_empty() {
                return Err(Error::UndeclaredDivergence("every prime of the support".into()));
            }
            let mut last = BTreeMap::new();
            for n in 0..probe_depth {
                let mut rest = o.k(n)?;
                last.clear();
                for &p in o.divergence.keys() {
                    let e = strip_factor(&mut rest, p);
                    if e > 0 {
                        last.insert(p, e);
                    }
                }
                if !rest.is_one() {
                    return Err(Error::UndeclaredDivergence(format!(
                        "the cofactor {rest} of k_{n}"
                    )));
                }
            }
            let exps = o.divergence.iter().filter_map(|(&p, &diverges)| {
                if diverges {
                    Some((p, Exponent::Infinite))
                } else {
                    last.get(&p).map(|&e| (p, Exponent::Finite(e)))
                }
            });
            Supernatural::new(exps)
        }
    }
}

/// Isomorphism of odometers, decided by equality of supernatural numbers.
pub fn odometers_isomorphic(a: &Supernatural, b: &Supernatural) -> Result<bool> {
    if a.is_truncated() || b.is_truncated() {
        return Err(Error::TruncatedComparison);
    }
    Ok(a.exponents == b.exponents)
}

/// The first `d` coordinates `(alpha_0, ..., alpha_{d-1})` of a point of an
/// odometer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedPoint {
    coords: Vec<BigUint>,
}

impl TruncatedPoint {
    pub fn new(o: &OdometerSpec, coords: Vec<BigUint>) -> Result<Self> {
        let p = Self { coords };
        p.validate(o)?;
        Ok(p)
    }

    pub fn from_u64(o: &OdometerSpec, coords: &[u64]) -> Result<Self> {
        Self::new(o, coords.iter().map(|&c| BigUint::from(c)).collect())
    }

    /// The point whose coordinates are `[x]_{k_n}`.
    pub fn from_integer(o: &OdometerSpec, x: &BigUint, depth: usize) -> Result<Self> {
        let coords = (0..depth)
            .map(|n| Ok(x % o.k(n)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coords })
    }

    pub fn depth(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[BigUint] {
        &self.coords
    }

    fn validate(&self, o: &OdometerSpec) -> Result<()> {
        let mut prev: Option<(BigUint, &BigUint)> = None;
        for (n, a) in self.coords.iter().enumerate() {
            let k = o.k(n)?;
            if a >= &k {
                return Err(Error::IncoherentPoint(n));
            }
            if let Some((prev_k, prev_a)) = &prev {
                if &(a % prev_k) != *prev_a {
                    return Err(Error::IncoherentPoint(n));
                }
            }
            prev = Some((k, a));
        }
        Ok(())
    }
}

/// Coordinatewise `alpha_n -> [alpha_n + 1]_{k_n}`.
pub fn odometer_step(o: &OdometerSpec, p: &TruncatedPoint) -> Result<TruncatedPoint> {
    p.validate(o)?;
    let coords = p
        .coords
        .iter()
        .enumerate()
        .map(|(n, a)| Ok((a + 1u32) % o.k(n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(TruncatedPoint { coords })
}

/// The canonical factor onto `Z/kZ`: `[alpha_n]_k` for the least `n` with
/// `k | k_n`.
pub fn canonical_projection(o: &OdometerSpec, p: &TruncatedPoint, k: u64) -> Result<u64> {
    if k < 2 {
        return Err(Error::InvalidModulus(k));
    }
    p.validate(o)?;
    for (n, a) in p.coords.iter().enumerate() {
        if (o.k(n)? % k).is_zero() {
            return Ok(residue(a, k));
        }
    }
    Err(Error::ModulusNotInK(k))
}

pub(crate) fn is_prime(p: u64) -> bool {
    p >= 2 && factor_u64(p) == [(p, 1)]
}

/// Prime factorization by trial division.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn strip_factor(n: &mut BigUint, p: u64) -> u32 {
    let mut e = 0;
    loop {
        let (q, r) = n.div_rem(&BigUint::from(p));
        if !r.is_zero() {
            return e;
        }
        *n = q;
        e += 1;
    }
}

fn factor_big(n: &BigUint) -> Result<Vec<(u64, u32)>> {
    if let Some(small) = n.to_u64() {
        return Ok(factor_u64(small));
    }
    let mut rest = n.clone();
    let mut out = Vec::new();
    let mut d = 2u64;
    while d <= TRIAL_DIVISION_BOUND {
        let e = strip_factor(&mut rest, d);
        if e > 0 {
            out.push((d, e));
        }
        if rest.is_one() {
            return Ok(out);
        }
        d += if d == 2 { 1 } else { 2 };
    }
    match rest.to_u64() {
        Some(r) if (r as u128) < (TRIAL_DIVISION_BOUND as u128).pow(2) => {
            out.push((r, 1));
            Ok(out)
        }
        _ => Err(Error::FactorizationFailed(n.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sn(s: &str) -> Supernatural {
        s.parse().unwrap()
    }

    #[test]
    fn powers_classification() {
        assert_eq!(
            supernatural_of(&OdometerSpec::powers(2).unwrap(), 6).unwrap(),
            sn("2^inf")
        );
        assert_eq!(
            supernatural_of(&OdometerSpec::powers(6).unwrap(), 6).unwrap(),
            sn("2^inf,3^inf")
        );
    }

    #[test]
    fn explicit_is_truncated() {
        let o = OdometerSpec::new(KSequence::explicit(&[2, 4, 12]));
        let s = supernatural_of(&o, 10).unwrap();
        assert_eq!(s.to_string(), "2^2,3^1");
        assert_eq!(s.truncated_at(), Some(3));
        assert_eq!(
            odometers_isomorphic(&s, &sn("2^2,3")),
            Err(Error::TruncatedComparison)
        );
    }

    #[test]
    fn explicit_chain_checked() {
        let o = OdometerSpec::new(KSequence::explicit(&[2, 6, 9]));
        assert!(matches!(
            supernatural_of(&o, 3),
            Err(Error::NotDivisibilityChain { index: 1, .. })
        ));
    }

    #[test]
    fn formula_needs_annotations() {
        let bare = OdometerSpec::new(KSequence::Powers { base: 2 });
        assert!(matches!(
            supernatural_of(&bare, 4),
            Err(Error::UndeclaredDivergence(_))
        ));
        let partial = OdometerSpec::new(KSequence::Powers { base: 6 }).declare_prime(2, true);
        assert!(matches!(
            supernatural_of(&partial, 4),
            Err(Error::UndeclaredDivergence(_))
        ));
        let periodic = OdometerSpec::new(KSequence::Periodic {
            base: 12u32.into(),
            multipliers: vec![2u32.into()],
        })
        .declare_prime(2, true)
        .declare_prime(3, false);
        assert_eq!(supernatural_of(&periodic, 5).unwrap(), sn("2^inf,3^1"));
    }

    #[test]
    fn isomorphism() {
        let a = sn("2^inf");
        let b = sn("2^inf,3^inf");
        assert!(odometers_isomorphic(&a, &a).unwrap());
        assert!(!odometers_isomorphic(&a, &b).unwrap());
        let four = supernatural_of(&OdometerSpec::powers(4).unwrap(), 5).unwrap();
        assert!(odometers_isomorphic(&a, &four).unwrap());
    }

    #[test]
    fn parse_and_display() {
        let s = sn(" 3^2, 2^inf ");
        assert_eq!(s.to_string(), "2^inf,3^2");
        assert_eq!(sn("5").to_string(), "5^1");
        assert_eq!(sn("1").to_string(), "1");
        assert!("4^2".parse::<Supernatural>().is_err());
        assert!("2^x".parse::<Supernatural>().is_err());
        assert!("2,2".parse::<Supernatural>().is_err());
    }

    #[test]
    fn divisibility_and_ladder() {
        let s = sn("2^inf,3^2");
        assert!(s.divides(1));
        assert!(s.divides(2 * 2 * 2 * 2 * 9));
        assert!(!s.divides(27));
        assert!(!s.divides(5));
        assert_eq!(s.prime_power_ladder(20), vec![2, 3, 4, 8, 9, 16]);
        assert_eq!(
            Supernatural::lcm_truncated(&[4, 6, 8], 3).to_string(),
            "2^3,3^1"
        );
    }

    #[test]
    fn odometer_steps() {
        let o = OdometerSpec::new(KSequence::explicit(&[2, 4, 8]));
        let p = TruncatedPoint::from_u64(&o, &[1, 3, 7]).unwrap();
        assert_eq!(
            odometer_step(&o, &p).unwrap(),
            TruncatedPoint::from_u64(&o, &[0, 0, 0]).unwrap()
        );
        let p = TruncatedPoint::from_u64(&o, &[0, 2]).unwrap();
        assert_eq!(
            odometer_step(&o, &p).unwrap(),
            TruncatedPoint::from_u64(&o, &[1, 3]).unwrap()
        );
        let o36 = OdometerSpec::new(KSequence::explicit(&[3, 6]));
        let p = TruncatedPoint::from_u64(&o36, &[2, 2]).unwrap();
        assert_eq!(
            odometer_step(&o36, &p).unwrap().coords(),
            &[BigUint::from(0u32), BigUint::from(3u32)]
        );
        assert_eq!(
            TruncatedPoint::from_u64(&o, &[1, 2]),
            Err(Error::IncoherentPoint(1))
        );
        assert_eq!(
            TruncatedPoint::from_u64(&o, &[2]),
            Err(Error::IncoherentPoint(0))
        );
    }

    #[test]
    fn projections() {
        let o = OdometerSpec::new(KSequence::explicit(&[2, 4, 8]));
        let p = TruncatedPoint::from_u64(&o, &[1, 3, 7]).unwrap();
        assert_eq!(canonical_projection(&o, &p, 4).unwrap(), 3);
        assert_eq!(canonical_projection(&o, &p, 2).unwrap(), 1);
        assert_eq!(canonical_projection(&o, &p, 3), Err(Error::ModulusNotInK(3)));
        let o = OdometerSpec::new(KSequence::explicit(&[6, 12]));
        let p = TruncatedPoint::from_u64(&o, &[4, 10]).unwrap();
        assert_eq!(canonical_projection(&o, &p, 3).unwrap(), 1);
    }

    #[test]
    fn cyclic_system() {
        assert!(CyclicSystem::new(1).is_err());
        let z = CyclicSystem::new(5).unwrap();
        assert_eq!(z.step(4), 0);
        assert_eq!(z.class_of(&BigUint::from(17u32)), 2);
    }

    #[test]
    fn factorization() {
        assert_eq!(factor_u64(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factor_u64(97), vec![(97, 1)]);
        let big = num_traits::pow(BigUint::from(6u32), 40);
        assert_eq!(factor_big(&big).unwrap(), vec![(2, 40), (3, 40)]);
    }
}
