//! Named constructions with their closed-form identities.

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::odometer::{supernatural_of, KSequence, OdometerSpec, Summability, Supernatural};
use crate::tower::{CuttingSpacerSpec, FormulaRule, Stage};

/// How many terms of a formula sequence are screened for `k_n = 2`.
const CUTTING_SCREEN_DEPTH: usize = 64;
/// Probe depth used to read off the target supernatural number.
const TARGET_PROBE_DEPTH: usize = 16;

/// A closed form the preset promises for its heights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HeightIdentity {
    /// `h_n = 2^n (2^{n+1} - 1)`.
    DyadicGap,
    /// `h_n = base^n`.
    Power { base: u64 },
    /// `h_{n+1} = k h_n + k`, so `k | h_n` for `n >= 1`.
    AffineMultiple { k: u64 },
    /// `h_{n+1} = k_n h_n`.
    Product(KSequence),
    None,
}

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub spec: CuttingSpacerSpec,
    /// The odometer the construction is meant to be compared against.
    pub target: Option<Supernatural>,
    pub identity: HeightIdentity,
    pub note: &'static str,
}

impl Preset {
    /// Checks the height identity at every stage up to `depth`.
    pub fn verify(&self, depth: usize) -> Result<()> {
        for n in 0..=depth {
            let h = self.spec.height(n)?;
            let expected = match &self.identity {
                HeightIdentity::DyadicGap => Some((BigUint::one() << n) * ((BigUint::one() << (n + 1)) - 1u32)),
                HeightIdentity::Power { base } => Some(num_traits::pow(BigUint::from(*base), n)),
                HeightIdentity::AffineMultiple { k } => {
                    if n >= 1 && &h % k != BigUint::ZERO {
                        return Err(self.mismatch(n, format!("{k} does not divide h_{n} = {h}")));
                    }
                    None
                }
                HeightIdentity::Product(seq) if n >= 1 => Some(seq.term(n - 1)? * self.spec.height(n - 1)?),
                HeightIdentity::Product(_) | HeightIdentity::None => None,
            };
            if let Some(e) = expected {
                if e != h {
                    return Err(self.mismatch(n, format!("expected {e}, found {h}")));
                }
            }
        }
        Ok(())
    }

    /// `h_n`, after verifying the identity up to `n`.
    pub fn checked_height(&self, n: usize) -> Result<BigUint> {
        self.verify(n)?;
        self.spec.height(n)
    }

    fn mismatch(&self, stage: usize, detail: String) -> Error {
        Error::IdentityMismatch {
            preset: self.name,
            stage,
            detail,
        }
    }
}

/// `r_n = k` with `k` trailing spacers when `spacers` is set, so that every
/// height from stage 1 on is a multiple of `k`; without spacers this is the
/// `k`-adic odometer.
pub fn cyclic_embedding(k: u64, spacers: bool) -> Result<Preset> {
    if k < 2 {
        return Err(Error::InvalidModulus(k));
    }
    if !spacers {
        return k_adic(k);
    }
    let stage = Stage::sparse(k, [(k, BigUint::from(k))])?;
    Ok(Preset {
        name: "cyclic_embedding",
        spec: CuttingSpacerSpec::periodic(vec![stage])?,
        target: None,
        identity: HeightIdentity::AffineMultiple { k },
        note: "heights and spacer runs are multiples of k from stage 1",
    })
}

fn k_adic(k: u64) -> Result<Preset> {
    let primes: Vec<u64> = crate::odometer::factor_u64(k).into_iter().map(|(p, _)| p).collect();
    Ok(Preset {
        name: if k == 2 { "dyadic" } else { "k_adic" },
        spec: CuttingSpacerSpec::periodic(vec![Stage::sparse(k, [])?])?,
        target: Some(Supernatural::infinite(&primes)?),
        identity: HeightIdentity::Power { base: k },
        note: "odometer written as a rank-one construction without spacers",
    })
}

/// Cutting into two with no spacers; `h_n = 2^n`.
pub fn dyadic() -> Preset {
    k_adic(2).expect("2 is a valid modulus")
}

/// `v_{n+1} = v_n v_n 1^{2^{n+1}} v_n v_n`: factors onto the dyadic odometer
/// without being isomorphic to it.
pub fn example51() -> Preset {
    Preset {
        name: "example51",
        spec: CuttingSpacerSpec::formula(FormulaRule::CentralDyadicGap),
        target: Some(Supernatural::infinite(&[2]).expect("2 is prime")),
        identity: HeightIdentity::DyadicGap,
        note: "dyadic factor, not isomorphic to any odometer",
    }
}

/// `r_n = 3`, one spacer over the middle column. Totally ergodic, so it
/// serves as a negative control for every cyclic-factor check.
pub fn chacon() -> Preset {
    Preset {
        name: "chacon",
        spec: CuttingSpacerSpec::periodic(vec![Stage::new(&[0, 1, 0]).expect("three columns")])
            .expect("nonempty period"),
        target: None,
        identity: HeightIdentity::None,
        note: "totally ergodic control; not one of the odometer constructions",
    }
}

/// `v_{n+1} = v_n^{k_n - 1} 1^{h_n}`, so `h_{n+1} = k_n h_n`. Requires a
/// declared convergent `sum 1/k_n` and `k_n >= 3`.
pub fn afp(odometer: &OdometerSpec) -> Result<Preset> {
    match odometer.summability() {
        None => return Err(Error::SummabilityUndeclared),
        Some(Summability::Diverges) => return Err(Error::ReciprocalSumDiverges),
        Some(Summability::Converges) => {}
    }
    let seq = odometer.sequence().clone();
    let screen = seq.len().unwrap_or(CUTTING_SCREEN_DEPTH);
    for n in 0..screen {
        let k = seq.term(n)?;
        if k < BigUint::from(3u32) {
            return Err(Error::CuttingTooSmall {
                index: n,
                value: k.to_string(),
            });
        }
    }
    let target = supernatural_of(odometer, screen.min(TARGET_PROBE_DEPTH))?;
    Ok(Preset {
        name: "afp",
        spec: CuttingSpacerSpec::formula(FormulaRule::TrailingTowerRun(seq.clone())),
        target: Some(target),
        identity: HeightIdentity::Product(seq),
        note: "isomorphic to the odometer of its partial products",
    })
}

/// The presets that need no parameters: `chacon`, `example51`, `dyadic`.
pub fn by_name(name: &str) -> Result<Preset> {
    match name {
        "chacon" => Ok(chacon()),
        "example51" => Ok(example51()),
        "dyadic" => Ok(dyadic()),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}
