//! Small helpers for exact ratios.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

/// `num / den` as a reduced rational. Panics on a zero denominator.
pub fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `1 / 2^e`.
pub fn inverse_power_of_two(e: usize) -> BigRational {
    ratio(BigUint::one(), BigUint::one() << e)
}

/// Renders a rational as `p/q` (always with an explicit denominator).
pub fn to_fraction_string(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `p/q`, `p`, or a decimal like `0.25` into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let num: BigInt = digits.parse().ok()?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let q = BigRational::new(num, den);
        return Some(if negative { -q } else { q });
    }
    s.parse::<BigInt>().ok().map(BigRational::from_integer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        let quarter = ratio(1u32.into(), 4u32.into());
        assert_eq!(parse_rational("1/4"), Some(quarter.clone()));
        assert_eq!(parse_rational(" 2 / 8 "), Some(quarter.clone()));
        assert_eq!(parse_rational("0.25"), Some(quarter));
        assert_eq!(parse_rational("3"), Some(BigRational::from_integer(3.into())));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn render() {
        assert_eq!(to_fraction_string(&ratio(6u32.into(), 8u32.into())), "3/4");
        assert_eq!(to_fraction_string(&BigRational::zero()), "0/1");
    }
}
