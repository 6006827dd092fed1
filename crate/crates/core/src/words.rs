//! Symbolic rank-one words `v_0 = 0`, `v_{n+1} = v_n 1^{s_{n,1}} ... v_n 1^{s_{n,r_n}}`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{size_limit, Error, Result};
use crate::tower::CuttingSpacerSpec;

/// The finite word `v_n` over `{0, 1}`. Zeros mark base-copy levels, ones
/// mark spacers.
#[derive(Clone, PartialEq, Eq)]
pub struct RankOneWord {
    stage: usize,
    symbols: Vec<u8>,
}

impl RankOneWord {
    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn zeros(&self) -> usize {
        self.symbols.iter().filter(|&&b| b == 0).count()
    }
}

impl fmt::Display for RankOneWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self
            .symbols
            .iter()
            .map(|&b| if b == 0 { '0' } else { '1' })
            .collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for RankOneWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v_{}={}", self.stage, self)
    }
}

fn checked_len(spec: &CuttingSpacerSpec, n: usize, limit: usize) -> Result<usize> {
    let h = spec.height(n)?;
    h.to_usize()
        .filter(|&h| h <= limit)
        .ok_or_else(|| size_limit("word", h, limit))
}

/// Generates `v_n`, refusing when `h_n` exceeds `length_limit`.
pub fn generate_word(spec: &CuttingSpacerSpec, n: usize, length_limit: usize) -> Result<RankOneWord> {
    checked_len(spec, n, length_limit)?;
    let mut word = vec![0u8];
    for j in 0..n {
        let stage = spec.stage(j)?;
        let mut next = Vec::with_capacity(checked_len(spec, j + 1, length_limit)?);
        for column in 1..=stage.cuts() {
            next.extend_from_slice(&word);
            let run = stage.spacer(column).to_usize().expect("bounded by the word length");
            next.resize(next.len() + run, 1);
        }
        word = next;
    }
    Ok(RankOneWord {
        stage: n,
        symbols: word,
    })
}

/// Start positions of the canonical `v_m` blocks in `v_n`.
///
/// Each `v_{j+1}` is parsed left to right as copies of `v_j` separated by
/// maximal runs of ones (every copy starts with a zero), and positions are
/// composed down to stage `m`. Only the words themselves are consulted,
/// never the offset formula, so this is an independent check on
/// [`CuttingSpacerSpec::index_set`]. Substring occurrences of `v_m` that
/// straddle block boundaries are not counted.
pub fn canonical_occurrences(
    spec: &CuttingSpacerSpec,
    m: usize,
    n: usize,
    length_limit: usize,
) -> Result<Vec<BigUint>> {
    crate::tower::check_order(m, n)?;
    checked_len(spec, n, length_limit)?;
    let mut words = Vec::with_capacity(n + 1 - m);
    for j in m..=n {
        words.push(generate_word(spec, j, length_limit)?);
    }
    let mut positions = vec![0usize];
    for pair in words.windows(2) {
        let starts = parse_blocks(&pair[1].symbols, &pair[0].symbols)?;
        positions = starts
            .iter()
            .flat_map(|&s| positions.iter().map(move |&p| s + p))
            .collect();
    }
    Ok(positions.into_iter().map(BigUint::from).collect())
}

fn parse_blocks(word: &[u8], block: &[u8]) -> Result<Vec<usize>> {
    let mut starts = Vec::new();
    let mut cursor = 0;
    while cursor < word.len() {
        if word.get(cursor..cursor + block.len()) != Some(block) {
            return Err(Error::InvalidArgument(format!(
                "word does not decompose into blocks at position {cursor}"
            )));
        }
        starts.push(cursor);
        cursor += block.len();
        while cursor < word.len() && word[cursor] == 1 {
            cursor += 1;
        }
    }
    Ok(starts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{FormulaRule, Stage, DEFAULT_SIZE_LIMIT};

    fn chacon() -> CuttingSpacerSpec {
        CuttingSpacerSpec::periodic(vec![Stage::new(&[0, 1, 0]).unwrap()]).unwrap()
    }

    fn example() -> CuttingSpacerSpec {
        CuttingSpacerSpec::formula(FormulaRule::CentralDyadicGap)
    }

    fn big(xs: &[usize]) -> Vec<BigUint> {
        xs.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn words() {
        assert_eq!(generate_word(&chacon(), 2, 100).unwrap().to_string(), "0010001010010");
        assert_eq!(generate_word(&example(), 1, 100).unwrap().to_string(), "001100");
        assert_eq!(generate_word(&example(), 0, 1).unwrap().to_string(), "0");
    }

    #[test]
    fn word_limit() {
        assert!(matches!(
            generate_word(&chacon(), 5, 100),
            Err(Error::SizeLimitExceeded { .. })
        ));
    }

    #[test]
    fn occurrences() {
        assert_eq!(
            canonical_occurrences(&chacon(), 1, 2, 100).unwrap(),
            big(&[0, 4, 9])
        );
        assert_eq!(canonical_occurrences(&chacon(), 2, 2, 100).unwrap(), big(&[0]));
        assert_eq!(
            canonical_occurrences(&example(), 0, 1, 100).unwrap(),
            big(&[0, 1, 4, 5])
        );
    }

    #[test]
    fn noncanonical_substrings_are_ignored() {
        // v_2 = 0000 contains v_1 = 00 at 0, 1, 2 but only 0 and 2 are blocks
        let dyadic = CuttingSpacerSpec::periodic(vec![Stage::new(&[0, 0]).unwrap()]).unwrap();
        assert_eq!(generate_word(&dyadic, 2, 100).unwrap().to_string(), "0000");
        assert_eq!(canonical_occurrences(&dyadic, 1, 2, 100).unwrap(), big(&[0, 2]));
    }

    #[test]
    fn matches_index_sets() {
        for spec in [chacon(), example()] {
            for n in 0..5 {
                for m in 0..=n {
                    assert_eq!(
                        canonical_occurrences(&spec, m, n, DEFAULT_SIZE_LIMIT).unwrap(),
                        spec.index_set(m, n, DEFAULT_SIZE_LIMIT).unwrap().indices
                    );
                }
            }
        }
    }
}
