use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default cap on `C(M, A)` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// A size-`A` subset of the digits `{0, ..., M-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Alphabet {
    base: u32,
    digits: Vec<u32>,
}

impl Alphabet {
    /// Validates that `digits` is non-empty, strictly increasing and below `base`.
    pub fn new(base: u32, digits: Vec<u32>) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidParameter(format!(
                "alphabet base must be at least 2, got {base}"
            )));
        }
        if digits.is_empty() {
            return Err(Error::InvalidParameter("alphabet must be non-empty".into()));
        }
        if digits.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "alphabet digits must be strictly increasing: {digits:?}"
            )));
        }
        if let Some(&d) = digits.last().filter(|&&d| d >= base) {
            return Err(Error::InvalidParameter(format!(
                "digit {d} out of range for base {base}"
            )));
        }
        Ok(Alphabet { base, digits })
    }

    pub fn full(base: u32) -> Result<Self> {
        Alphabet::new(base, (0..base).collect())
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn card(&self) -> u32 {
        self.digits.len() as u32
    }

    pub fn is_full(&self) -> bool {
        self.card() == self.base
    }

    pub fn contains(&self, digit: u32) -> bool {
        self.digits.binary_search(&digit).is_ok()
    }

    /// Cardinality of the symmetric difference, the metric on alphabets.
    pub fn distance(&self, other: &Alphabet) -> usize {
        let (a, b) = (&self.digits, &other.digits);
        let (mut i, mut j, mut common) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    common += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        a.len() + b.len() - 2 * common
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "}}")
    }
}

fn check_card(base: u32, card: u32) -> Result<()> {
    if base < 2 {
        return Err(Error::InvalidParameter(format!(
            "base must be at least 2, got {base}"
        )));
    }
    if card < 1 || card > base {
        return Err(Error::InvalidParameter(format!(
            "alphabet size must lie in [1, {base}], got {card}"
        )));
    }
    Ok(())
}

/// Draws a uniformly distributed size-`card` subset of `{0, ..., base-1}`.
///
/// Partial Fisher-Yates shuffle; only the touched positions are stored, so the
/// cost is `O(card)` regardless of `base`.
pub fn sample_alphabet<R: Rng + ?Sized>(base: u32, card: u32, rng: &mut R) -> Result<Alphabet> {
    check_card(base, card)?;
    let mut swapped: HashMap<u32, u32> = HashMap::with_capacity(card as usize * 2);
    let mut digits = Vec::with_capacity(card as usize);
    for i in 0..card {
        let j = rng.gen_range(i..base);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, at_i);
        digits.push(at_j);
    }
    digits.sort_unstable();
    Ok(Alphabet { base, digits })
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: u32, k: u32) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Every size-`card` alphabet in lexicographic order, capped at
/// [`DEFAULT_ENUMERATION_CAP`] alphabets.
pub fn enumerate_alphabets(base: u32, card: u32) -> Result<Combinations> {
    enumerate_alphabets_capped(base, card, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_alphabets_capped(base: u32, card: u32, cap: u128) -> Result<Combinations> {
    check_card(base, card)?;
    let count = binomial(base, card);
    match count {
        Some(c) if c <= cap => Ok(Combinations {
            base,
            next: Some((0..card).collect()),
            remaining: c as usize,
        }),
        _ => Err(Error::resource(
            "C(M, A)",
            count.map_or_else(|| "overflow".to_string(), |c| c.to_string()),
            cap,
        )),
    }
}

/// Iterator over combinations in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    base: u32,
    next: Option<Vec<u32>>,
    remaining: usize,
}

impl Iterator for Combinations {
    type Item = Alphabet;

    fn next(&mut self) -> Option<Alphabet> {
        let current = self.next.take()?;
        let k = current.len();
        let mut succ = current.clone();
        // rightmost position that can still be incremented
        let pos = (0..k).rev().find(|&i| succ[i] < self.base - (k - i) as u32);
        if let Some(i) = pos {
            succ[i] += 1;
            for p in i + 1..k {
                succ[p] = succ[p - 1] + 1;
            }
            self.next = Some(succ);
        }
        self.remaining = self.remaining.saturating_sub(1);
        Some(Alphabet {
            base: self.base,
            digits: current,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for Combinations {}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alpha(base: u32, d: &[u32]) -> Alphabet {
        Alphabet::new(base, d.to_vec()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(Alphabet::new(3, vec![0, 2]).is_ok());
        assert!(Alphabet::new(3, vec![2, 0]).is_err());
        assert!(Alphabet::new(3, vec![0, 0]).is_err());
        assert!(Alphabet::new(3, vec![3]).is_err());
        assert!(Alphabet::new(3, vec![]).is_err());
        assert!(Alphabet::new(1, vec![0]).is_err());
    }

    #[test]
    fn sample_rejects_bad_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_alphabet(3, 4, &mut rng).is_err());
        assert!(sample_alphabet(3, 0, &mut rng).is_err());
    }

    #[test]
    fn full_sample_is_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(sample_alphabet(3, 3, &mut rng).unwrap(), alpha(3, &[0, 1, 2]));
        }
    }

    #[test]
    fn coin_flip_alphabet_is_fair() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| sample_alphabet(2, 1, &mut rng).unwrap().digits() == [0])
            .count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.01, "freq {freq}");
    }

    #[test]
    fn six_choose_three_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000u64;
        let mut counts: HashMap<Alphabet, u64> = HashMap::new();
        for _ in 0..n {
            *counts.entry(sample_alphabet(6, 3, &mut rng).unwrap()).or_default() += 1;
        }
        assert_eq!(counts.len(), 20);
        let p = 1.0 / 20.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for (a, c) in counts {
            let f = c as f64 / n as f64;
            assert!((f - p).abs() <= 3.0 * sigma + 1e-12, "{a}: {f}");
        }
    }

    #[test]
    fn enumeration_small_cases() {
        let all: Vec<_> = enumerate_alphabets(3, 2).unwrap().collect();
        assert_eq!(all, vec![alpha(3, &[0, 1]), alpha(3, &[0, 2]), alpha(3, &[1, 2])]);
        assert_eq!(enumerate_alphabets(6, 3).unwrap().count(), 20);
        let full: Vec<_> = enumerate_alphabets(4, 4).unwrap().collect();
        assert_eq!(full, vec![alpha(4, &[0, 1, 2, 3])]);
    }

    #[test]
    fn enumeration_cap() {
        assert!(matches!(
            enumerate_alphabets_capped(10, 5, 100),
            Err(Error::Resource { .. })
        ));
        assert!(enumerate_alphabets(4096, 64).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 3), Some(20));
        assert_eq!(binomial(8, 3), Some(56));
        assert_eq!(binomial(5, 0), Some(1));
        assert_eq!(binomial(3, 5), Some(0));
    }

    #[test]
    fn distance_is_symmetric_difference() {
        assert_eq!(alpha(3, &[0, 1]).distance(&alpha(3, &[0, 2])), 2);
        assert_eq!(alpha(5, &[0, 1, 2]).distance(&alpha(5, &[0, 1, 2])), 0);
        assert_eq!(alpha(5, &[0, 1]).distance(&alpha(5, &[3, 4])), 4);
    }

    proptest::proptest! {
        #[test]
        fn enumeration_is_sorted_and_distinct(m in 2u32..9, a_frac in 0.0f64..1.0) {
            let a = 1 + ((m - 1) as f64 * a_frac) as u32;
            let all: Vec<_> = enumerate_alphabets(m, a).unwrap().collect();
            proptest::prop_assert_eq!(all.len() as u128, binomial(m, a).unwrap());
            proptest::prop_assert!(all.windows(2).all(|w| w[0].digits() < w[1].digits()));
        }
    }
}
