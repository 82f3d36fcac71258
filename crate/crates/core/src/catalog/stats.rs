//! Category distributions and inter-rater agreement.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

use super::{Catalog, Category, Side};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistributionRow {
    pub category: Category,
    pub count: usize,
    pub percent: u32,
}

/// `round(100 * count / n)` with halves rounded up, in exact integer arithmetic.
pub fn percent_round_half_up(count: usize, n: usize) -> u32 {
    if n == 0 {
        return 0;
    }
    ((200 * count + n) / (2 * n)) as u32
}

/// Category counts over a side's rule population, largest first.
pub fn category_distribution(catalog: &Catalog, side: Side) -> Vec<DistributionRow> {
    let rules = catalog.side_rules(side);
    let n = rules.len();
    let mut counts: BTreeMap<Category, usize> = BTreeMap::new();
    for r in &rules {
        *counts.entry(r.category).or_insert(0) += 1;
    }
    let mut rows: Vec<DistributionRow> = counts
        .into_iter()
        .map(|(category, count)| DistributionRow {
            category,
            count,
            percent: percent_round_half_up(count, n),
        })
        .collect();
    rows.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.category.name().cmp(b.category.name()))
    });
    rows
}

/// Caveat printed under a side's distribution, if any.
pub fn distribution_note(side: Side) -> Option<&'static str> {
    match side {
        Side::Keras => Some(
            "note: the published Keras distribution is captioned N=5, but its shares (33/33/17/17) imply 6 rules; \
             counts here use the 6-rule Keras set (TK-01, TK-03, TK-13, TK-14, TK-15, TK-16).",
        ),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum KappaError {
    #[error("label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("label lists are empty")]
    EmptyInput,
}

fn check<T>(a: &[T], b: &[T]) -> Result<(), KappaError> {
    if a.len() != b.len() {
        return Err(KappaError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(KappaError::EmptyInput);
    }
    Ok(())
}

/// Fraction of positions where both raters chose the same label.
pub fn percent_agreement<T: PartialEq>(a: &[T], b: &[T]) -> Result<f64, KappaError> {
    check(a, b)?;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(agree as f64 / a.len() as f64)
}

/// Cohen's kappa for two raters over the same items.
pub fn cohen_kappa<T: Eq + Hash + Ord>(a: &[T], b: &[T]) -> Result<f64, KappaError> {
    let p_o = percent_agreement(a, b)?;
    if p_o == 1.0 {
        return Ok(1.0);
    }
    let n = a.len() as f64;
    let mut ma: BTreeMap<&T, usize> = BTreeMap::new();
    let mut mb: BTreeMap<&T, usize> = BTreeMap::new();
    for x in a {
        *ma.entry(x).or_insert(0) += 1;
    }
    for y in b {
        *mb.entry(y).or_insert(0) += 1;
    }
    let labels: BTreeSet<&T> = ma.keys().chain(mb.keys()).copied().collect();
    let p_e: f64 = labels
        .iter()
        .map(|l| {
            let pa = *ma.get(l).unwrap_or(&0) as f64 / n;
            let pb = *mb.get(l).unwrap_or(&0) as f64 / n;
            pa * pb
        })
        .sum();
    Ok(((p_o - p_e) / (1.0 - p_e)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_catalog;

    #[test]
    fn round_half_up_matches_float_definition() {
        // correctly rounded division keeps exact halves exact, so floor(x + 0.5) is a sound oracle
        for n in 1..60 {
            for c in 0..=n {
                let expected = (100.0 * c as f64 / n as f64 + 0.5).floor() as u32;
                assert_eq!(percent_round_half_up(c, n), expected, "{c}/{n}");
            }
        }
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(cohen_kappa(&["X", "X", "Y", "Y"], &["X", "Y", "X", "Y"]).unwrap(), 0.0);
        assert_eq!(cohen_kappa(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(cohen_kappa(&[1, 1], &[1, 1]).unwrap(), 1.0);
        assert_eq!(cohen_kappa::<u8>(&[], &[]), Err(KappaError::EmptyInput));
        assert_eq!(cohen_kappa(&[1], &[1, 2]), Err(KappaError::LengthMismatch(1, 2)));
    }

    #[test]
    fn distribution_is_sorted_and_sums_to_side_size() {
        let c = load_catalog();
        for side in Side::ALL {
            let rows = category_distribution(c, side);
            let total: usize = rows.iter().map(|r| r.count).sum();
            assert_eq!(total, c.side_rules(side).len());
            assert!(rows.windows(2).all(|w| w[0].count >= w[1].count));
        }
    }
}
