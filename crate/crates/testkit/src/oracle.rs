//! Reference computations written without the engine's code paths.
//!
//! Weights come from a hand transcription of the published table, one line
//! per dimension, `ordinal` followed by `l`/`m`/`h`. Two rows carry a second
//! annotation on the same ordinal (`d8`, `h5`); the first one counts.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TABLE_ANNOTATIONS: &str = "\
a: 1l 2m 3h 4h
b: 1h 2m 3m
c: 1h 2l 3h 4m
d: 1h 2m 3m 4l 5m 6h 7h 8h 8m 9m 10m 11h
e: 1h 2h 3h 4h 5m 6m 7h 8h 9h
f: 1h 2h 3h 4m 5m 6l 7h 8h 9m 10m 11h 12m 13m 14h 15h
g: 1h 2m 3h 4m 5h 6h 7l 8h 9l 10h 11m 12h 13h
h: 1m 2h 3h 4m 5h 5h 6m 7m
i: 1m 2h 3m 4h 5h 6l";

/// Sub-dimension id to multiplier, in table order.
pub fn annotated_weights() -> Vec<(String, u32)> {
    let mut out: Vec<(String, u32)> = Vec::new();
    for line in TABLE_ANNOTATIONS.lines() {
        let (dim, rest) = line.split_once(':').expect("dimension prefix");
        for tok in rest.split_whitespace() {
            let (ordinal, w) = tok.split_at(tok.len() - 1);
            let id = format!("{}{}", dim.trim(), ordinal);
            if out.iter().any(|(seen, _)| *seen == id) {
                continue;
            }
            let mult = match w {
                "l" => 1,
                "m" => 2,
                "h" => 3,
                other => panic!("bad annotation {other}"),
            };
            out.push((id, mult));
        }
    }
    out
}

/// Plain summation of weight times verdict.
pub fn naive_total(verdicts: &BTreeMap<String, bool>) -> u32 {
    let mut total = 0;
    for (id, w) in annotated_weights() {
        if verdicts.get(&id) == Some(&true) {
            total += w;
        }
    }
    total
}

pub fn naive_dimension_total(verdicts: &BTreeMap<String, bool>, dim: char) -> u32 {
    annotated_weights()
        .into_iter()
        .filter(|(id, _)| id.starts_with(dim))
        .filter(|(id, _)| verdicts.get(id) == Some(&true))
        .map(|(_, w)| w)
        .sum()
}

/// Per-dimension maxima by summing every weight in the dimension.
pub fn dimension_maxima() -> BTreeMap<char, u32> {
    let mut out = BTreeMap::new();
    for (id, w) in annotated_weights() {
        *out.entry(id.chars().next().unwrap()).or_insert(0) += w;
    }
    out
}

pub fn all_ids() -> Vec<String> {
    annotated_weights().into_iter().map(|(id, _)| id).collect()
}

/// Smallest k with k/n >= 0.7, found by counting up.
pub fn sampled_threshold(n: usize) -> usize {
    (0..=n).find(|k| 10 * k >= 7 * n).expect("k = n always qualifies")
}

/// A verdict vector whose weighted total is exactly `target`. Sub-dimensions
/// are visited in a seeded random order and taken greedily while they fit;
/// when greedy overshoots the remainder the search backtracks.
pub fn vector_with_total(target: u32, seed: u64) -> Option<BTreeMap<String, bool>> {
    let mut items = annotated_weights();
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut chosen = vec![false; items.len()];
    fn search(items: &[(String, u32)], i: usize, left: u32, chosen: &mut [bool]) -> bool {
        if left == 0 {
            return true;
        }
        if i == items.len() {
            return false;
        }
        let rest: u32 = items[i..].iter().map(|(_, w)| w).sum();
        if rest < left {
            return false;
        }
        if items[i].1 <= left {
            chosen[i] = true;
            if search(items, i + 1, left - items[i].1, chosen) {
                return true;
            }
            chosen[i] = false;
        }
        search(items, i + 1, left, chosen)
    }
    if !search(&items, 0, target, &mut chosen) {
        return None;
    }
    Some(items.into_iter().zip(chosen).map(|((id, _), c)| (id, c)).collect())
}

fn first_of_month(d: NaiveDate) -> NaiveDate {
    NaiveDate::from_ymd_opt(d.year(), d.month(), 1).unwrap()
}

fn months_back(d: NaiveDate, n: u32) -> NaiveDate {
    d.checked_sub_months(chrono::Months::new(n)).unwrap()
}

/// Earliest modification date that still keeps the promise of `term`
/// relative to `reference`. `None` means any date is accepted.
pub fn earliest_conforming(term: &str, reference: NaiveDate) -> Option<NaiveDate> {
    let monday = reference - Duration::days(reference.weekday().num_days_from_monday() as i64);
    let start = match term {
        "daily" | "continuous" => reference - Duration::days(1),
        "weekly" => monday - Duration::days(7),
        "biweekly" => {
            // fortnights are counted from Monday 2023-12-25
            let anchor = NaiveDate::from_ymd_opt(2023, 12, 25).unwrap();
            let fortnight = (monday - anchor).num_days().div_euclid(14);
            anchor + Duration::days(14 * (fortnight - 1))
        }
        "monthly" => months_back(first_of_month(reference), 1),
        "quarterly" => {
            let q_start = NaiveDate::from_ymd_opt(reference.year(), (reference.month0() / 3) * 3 + 1, 1).unwrap();
            months_back(q_start, 3)
        }
        "semiannual" => {
            let h_start = NaiveDate::from_ymd_opt(reference.year(), (reference.month0() / 6) * 6 + 1, 1).unwrap();
            months_back(h_start, 6)
        }
        "annual" => NaiveDate::from_ymd_opt(reference.year() - 1, 1, 1).unwrap(),
        "unknown" | "irregular" => return None,
        other => panic!("oracle has no rule for {other}"),
    };
    Some(start)
}
