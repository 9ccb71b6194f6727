//! Machine verification, at small `m`, that per-lag difference-multiset
//! equality coincides with equivalence under rotation, shift, and RoC.
//!
//! Two modes: exhaustive over all permutation pairs (exact integer
//! arithmetic), and randomized over general-position real-valued pairs with
//! constructed equivalent partners mixed in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circfn::{self, CircleFunction};
use crate::error::{Error, Result};

pub const MAX_EXHAUSTIVE_M: usize = 8;
pub const MAX_RANDOM_M: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Permutations,
    RandomGeneralPosition,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counterexample {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub lag_homometric: bool,
    pub equivalent: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub m: usize,
    pub family: Family,
    pub pairs_tested: u64,
    pub counterexamples: u64,
    pub first_counterexample: Option<Counterexample>,
}

impl InjectivityReport {
    pub fn passed(&self) -> bool {
        self.counterexamples == 0
    }
}

/// Checks `lag_homometric(f, g) ⟺ equivalent(f, g)` over the requested
/// family. Any pair violating the equivalence is returned verbatim.
pub fn verify_injectivity(
    m: usize,
    family: Family,
    trials: u64,
    seed: u64,
) -> Result<InjectivityReport> {
    match family {
        Family::Permutations => verify_permutations(m),
        Family::RandomGeneralPosition => verify_random(m, trials, seed),
    }
}

// ---------------------------------------------------------------------------
// Exhaustive permutation mode (exact integer arithmetic)
// ---------------------------------------------------------------------------

fn verify_permutations(m: usize) -> Result<InjectivityReport> {
    if !(2..=MAX_EXHAUSTIVE_M).contains(&m) {
        return Err(Error::InvalidParameter(format!(
            "exhaustive permutation mode supports 2 <= m <= {MAX_EXHAUSTIVE_M}, got {m}"
        )));
    }
    let perms = all_permutations(m);
    // Precompute per permutation: sorted difference tables (the exact
    // lag-homometry key) and the equivalence-class key found by enumerating
    // all 2m rotate/RoC candidates with the shift normalized away.
    let tables: Vec<Vec<i64>> = perms.par_iter().map(|p| diff_table_flat(p)).collect();
    let class_keys: Vec<Vec<i64>> = perms.par_iter().map(|p| class_key(p)).collect();

    let n = perms.len();
    let results: Vec<(u64, u64, Option<Counterexample>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut pairs = 0u64;
            let mut bad = 0u64;
            let mut first = None;
            for j in i..n {
                pairs += 1;
                let hom = tables[i] == tables[j];
                let equ = class_keys[i] == class_keys[j];
                if hom != equ {
                    bad += 1;
                    if first.is_none() {
                        first = Some(Counterexample {
                            f: perms[i].iter().map(|&v| v as f64).collect(),
                            g: perms[j].iter().map(|&v| v as f64).collect(),
                            lag_homometric: hom,
                            equivalent: equ,
                        });
                    }
                }
            }
            (pairs, bad, first)
        })
        .collect();

    let mut report = InjectivityReport {
        m,
        family: Family::Permutations,
        pairs_tested: 0,
        counterexamples: 0,
        first_counterexample: None,
    };
    for (pairs, bad, first) in results {
        report.pairs_tested += pairs;
        report.counterexamples += bad;
        if report.first_counterexample.is_none() {
            report.first_counterexample = first;
        }
    }
    Ok(report)
}

fn all_permutations(m: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur: Vec<i64> = (1..=m as i64).collect();
    heap_permute(&mut cur, m, &mut out);
    out
}

fn heap_permute(arr: &mut Vec<i64>, k: usize, out: &mut Vec<Vec<i64>>) {
    if k == 1 {
        out.push(arr.clone());
        return;
    }
    for i in 0..k {
        heap_permute(arr, k - 1, out);
        if k.is_multiple_of(2) {
            arr.swap(i, k - 1);
        } else {
            arr.swap(0, k - 1);
        }
    }
}

/// All per-lag difference multisets, each sorted, flattened lag-major.
fn diff_table_flat(f: &[i64]) -> Vec<i64> {
    let m = f.len();
    let mut out = Vec::with_capacity(m * m);
    for k in 0..m {
        let mut row: Vec<i64> = (0..m).map(|j| f[j] - f[(j + k) % m]).collect();
        row.sort_unstable();
        out.extend(row);
    }
    out
}

/// Lexicographically smallest member of { rotate(f, x) + c, rotate(RoC(f), x) + c }
/// with the free shift fixed by forcing the first entry to 0. Two functions
/// are equivalent exactly when their keys agree.
fn class_key(f: &[i64]) -> Vec<i64> {
    let m = f.len();
    let roc: Vec<i64> = (0..m).map(|i| -f[(m - i) % m]).collect();
    let mut best: Option<Vec<i64>> = None;
    for base in [f, roc.as_slice()] {
        for x in 0..m {
            // rotate(base, x)(i) = base(i - x)
            let cand: Vec<i64> = (0..m)
                .map(|i| base[(i + m - x) % m] - base[(m - x) % m])
                .collect();
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    best.unwrap()
}

// ---------------------------------------------------------------------------
// Randomized general-position mode
// ---------------------------------------------------------------------------

fn verify_random(m: usize, trials: u64, seed: u64) -> Result<InjectivityReport> {
    if !(3..=MAX_RANDOM_M).contains(&m) {
        return Err(Error::InvalidParameter(format!(
            "random mode supports 3 <= m <= {MAX_RANDOM_M}, got {m}"
        )));
    }
    const SHARD: u64 = 256;
    let shards: Vec<(u64, u64)> = (0..trials.div_ceil(SHARD))
        .map(|s| (s, (trials - s * SHARD).min(SHARD)))
        .collect();

    let results: Vec<(u64, u64, Option<Counterexample>)> = shards
        .into_par_iter()
        .map(|(shard, count)| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ shard.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut pairs = 0u64;
            let mut bad = 0u64;
            let mut first: Option<Counterexample> = None;
            let record = |f: &CircleFunction,
                          g: &CircleFunction,
                          hom: bool,
                          equ: bool,
                          pairs: &mut u64,
                          bad: &mut u64,
                          first: &mut Option<Counterexample>| {
                *pairs += 1;
                if hom != equ {
                    *bad += 1;
                    if first.is_none() {
                        *first = Some(Counterexample {
                            f: f.values.clone(),
                            g: g.values.clone(),
                            lag_homometric: hom,
                            equivalent: equ,
                        });
                    }
                }
            };
            for _ in 0..count {
                let f = random_general_position(m, &mut rng);
                let g = random_general_position(m, &mut rng);
                let hom = circfn::lag_homometric(&f, &g).unwrap();
                let equ = circfn::equivalent(&f, &g).unwrap();
                record(&f, &g, hom, equ, &mut pairs, &mut bad, &mut first);

                // constructed member of the equivalence class
                let x = rng.gen_range(0..m as i64);
                let c = rng.gen_range(-2.0..2.0);
                let h = if rng.gen_bool(0.5) {
                    f.roc(0.0).rotate(x).shift(c)
                } else {
                    f.rotate(x).shift(c)
                };
                let hom = circfn::lag_homometric(&f, &h).unwrap();
                let equ = circfn::equivalent(&f, &h).unwrap();
                record(&f, &h, hom, equ, &mut pairs, &mut bad, &mut first);
            }
            (pairs, bad, first)
        })
        .collect();

    let mut report = InjectivityReport {
        m,
        family: Family::RandomGeneralPosition,
        pairs_tested: 0,
        counterexamples: 0,
        first_counterexample: None,
    };
    for (pairs, bad, first) in results {
        report.pairs_tested += pairs;
        report.counterexamples += bad;
        if report.first_counterexample.is_none() {
            report.first_counterexample = first;
        }
    }
    Ok(report)
}

pub fn random_general_position(m: usize, rng: &mut impl Rng) -> CircleFunction {
    loop {
        let values: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let f = CircleFunction::new(values).unwrap();
        if f.is_general_position() {
            return f;
        }
    }
}
