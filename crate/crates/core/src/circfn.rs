//! Functions on the discrete circle: cyclic rotations, constant shifts, the
//! reverse-of-complement (RoC) operation, difference multisets per lag, and
//! the normal forms used to decide when two functions are the same up to
//! those operations.
//!
//! The difference tables are the exact combinatorial counterpart of the
//! sketch: two functions have equal sketches (for the odd-exponential map)
//! exactly when all their per-lag difference multisets agree. The routines
//! here are used both as public operations and as oracles for the sketch
//! invariance and injectivity tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the circle resolution for this module.
pub const MAX_M: usize = 1 << 20;

/// Absolute tolerance for comparing real-valued multisets.
pub const MULTISET_TOL: f64 = 1e-9;

/// Tolerance below which two values are considered tied (general-position
/// violations).
pub const TIE_TOL: f64 = 1e-12;

/// A real-valued function on the discrete circle with `m` points.
/// Indexing is cyclic: the value at index `i` is `values[i mod m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleFunction {
    pub m: usize,
    pub values: Vec<f64>,
}

impl CircleFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "circle function needs at least one value".into(),
            ));
        }
        if values.len() > MAX_M {
            return Err(Error::InvalidParameter(format!(
                "m = {} exceeds cap {}",
                values.len(),
                MAX_M
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "circle function values must be finite".into(),
            ));
        }
        Ok(Self {
            m: values.len(),
            values,
        })
    }

    /// Cyclic lookup; accepts any integer index.
    #[inline]
    pub fn get(&self, i: i64) -> f64 {
        self.values[i.rem_euclid(self.m as i64) as usize]
    }

    /// `result(i) = f(i - x)`, i.e. the function rotated right by `x`.
    pub fn rotate(&self, x: i64) -> Self {
        let m = self.m as i64;
        let values = (0..m).map(|i| self.get(i - x)).collect();
        Self { m: self.m, values }
    }

    /// `result(i) = f(i) + c`.
    pub fn shift(&self, c: f64) -> Self {
        Self {
            m: self.m,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Reverse-of-complement: `result(i) = c - f(-i)`.
    pub fn roc(&self, c: f64) -> Self {
        let values = (0..self.m as i64).map(|i| c - self.get(-i)).collect();
        Self { m: self.m, values }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when all values and all nonzero pairwise differences are
    /// distinct (up to [`TIE_TOL`]).
    pub fn is_general_position(&self) -> bool {
        general_position_report(self).is_general_position()
    }
}

/// Per-lag difference multisets `Δ(k) = { f(j) - f(j+k) : j }`, each stored
/// sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceTable {
    pub m: usize,
    pub table: Vec<Vec<f64>>,
}

pub fn difference_table(f: &CircleFunction) -> DifferenceTable {
    let m = f.m;
    let mut table = Vec::with_capacity(m);
    for k in 0..m as i64 {
        let mut row: Vec<f64> = (0..m as i64).map(|j| f.get(j) - f.get(j + k)).collect();
        row.sort_by(|a, b| a.total_cmp(b));
        table.push(row);
    }
    DifferenceTable { m, table }
}

/// Flags for the general-position (distinct values / distinct differences)
/// check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralPositionReport {
    pub distinct_values: bool,
    pub distinct_differences: bool,
}

impl GeneralPositionReport {
    pub fn is_general_position(&self) -> bool {
        self.distinct_values && self.distinct_differences
    }
}

pub fn general_position_report(f: &CircleFunction) -> GeneralPositionReport {
    let mut vals = f.values.clone();
    vals.sort_by(|a, b| a.total_cmp(b));
    let distinct_values = vals.windows(2).all(|w| (w[1] - w[0]).abs() > TIE_TOL);

    // All ordered pairwise differences f(j) - f(j'), j != j'.
    let m = f.m;
    let mut diffs = Vec::with_capacity(m * (m - 1));
    for j in 0..m {
        for j2 in 0..m {
            if j != j2 {
                diffs.push(f.values[j] - f.values[j2]);
            }
        }
    }
    diffs.sort_by(|a, b| a.total_cmp(b));
    let distinct_differences = diffs.windows(2).all(|w| (w[1] - w[0]).abs() > TIE_TOL);

    GeneralPositionReport {
        distinct_values,
        distinct_differences,
    }
}

/// True iff the sorted multisets `Δ_f(k)` and `Δ_g(k)` agree for every lag
/// `k`, within `tol` entrywise.
pub fn lag_homometric_with_tol(f: &CircleFunction, g: &CircleFunction, tol: f64) -> Result<bool> {
    if f.m != g.m {
        return Err(Error::LengthMismatch {
            left: f.m,
            right: g.m,
        });
    }
    let tf = difference_table(f);
    let tg = difference_table(g);
    Ok(tables_match(&tf, &tg, tol))
}

pub fn lag_homometric(f: &CircleFunction, g: &CircleFunction) -> Result<bool> {
    lag_homometric_with_tol(f, g, MULTISET_TOL)
}

pub(crate) fn tables_match(tf: &DifferenceTable, tg: &DifferenceTable, tol: f64) -> bool {
    tf.table
        .iter()
        .zip(tg.table.iter())
        .all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol))
}

/// Rotation + shift normalization: the minimum value becomes 0 and sits at
/// index 0. Ties on the minimum resolve to the smallest attaining index.
///
/// Returns `(canonical, rotation, offset)` with
/// `f = shift(rotate(canonical, rotation), offset)`.
pub fn canonical_form(f: &CircleFunction) -> (CircleFunction, i64, f64) {
    let mut j_min = 0usize;
    for (j, v) in f.values.iter().enumerate() {
        if *v < f.values[j_min] {
            j_min = j;
        }
    }
    let min = f.values[j_min];
    let values = (0..f.m as i64)
        .map(|j| f.get(j + j_min as i64) - min)
        .collect();
    (CircleFunction { m: f.m, values }, j_min as i64, min)
}

/// Canonical form with the RoC ambiguity fixed: among the canonical forms of
/// `f` and `RoC(f)`, picks the one whose second-largest value realizes the
/// second-largest global difference against the minimum.
///
/// Requires general position; ties among values or differences are rejected.
pub fn roc_canonical_form(f: &CircleFunction) -> Result<(CircleFunction, bool)> {
    if f.m < 3 {
        return Err(Error::InvalidParameter(
            "RoC-canonical form needs m >= 3".into(),
        ));
    }
    let report = general_position_report(f);
    if !report.distinct_values {
        return Err(Error::TiedValues(describe_tie(&f.values)));
    }
    if !report.distinct_differences {
        return Err(Error::TiedValues(
            "two pairwise differences coincide".into(),
        ));
    }
    let (canon, _, _) = canonical_form(f);
    if is_roc_canonical(&canon) {
        Ok((canon, false))
    } else {
        let (flipped, _, _) = canonical_form(&canon.roc(0.0));
        Ok((flipped, true))
    }
}

/// Predicate for the RoC-canonical form of a canonical general-position
/// function: the second-largest value equals the second-largest element of
/// the union of all difference multisets.
pub fn is_roc_canonical(canon: &CircleFunction) -> bool {
    let mut sorted = canon.values.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = canon.m;
    // Second-largest difference is either (second-largest value - min) or
    // (max - second-smallest value); min is 0 in canonical form.
    let from_min = sorted[m - 2] - sorted[0];
    let from_max = sorted[m - 1] - sorted[1];
    from_min > from_max
}

fn describe_tie(values: &[f64]) -> String {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    for w in idx.windows(2) {
        if (values[w[1]] - values[w[0]]).abs() <= TIE_TOL {
            return format!(
                "values at indices {} and {} are tied ({} vs {})",
                w[0], w[1], values[w[0]], values[w[1]]
            );
        }
    }
    "tie detected".into()
}

/// Decides whether `g = rotate(f, x) + c` or `g = rotate(RoC(f), x) + c`
/// for some `x` and `c`, by enumerating all `2m` candidates. `c` is pinned
/// by comparing first entries.
pub fn equivalent(f: &CircleFunction, g: &CircleFunction) -> Result<bool> {
    equivalent_with_tol(f, g, MULTISET_TOL)
}

pub fn equivalent_with_tol(f: &CircleFunction, g: &CircleFunction, tol: f64) -> Result<bool> {
    if f.m != g.m {
        return Err(Error::LengthMismatch {
            left: f.m,
            right: g.m,
        });
    }
    let roc = f.roc(0.0);
    for base in [f, &roc] {
        for x in 0..f.m as i64 {
            let cand = base.rotate(x);
            let c = g.values[0] - cand.values[0];
            if cand
                .values
                .iter()
                .zip(g.values.iter())
                .all(|(a, b)| (a + c - b).abs() <= tol)
            {
                return Ok(true);
            }
        }
    }
    Ok(false)
}
