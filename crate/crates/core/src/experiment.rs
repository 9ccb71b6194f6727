//! End-to-end experiment runners: rotation-clustering accuracy, nearest-
//! neighbor retrieval of rotated copies, and sketch convergence order.
//!
//! All randomness flows from a single config seed through splitmix-derived
//! per-(m, trial) streams, so results are deterministic regardless of the
//! parallel schedule.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, SketchIndex};
use crate::error::{Error, Result};
use crate::geometry::{
    self, rotate_outline, star_discretize_with, GeneratorParams, RadialProfile, StandardizedOutline,
};
use crate::sketch::{sketch_auto, PhiSpec, Sketch};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub m_values: Vec<usize>,
    pub n_originals: usize,
    pub n_copies: usize,
    pub seed: u64,
    pub phi: PhiSpec,
    pub trials: usize,
    /// Restrict rotations to multiples of 2π/m (applied before
    /// discretization they commute with it exactly). Default: continuous
    /// angles, the harder regime.
    pub snap_rotations: bool,
    /// Extra rays per wedge during discretization.
    pub extra_rays: usize,
    pub generator: GeneratorParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m_values: vec![16, 64, 256, 1024],
            n_originals: 10,
            n_copies: 9,
            seed: 0,
            phi: PhiSpec::default(),
            trials: 6,
            snap_rotations: false,
            extra_rays: 0,
            generator: GeneratorParams::default(),
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() {
            return Err(Error::InvalidParameter("m_values must be nonempty".into()));
        }
        if let Some(&m) = self.m_values.iter().find(|&&m| m < 8) {
            return Err(Error::InvalidParameter(format!(
                "every m must be at least 8, got {m}"
            )));
        }
        if self.n_originals == 0 || self.trials == 0 {
            return Err(Error::InvalidParameter(
                "n_originals and trials must be positive".into(),
            ));
        }
        if self.n_copies == 0 {
            return Err(Error::InvalidParameter(
                "n_copies must be at least 1: accuracy is undefined without rotated copies".into(),
            ));
        }
        Ok(())
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_seed(seed: u64, m: usize, trial: usize) -> u64 {
    splitmix(splitmix(seed ^ (m as u64)) ^ (trial as u64).wrapping_mul(0x517C_C1B7_2722_0A95))
}

/// Minimum rotation-minimized sup separation enforced between the radial
/// profiles of distinct originals within a trial (resampled otherwise).
const MIN_PROFILE_SEPARATION: f64 = 0.05;

fn profile_r_star_sep(a: &RadialProfile, b: &RadialProfile, samples: usize) -> f64 {
    let eval = |p: &RadialProfile| -> Vec<f64> {
        (0..samples)
            .map(|i| p.eval(i as f64 * TAU / samples as f64))
            .collect()
    };
    let fa = eval(a);
    let fb = eval(b);
    let mut best = f64::INFINITY;
    for x in 0..samples {
        let mut d = 0.0f64;
        for j in 0..samples {
            d = d.max((fa[j] - fb[(j + x) % samples]).abs());
        }
        best = best.min(d);
    }
    best
}

/// Draw `n` mutually separated synthetic shapes from one RNG stream.
fn draw_originals(
    params: &GeneratorParams,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(StandardizedOutline, RadialProfile)>> {
    let mut out: Vec<(StandardizedOutline, RadialProfile)> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 200 * n {
            return Err(Error::InvalidParameter(
                "could not draw mutually separated shapes; widen the generator amplitudes".into(),
            ));
        }
        let candidate = geometry::synthesize_star_shape(params, rng.gen())?;
        let separated = out
            .iter()
            .all(|(_, p)| profile_r_star_sep(p, &candidate.1, 128) >= MIN_PROFILE_SEPARATION);
        if separated {
            out.push(candidate);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ClusterRow {
    pub m: usize,
    pub trial: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ClusterSummary {
    pub m: usize,
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterReport {
    pub rows: Vec<ClusterRow>,
    pub summary: Vec<ClusterSummary>,
}

/// One clustering trial: originals plus rotated copies, discretized,
/// sketched, k-means with k = n_originals, scored by copy co-clustering.
fn cluster_trial(cfg: &ExperimentConfig, m: usize, trial: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, m, trial));
    let originals = draw_originals(&cfg.generator, cfg.n_originals, &mut rng)?;

    let mut index = SketchIndex::new(m, cfg.phi);
    let mut provenance: BTreeMap<String, String> = BTreeMap::new();
    for (o, (outline, _)) in originals.iter().enumerate() {
        let oid = format!("orig{o:03}");
        let f = star_discretize_with(outline, m, cfg.extra_rays)?;
        index.insert(oid.clone(), sketch_auto(&f.to_circle_fn(), cfg.phi)?)?;
        for c in 0..cfg.n_copies {
            let beta = if cfg.snap_rotations {
                rng.gen_range(0..m) as f64 * TAU / m as f64
            } else {
                rng.gen_range(0.0..TAU)
            };
            let g = star_discretize_with(&rotate_outline(outline, beta), m, cfg.extra_rays)?;
            let cid = format!("copy{o:03}_{c:02}");
            index.insert(cid.clone(), sketch_auto(&g.to_circle_fn(), cfg.phi)?)?;
            provenance.insert(cid, oid.clone());
        }
    }

    let km_seed = rng.gen();
    let result = analysis::kmeans(&index, cfg.n_originals, km_seed, 300)?;
    analysis::rotation_cluster_accuracy(&result, &provenance)
}

pub fn run_cluster_experiment(cfg: &ExperimentConfig) -> Result<ClusterReport> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = cfg
        .m_values
        .iter()
        .flat_map(|&m| (0..cfg.trials).map(move |t| (m, t)))
        .collect();
    let mut rows: Vec<ClusterRow> = cells
        .into_par_iter()
        .map(|(m, trial)| {
            cluster_trial(cfg, m, trial).map(|accuracy| ClusterRow { m, trial, accuracy })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| (r.m, r.trial));

    let mut summary = Vec::new();
    for &m in &cfg.m_values {
        let accs: Vec<f64> = rows
            .iter()
            .filter(|r| r.m == m)
            .map(|r| r.accuracy)
            .collect();
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / accs.len() as f64;
        summary.push(ClusterSummary {
            m,
            mean,
            stddev: var.sqrt(),
        });
    }
    Ok(ClusterReport { rows, summary })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnReport {
    pub m: usize,
    pub queries: usize,
    pub rank1_hits: usize,
    /// Per-query (query id, retrieved id, distance) for the top hit.
    pub top_hits: Vec<(String, String, f64)>,
}

/// Index `n_originals` shapes at the first configured m; query a
/// continuously rotated copy of each and count rank-1 retrievals of the
/// shape it was rotated from.
pub fn run_knn_experiment(cfg: &ExperimentConfig) -> Result<KnnReport> {
    cfg.validate()?;
    let m = cfg.m_values[0];
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, m, usize::MAX >> 1));
    let originals = draw_originals(&cfg.generator, cfg.n_originals, &mut rng)?;

    let mut index = SketchIndex::new(m, cfg.phi);
    for (o, (outline, _)) in originals.iter().enumerate() {
        let f = star_discretize_with(outline, m, cfg.extra_rays)?;
        index.insert(
            format!("shape{o:03}"),
            sketch_auto(&f.to_circle_fn(), cfg.phi)?,
        )?;
    }

    let mut hits = 0usize;
    let mut top_hits = Vec::with_capacity(originals.len());
    for (o, (outline, _)) in originals.iter().enumerate() {
        let beta = if cfg.snap_rotations {
            rng.gen_range(0..m) as f64 * TAU / m as f64
        } else {
            rng.gen_range(0.0..TAU)
        };
        let g = star_discretize_with(&rotate_outline(outline, beta), m, cfg.extra_rays)?;
        let query = sketch_auto(&g.to_circle_fn(), cfg.phi)?;
        let ranked = analysis::knn(&index, &query, 1)?;
        let expect = format!("shape{o:03}");
        if ranked[0].0 == expect {
            hits += 1;
        }
        top_hits.push((expect, ranked[0].0.clone(), ranked[0].1));
    }
    Ok(KnnReport {
        m,
        queries: originals.len(),
        rank1_hits: hits,
        top_hits,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub m: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub reference_m: usize,
    /// Fitted empirical convergence order (negated log-log slope of the
    /// deviation against m); None when every deviation is exactly zero.
    pub order: Option<f64>,
}

/// Sup deviation, at matched lag angles, between the sketch of `profile`
/// discretized at each m and a reference at 8× the largest m. Every m must
/// divide the reference resolution.
pub fn run_convergence(
    profile: &RadialProfile,
    m_values: &[usize],
    phi: &PhiSpec,
) -> Result<ConvergenceReport> {
    if m_values.len() < 3 {
        return Err(Error::InvalidParameter(
            "convergence fit needs at least 3 m values".into(),
        ));
    }
    let max_m = *m_values.iter().max().unwrap();
    let reference_m = 8 * max_m;
    for &m in m_values {
        if m < 8 {
            return Err(Error::InvalidParameter(format!(
                "every m must be at least 8, got {m}"
            )));
        }
        if !reference_m.is_multiple_of(m) {
            return Err(Error::InvalidParameter(format!(
                "m = {m} does not divide the reference resolution {reference_m}"
            )));
        }
    }

    let reference = sketch_of_profile(profile, reference_m, phi)?;
    let mut rows = Vec::with_capacity(m_values.len());
    for &m in m_values {
        let v = sketch_of_profile(profile, m, phi)?;
        let stride = reference_m / m;
        let dev = (0..m)
            .map(|k| (v.values[k] - reference.values[k * stride]).abs())
            .fold(0.0, f64::max);
        rows.push(ConvergenceRow { m, deviation: dev });
    }

    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.deviation > 0.0)
        .map(|r| ((r.m as f64).ln(), r.deviation.ln()))
        .collect();
    let order = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        Some(-(n * sxy - sx * sy) / (n * sxx - sx * sx))
    } else {
        None
    };
    Ok(ConvergenceReport {
        rows,
        reference_m,
        order,
    })
}

fn sketch_of_profile(profile: &RadialProfile, m: usize, phi: &PhiSpec) -> Result<Sketch> {
    sketch_auto(&profile.discretize(m)?.to_circle_fn(), *phi)
}

/// The default profile used by the convergence experiment: C² but not C³,
/// so the midpoint-rule error is visible instead of collapsing spectrally.
pub fn convergence_profile() -> RadialProfile {
    RadialProfile::new(
        0.65,
        vec![geometry::Harmonic {
            freq: 2,
            cos_amp: 0.1,
            sin_amp: 0.0,
        }],
        0.15,
    )
    .expect("profile constants are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::field_reassign_with_default)]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.m_values = vec![];
        assert!(run_cluster_experiment(&cfg).is_err());
        cfg.m_values = vec![4];
        assert!(run_cluster_experiment(&cfg).is_err());
        cfg = ExperimentConfig::default();
        cfg.n_copies = 0;
        assert!(run_cluster_experiment(&cfg).is_err());
    }

    #[test]
    fn snap_rotation_accuracy_is_exactly_one() {
        let cfg = ExperimentConfig {
            m_values: vec![16, 64],
            trials: 2,
            snap_rotations: true,
            ..Default::default()
        };
        let report = run_cluster_experiment(&cfg).unwrap();
        for row in &report.rows {
            assert_eq!(row.accuracy, 1.0, "m={} trial={}", row.m, row.trial);
        }
    }

    #[test]
    fn cluster_experiment_is_deterministic_and_sorted() {
        let cfg = ExperimentConfig {
            m_values: vec![16, 32],
            trials: 2,
            n_originals: 4,
            n_copies: 3,
            ..Default::default()
        };
        let a = run_cluster_experiment(&cfg).unwrap();
        let b = run_cluster_experiment(&cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        let keys: Vec<(usize, usize)> = a.rows.iter().map(|r| (r.m, r.trial)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(a.rows.len(), 4);
    }

    #[test]
    fn knn_snap_queries_all_hit() {
        let cfg = ExperimentConfig {
            m_values: vec![32],
            n_originals: 12,
            snap_rotations: true,
            ..Default::default()
        };
        let report = run_knn_experiment(&cfg).unwrap();
        assert_eq!(report.rank1_hits, report.queries);
        for (_, _, d) in &report.top_hits {
            assert!(*d < 1e-9);
        }
    }

    #[test]
    fn convergence_constant_profile_is_exact() {
        let profile = RadialProfile::new(0.5, vec![], 0.0).unwrap();
        let report = run_convergence(&profile, &[16, 32, 64], &PhiSpec::default()).unwrap();
        for row in &report.rows {
            assert_eq!(row.deviation, 0.0);
        }
        assert!(report.order.is_none());
    }

    #[test]
    fn convergence_order_of_c2_profile() {
        let report = run_convergence(
            &convergence_profile(),
            &[16, 32, 64, 128, 256],
            &PhiSpec::default(),
        )
        .unwrap();
        for w in report.rows.windows(2) {
            assert!(
                w[1].deviation < w[0].deviation,
                "deviations not shrinking: {:?}",
                report.rows
            );
        }
        let order = report.order.unwrap();
        assert!(order >= 1.8, "order {order}, rows {:?}", report.rows);
    }

    #[test]
    fn convergence_rejects_short_input() {
        let profile = convergence_profile();
        assert!(run_convergence(&profile, &[16, 32], &PhiSpec::default()).is_err());
        assert!(run_convergence(&profile, &[16, 24, 32], &PhiSpec::default()).is_err());
    }
}
