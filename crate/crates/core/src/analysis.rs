//! Distances in shape and sketch space, brute-force kNN retrieval, and
//! k-means clustering over sketch vectors.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circfn::CircleFunction;
use crate::error::{Error, Result};
use crate::geometry::StarFunction;
use crate::sketch::{PhiSpec, Sketch};

/// Euclidean distance between two sketch vectors with matching parameters.
pub fn sketch_distance(a: &Sketch, b: &Sketch) -> Result<f64> {
    if a.m != b.m {
        return Err(Error::LengthMismatch {
            left: a.m,
            right: b.m,
        });
    }
    if a.phi != b.phi {
        return Err(Error::SketchMismatch(format!(
            "phi mismatch: {:?} vs {:?}",
            a.phi, b.phi
        )));
    }
    Ok(a.values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Sup distance between two star functions: `max_j |f1(j) − f2(j)|`.
pub fn star_distance(f1: &StarFunction, f2: &StarFunction) -> Result<f64> {
    if f1.m != f2.m {
        return Err(Error::LengthMismatch {
            left: f1.m,
            right: f2.m,
        });
    }
    Ok(f1
        .values
        .iter()
        .zip(f2.values.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Rotation-minimized sup distance: the minimum of `star_distance(f1,
/// rotate(f2, x))` over all m cyclic rotations, with the smallest argmin.
pub fn r_star_distance(f1: &StarFunction, f2: &StarFunction) -> Result<(f64, usize)> {
    if f1.m != f2.m {
        return Err(Error::LengthMismatch {
            left: f1.m,
            right: f2.m,
        });
    }
    let m = f1.m;
    let mut best = f64::INFINITY;
    let mut best_x = 0usize;
    for x in 0..m {
        let mut d = 0.0f64;
        for j in 0..m {
            let b = f2.get(j as i64 - x as i64);
            d = d.max((f1.values[j] - b).abs());
        }
        if d < best {
            best = d;
            best_x = x;
        }
    }
    Ok((best, best_x))
}

/// In-memory collection of identified sketches sharing `m` and `phi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SketchIndex {
    pub m: usize,
    pub phi: PhiSpec,
    pub entries: Vec<(String, Sketch)>,
}

impl SketchIndex {
    pub fn new(m: usize, phi: PhiSpec) -> Self {
        Self {
            m,
            phi,
            entries: Vec::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, sketch: Sketch) -> Result<()> {
        let id = id.into();
        if sketch.m != self.m {
            return Err(Error::LengthMismatch {
                left: self.m,
                right: sketch.m,
            });
        }
        if sketch.phi != self.phi {
            return Err(Error::SketchMismatch(format!(
                "index phi {:?} vs sketch phi {:?}",
                self.phi, sketch.phi
            )));
        }
        if self.entries.iter().any(|(eid, _)| *eid == id) {
            return Err(Error::InvalidParameter(format!("duplicate id {id:?}")));
        }
        self.entries.push((id, sketch));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Exact brute-force k-nearest-neighbor scan, ascending distance, ties
/// broken by lexicographic id.
pub fn knn(index: &SketchIndex, query: &Sketch, k: usize) -> Result<Vec<(String, f64)>> {
    if index.is_empty() {
        return Err(Error::InvalidParameter("index is empty".into()));
    }
    if k > index.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds index size {}",
            index.len()
        )));
    }
    let mut scored: Vec<(String, f64)> = index
        .entries
        .iter()
        .map(|(id, s)| Ok((id.clone(), sketch_distance(s, query)?)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterResult {
    pub assignments: BTreeMap<String, usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd k-means with seeded greedy farthest-point initialization: the
/// first centroid is a seeded-random entry, each next is the point
/// maximizing its min distance to the chosen centroids. Empty clusters are
/// repaired by stealing the globally farthest point.
pub fn kmeans(index: &SketchIndex, k: usize, seed: u64, max_iters: usize) -> Result<ClusterResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let n = index.len();
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds index size {n}"
        )));
    }
    let points: Vec<&[f64]> = index
        .entries
        .iter()
        .map(|(_, s)| s.values.as_slice())
        .collect();

    // greedy farthest-point init
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)].to_vec());
    let mut min_d: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let far = (0..n)
            .max_by(|&a, &b| min_d[a].total_cmp(&min_d[b]))
            .unwrap();
        centroids.push(points[far].to_vec());
        for (i, p) in points.iter().enumerate() {
            min_d[i] = min_d[i].min(sq_dist(p, centroids.last().unwrap()));
        }
    }

    let dim = points[0].len();
    let mut assign = vec![0usize; n];
    let mut iterations = 0usize;
    for _ in 0..max_iters {
        iterations += 1;
        // assignment step
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centroids[a]).total_cmp(&sq_dist(p, &centroids[b])))
                .unwrap();
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        // update step
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i]].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // repair: move the point farthest from its centroid here
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(points[a], &centroids[assign[a]])
                            .total_cmp(&sq_dist(points[b], &centroids[assign[b]]))
                    })
                    .unwrap();
                let old = assign[far];
                counts[old] -= 1;
                for (s, v) in sums[old].iter_mut().zip(points[far].iter()) {
                    *s -= v;
                }
                assign[far] = c;
                counts[c] = 1;
                sums[c] = points[far].to_vec();
                changed = true;
            }
        }
        for c in 0..k {
            for (j, s) in sums[c].iter().enumerate() {
                centroids[c][j] = s / counts[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }

    let inertia = points
        .iter()
        .enumerate()
        .map(|(i, p)| sq_dist(p, &centroids[assign[i]]))
        .sum();
    let assignments = index
        .entries
        .iter()
        .enumerate()
        .map(|(i, (id, _))| (id.clone(), assign[i]))
        .collect();
    Ok(ClusterResult {
        assignments,
        centroids,
        inertia,
        iterations,
    })
}

/// Fraction of rotated copies landing in the same cluster as their
/// original. Only copies count toward the denominator.
pub fn rotation_cluster_accuracy(
    result: &ClusterResult,
    provenance: &BTreeMap<String, String>,
) -> Result<f64> {
    if provenance.is_empty() {
        return Err(Error::InvalidParameter(
            "no rotated copies: accuracy denominator is empty".into(),
        ));
    }
    let mut hits = 0usize;
    for (copy, original) in provenance {
        let c = result
            .assignments
            .get(copy)
            .ok_or_else(|| Error::InvalidParameter(format!("copy id {copy:?} not clustered")))?;
        let o = result.assignments.get(original).ok_or_else(|| {
            Error::InvalidParameter(format!("original id {original:?} not clustered"))
        })?;
        if c == o {
            hits += 1;
        }
    }
    Ok(hits as f64 / provenance.len() as f64)
}

/// Convenience: lowercase star functions to sketch-compatible circle
/// functions and measure distance between their sketches.
pub fn star_sketch(f: &StarFunction, phi: PhiSpec) -> Result<Sketch> {
    crate::sketch::sketch_auto(&f.to_circle_fn(), phi)
}

pub fn circle_fn_of(values: Vec<f64>) -> Result<CircleFunction> {
    CircleFunction::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::{sketch_auto, PhiKind};
    use rand::Rng;

    fn phi() -> PhiSpec {
        PhiSpec::neg_exp(1.0).unwrap()
    }

    fn sk(values: &[f64]) -> Sketch {
        sketch_auto(&CircleFunction::new(values.to_vec()).unwrap(), phi()).unwrap()
    }

    #[test]
    fn sketch_distance_basics() {
        let a = sk(&[0.3, 0.9, 0.1, 0.5]);
        assert_eq!(sketch_distance(&a, &a).unwrap(), 0.0);

        let f = CircleFunction::new(vec![0.3, 0.9, 0.1, 0.5]).unwrap();
        let b = sketch_auto(&f.rotate(2), phi()).unwrap();
        assert!(sketch_distance(&a, &b).unwrap() < 1e-12);

        // hand example at m=2: V_f=[1, cosh(1)], V_g=[1, 1]
        let vf = sk(&[0.0, 1.0]);
        let vg = sk(&[0.0, 0.0]);
        let expect = (1f64.exp() + (-1f64).exp()) / 2.0 - 1.0;
        assert!((sketch_distance(&vf, &vg).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn sketch_distance_rejects_mismatch() {
        let a = sk(&[0.1, 0.2, 0.3]);
        let b = sk(&[0.1, 0.2, 0.3, 0.4]);
        assert!(sketch_distance(&a, &b).is_err());
        let f = CircleFunction::new(vec![0.1, 0.2, 0.3]).unwrap();
        let c = sketch_auto(&f, PhiSpec::new(PhiKind::Gaussian, 1.0).unwrap()).unwrap();
        assert!(sketch_distance(&a, &c).is_err());
    }

    #[test]
    fn star_distance_examples() {
        let f1 = StarFunction::new(vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let f2 = StarFunction::new(vec![1.0, 1.0, 0.5, 1.0]).unwrap();
        assert_eq!(star_distance(&f1, &f1).unwrap(), 0.0);
        assert_eq!(star_distance(&f1, &f2).unwrap(), 0.5);
        assert_eq!(
            star_distance(&f1, &f2).unwrap(),
            star_distance(&f2, &f1).unwrap()
        );
        let f3 = StarFunction::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(star_distance(&f1, &f3).is_err());
    }

    #[test]
    fn r_star_distance_recovers_rotation() {
        let f = StarFunction::new(vec![0.9, 0.4, 0.7, 0.2, 0.6, 0.8, 0.3, 0.5]).unwrap();
        let g = f.rotate(3);
        let (d, x) = r_star_distance(&f, &g).unwrap();
        assert!(d < 1e-15);
        // rotate(g, x) must equal f: g = rotate(f,3) so x = m-3 = 5
        assert_eq!(x, 5);
        assert!(r_star_distance(&f, &g).unwrap().0 <= star_distance(&f, &g).unwrap());
    }

    #[test]
    fn r_star_distance_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a: Vec<f64> = (0..8).map(|_| rng.gen_range(0.1..1.0)).collect();
            let b: Vec<f64> = (0..8).map(|_| rng.gen_range(0.1..1.0)).collect();
            let f = StarFunction::new(a).unwrap();
            let g = StarFunction::new(b).unwrap();
            let (d, _) = r_star_distance(&f, &g).unwrap();
            let brute = (0..8i64)
                .map(|x| star_distance(&f, &g.rotate(x)).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!((d - brute).abs() < 1e-15);
        }
    }

    fn random_index(n: usize, m: usize, seed: u64) -> SketchIndex {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut index = SketchIndex::new(m, phi());
        for i in 0..n {
            let values: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s = sk(&values);
            index.insert(format!("s{i:03}"), s).unwrap();
        }
        index
    }

    #[test]
    fn knn_matches_full_sort_oracle() {
        let index = random_index(100, 12, 4);
        let query = index.entries[37].1.clone();
        let got = knn(&index, &query, 5).unwrap();
        assert_eq!(got[0].0, "s037");
        assert_eq!(got[0].1, 0.0);

        let mut oracle: Vec<(String, f64)> = index
            .entries
            .iter()
            .map(|(id, s)| (id.clone(), sketch_distance(s, &query).unwrap()))
            .collect();
        oracle.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        oracle.truncate(5);
        assert_eq!(got, oracle);

        // full ranking
        let full = knn(&index, &query, 100).unwrap();
        assert_eq!(full.len(), 100);
    }

    #[test]
    fn knn_rejections() {
        let index = SketchIndex::new(4, phi());
        let q = sk(&[0.1, 0.2, 0.3, 0.4]);
        assert!(knn(&index, &q, 1).is_err());
        let index = random_index(3, 4, 0);
        assert!(knn(&index, &q, 4).is_err());
    }

    #[test]
    fn kmeans_each_point_own_cluster() {
        let index = random_index(6, 8, 1);
        let r = kmeans(&index, 6, 0, 300).unwrap();
        assert!(r.inertia < 1e-18);
        let labels: std::collections::BTreeSet<usize> = r.assignments.values().copied().collect();
        assert_eq!(labels.len(), 6);
    }

    #[test]
    fn kmeans_separable_case() {
        let mut index = SketchIndex::new(3, phi());
        let a = sk(&[0.1, 0.1, 0.1]);
        let b = sk(&[0.9, 0.1, 0.5]);
        for i in 0..4 {
            index.insert(format!("a{i}"), a.clone()).unwrap();
            index.insert(format!("b{i}"), b.clone()).unwrap();
        }
        let r = kmeans(&index, 2, 7, 300).unwrap();
        assert!(r.inertia < 1e-18);
        let la = r.assignments["a0"];
        let lb = r.assignments["b0"];
        assert_ne!(la, lb);
        for i in 0..4 {
            assert_eq!(r.assignments[&format!("a{i}")], la);
            assert_eq!(r.assignments[&format!("b{i}")], lb);
        }
    }

    #[test]
    fn kmeans_beats_random_assignment() {
        let index = random_index(40, 6, 2);
        let points: Vec<&[f64]> = index
            .entries
            .iter()
            .map(|(_, s)| s.values.as_slice())
            .collect();
        let result = kmeans(&index, 5, 0, 300).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..100 {
            let assign: Vec<usize> = (0..points.len()).map(|_| rng.gen_range(0..5)).collect();
            let mut sums = vec![vec![0.0; 6]; 5];
            let mut counts = [0usize; 5];
            for (i, p) in points.iter().enumerate() {
                counts[assign[i]] += 1;
                for (s, v) in sums[assign[i]].iter_mut().zip(p.iter()) {
                    *s += v;
                }
            }
            let inertia: f64 = points
                .iter()
                .enumerate()
                .filter(|(i, _)| counts[assign[*i]] > 0)
                .map(|(i, p)| {
                    let c: Vec<f64> = sums[assign[i]]
                        .iter()
                        .map(|s| s / counts[assign[i]] as f64)
                        .collect();
                    sq_dist(p, &c)
                })
                .sum();
            assert!(result.inertia <= inertia + 1e-12);
        }
    }

    #[test]
    fn kmeans_deterministic() {
        let index = random_index(30, 6, 3);
        let a = kmeans(&index, 4, 11, 300).unwrap();
        let b = kmeans(&index, 4, 11, 300).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.inertia, b.inertia);
        assert!(kmeans(&index, 31, 0, 300).is_err());
        assert!(kmeans(&index, 0, 0, 300).is_err());
    }

    #[test]
    fn accuracy_counting() {
        // 10 originals x 9 copies, one stray copy -> 89/90
        let mut result = ClusterResult {
            assignments: BTreeMap::new(),
            centroids: vec![],
            inertia: 0.0,
            iterations: 1,
        };
        let mut provenance = BTreeMap::new();
        for o in 0..10 {
            result.assignments.insert(format!("orig{o}"), o);
            for c in 0..9 {
                let id = format!("copy{o}_{c}");
                let label = if o == 0 && c == 0 { 5 } else { o };
                result.assignments.insert(id.clone(), label);
                provenance.insert(id, format!("orig{o}"));
            }
        }
        let acc = rotation_cluster_accuracy(&result, &provenance).unwrap();
        assert!((acc - 89.0 / 90.0).abs() < 1e-12);

        // all with originals -> 1.0; none -> 0.0
        let mut perfect = result.clone();
        for (id, label) in perfect.assignments.iter_mut() {
            if id.starts_with("copy0") {
                *label = 0;
            }
        }
        assert_eq!(
            rotation_cluster_accuracy(&perfect, &provenance).unwrap(),
            1.0
        );

        let mut none = result.clone();
        for (id, label) in none.assignments.iter_mut() {
            if id.starts_with("copy") {
                *label = 99;
            }
        }
        assert_eq!(rotation_cluster_accuracy(&none, &provenance).unwrap(), 0.0);

        // missing provenance target
        provenance.insert("ghost".into(), "orig0".into());
        assert!(rotation_cluster_accuracy(&result, &provenance).is_err());
        // empty denominator
        assert!(rotation_cluster_accuracy(&result, &BTreeMap::new()).is_err());
    }

    #[test]
    fn sketch_distance_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let mk = |rng: &mut ChaCha8Rng| {
                let v: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
                sk(&v)
            };
            let (a, b, c) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let ab = sketch_distance(&a, &b).unwrap();
            let bc = sketch_distance(&b, &c).unwrap();
            let ac = sketch_distance(&a, &c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
            assert!((ab - sketch_distance(&b, &a).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn metric_modulo_equivalence_at_desk_scale() {
        use crate::circfn;
        use crate::verify::random_general_position;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for m in [4usize, 8, 16] {
            for _ in 0..30 {
                let f = random_general_position(m, &mut rng);
                let g = if rng.gen_bool(0.5) {
                    let x = rng.gen_range(0..m as i64);
                    if rng.gen_bool(0.5) {
                        f.roc(0.7).rotate(x)
                    } else {
                        f.rotate(x)
                    }
                } else {
                    random_general_position(m, &mut rng)
                };
                let vf = sketch_auto(&f, phi()).unwrap();
                let vg = sketch_auto(&g, phi()).unwrap();
                let near = sketch_distance(&vf, &vg).unwrap() < 1e-9;
                let equ = circfn::equivalent(&f, &g).unwrap();
                assert_eq!(near, equ, "m={m} f={:?} g={:?}", f.values, g.values);
            }
        }
    }
}
