//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use starsketch::analysis::{self, SketchIndex};
use starsketch::circfn::{self, CircleFunction};
use starsketch::experiment::{self, ExperimentConfig};
use starsketch::geometry::GeneratorParams;
use starsketch::sketch::{
    hoeffding_samples, kernel, sketch_auto, sketch_direct, sketch_fft, PhiKind, PhiSpec,
};
use starsketch::verify::random_general_position;

fn criterion(n: usize, name: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    let result = catch_unwind(AssertUnwindSafe(body));
    match result {
        Ok(()) => println!("ACCEPTANCE {n} ({name}): PASS"),
        Err(e) => {
            println!("ACCEPTANCE {n} ({name}): FAIL");
            resume_unwind(e);
        }
    }
}

fn phi1() -> PhiSpec {
    PhiSpec::neg_exp(1.0).unwrap()
}

fn random_fn(m: usize, rng: &mut ChaCha8Rng) -> CircleFunction {
    CircleFunction::new((0..m).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

#[test]
fn acceptance_01_fft_direct_equivalence() {
    criterion(1, "fft/direct equivalence", || {
        for m in [8usize, 64, 512, 4096] {
            let functions: Vec<CircleFunction> = {
                let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
                (0..50).map(|_| random_fn(m, &mut rng)).collect()
            };
            let worst = functions
                .par_iter()
                .map(|f| {
                    let direct = sketch_direct(f, phi1()).unwrap();
                    let fast = sketch_fft(f, phi1()).unwrap();
                    let sup_diff = direct
                        .values
                        .iter()
                        .zip(fast.values.iter())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    let sup = direct.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                    sup_diff / sup
                })
                .reduce(|| 0.0, f64::max);
            assert!(worst < 1e-9, "m={m}: relative sup diff {worst}");
        }
    });
}

#[test]
fn acceptance_02_invariance_suite() {
    criterion(2, "rotation/shift/roc invariance", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let m = rng.gen_range(3..=64usize);
            let f = random_fn(m, &mut rng);
            let base = sketch_auto(&f, phi1()).unwrap();
            let close = |v: &starsketch::Sketch| {
                v.values
                    .iter()
                    .zip(base.values.iter())
                    .all(|(a, b)| (a - b).abs() < 1e-12)
            };
            for x in 0..m as i64 {
                assert!(
                    close(&sketch_auto(&f.rotate(x), phi1()).unwrap()),
                    "rotation {x}"
                );
            }
            for _ in 0..10 {
                let c = rng.gen_range(-1.0..1.0);
                assert!(
                    close(&sketch_auto(&f.shift(c), phi1()).unwrap()),
                    "shift {c}"
                );
            }
            let c = rng.gen_range(-1.0..1.0);
            assert!(close(&sketch_auto(&f.roc(c), phi1()).unwrap()), "roc {c}");
        }
    });
}

fn permutations(m: usize) -> Vec<Vec<f64>> {
    fn rec(rest: &mut Vec<f64>, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            cur.push(v);
            rec(rest, cur, out);
            cur.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(
        &mut (1..=m).map(|v| v as f64).collect(),
        &mut Vec::new(),
        &mut out,
    );
    out
}

#[test]
fn acceptance_03_injectivity_and_metric() {
    criterion(3, "injectivity / metric at small m", || {
        // exhaustive over permutation pairs, m = 5 and 6
        for m in [5usize, 6] {
            let perms = permutations(m);
            let fns: Vec<CircleFunction> = perms
                .iter()
                .map(|p| CircleFunction::new(p.clone()).unwrap())
                .collect();
            let sketches: Vec<Vec<f64>> = fns
                .iter()
                .map(|f| sketch_auto(f, phi1()).unwrap().values)
                .collect();
            let n = fns.len();
            let bad: usize = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut bad = 0usize;
                    for j in i..n {
                        let hom = circfn::lag_homometric(&fns[i], &fns[j]).unwrap();
                        let equ = circfn::equivalent(&fns[i], &fns[j]).unwrap();
                        let dist: f64 = sketches[i]
                            .iter()
                            .zip(sketches[j].iter())
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt();
                        let near = dist < 1e-9;
                        if hom != equ || equ != near {
                            bad += 1;
                        }
                    }
                    bad
                })
                .sum();
            assert_eq!(bad, 0, "m={m}: counterexamples among permutation pairs");
        }

        // randomized general-position pairs
        for m in [6usize, 8, 12] {
            let bad: usize = (0..10u64)
                .into_par_iter()
                .map(|shard| {
                    let mut rng = ChaCha8Rng::seed_from_u64(300 + shard * 1000 + m as u64);
                    let mut bad = 0usize;
                    let mut check = |f: &CircleFunction, g: &CircleFunction| {
                        let hom = circfn::lag_homometric(f, g).unwrap();
                        let equ = circfn::equivalent(f, g).unwrap();
                        let vf = sketch_auto(f, phi1()).unwrap();
                        let vg = sketch_auto(g, phi1()).unwrap();
                        let near = analysis::sketch_distance(&vf, &vg).unwrap() < 1e-9;
                        if hom != equ || equ != near {
                            bad += 1;
                        }
                    };
                    for _ in 0..1000 {
                        let f = random_general_position(m, &mut rng);
                        let g = random_general_position(m, &mut rng);
                        check(&f, &g);
                        let x = rng.gen_range(0..m as i64);
                        let c = rng.gen_range(-1.0..1.0);
                        let h = if rng.gen_bool(0.5) {
                            f.roc(c).rotate(x)
                        } else {
                            f.rotate(x).shift(c)
                        };
                        check(&f, &h);
                    }
                    bad
                })
                .sum();
            assert_eq!(bad, 0, "m={m}: randomized counterexamples");
        }

        // the appendix pair must be flagged non-equivalent
        let f = CircleFunction::new(vec![1.0, 3.0, 5.0, 4.0, 2.0]).unwrap();
        let g = CircleFunction::new(vec![3.0, 1.0, 4.0, 2.0, 5.0]).unwrap();
        assert!(!circfn::equivalent(&f, &g).unwrap());
        assert!(!circfn::lag_homometric(&f, &g).unwrap());
    });
}

#[test]
fn acceptance_04_discretization_bound() {
    criterion(4, "discretization bound πη/m", || {
        for seed in 0..20u64 {
            let (_, profile) =
                starsketch::geometry::synthesize_star_shape(&GeneratorParams::default(), seed)
                    .unwrap();
            let eta = profile.lipschitz_eta();
            for m in [32usize, 128, 512] {
                let f = profile.discretize(m).unwrap();
                let bound = PI * eta / m as f64;
                let samples = m * 32;
                let sup = (0..samples)
                    .map(|i| {
                        let theta = i as f64 * TAU / samples as f64;
                        let wedge = ((theta / (TAU / m as f64)) as usize).min(m - 1);
                        (profile.eval(theta) - f.values[wedge]).abs()
                    })
                    .fold(0.0, f64::max);
                assert!(sup <= bound, "seed={seed} m={m}: {sup} > {bound}");
            }
        }
    });
}

#[test]
fn acceptance_05_stability_bound() {
    criterion(5, "stability bound 2eε", || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let limit = 2.0 * std::f64::consts::E;
        for &eps in &[1e-3f64, 1e-2] {
            for _ in 0..100 {
                let m = rng.gen_range(4..=64usize);
                let values: Vec<f64> = (0..m)
                    .map(|_| rng.gen_range(2.0 * eps..(1.0 - eps)))
                    .collect();
                let perturbed: Vec<f64> = values
                    .iter()
                    .map(|v| v + rng.gen_range(-eps..=eps))
                    .collect();
                let f = CircleFunction::new(values).unwrap();
                let g = CircleFunction::new(perturbed).unwrap();
                let vf = sketch_direct(&f, phi1()).unwrap();
                let vg = sketch_direct(&g, phi1()).unwrap();
                let sup = vf
                    .values
                    .iter()
                    .zip(vg.values.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(sup <= limit * eps, "ε={eps}: {sup} > {}", limit * eps);
            }
        }
    });
}

#[test]
fn acceptance_06_kernel_psd() {
    criterion(6, "sketch kernel PSD", || {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
            let m = 16;
            let fns: Vec<CircleFunction> = (0..20).map(|_| random_fn(m, &mut rng)).collect();
            let n = fns.len();
            let mut gram = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let kij = kernel(&fns[i], &fns[j], phi1()).unwrap();
                    gram[(i, j)] = kij;
                    gram[(j, i)] = kij;
                }
            }
            let eigen = gram.symmetric_eigenvalues();
            let min = eigen.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            assert!(min >= -1e-9, "seed={seed}: min eigenvalue {min}");
        }
    });
}

#[test]
fn acceptance_07_hoeffding() {
    criterion(7, "hoeffding sample calculator", || {
        let d = hoeffding_samples(0.1, 0.01, 1.0).unwrap();
        assert_eq!(d, 265);

        // Monte-Carlo coverage: estimating one sketch coordinate by sampling
        // D positions uniformly must land within ε of the truth in at least
        // a 1−δ fraction of trials. Laplace Φ on values in (0,1] keeps each
        // sample inside a width-1 range.
        let phi = PhiSpec::new(PhiKind::Laplace, 1.0).unwrap();
        let m = 50usize;
        let lag = 7i64;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_fn(m, &mut rng);
        let truth: f64 = (0..m as i64)
            .map(|j| phi.eval(f.get(j) - f.get(j + lag)))
            .sum::<f64>()
            / m as f64;
        let mut covered = 0usize;
        for _ in 0..1000 {
            let mean: f64 = (0..d)
                .map(|_| {
                    let j = rng.gen_range(0..m as i64);
                    phi.eval(f.get(j) - f.get(j + lag))
                })
                .sum::<f64>()
                / d as f64;
            if (mean - truth).abs() <= 0.1 {
                covered += 1;
            }
        }
        assert!(covered >= 990, "coverage {covered}/1000");
    });
}

#[test]
fn acceptance_08_clustering_experiment() {
    criterion(8, "clustering accuracy experiment", || {
        // (a) snap-rotation regime: exact accuracy 1.0 at every m
        let snap_cfg = ExperimentConfig {
            trials: 3,
            snap_rotations: true,
            ..Default::default()
        };
        let snap = experiment::run_cluster_experiment(&snap_cfg).unwrap();
        for row in &snap.rows {
            assert_eq!(row.accuracy, 1.0, "snap m={} trial={}", row.m, row.trial);
        }

        // (b) continuous-rotation regime: means monotone up to one
        // inversion, and ≥ 0.95 at m = 1024
        let cfg = ExperimentConfig::default();
        let report = experiment::run_cluster_experiment(&cfg).unwrap();
        let means: Vec<f64> = report.summary.iter().map(|s| s.mean).collect();
        let inversions = means.windows(2).filter(|w| w[1] < w[0]).count();
        assert!(inversions <= 1, "means {means:?}");
        let last = report.summary.last().unwrap();
        assert_eq!(last.m, 1024);
        assert!(last.mean >= 0.95, "mean accuracy at m=1024: {}", last.mean);
    });
}

#[test]
fn acceptance_09_knn_retrieval() {
    criterion(9, "knn retrieval of rotated copies", || {
        let cfg = ExperimentConfig {
            m_values: vec![128],
            n_originals: 100,
            ..Default::default()
        };
        let report = experiment::run_knn_experiment(&cfg).unwrap();
        assert_eq!(report.queries, 100);
        assert!(
            report.rank1_hits >= 95,
            "rank-1 hits {}/100",
            report.rank1_hits
        );
    });
}

#[test]
fn acceptance_10_convergence_order() {
    criterion(10, "sketch convergence order", || {
        let m_values: Vec<usize> = (5..=11).map(|p| 1usize << p).collect(); // 32..=2048
        let report =
            experiment::run_convergence(&experiment::convergence_profile(), &m_values, &phi1())
                .unwrap();
        let order = report.order.expect("nonzero deviations");
        assert!(order >= 1.8, "order {order}, rows {:?}", report.rows);
    });
}

// Exercised alongside the criteria: index round-trip through the on-disk
// format feeding a knn query, mirroring the CLI pipeline.
#[test]
fn index_disk_round_trip_preserves_knn() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut index = SketchIndex::new(16, phi1());
    for i in 0..20 {
        let f = random_fn(16, &mut rng);
        index
            .insert(format!("s{i:02}"), sketch_auto(&f, phi1()).unwrap())
            .unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    starsketch::io::write_index(dir.path(), &index).unwrap();
    let back = starsketch::io::read_index(dir.path()).unwrap();
    let query = index.entries[11].1.clone();
    assert_eq!(
        analysis::knn(&index, &query, 5).unwrap(),
        analysis::knn(&back, &query, 5).unwrap()
    );
}
