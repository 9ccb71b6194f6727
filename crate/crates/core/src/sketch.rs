//! The rotation-invariant sketch `V_f(k) = (1/m) Σ_j Φ(f(j) − f(j+k))`,
//! computed directly, via FFT circular convolution (odd-exponential Φ only),
//! or by randomized lag sampling, plus the induced kernel and the Hoeffding
//! sample-size calculator.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::circfn::CircleFunction;
use crate::error::{Error, Result};

/// Characteristic maps applied to function differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKind {
    /// Φ(z) = exp(−λz). The only map with a convolution factorization.
    NegExp,
    /// Φ(z) = exp(−λ|z|).
    Laplace,
    /// Φ(z) = exp(−λz²).
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiSpec {
    pub kind: PhiKind,
    pub lambda: f64,
}

impl PhiSpec {
    pub fn new(kind: PhiKind, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "phi lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(Self { kind, lambda })
    }

    pub fn neg_exp(lambda: f64) -> Result<Self> {
        Self::new(PhiKind::NegExp, lambda)
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        match self.kind {
            PhiKind::NegExp => (-self.lambda * z).exp(),
            PhiKind::Laplace => (-self.lambda * z.abs()).exp(),
            PhiKind::Gaussian => (-self.lambda * z * z).exp(),
        }
    }
}

impl Default for PhiSpec {
    fn default() -> Self {
        Self {
            kind: PhiKind::NegExp,
            lambda: 1.0,
        }
    }
}

/// The sketch vector `V_f ∈ R^m`. Euclidean distance between sketches is the
/// shape distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sketch {
    pub m: usize,
    pub phi: PhiSpec,
    pub values: Vec<f64>,
}

fn check_overflow(f: &CircleFunction, phi: &PhiSpec) -> Result<()> {
    let range = (f.max() - f.min())
        .abs()
        .max(f.max().abs())
        .max(f.min().abs());
    if phi.lambda * range > 700.0 {
        return Err(Error::Overflow(format!(
            "lambda * value range = {} would overflow exp; standardize inputs to (0,1]",
            phi.lambda * range
        )));
    }
    Ok(())
}

/// Direct O(m²) evaluation of the definition; the reference implementation
/// for every equivalence test.
pub fn sketch_direct(f: &CircleFunction, phi: PhiSpec) -> Result<Sketch> {
    check_overflow(f, &phi)?;
    let m = f.m;
    let inv_m = 1.0 / m as f64;
    let values = (0..m as i64)
        .map(|k| {
            let mut acc = 0.0;
            for j in 0..m as i64 {
                acc += phi.eval(f.get(j) - f.get(j + k));
            }
            acc * inv_m
        })
        .collect();
    Ok(Sketch { m, phi, values })
}

/// O(m log m) evaluation via the circular convolution
/// `V = (1/m)(p ⊛ q)` with `p(j) = exp(−λ f(−j))`, `q(j) = exp(λ f(j))`.
///
/// Only the odd-exponential Φ factorizes this way; other kinds are rejected
/// and should go through [`sketch_direct`]. The transform length is exactly
/// `m` (mixed radix, never padded).
pub fn sketch_fft(f: &CircleFunction, phi: PhiSpec) -> Result<Sketch> {
    if phi.kind != PhiKind::NegExp {
        return Err(Error::InvalidParameter(
            "sketch_fft requires the neg_exp phi; use sketch_direct for laplace/gaussian".into(),
        ));
    }
    check_overflow(f, &phi)?;
    let m = f.m;
    let mut p: Vec<Complex<f64>> = (0..m as i64)
        .map(|j| Complex::new((-phi.lambda * f.get(-j)).exp(), 0.0))
        .collect();
    let mut q: Vec<Complex<f64>> = (0..m as i64)
        .map(|j| Complex::new((phi.lambda * f.get(j)).exp(), 0.0))
        .collect();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut p);
    fft.process(&mut q);
    let mut prod: Vec<Complex<f64>> = p.iter().zip(q.iter()).map(|(a, b)| a * b).collect();
    planner.plan_fft_inverse(m).process(&mut prod);

    // one 1/m for the unnormalized inverse transform, one from the definition
    let scale = 1.0 / (m as f64 * m as f64);
    let values = prod.iter().map(|c| c.re * scale).collect();
    Ok(Sketch { m, phi, values })
}

/// FFT path when Φ permits it, direct otherwise.
pub fn sketch_auto(f: &CircleFunction, phi: PhiSpec) -> Result<Sketch> {
    match phi.kind {
        PhiKind::NegExp => sketch_fft(f, phi),
        _ => sketch_direct(f, phi),
    }
}

/// How the lags of a [`RandomSketch`] are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagSampling {
    /// i.i.d. uniform lags with replacement.
    IidUniform,
    /// Every lag exactly once; requires `t = m` and recovers the kernel
    /// exactly.
    Stratified,
}

/// A `t`-sample randomized sketch. `scale² · Σ values_f · values_g` is an
/// unbiased estimator of the sketch kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSketch {
    pub m: usize,
    pub t: usize,
    pub phi: PhiSpec,
    pub seed: u64,
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    pub scale: f64,
}

pub fn sketch_random(
    f: &CircleFunction,
    phi: PhiSpec,
    t: usize,
    seed: u64,
    sampling: LagSampling,
) -> Result<RandomSketch> {
    use rand::{Rng, SeedableRng};
    let m = f.m;
    if t < 1 || t > m {
        return Err(Error::InvalidParameter(format!(
            "sample count t must satisfy 1 <= t <= m = {m}, got {t}"
        )));
    }
    let lags: Vec<usize> = match sampling {
        LagSampling::IidUniform => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..t).map(|_| rng.gen_range(0..m)).collect()
        }
        LagSampling::Stratified => {
            if t != m {
                return Err(Error::InvalidParameter(
                    "stratified sampling requires t = m".into(),
                ));
            }
            (0..m).collect()
        }
    };
    check_overflow(f, &phi)?;
    let inv_m = 1.0 / m as f64;
    let values = lags
        .iter()
        .map(|&k| {
            let mut acc = 0.0;
            for j in 0..m as i64 {
                acc += phi.eval(f.get(j) - f.get(j + k as i64));
            }
            acc * inv_m
        })
        .collect();
    Ok(RandomSketch {
        m,
        t,
        phi,
        seed,
        lags,
        values,
        scale: (1.0 / t as f64).sqrt(),
    })
}

/// Inner product of two randomized sketches drawn with the same lags;
/// estimates [`kernel`].
pub fn random_inner_product(a: &RandomSketch, b: &RandomSketch) -> Result<f64> {
    if a.m != b.m || a.lags != b.lags {
        return Err(Error::SketchMismatch(
            "random sketches must share m and the same lag sample".into(),
        ));
    }
    if a.phi != b.phi {
        return Err(Error::SketchMismatch(
            "random sketches must share phi".into(),
        ));
    }
    Ok(a.scale
        * b.scale
        * a.values
            .iter()
            .zip(b.values.iter())
            .map(|(x, y)| x * y)
            .sum::<f64>())
}

/// Invariant sketch kernel `k(f,g) = (1/m) Σ_k V_f(k) V_g(k)`.
pub fn kernel(f: &CircleFunction, g: &CircleFunction, phi: PhiSpec) -> Result<f64> {
    if f.m != g.m {
        return Err(Error::LengthMismatch {
            left: f.m,
            right: g.m,
        });
    }
    let vf = sketch_auto(f, phi)?;
    let vg = sketch_auto(g, phi)?;
    Ok(kernel_of_sketches(&vf, &vg))
}

pub fn kernel_of_sketches(vf: &Sketch, vg: &Sketch) -> f64 {
    vf.values
        .iter()
        .zip(vg.values.iter())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / vf.m as f64
}

/// Hoeffding sample count `ceil( (Δ² / 2ε²) · ln(2/δ) )`.
pub fn hoeffding_samples(epsilon: f64, delta: f64, range_width: f64) -> Result<u64> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::InvalidParameter("delta must be in (0,1)".into()));
    }
    if range_width.is_nan() || range_width <= 0.0 {
        return Err(Error::InvalidParameter(
            "range width must be positive".into(),
        ));
    }
    let d = range_width * range_width / (2.0 * epsilon * epsilon) * (2.0 / delta).ln();
    Ok(d.ceil() as u64)
}

/// Uniform bound `∥V_f∥_∞ · ∥V_g∥_∞ ≤ exp(2λ∥f∥_∞) · exp(2λ∥g∥_∞)` for the
/// odd-exponential Φ; feeds `range_width` of [`hoeffding_samples`].
pub fn phi_range_bound(f: &CircleFunction, g: &CircleFunction, phi: PhiSpec) -> Result<f64> {
    if phi.kind != PhiKind::NegExp {
        return Err(Error::InvalidParameter(
            "phi_range_bound is defined for the neg_exp phi".into(),
        ));
    }
    let sup = |h: &CircleFunction| h.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok((2.0 * phi.lambda * sup(f)).exp() * (2.0 * phi.lambda * sup(g)).exp())
}
