//! Planar outlines: ingestion, standardization (area centroid to the
//! origin, max radius to 1), rotation, and star discretization into radial
//! functions on `m` wedges. Also houses the synthetic radial-profile
//! generator used by the experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::circfn::CircleFunction;
use crate::error::{Error, Result};

pub type Point = [f64; 2];

const AREA_EPS: f64 = 1e-12;
const CENTROID_TOL: f64 = 1e-9;

/// Default number of extra rays cast inside each wedge (besides the
/// wedge-center ray) when discretizing.
pub const DEFAULT_EXTRA_RAYS: usize = 8;

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(p: Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

/// Ordered boundary vertices of a closed polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outline {
    pub points: Vec<Point>,
}

impl Outline {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::TooFewPoints(points.len()));
        }
        let n = points.len();
        for i in 0..n {
            let a = points[i];
            let b = points[(i + 1) % n];
            if a == b {
                return Err(Error::DegeneratePolygon(format!(
                    "consecutive vertices {i} and {} are equal",
                    (i + 1) % n
                )));
            }
        }
        if signed_area(&points).abs() < AREA_EPS {
            return Err(Error::DegeneratePolygon("polygon area is zero".into()));
        }
        Ok(Self { points })
    }
}

/// Shoelace signed area.
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += cross(points[i], points[(i + 1) % n]);
    }
    acc / 2.0
}

/// Area centroid of the filled polygon.
pub fn area_centroid(points: &[Point]) -> Point {
    let n = points.len();
    let a = signed_area(points);
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        let w = cross(p, q);
        cx += (p[0] + q[0]) * w;
        cy += (p[1] + q[1]) * w;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

/// An outline translated so its area centroid is the origin and scaled so
/// the maximum vertex radius is at most 1. `centroid` and `scale` record the
/// inverse transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedOutline {
    pub points: Vec<Point>,
    pub centroid: Point,
    pub scale: f64,
}

impl StandardizedOutline {
    /// Validates the standardization invariants: centroid at the origin and
    /// max radius in (0, 1].
    pub fn new(points: Vec<Point>, centroid: Point, scale: f64) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if scale.is_nan() || scale <= 0.0 {
            return Err(Error::InvalidParameter("scale must be positive".into()));
        }
        let c = area_centroid(&points);
        if norm(c) > CENTROID_TOL {
            return Err(Error::InvalidParameter(format!(
                "area centroid {c:?} is not at the origin"
            )));
        }
        let max_r = points.iter().map(|&p| norm(p)).fold(0.0, f64::max);
        if max_r > 1.0 + CENTROID_TOL {
            return Err(Error::InvalidParameter(format!(
                "max vertex radius {max_r} exceeds 1"
            )));
        }
        Ok(Self {
            points,
            centroid,
            scale,
        })
    }

    pub fn max_radius(&self) -> f64 {
        self.points.iter().map(|&p| norm(p)).fold(0.0, f64::max)
    }
}

/// Center + scale standardization: subtract the area centroid, divide by
/// the maximum vertex radius.
pub fn standardize(outline: &Outline) -> Result<StandardizedOutline> {
    let c = area_centroid(&outline.points);
    let centered: Vec<Point> = outline
        .points
        .iter()
        .map(|p| [p[0] - c[0], p[1] - c[1]])
        .collect();
    let tau = centered.iter().map(|&p| norm(p)).fold(0.0, f64::max);
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::DegeneratePolygon(
            "all vertices coincide with the centroid".into(),
        ));
    }
    let points = centered.iter().map(|p| [p[0] / tau, p[1] / tau]).collect();
    StandardizedOutline::new(points, c, tau)
}

/// Rotate every vertex by `angle` radians about the origin. Rotation fixes
/// the centroid and all radii, so the standardization invariants carry over.
pub fn rotate_outline(shape: &StandardizedOutline, angle: f64) -> StandardizedOutline {
    let (s, c) = angle.sin_cos();
    let points = shape
        .points
        .iter()
        .map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
        .collect();
    StandardizedOutline {
        points,
        centroid: shape.centroid,
        scale: shape.scale,
    }
}

/// Radial extents of a star-shaped outline on `m` wedges; values in (0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarFunction {
    pub m: usize,
    pub values: Vec<f64>,
}

impl StarFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidParameter(
                "star function needs at least 3 wedges".into(),
            ));
        }
        if let Some(v) = values
            .iter()
            .find(|&&v| v.is_nan() || v <= 0.0 || v > 1.0 + CENTROID_TOL)
        {
            return Err(Error::InvalidParameter(format!(
                "radial value {v} outside (0, 1]"
            )));
        }
        Ok(Self {
            m: values.len(),
            values,
        })
    }

    #[inline]
    pub fn get(&self, i: i64) -> f64 {
        self.values[i.rem_euclid(self.m as i64) as usize]
    }

    pub fn to_circle_fn(&self) -> CircleFunction {
        CircleFunction::new(self.values.clone()).expect("star function values are valid")
    }

    /// Cyclic rotation by `x` wedges, matching `CircleFunction::rotate`.
    pub fn rotate(&self, x: i64) -> Self {
        let values = (0..self.m as i64).map(|i| self.get(i - x)).collect();
        Self { m: self.m, values }
    }
}

/// Angle of the center ray of wedge `j` out of `m`.
#[inline]
pub fn wedge_center_angle(j: usize, m: usize) -> f64 {
    j as f64 * TAU / m as f64 + PI / m as f64
}

/// Strict interior test via crossing parity.
fn origin_inside(points: &[Point]) -> bool {
    let n = points.len();
    let mut inside = false;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        if (p[1] > 0.0) != (q[1] > 0.0) {
            let x_at = p[0] + (0.0 - p[1]) / (q[1] - p[1]) * (q[0] - p[0]);
            if x_at > 0.0 {
                inside = !inside;
            }
        }
    }
    inside
}

/// Farthest intersection of the boundary with the ray from the origin at
/// `angle`, or None if the ray misses every edge.
pub fn max_ray_intersection(points: &[Point], angle: f64) -> Option<f64> {
    let dir = [angle.cos(), angle.sin()];
    let n = points.len();
    let mut best: Option<f64> = None;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let e = [b[0] - a[0], b[1] - a[1]];
        let denom = cross(dir, e);
        if denom.abs() < 1e-15 {
            continue;
        }
        // a + s e = t dir
        let s = cross(a, dir) / denom;
        let t = cross(a, e) / denom;
        if (-1e-12..=1.0 + 1e-12).contains(&s) && t > 1e-12 {
            best = Some(best.map_or(t, |cur: f64| cur.max(t)));
        }
    }
    best
}

/// Discretize with the default ray count per wedge.
pub fn star_discretize(shape: &StandardizedOutline, m: usize) -> Result<StarFunction> {
    star_discretize_with(shape, m, DEFAULT_EXTRA_RAYS)
}

/// Radial extent per wedge: the maximum boundary intersection over the
/// wedge-center ray plus `extra_rays` evenly spaced rays inside the wedge.
pub fn star_discretize_with(
    shape: &StandardizedOutline,
    m: usize,
    extra_rays: usize,
) -> Result<StarFunction> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!(
            "wedge count m must be at least 3, got {m}"
        )));
    }
    if !origin_inside(&shape.points) {
        return Err(Error::NotStarShaped(
            "area centroid lies outside the polygon".into(),
        ));
    }
    let w = TAU / m as f64;
    let mut values = Vec::with_capacity(m);
    for j in 0..m {
        let mut best: Option<f64> = None;
        let mut probe = |angle: f64| {
            if let Some(t) = max_ray_intersection(&shape.points, angle) {
                best = Some(best.map_or(t, |cur: f64| cur.max(t)));
            }
        };
        probe(wedge_center_angle(j, m));
        for i in 0..extra_rays {
            probe(j as f64 * w + (i + 1) as f64 * w / (extra_rays as f64 + 1.0));
        }
        let v = best.ok_or_else(|| {
            Error::NotStarShaped(format!("no boundary intersection in wedge {j}"))
        })?;
        values.push(v.min(1.0));
    }
    StarFunction::new(values)
}

// ---------------------------------------------------------------------------
// Synthetic star shapes
// ---------------------------------------------------------------------------

/// One sinusoidal term `cos_amp·cos(freq·θ) + sin_amp·sin(freq·θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub freq: u32,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

/// A strictly positive radial profile `r(θ)` with a known Lipschitz bound.
///
/// `abs_sin_cubed` adds `amp·|sin θ|³`, a C² term that is not analytic; it
/// is what the convergence experiment uses to observe the quadratic
/// trapezoidal rate instead of spectral collapse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub base: f64,
    pub harmonics: Vec<Harmonic>,
    #[serde(default)]
    pub abs_sin_cubed: f64,
}

impl RadialProfile {
    pub fn new(base: f64, harmonics: Vec<Harmonic>, abs_sin_cubed: f64) -> Result<Self> {
        let p = Self {
            base,
            harmonics,
            abs_sin_cubed,
        };
        let amp: f64 = p.amplitude_sum();
        if (base - amp).is_nan() || base - amp <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "profile can reach nonpositive radius: base {base}, amplitude budget {amp}"
            )));
        }
        if base + amp + abs_sin_cubed.max(0.0) > 1.0 + CENTROID_TOL {
            return Err(Error::InvalidParameter(
                "profile can exceed radius 1; rescale amplitudes".into(),
            ));
        }
        if abs_sin_cubed < 0.0 {
            return Err(Error::InvalidParameter(
                "abs_sin_cubed amplitude must be nonnegative".into(),
            ));
        }
        Ok(p)
    }

    fn amplitude_sum(&self) -> f64 {
        self.harmonics
            .iter()
            .map(|h| (h.cos_amp * h.cos_amp + h.sin_amp * h.sin_amp).sqrt())
            .sum()
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut r = self.base;
        for h in &self.harmonics {
            let a = h.freq as f64 * theta;
            r += h.cos_amp * a.cos() + h.sin_amp * a.sin();
        }
        if self.abs_sin_cubed != 0.0 {
            r += self.abs_sin_cubed * theta.sin().abs().powi(3);
        }
        r
    }

    /// Lipschitz constant η in the convention `|r(θ) − r(θ′)| ≤ η|θ − θ′|/2π`,
    /// i.e. 2π times a bound on `sup |r′|`.
    pub fn lipschitz_eta(&self) -> f64 {
        let slope: f64 = self
            .harmonics
            .iter()
            .map(|h| h.freq as f64 * (h.cos_amp * h.cos_amp + h.sin_amp * h.sin_amp).sqrt())
            .sum::<f64>()
            + 3.0 * self.abs_sin_cubed;
        TAU * slope
    }

    /// Sample the profile at the wedge-center angles.
    pub fn discretize(&self, m: usize) -> Result<StarFunction> {
        if m < 3 {
            return Err(Error::InvalidParameter("m must be at least 3".into()));
        }
        StarFunction::new(
            (0..m)
                .map(|j| self.eval(wedge_center_angle(j, m)))
                .collect(),
        )
    }

    /// Polygonize with `n` uniformly spaced vertices. The profile's harmonic
    /// content must leave the area centroid at the origin (single-frequency
    /// or all-even-frequency profiles do); this is checked numerically.
    pub fn to_outline(&self, n: usize) -> Result<StandardizedOutline> {
        if n < 3 {
            return Err(Error::TooFewPoints(n));
        }
        let points: Vec<Point> = (0..n)
            .map(|i| {
                let theta = i as f64 * TAU / n as f64;
                let r = self.eval(theta);
                [r * theta.cos(), r * theta.sin()]
            })
            .collect();
        StandardizedOutline::new(points, [0.0, 0.0], 1.0)
    }
}

/// Parameters of the seeded synthetic shape generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Number of harmonics; frequencies 2, 4, ..., 2·harmonics (even only,
    /// which keeps the polygon centroid exactly at the origin).
    pub harmonics: usize,
    pub base: f64,
    /// Total amplitude budget across harmonics.
    pub amplitude: f64,
    /// Vertices of the polygonized outline.
    pub vertices: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            harmonics: 3,
            base: 0.7,
            amplitude: 0.25,
            vertices: 256,
        }
    }
}

/// Deterministically generate a star-shaped standardized outline together
/// with its radial profile (whose Lipschitz constant is therefore known).
pub fn synthesize_star_shape(
    params: &GeneratorParams,
    seed: u64,
) -> Result<(StandardizedOutline, RadialProfile)> {
    if params.harmonics == 0 {
        let profile = RadialProfile::new(params.base, Vec::new(), 0.0)?;
        return Ok((profile.to_outline(params.vertices)?, profile));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..params.harmonics)
        .map(|_| rng.gen_range(0.2..1.0))
        .collect();
    let total: f64 = weights.iter().sum();
    let budget = params.amplitude * rng.gen_range(0.6..1.0);
    let harmonics = weights
        .iter()
        .enumerate()
        .map(|(h, w)| {
            let amp = budget * w / total;
            let phase = rng.gen_range(0.0..TAU);
            Harmonic {
                freq: 2 * (h as u32 + 1),
                cos_amp: amp * phase.cos(),
                sin_amp: amp * phase.sin(),
            }
        })
        .collect();
    let profile = RadialProfile::new(params.base, harmonics, 0.0)?;
    Ok((profile.to_outline(params.vertices)?, profile))
}
