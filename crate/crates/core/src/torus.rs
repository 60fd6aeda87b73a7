//! Area-preserving maps of the plane that commute with integer translations,
//! i.e. lifts of maps of the torus `ℝ²/ℤ²`.
//!
//! A map is a composition of shears and translations. Shear profiles are
//! trigonometric polynomials with integer frequencies, so every primitive is
//! 1-periodic and has a closed-form Jacobian of determinant one.
//!
//! The built-in shear is `(x₁, x₂) ↦ (x₁, x₂ + sin 2πx₁)`; the unscaled
//! `sin x₁` is not 1-periodic.

use std::f64::consts::{PI, SQRT_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest displacement `|ψ(x) − x|` accepted at a fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-9;
/// Successive action refinements must agree to this.
pub const ACTION_TOL: f64 = 1e-8;
pub const MIN_ACTION_SAMPLES: usize = 16;
pub const MAX_ACTION_SAMPLES: usize = 1 << 22;
pub const DEFAULT_GRID_RES: usize = 256;
pub const MAX_ADAPTIVE_GRID_RES: usize = 2048;
/// Relative change below which grid doubling stops.
pub const GRID_REFINEMENT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TorusError {
    #[error("{name} is not a fixed point: displacement {displacement:e}")]
    NotFixedPoint { name: &'static str, point: [f64; 2], displacement: f64 },
    #[error("action difference did not settle within {samples} samples (last change {change:e})")]
    NoConvergence { samples: usize, change: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("unknown built-in map {0:?}")]
    UnknownBuiltin(String),
}

/// `amplitude · sin(2π · frequency · t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub frequency: i32,
    #[serde(default)]
    pub phase: f64,
}

impl TrigTerm {
    pub fn sine(amplitude: f64, frequency: i32) -> Self {
        TrigTerm { amplitude, frequency, phase: 0.0 }
    }

    fn angle(&self, t: f64) -> f64 {
        TAU * self.frequency as f64 * t + self.phase
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * self.angle(t).sin()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.amplitude * TAU * self.frequency as f64 * self.angle(t).cos()
    }

    /// Average over one period.
    pub fn mean(&self) -> f64 {
        if self.frequency == 0 {
            self.amplitude * self.phase.sin()
        } else {
            0.0
        }
    }
}

fn profile(terms: &[TrigTerm], t: f64) -> (f64, f64) {
    terms.iter().fold((0.0, 0.0), |(v, d), term| (v + term.value(t), d + term.derivative(t)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// `(x₁, x₂) ↦ (x₁, x₂ + f(x₁))`.
    VerticalShear { terms: Vec<TrigTerm> },
    /// `(x₁, x₂) ↦ (x₁ + g(x₂), x₂)`.
    HorizontalShear { terms: Vec<TrigTerm> },
    /// `x ↦ x + offset`.
    Translation { offset: [f64; 2] },
}

/// Row-major 2×2 matrix.
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Largest singular value, from the Frobenius norm and the determinant.
pub fn spectral_norm(m: &Mat2) -> f64 {
    let frob2 = m.iter().flatten().map(|v| v * v).sum::<f64>();
    let d = det(m);
    let disc = (frob2 * frob2 - 4.0 * d * d).max(0.0);
    ((frob2 + disc.sqrt()) / 2.0).sqrt()
}

impl Primitive {
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        match self {
            Primitive::VerticalShear { terms } => [p[0], p[1] + profile(terms, p[0]).0],
            Primitive::HorizontalShear { terms } => [p[0] + profile(terms, p[1]).0, p[1]],
            Primitive::Translation { offset } => [p[0] + offset[0], p[1] + offset[1]],
        }
    }

    /// Image and Jacobian at `p`.
    pub fn apply_with_jacobian(&self, p: [f64; 2]) -> ([f64; 2], Mat2) {
        match self {
            Primitive::VerticalShear { terms } => {
                let (v, d) = profile(terms, p[0]);
                ([p[0], p[1] + v], [[1.0, 0.0], [d, 1.0]])
            }
            Primitive::HorizontalShear { terms } => {
                let (v, d) = profile(terms, p[1]);
                ([p[0] + v, p[1]], [[1.0, d], [0.0, 1.0]])
            }
            Primitive::Translation { .. } => (self.apply(p), IDENTITY),
        }
    }

    /// Mean displacement over the unit square.
    pub fn mean_displacement(&self) -> [f64; 2] {
        match self {
            Primitive::VerticalShear { terms } => [0.0, terms.iter().map(TrigTerm::mean).sum()],
            Primitive::HorizontalShear { terms } => [terms.iter().map(TrigTerm::mean).sum(), 0.0],
            Primitive::Translation { offset } => *offset,
        }
    }
}

/// Composition of primitives, applied in list order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TorusMap {
    pub primitives: Vec<Primitive>,
}

impl TorusMap {
    pub fn new(primitives: Vec<Primitive>) -> Self {
        TorusMap { primitives }
    }

    /// `(x₁, x₂) ↦ (x₁, x₂ + sin 2πx₁)`.
    pub fn sine_shear() -> Self {
        TorusMap::new(vec![Primitive::VerticalShear { terms: vec![TrigTerm::sine(1.0, 1)] }])
    }

    pub fn translation(offset: [f64; 2]) -> Self {
        TorusMap::new(vec![Primitive::Translation { offset }])
    }

    /// Vertical then horizontal sine shear, each of amplitude `1/2π`.
    pub fn sine_twist() -> Self {
        let term = TrigTerm::sine(1.0 / TAU, 1);
        TorusMap::new(vec![
            Primitive::VerticalShear { terms: vec![term] },
            Primitive::HorizontalShear { terms: vec![term] },
        ])
    }

    pub const BUILTIN_NAMES: [&'static str; 3] = ["sine-shear", "translation", "sine-twist"];

    /// `translation` is the shift by `(0.3, 0)`.
    pub fn builtin(name: &str) -> Result<Self, TorusError> {
        match name {
            "sine-shear" => Ok(Self::sine_shear()),
            "translation" => Ok(Self::translation([0.3, 0.0])),
            "sine-twist" => Ok(Self::sine_twist()),
            _ => Err(TorusError::UnknownBuiltin(name.to_string())),
        }
    }

    /// `ψⁿ`.
    pub fn iterate(&self, n: usize) -> TorusMap {
        TorusMap::new(self.primitives.iter().cloned().cycle().take(n * self.primitives.len()).collect())
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        self.primitives.iter().fold(p, |q, prim| prim.apply(q))
    }

    pub fn apply_with_jacobian(&self, p: [f64; 2]) -> ([f64; 2], Mat2) {
        self.primitives.iter().fold((p, IDENTITY), |(q, jac), prim| {
            let (next, local) = prim.apply_with_jacobian(q);
            (next, mat_mul(&local, &jac))
        })
    }

    /// Mean displacement `∫∫ (ψ(x) − x) dx` over the unit square.
    ///
    /// Shears and translations are symplectic and isotopic to the identity,
    /// so the means of the primitives simply add.
    pub fn mean_displacement(&self) -> [f64; 2] {
        self.primitives.iter().fold([0.0, 0.0], |acc, prim| {
            let m = prim.mean_displacement();
            [acc[0] + m[0], acc[1] + m[1]]
        })
    }

    /// Both mean displacements vanish.
    pub fn is_hamiltonian(&self) -> bool {
        let m = self.mean_displacement();
        m[0].abs() < 1e-12 && m[1].abs() < 1e-12
    }

    /// `|ψ(p) − p|`.
    fn displacement(&self, p: [f64; 2]) -> f64 {
        let q = self.apply(p);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }
}

/// `max ‖dψⁿ(ξ)‖` over the `grid_res × grid_res` grid of start points in
/// `[0,1)²`, for every `n = 1..=n_max` at once.
pub fn jacobian_norms(map: &TorusMap, n_max: usize, grid_res: usize) -> Result<Vec<f64>, TorusError> {
    if n_max == 0 {
        return Err(TorusError::InvalidParameter("n must be at least 1"));
    }
    if grid_res < 2 {
        return Err(TorusError::InvalidParameter("grid_res must be at least 2"));
    }
    let step = 1.0 / grid_res as f64;
    let norms = (0..grid_res * grid_res)
        .into_par_iter()
        .fold(
            || vec![0.0f64; n_max],
            |mut acc, index| {
                let mut p = [(index / grid_res) as f64 * step, (index % grid_res) as f64 * step];
                let mut jac = IDENTITY;
                for slot in acc.iter_mut() {
                    let (next, local) = map.apply_with_jacobian(p);
                    jac = mat_mul(&local, &jac);
                    p = next;
                    *slot = slot.max(spectral_norm(&jac));
                }
                acc
            },
        )
        .reduce(|| vec![0.0f64; n_max], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect());
    Ok(norms)
}

/// `max ‖dψⁿ(ξ)‖` over the grid of start points.
pub fn jacobian_norm(map: &TorusMap, n: usize, grid_res: usize) -> Result<f64, TorusError> {
    Ok(jacobian_norms(map, n, grid_res)?[n - 1])
}

/// Like [`jacobian_norms`], doubling the grid from `start_res` until the
/// largest relative change is below [`GRID_REFINEMENT_TOL`] or the grid
/// reaches `max_res`. Returns the norms and the final resolution.
pub fn jacobian_norms_adaptive(
    map: &TorusMap,
    n_max: usize,
    start_res: usize,
    max_res: usize,
) -> Result<(Vec<f64>, usize), TorusError> {
    let mut res = start_res;
    let mut norms = jacobian_norms(map, n_max, res)?;
    while res * 2 <= max_res {
        let finer = jacobian_norms(map, n_max, res * 2)?;
        res *= 2;
        let change = norms.iter().zip(&finer).map(|(a, b)| (b - a).abs() / b.max(1.0)).fold(0.0, f64::max);
        norms = finer;
        if change < GRID_REFINEMENT_TOL {
            break;
        }
    }
    Ok((norms, res))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionPair {
    pub x: [f64; 2],
    pub y: [f64; 2],
    /// Straight path from `x` to `y` at the final refinement.
    pub path: Vec<[f64; 2]>,
    pub delta: f64,
    pub samples: usize,
}

impl ActionPair {
    pub fn path_length(&self) -> f64 {
        (self.y[0] - self.x[0]).hypot(self.y[1] - self.x[1])
    }
}

fn check_fixed(map: &TorusMap, name: &'static str, point: [f64; 2]) -> Result<(), TorusError> {
    let displacement = map.displacement(point);
    if displacement > FIXED_POINT_TOL {
        return Err(TorusError::NotFixedPoint { name, point, displacement });
    }
    Ok(())
}

/// Signed area of the loop `γ` followed by `ψ(γ)` backwards, with `γ` the
/// straight segment from `x` to `y` cut into `samples` pieces.
fn loop_area(map: &TorusMap, x: [f64; 2], y: [f64; 2], samples: usize) -> f64 {
    let point = |i: usize| {
        let t = i as f64 / samples as f64;
        [x[0] + t * (y[0] - x[0]), x[1] + t * (y[1] - x[1])]
    };
    let forward = (0..=samples).map(point);
    let back = (0..=samples).rev().map(|i| map.apply(point(i)));
    let ring: Vec<[f64; 2]> = forward.chain(back).collect();
    let n = ring.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (p, q) = (ring[i], ring[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    twice / 2.0
}

/// Action difference `δ(x, y, ψ)`: the signed area enclosed by the straight
/// path from `x` to `y` and its image, traversed backwards.
///
/// The path is refined by doubling from `samples` until two successive areas
/// agree to [`ACTION_TOL`].
pub fn action_difference(map: &TorusMap, x: [f64; 2], y: [f64; 2], samples: usize) -> Result<ActionPair, TorusError> {
    if samples < MIN_ACTION_SAMPLES {
        return Err(TorusError::InvalidParameter("samples must be at least 16"));
    }
    check_fixed(map, "x", x)?;
    check_fixed(map, "y", y)?;
    let mut m = samples;
    let mut previous = loop_area(map, x, y, m);
    loop {
        if m * 2 > MAX_ACTION_SAMPLES {
            let change = (loop_area(map, x, y, m) - previous).abs();
            return Err(TorusError::NoConvergence { samples: m, change });
        }
        m *= 2;
        let current = loop_area(map, x, y, m);
        if (current - previous).abs() < ACTION_TOL {
            let path = (0..=samples)
                .map(|i| {
                    let t = i as f64 / samples as f64;
                    [x[0] + t * (y[0] - x[0]), x[1] + t * (y[1] - x[1])]
                })
                .collect();
            return Ok(ActionPair { x, y, path, delta: current, samples: m });
        }
        previous = current;
    }
}

/// Zeros of a trig polynomial in `[0, 1)`, by sign changes on a fine grid
/// refined with bisection. Zeros of even multiplicity are missed.
fn profile_zeros(terms: &[TrigTerm]) -> Vec<f64> {
    const GRID: usize = 4096;
    let f = |t: f64| profile(terms, t).0;
    let mut zeros = Vec::new();
    for i in 0..GRID {
        let (mut lo, mut hi) = (i as f64 / GRID as f64, (i + 1) as f64 / GRID as f64);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            zeros.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() || fhi == 0.0 {
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        zeros.push(0.5 * (lo + hi));
    }
    zeros
}

/// Solves `ψ(p) = p` from `seed` by damped Gauss–Newton on `ψ(p) − p`.
fn refine_fixed_point(map: &TorusMap, seed: [f64; 2]) -> Option<[f64; 2]> {
    let mut p = seed;
    let mut lambda = 1e-3;
    for _ in 0..100 {
        let (q, jac) = map.apply_with_jacobian(p);
        let r = [q[0] - p[0], q[1] - p[1]];
        let norm = r[0].hypot(r[1]);
        if norm < FIXED_POINT_TOL * 1e-2 {
            return Some(p);
        }
        let j = [[jac[0][0] - 1.0, jac[0][1]], [jac[1][0], jac[1][1] - 1.0]];
        // (JᵀJ + λI) Δ = −Jᵀ r
        let a = [
            [j[0][0] * j[0][0] + j[1][0] * j[1][0] + lambda, j[0][0] * j[0][1] + j[1][0] * j[1][1]],
            [j[0][1] * j[0][0] + j[1][1] * j[1][0], j[0][1] * j[0][1] + j[1][1] * j[1][1] + lambda],
        ];
        let g = [-(j[0][0] * r[0] + j[1][0] * r[1]), -(j[0][1] * r[0] + j[1][1] * r[1])];
        let d = det(&a);
        if d.abs() < 1e-300 {
            return None;
        }
        let step = [(g[0] * a[1][1] - g[1] * a[0][1]) / d, (a[0][0] * g[1] - a[1][0] * g[0]) / d];
        let trial = [p[0] + step[0], p[1] + step[1]];
        if map.displacement(trial) < norm {
            p = trial;
            lambda = (lambda * 0.3).max(1e-12);
        } else {
            lambda *= 10.0;
            if lambda > 1e8 {
                return None;
            }
        }
    }
    (map.displacement(p) <= FIXED_POINT_TOL).then_some(p)
}

/// Fixed points of `ψ` in `[0, 1)²`.
///
/// A single shear fixes the lines over the zeros of its profile; one point
/// per line is returned (on `x₂ = 0` or `x₁ = 0`). Other maps are searched
/// with Newton iterations from a grid of seeds.
pub fn fixed_points(map: &TorusMap) -> Vec<[f64; 2]> {
    match map.primitives.as_slice() {
        [] => vec![[0.0, 0.0]],
        [Primitive::VerticalShear { terms }] => profile_zeros(terms).into_iter().map(|t| [t, 0.0]).collect(),
        [Primitive::HorizontalShear { terms }] => profile_zeros(terms).into_iter().map(|t| [0.0, t]).collect(),
        _ => {
            const SEEDS: usize = 12;
            let mut found: Vec<[f64; 2]> = Vec::new();
            for i in 0..SEEDS {
                for j in 0..SEEDS {
                    let seed = [(i as f64 + 0.5) / SEEDS as f64, (j as f64 + 0.5) / SEEDS as f64];
                    let Some(p) = refine_fixed_point(map, seed) else { continue };
                    let shift = [p[0].floor(), p[1].floor()];
                    let p = [p[0] - shift[0], p[1] - shift[1]];
                    // Integer shifts of a fixed point are fixed only if ψ commutes
                    // with them, which all primitives do.
                    if map.displacement(p) > FIXED_POINT_TOL {
                        continue;
                    }
                    if !found.iter().any(|q| (q[0] - p[0]).hypot(q[1] - p[1]) < 1e-7) {
                        found.push(p);
                    }
                }
            }
            found.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            found
        }
    }
}

/// The pair of fixed points with the largest `|δ|`, ordered so that `δ > 0`.
pub fn best_action_pair(map: &TorusMap, samples: usize) -> Option<ActionPair> {
    let points = fixed_points(map);
    let mut best: Option<ActionPair> = None;
    for (i, &x) in points.iter().enumerate() {
        for &y in &points[i + 1..] {
            let Ok(pair) = action_difference(map, x, y, samples) else { continue };
            if best.as_ref().is_none_or(|b| pair.delta.abs() > b.delta.abs()) {
                best = Some(pair);
            }
        }
    }
    let pair = best?;
    if pair.delta > 0.0 {
        Some(pair)
    } else if pair.delta < 0.0 {
        action_difference(map, pair.y, pair.x, samples).ok()
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthSample {
    pub n: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub samples: Vec<GrowthSample>,
    pub grid_res: usize,
    /// Least-squares slope of the norm against `n`.
    pub slope: f64,
    pub intercept: f64,
    pub hamiltonian: bool,
    pub lattice_scale: f64,
    /// `(1 + √2)·m_L`.
    pub mu: f64,
    pub action: Option<ActionPair>,
    /// `δ / ((1 + |γ|)·μ)`, when a pair with `δ > 0` is available.
    pub kappa: Option<f64>,
    /// Every sample satisfies `norm ≥ κ·n` (vacuous without `κ`).
    pub dominated: bool,
}

/// Ordinary least-squares fit `y ≈ slope·x + intercept`.
pub fn fit_line(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    if points.len() < 2 {
        return (0.0, points.first().map_or(0.0, |p| p.1));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Options for [`growth_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthOptions {
    pub n_max: usize,
    /// Fixed grid; `None` refines adaptively from [`DEFAULT_GRID_RES`].
    pub grid_res: Option<usize>,
    pub lattice_scale: f64,
    /// Fixed points to use instead of searching.
    pub pair: Option<([f64; 2], [f64; 2])>,
    pub action_samples: usize,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        GrowthOptions { n_max: 200, grid_res: None, lattice_scale: 1.0, pair: None, action_samples: 64 }
    }
}

/// Measures `‖dψⁿ‖` for `n = 1..=n_max` and, for Hamiltonian maps with a
/// fixed-point pair of positive action difference, the linear lower bound
/// `κ·n` it must dominate.
pub fn growth_report(map: &TorusMap, options: &GrowthOptions) -> Result<GrowthReport, TorusError> {
    if options.lattice_scale <= 0.0 || !options.lattice_scale.is_finite() {
        return Err(TorusError::InvalidParameter("lattice scale must be positive"));
    }
    let (norms, grid_res) = match options.grid_res {
        Some(res) => (jacobian_norms(map, options.n_max, res)?, res),
        None => jacobian_norms_adaptive(map, options.n_max, DEFAULT_GRID_RES, MAX_ADAPTIVE_GRID_RES)?,
    };
    let samples: Vec<GrowthSample> =
        norms.iter().enumerate().map(|(i, &norm)| GrowthSample { n: i + 1, norm }).collect();
    let points: Vec<(f64, f64)> = samples.iter().map(|s| (s.n as f64, s.norm)).collect();
    let (slope, intercept) = fit_line(&points);

    let hamiltonian = map.is_hamiltonian();
    let mu = (1.0 + SQRT_2) * options.lattice_scale;
    let action = if !hamiltonian {
        None
    } else if let Some((x, y)) = options.pair {
        let pair = action_difference(map, x, y, options.action_samples.max(MIN_ACTION_SAMPLES))?;
        (pair.delta > 0.0).then_some(pair)
    } else {
        best_action_pair(map, options.action_samples.max(MIN_ACTION_SAMPLES))
    };
    let kappa = action.as_ref().map(|pair| pair.delta / ((1.0 + pair.path_length()) * mu));
    let dominated = kappa.is_none_or(|k| samples.iter().all(|s| s.norm >= k * s.n as f64));

    Ok(GrowthReport {
        samples,
        grid_res,
        slope,
        intercept,
        hamiltonian,
        lattice_scale: options.lattice_scale,
        mu,
        action,
        kappa,
        dominated,
    })
}

/// `(t + √(t² + 4))/2`, the norm of `[[1, 0], [t, 1]]`.
pub fn unipotent_norm(t: f64) -> f64 {
    (t.abs() + (t * t + 4.0).sqrt()) / 2.0
}

/// `1/π`: the action difference of the sine shear between `(0,0)` and `(1/2,0)`.
pub const SINE_SHEAR_ACTION: f64 = 1.0 / PI;
