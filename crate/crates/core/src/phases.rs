//! Catalog of phase functions `φ: T^m → R` with analytic gradients and smoothness
//! metadata, plus sampled estimates of the gradient modulus of continuity and of the
//! measure of the gradient range `∇φ(T^m)`.

use std::collections::HashSet;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::growth::least_squares;
use crate::torus_spectra::{MAX_DIMENSION, MAX_POINTS};
use crate::{Error, Result};

/// Regularity `C^{ν,α}`: `ν` continuous derivatives, the `ν`-th ones `α`-Hölder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessBudget {
    pub nu: u32,
    pub alpha: f64,
}

impl SmoothnessBudget {
    pub fn new(nu: u32, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha={alpha} outside [0, 1]")));
        }
        Ok(Self { nu, alpha })
    }

    /// `ν + α`.
    pub fn order(&self) -> f64 {
        self.nu as f64 + self.alpha
    }

    /// Hölder exponent of the gradient implied by the budget, if the phase is `C^1`.
    pub fn gradient_exponent(&self) -> Option<f64> {
        match self.nu {
            0 => None,
            1 if self.alpha > 0.0 => Some(self.alpha),
            1 => None,
            _ => Some(1.0),
        }
    }
}

/// Smoothness class recorded on a phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Smoothness {
    /// Real-analytic (in every `C^{ν,α}`).
    Analytic,
    Holder(SmoothnessBudget),
}

impl Smoothness {
    /// A finite budget for theory checks in dimension `m`. Analytic phases get
    /// `C^{m+2}`, which clears every hypothesis used for `1 <= p <= 2`.
    pub fn theory_budget(&self, m: usize) -> SmoothnessBudget {
        match *self {
            Smoothness::Analytic => SmoothnessBudget { nu: m as u32 + 2, alpha: 0.0 },
            Smoothness::Holder(b) => b,
        }
    }
}

/// Shapes of `φ₀` on the circle used by separable phases `φ(t) = Σ_j φ₀(t_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Profile {
    /// `φ₀(t) = cos t`.
    Cosine,
    /// `φ₀(t) = Σ_{n=1}^{depth} 2^{-n(1+α)} cos(2^n t)`.
    Weierstrass { alpha: f64, depth: u32 },
}

impl Profile {
    fn value(&self, t: f64) -> f64 {
        match *self {
            Profile::Cosine => t.cos(),
            Profile::Weierstrass { alpha, depth } => (1..=depth)
                .map(|n| {
                    let f = (1u64 << n) as f64;
                    f.powf(-(1.0 + alpha)) * (f * t).cos()
                })
                .sum(),
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        match *self {
            Profile::Cosine => -t.sin(),
            Profile::Weierstrass { alpha, depth } => -(1..=depth)
                .map(|n| {
                    let f = (1u64 << n) as f64;
                    f.powf(-alpha) * (f * t).sin()
                })
                .sum::<f64>(),
        }
    }

    /// `sup |φ₀'|`.
    fn derivative_bound(&self) -> f64 {
        match *self {
            Profile::Cosine => 1.0,
            Profile::Weierstrass { alpha, depth } => (1..=depth).map(|n| ((1u64 << n) as f64).powf(-alpha)).sum(),
        }
    }

    fn max_harmonic(&self) -> u64 {
        match *self {
            Profile::Cosine => 1,
            Profile::Weierstrass { depth, .. } => 1 << depth,
        }
    }

    /// `(α, c)` with `|φ₀'(s) - φ₀'(t)| <= c |s - t|^α`.
    fn derivative_holder(&self) -> (f64, f64) {
        match *self {
            Profile::Cosine => (1.0, 1.0),
            Profile::Weierstrass { alpha, depth } => (alpha, weierstrass_holder_constant(alpha, depth)),
        }
    }

    fn smoothness(&self) -> Smoothness {
        match *self {
            Profile::Cosine => Smoothness::Analytic,
            Profile::Weierstrass { alpha, .. } => Smoothness::Holder(SmoothnessBudget { nu: 1, alpha }),
        }
    }

    fn key(&self) -> String {
        match *self {
            Profile::Cosine => "cosine".to_string(),
            Profile::Weierstrass { alpha, depth } => format!("weierstrass(alpha={alpha:?},depth={depth})"),
        }
    }
}

/// Upper bound for `sup_d Σ_n 2^{-nα} min(2, 2^n d) / d^α`, which dominates the
/// `α`-Hölder constant of the Weierstrass derivative since `|sin a - sin b| <= min(2, |a-b|)`.
///
/// On each log-grid interval `[d_i, d_{i+1}]` the numerator is bounded at `d_{i+1}` and the
/// denominator at `d_i`. Below the grid the ratio grows like `d^{1-α}`; above it the
/// numerator saturates and the ratio decreases.
fn weierstrass_holder_constant(alpha: f64, depth: u32) -> f64 {
    let numerator = |d: f64| -> f64 {
        (1..=depth)
            .map(|n| {
                let f = (1u64 << n) as f64;
                f.powf(-alpha) * (f * d).min(2.0)
            })
            .sum()
    };
    let lo = 2f64.powi(-(depth as i32) - 6);
    let hi = 16.0;
    let steps = 4000;
    let ratio = (hi / lo).powf(1.0 / steps as f64);
    let mut best = 0.0f64;
    let mut d = lo;
    for _ in 0..steps {
        let next = d * ratio;
        best = best.max(numerator(next) / d.powf(alpha));
        d = next;
    }
    best.max(numerator(lo) / lo.powf(alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
enum Shape {
    Constant { value: f64 },
    Linear { k: Vec<i64> },
    Separable { profile: Profile },
}

/// A named real phase on `T^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    family: String,
    m: usize,
    shape: Shape,
    smoothness: Smoothness,
}

/// Parameters accepted by [`builtin`]; unset fields take family defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub value: Option<f64>,
    pub k: Option<Vec<i64>>,
    pub alpha: Option<f64>,
    pub depth: Option<u32>,
    /// Base profile of `tensor_sum`: `cosine` or `weierstrass`.
    pub base: Option<String>,
}

pub const DEFAULT_WEIERSTRASS_ALPHA: f64 = 0.5;
pub const DEFAULT_WEIERSTRASS_DEPTH: u32 = 12;

/// Builds a catalog phase.
pub fn builtin(name: &str, m: usize, params: &PhaseParams) -> Result<Phase> {
    if m == 0 || m > MAX_DIMENSION {
        return Err(Error::InvalidPhaseParams(format!("dimension m={m} outside 1..={MAX_DIMENSION}")));
    }
    let one_dimensional = |family: &str| {
        if m == 1 {
            Ok(())
        } else {
            Err(Error::InvalidPhaseParams(format!("{family} is defined on T only; use tensor_sum for m={m}")))
        }
    };
    let (shape, smoothness) = match name {
        "constant" => (Shape::Constant { value: params.value.unwrap_or(0.0) }, Smoothness::Analytic),
        "linear" => {
            let k = params.k.clone().unwrap_or_else(|| vec![1; m]);
            if k.len() != m {
                return Err(Error::InvalidPhaseParams(format!("linear needs {m} integer slopes, got {}", k.len())));
            }
            (Shape::Linear { k }, Smoothness::Analytic)
        }
        "cosine" => {
            one_dimensional(name)?;
            (Shape::Separable { profile: Profile::Cosine }, Smoothness::Analytic)
        }
        "cosine_sum" => (Shape::Separable { profile: Profile::Cosine }, Smoothness::Analytic),
        "weierstrass" => {
            one_dimensional(name)?;
            let profile = weierstrass_profile(params)?;
            (Shape::Separable { profile }, profile.smoothness())
        }
        "tensor_sum" => {
            let profile = match params.base.as_deref().unwrap_or("cosine") {
                "cosine" => Profile::Cosine,
                "weierstrass" => weierstrass_profile(params)?,
                other => {
                    return Err(Error::InvalidPhaseParams(format!(
                        "tensor_sum base must be cosine or weierstrass, got {other}"
                    )))
                }
            };
            (Shape::Separable { profile }, profile.smoothness())
        }
        other => return Err(Error::UnknownPhase(other.to_string())),
    };
    Ok(Phase { family: name.to_string(), m, shape, smoothness })
}

fn weierstrass_profile(params: &PhaseParams) -> Result<Profile> {
    let alpha = params.alpha.unwrap_or(DEFAULT_WEIERSTRASS_ALPHA);
    let depth = params.depth.unwrap_or(DEFAULT_WEIERSTRASS_DEPTH);
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidPhaseParams(format!("weierstrass alpha={alpha} outside (0, 1]")));
    }
    if depth == 0 || depth > 24 {
        return Err(Error::InvalidPhaseParams(format!("weierstrass depth={depth} outside 1..=24")));
    }
    Ok(Profile::Weierstrass { alpha, depth })
}

impl Phase {
    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The frequency `λk` when `e^{iλφ}` is a single character, i.e. `φ` is linear and `λk`
    /// is integral.
    pub fn character(&self, lambda: f64) -> Option<Vec<i64>> {
        match &self.shape {
            Shape::Linear { k } if lambda.fract() == 0.0 && lambda.abs() < 1e15 => {
                Some(k.iter().map(|&ka| ka * lambda as i64).collect())
            }
            _ => None,
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// Stable identifier including every parameter, used for cache keys and output.
    pub fn key(&self) -> String {
        let detail = match &self.shape {
            Shape::Constant { value } => format!("(value={value:?})"),
            Shape::Linear { k } => {
                let ks: Vec<String> = k.iter().map(i64::to_string).collect();
                format!("(k={})", ks.join(";"))
            }
            Shape::Separable { profile } => match (self.family.as_str(), profile) {
                ("cosine" | "cosine_sum", _) => String::new(),
                ("weierstrass", Profile::Weierstrass { alpha, depth }) => format!("(alpha={alpha:?},depth={depth})"),
                _ => format!("({})", profile.key()),
            },
        };
        format!("{}{}", self.family, detail)
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        match &self.shape {
            Shape::Constant { value } => *value,
            Shape::Linear { k } => k.iter().zip(t).map(|(&kj, &tj)| kj as f64 * tj).sum(),
            Shape::Separable { profile } => t.iter().map(|&tj| profile.value(tj)).sum(),
        }
    }

    pub fn grad(&self, t: &[f64], out: &mut [f64]) {
        match &self.shape {
            Shape::Constant { .. } => out[..self.m].fill(0.0),
            Shape::Linear { k } => {
                for (o, &kj) in out.iter_mut().zip(k) {
                    *o = kj as f64;
                }
            }
            Shape::Separable { profile } => {
                for (o, &tj) in out.iter_mut().zip(t) {
                    *o = profile.derivative(tj);
                }
            }
        }
    }

    /// `G = max_j sup |∂φ/∂t_j|`.
    pub fn gradient_bound(&self) -> f64 {
        match &self.shape {
            Shape::Constant { .. } => 0.0,
            Shape::Linear { k } => k.iter().map(|kj| kj.unsigned_abs() as f64).fold(0.0, f64::max),
            Shape::Separable { profile } => profile.derivative_bound(),
        }
    }

    /// `sup |∇φ|` in the Euclidean norm.
    pub fn gradient_norm_bound(&self) -> f64 {
        match &self.shape {
            Shape::Constant { .. } => 0.0,
            Shape::Linear { k } => k.iter().map(|&kj| (kj * kj) as f64).sum::<f64>().sqrt(),
            Shape::Separable { profile } => (self.m as f64).sqrt() * profile.derivative_bound(),
        }
    }

    /// Highest trigonometric frequency present in `φ` itself (0 for affine phases).
    pub fn max_harmonic(&self) -> u64 {
        match &self.shape {
            Shape::Separable { profile } => profile.max_harmonic(),
            _ => 0,
        }
    }

    /// `(α, c)` with `|∂_jφ(s) - ∂_jφ(t)| <= c |s - t|^α` for every axis `j`.
    pub fn axis_gradient_holder(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Constant { .. } | Shape::Linear { .. } => (1.0, 0.0),
            Shape::Separable { profile } => profile.derivative_holder(),
        }
    }

    /// `(α, C)` with `|∇φ(s) - ∇φ(t)| <= C |s - t|^α` (Euclidean).
    pub fn gradient_modulus_bound(&self) -> (f64, f64) {
        let (alpha, c) = self.axis_gradient_holder();
        (alpha, c * (self.m as f64).powf((1.0 - alpha) / 2.0))
    }

    /// `max_j |φ(t + 2π e_j) - φ(t) mod 2π|` over `samples` pseudo-random points: phases
    /// are maps `T^m → T`, so affine phases with integer slopes count as periodic.
    pub fn periodicity_defect(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let mut t = [0.0; MAX_DIMENSION];
        for _ in 0..samples {
            for tj in t.iter_mut().take(self.m) {
                *tj = rng.gen_range(0.0..TAU);
            }
            for j in 0..self.m {
                let keep = t[j];
                t[j] = 0.0;
                let at_zero = self.eval(&t[..self.m]);
                t[j] = TAU;
                let at_period = self.eval(&t[..self.m]);
                t[j] = keep;
                let d = at_period - at_zero;
                worst = worst.max((d - TAU * (d / TAU).round()).abs());
            }
        }
        worst
    }
}

/// Description of a catalog family, for listings.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyInfo {
    pub name: &'static str,
    pub dimensions: &'static str,
    pub smoothness: &'static str,
    pub formula: &'static str,
    pub params: Vec<ParamInfo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamInfo {
    pub key: &'static str,
    pub kind: &'static str,
    pub default: &'static str,
}

pub fn catalog() -> Vec<FamilyInfo> {
    let m = ParamInfo { key: "m", kind: "integer 1..=4", default: "1" };
    let alpha = ParamInfo { key: "alpha", kind: "real in (0,1]", default: "0.5" };
    let depth = ParamInfo { key: "depth", kind: "integer 1..=24", default: "12" };
    vec![
        FamilyInfo {
            name: "constant",
            dimensions: "any",
            smoothness: "analytic",
            formula: "phi(t) = c",
            params: vec![m.clone(), ParamInfo { key: "value", kind: "real", default: "0" }],
        },
        FamilyInfo {
            name: "linear",
            dimensions: "any",
            smoothness: "analytic",
            formula: "phi(t) = (k, t)",
            params: vec![
                m.clone(),
                ParamInfo { key: "k", kind: "comma-separated integers, length m", default: "1,...,1" },
            ],
        },
        FamilyInfo {
            name: "cosine",
            dimensions: "1",
            smoothness: "analytic",
            formula: "phi(t) = cos t",
            params: vec![],
        },
        FamilyInfo {
            name: "cosine_sum",
            dimensions: "any",
            smoothness: "analytic",
            formula: "phi(t) = cos t_1 + ... + cos t_m",
            params: vec![m.clone()],
        },
        FamilyInfo {
            name: "weierstrass",
            dimensions: "1",
            smoothness: "C^{1,alpha}",
            formula: "phi(t) = sum_{n=1}^{depth} 2^{-n(1+alpha)} cos(2^n t)",
            params: vec![alpha.clone(), depth.clone()],
        },
        FamilyInfo {
            name: "tensor_sum",
            dimensions: "any",
            smoothness: "that of the base profile",
            formula: "phi(t) = phi0(t_1) + ... + phi0(t_m)",
            params: vec![m, ParamInfo { key: "base", kind: "cosine | weierstrass", default: "cosine" }, alpha, depth],
        },
    ]
}

/// Sampling controls for [`modulus_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusFitOptions {
    /// Random pairs per scale.
    pub pairs_per_scale: usize,
    /// Grid points per axis for axis-aligned pairs; `None` picks the coarsest
    /// power of two with spacing `<= min δ / 8`.
    pub resolution: Option<usize>,
    pub seed: u64,
}

impl Default for ModulusFitOptions {
    fn default() -> Self {
        Self { pairs_per_scale: 1_000_000, resolution: None, seed: 0x5eed_0001 }
    }
}

/// Sampled modulus of continuity of `∇φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusFit {
    /// Scales in increasing order.
    pub scales: Vec<f64>,
    /// `ω(δ_i)`, nondecreasing.
    pub omega: Vec<f64>,
    /// Log-log slope of `ω` against `δ`; `None` when `ω` vanishes.
    pub alpha_fit: Option<f64>,
    pub log_intercept: Option<f64>,
}

impl ModulusFit {
    /// Smallest `c` with `ω(δ_i) <= c δ_i^α` on every fitted scale.
    pub fn constant_for(&self, alpha: f64) -> f64 {
        self.scales.iter().zip(&self.omega).map(|(d, w)| w / d.powf(alpha)).fold(0.0, f64::max)
    }
}

/// Estimates `ω(∇φ, δ) = sup_{|t₁-t₂| <= δ} |∇φ(t₁) - ∇φ(t₂)|` at each scale.
///
/// Scales must be positive and strictly decreasing. Half the random pairs sit at distance
/// exactly `δ`, half at a uniform fraction of it; axis-aligned grid pairs are added on top.
pub fn modulus_fit(phase: &Phase, scales: &[f64], options: &ModulusFitOptions) -> Result<ModulusFit> {
    if scales.is_empty() {
        return Err(Error::InvalidArgument("modulus_fit needs at least one scale".into()));
    }
    if scales.iter().any(|&d| !(d > 0.0 && d.is_finite())) || scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("scales must be positive and strictly decreasing".into()));
    }
    let min_scale = *scales.last().unwrap();
    let resolution = match options.resolution {
        Some(r) => r,
        None => ((8.0 * TAU / min_scale).ceil() as usize).next_power_of_two(),
    };
    let spacing = TAU / resolution as f64;
    if spacing > min_scale / 8.0 * (1.0 + 1e-12) {
        return Err(Error::ScaleBelowResolution { scale: min_scale, spacing });
    }

    let raw: Vec<f64> = scales
        .iter()
        .enumerate()
        .map(|(si, &delta)| {
            let random = random_pair_sup(phase, delta, options.pairs_per_scale, options.seed ^ ((si as u64) << 40));
            let aligned = aligned_pair_sup(phase, delta, resolution, options.seed.wrapping_add(si as u64));
            random.max(aligned)
        })
        .collect();

    // ascending order, running max from below keeps the table nondecreasing
    let mut pairs: Vec<(f64, f64)> = scales.iter().copied().zip(raw).collect();
    pairs.reverse();
    let mut running = 0.0f64;
    for (_, w) in pairs.iter_mut() {
        running = running.max(*w);
        *w = running;
    }
    let (asc_scales, omega): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();

    let floor = 1e-14 * (1.0 + phase.gradient_norm_bound());
    let points: Vec<(f64, f64)> =
        asc_scales.iter().zip(&omega).filter(|(_, &w)| w > floor).map(|(d, w)| (d.ln(), w.ln())).collect();
    let (alpha_fit, log_intercept) = if points.len() >= 2 {
        let fit = least_squares(&points);
        (Some(fit.slope), Some(fit.intercept))
    } else {
        (None, None)
    };
    Ok(ModulusFit { scales: asc_scales, omega, alpha_fit, log_intercept })
}

const PAIRS_PER_TASK: usize = 1 << 14;

fn random_pair_sup(phase: &Phase, delta: f64, pairs: usize, seed: u64) -> f64 {
    let m = phase.m();
    let tasks = pairs.div_ceil(PAIRS_PER_TASK);
    (0..tasks)
        .into_par_iter()
        .map(|task| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (task as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let count = PAIRS_PER_TASK.min(pairs - task * PAIRS_PER_TASK);
            let mut a = [0.0; MAX_DIMENSION];
            let mut b = [0.0; MAX_DIMENSION];
            let mut ga = [0.0; MAX_DIMENSION];
            let mut gb = [0.0; MAX_DIMENSION];
            let mut best = 0.0f64;
            for i in 0..count {
                let radius = if i % 2 == 0 { delta } else { delta * rng.gen::<f64>() };
                let dir = random_direction(&mut rng, m);
                for j in 0..m {
                    a[j] = rng.gen_range(0.0..TAU);
                    b[j] = a[j] + radius * dir[j];
                }
                phase.grad(&a[..m], &mut ga);
                phase.grad(&b[..m], &mut gb);
                best = best.max(distance(&ga[..m], &gb[..m]));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

fn random_direction(rng: &mut ChaCha8Rng, m: usize) -> [f64; MAX_DIMENSION] {
    let mut v = [0.0; MAX_DIMENSION];
    if m == 1 {
        v[0] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        return v;
    }
    loop {
        let mut norm2 = 0.0;
        for x in v.iter_mut().take(m) {
            *x = rng.gen_range(-1.0..1.0);
            norm2 += *x * *x;
        }
        if norm2 > 1e-6 && norm2 <= 1.0 {
            let norm = norm2.sqrt();
            v.iter_mut().take(m).for_each(|x| *x /= norm);
            return v;
        }
    }
}

fn aligned_pair_sup(phase: &Phase, delta: f64, resolution: usize, seed: u64) -> f64 {
    let m = phase.m();
    let h = TAU / resolution as f64;
    let q = ((delta / h).floor() as usize).max(1);
    let shift = q as f64 * h;
    let bases: Vec<[f64; MAX_DIMENSION]> = if m == 1 {
        (0..resolution).map(|j| [j as f64 * h, 0.0, 0.0, 0.0]).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..1usize << 16)
            .map(|_| {
                let mut t = [0.0; MAX_DIMENSION];
                for tj in t.iter_mut().take(m) {
                    *tj = rng.gen_range(0..resolution) as f64 * h;
                }
                t
            })
            .collect()
    };
    bases
        .par_iter()
        .map(|base| {
            let mut ga = [0.0; MAX_DIMENSION];
            let mut gb = [0.0; MAX_DIMENSION];
            phase.grad(&base[..m], &mut ga);
            let mut best = 0.0f64;
            for axis in 0..m {
                let mut other = *base;
                other[axis] += shift;
                phase.grad(&other[..m], &mut gb);
                best = best.max(distance(&ga[..m], &gb[..m]));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Outer-covering estimate of `|∇φ(T^m)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientRange {
    pub m: usize,
    pub resolution: usize,
    pub measure: f64,
    /// Side of the covering cells; 0 when the gradient is constant.
    pub cell_size: f64,
    /// Integer coordinates of covering cells, `m` per cell, sorted.
    pub cells: Vec<i64>,
}

impl GradientRange {
    pub fn cell_count(&self) -> usize {
        self.cells.len().checked_div(self.m).unwrap_or(0)
    }
}

/// Covers the image of the `resolution^m` grid by cells of side `ω(h) + s`, where `ω(h)`
/// and the image spacing `s` are both estimated by the largest gradient jump between
/// neighbouring nodes.
pub fn gradient_range(phase: &Phase, resolution: usize) -> Result<GradientRange> {
    if resolution < 64 {
        return Err(Error::InvalidArgument(format!("gradient_range resolution {resolution} < 64")));
    }
    let m = phase.m();
    let total = resolution
        .checked_pow(m as u32)
        .filter(|&t| t <= MAX_POINTS)
        .ok_or_else(|| Error::InvalidArgument(format!("resolution {resolution}^{m} too large")))?;
    let h = TAU / resolution as f64;

    let node = |index: usize, out: &mut [f64; MAX_DIMENSION]| {
        let mut rest = index;
        for a in (0..m).rev() {
            out[a] = (rest % resolution) as f64 * h;
            rest /= resolution;
        }
    };
    let gradients: Vec<f64> = (0..total)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut t = [0.0; MAX_DIMENSION];
            let mut g = [0.0; MAX_DIMENSION];
            node(i, &mut t);
            phase.grad(&t[..m], &mut g);
            g.into_iter().take(m)
        })
        .collect();

    let jump = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut worst = 0.0f64;
            let mut stride = 1usize;
            for _ in 0..m {
                let coord = (i / stride) % resolution;
                let neighbour = if coord + 1 == resolution { i + stride - resolution * stride } else { i + stride };
                worst = worst.max(distance(&gradients[i * m..i * m + m], &gradients[neighbour * m..neighbour * m + m]));
                stride *= resolution;
            }
            worst
        })
        .reduce(|| 0.0, f64::max);

    if jump <= 1e-12 * (1.0 + phase.gradient_norm_bound()) {
        return Ok(GradientRange { m, resolution, measure: 0.0, cell_size: 0.0, cells: Vec::new() });
    }
    let cell = 2.0 * jump;
    let set: HashSet<[i64; MAX_DIMENSION]> = gradients
        .par_chunks(m * 4096)
        .map(|chunk| {
            chunk
                .chunks(m)
                .map(|g| {
                    let mut c = [0i64; MAX_DIMENSION];
                    for (ca, ga) in c.iter_mut().zip(g) {
                        *ca = (ga / cell).floor() as i64;
                    }
                    c
                })
                .collect::<HashSet<_>>()
        })
        .reduce(HashSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    let mut sorted: Vec<[i64; MAX_DIMENSION]> = set.into_iter().collect();
    sorted.sort_unstable();
    let count = sorted.len();
    let cells = sorted.into_iter().flat_map(|c| c.into_iter().take(m)).collect();
    Ok(GradientRange { m, resolution, measure: count as f64 * cell.powi(m as i32), cell_size: cell, cells })
}

/// Default dyadic scales `π 2^{-i}` for `i = 2..=9`, decreasing.
pub fn default_scales() -> Vec<f64> {
    (2..=9).map(|i| PI * 2f64.powi(-i)).collect()
}
