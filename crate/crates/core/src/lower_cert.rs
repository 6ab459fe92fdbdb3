//! Lower bounds for `‖e^{iλφ}‖_{A_p}` from the measure of the gradient range.
//!
//! Around every frequency `u ∈ λ∇φ(T^m)` a triangle window of half-edge `δ_λ` catches at
//! least half of the window mass, where `δ_λ` solves `χ(2√m δ_λ) = 1/(2cλ)` for
//! `χ(δ) = δ ω(δ)`. Summing these concentrations over the lattice points of `λW` gives
//! `‖e^{iλφ}‖_{A_p} >= ½ c_m δ_λ^m λ^{m/p} |W|^{1/p}` with `c_m = ½ (2π)^{-m}`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apnorm::{resolved_spectrum, GridPolicy, NormEstimate};
use crate::phases::{default_scales, gradient_range, modulus_fit, ModulusFit, ModulusFitOptions, Phase};
use crate::torus_spectra::{lp_sum, Spectrum, MAX_DIMENSION};
use crate::{Error, Result};

pub use crate::phases::GradientRange;

/// Triangle function `Δ_J(t) = Π_j max(1 - |t_j - c_j|/δ, 0)` on the cube of half-edge `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleWindow {
    pub center: Vec<f64>,
    pub delta: f64,
}

impl TriangleWindow {
    pub fn new(center: Vec<f64>, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || center.is_empty() {
            return Err(Error::InvalidArgument(format!("triangle window needs delta > 0, got {delta}")));
        }
        Ok(Self { center, delta })
    }

    pub fn m(&self) -> usize {
        self.center.len()
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        self.center.iter().zip(t).map(|(c, x)| (1.0 - (x - c).abs() / self.delta).max(0.0)).product()
    }

    /// `|Δ̂_J(u)|`, which does not depend on the center.
    pub fn transform_modulus(&self, u: &[f64]) -> f64 {
        triangle_hat(self.delta, u)
    }
}

fn triangle_hat_1d(delta: f64, u: f64) -> f64 {
    let x = 0.5 * u * delta;
    let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
    delta / TAU * sinc * sinc
}

/// `Δ̂_{(-δ,δ)^m}(u) = Π_j (δ/2π) (sin(u_jδ/2) / (u_jδ/2))²`.
pub fn triangle_hat(delta: f64, u: &[f64]) -> f64 {
    u.iter().map(|&uj| triangle_hat_1d(delta, uj)).product()
}

/// A modulus of continuity `ω` used to define `χ(δ) = δ ω(δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusModel {
    /// `ω(δ) = δ^α`.
    Power { alpha: f64 },
    /// Piecewise-linear through `(0, 0)` and the tabulated points; undefined past the
    /// last scale.
    Tabulated { scales: Vec<f64>, omega: Vec<f64> },
}

impl ModulusModel {
    pub fn from_fit(fit: &ModulusFit) -> Self {
        ModulusModel::Tabulated { scales: fit.scales.clone(), omega: fit.omega.clone() }
    }

    pub fn omega(&self, delta: f64) -> Option<f64> {
        match self {
            ModulusModel::Power { alpha } => Some(delta.powf(*alpha)),
            ModulusModel::Tabulated { scales, omega } => {
                if delta < 0.0 || delta > *scales.last()? {
                    return None;
                }
                let (mut x0, mut y0) = (0.0, 0.0);
                for (&x1, &y1) in scales.iter().zip(omega) {
                    if delta <= x1 {
                        return Some(y0 + (y1 - y0) * (delta - x0) / (x1 - x0));
                    }
                    (x0, y0) = (x1, y1);
                }
                Some(y0)
            }
        }
    }

    pub fn chi(&self, delta: f64) -> Option<f64> {
        self.omega(delta).map(|w| delta * w)
    }

    /// Exponent of the power law, if any.
    pub fn power_exponent(&self) -> Option<f64> {
        match self {
            ModulusModel::Power { alpha } => Some(*alpha),
            ModulusModel::Tabulated { .. } => None,
        }
    }
}

/// `δ` with `χ(δ) = y`: closed form `y^{1/(1+α)}` for power moduli, monotone bisection to
/// `1e-12` relative residual for tables.
pub fn chi_inverse(model: &ModulusModel, y: f64) -> Result<f64> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::OutsideChiRange(y));
    }
    match model {
        ModulusModel::Power { alpha } => Ok(y.powf(1.0 / (1.0 + alpha))),
        ModulusModel::Tabulated { scales, .. } => {
            let top = *scales.last().ok_or(Error::OutsideChiRange(y))?;
            let chi = |d: f64| model.chi(d).expect("inside table");
            if chi(top) < y {
                return Err(Error::OutsideChiRange(y));
            }
            let (mut lo, mut hi) = (0.0, top);
            for _ in 0..400 {
                let mid = 0.5 * (lo + hi);
                let value = chi(mid);
                if (value - y).abs() <= 1e-13 * y {
                    return Ok(mid);
                }
                if value < y {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            let mid = 0.5 * (lo + hi);
            if (chi(mid) - y).abs() <= 1e-12 * y {
                Ok(mid)
            } else {
                Err(Error::OutsideChiRange(y))
            }
        }
    }
}

/// Window half-edge `δ_λ` solving `χ(2√m δ_λ) = 1/(2 c λ)`.
pub fn delta_lambda(lambda: f64, model: &ModulusModel, c_fit: f64, m: usize) -> Result<f64> {
    if !(lambda >= 1.0) {
        return Err(Error::InvalidArgument(format!("delta_lambda needs lambda >= 1, got {lambda}")));
    }
    if !(c_fit > 0.0) {
        return Err(Error::InvalidArgument(format!("modulus constant must be positive, got {c_fit}")));
    }
    let x = chi_inverse(model, 1.0 / (2.0 * c_fit * lambda))?;
    Ok(x / (2.0 * (m as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub u: Vec<i64>,
    /// `Σ_k Δ̂(u - k) |f̂(k)|`.
    pub value: f64,
    /// `½ (δ/2π)^m`.
    pub threshold: f64,
    pub pass: bool,
}

/// Windowed coefficient mass around the lattice frequency `u`.
pub fn concentration_check(spectrum: &Spectrum, u: &[i64], delta: f64) -> Result<Concentration> {
    let grid = spectrum.grid();
    let (m, n) = (grid.m(), grid.n());
    if grid.index_of(u).is_none() {
        return Err(Error::OutsideBox(u.to_vec()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta={delta} must be positive")));
    }
    let weights: Vec<Vec<f64>> = (0..m)
        .map(|a| {
            (0..n)
                .map(|i| {
                    let k = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                    triangle_hat_1d(delta, (u[a] - k) as f64)
                })
                .collect()
        })
        .collect();
    let last = &weights[m - 1];
    // per-line partial sums, added in a fixed order so the result is reproducible
    let lines: Vec<f64> = spectrum
        .coefficients()
        .par_chunks(n)
        .enumerate()
        .map(|(line, coeffs)| {
            let mut prefix = 1.0;
            let mut rest = line;
            for a in (0..m - 1).rev() {
                prefix *= weights[a][rest % n];
                rest /= n;
            }
            prefix * coeffs.iter().zip(last).map(|(c, w)| w * c.norm()).sum::<f64>()
        })
        .collect();
    let value: f64 = lines.iter().sum();
    let threshold = 0.5 * (delta / TAU).powi(m as i32);
    Ok(Concentration { u: u.to_vec(), value, threshold, pass: value >= threshold })
}

/// An assembled lower bound and the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub phase: String,
    pub m: usize,
    pub p: f64,
    pub lambda: f64,
    pub delta_lambda: f64,
    pub c_fit: f64,
    /// Exponent of the power modulus model, if one was used.
    pub model_alpha: Option<f64>,
    pub measure: f64,
    pub bound: f64,
    /// λ-exponent of the bound, `m(1/p - 1/(1+α))`, for power moduli.
    pub exponent: Option<f64>,
    pub norm: Option<f64>,
    pub grid_n: Option<usize>,
    pub pass_rate: Option<f64>,
    pub samples: usize,
    pub sound: bool,
}

impl Certificate {
    /// Compares the bound against a computed norm; sound means `bound <= norm`.
    pub fn attach_norm(&mut self, estimate: &NormEstimate) {
        self.norm = Some(estimate.value);
        self.grid_n = Some(estimate.grid_n);
        self.sound = self.bound <= estimate.value;
    }

    pub fn attach_concentration(&mut self, checks: &[Concentration]) {
        self.samples = checks.len();
        self.pass_rate = if checks.is_empty() {
            None
        } else {
            Some(checks.iter().filter(|c| c.pass).count() as f64 / checks.len() as f64)
        };
    }
}

/// `½ c_m δ_λ^m λ^{m/p} |W|^{1/p}`, refused when `|W| = 0`.
pub fn measure_lower_bound(
    lambda: f64,
    p: f64,
    range: &GradientRange,
    model: &ModulusModel,
    c_fit: f64,
    m: usize,
) -> Result<Certificate> {
    crate::torus_spectra::check_exponent(p)?;
    if !(range.measure > 0.0) {
        return Err(Error::DegenerateGradient);
    }
    let delta = delta_lambda(lambda, model, c_fit, m)?;
    let mf = m as f64;
    let c_m = 0.5 * TAU.powf(-mf);
    let bound = 0.5 * c_m * delta.powf(mf) * lambda.powf(mf / p) * range.measure.powf(1.0 / p);
    let exponent = model.power_exponent().map(|alpha| mf * (1.0 / p - 1.0 / (1.0 + alpha)));
    Ok(Certificate {
        phase: String::new(),
        m,
        p,
        lambda,
        delta_lambda: delta,
        c_fit,
        model_alpha: model.power_exponent(),
        measure: range.measure,
        bound,
        exponent,
        norm: None,
        grid_n: None,
        pass_rate: None,
        samples: 0,
        sound: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    pub scales: Vec<f64>,
    pub modulus: ModulusFitOptions,
    /// Multiplier on the measured modulus constant.
    pub safety: f64,
    /// Grid points per axis for the gradient-range cover; `None` picks a per-dimension default.
    pub range_resolution: Option<usize>,
    /// Concentration samples per certificate.
    pub samples: usize,
    pub seed: u64,
    pub policy: GridPolicy,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            scales: default_scales(),
            modulus: ModulusFitOptions::default(),
            safety: 1.1,
            range_resolution: None,
            samples: 100,
            seed: 0xce27,
            policy: GridPolicy::default(),
        }
    }
}

/// Per-phase quantities shared by all certificates of a phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationSetup {
    pub phase: String,
    pub modulus: ModulusFit,
    pub model: ModulusModel,
    pub c_fit: f64,
    pub range: GradientRange,
}

fn default_range_resolution(m: usize) -> usize {
    match m {
        1 => 4096,
        2 => 512,
        3 => 128,
        _ => 64,
    }
}

/// Fits the gradient modulus and measures the gradient range. The model is the power law
/// with the phase's recorded gradient exponent; `c_fit` is the measured constant times
/// `options.safety`.
pub fn prepare(phase: &Phase, options: &CertifyOptions) -> Result<CertificationSetup> {
    let resolution = options.range_resolution.unwrap_or_else(|| default_range_resolution(phase.m()));
    let range = gradient_range(phase, resolution)?;
    if !(range.measure > 0.0) {
        return Err(Error::DegenerateGradient);
    }
    let alpha = phase
        .smoothness()
        .theory_budget(phase.m())
        .gradient_exponent()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no Hölder gradient", phase.key())))?;
    let modulus = modulus_fit(phase, &options.scales, &options.modulus)?;
    let c_fit = options.safety * modulus.constant_for(alpha);
    Ok(CertificationSetup { phase: phase.key(), modulus, model: ModulusModel::Power { alpha }, c_fit, range })
}

/// Concentration checks at `u = round(λ∇φ(t₀))` for `samples` pseudo-random `t₀`, sorted by `u`.
pub fn sampled_concentration(
    phase: &Phase,
    spectrum: &Spectrum,
    lambda: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<Concentration>> {
    let m = phase.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frequencies: Vec<Vec<i64>> = (0..samples)
        .map(|_| {
            let mut t = [0.0; MAX_DIMENSION];
            let mut g = [0.0; MAX_DIMENSION];
            for tj in t.iter_mut().take(m) {
                *tj = rng.gen_range(0.0..TAU);
            }
            phase.grad(&t[..m], &mut g);
            g[..m].iter().map(|gj| (lambda * gj).round() as i64).collect()
        })
        .collect();
    let mut checks =
        frequencies.par_iter().map(|u| concentration_check(spectrum, u, delta)).collect::<Result<Vec<_>>>()?;
    checks.sort_by(|a, b| a.u.cmp(&b.u));
    Ok(checks)
}

/// One certificate at `(λ, p)`: bound, computed norm and concentration pass rate.
pub fn certify(
    phase: &Phase,
    lambda: f64,
    p: f64,
    setup: &CertificationSetup,
    options: &CertifyOptions,
) -> Result<Certificate> {
    let mut cert = measure_lower_bound(lambda, p, &setup.range, &setup.model, setup.c_fit, phase.m())?;
    cert.phase = phase.key();
    let spectrum = resolved_spectrum(phase, lambda, &[p], &options.policy)?;
    let value = lp_sum(&spectrum, p)?;
    cert.attach_norm(&NormEstimate {
        phase: phase.key(),
        m: phase.m(),
        p,
        lambda,
        grid_n: spectrum.grid().n(),
        value,
        tail_bound: None,
        annulus_ratio: 0.0,
    });
    if options.samples > 0 {
        let checks = sampled_concentration(phase, &spectrum, lambda, cert.delta_lambda, options.samples, options.seed)?;
        cert.attach_concentration(&checks);
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phases::{builtin, PhaseParams};
    use crate::torus_spectra::GridSpec;

    #[test]
    fn triangle_hat_values() {
        assert!((triangle_hat(1.0, &[0.0]) - 1.0 / TAU).abs() < 1e-16);
        // uδ/2 = π
        assert!(triangle_hat(0.5, &[4.0 * std::f64::consts::PI]).abs() < 1e-16);
        assert!((triangle_hat(0.3, &[0.0, 0.0]) - (0.3 / TAU).powi(2)).abs() < 1e-16);
    }

    #[test]
    fn triangle_transform_matches_quadrature() {
        // (2π)^{-1} ∫ Δ_δ(t) e^{-iut} dt by the midpoint rule
        let delta = 0.7;
        for u in [0.0, 0.5, 3.0, 11.0] {
            let steps = 200_000;
            let h = 2.0 * delta / steps as f64;
            let w = TriangleWindow::new(vec![0.0], delta).unwrap();
            let integral: f64 = (0..steps)
                .map(|i| {
                    let t = -delta + (i as f64 + 0.5) * h;
                    w.eval(&[t]) * (u * t).cos()
                })
                .sum::<f64>()
                * h
                / TAU;
            assert!((integral - w.transform_modulus(&[u])).abs() < 1e-9, "u={u}");
        }
    }

    #[test]
    fn chi_inverse_closed_forms() {
        let lin = ModulusModel::Power { alpha: 1.0 };
        assert!((chi_inverse(&lin, 0.25).unwrap() - 0.5).abs() < 1e-15);
        let half = ModulusModel::Power { alpha: 0.5 };
        assert!((chi_inverse(&half, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(chi_inverse(&lin, 0.0).is_err());
        assert!(chi_inverse(&lin, -1.0).is_err());
    }

    #[test]
    fn chi_inverse_on_tables() {
        let table = ModulusModel::Tabulated { scales: vec![0.1, 0.2, 0.4, 0.8], omega: vec![0.3, 0.4, 0.6, 0.7] };
        for y in [1e-6, 1e-3, 0.05, 0.2, 0.5599] {
            let d = chi_inverse(&table, y).unwrap();
            let chi = table.chi(d).unwrap();
            assert!((chi - y).abs() <= 1e-12 * y, "y={y}");
        }
        assert_eq!(chi_inverse(&table, 0.57), Err(Error::OutsideChiRange(0.57)));
    }

    #[test]
    fn delta_lambda_examples() {
        let lin = ModulusModel::Power { alpha: 1.0 };
        assert!((delta_lambda(2.0, &lin, 1.0, 1).unwrap() - 0.25).abs() < 1e-15);
        for m in [1, 2, 3] {
            for lambda in [1.0, 3.0, 64.0] {
                let a = delta_lambda(lambda, &lin, 1.3, m).unwrap();
                let b = delta_lambda(2.0 * lambda, &lin, 1.3, m).unwrap();
                let scale = 2.0 * (m as f64).sqrt();
                let ratio = lin.chi(scale * b).unwrap() / lin.chi(scale * a).unwrap();
                assert!((ratio - 0.5).abs() < 1e-14);
                assert!(b < a);
            }
        }
        assert!(delta_lambda(0.5, &lin, 1.0, 1).is_err());
    }

    #[test]
    fn concentration_of_constant_field() {
        let g = GridSpec::new(2, 16).unwrap();
        let s = Spectrum::delta(g, &[0, 0]).unwrap();
        for delta in [0.01, 0.3, 2.0] {
            let c = concentration_check(&s, &[0, 0], delta).unwrap();
            assert!((c.value - triangle_hat(delta, &[0.0, 0.0])).abs() < 1e-16);
            assert!(c.pass);
        }
        assert!(concentration_check(&s, &[8, 0], 0.1).is_err());
    }

    #[test]
    fn degenerate_range_is_refused() {
        let range = GradientRange { m: 1, resolution: 64, measure: 0.0, cell_size: 0.0, cells: vec![] };
        let err = measure_lower_bound(4.0, 1.0, &range, &ModulusModel::Power { alpha: 1.0 }, 1.0, 1);
        assert_eq!(err.unwrap_err(), Error::DegenerateGradient);
        let linear = builtin("linear", 1, &PhaseParams { k: Some(vec![2]), ..Default::default() }).unwrap();
        assert_eq!(prepare(&linear, &CertifyOptions::default()).unwrap_err(), Error::DegenerateGradient);
    }

    #[test]
    fn bound_exponents() {
        let range = GradientRange { m: 1, resolution: 64, measure: 2.0, cell_size: 0.01, cells: vec![] };
        let half = ModulusModel::Power { alpha: 0.5 };
        let cert = measure_lower_bound(10.0, 1.0, &range, &half, 1.0, 1).unwrap();
        assert!((cert.exponent.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let lin = ModulusModel::Power { alpha: 1.0 };
        for (m, p) in [(1, 1.0), (2, 1.0), (2, 1.5), (3, 1.2)] {
            let a = measure_lower_bound(16.0, p, &range, &lin, 1.1, m).unwrap();
            let b = measure_lower_bound(128.0, p, &range, &lin, 1.1, m).unwrap();
            let slope = (b.bound / a.bound).ln() / 8f64.ln();
            let expected = m as f64 * (1.0 / p - 0.5);
            assert!((slope - expected).abs() < 1e-12);
            assert!((a.exponent.unwrap() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn cosine_certificate_is_sound_and_concentrated() {
        let cosine = builtin("cosine", 1, &PhaseParams::default()).unwrap();
        let options = CertifyOptions {
            modulus: ModulusFitOptions { pairs_per_scale: 100_000, ..Default::default() },
            ..Default::default()
        };
        let setup = prepare(&cosine, &options).unwrap();
        assert!((setup.c_fit - 1.1).abs() < 0.01, "c_fit={}", setup.c_fit);
        for lambda in [16.0, 32.0] {
            let cert = certify(&cosine, lambda, 1.0, &setup, &options).unwrap();
            assert!(cert.sound, "{cert:?}");
            assert!(cert.pass_rate.unwrap() >= 0.95, "{cert:?}");
        }
    }

    #[test]
    fn far_frequencies_fail_concentration() {
        let cosine = builtin("cosine", 1, &PhaseParams::default()).unwrap();
        let lambda = 16.0;
        let s = resolved_spectrum(&cosine, lambda, &[1.0], &GridPolicy::default()).unwrap();
        // a narrow window: Δ̂ decays like (uδ)^{-2} away from the band |k| <= λ
        let delta = 1.0;
        for u in [40, 50, -45, 60] {
            let c = concentration_check(&s, &[u], delta).unwrap();
            assert!(!c.pass, "u={u}: {c:?}");
        }
    }
}
