//! `A_p(T^m)` norms of `e^{iλφ}` with grid control, dyadic shell profiles and the
//! Bernstein-type tail and interpolation bounds for `C^{ν,α}` functions.
//!
//! Explicit constants for the shell estimate (`S_n` below is the `ℓ²` mass of the shell
//! `2^{n-1} <= |k| < 2^n`, `s = ν + α`, `ρ = m(1/p - 1/2)`, `τ = ρ/s`):
//!
//! * `S_n <= K N² 2^{-2ns}` with `K = m^{ν+1} 4^{ν+α} / sin²(1)`, from the difference
//!   identity, `Σ_j k_j^{2ν} >= m^{1-ν}|k|^{2ν}`, `sin²x >= sin²(1) x²` on `|x| <= 1` and the
//!   sphere average `mean (v,ξ)² = |v|²/m`;
//! * shells hold fewer than `2^m 2^{nm}` lattice points, so Hölder gives
//!   `Σ_shell |f̂|^p <= K^{p/2} 2^{pρ} N^p 2^{-nps(1-τ)}`;
//! * summing shells from `⌊log₂ B⌋ + 1` up: `Σ_{|k|>=B} |f̂|^p <= c_tail N^p B^{-ps(1-τ)}` with
//!   `c_tail = K^{p/2} 2^{pρ} / (1 - 2^{-ps(1-τ)})`;
//! * the head `Σ_{|k|<B} |f̂|^p <= 3^{pρ} ‖f‖₂^p B^{pρ}` since `#{|k| < B} <= (3B)^m`.

use serde::{Deserialize, Serialize};

use crate::phases::{Phase, SmoothnessBudget};
use crate::torus_spectra::{analyze, check_exponent, lp_sum, sample_phase, GridSpec, Spectrum, MAX_DIMENSION};
use crate::{Complex64, Error, Result};

/// How the sampling grid is chosen for a given `(φ, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub min_n: usize,
    /// `n >= oversample · ⌈|λ| G⌉`.
    pub oversample: usize,
    /// `n >= harmonic_oversample · K` where `K` is the top harmonic of `φ`.
    pub harmonic_oversample: usize,
    pub max_doublings: u32,
    /// Refuse grids with more than this many nodes.
    pub max_points: usize,
    /// Annulus mass must stay below `annulus_tolerance · ‖f̂‖_p^p`.
    pub annulus_tolerance: f64,
    /// Skip the sizing rule and start from this `n`.
    pub fixed_n: Option<usize>,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            min_n: 64,
            oversample: 8,
            harmonic_oversample: 8,
            max_doublings: 3,
            max_points: 1 << 24,
            annulus_tolerance: 1e-10,
            fixed_n: None,
        }
    }
}

impl GridPolicy {
    /// First grid size tried for `(φ, λ)`.
    pub fn initial_n(&self, phase: &Phase, lambda: f64) -> usize {
        if let Some(n) = self.fixed_n {
            return n;
        }
        let bandwidth = (lambda.abs() * phase.gradient_bound()).ceil() as usize;
        let harmonic = phase.max_harmonic() as usize;
        self.min_n.max(self.oversample * bandwidth).max(self.harmonic_oversample * harmonic).next_power_of_two()
    }

    pub fn describe(&self) -> String {
        format!(
            "n=next_pow2(max({}, {}*ceil(lambda*G), {}*K)), doublings<={}, max_points={}, annulus_tol={:e}{}",
            self.min_n,
            self.oversample,
            self.harmonic_oversample,
            self.max_doublings,
            self.max_points,
            self.annulus_tolerance,
            self.fixed_n.map(|n| format!(", fixed_n={n}")).unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub phase: String,
    pub m: usize,
    pub p: f64,
    pub lambda: f64,
    pub grid_n: usize,
    /// `ℓ^p` norm of the resolved coefficients.
    pub value: f64,
    /// Bound on `Σ |f̂(k)|^p` outside the resolved box; `None` when the smoothness budget
    /// sits on or below the critical line and no bound is available.
    pub tail_bound: Option<f64>,
    /// Annulus mass divided by `value^p`.
    pub annulus_ratio: f64,
}

/// The `C^{1,α}` budget used for `e^{iλφ}`: `α` is the Hölder exponent of `∇φ`.
pub fn exp_budget(phase: &Phase) -> SmoothnessBudget {
    let (alpha, _) = phase.axis_gradient_holder();
    SmoothnessBudget { nu: 1, alpha }
}

/// Bound on `‖e^{iλφ}‖_{C^{1,α}}` from the product rule:
/// `max(1, |λ|G) + |λ| c + |λ| G 2^{1-α} (|λ| G₂)^α`, where `c` is the axis Hölder constant of
/// `∇φ`, `G` the axis gradient bound and `G₂` the Euclidean one.
pub fn exp_seminorm(phase: &Phase, lambda: f64) -> f64 {
    let (alpha, c) = phase.axis_gradient_holder();
    let l = lambda.abs();
    let g = phase.gradient_bound();
    let g2 = phase.gradient_norm_bound();
    1f64.max(l * g) + l * c + l * g * 2f64.powf(1.0 - alpha) * (l * g2).powf(alpha)
}

/// `‖e^{iλφ}‖_{A_p}` for a single `p`.
pub fn ap_norm(phase: &Phase, lambda: f64, p: f64, policy: &GridPolicy) -> Result<NormEstimate> {
    Ok(ap_norms(phase, lambda, &[p], policy)?.remove(0))
}

/// Norms for several exponents from one spectrum. The grid is doubled until the annulus
/// diagnostic passes for every requested `p`.
pub fn ap_norms(phase: &Phase, lambda: f64, ps: &[f64], policy: &GridPolicy) -> Result<Vec<NormEstimate>> {
    for &p in ps {
        check_exponent(p)?;
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda={lambda} is not finite")));
    }
    let (spectrum, sums, ratios) = resolve(phase, lambda, ps, policy)?;
    let budget = exp_budget(phase);
    let seminorm = exp_seminorm(phase, lambda);
    let box_edge = (spectrum.grid().n() / 2) as f64;
    Ok(ps
        .iter()
        .zip(sums.into_iter().zip(ratios))
        .map(|(&p, (value, annulus_ratio))| NormEstimate {
            phase: phase.key(),
            m: phase.m(),
            p,
            lambda,
            grid_n: spectrum.grid().n(),
            value,
            tail_bound: tail_bound(&budget, seminorm, box_edge, p, phase.m()).ok(),
            annulus_ratio,
        })
        .collect())
}

/// Spectrum of `e^{iλφ}` on the first grid that passes the annulus diagnostic.
pub fn resolved_spectrum(phase: &Phase, lambda: f64, ps: &[f64], policy: &GridPolicy) -> Result<Spectrum> {
    Ok(resolve(phase, lambda, ps, policy)?.0)
}

fn resolve(phase: &Phase, lambda: f64, ps: &[f64], policy: &GridPolicy) -> Result<(Spectrum, Vec<f64>, Vec<f64>)> {
    let mut n = policy.initial_n(phase, lambda);
    let mut last_reason = String::new();
    for _ in 0..=policy.max_doublings {
        let too_big = n.checked_pow(phase.m() as u32).is_none_or(|t| t > policy.max_points);
        if too_big {
            return Err(Error::Unresolvable {
                lambda,
                n,
                reason: format!("{n}^{} nodes exceed max_points={}", phase.m(), policy.max_points),
            });
        }
        let grid = GridSpec::new(phase.m(), n)?;
        // a character is known exactly; the transform would only add rounding noise
        let spectrum = match phase.character(lambda).and_then(|k| Spectrum::delta(grid, &k).ok()) {
            Some(exact) => exact,
            None => analyze(&sample_phase(phase, lambda, grid)?),
        };
        let mut sums = Vec::with_capacity(ps.len());
        let mut ratios = Vec::with_capacity(ps.len());
        let mut ok = true;
        for &p in ps {
            let value = lp_sum(&spectrum, p)?;
            let ratio = spectrum.annulus_mass(p) / value.powf(p);
            if ratio >= policy.annulus_tolerance {
                ok = false;
                last_reason = format!("annulus mass ratio {ratio:e} at p={p}");
            }
            sums.push(value);
            ratios.push(ratio);
        }
        if ok {
            return Ok((spectrum, sums, ratios));
        }
        n *= 2;
    }
    Err(Error::Unresolvable { lambda, n: n / 2, reason: last_reason })
}

/// `ℓ²` mass per dyadic shell of the resolved box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicProfile {
    /// `|f̂(0)|²`.
    pub zero: f64,
    /// `shells[n-1] = Σ_{2^{n-1} <= |k| < 2^n} |f̂(k)|²`.
    pub shells: Vec<f64>,
}

impl DyadicProfile {
    pub fn total(&self) -> f64 {
        self.zero + self.shells.iter().sum::<f64>()
    }
}

/// Shell index `n` with `2^{n-1} <= |k| < 2^n`, from `|k|²`; 0 for `k = 0`.
fn shell_of(norm2: u64) -> usize {
    if norm2 == 0 {
        0
    } else {
        (63 - norm2.leading_zeros() as usize) / 2 + 1
    }
}

pub fn dyadic_profile(spectrum: &Spectrum) -> DyadicProfile {
    let m = spectrum.grid().m();
    let half = (spectrum.grid().n() / 2) as u64;
    let shells_needed = shell_of(half * half * m as u64);
    let mut zero = 0.0;
    let mut shells = vec![0.0; shells_needed];
    for (k, c) in spectrum.iter() {
        let norm2: u64 = k[..m].iter().map(|&x| (x * x) as u64).sum();
        match shell_of(norm2) {
            0 => zero += c.norm_sqr(),
            s => shells[s - 1] += c.norm_sqr(),
        }
    }
    DyadicProfile { zero, shells }
}

/// Pieces shared by [`tail_bound`] and [`interpolation_upper_bound`].
#[derive(Debug, Clone, Copy)]
struct ShellConstants {
    rho: f64,
    order: f64,
    tau: f64,
    decay: f64,
    c_tail: f64,
}

fn shell_constants(budget: &SmoothnessBudget, p: f64, m: usize) -> Result<ShellConstants> {
    check_exponent(p)?;
    let order = budget.order();
    let rho = m as f64 * (1.0 / p - 0.5);
    let tau = if order > 0.0 { rho / order } else { f64::INFINITY };
    if !(tau < 1.0) {
        return Err(Error::BelowCriticalLine { tau });
    }
    let mf = m as f64;
    let k = mf.powi(budget.nu as i32 + 1) * 4f64.powf(order) / 1f64.sin().powi(2);
    let decay = p * order * (1.0 - tau);
    let c_tail = k.powf(p / 2.0) * 2f64.powf(p * rho) / (1.0 - 2f64.powf(-decay));
    Ok(ShellConstants { rho, order, tau, decay, c_tail })
}

/// Bound on `Σ_{|k| >= B} |f̂(k)|^p` for `f` with `‖f‖_{C^{ν,α}} <= seminorm`.
pub fn tail_bound(budget: &SmoothnessBudget, seminorm: f64, b: f64, p: f64, m: usize) -> Result<f64> {
    if !(b >= 1.0) {
        return Err(Error::InvalidArgument(format!("tail radius B={b} < 1")));
    }
    let c = shell_constants(budget, p, m)?;
    Ok(c.c_tail * seminorm.powf(p) * b.powf(-c.decay))
}

/// `τ = m(1/p - 1/2) / (ν + α)` and the tail decay exponent `-p(ν+α)(1-τ)`.
pub fn interpolation_exponents(budget: &SmoothnessBudget, p: f64, m: usize) -> Result<(f64, f64)> {
    let c = shell_constants(budget, p, m)?;
    Ok((c.tau, -c.decay))
}

/// `‖f‖_{A_p} <= (3^{pρ} L^p B^{pρ} + c_tail N^p B^{-ps(1-τ)})^{1/p}` with
/// `B = max(1, (N/L)^{1/s})`, which is `O(N^τ L^{1-τ})`.
pub fn interpolation_upper_bound(
    spectrum: &Spectrum,
    budget: &SmoothnessBudget,
    seminorm: f64,
    l2norm: f64,
    p: f64,
) -> Result<f64> {
    interpolation_bound(budget, seminorm, l2norm, p, spectrum.grid().m())
}

/// The bound of [`interpolation_upper_bound`] from its scalar inputs alone.
pub fn interpolation_bound(budget: &SmoothnessBudget, seminorm: f64, l2norm: f64, p: f64, m: usize) -> Result<f64> {
    let c = shell_constants(budget, p, m)?;
    if !(c.tau > 0.0) {
        return Err(Error::BelowCriticalLine { tau: c.tau });
    }
    if !(seminorm > 0.0 && l2norm > 0.0) {
        return Err(Error::InvalidArgument("seminorm and l2norm must be positive".into()));
    }
    let b = (seminorm / l2norm).powf(1.0 / c.order).max(1.0);
    let head = 3f64.powf(p * c.rho) * l2norm.powf(p) * b.powf(p * c.rho);
    let tail = c.c_tail * seminorm.powf(p) * b.powf(-c.decay);
    Ok((head + tail).powf(1.0 / p))
}

/// Upper growth exponent for `‖e^{iλφ}‖_{A_p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperTheory {
    pub exponent: f64,
    pub valid: bool,
    /// `|λ|^exponent`.
    pub scale: f64,
}

/// Exponent `m(1/p - 1/2)`, valid when `ν+α >= 1` and `ν+α > m(1/p - 1/2)`; at `p = 2` the
/// norm is identically 1.
pub fn upper_theory(lambda: f64, p: f64, m: usize, budget: &SmoothnessBudget) -> UpperTheory {
    let exponent = m as f64 * (1.0 / p - 0.5);
    let valid = (1.0..=2.0).contains(&p) && (p == 2.0 || (budget.order() >= 1.0 && budget.order() > exponent));
    UpperTheory { exponent, valid, scale: lambda.abs().powf(exponent) }
}

/// Both sides of the difference identity
/// `mean_t |∂_j^ν f(t+δξ) - ∂_j^ν f(t-δξ)|² = 4 Σ_k k_j^{2ν} |f̂(k)|² sin²(δ(k,ξ))`
/// for the trigonometric interpolant of `spectrum`. The left side evaluates the shifted
/// derivatives by direct summation at every node; intended for small grids.
pub fn shell_difference_energy(
    spectrum: &Spectrum,
    axis: usize,
    nu: u32,
    delta: f64,
    xi: &[f64],
) -> Result<(f64, f64)> {
    let grid = spectrum.grid();
    let m = grid.m();
    if axis >= m || xi.len() != m {
        return Err(Error::InvalidArgument("axis or direction does not match the grid".into()));
    }
    if grid.len() > 4096 {
        return Err(Error::InvalidArgument("direct evaluation limited to 4096 nodes".into()));
    }
    let terms: Vec<([i64; MAX_DIMENSION], Complex64)> =
        spectrum.iter().map(|(k, c)| (k, c * Complex64::new(0.0, k[axis] as f64).powu(nu))).collect();
    let derivative_at = |x: &[f64]| -> Complex64 {
        terms
            .iter()
            .map(|(k, c)| {
                let phase: f64 = k[..m].iter().zip(x).map(|(&ka, &xa)| ka as f64 * xa).sum();
                c * Complex64::cis(phase)
            })
            .sum()
    };
    let mut t = [0.0; MAX_DIMENSION];
    let mut plus = [0.0; MAX_DIMENSION];
    let mut minus = [0.0; MAX_DIMENSION];
    let mut direct = 0.0;
    for i in 0..grid.len() {
        grid.node(i, &mut t);
        for a in 0..m {
            plus[a] = t[a] + delta * xi[a];
            minus[a] = t[a] - delta * xi[a];
        }
        direct += (derivative_at(&plus[..m]) - derivative_at(&minus[..m])).norm_sqr();
    }
    direct /= grid.len() as f64;

    let coefficient_side: f64 = spectrum
        .iter()
        .map(|(k, c)| {
            let kj = k[axis] as f64;
            let arg: f64 = k[..m].iter().zip(xi).map(|(&ka, &x)| ka as f64 * x).sum::<f64>() * delta;
            4.0 * kj.powi(2 * nu as i32) * c.norm_sqr() * arg.sin().powi(2)
        })
        .sum();
    Ok((direct, coefficient_side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phases::{builtin, PhaseParams};
    use crate::torus_spectra::Field;

    fn cosine() -> Phase {
        builtin("cosine", 1, &PhaseParams::default()).unwrap()
    }

    #[test]
    fn zero_frequency_has_unit_norm() {
        for name in ["cosine", "weierstrass", "constant"] {
            let p = builtin(name, 1, &PhaseParams::default()).unwrap();
            let est = ap_norm(&p, 0.0, 1.0, &GridPolicy::default()).unwrap();
            assert!((est.value - 1.0).abs() < 1e-12, "{name}: {}", est.value);
        }
    }

    #[test]
    fn linear_phase_single_harmonic() {
        let p = builtin("linear", 2, &PhaseParams { k: Some(vec![2, 1]), ..Default::default() }).unwrap();
        let est = ap_norm(&p, 1.0, 1.0, &GridPolicy::default()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_policy_sizing() {
        let policy = GridPolicy::default();
        assert_eq!(policy.initial_n(&cosine(), 1.0), 64);
        assert_eq!(policy.initial_n(&cosine(), 64.0), 512);
        assert_eq!(policy.initial_n(&cosine(), 100.0), 1024);
        let w = builtin("weierstrass", 1, &PhaseParams::default()).unwrap();
        assert_eq!(policy.initial_n(&w, 1.0), 32768);
        let fixed = GridPolicy { fixed_n: Some(128), ..policy };
        assert_eq!(fixed.initial_n(&cosine(), 500.0), 128);
    }

    #[test]
    fn unresolvable_grid_is_reported() {
        let policy = GridPolicy { fixed_n: Some(16), max_doublings: 1, ..Default::default() };
        let err = ap_norm(&cosine(), 40.0, 1.0, &policy).unwrap_err();
        assert!(matches!(err, Error::Unresolvable { n: 32, .. }), "{err:?}");
        let capped = GridPolicy { max_points: 1 << 10, ..Default::default() };
        let sum2 = builtin("cosine_sum", 2, &PhaseParams::default()).unwrap();
        assert!(matches!(ap_norm(&sum2, 64.0, 1.0, &capped), Err(Error::Unresolvable { .. })));
    }

    #[test]
    fn doubling_recovers_from_small_start() {
        let policy = GridPolicy { fixed_n: Some(32), ..Default::default() };
        let est = ap_norm(&cosine(), 12.0, 1.0, &policy).unwrap();
        assert!(est.grid_n > 32);
        assert!(est.annulus_ratio < 1e-10);
    }

    #[test]
    fn single_harmonic_shell() {
        let g = GridSpec::new(1, 16).unwrap();
        let prof = dyadic_profile(&Spectrum::delta(g, &[3]).unwrap());
        assert_eq!(prof.zero, 0.0);
        assert_eq!(prof.shells[1], 1.0);
        assert_eq!(prof.shells.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn shell_indices() {
        assert_eq!(shell_of(0), 0);
        assert_eq!(shell_of(1), 1);
        assert_eq!(shell_of(3), 1);
        assert_eq!(shell_of(4), 2);
        assert_eq!(shell_of(15), 2);
        assert_eq!(shell_of(16), 3);
    }

    #[test]
    fn profile_partitions_l2_mass() {
        let p = builtin("cosine_sum", 2, &PhaseParams::default()).unwrap();
        let s = resolved_spectrum(&p, 6.0, &[2.0], &GridPolicy::default()).unwrap();
        let prof = dyadic_profile(&s);
        assert!((prof.total() - 1.0).abs() < 1e-12);
        assert!(prof.shells.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn smooth_field_shells_decay_fast() {
        let s = resolved_spectrum(&cosine(), 3.0, &[1.0], &GridPolicy::default()).unwrap();
        let prof = dyadic_profile(&s);
        // past the phase bandwidth (|k| >~ 3) successive shells drop by far more than 2^{-2s}
        for n in 3..5 {
            assert!(prof.shells[n] < prof.shells[n - 1] * 1e-3, "n={n}: {:?}", prof.shells);
        }
    }

    #[test]
    fn tail_exponent_example() {
        let budget = SmoothnessBudget { nu: 1, alpha: 1.0 };
        let (tau, exponent) = interpolation_exponents(&budget, 1.0, 1).unwrap();
        assert!((tau - 0.25).abs() < 1e-15);
        assert!((exponent + 1.5).abs() < 1e-15);
    }

    #[test]
    fn tail_bound_decreases_to_zero() {
        let budget = SmoothnessBudget { nu: 1, alpha: 1.0 };
        let mut last = f64::INFINITY;
        for b in [1.0, 2.0, 10.0, 100.0, 1e4, 1e8] {
            let v = tail_bound(&budget, 5.0, b, 1.0, 1).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn tail_bound_rejects_critical_budget() {
        let budget = SmoothnessBudget { nu: 1, alpha: 0.0 };
        assert!(matches!(tail_bound(&budget, 1.0, 2.0, 1.0, 3), Err(Error::BelowCriticalLine { .. })));
        assert!(tail_bound(&budget, 1.0, 0.5, 1.0, 1).is_err());
    }

    #[test]
    fn upper_theory_examples() {
        let u = upper_theory(10.0, 1.0, 2, &SmoothnessBudget { nu: 2, alpha: 0.0 });
        assert!(u.valid && (u.exponent - 1.0).abs() < 1e-15);
        assert!((u.scale - 10.0).abs() < 1e-12);
        let u = upper_theory(10.0, 2.0, 1, &SmoothnessBudget { nu: 0, alpha: 0.0 });
        assert!(u.valid && u.exponent == 0.0 && u.scale == 1.0);
        assert!(!upper_theory(10.0, 1.0, 3, &SmoothnessBudget { nu: 1, alpha: 0.0 }).valid);
    }

    #[test]
    fn interpolation_balanced_and_homogeneous() {
        let g = GridSpec::new(1, 16).unwrap();
        let s = Spectrum::delta(g, &[0]).unwrap();
        let budget = SmoothnessBudget { nu: 1, alpha: 1.0 };
        let balanced = interpolation_upper_bound(&s, &budget, 3.0, 3.0, 1.0).unwrap();
        let unit = interpolation_upper_bound(&s, &budget, 1.0, 1.0, 1.0).unwrap();
        assert!((balanced - 3.0 * unit).abs() < 1e-12 * balanced);
        let a = interpolation_upper_bound(&s, &budget, 40.0, 1.5, 1.3).unwrap();
        let b = interpolation_upper_bound(&s, &budget, 80.0, 3.0, 1.3).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12 * b);
        assert!(interpolation_upper_bound(&s, &budget, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn interpolation_bound_dominates_norm() {
        let budget = exp_budget(&cosine());
        for lambda in [1.0, 4.0, 10.0, 33.0] {
            for p in [1.0, 1.25, 1.5, 1.9] {
                let s = resolved_spectrum(&cosine(), lambda, &[p], &GridPolicy::default()).unwrap();
                let bound = interpolation_upper_bound(&s, &budget, exp_seminorm(&cosine(), lambda), 1.0, p).unwrap();
                let norm = lp_sum(&s, p).unwrap();
                assert!(norm <= bound, "lambda={lambda} p={p}: {norm} > {bound}");
            }
        }
    }

    #[test]
    fn exp_seminorm_dominates_sampled_derivatives() {
        // ‖e^{iλcos}‖_{C^{1,1}} = max(1, sup|f'|) + sup|f''|
        for lambda in [1.0, 3.0, 17.0] {
            let mut sup1 = 0.0f64;
            let mut sup2 = 0.0f64;
            for j in 0..20_000 {
                let t = std::f64::consts::TAU * j as f64 / 20_000.0;
                let f1 = lambda * t.sin();
                let f2 = ((lambda * t.sin()).powi(4) + (lambda * t.cos()).powi(2)).sqrt();
                sup1 = sup1.max(f1.abs());
                sup2 = sup2.max(f2);
            }
            assert!(1f64.max(sup1) + sup2 <= exp_seminorm(&cosine(), lambda));
        }
    }

    #[test]
    fn shell_identity_holds() {
        let g = GridSpec::new(1, 32).unwrap();
        let field = sample_phase(&cosine(), 3.0, g).unwrap();
        let s = analyze(&field);
        for nu in [0, 1, 2] {
            let (direct, coeffs) = shell_difference_energy(&s, 0, nu, 0.37, &[1.0]).unwrap();
            assert!((direct - coeffs).abs() <= 1e-8 * coeffs.max(1.0), "nu={nu}: {direct} vs {coeffs}");
        }
        let g2 = GridSpec::new(2, 16).unwrap();
        let f2 = Field::from_fn(g2, |t| Complex64::cis(2.0 * (t[0].cos() + t[1].cos())));
        let s2 = analyze(&f2);
        let xi = [0.6, 0.8];
        for axis in 0..2 {
            let (direct, coeffs) = shell_difference_energy(&s2, axis, 1, 0.21, &xi).unwrap();
            assert!((direct - coeffs).abs() <= 1e-8 * coeffs.max(1.0));
        }
    }
}
