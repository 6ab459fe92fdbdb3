//! λ sweeps, log-log exponent fits and the theoretical growth laws they are compared with.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apnorm::{ap_norms, exp_budget, exp_seminorm, interpolation_bound, GridPolicy};
use crate::lower_cert::{chi_inverse, measure_lower_bound, prepare, CertificationSetup, CertifyOptions, ModulusModel};
use crate::phases::{builtin, Phase, PhaseParams, SmoothnessBudget};
use crate::{Error, Result};

/// Dyadic points skipped by default before fitting: small λ is pre-asymptotic.
pub const DEFAULT_DISCARD_PREFIX: usize = 2;

const MIN_FIT_ROWS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

/// Unweighted least squares `y ≈ slope·x + intercept`. Needs two distinct abscissae;
/// otherwise the slope is NaN.
pub fn least_squares(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_rms = (points.iter().map(|&(x, y)| (y - slope * x - intercept).powi(2)).sum::<f64>() / n).sqrt();
    LinearFit { slope, intercept, residual_rms }
}

/// `lo, 2lo, 4lo, … <= hi`.
pub fn dyadic(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi * (1.0 + 1e-12) {
        out.push(x);
        x *= 2.0;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub phase: String,
    pub params: PhaseParams,
    pub m: usize,
    pub ps: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub policy: GridPolicy,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Fill the certificate column (needs a modulus fit and a gradient-range cover).
    pub certify: bool,
}

impl SweepPlan {
    pub fn new(phase: impl Into<String>, m: usize) -> Self {
        Self {
            phase: phase.into(),
            params: PhaseParams::default(),
            m,
            ps: vec![1.0],
            lambdas: dyadic(8.0, 256.0),
            policy: GridPolicy::default(),
            workers: None,
            certify: true,
        }
    }

    pub fn validate(&self) -> Result<Phase> {
        if self.lambdas.is_empty() || self.ps.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one lambda and one p".into()));
        }
        if self.lambdas.iter().any(|&l| !(l >= 1.0 && l.is_finite())) {
            return Err(Error::InvalidArgument("sweep lambdas must be >= 1".into()));
        }
        if self.lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("sweep lambdas must be strictly increasing".into()));
        }
        for &p in &self.ps {
            crate::torus_spectra::check_exponent(p)?;
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidArgument("workers must be positive".into()));
        }
        builtin(&self.phase, self.m, &self.params)
    }
}

/// One `(λ, p)` row of a sweep. `norm` is `None` and `error` set when the grid failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub phase: String,
    pub m: usize,
    pub p: f64,
    pub lambda: f64,
    pub grid_n: Option<usize>,
    pub norm: Option<f64>,
    pub tail_bound: Option<f64>,
    pub cert_lower: Option<f64>,
    pub upper_bound: Option<f64>,
    pub theory_lower_exp: Option<f64>,
    pub theory_upper_exp: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryExponents {
    /// `m(1/p - 1/(1+a))` with `a` the gradient Hölder exponent; `None` without one.
    pub lower: Option<f64>,
    /// `p < 1 + a`.
    pub lower_valid: bool,
    /// `m(1/p - 1/2)`.
    pub upper: f64,
    /// `ν+α >= 1` and `ν+α > m(1/p - 1/2)`.
    pub upper_valid: bool,
    /// `ν+α >= 2` and `ν+α > m/2`: the norm grows exactly like `|λ|^upper`.
    pub two_sided: bool,
}

pub fn theory_exponents(m: usize, p: f64, budget: &SmoothnessBudget) -> TheoryExponents {
    let mf = m as f64;
    let s = budget.order();
    let a = budget.gradient_exponent();
    let upper = mf * (1.0 / p - 0.5);
    TheoryExponents {
        lower: a.map(|a| mf * (1.0 / p - 1.0 / (1.0 + a))),
        lower_valid: a.is_some_and(|a| p < 1.0 + a),
        upper,
        upper_valid: s >= 1.0 && s > upper,
        two_sided: s >= 2.0 && s > mf / 2.0,
    }
}

/// Slow-growth reference scale: `Θ_1(y) = (y/ln y) χ^{-1}((ln y)²/y)` for `y > e`, and
/// `Θ_p(y) = (∫_1^y χ^{-1}(1/τ)^p dτ)^{1/p}` for `1 < p <= 2`, `y >= 1`.
pub fn theta_scale(model: &ModulusModel, p: f64, y: f64) -> Result<f64> {
    crate::torus_spectra::check_exponent(p)?;
    if p == 1.0 {
        if !(y > std::f64::consts::E && y.is_finite()) {
            return Err(Error::OutOfDomain(y));
        }
        let l = y.ln();
        return Ok(y / l * chi_inverse(model, l * l / y)?);
    }
    if !(y >= 1.0 && y.is_finite()) {
        return Err(Error::OutOfDomain(y));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    // τ = e^s
    let mut failure = None;
    let mut integrand = |s: f64| match chi_inverse(model, (-s).exp()) {
        Ok(d) => s.exp() * d.powf(p),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let integral = adaptive_simpson(&mut integrand, 0.0, y.ln(), 1e-13);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(integral.powf(1.0 / p))
}

fn adaptive_simpson(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn step(
        f: &mut impl FnMut(f64) -> f64,
        (a, fa): (f64, f64),
        (m, fm): (f64, f64),
        (b, fb): (f64, f64),
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, (a, fa), (lm, flm), (m, fm), left, 0.5 * tol, depth - 1)
            + step(f, (m, fm), (rm, frm), (b, fb), right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    step(f, (a, fa), (m, fm), (b, fb), whole, rel_tol * scale, 48)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaReference {
    pub lambda: f64,
    /// `Θ_p(λ)^m`.
    pub theta: f64,
    /// `norm / Θ_p(λ)^m`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub phase: String,
    pub m: usize,
    pub p: f64,
    pub discard_prefix: usize,
    pub rows_used: usize,
    pub exponent: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub theory_lower_exp: Option<f64>,
    pub theory_upper_exp: Option<f64>,
    /// Fitted exponent of the certificate column, when every used row has one.
    pub cert_exponent: Option<f64>,
    /// Fitted exponent of the interpolation upper-bound column, when every used row has one.
    pub upper_bound_exponent: Option<f64>,
    pub theta: Vec<ThetaReference>,
}

impl GrowthReport {
    /// Records `Θ_p(λ)^m` and the ratio of the measured norm to it on the fitted rows.
    pub fn attach_theta(&mut self, model: &ModulusModel, rows: &[SweepRow]) -> Result<()> {
        self.theta.clear();
        for row in fit_rows(rows, self.discard_prefix) {
            let theta = theta_scale(model, self.p, row.lambda)?.powi(self.m as i32);
            self.theta.push(ThetaReference { lambda: row.lambda, theta, ratio: row.norm.unwrap() / theta });
        }
        Ok(())
    }
}

fn fit_rows(rows: &[SweepRow], discard_prefix: usize) -> Vec<&SweepRow> {
    let mut used: Vec<&SweepRow> = rows.iter().filter(|r| r.norm.is_some()).collect();
    used.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    used.into_iter().skip(discard_prefix).collect()
}

fn column_exponent(rows: &[&SweepRow], column: impl Fn(&SweepRow) -> Option<f64>) -> Option<f64> {
    let points: Option<Vec<(f64, f64)>> =
        rows.iter().map(|r| column(r).filter(|v| *v > 0.0).map(|v| (r.lambda.ln(), v.ln()))).collect();
    points.map(|pts| least_squares(&pts).slope)
}

/// Log-log fit of `norm` against `λ` for rows of a single `(phase, p)`, after dropping the
/// `discard_prefix` smallest λ.
pub fn fit_exponent(rows: &[SweepRow], discard_prefix: usize) -> Result<GrowthReport> {
    let used = fit_rows(rows, discard_prefix);
    if used.len() < MIN_FIT_ROWS {
        return Err(Error::InsufficientRows { needed: MIN_FIT_ROWS, got: used.len() });
    }
    let first = used[0];
    if used.iter().any(|r| r.p != first.p || r.phase != first.phase || r.m != first.m) {
        return Err(Error::InvalidArgument("fit_exponent needs rows of a single (phase, m, p)".into()));
    }
    let points: Vec<(f64, f64)> = used.iter().map(|r| (r.lambda.ln(), r.norm.unwrap().ln())).collect();
    let fit = least_squares(&points);
    Ok(GrowthReport {
        phase: first.phase.clone(),
        m: first.m,
        p: first.p,
        discard_prefix,
        rows_used: used.len(),
        exponent: fit.slope,
        intercept: fit.intercept,
        residual_rms: fit.residual_rms,
        theory_lower_exp: first.theory_lower_exp,
        theory_upper_exp: first.theory_upper_exp,
        cert_exponent: column_exponent(&used, |r| r.cert_lower),
        upper_bound_exponent: column_exponent(&used, |r| r.upper_bound),
        theta: Vec::new(),
    })
}

/// One report per `p` present in `rows`, in increasing `p`.
pub fn fit_all(rows: &[SweepRow], discard_prefix: usize) -> Vec<Result<GrowthReport>> {
    let mut ps: Vec<f64> = rows.iter().map(|r| r.p).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    ps.into_iter()
        .map(|p| {
            let group: Vec<SweepRow> = rows.iter().filter(|r| r.p == p).cloned().collect();
            fit_exponent(&group, discard_prefix)
        })
        .collect()
}

/// Two-column `ln λ  ln norm` text for one `p`.
pub fn plot_data(rows: &[SweepRow], p: f64) -> String {
    let mut out = String::from("# ln_lambda ln_norm\n");
    for r in rows.iter().filter(|r| r.p == p) {
        if let Some(norm) = r.norm {
            out.push_str(&format!("{:?} {:?}\n", r.lambda.ln(), norm.ln()));
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    row: SweepRow,
}

/// Runs sweeps, reusing rows from memory and from an optional directory of JSON records.
/// Records that fail to parse or whose stored key differs are ignored and recomputed.
pub struct Sweeper {
    cache_dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, SweepRow>>,
    write_lock: Mutex<()>,
    computed: AtomicUsize,
    pub certify_options: CertifyOptions,
}

impl Default for Sweeper {
    fn default() -> Self {
        Self::new()
    }
}

impl Sweeper {
    pub fn new() -> Self {
        Self {
            cache_dir: None,
            memory: Mutex::new(HashMap::new()),
            write_lock: Mutex::new(()),
            computed: AtomicUsize::new(0),
            certify_options: CertifyOptions {
                modulus: crate::phases::ModulusFitOptions { pairs_per_scale: 200_000, ..Default::default() },
                samples: 0,
                ..Default::default()
            },
        }
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    /// Rows computed (not served from a cache) so far.
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::SeqCst)
    }

    pub fn run(&self, plan: &SweepPlan) -> Result<Vec<SweepRow>> {
        let phase = plan.validate()?;
        match plan.workers {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
                .install(|| self.run_inner(plan, &phase)),
            None => self.run_inner(plan, &phase),
        }
    }

    fn run_inner(&self, plan: &SweepPlan, phase: &Phase) -> Result<Vec<SweepRow>> {
        let keys: Vec<Vec<String>> =
            plan.lambdas.iter().map(|&l| plan.ps.iter().map(|&p| row_key(plan, phase, l, p)).collect()).collect();
        let cached: Vec<Vec<Option<SweepRow>>> =
            keys.iter().map(|ks| ks.iter().map(|k| self.lookup(k)).collect()).collect();
        let need_setup = plan.certify && cached.iter().flatten().any(Option::is_none);
        let setup = if need_setup {
            match prepare(phase, &self.certify_options) {
                Ok(s) => Some(s),
                Err(Error::DegenerateGradient) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let mut rows: Vec<SweepRow> = plan
            .lambdas
            .par_iter()
            .zip(cached.into_par_iter())
            .zip(keys.par_iter())
            .flat_map_iter(|((&lambda, hits), ks)| {
                let fresh = if hits.iter().any(Option::is_none) {
                    self.computed.fetch_add(plan.ps.len(), Ordering::SeqCst);
                    let rows = compute_rows(plan, phase, lambda, setup.as_ref());
                    for (k, r) in ks.iter().zip(&rows) {
                        self.store(k, r);
                    }
                    rows
                } else {
                    hits.into_iter().flatten().collect()
                };
                fresh.into_iter()
            })
            .collect();
        rows.sort_by(|a, b| a.p.total_cmp(&b.p).then(a.lambda.total_cmp(&b.lambda)));
        Ok(rows)
    }

    fn record_path(&self, key: &str) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(format!("{:016x}.json", fnv1a(key.as_bytes()))))
    }

    fn lookup(&self, key: &str) -> Option<SweepRow> {
        if let Some(row) = self.memory.lock().unwrap().get(key) {
            return Some(row.clone());
        }
        let text = fs::read_to_string(self.record_path(key)?).ok()?;
        let record: CacheRecord = serde_json::from_str(&text).ok()?;
        (record.key == key).then_some(record.row)
    }

    fn store(&self, key: &str, row: &SweepRow) {
        self.memory.lock().unwrap().insert(key.to_string(), row.clone());
        if row.error.is_some() {
            return;
        }
        if let Some(path) = self.record_path(key) {
            let _guard = self.write_lock.lock().unwrap();
            // the cache is advisory: write failures only cost a recomputation later
            let _ = write_record(&path, &CacheRecord { key: key.to_string(), row: row.clone() });
        }
    }
}

fn write_record(path: &Path, record: &CacheRecord) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_vec(record)?)?;
    fs::rename(tmp, path)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn row_key(plan: &SweepPlan, phase: &Phase, lambda: f64, p: f64) -> String {
    format!(
        "v{}|{}|m={}|n0={}|{}|lambda={:?}|p={:?}|cert={}",
        crate::VERSION,
        phase.key(),
        phase.m(),
        plan.policy.initial_n(phase, lambda),
        plan.policy.describe(),
        lambda,
        p,
        plan.certify
    )
}

fn compute_rows(plan: &SweepPlan, phase: &Phase, lambda: f64, setup: Option<&CertificationSetup>) -> Vec<SweepRow> {
    let m = phase.m();
    let theory_budget = phase.smoothness().theory_budget(m);
    let budget = exp_budget(phase);
    let seminorm = exp_seminorm(phase, lambda);
    let estimates = ap_norms(phase, lambda, &plan.ps, &plan.policy);
    plan.ps
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let theory = theory_exponents(m, p, &theory_budget);
            let mut row = SweepRow {
                phase: phase.key(),
                m,
                p,
                lambda,
                grid_n: None,
                norm: None,
                tail_bound: None,
                cert_lower: setup
                    .and_then(|s| measure_lower_bound(lambda, p, &s.range, &s.model, s.c_fit, m).ok().map(|c| c.bound)),
                upper_bound: interpolation_bound(&budget, seminorm, 1.0, p, m).ok(),
                theory_lower_exp: theory.lower.filter(|_| theory.lower_valid),
                theory_upper_exp: theory.upper_valid.then_some(theory.upper),
                error: None,
            };
            match &estimates {
                Ok(est) => {
                    row.grid_n = Some(est[i].grid_n);
                    row.norm = Some(est[i].value);
                    row.tail_bound = est[i].tail_bound;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}

/// Uncached sweep.
pub fn sweep(plan: &SweepPlan) -> Result<Vec<SweepRow>> {
    Sweeper::new().run(plan)
}
