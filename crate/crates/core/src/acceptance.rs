//! The acceptance suite: ten criteria, each a list of numeric checks plus a runtime budget.
//!
//! Every check is reduced to a ratio against its tolerance, `<= 1` meaning pass, so a
//! tighten factor `t` can flag checks that would fail with tolerances divided by `t`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::apnorm::{
    ap_norm, ap_norms, exp_budget, exp_seminorm, interpolation_upper_bound, resolved_spectrum, tail_bound, GridPolicy,
};
use crate::growth::{dyadic, fit_exponent, least_squares, theta_scale, SweepPlan, SweepRow, Sweeper};
use crate::lower_cert::{
    delta_lambda, measure_lower_bound, prepare, sampled_concentration, CertifyOptions, ModulusModel,
};
use crate::oracles::{bessel_lp_norm, bessel_tail};
use crate::phases::{builtin, Phase, PhaseParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub observed: f64,
    /// Observed deviation over allowed deviation; `<= 1` passes.
    pub ratio: f64,
}

impl Check {
    /// `|observed - expected| <= tol`.
    pub fn within(label: impl Into<String>, observed: f64, expected: f64, tol: f64) -> Self {
        Self::ratio(label, observed, (observed - expected).abs() / tol)
    }

    /// `|observed / expected - 1| <= tol`.
    pub fn relative(label: impl Into<String>, observed: f64, expected: f64, tol: f64) -> Self {
        Self::ratio(label, observed, (observed / expected - 1.0).abs() / tol)
    }

    /// `observed <= limit` for positive quantities.
    pub fn at_most(label: impl Into<String>, observed: f64, limit: f64) -> Self {
        Self::ratio(label, observed, observed / limit)
    }

    /// `observed >= limit` for positive quantities.
    pub fn at_least(label: impl Into<String>, observed: f64, limit: f64) -> Self {
        Self::ratio(label, observed, limit / observed)
    }

    /// `lo <= observed <= hi`.
    pub fn bracket(label: impl Into<String>, observed: f64, lo: f64, hi: f64) -> Self {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        Self::ratio(label, observed, (observed - mid).abs() / half)
    }

    pub fn truth(label: impl Into<String>, holds: bool) -> Self {
        Self::ratio(label, holds as u8 as f64, if holds { 0.0 } else { f64::INFINITY })
    }

    fn error(label: impl Into<String>, err: &Error) -> Self {
        Self::ratio(format!("{}: {err}", label.into()), f64::NAN, f64::INFINITY)
    }

    fn ratio(label: impl Into<String>, observed: f64, ratio: f64) -> Self {
        // NaN ratios fail
        let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        Self { label: label.into(), observed, ratio }
    }

    pub fn passed(&self) -> bool {
        self.ratio <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub checks: Vec<Check>,
    pub elapsed_secs: f64,
    pub budget_secs: f64,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(Check::passed) && self.elapsed_secs <= self.budget_secs
    }

    pub fn worst_ratio(&self) -> f64 {
        self.checks.iter().map(|c| c.ratio).fold(0.0, f64::max)
    }

    /// Passing checks that would fail with tolerances divided by `tighten`.
    pub fn marginal(&self, tighten: f64) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.passed() && c.ratio * tighten > 1.0).collect()
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} [{}] {}: worst ratio {:.3}, {} checks, {:.1} s of {:.0} s",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.worst_ratio(),
            self.checks.len(),
            self.elapsed_secs,
            self.budget_secs
        )
    }

    /// Summary line followed by every failing check.
    pub fn detail(&self) -> String {
        let mut out = self.summary_line();
        for c in self.checks.iter().filter(|c| !c.passed()) {
            out.push_str(&format!("\n    failed: {} (observed {:?}, ratio {:.3})", c.label, c.observed, c.ratio));
        }
        if self.elapsed_secs > self.budget_secs {
            out.push_str(&format!("\n    failed: runtime {:.1} s over budget", self.elapsed_secs));
        }
        out
    }
}

/// `(id, title, runtime budget in seconds)`.
pub const CRITERIA: [(u32, &str, f64); 10] = [
    (1, "Parseval control", 10.0),
    (2, "Bessel oracle agreement", 10.0),
    (3, "two-sided growth exponent", 300.0),
    (4, "tensor multiplicativity", 30.0),
    (5, "certificate soundness", 120.0),
    (6, "triangle-window concentration", 60.0),
    (7, "upper-bound sandwich", 30.0),
    (8, "Theta scales", 10.0),
    (9, "degenerate hypotheses", 5.0),
    (10, "weierstrass bracket", 120.0),
];

pub fn run(id: u32) -> Result<CriterionReport> {
    let &(_, title, budget) = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| Error::InvalidArgument(format!("no acceptance criterion {id}")))?;
    let start = Instant::now();
    let checks = match id {
        1 => parseval(),
        2 => bessel_agreement(),
        3 => two_sided_exponent(),
        4 => tensor_multiplicativity(),
        5 => certificate_soundness(),
        6 => concentration(),
        7 => sandwich(),
        8 => theta_scales(),
        9 => degenerate(),
        _ => weierstrass_bracket(),
    };
    Ok(CriterionReport {
        id,
        title: title.to_string(),
        checks,
        elapsed_secs: start.elapsed().as_secs_f64(),
        budget_secs: budget,
    })
}

pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA.iter().map(|c| run(c.0).expect("listed criterion")).collect()
}

fn phase(name: &str, m: usize, params: PhaseParams) -> Phase {
    builtin(name, m, &params).expect("built-in phase")
}

fn weierstrass_params(depth: Option<u32>) -> PhaseParams {
    PhaseParams { base: Some("weierstrass".into()), depth, ..Default::default() }
}

/// Every family in dimensions 1 and 2. The tensor weierstrass phase is cut to depth 6 in
/// two dimensions to keep the grid within memory.
fn builtin_zoo() -> Vec<Phase> {
    let mut out = Vec::new();
    for m in [1, 2] {
        out.push(phase("constant", m, PhaseParams { value: Some(0.3), ..Default::default() }));
        out.push(phase("linear", m, PhaseParams::default()));
        out.push(phase("cosine_sum", m, PhaseParams::default()));
        out.push(phase("tensor_sum", m, PhaseParams::default()));
        out.push(phase("tensor_sum", m, weierstrass_params(if m == 1 { None } else { Some(6) })));
    }
    out.push(phase("cosine", 1, PhaseParams::default()));
    out.push(phase("weierstrass", 1, PhaseParams::default()));
    out
}

fn parseval() -> Vec<Check> {
    let policy = GridPolicy::default();
    let mut checks = Vec::new();
    for ph in builtin_zoo() {
        for lambda in [1.0, 8.0, 64.0] {
            let label = format!("{} m={} lambda={lambda}", ph.key(), ph.m());
            checks.push(match ap_norm(&ph, lambda, 2.0, &policy) {
                Ok(e) => Check::within(label, e.value, 1.0, 1e-9),
                Err(e) => Check::error(label, &e),
            });
        }
    }
    checks
}

fn bessel_agreement() -> Vec<Check> {
    let cosine = phase("cosine", 1, PhaseParams::default());
    let mut checks = Vec::new();
    for lambda in [1.0, 5.0, 10.0, 20.0] {
        let label = format!("lambda={lambda}");
        match ap_norms(&cosine, lambda, &[1.0, 1.5], &GridPolicy::default()) {
            Ok(estimates) => {
                for e in estimates {
                    let oracle = bessel_lp_norm(lambda, e.p).expect("kmax chosen by the oracle");
                    checks.push(Check::relative(format!("{label} p={}", e.p), e.value, oracle, 1e-8));
                }
            }
            Err(e) => checks.push(Check::error(label, &e)),
        }
    }
    checks
}

fn sweep_rows(name: &str, m: usize, params: PhaseParams, lambdas: Vec<f64>, ps: Vec<f64>) -> Result<Vec<SweepRow>> {
    let plan = SweepPlan { params, ps, lambdas, certify: false, ..SweepPlan::new(name, m) };
    Sweeper::new().run(&plan)
}

fn two_sided_exponent() -> Vec<Check> {
    let mut checks = Vec::new();
    // five dyadic points in two dimensions leave room to drop only one
    for (name, m, hi, tol, discard) in [("cosine", 1, 256.0, 0.05, 2), ("cosine_sum", 2, 128.0, 0.1, 1)] {
        let rows = match sweep_rows(name, m, PhaseParams::default(), dyadic(8.0, hi), vec![1.0, 1.5]) {
            Ok(rows) => rows,
            Err(e) => {
                checks.push(Check::error(name, &e));
                continue;
            }
        };
        for p in [1.0, 1.5] {
            let group: Vec<SweepRow> = rows.iter().filter(|r| r.p == p).cloned().collect();
            let label = format!("{name} m={m} p={p}");
            if let Some(r) = group.iter().find(|r| r.error.is_some()) {
                checks.push(Check::truth(format!("{label} lambda={}: {}", r.lambda, r.error.as_ref().unwrap()), false));
            }
            let expected = m as f64 * (1.0 / p - 0.5);
            checks.push(match fit_exponent(&group, discard) {
                Ok(report) => Check::within(label, report.exponent, expected, tol),
                Err(e) => Check::error(label, &e),
            });
        }
    }
    checks
}

fn tensor_multiplicativity() -> Vec<Check> {
    let cosine = phase("cosine", 1, PhaseParams::default());
    let tensor = phase("tensor_sum", 2, PhaseParams::default());
    let policy = GridPolicy::default();
    let mut checks = Vec::new();
    for lambda in [8.0, 32.0] {
        let label = format!("lambda={lambda}");
        let one = ap_norms(&cosine, lambda, &[1.0, 1.5], &policy);
        let two = ap_norms(&tensor, lambda, &[1.0, 1.5], &policy);
        match (one, two) {
            (Ok(one), Ok(two)) => {
                for (a, b) in one.iter().zip(&two) {
                    checks.push(Check::relative(format!("{label} p={}", a.p), b.value, a.value * a.value, 1e-8));
                }
            }
            (Err(e), _) | (_, Err(e)) => checks.push(Check::error(label, &e)),
        }
    }
    checks
}

fn certificate_soundness() -> Vec<Check> {
    let options = CertifyOptions::default();
    let lambdas = dyadic(16.0, 128.0);
    let ps = [1.0, 1.5];
    let mut checks = Vec::new();
    for (name, m) in [("cosine", 1), ("cosine_sum", 2)] {
        let ph = phase(name, m, PhaseParams::default());
        let setup = match prepare(&ph, &options) {
            Ok(s) => s,
            Err(e) => {
                checks.push(Check::error(name, &e));
                continue;
            }
        };
        let mut bounds: Vec<Vec<(f64, f64)>> = vec![Vec::new(); ps.len()];
        for &lambda in &lambdas {
            let norms = match ap_norms(&ph, lambda, &ps, &options.policy) {
                Ok(n) => n,
                Err(e) => {
                    checks.push(Check::error(format!("{name} lambda={lambda}"), &e));
                    continue;
                }
            };
            for (i, est) in norms.iter().enumerate() {
                let label = format!("{name} lambda={lambda} p={}", est.p);
                match measure_lower_bound(lambda, est.p, &setup.range, &setup.model, setup.c_fit, m) {
                    Ok(cert) => {
                        checks.push(Check::at_most(format!("{label} bound/norm"), cert.bound, est.value));
                        bounds[i].push((lambda.ln(), cert.bound.ln()));
                    }
                    Err(e) => checks.push(Check::error(label, &e)),
                }
            }
        }
        for (i, &p) in ps.iter().enumerate() {
            let expected = m as f64 * (1.0 / p - 0.5);
            let slope = least_squares(&bounds[i]).slope;
            checks.push(Check::within(format!("{name} p={p} certificate exponent"), slope, expected, 1e-6));
        }
    }
    checks
}

fn concentration() -> Vec<Check> {
    let cosine = phase("cosine", 1, PhaseParams::default());
    let options = CertifyOptions::default();
    let setup = match prepare(&cosine, &options) {
        Ok(s) => s,
        Err(e) => return vec![Check::error("cosine setup", &e)],
    };
    let mut checks = Vec::new();
    for lambda in [16.0, 64.0] {
        let label = format!("lambda={lambda} pass rate");
        let run = || -> Result<f64> {
            let delta = delta_lambda(lambda, &setup.model, setup.c_fit, 1)?;
            let spectrum = resolved_spectrum(&cosine, lambda, &[1.0], &options.policy)?;
            let results = sampled_concentration(&cosine, &spectrum, lambda, delta, 100, options.seed)?;
            Ok(results.iter().filter(|c| c.pass).count() as f64 / results.len() as f64)
        };
        checks.push(match run() {
            Ok(rate) => Check::at_least(label, rate, 0.95),
            Err(e) => Check::error(label, &e),
        });
    }
    checks
}

fn sandwich() -> Vec<Check> {
    let cosine = phase("cosine", 1, PhaseParams::default());
    let policy = GridPolicy::default();
    let budget = exp_budget(&cosine);
    let mut checks = Vec::new();
    for lambda in [8.0, 32.0] {
        let seminorm = exp_seminorm(&cosine, lambda);
        let run = || -> Result<(f64, f64, f64, f64)> {
            let spectrum = resolved_spectrum(&cosine, lambda, &[1.0], &policy)?;
            let norm = crate::torus_spectra::lp_sum(&spectrum, 1.0)?;
            let upper = interpolation_upper_bound(&spectrum, &budget, seminorm, 1.0, 1.0)?;
            let b = 4.0 * lambda;
            let tail = tail_bound(&budget, seminorm, b, 1.0, 1)?;
            let true_tail = bessel_tail(lambda, b as usize, 1.0)?;
            Ok((norm, upper, tail, true_tail))
        };
        match run() {
            Ok((norm, upper, tail, true_tail)) => {
                checks.push(Check::at_least(format!("lambda={lambda} interpolation bound vs norm"), upper, norm));
                checks.push(Check::at_least(format!("lambda={lambda} tail bound vs Bessel tail"), tail, true_tail));
            }
            Err(e) => checks.push(Check::error(format!("lambda={lambda}"), &e)),
        }
    }
    checks
}

fn theta_scales() -> Vec<Check> {
    let mut checks = Vec::new();
    let lipschitz = ModulusModel::Power { alpha: 1.0 };
    for y in [100.0f64, 1e4] {
        let label = format!("Theta_1({y}) = sqrt(y)");
        checks.push(match theta_scale(&lipschitz, 1.0, y) {
            Ok(v) => Check::within(label, v, y.sqrt(), 1e-12),
            Err(e) => Check::error(label, &e),
        });
    }
    let alpha = 0.5;
    let half = ModulusModel::Power { alpha };
    let ys: Vec<f64> = (0..=16).map(|i| 10f64.powf(2.0 + i as f64 / 8.0)).collect();
    let p = 1.2;
    let points: Result<Vec<(f64, f64)>> =
        ys.iter().map(|&y| theta_scale(&half, p, y).map(|v| (y.ln(), v.ln()))).collect();
    let expected = 1.0 / p - 1.0 / (1.0 + alpha);
    checks.push(match points {
        Ok(points) => Check::relative("Theta_1.2 slope over [1e2, 1e4]", least_squares(&points).slope, expected, 0.02),
        Err(e) => Check::error("Theta_1.2 slope", &e),
    });
    let ratio = theta_scale(&half, 1.8, 1e4).and_then(|a| Ok(a / theta_scale(&half, 1.8, 100.0)?));
    checks.push(match ratio {
        Ok(r) => Check::at_most("Theta_1.8(1e4)/Theta_1.8(1e2) < 1.2", r, 1.2),
        Err(e) => Check::error("Theta_1.8 ratio", &e),
    });
    checks
}

fn degenerate() -> Vec<Check> {
    let policy = GridPolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checks = Vec::new();
    for m in [1, 2] {
        for _ in 0..3 {
            let k: Vec<i64> = (0..m).map(|_| rng.gen_range(-4..=4)).collect();
            let ph = phase("linear", m, PhaseParams { k: Some(k), ..Default::default() });
            for lambda in [1.0, 3.0, 16.0] {
                for p in [1.0, 1.5, 2.0] {
                    let label = format!("{} lambda={lambda} p={p}", ph.key());
                    checks.push(match ap_norm(&ph, lambda, p, &policy) {
                        Ok(e) => Check::within(label, e.value, 1.0, 1e-12),
                        Err(e) => Check::error(label, &e),
                    });
                }
            }
            let refused = matches!(prepare(&ph, &CertifyOptions::default()), Err(Error::DegenerateGradient));
            checks.push(Check::truth(format!("{} certificate refused", ph.key()), refused));
        }
    }
    checks
}

fn weierstrass_bracket() -> Vec<Check> {
    let lower = 1.0 / 3.0;
    match sweep_rows("weierstrass", 1, PhaseParams::default(), dyadic(8.0, 256.0), vec![1.0]) {
        Ok(rows) => {
            let mut checks: Vec<Check> = rows
                .iter()
                .filter_map(|r| r.error.as_ref().map(|e| Check::truth(format!("lambda={}: {e}", r.lambda), false)))
                .collect();
            checks.push(match fit_exponent(&rows, crate::growth::DEFAULT_DISCARD_PREFIX) {
                Ok(report) => Check::bracket("fitted exponent", report.exponent, lower - 0.1, 0.5 + 0.05),
                Err(e) => Check::error("fit", &e),
            });
            checks
        }
        Err(e) => vec![Check::error("sweep", &e)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_ratios() {
        assert!(Check::within("a", 1.0 + 5e-10, 1.0, 1e-9).passed());
        assert!(!Check::within("a", 1.0 + 2e-9, 1.0, 1e-9).passed());
        assert!(Check::at_most("b", 1.0, 2.0).passed());
        assert!(!Check::at_least("c", 0.9, 0.95).passed());
        assert!(Check::bracket("d", 0.4, 0.2, 0.6).passed());
        assert!(!Check::bracket("d", 0.7, 0.2, 0.6).passed());
        assert!(!Check::relative("e", f64::NAN, 1.0, 1.0).passed());
        assert!(!Check::truth("f", false).passed());
    }

    #[test]
    fn marginal_reporting() {
        let report = CriterionReport {
            id: 0,
            title: "t".into(),
            checks: vec![Check::within("x", 0.6, 0.0, 1.0), Check::within("y", 0.1, 0.0, 1.0)],
            elapsed_secs: 0.0,
            budget_secs: 1.0,
        };
        assert!(report.passed());
        assert_eq!(report.marginal(2.0).len(), 1);
        assert!(report.marginal(1.0).is_empty());
        assert!(report.summary_line().starts_with("PASS [0]"));
    }

    #[test]
    fn unknown_criterion() {
        assert!(run(11).is_err());
    }
}
