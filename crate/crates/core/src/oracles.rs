//! Slow, independent references for the fast path. Nothing here touches the FFT code.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::summation::NeumaierSum;
use crate::torus_spectra::{Field, MAX_DIMENSION};
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub oracle: f64,
    pub fast: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, oracle: f64, fast: f64) -> Self {
        let abs_error = (oracle - fast).abs();
        let rel_error = if oracle != 0.0 { abs_error / oracle.abs() } else { abs_error };
        Self { quantity: quantity.into(), oracle, fast, abs_error, rel_error }
    }
}

/// `n^{-m} Σ_j f(t_j) e^{-i(k, t_j)}` by direct summation.
pub fn direct_coefficient(field: &Field, k: &[i64]) -> Result<Complex64> {
    let grid = field.grid();
    let (m, n) = (grid.m(), grid.n());
    let half = (n / 2) as i64;
    if k.len() != m || k.iter().any(|&ka| ka < -half || ka >= half) {
        return Err(Error::OutsideBox(k.to_vec()));
    }
    let mut digits = [0usize; MAX_DIMENSION];
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &value) in field.values().iter().enumerate() {
        let mut rest = j;
        for a in (0..m).rev() {
            digits[a] = rest % n;
            rest /= n;
        }
        let angle: f64 = (0..m).map(|a| k[a] as f64 * TAU * digits[a] as f64 / n as f64).sum();
        acc += value * Complex64::cis(-angle);
    }
    Ok(acc / field.values().len() as f64)
}

/// Bessel functions `J_0(x) .. J_kmax(x)` by Miller's downward recurrence, normalised with
/// `J_0 + 2 Σ_{k>=1} J_{2k} = 1`.
pub fn bessel_coefficients(x: f64, kmax: usize) -> Result<Vec<f64>> {
    if (kmax as f64) < x.abs() + 40.0 {
        return Err(Error::KmaxTooSmall { kmax, lambda: x });
    }
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    let ax = x.abs();
    let start = kmax + 40 + (ax.sqrt() * 10.0) as usize;
    let mut values = vec![0.0; start + 2];
    values[start] = 1e-30;
    for k in (1..=start).rev() {
        values[k - 1] = 2.0 * k as f64 / ax * values[k] - values[k + 1];
        if values[k - 1].abs() > 1e250 {
            values.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    let mut norm = NeumaierSum::new();
    norm += values[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * values[k];
    }
    let scale = 1.0 / norm.value();
    for (k, o) in out.iter_mut().enumerate() {
        let sign = if x < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        *o = sign * values[k] * scale;
    }
    Ok(out)
}

/// `J_k(x) = (2π)^{-1} ∫_0^{2π} cos(kτ - x sin τ) dτ` by the trapezoidal rule, which converges
/// geometrically for this periodic integrand.
pub fn bessel_integral(k: i64, x: f64) -> f64 {
    let points = 2 * (k.unsigned_abs() as usize + x.abs().ceil() as usize) + 128;
    let h = TAU / points as f64;
    let sum: NeumaierSum = (0..points)
        .map(|j| {
            let tau = j as f64 * h;
            (k as f64 * tau - x * tau.sin()).cos()
        })
        .collect();
    sum.value() / points as f64
}

/// `f̂(k)` for `f(t) = e^{iλ cos t}`: `i^k J_k(λ)` with `J_{-k} = (-1)^k J_k`.
pub fn cosine_phase_coefficient(bessel: &[f64], k: i64) -> Complex64 {
    let magnitude = bessel[k.unsigned_abs() as usize];
    let signed = if k < 0 && k % 2 != 0 { -magnitude } else { magnitude };
    let i_pow = match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    i_pow * signed
}

/// `‖e^{iλ cos t}‖_{A_p(T)} = (|J_0(λ)|^p + 2 Σ_{k>=1} |J_k(λ)|^p)^{1/p}`.
pub fn bessel_lp_norm(lambda: f64, p: f64) -> Result<f64> {
    let kmax = lambda.abs().ceil() as usize + 80;
    let j = bessel_coefficients(lambda, kmax)?;
    let mut terms: Vec<f64> =
        j.iter().enumerate().map(|(k, v)| if k == 0 { v.abs().powf(p) } else { 2.0 * v.abs().powf(p) }).collect();
    terms.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(terms.into_iter().collect::<NeumaierSum>().value().powf(1.0 / p))
}

/// `Σ_{|k| >= b} |J_k(λ)|^p`.
pub fn bessel_tail(lambda: f64, b: usize, p: f64) -> Result<f64> {
    let kmax = (lambda.abs().ceil() as usize).max(b) + 80;
    let j = bessel_coefficients(lambda, kmax)?;
    let mut terms: Vec<f64> = j[b.max(1)..].iter().map(|v| 2.0 * v.abs().powf(p)).collect();
    if b == 0 {
        terms.push(j[0].abs().powf(p));
    }
    terms.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(terms.into_iter().collect::<NeumaierSum>().value())
}

/// Reference `J_0(x)` from its power series, for small arguments.
pub fn bessel_j0_series(x: f64) -> f64 {
    let q = -(x * x) / 4.0;
    let mut term = 1.0;
    let mut sum = NeumaierSum::new();
    sum += 1.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.value().abs() {
            break;
        }
    }
    sum.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_spectra::{analyze, GridSpec};

    #[test]
    fn bessel_at_zero() {
        let j = bessel_coefficients(0.0, 40).unwrap();
        assert_eq!(j[0], 1.0);
        assert!(j[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kmax_precondition() {
        assert!(matches!(bessel_coefficients(5.0, 44), Err(Error::KmaxTooSmall { .. })));
        assert!(bessel_coefficients(5.0, 45).is_ok());
    }

    #[test]
    fn normalisation_identity() {
        for x in [0.5, 5.0, 20.0, 77.7] {
            let j = bessel_coefficients(x, x as usize + 60).unwrap();
            let mut s = NeumaierSum::new();
            s += j[0];
            for k in (2..j.len()).step_by(2) {
                s += 2.0 * j[k];
            }
            assert!((s.value() - 1.0).abs() < 1e-12, "x={x}");
            assert!(j.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn recurrence_matches_quadrature_and_series() {
        for x in [0.3, 5.0, 10.0, 20.0] {
            let j = bessel_coefficients(x, x as usize + 60).unwrap();
            for (k, jk) in j.iter().enumerate().take(x as usize + 20) {
                let q = bessel_integral(k as i64, x);
                assert!((jk - q).abs() < 1e-13, "x={x} k={k}: {jk} vs {q}");
            }
            // the series cancels catastrophically for large x
            if x <= 5.0 {
                assert!((j[0] - bessel_j0_series(x)).abs() < 1e-12);
            }
        }
        // J_1(5) from tables
        let j = bessel_coefficients(5.0, 50).unwrap();
        assert!((j[1] - (-0.327_579_137_591_465_2)).abs() < 1e-14);
    }

    #[test]
    fn negative_argument_parity() {
        let a = bessel_coefficients(7.0, 60).unwrap();
        let b = bessel_coefficients(-7.0, 60).unwrap();
        for k in 0..=60 {
            let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
            assert!((b[k] - sign * a[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn l1_norm_two_ways() {
        let via_recurrence = bessel_lp_norm(5.0, 1.0).unwrap();
        let mut via_quadrature = bessel_integral(0, 5.0).abs();
        for k in 1..80 {
            via_quadrature += 2.0 * bessel_integral(k, 5.0).abs();
        }
        assert!((via_recurrence - via_quadrature).abs() < 1e-8 * via_recurrence);
    }

    #[test]
    fn direct_coefficients() {
        let g = GridSpec::new(1, 16).unwrap();
        let constant = Field::from_fn(g, |_| Complex64::new(1.0, 0.0));
        assert!((direct_coefficient(&constant, &[0]).unwrap() - 1.0).norm() < 1e-15);
        let harmonic = Field::from_fn(g, |t| Complex64::cis(2.0 * t[0]));
        assert!((direct_coefficient(&harmonic, &[2]).unwrap() - 1.0).norm() < 1e-14);
        assert!(direct_coefficient(&harmonic, &[8]).is_err());
    }

    #[test]
    fn direct_matches_fast_path_on_random_fields() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for (m, n) in [(1, 32), (2, 16), (3, 8)] {
            let g = GridSpec::new(m, n).unwrap();
            let values =
                (0..g.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let f = Field::new(g, values).unwrap();
            let s = analyze(&f);
            for (k, c) in s.iter() {
                let d = direct_coefficient(&f, &k[..m]).unwrap();
                assert!((c - d).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn jacobi_anger_coefficients_match_analysis() {
        let g = GridSpec::new(1, 256).unwrap();
        let f = Field::from_fn(g, |t| Complex64::cis(5.0 * t[0].cos()));
        let s = analyze(&f);
        let j = bessel_coefficients(5.0, 60).unwrap();
        for k in -40..=40 {
            let expected = cosine_phase_coefficient(&j, k);
            assert!((s.coefficient(&[k]).unwrap() - expected).norm() < 1e-10, "k={k}");
        }
    }
}
