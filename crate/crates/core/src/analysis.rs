//! State-comparison metrics and the scalar quantities used by the theorem
//! checks.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockOperator};
use crate::linalg;

/// Minimum coefficient of determination accepted by [`decay_rate_fit`].
pub const MIN_R_SQUARED: f64 = 0.99;

/// Uhlmann fidelity `tr √(√σ ρ √σ)` of two density matrices given as raw
/// matrices of equal size, evaluated as the nuclear norm `‖√ρ √σ‖₁` so no
/// square root of a near-zero eigenvalue is taken at the last step.
pub fn fidelity_matrix(rho: &Array2<C64>, sigma: &Array2<C64>) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::ShapeMismatch {
            expected: rho.nrows(),
            rows: sigma.nrows(),
            cols: sigma.ncols(),
        });
    }
    let prod = linalg::psd_sqrt(rho)?.dot(&linalg::psd_sqrt(sigma)?);
    linalg::nuclear_norm(&prod)
}

pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    fidelity_matrix(rho.matrix(), sigma.matrix())
}

/// `½ tr|ρ − σ|`.
pub fn trace_distance_matrix(rho: &Array2<C64>, sigma: &Array2<C64>) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::ShapeMismatch {
            expected: rho.nrows(),
            rows: sigma.nrows(),
            cols: sigma.ncols(),
        });
    }
    let mut diff = rho - sigma;
    linalg::hermitize(&mut diff);
    let vals = linalg::eigvalsh(&diff)?;
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    trace_distance_matrix(rho.matrix(), sigma.matrix())
}

/// `V(ρ) = tr(L ρ L†)`.
pub fn lyapunov_v(rho: &DensityMatrix, l: &FockOperator) -> f64 {
    let lm = l.matrix();
    let prod = lm.dot(rho.matrix()).dot(&linalg::dagger(lm));
    linalg::trace(&prod).re
}

/// `tr(ρ N^ν)`.
pub fn moment(rho: &DensityMatrix, nu: u32) -> f64 {
    rho.matrix()
        .diag()
        .iter()
        .enumerate()
        .map(|(n, z)| z.re * (n as f64).powi(nu as i32))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpFit {
    /// Decay rate `r` in `y ≈ A e^{−r t}`.
    pub rate: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Log-linear least-squares fit of `|y| ≈ A e^{−r t}` over samples with
/// `window.0 ≤ t ≤ window.1`. Fails with [`Error::FitRejected`] when the
/// coefficient of determination is below [`MIN_R_SQUARED`].
pub fn decay_rate_fit(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<ExpFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(&t, &y)| (t, y.abs()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "fit window [{}, {}] holds {} samples, need at least 3",
            window.0,
            window.1,
            pts.len()
        )));
    }
    if let Some(&(t, _)) = pts.iter().find(|(_, y)| !(*y > 0.0) || !y.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-positive or non-finite sample at t = {t}"
        )));
    }

    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &pts {
        let (dt, dy) = (t - mt, y.ln() - my);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let ss_res: f64 = pts
        .iter()
        .map(|&(t, y)| (y.ln() - intercept - slope * t).powi(2))
        .sum();
    // a flat series is fitted exactly by slope 0; only roundoff is left in syy
    let flat = syy <= 1e-24 * n * (1.0 + my * my);
    let r_squared = if flat { 1.0 } else { 1.0 - ss_res / syy };
    if r_squared < MIN_R_SQUARED {
        return Err(Error::FitRejected(r_squared));
    }
    Ok(ExpFit {
        rate: -slope,
        amplitude: intercept.exp(),
        r_squared,
        samples: pts.len(),
    })
}

/// Constants of the moment inequality
/// `d/dt tr(ρN^ν) ≤ −ν tr(ρN^ν)^{(ν+1)/ν} + μ` for the two-photon dissipator
/// at unit rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentBound {
    pub nu: u32,
    pub mu: f64,
    /// Moments above this value strictly decrease.
    pub threshold: f64,
}

/// Per-level excess `((x+2)^ν − x^ν)(−x² + (α²+1)x + 3α²) + ν x^{ν+1}`,
/// whose supremum over `x ≥ 0` bounds `μ`.
fn moment_excess(x: f64, alpha: f64, nu: u32) -> f64 {
    let a2 = alpha * alpha;
    let p = nu as i32;
    ((x + 2.0).powi(p) - x.powi(p)) * (-x * x + (a2 + 1.0) * x + 3.0 * a2)
        + nu as f64 * x.powi(p + 1)
}

pub fn moment_bound(alpha: f64, nu: u32) -> Result<MomentBound> {
    if nu == 0 {
        return Err(Error::InvalidInput("moment order must be positive".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::DegenerateAmplitude(alpha));
    }
    // the excess behaves like −ν x^{ν+1} for large x; its maximiser lies well
    // inside this range
    let x_max = 4.0 * (alpha * alpha + nu as f64 + 3.0);
    let steps = 20_000;
    let h = x_max / steps as f64;
    let mut best = (0.0, moment_excess(0.0, alpha, nu));
    for k in 1..=steps {
        let x = k as f64 * h;
        let f = moment_excess(x, alpha, nu);
        if f > best.1 {
            best = (x, f);
        }
    }
    // golden-section refinement around the grid maximum
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = ((best.0 - h).max(0.0), best.0 + h);
    for _ in 0..80 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if moment_excess(x1, alpha, nu) < moment_excess(x2, alpha, nu) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let mu = moment_excess(0.5 * (lo + hi), alpha, nu).max(best.1).max(0.0);
    let threshold = (mu / nu as f64).powf(nu as f64 / (nu as f64 + 1.0));
    Ok(MomentBound { nu, mu, threshold })
}

/// Named scalar metrics of one state, optionally against a reference.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricReport {
    pub values: BTreeMap<String, f64>,
}

impl MetricReport {
    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{cat_state, coherent_state, two_photon_jump, CatSign, FockSpace, Ket};
    use crate::random::{random_density, random_unitary, rng};

    fn space() -> FockSpace {
        FockSpace::new(40).unwrap()
    }

    #[test]
    fn fidelity_basics() {
        let s = space();
        let rho = random_density(s, 6, &mut rng(3));
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
        let a = DensityMatrix::fock(s, 0).unwrap();
        let b = DensityMatrix::fock(s, 1).unwrap();
        assert!(fidelity(&a, &b).unwrap().abs() < 1e-10);
    }

    #[test]
    fn fidelity_vacuum_cat() {
        let s = space();
        let vac = DensityMatrix::vacuum(s);
        let cat = cat_state(s, 1.0, CatSign::Plus).unwrap().density().unwrap();
        // pure states: F = |⟨0|c+⟩| = 2 e^{-1/2} / γ+
        let gp = (2.0 * (1.0 + (-2.0f64).exp())).sqrt();
        let expected = 2.0 * (-0.5f64).exp() / gp;
        let f = fidelity(&vac, &cat).unwrap();
        assert!((f - expected).abs() < 1e-9, "{f}");
        assert!((f - 0.8050182).abs() < 1e-7);
    }

    #[test]
    fn trace_distance_examples() {
        let s = space();
        let a = DensityMatrix::fock(s, 0).unwrap();
        let b = DensityMatrix::fock(s, 1).unwrap();
        assert!(trace_distance(&a, &a).unwrap().abs() < 1e-14);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let mix = DensityMatrix::new(s, (a.matrix() + b.matrix()) * C64::new(0.5, 0.0)).unwrap();
        assert!((trace_distance(&mix, &a).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fuchs_van_de_graaf_and_symmetry() {
        let s = FockSpace::new(12).unwrap();
        let mut r = rng(11);
        for _ in 0..20 {
            let p = random_density(s, 12, &mut r);
            let q = random_density(s, 4, &mut r);
            let f = fidelity(&p, &q).unwrap();
            let f_rev = fidelity(&q, &p).unwrap();
            let d = trace_distance(&p, &q).unwrap();
            assert!((f - f_rev).abs() < 1e-10);
            assert!(1.0 - f <= d + 1e-9);
            assert!(d <= (1.0 - f * f).max(0.0).sqrt() + 1e-9);

            let u = random_unitary(s, &mut r);
            let rot = |m: &DensityMatrix| {
                let um = u.matrix();
                DensityMatrix::new(s, um.dot(m.matrix()).dot(&linalg::dagger(um))).unwrap()
            };
            assert!((fidelity(&rot(&p), &rot(&q)).unwrap() - f).abs() < 1e-9);
        }
    }

    #[test]
    fn lyapunov_examples() {
        let s = space();
        let vac = DensityMatrix::vacuum(s);
        assert!((lyapunov_v(&vac, &two_photon_jump(s, 1.0)) - 1.0).abs() < 1e-12);
        assert!((lyapunov_v(&vac, &two_photon_jump(s, 2.0)) - 16.0).abs() < 1e-12);
        let cat = cat_state(s, 1.0, CatSign::Plus).unwrap().density().unwrap();
        assert!(lyapunov_v(&cat, &two_photon_jump(s, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn moment_examples() {
        let s = space();
        assert_eq!(moment(&DensityMatrix::vacuum(s), 1), 0.0);
        assert_eq!(moment(&DensityMatrix::fock(s, 3).unwrap(), 2), 9.0);
        let coh = coherent_state(s, C64::new(1.0, 0.0)).unwrap().density().unwrap();
        assert!((moment(&coh, 1) - 1.0).abs() < 1e-9);
        // Poisson second moment λ + λ²
        assert!((moment(&coh, 2) - 2.0).abs() < 1e-9);
        let k = Ket::basis(s, 5).unwrap().density().unwrap();
        assert!(moment(&k, 3) >= moment(&k, 2));
    }

    #[test]
    fn fit_exact_exponential() {
        let t: Vec<f64> = (0..=2000).map(|k| k as f64 * 1e-3).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-2.0 * t).exp()).collect();
        let fit = decay_rate_fit(&t, &y, (0.0, 2.0)).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-6);
        assert!((fit.amplitude - 3.0).abs() < 1e-6);

        let flat = vec![0.7; t.len()];
        let fit = decay_rate_fit(&t, &flat, (0.0, 2.0)).unwrap();
        assert!(fit.rate.abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_noise() {
        let t: Vec<f64> = (0..200).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = (0..200).map(|k| if k % 2 == 0 { 1.0 } else { 5.0 }).collect();
        assert!(matches!(
            decay_rate_fit(&t, &y, (0.0, 2.0)),
            Err(Error::FitRejected(_))
        ));
        assert!(decay_rate_fit(&t, &y, (10.0, 11.0)).is_err());
    }

    #[test]
    fn moment_bound_closed_forms() {
        // ν=1: excess −x² + 4x + 6 at α=1, maximum 10 at x=2
        let b1 = moment_bound(1.0, 1).unwrap();
        assert!((b1.mu - 10.0).abs() < 1e-9);
        assert!((b1.threshold - 10f64.sqrt()).abs() < 1e-9);
        // ν=2: −2x³ + 4x² + 20x + 12, maximum at x = (2 + √34)/3
        let x = (2.0 + 34f64.sqrt()) / 3.0;
        let mu = -2.0 * x.powi(3) + 4.0 * x * x + 20.0 * x + 12.0;
        let b2 = moment_bound(1.0, 2).unwrap();
        assert!((b2.mu - mu).abs() < 1e-9);
        assert!((b2.threshold - (mu / 2.0).powf(2.0 / 3.0)).abs() < 1e-9);
    }
}
