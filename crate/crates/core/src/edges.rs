//! Edge machinery: the Gaussian weight, weighted kernels, the variational
//! edge and the (ρ, θ, κ) schedule.
//!
//! The weighted operator has midpoint coefficients
//! `c̄(z) = Σ_u h 𝔚_κ(z-u) c(z + δF(u))`, where `u` runs over the operator
//! grid extended past `[-L, L]` far enough for the weight to vanish to
//! `WEIGHT_TAIL`. Its frozen counterpart carries the extra factor
//! `e^{-κ²v²/16}` and equals `Σ_u h D_u^{1/2} K₀^{(δF(u))} D_u^{1/2}` exactly,
//! with `D_u = diag 𝔚_κ(x_j - u)`.

use std::f64::consts::PI;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::quantize::{assemble, build_matrix, weyl_kernel, Grid1D, Provenance, WeylOperator};
use crate::symbols::{perturb, PerturbField, SymbolSpec};

const WEIGHT_TAIL: f64 = 1e-18;
const POWER_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianWeight {
    kappa: f64,
}

impl GaussianWeight {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::InvalidParameter(format!("kappa must lie in (0, 1], got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `κ (4π)^{-1/2} e^{-(κz)²/4}`, which integrates to one.
    pub fn value(&self, z: f64) -> f64 {
        let kz = self.kappa * z;
        self.kappa / (4.0 * PI).sqrt() * (-0.25 * kz * kz).exp()
    }

    /// Radius beyond which the weight is below `WEIGHT_TAIL` relative to its peak.
    pub fn support_radius(&self) -> f64 {
        2.0 * (-WEIGHT_TAIL.ln()).sqrt() / self.kappa
    }

    /// Right-hand side of the splitting identity
    /// `𝔚(z-u) = (𝔚(v)/𝔚(0))^{-1/4} 𝔚(z-u+v/2)^{1/2} 𝔚(z-u-v/2)^{1/2}`.
    pub fn split(&self, z: f64, u: f64, v: f64) -> f64 {
        let w = z - u;
        (self.value(v) / self.value(0.0)).powf(-0.25) * (self.value(w + 0.5 * v) * self.value(w - 0.5 * v)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentitySample {
    pub triples: usize,
    pub half_extent: f64,
    pub seed: u64,
}

impl Default for IdentitySample {
    fn default() -> Self {
        Self {
            triples: 1000,
            half_extent: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightIdentities {
    pub normalization_err: f64,
    pub splitting_err: f64,
}

pub fn weight_identities(kappa: f64, sample: &IdentitySample) -> Result<WeightIdentities> {
    let w = GaussianWeight::new(kappa)?;
    // trapezoid rule on a Gaussian converges geometrically in the step
    let r = w.support_radius();
    let step = 0.05 / kappa;
    let n = (r / step).ceil() as i64;
    let integral: f64 = (-n..=n).map(|i| step * w.value(i as f64 * step)).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(sample.seed);
    let b = sample.half_extent;
    let mut splitting_err = 0.0f64;
    for _ in 0..sample.triples {
        let z = rng.gen_range(-b..=b);
        let u = rng.gen_range(-b..=b);
        let v = rng.gen_range(-b..=b);
        splitting_err = splitting_err.max((w.value(z - u) - w.split(z, u, v)).abs());
    }
    Ok(WeightIdentities {
        normalization_err: (integral - 1.0).abs(),
        splitting_err,
    })
}

/// Smoothed step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
fn smooth_step(t: f64) -> f64 {
    let psi = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let a = psi(t);
    let b = psi(1.0 - t);
    a / (a + b)
}

/// Plateau cutoff `χ_θ(z) = χ(θz)` with `χ = 1` on `|v| ≤ r`, `0` on `|v| ≥ R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffField {
    pub theta: f64,
    pub inner: f64,
    pub outer: f64,
}

impl CutoffField {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidParameter(format!("theta must lie in (0, 1], got {theta}")));
        }
        Ok(Self {
            theta,
            inner: 1.0,
            outer: 2.0,
        })
    }

    pub fn chi(&self, z: f64) -> f64 {
        let v = (self.theta * z).abs();
        smooth_step((self.outer - v) / (self.outer - self.inner))
    }

    /// `(F_θ, F_θ^⊥) = (χ_θ F, (1-χ_θ) F)`.
    pub fn split(&self, field: &PerturbField) -> (PerturbField, PerturbField) {
        let (c1, f1) = (*self, field.clone());
        let (c2, f2) = (*self, field.clone());
        let label = field.label();
        (
            PerturbField::custom(format!("chi*{label}"), move |x| c1.chi(x) * f1.value(x)),
            PerturbField::custom(format!("(1-chi)*{label}"), move |x| (1.0 - c2.chi(x)) * f2.value(x)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSchedule {
    pub mu: f64,
    pub delta: f64,
    pub rho: f64,
    pub theta: f64,
    pub kappa: f64,
}

impl EdgeSchedule {
    pub fn predicted_exponent(&self) -> f64 {
        self.rho
    }

    /// `|ρ - (2+μ)(1-ρ)|`. With `ρ = (1+μ)/(2+μ)` this is `1/(2+μ)`, not zero:
    /// the equation is solved by `(2+μ)/(3+μ)` instead.
    pub fn balance_residual(&self) -> f64 {
        (self.rho - (2.0 + self.mu) * (1.0 - self.rho)).abs()
    }

    /// Exponents of `δ/θ`, `δκ^{-2}θ^{1+μ}` and `δ²κ^{-2}` read off the schedule.
    pub fn term_exponents(&self) -> [f64; 3] {
        let d = self.delta.ln();
        [
            (self.delta / self.theta).ln() / d,
            (self.delta * self.kappa.powi(-2) * self.theta.powf(1.0 + self.mu)).ln() / d,
            (self.delta * self.delta * self.kappa.powi(-2)).ln() / d,
        ]
    }

    pub fn bound(&self) -> f64 {
        self.delta.powf(self.rho)
    }
}

pub fn schedule(mu: f64, delta: f64) -> Result<EdgeSchedule> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1], got {delta}")));
    }
    let rho = (1.0 + mu) / (2.0 + mu);
    Ok(EdgeSchedule {
        mu,
        delta,
        rho,
        theta: delta.powf(1.0 - rho),
        kappa: delta.powf(0.5 * rho),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalEdge {
    pub edge: f64,
    pub best_rayleigh: f64,
}

/// Top eigenvalue, cross-checked against Rayleigh quotients of `n_probes`
/// random vectors refined by a few shifted power steps.
pub fn variational_edge(k: &WeylOperator, n_probes: usize, seed: u64) -> Result<VariationalEdge> {
    variational_edge_of(k.matrix(), n_probes, seed)
}

pub fn variational_edge_of(m: &Mat<f64>, n_probes: usize, seed: u64) -> Result<VariationalEdge> {
    let n = m.nrows();
    let eig = linalg::sym_eigenvalues(m.as_ref())?;
    let edge = *eig.last().ok_or(Error::EmptySet)?;
    if n_probes == 0 {
        return Ok(VariationalEdge {
            edge,
            best_rayleigh: f64::NEG_INFINITY,
        });
    }
    // shift by a Gershgorin lower bound so powers favour the top of the spectrum
    let shift = (0..n)
        .map(|i| m[(i, i)] - (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Mat::from_fn(n, n_probes, |_, _| rng.gen_range(-1.0..1.0));
    let shifted = linalg::shifted(m.as_ref(), shift);
    for _ in 0..POWER_STEPS {
        p = &shifted * &p;
        for c in 0..n_probes {
            let norm = p.col(c).norm_l2();
            if norm > 0.0 {
                for i in 0..n {
                    p[(i, c)] /= norm;
                }
            }
        }
    }
    let mp = m * &p;
    let mut best = f64::NEG_INFINITY;
    for c in 0..n_probes {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            num += p[(i, c)] * mp[(i, c)];
            den += p[(i, c)] * p[(i, c)];
        }
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    Ok(VariationalEdge {
        edge,
        best_rayleigh: best,
    })
}

/// Midpoint table of `Σ_u h 𝔚_κ(z-u) g(z + δF(u))` over the extended grid lattice.
fn weighted_table(
    g: &(dyn Fn(f64) -> f64 + Sync),
    zs: &[f64],
    field: &PerturbField,
    delta: f64,
    weight: &GaussianWeight,
    grid: &Grid1D,
) -> Vec<f64> {
    let h = grid.spacing();
    let x0 = grid.node(0);
    let r = weight.support_radius();
    zs.par_iter()
        .map(|&z| {
            let lo = ((z - r - x0) / h).floor() as i64;
            let hi = ((z + r - x0) / h).ceil() as i64;
            (lo..=hi)
                .map(|m| {
                    let u = x0 + m as f64 * h;
                    h * weight.value(z - u) * g(z + delta * field.value(u))
                })
                .sum()
        })
        .collect()
}

pub fn weighted_operator(
    a: &SymbolSpec,
    field: &PerturbField,
    delta: f64,
    kappa: f64,
    grid: &Grid1D,
) -> Result<WeylOperator> {
    if !(delta.abs() <= 1.0) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let weight = GaussianWeight::new(kappa)?;
    let rep = weyl_kernel(a)?;
    let provenance = Provenance {
        symbol: format!("W[{}; kappa={kappa}]", a.label()),
        field: Some(field.label()),
        delta,
    };
    assemble(&rep, grid, provenance, |c, zs| {
        weighted_table(&|x| c.value(x), zs, field, delta, &weight, grid)
    })
}

/// Weighted operator with each entry multiplied by `e^{-κ²v²/16}`.
pub fn frozen_operator(m: &WeylOperator, kappa: f64) -> Result<WeylOperator> {
    let h = m.grid().spacing();
    let n = m.dim();
    let k = m.matrix();
    let f = Mat::from_fn(n, n, |i, j| {
        let v = (i as f64 - j as f64) * h;
        k[(i, j)] * (-kappa * kappa * v * v / 16.0).exp()
    });
    WeylOperator::from_matrix(f, *m.grid(), m.provenance().clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub random: usize,
    pub top_eigvecs: usize,
    pub width: f64,
    pub seed: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            random: 32,
            top_eigvecs: 4,
            width: 2.0,
            seed: 0,
        }
    }
}

/// Unit probes: Gaussian bumps at random centers in `|x| ≤ L/2`, then the
/// top eigenvectors of `k0`.
pub fn probe_vectors(k0: &WeylOperator, spec: &ProbeSpec) -> Result<Vec<Vec<f64>>> {
    let grid = k0.grid();
    let n = grid.points();
    let xs = grid.nodes();
    let half = 0.5 * grid.half_width();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut probes = Vec::with_capacity(spec.random + spec.top_eigvecs);
    for _ in 0..spec.random {
        let c = rng.gen_range(-half..=half);
        let mut p: Vec<f64> = xs
            .iter()
            .map(|&x| (-0.5 * ((x - c) / spec.width).powi(2)).exp())
            .collect();
        normalize(&mut p);
        probes.push(p);
    }
    if spec.top_eigvecs > 0 {
        let (_, vecs) = linalg::sym_eigen(k0.matrix().as_ref())?;
        for c in (n.saturating_sub(spec.top_eigvecs)..n).rev() {
            probes.push((0..n).map(|i| vecs[(i, c)]).collect());
        }
    }
    Ok(probes)
}

fn normalize(p: &mut [f64]) {
    let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        p.iter_mut().for_each(|x| *x /= norm);
    }
}

fn max_form_difference(a: &Mat<f64>, b: &Mat<f64>, probes: &[Vec<f64>]) -> f64 {
    let d = a - b;
    probes
        .iter()
        .map(|p| linalg::quadratic_form(d.as_ref(), p).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormDeviation {
    /// `max_φ |⟨W_κ[K_δ]⟩_φ - ⟨K₀⟩_φ|`.
    pub literal: f64,
    /// `max_φ |⟨W_κ[K_δ]⟩_φ - Σ_u h ⟨K₀^{(δF(u))}⟩_{φ̃_u}|`.
    pub frozen: f64,
}

pub fn p_b1_error(
    a: &SymbolSpec,
    field: &PerturbField,
    delta: f64,
    kappa: f64,
    grid: &Grid1D,
    probes: &ProbeSpec,
) -> Result<FormDeviation> {
    let k0 = build_matrix(a, grid)?;
    let w = weighted_operator(a, field, delta, kappa, grid)?;
    let f = frozen_operator(&w, kappa)?;
    let phis = probe_vectors(&k0, probes)?;
    Ok(FormDeviation {
        literal: max_form_difference(w.matrix(), k0.matrix(), &phis),
        frozen: max_form_difference(w.matrix(), f.matrix(), &phis),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeRow {
    pub delta: f64,
    pub mu: f64,
    pub rho: f64,
    pub theta: f64,
    pub kappa: f64,
    pub e0: f64,
    pub edelta: f64,
    pub etilde: f64,
    pub drift_abs: f64,
    pub e1_err: f64,
    pub e2_err: f64,
    pub bound_delta_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeTable {
    pub plus: Vec<EdgeRow>,
    pub minus: Vec<EdgeRow>,
}

fn edge_rows(a: &SymbolSpec, field: &PerturbField, mu: f64, deltas: &[f64], grid: &Grid1D) -> Result<Vec<EdgeRow>> {
    let e0 = top_eigenvalue(&build_matrix(a, grid)?)?;
    deltas
        .iter()
        .map(|&delta| {
            let s = schedule(mu, delta)?;
            let edelta = top_eigenvalue(&build_matrix(&perturb(a, field, delta)?, grid)?)?;
            let etilde = top_eigenvalue(&weighted_operator(a, field, delta, s.kappa, grid)?)?;
            Ok(EdgeRow {
                delta,
                mu,
                rho: s.rho,
                theta: s.theta,
                kappa: s.kappa,
                e0,
                edelta,
                etilde,
                drift_abs: (edelta - e0).abs(),
                e1_err: (etilde - e0).abs(),
                e2_err: (etilde - edelta).abs(),
                bound_delta_rho: s.bound(),
            })
        })
        .collect()
}

fn top_eigenvalue(k: &WeylOperator) -> Result<f64> {
    linalg::sym_eigenvalues(k.matrix().as_ref())?.last().copied().ok_or(Error::EmptySet)
}

/// Edge drift table for `ℰ₊` and, through `-a`, for `ℰ₋` (stored as `-ℰ₋`).
pub fn edge_experiment(a: &SymbolSpec, field: &PerturbField, deltas: &[f64], grid: &Grid1D) -> Result<EdgeTable> {
    let mu = field
        .mu()
        .ok_or_else(|| Error::InvalidParameter(format!("field {} declares no decay exponent", field.label())))?;
    if let Some(&d) = deltas.iter().find(|&&d| !(d > 0.0 && d <= 1.0)) {
        return Err(Error::DeltaOutOfRange(d));
    }
    Ok(EdgeTable {
        plus: edge_rows(a, field, mu, deltas, grid)?,
        minus: edge_rows(&a.negated(), field, mu, deltas, grid)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Coefficient;

    #[test]
    fn weight_normalization_matches_gauss_legendre() {
        for kappa in [1.0, 0.3, 0.1] {
            let w = GaussianWeight::new(kappa).unwrap();
            let r = 40.0 / kappa;
            let (x, wt) = crate::quad::gauss_legendre_on(200, -r, r);
            let s: f64 = x.iter().zip(&wt).map(|(x, q)| q * w.value(*x)).sum();
            assert!((s - 1.0).abs() < 1e-10, "kappa={kappa} s={s}");
            let id = weight_identities(kappa, &IdentitySample::default()).unwrap();
            assert!(id.normalization_err < 1e-10);
            assert!(id.splitting_err < 1e-12);
        }
    }

    #[test]
    fn degenerate_split_is_exact() {
        let w = GaussianWeight::new(0.7).unwrap();
        for (z, u) in [(0.3, -1.2), (2.0, 2.0), (-4.0, 1.0)] {
            assert_eq!(w.split(z, u, 0.0), w.value(z - u));
        }
    }

    #[test]
    fn kappa_validated() {
        assert!(GaussianWeight::new(0.0).is_err());
        assert!(GaussianWeight::new(1.5).is_err());
    }

    #[test]
    fn schedule_examples() {
        let s = schedule(1.0, 0.01).unwrap();
        assert!((s.rho - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.theta - 0.01f64.powf(1.0 / 3.0)).abs() < 1e-15);
        assert!((s.theta - 0.2154).abs() < 1e-4);
        assert!((s.kappa - 0.2154).abs() < 1e-4);
        assert!((s.balance_residual() - 1.0 / 3.0).abs() < 1e-15);
        let [e1, e2, e3] = s.term_exponents();
        assert!((e1 - s.rho).abs() < 1e-12);
        assert!((e2 - 3.0 * (1.0 - s.rho)).abs() < 1e-12);
        assert!((e3 - (2.0 - s.rho)).abs() < 1e-12);
        assert!(e1 <= e2 && e1 <= e3);
        assert!((schedule(2.0, 0.5).unwrap().rho - 0.75).abs() < 1e-15);
        let s = schedule(0.7, 1.0).unwrap();
        assert_eq!((s.theta, s.kappa), (1.0, 1.0));
        assert!(schedule(0.0, 0.1).is_err());
        assert!(schedule(1.0, 0.0).is_err());
        let b = schedule(1.0, 1e-3).unwrap().bound();
        assert!((b - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn cutoff_plateau_and_split() {
        let c = CutoffField::new(0.5).unwrap();
        assert_eq!(c.chi(1.9), 1.0);
        assert_eq!(c.chi(-2.0), 1.0);
        assert_eq!(c.chi(4.0), 0.0);
        assert!(c.chi(3.0) > 0.0 && c.chi(3.0) < 1.0);
        let f = PerturbField::sine(1.0);
        let (inner, outer) = c.split(&f);
        for i in 0..200 {
            let x = -10.0 + 0.1 * i as f64;
            assert!((inner.value(x) + outer.value(x) - f.value(x)).abs() < 1e-15);
            assert!(inner.value(x).abs() <= f.value(x).abs());
            if x.abs() > 4.0 {
                assert_eq!(inner.value(x), 0.0);
            }
        }
    }

    #[test]
    fn variational_edge_diag() {
        let m = Mat::from_fn(3, 3, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let v = variational_edge_of(&m, 50, 1).unwrap();
        assert!((v.edge - 3.0).abs() < 1e-14);
        assert!(v.best_rayleigh <= v.edge + 1e-14);
    }

    #[test]
    fn variational_edge_rank_one() {
        let phi = [0.6, 0.0, -0.8];
        let m = Mat::from_fn(3, 3, |i, j| phi[i] * phi[j]);
        let v = variational_edge_of(&m, 10, 3).unwrap();
        assert!((v.edge - 1.0).abs() < 1e-14);
        assert!((linalg::quadratic_form(m.as_ref(), &phi) - 1.0).abs() < 1e-15);
    }

    fn harper_grid() -> (SymbolSpec, Grid1D) {
        (SymbolSpec::harper(), Grid1D::new(16.0, 128).unwrap())
    }

    #[test]
    fn weighted_at_zero_delta_is_k0() {
        let (a, grid) = harper_grid();
        let k0 = build_matrix(&a, &grid).unwrap();
        for kappa in [1.0, 0.3] {
            let w = weighted_operator(&a, &PerturbField::sine(1.0), 0.0, kappa, &grid).unwrap();
            let d = linalg::spectral_norm((w.matrix() - k0.matrix()).as_ref()).unwrap();
            assert!(d < 1e-8, "kappa={kappa} d={d}");
        }
    }

    #[test]
    fn constant_field_passes_through_weight() {
        let a = SymbolSpec::sum(vec![
            SymbolSpec::harper(),
            SymbolSpec::gauss_xi(1.0, Coefficient::gauss(0.5, 0.0, 3.0)),
        ]);
        let grid = Grid1D::new(16.0, 128).unwrap();
        let f = PerturbField::constant(0.7);
        let w = weighted_operator(&a, &f, 0.3, 0.5, &grid).unwrap();
        let direct = build_matrix(&perturb(&a, &f, 0.3).unwrap(), &grid).unwrap();
        let d = linalg::spectral_norm((w.matrix() - direct.matrix()).as_ref()).unwrap();
        assert!(d < 1e-8, "d={d}");
    }

    #[test]
    fn frozen_form_is_average_of_translated_forms() {
        let (a, grid) = harper_grid();
        let f = PerturbField::affine(1.0, 0.0);
        let (delta, kappa) = (0.1, 0.8);
        let w = weighted_operator(&a, &f, delta, kappa, &grid).unwrap();
        let frozen = frozen_operator(&w, kappa).unwrap();

        let weight = GaussianWeight::new(kappa).unwrap();
        let n = grid.points();
        let h = grid.spacing();
        let xs = grid.nodes();
        let r = weight.support_radius();
        let mut sum = Mat::<f64>::zeros(n, n);
        let lo = ((-grid.half_width() - r - xs[0]) / h).floor() as i64;
        let hi = ((grid.half_width() + r - xs[0]) / h).ceil() as i64;
        for m in lo..=hi {
            let u = xs[0] + m as f64 * h;
            let k = build_matrix(&a.translated(delta * f.value(u)), &grid).unwrap();
            let d: Vec<f64> = xs.iter().map(|x| weight.value(x - u).sqrt()).collect();
            for j in 0..n {
                for i in 0..n {
                    sum[(i, j)] += h * d[i] * k.matrix()[(i, j)] * d[j];
                }
            }
        }
        let diff = linalg::spectral_norm((frozen.matrix() - &sum).as_ref()).unwrap();
        assert!(diff < 1e-10, "diff={diff}");
    }

    #[test]
    fn frozen_top_eigenvalue_is_bounded_by_translates() {
        let (a, grid) = harper_grid();
        let f = PerturbField::mu_family(0.5).unwrap();
        let w = weighted_operator(&a, &f, 0.2, 0.5, &grid).unwrap();
        let top = top_eigenvalue(&frozen_operator(&w, 0.5).unwrap()).unwrap();
        // the translated truncations have edges at most sup σ(Op(a)) ≤ 2
        assert!(top <= 2.0, "top={top}");
    }

    #[test]
    fn form_deviation_vanishes_at_zero_delta() {
        let (a, grid) = harper_grid();
        let probes = ProbeSpec {
            random: 8,
            top_eigvecs: 2,
            ..ProbeSpec::default()
        };
        let d = p_b1_error(&a, &PerturbField::affine(1.0, 0.0), 0.0, 1.0, &grid, &probes).unwrap();
        assert!(d.literal < 1e-8);
    }

    #[test]
    fn form_deviation_tracks_translation_for_localized_probe() {
        // F affine near 0 is ≈ F(0): the deviation for a probe at the origin
        // is close to the drift of the form under translation by δF(0)
        let a = SymbolSpec::harper();
        let grid = Grid1D::new(32.0, 256).unwrap();
        let f = PerturbField::affine(0.01, 1.0);
        let (delta, kappa) = (0.5, 1.0);
        let k0 = build_matrix(&a, &grid).unwrap();
        let w = weighted_operator(&a, &f, delta, kappa, &grid).unwrap();
        let kt = build_matrix(&a.translated(delta * f.value(0.0)), &grid).unwrap();
        let mut phi: Vec<f64> = grid.nodes().iter().map(|x| (-0.5 * (x / 1.5).powi(2)).exp()).collect();
        normalize(&mut phi);
        let measured = linalg::quadratic_form((w.matrix() - k0.matrix()).as_ref(), &phi).abs();
        let direct = linalg::quadratic_form((kt.matrix() - k0.matrix()).as_ref(), &phi).abs();
        assert!((measured - direct).abs() <= 0.1 * direct, "{measured} vs {direct}");
    }

    #[test]
    fn edge_experiment_requires_mu() {
        let (a, grid) = harper_grid();
        assert!(edge_experiment(&a, &PerturbField::sine(1.0), &[0.1], &grid).is_err());
        let t = edge_experiment(&a, &PerturbField::mu_family(1.0).unwrap(), &[0.1], &grid).unwrap();
        assert_eq!(t.plus.len(), 1);
        assert_eq!(t.minus.len(), 1);
        let row = t.plus[0];
        assert!((row.rho - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(row.drift_abs, (row.edelta - row.e0).abs());
    }
}
