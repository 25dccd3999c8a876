//! Quasi-resolvents glued from translated resolvents by a quadratic
//! partition of unity, and the defect norms that certify spectral
//! inclusion.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::quantize::{build_matrix, Grid1D, Provenance, WeylOperator};
use crate::spectra::dist_to_set;
use crate::symbols::{perturb, PerturbField, SymbolSpec};

pub const DEFAULT_RESOLVENT_MARGIN: f64 = 1e-6;
pub const ACTIVE_THRESHOLD: f64 = 1e-14;

/// `exp(-1/(1-(z/r)²))` on `|z| < r`.
fn raw_bump(z: f64, r: f64) -> f64 {
    let t = z / r;
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// Base bump `g` with `Σ_γ g(z-γ)² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionBase {
    radius: f64,
}

pub fn make_partition(radius: f64) -> Result<PartitionBase> {
    if !(0.6..=2.0).contains(&radius) {
        return Err(Error::InvalidParameter(format!("bump radius must lie in [0.6, 2], got {radius}")));
    }
    let base = PartitionBase { radius };
    for i in 0..=1000 {
        let z = i as f64 / 1000.0;
        if base.square_sum(z) < 1e-200 {
            return Err(Error::CoverageFailure(z));
        }
    }
    Ok(base)
}

impl PartitionBase {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of translates whose support meets a given one, itself included.
    pub fn overlap_count(&self) -> usize {
        2 * (2.0 * self.radius).ceil() as usize - 1
    }

    fn square_sum(&self, z: f64) -> f64 {
        let lo = (z - self.radius).ceil() as i64;
        let hi = (z + self.radius).floor() as i64;
        (lo..=hi).map(|g| raw_bump(z - g as f64, self.radius).powi(2)).sum()
    }

    pub fn value(&self, z: f64) -> f64 {
        let h = raw_bump(z, self.radius);
        if h == 0.0 {
            return 0.0;
        }
        h / self.square_sum(z).sqrt()
    }

    /// `Σ_γ g(z-γ)²`, equal to 1 up to rounding.
    pub fn identity_sum(&self, z: f64) -> f64 {
        let lo = (z - self.radius).floor() as i64 - 1;
        let hi = (z + self.radius).ceil() as i64 + 1;
        (lo..=hi).map(|g| self.value(z - g as f64).powi(2)).sum()
    }
}

/// Sampled `g[F_δ]_γ(x_j) = g(δ^{1-κ} F(x_j) - γ)` for the active `γ`.
#[derive(Debug, Clone)]
pub struct CutoffFamily {
    pub delta: f64,
    pub kappa: f64,
    pub gammas: Vec<i64>,
    pub values: Vec<Vec<f64>>,
}

impl CutoffFamily {
    /// `z_γ(δ) = δ^κ γ`
    pub fn center(&self, gamma: i64) -> f64 {
        lattice_point(self.delta, self.kappa, gamma)
    }

    pub fn identity_error(&self) -> f64 {
        let n = self.values.first().map_or(0, Vec::len);
        (0..n)
            .map(|j| (self.values.iter().map(|v| v[j] * v[j]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn get(&self, gamma: i64) -> Option<&[f64]> {
        self.gammas.iter().position(|&g| g == gamma).map(|i| self.values[i].as_slice())
    }
}

pub fn lattice_point(delta: f64, kappa: f64, gamma: i64) -> f64 {
    delta.powf(kappa) * gamma as f64
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidParameter(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    Ok(())
}

pub fn cutoffs(base: &PartitionBase, field: &PerturbField, delta: f64, kappa: f64, grid: &Grid1D) -> Result<CutoffFamily> {
    check_delta(delta)?;
    check_kappa(kappa)?;
    let scale = delta.powf(1.0 - kappa);
    let args: Vec<f64> = grid.nodes().iter().map(|&x| scale * field.value(x)).collect();
    let lo = args.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = args.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let r = base.radius();
    let mut gammas = Vec::new();
    let mut values = Vec::new();
    for gamma in (lo - r).floor() as i64..=(hi + r).ceil() as i64 {
        let v: Vec<f64> = args.iter().map(|&t| base.value(t - gamma as f64)).collect();
        if v.iter().copied().fold(0.0, f64::max) > ACTIVE_THRESHOLD {
            gammas.push(gamma);
            values.push(v);
        }
    }
    Ok(CutoffFamily {
        delta,
        kappa,
        gammas,
        values,
    })
}

/// `M'(i, j) = M(i+s, j+s)` with zero fill.
pub fn shift_matrix(m: &Mat<f64>, s: i64) -> Mat<f64> {
    let n = m.nrows() as i64;
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let (a, b) = (i as i64 + s, j as i64 + s);
        if a >= 0 && a < n && b >= 0 && b < n {
            m[(a as usize, b as usize)]
        } else {
            0.0
        }
    })
}

/// Snapped grid shift for `z0`; returns the shift and the snap error.
pub fn snap(z0: f64, grid: &Grid1D) -> Result<(i64, f64)> {
    let h = grid.spacing();
    let s = (z0 / h).round();
    let limit = grid.points() / 4;
    if s.abs() > limit as f64 {
        return Err(Error::ShiftTooLarge { shift: s as i64, limit });
    }
    Ok((s as i64, (z0 - s * h).abs()))
}

/// `τ_{-z0} K τ_{z0}` by snapping `z0` to the grid and shifting entries with
/// zero fill. Returns the snap error alongside.
pub fn translate_operator(k: &WeylOperator, z0: f64) -> Result<(WeylOperator, f64)> {
    let (s, err) = snap(z0, k.grid())?;
    let m = shift_matrix(k.matrix(), s);
    let mut prov = k.provenance().clone();
    prov.symbol = format!("translate({}, {z0})", prov.symbol);
    Ok((WeylOperator::from_matrix(m, *k.grid(), prov)?, err))
}

/// `(K - 𝔷)^{-1}`, refusing `𝔷` within `margin` of the spectrum.
pub fn resolvent(k: &Mat<f64>, z: f64, margin: f64) -> Result<Mat<f64>> {
    let eig = linalg::sym_eigenvalues(k.as_ref())?;
    let dist = dist_to_set(z, &eig)?;
    if dist <= margin {
        return Err(Error::TooCloseToSpectrum { z, dist });
    }
    Ok(linalg::inverse(linalg::shifted(k.as_ref(), z).as_ref()))
}

/// Resolvent from an eigendecomposition, with the distance to the spectrum.
fn resolvent_eig(k: &Mat<f64>, z: f64, margin: f64) -> Result<(Mat<f64>, f64)> {
    let (vals, vecs) = linalg::sym_eigen(k.as_ref())?;
    let dist = dist_to_set(z, &vals)?;
    if dist <= margin {
        return Err(Error::TooCloseToSpectrum { z, dist });
    }
    let n = vals.len();
    let scaled = Mat::from_fn(n, n, |i, c| vecs[(i, c)] / (vals[c] - z));
    Ok((&scaled * vecs.transpose(), dist))
}

/// `‖(K - 𝔷) T - I‖`
pub fn defect(k: &WeylOperator, t: &Mat<f64>, z: f64) -> Result<f64> {
    let mut p = linalg::shifted(k.matrix().as_ref(), z) * t;
    for i in 0..p.nrows() {
        p[(i, i)] -= 1.0;
    }
    linalg::spectral_norm(p.as_ref())
}

/// How `τ_{-z} K τ_z` is realized on the truncated grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TranslationMode {
    /// Quantize `a(x + z, ξ)` directly; hard-wall boundaries stay aligned.
    #[default]
    Exact,
    /// Shift matrix entries by the nearest whole number of nodes.
    Snap,
}

#[derive(Debug, Clone)]
pub struct QuasiResolvent {
    pub matrix: Mat<f64>,
    pub norm: f64,
    /// `√((n_g+1)/2) / dist(𝔷, σ(K₀))`
    pub bound: f64,
    pub dist0: f64,
    /// Largest `‖T_γ‖` over the active `γ`.
    pub max_piece_norm: f64,
    pub snap_error: f64,
    pub active: usize,
}

/// The symbol, field, grid and partition behind one quasi-resolvent study,
/// with `K₀` and its spectrum cached.
#[derive(Debug, Clone)]
pub struct QuasiResolventProblem {
    pub symbol: SymbolSpec,
    pub field: PerturbField,
    pub grid: Grid1D,
    pub base: PartitionBase,
    pub mode: TranslationMode,
    pub margin: f64,
    k0: WeylOperator,
    spectrum0: Vec<f64>,
}

impl QuasiResolventProblem {
    pub fn new(symbol: SymbolSpec, field: PerturbField, grid: Grid1D, base: PartitionBase, mode: TranslationMode) -> Result<Self> {
        let k0 = build_matrix(&symbol, &grid)?;
        let spectrum0 = linalg::sym_eigenvalues(k0.matrix().as_ref())?;
        Ok(Self {
            symbol,
            field,
            grid,
            base,
            mode,
            margin: DEFAULT_RESOLVENT_MARGIN,
            k0,
            spectrum0,
        })
    }

    pub fn k0(&self) -> &WeylOperator {
        &self.k0
    }

    pub fn spectrum0(&self) -> &[f64] {
        &self.spectrum0
    }

    pub fn k_delta(&self, delta: f64) -> Result<WeylOperator> {
        build_matrix(&perturb(&self.symbol, &self.field, delta)?, &self.grid)
    }

    pub fn cutoffs(&self, delta: f64, kappa: f64) -> Result<CutoffFamily> {
        cutoffs(&self.base, &self.field, delta, kappa, &self.grid)
    }

    /// `τ_{-z} A τ_z` for the operator of `symbol`, whose matrix is `k`.
    fn translated(&self, symbol: &SymbolSpec, k: &WeylOperator, z: f64) -> Result<(Mat<f64>, f64)> {
        match self.mode {
            TranslationMode::Exact => Ok((build_matrix(&symbol.translated(z), &self.grid)?.into_matrix(), 0.0)),
            TranslationMode::Snap => {
                let (t, err) = translate_operator(k, z)?;
                Ok((t.into_matrix(), err))
            }
        }
    }

    /// `Σ_γ G_γ τ_{-z_γ} R τ_{z_γ} G_γ` where `R` is the resolvent of the
    /// operator of `symbol` (matrix `k`, spectrum `spec`).
    fn glue(
        &self,
        symbol: &SymbolSpec,
        k: &WeylOperator,
        z: f64,
        cut: &CutoffFamily,
        sign: f64,
    ) -> Result<(Mat<f64>, f64, f64)> {
        let n = self.grid.points();
        let snap_resolvent = match self.mode {
            TranslationMode::Snap => Some(resolvent_eig(k.matrix(), z, self.margin)?.0),
            TranslationMode::Exact => None,
        };
        let pieces: Vec<(Mat<f64>, f64, f64)> = cut
            .gammas
            .par_iter()
            .zip(&cut.values)
            .map(|(&gamma, g)| -> Result<(Mat<f64>, f64, f64)> {
                let shift = sign * cut.center(gamma);
                let (t, err) = match &snap_resolvent {
                    Some(r) => {
                        let (s, err) = snap(shift, &self.grid)?;
                        (shift_matrix(r, s), err)
                    }
                    None => {
                        let (m, _) = self.translated(symbol, k, shift)?;
                        (resolvent_eig(&m, z, self.margin)?.0, 0.0)
                    }
                };
                let norm = linalg::sym_norm(t.as_ref())?;
                Ok((linalg::sandwich(g, t.as_ref()), norm, err))
            })
            .collect::<Result<_>>()?;
        let mut total = Mat::<f64>::zeros(n, n);
        let mut max_norm: f64 = 0.0;
        let mut snap_err: f64 = 0.0;
        for (m, norm, err) in pieces {
            total += m;
            max_norm = max_norm.max(norm);
            snap_err = snap_err.max(err);
        }
        Ok((total, max_norm, snap_err))
    }

    pub fn quasi_resolvent(&self, z: f64, delta: f64, kappa: f64) -> Result<QuasiResolvent> {
        let dist0 = dist_to_set(z, &self.spectrum0)?;
        if dist0 <= self.margin {
            return Err(Error::TooCloseToSpectrum { z, dist: dist0 });
        }
        let cut = self.cutoffs(delta, kappa)?;
        let (matrix, max_piece_norm, snap_error) = self.glue(&self.symbol, &self.k0, z, &cut, 1.0)?;
        let norm = linalg::spectral_norm(matrix.as_ref())?;
        let ng = self.base.overlap_count() as f64;
        Ok(QuasiResolvent {
            matrix,
            norm,
            bound: ((ng + 1.0) / 2.0).sqrt() / dist0,
            dist0,
            max_piece_norm,
            snap_error,
            active: cut.gammas.len(),
        })
    }

    /// `S̃ = Σ_γ G_γ τ_{z_γ} (K_δ - 𝔷)^{-1} τ_{-z_γ} G_γ` and the reverse
    /// defect `‖(K₀ - 𝔷) S̃ - I‖`.
    pub fn reverse_quasi_resolvent(&self, z: f64, delta: f64, kappa: f64) -> Result<(Mat<f64>, f64)> {
        let pert = perturb(&self.symbol, &self.field, delta)?;
        let kd = build_matrix(&pert, &self.grid)?;
        let cut = self.cutoffs(delta, kappa)?;
        let (s, _, _) = self.glue(&pert, &kd, z, &cut, -1.0)?;
        let d = defect(&self.k0, &s, z)?;
        Ok((s, d))
    }

    /// `max_γ ‖(K_δ - τ_{-z_γ} K₀ τ_{z_γ}) G_γ‖` over the active `γ`, or for a
    /// single `γ` when given.
    pub fn lemma1_defect(&self, delta: f64, kappa: f64, gamma: Option<i64>) -> Result<f64> {
        let kd = self.k_delta(delta)?;
        let cut = self.cutoffs(delta, kappa)?;
        let picks = self.pick(&cut, gamma);
        let norms: Vec<f64> = picks
            .par_iter()
            .map(|&(gamma, g)| -> Result<f64> {
                let (t, _) = self.translated(&self.symbol, &self.k0, cut.center(gamma))?;
                let n = self.grid.points();
                let diff = Mat::from_fn(n, n, |i, j| (kd.matrix()[(i, j)] - t[(i, j)]) * g[j]);
                linalg::spectral_norm(diff.as_ref())
            })
            .collect::<Result<_>>()?;
        Ok(norms.into_iter().fold(0.0, f64::max))
    }

    /// `max_γ ‖[τ_{-z_γ} R₀(𝔷) τ_{z_γ}, G_γ]‖`.
    pub fn commutator_defect(&self, z: f64, delta: f64, kappa: f64, gamma: Option<i64>) -> Result<f64> {
        let cut = self.cutoffs(delta, kappa)?;
        let picks = self.pick(&cut, gamma);
        let snap_resolvent = match self.mode {
            TranslationMode::Snap => Some(resolvent_eig(self.k0.matrix(), z, self.margin)?.0),
            TranslationMode::Exact => None,
        };
        let norms: Vec<f64> = picks
            .par_iter()
            .map(|&(gamma, g)| -> Result<f64> {
                let shift = cut.center(gamma);
                let r = match &snap_resolvent {
                    Some(r) => shift_matrix(r, snap(shift, &self.grid)?.0),
                    None => {
                        let (m, _) = self.translated(&self.symbol, &self.k0, shift)?;
                        resolvent_eig(&m, z, self.margin)?.0
                    }
                };
                let n = self.grid.points();
                let c = Mat::from_fn(n, n, |i, j| r[(i, j)] * (g[j] - g[i]));
                linalg::spectral_norm(c.as_ref())
            })
            .collect::<Result<_>>()?;
        Ok(norms.into_iter().fold(0.0, f64::max))
    }

    fn pick<'a>(&self, cut: &'a CutoffFamily, gamma: Option<i64>) -> Vec<(i64, &'a [f64])> {
        match gamma {
            Some(g) => cut.get(g).map(|v| vec![(g, v)]).unwrap_or_default(),
            None => cut.gammas.iter().copied().zip(cut.values.iter().map(Vec::as_slice)).collect(),
        }
    }

    /// Forward defect, with the operators it was computed from.
    pub fn forward(&self, z: f64, delta: f64, kappa: f64) -> Result<ForwardDefect> {
        let q = self.quasi_resolvent(z, delta, kappa)?;
        let kd = self.k_delta(delta)?;
        let d = defect(&kd, &q.matrix, z)?;
        Ok(ForwardDefect { quasi: q, k_delta: kd, defect: d })
    }
}

#[derive(Debug, Clone)]
pub struct ForwardDefect {
    pub quasi: QuasiResolvent,
    pub k_delta: WeylOperator,
    pub defect: f64,
}

/// Wrap a plain matrix as an operator on `grid`.
pub fn as_operator(m: Mat<f64>, grid: &Grid1D, label: &str) -> Result<WeylOperator> {
    WeylOperator::from_matrix(m, *grid, Provenance::raw(label))
}
