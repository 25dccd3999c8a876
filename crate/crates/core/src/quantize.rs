//! Weyl kernels in midpoint/difference coordinates and their matrix
//! truncations on a uniform grid.
//!
//! In coordinates `z = (x+y)/2`, `v = x-y` the Weyl kernel is the inverse
//! Fourier transform of the symbol in `ξ`. A `c(x) cos(kξ)` term becomes a
//! pair of point masses at `v = ±k` with weight `c(z)/2`; a Gaussian profile
//! becomes a smooth Gaussian in `v`. On the grid the point masses are exact
//! hops and the smooth part is sampled with quadrature weight `h`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::quad::gauss_legendre_on;
use crate::symbols::{perturb, seminorm, PerturbField, Sampling, SpatialFn, SymbolSpec, XiProfile};

const DENSE_LIMIT: usize = 4096;
const MAGIC: &[u8; 8] = b"WEYLMAT1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    half_width: f64,
    points: usize,
}

impl Grid1D {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidParameter(format!("grid half width must be positive, got {half_width}")));
        }
        if points < 16 || points % 2 != 0 {
            return Err(Error::InvalidParameter(format!("grid needs an even N >= 16, got {points}")));
        }
        Ok(Self { half_width, points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    /// Midpoints `(x_j + x_k)/2` indexed by `j + k`.
    pub fn midpoints(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..2 * self.points - 1).map(|m| -self.half_width + 0.5 * m as f64 * h).collect()
    }

    /// `(2L, 2N)`: same spacing, twice the window.
    pub fn doubled(&self) -> Self {
        Self {
            half_width: 2.0 * self.half_width,
            points: 2 * self.points,
        }
    }
}

/// A point mass of the kernel at `v = offset`, weighted by `weight · c(z)`.
/// Imaginary entries come from `sin(kξ)` terms.
#[derive(Debug, Clone)]
pub struct SingularTerm {
    pub offset: f64,
    pub weight: f64,
    pub imaginary: bool,
    pub coeff: SpatialFn,
}

/// `b(z) · σ/√(2π) · exp(-σ²v²/2)`
#[derive(Debug, Clone)]
pub struct RegularTerm {
    pub sigma: f64,
    pub coeff: SpatialFn,
}

impl RegularTerm {
    pub fn profile(&self, v: f64) -> f64 {
        let s = self.sigma;
        s / (2.0 * PI).sqrt() * (-0.5 * s * s * v * v).exp()
    }
}

#[derive(Debug, Clone, Default)]
pub struct KernelRep {
    pub singular: Vec<SingularTerm>,
    pub regular: Vec<RegularTerm>,
}

impl KernelRep {
    pub fn regular_value(&self, z: f64, v: f64) -> f64 {
        self.regular.iter().map(|t| t.coeff.value(z) * t.profile(v)).sum()
    }

    /// Real part of the singular weight at offset `v0`, evaluated at `z`.
    pub fn singular_value(&self, z: f64, v0: f64) -> f64 {
        self.singular
            .iter()
            .filter(|t| !t.imaginary && t.offset == v0)
            .map(|t| t.weight * t.coeff.value(z))
            .sum()
    }
}

pub fn weyl_kernel(a: &SymbolSpec) -> Result<KernelRep> {
    if a.dimension() != 1 {
        return Err(Error::UnsupportedFamily(format!("dimension {}", a.dimension())));
    }
    let mut rep = KernelRep::default();
    for term in a.terms() {
        match term.xi {
            XiProfile::Cos { k } if k == 0.0 => rep.singular.push(SingularTerm {
                offset: 0.0,
                weight: 1.0,
                imaginary: false,
                coeff: term.spatial,
            }),
            XiProfile::Cos { k } => {
                for offset in [k, -k] {
                    rep.singular.push(SingularTerm {
                        offset,
                        weight: 0.5,
                        imaginary: false,
                        coeff: term.spatial.clone(),
                    });
                }
            }
            XiProfile::Sin { k } => {
                if k != 0.0 {
                    // sin(kξ) = (e^{ikξ} - e^{-ikξ}) / 2i
                    rep.singular.push(SingularTerm {
                        offset: k,
                        weight: 0.5,
                        imaginary: true,
                        coeff: term.spatial.clone(),
                    });
                    rep.singular.push(SingularTerm {
                        offset: -k,
                        weight: -0.5,
                        imaginary: true,
                        coeff: term.spatial,
                    });
                }
            }
            XiProfile::Gauss { sigma } => {
                if !(sigma > 0.0) {
                    return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
                }
                rep.regular.push(RegularTerm {
                    sigma,
                    coeff: term.spatial,
                })
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub symbol: String,
    pub field: Option<String>,
    pub delta: f64,
}

impl Provenance {
    pub fn of(a: &SymbolSpec) -> Self {
        match a.perturbation() {
            Some((f, d)) => Self {
                symbol: a.unperturbed().label(),
                field: Some(f.label()),
                delta: d,
            },
            None => Self {
                symbol: a.label(),
                field: None,
                delta: 0.0,
            },
        }
    }

    pub fn raw(label: impl Into<String>) -> Self {
        Self {
            symbol: label.into(),
            field: None,
            delta: 0.0,
        }
    }
}

/// Real symmetric matrix realization of a Weyl operator.
#[derive(Debug, Clone)]
pub struct WeylOperator {
    matrix: Mat<f64>,
    grid: Grid1D,
    provenance: Provenance,
    asymmetry_residual: f64,
}

impl WeylOperator {
    /// Wrap an arbitrary square matrix, symmetrizing it.
    pub fn from_matrix(matrix: Mat<f64>, grid: Grid1D, provenance: Provenance) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != grid.points() {
            return Err(Error::InvalidParameter(format!(
                "matrix is {}x{}, grid has {} points",
                matrix.nrows(),
                matrix.ncols(),
                grid.points()
            )));
        }
        let asymmetry_residual = linalg::max_abs_asymmetry(matrix.as_ref());
        let n = matrix.nrows();
        let sym = Mat::from_fn(n, n, |i, j| 0.5 * (matrix[(i, j)] + matrix[(j, i)]));
        Ok(Self {
            matrix: sym,
            grid,
            provenance,
            asymmetry_residual,
        })
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<f64> {
        self.matrix
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn asymmetry_residual(&self) -> f64 {
        self.asymmetry_residual
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `K + c I`
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        for i in 0..out.dim() {
            out.matrix[(i, i)] += c;
        }
        out
    }

    /// Flat binary layout: 8-byte magic, `N` as u64, `L` as f64, metadata
    /// length as u64, UTF-8 JSON metadata, then `N²` row-major f64, all
    /// little-endian.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        let meta = serde_json::json!({
            "provenance": self.provenance,
            "grid": self.grid,
            "asymmetry_residual": self.asymmetry_residual,
        })
        .to_string();
        let n = self.dim();
        w.write_all(MAGIC)?;
        w.write_all(&(n as u64).to_le_bytes())?;
        w.write_all(&self.grid.half_width().to_le_bytes())?;
        w.write_all(&(meta.len() as u64).to_le_bytes())?;
        w.write_all(meta.as_bytes())?;
        let mut buf = Vec::with_capacity(8 * n);
        for i in 0..n {
            buf.clear();
            for j in 0..n {
                buf.extend_from_slice(&self.matrix[(i, j)].to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Config("not a weylab matrix file".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let half_width = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let meta_len = u64::from_le_bytes(b8) as usize;
        let mut meta = vec![0u8; meta_len];
        r.read_exact(&mut meta)?;
        let meta: serde_json::Value =
            serde_json::from_slice(&meta).map_err(|e| Error::Config(format!("bad metadata: {e}")))?;
        let provenance: Provenance = serde_json::from_value(meta["provenance"].clone())
            .map_err(|e| Error::Config(format!("bad provenance: {e}")))?;
        let asymmetry_residual = meta["asymmetry_residual"].as_f64().unwrap_or(0.0);
        let mut data = vec![0u8; 8 * n * n];
        r.read_exact(&mut data)?;
        let matrix = Mat::from_fn(n, n, |i, j| {
            let o = 8 * (i * n + j);
            f64::from_le_bytes(data[o..o + 8].try_into().unwrap())
        });
        Ok(Self {
            matrix,
            grid: Grid1D::new(half_width, n)?,
            provenance,
            asymmetry_residual,
        })
    }

    pub fn write_binary_file(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(f)
    }

    /// CSV with one matrix row per line; refused above `N = 1024`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let n = self.dim();
        if n > 1024 {
            return Err(Error::MatrixTooLarge(n));
        }
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{:.17e}", self.matrix[(i, j)])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Hop index `v0 / h`, required to be integral.
fn hop_index(offset: f64, h: f64) -> Result<i64> {
    let s = offset / h;
    let r = s.round();
    if (s - r).abs() > 1e-12 * s.abs().max(1.0) {
        return Err(Error::OffsetNotOnGrid { offset, spacing: h });
    }
    Ok(r as i64)
}

/// Assemble a matrix from a kernel whose coefficient functions are evaluated
/// through `coeff_at`, which receives each coefficient and the midpoint table
/// and returns the tabulated values.
pub(crate) fn assemble<F>(rep: &KernelRep, grid: &Grid1D, provenance: Provenance, coeff_at: F) -> Result<WeylOperator>
where
    F: Fn(&SpatialFn, &[f64]) -> Vec<f64> + Sync,
{
    let n = grid.points();
    if n > DENSE_LIMIT {
        return Err(Error::MatrixTooLarge(n));
    }
    let h = grid.spacing();
    if let Some(t) = rep.singular.iter().find(|t| t.imaginary) {
        return Err(Error::UnsupportedFamily(format!(
            "sin({}ξ) term gives a complex Hermitian matrix; only real symmetric output is supported",
            t.offset.abs()
        )));
    }
    let zs = grid.midpoints();

    let mut hops: Vec<(i64, Vec<f64>)> = Vec::new();
    for t in &rep.singular {
        let s = hop_index(t.offset, h)?;
        let vals: Vec<f64> = coeff_at(&t.coeff, &zs).into_iter().map(|c| t.weight * c).collect();
        hops.push((s, vals));
    }

    let mut regular: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for t in &rep.regular {
        let coeff = coeff_at(&t.coeff, &zs);
        let sup = coeff.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let residual = sup * t.profile(2.0 * grid.half_width());
        if residual >= 1e-12 {
            return Err(Error::GridTooSmall { residual });
        }
        // profile indexed by j - k + (n - 1)
        let profile: Vec<f64> = (0..2 * n - 1)
            .map(|d| h * t.profile((d as f64 - (n - 1) as f64) * h))
            .collect();
        regular.push((coeff, profile));
    }

    let mut data = vec![0.0f64; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(k, col)| {
        for (s, vals) in &hops {
            let j = k as i64 + s;
            if j >= 0 && (j as usize) < n {
                let j = j as usize;
                col[j] += vals[j + k];
            }
        }
        for (coeff, profile) in &regular {
            for (j, c) in col.iter_mut().enumerate() {
                *c += coeff[j + k] * profile[j + n - 1 - k];
            }
        }
    });
    let m = Mat::from_fn(n, n, |i, j| data[j * n + i]);
    WeylOperator::from_matrix(m, *grid, provenance)
}

pub fn build_matrix(a: &SymbolSpec, grid: &Grid1D) -> Result<WeylOperator> {
    let rep = weyl_kernel(a)?;
    assemble(&rep, grid, Provenance::of(a), |c, zs| zs.iter().map(|&z| c.value(z)).collect())
}

/// Sampling window for kernel diagnostics: `z ∈ [-z_max, z_max]`,
/// `|v| ∈ [v_min, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub z_max: f64,
    pub z_points: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub v_points: usize,
}

impl Default for KernelSample {
    fn default() -> Self {
        Self {
            z_max: 20.0,
            z_points: 201,
            v_min: 1.0,
            v_max: 40.0,
            v_points: 4001,
        }
    }
}

impl KernelSample {
    fn zs(&self) -> Vec<f64> {
        linspace(-self.z_max, self.z_max, self.z_points)
    }

    fn vs(&self) -> Vec<f64> {
        linspace(self.v_min, self.v_max, self.v_points)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub const DEFAULT_DECAY_ORDER: u32 = 4;

/// `sup ⟨v⟩^order |𝔎_reg(z, v)|` over the sample with `|v| ≥ v_min`.
pub fn kernel_decay_check(rep: &KernelRep, order: u32, sample: &KernelSample) -> f64 {
    if rep.regular.is_empty() {
        return 0.0;
    }
    let vs = sample.vs();
    sample
        .zs()
        .par_iter()
        .map(|&z| {
            let coeffs: Vec<f64> = rep.regular.iter().map(|t| t.coeff.value(z)).collect();
            let mut worst: f64 = 0.0;
            for &v in &vs {
                for v in [v, -v] {
                    let k: f64 = rep.regular.iter().zip(&coeffs).map(|(t, c)| c * t.profile(v)).sum();
                    let w = (1.0 + v * v).sqrt().powi(order as i32);
                    worst = worst.max(w * k.abs());
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

pub fn operator_norm(k: &WeylOperator) -> Result<f64> {
    linalg::sym_norm(k.matrix().as_ref())
}

/// `‖K‖ / ν_{7,7}(a)`, the ratio bounded by the Calderón–Vaillancourt
/// constant at `d = 1`.
pub fn cv_ratio(k: &WeylOperator, a: &SymbolSpec, sampling: &Sampling) -> Result<f64> {
    let norm = operator_norm(k)?;
    let nu = seminorm(a, 7, 7, sampling)?.value;
    Ok(if nu == 0.0 { 0.0 } else { norm / nu })
}

pub const DEFAULT_QUADRATURE_NODES: usize = 64;

/// Largest discrepancy between `𝔎_δ(z,v) - 𝔎_0(z + δ^κγ, v)` and its
/// Newton–Leibniz form `∫_0^1 ∂_z𝔎_0(Ψ_s(z), v) ds · (δF(z) - δ^κγ)`, with
/// `Ψ_s(z) = z + δ^κγ + s(δF(z) - δ^κγ)`.
///
/// Singular terms are compared through their coefficient functions, regular
/// terms at every sampled `(z, v)`.
#[allow(clippy::too_many_arguments)]
pub fn kernel_difference_check(
    a: &SymbolSpec,
    field: &PerturbField,
    delta: f64,
    kappa: f64,
    gamma: i64,
    sample: &KernelSample,
    quad_nodes: usize,
) -> Result<f64> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidParameter(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    let perturbed = perturb(a, field, delta)?;
    let rep0 = weyl_kernel(a)?;
    let rep_d = weyl_kernel(&perturbed)?;
    let shift = delta.abs().powf(kappa) * gamma as f64;
    let (s_nodes, s_weights) = gauss_legendre_on(quad_nodes, 0.0, 1.0);
    let mut vs = sample.vs();
    vs.extend(sample.vs().iter().map(|v| -v));
    vs.push(0.0);

    let pairs_sing = rep0.singular.iter().zip(&rep_d.singular);
    let pairs_reg = rep0.regular.iter().zip(&rep_d.regular);
    let zs = sample.zs();

    let worst = zs
        .par_iter()
        .map(|&z| -> Result<f64> {
            let step = delta * field.value(z) - shift;
            let newton_leibniz = |c: &SpatialFn| -> Result<f64> {
                let mut acc = 0.0;
                for (s, w) in s_nodes.iter().zip(&s_weights) {
                    acc += w * c.jet(z + shift + s * step, 1)?.derivative(1);
                }
                Ok(acc * step)
            };
            let mut worst: f64 = 0.0;
            for (t0, td) in pairs_sing.clone() {
                let left = t0.weight * (td.coeff.value(z) - t0.coeff.value(z + shift));
                let right = t0.weight * newton_leibniz(&t0.coeff)?;
                worst = worst.max((left - right).abs());
            }
            for (t0, td) in pairs_reg.clone() {
                let left_c = td.coeff.value(z) - t0.coeff.value(z + shift);
                let right_c = newton_leibniz(&t0.coeff)?;
                for &v in &vs {
                    let p = t0.profile(v);
                    worst = worst.max((left_c * p - right_c * p).abs());
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Coefficient;

    fn grid(l: f64, n: usize) -> Grid1D {
        Grid1D::new(l, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(1.0, 15).is_err());
        assert!(Grid1D::new(1.0, 18).is_ok());
        assert!(Grid1D::new(0.0, 32).is_err());
        let g = grid(4.0, 32);
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.node(0), -4.0);
        assert_eq!(g.midpoints()[1], -3.875);
    }

    #[test]
    fn potential_kernel_is_point_mass_at_zero() {
        let rep = weyl_kernel(&SymbolSpec::potential(Coefficient::cos(1.0, 1.0, 0.0))).unwrap();
        assert_eq!(rep.singular.len(), 1);
        assert_eq!(rep.singular[0].offset, 0.0);
        assert!(rep.regular.is_empty());
    }

    #[test]
    fn cos_xi_kernel_matches_discrete_fourier_oracle() {
        // Sample cos η on a periodic η-grid of 64 points and take the DFT:
        // the mass sits in bins ±1 with weight 1/2 each.
        let m = 64;
        let mut bins = vec![0.0; m];
        for (k, b) in bins.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..m {
                let eta = 2.0 * PI * j as f64 / m as f64;
                acc += eta.cos() * (-(k as f64) * eta).cos();
            }
            *b = acc / m as f64;
        }
        let rep = weyl_kernel(&SymbolSpec::cos_xi(1.0, Coefficient::constant(1.0))).unwrap();
        let mut offs: Vec<(f64, f64)> = rep.singular.iter().map(|t| (t.offset, t.weight)).collect();
        offs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(offs, vec![(-1.0, 0.5), (1.0, 0.5)]);
        assert!((bins[1] - 0.5).abs() < 1e-12 && (bins[m - 1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gaussian_regular_part_matches_quadrature() {
        let rep = weyl_kernel(&SymbolSpec::gauss_xi(1.0, Coefficient::constant(1.0))).unwrap();
        let (nodes, weights) = gauss_legendre_on(200, -12.0, 12.0);
        for v in [0.0, 0.7, 2.0] {
            let q: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(e, w)| w * (e * v).cos() * (-0.5 * e * e).exp())
                .sum::<f64>()
                / (2.0 * PI);
            assert!((rep.regular_value(0.0, v) - q).abs() < 1e-12);
        }
        assert!((rep.regular_value(3.0, 0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn potential_builds_exact_diagonal() {
        let g = grid(8.0, 64);
        let k = build_matrix(&SymbolSpec::potential(Coefficient::cos(1.0, 1.0, 0.0)), &g).unwrap();
        for i in 0..64 {
            for j in 0..64 {
                let expected = if i == j { g.node(i).cos() } else { 0.0 };
                assert_eq!(k.matrix()[(i, j)], expected);
            }
        }
        assert_eq!(k.asymmetry_residual(), 0.0);
    }

    #[test]
    fn cos_xi_at_half_spacing_hops_two_nodes() {
        let g = grid(8.0, 32);
        let k = build_matrix(&SymbolSpec::cos_xi(1.0, Coefficient::constant(1.0)), &g).unwrap();
        for i in 0..32usize {
            for j in 0..32usize {
                let expected = if i.abs_diff(j) == 2 { 0.5 } else { 0.0 };
                assert_eq!(k.matrix()[(i, j)], expected);
            }
        }
    }

    #[test]
    fn harper_top_eigenvalue_below_two() {
        let g = grid(50.0, 100);
        let k = build_matrix(&SymbolSpec::harper(), &g).unwrap();
        let top = *linalg::sym_eigenvalues(k.matrix().as_ref()).unwrap().last().unwrap();
        assert!(top <= 2.0 && top > 1.0);
    }

    #[test]
    fn incommensurate_offset_rejected() {
        let g = grid(8.0, 40);
        let err = build_matrix(&SymbolSpec::cos_xi(1.0, Coefficient::constant(1.0)), &g).unwrap_err();
        assert!(matches!(err, Error::OffsetNotOnGrid { .. }));
    }

    #[test]
    fn sin_terms_rejected() {
        let a = SymbolSpec::trig(vec![crate::symbols::TrigTerm {
            k: 1.0,
            odd: true,
            coeff: Coefficient::constant(1.0),
        }]);
        assert!(weyl_kernel(&a).is_ok());
        assert!(matches!(build_matrix(&a, &grid(8.0, 32)), Err(Error::UnsupportedFamily(_))));
    }

    #[test]
    fn small_grid_with_wide_kernel_is_too_small() {
        let a = SymbolSpec::gauss_xi(0.1, Coefficient::constant(1.0));
        assert!(matches!(build_matrix(&a, &grid(2.0, 32)), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn decay_check_values() {
        assert_eq!(kernel_decay_check(&KernelRep::default(), 4, &KernelSample::default()), 0.0);
        let rep = weyl_kernel(&SymbolSpec::gauss_xi(1.0, Coefficient::constant(1.0))).unwrap();
        let s = KernelSample::default();
        let val = kernel_decay_check(&rep, 4, &s);
        // ⟨v⟩⁴ e^{-v²/2} peaks at v² = 3.
        let oracle = 16.0 * (-1.5f64).exp() / (2.0 * PI).sqrt();
        assert!((val - oracle).abs() < 1e-6 * oracle);
        let wide = kernel_decay_check(&rep, 4, &KernelSample { v_max: 80.0, v_points: 8001, ..s });
        assert!((wide - val).abs() <= 0.01 * val);
        let flat = kernel_decay_check(&rep, 0, &s);
        assert!((flat - rep.regular_value(0.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn operator_norm_of_zero_and_potential() {
        let g = grid(8.0, 32);
        let zero = WeylOperator::from_matrix(Mat::zeros(32, 32), g, Provenance::raw("zero")).unwrap();
        assert_eq!(operator_norm(&zero).unwrap(), 0.0);
        let a = SymbolSpec::potential(Coefficient::constant(0.0));
        assert_eq!(cv_ratio(&zero, &a, &Sampling { half_extent: 5.0, points: 21 }).unwrap(), 0.0);
        let k = build_matrix(&SymbolSpec::potential(Coefficient::cos(1.0, 1.0, 0.0)), &grid(32.0, 256)).unwrap();
        assert!((operator_norm(&k).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn kernel_difference_examples() {
        let a = SymbolSpec::gauss_xi(1.0, Coefficient::gauss(1.0, 0.0, 1.5));
        let s = KernelSample {
            z_max: 6.0,
            z_points: 61,
            v_min: 0.0,
            v_max: 4.0,
            v_points: 21,
        };
        let zero = kernel_difference_check(&a, &PerturbField::sine(1.0), 0.0, 0.5, 0, &s, 64).unwrap();
        assert_eq!(zero, 0.0);
        let c = kernel_difference_check(&a, &PerturbField::constant(2.0), 0.3, 0.5, 0, &s, 64).unwrap();
        assert!(c < 1e-8, "{c}");
        let aff = kernel_difference_check(&a, &PerturbField::affine(1.0, 0.5), 0.1, 0.5, 1, &s, 64).unwrap();
        assert!(aff < 1e-6, "{aff}");
        let harper = kernel_difference_check(&SymbolSpec::harper(), &PerturbField::sine(1.0), 0.2, 0.5, 2, &s, 64).unwrap();
        assert!(harper < 1e-10, "{harper}");
    }

    #[test]
    fn binary_roundtrip() {
        let k = build_matrix(&SymbolSpec::harper(), &grid(8.0, 16)).unwrap();
        let mut buf = Vec::new();
        k.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let back = WeylOperator::read_binary(&buf[..]).unwrap();
        assert_eq!(back.matrix(), k.matrix());
        assert_eq!(back.provenance(), k.provenance());
        let mut csv = Vec::new();
        k.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 16);
    }
}
