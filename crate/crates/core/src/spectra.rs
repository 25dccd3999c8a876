//! Spectra of truncated operators, Hausdorff distances and edges.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::quantize::{Grid1D, WeylOperator};

const DENSE_LIMIT: usize = 4096;
pub const LOCALIZATION_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub edge_minus: f64,
    pub edge_plus: f64,
    pub gaps: Vec<(f64, f64)>,
    pub gap_tol: f64,
    #[serde(skip)]
    pub grid: Option<Grid1D>,
    /// Per eigenvalue: does the eigenvector keep at least 90% of its mass in
    /// `|x| ≤ L/2`? Present only when eigenvectors were computed.
    #[serde(skip)]
    pub localized: Option<Vec<bool>>,
}

impl SpectrumReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, gap_tol: f64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::EmptySet);
        }
        if !(gap_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("gap_tol must be positive, got {gap_tol}")));
        }
        eigenvalues.sort_by(f64::total_cmp);
        let gaps = eigenvalues
            .windows(2)
            .filter(|w| w[1] - w[0] > gap_tol)
            .map(|w| (w[0], w[1]))
            .collect();
        Ok(Self {
            edge_minus: eigenvalues[0],
            edge_plus: *eigenvalues.last().unwrap(),
            eigenvalues,
            gaps,
            gap_tol,
            grid: None,
            localized: None,
        })
    }

    /// Eigenvalues whose eigenvectors pass the localization filter; all of
    /// them when no filter data is present.
    pub fn filtered(&self) -> Vec<f64> {
        match &self.localized {
            Some(flags) => self
                .eigenvalues
                .iter()
                .zip(flags)
                .filter(|(_, &keep)| keep)
                .map(|(&e, _)| e)
                .collect(),
            None => self.eigenvalues.clone(),
        }
    }

    pub fn widest_gap(&self) -> Option<(f64, f64)> {
        self.gaps.iter().copied().max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "index,eigenvalue,localized")?;
        for (i, e) in self.eigenvalues.iter().enumerate() {
            let loc = match &self.localized {
                Some(flags) => if flags[i] { "1" } else { "0" },
                None => "",
            };
            writeln!(w, "{i},{e:.12e},{loc}")?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "edge_minus": self.edge_minus,
            "edge_plus": self.edge_plus,
            "gap_tol": self.gap_tol,
            "gaps": self.gaps,
            "count": self.eigenvalues.len(),
        })
    }
}

fn check_size(k: &WeylOperator) -> Result<()> {
    if k.dim() > DENSE_LIMIT {
        return Err(Error::MatrixTooLarge(k.dim()));
    }
    Ok(())
}

pub fn spectrum(k: &WeylOperator, gap_tol: f64) -> Result<SpectrumReport> {
    check_size(k)?;
    let vals = linalg::sym_eigenvalues(k.matrix().as_ref())?;
    let mut r = SpectrumReport::from_eigenvalues(vals, gap_tol)?;
    r.grid = Some(*k.grid());
    Ok(r)
}

/// Like [`spectrum`], also flagging eigenvectors localized in `|x| ≤ L/2`.
pub fn spectrum_localized(k: &WeylOperator, gap_tol: f64) -> Result<SpectrumReport> {
    check_size(k)?;
    let (vals, vecs) = linalg::sym_eigen(k.matrix().as_ref())?;
    let grid = k.grid();
    let inner: Vec<bool> = grid
        .nodes()
        .iter()
        .map(|x| x.abs() <= 0.5 * grid.half_width())
        .collect();
    let flags = (0..vals.len())
        .map(|c| {
            let col = vecs.col(c);
            let mut total = 0.0;
            let mut kept = 0.0;
            for (i, &inside) in inner.iter().enumerate() {
                let m = col[i] * col[i];
                total += m;
                if inside {
                    kept += m;
                }
            }
            kept >= LOCALIZATION_THRESHOLD * total
        })
        .collect();
    let mut r = SpectrumReport::from_eigenvalues(vals, gap_tol)?;
    r.grid = Some(*grid);
    r.localized = Some(flags);
    Ok(r)
}

/// `10 ×` the median consecutive spacing.
pub fn default_gap_tol(eigenvalues: &[f64]) -> f64 {
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut spacings: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    if spacings.is_empty() {
        return 1.0;
    }
    spacings.sort_by(f64::total_cmp);
    let m = spacings.len();
    let median = if m % 2 == 1 {
        spacings[m / 2]
    } else {
        0.5 * (spacings[m / 2 - 1] + spacings[m / 2])
    };
    if median > 0.0 {
        10.0 * median
    } else {
        f64::EPSILON
    }
}

fn dist_to_sorted(x: f64, sorted: &[f64]) -> f64 {
    let i = sorted.partition_point(|&s| s < x);
    let mut d = f64::INFINITY;
    if i < sorted.len() {
        d = d.min((sorted[i] - x).abs());
    }
    if i > 0 {
        d = d.min((x - sorted[i - 1]).abs());
    }
    d
}

/// Distance from `x` to a finite set.
pub fn dist_to_set(x: f64, set: &[f64]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut s = set.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(dist_to_sorted(x, &s))
}

pub fn hausdorff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let one = sa.iter().map(|&x| dist_to_sorted(x, &sb)).fold(0.0, f64::max);
    let two = sb.iter().map(|&x| dist_to_sorted(x, &sa)).fold(0.0, f64::max);
    Ok(one.max(two))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeDrift {
    pub d_minus: f64,
    pub d_plus: f64,
}

pub fn edge_drift(r0: &SpectrumReport, rd: &SpectrumReport) -> Result<EdgeDrift> {
    if let (Some(g0), Some(gd)) = (r0.grid, rd.grid) {
        if g0 != gd {
            return Err(Error::GridMismatch);
        }
    }
    Ok(EdgeDrift {
        d_minus: rd.edge_minus - r0.edge_minus,
        d_plus: rd.edge_plus - r0.edge_plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::{build_matrix, Provenance};
    use crate::symbols::{perturb, Coefficient, PerturbField, SymbolSpec};
    use faer::Mat;
    use std::f64::consts::PI;

    #[test]
    fn diagonal_report() {
        let g = Grid1D::new(8.0, 16).unwrap();
        let d = [3.0, 1.0, 2.0];
        let m = Mat::from_fn(16, 16, |i, j| if i == j { d.get(i).copied().unwrap_or(2.0) } else { 0.0 });
        let k = WeylOperator::from_matrix(m, g, Provenance::raw("diag")).unwrap();
        let r = spectrum(&k, 0.5).unwrap();
        assert_eq!(r.edge_minus, 1.0);
        assert_eq!(r.edge_plus, 3.0);
        assert_eq!(r.gaps, vec![(1.0, 2.0), (2.0, 3.0)]);

        let small = SpectrumReport::from_eigenvalues(vec![3.0, 1.0, 2.0], 0.5).unwrap();
        assert_eq!(small.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn cos_xi_closed_form_spectrum() {
        let g = Grid1D::new(200.0, 400).unwrap();
        let k = build_matrix(&SymbolSpec::cos_xi(1.0, Coefficient::constant(1.0)), &g).unwrap();
        let r = spectrum(&k, 1.0).unwrap();
        let mut exact: Vec<f64> = (1..=400).map(|j| (PI * j as f64 / 401.0).cos()).collect();
        exact.sort_by(f64::total_cmp);
        for (a, b) in r.eigenvalues.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(hausdorff(&[1.0, 2.0], &[2.0, 1.0]).unwrap(), 0.0);
        assert_eq!(hausdorff(&[0.0], &[1.0]).unwrap(), 1.0);
        assert!((hausdorff(&[0.0, 1.0], &[0.4]).unwrap() - 0.6).abs() < 1e-15);
        assert!(matches!(hausdorff(&[], &[1.0]), Err(Error::EmptySet)));
    }

    #[test]
    fn edge_drift_examples() {
        let r0 = SpectrumReport::from_eigenvalues(vec![-1.0, 0.0, 1.0], 0.1).unwrap();
        let rd = SpectrumReport::from_eigenvalues(vec![-1.1, 0.0, 1.05], 0.1).unwrap();
        let d = edge_drift(&r0, &rd).unwrap();
        assert!((d.d_minus + 0.1).abs() < 1e-12 && (d.d_plus - 0.05).abs() < 1e-12);
        assert_eq!(edge_drift(&r0, &r0).unwrap(), EdgeDrift { d_minus: 0.0, d_plus: 0.0 });

        let mut a = r0.clone();
        a.grid = Some(Grid1D::new(8.0, 16).unwrap());
        let mut b = r0.clone();
        b.grid = Some(Grid1D::new(8.0, 32).unwrap());
        assert!(matches!(edge_drift(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn edge_drift_agrees_with_direct_build() {
        let g = Grid1D::new(32.0, 64).unwrap();
        let a = SymbolSpec::harper();
        let f = PerturbField::affine(1.0, 0.0);
        let k0 = build_matrix(&a, &g).unwrap();
        let kd = build_matrix(&perturb(&a, &f, 0.01).unwrap(), &g).unwrap();
        let r0 = spectrum(&k0, 0.5).unwrap();
        let rd = spectrum(&kd, 0.5).unwrap();
        let drift = edge_drift(&r0, &rd).unwrap();
        let direct = linalg::sym_eigenvalues(kd.matrix().as_ref()).unwrap();
        let direct0 = linalg::sym_eigenvalues(k0.matrix().as_ref()).unwrap();
        assert!((drift.d_plus - (direct.last().unwrap() - direct0.last().unwrap())).abs() < 1e-12);
    }

    #[test]
    fn gap_widths_invariant_under_shift() {
        let g = Grid1D::new(32.0, 64).unwrap();
        let k = build_matrix(&SymbolSpec::harper(), &g).unwrap();
        let r = spectrum(&k, 0.05).unwrap();
        let s = spectrum(&k.shifted(3.0), 0.05).unwrap();
        assert_eq!(r.gaps.len(), s.gaps.len());
        for (a, b) in r.gaps.iter().zip(&s.gaps) {
            assert!(((a.1 - a.0) - (b.1 - b.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn localization_flags_bound_states() {
        let g = Grid1D::new(32.0, 256).unwrap();
        let a = SymbolSpec::sum(vec![
            SymbolSpec::cos_xi(1.0, Coefficient::constant(1.0)),
            SymbolSpec::potential(Coefficient::gauss(2.0, 0.0, 1.0)),
        ]);
        let k = build_matrix(&a, &g).unwrap();
        let r = spectrum_localized(&k, 0.1).unwrap();
        let flags = r.localized.as_ref().unwrap();
        assert!(*flags.last().unwrap());
        assert!(r.filtered().len() < r.eigenvalues.len());
    }

    #[test]
    fn default_gap_tol_uses_median() {
        assert_eq!(default_gap_tol(&[0.0, 1.0, 2.0, 10.0]), 10.0);
    }
}
