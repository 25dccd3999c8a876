//! The four experiment sweeps. Each row also carries the discrepancy between
//! the configured grid `(L, N)` and the doubled window `(2L, 2N)`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Mode};
use super::fit::{apply_floor, bound_check, fit_power_law, roundoff_floor, BoundCheck, PowerLawFit};
use super::plot::emit_gap_plot;
use super::table::{fmt_f64, Table};
use crate::edges::{edge_experiment, schedule, variational_edge, EdgeRow};
use crate::error::{Error, Result};
use crate::linalg;
use crate::quantize::{build_matrix, Grid1D};
use crate::spectra::{default_gap_tol, dist_to_set, hausdorff, spectrum, spectrum_localized, SpectrumReport};
use crate::stability::QuasiResolventProblem;
use crate::symbols::{perturb, PerturbField, SymbolSpec};

pub const BOUND_SLACK: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HausdorffRow {
    pub delta: f64,
    pub hausdorff_full: f64,
    pub hausdorff_filtered: f64,
    pub grid_doubling_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiresRow {
    pub delta: f64,
    pub kappa: f64,
    pub z: f64,
    pub dist0: f64,
    pub defect: f64,
    pub reverse_defect: f64,
    pub lemma1: f64,
    pub commutator: f64,
    pub snap_error: f64,
    /// `‖T̃‖`
    pub qr_norm: f64,
    /// `√((n_g+1)/2) / dist0`
    pub qr_bound: f64,
    /// `dist(𝔷, σ(K_δ))`
    pub dist_delta: f64,
    pub grid_doubling_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeSweepRow {
    #[serde(flatten)]
    pub row: EdgeRow,
    pub grid_doubling_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub delta: f64,
    pub gap_count: usize,
    pub widest_gap: f64,
    pub gap_edges: Vec<(f64, f64)>,
    pub grid_doubling_err: f64,
}

/// A gap of `K_δ` that overlaps no gap of `K₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapBirth {
    pub delta: f64,
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub series: String,
    pub kappa: Option<f64>,
    pub z: Option<f64>,
    pub rows: usize,
    pub predicted_exponent: Option<f64>,
    pub fit: std::result::Result<PowerLawFit, String>,
    pub bound: Option<BoundCheck>,
}

impl FitSummary {
    fn new(series: &str, rows: &[(f64, f64, f64)], predicted: Option<f64>) -> Self {
        let pts = apply_floor(rows);
        let fit = fit_power_law(&pts).map_err(|e| e.to_string());
        let bound = match predicted {
            Some(nu) if !pts.is_empty() => bound_check(&pts, nu, BOUND_SLACK).ok(),
            _ => None,
        };
        Self {
            series: series.to_string(),
            kappa: None,
            z: None,
            rows: rows.len(),
            predicted_exponent: predicted,
            fit,
            bound,
        }
    }

    fn at(mut self, kappa: Option<f64>, z: Option<f64>) -> Self {
        self.kappa = kappa;
        self.z = z;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SweepRows {
    Hausdorff { rows: Vec<HausdorffRow> },
    Edges { plus: Vec<EdgeSweepRow>, minus: Vec<EdgeSweepRow> },
    Quasires { rows: Vec<QuasiresRow> },
    Gapwatch { rows: Vec<GapRow>, births: Vec<GapBirth> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: SweepRows,
    pub fits: Vec<FitSummary>,
    pub meta: serde_json::Value,
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    match cfg.mode {
        Mode::Hausdorff => run_hausdorff_sweep(cfg),
        Mode::Edges => run_edge_sweep(cfg),
        Mode::Quasires => run_quasires_sweep(cfg),
        Mode::Gapwatch => run_gapwatch(cfg),
    }
}

fn require(cfg: &ExperimentConfig, mode: Mode) -> Result<()> {
    if cfg.mode != mode {
        return Err(Error::Config(format!(
            "configuration is for mode `{}`, not `{}`",
            cfg.mode.name(),
            mode.name()
        )));
    }
    cfg.validate()
}

fn eigenvalues(a: &SymbolSpec, grid: &Grid1D) -> Result<Vec<f64>> {
    linalg::sym_eigenvalues(build_matrix(a, grid)?.matrix().as_ref())
}

fn spectral_radius(eigs: &[f64]) -> f64 {
    eigs.iter().fold(0.0, |m, e| m.max(e.abs()))
}

fn meta(cfg: &ExperimentConfig, grid: &Grid1D, extra: serde_json::Value) -> serde_json::Value {
    let d = grid.doubled();
    serde_json::json!({
        "mode": cfg.mode.name(),
        "seed": cfg.seed,
        "symbol": cfg.symbol().label(),
        "symbol_is_artifact_default": cfg.symbol.is_preset(),
        "note": "built-in test symbols are this tool's own choices; no canonical test symbol exists",
        "field": cfg.field().map(|f| f.label()).unwrap_or_default(),
        "grid": { "half_width": grid.half_width(), "points": grid.points(), "spacing": grid.spacing() },
        "doubled_grid": { "half_width": d.half_width(), "points": d.points() },
        "floor_factor": super::fit::FLOOR_FACTOR,
        "config": cfg,
        "extra": extra,
    })
}

pub fn run_hausdorff_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    require(cfg, Mode::Hausdorff)?;
    let a = cfg.symbol();
    let field = cfg.field()?;
    let grid = cfg.grid()?;
    let grid2 = grid.doubled();
    let (k0, k02) = rayon::join(|| build_matrix(&a, &grid), || build_matrix(&a, &grid2));
    let (k0, k02) = (k0?, k02?);
    let mut r0 = spectrum_localized(&k0, 1.0)?;
    r0.gap_tol = default_gap_tol(&r0.eigenvalues);
    r0.gaps = SpectrumReport::from_eigenvalues(r0.eigenvalues.clone(), r0.gap_tol)?.gaps;
    let e02 = linalg::sym_eigenvalues(k02.matrix().as_ref())?;
    let floor = roundoff_floor(grid2.points(), spectral_radius(&e02));
    let rows: Vec<HausdorffRow> = cfg
        .sweep
        .deltas
        .par_iter()
        .map(|&delta| -> Result<HausdorffRow> {
            let p = perturb(&a, &field, delta)?;
            let rd = spectrum_localized(&build_matrix(&p, &grid)?, r0.gap_tol)?;
            let ed2 = eigenvalues(&p, &grid2)?;
            let full = hausdorff(&r0.eigenvalues, &rd.eigenvalues)?;
            let full2 = hausdorff(&e02, &ed2)?;
            let filtered = match (nonempty(r0.filtered()), nonempty(rd.filtered())) {
                (Some(x), Some(y)) => hausdorff(&x, &y)?,
                _ => f64::NAN,
            };
            Ok(HausdorffRow {
                delta,
                hausdorff_full: full,
                hausdorff_filtered: filtered,
                grid_doubling_err: (full - full2).abs().max(floor),
            })
        })
        .collect::<Result<_>>()?;
    let series: Vec<_> = rows
        .iter()
        .map(|r| (r.delta, r.hausdorff_full, r.grid_doubling_err))
        .collect();
    let fits = vec![FitSummary::new("hausdorff_full", &series, Some(0.5))];
    Ok(SweepResult {
        meta: meta(cfg, &grid, serde_json::json!({ "gap_tol": r0.gap_tol })),
        rows: SweepRows::Hausdorff { rows },
        fits,
    })
}

fn nonempty(v: Vec<f64>) -> Option<Vec<f64>> {
    (!v.is_empty()).then_some(v)
}

fn top(a: &SymbolSpec, grid: &Grid1D) -> Result<f64> {
    eigenvalues(a, grid)?.last().copied().ok_or(Error::EmptySet)
}

/// Drift of the top edge on the doubled window, for `a` and for `-a`.
fn doubled_drifts(a: &SymbolSpec, field: &PerturbField, deltas: &[f64], grid: &Grid1D) -> Result<Vec<(f64, f64)>> {
    let neg = a.negated();
    let (p0, m0) = rayon::join(|| top(a, grid), || top(&neg, grid));
    let (p0, m0) = (p0?, m0?);
    deltas
        .par_iter()
        .map(|&d| {
            let (p, m) = rayon::join(
                || top(&perturb(a, field, d)?, grid),
                || top(&perturb(&neg, field, d)?, grid),
            );
            Ok(((p? - p0).abs(), (m? - m0).abs()))
        })
        .collect()
}

pub fn run_edge_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    require(cfg, Mode::Edges)?;
    let a = cfg.symbol();
    let field = cfg.field()?;
    let grid = cfg.grid()?;
    let grid2 = grid.doubled();
    let mu = field.mu().ok_or_else(|| Error::Config("edge sweeps need mu_family".into()))?;
    let deltas = &cfg.sweep.deltas;
    let (table, doubled) = rayon::join(
        || edge_experiment(&a, &field, deltas, &grid),
        || doubled_drifts(&a, &field, deltas, &grid2),
    );
    let (table, doubled) = (table?, doubled?);
    let k0 = build_matrix(&a, &grid)?;
    let norm = spectral_radius(&linalg::sym_eigenvalues(k0.matrix().as_ref())?);
    let floor = roundoff_floor(grid2.points(), norm);
    let attach = |rows: &[EdgeRow], pick: fn(&(f64, f64)) -> f64| -> Vec<EdgeSweepRow> {
        rows.iter()
            .zip(&doubled)
            .map(|(r, d)| EdgeSweepRow {
                row: *r,
                grid_doubling_err: (r.drift_abs - pick(d)).abs().max(floor),
            })
            .collect()
    };
    let plus = attach(&table.plus, |d| d.0);
    let minus = attach(&table.minus, |d| d.1);
    let rho = if deltas.is_empty() { (1.0 + mu) / (2.0 + mu) } else { schedule(mu, deltas[0])?.rho };
    let series = |rows: &[EdgeSweepRow]| -> Vec<(f64, f64, f64)> {
        rows.iter().map(|r| (r.row.delta, r.row.drift_abs, r.grid_doubling_err)).collect()
    };
    let fits = vec![
        FitSummary::new("drift_plus", &series(&plus), Some(rho)),
        FitSummary::new("drift_minus", &series(&minus), Some(rho)),
    ];
    let var = variational_edge(&k0, cfg.probes, cfg.seed)?;
    let extra = serde_json::json!({
        "mu": mu,
        "rho": rho,
        "variational_edge": var.edge,
        "best_rayleigh_probe": var.best_rayleigh,
    });
    Ok(SweepResult {
        meta: meta(cfg, &grid, extra),
        rows: SweepRows::Edges { plus, minus },
        fits,
    })
}

/// Spectral parameters: fixed offsets above `ℰ₊(0)`, then gap midpoints.
pub fn sample_points(spectrum0: &[f64], offsets: &[f64], gap_points: bool) -> Result<Vec<f64>> {
    let r = SpectrumReport::from_eigenvalues(spectrum0.to_vec(), default_gap_tol(spectrum0))?;
    let mut zs: Vec<f64> = offsets.iter().map(|o| r.edge_plus + o).collect();
    if gap_points {
        zs.extend(r.gaps.iter().map(|(lo, hi)| 0.5 * (lo + hi)));
    }
    zs.sort_by(f64::total_cmp);
    zs.dedup();
    Ok(zs)
}

struct QuasiresCell {
    defect: f64,
    reverse_defect: f64,
    commutator: f64,
    snap_error: f64,
    qr_norm: f64,
    qr_bound: f64,
    dist0: f64,
}

fn quasires_cell(p: &QuasiResolventProblem, z: f64, delta: f64, kappa: f64) -> Result<QuasiresCell> {
    let fwd = p.forward(z, delta, kappa)?;
    let (_, reverse_defect) = p.reverse_quasi_resolvent(z, delta, kappa)?;
    let commutator = p.commutator_defect(z, delta, kappa, None)?;
    Ok(QuasiresCell {
        defect: fwd.defect,
        reverse_defect,
        commutator,
        snap_error: fwd.quasi.snap_error,
        qr_norm: fwd.quasi.norm,
        qr_bound: fwd.quasi.bound,
        dist0: fwd.quasi.dist0,
    })
}

pub fn run_quasires_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    require(cfg, Mode::Quasires)?;
    let a = cfg.symbol();
    let field = cfg.field()?;
    let grid = cfg.grid()?;
    let base = cfg.partition()?;
    let mode = cfg.partition.translation;
    let (p, p2) = rayon::join(
        || QuasiResolventProblem::new(a.clone(), field.clone(), grid, base, mode),
        || QuasiResolventProblem::new(a.clone(), field.clone(), grid.doubled(), base, mode),
    );
    let (p, p2) = (p?, p2?);
    let floor = roundoff_floor(p2.grid.points(), spectral_radius(p2.spectrum0()));
    let zs = sample_points(p.spectrum0(), &cfg.sweep.z_offsets, cfg.sweep.gap_points)?;
    let deltas = &cfg.sweep.deltas;
    let kappas = &cfg.sweep.kappas;

    let spectra: Vec<Vec<f64>> = deltas
        .par_iter()
        .map(|&d| linalg::sym_eigenvalues(p.k_delta(d)?.matrix().as_ref()))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, f64)> = (0..deltas.len())
        .flat_map(|i| kappas.iter().map(move |&k| (i, k)))
        .collect();
    let lemma: BTreeMap<(usize, u64), (f64, f64)> = pairs
        .par_iter()
        .map(|&(i, k)| {
            let (l, l2) = rayon::join(
                || p.lemma1_defect(deltas[i], k, None),
                || p2.lemma1_defect(deltas[i], k, None),
            );
            Ok(((i, k.to_bits()), (l?, l2?)))
        })
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, f64, f64)> = pairs
        .iter()
        .flat_map(|&(i, k)| zs.iter().map(move |&z| (i, k, z)))
        .collect();
    let mut rows: Vec<QuasiresRow> = cells
        .par_iter()
        .map(|&(i, kappa, z)| -> Result<QuasiresRow> {
            let delta = deltas[i];
            let (c, c2) = rayon::join(|| quasires_cell(&p, z, delta, kappa), || quasires_cell(&p2, z, delta, kappa));
            let c = c?;
            let (l, l2) = lemma[&(i, kappa.to_bits())];
            let gd = match c2 {
                Ok(c2) => (c.defect - c2.defect)
                    .abs()
                    .max((l - l2).abs())
                    .max((c.commutator - c2.commutator).abs())
                    .max(floor),
                Err(Error::TooCloseToSpectrum { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            Ok(QuasiresRow {
                delta,
                kappa,
                z,
                dist0: c.dist0,
                defect: c.defect,
                reverse_defect: c.reverse_defect,
                lemma1: l,
                commutator: c.commutator,
                snap_error: c.snap_error,
                qr_norm: c.qr_norm,
                qr_bound: c.qr_bound,
                dist_delta: dist_to_set(z, &spectra[i])?,
                grid_doubling_err: gd,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|x, y| {
        (x.delta, x.kappa, x.z)
            .partial_cmp(&(y.delta, y.kappa, y.z))
            .expect("sweep keys are finite")
    });

    let mut fits = Vec::new();
    for &kappa in kappas {
        let at_kappa: Vec<&QuasiresRow> = rows.iter().filter(|r| r.kappa == kappa).collect();
        let lemma_rows: Vec<_> = at_kappa
            .iter()
            .filter(|r| Some(r.z) == zs.first().copied())
            .map(|r| (r.delta, r.lemma1, r.grid_doubling_err))
            .collect();
        fits.push(FitSummary::new("lemma1", &lemma_rows, Some(kappa)).at(Some(kappa), None));
        for &z in &zs {
            let here: Vec<&&QuasiresRow> = at_kappa.iter().filter(|r| r.z == z).collect();
            let defect: Vec<_> = here.iter().map(|r| (r.delta, r.defect, r.grid_doubling_err)).collect();
            let comm: Vec<_> = here.iter().map(|r| (r.delta, r.commutator, r.grid_doubling_err)).collect();
            fits.push(FitSummary::new("defect", &defect, Some(0.5)).at(Some(kappa), Some(z)));
            fits.push(FitSummary::new("commutator", &comm, Some(1.0 - kappa)).at(Some(kappa), Some(z)));
        }
    }
    let extra = serde_json::json!({
        "partition_radius": base.radius(),
        "overlap_count": base.overlap_count(),
        "translation": mode,
        "z": zs,
    });
    Ok(SweepResult {
        meta: meta(cfg, &grid, extra),
        rows: SweepRows::Quasires { rows },
        fits,
    })
}

fn gap_report(a: &SymbolSpec, grid: &Grid1D, gap_tol: f64) -> Result<SpectrumReport> {
    spectrum(&build_matrix(a, grid)?, gap_tol)
}

fn width(g: Option<(f64, f64)>) -> f64 {
    g.map_or(0.0, |(lo, hi)| hi - lo)
}

pub fn run_gapwatch(cfg: &ExperimentConfig) -> Result<SweepResult> {
    require(cfg, Mode::Gapwatch)?;
    let a = cfg.symbol();
    let field = cfg.field()?;
    let grid = cfg.grid()?;
    let grid2 = grid.doubled();
    let e0 = eigenvalues(&a, &grid)?;
    let gap_tol = default_gap_tol(&e0);
    let r0 = SpectrumReport::from_eigenvalues(e0, gap_tol)?;
    let floor = roundoff_floor(grid2.points(), spectral_radius(&r0.eigenvalues));
    let rows: Vec<GapRow> = cfg
        .sweep
        .deltas
        .par_iter()
        .map(|&delta| -> Result<GapRow> {
            let p = perturb(&a, &field, delta)?;
            let (r, r2) = rayon::join(|| gap_report(&p, &grid, gap_tol), || gap_report(&p, &grid2, gap_tol));
            let (r, r2) = (r?, r2?);
            let w = width(r.widest_gap());
            Ok(GapRow {
                delta,
                gap_count: r.gaps.len(),
                widest_gap: w,
                gap_edges: r.gaps,
                grid_doubling_err: (w - width(r2.widest_gap())).abs().max(floor),
            })
        })
        .collect::<Result<_>>()?;
    let births = rows
        .iter()
        .flat_map(|row| {
            row.gap_edges
                .iter()
                .filter(|(lo, hi)| !r0.gaps.iter().any(|(l0, h0)| lo < h0 && l0 < hi))
                .map(move |&(lo, hi)| GapBirth {
                    delta: row.delta,
                    lo,
                    hi,
                    width: hi - lo,
                })
        })
        .collect();
    let series: Vec<_> = rows
        .iter()
        .filter(|r| r.delta > 0.0)
        .map(|r| (r.delta, r.widest_gap, r.grid_doubling_err))
        .collect();
    let fits = vec![FitSummary::new("widest_gap", &series, None)];
    let extra = serde_json::json!({ "gap_tol": gap_tol, "reference_gaps": r0.gaps });
    Ok(SweepResult {
        meta: meta(cfg, &grid, extra),
        rows: SweepRows::Gapwatch { rows, births },
        fits,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

impl SweepResult {
    pub fn hausdorff(&self) -> Option<&[HausdorffRow]> {
        match &self.rows {
            SweepRows::Hausdorff { rows } => Some(rows),
            _ => None,
        }
    }

    pub fn edges(&self) -> Option<(&[EdgeSweepRow], &[EdgeSweepRow])> {
        match &self.rows {
            SweepRows::Edges { plus, minus } => Some((plus, minus)),
            _ => None,
        }
    }

    pub fn quasires(&self) -> Option<&[QuasiresRow]> {
        match &self.rows {
            SweepRows::Quasires { rows } => Some(rows),
            _ => None,
        }
    }

    pub fn gapwatch(&self) -> Option<(&[GapRow], &[GapBirth])> {
        match &self.rows {
            SweepRows::Gapwatch { rows, births } => Some((rows, births)),
            _ => None,
        }
    }

    pub fn fit(&self, series: &str, kappa: Option<f64>, z: Option<f64>) -> Option<&FitSummary> {
        self.fits
            .iter()
            .find(|f| f.series == series && f.kappa == kappa && (z.is_none() || f.z == z))
    }

    /// Data tables keyed by file name.
    pub fn tables(&self) -> Vec<(String, Table)> {
        match &self.rows {
            SweepRows::Hausdorff { rows } => {
                let mut t = Table::new(&["delta", "hausdorff_full", "hausdorff_filtered", "grid_doubling_err"]);
                for r in rows {
                    t.push(
                        [r.delta, r.hausdorff_full, r.hausdorff_filtered, r.grid_doubling_err]
                            .map(fmt_f64)
                            .to_vec(),
                    );
                }
                vec![("hausdorff.csv".into(), t)]
            }
            SweepRows::Edges { plus, minus } => vec![
                ("edges_plus.csv".into(), edge_table(plus)),
                ("edges_minus.csv".into(), edge_table(minus)),
            ],
            SweepRows::Quasires { rows } => {
                let mut t = Table::new(&[
                    "delta",
                    "kappa",
                    "z",
                    "dist0",
                    "defect",
                    "reverse_defect",
                    "lemma1",
                    "commutator",
                    "snap_error",
                    "qr_norm",
                    "qr_bound",
                    "dist_delta",
                    "grid_doubling_err",
                ]);
                for r in rows {
                    t.push(
                        [
                            r.delta,
                            r.kappa,
                            r.z,
                            r.dist0,
                            r.defect,
                            r.reverse_defect,
                            r.lemma1,
                            r.commutator,
                            r.snap_error,
                            r.qr_norm,
                            r.qr_bound,
                            r.dist_delta,
                            r.grid_doubling_err,
                        ]
                        .map(fmt_f64)
                        .to_vec(),
                    );
                }
                vec![("quasires.csv".into(), t)]
            }
            SweepRows::Gapwatch { rows, births } => {
                let mut t = Table::new(&["delta", "gap_count", "widest_gap", "gap_edges", "grid_doubling_err"]);
                for r in rows {
                    let edges: Vec<String> = r
                        .gap_edges
                        .iter()
                        .map(|(lo, hi)| format!("{}:{}", fmt_f64(*lo), fmt_f64(*hi)))
                        .collect();
                    t.push(vec![
                        fmt_f64(r.delta),
                        r.gap_count.to_string(),
                        fmt_f64(r.widest_gap),
                        edges.join(";"),
                        fmt_f64(r.grid_doubling_err),
                    ]);
                }
                let mut b = Table::new(&["delta", "lo", "hi", "width"]);
                for x in births {
                    b.push([x.delta, x.lo, x.hi, x.width].map(fmt_f64).to_vec());
                }
                vec![("gapwatch.csv".into(), t), ("gapwatch_births.csv".into(), b)]
            }
        }
    }

    pub fn fit_table(&self) -> Table {
        let mut t = Table::new(&[
            "series",
            "kappa",
            "z",
            "rows",
            "points_used",
            "exponent",
            "log_c",
            "r_squared",
            "predicted_exponent",
            "c_hat",
            "worst_ratio",
            "bound_holds",
            "status",
        ]);
        for f in &self.fits {
            let (used, exponent, log_c, r2, status) = match &f.fit {
                Ok(p) => (
                    p.points_used.to_string(),
                    fmt_f64(p.exponent),
                    fmt_f64(p.log_c),
                    fmt_f64(p.r_squared),
                    "ok".to_string(),
                ),
                Err(e) => (String::new(), String::new(), String::new(), String::new(), e.replace(',', ";")),
            };
            t.push(vec![
                f.series.clone(),
                opt(f.kappa),
                opt(f.z),
                f.rows.to_string(),
                used,
                exponent,
                log_c,
                r2,
                opt(f.predicted_exponent),
                opt(f.bound.map(|b| b.c_hat)),
                opt(f.bound.map(|b| b.worst_ratio)),
                f.bound.map(|b| b.holds.to_string()).unwrap_or_default(),
                status,
            ]);
        }
        t
    }

    fn mode_name(&self) -> &'static str {
        match self.rows {
            SweepRows::Hausdorff { .. } => "hausdorff",
            SweepRows::Edges { .. } => "edges",
            SweepRows::Quasires { .. } => "quasires",
            SweepRows::Gapwatch { .. } => "gapwatch",
        }
    }

    /// Every output file as `(name, bytes)`.
    pub fn files(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let mut out: Vec<(String, Vec<u8>)> = self
            .tables()
            .into_iter()
            .map(|(n, t)| (n, t.to_csv().into_bytes()))
            .collect();
        out.push((format!("{}_fit.csv", self.mode_name()), self.fit_table().to_csv().into_bytes()));
        let meta = serde_json::to_string_pretty(&self.meta).map_err(|e| Error::Config(e.to_string()))?;
        out.push(("meta.json".into(), meta.into_bytes()));
        if let SweepRows::Gapwatch { rows, .. } = &self.rows {
            out.push(("gapwatch.svg".into(), emit_gap_plot(rows).into_bytes()));
        }
        Ok(out)
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        self.files()?
            .into_iter()
            .map(|(name, bytes)| {
                let p = dir.join(name);
                std::fs::write(&p, bytes)?;
                Ok(p)
            })
            .collect()
    }
}

fn edge_table(rows: &[EdgeSweepRow]) -> Table {
    let mut t = Table::new(&[
        "delta",
        "mu",
        "rho",
        "theta",
        "kappa",
        "E0",
        "Edelta",
        "Etilde",
        "drift_abs",
        "e1_err",
        "e2_err",
        "bound_delta_rho",
        "grid_doubling_err",
    ]);
    for s in rows {
        let r = &s.row;
        t.push(
            [
                r.delta,
                r.mu,
                r.rho,
                r.theta,
                r.kappa,
                r.e0,
                r.edelta,
                r.etilde,
                r.drift_abs,
                r.e1_err,
                r.e2_err,
                r.bound_delta_rho,
                s.grid_doubling_err,
            ]
            .map(fmt_f64)
            .to_vec(),
        );
    }
    t
}
