use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use weylab::lab::fit::{apply_floor, bound_check, fit_power_law};
use weylab::lab::{emit_plot, run_sweep, ExperimentConfig, Mode, Table};
use weylab::quantize::build_matrix;
use weylab::spectra::{default_gap_tol, spectrum_localized};
use weylab::symbols::perturb;
use weylab::{Error, Result};

#[derive(Parser)]
#[command(name = "weylab", version, about = "Weyl-quantized operators on a 1-D grid: spectra and stability sweeps")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured probe seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured grid, as `L,N`
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(f64, usize)>,
    /// Worker threads for sweep cells
    #[arg(long, global = true)]
    parallel: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the operator matrix and export it
    Quantize {
        /// Quantize the perturbed symbol `a(x + δF(x), ξ)`
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Also write a CSV copy (refused above N = 512)
        #[arg(long)]
        csv: bool,
    },
    /// Eigenvalues, edges and gaps of one operator
    Spectrum {
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        gap_tol: Option<f64>,
    },
    /// Run a parameter sweep and write CSV, fit summaries and metadata
    Sweep {
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
    },
    /// Refit a power law offline from a sweep CSV
    Fit(FitArgs),
    /// Log-log plot of two CSV columns, optionally with a fitted line
    Plot {
        #[command(flatten)]
        select: FitArgs,
        /// Draw the power-law fit of the floor-filtered rows
        #[arg(long)]
        fit: bool,
    },
}

#[derive(Args)]
struct FitArgs {
    csv: PathBuf,
    #[arg(long, default_value = "delta")]
    x: String,
    #[arg(long)]
    y: String,
    /// Error column for the floor rule; ignored when the CSV lacks it
    #[arg(long, default_value = "grid_doubling_err")]
    err: String,
    /// Keep rows where `column=value`; may be repeated
    #[arg(long = "where", value_parser = parse_filter)]
    filters: Vec<(String, f64)>,
    /// Also check `y ≤ 1.1 Ĉ x^ν` with `Ĉ` taken at the largest x
    #[arg(long)]
    exponent: Option<f64>,
}

fn parse_grid(s: &str) -> std::result::Result<(f64, usize), String> {
    let (l, n) = s.split_once(',').ok_or("expected L,N")?;
    let l = l.trim().parse().map_err(|e| format!("L: {e}"))?;
    let n = n.trim().parse().map_err(|e| format!("N: {e}"))?;
    Ok((l, n))
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_filter(s: &str) -> std::result::Result<(String, f64), String> {
    let (c, v) = s.split_once('=').ok_or("expected column=value")?;
    Ok((c.to_string(), v.parse().map_err(|e| format!("{v}: {e}"))?))
}

fn load_config(g: &Global) -> Result<ExperimentConfig> {
    let path = g
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some((l, n)) = g.grid {
        cfg.grid.half_width = l;
        cfg.grid.points = n;
    }
    if let Some(out) = &g.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn selected_points(a: &FitArgs) -> Result<(Vec<(f64, f64)>, usize)> {
    let mut t = Table::read(&a.csv)?;
    for (col, val) in &a.filters {
        t = t.filter_eq(col, *val)?;
    }
    let xs = t.column(&a.x)?;
    let ys = t.column(&a.y)?;
    let errs = match t.column(&a.err) {
        Ok(e) => e,
        Err(Error::ColumnMissing(_)) => vec![0.0; xs.len()],
        Err(e) => return Err(e),
    };
    let rows: Vec<(f64, f64, f64)> = xs.iter().zip(&ys).zip(&errs).map(|((x, y), e)| (*x, *y, *e)).collect();
    Ok((apply_floor(&rows), rows.len()))
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(k) = g.parallel {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Quantize { delta, csv } => {
            let cfg = load_config(g)?;
            let a = perturb(&cfg.symbol(), &cfg.field()?, *delta)?;
            let k = build_matrix(&a, &cfg.grid()?)?;
            std::fs::create_dir_all(&cfg.out)?;
            let bin = cfg.out.join("matrix.bin");
            k.write_binary_file(&bin)?;
            println!("{}", bin.display());
            if *csv {
                if k.dim() > 512 {
                    return Err(Error::Config(format!("CSV export is limited to N <= 512, got {}", k.dim())));
                }
                let p = cfg.out.join("matrix.csv");
                k.write_csv(std::io::BufWriter::new(std::fs::File::create(&p)?))?;
                println!("{}", p.display());
            }
        }
        Command::Spectrum { delta, gap_tol } => {
            let cfg = load_config(g)?;
            let a = perturb(&cfg.symbol(), &cfg.field()?, *delta)?;
            let k = build_matrix(&a, &cfg.grid()?)?;
            let mut r = spectrum_localized(&k, 1.0)?;
            let tol = gap_tol.unwrap_or_else(|| default_gap_tol(&r.eigenvalues));
            r = weylab::spectra::SpectrumReport {
                localized: r.localized.take(),
                ..weylab::spectra::SpectrumReport::from_eigenvalues(r.eigenvalues.clone(), tol)?
            };
            std::fs::create_dir_all(&cfg.out)?;
            let csv = cfg.out.join("spectrum.csv");
            r.write_csv(std::io::BufWriter::new(std::fs::File::create(&csv)?))?;
            let json = cfg.out.join("spectrum.json");
            write_json(&json, &r.summary_json())?;
            println!("{}\n{}", csv.display(), json.display());
        }
        Command::Sweep { mode } => {
            let mut cfg = load_config(g)?;
            if let Some(m) = mode {
                cfg.mode = *m;
                cfg.validate()?;
            }
            let result = run_sweep(&cfg)?;
            for p in result.write(&cfg.out)? {
                println!("{}", p.display());
            }
        }
        Command::Fit(a) => {
            let (pts, rows) = selected_points(a)?;
            let fit = fit_power_law(&pts)?;
            let bound = a.exponent.map(|nu| bound_check(&pts, nu, 1.1)).transpose()?;
            let v = serde_json::json!({
                "x": a.x, "y": a.y, "rows": rows, "fit": fit, "bound": bound,
            });
            let text = serde_json::to_string_pretty(&v).map_err(|e| Error::Config(e.to_string()))?;
            println!("{text}");
            if let Some(dir) = &g.out {
                std::fs::create_dir_all(dir)?;
                write_json(&dir.join("fit.json"), &v)?;
            }
        }
        Command::Plot { select, fit } => {
            let fitted = if *fit {
                let (pts, _) = selected_points(select)?;
                Some(fit_power_law(&pts)?)
            } else {
                None
            };
            let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;
            let out = dir.join(format!("{}_vs_{}.svg", select.y, select.x));
            let source = if select.filters.is_empty() {
                select.csv.clone()
            } else {
                let mut t = Table::read(&select.csv)?;
                for (col, val) in &select.filters {
                    t = t.filter_eq(col, *val)?;
                }
                let tmp = dir.join(format!(".{}_vs_{}.csv", select.y, select.x));
                std::fs::write(&tmp, t.to_csv())?;
                tmp
            };
            let summary = emit_plot(&source, &select.x, &select.y, fitted.as_ref(), &out);
            if source != select.csv {
                std::fs::remove_file(&source)?;
            }
            summary?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
