//! Command-line front end for the torsion solvers: 2D cases, the
//! stretched 1D shaft, the parametric trainer/predictor, the
//! finite-difference oracles, checkpoint inspection and run manifests.
//!
//! Exit codes are stable: 0 success, 1 usage error, 2 numerical or
//! runtime failure.

mod configfile;
mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use torsion_pinn::geometry::{parse_domain_file, shapes, Domain2D};
use torsion_pinn::network::load_checkpoint;
use torsion_pinn::optim::write_loss_csv;
use torsion_pinn::parametric1d::{
    self, service, ParamPoint, ParametricProblem, ParametricTrainConfig,
};
use torsion_pinn::torsion1d_vs::{self, VsCaseReport, VsConfig, VsTorsionProblem};
use torsion_pinn::torsion2d::{
    run_case, write_field_csv, write_summary_csv, CaseConfig, PointSource, ReferenceKind,
    Torsion2DProblem,
};
use torsion_pinn::{fd_oracle, geometry};

use configfile::ConfigFile;
use manifest::ManifestBuilder;

#[derive(Parser)]
#[command(name = "torsion-pinn", version, about = "Mesh-free Saint-Venant torsion solvers")]
struct Cli {
    /// Configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a 2D cross-section case and compare its torsional constant.
    Torsion2d(Torsion2dArgs),
    /// Train the 1D shaft on a stretched domain, per scale and seed.
    Vs1d(Vs1dArgs),
    /// Parametric solver: train, evaluate, predict or serve.
    Parametric {
        #[command(subcommand)]
        action: ParametricAction,
    },
    /// Finite-difference and quadrature reference solvers.
    Oracle {
        #[command(subcommand)]
        action: OracleAction,
    },
    /// Inspect a checkpoint file.
    Ckpt {
        #[command(subcommand)]
        action: CkptAction,
    },
    /// Print the recognized configuration keys and defaults.
    Defaults,
}

#[derive(Args)]
struct Torsion2dArgs {
    /// Case name: circle | square | triangle | irregular.
    shape: Option<String>,
    /// Domain description file (alternative to a named shape).
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    /// Imported collocation points (kind,x,y CSV).
    #[arg(long)]
    points: Option<PathBuf>,
    /// Training lattice spacing in meters.
    #[arg(long)]
    grid_spacing: Option<f64>,
    /// Quadrature cell size for the torsional constant.
    #[arg(long)]
    quad_h: Option<f64>,
    /// Reference: auto | analytic | fd.
    #[arg(long)]
    reference: Option<String>,
    /// Grid size of the finite-difference reference.
    #[arg(long)]
    fd_h: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Vs1dArgs {
    /// Scale factors, comma separated (each ≥ 1).
    #[arg(long, default_value = "1,2,4")]
    scale: String,
    /// Number of seeds to fan out (seed, seed+1, …).
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ParametricAction {
    Train {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Checkpoint output path.
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate relative L2 error of a checkpoint on the fixed test grid.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
    },
    /// One-shot prediction to stdout.
    Predict {
        #[arg(long)]
        ckpt: PathBuf,
        /// Evaluation locations (repeatable).
        #[arg(long, required = true, num_args = 1..)]
        x: Vec<f64>,
        #[arg(long = "T")]
        amplitude: f64,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        sigma: f64,
    },
    /// HTTP prediction service until interrupted.
    Serve {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

#[derive(Subcommand)]
enum OracleAction {
    /// Five-point Poisson solve; prints J and writes the nodal field.
    Poisson {
        #[arg(long)]
        shape: Option<String>,
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        g: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Torsional constants across grid sizes with relative changes.
    Sweep {
        #[arg(long)]
        shape: Option<String>,
        #[arg(long)]
        domain: Option<PathBuf>,
        /// Strictly decreasing grid sizes, comma separated.
        #[arg(long)]
        h: String,
        #[arg(long)]
        g: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conservative 1D solve of the shaft profile against quadrature.
    Ode {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CkptAction {
    /// Print architecture, metadata and digest of a checkpoint.
    Info { path: PathBuf },
}

/// Usage errors exit 1; anything else that fails exits 2.
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl std::fmt::Debug for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl std::error::Error for UsageError {}

fn usage<T>(message: impl Into<String>) -> anyhow::Result<T> {
    Err(anyhow::Error::new(UsageError(message.into())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful exits; anything
            // else is a usage error.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    let file = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
        },
        None => ConfigFile::default(),
    };

    match run(cli.command, &file) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(command: Command, file: &ConfigFile) -> anyhow::Result<()> {
    match command {
        Command::Torsion2d(args) => cmd_torsion2d(args, file),
        Command::Vs1d(args) => cmd_vs1d(args, file),
        Command::Parametric { action } => cmd_parametric(action, file),
        Command::Oracle { action } => cmd_oracle(action, file),
        Command::Ckpt { action } => cmd_ckpt(action),
        Command::Defaults => {
            configfile::print_defaults();
            Ok(())
        }
    }
}

/// Flags override the config file, the file overrides defaults.
fn setting<T: Copy + std::str::FromStr>(
    flag: Option<T>,
    file: &ConfigFile,
    key: &str,
    default: T,
) -> anyhow::Result<T>
where
    <T as std::str::FromStr>::Err: std::fmt::Display,
{
    Ok(flag.or(file.parse::<T>(key)?).unwrap_or(default))
}

/// Output root: TORSION_PINN_OUT joined with the requested directory.
fn resolve_out(out: Option<PathBuf>, file: &ConfigFile, fallback: &str) -> PathBuf {
    let dir = out
        .or_else(|| file.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(fallback));
    match std::env::var_os("TORSION_PINN_OUT") {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir,
    }
}

fn resolve_domain(
    shape: Option<&str>,
    domain: Option<&Path>,
    file: &ConfigFile,
) -> anyhow::Result<(String, Domain2D)> {
    let shape = shape
        .map(str::to_string)
        .or_else(|| file.get("shape").map(str::to_string));
    let domain_path = domain
        .map(Path::to_path_buf)
        .or_else(|| file.get("domain").map(PathBuf::from));
    match (shape, domain_path) {
        (Some(name), None) => match shapes::by_name(&name) {
            Some(d) => Ok((name, d)),
            None => usage(format!(
                "unknown shape {name:?} (expected circle, square, triangle or irregular)"
            )),
        },
        (None, Some(path)) => {
            let d = parse_domain_file(&path).with_context(|| format!("{}", path.display()))?;
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "domain".into());
            Ok((id, d))
        }
        (Some(_), Some(_)) => usage("give either a shape name or --domain, not both"),
        (None, None) => usage("missing shape: pass a case name or --domain FILE"),
    }
}

fn cmd_torsion2d(args: Torsion2dArgs, file: &ConfigFile) -> anyhow::Result<()> {
    let (shape_id, domain) = resolve_domain(args.shape.as_deref(), args.domain.as_deref(), file)?;
    let epochs = setting(args.epochs, file, "epochs", 10_000)?;
    let seed = setting(args.seed, file, "seed", 7)?;
    let lr = setting(args.lr, file, "lr", 1e-3)?;
    let grid_spacing = setting(args.grid_spacing, file, "grid_spacing", 0.005)?;
    let quad_h = setting(args.quad_h, file, "quad_h", 0.001)?;
    let fd_h = setting(args.fd_h, file, "fd_h", 0.0025)?;
    let reference = match args
        .reference
        .as_deref()
        .or_else(|| file.get("reference"))
        .unwrap_or("auto")
    {
        "auto" => ReferenceKind::Auto,
        "analytic" => ReferenceKind::Analytic,
        "fd" => ReferenceKind::FiniteDifference { h: fd_h },
        other => return usage(format!("unknown reference {other:?}")),
    };
    let out = resolve_out(args.out, file, &format!("torsion2d-{shape_id}"));
    std::fs::create_dir_all(&out)?;

    let mut problem = Torsion2DProblem::new(domain.clone())
        .with_points(PointSource::Grid {
            spacing: grid_spacing,
        });
    let points_path = args.points.or_else(|| file.get("points").map(PathBuf::from));
    if let Some(path) = points_path {
        let set = geometry::load_points(&path, Some(&domain))?;
        problem = problem.with_points(PointSource::Imported(set));
    }

    let mut case = CaseConfig::new(seed);
    case.epochs = epochs;
    case.learning_rate = lr;
    case.quadrature_h = quad_h;
    case.reference = reference;

    let mut config_snapshot = BTreeMap::new();
    for (key, value) in [
        ("problem", "torsion2d".to_string()),
        ("shape", shape_id.clone()),
        ("epochs", epochs.to_string()),
        ("seed", seed.to_string()),
        ("lr", lr.to_string()),
        ("grid_spacing", grid_spacing.to_string()),
        ("quad_h", quad_h.to_string()),
    ] {
        config_snapshot.insert(key.to_string(), value);
    }
    let mut manifest = ManifestBuilder::new(&out, config_snapshot, Some(seed));

    let write_artifacts = |params: &[f64],
                           report: &torsion_pinn::optim::TrainReport,
                           manifest: &mut ManifestBuilder|
     -> anyhow::Result<()> {
        write_field_csv(&problem, params, grid_spacing, &out.join("field.csv"))?;
        write_loss_csv(report, &out.join("loss.csv"))?;
        manifest.record_output("field.csv")?;
        manifest.record_output("loss.csv")?;
        Ok(())
    };

    match run_case(&problem, &case) {
        Ok(report) => {
            write_artifacts(&report.params, &report.train, &mut manifest)?;
            write_summary_csv(&report, &out.join("summary.csv"))?;
            manifest.record_output("summary.csv")?;
            manifest.write()?;
            println!(
                "{shape_id}: J_pinn = {:.6e}, J_reference = {:.6e}, rel_error = {:.4e}",
                report.j_pinn, report.j_reference, report.rel_error
            );
            Ok(())
        }
        Err(torsion_pinn::torsion2d::Torsion2DError::Train(
            torsion_pinn::optim::TrainError::Diverged {
                quantity,
                epoch,
                last_good,
            },
        )) => {
            // Keep whatever the run produced before diverging.
            let (params, report) = *last_good;
            write_artifacts(&params, &report, &mut manifest)?;
            manifest.write()?;
            bail!(
                "training diverged (non-finite {quantity}) at epoch {epoch}; partial artifacts written to {}",
                out.display()
            );
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_vs1d(args: Vs1dArgs, file: &ConfigFile) -> anyhow::Result<()> {
    let scale_raw = file
        .get("scale")
        .map(str::to_string)
        .filter(|_| args.scale == "1,2,4")
        .unwrap_or(args.scale);
    let scales: Vec<f64> = scale_raw
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow::Error::new(UsageError(format!("bad scale list {scale_raw:?}: {e}"))))?;
    if scales.iter().any(|&n| n < 1.0) {
        return usage(format!("scale factors must be at least 1, got {scale_raw:?}"));
    }
    let n_seeds = setting(args.seeds, file, "seeds", 1)?;
    let base_seed = setting(args.seed, file, "seed", 0)?;
    let epochs = setting(args.epochs, file, "epochs", 20_000)?;
    let out = resolve_out(args.out, file, "vs1d");
    std::fs::create_dir_all(&out)?;

    let mut config_snapshot = BTreeMap::new();
    config_snapshot.insert("problem".into(), "vs1d".into());
    config_snapshot.insert("scales".into(), scale_raw.clone());
    config_snapshot.insert("seeds".into(), n_seeds.to_string());
    config_snapshot.insert("base_seed".into(), base_seed.to_string());
    config_snapshot.insert("epochs".into(), epochs.to_string());
    let mut manifest = ManifestBuilder::new(&out, config_snapshot, Some(base_seed));

    // Fan out all (scale, seed) runs; each writes its own directory.
    let lr_flag = args.lr;
    let lr_file = file.parse::<f64>("lr")?;
    let runs: Vec<(f64, u64)> = scales
        .iter()
        .flat_map(|&scale| (0..n_seeds).map(move |k| (scale, base_seed + k)))
        .collect();
    let results: Vec<anyhow::Result<VsCaseReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = runs
            .iter()
            .map(|&(scale, seed)| {
                scope.spawn(move || -> anyhow::Result<VsCaseReport> {
                    let mut config = VsConfig::new(scale, seed)?;
                    config.epochs = epochs;
                    if let Some(lr) = lr_flag.or(lr_file) {
                        config.learning_rate = lr;
                    }
                    config.oracle_stride = 500;
                    Ok(torsion1d_vs::run_vs_case(&config)?)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run panicked"))
            .collect()
    });

    let mut comparison = String::from("scale,seed,rel_l2,final_loss\n");
    let mut best: BTreeMap<String, (u64, f64)> = BTreeMap::new();
    for ((scale, seed), result) in runs.iter().zip(results) {
        let report = result?;
        let run_dir = out
            .join(format!("scale_{scale}"))
            .join(format!("seed_{seed}"));
        std::fs::create_dir_all(&run_dir)?;
        let problem = VsTorsionProblem::new(*scale, 100)?;
        torsion1d_vs::write_solution_csv(&problem, &report.params, &run_dir.join("solution.csv"))?;
        write_loss_csv(&report.train, &run_dir.join("loss.csv"))?;
        torsion1d_vs::write_errors_csv(&report.train, &run_dir.join("errors.csv"))?;
        for name in ["solution.csv", "loss.csv", "errors.csv"] {
            manifest.record_output(&format!("scale_{scale}/seed_{seed}/{name}"))?;
        }
        let final_loss = report
            .train
            .final_loss()
            .map(|r| r.loss_total)
            .unwrap_or(f64::NAN);
        comparison.push_str(&format!("{scale},{seed},{},{final_loss}\n", report.rel_l2));
        let entry = best
            .entry(format!("{scale}"))
            .or_insert((*seed, report.rel_l2));
        if report.rel_l2 < entry.1 {
            *entry = (*seed, report.rel_l2);
        }
    }
    std::fs::write(out.join("comparison.csv"), comparison)?;
    manifest.record_output("comparison.csv")?;
    manifest.write()?;
    for (scale, (seed, err)) in best {
        println!("scale {scale}: best rel_l2 = {err:.4e} (seed {seed})");
    }
    Ok(())
}

fn cmd_parametric(action: ParametricAction, file: &ConfigFile) -> anyhow::Result<()> {
    match action {
        ParametricAction::Train {
            seed,
            epochs,
            lr,
            ckpt,
            out,
        } => {
            let seed = setting(seed, file, "seed", 7)?;
            let epochs = setting(epochs, file, "epochs", 1200)?;
            let lr = setting(lr, file, "lr", 3e-3)?;
            let out = resolve_out(out, file, "parametric");
            std::fs::create_dir_all(&out)?;
            let ckpt = ckpt
                .or_else(|| file.get("ckpt").map(PathBuf::from))
                .unwrap_or_else(|| out.join("model.ckpt"));

            let problem = ParametricProblem::new()?;
            let mut config = ParametricTrainConfig::new(seed);
            config.epochs = epochs;
            config.learning_rate = lr;
            config.oracle_stride = (epochs / 10).max(1);
            let run = parametric1d::train_parametric(&problem, &config)?;
            parametric1d::save_parametric_checkpoint(&problem, &run, &config, &ckpt)?;

            let mut snapshot = BTreeMap::new();
            snapshot.insert("problem".into(), "parametric".into());
            snapshot.insert("seed".into(), seed.to_string());
            snapshot.insert("epochs".into(), epochs.to_string());
            snapshot.insert("lr".into(), lr.to_string());
            let mut manifest = ManifestBuilder::new(&out, snapshot, Some(seed));
            write_loss_csv(&run.train, &out.join("loss.csv"))?;
            manifest.record_output("loss.csv")?;
            let checkpoint = load_checkpoint(&ckpt)?;
            parametric1d::write_parameter_curves_csv(&checkpoint, seed, &out.join("curves.csv"))?;
            manifest.record_output("curves.csv")?;
            manifest.write()?;
            println!(
                "trained {epochs} epochs (seed {seed}): aggregate rel_l2 = {:.4e}; checkpoint at {}",
                run.rel_l2,
                ckpt.display()
            );
            Ok(())
        }
        ParametricAction::Eval { ckpt } => {
            let checkpoint = parametric1d::load_parametric_checkpoint(&ckpt)?;
            let problem = ParametricProblem::new()?;
            let err = problem.test_grid_error(&checkpoint.params);
            println!("aggregate rel_l2 = {err:.6e}");
            Ok(())
        }
        ParametricAction::Predict {
            ckpt,
            x,
            amplitude,
            m,
            sigma,
        } => {
            if sigma <= 0.0 {
                return usage("sigma must be positive");
            }
            let checkpoint = parametric1d::load_parametric_checkpoint(&ckpt)?;
            let p = ParamPoint::new(amplitude, m, sigma);
            let (phi, extrapolated) = parametric1d::predict(&checkpoint, &x, &p);
            if extrapolated {
                eprintln!("warning: parameters outside the training box; extrapolating");
            }
            for value in phi {
                println!("{value}");
            }
            Ok(())
        }
        ParametricAction::Serve { ckpt, addr } => {
            let addr = file
                .get("addr")
                .map(str::to_string)
                .filter(|_| addr == "127.0.0.1:8080")
                .unwrap_or(addr);
            let checkpoint = Arc::new(parametric1d::load_parametric_checkpoint(&ckpt)?);
            let server =
                tiny_http::Server::http(&addr).map_err(|e| anyhow!("binding {addr}: {e}"))?;
            println!("serving on http://{addr} (GET /health, POST /predict)");
            service::serve(server, checkpoint, 4);
            Ok(())
        }
    }
}

fn cmd_oracle(action: OracleAction, file: &ConfigFile) -> anyhow::Result<()> {
    match action {
        OracleAction::Poisson {
            shape,
            domain,
            h,
            g,
            out,
        } => {
            let (shape_id, domain) = resolve_domain(shape.as_deref(), domain.as_deref(), file)?;
            let h = setting(h, file, "h", 0.0025)?;
            let g = setting(g, file, "g", 1.0)?;
            let out = resolve_out(out, file, &format!("oracle-poisson-{shape_id}"));
            std::fs::create_dir_all(&out)?;
            let solution = fd_oracle::solve_poisson_2d(&domain, g, h)?;
            fd_oracle::write_oracle_field_csv(&solution, &out.join("oracle_field.csv"))?;
            let mut snapshot = BTreeMap::new();
            snapshot.insert("problem".into(), "oracle-poisson".into());
            snapshot.insert("shape".into(), shape_id.clone());
            snapshot.insert("h".into(), h.to_string());
            snapshot.insert("g".into(), g.to_string());
            let mut manifest = ManifestBuilder::new(&out, snapshot, None);
            manifest.record_output("oracle_field.csv")?;
            manifest.write()?;
            println!(
                "{shape_id}: J_fd = {:.6e} ({} unknowns, {} CG iterations)",
                solution.j,
                solution.grid.n_unknowns(),
                solution.cg_iterations
            );
            Ok(())
        }
        OracleAction::Sweep {
            shape,
            domain,
            h,
            g,
            out,
        } => {
            let (shape_id, domain) = resolve_domain(shape.as_deref(), domain.as_deref(), file)?;
            let hs: Vec<f64> = h
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| anyhow::Error::new(UsageError(format!("bad h list {h:?}: {e}"))))?;
            if hs.is_empty() || hs.windows(2).any(|w| w[1] >= w[0]) {
                return usage(format!("h list must be strictly decreasing, got {h:?}"));
            }
            let g = setting(g, file, "g", 1.0)?;
            let out = resolve_out(out, file, &format!("oracle-sweep-{shape_id}"));
            std::fs::create_dir_all(&out)?;
            let rows = fd_oracle::sensitivity_sweep(&domain, g, &hs)?;
            fd_oracle::write_sensitivity_csv(&rows, &out.join("sensitivity.csv"))?;
            let mut snapshot = BTreeMap::new();
            snapshot.insert("problem".into(), "oracle-sweep".into());
            snapshot.insert("shape".into(), shape_id.clone());
            snapshot.insert("h".into(), h.clone());
            let mut manifest = ManifestBuilder::new(&out, snapshot, None);
            manifest.record_output("sensitivity.csv")?;
            manifest.write()?;
            for row in rows {
                match row.rel_change {
                    Some(change) => println!(
                        "h = {:<8}: J = {:.6e}  rel_change = {:.4e}",
                        row.h, row.j, change
                    ),
                    None => println!("h = {:<8}: J = {:.6e}  (finest)", row.h, row.j),
                }
            }
            Ok(())
        }
        OracleAction::Ode { n, out } => {
            let n = setting(n, file, "n", 4096)?;
            let out = resolve_out(out, file, "oracle-ode");
            std::fs::create_dir_all(&out)?;
            let flux = 32.0 / std::f64::consts::PI;
            let solution =
                fd_oracle::solve_ode_1d(torsion1d_vs::polar_moment, 0.0, flux, (0.0, 1.0), n)?;
            let exact: Vec<f64> = solution
                .x
                .iter()
                .map(|&x| torsion1d_vs::exact_solution(x, 1e-11))
                .collect::<Result<_, _>>()?;
            let err = torsion_pinn::numeric::rel_l2(&solution.u, &exact);
            let mut text = String::from("x,u_fd,u_exact\n");
            for i in 0..solution.x.len() {
                text.push_str(&format!(
                    "{},{},{}\n",
                    solution.x[i], solution.u[i], exact[i]
                ));
            }
            std::fs::write(out.join("ode_solution.csv"), text)?;
            let mut snapshot = BTreeMap::new();
            snapshot.insert("problem".into(), "oracle-ode".into());
            snapshot.insert("n".into(), n.to_string());
            let mut manifest = ManifestBuilder::new(&out, snapshot, None);
            manifest.record_output("ode_solution.csv")?;
            manifest.write()?;
            println!("1D shaft at n = {n}: rel_l2 vs quadrature = {err:.4e}");
            Ok(())
        }
    }
}

fn cmd_ckpt(action: CkptAction) -> anyhow::Result<()> {
    match action {
        CkptAction::Info { path } => {
            let checkpoint = load_checkpoint(&path)?;
            println!(
                "network: {} inputs, hidden {:?}, {} parameters",
                checkpoint.spec.input_dim(),
                checkpoint.spec.hidden(),
                checkpoint.spec.param_count()
            );
            for (key, value) in &checkpoint.metadata {
                println!("meta.{key} = {value}");
            }
            println!("sha256: {}", manifest::sha256_file(&path)?);
            Ok(())
        }
    }
}
