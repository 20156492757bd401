pub mod config;

use anyhow::{anyhow, bail, Context};
use calderon_core::dbar::{DbarSolver, Reconstruction};
use calderon_core::faddeev::{scattering_grid, Provenance, ScatteringAmplitude};
use calderon_core::field::{write_cgrid, ComplexField};
use calderon_core::forward::{dtn_conductivity, read_bop, write_bop, BoundaryOperator, OperatorKind};
use calderon_core::phantom::{norm_hat_m, PhantomRecipe};
use calderon_core::scatter::{h_from_dtn_at, PsiSource};
use calderon_core::stability::{analyze, cached_dtn, plot_rows, run_family, Family};
use calderon_core::{verify, Error};
use clap::{Parser, Subcommand, ValueEnum};
use config::{read_json, InputError, RunConfig};
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "calderon", version, about = "D-bar reconstruction and stability experiments on the unit disk")]
pub struct Cli {
    /// JSON run configuration (see `--print-schema run-config`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Print the JSON schema of an input format and exit.
    #[arg(long, value_name = "NAME", value_parser = config::SCHEMA_NAMES)]
    pub print_schema: Option<String>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Schrodinger,
    Conductivity,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PsiModeArg {
    Oracle,
    Born,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Target {
    Sigma,
    VExplicit,
    VAsymptotic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a phantom recipe: writes v (and optionally σ) as CGRID1.
    Phantom {
        #[arg(long)]
        recipe: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sigma_out: Option<PathBuf>,
    },
    /// DtN map of a phantom, or of the empty disk with `--laplace`.
    Forward {
        #[arg(long, required_unless_present = "laplace")]
        phantom: Option<PathBuf>,
        #[arg(long)]
        laplace: bool,
        #[arg(long, value_enum, default_value = "schrodinger")]
        kind: Kind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scattering amplitude on the configured λ-grid, from DtN maps or
    /// directly from the phantom.
    Scatter {
        #[arg(long, required_unless_present = "direct")]
        phi: Option<PathBuf>,
        #[arg(long, required_unless_present = "direct")]
        phi0: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "oracle")]
        psi_mode: PsiModeArg,
        /// Solve the Lippmann–Schwinger equation instead of pairing DtN maps.
        #[arg(long)]
        direct: bool,
        /// Phantom recipe; needed by `--direct` and by oracle traces.
        #[arg(long)]
        phantom: Option<PathBuf>,
        /// Only fill nodes with |λ| ≤ RADIUS; the rest are set to 0.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// One ∂̄ solve: μ(z, ·) on the amplitude's λ-grid.
    Dbar {
        #[arg(long)]
        h: PathBuf,
        /// Point z as "x,y".
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// σ or v on the configured z-grid.
    Reconstruct {
        #[arg(value_enum)]
        target: Target,
        #[arg(long)]
        h: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stability records, fits and plot data for a phantom family.
    Stability {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Built-in identity, convention and oracle checks.
    Verify {
        /// Skip the slower oracle checks.
        #[arg(long)]
        quick: bool,
    },
}

/// Exit code for a failure: 2 for bad input, 3 for numerical trouble.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return if e.is_validation() || matches!(e, Error::Io(_) | Error::Json(_) | Error::Format(_)) {
                EXIT_INVALID
            } else {
                EXIT_NUMERICAL
            };
        }
        if cause.downcast_ref::<InputError>().is_some() || cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_INVALID;
        }
    }
    EXIT_NUMERICAL
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| path.display().to_string())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn parse_point(s: &str) -> anyhow::Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => Ok(Complex64::new(
            x.parse().map_err(|_| invalid(format!("bad coordinate {x:?}")))?,
            y.parse().map_err(|_| invalid(format!("bad coordinate {y:?}")))?,
        )),
        _ => Err(invalid(format!("point must be \"x,y\", got {s:?}"))),
    }
}

#[derive(Serialize)]
struct PhantomSummary {
    id: String,
    m: u32,
    support_radius: f64,
    norm_m1: f64,
    norm_hat_m: f64,
}

/// Runs a parsed command line. Output files are written only from
/// deterministic data, so identical inputs give identical bytes.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(name) = &cli.print_schema {
        print!("{}", config::schema(name).expect("schema name validated by clap"));
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(invalid("no subcommand given; see --help"));
    };
    let cfg: RunConfig = match &cli.config {
        Some(p) => read_json(p)?,
        None => RunConfig::default(),
    };
    cfg.validate()?;
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(invalid("--jobs must be positive"));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match command {
        Command::Phantom { recipe, out, sigma_out } => {
            let recipe: PhantomRecipe = read_json(&recipe)?;
            let v = recipe.potential::<f64>()?;
            write_cgrid(&v.field, &out)?;
            if let Some(s) = sigma_out {
                write_cgrid(&recipe.conductivity::<f64>()?.field, &s)?;
            }
            let summary = PhantomSummary {
                id: recipe.id(),
                m: v.m,
                support_radius: v.support_radius,
                norm_m1: v.norm_m1,
                norm_hat_m: norm_hat_m(&v.field, v.m),
            };
            write_json(&sidecar(&out), &summary)?;
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::Forward { phantom, laplace, kind, out } => {
            let kind_op = match kind {
                Kind::Schrodinger => OperatorKind::Schrodinger,
                Kind::Conductivity => OperatorKind::Conductivity,
            };
            let op = if laplace {
                BoundaryOperator::laplace(cfg.forward.n_modes, kind_op)
            } else {
                let recipe: PhantomRecipe = read_json(phantom.as_ref().expect("clap requires it"))?;
                match kind {
                    Kind::Schrodinger => {
                        cached_dtn(&recipe, &recipe.potential()?, &cfg.forward, config::cache_dir().as_deref())?
                    }
                    Kind::Conductivity => dtn_conductivity(&recipe.conductivity::<f64>()?, &cfg.forward)?,
                }
            };
            write_bop(&op, &out)?;
        }
        Command::Scatter { phi, phi0, psi_mode, direct, phantom, radius, out } => {
            let lgrid = cfg.lambda_grid.to_grid::<f64>()?;
            let recipe: Option<PhantomRecipe> = phantom.as_deref().map(read_json).transpose()?;
            let mut h = if direct {
                let recipe = recipe.as_ref().ok_or_else(|| invalid("--direct needs --phantom"))?;
                scattering_grid(&recipe.potential()?, &lgrid, &cfg.faddeev)?
            } else {
                let phi: BoundaryOperator<f64> = read_bop(phi.as_ref().expect("clap requires it"))?;
                let phi0: BoundaryOperator<f64> = read_bop(phi0.as_ref().expect("clap requires it"))?;
                let v = match (psi_mode, &recipe) {
                    (PsiModeArg::Oracle, Some(r)) => Some(r.potential::<f64>()?),
                    (PsiModeArg::Oracle, None) => bail!(invalid("oracle traces need --phantom")),
                    (PsiModeArg::Born, _) => None,
                };
                let source = match &v {
                    Some(v) => PsiSource::Oracle { v, cfg: cfg.faddeev },
                    None => PsiSource::Born,
                };
                let r = radius.unwrap_or(f64::INFINITY);
                let idx: Vec<usize> = (0..lgrid.len()).filter(|&k| lgrid.node_at(k).norm() <= r).collect();
                let lams: Vec<_> = idx.iter().map(|&k| lgrid.node_at(k)).collect();
                let vals = h_from_dtn_at(&phi, &phi0, &lams, &source)?;
                let mut all = vec![Complex64::new(0.0, 0.0); lgrid.len()];
                for (k, x) in idx.into_iter().zip(vals) {
                    all[k] = x;
                }
                let m = recipe.as_ref().map_or(4, |r| r.m());
                let prov = match psi_mode {
                    PsiModeArg::Oracle => Provenance::FromDtnOracle,
                    PsiModeArg::Born => Provenance::FromDtnBorn,
                };
                ScatteringAmplitude::new(ComplexField::new(lgrid, all)?, m, prov)?
            };
            h.phantom_recipe = recipe;
            h.save(&out)?;
        }
        Command::Dbar { h, z, out } => {
            let z = parse_point(&z)?;
            let h = ScatteringAmplitude::<f64>::load(&h)?;
            let slice = DbarSolver::new(&h, cfg.dbar)?.solve(z)?;
            write_cgrid(&slice.values, &out)?;
            let info = serde_json::json!({ "z": [z.re, z.im], "residual": slice.residual, "iterations": slice.iterations });
            write_json(&sidecar(&out), &info)?;
            println!("{info}");
        }
        Command::Reconstruct { target, h, out } => {
            let h = ScatteringAmplitude::<f64>::load(&h)?;
            let zgrid = cfg.zgrid.to_grid()?;
            let field = match target {
                Target::Sigma => Reconstruction::sigma_only(&h, &zgrid, &cfg.dbar)?.sigma()?.field,
                Target::VExplicit => Reconstruction::new(&h, &zgrid, &cfg.dbar)?.v_explicit()?.field,
                Target::VAsymptotic => Reconstruction::new(&h, &zgrid, &cfg.dbar)?.v_asymptotic()?.field,
            };
            write_cgrid(&field, &out)?;
        }
        Command::Stability { family, out } => {
            let family: Family = read_json(&family)?;
            stability(&family, &cfg, &out)?;
        }
        Command::Verify { quick } => {
            let mut checks = verify::identity_suite();
            checks.extend(verify::convention_suite());
            if !quick {
                checks.extend(verify::oracle_suite());
            }
            print!("{}", verify::render(&checks));
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                bail!(Error::numerical(calderon_core::Stage::StabilityLab, format!("{failed} verification check(s) failed")));
            }
            println!("all {} checks passed", checks.len());
        }
    }
    Ok(())
}

const GNUPLOT: &str = r#"set datafile separator ","
set logscale xy
set key top left
set xlabel "delta"
set ylabel "sup error"
set terminal pngcairo size 900,600
set output "stability.png"
plot "plotdata.csv" using 1:3 skip 1 with points pt 7 title "v", \
     "plotdata.csv" using 1:4 skip 1 with points pt 5 title "sigma", \
     "plotdata.csv" using 1:5 skip 1 with lines title "C log(3+1/delta)^-alpha"
"#;

/// `records.jsonl`, `fits.json`, `plotdata.csv` and `plot.gp` in `out`.
pub fn stability(family: &Family, cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    if family.members.is_empty() && family.synthetic.as_ref().map_or(true, |s| s.deltas.is_empty()) {
        return Err(invalid("family has no members and no synthetic perturbations"));
    }
    let records = run_family(family, &cfg.lab())?;
    std::fs::create_dir_all(out)?;
    let mut jsonl = Vec::new();
    for r in &records {
        serde_json::to_writer(&mut jsonl, r)?;
        jsonl.push(b'\n');
    }
    std::fs::write(out.join("records.jsonl"), jsonl)?;
    let report = analyze(&records, &cfg.p_values).map_err(|e| anyhow!(e))?;
    write_json(&out.join("fits.json"), &report)?;
    let mut csv = Vec::new();
    writeln!(csv, "delta,loglog_term,err_v,err_sigma,bound")?;
    for row in plot_rows(&records, &report) {
        writeln!(csv, "{:e},{:e},{:e},{:e},{:e}", row[0], row[1], row[2], row[3], row[4])?;
    }
    std::fs::write(out.join("plotdata.csv"), csv)?;
    std::fs::write(out.join("plot.gp"), GNUPLOT)?;
    for q in report.flagged() {
        log::warn!("fit {q} flagged: r² below 0.8 or no fit");
    }
    Ok(())
}
