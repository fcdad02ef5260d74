//! Command-line front end: kernel and Riesz evaluations, atom and covering
//! tools, and the verification campaigns.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use bessel_riesz::harness::{bundled_config, run_campaign_with_samples, write_samples_csv};
use bessel_riesz::heat::{delta_heat_kernel_nd, heat_kernel_nd};
use bessel_riesz::report::format_float;
use bessel_riesz::riesz::{riesz_apply, riesz_kernel};
use bessel_riesz::spaces::{
    atom_dual_decompose, bmo_norm, validate_f_atom, validate_p_rho_atom, vitali_covering,
    AtomFixture, AtomOptions, BallSampler, BoxDomain, Branches, FixtureKind,
};
use bessel_riesz::{
    AtomCandidate, CampaignConfig, CampaignId, Grid, GridFunction, KernelPoint, MultiIndex,
    NuVector, Spacing, SubordinationPlan, Verdict,
};

#[derive(Parser)]
#[command(
    name = "bessel-riesz",
    version,
    about = "Bessel heat kernels, Riesz transforms and local Hardy/BMO checks"
)]
struct Cli {
    /// JSON configuration (campaign config or atom fixture).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Overrides the number of refinement levels.
    #[arg(long, global = true)]
    refine: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpacingArg {
    Uniform,
    Logarithmic,
}

impl From<SpacingArg> for Spacing {
    fn from(s: SpacingArg) -> Self {
        match s {
            SpacingArg::Uniform => Spacing::Uniform,
            SpacingArg::Logarithmic => Spacing::Logarithmic,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Heat kernels and their Gaussian bounds.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Riesz kernels and operators.
    #[command(subcommand)]
    Riesz(RieszCmd),
    /// Atom validation and splitting.
    #[command(subcommand)]
    Atoms(AtomsCmd),
    /// Campanato norm estimates.
    #[command(subcommand)]
    Bmo(BmoCmd),
    /// Critical-radius coverings.
    #[command(subcommand)]
    Cover(CoverCmd),
    /// Verification campaigns.
    #[command(subcommand)]
    Campaign(CampaignCmd),
}

#[derive(Args)]
struct PointArgs {
    /// Orders, one per coordinate.
    #[arg(long, value_delimiter = ',', required = true)]
    nu: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<f64>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    lo: f64,
    #[arg(long)]
    hi: f64,
    /// Nodes per axis.
    #[arg(long, default_value_t = 200)]
    nodes: usize,
    #[arg(long, value_enum, default_value_t = SpacingArg::Logarithmic)]
    spacing: SpacingArg,
}

impl GridArgs {
    fn grid(&self, dim: usize) -> Result<Grid> {
        Ok(Grid::cube(
            self.spacing.into(),
            self.lo,
            self.hi,
            self.nodes,
            dim,
        )?)
    }
}

#[derive(Subcommand)]
enum KernelCmd {
    /// `p_t^ν(x, y)`, or `δ_ν^k p_t^ν(x, y)` with `--delta`.
    Eval {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',')]
        delta: Vec<u32>,
    },
    /// Runs a heat-kernel campaign (thm2_*, cor2_*, prop2_7, prop2_9, prop2_10).
    Verify {
        #[arg(long)]
        id: Option<CampaignId>,
    },
}

#[derive(Subcommand)]
enum RieszCmd {
    /// Kernel of `δ_ν^k Δ_ν^{-|k|/2}` at `x ≠ y`.
    Kernel {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
    },
    /// Applies the transform to a grid function read from CSV (`x1..xn,value`).
    Apply {
        #[arg(long, value_delimiter = ',', required = true)]
        nu: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        input: PathBuf,
    },
    /// Runs a Riesz campaign (thm1_5_size, thm1_5_smooth, prop2_8, thm4_1).
    Verify {
        #[arg(long)]
        id: Option<CampaignId>,
    },
}

#[derive(Subcommand)]
enum AtomsCmd {
    /// Validates an atom fixture (`--config` or `--fixture`).
    Check {
        #[arg(long)]
        fixture: Option<PathBuf>,
        /// Orders used for the admissible range of p.
        #[arg(long, value_delimiter = ',')]
        nu: Vec<f64>,
        #[arg(long)]
        restricted: bool,
    },
    /// Splits a small (p, ρ)-atom fixture along dyadic annuli.
    Decompose {
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BmoCmd {
    /// Estimates the local Campanato norm of a grid function.
    Norm {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value_t = 0)]
        m: u32,
        #[arg(long, default_value_t = 8)]
        centers: usize,
        #[arg(long, default_value_t = 6)]
        radii: usize,
    },
}

#[derive(Subcommand)]
enum CoverCmd {
    /// Covers the cube `[lo, hi]^dim` by critical balls.
    Build {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
}

#[derive(Subcommand)]
enum CampaignCmd {
    /// Runs one campaign from `--config` or a bundled default (`--id`).
    Run {
        #[arg(long)]
        id: Option<CampaignId>,
    },
}

/// Result of one command; `verdict` sets the exit code.
struct Output {
    name: String,
    json: Value,
    csv: Option<Vec<u8>>,
    verdict: Option<Verdict>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|o| emit(&cli, o)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(cli: &Cli, o: Output) -> Result<u8> {
    let text = serde_json::to_string_pretty(&o.json)? + "\n";
    let csv = match (cli.format, &o.csv) {
        (Format::Csv, Some(c)) => Some(c.clone()),
        (Format::Csv, None) => bail!("csv output is not available for this command"),
        (Format::Json, _) => None,
    };
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(format!("{}.json", o.name));
            fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            println!("{}", path.display());
            if let Some(c) = csv {
                let path = dir.join(format!("{}.csv", o.name));
                fs::write(&path, c).with_context(|| format!("writing {}", path.display()))?;
                println!("{}", path.display());
            }
        }
        None => {
            let bytes = csv.unwrap_or_else(|| text.into_bytes());
            match std::io::stdout().lock().write_all(&bytes) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(o.verdict.map_or(0, |v| v.exit_code() as u8))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn campaign_config(
    cli: &Cli,
    id: Option<CampaignId>,
    allowed: &[CampaignId],
) -> Result<CampaignConfig> {
    let mut c = match (&cli.config, id) {
        (Some(path), _) => CampaignConfig::from_json(&read(path)?)?,
        (None, Some(id)) => bundled_config(id),
        (None, None) => bail!("give --config <file> or --id <inequality>"),
    };
    if let Some(id) = id {
        if id != c.id {
            bail!("--id {id} disagrees with the config's id {}", c.id);
        }
    }
    if !allowed.is_empty() && !allowed.contains(&c.id) {
        bail!("{} is not handled by this command", c.id);
    }
    if let Some(seed) = cli.seed {
        c.seed = seed;
    }
    if let Some(levels) = cli.refine {
        c.levels = levels;
    }
    c.validate()?;
    Ok(c)
}

fn campaign(cli: &Cli, c: &CampaignConfig) -> Result<Output> {
    let outcome = run_campaign_with_samples(c)?;
    let mut csv = Vec::new();
    write_samples_csv(&outcome.samples, &mut csv)?;
    Ok(Output {
        name: c.id.to_string(),
        json: serde_json::to_value(&outcome.report)?,
        csv: (cli.format == Format::Csv).then_some(csv),
        verdict: Some(outcome.report.verdict),
    })
}

fn fixture(cli: &Cli, path: &Option<PathBuf>) -> Result<AtomFixture> {
    let path = path
        .as_ref()
        .or(cli.config.as_ref())
        .ok_or_else(|| anyhow!("give --fixture <file> or --config <file>"))?;
    Ok(AtomFixture::from_json(&read(path)?)?)
}

fn read_function(grid: Grid, path: &Path) -> Result<GridFunction> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(GridFunction::read_csv(grid, file)?)
}

fn function_csv(f: &GridFunction) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    f.write_csv(&mut out)?;
    Ok(out)
}

fn run(cli: &Cli) -> Result<Output> {
    use CampaignId::*;
    match &cli.command {
        Command::Kernel(KernelCmd::Eval { point, t, delta }) => {
            let nu = NuVector::new(point.nu.clone())?;
            let q = KernelPoint::new(*t, point.x.clone(), point.y.clone())?;
            let value = if delta.is_empty() {
                heat_kernel_nd(&nu, &q)?
            } else {
                delta_heat_kernel_nd(&nu, delta, &q)?
            };
            let mut row = vec![format_float(*t)];
            row.extend(point.x.iter().chain(&point.y).map(|&v| format_float(v)));
            row.push(format_float(value));
            Ok(Output {
                name: "kernel".into(),
                json: json!({ "nu": point.nu, "t": t, "x": point.x, "y": point.y, "delta": delta, "value": value }),
                csv: Some(format!("{}\n", row.join(",")).into_bytes()),
                verdict: None,
            })
        }
        Command::Kernel(KernelCmd::Verify { id }) => {
            let allowed = [
                Thm2_1, Thm2_4, Thm2_5, Cor2_6a, Cor2_6b, Prop2_7, Prop2_9, Prop2_10, Cor2_11,
            ];
            campaign(cli, &campaign_config(cli, *id, &allowed)?)
        }
        Command::Riesz(RieszCmd::Kernel { point, k }) => {
            let nu = NuVector::new(point.nu.clone())?;
            let r = riesz_kernel(
                &nu,
                &MultiIndex::new(k.clone())?,
                &point.x,
                &point.y,
                &SubordinationPlan::default(),
            )?;
            Ok(Output {
                name: "riesz_kernel".into(),
                json: json!({ "nu": point.nu, "k": k, "x": point.x, "y": point.y, "kernel": r }),
                csv: None,
                verdict: None,
            })
        }
        Command::Riesz(RieszCmd::Apply { nu, k, grid, input }) => {
            let nuv = NuVector::new(nu.clone())?;
            let f = read_function(grid.grid(nu.len())?, input)?;
            let g = riesz_apply(
                &nuv,
                &MultiIndex::new(k.clone())?,
                &f,
                &SubordinationPlan::default(),
            )?;
            Ok(Output {
                name: "riesz_apply".into(),
                json: json!({ "nu": nu, "k": k, "values": g.values, "sup_norm": g.sup_norm() }),
                csv: Some(function_csv(&g)?),
                verdict: None,
            })
        }
        Command::Riesz(RieszCmd::Verify { id }) => {
            let allowed = [Thm1_5Size, Thm1_5Smooth, Prop2_8, Thm4_1];
            campaign(cli, &campaign_config(cli, *id, &allowed)?)
        }
        Command::Atoms(AtomsCmd::Check {
            fixture: path,
            nu,
            restricted,
        }) => {
            let fx = fixture(cli, path)?;
            let f = fx.function()?;
            let json = match fx.kind {
                FixtureKind::FAtom => serde_json::to_value(validate_f_atom(&f)?)?,
                FixtureKind::PRho => {
                    let (Some(ball), Some(p)) = (fx.ball.clone(), fx.p) else {
                        bail!("fixture {} needs a ball and p", fx.name);
                    };
                    let opts = AtomOptions {
                        nu: if nu.is_empty() {
                            None
                        } else {
                            Some(NuVector::new(nu.clone())?)
                        },
                        restricted: *restricted,
                    };
                    serde_json::to_value(validate_p_rho_atom(
                        &AtomCandidate { f, ball, p },
                        &opts,
                    )?)?
                }
            };
            let verdict: Verdict = serde_json::from_value(json["verdict"].clone())?;
            Ok(Output {
                name: fx.name.clone(),
                json: json!({ "name": fx.name, "expected": fx.expected, "result": json }),
                csv: None,
                verdict: Some(verdict),
            })
        }
        Command::Atoms(AtomsCmd::Decompose { fixture: path }) => {
            let fx = fixture(cli, path)?;
            let (Some(ball), Some(p)) = (fx.ball.clone(), fx.p) else {
                bail!("decomposition needs a (p, ρ) fixture with a ball and p");
            };
            let a = AtomCandidate {
                f: fx.function()?,
                ball,
                p,
            };
            let d = atom_dual_decompose(&a)?;
            Ok(Output {
                name: format!("{}_decomposition", fx.name),
                json: json!({
                    "name": fx.name,
                    "summary": d.summary(&a.f),
                    "a2_decay_exponent": d.a2_decay_exponent(),
                }),
                csv: None,
                verdict: None,
            })
        }
        Command::Bmo(BmoCmd::Norm {
            grid,
            dim,
            input,
            s,
            m,
            centers,
            radii,
        }) => {
            let g = grid.grid(*dim)?;
            let f = read_function(g.clone(), input)?;
            let sampler = BallSampler::stratified(&g, *centers, *radii, Branches::Both)?;
            let est = bmo_norm(&f, *s, *m, &sampler)?;
            Ok(Output {
                name: "bmo".into(),
                json: serde_json::to_value(est)?,
                csv: None,
                verdict: None,
            })
        }
        Command::Cover(CoverCmd::Build { grid, dim }) => {
            let g = grid.grid(*dim)?;
            let c = vitali_covering(&BoxDomain::cube(grid.lo, grid.hi, *dim)?, &g)?;
            let mut csv = String::from("center,radius\n");
            for (x, r) in c.centers.iter().zip(&c.radii) {
                let coords: Vec<String> = x.iter().map(f64::to_string).collect();
                csv.push_str(&format!("\"{}\",{r}\n", coords.join(" ")));
            }
            Ok(Output {
                name: "covering".into(),
                json: json!({
                    "balls": c.len(),
                    "overlap": c.overlap,
                    "partition_error": c.partition_error(),
                    "fifth_balls_disjoint": c.fifth_balls_disjoint(),
                    "centers": c.centers,
                    "radii": c.radii,
                }),
                csv: Some(csv.into_bytes()),
                verdict: None,
            })
        }
        Command::Campaign(CampaignCmd::Run { id }) => {
            campaign(cli, &campaign_config(cli, *id, &[])?)
        }
    }
}
