use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use confined_diffusion::coefficients::{bundle, Case, Geometry};
use confined_diffusion::effective_pde::{BoundaryKind, DensityField, Drift, ModelKind};
use confined_diffusion::harness::{bundled_config, bundled_configs, run_experiment, CsvOut, ExperimentConfig, Profile};
use confined_diffusion::particle_sim::{mh_sample, run_ensemble, Channel, HistogramSpec, MhConfig, SimSetup};
use confined_diffusion::ratchet::{flux_curve_solutions, TiltedRatchet};
use confined_diffusion::{Error, Result};

#[derive(Parser)]
#[command(name = "confdiff", version, about = "Excluded-volume diffusion in confined channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Excluded-volume coefficients for one width or a table of widths.
    Coef(CoefArgs),
    /// Transient solve of one effective model.
    Pde(PdeArgs),
    /// Stationary periodic ratchet flux.
    Ratchet(RatchetArgs),
    /// Euler-Maruyama particle ensemble histogram.
    Sde(SimArgs),
    /// Metropolis-Hastings equilibrium sampling in a tilted ratchet.
    Mh(SimArgs),
    /// Run an experiment config (a file path or a bundled config name).
    Run {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the bundled experiment configs.
    ListConfigs,
}

#[derive(Args)]
struct CoefArgs {
    #[arg(long, default_value = "nc2")]
    case: String,
    #[arg(long)]
    h: Option<f64>,
    /// Second side for rectangular cross-sections.
    #[arg(long)]
    m: Option<f64>,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// `h_min:h_max:steps`
    #[arg(long)]
    table: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PdeArgs {
    #[arg(long, default_value = "narrow")]
    model: String,
    #[arg(long, default_value = "nc2")]
    case: String,
    #[arg(long, default_value_t = 3.0)]
    h: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 30)]
    n: usize,
    #[arg(long, default_value = "noflux")]
    bc: String,
    #[arg(long, default_value = "none")]
    potential: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    f0: f64,
    #[arg(long, default_value_t = 0.05)]
    tend: f64,
    /// Half-width of the initial top hat around `x = 0`.
    #[arg(long, default_value_t = 0.1)]
    init_half_width: f64,
    #[arg(long, default_value_t = 201)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatchetArgs {
    /// One value or a comma-separated list.
    #[arg(long, default_value = "0")]
    gphi: String,
    /// One value or `min:max:steps`.
    #[arg(long, default_value = "-6:6:25", allow_hyphen_values = true)]
    f0: String,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the stationary densities as `gphi,f0,x,p`.
    #[arg(long)]
    profiles: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 30)]
    n: usize,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 3.0)]
    h: f64,
    #[arg(long, default_value = "nc2")]
    case: String,
    #[arg(long, default_value = "noflux")]
    bc: String,
    #[arg(long, default_value_t = 1e-5)]
    dt: f64,
    #[arg(long, default_value_t = 0.05)]
    tend: f64,
    #[arg(long, default_value_t = 0.1)]
    init_half_width: f64,
    #[arg(long, default_value_t = 2000)]
    reals: usize,
    /// MH sweeps, each `n` single-particle move attempts.
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    f0: f64,
    #[arg(long, default_value_t = 20_240_101)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long, default_value_t = 8)]
    bins_y: usize,
    /// MH only: sample without the potential.
    #[arg(long)]
    flat: bool,
    /// Output file (sde) or directory (mh).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Coef(a) => coef(a),
        Command::Pde(a) => pde(a),
        Command::Ratchet(a) => ratchet(a),
        Command::Sde(a) => sde(a),
        Command::Mh(a) => mh(a),
        Command::Run { config, out } => {
            let cfg = if Path::new(&config).exists() {
                ExperimentConfig::load(Path::new(&config))?
            } else {
                bundled_config(&config)?
            };
            let report = run_experiment(&cfg, out.as_deref())?;
            print!("{}", report.render());
            Ok(report.passed())
        }
        Command::ListConfigs => {
            for (name, text) in bundled_configs() {
                let cfg = ExperimentConfig::parse(text)?;
                println!("{name}\t{:?}", cfg.experiment);
            }
            Ok(true)
        }
    }
}

fn out_path(path: &Option<PathBuf>, default: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("cannot parse `{spec}` as a value or min:max:steps"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![v.trim().parse().map_err(|_| bad())?]),
        [lo, hi, steps] => {
            let (lo, hi): (f64, f64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
            let steps: usize = steps.parse().map_err(|_| bad())?;
            if steps < 2 {
                return Ok(vec![lo]);
            }
            Ok((0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect())
        }
        _ => Err(bad()),
    }
}

fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::InvalidInput(format!("cannot parse `{v}` as a number"))))
        .collect()
}

fn coef(a: CoefArgs) -> Result<bool> {
    let case = Case::parse(&a.case)?;
    let hs = match (&a.table, a.h) {
        (Some(t), _) => parse_range(t)?,
        (None, Some(h)) => vec![h],
        (None, None) => return Err(Error::InvalidInput("give --h or --table".into())),
    };
    let path = out_path(&a.out, "coef.csv");
    let mut out = CsvOut::create(&path, &["h", "alpha", "g", "phi", "excluded_volume"])?;
    for h in hs {
        let geom = Geometry::new(case, h, a.m.unwrap_or(h))?;
        let b = bundle(&geom, a.n, a.eps)?;
        out.numbers(&[h, b.alpha, b.g, b.phi, b.excluded_volume])?;
    }
    out.finish()?;
    log::info!("wrote {}", path.display());
    Ok(true)
}

fn drift(potential: &str, f0: f64) -> Result<Drift> {
    match potential {
        "none" => Ok(Drift::None),
        "sf" => Ok(Drift::potential(TiltedRatchet { f0 })),
        other => Err(Error::InvalidInput(format!("unknown potential `{other}` (none, sf)"))),
    }
}

fn pde(a: PdeArgs) -> Result<bool> {
    let kind = ModelKind::parse(&a.model)?;
    let case = Case::parse(&a.case)?;
    let geom = Geometry::new(case, a.h, a.h)?;
    let bc = BoundaryKind::parse(&a.bc)?;
    let times = vec![0.0, a.tend];
    let fields = confined_diffusion::harness::transient_model(
        kind,
        &geom,
        a.n,
        a.eps,
        bc,
        drift(&a.potential, a.f0)?,
        a.init_half_width,
        a.grid,
        &times,
    )?;
    let path = out_path(&a.out, "pde.csv");
    write_fields(&path, &fields)?;
    log::info!("wrote {}", path.display());
    Ok(true)
}

fn write_fields(path: &Path, fields: &[DensityField]) -> Result<()> {
    let mut out = CsvOut::create(path, &["t", "x", "p"])?;
    for f in fields {
        let p = Profile::from_field(f)?;
        for (x, v) in p.x.iter().zip(&p.values) {
            out.numbers(&[f.time, *x, *v])?;
        }
    }
    out.finish()
}

fn ratchet(a: RatchetArgs) -> Result<bool> {
    let gs = parse_list(&a.gphi)?;
    let f0s = parse_range(&a.f0)?;
    let path = out_path(&a.out, "ratchet.csv");
    let mut out = CsvOut::create(&path, &["gphi", "f0", "j0"])?;
    let mut profiles = match &a.profiles {
        Some(p) => Some(CsvOut::create(p, &["gphi", "f0", "x", "p"])?),
        None => None,
    };
    for g in gs {
        for s in flux_curve_solutions(g, &f0s, a.grid)? {
            out.numbers(&[g, s.f0, s.j0])?;
            if let Some(p) = profiles.as_mut() {
                for (x, v) in s.density.grid.coords().iter().zip(&s.density.values) {
                    p.numbers(&[g, s.f0, *x, *v])?;
                }
            }
        }
    }
    out.finish()?;
    if let Some(p) = profiles {
        p.finish()?;
    }
    log::info!("wrote {}", path.display());
    Ok(true)
}

fn sde(a: SimArgs) -> Result<bool> {
    let channel = Channel::new(Case::parse(&a.case)?, a.h, a.eps, BoundaryKind::parse(&a.bc)?)?;
    let setup = SimSetup {
        channel,
        n_particles: a.n,
        init_x: (-a.init_half_width, a.init_half_width),
        drift: if a.f0 == 0.0 { Drift::None } else { Drift::potential(TiltedRatchet { f0: a.f0 }) },
    };
    let spec = HistogramSpec { bins: a.bins, realizations: a.reals, output_times: vec![0.0, a.tend] };
    let hist = run_ensemble(&setup, &spec, a.dt, a.seed)?;
    let path = out_path(&a.out, "sde.csv");
    let mut out = CsvOut::create(&path, &["t", "x", "p", "stderr"])?;
    for (k, t) in hist.times.iter().enumerate() {
        for b in 0..hist.bin_centres.len() {
            out.numbers(&[*t, hist.bin_centres[b], hist.density[k][b], hist.stderr[k][b]])?;
        }
    }
    out.finish()?;
    log::info!(
        "wrote {} (unresolved overlap steps: {:.3e})",
        path.display(),
        hist.overlap.unresolved_fraction()
    );
    Ok(true)
}

fn mh(a: SimArgs) -> Result<bool> {
    let cfg = MhConfig {
        bins_x: a.bins,
        bins_y: a.bins_y,
        flat: a.flat,
        ..MhConfig::new(a.n, a.eps, a.h, a.f0, a.steps, a.seed)
    };
    let r = mh_sample(&cfg)?;
    let dir = out_path(&a.out, "mh");
    let mut out = CsvOut::create(&dir.join("mh.csv"), &["x", "y", "count"])?;
    let (xs, ys) = (r.x_centres(), r.y_centres());
    for (j, y) in ys.iter().enumerate() {
        for (i, x) in xs.iter().enumerate() {
            out.row([format!("{x:e}"), format!("{y:e}"), r.counts[j * r.bins_x + i].to_string()])?;
        }
    }
    out.finish()?;
    let mut out = CsvOut::create(&dir.join("mh_marginal.csv"), &["x", "p"])?;
    let (p, _) = r.marginal_x();
    for (x, v) in xs.iter().zip(&p) {
        out.numbers(&[*x, *v])?;
    }
    out.finish()?;
    log::info!("wrote {} (acceptance {:.3}, delta {:.3e})", dir.display(), r.acceptance, r.delta);
    Ok(true)
}
