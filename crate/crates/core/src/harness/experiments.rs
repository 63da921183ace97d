use std::path::{Path, PathBuf};

use crate::coefficients::{diameter_for_fraction, Geometry};
use crate::effective_pde::{
    solve_transient, steady_state_noflux, BoundaryKind, DensityField, Drift, ModelKind, ModelSpec, SolverOptions,
};
use crate::error::{Error, Result};
use crate::particle_sim::{mh_sample, run_ensemble, Channel, HistogramSpec, MhConfig, MhResult, SimSetup};
use crate::ratchet::{flux_curve, nonlinearity_metric, solve_periodic_stationary, RatchetProblem, TiltedRatchet};

use super::compare::{compare_densities, ComparisonReport, Profile};
use super::config::{ExperimentConfig, ExperimentKind};
use super::output::CsvOut;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub name: String,
    pub artifacts: Vec<PathBuf>,
    pub comparisons: Vec<(String, ComparisonReport)>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn comparison(&self, label: &str) -> Option<&ComparisonReport> {
        self.comparisons.iter().find(|(l, _)| l == label).map(|(_, r)| r)
    }

    fn push_check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    /// Structured plain-text summary, one record per line.
    pub fn render(&self) -> String {
        let mut s = format!("experiment {}\n", self.name);
        for (label, r) in &self.comparisons {
            s += &format!("compare {label} {}\n", r.summary());
        }
        for c in &self.checks {
            s += &format!("check {} {} {}\n", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
        }
        for a in &self.artifacts {
            s += &format!("artifact {}\n", a.display());
        }
        s += &format!("result {}\n", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

/// Runs every stage of an experiment, writing CSV files and `report.txt`
/// under `out_dir` (or the config's `output_dir`, or `out/<name>`).
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    std::fs::create_dir_all(&dir)?;
    let mut report = ExperimentReport { name: cfg.name.clone(), ..Default::default() };
    match cfg.experiment {
        ExperimentKind::Transient => transient(cfg, &dir, &mut report),
        ExperimentKind::WidthSweep => width_sweep(cfg, &dir, &mut report),
        ExperimentKind::RatchetFlux => ratchet_flux(cfg, &dir, &mut report),
        ExperimentKind::RatchetProfiles => ratchet_profiles(cfg, &dir, &mut report),
        ExperimentKind::MhEquilibrium => mh_equilibrium(cfg, &dir, &mut report),
    }?;
    let path = dir.join("report.txt");
    report.artifacts.push(path.clone());
    std::fs::write(&path, report.render())?;
    Ok(report)
}

fn drift_for(cfg: &ExperimentConfig) -> Drift {
    match cfg.potential.as_str() {
        "sf" => Drift::potential(TiltedRatchet { f0: cfg.f0 }),
        _ => Drift::None,
    }
}

/// Solves one model from the centred top hat, returning the fields at `times`.
pub fn transient_model(
    kind: ModelKind,
    geom: &Geometry,
    n: usize,
    eps: f64,
    bc: BoundaryKind,
    drift: Drift,
    half_width: f64,
    grid: usize,
    times: &[f64],
) -> Result<Vec<DensityField>> {
    let model = ModelSpec::for_geometry(kind, geom, n, eps)?.with_bc(bc).with_drift(drift);
    let opts = SolverOptions::default().with_grid(grid).with_times(times.to_vec());
    let init = DensityField::top_hat(opts.grid(&model)?, 0.0, half_width, 1.0)?;
    solve_transient(&model, &init, &opts).map_err(|e| e.in_stage(format!("pde {}", kind.name())))
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

fn transient(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let (h, n, eps) = (cfg.h()?, cfg.n()?, cfg.eps()?);
    let geom = Geometry::new(cfg.case, h, h)?;
    let bc = cfg.boundary()?;
    let kinds = cfg.model_kinds()?;
    let mut finals: Vec<(ModelKind, DensityField)> = Vec::new();
    for &kind in &kinds {
        let fields =
            transient_model(kind, &geom, n, eps, bc, drift_for(cfg), cfg.init_half_width, cfg.grid, &cfg.times)?;
        let path = dir.join(format!("pde_{}.csv", kind.name()));
        write_fields(&path, &fields)?;
        report.artifacts.push(path);
        finals.push((kind, fields.last().expect("times are nonempty").clone()));
    }
    if !cfg.particles {
        return Ok(());
    }

    let channel = Channel::new(cfg.case, h, eps, bc)?;
    let setup = SimSetup {
        channel,
        n_particles: n,
        init_x: (-cfg.init_half_width, cfg.init_half_width),
        drift: drift_for(cfg),
    };
    let spec = HistogramSpec { bins: cfg.bins, realizations: cfg.realizations, output_times: cfg.times.clone() };
    let hist = run_ensemble(&setup, &spec, cfg.dt, cfg.seed).map_err(|e| e.in_stage("particle simulation"))?;
    let path = dir.join("sde.csv");
    let mut out = CsvOut::create(&path, &["t", "x", "p", "stderr"])?;
    for (k, t) in hist.times.iter().enumerate() {
        for b in 0..hist.bin_centres.len() {
            out.numbers(&[*t, hist.bin_centres[b], hist.density[k][b], hist.stderr[k][b]])?;
        }
    }
    out.finish()?;
    report.artifacts.push(path);

    let mc = Profile::from_histogram(&hist, hist.times.len() - 1)?;
    let mut distances = Vec::new();
    for (kind, field) in &finals {
        let r = compare_densities(&Profile::from_field(field)?, &mc)?;
        distances.push((*kind, r.rel_l2));
        report.comparisons.push((format!("{}_vs_mc", kind.name()), r));
    }
    let frac = hist.overlap.unresolved_fraction();
    report.push_check("overlap_resolution", frac < 1e-4, format!("unresolved step fraction {frac:.3e}"));
    if let Some(&(_, narrow)) = distances.iter().find(|(k, _)| *k == ModelKind::NarrowChannel) {
        if let Some(limit) = cfg.max_rel_l2 {
            report.push_check("narrow_vs_mc", narrow < limit, format!("rel_l2 {narrow:.4e} < {limit}"));
        }
        let others: Vec<String> = distances
            .iter()
            .filter(|(k, _)| *k != ModelKind::NarrowChannel)
            .map(|(k, d)| format!("{}={d:.4e}", k.name()))
            .collect();
        let best = distances.iter().all(|(k, d)| *k == ModelKind::NarrowChannel || narrow < *d);
        report.push_check("narrow_is_closest", best, format!("narrow={narrow:.4e} {}", others.join(" ")));
    }
    Ok(())
}

/// Distances from the narrow-channel solution to the single-file and bulk
/// solutions at one width.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub h: f64,
    pub eps: f64,
    pub to_singlefile: f64,
    pub to_bulk: f64,
}

fn width_sweep(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let (phi, n) = (cfg.phi()?, cfg.n()?);
    let bc = cfg.boundary()?;
    let t_end = *cfg.times.last().ok_or_else(|| Error::Config("times must not be empty".into()))?;
    let mut profiles = CsvOut::create(&dir.join("sweep_profiles.csv"), &["h", "model", "x", "p"])?;
    let mut points = Vec::new();
    for &h in &cfg.h_values {
        let geom = Geometry::new(cfg.case, h, h)?;
        let eps = diameter_for_fraction(&geom, n, phi);
        let mut solved = Vec::new();
        for kind in ModelKind::ALL {
            let f = transient_model(kind, &geom, n, eps, bc, drift_for(cfg), cfg.init_half_width, cfg.grid, &[t_end])
                .map_err(|e| e.in_stage(format!("width h = {h}")))?;
            let p = Profile::from_field(&f[0])?;
            for (x, v) in p.x.iter().zip(&p.values) {
                profiles.row([format!("{h}"), kind.name().to_string(), format!("{x:e}"), format!("{v:e}")])?;
            }
            solved.push((kind, p));
        }
        let get = |k: ModelKind| &solved.iter().find(|(kk, _)| *kk == k).expect("all kinds solved").1;
        let narrow = get(ModelKind::NarrowChannel);
        let sf = compare_densities(get(ModelKind::SingleFile), narrow)?;
        let bulk = compare_densities(get(ModelKind::Bulk), narrow)?;
        points.push(SweepPoint { h, eps, to_singlefile: sf.rel_l2, to_bulk: bulk.rel_l2 });
        report.comparisons.push((format!("h{h}_singlefile_vs_narrow"), sf));
        report.comparisons.push((format!("h{h}_bulk_vs_narrow"), bulk));
    }
    profiles.finish()?;
    report.artifacts.push(dir.join("sweep_profiles.csv"));

    let path = dir.join("sweep.csv");
    let mut out = CsvOut::create(&path, &["h", "eps", "dist_singlefile", "dist_bulk"])?;
    for p in &points {
        out.numbers(&[p.h, p.eps, p.to_singlefile, p.to_bulk])?;
    }
    out.finish()?;
    report.artifacts.push(path);

    let sf: Vec<f64> = points.iter().map(|p| p.to_singlefile).collect();
    let bulk: Vec<f64> = points.iter().map(|p| p.to_bulk).collect();
    report.push_check("singlefile_distance_increasing", sf.windows(2).all(|w| w[1] > w[0]), fmt_list(&sf));
    report.push_check("bulk_distance_decreasing", bulk.windows(2).all(|w| w[1] < w[0]), fmt_list(&bulk));
    let first = &points[0];
    if let Some(limit) = cfg.singlefile_max_rel_l2 {
        let d = first.to_singlefile;
        report.push_check("narrowest_matches_singlefile", d < limit, format!("h={} rel_l2 {d:.4e} < {limit}", first.h));
    }
    if let Some(limit) = cfg.bulk_min_rel_l2 {
        let d = first.to_bulk;
        report.push_check("narrowest_differs_from_bulk", d > limit, format!("h={} rel_l2 {d:.4e} > {limit}", first.h));
    }
    Ok(())
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" ")
}

fn ratchet_flux(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let path = dir.join("ratchet_flux.csv");
    let mut out = CsvOut::create(&path, &["gphi", "f0", "j0"])?;
    let mut metrics = Vec::new();
    let mut zero_flux: f64 = 0.0;
    let mut signs_ok = true;
    for &g in &cfg.gphi_values {
        let curve = flux_curve(g, &cfg.f0_values, cfg.grid).map_err(|e| e.in_stage(format!("g_phi = {g}")))?;
        for &(f0, j0) in &curve {
            out.numbers(&[g, f0, j0])?;
            if f0 == 0.0 {
                zero_flux = zero_flux.max(j0.abs());
            } else {
                signs_ok &= j0.signum() == f0.signum();
            }
        }
        metrics.push(nonlinearity_metric(&curve));
    }
    out.finish()?;
    report.artifacts.push(path);
    report.push_check("zero_tilt_zero_flux", zero_flux < 1e-8, format!("max |J0(0)| {zero_flux:.3e}"));
    report.push_check("flux_follows_tilt", signs_ok, "sign(J0) = sign(F0)");
    report.push_check(
        "nonlinearity_decreasing",
        metrics.windows(2).all(|w| w[1] < w[0]),
        format!("R = {}", fmt_list(&metrics)),
    );
    Ok(())
}

/// `max |a - b| / max b`, both on the same periodic grid.
pub fn relative_linf(a: &DensityField, b: &DensityField) -> f64 {
    let diff = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    diff / b.values.iter().copied().fold(0.0, f64::max)
}

fn ratchet_profiles(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let path = dir.join("ratchet_profiles.csv");
    let mut out = CsvOut::create(&path, &["gphi", "f0", "x", "p"])?;
    let (g_ref, g_cmp) = (cfg.gphi_values[0], cfg.gphi_values[1]);
    for &f0 in &cfg.f0_values {
        let solve = |g: f64| {
            solve_periodic_stationary(&RatchetProblem::new(g, f0).with_grid(cfg.grid))
                .map_err(|e| e.in_stage(format!("ratchet g_phi = {g}, F0 = {f0}")))
        };
        let (a, b) = (solve(g_ref)?, solve(g_cmp)?);
        for s in [&a, &b] {
            for (x, p) in s.density.grid.coords().iter().zip(&s.density.values) {
                out.numbers(&[s.g_phi, f0, *x, *p])?;
            }
        }
        let d = relative_linf(&b.density, &a.density);
        if cfg.close_f0 == Some(f0) {
            let limit = cfg.close_max_linf.unwrap_or(0.02);
            report.push_check("profiles_close", d < limit, format!("F0={f0} rel_linf {d:.4e} < {limit}"));
        }
        if cfg.apart_f0 == Some(f0) {
            let limit = cfg.apart_min_linf.unwrap_or(0.10);
            report.push_check("profiles_apart", d > limit, format!("F0={f0} rel_linf {d:.4e} > {limit}"));
        }
    }
    out.finish()?;
    report.artifacts.push(path);
    Ok(())
}

/// Mean and standard error over batches of the wall-minus-centre excess of
/// the transverse occupancy fractions.
pub fn wall_excess(result: &MhResult) -> (f64, f64) {
    let k = result.bins_y;
    let diffs: Vec<f64> = result
        .batch_transverse
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            let frac = |j: usize| row[j] as f64 / total.max(1) as f64;
            let wall = 0.5 * (frac(0) + frac(k - 1));
            let centre = if k % 2 == 0 { 0.5 * (frac(k / 2 - 1) + frac(k / 2)) } else { frac(k / 2) };
            wall - centre
        })
        .collect();
    let b = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / b;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

/// `max - min` of a histogram profile and its standard error from the two
/// extreme bins.
pub fn binned_spread(p: &Profile) -> (f64, f64) {
    let (mut imax, mut imin) = (0, 0);
    for (i, v) in p.values.iter().enumerate() {
        if *v > p.values[imax] {
            imax = i;
        }
        if *v < p.values[imin] {
            imin = i;
        }
    }
    let se = p.stderr.as_ref().map_or(0.0, |s| s[imax].hypot(s[imin]));
    (p.values[imax] - p.values[imin], se)
}

/// Chi-squared of the transverse profile against uniform occupancy.
pub fn transverse_chi2(result: &MhResult) -> f64 {
    let (mean, se) = result.transverse_profile();
    let expected = 1.0 / result.bins_y as f64;
    mean.iter().zip(&se).map(|(m, s)| if *s > 0.0 { ((m - expected) / s).powi(2) } else { 0.0 }).sum()
}

fn mh_equilibrium(cfg: &ExperimentConfig, dir: &Path, report: &mut ExperimentReport) -> Result<()> {
    let (h, n, eps) = (cfg.h()?, cfg.n()?, cfg.eps()?);
    let geom = Geometry::nc2(h)?;
    let run = |e: f64, stream: u64| {
        let mh = MhConfig {
            bins_x: cfg.bins,
            bins_y: cfg.bins_y,
            ..MhConfig::new(n, e, h, cfg.f0, cfg.mh_steps, cfg.seed.wrapping_add(stream))
        };
        mh_sample(&mh).map_err(|err| err.in_stage(format!("mh eps = {e}")))
    };
    let (point, finite) = rayon::join(|| run(0.0, 0), || run(eps, 1));
    let (point, finite) = (point?, finite?);

    for (label, r) in [("point", &point), ("finite", &finite)] {
        let path = dir.join(format!("mh_{label}.csv"));
        let mut out = CsvOut::create(&path, &["x", "y", "count"])?;
        let (xs, ys) = (r.x_centres(), r.y_centres());
        for (j, y) in ys.iter().enumerate() {
            for (i, x) in xs.iter().enumerate() {
                out.row([format!("{x:e}"), format!("{y:e}"), r.counts[j * r.bins_x + i].to_string()])?;
            }
        }
        out.finish()?;
        report.artifacts.push(path);
        let path = dir.join(format!("mh_{label}_marginal.csv"));
        let mut out = CsvOut::create(&path, &["x", "p", "stderr"])?;
        let (p, se) = r.marginal_x();
        for (i, x) in xs.iter().enumerate() {
            out.numbers(&[*x, p[i], se[i]])?;
        }
        out.finish()?;
        report.artifacts.push(path);
    }

    let drift = Drift::potential(TiltedRatchet { f0: cfg.f0 });
    let steady = |kind: ModelKind| -> Result<Profile> {
        let model = ModelSpec::for_geometry(kind, &geom, n, eps)?.with_drift(drift.clone());
        Profile::from_field(&steady_state_noflux(&model, cfg.grid)?.field)
    };
    let narrow = steady(ModelKind::NarrowChannel)?;
    let single = steady(ModelKind::SingleFile)?;
    let path = dir.join("mh_steady.csv");
    let mut out = CsvOut::create(&path, &["x", "narrow", "singlefile"])?;
    for i in 0..narrow.x.len() {
        out.numbers(&[narrow.x[i], narrow.values[i], single.values[i]])?;
    }
    out.finish()?;
    report.artifacts.push(path);

    let k = cfg.bins_y as f64 - 1.0;
    let chi2 = transverse_chi2(&point);
    let bound = k + 5.0 * (2.0 * k).sqrt();
    report.push_check("point_transverse_flat", chi2 < bound, format!("chi2 {chi2:.3} < {bound:.3}"));
    let (excess, se) = wall_excess(&finite);
    report.push_check(
        "finite_walls_elevated",
        excess > 3.0 * se,
        format!("wall - centre {excess:.4e} > 3 x se {se:.2e}"),
    );

    let (p, se) = finite.marginal_x();
    let mc = Profile::new(finite.x_centres(), p, Some(se))?;
    let cmp = compare_densities(&mc, &narrow)?;
    let d = cmp.rel_l2;
    let limit = cfg.max_rel_l2.unwrap_or(0.05);
    report.push_check("finite_matches_narrow", d < limit, format!("rel_l2 {d:.4e} < {limit}"));
    report.comparisons.push(("mh_finite_vs_narrow".into(), cmp));
    // Spreads of cell averages on the histogram bins, so that all three
    // profiles see the same smoothing.
    let single_b = single.bin_average(finite.bins_x)?.spread();
    let narrow_b = narrow.bin_average(finite.bins_x)?.spread();
    let (mc_spread, mc_se) = binned_spread(&mc);
    let flatter = single_b < narrow_b && mc_spread - single_b > 2.0 * mc_se;
    report.push_check(
        "singlefile_flatter",
        flatter,
        format!("spread singlefile {single_b:.4} narrow {narrow_b:.4} mh {mc_spread:.4} +- {mc_se:.4}"),
    );
    Ok(())
}
