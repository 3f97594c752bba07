//! Subcommands. Independent jobs run on the worker pool; results are
//! collected in config order.

use crate::config::{ConfigError, Domain2d, FitSource, Run};
use crate::output::{columns, num, opt, write_csv, write_dat, write_json, Log};
use magstep_core::edge2d::{
    assemble_operator2d, dump_eigenvector, fit_asymptotics, localization_diagnostics, solve_extrapolated_with,
    solve_near_prediction_with, solve_scaled_with, CurvatureProfile, EigenResult2D, EigenSample, PredictedConstants,
    MASS_RADII,
};
use magstep_core::fiber1d::{band_value, FiberParams};
use magstep_core::invariants::{load_or_compute, SpectralInvariants};
use magstep_core::quasimode::{apply_pnew_truncated, build_expansion, hierarchy_residuals, ResidualOptions};
use magstep_core::verify::{Group, VerifyReport, VerifySettings, Verifier, QUASIMODE_SIGMA_POINTS};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// Unusable input data other than the config itself.
    Input(String),
    Core(magstep_core::Error),
    Io(PathBuf, std::io::Error),
    /// Names of the failing checks.
    VerifyFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use magstep_core::Error as E;
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Core(e) if e.is_solver_failure() => 3,
            CliError::Core(E::Io(_) | E::Json(_)) => 3,
            CliError::Core(_) => 2,
            CliError::Io(..) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::VerifyFailed(names) => write!(f, "{} failing check(s): {}", names.len(), names.join(", ")),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<magstep_core::Error> for CliError {
    fn from(e: magstep_core::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub struct Ctx {
    pub run: Run,
    pub pool: ThreadPool,
    pub log: Log,
}

impl Ctx {
    fn out(&self, name: &str) -> PathBuf {
        self.run.output_dir.join(name)
    }

    fn csv(&self, name: &str, schema: &str, cols: &[String], rows: &[Vec<String>]) -> Result<()> {
        let p = self.out(name);
        write_csv(&p, schema, cols, rows).map_err(|e| CliError::Io(p.clone(), e))?;
        self.log.info(format!("wrote {}", p.display()));
        Ok(())
    }

    fn dat(&self, name: &str, labels: (&str, &str), pts: &[(f64, f64)]) -> Result<()> {
        let p = self.out(name);
        write_dat(&p, labels, pts).map_err(|e| CliError::Io(p.clone(), e))
    }

    fn json<T: Serialize>(&self, name: &str, v: &T) -> Result<()> {
        let p = self.out(name);
        write_json(&p, v).map_err(|e| CliError::Io(p.clone(), e))?;
        self.log.info(format!("wrote {}", p.display()));
        Ok(())
    }

    fn invariants(&self, command: &str) -> Result<SpectralInvariants> {
        let a = self.run.contrast(command)?;
        let t = Instant::now();
        let (inv, hit) = load_or_compute(a, &self.run.grid, &self.run.cache_dir)?;
        self.log.info(format!(
            "invariants a = {a}: {} in {:.2} s",
            if hit { "cache hit" } else { "computed and cached" },
            t.elapsed().as_secs_f64()
        ));
        Ok(inv)
    }
}

pub fn band(ctx: &Ctx) -> Result<()> {
    let (a, b) = ctx.run.band_block()?;
    let g = ctx.run.grid;
    let xs: Vec<f64> = (0..b.n_xi)
        .map(|i| b.xi_lo + (b.xi_hi - b.xi_lo) * i as f64 / (b.n_xi - 1) as f64)
        .collect();
    let pts = ctx
        .pool
        .install(|| xs.par_iter().map(|&xi| band_value(&FiberParams::new(a, xi)?, &g)).collect::<Vec<_>>())
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<String>> = pts.iter().map(|p| vec![num(a), num(p.xi), num(p.mu), num(p.mu_prime)]).collect();
    ctx.csv("band.csv", "band", &columns(&["a", "xi", "mu", "mu_prime"]), &rows)?;
    ctx.dat("band.dat", ("xi", "mu"), &pts.iter().map(|p| (p.xi, p.mu)).collect::<Vec<_>>())
}

#[derive(Debug, Serialize)]
struct GridSummary {
    #[serde(rename = "L")]
    half_length: f64,
    n: usize,
}

#[derive(Debug, Serialize)]
struct InvariantsSummary {
    schema_version: u32,
    a: f64,
    grid: GridSummary,
    beta_a: f64,
    zeta_a: f64,
    #[serde(rename = "M2")]
    m2: f64,
    #[serde(rename = "M3")]
    m3: f64,
    #[serde(rename = "I2")]
    i2: f64,
    c2: f64,
    mu_second: f64,
    phi0: f64,
    dphi0: f64,
}

pub fn invariants(ctx: &Ctx) -> Result<()> {
    let inv = ctx.invariants("invariants")?;
    ctx.json(
        "invariants.json",
        &InvariantsSummary {
            schema_version: crate::output::SCHEMA_VERSION,
            a: inv.a,
            grid: GridSummary {
                half_length: inv.grid.half_length,
                n: inv.grid.n_points,
            },
            beta_a: inv.beta_a,
            zeta_a: inv.zeta_a,
            m2: inv.m2,
            m3: inv.m3,
            i2: inv.i2,
            c2: inv.c2,
            mu_second: inv.mu_second,
            phi0: inv.phi0,
            dphi0: inv.dphi0,
        },
    )
}

pub fn quasimode(ctx: &Ctx) -> Result<()> {
    let inv = ctx.invariants("quasimode")?;
    let p = ctx.run.curved_profile("quasimode")?;
    let hs = ctx.run.h_values("quasimode")?;
    let levels: Vec<usize> = (1..=ctx.run.n_modes).collect();
    let exps = ctx
        .pool
        .install(|| {
            levels
                .par_iter()
                .map(|&n| build_expansion(&inv, p.k_max, p.k2, n, QUASIMODE_SIGMA_POINTS))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let hier: Vec<Vec<String>> = exps
        .iter()
        .map(|e| {
            let r = hierarchy_residuals(e, &inv);
            let mut row = vec![e.n.to_string()];
            row.extend(e.mu.iter().map(|m| num(*m)));
            row.extend([r.e0, r.e1, r.e2, r.e3].map(num));
            row
        })
        .collect();
    ctx.csv(
        "quasimode_hierarchy.csv",
        "quasimode_hierarchy",
        &columns(&["n", "mu0", "mu1", "mu2", "mu3", "e0", "e1", "e2", "e3"]),
        &hier,
    )?;

    let jobs: Vec<(usize, f64)> = (0..exps.len()).flat_map(|i| hs.iter().map(move |&h| (i, h))).collect();
    let opts = ResidualOptions {
        weighted: true,
        ..Default::default()
    };
    let res = ctx
        .pool
        .install(|| {
            jobs.par_iter()
                .map(|&(i, h)| apply_pnew_truncated(h, &exps[i], &inv, &opts))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<String>> = jobs
        .iter()
        .zip(&res)
        .map(|(&(i, _), r)| {
            vec![
                exps[i].n.to_string(),
                num(r.h),
                num(r.mu_h),
                num(r.relative_flat),
                opt(r.relative_weighted),
            ]
        })
        .collect();
    ctx.csv(
        "quasimode_residuals.csv",
        "quasimode_residuals",
        &columns(&["n", "h", "mu_h", "relative_flat", "relative_weighted"]),
        &rows,
    )?;
    let ground: Vec<(f64, f64)> = res.iter().take(hs.len()).map(|r| (r.h, r.relative_flat)).collect();
    ctx.dat("quasimode_residuals.dat", ("h", "relative_residual_n1"), &ground)
}

/// One 2D solve; on the scaled domain the eigenvalues are mesh-extrapolated.
struct Solved {
    h: f64,
    lambdas: Vec<f64>,
    coarse: Option<Vec<f64>>,
    fine: Option<Vec<f64>>,
    result: EigenResult2D,
}

fn solve_all(ctx: &Ctx, command: &str, inv: &SpectralInvariants, extrapolate: bool) -> Result<Vec<Solved>> {
    let run = &ctx.run;
    let a = inv.a;
    let profile = run.any_profile(command)?;
    let hs = run.h_values(command)?;
    let k = run.n_modes;
    let one = |h: f64| -> magstep_core::Result<Solved> {
        let t = Instant::now();
        let s = match run.domain {
            Domain2d::Fixed(dom) => {
                let op = assemble_operator2d(h, a, &profile, &dom)?;
                let r = solve_near_prediction_with(&op, k, inv, &run.solve)?;
                Solved {
                    h,
                    lambdas: r.lambdas.clone(),
                    coarse: None,
                    fine: None,
                    result: r,
                }
            }
            Domain2d::Scaled { spec, mesh } if extrapolate => {
                let e = solve_extrapolated_with(h, a, &profile, &spec, mesh, k, inv, &run.solve)?;
                Solved {
                    h,
                    lambdas: e.lambdas,
                    coarse: Some(e.coarse),
                    fine: Some(e.fine),
                    result: e.fine_result,
                }
            }
            Domain2d::Scaled { spec, .. } => {
                let r = solve_scaled_with(h, a, &profile, &spec, k, inv, &run.solve)?;
                Solved {
                    h,
                    lambdas: r.lambdas.clone(),
                    coarse: None,
                    fine: None,
                    result: r,
                }
            }
        };
        ctx.log.info(format!(
            "2D solve h = {h}: {} unknowns in {:.2} s",
            s.result.stats.n_unknowns,
            t.elapsed().as_secs_f64()
        ));
        Ok(s)
    };
    let out = ctx
        .pool
        .install(|| hs.par_iter().map(|&h| one(h)).collect::<Vec<_>>())
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if run.dump_eigenvectors {
        for s in &out {
            for m in 0..s.result.lambdas.len() {
                let p = ctx.out(&format!("eigvec_h{}_mode{}.mstp", num(s.h), m + 1));
                dump_eigenvector(&p, &s.result, m)?;
            }
        }
    }
    Ok(out)
}

fn write_eigs(ctx: &Ctx, solved: &[Solved]) -> Result<()> {
    let mut rows = Vec::new();
    for s in solved {
        for (m, l) in s.lambdas.iter().enumerate() {
            let pick = |v: &Option<Vec<f64>>| v.as_ref().map(|v| v[m]);
            rows.push(vec![
                num(s.h),
                (m + 1).to_string(),
                num(*l),
                num(l / s.h),
                opt(pick(&s.coarse)),
                opt(pick(&s.fine)),
                s.result.stats.n_unknowns.to_string(),
                opt(s.result.stats.residuals.get(m).copied()),
            ]);
        }
    }
    ctx.csv(
        "eigs2d.csv",
        "eigs2d",
        &columns(&["h", "mode", "lambda", "lambda_over_h", "lambda_coarse", "lambda_fine", "n_unknowns", "residual"]),
        &rows,
    )?;
    let ground: Vec<(f64, f64)> = solved.iter().map(|s| (s.h, s.lambdas[0] / s.h)).collect();
    ctx.dat("eigs2d.dat", ("h", "lambda1_over_h"), &ground)
}

pub fn solve2d(ctx: &Ctx) -> Result<()> {
    let inv = ctx.invariants("solve2d")?;
    let solved = solve_all(ctx, "solve2d", &inv, true)?;
    write_eigs(ctx, &solved)
}

#[derive(Debug, Deserialize)]
struct EigRow {
    h: f64,
    mode: usize,
    lambda: f64,
}

/// Samples from an `eigs2d.csv`, in file order of first appearance of h.
pub fn read_samples(path: &Path) -> Result<Vec<EigenSample>> {
    let bad = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(bad)?;
    let mut groups: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    for rec in rdr.deserialize::<EigRow>() {
        let r = rec.map_err(bad)?;
        match groups.iter_mut().find(|g| g.0 == r.h) {
            Some(g) => g.1.push((r.mode, r.lambda)),
            None => groups.push((r.h, vec![(r.mode, r.lambda)])),
        }
    }
    if groups.is_empty() {
        return Err(CliError::Input(format!("{}: no eigenvalue rows", path.display())));
    }
    Ok(groups
        .into_iter()
        .map(|(h, mut v)| {
            v.sort_by_key(|x| x.0);
            EigenSample {
                h,
                lambdas: v.into_iter().map(|x| x.1).collect(),
            }
        })
        .collect())
}

pub fn fit(ctx: &Ctx) -> Result<()> {
    let run = &ctx.run;
    let needs_inv = run.predicted.is_none() || matches!(run.fit_source, FitSource::Solve);
    let inv = if needs_inv { Some(ctx.invariants("fit")?) } else { None };
    let samples = match &run.fit_source {
        FitSource::Inline(s) => s.clone(),
        FitSource::File(p) => read_samples(p)?,
        FitSource::Solve => {
            let solved = solve_all(ctx, "fit", inv.as_ref().expect("computed above"), true)?;
            write_eigs(ctx, &solved)?;
            solved
                .iter()
                .map(|s| EigenSample {
                    h: s.h,
                    lambdas: s.lambdas.clone(),
                })
                .collect()
        }
    };
    let predicted = match run.predicted {
        Some(p) => p,
        None => {
            let profile: CurvatureProfile = run.curved_profile("fit")?;
            PredictedConstants::new(inv.as_ref().expect("computed above"), &profile)
        }
    };
    let report = fit_asymptotics(&samples, &predicted)?;
    ctx.json("fit_report.json", &report)?;
    let pts: Vec<(f64, f64)> = report.rows.iter().map(|r| (r.h, r.third_1)).collect();
    ctx.dat("fit.dat", ("h", "third_coefficient_n1"), &pts)
}

pub fn diagnostics(ctx: &Ctx) -> Result<()> {
    let inv = ctx.invariants("diagnostics")?;
    let solved = solve_all(ctx, "diagnostics", &inv, false)?;
    let mut cols = columns(&["h", "mode", "lambda"]);
    cols.extend(MASS_RADII.iter().map(|c| format!("normal_mass_outside_{c}")));
    cols.extend(MASS_RADII.iter().map(|c| format!("tangential_mass_outside_{c}")));
    cols.extend(columns(&["normal_scale", "tangential_scale", "relative_defect_pi0", "relative_rnew"]));
    let mut rows = Vec::new();
    for s in &solved {
        for m in 0..s.result.lambdas.len() {
            let r = localization_diagnostics(&s.result, m, &inv)?;
            let mut row = vec![num(r.h), (m + 1).to_string(), num(r.lambda)];
            row.extend(r.normal_mass_outside.iter().map(|x| num(x.1)));
            row.extend(r.tangential_mass_outside.iter().map(|x| num(x.1)));
            row.extend([r.normal_scale, r.tangential_scale, r.relative_defect_pi0, r.relative_rnew].map(num));
            rows.push(row);
        }
    }
    ctx.csv("diagnostics.csv", "diagnostics", &cols, &rows)
}

pub fn verify(ctx: &Ctx) -> Result<VerifyReport> {
    let run = &ctx.run;
    let mut settings = VerifySettings {
        grid: run.grid,
        ..Default::default()
    };
    if run.a.is_some() {
        let a = run.contrast("verify")?;
        settings.a_main = a;
        settings.tested_a = vec![a];
    }
    if run.profile.is_some() {
        settings.profile = run.curved_profile("verify")?;
    }
    match run.domain {
        Domain2d::Scaled { spec, .. } => settings.domain = spec,
        Domain2d::Fixed(_) => {
            return Err(CliError::Input("verify runs on the scaled domain; remove `domain`".into()));
        }
    }
    let groups = run.groups.clone().unwrap_or_else(|| Group::ALL.to_vec());
    let verifier = Verifier::new(settings);
    let reports = ctx
        .pool
        .install(|| groups.par_iter().map(|&g| verifier.run_group(g)).collect::<Vec<_>>())
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let report = VerifyReport {
        passed: reports.iter().all(|g| g.passed),
        groups: reports,
    };
    for g in &report.groups {
        println!(
            "== criterion {} ({}) {} in {:.1} s",
            g.criterion,
            g.group,
            if g.passed { "PASS" } else { "FAIL" },
            g.seconds
        );
        for c in &g.checks {
            println!("{}", c.line());
        }
    }
    ctx.json("verify_report.json", &report)?;
    Ok(report)
}
