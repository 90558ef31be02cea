use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde_json::{json, Value};

use gmclab_core::bounds::{
    exponents, exponents_l2, l2_s0, laplace_transform, small_ball_tail, verify_bound, BoundBranch, ExponentReport,
};
use gmclab_core::inequalities::{fkg_check, kahane_check, markov_psd_suite, InequalityVerdict};
use gmclab_core::measure::write_measure;
use gmclab_core::stats::{map_replicas, Estimate};
use gmclab_core::{
    build_covariance, d_energy, generate_cantor_dust, generate_julia_boundary, generate_uniform_grid, load_measure,
    save_measure, split_half_plane, verify_change_of_measure, verify_rooted_identity, AtomicMeasure, CovarianceModel,
    GreenKernel, TestStatistic,
};

use crate::config::Resolver;
use crate::report::{emit, envelope, to_value, write_csv};
use crate::{Cli, Command, IneqKind, MeasureKind, StatisticKind};

const DEFAULT_REPLICAS: usize = 10_000;
const DEFAULT_RADIUS: f64 = 0.8;

/// Resolved state shared by every subcommand.
struct Ctx {
    cfg: Resolver,
    global: crate::Global,
}

impl Ctx {
    fn measure(&mut self, flag: Option<PathBuf>) -> Result<Arc<AtomicMeasure>> {
        let path: PathBuf = self.cfg.req("measure", flag)?;
        let m = load_measure(&path).with_context(|| format!("loading measure {}", path.display()))?;
        Ok(Arc::new(m))
    }

    fn model(&mut self, measure: Arc<AtomicMeasure>) -> Result<CovarianceModel> {
        let epsilon = self.cfg.opt("epsilon", self.global.epsilon)?;
        Ok(build_covariance(measure, epsilon, GreenKernel::Disk)?)
    }

    fn replicas(&mut self) -> Result<usize> {
        let n = self.cfg.or("replicas", self.global.replicas, DEFAULT_REPLICAS)?;
        if n == 0 {
            bail!("--replicas must be positive");
        }
        Ok(n)
    }

    /// Explicit seed, or (outside test mode) one drawn from entropy and
    /// recorded in the report.
    fn seed(&mut self) -> Result<u64> {
        let test_mode = self.cfg.switch("test_mode", self.global.test_mode)?;
        match self.cfg.opt("seed", self.global.seed)? {
            Some(s) => Ok(s),
            None if test_mode => bail!("--seed is required in test mode"),
            None => {
                let s = rand::random::<u64>();
                self.cfg.record("seed", &s);
                self.cfg.record("seed_source", &"entropy");
                Ok(s)
            }
        }
    }

    fn csv_out(&mut self) -> Result<Option<PathBuf>> {
        self.cfg.opt("csv_out", self.global.csv_out.clone())
    }
}

/// Runs the command and writes its report. `Ok(false)` is a failed verdict.
pub fn execute(cli: Cli) -> Result<bool> {
    let Cli { global, command } = cli;
    let name = command.name();
    let cfg = Resolver::load(global.config.as_deref(), name)?;
    let threads = global.threads;
    let mut ctx = Ctx { cfg, global };
    let run = move || -> Result<(Value, bool, Ctx)> {
        let (result, pass) = dispatch(&mut ctx, command)?;
        Ok((result, pass, ctx))
    };
    let (result, pass, ctx) = match threads {
        Some(0) => bail!("--threads must be positive"),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(run)?,
        None => run()?,
    };
    let Ctx { mut cfg, global } = ctx;
    if result.is_null() {
        // generate wrote CSV to stdout
        return Ok(pass);
    }
    // generate already used --out for the CSV
    let out = if name == "generate" { None } else { cfg.opt("out", global.out.clone())? };
    let timestamp = !cfg.switch("no_timestamp", global.no_timestamp)?;
    let report = envelope(name, cfg.into_resolved(), result, timestamp);
    emit(&report, out.as_deref())?;
    Ok(pass)
}

fn dispatch(ctx: &mut Ctx, command: Command) -> Result<(Value, bool)> {
    match command {
        Command::Generate { kind, n, level, c, pixels, max_iter, radius } => {
            generate(ctx, kind, n, level, c, pixels, max_iter, radius)
        }
        Command::Energy { measure, d } => {
            let m = ctx.measure(measure)?;
            let d: f64 = ctx.cfg.req("d", d)?;
            if !(d > 0.0) {
                bail!("--d must be positive");
            }
            let energy = d_energy(&m, d);
            let sigma = m.total_mass();
            Ok((
                json!({ "d": d, "energy": energy, "total_mass": sigma, "ratio": energy / sigma, "atoms": m.len() }),
                true,
            ))
        }
        Command::Exponents { gamma, d, beta, delta, l2, energy_ratio, measure } => {
            let gamma: f64 = ctx.cfg.req("gamma", gamma)?;
            let d: f64 = ctx.cfg.req("d", d)?;
            let mut x = resolve_exponents(ctx, gamma, d, beta, delta, l2)?;
            let ratio = match ctx.cfg.opt("energy_ratio", energy_ratio)? {
                Some(r) => Some(r),
                None => match ctx.cfg.opt::<PathBuf>("measure", measure)? {
                    Some(p) => {
                        let m = load_measure(&p).with_context(|| format!("loading measure {}", p.display()))?;
                        Some(d_energy(&m, d) / m.total_mass())
                    }
                    None => None,
                },
            };
            if let Some(r) = ratio {
                if !(r >= 0.0) {
                    bail!("--energy-ratio must be nonnegative");
                }
                if x.l2_eta.is_none() {
                    bail!("t0 from the energy ratio needs the L2 range γ < √d");
                }
                let l2 = exponents_l2(gamma, d)?.with_s0(l2_s0(r));
                x.l2_t0 = l2.t0;
                if x.beta == d && x.delta == 1.0 {
                    x = x.with_s0(l2_s0(r));
                }
            }
            Ok((json!({ "exponents": to_value(&x), "energy_ratio": ratio }), true))
        }
        Command::Laplace { measure, gamma, t, t_min, t_max, t_points, d, beta, delta, l2 } => {
            let m = ctx.measure(measure)?;
            let gamma: f64 = ctx.cfg.req("gamma", gamma)?;
            let ts = t_values(ctx, t, t_min, t_max, t_points)?;
            let x = match ctx.cfg.opt("d", d)? {
                Some(d) => {
                    let mut x = resolve_exponents(ctx, gamma, d, beta, delta, l2)?;
                    if x.beta == d && x.delta == 1.0 {
                        x = x.with_s0(l2_s0(d_energy(&m, d) / m.total_mass()));
                    }
                    Some(x)
                }
                None => None,
            };
            let n = ctx.replicas()?;
            let seed = ctx.seed()?;
            check_gamma(gamma)?;
            let model = ctx.model(m)?;
            let r = laplace_transform(&model, gamma, &ts, n, seed, x.as_ref());
            if let Some(p) = ctx.csv_out()? {
                write_csv(
                    &p,
                    &["t", "estimate", "stderr", "bound"],
                    r.rows().map(|(t, e, s, b)| vec![Some(t), Some(e), Some(s), b]),
                )?;
            }
            Ok((
                json!({ "laplace": to_value(&r), "exponents": x.map(|x| to_value(&x)), "covariance": to_value(&model.diagnostics()) }),
                true,
            ))
        }
        Command::VerifyBound { measure, gamma, d, beta, delta, l2 } => {
            let m = ctx.measure(measure)?;
            let gamma: f64 = ctx.cfg.req("gamma", gamma)?;
            let d: f64 = ctx.cfg.req("d", d)?;
            let x = resolve_exponents(ctx, gamma, d, beta, delta, l2)?;
            let branch = if ctx.cfg.switch("l2", l2)? {
                BoundBranch::L2
            } else {
                BoundBranch::General { beta: x.beta, delta: x.delta }
            };
            let n = ctx.replicas()?;
            let seed = ctx.seed()?;
            let model = ctx.model(m)?;
            let v = verify_bound(&model, gamma, d, branch, n, seed)?;
            if let Some(p) = ctx.csv_out()? {
                write_csv(
                    &p,
                    &["t", "estimate", "stderr", "bound"],
                    v.laplace.rows().map(|(t, e, s, b)| vec![Some(t), Some(e), Some(s), b]),
                )?;
            }
            let pass = v.pass;
            Ok((json!({ "verdict": to_value(&v), "covariance": to_value(&model.diagnostics()) }), pass))
        }
        Command::VerifyIdentity { measure, gamma, gamma_prime, tolerance } => {
            let m = ctx.measure(measure)?;
            let gamma: f64 = ctx.cfg.req("gamma", gamma)?;
            let gamma_prime: f64 = ctx.cfg.req("gamma_prime", gamma_prime)?;
            let tol: f64 = ctx.cfg.or("tolerance", tolerance, 1e-10)?;
            check_gamma(gamma)?;
            check_gamma(gamma_prime)?;
            let n = ctx.replicas()?;
            let seed = ctx.seed()?;
            let model = ctx.model(m)?;
            let rows = map_replicas(0, n, |k| verify_rooted_identity(&model, seed, k, gamma, gamma_prime));
            let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
            let worst = rows.iter().position(|r| r.rel_err == max_rel_err).unwrap_or(0);
            let lhs: Vec<f64> = rows.iter().map(|r| r.lhs).collect();
            let pass = max_rel_err <= tol;
            Ok((
                json!({
                    "max_rel_err": max_rel_err,
                    "worst_replica": worst,
                    "mean_lhs": to_value(&Estimate::from_samples(&lhs)),
                    "tolerance": tol,
                    "pass": pass,
                    "covariance": to_value(&model.diagnostics()),
                }),
                pass,
            ))
        }
        Command::VerifyChangeOfMeasure { measure, gamma_prime, statistic, atom, cap, stat_gamma } => {
            let m = ctx.measure(measure)?;
            let gamma_prime: f64 = ctx.cfg.req("gamma_prime", gamma_prime)?;
            check_gamma(gamma_prime)?;
            let kind = ctx.cfg.or("statistic", statistic, StatisticKind::FieldAt)?;
            let statistic = match kind {
                StatisticKind::One => TestStatistic::One,
                StatisticKind::FieldAt => {
                    let atom: usize = ctx.cfg.or("atom", atom, 0)?;
                    if atom >= m.len() {
                        bail!("--atom {atom} out of range for {} atoms", m.len());
                    }
                    TestStatistic::FieldAt { atom }
                }
                StatisticKind::ClippedMass => {
                    let cap: f64 = ctx.cfg.req("cap", cap)?;
                    let gamma: f64 = ctx.cfg.or("stat_gamma", stat_gamma, gamma_prime)?;
                    check_gamma(gamma)?;
                    TestStatistic::ClippedMass { gamma, cap }
                }
            };
            let n = ctx.replicas()?;
            let seed = ctx.seed()?;
            let model = ctx.model(m)?;
            let r = verify_change_of_measure(&model, gamma_prime, statistic, n, seed);
            let pass = r.consistent;
            Ok((json!({ "report": to_value(&r), "covariance": to_value(&model.diagnostics()) }), pass))
        }
        Command::VerifyIneq { measure, kind, gamma, s, t, r_inner, radii } => {
            let m = ctx.measure(measure)?;
            let kind: IneqKind = ctx.cfg.req("kind", kind)?;
            let verdicts = match kind {
                IneqKind::Markov => {
                    let radii: Vec<f64> = ctx.cfg.req("radii", radii)?;
                    markov_psd_suite(&m, &radii)?
                }
                IneqKind::Fkg => {
                    let gamma: f64 = ctx.cfg.req("gamma", gamma)?;
                    let s: f64 = ctx.cfg.req("s", s)?;
                    let t: Vec<f64> = ctx.cfg.req("t", t)?;
                    let [t] = t[..] else { bail!("fkg takes a single --t") };
                    check_gamma(gamma)?;
                    let n = ctx.replicas()?;
                    let seed = ctx.seed()?;
                    let model = ctx.model(m)?;
                    match fkg_check(&model, gamma, s, t, n, seed) {
                        Err(gmclab_core::Error::Inequality(e)) => return Ok(skipped(e)),
                        r => vec![r?],
                    }
                }
                IneqKind::Kahane => {
                    let gamma: f64 = ctx.cfg.req("gamma", gamma)?;
                    let r_inner: f64 = ctx.cfg.req("r_inner", r_inner)?;
                    let ts: Vec<f64> = ctx.cfg.req("t", t)?;
                    check_gamma(gamma)?;
                    let n = ctx.replicas()?;
                    let seed = ctx.seed()?;
                    let mut out = Vec::with_capacity(ts.len());
                    for t in ts {
                        match kahane_check(Arc::clone(&m), gamma, r_inner, t, n, seed) {
                            Err(gmclab_core::Error::Inequality(e)) => return Ok(skipped(e)),
                            r => out.push(r?),
                        }
                    }
                    out
                }
            };
            let pass = verdicts.iter().all(|v| v.pass);
            Ok((json!({ "verdicts": verdict_values(&verdicts), "pass": pass, "skipped": false }), pass))
        }
        Command::Split { measure } => {
            let m = ctx.measure(measure)?;
            let s = split_half_plane(&m)?;
            let (upper, lower) = s.recount(&m);
            Ok((
                json!({ "split": to_value(&s), "recount": { "upper_mass": upper, "lower_mass": lower }, "total_mass": m.total_mass() }),
                true,
            ))
        }
        Command::Tail { measure, gamma, eps } => {
            let m = ctx.measure(measure)?;
            let gamma: f64 = ctx.cfg.req("gamma", gamma)?;
            let eps: Vec<f64> = ctx.cfg.req("eps", eps)?;
            check_gamma(gamma)?;
            if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0)) {
                bail!("--eps values must be positive");
            }
            let n = ctx.replicas()?;
            let seed = ctx.seed()?;
            let model = ctx.model(m)?;
            let r = small_ball_tail(&model, gamma, &eps, n, seed);
            if let Some(p) = ctx.csv_out()? {
                let rows = (0..r.eps_values.len()).map(|k| {
                    vec![
                        Some(r.eps_values[k]),
                        Some(r.frequencies[k]),
                        Some(r.standard_errors[k]),
                        Some(r.ci_low[k]),
                        Some(r.ci_high[k]),
                    ]
                });
                write_csv(&p, &["eps", "frequency", "stderr", "ci_low", "ci_high"], rows)?;
            }
            Ok((json!({ "tail": to_value(&r), "covariance": to_value(&model.diagnostics()) }), true))
        }
    }
}

fn skipped(e: gmclab_core::inequalities::InequalityError) -> (Value, bool) {
    (json!({ "skipped": true, "reason": e.to_string(), "verdicts": [], "pass": true }), true)
}

fn verdict_values(v: &[InequalityVerdict]) -> Value {
    Value::Array(v.iter().map(to_value).collect())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        bail!("γ must be nonnegative and finite, got {gamma}")
    }
}

fn resolve_exponents(
    ctx: &mut Ctx,
    gamma: f64,
    d: f64,
    beta: Option<f64>,
    delta: Option<f64>,
    l2: bool,
) -> Result<ExponentReport> {
    if ctx.cfg.switch("l2", l2)? {
        return Ok(exponents_l2(gamma, d)?);
    }
    let beta: f64 = ctx.cfg.req("beta", beta)?;
    let delta: f64 = ctx.cfg.req("delta", delta)?;
    Ok(exponents(gamma, d, beta, delta)?)
}

fn t_values(
    ctx: &mut Ctx,
    t: Option<Vec<f64>>,
    t_min: Option<f64>,
    t_max: Option<f64>,
    points: Option<usize>,
) -> Result<Vec<f64>> {
    let ts = match ctx.cfg.opt("t", t)? {
        Some(ts) => ts,
        None => {
            let lo: f64 = ctx.cfg.req("t_min", t_min)?;
            let hi: f64 = ctx.cfg.req("t_max", t_max)?;
            let k: usize = ctx.cfg.req("t_points", points)?;
            if !(lo > 0.0 && hi >= lo && k >= 2) {
                bail!("geometric grid needs 0 < --t-min ≤ --t-max and --t-points ≥ 2");
            }
            let ratio = (hi / lo).powf(1.0 / (k - 1) as f64);
            (0..k).map(|i| if i + 1 == k { hi } else { lo * ratio.powi(i as i32) }).collect()
        }
    };
    if ts.is_empty() || ts.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        bail!("--t values must be finite and nonnegative");
    }
    Ok(ts)
}

#[allow(clippy::too_many_arguments)]
fn generate(
    ctx: &mut Ctx,
    kind: MeasureKind,
    n: Option<usize>,
    level: Option<u32>,
    c: Option<String>,
    pixels: Option<usize>,
    max_iter: Option<u32>,
    radius: Option<f64>,
) -> Result<(Value, bool)> {
    ctx.cfg.record("kind", &kind);
    let radius = ctx.cfg.or("radius", radius, DEFAULT_RADIUS)?;
    let m = match kind {
        MeasureKind::Grid => generate_uniform_grid(ctx.cfg.req("n", n)?, radius)?,
        MeasureKind::Cantor => generate_cantor_dust(ctx.cfg.req("level", level)?, radius)?,
        MeasureKind::Julia => {
            let text: String = ctx.cfg.req("c", c)?;
            let c = Complex64::from_str(text.trim()).map_err(|e| anyhow::anyhow!("--c {text:?}: {e}"))?;
            let pixels = ctx.cfg.or("pixels", pixels, 256)?;
            let max_iter = ctx.cfg.or("max_iter", max_iter, 100)?;
            generate_julia_boundary(c, pixels, max_iter, radius)?
        }
    };
    match ctx.cfg.opt::<PathBuf>("out", ctx.global.out.take())? {
        Some(path) => {
            save_measure(&m, &path)?;
            let summary = json!({
                "path": path,
                "atoms": m.len(),
                "total_mass": m.total_mass(),
                "support_radius": m.support_radius(),
            });
            Ok((summary, true))
        }
        None => {
            write_measure(&m, std::io::stdout().lock())?;
            Ok((Value::Null, true))
        }
    }
}
