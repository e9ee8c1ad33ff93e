//! Grid sweeps over the `(x, z)` plane of the Bloch ball and single-instance
//! fluctuation reports.

use nalgebra::{Complex, DMatrix};
use qsep::channel::compose;
use qsep::classical::{classical_average, ClassicalProcess};
use qsep::collision::{collision_channel, CollisionModel};
use qsep::entropy::{
    avg_def1, avg_def2, bs_divergence, crooks, entropy_production, jarzynski, sigma_operator, superadditivity, umegaki,
};
use qsep::state_over_time::{output_weight, q_forward, q_reverse_with};
use qsep::{Channel64, Density64, Error, ReverseRule};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BlochPoint, CliError, ReportChannel, Scenario, ScenarioConfig, StateSpec};

pub const SINGULAR: &str = "singular";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub x: f64,
    pub z: f64,
    pub n: usize,
    /// `None` for flagged rows.
    pub value: Option<f64>,
    pub flags: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResult {
    pub label: String,
    pub rows: Vec<GridRow>,
}

impl GridResult {
    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| !r.flags.is_empty()).count()
    }

    /// Value at a grid point, if present and unflagged.
    pub fn value_at(&self, x: f64, z: f64, n: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n == n && (r.x - x).abs() < 1e-12 && (r.z - z).abs() < 1e-12)
            .and_then(|r| r.value)
    }
}

/// Grid points inside `radius_clip`, ordered by `z` then `x`.
pub fn grid_points(resolution: usize, radius_clip: f64) -> Vec<(f64, f64)> {
    let m = (resolution - 1) as f64;
    let coord = |i: usize| (2.0 * i as f64 - m) / m;
    let mut pts = Vec::new();
    for iz in 0..resolution {
        for ix in 0..resolution {
            let (x, z) = (coord(ix), coord(iz));
            if (x * x + z * z).sqrt() <= radius_clip {
                pts.push((x, z));
            }
        }
    }
    pts
}

fn model(cfg: &ScenarioConfig, n: usize) -> Result<CollisionModel<f64>, CliError> {
    CollisionModel::new(cfg.xi_population, cfg.phi, n).map_err(|e| CliError::Config(e.to_string()))
}

fn resolve(spec: StateSpec, channel: &Channel64, rho: &Density64, xi: &Density64) -> qsep::Result<Density64> {
    match spec {
        StateSpec::Bloch(b) => Density64::from_bloch(b.x, b.y, b.z),
        StateSpec::Xi => Ok(xi.clone()),
        StateSpec::ChannelOutput => channel.apply(rho),
    }
}

/// Per-point inputs shared by every figure.
pub struct PointContext<'a> {
    pub channel: &'a Channel64,
    pub rho: Density64,
    pub gamma: Density64,
    pub tau: Density64,
    pub rule: ReverseRule,
}

fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match threads {
        None => Ok(f()),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Config(format!("thread pool: {e}"))),
    }
}

/// Evaluates `eval` at every grid point for every `n`; failures and
/// non-finite values become flagged rows.
pub fn sweep<const K: usize>(
    cfg: &ScenarioConfig,
    labels: [&str; K],
    eval: impl Fn(&PointContext) -> qsep::Result<[f64; K]> + Sync,
) -> Result<Vec<GridResult>, CliError> {
    cfg.validate()?;
    let points = grid_points(cfg.grid_resolution, cfg.radius_clip);
    let mut results: Vec<GridResult> =
        labels.iter().map(|l| GridResult { label: l.to_string(), rows: Vec::new() }).collect();
    for &n in &cfg.n_values {
        let m = model(cfg, n)?;
        let channel = collision_channel(&m).map_err(|e| CliError::Config(e.to_string()))?;
        let xi = m.xi();
        let values: Vec<Option<[f64; K]>> = with_pool(cfg.threads, || {
            points
                .par_iter()
                .map(|&(x, z)| {
                    let rho = Density64::from_bloch(x, 0.0, z).ok()?;
                    let ctx = PointContext {
                        channel: &channel,
                        gamma: resolve(cfg.gamma, &channel, &rho, &xi).ok()?,
                        tau: resolve(cfg.tau, &channel, &rho, &xi).ok()?,
                        rho,
                        rule: cfg.reverse_rule,
                    };
                    eval(&ctx).ok()
                })
                .collect()
        })?;
        for (&(x, z), v) in points.iter().zip(values) {
            for (k, res) in results.iter_mut().enumerate() {
                let value = v.map(|a| a[k]).filter(|x| x.is_finite());
                let flags = if value.is_some() { String::new() } else { SINGULAR.to_string() };
                res.rows.push(GridRow { x, z, n, value, flags });
            }
        }
    }
    Ok(results)
}

/// `D_BS(ρ‖γ) − D(ρ‖γ)`.
pub fn input_term_difference(ctx: &PointContext) -> qsep::Result<f64> {
    Ok(bs_divergence(&ctx.rho, &ctx.gamma)? - umegaki(&ctx.rho, &ctx.gamma)?)
}

/// `Tr[E(ρ) ln A] − D(E(ρ)‖E(γ)) + D(E(ρ)‖τ)`, so that the total difference
/// is the input-term difference minus this one.
pub fn output_term_difference(ctx: &PointContext) -> qsep::Result<f64> {
    let e_rho = ctx.channel.apply(&ctx.rho)?;
    let e_gamma = ctx.channel.apply(&ctx.gamma)?;
    let a = output_weight(ctx.channel, &ctx.gamma, &ctx.tau, ctx.rule)?;
    if !e_rho.as_hermitian().support_within(&a) {
        return Err(Error::SupportMismatch("output weight is singular on the support of E(ρ)".into()));
    }
    let cross = e_rho.as_hermitian().trace_product(&a.log()?);
    Ok(cross - umegaki(&e_rho, &e_gamma)? + umegaki(&e_rho, &ctx.tau)?)
}

pub fn def2(ctx: &PointContext) -> qsep::Result<f64> {
    entropy_production(ctx.channel, &ctx.rho, &ctx.gamma, &ctx.tau, ctx.rule)
}

pub fn def1(ctx: &PointContext) -> qsep::Result<f64> {
    avg_def1(ctx.channel, &ctx.rho, &ctx.gamma, &ctx.tau)
}

/// Panels `input`, `output` and `total` (second definition minus first).
pub fn run_fig1(cfg: &ScenarioConfig) -> Result<Vec<GridResult>, CliError> {
    sweep(cfg, ["input", "output", "total"], |ctx| {
        Ok([input_term_difference(ctx)?, output_term_difference(ctx)?, def2(ctx)? - def1(ctx)?])
    })
}

/// Panels `def2` and `def1`.
pub fn run_fig2(cfg: &ScenarioConfig) -> Result<Vec<GridResult>, CliError> {
    sweep(cfg, ["def2", "def1"], |ctx| Ok([def2(ctx)?, def1(ctx)?]))
}

pub fn run_fig3(cfg: &ScenarioConfig) -> Result<Vec<GridResult>, CliError> {
    sweep(cfg, ["def2"], |ctx| Ok([def2(ctx)?]))
}

pub fn run_figure(cfg: &ScenarioConfig) -> Result<Vec<GridResult>, CliError> {
    match cfg.scenario {
        Scenario::Fig1Diff => run_fig1(cfg),
        Scenario::Fig2FixedPoint => run_fig2(cfg),
        Scenario::Fig3TauXi => run_fig3(cfg),
        Scenario::Report => Err(CliError::Config("report is not a grid scenario".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrooksEntry {
    pub sigma: f64,
    pub p_f: f64,
    pub p_r: f64,
    pub ratio_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuperadditivityEntry {
    pub avg1: f64,
    pub avg2: f64,
    pub avg12: f64,
    pub gap: f64,
    pub gap_closed_form: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub channel: String,
    pub n: Vec<usize>,
    pub reverse_rule: String,
    pub rho: BlochPoint,
    pub average: f64,
    pub jarzynski: f64,
    pub crooks: Vec<CrooksEntry>,
    pub superadditivity: Option<SuperadditivityEntry>,
    /// Classical average of the embedded process, for `classical` channels.
    pub classical_average: Option<f64>,
}

fn column_stochastic_power(a: f64, b: f64, n: usize) -> DMatrix<f64> {
    let step = DMatrix::from_row_slice(2, 2, &[a, 1.0 - b, 1.0 - a, b]);
    (1..n).fold(step.clone(), |acc, _| &step * acc)
}

/// The configured channel family applied `n` times.
pub fn report_channel(cfg: &ScenarioConfig, n: usize) -> Result<Channel64, CliError> {
    let numerical = |e: Error| CliError::Numerical { message: e.to_string(), flagged: 0 };
    match cfg.channel {
        ReportChannel::Collision => collision_channel(&model(cfg, n)?).map_err(numerical),
        ReportChannel::Unitary { angle } => {
            let (s, c) = (0.5 * angle * n as f64).sin_cos();
            let u = DMatrix::from_row_slice(
                2,
                2,
                &[Complex::new(c, 0.0), Complex::new(-s, 0.0), Complex::new(s, 0.0), Complex::new(c, 0.0)],
            );
            Channel64::unitary(&u).map_err(numerical)
        }
        ReportChannel::Classical { a, b } => {
            Channel64::measure_and_prepare(&column_stochastic_power(a, b, n)).map_err(numerical)
        }
    }
}

fn dephase(s: &Density64) -> qsep::Result<Density64> {
    let h = s.as_hermitian();
    Density64::diagonal(&[h.entry(0, 0).re, h.entry(1, 1).re])
}

fn diag(s: &Density64) -> Vec<f64> {
    (0..s.dim()).map(|i| s.as_hermitian().entry(i, i).re).collect()
}

/// Jarzynski value, Crooks table and (for two `n` values) the
/// superadditivity gap of the configured instance.
pub fn run_report(cfg: &ScenarioConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let at = |e: Error| CliError::Numerical { message: format!("at rho={}: {e}", cfg.rho), flagged: 0 };
    let classical = matches!(cfg.channel, ReportChannel::Classical { .. });
    let xi = model(cfg, 1)?.xi();
    let prepare = |s: Density64| if classical { dephase(&s) } else { Ok(s) };
    let states = |ch: &Channel64| -> qsep::Result<(Density64, Density64, Density64)> {
        let rho = prepare(Density64::from_bloch(cfg.rho.x, cfg.rho.y, cfg.rho.z)?)?;
        let gamma = prepare(resolve(cfg.gamma, ch, &rho, &xi)?)?;
        let tau = prepare(resolve(cfg.tau, ch, &rho, &xi)?)?;
        Ok((rho, gamma, tau))
    };

    let n1 = cfg.n_values[0];
    let channel = report_channel(cfg, n1)?;
    let (rho, gamma, tau) = states(&channel).map_err(at)?;
    let qf = q_forward(&channel, &rho).map_err(at)?;
    let qr = q_reverse_with(&channel, &gamma, &tau, cfg.reverse_rule).map_err(at)?;
    let average = avg_def2(&qf, &qr).map_err(at)?;
    let (jarzynski_value, crooks_rows) = match crooks(&qf, &qr) {
        Ok(rep) => (
            rep.jarzynski_value,
            rep.crooks_rows
                .iter()
                .map(|r| CrooksEntry { sigma: r.sigma, p_f: r.p_f, p_r: r.p_r, ratio_error: r.ratio_error })
                .collect(),
        ),
        Err(Error::NotFullRank(_)) => {
            let sigma = sigma_operator(&qf, &qr).map_err(at)?;
            let rows = (0..sigma.eigenvalues.len())
                .map(|k| {
                    let s = sigma.eigenvalues[k];
                    let p_f = qf.matrix.expectation(&sigma.forward_eigvecs.column(k).into_owned());
                    let p_r = qr.matrix.expectation(&sigma.reverse_eigvecs.column(k).into_owned());
                    CrooksEntry { sigma: s, p_f, p_r, ratio_error: (p_r - (-s).exp() * p_f).abs() }
                })
                .collect();
            (jarzynski(&qf, &sigma).map_err(at)?, rows)
        }
        Err(e) => return Err(at(e)),
    };

    let superadditivity = match cfg.n_values.get(1) {
        None => None,
        Some(&n2) => {
            let e1 = channel.clone();
            let e2 = report_channel(cfg, n2)?;
            let total = compose(&e2, &e1).map_err(at)?;
            let (_, _, tau1) = states(&e1).map_err(at)?;
            let (_, _, tau2) = states(&total).map_err(at)?;
            let rep = superadditivity(&e1, &e2, &rho, &gamma, &tau1, &tau2).map_err(at)?;
            Some(SuperadditivityEntry {
                avg1: rep.avg_step1,
                avg2: rep.avg_step2,
                avg12: rep.avg_total,
                gap: rep.gap,
                gap_closed_form: rep.gap_closed_form,
            })
        }
    };

    let classical_average = match cfg.channel {
        ReportChannel::Classical { a, b } => {
            let phi = column_stochastic_power(a, b, n1);
            let proc = ClassicalProcess::new(diag(&rho), phi, diag(&gamma), diag(&tau)).map_err(at)?;
            Some(classical_average(&proc).map_err(at)?.avg)
        }
        _ => None,
    };

    Ok(Report {
        channel: match cfg.channel {
            ReportChannel::Collision => "collision".into(),
            ReportChannel::Unitary { .. } => "unitary".into(),
            ReportChannel::Classical { .. } => "classical".into(),
        },
        n: cfg.n_values.clone(),
        reverse_rule: match cfg.reverse_rule {
            ReverseRule::Petz => "petz".into(),
            ReverseRule::Variant => "variant".into(),
        },
        rho: cfg.rho,
        average,
        jarzynski: jarzynski_value,
        crooks: crooks_rows,
        superadditivity,
        classical_average,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::defaults(scenario);
        cfg.grid_resolution = 11;
        cfg
    }

    #[test]
    fn grid_order_and_clip() {
        let pts = grid_points(5, 0.999);
        assert_eq!(pts[0], (-0.5, -0.5));
        assert!(pts.windows(2).all(|w| (w[0].1, w[0].0) < (w[1].1, w[1].0)));
        assert_eq!(pts.len(), 9);
        assert_eq!(grid_points(5, 1.0)[0], (0.0, -1.0));
    }

    #[test]
    fn fig1_input_term_nonnegative_and_total_consistent() {
        let res = run_fig1(&small(Scenario::Fig1Diff)).unwrap();
        assert_eq!(res.len(), 3);
        for ((i, o), t) in res[0].rows.iter().zip(&res[1].rows).zip(&res[2].rows) {
            let (i, o, t) = (i.value.unwrap(), o.value.unwrap(), t.value.unwrap());
            assert!(i >= -1e-10);
            assert!((i - o - t).abs() < 1e-9);
        }
    }

    #[test]
    fn serial_and_parallel_agree() {
        let mut cfg = small(Scenario::Fig2FixedPoint);
        cfg.threads = Some(1);
        let a = run_fig2(&cfg).unwrap();
        cfg.threads = Some(4);
        assert_eq!(a, run_fig2(&cfg).unwrap());
    }

    #[test]
    fn singular_rows_are_flagged_not_dropped() {
        let mut cfg = small(Scenario::Fig3TauXi);
        cfg.xi_population = 1.0;
        cfg.n_values = vec![1];
        let res = run_fig3(&cfg).unwrap();
        assert_eq!(res[0].rows.len(), grid_points(11, 0.999).len());
        assert_eq!(res[0].flagged(), res[0].rows.len());
    }

    #[test]
    fn report_kinds() {
        let cfg = ScenarioConfig::defaults(Scenario::Report);
        let r = run_report(&cfg).unwrap();
        assert!((r.jarzynski - 1.0).abs() < 1e-8);
        let mut u = cfg.clone();
        u.set("channel", "unitary").unwrap();
        let r = run_report(&u).unwrap();
        assert!(r.average.abs() < 1e-9 && (r.jarzynski - 1.0).abs() < 1e-9);
        let mut c = cfg.clone();
        c.set("channel", "classical").unwrap();
        let r = run_report(&c).unwrap();
        assert!((r.average - r.classical_average.unwrap()).abs() < 1e-9);
        let mut s = cfg;
        s.set("n", "1,3").unwrap();
        let gap = run_report(&s).unwrap().superadditivity.unwrap();
        assert!(gap.gap >= -1e-9 && (gap.gap - gap.gap_closed_form).abs() < 1e-9);
    }
}
