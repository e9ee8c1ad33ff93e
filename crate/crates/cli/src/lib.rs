//! Grid experiments and fluctuation reports on top of `qsep`.

pub mod config;
pub mod experiments;
pub mod output;

use config::{Scenario, ScenarioConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, result: Result<(bool, String), config::CliError>) -> Check {
    match result {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

/// Quick end-to-end checks on coarse grids and default instances.
pub fn selftest() -> Vec<Check> {
    let coarse = |s: Scenario| {
        let mut cfg = ScenarioConfig::defaults(s);
        cfg.grid_resolution = 21;
        cfg
    };
    let report = ScenarioConfig::defaults(Scenario::Report);
    let variant = |mut cfg: ScenarioConfig, key: &str, value: &str| {
        cfg.set(key, value).expect("valid selftest setting");
        cfg
    };
    vec![
        check(
            "jarzynski on the default collision instance",
            experiments::run_report(&report).map(|r| ((r.jarzynski - 1.0).abs() < 1e-8, format!("{}", r.jarzynski))),
        ),
        check(
            "unitary channel produces no entropy",
            experiments::run_report(&variant(report.clone(), "channel", "unitary"))
                .map(|r| (r.average.abs() < 1e-9, format!("{:e}", r.average))),
        ),
        check(
            "classical embedding matches the classical average",
            experiments::run_report(&variant(report.clone(), "channel", "classical")).map(|r| {
                let c = r.classical_average.unwrap_or(f64::NAN);
                ((r.average - c).abs() < 1e-9, format!("{} vs {}", r.average, c))
            }),
        ),
        check(
            "fig1 input-term difference is non-negative",
            experiments::run_fig1(&coarse(Scenario::Fig1Diff)).map(|res| {
                let min = res[0].rows.iter().filter_map(|r| r.value).fold(f64::INFINITY, f64::min);
                (min >= -1e-10 && res[0].flagged() == 0, format!("min {min:e}"))
            }),
        ),
        check(
            "fig2 definitions agree on the z axis",
            experiments::run_fig2(&coarse(Scenario::Fig2FixedPoint)).map(|res| {
                let worst = res[0]
                    .rows
                    .iter()
                    .zip(&res[1].rows)
                    .filter(|(a, _)| a.x == 0.0)
                    .filter_map(|(a, b)| Some((a.value? - b.value?).abs()))
                    .fold(0.0, f64::max);
                (worst < 1e-8, format!("max gap {worst:e}"))
            }),
        ),
        check("serial and parallel grids are identical", {
            let mut a = coarse(Scenario::Fig3TauXi);
            a.threads = Some(1);
            let mut b = a.clone();
            b.threads = Some(3);
            experiments::run_fig3(&a).and_then(|ra| {
                let rb = experiments::run_fig3(&b)?;
                Ok((output::csv_string(&ra[0]) == output::csv_string(&rb[0]), String::new()))
            })
        }),
    ]
}
