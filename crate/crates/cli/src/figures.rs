//! Canned configurations per figure and the key-number assertions checked after a reproduce run.

use std::f64::consts::SQRT_2;

use anyhow::{anyhow, Result};
use cca_core::hilbert::{named_state, Bell, StateSpec};
use cca_core::model::build_hamiltonian;
use cca_core::spectral::{analytic_drive_frequency, eigendecompose, quality_cell, rabi_gap, rabi_pair};

use crate::config::Resolved;
use crate::output::{Kind, Table, Value};
use crate::tasks::TaskOutput;

pub const FIGURES: &[&str] = &["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"];

pub fn configs(figure: &str) -> Option<Vec<(&'static str, &'static str)>> {
    macro_rules! cfg {
        ($($name:literal),*) => { vec![$(($name, include_str!(concat!("../configs/", $name, ".toml")))),*] };
    }
    Some(match figure {
        "fig2" => cfg!("fig2_eigenspectrum"),
        "fig3" => cfg!("fig3_eigenspectrum", "fig3_qmap"),
        "fig4" => cfg!("fig4_pulse"),
        "fig5" => cfg!("fig5_kappa", "fig5_gamma", "fig5_gamma_phi"),
        "fig6" => cfg!("fig6_sweep", "fig6_resonances"),
        "fig7" => cfg!("fig7_qmap_w3", "fig7_qmap_w4", "fig7_pulse_w3", "fig7_pulse_w4", "fig7_pulse_w3_phased"),
        "fig8" => cfg!("fig8_eigenspectrum"),
        "fig9" => cfg!("fig9_rates"),
        "fig10" => cfg!("fig10_sw_sweep"),
        _ => return None,
    })
}

/// Computed key number with its accepted interval [lower, upper].
#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub computed: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Assertion {
    fn new(name: &str, computed: f64, expected: f64, tolerance: f64) -> Self {
        Assertion { name: name.to_string(), computed, lower: expected - tolerance, upper: expected + tolerance }
    }

    fn at_least(name: &str, computed: f64, bound: f64) -> Self {
        Assertion { name: name.to_string(), computed, lower: bound, upper: f64::INFINITY }
    }

    pub fn pass(&self) -> bool {
        self.computed >= self.lower && self.computed <= self.upper
    }
}

pub fn table(asserts: &[Assertion]) -> Table {
    let mut t = Table::new(
        "assertions",
        &[("name", Kind::Text), ("computed", Kind::Num), ("lower", Kind::Num), ("upper", Kind::Num), ("pass", Kind::Text)],
    );
    for a in asserts {
        t.push(vec![a.name.clone().into(), a.computed.into(), a.lower.into(), a.upper.into(), Value::from(if a.pass() { "yes" } else { "no" })]);
    }
    t
}

type Run = (Resolved, TaskOutput);

fn summary(run: &Run, key: &str) -> Result<f64> {
    run.1.summary.get(key).copied().ok_or_else(|| anyhow!("{} produced no `{key}`", run.0.config.task.name()))
}

fn column(t: &Table, name: &str) -> Result<Vec<Value>> {
    let k = t.columns.iter().position(|c| c == name).ok_or_else(|| anyhow!("no column {name} in {}", t.name))?;
    Ok(t.rows.iter().map(|r| r[k].clone()).collect())
}

fn num(v: &Value) -> f64 {
    match v {
        Value::Num(x) => *x,
        Value::Int(i) => *i as f64,
        Value::Text(_) => f64::NAN,
    }
}

pub fn check(figure: &str, runs: &[Run]) -> Result<Vec<Assertion>> {
    let mut a = Vec::new();
    match figure {
        "fig2" => {
            let p = &runs[0].0.params;
            let space = &runs[0].0.space;
            let j = p.uniform_hopping();
            for (delta, bell, name) in [(j, Bell::Singlet, "splitting at Delta = +J"), (-j, Bell::T0, "splitting at Delta = -J")] {
                let mut q = p.clone();
                q.omega_c = q.omega_q - delta;
                let es = eigendecompose(&build_hamiltonian(space, &q, 1.0)?)?;
                let (x, y) = rabi_pair(
                    &es,
                    &named_state(space, &StateSpec::QubitBell { state: bell })?,
                    &named_state(space, &StateSpec::PhotonBell { state: bell })?,
                );
                a.push(Assertion::new(name, (es.eigenvalues[x] - es.eigenvalues[y]).abs(), 2.0 * p.g, 1e-6));
            }
        }
        "fig3" => {
            let r = &runs[1].0;
            let vac = named_state(&r.space, &StateSpec::Vacuum)?;
            let t0 = named_state(&r.space, &StateSpec::QubitBell { state: Bell::T0 })?;
            let s3 = &runs[0].0.space;
            let es = eigendecompose(&build_hamiltonian(s3, &runs[0].0.params, 1.0)?)?;
            let gap = rabi_gap(&es, &named_state(s3, &StateSpec::Vacuum)?, &named_state(s3, &StateSpec::QubitBell { state: Bell::T0 })?)?;
            a.push(Assertion::new("Rabi gap at Delta = g, omega_d = 7.43g", gap, 0.13, 0.01));
            a.push(Assertion::new("analytic omega_d^+ at Delta = g", analytic_drive_frequency(1.0, 2, &r.params).0, 6.0 + SQRT_2, 1e-12));
            let deltas: Vec<f64> = r.config.task_params.delta_grid.as_ref().unwrap().values();
            let mut worst = f64::INFINITY;
            for &delta in deltas.iter().filter(|d| (*d + r.params.uniform_hopping()).abs() >= 3.0) {
                let (plus, minus) = analytic_drive_frequency(delta, 2, &r.params);
                let wd = if delta + r.params.uniform_hopping() > 0.0 { plus } else { minus };
                worst = worst.min(quality_cell(&r.space, &r.params, delta, wd, &vac, &t0)?.0);
            }
            a.push(Assertion::at_least("min Q_max on the analytic curve (dispersive rows)", worst, 0.95));
        }
        "fig4" => {
            a.push(Assertion::new("Rabi frequency", summary(&runs[0], "rabi_frequency")?, 0.13, 0.01));
            a.push(Assertion::new("peak |T0,00> fidelity", summary(&runs[0], "peak_target_fidelity")?, 0.84, 0.03));
        }
        "fig5" => {
            let curves: Vec<Vec<f64>> =
                runs.iter().map(|r| column(&r.1.tables[0], "max_fidelity").map(|c| c.iter().map(num).collect())).collect::<Result<_>>()?;
            let rates: Vec<f64> = column(&runs[0].1.tables[0], "rate")?.iter().map(num).collect();
            for (k, rate) in rates.iter().enumerate() {
                for (c, name) in [(1, "gamma"), (2, "gamma_phi")] {
                    // positive margin: cavity decay is the mildest channel
                    a.push(Assertion::at_least(&format!("F(kappa) - F({name}) at rate {rate:e}"), curves[0][k] - curves[c][k], 0.0));
                }
            }
        }
        "fig6" => {
            let kappa = runs[0].0.params.kappa;
            let wc = runs[0].0.params.omega_c;
            a.push(Assertion::new("purity minimum", summary(&runs[0], "purity_min")?, 0.25, 0.01));
            a.push(Assertion::new("omega_d - omega_c at the purity minimum", summary(&runs[0], "purity_min_omega_d")? - wc, 10.0, 0.5));
            let res = &runs[1];
            a.push(Assertion::new("singlet peak fidelity", summary(res, "singlet_peak")?, 0.82, 0.03));
            a.push(Assertion::new(
                "singlet peak position minus effective-model resonance",
                summary(res, "singlet_peak_omega_d")? - summary(res, "singlet_prediction")?,
                0.0,
                2.0 * kappa,
            ));
            a.push(Assertion::new("singlet peak shift from n_max to n_max + 1", summary(res, "truncation_peak_shift")?, 0.0, 0.5 * kappa));
            a.push(Assertion::new("singlet peak value change from n_max to n_max + 1", summary(res, "truncation_peak_value_shift")?, 0.0, 0.01));
            let peaks = &res.1.tables[1];
            let mut w: Vec<f64> = column(peaks, "value")?
                .iter()
                .zip(column(peaks, "omega_peak")?)
                .filter(|(v, _)| num(v) > 0.3)
                .map(|(_, w)| num(&w))
                .collect();
            w.sort_by(f64::total_cmp);
            w.dedup_by(|x, y| (*x - *y).abs() < 2e-3);
            a.push(Assertion::at_least("distinct full-model resonances above 0.3", w.len() as f64, 4.0));
        }
        "fig7" => {
            let (w3, w4, ph) = (&runs[2], &runs[3], &runs[4]);
            let eps = runs[2].0.params.drive.amplitudes[0].norm();
            a.push(Assertion::new("N=3 peak |W3,000> fidelity", summary(w3, "peak_target_fidelity")?, 0.94, 0.03));
            a.push(Assertion::new("N=3 Rabi frequency", summary(w3, "rabi_frequency")?, 0.165, 0.015));
            a.push(Assertion::new("N=4 peak |W4,0000> fidelity", summary(w4, "peak_target_fidelity")?, 0.88, 0.03));
            a.push(Assertion::new("N=4 Rabi frequency", summary(w4, "rabi_frequency")?, 0.2, 0.02));
            for (n, run) in [(3.0f64, w3), (4.0, w4)] {
                let numeric = summary(run, "rabi_frequency")?;
                let analytic = 2.0 * n.sqrt() * eps;
                a.push(Assertion::new(&format!("N={n} relative deviation of 2 sqrt(N) eps from numeric"), (analytic - numeric).abs() / numeric, 0.0, 0.15));
            }
            a.push(Assertion::new("phased W3 peak fidelity", summary(ph, "peak_target_fidelity")?, 0.76, 0.04));
        }
        "fig8" => {
            let r = &runs[0].0;
            let mut p = r.params.clone();
            p.omega_c = p.omega_q - 1.873;
            let es = eigendecompose(&build_hamiltonian(&r.space, &p, 1.0)?)?;
            let gap = rabi_gap(&es, &named_state(&r.space, &StateSpec::Vacuum)?, &named_state(&r.space, &StateSpec::W { phases: vec![] })?)?;
            a.push(Assertion::new("N=3 Rabi frequency at Delta = 1.873g", gap, 0.165, 0.015));
        }
        "fig9" => {
            let r = &runs[0];
            a.push(Assertion::new("effective-model singlet steady-state maximum", summary(r, "f_S_steady_max")?, 0.82, 0.03));
            let sep = summary(r, "gamma_peak_separation")?;
            let expected = summary(r, "expected_separation")?;
            a.push(Assertion::new("Gamma peak separation relative to the dressed splitting", sep / expected, 1.0, 0.1));
        }
        "fig10" => {
            let peaks = &runs[0].1.tables[1];
            let strong: Vec<String> = column(peaks, "label")?
                .iter()
                .zip(column(peaks, "value")?)
                .filter(|(_, v)| num(v) > 0.5)
                .map(|(l, _)| l.to_string())
                .collect();
            a.push(Assertion::new("effective-model peaks above 0.5", strong.len() as f64, 2.0, 0.0));
            a.push(Assertion::new("of which singlet", strong.iter().filter(|l| l.starts_with("S+")).count() as f64, 1.0, 0.0));
            a.push(Assertion::new("of which T0", strong.iter().filter(|l| l.starts_with("T0+")).count() as f64, 1.0, 0.0));
        }
        _ => return Err(anyhow!("unknown figure {figure}")),
    }
    Ok(a)
}
