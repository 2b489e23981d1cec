//! One function per task; each returns in-memory tables plus key numbers for the metadata.

use std::collections::BTreeMap;

use anyhow::{anyhow, Context, Result};
use cca_core::dynamics::{dissipation_sweep, evolve_master, make_pi_pulse, pump_equivalence, EvolveOptions, PulseSpec};
use cca_core::effective::{
    gamma_peaks, rate_picture, schrieffer_wolff, singlet_resonance, sw_hamiltonian_at, sw_product_state, sw_steady_state,
    sw_steady_sweep,
};
use cca_core::hilbert::{named_state, CutoffSpec, HilbertSpace, StateSpec, StateVector};
use cca_core::model::{build_hamiltonian, ModelParams};
use cca_core::ode::OdeOptions;
use cca_core::spectral::{eigendecompose, rabi_gap, scan_quality_map};
use cca_core::steady::{
    bell_candidates, bell_score, golden_max, locate_anticrossings, model_liouvillian, normal_mode_fock, resonance_peaks,
    steady_state, steady_sweep, truncation_convergence, peak_convergence, default_symmetry, ResonanceCandidate, ResonancePeak, SteadyOptions,
    SteadyStateResult, SweepPoint,
};
use rayon::prelude::*;

use crate::config::{Resolved, Task, DEFAULT_ATOL, DEFAULT_RTOL, DEFAULT_TIME_POINTS};
use crate::output::{Kind, Table, Value};

#[derive(Debug, Default)]
pub struct TaskOutput {
    pub tables: Vec<Table>,
    pub summary: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Half-width of the golden-section window around each anticrossing.
const PEAK_HALF_WIDTH: f64 = 1.5e-3;
/// Anticrossings are bracketed on a grid of at most this spacing.
const ANTICROSSING_STEP: f64 = 0.01;

pub fn run(r: &Resolved) -> Result<TaskOutput> {
    let out = match r.config.task {
        Task::Eigenspectrum => eigenspectrum(r),
        Task::Qmap => qmap(r),
        Task::Pulse => pulse(r),
        Task::DissipationSweep => dissipation(r),
        Task::SteadySweep => steady(r),
        Task::SwRates => sw_rates(r),
        Task::SwSweep => sw_sweep(r),
        Task::PumpEquivalenceCheck => pump(r),
    };
    out.with_context(|| format!("task `{}`", r.config.task.name()))
}

fn grid(g: &Option<crate::config::Grid>) -> Vec<f64> {
    g.as_ref().map(|g| g.values()).unwrap_or_default()
}

fn ode(r: &Resolved) -> OdeOptions {
    let tp = &r.config.task_params;
    OdeOptions { rtol: tp.rtol.unwrap_or(DEFAULT_RTOL), atol: tp.atol.unwrap_or(DEFAULT_ATOL), ..Default::default() }
}

fn target(r: &Resolved) -> Result<StateVector> {
    let spec = r.config.task_params.target.as_ref().ok_or_else(|| anyhow!("no target state"))?;
    Ok(named_state(&r.space, spec)?)
}

fn eigenspectrum(r: &Resolved) -> Result<TaskOutput> {
    let deltas = grid(&r.config.task_params.delta_grid);
    let mut columns = vec!["delta".to_string(), "eigen_index".into(), "energy".into()];
    columns.extend(r.space.basis().iter().map(|b| format!("w{b}")));
    let mut kinds = vec![Kind::Num, Kind::Int, Kind::Num];
    kinds.extend(std::iter::repeat(Kind::Num).take(r.space.dim()));
    let mut t = Table::with_columns("eigenspectrum", columns, kinds);
    let blocks: Vec<Vec<Vec<Value>>> = deltas
        .par_iter()
        .map(|&delta| {
            let mut p = r.params.clone();
            p.omega_c = p.omega_q - delta;
            let es = eigendecompose(&build_hamiltonian(&r.space, &p, 1.0)?)?;
            Ok((0..es.len())
                .map(|k| {
                    let mut row: Vec<Value> = vec![delta.into(), k.into(), es.eigenvalues[k].into()];
                    row.extend(es.overlaps(k).into_iter().map(Value::from));
                    row
                })
                .collect())
        })
        .collect::<cca_core::Result<_>>()?;
    t.rows = blocks.into_iter().flatten().collect();
    Ok(TaskOutput { tables: vec![t], ..Default::default() })
}

fn qmap(r: &Resolved) -> Result<TaskOutput> {
    let tp = &r.config.task_params;
    let map = scan_quality_map(&r.space, &grid(&tp.delta_grid), &grid(&tp.omega_d_grid), &r.params, tp.target.as_ref().unwrap())?;
    let mut t = Table::new(
        "qmap",
        &[("delta", Kind::Num), ("omega_d", Kind::Num), ("q_max", Kind::Num), ("eigen_index", Kind::Int), ("rabi_gap", Kind::Num)],
    );
    for (i, &delta) in map.delta_grid.iter().enumerate() {
        for (j, &wd) in map.omega_d_grid.iter().enumerate() {
            let (q, k, gap) = map.at(i, j);
            t.push(vec![delta.into(), wd.into(), q.into(), k.into(), gap.into()]);
        }
    }
    let best = map.q_max.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut summary = BTreeMap::new();
    summary.insert("q_max_overall".into(), best);
    Ok(TaskOutput { tables: vec![t], summary, ..Default::default() })
}

/// Pi-pulse tailored to the Rabi gap of the configured Hamiltonian (or the configured Rabi frequency).
fn tailored_pulse(r: &Resolved, target: &StateVector) -> Result<(f64, PulseSpec)> {
    let vac = named_state(&r.space, &StateSpec::Vacuum)?;
    let gap = match r.config.task_params.rabi_frequency {
        Some(w) => w,
        None => rabi_gap(&eigendecompose(&build_hamiltonian(&r.space, &r.params, 1.0)?)?, &vac, target)?,
    };
    let amp = r.params.drive.amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max);
    Ok((gap, make_pi_pulse(gap, amp)?))
}

fn pulse(r: &Resolved) -> Result<TaskOutput> {
    let tgt = target(r)?;
    let vac = named_state(&r.space, &StateSpec::Vacuum)?;
    let (gap, pulse) = tailored_pulse(r, &tgt)?;
    let times = pulse.time_grid(r.config.task_params.time_points.unwrap_or(DEFAULT_TIME_POINTS));
    let opts = EvolveOptions { ode: ode(r), exchange_pair: (r.space.n_sites() == 2).then_some((0, 1)), ..Default::default() };
    let tr = evolve_master(&vac.projector(), &r.space, &r.params, Some(&pulse), &times, &vac, &tgt, &opts)?;
    let mut t = Table::new(
        "trajectory",
        &[("t", Kind::Num), ("f_vacuum", Kind::Num), ("f_target", Kind::Num), ("f_rest", Kind::Num), ("pulse_envelope", Kind::Num)],
    );
    for k in 0..tr.times.len() {
        t.push(vec![tr.times[k].into(), tr.f_vacuum[k].into(), tr.f_target[k].into(), tr.f_rest[k].into(), tr.envelope[k].into()]);
    }
    let (peak, at) = tr.peak_target();
    let d = tr.diagnostics;
    let mut s = BTreeMap::new();
    s.insert("rabi_frequency".into(), gap);
    s.insert("pulse_width".into(), pulse.width);
    s.insert("peak_target_fidelity".into(), peak);
    s.insert("peak_time".into(), at);
    s.insert("max_trace_error".into(), d.max_trace_error);
    s.insert("max_hermiticity_error".into(), d.max_hermiticity_error);
    s.insert("min_eigenvalue".into(), d.min_eigenvalue);
    if let Some(w) = &tr.antisymmetric_weight {
        s.insert("max_antisymmetric_weight".into(), w.iter().cloned().fold(0.0, f64::max));
    }
    let mut warnings = Vec::new();
    if d.min_eigenvalue < -1e-7 || d.max_trace_error > 1e-8 {
        warnings.push(format!("trajectory diagnostics: trace error {:.1e}, min eigenvalue {:.1e}", d.max_trace_error, d.min_eigenvalue));
    }
    Ok(TaskOutput { tables: vec![t], summary: s, warnings })
}

fn dissipation(r: &Resolved) -> Result<TaskOutput> {
    let tp = &r.config.task_params;
    let tgt = target(r)?;
    let vac = named_state(&r.space, &StateSpec::Vacuum)?;
    let (gap, pulse) = tailored_pulse(r, &tgt)?;
    let times = pulse.time_grid(tp.time_points.unwrap_or(DEFAULT_TIME_POINTS));
    let kind = tp.rate_kind.unwrap();
    let opts = EvolveOptions { ode: ode(r), ..Default::default() };
    let pts = dissipation_sweep(&r.space, kind, &grid(&tp.rate_grid), &r.params, &pulse, &times, &vac, &tgt, &opts)?;
    let mut t = Table::new(&format!("dissipation_{}", kind.label()), &[("rate", Kind::Num), ("max_fidelity", Kind::Num)]);
    for p in &pts {
        t.push(vec![p.rate.into(), p.max_fidelity.into()]);
    }
    let mut s = BTreeMap::new();
    s.insert("rabi_frequency".into(), gap);
    Ok(TaskOutput { tables: vec![t], summary: s, ..Default::default() })
}

fn sweep_table(name: &str, pts: &[SweepPoint]) -> Result<Table> {
    let mut t = Table::new(
        name,
        &[
            ("omega_d", Kind::Num),
            ("f_Tplus", Kind::Num),
            ("f_T0", Kind::Num),
            ("f_S", Kind::Num),
            ("f_Tminus", Kind::Num),
            ("purity", Kind::Num),
            ("residual", Kind::Num),
        ],
    );
    for p in pts {
        let f = p.result.qubit_fidelities.ok_or_else(|| anyhow!("Bell fidelities need two sites"))?;
        t.push(vec![p.omega_d.into(), f.t_plus.into(), f.t0.into(), f.s.into(), f.t_minus.into(), p.result.purity.into(), p.result.residual.into()]);
    }
    Ok(t)
}

fn peaks_table(peaks: &[ResonancePeak]) -> Table {
    let mut t = Table::new(
        "resonance_peaks",
        &[("label", Kind::Text), ("omega_anticrossing", Kind::Num), ("omega_peak", Kind::Num), ("value", Kind::Num)],
    );
    for p in peaks {
        t.push(vec![p.label.clone().into(), p.omega_anticrossing.into(), p.omega_peak.into(), p.value.into()]);
    }
    t
}

fn scan_grid(lo: f64, hi: f64) -> Vec<f64> {
    let n = (((hi - lo) / ANTICROSSING_STEP).ceil() as usize).max(1);
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

fn at(params: &ModelParams, wd: f64) -> ModelParams {
    let mut p = params.clone();
    p.omega_d = wd;
    p
}

fn bounds(v: &[f64]) -> (f64, f64) {
    (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

fn insert_sweep_summary(s: &mut BTreeMap<String, f64>, pts: &[SweepPoint]) {
    if let Some(p) = pts.iter().min_by(|a, b| a.result.purity.total_cmp(&b.result.purity)) {
        s.insert("purity_min".into(), p.result.purity);
        s.insert("purity_min_omega_d".into(), p.omega_d);
    }
}

fn steady(r: &Resolved) -> Result<TaskOutput> {
    let tp = &r.config.task_params;
    let wgrid = grid(&tp.omega_d_grid);
    let opts = SteadyOptions::default();
    let pts = steady_sweep(&r.space, &wgrid, &r.params, &opts)?;
    let mut out = TaskOutput { tables: vec![sweep_table("steady_sweep", &pts)?], ..Default::default() };
    insert_sweep_summary(&mut out.summary, &pts);
    let sym = default_symmetry(&r.space);
    let solve = |wd: f64| {
        let l = model_liouvillian(&r.space, &at(&r.params, wd))?;
        steady_state(&r.space, &l, sym.as_ref(), &opts)
    };
    let bell_max = |r: &SteadyStateResult| -> cca_core::Result<f64> { Ok(r.qubit_fidelities.map_or(0.0, |f| f.s.max(f.t0))) };
    let mut check_at = pts
        .iter()
        .map(|p| Ok((p.omega_d, bell_max(&p.result)?)))
        .collect::<cca_core::Result<Vec<_>>>()?
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1));

    if tp.refine_peaks == Some(true) {
        let (lo, hi) = bounds(&wgrid);
        let m = match r.space.cutoff() {
            CutoffSpec::PerModeMax(m) | CutoffSpec::TotalExcitations(m) => m,
        };
        let modes: Vec<(u32, u32)> = (1..=m).flat_map(|t| (0..=t).map(move |nd| (nd, t - nd))).collect();
        let cands: Vec<ResonanceCandidate> = bell_candidates(&modes, |q, nd, na| normal_mode_fock(&r.space, q, nd, na))?;
        let vac = named_state(&r.space, &StateSpec::Vacuum)?;
        let h_at = |wd: f64| build_hamiltonian(&r.space, &at(&r.params, wd), 1.0);
        let acs = locate_anticrossings(h_at, &vac, &cands, &scan_grid(lo, hi), 0.05)?;
        let mut peaks = resonance_peaks(&acs, PEAK_HALF_WIDTH, 16, |ac, wd| bell_score(&ac.label, &solve(wd)?))?;
        match singlet_resonance(&r.params, lo, hi) {
            Ok(w) => {
                let (wp, v) = golden_max(|wd| bell_score("S+", &solve(wd)?), w - 2e-3, w + 2e-3, 18)?;
                peaks.push(ResonancePeak { label: "S (effective-model resonance)".into(), omega_anticrossing: w, omega_peak: wp, value: v });
                out.summary.insert("singlet_prediction".into(), w);
                out.summary.insert("singlet_peak_omega_d".into(), wp);
                out.summary.insert("singlet_peak".into(), v);
                check_at = Some((wp, v));
            }
            Err(e) => out.warnings.push(format!("no effective-model singlet resonance in the grid range: {e}")),
        }
        out.tables.push(peaks_table(&peaks));
    }
    if tp.convergence_check == Some(true) {
        if let (Some((wd, v)), CutoffSpec::PerModeMax(n)) = (check_at, r.space.cutoff()) {
            let d = truncation_convergence(&at(&r.params, wd), n, &opts)?;
            let shift = peak_convergence(|w| at(&r.params, w), bell_max, r.space.n_sites(), n, (wd, v), 1e-3, 10, &opts)?;
            out.summary.insert("truncation_trace_distance".into(), d);
            out.summary.insert("truncation_check_omega_d".into(), wd);
            out.summary.insert("truncation_peak_shift".into(), shift.position_shift);
            out.summary.insert("truncation_peak_value_shift".into(), shift.value_shift);
            if shift.value_shift.abs() > 0.01 || shift.position_shift.abs() > 0.5 * r.params.kappa {
                out.warnings.push(format!(
                    "cutoff {n} -> {}: peak at omega_d = {wd} moves by {:.2e} and changes by {:.2e}",
                    n + 1,
                    shift.position_shift,
                    shift.value_shift
                ));
            }
        }
    }
    Ok(out)
}

fn sw_rates(r: &Resolved) -> Result<TaskOutput> {
    let tp = &r.config.task_params;
    let wgrid = grid(&tp.omega_d_grid);
    let CutoffSpec::PerModeMax(n_max) = r.space.cutoff() else { unreachable!("validated") };
    let opts = SteadyOptions::default();
    let lindblad_s = |wd: f64| -> cca_core::Result<f64> { Ok(sw_steady_state(&at(&r.params, wd), n_max, &opts)?.qubit_fidelities.map_or(0.0, |f| f.s)) };
    let rows: Vec<_> = wgrid
        .par_iter()
        .map(|&wd| Ok((rate_picture(&at(&r.params, wd))?, lindblad_s(wd)?)))
        .collect::<cca_core::Result<_>>()?;
    let mut t = Table::new(
        "sw_rates",
        &[
            ("omega_d", Kind::Num),
            ("gamma_Tminus_to_S", Kind::Num),
            ("gamma_S_to_Tplus", Kind::Num),
            ("f_S_steady", Kind::Num),
            ("f_S_rate_model", Kind::Num),
        ],
    );
    for (p, f) in &rows {
        t.push(vec![p.omega_d.into(), p.gamma_tminus_to_s.into(), p.gamma_s_to_tplus.into(), (*f).into(), p.f_s.into()]);
    }
    let mut out = TaskOutput { tables: vec![t], ..Default::default() };
    if let Some((p, f)) = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
        let (mut w, mut f) = (p.omega_d, *f);
        if tp.refine_peaks == Some(true) {
            (w, f) = golden_max(lindblad_s, w - PEAK_HALF_WIDTH, w + PEAK_HALF_WIDTH, 20)?;
            let rm = rows.iter().map(|x| x.0.f_s).fold(f64::NEG_INFINITY, f64::max);
            out.summary.insert("f_S_rate_model_max".into(), rm);
        }
        out.summary.insert("f_S_steady_max".into(), f);
        out.summary.insert("f_S_steady_max_omega_d".into(), w);
    }
    if let Some(w) = wgrid.first() {
        out.warnings.extend(schrieffer_wolff(&at(&r.params, *w))?.warnings);
    }
    if tp.refine_peaks == Some(true) {
        let (lo, hi) = bounds(&wgrid);
        let gp = gamma_peaks(&r.params, lo, hi)?;
        out.summary.insert("gamma_in_peak_omega_d".into(), gp.omega_in);
        out.summary.insert("gamma_out_peak_omega_d".into(), gp.omega_out);
        out.summary.insert("gamma_peak_separation".into(), gp.separation);
        out.summary.insert("expected_separation".into(), gp.expected);
    }
    Ok(out)
}

fn sw_sweep(r: &Resolved) -> Result<TaskOutput> {
    let tp = &r.config.task_params;
    let wgrid = grid(&tp.omega_d_grid);
    let CutoffSpec::PerModeMax(n_max) = r.space.cutoff() else { unreachable!("validated") };
    let opts = SteadyOptions::default();
    let pts = sw_steady_sweep(&wgrid, &r.params, n_max, &opts)?;
    let mut out = TaskOutput { tables: vec![sweep_table("sw_sweep", &pts)?], ..Default::default() };
    insert_sweep_summary(&mut out.summary, &pts);
    if tp.refine_peaks == Some(true) {
        let (lo, hi) = bounds(&wgrid);
        let space = HilbertSpace::build(2, CutoffSpec::PerModeMax(n_max))?;
        let reference = sw_product_state(&space, &cca_core::hilbert::Bell::TMinus.qubit_vector(), 0, 0)?;
        let modes: Vec<(u32, u32)> = (0..=n_max).flat_map(|nd| (0..=n_max).map(move |na| (nd, na))).filter(|&(a, b)| a + b > 0).collect();
        let cands = bell_candidates(&modes, |q, nd, na| sw_product_state(&space, q, nd, na))?;
        let acs = locate_anticrossings(sw_hamiltonian_at(&r.params, n_max), &reference, &cands, &scan_grid(lo, hi), 0.05)?;
        let peaks = resonance_peaks(&acs, PEAK_HALF_WIDTH, 20, |ac, wd| bell_score(&ac.label, &sw_steady_state(&at(&r.params, wd), n_max, &opts)?))?;
        out.summary.insert("peaks_above_0.5".into(), peaks.iter().filter(|p| p.value > 0.5).count() as f64);
        out.tables.push(peaks_table(&peaks));
    }
    Ok(out)
}

fn pump(r: &Resolved) -> Result<TaskOutput> {
    let tgt = target(r)?;
    let (_, pulse) = tailored_pulse(r, &tgt)?;
    let times = pulse.time_grid(r.config.task_params.time_points.unwrap_or(DEFAULT_TIME_POINTS));
    let pe = pump_equivalence(&r.space, &r.params, &pulse, &times, &ode(r))?;
    let mut t = Table::new("pump_equivalence", &[("t", Kind::Num), ("trace_distance", Kind::Num)]);
    for (tt, d) in pe.times.iter().zip(&pe.trace_distance) {
        t.push(vec![(*tt).into(), (*d).into()]);
    }
    let mut s = BTreeMap::new();
    s.insert("max_trace_distance".into(), pe.max_trace_distance);
    Ok(TaskOutput { tables: vec![t], summary: s, ..Default::default() })
}
