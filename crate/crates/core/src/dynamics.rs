//! Gaussian pi-pulses and Lindblad time evolution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{partial_trace_qubits, DensityMatrix, HilbertSpace, SignedPermutation, StateVector};
use crate::liouvillian::{build_liouvillian, commutator_superoperator, SuperoperatorMatrix};
use crate::linalg::{self, trace_distance, C64, ONE, ZERO};
use crate::model::{
    cavity_drive_operator, collapse_ops, equivalent_cavity_drive, hamiltonian_parts, qubit_drive_displacement, DriveKind,
    ModelParams,
};
use crate::ode::{integrate_projected, OdeOptions, OdeStats};

/// Number of widths between the start of the window and the pulse centre.
pub const PULSE_CENTER_WIDTHS: f64 = 5.0;
/// Total simulated window in units of the width: 10 sigma of pulse plus a 20% tail.
pub const PULSE_WINDOW_WIDTHS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub peak_amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub total_window: f64,
}

impl PulseSpec {
    /// Normalised Gaussian shape, 1 at the centre.
    pub fn envelope(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        (-0.5 * x * x).exp()
    }

    pub fn envelope_derivative(&self, t: f64) -> f64 {
        -(t - self.center) / (self.width * self.width) * self.envelope(t)
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        self.peak_amplitude * self.envelope(t)
    }

    /// Composite Simpson quadrature of the amplitude over centre +- 5 sigma.
    pub fn area(&self, intervals: usize) -> f64 {
        let n = intervals.max(2) & !1;
        let (a, b) = (self.center - 5.0 * self.width, self.center + 5.0 * self.width);
        let h = (b - a) / n as f64;
        let mut s = self.amplitude(a) + self.amplitude(b);
        for k in 1..n {
            s += self.amplitude(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    /// Evenly spaced output times covering the window.
    pub fn time_grid(&self, points: usize) -> Vec<f64> {
        let n = points.max(2);
        (0..n).map(|k| self.total_window * k as f64 / (n - 1) as f64).collect()
    }
}

/// sigma = T_R / (2 sqrt(2 pi)) with T_R = 2 pi / Omega_R, so the pulse area is eps T_R / 2.
pub fn make_pi_pulse(rabi_frequency: f64, peak_amplitude: f64) -> Result<PulseSpec> {
    if !(rabi_frequency > 0.0) || !(peak_amplitude > 0.0) {
        return Err(Error::InvalidArgument("pulse needs positive Rabi frequency and amplitude".into()));
    }
    let period = 2.0 * std::f64::consts::PI / rabi_frequency;
    let width = period / (2.0 * (2.0 * std::f64::consts::PI).sqrt());
    Ok(PulseSpec { peak_amplitude, center: PULSE_CENTER_WIDTHS * width, width, total_window: PULSE_WINDOW_WIDTHS * width })
}

/// Scalar time dependence of one generator term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    Constant(f64),
    Pulse(PulseSpec),
    PulseDerivative(PulseSpec),
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant(c) => *c,
            Envelope::Pulse(p) => p.envelope(t),
            Envelope::PulseDerivative(p) => p.envelope_derivative(t),
        }
    }
}

/// L(t) = L_0 + sum_k f_k(t) L_k
#[derive(Debug, Clone)]
pub struct Generator {
    pub constant: SuperoperatorMatrix,
    pub terms: Vec<(SuperoperatorMatrix, Envelope)>,
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.constant.dim
    }

    pub fn apply(&self, t: f64, x: &[C64], y: &mut [C64]) {
        self.constant.elements.matvec(x, y);
        for (l, env) in &self.terms {
            let f = env.at(t);
            if f != 0.0 {
                l.elements.matvec_add(C64::new(f, 0.0), x, y);
            }
        }
    }
}

/// Generator of the model in `params`; with a pulse the drive term follows its envelope.
pub fn model_generator(space: &HilbertSpace, params: &ModelParams, pulse: Option<&PulseSpec>) -> Result<Generator> {
    let parts = hamiltonian_parts(space, params)?;
    let collapses = collapse_ops(space, params)?;
    match pulse {
        Some(p) => Ok(Generator {
            constant: build_liouvillian(&parts.static_part, &collapses)?,
            terms: vec![(commutator_superoperator(&parts.drive)?, Envelope::Pulse(*p))],
        }),
        None => Ok(Generator { constant: build_liouvillian(&parts.at(1.0), &collapses)?, terms: Vec::new() }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub ode: OdeOptions,
    /// Minimum eigenvalue is checked every this many outputs (and at the last one).
    pub positivity_every: usize,
    /// Store the full density matrix every this many outputs.
    pub checkpoint_every: Option<usize>,
    /// Record the weight of the antisymmetric sector under this site swap.
    pub exchange_pair: Option<(usize, usize)>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { ode: OdeOptions::default(), positivity_every: 20, checkpoint_every: None, exchange_pair: None }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrajectoryDiagnostics {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub stats: OdeStats,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub f_vacuum: Vec<f64>,
    pub f_target: Vec<f64>,
    pub f_rest: Vec<f64>,
    pub envelope: Vec<f64>,
    pub antisymmetric_weight: Option<Vec<f64>>,
    pub checkpoints: Vec<(f64, DensityMatrix)>,
    pub diagnostics: TrajectoryDiagnostics,
}

impl Trajectory {
    pub fn peak_target(&self) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for (t, f) in self.times.iter().zip(&self.f_target) {
            if *f > best.0 {
                best = (*f, *t);
            }
        }
        best
    }
}

/// <psi| rho |psi> from a column-stacked rho, using only the nonzero amplitudes of psi.
pub fn fidelity_vec(rho: &[C64], d: usize, support: &[(usize, C64)]) -> f64 {
    let mut acc = ZERO;
    for &(i, a) in support {
        for &(j, b) in support {
            acc += a.conj() * rho[i + j * d] * b;
        }
    }
    acc.re
}

pub fn support(psi: &StateVector) -> Vec<(usize, C64)> {
    psi.amplitudes.iter().copied().enumerate().filter(|(_, a)| a.norm() > 0.0).collect()
}

/// Generic driver used by all time evolutions: integrates the vectorised master equation and
/// hands the state at every output time to `observe`.
pub fn evolve_generator<O>(gen: &Generator, rho0: &DensityMatrix, t_grid: &[f64], ode: &OdeOptions, observe: O) -> Result<OdeStats>
where
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    if rho0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch { expected: gen.dim(), found: rho0.dim() });
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    let y0 = linalg::vec_of(&rho0.elements);
    let d = gen.dim();
    integrate_projected(|t, x, y| gen.apply(t, x, y), |y| hermitian_part(y, d), t_grid[0], &y0, t_grid, ode, observe)
}

/// Replaces a column-stacked d x d matrix by its Hermitian part in place.
pub fn hermitian_part(y: &mut [C64], d: usize) {
    for j in 0..d {
        y[j + j * d].im = 0.0;
        for i in 0..j {
            let m = 0.5 * (y[i + j * d] + y[j + i * d].conj());
            y[i + j * d] = m;
            y[j + i * d] = m.conj();
        }
    }
}

/// Master-equation evolution tracking vacuum and target fidelities.
pub fn evolve_master(
    rho0: &DensityMatrix,
    space: &HilbertSpace,
    params: &ModelParams,
    pulse: Option<&PulseSpec>,
    t_grid: &[f64],
    vacuum: &StateVector,
    target: &StateVector,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    rho0.validate()?;
    let gen = model_generator(space, params, pulse)?;
    let mut ode = opts.ode;
    if let Some(p) = pulse {
        ode.max_step = ode.max_step.min(0.5 * p.width);
    }
    let d = space.dim();
    let sv = support(vacuum);
    let st = support(target);
    let swap = match opts.exchange_pair {
        Some((i, j)) => Some(SignedPermutation::site_swap(space, i, j)?),
        None => None,
    };
    let n = t_grid.len();
    let mut tr = Trajectory {
        times: Vec::with_capacity(n),
        f_vacuum: Vec::with_capacity(n),
        f_target: Vec::with_capacity(n),
        f_rest: Vec::with_capacity(n),
        envelope: Vec::with_capacity(n),
        antisymmetric_weight: swap.as_ref().map(|_| Vec::with_capacity(n)),
        checkpoints: Vec::new(),
        diagnostics: TrajectoryDiagnostics { min_eigenvalue: f64::INFINITY, ..Default::default() },
    };
    let every = opts.positivity_every.max(1);
    let stats = evolve_generator(&gen, rho0, t_grid, &ode, |k, t, y| {
        let trace: C64 = (0..d).map(|i| y[i + i * d]).sum();
        let fv = fidelity_vec(y, d, &sv);
        let ft = fidelity_vec(y, d, &st);
        tr.times.push(t);
        tr.f_vacuum.push(fv);
        tr.f_target.push(ft);
        tr.f_rest.push(trace.re - fv - ft);
        tr.envelope.push(pulse.map_or(1.0, |p| p.envelope(t)));
        let dg = &mut tr.diagnostics;
        dg.max_trace_error = dg.max_trace_error.max((trace - ONE).norm());
        let mut herm = 0.0f64;
        for j in 0..d {
            for i in 0..j {
                herm = herm.max((y[i + j * d] - y[j + i * d].conj()).norm());
            }
        }
        dg.max_hermiticity_error = dg.max_hermiticity_error.max(herm);
        if let (Some(w), Some(p)) = (tr.antisymmetric_weight.as_mut(), swap.as_ref()) {
            // weight of (1 - P)/2
            let tp: C64 = (0..d).map(|i| y[p.perm[i] + i * d] * p.signs[i]).sum();
            w.push(0.5 * (trace.re - tp.re));
        }
        if k % every == 0 || k + 1 == n {
            let rho = linalg::hermitize(&linalg::unvec(y, d));
            let m = linalg::eigvalsh(&rho)?.first().copied().unwrap_or(0.0);
            dg.min_eigenvalue = dg.min_eigenvalue.min(m);
        }
        if let Some(c) = opts.checkpoint_every {
            if k % c.max(1) == 0 {
                tr.checkpoints.push((t, DensityMatrix { elements: linalg::unvec(y, d) }));
            }
        }
        Ok(())
    })?;
    tr.diagnostics.stats = stats;
    Ok(tr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Kappa,
    Gamma,
    GammaPhi,
}

impl RateKind {
    pub fn set(self, p: &mut ModelParams, rate: f64) {
        match self {
            RateKind::Kappa => p.kappa = rate,
            RateKind::Gamma => p.gamma = rate,
            RateKind::GammaPhi => p.gamma_phi = rate,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RateKind::Kappa => "kappa",
            RateKind::Gamma => "gamma",
            RateKind::GammaPhi => "gamma_phi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub rate: f64,
    pub max_fidelity: f64,
}

/// Peak target fidelity of the same pulse for each value of one dissipation rate; the other
/// rates keep their values from `base`.
#[allow(clippy::too_many_arguments)]
pub fn dissipation_sweep(
    space: &HilbertSpace,
    kind: RateKind,
    rate_grid: &[f64],
    base: &ModelParams,
    pulse: &PulseSpec,
    t_grid: &[f64],
    vacuum: &StateVector,
    target: &StateVector,
    opts: &EvolveOptions,
) -> Result<Vec<RatePoint>> {
    if rate_grid.is_empty() || rate_grid.iter().any(|&r| !(r >= 0.0)) || rate_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("rate grid must be non-empty, non-negative and ascending".into()));
    }
    let rho0 = vacuum.projector();
    rate_grid
        .par_iter()
        .map(|&rate| {
            let mut p = base.clone();
            kind.set(&mut p, rate);
            let tr = evolve_master(&rho0, space, &p, Some(pulse), t_grid, vacuum, target, opts)?;
            Ok(RatePoint { rate, max_fidelity: tr.peak_target().0 })
        })
        .collect()
}

/// Product of cavity coherent states |alpha_i> with all qubits in |g>, projected on the
/// truncated space and renormalised.
pub fn coherent_vacuum(space: &HilbertSpace, alpha: &[C64]) -> StateVector {
    let mut amps = vec![ZERO; space.dim()];
    for (k, b) in space.basis().iter().enumerate() {
        if b.qubits.iter().any(|&q| q == 1) {
            continue;
        }
        let mut a = ONE;
        for (i, &n) in b.photons.iter().enumerate() {
            let fact: f64 = (1..=n).map(|m| m as f64).product();
            a *= (-0.5 * alpha[i].norm_sqr()).exp() * alpha[i].powu(n) / fact.sqrt();
        }
        amps[k] = a;
    }
    StateVector { amplitudes: amps }.normalized()
}

#[derive(Debug, Clone)]
pub struct PumpEquivalence {
    pub times: Vec<f64>,
    pub trace_distance: Vec<f64>,
    pub max_trace_distance: f64,
}

/// Compares the qubit-driven model with its displaced cavity-driven counterpart. With the drive
/// envelope f(t) and mu_i = eps_i/g the cavity amplitude is f(t) eta_i + i f'(t) mu_i, and the
/// cavities start in the coherent state |mu_i f(0)>.
pub fn pump_equivalence(
    space: &HilbertSpace,
    params: &ModelParams,
    pulse: &PulseSpec,
    t_grid: &[f64],
    ode: &OdeOptions,
) -> Result<PumpEquivalence> {
    if params.drive.kind != DriveKind::Qubit {
        return Err(Error::InvalidArgument("pump equivalence starts from a qubit-driven model".into()));
    }
    let mu = qubit_drive_displacement(params)?;
    let eta: Vec<C64> = (0..params.n_sites()).map(|i| equivalent_cavity_drive(params, i)).collect::<Result<_>>()?;
    let qubit_gen = model_generator(space, params, Some(pulse))?;

    let mut cav = params.clone();
    cav.drive.kind = DriveKind::Cavity;
    cav.drive.amplitudes = eta;
    let mut cav_gen = model_generator(space, &cav, Some(pulse))?;
    let imu: Vec<C64> = mu.iter().map(|m| m * C64::new(0.0, 1.0)).collect();
    cav_gen.terms.push((commutator_superoperator(&cavity_drive_operator(space, &imu))?, Envelope::PulseDerivative(*pulse)));

    let f0 = pulse.envelope(t_grid[0]);
    let vac = crate::hilbert::named_state(space, &crate::hilbert::StateSpec::Vacuum)?.projector();
    let coh = coherent_vacuum(space, &mu.iter().map(|m| m * f0).collect::<Vec<_>>()).projector();
    let mut ode = *ode;
    ode.max_step = ode.max_step.min(0.5 * pulse.width);

    let d = space.dim();
    let reduce = |y: &[C64]| partial_trace_qubits(space, &DensityMatrix { elements: linalg::unvec(y, d) });
    let mut qa = Vec::with_capacity(t_grid.len());
    evolve_generator(&qubit_gen, &vac, t_grid, &ode, |_, _, y| {
        qa.push(reduce(y)?);
        Ok(())
    })?;
    let mut dist = Vec::with_capacity(t_grid.len());
    evolve_generator(&cav_gen, &coh, t_grid, &ode, |k, _, y| {
        dist.push(trace_distance(&qa[k].elements, &reduce(y)?.elements)?);
        Ok(())
    })?;
    let max = dist.iter().copied().fold(0.0, f64::max);
    Ok(PumpEquivalence { times: t_grid.to_vec(), trace_distance: dist, max_trace_distance: max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_pulse_geometry() {
        let p = make_pi_pulse(0.13, 0.05).unwrap();
        let tr = 2.0 * std::f64::consts::PI / 0.13;
        assert!((tr - 48.33).abs() < 0.01);
        assert!((p.width - 9.64).abs() < 5e-3);
        assert!((p.area(2000) / (0.05 * tr / 2.0) - 1.0).abs() < 1e-3);
        let q = make_pi_pulse(0.26, 0.05).unwrap();
        assert!((q.width * 2.0 - p.width).abs() < 1e-12);
        assert!(make_pi_pulse(0.0, 0.05).is_err() && make_pi_pulse(0.1, -1.0).is_err());
    }
}
