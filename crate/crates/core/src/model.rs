//! Drive-frame Hamiltonians and collapse operators of the Jaynes-Cummings-Hubbard array.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BasisState, HilbertSpace};
use crate::linalg::{CsrMatrix, C64, ONE, ZERO};

/// Operators are kept sparse; call `to_dense` where a dense matrix is needed.
pub type OperatorMatrix = CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriveKind {
    #[default]
    Qubit,
    Cavity,
}

/// Pure-dephasing collapse operator: sqrt(gamma_phi) sigma_z or sqrt(gamma_phi) sigma_z / 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DephasingConvention {
    #[default]
    PauliZ,
    HalfPauliZ,
}

impl DephasingConvention {
    pub fn prefactor(self) -> f64 {
        match self {
            DephasingConvention::PauliZ => 1.0,
            DephasingConvention::HalfPauliZ => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub kind: DriveKind,
    /// Peak complex amplitude per site, eps_i * exp(i phi_i).
    pub amplitudes: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub omega_q: f64,
    pub omega_c: f64,
    pub omega_d: f64,
    pub g: f64,
    pub hopping: Vec<Vec<f64>>,
    pub drive: Drive,
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_phi: f64,
    pub dephasing: DephasingConvention,
}

impl ModelParams {
    /// All-to-all hopping `j`, g = 1, no drive, no dissipation.
    pub fn uniform(n_sites: usize, omega_q: f64, omega_c: f64, omega_d: f64, j: f64) -> Self {
        let hopping = (0..n_sites).map(|a| (0..n_sites).map(|b| if a == b { 0.0 } else { j }).collect()).collect();
        ModelParams {
            omega_q,
            omega_c,
            omega_d,
            g: 1.0,
            hopping,
            drive: Drive { kind: DriveKind::Qubit, amplitudes: vec![ZERO; n_sites] },
            kappa: 0.0,
            gamma: 0.0,
            gamma_phi: 0.0,
            dephasing: DephasingConvention::PauliZ,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.hopping.len()
    }

    pub fn with_qubit_drive(mut self, eps: f64, phases: &[f64]) -> Self {
        self.drive = Drive { kind: DriveKind::Qubit, amplitudes: phased(eps, phases, self.n_sites()) };
        self
    }

    pub fn with_cavity_drive(mut self, eps: f64, phases: &[f64]) -> Self {
        self.drive = Drive { kind: DriveKind::Cavity, amplitudes: phased(eps, phases, self.n_sites()) };
        self
    }

    pub fn with_rates(mut self, kappa: f64, gamma: f64, gamma_phi: f64) -> Self {
        self.kappa = kappa;
        self.gamma = gamma;
        self.gamma_phi = gamma_phi;
        self
    }

    pub fn with_dephasing(mut self, c: DephasingConvention) -> Self {
        self.dephasing = c;
        self
    }

    /// Detuning Delta = omega_q - omega_c.
    pub fn delta(&self) -> f64 {
        self.omega_q - self.omega_c
    }

    pub fn hopping_row_sum(&self, i: usize) -> f64 {
        self.hopping[i].iter().sum()
    }

    /// Mean off-diagonal hopping; equals J for a homogeneous all-to-all array.
    pub fn uniform_hopping(&self) -> f64 {
        let n = self.n_sites();
        if n < 2 {
            return 0.0;
        }
        self.hopping.iter().map(|r| r.iter().sum::<f64>()).sum::<f64>() / (n * (n - 1)) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        let mut problems = Vec::new();
        if n == 0 {
            problems.push("hopping matrix is empty".to_string());
        }
        for (i, row) in self.hopping.iter().enumerate() {
            if row.len() != n {
                problems.push(format!("hopping row {i} has length {} (expected {n})", row.len()));
                continue;
            }
            if row[i] != 0.0 {
                problems.push(format!("hopping[{i}][{i}] must be zero"));
            }
            for j in 0..n {
                if self.hopping.get(j).and_then(|r| r.get(i)).map_or(true, |&v| v != row[j]) {
                    problems.push(format!("hopping[{i}][{j}] is not symmetric"));
                }
            }
        }
        if self.drive.amplitudes.len() != n {
            problems.push(format!("{} drive amplitudes for {n} sites", self.drive.amplitudes.len()));
        }
        for (name, v) in [("kappa", self.kappa), ("gamma", self.gamma), ("gamma_phi", self.gamma_phi)] {
            if !(v >= 0.0) {
                problems.push(format!("{name} must be non-negative"));
            }
        }
        let all = [self.omega_q, self.omega_c, self.omega_d, self.g];
        if all.iter().any(|x| !x.is_finite()) {
            problems.push("non-finite frequency or coupling".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}

fn phased(eps: f64, phases: &[f64], n: usize) -> Vec<C64> {
    (0..n).map(|i| C64::from_polar(eps, phases.get(i).copied().unwrap_or(0.0))).collect()
}

/// Operator from a basis map b -> coef |b'>; images outside the truncation are dropped.
pub fn operator_from_map<F>(space: &HilbertSpace, f: F) -> OperatorMatrix
where
    F: Fn(&BasisState) -> Option<(BasisState, C64)>,
{
    let mut t = Vec::new();
    for (k, b) in space.basis().iter().enumerate() {
        if let Some((img, c)) = f(b) {
            if let Some(r) = space.index_of(&img) {
                t.push((r, k, c));
            }
        }
    }
    CsrMatrix::from_triplets(space.dim(), space.dim(), t)
}

pub fn sigma_minus(space: &HilbertSpace, i: usize) -> OperatorMatrix {
    operator_from_map(space, |b| {
        (b.qubits[i] == 1).then(|| {
            let mut s = b.clone();
            s.qubits[i] = 0;
            (s, ONE)
        })
    })
}

pub fn sigma_plus(space: &HilbertSpace, i: usize) -> OperatorMatrix {
    sigma_minus(space, i).adjoint()
}

/// |e><e| - |g><g| on qubit i.
pub fn sigma_z(space: &HilbertSpace, i: usize) -> OperatorMatrix {
    operator_from_map(space, |b| Some((b.clone(), C64::new(if b.qubits[i] == 1 { 1.0 } else { -1.0 }, 0.0))))
}

pub fn sigma_x(space: &HilbertSpace, i: usize) -> OperatorMatrix {
    sigma_minus(space, i).add(&sigma_plus(space, i))
}

pub fn sigma_y(space: &HilbertSpace, i: usize) -> OperatorMatrix {
    // sigma_y = -i sigma_+ + i sigma_-
    sigma_plus(space, i).scale(C64::new(0.0, -1.0)).add(&sigma_minus(space, i).scale(C64::new(0.0, 1.0)))
}

pub fn qubit_number(space: &HilbertSpace, i: usize) -> OperatorMatrix {
    operator_from_map(space, |b| (b.qubits[i] == 1).then(|| (b.clone(), ONE)))
}

pub fn annihilate(space: &HilbertSpace, i: usize) -> OperatorMatrix {
    operator_from_map(space, |b| {
        (b.photons[i] > 0).then(|| {
            let mut s = b.clone();
            let n = s.photons[i];
            s.photons[i] -= 1;
            (s, C64::new((n as f64).sqrt(), 0.0))
        })
    })
}

pub fn create(space: &HilbertSpace, i: usize) -> OperatorMatrix {
    annihilate(space, i).adjoint()
}

pub fn photon_number(space: &HilbertSpace, i: usize) -> OperatorMatrix {
    operator_from_map(space, |b| (b.photons[i] > 0).then(|| (b.clone(), C64::new(b.photons[i] as f64, 0.0))))
}

fn check_sites(space: &HilbertSpace, params: &ModelParams) -> Result<()> {
    params.validate()?;
    if space.n_sites() != params.n_sites() {
        return Err(Error::DimensionMismatch { expected: space.n_sites(), found: params.n_sites() });
    }
    Ok(())
}

/// Time-independent part and unit-envelope drive part of the drive-frame Hamiltonian.
#[derive(Debug, Clone)]
pub struct HamiltonianParts {
    pub static_part: OperatorMatrix,
    pub drive: OperatorMatrix,
}

impl HamiltonianParts {
    pub fn at(&self, envelope_value: f64) -> OperatorMatrix {
        self.static_part.add(&self.drive.scale(C64::new(envelope_value, 0.0)))
    }
}

pub fn hamiltonian_parts(space: &HilbertSpace, params: &ModelParams) -> Result<HamiltonianParts> {
    check_sites(space, params)?;
    let n = space.n_sites();
    let d = space.dim();
    let mut t: Vec<(usize, usize, C64)> = Vec::new();
    let dq = params.omega_q - params.omega_d;
    let dc = params.omega_c - params.omega_d;
    for (k, b) in space.basis().iter().enumerate() {
        let e: f64 = b.qubits.iter().map(|&q| q as f64 * dq).sum::<f64>() + b.photons.iter().map(|&p| p as f64 * dc).sum::<f64>();
        t.push((k, k, C64::new(e, 0.0)));
    }
    let mut h = CsrMatrix::from_triplets(d, d, t);
    let mut off = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && params.hopping[i][j] != 0.0 {
                off.push(create(space, i).matmul(&annihilate(space, j)).scale(C64::new(-params.hopping[i][j], 0.0)));
            }
        }
        if params.g != 0.0 {
            let jc = create(space, i).matmul(&sigma_minus(space, i));
            off.push(jc.add(&jc.adjoint()).scale(C64::new(params.g, 0.0)));
        }
    }
    for o in off {
        h = h.add(&o);
    }
    let mut drive = CsrMatrix::zeros(d, d);
    for (i, &eps) in params.drive.amplitudes.iter().enumerate() {
        if eps == ZERO {
            continue;
        }
        let raise = match params.drive.kind {
            DriveKind::Qubit => sigma_plus(space, i),
            DriveKind::Cavity => create(space, i),
        };
        drive = drive.add(&cavity_or_qubit_term(&raise, eps));
    }
    check_hermitian(&h)?;
    check_hermitian(&drive)?;
    Ok(HamiltonianParts { static_part: h, drive })
}

/// eps R + conj(eps) R^dagger
fn cavity_or_qubit_term(raise: &CsrMatrix, eps: C64) -> CsrMatrix {
    raise.scale(eps).add(&raise.adjoint().scale(eps.conj()))
}

/// Linear drive term eps b_i^+ + conj(eps) b_i on cavity i.
pub fn cavity_drive_operator(space: &HilbertSpace, amplitudes: &[C64]) -> OperatorMatrix {
    let d = space.dim();
    let mut out = CsrMatrix::zeros(d, d);
    for (i, &eps) in amplitudes.iter().enumerate() {
        if eps != ZERO {
            out = out.add(&cavity_or_qubit_term(&create(space, i), eps));
        }
    }
    out
}

pub fn build_hamiltonian(space: &HilbertSpace, params: &ModelParams, envelope_value: f64) -> Result<OperatorMatrix> {
    let h = hamiltonian_parts(space, params)?.at(envelope_value);
    check_hermitian(&h)?;
    Ok(h)
}

pub fn check_hermitian(h: &CsrMatrix) -> Result<()> {
    let dev = h.add(&h.adjoint().scale(C64::new(-1.0, 0.0))).max_abs();
    if dev > 1e-12 * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// sqrt(kappa) a_i, sqrt(gamma) sigma_i^-, and the dephasing operator for every site with a
/// nonzero rate, in that order.
pub fn collapse_ops(space: &HilbertSpace, params: &ModelParams) -> Result<Vec<OperatorMatrix>> {
    check_sites(space, params)?;
    let n = space.n_sites();
    let mut out = Vec::new();
    if params.kappa > 0.0 {
        out.extend((0..n).map(|i| annihilate(space, i).scale(C64::new(params.kappa.sqrt(), 0.0))));
    }
    if params.gamma > 0.0 {
        out.extend((0..n).map(|i| sigma_minus(space, i).scale(C64::new(params.gamma.sqrt(), 0.0))));
    }
    if params.gamma_phi > 0.0 {
        let s = params.gamma_phi.sqrt() * params.dephasing.prefactor();
        out.extend((0..n).map(|i| sigma_z(space, i).scale(C64::new(s, 0.0))));
    }
    Ok(out)
}

/// Cavity displacement mu_i = eps_i / g that removes the qubit drive.
pub fn qubit_drive_displacement(params: &ModelParams) -> Result<Vec<C64>> {
    if params.g == 0.0 {
        return Err(Error::InvalidArgument("pump equivalence is undefined for g = 0".into()));
    }
    Ok(params.drive.amplitudes.iter().map(|&e| e / params.g).collect())
}

/// Complex cavity amplitude reproducing a static qubit drive after the displacement
/// a_i = b_i - mu_i: sum_j J_ij mu_j - (omega_c - omega_d) mu_i + i kappa mu_i / 2.
pub fn equivalent_cavity_drive(params: &ModelParams, site: usize) -> Result<C64> {
    let mu = qubit_drive_displacement(params)?;
    if site >= mu.len() {
        return Err(Error::InvalidArgument(format!("site {site} out of range")));
    }
    let hop: C64 = (0..mu.len()).map(|j| mu[j] * params.hopping[site][j]).sum();
    Ok(hop - mu[site] * (params.omega_c - params.omega_d) + mu[site] * C64::new(0.0, 0.5 * params.kappa))
}

/// Magnitude of [`equivalent_cavity_drive`]; the global phase is gauged away.
pub fn equivalent_cavity_amplitude(params: &ModelParams, site: usize) -> Result<f64> {
    Ok(equivalent_cavity_drive(params, site)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::CutoffSpec;

    #[test]
    fn cavity_amplitude_example() {
        let p = ModelParams::uniform(2, 7.0, 6.0, 7.43, 1.0).with_qubit_drive(0.05, &[]).with_rates(1e-3, 0.0, 0.0);
        let e = equivalent_cavity_amplitude(&p, 0).unwrap();
        let closed = 0.05 * ((1.0f64 - 6.0 + 7.43).powi(2) + 0.25e-6).sqrt();
        assert!((e - closed).abs() < 1e-15);
        assert!((e - 0.1215).abs() < 1e-4);
        let q = ModelParams::uniform(2, 7.0, 6.0, 5.0, 1.0).with_qubit_drive(0.05, &[]);
        assert!(equivalent_cavity_amplitude(&q, 1).unwrap().abs() < 1e-15);
        let mut z = p.clone();
        z.g = 0.0;
        assert!(equivalent_cavity_amplitude(&z, 0).is_err());
    }

    #[test]
    fn free_theory_is_diagonal() {
        let s = HilbertSpace::build(2, CutoffSpec::TotalExcitations(2)).unwrap();
        let mut p = ModelParams::uniform(2, 7.0, 6.0, 7.43, 0.0);
        p.g = 0.0;
        let h = build_hamiltonian(&s, &p, 1.0).unwrap();
        assert!(h.triplets().all(|(r, c, _)| r == c));
    }

    #[test]
    fn collapse_operator_inventory() {
        let s = HilbertSpace::build(2, CutoffSpec::TotalExcitations(2)).unwrap();
        let p = ModelParams::uniform(2, 7.0, 6.0, 7.43, 1.0);
        assert!(collapse_ops(&s, &p).unwrap().is_empty());
        let c = collapse_ops(&s, &p.clone().with_rates(1e-3, 0.0, 0.0)).unwrap();
        assert_eq!(c.len(), 2);
        let one = s.index_of(&BasisState::new(vec![0, 0], vec![1, 0])).unwrap();
        assert!((c[0].get(0, one).re - 1e-3f64.sqrt()).abs() < 1e-15);
        let z = sigma_z(&s, 0);
        let e = s.index_of(&BasisState::new(vec![1, 0], vec![0, 0])).unwrap();
        assert_eq!(z.get(e, e).re, 1.0);
        assert_eq!(z.get(0, 0).re, -1.0);
    }

    #[test]
    fn rejects_inconsistent_params() {
        let s = HilbertSpace::build(3, CutoffSpec::TotalExcitations(1)).unwrap();
        let p = ModelParams::uniform(2, 7.0, 6.0, 7.43, 1.0);
        assert!(build_hamiltonian(&s, &p, 0.0).is_err());
        let mut q = ModelParams::uniform(2, 7.0, 6.0, 7.43, 1.0);
        q.hopping[0][1] = 0.5;
        q.kappa = -1.0;
        let msg = q.validate().unwrap_err().to_string();
        assert!(msg.contains("symmetric") && msg.contains("kappa"));
    }
}
