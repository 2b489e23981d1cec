//! Truncated product basis |q_1..q_N, n_1..n_N> of N qubits and N cavity modes.

use std::cmp::Reverse;
use std::collections::HashMap;
use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitize, C64, ONE, ZERO};

pub const DEFAULT_DIMENSION_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffSpec {
    /// Sum of qubit excitations and photons is at most M.
    TotalExcitations(u32),
    /// Each cavity holds at most n_max photons; no constraint on the total.
    PerModeMax(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    /// 1 = excited, 0 = ground
    pub qubits: Vec<u8>,
    pub photons: Vec<u32>,
}

impl BasisState {
    pub fn new(qubits: Vec<u8>, photons: Vec<u32>) -> Self {
        BasisState { qubits, photons }
    }

    pub fn vacuum(n: usize) -> Self {
        BasisState { qubits: vec![0; n], photons: vec![0; n] }
    }

    pub fn n_sites(&self) -> usize {
        self.qubits.len()
    }

    pub fn excitations(&self) -> u32 {
        self.qubits.iter().map(|&q| q as u32).sum::<u32>() + self.photons.iter().sum::<u32>()
    }

    /// Index of the qubit configuration in the 2^N qubit space; site 0 is the most significant bit.
    pub fn qubit_index(&self) -> usize {
        self.qubits.iter().fold(0, |acc, &q| (acc << 1) | q as usize)
    }

    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut s = self.clone();
        s.qubits.swap(i, j);
        s.photons.swap(i, j);
        s
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q: String = self.qubits.iter().map(|&b| if b == 1 { 'e' } else { 'g' }).collect();
        let n: Vec<String> = self.photons.iter().map(|n| n.to_string()).collect();
        write!(f, "|{},{}>", q, n.join(""))
    }
}

#[derive(Debug, Clone)]
pub struct HilbertSpace {
    n_sites: usize,
    cutoff: CutoffSpec,
    basis: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl HilbertSpace {
    pub fn build(n_sites: usize, cutoff: CutoffSpec) -> Result<Self> {
        Self::build_with_limit(n_sites, cutoff, DEFAULT_DIMENSION_LIMIT)
    }

    pub fn build_with_limit(n_sites: usize, cutoff: CutoffSpec, limit: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidArgument("n_sites must be at least 1".into()));
        }
        if n_sites > 16 {
            return Err(Error::InvalidArgument(format!("n_sites = {n_sites} is beyond the supported range")));
        }
        let mut basis = Vec::new();
        for qbits in 0..(1usize << n_sites) {
            let qubits: Vec<u8> = (0..n_sites).map(|i| ((qbits >> (n_sites - 1 - i)) & 1) as u8).collect();
            let nq: u32 = qubits.iter().map(|&q| q as u32).sum();
            let (per_mode, total) = match cutoff {
                CutoffSpec::TotalExcitations(m) => {
                    if nq > m {
                        continue;
                    }
                    (m - nq, Some(m - nq))
                }
                CutoffSpec::PerModeMax(n) => (n, None),
            };
            let mut photons = vec![0u32; n_sites];
            loop {
                basis.push(BasisState { qubits: qubits.clone(), photons: photons.clone() });
                if basis.len() > limit {
                    return Err(Error::DimensionLimit { dim: basis.len(), limit });
                }
                if !next_photon_config(&mut photons, per_mode, total) {
                    break;
                }
            }
        }
        basis.sort_by_key(|b| (b.excitations(), Reverse(b.qubits.clone()), Reverse(b.photons.clone())));
        let index = basis.iter().enumerate().map(|(k, b)| (b.clone(), k)).collect();
        Ok(HilbertSpace { n_sites, cutoff, basis, index })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn cutoff(&self) -> CutoffSpec {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisState] {
        &self.basis
    }

    pub fn state(&self, k: usize) -> &BasisState {
        &self.basis[k]
    }

    pub fn index_of(&self, b: &BasisState) -> Option<usize> {
        self.index.get(b).copied()
    }

    pub fn qubit_dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn vacuum_index(&self) -> usize {
        0
    }

    /// Basis permutation of the simultaneous qubit-and-cavity swap of sites i, j.
    pub fn swap_permutation(&self, i: usize, j: usize) -> Result<Vec<usize>> {
        self.check_pair(i, j)?;
        self.basis
            .iter()
            .map(|b| self.index_of(&b.swapped(i, j)).ok_or_else(|| Error::Truncation(format!("{}", b.swapped(i, j)))))
            .collect()
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.n_sites || j >= self.n_sites || i == j {
            return Err(Error::InvalidArgument(format!("invalid site pair ({i}, {j}) for {} sites", self.n_sites)));
        }
        Ok(())
    }
}

/// Odometer over photon configurations obeying either a per-mode or a total bound.
fn next_photon_config(p: &mut [u32], per_mode: u32, total: Option<u32>) -> bool {
    for k in (0..p.len()).rev() {
        p[k] += 1;
        let sum: u32 = p.iter().sum();
        let ok = p[k] <= per_mode && total.map_or(true, |t| sum <= t);
        if ok {
            return true;
        }
        p[k] = 0;
    }
    false
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.amplitudes)
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        self
    }

    pub fn overlap(&self, other: &StateVector) -> C64 {
        crate::linalg::inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn projector(&self) -> DensityMatrix {
        let d = self.dim();
        DensityMatrix { elements: Mat::from_fn(d, d, |i, j| self.amplitudes[i] * self.amplitudes[j].conj()) }
    }

    pub fn basis(space: &HilbertSpace, b: &BasisState) -> Result<StateVector> {
        let k = space.index_of(b).ok_or_else(|| Error::Truncation(b.to_string()))?;
        let mut amplitudes = vec![ZERO; space.dim()];
        amplitudes[k] = ONE;
        Ok(StateVector { amplitudes })
    }
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub elements: Mat<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDiagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn trace(&self) -> C64 {
        crate::linalg::trace(&self.elements)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix { elements: Mat::from_fn(d, d, |i, j| if i == j { C64::new(1.0 / d as f64, 0.0) } else { ZERO }) }
    }

    pub fn fidelity(&self, psi: &StateVector) -> f64 {
        let a = &psi.amplitudes;
        let d = self.dim();
        let mut acc = ZERO;
        for j in 0..d {
            if a[j] == ZERO {
                continue;
            }
            for i in 0..d {
                acc += a[i].conj() * self.elements[(i, j)] * a[j];
            }
        }
        acc.re
    }

    pub fn purity(&self) -> f64 {
        let d = self.dim();
        let mut p = 0.0;
        for j in 0..d {
            for i in 0..d {
                p += self.elements[(i, j)].norm_sqr();
            }
        }
        p
    }

    pub fn diagnostics(&self) -> Result<DensityDiagnostics> {
        let h = crate::linalg::hermiticity_defect(&self.elements);
        let vals = crate::linalg::eigvalsh(&hermitize(&self.elements))?;
        Ok(DensityDiagnostics {
            trace_error: (self.trace() - ONE).norm(),
            hermiticity_error: h,
            min_eigenvalue: vals.first().copied().unwrap_or(0.0),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.diagnostics()?;
        if d.trace_error > 1e-10 || d.hermiticity_error > 1e-10 || d.min_eigenvalue < -1e-8 {
            return Err(Error::InvalidArgument(format!("not a valid density matrix: {d:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bell {
    #[serde(rename = "S")]
    Singlet,
    #[serde(rename = "T0")]
    T0,
    #[serde(rename = "Tplus")]
    TPlus,
    #[serde(rename = "Tminus")]
    TMinus,
}

impl Bell {
    pub const ALL: [Bell; 4] = [Bell::TPlus, Bell::T0, Bell::Singlet, Bell::TMinus];

    pub fn label(self) -> &'static str {
        match self {
            Bell::Singlet => "S",
            Bell::T0 => "T0",
            Bell::TPlus => "Tplus",
            Bell::TMinus => "Tminus",
        }
    }

    /// Components as ((occupation site 1, occupation site 2), amplitude).
    fn components(self) -> Vec<((u32, u32), f64)> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Bell::Singlet => vec![((1, 0), r), ((0, 1), -r)],
            Bell::T0 => vec![((1, 0), r), ((0, 1), r)],
            Bell::TPlus => vec![((1, 1), 1.0)],
            Bell::TMinus => vec![((0, 0), 1.0)],
        }
    }

    /// Two-qubit vector in the reduced basis (gg, ge, eg, ee).
    pub fn qubit_vector(self) -> [C64; 4] {
        let mut v = [ZERO; 4];
        for ((a, b), amp) in self.components() {
            v[((a as usize) << 1) | b as usize] = C64::new(amp, 0.0);
        }
        v
    }
}

/// Named states, always with the complementary subsystem in its ground/vacuum state
/// unless both parts are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Vacuum,
    /// Qubit Bell state on sites (0, 1) with photon vacuum.
    QubitBell { state: Bell },
    /// Photonic Bell state on cavities (0, 1) with all qubits in |g>.
    PhotonBell { state: Bell },
    QubitPhotonBell { qubits: Bell, photons: Bell },
    /// W state over all qubits with per-site phases (empty = all zero).
    W {
        #[serde(default)]
        phases: Vec<f64>,
    },
    /// Single-photon W state of the cavities with qubits in |g>.
    PhotonW {
        #[serde(default)]
        phases: Vec<f64>,
    },
    Basis { qubits: Vec<u8>, photons: Vec<u32> },
}

pub fn named_state(space: &HilbertSpace, spec: &StateSpec) -> Result<StateVector> {
    let n = space.n_sites();
    let mut comps: Vec<(BasisState, C64)> = Vec::new();
    let two_site = |what: &str| -> Result<()> {
        if n != 2 {
            return Err(Error::InvalidArgument(format!("{what} requires exactly 2 sites, space has {n}")));
        }
        Ok(())
    };
    match spec {
        StateSpec::Vacuum => comps.push((BasisState::vacuum(n), ONE)),
        StateSpec::QubitBell { state } => {
            two_site("qubit Bell state")?;
            for ((a, b), amp) in state.components() {
                comps.push((BasisState::new(vec![a as u8, b as u8], vec![0, 0]), C64::new(amp, 0.0)));
            }
        }
        StateSpec::PhotonBell { state } => {
            two_site("photonic Bell state")?;
            for ((a, b), amp) in state.components() {
                comps.push((BasisState::new(vec![0, 0], vec![a, b]), C64::new(amp, 0.0)));
            }
        }
        StateSpec::QubitPhotonBell { qubits, photons } => {
            two_site("Bell product state")?;
            for ((a, b), x) in qubits.components() {
                for ((c, d), y) in photons.components() {
                    comps.push((BasisState::new(vec![a as u8, b as u8], vec![c, d]), C64::new(x * y, 0.0)));
                }
            }
        }
        StateSpec::W { phases } | StateSpec::PhotonW { phases } => {
            let phases = resolve_phases(phases, n)?;
            let amp = 1.0 / (n as f64).sqrt();
            for (i, &phi) in phases.iter().enumerate() {
                let mut b = BasisState::vacuum(n);
                if matches!(spec, StateSpec::W { .. }) {
                    b.qubits[i] = 1;
                } else {
                    b.photons[i] = 1;
                }
                comps.push((b, C64::from_polar(amp, phi)));
            }
        }
        StateSpec::Basis { qubits, photons } => {
            if qubits.len() != n || photons.len() != n || qubits.iter().any(|&q| q > 1) {
                return Err(Error::InvalidArgument(format!("basis state does not describe {n} sites")));
            }
            comps.push((BasisState::new(qubits.clone(), photons.clone()), ONE));
        }
    }
    let mut amplitudes = vec![ZERO; space.dim()];
    for (b, a) in comps {
        let k = space.index_of(&b).ok_or_else(|| Error::Truncation(b.to_string()))?;
        amplitudes[k] += a;
    }
    Ok(StateVector { amplitudes })
}

fn resolve_phases(phases: &[f64], n: usize) -> Result<Vec<f64>> {
    if phases.is_empty() {
        Ok(vec![0.0; n])
    } else if phases.len() == n {
        Ok(phases.to_vec())
    } else {
        Err(Error::InvalidArgument(format!("{} phases given for {n} sites", phases.len())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Symmetric,
    Antisymmetric,
    Mixed,
}

pub fn exchange_parity(space: &HilbertSpace, v: &StateVector, pair: (usize, usize)) -> Result<Parity> {
    if v.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: v.dim() });
    }
    let perm = space.swap_permutation(pair.0, pair.1)?;
    let mut dev_plus = 0.0f64;
    let mut dev_minus = 0.0f64;
    for (k, &pk) in perm.iter().enumerate() {
        // (P v)[pk] = v[k]
        dev_plus = dev_plus.max((v.amplitudes[k] - v.amplitudes[pk]).norm());
        dev_minus = dev_minus.max((v.amplitudes[k] + v.amplitudes[pk]).norm());
    }
    Ok(if dev_plus < 1e-10 {
        Parity::Symmetric
    } else if dev_minus < 1e-10 {
        Parity::Antisymmetric
    } else {
        Parity::Mixed
    })
}

/// Trace over all cavity modes; result lives on the 2^N qubit space indexed by
/// [`BasisState::qubit_index`].
pub fn partial_trace_qubits(space: &HilbertSpace, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: rho.dim() });
    }
    let mut groups: HashMap<&[u32], Vec<(usize, usize)>> = HashMap::new();
    for (k, b) in space.basis().iter().enumerate() {
        groups.entry(b.photons.as_slice()).or_default().push((k, b.qubit_index()));
    }
    let dq = space.qubit_dim();
    let mut out = Mat::<C64>::zeros(dq, dq);
    let mut keys: Vec<_> = groups.keys().copied().collect();
    keys.sort();
    for key in keys {
        let members = &groups[key];
        for &(k, qk) in members {
            for &(l, ql) in members {
                out[(qk, ql)] += rho.elements[(k, l)];
            }
        }
    }
    Ok(DensityMatrix { elements: hermitize(&out) })
}

/// Basis map |b> -> sign_b |perm(b)> generating an involutive symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPermutation {
    pub perm: Vec<usize>,
    pub signs: Vec<f64>,
}

impl SignedPermutation {
    pub fn site_swap(space: &HilbertSpace, i: usize, j: usize) -> Result<Self> {
        let perm = space.swap_permutation(i, j)?;
        let signs = vec![1.0; perm.len()];
        Ok(SignedPermutation { perm, signs })
    }

    pub fn is_involution(&self) -> bool {
        self.perm.iter().enumerate().all(|(k, &p)| self.perm[p] == k && self.signs[p] * self.signs[k] == 1.0)
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        let mut out = vec![ZERO; v.dim()];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = v.amplitudes[k] * self.signs[k];
        }
        StateVector { amplitudes: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_single_excitation_space() {
        let s = HilbertSpace::build(2, CutoffSpec::TotalExcitations(1)).unwrap();
        let labels: Vec<String> = s.basis().iter().map(|b| b.to_string()).collect();
        assert_eq!(labels, ["|gg,00>", "|eg,00>", "|ge,00>", "|gg,10>", "|gg,01>"]);
    }

    #[test]
    fn trivial_and_per_mode_dimensions() {
        assert_eq!(HilbertSpace::build(1, CutoffSpec::TotalExcitations(0)).unwrap().dim(), 1);
        assert_eq!(HilbertSpace::build(2, CutoffSpec::PerModeMax(3)).unwrap().dim(), 64);
        assert!(HilbertSpace::build(0, CutoffSpec::TotalExcitations(1)).is_err());
        assert!(matches!(
            HilbertSpace::build_with_limit(3, CutoffSpec::PerModeMax(5), 100),
            Err(Error::DimensionLimit { .. })
        ));
    }

    #[test]
    fn singlet_amplitudes_and_parity() {
        let s = HilbertSpace::build(2, CutoffSpec::TotalExcitations(2)).unwrap();
        let v = named_state(&s, &StateSpec::QubitBell { state: Bell::Singlet }).unwrap();
        let eg = s.index_of(&BasisState::new(vec![1, 0], vec![0, 0])).unwrap();
        let ge = s.index_of(&BasisState::new(vec![0, 1], vec![0, 0])).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v.amplitudes[eg].re - r).abs() < 1e-15 && (v.amplitudes[ge].re + r).abs() < 1e-15);
        assert_eq!(exchange_parity(&s, &v, (0, 1)).unwrap(), Parity::Antisymmetric);
        let t0 = named_state(&s, &StateSpec::QubitBell { state: Bell::T0 }).unwrap();
        assert_eq!(exchange_parity(&s, &t0, (0, 1)).unwrap(), Parity::Symmetric);
        let ss = named_state(&s, &StateSpec::QubitPhotonBell { qubits: Bell::Singlet, photons: Bell::Singlet }).unwrap();
        assert_eq!(exchange_parity(&s, &ss, (0, 1)).unwrap(), Parity::Symmetric);
        let mixed = StateVector { amplitudes: v.amplitudes.iter().zip(&t0.amplitudes).map(|(a, b)| a + b * 0.5).collect() };
        assert_eq!(exchange_parity(&s, &mixed, (0, 1)).unwrap(), Parity::Mixed);
    }

    #[test]
    fn phased_w_state() {
        let s = HilbertSpace::build(3, CutoffSpec::TotalExcitations(1)).unwrap();
        let v = named_state(&s, &StateSpec::W { phases: vec![0.0, 0.0, std::f64::consts::PI] }).unwrap();
        let amp = |q: Vec<u8>| v.amplitudes[s.index_of(&BasisState::new(q, vec![0, 0, 0])).unwrap()];
        let r = 1.0 / 3f64.sqrt();
        assert!((amp(vec![1, 0, 0]).re - r).abs() < 1e-15);
        assert!((amp(vec![0, 1, 0]).re - r).abs() < 1e-15);
        assert!((amp(vec![0, 0, 1]).re + r).abs() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_is_reported() {
        let s = HilbertSpace::build(2, CutoffSpec::TotalExcitations(1)).unwrap();
        assert!(matches!(named_state(&s, &StateSpec::QubitBell { state: Bell::TPlus }), Err(Error::Truncation(_))));
    }

    #[test]
    fn partial_trace_of_product_states() {
        let s = HilbertSpace::build(2, CutoffSpec::TotalExcitations(2)).unwrap();
        let vac = named_state(&s, &StateSpec::Vacuum).unwrap().projector();
        let r = partial_trace_qubits(&s, &vac).unwrap();
        assert!((r.elements[(0, 0)].re - 1.0).abs() < 1e-15 && (r.purity() - 1.0).abs() < 1e-15);
        let sing = named_state(&s, &StateSpec::QubitBell { state: Bell::Singlet }).unwrap().projector();
        let r = partial_trace_qubits(&s, &sing).unwrap();
        let sv = Bell::Singlet.qubit_vector();
        let f: f64 = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| (sv[i].conj() * r.elements[(i, j)] * sv[j]).re).sum();
        assert!((f - 1.0).abs() < 1e-14 && (r.purity() - 1.0).abs() < 1e-14);
    }
}
