//! Dressed spectra, overlap quality and drive-frequency maps.

use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{named_state, HilbertSpace, StateSpec, StateVector};
use crate::linalg::{self, CsrMatrix, C64};
use crate::model::{build_hamiltonian, ModelParams};

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns.
    pub eigenvectors: Mat<C64>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, i: usize) -> StateVector {
        StateVector { amplitudes: (0..self.eigenvectors.nrows()).map(|k| self.eigenvectors[(k, i)]).collect() }
    }

    /// |<b|psi_i>|^2 for every basis index b.
    pub fn overlaps(&self, i: usize) -> Vec<f64> {
        (0..self.eigenvectors.nrows()).map(|k| self.eigenvectors[(k, i)].norm_sqr()).collect()
    }

    /// |<phi|psi_i>|^2 for every eigenvector i.
    pub fn fidelities_with(&self, phi: &StateVector) -> Vec<f64> {
        let d = self.eigenvectors.nrows();
        (0..self.len())
            .map(|i| (0..d).map(|k| phi.amplitudes[k].conj() * self.eigenvectors[(k, i)]).sum::<C64>().norm_sqr())
            .collect()
    }
}

pub fn eigendecompose(h: &CsrMatrix) -> Result<EigenSystem> {
    let m = h.to_dense();
    let dev = linalg::hermiticity_defect(&m);
    let scale = linalg::max_abs(&m).max(1.0);
    if dev > 1e-12 * scale {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let (eigenvalues, eigenvectors) = linalg::eigh(&linalg::hermitize(&m))?;
    Ok(EigenSystem { eigenvalues, eigenvectors })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapQuality {
    pub q_values: Vec<f64>,
    pub q_max: f64,
    pub argmax: usize,
}

/// Q_i = 1 - |0.5 - F_VS,i| - |0.5 - F_TS,i|; ties resolve to the smallest index.
pub fn overlap_quality(es: &EigenSystem, vacuum: &StateVector, target: &StateVector) -> OverlapQuality {
    let fv = es.fidelities_with(vacuum);
    let ft = es.fidelities_with(target);
    let q_values: Vec<f64> = fv.iter().zip(&ft).map(|(a, b)| (1.0 - (0.5 - a).abs() - (0.5 - b).abs()).clamp(0.0, 1.0)).collect();
    let mut argmax = 0;
    for (i, &q) in q_values.iter().enumerate() {
        if q > q_values[argmax] {
            argmax = i;
        }
    }
    OverlapQuality { q_max: q_values.get(argmax).copied().unwrap_or(0.0), q_values, argmax }
}

/// Energy gap between the two eigenstates with the largest F_VS + F_TS.
pub fn rabi_gap(es: &EigenSystem, vacuum: &StateVector, target: &StateVector) -> Result<f64> {
    if es.len() < 2 {
        return Err(Error::InvalidArgument("rabi_gap needs at least two eigenstates".into()));
    }
    let (a, b) = rabi_pair(es, vacuum, target);
    Ok((es.eigenvalues[a] - es.eigenvalues[b]).abs())
}

pub fn rabi_pair(es: &EigenSystem, vacuum: &StateVector, target: &StateVector) -> (usize, usize) {
    let fv = es.fidelities_with(vacuum);
    let ft = es.fidelities_with(target);
    let mut idx: Vec<usize> = (0..es.len()).collect();
    // stable sort keeps the smaller index first among equal weights
    idx.sort_by(|&i, &j| (fv[j] + ft[j]).partial_cmp(&(fv[i] + ft[i])).unwrap_or(std::cmp::Ordering::Equal));
    (idx[0], idx[1])
}

/// omega_d^{+-} = (2 omega_q - Delta - (N-1)J +- sqrt((Delta + (N-1)J)^2 + 4 g^2)) / 2
pub fn analytic_drive_frequency(delta: f64, n_sites: usize, params: &ModelParams) -> (f64, f64) {
    let shift = (n_sites as f64 - 1.0) * params.uniform_hopping();
    let root = ((delta + shift).powi(2) + 4.0 * params.g * params.g).sqrt();
    let base = 2.0 * params.omega_q - delta - shift;
    (0.5 * (base + root), 0.5 * (base - root))
}

/// Characteristic frequencies of the two-site model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedFrequencies {
    pub delta: f64,
    pub omega_c_plus: f64,
    pub omega_c_minus: f64,
    pub generalized_rabi_plus: f64,
    pub generalized_rabi_minus: f64,
    pub delta_qd: f64,
    pub delta_cd_minus: f64,
}

impl DerivedFrequencies {
    pub fn from_params(p: &ModelParams) -> Self {
        let j = p.uniform_hopping();
        let (cp, cm) = (p.omega_c + j, p.omega_c - j);
        DerivedFrequencies {
            delta: p.delta(),
            omega_c_plus: cp,
            omega_c_minus: cm,
            generalized_rabi_plus: ((p.omega_q - cp).powi(2) + 4.0 * p.g * p.g).sqrt(),
            generalized_rabi_minus: ((p.omega_q - cm).powi(2) + 4.0 * p.g * p.g).sqrt(),
            delta_qd: p.omega_q - p.omega_d,
            delta_cd_minus: p.omega_c - p.omega_d - j,
        }
    }
}

/// Closed-form spectrum of the undriven two-site model with at most one excitation:
/// 0 and (omega_q + omega_c^s)/2 - omega_d +- Omega^s/2 for s = +, -.
pub fn single_excitation_spectrum(p: &ModelParams) -> Vec<f64> {
    let f = DerivedFrequencies::from_params(p);
    let mut e = vec![0.0];
    for (wc, om) in [(f.omega_c_plus, f.generalized_rabi_plus), (f.omega_c_minus, f.generalized_rabi_minus)] {
        let mid = 0.5 * (p.omega_q + wc) - p.omega_d;
        e.push(mid + 0.5 * om);
        e.push(mid - 0.5 * om);
    }
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityMap {
    pub delta_grid: Vec<f64>,
    pub omega_d_grid: Vec<f64>,
    /// Row-major: index [i_delta * n_omega + i_omega].
    pub q_max: Vec<f64>,
    pub argmax_eigenindex: Vec<usize>,
    pub rabi_gap: Vec<f64>,
}

impl QualityMap {
    pub fn at(&self, i_delta: usize, i_omega: usize) -> (f64, usize, f64) {
        let k = i_delta * self.omega_d_grid.len() + i_omega;
        (self.q_max[k], self.argmax_eigenindex[k], self.rabi_gap[k])
    }
}

/// Scan (Delta, omega_d) holding omega_q fixed (omega_c = omega_q - Delta).
pub fn scan_quality_map(
    space: &HilbertSpace,
    delta_grid: &[f64],
    omega_d_grid: &[f64],
    params: &ModelParams,
    target: &StateSpec,
) -> Result<QualityMap> {
    if delta_grid.is_empty() || omega_d_grid.is_empty() {
        return Err(Error::InvalidArgument("quality map grids must be non-empty".into()));
    }
    let vacuum = named_state(space, &StateSpec::Vacuum)?;
    let target = named_state(space, target)?;
    let nw = omega_d_grid.len();
    let cells: Vec<Result<(f64, usize, f64)>> = (0..delta_grid.len() * nw)
        .into_par_iter()
        .map(|k| {
            let (delta, wd) = (delta_grid[k / nw], omega_d_grid[k % nw]);
            quality_cell(space, params, delta, wd, &vacuum, &target)
                .map_err(|e| Error::Cell { delta, omega_d: wd, source: Box::new(e) })
        })
        .collect();
    let mut map = QualityMap {
        delta_grid: delta_grid.to_vec(),
        omega_d_grid: omega_d_grid.to_vec(),
        q_max: Vec::with_capacity(cells.len()),
        argmax_eigenindex: Vec::with_capacity(cells.len()),
        rabi_gap: Vec::with_capacity(cells.len()),
    };
    for c in cells {
        let (q, i, gap) = c?;
        map.q_max.push(q);
        map.argmax_eigenindex.push(i);
        map.rabi_gap.push(gap);
    }
    Ok(map)
}

pub fn quality_cell(
    space: &HilbertSpace,
    params: &ModelParams,
    delta: f64,
    omega_d: f64,
    vacuum: &StateVector,
    target: &StateVector,
) -> Result<(f64, usize, f64)> {
    let mut p = params.clone();
    p.omega_c = p.omega_q - delta;
    p.omega_d = omega_d;
    let es = eigendecompose(&build_hamiltonian(space, &p, 1.0)?)?;
    let q = overlap_quality(&es, vacuum, target);
    Ok((q.q_max, q.argmax, rabi_gap(&es, vacuum, target)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Bell, CutoffSpec};
    use crate::linalg::ZERO;

    #[test]
    fn quality_formula_cases() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // columns: (v+t)/sqrt2, v, 0.5 vac weight with 0.3 target weight (+0.2 elsewhere)
        let mut u = Mat::<C64>::zeros(3, 3);
        u[(0, 0)] = C64::new(r, 0.0);
        u[(1, 0)] = C64::new(r, 0.0);
        u[(0, 1)] = C64::new(1.0, 0.0);
        u[(0, 2)] = C64::new(0.5f64.sqrt(), 0.0);
        u[(1, 2)] = C64::new(0.0, 0.3f64.sqrt());
        u[(2, 2)] = C64::new(0.2f64.sqrt(), 0.0);
        let es = EigenSystem { eigenvalues: vec![0.0, 1.0, 2.0], eigenvectors: u };
        let v = StateVector { amplitudes: vec![C64::new(1.0, 0.0), ZERO, ZERO] };
        let t = StateVector { amplitudes: vec![ZERO, C64::new(1.0, 0.0), ZERO] };
        let q = overlap_quality(&es, &v, &t);
        assert!((q.q_values[0] - 1.0).abs() < 1e-14);
        assert!(q.q_values[1].abs() < 1e-14);
        assert!((q.q_values[2] - 0.8).abs() < 1e-14);
        assert_eq!(q.argmax, 0);
    }

    #[test]
    fn drive_frequency_examples() {
        let p = ModelParams::uniform(2, 7.0, 6.0, 7.43, 1.0);
        let (plus, _) = analytic_drive_frequency(1.0, 2, &p);
        assert!((plus - (6.0 + 2f64.sqrt())).abs() < 1e-14);
        let mut free = p.clone();
        free.g = 0.0;
        assert!((analytic_drive_frequency(1.0, 2, &free).0 - 7.0).abs() < 1e-14);
        let (a3, _) = analytic_drive_frequency(0.3 - 1.0, 3, &p);
        let (a2, _) = analytic_drive_frequency(0.3, 2, &p);
        assert!((a3 - a2).abs() < 1e-12);
    }

    #[test]
    fn anticrossing_quality_is_one_half() {
        let s = HilbertSpace::build(2, CutoffSpec::TotalExcitations(2)).unwrap();
        let p = ModelParams::uniform(2, 7.0, 6.0, 7.0, 1.0);
        let map = scan_quality_map(&s, &[-1.0], &[6.9], &p, &StateSpec::QubitBell { state: Bell::T0 }).unwrap();
        assert!((map.q_max[0] - 0.5).abs() < 1e-10);
        assert!(scan_quality_map(&s, &[], &[6.9], &p, &StateSpec::Vacuum).is_err());
    }
}
