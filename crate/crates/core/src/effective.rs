//! Dispersive (Schrieffer-Wolff) effective model of the cavity-driven two-site array,
//! Bloch-Redfield rates between its dressed qubit states, and the adiabatically eliminated
//! two-level model of the qubit-driven array.

use std::f64::consts::{PI, SQRT_2};

use faer::linalg::solvers::Solve;
use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{BasisState, Bell, CutoffSpec, HilbertSpace, StateVector};
use crate::liouvillian::build_liouvillian;
use crate::linalg::{self, CsrMatrix, C64, ONE, ZERO};
use crate::model::{annihilate, photon_number, sigma_minus, sigma_x, sigma_y, sigma_z, DephasingConvention, DriveKind, ModelParams};
use crate::steady::{golden_max, steady_state, SteadyOptions, SteadyStateResult, SweepPoint};

/// Beyond this g/Delta the second-order expansion is flagged.
pub const PERTURBATIVE_LIMIT: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub delta_tilde: f64,
    pub rabi: f64,
    pub qq_coupling: f64,
    pub mean_field: C64,
    pub residual_coupling: C64,
    /// omega_c^- - omega_d for the symmetric fluctuation mode D.
    pub mode_symmetric: f64,
    /// omega_c^+ - omega_d for the antisymmetric fluctuation mode d.
    pub mode_antisymmetric: f64,
    /// 4x4 qubit Hamiltonian in the basis (gg, ge, eg, ee).
    pub h_q_eff: Mat<C64>,
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_phi: f64,
    pub dephasing: DephasingConvention,
    pub warnings: Vec<String>,
}

/// Two-qubit Pauli operators in the (gg, ge, eg, ee) basis.
fn pauli2(which: char, site: usize) -> Mat<C64> {
    let p = match which {
        'x' => [[ZERO, ONE], [ONE, ZERO]],
        'y' => [[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]],
        // single-qubit basis ordered (g, e): sigma_z = diag(-1, 1)
        _ => [[C64::new(-1.0, 0.0), ZERO], [ZERO, ONE]],
    };
    Mat::from_fn(4, 4, |r, c| {
        let (r1, r2, c1, c2) = (r >> 1, r & 1, c >> 1, c & 1);
        if site == 0 {
            if r2 == c2 { p[r1][c1] } else { ZERO }
        } else if r1 == c1 {
            p[r2][c2]
        } else {
            ZERO
        }
    })
}

pub fn schrieffer_wolff(params: &ModelParams) -> Result<EffectiveModel> {
    params.validate()?;
    if params.n_sites() != 2 {
        return Err(Error::InvalidArgument("the dispersive effective model is defined for two sites".into()));
    }
    if params.drive.kind != DriveKind::Cavity {
        return Err(Error::InvalidArgument("the dispersive effective model needs a cavity drive".into()));
    }
    let amps = &params.drive.amplitudes;
    if (amps[0] - amps[1]).norm() > 1e-14 || amps[0].im.abs() > 1e-14 {
        return Err(Error::InvalidArgument("the dispersive effective model needs a homogeneous real drive".into()));
    }
    let eps = amps[0].re;
    let g = params.g;
    let j = params.hopping[0][1];
    let delta = params.delta();
    if delta.abs() < 1e-12 || (delta + j).abs() < 1e-12 {
        return Err(Error::InvalidArgument(format!("singular transformation: Delta = {delta}, Delta + J = {}", delta + j)));
    }
    let mut warnings = Vec::new();
    if (g / delta).abs() > PERTURBATIVE_LIMIT {
        warnings.push(format!("g/Delta = {:.3} exceeds the perturbative limit {PERTURBATIVE_LIMIT}", g / delta));
    }
    let wd = params.omega_d;
    let (wc_minus, wc_plus) = (params.omega_c - j, params.omega_c + j);
    let mean_field = C64::new(SQRT_2 * eps, 0.0) / C64::new(wd - wc_minus, 0.5 * params.kappa);
    let dj = delta + j;
    let delta_tilde = params.omega_q - wd
        + (g / dj).powi(2) * (dj * mean_field.norm_sqr() + dj * dj / delta + SQRT_2 * eps * mean_field.re);
    let rabi = 2.0 * eps * g / dj;
    let qq = j * (g / delta).powi(2);
    let residual_coupling = (mean_field * delta + eps / SQRT_2) * (0.5 * (g / delta).powi(2));

    let mut h = Mat::<C64>::zeros(4, 4);
    for site in 0..2 {
        h = h + pauli2('x', site) * faer::Scale(C64::new(0.5 * rabi, 0.0)) + pauli2('z', site) * faer::Scale(C64::new(0.5 * delta_tilde, 0.0));
    }
    let xx = &pauli2('x', 0) * &pauli2('x', 1) + &pauli2('y', 0) * &pauli2('y', 1);
    h = h - xx * faer::Scale(C64::new(0.5 * qq, 0.0));

    Ok(EffectiveModel {
        delta_tilde,
        rabi,
        qq_coupling: qq,
        mean_field,
        residual_coupling,
        mode_symmetric: wc_minus - wd,
        mode_antisymmetric: wc_plus - wd,
        h_q_eff: h,
        kappa: params.kappa,
        gamma: params.gamma,
        gamma_phi: params.gamma_phi,
        dephasing: params.dephasing,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct TildeStates {
    /// Labels in the order of `energies`, i.e. ascending energy.
    pub labels: Vec<Bell>,
    pub energies: Vec<f64>,
    /// Eigenvectors as columns in the (gg, ge, eg, ee) basis.
    pub vectors: Mat<C64>,
}

impl TildeStates {
    pub fn index(&self, b: Bell) -> usize {
        self.labels.iter().position(|&x| x == b).expect("every Bell label is assigned")
    }

    pub fn energy(&self, b: Bell) -> f64 {
        self.energies[self.index(b)]
    }

    pub fn vector(&self, b: Bell) -> [C64; 4] {
        let k = self.index(b);
        [self.vectors[(0, k)], self.vectors[(1, k)], self.vectors[(2, k)], self.vectors[(3, k)]]
    }
}

/// Diagonalises h_q_eff and names each eigenvector after the Bell state it resembles most
/// (assignment maximising the summed overlaps).
pub fn effective_eigenstates(em: &EffectiveModel) -> Result<TildeStates> {
    let (energies, vectors) = linalg::eigh(&em.h_q_eff)?;
    let over = |k: usize, b: Bell| -> f64 {
        let v = b.qubit_vector();
        (0..4).map(|r| v[r].conj() * vectors[(r, k)]).sum::<C64>().norm_sqr()
    };
    let mut best = (f64::NEG_INFINITY, [Bell::TPlus; 4]);
    for perm in permutations4() {
        let labels = perm.map(|i| Bell::ALL[i]);
        let score: f64 = (0..4).map(|k| over(k, labels[k])).sum();
        if score > best.0 + 1e-15 {
            best = (score, labels);
        }
    }
    Ok(TildeStates { labels: best.1.to_vec(), energies, vectors })
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                if a == b || a == c || b == c {
                    continue;
                }
                let d = 6 - a - b - c;
                if d != a && d != b && d != c {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Mode D at omega_c^- with coupling operator sigma_z1 + sigma_z2.
    Symmetric,
    /// Mode d at omega_c^+ with coupling operator sigma_z1 - sigma_z2.
    Antisymmetric,
}

/// Lorentzian density of states of one fluctuation mode, normalised to one.
pub fn lorentzian(omega: f64, center: f64, kappa: f64) -> f64 {
    (kappa / (2.0 * PI)) / ((omega - center).powi(2) + 0.25 * kappa * kappa)
}

/// gamma(omega) = 2 pi |c|^2 rho(omega) of the requested fluctuation mode.
pub fn spectral_function(omega: f64, branch: Branch, em: &EffectiveModel, kappa: f64) -> f64 {
    let center = match branch {
        Branch::Symmetric => em.mode_symmetric,
        Branch::Antisymmetric => em.mode_antisymmetric,
    };
    2.0 * PI * em.residual_coupling.norm_sqr() * lorentzian(omega, center, kappa)
}

#[derive(Debug, Clone)]
pub struct RateModel {
    pub energies: Vec<f64>,
    pub eigenvectors: Mat<C64>,
    /// A^alpha_{ik} = <i|A_alpha|k> in the eigenbasis.
    pub jump_matrix_elements: Vec<Mat<C64>>,
    /// transition_rates[i][k] = Gamma_{i -> k}
    pub transition_rates: Vec<Vec<f64>>,
    /// Decay constants lambda_{kl} of the eigenbasis coherences.
    pub dephasing_constants: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// Transition frequencies closer than this make the secular rate picture ill-defined.
pub const DEGENERACY_ERROR: f64 = 1e-9;
pub const DEGENERACY_WARNING: f64 = 1e-6;

fn to_eigenbasis(u: &Mat<C64>, a: &Mat<C64>) -> Mat<C64> {
    &linalg::dagger(u) * a * u
}

/// Golden-rule rates Gamma_{i->k} = sum_a gamma_a(E_i - E_k) |A^a_{ik}|^2 and coherence decay
/// constants lambda_{kl} = (sum_i Gamma_{k->i} + sum_i Gamma_{l->i}) / 2.
pub fn bloch_redfield_rates<F>(h_sys: &Mat<C64>, coupling_ops: &[Mat<C64>], spectral: F) -> Result<RateModel>
where
    F: Fn(usize, f64) -> f64,
{
    let dev = linalg::hermiticity_defect(h_sys);
    if dev > 1e-12 * linalg::max_abs(h_sys).max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let (energies, u) = linalg::eigh(h_sys)?;
    let n = energies.len();
    let mut warnings = Vec::new();
    let gap = energies.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if gap < DEGENERACY_ERROR {
        return Err(Error::Degenerate { gap });
    }
    if gap < DEGENERACY_WARNING {
        warnings.push(format!("near-degenerate spectrum (gap {gap:.3e})"));
    }
    let jumps: Vec<Mat<C64>> = coupling_ops.iter().map(|a| to_eigenbasis(&u, a)).collect();
    let mut rates = vec![vec![0.0; n]; n];
    for (alpha, a) in jumps.iter().enumerate() {
        for i in 0..n {
            for k in 0..n {
                let m = a[(i, k)].norm_sqr();
                if m > 0.0 {
                    rates[i][k] += spectral(alpha, energies[i] - energies[k]).max(0.0) * m;
                }
            }
        }
    }
    let out_rate: Vec<f64> = (0..n).map(|k| rates[k].iter().sum()).collect();
    let lambda = (0..n).map(|k| (0..n).map(|l| 0.5 * (out_rate[k] + out_rate[l])).collect()).collect();
    Ok(RateModel { energies, eigenvectors: u, jump_matrix_elements: jumps, transition_rates: rates, dephasing_constants: lambda, warnings })
}

impl RateModel {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Closed-form evolution of an eigenbasis coherence, rho_kl(0) exp(-(lambda_kl + i omega_kl) t).
    pub fn coherence_at(&self, k: usize, l: usize, rho_kl0: C64, t: f64) -> C64 {
        let w = self.energies[k] - self.energies[l];
        rho_kl0 * C64::new(-self.dephasing_constants[k][l] * t, -w * t).exp()
    }

    /// Adds flat-spectrum channels rate * |<k|C|i>|^2 for collapse operators C given in the
    /// original basis.
    pub fn with_extra_channels(&self, channels: &[(Mat<C64>, f64)]) -> RateModel {
        let mut out = self.clone();
        let n = self.dim();
        for (c, rate) in channels {
            let ce = to_eigenbasis(&self.eigenvectors, c);
            for i in 0..n {
                for k in 0..n {
                    out.transition_rates[i][k] += rate * ce[(k, i)].norm_sqr();
                }
            }
        }
        let out_rate: Vec<f64> = (0..n).map(|k| out.transition_rates[k].iter().sum()).collect();
        out.dephasing_constants = (0..n).map(|k| (0..n).map(|l| 0.5 * (out_rate[k] + out_rate[l])).collect()).collect();
        out
    }
}

/// Number of closed communicating classes of the directed rate graph.
pub fn closed_classes(rates: &[Vec<f64>]) -> usize {
    let n = rates.len();
    let scale = rates.iter().flatten().copied().fold(0.0, f64::max);
    let thr = 1e-14 * scale;
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for k in 0..n {
            if i != k && rates[i][k] > thr {
                reach[i][k] = true;
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            if reach[i][m] {
                for k in 0..n {
                    if reach[m][k] {
                        reach[i][k] = true;
                    }
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut closed = 0;
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&k| reach[i][k] && reach[k][i]).collect();
        class.iter().for_each(|&k| seen[k] = true);
        let leaves = class.iter().any(|&a| (0..n).any(|b| reach[a][b] && !class.contains(&b)));
        if !leaves {
            closed += 1;
        }
    }
    closed
}

/// Stationary populations of the rate equations, optionally with flat extra channels.
pub fn rate_steady_state(rm: &RateModel, extra: &[(Mat<C64>, f64)]) -> Result<Vec<f64>> {
    let m = if extra.is_empty() { rm.clone() } else { rm.with_extra_channels(extra) };
    let n = m.dim();
    let classes = closed_classes(&m.transition_rates);
    if classes != 1 {
        return Err(Error::Reducible { closed_classes: classes });
    }
    let mut w = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            if i != k {
                w[(k, i)] += m.transition_rates[i][k];
                w[(i, i)] -= m.transition_rates[i][k];
            }
        }
    }
    let mut rhs = Mat::<f64>::zeros(n, 1);
    for i in 0..n {
        w[(0, i)] = 1.0;
    }
    rhs[(0, 0)] = 1.0;
    let p = w.partial_piv_lu().solve(&rhs);
    let mut pops: Vec<f64> = (0..n).map(|i| p[(i, 0)].max(0.0)).collect();
    let s: f64 = pops.iter().sum();
    pops.iter_mut().for_each(|x| *x /= s);
    Ok(pops)
}

/// Qubit decay and dephasing as flat channels on the 4x4 qubit space.
pub fn qubit_channels(em: &EffectiveModel) -> Vec<(Mat<C64>, f64)> {
    let mut out = Vec::new();
    for site in 0..2 {
        if em.gamma > 0.0 {
            // |g><e| = (sigma_x + i sigma_y)/2 in the (g, e) ordering
            let sm = (pauli2('x', site) + pauli2('y', site) * faer::Scale(C64::new(0.0, 1.0))) * faer::Scale(C64::new(0.5, 0.0));
            out.push((sm, em.gamma));
        }
        if em.gamma_phi > 0.0 {
            let f = em.dephasing.prefactor();
            out.push((pauli2('z', site), em.gamma_phi * f * f));
        }
    }
    out
}

/// Rate model of the dressed qubit states coupled to the D and d fluctuation baths.
pub fn effective_rate_model(em: &EffectiveModel) -> Result<RateModel> {
    let a1 = pauli2('z', 0) + pauli2('z', 1);
    let a2 = pauli2('z', 0) - pauli2('z', 1);
    bloch_redfield_rates(&em.h_q_eff, &[a1, a2], |alpha, w| {
        let branch = if alpha == 0 { Branch::Symmetric } else { Branch::Antisymmetric };
        spectral_function(w, branch, em, em.kappa)
    })
}

#[derive(Debug, Clone)]
pub struct RatePicture {
    pub omega_d: f64,
    pub tilde: TildeStates,
    pub gamma_tminus_to_s: f64,
    pub gamma_s_to_tplus: f64,
    pub gamma_tminus_to_t0: f64,
    /// Stationary populations of the tilde states, indexed like `tilde.labels`.
    pub populations: Vec<f64>,
    pub f_s: f64,
    pub f_t0: f64,
}

/// Rates and rate-equation steady state at one drive frequency.
pub fn rate_picture(params: &ModelParams) -> Result<RatePicture> {
    let em = schrieffer_wolff(params)?;
    let tilde = effective_eigenstates(&em)?;
    let rm = effective_rate_model(&em)?;
    // the rate model diagonalises the same matrix; map its eigen-ordering onto the labels
    let pops = rate_steady_state(&rm, &qubit_channels(&em))?;
    let idx = |b: Bell| tilde.index(b);
    let r = &rm.transition_rates;
    let fid = |b: Bell| -> f64 {
        let v = b.qubit_vector();
        (0..4)
            .map(|k| {
                let o: C64 = (0..4).map(|q| v[q].conj() * rm.eigenvectors[(q, k)]).sum();
                pops[k] * o.norm_sqr()
            })
            .sum()
    };
    Ok(RatePicture {
        omega_d: params.omega_d,
        gamma_tminus_to_s: r[idx(Bell::TMinus)][idx(Bell::Singlet)],
        gamma_s_to_tplus: r[idx(Bell::Singlet)][idx(Bell::TPlus)],
        gamma_tminus_to_t0: r[idx(Bell::TMinus)][idx(Bell::T0)],
        f_s: fid(Bell::Singlet),
        f_t0: fid(Bell::T0),
        populations: pops,
        tilde,
    })
}

/// Drive frequency solving `condition(omega_d) = 0` by bisection on [lo, hi].
pub fn solve_frequency<F: Fn(f64) -> Result<f64>>(condition: F, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (condition(a)?, condition(b)?);
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidArgument(format!("no sign change of the resonance condition on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a < 1e-12 {
            break;
        }
        let fm = condition(m)?;
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

fn at_drive(params: &ModelParams, wd: f64) -> ModelParams {
    let mut p = params.clone();
    p.omega_d = wd;
    p
}

/// omega_d where E_{T-~} - E_S = omega_c^+ - omega_d.
pub fn singlet_resonance(params: &ModelParams, lo: f64, hi: f64) -> Result<f64> {
    solve_frequency(
        |wd| {
            let em = schrieffer_wolff(&at_drive(params, wd))?;
            let t = effective_eigenstates(&em)?;
            Ok(t.energy(Bell::TMinus) - t.energy(Bell::Singlet) - em.mode_antisymmetric)
        },
        lo,
        hi,
    )
}

/// omega_d where E_{T-~} - E_{T0~} = omega_c^- - omega_d.
pub fn triplet_resonance(params: &ModelParams, lo: f64, hi: f64) -> Result<f64> {
    solve_frequency(
        |wd| {
            let em = schrieffer_wolff(&at_drive(params, wd))?;
            let t = effective_eigenstates(&em)?;
            Ok(t.energy(Bell::TMinus) - t.energy(Bell::T0) - em.mode_symmetric)
        },
        lo,
        hi,
    )
}

/// omega_d where E_S - E_{T+~} = omega_c^+ - omega_d.
pub fn singlet_depletion_resonance(params: &ModelParams, lo: f64, hi: f64) -> Result<f64> {
    solve_frequency(
        |wd| {
            let em = schrieffer_wolff(&at_drive(params, wd))?;
            let t = effective_eigenstates(&em)?;
            Ok(t.energy(Bell::Singlet) - t.energy(Bell::TPlus) - em.mode_antisymmetric)
        },
        lo,
        hi,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPeaks {
    /// Drive frequency maximising Gamma_{T-~ -> S}.
    pub omega_in: f64,
    /// Drive frequency maximising Gamma_{S -> T+~}.
    pub omega_out: f64,
    /// |omega_in - omega_out|
    pub separation: f64,
    /// Half the difference of the two transition frequencies at the midpoint drive.
    pub expected: f64,
}

/// Locates the Gamma_{T-~ -> S} and Gamma_{S -> T+~} maxima inside [lo, hi] and compares
/// their separation with the dressed-level splitting.
pub fn gamma_peaks(params: &ModelParams, lo: f64, hi: f64) -> Result<GammaPeaks> {
    let w_s = singlet_resonance(params, lo, hi)?;
    let w_dep = singlet_depletion_resonance(params, lo, hi)?;
    let hw = 2e-3;
    let omega_in = golden_max(|wd| Ok(rate_picture(&at_drive(params, wd))?.gamma_tminus_to_s), w_s - hw, w_s + hw, 40)?.0;
    let omega_out = golden_max(|wd| Ok(rate_picture(&at_drive(params, wd))?.gamma_s_to_tplus), w_dep - hw, w_dep + hw, 40)?.0;
    let t = effective_eigenstates(&schrieffer_wolff(&at_drive(params, 0.5 * (omega_in + omega_out)))?)?;
    let w_in = t.energy(Bell::TMinus) - t.energy(Bell::Singlet);
    let w_out = t.energy(Bell::Singlet) - t.energy(Bell::TPlus);
    // both conditions have slope 2 in omega_d
    Ok(GammaPeaks { omega_in, omega_out, separation: (omega_in - omega_out).abs(), expected: 0.5 * (w_in - w_out).abs() })
}

/// Lindblad model of the two dressed qubits and the fluctuation modes; photon slot 0 of the
/// space holds D and slot 1 holds d.
#[derive(Debug, Clone)]
pub struct SwLindbladModel {
    pub space: HilbertSpace,
    pub hamiltonian: CsrMatrix,
    pub collapses: Vec<CsrMatrix>,
}

pub fn sw_lindblad_model(em: &EffectiveModel, n_max: u32) -> Result<SwLindbladModel> {
    let space = HilbertSpace::build(2, CutoffSpec::PerModeMax(n_max))?;
    let cr = |x: f64| C64::new(x, 0.0);
    let c = em.residual_coupling;
    let sz = [sigma_z(&space, 0), sigma_z(&space, 1)];
    let a1 = sz[0].add(&sz[1]);
    let a2 = sz[0].add(&sz[1].scale(cr(-1.0)));
    let dsym = annihilate(&space, 0);
    let danti = annihilate(&space, 1);
    let bath = |m: &CsrMatrix| m.adjoint().scale(c).add(&m.scale(c.conj()));
    let xx = sigma_x(&space, 0).matmul(&sigma_x(&space, 1)).add(&sigma_y(&space, 0).matmul(&sigma_y(&space, 1)));
    let mut h = sigma_x(&space, 0)
        .add(&sigma_x(&space, 1))
        .scale(cr(0.5 * em.rabi))
        .add(&a1.scale(cr(0.5 * em.delta_tilde)))
        .add(&xx.scale(cr(-0.5 * em.qq_coupling)))
        .add(&photon_number(&space, 0).scale(cr(em.mode_symmetric)))
        .add(&photon_number(&space, 1).scale(cr(em.mode_antisymmetric)));
    h = h.add(&bath(&dsym).matmul(&a1)).add(&bath(&danti).matmul(&a2));
    let mut collapses = Vec::new();
    if em.kappa > 0.0 {
        collapses.push(dsym.scale(cr(em.kappa.sqrt())));
        collapses.push(danti.scale(cr(em.kappa.sqrt())));
    }
    for site in 0..2 {
        if em.gamma > 0.0 {
            collapses.push(sigma_minus(&space, site).scale(cr(em.gamma.sqrt())));
        }
        if em.gamma_phi > 0.0 {
            collapses.push(sigma_z(&space, site).scale(cr(em.gamma_phi.sqrt() * em.dephasing.prefactor())));
        }
    }
    Ok(SwLindbladModel { space, hamiltonian: h, collapses })
}

/// |q> (x) |n_D, n_d> in the effective-model space.
pub fn sw_product_state(space: &HilbertSpace, qubit: &[C64; 4], n_sym: u32, n_anti: u32) -> Result<StateVector> {
    let mut v = vec![ZERO; space.dim()];
    for (q, &amp) in qubit.iter().enumerate() {
        if amp != ZERO {
            let b = BasisState::new(vec![(q >> 1) as u8, (q & 1) as u8], vec![n_sym, n_anti]);
            v[space.index_of(&b).ok_or_else(|| Error::Truncation(b.to_string()))?] += amp;
        }
    }
    Ok(StateVector { amplitudes: v })
}

/// Effective-model Hamiltonian as a function of the drive frequency.
pub fn sw_hamiltonian_at(params: &ModelParams, n_max: u32) -> impl Fn(f64) -> Result<CsrMatrix> + Sync + '_ {
    move |wd| Ok(sw_lindblad_model(&schrieffer_wolff(&at_drive(params, wd))?, n_max)?.hamiltonian)
}

/// Steady state of the effective Lindblad model at one drive frequency.
pub fn sw_steady_state(params: &ModelParams, n_max: u32, opts: &SteadyOptions) -> Result<SteadyStateResult> {
    let m = sw_lindblad_model(&schrieffer_wolff(params)?, n_max)?;
    let l = build_liouvillian(&m.hamiltonian, &m.collapses)?;
    steady_state(&m.space, &l, None, opts)
}

pub const SW_FLUCTUATION_CUTOFF: u32 = 2;

/// Steady states of the effective Lindblad model across drive frequencies.
pub fn sw_steady_sweep(omega_d_grid: &[f64], params: &ModelParams, n_max: u32, opts: &SteadyOptions) -> Result<Vec<SweepPoint>> {
    if omega_d_grid.is_empty() {
        return Err(Error::InvalidArgument("empty drive-frequency grid".into()));
    }
    omega_d_grid
        .par_iter()
        .map(|&wd| {
            Ok(SweepPoint { omega_d: wd, result: sw_steady_state(&at_drive(params, wd), n_max, opts)? })
        })
        .collect()
}

/// Populations and largest coherence of a qubit density matrix in the tilde eigenbasis.
pub fn tilde_basis_view(tilde: &TildeStates, rho_q: &Mat<C64>) -> Vec<Vec<C64>> {
    let u = &tilde.vectors;
    let r = &linalg::dagger(u) * rho_q * u;
    (0..4).map(|i| (0..4).map(|j| r[(i, j)]).collect()).collect()
}

#[derive(Debug, Clone)]
pub struct TwoLevelModel {
    /// Basis (vacuum, target).
    pub hamiltonian: [[C64; 2]; 2],
    pub rabi_eff: f64,
    pub detuning: f64,
    pub warnings: Vec<String>,
}

/// Adiabatically eliminated vacuum/target model of the homogeneously qubit-driven N-site array:
/// off-diagonal sqrt(N) eps_q, target energy Delta_qd - g^2 / Delta_cd^-.
pub fn effective_two_level(params: &ModelParams, n_sites: usize) -> Result<TwoLevelModel> {
    let eps = params.drive.amplitudes.first().map_or(0.0, |a| a.norm());
    let dqd = params.omega_q - params.omega_d;
    let dcd = params.omega_c - params.omega_d - (n_sites as f64 - 1.0) * params.uniform_hopping();
    if dcd.abs() < 1e-12 {
        return Err(Error::InvalidArgument("Delta_cd^- = 0: adiabatic elimination is singular".into()));
    }
    let mut warnings = Vec::new();
    let scale = dqd.abs().max(eps).max(params.g);
    if dcd.abs() < 3.0 * scale {
        warnings.push(format!("|Delta_cd^-| = {:.3} is not large against {:.3}", dcd.abs(), scale));
    }
    let off = C64::new((n_sites as f64).sqrt() * eps, 0.0);
    let detuning = dqd - params.g * params.g / dcd;
    Ok(TwoLevelModel { hamiltonian: [[ZERO, off], [off, C64::new(detuning, 0.0)]], rabi_eff: 2.0 * off.re, detuning, warnings })
}
