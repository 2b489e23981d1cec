//! Liouvillian steady states, drive-frequency sweeps and resonance location.

use faer::linalg::solvers::Solve;
use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{partial_trace_qubits, Bell, DensityMatrix, HilbertSpace, SignedPermutation, StateVector};
use crate::liouvillian::{build_liouvillian, commutes_with, SuperoperatorMatrix};
use crate::linalg::{self, CsrMatrix, C64, ONE, ZERO};
use crate::model::{build_hamiltonian, collapse_ops, create, ModelParams};
use crate::spectral::eigendecompose;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    /// Pivots below this fraction of the largest pivot count as null directions.
    pub pivot_tolerance: f64,
    /// Reduce to the exchange-even operator sector when the Liouvillian allows it.
    pub use_symmetry: bool,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions { pivot_tolerance: 1e-12, use_symmetry: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BellFidelities {
    pub t_plus: f64,
    pub t0: f64,
    pub s: f64,
    pub t_minus: f64,
}

impl BellFidelities {
    pub fn get(&self, b: Bell) -> f64 {
        match b {
            Bell::TPlus => self.t_plus,
            Bell::T0 => self.t0,
            Bell::Singlet => self.s,
            Bell::TMinus => self.t_minus,
        }
    }

    pub fn of(rho_q: &DensityMatrix) -> Self {
        let f = |b: Bell| {
            let v = b.qubit_vector();
            let mut acc = ZERO;
            for i in 0..4 {
                for j in 0..4 {
                    acc += v[i].conj() * rho_q.elements[(i, j)] * v[j];
                }
            }
            acc.re
        };
        BellFidelities { t_plus: f(Bell::TPlus), t0: f(Bell::T0), s: f(Bell::Singlet), t_minus: f(Bell::TMinus) }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    pub rho_ss: DensityMatrix,
    /// ||L vec(rho_ss)||_2
    pub residual: f64,
    /// Induced infinity norm of L.
    pub liouvillian_norm: f64,
    pub min_eigenvalue: f64,
    /// Bell-state fidelities of the reduced qubit state (two-site models only).
    pub qubit_fidelities: Option<BellFidelities>,
    /// tr rho_q^2 of the reduced qubit state.
    pub purity: f64,
    pub reduced_qubits: DensityMatrix,
}

/// Operator-space basis of the sector even under rho -> P rho P^+.
struct EvenSector {
    /// For each vec index: (sector column, coefficient); None if the element is odd-only.
    coef: Vec<Option<(usize, f64)>>,
    columns: Vec<Vec<(usize, f64)>>,
}

impl EvenSector {
    fn trivial(d2: usize) -> Self {
        EvenSector { coef: (0..d2).map(|p| Some((p, 1.0))).collect(), columns: (0..d2).map(|p| vec![(p, 1.0)]).collect() }
    }

    fn new(d: usize, sym: &SignedPermutation) -> Self {
        let d2 = d * d;
        let mut coef = vec![None; d2];
        let mut seen = vec![false; d2];
        let mut columns = Vec::new();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for p in 0..d2 {
            if seen[p] {
                continue;
            }
            let (i, j) = (p % d, p / d);
            let q = sym.perm[i] + sym.perm[j] * d;
            let s = sym.signs[i] * sym.signs[j];
            seen[p] = true;
            seen[q] = true;
            if q == p {
                if s > 0.0 {
                    coef[p] = Some((columns.len(), 1.0));
                    columns.push(vec![(p, 1.0)]);
                }
            } else {
                coef[p] = Some((columns.len(), r));
                coef[q] = Some((columns.len(), s * r));
                columns.push(vec![(p, r), (q, s * r)]);
            }
        }
        EvenSector { coef, columns }
    }
}

/// Bordered solve: one row of the (reduced) Liouvillian is replaced by the trace functional.
pub fn solve_steady_state(
    l: &SuperoperatorMatrix,
    symmetry: Option<&SignedPermutation>,
    opts: &SteadyOptions,
) -> Result<(DensityMatrix, f64)> {
    let d = l.dim;
    let d2 = d * d;
    let sector = match symmetry {
        Some(s) => EvenSector::new(d, s),
        None => EvenSector::trivial(d2),
    };
    let n = sector.columns.len();
    let mut m = Mat::<C64>::zeros(n, n);
    for (r, c, v) in l.elements.triplets() {
        if let (Some((a, ca)), Some((b, cb))) = (sector.coef[r], sector.coef[c]) {
            m[(a, b)] += v * (ca * cb);
        }
    }
    let mut w = vec![0.0f64; n];
    for i in 0..d {
        if let Some((a, ca)) = sector.coef[i + i * d] {
            w[a] += ca;
        }
    }
    let r0 = sector.coef[0].map(|(a, _)| a).ok_or_else(|| Error::Singular("vacuum population outside the even sector".into()))?;
    for b in 0..n {
        m[(r0, b)] = C64::new(w[b], 0.0);
    }
    let lu = m.partial_piv_lu();
    let u = lu.U();
    let piv: Vec<f64> = (0..n).map(|k| u[(k, k)].norm()).collect();
    let pmax = piv.iter().copied().fold(0.0, f64::max);
    let small = piv.iter().filter(|&&p| p <= opts.pivot_tolerance * pmax).count();
    if small > 0 {
        return Err(Error::DegenerateNullSpace { dimension: small + 1 });
    }
    let mut rhs = Mat::<C64>::zeros(n, 1);
    rhs[(r0, 0)] = ONE;
    let mut x = lu.solve(&rhs);

    let expand = |x: &Mat<C64>| {
        let mut v = vec![ZERO; d2];
        for (col, entries) in sector.columns.iter().enumerate() {
            for &(p, c) in entries {
                v[p] += x[(col, 0)] * c;
            }
        }
        v
    };
    // one step of iterative refinement on the bordered system
    {
        let v = expand(&x);
        let mut lv = vec![ZERO; d2];
        l.elements.matvec(&v, &mut lv);
        let mut res = Mat::<C64>::zeros(n, 1);
        for (p, &val) in lv.iter().enumerate() {
            if let Some((a, ca)) = sector.coef[p] {
                res[(a, 0)] += val * ca;
            }
        }
        let tr: C64 = (0..n).map(|b| x[(b, 0)] * w[b]).sum();
        res[(r0, 0)] = tr - ONE;
        let dx = lu.solve(&res);
        x = &x - &dx;
    }
    let v = expand(&x);
    let rho = linalg::unvec(&v, d);
    let tr = linalg::trace(&rho);
    let rho = linalg::hermitize(&(&rho * faer::Scale(ONE / tr)));
    let mut lv = vec![ZERO; d2];
    l.elements.matvec(&linalg::vec_of(&rho), &mut lv);
    Ok((DensityMatrix { elements: rho }, linalg::norm2(&lv)))
}

pub fn analyze(space: &HilbertSpace, l: &SuperoperatorMatrix, rho: DensityMatrix, residual: f64) -> Result<SteadyStateResult> {
    let rq = partial_trace_qubits(space, &rho)?;
    let min_eigenvalue = linalg::eigvalsh(&rho.elements)?.first().copied().unwrap_or(0.0);
    Ok(SteadyStateResult {
        residual,
        liouvillian_norm: l.elements.norm_inf(),
        min_eigenvalue,
        qubit_fidelities: (space.n_sites() == 2).then(|| BellFidelities::of(&rq)),
        purity: rq.purity(),
        reduced_qubits: rq,
        rho_ss: rho,
    })
}

/// Steady state of `l`; the site-swap sector reduction is used when `symmetry` is given and
/// commutes with `l`.
pub fn steady_state(
    space: &HilbertSpace,
    l: &SuperoperatorMatrix,
    symmetry: Option<&SignedPermutation>,
    opts: &SteadyOptions,
) -> Result<SteadyStateResult> {
    if l.dim != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: l.dim });
    }
    let sym = symmetry.filter(|s| opts.use_symmetry && commutes_with(l, s, 1e-12 * l.elements.max_abs().max(1.0)));
    let (rho, residual) = solve_steady_state(l, sym, opts)?;
    analyze(space, l, rho, residual)
}

/// Liouvillian of the continuously driven model.
pub fn model_liouvillian(space: &HilbertSpace, params: &ModelParams) -> Result<SuperoperatorMatrix> {
    build_liouvillian(&build_hamiltonian(space, params, 1.0)?, &collapse_ops(space, params)?)
}

/// Site swap used for two-site models.
pub fn default_symmetry(space: &HilbertSpace) -> Option<SignedPermutation> {
    (space.n_sites() == 2).then(|| SignedPermutation::site_swap(space, 0, 1).ok()).flatten()
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub omega_d: f64,
    pub result: SteadyStateResult,
}

pub fn steady_sweep(space: &HilbertSpace, omega_d_grid: &[f64], params: &ModelParams, opts: &SteadyOptions) -> Result<Vec<SweepPoint>> {
    if omega_d_grid.is_empty() {
        return Err(Error::InvalidArgument("empty drive-frequency grid".into()));
    }
    let sym = default_symmetry(space);
    omega_d_grid
        .par_iter()
        .map(|&wd| {
            let mut p = params.clone();
            p.omega_d = wd;
            let l = model_liouvillian(space, &p)?;
            let result = steady_state(space, &l, sym.as_ref(), opts)
                .map_err(|e| Error::Cell { delta: p.delta(), omega_d: wd, source: Box::new(e) })?;
            Ok(SweepPoint { omega_d: wd, result })
        })
        .collect()
}

/// Trace distance between reduced qubit steady states at cutoffs n_max and n_max + 1.
pub fn truncation_convergence(params: &ModelParams, n_max: u32, opts: &SteadyOptions) -> Result<f64> {
    let n = params.n_sites();
    let mut out = Vec::new();
    for m in [n_max, n_max + 1] {
        let space = HilbertSpace::build(n, crate::hilbert::CutoffSpec::PerModeMax(m))?;
        let l = model_liouvillian(&space, params)?;
        out.push(steady_state(&space, &l, default_symmetry(&space).as_ref(), opts)?.reduced_qubits);
    }
    linalg::trace_distance(&out[0].elements, &out[1].elements)
}

/// A resonance line re-located at cutoff n_max + 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakShift {
    pub omega_peak: f64,
    pub value: f64,
    /// Shift of the peak position relative to the cutoff-n_max peak.
    pub position_shift: f64,
    /// Change of the peak value relative to the cutoff-n_max peak.
    pub value_shift: f64,
}

/// Re-locates a peak found at cutoff `n_max` (position `peak.0`, value `peak.1`) with one more
/// photon per mode, searching `peak.0 +- half_width`. A narrow line whose level shifts slightly
/// with the cutoff shows up here as a position shift rather than as a large state difference.
#[allow(clippy::too_many_arguments)]
pub fn peak_convergence<P, S>(
    params_at: P,
    score: S,
    n_sites: usize,
    n_max: u32,
    peak: (f64, f64),
    half_width: f64,
    iters: usize,
    opts: &SteadyOptions,
) -> Result<PeakShift>
where
    P: Fn(f64) -> ModelParams,
    S: Fn(&SteadyStateResult) -> Result<f64>,
{
    let space = HilbertSpace::build(n_sites, crate::hilbert::CutoffSpec::PerModeMax(n_max + 1))?;
    let sym = default_symmetry(&space);
    let (w, v) = golden_max(
        |wd| score(&steady_state(&space, &model_liouvillian(&space, &params_at(wd))?, sym.as_ref(), opts)?),
        peak.0 - half_width,
        peak.0 + half_width,
        iters,
    )?;
    Ok(PeakShift { omega_peak: w, value: v, position_shift: w - peak.0, value_shift: v - peak.1 })
}

#[derive(Debug, Clone)]
pub struct ResonanceCandidate {
    pub label: String,
    pub state: StateVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anticrossing {
    pub label: String,
    pub omega_d: f64,
}

/// Two-site state |q> (x) |n_sym, n_anti> with the photons in the normal modes D = (a_1 + a_2)/sqrt2
/// and d = (a_1 - a_2)/sqrt2; `qubit` is given in the (gg, ge, eg, ee) basis.
pub fn normal_mode_fock(space: &HilbertSpace, qubit: &[C64; 4], n_sym: u32, n_anti: u32) -> Result<StateVector> {
    if space.n_sites() != 2 {
        return Err(Error::InvalidArgument("normal modes are defined for two sites".into()));
    }
    let mut v = vec![ZERO; space.dim()];
    for (q, &amp) in qubit.iter().enumerate() {
        if amp != ZERO {
            let b = crate::hilbert::BasisState::new(vec![(q >> 1) as u8, (q & 1) as u8], vec![0, 0]);
            v[space.index_of(&b).ok_or_else(|| Error::Truncation(b.to_string()))?] += amp;
        }
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (c1, c2) = (create(space, 0), create(space, 1));
    let dsym = c1.add(&c2).scale(C64::new(r, 0.0));
    let danti = c1.add(&c2.scale(C64::new(-1.0, 0.0))).scale(C64::new(r, 0.0));
    let before = linalg::norm2(&v);
    let mut norm = 1.0;
    for (op, n) in [(&dsym, n_sym), (&danti, n_anti)] {
        for k in 1..=n {
            let mut w = vec![ZERO; v.len()];
            op.matvec(&v, &mut w);
            v = w;
            norm *= (k as f64).sqrt();
        }
    }
    let expected = before * norm;
    let got = linalg::norm2(&v);
    if (got - expected).abs() > 1e-10 * expected.max(1.0) {
        return Err(Error::Truncation(format!("normal-mode state ({n_sym}, {n_anti}) exceeds the cutoff")));
    }
    Ok(StateVector { amplitudes: v.into_iter().map(|x| x / got * before).collect() })
}

/// Energy of the dressed state overlapping most with `cand` minus that of the one overlapping
/// most with `reference`.
fn labelled_gap(h: &CsrMatrix, reference: &StateVector, cand: &StateVector) -> Result<f64> {
    let es = eigendecompose(h)?;
    let pick = |s: &StateVector| {
        let f = es.fidelities_with(s);
        let mut k = 0;
        for i in 0..f.len() {
            if f[i] > f[k] {
                k = i;
            }
        }
        es.eigenvalues[k]
    };
    Ok(pick(cand) - pick(reference))
}

/// Finds drive frequencies where a candidate dressed state crosses the reference dressed state.
/// The labelled gap flips sign there; sign flips with a large jump are level-labeling
/// artefacts and are discarded.
pub fn locate_anticrossings<F>(
    hamiltonian_at: F,
    reference: &StateVector,
    candidates: &[ResonanceCandidate],
    grid: &[f64],
    max_jump: f64,
) -> Result<Vec<Anticrossing>>
where
    F: Fn(f64) -> Result<CsrMatrix> + Sync,
{
    let found: Vec<Vec<Anticrossing>> = candidates
        .par_iter()
        .map(|c| {
            let gaps: Vec<f64> = grid.iter().map(|&w| labelled_gap(&hamiltonian_at(w)?, reference, &c.state)).collect::<Result<_>>()?;
            let mut out = Vec::new();
            for k in 1..grid.len() {
                if gaps[k - 1].signum() == gaps[k].signum() {
                    continue;
                }
                let (mut a, mut b, mut ga, mut gb) = (grid[k - 1], grid[k], gaps[k - 1], gaps[k]);
                for _ in 0..60 {
                    if b - a < 1e-10 {
                        break;
                    }
                    let m = 0.5 * (a + b);
                    let gm = labelled_gap(&hamiltonian_at(m)?, reference, &c.state)?;
                    if gm.signum() == ga.signum() {
                        a = m;
                        ga = gm;
                    } else {
                        b = m;
                        gb = gm;
                    }
                }
                if ga.abs() < max_jump && gb.abs() < max_jump {
                    out.push(Anticrossing { label: c.label.clone(), omega_d: 0.5 * (a + b) });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<Anticrossing> = found.into_iter().flatten().collect();
    all.sort_by(|a, b| a.omega_d.partial_cmp(&b.omega_d).unwrap());
    Ok(all)
}

/// Uniform grid plus dense clusters of half-width `half_width` around each anticrossing.
pub fn resonance_grid(lo: f64, hi: f64, coarse_points: usize, centers: &[f64], half_width: f64, cluster_points: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..coarse_points.max(2)).map(|k| lo + (hi - lo) * k as f64 / (coarse_points.max(2) - 1) as f64).collect();
    for &c in centers {
        let m = cluster_points.max(2);
        for k in 0..m {
            let w = c - half_width + 2.0 * half_width * k as f64 / (m - 1) as f64;
            if (lo..=hi).contains(&w) {
                g.push(w);
            }
        }
    }
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    g
}

/// Golden-section maximisation of a unimodal function on [a, b].
pub fn golden_max<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonancePeak {
    pub label: String,
    pub omega_anticrossing: f64,
    pub omega_peak: f64,
    pub value: f64,
}

/// Golden-section refinement of `score(anticrossing, omega_d)` within +- `half_width` of each
/// anticrossing.
pub fn resonance_peaks<F>(anticrossings: &[Anticrossing], half_width: f64, iters: usize, score: F) -> Result<Vec<ResonancePeak>>
where
    F: Fn(&Anticrossing, f64) -> Result<f64> + Sync,
{
    anticrossings
        .par_iter()
        .map(|ac| {
            let (w, v) = golden_max(|x| score(ac, x), ac.omega_d - half_width, ac.omega_d + half_width, iters)?;
            Ok(ResonancePeak { label: ac.label.clone(), omega_anticrossing: ac.omega_d, omega_peak: w, value: v })
        })
        .collect()
}

/// S and T0 dressed with the photon occupations `modes`, labelled "S+1D+0d" etc.; `make` builds
/// the state from a (gg, ge, eg, ee) qubit vector and the two mode occupations.
pub fn bell_candidates<F>(modes: &[(u32, u32)], make: F) -> Result<Vec<ResonanceCandidate>>
where
    F: Fn(&[C64; 4], u32, u32) -> Result<StateVector>,
{
    let mut out = Vec::new();
    for bell in [Bell::Singlet, Bell::T0] {
        for &(nd, na) in modes {
            let state = make(&bell.qubit_vector(), nd, na)?;
            out.push(ResonanceCandidate { label: format!("{}+{}D+{}d", bell.label(), nd, na), state });
        }
    }
    Ok(out)
}

/// Fidelity of the Bell state a candidate label refers to.
pub fn bell_score(label: &str, r: &SteadyStateResult) -> Result<f64> {
    let f = r.qubit_fidelities.ok_or_else(|| Error::InvalidArgument("Bell fidelities need two sites".into()))?;
    Ok(if label.starts_with("S+") { f.s } else { f.t0 })
}

/// Local maxima above `threshold`, merging maxima closer than `min_separation`.
pub fn find_peaks(x: &[f64], y: &[f64], threshold: f64, min_separation: f64) -> Vec<(f64, f64)> {
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for k in 0..y.len() {
        let left = k == 0 || y[k] >= y[k - 1];
        let right = k + 1 == y.len() || y[k] >= y[k + 1];
        if left && right && y[k] > threshold {
            match peaks.last_mut() {
                Some(last) if (x[k] - last.0).abs() < min_separation => {
                    if y[k] > last.1 {
                        *last = (x[k], y[k]);
                    }
                }
                _ => peaks.push((x[k], y[k])),
            }
        }
    }
    peaks
}
