//! Dressed-state spectra, level tracking, analytic dark states, avoided-crossing
//! scans and the two-state Landau-Zener model.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::angular::{HalfInt, LevelScheme};
use crate::basis::{BasisState, SystemBasis};
use crate::error::{domain, numerical, Result};
use crate::hamiltonian::{detuning_energy, Hamiltonian, SimulationConfig};
use crate::operator::{OperatorMatrix, StateVector, ZERO};

/// Eigen-decomposition of `H_int` on a manifold of basis indices at one time.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub t: f64,
    /// Ascending.
    pub energies: Vec<f64>,
    /// `vectors[j]` is the eigenvector of `energies[j]` in manifold coordinates.
    pub vectors: Vec<Vec<Complex64>>,
}

/// Basis indices reachable from the support of `initial` under `H_int`.
pub fn reachable_manifold(ham: &Hamiltonian, initial: &StateVector) -> Vec<usize> {
    ham.sectors().reachable_indices(initial.as_slice())
}

/// Diagonalizes a Hermitian operator given in manifold coordinates.
///
/// A QR eigensolve supplies an approximate unitary basis `V`; `V' H V` is then
/// finished with cyclic Jacobi rotations, which restores full accuracy of
/// eigenvectors of nearly degenerate levels.
pub fn hermitian_eigen(h: &OperatorMatrix) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let n = h.dim();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let hm = DMatrix::from_row_slice(n, n, &h.to_dense());
    let mut v = match SymmetricEigen::try_new(hm.clone(), f64::EPSILON, 100_000) {
        Some(eig) => eig.eigenvectors,
        None => DMatrix::identity(n, n),
    };
    let gram = v.adjoint() * &v;
    if (gram - DMatrix::<Complex64>::identity(n, n)).iter().any(|z| z.norm() > 1e-10) {
        v = DMatrix::identity(n, n);
    }
    let mut a = v.adjoint() * &hm * &v;
    jacobi_sweeps(&mut a, &mut v).map_err(|sweeps| numerical!("Hermitian eigensolve of dimension {n} did not converge in {sweeps} sweeps"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let energies = order.iter().map(|&j| a[(j, j)].re).collect();
    let vectors = order.iter().map(|&j| v.column(j).iter().copied().collect()).collect();
    Ok((energies, vectors))
}

/// Cyclic Jacobi on Hermitian `a`, accumulating rotations into the columns of `v`.
fn jacobi_sweeps(a: &mut DMatrix<Complex64>, v: &mut DMatrix<Complex64>) -> core::result::Result<(), usize> {
    const MAX_SWEEPS: usize = 60;
    let n = a.nrows();
    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let target = f64::EPSILON * f64::EPSILON * total.max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if 2.0 * off <= target {
            for k in 0..n {
                a[(k, k)].im = 0.0;
            }
            return Ok(());
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                let phase = apq / mag;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta >= 0.0 { 1.0 } else { -1.0 } / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                // U = diag(1, e^{-i phi}) * [[c, s], [-s, c]] on (p, q)
                let upp = Complex64::new(c, 0.0);
                let upq = Complex64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;
                for k in 0..n {
                    let (x, y) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = x * upp + y * uqp;
                    a[(k, q)] = x * upq + y * uqq;
                }
                for k in 0..n {
                    let (x, y) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = upp.conj() * x + uqp.conj() * y;
                    a[(q, k)] = upq.conj() * x + uqq.conj() * y;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                for k in 0..n {
                    let (x, y) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = x * upp + y * uqp;
                    v[(k, q)] = x * upq + y * uqq;
                }
            }
        }
    }
    Err(MAX_SWEEPS)
}

/// Spectrum of `H_int(t)` restricted to `manifold`.
pub fn instantaneous_spectrum(ham: &Hamiltonian, t: f64, manifold: &[usize]) -> Result<Spectrum> {
    let h = ham.h_int(t).restrict(manifold);
    let (energies, vectors) = hermitian_eigen(&h).map_err(|e| match e {
        crate::Error::Numerical(msg) => numerical!("{msg} at t={t}"),
        other => other,
    })?;
    Ok(Spectrum { t, energies, vectors })
}

/// Eigenvalue curves connected across a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrack {
    pub times: Vec<f64>,
    /// `energies[track][step]`.
    pub energies: Vec<Vec<f64>>,
    /// `eigen_index[track][step]` indexes into the source spectrum at that step.
    pub eigen_index: Vec<Vec<usize>>,
    /// `(step, track)` pairs whose best overlap with the previous step was below 0.5.
    pub discontinuities: Vec<(usize, usize)>,
}

impl SpectrumTrack {
    pub fn track_count(&self) -> usize {
        self.energies.len()
    }

    /// Track whose eigenvector at `step` has maximal overlap with `reference` (manifold coordinates).
    pub fn track_by_overlap(&self, spectra: &[Spectrum], step: usize, reference: &[Complex64]) -> usize {
        let mut best = (0, -1.0);
        for tr in 0..self.track_count() {
            let v = &spectra[step].vectors[self.eigen_index[tr][step]];
            let o = overlap(v, reference);
            if o > best.1 {
                best = (tr, o);
            }
        }
        best.0
    }
}

fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm()
}

/// Connects eigenvalues across consecutive spectra by greedy maximal eigenvector overlap.
pub fn track_levels(spectra: &[Spectrum]) -> SpectrumTrack {
    let n = spectra.first().map_or(0, |s| s.energies.len());
    let steps = spectra.len();
    let mut energies = vec![Vec::with_capacity(steps); n];
    let mut eigen_index = vec![Vec::with_capacity(steps); n];
    let mut discontinuities = Vec::new();
    for tr in 0..n {
        energies[tr].push(spectra[0].energies[tr]);
        eigen_index[tr].push(tr);
    }
    for step in 1..steps {
        let (prev, cur) = (&spectra[step - 1], &spectra[step]);
        let mut pairs = Vec::with_capacity(n * n);
        for tr in 0..n {
            let i = eigen_index[tr][step - 1];
            for j in 0..n {
                let o = overlap(&prev.vectors[i], &cur.vectors[j]);
                pairs.push((o, (prev.energies[i] - cur.energies[j]).abs(), tr, j));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
        let mut track_done = vec![false; n];
        let mut eig_used = vec![false; n];
        let mut assigned = vec![0usize; n];
        let mut left = n;
        for (o, _, tr, j) in pairs {
            if left == 0 {
                break;
            }
            if track_done[tr] || eig_used[j] {
                continue;
            }
            track_done[tr] = true;
            eig_used[j] = true;
            assigned[tr] = j;
            left -= 1;
            if o < 0.5 {
                discontinuities.push((step, tr));
            }
        }
        for tr in 0..n {
            energies[tr].push(cur.energies[assigned[tr]]);
            eigen_index[tr].push(assigned[tr]);
        }
    }
    SpectrumTrack { times: spectra.iter().map(|s| s.t).collect(), energies, eigen_index, discontinuities }
}

/// One term `coeff * g^g_pow * Omega^omega_pow |state>` of an analytic dark state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkTerm {
    pub state: BasisState,
    pub coeff: f64,
    pub g_pow: i32,
    pub omega_pow: i32,
}

/// Normalized analytic dark state.
#[derive(Debug, Clone, PartialEq)]
pub struct DarkState {
    pub k: u32,
    pub amplitudes: Vec<(BasisState, f64)>,
    /// `1 / |unnormalized vector|`.
    pub normalization: f64,
}

impl DarkState {
    pub fn to_vector(&self, basis: &SystemBasis) -> Result<StateVector> {
        let mut v = StateVector::zeros(basis.dim());
        for (s, a) in &self.amplitudes {
            v[basis.require_index(s)?] += Complex64::new(*a, 0.0);
        }
        Ok(v)
    }

    pub fn amplitude(&self, s: &BasisState) -> f64 {
        self.amplitudes.iter().filter(|(x, _)| x == s).map(|(_, a)| a).sum()
    }
}

/// Unnormalized polynomial form of the dark states.
pub fn dark_state_terms(k: u32, scheme: LevelScheme) -> Result<Vec<DarkTerm>> {
    let s = libm::sqrt;
    let gs = BasisState::ground;
    let t = |state, coeff, g_pow, omega_pow| DarkTerm { state, coeff, g_pow, omega_pow };
    let is_int = |f: HalfInt, v: i32| f == HalfInt::from_int(v);
    if is_int(scheme.f_g, 3) && is_int(scheme.f_e, 3) {
        return Ok(match k {
            0 => vec![
                t(gs(-3, 0, 0), -s(15.0), 3, 0),
                t(gs(-2, 0, 1), s(45.0), 2, 1),
                t(gs(-1, 0, 2), -s(18.0), 1, 2),
                t(gs(0, 0, 3), 1.0, 0, 3),
            ],
            1 => vec![
                t(gs(-3, 1, 1), s(60.0), 3, 0),
                t(gs(-2, 1, 2), -s(90.0), 2, 1),
                t(gs(-1, 1, 3), s(24.0), 1, 2),
                t(gs(0, 1, 4), -1.0, 0, 3),
                t(gs(-1, 0, 2), s(18.0), 3, 0),
                t(gs(0, 0, 3), -s(36.0), 2, 1),
                t(gs(1, 0, 4), s(6.0), 1, 2),
            ],
            2 => vec![
                t(gs(-3, 2, 2), -s(150.0), 3, 0),
                t(gs(-2, 2, 3), s(150.0), 2, 1),
                t(gs(-1, 2, 4), -s(30.0), 1, 2),
                t(gs(0, 2, 5), 1.0, 0, 3),
                t(gs(-1, 1, 3), -s(60.0), 3, 0),
                t(gs(0, 1, 4), s(90.0), 2, 1),
                t(gs(1, 1, 5), -s(12.0), 1, 2),
                t(gs(1, 0, 4), -s(15.0), 3, 0),
                t(gs(2, 0, 5), s(15.0), 2, 1),
            ],
            _ => return Err(domain!("dark state k={k} not available for F_g=F_e=3 (k must be 0, 1 or 2)")),
        });
    }
    if is_int(scheme.f_g, 2) && is_int(scheme.f_e, 1) {
        if k != 0 {
            return Err(domain!("dark state k={k} not available for J_g=2 -> J_e=1 (only k=0)"));
        }
        return Ok(vec![
            t(gs(0, 0, 0), -s(12.0), 2, 0),
            t(gs(-1, 1, 0), 2.0, 1, 1),
            t(gs(1, 0, 1), 2.0, 1, 1),
            t(gs(-2, 2, 0), -1.0, 0, 2),
            t(gs(2, 0, 2), -1.0, 0, 2),
        ]);
    }
    Err(domain!("no analytic dark states for F_g={} -> F_e={}", scheme.f_g, scheme.f_e))
}

fn eval_terms(terms: &[DarkTerm], g: f64, omega: f64) -> Vec<f64> {
    terms
        .iter()
        .map(|d| d.coeff * libm::pow(g, d.g_pow as f64) * libm::pow(omega, d.omega_pow as f64))
        .collect()
}

/// Closed-form dark state `|E_k>` at couplings `(g, omega)`, normalized.
pub fn analytic_dark_state(k: u32, g: f64, omega: f64, scheme: LevelScheme) -> Result<DarkState> {
    let terms = dark_state_terms(k, scheme)?;
    if !(g.is_finite() && omega.is_finite() && g >= 0.0 && omega >= 0.0) {
        return Err(domain!("couplings must be finite and non-negative, got g={g}, omega={omega}"));
    }
    // The vector is homogeneous in (g, omega); rescale so the larger is 1.
    let scale = g.max(omega);
    if scale == 0.0 {
        return Err(domain!("dark state undefined for g = omega = 0"));
    }
    let raw = eval_terms(&terms, g / scale, omega / scale);
    let norm = libm::sqrt(raw.iter().map(|x| x * x).sum::<f64>());
    let degree = terms[0].g_pow + terms[0].omega_pow;
    let mut amplitudes: Vec<(BasisState, f64)> = Vec::new();
    for (d, x) in terms.iter().zip(&raw) {
        match amplitudes.iter_mut().find(|(s, _)| *s == d.state) {
            Some(e) => e.1 += x / norm,
            None => amplitudes.push((d.state, x / norm)),
        }
    }
    Ok(DarkState { k, amplitudes, normalization: 1.0 / (norm * libm::pow(scale, degree as f64)) })
}

/// Normalized dark vector and its time derivative along the pulses, on a fixed state list.
struct DarkTrajectory {
    terms: Vec<DarkTerm>,
    slots: Vec<usize>,
}

impl DarkTrajectory {
    fn new(terms: Vec<DarkTerm>, states: &mut Vec<BasisState>) -> Self {
        let slots = terms
            .iter()
            .map(|d| match states.iter().position(|s| *s == d.state) {
                Some(i) => i,
                None => {
                    states.push(d.state);
                    states.len() - 1
                }
            })
            .collect();
        DarkTrajectory { terms, slots }
    }

    /// `(v, dv/dt)` on `dim` slots, given `ln g`, `ln omega` and their time derivatives.
    fn eval(&self, dim: usize, ln_g: f64, ln_omega: f64, dln_g: f64, dln_omega: f64) -> (Vec<f64>, Vec<f64>) {
        let ln_s = ln_g.max(ln_omega);
        let (gs, os) = (libm::exp(ln_g - ln_s), libm::exp(ln_omega - ln_s));
        let mut u = vec![0.0; dim];
        let mut du = vec![0.0; dim];
        for (d, &slot) in self.terms.iter().zip(&self.slots) {
            let x = d.coeff * libm::pow(gs, d.g_pow as f64) * libm::pow(os, d.omega_pow as f64);
            u[slot] += x;
            du[slot] += x * (d.g_pow as f64 * dln_g + d.omega_pow as f64 * dln_omega);
        }
        let norm = libm::sqrt(u.iter().map(|x| x * x).sum::<f64>());
        let v: Vec<f64> = u.iter().map(|x| x / norm).collect();
        let proj: f64 = v.iter().zip(&du).map(|(a, b)| a * b).sum();
        let dv = du.iter().zip(&v).map(|(d, x)| (d - x * proj) / norm).collect();
        (v, dv)
    }
}

/// Integration settings for [`landau_zener_probability_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandauZenerOptions {
    /// RK4 step in 1/Gamma.
    pub step: f64,
    /// Window extends this many FWHM beyond the earliest and latest pulse centers.
    pub margin_fwhm: f64,
}

impl Default for LandauZenerOptions {
    fn default() -> Self {
        LandauZenerOptions { step: 1e-3, margin_fwhm: 5.0 }
    }
}

pub fn landau_zener_probability(cfg: &SimulationConfig) -> Result<f64> {
    landau_zener_probability_with(cfg, LandauZenerOptions::default())
}

/// Probability `|c_1|^2` of ending in `|E_1>` when starting in `|E_0>`, from the
/// exact projection of the Schroedinger equation onto the non-orthogonal pair
/// `{|E_0(t)>, |E_1(t)>}`.
pub fn landau_zener_probability_with(cfg: &SimulationConfig, opts: LandauZenerOptions) -> Result<f64> {
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(domain!("Landau-Zener step must be positive, got {}", opts.step));
    }
    let (cav, pump) = (cfg.cavity_pulse, cfg.pump_pulse);
    if cav.amplitude == 0.0 || pump.amplitude == 0.0 {
        return Err(domain!("Landau-Zener model needs nonzero cavity and pump amplitudes"));
    }
    let mut states = Vec::new();
    let e0 = DarkTrajectory::new(dark_state_terms(0, cfg.scheme)?, &mut states);
    let e1 = DarkTrajectory::new(dark_state_terms(1, cfg.scheme)?, &mut states);
    let dim = states.len();
    let energy: Vec<f64> = states.iter().map(|s| detuning_energy(cfg, s)).collect();

    let t0 = cav.center.min(pump.center) - opts.margin_fwhm * cav.fwhm.max(pump.fwhm);
    let t1 = cav.center.max(pump.center) + opts.margin_fwhm * cav.fwhm.max(pump.fwhm);
    let steps = libm::ceil((t1 - t0) / opts.step) as usize;
    let h = (t1 - t0) / steps as f64;

    let i = Complex64::new(0.0, 1.0);
    let rhs = |t: f64, c: [Complex64; 2]| -> [Complex64; 2] {
        let (lg, lo) = (cav.ln_value(t), pump.ln_value(t));
        let (dg, dom) = (cav.log_derivative(t), pump.log_derivative(t));
        let (v0, d0) = e0.eval(dim, lg, lo, dg, dom);
        let (v1, d1) = e1.eval(dim, lg, lo, dg, dom);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let hdot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(&energy).map(|((x, y), e)| x * y * e).sum::<f64>();
        let vs = [&v0, &v1];
        let ds = [&d0, &d1];
        let s = dot(&v0, &v1);
        // M c where M = -i H - D
        let mut m = [[ZERO; 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                m[j][k] = -i * hdot(vs[j], vs[k]) - Complex64::new(dot(vs[j], ds[k]), 0.0);
            }
        }
        let y = [m[0][0] * c[0] + m[0][1] * c[1], m[1][0] * c[0] + m[1][1] * c[1]];
        let det = 1.0 - s * s;
        [(y[0] - y[1] * s) / det, (y[1] - y[0] * s) / det]
    };

    let mut c = [Complex64::new(1.0, 0.0), ZERO];
    let add = |a: [Complex64; 2], b: [Complex64; 2], f: f64| [a[0] + b[0] * f, a[1] + b[1] * f];
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        let k1 = rhs(t, c);
        let k2 = rhs(t + h / 2.0, add(c, k1, h / 2.0));
        let k3 = rhs(t + h / 2.0, add(c, k2, h / 2.0));
        let k4 = rhs(t + h, add(c, k3, h));
        for j in 0..2 {
            c[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
        }
        if !(c[0].is_finite() && c[1].is_finite()) {
            return Err(numerical!("Landau-Zener integration diverged at t={t}"));
        }
    }
    Ok(c[1].norm_sqr())
}

/// Local minimum of the gap between a reference track and its nearest other level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvoidedCrossing {
    pub t: f64,
    pub gap: f64,
    pub neighbor_track: usize,
}

/// Grid-resolution local minima of the nearest-neighbor gap of `reference`.
pub fn scan_avoided_crossings(track: &SpectrumTrack, reference: usize) -> Vec<AvoidedCrossing> {
    let steps = track.times.len();
    let nearest: Vec<(f64, usize)> = (0..steps)
        .map(|s| {
            let e = track.energies[reference][s];
            (0..track.track_count())
                .filter(|&tr| tr != reference)
                .map(|tr| ((track.energies[tr][s] - e).abs(), tr))
                .fold((f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 { b } else { a })
        })
        .collect();
    let mut out = Vec::new();
    for s in 1..steps.saturating_sub(1) {
        let (g, tr) = nearest[s];
        if g < nearest[s - 1].0 && g <= nearest[s + 1].0 {
            out.push(AvoidedCrossing { t: track.times[s], gap: g, neighbor_track: tr });
        }
    }
    out
}

/// Minimum over `[t_lo, t_hi]` of the splitting between the sorted levels
/// `level` and `level + 1` of `H_int` on `manifold`, found by golden-section
/// search down to `tol` in time.
pub fn refine_gap(ham: &Hamiltonian, manifold: &[usize], level: usize, t_lo: f64, t_hi: f64, tol: f64) -> Result<(f64, f64)> {
    let gap = |t: f64| -> Result<f64> {
        let (e, _) = hermitian_eigen(&ham.h_int(t).restrict(manifold))?;
        if level + 1 >= e.len() {
            return Err(domain!("level {level} has no upper neighbor in a manifold of {}", e.len()));
        }
        Ok(e[level + 1] - e[level])
    };
    let r = (libm::sqrt(5.0) - 1.0) / 2.0;
    let (mut a, mut b) = (t_lo, t_hi);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (gap(x1)?, gap(x2)?);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = gap(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = gap(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Resolves a grid-level crossing found at `approx.t` (grid spacing `dt`)
/// to the true minimum splitting of the adjacent sorted level pair that
/// contains the level closest to `energy`.
pub fn refine_avoided_crossing(
    ham: &Hamiltonian,
    manifold: &[usize],
    approx: &AvoidedCrossing,
    energy: f64,
    dt: f64,
    tol: f64,
) -> Result<AvoidedCrossing> {
    let (e, _) = hermitian_eigen(&ham.h_int(approx.t).restrict(manifold))?;
    if e.len() < 2 {
        return Err(domain!("manifold of dimension {} has no level pairs", e.len()));
    }
    let k = e
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - energy).abs().total_cmp(&(b.1 - energy).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let above = if k + 1 < e.len() { e[k + 1] - e[k] } else { f64::INFINITY };
    let below = if k > 0 { e[k] - e[k - 1] } else { f64::INFINITY };
    let lower = if above <= below { k } else { k - 1 };
    let (t, gap) = refine_gap(ham, manifold, lower, approx.t - dt, approx.t + dt, tol)?;
    Ok(AvoidedCrossing { t, gap, ..*approx })
}

/// Number of eigenvalues within `window` of `energy` at each spectrum.
pub fn level_crowding(spectra: &[Spectrum], energy: f64, window: f64) -> Vec<usize> {
    spectra.iter().map(|s| s.energies.iter().filter(|e| (*e - energy).abs() < window).count()).collect()
}

/// Time of the strongest multilevel near-degeneracy around `energy` among
/// spectra with `t >= t_from`; earliest time wins ties.
pub fn multilevel_crossing_time(spectra: &[Spectrum], t_from: f64, energy: f64, window: f64) -> Option<f64> {
    let counts = level_crowding(spectra, energy, window);
    spectra
        .iter()
        .zip(counts)
        .filter(|(s, _)| s.t >= t_from)
        .fold(None, |best: Option<(f64, usize)>, (s, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((s.t, c)),
        })
        .map(|(t, _)| t)
}
