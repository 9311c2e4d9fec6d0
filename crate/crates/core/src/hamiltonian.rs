//! Pulse profiles, simulation parameters and the interaction / effective Hamiltonians.
//!
//! Units: `hbar = Gamma = 1`. Rates are in units of Gamma, times in 1/Gamma.
//!
//! The Hamiltonian is kept as three fixed operators weighted by scalars,
//! `H(t) = H_0 + g(t) G + Omega(t) P`, where `H_0` holds the detunings (and,
//! for `H_eff`, the anti-Hermitian decay terms), `G` the cavity couplings and
//! `P` the pump coupling.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::angular::LevelScheme;
use crate::basis::{atomic_lowering, enumerate_basis, mode_annihilation, BasisState, Polarization, SystemBasis};
use crate::error::{config_err, Result};
use crate::operator::{OperatorMatrix, StateVector, I, ZERO};

const FOUR_LN2: f64 = 4.0 * core::f64::consts::LN_2;

/// Gaussian pulse `amplitude * exp(-4 ln2 (t - center)^2 / fwhm^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseProfile {
    pub amplitude: f64,
    pub center: f64,
    pub fwhm: f64,
}

impl PulseProfile {
    pub fn new(amplitude: f64, center: f64, fwhm: f64) -> Result<Self> {
        let p = PulseProfile { amplitude, center, fwhm };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(config_err!("pulse amplitude must be finite and >= 0, got {}", self.amplitude));
        }
        if !(self.fwhm.is_finite() && self.fwhm > 0.0) {
            return Err(config_err!("pulse fwhm must be finite and > 0, got {}", self.fwhm));
        }
        if !self.center.is_finite() {
            return Err(config_err!("pulse center must be finite"));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.fwhm;
        self.amplitude * libm::exp(-FOUR_LN2 * x * x)
    }

    /// `ln value(t)`, finite far in the tails where `value` underflows.
    pub fn ln_value(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.fwhm;
        libm::log(self.amplitude) - FOUR_LN2 * x * x
    }

    /// `d/dt ln value(t)`; finite everywhere, unlike `value'/value` evaluated numerically.
    pub fn log_derivative(&self, t: f64) -> f64 {
        -2.0 * FOUR_LN2 * (t - self.center) / (self.fwhm * self.fwhm)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.value(t) * self.log_derivative(t)
    }

    /// Time-shifted copy.
    pub fn shifted(&self, dt: f64) -> Self {
        PulseProfile { center: self.center + dt, ..*self }
    }
}

pub fn pulse_value(profile: &PulseProfile, t: f64) -> f64 {
    profile.value(t)
}

/// Which cavity modes couple to the atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarizations {
    #[default]
    Both,
    /// Only the sigma- mode couples; the sigma+ mode is a spectator.
    MinusOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub scheme: LevelScheme,
    pub n_max: u32,
    pub cavity_pulse: PulseProfile,
    pub pump_pulse: PulseProfile,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub initial_state: Vec<(BasisState, Complex64)>,
    pub polarizations: Polarizations,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.cavity_pulse.validate()?;
        self.pump_pulse.validate()?;
        for (name, v) in [("delta_plus", self.delta_plus), ("delta_minus", self.delta_minus)] {
            if !v.is_finite() {
                return Err(config_err!("{name} must be finite"));
            }
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(config_err!("kappa must be >= 0, got {}", self.kappa));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(config_err!("gamma must be >= 0, got {}", self.gamma));
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(config_err!("time window must be finite with t_end > t_start, got [{}, {}]", self.t_start, self.t_end));
        }
        if self.initial_state.is_empty() {
            return Err(config_err!("initial_state is empty"));
        }
        let norm: f64 = self.initial_state.iter().map(|(_, a)| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(config_err!("initial_state norm^2 is {norm}, expected 1 within 1e-12"));
        }
        let basis = self.basis();
        for (s, _) in &self.initial_state {
            basis.require_index(s)?;
        }
        Ok(())
    }

    pub fn basis(&self) -> SystemBasis {
        enumerate_basis(self.scheme, self.n_max)
    }

    pub fn initial_vector(&self, basis: &SystemBasis) -> Result<StateVector> {
        let mut v = StateVector::zeros(basis.dim());
        for (s, a) in &self.initial_state {
            v[basis.require_index(s)?] += *a;
        }
        Ok(v)
    }

    pub fn coupling(&self, t: f64) -> (f64, f64) {
        (self.cavity_pulse.value(t), self.pump_pulse.value(t))
    }

    fn check_basis(&self, basis: &SystemBasis) -> Result<()> {
        if basis.scheme() != self.scheme || basis.n_max() != self.n_max {
            return Err(config_err!(
                "basis (dim {}, n_max {}) does not match configuration (n_max {})",
                basis.dim(),
                basis.n_max(),
                self.n_max
            ));
        }
        Ok(())
    }
}

/// Three operators sharing one sparsity pattern, evaluated as `c + g G + omega P`.
#[derive(Debug, Clone)]
pub struct PulsedOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    constant: Vec<Complex64>,
    cavity: Vec<Complex64>,
    pump: Vec<Complex64>,
}

impl PulsedOperator {
    pub fn new(constant: &OperatorMatrix, cavity: &OperatorMatrix, pump: &OperatorMatrix) -> Self {
        let dim = constant.dim();
        // Union pattern: entries that cancel in the sum must still be kept.
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for op in [constant, cavity, pump] {
            for (r, c, _) in op.triplets() {
                rows[r].push(c);
            }
        }
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::new();
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_ptr[r + 1] = cols.len();
        }
        let fill = |op: &OperatorMatrix| -> Vec<Complex64> {
            let mut v = vec![ZERO; cols.len()];
            for r in 0..dim {
                let span = &cols[row_ptr[r]..row_ptr[r + 1]];
                for (c, val) in op.row(r) {
                    let k = span.binary_search(&c).unwrap();
                    v[row_ptr[r] + k] = val;
                }
            }
            v
        };
        let (constant, cavity, pump) = (fill(constant), fill(cavity), fill(pump));
        PulsedOperator { dim, row_ptr, cols, constant, cavity, pump }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = (c + g G + omega P) x`.
    pub fn apply_into(&self, g: f64, omega: f64, x: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let w = self.constant[k] + self.cavity[k] * g + self.pump[k] * omega;
                acc += w * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    /// Calls `f(row, col, value)` for every pattern entry at given pulse values.
    pub fn for_each_entry<F: FnMut(usize, usize, Complex64)>(&self, g: f64, omega: f64, mut f: F) {
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                f(r, self.cols[k], self.constant[k] + self.cavity[k] * g + self.pump[k] * omega);
            }
        }
    }

    /// Assembled operator at given pulse values.
    pub fn at(&self, g: f64, omega: f64) -> OperatorMatrix {
        let mut entries = Vec::with_capacity(self.cols.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                entries.push((r, self.cols[k], self.constant[k] + self.cavity[k] * g + self.pump[k] * omega));
            }
        }
        OperatorMatrix::from_triplets(self.dim, entries)
    }

    /// Restriction to the listed indices (rows and columns, in order).
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.dim];
        for (k, &i) in indices.iter().enumerate() {
            local[i] = k;
        }
        let mut row_ptr = vec![0usize; indices.len() + 1];
        let (mut cols, mut c0, mut cg, mut cp) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (lr, &r) in indices.iter().enumerate() {
            let mut row: Vec<(usize, usize)> = (self.row_ptr[r]..self.row_ptr[r + 1])
                .filter(|&k| local[self.cols[k]] != usize::MAX)
                .map(|k| (local[self.cols[k]], k))
                .collect();
            row.sort_unstable();
            for (lc, k) in row {
                cols.push(lc);
                c0.push(self.constant[k]);
                cg.push(self.cavity[k]);
                cp.push(self.pump[k]);
            }
            row_ptr[lr + 1] = cols.len();
        }
        PulsedOperator { dim: indices.len(), row_ptr, cols, constant: c0, cavity: cg, pump: cp }
    }
}

/// Cached constituent operators of one configuration.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    basis: SystemBasis,
    cfg: SimulationConfig,
    pub a_plus: OperatorMatrix,
    pub a_minus: OperatorMatrix,
    /// `A_sigma` for sigma = -1, 0, +1.
    pub lowering: [OperatorMatrix; 3],
    detuning: OperatorMatrix,
    cavity: OperatorMatrix,
    pump: OperatorMatrix,
    decay: OperatorMatrix,
}

impl Hamiltonian {
    pub fn new(cfg: &SimulationConfig, basis: &SystemBasis) -> Result<Self> {
        cfg.check_basis(basis)?;
        let a_plus = mode_annihilation(basis, Polarization::Plus);
        let a_minus = mode_annihilation(basis, Polarization::Minus);
        let lowering = [atomic_lowering(basis, -1)?, atomic_lowering(basis, 0)?, atomic_lowering(basis, 1)?];

        let detuning = OperatorMatrix::diagonal(
            &basis
                .states()
                .iter()
                .map(|s| cfg.delta_plus * s.n_plus as f64 + cfg.delta_minus * s.n_minus as f64)
                .collect::<Vec<_>>(),
        );

        // -i (a'A - A'a) for each coupled mode
        let exchange = |a: &OperatorMatrix, low: &OperatorMatrix| -> Result<OperatorMatrix> {
            let fwd = a.adjoint().mul(low)?;
            Ok(fwd.sub(&fwd.adjoint())?.scale(-I))
        };
        let mut cavity = exchange(&a_minus, &lowering[0])?;
        if cfg.polarizations == Polarizations::Both {
            cavity = cavity.add(&exchange(&a_plus, &lowering[2])?)?;
        }
        let pump = lowering[1].sub(&lowering[1].adjoint())?.scale(I);

        let photons = a_plus.adjoint().mul(&a_plus)?.add(&a_minus.adjoint().mul(&a_minus)?)?;
        let mut emission = OperatorMatrix::zeros(basis.dim());
        for low in &lowering {
            emission = emission.add(&low.adjoint().mul(low)?)?;
        }
        let decay = photons
            .scale_re(cfg.kappa)
            .add(&emission.scale_re(cfg.gamma / 2.0))?
            .scale(-I);

        Ok(Hamiltonian { basis: basis.clone(), cfg: cfg.clone(), a_plus, a_minus, lowering, detuning, cavity, pump, decay })
    }

    pub fn basis(&self) -> &SystemBasis {
        &self.basis
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.cfg
    }

    /// Coefficient operator of `g(t)`.
    pub fn cavity_term(&self) -> &OperatorMatrix {
        &self.cavity
    }

    /// Coefficient operator of `Omega(t)`.
    pub fn pump_term(&self) -> &OperatorMatrix {
        &self.pump
    }

    pub fn detuning_term(&self) -> &OperatorMatrix {
        &self.detuning
    }

    /// Anti-Hermitian part `-i kappa (n+ + n-) - i Gamma/2 sum A'A`.
    pub fn decay_term(&self) -> &OperatorMatrix {
        &self.decay
    }

    pub fn h_int_at(&self, g: f64, omega: f64) -> OperatorMatrix {
        self.detuning
            .add(&self.cavity.scale_re(g))
            .and_then(|h| h.add(&self.pump.scale_re(omega)))
            .expect("cached operators share a dimension")
    }

    pub fn h_int(&self, t: f64) -> OperatorMatrix {
        let (g, omega) = self.cfg.coupling(t);
        self.h_int_at(g, omega)
    }

    pub fn h_eff(&self, t: f64) -> OperatorMatrix {
        self.h_int(t).add(&self.decay).expect("cached operators share a dimension")
    }

    pub fn pulsed_h_int(&self) -> PulsedOperator {
        PulsedOperator::new(&self.detuning, &self.cavity, &self.pump)
    }

    pub fn pulsed_h_eff(&self) -> PulsedOperator {
        let c = self.detuning.add(&self.decay).expect("cached operators share a dimension");
        PulsedOperator::new(&c, &self.cavity, &self.pump)
    }

    /// Connected components of the coupling graph of `H_int` (valid for all `t`).
    pub fn sectors(&self) -> Sectors {
        Sectors::from_couplings(self.basis.dim(), &[&self.cavity, &self.pump])
    }
}

pub fn build_h_int(cfg: &SimulationConfig, basis: &SystemBasis, t: f64) -> Result<OperatorMatrix> {
    Ok(Hamiltonian::new(cfg, basis)?.h_int(t))
}

pub fn build_h_eff(cfg: &SimulationConfig, basis: &SystemBasis, t: f64) -> Result<OperatorMatrix> {
    Ok(Hamiltonian::new(cfg, basis)?.h_eff(t))
}

/// Partition of basis indices into sets closed under a collection of operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Sectors {
    of_state: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Sectors {
    /// Components of the undirected graph with an edge wherever any operator has an entry.
    pub fn from_couplings(dim: usize, ops: &[&OperatorMatrix]) -> Self {
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for op in ops {
            for (r, c, _) in op.triplets() {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut of_state = vec![usize::MAX; dim];
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut root_id = vec![usize::MAX; dim];
        for i in 0..dim {
            let r = find(&mut parent, i);
            if root_id[r] == usize::MAX {
                root_id[r] = members.len();
                members.push(Vec::new());
            }
            of_state[i] = root_id[r];
            members[root_id[r]].push(i);
        }
        Sectors { of_state, members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn sector_of(&self, index: usize) -> usize {
        self.of_state[index]
    }

    /// Sorted basis indices of one sector.
    pub fn members(&self, sector: usize) -> &[usize] {
        &self.members[sector]
    }

    /// Sorted union of the sectors touched by the nonzero amplitudes of `v`.
    pub fn support(&self, v: &[Complex64]) -> Vec<usize> {
        let mut ids: Vec<usize> = v.iter().enumerate().filter(|(_, z)| **z != ZERO).map(|(i, _)| self.of_state[i]).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Sectors reachable from `v` by mixing under the coupling operators (the manifold coupled to `v`).
    pub fn reachable_indices(&self, v: &[Complex64]) -> Vec<usize> {
        let mut out: Vec<usize> = self.support(v).iter().flat_map(|&s| self.members[s].iter().copied()).collect();
        out.sort_unstable();
        out
    }

    /// Sectors hit by `op` applied to sector `from`.
    pub fn image(&self, op: &OperatorMatrix, from: usize) -> Vec<usize> {
        let mut set: Vec<usize> = op
            .triplets()
            .filter(|(_, c, _)| self.of_state[*c] == from)
            .map(|(r, _, _)| self.of_state[r])
            .collect();
        set.sort_unstable();
        set.dedup();
        set
    }
}

/// Sigma-plus/minus detuning energy of a basis state.
pub fn detuning_energy(cfg: &SimulationConfig, s: &BasisState) -> f64 {
    cfg.delta_plus * s.n_plus as f64 + cfg.delta_minus * s.n_minus as f64
}
