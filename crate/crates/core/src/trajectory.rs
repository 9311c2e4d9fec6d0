//! Quantum-jump (Monte Carlo wave-function) evolution under `H_eff`.
//!
//! The state is integrated only on the sectors of `H_int` it currently
//! occupies; a jump can move it to other sectors, after which the active
//! index set is rebuilt.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::basis::Polarization;
use crate::correlations::{atom_measurement_with, rotate_modes, AtomOutcome};
use crate::error::{domain, numerical, Error, Result};
use crate::hamiltonian::{Hamiltonian, PulsedOperator, Sectors};
use crate::observables::Observables;
use crate::ode::{Dopri5, OdeOptions};
use crate::operator::{OperatorMatrix, StateVector, ZERO};

/// Name of the random generator and seed derivation, recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3), seed = splitmix64(base_seed, index)";

/// Detector port of a polarization analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    X,
    Y,
}

impl Port {
    /// Outcome sign: x-click +1, y-click -1.
    pub fn sign(self) -> i32 {
        match self {
            Port::X => 1,
            Port::Y => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// Cavity decay through a circular mode.
    Cavity(Polarization),
    /// Cavity decay detected behind analyzer `analyzer` (0-based) at `port`.
    Detector { analyzer: usize, port: Port },
    /// Spontaneous emission with polarization `sigma`.
    Emission(i32),
}

impl ChannelKind {
    pub fn is_cavity(&self) -> bool {
        !matches!(self, ChannelKind::Emission(_))
    }
}

#[derive(Debug, Clone)]
pub struct Channel {
    pub label: String,
    pub kind: ChannelKind,
    pub op: OperatorMatrix,
}

#[derive(Debug, Clone)]
pub struct CollapseSet {
    pub channels: Vec<Channel>,
}

impl CollapseSet {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.label.clone()).collect()
    }

    /// `sum_c C_c' C_c`.
    pub fn dissipator_sum(&self, dim: usize) -> OperatorMatrix {
        self.channels.iter().fold(OperatorMatrix::zeros(dim), |acc, c| {
            acc.add(&c.op.adjoint().mul(&c.op).expect("square")).expect("equal dimension")
        })
    }

    /// Largest entry of `sum_c C'C - (2 kappa N + Gamma sum A'A)`.
    pub fn sum_rule_deviation(&self, ham: &Hamiltonian) -> f64 {
        let dim = ham.basis().dim();
        // 2 i * (anti-Hermitian decay part) equals the reference dissipator
        let reference = ham.decay_term().scale(Complex64::new(0.0, 2.0));
        self.dissipator_sum(dim).max_abs_diff(&reference)
    }

    /// Instantaneous jump rate of each channel for state `psi`.
    pub fn rates(&self, psi: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![ZERO; psi.len()];
        self.channels
            .iter()
            .map(|c| {
                c.op.apply_into(psi, &mut buf);
                buf.iter().map(|z| z.norm_sqr()).sum()
            })
            .collect()
    }
}

/// Two cavity channels `sqrt(2 kappa) a_+-` and three emission channels `sqrt(Gamma) A_sigma`.
pub fn standard_collapse_set(ham: &Hamiltonian) -> CollapseSet {
    let cfg = ham.config();
    let ck = libm::sqrt(2.0 * cfg.kappa);
    let mut channels = vec![
        Channel { label: "cavity+".into(), kind: ChannelKind::Cavity(Polarization::Plus), op: ham.a_plus.scale_re(ck) },
        Channel { label: "cavity-".into(), kind: ChannelKind::Cavity(Polarization::Minus), op: ham.a_minus.scale_re(ck) },
    ];
    channels.extend(emission_channels(ham));
    CollapseSet { channels }
}

fn emission_channels(ham: &Hamiltonian) -> Vec<Channel> {
    let cg = libm::sqrt(ham.config().gamma);
    [-1, 0, 1]
        .iter()
        .zip(&ham.lowering)
        .map(|(&sigma, a)| Channel {
            label: format!("emission{}", match sigma {
                -1 => "-",
                0 => "0",
                _ => "+",
            }),
            kind: ChannelKind::Emission(sigma),
            op: a.scale_re(cg),
        })
        .collect()
}

/// Cavity decay split over `angles.len()` analyzers with equal weights, each
/// resolved into x and y ports, plus the three emission channels.
pub fn detector_collapse_set(ham: &Hamiltonian, angles: &[f64]) -> Result<CollapseSet> {
    if angles.is_empty() {
        return Err(domain!("detector collapse set needs at least one analyzer angle"));
    }
    let w = libm::sqrt(2.0 * ham.config().kappa / angles.len() as f64);
    let mut channels = Vec::with_capacity(2 * angles.len() + 3);
    for (k, &phi) in angles.iter().enumerate() {
        let (ax, ay) = rotate_modes(&ham.a_plus, &ham.a_minus, phi);
        channels.push(Channel {
            label: format!("det{}x", k + 1),
            kind: ChannelKind::Detector { analyzer: k, port: Port::X },
            op: ax.scale_re(w),
        });
        channels.push(Channel {
            label: format!("det{}y", k + 1),
            kind: ChannelKind::Detector { analyzer: k, port: Port::Y },
            op: ay.scale_re(w),
        });
    }
    channels.extend(emission_channels(ham));
    Ok(CollapseSet { channels })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub t: f64,
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub index: usize,
    pub seed: u64,
    pub jumps: Vec<JumpEvent>,
    /// Normalized state at `t_end`.
    pub final_state: StateVector,
    /// Atomic analyzer outcome (+1 even / -1 odd), when requested.
    pub atom_outcome: Option<i32>,
    /// Set by post-selection.
    pub accepted: Option<bool>,
    pub warnings: Vec<String>,
}

impl TrajectoryRecord {
    pub fn final_probabilities(&self) -> Vec<f64> {
        self.final_state.probabilities()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions {
    pub ode: OdeOptions,
    /// Number of uniform output samples over `[t_start, t_end]` (inclusive).
    pub samples: usize,
    /// Jump-time bisection target `| |psi|^2 - r |`.
    pub jump_tolerance: f64,
    /// Population bound on the photon-cutoff shell before a warning is recorded.
    pub leakage_tolerance: f64,
    /// Atomic analyzer angle; when set, each trajectory ends with an atom measurement.
    pub atom_theta: Option<f64>,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions { ode: OdeOptions::default(), samples: 400, jump_tolerance: 1e-9, leakage_tolerance: 1e-6, atom_theta: None }
    }
}

/// Seed of trajectory `index` in an ensemble with `base_seed`.
pub fn trajectory_seed(base_seed: u64, index: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(base_seed ^ mix(index as u64))
}

/// Uniform draw in the open interval (0, 1).
pub(crate) fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Immutable data shared by all trajectories of one run.
#[derive(Debug, Clone)]
pub struct TrajectoryContext {
    ham: Hamiltonian,
    collapse: CollapseSet,
    opts: TrajectoryOptions,
    h_eff: PulsedOperator,
    sectors: Sectors,
    initial: StateVector,
    times: Vec<f64>,
    shell: Vec<usize>,
    no_jump: Option<NoJumpPath>,
    observables: Observables,
}

/// Evolution without jumps from the shared initial state.
#[derive(Debug, Clone)]
struct NoJumpPath {
    probs: Vec<Vec<f64>>,
    final_state: StateVector,
    final_norm_sqr: f64,
    warnings: Vec<String>,
}

/// What a trajectory hands to the sample callback at each output time.
pub struct Sample<'a> {
    pub step: usize,
    pub indices: &'a [usize],
    /// Normalized populations of `indices`.
    pub probs: &'a [f64],
}

impl TrajectoryContext {
    pub fn new(ham: &Hamiltonian, collapse: &CollapseSet, opts: TrajectoryOptions) -> Result<Self> {
        let cfg = ham.config();
        cfg.validate()?;
        if opts.samples < 2 {
            return Err(domain!("need at least 2 output samples, got {}", opts.samples));
        }
        let basis = ham.basis();
        if collapse.channels.iter().any(|c| c.op.dim() != basis.dim()) {
            return Err(Error::Config("collapse operator dimension differs from the basis".into()));
        }
        let n = opts.samples;
        let times = (0..n).map(|k| cfg.t_start + (cfg.t_end - cfg.t_start) * k as f64 / (n - 1) as f64).collect();
        Ok(TrajectoryContext {
            ham: ham.clone(),
            collapse: collapse.clone(),
            opts,
            h_eff: ham.pulsed_h_eff(),
            sectors: ham.sectors(),
            initial: cfg.initial_vector(basis)?,
            times,
            shell: basis.cutoff_shell().collect(),
            no_jump: None,
            observables: Observables::states(basis),
        })
    }

    /// Precomputes the jump-free path so trajectories whose threshold is never
    /// reached skip integration entirely. Results are identical either way.
    pub fn with_no_jump_cache(mut self) -> Result<Self> {
        let mut probs = vec![Vec::new(); self.times.len()];
        let mut sink = |s: Sample<'_>| {
            let mut full = vec![0.0; self.ham.basis().dim()];
            for (&i, &p) in s.indices.iter().zip(s.probs) {
                full[i] = p;
            }
            probs[s.step] = full;
        };
        let path = self.run(None, &mut sink)?;
        let (final_state, final_norm_sqr, warnings) = path;
        self.no_jump = Some(NoJumpPath { probs, final_state, final_norm_sqr, warnings });
        Ok(self)
    }

    /// Replaces the per-state populations accumulated by ensembles.
    pub fn with_observables(mut self, observables: Observables) -> Result<Self> {
        if observables.dim() != self.dim() {
            return Err(domain!("observables defined on dimension {}, basis has {}", observables.dim(), self.dim()));
        }
        self.observables = observables;
        Ok(self)
    }

    pub fn observables(&self) -> &Observables {
        &self.observables
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.ham
    }

    pub fn collapse(&self) -> &CollapseSet {
        &self.collapse
    }

    pub fn options(&self) -> &TrajectoryOptions {
        &self.opts
    }

    pub fn dim(&self) -> usize {
        self.ham.basis().dim()
    }

    /// Runs trajectory `index` with `seed`, reporting samples to `sink`.
    pub fn evolve<S>(&self, index: usize, seed: u64, sink: &mut S) -> Result<TrajectoryRecord>
    where
        S: FnMut(Sample<'_>),
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wrap = |e: Error| Error::Trajectory { index, seed, source: alloc::boxed::Box::new(e) };
        let mut jumps = Vec::new();
        let (final_state, warnings) = match &self.no_jump {
            Some(path) => {
                let r = uniform_open(&mut rng);
                if r < path.final_norm_sqr {
                    let idx: Vec<usize> = (0..self.dim()).collect();
                    for (step, p) in path.probs.iter().enumerate() {
                        sink(Sample { step, indices: &idx, probs: p });
                    }
                    (path.final_state.clone(), path.warnings.clone())
                } else {
                    let mut rng2 = ChaCha8Rng::seed_from_u64(seed);
                    let (s, _, w) = self.run(Some((&mut rng2, &mut jumps)), sink).map_err(wrap)?;
                    rng = rng2;
                    (s, w)
                }
            }
            None => {
                let (s, _, w) = self.run(Some((&mut rng, &mut jumps)), sink).map_err(wrap)?;
                (s, w)
            }
        };
        let mut record = TrajectoryRecord { index, seed, jumps, final_state, atom_outcome: None, accepted: None, warnings };
        if let Some(theta) = self.opts.atom_theta {
            let AtomOutcome { outcome, warning } = atom_measurement_with(self.ham.basis(), &record.final_state, theta, &mut rng).map_err(wrap)?;
            record.atom_outcome = Some(outcome);
            record.warnings.extend(warning);
        }
        Ok(record)
    }

    /// Core loop. With `jumps = None` the threshold is never drawn and no jump occurs.
    #[allow(clippy::type_complexity)]
    fn run<S>(&self, mut jumping: Option<(&mut ChaCha8Rng, &mut Vec<JumpEvent>)>, sink: &mut S) -> Result<(StateVector, f64, Vec<String>)>
    where
        S: FnMut(Sample<'_>),
    {
        let cfg = self.ham.config();
        let dim = self.dim();
        let mut warnings: Vec<String> = Vec::new();
        let mut r = match jumping.as_mut() {
            Some((rng, _)) => uniform_open(rng),
            None => 0.0,
        };

        let mut full = self.initial.0.clone();
        let mut active = self.sectors.reachable_indices(&full);
        let mut op = self.h_eff.restrict(&active);
        let mut y: Vec<Complex64> = active.iter().map(|&i| full[i]).collect();
        let mut ode = Dopri5::new(y.len(), self.opts.ode);
        let mut k1 = vec![ZERO; y.len()];
        let mut y0 = vec![ZERO; y.len()];
        let mut y_try = vec![ZERO; y.len()];
        let mut probs = vec![0.0; y.len()];
        let mut leak_warned = false;

        let mi = Complex64::new(0.0, -1.0);
        let mut emit = |step: usize, active: &[usize], y: &[Complex64], probs: &mut Vec<f64>, warnings: &mut Vec<String>| {
            let n: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            probs.clear();
            probs.extend(y.iter().map(|z| z.norm_sqr() / n));
            if !leak_warned {
                let leak: f64 = active.iter().zip(probs.iter()).filter(|(i, _)| self.shell.binary_search(i).is_ok()).map(|(_, p)| p).sum();
                if leak > self.opts.leakage_tolerance {
                    warnings.push(format!("cutoff-shell population {leak:.3e} at t={:.6}", self.times[step]));
                    leak_warned = true;
                }
            }
            sink(Sample { step, indices: active, probs });
        };

        let mut t = cfg.t_start;
        emit(0, &active, &y, &mut probs, &mut warnings);
        let mut next = 1;
        while next < self.times.len() {
            let target = self.times[next];
            y0.copy_from_slice(&y);
            let t0 = t;
            let op_ref = &op;
            let mut rhs = |tt: f64, x: &[Complex64], dx: &mut [Complex64]| {
                let (g, omega) = cfg.coupling(tt);
                op_ref.apply_into(g, omega, x, dx);
                dx.iter_mut().for_each(|z| *z *= mi);
            };
            let h = ode.step(&mut rhs, t0, &mut y, target - t0)?;
            k1.copy_from_slice(&ode.last_start_derivative()[..y.len()]);
            t = if target - (t0 + h) <= 1e-12 * target.abs().max(1.0) { target } else { t0 + h };
            let n = y.iter().map(|z| z.norm_sqr()).sum::<f64>();

            if jumping.is_some() && n <= r {
                // bisection on the step length
                let (mut lo, mut hi) = (0.0, h);
                let mut hit = None;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    ode.trial_step(&mut rhs, t0, &y0, &k1, mid, &mut y_try);
                    let nm = y_try.iter().map(|z| z.norm_sqr()).sum::<f64>();
                    if (nm - r).abs() < self.opts.jump_tolerance || hi - lo <= f64::EPSILON * t0.abs().max(1.0) {
                        hit = Some(mid);
                        break;
                    }
                    if nm > r {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let Some(hj) = hit else {
                    return Err(numerical!("jump-time bisection did not converge in [{t0}, {}]", t0 + h));
                };
                let tj = t0 + hj;
                full.iter_mut().for_each(|z| *z = ZERO);
                for (&i, z) in active.iter().zip(&y_try) {
                    full[i] = *z;
                }
                let rates = self.collapse.rates(&full);
                let total: f64 = rates.iter().sum();
                let (rng, record) = jumping.as_mut().unwrap();
                if !(total > 1e-300) {
                    warnings.push(format!("zero total jump rate at t={tj:.9}; threshold redrawn without a jump"));
                    y.copy_from_slice(&y_try);
                    r = uniform_open(rng) * n.min(1.0);
                    t = tj;
                    ode.invalidate();
                    continue;
                }
                let u = uniform_open(rng) * total;
                let mut acc = 0.0;
                let mut ch = rates.len() - 1;
                for (c, w) in rates.iter().enumerate() {
                    acc += w;
                    if u < acc && *w > 0.0 {
                        ch = c;
                        break;
                    }
                }
                while rates[ch] == 0.0 {
                    ch -= 1;
                }
                record.push(JumpEvent { t: tj, channel: ch });
                let mut after = vec![ZERO; dim];
                self.collapse.channels[ch].op.apply_into(&full, &mut after);
                let norm = libm::sqrt(after.iter().map(|z| z.norm_sqr()).sum::<f64>());
                after.iter_mut().for_each(|z| *z /= norm);
                full = after;
                active = self.sectors.reachable_indices(&full);
                op = self.h_eff.restrict(&active);
                y = active.iter().map(|&i| full[i]).collect();
                let m = y.len();
                for buf in [&mut k1, &mut y0, &mut y_try] {
                    buf.resize(m, ZERO);
                }
                ode.reset(m);
                r = uniform_open(rng);
                t = tj;
                continue;
            }

            if t == target {
                emit(next, &active, &y, &mut probs, &mut warnings);
                next += 1;
            }
        }

        let norm_sqr = y.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let mut out = StateVector::zeros(dim);
        let inv = 1.0 / libm::sqrt(norm_sqr);
        for (&i, z) in active.iter().zip(&y) {
            out[i] = *z * inv;
        }
        Ok((out, norm_sqr, warnings))
    }
}

/// Single trajectory without output sampling.
pub fn evolve_trajectory(ham: &Hamiltonian, collapse: &CollapseSet, seed: u64, opts: TrajectoryOptions) -> Result<TrajectoryRecord> {
    let ctx = TrajectoryContext::new(ham, collapse, opts)?;
    ctx.evolve(0, seed, &mut |_| {})
}

/// Running sums over trajectories; merging accumulators in index order gives
/// results independent of how trajectories were scheduled.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAccumulator {
    pub n: usize,
    width: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    pub jump_counts: Vec<u64>,
    pub records: Vec<TrajectoryRecord>,
}

impl EnsembleAccumulator {
    /// Sums for `width` observables at each of `samples` output times.
    pub fn new(samples: usize, width: usize, channels: usize) -> Self {
        EnsembleAccumulator {
            n: 0,
            width,
            sum: vec![0.0; samples * width],
            sum_sq: vec![0.0; samples * width],
            jump_counts: vec![0; channels],
            records: Vec::new(),
        }
    }

    pub fn merge(&mut self, other: EnsembleAccumulator) {
        self.n += other.n;
        self.sum.iter_mut().zip(&other.sum).for_each(|(a, b)| *a += b);
        self.sum_sq.iter_mut().zip(&other.sum_sq).for_each(|(a, b)| *a += b);
        self.jump_counts.iter_mut().zip(&other.jump_counts).for_each(|(a, b)| *a += b);
        self.records.extend(other.records);
    }
}

/// Runs trajectories `range` of an ensemble into a fresh accumulator.
pub fn run_chunk(ctx: &TrajectoryContext, base_seed: u64, range: core::ops::Range<usize>) -> Result<EnsembleAccumulator> {
    let obs = &ctx.observables;
    let width = obs.len();
    let mut acc = EnsembleAccumulator::new(ctx.times.len(), width, ctx.collapse.len());
    let mut values = vec![0.0; width];
    for index in range {
        let seed = trajectory_seed(base_seed, index);
        let (sum, sum_sq) = (&mut acc.sum, &mut acc.sum_sq);
        let rec = ctx.evolve(index, seed, &mut |s: Sample<'_>| {
            values.iter_mut().for_each(|v| *v = 0.0);
            for (&i, &p) in s.indices.iter().zip(s.probs) {
                obs.accumulate(i, p, &mut values);
            }
            let base = s.step * width;
            for (g, &v) in values.iter().enumerate() {
                sum[base + g] += v;
                sum_sq[base + g] += v * v;
            }
        })?;
        for j in &rec.jumps {
            acc.jump_counts[j.channel] += 1;
        }
        acc.n += 1;
        acc.records.push(rec);
    }
    Ok(acc)
}

/// Trajectories per accumulator chunk.
pub const CHUNK: usize = 64;

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    /// Observable labels; basis-state labels unless the context was given other observables.
    pub labels: Vec<String>,
    /// `mean[step][observable]`.
    pub mean: Vec<Vec<f64>>,
    /// Standard error of `mean`.
    pub stderr: Vec<Vec<f64>>,
    pub channel_labels: Vec<String>,
    /// Total jumps per channel over all trajectories.
    pub jump_counts: Vec<u64>,
    pub records: Vec<TrajectoryRecord>,
}

impl EnsembleResult {
    pub fn from_accumulator(ctx: &TrajectoryContext, acc: EnsembleAccumulator) -> Self {
        let (n, dim) = (acc.n as f64, acc.width);
        let mut mean = Vec::with_capacity(ctx.times.len());
        let mut stderr = Vec::with_capacity(ctx.times.len());
        for k in 0..ctx.times.len() {
            let s = &acc.sum[k * dim..(k + 1) * dim];
            let q = &acc.sum_sq[k * dim..(k + 1) * dim];
            mean.push(s.iter().map(|x| x / n).collect());
            stderr.push(
                s.iter()
                    .zip(q)
                    .map(|(x, x2)| {
                        if acc.n < 2 {
                            return 0.0;
                        }
                        let m = x / n;
                        let var = ((x2 / n - m * m) * n / (n - 1.0)).max(0.0);
                        libm::sqrt(var / n)
                    })
                    .collect(),
            );
        }
        EnsembleResult {
            times: ctx.times.clone(),
            labels: ctx.observables.labels().to_vec(),
            mean,
            stderr,
            channel_labels: ctx.collapse.labels(),
            jump_counts: acc.jump_counts,
            records: acc.records,
        }
    }

    pub fn n_traj(&self) -> usize {
        self.records.len()
    }

    /// Mean final-time value of observable `index`.
    pub fn final_mean(&self, index: usize) -> f64 {
        self.mean.last().map_or(0.0, |m| m[index])
    }
}

/// Sequential ensemble: chunks of [`CHUNK`] trajectories merged in index order.
pub fn run_ensemble(ham: &Hamiltonian, collapse: &CollapseSet, n_traj: usize, base_seed: u64, opts: TrajectoryOptions) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return Err(domain!("n_traj must be >= 1"));
    }
    let ctx = TrajectoryContext::new(ham, collapse, opts)?.with_no_jump_cache()?;
    run_ensemble_with(&ctx, n_traj, base_seed)
}

/// Sequential ensemble over a prepared context.
pub fn run_ensemble_with(ctx: &TrajectoryContext, n_traj: usize, base_seed: u64) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return Err(domain!("n_traj must be >= 1"));
    }
    let mut acc = EnsembleAccumulator::new(ctx.times.len(), ctx.observables.len(), ctx.collapse.len());
    let mut start = 0;
    while start < n_traj {
        let end = (start + CHUNK).min(n_traj);
        acc.merge(run_chunk(ctx, base_seed, start..end)?);
        start = end;
    }
    Ok(EnsembleResult::from_accumulator(ctx, acc))
}
