//! Polarization analyzers, GHZ expectation values, the atomic parity analyzer,
//! and estimators over post-selected jump records.
//!
//! Analyzer phase convention: `phi` is the relative phase between the two
//! circular components, `a_x(phi) = (e^{-i phi/2} a_+ + e^{i phi/2} a_-)/sqrt2`
//! and `a_y(phi) = i (e^{-i phi/2} a_+ - e^{i phi/2} a_-)/sqrt2`, so that
//! `a_x'a_x - a_y'a_y = e^{i phi} L_+ + e^{-i phi} L_-`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::basis::{ground_atomic_operator, mode_annihilation, Level, Polarization, SystemBasis};
use crate::error::{domain, Result};
use crate::operator::{OperatorMatrix, StateVector, ZERO};
use crate::spectral::hermitian_eigen;
use crate::trajectory::{uniform_open, ChannelKind, CollapseSet, Port, TrajectoryRecord};

fn cis(x: f64) -> Complex64 {
    Complex64::new(libm::cos(x), libm::sin(x))
}

/// `(a_x(phi), a_y(phi))` from given circular-mode annihilators.
pub fn rotate_modes(a_plus: &OperatorMatrix, a_minus: &OperatorMatrix, phi: f64) -> (OperatorMatrix, OperatorMatrix) {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let p = a_plus.scale(cis(-phi / 2.0) * s);
    let m = a_minus.scale(cis(phi / 2.0) * s);
    let i = Complex64::new(0.0, 1.0);
    let ax = p.add(&m).expect("equal dimension");
    let ay = p.sub(&m).expect("equal dimension").scale(i);
    (ax, ay)
}

pub fn rotated_mode_operators(basis: &SystemBasis, phi: f64) -> (OperatorMatrix, OperatorMatrix) {
    rotate_modes(&mode_annihilation(basis, Polarization::Plus), &mode_annihilation(basis, Polarization::Minus), phi)
}

/// Schwinger spin operators `(L_+, L_-, L_z)` of the two cavity modes.
pub fn spin_operators(basis: &SystemBasis) -> (OperatorMatrix, OperatorMatrix, OperatorMatrix) {
    let ap = mode_annihilation(basis, Polarization::Plus);
    let am = mode_annihilation(basis, Polarization::Minus);
    let lp = ap.adjoint().mul(&am).expect("square");
    let lm = am.adjoint().mul(&ap).expect("square");
    let lz = ap.adjoint().mul(&ap).and_then(|n| n.sub(&am.adjoint().mul(&am)?)).expect("square").scale_re(0.5);
    (lp, lm, lz)
}

/// Photon analyzer observable `L(phi) = e^{i phi} L_+ + e^{-i phi} L_-`.
pub fn analyzer_operator(basis: &SystemBasis, phi: f64) -> OperatorMatrix {
    let (lp, lm, _) = spin_operators(basis);
    lp.scale(cis(phi)).add(&lm.scale(cis(-phi))).expect("equal dimension")
}

/// Ideal expectation of the product of `n` analyzer outcomes on
/// `alpha |n,0> + beta |0,n>`, one photon per analyzer, by summing over all
/// `2^n` x/y outcome patterns.
pub fn ghz_expectation(n: usize, alpha: Complex64, beta: Complex64, angles: &[f64]) -> Result<f64> {
    if angles.len() != n {
        return Err(domain!("photon count {n} differs from the number of angles {}", angles.len()));
    }
    if n == 0 || n > 30 {
        return Err(domain!("photon count must be in 1..=30, got {n}"));
    }
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(domain!("|alpha|^2 + |beta|^2 = {norm}, expected 1"));
    }
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::new(0.0, 1.0);
    // <port(phi)| +> and <port(phi)| ->
    let proj = |port: Port, phi: f64| -> (Complex64, Complex64) {
        match port {
            Port::X => (cis(-phi / 2.0) * s, cis(phi / 2.0) * s),
            Port::Y => (i * cis(-phi / 2.0) * s, -i * cis(phi / 2.0) * s),
        }
    };
    let mut total = 0.0;
    for pattern in 0u32..(1u32 << n) {
        let mut plus = alpha;
        let mut minus = beta;
        let mut sign = 1;
        for (k, &phi) in angles.iter().enumerate() {
            let port = if pattern >> k & 1 == 1 { Port::Y } else { Port::X };
            let (cp, cm) = proj(port, phi);
            plus *= cp;
            minus *= cm;
            sign *= port.sign();
        }
        total += sign as f64 * (plus + minus).norm_sqr();
    }
    Ok(total)
}

/// `J(theta) = (e^{-i theta/4} J_+ + e^{i theta/4} J_-)/2` on a ground level of angular momentum `j` (dense, `m` ascending).
pub fn analyzer_angular_momentum(j: crate::angular::HalfInt, theta: f64) -> Vec<Complex64> {
    let d = j.multiplicity();
    let jf = j.as_f64();
    let mut out = vec![ZERO; d * d];
    for k in 0..d - 1 {
        let m = -jf + k as f64;
        // <m+1| J_+ |m>
        let c = libm::sqrt(jf * (jf + 1.0) - m * (m + 1.0));
        out[(k + 1) * d + k] = cis(-theta / 4.0) * (c / 2.0);
        out[k * d + k + 1] = cis(theta / 4.0) * (c / 2.0);
    }
    out
}

/// Even-minus-odd eigenprojector difference of `J(theta)`, dense over `m` ascending.
pub fn parity_analyzer_matrix(j: crate::angular::HalfInt, theta: f64) -> Result<Vec<Complex64>> {
    if !j.is_integer() {
        return Err(domain!("parity analyzer needs an integer ground angular momentum, got {j}"));
    }
    let d = j.multiplicity();
    let dense = analyzer_angular_momentum(j, theta);
    let jm = OperatorMatrix::from_triplets(d, (0..d * d).map(|k| (k / d, k % d, dense[k])));
    let (values, vectors) = hermitian_eigen(&jm)?;
    let mut out = vec![ZERO; d * d];
    for (ev, v) in values.iter().zip(&vectors) {
        let parity = if (libm::round(*ev) as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        for r in 0..d {
            for c in 0..d {
                out[r * d + c] += v[r] * v[c].conj() * parity;
            }
        }
    }
    Ok(out)
}

/// Atomic analyzer `M(theta)` on the full basis (acts on the ground level, zero on excited states).
pub fn atom_parity_operator(basis: &SystemBasis, theta: f64) -> Result<OperatorMatrix> {
    let fg = basis.scheme().f_g;
    let d = fg.multiplicity();
    let dense = parity_analyzer_matrix(fg, theta)?;
    let idx = |m: crate::angular::HalfInt| ((m.twice() + fg.twice()) / 2) as usize;
    let op = ground_atomic_operator(basis, |mo, mi| {
        let z = dense[idx(mo) * d + idx(mi)];
        if z.norm() < 1e-14 {
            ZERO
        } else {
            z
        }
    });
    Ok(op)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomOutcome {
    /// +1 for the even projector, -1 for odd.
    pub outcome: i32,
    pub warning: Option<String>,
}

/// Samples the parity analyzer on `state` with the given generator.
pub fn atom_measurement_with(basis: &SystemBasis, state: &StateVector, theta: f64, rng: &mut ChaCha8Rng) -> Result<AtomOutcome> {
    let m = atom_parity_operator(basis, theta)?;
    let excited: f64 = basis
        .states()
        .iter()
        .zip(state.as_slice())
        .filter(|(s, _)| s.level == Level::Excited)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    let ground = state.norm_sqr() - excited;
    if ground <= 0.0 {
        return Err(domain!("state has no ground-level population"));
    }
    let expect_m = m.expectation(state).re / ground;
    let p_even = (0.5 * (1.0 + expect_m)).clamp(0.0, 1.0);
    let outcome = if uniform_open(rng) < p_even { 1 } else { -1 };
    let warning = (excited > 1e-6).then(|| format!("excited population {excited:.3e} at atom measurement"));
    Ok(AtomOutcome { outcome, warning })
}

pub fn atom_measurement(basis: &SystemBasis, state: &StateVector, theta: f64, seed: u64) -> Result<AtomOutcome> {
    atom_measurement_with(basis, state, theta, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Which trajectories enter a correlation estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostSelectionRule {
    /// Exact number of cavity photons required.
    pub required: usize,
    /// Hits allowed on any single detector (analyzer, port); `None` is unlimited.
    pub max_hits_per_detector: Option<usize>,
    /// Attribute clicks by the analyzer label of their channel and require one
    /// click per analyzer. When off, the k-th click goes to the k-th analyzer.
    pub distinct_analyzers: bool,
}

impl PostSelectionRule {
    pub fn photons(required: usize) -> Self {
        PostSelectionRule { required, max_hits_per_detector: Some(1), distinct_analyzers: false }
    }
}

impl Default for PostSelectionRule {
    fn default() -> Self {
        Self::photons(3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    /// `None` when no trajectory was accepted.
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub accepted: usize,
    pub total: usize,
    /// Rejected for a photon count different from the rule's.
    pub rejected_count: usize,
    /// Rejected for a repeated detector or analyzer.
    pub rejected_hits: usize,
    /// Rejected for a missing atomic outcome (atom-photon estimates only).
    pub rejected_other: usize,
}

/// Cavity clicks of a record as `(analyzer, port)`; plain cavity channels have no analyzer.
fn clicks(record: &TrajectoryRecord, kinds: &[ChannelKind]) -> Vec<(Option<usize>, Option<Port>)> {
    record
        .jumps
        .iter()
        .filter_map(|j| match kinds[j.channel] {
            ChannelKind::Detector { analyzer, port } => Some((Some(analyzer), Some(port))),
            ChannelKind::Cavity(_) => Some((None, None)),
            ChannelKind::Emission(_) => None,
        })
        .collect()
}

enum Verdict {
    Accept(i32),
    WrongCount,
    Hits,
}

fn photon_product(record: &TrajectoryRecord, kinds: &[ChannelKind], rule: &PostSelectionRule) -> Verdict {
    let c = clicks(record, kinds);
    if c.len() != rule.required {
        return Verdict::WrongCount;
    }
    let mut detectors = Vec::with_capacity(c.len());
    for (k, (a, p)) in c.iter().enumerate() {
        let Some(port) = p else { return Verdict::Hits };
        let analyzer = if rule.distinct_analyzers { a.unwrap_or(usize::MAX) } else { k };
        detectors.push((analyzer, *port));
    }
    if rule.distinct_analyzers {
        let mut seen = vec![false; rule.required];
        for (a, _) in &detectors {
            if *a >= rule.required || seen[*a] {
                return Verdict::Hits;
            }
            seen[*a] = true;
        }
    }
    if let Some(max) = rule.max_hits_per_detector {
        for d in &detectors {
            if detectors.iter().filter(|e| *e == d).count() > max {
                return Verdict::Hits;
            }
        }
    }
    Verdict::Accept(detectors.iter().map(|(_, p)| p.sign()).product())
}

fn summarize(values: &[f64], total: usize, rejected_count: usize, rejected_hits: usize, rejected_other: usize) -> CorrelationEstimate {
    let n = values.len();
    let (mean, stderr) = if n == 0 {
        (None, None)
    } else {
        let m = values.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
            libm::sqrt(var / n as f64)
        } else {
            0.0
        };
        (Some(m), Some(se))
    };
    CorrelationEstimate { mean, stderr, accepted: n, total, rejected_count, rejected_hits, rejected_other }
}

/// Channel kinds of a collapse set, indexed like jump channel ids.
pub fn channel_kinds(collapse: &CollapseSet) -> Vec<ChannelKind> {
    collapse.channels.iter().map(|c| c.kind).collect()
}

/// Per-record acceptance and photon sign product.
pub fn photon_products(records: &[TrajectoryRecord], kinds: &[ChannelKind], rule: &PostSelectionRule) -> Vec<Option<i32>> {
    records
        .iter()
        .map(|r| match photon_product(r, kinds, rule) {
            Verdict::Accept(p) => Some(p),
            _ => None,
        })
        .collect()
}

/// Mean product of photon signs over accepted records.
pub fn estimate_triple_correlation(records: &[TrajectoryRecord], kinds: &[ChannelKind], rule: &PostSelectionRule) -> CorrelationEstimate {
    let mut values = Vec::new();
    let (mut rc, mut rh) = (0, 0);
    for r in records {
        match photon_product(r, kinds, rule) {
            Verdict::Accept(p) => values.push(p as f64),
            Verdict::WrongCount => rc += 1,
            Verdict::Hits => rh += 1,
        }
    }
    summarize(&values, records.len(), rc, rh, 0)
}

/// Mean of photon signs times the atomic analyzer outcome over accepted records.
pub fn estimate_atom_photon_correlation(records: &[TrajectoryRecord], kinds: &[ChannelKind], rule: &PostSelectionRule) -> CorrelationEstimate {
    let mut values = Vec::new();
    let (mut rc, mut rh, mut ro) = (0, 0, 0);
    for r in records {
        match photon_product(r, kinds, rule) {
            Verdict::Accept(p) => match r.atom_outcome {
                Some(a) => values.push((p * a) as f64),
                None => ro += 1,
            },
            Verdict::WrongCount => rc += 1,
            Verdict::Hits => rh += 1,
        }
    }
    summarize(&values, records.len(), rc, rh, ro)
}

/// Marks each record's `accepted` flag under `rule`.
pub fn apply_post_selection(records: &mut [TrajectoryRecord], kinds: &[ChannelKind], rule: &PostSelectionRule) {
    for r in records.iter_mut() {
        r.accepted = Some(matches!(photon_product(r, kinds, rule), Verdict::Accept(_)));
    }
}

/// Number of cavity photons that escaped in a record.
pub fn photon_count(record: &TrajectoryRecord, kinds: &[ChannelKind]) -> usize {
    record.jumps.iter().filter(|j| kinds[j.channel].is_cavity()).count()
}

/// Normalized distribution of escaped-photon counts.
pub fn photon_count_histogram(records: &[TrajectoryRecord], kinds: &[ChannelKind]) -> BTreeMap<usize, f64> {
    let mut h = BTreeMap::new();
    for r in records {
        *h.entry(photon_count(r, kinds)).or_insert(0.0) += 1.0;
    }
    let n = records.len() as f64;
    h.values_mut().for_each(|v| *v /= n);
    h
}

/// Probabilistic beam-splitter routing of escaped photons to sides A and B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingModel {
    pub a_probability: f64,
    /// Also require the two A-side photons to hit different counters (x and y).
    pub distinct_a_counters: bool,
}

impl Default for RoutingModel {
    fn default() -> Self {
        RoutingModel { a_probability: 2.0 / 3.0, distinct_a_counters: false }
    }
}

/// Fraction of records whose photons, routed independently, give exactly two
/// clicks on side A and one on side B.
pub fn routing_acceptance_fraction(records: &[TrajectoryRecord], kinds: &[ChannelKind], routing: &RoutingModel, seed: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&routing.a_probability) {
        return Err(domain!("A-side probability must lie in [0, 1], got {}", routing.a_probability));
    }
    if records.is_empty() {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = 0usize;
    for r in records {
        let mut a_ports: Vec<Option<Port>> = Vec::new();
        let mut b = 0;
        for j in &r.jumps {
            let port = match kinds[j.channel] {
                ChannelKind::Detector { port, .. } => Some(port),
                ChannelKind::Cavity(_) => None,
                ChannelKind::Emission(_) => continue,
            };
            if uniform_open(&mut rng) < routing.a_probability {
                a_ports.push(port);
            } else {
                b += 1;
            }
        }
        let pattern = a_ports.len() == 2 && b == 1;
        let distinct = !routing.distinct_a_counters || (a_ports[..].len() == 2 && a_ports[0].is_some() && a_ports[0] != a_ports[1]);
        if pattern && distinct {
            ok += 1;
        }
    }
    Ok(ok as f64 / records.len() as f64)
}
