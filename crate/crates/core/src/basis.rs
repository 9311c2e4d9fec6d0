//! Product basis `|x_m, n_+, n_->` and the atomic and field operators on it.
//!
//! Ordering is level-major: all ground sublevels precede all excited
//! sublevels; within a level `m` ascends, then `n_+`, then `n_-`. The index of
//! a state is therefore computed arithmetically and is identical across runs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::angular::{cg_coefficient, HalfInt, LevelScheme};
use crate::error::{domain, Result};
use crate::operator::OperatorMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Ground,
    Excited,
}

/// Cavity polarization mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub level: Level,
    pub m: HalfInt,
    pub n_plus: u32,
    pub n_minus: u32,
}

impl BasisState {
    pub fn ground(m: i32, n_plus: u32, n_minus: u32) -> Self {
        BasisState { level: Level::Ground, m: HalfInt::from_int(m), n_plus, n_minus }
    }

    pub fn excited(m: i32, n_plus: u32, n_minus: u32) -> Self {
        BasisState { level: Level::Excited, m: HalfInt::from_int(m), n_plus, n_minus }
    }

    /// Label such as `g-3,0,0` or `e+1/2,1,0`.
    pub fn label(&self) -> String {
        format!("{self}")
    }

    /// Parses the format produced by [`BasisState::label`].
    pub fn parse_label(s: &str) -> Option<Self> {
        let s = s.trim();
        let level = match s.chars().next()? {
            'g' => Level::Ground,
            'e' => Level::Excited,
            _ => return None,
        };
        let mut parts = s[1..].split(',');
        let m = HalfInt::parse(parts.next()?.trim_start_matches('+'))?;
        let n_plus = parts.next()?.trim().parse().ok()?;
        let n_minus = parts.next()?.trim().parse().ok()?;
        if parts.next().is_some() {
            return None;
        }
        Some(BasisState { level, m, n_plus, n_minus })
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = match self.level {
            Level::Ground => 'g',
            Level::Excited => 'e',
        };
        let sign = if self.m.twice() > 0 { "+" } else { "" };
        write!(f, "{x}{sign}{},{},{}", self.m, self.n_plus, self.n_minus)
    }
}

/// Enumerated Hilbert space of one atom and two cavity modes with a photon cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemBasis {
    scheme: LevelScheme,
    n_max: u32,
    states: Vec<BasisState>,
}

impl SystemBasis {
    pub fn scheme(&self) -> LevelScheme {
        self.scheme
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> BasisState {
        self.states[index]
    }

    fn photon_block(&self) -> usize {
        let n = self.n_max as usize + 1;
        n * n
    }

    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        let f = match s.level {
            Level::Ground => self.scheme.f_g,
            Level::Excited => self.scheme.f_e,
        };
        if s.n_plus > self.n_max || s.n_minus > self.n_max {
            return None;
        }
        if s.m.twice().abs() > f.twice() || (f.twice() - s.m.twice()) % 2 != 0 {
            return None;
        }
        let offset = match s.level {
            Level::Ground => 0,
            Level::Excited => self.scheme.f_g.multiplicity() * self.photon_block(),
        };
        let m_idx = ((s.m.twice() + f.twice()) / 2) as usize;
        let n = self.n_max as usize + 1;
        Some(offset + m_idx * self.photon_block() + s.n_plus as usize * n + s.n_minus as usize)
    }

    /// Like [`index_of`](Self::index_of) but reports a domain error.
    pub fn require_index(&self, s: &BasisState) -> Result<usize> {
        self.index_of(s).ok_or_else(|| domain!("state {s} is not in the basis (n_max={})", self.n_max))
    }

    /// Indices of all excited-level states.
    pub fn excited_indices(&self) -> core::ops::Range<usize> {
        self.scheme.f_g.multiplicity() * self.photon_block()..self.dim()
    }

    /// Indices of states with a photon number at the cutoff in either mode.
    pub fn cutoff_shell(&self) -> impl Iterator<Item = usize> + '_ {
        self.states.iter().enumerate().filter(|(_, s)| s.n_plus == self.n_max || s.n_minus == self.n_max).map(|(i, _)| i)
    }
}

/// Enumerates the product basis for `scheme` with at most `n_max` photons per mode.
pub fn enumerate_basis(scheme: LevelScheme, n_max: u32) -> SystemBasis {
    let mut states = Vec::new();
    for (level, f) in [(Level::Ground, scheme.f_g), (Level::Excited, scheme.f_e)] {
        let mut m = -f.twice();
        while m <= f.twice() {
            for n_plus in 0..=n_max {
                for n_minus in 0..=n_max {
                    states.push(BasisState { level, m: HalfInt::from_twice(m), n_plus, n_minus });
                }
            }
            m += 2;
        }
    }
    SystemBasis { scheme, n_max, states }
}

/// `A_sigma = sum |g m_g> <F_g m_g; 1 sigma | F_e m_e> <e m_e|` on the full basis.
pub fn atomic_lowering(basis: &SystemBasis, sigma: i32) -> Result<OperatorMatrix> {
    if !(-1..=1).contains(&sigma) {
        return Err(domain!("sigma must be -1, 0 or +1, got {sigma}"));
    }
    let scheme = basis.scheme;
    let mut entries = Vec::new();
    for (col, s) in basis.states.iter().enumerate() {
        if s.level != Level::Excited {
            continue;
        }
        let m_g = s.m - HalfInt::from_int(sigma);
        if m_g.twice().abs() > scheme.f_g.twice() {
            continue;
        }
        let cg = cg_coefficient(scheme.f_g, m_g, sigma, scheme.f_e, s.m)?;
        if cg == 0.0 {
            continue;
        }
        let target = BasisState { level: Level::Ground, m: m_g, ..*s };
        let row = basis.index_of(&target).expect("ground state in basis");
        entries.push((row, col, Complex64::new(cg, 0.0)));
    }
    Ok(OperatorMatrix::from_triplets(basis.dim(), entries))
}

/// Photon annihilation operator of one cavity mode (identity on the other factors).
pub fn mode_annihilation(basis: &SystemBasis, polarization: Polarization) -> OperatorMatrix {
    let mut entries = Vec::new();
    for (col, s) in basis.states.iter().enumerate() {
        let n = match polarization {
            Polarization::Plus => s.n_plus,
            Polarization::Minus => s.n_minus,
        };
        if n == 0 {
            continue;
        }
        let mut target = *s;
        match polarization {
            Polarization::Plus => target.n_plus -= 1,
            Polarization::Minus => target.n_minus -= 1,
        }
        let row = basis.index_of(&target).expect("lowered state in basis");
        entries.push((row, col, Complex64::new(libm::sqrt(n as f64), 0.0)));
    }
    OperatorMatrix::from_triplets(basis.dim(), entries)
}

/// Photon number operator of one mode (diagonal).
pub fn mode_number(basis: &SystemBasis, polarization: Polarization) -> OperatorMatrix {
    let diag: Vec<f64> = basis
        .states
        .iter()
        .map(|s| match polarization {
            Polarization::Plus => s.n_plus as f64,
            Polarization::Minus => s.n_minus as f64,
        })
        .collect();
    OperatorMatrix::diagonal(&diag)
}

/// Projector onto a ground-manifold atomic operator `sum_{m,m'} c |g_m><g_m'|` ⊗ 1.
pub fn ground_atomic_operator(basis: &SystemBasis, element: impl Fn(HalfInt, HalfInt) -> Complex64) -> OperatorMatrix {
    let mut entries = Vec::new();
    for (col, s) in basis.states.iter().enumerate() {
        if s.level != Level::Ground {
            continue;
        }
        let f = basis.scheme.f_g.twice();
        let mut m_out = -f;
        while m_out <= f {
            let c = element(HalfInt::from_twice(m_out), s.m);
            if c.norm_sqr() > 0.0 {
                let target = BasisState { m: HalfInt::from_twice(m_out), ..*s };
                entries.push((basis.index_of(&target).unwrap(), col, c));
            }
            m_out += 2;
        }
    }
    OperatorMatrix::from_triplets(basis.dim(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{StateVector, ZERO};

    fn fock_basis(n_max: u32) -> SystemBasis {
        enumerate_basis(LevelScheme::integer(3, 3).unwrap(), n_max)
    }

    #[test]
    fn dimensions() {
        assert_eq!(fock_basis(7).dim(), 896);
        assert_eq!(fock_basis(0).dim(), 14);
        assert_eq!(enumerate_basis(LevelScheme::integer(2, 1).unwrap(), 2).dim(), 72);
    }

    #[test]
    fn index_round_trip_and_order() {
        let b = fock_basis(2);
        for i in 0..b.dim() {
            assert_eq!(b.index_of(&b.state(i)), Some(i));
        }
        assert_eq!(b.state(0), BasisState::ground(-3, 0, 0));
        assert_eq!(b.state(1), BasisState::ground(-3, 0, 1));
        assert_eq!(b.state(3), BasisState::ground(-3, 1, 0));
        assert_eq!(b.state(b.dim() - 1), BasisState::excited(3, 2, 2));
        assert_eq!(b.index_of(&BasisState::ground(0, 3, 0)), None);
    }

    #[test]
    fn labels_round_trip() {
        let b = enumerate_basis(LevelScheme::new(HalfInt::from_twice(3), HalfInt::from_twice(1)).unwrap(), 1);
        for s in b.states() {
            assert_eq!(BasisState::parse_label(&s.label()), Some(*s));
        }
        assert_eq!(BasisState::ground(-3, 0, 0).label(), "g-3,0,0");
        assert_eq!(BasisState::excited(2, 1, 0).label(), "e+2,1,0");
    }

    #[test]
    fn lowering_is_nilpotent() {
        let b = fock_basis(1);
        for sigma in -1..=1 {
            let a = atomic_lowering(&b, sigma).unwrap();
            let a2 = a.mul(&a).unwrap();
            assert!(a2.is_zero());
        }
    }

    #[test]
    fn pi_lowering_kills_e0() {
        let b = fock_basis(2);
        let a0 = atomic_lowering(&b, 0).unwrap();
        for np in 0..=2 {
            for nm in 0..=2 {
                let i = b.index_of(&BasisState::excited(0, np, nm)).unwrap();
                let out = a0.apply(&StateVector::basis(b.dim(), i));
                assert!(out.0.iter().all(|z| *z == ZERO));
            }
        }
    }

    #[test]
    fn lowering_entry_is_cg() {
        let b = fock_basis(1);
        let a = atomic_lowering(&b, 1).unwrap();
        let r = b.index_of(&BasisState::ground(-3, 0, 0)).unwrap();
        let c = b.index_of(&BasisState::excited(-2, 0, 0)).unwrap();
        let cg = cg_coefficient(HalfInt::from_int(3), HalfInt::from_int(-3), 1, HalfInt::from_int(3), HalfInt::from_int(-2))
            .unwrap();
        assert_eq!(a.get(r, c).re, cg);
        assert!(cg != 0.0);
    }

    #[test]
    fn annihilation_matrix_elements() {
        let b = fock_basis(3);
        let am = mode_annihilation(&b, Polarization::Minus);
        let r = b.index_of(&BasisState::ground(1, 0, 0)).unwrap();
        let c = b.index_of(&BasisState::ground(1, 0, 1)).unwrap();
        assert_eq!(am.get(r, c).re, 1.0);
        let vac = b.index_of(&BasisState::excited(2, 2, 0)).unwrap();
        assert!(am.apply(&StateVector::basis(b.dim(), vac)).norm_sqr() == 0.0);
    }

    #[test]
    fn truncated_commutator() {
        let b = fock_basis(3);
        for pol in [Polarization::Plus, Polarization::Minus] {
            let a = mode_annihilation(&b, pol);
            let comm = a.commutator(&a.adjoint()).unwrap();
            for (i, s) in b.states().iter().enumerate() {
                let n = if pol == Polarization::Plus { s.n_plus } else { s.n_minus };
                let d = comm.get(i, i).re;
                if n < b.n_max() {
                    assert!((d - 1.0).abs() < 1e-14);
                } else {
                    assert!((d + b.n_max() as f64).abs() < 1e-12);
                }
            }
            assert!(comm.is_diagonal());
        }
    }
}
