//! Angular momentum bookkeeping and dipole Clebsch-Gordan coefficients.
//!
//! Quantum numbers are stored doubled ([`HalfInt`]) so that half-integer
//! levels are represented exactly. Coefficients follow the Condon-Shortley
//! phase convention: `<j1 j1; j2 (J - j1) | J J>` is positive.
//!
//! The coefficient is evaluated from the Racah sum with exact arithmetic.
//! Factorial ratios are carried as prime-exponent vectors and the alternating
//! sum as a reduced integer, so the only rounding happens in the final square
//! root.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{domain, Result};

/// A half-integer quantum number stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    /// Builds from the doubled value (`from_twice(3)` is 3/2).
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(v: i32) -> Self {
        HalfInt(2 * v)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Number of magnetic sublevels, `2j + 1`.
    pub fn multiplicity(self) -> usize {
        (self.0 + 1).max(0) as usize
    }

    /// Parses "3", "-2", "3/2" or "-1/2".
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            if den.trim() != "2" {
                return None;
            }
            let n: i32 = num.trim().parse().ok()?;
            if n % 2 == 0 {
                return None;
            }
            Some(HalfInt(n))
        } else {
            let n: i32 = s.parse().ok()?;
            Some(HalfInt(2 * n))
        }
    }
}

impl core::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl core::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl core::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Ground and excited angular momenta of a single dipole transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelScheme {
    pub f_g: HalfInt,
    pub f_e: HalfInt,
}

impl LevelScheme {
    pub fn new(f_g: HalfInt, f_e: HalfInt) -> Result<Self> {
        if f_g.twice() < 0 || f_e.twice() < 0 {
            return Err(domain!("angular momenta must be non-negative (F_g={f_g}, F_e={f_e})"));
        }
        if (f_g.twice() - f_e.twice()).abs() > 2 {
            return Err(domain!("|F_g - F_e| must not exceed 1 (F_g={f_g}, F_e={f_e})"));
        }
        if f_g.twice() % 2 != f_e.twice() % 2 {
            return Err(domain!("F_g={f_g} and F_e={f_e} differ by a half-integer"));
        }
        if f_g.twice() == 0 && f_e.twice() == 0 {
            return Err(domain!("0 -> 0 has no dipole coupling"));
        }
        Ok(LevelScheme { f_g, f_e })
    }

    /// Integer-valued convenience constructor.
    pub fn integer(f_g: i32, f_e: i32) -> Result<Self> {
        Self::new(HalfInt::from_int(f_g), HalfInt::from_int(f_e))
    }
}

/// `<F_g m_g; 1 sigma | F_e m_e>` in the Condon-Shortley convention.
///
/// Returns zero when `m_e != m_g + sigma` or when a projection lies outside
/// its range on the excited side of the selection rule.
pub fn cg_coefficient(f_g: HalfInt, m_g: HalfInt, sigma: i32, f_e: HalfInt, m_e: HalfInt) -> Result<f64> {
    if !(-1..=1).contains(&sigma) {
        return Err(domain!("sigma must be -1, 0 or +1, got {sigma}"));
    }
    if f_g.twice() < 0 || f_e.twice() < 0 {
        return Err(domain!("negative angular momentum"));
    }
    if (f_g.twice() - m_g.twice()) % 2 != 0 {
        return Err(domain!("F_g={f_g} and m_g={m_g} have different parity"));
    }
    if (f_e.twice() - m_e.twice()) % 2 != 0 {
        return Err(domain!("F_e={f_e} and m_e={m_e} have different parity"));
    }
    if m_g.twice().abs() > f_g.twice() {
        return Err(domain!("|m_g|={m_g} exceeds F_g={f_g}"));
    }
    if m_e.twice().abs() > f_e.twice() {
        return Err(domain!("|m_e|={m_e} exceeds F_e={f_e}"));
    }
    if m_e.twice() != m_g.twice() + 2 * sigma {
        return Ok(0.0);
    }
    clebsch_gordan(f_g, m_g, HalfInt::from_int(1), HalfInt::from_int(sigma), f_e, m_e)
}

/// General `<j1 m1; j2 m2 | J M>` via the Racah formula.
pub fn clebsch_gordan(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, j: HalfInt, m: HalfInt) -> Result<f64> {
    let (j1, m1, j2, m2, j, m) = (j1.twice(), m1.twice(), j2.twice(), m2.twice(), j.twice(), m.twice());
    if j1 < 0 || j2 < 0 || j < 0 {
        return Err(domain!("negative angular momentum"));
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j + m) % 2 != 0 {
        return Err(domain!("parity mismatch between angular momentum and projection"));
    }
    if m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return Ok(0.0);
    }
    if m1 + m2 != m {
        return Ok(0.0);
    }
    // Triangle condition and integrality of j1 + j2 + J.
    if j > j1 + j2 || j < (j1 - j2).abs() || (j1 + j2 + j) % 2 != 0 {
        return Ok(0.0);
    }
    // All arguments below are doubled values of integers; halve them.
    let h = |x: i32| (x / 2) as u32;
    let a = h(j1 + j2 - j);
    let b = h(j1 - m1);
    let c = h(j2 + m2);
    let d = ((j - j2 + m1) / 2) as i64;
    let e = ((j - j1 - m2) / 2) as i64;
    let top = h(j1 + j2 + j) + 1;

    let table = PrimeTable::up_to(top as usize + 2);

    // Squared prefactor as prime exponents.
    let mut pref = table.zero();
    table.add_int(&mut pref, (j + 1) as u64, 1);
    for (arg, sign) in [
        (h(j + j1 - j2), 1),
        (h(j - j1 + j2), 1),
        (a, 1),
        (top, -1),
        (h(j + m), 1),
        (h(j - m), 1),
        (b, 1),
        (h(j1 + m1), 1),
        (h(j2 - m2), 1),
        (c, 1),
    ] {
        table.add_factorial(&mut pref, arg, sign);
    }

    // Racah sum over k with (-1)^k / [k!(a-k)!(b-k)!(c-k)!(d+k)!(e+k)!].
    let k_min = 0i64.max(-d).max(-e) as u32;
    let k_max = a.min(b).min(c);
    if k_min > k_max {
        return Ok(0.0);
    }
    let terms: Vec<(i64, Vec<i32>)> = (k_min..=k_max)
        .map(|k| {
            let mut den = table.zero();
            let (dk, ek) = ((d + k as i64) as u32, (e + k as i64) as u32);
            for arg in [k, a - k, b - k, c - k, dk, ek] {
                table.add_factorial(&mut den, arg, 1);
            }
            (if k % 2 == 0 { 1 } else { -1 }, den)
        })
        .collect();
    // Common denominator: elementwise maximum of exponents.
    let mut lcm = table.zero();
    for (_, den) in &terms {
        for (l, &x) in lcm.iter_mut().zip(den) {
            *l = (*l).max(x);
        }
    }
    let mut sum: i128 = 0;
    for (sign, den) in &terms {
        let mut q: i128 = 1;
        for (p, (&l, &x)) in table.primes.iter().zip(lcm.iter().zip(den)) {
            for _ in 0..(l - x) {
                q = q
                    .checked_mul(*p as i128)
                    .ok_or_else(|| domain!("angular momentum too large for exact evaluation"))?;
            }
        }
        sum += *sign as i128 * q;
    }
    if sum == 0 {
        return Ok(0.0);
    }
    let negative = sum < 0;
    // value^2 = pref * sum^2 / lcm^2
    let mut sq = pref;
    for (s, &l) in sq.iter_mut().zip(&lcm) {
        *s -= 2 * l;
    }
    let mut rest = sum.unsigned_abs();
    for (i, &p) in table.primes.iter().enumerate() {
        while rest % p as u128 == 0 {
            rest /= p as u128;
            sq[i] += 2;
        }
    }
    // Any cofactor left over is a prime above the table; it enters squared.
    let mut value = rest as f64;
    let mut num = 1.0f64;
    let mut den = 1.0f64;
    let mut num_sqrt = 1.0f64;
    let mut den_sqrt = 1.0f64;
    for (&p, &e) in table.primes.iter().zip(&sq) {
        let pf = p as f64;
        let (target, target_sqrt) = if e >= 0 { (&mut num, &mut num_sqrt) } else { (&mut den, &mut den_sqrt) };
        let e = e.unsigned_abs();
        for _ in 0..e / 2 {
            *target *= pf;
        }
        if e % 2 == 1 {
            *target_sqrt *= pf;
        }
    }
    value *= num / den * libm::sqrt(num_sqrt / den_sqrt);
    Ok(if negative { -value } else { value })
}

/// Primes up to a bound, used to hold factorial ratios as exponent vectors.
struct PrimeTable {
    primes: Vec<u64>,
}

impl PrimeTable {
    fn up_to(n: usize) -> Self {
        let n = n.max(2);
        let mut sieve = vec![true; n + 1];
        let mut primes = Vec::new();
        for i in 2..=n {
            if sieve[i] {
                primes.push(i as u64);
                let mut j = i * i;
                while j <= n {
                    sieve[j] = false;
                    j += i;
                }
            }
        }
        PrimeTable { primes }
    }

    fn zero(&self) -> Vec<i32> {
        vec![0; self.primes.len()]
    }

    fn add_factorial(&self, acc: &mut [i32], n: u32, sign: i32) {
        for (i, &p) in self.primes.iter().enumerate() {
            // Legendre's formula.
            let mut q = n as u64 / p;
            let mut e = 0;
            while q > 0 {
                e += q as i32;
                q /= p;
            }
            acc[i] += sign * e;
        }
    }

    fn add_int(&self, acc: &mut [i32], mut n: u64, sign: i32) {
        for (i, &p) in self.primes.iter().enumerate() {
            while n % p == 0 {
                n /= p;
                acc[i] += sign;
            }
        }
        debug_assert_eq!(n, 1, "prime factor outside table");
    }
}
