//! Scalars and 2x2 matrices over Z/l^n.

use std::fmt;

use crate::error::{Error, Result};

/// Largest modulus accepted anywhere: products of two residues must fit in a `u64`.
pub const MAX_MODULUS: u64 = u32::MAX as u64;

/// A prime power `ell^exponent`. Exponent 0 is the level-one marker (modulus 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimePowerModulus {
    ell: u64,
    exponent: u32,
    modulus: u64,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime factors in increasing order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl PrimePowerModulus {
    pub fn new(ell: u64, exponent: u32) -> Result<Self> {
        if !is_prime(ell) {
            return Err(Error::NotPrime(ell));
        }
        let modulus = ell
            .checked_pow(exponent)
            .filter(|&m| m <= MAX_MODULUS)
            .ok_or(Error::ModulusTooLarge(ell))?;
        Ok(PrimePowerModulus {
            ell,
            exponent,
            modulus,
        })
    }

    /// The degenerate level-one marker attached to the prime `ell`.
    pub fn level_one(ell: u64) -> Result<Self> {
        Self::new(ell, 0)
    }

    /// Factor `m` as a prime power. `m = 1` is rejected because the prime is unknown.
    pub fn from_modulus(m: u64) -> Result<Self> {
        if m > MAX_MODULUS {
            return Err(Error::ModulusTooLarge(m));
        }
        let ps = prime_factors(m);
        if ps.len() != 1 {
            return Err(Error::NotPrimePower(m));
        }
        let ell = ps[0];
        let mut e = 0;
        let mut r = m;
        while r > 1 {
            r /= ell;
            e += 1;
        }
        Self::new(ell, e)
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_level_one(&self) -> bool {
        self.exponent == 0
    }

    /// Same prime, different exponent.
    pub fn with_exponent(&self, exponent: u32) -> Result<Self> {
        Self::new(self.ell, exponent)
    }

    /// True when `self` divides `other` as prime powers of the same prime.
    pub fn divides(&self, other: &PrimePowerModulus) -> bool {
        self.ell == other.ell && self.exponent <= other.exponent
    }

    /// Order of the unit group, phi(l^n).
    pub fn unit_count(&self) -> u64 {
        if self.exponent == 0 {
            1
        } else {
            self.modulus / self.ell * (self.ell - 1)
        }
    }

    pub fn reduce(&self, x: i64) -> u64 {
        x.rem_euclid(self.modulus as i64) as u64
    }
}

impl fmt::Display for PrimePowerModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.modulus)
    }
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    a * b % m
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i64, (a % m) as i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i64) as u64)
}

/// Number of times `ell` divides `x` in Z/ell^n, capped at `n` (so 0 has valuation `n`).
pub fn valuation(x: u64, m: PrimePowerModulus) -> u32 {
    let mut v = 0;
    let mut x = x % m.modulus.max(1);
    if x == 0 {
        return m.exponent;
    }
    while x % m.ell == 0 {
        x /= m.ell;
        v += 1;
    }
    v
}

pub fn is_quadratic_residue(a: u64, ell: u64) -> bool {
    let a = a % ell;
    a == 0 || ell == 2 || pow_mod(a, (ell - 1) / 2, ell) == 1
}

/// Smallest positive quadratic non-residue mod an odd prime.
pub fn smallest_nonresidue(ell: u64) -> Result<u64> {
    if ell == 2 || !is_prime(ell) {
        return Err(Error::Invalid(format!(
            "no quadratic non-residue mod {ell}"
        )));
    }
    Ok((2..ell)
        .find(|&a| !is_quadratic_residue(a, ell))
        .expect("odd prime has a non-residue"))
}

/// Generators of the unit group of Z/l^n (one for odd l, up to two for l = 2).
pub fn unit_generators(m: PrimePowerModulus) -> Vec<u64> {
    let (ell, n, q) = (m.ell, m.exponent, m.modulus);
    if n == 0 {
        return Vec::new();
    }
    if ell == 2 {
        return match n {
            1 => Vec::new(),
            2 => vec![3],
            _ => vec![q - 1, 5],
        };
    }
    let phi = ell - 1;
    let ps = prime_factors(phi);
    let mut g = (2..ell)
        .find(|&g| ps.iter().all(|&p| pow_mod(g, phi / p, ell) != 1))
        .unwrap_or(1);
    if ell == 3 {
        g = 2;
    }
    if n >= 2 && pow_mod(g, ell - 1, ell * ell) == 1 {
        g += ell;
    }
    vec![g % q]
}

/// Subgroup of (Z/l^n)^x generated by `gens`, as a sorted element list.
pub fn unit_subgroup(gens: &[u64], m: PrimePowerModulus) -> Vec<u64> {
    let q = m.modulus;
    let mut seen = vec![false; q as usize];
    let one = 1 % q;
    seen[one as usize] = true;
    let mut out = vec![one];
    let mut i = 0;
    while i < out.len() {
        let x = out[i];
        for &g in gens {
            let y = x * (g % q) % q;
            if !seen[y as usize] {
                seen[y as usize] = true;
                out.push(y);
            }
        }
        i += 1;
    }
    out.sort_unstable();
    out
}

/// The determinant homomorphism onto the l-part of (Z/l^2)^x, valued in F_l:
/// `x -> ((x^(l-1) - 1) / l) mod l`. Only meaningful for odd l.
pub fn ell_part_log(x: u64, ell: u64) -> u64 {
    let l2 = ell * ell;
    let y = pow_mod(x % l2, ell - 1, l2);
    (y + l2 - 1) % l2 / ell % ell
}

/// A 2x2 matrix `[m11 m12; m21 m22]` with reduced entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResidueMatrix {
    modulus: PrimePowerModulus,
    entries: [u64; 4],
}

impl ResidueMatrix {
    pub fn new(entries: [i64; 4], modulus: PrimePowerModulus) -> Self {
        ResidueMatrix {
            modulus,
            entries: entries.map(|x| modulus.reduce(x)),
        }
    }

    /// Build from entries that must already lie in `[0, modulus)`.
    pub fn from_reduced(entries: [u64; 4], modulus: PrimePowerModulus) -> Result<Self> {
        if let Some(&bad) = entries.iter().find(|&&x| x >= modulus.modulus().max(1)) {
            return Err(Error::Invalid(format!(
                "entry {bad} out of range for modulus {modulus}"
            )));
        }
        Ok(ResidueMatrix { modulus, entries })
    }

    pub fn identity(modulus: PrimePowerModulus) -> Self {
        Self::new([1, 0, 0, 1], modulus)
    }

    pub fn scalar(c: i64, modulus: PrimePowerModulus) -> Self {
        Self::new([c, 0, 0, c], modulus)
    }

    pub fn modulus(&self) -> PrimePowerModulus {
        self.modulus
    }

    pub fn entries(&self) -> [u64; 4] {
        self.entries
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.modulus)
    }

    pub fn mul(&self, other: &ResidueMatrix) -> Result<ResidueMatrix> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(
                self.modulus.modulus(),
                other.modulus.modulus(),
            ));
        }
        Ok(ResidueMatrix {
            modulus: self.modulus,
            entries: raw::mul(self.entries, other.entries, self.modulus.modulus()),
        })
    }

    pub fn det(&self) -> u64 {
        raw::det(self.entries, self.modulus.modulus())
    }

    pub fn is_invertible(&self) -> bool {
        self.modulus.is_level_one() || self.det() % self.modulus.ell() != 0
    }

    pub fn inv(&self) -> Result<ResidueMatrix> {
        let q = self.modulus.modulus();
        raw::inv(self.entries, q)
            .map(|entries| ResidueMatrix {
                modulus: self.modulus,
                entries,
            })
            .ok_or(Error::NotInvertible {
                det: self.det(),
                modulus: q,
            })
    }

    pub fn pow(&self, e: u64) -> ResidueMatrix {
        ResidueMatrix {
            modulus: self.modulus,
            entries: raw::pow(self.entries, e, self.modulus.modulus()),
        }
    }

    /// Multiplicative order, found by stripping primes from the order of GL2(Z/l^n).
    pub fn order(&self) -> Result<u64> {
        if !self.is_invertible() {
            return Err(Error::NotInvertible {
                det: self.det(),
                modulus: self.modulus.modulus(),
            });
        }
        if self.modulus.is_level_one() {
            return Ok(1);
        }
        let l = self.modulus.ell();
        let n = self.modulus.exponent() as u64;
        let mut big = l.pow((4 * n - 3) as u32) * (l - 1) * (l * l - 1);
        let mut ps = prime_factors(l - 1);
        ps.extend(prime_factors(l * l - 1));
        ps.push(l);
        ps.sort_unstable();
        ps.dedup();
        let q = self.modulus.modulus();
        for p in ps {
            while big % p == 0 && raw::is_identity(raw::pow(self.entries, big / p, q), q) {
                big /= p;
            }
        }
        Ok(big)
    }

    /// Entrywise reduction to a modulus dividing this one.
    pub fn reduce(&self, target: PrimePowerModulus) -> Result<ResidueMatrix> {
        if !target.divides(&self.modulus) {
            return Err(Error::NotDivisor {
                target: target.modulus(),
                source_modulus: self.modulus.modulus(),
            });
        }
        Ok(ResidueMatrix {
            modulus: target,
            entries: self.entries.map(|x| x % target.modulus()),
        })
    }

    /// Same entries viewed modulo a multiple (the standard lift).
    pub fn lift(&self, target: PrimePowerModulus) -> Result<ResidueMatrix> {
        if !self.modulus.divides(&target) {
            return Err(Error::NotDivisor {
                target: self.modulus.modulus(),
                source_modulus: target.modulus(),
            });
        }
        Ok(ResidueMatrix {
            modulus: target,
            entries: self.entries,
        })
    }

    pub fn trace(&self) -> u64 {
        (self.entries[0] + self.entries[3]) % self.modulus.modulus()
    }
}

impl fmt::Display for ResidueMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.entries;
        write!(f, "[{a} {b}; {c} {d}]")
    }
}

pub fn mat_mul(a: &ResidueMatrix, b: &ResidueMatrix) -> Result<ResidueMatrix> {
    a.mul(b)
}

pub fn mat_det(a: &ResidueMatrix) -> u64 {
    a.det()
}

pub fn mat_inv(a: &ResidueMatrix) -> Result<ResidueMatrix> {
    a.inv()
}

pub fn mat_order(a: &ResidueMatrix) -> Result<u64> {
    a.order()
}

pub fn reduce_matrix(a: &ResidueMatrix, target: PrimePowerModulus) -> Result<ResidueMatrix> {
    a.reduce(target)
}

/// Unchecked arithmetic on raw entry arrays and their packed keys.
pub(crate) mod raw {
    pub type Raw = [u64; 4];

    #[inline]
    pub fn mul(a: Raw, b: Raw, q: u64) -> Raw {
        [
            (a[0] * b[0] + a[1] * b[2]) % q,
            (a[0] * b[1] + a[1] * b[3]) % q,
            (a[2] * b[0] + a[3] * b[2]) % q,
            (a[2] * b[1] + a[3] * b[3]) % q,
        ]
    }

    #[inline]
    pub fn det(a: Raw, q: u64) -> u64 {
        (a[0] * a[3] % q + q - a[1] * a[2] % q) % q
    }

    pub fn inv(a: Raw, q: u64) -> Option<Raw> {
        let di = super::inv_mod(det(a, q), q)?;
        Some([
            a[3] * di % q,
            (q - a[1]) % q * di % q,
            (q - a[2]) % q * di % q,
            a[0] * di % q,
        ])
    }

    pub fn identity(q: u64) -> Raw {
        [1 % q, 0, 0, 1 % q]
    }

    pub fn is_identity(a: Raw, q: u64) -> bool {
        a == identity(q)
    }

    pub fn pow(mut a: Raw, mut e: u64, q: u64) -> Raw {
        let mut acc = identity(q);
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, a, q);
            }
            a = mul(a, a, q);
            e >>= 1;
        }
        acc
    }

    /// Pack into 16 bits per entry; lexicographic on (m11, m12, m21, m22).
    #[inline]
    pub fn key(a: Raw) -> u64 {
        (a[0] << 48) | (a[1] << 32) | (a[2] << 16) | a[3]
    }

    #[inline]
    pub fn unkey(k: u64) -> Raw {
        [k >> 48, (k >> 32) & 0xffff, (k >> 16) & 0xffff, k & 0xffff]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m49() -> PrimePowerModulus {
        PrimePowerModulus::new(7, 2).unwrap()
    }

    fn naive_mul(a: [i128; 4], b: [i128; 4], q: i128) -> [u64; 4] {
        let c = [
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ];
        c.map(|x| x.rem_euclid(q) as u64)
    }

    #[test]
    fn modulus_construction() {
        assert_eq!(PrimePowerModulus::from_modulus(343).unwrap().exponent(), 3);
        assert!(PrimePowerModulus::from_modulus(12).is_err());
        assert!(PrimePowerModulus::new(9, 1).is_err());
        let one = PrimePowerModulus::level_one(7).unwrap();
        assert!(one.is_level_one());
        assert_eq!(one.modulus(), 1);
        assert!(PrimePowerModulus::new(2, 40).is_err());
    }

    #[test]
    fn printed_generator_squared() {
        // 37 + 48*37 = 37*49 and 48^2 = 2304 = 47*49 + 1, so the square is I
        let a = ResidueMatrix::new([1, 0, 37, 48], m49());
        assert_eq!(a.mul(&a).unwrap().entries(), [1, 0, 0, 1]);
        let b = ResidueMatrix::new([20, 4, 18, 21], m49());
        assert_eq!(
            a.mul(&b).unwrap().entries(),
            naive_mul([1, 0, 37, 48], [20, 4, 18, 21], 49)
        );
        assert_eq!(a.det(), 48);
        assert_eq!(ResidueMatrix::new([22, 0, 0, 22], m49()).det(), 43);
    }

    #[test]
    fn inverse_and_errors() {
        let d = ResidueMatrix::new([2, 0, 0, 1], m49());
        assert_eq!(d.inv().unwrap().entries(), [25, 0, 0, 1]);
        let bad = ResidueMatrix::new([7, 0, 0, 1], m49());
        assert!(matches!(bad.inv(), Err(Error::NotInvertible { .. })));
        assert!(bad.order().is_err());
        let m7 = PrimePowerModulus::new(7, 1).unwrap();
        assert!(d.mul(&ResidueMatrix::identity(m7)).is_err());
    }

    #[test]
    fn orders_of_s_and_t() {
        let m7 = PrimePowerModulus::new(7, 1).unwrap();
        assert_eq!(ResidueMatrix::new([0, -1, 1, 0], m7).order().unwrap(), 4);
        assert_eq!(ResidueMatrix::new([0, -1, 1, -1], m7).order().unwrap(), 3);
        assert_eq!(ResidueMatrix::identity(m7).order().unwrap(), 1);
        assert_eq!(ResidueMatrix::new([1, 1, 0, 1], m49()).order().unwrap(), 49);
    }

    #[test]
    fn reduction() {
        let a = ResidueMatrix::new([1, 0, 37, 48], m49());
        let m7 = PrimePowerModulus::new(7, 1).unwrap();
        assert_eq!(a.reduce(m7).unwrap().entries(), [1, 0, 2, 6]);
        assert_eq!(a.reduce(m49()).unwrap(), a);
        let one = PrimePowerModulus::level_one(7).unwrap();
        assert_eq!(a.reduce(one).unwrap().entries(), [0, 0, 0, 0]);
        assert!(a.reduce(PrimePowerModulus::new(5, 1).unwrap()).is_err());
    }

    #[test]
    fn unit_group_generators() {
        for (l, n) in [(3, 1), (3, 3), (5, 2), (7, 2), (7, 3), (17, 1), (37, 1)] {
            let m = PrimePowerModulus::new(l, n).unwrap();
            assert_eq!(
                unit_subgroup(&unit_generators(m), m).len() as u64,
                m.unit_count()
            );
        }
        for n in 1..6 {
            let m = PrimePowerModulus::new(2, n).unwrap();
            assert_eq!(
                unit_subgroup(&unit_generators(m), m).len() as u64,
                m.unit_count()
            );
        }
        assert_eq!(smallest_nonresidue(7).unwrap(), 3);
        assert_eq!(smallest_nonresidue(17).unwrap(), 3);
        assert_eq!(smallest_nonresidue(41).unwrap(), 3);
        assert_eq!(smallest_nonresidue(73).unwrap(), 5);
    }

    #[test]
    fn ell_part_log_is_a_homomorphism() {
        for l in [3u64, 5, 7, 11] {
            let q = l * l;
            for x in (1..q).filter(|x| x % l != 0) {
                for y in (1..q).filter(|y| y % l != 0) {
                    let lhs = ell_part_log(x * y % q, l);
                    assert_eq!(lhs, (ell_part_log(x, l) + ell_part_log(y, l)) % l);
                }
            }
            assert_eq!(ell_part_log(1 + l, l), l - 1);
        }
    }

    #[test]
    fn key_order_is_lexicographic() {
        let a = [1, 2, 3, 4];
        let b = [1, 2, 4, 0];
        assert!(raw::key(a) < raw::key(b));
        assert_eq!(raw::unkey(raw::key(b)), b);
    }
}
