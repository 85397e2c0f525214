//! Orbits on torsion vectors (up to sign) and on cyclic submodules of (Z/l^k)^2.
//!
//! Matrices act on column vectors from the left. The size of an orbit is the
//! degree of the corresponding closed point on X1(l^k) or X0(l^k).

use std::fmt;

use crate::error::{Error, Result};
use crate::gl2::MatrixGroup;
use crate::modarith::{inv_mod, raw, PrimePowerModulus};
use crate::Family;

/// A vector of exact order `l^k` in `(Z/l^k)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorsionVector {
    pub modulus: PrimePowerModulus,
    pub x: u64,
    pub y: u64,
}

impl TorsionVector {
    pub fn new(x: i64, y: i64, modulus: PrimePowerModulus) -> Result<Self> {
        let v = TorsionVector {
            modulus,
            x: modulus.reduce(x),
            y: modulus.reduce(y),
        };
        if !modulus.is_level_one() && v.x % modulus.ell() == 0 && v.y % modulus.ell() == 0 {
            return Err(Error::Invalid(format!(
                "({x}, {y}) does not have exact order {modulus}"
            )));
        }
        Ok(v)
    }

    pub fn negate(&self) -> Self {
        let q = self.modulus.modulus();
        TorsionVector {
            modulus: self.modulus,
            x: (q - self.x) % q,
            y: (q - self.y) % q,
        }
    }

    /// The lesser of `v` and `-v`.
    pub fn sign_canonical(&self) -> Self {
        (*self).min(self.negate())
    }

    pub fn reduce(&self, target: PrimePowerModulus) -> Self {
        let q = target.modulus();
        TorsionVector {
            modulus: target,
            x: self.x % q,
            y: self.y % q,
        }
    }
}

impl fmt::Display for TorsionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// A cyclic submodule of order `l^k`, stored by its least generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicSubmodule {
    generator: TorsionVector,
}

impl CyclicSubmodule {
    pub fn new(v: TorsionVector) -> Self {
        let (x, y) = line_canonical(v.x, v.y, v.modulus);
        CyclicSubmodule {
            generator: TorsionVector { x, y, ..v },
        }
    }

    pub fn generator(&self) -> TorsionVector {
        self.generator
    }

    pub fn reduce(&self, target: PrimePowerModulus) -> Self {
        Self::new(self.generator.reduce(target))
    }
}

impl fmt::Display for CyclicSubmodule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.generator)
    }
}

/// Lexicographically least unit multiple of `(x, y)`.
fn line_canonical(x: u64, y: u64, m: PrimePowerModulus) -> (u64, u64) {
    let q = m.modulus();
    if q == 1 {
        return (0, 0);
    }
    let l = m.ell();
    if x % l != 0 {
        let xi = inv_mod(x, q).expect("unit");
        return (1 % q, y * xi % q);
    }
    let yi = inv_mod(y, q).expect("exact order forces a unit coordinate");
    let x1 = x * yi % q;
    if x1 == 0 {
        return (0, 1 % q);
    }
    let mut v = 0;
    let mut w = x1;
    while w % l == 0 {
        w /= l;
        v += 1;
    }
    let rest = q / l.pow(v);
    let u = inv_mod(w % rest, rest).expect("unit");
    (l.pow(v), u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Representative {
    Vector(TorsionVector),
    Submodule(CyclicSubmodule),
}

impl Representative {
    fn vector(&self) -> TorsionVector {
        match self {
            Representative::Vector(v) => *v,
            Representative::Submodule(s) => s.generator,
        }
    }

    pub fn reduce(&self, target: PrimePowerModulus) -> Self {
        match self {
            Representative::Vector(v) => Representative::Vector(v.reduce(target).sign_canonical()),
            Representative::Submodule(s) => Representative::Submodule(s.reduce(target)),
        }
    }
}

impl fmt::Display for Representative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representative::Vector(v) => write!(f, "+-{v}"),
            Representative::Submodule(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitRecord {
    pub family: Family,
    pub level: PrimePowerModulus,
    pub representative: Representative,
    pub size: u64,
}

/// Orbit decomposition of one carrier set, indexed by packed coordinates `x*q + y`.
pub struct OrbitTable {
    family: Family,
    modulus: PrimePowerModulus,
    orbit_of: Vec<u32>,
    orbits: Vec<(u64, u64)>, // (representative index, size)
}

impl OrbitTable {
    /// Orbits of `g mod l^k`. Fails when `k` exceeds the exponent of `g`'s modulus.
    pub fn new(g: &MatrixGroup, family: Family, k: u32) -> Result<Self> {
        let gm = g.modulus();
        if k > gm.exponent() {
            return Err(Error::Invalid(format!(
                "level exponent {k} exceeds the exponent {} of the group's modulus",
                gm.exponent()
            )));
        }
        let m = gm.with_exponent(k)?;
        let q = m.modulus();
        let gens: Vec<raw::Raw> = g
            .raw_generators()
            .into_iter()
            .map(|e| e.map(|x| x % q))
            .collect();
        Ok(Self::from_raw(&gens, m, family))
    }

    pub(crate) fn from_raw(gens: &[raw::Raw], m: PrimePowerModulus, family: Family) -> Self {
        let q = m.modulus();
        let l = m.ell();
        let size = (q * q) as usize;
        let mut orbit_of = vec![u32::MAX; size];
        let mut orbits = Vec::new();
        if q == 1 {
            orbit_of[0] = 0;
            orbits.push((0, 1));
            return OrbitTable {
                family,
                modulus: m,
                orbit_of,
                orbits,
            };
        }
        let canon = |x: u64, y: u64| -> u64 {
            match family {
                Family::Gamma1 => {
                    let n = ((q - x) % q, (q - y) % q);
                    let (a, b) = (x, y).min(n);
                    a * q + b
                }
                Family::Gamma0 => {
                    let (a, b) = line_canonical(x, y, m);
                    a * q + b
                }
            }
        };
        let mut queue = Vec::new();
        for start in 0..size as u64 {
            let (x, y) = (start / q, start % q);
            if x % l == 0 && y % l == 0 {
                continue;
            }
            if canon(x, y) != start || orbit_of[start as usize] != u32::MAX {
                continue;
            }
            let id = orbits.len() as u32;
            orbit_of[start as usize] = id;
            queue.clear();
            queue.push(start);
            let mut i = 0;
            while i < queue.len() {
                let (x, y) = (queue[i] / q, queue[i] % q);
                for g in gens {
                    let nx = (g[0] * x + g[1] * y) % q;
                    let ny = (g[2] * x + g[3] * y) % q;
                    let c = canon(nx, ny);
                    if orbit_of[c as usize] == u32::MAX {
                        orbit_of[c as usize] = id;
                        queue.push(c);
                    }
                }
                i += 1;
            }
            orbits.push((start, queue.len() as u64));
        }
        OrbitTable {
            family,
            modulus: m,
            orbit_of,
            orbits,
        }
    }

    pub fn modulus(&self) -> PrimePowerModulus {
        self.modulus
    }

    fn canonical_index(&self, v: TorsionVector) -> u64 {
        let q = self.modulus.modulus();
        if q == 1 {
            return 0;
        }
        let (x, y) = match self.family {
            Family::Gamma1 => {
                let c = v.reduce(self.modulus).sign_canonical();
                (c.x, c.y)
            }
            Family::Gamma0 => line_canonical(v.x % q, v.y % q, self.modulus),
        };
        x * q + y
    }

    /// Size of the orbit containing (the reduction of) `v`.
    pub fn degree_of(&self, v: TorsionVector) -> u64 {
        let id = self.orbit_of[self.canonical_index(v) as usize];
        self.orbits[id as usize].1
    }

    pub fn records(&self) -> Vec<OrbitRecord> {
        let q = self.modulus.modulus();
        self.orbits
            .iter()
            .map(|&(idx, size)| {
                let v = TorsionVector {
                    modulus: self.modulus,
                    x: idx / q,
                    y: idx % q,
                };
                let representative = match self.family {
                    Family::Gamma1 => Representative::Vector(v),
                    Family::Gamma0 => Representative::Submodule(CyclicSubmodule { generator: v }),
                };
                OrbitRecord {
                    family: self.family,
                    level: self.modulus,
                    representative,
                    size,
                }
            })
            .collect()
    }
}

pub fn gamma1_orbits(g: &MatrixGroup, k: u32) -> Result<Vec<OrbitRecord>> {
    Ok(OrbitTable::new(g, Family::Gamma1, k)?.records())
}

pub fn gamma0_orbits(g: &MatrixGroup, k: u32) -> Result<Vec<OrbitRecord>> {
    Ok(OrbitTable::new(g, Family::Gamma0, k)?.records())
}

pub fn orbits(g: &MatrixGroup, family: Family, k: u32) -> Result<Vec<OrbitRecord>> {
    Ok(OrbitTable::new(g, family, k)?.records())
}

/// Size of the single orbit through `rep` (BFS from that point only).
fn orbit_size_through(g: &MatrixGroup, family: Family, v: TorsionVector) -> u64 {
    let m = v.modulus;
    let q = m.modulus();
    if q == 1 {
        return 1;
    }
    let gens: Vec<raw::Raw> = g
        .raw_generators()
        .into_iter()
        .map(|e| e.map(|x| x % q))
        .collect();
    let canon = |x: u64, y: u64| -> (u64, u64) {
        match family {
            Family::Gamma1 => (x, y).min(((q - x) % q, (q - y) % q)),
            Family::Gamma0 => line_canonical(x, y, m),
        }
    };
    let start = canon(v.x, v.y);
    let mut seen = std::collections::HashSet::new();
    seen.insert(start);
    let mut queue = vec![start];
    let mut i = 0;
    while i < queue.len() {
        let (x, y) = queue[i];
        for g in &gens {
            let c = canon((g[0] * x + g[1] * y) % q, (g[2] * x + g[3] * y) % q);
            if seen.insert(c) {
                queue.push(c);
            }
        }
        i += 1;
    }
    queue.len() as u64
}

/// Degrees of the images of `rec` at levels `l^k, l^(k-1), ..., 1`.
pub fn orbit_degree_tower(g: &MatrixGroup, rec: &OrbitRecord) -> Result<Vec<(u32, u64)>> {
    let k = rec.level.exponent();
    let v = rec.representative.vector();
    let mut out = Vec::with_capacity(k as usize + 1);
    for a in (0..=k).rev() {
        let m = rec.level.with_exponent(a)?;
        out.push((a, orbit_size_through(g, rec.family, v.reduce(m))));
    }
    Ok(out)
}

/// Size of the carrier set at level `l^k`: the expected sum of orbit sizes.
pub fn carrier_size(family: Family, m: PrimePowerModulus) -> u64 {
    let q = m.modulus();
    let l = m.ell();
    if q == 1 {
        return 1;
    }
    match family {
        Family::Gamma1 if q == 2 => 3,
        Family::Gamma1 => (q * q - q * q / (l * l)) / 2,
        Family::Gamma0 => q / l * (l + 1),
    }
}
