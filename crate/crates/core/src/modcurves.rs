//! Genus of X1(N), X0(N) and X_G; degrees of the natural maps between the X1 and X0 towers.
//!
//! For X_G the coset space is `Gamma \ SL2(Z/N)` with `Gamma = +-G ∩ SL2`, i.e. right
//! cosets `Gamma x`, and `s`, `t`, `u` act by right multiplication. The genus does not
//! depend on this choice; Borel subgroups give X0(N) and `[1 *; 0 *]` gives X1(N).

use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::fasthash::KeyMap;
use crate::gl2::{adjoin_minus_identity, MatrixGroup};
use crate::modarith::{prime_factors, raw, PrimePowerModulus};
use crate::Family;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GenusProfile {
    pub mu: u64,
    pub nu2: u64,
    pub nu3: u64,
    pub nu_inf: u64,
    pub genus: u64,
}

impl GenusProfile {
    /// Assemble a profile, checking that the Euler characteristic gives a non-negative integer.
    pub fn from_counts(mu: u64, nu2: u64, nu3: u64, nu_inf: u64) -> Self {
        let twelve_g = 12 + mu as i64 - 3 * nu2 as i64 - 4 * nu3 as i64 - 6 * nu_inf as i64;
        assert!(
            twelve_g >= 0 && twelve_g % 12 == 0,
            "inconsistent counts mu={mu} nu2={nu2} nu3={nu3} nu_inf={nu_inf}"
        );
        GenusProfile {
            mu,
            nu2,
            nu3,
            nu_inf,
            genus: (twelve_g / 12) as u64,
        }
    }

    /// The j-line X(1).
    pub fn x1() -> Self {
        Self::from_counts(1, 1, 1, 1)
    }
}

impl fmt::Display for GenusProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "mu={} nu2={} nu3={} nu_inf={} genus={}",
            self.mu, self.nu2, self.nu3, self.nu_inf, self.genus
        )
    }
}

fn euler_phi(n: u64) -> u64 {
    prime_factors(n).iter().fold(n, |acc, p| acc / p * (p - 1))
}

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n % d == 0).collect()
}

fn gcd(a: u64, b: u64) -> u64 {
    crate::modarith::gcd(a, b)
}

/// Closed-form profile of X0(N).
pub fn profile_x0(n: u64) -> GenusProfile {
    assert!(n >= 1);
    let ps = prime_factors(n);
    let mu = ps.iter().fold(n, |acc, p| acc / p * (p + 1));
    let nu2 = if n % 4 == 0 {
        0
    } else {
        ps.iter()
            .map(|&p| match p {
                2 => 1,
                p if p % 4 == 1 => 2,
                _ => 0,
            })
            .product()
    };
    let nu3 = if n % 9 == 0 {
        0
    } else {
        ps.iter()
            .map(|&p| match p {
                3 => 1,
                p if p % 3 == 1 => 2,
                _ => 0,
            })
            .product()
    };
    let nu_inf = divisors(n).iter().map(|&d| euler_phi(gcd(d, n / d))).sum();
    GenusProfile::from_counts(mu, nu2, nu3, nu_inf)
}

/// Closed-form profile of X1(N).
pub fn profile_x1(n: u64) -> GenusProfile {
    assert!(n >= 1);
    if euler_phi(n) <= 2 {
        // (Z/N)^x = {+-1}, so +-Gamma1(N) = Gamma0(N)
        return profile_x0(n);
    }
    let ps = prime_factors(n);
    let mu = ps.iter().fold(n * n, |acc, p| acc / (p * p) * (p * p - 1)) / 2;
    let nu_inf = divisors(n)
        .iter()
        .map(|&d| euler_phi(d) * euler_phi(n / d))
        .sum::<u64>()
        / 2;
    GenusProfile::from_counts(mu, 0, 0, nu_inf)
}

pub fn genus_x1(n: u64) -> u64 {
    profile_x1(n).genus
}

pub fn genus_x0(n: u64) -> u64 {
    profile_x0(n).genus
}

pub fn genus_of_family(family: Family, n: u64) -> u64 {
    match family {
        Family::Gamma1 => genus_x1(n),
        Family::Gamma0 => genus_x0(n),
    }
}

/// The natural map `X(ab) -> X(a)` in either family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapDegreeSpec {
    pub family: Family,
    pub a: u64,
    pub b: u64,
    /// `1/2` or `1`; meaningful for Gamma1 only.
    pub c_f: Ratio<i64>,
}

impl MapDegreeSpec {
    pub fn new(family: Family, a: u64, b: u64) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::Invalid("map degree needs a, b >= 1".into()));
        }
        let c_f = if family == Family::Gamma1 && a <= 2 && a * b > 2 {
            Ratio::new(1, 2)
        } else {
            Ratio::from_integer(1)
        };
        Ok(MapDegreeSpec { family, a, b, c_f })
    }
}

pub fn map_degree(spec: &MapDegreeSpec) -> u64 {
    let (a, b) = (spec.a as i64, spec.b as i64);
    let coprime: Vec<i64> = prime_factors(spec.b)
        .into_iter()
        .map(|p| p as i64)
        .filter(|p| a % p != 0)
        .collect();
    let value = match spec.family {
        Family::Gamma1 => coprime
            .iter()
            .fold(spec.c_f * Ratio::from_integer(b * b), |acc, &p| {
                acc * Ratio::new(p * p - 1, p * p)
            }),
        Family::Gamma0 => coprime
            .iter()
            .fold(Ratio::from_integer(b), |acc, &p| acc * Ratio::new(p + 1, p)),
    };
    assert!(
        value.is_integer() && value > Ratio::from_integer(0),
        "non-integral map degree"
    );
    value.to_integer() as u64
}

/// Degree of `X(l^b) -> X(l^a)` for exponents `a <= b`.
pub fn tower_map_degree(family: Family, ell: u64, a: u32, b: u32) -> u64 {
    let spec = MapDegreeSpec::new(family, ell.pow(a), ell.pow(b - a)).expect("positive");
    map_degree(&spec)
}

/// Genus profile of X_G via the right action of SL2(Z/N) on cosets of `+-G ∩ SL2`.
pub fn genus_xg(g: &MatrixGroup, cap: u64) -> Result<GenusProfile> {
    let m = g.modulus();
    if m.is_level_one() {
        return Ok(GenusProfile::x1());
    }
    let q = m.modulus();
    let pm = adjoin_minus_identity(g);
    let gamma: Vec<raw::Raw> = pm
        .element_keys(cap)?
        .iter()
        .map(|&k| raw::unkey(k))
        .filter(|&x| raw::det(x, q) == 1 % q)
        .collect();
    let sl2 = crate::gl2::ambient_order(m, crate::gl2::Ambient::SL2)?;
    let mu = sl2 / gamma.len() as u64;
    if mu > cap {
        return Err(Error::CapExceeded { cap });
    }
    let canon = |x: raw::Raw| -> u64 {
        gamma
            .iter()
            .map(|&h| raw::key(raw::mul(h, x, q)))
            .min()
            .expect("nonempty")
    };
    let s = [0, q - 1, 1, 0];
    let t = [0, q - 1, 1, q - 1];
    let u = [1 % q, 1 % q, 0, 1 % q];
    let mut index: KeyMap<u32> = KeyMap::default();
    let mut cosets = vec![canon(raw::identity(q))];
    index.insert(cosets[0], 0);
    let mut perm_s = Vec::with_capacity(mu as usize);
    let mut perm_u = Vec::with_capacity(mu as usize);
    let mut i = 0;
    while i < cosets.len() {
        let x = raw::unkey(cosets[i]);
        for (gen, perm) in [(s, &mut perm_s), (u, &mut perm_u)] {
            let c = canon(raw::mul(x, gen, q));
            let next = index.len() as u32;
            let j = *index.entry(c).or_insert_with(|| {
                cosets.push(c);
                next
            });
            perm.push(j);
        }
        i += 1;
    }
    assert_eq!(cosets.len() as u64, mu, "coset count must equal the index");
    let nu2 = perm_s
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i as u32 == j)
        .count() as u64;
    let nu3 = cosets
        .iter()
        .enumerate()
        .filter(|&(i, &c)| index[&canon(raw::mul(raw::unkey(c), t, q))] == i as u32)
        .count() as u64;
    let mut seen = vec![false; cosets.len()];
    let mut nu_inf = 0;
    for start in 0..cosets.len() {
        if seen[start] {
            continue;
        }
        nu_inf += 1;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm_u[j] as usize;
        }
    }
    Ok(GenusProfile::from_counts(mu, nu2, nu3, nu_inf))
}

/// Genus of X_G for the reduction of `g` to `target`.
pub fn genus_at(g: &MatrixGroup, target: PrimePowerModulus, cap: u64) -> Result<GenusProfile> {
    genus_xg(&crate::gl2::reduce_group(g, target)?, cap)
}
