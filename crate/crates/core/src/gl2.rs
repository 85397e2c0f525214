//! Subgroups of GL2(Z/l^n) given by generators.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::fasthash::{key_set_with_capacity, KeySet};
use crate::linalg::solve_homogeneous;
use crate::modarith::{
    inv_mod, is_quadratic_residue, raw, smallest_nonresidue, unit_generators, unit_subgroup,
    PrimePowerModulus, ResidueMatrix,
};

/// Largest modulus whose matrices can be packed into enumeration keys.
pub const MAX_ENUM_MODULUS: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ambient {
    GL2,
    SL2,
}

/// A subgroup of GL2(Z/l^n) with a lazily filled, sorted element cache.
pub struct MatrixGroup {
    modulus: PrimePowerModulus,
    generators: Vec<ResidueMatrix>,
    label: Option<String>,
    elements: Mutex<Option<Arc<[u64]>>>,
}

impl Clone for MatrixGroup {
    fn clone(&self) -> Self {
        MatrixGroup {
            modulus: self.modulus,
            generators: self.generators.clone(),
            label: self.label.clone(),
            elements: Mutex::new(self.elements.lock().expect("cache lock").clone()),
        }
    }
}

impl fmt::Debug for MatrixGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixGroup")
            .field("modulus", &self.modulus.modulus())
            .field("label", &self.label)
            .field(
                "generators",
                &self
                    .generators
                    .iter()
                    .map(|g| g.entries())
                    .collect::<Vec<_>>(),
            )
            .finish()
    }
}

impl MatrixGroup {
    pub fn new(modulus: PrimePowerModulus, generators: Vec<ResidueMatrix>) -> Result<Self> {
        for g in &generators {
            if g.modulus() != modulus {
                return Err(Error::ModulusMismatch(
                    g.modulus().modulus(),
                    modulus.modulus(),
                ));
            }
            if !g.is_invertible() {
                return Err(Error::NotInvertible {
                    det: g.det(),
                    modulus: modulus.modulus(),
                });
            }
        }
        Ok(MatrixGroup {
            modulus,
            generators,
            label: None,
            elements: Mutex::new(None),
        })
    }

    pub fn from_entries(modulus: PrimePowerModulus, gens: &[[i64; 4]]) -> Result<Self> {
        Self::new(
            modulus,
            gens.iter()
                .map(|&e| ResidueMatrix::new(e, modulus))
                .collect(),
        )
    }

    pub fn trivial(modulus: PrimePowerModulus) -> Self {
        Self::new(modulus, Vec::new()).expect("empty generator list")
    }

    /// The whole of GL2(Z/l^n).
    pub fn full(modulus: PrimePowerModulus) -> Self {
        let mut gens = vec![
            ResidueMatrix::new([1, 1, 0, 1], modulus),
            ResidueMatrix::new([1, 0, 1, 1], modulus),
        ];
        for u in unit_generators(modulus) {
            gens.push(ResidueMatrix::new([u as i64, 0, 0, 1], modulus));
        }
        Self::new(modulus, gens)
            .expect("invertible")
            .with_label("GL2")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn modulus(&self) -> PrimePowerModulus {
        self.modulus
    }

    pub fn generators(&self) -> &[ResidueMatrix] {
        &self.generators
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub(crate) fn raw_generators(&self) -> Vec<raw::Raw> {
        self.generators.iter().map(|g| g.entries()).collect()
    }

    /// Sorted packed keys of all elements; computed once and cached.
    pub fn element_keys(&self, cap: u64) -> Result<Arc<[u64]>> {
        let mut guard = self.elements.lock().expect("cache lock");
        if let Some(e) = guard.as_ref() {
            if e.len() as u64 > cap {
                return Err(Error::CapExceeded { cap });
            }
            return Ok(e.clone());
        }
        let keys = closure_keys(&self.raw_generators(), self.modulus, cap)?;
        let arc: Arc<[u64]> = keys.into();
        *guard = Some(arc.clone());
        Ok(arc)
    }

    pub fn enumerate(&self, cap: u64) -> Result<Vec<ResidueMatrix>> {
        let m = self.modulus;
        Ok(self
            .element_keys(cap)?
            .iter()
            .map(|&k| ResidueMatrix::from_reduced(raw::unkey(k), m).expect("reduced"))
            .collect())
    }

    pub fn order(&self, cap: u64) -> Result<u64> {
        Ok(self.element_keys(cap)?.len() as u64)
    }

    pub fn contains(&self, x: &ResidueMatrix, cap: u64) -> Result<bool> {
        if x.modulus() != self.modulus {
            return Err(Error::ModulusMismatch(
                x.modulus().modulus(),
                self.modulus.modulus(),
            ));
        }
        Ok(self
            .element_keys(cap)?
            .binary_search(&raw::key(x.entries()))
            .is_ok())
    }

    /// Whether every generator of `self` lies in `other`.
    pub fn is_subgroup_of(&self, other: &MatrixGroup, cap: u64) -> Result<bool> {
        for g in &self.generators {
            if !other.contains(g, cap)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Same element set (compared through the caches).
    pub fn same_elements(&self, other: &MatrixGroup, cap: u64) -> Result<bool> {
        Ok(self.modulus == other.modulus && self.element_keys(cap)? == other.element_keys(cap)?)
    }

    /// The group `c G c^-1`.
    pub fn conjugate_by(&self, c: &ResidueMatrix) -> Result<MatrixGroup> {
        let ci = c.inv()?;
        let gens = self
            .generators
            .iter()
            .map(|g| c.mul(g).and_then(|x| x.mul(&ci)))
            .collect::<Result<Vec<_>>>()?;
        MatrixGroup::new(self.modulus, gens)
    }

    /// A generating set with redundant generators removed greedily.
    pub fn trimmed_generators(&self, cap: u64) -> Result<Vec<ResidueMatrix>> {
        let mut kept: Vec<ResidueMatrix> = Vec::new();
        let mut current = MatrixGroup::trivial(self.modulus);
        for g in &self.generators {
            if !current.contains(g, cap)? {
                kept.push(*g);
                current = MatrixGroup::new(self.modulus, kept.clone())?;
            }
        }
        Ok(kept)
    }
}

/// BFS closure of the generators; sorted keys.
pub(crate) fn closure_keys(gens: &[raw::Raw], m: PrimePowerModulus, cap: u64) -> Result<Vec<u64>> {
    let q = m.modulus();
    if q >= MAX_ENUM_MODULUS {
        return Err(Error::ModulusTooLarge(q));
    }
    let id = raw::key(raw::identity(q));
    let gk: Vec<raw::Raw> = gens.iter().map(|g| g.map(|x| x % q)).collect();
    let mut seen: KeySet = key_set_with_capacity(1024);
    seen.insert(id);
    let mut list = vec![id];
    let mut i = 0;
    while i < list.len() {
        let x = raw::unkey(list[i]);
        for g in &gk {
            let y = raw::key(raw::mul(x, *g, q));
            if seen.insert(y) {
                if list.len() as u64 >= cap {
                    return Err(Error::CapExceeded { cap });
                }
                list.push(y);
            }
        }
        i += 1;
    }
    list.sort_unstable();
    Ok(list)
}

pub fn ambient_order(modulus: PrimePowerModulus, ambient: Ambient) -> Result<u64> {
    if modulus.is_level_one() {
        return Err(Error::Invalid("ambient order needs exponent >= 1".into()));
    }
    let l = modulus.ell();
    let n = modulus.exponent();
    Ok(match ambient {
        Ambient::GL2 => l.pow(4 * n - 3) * (l - 1) * (l * l - 1),
        Ambient::SL2 => l.pow(3 * n - 2) * (l * l - 1),
    })
}

pub fn enumerate(g: &MatrixGroup, cap: u64) -> Result<Vec<ResidueMatrix>> {
    g.enumerate(cap)
}

pub fn index_in_ambient(g: &MatrixGroup, cap: u64) -> Result<u64> {
    if g.modulus.is_level_one() {
        return Ok(1);
    }
    let total = ambient_order(g.modulus, Ambient::GL2)?;
    let ord = g.order(cap)?;
    assert_eq!(total % ord, 0, "group order must divide the ambient order");
    Ok(total / ord)
}

/// Smallest `l^d` such that the group is the full preimage of its reduction mod `l^d`.
pub fn level(g: &MatrixGroup, cap: u64) -> Result<PrimePowerModulus> {
    let m = g.modulus;
    let n = m.exponent();
    if n == 0 {
        return Ok(m);
    }
    let keys = g.element_keys(cap)?;
    let ord = keys.len() as u64;
    let l = m.ell();
    if ord == ambient_order(m, Ambient::GL2)? {
        return m.with_exponent(0);
    }
    for d in 1..n {
        let qd = l.pow(d);
        let mut reduced = key_set_with_capacity(keys.len() / (l.pow(4 * (n - d)) as usize) + 1);
        for &k in keys.iter() {
            reduced.insert(raw::key(raw::unkey(k).map(|x| x % qd)));
        }
        if reduced.len() as u64 * l.pow(4 * (n - d)) == ord {
            return m.with_exponent(d);
        }
    }
    Ok(m)
}

/// Image of the determinant, as a sorted list of units, and whether it is everything.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetImage {
    pub modulus: PrimePowerModulus,
    pub units: Vec<u64>,
}

impl DetImage {
    pub fn is_surjective(&self) -> bool {
        self.units.len() as u64 == self.modulus.unit_count()
    }
}

pub fn det_image(g: &MatrixGroup) -> DetImage {
    let dets: Vec<u64> = g.generators.iter().map(|x| x.det()).collect();
    DetImage {
        modulus: g.modulus,
        units: unit_subgroup(&dets, g.modulus),
    }
}

pub fn minus_identity(m: PrimePowerModulus) -> ResidueMatrix {
    ResidueMatrix::new([-1, 0, 0, -1], m)
}

pub fn adjoin_minus_identity(g: &MatrixGroup) -> MatrixGroup {
    let mi = minus_identity(g.modulus);
    let mut gens = g.generators.clone();
    if !gens.contains(&mi) {
        gens.push(mi);
    }
    let mut out = MatrixGroup::new(g.modulus, gens).expect("-I is invertible");
    out.label = g.label.clone();
    out
}

pub fn reduce_group(g: &MatrixGroup, target: PrimePowerModulus) -> Result<MatrixGroup> {
    let mut gens = Vec::new();
    for x in &g.generators {
        let r = x.reduce(target)?;
        if !r.is_identity() && !gens.contains(&r) {
            gens.push(r);
        }
    }
    if !target.divides(&g.modulus) {
        return Err(Error::NotDivisor {
            target: target.modulus(),
            source_modulus: g.modulus.modulus(),
        });
    }
    MatrixGroup::new(target, gens)
}

/// Reduction-kernel generators `I + l^d E_ij` for every layer `from <= d < to`.
pub fn kernel_generators(target: PrimePowerModulus, from: u32) -> Vec<ResidueMatrix> {
    let l = target.ell() as i64;
    let mut out = Vec::new();
    for d in from.max(1)..target.exponent() {
        let s = l.pow(d);
        for e in [
            [1 + s, 0, 0, 1],
            [1, s, 0, 1],
            [1, 0, s, 1],
            [1, 0, 0, 1 + s],
        ] {
            out.push(ResidueMatrix::new(e, target));
        }
    }
    out
}

pub fn full_preimage(g: &MatrixGroup, target: PrimePowerModulus) -> Result<MatrixGroup> {
    if !g.modulus.divides(&target) {
        return Err(Error::NotDivisor {
            target: g.modulus.modulus(),
            source_modulus: target.modulus(),
        });
    }
    if g.modulus == target {
        return Ok(g.clone());
    }
    if g.modulus.is_level_one() {
        return Ok(MatrixGroup::full(target));
    }
    let mut gens = g
        .generators
        .iter()
        .map(|x| x.lift(target))
        .collect::<Result<Vec<_>>>()?;
    gens.extend(kernel_generators(target, g.modulus.exponent()));
    let mut out = MatrixGroup::new(target, gens)?;
    out.label = g.label.clone();
    Ok(out)
}

/// Per-class counts of (order, trace, determinant) over all elements.
pub fn class_profile(g: &MatrixGroup, cap: u64) -> Result<BTreeMap<(u64, u64, u64), u64>> {
    let mut out = BTreeMap::new();
    for x in g.enumerate(cap)? {
        *out.entry((x.order()?, x.trace(), x.det())).or_insert(0) += 1;
    }
    Ok(out)
}

/// Search for `c` with `c h c^-1` contained in `big` (equal when `exact` and orders match).
fn conjugacy_search(
    h: &MatrixGroup,
    big: &MatrixGroup,
    exact: bool,
    cap: u64,
) -> Result<Option<ResidueMatrix>> {
    let m = h.modulus;
    if m != big.modulus {
        return Err(Error::ModulusMismatch(m.modulus(), big.modulus.modulus()));
    }
    let (oh, ob) = (h.order(cap)?, big.order(cap)?);
    if (exact && oh != ob) || ob % oh != 0 {
        return Ok(None);
    }
    let (dh, db) = (det_image(h), det_image(big));
    if dh.units.iter().any(|u| db.units.binary_search(u).is_err()) || (exact && dh != db) {
        return Ok(None);
    }
    let (ph, pb) = (class_profile(h, cap)?, class_profile(big, cap)?);
    for (k, &n) in &ph {
        let nb = pb.get(k).copied().unwrap_or(0);
        if (exact && n != nb) || n > nb {
            return Ok(None);
        }
    }
    let gens = h.trimmed_generators(cap)?;
    if gens.is_empty() {
        return Ok(Some(ResidueMatrix::identity(m)));
    }
    if h.is_subgroup_of(big, cap)? {
        return Ok(Some(ResidueMatrix::identity(m)));
    }
    // pivot on the generator whose class is rarest in `big`
    let cls =
        |x: &ResidueMatrix| -> Result<(u64, u64, u64)> { Ok((x.order()?, x.trace(), x.det())) };
    let mut pivot = 0;
    let mut best = u64::MAX;
    for (i, g) in gens.iter().enumerate() {
        let c = pb.get(&cls(g)?).copied().unwrap_or(0);
        if c < best {
            best = c;
            pivot = i;
        }
    }
    let g1 = gens[pivot];
    let target = cls(&g1)?;
    let q = m.modulus();
    let l = m.ell();
    let keys = big.element_keys(cap)?;
    let [a, b, c, d] = g1.entries();
    for t in big.enumerate(cap)? {
        if cls(&t)? != target {
            continue;
        }
        let [t11, t12, t21, t22] = t.entries();
        let neg = |x: u64| (q - x % q) % q;
        // c g1 = t c as linear equations in the entries (x, y, z, w) of c
        let rows = vec![
            vec![(a + neg(t11)) % q, c, neg(t12), 0],
            vec![b, (d + neg(t11)) % q, 0, neg(t12)],
            vec![neg(t21), 0, (a + neg(t22)) % q, c],
            vec![0, neg(t21), b, (d + neg(t22)) % q],
        ];
        let sol = solve_homogeneous(&rows, 4, m);
        let found = sol.find_map(|x| {
            let cm = [x[0], x[1], x[2], x[3]];
            if raw::det(cm, q) % l == 0 {
                return None;
            }
            let ci = raw::inv(cm, q)?;
            let ok = gens.iter().all(|g| {
                let y = raw::mul(raw::mul(cm, g.entries(), q), ci, q);
                keys.binary_search(&raw::key(y)).is_ok()
            });
            ok.then_some(cm)
        });
        if let Some(cm) = found {
            return Ok(Some(ResidueMatrix::from_reduced(cm, m)?));
        }
    }
    Ok(None)
}

/// A witness `c` with `c g c^-1 = h`, if one exists.
pub fn is_conjugate(g: &MatrixGroup, h: &MatrixGroup, cap: u64) -> Result<Option<ResidueMatrix>> {
    conjugacy_search(g, h, true, cap)
}

/// A witness `c` with `c h c^-1` contained in `big`, if one exists.
pub fn conjugate_into(
    h: &MatrixGroup,
    big: &MatrixGroup,
    cap: u64,
) -> Result<Option<ResidueMatrix>> {
    conjugacy_search(h, big, false, cap)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CartanKind {
    Nonsplit,
    NonsplitNormalizer,
    Split,
    SplitNormalizer,
    Borel,
    Section4Semidirect,
}

impl CartanKind {
    pub const ALL: [CartanKind; 6] = [
        CartanKind::Nonsplit,
        CartanKind::NonsplitNormalizer,
        CartanKind::Split,
        CartanKind::SplitNormalizer,
        CartanKind::Borel,
        CartanKind::Section4Semidirect,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CartanKind::Nonsplit => "nonsplit",
            CartanKind::NonsplitNormalizer => "nonsplit-normalizer",
            CartanKind::Split => "split",
            CartanKind::SplitNormalizer => "split-normalizer",
            CartanKind::Borel => "borel",
            CartanKind::Section4Semidirect => "section4-semidirect",
        }
    }

    fn uses_epsilon(&self) -> bool {
        matches!(
            self,
            CartanKind::Nonsplit | CartanKind::NonsplitNormalizer | CartanKind::Section4Semidirect
        )
    }
}

impl fmt::Display for CartanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CartanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CartanKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown Cartan kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CartanSpec {
    kind: CartanKind,
    modulus: PrimePowerModulus,
    epsilon: Option<u64>,
}

impl CartanSpec {
    /// `epsilon` defaults to the smallest non-residue; it is ignored by split kinds.
    pub fn new(kind: CartanKind, modulus: PrimePowerModulus, epsilon: Option<u64>) -> Result<Self> {
        if modulus.is_level_one() {
            return Err(Error::Invalid("Cartan subgroups need exponent >= 1".into()));
        }
        if kind == CartanKind::Section4Semidirect && modulus.exponent() != 2 {
            return Err(Error::Invalid(
                "section4-semidirect is defined mod l^2 only".into(),
            ));
        }
        let epsilon = if kind.uses_epsilon() {
            let l = modulus.ell();
            let e = match epsilon {
                Some(e) => e,
                None => smallest_nonresidue(l)?,
            };
            if l == 2 || is_quadratic_residue(e, l) {
                return Err(Error::Invalid(format!(
                    "{e} is not a quadratic non-residue mod {l}"
                )));
            }
            Some(e % modulus.modulus())
        } else {
            None
        };
        Ok(CartanSpec {
            kind,
            modulus,
            epsilon,
        })
    }

    pub fn kind(&self) -> CartanKind {
        self.kind
    }

    pub fn modulus(&self) -> PrimePowerModulus {
        self.modulus
    }

    pub fn epsilon(&self) -> Option<u64> {
        self.epsilon
    }
}

/// `[a eps*b; b a]` of multiplicative order `l^2 - 1` mod `l`.
fn nonsplit_cyclic_generator(ell: u64, eps: u64) -> [u64; 4] {
    let target = ell * ell - 1;
    let m = PrimePowerModulus::new(ell, 1).expect("prime");
    for a in 0..ell {
        for b in 1..ell {
            let x = ResidueMatrix::new([a as i64, (eps * b % ell) as i64, b as i64, a as i64], m);
            if x.order().ok() == Some(target) {
                return [a, eps * b, b, a];
            }
        }
    }
    unreachable!("F_(l^2)^x is cyclic")
}

pub fn build_cartan(spec: &CartanSpec) -> Result<MatrixGroup> {
    let m = spec.modulus;
    let l = m.ell() as i64;
    let mat = |e: [i64; 4]| ResidueMatrix::new(e, m);
    let diag_gens = || {
        let mut v = Vec::new();
        for u in unit_generators(m) {
            v.push(mat([u as i64, 0, 0, 1]));
            v.push(mat([1, 0, 0, u as i64]));
        }
        v
    };
    let nonsplit_gens = |eps: u64| {
        let c = nonsplit_cyclic_generator(m.ell(), eps);
        let mut v = vec![mat(c.map(|x| x as i64))];
        if m.exponent() > 1 {
            v.push(mat([1 + l, 0, 0, 1 + l]));
            v.push(mat([1, eps as i64 * l, l, 1]));
        }
        v
    };
    let gens = match spec.kind {
        CartanKind::Nonsplit => nonsplit_gens(spec.epsilon.expect("eps")),
        CartanKind::NonsplitNormalizer => {
            let mut v = nonsplit_gens(spec.epsilon.expect("eps"));
            v.push(mat([1, 0, 0, -1]));
            v
        }
        CartanKind::Split => diag_gens(),
        CartanKind::SplitNormalizer => {
            let mut v = diag_gens();
            v.push(mat([0, 1, 1, 0]));
            v
        }
        CartanKind::Borel => {
            let mut v = diag_gens();
            v.push(mat([1, 1, 0, 1]));
            v
        }
        CartanKind::Section4Semidirect => {
            let eps = spec.epsilon.expect("eps");
            // Multiplicative lift: raise a naive lift to a power that is 1 mod 2(l^2-1)
            // and 0 mod l, killing the l-part while keeping the reduction.
            let ell = m.ell();
            let period = 2 * (ell * ell - 1);
            let e = ell * inv_mod(ell % period, period).expect("coprime");
            let c = mat(nonsplit_cyclic_generator(ell, eps).map(|x| x as i64)).pow(e);
            let e_i = eps as i64;
            vec![
                c,
                mat([1, 0, 0, -1]),
                mat([1 + l, 0, 0, 1]),
                mat([1, e_i * l, -l, 1]),
                mat([1, 0, 0, 1 + l]),
            ]
        }
    };
    let label = format!("{}({})", spec.kind, m.modulus());
    Ok(MatrixGroup::new(m, gens)?.with_label(label))
}

/// Expected order of `build_cartan(spec)`.
pub fn cartan_order(spec: &CartanSpec) -> u64 {
    let m = spec.modulus;
    let l = m.ell();
    let d = m.exponent();
    let phi = m.unit_count();
    match spec.kind {
        CartanKind::Nonsplit => l.pow(2 * d - 2) * (l * l - 1),
        CartanKind::NonsplitNormalizer => 2 * l.pow(2 * d - 2) * (l * l - 1),
        CartanKind::Split => phi * phi,
        CartanKind::SplitNormalizer => 2 * phi * phi,
        CartanKind::Borel => phi * phi * m.modulus(),
        CartanKind::Section4Semidirect => 2 * (l * l - 1) * l.pow(3),
    }
}

/// Matrices `[1 b; 0 d]`: the group whose modular curve is X1(N).
pub fn gamma1_shape(m: PrimePowerModulus) -> MatrixGroup {
    let mut gens = vec![ResidueMatrix::new([1, 1, 0, 1], m)];
    for u in unit_generators(m) {
        gens.push(ResidueMatrix::new([1, 0, 0, u as i64], m));
    }
    MatrixGroup::new(m, gens)
        .expect("invertible")
        .with_label(format!("Gamma1-shape({})", m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_ENUM_CAP as CAP;

    fn pm(l: u64, n: u32) -> PrimePowerModulus {
        PrimePowerModulus::new(l, n).unwrap()
    }

    fn cartan(kind: CartanKind, l: u64, n: u32) -> MatrixGroup {
        build_cartan(&CartanSpec::new(kind, pm(l, n), None).unwrap()).unwrap()
    }

    #[test]
    fn ambient_orders() {
        assert_eq!(ambient_order(pm(7, 1), Ambient::GL2).unwrap(), 2016);
        assert_eq!(ambient_order(pm(7, 2), Ambient::GL2).unwrap(), 4_840_416);
        assert_eq!(ambient_order(pm(7, 2), Ambient::SL2).unwrap(), 115_248);
        assert!(ambient_order(PrimePowerModulus::level_one(7).unwrap(), Ambient::GL2).is_err());
    }

    #[test]
    fn full_group_orders() {
        for (l, n) in [(2, 1), (2, 3), (3, 1), (3, 2), (5, 1), (7, 1)] {
            let g = MatrixGroup::full(pm(l, n));
            assert_eq!(
                g.order(CAP).unwrap(),
                ambient_order(pm(l, n), Ambient::GL2).unwrap()
            );
            assert_eq!(index_in_ambient(&g, CAP).unwrap(), 1);
        }
    }

    #[test]
    fn trivial_and_cap() {
        let g = MatrixGroup::trivial(pm(7, 1));
        assert_eq!(g.order(CAP).unwrap(), 1);
        let full = MatrixGroup::full(pm(7, 1));
        assert_eq!(full.order(100), Err(Error::CapExceeded { cap: 100 }));
        assert!(!det_image(&g).is_surjective());
    }

    #[test]
    fn cartan_orders() {
        for l in [3, 5, 7, 11, 13] {
            for d in [1, 2] {
                for kind in CartanKind::ALL {
                    if kind == CartanKind::Section4Semidirect && d != 2 {
                        continue;
                    }
                    let spec = CartanSpec::new(kind, pm(l, d), None).unwrap();
                    let g = build_cartan(&spec).unwrap();
                    assert_eq!(g.order(CAP).unwrap(), cartan_order(&spec), "{kind} {l}^{d}");
                }
            }
        }
        assert_eq!(cartan(CartanKind::Nonsplit, 7, 1).order(CAP).unwrap(), 48);
        assert_eq!(
            cartan(CartanKind::NonsplitNormalizer, 7, 2)
                .order(CAP)
                .unwrap(),
            4704
        );
        assert_eq!(
            cartan(CartanKind::Section4Semidirect, 7, 2)
                .order(CAP)
                .unwrap(),
            32_928
        );
        assert_eq!(
            index_in_ambient(&cartan(CartanKind::NonsplitNormalizer, 7, 1), CAP).unwrap(),
            21
        );
    }

    #[test]
    fn nonsplit_elements_have_the_quoted_shape() {
        let g = cartan(CartanKind::Nonsplit, 5, 2);
        for x in g.enumerate(CAP).unwrap() {
            let [a, b, c, d] = x.entries();
            assert_eq!(a, d);
            assert_eq!(b, 2 * c % 25);
        }
    }

    #[test]
    fn cartan_spec_validation() {
        assert!(CartanSpec::new(CartanKind::Nonsplit, pm(7, 1), Some(2)).is_err());
        assert!(CartanSpec::new(CartanKind::Nonsplit, pm(7, 1), Some(5)).is_ok());
        assert!(CartanSpec::new(CartanKind::Section4Semidirect, pm(7, 1), None).is_err());
        assert_eq!(
            "split-normalizer".parse::<CartanKind>().unwrap(),
            CartanKind::SplitNormalizer
        );
    }

    #[test]
    fn levels() {
        let full49 = MatrixGroup::full(pm(7, 2));
        assert!(level(&full49, CAP).unwrap().is_level_one());
        let nn7 = cartan(CartanKind::NonsplitNormalizer, 7, 1);
        let pre = full_preimage(&nn7, pm(7, 2)).unwrap();
        assert_eq!(pre.order(CAP).unwrap(), 96 * 2401);
        assert_eq!(level(&pre, CAP).unwrap(), pm(7, 1));
        assert_eq!(
            level(&cartan(CartanKind::NonsplitNormalizer, 7, 2), CAP).unwrap(),
            pm(7, 2)
        );
        let kern = full_preimage(&MatrixGroup::trivial(pm(7, 1)), pm(7, 2)).unwrap();
        assert_eq!(kern.order(CAP).unwrap(), 2401);
    }

    #[test]
    fn minus_identity_and_reduction() {
        let t = MatrixGroup::trivial(pm(7, 1));
        let pm1 = adjoin_minus_identity(&t);
        assert_eq!(pm1.order(CAP).unwrap(), 2);
        assert_eq!(adjoin_minus_identity(&pm1).order(CAP).unwrap(), 2);
        let b = cartan(CartanKind::Borel, 7, 2);
        let r = reduce_group(&b, pm(7, 1)).unwrap();
        assert_eq!(r.order(CAP).unwrap(), 252);
        let one = reduce_group(&b, PrimePowerModulus::level_one(7).unwrap()).unwrap();
        assert_eq!(one.order(CAP).unwrap(), 1);
    }

    #[test]
    fn conjugacy() {
        let ns3 = build_cartan(&CartanSpec::new(CartanKind::Nonsplit, pm(7, 1), Some(3)).unwrap())
            .unwrap();
        let ns5 = build_cartan(&CartanSpec::new(CartanKind::Nonsplit, pm(7, 1), Some(5)).unwrap())
            .unwrap();
        let c = is_conjugate(&ns3, &ns5, CAP)
            .unwrap()
            .expect("nonsplit Cartans are conjugate");
        let conj = ns3.conjugate_by(&c).unwrap();
        assert!(conj.same_elements(&ns5, CAP).unwrap());
        let s = cartan(CartanKind::Split, 7, 1);
        assert!(is_conjugate(&s, &ns3, CAP).unwrap().is_none());
        assert_eq!(
            is_conjugate(&s, &s, CAP).unwrap(),
            Some(ResidueMatrix::identity(pm(7, 1)))
        );
        let b = cartan(CartanKind::Borel, 7, 1);
        assert!(conjugate_into(&ns3, &b, CAP).unwrap().is_none());
        assert!(conjugate_into(&s, &b, CAP).unwrap().is_some());
    }

    #[test]
    fn conjugated_split_cartan_found_again() {
        let c = ResidueMatrix::new([3, 5, 1, 2], pm(7, 2));
        let s = cartan(CartanKind::Split, 7, 2).conjugate_by(&c).unwrap();
        let big = cartan(CartanKind::SplitNormalizer, 7, 2);
        let w = conjugate_into(&s, &big, CAP).unwrap().unwrap();
        assert!(s
            .conjugate_by(&w)
            .unwrap()
            .is_subgroup_of(&big, CAP)
            .unwrap());
        assert!(
            conjugate_into(&cartan(CartanKind::Nonsplit, 7, 2), &big, CAP)
                .unwrap()
                .is_none()
        );
    }
}
