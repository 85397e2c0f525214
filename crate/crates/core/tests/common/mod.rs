#![allow(dead_code)]

use isopoints::gl2::{build_cartan, CartanKind, CartanSpec};
use isopoints::{MatrixGroup, PrimePowerModulus, ResidueMatrix};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const CAP: u64 = isopoints::DEFAULT_ENUM_CAP;

pub fn pm(l: u64, n: u32) -> PrimePowerModulus {
    PrimePowerModulus::new(l, n).unwrap()
}

pub fn random_invertible(rng: &mut ChaCha8Rng, m: PrimePowerModulus) -> ResidueMatrix {
    let q = m.modulus();
    loop {
        let e: [u64; 4] = std::array::from_fn(|_| rng.gen_range(0..q));
        let x = ResidueMatrix::from_reduced(e, m).unwrap();
        if x.is_invertible() {
            return x;
        }
    }
}

/// A random subgroup with some structure: a few generators of a Cartan-type group,
/// perhaps a random extra element, then a random conjugation.
pub fn random_subgroup(rng: &mut ChaCha8Rng, moduli: &[(u64, u32)]) -> MatrixGroup {
    let &(l, n) = moduli.choose(rng).unwrap();
    let m = pm(l, n);
    let kinds: Vec<CartanKind> = CartanKind::ALL
        .into_iter()
        .filter(|k| *k != CartanKind::Section4Semidirect || n == 2)
        .filter(|k| {
            l != 2
                || matches!(
                    k,
                    CartanKind::Split | CartanKind::SplitNormalizer | CartanKind::Borel
                )
        })
        .collect();
    let kind = *kinds.choose(rng).unwrap();
    let base = build_cartan(&CartanSpec::new(kind, m, None).unwrap()).unwrap();
    let mut gens: Vec<ResidueMatrix> = base
        .generators()
        .iter()
        .filter(|_| rng.gen_bool(0.7))
        .cloned()
        .collect();
    if gens.is_empty() || rng.gen_bool(0.15) {
        gens.push(random_invertible(rng, m));
    }
    let c = random_invertible(rng, m);
    MatrixGroup::new(m, gens).unwrap().conjugate_by(&c).unwrap()
}

/// Naive 2x2 product mod q, independent of the library's arithmetic.
pub fn naive_mul(a: [u64; 4], b: [u64; 4], q: u64) -> [u64; 4] {
    let (a, b, q) = (a.map(u128::from), b.map(u128::from), u128::from(q));
    [
        (a[0] * b[0] + a[1] * b[2]) % q,
        (a[0] * b[1] + a[1] * b[3]) % q,
        (a[2] * b[0] + a[3] * b[2]) % q,
        (a[2] * b[1] + a[3] * b[3]) % q,
    ]
    .map(|x| x as u64)
}

pub struct BruteClass {
    pub order: u64,
    pub class_size: u64,
    pub det_surjective: bool,
}

fn naive_closure(gens: &[[u64; 4]], q: u64) -> Vec<[u64; 4]> {
    let mut set = vec![[1, 0, 0, 1]];
    let mut i = 0;
    while i < set.len() {
        for g in gens {
            let y = naive_mul(set[i], *g, q);
            if !set.contains(&y) {
                set.push(y);
            }
        }
        i += 1;
    }
    set.sort_unstable();
    set
}

/// Every subgroup class of GL2(Z/p), p prime and tiny, from closures of all triples.
pub fn brute_force_classes(p: u64) -> Vec<BruteClass> {
    let all: Vec<[u64; 4]> = (0..p.pow(4))
        .map(|i| [i % p, i / p % p, i / (p * p) % p, i / (p * p * p)])
        .filter(|x| (x[0] * x[3] + p * p - x[1] * x[2]) % p != 0)
        .collect();
    let inv = |x: [u64; 4]| {
        *all.iter()
            .find(|y| naive_mul(x, **y, p) == [1, 0, 0, 1])
            .unwrap()
    };
    let mut subgroups: Vec<Vec<[u64; 4]>> = Vec::new();
    for (i, a) in all.iter().enumerate() {
        for (j, b) in all.iter().enumerate().skip(i) {
            for c in all.iter().skip(j) {
                let h = naive_closure(&[*a, *b, *c], p);
                if !subgroups.contains(&h) {
                    subgroups.push(h);
                }
            }
        }
    }
    subgroups.push(vec![[1, 0, 0, 1]]);
    subgroups.sort();
    subgroups.dedup();
    let mut done = vec![false; subgroups.len()];
    let mut out = Vec::new();
    for i in 0..subgroups.len() {
        if done[i] {
            continue;
        }
        let mut class = 0;
        let mut conjugates: Vec<Vec<[u64; 4]>> = Vec::new();
        for g in &all {
            let gi = inv(*g);
            let mut c: Vec<[u64; 4]> = subgroups[i]
                .iter()
                .map(|h| naive_mul(naive_mul(*g, *h, p), gi, p))
                .collect();
            c.sort_unstable();
            if !conjugates.contains(&c) {
                let k = subgroups.iter().position(|s| *s == c).unwrap();
                done[k] = true;
                conjugates.push(c);
                class += 1;
            }
        }
        let dets: std::collections::HashSet<u64> = subgroups[i]
            .iter()
            .map(|x| (x[0] * x[3] + p * p - x[1] * x[2]) % p)
            .collect();
        out.push(BruteClass {
            order: subgroups[i].len() as u64,
            class_size: class,
            det_surjective: dets.len() as u64 == p - 1,
        });
    }
    out
}
