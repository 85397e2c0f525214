//! Linear algebra over Z/l^n (Smith form) and over F_l (echelon forms, subspaces).
#![allow(clippy::needless_range_loop)]

use crate::modarith::{inv_mod, valuation, PrimePowerModulus};

/// Solutions of a homogeneous system over Z/l^n: all sums `sum a_i * gens[i]`
/// with `0 <= a_i < orders[i]`, each solution occurring exactly once.
#[derive(Clone, Debug)]
pub struct SolutionModule {
    pub modulus: u64,
    pub gens: Vec<Vec<u64>>,
    pub orders: Vec<u64>,
}

impl SolutionModule {
    pub fn size(&self) -> u128 {
        self.orders.iter().map(|&o| o as u128).product()
    }

    /// Visit every solution; stop early when `f` returns `true`.
    pub fn find_map<T>(&self, mut f: impl FnMut(&[u64]) -> Option<T>) -> Option<T> {
        let n = self.gens.first().map_or(0, |g| g.len());
        let q = self.modulus;
        let mut coeff = vec![0u64; self.gens.len()];
        let mut x = vec![0u64; n];
        loop {
            if let Some(t) = f(&x) {
                return Some(t);
            }
            // odometer step, keeping x in sync incrementally
            let mut i = 0;
            loop {
                if i == coeff.len() {
                    return None;
                }
                coeff[i] += 1;
                for (xj, gj) in x.iter_mut().zip(&self.gens[i]) {
                    *xj = (*xj + gj) % q;
                }
                if coeff[i] < self.orders[i] {
                    break;
                }
                // wrapped: x has gained orders[i] * gens[i] == 0
                coeff[i] = 0;
                i += 1;
            }
        }
    }
}

/// Solve `A x = 0` over Z/l^n for an `rows x ncols` matrix via Smith reduction.
pub fn solve_homogeneous(a: &[Vec<u64>], ncols: usize, m: PrimePowerModulus) -> SolutionModule {
    let q = m.modulus();
    let ell = m.ell();
    let n = m.exponent();
    let mut a: Vec<Vec<u64>> = a
        .iter()
        .map(|r| r.iter().map(|x| x % q).collect())
        .collect();
    let mut right: Vec<Vec<u64>> = (0..ncols)
        .map(|i| (0..ncols).map(|j| u64::from(i == j) % q).collect())
        .collect();
    let rows = a.len();
    let mut vals = Vec::new();
    let mut t = 0;
    while t < rows.min(ncols) {
        let mut best: Option<(u32, usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(t) {
            for (j, &x) in row.iter().enumerate().skip(t) {
                if x != 0 {
                    let v = valuation(x, m);
                    if best.map_or(true, |b| v < b.0) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((v, bi, bj)) = best else { break };
        a.swap(t, bi);
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        for row in right.iter_mut() {
            row.swap(t, bj);
        }
        let lv = ell.pow(v);
        let unit = a[t][t] / lv;
        let ui = inv_mod(unit, q).expect("unit part");
        for x in a[t].iter_mut() {
            *x = *x * ui % q;
        }
        for i in 0..rows {
            if i != t && a[i][t] != 0 {
                let s = a[i][t] / lv;
                for j in 0..ncols {
                    a[i][j] = (a[i][j] + q - s * a[t][j] % q) % q;
                }
            }
        }
        for j in 0..ncols {
            if j != t && a[t][j] != 0 {
                let s = a[t][j] / lv;
                for row in a.iter_mut() {
                    row[j] = (row[j] + q - s * row[t] % q) % q;
                }
                for row in right.iter_mut() {
                    row[j] = (row[j] + q - s * row[t] % q) % q;
                }
            }
        }
        vals.push(v);
        t += 1;
    }
    let mut gens = Vec::new();
    let mut orders = Vec::new();
    for col in 0..ncols {
        let (scale, order) = match vals.get(col) {
            Some(&0) => continue,
            Some(&v) => (ell.pow(n - v), ell.pow(v)),
            None => (1, q),
        };
        gens.push(right.iter().map(|row| row[col] * scale % q).collect());
        orders.push(order);
    }
    SolutionModule {
        modulus: q,
        gens,
        orders,
    }
}

/// Row-reduce over F_p in place; zero rows are dropped. Returns pivot columns.
pub fn rref(rows: &mut Vec<Vec<u64>>, p: u64) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(pi) = (r..rows.len()).find(|&i| rows[i][c] % p != 0) else {
            continue;
        };
        rows.swap(r, pi);
        let inv = inv_mod(rows[r][c] % p, p).expect("nonzero mod p");
        for x in rows[r].iter_mut() {
            *x = *x % p * inv % p;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] % p != 0 {
                let f = rows[i][c] % p;
                for j in 0..ncols {
                    rows[i][j] = (rows[i][j] % p + p - f * rows[r][j] % p) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// A subspace of F_p^d kept in reduced echelon form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    pub p: u64,
    pub ambient_dim: usize,
    pub basis: Vec<Vec<u64>>,
    pub pivots: Vec<usize>,
}

impl Subspace {
    pub fn span(vectors: &[Vec<u64>], ambient_dim: usize, p: u64) -> Self {
        let mut basis: Vec<Vec<u64>> = vectors.to_vec();
        let pivots = rref(&mut basis, p);
        Subspace {
            p,
            ambient_dim,
            basis,
            pivots,
        }
    }

    pub fn zero(ambient_dim: usize, p: u64) -> Self {
        Subspace {
            p,
            ambient_dim,
            basis: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn full(ambient_dim: usize, p: u64) -> Self {
        let basis: Vec<Vec<u64>> = (0..ambient_dim)
            .map(|i| (0..ambient_dim).map(|j| u64::from(i == j)).collect())
            .collect();
        Self::span(&basis, ambient_dim, p)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Reduce `v` against the basis; the result is zero iff `v` lies in the subspace.
    pub fn residue(&self, v: &[u64]) -> Vec<u64> {
        let p = self.p;
        let mut w: Vec<u64> = v.iter().map(|x| x % p).collect();
        for (row, &c) in self.basis.iter().zip(&self.pivots) {
            let f = w[c];
            if f != 0 {
                for (wj, rj) in w.iter_mut().zip(row) {
                    *wj = (*wj + p - f * rj % p) % p;
                }
            }
        }
        w
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.residue(v).iter().all(|&x| x == 0)
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    /// Coordinates of `v` (assumed to lie in the subspace) on the echelon basis.
    pub fn coordinates(&self, v: &[u64]) -> Vec<u64> {
        self.pivots.iter().map(|&c| v[c] % self.p).collect()
    }

    /// Columns that are not pivots; the quotient `F_p^d / self` is read off these
    /// coordinates of `residue(v)`.
    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.ambient_dim)
            .filter(|c| !self.pivots.contains(c))
            .collect()
    }

    /// Quotient coordinates of `v` modulo this subspace.
    pub fn quotient_coordinates(&self, v: &[u64]) -> Vec<u64> {
        let r = self.residue(v);
        self.free_columns().into_iter().map(|c| r[c]).collect()
    }
}

/// All subspaces of the span of `within` (a list of vectors in F_p^d), each in echelon form.
pub fn subspaces_of(within: &Subspace) -> Vec<Subspace> {
    let p = within.p;
    let k = within.dim();
    let mut out = Vec::new();
    // echelon forms in coordinates relative to the basis of `within`
    for d in 0..=k {
        for pivots in combinations(k, d) {
            let free: Vec<(usize, usize)> = (0..d)
                .flat_map(|r| {
                    let pr = pivots[r];
                    (pr + 1..k)
                        .filter(|c| !pivots.contains(c))
                        .map(move |c| (r, c))
                })
                .collect();
            let total = (p as u128).pow(free.len() as u32);
            for mut idx in 0..total {
                let mut coords = vec![vec![0u64; k]; d];
                for r in 0..d {
                    coords[r][pivots[r]] = 1;
                }
                for &(r, c) in &free {
                    coords[r][c] = (idx % p as u128) as u64;
                    idx /= p as u128;
                }
                let vecs: Vec<Vec<u64>> = coords
                    .iter()
                    .map(|cv| {
                        let mut v = vec![0u64; within.ambient_dim];
                        for (ci, b) in cv.iter().zip(&within.basis) {
                            for (vj, bj) in v.iter_mut().zip(b) {
                                *vj = (*vj + ci * bj) % p;
                            }
                        }
                        v
                    })
                    .collect();
                out.push(Subspace::span(&vecs, within.ambient_dim, p));
            }
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Incrementally built affine system `A x = b` over F_p.
#[derive(Clone, Debug)]
pub struct AffineSystem {
    p: u64,
    nvars: usize,
    // echelon rows over nvars + 1 columns (last = right-hand side)
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
    inconsistent: bool,
}

impl AffineSystem {
    pub fn new(nvars: usize, p: u64) -> Self {
        AffineSystem {
            p,
            nvars,
            rows: Vec::new(),
            pivots: Vec::new(),
            inconsistent: false,
        }
    }

    pub fn is_consistent(&self) -> bool {
        !self.inconsistent
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Add the equation `coeffs . x = rhs`.
    pub fn add(&mut self, coeffs: &[u64], rhs: u64) {
        if self.inconsistent {
            return;
        }
        let p = self.p;
        let mut row: Vec<u64> = coeffs.iter().map(|x| x % p).collect();
        row.push(rhs % p);
        for (r, &c) in self.rows.iter().zip(&self.pivots) {
            let f = row[c];
            if f != 0 {
                for (x, y) in row.iter_mut().zip(r) {
                    *x = (*x + p - f * y % p) % p;
                }
            }
        }
        let Some(c) = (0..self.nvars).find(|&c| row[c] != 0) else {
            if row[self.nvars] != 0 {
                self.inconsistent = true;
            }
            return;
        };
        let inv = inv_mod(row[c], p).expect("nonzero");
        for x in row.iter_mut() {
            *x = *x * inv % p;
        }
        for r in self.rows.iter_mut() {
            let f = r[c];
            if f != 0 {
                for (x, y) in r.iter_mut().zip(&row) {
                    *x = (*x + p - f * y % p) % p;
                }
            }
        }
        self.rows.push(row);
        self.pivots.push(c);
    }

    /// A particular solution and a basis of the homogeneous solutions.
    pub fn solution(&self) -> Option<(Vec<u64>, Vec<Vec<u64>>)> {
        if self.inconsistent {
            return None;
        }
        let p = self.p;
        let mut x0 = vec![0u64; self.nvars];
        for (r, &c) in self.rows.iter().zip(&self.pivots) {
            x0[c] = r[self.nvars];
        }
        let free: Vec<usize> = (0..self.nvars)
            .filter(|c| !self.pivots.contains(c))
            .collect();
        let null = free
            .iter()
            .map(|&f| {
                let mut v = vec![0u64; self.nvars];
                v[f] = 1;
                for (r, &c) in self.rows.iter().zip(&self.pivots) {
                    v[c] = (p - r[f]) % p;
                }
                v
            })
            .collect();
        Some((x0, null))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(a: &[Vec<u64>], ncols: usize, q: u64) -> usize {
        let total = q.pow(ncols as u32);
        (0..total)
            .filter(|&mut_idx| {
                let mut idx = mut_idx;
                let x: Vec<u64> = (0..ncols)
                    .map(|_| {
                        let v = idx % q;
                        idx /= q;
                        v
                    })
                    .collect();
                a.iter()
                    .all(|r| r.iter().zip(&x).map(|(p, y)| p * y).sum::<u64>() % q == 0)
            })
            .count()
    }

    #[test]
    fn smith_solutions_match_brute_force() {
        let m = PrimePowerModulus::new(3, 2).unwrap();
        let systems = vec![
            vec![vec![3, 0, 1], vec![0, 3, 6]],
            vec![vec![0, 0, 0]],
            vec![vec![1, 2, 3], vec![2, 4, 6], vec![3, 0, 0]],
            vec![vec![6, 3, 0], vec![0, 0, 3]],
        ];
        for a in systems {
            let sol = solve_homogeneous(&a, 3, m);
            assert_eq!(sol.size() as usize, brute(&a, 3, 9));
            let mut seen = std::collections::HashSet::new();
            sol.find_map(|x| {
                assert!(a
                    .iter()
                    .all(|r| r.iter().zip(x).map(|(p, y)| p * y).sum::<u64>() % 9 == 0));
                assert!(seen.insert(x.to_vec()));
                None::<()>
            });
            assert_eq!(seen.len() as u128, sol.size());
        }
    }

    #[test]
    fn subspace_counts() {
        // Gaussian binomials over F_3 in dimension 3: 1, 13, 13, 1
        let all = subspaces_of(&Subspace::full(3, 3));
        assert_eq!(all.len(), 28);
        let distinct: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(distinct.len(), 28);
        assert_eq!(
            subspaces_of(&Subspace::full(4, 7)).len(),
            1 + 400 + 2850 + 400 + 1
        );
    }

    #[test]
    fn affine_system() {
        let mut s = AffineSystem::new(3, 5);
        s.add(&[1, 1, 0], 2);
        s.add(&[0, 1, 1], 3);
        let (x0, null) = s.solution().unwrap();
        assert_eq!(null.len(), 1);
        assert_eq!((x0[0] + x0[1]) % 5, 2);
        let n = &null[0];
        assert_eq!((n[1] + n[2]) % 5, 0);
        s.add(&[1, 0, 4], 1);
        assert!(!s.is_consistent());
    }
}
