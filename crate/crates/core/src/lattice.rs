//! Low-index subgroup search, Cartan containment and preimage rigidity.
//!
//! Both the search and the rigidity test reduce to one problem. Given a group
//! `Hb` mod `l^s`, lifts `b_j` of its generators mod `l^(s+1)`, an allowed space
//! `A` of kernel directions and an `Hb`-stable subspace `V` of `A`, find every
//! choice of `X_j` in `A` such that the `b_j (I + l^s X_j)` together with
//! `I + l^s V` generate a group meeting the reduction kernel in exactly
//! `I + l^s V`. Since the kernel is an F_l-vector space (s >= 1), the condition
//! is an affine system over F_l: one block of equations per Schreier edge of `Hb`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fasthash::{KeyMap, KeySet};
use crate::gl2::{
    build_cartan, closure_keys, conjugate_into, det_image, reduce_group, CartanKind, CartanSpec,
    MatrixGroup,
};
use crate::linalg::{subspaces_of, AffineSystem, Subspace};
use crate::modarith::{ell_part_log, raw, unit_subgroup, PrimePowerModulus, ResidueMatrix};
use crate::DEFAULT_ENUM_CAP;

/// Knobs for the subgroup search. Budgets fail hard instead of truncating.
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub index_bound: u64,
    /// Only subgroups with the same reduction mod l as the parent.
    pub same_mod_ell: bool,
    /// Maximum number of candidate subgroups built.
    pub budget: u64,
    pub cap: u64,
}

impl SearchOptions {
    pub fn new(index_bound: u64) -> Self {
        SearchOptions {
            index_bound,
            same_mod_ell: true,
            budget: 2_000_000,
            cap: DEFAULT_ENUM_CAP,
        }
    }

    pub fn unconstrained(mut self) -> Self {
        self.same_mod_ell = false;
        self
    }
}

#[derive(Clone, Debug)]
pub struct SubgroupClass {
    pub representative: MatrixGroup,
    pub index_in_parent: u64,
    pub det_surjective: bool,
    pub class_size: u64,
}

/// A conjugacy class found by the search: generators plus sorted element keys.
#[derive(Clone, Debug)]
struct Found {
    gens: Vec<raw::Raw>,
    keys: Vec<u64>,
    class_size: u64,
}

struct Budget {
    left: u64,
    total: u64,
}

impl Budget {
    fn spend(&mut self, stage: &'static str) -> Result<()> {
        if self.left == 0 {
            return Err(Error::BudgetExhausted {
                budget: self.total,
                stage,
            });
        }
        self.left -= 1;
        Ok(())
    }
}

/// The 4x4 matrix over F_l of `X -> P X P^-1`, acting on `(x11, x12, x21, x22)`.
fn adjoint(p: raw::Raw, ell: u64) -> [[u64; 4]; 4] {
    let p = p.map(|x| x % ell);
    let pi = raw::inv(p, ell).expect("invertible mod l");
    let mut out = [[0u64; 4]; 4];
    for col in 0..4 {
        let mut e = [0u64; 4];
        e[col] = 1;
        let y = raw::mul(raw::mul(p, e, ell), pi, ell);
        for row in 0..4 {
            out[row][col] = y[row];
        }
    }
    out
}

fn apply4(a: &[[u64; 4]; 4], v: &[u64], p: u64) -> Vec<u64> {
    (0..4)
        .map(|r| (0..4).map(|c| a[r][c] * v[c]).sum::<u64>() % p)
        .collect()
}

/// The reduction kernel of GL2(Z/l^(n+1)) -> GL2(Z/l^n) as an F_l[G]-module.
#[derive(Clone, Debug)]
pub struct KernelModule {
    pub ell: u64,
    actions: Vec<[[u64; 4]; 4]>,
}

impl KernelModule {
    /// Conjugation action of `g`'s generators (only their reduction mod l matters).
    pub fn new(g: &MatrixGroup) -> Self {
        let ell = g.modulus().ell();
        let actions = g
            .raw_generators()
            .into_iter()
            .map(|x| adjoint(x, ell))
            .collect();
        KernelModule { ell, actions }
    }

    pub fn is_stable(&self, u: &Subspace) -> bool {
        u.basis.iter().all(|v| {
            self.actions
                .iter()
                .all(|a| u.contains(&apply4(a, v, self.ell)))
        })
    }

    /// Every stable subspace of `within`, ordered by dimension.
    pub fn stable_subspaces_of(&self, within: &Subspace) -> Vec<Subspace> {
        let mut out: Vec<Subspace> = subspaces_of(within)
            .into_iter()
            .filter(|u| self.is_stable(u))
            .collect();
        out.sort_by_key(|u| u.dim());
        out
    }

    pub fn stable_subspaces(&self) -> Vec<Subspace> {
        self.stable_subspaces_of(&Subspace::full(4, self.ell))
    }
}

/// Affine forms: 4 rows (matrix entries) over `nv` unknowns plus a constant column.
type Form = Vec<u64>;

struct LiftProblem<'a> {
    ell: u64,
    /// exponent of the layer: kernel elements are I + l^s X
    s: u32,
    low: u64,
    high: u64,
    hbar_gens: &'a [raw::Raw],
    lifts: &'a [raw::Raw],
    allowed: &'a Subspace,
}

struct LiftSolution {
    x0: Vec<u64>,
    null: Vec<Vec<u64>>,
}

impl<'a> LiftProblem<'a> {
    fn nv(&self) -> usize {
        self.lifts.len() * self.allowed.dim()
    }

    /// Kernel direction `X_j` of an assignment, as a matrix vector.
    fn direction(&self, coeffs: &[u64], j: usize) -> Vec<u64> {
        let d = self.allowed.dim();
        let mut v = vec![0u64; 4];
        for t in 0..d {
            let c = coeffs[j * d + t];
            for (x, b) in v.iter_mut().zip(&self.allowed.basis[t]) {
                *x = (*x + c * b) % self.ell;
            }
        }
        v
    }

    fn adjusted_lifts(&self, coeffs: &[u64]) -> Vec<raw::Raw> {
        let ls = self.ell.pow(self.s);
        (0..self.lifts.len())
            .map(|j| {
                let x = self.direction(coeffs, j);
                let k = [1 + ls * x[0], ls * x[1], ls * x[2], 1 + ls * x[3]].map(|v| v % self.high);
                raw::mul(self.lifts[j], k, self.high)
            })
            .collect()
    }

    fn solve(&self, target: &Subspace, budget: &mut Budget) -> Result<Option<LiftSolution>> {
        let p = self.ell;
        let nv = self.nv();
        let w = nv + 1;
        let dim_a = self.allowed.dim();
        let free = target.free_columns();
        // residue map onto the complement coordinates of `target`
        let proj: Vec<Vec<u64>> = (0..4)
            .map(|i| {
                let mut e = vec![0u64; 4];
                e[i] = 1;
                target.residue(&e)
            })
            .collect();
        let ad_inv: Vec<[[u64; 4]; 4]> = self
            .hbar_gens
            .iter()
            .map(|&h| adjoint(raw::inv(h.map(|x| x % p), p).expect("invertible"), p))
            .collect();
        let x_form = |j: usize| -> Form {
            let mut f = vec![0u64; 4 * w];
            for t in 0..dim_a {
                for k in 0..4 {
                    f[k * w + j * dim_a + t] = self.allowed.basis[t][k];
                }
            }
            f
        };
        let x_forms: Vec<Form> = (0..self.lifts.len()).map(x_form).collect();
        let apply_ad = |a: &[[u64; 4]; 4], f: &Form| -> Form {
            let mut out = vec![0u64; 4 * w];
            for r in 0..4 {
                for c in 0..4 {
                    let coef = a[r][c];
                    if coef != 0 {
                        for col in 0..w {
                            out[r * w + col] = (out[r * w + col] + coef * f[c * w + col]) % p;
                        }
                    }
                }
            }
            out
        };
        let mut system = AffineSystem::new(nv, p);
        let id = raw::key(raw::identity(self.low));
        let mut index: KeyMap<u32> = KeyMap::default();
        index.insert(id, 0);
        let mut elems: Vec<u64> = vec![id];
        let mut base: Vec<raw::Raw> = vec![raw::identity(self.high)];
        let mut forms: Vec<Form> = vec![vec![0u64; 4 * w]];
        let ls = self.ell.pow(self.s);
        let mut i = 0;
        while i < elems.len() {
            let e = raw::unkey(elems[i]);
            for (j, h) in self.hbar_gens.iter().enumerate() {
                let f_key = raw::key(raw::mul(e, *h, self.low));
                let be_bs = raw::mul(base[i], self.lifts[j], self.high);
                let mut y = apply_ad(&ad_inv[j], &forms[i]);
                for (a, b) in y.iter_mut().zip(&x_forms[j]) {
                    *a = (*a + b) % p;
                }
                match index.get(&f_key) {
                    None => {
                        index.insert(f_key, elems.len() as u32);
                        elems.push(f_key);
                        base.push(be_bs);
                        forms.push(y);
                        if elems.len() as u64 > DEFAULT_ENUM_CAP {
                            return Err(Error::CapExceeded {
                                cap: DEFAULT_ENUM_CAP,
                            });
                        }
                    }
                    Some(&fi) => {
                        if !system.is_consistent() {
                            continue;
                        }
                        let fi = fi as usize;
                        let bf_inv = raw::inv(base[fi], self.high).expect("lift is invertible");
                        let m = raw::mul(bf_inv, be_bs, self.high);
                        let id_h = raw::identity(self.high);
                        let c: Vec<u64> = (0..4)
                            .map(|k| (m[k] + self.high - id_h[k]) % self.high / ls % p)
                            .collect();
                        // C + Y - L_f, projected away from `target`
                        let mut diff = y;
                        for k in 0..4 {
                            diff[k * w + nv] = (diff[k * w + nv] + c[k]) % p;
                        }
                        for (a, b) in diff.iter_mut().zip(&forms[fi]) {
                            *a = (*a + p - b) % p;
                        }
                        for &fc in &free {
                            let mut row = vec![0u64; w];
                            for k in 0..4 {
                                let coef = proj[k][fc];
                                if coef != 0 {
                                    for col in 0..w {
                                        row[col] = (row[col] + coef * diff[k * w + col]) % p;
                                    }
                                }
                            }
                            let rhs = (p - row[nv]) % p;
                            system.add(&row[..nv], rhs);
                        }
                    }
                }
            }
            i += 1;
        }
        budget.spend("kernel-layer lift")?;
        Ok(system
            .solution()
            .map(|(x0, null)| LiftSolution { x0, null }))
    }
}

fn add_scaled(a: &[u64], b: &[u64], c: u64, p: u64) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| (x + c * y) % p).collect()
}

/// Elements `(g - I) / l^s mod l` of `g` that are congruent to `I` mod `l^s`.
fn kernel_layer(keys: &[u64], m: PrimePowerModulus, s: u32) -> Subspace {
    let ell = m.ell();
    let q = m.modulus();
    let ls = ell.pow(s);
    let id = raw::identity(q);
    let vecs: Vec<Vec<u64>> = keys
        .iter()
        .map(|&k| raw::unkey(k))
        .filter(|x| (0..4).all(|i| x[i] % ls == id[i] % ls))
        .map(|x| (0..4).map(|i| (x[i] + q - id[i]) % q / ls % ell).collect())
        .collect();
    Subspace::span(&vecs, 4, ell)
}

/// Conjugacy-class bookkeeping for subgroups of a fixed parent.
struct ClassRegistry {
    q: u64,
    parent_gens: Vec<raw::Raw>,
    parent_inv: Vec<raw::Raw>,
    seen: HashMap<Vec<u64>, usize>,
    classes: Vec<Found>,
}

impl ClassRegistry {
    fn new(parent_gens: Vec<raw::Raw>, q: u64) -> Self {
        let parent_inv = parent_gens
            .iter()
            .map(|&g| raw::inv(g, q).expect("invertible"))
            .collect();
        ClassRegistry {
            q,
            parent_gens,
            parent_inv,
            seen: HashMap::new(),
            classes: Vec::new(),
        }
    }

    /// Register a subgroup; returns its class index and whether the class is new.
    fn insert(&mut self, gens: Vec<raw::Raw>, keys: Vec<u64>) -> (usize, bool) {
        if let Some(&c) = self.seen.get(&keys) {
            return (c, false);
        }
        let id = self.classes.len();
        let q = self.q;
        let mut orbit = vec![keys.clone()];
        self.seen.insert(keys.clone(), id);
        let mut i = 0;
        while i < orbit.len() {
            for (g, gi) in self.parent_gens.iter().zip(&self.parent_inv) {
                let mut conj: Vec<u64> = orbit[i]
                    .iter()
                    .map(|&k| raw::key(raw::mul(raw::mul(*g, raw::unkey(k), q), *gi, q)))
                    .collect();
                conj.sort_unstable();
                if !self.seen.contains_key(&conj) {
                    self.seen.insert(conj.clone(), id);
                    orbit.push(conj);
                }
            }
            i += 1;
        }
        self.classes.push(Found {
            gens,
            keys,
            class_size: orbit.len() as u64,
        });
        (id, true)
    }
}

/// All conjugacy classes of subgroups of a group mod l, by cyclic extension.
fn all_classes_mod_ell(
    g_gens: &[raw::Raw],
    m: PrimePowerModulus,
    budget: &mut Budget,
    cap: u64,
) -> Result<Vec<Found>> {
    let q = m.modulus();
    let elements = closure_keys(g_gens, m, cap)?;
    let mut reg = ClassRegistry::new(g_gens.to_vec(), q);
    reg.insert(Vec::new(), vec![raw::key(raw::identity(q))]);
    let mut next = 0;
    while next < reg.classes.len() {
        let h = reg.classes[next].clone();
        next += 1;
        let hset: KeySet = h.keys.iter().copied().collect();
        let mut covered: KeySet = hset.clone();
        for &x in &elements {
            if covered.contains(&x) {
                continue;
            }
            let xr = raw::unkey(x);
            for &hk in &h.keys {
                covered.insert(raw::key(raw::mul(raw::unkey(hk), xr, q)));
            }
            budget.spend("cyclic extension")?;
            let mut gens = h.gens.clone();
            gens.push(xr);
            let keys = closure_keys(&gens, m, cap)?;
            reg.insert(gens, keys);
        }
    }
    Ok(reg.classes)
}

/// All classes of subgroups of `g` (under `g`-conjugacy) of index at most `bound`.
fn classes_up_to_index(
    g: &MatrixGroup,
    opts: &SearchOptions,
    budget: &mut Budget,
) -> Result<Vec<Found>> {
    let m = g.modulus();
    let n = m.exponent();
    let q = m.modulus();
    let ell = m.ell();
    let g_gens = g.raw_generators();
    let g_keys = g.element_keys(opts.cap)?;
    let order = g_keys.len() as u64;
    if n == 0 {
        return Ok(vec![Found {
            gens: Vec::new(),
            keys: g_keys.to_vec(),
            class_size: 1,
        }]);
    }
    if n == 1 {
        let all = if opts.same_mod_ell {
            vec![Found {
                gens: g_gens.clone(),
                keys: g_keys.to_vec(),
                class_size: 1,
            }]
        } else {
            all_classes_mod_ell(&g_gens, m, budget, opts.cap)?
        };
        return Ok(all
            .into_iter()
            .filter(|f| order / f.keys.len() as u64 <= opts.index_bound)
            .collect());
    }
    let low_m = m.with_exponent(n - 1)?;
    let low = low_m.modulus();
    let quotient = reduce_group(g, low_m)?;
    let q_order = quotient.order(opts.cap)?;
    let below = classes_up_to_index(&quotient, opts, budget)?;
    let layer = kernel_layer(&g_keys, m, n - 1);
    // one preimage in g of every element of the quotient
    let mut lift_of: KeyMap<raw::Raw> = KeyMap::default();
    for &k in g_keys.iter() {
        let x = raw::unkey(k);
        lift_of.entry(raw::key(x.map(|v| v % low))).or_insert(x);
    }
    let ls = ell.pow(n - 1);
    let mut reg = ClassRegistry::new(g_gens.clone(), q);
    for hb in &below {
        let hb_index = q_order / hb.keys.len() as u64;
        let hb_group = MatrixGroup::new(
            low_m,
            hb.gens
                .iter()
                .map(|&x| ResidueMatrix::from_reduced(x, low_m))
                .collect::<Result<_>>()?,
        )?;
        let module = KernelModule::new(&hb_group);
        let lifts: Vec<raw::Raw> = hb.gens.iter().map(|x| lift_of[&raw::key(*x)]).collect();
        let problem = LiftProblem {
            ell,
            s: n - 1,
            low,
            high: q,
            hbar_gens: &hb.gens,
            lifts: &lifts,
            allowed: &layer,
        };
        for v in module.stable_subspaces_of(&layer) {
            let layer_index = ell.pow((layer.dim() - v.dim()) as u32);
            if hb_index * layer_index > opts.index_bound {
                continue;
            }
            let Some(sol) = problem.solve(&v, budget)? else {
                continue;
            };
            // solutions that differ by V-shifts or by conjugation inside the layer give the same class
            let nv = problem.nv();
            let dim_a = layer.dim();
            let mut trivial: Vec<Vec<u64>> = Vec::new();
            for j in 0..lifts.len() {
                for b in &v.basis {
                    let mut t = vec![0u64; nv];
                    let c = layer.coordinates(b);
                    t[j * dim_a..(j + 1) * dim_a].copy_from_slice(&c);
                    trivial.push(t);
                }
            }
            for z in &layer.basis {
                let mut t = vec![0u64; nv];
                for (j, h) in hb.gens.iter().enumerate() {
                    let hi = raw::inv(h.map(|x| x % ell), ell).expect("invertible");
                    let az = apply4(&adjoint(hi, ell), z, ell);
                    let delta: Vec<u64> = (0..4).map(|k| (z[k] + ell - az[k]) % ell).collect();
                    t[j * dim_a..(j + 1) * dim_a].copy_from_slice(&layer.coordinates(&delta));
                }
                trivial.push(t);
            }
            let trivial_space = Subspace::span(&trivial, nv, ell);
            let mut reps: Vec<Vec<u64>> = Vec::new();
            let mut acc = trivial_space.clone();
            for nvec in &sol.null {
                if !acc.contains(nvec) {
                    reps.push(nvec.clone());
                    let mut b = acc.basis.clone();
                    b.push(nvec.clone());
                    acc = Subspace::span(&b, nv, ell);
                }
            }
            let count = ell
                .checked_pow(reps.len() as u32)
                .ok_or(Error::BudgetExhausted {
                    budget: budget.total,
                    stage: "lift enumeration",
                })?;
            for mut idx in 0..count {
                budget.spend("lift enumeration")?;
                let mut x = sol.x0.clone();
                for r in &reps {
                    x = add_scaled(&x, r, idx % ell, ell);
                    idx /= ell;
                }
                let mut gens = problem.adjusted_lifts(&x);
                for b in &v.basis {
                    gens.push([1 + ls * b[0], ls * b[1], ls * b[2], 1 + ls * b[3]].map(|t| t % q));
                }
                let keys = closure_keys(&gens, m, opts.cap)?;
                debug_assert_eq!(
                    keys.len() as u64,
                    hb.keys.len() as u64 * ell.pow(v.dim() as u32)
                );
                reg.insert(gens, keys);
            }
        }
    }
    Ok(reg.classes)
}

fn to_group(m: PrimePowerModulus, gens: &[raw::Raw]) -> Result<MatrixGroup> {
    MatrixGroup::new(
        m,
        gens.iter()
            .map(|&x| ResidueMatrix::from_reduced(x, m))
            .collect::<Result<_>>()?,
    )
}

/// Conjugacy classes of proper subgroups with surjective determinant and index within the bound.
pub fn proper_detsurjective_subgroups(
    g: &MatrixGroup,
    opts: &SearchOptions,
) -> Result<Vec<SubgroupClass>> {
    let mut budget = Budget {
        left: opts.budget,
        total: opts.budget,
    };
    let m = g.modulus();
    let order = g.order(opts.cap)?;
    let found = classes_up_to_index(g, opts, &mut budget)?;
    let mut out = Vec::new();
    for f in found {
        let ord = f.keys.len() as u64;
        if ord == order {
            continue;
        }
        let rep = to_group(m, &f.gens)?;
        let det_surjective = det_image(&rep).is_surjective();
        if !det_surjective {
            continue;
        }
        out.push(SubgroupClass {
            representative: rep,
            index_in_parent: order / ord,
            det_surjective,
            class_size: f.class_size,
        });
    }
    out.sort_by_key(|c| (c.index_in_parent, c.class_size));
    Ok(out)
}

/// Every subgroup class of index within the bound (including the parent itself).
pub fn subgroup_classes(g: &MatrixGroup, opts: &SearchOptions) -> Result<Vec<SubgroupClass>> {
    let mut budget = Budget {
        left: opts.budget,
        total: opts.budget,
    };
    let m = g.modulus();
    let order = g.order(opts.cap)?;
    classes_up_to_index(g, opts, &mut budget)?
        .into_iter()
        .map(|f| {
            let rep = to_group(m, &f.gens)?;
            Ok(SubgroupClass {
                det_surjective: det_image(&rep).is_surjective(),
                index_in_parent: order / f.keys.len() as u64,
                representative: rep,
                class_size: f.class_size,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct CartanMembership {
    pub witness: Option<ResidueMatrix>,
    pub index: Option<u64>,
}

impl CartanMembership {
    pub fn is_member(&self) -> bool {
        self.witness.is_some()
    }
}

/// Whether `h` is conjugate into the normalizer of a split Cartan at its own modulus.
pub fn split_cartan_membership(h: &MatrixGroup, cap: u64) -> Result<CartanMembership> {
    let big = build_cartan(&CartanSpec::new(
        CartanKind::SplitNormalizer,
        h.modulus(),
        None,
    )?)?;
    let witness = conjugate_into(h, &big, cap)?;
    let index = match witness {
        Some(_) => Some(big.order(cap)? / h.order(cap)?),
        None => None,
    };
    Ok(CartanMembership { witness, index })
}

#[derive(Clone, Debug)]
pub struct RigidityReport {
    pub rigid: bool,
    pub stable_subspaces: usize,
    pub subspaces_checked: usize,
    pub counterexample: Option<MatrixGroup>,
}

/// Is the full preimage mod `l^(n+1)` the only det-surjective subgroup reducing onto `g`?
pub fn preimage_rigidity(
    g: &MatrixGroup,
    target_exponent: u32,
    budget: u64,
    cap: u64,
) -> Result<RigidityReport> {
    let m = g.modulus();
    let ell = m.ell();
    let n = m.exponent();
    if ell == 2 {
        return Err(Error::Unsupported("rigidity at l = 2".into()));
    }
    if n == 0 || target_exponent != n + 1 {
        return Err(Error::Invalid(format!(
            "rigidity is checked one level up: expected target exponent {}",
            n + 1
        )));
    }
    let high_m = m.with_exponent(n + 1)?;
    let high = high_m.modulus();
    let low = m.modulus();
    let gens: Vec<raw::Raw> = g
        .trimmed_generators(cap)?
        .iter()
        .map(|x| x.entries())
        .collect();
    let module = KernelModule::new(g);
    let stable = module.stable_subspaces();
    let full = Subspace::full(4, ell);
    let base_dets = det_image(g);
    let mut report = RigidityReport {
        rigid: true,
        stable_subspaces: stable.len(),
        subspaces_checked: 0,
        counterexample: None,
    };
    if !base_dets.is_surjective() {
        // no subgroup reducing onto g can have surjective determinant
        return Ok(report);
    }
    let problem = LiftProblem {
        ell,
        s: n,
        low,
        high,
        hbar_gens: &gens,
        lifts: &gens,
        allowed: &full,
    };
    let mut b = Budget {
        left: budget,
        total: budget,
    };
    for u in stable.iter().filter(|u| u.dim() < 4) {
        report.subspaces_checked += 1;
        let Some(sol) = problem.solve(u, &mut b)? else {
            continue;
        };
        let Some(x) = det_surjective_choice(&problem, &sol, u, n) else {
            continue;
        };
        let ls = ell.pow(n);
        let mut hgens = problem.adjusted_lifts(&x);
        for v in &u.basis {
            hgens.push([1 + ls * v[0], ls * v[1], ls * v[2], 1 + ls * v[3]].map(|t| t % high));
        }
        let h = to_group(high_m, &hgens)?.with_label(format!("counterexample mod {high}"));
        report.rigid = false;
        report.counterexample = Some(h);
        return Ok(report);
    }
    Ok(report)
}

/// A solution whose generated group has surjective determinant, if any.
fn det_surjective_choice(
    problem: &LiftProblem,
    sol: &LiftSolution,
    u: &Subspace,
    n: u32,
) -> Option<Vec<u64>> {
    let ell = problem.ell;
    if n >= 2 {
        // for odd l, surjective mod l^n already forces surjectivity one level up
        return Some(sol.x0.clone());
    }
    if u.basis.iter().any(|v| (v[0] + v[3]) % ell != 0) {
        return Some(sol.x0.clone());
    }
    // psi(det(b_j (I + l X_j))) = psi(det b_j) - tr(X_j), valued in F_l
    let psi = |x: &[u64], j: usize, homogeneous: bool| -> u64 {
        let d = problem.direction(x, j);
        let tr = (d[0] + d[3]) % ell;
        let c = if homogeneous {
            0
        } else {
            ell_part_log(raw::det(problem.lifts[j], problem.high), ell)
        };
        (c + ell - tr) % ell
    };
    let r = problem.lifts.len();
    if (0..r).any(|j| psi(&sol.x0, j, false) != 0) {
        return Some(sol.x0.clone());
    }
    for nvec in &sol.null {
        if (0..r).any(|j| psi(nvec, j, true) != 0) {
            return Some(add_scaled(&sol.x0, nvec, 1, ell));
        }
    }
    None
}

/// Check that `h` reduces onto `g`, has surjective determinant and is smaller than the preimage.
pub fn verify_counterexample(h: &MatrixGroup, g: &MatrixGroup, cap: u64) -> Result<bool> {
    let reduced = reduce_group(h, g.modulus())?;
    let pre_order = g.order(cap)? * h.modulus().ell().pow(4);
    let dets: Vec<u64> = h.generators().iter().map(|x| x.det()).collect();
    let surj = unit_subgroup(&dets, h.modulus()).len() as u64 == h.modulus().unit_count();
    Ok(reduced.same_elements(g, cap)? && surj && h.order(cap)? < pre_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gl2::full_preimage;

    fn pm(l: u64, n: u32) -> PrimePowerModulus {
        PrimePowerModulus::new(l, n).unwrap()
    }

    fn cartan(kind: CartanKind, l: u64, n: u32) -> MatrixGroup {
        build_cartan(&CartanSpec::new(kind, pm(l, n), None).unwrap()).unwrap()
    }

    #[test]
    fn gl2_kernel_module() {
        let g = MatrixGroup::full(pm(7, 1));
        let stable = KernelModule::new(&g).stable_subspaces();
        // 0, scalars, trace zero, everything
        assert_eq!(
            stable.iter().map(|u| u.dim()).collect::<Vec<_>>(),
            vec![0, 1, 3, 4]
        );
    }

    #[test]
    fn gl2_f7_is_rigid() {
        let g = MatrixGroup::full(pm(7, 1));
        let r = preimage_rigidity(&g, 2, 1000, DEFAULT_ENUM_CAP).unwrap();
        assert!(r.rigid);
    }

    #[test]
    fn nonsplit_normalizer_is_not_rigid() {
        let g = cartan(CartanKind::NonsplitNormalizer, 7, 1);
        let r = preimage_rigidity(&g, 2, 1000, DEFAULT_ENUM_CAP).unwrap();
        assert!(!r.rigid);
        let h = r.counterexample.unwrap();
        assert!(verify_counterexample(&h, &g, DEFAULT_ENUM_CAP).unwrap());
        let c = cartan(CartanKind::NonsplitNormalizer, 7, 2);
        assert!(verify_counterexample(&c, &g, DEFAULT_ENUM_CAP).unwrap());
    }

    #[test]
    fn rigidity_rejects_two_and_wrong_targets() {
        let g = MatrixGroup::full(pm(2, 1));
        assert!(matches!(
            preimage_rigidity(&g, 2, 10, DEFAULT_ENUM_CAP),
            Err(Error::Unsupported(_))
        ));
        let g = MatrixGroup::full(pm(5, 1));
        assert!(preimage_rigidity(&g, 3, 10, DEFAULT_ENUM_CAP).is_err());
    }

    #[test]
    fn constrained_search_on_gl2_f7_is_empty() {
        let g = MatrixGroup::full(pm(7, 1));
        assert!(proper_detsurjective_subgroups(&g, &SearchOptions::new(49))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn split_cartan_membership_cases() {
        let s = cartan(CartanKind::Split, 7, 2);
        let r = split_cartan_membership(&s, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(r.index, Some(2));
        let ns = cartan(CartanKind::Nonsplit, 7, 2);
        assert!(!split_cartan_membership(&ns, DEFAULT_ENUM_CAP)
            .unwrap()
            .is_member());
    }

    #[test]
    fn layered_search_agrees_with_cyclic_extension() {
        // cyclic extension directly at the top modulus is an independent enumeration
        for (l, n) in [(3u64, 2u32), (2, 2), (2, 3)] {
            let g = cartan(CartanKind::Borel, l, n);
            let order = g.order(DEFAULT_ENUM_CAP).unwrap();
            let mut opts = SearchOptions::new(order).unconstrained();
            opts.budget = 10_000_000;
            let mut layered: Vec<(u64, u64)> = subgroup_classes(&g, &opts)
                .unwrap()
                .iter()
                .map(|c| (c.index_in_parent, c.class_size))
                .collect();
            let mut budget = Budget {
                left: u64::MAX,
                total: u64::MAX,
            };
            let mut direct: Vec<(u64, u64)> = all_classes_mod_ell(
                &g.raw_generators(),
                g.modulus(),
                &mut budget,
                DEFAULT_ENUM_CAP,
            )
            .unwrap()
            .iter()
            .map(|f| (order / f.keys.len() as u64, f.class_size))
            .collect();
            layered.sort_unstable();
            direct.sort_unstable();
            assert_eq!(layered, direct, "l = {l}, n = {n}");
        }
    }

    #[test]
    fn layered_search_counts_lifts_of_borel() {
        // subgroups of the Borel preimage mod 9 reducing onto the Borel mod 3
        let b = cartan(CartanKind::Borel, 3, 1);
        let pre = full_preimage(&b, pm(3, 2)).unwrap();
        let classes = subgroup_classes(&pre, &SearchOptions::new(81)).unwrap();
        for c in &classes {
            let red = reduce_group(&c.representative, pm(3, 1)).unwrap();
            assert!(red.same_elements(&b, DEFAULT_ENUM_CAP).unwrap());
            assert!(c
                .representative
                .is_subgroup_of(&pre, DEFAULT_ENUM_CAP)
                .unwrap());
        }
        assert!(classes.iter().any(|c| c.index_in_parent == 1));
    }
}
