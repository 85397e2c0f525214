//! The three-step filter: candidate (level, degree) pairs from orbit towers, then
//! elimination by the Riemann-Roch bound and by genus-zero images.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::error::Result;
use crate::gl2::{det_image, level, MatrixGroup};
use crate::modarith::PrimePowerModulus;
use crate::modcurves::{genus_at, genus_of_family, tower_map_degree};
use crate::orbits::{OrbitTable, Representative};
use crate::Family;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elimination {
    None,
    RiemannRoch,
    GenusZeroImage,
}

impl Elimination {
    pub fn reason(&self) -> &'static str {
        match self {
            Elimination::None => "none",
            Elimination::RiemannRoch => "riemann_roch",
            Elimination::GenusZeroImage => "genus_zero_image",
        }
    }

    pub fn from_reason(s: &str) -> Option<Self> {
        [
            Elimination::None,
            Elimination::RiemannRoch,
            Elimination::GenusZeroImage,
        ]
        .into_iter()
        .find(|e| e.reason() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Provenance {
    pub source_level: PrimePowerModulus,
    pub representative: Representative,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidatePair {
    pub level: PrimePowerModulus,
    pub degree: u64,
    pub provenance: Vec<Provenance>,
    pub elimination: Elimination,
}

impl CandidatePair {
    pub fn key(&self) -> (u64, u64) {
        (self.level.modulus(), self.degree)
    }

    pub fn survives(&self) -> bool {
        self.elimination == Elimination::None
    }
}

/// Pairs from every orbit at levels `l^1 .. l^kmax`.
pub fn candidate_pairs_up_to(
    g: &MatrixGroup,
    family: Family,
    kmax: u32,
) -> Result<Vec<CandidatePair>> {
    let ell = g.modulus().ell();
    let tables: Vec<OrbitTable> = (0..=kmax)
        .map(|a| OrbitTable::new(g, family, a))
        .collect::<Result<_>>()?;
    let mut merged: BTreeMap<(u32, u64), Vec<Provenance>> = BTreeMap::new();
    for k in 1..=kmax {
        let top = &tables[k as usize];
        for rec in top.records() {
            let v = match rec.representative {
                Representative::Vector(v) => v,
                Representative::Submodule(s) => s.generator(),
            };
            let (a, d) = (0..=k)
                .map(|a| (a, tables[a as usize].degree_of(v)))
                .find(|&(a, d)| d * tower_map_degree(family, ell, a, k) == rec.size)
                .expect("level k itself is always multiplicative");
            merged.entry((a, d)).or_default().push(Provenance {
                source_level: rec.level,
                representative: rec.representative,
            });
        }
    }
    merged
        .into_iter()
        .map(|((a, degree), provenance)| {
            Ok(CandidatePair {
                level: g.modulus().with_exponent(a)?,
                degree,
                provenance,
                elimination: Elimination::None,
            })
        })
        .collect()
}

/// Step one of the filter, iterating up to the level exponent of `g` (at least 1).
pub fn candidate_pairs(g: &MatrixGroup, family: Family, cap: u64) -> Result<Vec<CandidatePair>> {
    let m = level(g, cap)?.exponent();
    candidate_pairs_up_to(g, family, m.max(1))
}

pub fn filter_riemann_roch(pairs: &mut [CandidatePair], family: Family) {
    for p in pairs.iter_mut().filter(|p| p.survives()) {
        if p.degree > genus_of_family(family, p.level.modulus()) {
            p.elimination = Elimination::RiemannRoch;
        }
    }
}

pub fn filter_genus_zero(pairs: &mut [CandidatePair], g: &MatrixGroup, cap: u64) -> Result<()> {
    let mut cache: HashMap<PrimePowerModulus, u64> = HashMap::new();
    for p in pairs.iter_mut().filter(|p| p.survives()) {
        let genus = match cache.get(&p.level) {
            Some(&x) => x,
            None => {
                let x = genus_at(g, p.level, cap)?.genus;
                cache.insert(p.level, x);
                x
            }
        };
        if genus == 0 {
            p.elimination = Elimination::GenusZeroImage;
        }
    }
    Ok(())
}

/// Literature facts attached to known surviving pairs. These are citations, not computations.
pub fn annotation_for(family: Family, level: u64, degree: u64) -> Option<&'static str> {
    match (family, level, degree) {
        (Family::Gamma1, 17, 4) => Some(
            "citation: every degree 4 point on X1(17) lies in a P^1-parameterized family \
             (Derickx, Kamienny, Mazur), so this pair carries no isolated point",
        ),
        (Family::Gamma1, 37, 6) => Some(
            "citation: degree 6 is below half the Q-gonality of X1(37) (Derickx, van Hoeij), \
             so points of this degree are sporadic and hence isolated",
        ),
        (Family::Gamma1, 37, 18) => Some(
            "citation: the degree 18 points on X1(37) attached to these curves are isolated \
             by earlier work on isolated points of X1(37)",
        ),
        (Family::Gamma0, 11, 1) | (Family::Gamma0, 17, 1) | (Family::Gamma0, 37, 1) => Some(
            "citation: X0(l) has finitely many rational points (Mazur); its non-cuspidal \
             rational points are isolated",
        ),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub level: u64,
    pub degree: u64,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterReport {
    pub label: String,
    pub family: Family,
    pub pairs: Vec<CandidatePair>,
    pub annotations: Vec<Annotation>,
    pub warnings: Vec<String>,
}

impl FilterReport {
    /// Surviving (level, degree) pairs, sorted.
    pub fn final_set(&self) -> Vec<(u64, u64)> {
        let mut v: Vec<_> = self
            .pairs
            .iter()
            .filter(|p| p.survives())
            .map(|p| p.key())
            .collect();
        v.sort_unstable();
        v
    }

    /// `label, family, level, degree, status, reason` per pair, then the RESULT line.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for w in &self.warnings {
            writeln!(out, "# warning\t{}\t{w}", self.label).unwrap();
        }
        for a in &self.annotations {
            writeln!(
                out,
                "# note\t{}\t{}\t{}\t{}",
                self.label, a.level, a.degree, a.text
            )
            .unwrap();
        }
        for p in &self.pairs {
            let status = if p.survives() {
                "survives"
            } else {
                "eliminated"
            };
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                self.label,
                self.family,
                p.level.modulus(),
                p.degree,
                status,
                p.elimination.reason()
            )
            .unwrap();
        }
        write!(out, "RESULT\t{}\t{}", self.label, self.family).unwrap();
        for (l, d) in self.final_set() {
            write!(out, "\t{l} {d}").unwrap();
        }
        out.push('\n');
        out
    }
}

impl fmt::Display for FilterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "image {} ({})", self.label, self.family)?;
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        for p in &self.pairs {
            let status = if p.survives() {
                "SURVIVES"
            } else {
                p.elimination.reason()
            };
            let sources: Vec<String> = p
                .provenance
                .iter()
                .map(|s| format!("{}@{}", s.representative, s.source_level))
                .collect();
            writeln!(
                f,
                "  <{}, {}>  {:<16} from {}",
                p.level.modulus(),
                p.degree,
                status,
                sources.join(" ")
            )?;
        }
        for a in &self.annotations {
            writeln!(f, "  note <{}, {}>: {}", a.level, a.degree, a.text)?;
        }
        let fin: Vec<String> = self
            .final_set()
            .iter()
            .map(|(l, d)| format!("<{l}, {d}>"))
            .collect();
        write!(f, "  final: {{{}}}", fin.join(", "))
    }
}

/// Full pipeline on one image.
pub fn analyze(g: &MatrixGroup, family: Family, cap: u64) -> Result<FilterReport> {
    let mut warnings = Vec::new();
    if !det_image(g).is_surjective() {
        warnings.push("determinant is not surjective; degrees have no arithmetic meaning".into());
    }
    let mut pairs = candidate_pairs(g, family, cap)?;
    filter_riemann_roch(&mut pairs, family);
    filter_genus_zero(&mut pairs, g, cap)?;
    let annotations = pairs
        .iter()
        .filter(|p| p.survives())
        .filter_map(|p| {
            annotation_for(family, p.level.modulus(), p.degree).map(|t| Annotation {
                level: p.level.modulus(),
                degree: p.degree,
                text: t.to_string(),
            })
        })
        .collect();
    Ok(FilterReport {
        label: g.label().unwrap_or("unlabeled").to_string(),
        family,
        pairs,
        annotations,
        warnings,
    })
}

/// Analyze many images in parallel; results come back in input order.
pub fn analyze_batch(
    groups: &[MatrixGroup],
    family: Family,
    cap: u64,
) -> Vec<Result<FilterReport>> {
    groups.par_iter().map(|g| analyze(g, family, cap)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gl2::{build_cartan, CartanKind, CartanSpec};
    use crate::DEFAULT_ENUM_CAP as CAP;

    fn pm(l: u64, n: u32) -> PrimePowerModulus {
        PrimePowerModulus::new(l, n).unwrap()
    }

    #[test]
    fn full_image_only_gives_level_one() {
        let g = MatrixGroup::full(pm(7, 1));
        let pairs = candidate_pairs(&g, Family::Gamma1, CAP).unwrap();
        assert_eq!(
            pairs.iter().map(|p| p.key()).collect::<Vec<_>>(),
            vec![(1, 1)]
        );
        let r = analyze(&g, Family::Gamma1, CAP).unwrap();
        assert!(r.final_set().is_empty());
        assert_eq!(r.pairs[0].elimination, Elimination::RiemannRoch);
    }

    #[test]
    fn nonsplit_normalizer_collapses_to_level_one() {
        let g = build_cartan(
            &CartanSpec::new(CartanKind::NonsplitNormalizer, pm(17, 1), None).unwrap(),
        )
        .unwrap();
        for fam in [Family::Gamma1, Family::Gamma0] {
            let pairs = candidate_pairs(&g, fam, CAP).unwrap();
            assert_eq!(
                pairs.iter().map(|p| p.key()).collect::<Vec<_>>(),
                vec![(1, 1)]
            );
        }
    }

    #[test]
    fn borel_mod_13_gamma0() {
        let g =
            build_cartan(&CartanSpec::new(CartanKind::Borel, pm(13, 1), None).unwrap()).unwrap();
        let r = analyze(&g, Family::Gamma0, CAP).unwrap();
        assert!(r.final_set().is_empty());
        let p = r.pairs.iter().find(|p| p.key() == (13, 1)).unwrap();
        assert_eq!(p.elimination, Elimination::RiemannRoch);
    }

    #[test]
    fn lines_format_ends_with_result() {
        let g = MatrixGroup::full(pm(5, 1)).with_label("5.1.0.1");
        let text = analyze(&g, Family::Gamma0, CAP).unwrap().to_lines();
        assert!(text.ends_with("RESULT\t5.1.0.1\tgamma0\n"));
        assert!(text.contains("5.1.0.1\tgamma0\t1\t1\teliminated\triemann_roch\n"));
    }

    #[test]
    fn annotations_are_keyed() {
        assert!(annotation_for(Family::Gamma1, 17, 4).is_some());
        assert!(annotation_for(Family::Gamma0, 17, 4).is_none());
    }
}
