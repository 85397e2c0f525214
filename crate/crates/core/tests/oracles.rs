//! Checks against independent computations: brute-force orbits, the bundled catalogue,
//! and the exceptional level-49 image.

mod common;

use std::collections::{BTreeSet, HashSet};

use common::{pm, random_subgroup, CAP};
use isopoints::gl2::{build_cartan, full_preimage, is_conjugate, CartanKind, CartanSpec};
use isopoints::labelio::{
    find_record, known_images, parse_generators, validate_record, ImageRecord,
};
use isopoints::lattice::{self, preimage_rigidity, verify_counterexample, SearchOptions};
use isopoints::orbits::orbits;
use isopoints::{Error, Family, MatrixGroup};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn record(label: &str) -> ImageRecord {
    find_record(&known_images(), label).cloned().unwrap()
}

/// Orbit sizes by applying every group element to every point.
fn brute_orbit_sizes(g: &MatrixGroup, family: Family) -> Vec<u64> {
    let q = g.modulus().modulus();
    let l = g.modulus().ell();
    let elems: Vec<[u64; 4]> = g
        .enumerate(CAP)
        .unwrap()
        .iter()
        .map(|x| x.entries())
        .collect();
    let exact = |x: u64, y: u64| x % l != 0 || y % l != 0;
    let canon = |x: u64, y: u64| -> (u64, u64) {
        match family {
            Family::Gamma1 => (x, y).min(((q - x) % q, (q - y) % q)),
            Family::Gamma0 => (1..q)
                .filter(|u| u % l != 0)
                .map(|u| (x * u % q, y * u % q))
                .min()
                .unwrap(),
        }
    };
    let mut seen = HashSet::new();
    let mut sizes = Vec::new();
    for x in 0..q {
        for y in 0..q {
            if !exact(x, y) || seen.contains(&canon(x, y)) {
                continue;
            }
            let orbit: BTreeSet<(u64, u64)> = elems
                .iter()
                .map(|m| canon((m[0] * x + m[1] * y) % q, (m[2] * x + m[3] * y) % q))
                .collect();
            sizes.push(orbit.len() as u64);
            seen.extend(orbit);
        }
    }
    sizes.sort_unstable();
    sizes
}

#[test]
fn orbits_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let g = random_subgroup(
            &mut rng,
            &[(3, 1), (5, 1), (7, 1), (3, 2), (2, 2), (2, 3), (5, 2)],
        );
        for fam in [Family::Gamma1, Family::Gamma0] {
            let mut fast: Vec<u64> = orbits(&g, fam, g.modulus().exponent())
                .unwrap()
                .iter()
                .map(|r| r.size)
                .collect();
            fast.sort_unstable();
            assert_eq!(
                fast,
                brute_orbit_sizes(&g, fam),
                "{fam} on {:?}",
                g.generators()
            );
        }
    }
}

#[test]
fn every_catalogue_record_validates() {
    for rec in known_images() {
        let report = validate_record(&rec, CAP);
        assert!(report.passed(), "{}", report.to_lines());
    }
}

#[test]
fn validation_catches_injected_faults() {
    let good = record("7.21.0.1");
    let mut genus_off = good.clone();
    genus_off.rszb_label = "7.21.1.1".into();
    let r = validate_record(&genus_off, CAP);
    assert_eq!(
        r.mismatches().iter().map(|c| c.field).collect::<Vec<_>>(),
        vec!["g"]
    );
    let mut level_off = good;
    level_off.rszb_label = "49.21.0.1".into();
    let r = validate_record(&level_off, CAP);
    assert_eq!(
        r.mismatches().iter().map(|c| c.field).collect::<Vec<_>>(),
        vec!["N"]
    );
}

#[test]
fn generator_file_errors() {
    assert!(parse_generators("").unwrap().is_empty());
    let recs = parse_generators("49.196.9.1|49|1,0,37,48;20,4,18,21").unwrap();
    assert_eq!(recs[0].generators.len(), 2);
    assert!(matches!(
        parse_generators("# c\n49.1.0.1|49|49,0,0,1"),
        Err(Error::Parse { line: 2, .. })
    ));
    assert!(matches!(
        parse_generators("7.1.0.1|7|1,1,1,1"),
        Err(Error::Parse { line: 1, .. })
    ));
    assert!(parse_generators("7.1.0.1|7|1,0,0,1\n7.1.0.1|7|1,0,0,1").is_err());
}

/// The six generators printed for the exceptional index-49 subgroup.
fn six_generator_group() -> MatrixGroup {
    let m = pm(7, 2);
    MatrixGroup::from_entries(
        m,
        &[
            [1, 0, 37, 48],
            [20, 4, 18, 21],
            [31, 17, 3, 23],
            [22, 0, 0, 22],
            [34, 26, 19, 16],
            [33, 26, 19, 15],
        ],
    )
    .unwrap()
}

#[test]
fn exceptional_subgroup_is_the_search_result() {
    let g = record("49.196.9.1").group().unwrap();
    let h = six_generator_group();
    assert!(h.is_subgroup_of(&g, CAP).unwrap());
    assert_eq!(g.order(CAP).unwrap() / h.order(CAP).unwrap(), 49);
    let classes = lattice::proper_detsurjective_subgroups(&g, &SearchOptions::new(49)).unwrap();
    assert_eq!(classes.len(), 1);
    let rep = &classes[0].representative;
    assert!(rep.is_subgroup_of(&g, CAP).unwrap());
    assert_eq!(
        classes[0].index_in_parent * rep.order(CAP).unwrap(),
        g.order(CAP).unwrap()
    );
    let c = is_conjugate(rep, &h, CAP).unwrap().expect("conjugate");
    assert!(rep
        .conjugate_by(&c)
        .unwrap()
        .same_elements(&h, CAP)
        .unwrap());
    assert_eq!(
        lattice::split_cartan_membership(&h, CAP).unwrap().index,
        Some(7)
    );
}

#[test]
fn unconstrained_search_reports_intermediate_classes() {
    // without the mod-7 constraint, intermediate classes do exist and are reported
    let g = record("49.196.9.1").group().unwrap();
    let free = lattice::proper_detsurjective_subgroups(&g, &SearchOptions::new(49).unconstrained())
        .unwrap();
    assert!(free.iter().any(|c| c.index_in_parent < 49));
    for c in &free {
        assert!(c.det_surjective);
        assert!(c.representative.is_subgroup_of(&g, CAP).unwrap());
        assert_eq!(
            c.index_in_parent * c.representative.order(CAP).unwrap(),
            g.order(CAP).unwrap()
        );
    }
    assert_eq!(free.iter().filter(|c| c.index_in_parent == 49).count(), 1);
}

#[test]
fn search_budget_is_a_hard_error() {
    let g = MatrixGroup::full(pm(5, 1));
    let mut opts = SearchOptions::new(120).unconstrained();
    opts.budget = 3;
    assert!(matches!(
        lattice::proper_detsurjective_subgroups(&g, &opts),
        Err(Error::BudgetExhausted { .. })
    ));
}

#[test]
fn rigidity_examples_and_conjugation() {
    let ns7 =
        build_cartan(&CartanSpec::new(CartanKind::NonsplitNormalizer, pm(7, 1), None).unwrap())
            .unwrap();
    let ns49 =
        build_cartan(&CartanSpec::new(CartanKind::NonsplitNormalizer, pm(7, 2), None).unwrap())
            .unwrap();
    assert!(verify_counterexample(&ns49, &ns7, CAP).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..3 {
        let c = common::random_invertible(&mut rng, pm(7, 1));
        let r = preimage_rigidity(&ns7.conjugate_by(&c).unwrap(), 2, 1000, CAP).unwrap();
        assert!(!r.rigid);
        let h = r.counterexample.unwrap();
        assert!(h
            .is_subgroup_of(
                &full_preimage(&ns7.conjugate_by(&c).unwrap(), pm(7, 2)).unwrap(),
                CAP
            )
            .unwrap());
    }
    for l in [5u64, 7, 11] {
        assert!(
            preimage_rigidity(&MatrixGroup::full(pm(l, 1)), 2, 1000, CAP)
                .unwrap()
                .rigid
        );
    }
}
