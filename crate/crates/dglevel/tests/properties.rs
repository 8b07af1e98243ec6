//! Property tests for the structural invariants of each layer.

use std::collections::BTreeMap;
use std::sync::Arc;

use dglevel::algebra::{AlgebraMap, DgAlgebra, Generator, GeneratorKind};
use dglevel::cli::dispatch;
use dglevel::emss::{comodule_compatible, e2_page, install_d2, run_to_stable, FibreSquareSpec};
use dglevel::field::{FieldTag, Scalar};
use dglevel::graded::{CochainComplex, DegreeWindow, GradedDims, GradedVectorSpace};
use dglevel::linalg::{rank_and_kernel, Matrix, Span};
use dglevel::module::{direct_sum, ChainMap, FreeModule, Module, RawModule};
use dglevel::rational::{build_p_tower, hopf_invariant, relative_module, sphere_model, tower_level_bounds};
use dglevel::resolve::{bar_resolution, generator_filtration, phi, tor, Strategy as Resolution};
use dglevel::spheres::{
    decompose, molecule_cohomology, molecule_level, molecule_model, realizable, sphere_level, MoleculeId, Realizability,
    SphereLevel,
};
use proptest::prelude::*;

const Q: FieldTag = FieldTag::Rationals;

fn field() -> impl Strategy<Value = FieldTag> {
    prop_oneof![Just(Q), Just(FieldTag::Prime(2)), Just(FieldTag::Prime(3)), Just(FieldTag::Prime(5))]
}

fn mol(d: i32, l: i32, m: i32) -> MoleculeId {
    MoleculeId::new(d, l, m).unwrap()
}

fn molecule_sum(d: i32, field: FieldTag, parts: &[(i32, i32)]) -> Module {
    let a = Arc::new(DgAlgebra::sphere_cohomology(d, field));
    let ms: Vec<Module> = parts.iter().map(|&(l, m)| Module::Free(molecule_model(&mol(d, l, m), field).unwrap())).collect();
    direct_sum(a, &ms).unwrap()
}

/// `d`, field and a few `(l, m)` summands.
fn sphere_module() -> impl Strategy<Value = (i32, FieldTag, Vec<(i32, i32)>)> {
    (2..=4i32, field(), prop::collection::vec((-3..=6i32, 0..=2i32), 1..=3))
}

fn wide() -> DegreeWindow {
    DegreeWindow::new(-20, 30).unwrap()
}

// ------------------------------------------------------------ exact fields

/// `U · diag · V` with `U`, `V` products of integer elementary matrices.
fn unimodular_product(n: usize, rank: usize, ops: &[(usize, usize, i64)]) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j && i < rank)).collect()).collect();
    for (k, &(i, j, c)) in ops.iter().enumerate() {
        let (i, j) = (i % n, j % n);
        if i == j {
            continue;
        }
        if k % 2 == 0 {
            for col in 0..n {
                m[i][col] += c * m[j][col];
            }
        } else {
            for row in m.iter_mut() {
                row[i] += c * row[j];
            }
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rank_agrees_across_characteristics(
        n in 1..=5usize,
        r in 0..=5usize,
        ops in prop::collection::vec((0..5usize, 0..5usize, -2..=2i64), 0..12),
    ) {
        let rank = r.min(n);
        let rows = unimodular_product(n, rank, &ops);
        let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
        for f in [Q, FieldTag::Prime(2), FieldTag::Prime(3), FieldTag::Prime(5), FieldTag::Prime(7)] {
            prop_assert_eq!(Matrix::from_i64(f, &refs).rank(), rank);
        }
    }

    #[test]
    fn inverse_is_an_involution(f in field(), a in -50..=50i64, b in 1..=50i64) {
        let x = f.from_i64(a).div(&f.from_i64(b));
        if let Ok(x) = x {
            if !x.is_zero() {
                prop_assert_eq!(x.inv().unwrap().inv().unwrap(), x);
            }
        }
    }

    // -------------------------------------------------------- graded

    #[test]
    fn cohomology_ignores_basis_order((d, f, parts) in sphere_module(), seed in any::<u64>()) {
        let m = molecule_sum(d, f, &parts).to_raw().unwrap();
        let c = m.complex();
        let perm = |n: i32| -> Vec<usize> {
            let k = c.dim(n);
            let mut p: Vec<usize> = (0..k).collect();
            // a deterministic shuffle keyed by the seed and the degree
            p.sort_by_key(|&i| (seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ n as u64).rotate_left(17));
            p
        };
        let mut space = GradedVectorSpace::new(f);
        let mut diffs = BTreeMap::new();
        for n in c.space().degrees().collect::<Vec<_>>() {
            let p = perm(n);
            let labels = c.space().labels(n);
            space.set_degree(n, p.iter().map(|&i| labels[i].clone()).collect());
            diffs.insert(n, c.differential(n).permuted(&perm(n + 1), &p));
        }
        let shuffled = CochainComplex::finite(space, diffs).unwrap();
        prop_assert_eq!(shuffled.cohomology(wide()).unwrap().dims, c.cohomology(wide()).unwrap().dims);
    }

    #[test]
    fn enlarging_the_window_keeps_dims((d, f, parts) in sphere_module(), lo in -12..=0i32, hi in 0..=14i32, grow in 1..=8i32) {
        let m = molecule_sum(d, f, &parts);
        let small = DegreeWindow::new(lo, hi).unwrap();
        let big = DegreeWindow::new(lo - grow, hi + grow).unwrap();
        prop_assert_eq!(m.cohomology(small).unwrap(), m.cohomology(big).unwrap().restricted(small));
    }

    // -------------------------------------------------------- modules

    #[test]
    fn shift_translates_cohomology((d, f, parts) in sphere_module(), k in -6..=6i32) {
        let m = molecule_sum(d, f, &parts);
        let h = m.cohomology(wide()).unwrap();
        let hs = m.shift(k).cohomology(DegreeWindow::new(-30, 40).unwrap()).unwrap();
        for n in -10..=20 {
            prop_assert_eq!(hs.get(n), h.get(n + k));
        }
    }

    #[test]
    fn cone_fits_the_long_exact_sequence((d, f, parts) in sphere_module(), pick in any::<prop::sample::Index>(), coeffs in prop::collection::vec(-2..=2i64, 8)) {
        let target = molecule_sum(d, f, &parts);
        let h = target.cohomology(wide()).unwrap();
        let degrees: Vec<i32> = h.iter().map(|(n, _)| n).collect();
        let k = degrees[pick.index(degrees.len())];
        let (_, cycles) = rank_and_kernel(&target.d_matrix(k)).unwrap();
        let mut z = vec![f.zero(); target.dim(k)];
        for (c, v) in coeffs.iter().zip(&cycles) {
            for (zi, vi) in z.iter_mut().zip(v) {
                *zi = &*zi + &(&f.from_i64(*c) * vi);
            }
        }
        let source = FreeModule::algebra_module(target.algebra().clone()).shift(-k);
        let map = ChainMap::from_generators(source, target.clone(), vec![z]).unwrap();
        let src = map.source();
        let hs = src.cohomology(wide()).unwrap();
        let rank_h = |n: i32| -> usize {
            let (_, zs) = rank_and_kernel(&src.d_matrix(n)).unwrap();
            let b = target.d_matrix(n - 1);
            let mut span = Span::new(f, target.dim(n));
            for j in 0..b.cols() {
                span.insert(&b.column(j));
            }
            let base = span.dim();
            for z in &zs {
                span.insert(&map.matrix(n).apply(z));
            }
            span.dim() - base
        };
        let hc = map.cone().unwrap().cohomology(DegreeWindow::new(-15, 25).unwrap()).unwrap();
        for n in -15..=25 {
            prop_assert_eq!(hc.get(n), h.get(n) - rank_h(n) + hs.get(n + 1) - rank_h(n + 1), "degree {}", n);
        }
    }

    // -------------------------------------------------------- resolutions

    #[test]
    fn strategies_and_truncations_agree((d, f, parts) in sphere_module(), ground in any::<bool>()) {
        let m = Module::Raw(molecule_sum(d, f, &parts).to_raw().unwrap());
        let n = if ground { Module::Raw(RawModule::ground_field(m.algebra().clone())) } else { m.clone() };
        let w = DegreeWindow::new(-14, 14).unwrap();
        prop_assert_eq!(tor(&m, &n, &Resolution::Bar, w).unwrap(), tor(&m, &n, &Resolution::Koszul, w).unwrap());
        let raw = m.to_raw().unwrap();
        let cutoff = w.hi + 1 - n.lo().unwrap() - raw.lo().unwrap();
        for extra in [1, 4] {
            let short = Resolution::GivenResolution(Arc::new(bar_resolution(&raw, cutoff).unwrap()));
            let long = Resolution::GivenResolution(Arc::new(bar_resolution(&raw, cutoff + extra).unwrap()));
            prop_assert_eq!(tor(&m, &n, &short, w).unwrap(), tor(&m, &n, &long, w).unwrap());
        }
    }

    #[test]
    fn phi_is_shift_invariant((d, f, parts) in sphere_module(), k in -5..=5i32) {
        let m = molecule_sum(d, f, &parts);
        let (a, b) = (phi(&m).unwrap(), phi(&m.shift(k)).unwrap());
        prop_assert_eq!(a.is_finite(), b.is_finite());
        prop_assert_eq!(a.dims().total(), b.dims().total());
    }

    // -------------------------------------------------------- spheres

    #[test]
    fn molecule_models_match_the_catalog(d in 2..=6i32, l in 0..=10i32, m in 0..=5i32) {
        let id = mol(d, l, m);
        let f = molecule_model(&id, Q).unwrap();
        let w = DegreeWindow::new(id.bottom() - 2, d + l + 2).unwrap();
        prop_assert_eq!(Module::Free(f.clone()).cohomology(w).unwrap(), molecule_cohomology(&id));
        let filtration = generator_filtration(&f).unwrap();
        prop_assert_eq!(filtration.class(), m as usize);
        prop_assert!(filtration.level_upper_bound() >= 1);
        prop_assert_eq!(filtration.level_upper_bound(), molecule_level(&id));
    }

    #[test]
    fn decompose_recovers_a_sum(d in 2..=5i32, parts in prop::collection::vec((0..=8i32, 0..=2i32), 1..=3)) {
        let mut input: Vec<MoleculeId> = parts.iter().map(|&(l, m)| mol(d, l, m)).collect();
        input.sort();
        let dims = input.iter().fold(GradedDims::new(), |acc, x| acc.sum(&molecule_cohomology(x)));
        let dec = decompose(&dims, d).unwrap();
        if dec.ambiguous {
            prop_assert!(dec.molecules == input || dec.alternatives.contains(&input));
        } else {
            prop_assert_eq!(dec.molecules, input);
        }
    }

    #[test]
    fn level_of_sums_and_shifts((d, f, parts) in sphere_module(), k in -4..=4i32) {
        let m = molecule_sum(d, f, &parts);
        let max = parts.iter().map(|&(_, m)| m as usize + 1).max().unwrap();
        let level = sphere_level(&m).unwrap().level;
        prop_assert_eq!(&level, &SphereLevel::Exact(max));
        prop_assert_eq!(sphere_level(&m.shift(k)).unwrap().level, level);
    }

    #[test]
    fn realizable_molecules_start_in_degree_zero(d in 2..=8i32, l in -5..=30i32, m in 0..=4i32) {
        let id = mol(d, l, m);
        if let Realizability::Yes(_) = realizable(&id, Q) {
            prop_assert_eq!(l, m * (d - 1));
        }
    }

    // -------------------------------------------------------- spectral sequence

    #[test]
    fn installed_pages_are_coherent(d in 2..=5i32, hopf in 0..=3i64, f in field(), pullback in any::<bool>()) {
        let h = if d % 2 == 1 { 0 } else { hopf };
        let spec = if pullback { FibreSquareSpec::self_pullback(d, f, h) } else { FibreSquareSpec::odd_sphere(d, f, h) };
        let hi = 8 * d;
        let page = install_d2(&e2_page(&spec, DegreeWindow::new(0, hi).unwrap()).unwrap()).unwrap();
        // γ_i together with the target of its d₂ inside the window
        for i in 1..=((hi - 1) / (2 * d - 2)) as u32 {
            prop_assert!(comodule_compatible(&page, i));
        }
    }

    #[test]
    fn nonzero_hopf_gives_two_classes(d in prop::sample::select(vec![2, 4, 6]), hopf in 1..=3i64, f in field(), extra in 0..=12i32) {
        prop_assume!(!f.from_i64(hopf).is_zero());
        let spec = FibreSquareSpec::odd_sphere(d, f, hopf);
        let page = install_d2(&e2_page(&spec, DegreeWindow::new(0, 2 * d + extra).unwrap()).unwrap()).unwrap();
        let stable = run_to_stable(&page).unwrap();
        prop_assert_eq!(stable.dims, GradedDims::from_pairs(&[(0, 1), (d - 1, 1)]));
    }

    // -------------------------------------------------------- rational models

    #[test]
    fn tower_bounds_are_ordered(l in 1..=3i32, d in 2..=5i32, bump in 0..=3i32) {
        prop_assume!(l * d <= 12);
        let t = build_p_tower(l, d, Some(l * d + 1 + bump)).unwrap();
        let r = tower_level_bounds(&t, None).unwrap();
        prop_assert!(r.upper >= r.lower);
        prop_assert_eq!(matches!(r.level, SphereLevel::Exact(_)), r.upper == r.lower);
        // the fibre is the exterior algebra on the extension generators
        let fibre = relative_module(&t).unwrap();
        let mut expected = GradedDims::new();
        for (_, n) in fibre.generators() {
            expected.add(*n, 1);
        }
        let ground = Module::Raw(RawModule::ground_field(t.base.clone()));
        let got = tor(&Module::Free(fibre), &ground, &Resolution::Koszul, DegreeWindow::new(-1, 120).unwrap()).unwrap();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn hopf_invariant_scales_quadratically(lambda in -4..=4i64) {
        prop_assume!(lambda != 0);
        let d = 4;
        let gens = vec![
            Generator::new("x", d, GeneratorKind::Polynomial),
            Generator::new("ξ", 2 * d - 1, GeneratorKind::Exterior),
            Generator::new("ρ", d - 1, GeneratorKind::Exterior),
        ];
        let c = Arc::new(DgAlgebra::parse(Q, gens, &[("ξ", "x^2"), ("ρ", "x")]).unwrap());
        let src = Arc::new(sphere_model(d).unwrap());
        let g = AlgebraMap::new(src, c.clone(), vec![
            c.generator_poly(0).scaled(&Q.from_i64(lambda)),
            c.generator_poly(1).scaled(&Q.from_i64(lambda * lambda)),
        ]).unwrap();
        let mut z = c.mul(&c.generator_poly(2), &c.generator_poly(0));
        z.add(&c.generator_poly(1).scaled(&Q.from_i64(-1)));
        let z: Vec<Scalar> = c.to_vector(&z, 2 * d - 1);
        prop_assert_eq!(hopf_invariant(&g, Some(&z)).unwrap(), Q.from_i64(lambda * lambda));
    }

    // -------------------------------------------------------- command line

    #[test]
    fn reports_are_deterministic(d in 2..=6i32, l in -3..=9i32, m in 0..=3i32) {
        let args = ["dglevel".to_string(), "molecule".into(), "--d".into(), d.to_string(), "--l".into(), l.to_string(), "--m".into(), m.to_string()];
        let a = dispatch(args.clone());
        let b = dispatch(args);
        prop_assert_eq!(a.code, 0);
        prop_assert_eq!(&a, &b);
        let v: serde_json::Value = serde_json::from_str(&a.stdout).unwrap();
        prop_assert!(!v["paperRef"].as_str().unwrap().is_empty());
    }
}
