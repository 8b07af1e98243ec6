//! The ten acceptance criteria, each printed as one PASS/FAIL line.
//!
//! Two criteria cannot be met as stated. Their checks are run exactly as
//! written and reported as FAIL; the test asserts that these two, and only
//! these two, fail:
//!
//! * 2: the expected molecule lists miss the product class. `X₁` is a closed
//!   18-manifold, so `H*(X₁; 𝔽₂)` must contain degree 18; the computed
//!   decomposition has a fourth molecule `Σ^{-14}Z_1` (and `Σ^{-15}Z_1` for
//!   `SU(4)`). The level, 2, is as expected.
//! * 7: for `l = 3, d = 4` the cohomology `{0, 7, 25, 38, 56, 63}` admits no
//!   pairing into molecules of height below 3, so the level is at least 4,
//!   and a filtration of class 3 shows it is exactly 4.

use std::cell::Cell;
use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dglevel::algebra::DgAlgebra;
use dglevel::emss::{self, FibreSquareSpec};
use dglevel::field::FieldTag;
use dglevel::graded::{DegreeWindow, GradedDims};
use dglevel::linalg::{rank_and_kernel, Span};
use dglevel::module::{direct_sum, ChainMap, FreeModule, Module, RawModule};
use dglevel::rational::{build_p_tower, tower_level_bounds};
use dglevel::resolve::{bar_resolution, derived_tensor_verdict, tor, FinitenessVerdict, Strategy};
use dglevel::spheres::{
    bundle_level, classifying_map, free_basis, free_pullback_level, molecule_cohomology, molecule_level, molecule_model,
    realizable, sphere_level, sphere_level_from_dims, Formalizability, MoleculeId, Realizability, SphereLevel,
};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const Q: FieldTag = FieldTag::Rationals;
const F2: FieldTag = FieldTag::Prime(2);
const F3: FieldTag = FieldTag::Prime(3);

type Check = std::result::Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dims(s: &str) -> GradedDims {
    s.parse().expect("dims literal")
}

fn mol(d: i32, l: i32, m: i32) -> MoleculeId {
    MoleculeId::new(d, l, m).expect("molecule")
}

fn sorted(v: &[MoleculeId]) -> Vec<MoleculeId> {
    let mut v = v.to_vec();
    v.sort();
    v
}

// ------------------------------------------------------------ criterion 1

fn molecule_catalog() -> Check {
    for d in 2..=6 {
        for l in 0..=10 {
            for m in 0..=5 {
                let id = mol(d, l, m);
                let expected = GradedDims::from_pairs(&[(l - m * (d - 1), 1), (d + l, 1)]);
                let got = molecule_cohomology(&id);
                ensure(got == expected, || format!("{id} over S^{d}: {got} != {expected}"))?;
                ensure(molecule_level(&id) == (m + 1) as usize, || format!("level of {id} is {}", molecule_level(&id)))?;
            }
        }
    }
    // the closed form against the cohomology of the actual models
    for d in 2..=4 {
        for l in 0..=4 {
            for m in 0..=3 {
                let id = mol(d, l, m);
                let model = Module::Free(molecule_model(&id, Q).map_err(|e| e.to_string())?);
                let w = DegreeWindow::new(id.bottom() - 2, d + l + 2).unwrap();
                let h = model.cohomology(w).map_err(|e| e.to_string())?;
                ensure(h == molecule_cohomology(&id), || format!("model of {id}: {h}"))?;
            }
        }
    }
    Ok(())
}

// ------------------------------------------------------------ criterion 2

fn bundle_examples() -> Check {
    let cases = [
        ("G2", [4, 6, 7], [mol(4, 3, 1), mol(4, 8, 1), mol(4, 9, 1)], [0, 2, 0]),
        ("SU(4)", [4, 6, 8], [mol(4, 3, 1), mol(4, 8, 1), mol(4, 10, 1)], [0, 2, 1]),
    ];
    let mut problems = Vec::new();
    for (name, gens, expected, components) in cases {
        let r = bundle_level(&gens, true, F2, Some(Formalizability::CondII)).map_err(|e| format!("{name}: {e}"))?;
        let got: Vec<String> = r.molecules.iter().map(ToString::to_string).collect();
        let got_components: Vec<i32> = r.molecules.iter().map(MoleculeId::component_index).collect();
        if r.level != 2 {
            problems.push(format!("{name}: level {}", r.level));
        }
        if r.molecules != sorted(&expected) || got_components != components {
            problems.push(format!("{name}: computed {got:?} with components {got_components:?}"));
        }
    }
    ensure(problems.is_empty(), || problems.join("; "))
}

// ------------------------------------------------------------ criterion 3

fn bundle_branches() -> Check {
    for (gens, field) in [(&[4, 6, 7][..], F2), (&[4, 6, 8][..], F2), (&[4, 6, 8][..], Q), (&[4, 8][..], Q), (&[4][..], F3)] {
        for f4 in [true, false] {
            let r = bundle_level(gens, f4, field, Some(Formalizability::CondII)).map_err(|e| format!("{gens:?} {f4}: {e}"))?;
            let from_molecules = r.molecules.iter().map(|x| x.m as usize + 1).max().unwrap_or(0);
            let expected = if f4 { 2 } else { 1 };
            ensure(r.level == expected && from_molecules == expected, || {
                format!("{gens:?} over {field}, f4 {f4}: level {} from {:?}", r.level, r.molecules)
            })?;
        }
    }
    let map = classifying_map(&[4, 6], Q, true).map_err(|e| e.to_string())?;
    let basis = free_basis(map.source.clone(), &[0, 2, 6]).map_err(|e| e.to_string())?;
    let (level, ms) = free_pullback_level(&basis, &map).map_err(|e| e.to_string())?;
    ensure(level == 1 && ms.iter().all(|x| x.m == 0), || format!("free pullback: level {level} from {ms:?}"))
}

// ------------------------------------------------------------ criterion 4

fn s7_infinite_level() -> Check {
    let s4 = Arc::new(DgAlgebra::sphere_cohomology(4, Q));
    let s7 = Module::Raw(RawModule::trivial_from_dims(s4, &dims("0:1,7:1"), "s").unwrap());
    let (_, verdict) = derived_tensor_verdict(&s7, &s7).map_err(|e| e.to_string())?;
    match &verdict {
        FinitenessVerdict::InfiniteCertified { witness, .. } if witness.len() >= 3 => {}
        other => return Err(format!("verdict {}", other.to_json())),
    }
    let r = sphere_level(&s7).map_err(|e| e.to_string())?;
    ensure(matches!(r.level, SphereLevel::Infinite(_)), || format!("level {}", r.level.to_json()))
}

// ------------------------------------------------------------ criterion 5

fn non_formal_example() -> Check {
    let run = emss::run(&FibreSquareSpec::self_pullback(4, Q, 1)).map_err(|e| e.to_string())?;
    ensure(run.dims == dims("0:1,3:1,7:1,10:1"), || format!("E3 total dims {}", run.dims))?;
    let r = sphere_level_from_dims(&run.dims, 7).map_err(|e| e.to_string())?;
    ensure(r.level == SphereLevel::Exact(1), || format!("level {}", r.level.to_json()))
}

// ------------------------------------------------------------ criterion 6

fn hopf_compactness() -> Check {
    for field in [Q, F2, F3] {
        for h in 0..=2 {
            let p = field.characteristic() as i64;
            let nonzero = if p == 0 { h != 0 } else { h % p != 0 };
            let got = emss::compactness_from_hopf(4, h, field).map_err(|e| e.to_string())?;
            ensure(got == nonzero, || format!("h = {h} over {field}: {got}"))?;
            let run = emss::run(&FibreSquareSpec::odd_sphere(4, field, h)).map_err(|e| e.to_string())?;
            ensure(run.verdict.is_finite() == nonzero, || format!("h = {h} over {field}: {}", run.verdict.to_json()))?;
            if nonzero {
                ensure(run.dims == dims("0:1,3:1"), || format!("h = {h} over {field}: E∞ {}", run.dims))?;
            }
        }
    }
    Ok(())
}

// ------------------------------------------------------------ criterion 7

fn tower_levels() -> Check {
    let mut problems = Vec::new();
    for d in [3, 4] {
        for l in 1..=3 {
            let t = build_p_tower(l, d, None).map_err(|e| e.to_string())?;
            let r = tower_level_bounds(&t, None).map_err(|e| e.to_string())?;
            if r.level != SphereLevel::Exact(l as usize) || r.upper != r.lower {
                problems.push(format!(
                    "l = {l}, d = {d}: lower {} upper {} (pile filtration: {})",
                    r.lower,
                    r.upper,
                    r.pile_bound.clone().map_or_else(|e| e, |b| b.to_string())
                ));
            }
        }
    }
    ensure(problems.is_empty(), || problems.join("; "))
}

// ------------------------------------------------------------ criterion 8

fn molecule_sum(d: i32, field: FieldTag, parts: &[(i32, i32)]) -> Module {
    let a = Arc::new(DgAlgebra::sphere_cohomology(d, field));
    let ms: Vec<Module> = parts.iter().map(|&(l, m)| Module::Free(molecule_model(&mol(d, l, m), field).unwrap())).collect();
    direct_sum(a, &ms).unwrap()
}

fn bar_matches_koszul() -> Check {
    let strategy = (
        2..=4i32,
        prop_oneof![Just(Q), Just(F2)],
        prop::collection::vec((-2..=6i32, 0..=2i32), 1..=2),
        any::<bool>(),
    );
    let config = Config { cases: 20, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let seen = Cell::new(0);
    runner
        .run(&strategy, |(d, field, parts, ground)| {
            seen.set(seen.get() + 1);
            let m = Module::Raw(molecule_sum(d, field, &parts).to_raw().unwrap());
            let a = m.algebra().clone();
            let n = if ground { Module::Raw(RawModule::ground_field(a)) } else { m.clone() };
            let w = DegreeWindow::new(-16, 16).unwrap();
            let bar = tor(&m, &n, &Strategy::Bar, w).unwrap();
            let koszul = tor(&m, &n, &Strategy::Koszul, w).unwrap();
            prop_assert_eq!(&bar, &koszul, "d = {}, {:?}", d, parts);
            // a longer bar truncation changes nothing in the window
            let raw = m.to_raw().unwrap();
            let cutoff = w.hi + 1 - n.lo().unwrap() - raw.lo().unwrap();
            let short = Strategy::GivenResolution(Arc::new(bar_resolution(&raw, cutoff).unwrap()));
            let long = Strategy::GivenResolution(Arc::new(bar_resolution(&raw, cutoff + 4).unwrap()));
            prop_assert_eq!(tor(&m, &n, &short, w).unwrap(), tor(&m, &n, &long, w).unwrap());
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    ensure(seen.get() >= 20, || format!("only {} inputs ran", seen.get()))
}

// ------------------------------------------------------------ criterion 9

/// `dim H^n(cone f) = dim coker H^n(f) + dim ker H^{n+1}(f)`.
fn les_count(f: &ChainMap, w: DegreeWindow) -> Check {
    let (m, n) = (f.source(), f.target());
    let hm = m.cohomology(w).map_err(|e| e.to_string())?;
    let hn = n.cohomology(w).map_err(|e| e.to_string())?;
    let rank_h = |k: i32| -> usize {
        let (_, cycles) = rank_and_kernel(&m.d_matrix(k)).unwrap();
        let boundaries = n.d_matrix(k - 1);
        let mut span = Span::new(n.field(), n.dim(k));
        for j in 0..boundaries.cols() {
            span.insert(&boundaries.column(j));
        }
        let base = span.dim();
        for z in &cycles {
            span.insert(&f.matrix(k).apply(z));
        }
        span.dim() - base
    };
    let cone = f.cone().map_err(|e| e.to_string())?;
    let inner = DegreeWindow::new(w.lo + 1, w.hi - 1).unwrap();
    let hc = cone.cohomology(inner).map_err(|e| e.to_string())?;
    for k in inner.degrees() {
        let expected = hn.get(k) - rank_h(k) + hm.get(k + 1) - rank_h(k + 1);
        ensure(hc.get(k) == expected, || format!("H^{k}(cone) = {}, expected {expected}", hc.get(k)))?;
    }
    Ok(())
}

fn squares_to_zero(name: &str, d: impl Fn(i32) -> dglevel::linalg::Matrix, w: DegreeWindow) -> Check {
    for k in w.degrees() {
        let (a, b) = (d(k), d(k + 1));
        if a.rows() == 0 || b.cols() == 0 {
            continue;
        }
        let sq = b.mul(&a).map_err(|e| e.to_string())?;
        ensure(sq.is_zero(), || format!("{name}: d² ≠ 0 in degree {k}"))?;
    }
    Ok(())
}

fn invariants() -> Check {
    let w = DegreeWindow::new(-20, 30).unwrap();
    for d in [2, 3, 4] {
        let a = Arc::new(DgAlgebra::sphere_cohomology(d, Q));
        for (x, y) in [((0, 0), (2, 1)), ((1, 2), (3, 0)), ((0, 1), (5, 1))] {
            let sum = molecule_sum(d, Q, &[x, y]);
            let level = sphere_level(&sum).map_err(|e| e.to_string())?.level;
            let max = (x.1.max(y.1) + 1) as usize;
            ensure(level == SphereLevel::Exact(max), || format!("level of {x:?} ⊕ {y:?} over S^{d}: {}", level.to_json()))?;
            for k in [-3, 1, 4] {
                let shifted = sphere_level(&sum.shift(k)).map_err(|e| e.to_string())?.level;
                ensure(shifted == level, || format!("Σ^{k} changes the level over S^{d}"))?;
            }
        }
        // cones of maps out of free rank-one modules hitting each cocycle
        let target = molecule_sum(d, Q, &[(0, 1), (2, 0)]);
        let h = target.cohomology(w).map_err(|e| e.to_string())?;
        for (k, _) in h.iter() {
            let (_, cycles) = rank_and_kernel(&target.d_matrix(k)).unwrap();
            for z in cycles.into_iter().take(2) {
                let source = FreeModule::algebra_module(a.clone()).shift(-k);
                les_count(&ChainMap::from_generators(source, target.clone(), vec![z]).map_err(|e| e.to_string())?, w)?;
            }
        }
        let free = molecule_model(&mol(d, 1, 2), Q).map_err(|e| e.to_string())?;
        let identity = (0..free.generators().len()).map(|j| free.generator_vector(j)).collect();
        les_count(&ChainMap::from_generators(free.clone(), Module::Free(free), identity).map_err(|e| e.to_string())?, w)?;
    }
    // d² = 0 for every constructor
    let small = DegreeWindow::new(-10, 40).unwrap();
    for d in 2..=5 {
        let sphere = DgAlgebra::sphere_cohomology(d, F2);
        squares_to_zero("sphere", |k| sphere.differential_matrix(k), small)?;
        let model = dglevel::rational::sphere_model(d).map_err(|e| e.to_string())?;
        squares_to_zero("sphere model", |k| model.differential_matrix(k), small)?;
    }
    let poly = DgAlgebra::polynomial(F3, &[2, 4], "y").map_err(|e| e.to_string())?;
    squares_to_zero("polynomial", |k| poly.differential_matrix(k), small)?;
    for (l, d) in [(2, 3), (2, 4), (3, 4)] {
        let t = build_p_tower(l, d, None).map_err(|e| e.to_string())?;
        squares_to_zero("tower", |k| t.total.differential_matrix(k), DegreeWindow::new(0, 40).unwrap())?;
    }
    for id in [mol(3, 2, 3), mol(4, 0, 2), mol(2, 5, 4)] {
        let f = Module::Free(molecule_model(&id, F2).map_err(|e| e.to_string())?);
        squares_to_zero("molecule model", |k| f.d_matrix(k), small)?;
        let raw = f.to_raw().map_err(|e| e.to_string())?;
        // a truncated resolution is a complex below the degree it is complete to
        for (name, f) in [
            ("bar resolution", bar_resolution(&raw, 12)),
            ("koszul resolution", dglevel::resolve::koszul_resolution(&raw, 12)),
        ] {
            let f = f.map_err(|e| e.to_string())?;
            let hi = f.complete_to().map_or(40, |c| c - 2);
            let f = Module::Free(f);
            squares_to_zero(name, |k| f.d_matrix(k), DegreeWindow::new(-20, hi).unwrap())?;
        }
    }
    // every catalog model is indecomposable
    for d in 2..=6 {
        for l in 0..=10 {
            for m in 0..=5 {
                molecule_model(&mol(d, l, m), Q).map_err(|e| format!("{}: {e}", mol(d, l, m)))?;
            }
        }
    }
    Ok(())
}

// ------------------------------------------------------------ criterion 10

fn realization_predicate() -> Check {
    for d in 2..=8 {
        for m in 0..=4 {
            for l in -4..=4 * (d - 1) + 4 {
                let id = mol(d, l, m);
                let yes = matches!(realizable(&id, Q), Realizability::Yes(_));
                let expected = (l == 0 && m == 0) || (l == d - 1 && m == 1 && d % 2 == 0);
                ensure(yes == expected, || format!("{id} over S^{d}: {:?}", realizable(&id, Q)))?;
                ensure(realizable(&id, F2) == Realizability::CharacteristicTwoUnsupported, || format!("{id} over 𝔽₂"))?;
            }
        }
    }
    Ok(())
}

// ------------------------------------------------------------ harness

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    check: fn() -> Check,
}

/// Criteria whose statement contradicts an exact computation; see the
/// module documentation.
const UNATTAINABLE: [u8; 2] = [2, 7];

#[test]
fn acceptance_criteria() {
    let criteria = [
        Criterion { id: 1, name: "molecule catalog", budget: Duration::from_secs(1), check: molecule_catalog },
        Criterion { id: 2, name: "bundle decompositions over 𝔽₂", budget: Duration::from_secs(5), check: bundle_examples },
        Criterion { id: 3, name: "bundle level branches and free pullbacks", budget: Duration::from_secs(5), check: bundle_branches },
        Criterion { id: 4, name: "infinite level of H*(S⁷) over S⁴", budget: Duration::from_secs(5), check: s7_infinite_level },
        Criterion { id: 5, name: "non-formal spectral sequence", budget: Duration::from_secs(5), check: non_formal_example },
        Criterion { id: 6, name: "compactness from the Hopf invariant", budget: Duration::from_secs(5), check: hopf_compactness },
        Criterion { id: 7, name: "tower levels", budget: Duration::from_secs(30), check: tower_levels },
        Criterion { id: 8, name: "bar and Koszul Tor agree", budget: Duration::from_secs(30), check: bar_matches_koszul },
        Criterion { id: 9, name: "invariant suite", budget: Duration::from_secs(30), check: invariants },
        Criterion { id: 10, name: "realization predicate", budget: Duration::from_secs(1), check: realization_predicate },
    ];
    let mut failed = BTreeSet::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            ensure(elapsed < c.budget, || format!("took {:.2} s, budget {} s", elapsed.as_secs_f64(), c.budget.as_secs()))
        });
        match outcome {
            Ok(()) => println!("PASS criterion {:>2} {} ({:.3} s)", c.id, c.name, elapsed.as_secs_f64()),
            Err(why) => {
                println!("FAIL criterion {:>2} {} ({:.3} s): {why}", c.id, c.name, elapsed.as_secs_f64());
                failed.insert(c.id);
            }
        }
    }
    assert_eq!(failed, UNATTAINABLE.into_iter().collect::<BTreeSet<_>>(), "unexpected set of failing criteria");
}
