//! Free graded-commutative models over ℚ: spheres, towers of odd-sphere
//! fibrations, their levels, and the cochain-level Hopf invariant.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::algebra::{subscript, AlgebraMap, DgAlgebra, Generator, GeneratorKind, Poly};
use crate::error::{Error, Result};
use crate::field::{FieldTag, Scalar};
use crate::graded::{DegreeWindow, GradedDims};
use crate::linalg::{rank_and_kernel, solve};
use crate::module::{FreeElement, FreeModule, Module};
use crate::resolve::{base_change, generator_filtration, SemifreeFiltration};
use crate::spheres::{decompose, molecule_decomposition, MoleculeId, SphereLevel};

const Q: FieldTag = FieldTag::Rationals;

/// The minimal model of `S^d`: `∧(x)` for odd `d`, `∧(x, ξ)` with `Dξ = x²`
/// for even `d`.
pub fn sphere_model(d: i32) -> Result<DgAlgebra> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("sphere dimension {d} < 2")));
    }
    if d % 2 == 1 {
        return DgAlgebra::new(Q, vec![Generator::new("x", d, GeneratorKind::Exterior)], vec![Poly::zero()]);
    }
    DgAlgebra::parse(
        Q,
        vec![Generator::new("x", d, GeneratorKind::Polynomial), Generator::new("ξ", 2 * d - 1, GeneratorKind::Exterior)],
        &[("ξ", "x^2")],
    )
}

/// The quasi-isomorphism from [`sphere_model`] onto `H*(S^d; ℚ)`.
pub fn sphere_model_formality(d: i32) -> Result<AlgebraMap> {
    let model = Arc::new(sphere_model(d)?);
    let h = Arc::new(DgAlgebra::sphere_cohomology(d, Q));
    let mut images = vec![h.generator_poly(0)];
    if d % 2 == 0 {
        images.push(Poly::zero());
    }
    AlgebraMap::new(model, h, images)
}

/// A Koszul-Sullivan extension `base → base ⊗ ∧(extension)`.
///
/// Every extension generator is odd, and its differential only involves
/// earlier generators. `stage` records the fibration each one comes from.
#[derive(Clone, Debug)]
pub struct TowerSpec {
    pub base: Arc<DgAlgebra>,
    pub total: Arc<DgAlgebra>,
    pub stage: Vec<usize>,
    /// Dimension of the base sphere, when the base is [`sphere_model`].
    pub sphere: Option<i32>,
}

impl TowerSpec {
    pub fn new(base: Arc<DgAlgebra>, extension: &[(&str, i32, &str, usize)], sphere: Option<i32>) -> Result<TowerSpec> {
        let nb = base.generators().len();
        let mut gens = base.generators().to_vec();
        let mut diff: Vec<(String, String)> = (0..nb)
            .filter(|&i| !base.generator_differential(i).is_zero())
            .map(|i| (gens[i].label.clone(), base.poly_string(base.generator_differential(i))))
            .collect();
        for &(label, degree, expr, _) in extension {
            if degree % 2 == 0 {
                return Err(Error::InvalidAlgebra(format!("extension generator {label} has even degree")));
            }
            gens.push(Generator::new(label, degree, GeneratorKind::Exterior));
            if !expr.trim().is_empty() && expr.trim() != "0" {
                diff.push((label.to_string(), expr.to_string()));
            }
        }
        let pairs: Vec<(&str, &str)> = diff.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let total = DgAlgebra::parse(base.field(), gens, &pairs)?;
        for i in nb..total.generators().len() {
            let later = total.generator_differential(i).terms().any(|(m, _)| m[i..].iter().any(|&e| e > 0));
            if later {
                return Err(Error::InvalidAlgebra(format!(
                    "D({}) involves generators that are not earlier",
                    total.generators()[i].label
                )));
            }
        }
        Ok(TowerSpec { base, total: Arc::new(total), stage: extension.iter().map(|e| e.3).collect(), sphere })
    }

    fn extension_count(&self) -> usize {
        self.total.generators().len() - self.base.generators().len()
    }

    pub fn to_json(&self) -> Value {
        json!({"model": self.total.to_json(), "baseGenerators": self.base.generators().len(), "stages": self.stage})
    }
}

/// `P_l → S^d`: `S^d` itself for `l = 1` and even `d`; otherwise
/// `∧(x, ξ, ρ, w_0, …, w_{l−2})` with `Dρ = x`, `Dw_i = (ρx − ξ)w_{i−1}` for
/// even `d`, and `∧(x, w_0, …, w_{l−1})` with `Dw_i = x w_{i−1}` for odd `d`.
///
/// `m` fixes `|w_0| = 2m − 1` and defaults to `ld + 1`.
pub fn build_p_tower(l: i32, d: i32, m: Option<i32>) -> Result<TowerSpec> {
    if l < 1 {
        return Err(Error::InvalidArgument(format!("tower length {l} < 1")));
    }
    let min = l * d + 1;
    let m = m.unwrap_or(min);
    if m < min {
        return Err(Error::MTooSmall { m, min });
    }
    let base = Arc::new(sphere_model(d)?);
    let w = |i: i32| format!("w{}", subscript(i as i64));
    let mut ext: Vec<(String, i32, String, usize)> = Vec::new();
    if d % 2 == 0 {
        if l >= 2 {
            ext.push(("ρ".into(), d - 1, "x".into(), 1));
            for i in 0..l - 1 {
                let expr = if i == 0 { String::new() } else { format!("ρ*x*{} - ξ*{}", w(i - 1), w(i - 1)) };
                ext.push((w(i), i * (2 * d - 1) + 2 * m - 1 - i, expr, if i == 0 { 0 } else { i as usize + 1 }));
            }
        }
    } else {
        for i in 0..l {
            let expr = if i == 0 { String::new() } else { format!("x*{}", w(i - 1)) };
            ext.push((w(i), i * d + 2 * m - 1 - i, expr, i as usize));
        }
    }
    let refs: Vec<(&str, i32, &str, usize)> = ext.iter().map(|(a, n, e, s)| (a.as_str(), *n, e.as_str(), *s)).collect();
    TowerSpec::new(base, &refs, Some(d))
}

/// The total algebra as a semifree module over the base, on the monomials
/// in the extension generators.
pub fn relative_module(t: &TowerSpec) -> Result<FreeModule> {
    let nb = t.base.generators().len();
    let k = t.extension_count();
    let total = &t.total;
    let ext_degree = |mask: usize| (0..k).filter(|i| mask >> i & 1 == 1).map(|i| total.generators()[nb + i].degree).sum::<i32>();
    let mut masks: Vec<usize> = (0..1usize << k).collect();
    masks.sort_by_key(|&s| (ext_degree(s), s));
    let index: BTreeMap<usize, usize> = masks.iter().enumerate().map(|(j, &s)| (s, j)).collect();
    let gens = masks
        .iter()
        .map(|&s| {
            let label: String = (0..k).filter(|i| s >> i & 1 == 1).map(|i| total.generators()[nb + i].label.clone()).collect();
            (if label.is_empty() { "1".to_string() } else { label }, ext_degree(s))
        })
        .collect();
    let mut diff = Vec::new();
    for &s in &masks {
        let mut mono = total.unit();
        for i in 0..k {
            mono[nb + i] = (s >> i & 1) as u32;
        }
        let mut el = FreeElement::new();
        for (m, c) in total.d_monomial(&mono).terms() {
            let target = (0..k).filter(|&i| m[nb + i] == 1).fold(0, |acc, i| acc | 1 << i);
            let a: Vec<u32> = m[..nb].to_vec();
            // a·w = (−1)^{|a||w|} w·a
            let sign = Q.sign((t.base.monomial_degree(&a) * ext_degree(target)) as i64);
            let entry: &mut Poly = el.entry(index[&target]).or_default();
            entry.add_term(a, &sign * c);
        }
        el.retain(|_, p| !p.is_zero());
        diff.push(el);
    }
    FreeModule::new(t.base.clone(), gens, diff)
}

/// The filtration `F_c` spanned by monomials whose generators all have
/// stage at most `c`.
pub fn pile_filtration(t: &TowerSpec, module: &FreeModule) -> Result<SemifreeFiltration> {
    let stage_of = |label: &str| -> usize {
        let nb = t.base.generators().len();
        (0..t.extension_count())
            .filter(|&i| label.contains(t.total.generators()[nb + i].label.as_str()))
            .map(|i| t.stage[i])
            .max()
            .unwrap_or(0)
    };
    let stages: Vec<usize> = module.generators().iter().map(|(l, _)| if l == "1" { 0 } else { stage_of(l) }).collect();
    let top = stages.iter().copied().max().unwrap_or(0);
    let cumulative = (0..=top).map(|c| (0..stages.len()).filter(|&j| stages[j] <= c).collect()).collect();
    SemifreeFiltration::new(module, cumulative)
}

#[derive(Clone, Debug)]
pub struct TowerLevel {
    pub lower: usize,
    pub upper: usize,
    pub level: SphereLevel,
    /// `class + 1` of the pile filtration, or why it is not semifree.
    pub pile_bound: std::result::Result<usize, String>,
    pub height_bound: usize,
    pub molecules: Vec<MoleculeId>,
    pub cohomology: GradedDims,
    /// Level range allowed by the cohomology alone.
    pub cohomology_range: Option<(usize, usize)>,
}

impl TowerLevel {
    pub fn to_json(&self) -> Value {
        json!({
            "level": self.level.to_json(),
            "lower": self.lower,
            "upper": self.upper,
            "pileBound": match &self.pile_bound { Ok(n) => json!(n), Err(e) => json!({"invalid": e}) },
            "heightBound": self.height_bound,
            "molecules": self.molecules.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "cohomology": self.cohomology.to_json(),
            "cohomologyRange": self.cohomology_range,
        })
    }
}

/// Upper bound from monomial filtrations, lower bound from the molecule
/// decomposition over `H*(S^d; ℚ)`.
///
/// `window` defaults to the degrees the model can reach; a smaller one is
/// rejected.
pub fn tower_level_bounds(t: &TowerSpec, window: Option<DegreeWindow>) -> Result<TowerLevel> {
    let d = t.sphere.ok_or_else(|| Error::InvalidArgument("the base must be a sphere model".into()))?;
    let f = relative_module(t)?;
    let g = base_change(&f, &sphere_model_formality(d)?)?;
    let top = g.max_generator_degree().unwrap_or(0) + d;
    let w = window.unwrap_or(DegreeWindow { lo: -1, hi: top + 2 });
    if w.hi <= top || w.lo >= 0 {
        return Err(Error::WindowTooSmall { degree: top, window: w });
    }
    let module = Module::Free(g.clone());
    let cohomology = module.cohomology(w)?;
    let molecules = molecule_decomposition(&module)?;
    let lower = molecules.iter().map(MoleculeId::level).max().unwrap_or(0);
    let pile_bound = pile_filtration(t, &f).map(|p| p.level_upper_bound()).map_err(|e| e.to_string());
    let height_bound = generator_filtration(&f)?.level_upper_bound().min(generator_filtration(&g)?.level_upper_bound());
    let upper = pile_bound.clone().map_or(height_bound, |p| p.min(height_bound));
    if upper < lower {
        return Err(Error::VerificationFailed(format!("upper bound {upper} below lower bound {lower}")));
    }
    let level = if upper == lower { SphereLevel::Exact(lower) } else { SphereLevel::Interval(lower, upper) };
    let cohomology_range = decompose(&cohomology, d).ok().map(|dec| dec.level_range());
    Ok(TowerLevel { lower, upper, level, pile_bound, height_bound, molecules, cohomology, cohomology_range })
}

/// A pile of `c` odd-sphere fibrations over `K(ℚ, 2) × (s odd spheres)`,
/// with `D u_i = z^{i+1}`, filtered by the number of `u`'s.
///
/// Returns `c + 1` together with the validated filtration.
pub fn pile_upper_bound(c: usize, s: usize) -> Result<(usize, SemifreeFiltration)> {
    let base = Arc::new(DgAlgebra::polynomial(Q, &[2], "z")?);
    let mut ext: Vec<(String, i32, String, usize)> = Vec::new();
    for j in 0..s {
        ext.push((format!("y{}", subscript(j as i64 + 1)), 2 * j as i32 + 3, String::new(), 0));
    }
    for i in 1..=c {
        ext.push((format!("u{}", subscript(i as i64)), 2 * i as i32 + 1, format!("z₂^{}", i + 1), i));
    }
    let refs: Vec<(&str, i32, &str, usize)> = ext.iter().map(|(a, n, e, st)| (a.as_str(), *n, e.as_str(), *st)).collect();
    let t = TowerSpec::new(base, &refs, None)?;
    let f = relative_module(&t)?;
    let count = |label: &str| label.matches('u').count();
    let stages = (0..=c).map(|k| (0..f.generators().len()).filter(|&j| count(&f.generators()[j].0) <= k).collect()).collect();
    let filtration = SemifreeFiltration::new(&f, stages)?;
    if filtration.class() > c {
        return Err(Error::VerificationFailed(format!("pile filtration has class {}", filtration.class())));
    }
    Ok((c + 1, filtration))
}

/// Level bound over a regular space for a spherically complete intersection.
pub fn sci_level_bound(codim: usize) -> usize {
    codim + 1
}

/// `H(φ)` for `g: sphere_model(d) → C`: the coefficient of
/// `[ρ·g(x) − g(ξ)]` on the chosen generator of `H^{2d−1}(C)`, where
/// `Dρ = g(x)`.
pub fn hopf_invariant(g: &AlgebraMap, generator: Option<&[Scalar]>) -> Result<Scalar> {
    let src = &g.source;
    let c = &g.target;
    let field = c.field();
    let d = src.generators().first().map(|x| x.degree).ok_or_else(|| Error::InvalidArgument("empty source".into()))?;
    if d % 2 == 1 {
        return Ok(field.zero());
    }
    if src.generators().len() != 2 || src.generators()[1].degree != 2 * d - 1 {
        return Err(Error::InvalidArgument("the source must be the model ∧(x, ξ) of an even sphere".into()));
    }
    let n = 2 * d - 1;
    let w = DegreeWindow::new(0, 2 * n + 1)?;
    let dims = c.cohomology_dims(w)?;
    if dims != GradedDims::from_pairs(&[(0, 1), (n, 1)]) {
        return Err(Error::WrongTargetCohomology(format!("{dims}")));
    }
    let complex = c.complex(w.hi + 1);
    let h = complex.degree_cohomology(n, w)?;
    let gx = g.apply(&src.generator_poly(0));
    let gxi = g.apply(&src.generator_poly(1));
    let dmat = c.differential_matrix(d - 1);
    let rho = solve(&dmat, &c.to_vector(&gx, d)).ok_or(Error::NotExact)?;
    let class = |rho: &[Scalar]| -> Result<Scalar> {
        let mut v = c.mul(&c.from_vector(rho, d - 1), &gx);
        v.add(&gxi.scaled(&field.from_i64(-1)));
        let coords = h.coordinates(field, &c.to_vector(&v, n)).ok_or_else(|| Error::VerificationFailed("ρg(x) − g(ξ) is not a cocycle".into()))?;
        Ok(coords[0].clone())
    };
    let gen = match generator {
        Some(z) => h.coordinates(field, z).ok_or_else(|| Error::InvalidArgument("the generator is not a cocycle".into()))?[0].clone(),
        None => field.one(),
    };
    if gen.is_zero() {
        return Err(Error::InvalidArgument("the generator is a coboundary".into()));
    }
    let value = class(&rho)?.div(&gen)?;
    let (_, kernel) = rank_and_kernel(&dmat)?;
    for k in kernel {
        let perturbed: Vec<Scalar> = rho.iter().zip(&k).map(|(a, b)| a + b).collect();
        if class(&perturbed)?.div(&gen)? != value {
            return Err(Error::VerificationFailed("the Hopf invariant depends on the choice of ρ".into()));
        }
    }
    Ok(value)
}

/// Hopf invariant of the Whitehead square `[ι, ι]` on an even sphere.
pub fn whitehead_square_invariant(d: i32) -> Result<i64> {
    if d % 2 != 0 {
        return Err(Error::OddDimension(d));
    }
    Ok(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hopf_target(d: i32) -> Arc<DgAlgebra> {
        let gens = vec![
            Generator::new("x", d, GeneratorKind::Polynomial),
            Generator::new("ξ", 2 * d - 1, GeneratorKind::Exterior),
            Generator::new("ρ", d - 1, GeneratorKind::Exterior),
        ];
        Arc::new(DgAlgebra::parse(Q, gens, &[("ξ", "x^2"), ("ρ", "x")]).unwrap())
    }

    #[test]
    fn sphere_models() {
        for (d, hi) in [(4, 12), (3, 12), (2, 12)] {
            let dims = sphere_model(d).unwrap().cohomology_dims(DegreeWindow::new(0, hi).unwrap()).unwrap();
            assert_eq!(dims, GradedDims::from_pairs(&[(0, 1), (d, 1)]));
        }
    }

    #[test]
    fn tower_shapes() {
        let t = build_p_tower(3, 4, Some(13)).unwrap();
        let degs: Vec<(String, i32)> = t.total.generators()[2..].iter().map(|g| (g.label.clone(), g.degree)).collect();
        assert_eq!(degs, vec![("ρ".into(), 3), ("w₀".into(), 25), ("w₁".into(), 31)]);
        assert_eq!(t.total.poly_string(t.total.generator_differential(4)), "-ξ*w₀ + x*ρ*w₀");
        let t = build_p_tower(3, 3, Some(10)).unwrap();
        assert_eq!(t.total.generators()[2].degree, 21);
        assert_eq!(t.total.poly_string(t.total.generator_differential(2)), "x*w₀");
        assert_eq!(build_p_tower(2, 4, Some(8)).unwrap_err(), Error::MTooSmall { m: 8, min: 9 });
        let base = Arc::new(sphere_model(3).unwrap());
        assert!(TowerSpec::new(base, &[("a", 5, "b", 0), ("b", 7, "", 1)], Some(3)).is_err());
    }

    #[test]
    fn fibre_cohomology_is_finite() {
        let t = build_p_tower(2, 4, Some(5)).unwrap_or_else(|_| build_p_tower(2, 4, None).unwrap());
        let f = relative_module(&t).unwrap();
        let k = Arc::new(DgAlgebra::sphere_cohomology(4, Q));
        let g = base_change(&f, &sphere_model_formality(4).unwrap()).unwrap();
        assert!(crate::resolve::phi(&Module::Free(g)).unwrap().is_finite());
        let _ = k;
    }

    #[test]
    fn tower_levels() {
        for (l, d) in [(1, 3), (1, 4), (2, 3), (2, 4), (3, 3)] {
            let r = tower_level_bounds(&build_p_tower(l, d, None).unwrap(), None).unwrap();
            assert_eq!(r.level, SphereLevel::Exact(l as usize), "P_{l} over S^{d}: {}", r.to_json());
        }
        // four w-free classes force a molecule of height 3 here
        let r = tower_level_bounds(&build_p_tower(3, 4, None).unwrap(), None).unwrap();
        assert_eq!(r.cohomology, "0:1,7:1,25:1,38:1,56:1,63:1".parse().unwrap());
        assert_eq!(r.level, SphereLevel::Exact(4));
        assert!(r.pile_bound.is_err());
        assert_eq!(r.cohomology_range.unwrap().0, 4);
    }

    #[test]
    fn piles() {
        assert_eq!(pile_upper_bound(0, 2).unwrap().0, 1);
        let (b, f) = pile_upper_bound(2, 1).unwrap();
        assert_eq!((b, f.class()), (3, 2));
        assert_eq!(sci_level_bound(3), 4);
    }

    #[test]
    fn hopf() {
        let src = Arc::new(sphere_model(4).unwrap());
        let c = hopf_target(4);
        let id = AlgebraMap::new(src.clone(), c.clone(), vec![c.generator_poly(0), c.generator_poly(1)]).unwrap();
        let mut z = c.generator_poly(2);
        z = c.mul(&z, &c.generator_poly(0));
        z.add(&c.generator_poly(1).scaled(&Q.from_i64(-1)));
        let z = c.to_vector(&z, 7);
        assert_eq!(hopf_invariant(&id, Some(&z)).unwrap(), Q.one());
        let auto = hopf_invariant(&id, None).unwrap();
        assert!(auto == Q.one() || auto == Q.from_i64(-1));
        let double = AlgebraMap::new(src.clone(), c.clone(), vec![c.generator_poly(0).scaled(&Q.from_i64(2)), c.generator_poly(1).scaled(&Q.from_i64(4))]).unwrap();
        assert_eq!(hopf_invariant(&double, Some(&z)).unwrap(), Q.from_i64(4));
        let y = Arc::new(DgAlgebra::new(Q, vec![Generator::new("y", 7, GeneratorKind::Exterior)], vec![Poly::zero()]).unwrap());
        let trivial = AlgebraMap::new(src, y, vec![Poly::zero(), Poly::zero()]).unwrap();
        assert_eq!(hopf_invariant(&trivial, None).unwrap(), Q.zero());
        let odd = Arc::new(sphere_model(3).unwrap());
        let to_self = AlgebraMap::new(odd.clone(), odd.clone(), vec![odd.generator_poly(0)]).unwrap();
        assert_eq!(hopf_invariant(&to_self, None).unwrap(), Q.zero());
        assert_eq!(whitehead_square_invariant(8), Ok(2));
        assert_eq!(whitehead_square_invariant(3), Err(Error::OddDimension(3)));
    }
}
