//! Modules over `H*(S^d)`: the molecules `Σ^{-l}Z_m`, their quiver,
//! decompositions and exact levels.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::algebra::{AlgebraMap, DgAlgebra, GeneratorKind, Poly};
use crate::error::{Error, Result};
use crate::field::FieldTag;
use crate::graded::{Beyond, CochainComplex, DegreeWindow, GradedDims, GradedVectorSpace};
use crate::linalg::Matrix;
use crate::module::{find_idempotents, FreeElement, FreeModule, Module};
use crate::rational::whitehead_square_invariant;
use crate::resolve::{
    base_change, cohomology_verdict, infinite_level_certificate, koszul_resolution, koszul_resolution_poly, phi,
    FinitenessVerdict, LevelCertificate,
};

/// The molecule `Σ^{-l}Z_m` over `H*(S^d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MoleculeId {
    pub d: i32,
    pub l: i32,
    pub m: i32,
}

impl MoleculeId {
    pub fn new(d: i32, l: i32, m: i32) -> Result<MoleculeId> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!("sphere dimension {d} < 2")));
        }
        if m < 0 {
            return Err(Error::InvalidArgument(format!("molecule height {m} < 0")));
        }
        Ok(MoleculeId { d, l, m })
    }

    /// Degree of the lower cohomology class.
    pub fn bottom(&self) -> i32 {
        self.l - self.m * (self.d - 1)
    }

    pub fn cohomology(&self) -> GradedDims {
        GradedDims::from_pairs(&[(self.bottom(), 1), (self.d + self.l, 1)])
    }

    pub fn level(&self) -> usize {
        self.m as usize + 1
    }

    /// Which of the `d − 1` quiver components contains the molecule.
    pub fn component_index(&self) -> i32 {
        self.l.rem_euclid(self.d - 1)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "label": self.to_string(),
            "d": self.d,
            "l": self.l,
            "m": self.m,
            "cohomology": self.cohomology().to_json(),
            "level": self.level(),
            "componentIndex": self.component_index(),
        })
    }
}

impl fmt::Display for MoleculeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.l == 0 {
            write!(f, "Z_{}", self.m)
        } else {
            write!(f, "Σ^{{{}}}Z_{}", -self.l, self.m)
        }
    }
}

pub fn molecule_cohomology(id: &MoleculeId) -> GradedDims {
    id.cohomology()
}

pub fn molecule_level(id: &MoleculeId) -> usize {
    id.level()
}

pub fn component_index(id: &MoleculeId) -> i32 {
    id.component_index()
}

/// The sphere dimension `d` when `a` is `H*(S^d)`.
pub fn sphere_dimension(a: &DgAlgebra) -> Result<i32> {
    match a.generators() {
        [g] if g.kind == GeneratorKind::Exterior && g.degree >= 2 && a.has_zero_differential() => Ok(g.degree),
        _ => Err(Error::InvalidAlgebra("expected the cohomology of a sphere".into())),
    }
}

// ---------------------------------------------------------------- quiver

/// A finite window onto one `ZA_∞` component of the Auslander-Reiten quiver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuiverComponent {
    pub d: i32,
    pub component: i32,
    pub vertices: Vec<MoleculeId>,
    pub arrows: Vec<(MoleculeId, MoleculeId)>,
}

/// Vertices `Σ^{-l}Z_m` with `l = c + j(d−1)` for `j < cols` and `m < rows`.
///
/// Irreducible maps go up, `Σ^{-l}Z_m → Σ^{-l-(d-1)}Z_{m+1}`, and down,
/// `Σ^{-l}Z_m → Σ^{-l}Z_{m-1}`; the inverse translation is `Σ^{-(d-1)}`.
pub fn quiver_component(d: i32, c: i32, rows: usize, cols: usize) -> Result<QuiverComponent> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("sphere dimension {d} < 2")));
    }
    if !(0..=d - 2).contains(&c) {
        return Err(Error::InvalidArgument(format!("component index {c} outside 0..={}", d - 2)));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("rows and cols must be positive".into()));
    }
    let at = |j: usize, m: usize| MoleculeId { d, l: c + j as i32 * (d - 1), m: m as i32 };
    let mut vertices = Vec::new();
    let mut arrows = Vec::new();
    for j in 0..cols {
        for m in 0..rows {
            vertices.push(at(j, m));
            if m + 1 < rows && j + 1 < cols {
                arrows.push((at(j, m), at(j + 1, m + 1)));
            }
            if m >= 1 {
                arrows.push((at(j, m), at(j, m - 1)));
            }
        }
    }
    Ok(QuiverComponent { d, component: c, vertices, arrows })
}

/// `τ⁻¹`, the inverse Auslander-Reiten translation.
pub fn inverse_translate(id: &MoleculeId) -> MoleculeId {
    MoleculeId { l: id.l + id.d - 1, ..*id }
}

impl QuiverComponent {
    pub fn to_dot(&self, field: FieldTag) -> String {
        let mut s = format!("digraph \"ZA_inf_{}\" {{\n", self.component);
        s += &format!(
            "  // H*(S^{}) has {} components; this is component {}\n  rankdir=LR;\n",
            self.d,
            self.d - 1,
            self.component
        );
        for v in &self.vertices {
            let h: Vec<String> = v.cohomology().iter().map(|(n, _)| n.to_string()).collect();
            let r = match realizable(v, field) {
                Realizability::Yes(_) => "yes",
                Realizability::No(_) => "no",
                Realizability::CharacteristicTwoUnsupported => "unsupported",
            };
            s += &format!("  \"{v}\" [label=\"{v} [H: {}] [level {}] [realizable: {r}]\"];\n", h.join(","), v.level());
        }
        for (a, b) in &self.arrows {
            s += &format!("  \"{a}\" -> \"{b}\";\n");
        }
        s + "}\n"
    }

    pub fn to_json(&self) -> Value {
        json!({
            "d": self.d,
            "componentIndex": self.component,
            "componentCount": self.d - 1,
            "vertices": self.vertices.iter().map(MoleculeId::to_json).collect::<Vec<_>>(),
            "arrows": self.arrows.iter().map(|(a, b)| json!([a.to_string(), b.to_string()])).collect::<Vec<_>>(),
        })
    }
}

// ---------------------------------------------------------------- realizability

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NotRealizable {
    /// Cohomology in negative degrees.
    NegativeDegreeObstruction,
    /// No class in degree 0, so not the cochains of a connected space.
    MissingUnitClass,
    /// A candidate `Σ^{-m(d-1)}Z_m` whose homotopy fibre over `S^d` would
    /// have infinite cohomology.
    FibreCohomologyInfinite,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Realizability {
    Yes(String),
    No(NotRealizable),
    CharacteristicTwoUnsupported,
}

impl Realizability {
    pub fn to_json(&self) -> Value {
        match self {
            Realizability::Yes(by) => json!({"realizable": "yes", "by": by}),
            Realizability::No(r) => json!({"realizable": "no", "reason": format!("{r:?}")}),
            Realizability::CharacteristicTwoUnsupported => json!({"realizable": "unsupported", "reason": "characteristic 2"}),
        }
    }
}

/// Whether the molecule is `C*(X)` for a finite CW complex over `S^d`.
pub fn realizable(id: &MoleculeId, field: FieldTag) -> Realizability {
    if field.characteristic() == 2 {
        return Realizability::CharacteristicTwoUnsupported;
    }
    let (d, l, m) = (id.d, id.l, id.m);
    match id.bottom() {
        b if b < 0 => return Realizability::No(NotRealizable::NegativeDegreeObstruction),
        b if b > 0 => return Realizability::No(NotRealizable::MissingUnitClass),
        _ => {}
    }
    if m == 0 {
        return Realizability::Yes(format!("S^{d}"));
    }
    if m == 1 && l == d - 1 {
        if let Ok(h) = whitehead_square_invariant(d) {
            if !field.from_i64(h).is_zero() {
                return Realizability::Yes(format!(
                    "S^{} via the Whitehead square [ι, ι]: S^{} → S^{d}, Hopf invariant ±{h}",
                    2 * d - 1,
                    2 * d - 1
                ));
            }
        }
    }
    Realizability::No(NotRealizable::FibreCohomologyInfinite)
}

// ---------------------------------------------------------------- decomposition by cohomology

/// A way of writing graded dimensions as a sum of molecule cohomologies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub d: i32,
    pub molecules: Vec<MoleculeId>,
    pub matching: Vec<(i32, i32)>,
    pub ambiguous: bool,
    pub alternatives: Vec<Vec<MoleculeId>>,
}

const MATCHING_BUDGET: usize = 1_000_000;

fn pair_molecule(d: i32, a: i32, b: i32) -> Option<MoleculeId> {
    let gap = b - a - d;
    (gap >= 0 && gap % (d - 1) == 0).then(|| MoleculeId { d, l: b - d, m: gap / (d - 1) })
}

fn search(
    d: i32,
    counts: &mut BTreeMap<i32, usize>,
    current: &mut Vec<(i32, i32)>,
    out: &mut BTreeMap<Vec<MoleculeId>, Vec<(i32, i32)>>,
    budget: &mut usize,
) -> Result<()> {
    if *budget == 0 {
        return Err(Error::InvalidArgument("matching search exceeded its budget".into()));
    }
    *budget -= 1;
    let Some(a) = counts.iter().find(|(_, &c)| c > 0).map(|(&n, _)| n) else {
        let mut ms: Vec<MoleculeId> = current.iter().map(|&(a, b)| pair_molecule(d, a, b).expect("valid pair")).collect();
        ms.sort();
        let mut matching = current.clone();
        matching.sort();
        out.entry(ms).or_insert(matching);
        return Ok(());
    };
    *counts.get_mut(&a).expect("present") -= 1;
    let partners: Vec<i32> =
        counts.range(a + 1..).filter(|(&b, &c)| c > 0 && pair_molecule(d, a, b).is_some()).map(|(&b, _)| b).collect();
    for b in partners {
        *counts.get_mut(&b).expect("present") -= 1;
        current.push((a, b));
        let r = search(d, counts, current, out, budget);
        current.pop();
        *counts.get_mut(&b).expect("present") += 1;
        r?;
    }
    *counts.get_mut(&a).expect("present") += 1;
    Ok(())
}

/// Every multiset of molecules whose cohomology adds up to `dims`.
///
/// The default choice minimizes the largest height; the others are kept as
/// alternatives.
pub fn decompose(dims: &GradedDims, d: i32) -> Result<Decomposition> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("sphere dimension {d} < 2")));
    }
    if dims.total() % 2 != 0 {
        return Err(Error::NoValidMatching);
    }
    let mut counts: BTreeMap<i32, usize> = dims.iter().collect();
    let mut out = BTreeMap::new();
    let mut budget = MATCHING_BUDGET;
    search(d, &mut counts, &mut Vec::new(), &mut out, &mut budget)?;
    let max_m = |ms: &[MoleculeId]| ms.iter().map(|x| x.m).max().unwrap_or(-1);
    let best = out.keys().min_by_key(|ms| max_m(ms)).cloned().ok_or(Error::NoValidMatching)?;
    let matching = out[&best].clone();
    let alternatives: Vec<Vec<MoleculeId>> = out.into_keys().filter(|ms| *ms != best).collect();
    Ok(Decomposition { d, ambiguous: !alternatives.is_empty(), molecules: best, matching, alternatives })
}

impl Decomposition {
    /// Smallest and largest level over all candidate multisets.
    pub fn level_range(&self) -> (usize, usize) {
        let level = |ms: &[MoleculeId]| ms.iter().map(MoleculeId::level).max().unwrap_or(0);
        let all = std::iter::once(&self.molecules).chain(&self.alternatives).map(|ms| level(ms));
        all.fold((usize::MAX, 0), |(lo, hi), x| (lo.min(x), hi.max(x)))
    }

    pub fn to_json(&self) -> Value {
        let labels = |ms: &[MoleculeId]| ms.iter().map(ToString::to_string).collect::<Vec<_>>();
        json!({
            "d": self.d,
            "molecules": labels(&self.molecules),
            "componentIndices": self.molecules.iter().map(MoleculeId::component_index).collect::<Vec<_>>(),
            "matching": self.matching,
            "ambiguous": self.ambiguous,
            "alternatives": self.alternatives.iter().map(|ms| labels(ms)).collect::<Vec<_>>(),
        })
    }
}

// ---------------------------------------------------------------- models and exact decomposition

/// A free model of `Σ^{-l}Z_m`: generators `e_0, …, e_m` in degrees
/// `l − (m−j)(d−1)` with `D(e_j) = e_{j−1}·x`.
///
/// Checked on construction: the cohomology is that of the molecule and the
/// endomorphism algebra has no nontrivial idempotent.
pub fn molecule_model(id: &MoleculeId, field: FieldTag) -> Result<FreeModule> {
    let MoleculeId { d, l, m } = MoleculeId::new(id.d, id.l, id.m)?;
    let a = Arc::new(DgAlgebra::sphere_cohomology(d, field));
    let gens = (0..=m).map(|j| (format!("e{j}"), id.bottom() + j * (d - 1))).collect();
    let diff = (0..=m as usize)
        .map(|j| {
            let mut el = FreeElement::new();
            if j > 0 {
                el.insert(j - 1, Poly::term(vec![1], field.one()));
            }
            el
        })
        .collect();
    let f = FreeModule::new(a, gens, diff)?;
    let module = Module::Free(f.clone());
    let h = module.cohomology(DegreeWindow::new(id.bottom() - 1, l + d + 1)?)?;
    if h != id.cohomology() {
        return Err(Error::VerificationFailed(format!("model of {id} has cohomology {h}")));
    }
    if !find_idempotents(&module)?.is_empty() {
        return Err(Error::VerificationFailed(format!("model of {id} decomposes")));
    }
    Ok(f)
}

fn composite(delta: &BTreeMap<i32, Matrix>, dims: &BTreeMap<i32, usize>, field: FieldTag, t: i32, k: usize, step: i32) -> Result<Matrix> {
    let mut acc = Matrix::identity(field, dims.get(&t).copied().unwrap_or(0));
    for i in 0..k as i32 {
        let s = t - i * step;
        let next = dims.get(&(s - step)).copied().unwrap_or(0);
        let m = delta.get(&s).cloned().unwrap_or_else(|| Matrix::zeros(field, next, dims.get(&s).copied().unwrap_or(0)));
        acc = m.mul(&acc)?;
    }
    Ok(acc)
}

/// The molecules of a compact module over `H*(S^d)`, read off exactly.
///
/// Writing the differential of a semifree model on generators `V` as
/// `D = D̄ + Δ·x`, the minimal model is free on `H(V, D̄)` with differential
/// induced by `Δ`, and its Jordan chains are the molecules.
pub fn molecule_decomposition(m: &Module) -> Result<Vec<MoleculeId>> {
    let a = m.algebra().clone();
    let d = sphere_dimension(&a)?;
    let field = a.field();
    let (f, top) = match m {
        Module::Free(f) if f.complete_to().is_none() => match f.max_generator_degree() {
            Some(t) => (f.clone(), t),
            None => return Ok(Vec::new()),
        },
        _ => {
            let v = phi(m)?;
            let FinitenessVerdict::Finite { dims, .. } = &v else {
                return Err(Error::NotCompactlyDecomposable(format!("φ is {}", v.to_json())));
            };
            let Some(top) = dims.max_degree() else { return Ok(Vec::new()) };
            (koszul_resolution(&m.to_raw()?, top + 2)?, top)
        }
    };
    let Some(lo) = f.min_generator_degree() else { return Ok(Vec::new()) };
    let mut pos = vec![0usize; f.generators().len()];
    let mut by_degree: BTreeMap<i32, usize> = BTreeMap::new();
    for (j, (_, deg)) in f.generators().iter().enumerate() {
        if *deg <= top + 1 {
            let n = by_degree.entry(*deg).or_default();
            pos[j] = *n;
            *n += 1;
        }
    }
    let dim = |n: i32| by_degree.get(&n).copied().unwrap_or(0);
    let mut dbar: BTreeMap<i32, Matrix> = (lo..=top).map(|t| (t, Matrix::zeros(field, dim(t + 1), dim(t)))).collect();
    let mut delta: BTreeMap<i32, Matrix> =
        (lo..=top).map(|t| (t, Matrix::zeros(field, dim(t + 1 - d), dim(t)))).collect();
    let (unit, x) = (vec![0u32], vec![1u32]);
    for (j, (_, t)) in f.generators().iter().enumerate() {
        if *t > top {
            continue;
        }
        for (&k, p) in f.generator_differential(j) {
            for (mono, c) in p.terms() {
                if *mono == unit {
                    dbar.get_mut(t).expect("degree in range").add_to(pos[k], pos[j], c);
                } else if *mono == x {
                    delta.get_mut(t).expect("degree in range").add_to(pos[k], pos[j], c);
                }
            }
        }
    }
    let mut space = GradedVectorSpace::new(field);
    for n in lo..=top + 1 {
        space.set_degree(n, (0..dim(n)).map(|i| format!("v{n}_{i}")).collect());
    }
    let bar = CochainComplex::new(space, dbar, (lo, top + 1), Beyond::Zero, Beyond::Unknown)?;
    let w = DegreeWindow::new(lo, top)?;
    let h: BTreeMap<i32, _> = (lo..=top).map(|t| Ok((t, bar.degree_cohomology(t, w)?))).collect::<Result<_>>()?;
    let hdims: BTreeMap<i32, usize> = h.iter().map(|(&t, c)| (t, c.representatives.len())).collect();
    let step = d - 1;
    let mut induced = BTreeMap::new();
    for t in lo..=top {
        let target = t - step;
        let cols = h[&t]
            .representatives
            .iter()
            .map(|z| {
                let y = delta[&t].apply(z);
                match h.get(&target) {
                    Some(ht) => ht.coordinates(field, &y),
                    None => y.iter().all(|c| c.is_zero()).then(Vec::new),
                }
                .ok_or_else(|| Error::VerificationFailed("Δ does not induce a map on H(V, D̄)".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        induced.insert(t, Matrix::from_columns(field, hdims.get(&target).copied().unwrap_or(0), &cols));
    }
    let rank = |t: i32, k: usize| -> Result<usize> {
        if !(lo..=top).contains(&t) {
            return Ok(0);
        }
        Ok(composite(&induced, &hdims, field, t, k, step)?.rank())
    };
    let mut out = Vec::new();
    for t in lo..=top {
        let at_least = |j: usize| -> Result<usize> { Ok(rank(t, j - 1)? - rank(t + step, j)?) };
        let mut j = 1;
        while rank(t, j - 1)? > 0 {
            let exactly = at_least(j)? - at_least(j + 1)?;
            out.extend(std::iter::repeat(MoleculeId { d, l: t, m: j as i32 - 1 }).take(exactly));
            j += 1;
        }
    }
    out.sort();
    if m.is_finite() {
        let lo_h = out.iter().map(MoleculeId::bottom).min().unwrap_or(lo).min(m.lo().unwrap_or(lo));
        let hi_h = m.top().unwrap_or(top + d).max(top + d);
        let h = m.cohomology(DegreeWindow::new(lo_h - 1, hi_h + 1)?)?;
        let expected = out.iter().fold(GradedDims::new(), |acc, x| acc.sum(&x.cohomology()));
        if h != expected {
            return Err(Error::VerificationFailed(format!("molecules give {expected}, module has {h}")));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- levels

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SphereLevel {
    Exact(usize),
    Interval(usize, usize),
    Infinite(LevelCertificate),
}

impl SphereLevel {
    pub fn to_json(&self) -> Value {
        match self {
            SphereLevel::Exact(n) => json!({"kind": "exact", "level": n}),
            SphereLevel::Interval(a, b) => json!({"kind": "interval", "lower": a, "upper": b}),
            SphereLevel::Infinite(c) => json!({"kind": "infinite", "certificate": c.to_json()}),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LevelReport {
    pub level: SphereLevel,
    /// Exact molecules, when module data was available.
    pub molecules: Option<Vec<MoleculeId>>,
    /// The decomposition suggested by cohomology alone.
    pub decomposition: Option<Decomposition>,
}

impl LevelReport {
    pub fn to_json(&self) -> Value {
        json!({
            "level": self.level.to_json(),
            "molecules": self.molecules.as_ref().map(|ms| ms.iter().map(ToString::to_string).collect::<Vec<_>>()),
            "decomposition": self.decomposition.as_ref().map(Decomposition::to_json),
        })
    }
}

fn report_from(level: SphereLevel) -> LevelReport {
    LevelReport { level, molecules: None, decomposition: None }
}

/// Level of a module over `H*(S^d)`.
///
/// Infinite when `H(M)` or `φ(M)` is certified infinite; otherwise the
/// exact molecule decomposition gives `1 + max m`.
pub fn sphere_level(m: &Module) -> Result<LevelReport> {
    let a = m.algebra().clone();
    let d = sphere_dimension(&a)?;
    let h = cohomology_verdict(m)?;
    if let Some(c) = infinite_level_certificate(&h, &a)? {
        return Ok(report_from(SphereLevel::Infinite(c)));
    }
    let v = phi(m)?;
    match &v {
        FinitenessVerdict::Finite { .. } => {}
        FinitenessVerdict::InfiniteCertified { .. } => {
            let c = infinite_level_certificate(&v, &a)?.expect("infinite verdict");
            return Ok(report_from(SphereLevel::Infinite(c)));
        }
        FinitenessVerdict::UnknownBeyondCap { .. } => {
            return Err(Error::NotCompactlyDecomposable(format!("φ is {}", v.to_json())));
        }
    }
    let molecules = molecule_decomposition(m)?;
    let level = molecules.iter().map(MoleculeId::level).max().unwrap_or(0);
    Ok(LevelReport { level: SphereLevel::Exact(level), molecules: Some(molecules), decomposition: decompose(h.dims(), d).ok() })
}

/// Level from cohomology dimensions alone; an interval when they do not
/// determine the molecules.
pub fn sphere_level_from_dims(dims: &GradedDims, d: i32) -> Result<LevelReport> {
    let dec = decompose(dims, d).map_err(|e| Error::NotCompactlyDecomposable(e.to_string()))?;
    let (lo, hi) = dec.level_range();
    let level = if lo == hi { SphereLevel::Exact(lo) } else { SphereLevel::Interval(lo, hi) };
    Ok(LevelReport { level, molecules: None, decomposition: Some(dec) })
}

/// Level from a finiteness verdict on `H(M)` for a module over `algebra`.
pub fn sphere_level_from_verdict(h: &FinitenessVerdict, algebra: &DgAlgebra) -> Result<LevelReport> {
    let d = sphere_dimension(algebra)?;
    if let Some(c) = infinite_level_certificate(h, algebra)? {
        return Ok(report_from(SphereLevel::Infinite(c)));
    }
    match h {
        FinitenessVerdict::Finite { dims, .. } => sphere_level_from_dims(dims, d),
        _ => Err(Error::NotCompactlyDecomposable(format!("H(M) is {}", h.to_json()))),
    }
}

// ---------------------------------------------------------------- bundles over S^4

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formalizability {
    CondI,
    CondII,
    Neither,
}

/// What is known about a map `π: S → T`.
#[derive(Clone, Debug, Default)]
pub struct FormalizabilityData {
    pub characteristic: u32,
    /// Both `H*(S)` and `H*(T)` are polynomial on countably many generators.
    pub polynomial: Option<bool>,
    pub sq1_vanishes: Option<bool>,
    /// `H̃*(S)`.
    pub source_reduced: Option<GradedDims>,
    /// `H̃*(ΩT)`.
    pub loop_reduced: Option<GradedDims>,
    /// `QH*(T)`.
    pub indecomposables: Option<GradedDims>,
}

pub fn formalizability_check(data: &FormalizabilityData) -> Result<Formalizability> {
    let mut missing = Vec::new();
    match (data.polynomial, data.characteristic == 2, data.sq1_vanishes) {
        (Some(true), false, _) | (Some(true), true, Some(true)) => return Ok(Formalizability::CondI),
        (Some(true), true, None) => missing.push("Sq₁ flag"),
        (None, _, _) => missing.push("polynomial flag"),
        _ => {}
    }
    match (&data.source_reduced, &data.loop_reduced, &data.indecomposables) {
        (Some(s), Some(l), Some(q)) => {
            if s.iter().all(|(i, _)| l.get(i - 1) == q.get(i)) {
                return Ok(Formalizability::CondII);
            }
        }
        _ => missing.push("H̃*(S), H̃*(ΩT), QH*(T)"),
    }
    if missing.is_empty() {
        Ok(Formalizability::Neither)
    } else {
        Err(Error::MissingData(missing.join(", ")))
    }
}

/// `H*(f): H*(BG) = K[y_i] → H*(S^4)`, sending `y_1` to the generator or to 0.
pub fn classifying_map(gens: &[i32], field: FieldTag, f4_nonzero: bool) -> Result<AlgebraMap> {
    if gens.is_empty() {
        return Err(Error::InvalidArgument("no polynomial generators".into()));
    }
    if f4_nonzero && gens[0] != 4 {
        return Err(Error::InvalidArgument("the first generator must have degree 4".into()));
    }
    let p = Arc::new(DgAlgebra::polynomial(field, gens, "y")?);
    let s = Arc::new(DgAlgebra::sphere_cohomology(4, field));
    let images = (0..gens.len())
        .map(|i| if i == 0 && f4_nonzero { s.generator_poly(0) } else { Poly::zero() })
        .collect();
    AlgebraMap::new(p, s, images)
}

#[derive(Clone, Debug)]
pub struct BundleReport {
    pub level: usize,
    pub molecules: Vec<MoleculeId>,
    pub cohomology: GradedDims,
    pub cohomology_decomposition: Option<Decomposition>,
    pub formalizability: Formalizability,
}

impl BundleReport {
    pub fn to_json(&self) -> Value {
        json!({
            "level": self.level,
            "molecules": self.molecules.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "componentIndices": self.molecules.iter().map(MoleculeId::component_index).collect::<Vec<_>>(),
            "cohomology": self.cohomology.to_json(),
            "cohomologyDecomposition": self.cohomology_decomposition.as_ref().map(Decomposition::to_json),
            "formalizability": format!("{:?}", self.formalizability),
        })
    }
}

/// Level over `S^4` of the total space of a `G`-bundle classified by
/// `f: S^4 → BG`, via `K ⊗^L_{H*(BG)} H*(S^4)`.
///
/// The caller declares which formalizability condition the pair satisfies.
pub fn bundle_level(gens: &[i32], f4_nonzero: bool, field: FieldTag, declared: Option<Formalizability>) -> Result<BundleReport> {
    let formalizability = match declared {
        Some(f @ (Formalizability::CondI | Formalizability::CondII)) => f,
        _ => return Err(Error::FormalizabilityNotDeclared),
    };
    let map = classifying_map(gens, field, f4_nonzero)?;
    let resolution = koszul_resolution_poly(gens, field)?;
    let module = Module::Free(base_change(&resolution, &map)?);
    let molecules = molecule_decomposition(&module)?;
    let level = molecules.iter().map(MoleculeId::level).max().unwrap_or(0);
    let expected = if f4_nonzero { 2 } else { 1 };
    if level != expected {
        return Err(Error::VerificationFailed(format!("bundle level {level}, expected {expected}")));
    }
    let top = module.top().unwrap_or(0);
    let cohomology = module.cohomology(DegreeWindow::new(-1, top + 1)?)?;
    let cohomology_decomposition = decompose(&cohomology, 4).ok();
    Ok(BundleReport { level, molecules, cohomology, cohomology_decomposition, formalizability })
}

/// A free module over `algebra` on generators of the given degrees.
pub fn free_basis(algebra: Arc<DgAlgebra>, degrees: &[i32]) -> Result<FreeModule> {
    let gens = degrees.iter().enumerate().map(|(i, &n)| (format!("b{i}"), n)).collect();
    FreeModule::new(algebra, gens, vec![FreeElement::new(); degrees.len()])
}

/// Level of a pullback whose fibre module `basis` is free over the base,
/// verified by checking that only `m = 0` molecules occur.
pub fn free_pullback_level(basis: &FreeModule, map: &AlgebraMap) -> Result<(usize, Vec<MoleculeId>)> {
    sphere_dimension(&map.target)?;
    let module = Module::Free(base_change(basis, map)?);
    let molecules = molecule_decomposition(&module)?;
    if let Some(bad) = molecules.iter().find(|x| x.m > 0) {
        return Err(Error::NotFree(format!("the decomposition contains {bad}")));
    }
    Ok((molecules.iter().map(MoleculeId::level).max().unwrap_or(0), molecules))
}
