//! Right DG modules: free presentations, finite complexes with action
//! tables, and the constructions built from them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde_json::{json, Map, Value};

use crate::algebra::{split_terms, DgAlgebra, GeneratorKind, Monomial, Poly};
use crate::error::{Error, Result};
use crate::field::{FieldTag, Scalar};
use crate::graded::{Beyond, CochainComplex, DegreeWindow, GradedDims, GradedVectorSpace};
use crate::linalg::{axpy, zero_vec, Matrix};

/// `Σ_j e_j · p_j`, keyed by generator index.
pub type FreeElement = BTreeMap<usize, Poly>;

fn add_to_element(el: &mut FreeElement, j: usize, p: &Poly) {
    let entry = el.entry(j).or_default();
    entry.add(p);
    if entry.is_zero() {
        el.remove(&j);
    }
}

struct FreeBasis {
    items: Vec<(usize, Monomial)>,
    index: HashMap<(usize, Monomial), usize>,
}

/// A semifree module presented on generators, `D(e_j) = Σ_k e_k · p_kj`.
///
/// With `complete_to = Some(b)` only the generators of degree `≤ b` are
/// present and `D` is exact on those of degree `< b`; this is how infinite
/// resolutions are truncated.
pub struct FreeModule {
    algebra: Arc<DgAlgebra>,
    gens: Vec<(String, i32)>,
    diff: Vec<FreeElement>,
    complete_to: Option<i32>,
    cache: RwLock<HashMap<i32, Arc<FreeBasis>>>,
}

impl Clone for FreeModule {
    fn clone(&self) -> Self {
        FreeModule {
            algebra: self.algebra.clone(),
            gens: self.gens.clone(),
            diff: self.diff.clone(),
            complete_to: self.complete_to,
            cache: RwLock::default(),
        }
    }
}

impl fmt::Debug for FreeModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FreeModule").field("gens", &self.gens).field("complete_to", &self.complete_to).finish()
    }
}

impl FreeModule {
    pub fn new(algebra: Arc<DgAlgebra>, gens: Vec<(String, i32)>, diff: Vec<FreeElement>) -> Result<FreeModule> {
        FreeModule::truncated(algebra, gens, diff, None)
    }

    pub fn truncated(
        algebra: Arc<DgAlgebra>,
        gens: Vec<(String, i32)>,
        diff: Vec<FreeElement>,
        complete_to: Option<i32>,
    ) -> Result<FreeModule> {
        if diff.len() != gens.len() {
            return Err(Error::InvalidModule("one differential value per generator".into()));
        }
        let m = FreeModule { algebra, gens, diff, complete_to, cache: RwLock::default() };
        for (j, el) in m.diff.iter().enumerate() {
            for (&k, p) in el {
                let Some(&(_, dk)) = m.gens.get(k) else {
                    return Err(Error::InvalidModule(format!("D({}) names a missing generator", m.gens[j].0)));
                };
                for (mono, c) in p.terms() {
                    if c.field() != m.field() {
                        return Err(Error::FieldMismatch(m.field(), c.field()));
                    }
                    if mono.len() != m.algebra.generators().len() || dk + m.algebra.monomial_degree(mono) != m.gens[j].1 + 1 {
                        return Err(Error::InvalidModule(format!("D({}) is not homogeneous of degree +1", m.gens[j].0)));
                    }
                }
            }
        }
        for j in 0..m.gens.len() {
            if complete_to.is_some_and(|b| m.gens[j].1 >= b) {
                continue;
            }
            if !m.d_element(&m.diff[j]).is_empty() {
                return Err(Error::InvalidModule(format!("D² ≠ 0 on {}", m.gens[j].0)));
            }
        }
        Ok(m)
    }

    /// The algebra as a module over itself.
    pub fn algebra_module(algebra: Arc<DgAlgebra>) -> FreeModule {
        FreeModule::new(algebra, vec![("1".into(), 0)], vec![FreeElement::new()]).expect("rank one module")
    }

    pub fn algebra(&self) -> &Arc<DgAlgebra> {
        &self.algebra
    }

    pub fn field(&self) -> FieldTag {
        self.algebra.field()
    }

    pub fn generators(&self) -> &[(String, i32)] {
        &self.gens
    }

    pub fn generator_differential(&self, j: usize) -> &FreeElement {
        &self.diff[j]
    }

    pub fn complete_to(&self) -> Option<i32> {
        self.complete_to
    }

    pub fn min_generator_degree(&self) -> Option<i32> {
        self.gens.iter().map(|g| g.1).min()
    }

    pub fn max_generator_degree(&self) -> Option<i32> {
        self.gens.iter().map(|g| g.1).max()
    }

    /// Top degree of a finite-dimensional module.
    pub fn top(&self) -> Option<i32> {
        if self.complete_to.is_some() {
            return None;
        }
        let t = self.algebra.top_degree()?;
        Some(self.max_generator_degree().map_or(i32::MIN, |g| g + t))
    }

    pub fn is_finite(&self) -> bool {
        self.gens.is_empty() || self.top().is_some()
    }

    fn basis_entry(&self, n: i32) -> Arc<FreeBasis> {
        if let Some(b) = self.cache.read().expect("module cache").get(&n) {
            return b.clone();
        }
        let mut items = Vec::new();
        for (j, (_, deg)) in self.gens.iter().enumerate() {
            for mono in self.algebra.basis(n - deg) {
                items.push((j, mono));
            }
        }
        let index = items.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
        let b = Arc::new(FreeBasis { items, index });
        self.cache.write().expect("module cache").insert(n, b.clone());
        b
    }

    pub fn dim(&self, n: i32) -> usize {
        self.basis_entry(n).items.len()
    }

    pub fn basis(&self, n: i32) -> Vec<(usize, Monomial)> {
        self.basis_entry(n).items.clone()
    }

    pub fn label(&self, j: usize, mono: &Monomial) -> String {
        if mono.iter().all(|&e| e == 0) {
            self.gens[j].0.clone()
        } else {
            format!("{}·{}", self.gens[j].0, self.algebra.monomial_label(mono))
        }
    }

    /// `D(Σ e_j p_j) = Σ D(e_j) p_j + (−1)^{|e_j|} e_j D(p_j)`.
    pub fn d_element(&self, el: &FreeElement) -> FreeElement {
        let field = self.field();
        let mut out = FreeElement::new();
        for (&j, p) in el {
            for (&k, q) in &self.diff[j] {
                add_to_element(&mut out, k, &self.algebra.mul(q, p));
            }
            let dp = self.algebra.d_poly(p);
            add_to_element(&mut out, j, &dp.scaled(&field.sign(self.gens[j].1 as i64)));
        }
        out
    }

    pub fn mul_element(&self, el: &FreeElement, p: &Poly) -> FreeElement {
        let mut out = FreeElement::new();
        for (&j, q) in el {
            add_to_element(&mut out, j, &self.algebra.mul(q, p));
        }
        out
    }

    pub fn element_to_vector(&self, el: &FreeElement, n: i32) -> Vec<Scalar> {
        let b = self.basis_entry(n);
        let mut v = zero_vec(self.field(), b.items.len());
        for (&j, p) in el {
            for (mono, c) in p.terms() {
                let i = *b.index.get(&(j, mono.clone())).expect("element of the wrong degree");
                v[i] = &v[i] + c;
            }
        }
        v
    }

    pub fn vector_to_element(&self, v: &[Scalar], n: i32) -> FreeElement {
        let b = self.basis_entry(n);
        let mut out = FreeElement::new();
        for (i, c) in v.iter().enumerate() {
            if !c.is_zero() {
                let (j, mono) = &b.items[i];
                add_to_element(&mut out, *j, &Poly::term(mono.clone(), c.clone()));
            }
        }
        out
    }

    /// The basis vector `e_j` in degree `|e_j|`.
    pub fn generator_vector(&self, j: usize) -> Vec<Scalar> {
        let mut el = FreeElement::new();
        el.insert(j, self.algebra.one());
        self.element_to_vector(&el, self.gens[j].1)
    }

    pub fn d_matrix(&self, n: i32) -> Matrix {
        let src = self.basis(n);
        let mut m = Matrix::zeros(self.field(), self.dim(n + 1), src.len());
        for (col, (j, mono)) in src.iter().enumerate() {
            let mut el = FreeElement::new();
            el.insert(*j, Poly::term(mono.clone(), self.field().one()));
            let v = self.element_to_vector(&self.d_element(&el), n + 1);
            for (row, c) in v.iter().enumerate() {
                if !c.is_zero() {
                    m.set(row, col, c.clone());
                }
            }
        }
        m
    }

    pub fn act(&self, n: i32, v: &[Scalar], mono: &Monomial) -> Vec<Scalar> {
        let el = self.vector_to_element(v, n);
        let p = Poly::term(mono.clone(), self.field().one());
        self.element_to_vector(&self.mul_element(&el, &p), n + self.algebra.monomial_degree(mono))
    }

    /// Converts a finite-dimensional free module into an explicit complex with action tables.
    pub fn to_raw(&self) -> Result<RawModule> {
        let top = self.top().ok_or_else(|| Error::InvalidModule("module is not finite dimensional".into()))?;
        let lo = self.min_generator_degree().unwrap_or(0);
        let complex = self.complex(top)?;
        let mut actions = Vec::new();
        for (i, g) in self.algebra.generators().iter().enumerate() {
            let mono = self.algebra.unit_exponent(i, 1);
            let mut per = BTreeMap::new();
            for n in lo..=top {
                let cols: Vec<Vec<Scalar>> = (0..self.dim(n))
                    .map(|c| {
                        let mut e = zero_vec(self.field(), self.dim(n));
                        e[c] = self.field().one();
                        self.act(n, &e, &mono)
                    })
                    .collect();
                per.insert(n, Matrix::from_columns(self.field(), self.dim(n + g.degree), &cols));
            }
            actions.push(per);
        }
        RawModule::new(self.algebra.clone(), complex, actions)
    }

    /// Underlying complex on degrees up to `hi` (everything when finite).
    pub fn complex(&self, hi: i32) -> Result<CochainComplex> {
        let Some(lo) = self.min_generator_degree() else {
            return Ok(CochainComplex::zero(self.field()));
        };
        let (top, above) = match self.top() {
            Some(t) => (t, Beyond::Zero),
            None => (self.complete_to.map_or(hi, |b| b.min(hi)), Beyond::Unknown),
        };
        let top = top.max(lo);
        let mut space = GradedVectorSpace::new(self.field());
        let mut d = BTreeMap::new();
        for n in lo..=top {
            space.set_degree(n, self.basis(n).iter().map(|(j, m)| self.label(*j, m)).collect());
            if n < top {
                d.insert(n, self.d_matrix(n));
            }
        }
        CochainComplex::new(space, d, (lo, top.max(lo + 1)), Beyond::Zero, above)
    }

    pub fn shift(&self, k: i32) -> FreeModule {
        let sign = self.field().sign(k as i64);
        let gens = self.gens.iter().map(|(l, d)| (l.clone(), d - k)).collect();
        let diff = self.diff.iter().map(|el| el.iter().map(|(&j, p)| (j, p.scaled(&sign))).collect()).collect();
        FreeModule::truncated(self.algebra.clone(), gens, diff, self.complete_to.map(|b| b - k)).expect("shift of a valid module")
    }

    /// Parses `"e0*x - 2*e1*x^2"`-style values for module generators.
    pub fn parse(algebra: Arc<DgAlgebra>, gens: Vec<(String, i32)>, diff: &[(&str, &str)]) -> Result<FreeModule> {
        let mut values = vec![FreeElement::new(); gens.len()];
        for (label, expr) in diff {
            let j = gens.iter().position(|g| g.0 == *label).ok_or_else(|| Error::Parse(format!("unknown generator {label:?}")))?;
            values[j] = parse_element(&algebra, &gens, expr)?;
        }
        FreeModule::new(algebra, gens, values)
    }

    pub fn element_string(&self, el: &FreeElement) -> String {
        if el.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = el
            .iter()
            .map(|(&j, p)| {
                let s = self.algebra.poly_string(p);
                if s == "1" {
                    self.gens[j].0.clone()
                } else {
                    format!("{}*({s})", self.gens[j].0)
                }
            })
            .collect();
        parts.join(" + ")
    }

    pub fn to_json(&self) -> Value {
        let gens: Vec<Value> = self.gens.iter().map(|(l, d)| json!({"label": l, "degree": d})).collect();
        let diff: Map<String, Value> = self
            .gens
            .iter()
            .zip(&self.diff)
            .filter(|(_, el)| !el.is_empty())
            .map(|((l, _), el)| (l.clone(), Value::String(self.element_string(el))))
            .collect();
        json!({"kind": "free", "algebra": self.algebra.to_json(), "generators": gens, "differential": diff})
    }
}

fn parse_element(algebra: &DgAlgebra, gens: &[(String, i32)], s: &str) -> Result<FreeElement> {
    let mut out = FreeElement::new();
    let cleaned = s.replace(['(', ')'], "");
    for (neg, term) in split_terms(&cleaned) {
        let mut gen = None;
        let mut rest = Vec::new();
        for f in term.split('*').map(str::trim).filter(|f| !f.is_empty()) {
            match gens.iter().position(|g| g.0 == f) {
                Some(j) if gen.is_none() => gen = Some(j),
                Some(_) => return Err(Error::Parse(format!("term {term:?} names two module generators"))),
                None => rest.push(f),
            }
        }
        let j = gen.ok_or_else(|| Error::Parse(format!("term {term:?} names no module generator")))?;
        let body = if rest.is_empty() { "1".to_string() } else { rest.join("*") };
        let p = algebra.parse_poly(&body)?;
        let p = if neg { p.scaled(&algebra.field().from_i64(-1)) } else { p };
        add_to_element(&mut out, j, &p);
    }
    Ok(out)
}

/// A finite cochain complex with right actions of the algebra generators.
#[derive(Clone, Debug)]
pub struct RawModule {
    algebra: Arc<DgAlgebra>,
    complex: CochainComplex,
    actions: Vec<BTreeMap<i32, Matrix>>,
}

impl RawModule {
    /// `actions[i][n]` is right multiplication by generator `i` out of degree `n`.
    pub fn new(algebra: Arc<DgAlgebra>, complex: CochainComplex, actions: Vec<BTreeMap<i32, Matrix>>) -> Result<RawModule> {
        if complex.bounds() != (Beyond::Zero, Beyond::Zero) {
            return Err(Error::InvalidModule("raw modules must be finite complexes".into()));
        }
        if complex.field() != algebra.field() {
            return Err(Error::FieldMismatch(algebra.field(), complex.field()));
        }
        if actions.len() != algebra.generators().len() {
            return Err(Error::InvalidModule("one action table per algebra generator".into()));
        }
        if algebra.field().characteristic() != 0 && algebra.generators().iter().any(|g| g.kind == GeneratorKind::DividedPower) {
            return Err(Error::InvalidModule("action tables cannot present divided powers in positive characteristic".into()));
        }
        let m = RawModule { algebra, complex, actions };
        let degrees: Vec<i32> = m.complex.space().degrees().collect();
        let gens = m.algebra.generators().to_vec();
        for (i, per) in m.actions.iter().enumerate() {
            for (&n, a) in per {
                if a.cols() != m.dim(n) || a.rows() != m.dim(n + gens[i].degree) {
                    return Err(Error::InvalidModule(format!("action of {} in degree {n} has the wrong shape", gens[i].label)));
                }
            }
        }
        let field = m.field();
        for &n in &degrees {
            for b in 0..m.dim(n) {
                let mut v = zero_vec(field, m.dim(n));
                v[b] = field.one();
                let dv = m.complex.differential(n).apply(&v);
                for (i, g) in gens.iter().enumerate() {
                    let vg = m.act_generator(i, n, &v);
                    let lhs = m.complex.differential(n + g.degree).apply(&vg);
                    let mut rhs = m.act_generator(i, n + 1, &dv);
                    let dg = m.act_poly(n, &v, m.algebra.generator_differential(i), g.degree + 1);
                    axpy(&mut rhs, &field.sign(n as i64), &dg);
                    if lhs != rhs {
                        return Err(Error::InvalidModule(format!("Leibniz rule fails for {} in degree {n}", g.label)));
                    }
                    for (k, h) in gens.iter().enumerate() {
                        let vgh = m.act_generator(k, n + g.degree, &vg);
                        if k == i && g.kind == GeneratorKind::Exterior {
                            if vgh.iter().any(|c| !c.is_zero()) {
                                return Err(Error::InvalidModule(format!("{}² acts nontrivially", g.label)));
                            }
                            continue;
                        }
                        let vhg = m.act_generator(i, n + h.degree, &m.act_generator(k, n, &v));
                        let sign = field.sign(g.degree as i64 * h.degree as i64);
                        if vgh != vhg.iter().map(|c| c * &sign).collect::<Vec<_>>() {
                            return Err(Error::InvalidModule(format!("{} and {} do not commute", g.label, h.label)));
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    /// A complex on which every positive-degree element acts by zero.
    pub fn trivial(algebra: Arc<DgAlgebra>, complex: CochainComplex) -> Result<RawModule> {
        let n = algebra.generators().len();
        RawModule::new(algebra, complex, vec![BTreeMap::new(); n])
    }

    /// The ground field, concentrated in degree 0.
    pub fn ground_field(algebra: Arc<DgAlgebra>) -> RawModule {
        let mut space = GradedVectorSpace::new(algebra.field());
        space.set_degree(0, vec!["1".into()]);
        RawModule::trivial(algebra, CochainComplex::finite(space, BTreeMap::new()).expect("one-dimensional complex"))
            .expect("trivial module")
    }

    /// A graded vector space with zero differential and trivial action.
    pub fn trivial_from_dims(algebra: Arc<DgAlgebra>, dims: &GradedDims, prefix: &str) -> Result<RawModule> {
        let mut space = GradedVectorSpace::new(algebra.field());
        for (n, k) in dims.iter() {
            space.set_degree(n, (0..k).map(|i| if k == 1 { format!("{prefix}{n}") } else { format!("{prefix}{n}.{i}") }).collect());
        }
        RawModule::trivial(algebra, CochainComplex::finite(space, BTreeMap::new())?)
    }

    pub fn algebra(&self) -> &Arc<DgAlgebra> {
        &self.algebra
    }

    pub fn field(&self) -> FieldTag {
        self.algebra.field()
    }

    pub fn complex(&self) -> &CochainComplex {
        &self.complex
    }

    pub fn dim(&self, n: i32) -> usize {
        self.complex.dim(n)
    }

    pub fn lo(&self) -> Option<i32> {
        self.complex.space().degrees().next()
    }

    pub fn top(&self) -> Option<i32> {
        self.complex.space().degrees().last()
    }

    pub fn act_generator(&self, i: usize, n: i32, v: &[Scalar]) -> Vec<Scalar> {
        let deg = self.algebra.generators()[i].degree;
        match self.actions[i].get(&n) {
            Some(a) => a.apply(v),
            None => zero_vec(self.field(), self.dim(n + deg)),
        }
    }

    /// `v · m`, applying the generator factors in order.
    pub fn act_monomial(&self, n: i32, v: &[Scalar], mono: &Monomial) -> Vec<Scalar> {
        let field = self.field();
        let mut cur = v.to_vec();
        let mut deg = n;
        for (i, &e) in mono.iter().enumerate() {
            let g = &self.algebra.generators()[i];
            for _ in 0..e {
                cur = self.act_generator(i, deg, &cur);
                deg += g.degree;
            }
            if g.kind == GeneratorKind::DividedPower && e > 1 {
                let fact = (1..=e as i64).fold(field.one(), |a, k| &a * &field.from_i64(k));
                let inv = fact.inv().expect("characteristic 0");
                cur = cur.iter().map(|c| c * &inv).collect();
            }
        }
        cur
    }

    pub fn act_poly(&self, n: i32, v: &[Scalar], p: &Poly, deg: i32) -> Vec<Scalar> {
        let mut out = zero_vec(self.field(), self.dim(n + deg));
        for (mono, c) in p.terms() {
            axpy(&mut out, c, &self.act_monomial(n, v, mono));
        }
        out
    }

    pub fn action_matrix(&self, i: usize, n: i32) -> Matrix {
        let deg = self.algebra.generators()[i].degree;
        self.actions[i].get(&n).cloned().unwrap_or_else(|| Matrix::zeros(self.field(), self.dim(n + deg), self.dim(n)))
    }

    pub fn shift(&self, k: i32) -> RawModule {
        let sign = self.field().sign(k as i64);
        let mut space = GradedVectorSpace::new(self.field());
        for n in self.complex.space().degrees() {
            space.set_degree(n - k, self.complex.space().labels(n).to_vec());
        }
        let d = self.complex.space().degrees().map(|n| (n - k, self.complex.differential(n).scale(&sign))).collect();
        let complex = CochainComplex::finite(space, d).expect("shift of a valid complex");
        let actions = self.actions.iter().map(|per| per.iter().map(|(n, a)| (n - k, a.clone())).collect()).collect();
        RawModule { algebra: self.algebra.clone(), complex, actions }
    }

    pub fn to_json(&self) -> Value {
        let mut action = Map::new();
        for (g, per) in self.algebra.generators().iter().zip(&self.actions) {
            let mut m = Map::new();
            for (n, a) in per {
                if !a.is_zero() {
                    let rows: Vec<Value> = (0..a.rows()).map(|i| Value::Array(a.row(i).iter().map(Scalar::to_json).collect())).collect();
                    m.insert(n.to_string(), Value::Array(rows));
                }
            }
            action.insert(g.label.clone(), Value::Object(m));
        }
        json!({"kind": "raw", "algebra": self.algebra.to_json(), "complex": self.complex.to_json(), "action": action})
    }
}

/// A DG module presentation.
#[derive(Clone, Debug)]
pub enum Module {
    Free(FreeModule),
    Raw(RawModule),
}

impl From<FreeModule> for Module {
    fn from(m: FreeModule) -> Self {
        Module::Free(m)
    }
}

impl From<RawModule> for Module {
    fn from(m: RawModule) -> Self {
        Module::Raw(m)
    }
}

impl Module {
    pub fn algebra(&self) -> &Arc<DgAlgebra> {
        match self {
            Module::Free(m) => m.algebra(),
            Module::Raw(m) => m.algebra(),
        }
    }

    pub fn field(&self) -> FieldTag {
        self.algebra().field()
    }

    pub fn dim(&self, n: i32) -> usize {
        match self {
            Module::Free(m) => m.dim(n),
            Module::Raw(m) => m.dim(n),
        }
    }

    pub fn labels(&self, n: i32) -> Vec<String> {
        match self {
            Module::Free(m) => m.basis(n).iter().map(|(j, mono)| m.label(*j, mono)).collect(),
            Module::Raw(m) => m.complex().space().labels(n).to_vec(),
        }
    }

    /// Lowest nonzero degree.
    pub fn lo(&self) -> Option<i32> {
        match self {
            Module::Free(m) => m.min_generator_degree(),
            Module::Raw(m) => m.lo(),
        }
    }

    /// Highest nonzero degree, when finite.
    pub fn top(&self) -> Option<i32> {
        match self {
            Module::Free(m) => m.top(),
            Module::Raw(m) => m.top().or(Some(i32::MIN)),
        }
    }

    pub fn complete_to(&self) -> Option<i32> {
        match self {
            Module::Free(m) => m.complete_to(),
            Module::Raw(_) => None,
        }
    }

    pub fn d_matrix(&self, n: i32) -> Matrix {
        match self {
            Module::Free(m) => m.d_matrix(n),
            Module::Raw(m) => m.complex().differential(n),
        }
    }

    pub fn act(&self, n: i32, v: &[Scalar], mono: &Monomial) -> Vec<Scalar> {
        match self {
            Module::Free(m) => m.act(n, v, mono),
            Module::Raw(m) => m.act_monomial(n, v, mono),
        }
    }

    pub fn act_poly(&self, n: i32, v: &[Scalar], p: &Poly, deg: i32) -> Vec<Scalar> {
        let mut out = zero_vec(self.field(), self.dim(n + deg));
        for (mono, c) in p.terms() {
            axpy(&mut out, c, &self.act(n, v, mono));
        }
        out
    }

    pub fn complex(&self, hi: i32) -> Result<CochainComplex> {
        match self {
            Module::Free(m) => m.complex(hi),
            Module::Raw(m) => Ok(m.complex().clone()),
        }
    }

    pub fn cohomology(&self, w: DegreeWindow) -> Result<GradedDims> {
        Ok(self.complex(w.hi + 1)?.cohomology(w)?.dims)
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Module::Free(m) => m.is_finite(),
            Module::Raw(_) => true,
        }
    }

    pub fn as_free(&self) -> Option<&FreeModule> {
        match self {
            Module::Free(m) => Some(m),
            Module::Raw(_) => None,
        }
    }

    /// `Σ^k M`, so that `(Σ^k M)^n = M^{n+k}`.
    pub fn shift(&self, k: i32) -> Module {
        match self {
            Module::Free(m) => Module::Free(m.shift(k)),
            Module::Raw(m) => Module::Raw(m.shift(k)),
        }
    }

    pub fn to_raw(&self) -> Result<RawModule> {
        match self {
            Module::Free(m) => m.to_raw(),
            Module::Raw(m) => Ok(m.clone()),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Module::Free(m) => m.to_json(),
            Module::Raw(m) => m.to_json(),
        }
    }

    pub fn from_json(v: &Value) -> Result<Module> {
        let algebra = Arc::new(DgAlgebra::from_json(v.get("algebra").ok_or_else(|| Error::Parse("module needs an algebra".into()))?)?);
        match v.get("kind").and_then(Value::as_str) {
            Some("free") | None => {
                let mut gens = Vec::new();
                for g in v.get("generators").and_then(Value::as_array).into_iter().flatten() {
                    let label = g.get("label").and_then(Value::as_str).ok_or_else(|| Error::Parse("generator label".into()))?;
                    let degree = g.get("degree").and_then(Value::as_i64).ok_or_else(|| Error::Parse("generator degree".into()))?;
                    gens.push((label.to_string(), degree as i32));
                }
                let mut diff = Vec::new();
                if let Some(obj) = v.get("differential").and_then(Value::as_object) {
                    for (k, e) in obj {
                        diff.push((k.clone(), e.as_str().ok_or_else(|| Error::Parse("differentials are strings".into()))?.to_string()));
                    }
                }
                let pairs: Vec<(&str, &str)> = diff.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                Ok(Module::Free(FreeModule::parse(algebra, gens, &pairs)?))
            }
            Some("raw") => {
                let complex = CochainComplex::from_json(v.get("complex").ok_or_else(|| Error::Parse("raw module needs a complex".into()))?)?;
                let field = algebra.field();
                let mut actions = vec![BTreeMap::new(); algebra.generators().len()];
                if let Some(obj) = v.get("action").and_then(Value::as_object) {
                    for (label, per) in obj {
                        let i = algebra.generator_index(label).ok_or_else(|| Error::Parse(format!("unknown generator {label:?}")))?;
                        for (n, rows) in per.as_object().into_iter().flatten() {
                            let n: i32 = n.parse().map_err(|_| Error::Parse(format!("bad degree {n:?}")))?;
                            let rows = rows
                                .as_array()
                                .ok_or_else(|| Error::Parse("action matrices are row arrays".into()))?
                                .iter()
                                .map(|r| r.as_array().into_iter().flatten().map(|x| field.scalar_from_json(x)).collect::<Result<Vec<_>>>())
                                .collect::<Result<Vec<_>>>()?;
                            actions[i].insert(n, Matrix::from_rows(field, rows)?);
                        }
                    }
                }
                Ok(Module::Raw(RawModule::new(algebra, complex, actions)?))
            }
            Some(k) => Err(Error::Parse(format!("unknown module kind {k:?}"))),
        }
    }
}

fn same_algebra(a: &Arc<DgAlgebra>, b: &Arc<DgAlgebra>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Direct sum; free summands stay free, anything else becomes raw.
pub fn direct_sum(algebra: Arc<DgAlgebra>, ms: &[Module]) -> Result<Module> {
    if ms.iter().any(|m| !same_algebra(m.algebra(), &algebra)) {
        return Err(Error::AlgebraMismatch);
    }
    if ms.iter().all(|m| matches!(m, Module::Free(_))) {
        let mut gens = Vec::new();
        let mut diff = Vec::new();
        let mut complete: Option<i32> = None;
        for m in ms {
            let f = m.as_free().expect("free summand");
            let offset = gens.len();
            gens.extend(f.generators().iter().cloned());
            for j in 0..f.generators().len() {
                diff.push(f.generator_differential(j).iter().map(|(&k, p)| (k + offset, p.clone())).collect());
            }
            if let Some(b) = f.complete_to() {
                complete = Some(complete.map_or(b, |c| c.min(b)));
            }
        }
        return Ok(Module::Free(FreeModule::truncated(algebra, gens, diff, complete)?));
    }
    let raws = ms.iter().map(Module::to_raw).collect::<Result<Vec<_>>>()?;
    let field = algebra.field();
    let degrees: std::collections::BTreeSet<i32> = raws.iter().flat_map(|r| r.complex().space().degrees().collect::<Vec<_>>()).collect();
    let mut space = GradedVectorSpace::new(field);
    for &n in &degrees {
        space.set_degree(n, raws.iter().flat_map(|r| r.complex().space().labels(n).to_vec()).collect());
    }
    let block = |mats: Vec<Matrix>| -> Matrix {
        let rows = mats.iter().map(Matrix::rows).sum();
        let cols = mats.iter().map(Matrix::cols).sum();
        let mut out = Matrix::zeros(field, rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for m in mats {
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    out.set(r0 + i, c0 + j, m.get(i, j).clone());
                }
            }
            r0 += m.rows();
            c0 += m.cols();
        }
        out
    };
    let d = degrees.iter().map(|&n| (n, block(raws.iter().map(|r| r.complex().differential(n)).collect()))).collect();
    let complex = CochainComplex::finite(space, d)?;
    let actions = (0..algebra.generators().len())
        .map(|i| degrees.iter().map(|&n| (n, block(raws.iter().map(|r| r.action_matrix(i, n)).collect()))).collect())
        .collect();
    Ok(Module::Raw(RawModule::new(algebra, complex, actions)?))
}

/// A degree-zero map of modules.
#[derive(Clone, Debug)]
pub struct ChainMap {
    source: Module,
    target: Module,
    data: MapData,
}

#[derive(Clone, Debug)]
enum MapData {
    /// Image of each source generator, in the target basis of its degree.
    OnGenerators(Vec<Vec<Scalar>>),
    Matrices(BTreeMap<i32, Matrix>),
}

impl ChainMap {
    /// Extends generator images linearly; checks `D f(e) = f(D e)`.
    pub fn from_generators(source: FreeModule, target: Module, images: Vec<Vec<Scalar>>) -> Result<ChainMap> {
        if !same_algebra(source.algebra(), target.algebra()) {
            return Err(Error::AlgebraMismatch);
        }
        if images.len() != source.generators().len() {
            return Err(Error::DimensionMismatch("one image per generator".into()));
        }
        for (j, (_, deg)) in source.generators().iter().enumerate() {
            if images[j].len() != target.dim(*deg) {
                return Err(Error::DimensionMismatch(format!("image of generator {j} has the wrong length")));
            }
        }
        let f = ChainMap { source: Module::Free(source), target, data: MapData::OnGenerators(images) };
        let src = f.source.as_free().expect("free source");
        for (j, (_, deg)) in src.generators().iter().enumerate() {
            let lhs = f.target.d_matrix(*deg).apply(&f.image_of(j));
            let rhs = f.apply_free(src.generator_differential(j), deg + 1);
            if lhs != rhs {
                return Err(Error::NotAChainMap(*deg));
            }
        }
        Ok(f)
    }

    /// A map between raw modules given degreewise; checks it is a linear chain map.
    pub fn from_matrices(source: RawModule, target: RawModule, matrices: BTreeMap<i32, Matrix>) -> Result<ChainMap> {
        if !same_algebra(source.algebra(), target.algebra()) {
            return Err(Error::AlgebraMismatch);
        }
        let f = ChainMap { source: Module::Raw(source), target: Module::Raw(target), data: MapData::Matrices(matrices) };
        let (Module::Raw(s), Module::Raw(t)) = (&f.source, &f.target) else { unreachable!() };
        for n in s.complex().space().degrees() {
            let fm = f.matrix(n);
            if fm.rows() != t.dim(n) || fm.cols() != s.dim(n) {
                return Err(Error::DimensionMismatch(format!("map in degree {n} has the wrong shape")));
            }
            if t.complex().differential(n).mul(&fm)? != f.matrix(n + 1).mul(&s.complex().differential(n))? {
                return Err(Error::NotAChainMap(n));
            }
            for i in 0..s.algebra().generators().len() {
                let deg = s.algebra().generators()[i].degree;
                if t.action_matrix(i, n).mul(&fm)? != f.matrix(n + deg).mul(&s.action_matrix(i, n))? {
                    return Err(Error::InvalidModule(format!("map is not linear over the algebra in degree {n}")));
                }
            }
        }
        Ok(f)
    }

    pub fn source(&self) -> &Module {
        &self.source
    }

    pub fn target(&self) -> &Module {
        &self.target
    }

    fn image_of(&self, j: usize) -> Vec<Scalar> {
        match &self.data {
            MapData::OnGenerators(v) => v[j].clone(),
            MapData::Matrices(_) => unreachable!("generator images of a raw map"),
        }
    }

    fn apply_free(&self, el: &FreeElement, n: i32) -> Vec<Scalar> {
        let src = self.source.as_free().expect("free source");
        let mut out = zero_vec(self.target.field(), self.target.dim(n));
        for (&k, p) in el {
            let deg = n - src.generators()[k].1;
            axpy(&mut out, &self.target.field().one(), &self.target.act_poly(src.generators()[k].1, &self.image_of(k), p, deg));
        }
        out
    }

    /// The underlying linear map in degree `n`.
    pub fn matrix(&self, n: i32) -> Matrix {
        let field = self.target.field();
        match &self.data {
            MapData::Matrices(m) => {
                m.get(&n).cloned().unwrap_or_else(|| Matrix::zeros(field, self.target.dim(n), self.source.dim(n)))
            }
            MapData::OnGenerators(_) => {
                let src = self.source.as_free().expect("free source");
                let cols: Vec<Vec<Scalar>> = src
                    .basis(n)
                    .into_iter()
                    .map(|(j, mono)| {
                        let mut el = FreeElement::new();
                        el.insert(j, Poly::term(mono, field.one()));
                        self.apply_free(&el, n)
                    })
                    .collect();
                Matrix::from_columns(field, self.target.dim(n), &cols)
            }
        }
    }

    /// The mapping cone `N ⊕ ΣM`.
    pub fn cone(&self) -> Result<Module> {
        if let (Module::Free(src), Module::Free(tgt)) = (&self.source, &self.target) {
            let offset = tgt.generators().len();
            let mut gens = tgt.generators().to_vec();
            let mut diff: Vec<FreeElement> = (0..offset).map(|j| tgt.generator_differential(j).clone()).collect();
            let minus = src.field().from_i64(-1);
            for (j, (label, deg)) in src.generators().iter().enumerate() {
                gens.push((format!("σ{label}"), deg - 1));
                let mut el = tgt.vector_to_element(&self.image_of(j), *deg);
                for (&k, p) in src.generator_differential(j) {
                    add_to_element(&mut el, k + offset, &p.scaled(&minus));
                }
                diff.push(el);
            }
            let complete = match (src.complete_to(), tgt.complete_to()) {
                (None, None) => None,
                (a, b) => Some(a.map(|x| x - 1).unwrap_or(i32::MAX).min(b.unwrap_or(i32::MAX))),
            };
            return Ok(Module::Free(FreeModule::truncated(tgt.algebra().clone(), gens, diff, complete)?));
        }
        let src = self.source.to_raw()?;
        let tgt = self.target.to_raw()?;
        let field = src.field();
        let degrees: std::collections::BTreeSet<i32> =
            tgt.complex().space().degrees().chain(src.complex().space().degrees().map(|n| n - 1)).collect();
        let mut space = GradedVectorSpace::new(field);
        for &n in &degrees {
            let mut labels = tgt.complex().space().labels(n).to_vec();
            labels.extend(src.complex().space().labels(n + 1).iter().map(|l| format!("σ{l}")));
            space.set_degree(n, labels);
        }
        // d(n, σm) = (dn + f(m), −σ dm)
        let mut d = BTreeMap::new();
        for &n in &degrees {
            let (tn, sn, tn1, sn1) = (tgt.dim(n), src.dim(n + 1), tgt.dim(n + 1), src.dim(n + 2));
            let mut m = Matrix::zeros(field, tn1 + sn1, tn + sn);
            let dt = tgt.complex().differential(n);
            let ds = src.complex().differential(n + 1);
            let f = self.matrix(n + 1);
            for i in 0..tn1 {
                for j in 0..tn {
                    m.set(i, j, dt.get(i, j).clone());
                }
                for j in 0..sn {
                    m.set(i, tn + j, f.get(i, j).clone());
                }
            }
            for i in 0..sn1 {
                for j in 0..sn {
                    m.set(tn1 + i, tn + j, -ds.get(i, j));
                }
            }
            d.insert(n, m);
        }
        let complex = CochainComplex::finite(space, d)?;
        let mut actions = Vec::new();
        for (i, g) in src.algebra().generators().iter().enumerate() {
            let mut per = BTreeMap::new();
            for &n in &degrees {
                let at = tgt.action_matrix(i, n);
                let asrc = src.action_matrix(i, n + 1);
                let mut m = Matrix::zeros(field, tgt.dim(n + g.degree) + src.dim(n + 1 + g.degree), tgt.dim(n) + src.dim(n + 1));
                for r in 0..at.rows() {
                    for c in 0..at.cols() {
                        m.set(r, c, at.get(r, c).clone());
                    }
                }
                for r in 0..asrc.rows() {
                    for c in 0..asrc.cols() {
                        m.set(at.rows() + r, at.cols() + c, asrc.get(r, c).clone());
                    }
                }
                per.insert(n, m);
            }
            actions.push(per);
        }
        Ok(Module::Raw(RawModule::new(src.algebra().clone(), complex, actions)?))
    }
}

/// `F ⊗_A N` for a free `F` and any `N`, stored up to degree `hi`.
///
/// `N` is made a left module by `a·n = (−1)^{|a||n|} n·a`.
pub fn tensor(f: &FreeModule, n: &Module, hi: i32) -> Result<CochainComplex> {
    if !same_algebra(f.algebra(), n.algebra()) {
        return Err(Error::AlgebraMismatch);
    }
    let field = f.field();
    let (Some(flo), Some(nlo)) = (f.min_generator_degree(), n.lo()) else {
        return Ok(CochainComplex::zero(field));
    };
    let lo = flo + nlo;
    let finite = f.complete_to().is_none() && n.complete_to().is_none() && n.top().is_some();
    let (top, above) = if finite {
        (f.max_generator_degree().unwrap_or(flo) + n.top().unwrap_or(nlo), Beyond::Zero)
    } else {
        let mut t = hi;
        if let Some(b) = f.complete_to() {
            t = t.min(b + nlo);
        }
        if let Some(b) = n.complete_to() {
            t = t.min(b + flo);
        }
        (t, Beyond::Unknown)
    };
    let top = top.max(lo);
    let gens = f.generators();
    let layout = |t: i32| -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for (j, (_, deg)) in gens.iter().enumerate() {
            for b in 0..n.dim(t - deg) {
                v.push((j, b));
            }
        }
        v
    };
    let mut space = GradedVectorSpace::new(field);
    let mut layouts = BTreeMap::new();
    for t in lo..=top + 1 {
        let l = layout(t);
        if t <= top {
            let labels: Vec<String> = l
                .iter()
                .map(|&(j, b)| format!("{}⊗{}", gens[j].0, n.labels(t - gens[j].1)[b]))
                .collect();
            space.set_degree(t, labels);
        }
        layouts.insert(t, l);
    }
    let mut d = BTreeMap::new();
    for t in lo..top {
        let src = &layouts[&t];
        let tgt = &layouts[&(t + 1)];
        let pos: HashMap<(usize, usize), usize> = tgt.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut m = Matrix::zeros(field, tgt.len(), src.len());
        for (col, &(j, b)) in src.iter().enumerate() {
            let nd = t - gens[j].1;
            let mut e = zero_vec(field, n.dim(nd));
            e[b] = field.one();
            let db = n.d_matrix(nd).apply(&e);
            let sign = field.sign(gens[j].1 as i64);
            for (row, c) in db.iter().enumerate() {
                if !c.is_zero() {
                    m.add_to(pos[&(j, row)], col, &(c * &sign));
                }
            }
            for (&k, p) in f.generator_differential(j) {
                for (mono, coef) in p.terms() {
                    let pd = f.algebra().monomial_degree(mono);
                    let s = field.sign(pd as i64 * nd as i64);
                    let v = n.act(nd, &e, mono);
                    for (row, c) in v.iter().enumerate() {
                        if !c.is_zero() {
                            m.add_to(pos[&(k, row)], col, &(&(c * coef) * &s));
                        }
                    }
                }
            }
        }
        d.insert(t, m);
    }
    CochainComplex::new(space, d, (lo, top.max(lo + 1)), Beyond::Zero, above)
}

/// Maps out of a free module, degree by degree.
#[derive(Clone, Debug)]
pub struct MorphismComplex {
    pub complex: CochainComplex,
    layout: BTreeMap<i32, Vec<(usize, usize)>>,
}

impl MorphismComplex {
    pub fn cohomology(&self, w: DegreeWindow) -> Result<GradedDims> {
        Ok(self.complex.cohomology(w)?.dims)
    }

    /// Per-generator images of the degree-`n` morphism with coordinates `v`.
    pub fn images(&self, source: &FreeModule, target: &Module, n: i32, v: &[Scalar]) -> Vec<Vec<Scalar>> {
        let mut out: Vec<Vec<Scalar>> =
            source.generators().iter().map(|(_, deg)| zero_vec(target.field(), target.dim(deg + n))).collect();
        if let Some(l) = self.layout.get(&n) {
            for (i, &(j, b)) in l.iter().enumerate() {
                out[j][b] = &out[j][b] + &v[i];
            }
        }
        out
    }

    pub fn vector(&self, n: i32, images: &[Vec<Scalar>]) -> Vec<Scalar> {
        self.layout.get(&n).map_or_else(Vec::new, |l| l.iter().map(|&(j, b)| images[j][b].clone()).collect())
    }
}

/// `Hom_A(M, N)` for free `M`: `(Df)(e_j) = d f(e_j) − (−1)^n f(D e_j)`.
pub fn hom_complex(m: &Module, n: &Module, w: DegreeWindow) -> Result<MorphismComplex> {
    let Module::Free(src) = m else {
        return Err(Error::SourceNotFree);
    };
    if src.complete_to().is_some() {
        return Err(Error::SourceNotFree);
    }
    if !same_algebra(src.algebra(), n.algebra()) {
        return Err(Error::AlgebraMismatch);
    }
    let field = src.field();
    let (Some(gmin), Some(gmax), Some(nlo)) = (src.min_generator_degree(), src.max_generator_degree(), n.lo()) else {
        return Ok(MorphismComplex { complex: CochainComplex::zero(field), layout: BTreeMap::new() });
    };
    let lo = nlo - gmax;
    let (top, above) = match (n.top(), n.complete_to()) {
        (Some(t), None) => (t - gmin, Beyond::Zero),
        (_, b) => (b.map_or(w.hi + 1, |b| (b - gmax).min(w.hi + 1)), Beyond::Unknown),
    };
    let top = top.max(lo);
    let gens = src.generators();
    let mut layout = BTreeMap::new();
    let mut space = GradedVectorSpace::new(field);
    for k in lo..=top + 1 {
        let mut l = Vec::new();
        let mut labels = Vec::new();
        for (j, (label, deg)) in gens.iter().enumerate() {
            let tl = n.labels(deg + k);
            for (b, t) in tl.iter().enumerate() {
                l.push((j, b));
                labels.push(format!("{label}↦{t}"));
            }
        }
        if k <= top {
            space.set_degree(k, labels);
        }
        layout.insert(k, l);
    }
    let mut d = BTreeMap::new();
    for k in lo..top {
        let tgt = &layout[&(k + 1)];
        let pos: HashMap<(usize, usize), usize> = tgt.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut mat = Matrix::zeros(field, tgt.len(), layout[&k].len());
        let sign = -field.sign(k as i64);
        for (col, &(jk, b)) in layout[&k].iter().enumerate() {
            let nd = gens[jk].1 + k;
            let mut e = zero_vec(field, n.dim(nd));
            e[b] = field.one();
            for (row, c) in n.d_matrix(nd).apply(&e).iter().enumerate() {
                if !c.is_zero() {
                    mat.add_to(pos[&(jk, row)], col, c);
                }
            }
            for (j, (_, deg)) in gens.iter().enumerate() {
                if let Some(p) = src.generator_differential(j).get(&jk) {
                    let v = n.act_poly(nd, &e, p, deg + 1 - gens[jk].1);
                    for (row, c) in v.iter().enumerate() {
                        if !c.is_zero() {
                            mat.add_to(pos[&(j, row)], col, &(c * &sign));
                        }
                    }
                }
            }
        }
        d.insert(k, mat);
    }
    let complex = CochainComplex::new(space, d, (lo, top.max(lo + 1)), Beyond::Zero, above)?;
    Ok(MorphismComplex { complex, layout })
}

/// Nontrivial idempotents of `H⁰(End(M))`, as coordinates in its basis.
///
/// Over `𝔽_p` the search is exhaustive when `p^dim ≤ 6561`; otherwise it
/// covers coefficient vectors in `{−1, 0, 1}^dim`.
pub fn find_idempotents(m: &Module) -> Result<Vec<Vec<Scalar>>> {
    let Module::Free(src) = m else {
        return Err(Error::SourceNotFree);
    };
    if src.generators().is_empty() {
        return Ok(Vec::new());
    }
    let field = src.field();
    let w = DegreeWindow::new(-1, 1)?;
    let end = hom_complex(m, m, w)?;
    let h0 = end.complex.degree_cohomology(0, w)?;
    let k = h0.representatives.len();
    if k <= 1 {
        return Ok(Vec::new());
    }
    if k > 8 {
        return Err(Error::EndTooLarge(k));
    }
    let compose = |f: &[Scalar], g: &[Scalar]| -> Vec<Scalar> {
        // (g ∘ f)(e_j) = g applied to f(e_j) = Σ e_k·p ↦ Σ g(e_k)·p
        let fi = end.images(src, m, 0, f);
        let gi = end.images(src, m, 0, g);
        let out: Vec<Vec<Scalar>> = src
            .generators()
            .iter()
            .enumerate()
            .map(|(j, (_, deg))| {
                let el = src.vector_to_element(&fi[j], *deg);
                let mut v = zero_vec(field, src.dim(*deg));
                for (&kk, p) in &el {
                    let gk = src.generators()[kk].1;
                    axpy(&mut v, &field.one(), &m.act_poly(gk, &gi[kk], p, deg - gk));
                }
                v
            })
            .collect();
        end.vector(0, &out)
    };
    let coords = |v: &[Scalar]| h0.coordinates(field, v).expect("cocycle");
    let reps = &h0.representatives;
    let mut table = vec![vec![Vec::new(); k]; k];
    for a in 0..k {
        for b in 0..k {
            table[a][b] = coords(&compose(&reps[b], &reps[a]));
        }
    }
    let id: Vec<Vec<Scalar>> = (0..src.generators().len()).map(|j| src.generator_vector(j)).collect();
    let one = coords(&end.vector(0, &id));
    let values: Vec<Scalar> = match field {
        FieldTag::Prime(p) if (p as u64).pow(k as u32) <= 6561 => (0..p as i64).map(|i| field.from_i64(i)).collect(),
        _ => [0, 1, -1].iter().map(|&i| field.from_i64(i)).collect(),
    };
    let mut found = Vec::new();
    let mut idx = vec![0usize; k];
    loop {
        let c: Vec<Scalar> = idx.iter().map(|&i| values[i].clone()).collect();
        if c.iter().any(|x| !x.is_zero()) && c != one {
            let mut sq = zero_vec(field, k);
            for a in 0..k {
                for b in 0..k {
                    let s = &c[a] * &c[b];
                    if !s.is_zero() {
                        axpy(&mut sq, &s, &table[a][b]);
                    }
                }
            }
            if sq == c {
                found.push(c);
            }
        }
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok(found);
            }
            idx[pos] += 1;
            if idx[pos] < values.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(d: i32) -> Arc<DgAlgebra> {
        Arc::new(DgAlgebra::sphere_cohomology(d, FieldTag::Rationals))
    }

    fn w() -> DegreeWindow {
        DegreeWindow::new(-20, 40).unwrap()
    }

    fn z1(a: &Arc<DgAlgebra>, d: i32) -> FreeModule {
        FreeModule::parse(a.clone(), vec![("e0".into(), 0), ("e1".into(), d - 1)], &[("e1", &format!("e0*x{}", crate::algebra::subscript(d as i64)))]).unwrap()
    }

    #[test]
    fn cone_of_x_is_the_first_molecule() {
        let a = sphere(4);
        let src = FreeModule::algebra_module(a.clone()).shift(-4);
        let tgt = Module::Free(FreeModule::algebra_module(a.clone()));
        let x = tgt.as_free().unwrap().element_to_vector(&FreeElement::from([(0, a.generator_poly(0))]), 4);
        let f = ChainMap::from_generators(src, tgt, vec![x]).unwrap();
        let c = f.cone().unwrap();
        assert_eq!(c.cohomology(w()).unwrap(), "0:1,7:1".parse().unwrap());
    }

    #[test]
    fn cones_of_identity_and_zero() {
        let a = sphere(4);
        let m = FreeModule::algebra_module(a.clone());
        let one = m.generator_vector(0);
        let id = ChainMap::from_generators(m.clone(), Module::Free(m.clone()), vec![one.clone()]).unwrap();
        assert!(id.cone().unwrap().cohomology(w()).unwrap().is_zero());
        let zero = ChainMap::from_generators(m.clone(), Module::Free(m.clone()), vec![zero_vec(a.field(), 1)]).unwrap();
        assert_eq!(zero.cone().unwrap().cohomology(w()).unwrap(), "-1:1,0:1,3:1,4:1".parse().unwrap());
        let raw = m.to_raw().unwrap();
        let rid = ChainMap::from_matrices(raw.clone(), raw.clone(), [(0, Matrix::identity(a.field(), 1)), (4, Matrix::identity(a.field(), 1))].into());
        assert!(rid.unwrap().cone().unwrap().cohomology(w()).unwrap().is_zero());
    }

    #[test]
    fn sums_and_shifts() {
        let a = sphere(4);
        let m = Module::Free(FreeModule::algebra_module(a.clone()));
        let s = direct_sum(a.clone(), &[m.clone(), m.shift(1)]).unwrap();
        assert_eq!(s.cohomology(w()).unwrap(), "-1:1,0:1,3:1,4:1".parse().unwrap());
        assert!(direct_sum(a.clone(), &[]).unwrap().cohomology(w()).unwrap().is_zero());
        let raw = direct_sum(a.clone(), &[Module::Raw(RawModule::ground_field(a.clone())), m.clone()]).unwrap();
        assert_eq!(raw.cohomology(w()).unwrap(), "0:2,4:1".parse().unwrap());
        let back = m.shift(3).shift(-3);
        assert_eq!(back.cohomology(w()).unwrap(), m.cohomology(w()).unwrap());
        assert_eq!(m.shift(2).cohomology(w()).unwrap(), m.cohomology(w()).unwrap().shifted(2));
    }

    #[test]
    fn hom_out_of_free_rank_one() {
        let a = sphere(4);
        let m = Module::Free(FreeModule::algebra_module(a.clone()));
        assert_eq!(hom_complex(&m, &m, w()).unwrap().cohomology(w()).unwrap(), "0:1,4:1".parse().unwrap());
        let z = Module::Free(z1(&a, 4));
        assert_eq!(hom_complex(&m, &z, w()).unwrap().complex.cohomology_in_degree(0, w()).unwrap(), 1);
        assert_eq!(hom_complex(&Module::Raw(RawModule::ground_field(a)), &m, w()).unwrap_err(), Error::SourceNotFree);
    }

    #[test]
    fn idempotents() {
        let a = sphere(4);
        let m = Module::Free(FreeModule::algebra_module(a.clone()));
        let s = direct_sum(a.clone(), &[m.clone(), m.shift(1)]).unwrap();
        assert_eq!(find_idempotents(&s).unwrap().len(), 2);
        assert!(find_idempotents(&Module::Free(z1(&a, 4))).unwrap().is_empty());
        assert!(find_idempotents(&direct_sum(a.clone(), &[]).unwrap()).unwrap().is_empty());
        let b = sphere(7);
        let m7 = Module::Free(FreeModule::algebra_module(b.clone()));
        let two = direct_sum(b.clone(), &[m7.clone(), m7.shift(-3)]).unwrap();
        let end = hom_complex(&two, &two, w()).unwrap();
        assert_eq!(end.complex.cohomology_in_degree(0, w()).unwrap(), 2);
    }

    #[test]
    fn tensor_with_ground_field() {
        let a = sphere(4);
        let z = z1(&a, 4);
        let k = Module::Raw(RawModule::ground_field(a.clone()));
        let c = tensor(&z, &k, 30).unwrap();
        assert_eq!(c.cohomology(w()).unwrap().dims, "0:1,3:1".parse().unwrap());
    }

    #[test]
    fn rejects_bad_presentations() {
        let a = sphere(4);
        assert!(FreeModule::parse(a.clone(), vec![("e0".into(), 0), ("e1".into(), 2)], &[("e1", "e0*x₄")]).is_err());
        let mut space = GradedVectorSpace::new(a.field());
        space.set_degree(0, vec!["u".into()]);
        space.set_degree(4, vec!["v".into()]);
        let c = CochainComplex::finite(space, BTreeMap::new()).unwrap();
        let act = BTreeMap::from([(0, Matrix::identity(a.field(), 1)), (4, Matrix::zeros(a.field(), 0, 1))]);
        assert!(RawModule::new(a.clone(), c.clone(), vec![act]).is_ok());
        let json = Module::Free(z1(&a, 4)).to_json();
        assert_eq!(Module::from_json(&json).unwrap().cohomology(w()).unwrap(), "0:1,7:1".parse().unwrap());
    }
}
