//! Free graded-commutative DG algebras on exterior, polynomial and
//! divided-power generators, evaluated degree by degree.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::{FieldTag, Scalar};
use crate::graded::{Beyond, CochainComplex, DegreeWindow, GradedVectorSpace};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// Squares to zero, whatever the parity of its degree.
    Exterior,
    Polynomial,
    /// Basis `γ_i`, with `γ_i γ_j = binom(i+j, i) γ_{i+j}`.
    DividedPower,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Generator {
    pub label: String,
    pub degree: i32,
    pub kind: GeneratorKind,
}

impl Generator {
    pub fn new(label: impl Into<String>, degree: i32, kind: GeneratorKind) -> Generator {
        Generator { label: label.into(), degree, kind }
    }
}

/// Exponent of each generator, in generator order. For divided-power
/// generators the entry is the index `i` of `γ_i`.
pub type Monomial = Vec<u32>;

/// A linear combination of monomials.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, Scalar>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn term(m: Monomial, c: Scalar) -> Poly {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(x) => {
                *x = &*x + &c;
                if x.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn scaled(&self, s: &Scalar) -> Poly {
        let mut p = Poly::zero();
        for (m, c) in &self.terms {
            p.add_term(m.clone(), c * s);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

struct DegreeBasis {
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

/// A finite presentation of a free graded-commutative DG algebra.
pub struct DgAlgebra {
    field: FieldTag,
    gens: Vec<Generator>,
    diff: Vec<Poly>,
    cache: RwLock<HashMap<i32, Arc<DegreeBasis>>>,
}

impl Clone for DgAlgebra {
    fn clone(&self) -> Self {
        DgAlgebra { field: self.field, gens: self.gens.clone(), diff: self.diff.clone(), cache: RwLock::default() }
    }
}

impl PartialEq for DgAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.gens == other.gens && self.diff == other.diff
    }
}

impl Eq for DgAlgebra {}

impl fmt::Debug for DgAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DgAlgebra").field("field", &self.field).field("gens", &self.gens).finish()
    }
}

fn superscript(n: u32) -> String {
    const SUP: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    n.to_string().chars().map(|c| SUP[c.to_digit(10).unwrap() as usize]).collect()
}

pub(crate) fn subscript(n: i64) -> String {
    const SUB: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];
    let s: String = n.unsigned_abs().to_string().chars().map(|c| SUB[c.to_digit(10).unwrap() as usize]).collect();
    if n < 0 {
        format!("₋{s}")
    } else {
        s
    }
}

impl DgAlgebra {
    /// Validates degrees, kinds and `D² = 0` on generators.
    pub fn new(field: FieldTag, gens: Vec<Generator>, diff: Vec<Poly>) -> Result<DgAlgebra> {
        if diff.len() != gens.len() {
            return Err(Error::InvalidAlgebra("one differential value per generator".into()));
        }
        for g in &gens {
            if g.degree < 1 {
                return Err(Error::InvalidAlgebra(format!("generator {} has degree {} < 1", g.label, g.degree)));
            }
            if g.kind != GeneratorKind::Exterior && g.degree % 2 != 0 && field.characteristic() != 2 {
                return Err(Error::OddGenerator(g.degree));
            }
        }
        let a = DgAlgebra { field, gens, diff, cache: RwLock::default() };
        for (i, p) in a.diff.iter().enumerate() {
            for (m, c) in p.terms() {
                if m.len() != a.gens.len() {
                    return Err(Error::InvalidAlgebra("monomial length differs from generator count".into()));
                }
                if c.field() != field {
                    return Err(Error::FieldMismatch(field, c.field()));
                }
                if a.monomial_degree(m) != a.gens[i].degree + 1 {
                    return Err(Error::InvalidAlgebra(format!("D({}) is not of degree {}", a.gens[i].label, a.gens[i].degree + 1)));
                }
            }
        }
        for (i, g) in a.gens.iter().enumerate() {
            let dd = a.d_poly(&a.diff[i]);
            if !dd.is_zero() {
                return Err(Error::InvalidAlgebra(format!("D² ≠ 0 on {}", g.label)));
            }
            if g.kind == GeneratorKind::Exterior && g.degree % 2 == 0 && !a.diff[i].is_zero() {
                // x² = 0 forces x·D(x) = 0 when x is even.
                let x = Poly::term(a.unit_exponent(i, 1), field.one());
                if field.characteristic() != 2 && !a.mul(&x, &a.diff[i]).is_zero() {
                    return Err(Error::InvalidAlgebra(format!("D is incompatible with {}² = 0", g.label)));
                }
            }
        }
        Ok(a)
    }

    /// Parses differential values written as strings, e.g. `"x^2"` or `"rho*x - xi"`.
    pub fn parse(field: FieldTag, gens: Vec<Generator>, diff: &[(&str, &str)]) -> Result<DgAlgebra> {
        let shell = DgAlgebra { field, gens: gens.clone(), diff: vec![Poly::zero(); gens.len()], cache: RwLock::default() };
        let mut values = vec![Poly::zero(); gens.len()];
        for (label, expr) in diff {
            let i = shell.generator_index(label).ok_or_else(|| Error::Parse(format!("unknown generator {label:?}")))?;
            values[i] = shell.parse_poly(expr)?;
        }
        DgAlgebra::new(field, gens, values)
    }

    /// `H*(S^d)`: one generator of degree `d` squaring to zero.
    pub fn sphere_cohomology(d: i32, field: FieldTag) -> DgAlgebra {
        let g = Generator::new(format!("x{}", subscript(d as i64)), d, GeneratorKind::Exterior);
        DgAlgebra::new(field, vec![g], vec![Poly::zero()]).expect("sphere cohomology")
    }

    /// A polynomial algebra with zero differential.
    pub fn polynomial(field: FieldTag, degrees: &[i32], prefix: &str) -> Result<DgAlgebra> {
        let gens = degrees
            .iter()
            .map(|&d| Generator::new(format!("{prefix}{}", subscript(d as i64)), d, GeneratorKind::Polynomial))
            .collect::<Vec<_>>();
        let n = gens.len();
        DgAlgebra::new(field, gens, vec![Poly::zero(); n])
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn generator_differential(&self, i: usize) -> &Poly {
        &self.diff[i]
    }

    pub fn generator_index(&self, label: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.label == label)
    }

    pub fn has_zero_differential(&self) -> bool {
        self.diff.iter().all(Poly::is_zero)
    }

    /// Finite dimensional exactly when every generator is exterior.
    pub fn top_degree(&self) -> Option<i32> {
        self.gens.iter().all(|g| g.kind == GeneratorKind::Exterior).then(|| self.gens.iter().map(|g| g.degree).sum())
    }

    /// No generator in degree 1 (all degrees are already positive).
    pub fn is_simply_connected(&self) -> bool {
        self.gens.iter().all(|g| g.degree >= 2)
    }

    pub fn unit(&self) -> Monomial {
        vec![0; self.gens.len()]
    }

    pub fn unit_exponent(&self, i: usize, e: u32) -> Monomial {
        let mut m = self.unit();
        m[i] = e;
        m
    }

    pub fn generator_poly(&self, i: usize) -> Poly {
        Poly::term(self.unit_exponent(i, 1), self.field.one())
    }

    pub fn one(&self) -> Poly {
        Poly::term(self.unit(), self.field.one())
    }

    pub fn monomial_degree(&self, m: &Monomial) -> i32 {
        m.iter().zip(&self.gens).map(|(&e, g)| e as i32 * g.degree).sum()
    }

    pub fn monomial_label(&self, m: &Monomial) -> String {
        let parts: Vec<String> = m
            .iter()
            .zip(&self.gens)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, g)| match (g.kind, e) {
                (GeneratorKind::DividedPower, _) => format!("γ{}({})", subscript(e as i64), g.label),
                (_, 1) => g.label.clone(),
                _ => format!("{}{}", g.label, superscript(e)),
            })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("·")
        }
    }

    fn basis_entry(&self, n: i32) -> Arc<DegreeBasis> {
        if let Some(b) = self.cache.read().expect("algebra cache").get(&n) {
            return b.clone();
        }
        let mut monomials = Vec::new();
        if n >= 0 {
            let mut cur = self.unit();
            self.enumerate(0, n, &mut cur, &mut monomials);
        }
        monomials.sort();
        monomials.reverse();
        let index = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let b = Arc::new(DegreeBasis { monomials, index });
        self.cache.write().expect("algebra cache").insert(n, b.clone());
        b
    }

    fn enumerate(&self, i: usize, remaining: i32, cur: &mut Monomial, out: &mut Vec<Monomial>) {
        if i == self.gens.len() {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let g = &self.gens[i];
        let max = match g.kind {
            GeneratorKind::Exterior => 1,
            _ => (remaining / g.degree) as u32,
        };
        for e in 0..=max {
            let used = e as i32 * g.degree;
            if used > remaining {
                break;
            }
            cur[i] = e;
            self.enumerate(i + 1, remaining - used, cur, out);
        }
        cur[i] = 0;
    }

    pub fn dim(&self, n: i32) -> usize {
        self.basis_entry(n).monomials.len()
    }

    pub fn basis(&self, n: i32) -> Vec<Monomial> {
        self.basis_entry(n).monomials.clone()
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.basis_entry(self.monomial_degree(m)).index.get(m).copied()
    }

    /// Product of two monomials, `None` when it vanishes.
    pub fn mul_monomials(&self, a: &Monomial, b: &Monomial) -> Option<(Scalar, Monomial)> {
        let mut coef = self.field.one();
        let mut out = Vec::with_capacity(a.len());
        for (i, g) in self.gens.iter().enumerate() {
            let e = a[i] + b[i];
            match g.kind {
                GeneratorKind::Exterior if e > 1 => return None,
                GeneratorKind::DividedPower => {
                    coef = &coef * &self.field.binomial(e as u64, a[i] as u64);
                }
                _ => {}
            }
            out.push(e);
        }
        // Moving b's factors left past the later factors of a.
        let mut odd_after = 0u32;
        let mut parity = 0u32;
        for i in (0..self.gens.len()).rev() {
            let deg = self.gens[i].degree as u32;
            if (b[i] * deg) % 2 == 1 {
                parity += odd_after;
            }
            if (a[i] * deg) % 2 == 1 {
                odd_after += 1;
            }
        }
        if parity % 2 == 1 {
            coef = -coef;
        }
        if coef.is_zero() {
            None
        } else {
            Some((coef, out))
        }
    }

    pub fn mul(&self, p: &Poly, q: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (a, x) in p.terms() {
            for (b, y) in q.terms() {
                if let Some((c, m)) = self.mul_monomials(a, b) {
                    out.add_term(m, &(x * y) * &c);
                }
            }
        }
        out
    }

    pub fn pow(&self, p: &Poly, k: u32) -> Poly {
        (0..k).fold(self.one(), |acc, _| self.mul(&acc, p))
    }

    /// The differential of a monomial, by the graded Leibniz rule.
    pub fn d_monomial(&self, m: &Monomial) -> Poly {
        let mut out = Poly::zero();
        let mut sign_deg = 0i64;
        for i in 0..self.gens.len() {
            let e = m[i];
            if e == 0 {
                continue;
            }
            let g = &self.gens[i];
            if !self.diff[i].is_zero() {
                let lower = self.unit_exponent(i, e - 1);
                let factor = match g.kind {
                    GeneratorKind::Polynomial => self.field.from_i64(e as i64),
                    _ => self.field.one(),
                };
                let dpart = self.mul(&Poly::term(lower, factor), &self.diff[i]);
                let mut prefix = self.unit();
                prefix[..i].copy_from_slice(&m[..i]);
                let mut suffix = self.unit();
                suffix[i + 1..].copy_from_slice(&m[i + 1..]);
                let term = self.mul(&self.mul(&Poly::term(prefix, self.field.sign(sign_deg)), &dpart), &Poly::term(suffix, self.field.one()));
                out.add(&term);
            }
            sign_deg += e as i64 * g.degree as i64;
        }
        out
    }

    pub fn d_poly(&self, p: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in p.terms() {
            out.add(&self.d_monomial(m).scaled(c));
        }
        out
    }

    /// Coordinates of a homogeneous polynomial of degree `n`.
    pub fn to_vector(&self, p: &Poly, n: i32) -> Vec<Scalar> {
        let b = self.basis_entry(n);
        let mut v = vec![self.field.zero(); b.monomials.len()];
        for (m, c) in p.terms() {
            let i = *b.index.get(m).expect("monomial of the wrong degree");
            v[i] = &v[i] + c;
        }
        v
    }

    pub fn from_vector(&self, v: &[Scalar], n: i32) -> Poly {
        let b = self.basis_entry(n);
        let mut p = Poly::zero();
        for (i, c) in v.iter().enumerate() {
            p.add_term(b.monomials[i].clone(), c.clone());
        }
        p
    }

    /// Matrix of `D : A^n -> A^{n+1}`.
    pub fn differential_matrix(&self, n: i32) -> Matrix {
        let src = self.basis(n);
        let mut m = Matrix::zeros(self.field, self.dim(n + 1), src.len());
        for (j, mono) in src.iter().enumerate() {
            for (t, c) in self.d_monomial(mono).terms() {
                m.add_to(self.index_of(t).expect("target monomial"), j, c);
            }
        }
        m
    }

    /// The algebra as a cochain complex on degrees `0..=hi`.
    pub fn complex(&self, hi: i32) -> CochainComplex {
        let top = self.top_degree();
        let hi = top.map_or(hi, |t| t.min(hi).max(0));
        let mut space = GradedVectorSpace::new(self.field);
        let mut d = BTreeMap::new();
        for n in 0..=hi {
            space.set_degree(n, self.basis(n).iter().map(|m| self.monomial_label(m)).collect());
            if n < hi {
                d.insert(n, self.differential_matrix(n));
            }
        }
        let above = if top.is_some_and(|t| t <= hi) { Beyond::Zero } else { Beyond::Unknown };
        CochainComplex::new(space, d, (0, hi.max(1)), Beyond::Zero, above).expect("algebra differential squares to zero")
    }

    pub fn cohomology_dims(&self, w: DegreeWindow) -> Result<crate::graded::GradedDims> {
        Ok(self.complex(w.hi).cohomology(w)?.dims)
    }

    /// Parses `"2/3*x^2*y - xi + γ2(w)"`-style expressions; `w[2]` also denotes `γ₂(w)`.
    pub fn parse_poly(&self, s: &str) -> Result<Poly> {
        let mut out = Poly::zero();
        let terms = split_terms(s);
        for (neg, t) in terms {
            let mut coef = self.field.one();
            let mut mono = self.unit();
            for factor in t.split('*').map(str::trim).filter(|f| !f.is_empty()) {
                if factor.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                    coef = &coef * &self.field.parse_scalar(factor)?;
                    continue;
                }
                let (name, exp) = parse_factor(factor)?;
                let i = self.generator_index(&name).ok_or_else(|| Error::Parse(format!("unknown generator {name:?}")))?;
                mono[i] += exp;
            }
            if mono.iter().zip(&self.gens).any(|(&e, g)| g.kind == GeneratorKind::Exterior && e > 1) {
                continue;
            }
            out.add_term(mono, if neg { -coef } else { coef });
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let diff: serde_json::Map<String, Value> = self
            .gens
            .iter()
            .zip(&self.diff)
            .filter(|(_, p)| !p.is_zero())
            .map(|(g, p)| (g.label.clone(), Value::String(self.poly_string(p))))
            .collect();
        json!({"field": self.field.to_string(), "generators": self.gens, "differential": diff})
    }

    pub fn from_json(v: &Value) -> Result<DgAlgebra> {
        let field: FieldTag =
            v.get("field").and_then(Value::as_str).ok_or_else(|| Error::Parse("algebra needs a field".into()))?.parse()?;
        let gens: Vec<Generator> = serde_json::from_value(v.get("generators").cloned().unwrap_or(Value::Array(vec![])))
            .map_err(|e| Error::Parse(e.to_string()))?;
        let mut diff = Vec::new();
        if let Some(obj) = v.get("differential").and_then(Value::as_object) {
            for (k, e) in obj {
                diff.push((k.clone(), e.as_str().ok_or_else(|| Error::Parse("differentials are strings".into()))?.to_string()));
            }
        }
        let pairs: Vec<(&str, &str)> = diff.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        DgAlgebra::parse(field, gens, &pairs)
    }

    /// A parseable rendering of a polynomial.
    pub fn poly_string(&self, p: &Poly) -> String {
        if p.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (m, c)) in p.terms().enumerate() {
            let neg = crate::field::is_negative(c);
            let c = if neg { -c } else { c.clone() };
            if k > 0 {
                out.push_str(if neg { " - " } else { " + " });
            } else if neg {
                out.push('-');
            }
            let factors: Vec<String> = m
                .iter()
                .zip(&self.gens)
                .filter(|(&e, _)| e > 0)
                .map(|(&e, g)| match (g.kind, e) {
                    (GeneratorKind::DividedPower, _) => format!("{}[{e}]", g.label),
                    (_, 1) => g.label.clone(),
                    _ => format!("{}^{e}", g.label),
                })
                .collect();
            match (c.is_one(), factors.is_empty()) {
                (true, true) => out.push('1'),
                (true, false) => out.push_str(&factors.join("*")),
                (false, true) => out.push_str(&c.to_string()),
                (false, false) => out.push_str(&format!("{c}*{}", factors.join("*"))),
            }
        }
        out
    }
}

/// Splits `"a - 2*b + c"` into signed terms.
pub(crate) fn split_terms(s: &str) -> Vec<(bool, String)> {
    let cleaned = s.replace('−', "-");
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut cur = String::new();
    let mut neg = false;
    for ch in cleaned.chars() {
        if (ch == '+' || ch == '-') && !cur.trim().is_empty() && !cur.trim_end().ends_with('^') {
            terms.push((neg, std::mem::take(&mut cur)));
            neg = ch == '-';
        } else if (ch == '+' || ch == '-') && cur.trim().is_empty() {
            neg ^= ch == '-';
        } else {
            cur.push(ch);
        }
    }
    if !cur.trim().is_empty() {
        terms.push((neg, cur));
    }
    terms
}

pub(crate) fn parse_factor(f: &str) -> Result<(String, u32)> {
    let bad = || Error::Parse(format!("bad factor {f:?}"));
    if let Some((name, rest)) = f.split_once('[') {
        let k = rest.strip_suffix(']').ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        return Ok((name.trim().to_string(), k));
    }
    if let Some((name, e)) = f.split_once('^') {
        return Ok((name.trim().to_string(), e.trim().parse().map_err(|_| bad())?));
    }
    Ok((f.to_string(), 1))
}

/// A multiplicative map of DG algebras, given on generators.
#[derive(Clone, Debug)]
pub struct AlgebraMap {
    pub source: Arc<DgAlgebra>,
    pub target: Arc<DgAlgebra>,
    images: Vec<Poly>,
}

impl AlgebraMap {
    /// Checks degrees, the square-zero relations and commutation with `D`.
    pub fn new(source: Arc<DgAlgebra>, target: Arc<DgAlgebra>, images: Vec<Poly>) -> Result<AlgebraMap> {
        if source.field() != target.field() {
            return Err(Error::FieldMismatch(source.field(), target.field()));
        }
        if images.len() != source.generators().len() {
            return Err(Error::InvalidAlgebra("one image per generator".into()));
        }
        for (g, p) in source.generators().iter().zip(&images) {
            if p.terms().any(|(m, _)| target.monomial_degree(m) != g.degree) {
                return Err(Error::InvalidAlgebra(format!("image of {} has the wrong degree", g.label)));
            }
            if g.kind == GeneratorKind::DividedPower && source.field().characteristic() != 0 {
                return Err(Error::InvalidAlgebra("maps out of divided powers need characteristic 0".into()));
            }
            if g.kind == GeneratorKind::Exterior && !target.mul(p, p).is_zero() {
                return Err(Error::InvalidAlgebra(format!("image of {} does not square to zero", g.label)));
            }
        }
        let f = AlgebraMap { source, target, images };
        for i in 0..f.source.generators().len() {
            let lhs = f.target.d_poly(&f.images[i]);
            let rhs = f.apply(f.source.generator_differential(i));
            let mut diff = lhs;
            diff.add(&rhs.scaled(&f.source.field().from_i64(-1)));
            if !diff.is_zero() {
                return Err(Error::InvalidAlgebra(format!("map does not commute with D on {}", f.source.generators()[i].label)));
            }
        }
        Ok(f)
    }

    pub fn image(&self, i: usize) -> &Poly {
        &self.images[i]
    }

    pub fn apply_monomial(&self, m: &Monomial) -> Poly {
        let field = self.source.field();
        let mut acc = self.target.one();
        for (i, &e) in m.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let mut p = self.target.pow(&self.images[i], e);
            if self.source.generators()[i].kind == GeneratorKind::DividedPower {
                let fact = (1..=e as i64).fold(field.one(), |a, k| &a * &field.from_i64(k));
                p = p.scaled(&fact.inv().expect("characteristic 0"));
            }
            acc = self.target.mul(&acc, &p);
        }
        acc
    }

    pub fn apply(&self, p: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in p.terms() {
            out.add(&self.apply_monomial(m).scaled(c));
        }
        out
    }
}
