//! Graded vector spaces, cochain complexes and their cohomology inside a
//! degree window.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::field::{FieldTag, Scalar};
use crate::linalg::{rank_and_kernel, solve, Matrix, Span};

/// An inclusive range of degrees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DegreeWindow {
    pub lo: i32,
    pub hi: i32,
}

impl DegreeWindow {
    pub fn new(lo: i32, hi: i32) -> Result<DegreeWindow> {
        if lo > hi {
            return Err(Error::Parse(format!("empty window {lo}:{hi}")));
        }
        Ok(DegreeWindow { lo, hi })
    }

    pub fn contains(&self, n: i32) -> bool {
        self.lo <= n && n <= self.hi
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<i32> {
        self.lo..=self.hi
    }

    /// The default window, or the one named by `DG_LEVEL_WINDOW`.
    pub fn from_env() -> Result<DegreeWindow> {
        match std::env::var("DG_LEVEL_WINDOW") {
            Ok(s) => s.parse(),
            Err(_) => Ok(DegreeWindow::default()),
        }
    }
}

impl Default for DegreeWindow {
    fn default() -> Self {
        DegreeWindow { lo: -16, hi: 64 }
    }
}

impl fmt::Display for DegreeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl FromStr for DegreeWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<DegreeWindow> {
        let (a, b) = s.split_once(':').ok_or_else(|| Error::Parse(format!("window {s:?} is not lo:hi")))?;
        let lo = a.trim().parse().map_err(|_| Error::Parse(format!("bad window bound {a:?}")))?;
        let hi = b.trim().parse().map_err(|_| Error::Parse(format!("bad window bound {b:?}")))?;
        DegreeWindow::new(lo, hi)
    }
}

/// Dimensions indexed by degree. Zero entries are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GradedDims(BTreeMap<i32, usize>);

impl GradedDims {
    pub fn new() -> GradedDims {
        GradedDims::default()
    }

    pub fn from_pairs(pairs: &[(i32, usize)]) -> GradedDims {
        let mut g = GradedDims::new();
        for &(n, k) in pairs {
            g.add(n, k);
        }
        g
    }

    pub fn get(&self, n: i32) -> usize {
        self.0.get(&n).copied().unwrap_or(0)
    }

    pub fn add(&mut self, n: i32, k: usize) {
        if k > 0 {
            *self.0.entry(n).or_insert(0) += k;
        }
    }

    pub fn set(&mut self, n: i32, k: usize) {
        if k == 0 {
            self.0.remove(&n);
        } else {
            self.0.insert(n, k);
        }
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, usize)> + '_ {
        self.0.iter().map(|(&n, &k)| (n, k))
    }

    pub fn min_degree(&self) -> Option<i32> {
        self.0.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<i32> {
        self.0.keys().next_back().copied()
    }

    /// Dimensions of `Σ^k`: degree `n` moves to `n - k`.
    pub fn shifted(&self, k: i32) -> GradedDims {
        GradedDims(self.0.iter().map(|(&n, &v)| (n - k, v)).collect())
    }

    pub fn sum(&self, other: &GradedDims) -> GradedDims {
        let mut g = self.clone();
        for (n, k) in other.iter() {
            g.add(n, k);
        }
        g
    }

    pub fn restricted(&self, w: DegreeWindow) -> GradedDims {
        GradedDims(self.0.range(w.lo..=w.hi).map(|(&n, &k)| (n, k)).collect())
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (n, k) in self.iter() {
            m.insert(n.to_string(), json!(k));
        }
        Value::Object(m)
    }

    pub fn from_json(v: &Value) -> Result<GradedDims> {
        let obj = v.as_object().ok_or_else(|| Error::Parse("dims must be an object".into()))?;
        let mut g = GradedDims::new();
        for (k, v) in obj {
            let n: i32 = k.parse().map_err(|_| Error::Parse(format!("bad degree {k:?}")))?;
            let d = v.as_u64().ok_or_else(|| Error::Parse(format!("bad dimension at {k}")))?;
            g.add(n, d as usize);
        }
        Ok(g)
    }
}

impl fmt::Display for GradedDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (n, k)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}:{k}")?;
        }
        write!(f, "}}")
    }
}

/// Parses `"0:1,5:1,6:2"`.
impl FromStr for GradedDims {
    type Err = Error;

    fn from_str(s: &str) -> Result<GradedDims> {
        let mut g = GradedDims::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (a, b) = part.split_once(':').ok_or_else(|| Error::Parse(format!("bad dims entry {part:?}")))?;
            let n = a.trim().parse().map_err(|_| Error::Parse(format!("bad degree {a:?}")))?;
            let k = b.trim().parse().map_err(|_| Error::Parse(format!("bad dimension {b:?}")))?;
            g.add(n, k);
        }
        Ok(g)
    }
}

impl FromIterator<(i32, usize)> for GradedDims {
    fn from_iter<I: IntoIterator<Item = (i32, usize)>>(iter: I) -> Self {
        let mut g = GradedDims::new();
        for (n, k) in iter {
            g.add(n, k);
        }
        g
    }
}

/// `sup - inf` of the degrees carrying something.
pub fn amplitude(dims: &GradedDims) -> Result<i32> {
    match (dims.min_degree(), dims.max_degree()) {
        (Some(a), Some(b)) => Ok(b - a),
        _ => Err(Error::ZeroModule),
    }
}

/// Finite-dimensional pieces with labelled bases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedVectorSpace {
    field: FieldTag,
    basis: BTreeMap<i32, Vec<String>>,
}

impl GradedVectorSpace {
    pub fn new(field: FieldTag) -> GradedVectorSpace {
        GradedVectorSpace { field, basis: BTreeMap::new() }
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn set_degree(&mut self, n: i32, labels: Vec<String>) {
        if labels.is_empty() {
            self.basis.remove(&n);
        } else {
            self.basis.insert(n, labels);
        }
    }

    pub fn dim(&self, n: i32) -> usize {
        self.basis.get(&n).map_or(0, Vec::len)
    }

    pub fn labels(&self, n: i32) -> &[String] {
        self.basis.get(&n).map_or(&[], Vec::as_slice)
    }

    pub fn degrees(&self) -> impl Iterator<Item = i32> + '_ {
        self.basis.keys().copied()
    }

    pub fn dims(&self) -> GradedDims {
        self.basis.iter().map(|(&n, b)| (n, b.len())).collect()
    }
}

/// Whether a complex is known to vanish beyond its stored range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Beyond {
    Zero,
    Unknown,
}

/// A cochain complex stored on the degrees `lo..=hi`.
///
/// Outside the stored range the complex is either zero or simply not
/// computed; cohomology is only reported where it is certain.
#[derive(Clone, Debug)]
pub struct CochainComplex {
    space: GradedVectorSpace,
    d: BTreeMap<i32, Matrix>,
    lo: i32,
    hi: i32,
    below: Beyond,
    above: Beyond,
}

/// Cohomology in one degree together with the data needed to name classes.
#[derive(Clone, Debug)]
pub struct DegreeCohomology {
    pub boundaries: Vec<Vec<Scalar>>,
    pub representatives: Vec<Vec<Scalar>>,
}

impl DegreeCohomology {
    /// Coordinates of the class of the cocycle `z` in the representative basis.
    pub fn coordinates(&self, field: FieldTag, z: &[Scalar]) -> Option<Vec<Scalar>> {
        let cols: Vec<Vec<Scalar>> = self.representatives.iter().chain(&self.boundaries).cloned().collect();
        if cols.is_empty() {
            return z.iter().all(Scalar::is_zero).then(Vec::new);
        }
        let m = Matrix::from_columns(field, z.len(), &cols);
        let x = solve(&m, z)?;
        Some(x[..self.representatives.len()].to_vec())
    }
}

#[derive(Clone, Debug)]
pub struct Cohomology {
    pub dims: GradedDims,
    pub representatives: BTreeMap<i32, Vec<Vec<Scalar>>>,
}

impl CochainComplex {
    /// Builds and validates a complex. `d` maps `n` to the matrix of
    /// `d^n : C^n -> C^{n+1}`; absent entries are zero.
    pub fn new(
        space: GradedVectorSpace,
        d: BTreeMap<i32, Matrix>,
        range: (i32, i32),
        below: Beyond,
        above: Beyond,
    ) -> Result<CochainComplex> {
        let (lo, hi) = range;
        if let Some(n) = space.degrees().find(|n| *n < lo || *n > hi) {
            return Err(Error::DimensionMismatch(format!("basis in degree {n} outside stored range {lo}..{hi}")));
        }
        for (&n, m) in &d {
            if n < lo || n >= hi {
                return Err(Error::DimensionMismatch(format!("differential d^{n} outside stored range")));
            }
            if m.field() != space.field() {
                return Err(Error::FieldMismatch(space.field(), m.field()));
            }
            if m.cols() != space.dim(n) || m.rows() != space.dim(n + 1) {
                return Err(Error::DimensionMismatch(format!(
                    "d^{n} is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    space.dim(n + 1),
                    space.dim(n)
                )));
            }
        }
        let c = CochainComplex { space, d, lo, hi, below, above };
        for n in lo..hi - 1 {
            if let (Some(a), Some(b)) = (c.d.get(&n), c.d.get(&(n + 1))) {
                if !b.mul(a)?.is_zero() {
                    return Err(Error::NotADifferential(n));
                }
            }
        }
        Ok(c)
    }

    /// A complex that vanishes outside the degrees of its basis.
    pub fn finite(space: GradedVectorSpace, d: BTreeMap<i32, Matrix>) -> Result<CochainComplex> {
        let lo = space.degrees().next().unwrap_or(0);
        let hi = space.degrees().last().unwrap_or(0).max(lo + 1);
        let d = d.into_iter().filter(|(n, _)| *n >= lo && *n < hi).collect();
        CochainComplex::new(space, d, (lo, hi), Beyond::Zero, Beyond::Zero)
    }

    pub fn zero(field: FieldTag) -> CochainComplex {
        CochainComplex::finite(GradedVectorSpace::new(field), BTreeMap::new()).expect("empty complex")
    }

    pub fn field(&self) -> FieldTag {
        self.space.field()
    }

    pub fn space(&self) -> &GradedVectorSpace {
        &self.space
    }

    pub fn dim(&self, n: i32) -> usize {
        self.space.dim(n)
    }

    pub fn stored_range(&self) -> (i32, i32) {
        (self.lo, self.hi)
    }

    pub fn bounds(&self) -> (Beyond, Beyond) {
        (self.below, self.above)
    }

    /// `d^n`; the zero matrix when nothing is stored.
    pub fn differential(&self, n: i32) -> Matrix {
        self.d.get(&n).cloned().unwrap_or_else(|| Matrix::zeros(self.field(), self.dim(n + 1), self.dim(n)))
    }

    fn known(&self, n: i32) -> bool {
        (n >= self.lo || self.below == Beyond::Zero) && (n <= self.hi || self.above == Beyond::Zero)
    }

    /// Degrees whose cohomology is determined by the stored data and `w`.
    pub fn certified(&self, n: i32, w: DegreeWindow) -> bool {
        w.contains(n) && self.known(n - 1) && self.known(n) && self.known(n + 1)
    }

    pub fn degree_cohomology(&self, n: i32, w: DegreeWindow) -> Result<DegreeCohomology> {
        if !self.certified(n, w) {
            return Err(Error::WindowTooSmall { degree: n, window: w });
        }
        let field = self.field();
        let dim = self.dim(n);
        let (_, kernel) = rank_and_kernel(&self.differential(n))?;
        let prev = self.differential(n - 1);
        let mut span = Span::new(field, dim);
        let mut boundaries = Vec::new();
        for j in 0..prev.cols() {
            let col = prev.column(j);
            if span.insert(&col) {
                boundaries.push(col);
            }
        }
        let mut representatives = Vec::new();
        for z in kernel {
            if span.insert(&z) {
                representatives.push(z);
            }
        }
        Ok(DegreeCohomology { boundaries, representatives })
    }

    pub fn cohomology_in_degree(&self, n: i32, w: DegreeWindow) -> Result<usize> {
        Ok(self.degree_cohomology(n, w)?.representatives.len())
    }

    /// Cohomology at every certified degree of `w` that the complex can reach.
    pub fn cohomology(&self, w: DegreeWindow) -> Result<Cohomology> {
        let lo = if self.below == Beyond::Zero { w.lo.max(self.lo) } else { w.lo };
        let hi = if self.above == Beyond::Zero { w.hi.min(self.hi) } else { w.hi };
        let mut dims = GradedDims::new();
        let mut representatives = BTreeMap::new();
        for n in lo..=hi {
            if !self.certified(n, w) {
                continue;
            }
            let h = self.degree_cohomology(n, w)?;
            if !h.representatives.is_empty() {
                dims.add(n, h.representatives.len());
                representatives.insert(n, h.representatives);
            }
        }
        Ok(Cohomology { dims, representatives })
    }

    /// The degrees of `w` at which cohomology is certified.
    pub fn certified_degrees(&self, w: DegreeWindow) -> Vec<i32> {
        w.degrees().filter(|&n| self.certified(n, w)).collect()
    }

    pub fn to_json(&self) -> Value {
        let mut basis = Map::new();
        for n in self.space.degrees() {
            basis.insert(n.to_string(), json!(self.space.labels(n)));
        }
        let mut d = Map::new();
        for (n, m) in &self.d {
            if m.is_zero() {
                continue;
            }
            let rows: Vec<Value> = (0..m.rows()).map(|i| Value::Array(m.row(i).iter().map(Scalar::to_json).collect())).collect();
            d.insert(n.to_string(), Value::Array(rows));
        }
        json!({"field": self.field().to_string(), "basis": basis, "d": d})
    }

    /// Reads the `{"field", "basis", "d"}` schema as a finite complex.
    pub fn from_json(v: &Value) -> Result<CochainComplex> {
        let field: FieldTag = v
            .get("field")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("missing field".into()))?
            .parse()?;
        let mut space = GradedVectorSpace::new(field);
        if let Some(b) = v.get("basis").and_then(Value::as_object) {
            for (k, labels) in b {
                let n: i32 = k.parse().map_err(|_| Error::Parse(format!("bad degree {k:?}")))?;
                let labels = labels
                    .as_array()
                    .ok_or_else(|| Error::Parse("basis entries must be arrays".into()))?
                    .iter()
                    .map(|l| l.as_str().map(String::from).ok_or_else(|| Error::Parse("labels must be strings".into())))
                    .collect::<Result<Vec<_>>>()?;
                space.set_degree(n, labels);
            }
        }
        let mut d = BTreeMap::new();
        if let Some(obj) = v.get("d").and_then(Value::as_object) {
            for (k, rows) in obj {
                let n: i32 = k.parse().map_err(|_| Error::Parse(format!("bad degree {k:?}")))?;
                let rows = rows
                    .as_array()
                    .ok_or_else(|| Error::Parse("matrices are arrays of rows".into()))?
                    .iter()
                    .map(|r| {
                        r.as_array()
                            .ok_or_else(|| Error::Parse("rows are arrays".into()))?
                            .iter()
                            .map(|x| field.scalar_from_json(x))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                let m = if rows.is_empty() {
                    Matrix::zeros(field, space.dim(n + 1), space.dim(n))
                } else {
                    Matrix::from_rows(field, rows)?
                };
                d.insert(n, m);
            }
        }
        CochainComplex::finite(space, d)
    }
}
