//! Semifree resolutions, derived tensor products and finiteness verdicts.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use serde_json::{json, Value};

use crate::algebra::{subscript, AlgebraMap, DgAlgebra, GeneratorKind, Monomial, Poly};
use crate::error::{Error, Result};
use crate::field::FieldTag;
use crate::graded::{Beyond, CochainComplex, DegreeWindow, GradedDims};
use crate::linalg::zero_vec;
use crate::module::{tensor, FreeElement, FreeModule, Module, RawModule};

/// Largest degree the automatic windows will reach.
pub const DEGREE_CAP: i32 = 256;

/// A nested sequence of generator sets with zero induced differential on
/// each subquotient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemifreeFiltration {
    stages: Vec<BTreeSet<usize>>,
}

impl SemifreeFiltration {
    pub fn new(module: &FreeModule, stages: Vec<Vec<usize>>) -> Result<SemifreeFiltration> {
        let stages: Vec<BTreeSet<usize>> = stages.into_iter().map(|s| s.into_iter().collect()).collect();
        let all: BTreeSet<usize> = (0..module.generators().len()).collect();
        if stages.last().map_or(!all.is_empty(), |s| *s != all) {
            return Err(Error::InvalidFiltration("the last stage must contain every generator".into()));
        }
        let mut prev = BTreeSet::new();
        for (n, s) in stages.iter().enumerate() {
            if !prev.is_subset(s) {
                return Err(Error::InvalidFiltration(format!("stage {n} does not contain stage {}", n.saturating_sub(1))));
            }
            for &j in s.difference(&prev) {
                if j >= all.len() {
                    return Err(Error::InvalidFiltration(format!("unknown generator {j}")));
                }
                if let Some(k) = module.generator_differential(j).keys().find(|k| !prev.contains(k)) {
                    return Err(Error::InvalidFiltration(format!(
                        "D({}) involves {}, outside stage {}",
                        module.generators()[j].0,
                        module.generators()[*k].0,
                        n as i64 - 1
                    )));
                }
            }
            prev = s.clone();
        }
        Ok(SemifreeFiltration { stages })
    }

    pub fn stages(&self) -> &[BTreeSet<usize>] {
        &self.stages
    }

    /// The least `c` with `F^c` everything.
    pub fn class(&self) -> usize {
        let last = self.stages.last();
        self.stages.iter().position(|s| Some(s) == last).unwrap_or(0)
    }

    pub fn level_upper_bound(&self) -> usize {
        self.class() + 1
    }
}

pub fn filtration_class(f: &SemifreeFiltration) -> usize {
    f.class()
}

pub fn level_upper_bound(f: &SemifreeFiltration) -> usize {
    f.level_upper_bound()
}

/// Filtration by height in the dependency graph of the generators:
/// `height(e) = 1 + max height of the generators in D(e)`.
pub fn generator_filtration(module: &FreeModule) -> Result<SemifreeFiltration> {
    let n = module.generators().len();
    let mut height: Vec<Option<usize>> = vec![None; n];
    let mut changed = true;
    let mut rounds = 0;
    while changed {
        changed = false;
        rounds += 1;
        if rounds > n + 1 {
            return Err(Error::InvalidFiltration("generators depend on each other cyclically".into()));
        }
        for j in 0..n {
            if height[j].is_some() {
                continue;
            }
            let deps: Vec<Option<usize>> = module.generator_differential(j).keys().map(|&k| height[k]).collect();
            if deps.iter().all(Option::is_some) {
                height[j] = Some(deps.iter().map(|h| h.unwrap() + 1).max().unwrap_or(0));
                changed = true;
            }
        }
    }
    if height.iter().any(Option::is_none) {
        return Err(Error::InvalidFiltration("generators depend on each other cyclically".into()));
    }
    let top = height.iter().map(|h| h.unwrap()).max().unwrap_or(0);
    let stages = (0..=top).map(|c| (0..n).filter(|&j| height[j].unwrap() <= c).collect()).collect();
    SemifreeFiltration::new(module, stages)
}

fn check_simply_connected(a: &DgAlgebra) -> Result<()> {
    match a.generators().iter().find(|g| g.degree < 2) {
        Some(g) => Err(Error::NotSimplyConnected(format!("generator {} in degree {}", g.label, g.degree))),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------- Koszul

fn koszul_kind_ok(a: &DgAlgebra) -> Result<()> {
    if !a.has_zero_differential() {
        return Err(Error::StrategyInapplicable("the algebra has a nonzero differential".into()));
    }
    if a.generators().iter().any(|g| g.kind == GeneratorKind::DividedPower) {
        return Err(Error::StrategyInapplicable("divided-power generators are not Koszul".into()));
    }
    check_simply_connected(a)
}

/// Elements of the Koszul dual coalgebra of degree at most `max`, as
/// multi-indices: `n_i ≤ 1` for polynomial generators, unbounded for
/// square-zero ones.
pub fn coalgebra_elements(a: &DgAlgebra, max: i32) -> Vec<Vec<u32>> {
    fn go(a: &DgAlgebra, i: usize, budget: i32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == a.generators().len() {
            out.push(cur.clone());
            return;
        }
        let g = &a.generators()[i];
        let step = g.degree - 1;
        let cap = if g.kind == GeneratorKind::Polynomial { 1 } else { u32::MAX };
        let mut k = 0;
        while k <= cap && k as i32 * step <= budget {
            cur[i] = k;
            go(a, i + 1, budget - k as i32 * step, cur, out);
            k += 1;
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    if max >= 0 {
        go(a, 0, max, &mut vec![0; a.generators().len()], &mut out);
    }
    out.sort_by_key(|c| (coalgebra_degree(a, c), std::cmp::Reverse(c.clone())));
    out
}

pub fn coalgebra_degree(a: &DgAlgebra, c: &[u32]) -> i32 {
    c.iter().zip(a.generators()).map(|(&n, g)| n as i32 * (g.degree - 1)).sum()
}

pub fn coalgebra_label(a: &DgAlgebra, c: &[u32]) -> String {
    let single = a.generators().len() == 1;
    let mut parts = Vec::new();
    for (&n, g) in c.iter().zip(a.generators()) {
        if n == 0 {
            continue;
        }
        let tau = if single { "τ".to_string() } else { format!("τ({})", g.label) };
        let s = format!("s⁻¹{}", g.label);
        if g.kind == GeneratorKind::Polynomial || g.degree % 2 == 1 {
            if n == 1 {
                parts.push(s);
            } else {
                parts.push(format!("γ{}({s})", subscript(n as i64)));
            }
        } else {
            let k = n / 2;
            if n % 2 == 1 {
                parts.push(s);
            }
            if k > 0 {
                parts.push(format!("γ{}({tau})", subscript(k as i64)));
            }
        }
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("·")
    }
}

/// `θ_i(c) = (−1)^{Σ n_k (|x_k||x_i| + 1)}` over `k < i` or `k > i`.
fn theta(a: &DgAlgebra, c: &[u32], i: usize, below: bool) -> i64 {
    let gi = a.generators()[i].degree as i64;
    (0..c.len())
        .filter(|&k| if below { k < i } else { k > i })
        .map(|k| c[k] as i64 * (a.generators()[k].degree as i64 * gi + 1))
        .sum()
}

fn acts_trivially(m: &RawModule) -> bool {
    (0..m.algebra().generators().len())
        .all(|i| m.complex().space().degrees().all(|n| m.action_matrix(i, n).is_zero()))
}

/// The Koszul resolution `M ⊗ C ⊗ A` of a finite module, with generators
/// `m ⊗ c` of degree at most `bound`.
///
/// The coalgebra is finite when every generator is polynomial, and the
/// resolution is then complete.
pub fn koszul_resolution(m: &RawModule, bound: i32) -> Result<FreeModule> {
    let a = m.algebra().clone();
    koszul_kind_ok(&a)?;
    let field = a.field();
    let parities: BTreeSet<i32> = a.generators().iter().map(|g| g.degree % 2).collect();
    if parities.len() > 1 && field.characteristic() != 2 && !acts_trivially(m) {
        return Err(Error::StrategyInapplicable(
            "generators of mixed parity acting nontrivially on both sides".into(),
        ));
    }
    let finite = a.generators().iter().all(|g| g.kind == GeneratorKind::Polynomial);
    let Some(mlo) = m.lo() else {
        return FreeModule::new(a, Vec::new(), Vec::new());
    };
    let mtop = m.top().unwrap_or(mlo);
    let cmax = if finite { i32::MAX / 4 } else { bound - mlo };
    let cs = coalgebra_elements(&a, cmax);
    let trivial_m = m.complex().space().dims() == GradedDims::from_pairs(&[(0, 1)]);
    let mut gens = Vec::new();
    let mut index: HashMap<(i32, usize, Vec<u32>), usize> = HashMap::new();
    for c in &cs {
        let cd = coalgebra_degree(&a, c);
        for n in mlo..=mtop {
            if !finite && n + cd > bound {
                continue;
            }
            for (b, label) in m.complex().space().labels(n).iter().enumerate() {
                let cl = coalgebra_label(&a, c);
                let name = if trivial_m { cl } else { format!("{label}⊗{cl}") };
                index.insert((n, b, c.clone()), gens.len());
                gens.push((name, n + cd, (n, b, c.clone())));
            }
        }
    }
    let mut diff = Vec::with_capacity(gens.len());
    for (_, _, (n, b, c)) in &gens {
        let (n, b) = (*n, *b);
        let cd = coalgebra_degree(&a, c);
        let mut el = FreeElement::new();
        let push = |el: &mut FreeElement, key: (i32, usize, Vec<u32>), p: Poly| {
            if let Some(&j) = index.get(&key) {
                let e = el.entry(j).or_default();
                e.add(&p);
                if e.is_zero() {
                    el.remove(&j);
                }
            }
        };
        let mut e = zero_vec(field, m.dim(n));
        e[b] = field.one();
        for (r, x) in m.complex().differential(n).apply(&e).iter().enumerate() {
            if !x.is_zero() {
                push(&mut el, (n + 1, r, c.clone()), Poly::term(a.unit(), x.clone()));
            }
        }
        for (i, g) in a.generators().iter().enumerate() {
            if c[i] == 0 {
                continue;
            }
            let mut lower = c.clone();
            lower[i] -= 1;
            let rs = field.sign(n as i64 + theta(&a, c, i, false));
            push(&mut el, (n, b, lower.clone()), a.generator_poly(i).scaled(&rs));
            let ls = field.sign(n as i64 + cd as i64 + g.degree as i64 + 1 + theta(&a, c, i, true));
            for (r, x) in m.act_generator(i, n, &e).iter().enumerate() {
                if !x.is_zero() {
                    push(&mut el, (n + g.degree, r, lower.clone()), Poly::term(a.unit(), x * &ls));
                }
            }
        }
        diff.push(el);
    }
    let gens = gens.into_iter().map(|(l, d, _)| (l, d)).collect();
    FreeModule::truncated(a, gens, diff, (!finite).then_some(bound))
}

/// Koszul resolution of the ground field over `H*(S^d)`, complete through `bound`.
pub fn koszul_resolution_sphere(d: i32, field: FieldTag, bound: i32) -> Result<FreeModule> {
    if d < 2 {
        return Err(Error::NotSimplyConnected(format!("sphere of dimension {d}")));
    }
    let a = Arc::new(DgAlgebra::sphere_cohomology(d, field));
    koszul_resolution(&RawModule::ground_field(a), bound)
}

/// Koszul resolution of the ground field over a polynomial algebra.
pub fn koszul_resolution_poly(degrees: &[i32], field: FieldTag) -> Result<FreeModule> {
    if field.characteristic() != 2 {
        if let Some(&d) = degrees.iter().find(|&&d| d % 2 != 0) {
            return Err(Error::OddGenerator(d));
        }
    }
    let a = Arc::new(DgAlgebra::polynomial(field, degrees, "y")?);
    koszul_resolution(&RawModule::ground_field(a), 0)
}

// ---------------------------------------------------------------- bar

/// The bar resolution `B(M, A, A)`, free on `m[a₁|…|a_k]` of degree at
/// most `lo(M) + cutoff`.
pub fn bar_resolution(m: &RawModule, cutoff: i32) -> Result<FreeModule> {
    let a = m.algebra().clone();
    check_simply_connected(&a)?;
    let field = a.field();
    let Some(mlo) = m.lo() else {
        return FreeModule::new(a, Vec::new(), Vec::new());
    };
    let mtop = m.top().unwrap_or(mlo);
    let bound = mlo + cutoff;
    let bar_basis: Vec<(i32, Monomial)> =
        (2..=cutoff + 1).flat_map(|k| a.basis(k).into_iter().map(move |mono| (k, mono))).collect();
    type Key = (i32, usize, Vec<Monomial>);
    let mut words: Vec<(Vec<Monomial>, i32)> = vec![(Vec::new(), 0)];
    let mut frontier = words.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (w, deg) in &frontier {
            for (k, mono) in &bar_basis {
                if deg + k - 1 + mlo <= bound {
                    let mut w2 = w.clone();
                    w2.push(mono.clone());
                    next.push((w2, deg + k - 1));
                }
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
    }
    words.sort_by(|x, y| (x.1, x.0.len()).cmp(&(y.1, y.0.len())).then_with(|| y.0.cmp(&x.0)));
    let mut gens: Vec<(String, i32, Key)> = Vec::new();
    let mut index: HashMap<Key, usize> = HashMap::new();
    for (w, wd) in &words {
        for n in mlo..=mtop {
            if n + wd > bound {
                continue;
            }
            for (b, label) in m.complex().space().labels(n).iter().enumerate() {
                let inner: Vec<String> = w.iter().map(|x| a.monomial_label(x)).collect();
                let name = format!("{label}[{}]", inner.join("|"));
                index.insert((n, b, w.clone()), gens.len());
                gens.push((name, n + wd, (n, b, w.clone())));
            }
        }
    }
    let mut diff = Vec::with_capacity(gens.len());
    for (_, _, (n, b, w)) in &gens {
        let (n, b) = (*n, *b);
        let mut el = FreeElement::new();
        let mut push = |key: Key, p: Poly| {
            if let Some(&j) = index.get(&key) {
                let e = el.entry(j).or_default();
                e.add(&p);
                if e.is_zero() {
                    el.remove(&j);
                }
            }
        };
        let scalar = |x: crate::field::Scalar| Poly::term(a.unit(), x);
        let mut e = zero_vec(field, m.dim(n));
        e[b] = field.one();
        for (r, x) in m.complex().differential(n).apply(&e).iter().enumerate() {
            if !x.is_zero() {
                push((n + 1, r, w.clone()), scalar(x.clone()));
            }
        }
        // ε_i = |m| + Σ_{j ≤ i} (|a_j| − 1)
        let mut eps = vec![n as i64];
        for x in w {
            eps.push(eps.last().unwrap() + a.monomial_degree(x) as i64 - 1);
        }
        for (i, x) in w.iter().enumerate() {
            for (y, c) in a.d_monomial(x).terms() {
                let mut w2 = w.clone();
                w2[i] = y.clone();
                push((n, b, w2), scalar(c * &field.sign(eps[i] + 1)));
            }
        }
        if let Some(first) = w.first() {
            let v = m.act_monomial(n, &e, first);
            let nd = n + a.monomial_degree(first);
            for (r, x) in v.iter().enumerate() {
                if !x.is_zero() {
                    push((nd, r, w[1..].to_vec()), scalar(x * &field.sign(n as i64)));
                }
            }
        }
        for i in 1..w.len() {
            if let Some((c, prod)) = a.mul_monomials(&w[i - 1], &w[i]) {
                let mut w2 = w[..i - 1].to_vec();
                w2.push(prod);
                w2.extend_from_slice(&w[i + 1..]);
                push((n, b, w2), scalar(c * field.sign(eps[i])));
            }
        }
        if let Some(last) = w.last() {
            let k = w.len();
            push((n, b, w[..k - 1].to_vec()), Poly::term(last.clone(), -field.sign(eps[k - 1])));
        }
        diff.push(el);
    }
    let gens = gens.into_iter().map(|(l, d, _)| (l, d)).collect();
    FreeModule::truncated(a, gens, diff, Some(bound))
}

/// `F ⊗_A B` along `map: A → B`: free on the same generators, with the
/// differential pushed forward.
pub fn base_change(f: &FreeModule, map: &AlgebraMap) -> Result<FreeModule> {
    if **f.algebra() != *map.source {
        return Err(Error::AlgebraMismatch);
    }
    let diff = (0..f.generators().len())
        .map(|j| {
            f.generator_differential(j)
                .iter()
                .map(|(&k, p)| (k, map.apply(p)))
                .filter(|(_, p)| !p.is_zero())
                .collect()
        })
        .collect();
    FreeModule::truncated(map.target.clone(), f.generators().to_vec(), diff, f.complete_to())
}

// ---------------------------------------------------------------- derived tensor

#[derive(Clone, Debug)]
pub enum Strategy {
    Bar,
    Koszul,
    /// A semifree resolution supplied by the caller.
    GivenResolution(Arc<FreeModule>),
}

impl Strategy {
    fn name(&self) -> &'static str {
        match self {
            Strategy::Bar => "bar",
            Strategy::Koszul => "koszul",
            Strategy::GivenResolution(_) => "given",
        }
    }
}

/// Beyond `stable_from`, cohomology repeats with this period.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Periodicity {
    pub period: i32,
    pub stable_from: i32,
}

#[derive(Clone, Debug)]
pub struct DerivedTensor {
    pub complex: CochainComplex,
    pub periodicity: Option<Periodicity>,
}

type CacheMap = HashMap<String, Arc<FreeModule>>;

fn cache() -> &'static RwLock<CacheMap> {
    static CACHE: OnceLock<RwLock<CacheMap>> = OnceLock::new();
    CACHE.get_or_init(RwLock::default)
}

/// A resolution of `m`, memoized on the module, the strategy and the bound.
pub fn resolve(m: &RawModule, strategy: &Strategy, bound: i32) -> Result<Arc<FreeModule>> {
    if let Strategy::GivenResolution(f) = strategy {
        return Ok(f.clone());
    }
    let key = format!("{}|{bound}|{}", strategy.name(), m.to_json());
    if let Some(f) = cache().read().expect("resolution cache").get(&key) {
        return Ok(f.clone());
    }
    let f = Arc::new(match strategy {
        Strategy::Koszul => koszul_resolution(m, bound)?,
        _ => bar_resolution(m, bound - m.lo().unwrap_or(0))?,
    });
    cache().write().expect("resolution cache").insert(key, f.clone());
    Ok(f)
}

/// The stable period of `Tor` over `H*(S^d)` for finite modules.
fn sphere_periodicity(a: &DgAlgebra, m: &Module, n: &Module) -> Option<Periodicity> {
    let [g] = a.generators() else { return None };
    if g.kind != GeneratorKind::Exterior || !a.has_zero_differential() {
        return None;
    }
    let (mt, nt) = (m.top()?, n.top()?);
    Some(Periodicity { period: 2 * (g.degree - 1), stable_from: mt + nt + 2 })
}

/// `M ⊗^L_A N`, stored far enough to certify every degree of `w`.
pub fn derived_tensor(m: &Module, n: &Module, strategy: &Strategy, w: DegreeWindow) -> Result<DerivedTensor> {
    let a = m.algebra().clone();
    if *a != **n.algebra() {
        return Err(Error::AlgebraMismatch);
    }
    let Some(nlo) = n.lo() else {
        return Ok(DerivedTensor { complex: CochainComplex::zero(a.field()), periodicity: None });
    };
    let bound = w.hi + 1 - nlo;
    let f: Arc<FreeModule> = match (m, strategy) {
        (_, Strategy::GivenResolution(f)) => f.clone(),
        (Module::Free(f), _) => Arc::new(f.clone()),
        (Module::Raw(r), s) => resolve(r, s, bound)?,
    };
    let complex = tensor(&f, n, w.hi + 1)?;
    let periodicity = match complex.bounds().1 {
        Beyond::Zero => None,
        Beyond::Unknown => sphere_periodicity(&a, m, n),
    };
    Ok(DerivedTensor { complex, periodicity })
}

/// `Tor_A(M, N)` in the certified degrees of `w`.
pub fn tor(m: &Module, n: &Module, strategy: &Strategy, w: DegreeWindow) -> Result<GradedDims> {
    Ok(derived_tensor(m, n, strategy, w)?.complex.cohomology(w)?.dims)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FinitenessVerdict {
    Finite { total: usize, dims: GradedDims },
    /// Nonzero at every witness degree, hence (by periodicity) infinitely often.
    InfiniteCertified { period: i32, witness: Vec<i32>, dims: GradedDims },
    UnknownBeyondCap { cap: i32, dims: GradedDims },
}

impl FinitenessVerdict {
    pub fn is_finite(&self) -> bool {
        matches!(self, FinitenessVerdict::Finite { .. })
    }

    pub fn dims(&self) -> &GradedDims {
        match self {
            FinitenessVerdict::Finite { dims, .. }
            | FinitenessVerdict::InfiniteCertified { dims, .. }
            | FinitenessVerdict::UnknownBeyondCap { dims, .. } => dims,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            FinitenessVerdict::Finite { total, dims } => json!({"verdict": "finite", "total": total, "dims": dims.to_json()}),
            FinitenessVerdict::InfiniteCertified { period, witness, dims } => {
                json!({"verdict": "infinite", "period": period, "witnessDegrees": witness, "dims": dims.to_json()})
            }
            FinitenessVerdict::UnknownBeyondCap { cap, dims } => json!({"verdict": "unknown", "cap": cap, "dims": dims.to_json()}),
        }
    }
}

impl DerivedTensor {
    /// Finite when the complex is; otherwise decided over one stable period.
    pub fn verdict(&self) -> Result<FinitenessVerdict> {
        let (lo, hi) = self.complex.stored_range();
        if self.complex.bounds().1 == Beyond::Zero {
            let dims = self.complex.cohomology(DegreeWindow::new(lo - 1, hi + 1)?)?.dims;
            return Ok(FinitenessVerdict::Finite { total: dims.total(), dims });
        }
        let w = DegreeWindow::new(lo - 1, hi - 1)?;
        let dims = self.complex.cohomology(w)?.dims;
        let Some(p) = self.periodicity else {
            return Ok(FinitenessVerdict::UnknownBeyondCap { cap: hi - 1, dims });
        };
        let s = p.stable_from.max(lo);
        if s + 3 * p.period > hi - 1 {
            return Ok(FinitenessVerdict::UnknownBeyondCap { cap: hi - 1, dims });
        }
        match (s..s + p.period).find(|&t| dims.get(t) > 0) {
            None => {
                let dims = dims.restricted(DegreeWindow::new(lo - 1, s - 1)?);
                Ok(FinitenessVerdict::Finite { total: dims.total(), dims })
            }
            Some(t) => {
                let witness = vec![t, t + p.period, t + 2 * p.period];
                if witness.iter().any(|&x| dims.get(x) == 0) {
                    return Err(Error::VerificationFailed(format!("periodicity broken at {witness:?}")));
                }
                Ok(FinitenessVerdict::InfiniteCertified { period: p.period, witness, dims })
            }
        }
    }

    /// The window needed to decide the verdict.
    fn decisive_window(a: &DgAlgebra, m: &Module, n: &Module) -> Result<DegreeWindow> {
        let lo = m.lo().unwrap_or(0) + n.lo().unwrap_or(0) - 1;
        let hi = match sphere_periodicity(a, m, n) {
            Some(p) => p.stable_from.max(lo) + 3 * p.period + 1,
            None => lo + 2 * DEGREE_CAP / 4,
        };
        DegreeWindow::new(lo, hi.min(DEGREE_CAP))
    }
}

/// `M ⊗^L_A N` computed far enough to decide whether it is finite.
pub fn derived_tensor_verdict(m: &Module, n: &Module) -> Result<(DerivedTensor, FinitenessVerdict)> {
    let a = m.algebra().clone();
    let w = DerivedTensor::decisive_window(&a, m, n)?;
    let dt = match derived_tensor(m, n, &Strategy::Koszul, w) {
        Err(Error::StrategyInapplicable(_)) => derived_tensor(m, n, &Strategy::Bar, w)?,
        r => r?,
    };
    let v = dt.verdict()?;
    Ok((dt, v))
}

/// `φ(M) = dim H(M ⊗^L_A K)`.
pub fn phi(m: &Module) -> Result<FinitenessVerdict> {
    let k = Module::Raw(RawModule::ground_field(m.algebra().clone()));
    Ok(derived_tensor_verdict(m, &k)?.1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Compactness {
    Compact(FinitenessVerdict),
    NotCompact(FinitenessVerdict),
    Unknown(FinitenessVerdict),
}

impl Compactness {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Compactness::Compact(_) => Some(true),
            Compactness::NotCompact(_) => Some(false),
            Compactness::Unknown(_) => None,
        }
    }
}

pub fn is_compact(m: &Module) -> Result<Compactness> {
    let v = phi(m)?;
    Ok(match v {
        FinitenessVerdict::Finite { .. } => Compactness::Compact(v),
        FinitenessVerdict::InfiniteCertified { .. } => Compactness::NotCompact(v),
        FinitenessVerdict::UnknownBeyondCap { .. } => Compactness::Unknown(v),
    })
}

/// The finiteness of `H(M)` itself.
pub fn cohomology_verdict(m: &Module) -> Result<FinitenessVerdict> {
    if m.is_finite() && m.complete_to().is_none() {
        let lo = m.lo().unwrap_or(0);
        let hi = m.top().unwrap_or(lo).max(lo);
        let dims = m.cohomology(DegreeWindow::new(lo - 1, hi + 1)?)?;
        return Ok(FinitenessVerdict::Finite { total: dims.total(), dims });
    }
    let lo = m.lo().unwrap_or(0);
    let dims = m.cohomology(DegreeWindow::new(lo - 1, DEGREE_CAP.min(lo + 64))?)?;
    Ok(FinitenessVerdict::UnknownBeyondCap { cap: DEGREE_CAP.min(lo + 64), dims })
}

/// Witness that a module has infinite level: its cohomology is infinite
/// while the algebra's is finite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelCertificate {
    pub period: i32,
    pub witness: Vec<i32>,
    pub algebra_cohomology: GradedDims,
}

impl LevelCertificate {
    pub fn to_json(&self) -> Value {
        json!({"period": self.period, "witnessDegrees": self.witness, "algebraCohomology": self.algebra_cohomology.to_json()})
    }
}

pub fn infinite_level_certificate(h: &FinitenessVerdict, algebra: &DgAlgebra) -> Result<Option<LevelCertificate>> {
    let Some(top) = algebra.top_degree() else {
        return Err(Error::InvalidAlgebra("the algebra must have finite-dimensional cohomology".into()));
    };
    let algebra_cohomology = algebra.cohomology_dims(DegreeWindow::new(0, top)?)?;
    Ok(match h {
        FinitenessVerdict::InfiniteCertified { period, witness, .. } => {
            Some(LevelCertificate { period: *period, witness: witness.clone(), algebra_cohomology })
        }
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(d: i32, field: FieldTag) -> Arc<DgAlgebra> {
        Arc::new(DgAlgebra::sphere_cohomology(d, field))
    }

    #[test]
    fn koszul_over_even_and_odd_spheres() {
        let q = FieldTag::Rationals;
        let w = DegreeWindow::new(0, 12).unwrap();
        let f = koszul_resolution_sphere(4, q, 13).unwrap();
        assert_eq!(f.complex(13).unwrap().cohomology(w).unwrap().dims, "0:1".parse().unwrap());
        let k = Module::Raw(RawModule::ground_field(f.algebra().clone()));
        let t = tensor(&f, &k, 13).unwrap().cohomology(w).unwrap().dims;
        assert_eq!(t, "0:1,3:1,6:1,9:1,12:1".parse().unwrap());
        let f3 = koszul_resolution_sphere(3, q, 13).unwrap();
        let k3 = Module::Raw(RawModule::ground_field(f3.algebra().clone()));
        let t3 = tensor(&f3, &k3, 13).unwrap().cohomology(w).unwrap().dims;
        assert_eq!(t3, "0:1,2:1,4:1,6:1,8:1,10:1,12:1".parse().unwrap());
        assert!(koszul_resolution_sphere(4, q, 15).unwrap().generators().iter().any(|g| g.0 == "s⁻¹x₄·γ₂(τ)"));
    }

    #[test]
    fn koszul_over_polynomials() {
        let q = FieldTag::Rationals;
        let w = DegreeWindow::new(-2, 30).unwrap();
        let f = koszul_resolution_poly(&[4], q).unwrap();
        assert_eq!(f.complex(30).unwrap().cohomology(w).unwrap().dims, "0:1".parse().unwrap());
        let f2 = koszul_resolution_poly(&[4, 6, 7], FieldTag::Prime(2)).unwrap();
        assert_eq!(f2.generators().len(), 8);
        assert_eq!(koszul_resolution_poly(&[4, 7], q).unwrap_err(), Error::OddGenerator(7));
        assert_eq!(koszul_resolution_poly(&[], q).unwrap().generators().len(), 1);
    }

    #[test]
    fn bar_resolution_of_the_ground_field() {
        let a = sphere(4, FieldTag::Rationals);
        let k = RawModule::ground_field(a.clone());
        let b = bar_resolution(&k, 13).unwrap();
        let w = DegreeWindow::new(0, 12).unwrap();
        assert_eq!(b.complex(13).unwrap().cohomology(w).unwrap().dims, "0:1".parse().unwrap());
        let km = Module::Raw(k);
        let bar = tor(&km, &km, &Strategy::Bar, w).unwrap();
        let kos = tor(&km, &km, &Strategy::Koszul, w).unwrap();
        assert_eq!(bar, kos);
    }

    #[test]
    fn two_sided_koszul_resolves_the_algebra() {
        let q = FieldTag::Rationals;
        let a = Arc::new(
            DgAlgebra::new(
                q,
                vec![
                    crate::algebra::Generator::new("a", 4, GeneratorKind::Exterior),
                    crate::algebra::Generator::new("b", 6, GeneratorKind::Exterior),
                ],
                vec![Poly::zero(), Poly::zero()],
            )
            .unwrap(),
        );
        let m = FreeModule::algebra_module(a.clone()).to_raw().unwrap();
        let f = koszul_resolution(&m, 30).unwrap();
        let w = DegreeWindow::new(0, 29).unwrap();
        assert_eq!(f.complex(30).unwrap().cohomology(w).unwrap().dims, "0:1,4:1,6:1,10:1".parse().unwrap());
        let b = bar_resolution(&m, 16).unwrap();
        let w = DegreeWindow::new(0, 15).unwrap();
        assert_eq!(b.complex(16).unwrap().cohomology(w).unwrap().dims, "0:1,4:1,6:1,10:1".parse().unwrap());
    }

    #[test]
    fn phi_verdicts() {
        let a = sphere(4, FieldTag::Rationals);
        let free = Module::Free(FreeModule::algebra_module(a.clone()));
        assert_eq!(phi(&free).unwrap(), FinitenessVerdict::Finite { total: 1, dims: "0:1".parse().unwrap() });
        let k = Module::Raw(RawModule::ground_field(a.clone()));
        match phi(&k).unwrap() {
            FinitenessVerdict::InfiniteCertified { period, witness, .. } => {
                assert_eq!(period, 6);
                assert!(witness.iter().all(|t| t % 6 == 3 || t % 6 == 0));
            }
            v => panic!("{v:?}"),
        }
        let raw_free = Module::Raw(FreeModule::algebra_module(a).to_raw().unwrap());
        assert_eq!(phi(&raw_free).unwrap(), FinitenessVerdict::Finite { total: 1, dims: "0:1".parse().unwrap() });
    }

    #[test]
    fn filtrations() {
        let a = sphere(4, FieldTag::Rationals);
        let m = FreeModule::parse(a.clone(), vec![("e0".into(), 0), ("e1".into(), 3), ("e2".into(), 6)], &[("e1", "e0*x₄"), ("e2", "e1*x₄")])
            .unwrap();
        let f = generator_filtration(&m).unwrap();
        assert_eq!((f.class(), f.level_upper_bound()), (2, 3));
        assert!(SemifreeFiltration::new(&m, vec![vec![0, 1], vec![0, 1, 2]]).is_err());
        let one = SemifreeFiltration::new(&FreeModule::algebra_module(a), vec![vec![0]]).unwrap();
        assert_eq!(one.level_upper_bound(), 1);
    }
}
