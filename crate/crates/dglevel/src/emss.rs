//! The Eilenberg-Moore spectral sequence of a pullback over `S^d`.
//!
//! `E₂ = H*(Y) ⊗ Tor_{H*(S^d)}(K, K) ⊗ H*(Z)` with the Koszul coalgebra
//! written in bidegrees `(−n, nd)`. The only differential installed is
//! `d₂(γ_i(τ)) = h·x_{2d−1}·γ_{i−1}(τ)`; every later one is shown to vanish
//! by bidegree arithmetic.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::algebra::DgAlgebra;
use crate::error::{Error, Result};
use crate::field::{FieldTag, Scalar};
use crate::graded::{DegreeWindow, GradedDims};
use crate::linalg::{rank_and_kernel, Matrix, Span};
use crate::resolve::{coalgebra_label, FinitenessVerdict};

/// A fibre square `Y ×_{S^d} Z`: the space mapping in has cohomology `top`,
/// the other factor contributes `extra` (a point by default).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FibreSquareSpec {
    pub d: i32,
    pub field: FieldTag,
    pub top: Vec<(String, i32)>,
    pub extra: Vec<(String, i32)>,
    pub hopf: Scalar,
}

impl FibreSquareSpec {
    /// `S^{2d−1} → S^d` against the path fibration.
    pub fn odd_sphere(d: i32, field: FieldTag, hopf: i64) -> FibreSquareSpec {
        FibreSquareSpec {
            d,
            field,
            top: sphere_classes(2 * d - 1),
            extra: vec![("1".into(), 0)],
            hopf: field.from_i64(hopf),
        }
    }

    /// Both maps into `S^d` are the same `S^{2d−1} → S^d`.
    pub fn self_pullback(d: i32, field: FieldTag, hopf: i64) -> FibreSquareSpec {
        let extra = sphere_classes(2 * d - 1).into_iter().map(|(l, n)| (if n == 0 { l } else { format!("{l}'") }, n)).collect();
        FibreSquareSpec { extra, ..FibreSquareSpec::odd_sphere(d, field, hopf) }
    }

    pub fn point(d: i32, field: FieldTag) -> FibreSquareSpec {
        FibreSquareSpec { d, field, top: vec![("1".into(), 0)], extra: vec![("1".into(), 0)], hopf: field.zero() }
    }

    fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidArgument(format!("sphere dimension {} < 2", self.d)));
        }
        if self.hopf.field() != self.field {
            return Err(Error::FieldMismatch(self.field, self.hopf.field()));
        }
        for (l, n) in self.top.iter().chain(&self.extra) {
            if *n < 0 {
                return Err(Error::InvalidArgument(format!("class {l} in negative degree")));
            }
        }
        Ok(())
    }
}

fn sphere_classes(n: i32) -> Vec<(String, i32)> {
    vec![("1".into(), 0), (format!("x{}", crate::algebra::subscript(n as i64)), n)]
}

/// `(top class, coalgebra index, extra class)`.
type Cell = (usize, u32, usize);

/// One page: basis labels per bidegree `(s, t)` and `d_r` of bidegree `(r, 1−r)`.
#[derive(Clone, Debug)]
pub struct BigradedPage {
    pub r: u32,
    pub spec: FibreSquareSpec,
    pub window: DegreeWindow,
    basis: BTreeMap<(i32, i32), Vec<Cell>>,
    labels: BTreeMap<(i32, i32), Vec<String>>,
    d: BTreeMap<(i32, i32), Matrix>,
}

impl BigradedPage {
    pub fn entries(&self) -> &BTreeMap<(i32, i32), Vec<String>> {
        &self.labels
    }

    pub fn dim(&self, s: i32, t: i32) -> usize {
        self.labels.get(&(s, t)).map_or(0, Vec::len)
    }

    /// `d_r` out of `(s, t)`.
    pub fn differential(&self, s: i32, t: i32) -> Matrix {
        let r = self.r as i32;
        self.d.get(&(s, t)).cloned().unwrap_or_else(|| Matrix::zeros(self.spec.field, self.dim(s + r, t + 1 - r), self.dim(s, t)))
    }

    /// Dimensions by total degree `s + t`.
    pub fn total_dims(&self) -> GradedDims {
        let mut out = GradedDims::new();
        for (&(s, t), v) in &self.labels {
            out.add(s + t, v.len());
        }
        out
    }

    /// No total degree carries more than one nonzero cell.
    pub fn no_extension_problem(&self) -> bool {
        let mut seen = BTreeMap::new();
        self.labels.iter().filter(|(_, v)| !v.is_empty()).all(|(&(s, t), _)| seen.insert(s + t, ()).is_none())
    }

    pub fn to_json(&self) -> Value {
        let cells: Vec<Value> = self
            .labels
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(&(s, t), v)| json!({"s": s, "t": t, "classes": v}))
            .collect();
        json!({"page": self.r, "cells": cells, "totalDims": self.total_dims().to_json()})
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("E_{} page\n{:>5} {:>5}  classes\n", self.r, "s", "t");
        for (&(s, t), v) in &self.labels {
            if !v.is_empty() {
                out += &format!("{s:>5} {t:>5}  {}\n", v.join(", "));
            }
        }
        out
    }
}

fn cell_label(spec: &FibreSquareSpec, coalgebra: &DgAlgebra, c: &Cell) -> String {
    let parts = [spec.top[c.0].0.clone(), coalgebra_label(coalgebra, &[c.1]), spec.extra[c.2].0.clone()];
    let kept: Vec<String> = parts.into_iter().filter(|p| p != "1").collect();
    if kept.is_empty() {
        "1".into()
    } else {
        kept.join("⊗")
    }
}

/// `E₂` restricted to total degrees in `window`, with zero differential.
pub fn e2_page(spec: &FibreSquareSpec, window: DegreeWindow) -> Result<BigradedPage> {
    spec.validate()?;
    if window.lo > 0 {
        return Err(Error::WindowTooSmall { degree: 0, window });
    }
    let d = spec.d;
    let coalgebra = DgAlgebra::sphere_cohomology(d, spec.field);
    let mut basis: BTreeMap<(i32, i32), Vec<Cell>> = BTreeMap::new();
    for (i, (_, a)) in spec.top.iter().enumerate() {
        for (k, (_, b)) in spec.extra.iter().enumerate() {
            let mut n = 0u32;
            while a + b + n as i32 * (d - 1) <= window.hi {
                let (s, t) = (-(n as i32), n as i32 * d + a + b);
                basis.entry((s, t)).or_default().push((i, n, k));
                n += 1;
            }
        }
    }
    let labels = basis.iter().map(|(&k, cells)| (k, cells.iter().map(|c| cell_label(spec, &coalgebra, c)).collect())).collect();
    Ok(BigradedPage { r: 2, spec: spec.clone(), window, basis, labels, d: BTreeMap::new() })
}

/// Installs `d₂(γ_i(τ)) = h·x_{2d−1}·γ_{i−1}(τ)`, extended over `s⁻¹x_d`
/// and the classes of the second factor. Checks `d₂² = 0`.
pub fn install_d2(page: &BigradedPage) -> Result<BigradedPage> {
    let spec = &page.spec;
    let field = spec.field;
    let d = spec.d;
    if spec.hopf.is_zero() {
        return Ok(page.clone());
    }
    if d % 2 != 0 {
        return Err(Error::OddDimensionNonzeroHopf(d));
    }
    let unit = spec.top.iter().position(|(_, n)| *n == 0);
    let target = spec.top.iter().position(|(_, n)| *n == 2 * d - 1);
    let (Some(unit), Some(target), 2) = (unit, target, spec.top.len()) else {
        return Err(Error::InvalidArgument(format!("a nonzero Hopf invariant needs H*(S^{}) as the top space", 2 * d - 1)));
    };
    let mut out = page.clone();
    for (&(s, t), cells) in &page.basis {
        let (s2, t2) = (s + 2, t - 1);
        let Some(targets) = page.basis.get(&(s2, t2)) else { continue };
        let mut m = Matrix::zeros(field, targets.len(), cells.len());
        for (j, &(top, n, extra)) in cells.iter().enumerate() {
            if top != unit || n < 2 {
                continue;
            }
            let image = (target, n - 2, extra);
            if let Some(i) = targets.iter().position(|c| *c == image) {
                m.set(i, j, spec.hopf.clone());
            }
        }
        if !m.is_zero() {
            out.d.insert((s, t), m);
        }
    }
    for &(s, t) in out.d.keys() {
        if let Some(next) = out.d.get(&(s + 2, t - 1)) {
            if !next.mul(&out.d[&(s, t)])?.is_zero() {
                return Err(Error::NotADifferential(s + t));
            }
        }
    }
    Ok(out)
}

/// `Δ(d₂γ_i) = (d₂ ⊗ 1)Δ(γ_i)` for `Δ(γ_i) = Σ_k γ_{i−k} ⊗ γ_k`, with the
/// second factor carrying the zero differential of the path fibration.
pub fn comodule_compatible(page: &BigradedPage, i: u32) -> bool {
    let spec = &page.spec;
    let unit = spec.top.iter().position(|(_, n)| *n == 0);
    let (Some(unit), Some(extra)) = (unit, spec.extra.iter().position(|(_, n)| *n == 0)) else { return true };
    // d₂ of the unit-top, extra-unit cell with coalgebra index 2j, as a map j ↦ (top, j')
    let d2 = |j: u32| -> BTreeMap<(usize, u32), Scalar> {
        let (s, t) = (-2 * j as i32, 2 * j as i32 * spec.d);
        let mut out = BTreeMap::new();
        let Some(cells) = page.basis.get(&(s, t)) else { return out };
        let Some(col) = cells.iter().position(|c| *c == (unit, 2 * j, extra)) else { return out };
        let m = page.differential(s, t);
        if let Some(targets) = page.basis.get(&(s + 2, t - 1)) {
            for (row, c) in targets.iter().enumerate() {
                let v = m.get(row, col);
                if !v.is_zero() {
                    out.insert((c.0, c.1 / 2), v.clone());
                }
            }
        }
        out
    };
    let mut lhs: BTreeMap<(usize, u32, u32), Scalar> = BTreeMap::new();
    for ((top, j), c) in d2(i) {
        for k in 0..=j {
            lhs.insert((top, j - k, k), c.clone());
        }
    }
    let mut rhs: BTreeMap<(usize, u32, u32), Scalar> = BTreeMap::new();
    for k in 0..=i {
        for ((top, j), c) in d2(i - k) {
            rhs.insert((top, j, k), c);
        }
    }
    lhs == rhs
}

/// `E₃`, certified equal to `E∞` in the window, and the resulting verdict.
#[derive(Clone, Debug)]
pub struct StableResult {
    pub page: BigradedPage,
    pub dims: GradedDims,
    pub verdict: FinitenessVerdict,
    pub no_extension_problem: bool,
}

impl StableResult {
    pub fn to_json(&self) -> Value {
        json!({
            "einfinity": self.page.to_json(),
            "totalDims": self.dims.to_json(),
            "verdict": self.verdict.to_json(),
            "noExtensionProblem": self.no_extension_problem,
        })
    }
}

pub fn run_to_stable(page: &BigradedPage) -> Result<StableResult> {
    let field = page.spec.field;
    let mut basis = BTreeMap::new();
    let mut labels = BTreeMap::new();
    // the top degree of the window lacks its outgoing d₂
    for (&(s, t), cells) in page.basis.iter().filter(|(&(s, t), _)| s + t < page.window.hi) {
        let out = page.differential(s, t);
        let incoming = page.differential(s - 2, t + 1);
        let (_, kernel) = rank_and_kernel(&out)?;
        let mut span = Span::new(field, cells.len());
        for j in 0..incoming.cols() {
            span.insert(&incoming.column(j));
        }
        let mut reps = Vec::new();
        for z in kernel {
            if span.insert(&z) {
                reps.push(z);
            }
        }
        let names: Vec<String> = reps
            .iter()
            .map(|z| {
                let lead = z.iter().position(|c| !c.is_zero()).expect("nonzero class");
                format!("[{}]", page.labels[&(s, t)][lead])
            })
            .collect();
        if !names.is_empty() {
            basis.insert((s, t), Vec::new());
            labels.insert((s, t), names);
        }
    }
    let e3 = BigradedPage { r: 3, spec: page.spec.clone(), window: page.window, basis, labels, d: BTreeMap::new() };
    certify_collapse(&e3)?;
    let dims = e3.total_dims();
    let verdict = periodic_verdict(&e3, &dims)?;
    Ok(StableResult { no_extension_problem: e3.no_extension_problem(), page: e3, dims, verdict })
}

/// Every `d_r`, `r ≥ 3`, has source or target zero inside the window.
fn certify_collapse(page: &BigradedPage) -> Result<()> {
    let cells: Vec<(i32, i32)> = page.labels.keys().copied().collect();
    for &(s, t) in &cells {
        if s + t + 1 > page.window.hi {
            continue;
        }
        if let Some(&(s2, t2)) = cells.iter().find(|&&(s2, t2)| s2 + t2 == s + t + 1 && s2 - s >= 3) {
            return Err(Error::CannotCertifyCollapse(format!("a d_{} from ({s},{t}) to ({s2},{t2}) is possible", s2 - s)));
        }
    }
    Ok(())
}

/// Beyond the classes of the two factors the page repeats with period
/// `2(d−1)` (multiplication by `τ`), so three nonzero witnesses prove
/// infinitely many classes and one empty period proves finiteness.
fn periodic_verdict(page: &BigradedPage, dims: &GradedDims) -> Result<FinitenessVerdict> {
    let spec = &page.spec;
    let period = 2 * (spec.d - 1);
    let span = spec.top.iter().map(|c| c.1).max().unwrap_or(0) + spec.extra.iter().map(|c| c.1).max().unwrap_or(0);
    let stable = span + 2 * period + 2;
    let hi = page.window.hi;
    if stable + 3 * period > hi {
        return Ok(FinitenessVerdict::UnknownBeyondCap { cap: hi, dims: dims.clone() });
    }
    match (stable..stable + period).find(|&n| dims.get(n) > 0) {
        None => {
            let dims = dims.restricted(DegreeWindow::new(page.window.lo, stable - 1)?);
            Ok(FinitenessVerdict::Finite { total: dims.total(), dims })
        }
        Some(n) => {
            let witness = vec![n, n + period, n + 2 * period];
            if witness.iter().any(|&x| dims.get(x) == 0) {
                return Err(Error::VerificationFailed(format!("periodicity broken at {witness:?}")));
            }
            Ok(FinitenessVerdict::InfiniteCertified { period, witness, dims: dims.clone() })
        }
    }
}

/// Smallest window on which `run_to_stable` can decide finiteness.
pub fn decisive_window(spec: &FibreSquareSpec) -> DegreeWindow {
    let period = 2 * (spec.d - 1);
    let span = spec.top.iter().map(|c| c.1).max().unwrap_or(0) + spec.extra.iter().map(|c| c.1).max().unwrap_or(0);
    DegreeWindow { lo: 0, hi: span + 5 * period + 2 }
}

/// Runs the whole sequence on a decisive window.
pub fn run(spec: &FibreSquareSpec) -> Result<StableResult> {
    let page = install_d2(&e2_page(spec, decisive_window(spec))?)?;
    run_to_stable(&page)
}

/// The homotopy fibre of `S^{2d−1} → S^d` has finite cohomology iff the
/// Hopf invariant is nonzero in the field. Odd spheres force it to vanish.
pub fn compactness_from_hopf(d: i32, hopf: i64, field: FieldTag) -> Result<bool> {
    let h = if d % 2 == 0 { hopf } else { 0 };
    Ok(run(&FibreSquareSpec::odd_sphere(d, field, h))?.verdict.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::module::{Module, RawModule};
    use crate::resolve::{tor, Strategy};
    use std::sync::Arc;

    const Q: FieldTag = FieldTag::Rationals;

    #[test]
    fn e2_cells() {
        let w = DegreeWindow::new(0, 20).unwrap();
        let p = e2_page(&FibreSquareSpec::odd_sphere(4, Q, 1), w).unwrap();
        assert_eq!(p.entries()[&(-2, 8)], vec!["γ₁(τ)"]);
        assert_eq!(p.entries()[&(-1, 4)], vec!["s⁻¹x₄"]);
        assert_eq!(p.entries()[&(0, 7)], vec!["x₇"]);
        let odd = e2_page(&FibreSquareSpec::point(3, Q), w).unwrap();
        assert_eq!(odd.entries()[&(-2, 6)], vec!["γ₂(s⁻¹x₃)"]);
    }

    #[test]
    fn e2_matches_tor() {
        for (d, field) in [(4, Q), (3, FieldTag::Prime(2)), (2, Q)] {
            let w = DegreeWindow::new(0, 18).unwrap();
            let page = e2_page(&FibreSquareSpec::point(d, field), w).unwrap();
            let a = Arc::new(DgAlgebra::sphere_cohomology(d, field));
            let k = Module::Raw(RawModule::ground_field(a));
            assert_eq!(page.total_dims(), tor(&k, &k, &Strategy::Bar, w).unwrap());
        }
    }

    #[test]
    fn d2_and_collapse() {
        let p = install_d2(&e2_page(&FibreSquareSpec::odd_sphere(4, Q, 1), DegreeWindow::new(0, 30).unwrap()).unwrap()).unwrap();
        assert_eq!(p.differential(-2, 8), Matrix::from_i64(Q, &[&[1]]));
        assert!((0..5).all(|i| comodule_compatible(&p, i)));
        let r = run(&FibreSquareSpec::odd_sphere(4, Q, 1)).unwrap();
        assert_eq!(r.verdict, FinitenessVerdict::Finite { total: 2, dims: "0:1,3:1".parse().unwrap() });
        let r = run(&FibreSquareSpec::odd_sphere(4, Q, 0)).unwrap();
        assert!(matches!(r.verdict, FinitenessVerdict::InfiniteCertified { period: 6, .. }));
        let e = run(&FibreSquareSpec::self_pullback(4, Q, 1)).unwrap();
        assert_eq!(e.verdict.dims(), &"0:1,3:1,7:1,10:1".parse().unwrap());
        assert!(e.no_extension_problem);
        assert!(matches!(install_d2(&e2_page(&FibreSquareSpec::odd_sphere(5, Q, 1), DegreeWindow::new(0, 9).unwrap()).unwrap()), Err(Error::OddDimensionNonzeroHopf(5))));
    }

    #[test]
    fn compactness() {
        assert!(compactness_from_hopf(4, 1, Q).unwrap());
        assert!(!compactness_from_hopf(4, 2, FieldTag::Prime(2)).unwrap());
        assert!(!compactness_from_hopf(5, 0, Q).unwrap());
    }
}
