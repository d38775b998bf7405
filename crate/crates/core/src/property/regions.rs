//! Compilation of state formulae into signed polytope lists.
//!
//! Every integer comparison is mapped to a real half-space with a half-integer
//! continuity correction, so each integer state's unit of mass sits inside its
//! region. Complements and differences are expressed as signed sums of
//! polytopes (inclusion-exclusion): the indicator of a region is
//! `sum_k w_k 1[x in P_k]`, and its Gaussian measure is the same signed sum of
//! polytope masses.

use super::{AtomicProp, Comparator, PathFormula, StateFormula};
use crate::error::{Error, Result};

pub const DEFAULT_TERM_LIMIT: usize = 64;

/// `a . x <= b`
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub a: Vec<f64>,
    pub b: f64,
}

/// `lo <= a . x <= hi`, with `a` scaled so its first nonzero entry is `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub a: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl BoundRow {
    fn canonical(a: &[f64], lo: f64, hi: f64) -> Option<Self> {
        let lead = *a.iter().find(|v| **v != 0.0)?;
        let scale = lead.abs();
        let a: Vec<f64> = a.iter().map(|v| v / scale).collect();
        let (lo, hi) = (lo / scale, hi / scale);
        Some(if lead > 0.0 {
            BoundRow { a, lo, hi }
        } else {
            BoundRow {
                a: a.into_iter().map(|v| -v).collect(),
                lo: -hi,
                hi: -lo,
            }
        })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(a, x)| a * x).sum()
    }
}

/// Intersection of half-spaces, stored in box form (one row per distinct
/// direction). No rows means the whole space.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    rows: Vec<BoundRow>,
}

impl Polytope {
    pub fn whole(dim: usize) -> Self {
        Self { dim, rows: vec![] }
    }

    /// `None` if the half-spaces are contradictory (or only meet in a
    /// measure-zero set along one direction).
    pub fn from_half_spaces(dim: usize, half_spaces: &[HalfSpace]) -> Option<Self> {
        let rows = half_spaces
            .iter()
            .filter_map(|h| BoundRow::canonical(&h.a, f64::NEG_INFINITY, h.b))
            .collect();
        Self::from_rows(dim, rows)
    }

    fn from_rows(dim: usize, rows: Vec<BoundRow>) -> Option<Self> {
        let mut merged: Vec<BoundRow> = Vec::with_capacity(rows.len());
        for r in rows {
            match merged.iter_mut().find(|m| m.a == r.a) {
                Some(m) => {
                    m.lo = m.lo.max(r.lo);
                    m.hi = m.hi.min(r.hi);
                }
                None => merged.push(r),
            }
        }
        if merged.iter().any(|r| r.lo >= r.hi) {
            return None;
        }
        merged.retain(|r| r.lo > f64::NEG_INFINITY || r.hi < f64::INFINITY);
        merged.sort_by(|x, y| {
            x.a.partial_cmp(&y.a)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.lo.total_cmp(&y.lo))
                .then(x.hi.total_cmp(&y.hi))
        });
        Some(Self { dim, rows: merged })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[BoundRow] {
        &self.rows
    }

    pub fn is_whole(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn half_spaces(&self) -> Vec<HalfSpace> {
        let mut out = Vec::new();
        for r in &self.rows {
            if r.hi < f64::INFINITY {
                out.push(HalfSpace {
                    a: r.a.clone(),
                    b: r.hi,
                });
            }
            if r.lo > f64::NEG_INFINITY {
                out.push(HalfSpace {
                    a: r.a.iter().map(|v| -v).collect(),
                    b: -r.lo,
                });
            }
        }
        out
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.rows.iter().all(|r| {
            let v = r.value(x);
            r.lo <= v && v <= r.hi
        })
    }

    /// Smallest distance (in row units) from `x` to any finite bound.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| {
                let v = r.value(x);
                [(v - r.lo).abs(), (r.hi - v).abs()]
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn intersect(&self, other: &Polytope) -> Option<Polytope> {
        Self::from_rows(
            self.dim,
            self.rows.iter().chain(other.rows.iter()).cloned().collect(),
        )
    }
}

/// Signed sum of polytopes.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedRegion {
    dim: usize,
    terms: Vec<(i32, Polytope)>,
}

impl SignedRegion {
    pub fn empty(dim: usize) -> Self {
        Self { dim, terms: vec![] }
    }

    pub fn whole(dim: usize) -> Self {
        Self {
            dim,
            terms: vec![(1, Polytope::whole(dim))],
        }
    }

    pub fn from_terms(dim: usize, terms: Vec<(i32, Polytope)>) -> Self {
        let mut r = Self { dim, terms };
        r.normalize();
        r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(i32, Polytope)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_whole(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0 == 1 && self.terms[0].1.is_whole()
    }

    /// Signed sum of polytope indicators at a real point.
    pub fn indicator(&self, x: &[f64]) -> i32 {
        self.terms
            .iter()
            .filter(|(_, p)| p.contains(x))
            .map(|(w, _)| *w)
            .sum()
    }

    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(_, p)| p.boundary_distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    fn normalize(&mut self) {
        let mut out: Vec<(i32, Polytope)> = Vec::with_capacity(self.terms.len());
        for (w, p) in self.terms.drain(..) {
            match out.iter_mut().find(|(_, q)| *q == p) {
                Some((v, _)) => *v += w,
                None => out.push((w, p)),
            }
        }
        out.retain(|(w, _)| *w != 0);
        self.terms = out;
    }

    fn add(mut self, other: SignedRegion, limit: usize) -> Result<Self> {
        self.terms.extend(other.terms);
        self.normalize();
        self.check(limit)
    }

    fn negate(mut self) -> Self {
        for (w, _) in &mut self.terms {
            *w = -*w;
        }
        self
    }

    fn intersect(&self, other: &SignedRegion, limit: usize) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (w1, p1) in &self.terms {
            for (w2, p2) in &other.terms {
                if let Some(p) = p1.intersect(p2) {
                    terms.push((w1 * w2, p));
                }
            }
        }
        Self::from_terms(self.dim, terms).check(limit)
    }

    fn union(self, other: SignedRegion, limit: usize) -> Result<Self> {
        let both = self.intersect(&other, limit)?;
        self.add(other, limit)?.add(both.negate(), limit)
    }

    fn check(self, limit: usize) -> Result<Self> {
        if self.terms.len() > limit {
            Err(Error::RegionBlowUp {
                terms: self.terms.len(),
                limit,
            })
        } else {
            Ok(self)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `C = S_phi1 \ S_phi2`: satisfaction not yet determined.
    Undetermined,
    /// `S_phi2`.
    Target,
    /// `S_(!phi1 & !phi2)`.
    False,
}

/// The three-way partition of state space for `phi1 U phi2`.
#[derive(Debug, Clone)]
pub struct RegionSet {
    pub undetermined: SignedRegion,
    pub target: SignedRegion,
    pub false_region: SignedRegion,
    left: StateFormula,
    right: StateFormula,
}

impl RegionSet {
    pub fn region(&self, which: Region) -> &SignedRegion {
        match which {
            Region::Undetermined => &self.undetermined,
            Region::Target => &self.target,
            Region::False => &self.false_region,
        }
    }

    /// Exact integer semantics of the original formulae (no correction).
    pub fn indicator(&self, which: Region, state: &[i64]) -> u8 {
        let (l, r) = (self.left.holds(state), self.right.holds(state));
        u8::from(match which {
            Region::Target => r,
            Region::Undetermined => l && !r,
            Region::False => !l && !r,
        })
    }

    /// Classify an integer state.
    pub fn classify(&self, state: &[i64]) -> Region {
        if self.right.holds(state) {
            Region::Target
        } else if self.left.holds(state) {
            Region::Undetermined
        } else {
            Region::False
        }
    }

    /// Membership of a real point in the corrected continuous regions.
    pub fn continuous_indicator(&self, which: Region, x: &[f64]) -> u8 {
        let (l, r) = (
            continuous_holds(&self.left, x),
            continuous_holds(&self.right, x),
        );
        u8::from(match which {
            Region::Target => r,
            Region::Undetermined => l && !r,
            Region::False => !l && !r,
        })
    }
}

/// The continuity-corrected interval `lo <= a . x <= hi` of an atom, before
/// any domain knowledge is applied. `None` when no integer satisfies it.
struct CorrectedAtom {
    a: Vec<f64>,
    lo: f64,
    hi: f64,
    /// Integer range of `a . x` (only for integer forms).
    int_range: Option<(f64, f64)>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn correct(atom: &AtomicProp) -> Option<CorrectedAtom> {
    let c = atom.bound;
    if atom.is_integer_form() && atom.coefficients.iter().all(|a| a.abs() < 1e15) {
        let g = atom
            .coefficients
            .iter()
            .fold(0u64, |g, &a| gcd(g, a.abs() as u64))
            .max(1) as f64;
        let a: Vec<f64> = atom.coefficients.iter().map(|v| v / g).collect();
        let c = c / g;
        let (klo, khi) = match atom.comparator {
            Comparator::Lt => (f64::NEG_INFINITY, c.ceil() - 1.0),
            Comparator::Le => (f64::NEG_INFINITY, c.floor()),
            Comparator::Gt => (c.floor() + 1.0, f64::INFINITY),
            Comparator::Ge => (c.ceil(), f64::INFINITY),
            Comparator::Eq if c.fract() == 0.0 => (c, c),
            Comparator::Eq => return None,
        };
        Some(CorrectedAtom {
            a,
            lo: klo - 0.5,
            hi: khi + 0.5,
            int_range: Some((klo, khi)),
        })
    } else {
        let (lo, hi) = match atom.comparator {
            Comparator::Lt | Comparator::Le => (f64::NEG_INFINITY, c),
            Comparator::Gt | Comparator::Ge => (c, f64::INFINITY),
            Comparator::Eq => (c, c),
        };
        Some(CorrectedAtom {
            a: atom.coefficients.clone(),
            lo,
            hi,
            int_range: None,
        })
    }
}

/// Half-integer continuity correction of an atomic proposition:
/// `< c` becomes `<= c - 1/2`, `<= c` becomes `<= c + 1/2`, `>` and `>=`
/// mirrored, `= c` becomes the slab `c - 1/2 <= . <= c + 1/2`. Forms with
/// non-integer coefficients are left uncorrected.
pub fn continuity_correct(atom: &AtomicProp) -> Vec<HalfSpace> {
    let Some(ca) = correct(atom) else {
        // no integer solution: an empty slab
        let a = atom.coefficients.clone();
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        return vec![
            HalfSpace {
                a,
                b: atom.bound.floor() + 0.5,
            },
            HalfSpace {
                a: neg,
                b: -(atom.bound.floor() + 0.5),
            },
        ];
    };
    let mut out = Vec::new();
    if ca.lo > f64::NEG_INFINITY {
        out.push(HalfSpace {
            a: ca.a.iter().map(|v| -v).collect(),
            b: -ca.lo,
        });
    }
    if ca.hi < f64::INFINITY {
        out.push(HalfSpace {
            a: ca.a.clone(),
            b: ca.hi,
        });
    }
    out
}

/// Corrected interval with the non-negativity of populations applied: a
/// form with same-signed integer coefficients cannot go past zero, so bounds
/// at or beyond zero are dropped and the Gaussian tail beyond the orthant is
/// assigned to the side that contains zero.
fn domain_interval(atom: &AtomicProp) -> Option<(Vec<f64>, f64, f64)> {
    let ca = correct(atom)?;
    let (mut lo, mut hi) = (ca.lo, ca.hi);
    if let Some((klo, khi)) = ca.int_range {
        let nonneg = ca.a.iter().all(|&v| v >= 0.0);
        let nonpos = ca.a.iter().all(|&v| v <= 0.0);
        if nonneg {
            if khi < 0.0 {
                return None;
            }
            if klo <= 0.0 {
                lo = f64::NEG_INFINITY;
            }
        }
        if nonpos {
            if klo > 0.0 {
                return None;
            }
            if khi >= 0.0 {
                hi = f64::INFINITY;
            }
        }
    }
    if lo >= hi {
        return None;
    }
    Some((ca.a, lo, hi))
}

fn continuous_holds(f: &StateFormula, x: &[f64]) -> bool {
    match f {
        StateFormula::True => true,
        StateFormula::Atom(a) => match domain_interval(a) {
            None => false,
            Some((a, lo, hi)) => {
                let v: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
                lo <= v && v <= hi
            }
        },
        StateFormula::Not(g) => !continuous_holds(g, x),
        StateFormula::And(a, b) => continuous_holds(a, x) && continuous_holds(b, x),
    }
}

fn slab(dim: usize, a: &[f64], lo: f64, hi: f64) -> Option<Polytope> {
    let row = BoundRow::canonical(a, lo, hi)?;
    Polytope::from_rows(dim, vec![row])
}

fn compile_atom(atom: &AtomicProp, negated: bool, dim: usize) -> SignedRegion {
    let pieces: Vec<Polytope> = match (domain_interval(atom), negated) {
        (None, false) => vec![],
        (None, true) => vec![Polytope::whole(dim)],
        (Some((a, lo, hi)), false) => slab(dim, &a, lo, hi).into_iter().collect(),
        (Some((a, lo, hi)), true) => {
            let mut v = Vec::new();
            if lo > f64::NEG_INFINITY {
                v.extend(slab(dim, &a, f64::NEG_INFINITY, lo));
            }
            if hi < f64::INFINITY {
                v.extend(slab(dim, &a, hi, f64::INFINITY));
            }
            v
        }
    };
    SignedRegion::from_terms(dim, pieces.into_iter().map(|p| (1, p)).collect())
}

fn compile(f: &StateFormula, negated: bool, dim: usize, limit: usize) -> Result<SignedRegion> {
    match f {
        StateFormula::True if negated => Ok(SignedRegion::empty(dim)),
        StateFormula::True => Ok(SignedRegion::whole(dim)),
        StateFormula::Atom(a) => compile_atom(a, negated, dim).check(limit),
        StateFormula::Not(g) => compile(g, !negated, dim, limit),
        StateFormula::And(a, b) => {
            let ra = compile(a, negated, dim, limit)?;
            let rb = compile(b, negated, dim, limit)?;
            if negated {
                ra.union(rb, limit)
            } else {
                ra.intersect(&rb, limit)
            }
        }
    }
}

pub fn compile_regions(formula: &PathFormula, dim: usize) -> Result<RegionSet> {
    compile_regions_with_limit(formula, dim, DEFAULT_TERM_LIMIT)
}

/// Compile `phi1 U phi2` into its three regions. `dim` is the number of species.
pub fn compile_regions_with_limit(
    formula: &PathFormula,
    dim: usize,
    limit: usize,
) -> Result<RegionSet> {
    let left = &formula.left;
    let right = &formula.right;
    let target = compile(right, false, dim, limit)?;
    let not_right = compile(right, true, dim, limit)?;
    let undetermined = compile(left, false, dim, limit)?.intersect(&not_right, limit)?;
    let false_region = compile(left, true, dim, limit)?.intersect(&not_right, limit)?;
    Ok(RegionSet {
        undetermined,
        target,
        false_region,
        left: left.clone(),
        right: right.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin_model;
    use crate::property::parse_property;

    fn atom(c: Vec<f64>, cmp: Comparator, b: f64) -> AtomicProp {
        AtomicProp {
            coefficients: c,
            comparator: cmp,
            bound: b,
        }
    }

    #[test]
    fn correction_examples() {
        assert_eq!(
            continuity_correct(&atom(vec![1.0], Comparator::Eq, 0.0)),
            vec![
                HalfSpace { a: vec![-1.0], b: 0.5 },
                HalfSpace { a: vec![1.0], b: 0.5 }
            ]
        );
        assert_eq!(
            continuity_correct(&atom(vec![1.0], Comparator::Lt, 30.0)),
            vec![HalfSpace { a: vec![1.0], b: 29.5 }]
        );
        assert_eq!(
            continuity_correct(&atom(vec![1.0, -1.0], Comparator::Lt, 0.0)),
            vec![HalfSpace {
                a: vec![1.0, -1.0],
                b: -0.5
            }]
        );
        assert_eq!(
            continuity_correct(&atom(vec![1.0], Comparator::Gt, 150.0)),
            vec![HalfSpace { a: vec![-1.0], b: -150.5 }]
        );
    }

    #[test]
    fn sir_until_undetermined_region() {
        let net = builtin_model("sir").unwrap();
        let f = parse_property("P=? [ (X_I < 30) U[0,10] (X_I = 0) ]", &net).unwrap();
        let rs = compile_regions(&f, 3).unwrap();
        for i in 0..=40 {
            let x = [10, i, 0];
            let expect = u8::from((1..=29).contains(&i));
            assert_eq!(rs.indicator(Region::Undetermined, &x), expect);
            let xf = [10.0, i as f64, 0.0];
            assert_eq!(rs.undetermined.indicator(&xf), i32::from(expect), "I = {i}");
        }
        // continuous form: exactly 0.5 <= X_I <= 29.5
        assert_eq!(rs.undetermined.terms().len(), 1);
        let row = &rs.undetermined.terms()[0].1.rows()[0];
        assert_eq!((row.lo, row.hi), (0.5, 29.5));
        assert_eq!(rs.indicator(Region::Undetermined, &[10, 30, 0]), 0);
        assert_eq!(rs.indicator(Region::Undetermined, &[10, 29, 0]), 1);
        assert_eq!(rs.indicator(Region::Target, &[35, 0, 15]), 1);
    }

    #[test]
    fn eventually_and_trivial_target() {
        let net = builtin_model("sir").unwrap();
        let f = parse_property("P=? [ F[0,10] (X_I = 0) ]", &net).unwrap();
        let f = crate::property::rewrite_to_until(&f);
        let rs = compile_regions(&f, 3).unwrap();
        assert!(rs.false_region.is_empty());
        let x = [3.0, 7.0, 1.0];
        assert_eq!(rs.undetermined.indicator(&x) + rs.target.indicator(&x), 1);

        let g = PathFormula::until(
            StateFormula::Atom(atom(vec![0.0, 1.0, 0.0], Comparator::Lt, 30.0)),
            StateFormula::True,
            1.0,
        );
        let rs = compile_regions(&g, 3).unwrap();
        assert!(rs.target.is_whole());
        assert!(rs.undetermined.is_empty());
        assert!(rs.false_region.is_empty());
    }

    #[test]
    fn impossible_atoms_compile_to_empty() {
        let f = PathFormula::until(
            StateFormula::True,
            StateFormula::Atom(atom(vec![1.0], Comparator::Lt, 0.0)),
            1.0,
        );
        let rs = compile_regions(&f, 1).unwrap();
        assert!(rs.target.is_empty());
        assert!(rs.undetermined.is_whole());
    }

    #[test]
    fn blow_up_is_reported() {
        let mut phi = StateFormula::True;
        for k in 0..10 {
            let mut c = vec![0.0; 10];
            c[k] = 1.0;
            c[(k + 1) % 10] = -1.0;
            phi = StateFormula::and(phi, StateFormula::Atom(atom(c, Comparator::Lt, 3.0)));
        }
        let f = PathFormula::until(StateFormula::True, phi, 1.0);
        assert!(matches!(
            compile_regions_with_limit(&f, 10, 8),
            Err(Error::RegionBlowUp { limit: 8, .. })
        ));
    }

    #[test]
    fn contradictory_half_spaces() {
        let p = Polytope::from_half_spaces(
            1,
            &[
                HalfSpace { a: vec![1.0], b: 1.0 },
                HalfSpace { a: vec![-2.0], b: -4.0 },
            ],
        );
        assert!(p.is_none());
        let q = Polytope::from_half_spaces(
            2,
            &[
                HalfSpace { a: vec![2.0, 0.0], b: 4.0 },
                HalfSpace { a: vec![1.0, 0.0], b: 3.0 },
            ],
        )
        .unwrap();
        assert_eq!(q.rows().len(), 1);
        assert_eq!(q.rows()[0].hi, 2.0);
    }
}
