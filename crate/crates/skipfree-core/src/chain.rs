//! Finite skip-free chains on contiguous integer states, and the elementary transforms
//! (duality, killing, h-transforms) the other modules are built on.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Absolute tolerance for stochasticity, excessivity and zero-pattern tests.
pub const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Regular,
    Absorbing,
    Killing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    lo: i64,
    p: DMatrix<f64>,
    top: Boundary,
    bottom: Boundary,
}

impl ChainSpec {
    pub fn new(lo: i64, p: DMatrix<f64>, top: Boundary, bottom: Boundary) -> Result<Self> {
        if p.nrows() == 0 {
            return Err(Error::Structural("empty transition matrix".into()));
        }
        if p.nrows() != p.ncols() {
            return Err(Error::Structural(format!(
                "transition matrix is {}x{}, expected square",
                p.nrows(),
                p.ncols()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Structural("non-finite transition probability".into()));
        }
        Ok(ChainSpec { lo, p, top, bottom })
    }

    /// Build from row-major rows; `hi` must equal `lo + rows.len() - 1`.
    pub fn from_rows(lo: i64, hi: i64, rows: &[Vec<f64>], top: Boundary, bottom: Boundary) -> Result<Self> {
        let n = rows.len();
        if hi < lo || (hi - lo + 1) as usize != n {
            return Err(Error::Structural(format!("[{lo}, {hi}] does not match {n} rows")));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Structural(format!("row {} has {} entries, expected {n}", lo + i as i64, r.len())));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        ChainSpec::new(lo, DMatrix::from_row_slice(n, n, &flat), top, bottom)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.p.nrows() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn top(&self) -> Boundary {
        self.top
    }

    pub fn bottom(&self) -> Boundary {
        self.bottom
    }

    pub fn with_boundaries(&self, top: Boundary, bottom: Boundary) -> ChainSpec {
        ChainSpec { lo: self.lo, p: self.p.clone(), top, bottom }
    }

    /// Same chain with the top row replaced by a unit self-loop.
    pub fn with_absorbing_top(&self) -> ChainSpec {
        let mut p = self.p.clone();
        let n = p.nrows();
        p.row_mut(n - 1).fill(0.0);
        p[(n - 1, n - 1)] = 1.0;
        ChainSpec { lo: self.lo, p, top: Boundary::Absorbing, bottom: self.bottom }
    }

    pub fn idx(&self, x: i64) -> Result<usize> {
        if x < self.lo || x > self.hi() {
            return Err(Error::StateOutOfRange(x));
        }
        Ok((x - self.lo) as usize)
    }

    pub fn label(&self, i: usize) -> i64 {
        self.lo + i as i64
    }

    pub fn prob(&self, x: i64, y: i64) -> f64 {
        match (self.idx(x), self.idx(y)) {
            (Ok(i), Ok(j)) => self.p[(i, j)],
            _ => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.p.row(i).sum()
    }

    /// Mass lost from row `i` in one step.
    pub fn leak(&self, i: usize) -> f64 {
        (1.0 - self.row_sum(i)).max(0.0)
    }

    pub fn is_stochastic(&self) -> bool {
        (0..self.len()).all(|i| (self.row_sum(i) - 1.0).abs() <= TOL)
    }

    pub fn is_absorbing_state(&self, i: usize) -> bool {
        (self.p[(i, i)] - 1.0).abs() <= TOL
    }

    pub fn is_upward_skip_free(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (i + 2..n).all(|j| self.p[(i, j)].abs() <= TOL))
    }

    pub fn is_downward_skip_free(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..i.saturating_sub(1)).all(|j| self.p[(i, j)].abs() <= TOL))
    }

    /// Rows other than the top one that lose mass.
    pub fn has_interior_killing(&self) -> bool {
        (0..self.len() - 1).any(|i| self.leak(i) > TOL)
    }
}

/// A strictly positive finite measure over `[lo..hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure(DVector<f64>);

impl Measure {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidReferenceMeasure { state: i as i64, reason: "not strictly positive and finite" });
        }
        Ok(Measure(DVector::from_vec(values)))
    }

    pub fn uniform(n: usize) -> Self {
        Measure(DVector::from_element(n, 1.0))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn at(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn min(&self) -> f64 {
        self.0.min()
    }

    /// First state (index) where (pi P)(y) > pi(y), if any.
    pub fn excessivity_violation(&self, spec: &ChainSpec) -> Option<usize> {
        let pp = self.0.transpose() * spec.matrix();
        (0..self.len()).find(|&y| pp[y] > self.0[y] + TOL * self.0[y].max(1.0))
    }

    pub fn is_excessive(&self, spec: &ChainSpec) -> bool {
        self.len() == spec.len() && self.excessivity_violation(spec).is_none()
    }

    pub(crate) fn check_len(&self, spec: &ChainSpec) -> Result<()> {
        if self.len() != spec.len() {
            return Err(Error::Structural(format!(
                "measure has {} entries, chain has {} states",
                self.len(),
                spec.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn restrict(&self, i0: usize, i1: usize) -> Measure {
        Measure(self.0.rows(i0, i1 - i0 + 1).into_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HittingSpec {
    /// T_a
    Point(i64),
    /// T_{b]}: first entrance into (-inf, b]
    LowerSet(i64),
    /// T_{(b,a)^c}
    TwoSided { b: i64, a: i64 },
    /// T_a^+ = inf{n >= 1 : X_n = a}
    Return(i64),
}

impl HittingSpec {
    /// Indicator of the target set, for the first-entrance forms.
    pub fn targets(&self, spec: &ChainSpec) -> Result<Vec<bool>> {
        let n = spec.len();
        let lab = |i: usize| spec.label(i);
        Ok(match *self {
            HittingSpec::Point(a) | HittingSpec::Return(a) => {
                spec.idx(a)?;
                (0..n).map(|i| lab(i) == a).collect()
            }
            HittingSpec::LowerSet(b) => {
                spec.idx(b)?;
                (0..n).map(|i| lab(i) <= b).collect()
            }
            HittingSpec::TwoSided { b, a } => {
                if b >= a {
                    return Err(Error::InvalidCorridor { b, a });
                }
                spec.idx(b)?;
                spec.idx(a)?;
                (0..n).map(|i| lab(i) <= b || lab(i) >= a).collect()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// kill on entering (-inf, b]; survivors are (b, hi]
    Below(i64),
    /// kill on entering [a, inf); survivors are [lo, a)
    Above(i64),
    /// kill outside (b, a)
    Outside { b: i64, a: i64 },
}

impl Region {
    pub fn survives(&self, x: i64) -> bool {
        match *self {
            Region::Below(b) => x > b,
            Region::Above(a) => x < a,
            Region::Outside { b, a } => x > b && x < a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeEntry { x: i64, y: i64, value: f64 },
    EntryAboveOne { x: i64, y: i64, value: f64 },
    RowSumAboveOne { x: i64, sum: f64 },
    SkipFree { x: i64, y: i64, value: f64 },
    MissingUpStep { x: i64 },
    Reducible { unreachable: i64 },
    BoundaryMismatch { x: i64, flag: Boundary },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeEntry { x, y, value } => write!(f, "p({x},{y}) = {value:e} is negative"),
            Violation::EntryAboveOne { x, y, value } => write!(f, "p({x},{y}) = {value} exceeds 1"),
            Violation::RowSumAboveOne { x, sum } => write!(f, "row {x} sums to {sum} > 1"),
            Violation::SkipFree { x, y, value } => {
                write!(f, "p({x},{y}) = {value} jumps more than one state up")
            }
            Violation::MissingUpStep { x } => write!(f, "p({x},{}) = 0 at a non-absorbing state", x + 1),
            Violation::Reducible { unreachable } => {
                write!(f, "state {unreachable} is not strongly connected to the other non-absorbing states")
            }
            Violation::BoundaryMismatch { x, flag } => {
                write!(f, "row {x} is inconsistent with the {flag:?} boundary flag")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(spec: &ChainSpec) -> ValidationReport {
    let n = spec.len();
    let p = spec.matrix();
    let mut v = Vec::new();
    for i in 0..n {
        let x = spec.label(i);
        for j in 0..n {
            let y = spec.label(j);
            let val = p[(i, j)];
            if val < -TOL {
                v.push(Violation::NegativeEntry { x, y, value: val });
            } else if val > 1.0 + TOL {
                v.push(Violation::EntryAboveOne { x, y, value: val });
            }
            if j >= i + 2 && val.abs() > TOL {
                v.push(Violation::SkipFree { x, y, value: val });
            }
        }
        let s = spec.row_sum(i);
        if s > 1.0 + TOL {
            v.push(Violation::RowSumAboveOne { x, sum: s });
        }
        if i + 1 < n && !spec.is_absorbing_state(i) && p[(i, i + 1)] <= 0.0 {
            v.push(Violation::MissingUpStep { x });
        }
    }
    for (i, flag) in [(n - 1, spec.top()), (0, spec.bottom())] {
        let ok = match flag {
            Boundary::Absorbing => spec.is_absorbing_state(i),
            Boundary::Killing => spec.leak(i) > TOL,
            Boundary::Regular => !spec.is_absorbing_state(i) || n == 1,
        };
        if !ok {
            v.push(Violation::BoundaryMismatch { x: spec.label(i), flag });
        }
    }
    let live: Vec<bool> = (0..n).map(|i| !spec.is_absorbing_state(i)).collect();
    if let Some(u) = first_unconnected(p, &live) {
        v.push(Violation::Reducible { unreachable: spec.label(u) });
    }
    ValidationReport { violations: v }
}

/// Strong connectivity of the support graph on the `live` vertices: every live vertex must
/// reach, and be reached from, the first live vertex. Returns the first vertex that fails.
pub(crate) fn first_unconnected(p: &DMatrix<f64>, live: &[bool]) -> Option<usize> {
    let n = p.nrows();
    let root = live.iter().position(|&l| l)?;
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            for w in 0..n {
                let edge = if forward { p[(u, w)] } else { p[(w, u)] };
                if live[w] && !seen[w] && edge > 0.0 {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    };
    let fwd = reach(true);
    let bwd = reach(false);
    (0..n).find(|&i| live[i] && !(fwd[i] && bwd[i]))
}

pub fn is_irreducible(spec: &ChainSpec) -> bool {
    first_unconnected(spec.matrix(), &vec![true; spec.len()]).is_none()
}

pub fn stationary(spec: &ChainSpec) -> Result<Measure> {
    if !spec.is_stochastic() {
        return Err(Error::NoStationaryLaw("chain is substochastic".into()));
    }
    if !is_irreducible(spec) {
        return Err(Error::NoStationaryLaw("chain is reducible".into()));
    }
    // state reduction (Grassmann-Taksar-Heyman): no subtractions, so tiny masses keep
    // their relative accuracy
    let n = spec.len();
    let mut a = spec.matrix().clone();
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[(k, j)]).sum();
        if !(s > 0.0) {
            return Err(Error::NoStationaryLaw("singular balance system".into()));
        }
        for i in 0..k {
            a[(i, k)] /= s;
        }
        for i in 0..k {
            for j in 0..k {
                a[(i, j)] += a[(i, k)] * a[(k, j)];
            }
        }
    }
    let mut pi = DVector::zeros(n);
    pi[0] = 1.0;
    for k in 1..n {
        pi[k] = (0..k).map(|i| pi[i] * a[(i, k)]).sum();
    }
    pi /= pi.sum();
    let resid = (pi.transpose() * spec.matrix() - pi.transpose()).amax();
    if resid >= 1e-12 || pi.iter().any(|v| *v <= 0.0) {
        return Err(Error::Numeric(format!("stationary residual {resid:e}")));
    }
    Measure::new(pi.iter().copied().collect())
}

/// Reference measure used when none is supplied: the stationary law for ergodic chains,
/// otherwise the expected occupation measure 1ᵀ(I - P)^{-1} on the non-absorbing states
/// (absorbing states get weight one).
pub fn reference_measure(spec: &ChainSpec) -> Result<Measure> {
    if spec.is_stochastic() && is_irreducible(spec) {
        return stationary(spec);
    }
    let n = spec.len();
    let live: Vec<usize> = (0..n).filter(|&i| !spec.is_absorbing_state(i)).collect();
    let m = live.len();
    let mut a = DMatrix::identity(m, m);
    for (r, &i) in live.iter().enumerate() {
        for (c, &j) in live.iter().enumerate() {
            a[(r, c)] -= spec.matrix()[(i, j)];
        }
    }
    let occ = linalg::solve_vec(&a.transpose(), &DVector::from_element(m, 1.0))
        .ok_or_else(|| Error::NoStationaryLaw("recurrent class without a stationary law".into()))?;
    let mut values = vec![1.0; n];
    for (r, &i) in live.iter().enumerate() {
        values[i] = occ[r];
    }
    Measure::new(values)
}

/// π-dual p̂(y,x) = p(x,y)π(x)/π(y), without checking excessivity.
pub fn dual_unchecked(spec: &ChainSpec, pi: &Measure) -> ChainSpec {
    let d = pi.values();
    let n = spec.len();
    let p = DMatrix::from_fn(n, n, |y, x| spec.matrix()[(x, y)] * d[x] / d[y]);
    ChainSpec { lo: spec.lo, p, top: spec.top, bottom: spec.bottom }
}

pub fn dual(spec: &ChainSpec, pi: &Measure) -> Result<ChainSpec> {
    pi.check_len(spec)?;
    if let Some(y) = pi.excessivity_violation(spec) {
        return Err(Error::InvalidReferenceMeasure { state: spec.label(y), reason: "(πP)(y) > π(y)" });
    }
    Ok(dual_unchecked(spec, pi))
}

/// Index range of the survivors of `region`, or `None` if nothing is killed.
pub(crate) fn survivor_range(spec: &ChainSpec, region: Region) -> Result<(usize, usize)> {
    let (lo, hi) = (spec.lo(), spec.hi());
    let (a, b) = match region {
        Region::Below(b) => (b + 1, hi),
        Region::Above(a) => (lo, a - 1),
        Region::Outside { b, a } => {
            if b >= a {
                return Err(Error::InvalidCorridor { b, a });
            }
            (b + 1, a - 1)
        }
    };
    let (a, b) = (a.max(lo), b.min(hi));
    if a > b {
        return Err(Error::DegenerateChain);
    }
    Ok(((a - lo) as usize, (b - lo) as usize))
}

pub fn kill(spec: &ChainSpec, region: Region) -> Result<ChainSpec> {
    let (i0, i1) = survivor_range(spec, region)?;
    let p = linalg::principal(spec.matrix(), i0, Some(i1));
    let bottom = if i0 > 0 { Boundary::Killing } else { spec.bottom };
    let top = if i1 + 1 < spec.len() { Boundary::Killing } else { spec.top };
    Ok(ChainSpec { lo: spec.label(i0), p, top, bottom })
}

pub fn doob_transform(spec: &ChainSpec, h: &[f64], q: f64) -> Result<ChainSpec> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Domain("q must lie in (0, 1]"));
    }
    let n = spec.len();
    if h.len() != n {
        return Err(Error::Structural(format!("h has {} entries, chain has {n} states", h.len())));
    }
    if let Some(i) = h.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidH(spec.label(i)));
    }
    let hv = DVector::from_column_slice(h);
    let ph = spec.matrix() * &hv * q;
    if let Some(i) = (0..n).find(|&i| ph[i] > h[i] * (1.0 + TOL) + TOL) {
        return Err(Error::InvalidH(spec.label(i)));
    }
    let p = DMatrix::from_fn(n, n, |i, j| q * spec.matrix()[(i, j)] * h[j] / h[i]);
    Ok(ChainSpec { lo: spec.lo, p, top: spec.top, bottom: spec.bottom })
}

pub fn is_stochastically_monotone(spec: &ChainSpec) -> bool {
    let n = spec.len();
    let p = spec.matrix();
    (0..n).all(|x| {
        let cum = |y: usize| (0..=x).map(|z| p[(y, z)]).sum::<f64>();
        (0..n - 1).all(|y| cum(y + 1) <= cum(y) + TOL)
    })
}
