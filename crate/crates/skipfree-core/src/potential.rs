//! q-potential kernels, hitting-time pgfs and the fundamental q-excessive functions
//! H_q, Ĥ_q, H_q^{b]} from which G_q is rebuilt.
//!
//! The top boundary 𝔯 is materialised as a state. With an absorbing top it is `hi`; with a
//! killing top a cemetery `hi + 1` is appended that receives the top row's deficit. A
//! regular top is handled as a proxy (𝔯 = hi, hitting time of hi), which is what the
//! regular-boundary formula needs, but the reconstruction identities are only claimed
//! for the other two cases.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::chain::{dual_unchecked, kill, Boundary, ChainSpec, HittingSpec, Measure, Region};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialKernel {
    pub q: f64,
    pub lo: i64,
    /// G(x,y) = Σ_n q^n p^{(n)}(x,y) / π(y)
    pub g: DMatrix<f64>,
    pub pi: Measure,
    /// ‖(I - qP)G D_π - I‖_∞
    pub residual: f64,
}

impl PotentialKernel {
    pub fn at(&self, x: i64, y: i64) -> f64 {
        self.g[((x - self.lo) as usize, (y - self.lo) as usize)]
    }
}

pub(crate) fn check_q(q: f64, allow_one: bool) -> Result<()> {
    let ok = q > 0.0 && (q < 1.0 || (allow_one && q == 1.0));
    if ok {
        Ok(())
    } else if allow_one {
        Err(Error::Domain("q must lie in (0, 1]"))
    } else {
        Err(Error::Domain("q must lie in (0, 1)"))
    }
}

/// Occupation kernel (I - qP)^{-1} and its residual.
pub(crate) fn resolvent(p: &DMatrix<f64>, q: f64) -> Result<(DMatrix<f64>, f64)> {
    let n = p.nrows();
    let a = DMatrix::identity(n, n) - p * q;
    let r = linalg::inverse(&a).ok_or(Error::DivergentPotential)?;
    let resid = linalg::max_abs(&(&a * &r - DMatrix::identity(n, n)));
    Ok((r, resid))
}

pub(crate) fn green_matrix(p: &DMatrix<f64>, pi: &DVector<f64>, q: f64) -> Result<DMatrix<f64>> {
    let (mut r, _) = resolvent(p, q)?;
    for j in 0..r.ncols() {
        r.column_mut(j).scale_mut(1.0 / pi[j]);
    }
    Ok(r)
}

pub fn green(spec: &ChainSpec, pi: &Measure, q: f64) -> Result<PotentialKernel> {
    check_q(q, true)?;
    pi.check_len(spec)?;
    let (r, residual) = resolvent(spec.matrix(), q)?;
    let scale = linalg::max_abs(&r).max(1.0);
    if residual > 1e-12 * scale {
        return Err(Error::Numeric(alloc::format!("resolvent residual {residual:e}")));
    }
    let mut g = r;
    for j in 0..g.ncols() {
        g.column_mut(j).scale_mut(1.0 / pi.at(j));
    }
    Ok(PotentialKernel { q, lo: spec.lo(), g, pi: pi.clone(), residual })
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cell {
    Free,
    Target,
    Killed,
}

/// Free cells with no path to a target become killed cells.
pub(crate) fn prune_unreachable(p: &DMatrix<f64>, cells: &[Cell]) -> Vec<Cell> {
    let n = p.nrows();
    let mut reach: Vec<bool> = cells.iter().map(|c| *c == Cell::Target).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if !reach[i] && cells[i] == Cell::Free && (0..n).any(|j| reach[j] && p[(i, j)] > 0.0) {
                reach[i] = true;
                changed = true;
            }
        }
    }
    (0..n).map(|i| if cells[i] == Cell::Free && !reach[i] { Cell::Killed } else { cells[i] }).collect()
}

/// u = qPu on free cells, 1 on targets, 0 on killed cells. Free cells that cannot reach a
/// target are set to zero first, which keeps the q = 1 system non-singular.
pub(crate) fn entrance_pgf(p: &DMatrix<f64>, cells: &[Cell], q: f64) -> Result<DVector<f64>> {
    let n = p.nrows();
    let cells = prune_unreachable(p, cells);
    let free: Vec<usize> = (0..n).filter(|&i| cells[i] == Cell::Free).collect();
    let m = free.len();
    let mut u = DVector::from_fn(n, |i, _| if cells[i] == Cell::Target { 1.0 } else { 0.0 });
    if m == 0 {
        return Ok(u);
    }
    let mut a = DMatrix::identity(m, m);
    let mut rhs = DVector::zeros(m);
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            a[(r, c)] -= q * p[(i, j)];
        }
        rhs[r] = q * (0..n).filter(|&j| cells[j] == Cell::Target).map(|j| p[(i, j)]).sum::<f64>();
    }
    let sol = linalg::solve_vec(&a, &rhs).ok_or(Error::DivergentPotential)?;
    for (r, &i) in free.iter().enumerate() {
        u[i] = sol[r];
    }
    Ok(u)
}

/// v = qPv on the cells left as `None`, with the given values elsewhere; q < 1.
pub(crate) fn harmonic_fill(p: &DMatrix<f64>, q: f64, fixed: &[Option<f64>]) -> Result<DVector<f64>> {
    let n = p.nrows();
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut v = DVector::from_fn(n, |i, _| fixed[i].unwrap_or(0.0));
    if free.is_empty() {
        return Ok(v);
    }
    let m = free.len();
    let mut a = DMatrix::identity(m, m);
    let mut rhs = DVector::zeros(m);
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            a[(r, c)] -= q * p[(i, j)];
        }
        rhs[r] = q * (0..n).filter_map(|j| fixed[j].map(|f| p[(i, j)] * f)).sum::<f64>();
    }
    let sol = linalg::solve_vec(&a, &rhs).ok_or(Error::DivergentPotential)?;
    for (r, &i) in free.iter().enumerate() {
        v[i] = sol[r];
    }
    Ok(v)
}

/// E_x(q^T) for every start state x.
pub fn hitting_pgf_all(spec: &ChainSpec, hs: HittingSpec, q: f64) -> Result<DVector<f64>> {
    check_q(q, true)?;
    let targets = hs.targets(spec)?;
    let cells: Vec<Cell> = targets.iter().map(|&t| if t { Cell::Target } else { Cell::Free }).collect();
    let u = entrance_pgf(spec.matrix(), &cells, q)?;
    match hs {
        HittingSpec::Return(_) => Ok(spec.matrix() * &u * q),
        _ => Ok(u),
    }
}

pub fn hitting_pgf(spec: &ChainSpec, hs: HittingSpec, q: f64, x: i64) -> Result<f64> {
    let i = spec.idx(x)?;
    Ok(hitting_pgf_all(spec, hs, q)?[i])
}

/// The chain with its top exit 𝔯 materialised.
#[derive(Debug, Clone)]
pub(crate) struct Extended {
    pub p: DMatrix<f64>,
    pub pi: DVector<f64>,
    /// index of 𝔯
    pub r: usize,
    pub cemetery: bool,
    pub proxy: bool,
}

impl Extended {
    pub fn new(spec: &ChainSpec, pi: &Measure) -> Result<Extended> {
        pi.check_len(spec)?;
        let n = spec.len();
        match spec.top() {
            Boundary::Killing => {
                let mut p = DMatrix::zeros(n + 1, n + 1);
                p.view_mut((0, 0), (n, n)).copy_from(spec.matrix());
                p[(n - 1, n)] = spec.leak(n - 1);
                p[(n, n)] = 1.0;
                let pi = DVector::from_fn(n + 1, |i, _| if i < n { pi.at(i) } else { 1.0 });
                Ok(Extended { p, pi, r: n, cemetery: true, proxy: false })
            }
            top => Ok(Extended {
                p: spec.matrix().clone(),
                pi: pi.values().clone(),
                r: n - 1,
                cemetery: false,
                proxy: top == Boundary::Regular,
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    /// E_x(q^{T_𝔯}; T_𝔯 < T_{b]}) for every x; `b = None` means no killing.
    pub fn top_pgf(&self, q: f64, below: Option<usize>) -> Result<DVector<f64>> {
        let cells: Vec<Cell> = (0..self.len())
            .map(|i| {
                if i == self.r {
                    Cell::Target
                } else if below.is_some_and(|b| i <= b) {
                    Cell::Killed
                } else {
                    Cell::Free
                }
            })
            .collect();
        entrance_pgf(&self.p, &cells, q)
    }

    /// E_x(q^{T_𝔯}; T_{b]} < T_𝔯) given u = E_·(q^{T_𝔯}): u on (-inf, b], 0 at 𝔯 and
    /// q-harmonic in between.
    pub fn top_gap(&self, q: f64, b: usize, u: &DVector<f64>) -> Result<DVector<f64>> {
        let fixed: Vec<Option<f64>> =
            (0..self.len()).map(|i| if i <= b { Some(u[i]) } else if i == self.r { Some(0.0) } else { None }).collect();
        harmonic_fill(&self.p, q, &fixed)
    }

    pub fn dual_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |y, x| self.p[(x, y)] * self.pi[x] / self.pi[y])
    }

    /// Ê_x(q^{T_lo}) on the formal π-dual.
    pub fn dual_bottom_pgf(&self, q: f64) -> Result<DVector<f64>> {
        let n = self.len();
        let hat = self.dual_matrix();
        let mut cells = vec![Cell::Free; n];
        cells[0] = Cell::Target;
        entrance_pgf(&hat, &cells, q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FqEBundle {
    pub q: f64,
    pub lo: i64,
    pub ref_point: i64,
    /// label of 𝔯 (hi, or hi + 1 when a cemetery was appended for a killing top)
    pub top: i64,
    pub cemetery: bool,
    /// regular top handled through the proxy 𝔯 = hi
    pub proxy: bool,
    /// H_q over [lo, 𝔯]
    pub h: Vec<f64>,
    /// Ĥ_q over [lo, 𝔯]
    pub h_hat: Vec<f64>,
    /// H_q^{b]} over [lo, 𝔯], zero at and below b
    pub h_killed: BTreeMap<i64, Vec<f64>>,
    /// H_q − H_q^{b]} from its own solve; the difference of the stored vectors cancels badly for small q
    pub h_gap: BTreeMap<i64, Vec<f64>>,
    /// max over cutoffs of |H − H^{b]} − gap| / max H
    pub gap_residual: f64,
    /// κ_q^{b]}
    pub kappa: BTreeMap<i64, f64>,
    /// C_q = G_q(𝔬, 𝔬)
    pub c: f64,
    /// reference measure over [lo, 𝔯]
    pub pi: Vec<f64>,
}

impl FqEBundle {
    fn idx(&self, x: i64) -> usize {
        (x - self.lo) as usize
    }

    pub fn h_at(&self, x: i64) -> f64 {
        self.h[self.idx(x)]
    }

    pub fn h_hat_at(&self, x: i64) -> f64 {
        self.h_hat[self.idx(x)]
    }

    /// H^{y]}; the vector for y = 𝔯 is identically zero.
    pub fn killed(&self, y: i64) -> Result<Vec<f64>> {
        if y >= self.top {
            return Ok(vec![0.0; self.h.len()]);
        }
        if y < self.lo {
            return Ok(self.h.clone());
        }
        self.h_killed.get(&y).cloned().ok_or(Error::IncompleteBundle(y))
    }

    /// H − H^{y]}.
    pub fn gap(&self, y: i64) -> Result<Vec<f64>> {
        if y >= self.top {
            return Ok(self.h.clone());
        }
        if y < self.lo {
            return Ok(vec![0.0; self.h.len()]);
        }
        self.h_gap.get(&y).cloned().ok_or(Error::IncompleteBundle(y))
    }

    /// x ↦ κ_q^{b]}(x) on (b, 𝔯]: H(x) over the killed chain's Martin kernel normalised at b + 1.
    /// Its value at 𝔯 is `kappa[b]`.
    pub fn kappa_profile(&self, b: i64) -> Result<Vec<(i64, f64)>> {
        let hk = self.killed(b)?;
        let anchor = hk[self.idx(b + 1)];
        Ok(((b + 1)..=self.top).map(|x| (x, self.h_at(x) * anchor / hk[self.idx(x)])).collect())
    }

    /// Every cutoff needed by [`green_via_fqe`].
    pub fn all_cutoffs(spec: &ChainSpec) -> Vec<i64> {
        let top = if spec.top() == Boundary::Killing { spec.hi() + 1 } else { spec.hi() };
        (spec.lo()..top).collect()
    }
}

pub fn fqe_bundle(spec: &ChainSpec, pi: &Measure, q: f64, ref_point: i64, cutoffs: &[i64]) -> Result<FqEBundle> {
    check_q(q, false)?;
    let top_label = if spec.top() == Boundary::Killing { spec.hi() + 1 } else { spec.hi() };
    if ref_point < spec.lo() || ref_point >= top_label {
        return Err(Error::InvalidReference(ref_point));
    }
    if spec.bottom() == Boundary::Absorbing {
        return Err(Error::WrongBoundary("FqE functions need a non-absorbing bottom state"));
    }
    let ext = Extended::new(spec, pi)?;
    let o = (ref_point - spec.lo()) as usize;
    let top = spec.lo() + ext.r as i64;

    let u = ext.top_pgf(q, None)?;
    let u_o = u[o];
    if !(u_o > 0.0) {
        return Err(Error::Numeric("reference point cannot reach the top".into()));
    }
    let h: Vec<f64> = u.iter().map(|v| v / u_o).collect();
    let uh = ext.dual_bottom_pgf(q)?;
    let h_hat: Vec<f64> = uh.iter().map(|v| v / uh[o]).collect();

    let mut h_killed = BTreeMap::new();
    let mut h_gap = BTreeMap::new();
    let mut gap_residual: f64 = 0.0;
    let h_max = h.iter().copied().fold(0.0, f64::max);
    let mut kappa = BTreeMap::new();
    for &b in cutoffs {
        if b < spec.lo() || b > top {
            return Err(Error::StateOutOfRange(b));
        }
        if b == top {
            continue;
        }
        let bi = (b - spec.lo()) as usize;
        let ub = ext.top_pgf(q, Some(bi))?;
        let hk: Vec<f64> = ub.iter().map(|v| v / u_o).collect();
        let gap: Vec<f64> = ext.top_gap(q, bi, &u)?.iter().map(|v| v / u_o).collect();
        for i in 0..gap.len() {
            gap_residual = gap_residual.max((h[i] - hk[i] - gap[i]).abs() / h_max);
        }
        kappa.insert(b, hk[bi + 1]);
        h_killed.insert(b, hk);
        h_gap.insert(b, gap);
    }
    let g = green_matrix(&ext.p, &ext.pi, q)?;
    Ok(FqEBundle {
        q,
        lo: spec.lo(),
        ref_point,
        top,
        cemetery: ext.cemetery,
        proxy: ext.proxy,
        h,
        h_hat,
        h_killed,
        h_gap,
        gap_residual,
        kappa,
        c: g[(o, o)],
        pi: ext.pi.iter().copied().collect(),
    })
}

/// G over [lo, 𝔯] from C_q, Ĥ_q, H_q and H_q^{y]}.
pub(crate) fn fqe_green_extended(bundle: &FqEBundle) -> Result<DMatrix<f64>> {
    if bundle.proxy {
        return Err(Error::WrongBoundary("reconstruction needs an absorbing or killing top"));
    }
    let m = bundle.h.len();
    let mut g = DMatrix::zeros(m, m);
    for j in 0..m {
        let y = bundle.lo + j as i64;
        let gap = bundle.gap(y)?;
        for i in 0..m {
            g[(i, j)] = bundle.c * bundle.h_hat[j] * gap[i];
        }
    }
    Ok(g)
}

/// Rebuilds G_q over [lo, hi] from the bundle.
pub fn green_via_fqe(bundle: &FqEBundle) -> Result<PotentialKernel> {
    let g = fqe_green_extended(bundle)?;
    let n = if bundle.cemetery { g.nrows() - 1 } else { g.nrows() };
    let g = g.view((0, 0), (n, n)).into_owned();
    Ok(PotentialKernel {
        q: bundle.q,
        lo: bundle.lo,
        g,
        pi: Measure::new(bundle.pi[..n].to_vec())?,
        residual: 0.0,
    })
}

fn scaled_residual(diff: f64, reference: &DMatrix<f64>) -> f64 {
    diff / linalg::max_abs(reference).max(f64::MIN_POSITIVE)
}

/// max_{x,y<a} |G(x,y) - G^{[a}(x,y) - E_x(q^{T_a}) G(a,y)|, relative to max |G|.
pub fn excursion_check(spec: &ChainSpec, pi: &Measure, q: f64, a: i64) -> Result<f64> {
    let ai = spec.idx(a)?;
    if ai == 0 {
        return Err(Error::DegenerateChain);
    }
    let g = green(spec, pi, q)?;
    let killed = kill(spec, Region::Above(a))?;
    let gk = green(&killed, &pi.restrict(0, ai - 1), q)?;
    let e = hitting_pgf_all(spec, HittingSpec::Point(a), q)?;
    let mut worst: f64 = 0.0;
    for x in 0..ai {
        for y in 0..ai {
            let d = g.g[(x, y)] - gk.g[(x, y)] - e[x] * g.g[(ai, y)];
            worst = worst.max(d.abs());
        }
    }
    Ok(scaled_residual(worst, &g.g))
}

/// Dual form: Ĝ(x,y) = Ĝ^{b]}(x,y) + Ê_x(q^{T_b}) Ĝ(b,y) for x,y > b.
pub fn excursion_check_dual(spec: &ChainSpec, pi: &Measure, q: f64, b: i64) -> Result<f64> {
    pi.check_len(spec)?;
    let bi = spec.idx(b)?;
    let n = spec.len();
    if bi + 1 >= n {
        return Err(Error::DegenerateChain);
    }
    let hat = dual_unchecked(spec, pi);
    let g = green(&hat, pi, q)?;
    let killed = kill(&hat, Region::Below(b))?;
    let gk = green(&killed, &pi.restrict(bi + 1, n - 1), q)?;
    let e = hitting_pgf_all(&hat, HittingSpec::Point(b), q)?;
    let mut worst: f64 = 0.0;
    for x in bi + 1..n {
        for y in bi + 1..n {
            let d = g.g[(x, y)] - gk.g[(x - bi - 1, y - bi - 1)] - e[x] * g.g[(bi, y)];
            worst = worst.max(d.abs());
        }
    }
    Ok(scaled_residual(worst, &g.g))
}

/// Hunt switching on a killed region: max |G^R(x,y) - Ĝ^R(y,x)| relative to max |G^R|,
/// where Ĝ^R is computed from the killed dual chain.
pub fn hunt_check(spec: &ChainSpec, pi: &Measure, q: f64, region: Region) -> Result<f64> {
    pi.check_len(spec)?;
    let (i0, i1) = crate::chain::survivor_range(spec, region)?;
    let pr = pi.restrict(i0, i1);
    let g = green(&kill(spec, region)?, &pr, q)?;
    let gh = green(&kill(&dual_unchecked(spec, pi), region)?, &pr, q)?;
    let diff = linalg::max_abs(&(&g.g - gh.g.transpose()));
    Ok(scaled_residual(diff, &g.g))
}

/// E_x(q^{T_b}) for a chain with a regular top, lo <= b < x <= hi.
pub fn regular_boundary_pgf(spec: &ChainSpec, pi: &Measure, q: f64, x: i64, b: i64) -> Result<f64> {
    if spec.top() != Boundary::Regular {
        return Err(Error::WrongBoundary("regular top required"));
    }
    check_q(q, false)?;
    pi.check_len(spec)?;
    let xi = spec.idx(x)?;
    let bi = spec.idx(b)?;
    if bi >= xi {
        return Err(Error::Domain("need b < x"));
    }
    let n = spec.len();
    if xi == n - 1 {
        let g = green(spec, pi, q)?;
        return Ok(g.g[(xi, bi)] / g.g[(bi, bi)]);
    }
    let o = 0;
    let ext = Extended::new(spec, pi)?;
    let r = ext.r;
    let u = ext.top_pgf(q, None)?;
    let ub = ext.top_pgf(q, Some(bi))?;
    let gap = ext.top_gap(q, bi, &u)?;
    let uh = ext.dual_bottom_pgf(q)?;
    let g = green(spec, pi, q)?;

    // K̄ = G^{[𝔯}(𝔬,𝔬)Ĥ^{[𝔯}(b) / (G(𝔬,𝔬)Ĥ(b)) = (1 - α)(1 - β) with
    // α = E_𝔬(q^{T_𝔯}) G(𝔯,𝔬)/G(𝔬,𝔬) and β = Ê_b(q^{T_lo}; T_𝔯 < T_lo)/Ê_b(q^{T_lo}).
    // H - K̄H^{b]} = (H - H^{b]}) + (α + β(1 - α))H^{b]} avoids subtracting nearly equal terms.
    let alpha = u[o] * g.g[(r, o)] / g.g[(o, o)];
    let fixed: Vec<Option<f64>> =
        (0..ext.len()).map(|i| if i == o { Some(0.0) } else if i == r { Some(uh[r]) } else { None }).collect();
    let dual_gap = harmonic_fill(&ext.dual_matrix(), q, &fixed)?;
    let beta = dual_gap[bi] / uh[bi];
    let one_minus_kbar = alpha + beta * (1.0 - alpha);
    Ok((gap[xi] + one_minus_kbar * ub[xi]) / u[bi])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::reference_measure;
    use crate::fixtures;

    #[test]
    fn scalar_geometric_series() {
        let c = 0.3;
        let spec = ChainSpec::from_rows(0, 0, &[vec![1.0 - c]], Boundary::Killing, Boundary::Killing).unwrap();
        let pi = Measure::new(vec![2.0]).unwrap();
        let g = green(&spec, &pi, 0.5).unwrap();
        assert!((g.at(0, 0) - 1.0 / ((1.0 - 0.5 * (1.0 - c)) * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn green_matches_truncated_power_sum() {
        let spec = fixtures::chain4_absorbing();
        let pi = reference_measure(&spec).unwrap();
        let q = 0.5;
        let g = green(&spec, &pi, q).unwrap();
        let mut acc = DMatrix::zeros(4, 4);
        let mut pw = DMatrix::identity(4, 4);
        let mut qn = 1.0;
        for _ in 0..=200 {
            acc += &pw * qn;
            pw = &pw * spec.matrix();
            qn *= q;
        }
        for j in 0..4 {
            acc.column_mut(j).scale_mut(1.0 / pi.at(j));
        }
        assert!(linalg::max_abs(&(acc - &g.g)) / linalg::max_abs(&g.g) < 1e-12);
    }

    #[test]
    fn recurrent_q_one_diverges() {
        let spec = fixtures::two_state();
        let pi = reference_measure(&spec).unwrap();
        assert_eq!(green(&spec, &pi, 1.0), Err(Error::DivergentPotential));
    }

    #[test]
    fn two_state_hitting_closed_form() {
        let v = hitting_pgf(&fixtures::two_state(), HittingSpec::Point(1), 0.5, 0).unwrap();
        assert!((v - 3.0 / 13.0).abs() < 1e-15);
    }

    #[test]
    fn pure_birth_negative_binomial() {
        for q in [0.2, 0.5, 0.9] {
            let v = hitting_pgf(&fixtures::pure_birth(), HittingSpec::Point(3), q, 0).unwrap();
            let f: f64 = 0.5 * q / (1.0 - 0.5 * q);
            assert!((v - f.powi(3)).abs() < 1e-14);
        }
    }

    #[test]
    fn lower_set_pgf_matches_killed_power_series() {
        let spec = fixtures::chain4_absorbing();
        let q: f64 = 0.7;
        let v = hitting_pgf(&spec, HittingSpec::LowerSet(0), q, 2).unwrap();
        // P_2(T_{0]} = n) = (K^{n-1} k)(2) with K the chain killed at 0 and k the one-step entrance
        let k = spec.matrix().view((1, 1), (3, 3)).into_owned();
        let entry = DVector::from_fn(3, |i, _| spec.matrix()[(i + 1, 0)]);
        let mut state = DVector::from_fn(3, |i, _| if i == 1 { 1.0 } else { 0.0 }).transpose();
        let mut sum = 0.0;
        for n in 1..=400 {
            sum += q.powi(n) * (&state * &entry)[0];
            state = &state * &k;
        }
        assert!((v - sum).abs() < 1e-10);
    }

    #[test]
    fn return_time_two_state() {
        // E_0(q^{T_0^+}) = 0.7q + 0.3q * E_1(q^{T_0})
        let q: f64 = 0.6;
        let e10 = 0.2 * q / (1.0 - 0.8 * q);
        let want = 0.7 * q + 0.3 * q * e10;
        let v = hitting_pgf(&fixtures::two_state(), HittingSpec::Return(0), q, 0).unwrap();
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn pure_birth_fqe_product_form() {
        let spec = fixtures::pure_birth().with_boundaries(Boundary::Absorbing, Boundary::Regular);
        let pi = reference_measure(&spec).unwrap();
        let q = 0.5;
        let b = fqe_bundle(&spec, &pi, q, 0, &[]).unwrap();
        let step: f64 = (1.0 - 0.5 * q) / (0.5 * q);
        for x in 0..=3 {
            assert!((b.h_at(x) - step.powi(x as i32)).abs() < 1e-12 * step.powi(x as i32));
        }
    }

    #[test]
    fn chain4a_reconstruction_and_kappa() {
        let spec = fixtures::chain4_absorbing();
        let pi = reference_measure(&spec).unwrap();
        let bundle = fqe_bundle(&spec, &pi, 0.5, 0, &FqEBundle::all_cutoffs(&spec)).unwrap();
        let direct = green(&spec, &pi, 0.5).unwrap();
        let rebuilt = green_via_fqe(&bundle).unwrap();
        assert!(linalg::max_abs(&(&direct.g - &rebuilt.g)) / linalg::max_abs(&direct.g) < 1e-12);
        for x in 0..4 {
            let diag = bundle.c * bundle.h_at(x) * bundle.h_hat_at(x);
            if x < 3 {
                assert!((direct.at(x, x) - diag).abs() < 1e-12 * direct.at(x, x));
            }
        }
        let prof = bundle.kappa_profile(0).unwrap();
        assert!(prof.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12)));
        assert!((prof.last().unwrap().1 - bundle.kappa[&0]).abs() < 1e-12);
        assert!(bundle.h.windows(2).all(|w| w[1] > w[0]));
        // Ĥ decreases on E; its value at the absorbing 𝔯 depends on the arbitrary π(𝔯)
        assert!(bundle.h_hat[..3].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn killing_top_reconstruction() {
        let spec = fixtures::chain4_killing();
        let pi = reference_measure(&spec).unwrap();
        let bundle = fqe_bundle(&spec, &pi, 0.7, 1, &FqEBundle::all_cutoffs(&spec)).unwrap();
        assert!(bundle.cemetery && bundle.top == 4);
        let direct = green(&spec, &pi, 0.7).unwrap();
        let rebuilt = green_via_fqe(&bundle).unwrap();
        assert!(linalg::max_abs(&(&direct.g - &rebuilt.g)) / linalg::max_abs(&direct.g) < 1e-12);
    }

    #[test]
    fn missing_cutoff_reported() {
        let spec = fixtures::chain4_absorbing();
        let pi = reference_measure(&spec).unwrap();
        let bundle = fqe_bundle(&spec, &pi, 0.5, 0, &[0, 2]).unwrap();
        assert_eq!(green_via_fqe(&bundle), Err(Error::IncompleteBundle(1)));
    }

    #[test]
    fn bad_reference_point() {
        let spec = fixtures::chain4_absorbing();
        let pi = reference_measure(&spec).unwrap();
        assert_eq!(fqe_bundle(&spec, &pi, 0.5, 3, &[]), Err(Error::InvalidReference(3)));
    }

    #[test]
    fn one_state_chain_green_is_c() {
        // with a killing top the cemetery makes 𝔬 = 0 < 𝔯 = 1 admissible even though hi = 0
        let spec = ChainSpec::from_rows(0, 0, &[vec![0.4]], Boundary::Killing, Boundary::Regular).unwrap();
        let pi = Measure::new(vec![1.0]).unwrap();
        let bundle = fqe_bundle(&spec, &pi, 0.5, 0, &[0]).unwrap();
        let g = green_via_fqe(&bundle).unwrap();
        assert!((g.at(0, 0) - bundle.c).abs() < 1e-15);
        assert!((g.at(0, 0) - green(&spec, &pi, 0.5).unwrap().at(0, 0)).abs() < 1e-15);
    }

    #[test]
    fn hitting_ratio_identity() {
        let spec = fixtures::chain4_absorbing();
        let pi = reference_measure(&spec).unwrap();
        let q = 0.3;
        let b = fqe_bundle(&spec, &pi, q, 0, &[]).unwrap();
        for y in 0..=3 {
            let e = hitting_pgf_all(&spec, HittingSpec::Point(y), q).unwrap();
            for x in 0..=y {
                assert!((e[x as usize] * b.h_at(y) - b.h_at(x)).abs() < 1e-12 * b.h_at(y));
            }
        }
    }

    #[test]
    fn two_sided_identity() {
        // E_x(q^{T_b}; T_b < T_a) = H(x)/H(b) - H(a)/H(b) * H^{b]}(x)/H^{b]}(a)
        let spec = fixtures::chain4_absorbing();
        let pi = reference_measure(&spec).unwrap();
        let q = 0.6;
        let bundle = fqe_bundle(&spec, &pi, q, 0, &[0]).unwrap();
        let (b, x, a) = (0i64, 1i64, 3i64);
        let hk = &bundle.h_killed[&b];
        let lhs = {
            let cells: Vec<Cell> = (0..4).map(|i| if i == 0 { Cell::Target } else if i == 3 { Cell::Killed } else { Cell::Free }).collect();
            entrance_pgf(spec.matrix(), &cells, q).unwrap()[x as usize]
        };
        let rhs = bundle.h_at(x) / bundle.h_at(b)
            - bundle.h_at(a) / bundle.h_at(b) * hk[x as usize] / hk[a as usize];
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn excursion_and_hunt_small_residuals() {
        let spec = fixtures::chain4_absorbing();
        let pi = reference_measure(&spec).unwrap();
        assert!(excursion_check(&spec, &pi, 0.5, 3).unwrap() < 1e-12);
        assert!(excursion_check_dual(&spec, &pi, 0.5, 0).unwrap() < 1e-12);
        assert!(hunt_check(&spec, &pi, 0.5, Region::Below(1)).unwrap() < 1e-12);
        assert!(excursion_check(&fixtures::pure_birth(), &reference_measure(&fixtures::pure_birth()).unwrap(), 0.5, 3).unwrap() < 1e-15);
    }

    #[test]
    fn regular_top_formula_matches_oracle() {
        let spec = fixtures::chain4();
        let pi = reference_measure(&spec).unwrap();
        for (x, b) in [(2, 0), (2, 1), (1, 0), (3, 0)] {
            let v = regular_boundary_pgf(&spec, &pi, 0.5, x, b).unwrap();
            let oracle = hitting_pgf(&spec, HittingSpec::Point(b), 0.5, x).unwrap();
            assert!((v - oracle).abs() < 1e-9, "x={x} b={b}: {v} vs {oracle}");
        }
        assert!(matches!(
            regular_boundary_pgf(&fixtures::chain4_absorbing(), &pi, 0.5, 2, 0),
            Err(Error::WrongBoundary(_))
        ));
    }

    #[test]
    fn regular_top_single_transition() {
        // b = x - 1 and the row below x only reaches b: E_x(q^{T_b}) solved one level deep
        let spec = fixtures::birth_death(4, 0.4, 0.3);
        let pi = reference_measure(&spec).unwrap();
        let v = regular_boundary_pgf(&spec, &pi, 0.5, 2, 1).unwrap();
        let oracle = hitting_pgf(&spec, HittingSpec::Point(1), 0.5, 2).unwrap();
        assert!((v - oracle).abs() < 1e-12);
    }
}
