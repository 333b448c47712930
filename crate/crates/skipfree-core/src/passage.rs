//! Passage-time laws as signed geometric mixtures, the link matrix intertwining a chain
//! with a pure-birth chain, and the infinite-divisibility data of upward passage times.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::chain::{Boundary, ChainSpec, HittingSpec, Measure};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::mixture::GeometricMixture;
use crate::potential::{prune_unreachable, Cell, Extended};

/// Radius of the circle on which numerators are interpolated.
const DFT_RADIUS: f64 = 0.9;

/// Eigenvalues of P restricted to [x_lo, x_hi], sorted by decreasing modulus.
pub fn restricted_eigenvalues(spec: &ChainSpec, x_lo: i64, x_hi: i64) -> Result<Vec<Complex64>> {
    let i0 = spec.idx(x_lo)?;
    let i1 = spec.idx(x_hi)?;
    if i1 < i0 {
        return Err(Error::Domain("need x_lo <= x_hi"));
    }
    Ok(block_eigenvalues(spec.matrix(), i0, i1 as i64))
}

/// Eigenvalues of the principal block on indices i0..=i1 (empty when i1 < i0).
fn block_eigenvalues(p: &DMatrix<f64>, i0: usize, i1: i64) -> Vec<Complex64> {
    if i1 < i0 as i64 {
        return Vec::new();
    }
    let mut ev = linalg::eigenvalues(&linalg::principal(p, i0, Some(i1 as usize)));
    linalg::sort_by_modulus(&mut ev);
    ev
}

/// det(I - qM) for the block, as a polynomial in q.
fn block_det_poly(p: &DMatrix<f64>, i0: usize, i1: i64) -> Vec<Complex64> {
    linalg::poly_from_reciprocal_roots(&block_eigenvalues(p, i0, i1))
}

fn up_product(p: &DMatrix<f64>, from: usize, to: usize) -> f64 {
    (from..to).map(|i| p[(i, i + 1)]).product()
}

/// Law of T_a - (a - x) under P_x for x <= a:
/// E_x(q^{T_a}) = q^{a-x} Π_{i=x}^{a-1} p(i,i+1) det(I - qP^{[lo,x-1]}) / det(I - qP^{[lo,a-1]}).
pub fn upward_law(spec: &ChainSpec, x: i64, a: i64) -> Result<GeometricMixture> {
    let xi = spec.idx(x)?;
    let ai = spec.idx(a)?;
    if xi > ai {
        return Err(Error::Domain("upward law needs x <= a"));
    }
    let shift = a - x;
    if xi == ai {
        return Ok(GeometricMixture::point(0));
    }
    let p = spec.matrix();
    let k = up_product(p, xi, ai);
    if !(k > 0.0) {
        return Err(Error::Structural(alloc::format!("missing up-step between {x} and {a}")));
    }
    let nodes = block_eigenvalues(p, 0, ai as i64 - 1);
    let num: Vec<Complex64> = block_det_poly(p, 0, xi as i64 - 1).iter().map(|z| z * k).collect();
    GeometricMixture::from_rational(&num, &nodes, shift)
}

/// Law of T_b or T_{b]} (x > b) from the two-sided hitting identity with the top exit 𝔯:
/// E_x(q^{T_b}) = H(x)/H(b) - H(𝔯)/H(b) · H^{b]}(x)/H^{b]}(𝔯), every ratio written as a
/// product of block determinants. Needs an absorbing or killing top.
pub fn downward_law(spec: &ChainSpec, x: i64, target: HittingSpec) -> Result<GeometricMixture> {
    let b = match target {
        HittingSpec::Point(b) | HittingSpec::LowerSet(b) => b,
        _ => return Err(Error::Domain("downward law takes a point or lower-set target")),
    };
    let xi = spec.idx(x)?;
    let bi = spec.idx(b)?;
    if xi <= bi {
        return match target {
            HittingSpec::Point(_) if xi < bi => upward_law(spec, x, b),
            _ => Ok(GeometricMixture::point(0)),
        };
    }
    if spec.top() == Boundary::Regular {
        return Err(Error::WrongBoundary("the determinant route needs an absorbing or killing top"));
    }
    let ext = Extended::new(spec, &Measure::uniform(spec.len()))?;
    let (p, xi, bi, r) = match target {
        HittingSpec::LowerSet(_) => {
            // glue [lo, b] into one state; its own row is irrelevant to T_g from above
            let m = ext.len() - bi;
            let mut g = DMatrix::zeros(m, m);
            g[(0, 0)] = 0.5;
            g[(0, 1)] = 0.5;
            for i in 1..m {
                g[(i, 0)] = (0..=bi).map(|k| ext.p[(bi + i, k)]).sum();
                for j in 1..m {
                    g[(i, j)] = ext.p[(bi + i, bi + j)];
                }
            }
            (g, xi - bi, 0, ext.r - bi)
        }
        _ => (ext.p.clone(), xi, bi, ext.r),
    };
    let (x_, b_, r_) = (xi as i64, bi as i64, r as i64);
    let lhs = linalg::poly_mul(&block_det_poly(&p, 0, x_ - 1), &block_det_poly(&p, bi + 1, r_ - 1));
    let rhs = linalg::poly_mul(&block_det_poly(&p, 0, r_ - 1), &block_det_poly(&p, bi + 1, x_ - 1));
    let full = linalg::poly_sub(&lhs, &rhs);
    let order = xi - bi;
    let scale = full.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if full.iter().take(order).any(|z| z.norm() > 1e-9 * scale) {
        return Err(Error::Numeric("numerator does not vanish to the expected order at q = 0".into()));
    }
    let k = up_product(&p, bi, xi);
    if !(k > 0.0) {
        return Err(Error::Structural(alloc::format!("missing up-step between {b} and {x}")));
    }
    let num: Vec<Complex64> = full.iter().skip(order).map(|z| z / k).collect();
    let mut nodes = block_eigenvalues(&p, 0, b_ - 1);
    nodes.extend(block_eigenvalues(&p, bi + 1, r_ - 1));
    GeometricMixture::from_rational(&num, &nodes, 0)
}

/// Any first-entrance law by Cramer's rule: nodes are the eigenvalues of P on the free states,
/// the numerator polynomial is interpolated from complex solves on a circle.
pub fn hitting_law(spec: &ChainSpec, hs: HittingSpec, x: i64) -> Result<GeometricMixture> {
    let xi = spec.idx(x)?;
    let p = spec.matrix();
    let n = spec.len();
    let targets = hs.targets(spec)?;
    if let HittingSpec::Return(_) = hs {
        // T^+ = 1 + T' after the first step
        let a = xi;
        let cells: Vec<Cell> = targets.iter().map(|&t| if t { Cell::Target } else { Cell::Free }).collect();
        let cells = prune_unreachable(p, &cells);
        let free: Vec<usize> = (0..n).filter(|&i| cells[i] == Cell::Free).collect();
        let row: Vec<f64> = (0..n).map(|j| p[(a, j)]).collect();
        return cramer_law(p, &cells, &free, |u: &CVector, q| {
            let mut s = c(row[a]);
            for (r, &i) in free.iter().enumerate() {
                s += u[r] * row[i];
            }
            s * q
        });
    }
    let cells: Vec<Cell> = targets.iter().map(|&t| if t { Cell::Target } else { Cell::Free }).collect();
    let cells = prune_unreachable(p, &cells);
    match cells[xi] {
        Cell::Target => return Ok(GeometricMixture::point(0)),
        Cell::Killed => return GeometricMixture::from_rational(&[c(0.0)], &[], 0),
        Cell::Free => {}
    }
    let free: Vec<usize> = (0..n).filter(|&i| cells[i] == Cell::Free).collect();
    let r0 = free.iter().position(|&i| i == xi).unwrap();
    cramer_law(p, &cells, &free, |u: &CVector, _| u[r0])
}

fn cramer_law<F>(p: &DMatrix<f64>, cells: &[Cell], free: &[usize], read: F) -> Result<GeometricMixture>
where
    F: Fn(&CVector, Complex64) -> Complex64,
{
    let m = free.len();
    let n = p.nrows();
    let pf = DMatrix::from_fn(m, m, |r, s| p[(free[r], free[s])]);
    let mut nodes = linalg::eigenvalues(&pf);
    linalg::sort_by_modulus(&mut nodes);
    let entry: Vec<f64> = free
        .iter()
        .map(|&i| (0..n).filter(|&j| cells[j] == Cell::Target).map(|j| p[(i, j)]).sum())
        .collect();
    // numerator degree is at most m + 1 (the extra step of a return time)
    let k = m + 2;
    let mut samples = Vec::with_capacity(k);
    for t in 0..k {
        let q = Complex64::from_polar(DFT_RADIUS, 2.0 * core::f64::consts::PI * t as f64 / k as f64);
        let a = CMatrix::from_fn(m, m, |r, s| if r == s { c(1.0) } else { c(0.0) } - q * pf[(r, s)]);
        let rhs = CVector::from_fn(m, |r, _| q * entry[r]);
        let u = linalg::csolve(&a, &rhs).ok_or(Error::DivergentPotential)?;
        let det = nodes.iter().fold(c(1.0), |acc, &z| acc * (c(1.0) - z * q));
        samples.push(read(&u, q) * det);
    }
    let num: Vec<Complex64> = (0..k)
        .map(|j| {
            let s: Complex64 = (0..k)
                .map(|t| samples[t] * Complex64::from_polar(1.0, -2.0 * core::f64::consts::PI * (j * t) as f64 / k as f64))
                .sum();
            s / (k as f64 * DFT_RADIUS.powi(j as i32))
        })
        .collect();
    let mut num = num;
    let scale = num.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in num.iter_mut() {
        if z.norm() < 1e-14 * scale {
            *z = c(0.0);
        }
    }
    GeometricMixture::from_rational(&num, &nodes, 0)
}

/// P_x(T = n) for n = 0..=n_max by iterating the killed matrix.
pub fn hitting_pmf(spec: &ChainSpec, hs: HittingSpec, x: i64, n_max: usize) -> Result<Vec<f64>> {
    let xi = spec.idx(x)?;
    let p = spec.matrix();
    let n = spec.len();
    let targets = hs.targets(spec)?;
    // f[n][i] = P_i(T = n)
    let mut cur: Vec<f64> = targets.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    let mut out = Vec::with_capacity(n_max + 1);
    let return_time = matches!(hs, HittingSpec::Return(_));
    if return_time {
        out.push(0.0);
    } else {
        out.push(cur[xi]);
    }
    for _ in 1..=n_max {
        if return_time {
            out.push((0..n).map(|j| p[(xi, j)] * cur[j]).sum());
        }
        let next: Vec<f64> = (0..n)
            .map(|i| if targets[i] { 0.0 } else { (0..n).map(|j| p[(i, j)] * cur[j]).sum() })
            .collect();
        cur = next;
        if !return_time {
            out.push(cur[xi]);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkMatrix {
    pub lo: i64,
    pub a: i64,
    /// eigenvalues λ_0..λ_{a-1} of P on [lo, a-1]
    pub lambda: Vec<Complex64>,
    /// Λ(i,j) = Q_i(lo, j)
    pub link: CMatrix,
    /// pure-birth chain with holding λ_i and λ_a = 1
    pub p_tilde: CMatrix,
    /// P on [lo, a] with a absorbing
    pub p: DMatrix<f64>,
}

pub fn link_matrix(spec: &ChainSpec, a: i64) -> Result<LinkMatrix> {
    let ai = spec.idx(a)?;
    if ai == 0 {
        return Err(Error::DegenerateChain);
    }
    let m = ai + 1;
    let mut p = DMatrix::from_fn(m, m, |i, j| if i < ai { spec.matrix()[(i, j)] } else { 0.0 });
    p[(ai, ai)] = 1.0;
    let lambda = block_eigenvalues(spec.matrix(), 0, ai as i64 - 1);
    let pc = linalg::to_complex(&p);
    let id = CMatrix::identity(m, m);
    let mut q = id.clone();
    let mut link = CMatrix::zeros(m, m);
    for k in 0..m {
        link.row_mut(k).copy_from(&q.row(0));
        if k < ai {
            let l = lambda[k];
            q = (&q * (&pc - &id * l)) / (c(1.0) - l);
        }
    }
    let mut p_tilde = CMatrix::zeros(m, m);
    for i in 0..m {
        let l = if i < ai { lambda[i] } else { c(1.0) };
        p_tilde[(i, i)] = l;
        if i < ai {
            p_tilde[(i, i + 1)] = c(1.0) - l;
        }
    }
    Ok(LinkMatrix { lo: spec.lo(), a, lambda, link, p_tilde, p })
}

impl LinkMatrix {
    /// max |ΛP - P̃Λ|.
    pub fn intertwining_residual(&self) -> f64 {
        let pc = linalg::to_complex(&self.p);
        let d = &self.link * pc - &self.p_tilde * &self.link;
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Λ(a,a) = P_lo(T_a < ∞).
    pub fn hit_probability(&self) -> f64 {
        let k = self.link.nrows() - 1;
        self.link[(k, k)].re
    }

    /// Λ(a,a) P̃^t(lo, a) for t = 0..=t_max, i.e. P_lo(T_a <= t).
    pub fn cdf(&self, t_max: usize) -> Vec<f64> {
        let m = self.link.nrows();
        let mut row = CVector::from_fn(m, |i, _| if i == 0 { c(1.0) } else { c(0.0) }).transpose();
        let mut out = Vec::with_capacity(t_max + 1);
        for _ in 0..=t_max {
            out.push((self.link[(m - 1, m - 1)] * row[m - 1]).re);
            row *= &self.p_tilde;
        }
        out
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.link.nrows()).map(|i| self.link.row(i).iter().map(|z| z.re).sum::<f64>()).fold(f64::MIN, f64::max)
    }
}

/// Infinite-divisibility data of T_a - (a - x) under P_x.
#[derive(Debug, Clone, PartialEq)]
pub struct IdLaw {
    pub x: i64,
    pub a: i64,
    /// -ln P_x(T_a < ∞)
    pub b: f64,
    /// canonical sequence from eigenvalue power sums, clipped at zero
    pub r: Vec<f64>,
    /// the same before clipping
    pub r_raw: Vec<f64>,
    /// the same from traces of powers of the restricted matrices
    pub r_trace: Vec<f64>,
    /// eigenvalues of P on [lo, a-1]
    pub nodes_a: Vec<Complex64>,
    /// eigenvalues of P on [lo, x-1]
    pub nodes_x: Vec<Complex64>,
}

impl IdLaw {
    /// R(s) = Σ λ/(1 - λs) - Σ β/(1 - βs).
    pub fn big_r(&self, s: f64) -> f64 {
        self.big_r_derivative(s, 0)
    }

    /// m-th derivative of R: m! (Σ λ^{m+1}/(1 - λs)^{m+1} - Σ β^{m+1}/(1 - βs)^{m+1}).
    pub fn big_r_derivative(&self, s: f64, m: u32) -> f64 {
        let term = |z: &Complex64| z.powu(m + 1) / (c(1.0) - z * s).powu(m + 1);
        let total: Complex64 = self.nodes_a.iter().map(term).sum::<Complex64>() - self.nodes_x.iter().map(term).sum::<Complex64>();
        let fact: f64 = (1..=m).map(|i| i as f64).product();
        fact * total.re
    }

    /// Σ_{k<=k_max} r_k s^k with the stored sequence.
    pub fn big_r_series(&self, s: f64) -> f64 {
        self.r_raw.iter().rev().fold(0.0, |acc, r| acc * s + r)
    }
}

pub fn canonical_sequence(spec: &ChainSpec, x: i64, a: i64, k_max: usize) -> Result<IdLaw> {
    let xi = spec.idx(x)?;
    let ai = spec.idx(a)?;
    if xi > ai {
        return Err(Error::Domain("canonical sequence needs x <= a"));
    }
    let p = spec.matrix();
    let nodes_a = block_eigenvalues(p, 0, ai as i64 - 1);
    let nodes_x = block_eigenvalues(p, 0, xi as i64 - 1);
    let power_sum = |nodes: &[Complex64], k: usize| nodes.iter().map(|z| z.powu(k as u32 + 1)).sum::<Complex64>().re;
    let r_raw: Vec<f64> = (0..=k_max).map(|k| power_sum(&nodes_a, k) - power_sum(&nodes_x, k)).collect();
    let traces = |i1: usize| -> Vec<f64> {
        if i1 == 0 {
            return vec![0.0; k_max + 1];
        }
        let m = linalg::principal(p, 0, Some(i1 - 1));
        let mut pw = m.clone();
        let mut out = Vec::with_capacity(k_max + 1);
        for _ in 0..=k_max {
            out.push(pw.trace());
            pw = &pw * &m;
        }
        out
    };
    let (ta, tx) = (traces(ai), traces(xi));
    let r_trace: Vec<f64> = ta.iter().zip(&tx).map(|(u, v)| u - v).collect();
    let r = r_raw.iter().map(|v| v.max(0.0)).collect();
    let mass = upward_law(spec, x, a)?.total_mass();
    if !(mass > 0.0) {
        return Err(Error::Numeric("x cannot reach a".into()));
    }
    Ok(IdLaw { x, a, b: -mass.ln(), r, r_raw, r_trace, nodes_a, nodes_x })
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Option<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    // the second test stops refinement once the estimate is at its round-off floor
    let scale = (b - a) * (fa.abs() + flm.abs() + fm.abs() + frm.abs() + fb.abs());
    if diff.abs() <= 15.0 * tol || diff.abs() <= 64.0 * f64::EPSILON * scale {
        return Some(left + right + diff / 15.0);
    }
    if depth == 0 {
        return None;
    }
    // halving stops at a floor so that deep refinement near a pole can still terminate
    let child = (0.5 * tol).max(1e-18);
    Some(simpson(f, a, m, fa, flm, fm, left, child, depth - 1)? + simpson(f, m, b, fm, frm, fb, right, child, depth - 1)?)
}

/// Adaptive Simpson quadrature of f over [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
        .ok_or_else(|| Error::Numeric(alloc::format!("quadrature on [{a}, {b}] did not reach {tol:e}")))
}

/// exp(-b - ∫_q^1 R(s) ds), the pgf of T_a - (a - x).
pub fn id_reconstruct(law: &IdLaw, q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain("q must lie in [0, 1)"));
    }
    // the two spectral sums are integrated apart: near s = 1 each can be large while R is not
    let part = |nodes: &[Complex64]| integrate(|s| nodes.iter().map(|z| z / (c(1.0) - z * s)).sum::<Complex64>().re, q, 1.0, 1e-11);
    let integral = part(&law.nodes_a)? - part(&law.nodes_x)?;
    Ok((-law.b - integral).exp())
}

/// Signed step function on [-1, 1] as (left, right, height) pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct UWeight {
    pub pieces: Vec<(f64, f64, f64)>,
}

impl UWeight {
    pub fn moment(&self, k: u32) -> f64 {
        self.pieces
            .iter()
            .map(|&(l, r, h)| h * (r.powi(k as i32 + 1) - l.powi(k as i32 + 1)) / (k + 1) as f64)
            .sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.pieces.iter().map(|&(l, r, h)| h.abs() * (r - l)).sum()
    }
}

/// w^{x→a} = Σ_j 1_{(0,λ_j)} - Σ_j 1_{(0,β_j)} with oriented indicators, so that
/// ∫ y^k w(y) dy = r_k / (k + 1). Real spectra only.
pub fn u_class_weight(law: &IdLaw) -> Result<UWeight> {
    if law.nodes_a.iter().chain(&law.nodes_x).any(|z| z.im != 0.0) {
        return Err(Error::Unsupported("the weight is only defined here for real spectra".into()));
    }
    let mut pieces = Vec::new();
    for (nodes, sign) in [(&law.nodes_a, 1.0), (&law.nodes_x, -1.0)] {
        for z in nodes.iter() {
            let l = z.re;
            if l > 0.0 {
                pieces.push((0.0, l, sign));
            } else if l < 0.0 {
                pieces.push((l, 0.0, -sign));
            }
        }
    }
    Ok(UWeight { pieces })
}

/// q ↦ d/dq log(q^{-(a-x)} H_q(x)/H_q(a)) has derivatives of order 0..=order that are
/// non-negative on the grid {0, 0.1, ..., 0.9}.
pub fn abs_monotone_probe(spec: &ChainSpec, x: i64, a: i64, order: u32) -> Result<bool> {
    spec.idx(x)?;
    spec.idx(a)?;
    let (law, sign) = if x <= a {
        (canonical_sequence(spec, x, a, 0)?, 1.0)
    } else {
        (canonical_sequence(spec, a, x, 0)?, -1.0)
    };
    for i in 0..10 {
        let s = i as f64 / 10.0;
        for m in 0..=order {
            if sign * law.big_r_derivative(s, m) < -1e-10 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::potential::hitting_pgf;

    fn max_pmf_gap(law: &GeometricMixture, oracle: &[f64]) -> f64 {
        oracle.iter().enumerate().map(|(n, &v)| (law.pmf_at(n as i64) - v).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn restricted_spectra() {
        let pb = fixtures::pure_birth();
        let ev = restricted_eigenvalues(&pb, 0, 2).unwrap();
        assert!(ev.iter().all(|z| (z - c(0.5)).norm() < 1e-15));
        let ev = restricted_eigenvalues(&fixtures::two_state(), 0, 0).unwrap();
        assert_eq!(ev, vec![c(0.7)]);
        let c4 = fixtures::chain4();
        let ev = restricted_eigenvalues(&c4, 0, 2).unwrap();
        let tr: f64 = (0..3).map(|i| c4.matrix()[(i, i)]).sum();
        assert!((ev.iter().sum::<Complex64>().re - tr).abs() < 1e-10);
    }

    #[test]
    fn pure_birth_upward_negative_binomial() {
        let law = upward_law(&fixtures::pure_birth(), 0, 3).unwrap();
        assert_eq!(law.multiplicities, vec![3]);
        assert_eq!(law.shift, 3);
        assert!((law.pmf(0) - 0.125).abs() < 1e-12);
        assert!(law.defect.abs() < 1e-12);
    }

    #[test]
    fn two_state_upward_geometric() {
        let law = upward_law(&fixtures::two_state(), 0, 1).unwrap();
        for n in 0..30 {
            assert!((law.pmf(n) - 0.3 * 0.7f64.powi(n as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn chain4a_upward_matches_oracle() {
        let c = fixtures::chain4_absorbing();
        for x in 0..3 {
            let law = upward_law(&c, x, 3).unwrap();
            let oracle = hitting_pmf(&c, HittingSpec::Point(3), x, 200).unwrap();
            assert!(max_pmf_gap(&law, &oracle) < 1e-9);
            assert!(law.max_pmf_imag(200) < 1e-12);
            let mass = hitting_pgf(&c, HittingSpec::Point(3), 1.0, x).unwrap();
            assert!((law.total_mass() - mass).abs() < 1e-10);
        }
    }

    #[test]
    fn downward_routes_agree_with_oracle() {
        for c in [fixtures::chain4_absorbing(), fixtures::chain4_killing()] {
            for (x, b) in [(2, 0), (3, 1), (1, 0), (3, 0)] {
                for hs in [HittingSpec::Point(b), HittingSpec::LowerSet(b)] {
                    let oracle = hitting_pmf(&c, hs, x, 200).unwrap();
                    let det = downward_law(&c, x, hs).unwrap();
                    let cramer = hitting_law(&c, hs, x).unwrap();
                    assert!(max_pmf_gap(&det, &oracle) < 1e-9, "{hs:?} x={x}");
                    assert!(max_pmf_gap(&cramer, &oracle) < 1e-9, "{hs:?} x={x}");
                    assert!(det.max_pmf_imag(200) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn regular_top_downward_by_cramer() {
        let c = fixtures::chain4();
        let law = hitting_law(&c, HittingSpec::Point(0), 2).unwrap();
        let oracle = hitting_pmf(&c, HittingSpec::Point(0), 2, 200).unwrap();
        assert!(max_pmf_gap(&law, &oracle) < 1e-9);
        // ergodic: hitting is certain
        assert!(law.defect.abs() < 1e-10);
        assert!(matches!(downward_law(&c, 2, HittingSpec::Point(0)), Err(Error::WrongBoundary(_))));
        let single = hitting_law(&c, HittingSpec::LowerSet(0), 1).unwrap();
        assert!(single.defect.abs() < 1e-10 && single.shift == 0);
    }

    #[test]
    fn birth_death_downward_nodes_real() {
        let c = fixtures::birth_death(3, 0.3, 0.4).with_absorbing_top();
        let law = downward_law(&c, 1, HittingSpec::Point(0)).unwrap();
        assert!(law.nodes.iter().all(|z| z.im == 0.0));
        assert!(law.max_real_node_coeff_imag() < 1e-12);
        let oracle = hitting_pmf(&c, HittingSpec::Point(0), 1, 200).unwrap();
        assert!(max_pmf_gap(&law, &oracle) < 1e-9);
    }

    #[test]
    fn return_time_law() {
        let c = fixtures::two_state();
        let law = hitting_law(&c, HittingSpec::Return(0), 0).unwrap();
        let oracle = hitting_pmf(&c, HittingSpec::Return(0), 0, 100).unwrap();
        assert!(max_pmf_gap(&law, &oracle) < 1e-12);
        assert!((oracle[1] - 0.7).abs() < 1e-15 && (oracle[2] - 0.3 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn link_matrix_small_cases() {
        let lm = link_matrix(&fixtures::two_state_absorbing(), 1).unwrap();
        assert!(lm.intertwining_residual() < 1e-12);
        assert!((lm.link[(1, 1)] - c(1.0)).norm() < 1e-15 && lm.link[(1, 0)].norm() < 1e-15);
        let lm = link_matrix(&fixtures::pure_birth(), 3).unwrap();
        assert!(lm.intertwining_residual() < 1e-12);
        for k in 0..4 {
            assert!((lm.link[(k, k)] - c(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn link_matrix_chain4a() {
        let c = fixtures::chain4_absorbing();
        let lm = link_matrix(&c, 3).unwrap();
        assert!(lm.intertwining_residual() < 1e-10);
        assert!(lm.max_row_sum() <= 1.0 + 1e-12);
        let pmf = hitting_pmf(&c, HittingSpec::Point(3), 0, 50).unwrap();
        let cdf = lm.cdf(50);
        let mut acc = 0.0;
        for t in 0..=50 {
            acc += pmf[t];
            assert!((cdf[t] - acc).abs() < 1e-10);
        }
    }

    #[test]
    fn canonical_pure_birth() {
        let law = canonical_sequence(&fixtures::pure_birth(), 0, 3, 20).unwrap();
        for k in 0..=20 {
            let want = 3.0 * 0.5f64.powi(k as i32 + 1);
            assert!((law.r[k] - want).abs() < 1e-12 && (law.r_trace[k] - want).abs() < 1e-12);
        }
        assert!(law.b.abs() < 1e-12);
        let w = u_class_weight(&law).unwrap();
        for k in 0..=20 {
            assert!((w.moment(k) - law.r[k as usize] / (k + 1) as f64).abs() < 1e-12);
        }
        let q = 0.5;
        let want = (0.5 / (1.0 - 0.25f64)).powi(3);
        assert!((id_reconstruct(&law, q).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn canonical_degenerate_and_traces() {
        let ch = fixtures::chain4_absorbing();
        let law = canonical_sequence(&ch, 2, 2, 10).unwrap();
        assert!(law.r.iter().all(|v| *v == 0.0) && law.b == 0.0);
        let law = canonical_sequence(&ch, 1, 3, 50).unwrap();
        for k in 0..=50 {
            assert!((law.r_raw[k] - law.r_trace[k]).abs() < 1e-9);
            assert!(law.r_raw[k] >= -1e-12);
        }
        let up = upward_law(&ch, 1, 3).unwrap();
        for &q in &[0.0, 0.3, 0.7, 0.95] {
            let v = id_reconstruct(&law, q).unwrap();
            assert!((v - up.pgf_unshifted(c(q)).re).abs() < 1e-8, "q={q}");
        }
        assert!((law.big_r(0.4) - law.big_r_series(0.4)).abs() < 1e-9);
    }

    #[test]
    fn defective_reconstruction() {
        // a tenth of the mass at state 1 is killed
        let mut p = fixtures::chain4().matrix().clone();
        p.row_mut(1).scale_mut(0.9);
        let ch = ChainSpec::new(0, p, Boundary::Regular, Boundary::Regular).unwrap();
        let law = canonical_sequence(&ch, 0, 3, 5).unwrap();
        let mass = hitting_pgf(&ch, HittingSpec::Point(3), 1.0, 0).unwrap();
        assert!(mass < 0.9);
        assert!(((-law.b).exp() - mass).abs() < 1e-10);
        let near_one = id_reconstruct(&law, 1.0 - 1e-10).unwrap();
        assert!((near_one - mass).abs() < 1e-8);
    }

    #[test]
    fn probe_follows_direction() {
        let pb = fixtures::pure_birth();
        assert!(abs_monotone_probe(&pb, 0, 3, 6).unwrap());
        assert!(!abs_monotone_probe(&pb, 3, 0, 6).unwrap());
        assert!(abs_monotone_probe(&fixtures::chain4_absorbing(), 1, 3, 6).unwrap());
    }

    #[test]
    fn weight_rejects_complex_spectra() {
        let law = IdLaw {
            x: 0,
            a: 2,
            b: 0.0,
            r: vec![],
            r_raw: vec![],
            r_trace: vec![],
            nodes_a: vec![Complex64::new(0.1, 0.2), Complex64::new(0.1, -0.2)],
            nodes_x: vec![],
        };
        assert!(matches!(u_class_weight(&law), Err(Error::Unsupported(_))));
    }
}
