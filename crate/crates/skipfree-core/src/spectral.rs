//! Eigenstructure of a finite chain in the weighted space ℓ²(π): Riesz-basis diagnostics,
//! similarity-class membership tests, the Siegmund construction of a birth-death conjugate and
//! spectral expansions of powers and hitting laws.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::chain::{self, dual_unchecked, is_irreducible, Boundary, ChainSpec, Measure, TOL};
use crate::error::{Error, Result};
use crate::linalg;

/// Imaginary parts below this count as real.
pub const REAL_TOL: f64 = 1e-10;
/// Eigenvalues closer than this count as repeated.
pub const DISTINCT_GAP: f64 = 1e-8;

/// Right eigenfunctions and their biorthogonal system for a real, simple spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszBasis {
    pub lambda: Vec<f64>,
    /// columns f_k, unit ℓ²(π) norm, first nonzero entry positive
    pub f: DMatrix<f64>,
    /// columns f*_k with ⟨f_k, f*_m⟩_π = δ_km
    pub f_star: DMatrix<f64>,
    pub riesz_a: f64,
    pub riesz_b: f64,
    /// σ_max / σ_min of Λ = D_√π F
    pub kappa: f64,
    pub biorth_residual: f64,
    pub eigen_residual: f64,
}

impl RieszBasis {
    /// Λ = D_√π F.
    pub fn lambda_matrix(&self, pi: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.f.nrows(), self.f.ncols(), |i, k| pi[i].sqrt() * self.f[(i, k)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// descending by modulus
    pub eigenvalues: Vec<Complex64>,
    pub real_distinct: bool,
    pub max_imag: f64,
    /// smallest pairwise distance between eigenvalues
    pub min_gap: f64,
    pub pi: DVector<f64>,
    pub basis: Option<RieszBasis>,
    /// why `basis` is missing, or a conditioning warning
    pub diagnostic: Option<String>,
}

impl SpectralData {
    /// Second largest eigenvalue modulus (the largest one that is not 1).
    pub fn lambda_star(&self) -> f64 {
        self.eigenvalues
            .iter()
            .filter(|z| (*z - linalg::c(1.0)).norm() > DISTINCT_GAP)
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn kappa(&self) -> Option<f64> {
        self.basis.as_ref().map(|b| b.kappa)
    }

    fn basis(&self) -> Result<&RieszBasis> {
        self.basis.as_ref().ok_or_else(|| {
            Error::Unsupported(format!(
                "no real eigenbasis: {}",
                self.diagnostic.as_deref().unwrap_or("spectrum is not real and simple")
            ))
        })
    }
}

pub fn eigendecompose(spec: &ChainSpec, pi: &Measure) -> Result<SpectralData> {
    pi.check_len(spec)?;
    decompose(spec.matrix(), pi.values())
}

fn decompose(p: &DMatrix<f64>, pi: &DVector<f64>) -> Result<SpectralData> {
    let n = p.nrows();
    let mut ev = linalg::eigenvalues(p);
    linalg::sort_by_modulus(&mut ev);
    let max_imag = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_gap = min_gap.min((ev[i] - ev[j]).norm());
        }
    }
    let real_distinct = max_imag < REAL_TOL && min_gap > DISTINCT_GAP;
    let mut sd = SpectralData { eigenvalues: ev, real_distinct, max_imag, min_gap, pi: pi.clone(), basis: None, diagnostic: None };
    if !real_distinct {
        sd.diagnostic = Some(if max_imag >= REAL_TOL {
            format!("complex eigenvalues (max |Im| = {max_imag:.3e})")
        } else {
            format!("repeated eigenvalue (min gap {min_gap:.3e}); possibly defective")
        });
        return Ok(sd);
    }
    let lambda: Vec<f64> = sd.eigenvalues.iter().map(|z| z.re).collect();
    let mut f = DMatrix::zeros(n, n);
    for (k, &l) in lambda.iter().enumerate() {
        let mut v = linalg::real_eigenvector(p, l);
        let norm = (0..n).map(|i| v[i] * v[i] * pi[i]).sum::<f64>().sqrt();
        v /= norm;
        let vmax = v.amax();
        if let Some(i) = (0..n).find(|&i| v[i].abs() > 1e-12 * vmax) {
            if v[i] < 0.0 {
                v = -v;
            }
        }
        f.set_column(k, &v);
    }
    let weighted_norm = |m: &DMatrix<f64>| -> f64 {
        (0..m.ncols())
            .map(|k| (0..n).map(|i| m[(i, k)] * m[(i, k)] * pi[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    };
    let eigen_residual = weighted_norm(&(p * &f - &f * DMatrix::from_diagonal(&DVector::from_vec(lambda.clone()))));
    let Some(f_inv) = linalg::inverse(&f) else {
        sd.diagnostic = Some("eigenvector matrix is numerically singular".into());
        return Ok(sd);
    };
    let f_star = DMatrix::from_fn(n, n, |i, k| f_inv[(k, i)] / pi[i]);
    let gram = f.transpose() * DMatrix::from_diagonal(pi) * &f_star;
    let biorth_residual = linalg::max_abs(&(gram - DMatrix::identity(n, n)));
    let big_lambda = DMatrix::from_fn(n, n, |i, k| pi[i].sqrt() * f[(i, k)]);
    let sv = linalg::singular_values(&big_lambda);
    let (smax, smin) = (sv.max(), sv.min());
    let kappa = smax / smin;
    if kappa > 1e8 {
        sd.diagnostic = Some(format!("near-defective: κ(Λ) = {kappa:.3e}"));
    }
    sd.basis = Some(RieszBasis {
        lambda,
        f,
        f_star,
        riesz_a: smin * smin,
        riesz_b: smax * smax,
        kappa,
        biorth_residual,
        eigen_residual,
    });
    Ok(sd)
}

/// Membership in a similarity orbit: real and simple spectrum.
pub fn s_class_check(spec: &ChainSpec) -> bool {
    let pi = DVector::from_element(spec.len(), 1.0);
    decompose(spec.matrix(), &pi).map(|sd| sd.real_distinct).unwrap_or(false)
}

/// Smallest κ(Λ D) over positive diagonal rescalings D of the eigenfunctions, by cyclic
/// golden-section search on log-scales. `None` above 16 states.
pub fn min_rescaled_kappa(sd: &SpectralData) -> Option<f64> {
    let b = sd.basis.as_ref()?;
    let n = b.f.ncols();
    if n > 16 {
        return None;
    }
    let lam = b.lambda_matrix(&sd.pi);
    let cond = |s: &[f64]| {
        let m = DMatrix::from_fn(n, n, |i, k| lam[(i, k)] * s[k].exp());
        let sv = linalg::singular_values(&m);
        sv.max() / sv.min()
    };
    let mut s = vec![0.0; n];
    let mut best = cond(&s);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let before = best;
        for k in 1..n {
            let (mut lo, mut hi) = (s[k] - 3.0, s[k] + 3.0);
            let eval = |t: f64, s: &mut Vec<f64>| {
                s[k] = t;
                cond(s)
            };
            let mut t1 = hi - phi * (hi - lo);
            let mut t2 = lo + phi * (hi - lo);
            let mut work = s.clone();
            let (mut c1, mut c2) = (eval(t1, &mut work), eval(t2, &mut work));
            while hi - lo > 1e-10 {
                if c1 < c2 {
                    hi = t2;
                    t2 = t1;
                    c2 = c1;
                    t1 = hi - phi * (hi - lo);
                    c1 = eval(t1, &mut work);
                } else {
                    lo = t1;
                    t1 = t2;
                    c1 = c2;
                    t2 = lo + phi * (hi - lo);
                    c2 = eval(t2, &mut work);
                }
            }
            let t = 0.5 * (lo + hi);
            let c = eval(t, &mut work);
            if c < best {
                best = c;
                s[k] = t;
            }
        }
        if before - best < 1e-12 * before {
            break;
        }
    }
    Some(best)
}

/// ‖PP̂ − P̂P‖ and ‖P − P̂‖ (max-entry norms), P̂ the π-dual.
pub fn normality_defects(spec: &ChainSpec, pi: &Measure) -> Result<(f64, f64)> {
    pi.check_len(spec)?;
    let p = spec.matrix();
    let ph = dual_unchecked(spec, pi);
    let ph = ph.matrix();
    let comm = linalg::max_abs(&(p * ph - ph * p));
    Ok((comm, linalg::max_abs(&(p - ph))))
}

/// Definition of the monotone class, read off the cumulative rows F̂_x(y) = P̂_x(X ≤ y).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McVerdict {
    pub monotone: bool,
    pub strictly_monotone: bool,
    pub restricted_upward_jump: bool,
    pub lazy_siegmund_dual: bool,
    pub in_mc: bool,
    pub in_mc_plus: bool,
}

pub fn mc_class_check(spec: &ChainSpec, pi: &Measure) -> Result<McVerdict> {
    pi.check_len(spec)?;
    let hat = dual_unchecked(spec, pi);
    let cum = cumulative_rows(hat.matrix());
    let n = spec.len();
    let r = n - 1;
    let (mut c1, mut c2, mut c3, mut c4) = (true, true, true, true);
    for x in 0..r {
        c1 &= cum[(x + 1, x)] <= cum[(x, x)] + TOL;
        if x + 1 != r {
            c2 &= cum[(x + 1, x + 1)] < cum[(x, x + 1)] - TOL;
            for k in 2..=(r - 1 - x) {
                c3 &= (cum[(x + 1, x + k)] - cum[(x, x + k)]).abs() <= TOL;
            }
        }
        let up = 1.0 - cum[(x, x)];
        let back = hat.matrix()[(x + 1, x)];
        c4 &= up + back <= 0.5 + TOL;
    }
    let in_mc = c1 && c2 && c3;
    Ok(McVerdict {
        monotone: c1,
        strictly_monotone: c2,
        restricted_upward_jump: c3,
        lazy_siegmund_dual: c4,
        in_mc,
        in_mc_plus: in_mc && c4,
    })
}

fn cumulative_rows(p: &DMatrix<f64>) -> DMatrix<f64> {
    let mut cum = p.clone();
    for x in 0..p.nrows() {
        for y in 1..p.ncols() {
            cum[(x, y)] += cum[(x, y - 1)];
        }
    }
    cum
}

/// Output of the Siegmund construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegmundDual {
    /// P̃ with P̃ᵀ = H_S⁻¹ P̂ H_S; the top state is absorbing
    pub p_tilde: ChainSpec,
    /// P̃ restricted to [lo, hi−1]: substochastic birth-death
    pub p_bd: ChainSpec,
    /// probability for P̃ to reach hi−1 before hi
    pub h_hit: Vec<f64>,
    /// max |P̃^{bd} h_hit − h_hit|
    pub h_hit_defect: f64,
    /// Perron eigenvector of P̃^{bd}, max entry 1
    pub perron: Vec<f64>,
    pub rho: f64,
    /// D_φ⁻¹ P̃^{bd} D_φ / ρ, stochastic birth-death
    pub q: ChainSpec,
}

pub fn siegmund_bd(spec: &ChainSpec, pi: &Measure) -> Result<SiegmundDual> {
    pi.check_len(spec)?;
    let n = spec.len();
    if n < 2 {
        return Err(Error::DegenerateChain);
    }
    let hat = dual_unchecked(spec, pi);
    let cum = cumulative_rows(hat.matrix());
    // P̃(a, b) = F̂_b(a) − F̂_{b+1}(a), with F̂_{n} ≡ 0
    let mut pt = DMatrix::from_fn(n, n, |a, b| cum[(b, a)] - if b + 1 < n { cum[(b + 1, a)] } else { 0.0 });
    for a in 0..n {
        for b in 0..n {
            let v = pt[(a, b)];
            if v < -TOL {
                return Err(Error::NonMonotone { row: spec.label(a), col: spec.label(b), value: v });
            }
            if v < 0.0 {
                pt[(a, b)] = 0.0;
            }
        }
    }
    let m = n - 1;
    let bd = linalg::principal(&pt, 0, Some(m - 1));
    for a in 0..m {
        for b in 0..m {
            if a.abs_diff(b) > 1 && bd[(a, b)] > TOL {
                return Err(Error::Unsupported(format!(
                    "restricted Siegmund dual is not birth-death: entry ({}, {}) = {:e}",
                    spec.label(a),
                    spec.label(b),
                    bd[(a, b)]
                )));
            }
        }
    }
    let p_tilde = ChainSpec::new(spec.lo(), pt.clone(), Boundary::Absorbing, spec.bottom())?;
    let p_bd = ChainSpec::new(spec.lo(), bd.clone(), Boundary::Killing, spec.bottom())?;

    // h(x) = P̃_x(T_{hi−1} < T_hi): solve on [lo, hi−2] with h(hi−1) = 1
    let mut h_hit = vec![1.0; m];
    if m > 1 {
        let k = m - 1;
        let a = DMatrix::identity(k, k) - linalg::principal(&bd, 0, Some(k - 1));
        let rhs = DVector::from_fn(k, |i, _| bd[(i, k)]);
        let sol = linalg::solve_vec(&a, &rhs).ok_or(Error::DivergentPotential)?;
        h_hit[..k].copy_from_slice(sol.as_slice());
    }
    let hv = DVector::from_vec(h_hit.clone());
    let h_hit_defect = (&bd * &hv - &hv).amax();

    let mut ev = linalg::eigenvalues(&bd);
    linalg::sort_by_modulus(&mut ev);
    let rho = ev[0].re;
    if !(rho > 0.0) || ev[0].im != 0.0 {
        return Err(Error::Numeric("restricted Siegmund dual has no positive Perron root".into()));
    }
    let mut phi = linalg::real_eigenvector(&bd, rho);
    if phi.sum() < 0.0 {
        phi = -phi;
    }
    phi /= phi.amax();
    if phi.iter().any(|v| *v <= 0.0) {
        return Err(Error::Numeric("Perron vector of the restricted Siegmund dual is not positive".into()));
    }
    let qm = DMatrix::from_fn(m, m, |a, b| bd[(a, b)] * phi[b] / (phi[a] * rho));
    let q = ChainSpec::new(spec.lo(), qm, Boundary::Regular, Boundary::Regular)?;
    if !q.is_stochastic() || !is_irreducible(&q) {
        return Err(Error::Numeric("Doob transform of the restricted Siegmund dual is not an ergodic kernel".into()));
    }
    Ok(SiegmundDual { p_tilde, p_bd, h_hit, h_hit_defect, perron: phi.iter().copied().collect(), rho, q })
}

/// P^n(x, y) = Σ_k λ_k^n f_k(x) f*_k(y) π(y).
pub fn spectral_power(spec: &ChainSpec, sd: &SpectralData, n: u32, x: i64, y: i64) -> Result<f64> {
    let b = sd.basis()?;
    let (i, j) = (spec.idx(x)?, spec.idx(y)?);
    if b.f.nrows() != spec.len() {
        return Err(Error::Structural("spectral data belongs to another chain".into()));
    }
    Ok((0..b.lambda.len()).map(|k| b.lambda[k].powi(n as i32) * b.f[(i, k)] * b.f_star[(j, k)]).sum::<f64>() * sd.pi[j])
}

/// Spectral data of the chain killed at its absorbing boundary state.
#[derive(Debug, Clone, PartialEq)]
pub struct KilledSpectrum {
    pub target: i64,
    /// first label of the killed block
    pub lo: i64,
    pub data: SpectralData,
    /// ⟨1, f*_k⟩_π
    pub weights: Vec<f64>,
}

impl KilledSpectrum {
    /// P_x(T_target = n) = Σ_k λ_k^{n−1} (1 − λ_k) ⟨1, f*_k⟩_π f_k(x) for n ≥ 1.
    pub fn pmf(&self, x: i64, n: u32) -> Result<f64> {
        if x == self.target {
            return Ok(if n == 0 { 1.0 } else { 0.0 });
        }
        let b = self.data.basis()?;
        let i = x - self.lo;
        if i < 0 || i as usize >= b.f.nrows() {
            return Err(Error::StateOutOfRange(x));
        }
        if n == 0 {
            return Ok(0.0);
        }
        Ok((0..b.lambda.len())
            .map(|k| {
                let l = b.lambda[k];
                l.powi(n as i32 - 1) * (1.0 - l) * self.weights[k] * b.f[(i as usize, k)]
            })
            .sum())
    }
}

/// Eigendecomposition of the chain with its absorbing top (or, symmetrically, bottom) removed.
/// The reference measure on the remaining states is the expected occupation measure.
pub fn killed_spectrum(spec: &ChainSpec) -> Result<KilledSpectrum> {
    let n = spec.len();
    let (target, i0) = match (spec.top(), spec.bottom()) {
        (Boundary::Absorbing, Boundary::Regular) => (n - 1, 0),
        (Boundary::Regular, Boundary::Absorbing) => (0, 1),
        _ => return Err(Error::WrongBoundary("exactly one end must be absorbing and the other regular")),
    };
    if n < 2 || !spec.is_absorbing_state(target) {
        return Err(Error::WrongBoundary("the absorbing end state must be absorbing"));
    }
    let p = linalg::principal(spec.matrix(), i0, Some(i0 + n - 2));
    let pi = chain::reference_measure(spec)?.restrict(i0, i0 + n - 2);
    let data = decompose(&p, pi.values())?;
    let weights = match &data.basis {
        Some(b) => (0..n - 1).map(|k| (0..n - 1).map(|i| b.f_star[(i, k)] * data.pi[i]).sum()).collect(),
        None => Vec::new(),
    };
    Ok(KilledSpectrum { target: spec.label(target), lo: spec.label(i0), data, weights })
}

/// P_x(T = n) for n = 0..=n_max through the spectral expansion of the killed chain.
pub fn spectral_hitting_pmf(spec: &ChainSpec, x: i64, n_max: u32) -> Result<Vec<f64>> {
    spec.idx(x)?;
    let ks = killed_spectrum(spec)?;
    ks.data.basis()?;
    (0..=n_max).map(|n| ks.pmf(x, n)).collect()
}

/// max |P^h Λ^h − Λ^h diag(λ)| with P^h = D_h⁻¹ P D_h and Λ^h = D_h⁻¹ F, relative to max |Λ^h|.
pub fn doob_similarity_check(spec: &ChainSpec, sd: &SpectralData, h: &[f64]) -> Result<f64> {
    let b = sd.basis()?;
    let n = spec.len();
    if h.len() != n || b.f.nrows() != n {
        return Err(Error::Structural(format!("h has {} entries, chain has {n} states", h.len())));
    }
    if let Some(i) = h.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidH(spec.label(i)));
    }
    let p = spec.matrix();
    let ph = DMatrix::from_fn(n, n, |i, j| p[(i, j)] * h[j] / h[i]);
    let lh = DMatrix::from_fn(n, n, |i, k| b.f[(i, k)] / h[i]);
    let q = DMatrix::from_diagonal(&DVector::from_vec(b.lambda.clone()));
    Ok(linalg::max_abs(&(&ph * &lh - &lh * q)) / linalg::max_abs(&lh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::stationary;
    use crate::fixtures;
    use crate::passage;

    fn sd_of(spec: &ChainSpec) -> SpectralData {
        eigendecompose(spec, &stationary(spec).unwrap()).unwrap()
    }

    #[test]
    fn two_state_spectrum() {
        let sd = sd_of(&fixtures::two_state());
        assert!(sd.real_distinct);
        assert!((sd.eigenvalues[0].re - 1.0).abs() < 1e-14 && (sd.eigenvalues[1].re - 0.5).abs() < 1e-14);
        // every two-state chain is reversible, so the eigenbasis is orthonormal
        assert!((sd.kappa().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain4_lambda_star_and_invariants() {
        let sd = sd_of(&fixtures::chain4());
        assert!(sd.real_distinct);
        assert!((sd.lambda_star() - 0.17).abs() < 0.005);
        let b = sd.basis.as_ref().unwrap();
        assert!(b.biorth_residual < 1e-10 && b.eigen_residual < 1e-9);
        assert!(b.riesz_a <= b.riesz_b && b.kappa > 1.0);
        let kmin = min_rescaled_kappa(&sd).unwrap();
        assert!(kmin >= 1.0 && kmin <= b.kappa + 1e-12);
    }

    #[test]
    fn symmetric_birth_death_is_orthonormal() {
        let bd = fixtures::birth_death(6, 0.3, 0.3);
        let sd = sd_of(&bd);
        assert!((sd.kappa().unwrap() - 1.0).abs() < 1e-10);
        let (comm, sa) = normality_defects(&bd, &stationary(&bd).unwrap()).unwrap();
        assert!(comm < 1e-12 && sa < 1e-10);
    }

    #[test]
    fn class_s_membership() {
        assert!(s_class_check(&fixtures::chain4()));
        assert!(!s_class_check(&fixtures::pure_birth()));
        // substochastic rotation-like chain with a complex pair
        let rot = ChainSpec::from_rows(
            0,
            2,
            &[vec![0.0, 0.9, 0.0], vec![0.0, 0.0, 0.9], vec![0.9, 0.0, 0.0]],
            Boundary::Killing,
            Boundary::Regular,
        )
        .unwrap();
        assert!(!s_class_check(&rot));
    }

    #[test]
    fn dual_example_is_monotone_class() {
        let c = fixtures::chain4();
        let pi = stationary(&c).unwrap();
        let v = mc_class_check(&c, &pi).unwrap();
        assert!(v.monotone && v.strictly_monotone && v.restricted_upward_jump && v.in_mc);
        assert!(!v.lazy_siegmund_dual && !v.in_mc_plus);
        assert!(sd_of(&c).real_distinct);
    }

    #[test]
    fn two_up_jumps_break_the_class() {
        let mut m = fixtures::chain4_dual_matrix();
        m[(0, 2)] = 0.015;
        m[(0, 3)] = 0.01;
        let hat = ChainSpec::new(0, m, Boundary::Regular, Boundary::Regular).unwrap();
        let pi = stationary(&hat).unwrap();
        let p = dual_unchecked(&hat, &pi);
        let v = mc_class_check(&p, &pi).unwrap();
        assert!(v.monotone && !v.restricted_upward_jump && !v.in_mc);
    }

    #[test]
    fn siegmund_conjugate_of_the_example() {
        let c = fixtures::chain4();
        let pi = stationary(&c).unwrap();
        let s = siegmund_bd(&c, &pi).unwrap();
        assert_eq!(s.q.len(), 3);
        for i in 0..3 {
            assert!((s.q.row_sum(i) - 1.0).abs() < 1e-12);
        }
        // spectrum of P = {1} ∪ spectrum of the restricted dual
        let mut want: Vec<f64> = sd_of(&c).eigenvalues.iter().skip(1).map(|z| z.re).collect();
        let mut got: Vec<f64> = linalg::eigenvalues(s.p_bd.matrix()).iter().map(|z| z.re).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in want.iter().zip(&got) {
            assert!((a - b).abs() < 1e-10);
        }
        // the hitting-probability vector is not harmonic for the restricted dual
        assert!(s.h_hit_defect > 1e-3);
    }

    #[test]
    fn siegmund_keeps_birth_death() {
        let bd = fixtures::birth_death(5, 0.2, 0.3);
        let s = siegmund_bd(&bd, &stationary(&bd).unwrap()).unwrap();
        assert!(s.q.is_stochastic());
        assert!(s.h_hit.iter().all(|v| *v > 0.0 && *v <= 1.0 + 1e-12));
    }

    #[test]
    fn siegmund_reports_negative_entry() {
        let hat = ChainSpec::from_rows(
            0,
            2,
            &[vec![0.1, 0.9, 0.0], vec![0.8, 0.1, 0.1], vec![0.0, 0.5, 0.5]],
            Boundary::Regular,
            Boundary::Regular,
        )
        .unwrap();
        let pi = stationary(&hat).unwrap();
        let p = dual_unchecked(&hat, &pi);
        match siegmund_bd(&p, &pi) {
            Err(Error::NonMonotone { row: 0, col: 0, value }) => assert!((value + 0.7).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spectral_power_matches_matrix_power() {
        let c = fixtures::chain4();
        let sd = sd_of(&c);
        for n in [0u32, 1, 2, 10, 37, 100] {
            let pn = linalg::mat_pow(c.matrix(), n as u64);
            for x in 0..4 {
                for y in 0..4 {
                    assert!((spectral_power(&c, &sd, n, x, y).unwrap() - pn[(x as usize, y as usize)]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn spectral_hitting_two_state() {
        let pmf = spectral_hitting_pmf(&fixtures::two_state_absorbing(), 0, 30).unwrap();
        assert_eq!(pmf[0], 0.0);
        for n in 1..=30 {
            assert!((pmf[n] - 0.3 * 0.7f64.powi(n as i32 - 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_hitting_matches_oracle() {
        let c = fixtures::chain4_absorbing();
        let pmf = spectral_hitting_pmf(&c, 0, 50).unwrap();
        let oracle = passage::hitting_pmf(&c, crate::chain::HittingSpec::Point(3), 0, 50).unwrap();
        for n in 0..=50 {
            assert!((pmf[n] - oracle[n]).abs() < 1e-9, "n={n}");
        }
        assert!(matches!(spectral_hitting_pmf(&fixtures::pure_birth(), 0, 5), Err(Error::Unsupported(_))));
        assert!(matches!(spectral_hitting_pmf(&fixtures::chain4(), 0, 5), Err(Error::WrongBoundary(_))));
    }

    #[test]
    fn absorbing_bottom_is_symmetric() {
        let p = ChainSpec::from_rows(
            0,
            2,
            &[vec![1.0, 0.0, 0.0], vec![0.3, 0.4, 0.3], vec![0.1, 0.3, 0.6]],
            Boundary::Regular,
            Boundary::Absorbing,
        )
        .unwrap();
        let pmf = spectral_hitting_pmf(&p, 2, 40).unwrap();
        let oracle = passage::hitting_pmf(&p, crate::chain::HittingSpec::Point(0), 2, 40).unwrap();
        for n in 0..=40 {
            assert!((pmf[n] - oracle[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn doob_similarity() {
        let c = fixtures::chain4();
        let sd = sd_of(&c);
        assert!(doob_similarity_check(&c, &sd, &[1.0; 4]).unwrap() < 1e-12);
        assert!(doob_similarity_check(&c, &sd, &[0.3, 1.7, 2.0, 0.9]).unwrap() < 1e-9);
        assert!(matches!(doob_similarity_check(&c, &sd, &[1.0, 0.0, 1.0, 1.0]), Err(Error::InvalidH(1))));
    }
}
