//! Separation distance, fastest strong stationary times, mixing times, family-level cutoff
//! diagnostics and ℓ^p bounds by interpolation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
#[allow(unused_imports)]
use num_traits::Float;

use crate::chain::{dual_unchecked, is_irreducible, is_stochastically_monotone, stationary, ChainSpec, Measure};
use crate::error::{Error, Result};
use crate::fixtures::uniform01;
use crate::linalg::{self, c};
use crate::mixture::GeometricMixture;
use crate::spectral::{self, DISTINCT_GAP, REAL_TOL};

fn check_ergodic(spec: &ChainSpec, pi: &Measure) -> Result<()> {
    pi.check_len(spec)?;
    if !spec.is_stochastic() || !is_irreducible(spec) {
        return Err(Error::NoStationaryLaw("separation needs an ergodic stochastic chain".into()));
    }
    Ok(())
}

fn separation_of(pn: &DMatrix<f64>, pi: &DVector<f64>, from: Option<usize>) -> f64 {
    let rows: Vec<usize> = match from {
        Some(x) => vec![x],
        None => (0..pn.nrows()).collect(),
    };
    rows.iter()
        .flat_map(|&x| (0..pn.ncols()).map(move |y| 1.0 - pn[(x, y)] / pi[y]))
        .fold(f64::MIN, f64::max)
}

/// s(n) = max_{x,y} [1 − P^n(x,y)/π(y)], or s_x(n) with a start given.
pub fn separation(spec: &ChainSpec, pi: &Measure, n: u32, from: Option<i64>) -> Result<f64> {
    check_ergodic(spec, pi)?;
    let from = from.map(|x| spec.idx(x)).transpose()?;
    Ok(separation_of(&linalg::mat_pow(spec.matrix(), n as u64), pi.values(), from))
}

/// min{n ≥ 0 : separation ≤ ε}, by doubling then bisection (separation is non-increasing).
pub fn mixing_time(spec: &ChainSpec, pi: &Measure, eps: f64, from: Option<i64>) -> Result<u64> {
    check_ergodic(spec, pi)?;
    if !(eps > 0.0) {
        return Err(Error::Domain("ε must be positive"));
    }
    if eps >= 1.0 {
        return Ok(0);
    }
    let from = from.map(|x| spec.idx(x)).transpose()?;
    let d = pi.values();
    let n = spec.len();
    if separation_of(&DMatrix::identity(n, n), d, from) <= eps {
        return Ok(0);
    }
    // powers[k] = P^{2^k}, doubled until separation drops to ε
    let mut powers = vec![spec.matrix().clone()];
    while separation_of(powers.last().unwrap(), d, from) > eps {
        if powers.len() > 40 {
            return Err(Error::Numeric(format!("separation stays above {eps} up to n = 2^40")));
        }
        let last = powers.last().unwrap();
        powers.push(last * last);
    }
    // binary lifting: largest t with s(t) > ε, answer t + 1
    let mut t = 0u64;
    let mut cur = DMatrix::identity(n, n);
    for k in (0..powers.len()).rev() {
        let cand = &cur * &powers[k];
        if separation_of(&cand, d, from) > eps {
            cur = cand;
            t += 1 << k;
        }
    }
    Ok(t + 1)
}

/// Nonunit eigenvalues λ_1..λ_r of a stochastic matrix, or a diagnostic.
fn nonunit_spectrum(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mut ev = linalg::eigenvalues(p);
    linalg::sort_by_modulus(&mut ev);
    let k = (0..ev.len())
        .min_by(|&i, &j| (ev[i] - c(1.0)).norm().partial_cmp(&(ev[j] - c(1.0)).norm()).unwrap())
        .ok_or(Error::DegenerateChain)?;
    if (ev[k] - c(1.0)).norm() > DISTINCT_GAP {
        return Err(Error::Unsupported("no eigenvalue at 1".into()));
    }
    ev.remove(k);
    if let Some(z) = ev.iter().find(|z| z.im.abs() >= REAL_TOL) {
        return Err(Error::Unsupported(format!("complex eigenvalue {z}")));
    }
    Ok(ev.iter().map(|z| z.re).collect())
}

/// Law of the fastest strong stationary time from the bottom state: the convolution of
/// geometric laws on {1, 2, ...} with success probabilities θ_i = 1 − λ_i.
/// Negative eigenvalues give θ_i ∈ (1, 2) and the factors become signed.
pub fn sst_law(spec: &ChainSpec) -> Result<GeometricMixture> {
    if !spec.is_stochastic() {
        return Err(Error::Unsupported("strong stationary times need a stochastic chain".into()));
    }
    let lambda = nonunit_spectrum(spec.matrix())?;
    if let Some(l) = lambda.iter().find(|l| !(**l > -1.0 && **l < 1.0)) {
        return Err(Error::Unsupported(format!("θ = {} outside (0, 2)", 1.0 - l)));
    }
    let num = [c(lambda.iter().map(|l| 1.0 - l).product())];
    let nodes: Vec<_> = lambda.iter().map(|&l| c(l)).collect();
    GeometricMixture::from_rational(&num, &nodes, lambda.len() as i64)
}

/// P(T > k) for k = 0..=k_max.
pub fn sst_tail(law: &GeometricMixture, k_max: u64) -> Vec<f64> {
    let mut acc = 0.0;
    (0..=k_max)
        .map(|k| {
            acc += law.pmf_at(k as i64);
            1.0 - acc
        })
        .collect()
}

/// Real simple spectrum and a stochastically monotone time reversal.
pub fn in_sm_class(spec: &ChainSpec, pi: &Measure) -> bool {
    pi.len() == spec.len() && spectral::s_class_check(spec) && is_stochastically_monotone(&dual_unchecked(spec, pi))
}

/// Per-member diagnostics of the separation cutoff criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffReport {
    pub states: usize,
    /// Σ 1/θ_i
    pub t_n: f64,
    /// Tr((I − P + 𝟙π)^{-1}) − 1
    pub t_n_matrix: f64,
    pub theta_min: f64,
    /// 1 − λ_*
    pub theta_star: f64,
    pub rho_sq: f64,
    /// (ε, T^s(0, ε), T^s(ε))
    pub ts_eps: Vec<(f64, u64, u64)>,
    pub product: f64,
    pub window: (f64, f64),
    /// ρ² ≤ θ̄⁻¹ t
    pub eigcompare_holds: bool,
    /// T^s(ε) ≥ (θ_*⁻¹ − 1) log(1/2ε) for every ε
    pub lower_bound_holds: bool,
    /// ⌊t − √(1/ε−1)ρ⌋ ≤ T^s(0,ε) ≤ ⌈t + √(1/ε−1)ρ⌉ for every ε
    pub chebyshev_holds: bool,
    pub kappa: Option<f64>,
    /// t_n · (−ln λ_*)
    pub lp_product: f64,
}

/// ε values always checked besides the requested one.
pub const CHECK_EPS: [f64; 3] = [0.01, 0.1, 0.25];

pub fn member_report(spec: &ChainSpec, eps: f64, require_sm: bool) -> Result<CutoffReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain("ε must lie in (0, 1)"));
    }
    let pi = stationary(spec)?;
    if require_sm && !in_sm_class(spec, &pi) {
        return Err(Error::Unsupported("not in the monotone similarity class".into()));
    }
    let lambda = nonunit_spectrum(spec.matrix())?;
    let theta: Vec<f64> = lambda.iter().map(|l| 1.0 - l).collect();
    if theta.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Unsupported("eigenvalue at or above 1".into()));
    }
    let n = spec.len();
    let t_n: f64 = theta.iter().map(|t| 1.0 / t).sum();
    let d = pi.values();
    let z = DMatrix::identity(n, n) - spec.matrix() + DMatrix::from_fn(n, n, |_, y| d[y]);
    let t_n_matrix = linalg::inverse(&z).ok_or(Error::DivergentPotential)?.trace() - 1.0;
    let theta_min = theta.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_star = lambda.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let theta_star = 1.0 - lambda_star;
    let rho_sq: f64 = theta.iter().map(|t| (1.0 - t) / (t * t)).sum();
    let rho = rho_sq.max(0.0).sqrt();

    let mut eps_list = vec![eps];
    eps_list.extend(CHECK_EPS.iter().copied().filter(|e| (e - eps).abs() > 1e-15));
    let mut ts_eps = Vec::new();
    let (mut lower_ok, mut cheb_ok) = (true, true);
    for &e in &eps_list {
        let from0 = mixing_time(spec, &pi, e, Some(spec.lo()))?;
        let all = mixing_time(spec, &pi, e, None)?;
        lower_ok &= all as f64 >= (1.0 / theta_star - 1.0) * (1.0 / (2.0 * e)).ln() - 1e-9;
        let half = (1.0 / e - 1.0).sqrt() * rho;
        cheb_ok &= from0 as f64 >= (t_n - half).floor() - 1e-9 && from0 as f64 <= (t_n + half).ceil() + 1e-9;
        ts_eps.push((e, from0, all));
    }
    let kappa = spectral::eigendecompose(spec, &pi).ok().and_then(|sd| sd.kappa());
    Ok(CutoffReport {
        states: n,
        t_n,
        t_n_matrix,
        theta_min,
        theta_star,
        rho_sq,
        ts_eps,
        product: t_n * theta_min,
        window: (t_n, rho.max(1.0)),
        eigcompare_holds: rho_sq <= t_n / theta_min * (1.0 + 1e-12),
        lower_bound_holds: lower_ok,
        chebyshev_holds: cheb_ok,
        kappa,
        lp_product: if lambda_star > 0.0 { -t_n * lambda_star.ln() } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    CutoffConsistent,
    NoCutoff,
    InsufficientFamily,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::CutoffConsistent => "cutoff-consistent",
            Verdict::NoCutoff => "no-cutoff",
            Verdict::InsufficientFamily => "insufficient family",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffOptions {
    /// required last/first ratio of t_n θ̄_n
    pub growth_factor: f64,
    /// skip the monotone-class gate
    pub allow_non_sm: bool,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        CutoffOptions { growth_factor: 4.0, allow_non_sm: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCutoff {
    /// (member index, report)
    pub reports: Vec<(usize, CutoffReport)>,
    pub excluded: Vec<(usize, String)>,
    pub verdict: Verdict,
    /// sup_n κ(Λ_n) over the members that have one
    pub sup_kappa: Option<f64>,
}

/// Trend reading of t_n θ̄_n → ∞ over the members, in the given order.
pub fn family_verdict(products: &[f64], growth_factor: f64) -> Verdict {
    if products.len() < 2 {
        return Verdict::InsufficientFamily;
    }
    let increasing = products.windows(2).all(|w| w[1] > w[0]);
    if increasing && products[products.len() - 1] >= growth_factor * products[0] {
        Verdict::CutoffConsistent
    } else {
        Verdict::NoCutoff
    }
}

pub fn assemble_family(results: Vec<Result<CutoffReport>>, opts: CutoffOptions) -> FamilyCutoff {
    let mut reports = Vec::new();
    let mut excluded = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rep) => reports.push((i, rep)),
            Err(e) => excluded.push((i, format!("{e}"))),
        }
    }
    let products: Vec<f64> = reports.iter().map(|(_, r)| r.product).collect();
    let sup_kappa = reports.iter().filter_map(|(_, r)| r.kappa).reduce(f64::max);
    FamilyCutoff { verdict: family_verdict(&products, opts.growth_factor), reports, excluded, sup_kappa }
}

pub fn family_cutoff(family: &[ChainSpec], eps: f64, opts: CutoffOptions) -> FamilyCutoff {
    let results = family.iter().map(|m| member_report(m, eps, !opts.allow_non_sm)).collect();
    assemble_family(results, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpBounds {
    pub p: f64,
    /// λ_*^n (spectral radius of P^n − π)
    pub lower: f64,
    /// 2^{1−θ}λ_*^{nθ} with θ = 1 + |1 − 2/p|
    pub lower_interpolated: f64,
    /// 2^{|1−2/p|}(κλ_*^n)^{1−|1−2/p|}
    pub upper: f64,
    pub estimate: f64,
    /// `estimate` is the norm itself rather than a sampled lower estimate
    pub exact: bool,
}

fn lp_norm(v: &DVector<f64>, pi: &DVector<f64>, p: f64) -> f64 {
    if p.is_infinite() {
        return v.amax();
    }
    v.iter().zip(pi.iter()).map(|(x, w)| x.abs().powf(p) * w).sum::<f64>().powf(1.0 / p)
}

/// Two-sided bounds on ‖P^n − π‖_{ℓ^p(π)→ℓ^p(π)} and a direct evaluation (exact for p ∈ {1, 2, ∞},
/// otherwise the best of `samples` random directions and the coordinate directions).
pub fn lp_bounds(spec: &ChainSpec, pi: &Measure, n: u32, p: f64, samples: usize, seed: u64) -> Result<LpBounds> {
    check_ergodic(spec, pi)?;
    if !(p >= 1.0) {
        return Err(Error::Domain("p must be at least 1"));
    }
    let sd = spectral::eigendecompose(spec, pi)?;
    let kappa = sd.kappa().ok_or_else(|| Error::Unsupported("no real eigenbasis, κ(Λ) undefined".into()))?;
    let ls = sd.lambda_star().powi(n as i32);
    let e = if p.is_infinite() { 1.0 } else { (1.0 - 2.0 / p).abs() };
    let theta = 1.0 + e;
    let d = pi.values();
    let k = spec.len();
    let pn = linalg::mat_pow(spec.matrix(), n as u64);
    let m = DMatrix::from_fn(k, k, |x, y| pn[(x, y)] - d[y]);
    let (estimate, exact) = if p == 1.0 {
        (
            (0..k).map(|y| (0..k).map(|x| m[(x, y)].abs() * d[x]).sum::<f64>() / d[y]).fold(0.0, f64::max),
            true,
        )
    } else if p.is_infinite() {
        ((0..k).map(|x| (0..k).map(|y| m[(x, y)].abs()).sum::<f64>()).fold(0.0, f64::max), true)
    } else if p == 2.0 {
        (linalg::spectral_norm(&DMatrix::from_fn(k, k, |x, y| m[(x, y)] * d[x].sqrt() / d[y].sqrt())), true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: f64 = 0.0;
        let mut try_dir = |g: DVector<f64>| {
            let ng = lp_norm(&g, d, p);
            if ng > 0.0 {
                best = best.max(lp_norm(&(&m * &g), d, p) / ng);
            }
        };
        for y in 0..k {
            try_dir(DVector::from_fn(k, |i, _| if i == y { 1.0 } else { 0.0 }));
        }
        for _ in 0..samples {
            try_dir(DVector::from_fn(k, |_, _| 2.0 * uniform01(&mut rng) - 1.0));
        }
        (best, false)
    };
    Ok(LpBounds {
        p,
        lower: ls,
        lower_interpolated: 2f64.powf(1.0 - theta) * ls.powf(theta),
        upper: 2f64.powf(e) * (kappa * ls).powf(1.0 - e),
        estimate,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::HittingSpec;
    use crate::fixtures;
    use crate::passage;

    #[test]
    fn two_state_separation() {
        let c = fixtures::two_state();
        let pi = stationary(&c).unwrap();
        assert!((separation(&c, &pi, 1, Some(0)).unwrap() - 0.5).abs() < 1e-14);
        assert!((separation(&c, &pi, 0, None).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(mixing_time(&c, &pi, 0.25, Some(0)).unwrap(), 2);
        assert_eq!(mixing_time(&c, &pi, 1.0, Some(0)).unwrap(), 0);
        let law = sst_law(&c).unwrap();
        let tail = sst_tail(&law, 30);
        for (k, t) in tail.iter().enumerate() {
            assert!((t - 0.5f64.powi(k as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn sst_tail_is_separation_on_the_example() {
        let c = fixtures::chain4();
        let pi = stationary(&c).unwrap();
        assert!(in_sm_class(&c, &pi));
        let tail = sst_tail(&sst_law(&c).unwrap(), 200);
        let mut pn = DMatrix::identity(4, 4);
        for (k, t) in tail.iter().enumerate() {
            assert!((t - separation_of(&pn, pi.values(), Some(0))).abs() < 1e-9, "k={k}");
            pn = &pn * c.matrix();
        }
    }

    #[test]
    fn pure_birth_sst_is_negative_binomial() {
        let pb = fixtures::pure_birth();
        let law = sst_law(&pb).unwrap();
        assert_eq!(law.multiplicities, vec![3]);
        // separation from δ_top is the tail of the hitting time of the top
        let pmf = passage::hitting_pmf(&pb, HittingSpec::Point(3), 0, 200).unwrap();
        let mut acc = 0.0;
        for (k, t) in sst_tail(&law, 200).iter().enumerate() {
            acc += pmf[k];
            assert!((t - (1.0 - acc)).abs() < 1e-9);
        }
    }

    #[test]
    fn mixing_time_is_monotone_in_eps() {
        let c = fixtures::chain4();
        let pi = stationary(&c).unwrap();
        let mut prev = u64::MAX;
        for eps in [0.001, 0.01, 0.1, 0.25, 0.5, 0.9] {
            let t = mixing_time(&c, &pi, eps, Some(0)).unwrap();
            assert!(t <= prev);
            prev = t;
        }
        let r = member_report(&c, 0.1, true).unwrap();
        assert!(r.chebyshev_holds && r.lower_bound_holds && r.eigcompare_holds);
        assert!((r.t_n - r.t_n_matrix).abs() < 1e-9);
    }

    #[test]
    fn birth_death_families() {
        let biased: Vec<_> = [8, 16, 32, 64].iter().map(|&n| fixtures::birth_death(n + 1, 0.7, 0.3)).collect();
        let f = family_cutoff(&biased, 0.25, CutoffOptions::default());
        assert!(f.excluded.is_empty(), "{:?}", f.excluded);
        assert_eq!(f.verdict, Verdict::CutoffConsistent);
        for (_, r) in &f.reports {
            assert!(r.eigcompare_holds && r.lower_bound_holds && r.chebyshev_holds, "{r:?}");
            assert!((r.t_n - r.t_n_matrix).abs() < 1e-9 * r.t_n);
        }
        let lazy: Vec<_> = [8, 16, 32, 64].iter().map(|&n| fixtures::birth_death(n + 1, 0.25, 0.25)).collect();
        let f = family_cutoff(&lazy, 0.25, CutoffOptions::default());
        assert_eq!(f.verdict, Verdict::NoCutoff);
        assert!(f.reports.iter().all(|(_, r)| r.chebyshev_holds && r.lower_bound_holds));
        let one = family_cutoff(&biased[..1], 0.25, CutoffOptions::default());
        assert_eq!(one.verdict, Verdict::InsufficientFamily);
    }

    #[test]
    fn lp_bounds_bracket_the_norm() {
        let c = fixtures::chain4();
        let pi = stationary(&c).unwrap();
        let b2 = lp_bounds(&c, &pi, 3, 2.0, 0, 0).unwrap();
        assert!(b2.exact && b2.lower <= b2.estimate && b2.estimate <= b2.upper);
        let ex = crate::ergodicity::exact_norm(&c, &pi, 3).unwrap();
        assert!((b2.estimate - ex).abs() < 1e-14);
        let b3 = lp_bounds(&c, &pi, 3, 3.0, 500, 7).unwrap();
        assert!(!b3.exact && b3.estimate <= b3.upper && b3.lower_interpolated <= b3.lower);
        for p in [1.0, f64::INFINITY] {
            let b = lp_bounds(&c, &pi, 3, p, 0, 0).unwrap();
            assert!(b.exact && b.lower <= b.estimate && b.estimate <= b.upper);
        }
        assert!(matches!(lp_bounds(&c, &pi, 3, 0.5, 0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn reversible_lp_bounds_use_kappa_one() {
        let c = fixtures::birth_death(5, 0.3, 0.3);
        let pi = stationary(&c).unwrap();
        let b = lp_bounds(&c, &pi, 4, 2.0, 0, 0).unwrap();
        assert!((b.upper - b.lower).abs() < 1e-10 && (b.estimate - b.lower).abs() < 1e-10);
    }
}
