//! Rates of convergence to equilibrium in ℓ²(π) and total variation: exact operator norms
//! against the reversibilization bound σ_*^n and the similarity bound κ(Λ)λ_*^n.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::chain::{is_irreducible, ChainSpec, Measure};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{self, SpectralData};

fn check_ergodic(spec: &ChainSpec, pi: &Measure) -> Result<()> {
    pi.check_len(spec)?;
    if !spec.is_stochastic() || !is_irreducible(spec) {
        return Err(Error::NoStationaryLaw("rates need an ergodic stochastic chain".into()));
    }
    Ok(())
}

/// ‖M − 𝟙π‖ on ℓ²(π) for a stochastic M (e.g. P^n).
fn centered_norm(m: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    let n = m.nrows();
    let s = DMatrix::from_fn(n, n, |x, y| (m[(x, y)] - pi[y]) * pi[x].sqrt() / pi[y].sqrt());
    linalg::spectral_norm(&s)
}

/// ‖P^n − π‖_{ℓ²(π)→ℓ²(π)}.
pub fn exact_norm(spec: &ChainSpec, pi: &Measure, n: u32) -> Result<f64> {
    check_ergodic(spec, pi)?;
    Ok(centered_norm(&linalg::mat_pow(spec.matrix(), n as u64), pi.values()))
}

/// Second largest singular value of P in ℓ²(π), as the square root of the second largest
/// eigenvalue of the self-adjoint product PP̂.
pub fn sigma_star(spec: &ChainSpec, pi: &Measure) -> Result<f64> {
    check_ergodic(spec, pi)?;
    let n = spec.len();
    let d = pi.values();
    // D_√π P D_{1/√π} is the symmetrized P; S Sᵀ is similar to PP̂
    let s = DMatrix::from_fn(n, n, |x, y| spec.matrix()[(x, y)] * d[x].sqrt() / d[y].sqrt());
    let mut ev: Vec<f64> = (&s * s.transpose()).symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(ev.get(1).copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// d(n) = max_x ‖δ_x P^n − π‖_TV.
pub fn tv_distance(spec: &ChainSpec, pi: &Measure, n: u32) -> Result<f64> {
    check_ergodic(spec, pi)?;
    Ok(tv_of(&linalg::mat_pow(spec.matrix(), n as u64), pi.values()))
}

fn tv_of(m: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    (0..m.nrows())
        .map(|x| 0.5 * (0..m.ncols()).map(|y| (m[(x, y)] - pi[y]).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: u32,
    pub exact_norm: f64,
    pub lower: f64,
    /// σ_*^n
    pub rev_bound: f64,
    /// κ(Λ)λ_*^n
    pub sim_bound: Option<f64>,
    /// σ_*^n before n*, κλ_*^n from n* on
    pub piecewise_bound: Option<f64>,
    pub tv_exact: f64,
    /// σ_*^n/2 · √((1−π_min)/π_min)
    pub tv_fill: f64,
    /// min(σ_*^n, κλ_*^n)/2 · √((1−π_min)/π_min)
    pub tv_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub pi: Vec<f64>,
    pub pi_min: f64,
    pub lambda_star: f64,
    pub sigma_star: f64,
    /// κ(Λ) under the canonical eigenfunction normalization
    pub kappa: Option<f64>,
    /// κ(Λ D) minimized over diagonal rescalings
    pub kappa_min: Option<f64>,
    /// `None` if the similarity bound never beats σ_*^n
    pub n_star: Option<u64>,
    /// max_i p(i,i) > λ_*
    pub sing_thompson: bool,
    pub max_diagonal: f64,
    pub rows: Vec<ConvergenceRow>,
    pub notice: Option<String>,
}

impl ConvergenceTable {
    /// Rows whose columns break the bounds they are supposed to satisfy.
    pub fn violations(&self) -> Vec<u32> {
        let tol = 1e-12;
        self.rows
            .iter()
            .filter(|r| {
                let mut bad = r.lower > r.exact_norm * (1.0 + 1e-9) + tol || r.exact_norm > r.rev_bound * (1.0 + 1e-9) + tol;
                bad |= r.tv_exact > r.tv_bound * (1.0 + 1e-9) + tol || r.tv_exact > r.tv_fill * (1.0 + 1e-9) + tol;
                if let Some(b) = r.piecewise_bound {
                    bad |= r.exact_norm > b * (1.0 + 1e-9) + tol;
                }
                bad
            })
            .map(|r| r.n)
            .collect()
    }
}

/// n* = ⌈ln κ / (ln σ_* − ln λ_*)⌉.
pub fn crossover_index(kappa: f64, sigma_star: f64, lambda_star: f64) -> Option<u64> {
    if kappa <= 1.0 + 1e-12 {
        return Some(0);
    }
    if lambda_star == 0.0 {
        return Some(1);
    }
    let denom = sigma_star.ln() - lambda_star.ln();
    if !(denom > 0.0) {
        return None;
    }
    Some((kappa.ln() / denom).ceil().max(0.0) as u64)
}

pub fn bounds_table(spec: &ChainSpec, pi: &Measure, n_max: u32) -> Result<ConvergenceTable> {
    check_ergodic(spec, pi)?;
    let sd = spectral::eigendecompose(spec, pi)?;
    let sigma = sigma_star(spec, pi)?;
    let lambda = sd.lambda_star();
    let kappa = sd.kappa();
    let kappa_min = spectral::min_rescaled_kappa(&sd);
    let n_star = kappa.and_then(|k| crossover_index(k, sigma, lambda));
    let notice = if kappa.is_none() {
        Some(alloc::format!(
            "similarity columns omitted: {}",
            sd.diagnostic.as_deref().unwrap_or("spectrum is not real and simple")
        ))
    } else {
        None
    };
    let d = pi.values();
    let pi_min = pi.min();
    let tv_factor = 0.5 * ((1.0 - pi_min) / pi_min).sqrt();
    let max_diagonal = (0..spec.len()).map(|i| spec.matrix()[(i, i)]).fold(f64::MIN, f64::max);

    let mut rows = Vec::with_capacity(n_max as usize + 1);
    let mut pn = DMatrix::identity(spec.len(), spec.len());
    for n in 0..=n_max {
        if n > 0 {
            pn = &pn * spec.matrix();
        }
        let rev = sigma.powi(n as i32);
        let sim = kappa.map(|k| k * lambda.powi(n as i32));
        let piecewise = match (sim, n_star) {
            (Some(s), Some(ns)) => Some(if (n as u64) < ns { rev } else { s }),
            (Some(_), None) => Some(rev),
            _ => None,
        };
        let best = sim.map_or(rev, |s| s.min(rev));
        rows.push(ConvergenceRow {
            n,
            exact_norm: centered_norm(&pn, d),
            lower: lambda.powi(n as i32),
            rev_bound: rev,
            sim_bound: sim,
            piecewise_bound: piecewise,
            tv_exact: tv_of(&pn, d),
            tv_fill: rev * tv_factor,
            tv_bound: best * tv_factor,
        });
    }
    Ok(ConvergenceTable {
        pi: d.iter().copied().collect(),
        pi_min,
        lambda_star: lambda,
        sigma_star: sigma,
        kappa,
        kappa_min,
        n_star,
        sing_thompson: max_diagonal > lambda,
        max_diagonal,
        rows,
        notice,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypocoercivity {
    /// C = κ(Λ)
    pub c: f64,
    /// ρ = λ_*
    pub rho: f64,
    /// max_n ‖P^n − π‖ / (Cρ^n) over the checked range
    pub worst_ratio: f64,
    pub holds: bool,
}

/// ‖P^n − π‖ ≤ κ(Λ)λ_*^n for n ≤ `n_max`.
pub fn hypocoercivity_report(spec: &ChainSpec, pi: &Measure, n_max: u32) -> Result<Hypocoercivity> {
    check_ergodic(spec, pi)?;
    let sd: SpectralData = spectral::eigendecompose(spec, pi)?;
    let c = sd.kappa().ok_or_else(|| Error::Unsupported("no real eigenbasis, κ(Λ) undefined".into()))?;
    let rho = sd.lambda_star();
    let mut worst: f64 = 0.0;
    let mut pn = DMatrix::identity(spec.len(), spec.len());
    for n in 0..=n_max {
        if n > 0 {
            pn = &pn * spec.matrix();
        }
        let bound = c * rho.powi(n as i32);
        let norm = centered_norm(&pn, pi.values());
        // below round-off both sides are noise
        if bound > 1e-13 {
            worst = worst.max(norm / bound);
        }
    }
    Ok(Hypocoercivity { c, rho, worst_ratio: worst, holds: worst <= 1.0 + 1e-9 })
}
