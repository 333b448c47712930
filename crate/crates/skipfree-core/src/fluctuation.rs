//! Downward and two-sided exit laws written in terms of the FqE functions, overshoot laws,
//! and the closed forms for upward skip-free random walks on Z.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::chain::{Boundary, ChainSpec, HittingSpec, Measure, Region};
use crate::error::{Error, Result};
use crate::linalg;
use crate::potential::{self, check_q, fqe_bundle, Extended, FqEBundle, PotentialKernel};

#[derive(Debug, Clone, PartialEq)]
pub struct ExitLaw {
    pub q: f64,
    pub x: i64,
    pub event: HittingSpec,
    pub pgf_value: f64,
    /// the start already lies in the target set, so the pgf is 1
    pub trivial: bool,
    /// killed kernel on the surviving states of the extended chain (𝔯 included)
    pub killed_green: Option<PotentialKernel>,
}

fn survival_sum(g: &DMatrix<f64>, pi: &[f64], row: usize) -> f64 {
    (0..g.ncols()).map(|j| g[(row, j)] * pi[j]).sum()
}

fn check_fqe_chain(spec: &ChainSpec) -> Result<()> {
    if spec.top() == Boundary::Regular {
        return Err(Error::WrongBoundary("exit laws through FqE functions need an absorbing or killing top"));
    }
    if spec.has_interior_killing() {
        return Err(Error::Unsupported("killing below the top state".into()));
    }
    Ok(())
}

fn bundle_for(spec: &ChainSpec, pi: &Measure, q: f64) -> Result<FqEBundle> {
    check_fqe_chain(spec)?;
    fqe_bundle(spec, pi, q, spec.lo(), &FqEBundle::all_cutoffs(spec))
}

/// Killed kernel rebuilt from the bundle on the states of [lo, 𝔯] that survive `region`:
/// G^{b]}, G^{[a} or G^{(b,a)^c}.
pub fn killed_green_via_fqe(bundle: &FqEBundle, region: Region) -> Result<PotentialKernel> {
    if bundle.proxy {
        return Err(Error::WrongBoundary("reconstruction needs an absorbing or killing top"));
    }
    let (lo, top) = (bundle.lo, bundle.top);
    let (s0, s1) = match region {
        Region::Below(b) => (b + 1, top),
        Region::Above(a) => (lo, a - 1),
        Region::Outside { b, a } => {
            if b >= a {
                return Err(Error::InvalidCorridor { b, a });
            }
            (b + 1, a - 1)
        }
    };
    let (s0, s1) = (s0.max(lo), s1.min(top));
    if s0 > s1 {
        return Err(Error::DegenerateChain);
    }
    let at = |v: &[f64], x: i64| v[(x - lo) as usize];
    // H^{b]}(x) - H^{y]}(x) for b < y; above y it also equals gap_y - gap_b, and the pair with
    // the smaller operands loses fewer digits
    let killed_diff = |b: i64, y: i64, x: i64| -> Result<f64> {
        let hb = at(&bundle.killed(b)?, x);
        if x <= y {
            return Ok(hb);
        }
        let gy = at(&bundle.gap(y)?, x);
        Ok(if gy < hb { gy - at(&bundle.gap(b)?, x) } else { hb - at(&bundle.killed(y)?, x) })
    };
    let m = (s1 - s0 + 1) as usize;
    let mut g = DMatrix::zeros(m, m);
    for (j, y) in (s0..=s1).enumerate() {
        let hy = bundle.killed(y)?;
        let w = bundle.c * at(&bundle.h_hat, y);
        for (i, x) in (s0..=s1).enumerate() {
            g[(i, j)] = w * match region {
                Region::Below(b) => killed_diff(b, y, x)?,
                Region::Above(a) => at(&hy, a) / bundle.h_at(a) * bundle.h_at(x) - at(&hy, x),
                Region::Outside { b, a } => {
                    // H^{y]}(a)/H^{b]}(a) H^{b]}(x) - H^{y]}(x) = D(x) - D(a) H^{b]}(x)/H^{b]}(a)
                    let hb = bundle.killed(b)?;
                    killed_diff(b, y, x)? - killed_diff(b, y, a)? * at(&hb, x) / at(&hb, a)
                }
            };
        }
    }
    let pi: Vec<f64> = (s0..=s1).map(|y| at(&bundle.pi, y)).collect();
    Ok(PotentialKernel { q: bundle.q, lo: s0, g, pi: Measure::new(pi)?, residual: 0.0 })
}

/// E_x(q^{T_{b]}}) = 1 + (q - 1) Σ_y G_q^{b]}(x, y) π(y), the kernel taken from the FqE functions.
pub fn downward_pgf(spec: &ChainSpec, pi: &Measure, q: f64, x: i64, b: i64) -> Result<ExitLaw> {
    check_q(q, false)?;
    spec.idx(x)?;
    spec.idx(b)?;
    let event = HittingSpec::LowerSet(b);
    if x <= b {
        return Ok(ExitLaw { q, x, event, pgf_value: 1.0, trivial: true, killed_green: None });
    }
    let bundle = bundle_for(spec, pi, q)?;
    let g = killed_green_via_fqe(&bundle, Region::Below(b))?;
    let v = 1.0 + (q - 1.0) * survival_sum(&g.g, g.pi.values().as_slice(), (x - g.lo) as usize);
    Ok(ExitLaw { q, x, event, pgf_value: v, trivial: false, killed_green: Some(g) })
}

/// The same quantity through the survival identity, with the occupation kernel of the
/// extended chain killed on (-∞, b] solved directly.
pub fn downward_pgf_survival(spec: &ChainSpec, q: f64, x: i64, b: i64) -> Result<f64> {
    check_q(q, false)?;
    let xi = spec.idx(x)?;
    let bi = spec.idx(b)?;
    if xi <= bi {
        return Ok(1.0);
    }
    let ext = Extended::new(spec, &Measure::uniform(spec.len()))?;
    let p = linalg::principal(&ext.p, bi + 1, Some(ext.len() - 1));
    let (r, _) = potential::resolvent(&p, q)?;
    Ok(1.0 + (q - 1.0) * r.row(xi - bi - 1).sum())
}

/// E_x(q^{T_{(b,a)^c}}) for b < x < a, through G_q^{(b,a)^c}.
pub fn two_sided_pgf(spec: &ChainSpec, pi: &Measure, q: f64, x: i64, b: i64, a: i64) -> Result<ExitLaw> {
    if b >= a {
        return Err(Error::InvalidCorridor { b, a });
    }
    check_q(q, false)?;
    spec.idx(b)?;
    spec.idx(a)?;
    spec.idx(x)?;
    let event = HittingSpec::TwoSided { b, a };
    if x <= b || x >= a {
        return Ok(ExitLaw { q, x, event, pgf_value: 1.0, trivial: true, killed_green: None });
    }
    let bundle = bundle_for(spec, pi, q)?;
    let g = killed_green_via_fqe(&bundle, Region::Outside { b, a })?;
    let v = 1.0 + (q - 1.0) * survival_sum(&g.g, g.pi.values().as_slice(), (x - g.lo) as usize);
    Ok(ExitLaw { q, x, event, pgf_value: v, trivial: false, killed_green: Some(g) })
}

/// Exit position below a level, with the joint law of the last state before exit.
#[derive(Debug, Clone, PartialEq)]
pub struct Overshoot {
    pub x: i64,
    pub b: i64,
    pub lo: i64,
    /// P_x(X_{T_{b]}} = k) for k = lo..=b
    pub law: Vec<f64>,
    /// P_x(X_{T_{b]} - 1} = y, X_{T_{b]}} = k), rows y = b+1..=hi, columns k = lo..=b
    pub joint: DMatrix<f64>,
}

impl Overshoot {
    pub fn total(&self) -> f64 {
        self.law.iter().sum()
    }

    pub fn at(&self, k: i64) -> f64 {
        if k < self.lo || k > self.b {
            0.0
        } else {
            self.law[(k - self.lo) as usize]
        }
    }
}

/// Law of X_{T_{b]}} started from x > b. Uses the q = 1 occupation kernel of the states
/// above b that can still reach (-∞, b]; the rest never contribute. The reference measure
/// cancels from G^{b]}(x,y) p(y,k) so none is needed.
pub fn overshoot_law(spec: &ChainSpec, x: i64, b: i64) -> Result<Overshoot> {
    let xi = spec.idx(x)?;
    let bi = spec.idx(b)?;
    let n = spec.len();
    let (lo, m_low) = (spec.lo(), bi + 1);
    let p = spec.matrix();
    if xi <= bi {
        let mut law = vec![0.0; m_low];
        law[xi] = 1.0;
        return Ok(Overshoot { x, b, lo, law, joint: DMatrix::zeros(n - bi - 1, m_low) });
    }
    let mut reach: Vec<bool> = (0..n).map(|i| i <= bi).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in bi + 1..n {
            if !reach[i] && (0..n).any(|j| reach[j] && p[(i, j)] > 0.0) {
                reach[i] = true;
                changed = true;
            }
        }
    }
    let live: Vec<usize> = (bi + 1..n).filter(|&i| reach[i]).collect();
    let mut joint = DMatrix::zeros(n - bi - 1, m_low);
    let mut law = vec![0.0; m_low];
    if let Some(r0) = live.iter().position(|&i| i == xi) {
        let m = live.len();
        let a = DMatrix::from_fn(m, m, |r, c| if r == c { 1.0 } else { 0.0 } - p[(live[r], live[c])]);
        let e = DVector::from_fn(m, |r, _| if r == r0 { 1.0 } else { 0.0 });
        // row x of (I - P)^{-1} from the transposed system
        let occ = linalg::solve_vec(&a.transpose(), &e).ok_or(Error::DivergentPotential)?;
        for (r, &y) in live.iter().enumerate() {
            for k in 0..m_low {
                let v = occ[r] * p[(y, k)];
                joint[(y - bi - 1, k)] = v;
                law[k] += v;
            }
        }
    }
    Ok(Overshoot { x, b, lo, law, joint })
}

/// Step distribution of an upward skip-free walk: +1 with probability `up`, -j with
/// probability `rest[j]` (j = 0 is a holding step).
#[derive(Debug, Clone, PartialEq)]
pub struct StepLaw {
    up: f64,
    rest: Vec<f64>,
}

impl StepLaw {
    pub fn new(up: f64, rest: Vec<f64>) -> Result<Self> {
        if !(up > 0.0 && up <= 1.0) {
            return Err(Error::InvalidStepLaw("the +1 weight must lie in (0, 1]"));
        }
        if rest.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidStepLaw("weights must be non-negative"));
        }
        let total = up + rest.iter().sum::<f64>();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidStepLaw("weights must sum to 1"));
        }
        Ok(StepLaw { up, rest })
    }

    /// From (jump, weight) pairs with jumps in {…, -2, -1, 0, 1}.
    pub fn from_pairs(pairs: &[(i64, f64)]) -> Result<Self> {
        let mut up = 0.0;
        let mut rest = Vec::new();
        for &(j, w) in pairs {
            match j {
                1 => up += w,
                j if j <= 0 => {
                    let k = (-j) as usize;
                    if rest.len() <= k {
                        rest.resize(k + 1, 0.0);
                    }
                    rest[k] += w;
                }
                _ => return Err(Error::InvalidStepLaw("jumps above +1 are not skip-free")),
            }
        }
        StepLaw::new(up, rest)
    }

    pub fn up(&self) -> f64 {
        self.up
    }

    /// P(step = -j).
    pub fn down(&self, j: usize) -> f64 {
        self.rest.get(j).copied().unwrap_or(0.0)
    }

    pub fn max_down(&self) -> usize {
        self.rest.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        self.up - self.rest.iter().enumerate().map(|(j, w)| j as f64 * w).sum::<f64>()
    }

    /// 𝐅(s) = E(s^{step}).
    pub fn pgf(&self, s: f64) -> f64 {
        self.up * s + self.rest.iter().enumerate().map(|(j, w)| w * s.powi(-(j as i32))).sum::<f64>()
    }

    pub fn pgf_derivative(&self, s: f64) -> f64 {
        self.up - self.rest.iter().enumerate().map(|(j, w)| j as f64 * w * s.powi(-(j as i32) - 1)).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomWalkRoot {
    pub q: f64,
    /// h(q), the root of 𝐅(h) = 1/q on the increasing branch, so H_q(x) = h^x
    pub h: f64,
    /// C_q = -q h'(q) / h(q) = 1 / (q 𝐅'(h) h)
    pub c_q: f64,
    /// h(1)
    pub h_one: f64,
}

impl RandomWalkRoot {
    pub fn big_h(&self, x: i64) -> f64 {
        self.h.powi(x as i32)
    }

    /// Σ_{x>0} s^x H_q^{0]}(x) for 0 < s < 1/h.
    pub fn killed_generating_function(&self, step: &StepLaw, s: f64) -> Result<f64> {
        if !(s > 0.0 && s * self.h < 1.0) {
            return Err(Error::Domain("need 0 < s < 1/h(q)"));
        }
        Ok(1.0 / (self.c_q * (self.q * step.pgf(1.0 / s) - 1.0)))
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    // f(a) < 0 < f(b)
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Minimiser of the convex 𝐅 on (0, ∞), or 0 when 𝐅 is increasing throughout.
fn pgf_argmin(step: &StepLaw) -> f64 {
    if step.max_down() == 0 {
        return 0.0;
    }
    let mut lo = 1.0;
    while step.pgf_derivative(lo) > 0.0 {
        lo *= 0.5;
    }
    let mut hi = 1.0;
    while step.pgf_derivative(hi) < 0.0 {
        hi *= 2.0;
    }
    bisect(|s| step.pgf_derivative(s), lo, hi)
}

/// Root of 𝐅 = target on the increasing branch, target ≥ 1.
fn branch_root(step: &StepLaw, target: f64) -> Result<f64> {
    let lower = pgf_argmin(step).max(0.0);
    if step.pgf(lower.max(f64::MIN_POSITIVE)) >= target && lower > 0.0 {
        return Ok(lower);
    }
    let mut hi = lower.max(1.0) * 2.0;
    let mut tries = 0;
    while step.pgf(hi) <= target {
        hi *= 2.0;
        tries += 1;
        if tries > 2000 || !hi.is_finite() {
            return Err(Error::InvalidStepLaw("no bracket for the root of F(s) = 1/q"));
        }
    }
    let lo = if lower > 0.0 { lower } else { f64::MIN_POSITIVE };
    let mut s = bisect(|s| step.pgf(s) - target, lo, hi);
    for _ in 0..3 {
        let d = step.pgf_derivative(s);
        if d > 0.0 {
            let next = s - (step.pgf(s) - target) / d;
            if next > lo && next < hi && (step.pgf(next) - target).abs() <= (step.pgf(s) - target).abs() {
                s = next;
            }
        }
    }
    Ok(s)
}

pub fn random_walk_h(step: &StepLaw, q: f64) -> Result<RandomWalkRoot> {
    check_q(q, false)?;
    let target = 1.0 / q;
    let h = branch_root(step, target)?;
    let resid = (step.pgf(h) - target).abs();
    if resid >= 1e-12 * target.max(1.0) {
        return Err(Error::Numeric(alloc::format!("F(h) - 1/q = {resid:e}")));
    }
    let h_one = if step.mean() >= 0.0 { 1.0 } else { branch_root(step, 1.0)? };
    let c_q = 1.0 / (q * step.pgf_derivative(h) * h);
    Ok(RandomWalkRoot { q, h, c_q, h_one })
}

/// The walk on [-w, w], killed on leaving the window (top exit counted at the cemetery).
pub fn truncated_chain(step: &StepLaw, half_width: i64) -> Result<ChainSpec> {
    if half_width < 1 {
        return Err(Error::Domain("half width must be at least 1"));
    }
    let n = (2 * half_width + 1) as usize;
    let p = DMatrix::from_fn(n, n, |i, j| {
        if j == i + 1 {
            step.up
        } else if j <= i {
            step.down(i - j)
        } else {
            0.0
        }
    });
    let bottom = if step.max_down() > 0 { Boundary::Killing } else { Boundary::Regular };
    ChainSpec::new(-half_width, p, Boundary::Killing, bottom)
}
