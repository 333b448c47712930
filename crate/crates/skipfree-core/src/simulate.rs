//! Seeded Monte-Carlo oracle. Every path draws from its own ChaCha stream keyed by
//! (seed, path index), so results do not depend on the order or threading of the paths.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::chain::{ChainSpec, HittingSpec};
use crate::error::{Error, Result};
use crate::fixtures::uniform01;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    pub paths: u64,
    pub horizon: u64,
    pub start: i64,
}

impl SimConfig {
    fn check(&self, spec: &ChainSpec) -> Result<usize> {
        if self.paths == 0 {
            return Err(Error::Domain("paths must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::Domain("horizon must be at least 1"));
        }
        spec.idx(self.start)
    }
}

pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Cumulative rows of a transition matrix; a uniform above the row sum kills the path.
#[derive(Debug, Clone)]
pub struct Stepper {
    cum: Vec<Vec<f64>>,
}

impl Stepper {
    pub fn new(spec: &ChainSpec) -> Self {
        let p = spec.matrix();
        let cum = (0..spec.len())
            .map(|i| {
                let mut acc = 0.0;
                (0..spec.len())
                    .map(|j| {
                        acc += p[(i, j)];
                        acc
                    })
                    .collect()
            })
            .collect();
        Stepper { cum }
    }

    /// Next state index, or `None` if the path is killed.
    pub fn step(&self, i: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
        let u = uniform01(rng);
        let row = &self.cum[i];
        let j = row.partition_point(|&c| c <= u);
        // flat stretches of the cdf (zero-probability states) are never selected
        if j < row.len() {
            Some(j)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// entered the target; carries the epoch or, for overshoots, the state index
    Hit(u64),
    Killed,
    Censored,
}

/// Frequency table over `values[0] + i`, with killed and censored paths counted apart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalLaw {
    pub paths: u64,
    pub offset: i64,
    pub counts: Vec<u64>,
    pub killed: u64,
    pub censored: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalRow {
    pub value: i64,
    pub count: u64,
    pub freq: f64,
    pub lo95: f64,
    pub hi95: f64,
}

impl EmpiricalLaw {
    pub fn new(offset: i64, bins: usize) -> Self {
        EmpiricalLaw { paths: 0, offset, counts: vec![0; bins], killed: 0, censored: 0 }
    }

    pub fn record(&mut self, o: Outcome) {
        self.paths += 1;
        match o {
            Outcome::Hit(i) => self.counts[i as usize] += 1,
            Outcome::Killed => self.killed += 1,
            Outcome::Censored => self.censored += 1,
        }
    }

    /// Sum of two tables over the same bins.
    pub fn merge(mut self, other: &EmpiricalLaw) -> Self {
        self.paths += other.paths;
        self.killed += other.killed;
        self.censored += other.censored;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self
    }

    pub fn freq(&self, value: i64) -> f64 {
        let i = value - self.offset;
        if i < 0 || i as usize >= self.counts.len() {
            return 0.0;
        }
        self.counts[i as usize] as f64 / self.paths as f64
    }

    pub fn rows(&self) -> Vec<EmpiricalRow> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let (lo95, hi95) = wilson(k, self.paths, Z95);
                EmpiricalRow { value: self.offset + i as i64, count: k, freq: k as f64 / self.paths as f64, lo95, hi95 }
            })
            .collect()
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.paths as f64
    }

    pub fn killed_fraction(&self) -> f64 {
        self.killed as f64 / self.paths as f64
    }
}

/// Everything a single path needs; shareable across threads.
#[derive(Debug, Clone)]
pub struct HittingSampler {
    stepper: Stepper,
    targets: Vec<bool>,
    /// absorbing states outside the target: a path stuck there ends censored
    trapped: Vec<bool>,
    return_time: bool,
    /// report the entrance state instead of the epoch
    record_state: bool,
    start: usize,
    cfg: SimConfig,
    offset: i64,
    bins: usize,
}

impl HittingSampler {
    pub fn hitting(spec: &ChainSpec, hs: HittingSpec, cfg: SimConfig) -> Result<Self> {
        let start = cfg.check(spec)?;
        let targets = hs.targets(spec)?;
        Ok(HittingSampler {
            stepper: Stepper::new(spec),
            trapped: trapped(spec, &targets),
            targets,
            return_time: matches!(hs, HittingSpec::Return(_)),
            record_state: false,
            start,
            cfg,
            offset: 0,
            bins: cfg.horizon as usize + 1,
        })
    }

    /// Position at the first entrance into (-∞, b], started from `cfg.start`.
    pub fn overshoot(spec: &ChainSpec, b: i64, cfg: SimConfig) -> Result<Self> {
        let start = cfg.check(spec)?;
        let bi = spec.idx(b)?;
        let targets = HittingSpec::LowerSet(b).targets(spec)?;
        Ok(HittingSampler {
            stepper: Stepper::new(spec),
            trapped: trapped(spec, &targets),
            targets,
            return_time: false,
            record_state: true,
            start,
            cfg,
            offset: spec.lo(),
            bins: bi + 1,
        })
    }

    pub fn empty_law(&self) -> EmpiricalLaw {
        EmpiricalLaw::new(self.offset, self.bins)
    }

    pub fn paths(&self) -> u64 {
        self.cfg.paths
    }

    pub fn run_path(&self, path: u64) -> Outcome {
        let mut rng = path_rng(self.cfg.seed, path);
        let mut x = self.start;
        let hit = |x: usize, n: u64| Outcome::Hit(if self.record_state { x as u64 } else { n });
        if !self.return_time && self.targets[x] {
            return hit(x, 0);
        }
        for n in 1..=self.cfg.horizon {
            match self.stepper.step(x, &mut rng) {
                None => return Outcome::Killed,
                Some(y) => x = y,
            }
            if self.targets[x] {
                return hit(x, n);
            }
            if self.trapped[x] {
                break;
            }
        }
        Outcome::Censored
    }

    pub fn run_range(&self, paths: core::ops::Range<u64>) -> EmpiricalLaw {
        let mut law = self.empty_law();
        for p in paths {
            law.record(self.run_path(p));
        }
        law
    }

    pub fn run(&self) -> EmpiricalLaw {
        self.run_range(0..self.cfg.paths)
    }
}

fn trapped(spec: &ChainSpec, targets: &[bool]) -> Vec<bool> {
    (0..spec.len()).map(|i| !targets[i] && spec.is_absorbing_state(i)).collect()
}

pub fn sample_hitting(spec: &ChainSpec, hs: HittingSpec, cfg: SimConfig) -> Result<EmpiricalLaw> {
    Ok(HittingSampler::hitting(spec, hs, cfg)?.run())
}

pub fn sample_overshoot(spec: &ChainSpec, b: i64, cfg: SimConfig) -> Result<EmpiricalLaw> {
    Ok(HittingSampler::overshoot(spec, b, cfg)?.run())
}

/// Counts of X_n over the paths (killed paths counted apart; `censored` stays 0).
pub fn sample_positions(spec: &ChainSpec, n: u64, cfg: SimConfig) -> Result<EmpiricalLaw> {
    let start = cfg.check(spec)?;
    let stepper = Stepper::new(spec);
    let mut law = EmpiricalLaw::new(spec.lo(), spec.len());
    'paths: for p in 0..cfg.paths {
        let mut rng = path_rng(cfg.seed, p);
        let mut x = start;
        for _ in 0..n {
            match stepper.step(x, &mut rng) {
                None => {
                    law.record(Outcome::Killed);
                    continue 'paths;
                }
                Some(y) => x = y,
            }
        }
        law.record(Outcome::Hit(x as u64));
    }
    Ok(law)
}

/// How many of the given exact probabilities fall outside the Wilson 95% band of their bin.
pub fn outside_bands(law: &EmpiricalLaw, exact: &[(i64, f64)]) -> usize {
    let rows = law.rows();
    exact
        .iter()
        .filter(|(v, p)| {
            let i = v - law.offset;
            if i < 0 || i as usize >= rows.len() {
                return *p > 0.0;
            }
            let r = rows[i as usize];
            *p < r.lo95 || *p > r.hi95
        })
        .count()
}
