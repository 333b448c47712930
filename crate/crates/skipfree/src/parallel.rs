//! Thread pool sizing and the parallel drivers.

use rayon::prelude::*;
use skipfree_core::cutoff::{assemble_family, member_report, CutoffOptions, FamilyCutoff};
use skipfree_core::simulate::{EmpiricalLaw, HittingSampler};
use skipfree_core::ChainSpec;

/// Paths per work item; only affects scheduling, never the result.
pub const CHUNK: u64 = 1 << 12;

/// Worker count from `SKIPFREE_THREADS`; unset, empty, unparsable or 0 means automatic.
pub fn thread_count() -> usize {
    std::env::var("SKIPFREE_THREADS").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

pub fn pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(thread_count()).build().expect("thread pool")
}

pub fn family(pool: &rayon::ThreadPool, members: &[ChainSpec], eps: f64, opts: CutoffOptions) -> FamilyCutoff {
    let results = pool.install(|| members.par_iter().map(|m| member_report(m, eps, !opts.allow_non_sm)).collect());
    assemble_family(results, opts)
}

/// Same table as `sampler.run()` for any pool size.
pub fn simulate(pool: &rayon::ThreadPool, sampler: &HittingSampler) -> EmpiricalLaw {
    let n = sampler.paths();
    let chunks: Vec<u64> = (0..n.div_ceil(CHUNK)).collect();
    let parts: Vec<EmpiricalLaw> =
        pool.install(|| chunks.par_iter().map(|&c| sampler.run_range(c * CHUNK..((c + 1) * CHUNK).min(n))).collect());
    parts.iter().fold(sampler.empty_law(), |acc, p| acc.merge(p))
}
