//! Reference chains used by the test suites, the acceptance run and the CLI examples.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand_core::RngCore;

use crate::chain::{dual_unchecked, stationary, Boundary, ChainSpec};

/// P = [[0.7, 0.3], [0.2, 0.8]].
pub fn two_state() -> ChainSpec {
    ChainSpec::from_rows(0, 1, &[vec![0.7, 0.3], vec![0.2, 0.8]], Boundary::Regular, Boundary::Regular).unwrap()
}

/// Two states with the top one absorbing: p(0,0) = 0.7, p(0,1) = 0.3.
pub fn two_state_absorbing() -> ChainSpec {
    two_state().with_absorbing_top()
}

/// The downward skip-free matrix whose π-dual is [`chain4`].
pub fn chain4_dual_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.275, 0.7, 0.005, 0.02, //
            0.17, 0.8, 0.01, 0.02, //
            0.0, 0.94, 0.02, 0.04, //
            0.0, 0.0, 0.95, 0.05,
        ],
    )
}

/// Upward skip-free ergodic chain on {0,1,2,3}, obtained as the stationary dual of
/// [`chain4_dual_matrix`].
pub fn chain4() -> ChainSpec {
    let hat = ChainSpec::new(0, chain4_dual_matrix(), Boundary::Regular, Boundary::Regular).unwrap();
    let pi = stationary(&hat).unwrap();
    dual_unchecked(&hat, &pi)
}

/// [`chain4`] with state 3 made absorbing.
pub fn chain4_absorbing() -> ChainSpec {
    chain4().with_absorbing_top()
}

/// [`chain4`] with a fifth of the top row's mass killed.
pub fn chain4_killing() -> ChainSpec {
    let c = chain4();
    let mut p = c.matrix().clone();
    p.row_mut(3).scale_mut(0.8);
    ChainSpec::new(0, p, Boundary::Killing, Boundary::Regular).unwrap()
}

/// p(x,x) = p(x,x+1) = 1/2 on {0,1,2,3}, top absorbing.
pub fn pure_birth() -> ChainSpec {
    ChainSpec::from_rows(
        0,
        3,
        &[
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.5, 0.5, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0, 0.0, 1.0],
        ],
        Boundary::Absorbing,
        Boundary::Regular,
    )
    .unwrap()
}

/// Birth-death chain on {0..n-1} with up/down probabilities `up`, `down` and the rest held.
pub fn birth_death(n: usize, up: f64, down: f64) -> ChainSpec {
    let p = DMatrix::from_fn(n, n, |i, j| {
        let u = if i + 1 < n { up } else { 0.0 };
        let d = if i > 0 { down } else { 0.0 };
        if j == i + 1 {
            u
        } else if j + 1 == i {
            d
        } else if j == i {
            1.0 - u - d
        } else {
            0.0
        }
    });
    ChainSpec::new(0, p, Boundary::Regular, Boundary::Regular).unwrap()
}

pub fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Random irreducible upward skip-free chain on {0..n-1} with the requested top boundary.
/// Every interior row is stochastic, has an up-step in [0.1, 0.6] and a positive one-step-down
/// probability, with the remaining mass spread over the states at or below it.
pub fn random_skip_free<R: RngCore + ?Sized>(rng: &mut R, n: usize, top: Boundary) -> ChainSpec {
    assert!(n >= 2);
    let mut p = DMatrix::zeros(n, n);
    for x in 0..n {
        let is_top = x + 1 == n;
        if is_top && top == Boundary::Absorbing {
            p[(x, x)] = 1.0;
            continue;
        }
        let up = if is_top { 0.0 } else { 0.1 + 0.5 * uniform01(rng) };
        let mass = if is_top {
            match top {
                Boundary::Killing => 0.5 + 0.45 * uniform01(rng),
                _ => 1.0,
            }
        } else {
            1.0 - up
        };
        let mut w: Vec<f64> = (0..=x).map(|_| uniform01(rng) + 0.05).collect();
        if x > 0 {
            w[x - 1] += 0.3;
        }
        let total: f64 = w.iter().sum();
        for (y, wy) in w.iter().enumerate() {
            p[(x, y)] = mass * wy / total;
        }
        if !is_top {
            p[(x, x + 1)] = up;
        }
    }
    ChainSpec::new(0, p, top, Boundary::Regular).unwrap()
}
