//! Signed mixtures of (negative-binomial type) geometric laws with complex nodes.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

/// Nodes closer than this are merged into one node of higher multiplicity.
pub const MERGE_TOL: f64 = 1e-8;
/// Nodes of smaller modulus contribute only to the polynomial (point-mass) part.
pub const ZERO_NODE_TOL: f64 = 1e-13;

/// Law of an integer random variable `shift + N` where
/// P(N = n) = atoms[n] + Σ_k Σ_{i=1}^{m_k} C_{k,i} binom(n+i-1, i-1) λ_k^n,
/// i.e. E(q^N) = Σ_n atoms[n] q^n + Σ_{k,i} C_{k,i} / (1 - λ_k q)^i.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricMixture {
    pub nodes: Vec<Complex64>,
    pub multiplicities: Vec<usize>,
    /// C_{k,i} in pgf form, `pgf_coeffs[k][i - 1]`
    pub pgf_coeffs: Vec<Vec<Complex64>>,
    pub atoms: Vec<Complex64>,
    pub shift: i64,
    /// 1 - total mass
    pub defect: f64,
}

impl GeometricMixture {
    /// Point mass at `shift`.
    pub fn point(shift: i64) -> Self {
        GeometricMixture {
            nodes: Vec::new(),
            multiplicities: Vec::new(),
            pgf_coeffs: Vec::new(),
            atoms: vec![c(1.0)],
            shift,
            defect: 0.0,
        }
    }

    /// Partial-fraction form of E(q^N) = num(q) / Π_j (1 - λ_j q), with `num` in ascending
    /// powers. Near-coincident nodes are merged and the expansion is found by matching the
    /// first Taylor coefficients (a confluent Vandermonde system).
    pub fn from_rational(num: &[Complex64], raw_nodes: &[Complex64], shift: i64) -> Result<Self> {
        let mut nodes: Vec<Complex64> = Vec::new();
        let mut members: Vec<Vec<Complex64>> = Vec::new();
        for &z in raw_nodes.iter().filter(|z| z.norm() > ZERO_NODE_TOL) {
            if (z - c(1.0)).norm() < MERGE_TOL {
                return Err(Error::SpectralDegeneracy("node at 1: the law has infinite mean mass".into()));
            }
            match nodes.iter().position(|&r| (r - z).norm() < MERGE_TOL) {
                Some(k) => members[k].push(z),
                None => {
                    nodes.push(z);
                    members.push(vec![z]);
                }
            }
        }
        for (k, m) in members.iter().enumerate() {
            nodes[k] = m.iter().sum::<Complex64>() / m.len() as f64;
        }
        let mult: Vec<usize> = members.iter().map(|m| m.len()).collect();
        let mut expanded = Vec::new();
        for (k, &z) in nodes.iter().enumerate() {
            expanded.extend(core::iter::repeat_n(z, mult[k]));
        }
        let den = linalg::poly_from_reciprocal_roots(&expanded);
        let p = expanded.len();
        let mut num = num.to_vec();
        linalg::poly_trim(&mut num, 1e-15);
        let n_atoms = (num.len() as i64 - p as i64).max(0) as usize;
        let u = p + n_atoms;

        let mut series = vec![c(0.0); u];
        for n in 0..u {
            let mut s = num.get(n).copied().unwrap_or_default();
            for j in 1..=n.min(p) {
                s -= den[j] * series[n - j];
            }
            series[n] = s;
        }
        let mut a = CMatrix::zeros(u, u);
        for n in 0..u {
            let mut col = 0;
            for (k, &z) in nodes.iter().enumerate() {
                let zn = z.powu(n as u32);
                for i in 1..=mult[k] {
                    a[(n, col)] = zn * linalg::binomial((n + i - 1) as u64, (i - 1) as u64);
                    col += 1;
                }
            }
            if n >= p {
                a[(n, n)] = c(1.0);
            } else if n_atoms > 0 && n < n_atoms {
                a[(n, p + n)] = c(1.0);
            }
        }
        // atoms occupy the last n_atoms unknowns and hit rows 0..n_atoms
        if n_atoms > 0 {
            for n in 0..u {
                for j in 0..n_atoms {
                    a[(n, p + j)] = if n == j { c(1.0) } else { c(0.0) };
                }
            }
        }
        let mut sol = linalg::csolve(&a, &CVector::from_vec(series))
            .ok_or_else(|| Error::Numeric("partial-fraction system is singular".into()))?;
        if n_atoms == 0 && mult.iter().all(|&m| m == 1) {
            // simple poles: residues directly, which beats the Vandermonde solve for clustered nodes
            for (k, &z) in nodes.iter().enumerate() {
                let w = c(1.0) / z;
                let others: Complex64 =
                    nodes.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &y)| c(1.0) - y * w).product();
                sol[k] = linalg::poly_eval(&num, w) / others;
            }
        }
        let mut pgf_coeffs = Vec::with_capacity(nodes.len());
        let mut col = 0;
        for &m in &mult {
            pgf_coeffs.push(sol.rows(col, m).iter().copied().collect());
            col += m;
        }
        let atoms: Vec<Complex64> = sol.rows(p, n_atoms).iter().copied().collect();
        let mass = linalg::poly_eval(&num, c(1.0)) / linalg::poly_eval(&den, c(1.0));
        Ok(GeometricMixture { nodes, multiplicities: mult, pgf_coeffs, atoms, shift, defect: 1.0 - mass.re })
    }

    /// c_{k,i} = C_{k,i} / (1 - λ_k)^i, the weights in front of the normalised
    /// negative-binomial laws binom(n+i-1, n) λ^n (1-λ)^i.
    pub fn coefficients(&self) -> Vec<Vec<Complex64>> {
        self.nodes
            .iter()
            .zip(&self.pgf_coeffs)
            .map(|(&z, cs)| {
                cs.iter().enumerate().map(|(i, &cc)| cc / (c(1.0) - z).powu(i as u32 + 1)).collect()
            })
            .collect()
    }

    pub fn pmf_complex(&self, n: u64) -> Complex64 {
        let mut s = self.atoms.get(n as usize).copied().unwrap_or_default();
        for (k, &z) in self.nodes.iter().enumerate() {
            let zn = z.powu(n as u32);
            for (i, &cc) in self.pgf_coeffs[k].iter().enumerate() {
                s += cc * zn * linalg::binomial(n + i as u64, i as u64);
            }
        }
        s
    }

    /// P(N = n) for the unshifted variable.
    pub fn pmf(&self, n: u64) -> f64 {
        self.pmf_complex(n).re
    }

    /// P(shift + N = t).
    pub fn pmf_at(&self, t: i64) -> f64 {
        if t < self.shift {
            0.0
        } else {
            self.pmf((t - self.shift) as u64)
        }
    }

    pub fn cdf(&self, n: u64) -> f64 {
        (0..=n).map(|j| self.pmf(j)).sum()
    }

    /// P(N > n), counting the defect as mass at infinity.
    pub fn tail(&self, n: u64) -> f64 {
        1.0 - self.cdf(n)
    }

    /// E(q^N) for the unshifted variable.
    pub fn pgf_unshifted(&self, q: Complex64) -> Complex64 {
        let mut s = linalg::poly_eval(&self.atoms, q);
        for (k, &z) in self.nodes.iter().enumerate() {
            let base = c(1.0) - z * q;
            for (i, &cc) in self.pgf_coeffs[k].iter().enumerate() {
                s += cc / base.powu(i as u32 + 1);
            }
        }
        s
    }

    /// E(q^{shift + N}).
    pub fn pgf(&self, q: f64) -> f64 {
        (self.pgf_unshifted(c(q)) * q.powi(self.shift as i32)).re
    }

    pub fn total_mass(&self) -> f64 {
        1.0 - self.defect
    }

    /// Largest imaginary part among the first `n_max + 1` pmf values.
    pub fn max_pmf_imag(&self, n_max: u64) -> f64 {
        (0..=n_max).map(|n| self.pmf_complex(n).im.abs()).fold(0.0, f64::max)
    }

    /// Largest imaginary part of any coefficient attached to a real node.
    pub fn max_real_node_coeff_imag(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.pgf_coeffs)
            .filter(|(z, _)| z.im == 0.0)
            .flat_map(|(_, cs)| cs.iter().map(|cc| cc.im.abs()))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_geometric() {
        // 0.3 / (1 - 0.7 q)
        let m = GeometricMixture::from_rational(&[c(0.3)], &[c(0.7)], 0).unwrap();
        for n in 0..20 {
            assert!((m.pmf(n) - 0.3 * 0.7f64.powi(n as i32)).abs() < 1e-15);
        }
        let coeffs = m.coefficients();
        assert!((coeffs[0][0].re - 1.0).abs() < 1e-14);
        assert!(m.defect.abs() < 1e-15);
    }

    #[test]
    fn repeated_nodes_merge_into_negative_binomial() {
        // (0.5 / (1 - 0.5 q))^3 with slightly perturbed nodes
        let nodes = [c(0.5), c(0.5 + 1e-10), c(0.5 - 1e-10)];
        let m = GeometricMixture::from_rational(&[c(0.125)], &nodes, 3).unwrap();
        assert_eq!(m.multiplicities, vec![3]);
        assert!((m.pmf(0) - 0.125).abs() < 1e-12);
        for n in 0..40u64 {
            let want = linalg::binomial(n + 2, 2) * 0.5f64.powi(n as i32) * 0.125;
            assert!((m.pmf(n) - want).abs() < 1e-9);
        }
    }

    #[test]
    fn polynomial_part_and_zero_nodes() {
        // (0.5 + 0.5 q) / (1 - 0 q): a fair coin on {0, 1}
        let m = GeometricMixture::from_rational(&[c(0.5), c(0.5)], &[c(0.0)], 0).unwrap();
        assert!(m.nodes.is_empty());
        assert!((m.pmf(0) - 0.5).abs() < 1e-15 && (m.pmf(1) - 0.5).abs() < 1e-15 && m.pmf(2) == 0.0);
    }

    #[test]
    fn conjugate_nodes_give_real_pmf() {
        let z = Complex64::new(0.3, 0.4);
        let num = [c(0.5), c(-0.1)];
        let m = GeometricMixture::from_rational(&num, &[z, z.conj()], 1).unwrap();
        assert!(m.max_pmf_imag(100) < 1e-14);
        let q = 0.8;
        let direct = (num[0] + num[1] * q) / ((c(1.0) - z * q) * (c(1.0) - z.conj() * q));
        assert!((m.pgf(q) - direct.re * q).abs() < 1e-14);
    }

    #[test]
    fn defect_tracks_missing_mass() {
        let m = GeometricMixture::from_rational(&[c(0.2)], &[c(0.5)], 0).unwrap();
        assert!((m.defect - 0.6).abs() < 1e-15);
        assert!((m.tail(200) - 0.6).abs() < 1e-12);
    }
}
