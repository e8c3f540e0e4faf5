//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use num_rational::Ratio;
use rand::Rng;
use scdma::constellation::{DiffSymbol, Symbol};
use scdma::distance::{DistanceEnumerator, BUCKET_TOL};
use scdma::graph::FactorGraph;
use scdma::SignatureMatrix;
use std::f64::consts::TAU;

/// Random matrix with every row and column nonzero somewhere.
pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, density: f64) -> SignatureMatrix {
    loop {
        let grid: Vec<Vec<Option<f64>>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_bool(density).then(|| rng.random_range(0.0..TAU))).collect()).collect();
        if let Ok(s) = SignatureMatrix::from_angles(&grid) {
            return s;
        }
    }
}

/// Random labels on the support of `s`.
pub fn relabel(rng: &mut impl Rng, s: &SignatureMatrix) -> SignatureMatrix {
    let t: Vec<(usize, usize, f64)> = s.support().map(|(n, k)| (n, k, rng.random_range(0.0..TAU))).collect();
    SignatureMatrix::from_triplets(s.n_rows(), s.n_cols(), t).unwrap()
}

/// Random bipartite tree with `k` data nodes and random phases.
pub fn random_tree_code(rng: &mut impl Rng, k: usize) -> SignatureMatrix {
    let n = rng.random_range(1..=k.max(2) - 1).max(1);
    // attach nodes one by one to an existing node of the other side
    let mut order: Vec<bool> = std::iter::repeat(true).take(n - 1).chain(std::iter::repeat(false).take(k - 1)).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges = vec![(0usize, 0usize)];
    let (mut codes, mut datas) = (1usize, 1usize);
    for is_code in order {
        if is_code {
            edges.push((codes, rng.random_range(0..datas)));
            codes += 1;
        } else {
            edges.push((rng.random_range(0..codes), datas));
            datas += 1;
        }
    }
    let t: Vec<(usize, usize, f64)> = edges.into_iter().map(|(a, b)| (a, b, rng.random_range(0.0..TAU))).collect();
    SignatureMatrix::from_triplets(n, k, t).unwrap()
}

pub fn symbols_of(code: usize, k: usize) -> Vec<Symbol> {
    (0..k).map(|i| Symbol::ALL[(code >> (2 * i)) & 3]).collect()
}

/// Enumerator straight from its definition: every ordered pair of distinct
/// inputs, averaged over the `4^K` transmitted words. The distance of the
/// pair is `‖S x - S x'‖`.
pub fn pairwise_enumerator(s: &SignatureMatrix) -> Vec<(f64, Ratio<u64>)> {
    let k = s.n_cols();
    let m = 1usize << (2 * k);
    let words: Vec<Vec<Complex64>> = (0..m).map(|c| s.encode(&symbols_of(c, k)).unwrap()).collect();
    let mut d: Vec<f64> = Vec::with_capacity(m * (m - 1));
    for a in 0..m {
        for b in 0..m {
            if a != b {
                d.push(words[a].iter().zip(&words[b]).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt());
            }
        }
    }
    d.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<(f64, u64)> = Vec::new();
    for v in d {
        match out.last_mut() {
            Some(last) if v - last.0 <= BUCKET_TOL => last.1 += 1,
            _ => out.push((v, 1)),
        }
    }
    out.into_iter().map(|(v, c)| (v, Ratio::new(c as u64, m as u64))).collect()
}

/// Term-by-term equality: distances within `tol`, coefficients exact.
pub fn same_terms(a: &DistanceEnumerator, b: &[(f64, Ratio<u64>)], tol: f64) -> bool {
    a.terms().len() == b.len() && a.terms().iter().zip(b).all(|(t, (d, c))| (t.d - d).abs() <= tol && t.coefficient == *c)
}

pub fn same_enumerators(a: &DistanceEnumerator, b: &DistanceEnumerator, tol: f64) -> bool {
    let bt: Vec<(f64, Ratio<u64>)> = b.terms().iter().map(|t| (t.d, t.coefficient)).collect();
    same_terms(a, &bt, tol)
}

/// Minimum of `F(S, u)` over all `9^K - 1` nonzero difference vectors.
pub fn brute_min_distance(s: &SignatureMatrix) -> f64 {
    let k = s.n_cols();
    let cols: Vec<Vec<Complex64>> = (0..k).map(|c| (0..s.n_rows()).map(|n| s.value(n, c)).collect()).collect();
    let alphabet = DiffSymbol::ALL.map(DiffSymbol::value);
    let mut best = f64::INFINITY;
    let mut acc = vec![Complex64::new(0.0, 0.0); s.n_rows()];
    for code in 1..9usize.pow(k as u32) {
        acc.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let mut c = code;
        for col in &cols {
            let u = alphabet[c % 9];
            c /= 9;
            for (a, s) in acc.iter_mut().zip(col) {
                *a += s * u;
            }
        }
        best = best.min(acc.iter().map(|v| v.norm_sqr()).sum::<f64>());
    }
    best.sqrt()
}

/// First crossing of `target` by a decreasing curve, interpolated in
/// `log10(value)` against the grid. `None` when the curve never crosses.
pub fn crossing_db(grid: &[f64], values: &[f64], target: f64) -> Option<f64> {
    for i in 1..grid.len() {
        let (a, b) = (values[i - 1], values[i]);
        if a >= target && b <= target && a > 0.0 && b > 0.0 {
            if a == b {
                return Some(grid[i - 1]);
            }
            let t = (a.log10() - target.log10()) / (a.log10() - b.log10());
            return Some(grid[i - 1] + t * (grid[i] - grid[i - 1]));
        }
    }
    None
}

/// Eb/N0 in dB where a decreasing function of Eb/N0 equals `target`.
pub fn solve_db(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn graph_of(s: &SignatureMatrix) -> FactorGraph {
    s.graph().unwrap()
}
