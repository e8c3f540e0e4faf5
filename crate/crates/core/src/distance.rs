//! Code distances: `F(S, u)`, the minimum distance, the distance enumerator
//! and the bounds built on them.
//!
//! Both the minimum distance and the enumerator enumerate difference vectors
//! `u ∈ ΔX^K`. Multiplying `u` by `i` multiplies every row sum by `i`, so
//! `F(S, i·u) = F(S, u)` and the pair multiplicities are unchanged. The search
//! therefore visits one member of each orbit `{u, iu, -u, -iu}`: the one whose
//! first nonzero coordinate is `√2` or `√2 + √2 i`.

use crate::constellation::DiffSymbol;
use crate::error::{Error, Result};
use crate::graph::FactorGraph;
use crate::signature::SignatureMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{SQRT_2, TAU};

/// Largest user count accepted by the exhaustive routines.
pub const DEFAULT_ENUMERATION_CAP: usize = 8;

/// Distances closer than this are merged into one enumerator term.
pub const BUCKET_TOL: f64 = 1e-9;

// below this many difference vectors the search runs on the calling thread
const PARALLEL_THRESHOLD: usize = 200_000;

const ORBIT_REPS: [DiffSymbol; 2] = [DiffSymbol::AXIS, DiffSymbol::CORNER];

/// `F(S, u) = sqrt(Σ_n |Σ_k s_{n,k} u_k|²)`.
pub fn f_distance(s: &SignatureMatrix, u: &[DiffSymbol]) -> Result<f64> {
    if u.len() != s.n_cols() {
        return Err(Error::DimensionMismatch { expected: s.n_cols(), got: u.len() });
    }
    let energy: f64 = (0..s.n_rows())
        .map(|n| (0..s.n_cols()).map(|k| s.value(n, k) * u[k].value()).sum::<Complex64>().norm_sqr())
        .sum();
    Ok(energy.sqrt())
}

/// Minimum distance together with a difference vector achieving it.
#[derive(Debug, Clone, PartialEq)]
pub struct DminResult {
    pub d_min: f64,
    pub argmin: Vec<DiffSymbol>,
}

fn check_cap(s: &SignatureMatrix, cap: usize) -> Result<()> {
    if s.n_cols() > cap {
        return Err(Error::EnumerationCap { users: s.n_cols(), cap });
    }
    Ok(())
}

/// Exact minimum distance over all nonzero difference vectors.
pub fn min_distance(s: &SignatureMatrix) -> Result<DminResult> {
    min_distance_with_cap(s, DEFAULT_ENUMERATION_CAP)
}

pub fn min_distance_with_cap(s: &SignatureMatrix, cap: usize) -> Result<DminResult> {
    check_cap(s, cap)?;
    Ok(Layout::new(s).min_distance())
}

/// Column-major view of a signature matrix arranged for depth-first search.
struct Layout {
    rows: usize,
    /// visit order of the columns
    order: Vec<usize>,
    /// nonzeros of the column visited at each depth
    cols: Vec<Vec<(usize, Complex64)>>,
    /// rows whose last nonzero sits at each depth
    closes: Vec<Vec<usize>>,
    /// per depth and row, the largest magnitude the not-yet-visited columns can
    /// add; infinite once the row is closed
    reach: Vec<Vec<f64>>,
    /// rows untouched by the final column
    outside_last: Vec<usize>,
}

impl Layout {
    fn new(s: &SignatureMatrix) -> Self {
        let (rows, k) = (s.n_rows(), s.n_cols());
        let support: Vec<Vec<usize>> = (0..k).map(|c| (0..rows).filter(|&n| !s.get(n, c).is_zero()).collect()).collect();

        // Greedy order: keep the number of open rows small so rows close early.
        let mut order = Vec::with_capacity(k);
        let mut used = vec![false; k];
        let mut opened = vec![false; rows];
        let mut left: Vec<usize> = (0..rows).map(|n| (0..k).filter(|&c| !s.get(n, c).is_zero()).count()).collect();
        for _ in 0..k {
            let score = |c: usize| {
                let closes = support[c].iter().filter(|&&n| left[n] == 1).count() as i64;
                let opens = support[c].iter().filter(|&&n| !opened[n]).count() as i64;
                (opens - closes, c)
            };
            let next = (0..k).filter(|&c| !used[c]).min_by_key(|&c| score(c)).unwrap();
            used[next] = true;
            for &n in &support[next] {
                opened[n] = true;
                left[n] -= 1;
            }
            order.push(next);
        }

        let cols: Vec<Vec<(usize, Complex64)>> = order.iter().map(|&c| support[c].iter().map(|&n| (n, s.value(n, c))).collect()).collect();
        let mut last_depth = vec![0; rows];
        for (d, col) in cols.iter().enumerate() {
            for &(n, _) in col {
                last_depth[n] = d;
            }
        }
        let mut closes = vec![Vec::new(); k];
        for (n, &d) in last_depth.iter().enumerate() {
            closes[d].push(n);
        }
        let reach = (0..k)
            .map(|d| {
                // closed rows are already counted exactly
                let mut r: Vec<f64> = last_depth.iter().map(|&l| if l <= d { f64::INFINITY } else { 0.0 }).collect();
                for col in &cols[d + 1..] {
                    for &(n, _) in col {
                        r[n] += 2.0;
                    }
                }
                r
            })
            .collect();
        let in_last: Vec<usize> = cols[k - 1].iter().map(|&(n, _)| n).collect();
        let outside_last = (0..rows).filter(|n| !in_last.contains(n)).collect();
        Layout { rows, order, cols, closes, reach, outside_last }
    }

    fn depth(&self) -> usize {
        self.order.len()
    }

    fn choices(any_nonzero: bool) -> &'static [DiffSymbol] {
        const START: [DiffSymbol; 3] = [DiffSymbol::ZERO, DiffSymbol::AXIS, DiffSymbol::CORNER];
        if any_nonzero {
            &DiffSymbol::ALL
        } else {
            &START
        }
    }

    /// Prefixes (in visit order) over the first `levels` depths.
    fn prefixes(&self, levels: usize) -> Vec<Vec<DiffSymbol>> {
        let mut out = vec![Vec::new()];
        for _ in 0..levels {
            out = out
                .into_iter()
                .flat_map(|p: Vec<DiffSymbol>| {
                    let any = p.iter().any(|d| !d.is_zero());
                    Self::choices(any).iter().map(move |&c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn split_levels(&self) -> usize {
        let size = 9usize.saturating_pow(self.depth() as u32);
        if size < PARALLEL_THRESHOLD || self.depth() < 3 {
            0
        } else {
            2
        }
    }

    /// Apply a prefix; returns partial sums, closed energy and the nonzero flag.
    fn apply_prefix(&self, prefix: &[DiffSymbol]) -> (Vec<Complex64>, f64, bool) {
        let mut partial = vec![Complex64::new(0.0, 0.0); self.rows];
        let mut closed = 0.0;
        for (d, &u) in prefix.iter().enumerate() {
            let uv = u.value();
            for &(n, s) in &self.cols[d] {
                partial[n] += s * uv;
            }
            for &n in &self.closes[d] {
                closed += partial[n].norm_sqr();
            }
        }
        (partial, closed, prefix.iter().any(|d| !d.is_zero()))
    }

    fn min_distance(&self) -> DminResult {
        let k = self.depth();
        // a single active user already gives √2·sqrt(w)
        let (seed_pos, seed_w) = self.cols.iter().enumerate().map(|(d, c)| (d, c.len())).min_by_key(|&(_, w)| w).unwrap();
        let mut seed = vec![DiffSymbol::ZERO; k];
        seed[seed_pos] = DiffSymbol::AXIS;
        let initial = Best { energy: 2.0 * seed_w as f64, u: seed };

        let levels = self.split_levels();
        let prefixes = self.prefixes(levels);
        let search = |prefix: &Vec<DiffSymbol>| {
            let mut best = initial.clone();
            let (partial, closed, any) = self.apply_prefix(prefix);
            let mut u = prefix.clone();
            if prefix.len() == k {
                // prefix already complete (only when levels == depth)
                if any && closed < best.energy {
                    best = Best { energy: closed, u };
                }
            } else {
                self.min_dfs(prefix.len(), &partial, closed, any, &mut u, &mut best);
            }
            best
        };
        let results: Vec<Best> = if levels == 0 {
            prefixes.iter().map(search).collect()
        } else {
            prefixes.par_iter().map(search).collect()
        };
        let best = results.into_iter().fold(initial, |acc, b| if b.energy < acc.energy { b } else { acc });

        let mut argmin = vec![DiffSymbol::ZERO; k];
        for (d, &c) in self.order.iter().enumerate() {
            argmin[c] = best.u[d];
        }
        DminResult { d_min: best.energy.sqrt(), argmin }
    }

    fn min_dfs(&self, depth: usize, partial: &[Complex64], closed: f64, any: bool, u: &mut Vec<DiffSymbol>, best: &mut Best) {
        let k = self.depth();
        if depth == k - 1 {
            self.min_last(partial, any, u, best);
            return;
        }
        let mut next = partial.to_vec();
        for &c in Self::choices(any) {
            let cv = c.value();
            next.copy_from_slice(partial);
            for &(n, s) in &self.cols[depth] {
                next[n] += s * cv;
            }
            let mut energy = closed;
            for &n in &self.closes[depth] {
                energy += next[n].norm_sqr();
            }
            if energy >= best.energy {
                continue;
            }
            // open rows cannot shrink below |p_n| minus what the rest can add
            let reach = &self.reach[depth];
            let mut bound = energy;
            for (n, p) in next.iter().enumerate() {
                let slack = p.norm() - reach[n];
                if slack > 0.0 {
                    bound += slack * slack;
                }
            }
            if bound >= best.energy {
                continue;
            }
            u.push(c);
            self.min_dfs(depth + 1, &next, energy, any || !c.is_zero(), u, best);
            u.pop();
        }
    }

    /// Solve the final column in closed form.
    ///
    /// With `t = (1/w) Σ_n p_n conj(s_n)` over the column's rows,
    /// `Σ_n |p_n + s_n u|² = const + w |u + t|²`, and `ΔX` is the grid
    /// `√2 {-1, 0, 1}²`, so the best `u` rounds each coordinate of `-t`.
    fn min_last(&self, partial: &[Complex64], any: bool, u: &mut Vec<DiffSymbol>, best: &mut Best) {
        let col = &self.cols[self.depth() - 1];
        let mut outside = 0.0;
        for &n in &self.outside_last {
            outside += partial[n].norm_sqr();
        }
        if outside >= best.energy {
            return;
        }
        let eval = |c: DiffSymbol| {
            let cv = c.value();
            outside + col.iter().map(|&(n, s)| (partial[n] + s * cv).norm_sqr()).sum::<f64>()
        };
        let candidate = if any {
            let t: Complex64 = col.iter().map(|&(n, s)| partial[n] * s.conj()).sum::<Complex64>() / col.len() as f64;
            let q = |v: f64| (-v / SQRT_2).round().clamp(-1.0, 1.0) as i8;
            let c = DiffSymbol::from_coords(q(t.re), q(t.im)).unwrap();
            (eval(c), c)
        } else {
            ORBIT_REPS.iter().map(|&c| (eval(c), c)).min_by(|a, b| a.0.total_cmp(&b.0)).unwrap()
        };
        if candidate.0 < best.energy {
            u.push(candidate.1);
            best.energy = candidate.0;
            best.u.clone_from(u);
            u.pop();
        }
    }

    /// Weighted histogram of `F(S, u)` over every nonzero `u`.
    fn histogram(&self) -> Vec<(f64, u64)> {
        let levels = self.split_levels();
        let prefixes = self.prefixes(levels);
        let run = |prefix: &Vec<DiffSymbol>| {
            let mut hist = Histogram::default();
            let (partial, _, any) = self.apply_prefix(prefix);
            let weight: u64 = prefix.iter().map(|d| d.pair_count() as u64).product();
            if prefix.len() == self.depth() {
                if any {
                    hist.add(partial.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt(), weight);
                }
            } else {
                self.hist_dfs(prefix.len(), &partial, any, weight, &mut hist);
            }
            hist.into_sorted()
        };
        let parts: Vec<Vec<(f64, u64)>> = if levels == 0 {
            prefixes.iter().map(run).collect()
        } else {
            prefixes.par_iter().map(run).collect()
        };
        let mut all: Vec<(f64, u64)> = parts.into_iter().flatten().collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        merge_sorted(all)
    }

    fn hist_dfs(&self, depth: usize, partial: &[Complex64], any: bool, weight: u64, hist: &mut Histogram) {
        let last = depth + 1 == self.depth();
        let mut next = partial.to_vec();
        for &c in Self::choices(any) {
            let any_next = any || !c.is_zero();
            if last && !any_next {
                continue;
            }
            let cv = c.value();
            next.copy_from_slice(partial);
            for &(n, s) in &self.cols[depth] {
                next[n] += s * cv;
            }
            let w = weight * c.pair_count() as u64;
            if last {
                hist.add(next.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt(), w);
            } else {
                self.hist_dfs(depth + 1, &next, any_next, w, hist);
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Best {
    energy: f64,
    u: Vec<DiffSymbol>,
}

/// Weighted distances bucketed on a fixed grid, merged afterwards.
#[derive(Default)]
struct Histogram {
    bins: HashMap<i64, (f64, u64)>,
}

impl Histogram {
    fn add(&mut self, d: f64, w: u64) {
        let key = (d / BUCKET_TOL).round() as i64;
        let e = self.bins.entry(key).or_insert((d, 0));
        e.0 = e.0.min(d);
        e.1 += w;
    }

    fn into_sorted(self) -> Vec<(f64, u64)> {
        let mut v: Vec<(f64, u64)> = self.bins.into_values().collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        merge_sorted(v)
    }
}

/// Merge runs of sorted distances within `BUCKET_TOL` of the run's smallest member.
fn merge_sorted(sorted: Vec<(f64, u64)>) -> Vec<(f64, u64)> {
    let mut out: Vec<(f64, u64)> = Vec::new();
    for (d, w) in sorted {
        match out.last_mut() {
            Some(last) if d - last.0 <= BUCKET_TOL => last.1 += w,
            _ => out.push((d, w)),
        }
    }
    out
}

/// One term `A(d) Z^d` of a distance enumerator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumeratorTerm {
    pub d: f64,
    pub coefficient: Ratio<u64>,
}

impl EnumeratorTerm {
    pub fn coefficient_f64(&self) -> f64 {
        *self.coefficient.numer() as f64 / *self.coefficient.denom() as f64
    }
}

/// `A(S, Z) = Σ_d A(d) Z^d`, the average distance spectrum of a code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TermJson>", into = "Vec<TermJson>")]
pub struct DistanceEnumerator {
    users: usize,
    terms: Vec<EnumeratorTerm>,
}

impl DistanceEnumerator {
    /// Build from explicit terms; coefficients must sum to `4^K - 1`.
    pub fn from_terms(users: usize, mut terms: Vec<EnumeratorTerm>) -> Result<Self> {
        terms.retain(|t| *t.coefficient.numer() > 0);
        terms.sort_by(|a, b| a.d.total_cmp(&b.d));
        if terms.iter().any(|t| !(t.d >= 0.0) || !t.d.is_finite()) {
            return Err(Error::InvalidArgument("enumerator distances must be finite and nonnegative".into()));
        }
        let total: Ratio<u64> = terms.iter().map(|t| t.coefficient).sum();
        let expect = 4u64.checked_pow(users as u32).ok_or_else(|| Error::InvalidArgument("too many users".into()))? - 1;
        if total != Ratio::from_integer(expect) {
            return Err(Error::InvalidArgument(format!("enumerator coefficients sum to {total}, expected {expect}")));
        }
        Ok(DistanceEnumerator { users, terms })
    }

    /// A single-term enumerator, useful for evaluating bound components.
    pub fn single(d: f64, coefficient: Ratio<u64>) -> Self {
        DistanceEnumerator { users: 0, terms: vec![EnumeratorTerm { d, coefficient }] }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn terms(&self) -> &[EnumeratorTerm] {
        &self.terms
    }

    /// Sum of all coefficients.
    pub fn total(&self) -> Ratio<u64> {
        self.terms.iter().map(|t| t.coefficient).sum()
    }

    /// Coefficient of the zero-distance term.
    pub fn a_zero(&self) -> Ratio<u64> {
        self.terms.iter().filter(|t| t.d <= BUCKET_TOL).map(|t| t.coefficient).sum()
    }

    /// Smallest distance with a positive coefficient, excluding zero.
    pub fn smallest_positive(&self) -> Option<f64> {
        self.terms.iter().map(|t| t.d).find(|&d| d > BUCKET_TOL)
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    d: f64,
    num: u64,
    den: u64,
}

impl From<DistanceEnumerator> for Vec<TermJson> {
    fn from(e: DistanceEnumerator) -> Self {
        e.terms.iter().map(|t| TermJson { d: t.d, num: *t.coefficient.numer(), den: *t.coefficient.denom() }).collect()
    }
}

impl TryFrom<Vec<TermJson>> for DistanceEnumerator {
    type Error = Error;

    fn try_from(v: Vec<TermJson>) -> Result<Self> {
        if v.iter().any(|t| t.den == 0) {
            return Err(Error::Parse("zero denominator".into()));
        }
        let terms: Vec<EnumeratorTerm> = v.iter().map(|t| EnumeratorTerm { d: t.d, coefficient: Ratio::new(t.num, t.den) }).collect();
        let total: Ratio<u64> = terms.iter().map(|t| t.coefficient).sum();
        if !total.is_integer() {
            return Err(Error::Parse(format!("coefficients sum to non-integer {total}")));
        }
        let users = (0..32).find(|&k| 4u64.pow(k) == total.to_integer() + 1).ok_or_else(|| Error::Parse(format!("coefficient sum {total} is not 4^K - 1")))?;
        DistanceEnumerator::from_terms(users as usize, terms)
    }
}

/// Enumerate `A(d) = 4^{-K} Σ_{u≠0, F(S,u)=d} Π_k pair_count(u_k)`.
///
/// Each nonzero difference vector stands for `Π pair_count(u_k)` ordered
/// codeword pairs, and averaging over the `4^K` transmitted codewords gives
/// the coefficient, so no codeword pairs are enumerated.
pub fn distance_enumerator(s: &SignatureMatrix) -> Result<DistanceEnumerator> {
    distance_enumerator_with_cap(s, DEFAULT_ENUMERATION_CAP)
}

pub fn distance_enumerator_with_cap(s: &SignatureMatrix, cap: usize) -> Result<DistanceEnumerator> {
    check_cap(s, cap)?;
    let k = s.n_cols();
    let den = 4u64.pow(k as u32);
    let terms = Layout::new(s)
        .histogram()
        .into_iter()
        .map(|(d, w)| EnumeratorTerm { d, coefficient: Ratio::new(4 * w, den) })
        .collect();
    DistanceEnumerator::from_terms(k, terms)
}

/// Gaussian tail `Q(x) = ½ erfc(x / √2)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// WER union bound `A(0) + Σ_{d>0} A(d) Q(d / sqrt(2 N0))` for ML detection.
///
/// The value can exceed 1.
pub fn union_bound(a: &DistanceEnumerator, n0: f64) -> Result<f64> {
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::InvalidArgument(format!("noise variance must be positive, got {n0}")));
    }
    let scale = (2.0 * n0).sqrt();
    Ok(a.terms
        .iter()
        .map(|t| if t.d <= BUCKET_TOL { t.coefficient_f64() } else { t.coefficient_f64() * q_function(t.d / scale) })
        .sum())
}

/// `sqrt(2 w)` with `w` the smallest effective spreading length.
pub fn upper_bound_spreading(s: &SignatureMatrix) -> f64 {
    let w = s.column_weights().into_iter().min().unwrap_or(0);
    (2.0 * w as f64).sqrt()
}

/// Best single-resource minimum distance `δ_q` for `q` users.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTable(BTreeMap<usize, f64>);

impl DeltaTable {
    /// `δ_1 = √2, δ_2 = √3 - 1` and the numerically found `δ_3..δ_6`.
    pub fn published() -> Self {
        DeltaTable(BTreeMap::from([
            (1, SQRT_2),
            (2, 3f64.sqrt() - 1.0),
            (3, 0.4310),
            (4, 0.2086),
            (5, 0.1142),
            (6, 0.0595),
        ]))
    }

    pub fn with(mut self, q: usize, delta: f64) -> Self {
        self.0.insert(q, delta);
        self
    }

    pub fn get(&self, q: usize) -> Option<f64> {
        self.0.get(&q).copied()
    }
}

/// Lower bound on `d_min` for a code-node regular graph of degree `q`
/// labelled with optimal single-resource vectors on every row.
///
/// Minimizes `sqrt(n1 δ_1² + n2 δ_q²)` over proper subsets `α` of the code
/// nodes. Subsets that delete every data node are skipped since no nonzero
/// difference vector lives on them.
pub fn lower_bound_regular(g: &FactorGraph, q: usize, table: &DeltaTable) -> Result<f64> {
    if q < 2 || g.code_regular_degree() != Some(q) {
        return Err(Error::InvalidArgument(format!("graph is not code-node regular of degree {q}")));
    }
    let (d1, dq) = match (table.get(1), table.get(q)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidArgument(format!("delta table lacks δ_1 or δ_{q}"))),
    };
    let n = g.n_code();
    if n > 24 {
        return Err(Error::InvalidArgument(format!("{n} code nodes is too many for subset enumeration")));
    }
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) - 1 {
        let alpha: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let p = g.delete_around_code_nodes(&alpha)?;
        if p.n1 + p.n2 == 0 {
            continue;
        }
        best = best.min((p.n1 as f64 * d1 * d1 + p.n2 as f64 * dq * dq).sqrt());
    }
    Ok(best)
}

/// `θ / π`, the usual way angles are reported.
pub fn in_pi_units(theta: f64) -> f64 {
    theta.rem_euclid(TAU) / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use std::f64::consts::PI;

    fn row(angles: &[f64]) -> SignatureMatrix {
        SignatureMatrix::from_angles(&[angles.iter().map(|&a| Some(a)).collect()]).unwrap()
    }

    /// Plain enumeration of all 9^K vectors, no symmetry or pruning.
    fn brute_min(s: &SignatureMatrix) -> f64 {
        let k = s.n_cols();
        let mut best = f64::INFINITY;
        for code in 1..9usize.pow(k as u32) {
            let u: Vec<DiffSymbol> = (0..k).map(|i| DiffSymbol::from_index(code / 9usize.pow(i as u32) % 9).unwrap()).collect();
            best = best.min(f_distance(s, &u).unwrap());
        }
        best
    }

    #[test]
    fn f_distance_cases() {
        let s = row(&[0.0, PI / 6.0]);
        let z = DiffSymbol::ZERO;
        let a = DiffSymbol::AXIS;
        assert_eq!(f_distance(&s, &[z, z]).unwrap(), 0.0);
        assert!((f_distance(&s, &[a, z]).unwrap() - SQRT_2).abs() < 1e-12);
        let v = f_distance(&s, &[a, a.neg()]).unwrap();
        assert!((v - SQRT_2 * (2.0 - 2.0 * (PI / 6.0).cos()).sqrt()).abs() < 1e-12);
        assert!((v - 0.7321).abs() < 1e-4);
        assert!(f_distance(&s, &[a]).is_err());
    }

    #[test]
    fn two_user_minimum_distances() {
        let d = min_distance(&row(&[0.0, PI / 6.0])).unwrap();
        assert!((d.d_min - (3f64.sqrt() - 1.0)).abs() < 1e-12);
        let d = min_distance(&row(&[0.0, PI / 4.0])).unwrap();
        assert!((d.d_min - (2.0 - SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn argmin_achieves_minimum() {
        for s in [presets::fig2_optimal(), presets::example3(), row(&[0.0, 0.3, 1.1])] {
            let d = min_distance(&s).unwrap();
            assert!((f_distance(&s, &d.argmin).unwrap() - d.d_min).abs() < 1e-12);
            assert!(d.argmin.iter().any(|u| !u.is_zero()));
        }
    }

    #[test]
    fn pruned_search_matches_brute_force() {
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 * TAU
        };
        for _ in 0..20 {
            let s = SignatureMatrix::from_angles(&[
                vec![Some(next()), Some(next()), None, Some(next())],
                vec![None, Some(next()), Some(next()), Some(next())],
            ])
            .unwrap();
            assert!((min_distance(&s).unwrap().d_min - brute_min(&s)).abs() < 1e-12);
        }
        let s = row(&[0.0, next(), next()]);
        assert!((min_distance(&s).unwrap().d_min - brute_min(&s)).abs() < 1e-12);
    }

    #[test]
    fn single_user_enumerator() {
        let a = distance_enumerator(&row(&[0.0])).unwrap();
        assert_eq!(a.terms().len(), 2);
        assert!((a.terms()[0].d - SQRT_2).abs() < 1e-12);
        assert_eq!(a.terms()[0].coefficient, Ratio::from_integer(2));
        assert!((a.terms()[1].d - 2.0).abs() < 1e-12);
        assert_eq!(a.terms()[1].coefficient, Ratio::from_integer(1));
    }

    #[test]
    fn enumerator_totals_and_smallest_term() {
        for s in [presets::fig2_optimal(), presets::example3(), presets::table1_vector(4).unwrap()] {
            let a = distance_enumerator(&s).unwrap();
            let k = s.n_cols() as u32;
            assert_eq!(a.total(), Ratio::from_integer(4u64.pow(k) - 1));
            assert_eq!(a.a_zero(), Ratio::from_integer(0));
            let d = min_distance(&s).unwrap().d_min;
            assert!((a.smallest_positive().unwrap() - d).abs() < BUCKET_TOL);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let s = row(&[0.0; 9]);
        assert_eq!(min_distance(&s), Err(Error::EnumerationCap { users: 9, cap: 8 }));
        assert!(distance_enumerator(&s).is_err());
        assert!(min_distance_with_cap(&row(&[0.0, 1.0]), 1).is_err());
    }

    #[test]
    fn zero_distance_terms() {
        // identical columns collide: x = (a, b) and (b, a) give the same codeword
        let s = row(&[0.0, 0.0]);
        let a = distance_enumerator(&s).unwrap();
        assert_eq!(min_distance(&s).unwrap().d_min, 0.0);
        assert!(a.a_zero() > Ratio::from_integer(0));
        let floor = a.a_zero().to_integer() as f64 + (*a.a_zero().numer() % *a.a_zero().denom()) as f64 / *a.a_zero().denom() as f64;
        for n0 in [1e-4, 1e-2, 1.0] {
            assert!(union_bound(&a, n0).unwrap() >= floor);
        }
    }

    #[test]
    fn union_bound_single_term() {
        let a = DistanceEnumerator::single(SQRT_2, Ratio::from_integer(1));
        for n0 in [0.1f64, 0.5, 2.0] {
            let expect = q_function(1.0 / n0.sqrt());
            assert!((union_bound(&a, n0).unwrap() - expect).abs() < 1e-15);
        }
        assert!(union_bound(&a, 0.0).is_err());
        assert!(union_bound(&a, -1.0).is_err());
    }

    #[test]
    fn union_bound_leading_term_dominates() {
        let a = distance_enumerator(&row(&[0.0, PI / 6.0])).unwrap();
        let n0: f64 = 0.01;
        let lead = 2.0 * q_function((3f64.sqrt() - 1.0) / (2.0 * n0).sqrt());
        let full = union_bound(&a, n0).unwrap();
        assert!(full >= lead);
        assert!((full - lead) / full < 0.01, "{full} vs {lead}");
    }

    #[test]
    fn q_function_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        // Q(1.96) ≈ 0.0249979
        assert!((q_function(1.96) - 0.024_997_895).abs() < 1e-8);
        assert!((q_function(-1.0) + q_function(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spreading_bounds() {
        assert!((upper_bound_spreading(&row(&[0.0])) - SQRT_2).abs() < 1e-15);
        assert!((upper_bound_spreading(&presets::fig2_optimal()) - 2.0).abs() < 1e-15);
        assert_eq!(presets::example4().column_weights().into_iter().min(), Some(1));
        assert!((upper_bound_spreading(&presets::example4()) - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn regular_lower_bound_tree_family() {
        let t = DeltaTable::published();
        for k in 3..=7 {
            let g = presets::tree_code(k).unwrap().graph().unwrap();
            let lb = lower_bound_regular(&g, 2, &t).unwrap();
            let expect = ((k - 1) as f64).sqrt() * (3f64.sqrt() - 1.0);
            assert!((lb - expect.min(SQRT_2)).abs() < 1e-12, "K={k}: {lb}");
        }
    }

    #[test]
    fn regular_lower_bound_rejects_irregular() {
        let g = presets::example3().graph().unwrap();
        assert!(lower_bound_regular(&g, 3, &DeltaTable::published()).is_err());
    }

    #[test]
    fn regular_lower_bound_no_deletion_term() {
        // with δ_1 huge only α = ∅ (all code nodes at degree q) can be the minimum
        let g = presets::fig2_optimal().graph().unwrap();
        let t = DeltaTable::published().with(1, 100.0);
        let lb = lower_bound_regular(&g, 3, &t).unwrap();
        assert!(lb <= (4.0f64).sqrt() * 0.4310 + 1e-12);
    }

    #[test]
    fn enumerator_json_round_trip() {
        let a = distance_enumerator(&row(&[0.0, PI / 6.0])).unwrap();
        let text = serde_json::to_string(&a).unwrap();
        assert!(text.contains("\"num\":9,\"den\":4"));
        let back: DistanceEnumerator = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<DistanceEnumerator>(r#"[{"d":1.0,"num":1,"den":2}]"#).is_err());
    }
}
