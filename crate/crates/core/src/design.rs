//! Signature design: the canonical labeling family of a factor graph, a
//! multistart search for the labeling with the largest minimum distance, and
//! the structured code families.

use crate::distance::{min_distance, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeSubset, FactorGraph};
use crate::signature::{PhaseEntry, SignatureMatrix, PHASE_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI, TAU};

/// Coarse grid step of the initial sampling phase.
pub const GRID_STEP: f64 = PI / 60.0;
/// Pattern search stops once its step falls below this.
pub const MIN_STEP: f64 = 1e-5;

/// Which free angle an edge's phase comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Binding {
    /// Common phase of data node `k`; `Column(0)` is fixed at zero.
    Column(usize),
    /// Free phase of the `i`-th edge outside the spanning tree.
    Loop(usize),
}

/// Canonical labeling family of a connected graph without 4-cycles.
///
/// Parameter vectors are laid out as `[θ_1..θ_{K-1}, loop_0..loop_{L-1}]`.
#[derive(Debug, Clone)]
pub struct Parameterization {
    graph: FactorGraph,
    phi: EdgeSubset,
    binding: Vec<(Edge, Binding)>,
}

/// Build the canonical family of `g` using its breadth-first spanning tree.
pub fn parameterize(g: &FactorGraph) -> Result<Parameterization> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if g.count_cycles(4)? > 0 {
        return Err(Error::FourCycle);
    }
    let phi = g.spanning_tree_complement()?;
    let binding = g
        .edges()
        .iter()
        .map(|&(n, k)| match phi.edges().iter().position(|&e| e == (n, k)) {
            Some(i) => ((n, k), Binding::Loop(i)),
            None => ((n, k), Binding::Column(k)),
        })
        .collect();
    Ok(Parameterization { graph: g.clone(), phi, binding })
}

impl Parameterization {
    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn phi(&self) -> &EdgeSubset {
        &self.phi
    }

    pub fn binding(&self) -> &[(Edge, Binding)] {
        &self.binding
    }

    pub fn n_column_params(&self) -> usize {
        self.graph.n_data() - 1
    }

    pub fn n_loop_params(&self) -> usize {
        self.phi.len()
    }

    pub fn n_params(&self) -> usize {
        self.n_column_params() + self.n_loop_params()
    }

    fn angle(&self, b: Binding, params: &[f64]) -> f64 {
        match b {
            Binding::Column(0) => 0.0,
            Binding::Column(k) => params[k - 1],
            Binding::Loop(i) => params[self.n_column_params() + i],
        }
    }

    /// Signature matrix for a parameter point.
    pub fn instantiate(&self, params: &[f64]) -> Result<SignatureMatrix> {
        if params.len() != self.n_params() {
            return Err(Error::DimensionMismatch { expected: self.n_params(), got: params.len() });
        }
        let triplets = self.binding.iter().map(|&((n, k), b)| (n, k, self.angle(b, params)));
        SignatureMatrix::from_triplets(self.graph.n_code(), self.graph.n_data(), triplets)
    }

    /// Parameter point of a matrix on this graph, after canonicalizing it.
    pub fn extract(&self, s: &SignatureMatrix) -> Result<Vec<f64>> {
        if s.graph()? != self.graph {
            return Err(Error::InvalidMatrix("matrix support differs from the graph".into()));
        }
        let c = s.canonicalize(&self.phi)?;
        let mut params = vec![0.0; self.n_params()];
        for &((n, k), b) in &self.binding {
            let theta = c.get(n, k).theta().unwrap();
            match b {
                Binding::Column(0) => {}
                Binding::Column(k) => params[k - 1] = theta,
                Binding::Loop(i) => params[self.n_column_params() + i] = theta,
            }
        }
        Ok(params)
    }
}

/// Search settings.
#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    /// Total number of objective evaluations.
    pub budget: usize,
    pub seed: u64,
    /// Number of grid points refined by pattern search.
    pub starts: usize,
    /// Matrices on the same graph used as extra starting points.
    pub warm_starts: Vec<SignatureMatrix>,
}

impl OptimizeOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        OptimizeOptions { budget, seed, starts: 8, warm_starts: Vec::new() }
    }
}

/// Default evaluation budget for a family with `free` angles.
pub fn default_budget(free: usize) -> usize {
    if free <= 5 {
        200_000
    } else {
        2_000_000
    }
}

/// Evaluation count and the best-so-far trace as `(evaluations, d_min)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchLog {
    pub evaluations: usize,
    pub trace: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub matrix: SignatureMatrix,
    pub d_min: f64,
    pub params: Vec<f64>,
    pub log: SearchLog,
}

/// Maximize the minimum distance over the canonical family of `g`.
pub fn optimize(g: &FactorGraph, budget: usize, seed: u64) -> Result<DesignResult> {
    optimize_with(g, &OptimizeOptions::new(budget, seed))
}

pub fn optimize_with(g: &FactorGraph, opts: &OptimizeOptions) -> Result<DesignResult> {
    let p = parameterize(g)?;
    if g.n_data() > DEFAULT_ENUMERATION_CAP {
        return Err(Error::EnumerationCap { users: g.n_data(), cap: DEFAULT_ENUMERATION_CAP });
    }
    if opts.budget == 0 {
        return Err(Error::InvalidArgument("evaluation budget must be positive".into()));
    }
    let objective = |x: &[f64]| -> f64 { min_distance(&p.instantiate(x).expect("parameter length")).expect("within cap").d_min };
    let dim = p.n_params();
    let mut log = SearchLog { evaluations: 0, trace: Vec::new() };
    let record = |log: &mut SearchLog, evals: usize, value: f64| {
        log.evaluations += evals;
        if log.trace.last().map_or(true, |&(_, b)| value > b) {
            log.trace.push((log.evaluations, value));
        }
    };

    let warm: Vec<Vec<f64>> = opts.warm_starts.iter().map(|s| p.extract(s)).collect::<Result<_>>()?;
    if dim == 0 {
        let x = Vec::new();
        let v = objective(&x);
        record(&mut log, 1, v);
        return finish(&p, x, log);
    }

    // Phase 1: random subsample of the coarse grid.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let cells: Vec<usize> = (0..dim).map(|i| if i < p.n_column_params() { 30 } else { 120 }).collect();
    let grid_size = cells.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
    let sample_budget = (opts.budget / 2).max(1);
    let points: Vec<Vec<f64>> = match grid_size {
        Some(size) if size <= sample_budget => (0..size)
            .map(|mut code| {
                cells
                    .iter()
                    .map(|&c| {
                        let v = (code % c) as f64 * GRID_STEP;
                        code /= c;
                        v
                    })
                    .collect()
            })
            .collect(),
        _ => (0..sample_budget).map(|_| cells.iter().map(|&c| rng.random_range(0..c) as f64 * GRID_STEP).collect()).collect(),
    };
    let values: Vec<f64> = points.par_iter().map(|x| objective(x)).collect();
    let mut grid_best = f64::NEG_INFINITY;
    for &v in &values {
        grid_best = grid_best.max(v);
        record(&mut log, 1, grid_best);
    }

    // Phase 2: pattern search from warm starts and the best grid points.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut starts: Vec<(Vec<f64>, f64)> = warm.into_iter().map(|x| {
        let v = objective(&x);
        (x, v)
    }).collect();
    record(&mut log, starts.len(), starts.iter().map(|s| s.1).fold(grid_best, f64::max));
    for &i in order.iter() {
        if starts.len() >= opts.starts + opts.warm_starts.len() {
            break;
        }
        if starts.iter().any(|(x, _)| torus_dist(x, &points[i]) < 1e-12) {
            continue;
        }
        starts.push((points[i].clone(), values[i]));
    }
    let remaining = opts.budget.saturating_sub(log.evaluations);
    let per_start = (remaining / starts.len().max(1)).max(1);
    let refined: Vec<(Vec<f64>, f64, usize)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, (x, v))| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64 + 1);
            pattern_search(&objective, x.clone(), *v, per_start, &mut rng)
        })
        .collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (x, v, evals) in refined {
        if best.as_ref().map_or(true, |b| v > b.1) {
            best = Some((x, v));
        }
        let running = best.as_ref().unwrap().1.max(grid_best);
        record(&mut log, evals, running);
    }
    let (x, _) = best.unwrap();
    finish(&p, x, log)
}

fn finish(p: &Parameterization, x: Vec<f64>, log: SearchLog) -> Result<DesignResult> {
    let raw = p.instantiate(&x)?;
    let matrix = raw.canonicalize(p.phi())?;
    let d_min = min_distance(&matrix)?.d_min;
    let params = p.extract(&matrix)?;
    Ok(DesignResult { matrix, d_min, params, log })
}

fn torus_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(TAU);
            d.min(TAU - d)
        })
        .fold(0.0, f64::max)
}

/// Derivative-free compass search with extra random directions.
///
/// Moves to the first improving poll point; halves the step when none improves.
fn pattern_search(f: &(impl Fn(&[f64]) -> f64 + Sync), mut x: Vec<f64>, mut fx: f64, budget: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64, usize) {
    let dim = x.len();
    let mut step = GRID_STEP;
    let mut evals = 0;
    let mut trial = vec![0.0; dim];
    while step >= MIN_STEP && evals < budget {
        let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2 * dim + 4);
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut d = vec![0.0; dim];
                d[i] = s;
                dirs.push(d);
            }
        }
        for _ in 0..2 {
            let mut d: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            d.iter_mut().for_each(|v| *v /= norm);
            dirs.push(d.iter().map(|v| -v).collect());
            dirs.push(d);
        }
        let mut moved = false;
        for d in &dirs {
            if evals >= budget {
                break;
            }
            for i in 0..dim {
                trial[i] = (x[i] + step * d[i]).rem_euclid(TAU);
            }
            let v = f(&trial);
            evals += 1;
            if v > fx + 1e-15 {
                x.copy_from_slice(&trial);
                fx = v;
                moved = true;
                break;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    (x, fx, evals)
}

/// Angle as a multiple of π, rounded to 4 decimals.
pub fn pi_multiple(theta: f64) -> f64 {
    (theta.rem_euclid(TAU) / PI * 1e4).round() / 1e4
}

/// A matrix row by row with phases written as multiples of π.
pub fn format_angles(s: &SignatureMatrix) -> String {
    let mut out = String::new();
    for n in 0..s.n_rows() {
        let row: Vec<String> = (0..s.n_cols())
            .map(|k| match s.get(n, k).theta() {
                None => "0".to_string(),
                Some(t) => format!("e^{{i{:.4}π}}", pi_multiple(t)),
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Bidiagonal tree code on `K-1` resources with `[1, e^{iπ/6}]` rows.
pub fn tree_code(k: usize) -> Result<SignatureMatrix> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("tree code needs at least 2 users, got {k}")));
    }
    let phase = |c: usize| if c % 2 == 0 { 0.0 } else { FRAC_PI_6 };
    let triplets = (0..k - 1).flat_map(|n| [(n, n, phase(n)), (n, n + 1, phase(n + 1))]);
    SignatureMatrix::from_triplets(k - 1, k, triplets)
}

/// `q x q` permutation given as `perm[r] = c` for the one in row `r`.
pub type Permutation = Vec<usize>;

/// The cyclic shift with ones at `(0, q-1)` and `(r, r-1)`.
pub fn cyclic_permutation(q: usize) -> Permutation {
    (0..q).map(|r| if r == 0 { q - 1 } else { r - 1 }).collect()
}

pub fn identity_permutation(q: usize) -> Permutation {
    (0..q).collect()
}

fn check_permutation(p: &Permutation, q: usize) -> Result<()> {
    let mut seen = vec![false; q];
    if p.len() != q || p.iter().any(|&c| c >= q || std::mem::replace(&mut seen[c], true)) {
        return Err(Error::InvalidArgument(format!("{p:?} is not a permutation of 0..{q}")));
    }
    Ok(())
}

fn check_vectors(name: &str, v: &[Vec<f64>], count: usize, q: usize, limit: f64) -> Result<()> {
    if v.len() != count {
        return Err(Error::InvalidArgument(format!("expected {count} {name} vectors, got {}", v.len())));
    }
    for (i, vi) in v.iter().enumerate() {
        if vi.len() != q {
            return Err(Error::InvalidArgument(format!("{name}[{i}] has length {}, expected {q}", vi.len())));
        }
        if let Some(t) = vi.iter().find(|&&t| !(t >= 0.0 && t < limit)) {
            return Err(Error::InvalidArgument(format!("{name}[{i}] angle {t} outside [0, {limit})")));
        }
    }
    Ok(())
}

fn lead_or_zero(lead: Option<&[f64]>, q: usize) -> Result<Vec<f64>> {
    let lead = lead.map_or_else(|| vec![0.0; q], <[f64]>::to_vec);
    check_vectors("lead", std::slice::from_ref(&lead), 1, q, TAU)?;
    Ok(lead)
}

/// Place `perm` scaled by column phases at block `(br, bc)`.
fn push_block(t: &mut Vec<(usize, usize, f64)>, q: usize, br: usize, bc: usize, perm: &[usize], phases: &[f64]) {
    for (r, &c) in perm.iter().enumerate() {
        t.push((br * q + r, bc * q + c, phases[c]));
    }
}

/// `Kq` users on `(K-1)q` resources with a single long cycle.
///
/// Block row 0 is `[D(lead), D(v_1), 0, ..., D(v_{K-1}) P]` and block row `j`
/// holds `D(v_j), D(v_{j+1})`, the last one ending in `D(v_K)`. `lead`
/// defaults to all zeros; `v_K` must agree with `v_{K-1}` except in its
/// last angle.
pub fn construction_1(k: usize, q: usize, v: &[Vec<f64>], lead: Option<&[f64]>) -> Result<SignatureMatrix> {
    if k < 3 || q < 1 {
        return Err(Error::InvalidArgument(format!("construction 1 needs K >= 3 and q >= 1, got K={k}, q={q}")));
    }
    if v.len() != k {
        return Err(Error::InvalidArgument(format!("expected {k} phase vectors, got {}", v.len())));
    }
    check_vectors("v", &v[..k - 1], k - 1, q, FRAC_PI_2)?;
    check_vectors("v_K", &v[k - 1..], 1, q, TAU)?;
    if (0..q - 1).any(|j| (v[k - 1][j] - v[k - 2][j]).abs() > PHASE_TOL) {
        return Err(Error::InvalidArgument("v_K must equal v_{K-1} except in its last angle".into()));
    }
    let lead = lead_or_zero(lead, q)?;
    let id = identity_permutation(q);
    let mut t = Vec::new();
    push_block(&mut t, q, 0, 0, &id, &lead);
    for j in 1..k - 1 {
        push_block(&mut t, q, j - 1, j, &id, &v[j - 1]);
        push_block(&mut t, q, j, j, &id, &v[j - 1]);
    }
    push_block(&mut t, q, 0, k - 1, &cyclic_permutation(q), &v[k - 2]);
    push_block(&mut t, q, k - 2, k - 1, &id, &v[k - 1]);
    SignatureMatrix::from_triplets((k - 1) * q, k * q, t)
}

/// Permutation blocks of construction 2, one `[P_1, P_2, P_3]` per block row.
pub fn default_construction_2_blocks(k: usize, q: usize) -> Vec<[Permutation; 3]> {
    let id = identity_permutation(q);
    (0..k.saturating_sub(2))
        .map(|r| {
            let middle = if r == 1 { cyclic_permutation(q) } else { id.clone() };
            [id.clone(), middle, id.clone()]
        })
        .collect()
}

/// `Kq` users on `(K-2)q` resources, three blocks per block row.
///
/// Block row `r` covers block columns `r, r+1, r+2`. Block column `j >= 1`
/// carries `v_j` except in block row `j - 1` (for `j >= 2`), which carries
/// `w_{j-1}` instead; block column 0 carries `lead`.
pub fn construction_2(k: usize, q: usize, v: &[Vec<f64>], w: &[Vec<f64>], blocks: Option<&[[Permutation; 3]]>, lead: Option<&[f64]>) -> Result<SignatureMatrix> {
    if k < 4 || q < 1 {
        return Err(Error::InvalidArgument(format!("construction 2 needs K >= 4 and q >= 1, got K={k}, q={q}")));
    }
    check_vectors("v", v, k - 1, q, FRAC_PI_2)?;
    check_vectors("w", w, k - 3, q, TAU)?;
    let lead = lead_or_zero(lead, q)?;
    let blocks = blocks.map_or_else(|| default_construction_2_blocks(k, q), <[_]>::to_vec);
    if blocks.len() != k - 2 {
        return Err(Error::InvalidArgument(format!("expected {} block rows of permutations, got {}", k - 2, blocks.len())));
    }
    for row in &blocks {
        for p in row {
            check_permutation(p, q)?;
        }
    }
    let mut t = Vec::new();
    for (r, row) in blocks.iter().enumerate() {
        let first: &[f64] = if r == 0 { &lead } else { &v[r - 1] };
        let middle: &[f64] = if r == 0 { &v[0] } else { &w[r - 1] };
        push_block(&mut t, q, r, r, &row[0], first);
        push_block(&mut t, q, r, r + 1, &row[1], middle);
        push_block(&mut t, q, r, r + 2, &row[2], &v[r + 1]);
    }
    SignatureMatrix::from_triplets((k - 2) * q, k * q, t)
}

/// Single-resource graph with `k` users.
pub fn single_resource_graph(k: usize) -> Result<FactorGraph> {
    FactorGraph::new(1, k, (0..k).map(|c| (0, c)))
}

/// Leading-edge phase set used by the π/3-spaced labelings.
pub const LATIN_PHASES: [f64; 3] = [0.0, FRAC_PI_6, FRAC_PI_3];

/// Every labeling of `g` whose rows are permutations of `phases` and whose
/// columns have pairwise distinct entries.
///
/// Requires every code node to have degree `phases.len()`.
pub fn latin_labelings(g: &FactorGraph, phases: &[f64]) -> Result<Vec<SignatureMatrix>> {
    let q = phases.len();
    if g.code_regular_degree() != Some(q) {
        return Err(Error::InvalidArgument(format!("graph is not code-node regular of degree {q}")));
    }
    let perms = permutations(q);
    let n = g.n_code();
    let total = perms.len().pow(n as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut entries = vec![PhaseEntry::Zero; n * g.n_data()];
        let mut labels: Vec<Vec<usize>> = vec![Vec::new(); g.n_data()];
        for row in 0..n {
            let p = &perms[code % perms.len()];
            code /= perms.len();
            for (slot, &k) in g.code_neighbors(row).iter().enumerate() {
                entries[row * g.n_data() + k] = PhaseEntry::phase(phases[p[slot]]);
                labels[k].push(p[slot]);
            }
        }
        let latin = labels.iter().all(|l| {
            let mut l = l.clone();
            l.sort_unstable();
            l.windows(2).all(|w| w[0] != w[1])
        });
        if latin {
            out.push(SignatureMatrix::new(n, g.n_data(), entries)?);
        }
    }
    Ok(out)
}

fn permutations(q: usize) -> Vec<Vec<usize>> {
    if q == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(q - 1) {
        for pos in 0..=p.len() {
            let mut r = p.clone();
            r.insert(pos, q - 1);
            out.push(r);
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::upper_bound_spreading;
    use crate::presets;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fig2_family_shape() {
        let g = presets::fig2_optimal().graph().unwrap();
        let p = parameterize(&g).unwrap();
        assert_eq!((p.n_column_params(), p.n_loop_params()), (5, 3));
        assert_eq!(p.phi().edges(), &[(2, 3), (3, 4), (3, 5)]);
    }

    #[test]
    fn tree_family_shape() {
        for k in 2..7 {
            let g = tree_code(k).unwrap().graph().unwrap();
            let p = parameterize(&g).unwrap();
            assert_eq!((p.n_column_params(), p.n_loop_params()), (k - 1, 0));
        }
        let p = parameterize(&single_resource_graph(4).unwrap()).unwrap();
        assert_eq!(p.n_params(), 3);
    }

    #[test]
    fn example5_family_shape() {
        let p = parameterize(&presets::example5().graph().unwrap()).unwrap();
        assert_eq!((p.n_column_params(), p.n_loop_params()), (7, 1));
    }

    #[test]
    fn parameterize_rejects() {
        let disconnected = FactorGraph::new(2, 2, [(0, 0), (1, 1)]).unwrap();
        assert_eq!(parameterize(&disconnected).unwrap_err(), Error::Disconnected);
        let square = FactorGraph::new(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        assert_eq!(parameterize(&square).unwrap_err(), Error::FourCycle);
    }

    #[test]
    fn instantiate_keeps_graph() {
        let g = presets::fig2_optimal().graph().unwrap();
        let p = parameterize(&g).unwrap();
        let x: Vec<f64> = (0..p.n_params()).map(|i| 0.37 * i as f64 + 0.1).collect();
        assert_eq!(p.instantiate(&x).unwrap().graph().unwrap(), g);
        assert!(p.instantiate(&x[1..]).is_err());
    }

    #[test]
    fn extract_round_trip() {
        let s = presets::fig2_optimal();
        let p = parameterize(&s.graph().unwrap()).unwrap();
        let x = p.extract(&s).unwrap();
        assert!(p.instantiate(&x).unwrap().approx_eq(&s, 1e-9));
    }

    #[test]
    fn two_user_search() {
        let r = optimize(&single_resource_graph(2).unwrap(), 2_000, 1).unwrap();
        assert!(close(r.d_min, 3f64.sqrt() - 1.0, 1e-6), "{}", r.d_min);
        let t = r.params[0];
        assert!(close(t, FRAC_PI_6, 1e-4) || close(t, FRAC_PI_2 - FRAC_PI_6, 1e-4), "{t}");
    }

    #[test]
    fn search_is_reproducible() {
        let g = single_resource_graph(3).unwrap();
        let a = optimize(&g, 3_000, 42).unwrap();
        let b = optimize(&g, 3_000, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.log.evaluations, b.log.evaluations);
        assert!(a.log.evaluations <= 3_000 + 1);
    }

    #[test]
    fn result_is_consistent() {
        let r = optimize(&tree_code(3).unwrap().graph().unwrap(), 4_000, 3).unwrap();
        assert!(close(min_distance(&r.matrix).unwrap().d_min, r.d_min, 1e-12));
        assert!(r.d_min <= upper_bound_spreading(&r.matrix) + 1e-12);
        assert!(r.matrix.get(0, 0).theta() == Some(0.0));
    }

    #[test]
    fn warm_start_never_regresses() {
        let s = presets::example3();
        let mut opts = OptimizeOptions::new(300, 5);
        opts.warm_starts.push(s.clone());
        let r = optimize_with(&s.graph().unwrap(), &opts).unwrap();
        assert!(r.d_min >= min_distance(&s).unwrap().d_min - 1e-12);
    }

    #[test]
    fn tree_code_layout() {
        let s = tree_code(2).unwrap();
        assert!(s.approx_eq(&SignatureMatrix::from_angles(&[vec![Some(0.0), Some(FRAC_PI_6)]]).unwrap(), 1e-15));
        let s = tree_code(4).unwrap();
        assert_eq!(s.n_rows(), 3);
        assert_eq!(s.get(1, 1).theta(), Some(FRAC_PI_6));
        assert_eq!(s.get(1, 2).theta(), Some(0.0));
        assert!(s.get(1, 0).is_zero());
        assert!(tree_code(1).is_err());
    }

    #[test]
    fn tree_code_distances() {
        let d3 = min_distance(&tree_code(3).unwrap()).unwrap().d_min;
        assert!(close(d3, SQRT_2 * (3f64.sqrt() - 1.0), 1e-12));
        for k in 2..=7 {
            let d = min_distance(&tree_code(k).unwrap()).unwrap().d_min;
            let expect = (((k - 1) as f64).sqrt() * (3f64.sqrt() - 1.0)).min(SQRT_2);
            assert!(close(d, expect, 1e-12), "K={k}: {d}");
        }
    }

    use std::f64::consts::SQRT_2;

    #[test]
    fn construction_1_shape() {
        for (k, q) in [(3, 2), (4, 2), (3, 3), (5, 2)] {
            let v: Vec<Vec<f64>> = (0..k).map(|i| (0..q).map(|j| 0.1 * (i + j) as f64).collect()).collect();
            let mut v = v;
            v[k - 1] = v[k - 2].clone();
            let s = construction_1(k, q, &v, None).unwrap();
            assert_eq!((s.n_rows(), s.n_cols()), ((k - 1) * q, k * q));
            assert!(close(s.load(), k as f64 / (k - 1) as f64, 1e-15));
            let g = s.graph().unwrap();
            let len = 2 * (k - 1) * q;
            assert_eq!(g.count_cycles(len).unwrap(), 1);
            for l in (4..len).step_by(2) {
                assert_eq!(g.count_cycles(l).unwrap(), 0, "K={k} q={q} length {l}");
            }
        }
    }

    #[test]
    fn construction_1_rejects() {
        let v = vec![vec![0.1, 0.2]; 3];
        assert!(construction_1(2, 2, &v[..2], None).is_err());
        let mut bad = v.clone();
        bad[0][0] = 2.0;
        assert!(construction_1(3, 2, &bad, None).is_err());
        let mut bad = v.clone();
        bad[2][0] = 0.3;
        assert!(construction_1(3, 2, &bad, None).is_err());
        let mut ok = v.clone();
        ok[2][1] = 4.0;
        assert!(construction_1(3, 2, &ok, None).is_ok());
    }

    #[test]
    fn construction_2_shape() {
        let k = 4;
        let q = 2;
        let v = vec![vec![0.1, 0.2]; k - 1];
        let w = vec![vec![0.3, 3.0]; k - 3];
        let s = construction_2(k, q, &v, &w, None, None).unwrap();
        assert_eq!((s.n_rows(), s.n_cols()), (4, 8));
        assert!(close(s.load(), 2.0, 1e-15));
        let g = s.graph().unwrap();
        assert_eq!(g.count_cycles(4).unwrap(), 0);
        assert_eq!(g.count_cycles(6).unwrap(), 0);
        assert_eq!(g.count_cycles(8).unwrap(), 1);
        let bad = vec![[vec![0, 0], vec![0, 1], vec![0, 1]], [vec![0, 1], vec![1, 0], vec![0, 1]]];
        assert!(construction_2(k, q, &v, &w, Some(&bad), None).is_err());
        assert!(construction_2(3, q, &v, &w, None, None).is_err());
        assert!(construction_2(k, q, &v, &[], None, None).is_err());
    }

    #[test]
    fn permutation_helpers() {
        assert_eq!(cyclic_permutation(3), vec![2, 0, 1]);
        assert_eq!(cyclic_permutation(1), vec![0]);
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn angle_formatting() {
        assert_eq!(pi_multiple(0.1431 * PI + 1e-7), 0.1431);
        assert_eq!(pi_multiple(-FRAC_PI_2), 1.5);
        let text = format_angles(&tree_code(2).unwrap());
        assert_eq!(text.trim(), "e^{i0.0000π} e^{i0.1667π}");
    }

    #[test]
    fn latin_labelings_are_latin() {
        let g = presets::fig2_optimal().graph().unwrap();
        let all = latin_labelings(&g, &LATIN_PHASES).unwrap();
        assert!(!all.is_empty() && all.len() < 6usize.pow(4));
        for s in &all {
            for k in 0..6 {
                let col: Vec<f64> = (0..4).filter_map(|n| s.get(n, k).theta()).collect();
                assert_eq!(col.len(), 2);
                assert!((col[0] - col[1]).abs() > 1e-9);
            }
        }
    }
}
