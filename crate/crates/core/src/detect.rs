//! Multiuser detectors: exhaustive ML, belief propagation on the factor
//! graph, its Gaussian-interference approximation, and brute-force
//! marginals used to check them.
//!
//! Every detector first divides by the channel gain, working with
//! `y' = y / h` and `N0' = N0 / |h|²`. Likelihood prefactors such as
//! `1 / (π N0)` cancel under normalization and are dropped.

use crate::constellation::Symbol;
use crate::distance::DEFAULT_ENUMERATION_CAP;
use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::signature::SignatureMatrix;
use num_complex::Complex64;
use rand::Rng;

/// Posterior or message over the four QPSK symbols, indexed by `Symbol::index`.
pub type Prob4 = [f64; 4];

const UNIFORM: Prob4 = [0.25; 4];
const TIE_TOL: f64 = 1e-12;
// keeps likelihoods finite in the noiseless limit
const MIN_N0: f64 = 1e-300;

/// Received samples with the channel gain and noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: Vec<Complex64>,
    pub h: Complex64,
    /// Total complex noise variance per sample.
    pub n0: f64,
}

impl Observation {
    /// `n0 = 0` is accepted as the noiseless limit.
    pub fn new(y: Vec<Complex64>, h: Complex64, n0: f64) -> Result<Self> {
        if !(n0 >= 0.0) || !n0.is_finite() {
            return Err(Error::InvalidArgument(format!("noise variance must be nonnegative, got {n0}")));
        }
        if h.norm_sqr() == 0.0 || !h.is_finite() {
            return Err(Error::InvalidArgument("channel gain must be nonzero".into()));
        }
        Ok(Observation { y, h, n0 })
    }

    /// `(y / h, N0 / |h|²)`.
    pub fn equalized(&self) -> (Vec<Complex64>, f64) {
        (self.y.iter().map(|&v| v / self.h).collect(), self.n0 / self.h.norm_sqr())
    }

    fn check(&self, s: &SignatureMatrix) -> Result<()> {
        if self.y.len() != s.n_rows() {
            return Err(Error::DimensionMismatch { expected: s.n_rows(), got: self.y.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub symbols: Vec<Symbol>,
    pub posteriors: Option<Vec<Prob4>>,
    /// Set when some choice was made between equally good candidates.
    pub tie: bool,
}

fn check_cap(s: &SignatureMatrix) -> Result<()> {
    if s.n_cols() > DEFAULT_ENUMERATION_CAP {
        return Err(Error::EnumerationCap { users: s.n_cols(), cap: DEFAULT_ENUMERATION_CAP });
    }
    Ok(())
}

/// Symbol vector with index `code` in base 4, user 0 least significant.
fn symbols_of(code: usize, k: usize) -> Vec<Symbol> {
    (0..k).map(|i| Symbol::ALL[(code >> (2 * i)) & 3]).collect()
}

/// All `4^K` codewords of a matrix, cached for repeated ML decisions.
#[derive(Debug, Clone)]
pub struct Codebook {
    users: usize,
    rows: usize,
    words: Vec<Complex64>,
}

impl Codebook {
    pub fn new(s: &SignatureMatrix) -> Result<Self> {
        check_cap(s)?;
        let (n, k) = (s.n_rows(), s.n_cols());
        let mut words = Vec::with_capacity(n << (2 * k));
        for code in 0..1usize << (2 * k) {
            words.extend(s.encode(&symbols_of(code, k))?);
        }
        Ok(Codebook { users: k, rows: n, words })
    }

    pub fn len(&self) -> usize {
        1 << (2 * self.users)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn codeword(&self, code: usize) -> &[Complex64] {
        &self.words[code * self.rows..(code + 1) * self.rows]
    }

    /// Minimum-distance decision; exact ties are resolved uniformly at random.
    pub fn detect(&self, obs: &Observation, rng: &mut impl Rng) -> Result<Decision> {
        if obs.y.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: obs.y.len() });
        }
        let (y, _) = obs.equalized();
        let dist = |code: usize| self.codeword(code).iter().zip(&y).map(|(c, v)| (v - c).norm_sqr()).sum::<f64>().sqrt();
        let mut best = f64::INFINITY;
        let mut ties: Vec<usize> = Vec::new();
        for code in 0..self.len() {
            let d = dist(code);
            if d < best - TIE_TOL {
                best = d;
                ties.clear();
                ties.push(code);
            } else if d <= best + TIE_TOL {
                ties.push(code);
                best = best.min(d);
            }
        }
        // a later, slightly smaller minimum can push earlier entries out of the window
        ties.retain(|&c| dist(c) <= best + TIE_TOL);
        let tie = ties.len() > 1;
        let pick = if tie { ties[rng.random_range(0..ties.len())] } else { ties[0] };
        Ok(Decision { symbols: symbols_of(pick, self.users), posteriors: None, tie })
    }
}

/// Exhaustive maximum-likelihood (minimum-distance) detection.
pub fn ml_detect(s: &SignatureMatrix, obs: &Observation, rng: &mut impl Rng) -> Result<Decision> {
    obs.check(s)?;
    Codebook::new(s)?.detect(obs, rng)
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Normalize log-weights to a probability vector, falling back to uniform
/// when every weight is zero.
fn normalize_logs(logs: Prob4) -> Prob4 {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return UNIFORM;
    }
    let mut p = logs.map(|l| (l - m).exp());
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// Posterior `P(x_k = α | y)` by summing the likelihood over all `4^K` inputs.
pub fn exact_marginals(s: &SignatureMatrix, obs: &Observation) -> Result<Vec<Prob4>> {
    obs.check(s)?;
    check_cap(s)?;
    let (y, n0) = obs.equalized();
    let n0 = n0.max(MIN_N0);
    let k = s.n_cols();
    let metric: Vec<f64> = (0..1usize << (2 * k))
        .map(|code| {
            let c = s.encode(&symbols_of(code, k)).unwrap();
            -c.iter().zip(&y).map(|(c, v)| (v - c).norm_sqr()).sum::<f64>() / n0
        })
        .collect();
    Ok((0..k)
        .map(|user| {
            let logs: Prob4 = std::array::from_fn(|a| log_sum_exp(metric.iter().enumerate().filter(|(c, _)| (c >> (2 * user)) & 3 == a).map(|(_, &m)| m)));
            normalize_logs(logs)
        })
        .collect())
}

/// Exact code-node update.
///
/// `coeffs[j]` is the signature entry of neighbour `j`, `incoming[j]` its
/// data-to-code message. Returns the code-to-data message for every
/// neighbour, each marginalizing the others out of
/// `exp(-|y_n - Σ_j s_j x_j|² / N0)`.
pub fn code_node_update(coeffs: &[Complex64], y: Complex64, n0: f64, incoming: &[Prob4]) -> Vec<Prob4> {
    let lik = Likelihood::new(coeffs, y, n0);
    let mut out = vec![UNIFORM; coeffs.len()];
    lik.messages(incoming, &mut out);
    out
}

/// Channel term of one code node over every joint input of its neighbours,
/// both as log-weights and scaled so the largest weight is 1.
#[derive(Debug, Clone)]
struct Likelihood {
    degree: usize,
    fit: Vec<f64>,
    scaled: Vec<f64>,
}

/// Below this total the scaled sums may have lost terms to underflow.
const UNDERFLOW: f64 = 1e-250;

impl Likelihood {
    fn new(coeffs: &[Complex64], y: Complex64, n0: f64) -> Self {
        let d = coeffs.len();
        let n0 = n0.max(MIN_N0);
        let alphabet = Symbol::ALL.map(Symbol::value);
        let fit: Vec<f64> = (0..1usize << (2 * d))
            .map(|code| {
                let sum: Complex64 = (0..d).map(|j| coeffs[j] * alphabet[(code >> (2 * j)) & 3]).sum();
                -(y - sum).norm_sqr() / n0
            })
            .collect();
        let top = fit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scaled = fit.iter().map(|f| (f - top).exp()).collect();
        Likelihood { degree: d, fit, scaled }
    }

    fn messages(&self, incoming: &[Prob4], out: &mut [Prob4]) {
        for t in 0..self.degree {
            let mut acc = [0.0; 4];
            for (code, &l) in self.scaled.iter().enumerate() {
                let mut w = l;
                for (j, p) in incoming.iter().enumerate() {
                    if j != t {
                        w *= p[(code >> (2 * j)) & 3];
                    }
                }
                acc[(code >> (2 * t)) & 3] += w;
            }
            let total: f64 = acc.iter().sum();
            out[t] = if total > UNDERFLOW && total.is_finite() { acc.map(|v| v / total) } else { self.log_message(incoming, t) };
        }
    }

    fn log_message(&self, incoming: &[Prob4], t: usize) -> Prob4 {
        let log_in: Vec<Prob4> = incoming.iter().map(|p| p.map(f64::ln)).collect();
        let mut logs = [f64::NEG_INFINITY; 4];
        for (a, slot) in logs.iter_mut().enumerate() {
            let terms = (0..self.fit.len()).filter(|code| (code >> (2 * t)) & 3 == a).map(|code| {
                self.fit[code] + (0..self.degree).filter(|&j| j != t).map(|j| log_in[j][(code >> (2 * j)) & 3]).sum::<f64>()
            });
            *slot = log_sum_exp(terms);
        }
        normalize_logs(logs)
    }
}

/// Gaussian-interference code-node update.
///
/// Interference on neighbour `k` is modelled as `CN(μ_k, N_k - N0)` with
/// `μ_k = Σ_{j≠k} s_j E[x_j]` and `N_k = Σ_{j≠k} (1 - |E[x_j]|²) + N0`.
pub fn gaussian_code_node_update(coeffs: &[Complex64], y: Complex64, n0: f64, incoming: &[Prob4]) -> Vec<Prob4> {
    let alphabet = Symbol::ALL.map(Symbol::value);
    let means: Vec<Complex64> = incoming.iter().map(|p| (0..4).map(|a| alphabet[a] * p[a]).sum()).collect();
    let total_mean: Complex64 = coeffs.iter().zip(&means).map(|(s, m)| s * m).sum();
    let total_var: f64 = means.iter().map(|m| 1.0 - m.norm_sqr()).sum();
    (0..coeffs.len())
        .map(|k| {
            let mu = total_mean - coeffs[k] * means[k];
            let var = (total_var - (1.0 - means[k].norm_sqr())).max(0.0) + n0;
            let var = var.max(MIN_N0);
            normalize_logs(std::array::from_fn(|a| -(y - coeffs[k] * alphabet[a] - mu).norm_sqr() / var))
        })
        .collect()
}

/// Data-node update: for each neighbour, the product of all other incoming
/// messages. Also returns the full product, the user's posterior.
pub fn data_node_update(incoming: &[Prob4]) -> (Vec<Prob4>, Prob4) {
    let product_except = |skip: Option<usize>| -> Prob4 {
        let mut p = [1.0; 4];
        for (j, m) in incoming.iter().enumerate() {
            if Some(j) != skip {
                p.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
            }
        }
        let total: f64 = p.iter().sum();
        if total > UNDERFLOW && total.is_finite() {
            return p.map(|v| v / total);
        }
        let logs: Prob4 = std::array::from_fn(|a| incoming.iter().enumerate().filter(|&(j, _)| Some(j) != skip).map(|(_, m)| m[a].ln()).sum());
        normalize_logs(logs)
    };
    let out = (0..incoming.len()).map(|t| product_except(Some(t))).collect();
    (out, product_except(None))
}

/// Code-node rule used by [`BpDetector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRule {
    Exact,
    Gaussian,
}

/// Messages on every edge in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    edges: Vec<Edge>,
    to_code: Vec<Prob4>,
    to_data: Vec<Prob4>,
}

impl BeliefState {
    fn uniform(edges: &[Edge]) -> Self {
        BeliefState { edges: edges.to_vec(), to_code: vec![UNIFORM; edges.len()], to_data: vec![UNIFORM; edges.len()] }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    fn index(&self, e: Edge) -> Option<usize> {
        self.edges.binary_search(&e).ok()
    }

    /// Message from data node `k` to code node `n`.
    pub fn data_to_code(&self, n: usize, k: usize) -> Option<Prob4> {
        self.index((n, k)).map(|i| self.to_code[i])
    }

    /// Message from code node `n` to data node `k`.
    pub fn code_to_data(&self, n: usize, k: usize) -> Option<Prob4> {
        self.index((n, k)).map(|i| self.to_data[i])
    }

    /// Every stored message in either direction.
    pub fn messages(&self) -> impl Iterator<Item = &Prob4> {
        self.to_code.iter().chain(&self.to_data)
    }
}

/// Flooding message passing, one iteration at a time.
#[derive(Debug, Clone)]
pub struct BpDetector {
    coeffs: Vec<Vec<Complex64>>,
    y: Vec<Complex64>,
    n0: f64,
    rule: NodeRule,
    state: BeliefState,
    iterations: usize,
    /// Edge indices around each code node and each data node.
    code_edges: Vec<Vec<usize>>,
    data_edges: Vec<Vec<usize>>,
    likelihoods: Vec<Likelihood>,
}

impl BpDetector {
    pub fn new(s: &SignatureMatrix, obs: &Observation, rule: NodeRule) -> Result<Self> {
        obs.check(s)?;
        let graph = s.graph()?;
        let coeffs: Vec<Vec<Complex64>> = (0..s.n_rows()).map(|n| graph.code_neighbors(n).iter().map(|&k| s.value(n, k)).collect()).collect();
        let (y, n0) = obs.equalized();
        let state = BeliefState::uniform(graph.edges());
        let code_edges = (0..graph.n_code()).map(|n| graph.code_neighbors(n).iter().map(|&k| state.index((n, k)).unwrap()).collect()).collect();
        let data_edges = (0..graph.n_data()).map(|k| graph.data_neighbors(k).iter().map(|&n| state.index((n, k)).unwrap()).collect()).collect();
        let likelihoods = match rule {
            NodeRule::Exact => coeffs.iter().zip(&y).map(|(c, &v)| Likelihood::new(c, v, n0)).collect(),
            NodeRule::Gaussian => Vec::new(),
        };
        Ok(BpDetector { coeffs, y, n0, rule, state, iterations: 0, code_edges, data_edges, likelihoods })
    }

    pub fn state(&self) -> &BeliefState {
        &self.state
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Code-node half-iteration; reads only data-to-code messages.
    pub fn update_code_nodes(&mut self) {
        let mut incoming = Vec::new();
        let mut out = Vec::new();
        for (n, idx) in self.code_edges.iter().enumerate() {
            incoming.clear();
            incoming.extend(idx.iter().map(|&i| self.state.to_code[i]));
            match self.rule {
                NodeRule::Exact => {
                    out.resize(idx.len(), UNIFORM);
                    self.likelihoods[n].messages(&incoming, &mut out);
                }
                NodeRule::Gaussian => out = gaussian_code_node_update(&self.coeffs[n], self.y[n], self.n0, &incoming),
            }
            for (&i, m) in idx.iter().zip(&out) {
                self.state.to_data[i] = *m;
            }
        }
    }

    /// Data-node half-iteration; reads only code-to-data messages.
    pub fn update_data_nodes(&mut self) {
        for idx in &self.data_edges {
            let incoming: Vec<Prob4> = idx.iter().map(|&i| self.state.to_data[i]).collect();
            let (out, _) = data_node_update(&incoming);
            for (&i, m) in idx.iter().zip(out) {
                self.state.to_code[i] = m;
            }
        }
    }

    pub fn iterate(&mut self) {
        self.update_code_nodes();
        self.update_data_nodes();
        self.iterations += 1;
    }

    /// Product of each user's incoming code-to-data messages.
    pub fn posteriors(&self) -> Vec<Prob4> {
        self.data_edges.iter().map(|idx| data_node_update(&idx.iter().map(|&i| self.state.to_data[i]).collect::<Vec<_>>()).1).collect()
    }

    /// Most probable symbol per user, lowest index on ties.
    pub fn decide(&self) -> Decision {
        let post = self.posteriors();
        let mut tie = false;
        let symbols = post
            .iter()
            .map(|p| {
                let best = (0..4).fold(0, |b, a| if p[a] > p[b] { a } else { b });
                tie |= (0..4).any(|a| a != best && (p[best] - p[a]).abs() <= TIE_TOL);
                Symbol::ALL[best]
            })
            .collect();
        Decision { symbols, posteriors: Some(post), tie }
    }
}

fn run_bp(s: &SignatureMatrix, obs: &Observation, iterations: usize, rule: NodeRule) -> Result<Decision> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("need at least one iteration".into()));
    }
    let mut bp = BpDetector::new(s, obs, rule)?;
    for _ in 0..iterations {
        bp.iterate();
    }
    Ok(bp.decide())
}

/// Belief propagation with `iterations` flooding rounds.
pub fn bp_detect(s: &SignatureMatrix, obs: &Observation, iterations: usize) -> Result<Decision> {
    run_bp(s, obs, iterations, NodeRule::Exact)
}

/// Belief propagation with Gaussian-approximated interference.
pub fn abp_detect(s: &SignatureMatrix, obs: &Observation, iterations: usize) -> Result<Decision> {
    run_bp(s, obs, iterations, NodeRule::Gaussian)
}
