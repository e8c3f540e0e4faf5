//! Seeded AWGN Monte-Carlo word-error-rate simulation.

use crate::constellation::Symbol;
use crate::detect::{abp_detect, bp_detect, Codebook, Decision, Observation};
use crate::distance::{distance_enumerator, union_bound, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::signature::SignatureMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;

/// Trials per parallel batch; early stopping is checked between batches.
pub const BATCH: u64 = 2048;

/// `y = h S x + z` with `z_n ~ CN(0, N0)`.
pub fn transmit(s: &SignatureMatrix, x: &[Symbol], h: Complex64, n0: f64, rng: &mut impl Rng) -> Result<Observation> {
    if !(n0 >= 0.0) || !n0.is_finite() {
        return Err(Error::InvalidArgument(format!("noise variance must be nonnegative, got {n0}")));
    }
    let c = s.encode(x)?;
    let y = if n0 == 0.0 {
        c.into_iter().map(|v| h * v).collect()
    } else {
        let normal = Normal::new(0.0, (n0 / 2.0).sqrt()).unwrap();
        c.into_iter().map(|v| h * v + Complex64::new(normal.sample(rng), normal.sample(rng))).collect()
    };
    Observation::new(y, h, n0)
}

/// Energy per bit: total codeword energy over the `2K` bits it carries.
pub fn energy_per_bit(s: &SignatureMatrix) -> f64 {
    s.column_weights().iter().sum::<usize>() as f64 / (2 * s.n_cols()) as f64
}

/// `N0 = E_b 10^{-Eb/N0[dB] / 10}`.
pub fn eb_n0_to_n0(s: &SignatureMatrix, eb_n0_db: f64) -> f64 {
    energy_per_bit(s) * 10f64.powf(-eb_n0_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum DetectorSpec {
    Ml,
    Bp { iterations: usize },
    Abp { iterations: usize },
}

impl DetectorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorSpec::Ml => "ml",
            DetectorSpec::Bp { .. } => "bp",
            DetectorSpec::Abp { .. } => "abp",
        }
    }

    pub fn iterations(&self) -> Option<usize> {
        match *self {
            DetectorSpec::Ml => None,
            DetectorSpec::Bp { iterations } | DetectorSpec::Abp { iterations } => Some(iterations),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub detector: DetectorSpec,
    pub eb_n0_db: Vec<f64>,
    /// Trials per point.
    pub trials: u64,
    /// Stop a point once this many word errors are seen.
    pub max_word_errors: Option<u64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub eb_n0_db: f64,
    pub n0: f64,
    pub trials: u64,
    pub word_errors: u64,
    pub symbol_errors: u64,
    /// Gray-labelled bit errors.
    pub bit_errors: u64,
    /// Decisions that involved a tie.
    pub ties: u64,
}

impl SnrPoint {
    pub fn wer(&self) -> f64 {
        self.word_errors as f64 / self.trials as f64
    }

    /// Half-width of the normal-approximation 95% interval on the WER.
    pub fn wer_ci95(&self) -> f64 {
        let p = self.wer();
        1.96 * (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub matrix: SignatureMatrix,
    pub config: SimConfig,
    pub points: Vec<SnrPoint>,
    /// Union bound at each point, when the enumerator fits under the cap.
    pub union_bound: Vec<Option<f64>>,
    pub elapsed_secs: f64,
}

impl SimulationReport {
    /// CSV with columns `eb_n0_db,trials,word_errors,wer,wer_ci95,union_bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eb_n0_db,trials,word_errors,wer,wer_ci95,union_bound\n");
        for (p, ub) in self.points.iter().zip(&self.union_bound) {
            let ub = ub.map_or(String::new(), |v| format!("{v:e}"));
            writeln!(out, "{},{},{},{:e},{:e},{}", p.eb_n0_db, p.trials, p.word_errors, p.wer(), p.wer_ci95(), ub).unwrap();
        }
        out
    }
}

/// Independent generator for one trial, keyed by seed, point and trial index.
pub fn trial_rng(seed: u64, point: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 40) | trial);
    rng
}

enum Engine {
    Ml(Codebook),
    Bp(usize),
    Abp(usize),
}

impl Engine {
    fn new(s: &SignatureMatrix, d: DetectorSpec) -> Result<Self> {
        Ok(match d {
            DetectorSpec::Ml => Engine::Ml(Codebook::new(s)?),
            DetectorSpec::Bp { iterations: 0 } | DetectorSpec::Abp { iterations: 0 } => {
                return Err(Error::InvalidArgument("BP needs at least one iteration".into()))
            }
            DetectorSpec::Bp { iterations } => Engine::Bp(iterations),
            DetectorSpec::Abp { iterations } => Engine::Abp(iterations),
        })
    }

    fn detect(&self, s: &SignatureMatrix, obs: &Observation, rng: &mut ChaCha8Rng) -> Result<Decision> {
        match self {
            Engine::Ml(book) => book.detect(obs, rng),
            Engine::Bp(l) => bp_detect(s, obs, *l),
            Engine::Abp(l) => abp_detect(s, obs, *l),
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Counts {
    word: u64,
    symbol: u64,
    bit: u64,
    ties: u64,
}

fn one_trial(s: &SignatureMatrix, engine: &Engine, n0: f64, mut rng: ChaCha8Rng) -> Result<Counts> {
    let x: Vec<Symbol> = (0..s.n_cols()).map(|_| Symbol::ALL[rng.random_range(0..4)]).collect();
    let obs = transmit(s, &x, Complex64::new(1.0, 0.0), n0, &mut rng)?;
    let d = engine.detect(s, &obs, &mut rng)?;
    let symbol = x.iter().zip(&d.symbols).filter(|(a, b)| a != b).count() as u64;
    let bit = x.iter().zip(&d.symbols).map(|(a, b)| a.bit_distance(*b) as u64).sum();
    Ok(Counts { word: (symbol > 0) as u64, symbol, bit, ties: d.tie as u64 })
}

/// Simulate the word error rate of `s` over an Eb/N0 grid.
pub fn run_wer(s: &SignatureMatrix, config: &SimConfig) -> Result<SimulationReport> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if config.trials >= 1 << 40 {
        return Err(Error::InvalidArgument("too many trials per point".into()));
    }
    let start = Instant::now();
    let engine = Engine::new(s, config.detector)?;
    let enumerator = if s.n_cols() <= DEFAULT_ENUMERATION_CAP { Some(distance_enumerator(s)?) } else { None };
    let mut points = Vec::with_capacity(config.eb_n0_db.len());
    let mut bounds = Vec::with_capacity(config.eb_n0_db.len());
    for (idx, &db) in config.eb_n0_db.iter().enumerate() {
        let n0 = eb_n0_to_n0(s, db);
        let mut total = Counts::default();
        let mut done = 0u64;
        while done < config.trials {
            let end = (done + BATCH).min(config.trials);
            let batch: Vec<Counts> = (done..end).into_par_iter().map(|t| one_trial(s, &engine, n0, trial_rng(config.seed, idx, t))).collect::<Result<_>>()?;
            for c in batch {
                total.word += c.word;
                total.symbol += c.symbol;
                total.bit += c.bit;
                total.ties += c.ties;
            }
            done = end;
            if config.max_word_errors.is_some_and(|m| total.word >= m) {
                break;
            }
        }
        points.push(SnrPoint { eb_n0_db: db, n0, trials: done, word_errors: total.word, symbol_errors: total.symbol, bit_errors: total.bit, ties: total.ties });
        bounds.push(match &enumerator {
            Some(a) => Some(union_bound(a, n0)?),
            None => None,
        });
    }
    Ok(SimulationReport { matrix: s.clone(), config: config.clone(), points, union_bound: bounds, elapsed_secs: start.elapsed().as_secs_f64() })
}

/// Parse `a:b:step` (inclusive) into a grid of values.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}' in grid '{text}'")));
    match parts.as_slice() {
        [one] => Ok(vec![num(one)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(Error::Parse(format!("grid '{text}' needs a <= b and step > 0")));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * step).collect())
        }
        _ => Err(Error::Parse(format!("grid '{text}' is not of the form a:b:step"))),
    }
}
