//! Signature matrices and the phase-preserving transforms on them.
//!
//! Nonzero entries are unit-modulus complex numbers `e^{iθ}` stored as the
//! angle θ normalized into `[0, 2π)`.

use crate::constellation::Symbol;
use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeSubset, FactorGraph};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Tolerance used when comparing phases.
pub const PHASE_TOL: f64 = 1e-9;

/// Map an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU - PHASE_TOL * 1e-3 {
        0.0
    } else {
        t
    }
}

/// Signed circular distance between two angles, in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// A signature element: zero, or `e^{iθ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseEntry {
    Zero,
    Phase(f64),
}

impl PhaseEntry {
    pub fn phase(theta: f64) -> Self {
        PhaseEntry::Phase(normalize_angle(theta))
    }

    pub fn is_zero(self) -> bool {
        matches!(self, PhaseEntry::Zero)
    }

    pub fn theta(self) -> Option<f64> {
        match self {
            PhaseEntry::Zero => None,
            PhaseEntry::Phase(t) => Some(t),
        }
    }

    pub fn value(self) -> Complex64 {
        match self {
            PhaseEntry::Zero => Complex64::new(0.0, 0.0),
            PhaseEntry::Phase(t) => Complex64::from_polar(1.0, t),
        }
    }

    fn rotated(self, by: f64) -> Self {
        match self {
            PhaseEntry::Zero => self,
            PhaseEntry::Phase(t) => PhaseEntry::phase(t + by),
        }
    }

    fn approx_eq(self, other: PhaseEntry, tol: f64) -> bool {
        match (self, other) {
            (PhaseEntry::Zero, PhaseEntry::Zero) => true,
            (PhaseEntry::Phase(a), PhaseEntry::Phase(b)) => angle_diff(a, b).abs() <= tol,
            _ => false,
        }
    }
}

/// An `N × K` signature matrix: row `n` is resource `n`, column `k` is user `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct SignatureMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<PhaseEntry>,
}

impl SignatureMatrix {
    /// Build from a row-major grid, rejecting empty rows or columns.
    pub fn new(rows: usize, cols: usize, entries: Vec<PhaseEntry>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix("matrix must have at least one row and column".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: entries.len() });
        }
        let entries: Vec<PhaseEntry> = entries
            .into_iter()
            .map(|e| match e {
                PhaseEntry::Phase(t) if t.is_finite() => Ok(PhaseEntry::phase(t)),
                PhaseEntry::Phase(t) => Err(Error::InvalidMatrix(format!("non-finite phase {t}"))),
                PhaseEntry::Zero => Ok(e),
            })
            .collect::<Result<_>>()?;
        let s = SignatureMatrix { rows, cols, entries };
        if let Some(n) = (0..rows).find(|&n| (0..cols).all(|k| s.get(n, k).is_zero())) {
            return Err(Error::InvalidMatrix(format!("row {n} is all zero")));
        }
        if let Some(k) = (0..cols).find(|&k| (0..rows).all(|n| s.get(n, k).is_zero())) {
            return Err(Error::InvalidMatrix(format!("column {k} is all zero")));
        }
        Ok(s)
    }

    /// Build from rows of optional angles (`None` is a zero entry).
    pub fn from_angles(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, got: r.len() });
        }
        let entries = rows
            .iter()
            .flatten()
            .map(|t| t.map_or(PhaseEntry::Zero, PhaseEntry::phase))
            .collect();
        Self::new(rows.len(), cols, entries)
    }

    /// Build from `(row, col, θ)` triplets; missing positions are zero.
    pub fn from_triplets(rows: usize, cols: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut entries = vec![PhaseEntry::Zero; rows * cols];
        for (n, k, theta) in triplets {
            if n >= rows || k >= cols {
                return Err(Error::InvalidMatrix(format!("entry ({n}, {k}) out of range")));
            }
            if !entries[n * cols + k].is_zero() {
                return Err(Error::InvalidMatrix(format!("duplicate entry ({n}, {k})")));
            }
            entries[n * cols + k] = PhaseEntry::Phase(theta);
        }
        Self::new(rows, cols, entries)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    /// Users per resource, `K / N`.
    pub fn load(&self) -> f64 {
        self.cols as f64 / self.rows as f64
    }

    pub fn get(&self, n: usize, k: usize) -> PhaseEntry {
        self.entries[n * self.cols + k]
    }

    pub fn value(&self, n: usize, k: usize) -> Complex64 {
        self.get(n, k).value()
    }

    /// Positions of nonzero entries in row-major order.
    pub fn support(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.rows).flat_map(move |n| (0..self.cols).filter(move |&k| !self.get(n, k).is_zero()).map(move |k| (n, k)))
    }

    /// Effective spreading length of every user.
    pub fn column_weights(&self) -> Vec<usize> {
        (0..self.cols).map(|k| (0..self.rows).filter(|&n| !self.get(n, k).is_zero()).count()).collect()
    }

    /// Row-major complex values.
    pub fn to_complex(&self) -> Vec<Complex64> {
        self.entries.iter().map(|e| e.value()).collect()
    }

    pub fn graph(&self) -> Result<FactorGraph> {
        FactorGraph::from_signature(self)
    }

    /// Entry-wise comparison with phase tolerance `tol`.
    pub fn approx_eq(&self, other: &SignatureMatrix, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.approx_eq(*b, tol))
    }

    /// The codeword `c = S x`.
    pub fn encode(&self, x: &[Symbol]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: x.len() });
        }
        Ok((0..self.rows)
            .map(|n| (0..self.cols).map(|k| self.value(n, k) * x[k].value()).sum())
            .collect())
    }

    /// Multiply row `n` by `e^{iθ_n}`.
    pub fn row_rotate(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: theta.len() });
        }
        let mut out = self.clone();
        for (i, e) in out.entries.iter_mut().enumerate() {
            *e = e.rotated(theta[i / self.cols]);
        }
        Ok(out)
    }

    /// Multiply column `k` by `e^{i m_k π/2}`.
    pub fn column_rotate(&self, m: &[i64]) -> Result<Self> {
        if m.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: m.len() });
        }
        let mut out = self.clone();
        for (i, e) in out.entries.iter_mut().enumerate() {
            *e = e.rotated(m[i % self.cols].rem_euclid(4) as f64 * FRAC_PI_2);
        }
        Ok(out)
    }

    /// Stack the rows of `other` below the rows of `self`.
    pub fn concatenate(&self, other: &SignatureMatrix) -> Result<Self> {
        if other.cols != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.cols });
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Self::new(self.rows + other.rows, self.cols, entries)
    }

    /// Column `k` of the result is column `perm[k]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: perm.len() });
        }
        let mut seen = vec![false; self.cols];
        for &p in perm {
            if p >= self.cols || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
            }
        }
        let entries = (0..self.rows)
            .flat_map(|n| perm.iter().map(move |&p| (n, p)))
            .map(|(n, p)| self.get(n, p))
            .collect();
        Self::new(self.rows, self.cols, entries)
    }

    /// Append a user whose signature column is `column`.
    pub fn with_column(&self, column: &[PhaseEntry]) -> Result<Self> {
        if column.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: column.len() });
        }
        let entries = (0..self.rows)
            .flat_map(|n| (0..self.cols).map(move |k| (n, Some(k))).chain(std::iter::once((n, None))))
            .map(|(n, k)| k.map_or(column[n], |k| self.get(n, k)))
            .collect();
        Self::new(self.rows, self.cols + 1, entries)
    }

    /// Append a resource whose row is `row`.
    pub fn with_row(&self, row: &[PhaseEntry]) -> Result<Self> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: row.len() });
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(row);
        Self::new(self.rows + 1, self.cols, entries)
    }

    /// Rotate rows and fold columns into the canonical labelling relative to `phi`.
    ///
    /// Every edge outside `phi` in column `k` ends up with a common phase
    /// `θ_k ∈ [0, π/2)`, with `θ_0 = 0`; edges in `phi` keep free phases.
    /// Rows are normalized by walking the spanning tree `E \ phi` outward
    /// from user 0, one row at a time, and then each column is rotated by a
    /// multiple of π/2. Both steps preserve the distance enumerator.
    pub fn canonicalize(&self, phi: &EdgeSubset) -> Result<Self> {
        let graph = self.graph()?;
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        if !graph.leaves_spanning_tree(phi) {
            return Err(Error::InvalidEdgeSubset("removing the edge set does not leave a spanning tree".into()));
        }
        let theta = |n: usize, k: usize| self.get(n, k).theta().expect("edge has a phase");
        let tree = |n: usize, k: usize| !self.get(n, k).is_zero() && !phi.contains(n, k);

        // rotation applied to each row, once determined
        let mut row_shift: Vec<Option<f64>> = vec![None; self.rows];
        for n in 0..self.rows {
            if tree(n, 0) {
                row_shift[n] = Some(-theta(n, 0));
            }
        }
        loop {
            let mut progressed = false;
            for m in 0..self.cols {
                let tree_rows: Vec<usize> = (0..self.rows).filter(|&n| tree(n, m)).collect();
                let Some(&j) = tree_rows.iter().find(|&&n| row_shift[n].is_some()) else {
                    continue;
                };
                let target = theta(j, m) + row_shift[j].unwrap();
                for &n in &tree_rows {
                    if row_shift[n].is_none() {
                        row_shift[n] = Some(target - theta(n, m));
                        progressed = true;
                    }
                }
            }
            if !progressed {
                break;
            }
        }
        let shifts: Vec<f64> = row_shift.into_iter().map(|s| s.expect("spanning tree reaches every row")).collect();
        let rotated = self.row_rotate(&shifts)?;

        let mut entries = rotated.entries.clone();
        for k in 0..self.cols {
            let first = (0..self.rows).find(|&n| tree(n, k)).expect("spanning tree covers every user");
            let common = rotated.get(first, k).theta().unwrap();
            let quarter = (common / FRAC_PI_2).floor();
            let mut folded = common - quarter * FRAC_PI_2;
            if folded >= FRAC_PI_2 - PHASE_TOL || k == 0 {
                folded = 0.0;
            }
            let shift = folded - common;
            for n in 0..self.rows {
                let idx = n * self.cols + k;
                if tree(n, k) {
                    entries[idx] = PhaseEntry::Phase(folded);
                } else {
                    entries[idx] = entries[idx].rotated(shift);
                }
            }
        }
        Self::new(self.rows, self.cols, entries)
    }
}

/// Parse an angle such as `"pi/6"`, `"-pi/2"`, `"0.1431pi"`, `"2*pi/3"` or `"0.5"`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase().replace('π', "pi");
    let bad = || Error::Parse(format!("cannot parse angle {text:?}"));
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let value = match s.split_once("pi") {
        None => num(&s)?,
        Some((pre, post)) => {
            let coef = match pre.strip_suffix('*').unwrap_or(pre) {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => num(c)?,
            };
            let den = match post {
                "" => 1.0,
                p => num(p.strip_prefix('/').ok_or_else(bad)?)?,
            };
            coef * PI / den
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum AngleJson {
    Radians(f64),
    Text(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EntryJson {
    row: usize,
    col: usize,
    theta: AngleJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    n: usize,
    k: usize,
    entries: Vec<EntryJson>,
}

impl TryFrom<MatrixJson> for SignatureMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        let triplets = m
            .entries
            .into_iter()
            .map(|e| {
                let theta = match e.theta {
                    AngleJson::Radians(t) => t,
                    AngleJson::Text(s) => parse_angle(&s)?,
                };
                Ok((e.row, e.col, theta))
            })
            .collect::<Result<Vec<_>>>()?;
        SignatureMatrix::from_triplets(m.n, m.k, triplets)
    }
}

impl From<SignatureMatrix> for MatrixJson {
    fn from(s: SignatureMatrix) -> Self {
        let entries = s
            .support()
            .map(|(n, k)| EntryJson { row: n, col: k, theta: AngleJson::Radians(s.get(n, k).theta().unwrap()) })
            .collect();
        MatrixJson { n: s.rows, k: s.cols, entries }
    }
}

impl std::fmt::Display for SignatureMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for n in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|k| match self.get(n, k) {
                    PhaseEntry::Zero => "0".to_string(),
                    PhaseEntry::Phase(t) => format!("e^{{i{:.4}π}}", t / PI),
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}
