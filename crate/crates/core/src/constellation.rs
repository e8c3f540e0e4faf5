//! QPSK symbols and the alphabet of pairwise symbol differences.
//!
//! Symbol index `i` carries two bits: bit 1 is the sign of the real part and
//! bit 0 the sign of the imaginary part (set when negative). Neighbouring
//! points therefore differ in exactly one bit.

use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// Absolute tolerance for comparing constellation constants.
pub const CONST_TOL: f64 = 1e-12;

const QPSK: [Complex64; 4] = [
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// A unit-energy QPSK symbol, identified by its index 0..4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u8);

impl Symbol {
    pub const ALL: [Symbol; 4] = [Symbol(0), Symbol(1), Symbol(2), Symbol(3)];

    pub fn from_index(index: usize) -> Option<Symbol> {
        (index < 4).then(|| Symbol(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn value(self) -> Complex64 {
        QPSK[self.0 as usize]
    }

    pub fn re(self) -> f64 {
        self.value().re
    }

    pub fn im(self) -> f64 {
        self.value().im
    }

    /// Number of differing bits between the Gray labels of two symbols.
    pub fn bit_distance(self, other: Symbol) -> u32 {
        (self.0 ^ other.0).count_ones()
    }
}

/// The four QPSK points in quadrant order I, IV, II, III.
pub fn qpsk_alphabet() -> [Symbol; 4] {
    Symbol::ALL
}

/// The values `a·√2 + b·√2·i` for `(a, b)` in this order, `a, b ∈ {-1, 0, 1}`.
///
/// Index 0 is the zero difference; indices 1..=4 are the "positive" half
/// and `i + 4` is the negation of `i`.
const DIFF_COORDS: [(i8, i8); 9] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (1, 1),
    (1, -1),
    (-1, 0),
    (0, -1),
    (-1, -1),
    (-1, 1),
];

/// One element of the difference alphabet `{x - x' : x, x' QPSK}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiffSymbol(u8);

impl DiffSymbol {
    pub const ZERO: DiffSymbol = DiffSymbol(0);
    /// Representative `√2` of the axis differences.
    pub const AXIS: DiffSymbol = DiffSymbol(1);
    /// Representative `√2 + √2 i` of the corner differences.
    pub const CORNER: DiffSymbol = DiffSymbol(3);
    pub const ALL: [DiffSymbol; 9] = [
        DiffSymbol(0),
        DiffSymbol(1),
        DiffSymbol(2),
        DiffSymbol(3),
        DiffSymbol(4),
        DiffSymbol(5),
        DiffSymbol(6),
        DiffSymbol(7),
        DiffSymbol(8),
    ];

    pub fn from_index(index: usize) -> Option<DiffSymbol> {
        (index < 9).then(|| DiffSymbol(index as u8))
    }

    /// The value `√2 (a + b i)`; `None` unless both coordinates are in `{-1, 0, 1}`.
    pub fn from_coords(a: i8, b: i8) -> Option<DiffSymbol> {
        DIFF_COORDS.iter().position(|&c| c == (a, b)).map(|i| DiffSymbol(i as u8))
    }

    /// The difference `a - b` of two QPSK symbols.
    pub fn between(a: Symbol, b: Symbol) -> DiffSymbol {
        let d = a.value() - b.value();
        let q = |v: f64| (v / SQRT_2).round() as i8;
        DiffSymbol::from_coords(q(d.re), q(d.im)).unwrap()
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Integer coordinates `(a, b)` with value `√2 (a + b i)`.
    pub fn coords(self) -> (i8, i8) {
        DIFF_COORDS[self.0 as usize]
    }

    pub fn value(self) -> Complex64 {
        let (a, b) = self.coords();
        Complex64::new(a as f64 * SQRT_2, b as f64 * SQRT_2)
    }

    pub fn re(self) -> f64 {
        self.value().re
    }

    pub fn im(self) -> f64 {
        self.value().im
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn neg(self) -> DiffSymbol {
        match self.0 {
            0 => self,
            i @ 1..=4 => DiffSymbol(i + 4),
            i => DiffSymbol(i - 4),
        }
    }

    /// Number of ordered QPSK pairs `(x, x')` with `x - x'` equal to this value.
    pub fn pair_count(self) -> u32 {
        let (a, b) = self.coords();
        // each nonzero coordinate pins both symbols on that axis
        (2 - a.unsigned_abs() as u32) * (2 - b.unsigned_abs() as u32)
    }
}

/// All nine difference values with their pair multiplicities.
pub fn difference_alphabet() -> [DiffSymbol; 9] {
    DiffSymbol::ALL
}
