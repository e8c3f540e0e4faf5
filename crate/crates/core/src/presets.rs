//! Published signature matrices used as references and warm starts.

use crate::design;
use crate::error::{Error, Result};
use crate::signature::SignatureMatrix;
use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};

fn pi(x: f64) -> f64 {
    x * PI
}

/// Best known single-resource vector for `k` users, `1 <= k <= 6`.
pub fn table1_vector(k: usize) -> Result<SignatureMatrix> {
    let angles: &[f64] = match k {
        1 => &[0.0],
        2 => &[0.0, 1.0 / 6.0],
        3 => &[0.0, 0.0974, 0.4026],
        4 => &[0.0, 0.0477, 0.0947, 0.1965],
        5 => &[0.0, 0.0851, 0.1368, 0.1631, 0.1894],
        6 => &[0.0, 0.0266, 0.0664, 0.1696, 0.473, 0.4866],
        _ => return Err(Error::InvalidArgument(format!("no single-resource preset for {k} users"))),
    };
    SignatureMatrix::from_angles(&[angles.iter().map(|&a| Some(pi(a))).collect()])
}

/// Reported minimum distance of [`table1_vector`].
pub fn table1_delta(k: usize) -> Option<f64> {
    Some(match k {
        1 => std::f64::consts::SQRT_2,
        2 => 3f64.sqrt() - 1.0,
        3 => 0.4310,
        4 => 0.2086,
        5 => 0.1142,
        6 => 0.0595,
        _ => return None,
    })
}

/// `[1, e^{iπ/4}]`, the common two-user labeling.
pub fn two_user_quarter() -> SignatureMatrix {
    SignatureMatrix::from_angles(&[vec![Some(0.0), Some(FRAC_PI_4)]]).unwrap()
}

/// `[1, e^{iπ/6}]`.
pub fn two_user_optimal() -> SignatureMatrix {
    SignatureMatrix::from_angles(&[vec![Some(0.0), Some(FRAC_PI_6)]]).unwrap()
}

/// Bidiagonal tree code with `k` users.
pub fn tree_code(k: usize) -> Result<SignatureMatrix> {
    design::tree_code(k)
}

/// Optimized 6-user 4-resource labeling of the regular degree-3 graph.
pub fn fig2_optimal() -> SignatureMatrix {
    let t = [
        (0, 0, 0.0),
        (0, 1, 0.1431),
        (0, 2, 0.2021),
        (1, 0, 0.0),
        (1, 3, 0.3127),
        (1, 4, 0.3765),
        (2, 1, 0.1431),
        (2, 3, 0.5736),
        (2, 5, 0.2667),
        (3, 2, 0.2021),
        (3, 4, 0.3935),
        (3, 5, 0.3078),
    ];
    SignatureMatrix::from_triplets(4, 6, t.map(|(n, k, a)| (n, k, pi(a)))).unwrap()
}

/// Graph of [`fig2_optimal`] with every phase zero.
pub fn fig2_graph() -> crate::graph::FactorGraph {
    fig2_optimal().graph().unwrap()
}

/// 6-user 4-resource code from the single-cycle family with `K = 3, q = 2`.
pub fn example3() -> SignatureMatrix {
    let v = [vec![FRAC_PI_6, FRAC_PI_6], vec![FRAC_PI_3, FRAC_PI_6], vec![FRAC_PI_3, PI]];
    design::construction_1(3, 2, &v, None).unwrap()
}

/// 8-user 6-resource code from the single-cycle family with `K = 4, q = 2`.
pub fn example4() -> SignatureMatrix {
    let v = [vec![FRAC_PI_6, FRAC_PI_6], vec![FRAC_PI_3, FRAC_PI_3], vec![FRAC_PI_6, FRAC_PI_6], vec![FRAC_PI_6, FRAC_PI_6]];
    design::construction_1(4, 2, &v, Some(&[0.0, FRAC_PI_3])).unwrap()
}

/// 8-user 4-resource code from the banded family with `K = 4, q = 2`.
pub fn example5() -> SignatureMatrix {
    let th: [f64; 8] = [0.0, 0.2618, 0.1435, 0.1279, 0.2297, 0.3505, 0.3935, 0.361].map(pi);
    let loop_phase = pi(0.2269);
    let v = [vec![th[2], th[3]], vec![th[4], th[5]], vec![th[6], th[7]]];
    let w = [vec![th[4], loop_phase]];
    design::construction_2(4, 2, &v, &w, None, Some(&[0.0, th[1]])).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn angles(rows: &[&[(usize, f64)]], k: usize) -> SignatureMatrix {
        let grid: Vec<Vec<Option<f64>>> = rows
            .iter()
            .map(|r| {
                let mut v = vec![None; k];
                for &(c, a) in r.iter() {
                    v[c] = Some(a);
                }
                v
            })
            .collect();
        SignatureMatrix::from_angles(&grid).unwrap()
    }

    #[test]
    fn example3_layout() {
        let expect = angles(
            &[
                &[(0, 0.0), (2, FRAC_PI_6), (5, FRAC_PI_6)],
                &[(1, 0.0), (3, FRAC_PI_6), (4, FRAC_PI_3)],
                &[(2, FRAC_PI_6), (4, FRAC_PI_3)],
                &[(3, FRAC_PI_6), (5, PI)],
            ],
            6,
        );
        assert!(example3().approx_eq(&expect, 1e-12));
    }

    #[test]
    fn example4_layout() {
        let expect = angles(
            &[
                &[(0, 0.0), (2, FRAC_PI_6), (7, FRAC_PI_6)],
                &[(1, FRAC_PI_3), (3, FRAC_PI_6), (6, FRAC_PI_6)],
                &[(2, FRAC_PI_6), (4, FRAC_PI_3)],
                &[(3, FRAC_PI_6), (5, FRAC_PI_3)],
                &[(4, FRAC_PI_3), (6, FRAC_PI_6)],
                &[(5, FRAC_PI_3), (7, FRAC_PI_6)],
            ],
            8,
        );
        assert!(example4().approx_eq(&expect, 1e-12));
    }

    #[test]
    fn example5_layout() {
        let t = |x: f64| pi(x);
        let expect = angles(
            &[
                &[(0, 0.0), (2, t(0.1435)), (4, t(0.2297))],
                &[(1, t(0.2618)), (3, t(0.1279)), (5, t(0.3505))],
                &[(2, t(0.1435)), (5, t(0.2269)), (6, t(0.3935))],
                &[(3, t(0.1279)), (4, t(0.2297)), (7, t(0.361))],
            ],
            8,
        );
        assert!(example5().approx_eq(&expect, 1e-12));
    }

    #[test]
    fn table_bounds() {
        assert!(table1_vector(0).is_err());
        assert!(table1_vector(7).is_err());
        for k in 1..=6 {
            assert_eq!(table1_vector(k).unwrap().n_cols(), k);
            assert!(table1_delta(k).is_some());
        }
    }
}
