//! Dense complex matrix exponential by scaling and squaring with Padé
//! approximants (orders 3, 5, 7, 9, 13), after Higham (2005).

use nalgebra::DMatrix;
use num_complex::Complex64;

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

type CMat = DMatrix<Complex64>;

fn one_norm(a: &CMat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(a: &CMat, x: f64) -> CMat {
    a.map(|z| z * x)
}

/// `(V - U)^{-1} (V + U)`
fn solve_pade(u: CMat, v: CMat) -> CMat {
    let p = &v + &u;
    let q = &v - &u;
    q.lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for the chosen scaling")
}

fn pade_low(a: &CMat, b: &[f64]) -> CMat {
    let n = a.nrows();
    let id = CMat::identity(n, n);
    let a2 = a * a;
    // even powers of A up to the needed degree
    let mut pow = id.clone();
    let mut u_inner = CMat::zeros(n, n);
    let mut v = CMat::zeros(n, n);
    for k in 0..b.len() / 2 {
        v += scaled(&pow, b[2 * k]);
        u_inner += scaled(&pow, b[2 * k + 1]);
        pow = &pow * &a2;
    }
    solve_pade(a * u_inner, v)
}

fn pade13(a: &CMat) -> CMat {
    let n = a.nrows();
    let id = CMat::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let u_hi = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u_inner =
        &a6 * u_hi + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(&id, b[1]);
    let u = a * u_inner;
    let v_hi = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v =
        &a6 * v_hi + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(&id, b[0]);
    solve_pade(u, v)
}

/// `exp(A)` for a square complex matrix.
pub fn expm(a: &CMat) -> CMat {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm = one_norm(a);
    for (m, theta) in THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return pade_low(a, b);
        }
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let mut x = pade13(&scaled(a, 0.5f64.powi(s)));
    for _ in 0..s {
        x = &x * &x;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let z = CMat::zeros(4, 4);
        assert_eq!(expm(&z), CMat::identity(4, 4));
    }

    #[test]
    fn rotation_generator() {
        for theta in [0.01, 0.4, 2.0, 9.0, 40.0] {
            let a = CMat::from_row_slice(
                2,
                2,
                &[c(0.0, 0.0), c(-theta, 0.0), c(theta, 0.0), c(0.0, 0.0)],
            );
            let e = expm(&a);
            let want = [theta.cos(), -theta.sin(), theta.sin(), theta.cos()];
            for (i, w) in want.iter().enumerate() {
                assert!(
                    (e[(i / 2, i % 2)] - c(*w, 0.0)).norm() < 1e-12,
                    "theta={theta}"
                );
            }
        }
    }

    #[test]
    fn nilpotent_jordan_block() {
        // exp([[x,1],[0,x]]) = e^x [[1,1],[0,1]]
        let x = c(-0.3, 1.1);
        let a = CMat::from_row_slice(2, 2, &[x, c(1.0, 0.0), c(0.0, 0.0), x]);
        let e = expm(&a);
        let ex = x.exp();
        assert!((e[(0, 0)] - ex).norm() < 1e-13);
        assert!((e[(0, 1)] - ex).norm() < 1e-13);
        assert!(e[(1, 0)].norm() < 1e-13);
    }

    #[test]
    fn diagonal_matches_scalar_exponential() {
        let d: Vec<Complex64> = (0..6)
            .map(|n| c(-0.1 * n as f64, -(n as f64)) * 7.0)
            .collect();
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(d.clone()));
        let e = expm(&a);
        for (i, z) in d.iter().enumerate() {
            let w = z.exp();
            assert!((e[(i, i)] - w).norm() <= 1e-12 * w.norm());
        }
    }
}
