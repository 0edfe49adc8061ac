//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::lu_solve;

const THETA_13: f64 = 5.371920351148152;

const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{At}` for a finite square matrix and `t ≥ 0`.
pub fn expm(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::Domain("matrix exponential of a non-square matrix".into()));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("time must be finite and nonnegative, got {t}")));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let n = a.nrows();
    let at = a * t;
    let norm = one_norm(&at);
    if norm == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let x = at / 2f64.powi(s);

    let id = DMatrix::<f64>::identity(n, n);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;

    let u_inner = &x6 * (&x6 * B[13] + &x4 * B[11] + &x2 * B[9]) + &x6 * B[7] + &x4 * B[5] + &x2 * B[3] + &id * B[1];
    let u = &x * u_inner;
    let v = &x6 * (&x6 * B[12] + &x4 * B[10] + &x2 * B[8]) + &x6 * B[6] + &x4 * B[4] + &x2 * B[2] + &id * B[0];

    let mut r = lu_solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}
