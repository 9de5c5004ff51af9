//! Small least-squares helpers shared by the decay, probe and averaging fits.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r2: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints(xs.len(), 2));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("regressor is constant"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        let sse: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let e = y - intercept - slope * x;
                e * e
            })
            .sum();
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(LinearFit { slope, intercept, r2 })
}

/// Least-squares polynomial coefficients `c₀ + c₁x + … + c_d x^d`.
///
/// Uses the normal equations on centred and scaled abscissae, which is
/// adequate for the low degrees used here.
pub fn poly_fit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() <= degree {
        return Err(Error::TooFewPoints(xs.len(), degree + 1));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let scale = xs.iter().map(|x| (x - mx).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::InvalidParameter("regressor is constant"));
    }
    let m = degree + 1;
    let mut ata = vec![0.0; m * m];
    let mut atb = vec![0.0; m];
    for (x, y) in xs.iter().zip(ys) {
        let t = (x - mx) / scale;
        let mut pows = vec![1.0; m];
        for k in 1..m {
            pows[k] = pows[k - 1] * t;
        }
        for i in 0..m {
            atb[i] += pows[i] * y;
            for j in 0..m {
                ata[i * m + j] += pows[i] * pows[j];
            }
        }
    }
    let c = solve_dense(&mut ata, &mut atb, m)?;
    // expand Σ c_k ((x − mx)/scale)^k back to powers of x
    let mut out = vec![0.0; m];
    for (k, ck) in c.iter().enumerate() {
        let coef = ck / libm::pow(scale, k as f64);
        // (x − mx)^k = Σ_j C(k,j) x^j (−mx)^{k−j}
        let mut binom = 1.0;
        for j in 0..=k {
            out[j] += coef * binom * libm::pow(-mx, (k - j) as f64);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    Ok(out)
}

/// Gaussian elimination with partial pivoting on a row-major `m×m` system.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], m: usize) -> Result<Vec<f64>> {
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .unwrap_or(col);
        if a[pivot * m + col].abs() < 1e-300 {
            return Err(Error::InvalidParameter("singular system"));
        }
        if pivot != col {
            for k in 0..m {
                a.swap(col * m + k, pivot * m + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..m {
            let f = a[row * m + col] / a[col * m + col];
            for k in col..m {
                a[row * m + k] -= f * a[col * m + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut s = b[row];
        for k in row + 1..m {
            s -= a[row * m + k] * x[k];
        }
        x[row] = s / a[row * m + row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-14);
        assert!((fit.intercept - 3.0).abs() < 1e-13);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn quadratic_recovered() {
        let xs: Vec<f64> = (0..20).map(|i| 5.0 + 0.3 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 * x * x - 1.2 * x + 0.7).collect();
        let c = poly_fit(&xs, &ys, 2).unwrap();
        assert!((c[0] - 0.7).abs() < 1e-9);
        assert!((c[1] + 1.2).abs() < 1e-10);
        assert!((c[2] - 0.3).abs() < 1e-11);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(linear_fit(&[1.0], &[2.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(poly_fit(&[1.0, 2.0], &[1.0, 2.0], 2).is_err());
    }
}
