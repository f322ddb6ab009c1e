use nalgebra::{DMatrix, DVector};

use super::design::DesignMatrix;
use super::inference::FamilyKind;
use super::model::{FitOptions, ModelFit};
use crate::error::{Error, Result};

/// Ordinary least squares with the classical covariance σ̂²(XᵀX)⁻¹,
/// σ̂² = RSS / (n − p). Solved through a QR factorization of X.
pub fn fit_linear(x: &DesignMatrix, y: &[f64], opts: &FitOptions) -> Result<ModelFit> {
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::Validation(format!(
            "response has {} rows, design has {n}",
            y.len()
        )));
    }
    if n <= p {
        return Err(Error::TooFewObservations { n, p });
    }
    let y = DVector::from_column_slice(y);
    let qr = x.matrix().clone().qr();
    let r = qr.r();
    let qty = qr.q().tr_mul(&y);
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::Singular("least squares"))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::Singular("least squares"))?;
    let resid = &y - x.matrix() * &beta;
    let rss = resid.norm_squared();
    let sigma2 = rss / (n - p) as f64;
    let covariance = (&r_inv * r_inv.transpose()) * sigma2;

    Ok(ModelFit {
        family: FamilyKind::Linear,
        coefficients: beta.iter().copied().collect(),
        covariance,
        column_names: x.column_names().to_vec(),
        exposure_columns: x.exposure_columns().to_vec(),
        n_used: n,
        converged: true,
        iterations: 0,
        max_abs_score: 0.0,
        ci_level: opts.ci_level,
        residual_variance: Some(sigma2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::design::DesignMatrix;

    fn design(cols: &[&[f64]]) -> DesignMatrix {
        let n = cols[0].len();
        let mut m = DMatrix::from_element(n, cols.len() + 1, 1.0);
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                m[(i, j + 1)] = c[i];
            }
        }
        let names = std::iter::once("(intercept)".to_string())
            .chain((0..cols.len()).map(|j| format!("v{j}")))
            .collect();
        DesignMatrix::from_matrix(m, names, vec![1]).unwrap()
    }

    #[test]
    fn exact_fit() {
        let a = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        // orthogonal to a after centering
        let c = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let y: Vec<f64> = a.iter().map(|v| 3.0 + 2.0 * v).collect();
        let fit = fit_linear(&design(&[&a, &c]), &y, &FitOptions::default()).unwrap();
        let r = fit.exposure();
        assert!((r.estimate - 2.0).abs() < 1e-12);
        assert!(r.se < 1e-10);
        assert_eq!(fit.residual_variance.map(|s| s < 1e-20), Some(true));
    }

    #[test]
    fn six_points_normal_equations() {
        // hand-solved: X = [1 a], a = 0..5, y = 1,3,2,5,4,6
        // a̅ = 2.5, y̅ = 3.5, Sxy = 15.5, Sxx = Syy = 17.5 → slope 31/35
        let a = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 3.0, 2.0, 5.0, 4.0, 6.0];
        let fit = fit_linear(&design(&[&a]), &y, &FitOptions::default()).unwrap();
        let slope = 31.0 / 35.0;
        assert!((fit.coefficients[1] - slope).abs() < 1e-12);
        assert!((fit.coefficients[0] - (3.5 - 2.5 * slope)).abs() < 1e-12);
        // RSS = Syy − slope·Sxy; se² = RSS/(n − 2) / Sxx
        let rss = 17.5 - slope * 15.5;
        let se = (rss / 4.0 / 17.5).sqrt();
        assert!((fit.exposure().se - se).abs() < 1e-12);
    }

    #[test]
    fn too_few_rows() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let d = DesignMatrix::from_matrix(m, vec!["(intercept)".into(), "a".into()], vec![1]).unwrap();
        assert!(matches!(
            fit_linear(&d, &[1.0, 2.0], &FitOptions::default()),
            Err(Error::TooFewObservations { n: 2, p: 2 })
        ));
    }
}
