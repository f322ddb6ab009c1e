use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use outwide::glm::{fit_linear, fit_logistic, fit_modified_poisson, score_max, DesignMatrix, FitOptions};

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| if j == 0 { "(intercept)".into() } else { format!("x{j}") }).collect()
}

fn random_design(n: usize, p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.sample(StandardNormal) })
}

fn design(m: DMatrix<f64>) -> DesignMatrix {
    let p = m.ncols();
    DesignMatrix::from_matrix(m, names(p), vec![1]).unwrap()
}

/// Binary exposure in column 1, continuous covariates after it.
fn exposure_design(n: usize, p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = random_design(n, p, rng);
    for i in 0..n {
        m[(i, 1)] = f64::from(rng.gen::<f64>() < 0.5);
    }
    m
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_matches_normal_equations(seed in any::<u64>(), p in 2usize..=10, extra in 5usize..190) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = p + extra;
        let m = random_design(n, p, &mut rng);
        let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let fit = fit_linear(&design(m.clone()), &y, &FitOptions::default()).unwrap();
        let xtx = m.transpose() * &m;
        let beta = xtx.lu().solve(&(m.transpose() * DVector::from_column_slice(&y))).unwrap();
        for j in 0..p {
            prop_assert!((fit.coefficients[j] - beta[j]).abs() <= 1e-8);
        }
    }

    #[test]
    fn affine_covariate_rescaling_leaves_exposure_unchanged(
        seed in any::<u64>(),
        scale in prop_oneof![-50.0..-0.02f64, 0.02..50.0f64],
        shift in -100.0..100.0f64,
        family in 0usize..3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 300;
        let m = exposure_design(n, 4, &mut rng);
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eta = -0.5 + 0.4 * m[(i, 1)] + 0.3 * m[(i, 2)] - 0.2 * m[(i, 3)];
                match family {
                    0 => eta + rng.sample::<f64, _>(StandardNormal),
                    _ => f64::from(rng.gen::<f64>() < expit(eta)),
                }
            })
            .collect();
        let mut m2 = m.clone();
        for i in 0..n {
            m2[(i, 2)] = m[(i, 2)] * scale + shift;
        }
        let opts = FitOptions::default();
        let fit = |m: DMatrix<f64>| {
            let d = design(m);
            match family {
                0 => fit_linear(&d, &y, &opts),
                1 => fit_logistic(&d, &y, &opts),
                _ => fit_modified_poisson(&d, &y, &opts),
            }
        };
        let (Ok(a), Ok(b)) = (fit(m), fit(m2)) else {
            return Err(TestCaseError::reject("fit failed on a random instance"));
        };
        let (ra, rb) = (a.exposure(), b.exposure());
        prop_assert!((ra.estimate - rb.estimate).abs() <= 1e-8, "{} vs {}", ra.estimate, rb.estimate);
        prop_assert!((ra.se - rb.se).abs() <= 1e-8);
        prop_assert!((ra.p_value - rb.p_value).abs() <= 1e-8);
    }

    #[test]
    fn standardizing_outcome_divides_by_sd(seed in any::<u64>(), sd in 0.01..100.0f64, mean in -50.0..50.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 120;
        let m = exposure_design(n, 3, &mut rng);
        let y: Vec<f64> = (0..n).map(|i| 0.3 * m[(i, 1)] + rng.sample::<f64, _>(StandardNormal)).collect();
        let scaled: Vec<f64> = y.iter().map(|v| (v - mean) / sd).collect();
        let opts = FitOptions::default();
        let a = fit_linear(&design(m.clone()), &y, &opts).unwrap().exposure();
        let b = fit_linear(&design(m), &scaled, &opts).unwrap().exposure();
        prop_assert!((b.estimate - a.estimate / sd).abs() <= 1e-10 * (1.0 + a.estimate.abs() / sd));
        prop_assert!((b.se - a.se / sd).abs() <= 1e-10 * (1.0 + a.se / sd));
    }

    #[test]
    fn score_vanishes_at_convergence(seed in any::<u64>(), poisson in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 400;
        let m = exposure_design(n, 4, &mut rng);
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eta = -1.2 + 0.3 * m[(i, 1)] + 0.2 * m[(i, 2)] - 0.1 * m[(i, 3)];
                let p = if poisson { eta.exp().min(1.0) } else { expit(eta) };
                f64::from(rng.gen::<f64>() < p)
            })
            .collect();
        let d = design(m);
        let opts = FitOptions::default();
        let fit = if poisson { fit_modified_poisson(&d, &y, &opts) } else { fit_logistic(&d, &y, &opts) };
        let fit = fit.unwrap();
        prop_assert!(fit.converged);
        // Max component bounded by 1e-8 implies the Euclidean norm is below 1e-6 for p <= 10^4.
        prop_assert!(score_max(&d, &y, &fit) < 1e-6 / (d.ncols() as f64).sqrt());
    }

    #[test]
    fn two_group_sandwich_closed_form(n1 in 10usize..300, n0 in 10usize..300, f1 in 0.05..0.95f64, f0 in 0.05..0.95f64) {
        let e1 = ((n1 as f64 * f1) as usize).clamp(1, n1 - 1);
        let e0 = ((n0 as f64 * f0) as usize).clamp(1, n0 - 1);
        let m = DMatrix::from_fn(n1 + n0, 2, |i, j| if j == 0 || i < n1 { 1.0 } else { 0.0 });
        let y: Vec<f64> = (0..n1 + n0)
            .map(|i| if i < n1 { f64::from(i < e1) } else { f64::from(i - n1 < e0) })
            .collect();
        let fit = fit_modified_poisson(&design(m), &y, &FitOptions::default()).unwrap();
        let (p1, p0) = (e1 as f64 / n1 as f64, e0 as f64 / n0 as f64);
        let se = ((1.0 - p1) / (n1 as f64 * p1) + (1.0 - p0) / (n0 as f64 * p0)).sqrt();
        prop_assert!((fit.coefficients[1] - (p1 / p0).ln()).abs() <= 1e-8);
        prop_assert!((fit.se(1) - se).abs() <= 1e-8, "{} vs {se}", fit.se(1));
    }
}

#[test]
fn zero_events_in_one_covariate_pattern_still_converges() {
    // Events only where the covariate is 1; X stays full rank.
    let n = 200;
    let m = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => (i % 2) as f64,
        _ => f64::from(i % 4 >= 2),
    });
    let y: Vec<f64> = (0..n).map(|i| f64::from(i % 4 >= 2 && i % 3 == 0)).collect();
    let d = design(m);
    let fit = fit_modified_poisson(&d, &y, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    assert!(fit.coefficients.iter().all(|b| b.is_finite()));
}
