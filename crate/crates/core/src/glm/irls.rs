//! Newton / IRLS for the canonical-link binary-response families.
//!
//! Both logistic (logit link) and Poisson (log link) are canonical, so the
//! IRLS update coincides with Newton–Raphson and the observed and expected
//! information agree: I(β) = XᵀWX with W = Var(μ).

use nalgebra::{DMatrix, DVector};

use super::design::DesignMatrix;
use super::inference::FamilyKind;
use super::model::{FitOptions, ModelFit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Link {
    Logit,
    Log,
}

const MAX_ETA: f64 = 700.0;
const MAX_HALVINGS: usize = 40;

impl Link {
    fn mean(self, eta: f64) -> f64 {
        match self {
            Link::Logit => 1.0 / (1.0 + (-eta).exp()),
            Link::Log => eta.clamp(-MAX_ETA, MAX_ETA).exp(),
        }
    }

    fn variance(self, mu: f64) -> f64 {
        match self {
            Link::Logit => mu * (1.0 - mu),
            Link::Log => mu,
        }
    }

    fn link(self, mu: f64) -> f64 {
        match self {
            Link::Logit => (mu / (1.0 - mu)).ln(),
            Link::Log => mu.ln(),
        }
    }

    fn deviance(self, y: &[f64], mu: &[f64]) -> f64 {
        let mut d = 0.0;
        for (&yi, &mi) in y.iter().zip(mu) {
            d += match self {
                Link::Logit => {
                    let m = mi.clamp(1e-300, 1.0 - 1e-16);
                    -(yi * m.ln() + (1.0 - yi) * (1.0 - m).ln())
                }
                Link::Log => {
                    let term = if yi > 0.0 { yi * (yi / mi).ln() } else { 0.0 };
                    term - (yi - mi)
                }
            };
        }
        2.0 * d
    }
}

pub(crate) struct IrlsOutput {
    pub beta: DVector<f64>,
    pub mu: Vec<f64>,
    pub information: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub max_score: f64,
    pub deviance: f64,
}

fn weighted_crossprod(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut xw = x.clone();
    for (i, &wi) in w.iter().enumerate() {
        let s = wi.sqrt();
        xw.row_mut(i).scale_mut(s);
    }
    xw.tr_mul(&xw)
}

/// Runs the Newton iteration. `ridge` adds λ‖β₋₀‖²/2 to the objective
/// (zero for the inferential fits; small and positive inside the imputer).
pub(crate) fn irls(
    x: &DMatrix<f64>,
    y: &[f64],
    link: Link,
    opts: &FitOptions,
    ridge: f64,
) -> Result<IrlsOutput> {
    let (n, p) = (x.nrows(), x.ncols());
    let ybar = y.iter().sum::<f64>() / n as f64;
    if ybar <= 0.0 || (link == Link::Logit && ybar >= 1.0) {
        return Err(Error::ConstantResponse);
    }
    let yv = DVector::from_column_slice(y);

    let mut beta = DVector::zeros(p);
    beta[0] = link.link(ybar);
    let penalty = |b: &DVector<f64>| ridge * b.rows(1, p - 1).norm_squared();
    let eval = |b: &DVector<f64>| -> (Vec<f64>, f64) {
        let eta = x * b;
        let mu: Vec<f64> = eta.iter().map(|&e| link.mean(e)).collect();
        let dev = link.deviance(y, &mu) + penalty(b);
        (mu, dev)
    };
    let (mut mu, mut deviance) = eval(&beta);

    let mut iterations = 0;
    let mut converged = false;
    let mut max_score;
    loop {
        let resid = &yv - DVector::from_column_slice(&mu);
        let mut score = x.tr_mul(&resid);
        if ridge > 0.0 {
            for j in 1..p {
                score[j] -= ridge * beta[j];
            }
        }
        max_score = score.amax();
        if max_score < opts.score_tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        let w: Vec<f64> = mu.iter().map(|&m| link.variance(m)).collect();
        let mut info = weighted_crossprod(x, &w);
        for j in 1..p {
            info[(j, j)] += ridge;
        }
        let delta = info
            .clone()
            .cholesky()
            .ok_or(Error::Singular("information matrix"))?
            .solve(&score);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = &beta + &delta * step;
            let (mu_c, dev_c) = eval(&cand);
            if dev_c.is_finite() && dev_c <= deviance + 1e-12 * deviance.abs().max(1.0) {
                accepted = Some((cand, mu_c, dev_c));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((b, m, d)) => {
                let moved = (&b - &beta).amax();
                beta = b;
                mu = m;
                deviance = d;
                // At the floating-point floor the score cannot shrink further.
                if moved <= 1e-14 * (1.0 + beta.amax()) {
                    converged = max_score < 1e-6;
                    break;
                }
            }
            None => {
                converged = max_score < 1e-6;
                break;
            }
        }
    }

    let w: Vec<f64> = mu.iter().map(|&m| link.variance(m)).collect();
    let mut information = weighted_crossprod(x, &w);
    for j in 1..p {
        information[(j, j)] += ridge;
    }
    Ok(IrlsOutput {
        beta,
        mu,
        information,
        iterations,
        converged,
        max_score,
        deviance,
    })
}

fn check_response(y: &[f64], x: &DesignMatrix) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(Error::Validation(format!(
            "response has {} rows, design has {}",
            y.len(),
            x.nrows()
        )));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Validation("binary response must be 0/1".into()));
    }
    if x.nrows() <= x.ncols() {
        return Err(Error::TooFewObservations {
            n: x.nrows(),
            p: x.ncols(),
        });
    }
    Ok(())
}

fn invert(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::Singular("information matrix"))
}

/// Maximum-likelihood logistic regression; covariance is the inverse
/// information at the optimum.
pub fn fit_logistic(x: &DesignMatrix, y: &[f64], opts: &FitOptions) -> Result<ModelFit> {
    check_response(y, x)?;
    let out = irls(x.matrix(), y, Link::Logit, opts, 0.0)?;

    let worst = (1..out.beta.len()).max_by(|&a, &b| out.beta[a].abs().total_cmp(&out.beta[b].abs()));
    let separated = |j: usize| Error::Separation {
        term: x.column_names()[j].clone(),
        value: out.beta[j],
    };
    if !out.converged {
        if let Some(j) = (1..out.beta.len()).chain(0..1).find(|&j| out.beta[j].abs() > opts.separation_threshold) {
            return Err(separated(j));
        }
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            max_score: out.max_score,
            deviance: out.deviance,
        });
    }
    // Separated data can also "converge" by driving fitted values to 0 or 1.
    if let Some(j) = worst {
        let saturated = out.mu.iter().any(|&m| !(1e-8..=1.0 - 1e-8).contains(&m));
        if out.beta[j].abs() > opts.separation_threshold && saturated {
            return Err(separated(j));
        }
    }

    Ok(ModelFit {
        family: FamilyKind::Logistic,
        coefficients: out.beta.iter().copied().collect(),
        covariance: invert(&out.information)?,
        column_names: x.column_names().to_vec(),
        exposure_columns: x.exposure_columns().to_vec(),
        n_used: x.nrows(),
        converged: true,
        iterations: out.iterations,
        max_abs_score: out.max_score,
        ci_level: opts.ci_level,
        residual_variance: None,
    })
}

/// Poisson log-link regression on a binary response with the HC0 sandwich
/// covariance: bread = I(β̂)⁻¹, meat = Σ (yᵢ − μᵢ)² xᵢxᵢᵀ.
pub fn fit_modified_poisson(x: &DesignMatrix, y: &[f64], opts: &FitOptions) -> Result<ModelFit> {
    check_response(y, x)?;
    let out = irls(x.matrix(), y, Link::Log, opts, 0.0)?;
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            max_score: out.max_score,
            deviance: out.deviance,
        });
    }
    let bread = invert(&out.information)?;
    let resid: Vec<f64> = y.iter().zip(&out.mu).map(|(yi, mi)| yi - mi).collect();
    let resid2: Vec<f64> = resid.iter().map(|r| r * r).collect();
    let meat = weighted_crossprod(x.matrix(), &resid2);
    let covariance = &bread * meat * &bread;

    Ok(ModelFit {
        family: FamilyKind::PoissonRobust,
        coefficients: out.beta.iter().copied().collect(),
        covariance,
        column_names: x.column_names().to_vec(),
        exposure_columns: x.exposure_columns().to_vec(),
        n_used: x.nrows(),
        converged: true,
        iterations: out.iterations,
        max_abs_score: out.max_score,
        ci_level: opts.ci_level,
        residual_variance: None,
    })
}

/// Max |score| of a fit, recomputed from scratch (for invariant checks).
pub fn score_max(x: &DesignMatrix, y: &[f64], fit: &ModelFit) -> f64 {
    let link = match fit.family {
        FamilyKind::Logistic => Link::Logit,
        FamilyKind::PoissonRobust => Link::Log,
        FamilyKind::Linear => {
            let beta = DVector::from_column_slice(&fit.coefficients);
            let resid = DVector::from_column_slice(y) - x.matrix() * beta;
            return x.matrix().tr_mul(&resid).amax();
        }
    };
    let beta = DVector::from_column_slice(&fit.coefficients);
    let eta = x.matrix() * beta;
    let resid = DVector::from_iterator(
        y.len(),
        y.iter().zip(eta.iter()).map(|(&yi, &e)| yi - link.mean(e)),
    );
    x.matrix().tr_mul(&resid).amax()
}
