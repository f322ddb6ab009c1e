use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::quantile_type1;
use crate::error::{Error, Result};
use crate::glm::{check_rank, two_sided_p};
use crate::rng::{domain, stream, StreamRng};

/// Smallest resample count accepted by [`romano_wolf`].
pub const MIN_RW_RESAMPLES: usize = 100;
/// Smallest resample count accepted by [`null_rejection_interval`].
pub const MIN_NULL_RESAMPLES: usize = 500;

/// Joint residual resampling for K linear fits that share one design.
///
/// Each resample draws n row indices with replacement and applies them to
/// the residual matrix as a whole, so the cross-outcome correlation of the
/// residuals carries over to the resampled data. Because least squares is
/// linear in the response, refitting only needs Qᵀe* for the resampled
/// residuals e*, which keeps one resample at O(n·p·K).
#[derive(Debug, Clone)]
pub struct ResidualResampler {
    n: usize,
    p: usize,
    k: usize,
    /// Thin Q factor, row-major n × p.
    q: Vec<f64>,
    /// Row of R⁻¹ belonging to the exposure coefficient.
    rinv_row: Vec<f64>,
    /// √[(XᵀX)⁻¹]_jj.
    rinv_norm: f64,
    /// Residuals, row-major n × K.
    residuals: Vec<f64>,
    estimates: Vec<f64>,
    se: Vec<f64>,
}

impl ResidualResampler {
    /// `responses` holds one complete response vector per outcome, aligned
    /// with the rows of `x`.
    pub fn new(x: &DMatrix<f64>, exposure_index: usize, responses: &[Vec<f64>]) -> Result<Self> {
        let (n, p) = x.shape();
        if responses.is_empty() {
            return Err(Error::Empty("no outcomes to resample".into()));
        }
        if n <= p {
            return Err(Error::TooFewObservations { n, p });
        }
        if exposure_index >= p {
            return Err(Error::Domain(format!("exposure column {exposure_index} out of range")));
        }
        let names: Vec<String> = (0..p).map(|i| format!("x{i}")).collect();
        check_rank(x, &names)?;
        let qr = x.clone().qr();
        let q = qr.q();
        let r = qr.r();
        let rinv = r
            .solve_upper_triangular(&DMatrix::identity(p, p))
            .ok_or(Error::Singular("R factor"))?;
        let rinv_row: Vec<f64> = (0..p).map(|l| rinv[(exposure_index, l)]).collect();
        let rinv_norm = rinv_row.iter().map(|v| v * v).sum::<f64>().sqrt();

        let k = responses.len();
        let mut residuals = vec![0.0; n * k];
        let mut estimates = Vec::with_capacity(k);
        let mut se = Vec::with_capacity(k);
        for (j, y) in responses.iter().enumerate() {
            if y.len() != n {
                return Err(Error::Domain(format!(
                    "response {j} has {} rows, design has {n}",
                    y.len()
                )));
            }
            let yv = nalgebra::DVector::from_column_slice(y);
            let qty = q.tr_mul(&yv);
            let fitted = &q * &qty;
            let mut rss = 0.0;
            for i in 0..n {
                let e = y[i] - fitted[i];
                residuals[i * k + j] = e;
                rss += e * e;
            }
            if !(rss > 0.0) {
                return Err(Error::Singular("residual variance is zero"));
            }
            estimates.push(rinv_row.iter().zip(qty.iter()).map(|(a, b)| a * b).sum());
            se.push((rss / (n - p) as f64).sqrt() * rinv_norm);
        }
        let mut q_rows = vec![0.0; n * p];
        for i in 0..n {
            for l in 0..p {
                q_rows[i * p + l] = q[(i, l)];
            }
        }
        Ok(Self {
            n,
            p,
            k,
            q: q_rows,
            rinv_row,
            rinv_norm,
            residuals,
            estimates,
            se,
        })
    }

    pub fn n_outcomes(&self) -> usize {
        self.k
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn standard_errors(&self) -> &[f64] {
        &self.se
    }

    pub fn observed_t(&self) -> Vec<f64> {
        self.estimates.iter().zip(&self.se).map(|(b, s)| b / s).collect()
    }

    /// Centred exposure t-statistics, (β* − β̂)/se*, for one resample.
    ///
    /// The same quantity is the t-statistic of a refit on data regenerated
    /// with the exposure coefficient forced to zero, so it serves both the
    /// stepdown and the global-null interval.
    fn resample_t(&self, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let (n, p, k) = (self.n, self.p, self.k);
        let mut ss = vec![0.0; k];
        let mut u = vec![0.0; k * p];
        for i in 0..n {
            let src = rng.gen_range(0..n);
            let q_row = &self.q[i * p..(i + 1) * p];
            let e_row = &self.residuals[src * k..(src + 1) * k];
            for (j, &e) in e_row.iter().enumerate() {
                ss[j] += e * e;
                let uj = &mut u[j * p..(j + 1) * p];
                for (acc, &qv) in uj.iter_mut().zip(q_row) {
                    *acc += qv * e;
                }
            }
        }
        let dof = (n - p) as f64;
        (0..k)
            .map(|j| {
                let uj = &u[j * p..(j + 1) * p];
                let rss = ss[j] - uj.iter().map(|v| v * v).sum::<f64>();
                if !(rss > 0.0) {
                    return Err(Error::Singular("resampled residual variance is zero"));
                }
                let shift: f64 = self.rinv_row.iter().zip(uj).map(|(a, b)| a * b).sum();
                Ok(shift / ((rss / dof).sqrt() * self.rinv_norm))
            })
            .collect()
    }

    /// `b` resamples of centred t-statistics, one row per resample, in index order.
    pub fn centred_statistics(&self, b: usize, seed: u64, stream_domain: u64) -> Result<Vec<Vec<f64>>> {
        let draws: Vec<Result<Vec<f64>>> = (0..b)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, stream_domain, i as u64);
                self.resample_t(&mut rng).map_err(|e| Error::Resample {
                    index: i,
                    source: Box::new(e),
                })
            })
            .collect();
        draws.into_iter().collect()
    }
}

/// Stepdown max-T adjusted p-values from centred resampled statistics.
pub fn stepdown_max_t(observed_t: &[f64], draws: &[Vec<f64>]) -> Vec<f64> {
    let k = observed_t.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| observed_t[b].abs().total_cmp(&observed_t[a].abs()).then(a.cmp(&b)));
    let mut exceed = vec![0usize; k];
    let mut suffix = vec![0.0f64; k];
    for row in draws {
        let mut m = 0.0f64;
        for s in (0..k).rev() {
            m = m.max(row[order[s]].abs());
            suffix[s] = m;
        }
        for s in 0..k {
            if suffix[s] >= observed_t[order[s]].abs() {
                exceed[s] += 1;
            }
        }
    }
    let mut adjusted = vec![0.0; k];
    let mut running = 0.0f64;
    for s in 0..k {
        running = running.max(exceed[s] as f64 / draws.len() as f64);
        adjusted[order[s]] = running;
    }
    adjusted
}

/// Romano–Wolf adjusted p-values for the exposure coefficients.
///
/// `observed_t` are the test statistics being adjusted (normally
/// `engine.observed_t()`, or pooled statistics after imputation). With a
/// single test the raw normal-reference p-value is returned unchanged.
pub fn romano_wolf(engine: &ResidualResampler, observed_t: &[f64], b: usize, seed: u64) -> Result<Vec<f64>> {
    if b < MIN_RW_RESAMPLES {
        return Err(Error::TooFewResamples {
            needed: MIN_RW_RESAMPLES,
            got: b,
        });
    }
    if observed_t.len() != engine.n_outcomes() {
        return Err(Error::Domain("observed statistics do not match the outcomes".into()));
    }
    if observed_t.len() == 1 {
        return Ok(vec![two_sided_p(observed_t[0])]);
    }
    let draws = engine.centred_statistics(b, seed, domain::RESAMPLE)?;
    Ok(stepdown_max_t(observed_t, &draws))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullIntervalReport {
    pub alpha: f64,
    pub k: usize,
    pub resamples: usize,
    pub expected_rejections: f64,
    pub interval: (usize, usize),
    pub observed_rejections: usize,
    pub excess_hits: f64,
}

impl NullIntervalReport {
    pub fn covers(&self, count: usize) -> bool {
        self.interval.0 <= count && count <= self.interval.1
    }
}

/// Rejection counts at level `alpha` for each global-null resample.
pub fn null_rejection_counts(engine: &ResidualResampler, alpha: f64, b: usize, seed: u64) -> Result<Vec<usize>> {
    let draws = engine.centred_statistics(b, seed, domain::NULL_RESAMPLE)?;
    Ok(draws
        .iter()
        .map(|row| row.iter().filter(|&&t| two_sided_p(t) < alpha).count())
        .collect())
}

/// 95% interval for the number of α-level rejections under the global null.
pub fn null_rejection_interval(
    engine: &ResidualResampler,
    observed_t: &[f64],
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<NullIntervalReport> {
    if b < MIN_NULL_RESAMPLES {
        return Err(Error::TooFewResamples {
            needed: MIN_NULL_RESAMPLES,
            got: b,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let k = engine.n_outcomes();
    if observed_t.len() != k {
        return Err(Error::Domain("observed statistics do not match the outcomes".into()));
    }
    let mut counts: Vec<f64> = null_rejection_counts(engine, alpha, b, seed)?
        .into_iter()
        .map(|c| c as f64)
        .collect();
    counts.sort_by(f64::total_cmp);
    let lo = quantile_type1(&counts, 0.025) as usize;
    let hi = quantile_type1(&counts, 0.975) as usize;
    let observed = observed_t.iter().filter(|&&t| two_sided_p(t) < alpha).count();
    let expected = k as f64 * alpha;
    Ok(NullIntervalReport {
        alpha,
        k,
        resamples: b,
        expected_rejections: expected,
        interval: (lo, hi),
        observed_rejections: observed,
        excess_hits: observed as f64 - expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::StandardNormal;

    fn design(n: usize, seed: u64) -> (DMatrix<f64>, StreamRng) {
        let mut rng = StreamRng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, 3, |_, j| match j {
            0 => 1.0,
            _ => rng.sample::<f64, _>(StandardNormal),
        });
        (x, rng)
    }

    #[test]
    fn observed_statistics_match_ols() {
        let (x, mut rng) = design(60, 1);
        let y: Vec<f64> = (0..60)
            .map(|i| 0.5 * x[(i, 1)] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let engine = ResidualResampler::new(&x, 1, std::slice::from_ref(&y)).unwrap();
        let dm = crate::glm::DesignMatrix::from_matrix(
            x.clone(),
            vec!["(intercept)".into(), "a".into(), "c".into()],
            vec![1],
        )
        .unwrap();
        let fit = crate::glm::fit_linear(&dm, &y, &Default::default()).unwrap();
        let r = fit.exposure();
        assert!((engine.estimates()[0] - r.estimate).abs() < 1e-10);
        assert!((engine.standard_errors()[0] - r.se).abs() < 1e-10);
    }

    #[test]
    fn stepdown_is_monotone_and_bounded() {
        let obs = [3.0, 0.5, 2.0];
        let draws: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64) / 10.0, 0.1, 0.2])
            .collect();
        let p = stepdown_max_t(&obs, &draws);
        assert!(p[0] <= p[2] && p[2] <= p[1]);
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn deterministic_and_minimum_resamples() {
        let (x, mut rng) = design(80, 2);
        let ys: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..80).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let e = ResidualResampler::new(&x, 1, &ys).unwrap();
        let t = e.observed_t();
        let a = romano_wolf(&e, &t, 100, 9).unwrap();
        let b = romano_wolf(&e, &t, 100, 9).unwrap();
        assert_eq!(a, b);
        assert!(matches!(romano_wolf(&e, &t, 99, 9), Err(Error::TooFewResamples { .. })));
        assert!(null_rejection_interval(&e, &t, 0.05, 499, 9).is_err());
        let ni = null_rejection_interval(&e, &t, 0.05, 500, 9).unwrap();
        assert_eq!(ni.expected_rejections, 3.0 * 0.05);
        assert!(ni.interval.0 <= ni.interval.1);
    }

    #[test]
    fn single_outcome_returns_raw() {
        let (x, mut rng) = design(50, 3);
        let y: Vec<f64> = (0..50).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let e = ResidualResampler::new(&x, 1, &[y]).unwrap();
        let t = e.observed_t();
        assert_eq!(romano_wolf(&e, &t, 100, 1).unwrap(), vec![two_sided_p(t[0])]);
    }
}
