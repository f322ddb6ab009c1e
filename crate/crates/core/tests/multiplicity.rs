use proptest::prelude::*;

use outwide::glm::two_sided_p;
use outwide::multiplicity::{
    adjust_bonferroni_holm, holm, null_rejection_interval, romano_wolf, ResidualResampler,
};
use outwide::rng::{domain, stream};
use outwide::simulate::correlated_outcomes;

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|j| format!("y{j}")).collect()
}

proptest! {
    #[test]
    fn rejection_sets_are_nested(p in prop::collection::vec(0.0..=1.0f64, 1..40), alpha in 0.001..0.2f64) {
        let r = adjust_bonferroni_holm(&labels(p.len()), &p, alpha).unwrap();
        for (i, &raw) in p.iter().enumerate() {
            let bonf = r.bonferroni_rejects(i);
            let holm = r.holm_adjusted[i] < alpha;
            let nominal = raw < alpha;
            prop_assert!(!bonf || holm, "Bonferroni rejects {i} but Holm does not");
            prop_assert!(!holm || nominal, "Holm rejects {i} but nominal does not");
        }
        prop_assert!(r.rejected_bonferroni <= r.rejected_holm && r.rejected_holm <= r.rejected_nominal);
    }

    #[test]
    fn holm_adjusted_bounds(p in prop::collection::vec(0.0..=1.0f64, 1..40)) {
        let k = p.len() as f64;
        let adj = holm(&p).unwrap();
        for (raw, a) in p.iter().zip(&adj) {
            prop_assert!(*a >= *raw && *a <= (raw * k).min(1.0) + 1e-15);
        }
        // Monotone in the order of the raw p-values.
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        for w in idx.windows(2) {
            prop_assert!(adj[w[0]] <= adj[w[1]]);
        }
    }
}

fn engine(n: usize, k: usize, rho: f64, effects: &[f64], seed: u64) -> ResidualResampler {
    let mut rng = stream(seed, domain::SIMULATE, 0);
    let (x, ys) = correlated_outcomes(n, k, rho, effects, &mut rng);
    ResidualResampler::new(&x, 1, &ys).unwrap()
}

#[test]
fn resampling_is_deterministic() {
    let e = engine(300, 6, 0.4, &[0.2], 1);
    let t = e.observed_t();
    assert_eq!(romano_wolf(&e, &t, 300, 9).unwrap(), romano_wolf(&e, &t, 300, 9).unwrap());
    assert_eq!(
        null_rejection_interval(&e, &t, 0.05, 600, 9).unwrap(),
        null_rejection_interval(&e, &t, 0.05, 600, 9).unwrap()
    );
    assert_ne!(romano_wolf(&e, &t, 300, 9).unwrap(), romano_wolf(&e, &t, 300, 10).unwrap());
}

#[test]
fn identical_outcomes_give_unadjusted_p() {
    let mut rng = stream(2, domain::SIMULATE, 0);
    let (x, ys) = correlated_outcomes(400, 1, 0.0, &[0.1], &mut rng);
    let copies = vec![ys[0].clone(); 5];
    let e = ResidualResampler::new(&x, 1, &copies).unwrap();
    let t = e.observed_t();
    let adj = romano_wolf(&e, &t, 4000, 3).unwrap();
    let raw = two_sided_p(t[0]);
    let mc = (raw * (1.0 - raw) / 4000.0).sqrt();
    for a in adj {
        assert!((a - raw).abs() <= 4.0 * mc + 0.005, "{a} vs {raw}");
    }
}

#[test]
fn expected_rejections_is_k_alpha() {
    let e = engine(200, 17, 0.0, &[], 4);
    let t = e.observed_t();
    let r05 = null_rejection_interval(&e, &t, 0.05, 500, 1).unwrap();
    let r01 = null_rejection_interval(&e, &t, 0.01, 500, 1).unwrap();
    assert!((r05.expected_rejections - 0.85).abs() < 1e-12);
    assert!((r01.expected_rejections - 0.17).abs() < 1e-12);
    assert_eq!(r05.k, 17);
    assert!((r05.excess_hits - (r05.observed_rejections as f64 - 0.85)).abs() < 1e-12);
}

#[test]
fn at_least_j_true_associations() {
    // With T true effects, Bonferroni declaring more than T is a false
    // rejection; it must happen in at most alpha + 3 MC-se of replicates.
    let (k, t_true, reps, alpha) = (20, 5, 1000, 0.05);
    let effects = [0.15; 5];
    let mut exceed = 0;
    for r in 0..reps {
        let e = engine(500, k, 0.3, &effects, 100 + r);
        let p: Vec<f64> = e.observed_t().iter().map(|&z| two_sided_p(z)).collect();
        let rep = adjust_bonferroni_holm(&labels(k), &p, alpha).unwrap();
        exceed += usize::from(rep.rejected_bonferroni > t_true);
    }
    let rate = exceed as f64 / reps as f64;
    let limit = alpha + 3.0 * (alpha * (1.0 - alpha) / reps as f64).sqrt();
    assert!(rate <= limit, "{rate} > {limit}");
}

#[test]
fn romano_wolf_gains_power_under_correlation() {
    let e = engine(500, 10, 0.9, &[0.2, 0.2, 0.2], 7);
    let t = e.observed_t();
    let p: Vec<f64> = t.iter().map(|&z| two_sided_p(z)).collect();
    let rw = romano_wolf(&e, &t, 1000, 7).unwrap();
    let holm = holm(&p).unwrap();
    // Max-T adjusted p-values never exceed Holm's by more than Monte Carlo noise.
    for (a, h) in rw.iter().zip(&holm) {
        assert!(*a <= h + 0.02, "{a} vs {h}");
    }
}
