mod support;

use ncpf::model::{ProcessModel, SupportMask};
use ncpf::numerics::{Covariance, RngStream};
use ncpf::particle::*;
use proptest::prelude::*;
use rand_distr::{Distribution, Normal, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};
use support::seeded_model;

fn filtered(support: SupportMask, values: Vec<f64>, weights: Vec<f64>) -> ParticleCloud {
    ParticleCloud::from_parts(support, values, weights, 1, CloudKind::Filtered).unwrap()
}

fn off_support_is_zero(cloud: &ParticleCloud) -> bool {
    let s = cloud.support();
    (0..cloud.len()).all(|i| {
        cloud
            .particle_dense(i)
            .iter()
            .enumerate()
            .all(|(j, v)| s.contains(j) || *v == 0.0)
    })
}

#[test]
fn init_with_empty_support_is_zero() {
    let process = ProcessModel::random_walk(6, 0.01, 1.0).unwrap();
    let cloud = init_cloud(&SupportMask::empty(6), &process, 50, &RngStream::new(1, 0)).unwrap();
    assert_eq!(cloud.len(), 50);
    assert!((0..50).all(|i| cloud.particle_dense(i).iter().all(|v| *v == 0.0)));
    assert_eq!(cloud.kind(), CloudKind::Predicted);
    assert_eq!(cloud.t(), 1);
}

#[test]
fn init_single_particle_has_unit_weight() {
    let process = ProcessModel::random_walk(3, 0.01, 1.0).unwrap();
    let cloud = init_cloud(&SupportMask::full(3), &process, 1, &RngStream::new(2, 0)).unwrap();
    assert_eq!(cloud.weights(), &[1.0]);
    assert!(init_cloud(&SupportMask::full(3), &process, 0, &RngStream::new(2, 0)).is_err());
}

#[test]
fn init_mean_matches_prior() {
    let process = ProcessModel::new(
        ncpf::model::Transition::Identity,
        Covariance::scaled_identity(4, 0.01).unwrap(),
        vec![1.0, -2.0, 0.5, 3.0],
        Covariance::diagonal(vec![1.0, 0.25, 4.0, 1.0]).unwrap(),
    )
    .unwrap();
    let s0 = SupportMask::from_indices(4, &[0, 1, 2]).unwrap();
    let m = 100_000;
    let cloud = init_cloud(&s0, &process, m, &RngStream::new(3, 0)).unwrap();
    let mean = cloud.posterior_mean();
    let sd = [1.0, 0.5, 2.0];
    for (i, want) in [1.0, -2.0, 0.5].iter().enumerate() {
        assert!((mean[i] - want).abs() <= 3.0 * sd[i] / (m as f64).sqrt(), "coord {i}: {}", mean[i]);
    }
    assert_eq!(mean[3], 0.0);
}

#[test]
fn identical_particles_keep_uniform_weights() {
    let model = seeded_model(3, 4, 0.1, 4);
    let cloud = ParticleCloud::replicate(SupportMask::full(3), &[0.2, -0.1, 0.4], 8, 1).unwrap();
    let y = model.eval_measurement(&[0.0; 3]).unwrap();
    let f = cloud.measurement_update(&y, &model).unwrap();
    assert!(f.weights().iter().all(|w| (w - 0.125).abs() < 1e-15));
}

#[test]
fn hopeless_particle_gets_zero_weight() {
    let model = seeded_model(2, 3, 1e-4, 5);
    let truth = [0.3, -0.2];
    let y = model.eval_measurement(&truth).unwrap();
    let values = vec![0.3, -0.2, 40.0, 40.0];
    let cloud = ParticleCloud::from_parts(SupportMask::full(2), values, vec![1.0, 1.0], 1, CloudKind::Predicted).unwrap();
    let f = cloud.measurement_update(&y, &model).unwrap();
    assert_eq!(f.weights(), &[1.0, 0.0]);
}

#[test]
fn three_particle_update_matches_hand_normalization() {
    let model = seeded_model(2, 3, 0.5, 6);
    let pts = [[0.1, 0.2], [-0.3, 0.4], [0.05, -0.6]];
    let prior = [0.2, 0.5, 0.3];
    let y = vec![0.4, -1.1, 0.7];
    let cloud = ParticleCloud::from_parts(
        SupportMask::full(2),
        pts.concat(),
        prior.to_vec(),
        1,
        CloudKind::Predicted,
    )
    .unwrap();
    let got = cloud.measurement_update(&y, &model).unwrap();

    // wᵢ ∝ wᵢ⁻·exp(−½‖y − h(xᵢ)‖²/σ²), normalized by hand.
    let unnorm: Vec<f64> = pts
        .iter()
        .zip(prior)
        .map(|(x, w)| {
            let h = support::direct_measurement(&model, x);
            let q: f64 = y.iter().zip(&h).map(|(a, b)| (a - b) * (a - b) / 0.5).sum();
            w * (-0.5 * q).exp()
        })
        .collect();
    let total: f64 = unnorm.iter().sum();
    for (g, u) in got.weights().iter().zip(&unnorm) {
        assert!((g - u / total).abs() <= 1e-12, "{g} vs {}", u / total);
    }
}

#[test]
fn update_requires_predicted_cloud() {
    let model = seeded_model(2, 2, 0.1, 7);
    let cloud = filtered(SupportMask::full(2), vec![0.0; 4], vec![1.0; 2]);
    assert!(matches!(cloud.measurement_update(&[0.0, 0.0], &model), Err(ncpf::Error::Contract(_))));
}

#[test]
fn resample_point_mass_copies_it() {
    let cloud = filtered(SupportMask::full(2), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![1.0, 0.0, 0.0]);
    for scheme in [ResampleScheme::Systematic, ResampleScheme::Multinomial] {
        let r = cloud.resample(&mut RngStream::new(8, 0), scheme).unwrap();
        assert_eq!(r.compact_values(), &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
    }
}

#[test]
fn systematic_resample_of_uniform_is_a_permutation() {
    let values: Vec<f64> = (0..20).map(|i| i as f64).collect();
    let cloud = filtered(SupportMask::full(1), values.clone(), vec![1.0; 20]);
    let r = cloud.resample(&mut RngStream::new(9, 0), ResampleScheme::Systematic).unwrap();
    let mut got = r.compact_values().to_vec();
    got.sort_by(f64::total_cmp);
    assert_eq!(got, values);
    assert!(r.weights().iter().all(|w| *w == 0.05));
}

fn resample_is_unbiased(scheme: ResampleScheme) {
    let mut rng = RngStream::new(10, 0);
    let m = 200;
    let values: Vec<f64> = (0..2 * m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let weights: Vec<f64> = (0..m).map(|_| Normal::new(0.0f64, 1.0).unwrap().sample(&mut rng).exp()).collect();
    let cloud = filtered(SupportMask::from_indices(3, &[0, 2]).unwrap(), values, weights);
    let target = cloud.posterior_mean();
    let reps = 500;
    let means: Vec<Vec<f64>> = (0..reps)
        .map(|r| cloud.resample(&mut RngStream::new(10, 1 + r as u64), scheme).unwrap().posterior_mean())
        .collect();
    for j in [0, 2] {
        let xs: Vec<f64> = means.iter().map(|m| m[j]).collect();
        let mu = xs.iter().sum::<f64>() / reps as f64;
        let sd = (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
        assert!((mu - target[j]).abs() <= 3.0 * sd / (reps as f64).sqrt(), "{scheme:?} coord {j}");
    }
}

#[test]
fn systematic_resample_is_unbiased() {
    resample_is_unbiased(ResampleScheme::Systematic);
}

#[test]
fn multinomial_resample_is_unbiased() {
    resample_is_unbiased(ResampleScheme::Multinomial);
}

#[test]
fn time_update_without_noise_keeps_particles() {
    let process = ProcessModel::random_walk(3, 0.0, 1.0).unwrap();
    let s = SupportMask::from_indices(3, &[0, 1]).unwrap();
    let cloud = filtered(s.clone(), vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 3.0]);
    let p = cloud.time_update(&process, &s, &RngStream::new(11, 0)).unwrap();
    assert_eq!(p.compact_values(), cloud.compact_values());
    assert_eq!(p.weights(), cloud.weights());
    assert_eq!(p.t(), 2);
    assert_eq!(p.kind(), CloudKind::Predicted);
    assert_eq!(p.posterior_mean(), cloud.posterior_mean());

    let shrunk = cloud.time_update(&process, &SupportMask::from_indices(3, &[1]).unwrap(), &RngStream::new(11, 0)).unwrap();
    assert_eq!(shrunk.compact_values(), &[2.0, 4.0]);
}

#[test]
fn time_update_onto_empty_support_zeroes() {
    let process = ProcessModel::random_walk(2, 0.3, 1.0).unwrap();
    let cloud = filtered(SupportMask::full(2), vec![1.0, 2.0, 3.0, 4.0], vec![1.0; 2]);
    let p = cloud.time_update(&process, &SupportMask::empty(2), &RngStream::new(12, 0)).unwrap();
    assert!((0..2).all(|i| p.particle_dense(i) == vec![0.0, 0.0]));
}

#[test]
fn time_update_spread_matches_process_noise() {
    let process = ProcessModel::new(
        ncpf::model::Transition::Identity,
        Covariance::diagonal(vec![0.04, 0.25, 1.0]).unwrap(),
        vec![0.0; 3],
        Covariance::scaled_identity(3, 1.0).unwrap(),
    )
    .unwrap();
    let s = SupportMask::from_indices(3, &[0, 1]).unwrap();
    let m = 100_000;
    let cloud = ParticleCloud::from_parts(s.clone(), [0.5, -1.0].repeat(m), vec![1.0; m], 1, CloudKind::Filtered).unwrap();
    let p = cloud.time_update(&process, &s, &RngStream::new(13, 0)).unwrap();
    for (k, (center, var)) in [(0.5, 0.04), (-1.0, 0.25)].into_iter().enumerate() {
        let xs: Vec<f64> = (0..m).map(|i| p.particle(i)[k]).collect();
        let v = xs.iter().map(|x| (x - center).powi(2)).sum::<f64>() / m as f64;
        // Var of the sample variance ≈ 2σ⁴/m.
        assert!((v - var).abs() <= 3.0 * var * (2.0 / m as f64).sqrt(), "coord {k}: {v}");
    }
    assert!(off_support_is_zero(&p));
}

#[test]
fn posterior_mean_examples() {
    let one = filtered(SupportMask::full(2), vec![0.7, -0.2], vec![3.0]);
    assert_eq!(one.posterior_mean(), vec![0.7, -0.2]);
    let uni = filtered(SupportMask::full(1), vec![1.0, 2.0, 6.0], vec![1.0; 3]);
    assert!((uni.posterior_mean()[0] - 3.0).abs() < 1e-15);
}

#[test]
fn posterior_mean_matches_compensated_sum() {
    let mut rng = RngStream::new(14, 0);
    let m = 10_000;
    let values: Vec<f64> = (0..2 * m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let weights: Vec<f64> = (0..m).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
    let cloud = filtered(SupportMask::from_indices(4, &[1, 3]).unwrap(), values.clone(), weights.clone());
    let total: f64 = weights.iter().sum();
    for (k, idx) in [1, 3].into_iter().enumerate() {
        // Neumaier summation of wᵢxᵢ.
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for i in 0..m {
            let term = weights[i] / total * values[2 * i + k];
            let t = s + term;
            c += if s.abs() >= term.abs() { (s - t) + term } else { (term - t) + s };
            s = t;
        }
        assert!((cloud.posterior_mean()[idx] - (s + c)).abs() <= 1e-13);
    }
}

#[test]
fn ess_examples() {
    let mk = |w: Vec<f64>| filtered(SupportMask::empty(1), vec![], w);
    assert!((mk(vec![1.0; 8]).effective_sample_size() - 8.0).abs() < 1e-12);
    assert_eq!(mk(vec![0.0, 1.0, 0.0]).effective_sample_size(), 1.0);
    assert!((mk(vec![0.75, 0.25]).effective_sample_size() - 1.6).abs() < 1e-15);
}

#[test]
fn support_change_identity_and_remove_all() {
    let process = ProcessModel::random_walk(3, 0.01, 1.0).unwrap();
    let s = SupportMask::from_indices(3, &[0, 2]).unwrap();
    let cloud = filtered(s.clone(), vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0]);
    assert_eq!(cloud.apply_support_change(&s, &process, &RngStream::new(15, 0)).unwrap(), cloud);
    let gone = cloud.apply_support_change(&SupportMask::empty(3), &process, &RngStream::new(15, 0)).unwrap();
    assert!((0..2).all(|i| gone.particle_dense(i) == vec![0.0; 3]));
    assert_eq!(gone.weights(), cloud.weights());
}

#[test]
fn added_coordinate_follows_prior_marginal() {
    let process = ProcessModel::random_walk(3, 0.01, 0.09).unwrap();
    let m = 100_000;
    let s = SupportMask::from_indices(3, &[0]).unwrap();
    let cloud = ParticleCloud::from_parts(s, vec![0.25; m], vec![1.0; m], 1, CloudKind::Predicted).unwrap();
    let grown = cloud
        .apply_support_change(&SupportMask::from_indices(3, &[0, 2]).unwrap(), &process, &RngStream::new(16, 0))
        .unwrap();
    let mut xs: Vec<f64> = (0..m).map(|i| grown.particle(i)[1]).collect();
    assert!((0..m).all(|i| grown.particle(i)[0] == 0.25));
    xs.sort_by(f64::total_cmp);
    let prior = NormalDist::new(0.0, 0.3).unwrap();
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = prior.cdf(*x);
            (f - i as f64 / m as f64).abs().max(((i + 1) as f64 / m as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    // Kolmogorov–Smirnov critical value at the 1% level.
    assert!(d <= 1.628 / (m as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn log_weights_are_shift_invariant_exactly() {
    // Dyadic log-likelihoods and shifts make every subtraction exact.
    let ll: Vec<f64> = [-3.5, -0.25, -10.0, -1.125, -7.75].to_vec();
    let base = normalize_log_weights(&[1.0; 5], &ll).unwrap();
    for c in [-1024.0, -3.0, 0.5, 64.0, 700.0] {
        let shifted: Vec<f64> = ll.iter().map(|l| l + c).collect();
        assert_eq!(normalize_log_weights(&[1.0; 5], &shifted).unwrap(), base);
    }
}

#[test]
fn extreme_log_likelihoods_do_not_underflow() {
    let w = normalize_log_weights(&[0.5, 0.5], &[-1e5, -1e5 - 2.0]).unwrap();
    let want = 1.0 / (1.0 + (-2.0f64).exp());
    assert!((w[0] - want).abs() < 1e-15);
    assert!(normalize_log_weights(&[1.0, 1.0], &[f64::NEG_INFINITY; 2]).is_none());
}

#[test]
fn degenerate_update_is_reported() {
    let model = seeded_model(1, 1, 1e-300, 17);
    let cloud = ParticleCloud::replicate(SupportMask::full(1), &[1e150], 3, 1).unwrap();
    let y = vec![0.0];
    assert!(matches!(cloud.measurement_update(&y, &model), Err(ncpf::Error::Degeneracy { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn updated_weights_are_normalized(seed in any::<u64>(), m in 1usize..200, bits in proptest::collection::vec(any::<bool>(), 4)) {
        let model = seeded_model(4, 3, 0.05, seed % 8);
        let process = ProcessModel::random_walk(4, 0.01, 1.0).unwrap();
        let s = SupportMask::from_bits(bits);
        let cloud = init_cloud(&s, &process, m, &RngStream::new(seed, 1)).unwrap();
        let mut rng = RngStream::new(seed, 2);
        let y: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
        let f = cloud.measurement_update(&y, &model).unwrap();
        let total: f64 = f.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(f.weights().iter().all(|w| *w >= 0.0));
        prop_assert!(off_support_is_zero(&f));
        let r = f.resample(&mut rng, ResampleScheme::Systematic).unwrap();
        prop_assert!(off_support_is_zero(&r));
        let next = SupportMask::from_bits((0..4).map(|i| (seed >> (i + 8)) & 1 == 1).collect());
        let p = r.time_update(&process, &next, &RngStream::new(seed, 3)).unwrap();
        prop_assert!(off_support_is_zero(&p));
        let c = p.apply_support_change(&s, &process, &RngStream::new(seed, 4)).unwrap();
        prop_assert!(off_support_is_zero(&c));
    }

    #[test]
    fn log_weights_shift_invariant(seed in any::<u64>(), c in -500.0f64..500.0) {
        let mut rng = RngStream::new(seed, 5);
        let ll: Vec<f64> = (0..16).map(|_| -30.0 * rand::Rng::random::<f64>(&mut rng)).collect();
        let a = normalize_log_weights(&[1.0; 16], &ll).unwrap();
        let shifted: Vec<f64> = ll.iter().map(|l| l + c).collect();
        let b = normalize_log_weights(&[1.0; 16], &shifted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn ess_within_bounds(ws in proptest::collection::vec(0.0f64..1.0, 1..64)) {
        prop_assume!(ws.iter().any(|w| *w > 0.0));
        let m = ws.len() as f64;
        let ess = filtered(SupportMask::empty(1), vec![], ws).effective_sample_size();
        prop_assert!(ess >= 1.0 - 1e-12 && ess <= m + 1e-9);
    }
}
