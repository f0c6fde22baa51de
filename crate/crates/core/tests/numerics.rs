mod support;

use nalgebra::{DMatrix, DVector};
use ncpf::numerics::*;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_symmetric(m: usize, rng: &mut RngStream) -> SymmetricMatrix {
    let g = Matrix::from_fn(m, m, |_, _| StandardNormal.sample(rng));
    SymmetricMatrix::symmetrized(g)
}

fn random_spd(m: usize, rng: &mut RngStream) -> Matrix {
    let g = Matrix::from_fn(m, m, |_, _| StandardNormal.sample(rng));
    let mut a = g.matmul(&g.transpose()).unwrap();
    for i in 0..m {
        a[(i, i)] += m as f64;
    }
    SymmetricMatrix::symmetrized(a).into_matrix()
}

fn na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

#[test]
fn eigen_of_diagonal_is_sorted_diagonal() {
    let s = SymmetricMatrix::from_diagonal(&[2.0, -1.0, 5.0]);
    let e = symmetric_eigendecomposition(&s).unwrap();
    assert_eq!(e.values, vec![5.0, 2.0, -1.0]);
    for k in 0..3 {
        let col = e.vectors.column(k);
        assert_eq!(col.iter().filter(|v| v.abs() == 1.0).count(), 1);
        assert_eq!(col.iter().filter(|v| **v == 0.0).count(), 2);
    }
}

#[test]
fn eigen_two_by_two() {
    let s = SymmetricMatrix::new(Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()).unwrap();
    let e = symmetric_eigendecomposition(&s).unwrap();
    assert!((e.values[0] - 3.0).abs() < 1e-14);
    assert!((e.values[1] - 1.0).abs() < 1e-14);
}

#[test]
fn eigen_random_31_reconstructs_and_matches_reference() {
    let mut rng = RngStream::new(11, 0);
    for _ in 0..5 {
        let s = random_symmetric(31, &mut rng);
        let e = symmetric_eigendecomposition(&s).unwrap();
        let back = e.reconstruct();
        let resid = back.as_matrix().sub(s.as_matrix()).unwrap().frobenius_norm();
        assert!(resid <= 1e-9 * s.frobenius_norm());
        let v = na(&e.vectors);
        let orth = (v.transpose() * &v - DMatrix::identity(31, 31)).norm();
        assert!(orth <= 1e-10, "orthogonality {orth}");
        let mut reference: Vec<f64> = nalgebra::SymmetricEigen::new(na(s.as_matrix())).eigenvalues.iter().copied().collect();
        reference.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in e.values.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-10 * s.frobenius_norm());
        }
    }
}

#[test]
fn psd_project_examples() {
    let p = psd_project(&SymmetricMatrix::from_diagonal(&[1.0, -2.0])).unwrap();
    assert_eq!(p.as_slice(), SymmetricMatrix::from_diagonal(&[1.0, 0.0]).as_slice());

    let mut rng = RngStream::new(12, 0);
    let g = Matrix::from_fn(6, 6, |_, _| StandardNormal.sample(&mut rng));
    let psd = SymmetricMatrix::symmetrized(g.matmul(&g.transpose()).unwrap());
    let q = psd_project(&psd).unwrap();
    assert!(q.as_matrix().sub(psd.as_matrix()).unwrap().max_abs() <= 1e-10 * psd.frobenius_norm());
}

#[test]
fn psd_project_beats_random_psd_perturbations() {
    let mut rng = RngStream::new(13, 0);
    let s = random_symmetric(31, &mut rng);
    let p = psd_project(&s).unwrap();
    assert!(symmetric_eigendecomposition(&p).unwrap().min_value() >= -1e-10);
    let dist = |x: &SymmetricMatrix| x.as_matrix().sub(s.as_matrix()).unwrap().frobenius_norm();
    let best = dist(&p);
    for _ in 0..1000 {
        let v: Vec<f64> = (0..31).map(|_| StandardNormal.sample(&mut rng)).collect();
        let scale: f64 = rng.random_range(1e-4..1e-1);
        let mut cand = p.as_matrix().clone();
        for i in 0..31 {
            for j in 0..31 {
                cand[(i, j)] += scale * v[i] * v[j];
            }
        }
        assert!(dist(&SymmetricMatrix::symmetrized(cand)) >= best - 1e-12);
    }
}

#[test]
fn cholesky_examples() {
    let i = Matrix::identity(4);
    assert_eq!(cholesky(&i).unwrap(), i);
    let l = cholesky(&Matrix::from_diagonal(&[4.0, 9.0, 2.0])).unwrap();
    assert_eq!(l, Matrix::from_diagonal(&[2.0, 3.0, 2f64.sqrt()]));

    let mut rng = RngStream::new(14, 0);
    let a = random_spd(20, &mut rng);
    let l = cholesky(&a).unwrap();
    let back = l.matmul(&l.transpose()).unwrap();
    assert!(back.sub(&a).unwrap().frobenius_norm() <= 1e-10 * a.frobenius_norm());
}

#[test]
fn cholesky_rejects_indefinite() {
    let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    assert!(matches!(cholesky(&a), Err(ncpf::Error::NotPositiveDefinite { .. })));
}

#[test]
fn weighted_norm_examples() {
    let cov = Covariance::scaled_identity(3, 1.0).unwrap();
    assert_eq!(weighted_sq_norm(&[0.0; 3], &cov).unwrap(), 0.0);
    assert_eq!(weighted_sq_norm(&[1.0, 2.0, 2.0], &cov).unwrap(), 9.0);
    let cov = Covariance::scaled_identity(2, 0.01).unwrap();
    let r = [0.6, 0.8];
    assert!((weighted_sq_norm(&r, &cov).unwrap() - 100.0).abs() < 1e-12);
}

#[test]
fn logpdf_examples() {
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let cov = Covariance::scaled_identity(1, 1.0).unwrap();
    assert!((gaussian_logpdf(&[0.3], &[0.3], &cov).unwrap() + 0.5 * ln2pi).abs() < 1e-15);
    assert!((gaussian_logpdf(&[1.0], &[0.0], &cov).unwrap() + 0.5 * (1.0 + ln2pi)).abs() < 1e-15);
}

#[test]
fn logpdf_random_full_covariance_matches_reference() {
    let mut rng = RngStream::new(15, 0);
    let a = random_spd(20, &mut rng);
    let y: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mean: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
    let got = gaussian_logpdf(&y, &mean, &Covariance::full(a.clone()).unwrap()).unwrap();

    let an = na(&a);
    let r = DVector::from_iterator(20, y.iter().zip(&mean).map(|(a, b)| a - b));
    let quad = (r.transpose() * an.clone().lu().solve(&r).unwrap())[(0, 0)];
    let log_det = an.lu().determinant().ln();
    let reference = -0.5 * (quad + 20.0 * (2.0 * std::f64::consts::PI).ln() + log_det);
    assert!((got - reference).abs() <= 1e-10 * reference.abs());
}

#[test]
fn logpdf_integrates_to_one() {
    let cov = Covariance::scaled_identity(1, 0.7).unwrap();
    let h = 1e-3;
    let total: f64 = (-20_000..=20_000)
        .map(|k| gaussian_logpdf(&[k as f64 * h], &[0.2], &cov).unwrap().exp() * h)
        .sum();
    assert!((total - 1.0).abs() < 1e-6);
}

#[test]
fn sample_with_zero_covariance_is_mean() {
    let cov = Covariance::scaled_identity(3, 0.0).unwrap();
    let mut rng = RngStream::new(16, 0);
    assert_eq!(gaussian_sample(&[1.0, -2.0, 0.5], &cov, &mut rng).unwrap(), vec![1.0, -2.0, 0.5]);
}

#[test]
fn sample_covariance_matches_target() {
    let target = Matrix::from_rows(&[vec![1.0, 0.5, 0.0], vec![0.5, 2.0, -0.3], vec![0.0, -0.3, 0.5]]).unwrap();
    let cov = Covariance::full(target.clone()).unwrap();
    let mut rng = RngStream::new(17, 0);
    let draws = 100_000;
    let mut acc = [[0.0; 3]; 3];
    for _ in 0..draws {
        let x = gaussian_sample(&[0.0; 3], &cov, &mut rng).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                acc[i][j] += x[i] * x[j];
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            let est = acc[i][j] / draws as f64;
            // Var(xᵢxⱼ) = ΣᵢᵢΣⱼⱼ + Σᵢⱼ² for zero-mean Gaussians.
            let sd = ((target[(i, i)] * target[(j, j)] + target[(i, j)].powi(2)) / draws as f64).sqrt();
            assert!((est - target[(i, j)]).abs() <= 3.0 * sd, "entry ({i},{j}): {est}");
        }
    }
}

#[test]
fn sample_is_deterministic_per_stream() {
    let cov = Covariance::scaled_identity(4, 2.0).unwrap();
    let a = gaussian_sample(&[0.0; 4], &cov, &mut RngStream::new(3, 9)).unwrap();
    let b = gaussian_sample(&[0.0; 4], &cov, &mut RngStream::new(3, 9)).unwrap();
    let c = gaussian_sample(&[0.0; 4], &cov, &mut RngStream::new(3, 10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn distinct_streams_are_uncorrelated() {
    let draws = 50_000;
    let mut a = RngStream::new(1, stream_id(0x11, 4));
    let mut b = RngStream::new(1, stream_id(0x11, 5));
    let mut c = RngStream::new(2, stream_id(0x11, 4));
    let (mut ab, mut ac) = (0.0, 0.0);
    for _ in 0..draws {
        let (x, y, z): (f64, f64, f64) = (StandardNormal.sample(&mut a), StandardNormal.sample(&mut b), StandardNormal.sample(&mut c));
        ab += x * y;
        ac += x * z;
    }
    let bound = 4.0 / (draws as f64).sqrt();
    assert!((ab / draws as f64).abs() < bound);
    assert!((ac / draws as f64).abs() < bound);
}

#[test]
fn stream_counter_restores_position() {
    let mut rng = RngStream::new(5, 6);
    for _ in 0..37 {
        rng.random::<u64>();
    }
    let pos = rng.counter();
    let ahead: Vec<u64> = (0..8).map(|_| rng.random()).collect();
    rng.set_counter(pos);
    let again: Vec<u64> = (0..8).map(|_| rng.random()).collect();
    assert_eq!(ahead, again);
    let mut jumped = RngStream::new(5, 6);
    jumped.set_counter(pos);
    assert_eq!(jumped.random::<u64>(), ahead[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psd_project_is_idempotent(seed in any::<u64>(), m in 1usize..12) {
        let mut rng = RngStream::new(seed, 1);
        let s = random_symmetric(m, &mut rng);
        let p = psd_project(&s).unwrap();
        let pp = psd_project(&p).unwrap();
        prop_assert!(pp.as_matrix().sub(p.as_matrix()).unwrap().max_abs() <= 1e-10 * (1.0 + p.frobenius_norm()));
    }

    #[test]
    fn eigenvalues_sum_to_trace(seed in any::<u64>(), m in 1usize..20) {
        let mut rng = RngStream::new(seed, 2);
        let s = random_symmetric(m, &mut rng);
        let e = symmetric_eigendecomposition(&s).unwrap();
        let sum: f64 = e.values.iter().sum();
        prop_assert!((sum - s.trace()).abs() <= 1e-10 * (1.0 + s.frobenius_norm()));
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn weighted_norm_is_positive_definite(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = RngStream::new(seed, 3);
        let cov = Covariance::full(random_spd(n, &mut rng)).unwrap();
        let r: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        prop_assert!(cov.weighted_sq_norm(&r).unwrap() > 0.0);
        prop_assert_eq!(cov.weighted_sq_norm(&vec![0.0; n]).unwrap(), 0.0);
    }

    #[test]
    fn same_key_same_draws(seed in any::<u64>(), stream in any::<u64>()) {
        let xs: Vec<u64> = (0..4).map({ let mut r = RngStream::new(seed, stream); move |_| r.random() }).collect();
        let ys: Vec<u64> = (0..4).map({ let mut r = RngStream::new(seed, stream); move |_| r.random() }).collect();
        prop_assert_eq!(xs, ys);
    }
}
