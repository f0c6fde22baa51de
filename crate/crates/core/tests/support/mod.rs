//! Oracles shared by the integration tests. They deliberately avoid the
//! crate's own linear algebra so agreement is a cross-check rather than a
//! tautology.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ncpf::model::{random_model, QuadraticMeasurementModel};
use ncpf::numerics::{Covariance, RngStream};
use ncpf::qbp::PhiOperator;

pub fn to_na(phi: &PhiOperator) -> Vec<DMatrix<f64>> {
    let m = phi.order();
    phi.matrices()
        .iter()
        .map(|p| DMatrix::from_row_slice(m, m, p.as_slice()))
        .collect()
}

/// h(x) evaluated term by term in plain loops.
pub fn direct_measurement(model: &QuadraticMeasurementModel, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..model.measurement_dim())
        .map(|i| {
            let q = model.q()[i].as_matrix();
            let mut v = model.a()[i];
            for k in 0..n {
                v += model.b()[(i, k)] * x[k];
                for l in 0..n {
                    v += x[k] * q[(k, l)] * x[l];
                }
            }
            v
        })
        .collect()
}

pub fn seeded_model(n: usize, n_meas: usize, noise_var: f64, seed: u64) -> QuadraticMeasurementModel {
    let mut rng = RngStream::new(seed, 0xA11CE);
    random_model(n, n_meas, Covariance::scaled_identity(n_meas, noise_var).unwrap(), &mut rng).unwrap()
}

fn psd_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0)));
    let v = &eig.eigenvectors;
    let p = v * d * v.transpose();
    (&p + p.transpose()) * 0.5
}

/// Euclidean projection onto {X ⪰ 0, X(1,1) = 1}. The optimality conditions
/// give X = Π_PSD(A − ν·e₁e₁ᵀ) for the scalar ν at which the corner equals 1;
/// the corner is nonincreasing in ν, so ν is found by bisection.
pub fn project_psd_corner(a: &DMatrix<f64>, nu_hint: f64) -> (DMatrix<f64>, f64) {
    let corner = |nu: f64| {
        let mut b = a.clone();
        b[(0, 0)] -= nu;
        let p = psd_part(&b);
        (p[(0, 0)] - 1.0, p)
    };
    let mut step = 1e-3_f64.max(nu_hint.abs() * 1e-3);
    let (mut lo, mut hi) = (nu_hint - step, nu_hint + step);
    while corner(lo).0 < 0.0 {
        step *= 4.0;
        lo -= step;
    }
    step = 1e-3_f64.max(nu_hint.abs() * 1e-3);
    while corner(hi).0 > 0.0 {
        step *= 4.0;
        hi += step;
    }
    let mut best = corner(0.5 * (lo + hi));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (f, p) = corner(mid);
        best = (f, p);
        if f.abs() < 1e-13 || hi - lo < 1e-15 * (1.0 + mid.abs()) {
            let mut x = best.1;
            x[(0, 0)] = 1.0;
            return (x, mid);
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = best.1;
    x[(0, 0)] = 1.0;
    (x, 0.5 * (lo + hi))
}

/// Objective Tr(X) + λ·(y − H(X))ᵀR⁻¹(y − H(X)).
pub fn reference_objective(phi: &[DMatrix<f64>], y: &[f64], r_inv: &DMatrix<f64>, lambda: f64, x: &DMatrix<f64>) -> f64 {
    let resid = DVector::from_iterator(y.len(), phi.iter().zip(y).map(|(p, yi)| yi - p.dot(x)));
    x.trace() + lambda * (resid.transpose() * r_inv * &resid)[(0, 0)]
}

/// Accelerated projected gradient with adaptive restart for the μ = 0
/// problem; returns the best objective seen.
pub fn fista_reference(phi: &PhiOperator, y: &[f64], noise: &Covariance, lambda: f64, max_iter: usize) -> f64 {
    let ps = to_na(phi);
    let m = phi.order();
    let r_inv = DMatrix::from_row_slice(noise.dim(), noise.dim(), noise.to_matrix().as_slice())
        .try_inverse()
        .unwrap();
    // Lipschitz constant of the gradient: 2λ·‖G R⁻¹ Gᵀ‖ with G the stacked Φ.
    let g = DMatrix::from_fn(ps.len(), m * m, |i, k| ps[i][(k / m, k % m)]);
    let hess = &g.transpose() * &r_inv * &g * (2.0 * lambda);
    let lip = SymmetricEigen::new((&hess + hess.transpose()) * 0.5).eigenvalues.max().max(1e-12);
    let step = 1.0 / lip;

    let grad = |x: &DMatrix<f64>| {
        let resid = DVector::from_iterator(y.len(), ps.iter().zip(y).map(|(p, yi)| yi - p.dot(x)));
        let w = &r_inv * resid;
        let mut gm = DMatrix::identity(m, m);
        for (p, wi) in ps.iter().zip(w.iter()) {
            gm -= p * (2.0 * lambda * wi);
        }
        gm
    };
    let mut x = DMatrix::zeros(m, m);
    x[(0, 0)] = 1.0;
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut nu = 0.0;
    let mut best = reference_objective(&ps, y, &r_inv, lambda, &x);
    let mut last = best;
    for k in 0..max_iter {
        let (x_new, nu_new) = project_psd_corner(&(&z - grad(&z) * step), nu);
        nu = nu_new;
        let f = reference_objective(&ps, y, &r_inv, lambda, &x_new);
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if f > last {
            // Restart momentum.
            t = 1.0;
            z = x_new.clone();
        } else {
            z = &x_new + (&x_new - &x) * ((t - 1.0) / t_new);
            t = t_new;
        }
        x = x_new;
        if k > 100 && (last - f).abs() <= 1e-13 * f.abs().max(1.0) && f <= best {
            best = best.min(f);
            break;
        }
        last = f;
        best = best.min(f);
    }
    best
}

/// Nonzero value drawn from the tracking scenario's prior N(0, 0.09),
/// rejecting draws too close to zero to count as support.
pub fn prior_amplitude(rng: &mut RngStream) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let v = 0.3 * z;
        if v.abs() >= 0.05 {
            return v;
        }
    }
}

/// Random n=10, N=8 model with noiseless data from a sparse truth. `k`
/// nonzero entries at distinct random indices, returned in draw order.
pub fn sparse_instance(seed: u64, k: usize) -> (QuadraticMeasurementModel, Vec<f64>, Vec<usize>) {
    use rand::seq::index::sample;
    let model = seeded_model(10, 8, 1e-4, seed);
    let mut rng = RngStream::new(seed, 0x5EED);
    let idx = sample(&mut rng, 10, k).into_vec();
    let mut x = vec![0.0; 10];
    for &i in &idx {
        x[i] = prior_amplitude(&mut rng);
    }
    (model, x, idx)
}
