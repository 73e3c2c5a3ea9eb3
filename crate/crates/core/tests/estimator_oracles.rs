//! Oracle checks for the bias-correction closed forms: an explicit Monte
//! Carlo bootstrap against `B̂∞`/`V̂∞`, and a brute-force grid scan of the
//! mse quadratic against the λ fixed point.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shopmatch_core::estimator::{
    bootstrap_moments, optimize_lambda, ErrorModel, Mat2,
};

/// A random row-stochastic matrix with a dominant diagonal, the shape of a
/// usable classifier.
fn random_model(rng: &mut ChaCha8Rng) -> ErrorModel {
    loop {
        let p11: f64 = rng.random_range(0.55..0.98);
        let p00: f64 = rng.random_range(0.55..0.98);
        let p = Mat2([[p11, 1.0 - p11], [1.0 - p00, p00]]);
        if let Ok(model) = ErrorModel::new(p) {
            return model;
        }
    }
}

/// Random per-company records (label, turnover) and their aggregates.
fn random_records(rng: &mut ChaCha8Rng, n: usize) -> (Vec<(usize, f64)>, [f64; 2], [f64; 2]) {
    let mut records = Vec::with_capacity(n);
    let mut y = [0.0f64; 2];
    let mut k = [0.0f64; 2];
    for _ in 0..n {
        let class = usize::from(!rng.random_bool(0.3));
        let turnover: f64 = rng.random_range(10.0..5_000.0);
        records.push((class, turnover));
        y[class] += turnover;
        k[class] += turnover * turnover;
    }
    (records, y, k)
}

/// An instance whose bias components stand clear of the Monte Carlo noise
/// floor at the given replication count, so a 1% relative comparison is
/// meaningful rather than a coin flip.
fn measurable_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    replications: usize,
) -> (ErrorModel, Vec<(usize, f64)>, [f64; 2], [f64; 2]) {
    loop {
        let model = random_model(rng);
        let (records, y_hat, k_hat) = random_records(rng, n);
        let (bias, variance) = bootstrap_moments(&model, y_hat, k_hat);
        let r = replications as f64;
        let ok = (0..2).all(|i| {
            3.0 * (variance.0[i][i] / r).sqrt() <= 0.005 * bias[i].abs()
        });
        if ok {
            return (model, records, y_hat, k_hat);
        }
    }
}

/// Explicit bootstrap: redraw every label from row P[ŝ_i] and accumulate the
/// replicated totals.
fn monte_carlo_bootstrap(
    model: &ErrorModel,
    records: &[(usize, f64)],
    y_hat: [f64; 2],
    replications: usize,
    rng: &mut ChaCha8Rng,
) -> ([f64; 2], Mat2) {
    let mut sum = [0.0f64; 2];
    let mut sum_sq = [[0.0f64; 2]; 2];
    for _ in 0..replications {
        let mut replicate = [0.0f64; 2];
        for &(class, turnover) in records {
            let stay = model.p.0[class][class];
            let new_class = if rng.random_bool(stay) { class } else { 1 - class };
            replicate[new_class] += turnover;
        }
        sum[0] += replicate[0];
        sum[1] += replicate[1];
        for i in 0..2 {
            for j in 0..2 {
                sum_sq[i][j] += replicate[i] * replicate[j];
            }
        }
    }
    let r = replications as f64;
    let mean = [sum[0] / r, sum[1] / r];
    let mut cov = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            cov[i][j] = (sum_sq[i][j] - r * mean[i] * mean[j]) / (r - 1.0);
        }
    }
    ([mean[0] - y_hat[0], mean[1] - y_hat[1]], Mat2(cov))
}

#[test]
fn closed_forms_match_monte_carlo_bootstrap() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_16);
    let replications = 200_000;
    for instance in 0..20 {
        let (model, records, y_hat, k_hat) = measurable_instance(&mut rng, 200, replications);
        let (b_closed, v_closed) = bootstrap_moments(&model, y_hat, k_hat);
        let (b_mc, v_mc) = monte_carlo_bootstrap(&model, &records, y_hat, replications, &mut rng);

        let b_total: f64 = b_closed.iter().map(|x| x.abs()).sum();
        for i in 0..2 {
            if b_closed[i].abs() >= 1e-3 * b_total {
                let rel = (b_mc[i] - b_closed[i]).abs() / b_closed[i].abs();
                assert!(
                    rel < 0.01,
                    "instance {instance}: bias[{i}] MC {} vs closed {} (rel {rel:.4})",
                    b_mc[i],
                    b_closed[i]
                );
            }
        }
        let v_total: f64 = v_closed.0.iter().flatten().map(|x| x.abs()).sum();
        for i in 0..2 {
            for j in 0..2 {
                if v_closed.0[i][j].abs() >= 1e-3 * v_total {
                    let rel =
                        (v_mc.0[i][j] - v_closed.0[i][j]).abs() / v_closed.0[i][j].abs();
                    assert!(
                        rel < 0.01,
                        "instance {instance}: V[{i}][{j}] MC {} vs closed {} (rel {rel:.4})",
                        v_mc.0[i][j],
                        v_closed.0[i][j]
                    );
                }
            }
        }
    }
}

/// Independent evaluation of the mse quadratic at one λ, written out in
/// scalar arithmetic: squared bias of the blend plus its variance.
fn mse_at(model: &ErrorModel, omega: Mat2, b_converged: [f64; 2], lambda: f64) -> f64 {
    let p = model.p.0;
    let q = model.q.0;
    // A = Pᵀ − I, W = A Ω Aᵀ, all 2×2 by hand.
    let a = [
        [p[0][0] - 1.0, p[1][0]],
        [p[0][1], p[1][1] - 1.0],
    ];
    let ao = [
        [
            a[0][0] * omega.0[0][0] + a[0][1] * omega.0[1][0],
            a[0][0] * omega.0[0][1] + a[0][1] * omega.0[1][1],
        ],
        [
            a[1][0] * omega.0[0][0] + a[1][1] * omega.0[1][0],
            a[1][0] * omega.0[0][1] + a[1][1] * omega.0[1][1],
        ],
    ];
    let w = [
        [
            ao[0][0] * a[0][0] + ao[0][1] * a[0][1],
            ao[0][0] * a[1][0] + ao[0][1] * a[1][1],
        ],
        [
            ao[1][0] * a[0][0] + ao[1][1] * a[0][1],
            ao[1][0] * a[1][0] + ao[1][1] * a[1][1],
        ],
    ];
    let m1 = (a[0][0] * b_converged[0] + a[0][1] * b_converged[1]).powi(2);
    let qtq = [
        [
            q[0][0] * q[0][0] + q[1][0] * q[1][0],
            q[0][0] * q[0][1] + q[1][0] * q[1][1],
        ],
        [
            q[0][1] * q[0][0] + q[1][1] * q[1][0],
            q[0][1] * q[0][1] + q[1][1] * q[1][1],
        ],
    ];
    let m2 = w[0][0] * qtq[0][0] + w[0][1] * qtq[1][0];
    let qsym = [
        [q[0][0], 0.5 * (q[0][1] + q[1][0])],
        [0.5 * (q[1][0] + q[0][1]), q[1][1]],
    ];
    let m3 = w[0][0] * qsym[0][0] + w[0][1] * qsym[1][0];
    let m4 = w[0][0];
    (1.0 - lambda).powi(2) * m1 + m4 + 2.0 * lambda * (m3 - m4)
        + lambda * lambda * (m2 - 2.0 * m3 + m4)
}

#[test]
fn lambda_matches_grid_scan_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    for instance in 0..50 {
        let model = random_model(&mut rng);
        let (_, y_hat, k_hat) = random_records(&mut rng, 60);
        let result = optimize_lambda(&model, y_hat, k_hat, 1e-9, 100).unwrap();
        let (b0, omega) = bootstrap_moments(&model, y_hat, k_hat);
        let mix = |lambda: f64| -> [f64; 2] {
            let q = model.q.0;
            [
                b0[0] + lambda * ((q[0][0] - 1.0) * b0[0] + q[0][1] * b0[1]),
                b0[1] + lambda * (q[1][0] * b0[0] + (q[1][1] - 1.0) * b0[1]),
            ]
        };
        let b_converged = mix(result.lambda);

        let mut best_lambda = 0.0;
        let mut best_mse = f64::INFINITY;
        for step in 0..=1000 {
            let lambda = step as f64 / 1000.0;
            let mse = mse_at(&model, omega, b_converged, lambda);
            if mse < best_mse {
                best_mse = mse;
                best_lambda = lambda;
            }
        }
        assert!(
            (best_lambda - result.lambda).abs() <= 2e-3,
            "instance {instance}: grid argmin {best_lambda} vs iteration {}",
            result.lambda
        );
    }
}

#[test]
fn lambda_zero_for_reported_error_matrix_at_table_scale() {
    // The published error matrix with totals at the reported scale
    // (millions) yields λ = 0: the turnover distribution is highly skewed,
    // so the squared-turnover scatter is dominated by a handful of large
    // filers and the variance term dominates the squared bias.
    let model = shopmatch_core::estimator::estimate_error_matrix(8, 4, 62, 5).unwrap();
    for (y1, y0) in [(495.0, 12_000.0), (586.0, 14_000.0), (667.0, 16_000.0)] {
        for effective in [(4.0, 20.0), (2.0, 10.0), (1.0, 5.0)] {
            let k = [y1 * y1 / effective.0, y0 * y0 / effective.1];
            let result = optimize_lambda(&model, [y1, y0], k, 1e-6, 100).unwrap();
            assert_eq!(
                result.lambda, 0.0,
                "expected zero lambda for ŷ = {y1}, k̂ = {k:?}"
            );
        }
    }
}

/// The fixed point is a contraction in practice; the rare slow cases (the
/// contraction factor approaches 1 near certain error matrices) exceed the
/// 100-iteration cap and surface as errors carrying their trajectory.
/// Measured anchor at this seed: 4 of 10,000.
#[test]
fn lambda_iteration_converges_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut failures: Vec<Vec<f64>> = Vec::new();
    for _ in 0..10_000 {
        let model = random_model(&mut rng);
        let (_, y_hat, k_hat) = random_records(&mut rng, 20);
        if let Err(shopmatch_core::estimator::EstimatorError::NoConvergence {
            trajectory, ..
        }) = optimize_lambda(&model, y_hat, k_hat, 1e-6, 100)
        {
            failures.push(trajectory);
        }
    }
    for (i, trajectory) in failures.iter().enumerate() {
        let tail: Vec<f64> = trajectory.iter().rev().take(3).copied().collect();
        println!("slow case {i}: {} steps, λ tail {tail:?}", trajectory.len());
    }
    assert!(
        failures.len() <= 4,
        "{} of 10000 inputs failed to converge (anchor: 4)",
        failures.len()
    );
}
