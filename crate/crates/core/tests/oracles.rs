//! Checks the optimized numeric paths against brute-force oracles:
//! plain two-pass statistics, naive outer-product covariance, explicit
//! dense inverses, and the direct closed-form filter weights.

use badbands::cube::{centralize, compute_band_stats, HyperspectralCube};
use badbands::linalg::{covariance, SquareMat};
use badbands::mf::{mf_apply, mf_apply_per_pixel, mf_detector};
use badbands::rng::SplitMix64;

fn random_cube(seed: u64, lines: usize, samples: usize, bands: usize) -> HyperspectralCube {
    let mut rng = SplitMix64::new(seed);
    let planes: Vec<Vec<f64>> = (0..bands)
        .map(|b| {
            let offset = 3.0 * b as f64;
            (0..lines * samples)
                .map(|_| offset + 2.0 * rng.next_normal())
                .collect()
        })
        .collect();
    HyperspectralCube::new(lines, samples, planes).unwrap()
}

/// Gauss-Jordan inverse with partial pivoting, kept deliberately naive.
fn dense_inverse(mat: &SquareMat) -> Vec<Vec<f64>> {
    let n = mat.n();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| mat.at(i, j)).collect()).collect();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        assert!(a[pivot][col].abs() > 0.0, "singular matrix in oracle");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = a[col][col];
        for j in 0..n {
            a[col][j] /= scale;
            inv[col][j] /= scale;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            for j in 0..n {
                a[row][j] -= factor * a[col][j];
                inv[row][j] -= factor * inv[col][j];
            }
        }
    }
    inv
}

fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn band_stats_match_a_two_pass_oracle() {
    let cube = random_cube(101, 9, 13, 6);
    let stats = compute_band_stats(&cube);
    let n = cube.pixels() as f64;
    for b in 0..cube.bands() {
        let plane = cube.plane(b);
        let mean: f64 = plane.iter().sum::<f64>() / n;
        let ss: f64 = plane.iter().map(|v| (v - mean) * (v - mean)).sum();
        assert!((stats.means[b] - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!((stats.centered_norms[b] - ss.sqrt()).abs() <= 1e-10 * ss.sqrt());
        assert!((stats.variances[b] - ss / n).abs() <= 1e-10 * (ss / n));
        assert!(!stats.constant_bands[b]);
    }
}

#[test]
fn covariance_matches_naive_outer_product_accumulation() {
    for &(seed, lines, samples, bands) in
        &[(7u64, 4usize, 10usize, 3usize), (8, 8, 15, 7), (9, 10, 20, 10)]
    {
        let cube = random_cube(seed, lines, samples, bands);
        let stats = compute_band_stats(&cube);
        let centered = centralize(&cube, &stats).unwrap();
        let model = covariance(&centered).unwrap();
        assert_eq!(model.ridge_applied(), 0.0);

        let n = centered.pixels();
        let mut oracle = vec![vec![0.0f64; bands]; bands];
        for p in 0..n {
            let r = centered.pixel_spectrum(p).unwrap();
            for i in 0..bands {
                for j in 0..bands {
                    oracle[i][j] += r[i] * r[j] / n as f64;
                }
            }
        }
        let scale = oracle
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        for i in 0..bands {
            for j in 0..bands {
                assert!(
                    (model.matrix().at(i, j) - oracle[i][j]).abs() <= 1e-12 * scale,
                    "covariance entry ({i},{j}) off: {} vs oracle {}",
                    model.matrix().at(i, j),
                    oracle[i][j]
                );
            }
        }
    }
}

#[test]
fn solve_matches_the_explicit_inverse_oracle() {
    for &(seed, bands) in &[(11u64, 4usize), (12, 7), (13, 10)] {
        let cube = random_cube(seed, 10, 18, bands);
        let stats = compute_band_stats(&cube);
        let centered = centralize(&cube, &stats).unwrap();
        let model = covariance(&centered).unwrap();
        assert_eq!(model.ridge_applied(), 0.0);
        let inv = dense_inverse(model.matrix());

        let mut rng = SplitMix64::new(seed ^ 0xB0B);
        for _ in 0..5 {
            let b: Vec<f64> = (0..bands).map(|_| rng.next_normal()).collect();
            let x = model.solve(&b).unwrap();
            let oracle = mat_vec(&inv, &b);
            let diff: Vec<f64> = x.iter().zip(&oracle).map(|(a, b)| a - b).collect();
            assert!(
                norm(&diff) <= 1e-9 * norm(&oracle),
                "solve disagrees with inverse oracle by {:.3e}",
                norm(&diff) / norm(&oracle)
            );
        }
    }
}

#[test]
fn detector_matches_the_direct_formula() {
    let cube = random_cube(21, 8, 16, 6);
    let stats = compute_band_stats(&cube);
    let centered = centralize(&cube, &stats).unwrap();
    let model = covariance(&centered).unwrap();
    assert_eq!(model.ridge_applied(), 0.0);
    let inv = dense_inverse(model.matrix());

    for pixel in [0, 17, 63] {
        let d = cube.pixel_spectrum(pixel).unwrap();
        let det = mf_detector(&model, &stats.means, &d).unwrap();

        let diff: Vec<f64> = d.iter().zip(&stats.means).map(|(a, b)| a - b).collect();
        let u = mat_vec(&inv, &diff);
        let quad: f64 = diff.iter().zip(&u).map(|(a, b)| a * b).sum();
        let kappa = 1.0 / quad;
        let w_oracle: Vec<f64> = u.iter().map(|v| v * kappa).collect();

        assert!((det.kappa() - kappa).abs() <= 1e-9 * kappa.abs());
        let diff_w: Vec<f64> = det.weights().iter().zip(&w_oracle).map(|(a, b)| a - b).collect();
        assert!(norm(&diff_w) <= 1e-9 * norm(&w_oracle));

        // unit response on the target follows from the kappa choice
        let response: f64 = det.weights().iter().zip(&diff).map(|(a, b)| a * b).sum();
        assert!((response - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn per_pixel_and_band_sum_application_agree() {
    let cube = random_cube(31, 12, 25, 8);
    let stats = compute_band_stats(&cube);
    let centered = centralize(&cube, &stats).unwrap();
    let model = covariance(&centered).unwrap();
    let d = cube.pixel_spectrum(40).unwrap();
    let det = mf_detector(&model, &stats.means, &d).unwrap();

    let by_pixel = mf_apply_per_pixel(&det, &cube).unwrap();
    let by_band = mf_apply(&det, &cube).unwrap();
    let scale = by_pixel
        .values
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    for (a, b) in by_pixel.values.iter().zip(&by_band.values) {
        assert!(
            (a - b).abs() <= 1e-10 * scale,
            "application routes disagree: {a} vs {b}"
        );
    }
    assert_eq!(by_pixel.kappa, by_band.kappa);
}
