mod common;

use common::{random_dataset, rng};
use philasso_core::glm::{gradient, irls_working, linear_predictor, log_likelihood, Dataset, Family};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Gaussian), Just(Family::Logistic)]
}

fn point(p: usize, r: &mut impl Rng) -> Vec<f64> {
    (0..p).map(|_| StandardNormal.sample(r)).collect::<Vec<f64>>()
}

/// Dense Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..k {
            let f = a[r][c] / a[c][c];
            for cc in c..k {
                a[r][cc] -= f * a[c][cc];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), fam in family(), n in 5usize..40, p in 1usize..8) {
        let mut r = rng(seed);
        let (data, _) = random_dataset(n, p, fam, true, &mut r);
        let beta = point(p, &mut r);
        let b0: f64 = r.random_range(-1.0..1.0);
        let g = gradient(&data, &beta, b0).unwrap();
        let h = 1e-5;
        for j in 0..=p {
            let shifted = |s: f64| {
                let mut b = beta.clone();
                let mut i0 = b0;
                if j < p { b[j] += s } else { i0 += s }
                log_likelihood(&data, &b, i0).unwrap()
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let scale = g[j].abs().max(1.0);
            prop_assert!((fd - g[j]).abs() / scale < 1e-6, "coordinate {}: {} vs {}", j, fd, g[j]);
        }
    }

    #[test]
    fn likelihood_is_concave(seed in any::<u64>(), fam in family(), n in 5usize..40, p in 1usize..8, t in 0.0f64..1.0) {
        let mut r = rng(seed);
        let (data, _) = random_dataset(n, p, fam, true, &mut r);
        let a = point(p, &mut r);
        let b = point(p, &mut r);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let la = log_likelihood(&data, &a, 0.2).unwrap();
        let lb = log_likelihood(&data, &b, -0.1).unwrap();
        let lm = log_likelihood(&data, &mid, t * 0.2 - (1.0 - t) * 0.1).unwrap();
        prop_assert!(lm >= t * la + (1.0 - t) * lb - 1e-9 * (la.abs() + lb.abs()).max(1.0));
    }

    #[test]
    fn row_order_does_not_matter(seed in any::<u64>(), fam in family(), n in 2usize..40, p in 1usize..8) {
        let mut r = rng(seed);
        let (data, _) = random_dataset(n, p, fam, true, &mut r);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let shuffled = data.subset(&perm);
        let beta = point(p, &mut r);
        let l1 = log_likelihood(&data, &beta, 0.3).unwrap();
        let l2 = log_likelihood(&shuffled, &beta, 0.3).unwrap();
        prop_assert!((l1 - l2).abs() <= 1e-10 * l1.abs().max(1.0));
        let g1 = gradient(&data, &beta, 0.3).unwrap();
        let g2 = gradient(&shuffled, &beta, 0.3).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn irls_step_is_a_newton_step(seed in any::<u64>(), n in 20usize..60, p in 1usize..5) {
        let mut r = rng(seed);
        let (data, _) = random_dataset(n, p, Family::Logistic, false, &mut r);
        let beta: Vec<f64> = point(p, &mut r).into_iter().map(|b| b * 0.3).collect();
        let eta = linear_predictor(data.x(), &beta, 0.0).unwrap();
        let st = irls_working(&data, &eta).unwrap();
        let x = data.x();
        let mut xtwx = vec![vec![0.0; p]; p];
        let mut xtwz = vec![0.0; p];
        for i in 0..n {
            let w = st.working_weights[i];
            for a in 0..p {
                xtwz[a] += x.get(i, a) * w * st.working_response[i];
                for b in 0..p {
                    xtwx[a][b] += x.get(i, a) * w * x.get(i, b);
                }
            }
        }
        let wls = solve(xtwx.clone(), xtwz);
        let g = gradient(&data, &beta, 0.0).unwrap();
        let delta = solve(xtwx, g);
        for j in 0..p {
            let newton = beta[j] + delta[j];
            prop_assert!((wls[j] - newton).abs() <= 1e-8 * newton.abs().max(1.0));
        }
    }
}

#[test]
fn gaussian_working_quantities_are_trivial() {
    let mut r = rng(5);
    let (data, _) = random_dataset(10, 3, Family::Gaussian, true, &mut r);
    let eta = vec![0.5; 10];
    let st = irls_working(&data, &eta).unwrap();
    assert!(st.working_weights.iter().all(|&w| w == 1.0));
    assert_eq!(st.working_response, data.y());
}

#[test]
fn invalid_logistic_response_is_rejected() {
    let x = philasso_core::Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
    assert!(Dataset::new(x, vec![0.0, 0.5], Family::Logistic, true).is_err());
}
