use rand::Rng;

use packdim::fields::{fbm_covariance, sample, sample_with, FieldSpec, SampleMethod};
use packdim::numerics::Seed;

fn empirical_covariance(spec: &FieldSpec, pts: &[Vec<f64>], method: SampleMethod, reps: u64) -> Vec<Vec<f64>> {
    let m = pts.len();
    let mut acc = vec![vec![0.0; m]; m];
    for i in 0..reps {
        let p = sample_with(spec, pts, Seed::new(21).replica(i), method).unwrap();
        for a in 0..m {
            for b in 0..m {
                acc[a][b] += p.values[a][0] * p.values[b][0];
            }
        }
    }
    acc.iter().map(|row| row.iter().map(|v| v / reps as f64).collect()).collect()
}

#[test]
fn sampled_covariance_matches_fbm() {
    let pts: Vec<Vec<f64>> = (1..=8).map(|k| vec![k as f64 / 8.0]).collect();
    let mut worst: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.7] {
        let spec = FieldSpec::new(alpha, 1, 1).unwrap();
        for method in [SampleMethod::Cholesky, SampleMethod::Fft] {
            let emp = empirical_covariance(&spec, &pts, method, 1000);
            for (a, t) in pts.iter().enumerate() {
                for (b, s) in pts.iter().enumerate() {
                    let k = fbm_covariance(t, s, alpha);
                    // error measured against the standard deviations of the two entries
                    let scale = (fbm_covariance(t, t, alpha) * fbm_covariance(s, s, alpha)).sqrt();
                    let rel = (emp[a][b] - k).abs() / scale;
                    worst = worst.max(rel);
                    assert!(rel <= 0.1, "alpha {alpha} {method:?} ({a},{b}): {} vs {k}", emp[a][b]);
                }
            }
        }
    }
    assert!(worst > 0.0);
}

#[test]
fn coordinates_are_uncorrelated() {
    let spec = FieldSpec::new(0.6, 1, 3).unwrap();
    let pts = vec![vec![0.25], vec![0.7]];
    let mut s = [[0.0f64; 3]; 3];
    for i in 0..10_000 {
        let p = sample(&spec, &pts, Seed::new(22).replica(i)).unwrap();
        let v = &p.values[1];
        for a in 0..3 {
            for b in 0..3 {
                s[a][b] += v[a] * v[b];
            }
        }
    }
    for a in 0..3 {
        for b in 0..a {
            let corr = s[a][b] / (s[a][a] * s[b][b]).sqrt();
            assert!(corr.abs() <= 0.05, "corr({a},{b}) = {corr}");
        }
    }
}

fn holder_sup(values: &[f64], times: &[f64], gamma: f64) -> f64 {
    let mut sup: f64 = 0.0;
    for i in 0..times.len() {
        for j in i + 1..times.len() {
            sup = sup.max((values[j] - values[i]).abs() / (times[j] - times[i]).powf(gamma));
        }
    }
    sup
}

#[test]
fn holder_quotient_stable_under_refinement() {
    let spec = FieldSpec::new(0.5, 1, 1).unwrap();
    let fine = 1usize << 14;
    let times: Vec<f64> = (0..fine).map(|k| k as f64 / fine as f64).collect();
    let pts: Vec<Vec<f64>> = times.iter().map(|&t| vec![t]).collect();
    let mut rng = Seed::new(23).rng();
    let path = sample(&spec, &pts, Seed::new(rng.random())).unwrap();
    let x: Vec<f64> = path.values.iter().map(|v| v[0]).collect();
    // the coarse grid is every fourth fine point of the same path
    let coarse_t: Vec<f64> = times.iter().step_by(4).copied().collect();
    let coarse_x: Vec<f64> = x.iter().step_by(4).copied().collect();
    let a = holder_sup(&coarse_x, &coarse_t, 0.4);
    let b = holder_sup(&x, &times, 0.4);
    assert!(a.is_finite() && b.is_finite());
    assert!(b >= a && b <= 2.0 * a, "coarse {a}, fine {b}");
}
