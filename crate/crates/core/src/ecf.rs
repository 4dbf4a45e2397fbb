//! Empirical characteristic function `(1/n) Σ exp(-i·u·Y_j)`.
//!
//! The real and imaginary accumulators use cascade summation: sample sizes
//! reach 10^6 in the acceptance runs while the selector compares the modulus
//! against exponentially small thresholds.

use num_complex::Complex64;

use crate::models::Sample;

/// An evaluated transform value together with its frequency and sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcfValue {
    pub u: f64,
    pub value: Complex64,
    pub n: usize,
}

/// Pairwise-summed `(Σ cos(u·y), Σ sin(u·y))` over a slice.
pub(crate) fn trig_sums(values: &[f64], u: f64) -> (f64, f64) {
    if values.len() <= 32 {
        let mut c = 0.0;
        let mut s = 0.0;
        for &y in values {
            let (sy, cy) = (u * y).sin_cos();
            c += cy;
            s += sy;
        }
        (c, s)
    } else {
        let mid = values.len() / 2;
        let (c1, s1) = trig_sums(&values[..mid], u);
        let (c2, s2) = trig_sums(&values[mid..], u);
        (c1 + c2, s1 + s2)
    }
}

/// `(1/n) Σ_j exp(-i·u·Y_j)`.
pub fn ecf(sample: &Sample, u: f64) -> Complex64 {
    let n = sample.len() as f64;
    let (c, s) = trig_sums(sample.values(), u);
    Complex64::new(c / n, -s / n)
}

/// Modulus of the empirical transform, clamped into `[0, 1]`.
pub fn ecf_mod(sample: &Sample, u: f64) -> f64 {
    ecf(sample, u).norm().min(1.0)
}

/// Evaluation at several frequencies; elementwise identical to `ecf`.
pub fn ecf_batch(sample: &Sample, us: &[f64]) -> Vec<Complex64> {
    us.iter().map(|&u| ecf(sample, u)).collect()
}

/// `ecf` packaged with its evaluation context.
pub fn ecf_value(sample: &Sample, u: f64) -> EcfValue {
    EcfValue { u, value: ecf(sample, u), n: sample.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sample_stable, NoiseModel, Sample, SignalModel};

    #[test]
    fn zero_frequency_is_exactly_one() {
        let s = Sample::new(vec![3.7, -12.0, 0.25]).unwrap();
        assert_eq!(ecf(&s, 0.0), Complex64::new(1.0, 0.0));
        assert_eq!(ecf_mod(&s, 0.0), 1.0);
    }

    #[test]
    fn two_point_cancellation() {
        let s = Sample::new(vec![0.0, std::f64::consts::PI]).unwrap();
        let v = ecf(&s, 1.0);
        assert!(v.norm() < 1e-16, "|v| = {}", v.norm());
    }

    #[test]
    fn single_point_phase() {
        let s = Sample::new(vec![1.0]).unwrap();
        let v = ecf(&s, std::f64::consts::FRAC_PI_2);
        assert!((v - Complex64::new(0.0, -1.0)).norm() < 1e-16);
    }

    #[test]
    fn batch_bit_identical_to_single_calls() {
        let s = sample_stable(&NoiseModel::new(1.5, 1.0).unwrap(), 4097, 3).unwrap();
        let us = [0.0, 0.5, -1.25, 2.0, 17.0];
        let batch = ecf_batch(&s, &us);
        for (i, &u) in us.iter().enumerate() {
            assert_eq!(batch[i], ecf(&s, u));
        }
        assert!(ecf_batch(&s, &[]).is_empty());
    }

    #[test]
    fn modulus_bounded_by_one() {
        let s = sample_stable(&NoiseModel::new(0.5, 1.0).unwrap(), 10_001, 9).unwrap();
        for &u in &[0.1, 0.9, 3.3, 40.0] {
            let m = ecf_mod(&s, u);
            assert!((0.0..=1.0).contains(&m));
        }
    }

    #[test]
    fn ecf_matches_product_of_exact_transforms() {
        // |Φ̂(u)| near |Φ_L(0.1u)|·e^{-u} for Laplace signal + Cauchy noise
        let signal = SignalModel::laplace5(0.1).unwrap();
        let noise = NoiseModel::new(1.0, 1.0).unwrap();
        let obs = crate::models::simulate_observations(&signal, &noise, 100_000, 17).unwrap();
        let u = 1.0;
        let want = signal.cf(u).norm() * noise.cf(u);
        let got = ecf_mod(&obs, u);
        let band = (2.0 * (2.0f64 / 1e-3).ln() / obs.len() as f64).sqrt();
        assert!((got - want).abs() < band, "got {got}, want {want}, band {band}");
    }
}
