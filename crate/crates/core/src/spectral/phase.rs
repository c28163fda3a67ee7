use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::cantor::Alphabet;
use crate::ComplexAmp;

/// `(2*pi)^{-1/2}`.
pub const INV_SQRT_TAU: f64 = 0.398_942_280_401_432_7;

const SERIES_CUTOFF: f64 = 1e-4;

/// Reduces `eta` to `(-pi, pi]`. Exact for integer multiples of the phase.
pub fn reduce_angle(eta: f64) -> f64 {
    let r = eta - TAU * (eta / TAU).round();
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// `(1/M) * sum_{a=0}^{M-1} e^{-i eta a}`.
///
/// Evaluated as a Dirichlet kernel on the reduced angle, which has no
/// cancellation near `eta = 0 mod 2 pi`.
pub fn geometric_phase_sum(base: u32, eta: f64) -> ComplexAmp {
    let r = reduce_angle(eta);
    if base <= 1 || r == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let m = base as f64;
    let ratio = (m * r / 2.0).sin() / (m * (r / 2.0).sin());
    Complex64::from_polar(ratio, -r * (m - 1.0) / 2.0)
}

/// Phase average of an alphabet: `(1/A) * sum_{a in alphabet} e^{-i eta a}`.
pub fn alphabet_average(alphabet: &Alphabet, eta: f64) -> ComplexAmp {
    let r = reduce_angle(eta);
    let sum: Complex64 = alphabet
        .digits()
        .iter()
        .map(|&a| Complex64::from_polar(1.0, -r * a as f64))
        .sum();
    sum / alphabet.card() as f64
}

/// Fluctuation of an alphabet's phase average against the full-digit average.
/// Mean zero over all alphabets, modulus at most 2, identically zero on the
/// full alphabet.
pub fn f_eta(alphabet: &Alphabet, eta: f64) -> ComplexAmp {
    if alphabet.is_full() {
        return Complex64::new(0.0, 0.0);
    }
    alphabet_average(alphabet, eta) - geometric_phase_sum(alphabet.base(), eta)
}

/// `i (e^{-i eta} - 1) / (sqrt(2 pi) eta)`, the transform of the normalized
/// indicator of `[0, 1]`; `1/sqrt(2 pi)` at `eta = 0`.
pub fn sinc_factor(eta: f64) -> ComplexAmp {
    if eta.abs() < SERIES_CUTOFF {
        // i(e^{-i eta} - 1)/eta = sum_{k>=1} i (-i)^k eta^{k-1} / k!
        let mut term = Complex64::new(1.0, 0.0); // k = 1
        let mut acc = term;
        for k in 2..=6 {
            term *= Complex64::new(0.0, -eta) / k as f64;
            acc += term;
        }
        return acc * INV_SQRT_TAU;
    }
    let (s, c) = eta.sin_cos();
    // i * (cos - 1 - i sin) = sin + i (cos - 1)
    Complex64::new(s, c - 1.0) * (INV_SQRT_TAU / eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::enumerate_alphabets;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct_geometric(base: u32, eta: f64) -> Complex64 {
        (0..base)
            .map(|a| Complex64::from_polar(1.0, -eta * a as f64))
            .sum::<Complex64>()
            / base as f64
    }

    #[test]
    fn geometric_examples() {
        for m in [1, 2, 5, 64] {
            assert_eq!(geometric_phase_sum(m, 0.0), Complex64::new(1.0, 0.0));
        }
        assert!(geometric_phase_sum(2, PI).norm() < 1e-15);
        assert!(geometric_phase_sum(4, PI).norm() < 1e-15);
        // periodic in eta
        assert!((geometric_phase_sum(5, 1.3) - geometric_phase_sum(5, 1.3 + 6.0 * TAU)).norm() < 1e-12);
    }

    #[test]
    fn geometric_matches_direct_sum_near_and_far_from_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let m = rng.gen_range(1..300);
            let k = rng.gen_range(-5..5) as f64;
            let eta = if rng.gen_bool(0.5) {
                k * TAU + rng.gen_range(-1e-5..1e-5)
            } else {
                rng.gen_range(-50.0..50.0)
            };
            let d = direct_geometric(m, eta);
            assert!((geometric_phase_sum(m, eta) - d).norm() < 1e-11, "M={m} eta={eta}");
        }
    }

    #[test]
    fn f_eta_examples() {
        let a = Alphabet::new(4, vec![0, 2]).unwrap();
        assert!(f_eta(&a, 0.0).norm() < 1e-15);
        assert!((f_eta(&a, PI) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let full = Alphabet::full(7).unwrap();
        for eta in [0.3, 1.0, 2.5, 100.0] {
            assert_eq!(f_eta(&full, eta), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn f_eta_never_exceeds_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100_000 {
            let m = rng.gen_range(2..40);
            let a = crate::cantor::sample_alphabet(m, rng.gen_range(1..=m), &mut rng).unwrap();
            let eta = rng.gen_range(-100.0..100.0);
            assert!(f_eta(&a, eta).norm() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn f_eta_averages_to_zero() {
        let n = enumerate_alphabets(6, 3).unwrap().len() as f64;
        let mean: Complex64 = enumerate_alphabets(6, 3).unwrap().map(|a| f_eta(&a, 2.5)).sum::<Complex64>() / n;
        assert!(mean.norm() < 1e-14);
    }

    #[test]
    fn sinc_examples() {
        assert!((sinc_factor(0.0).re - 0.398_942_3).abs() < 1e-7);
        assert_eq!(sinc_factor(0.0).im, 0.0);
        assert!(sinc_factor(TAU).norm() < 1e-16);
        let expected = 2.0 * 2f64.sqrt() / (PI * TAU.sqrt());
        assert!((sinc_factor(PI / 2.0).norm() - expected).abs() < 1e-15);
        assert!((expected - 0.35917).abs() < 1e-5);
    }

    #[test]
    fn sinc_series_joins_closed_form() {
        for eta in [1e-4f64, -1e-4, 9.999e-5, 1.0001e-4] {
            let closed = Complex64::new(eta.sin(), eta.cos() - 1.0) * (INV_SQRT_TAU / eta);
            assert!((sinc_factor(eta) - closed).norm() < 1e-12);
        }
    }

    #[test]
    fn sinc_envelope() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10_000 {
            let eta: f64 = rng.gen_range(-1e3..1e3);
            let bound = INV_SQRT_TAU * 1f64.min(2.0 / eta.abs());
            assert!(sinc_factor(eta).norm() <= bound + 1e-15);
        }
    }
}
