//! Truncated randomized Fourier control pulses.
//!
//! A pulse is f(t) = alpha_0 + sum_m (a_m cos(w_m t) + b_m sin(w_m t)) with M
//! frequencies and 2M+1 coefficients stored flat as
//! [alpha_0, a_1, b_1, a_2, b_2, ...]. Frequencies are drawn once and stay
//! frozen while coefficients (and the evolution time) are optimized.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the M pulse frequencies are drawn.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMode {
    /// w_k = 2 pi k (1 + r_k) / T with r_k uniform in [-1/2, 1/2].
    PrincipalHarmonics,
    /// Uniform in [0, w_max], sorted ascending.
    UniformBand,
}

/// Draw M frequencies. `scale` is the evolution time T in principal-harmonics
/// mode and the band edge w_max in uniform-band mode.
pub fn draw_frequencies(
    mode: FrequencyMode,
    m: usize,
    scale: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Config("frequency count M must be at least 1".into()));
    }
    if !(scale > 0.0) {
        return Err(Error::Config(format!(
            "frequency draw scale must be positive, got {scale}"
        )));
    }
    let mut omegas: Vec<f64> = match mode {
        FrequencyMode::PrincipalHarmonics => (1..=m)
            .map(|k| {
                let r: f64 = rng.random_range(-0.5..=0.5);
                2.0 * std::f64::consts::PI * k as f64 * (1.0 + r) / scale
            })
            .collect(),
        FrequencyMode::UniformBand => {
            (0..m).map(|_| rng.random_range(0.0..=scale)).collect()
        }
    };
    if mode == FrequencyMode::UniformBand {
        omegas.sort_by(|a, b| a.total_cmp(b));
    }
    Ok(omegas)
}

/// One control pulse: frozen frequencies plus the coefficient vector being
/// optimized.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseAnsatz {
    omegas: Vec<f64>,
    alphas: Vec<f64>,
}

impl PulseAnsatz {
    pub fn new(omegas: Vec<f64>, alphas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::Config("ansatz needs at least one frequency".into()));
        }
        if alphas.len() != 2 * omegas.len() + 1 {
            return Err(Error::Config(format!(
                "need 2M+1 = {} coefficients for M = {} frequencies, got {}",
                2 * omegas.len() + 1,
                omegas.len(),
                alphas.len()
            )));
        }
        if omegas.iter().chain(&alphas).any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite ansatz parameter".into()));
        }
        Ok(Self { omegas, alphas })
    }

    /// All coefficients zero.
    pub fn zeroed(omegas: Vec<f64>) -> Result<Self> {
        let alphas = vec![0.0; 2 * omegas.len() + 1];
        Self::new(omegas, alphas)
    }

    pub fn m(&self) -> usize {
        self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Number of optimizable coefficients (2M+1).
    pub fn n_coefficients(&self) -> usize {
        self.alphas.len()
    }

    /// Same frequencies, new coefficients.
    pub fn with_alphas(&self, alphas: Vec<f64>) -> Result<Self> {
        Self::new(self.omegas.clone(), alphas)
    }

    /// f(t) = alpha_0 + sum_m (a_m cos(w_m t) + b_m sin(w_m t)).
    pub fn value(&self, t: f64) -> f64 {
        let mut f = self.alphas[0];
        for (m, &w) in self.omegas.iter().enumerate() {
            let (s, c) = (w * t).sin_cos();
            f += self.alphas[2 * m + 1] * c + self.alphas[2 * m + 2] * s;
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_coefficients_give_zero_pulse() {
        let p = PulseAnsatz::zeroed(vec![1.0, 2.0, 3.0]).unwrap();
        for t in [0.0, 0.3, 5.7, -2.0] {
            assert_eq!(p.value(t), 0.0);
        }
    }

    #[test]
    fn constant_term_only() {
        let p = PulseAnsatz::new(vec![4.0], vec![1.0, 0.0, 0.0]).unwrap();
        for t in [0.0, 1.0, 9.9] {
            assert_eq!(p.value(t), 1.0);
        }
    }

    #[test]
    fn single_sine_closed_form() {
        let p =
            PulseAnsatz::new(vec![2.0 * std::f64::consts::PI], vec![0.0, 0.0, 1.0]).unwrap();
        assert!((p.value(0.25) - 1.0).abs() < 1e-15); // sin(pi/2)
    }

    #[test]
    fn coefficient_length_is_enforced() {
        assert!(PulseAnsatz::new(vec![1.0, 2.0], vec![0.0; 4]).is_err());
        assert!(PulseAnsatz::new(vec![1.0, 2.0], vec![0.0; 5]).is_ok());
        assert!(PulseAnsatz::new(vec![], vec![0.0]).is_err());
    }

    #[test]
    fn draws_are_reproducible() {
        for mode in [FrequencyMode::PrincipalHarmonics, FrequencyMode::UniformBand] {
            let a = draw_frequencies(mode, 8, 5.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            let b = draw_frequencies(mode, 8, 5.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn principal_harmonics_stay_in_their_bands() {
        let t = 3.0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = draw_frequencies(FrequencyMode::PrincipalHarmonics, 6, t, &mut rng)
                .unwrap();
            for (k, &wk) in w.iter().enumerate() {
                let base = 2.0 * std::f64::consts::PI * (k + 1) as f64 / t;
                assert!(wk >= 0.5 * base - 1e-12 && wk <= 1.5 * base + 1e-12);
            }
        }
    }

    #[test]
    fn uniform_band_is_sorted_and_bounded() {
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w =
                draw_frequencies(FrequencyMode::UniformBand, 10, 20.0, &mut rng).unwrap();
            assert!(w.windows(2).all(|p| p[0] <= p[1]));
            assert!(w.iter().all(|&x| (0.0..=20.0).contains(&x)));
        }
    }

    #[test]
    fn invalid_draw_parameters_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(draw_frequencies(FrequencyMode::UniformBand, 0, 20.0, &mut rng).is_err());
        assert!(draw_frequencies(FrequencyMode::UniformBand, 3, 0.0, &mut rng).is_err());
        assert!(
            draw_frequencies(FrequencyMode::PrincipalHarmonics, 3, -1.0, &mut rng).is_err()
        );
    }

    #[test]
    fn mode_names_serialize_snake_case() {
        assert_eq!(
            serde_json::to_string(&FrequencyMode::UniformBand).unwrap(),
            "\"uniform_band\""
        );
        let m: FrequencyMode = serde_json::from_str("\"principal_harmonics\"").unwrap();
        assert_eq!(m, FrequencyMode::PrincipalHarmonics);
    }

    /// Compensated per-term reference summation; also returns sum of
    /// absolute term values (the summation's condition scale).
    fn pulse_reference(alphas: &[f64], omegas: &[f64], t: f64) -> (f64, f64) {
        let mut terms = vec![alphas[0]];
        for (m, &w) in omegas.iter().enumerate() {
            terms.push(alphas[2 * m + 1] * (w * t).cos());
            terms.push(alphas[2 * m + 2] * (w * t).sin());
        }
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &x in &terms {
            let y = x - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
        }
        (sum, terms.iter().map(|x| x.abs()).sum())
    }

    proptest! {
        #[test]
        fn pulse_matches_compensated_summation(
            m in 1usize..12,
            seed in 0u64..1000,
            t in 0.0f64..10.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let omegas: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..=20.0)).collect();
            let alphas: Vec<f64> =
                (0..2 * m + 1).map(|_| rng.random_range(-100.0..=100.0)).collect();
            let p = PulseAnsatz::new(omegas.clone(), alphas.clone()).unwrap();
            let direct = p.value(t);
            let (reference, scale) = pulse_reference(&alphas, &omegas, t);
            prop_assert!((direct - reference).abs() < 1e-13 * (1.0 + scale));
        }
    }
}
