//! Absolutely continuous sampling distributions with light tails.

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// Independent coordinates `N(mean_i, std_i²)`.
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
    /// Uniform on `[-half_width, half_width]^dim`.
    UniformCube { half_width: f64 },
    /// Mixture of diagonal gaussians.
    GaussianMixture { components: Vec<MixtureComponent> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Sampling distribution on `ℝ^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub family: Family,
    pub dim: usize,
    /// Tail exponent `δ` of the first-moment tail condition; any value in
    /// `(0, 1)` holds for every family offered here.
    #[serde(default = "default_tail_delta")]
    pub tail_delta: f64,
}

fn default_tail_delta() -> f64 {
    0.5
}

impl DataSpec {
    pub fn standard_gaussian(dim: usize) -> Self {
        Self {
            family: Family::Gaussian {
                mean: vec![0.0; dim],
                std: vec![1.0; dim],
            },
            dim,
            tail_delta: default_tail_delta(),
        }
    }

    pub fn gaussian(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        let dim = mean.len();
        Self {
            family: Family::Gaussian { mean, std },
            dim,
            tail_delta: default_tail_delta(),
        }
        .validated()
    }

    pub fn uniform_cube(dim: usize, half_width: f64) -> Result<Self> {
        Self {
            family: Family::UniformCube { half_width },
            dim,
            tail_delta: default_tail_delta(),
        }
        .validated()
    }

    pub fn gaussian_mixture(components: Vec<MixtureComponent>) -> Result<Self> {
        let dim = components.first().map_or(0, |c| c.mean.len());
        Self {
            family: Family::GaussianMixture { components },
            dim,
            tail_delta: default_tail_delta(),
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if !(self.tail_delta > 0.0 && self.tail_delta < 1.0) {
            return Err(Error::InvalidInput(format!(
                "tail_delta must lie in (0, 1), got {}",
                self.tail_delta
            )));
        }
        let check_gaussian = |mean: &[f64], std: &[f64]| -> Result<()> {
            check_dim(self.dim, mean.len())?;
            check_dim(self.dim, std.len())?;
            if mean.iter().any(|m| !m.is_finite())
                || std.iter().any(|s| !(*s > 0.0 && s.is_finite()))
            {
                return Err(Error::InvalidInput(
                    "gaussian needs finite means and positive stds".into(),
                ));
            }
            Ok(())
        };
        match &self.family {
            Family::Gaussian { mean, std } => check_gaussian(mean, std),
            Family::UniformCube { half_width } => {
                if *half_width > 0.0 && half_width.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "half_width must be positive, got {half_width}"
                    )))
                }
            }
            Family::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidInput(
                        "mixture needs at least one component".into(),
                    ));
                }
                for c in components {
                    check_gaussian(&c.mean, &c.std)?;
                    if !(c.weight > 0.0 && c.weight.is_finite()) {
                        return Err(Error::InvalidInput(
                            "mixture weights must be positive".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }
}

fn draw_gaussian<R: Rng + ?Sized>(rng: &mut R, mean: &[f64], std: &[f64]) -> Vec<f64> {
    mean.iter()
        .zip(std)
        .map(|(&m, &s)| Normal::new(m, s).expect("validated parameters").sample(rng))
        .collect()
}

/// `n` i.i.d. draws, deterministic in `seed`.
pub fn sample(spec: &DataSpec, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = match &spec.family {
        Family::Gaussian { mean, std } => {
            (0..n).map(|_| draw_gaussian(&mut rng, mean, std)).collect()
        }
        Family::UniformCube { half_width } => {
            let u = Uniform::new_inclusive(-half_width, *half_width)
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            (0..n)
                .map(|_| (0..spec.dim).map(|_| u.sample(&mut rng)).collect())
                .collect()
        }
        Family::GaussianMixture { components } => {
            let pick = WeightedIndex::new(components.iter().map(|c| c.weight))
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            (0..n)
                .map(|_| {
                    let c = &components[pick.sample(&mut rng)];
                    draw_gaussian(&mut rng, &c.mean, &c.std)
                })
                .collect()
        }
    };
    Ok(out)
}

/// `(1/n)·Σ ‖x_i‖·1{‖x_i‖ > threshold}`.
pub fn empirical_tail_check(samples: &[Vec<f64>], threshold: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    let total: f64 = samples
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
        .filter(|&r| r > threshold)
        .sum();
    Ok(total / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::gaussian_tail_moment;

    #[test]
    fn cube_samples_stay_in_cube() {
        let spec = DataSpec::uniform_cube(2, 1.0).unwrap();
        let xs = sample(&spec, 2000, 3).unwrap();
        assert!(xs.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn gaussian_mean_at_clt_scale() {
        let spec = DataSpec::gaussian(vec![1.5], vec![1.0]).unwrap();
        let n = 10_000;
        let xs = sample(&spec, n, 11).unwrap();
        let mean: f64 = xs.iter().map(|x| x[0]).sum::<f64>() / n as f64;
        assert!((mean - 1.5).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn same_seed_same_sample() {
        let spec = DataSpec::gaussian_mixture(vec![
            MixtureComponent {
                weight: 1.0,
                mean: vec![-2.0, 0.0],
                std: vec![0.5, 0.5],
            },
            MixtureComponent {
                weight: 2.0,
                mean: vec![2.0, 1.0],
                std: vec![1.0, 0.3],
            },
        ])
        .unwrap();
        assert_eq!(sample(&spec, 50, 7).unwrap(), sample(&spec, 50, 7).unwrap());
        assert_ne!(sample(&spec, 50, 7).unwrap(), sample(&spec, 50, 8).unwrap());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(DataSpec::uniform_cube(2, 0.0).is_err());
        assert!(DataSpec::gaussian(vec![0.0], vec![-1.0]).is_err());
        assert!(DataSpec::gaussian_mixture(vec![]).is_err());
        assert!(sample(&DataSpec::standard_gaussian(1), 0, 1).is_err());
        let mut s = DataSpec::standard_gaussian(2);
        s.tail_delta = 1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn tail_check_examples() {
        assert_eq!(
            empirical_tail_check(&[vec![0.1], vec![-0.5]], 1.0).unwrap(),
            0.0
        );
        assert_eq!(empirical_tail_check(&[vec![3.0, 4.0]], 1.0).unwrap(), 5.0);
        assert!(empirical_tail_check(&[], 1.0).is_err());
    }

    #[test]
    fn gaussian_tail_below_reference_with_slack() {
        let n = 100_000;
        let xs = sample(&DataSpec::standard_gaussian(1), n, 21).unwrap();
        let t = (n as f64).ln();
        let est = empirical_tail_check(&xs, t).unwrap();
        let reference = gaussian_tail_moment(1, t, 1.0);
        // Second moment of ‖X‖·1{‖X‖>t} bounds the Monte Carlo variance.
        let second = {
            let phi = (-(t * t) / 2.0f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
            2.0 * (t * phi + statrs::function::erf::erfc(t / 2f64.sqrt()) / 2.0)
        };
        assert!(est <= reference + 3.0 * (second / n as f64).sqrt());
    }
}
