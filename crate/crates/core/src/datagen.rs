//! Synthetic linear-model data generation.
//!
//! Data follow `y_i = x_i' beta_star + eps_i` with a sparse
//! `beta_star = (1/sqrt(k), ..., 1/sqrt(k), 0, ..., 0)`. Covariates are
//! standard Gaussian or centered chi-square; errors come from Gaussian,
//! Cauchy, symmetric alpha-stable, or Gaussian-mixture laws.
//!
//! Reproducibility: all sampling is driven by ChaCha8, a counter-based
//! stream cipher RNG that is bit-exact across platforms. A dataset is a
//! pure function of its [`DataSpec`], including the seed. Independent
//! streams for trials are derived with [`derive_seed`], a splitmix64
//! mixer over `(master seed, lane, index)`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum CovariateLaw {
    /// Independent standard normal entries.
    GaussianIdentity,
    /// Independent chi-square entries recentered to mean zero.
    ChiSquareCentered { df: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum ErrorLaw {
    Cauchy { scale: f64 },
    AlphaStable { alpha: f64, gamma: f64 },
    /// With probability `p_in` a draw is N(0, sd_in^2), otherwise
    /// N(0, sd_out^2).
    NormalMixture { p_in: f64, sd_in: f64, sd_out: f64 },
    Gaussian { sd: f64 },
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub covariates: CovariateLaw,
    pub errors: ErrorLaw,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub beta_star: Array1<f64>,
    pub epsilon: Array1<f64>,
}

impl DataSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidConfig(format!(
                "need n >= 1 and p >= 1, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if self.k == 0 || self.k > self.p {
            return Err(Error::InvalidConfig(format!(
                "sparsity must satisfy 1 <= k <= p, got k = {}, p = {}",
                self.k, self.p
            )));
        }
        match self.covariates {
            CovariateLaw::GaussianIdentity => {}
            CovariateLaw::ChiSquareCentered { df } => {
                if !df.is_finite() || df <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "chi-square degrees of freedom must be positive, got {df}"
                    )));
                }
            }
        }
        match self.errors {
            ErrorLaw::Cauchy { scale } => {
                if !scale.is_finite() || scale <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "Cauchy scale must be positive, got {scale}"
                    )));
                }
            }
            ErrorLaw::AlphaStable { alpha, gamma } => {
                if !(alpha > 0.0 && alpha <= 2.0) {
                    return Err(Error::InvalidConfig(format!(
                        "stability index must lie in (0, 2], got {alpha}"
                    )));
                }
                if !gamma.is_finite() || gamma <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "stable scale must be positive, got {gamma}"
                    )));
                }
            }
            ErrorLaw::NormalMixture { p_in, sd_in, sd_out } => {
                if !(0.0..=1.0).contains(&p_in) {
                    return Err(Error::InvalidConfig(format!(
                        "mixture probability must lie in [0, 1], got {p_in}"
                    )));
                }
                if sd_in <= 0.0 || sd_out <= 0.0 || !sd_in.is_finite() || !sd_out.is_finite() {
                    return Err(Error::InvalidConfig(
                        "mixture standard deviations must be positive".into(),
                    ));
                }
            }
            ErrorLaw::Gaussian { sd } => {
                if !sd.is_finite() || sd <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "Gaussian sd must be positive, got {sd}"
                    )));
                }
            }
            ErrorLaw::None => {}
        }
        Ok(())
    }
}

/// splitmix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Independent substream seed for `(lane, index)` under a master seed.
/// Distinct lanes (dataset generation, per-arm initialization, probes)
/// never collide with each other or across indices.
pub fn derive_seed(master: u64, lane: u64, index: u64) -> u64 {
    splitmix64(
        splitmix64(master ^ lane.wrapping_mul(0x9e3779b97f4a7c15))
            .wrapping_add(index.wrapping_mul(0xbf58476d1ce4e5b9)),
    )
}

/// The sparse truth `(1/sqrt(k), ..., 1/sqrt(k), 0, ..., 0)`; unit l2 norm.
pub fn gen_beta_star(k: usize, p: usize) -> Result<Array1<f64>> {
    if k == 0 || k > p {
        return Err(Error::InvalidConfig(format!(
            "sparsity must satisfy 1 <= k <= p, got k = {k}, p = {p}"
        )));
    }
    let mut beta = Array1::zeros(p);
    let val = 1.0 / (k as f64).sqrt();
    for j in 0..k {
        beta[j] = val;
    }
    Ok(beta)
}

/// One draw from the symmetric alpha-stable law with characteristic
/// function `exp(-gamma^alpha |t|^alpha)`, via the Chambers-Mallows-Stuck
/// transform. `alpha = 2` is N(0, 2 gamma^2); `alpha = 1` is Cauchy with
/// scale `gamma`.
pub fn alpha_stable_sample<R: Rng + ?Sized>(alpha: f64, gamma: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidConfig(format!(
            "stability index must lie in (0, 2], got {alpha}"
        )));
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "stable scale must be positive, got {gamma}"
        )));
    }
    let phi = rng.gen::<f64>() * PI - PI / 2.0;
    if (alpha - 1.0).abs() < 1e-12 {
        return Ok(gamma * phi.tan());
    }
    let w = -(1.0 - rng.gen::<f64>()).max(1e-300).ln();
    let unit = (alpha * phi).sin() / phi.cos().powf(1.0 / alpha)
        * (((1.0 - alpha) * phi).cos() / w).powf((1.0 - alpha) / alpha);
    Ok(gamma * unit)
}

fn sample_error<R: Rng + ?Sized>(law: &ErrorLaw, rng: &mut R) -> Result<f64> {
    Ok(match *law {
        ErrorLaw::Cauchy { scale } => alpha_stable_sample(1.0, scale, rng)?,
        ErrorLaw::AlphaStable { alpha, gamma } => alpha_stable_sample(alpha, gamma, rng)?,
        ErrorLaw::NormalMixture { p_in, sd_in, sd_out } => {
            let inlier = rng.gen::<f64>() < p_in;
            let z: f64 = rng.sample(StandardNormal);
            if inlier {
                sd_in * z
            } else {
                sd_out * z
            }
        }
        ErrorLaw::Gaussian { sd } => sd * rng.sample::<f64, _>(StandardNormal),
        ErrorLaw::None => 0.0,
    })
}

/// Generate a dataset. Deterministic given the spec: the covariate matrix
/// is drawn row-major first, then the error vector, from a single
/// ChaCha8 stream seeded by `spec.seed`.
pub fn gen_dataset(spec: &DataSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = Array2::zeros((spec.n, spec.p));
    match spec.covariates {
        CovariateLaw::GaussianIdentity => {
            for v in x.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
        }
        CovariateLaw::ChiSquareCentered { df } => {
            let chi = ChiSquared::new(df).map_err(|e| {
                Error::InvalidConfig(format!("chi-square law rejected df = {df}: {e}"))
            })?;
            for v in x.iter_mut() {
                *v = chi.sample(&mut rng) - df;
            }
        }
    }
    let mut epsilon = Array1::zeros(spec.n);
    for e in epsilon.iter_mut() {
        *e = sample_error(&spec.errors, &mut rng)?;
    }
    let beta_star = gen_beta_star(spec.k, spec.p)?;
    let y = x.dot(&beta_star) + &epsilon;
    Ok(Dataset { x, y, beta_star, epsilon })
}

/// Fraction of trials on which `||X' eps / n||_inf >= lambda_mult *
/// sqrt(log(p) / n)`: a Monte-Carlo estimate of how often the usual
/// penalty level fails to dominate the score of the squared loss at the
/// truth. Bounded away from zero under heavy-tailed stable errors, which
/// is what breaks the Lasso there; vanishing for light-tailed errors.
pub fn lasso_gradient_tail_probe(
    spec: &DataSpec,
    lambda_mult: f64,
    trials: usize,
) -> Result<f64> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::InvalidConfig("tail probe needs at least one trial".into()));
    }
    if !lambda_mult.is_finite() || lambda_mult <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "penalty multiplier must be positive, got {lambda_mult}"
        )));
    }
    if matches!(spec.errors, ErrorLaw::None) {
        return Err(Error::InvalidConfig(
            "tail probe needs a stochastic error law".into(),
        ));
    }
    let lambda = lambda_mult * ((spec.p as f64).ln() / spec.n as f64).sqrt();
    let mut exceed = 0usize;
    for t in 0..trials {
        let sub = DataSpec { seed: derive_seed(spec.seed, 0xA1FA, t as u64), ..*spec };
        let ds = gen_dataset(&sub)?;
        let score = ds.x.t().dot(&ds.epsilon) / spec.n as f64;
        let sup = score.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if sup >= lambda {
            exceed += 1;
        }
    }
    Ok(exceed as f64 / trials as f64)
}

/// Write a dataset as CSV with header `x1, ..., xp, y` and the generating
/// spec as a JSON sidecar next to it (same stem, `.json` extension).
pub fn write_dataset_csv(path: &Path, dataset: &Dataset, spec: &DataSpec) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let p = dataset.x.ncols();
    let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    writer.write_record(&header)?;
    for i in 0..dataset.x.nrows() {
        let mut row: Vec<String> = (0..p).map(|j| dataset.x[[i, j]].to_string()).collect();
        row.push(dataset.y[i].to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    let sidecar = path.with_extension("json");
    let mut f = std::fs::File::create(sidecar)?;
    f.write_all(serde_json::to_string_pretty(spec)?.as_bytes())?;
    Ok(())
}

/// Load a `(X, y)` dataset from CSV: header row, response in the last
/// column.
pub fn load_dataset_csv(path: &Path) -> Result<(Array2<f64>, Array1<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let width = reader.headers()?.len();
    if width < 2 {
        return Err(Error::InvalidConfig(
            "dataset CSV needs at least one covariate column and a response".into(),
        ));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != width {
            return Err(Error::InvalidConfig(format!(
                "ragged CSV row of width {} (expected {width})",
                record.len()
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|s| s.trim().parse::<f64>()).collect();
        rows.push(parsed.map_err(|e| Error::InvalidConfig(format!("bad CSV number: {e}")))?);
    }
    if rows.is_empty() {
        return Err(Error::InvalidConfig("dataset CSV has no data rows".into()));
    }
    let n = rows.len();
    let p = width - 1;
    let mut x = Array2::zeros((n, p));
    let mut y = Array1::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        for j in 0..p {
            x[[i, j]] = row[j];
        }
        y[i] = row[p];
    }
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, p: usize, k: usize, errors: ErrorLaw, seed: u64) -> DataSpec {
        DataSpec { n, p, k, covariates: CovariateLaw::GaussianIdentity, errors, seed }
    }

    #[test]
    fn beta_star_examples() {
        let b = gen_beta_star(4, 8).unwrap();
        assert_eq!(b.to_vec(), vec![0.5, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let b = gen_beta_star(1, 1).unwrap();
        assert_eq!(b.to_vec(), vec![1.0]);
        let b = gen_beta_star(11, 128).unwrap();
        assert!((b.dot(&b).sqrt() - 1.0).abs() < 1e-12);
        let l1: f64 = b.iter().map(|v| v.abs()).sum();
        assert!((l1 - 11f64.sqrt()).abs() < 1e-12);
        assert!(gen_beta_star(9, 8).is_err());
        assert!(gen_beta_star(0, 8).is_err());
    }

    #[test]
    fn noiseless_data_is_exact() {
        let ds = gen_dataset(&spec(20, 6, 3, ErrorLaw::None, 7)).unwrap();
        let fitted = ds.x.dot(&ds.beta_star);
        assert_eq!(ds.y, fitted);
        assert!(ds.epsilon.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn gaussian_covariate_moments() {
        let n = 100_000;
        let ds = gen_dataset(&spec(n, 2, 1, ErrorLaw::None, 11)).unwrap();
        for j in 0..2 {
            let col = ds.x.column(j);
            let mean = col.sum() / n as f64;
            assert!(mean.abs() < 3.0 / (n as f64).sqrt() * 1.5, "mean {mean}");
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            assert!((var - 1.0).abs() < 0.05, "var {var}");
        }
    }

    #[test]
    fn chi_square_centered_moments() {
        let n = 100_000;
        let ds = gen_dataset(&DataSpec {
            covariates: CovariateLaw::ChiSquareCentered { df: 10.0 },
            ..spec(n, 1, 1, ErrorLaw::None, 13)
        })
        .unwrap();
        let col = ds.x.column(0);
        let mean = col.sum() / n as f64;
        // Var(chi2_10) = 20, so the mean of n draws has sd sqrt(20/n).
        assert!(mean.abs() < 4.0 * (20.0 / n as f64).sqrt(), "mean {mean}");
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        assert!((var - 20.0).abs() < 1.0, "var {var}");
    }

    #[test]
    fn reproducibility_is_bitwise() {
        let s = spec(50, 8, 3, ErrorLaw::Cauchy { scale: 0.1 }, 99);
        let a = gen_dataset(&s).unwrap();
        let b = gen_dataset(&s).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.epsilon, b.epsilon);
        // A different seed changes the draw.
        let c = gen_dataset(&DataSpec { seed: 100, ..s }).unwrap();
        assert_ne!(a.x, c.x);
    }

    /// Standard normal CDF via the Abramowitz-Stegun rational erf
    /// approximation (absolute error below 1.5e-7).
    fn normal_cdf(x: f64) -> f64 {
        let t = 1.0 / (1.0 + 0.3275911 * x.abs() / 2f64.sqrt());
        let poly = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        let erf = 1.0 - poly * (-x * x / 2.0).exp();
        if x >= 0.0 {
            0.5 * (1.0 + erf)
        } else {
            0.5 * (1.0 - erf)
        }
    }

    fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        let n = sorted.len() as f64;
        let mut ks = 0.0_f64;
        for (i, &v) in sorted.iter().enumerate() {
            let f = cdf(v);
            ks = ks.max(((i + 1) as f64 / n - f).abs());
            ks = ks.max((i as f64 / n - f).abs());
        }
        ks
    }

    #[test]
    fn stable_alpha_two_is_standard_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let gamma = 1.0 / 2f64.sqrt();
        let mut draws: Vec<f64> = (0..100_000)
            .map(|_| alpha_stable_sample(2.0, gamma, &mut rng).unwrap())
            .collect();
        draws.sort_by(f64::total_cmp);
        let ks = ks_statistic(&draws, normal_cdf);
        assert!(ks <= 0.01, "KS statistic {ks}");
    }

    #[test]
    fn stable_alpha_one_is_standard_cauchy() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut draws: Vec<f64> = (0..100_000)
            .map(|_| alpha_stable_sample(1.0, 1.0, &mut rng).unwrap())
            .collect();
        draws.sort_by(f64::total_cmp);
        let median = draws[draws.len() / 2];
        assert!(median.abs() < 0.03, "median {median}");
        let q1 = draws[draws.len() / 4];
        let q3 = draws[3 * draws.len() / 4];
        // Cauchy quartiles are at -1 and 1, so the IQR is 2.
        assert!(((q3 - q1) - 2.0).abs() < 0.1, "IQR {}", q3 - q1);
        // Also against the closed-form Cauchy CDF.
        let ks = ks_statistic(&draws, |x| 0.5 + x.atan() / PI);
        assert!(ks <= 0.01, "KS statistic {ks}");
    }

    #[test]
    fn stable_scale_is_multiplicative() {
        // The sampler applies gamma as an exact multiplier of a unit draw,
        // so matched seeds agree bitwise; this realizes the distributional
        // scaling property exactly.
        for alpha in [0.7, 1.0, 1.5, 2.0] {
            let mut r1 = ChaCha8Rng::seed_from_u64(23);
            let mut r2 = ChaCha8Rng::seed_from_u64(23);
            for _ in 0..1000 {
                let unit = alpha_stable_sample(alpha, 1.0, &mut r1).unwrap();
                let scaled = alpha_stable_sample(alpha, 2.5, &mut r2).unwrap();
                assert_eq!(2.5 * unit, scaled);
            }
        }
    }

    #[test]
    fn cauchy_law_equals_stable_at_alpha_one() {
        let mut r1 = ChaCha8Rng::seed_from_u64(29);
        let mut r2 = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100_000 {
            let a = sample_error(&ErrorLaw::Cauchy { scale: 0.1 }, &mut r1).unwrap();
            let b = sample_error(
                &ErrorLaw::AlphaStable { alpha: 1.0, gamma: 0.1 },
                &mut r2,
            )
            .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mixture_inlier_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let law = ErrorLaw::NormalMixture { p_in: 0.7, sd_in: 0.1, sd_out: 10.0 };
        let n = 100_000;
        // |eps| <= 0.5 captures essentially all inliers (5 sd) and almost
        // no outliers (0.05 sd).
        let small = (0..n)
            .filter(|_| sample_error(&law, &mut rng).unwrap().abs() <= 0.5)
            .count();
        let frac = small as f64 / n as f64;
        assert!((frac - 0.7).abs() < 0.02, "inlier fraction {frac}");
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(spec(10, 4, 5, ErrorLaw::None, 1).validate().is_err());
        assert!(spec(10, 4, 2, ErrorLaw::Cauchy { scale: 0.0 }, 1)
            .validate()
            .is_err());
        assert!(spec(10, 4, 2, ErrorLaw::AlphaStable { alpha: 2.5, gamma: 1.0 }, 1)
            .validate()
            .is_err());
        assert!(spec(
            10,
            4,
            2,
            ErrorLaw::NormalMixture { p_in: 1.2, sd_in: 1.0, sd_out: 1.0 },
            1
        )
        .validate()
        .is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(alpha_stable_sample(0.0, 1.0, &mut rng).is_err());
        assert!(alpha_stable_sample(1.0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn tail_probe_validates_inputs() {
        let s = spec(100, 8, 3, ErrorLaw::AlphaStable { alpha: 1.0, gamma: 1.0 }, 5);
        assert!(lasso_gradient_tail_probe(&s, 0.3, 0).is_err());
        let s_none = spec(100, 8, 3, ErrorLaw::None, 5);
        assert!(lasso_gradient_tail_probe(&s_none, 0.3, 10).is_err());
        let f = lasso_gradient_tail_probe(&s, 0.3, 10).unwrap();
        assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn derive_seed_spreads_lanes_and_indices() {
        let mut seen = std::collections::HashSet::new();
        for lane in 0..4u64 {
            for idx in 0..64u64 {
                assert!(seen.insert(derive_seed(12345, lane, idx)));
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let s = spec(12, 3, 2, ErrorLaw::Gaussian { sd: 0.5 }, 77);
        let ds = gen_dataset(&s).unwrap();
        write_dataset_csv(&path, &ds, &s).unwrap();
        let (x, y) = load_dataset_csv(&path).unwrap();
        assert_eq!(x.dim(), (12, 3));
        for i in 0..12 {
            assert_eq!(y[i], ds.y[i]);
            for j in 0..3 {
                assert_eq!(x[[i, j]], ds.x[[i, j]]);
            }
        }
        let sidecar: DataSpec = serde_json::from_str(
            &std::fs::read_to_string(path.with_extension("json")).unwrap(),
        )
        .unwrap();
        assert_eq!(sidecar, s);
    }
}
