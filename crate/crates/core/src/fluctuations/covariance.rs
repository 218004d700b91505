use serde::Serialize;

use super::{heat_inner_product, TestFunction};
use crate::error::{bail, Result};
use crate::measures::theory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMethod {
    ClosedFormGaussian,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CovariancePrediction {
    pub value: f64,
    pub method: PredictionMethod,
}

/// `chi(rho) ⟨T_lag G, H⟩` for the heat semigroup of `D(rho) ∂_u^2`.
pub fn she_covariance(rho: f64, g: &TestFunction, h: &TestFunction, lag: f64) -> Result<CovariancePrediction> {
    if !(lag >= 0.0 && lag.is_finite()) {
        bail!(Domain, "lag {lag} must be finite and nonnegative");
    }
    let th = theory(rho)?;
    let (ip, closed) = heat_inner_product(g, h, th.d, lag);
    Ok(CovariancePrediction {
        value: th.chi * ip,
        method: if closed {
            PredictionMethod::ClosedFormGaussian
        } else {
            PredictionMethod::Quadrature
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
}

pub const MIN_REPLICAS: usize = 30;

/// Sample covariance of paired replica values with a jackknife standard error.
pub fn covariance_estimate(xs: &[f64], ys: &[f64]) -> Result<Estimate> {
    let n = xs.len();
    if ys.len() != n {
        bail!(InvalidArgument, "{} values paired with {}", n, ys.len());
    }
    if n < MIN_REPLICAS {
        bail!(Domain, "covariance needs at least {MIN_REPLICAS} replicas, got {n}");
    }
    let nf = n as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let cov = |sx: f64, sy: f64, sxy: f64, m: f64| (sxy - sx * sy / m) / (m - 1.0);
    let estimate = cov(sx, sy, sxy, nf);
    let loo: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| cov(sx - x, sy - y, sxy - x * y, nf - 1.0))
        .collect();
    let mean = loo.iter().sum::<f64>() / nf;
    let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (nf - 1.0) / nf;
    Ok(Estimate {
        estimate,
        stderr: var.sqrt(),
    })
}

/// Mean with its standard error.
pub fn mean_estimate(xs: &[f64]) -> Result<Estimate> {
    let n = xs.len();
    if n < 2 {
        bail!(Domain, "a standard error needs at least 2 values, got {n}");
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(Estimate {
        estimate: mean,
        stderr: (var / nf).sqrt(),
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
