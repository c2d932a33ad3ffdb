//! Prediction error and sparsity measures.

use crate::error::{Error, Result};

fn paired<'a>(y: &'a [f64], yhat: &'a [f64]) -> Result<impl Iterator<Item = f64> + 'a> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} observations but {} predictions",
            y.len(),
            yhat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::DimensionMismatch("no observations".into()));
    }
    Ok(y.iter().zip(yhat).map(|(a, b)| a - b))
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    let sse: f64 = paired(y, yhat)?.map(|r| r * r).sum();
    Ok((sse / y.len() as f64).sqrt())
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    let sae: f64 = paired(y, yhat)?.map(f64::abs).sum();
    Ok(sae / y.len() as f64)
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    let sse: f64 = paired(y, yhat)?.map(|r| r * r).sum();
    Ok(sse / y.len() as f64)
}

/// `1 − Σ(y − ŷ)² / Σ(y − ȳ)²`
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64> {
    let sse: f64 = paired(y, yhat)?.map(|r| r * r).sum();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if !(sst > 0.0) {
        return Err(Error::invalid("y", "R² is undefined for a constant response"));
    }
    Ok(1.0 - sse / sst)
}

/// Entries with `|v| > tol`.
pub fn l0(v: &[f64], tol: f64) -> usize {
    v.iter().filter(|x| x.abs() > tol).count()
}

pub fn l0_complement(v: &[f64], tol: f64) -> usize {
    v.len() - l0(v, tol)
}
