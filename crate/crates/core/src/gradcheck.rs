//! Central finite-difference verification of tape gradients.

use std::collections::BTreeMap;

use crate::autodiff::{Tape, Var};
use crate::error::TensorError;
use crate::parallel;
use crate::params::ParamStore;

pub const DEFAULT_EPS: f64 = 1e-5;

/// Worst relative error per parameter plus the global maximum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FdReport {
    pub max_rel_error: f64,
    pub per_param: BTreeMap<String, f64>,
    pub entries_checked: usize,
}

/// `|a - n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

fn eval<F>(f: &F, params: &ParamStore) -> Result<f64, TensorError>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var, TensorError>,
{
    let mut tape = Tape::new();
    let loss = f(&mut tape, params)?;
    let v = tape.value(loss);
    v.item().ok_or_else(|| TensorError::NonScalarLoss {
        shape: v.shape().to_vec(),
    })
}

/// Compares the tape gradient of every entry of every parameter against
/// `(f(p + eps) - f(p - eps)) / (2 eps)`.
///
/// `f` records a scalar loss on the given tape, reading weights from the
/// given store. Parameters it never touches have analytic gradient zero.
pub fn fd_check<F>(f: F, params: &ParamStore, eps: f64) -> Result<FdReport, TensorError>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var, TensorError> + Sync + Send,
{
    assert!(eps > 0.0, "eps must be positive");
    let mut tape = Tape::new();
    let loss = f(&mut tape, params)?;
    let analytic = tape.backward(loss)?;

    let coords: Vec<(String, usize)> = params
        .iter()
        .flat_map(|(name, t)| (0..t.len()).map(move |i| (name.to_string(), i)))
        .collect();

    let errors = parallel::map(&coords, |(name, i)| -> Result<f64, TensorError> {
        let mut p = params.clone();
        let x0 = p.get(name)?.data()[*i];
        p.get_mut(name)?.data_mut()[*i] = x0 + eps;
        let up = eval(&f, &p)?;
        p.get_mut(name)?.data_mut()[*i] = x0 - eps;
        let down = eval(&f, &p)?;
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic.get(name).map_or(0.0, |g| g.data()[*i]);
        Ok(relative_error(a, numeric))
    });

    let mut report = FdReport {
        entries_checked: coords.len(),
        ..FdReport::default()
    };
    for name in params.names() {
        report.per_param.insert(name.to_string(), 0.0);
    }
    for ((name, _), err) in coords.iter().zip(errors) {
        let err = err?;
        let slot = report.per_param.get_mut(name).expect("name registered");
        *slot = slot.max(err);
        report.max_rel_error = report.max_rel_error.max(err);
    }
    Ok(report)
}
