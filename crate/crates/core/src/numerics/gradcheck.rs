use alloc::string::String;
use alloc::vec::Vec;

use super::ParamStore;
use crate::{Error, Result};

/// Worst disagreement found by [`grad_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Compares analytic gradients against central finite differences on every
/// scalar parameter.
///
/// `forward` evaluates the loss; `backward` must leave the analytic gradient
/// of that same loss in the store. The relative error of one entry is
/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn grad_check<F, B>(
    store: &mut ParamStore,
    forward: F,
    mut backward: B,
    eps: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&ParamStore) -> Result<f64>,
    B: FnMut(&mut ParamStore) -> Result<()>,
{
    if !(eps > 0.0) {
        return Err(Error::GradCheck(alloc::format!("step must be positive, got {eps}")));
    }
    let base = forward(store)?;
    let again = forward(store)?;
    if base.to_bits() != again.to_bits() {
        return Err(Error::GradCheck(alloc::format!(
            "forward is not deterministic ({base} then {again})"
        )));
    }

    store.zero_grad();
    backward(store)?;
    let analytic: Vec<Vec<f64>> = store.iter().map(|p| p.grad.as_slice().to_vec()).collect();
    store.zero_grad();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    let ids: Vec<_> = store.ids().collect();
    for (id, grads) in ids.into_iter().zip(&analytic) {
        for (i, &a) in grads.iter().enumerate() {
            let orig = store.value(id).as_slice()[i];
            store.value_mut(id).as_mut_slice()[i] = orig + eps;
            let plus = forward(store);
            store.value_mut(id).as_mut_slice()[i] = orig - eps;
            let minus = forward(store);
            store.value_mut(id).as_mut_slice()[i] = orig;
            let numeric = (plus? - minus?) / (2.0 * eps);

            let denom = a.abs().max(numeric.abs()).max(1e-8);
            let rel = (a - numeric).abs() / denom;
            report.checked += 1;
            if !(rel <= report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = String::from(store.name(id));
                report.worst_index = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}
