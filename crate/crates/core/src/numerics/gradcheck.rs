use super::{Gradients, Parameter};
use crate::error::{Error, Result};

/// Denominator floor of the relative error.
pub const REL_FLOOR: f64 = 1e-6;

/// Outcome of a central-difference comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter id and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    /// Analytic and numeric values at the worst coordinate.
    pub worst_values: (f64, f64),
    pub max_abs_error: f64,
    pub coordinates: usize,
}

/// Compares `analytic` against `(f(θ+h) − f(θ−h)) / 2h` for every coordinate
/// of every trainable parameter.
///
/// Relative error uses the denominator `max(|analytic|, |numeric|, REL_FLOOR)`,
/// so coordinates with vanishing gradients are judged by absolute error.
/// `f` must be deterministic (no dropout).
pub fn finite_diff_check<F>(mut f: F, params: &[Parameter], analytic: &Gradients, h: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[Parameter]) -> Result<f64>,
{
    let mut work = params.to_vec();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst: None, worst_values: (0.0, 0.0), max_abs_error: 0.0, coordinates: 0 };
    for p in 0..work.len() {
        if !work[p].requires_grad {
            continue;
        }
        let id = work[p].id.clone();
        let grad = analytic
            .get(&id)
            .ok_or_else(|| Error::shape("finite_diff_check", format!("no analytic gradient for {id}")))?
            .clone();
        for i in 0..work[p].value.data().len() {
            let orig = work[p].value.data()[i];
            work[p].value.data_mut()[i] = orig + h;
            let plus = f(&work)?;
            work[p].value.data_mut()[i] = orig - h;
            let minus = f(&work)?;
            work[p].value.data_mut()[i] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!("objective at {id}[{i}]")));
            }
            let numeric = (plus - minus) / (2.0 * h);
            let a = grad.data()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            report.coordinates += 1;
            report.max_abs_error = report.max_abs_error.max((a - numeric).abs());
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = rel;
                report.worst = Some((id.clone(), i));
                report.worst_values = (a, numeric);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{DenseMatrix, Tape};

    #[test]
    fn quadratic_is_exact() {
        let w = Parameter::new("w", DenseMatrix::from_vec(3, 1, vec![0.3, -1.2, 2.0]).unwrap());
        let target = DenseMatrix::from_vec(3, 1, vec![1.0, 0.0, -1.0]).unwrap();
        let loss = |ps: &[Parameter]| -> Result<(f64, Gradients)> {
            let mut t = Tape::new();
            let v = t.param(&ps[0]);
            let l = t.mse(v, &target)?;
            Ok((t.value(l).get(0, 0), t.backward(l)?))
        };
        let (_, g) = loss(std::slice::from_ref(&w)).unwrap();
        let rep = finite_diff_check(|ps| Ok(loss(ps)?.0), &[w], &g, 1e-6).unwrap();
        assert!(rep.max_rel_error <= 1e-9, "{rep:?}");
        assert_eq!(rep.coordinates, 3);
    }

    #[test]
    fn non_finite_objective_errors() {
        let w = Parameter::new("w", DenseMatrix::zeros(1, 1));
        let g = Gradients([("w".to_string(), DenseMatrix::zeros(1, 1))].into_iter().collect());
        assert!(finite_diff_check(|_| Ok(f64::NAN), &[w], &g, 1e-6).is_err());
    }
}
