use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{GnlError, Result};

/// Outcome of a finite-difference comparison.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// max over all coordinates of `|analytic - numeric| / max(1, |analytic|)`
    pub max_rel_error: f64,
    /// Same quantity restricted to each parameter array.
    pub per_param: Vec<f64>,
    pub analytic: Vec<Tensor>,
    pub numeric: Vec<Tensor>,
}

fn evaluate<F>(objective: &F, params: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.leaf(p.clone())).collect();
    let loss = objective(&mut tape, &vars)?;
    let value = tape.value(loss);
    if value.len() != 1 {
        return Err(GnlError::Argument("objective must be scalar".into()));
    }
    let v = value.data()[0];
    if !v.is_finite() {
        return Err(GnlError::Evaluation(format!("objective value {v}")));
    }
    Ok(v)
}

/// Compares reverse-mode gradients of `objective` with central differences
/// of step `eps` at `params`.
///
/// The objective receives the tape and one leaf handle per parameter array
/// and returns a scalar node.
pub fn grad_check<F>(objective: F, params: &[Tensor], eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if !(eps > 0.0) {
        return Err(GnlError::Argument(format!("finite-difference step must be positive, got {eps}")));
    }

    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.leaf(p.clone())).collect();
    let loss = objective(&mut tape, &vars)?;
    if !tape.scalar(loss).is_finite() {
        return Err(GnlError::Evaluation(format!("objective value {}", tape.scalar(loss))));
    }
    let grads = tape.backward(loss)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| grads.wrt(v)).collect();

    let mut work = params.to_vec();
    let mut numeric = Vec::with_capacity(params.len());
    let mut per_param = Vec::with_capacity(params.len());
    for (p, an) in analytic.iter().enumerate() {
        let mut num = vec![0.0; an.len()];
        let mut worst: f64 = 0.0;
        for (i, slot) in num.iter_mut().enumerate() {
            let orig = work[p].data()[i];
            work[p].data_mut()[i] = orig + eps;
            let plus = evaluate(&objective, &work)?;
            work[p].data_mut()[i] = orig - eps;
            let minus = evaluate(&objective, &work)?;
            work[p].data_mut()[i] = orig;

            *slot = (plus - minus) / (2.0 * eps);
            let a = an.data()[i];
            worst = worst.max((a - *slot).abs() / a.abs().max(1.0));
        }
        numeric.push(Tensor::new(an.shape().to_vec(), num)?);
        per_param.push(worst);
    }

    let max_rel_error = per_param.iter().copied().fold(0.0, f64::max);
    Ok(GradCheckReport {
        max_rel_error,
        per_param,
        analytic,
        numeric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let theta = vec![Tensor::vector(vec![0.3, -1.7, 2.5]), Tensor::matrix(2, 2, vec![1.0, -2.0, 0.5, 4.0]).unwrap()];
        let report = grad_check(
            |tape, vars| {
                let mut terms = Vec::new();
                for &v in vars {
                    let s = tape.sum_squares(v);
                    terms.push(tape.scale(s, 0.5));
                }
                tape.add_all(&terms)
            },
            &theta,
            1e-6,
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-9, "{}", report.max_rel_error);
        assert_eq!(report.analytic[0].data(), theta[0].data());
    }

    #[test]
    fn dead_parameter_has_zero_gradients() {
        let theta = vec![Tensor::vector(vec![1.0, 2.0]), Tensor::vector(vec![5.0])];
        let report = grad_check(|tape, vars| Ok(tape.sum_squares(vars[0])), &theta, 1e-6).unwrap();
        assert_eq!(report.analytic[1].data(), &[0.0]);
        assert_eq!(report.numeric[1].data(), &[0.0]);
    }

    #[test]
    fn rejects_bad_step_and_non_finite_values() {
        let theta = vec![Tensor::vector(vec![1.0])];
        assert!(grad_check(|tape, vars| Ok(tape.sum(vars[0])), &theta, 0.0).is_err());
        let err = grad_check(
            |tape, vars| {
                let s = tape.sum(vars[0]);
                Ok(tape.scale(s, f64::INFINITY))
            },
            &theta,
            1e-6,
        )
        .unwrap_err();
        assert!(matches!(err, GnlError::Evaluation(_)));
    }
}
