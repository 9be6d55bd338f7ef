//! Central finite-difference checks of back-propagated gradients.

use super::{Graph, ParamSet, Var};

/// Relative error with a floor on the denominator, so entries whose true
/// gradient is ~0 are judged on absolute error instead.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

#[derive(Clone, Debug)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Compare `backward` against central differences on up to `per_tensor`
/// evenly spaced entries of every parameter.
pub fn check<F, E>(params: &ParamSet, per_tensor: usize, step: f64, forward: F) -> Result<GradCheck, E>
where
    F: Fn(&ParamSet) -> Result<(Graph, Var), E>,
{
    let (g, loss) = forward(params)?;
    let grads = g.backward(loss, params);
    let mut out = GradCheck {
        max_relative_error: 0.0,
        worst: None,
        checked: 0,
    };
    let mut p = params.clone();
    for (ti, t) in params.tensors.iter().enumerate() {
        let n = t.len();
        let stride = (n / per_tensor.max(1)).max(1);
        for j in (0..n).step_by(stride).take(per_tensor) {
            let orig = t.data[j];
            p.tensors[ti].data[j] = orig + step;
            let (gp, lp) = forward(&p)?;
            p.tensors[ti].data[j] = orig - step;
            let (gm, lm) = forward(&p)?;
            p.tensors[ti].data[j] = orig;
            let numeric = (gp.value(lp).data[0] - gm.value(lm).data[0]) / (2.0 * step);
            let analytic = grads.grads[ti].as_ref().map_or(0.0, |g| g.data[j]);
            let e = relative_error(analytic, numeric);
            out.checked += 1;
            if e > out.max_relative_error {
                out.max_relative_error = e;
                out.worst = Some((params.names[ti].clone(), j));
            }
        }
    }
    Ok(out)
}
