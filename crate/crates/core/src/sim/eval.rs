use crate::distance::abs_dev;
use crate::error::{invalid, Error, Result};
use crate::stats;

/// Evaluation grid `Med +- spread * MAD` with `points` values, and
/// `conditions` equally spaced condition points between the 10% and 90%
/// quantiles of the path.
pub fn eval_grid(values: &[f64], spread: f64, points: usize, conditions: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if points < 2 || conditions == 0 {
        return Err(invalid("evaluation grid needs >= 2 points and >= 1 condition"));
    }
    if !(spread > 0.0) {
        return Err(invalid(format!("spread = {spread} must be > 0")));
    }
    let med = stats::median(values);
    let mad = stats::mad(values);
    if mad == 0.0 {
        return Err(Error::ZeroMad);
    }
    let grid = stats::linspace(med - spread * mad, med + spread * mad, points);
    let sorted = stats::sorted_copy(values);
    let (lo, hi) = (stats::quantile_sorted(&sorted, 0.1), stats::quantile_sorted(&sorted, 0.9));
    let conds = if conditions == 1 { vec![med] } else { stats::linspace(lo, hi, conditions) };
    Ok((grid, conds))
}

fn unit_grid(len: usize) -> Vec<f64> {
    (0..len).map(|i| i as f64).collect()
}

/// Per step, the median over condition points of `abs_dev(estimate, truth)`,
/// summed over steps. `estimates[t][l]` is the row for condition `l`.
pub fn eval_r1(estimates: &[Vec<Vec<f64>>], truths: &[Vec<Vec<f64>>]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch(format!(
            "{} estimate steps vs {} truth steps",
            estimates.len(),
            truths.len()
        )));
    }
    let mut total = 0.0;
    for (t, (est, tru)) in estimates.iter().zip(truths).enumerate() {
        if est.len() != tru.len() || est.is_empty() {
            return Err(Error::LengthMismatch(format!("step {t}: {} vs {} condition rows", est.len(), tru.len())));
        }
        let devs = est
            .iter()
            .zip(tru)
            .map(|(e, f)| abs_dev(e, f, &unit_grid(e.len())))
            .collect::<Result<Vec<_>>>()?;
        total += stats::median(&devs);
    }
    Ok(total)
}

/// Summed `abs_dev` between one estimated row and the target density per step.
pub fn eval_r2(estimates: &[Vec<f64>], truths: &[Vec<f64>]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch(format!(
            "{} estimate steps vs {} truth steps",
            estimates.len(),
            truths.len()
        )));
    }
    estimates.iter().zip(truths).map(|(e, f)| abs_dev(e, f, &unit_grid(e.len()))).sum()
}
