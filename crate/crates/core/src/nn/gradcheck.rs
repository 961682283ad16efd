//! Central finite-difference verification of analytic gradients.

use super::params::{Grads, ParamSet};
use crate::scalar::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coords_checked: usize,
    /// Array name and index of the worst coordinate.
    pub worst: Option<(String, usize)>,
}

/// `|a - n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares `analytic` against central differences of `loss` on a random
/// subsample of `n_coords` coordinates (all of them if there are fewer).
/// Meant for `f64`; single precision is too coarse for `eps = 1e-5`.
pub fn grad_check<T: Scalar, F>(
    params: &ParamSet<T>,
    analytic: &Grads<T>,
    mut loss: F,
    eps: f64,
    n_coords: usize,
    seed: u64,
) -> GradCheckReport
where
    F: FnMut(&ParamSet<T>) -> T,
{
    let total = params.num_params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords: Vec<usize> = if n_coords >= total {
        (0..total).collect()
    } else {
        rand::seq::index::sample(&mut rng, total, n_coords).into_vec()
    };
    coords.sort_unstable();

    let mut work = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        coords_checked: coords.len(),
        worst: None,
    };
    let h = T::from_f64_lossy(eps);
    for flat in coords {
        let (a, i) = params.locate(flat);
        let orig = work.arrays[a].value[i];
        work.arrays[a].value[i] = orig + h;
        let up = loss(&work).to_f64_lossy();
        work.arrays[a].value[i] = orig - h;
        let down = loss(&work).to_f64_lossy();
        work.arrays[a].value[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let err = relative_error(analytic.arrays[a][i].to_f64_lossy(), numeric);
        if err > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(err);
            report.worst = Some((params.arrays[a].name.clone(), i));
        }
    }
    report
}
