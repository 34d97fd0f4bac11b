//! Derivative-free optimization and root finding.
//!
//! Nelder-Mead is used for the bare-parameter calibration and the pulse
//! searches; the root finder (bisection with a secant polish) serves the
//! cancellation-point solvers. Both are deterministic for a fixed seed.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the simplex function-value spread falls below this.
    pub f_tol: f64,
    /// Stop when the simplex size falls below this (relative to scales).
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_evals: 400, f_tol: 1e-12, x_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Standard Nelder-Mead with reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5. The initial simplex is the seed displaced by `scales`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    seed: &[f64],
    scales: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = seed.len();
    assert_eq!(n, scales.len());
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(seed.to_vec());
    for i in 0..n {
        let mut p = seed.to_vec();
        p[i] += scales[i];
        simplex.push(p);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();

    loop {
        // order best..worst
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
        let reorder: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let fre: Vec<f64> = idx.iter().map(|&i| fvals[i]).collect();
        simplex = reorder;
        fvals = fre;

        let spread = fvals[n] - fvals[0];
        let size: f64 = (0..n)
            .map(|d| {
                let lo = simplex.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min);
                let hi = simplex.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max);
                (hi - lo) / scales[d].abs().max(1e-300)
            })
            .fold(0.0f64, f64::max);
        if evals >= opts.max_evals || spread.abs() < opts.f_tol || size < opts.x_tol {
            return NelderMeadResult {
                x: simplex[0].clone(),
                f: fvals[0],
                evals,
                converged: spread.abs() < opts.f_tol || size < opts.x_tol,
            };
        }

        let centroid: Vec<f64> =
            (0..n).map(|d| simplex[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64).collect();
        let reflect: Vec<f64> =
            (0..n).map(|d| centroid[d] + (centroid[d] - simplex[n][d])).collect();
        let f_r = eval(&reflect, &mut evals);

        if f_r < fvals[0] {
            let expand: Vec<f64> =
                (0..n).map(|d| centroid[d] + 2.0 * (centroid[d] - simplex[n][d])).collect();
            let f_e = eval(&expand, &mut evals);
            if f_e < f_r {
                simplex[n] = expand;
                fvals[n] = f_e;
            } else {
                simplex[n] = reflect;
                fvals[n] = f_r;
            }
        } else if f_r < fvals[n - 1] {
            simplex[n] = reflect;
            fvals[n] = f_r;
        } else {
            let outside = f_r < fvals[n];
            let contract: Vec<f64> = if outside {
                (0..n).map(|d| centroid[d] + 0.5 * (reflect[d] - centroid[d])).collect()
            } else {
                (0..n).map(|d| centroid[d] + 0.5 * (simplex[n][d] - centroid[d])).collect()
            };
            let f_c = eval(&contract, &mut evals);
            if f_c < f_r.min(fvals[n]) {
                simplex[n] = contract;
                fvals[n] = f_c;
            } else {
                // shrink toward best
                for k in 1..=n {
                    simplex[k] =
                        (0..n).map(|d| simplex[0][d] + 0.5 * (simplex[k][d] - simplex[0][d])).collect();
                    fvals[k] = eval(&simplex[k].clone(), &mut evals);
                }
            }
        }
    }
}

/// Bracketed root find: bisection until the bracket is small, then secant
/// polish. `f` must have opposite signs at `a` and `b`.
pub fn bisect_secant<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    f_tol: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NumericalFailure(format!(
            "root not bracketed on [{lo:.6}, {hi:.6}]"
        )));
    }
    // bisection phase
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() < f_tol || (hi - lo).abs() < 16.0 * x_tol {
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    // secant polish from the bracket endpoints
    let (mut x0, mut x1) = (lo, hi);
    let (mut f0, mut f1) = (f_lo, f_hi);
    for _ in 0..max_iter {
        if (f1 - f0).abs() < 1e-300 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        let x2 = x2.clamp(lo.min(hi), lo.max(hi));
        let f2 = f(x2);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        if f1.abs() < f_tol || (x1 - x0).abs() < x_tol {
            return Ok(x1);
        }
    }
    if f1.abs() < f_tol * 1e3 {
        Ok(x1)
    } else {
        Err(Error::NumericalFailure(format!("root polish stalled, residual {f1:.3e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nelder_mead_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(
            rosen,
            &[-1.2, 1.0],
            &[0.5, 0.5],
            &NelderMeadOptions { max_evals: 2000, f_tol: 1e-14, x_tol: 1e-10 },
        );
        assert!(r.f < 1e-8, "f = {}", r.f);
        assert_relative_eq!(r.x[0], 1.0, epsilon = 1e-3);
        assert_relative_eq!(r.x[1], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn root_finder_cubic() {
        let x = bisect_secant(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14, 1e-14, 200).unwrap();
        assert_relative_eq!(x, 2f64.powf(1.0 / 3.0), epsilon = 1e-10);
    }

    #[test]
    fn root_finder_rejects_unbracketed() {
        assert!(bisect_secant(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 1e-12, 100).is_err());
    }
}
