//! Closed-form quantities of the driven-resonator coupling scheme:
//! occupation-dependent zero-point shifts, the dynamical ZZ they generate,
//! cancellation-point solvers, drive-induced Stark shifts, the
//! displaced-frame cross-check of the leading-order coupling, and the
//! four-wave-mixing diagnostic.
//!
//! All quantities are linear frequencies in GHz.

use serde::{Deserialize, Serialize};

use crate::circuit::DressedModel;
use crate::error::{Error, Result};
use crate::linalg::eigh;
use crate::optimize::bisect_secant;

/// Denominator magnitude below which a zero-point shift counts as a pole.
pub const POLE_GUARD: f64 = 1e-9;

/// Residual-ZZ tolerance of the cancellation root find (0.1 kHz).
pub const CANCEL_TOL: f64 = 1e-7;

/// Resonator drive working point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Drive amplitude D in GHz.
    pub amplitude: f64,
    /// Detuning of the drive from the dressed resonator, in GHz.
    pub detuning: f64,
}

impl DriveParams {
    pub fn new(amplitude: f64, detuning: f64) -> Self {
        DriveParams { amplitude, detuning }
    }

    /// Steady-state displacement of the resonator, alpha = D / Delta_d.
    pub fn alpha(&self) -> f64 {
        self.amplitude / self.detuning
    }

    /// Steady-state photon number alpha^2.
    pub fn n_bar(&self) -> f64 {
        self.alpha() * self.alpha()
    }

    /// Pole-avoidance check across qubit occupations 0..1 against a model.
    pub fn validate(&self, model: &DressedModel) -> Result<()> {
        if self.detuning == 0.0 {
            return Err(Error::InvalidSpec("drive detuning must be nonzero".into()));
        }
        if model.chi_left.abs() >= self.detuning.abs()
            || model.chi_right.abs() >= self.detuning.abs()
        {
            return Err(Error::InvalidSpec(format!(
                "dispersive shifts ({:.4}, {:.4}) must stay below |detuning| {:.4}",
                model.chi_left, model.chi_right, self.detuning
            )));
        }
        Ok(())
    }
}

/// Zero-point energy shift D^2 / (Delta_d - jL chi_L - jR chi_R).
pub fn ezp(drive: &DriveParams, chi_l: f64, chi_r: f64, j_l: u32, j_r: u32) -> Result<f64> {
    let denom = drive.detuning - j_l as f64 * chi_l - j_r as f64 * chi_r;
    if denom.abs() < POLE_GUARD {
        return Err(Error::Singularity { denominator: denom });
    }
    Ok(drive.amplitude * drive.amplitude / denom)
}

/// Leading-order dynamical two-qubit coupling coefficient,
/// -2 D^2 chi_L chi_R / Delta_d^3.
pub fn zz_dynamic_leading(drive: &DriveParams, chi_l: f64, chi_r: f64) -> Result<f64> {
    if drive.detuning.abs() < POLE_GUARD {
        return Err(Error::Singularity { denominator: drive.detuning });
    }
    Ok(-2.0 * drive.amplitude.powi(2) * chi_l * chi_r / drive.detuning.powi(3))
}

/// Residual ZZ at the given drive: the alternating zero-point-shift
/// combination over qubit occupations plus the static coupling.
pub fn zz_total(drive: &DriveParams, model: &DressedModel) -> Result<f64> {
    let (cl, cr) = (model.chi_left, model.chi_right);
    Ok(ezp(drive, cl, cr, 1, 1)? + ezp(drive, cl, cr, 0, 0)?
        - ezp(drive, cl, cr, 1, 0)?
        - ezp(drive, cl, cr, 0, 1)?
        + model.zz_static)
}

/// Leading-order residual ZZ: static coupling plus the quadratic expansion
/// of the zero-point combination, 2 D^2 chi_L chi_R / Delta_d^3.
pub fn zz_leading_residual(drive: &DriveParams, model: &DressedModel) -> f64 {
    model.zz_static
        + 2.0 * drive.amplitude.powi(2) * model.chi_left * model.chi_right
            / drive.detuning.powi(3)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CancellationSolution {
    /// Root of the residual-ZZ condition, GHz.
    pub amplitude: f64,
    /// Leading-order seed (root of the quadratic expansion), GHz.
    pub seed: Option<f64>,
}

/// Solve the cancellation condition for the drive amplitude at fixed
/// detuning: bracketed bisection with a secant polish on the residual ZZ.
pub fn solve_cancellation(model: &DressedModel, detuning: f64) -> Result<CancellationSolution> {
    let probe = DriveParams::new(1.0, detuning);
    probe.validate(model)?;
    let k = zz_total(&probe, model)? - model.zz_static; // quadratic coefficient
    let seed_sq =
        -model.zz_static * detuning.powi(3) / (2.0 * model.chi_left * model.chi_right);
    let seed = if seed_sq > 0.0 { Some(seed_sq.sqrt()) } else { None };
    if model.zz_static == 0.0 {
        return Ok(CancellationSolution { amplitude: 0.0, seed });
    }
    if k == 0.0 || k.signum() == model.zz_static.signum() {
        return Err(Error::NoCancellationPoint {
            d_max: 0.0,
            residual_sign: model.zz_static.signum(),
        });
    }
    let d_max = 1.2 * (-model.zz_static / k).sqrt();
    let f = |d: f64| zz_total(&DriveParams::new(d, detuning), model).unwrap_or(f64::NAN);
    if f(0.0).signum() == f(d_max).signum() {
        return Err(Error::NoCancellationPoint { d_max, residual_sign: f(0.0).signum() });
    }
    let amplitude = bisect_secant(f, 0.0, d_max, CANCEL_TOL, 1e-12, 200)?;
    Ok(CancellationSolution { amplitude, seed })
}

/// Drive-induced shifts of the two 0-1 qubit frequencies.
pub fn stark_shifts(drive: &DriveParams, model: &DressedModel) -> Result<(f64, f64)> {
    let (cl, cr) = (model.chi_left, model.chi_right);
    let e00 = ezp(drive, cl, cr, 0, 0)?;
    Ok((ezp(drive, cl, cr, 1, 0)? - e00, ezp(drive, cl, cr, 0, 1)? - e00))
}

/// Displaced-frame route to the leading-order two-body coefficient,
/// -2 alpha^2 chi_L chi_R / Delta_d. Asserts agreement with
/// [`zz_dynamic_leading`] to 1e-12 relative.
pub fn sizzle_crosscheck(model: &DressedModel, drive: &DriveParams) -> Result<f64> {
    let alpha = drive.alpha();
    let value = -2.0 * alpha * alpha * model.chi_left * model.chi_right / drive.detuning;
    let reference = zz_dynamic_leading(drive, model.chi_left, model.chi_right)?;
    let scale = reference.abs().max(1e-300);
    if (value - reference).abs() > 1e-12 * scale {
        return Err(Error::NumericalFailure(format!(
            "displaced-frame coefficient {value:.15e} disagrees with leading order {reference:.15e}"
        )));
    }
    Ok(value)
}

/// Four-wave-mixing diagnostic pair D chi / Delta_d^2 with a warning flag
/// when either magnitude exceeds 0.1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FourWave {
    pub left: f64,
    pub right: f64,
    pub warn: bool,
}

pub const FOUR_WAVE_WARN: f64 = 0.1;

pub fn four_wave_coefficient(model: &DressedModel, drive: &DriveParams) -> FourWave {
    let left = drive.amplitude * model.chi_left / drive.detuning.powi(2);
    let right = drive.amplitude * model.chi_right / drive.detuning.powi(2);
    FourWave { left, right, warn: left.abs() > FOUR_WAVE_WARN || right.abs() > FOUR_WAVE_WARN }
}

/// Exact residual ZZ of the driven model from a numerical diagonalization
/// of the static rotating-frame Hamiltonian, including the resonator
/// self-Kerr. Qubit occupations are conserved, so each occupation pattern
/// reduces to a driven resonator block whose displaced-vacuum eigenvalue is
/// identified by coherent-state overlap.
pub fn exact_zz_spectral(
    model: &DressedModel,
    drive: &DriveParams,
    fock_dim: Option<usize>,
) -> Result<f64> {
    drive.validate(model)?;
    let dim = fock_dim.unwrap_or_else(|| {
        let beta_max = (0..4)
            .map(|p| {
                let (jl, jr) = (p / 2, p % 2);
                let d = drive.detuning
                    - jl as f64 * model.chi_left
                    - jr as f64 * model.chi_right;
                (drive.amplitude / d).abs()
            })
            .fold(0.0f64, f64::max);
        let n_bar = beta_max * beta_max;
        ((n_bar + 6.0 * n_bar.sqrt() + 5.0).ceil() as usize).max(10)
    });

    let mut combo = model.zz_static;
    for (jl, jr, sign) in [(1u32, 1u32, 1.0), (0, 0, 1.0), (1, 0, -1.0), (0, 1, -1.0)] {
        let d_q = drive.detuning
            - jl as f64 * model.chi_left
            - jr as f64 * model.chi_right;
        if d_q.abs() < POLE_GUARD {
            return Err(Error::Singularity { denominator: d_q });
        }
        let mut h = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        for n in 0..dim {
            h[(n, n)] = -d_q * n as f64 + 0.5 * model.eta_res * n as f64 * (n as f64 - 1.0);
            if n + 1 < dim {
                h[(n, n + 1)] = drive.amplitude * ((n + 1) as f64).sqrt();
                h[(n + 1, n)] = h[(n, n + 1)];
            }
        }
        let eig = eigh(&h)?;
        // displaced-vacuum reference: coherent state with amplitude D / d_q
        let beta = drive.amplitude / d_q;
        let mut coherent = vec![0.0f64; dim];
        let mut log_fact = 0.0;
        for (n, c) in coherent.iter_mut().enumerate() {
            if n > 0 {
                log_fact += (n as f64).ln();
            }
            *c = (-0.5 * beta * beta + n as f64 * beta.abs().max(1e-300).ln() - 0.5 * log_fact)
                .exp()
                * if beta < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        }
        let mut best = (0usize, -1.0f64);
        for k in 0..dim {
            let ov: f64 = (0..dim).map(|n| coherent[n] * eig.vectors[(n, k)]).sum();
            if ov * ov > best.1 {
                best = (k, ov * ov);
            }
        }
        if best.1 <= 0.5 {
            return Err(Error::AmbiguousDressing {
                label: (jl as usize, 0, jr as usize),
                overlap: best.1,
            });
        }
        combo += sign * eig.values[best.0];
    }
    Ok(combo)
}

/// Cancellation amplitude of the exact spectral residual, refined from the
/// closed-form solution by the same bracketed root find.
pub fn solve_cancellation_exact(
    model: &DressedModel,
    detuning: f64,
    fock_dim: Option<usize>,
) -> Result<f64> {
    let closed = solve_cancellation(model, detuning)?;
    let f = |d: f64| {
        exact_zz_spectral(model, &DriveParams::new(d, detuning), fock_dim).unwrap_or(f64::NAN)
    };
    let (lo, hi) = (0.8 * closed.amplitude, 1.25 * closed.amplitude.max(1e-6));
    bisect_secant(f, lo, hi, CANCEL_TOL, 1e-12, 200)
}

/// One row of a drive-amplitude scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZzScanRow {
    pub amplitude: f64,
    pub zz_total: f64,
    pub leading_order: f64,
    pub exact_oracle: Option<f64>,
}

pub fn zz_scan(
    model: &DressedModel,
    detuning: f64,
    d_max: f64,
    points: usize,
    with_exact: bool,
) -> Result<Vec<ZzScanRow>> {
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let d = d_max * k as f64 / (points.max(2) - 1) as f64;
        let drive = DriveParams::new(d, detuning);
        rows.push(ZzScanRow {
            amplitude: d,
            zz_total: zz_total(&drive, model)?,
            leading_order: zz_leading_residual(&drive, model),
            exact_oracle: if with_exact {
                Some(exact_zz_spectral(model, &drive, None)?)
            } else {
                None
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Dressed values of the reference working point used throughout.
    pub fn reference_model() -> DressedModel {
        DressedModel {
            omega_left: 4.17,
            omega_right: 4.83,
            omega_res: 9.5,
            eta_left: -0.320,
            eta_right: -0.320,
            eta_res: -9.0e-5,
            chi_left: -6.0e-3,
            chi_right: -8.4e-3,
            zz_static: -5.7e-3,
            detuning_lr: -0.66,
            j_eff: -0.042,
            drive_coeffs: vec![],
            drive_coeffs_right: vec![],
            gtilde_left: 0.0,
            gtilde_right: 0.0,
        }
    }

    #[test]
    fn ezp_zero_drive() {
        let drive = DriveParams::new(0.0, 0.1);
        for jl in 0..2 {
            for jr in 0..2 {
                assert_eq!(ezp(&drive, -6e-3, -8.4e-3, jl, jr).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn ezp_direct_arithmetic() {
        // 0.263^2 / (0.1 + 0.006 + 0.0084)
        let drive = DriveParams::new(0.263, 0.1);
        let v = ezp(&drive, -6.0e-3, -8.4e-3, 1, 1).unwrap();
        assert_relative_eq!(v, 0.263 * 0.263 / 0.1144, epsilon = 1e-14);
        assert_relative_eq!(v, 0.604624, epsilon = 1e-6);
    }

    #[test]
    fn ezp_zero_occupation_is_definition() {
        let drive = DriveParams::new(0.2, 0.1);
        assert_relative_eq!(
            ezp(&drive, -6e-3, -8.4e-3, 0, 0).unwrap(),
            0.2 * 0.2 / 0.1,
            epsilon = 1e-15
        );
    }

    #[test]
    fn ezp_pole_detected() {
        let drive = DriveParams::new(0.1, 6.0e-3);
        assert!(matches!(
            ezp(&drive, 6.0e-3, 0.0, 1, 0),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn ezp_quadratic_scaling() {
        let d1 = DriveParams::new(0.11, 0.1);
        let d3 = DriveParams::new(0.33, 0.1);
        let e1 = ezp(&d1, -6e-3, -8.4e-3, 1, 0).unwrap();
        let e3 = ezp(&d3, -6e-3, -8.4e-3, 1, 0).unwrap();
        assert_relative_eq!(e3, 9.0 * e1, epsilon = 1e-12);
    }

    #[test]
    fn leading_sign_and_zero() {
        let drive = DriveParams::new(0.2, 0.1);
        assert_eq!(zz_dynamic_leading(&drive, 0.0, -8.4e-3).unwrap(), 0.0);
        let v = zz_dynamic_leading(&drive, -6e-3, -8.4e-3).unwrap();
        assert!(v < 0.0, "both chi negative, positive detuning: coefficient negative");
    }

    #[test]
    fn seed_matches_closed_form_inversion() {
        // root of chi' + 2 D^2 chi_L chi_R / Delta^3: about 238 MHz here
        let model = reference_model();
        let sol = solve_cancellation(&model, 0.1).unwrap();
        let seed = sol.seed.expect("seed exists for opposing signs");
        assert_relative_eq!(
            seed,
            (5.7e-3_f64 * 1e-3 / (2.0 * 6.0e-3 * 8.4e-3)).sqrt(),
            epsilon = 1e-12
        );
        assert_relative_eq!(seed, 0.2378, epsilon = 1e-3);
    }

    #[test]
    fn cancellation_point_reference_regime() {
        let model = reference_model();
        let sol = solve_cancellation(&model, 0.1).unwrap();
        assert!(sol.amplitude > 0.26 && sol.amplitude < 0.28, "D0 = {}", sol.amplitude);
        // closed-form residual vanishes at the root
        let res = zz_total(&DriveParams::new(sol.amplitude, 0.1), &model).unwrap();
        assert!(res.abs() < CANCEL_TOL);
    }

    #[test]
    fn zz_total_limits() {
        let model = reference_model();
        assert_relative_eq!(
            zz_total(&DriveParams::new(0.0, 0.1), &model).unwrap(),
            model.zz_static,
            epsilon = 1e-15
        );
    }

    #[test]
    fn no_cancellation_for_wrong_detuning_sign() {
        let model = reference_model();
        // negative detuning flips the dynamical-ZZ sign: no root
        assert!(matches!(
            solve_cancellation(&model, -0.1),
            Err(Error::NoCancellationPoint { .. })
        ));
    }

    #[test]
    fn zero_static_zz_gives_zero_amplitude() {
        let mut model = reference_model();
        model.zz_static = 0.0;
        let sol = solve_cancellation(&model, 0.1).unwrap();
        assert_eq!(sol.amplitude, 0.0);
    }

    #[test]
    fn perturbative_limit_converges_to_seed() {
        // chi scaled down 100x: full solution within 1% of the seed
        let mut model = reference_model();
        model.chi_left *= 0.01;
        model.chi_right *= 0.01;
        model.zz_static *= 1e-4;
        let sol = solve_cancellation(&model, 0.1).unwrap();
        let seed = sol.seed.unwrap();
        assert_relative_eq!(sol.amplitude, seed, max_relative = 0.01);
    }

    #[test]
    fn stark_shift_signs_and_zero_drive() {
        let model = reference_model();
        let (l, r) = stark_shifts(&DriveParams::new(0.0, 0.1), &model).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        let (l, r) = stark_shifts(&DriveParams::new(0.2, 0.1), &model).unwrap();
        assert!(l < 0.0 && r < 0.0, "negative chi, positive detuning: negative shifts");
    }

    #[test]
    fn sizzle_identity() {
        let model = reference_model();
        for &d in &[0.05, 0.263, 0.4] {
            let drive = DriveParams::new(d, 0.1);
            let v = sizzle_crosscheck(&model, &drive).unwrap();
            let l = zz_dynamic_leading(&drive, model.chi_left, model.chi_right).unwrap();
            assert_relative_eq!(v, l, max_relative = 1e-12);
        }
        assert_eq!(
            sizzle_crosscheck(&model, &DriveParams::new(0.0, 0.1)).unwrap(),
            0.0
        );
    }

    #[test]
    fn sizzle_reference_arithmetic() {
        // alpha = 2.63 at D = 0.263, Delta = 0.1
        let model = reference_model();
        let drive = DriveParams::new(0.263, 0.1);
        let expect = -2.0 * 2.63f64.powi(2) * (-6.0e-3) * (-8.4e-3) / 0.1;
        assert_relative_eq!(sizzle_crosscheck(&model, &drive).unwrap(), expect, epsilon = 1e-9);
    }

    #[test]
    fn four_wave_reference_value_and_scaling() {
        let model = reference_model();
        let fw = four_wave_coefficient(&model, &DriveParams::new(0.263, 0.1));
        assert_relative_eq!(fw.left.abs(), 0.263 * 0.006 / 0.01, epsilon = 1e-12);
        assert!(fw.warn, "0.158 exceeds the 0.1 advisory threshold");
        let fw0 = four_wave_coefficient(&model, &DriveParams::new(0.0, 0.1));
        assert_eq!((fw0.left, fw0.right), (0.0, 0.0));
        // doubling the detuning at fixed alpha halves the coefficient
        let fixed_alpha_1 = four_wave_coefficient(&model, &DriveParams::new(0.2, 0.1));
        let fixed_alpha_2 = four_wave_coefficient(&model, &DriveParams::new(0.4, 0.2));
        assert_relative_eq!(fixed_alpha_2.left, 0.5 * fixed_alpha_1.left, epsilon = 1e-12);
    }

    #[test]
    fn evenness_in_amplitude() {
        let model = reference_model();
        let f = |d: f64| {
            zz_total(&DriveParams::new(d, 0.1), &model).unwrap() - model.zz_static
        };
        for &d in &[0.07, 0.19, 0.31] {
            assert_relative_eq!(f(d), f(-d), epsilon = 1e-15);
        }
    }

    #[test]
    fn spectral_oracle_agrees_near_working_point() {
        let model = reference_model();
        // kerr-free spectral route reproduces the closed form to solver precision
        let mut kerr_free = model.clone();
        kerr_free.eta_res = 0.0;
        for &d in &[0.1, 0.2, 0.3] {
            let drive = DriveParams::new(d, 0.1);
            let exact = exact_zz_spectral(&kerr_free, &drive, None).unwrap();
            let closed = zz_total(&drive, &model).unwrap();
            assert_relative_eq!(exact, closed, epsilon = 1e-8);
        }
        // with the self-Kerr on, agreement within 5% at 0.2 GHz
        let drive = DriveParams::new(0.2, 0.1);
        let exact = exact_zz_spectral(&model, &drive, None).unwrap();
        let closed = zz_total(&drive, &model).unwrap();
        assert!(
            (exact - closed).abs() / closed.abs() < 0.05,
            "exact {exact:.6e} vs closed {closed:.6e}"
        );
    }

    #[test]
    fn agreement_hierarchy() {
        let model = reference_model();
        for &d in &[0.15, 0.22, 0.27] {
            let drive = DriveParams::new(d, 0.1);
            let exact = exact_zz_spectral(&model, &drive, None).unwrap();
            let full = zz_total(&drive, &model).unwrap();
            let leading = zz_leading_residual(&drive, &model);
            assert!(
                (exact - full).abs() < (exact - leading).abs(),
                "at D={d}: full should beat leading order"
            );
        }
    }

    #[test]
    fn exact_root_between_seed_and_window() {
        let model = reference_model();
        let d0 = solve_cancellation_exact(&model, 0.1, None).unwrap();
        assert!(d0 > 0.26 && d0 < 0.28, "exact root {d0}");
    }
}
