// scratch: final fig2 calibration for the committed preset
use zzfree_core::circuit::*;

fn main() {
    let targets = DressedTargets {
        omega_left: 4.17, omega_right: 4.83,
        eta_left: -0.32, eta_right: -0.32,
        chi_left: -6.0e-3, chi_right: -8.4e-3,
        zz_static: Some(-5.7e-3), omega_res: None,
    };
    let t0 = std::time::Instant::now();
    match calibrate_bare_to_dressed(&targets, None) {
        Ok(set) => {
            println!("calibrated in {:?}", t0.elapsed());
            println!("ec_l={:.12} ej_l={:.12}", set.left.ec, set.left.ej);
            println!("ec_r={:.12} ej_r={:.12}", set.right.ec, set.right.ej);
            println!("g_l={:.12} g_r={:.12} wc={:.12}", set.coupling.g_left, set.coupling.g_right, set.resonator.bare_freq);
            let d = extract_dressed_params(&set).unwrap();
            println!("omega_L {:.8} omega_R {:.8} omega_C {:.8}", d.omega_left, d.omega_right, d.omega_res);
            println!("eta_L {:.8} eta_R {:.8} eta_C {:.5e}", d.eta_left, d.eta_right, d.eta_res);
            println!("chi_L {:.8e} chi_R {:.8e} zz {:.8e}", d.chi_left, d.chi_right, d.zz_static);
            println!("j_eff {:.8e} gtilde {:.6}/{:.6}", d.j_eff, d.gtilde_left, d.gtilde_right);
            println!("drive L: {:?}", d.drive_coeffs.iter().map(|(l,c)| format!("{l}={:.9}", c.re)).collect::<Vec<_>>());
            println!("drive R: {:?}", d.drive_coeffs_right.iter().map(|(l,c)| format!("{l}={:.9}", c.re)).collect::<Vec<_>>());
        }
        Err(e) => println!("FAILED: {e}"),
    }
}
