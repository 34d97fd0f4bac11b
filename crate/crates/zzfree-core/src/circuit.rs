//! Bare circuit model: charge-basis transmon diagonalization, assembly of
//! the transmon-resonator-transmon Hamiltonian, dressed-state labeling by
//! maximum overlap, extraction of the dressed model (frequencies,
//! anharmonicities, dispersive shifts, static ZZ, drive-operator
//! coefficients), and the inverse calibration from dressed targets back to
//! bare parameters.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, eigh};
use crate::operators::{patterns_for, DriveSide, ProductSpace};
use crate::optimize::{nelder_mead, NelderMeadOptions};

/// Hard cap on the product-space dimension before diagonalization.
pub const DEFAULT_DIM_CAP: usize = 40_000;

/// Relative eigenvalue solver tolerance used in convergence assertions.
pub const EIG_TOL: f64 = 1e-10;

/// Minimum bare-label overlap for a dressed-state assignment.
pub const OVERLAP_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonSpec {
    /// Charging energy E_C in GHz (linear frequency).
    pub ec: f64,
    /// Josephson energy E_J in GHz.
    pub ej: f64,
    /// Charge basis spans -charge_cutoff..=+charge_cutoff.
    pub charge_cutoff: usize,
    /// Number of eigenstates retained for the product space.
    pub kept_levels: usize,
}

impl TransmonSpec {
    pub fn new(ec: f64, ej: f64) -> Self {
        TransmonSpec { ec, ej, charge_cutoff: 30, kept_levels: 5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ec > 0.0) || !(self.ej > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "transmon energies must be positive (ec={}, ej={})",
                self.ec, self.ej
            )));
        }
        if self.charge_cutoff < 10 {
            return Err(Error::InvalidSpec(format!(
                "charge cutoff {} below minimum 10",
                self.charge_cutoff
            )));
        }
        if self.kept_levels < 3 || self.kept_levels > 2 * self.charge_cutoff + 1 {
            return Err(Error::InvalidSpec(format!(
                "kept_levels {} outside [3, {}]",
                self.kept_levels,
                2 * self.charge_cutoff + 1
            )));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.ej / self.ec < 20.0 {
            w.push(format!(
                "EJ/EC = {:.1} below the transmon regime guard of 20",
                self.ej / self.ec
            ));
        }
        w
    }

    /// Zero-point charge fluctuation (EJ / 32 EC)^(1/4).
    pub fn n_zpf(&self) -> f64 {
        (self.ej / (32.0 * self.ec)).powf(0.25)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    /// Bare resonator frequency in GHz.
    pub bare_freq: f64,
    /// Fock-space truncation.
    pub fock_dim: usize,
}

impl ResonatorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.bare_freq > 0.0) {
            return Err(Error::InvalidSpec("resonator frequency must be positive".into()));
        }
        if self.fock_dim < 2 {
            return Err(Error::InvalidSpec("resonator fock_dim must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub g_left: f64,
    pub g_right: f64,
}

impl CouplingSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.g_left.is_finite() || !self.g_right.is_finite() {
            return Err(Error::InvalidSpec("couplings must be finite".into()));
        }
        Ok(())
    }
}

/// Bundle of bare specs defining one device instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecSet {
    pub left: TransmonSpec,
    pub right: TransmonSpec,
    pub resonator: ResonatorSpec,
    pub coupling: CouplingSpec,
    #[serde(default = "default_dim_cap")]
    pub dim_cap: usize,
}

fn default_dim_cap() -> usize {
    DEFAULT_DIM_CAP
}

impl SpecSet {
    pub fn validate(&self) -> Result<()> {
        self.left.validate()?;
        self.right.validate()?;
        self.resonator.validate()?;
        self.coupling.validate()?;
        Ok(())
    }

    /// Soft guards: transmon regime and dispersive-regime ratios.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = self.left.warnings();
        w.extend(self.right.warnings());
        for (name, spec, g) in
            [("left", &self.left, self.coupling.g_left), ("right", &self.right, self.coupling.g_right)]
        {
            let wq = transmon_spectrum(spec).map(|s| s.levels[1]).unwrap_or(f64::NAN);
            let det = (wq - self.resonator.bare_freq).abs();
            if det > 0.0 && g.abs() / det >= 0.5 {
                w.push(format!(
                    "{name} qubit coupling ratio |g|/|detuning| = {:.2} outside dispersive guard",
                    g.abs() / det
                ));
            }
        }
        w
    }
}

/// Single-transmon eigensystem in the charge basis.
#[derive(Debug, Clone)]
pub struct TransmonSpectrum {
    /// Eigenvalues ascending, shifted so the ground state is zero (GHz).
    pub levels: Vec<f64>,
    /// Charge operator in the kept eigenbasis (kept_levels x kept_levels).
    pub charge_elements: DMatrix<f64>,
}

/// Diagonalize the transmon charge-basis Hamiltonian
/// 4 E_C n^2 - E_J cos(phi).
pub fn transmon_spectrum(spec: &TransmonSpec) -> Result<TransmonSpectrum> {
    spec.validate()?;
    let n = 2 * spec.charge_cutoff + 1;
    let mut h = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let q = k as f64 - spec.charge_cutoff as f64;
        h[(k, k)] = 4.0 * spec.ec * q * q;
        if k + 1 < n {
            h[(k, k + 1)] = -0.5 * spec.ej;
            h[(k + 1, k)] = -0.5 * spec.ej;
        }
    }
    let eig = eigh(&h)?;
    let ground = eig.values[0];
    let kept = spec.kept_levels;
    let levels: Vec<f64> = eig.values.iter().take(kept).map(|e| e - ground).collect();

    // charge operator in the eigenbasis; fix eigenvector signs so that
    // <j|n|j+1> > 0, which pins the phase convention downstream
    let mut vectors = eig.vectors.columns(0, kept).into_owned();
    for j in 0..kept.saturating_sub(1) {
        let mut elem = 0.0;
        for k in 0..n {
            let q = k as f64 - spec.charge_cutoff as f64;
            elem += vectors[(k, j)] * q * vectors[(k, j + 1)];
        }
        if elem < 0.0 {
            for k in 0..n {
                vectors[(k, j + 1)] = -vectors[(k, j + 1)];
            }
        }
    }
    let mut charge = DMatrix::<f64>::zeros(kept, kept);
    for i in 0..kept {
        for j in 0..kept {
            let mut elem = 0.0;
            for k in 0..n {
                let q = k as f64 - spec.charge_cutoff as f64;
                elem += vectors[(k, i)] * q * vectors[(k, j)];
            }
            charge[(i, j)] = elem;
        }
    }
    Ok(TransmonSpectrum { levels, charge_elements: charge })
}

/// Assembled product-space Hamiltonian with its bare ingredients.
pub struct FullHamiltonian {
    pub space: ProductSpace,
    pub matrix: DMatrix<f64>,
    pub left: TransmonSpectrum,
    pub right: TransmonSpectrum,
}

/// Build the full Hamiltonian: transmon terms, resonator term, and the
/// charge-coupling interaction (a + a^dag)(g_L n_L + g_R n_R), expressed in
/// the product of truncated transmon eigenbases and the Fock basis. GHz.
pub fn build_full_hamiltonian(set: &SpecSet) -> Result<FullHamiltonian> {
    set.validate()?;
    let left = transmon_spectrum(&set.left)?;
    let right = transmon_spectrum(&set.right)?;
    let space =
        ProductSpace::new(set.left.kept_levels, set.resonator.fock_dim, set.right.kept_levels);
    if space.dim() > set.dim_cap {
        return Err(Error::ResourceLimit { dim: space.dim(), cap: set.dim_cap });
    }
    let dim = space.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (idx, (jl, nc, jr)) in space.labels().enumerate() {
        h[(idx, idx)] = left.levels[jl] + right.levels[jr] + set.resonator.bare_freq * nc as f64;
    }
    // interaction (a + a^dag)(g_L n_L + g_R n_R)
    for jl in 0..space.dim_left {
        for jr in 0..space.dim_right {
            for nc in 0..space.dim_res {
                let row = space.index(jl, nc, jr);
                for nc2 in [nc.wrapping_sub(1), nc + 1] {
                    if nc2 >= space.dim_res {
                        continue;
                    }
                    let ladder = if nc2 == nc + 1 {
                        ((nc + 1) as f64).sqrt()
                    } else {
                        (nc as f64).sqrt()
                    };
                    for jl2 in 0..space.dim_left {
                        let v = set.coupling.g_left * left.charge_elements[(jl, jl2)] * ladder;
                        if v != 0.0 {
                            h[(row, space.index(jl2, nc2, jr))] += v;
                        }
                    }
                    for jr2 in 0..space.dim_right {
                        let v = set.coupling.g_right * right.charge_elements[(jr, jr2)] * ladder;
                        if v != 0.0 {
                            h[(row, space.index(jl, nc2, jr2))] += v;
                        }
                    }
                }
            }
        }
    }
    let defect = linalg::symmetry_defect(&h);
    let scale = linalg::max_abs(&h).max(1.0);
    if defect > 1e-12 * scale {
        return Err(Error::NumericalFailure(format!(
            "hamiltonian hermiticity defect {defect:.3e} above 1e-12 relative"
        )));
    }
    Ok(FullHamiltonian { space, matrix: h, left, right })
}

/// One labeled dressed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabeledState {
    /// Bare product label (j_L, n_C, j_R).
    pub label: (usize, usize, usize),
    /// Eigenvalue in GHz, relative to the labeled ground state.
    pub energy: f64,
    /// Squared overlap with the bare product state, in (0.5, 1].
    pub overlap: f64,
}

/// Dressed spectrum with bare-label assignments and the eigenvectors needed
/// for matrix-element extraction.
pub struct LabeledSpectrum {
    pub space: ProductSpace,
    pub states: Vec<LabeledState>,
    eigvecs: DMatrix<f64>,
    column_of: std::collections::HashMap<(usize, usize, usize), usize>,
    /// Assignments with overlap in (0.25, 0.5]: too hybridized to count as
    /// dressed states, but still usable for optional ladder coefficients.
    loose_column_of: std::collections::HashMap<(usize, usize, usize), usize>,
    /// Offset subtracted from raw eigenvalues: energy of label (0,0,0).
    pub ground_energy: f64,
}

impl LabeledSpectrum {
    pub fn energy(&self, label: (usize, usize, usize)) -> Result<f64> {
        self.states
            .iter()
            .find(|s| s.label == label)
            .map(|s| s.energy)
            .ok_or_else(|| Error::AmbiguousDressing { label, overlap: 0.0 })
    }

    /// Matrix element of a bare-basis operator between two labeled states.
    /// `op` maps (bra bare index, ket bare index) to the operator entry.
    pub fn matrix_element<F: Fn(usize, usize) -> f64>(
        &self,
        bra: (usize, usize, usize),
        ket: (usize, usize, usize),
        op: F,
    ) -> Result<f64> {
        let cb = *self
            .column_of
            .get(&bra)
            .ok_or(Error::AmbiguousDressing { label: bra, overlap: 0.0 })?;
        let ck = *self
            .column_of
            .get(&ket)
            .ok_or(Error::AmbiguousDressing { label: ket, overlap: 0.0 })?;
        let dim = self.space.dim();
        let mut acc = 0.0;
        for i in 0..dim {
            let vi = self.eigvecs[(i, cb)];
            if vi == 0.0 {
                continue;
            }
            for j in 0..dim {
                let o = op(i, j);
                if o != 0.0 {
                    acc += vi * o * self.eigvecs[(j, ck)];
                }
            }
        }
        Ok(acc)
    }
}

/// Diagonalize and assign bare product labels by maximum overlap.
///
/// Labels with max squared overlap at or below 0.5 are rejected when they
/// fall inside `required` (low-lying states the dressed model reads off);
/// other labels are silently skipped.
pub fn diagonalize_and_label(full: &FullHamiltonian) -> Result<LabeledSpectrum> {
    let eig = eigh(&full.matrix)?;
    let space = full.space;
    let dim = space.dim();
    // labels the dressed model and drive-coefficient extraction read off
    let required = |l: (usize, usize, usize)| {
        matches!(
            l,
            (0, 0, 0)
                | (1, 0, 0)
                | (0, 0, 1)
                | (2, 0, 0)
                | (0, 0, 2)
                | (0, 1, 0)
                | (0, 2, 0)
                | (1, 1, 0)
                | (0, 1, 1)
                | (1, 0, 1)
                | (1, 0, 2)
                | (2, 0, 1)
        )
    };

    let mut states = Vec::new();
    let mut column_of = std::collections::HashMap::new();
    let mut claimed: Vec<Option<(usize, usize, usize)>> = vec![None; dim];
    for label in space.labels() {
        let bare_idx = space.index(label.0, label.1, label.2);
        let mut best = (0usize, 0.0f64);
        for k in 0..dim {
            let ov = eig.vectors[(bare_idx, k)].powi(2);
            if ov > best.1 {
                best = (k, ov);
            }
        }
        let (col, overlap) = best;
        if overlap <= OVERLAP_THRESHOLD {
            if required(label) {
                return Err(Error::AmbiguousDressing { label, overlap });
            }
            continue;
        }
        if let Some(prev) = claimed[col] {
            return Err(Error::NumericalFailure(format!(
                "labeling not injective: {label:?} and {prev:?} both claim eigenstate {col}"
            )));
        }
        claimed[col] = Some(label);
        column_of.insert(label, col);
        states.push(LabeledState { label, energy: eig.values[col], overlap });
    }

    let ground = states
        .iter()
        .find(|s| s.label == (0, 0, 0))
        .ok_or(Error::AmbiguousDressing { label: (0, 0, 0), overlap: 0.0 })?
        .energy;
    for s in states.iter_mut() {
        s.energy -= ground;
    }

    // fix eigenvector phases: dominant bare component positive
    let mut eigvecs = eig.vectors;
    for (&label, &col) in column_of.iter() {
        let bare_idx = space.index(label.0, label.1, label.2);
        if eigvecs[(bare_idx, col)] < 0.0 {
            for i in 0..dim {
                eigvecs[(i, col)] = -eigvecs[(i, col)];
            }
        }
    }

    Ok(LabeledSpectrum { space, states, eigvecs, column_of, ground_energy: ground })
}

/// Dressed Kerr-model parameters, all linear frequencies in GHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DressedModel {
    pub omega_left: f64,
    pub omega_right: f64,
    pub omega_res: f64,
    pub eta_left: f64,
    pub eta_right: f64,
    pub eta_res: f64,
    pub chi_left: f64,
    pub chi_right: f64,
    /// Static two-qubit ZZ coupling chi'_LR.
    pub zz_static: f64,
    /// omega_left - omega_right.
    pub detuning_lr: f64,
    /// Exchange coupling from the labeled one-excitation doublet.
    pub j_eff: f64,
    /// Dressed-basis expansion coefficients of the left charge operator.
    pub drive_coeffs: Vec<(String, C64)>,
    /// Same expansion for the right charge operator.
    #[serde(default)]
    pub drive_coeffs_right: Vec<(String, C64)>,
    pub gtilde_left: f64,
    pub gtilde_right: f64,
}

impl DressedModel {
    pub fn coeff(&self, label: &str) -> Option<C64> {
        self.drive_coeffs.iter().find(|(l, _)| l == label).map(|(_, c)| *c)
    }

    pub fn coeff_right(&self, label: &str) -> Option<C64> {
        self.drive_coeffs_right.iter().find(|(l, _)| l == label).map(|(_, c)| *c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta_left >= 0.0 || self.eta_right >= 0.0 {
            return Err(Error::InvalidSpec("transmon anharmonicities must be negative".into()));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.eta_res.abs() * 10.0 > self.eta_left.abs() {
            w.push(format!(
                "resonator self-Kerr {:.3e} GHz not small against qubit anharmonicity",
                self.eta_res
            ));
        }
        w
    }
}

/// Read the dressed model off a labeled spectrum.
pub fn dressed_from_spectrum(
    set: &SpecSet,
    full: &FullHamiltonian,
    labeled: &LabeledSpectrum,
) -> Result<DressedModel> {
    let e = |l: (usize, usize, usize)| labeled.energy(l);
    let omega_left = e((1, 0, 0))?;
    let omega_right = e((0, 0, 1))?;
    let omega_res = e((0, 1, 0))?;
    let eta_left = e((2, 0, 0))? - 2.0 * omega_left;
    let eta_right = e((0, 0, 2))? - 2.0 * omega_right;
    let eta_res = e((0, 2, 0))? - 2.0 * omega_res;
    let chi_left = e((1, 1, 0))? - omega_left - omega_res;
    let chi_right = e((0, 1, 1))? - omega_right - omega_res;
    let zz_static = e((1, 0, 1))? - omega_left - omega_right;

    // exchange J from the one-excitation doublet, projected onto the two
    // bare single-excitation states and symmetrically orthonormalized
    let j_eff = {
        let sp = labeled.space;
        let b1 = sp.index(1, 0, 0);
        let b2 = sp.index(0, 0, 1);
        let c1 = labeled.column_of[&(1, 0, 0)];
        let c2 = labeled.column_of[&(0, 0, 1)];
        let e1 = labeled.energy((1, 0, 0))? + labeled.ground_energy;
        let e2 = labeled.energy((0, 0, 1))? + labeled.ground_energy;
        let w = [
            [labeled.eigvecs[(b1, c1)], labeled.eigvecs[(b1, c2)]],
            [labeled.eigvecs[(b2, c1)], labeled.eigvecs[(b2, c2)]],
        ];
        let m01 = w[0][0] * e1 * w[1][0] + w[0][1] * e2 * w[1][1];
        let m00 = w[0][0] * e1 * w[0][0] + w[0][1] * e2 * w[0][1];
        let m11 = w[1][0] * e1 * w[1][0] + w[1][1] * e2 * w[1][1];
        let s01 = w[0][0] * w[1][0] + w[0][1] * w[1][1];
        let s00 = w[0][0] * w[0][0] + w[0][1] * w[0][1];
        let s11 = w[1][0] * w[1][0] + w[1][1] * w[1][1];
        // 2x2 symmetric orthonormalization: S^{-1/2} M S^{-1/2}
        let (s_a, s_b, s_c) = (s00, s01, s11);
        let tr = s_a + s_c;
        let det = s_a * s_c - s_b * s_b;
        let l1 = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
        let l2 = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
        // eigenvectors of S
        let (v1, v2) = if s_b.abs() > 1e-14 {
            let u1 = [l1 - s_c, s_b];
            let u2 = [l2 - s_c, s_b];
            (u1, u2)
        } else {
            ([1.0, 0.0], [0.0, 1.0])
        };
        let n1 = (v1[0] * v1[0] + v1[1] * v1[1]).sqrt();
        let n2 = (v2[0] * v2[0] + v2[1] * v2[1]).sqrt();
        let v1 = [v1[0] / n1, v1[1] / n1];
        let v2 = [v2[0] / n2, v2[1] / n2];
        let inv_sqrt = |v: [f64; 2], l: f64| {
            let s = 1.0 / l.sqrt();
            [[v[0] * v[0] * s, v[0] * v[1] * s], [v[1] * v[0] * s, v[1] * v[1] * s]]
        };
        let a = inv_sqrt(v1, l1);
        let b = inv_sqrt(v2, l2);
        let si = [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]];
        let m = [[m00, m01], [m01, m11]];
        // (S^{-1/2} M S^{-1/2})[0][1]
        let mut tmp = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    tmp[i][j] += si[i][k] * m[k][j];
                }
            }
        }
        let mut heff01 = 0.0;
        for k in 0..2 {
            heff01 += tmp[0][k] * si[k][1];
        }
        heff01
    };

    let drive_coeffs = extract_drive_coefficients_with(full, labeled, DriveSide::Left)?;
    let drive_coeffs_right = extract_drive_coefficients_with(full, labeled, DriveSide::Right)?;

    Ok(DressedModel {
        omega_left,
        omega_right,
        omega_res,
        eta_left,
        eta_right,
        eta_res,
        chi_left,
        chi_right,
        zz_static,
        detuning_lr: omega_left - omega_right,
        j_eff,
        drive_coeffs,
        drive_coeffs_right,
        gtilde_left: set.left.n_zpf() * set.coupling.g_left,
        gtilde_right: set.right.n_zpf() * set.coupling.g_right,
    })
}

/// Diagonalize the full circuit and extract the dressed model.
pub fn extract_dressed_params(set: &SpecSet) -> Result<DressedModel> {
    let full = build_full_hamiltonian(set)?;
    let labeled = diagonalize_and_label(&full)?;
    dressed_from_spectrum(set, &full, &labeled)
}

/// Coefficients of the dressed charge-operator expansion for a drive on the
/// given side, solved from labeled matrix elements of the bare charge
/// operator. Labels follow the pattern naming of [`crate::operators`].
pub fn extract_drive_coefficients(set: &SpecSet, which: DriveSide) -> Result<Vec<(String, C64)>> {
    let full = build_full_hamiltonian(set)?;
    let labeled = diagonalize_and_label(&full)?;
    extract_drive_coefficients_with(&full, &labeled, which)
}

fn charge_op_entry(
    full: &FullHamiltonian,
    which: DriveSide,
    space: &ProductSpace,
    i: usize,
    j: usize,
) -> f64 {
    let (il, ic, ir) = space.label_of(i);
    let (jl, jc, jr) = space.label_of(j);
    if ic != jc {
        return 0.0;
    }
    match which {
        DriveSide::Left => {
            if ir != jr {
                0.0
            } else {
                full.left.charge_elements[(il, jl)]
            }
        }
        DriveSide::Right => {
            if il != jl {
                0.0
            } else {
                full.right.charge_elements[(ir, jr)]
            }
        }
    }
}

fn extract_drive_coefficients_with(
    full: &FullHamiltonian,
    labeled: &LabeledSpectrum,
    which: DriveSide,
) -> Result<Vec<(String, C64)>> {
    let sp = labeled.space;
    let elem = |bra: (usize, usize, usize), ket: (usize, usize, usize)| -> Result<f64> {
        labeled.matrix_element(bra, ket, |i, j| charge_op_entry(full, which, &sp, i, j))
    };
    let sqrt2 = 2f64.sqrt();
    // direct, cross, and conditioned lowering coefficients on both qubits
    let b_r = elem((0, 0, 0), (0, 0, 1))?;
    let nl_br = elem((1, 0, 0), (1, 0, 1))? - b_r;
    let nr_br = elem((0, 0, 1), (0, 0, 2))? / sqrt2 - b_r;
    let nlnr_br = elem((1, 0, 1), (1, 0, 2))? / sqrt2 - b_r - nl_br - nr_br;
    let b_l = elem((0, 0, 0), (1, 0, 0))?;
    let nr_bl = elem((0, 0, 1), (1, 0, 1))? - b_l;
    let nl_bl = elem((1, 0, 0), (2, 0, 0))? / sqrt2 - b_l;
    let nlnr_bl = elem((1, 0, 1), (2, 0, 1))? / sqrt2 - b_l - nr_bl - nl_bl;

    use crate::operators::DrivePattern::*;
    let value = |p: crate::operators::DrivePattern| -> f64 {
        match p {
            LowerLeft => b_l,
            LowerRight => b_r,
            CondLowerRight => nl_br,
            SelfCondLowerRight => nr_br,
            DoubleCondLowerRight => nlnr_br,
            CondLowerLeft => nr_bl,
            SelfCondLowerLeft => nl_bl,
            DoubleCondLowerLeft => nlnr_bl,
        }
    };
    Ok(patterns_for(which)
        .into_iter()
        .map(|p| (p.label().to_string(), C64::new(value(p), 0.0)))
        .collect())
}

/// Exchange-coupling estimate from bare frequencies and normalized couplings.
pub fn exchange_estimate(set: &SpecSet) -> Result<f64> {
    let left = transmon_spectrum(&set.left)?;
    let right = transmon_spectrum(&set.right)?;
    let (wl, wr, wc) = (left.levels[1], right.levels[1], set.resonator.bare_freq);
    let gl = set.left.n_zpf() * set.coupling.g_left;
    let gr = set.right.n_zpf() * set.coupling.g_right;
    Ok(gl * gr
        * ((wl + wr - 2.0 * wc) / (2.0 * (wl - wc) * (wr - wc))
            - (wl + wr + 2.0 * wc) / (2.0 * (wl + wc) * (wr + wc))))
}

/// Perturbative conditional-drive coefficient estimate:
/// n_zpf * 2 J eta / (Delta_LR (eta + Delta_LR)).
pub fn acx_estimate(n_zpf: f64, j: f64, eta: f64, delta_lr: f64) -> f64 {
    n_zpf * 2.0 * j * eta / (delta_lr * (eta + delta_lr))
}

/// Dressed-value targets for the inverse calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedTargets {
    pub omega_left: f64,
    pub omega_right: f64,
    pub eta_left: f64,
    pub eta_right: f64,
    pub chi_left: f64,
    pub chi_right: f64,
    /// Optional static-ZZ target; when set it joins the residual.
    pub zz_static: Option<f64>,
    /// Dressed resonator frequency target (defaults to mid-qubit + 5 GHz).
    pub omega_res: Option<f64>,
}

/// Relative tolerances defining calibration success.
const CAL_FREQ_TOL: f64 = 0.01;
const CAL_CHI_TOL: f64 = 0.05;
/// Tighter internal least-squares weights so the fit does not settle at the
/// edge of the acceptance tolerances.
const CAL_FREQ_WEIGHT: f64 = 5e-4;
const CAL_CHI_WEIGHT: f64 = 5e-3;

/// Derivative-free least squares from dressed targets to bare parameters.
///
/// Transmon (E_C, E_J) pairs are fitted per qubit first, then the couplings
/// and bare resonator frequency, then everything is polished jointly on the
/// full diagonalization. Success means frequencies within 1% and chi values
/// within 5% relative.
pub fn calibrate_bare_to_dressed(
    targets: &DressedTargets,
    initial: Option<&SpecSet>,
) -> Result<SpecSet> {
    let omega_res_target =
        targets.omega_res.unwrap_or(0.5 * (targets.omega_left + targets.omega_right) + 5.0);

    let fit_transmon = |omega: f64, eta: f64, seed: TransmonSpec| -> TransmonSpec {
        let r = nelder_mead(
            |x: &[f64]| {
                let spec = TransmonSpec { ec: x[0].abs(), ej: x[1].abs(), ..seed };
                match transmon_spectrum(&spec) {
                    Ok(s) => {
                        let w = s.levels[1];
                        let e = s.levels[2] - 2.0 * s.levels[1];
                        ((w - omega) / omega).powi(2) + ((e - eta) / eta).powi(2)
                    }
                    Err(_) => f64::INFINITY,
                }
            },
            &[seed.ec, seed.ej],
            &[0.02, 0.5],
            &NelderMeadOptions { max_evals: 300, f_tol: 1e-20, x_tol: 1e-12 },
        );
        TransmonSpec { ec: r.x[0].abs(), ej: r.x[1].abs(), ..seed }
    };

    let base = initial.cloned().unwrap_or(SpecSet {
        left: TransmonSpec::new(-targets.eta_left, 20.0),
        right: TransmonSpec::new(-targets.eta_right, 20.0),
        resonator: ResonatorSpec { bare_freq: omega_res_target, fock_dim: 6 },
        coupling: CouplingSpec { g_left: 0.3, g_right: 0.3 },
        dim_cap: DEFAULT_DIM_CAP,
    });

    // asymptotic seeds: eta ~ -E_C, omega ~ sqrt(8 EJ EC) - EC
    let seed_left = TransmonSpec {
        ec: -targets.eta_left,
        ej: (targets.omega_left - targets.eta_left).powi(2) / (8.0 * -targets.eta_left),
        ..base.left
    };
    let seed_right = TransmonSpec {
        ec: -targets.eta_right,
        ej: (targets.omega_right - targets.eta_right).powi(2) / (8.0 * -targets.eta_right),
        ..base.right
    };
    let left0 = fit_transmon(targets.omega_left, targets.eta_left, seed_left);
    let right0 = fit_transmon(targets.omega_right, targets.eta_right, seed_right);

    let residual = |set: &SpecSet| -> f64 {
        match extract_dressed_params(set) {
            Ok(d) => {
                let mut r = 0.0;
                r += ((d.omega_left - targets.omega_left) / (CAL_FREQ_WEIGHT * targets.omega_left))
                    .powi(2);
                r += ((d.omega_right - targets.omega_right) / (CAL_FREQ_WEIGHT * targets.omega_right))
                    .powi(2);
                r += ((d.eta_left - targets.eta_left) / (CAL_FREQ_WEIGHT * targets.eta_left)).powi(2);
                r += ((d.eta_right - targets.eta_right) / (CAL_FREQ_WEIGHT * targets.eta_right))
                    .powi(2);
                if targets.omega_res.is_some() {
                    r += ((d.omega_res - omega_res_target) / (CAL_FREQ_WEIGHT * omega_res_target))
                        .powi(2);
                }
                r += ((d.chi_left - targets.chi_left) / (CAL_CHI_WEIGHT * targets.chi_left)).powi(2);
                r += ((d.chi_right - targets.chi_right) / (CAL_CHI_WEIGHT * targets.chi_right))
                    .powi(2);
                if let Some(zz) = targets.zz_static {
                    r += ((d.zz_static - zz) / (CAL_CHI_WEIGHT * zz)).powi(2);
                }
                r
            }
            Err(_) => f64::INFINITY,
        }
    };

    // stage 2: couplings and bare resonator frequency
    let mut set = SpecSet { left: left0, right: right0, ..base.clone() };
    let r2 = nelder_mead(
        |x: &[f64]| {
            let s = SpecSet {
                coupling: CouplingSpec { g_left: x[0].abs(), g_right: x[1].abs() },
                resonator: ResonatorSpec { bare_freq: x[2].abs(), ..set.resonator },
                ..set.clone()
            };
            residual(&s)
        },
        &[set.coupling.g_left, set.coupling.g_right, set.resonator.bare_freq],
        &[0.05, 0.05, 0.3],
        &NelderMeadOptions { max_evals: 220, f_tol: 1e-10, x_tol: 1e-9 },
    );
    set.coupling = CouplingSpec { g_left: r2.x[0].abs(), g_right: r2.x[1].abs() };
    set.resonator.bare_freq = r2.x[2].abs();

    // stage 3: joint polish of all seven bare parameters, two rounds with
    // shrinking simplex scales
    let mut best_x = vec![
        set.left.ec,
        set.left.ej,
        set.right.ec,
        set.right.ej,
        set.coupling.g_left,
        set.coupling.g_right,
        set.resonator.bare_freq,
    ];
    let from_x = |x: &[f64]| SpecSet {
        left: TransmonSpec { ec: x[0].abs(), ej: x[1].abs(), ..set.left },
        right: TransmonSpec { ec: x[2].abs(), ej: x[3].abs(), ..set.right },
        coupling: CouplingSpec { g_left: x[4].abs(), g_right: x[5].abs() },
        resonator: ResonatorSpec { bare_freq: x[6].abs(), ..set.resonator },
        dim_cap: set.dim_cap,
    };

    // stage 3: block Gauss-Seidel refinement. Each block is a small Newton
    // solve on the sub-map it controls most directly; cross couplings are
    // dressing-level corrections, so the outer loop contracts quickly.
    let fit_zz = targets.zz_static.is_some();
    'outer: for _outer in 0..10 {
        let Ok(current) = extract_dressed_params(&from_x(&best_x)) else { break };
        let sup = {
            let mut v = vec![
                (current.omega_left - targets.omega_left).abs(),
                (current.omega_right - targets.omega_right).abs(),
                (current.eta_left - targets.eta_left).abs(),
                (current.eta_right - targets.eta_right).abs(),
                (current.chi_left - targets.chi_left).abs() * 10.0,
                (current.chi_right - targets.chi_right).abs() * 10.0,
            ];
            if let Some(zz) = targets.zz_static {
                v.push((current.zz_static - zz).abs() * 10.0);
            }
            v.into_iter().fold(0.0f64, f64::max)
        };
        if sup < 1e-9 {
            break;
        }
        // qubit blocks: (E_C, E_J) against dressed (omega, eta)
        for (off, w_t, e_t) in [
            (0usize, targets.omega_left, targets.eta_left),
            (2usize, targets.omega_right, targets.eta_right),
        ] {
            for _ in 0..3 {
                let Ok(d0) = extract_dressed_params(&from_x(&best_x)) else { break 'outer };
                let (w0, e0) = if off == 0 {
                    (d0.omega_left, d0.eta_left)
                } else {
                    (d0.omega_right, d0.eta_right)
                };
                let r = [w0 - w_t, e0 - e_t];
                if r[0].abs().max(r[1].abs()) < 1e-10 {
                    break;
                }
                let mut jac = [[0.0f64; 2]; 2];
                for j in 0..2 {
                    let h = 1e-6 * best_x[off + j].abs().max(1e-3);
                    let mut xp = best_x.clone();
                    xp[off + j] += h;
                    let Ok(dp) = extract_dressed_params(&from_x(&xp)) else { break 'outer };
                    let (wp, ep) = if off == 0 {
                        (dp.omega_left, dp.eta_left)
                    } else {
                        (dp.omega_right, dp.eta_right)
                    };
                    jac[0][j] = (wp - w0) / h;
                    jac[1][j] = (ep - e0) / h;
                }
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                if det.abs() < 1e-12 {
                    break;
                }
                let dx0 = (r[0] * jac[1][1] - r[1] * jac[0][1]) / det;
                let dx1 = (jac[0][0] * r[1] - jac[1][0] * r[0]) / det;
                best_x[off] -= dx0;
                best_x[off + 1] -= dx1;
            }
        }
        // coupling block: (g_L, g_R[, omega_bar_C]) against (chi_L, chi_R[, zz])
        let m = if fit_zz { 3 } else { 2 };
        for _ in 0..3 {
            let Ok(d0) = extract_dressed_params(&from_x(&best_x)) else { break 'outer };
            let mut r = vec![d0.chi_left - targets.chi_left, d0.chi_right - targets.chi_right];
            if let Some(zz) = targets.zz_static {
                r.push(d0.zz_static - zz);
            }
            if r.iter().fold(0.0f64, |mx, e| mx.max(e.abs())) < 1e-11 {
                break;
            }
            let idx = [4usize, 5, 6];
            let mut jac = DMatrix::<f64>::zeros(m, m);
            for j in 0..m {
                let h = 1e-5 * best_x[idx[j]].abs().max(1e-3);
                let mut xp = best_x.clone();
                xp[idx[j]] += h;
                let Ok(dp) = extract_dressed_params(&from_x(&xp)) else { break 'outer };
                let rp = [
                    dp.chi_left - targets.chi_left,
                    dp.chi_right - targets.chi_right,
                    dp.zz_static - targets.zz_static.unwrap_or(0.0),
                ];
                for i in 0..m {
                    jac[(i, j)] = (rp[i] - r[i]) / h;
                }
            }
            let rhs = nalgebra::DVector::from_vec(r.clone());
            let Some(delta) = jac.lu().solve(&rhs) else { break };
            // damped update keeps bare parameters physical
            let mut damping: f64 = 1.0;
            loop {
                let mut cand = best_x.clone();
                let mut sane = true;
                for j in 0..m {
                    cand[idx[j]] -= damping * delta[j];
                    if cand[idx[j]] <= 0.0 {
                        sane = false;
                    }
                }
                if sane || damping < 0.05 {
                    if sane {
                        best_x = cand;
                    }
                    break;
                }
                damping *= 0.5;
            }
        }
    }
    let fitted = from_x(&best_x);
    let best_f = residual(&fitted);
    // judge against the contract tolerances
    let d = extract_dressed_params(&fitted)?;
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let freq_ok = rel(d.omega_left, targets.omega_left) < CAL_FREQ_TOL
        && rel(d.omega_right, targets.omega_right) < CAL_FREQ_TOL
        && rel(d.eta_left, targets.eta_left) < CAL_FREQ_TOL
        && rel(d.eta_right, targets.eta_right) < CAL_FREQ_TOL;
    let chi_ok = rel(d.chi_left, targets.chi_left) < CAL_CHI_TOL
        && rel(d.chi_right, targets.chi_right) < CAL_CHI_TOL
        && targets.zz_static.map(|zz| rel(d.zz_static, zz) < CAL_CHI_TOL).unwrap_or(true);
    if freq_ok && chi_ok {
        Ok(fitted)
    } else {
        Err(Error::CalibrationFailure { residual: best_f })
    }
}
