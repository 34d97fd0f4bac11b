//! Product-space bookkeeping and sparse operator builders for the
//! transmon-resonator-transmon Hilbert space.

use num_complex::Complex64 as C64;

use crate::linalg::CsMat;

/// Index layout for the |j_L, n_C, j_R> product basis.
///
/// Internally the resonator index runs fastest so resonator-only operators
/// act on contiguous blocks of each (j_L, j_R) qubit sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductSpace {
    pub dim_left: usize,
    pub dim_res: usize,
    pub dim_right: usize,
}

impl ProductSpace {
    pub fn new(dim_left: usize, dim_res: usize, dim_right: usize) -> Self {
        ProductSpace { dim_left, dim_res, dim_right }
    }

    pub fn dim(&self) -> usize {
        self.dim_left * self.dim_res * self.dim_right
    }

    pub fn index(&self, j_left: usize, n_res: usize, j_right: usize) -> usize {
        (j_left * self.dim_right + j_right) * self.dim_res + n_res
    }

    pub fn label_of(&self, idx: usize) -> (usize, usize, usize) {
        let n_res = idx % self.dim_res;
        let rest = idx / self.dim_res;
        let j_right = rest % self.dim_right;
        let j_left = rest / self.dim_right;
        (j_left, n_res, j_right)
    }

    /// Iterate all (j_L, n_C, j_R) labels in index order.
    pub fn labels(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.dim()).map(|i| self.label_of(i))
    }

    /// Number of (j_L, j_R) qubit sectors.
    pub fn qubit_sectors(&self) -> usize {
        self.dim_left * self.dim_right
    }

    pub fn sector_of(&self, j_left: usize, j_right: usize) -> usize {
        j_left * self.dim_right + j_right
    }
}

/// Dense matrix on a single mode, embedded into the product space.
#[derive(Debug, Clone)]
pub enum Mode {
    Left,
    Res,
    Right,
}

/// Real lowering operator b on `dim` levels: b[n-1, n] = sqrt(n).
pub fn lowering(dim: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; dim]; dim];
    for n in 1..dim {
        m[n - 1][n] = (n as f64).sqrt();
    }
    m
}

/// Real number operator diag(0..dim-1).
pub fn number(dim: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; dim]; dim];
    for (n, row) in m.iter_mut().enumerate() {
        row[n] = n as f64;
    }
    m
}

/// Embed a single-mode complex matrix into the product space as a CsMat.
pub fn embed(space: &ProductSpace, mode: Mode, op: &[Vec<C64>], drop_tol: f64) -> CsMat {
    let mut triplets = Vec::new();
    let (dl, dc, dr) = (space.dim_left, space.dim_res, space.dim_right);
    match mode {
        Mode::Left => {
            for (a, row) in op.iter().enumerate().take(dl) {
                for (b, &v) in row.iter().enumerate().take(dl) {
                    if v.norm() == 0.0 {
                        continue;
                    }
                    for nc in 0..dc {
                        for jr in 0..dr {
                            triplets.push((space.index(a, nc, jr), space.index(b, nc, jr), v));
                        }
                    }
                }
            }
        }
        Mode::Res => {
            for (a, row) in op.iter().enumerate().take(dc) {
                for (b, &v) in row.iter().enumerate().take(dc) {
                    if v.norm() == 0.0 {
                        continue;
                    }
                    for jl in 0..dl {
                        for jr in 0..dr {
                            triplets.push((space.index(jl, a, jr), space.index(jl, b, jr), v));
                        }
                    }
                }
            }
        }
        Mode::Right => {
            for (a, row) in op.iter().enumerate().take(dr) {
                for (b, &v) in row.iter().enumerate().take(dr) {
                    if v.norm() == 0.0 {
                        continue;
                    }
                    for jl in 0..dl {
                        for nc in 0..dc {
                            triplets.push((space.index(jl, nc, a), space.index(jl, nc, b), v));
                        }
                    }
                }
            }
        }
    }
    CsMat::from_triplets(space.dim(), &triplets, drop_tol)
}

pub fn to_complex(m: &[Vec<f64>]) -> Vec<Vec<C64>> {
    m.iter().map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect()).collect()
}

/// Qubit-sector operator patterns used by the dressed charge-operator
/// expansion: each pattern is a product of number operators and one
/// lowering operator on the two-qubit space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DrivePattern {
    /// b_L
    LowerLeft,
    /// b_R
    LowerRight,
    /// n_L b_R
    CondLowerRight,
    /// n_R b_R
    SelfCondLowerRight,
    /// n_L n_R b_R
    DoubleCondLowerRight,
    /// n_R b_L
    CondLowerLeft,
    /// n_L b_L
    SelfCondLowerLeft,
    /// n_L n_R b_L
    DoubleCondLowerLeft,
}

impl DrivePattern {
    pub fn label(&self) -> &'static str {
        match self {
            DrivePattern::LowerLeft => "A_L",
            DrivePattern::LowerRight => "A_R",
            DrivePattern::CondLowerRight => "A_CX",
            DrivePattern::SelfCondLowerRight => "A_Rp",
            DrivePattern::DoubleCondLowerRight => "A_CXp",
            DrivePattern::CondLowerLeft => "A_CXbar",
            DrivePattern::SelfCondLowerLeft => "A_Lp",
            DrivePattern::DoubleCondLowerLeft => "A_CXbarp",
        }
    }

    /// Matrix element <jl', jr'| P |jl, jr> of the pattern on the two-qubit space.
    pub fn element(&self, from: (usize, usize), to: (usize, usize)) -> f64 {
        let (jl, jr) = from;
        let (pl, pr) = to;
        let lower_l = pl + 1 == jl && pr == jr;
        let lower_r = pr + 1 == jr && pl == jl;
        match self {
            DrivePattern::LowerLeft => {
                if lower_l { (jl as f64).sqrt() } else { 0.0 }
            }
            DrivePattern::SelfCondLowerLeft => {
                if lower_l { pl as f64 * (jl as f64).sqrt() } else { 0.0 }
            }
            DrivePattern::CondLowerLeft => {
                if lower_l { jr as f64 * (jl as f64).sqrt() } else { 0.0 }
            }
            DrivePattern::DoubleCondLowerLeft => {
                if lower_l { pl as f64 * jr as f64 * (jl as f64).sqrt() } else { 0.0 }
            }
            DrivePattern::LowerRight => {
                if lower_r { (jr as f64).sqrt() } else { 0.0 }
            }
            DrivePattern::SelfCondLowerRight => {
                if lower_r { pr as f64 * (jr as f64).sqrt() } else { 0.0 }
            }
            DrivePattern::CondLowerRight => {
                if lower_r { jl as f64 * (jr as f64).sqrt() } else { 0.0 }
            }
            DrivePattern::DoubleCondLowerRight => {
                if lower_r { jl as f64 * pr as f64 * (jr as f64).sqrt() } else { 0.0 }
            }
        }
    }
}

/// Patterns reported for a drive on the given side, in storage order.
pub fn patterns_for(side: DriveSide) -> Vec<DrivePattern> {
    match side {
        DriveSide::Left => vec![
            DrivePattern::LowerLeft,
            DrivePattern::LowerRight,
            DrivePattern::CondLowerRight,
            DrivePattern::SelfCondLowerRight,
            DrivePattern::DoubleCondLowerRight,
        ],
        DriveSide::Right => vec![
            DrivePattern::LowerRight,
            DrivePattern::LowerLeft,
            DrivePattern::CondLowerLeft,
            DrivePattern::SelfCondLowerLeft,
            DrivePattern::DoubleCondLowerLeft,
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum DriveSide {
    Left,
    Right,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let sp = ProductSpace::new(3, 4, 5);
        for jl in 0..3 {
            for nc in 0..4 {
                for jr in 0..5 {
                    let idx = sp.index(jl, nc, jr);
                    assert_eq!(sp.label_of(idx), (jl, nc, jr));
                }
            }
        }
    }

    #[test]
    fn pattern_elements() {
        // <0,1| n_L b_R |1,2> is zero (wrong left index change); <1,1|n_L b_R|1,2> = sqrt(2)
        assert_eq!(DrivePattern::CondLowerRight.element((1, 2), (0, 1)), 0.0);
        assert!((DrivePattern::CondLowerRight.element((1, 2), (1, 1)) - 2f64.sqrt()).abs() < 1e-15);
        // lowering on left: <0,2|b_L|1,2> = 1
        assert_eq!(DrivePattern::LowerLeft.element((1, 2), (0, 2)), 1.0);
    }

    #[test]
    fn embedded_number_operator_diagonal() {
        let sp = ProductSpace::new(2, 3, 2);
        let n_res = embed(&sp, Mode::Res, &to_complex(&number(3)), 0.0);
        let x: Vec<C64> = (0..sp.dim()).map(|i| C64::new(i as f64 + 1.0, 0.0)).collect();
        let mut y = vec![C64::new(0.0, 0.0); sp.dim()];
        n_res.mul_add(&x, &mut y, C64::new(1.0, 0.0));
        for (idx, (_, nc, _)) in sp.labels().enumerate() {
            assert!((y[idx] - C64::new(nc as f64, 0.0) * x[idx]).norm() < 1e-14);
        }
    }
}
