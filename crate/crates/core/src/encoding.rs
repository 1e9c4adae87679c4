//! Block-encoded unitaries for the relaxed row and column iterations.
//!
//! Every operator here is real orthogonal. Grid blocks are indexed from 1 and
//! grid row/column `i` of a 4×4 operator corresponds to the two-qubit ancilla
//! basis state `|00⟩, |01⟩, |10⟩, |11⟩` for `i = 1, 2, 3, 4`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit-norm tolerance for vectors handed to constructors.
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitaryKind {
    /// `U_t` of the row iteration.
    RowIteration,
    /// `U_t` acting on the residual register of the column iteration.
    ColumnResidual,
    /// `W_t = diag(I, w_t)`.
    ColumnUpdate,
    /// `w_t`, the 3×3-block core of `W_t`.
    ColumnUpdateCore,
    Givens,
    /// `V_t` with `V_t|0⟩ = |a_t⟩`.
    RowPrep,
    /// `S_t` with `⟨t|S_t = ⟨c_t|`.
    ColumnPrep,
    Swap,
    Custom,
}

/// A dense orthogonal operator with block-grid metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockUnitary {
    matrix: DMatrix<f64>,
    block: usize,
    grid: usize,
    kind: UnitaryKind,
}

impl BlockUnitary {
    /// Wraps an arbitrary square matrix split into `grid × grid` blocks.
    pub fn from_matrix(matrix: DMatrix<f64>, grid: usize, kind: UnitaryKind) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if grid == 0 || !matrix.nrows().is_multiple_of(grid) {
            return Err(Error::Dimension(format!(
                "dimension {} does not split into a {grid}x{grid} grid",
                matrix.nrows()
            )));
        }
        let block = matrix.nrows() / grid;
        Ok(Self {
            matrix,
            block,
            grid,
            kind,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn kind(&self) -> UnitaryKind {
        self.kind
    }

    /// Block `(i, j)` of the grid, 1-based.
    pub fn extract_block(&self, i: usize, j: usize) -> Result<DMatrix<f64>> {
        for idx in [i, j] {
            if idx == 0 || idx > self.grid {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    len: self.grid,
                });
            }
        }
        let n = self.block;
        Ok(self.matrix.view(((i - 1) * n, (j - 1) * n), (n, n)).into_owned())
    }

    /// `self ⊗ I_n`.
    pub fn kron_identity(&self, n: usize) -> BlockUnitary {
        let d = self.dim();
        let mut out = DMatrix::zeros(d * n, d * n);
        for i in 0..d {
            for j in 0..d {
                let v = self.matrix[(i, j)];
                if v != 0.0 {
                    for q in 0..n {
                        out[(i * n + q, j * n + q)] = v;
                    }
                }
            }
        }
        BlockUnitary {
            matrix: out,
            block: self.block * n,
            grid: self.grid,
            kind: self.kind,
        }
    }

    /// Dense row-major dump with a `rows cols` header line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.matrix.nrows(), self.matrix.ncols());
        for i in 0..self.matrix.nrows() {
            let row: Vec<String> = (0..self.matrix.ncols())
                .map(|j| format!("{:e}", self.matrix[(i, j)]))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

fn check_parameter(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            parameter: name,
            value,
        })
    }
}

fn check_unit(v: &DVector<f64>, what: &str) -> Result<()> {
    let norm = v.norm();
    if v.is_empty() || (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Precondition(format!(
            "{what} must have unit norm, got {norm}"
        )));
    }
    Ok(())
}

fn place(target: &mut DMatrix<f64>, n: usize, i: usize, j: usize, block: &DMatrix<f64>) {
    target.view_mut((i * n, j * n), (n, n)).copy_from(block);
}

/// `U` for the projector `P = u uᵀ`:
///
/// ```text
/// [ I - pP    sP      pP    0 ]
/// [  sP     2pP - I  -sP    0 ]
/// [  pP      -sP    I - pP  0 ]
/// [   0       0       0     I ]
/// ```
///
/// with `s = √(2p(1-p))`.
fn reflection_grid(projector: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let n = projector.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let s = (2.0 * p * (1.0 - p)).sqrt();
    let mut m = DMatrix::zeros(4 * n, 4 * n);
    let inner = &eye - projector * p;
    place(&mut m, n, 0, 0, &inner);
    place(&mut m, n, 0, 1, &(projector * s));
    place(&mut m, n, 0, 2, &(projector * p));
    place(&mut m, n, 1, 0, &(projector * s));
    place(&mut m, n, 1, 1, &(projector * (2.0 * p) - &eye));
    place(&mut m, n, 1, 2, &(projector * -s));
    place(&mut m, n, 2, 0, &(projector * p));
    place(&mut m, n, 2, 1, &(projector * -s));
    place(&mut m, n, 2, 2, &inner);
    place(&mut m, n, 3, 3, &eye);
    m
}

/// The row-iteration unitary; block (1,1) is `I - λ a aᵀ`.
pub fn row_unitary(a: &DVector<f64>, relaxation: f64) -> Result<BlockUnitary> {
    check_parameter("lambda", relaxation)?;
    check_unit(a, "row a_t")?;
    let p = a * a.transpose();
    BlockUnitary::from_matrix(reflection_grid(&p, relaxation), 4, UnitaryKind::RowIteration)
}

/// The residual-register unitary of the column iteration; block (1,1) is `I - ω c cᵀ`.
pub fn column_residual_unitary(c: &DVector<f64>, relaxation: f64) -> Result<BlockUnitary> {
    check_parameter("omega", relaxation)?;
    check_unit(c, "column c_t")?;
    let p = c * c.transpose();
    BlockUnitary::from_matrix(reflection_grid(&p, relaxation), 4, UnitaryKind::ColumnResidual)
}

/// `w_t` over the `|01⟩, |10⟩, |11⟩` ancilla blocks, with `P = e_t e_tᵀ`:
///
/// ```text
/// [ I - ωP    ωP      sP     ]
/// [   ωP    I - ωP   -sP     ]
/// [   sP     -sP    2ωP - I  ]
/// ```
pub fn column_update_core(t: usize, relaxation: f64, n: usize) -> Result<BlockUnitary> {
    check_parameter("omega", relaxation)?;
    if t == 0 || t > n {
        return Err(Error::IndexOutOfRange { index: t, len: n });
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let mut p = DMatrix::zeros(n, n);
    p[(t - 1, t - 1)] = 1.0;
    let w = relaxation;
    let s = (2.0 * w * (1.0 - w)).sqrt();
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    let inner = &eye - &p * w;
    place(&mut m, n, 0, 0, &inner);
    place(&mut m, n, 0, 1, &(&p * w));
    place(&mut m, n, 0, 2, &(&p * s));
    place(&mut m, n, 1, 0, &(&p * w));
    place(&mut m, n, 1, 1, &inner);
    place(&mut m, n, 1, 2, &(&p * -s));
    place(&mut m, n, 2, 0, &(&p * s));
    place(&mut m, n, 2, 1, &(&p * -s));
    place(&mut m, n, 2, 2, &(&p * (2.0 * w) - &eye));
    BlockUnitary::from_matrix(m, 3, UnitaryKind::ColumnUpdateCore)
}

/// `W_t = diag(I_n, w_t)` on the two-qubit ancilla pair plus data.
pub fn column_update_unitary(t: usize, relaxation: f64, n: usize) -> Result<BlockUnitary> {
    let core = column_update_core(t, relaxation, n)?;
    let mut m = DMatrix::zeros(4 * n, 4 * n);
    m.view_mut((0, 0), (n, n)).fill_with_identity();
    m.view_mut((n, n), (3 * n, 3 * n)).copy_from(core.matrix());
    BlockUnitary::from_matrix(m, 4, UnitaryKind::ColumnUpdate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensParams {
    c: f64,
    s: f64,
}

impl GivensParams {
    pub const TOLERANCE: f64 = 1e-14;

    pub fn new(c: f64, s: f64) -> Result<Self> {
        if (c * c + s * s - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::Precondition(format!(
                "Givens parameters need c^2 + s^2 = 1, got {}",
                c * c + s * s
            )));
        }
        Ok(Self { c, s })
    }

    /// `c = √(q)`, `s = √(1 - q)` for a weight `q ∈ [0, 1]`.
    pub fn from_weight(q: f64) -> Result<Self> {
        check_parameter("givens weight", q)?;
        Self::new(q.sqrt(), (1.0 - q).sqrt())
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// `[[c, s], [-s, c]]`.
pub fn givens(params: GivensParams) -> BlockUnitary {
    let m = DMatrix::from_row_slice(2, 2, &[params.c, params.s, -params.s, params.c]);
    BlockUnitary {
        matrix: m,
        block: 1,
        grid: 2,
        kind: UnitaryKind::Givens,
    }
}

/// Two-qubit SWAP on `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn swap_gate() -> BlockUnitary {
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = 1.0;
    m[(1, 2)] = 1.0;
    m[(2, 1)] = 1.0;
    m[(3, 3)] = 1.0;
    BlockUnitary {
        matrix: m,
        block: 1,
        grid: 4,
        kind: UnitaryKind::Swap,
    }
}

/// Orthogonal matrix whose column `pivot` (0-based) equals the unit vector `v`.
///
/// Built from one Householder reflection. The reflection vector is taken as
/// `e_p - v` when `v_p ≤ 0` and `e_p + v` otherwise, so it never suffers
/// cancellation; in the second case the reflection sends `e_p` to `-v` and
/// the pivot column is flipped back.
fn householder_completion(v: &DVector<f64>, pivot: usize) -> DMatrix<f64> {
    let n = v.len();
    let flip = v[pivot] > 0.0;
    let mut u = if flip { v.clone() } else { -v };
    u[pivot] += 1.0;
    let uu = u.norm_squared();
    let mut h = DMatrix::<f64>::identity(n, n);
    if uu > 0.0 {
        h -= (&u * u.transpose()) * (2.0 / uu);
    }
    if flip {
        h.column_mut(pivot).neg_mut();
    }
    h
}

/// `V` with `V e_1 = a`.
pub fn state_prep_row(a: &DVector<f64>) -> Result<BlockUnitary> {
    check_unit(a, "state-preparation vector")?;
    BlockUnitary::from_matrix(householder_completion(a, 0), 1, UnitaryKind::RowPrep)
}

/// `S` with row `t` (1-based) equal to `cᵀ`, so `⟨t|S|r⟩ = c·r`.
pub fn state_prep_col(c: &DVector<f64>, t: usize) -> Result<BlockUnitary> {
    check_unit(c, "state-preparation vector")?;
    if t == 0 || t > c.len() {
        return Err(Error::IndexOutOfRange {
            index: t,
            len: c.len(),
        });
    }
    let q = householder_completion(c, t - 1);
    BlockUnitary::from_matrix(q.transpose(), 1, UnitaryKind::ColumnPrep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitaryCheck {
    /// `‖MᵀM - I‖_max`.
    pub unitary_deviation: f64,
    /// `‖M - Mᵀ‖_max`.
    pub symmetric_deviation: f64,
    /// `‖MM - I‖_max`.
    pub involution_deviation: f64,
    pub tolerance: f64,
}

impl UnitaryCheck {
    pub fn is_unitary(&self) -> bool {
        self.unitary_deviation <= self.tolerance
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric_deviation <= self.tolerance
    }

    pub fn is_involutory(&self) -> bool {
        self.involution_deviation <= self.tolerance
    }
}

/// Measures orthogonality, symmetry and involution by direct multiplication.
pub fn verify_unitary(m: &BlockUnitary, tolerance: f64) -> UnitaryCheck {
    let a = m.matrix();
    let d = a.nrows();
    let eye = DMatrix::<f64>::identity(d, d);
    UnitaryCheck {
        unitary_deviation: (a.tr_mul(a) - &eye).amax(),
        symmetric_deviation: (a - a.transpose()).amax(),
        involution_deviation: (a * a - &eye).amax(),
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    // independent dense multiply, used instead of nalgebra's product
    fn brute_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        DMatrix::from_fn(n, n, |i, j| (0..n).map(|k| a[(i, k)] * b[(k, j)]).sum())
    }

    #[test]
    fn unrelaxed_row_unitary_has_no_coupling() {
        let a = v(&[S, S]);
        let u = row_unitary(&a, 1.0).unwrap();
        for (i, j) in [(1, 2), (2, 1), (2, 3), (3, 2)] {
            assert_eq!(u.extract_block(i, j).unwrap().amax(), 0.0);
        }
        let p = &a * a.transpose();
        assert!((u.extract_block(1, 3).unwrap() - &p).amax() < 1e-15);
        assert!((u.extract_block(2, 2).unwrap() - (&p * 2.0 - DMatrix::identity(2, 2))).amax() < 1e-15);
    }

    #[test]
    fn zero_relaxation_is_block_diagonal() {
        let a = v(&[0.6, 0.8]);
        let u = row_unitary(&a, 0.0).unwrap();
        let eye = DMatrix::<f64>::identity(2, 2);
        for i in 1..=4 {
            for j in 1..=4 {
                let b = u.extract_block(i, j).unwrap();
                let expected = match (i, j) {
                    (2, 2) => -&eye,
                    (i, j) if i == j => eye.clone(),
                    _ => DMatrix::zeros(2, 2),
                };
                assert!((b - expected).amax() < 1e-15, "block ({i},{j})");
            }
        }
        let r = column_residual_unitary(&a, 0.0).unwrap();
        assert_eq!(r.matrix(), u.matrix());
    }

    #[test]
    fn half_relaxation_involution() {
        let u = row_unitary(&v(&[1.0, 0.0]), 0.5).unwrap();
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!((u.extract_block(1, 2).unwrap() - &p * 0.5f64.sqrt()).amax() < 1e-15);
        assert!((u.extract_block(1, 1).unwrap() - DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0])).amax() < 1e-15);
        let sq = brute_product(u.matrix(), u.matrix());
        assert!((sq - DMatrix::identity(8, 8)).amax() < 1e-12);
        assert!((u.matrix() - u.matrix().transpose()).amax() == 0.0);
    }

    #[test]
    fn residual_block_on_worked_example() {
        let c = v(&[-S, -S]);
        let u = column_residual_unitary(&c, 0.5).unwrap();
        let r = u.extract_block(1, 1).unwrap() * v(&[S, S]);
        let q = 1.0 / (2.0 * 2f64.sqrt());
        assert!((r[0] - q).abs() < 1e-15 && (r[1] - q).abs() < 1e-15);
    }

    #[test]
    fn update_core_unrelaxed() {
        let n = 3;
        let w = column_update_core(2, 1.0, n).unwrap();
        let eye = DMatrix::<f64>::identity(n, n);
        let mut p = DMatrix::zeros(n, n);
        p[(1, 1)] = 1.0;
        let zero = DMatrix::zeros(n, n);
        let expected = [
            [&eye - &p, p.clone(), zero.clone()],
            [p.clone(), &eye - &p, zero.clone()],
            [zero.clone(), zero.clone(), &p * 2.0 - &eye],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, block) in row.iter().enumerate() {
                assert!((w.extract_block(i + 1, j + 1).unwrap() - block).amax() < 1e-15);
            }
        }
    }

    #[test]
    fn update_unitary_half() {
        let wu = column_update_unitary(1, 0.5, 2).unwrap();
        assert_eq!(wu.extract_block(1, 1).unwrap(), DMatrix::identity(2, 2));
        assert_eq!(wu.extract_block(1, 2).unwrap().amax(), 0.0);
        // core (1,2) block sits at grid (2,3) of W
        let b = wu.extract_block(2, 3).unwrap();
        assert!((b - DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0])).amax() < 1e-15);
        let b = wu.extract_block(2, 4).unwrap();
        assert!((b[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-15);
        let check = verify_unitary(&wu, 1e-12);
        assert!(check.is_unitary() && check.is_symmetric() && check.is_involutory());
        let sq = brute_product(wu.matrix(), wu.matrix());
        assert!((sq - DMatrix::identity(8, 8)).amax() < 1e-12);
    }

    #[test]
    fn update_routes_to_01_block() {
        // input on |10⟩ with data d: |01⟩ output is ω P_t d
        let n = 2;
        let wu = column_update_unitary(1, 0.5, n).unwrap();
        let mut input = DVector::zeros(4 * n);
        input[2 * n] = -1.0;
        input[2 * n + 1] = 0.25;
        let out = wu.matrix() * input;
        assert!((out[n] - -0.5).abs() < 1e-15);
        assert_eq!(out[n + 1], 0.0);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn domain_and_unit_errors() {
        assert!(matches!(row_unitary(&v(&[1.0, 0.0]), 1.2), Err(Error::Domain { .. })));
        assert!(matches!(row_unitary(&v(&[1.0, 0.0]), -0.1), Err(Error::Domain { .. })));
        assert!(matches!(row_unitary(&v(&[1.0, 1.0]), 0.5), Err(Error::Precondition(_))));
        assert!(matches!(column_update_unitary(3, 0.5, 2), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(column_update_core(1, 1.01, 2), Err(Error::Domain { .. })));
        assert!(GivensParams::new(0.6, 0.7).is_err());
    }

    #[test]
    fn givens_cases() {
        let g = givens(GivensParams::new((2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt()).unwrap());
        assert_eq!(g.matrix()[(0, 1)], (1.0f64 / 3.0).sqrt());
        assert_eq!(g.matrix()[(1, 0)], -(1.0f64 / 3.0).sqrt());
        assert!((g.matrix().determinant() - 1.0).abs() < 1e-15);
        let id = givens(GivensParams::new(1.0, 0.0).unwrap());
        assert_eq!(id.matrix(), &DMatrix::identity(2, 2));
        let rot = givens(GivensParams::new(0.0, 1.0).unwrap());
        assert_eq!(rot.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        assert!(verify_unitary(&rot, 1e-15).is_unitary());
        assert!(!verify_unitary(&rot, 1e-15).is_symmetric());
    }

    #[test]
    fn row_prep_cases() {
        let id = state_prep_row(&v(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(id.matrix(), &DMatrix::identity(3, 3));
        let p = state_prep_row(&v(&[S, S])).unwrap();
        assert!((p.matrix().column(0) - v(&[S, S])).amax() < 1e-15);
        assert!(verify_unitary(&p, 1e-12).is_unitary());
        let neg = state_prep_row(&v(&[-1.0, 0.0])).unwrap();
        assert_eq!(neg.matrix().column(0).into_owned(), v(&[-1.0, 0.0]));
        assert!(verify_unitary(&neg, 1e-15).is_unitary());
        assert!(state_prep_row(&v(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn col_prep_cases() {
        let id = state_prep_col(&v(&[0.0, 1.0, 0.0]), 2).unwrap();
        assert_eq!(id.matrix(), &DMatrix::identity(3, 3));
        let s = state_prep_col(&v(&[-S, -S]), 1).unwrap();
        assert!((s.matrix().row(0).transpose() - v(&[-S, -S])).amax() < 1e-15);
        let r0 = v(&[S, S]);
        let out = s.matrix() * &r0;
        assert!((out[0] + 1.0).abs() < 1e-15);
        assert!(matches!(state_prep_col(&v(&[1.0, 0.0]), 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn near_pivot_vectors_stay_accurate() {
        let eps = 1e-9;
        let a = v(&[(1.0f64 - eps * eps).sqrt(), eps]);
        let p = state_prep_row(&a).unwrap();
        assert!((p.matrix().column(0) - &a).amax() < 1e-15);
        assert!(verify_unitary(&p, 1e-15).is_unitary());
    }

    #[test]
    fn verify_flags_perturbation() {
        let id = BlockUnitary::from_matrix(DMatrix::identity(4, 4), 2, UnitaryKind::Custom).unwrap();
        let check = verify_unitary(&id, 1e-12);
        assert!(check.is_unitary() && check.is_symmetric() && check.is_involutory());
        let mut m = row_unitary(&v(&[0.6, 0.8]), 0.3).unwrap().into_matrix();
        m[(1, 2)] += 1e-6;
        let bad = BlockUnitary::from_matrix(m, 4, UnitaryKind::Custom).unwrap();
        let check = verify_unitary(&bad, 1e-12);
        assert!(!check.is_unitary());
    }

    #[test]
    fn extract_block_bounds() {
        let u = row_unitary(&v(&[1.0, 0.0]), 0.5).unwrap();
        assert!(matches!(u.extract_block(5, 1), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(u.extract_block(0, 1), Err(Error::IndexOutOfRange { .. })));
        assert_eq!(u.extract_block(1, 4).unwrap().amax(), 0.0);
    }

    #[test]
    fn kron_identity_layout() {
        let g = givens(GivensParams::new(0.6, 0.8).unwrap()).kron_identity(3);
        assert_eq!(g.dim(), 6);
        assert_eq!(g.matrix()[(1, 4)], 0.8);
        assert_eq!(g.matrix()[(4, 1)], -0.8);
        assert_eq!(g.matrix()[(1, 5)], 0.0);
    }

    #[test]
    fn dump_has_header() {
        let text = swap_gate().dump();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("4 4"));
        assert_eq!(lines.count(), 4);
    }
}
