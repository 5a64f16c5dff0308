//! Computable invariants of a graph correspondence and its dilation:
//! Smith normal form, the Bowen–Franks group `coker(I - E)`, the K-theory
//! of the Cuntz–Krieger algebra, and the characteristic polynomial with the
//! zero spectrum removed.
//!
//! All of these are necessary conditions for equivalence. Agreement never
//! certifies that two matrices are equivalent.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::matrix::{classify, CorrMatrix, MatrixError, StructureFlags};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("K-theory needs a regular matrix (no zero rows or columns)")]
    NotRegular,
}

/// Dense matrix over the integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::with_capacity(nrows * ncols);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), ncols, "ragged matrix literal");
            entries.extend(row.iter().map(|&v| BigInt::from(v)));
        }
        IntMatrix {
            rows: nrows,
            cols: ncols,
            entries,
        }
    }

    pub fn from_corr(m: &CorrMatrix) -> Self {
        IntMatrix {
            rows: m.rows(),
            cols: m.cols(),
            entries: m
                .entries()
                .iter()
                .map(|v| BigInt::from_biguint(Sign::Plus, v.clone()))
                .collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    fn at(&mut self, i: usize, j: usize) -> &mut BigInt {
        &mut self.entries[i * self.cols + j]
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at(j, i) = self.get(i, j).clone();
            }
        }
        out
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "incompatible product");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        *out.at(i, j) += a * b;
                    }
                }
            }
        }
        out
    }

    /// `I - self` for a square matrix.
    pub fn identity_minus(&self) -> IntMatrix {
        assert_eq!(self.rows, self.cols, "identity_minus needs a square matrix");
        let mut out = IntMatrix::identity(self.rows);
        for (o, v) in out.entries.iter_mut().zip(&self.entries) {
            *o -= v;
        }
        out
    }

    pub fn trace(&self) -> BigInt {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i).clone())
            .sum()
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant needs a square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a.get(k, k).is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !a.get(i, k).is_zero()) else {
                    return BigInt::zero();
                };
                a.swap_rows(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j)) / &prev;
                    *a.at(i, j) = v;
                }
            }
            prev = a.get(k, k).clone();
        }
        sign * a.get(n - 1, n - 1)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.entries.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    /// row[dst] += factor * row[src]
    fn add_row(&mut self, dst: usize, src: usize, factor: &BigInt) {
        for c in 0..self.cols {
            let v = self.get(src, c) * factor;
            *self.at(dst, c) += v;
        }
    }

    /// col[dst] += factor * col[src]
    fn add_col(&mut self, dst: usize, src: usize, factor: &BigInt) {
        for r in 0..self.rows {
            let v = self.get(r, src) * factor;
            *self.at(r, dst) += v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for c in 0..self.cols {
            let v = -self.get(i, c).clone();
            *self.at(i, c) = v;
        }
    }
}

/// `u * input * v == d` with `u`, `v` unimodular and `d` diagonal,
/// non-negative, each diagonal entry dividing the next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnfResult {
    pub u: IntMatrix,
    pub v: IntMatrix,
    pub d: IntMatrix,
}

impl SnfResult {
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.rows.min(self.d.cols))
            .map(|i| self.d.get(i, i).clone())
            .collect()
    }
}

/// Smith normal form with transformation matrices.
///
/// Panics if the result fails its own check `u * m * v == d`, which would
/// indicate a bug rather than bad input.
pub fn smith_normal_form(m: &IntMatrix) -> SnfResult {
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);

    for t in 0..rows.min(cols) {
        let Some((pi, pj)) = smallest_nonzero(&a, t..rows, t..cols) else {
            break;
        };
        a.swap_rows(t, pi);
        u.swap_rows(t, pi);
        a.swap_cols(t, pj);
        v.swap_cols(t, pj);

        loop {
            let pivot = a.get(t, t).clone();
            let mut cleared = true;
            for i in t + 1..rows {
                if a.get(i, t).is_zero() {
                    continue;
                }
                let q = -(a.get(i, t) / &pivot);
                a.add_row(i, t, &q);
                u.add_row(i, t, &q);
                cleared &= a.get(i, t).is_zero();
            }
            for j in t + 1..cols {
                if a.get(t, j).is_zero() {
                    continue;
                }
                let q = -(a.get(t, j) / &pivot);
                a.add_col(j, t, &q);
                v.add_col(j, t, &q);
                cleared &= a.get(t, j).is_zero();
            }
            if !cleared {
                // A remainder smaller than the pivot is left in row or
                // column t; move the smallest one to the pivot position.
                let in_col = smallest_nonzero(&a, t..rows, t..t + 1);
                let in_row = smallest_nonzero(&a, t..t + 1, t..cols);
                let pick = match (in_col, in_row) {
                    (Some(c), Some(r)) => {
                        if a.get(c.0, c.1).abs() <= a.get(r.0, r.1).abs() {
                            c
                        } else {
                            r
                        }
                    }
                    (c, r) => c.or(r).expect("pivot is nonzero"),
                };
                a.swap_rows(t, pick.0);
                u.swap_rows(t, pick.0);
                a.swap_cols(t, pick.1);
                v.swap_cols(t, pick.1);
                continue;
            }
            // Row and column t are clear; enforce divisibility of the rest.
            let bad_row =
                (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a.get(i, j).is_multiple_of(&pivot)));
            match bad_row {
                Some(i) => {
                    let one = BigInt::one();
                    a.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                }
                None => break,
            }
        }
        if a.get(t, t).is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
    }

    assert_eq!(u.mul(m).mul(&v), a, "Smith normal form self-check failed");
    let result = SnfResult { u, v, d: a };
    let diag = result.diagonal();
    for w in diag.windows(2) {
        assert!(
            w[1].is_zero() || (!w[0].is_zero() && w[1].is_multiple_of(&w[0])),
            "Smith normal form divisibility check failed"
        );
    }
    result
}

fn smallest_nonzero(
    a: &IntMatrix,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in rows {
        for j in cols.clone() {
            let x = a.get(i, j);
            if x.is_zero() {
                continue;
            }
            if best.is_none_or(|(bi, bj)| x.abs() < a.get(bi, bj).abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

/// Finitely generated abelian group `Z^free_rank ⊕ Z/d_1 ⊕ ... ⊕ Z/d_k`,
/// with `1 < d_1 | d_2 | ... | d_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AbelianGroup {
    pub torsion: Vec<BigUint>,
    pub free_rank: usize,
}

impl AbelianGroup {
    /// Group presented by a Smith diagonal of a square relation matrix.
    pub fn from_smith_diagonal(diag: &[BigInt]) -> Self {
        let mut group = AbelianGroup::default();
        for d in diag {
            if d.is_zero() {
                group.free_rank += 1;
            } else {
                let d = d.magnitude();
                if !d.is_one() {
                    group.torsion.push(d.clone());
                }
            }
        }
        group
    }

    pub fn is_trivial(&self) -> bool {
        self.torsion.is_empty() && self.free_rank == 0
    }

    /// Order of the group, `None` when infinite.
    pub fn order(&self) -> Option<BigUint> {
        (self.free_rank == 0).then(|| self.torsion.iter().product())
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return f.write_str("0");
        }
        let mut parts: Vec<String> = self.torsion.iter().map(|d| format!("Z/{d}")).collect();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".into()),
            r => parts.push(format!("Z^{r}")),
        }
        f.write_str(&parts.join(" + "))
    }
}

/// Cokernel of a square integer matrix.
pub fn cokernel(m: &IntMatrix) -> AbelianGroup {
    AbelianGroup::from_smith_diagonal(&smith_normal_form(m).diagonal())
}

fn require_square(e: &CorrMatrix, op: &'static str) -> Result<(), MatrixError> {
    if e.is_square() {
        Ok(())
    } else {
        Err(MatrixError::NotSquare {
            op,
            shape: e.shape(),
        })
    }
}

/// Bowen–Franks group `coker(I - E)`.
pub fn bowen_franks(e: &CorrMatrix) -> Result<AbelianGroup, MatrixError> {
    require_square(e, "bowen_franks")?;
    Ok(cokernel(&IntMatrix::from_corr(e).identity_minus()))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KTheory {
    pub k0: AbelianGroup,
    pub k1_rank: usize,
}

/// `K_0 = coker(I - Eᵀ)` and `rank K_1 = nullity(I - Eᵀ)` of the
/// Cuntz–Krieger algebra of a regular matrix.
pub fn k_theory(e: &CorrMatrix) -> Result<KTheory, InvariantError> {
    if !classify(e)?.regular {
        return Err(InvariantError::NotRegular);
    }
    let k0 = cokernel(&IntMatrix::from_corr(e).transpose().identity_minus());
    // For a square relation matrix the nullity equals the free rank of the
    // cokernel.
    let k1_rank = k0.free_rank;
    Ok(KTheory { k0, k1_rank })
}

/// Integer polynomial in `t`, coefficients from the highest degree down.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPoly(pub Vec<BigInt>);

impl IntPoly {
    pub fn from_coeffs(coeffs: &[i64]) -> Self {
        IntPoly(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.0
    }

    /// Horner evaluation.
    pub fn eval(&self, t: &BigInt) -> BigInt {
        self.0.iter().fold(BigInt::zero(), |acc, c| acc * t + c)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let deg = self.degree();
        let mut first = true;
        for (i, c) in self.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let power = deg - i;
            let mag = c.magnitude();
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            }
            first = false;
            let show_coeff = !mag.is_one() || power == 0;
            if show_coeff {
                write!(f, "{mag}")?;
            }
            match power {
                0 => {}
                1 => f.write_str("t")?,
                p => write!(f, "t^{p}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Characteristic polynomial `det(tI - A)` by the Faddeev–LeVerrier
/// recurrence; every division in it is exact over the integers.
pub fn char_poly(a: &IntMatrix) -> IntPoly {
    assert_eq!(
        a.rows, a.cols,
        "characteristic polynomial needs a square matrix"
    );
    let n = a.rows;
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[0] = BigInt::one();
    let mut m = IntMatrix::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I, c_k = -tr(A M_k) / k
        let mut next = a.mul(&m);
        for i in 0..n {
            *next.at(i, i) += &coeffs[k - 1];
        }
        let am = a.mul(&next);
        let (q, r) = (-am.trace()).div_rem(&BigInt::from(k));
        assert!(r.is_zero(), "Faddeev–LeVerrier division must be exact");
        coeffs[k] = q;
        m = next;
    }
    IntPoly(coeffs)
}

/// Characteristic polynomial of `e` with every factor of `t` divided out.
pub fn nonzero_char_poly(e: &CorrMatrix) -> Result<IntPoly, MatrixError> {
    require_square(e, "nonzero_char_poly")?;
    let mut coeffs = char_poly(&IntMatrix::from_corr(e)).0;
    while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
        coeffs.pop();
    }
    Ok(IntPoly(coeffs))
}

/// Finite fingerprint of the dilation and its Cuntz–Pimsner algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InvariantReport {
    pub size: usize,
    pub flags: StructureFlags,
    pub bowen_franks: AbelianGroup,
    pub det_i_minus_a: BigInt,
    /// Present only for regular matrices.
    pub k0: Option<AbelianGroup>,
    pub k1_rank: Option<usize>,
    pub nonzero_char_poly: IntPoly,
}

pub fn dilation_invariants(e: &CorrMatrix) -> Result<InvariantReport, MatrixError> {
    let flags = classify(e)?;
    let k = match k_theory(e) {
        Ok(k) => Some(k),
        Err(InvariantError::NotRegular) => None,
        Err(InvariantError::Matrix(err)) => return Err(err),
    };
    Ok(InvariantReport {
        size: e.rows(),
        flags,
        bowen_franks: bowen_franks(e)?,
        det_i_minus_a: IntMatrix::from_corr(e).identity_minus().determinant(),
        k1_rank: k.as_ref().map(|k| k.k1_rank),
        k0: k.map(|k| k.k0),
        nonzero_char_poly: nonzero_char_poly(e)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantKind {
    BowenFranks,
    NonzeroCharPoly,
    K0,
    K1Rank,
}

impl InvariantKind {
    pub fn name(self) -> &'static str {
        match self {
            InvariantKind::BowenFranks => "bowen_franks",
            InvariantKind::NonzeroCharPoly => "nonzero_char_poly",
            InvariantKind::K0 => "k0",
            InvariantKind::K1Rank => "k1_rank",
        }
    }
}

impl fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obstruction {
    pub invariant: InvariantKind,
    pub left: String,
    pub right: String,
}

impl fmt::Display for Obstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} differs: {} vs {}",
            self.invariant, self.left, self.right
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Comparison {
    /// All invariants agree; this is necessary for equivalence, not sufficient.
    Consistent,
    Obstructed(Obstruction),
}

impl Comparison {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Comparison::Consistent)
    }
}

/// Compares the invariants of two matrices, reporting the first that differs
/// in the order Bowen–Franks, nonzero characteristic polynomial, `K_0`, `K_1`.
/// K-theory is compared only when both matrices are regular.
pub fn compare_dilations(e: &CorrMatrix, f: &CorrMatrix) -> Result<Comparison, MatrixError> {
    let left = dilation_invariants(e)?;
    let right = dilation_invariants(f)?;
    Ok(compare_reports(&left, &right))
}

pub fn compare_reports(left: &InvariantReport, right: &InvariantReport) -> Comparison {
    match report_differences(left, right).into_iter().next() {
        Some(o) => Comparison::Obstructed(o),
        None => Comparison::Consistent,
    }
}

/// Every invariant on which the two reports disagree, in comparison order.
pub fn report_differences(left: &InvariantReport, right: &InvariantReport) -> Vec<Obstruction> {
    fn differ<T: PartialEq + fmt::Display>(
        kind: InvariantKind,
        l: &T,
        r: &T,
    ) -> Option<Obstruction> {
        (l != r).then(|| Obstruction {
            invariant: kind,
            left: l.to_string(),
            right: r.to_string(),
        })
    }
    let mut checks = vec![
        differ(
            InvariantKind::BowenFranks,
            &left.bowen_franks,
            &right.bowen_franks,
        ),
        differ(
            InvariantKind::NonzeroCharPoly,
            &left.nonzero_char_poly,
            &right.nonzero_char_poly,
        ),
    ];
    if let (Some(k0l), Some(k0r), Some(k1l), Some(k1r)) =
        (&left.k0, &right.k0, left.k1_rank, right.k1_rank)
    {
        checks.push(differ(InvariantKind::K0, k0l, k0r));
        checks.push(differ(InvariantKind::K1Rank, &k1l, &k1r));
    }
    checks.into_iter().flatten().collect()
}
