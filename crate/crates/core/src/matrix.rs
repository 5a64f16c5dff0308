//! Labeled non-negative integer matrices.
//!
//! A [`CorrMatrix`] is the finite stand-in for a graph correspondence: entry
//! `(i, j)` counts edges from vertex `i` of the row vertex set to vertex `j`
//! of the column vertex set. Composition of correspondences is the
//! left-to-right matrix product, so `tensor(x, y)` is `x * y`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimensionMismatch {
        op: &'static str,
        left: String,
        right: String,
    },
    #[error("{op} needs a square matrix over one vertex set, got {shape}")]
    NotSquare { op: &'static str, shape: String },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid label {0:?}: labels are non-empty and contain no whitespace or '#'")]
    InvalidLabel(String),
}

/// Opaque vertex-set identifier, compared by equality only.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Result<Self, MatrixError> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == '#') {
            return Err(MatrixError::InvalidLabel(name));
        }
        Ok(Label(name))
    }

    /// Label given to an unlabeled vertex set of `size` vertices.
    pub fn anonymous(size: usize) -> Self {
        Label(format!("V{size}"))
    }

    /// Label of the disjoint union of two vertex sets.
    pub fn concat(&self, other: &Label) -> Self {
        Label(format!("{}+{}", self.0, other.0))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Rectangular matrix of arbitrary-precision non-negative integers with
/// row and column vertex-set labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CorrMatrix {
    row_label: Label,
    col_label: Label,
    rows: usize,
    cols: usize,
    entries: Vec<BigUint>,
}

impl CorrMatrix {
    pub fn new(
        row_label: Label,
        col_label: Label,
        rows: usize,
        cols: usize,
        entries: Vec<BigUint>,
    ) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::InvalidShape(format!(
                "{rows}x{cols}: both dimensions must be positive"
            )));
        }
        if rows.checked_mul(cols) != Some(entries.len()) {
            return Err(MatrixError::InvalidShape(format!(
                "{rows}x{cols} needs {} entries, got {}",
                rows.saturating_mul(cols),
                entries.len()
            )));
        }
        Ok(CorrMatrix {
            row_label,
            col_label,
            rows,
            cols,
            entries,
        })
    }

    /// Builds a matrix from small rows with anonymous labels.
    ///
    /// Panics on ragged or empty input; meant for literals in code and tests.
    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        assert!(nrows > 0, "matrix needs at least one row");
        let ncols = rows[0].as_ref().len();
        assert!(ncols > 0, "matrix needs at least one column");
        let mut entries = Vec::with_capacity(nrows * ncols);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), ncols, "ragged matrix literal");
            entries.extend(row.iter().map(|&v| BigUint::from(v)));
        }
        CorrMatrix {
            row_label: Label::anonymous(nrows),
            col_label: Label::anonymous(ncols),
            rows: nrows,
            cols: ncols,
            entries,
        }
    }

    pub fn zeros(row_label: Label, col_label: Label, rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        CorrMatrix {
            row_label,
            col_label,
            rows,
            cols,
            entries: vec![BigUint::zero(); rows * cols],
        }
    }

    pub fn identity(label: Label, n: usize) -> Self {
        let mut m = CorrMatrix::zeros(label.clone(), label, n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigUint::one();
        }
        m
    }

    /// Permutation matrix with a one at `(i, perm[i])`.
    pub fn permutation(row_label: Label, col_label: Label, perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = CorrMatrix::zeros(row_label, col_label, n, n);
        for (i, &j) in perm.iter().enumerate() {
            assert!(j < n, "permutation image out of range");
            m.entries[i * n + j] = BigUint::one();
        }
        m
    }

    pub fn with_labels(mut self, row_label: Label, col_label: Label) -> Self {
        self.row_label = row_label;
        self.col_label = col_label;
        self
    }

    /// Same matrix with both labels set to `label`.
    pub fn over(self, label: &Label) -> Self {
        self.with_labels(label.clone(), label.clone())
    }

    pub fn row_label(&self) -> &Label {
        &self.row_label
    }

    pub fn col_label(&self) -> &Label {
        &self.col_label
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &BigUint {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: BigUint) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[BigUint] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// `rows x cols` together with the labels, for diagnostics.
    pub fn shape(&self) -> String {
        format!(
            "{}x{} [{} -> {}]",
            self.rows, self.cols, self.row_label, self.col_label
        )
    }

    /// Square with a single vertex set on both sides.
    pub fn is_square(&self) -> bool {
        self.rows == self.cols && self.row_label == self.col_label
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    /// Square 0/1 matrix with exactly one 1 in each row and column.
    /// Labels are not consulted.
    pub fn is_permutation(&self) -> bool {
        self.permutation_map().is_some()
    }

    /// For a permutation matrix, the image `j` of each row `i`.
    pub fn permutation_map(&self) -> Option<Vec<usize>> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut image = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for i in 0..n {
            let mut hit = None;
            for (j, v) in self.row(i).iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                if !v.is_one() || hit.is_some() {
                    return None;
                }
                hit = Some(j);
            }
            let j = hit?;
            if seen[j] {
                return None;
            }
            seen[j] = true;
            image.push(j);
        }
        Some(image)
    }

    pub fn transpose(&self) -> CorrMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        CorrMatrix {
            row_label: self.col_label.clone(),
            col_label: self.row_label.clone(),
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn max_entry(&self) -> BigUint {
        self.entries.iter().max().cloned().unwrap_or_default()
    }

    fn check_square(&self, op: &'static str) -> Result<(), MatrixError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(MatrixError::NotSquare {
                op,
                shape: self.shape(),
            })
        }
    }
}

impl fmt::Display for CorrMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Bipartite inflation `[[0, R], [S, 0]]` of `S` by `R`, kept in block form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InflationSquare {
    r_block: CorrMatrix,
    s_block: CorrMatrix,
}

impl InflationSquare {
    pub fn r_block(&self) -> &CorrMatrix {
        &self.r_block
    }

    pub fn s_block(&self) -> &CorrMatrix {
        &self.s_block
    }

    /// Side length `a + b` of the materialized square.
    pub fn size(&self) -> usize {
        self.r_block.rows + self.r_block.cols
    }

    /// Label of the combined vertex set `A + B`.
    pub fn label(&self) -> Label {
        self.r_block.row_label.concat(&self.r_block.col_label)
    }

    pub fn materialize(&self) -> CorrMatrix {
        let label = self.label();
        block_matrix(&label, Some(&self.r_block), Some(&self.s_block), None, None)
    }
}

/// Which of rows/columns are nonzero, for a square matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StructureFlags {
    /// No zero row and no zero column (no sinks, no sources).
    pub regular: bool,
    /// No zero column.
    pub full: bool,
    /// No zero row.
    pub nondegenerate: bool,
}

/// Tensor product of correspondences, realized as the product `x * y`.
pub fn tensor(x: &CorrMatrix, y: &CorrMatrix) -> Result<CorrMatrix, MatrixError> {
    if x.col_label != y.row_label || x.cols != y.rows {
        return Err(MatrixError::DimensionMismatch {
            op: "tensor",
            left: x.shape(),
            right: y.shape(),
        });
    }
    Ok(multiply_unchecked(x, y))
}

fn multiply_unchecked(x: &CorrMatrix, y: &CorrMatrix) -> CorrMatrix {
    let mut out = CorrMatrix::zeros(x.row_label.clone(), y.col_label.clone(), x.rows, y.cols);
    for i in 0..x.rows {
        for k in 0..x.cols {
            let a = x.get(i, k);
            if a.is_zero() {
                continue;
            }
            for j in 0..y.cols {
                let b = y.get(k, j);
                if !b.is_zero() {
                    out.entries[i * y.cols + j] += a * b;
                }
            }
        }
    }
    out
}

/// `e^k`; `k = 0` gives the identity over `e`'s vertex set.
pub fn power(e: &CorrMatrix, k: u32) -> Result<CorrMatrix, MatrixError> {
    e.check_square("power")?;
    let mut result = CorrMatrix::identity(e.row_label.clone(), e.rows);
    let mut base = e.clone();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            result = multiply_unchecked(&result, &base);
        }
        k >>= 1;
        if k > 0 {
            base = multiply_unchecked(&base, &base);
        }
    }
    Ok(result)
}

/// Block-diagonal `x ⊕ y` over the concatenated vertex sets.
pub fn direct_sum(x: &CorrMatrix, y: &CorrMatrix) -> CorrMatrix {
    let rows = x.rows + y.rows;
    let cols = x.cols + y.cols;
    let mut out = CorrMatrix::zeros(
        x.row_label.concat(&y.row_label),
        x.col_label.concat(&y.col_label),
        rows,
        cols,
    );
    place(&mut out, x, 0, 0);
    place(&mut out, y, x.rows, x.cols);
    out
}

fn place(out: &mut CorrMatrix, block: &CorrMatrix, row0: usize, col0: usize) {
    for i in 0..block.rows {
        for j in 0..block.cols {
            out.entries[(row0 + i) * out.cols + col0 + j] = block.get(i, j).clone();
        }
    }
}

/// Assembles `[[tl, tr], [bl, br]]` where `tr` is `a x b` and `bl` is `b x a`
/// (or the diagonal blocks are `a x a` and `b x b`). Missing blocks are zero.
fn block_matrix(
    label: &Label,
    tr: Option<&CorrMatrix>,
    bl: Option<&CorrMatrix>,
    tl: Option<&CorrMatrix>,
    br: Option<&CorrMatrix>,
) -> CorrMatrix {
    let a = tr
        .map(|m| m.rows)
        .or(tl.map(|m| m.rows))
        .or(bl.map(|m| m.cols))
        .expect("block matrix needs a block");
    let b = bl
        .map(|m| m.rows)
        .or(br.map(|m| m.rows))
        .or(tr.map(|m| m.cols))
        .expect("block matrix needs a block");
    let mut out = CorrMatrix::zeros(label.clone(), label.clone(), a + b, a + b);
    if let Some(m) = tl {
        place(&mut out, m, 0, 0);
    }
    if let Some(m) = tr {
        place(&mut out, m, 0, a);
    }
    if let Some(m) = bl {
        place(&mut out, m, a, 0);
    }
    if let Some(m) = br {
        place(&mut out, m, a, a);
    }
    out
}

/// Bipartite inflation of `s` by `r`: `X = [[0, r], [s, 0]]`.
pub fn bipartite_inflation(r: &CorrMatrix, s: &CorrMatrix) -> Result<InflationSquare, MatrixError> {
    if r.rows != s.cols
        || r.cols != s.rows
        || r.col_label != s.row_label
        || r.row_label != s.col_label
    {
        return Err(MatrixError::DimensionMismatch {
            op: "bipartite_inflation",
            left: r.shape(),
            right: s.shape(),
        });
    }
    Ok(InflationSquare {
        r_block: r.clone(),
        s_block: s.clone(),
    })
}

/// `X^n` for an inflation `X = [[0, R], [S, 0]]`, from the block closed form:
/// even `n = 2k` gives `diag((RS)^k, (SR)^k)`, odd `n = 2k + 1` gives the
/// anti-diagonal blocks `(RS)^k R` and `(SR)^k S`. `n = 0` is the identity.
pub fn inflation_power(x: &InflationSquare, n: u32) -> CorrMatrix {
    let label = x.label();
    if n == 0 {
        return CorrMatrix::identity(label, x.size());
    }
    let r = &x.r_block;
    let s = &x.s_block;
    let rs = multiply_unchecked(r, s);
    let sr = multiply_unchecked(s, r);
    let k = n / 2;
    let rs_k = power(&rs, k).expect("RS is square");
    let sr_k = power(&sr, k).expect("SR is square");
    if n.is_multiple_of(2) {
        block_matrix(&label, None, None, Some(&rs_k), Some(&sr_k))
    } else {
        let top = multiply_unchecked(&rs_k, r);
        let bottom = multiply_unchecked(&sr_k, s);
        block_matrix(&label, Some(&top), Some(&bottom), None, None)
    }
}

pub fn classify(e: &CorrMatrix) -> Result<StructureFlags, MatrixError> {
    e.check_square("classify")?;
    let nondegenerate = (0..e.rows).all(|i| e.row(i).iter().any(|v| !v.is_zero()));
    let full = col_support(e).len() == e.cols;
    Ok(StructureFlags {
        regular: full && nondegenerate,
        full,
        nondegenerate,
    })
}

/// Indices of columns holding a nonzero entry.
pub fn col_support(e: &CorrMatrix) -> BTreeSet<usize> {
    (0..e.cols)
        .filter(|&j| (0..e.rows).any(|i| !e.get(i, j).is_zero()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[u64]]) -> CorrMatrix {
        CorrMatrix::from_rows(rows)
    }

    #[test]
    fn tensor_examples() {
        let j = m(&[&[1, 1], &[1, 1]]);
        let i2 = CorrMatrix::identity(Label::anonymous(2), 2);
        assert_eq!(tensor(&j, &i2).unwrap(), j);

        let col = m(&[&[1], &[1]]);
        let row = m(&[&[1, 1]]);
        assert_eq!(tensor(&col, &row).unwrap(), j);
        assert_eq!(tensor(&row, &col).unwrap(), m(&[&[2]]));
    }

    #[test]
    fn tensor_rejects_label_mismatch() {
        let a = m(&[&[1, 1]]).with_labels(Label::new("A").unwrap(), Label::new("B").unwrap());
        let b = m(&[&[1], &[1]]).with_labels(Label::new("C").unwrap(), Label::new("A").unwrap());
        assert!(matches!(
            tensor(&a, &b),
            Err(MatrixError::DimensionMismatch { .. })
        ));
        let c = m(&[&[1, 1]]);
        assert!(tensor(&c, &c).is_err());
    }

    #[test]
    fn power_examples() {
        let golden = m(&[&[1, 1], &[1, 0]]);
        assert_eq!(
            power(&golden, 0).unwrap(),
            CorrMatrix::identity(Label::anonymous(2), 2)
        );
        assert_eq!(power(&golden, 2).unwrap(), m(&[&[2, 1], &[1, 1]]));
        assert_eq!(power(&m(&[&[2]]), 3).unwrap(), m(&[&[8]]));
        assert!(matches!(
            power(&m(&[&[1, 1]]), 2),
            Err(MatrixError::NotSquare { .. })
        ));
    }

    #[test]
    fn direct_sum_examples() {
        let s = direct_sum(&m(&[&[2]]), &m(&[&[3]]));
        assert_eq!(s.entries(), m(&[&[2, 0], &[0, 3]]).entries());
        assert_eq!(s.row_label().as_str(), "V1+V1");

        let i1 = CorrMatrix::identity(Label::anonymous(1), 1);
        assert!(direct_sum(&i1, &i1).is_permutation());

        let s = direct_sum(&m(&[&[1, 1]]), &m(&[&[1], &[1]]));
        assert_eq!((s.rows(), s.cols()), (3, 3));
        assert_eq!(
            s.entries(),
            m(&[&[1, 1, 0], &[0, 0, 1], &[0, 0, 1]]).entries()
        );
    }

    #[test]
    fn inflation_examples() {
        let x = bipartite_inflation(&m(&[&[1], &[1]]), &m(&[&[1, 1]])).unwrap();
        let mat = x.materialize();
        assert_eq!(
            mat.entries(),
            m(&[&[0, 0, 1], &[0, 0, 1], &[1, 1, 0]]).entries()
        );
        assert!(mat.is_square());
        assert_eq!(inflation_power(&x, 1), mat);
        assert_eq!(
            inflation_power(&x, 2).entries(),
            m(&[&[1, 1, 0], &[1, 1, 0], &[0, 0, 2]]).entries()
        );

        let i2 = CorrMatrix::identity(Label::anonymous(2), 2);
        let x = bipartite_inflation(&i2, &i2).unwrap();
        assert_eq!(x.materialize().permutation_map(), Some(vec![2, 3, 0, 1]));

        let x = bipartite_inflation(&m(&[&[2]]), &m(&[&[3]])).unwrap();
        assert_eq!(x.materialize().entries(), m(&[&[0, 2], &[3, 0]]).entries());
        assert_eq!(
            inflation_power(&x, 3).entries(),
            m(&[&[0, 12], &[18, 0]]).entries()
        );
    }

    #[test]
    fn inflation_rejects_bad_blocks() {
        assert!(bipartite_inflation(&m(&[&[1], &[1]]), &m(&[&[1]])).is_err());
    }

    #[test]
    fn classify_examples() {
        let f = classify(&m(&[&[1, 1], &[1, 0]])).unwrap();
        assert!(f.regular && f.full && f.nondegenerate);
        let f = classify(&m(&[&[1, 0], &[1, 0]])).unwrap();
        assert!(!f.full && f.nondegenerate && !f.regular);
        let f = classify(&m(&[&[0]])).unwrap();
        assert!(!f.full && !f.nondegenerate && !f.regular);
        assert!(classify(&m(&[&[1, 0]])).is_err());
    }

    #[test]
    fn col_support_examples() {
        assert_eq!(col_support(&m(&[&[0, 1], &[0, 2]])), BTreeSet::from([1]));
        assert_eq!(col_support(&m(&[&[1, 1], &[1, 0]])), BTreeSet::from([0, 1]));
        assert!(col_support(&m(&[&[0, 0], &[0, 0]])).is_empty());
    }

    #[test]
    fn permutation_detection() {
        assert!(m(&[&[0, 1], &[1, 0]]).is_permutation());
        assert!(!m(&[&[0, 2], &[1, 0]]).is_permutation());
        assert!(!m(&[&[1, 1], &[0, 0]]).is_permutation());
        assert!(!m(&[&[1, 0], &[1, 0]]).is_permutation());
        assert!(!m(&[&[1, 0]]).is_permutation());
    }

    #[test]
    fn labels_are_validated() {
        assert!(Label::new("A").is_ok());
        assert!(Label::new("").is_err());
        assert!(Label::new("a b").is_err());
        assert!(Label::new("a#b").is_err());
    }

    #[test]
    fn new_checks_shape() {
        let l = Label::anonymous(1);
        assert!(CorrMatrix::new(l.clone(), l.clone(), 0, 1, vec![]).is_err());
        assert!(CorrMatrix::new(l.clone(), l.clone(), 1, 2, vec![BigUint::one()]).is_err());
        assert!(CorrMatrix::new(l.clone(), l, 1, 1, vec![BigUint::one()]).is_ok());
    }
}
