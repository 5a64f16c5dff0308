//! Witnesses for the four equivalence relations between square matrices,
//! with exact verifiers, witness converters and composers, and bounded
//! exhaustive searchers.
//!
//! Conventions (with `tensor(x, y) = x * y`):
//!
//! * elementary strong shift equivalence `E ~ F` via `(R, S)`: `RS = E`, `SR = F`;
//! * strong shift equivalence: a chain of elementary links;
//! * shift equivalence of lag `m` via `(R, S)`: `E^m = RS`, `F^m = SR`,
//!   `SE = FS`, `ER = RF`;
//! * strong Morita equivalence via a permutation `P`: `EP = PF`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::matrix::{power, tensor, CorrMatrix, MatrixError};
use crate::search::{Equation, Outcome, Problem, Term};

/// Default number of values tried before a search gives up.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("not a permutation matrix: {0}")]
    NotPermutation(String),
    #[error("input witness does not verify: {0}")]
    InvalidWitness(Rejection),
    #[error("neither block of the witness is a permutation matrix")]
    NotInvertible,
    #[error("composition needs a permutation block in the first R or the second S")]
    NotApplicable,
    #[error("search bounds too large: {0}")]
    BoundsTooLarge(String),
    #[error("shift equivalence lag must be at least 1")]
    ZeroLag,
    #[error("malformed chain: {0}")]
    InvalidChain(String),
}

/// The equation a rejected witness fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `R·S = E`
    RsIsE,
    /// `S·R = F`
    SrIsF,
    /// `E^m = R·S`
    PowerE,
    /// `F^m = S·R`
    PowerF,
    /// `S·E = F·S`
    SIntertwines,
    /// `E·R = R·F`
    RIntertwines,
    /// `E·P = P·F`
    Conjugacy,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::RsIsE => "R·S = E",
            Relation::SrIsF => "S·R = F",
            Relation::PowerE => "E^m = R·S",
            Relation::PowerF => "F^m = S·R",
            Relation::SIntertwines => "S·E = F·S",
            Relation::RIntertwines => "E·R = R·F",
            Relation::Conjugacy => "E·P = P·F",
        })
    }
}

/// First failing equation and coordinate of a rejected witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// Index of the failing link, for chains.
    pub link: Option<usize>,
    pub relation: Relation,
    pub row: usize,
    pub col: usize,
    pub left: BigUint,
    pub right: BigUint,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(link) = self.link {
            write!(f, "link {link}: ")?;
        }
        write!(
            f,
            "{} fails at ({}, {}): left side {}, right side {}",
            self.relation, self.row, self.col, self.left, self.right
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(Rejection),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    fn into_result(self) -> Result<(), EquivError> {
        match self {
            Verdict::Accept => Ok(()),
            Verdict::Reject(r) => Err(EquivError::InvalidWitness(r)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EsseWitness {
    pub r: CorrMatrix,
    pub s: CorrMatrix,
}

impl EsseWitness {
    /// The witness read in the other direction, for `(F, E)`.
    pub fn reversed(&self) -> EsseWitness {
        EsseWitness {
            r: self.s.clone(),
            s: self.r.clone(),
        }
    }

    /// `(E, I)`, valid for `(E, E)`.
    pub fn reflexive(e: &CorrMatrix) -> EsseWitness {
        EsseWitness {
            r: e.clone(),
            s: CorrMatrix::identity(e.col_label().clone(), e.cols()),
        }
    }
}

/// `T_0 ~ T_1 ~ ... ~ T_n` with one elementary link per step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SseChain {
    intermediates: Vec<CorrMatrix>,
    links: Vec<EsseWitness>,
}

impl SseChain {
    pub fn new(
        intermediates: Vec<CorrMatrix>,
        links: Vec<EsseWitness>,
    ) -> Result<Self, EquivError> {
        if links.is_empty() {
            return Err(EquivError::InvalidChain(
                "a chain needs at least one link".into(),
            ));
        }
        if intermediates.len() != links.len() + 1 {
            return Err(EquivError::InvalidChain(format!(
                "{} links need {} matrices, got {}",
                links.len(),
                links.len() + 1,
                intermediates.len()
            )));
        }
        Ok(SseChain {
            intermediates,
            links,
        })
    }

    pub fn intermediates(&self) -> &[CorrMatrix] {
        &self.intermediates
    }

    pub fn links(&self) -> &[EsseWitness] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> &CorrMatrix {
        &self.intermediates[0]
    }

    pub fn last(&self) -> &CorrMatrix {
        self.intermediates.last().expect("chain is non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeWitness {
    pub r: CorrMatrix,
    pub s: CorrMatrix,
    pub lag: u32,
}

impl From<EsseWitness> for SeWitness {
    fn from(w: EsseWitness) -> Self {
        SeWitness {
            r: w.r,
            s: w.s,
            lag: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmeWitness {
    pub p: CorrMatrix,
}

fn require_square(m: &CorrMatrix, op: &'static str) -> Result<(), EquivError> {
    if m.is_square() {
        Ok(())
    } else {
        Err(MatrixError::NotSquare {
            op,
            shape: m.shape(),
        }
        .into())
    }
}

/// Exact comparison; a shape or label difference is an error, an entry
/// difference is the first offending coordinate in row-major order.
fn compare(
    relation: Relation,
    left: &CorrMatrix,
    right: &CorrMatrix,
) -> Result<Verdict, EquivError> {
    if left.rows() != right.rows()
        || left.cols() != right.cols()
        || left.row_label() != right.row_label()
        || left.col_label() != right.col_label()
    {
        return Err(MatrixError::DimensionMismatch {
            op: "verify",
            left: left.shape(),
            right: right.shape(),
        }
        .into());
    }
    for i in 0..left.rows() {
        for j in 0..left.cols() {
            if left.get(i, j) != right.get(i, j) {
                return Ok(Verdict::Reject(Rejection {
                    link: None,
                    relation,
                    row: i,
                    col: j,
                    left: left.get(i, j).clone(),
                    right: right.get(i, j).clone(),
                }));
            }
        }
    }
    Ok(Verdict::Accept)
}

fn all_of(
    checks: impl IntoIterator<Item = Result<Verdict, EquivError>>,
) -> Result<Verdict, EquivError> {
    for check in checks {
        let verdict = check?;
        if !verdict.is_accept() {
            return Ok(verdict);
        }
    }
    Ok(Verdict::Accept)
}

pub fn verify_esse(e: &CorrMatrix, f: &CorrMatrix, w: &EsseWitness) -> Result<Verdict, EquivError> {
    require_square(e, "verify_esse")?;
    require_square(f, "verify_esse")?;
    let rs = tensor(&w.r, &w.s)?;
    let sr = tensor(&w.s, &w.r)?;
    all_of([
        compare(Relation::RsIsE, &rs, e),
        compare(Relation::SrIsF, &sr, f),
    ])
}

pub fn verify_sse_chain(chain: &SseChain) -> Result<Verdict, EquivError> {
    for (i, link) in chain.links.iter().enumerate() {
        let verdict = verify_esse(&chain.intermediates[i], &chain.intermediates[i + 1], link)?;
        if let Verdict::Reject(mut r) = verdict {
            r.link = Some(i);
            return Ok(Verdict::Reject(r));
        }
    }
    Ok(Verdict::Accept)
}

pub fn verify_se(e: &CorrMatrix, f: &CorrMatrix, w: &SeWitness) -> Result<Verdict, EquivError> {
    require_square(e, "verify_se")?;
    require_square(f, "verify_se")?;
    if w.lag == 0 {
        return Err(EquivError::ZeroLag);
    }
    let rs = tensor(&w.r, &w.s)?;
    let sr = tensor(&w.s, &w.r)?;
    all_of([
        compare(Relation::PowerE, &power(e, w.lag)?, &rs),
        compare(Relation::PowerF, &power(f, w.lag)?, &sr),
        compare(Relation::SIntertwines, &tensor(&w.s, e)?, &tensor(f, &w.s)?),
        compare(Relation::RIntertwines, &tensor(e, &w.r)?, &tensor(&w.r, f)?),
    ])
}

pub fn verify_sme(e: &CorrMatrix, f: &CorrMatrix, w: &SmeWitness) -> Result<Verdict, EquivError> {
    require_square(e, "verify_sme")?;
    require_square(f, "verify_sme")?;
    if e.rows() != f.rows() {
        return Err(MatrixError::DimensionMismatch {
            op: "verify_sme",
            left: e.shape(),
            right: f.shape(),
        }
        .into());
    }
    if !w.p.is_permutation() {
        return Err(EquivError::NotPermutation(w.p.to_string()));
    }
    compare(Relation::Conjugacy, &tensor(e, &w.p)?, &tensor(&w.p, f)?)
}

/// `R = E·P`, `S = Pᵀ`.
pub fn sme_to_esse(
    e: &CorrMatrix,
    f: &CorrMatrix,
    w: &SmeWitness,
) -> Result<EsseWitness, EquivError> {
    verify_sme(e, f, w)?.into_result()?;
    Ok(EsseWitness {
        r: tensor(e, &w.p)?,
        s: w.p.transpose(),
    })
}

/// Upgrades an elementary witness with a permutation block to a conjugacy.
pub fn esse_to_sme_if_invertible(
    e: &CorrMatrix,
    f: &CorrMatrix,
    w: &EsseWitness,
) -> Result<SmeWitness, EquivError> {
    verify_esse(e, f, w)?.into_result()?;
    if w.r.is_permutation() {
        Ok(SmeWitness { p: w.r.clone() })
    } else if w.s.is_permutation() {
        Ok(SmeWitness { p: w.s.transpose() })
    } else {
        Err(EquivError::NotInvertible)
    }
}

/// Lag-`n` witness `R = R_1···R_n`, `S = S_n···S_1` for an `n`-link chain.
pub fn chain_to_se(chain: &SseChain) -> Result<SeWitness, EquivError> {
    verify_sse_chain(chain)?.into_result()?;
    let mut links = chain.links.iter();
    let first = links.next().expect("chain is non-empty");
    let mut r = first.r.clone();
    let mut s = first.s.clone();
    for link in links {
        r = tensor(&r, &link.r)?;
        s = tensor(&link.s, &s)?;
    }
    Ok(SeWitness {
        r,
        s,
        lag: chain.len() as u32,
    })
}

/// Composes `E ~ F` (lag `m`, via `R, S`) with `F ~ G` (lag `n`, via `V, U`)
/// into `E ~ G` with lag `mn + m` via `R·V·(U·V)^(m-1)` and `U·S`.
pub fn compose_se(
    e: &CorrMatrix,
    f: &CorrMatrix,
    g: &CorrMatrix,
    w1: &SeWitness,
    w2: &SeWitness,
) -> Result<SeWitness, EquivError> {
    verify_se(e, f, w1)?.into_result()?;
    verify_se(f, g, w2)?.into_result()?;
    let (m, n) = (w1.lag, w2.lag);
    let lag = m
        .checked_mul(n)
        .and_then(|mn| mn.checked_add(m))
        .ok_or_else(|| EquivError::BoundsTooLarge(format!("lag {m}*{n}+{m} overflows")))?;
    let uv = tensor(&w2.s, &w2.r)?;
    let r = tensor(&tensor(&w1.r, &w2.r)?, &power(&uv, m - 1)?)?;
    let s = tensor(&w2.s, &w1.s)?;
    Ok(SeWitness { r, s, lag })
}

/// Replaces `S` by `S·E^k`, raising the lag from `m` to `m + k`.
pub fn increase_lag(
    e: &CorrMatrix,
    f: &CorrMatrix,
    w: &SeWitness,
    k: u32,
) -> Result<SeWitness, EquivError> {
    verify_se(e, f, w)?.into_result()?;
    let lag = w
        .lag
        .checked_add(k)
        .ok_or_else(|| EquivError::BoundsTooLarge(format!("lag {} + {k} overflows", w.lag)))?;
    Ok(SeWitness {
        r: w.r.clone(),
        s: tensor(&w.s, &power(e, k)?)?,
        lag,
    })
}

/// Composes elementary links `E ~ F` via `(R, S)` and `F ~ G` via `(T, Z)`
/// when `Z` or `R` is a permutation matrix.
///
/// With `Z` a permutation the composite is `(R·Zᵀ, Z·S)`; with `R` a
/// permutation it is `(R·T, Z·Rᵀ)`.
pub fn compose_esse_via_invertible(
    e: &CorrMatrix,
    f: &CorrMatrix,
    g: &CorrMatrix,
    w1: &EsseWitness,
    w2: &EsseWitness,
) -> Result<EsseWitness, EquivError> {
    verify_esse(e, f, w1)?.into_result()?;
    verify_esse(f, g, w2)?.into_result()?;
    if w2.s.is_permutation() {
        let z = &w2.s;
        Ok(EsseWitness {
            r: tensor(&w1.r, &z.transpose())?,
            s: tensor(z, &w1.s)?,
        })
    } else if w1.r.is_permutation() {
        let r = &w1.r;
        Ok(EsseWitness {
            r: tensor(r, &w2.r)?,
            s: tensor(&w2.s, &r.transpose())?,
        })
    } else {
        Err(EquivError::NotApplicable)
    }
}

/// Limits for the exhaustive searchers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBounds {
    /// Largest allowed size of the second matrix (the inner dimension of `R·S`).
    pub max_inner_dim: usize,
    /// Largest entry tried in `R` and `S`.
    pub max_entry: u64,
    /// Largest lag tried by [`search_se`].
    pub max_lag: u32,
    /// Number of entry values the search may try before giving up.
    pub budget: u64,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            max_inner_dim: 4,
            max_entry: 3,
            max_lag: 6,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Largest permutation size [`search_sme`] will enumerate.
pub const MAX_SME_SEARCH_SIZE: usize = 8;

/// Variable layout: `R` (a x b) row-major, then `S` (b x a) row-major.
struct Layout {
    a: usize,
    b: usize,
}

impl Layout {
    fn r(&self, i: usize, k: usize) -> usize {
        i * self.b + k
    }

    fn s(&self, k: usize, j: usize) -> usize {
        self.a * self.b + k * self.a + j
    }

    fn n_vars(&self) -> usize {
        2 * self.a * self.b
    }

    /// `R·S = target` (a x a) and `S·R = target` (b x b).
    fn product_equations(&self, rs: &CorrMatrix, sr: &CorrMatrix, out: &mut Vec<Equation>) {
        for i in 0..self.a {
            for j in 0..self.a {
                let terms = (0..self.b)
                    .map(|k| Term::bilinear(self.r(i, k), self.s(k, j)))
                    .collect();
                out.push(Equation::against(terms, rs.get(i, j)));
            }
        }
        for i in 0..self.b {
            for j in 0..self.b {
                let terms = (0..self.a)
                    .map(|k| Term::bilinear(self.s(i, k), self.r(k, j)))
                    .collect();
                out.push(Equation::against(terms, sr.get(i, j)));
            }
        }
    }

    /// `E·R = R·F` and `S·E = F·S`.
    #[allow(clippy::needless_range_loop)]
    fn intertwining_equations(&self, e: &[Vec<u128>], f: &[Vec<u128>], out: &mut Vec<Equation>) {
        for i in 0..self.a {
            for j in 0..self.b {
                let lhs = (0..self.a)
                    .map(|k| Term::linear(e[i][k], self.r(k, j)))
                    .collect();
                let rhs = (0..self.b)
                    .map(|k| Term::linear(f[k][j], self.r(i, k)))
                    .collect();
                out.push(Equation::balance(lhs, rhs));
            }
        }
        for i in 0..self.b {
            for j in 0..self.a {
                let lhs = (0..self.a)
                    .map(|k| Term::linear(e[k][j], self.s(i, k)))
                    .collect();
                let rhs = (0..self.b)
                    .map(|k| Term::linear(f[i][k], self.s(k, j)))
                    .collect();
                out.push(Equation::balance(lhs, rhs));
            }
        }
    }

    fn decode(&self, values: &[u64], e: &CorrMatrix, f: &CorrMatrix) -> (CorrMatrix, CorrMatrix) {
        let (a, b) = (self.a, self.b);
        let big = |range: std::ops::Range<usize>| -> Vec<BigUint> {
            values[range].iter().map(|&v| BigUint::from(v)).collect()
        };
        let r = CorrMatrix::new(
            e.row_label().clone(),
            f.row_label().clone(),
            a,
            b,
            big(0..a * b),
        )
        .expect("layout matches shape");
        let s = CorrMatrix::new(
            f.row_label().clone(),
            e.row_label().clone(),
            b,
            a,
            big(a * b..2 * a * b),
        )
        .expect("layout matches shape");
        (r, s)
    }
}

fn check_entry_bound(bounds: &SearchBounds) -> Result<(), EquivError> {
    if bounds.max_entry > u32::MAX as u64 {
        return Err(EquivError::BoundsTooLarge(format!(
            "max entry {} exceeds {}",
            bounds.max_entry,
            u32::MAX
        )));
    }
    Ok(())
}

fn small_entries(m: &CorrMatrix) -> Result<Vec<Vec<u128>>, EquivError> {
    (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .map(|v| {
                    v.to_u64().map(u128::from).ok_or_else(|| {
                        EquivError::BoundsTooLarge(format!(
                            "entry {v} too large for exhaustive search"
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

fn run(problem: &Problem, budget: &mut u64, limit: u64) -> Result<Option<Vec<u64>>, EquivError> {
    match problem.solve(budget) {
        (Outcome::Found, values) => Ok(values),
        (Outcome::Exhausted, _) => Ok(None),
        (Outcome::BudgetExceeded, _) => Err(EquivError::BoundsTooLarge(format!(
            "search budget of {limit} candidate entries exhausted"
        ))),
    }
}

/// Exhaustive search for `(R, S)` with `RS = E`, `SR = F` and entries at most
/// `bounds.max_entry`.
///
/// Returns the least witness in lexicographic order of the entries of `R`
/// followed by those of `S` (both row-major), or `None` when no witness lies
/// within bounds. The inner dimension is the size of `f`; when it exceeds
/// `bounds.max_inner_dim` nothing is within bounds.
pub fn search_esse(
    e: &CorrMatrix,
    f: &CorrMatrix,
    bounds: &SearchBounds,
) -> Result<Option<EsseWitness>, EquivError> {
    require_square(e, "search_esse")?;
    require_square(f, "search_esse")?;
    check_entry_bound(bounds)?;
    let layout = Layout {
        a: e.rows(),
        b: f.rows(),
    };
    if layout.b > bounds.max_inner_dim {
        return Ok(None);
    }
    let mut equations = Vec::new();
    layout.product_equations(e, f, &mut equations);
    let problem = Problem::new(layout.n_vars(), bounds.max_entry, equations);
    let mut budget = bounds.budget;
    Ok(run(&problem, &mut budget, bounds.budget)?.map(|values| {
        let (r, s) = layout.decode(&values, e, f);
        EsseWitness { r, s }
    }))
}

/// Exhaustive search for a shift equivalence over lags `1..=max_lag`.
///
/// Lags are tried in increasing order; within a lag the least `(R, S)` in the
/// order of [`search_esse`] is returned. The budget is shared across lags.
pub fn search_se(
    e: &CorrMatrix,
    f: &CorrMatrix,
    bounds: &SearchBounds,
) -> Result<Option<SeWitness>, EquivError> {
    require_square(e, "search_se")?;
    require_square(f, "search_se")?;
    check_entry_bound(bounds)?;
    let layout = Layout {
        a: e.rows(),
        b: f.rows(),
    };
    if layout.b > bounds.max_inner_dim {
        return Ok(None);
    }
    let e_small = small_entries(e)?;
    let f_small = small_entries(f)?;
    let mut budget = bounds.budget;
    for lag in 1..=bounds.max_lag {
        let mut equations = Vec::new();
        layout.intertwining_equations(&e_small, &f_small, &mut equations);
        layout.product_equations(&power(e, lag)?, &power(f, lag)?, &mut equations);
        let problem = Problem::new(layout.n_vars(), bounds.max_entry, equations);
        if let Some(values) = run(&problem, &mut budget, bounds.budget)? {
            let (r, s) = layout.decode(&values, e, f);
            return Ok(Some(SeWitness { r, s, lag }));
        }
    }
    Ok(None)
}

/// Tries every permutation of the vertices in lexicographic order of the
/// image sequence and returns the first `P` with `EP = PF`.
pub fn search_sme(e: &CorrMatrix, f: &CorrMatrix) -> Result<Option<SmeWitness>, EquivError> {
    require_square(e, "search_sme")?;
    require_square(f, "search_sme")?;
    let n = e.rows();
    if n > MAX_SME_SEARCH_SIZE || f.rows() > MAX_SME_SEARCH_SIZE {
        return Err(EquivError::BoundsTooLarge(format!(
            "permutation search is limited to size {MAX_SME_SEARCH_SIZE}, got {n}"
        )));
    }
    if f.rows() != n {
        return Ok(None);
    }
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        // EP = PF with P[i][perm[i]] = 1 reads E[i][k] = F[perm[i]][perm[k]].
        let conjugates = (0..n).all(|i| (0..n).all(|k| e.get(i, k) == f.get(perm[i], perm[k])));
        if conjugates {
            let p = CorrMatrix::permutation(e.row_label().clone(), f.row_label().clone(), &perm);
            return Ok(Some(SmeWitness { p }));
        }
        if !next_permutation(&mut perm) {
            return Ok(None);
        }
    }
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}
