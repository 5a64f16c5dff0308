//! Random planted instances shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sekit_core::{
    increase_lag, power, tensor, CorrMatrix, EsseWitness, Label, SeWitness, SmeWitness, SseChain,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn label(name: &str) -> Label {
    Label::new(name).unwrap()
}

pub fn random_matrix(
    rng: &mut impl Rng,
    row_label: &Label,
    col_label: &Label,
    rows: usize,
    cols: usize,
    max_entry: u64,
) -> CorrMatrix {
    let entries = (0..rows * cols)
        .map(|_| BigUint::from(rng.gen_range(0..=max_entry)))
        .collect();
    CorrMatrix::new(row_label.clone(), col_label.clone(), rows, cols, entries).unwrap()
}

/// Random `(R, S)` with `R: A x B`, `S: B x A`, together with `E = RS`, `F = SR`.
pub fn planted_esse(
    rng: &mut impl Rng,
    max_dim: usize,
    max_entry: u64,
) -> (CorrMatrix, CorrMatrix, EsseWitness) {
    let (a, b) = (label("A"), label("B"));
    let na = rng.gen_range(1..=max_dim);
    let nb = rng.gen_range(1..=max_dim);
    let r = random_matrix(rng, &a, &b, na, nb, max_entry);
    let s = random_matrix(rng, &b, &a, nb, na, max_entry);
    let e = tensor(&r, &s).unwrap();
    let f = tensor(&s, &r).unwrap();
    (e, f, EsseWitness { r, s })
}

pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// `(E, F, P)` with `E = P F Pᵀ`, so `EP = PF`.
pub fn planted_conjugate(
    rng: &mut impl Rng,
    max_dim: usize,
    max_entry: u64,
) -> (CorrMatrix, CorrMatrix, SmeWitness) {
    let (a, b) = (label("A"), label("B"));
    let n = rng.gen_range(1..=max_dim);
    let f = random_matrix(rng, &b, &b, n, n, max_entry);
    let p = CorrMatrix::permutation(a.clone(), b.clone(), &random_permutation(rng, n));
    let e = tensor(&tensor(&p, &f).unwrap(), &p.transpose()).unwrap();
    (e, f, SmeWitness { p })
}

/// Chain of `len` links obtained by rotating a cyclic product of factors
/// `M_1 ... M_k` over vertex sets `L_0 ... L_(k-1)`: `T_i` is the product
/// starting at factor `i`, and link `i` splits off its first factor.
pub fn planted_chain(rng: &mut impl Rng, len: usize, max_dim: usize, max_entry: u64) -> SseChain {
    let k = rng.gen_range(2..=len + 1);
    let labels: Vec<Label> = (0..k).map(|i| label(&format!("L{i}"))).collect();
    let dims: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=max_dim)).collect();
    // factors[i] : L_i x L_(i+1)
    let factors: Vec<CorrMatrix> = (0..k)
        .map(|i| {
            let j = (i + 1) % k;
            random_matrix(rng, &labels[i], &labels[j], dims[i], dims[j], max_entry)
        })
        .collect();
    let product_from = |start: usize, count: usize| -> CorrMatrix {
        let mut acc = factors[start % k].clone();
        for step in 1..count {
            acc = tensor(&acc, &factors[(start + step) % k]).unwrap();
        }
        acc
    };
    let mut intermediates = Vec::with_capacity(len + 1);
    let mut links = Vec::with_capacity(len);
    for i in 0..=len {
        intermediates.push(product_from(i, k));
    }
    for i in 0..len {
        links.push(EsseWitness {
            r: factors[i % k].clone(),
            s: product_from(i + 1, k - 1),
        });
    }
    SseChain::new(intermediates, links).unwrap()
}

/// Planted shift equivalences `E ~ F` (lag `m`) and `F ~ G` (lag `n`).
pub fn planted_se_pair(
    rng: &mut impl Rng,
    m: u32,
    n: u32,
) -> ([CorrMatrix; 3], SeWitness, SeWitness) {
    let chain = planted_chain(rng, 2, 3, 2);
    let t = chain.intermediates();
    let (e, f, g) = (t[0].clone(), t[1].clone(), t[2].clone());
    let w1: SeWitness = chain.links()[0].clone().into();
    let w2: SeWitness = chain.links()[1].clone().into();
    let w1 = increase_lag(&e, &f, &w1, m - 1).unwrap();
    let w2 = increase_lag(&f, &g, &w2, n - 1).unwrap();
    ([e, f, g], w1, w2)
}

/// All `n x n` permutation matrices over one vertex set, `n = 1..=max_n`.
pub fn all_permutation_matrices(max_n: usize) -> Vec<CorrMatrix> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        let l = label(&format!("P{n}"));
        let mut perms = Vec::new();
        heap_permutations(&mut (0..n).collect::<Vec<_>>(), n, &mut perms);
        perms.sort();
        for p in perms {
            out.push(CorrMatrix::permutation(l.clone(), l.clone(), &p));
        }
    }
    out
}

fn heap_permutations(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(v.clone());
        return;
    }
    for i in 0..k {
        heap_permutations(v, k - 1, out);
        if k.is_multiple_of(2) {
            v.swap(i, k - 1);
        } else {
            v.swap(0, k - 1);
        }
    }
}

/// Sorted cycle lengths of a permutation matrix.
pub fn cycle_type(p: &CorrMatrix) -> Vec<usize> {
    let map = p.permutation_map().expect("permutation matrix");
    let mut seen = vec![false; map.len()];
    let mut lengths = Vec::new();
    for start in 0..map.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = map[i];
            len += 1;
        }
        lengths.push(len);
    }
    lengths.sort_unstable();
    lengths
}

/// Plain `u64` matrix product, independent of the library's multiply.
pub fn naive_product(x: &[Vec<u64>], y: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let inner = y.len();
    let cols = y[0].len();
    x.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * y[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn to_u64_rows(m: &CorrMatrix) -> Vec<Vec<u64>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|v| u64::try_from(v).unwrap()).collect())
        .collect()
}

/// `E^m` via the library, for readability in tests.
pub fn pow(e: &CorrMatrix, m: u32) -> CorrMatrix {
    power(e, m).unwrap()
}
