#![allow(dead_code)]

use fakewidth::{AdversaryOutcome, TrickSet};

/// Lexicographic `k`-subsets of `0..n`.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `||x_I||_2`, summing squares in descending order so equal multisets of
/// magnitudes give bit-identical results.
pub fn restricted_norm(x: &[f64], support: &[usize]) -> f64 {
    let mut sq: Vec<f64> = support.iter().map(|&i| x[i] * x[i]).collect();
    sq.sort_by(|a, b| b.total_cmp(a));
    sq.iter().sum::<f64>().sqrt()
}

/// Exhaustive argmax of `||x_I||_2` over subsets of size `min(s, nnz)`,
/// ties to the lexicographically smallest support. `None` for `x = 0`.
pub fn sparse_argmax(x: &[f64], s: usize) -> Option<(Vec<usize>, f64)> {
    let nnz = x.iter().filter(|v| **v != 0.0).count();
    if nnz == 0 {
        return None;
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for sub in subsets(x.len(), s.min(nnz)) {
        let v = restricted_norm(x, &sub);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((sub, v));
        }
    }
    best
}

/// Exhaustive value of `sup_t <x, t / ||t||^2>` over the sparse set.
pub fn sparse_scaled_support(x: &[f64], s: usize, rho0: f64) -> f64 {
    subsets(x.len(), s.min(x.len()))
        .iter()
        .map(|sub| restricted_norm(x, sub))
        .fold(0.0, f64::max)
        / rho0
}

/// Sign-flip outcome predicted by exhaustive enumeration.
pub fn sparse_sign_flip(x: &[f64], s: usize, rho0: f64, r: f64) -> AdversaryOutcome {
    match sparse_argmax(x, s) {
        Some((sub, v)) if 2.0 * v >= r * rho0 => {
            let mut fake = x.to_vec();
            let mut trick = vec![0.0; x.len()];
            for &i in &sub {
                fake[i] = -x[i];
                trick[i] = -2.0 * x[i] / r;
            }
            AdversaryOutcome::Fake { fake, trick }
        }
        _ => AdversaryOutcome::GiveUp,
    }
}

/// `E ||g_n||_2` from the recursion `R(n + 2) = (n + 1) / n * R(n)` on
/// `R(n) = Gamma((n + 1) / 2) / Gamma(n / 2)`.
pub fn chi_mean(n: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let mut r = if n % 2 == 1 { 1.0 / pi.sqrt() } else { pi.sqrt() / 2.0 };
    let mut k = if n % 2 == 1 { 1 } else { 2 };
    while k < n {
        r *= (k as f64 + 1.0) / k as f64;
        k += 2;
    }
    std::f64::consts::SQRT_2 * r
}

/// `e^{-u^2 / 8}`
pub fn gaussian_tail(u: f64) -> f64 {
    (-u * u / 8.0).exp()
}

pub fn support_of(t: &[f64]) -> Vec<usize> {
    (0..t.len()).filter(|&i| t[i] != 0.0).collect()
}

pub fn sparse(n: usize, s: usize) -> TrickSet {
    TrickSet::sparse_norm(n, s, 1.0).unwrap()
}
