//! Deciding the polar condition `for all t in T there is s in S with <t, s> >= 1`.
//!
//! For the highly symmetric variants the hardest tricks are the ones of
//! minimal norm, so on each admissible support `J` with threshold `nu` the
//! condition reads `min_{|u| = 1, supp(u) in J} h(u) >= 1 / nu`, where
//! `h(u) = max_{s in S} <u, s>` is the support function of `conv(S_J)`. For an
//! origin-symmetric, full-rank point set that minimum equals the smallest
//! facet distance of the polytope, which is found by enumerating candidate
//! facets through `dim` points at a time.

use serde::Serialize;

use crate::tricksets::TrickSet;

use super::FocusSet;

/// Upper bound on `C(points, dim) * points * dim` before giving up on exact
/// facet enumeration.
const FACET_BUDGET: f64 = 5e7;
const RANK_TOL: f64 = 1e-10;
const REL_TOL: f64 = 1e-12;
const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PolarCheck {
    Satisfied,
    /// `witness` is a trick `t` with `max_s <t, s> < 1`.
    Violated { witness: Vec<f64> },
    /// Neither a proof nor a counterexample could be produced in closed form.
    Undecidable { reason: String },
}

impl PolarCheck {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, PolarCheck::Satisfied)
    }
}

pub(super) fn check(set: &TrickSet, focus: &FocusSet) -> PolarCheck {
    let n = set.dim();
    match set {
        TrickSet::NormThreshold { rho0, .. } => {
            let all: Vec<usize> = (0..n).collect();
            check_supports(focus, std::iter::once((all, *rho0)))
        }
        TrickSet::SparseNorm { s, rho0, .. } => {
            let count = binomial(n, *s);
            let per = facet_cost(focus.len(), *s);
            if count * per > FACET_BUDGET {
                return PolarCheck::Undecidable {
                    reason: format!("{count} supports of size {s} exceed the enumeration budget"),
                };
            }
            check_supports(focus, Combinations::new(n, *s).map(|c| (c, *rho0)))
        }
        TrickSet::SupportFamily { entries, .. } => check_supports(
            focus,
            entries.iter().map(|e| (e.support.indices().to_vec(), e.threshold)),
        ),
        TrickSet::HalfCoordinate { .. } => check_half_coordinate(n, focus),
    }
}

fn check_supports<I>(focus: &FocusSet, supports: I) -> PolarCheck
where
    I: Iterator<Item = (Vec<usize>, f64)>,
{
    let n = focus.dim();
    for (support, nu) in supports {
        match min_support_function(focus, &support) {
            MinSupport::Value { value, direction } => {
                if value < (1.0 / nu) * (1.0 - REL_TOL) {
                    return PolarCheck::Violated { witness: embed(n, &support, &direction, nu) };
                }
            }
            MinSupport::Degenerate { direction } => {
                return PolarCheck::Violated { witness: embed(n, &support, &direction, nu) };
            }
            MinSupport::TooLarge(reason) => return PolarCheck::Undecidable { reason },
        }
    }
    PolarCheck::Satisfied
}

fn embed(n: usize, support: &[usize], direction: &[f64], scale: f64) -> Vec<f64> {
    let mut t = vec![0.0; n];
    for (k, &i) in support.iter().enumerate() {
        t[i] = scale * direction[k];
    }
    t
}

enum MinSupport {
    /// Minimum of the support function over unit vectors on the support, and
    /// a minimizing direction.
    Value { value: f64, direction: Vec<f64> },
    /// The projected points do not span the subspace; `direction` is
    /// orthogonal to all of them.
    Degenerate { direction: Vec<f64> },
    TooLarge(String),
}

fn min_support_function(focus: &FocusSet, support: &[usize]) -> MinSupport {
    let m = support.len();
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for p in focus.points() {
        let q: Vec<f64> = support.iter().map(|&i| p[i]).collect();
        if q.iter().any(|v| *v != 0.0) && !pts.contains(&q) {
            pts.push(q);
        }
    }
    if let Some(direction) = orthogonal_direction(&pts, m) {
        return MinSupport::Degenerate { direction };
    }
    if m == 1 {
        let value = pts.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
        // Symmetric set: both unit directions see the same value.
        return MinSupport::Value { value, direction: vec![1.0] };
    }
    let cost = binomial(pts.len(), m) * facet_cost(pts.len(), m);
    if cost > FACET_BUDGET {
        return MinSupport::TooLarge(format!(
            "facet enumeration over {} points in dimension {m} exceeds the budget",
            pts.len()
        ));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut rows = vec![vec![0.0; m]; m];
    for combo in Combinations::new(pts.len(), m) {
        for (row, &k) in rows.iter_mut().zip(&combo) {
            row.copy_from_slice(&pts[k]);
        }
        // Hyperplane <a, y> = 1 through the chosen points.
        let Some(a) = solve(&rows, &vec![1.0; m]) else { continue };
        let supporting = pts
            .iter()
            .all(|p| dot(&a, p) <= 1.0 + 1e-9 * (1.0 + dot(&a, &a).sqrt() * norm(p)));
        if !supporting {
            continue;
        }
        let an = norm(&a);
        let dist = 1.0 / an;
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, a.iter().map(|v| v / an).collect()));
        }
    }
    match best {
        Some((value, direction)) => MinSupport::Value { value, direction },
        // A full-rank symmetric set always has facets; reaching this means
        // every candidate system was numerically singular.
        None => MinSupport::TooLarge("no facet could be resolved numerically".into()),
    }
}

fn check_half_coordinate(n: usize, focus: &FocusSet) -> PolarCheck {
    // t = (sigma / 2, (sqrt3 / 2) v) with v a unit vector in R^{n-1}.
    let tail = |p: &[f64]| norm(&p[1..]);
    let mut undecided = false;
    for sigma in [1.0, -1.0] {
        let value_at = |v: &[f64]| -> f64 {
            focus
                .points()
                .iter()
                .map(|p| sigma * p[0] / 2.0 + HALF_SQRT3 * dot(v, &p[1..]))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let witness = |v: &[f64]| {
            let mut t = vec![sigma / 2.0];
            t.extend(v.iter().map(|vi| HALF_SQRT3 * vi));
            t
        };
        // One focus point that works for every v settles this sign.
        if focus
            .points()
            .iter()
            .any(|p| sigma * p[0] / 2.0 - HALF_SQRT3 * tail(p) >= 1.0 - REL_TOL)
        {
            continue;
        }
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        let tails: Vec<Vec<f64>> = focus.points().iter().map(|p| p[1..].to_vec()).collect();
        if let Some(v) = orthogonal_direction(&tails, n - 1) {
            candidates.push(v);
        }
        for j in 0..n - 1 {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; n - 1];
                v[j] = sign;
                candidates.push(v);
            }
        }
        for tl in &tails {
            let nt = norm(tl);
            if nt > 0.0 {
                candidates.push(tl.iter().map(|x| -x / nt).collect());
            }
        }
        if let Some(v) = candidates.iter().find(|v| value_at(v) < 1.0 - REL_TOL) {
            return PolarCheck::Violated { witness: witness(v) };
        }
        // With n = 2 the candidates above are all of the unit sphere in R^1.
        if n > 2 {
            undecided = true;
        }
    }
    if undecided {
        PolarCheck::Undecidable {
            reason: "half-coordinate set with a focus set lacking a dominant first coordinate"
                .into(),
        }
    } else {
        PolarCheck::Satisfied
    }
}

/// A unit vector orthogonal to every point, if the points do not span `R^m`.
fn orthogonal_direction(pts: &[Vec<f64>], m: usize) -> Option<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let scale = pts.iter().map(|p| norm(p)).fold(1.0, f64::max);
    for p in pts {
        if let Some(b) = reduce(p, &basis, RANK_TOL * scale) {
            basis.push(b);
            if basis.len() == m {
                return None;
            }
        }
    }
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        if let Some(mut u) = reduce(&e, &basis, 1e-6) {
            // Canonical sign: first non-negligible entry positive.
            if let Some(first) = u.iter().find(|v| v.abs() > 1e-12) {
                if *first < 0.0 {
                    u.iter_mut().for_each(|v| *v = -*v);
                }
            }
            u.iter_mut().for_each(|v| {
                if v.abs() < 1e-15 {
                    *v = 0.0
                }
            });
            return Some(u);
        }
    }
    None
}

/// Gram-Schmidt step: the normalized residual of `v` against an orthonormal
/// basis, or `None` if the residual is below `tol`.
fn reduce(v: &[f64], basis: &[Vec<f64>], tol: f64) -> Option<Vec<f64>> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(&r, b);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= c * bi);
        }
    }
    let nr = norm(&r);
    (nr > tol).then(|| r.iter().map(|v| v / nr).collect())
}

fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = b.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(*bi);
            r
        })
        .collect();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))?;
        if aug[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        aug.swap(col, piv);
        let (top, rest) = aug.split_at_mut(col + 1);
        let pivot = &top[col];
        for row in rest.iter_mut() {
            let f = row[col] / pivot[col];
            if f != 0.0 {
                for (a, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *a -= f * p;
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| aug[row][k] * x[k]).sum();
        x[row] = (aug[row][m] - s) / aug[row][row];
    }
    Some(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn facet_cost(points: usize, dim: usize) -> f64 {
    (points * dim * dim) as f64
}

/// All `k`-subsets of `0..n` in lexicographic order.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        Combinations { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_lexicographic() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(
            all,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn square_facets() {
        // conv{±e1, ±e2} has facet distance 1/sqrt(2).
        let f = FocusSet::new(vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ])
        .unwrap();
        match min_support_function(&f, &[0, 1]) {
            MinSupport::Value { value, direction } => {
                assert!((value - 0.5f64.sqrt()).abs() < 1e-12);
                assert!((direction[0].abs() - 0.5f64.sqrt()).abs() < 1e-12);
            }
            _ => panic!("expected a value"),
        }
    }

    #[test]
    fn solve_small_system() {
        let x = solve(&[vec![2.0, 1.0], vec![1.0, 3.0]], &[1.0, 1.0]).unwrap();
        assert!((x[0] - 0.4).abs() < 1e-15 && (x[1] - 0.2).abs() < 1e-15);
        assert!(solve(&[vec![1.0, 1.0], vec![2.0, 2.0]], &[1.0, 1.0]).is_none());
    }
}
