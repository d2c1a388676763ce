//! Exact integer combinatorics behind the orthogonality counts.
//!
//! `Z(n, k)` counts the orthogonality conditions satisfied by the k-th
//! function of the second kind, equivalently the number of its zeros in
//! `(a_k, b_k)`. The brute-force enumeration is the oracle; two closed forms
//! (one in terms of the division of `n + p*ell - 1` by `p(p+1)`, one in terms
//! of the division of `n` by `p(p+1)`) must agree with it exactly. Everything
//! here is integer arithmetic with floor semantics toward minus infinity,
//! since the ceiling bound has negative numerators.

/// Quotient/remainder data attached to the index n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexData {
    pub n: i64,
    pub p: i64,
    /// n mod (p+1)
    pub ell: i64,
    /// n mod p
    pub r: i64,
    /// quotient of n + p*ell - 1 by p(p+1)
    pub alpha: i64,
    /// remainder of n + p*ell - 1 by p(p+1)
    pub beta: i64,
    /// quotient of beta by p+1
    pub v: i64,
    /// floor(n / (p(p+1)))
    pub lambda: i64,
    /// auxiliary quotient: floor(n/p) = lambda*(p+1) + q
    pub q: i64,
    /// reduced degree (n - ell) / (p+1)
    pub d: i64,
}

impl IndexData {
    pub fn new(n: usize, p: usize) -> Self {
        let (n, p) = (n as i64, p as i64);
        assert!(p >= 1);
        let ell = n.rem_euclid(p + 1);
        let r = n.rem_euclid(p);
        let m = n + p * ell - 1;
        let alpha = m.div_euclid(p * (p + 1));
        let beta = m - alpha * p * (p + 1);
        let v = beta.div_euclid(p + 1);
        let lambda = n.div_euclid(p * (p + 1));
        let q = n.div_euclid(p) - lambda * (p + 1);
        let d = (n - ell) / (p + 1);
        Self { n, p, ell, r, alpha, beta, v, lambda, q, d }
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    -((-a).div_euclid(b))
}

/// Direct enumeration of the defining double inequality.
pub fn z_bruteforce(n: usize, k: usize, p: usize) -> i64 {
    assert!(k <= p);
    if k == p {
        return 0;
    }
    let idx = IndexData::new(n, p);
    let (n, p) = (n as i64, p as i64);
    let mut total = 0;
    for j in k as i64..p {
        let lo = ceil_div(idx.ell - j, p + 1);
        let hi = (n + p * idx.ell - 1 - j * (p + 1)).div_euclid(p * (p + 1));
        if hi >= lo {
            total += hi - lo + 1;
        }
    }
    total
}

/// Four-case closed form in ceil((n-ell)/(p+1)), alpha, ell, v.
pub fn z_closed_alpha(n: usize, k: usize, p: usize) -> i64 {
    assert!(k <= p);
    if k == p {
        return 0;
    }
    let idx = IndexData::new(n, p);
    let k = k as i64;
    let base = ceil_div(idx.n - idx.ell, idx.p + 1);
    let (ell, v, alpha) = (idx.ell, idx.v, idx.alpha);
    if k <= ell && k <= v {
        base - k * alpha
    } else if ell < k && v < k {
        base - k * alpha + ell - v - 1
    } else if ell < k && k <= v {
        base - k * (alpha + 1) + ell
    } else {
        // v < k <= ell
        base - k * (alpha - 1) - v - 1
    }
}

/// Six-case closed form in floor(n/(p+1)), lambda, ell, r.
pub fn z_closed_lambda(n: usize, k: usize, p: usize) -> i64 {
    assert!(k <= p);
    if k == p {
        return 0;
    }
    let idx = IndexData::new(n, p);
    let k = k as i64;
    let base = idx.n.div_euclid(idx.p + 1);
    let (ell, r, lambda) = (idx.ell, idx.r, idx.lambda);
    if ell <= r {
        if k < ell {
            base - k * lambda
        } else if k < r {
            base - k * (lambda + 1) + ell
        } else {
            base - k * lambda + ell - r
        }
    } else if k < r {
        base - k * (lambda + 1)
    } else if k < ell {
        base - k * lambda - r
    } else {
        base - k * (lambda + 1) + ell - r
    }
}

/// Order of decay of the k-th second-kind function at infinity:
/// `psi_{n,k}(z) = O(z^{-N(n,k)})`.
pub fn decay_order(n: usize, k: usize, p: usize) -> i64 {
    assert!((1..=p).contains(&k));
    let idx = IndexData::new(n, p);
    let z_km1 = z_closed_alpha(n, k - 1, p);
    let z_k = if k == p { 0 } else { z_closed_alpha(n, k, p) };
    z_km1 - z_k + if (k as i64) <= idx.ell { 1 } else { 0 }
}

/// The diagonal-family Hermite-Padé multi-index of norm n.
pub fn hp_multiindex(n: usize, p: usize) -> Vec<i64> {
    (0..p as i64)
        .map(|j| (n as i64 - j - 1).div_euclid(p as i64) + 1)
        .collect()
}

/// Per-j bounds of the reduced orthogonality conditions
/// (tau-exponent runs from `lo` through `hi` against mu_{k,j}).
pub fn condition_bounds(n: usize, j: usize, p: usize) -> (i64, i64) {
    let idx = IndexData::new(n, p);
    let j = j as i64;
    let lo = ceil_div(idx.ell - j, idx.p + 1);
    let hi = (idx.n + idx.p * idx.ell - 1 - j * (idx.p + 1)).div_euclid(idx.p * (idx.p + 1));
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases_by_hand() {
        // p=2, n=5 has ell=2
        assert_eq!(IndexData::new(5, 2).ell, 2);
        assert_eq!(z_bruteforce(5, 0, 2), 1);
        assert_eq!(z_bruteforce(5, 1, 2), 0);
        // p=2, n=30 has ell=0
        assert_eq!(z_bruteforce(30, 0, 2), 10);
        assert_eq!(z_bruteforce(30, 1, 2), 5);
        assert_eq!(z_closed_alpha(30, 1, 2), 5);
        // convention Z(n,p) = 0
        assert_eq!(z_bruteforce(17, 2, 2), 0);
        assert_eq!(z_closed_alpha(17, 2, 2), 0);
    }

    #[test]
    fn closed_forms_match_bruteforce_small() {
        for p in 1..=4 {
            for n in 0..400 {
                for k in 0..=p {
                    let bf = z_bruteforce(n, k, p);
                    assert_eq!(bf, z_closed_alpha(n, k, p), "alpha p={p} n={n} k={k}");
                    assert_eq!(bf, z_closed_lambda(n, k, p), "lambda p={p} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn z_at_zero_is_reduced_degree() {
        for p in 1..=5 {
            for n in 0..300 {
                let idx = IndexData::new(n, p);
                assert_eq!(z_closed_alpha(n, 0, p), idx.d);
            }
        }
    }

    #[test]
    fn z_monotone_and_asymptotic_bound() {
        for p in 1..=4usize {
            for n in 0..2000usize {
                for k in 0..p - 1 {
                    assert!(z_bruteforce(n, k, p) >= z_bruteforce(n, k + 1, p));
                }
                for k in 0..p {
                    let z = z_bruteforce(n, k, p) as f64;
                    let main = (n * (p - k)) as f64 / (p * (p + 1)) as f64;
                    assert!((z - main).abs() <= p as f64 + 2.0, "p={p} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn successive_differences_follow_case_table() {
        for p in 2..=4usize {
            for n in 0..1500usize {
                let idx = IndexData::new(n, p);
                for j in 0..p - 1 {
                    let diff = z_bruteforce(n, j, p) - z_bruteforce(n, j + 1, p);
                    let j = j as i64;
                    let expect_plus_one = if idx.ell <= idx.r {
                        idx.ell <= j && j < idx.r
                    } else {
                        j < idx.r || idx.ell <= j
                    };
                    let expect = idx.lambda + if expect_plus_one { 1 } else { 0 };
                    assert_eq!(diff, expect, "p={p} n={n} j={j}");
                }
            }
        }
    }

    #[test]
    fn shifted_moment_exponent_nonnegative() {
        // the tau-exponent in the recurrence-positivity bookkeeping
        for p in 1..=4usize {
            for n in p..2000usize {
                let k = n % p;
                let idx = IndexData::new(n, p);
                let zk = z_bruteforce(n, k, p);
                let zk1 = z_bruteforce(n, k + 1, p);
                let e = zk - zk1 - if idx.ell == idx.p { 1 } else { 0 };
                assert!(e >= 0, "p={p} n={n} k={k}");
            }
        }
    }

    #[test]
    fn multiindex_values_and_norm() {
        assert_eq!(hp_multiindex(5, 2), vec![3, 2]);
        assert_eq!(hp_multiindex(6, 3), vec![2, 2, 2]);
        for p in 1..=5usize {
            for n in 0..200usize {
                let idx = hp_multiindex(n, p);
                assert_eq!(idx.iter().sum::<i64>(), n as i64);
                for w in idx.windows(2) {
                    assert!(w[0] >= w[1]);
                }
                assert!(idx[p - 1] >= idx[0] - 1);
            }
        }
    }

    #[test]
    fn condition_count_matches_z() {
        for p in 1..=4usize {
            for n in 0..500usize {
                let mut total = 0;
                for j in 0..p {
                    let (lo, hi) = condition_bounds(n, j, p);
                    if hi >= lo {
                        total += hi - lo + 1;
                    }
                }
                assert_eq!(total, z_bruteforce(n, 0, p));
            }
        }
    }
}
