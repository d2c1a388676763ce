//! Gauss quadrature rules at extended precision.
//!
//! Nodes are the eigenvalues of the Jacobi matrix of the weight's monic
//! recurrence. Double-precision Sturm bisection seeds the nodes, Newton's
//! method on the degree-N recurrence polynomial polishes them at working
//! precision, and weights come from the orthonormal-sum formula. Recurrence
//! coefficients are closed-form for Jacobi-type weights and are produced by a
//! discretized Stieltjes procedure for smooth weights.

use rug::ops::Pow;
use rug::Float;

/// Monic three-term recurrence of an orthogonal family:
/// `p_{k+1} = (x - alpha[k]) p_k - beta[k] p_{k-1}` with `beta[0]` set to the
/// total mass of the weight.
pub struct Recurrence {
    pub alpha: Vec<Float>,
    pub beta: Vec<Float>,
}

/// Eigenvalues of a symmetric tridiagonal matrix by Sturm-sequence bisection.
/// Plain `f64`; used only to seed Newton.
fn tridiag_eigenvalues_f64(d: &[f64], e: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { e[i - 1].abs() } else { 0.0 };
        let right = if i < n - 1 { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - left - right);
        hi = hi.max(d[i] + left + right);
    }
    let span = (hi - lo).max(1e-300);
    lo -= 1e-12 * span;
    hi += 1e-12 * span;

    // number of eigenvalues strictly below x (LDL^T pivot signs)
    let count_below = |x: f64| -> usize {
        let mut cnt = 0;
        let mut q = 1.0f64;
        for i in 0..n {
            let off = if i > 0 { e[i - 1] * e[i - 1] / q } else { 0.0 };
            q = d[i] - x - off;
            if q == 0.0 {
                q = -1e-300;
            }
            if q < 0.0 {
                cnt += 1;
            }
        }
        cnt
    };

    (0..n)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if count_below(mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Evaluate the monic recurrence polynomial p_n and its derivative at x.
fn eval_pn(rec: &Recurrence, n: usize, x: &Float) -> (Float, Float) {
    let prec = x.prec();
    let mut p_prev = Float::with_val(prec, 1);
    let mut p = Float::with_val(prec, x - &rec.alpha[0]);
    let mut dp_prev = Float::with_val(prec, 0);
    let mut dp = Float::with_val(prec, 1);
    if n == 0 {
        return (p_prev, dp_prev);
    }
    for k in 1..n {
        let xm = Float::with_val(prec, x - &rec.alpha[k]);
        let p_next =
            Float::with_val(prec, &xm * &p) - Float::with_val(prec, &rec.beta[k] * &p_prev);
        let dp_next = p.clone() + Float::with_val(prec, &xm * &dp)
            - Float::with_val(prec, &rec.beta[k] * &dp_prev);
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp)
}

/// Gauss nodes and weights of order `n` for the weight encoded by `rec`.
pub fn gauss_from_recurrence(rec: &Recurrence, n: usize, prec: u32) -> (Vec<Float>, Vec<Float>) {
    assert!(n >= 1 && rec.alpha.len() >= n && rec.beta.len() >= n);
    let d: Vec<f64> = rec.alpha[..n].iter().map(|a| a.to_f64()).collect();
    let e: Vec<f64> = rec.beta[1..n].iter().map(|b| b.to_f64().sqrt()).collect();
    let guesses = tridiag_eigenvalues_f64(&d, &e);

    let mut nodes = Vec::with_capacity(n);
    for g in guesses {
        let mut x = Float::with_val(prec, g);
        let scale = x.clone().abs() + Float::with_val(prec, 1);
        let tol = scale >> (prec - 8);
        for _ in 0..48 {
            let (p, dp) = eval_pn(rec, n, &x);
            if dp == 0 {
                break;
            }
            let step = Float::with_val(prec, &p / &dp);
            let done = step.clone().abs() < tol;
            x -= step;
            if done {
                break;
            }
        }
        nodes.push(x);
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in nodes.windows(2) {
        assert!(w[0] < w[1], "gauss nodes collided");
    }

    let mut weights = Vec::with_capacity(n);
    for x in &nodes {
        // lambda = 1 / sum_k q_k(x)^2 with q_k orthonormal
        let mut q_prev = Float::with_val(prec, 0);
        let mut q = Float::with_val(prec, 1) / rec.beta[0].clone().sqrt();
        let mut sum = q.clone().square();
        for k in 0..n - 1 {
            let sb_next = rec.beta[k + 1].clone().sqrt();
            let t = Float::with_val(prec, x - &rec.alpha[k]);
            let q_next = (Float::with_val(prec, &t * &q)
                - Float::with_val(prec, rec.beta[k].clone().sqrt() * &q_prev))
                / &sb_next;
            q_prev = q;
            q = q_next;
            sum += q.clone().square();
        }
        weights.push(Float::with_val(prec, 1) / sum);
    }
    (nodes, weights)
}

/// Monic recurrence coefficients for the Jacobi weight `(1-x)^a (1+x)^b` on
/// `[-1, 1]`.
pub fn jacobi_recurrence(a: &Float, b: &Float, n: usize, prec: u32) -> Recurrence {
    let one = Float::with_val(prec, 1);
    let two = Float::with_val(prec, 2);
    let apb = Float::with_val(prec, a + b);

    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);

    // beta_0 = 2^(a+b+1) Gamma(a+1) Gamma(b+1) / Gamma(a+b+2)
    let ga = Float::with_val(prec, a + &one).gamma();
    let gb = Float::with_val(prec, b + &one).gamma();
    let gab = Float::with_val(prec, &apb + &two).gamma();
    let b0 = two.clone().pow(Float::with_val(prec, &apb + &one)) * ga * gb / gab;
    beta.push(b0);

    let bma = Float::with_val(prec, b - a);
    let bbaa = Float::with_val(prec, &bma * &apb);
    alpha.push(Float::with_val(prec, &bma / Float::with_val(prec, &apb + &two)));

    for k in 1..n {
        let kk = Float::with_val(prec, k as u32);
        let s = Float::with_val(prec, &kk * 2u32) + &apb;
        let den = Float::with_val(prec, &s * Float::with_val(prec, &s + &two));
        alpha.push(Float::with_val(prec, &bbaa / &den));

        if k == 1 {
            // cancelled form, safe when a + b + 1 = 0
            let num = Float::with_val(prec, 4 * Float::with_val(prec, a + &one))
                * Float::with_val(prec, b + &one);
            let d1 = Float::with_val(prec, &apb + &two).square();
            let d2 = Float::with_val(prec, &apb + Float::with_val(prec, 3));
            beta.push(num / (d1 * d2));
        } else {
            let num = Float::with_val(prec, 4 * &kk)
                * Float::with_val(prec, &kk + a)
                * Float::with_val(prec, &kk + b)
                * Float::with_val(prec, &kk + &apb);
            let den = s.clone().square()
                * Float::with_val(prec, &s + &one)
                * Float::with_val(prec, &s - &one);
            beta.push(num / den);
        }
    }
    Recurrence { alpha, beta }
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize, prec: u32) -> (Vec<Float>, Vec<Float>) {
    let zero = Float::with_val(prec, 0);
    let rec = jacobi_recurrence(&zero, &zero, n, prec);
    gauss_from_recurrence(&rec, n, prec)
}

/// Affine image of a rule from `[-1, 1]` onto `[a, b]`; weights scale by the
/// Jacobian `(b-a)/2`.
pub fn map_to_interval(
    nodes: &[Float],
    weights: &[Float],
    a: &Float,
    b: &Float,
) -> (Vec<Float>, Vec<Float>) {
    let prec = a.prec();
    let half = Float::with_val(prec, b - a) / 2u32;
    let mid = Float::with_val(prec, a + b) / 2u32;
    let mapped_nodes = nodes
        .iter()
        .map(|x| Float::with_val(prec, &mid + Float::with_val(prec, &half * x)))
        .collect();
    let mapped_weights = weights
        .iter()
        .map(|w| Float::with_val(prec, w * &half))
        .collect();
    (mapped_nodes, mapped_weights)
}

/// Discretized Stieltjes procedure: monic recurrence coefficients of the
/// absolutely continuous weight `w` on `[a, b]`, sampled on a high-order
/// Gauss-Legendre rule. Intended for weights analytic on the closed interval.
pub fn stieltjes_recurrence<W>(w: W, a: &Float, b: &Float, n: usize, prec: u32) -> Recurrence
where
    W: Fn(&Float) -> Float,
{
    let base_order = 2 * n + 40;
    let (x01, w01) = gauss_legendre(base_order, prec);
    let (xs, ws) = map_to_interval(&x01, &w01, a, b);
    let wx: Vec<Float> = xs
        .iter()
        .zip(&ws)
        .map(|(x, wt)| Float::with_val(prec, wt * w(x)))
        .collect();

    let m = xs.len();
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut p_prev = vec![Float::with_val(prec, 0); m];
    let mut p = vec![Float::with_val(prec, 1); m];
    let mut norm_prev = Float::with_val(prec, 0);
    for k in 0..n {
        let mut norm = Float::with_val(prec, 0);
        let mut xmom = Float::with_val(prec, 0);
        for i in 0..m {
            let pw = Float::with_val(prec, &p[i] * &p[i]);
            let t = Float::with_val(prec, &pw * &wx[i]);
            xmom += Float::with_val(prec, &t * &xs[i]);
            norm += t;
        }
        alpha.push(Float::with_val(prec, &xmom / &norm));
        if k == 0 {
            beta.push(norm.clone());
        } else {
            beta.push(Float::with_val(prec, &norm / &norm_prev));
        }
        // advance: p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1}
        let bk = if k == 0 {
            Float::with_val(prec, 0)
        } else {
            beta[k].clone()
        };
        let mut p_next = Vec::with_capacity(m);
        for i in 0..m {
            let t = Float::with_val(prec, &xs[i] - &alpha[k]);
            let v = Float::with_val(prec, &t * &p[i]) - Float::with_val(prec, &bk * &p_prev[i]);
            p_next.push(v);
        }
        p_prev = std::mem::take(&mut p);
        p = p_next;
        norm_prev = norm;
    }
    Recurrence { alpha, beta }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_exactness() {
        let prec = 256;
        let (xs, ws) = gauss_legendre(6, prec);
        // integrate x^10 on [-1,1]: 2/11
        let mut acc = Float::with_val(prec, 0);
        for (x, w) in xs.iter().zip(&ws) {
            acc += Float::with_val(prec, w * &x.clone().pow(10u32));
        }
        let expect = Float::with_val(prec, 2) / 11u32;
        let err = Float::with_val(prec, &acc - &expect).abs().to_f64();
        assert!(err < 1e-70, "err = {err:e}");
    }

    #[test]
    fn chebyshev_weight_mass_is_pi() {
        let prec = 256;
        let half = Float::with_val(prec, -0.5);
        let rec = jacobi_recurrence(&half, &half, 8, prec);
        let (_, ws) = gauss_from_recurrence(&rec, 8, prec);
        let mut mass = Float::with_val(prec, 0);
        for w in &ws {
            mass += w;
        }
        let pi = Float::with_val(prec, rug::float::Constant::Pi);
        let err = Float::with_val(prec, &mass - &pi).abs().to_f64();
        assert!(err < 1e-70, "err = {err:e}");
    }

    #[test]
    fn stieltjes_matches_moments_for_power_weight() {
        let prec = 256;
        // weight x^2 on [1, 2] is analytic on the interval
        let a = Float::with_val(prec, 1);
        let b = Float::with_val(prec, 2);
        let rec = stieltjes_recurrence(|x: &Float| x.clone().square(), &a, &b, 8, prec);
        let (xs, ws) = gauss_from_recurrence(&rec, 8, prec);
        // moment \int_1^2 x^2 * x dx = 15/4
        let mut acc = Float::with_val(prec, 0);
        for (x, w) in xs.iter().zip(&ws) {
            acc += Float::with_val(prec, w * x);
        }
        let expect = Float::with_val(prec, 15) / 4u32;
        let err = Float::with_val(prec, &acc - &expect).abs().to_f64();
        assert!(err < 1e-70, "err = {err:e}");
    }
}
