//! Multi-orthogonal polynomials via the reduced polynomial 𝒬_d.
//!
//! The degree-n polynomial factors as `Q_n(z) = z^ℓ 𝒬_d(z^{p+1})` with
//! `n = d(p+1) + ℓ`, and 𝒬_d is pinned down by exactly `d` moment conditions
//! against the top row of the measure hierarchy. The conditions are generated
//! from the integer bounds of the counting machinery (never hand-enumerated),
//! and the unknown is expanded in a shifted Chebyshev basis to postpone
//! Hankel-style ill-conditioning; the monic normalization is restored at the
//! end.

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::indexcomb::{condition_bounds, IndexData};
use crate::poly::{self, MonicPoly};
use crate::star::{Hierarchy, StarSystem};

/// One multi-orthogonal polynomial: the reduced polynomial, its zeros on the
/// segment, and the lift back to the star. `a_n` is filled in later by the
/// recurrence module.
#[derive(Debug, Clone)]
pub struct QnRecord {
    pub n: usize,
    pub ell: usize,
    pub d: usize,
    pub qd: MonicPoly,
    pub segment_zeros: Vec<Float>,
    pub star_zeros: Vec<Complex>,
    pub a_n: Option<Float>,
    /// smallest pivot ratio seen while solving; singularity proxy
    pub pivot_ratio: f64,
}

impl QnRecord {
    /// Coefficients of Q_n itself (degree n, supported on the residue class
    /// of ℓ mod p+1).
    pub fn qn_poly(&self, p: usize) -> MonicPoly {
        let prec = self.qd.prec();
        let mut coeffs = vec![Float::with_val(prec, 0); self.n + 1];
        for (m, c) in self.qd.coeffs.iter().enumerate() {
            coeffs[self.ell + m * (p + 1)] = c.clone();
        }
        MonicPoly::new(coeffs)
    }
}

/// Solve for 𝒬_d at index n. The conditions are
/// `∫ 𝒬_d(τ) τ^s dμ_{0,j}(τ) = 0` with `s` ranging over the per-j bounds of
/// the counting function; their total equals `Z(n,0) = d`. A singular system
/// raises precision once and retries before reporting failure.
pub fn solve_qd(sys: &StarSystem, hier: &Hierarchy, n: usize) -> Result<QnRecord> {
    match solve_qd_at(sys, hier, n, sys.prec) {
        Ok(rec) => Ok(rec),
        Err(Error::NormalityFailure { .. }) => solve_qd_at(sys, hier, n, sys.prec * 2),
        Err(e) => Err(e),
    }
}

fn solve_qd_at(sys: &StarSystem, hier: &Hierarchy, n: usize, prec: u32) -> Result<QnRecord> {
    let p = sys.p;
    let idx = IndexData::new(n, p);
    let ell = idx.ell as usize;
    let d = idx.d as usize;

    let mut conditions: Vec<(usize, i64)> = Vec::new();
    for j in 0..p {
        let (lo, hi) = condition_bounds(n, j, p);
        for s in lo..=hi {
            conditions.push((j, s));
        }
    }
    assert_eq!(conditions.len(), d, "condition count must equal Z(n,0)");

    if d == 0 {
        let qd = MonicPoly::one(prec);
        return finish_record(sys, n, ell, d, qd, 1.0);
    }

    let (a0, b0) = &sys.intervals[0];
    let a0 = Float::with_val(prec, a0);
    let b0 = Float::with_val(prec, b0);
    let half = Float::with_val(prec, &b0 - &a0) / 2u32;
    let mid = Float::with_val(prec, &a0 + &b0) / 2u32;

    // T_d has leading coefficient 2^{d-1} in x = (tau-mid)/half, so the
    // Chebyshev coefficient that makes tau^d monic is 2 (half/2)^d.
    let c_lead = {
        let mut t = Float::with_val(prec, 2);
        let q = Float::with_val(prec, &half / 2u32);
        for _ in 0..d {
            t *= &q;
        }
        t
    };

    // Per j, the exponents lo..hi span τ^{lo} * (polynomials of degree
    // hi-lo); recombining the rows into τ^{lo} T_r((τ-mid)/half) keeps the
    // same solution while taming the conditioning of the monomial ladder.
    let mut matrix: Vec<Vec<Float>> = Vec::with_capacity(d);
    let mut rhs: Vec<Float> = Vec::with_capacity(d);
    for j in 0..p {
        let (lo, hi) = condition_bounds(n, j, p);
        if hi < lo {
            continue;
        }
        let count = (hi - lo + 1) as usize;
        let mu = hier.get(0, j);
        let mut rows = vec![vec![Float::with_val(prec, 0); d]; count];
        let mut rhs_vs = vec![Float::with_val(prec, 0); count];
        for (t, w) in mu.nodes.iter().zip(&mu.weights) {
            let t = Float::with_val(prec, t);
            let x = Float::with_val(prec, &t - &mid) / &half;
            let tv = poly::chebyshev_values(&x, d.max(count - 1));
            let mut ws = Float::with_val(prec, w);
            debug_assert!(lo >= 0);
            for _ in 0..lo {
                ws *= &t;
            }
            for (r, row) in rows.iter_mut().enumerate() {
                let wr = Float::with_val(prec, &ws * &tv[r]);
                for m in 0..d {
                    row[m] += Float::with_val(prec, &wr * &tv[m]);
                }
                rhs_vs[r] -= Float::with_val(prec, &wr * &tv[d]) * &c_lead;
            }
        }
        matrix.extend(rows);
        rhs.extend(rhs_vs);
    }
    debug_assert_eq!(matrix.len(), d);

    let (coeffs_cheb, pivot_ratio) = poly::lu_solve(matrix, rhs);
    let threshold = 2f64.powi(-((prec / 2) as i32));
    if !pivot_ratio.is_finite() || pivot_ratio < threshold {
        return Err(Error::NormalityFailure { n, pivot_ratio, prec });
    }

    // Chebyshev in x back to monomials in x, then substitute x = (tau-mid)/half
    let cheb_rows = poly::chebyshev_monomial_coeffs(prec, d);
    let mut mono_x = vec![Float::with_val(prec, 0); d + 1];
    for (m, c) in coeffs_cheb.iter().chain(std::iter::once(&c_lead)).enumerate() {
        for (i, cc) in cheb_rows[m].iter().enumerate() {
            mono_x[i] += Float::with_val(prec, c * cc);
        }
    }
    let mut qd_coeffs = vec![Float::with_val(prec, 0); d + 1];
    let mut basis = vec![Float::with_val(prec, 1)];
    for (i, cx) in mono_x.iter().enumerate() {
        for (k, bc) in basis.iter().enumerate() {
            qd_coeffs[k] += Float::with_val(prec, cx * bc);
        }
        if i < d {
            let mut next = vec![Float::with_val(prec, 0); basis.len() + 1];
            for (k, bc) in basis.iter().enumerate() {
                next[k + 1] += Float::with_val(prec, bc / &half);
                next[k] -= Float::with_val(prec, bc * &mid) / &half;
            }
            basis = next;
        }
    }
    let lead = qd_coeffs[d].clone();
    let dev = Float::with_val(prec, &lead - 1u32).abs().to_f64();
    if dev > 1e-10 {
        return Err(Error::StructuralFailure(format!(
            "leading coefficient of Q_d deviates from 1 by {dev:e} at n={n}"
        )));
    }
    for c in qd_coeffs.iter_mut() {
        *c /= &lead;
    }
    let qd = MonicPoly::new(qd_coeffs);

    // residual audit of every imposed condition
    let mut worst = 0f64;
    for &(j, s) in &conditions {
        let mu = hier.get(0, j);
        let mut acc = Float::with_val(prec, 0);
        let mut scale = Float::with_val(prec, 0);
        for (t, w) in mu.nodes.iter().zip(&mu.weights) {
            let mut term = Float::with_val(prec, w * qd.eval(t));
            for _ in 0..s {
                term *= t;
            }
            scale += term.clone().abs();
            acc += term;
        }
        if scale == 0 {
            continue;
        }
        let rel = (acc / scale).abs().to_f64();
        if rel > worst {
            worst = rel;
        }
    }
    let tol = 10f64.powf(-(0.3 * prec as f64 / 2.0));
    if worst > tol {
        return Err(Error::StructuralFailure(format!(
            "orthogonality residual {worst:e} above {tol:e} at n={n}"
        )));
    }

    finish_record(sys, n, ell, d, qd, pivot_ratio)
}

fn finish_record(
    sys: &StarSystem,
    n: usize,
    ell: usize,
    d: usize,
    qd: MonicPoly,
    pivot_ratio: f64,
) -> Result<QnRecord> {
    let mut rec = QnRecord {
        n,
        ell,
        d,
        qd,
        segment_zeros: Vec::new(),
        star_zeros: Vec::new(),
        a_n: None,
        pivot_ratio,
    };
    rec.segment_zeros = zeros_segment(sys, &rec)?;
    rec.star_zeros = lift_to_star(sys, &rec);
    Ok(rec)
}

/// All d roots of 𝒬_d: real, simple, strictly inside (a_0, b_0), ascending.
pub fn zeros_segment(sys: &StarSystem, rec: &QnRecord) -> Result<Vec<Float>> {
    let prec = rec.qd.prec();
    let (a0, b0) = &sys.intervals[0];
    let a0 = Float::with_val(prec, a0);
    let b0 = Float::with_val(prec, b0);
    let dq = rec.qd.derivative();
    poly::find_simple_roots(
        |x| rec.qd.eval(x),
        |x| dq.eval(x),
        &a0,
        &b0,
        rec.d,
        &format!("Q_d zeros at n={}", rec.n),
    )
}

/// Star zeros of Q_n: the origin with multiplicity ℓ plus the p+1 complex
/// (p+1)-th roots of every segment zero.
pub fn lift_to_star(sys: &StarSystem, rec: &QnRecord) -> Vec<Complex> {
    let prec = rec.qd.prec();
    let p1 = sys.p as u32 + 1;
    let mut zeros = Vec::with_capacity(rec.n);
    for _ in 0..rec.ell {
        zeros.push(Complex::with_val(prec, (0, 0)));
    }
    for tau in &rec.segment_zeros {
        // segment zeros live in (a_0, b_0) ⊆ (0, ∞)
        let r = tau.clone().root(p1);
        for m in 0..p1 {
            let z = Complex::with_val(prec, (&r, Float::with_val(prec, 0)))
                * sys.omega_pow(m as i64);
            zeros.push(z);
        }
    }
    zeros
}

/// Report row of the normality sweep.
#[derive(Debug, Clone)]
pub struct NormalityRow {
    pub n: usize,
    pub d: usize,
    pub pivot_ratio: f64,
}

/// For every n <= n_max: the orthogonality system is nonsingular, deg Q_n = n,
/// and 𝒬_d has d simple zeros inside the first interval.
pub fn check_normality(
    sys: &StarSystem,
    hier: &Hierarchy,
    n_max: usize,
) -> Result<Vec<NormalityRow>> {
    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let rec = solve_qd(sys, hier, n)?;
        if rec.segment_zeros.len() != rec.d {
            return Err(Error::StructuralFailure(format!(
                "zero extraction failed at n={n}: got {} of {}",
                rec.segment_zeros.len(),
                rec.d
            )));
        }
        rows.push(NormalityRow { n, d: rec.d, pivot_ratio: rec.pivot_ratio });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::star::{build_mu_hierarchy, validate_system, DensitySpec};

    fn fl(prec: u32, x: f64) -> Float {
        Float::with_val(prec, x)
    }

    fn lebesgue_p1(prec: u32) -> (StarSystem, Hierarchy) {
        let sys = validate_system(StarSystem::new(
            1,
            vec![(fl(prec, 0.0), fl(prec, 1.0))],
            vec![DensitySpec::Power { gamma: fl(prec, 0.0) }],
            prec,
        ))
        .unwrap();
        let h = build_mu_hierarchy(&sys, 48).unwrap();
        (sys, h)
    }

    #[test]
    fn trivial_monomials_below_p() {
        let prec = 256;
        let (sys, h) = lebesgue_p1(prec);
        for n in 0..=1usize {
            let rec = solve_qd(&sys, &h, n).unwrap();
            assert_eq!(rec.d, 0);
            assert_eq!(rec.ell, n);
            assert_eq!(rec.qd.degree(), 0);
            assert_eq!(rec.qd.coeffs[0], 1);
        }
    }

    #[test]
    fn p1_lebesgue_segment_gives_shifted_legendre() {
        let prec = 256;
        let (sys, h) = lebesgue_p1(prec);
        // n = 4 (p=1): ell=0, d=2, conditions are plain orthogonality against
        // Lebesgue on [0,1], so Q_d is the monic shifted Legendre of degree 2
        let rec = solve_qd(&sys, &h, 4).unwrap();
        assert_eq!(rec.d, 2);
        let expect = [1.0 / 6.0, -1.0, 1.0];
        for (c, e) in rec.qd.coeffs.iter().zip(expect) {
            assert!((c.to_f64() - e).abs() < 1e-60, "coeff {c} vs {e}");
        }
        let root = 0.5 - 1.0 / (2.0 * 3.0f64.sqrt());
        assert!((rec.segment_zeros[0].to_f64() - root).abs() < 1e-60);
        assert!((rec.segment_zeros[1].to_f64() - (1.0 - root)).abs() < 1e-60);
    }

    #[test]
    fn degree_one_root_is_weighted_mean() {
        let prec = 256;
        let (sys, h) = lebesgue_p1(prec);
        let rec = solve_qd(&sys, &h, 3).unwrap();
        assert_eq!(rec.d, 1);
        let mu = h.get(0, 0);
        let (lo, hi) = crate::indexcomb::condition_bounds(3, 0, 1);
        assert_eq!(lo, hi);
        let s = lo as u32;
        let r = mu.moment(s + 1) / mu.moment(s);
        assert!((rec.segment_zeros[0].to_f64() - r.to_f64()).abs() < 1e-60);
    }

    #[test]
    fn star_lift_counts_and_rays() {
        let prec = 256;
        let sys = validate_system(StarSystem::new(
            2,
            vec![(fl(prec, 0.0), fl(prec, 1.0)), (fl(prec, -2.0), fl(prec, -1.0))],
            vec![
                DensitySpec::Power { gamma: fl(prec, 2.0) },
                DensitySpec::Power { gamma: fl(prec, 2.0) },
            ],
            prec,
        ))
        .unwrap();
        let h = build_mu_hierarchy(&sys, 48).unwrap();
        let rec = solve_qd(&sys, &h, 8).unwrap(); // ell=2, d=2
        assert_eq!(rec.ell, 2);
        assert_eq!(rec.star_zeros.len(), 8);
        for z in rec.star_zeros.iter().skip(rec.ell) {
            let z3 = crate::star::complex_pow(z, 3);
            assert!(z3.imag().to_f64().abs() < 1e-50);
            let re = z3.real().to_f64();
            assert!(re > 0.0 && re < 1.0);
        }
    }

    #[test]
    fn gram_oracle_matches_for_small_degrees() {
        // monomial-basis solve from raw moments must agree at full precision
        let prec = 320;
        let (sys, h) = lebesgue_p1(prec);
        for n in [4usize, 6, 8] {
            let rec = solve_qd(&sys, &h, n).unwrap();
            let d = rec.d;
            let mu = h.get(0, 0);
            let mut mat = Vec::new();
            let mut rhs = Vec::new();
            for s in 0..d as u32 {
                let mut row = Vec::new();
                for m in 0..d as u32 {
                    row.push(mu.moment(s + m));
                }
                rhs.push(-mu.moment(s + d as u32));
                mat.push(row);
            }
            let (coef, _) = poly::lu_solve(mat, rhs);
            for (m, c) in coef.iter().enumerate() {
                let diff = Float::with_val(prec, c - &rec.qd.coeffs[m]).abs();
                assert!(diff.to_f64() < 1e-55, "n={n} m={m} diff={diff}");
            }
        }
    }

    #[test]
    fn normality_sweep_small() {
        let prec = 256;
        let (sys, h) = lebesgue_p1(prec);
        let rows = check_normality(&sys, &h, 12).unwrap();
        assert_eq!(rows.len(), 13);
        assert!(rows.iter().all(|r| r.pivot_ratio > 1e-30));
    }
}
