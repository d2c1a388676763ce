//! The order-(p+1) three-term recurrence `z Q_n = Q_{n+1} + a_n Q_{n-p}`:
//! coefficient extraction, polynomial generation, banded-Hessenberg
//! cross-checks, and the per-ray interlacing test.

use std::collections::BTreeMap;

use rug::Float;

use crate::error::{Error, Result};
use crate::poly::{self, MonicPoly};

/// Extracted recurrence data: `a[n]` for n >= p plus the defect norms seen
/// during extraction.
#[derive(Debug, Clone, Default)]
pub struct RecurrenceSequence {
    pub p: usize,
    pub a: BTreeMap<usize, Float>,
    pub residuals: BTreeMap<usize, f64>,
}

/// Read a_n from monic Q_{n+1}, Q_n, Q_{n-p}. The coefficient of z^{n-p} in
/// `z Q_n - Q_{n+1}` is a_n; the returned residual is the max-norm of
/// `z Q_n - Q_{n+1} - a_n Q_{n-p}` relative to the largest coefficient of the
/// minuend, so drift from a genuine recurrence stays visible.
pub fn extract_an(
    qnp1: &MonicPoly,
    qn: &MonicPoly,
    qnmp: &MonicPoly,
    p: usize,
) -> Result<(Float, Float)> {
    let n = qn.degree();
    if qnp1.degree() != n + 1 || qnmp.degree() + p != n {
        return Err(Error::StructuralFailure(format!(
            "degree mismatch in recurrence extraction: {} / {} / {}",
            qnp1.degree(),
            n,
            qnmp.degree()
        )));
    }
    let prec = qn.prec();
    let r = qn.shift_up().sub(qnp1);
    let a_n = r.coeffs[n - p].clone();
    let defect = r.sub(&qnmp.scale(&a_n));
    let scale = {
        let s = qn.max_coeff_abs().max(&qnp1.max_coeff_abs());
        if s == 0 {
            Float::with_val(prec, 1)
        } else {
            s
        }
    };
    let residual = defect.max_coeff_abs() / scale;
    Ok((a_n, residual))
}

/// Generate Q_0..Q_N from the initial monomials and a coefficient slice
/// (`a[i]` is the coefficient a_{p+i}).
pub fn generate_by_recurrence(prec: u32, p: usize, a: &[Float], n_max: usize) -> Vec<MonicPoly> {
    let mut out: Vec<MonicPoly> = Vec::with_capacity(n_max + 1);
    for ell in 0..=p.min(n_max) {
        out.push(MonicPoly::monomial(prec, ell));
    }
    for n in p..n_max {
        let an = &a[n - p];
        let next = out[n].shift_up().sub(&out[n - p].scale(an));
        out.push(next);
    }
    out
}

/// Leading n x n truncation of the (p+2)-banded Hessenberg operator: ones on
/// the superdiagonal, the a-sequence on subdiagonal p. The characteristic
/// polynomial is computed independently of the recurrence, by determinant
/// evaluation at n+1 Chebyshev points and Newton interpolation at working
/// precision.
pub fn hessenberg_truncation(
    prec: u32,
    p: usize,
    a: &[Float],
    n: usize,
) -> (Vec<Vec<Float>>, MonicPoly) {
    let mut h = vec![vec![Float::with_val(prec, 0); n]; n];
    for i in 0..n.saturating_sub(1) {
        h[i][i + 1] = Float::with_val(prec, 1);
    }
    for i in 0..n.saturating_sub(p) {
        h[p + i][i] = a[i].clone();
    }

    // evaluation scale comfortably covering the spectrum
    let mut amax = 1f64;
    for v in a.iter().take(n.saturating_sub(p)) {
        amax = amax.max(v.to_f64().abs());
    }
    let radius = 2.0 * (1.0 + amax.powf(1.0 / (p as f64 + 1.0)));

    let mut points = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / (n as f64 + 1.0);
        let z = Float::with_val(prec, radius * theta.cos());
        let mut m = vec![vec![Float::with_val(prec, 0); n]; n];
        for (r, row) in h.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                m[r][c] = if r == c {
                    Float::with_val(prec, &z - v)
                } else {
                    Float::with_val(prec, -v)
                };
            }
        }
        values.push(poly::lu_det(m));
        points.push(z);
    }
    let coeffs = poly::interpolate(&points, &values);
    (h, MonicPoly::new(coeffs))
}

/// Strict per-ray interlacing of the nonzero roots of Q_n and Q_{n+1}
/// (equivalently of the segment zeros, since the (p+1)-th root map is
/// monotone on each ray). The origin zeros are excluded.
pub fn interlacing_check(zeros_n: &[Float], zeros_np1: &[Float]) -> bool {
    let (na, nb) = (zeros_n.len(), zeros_np1.len());
    if na == 0 || nb == 0 {
        return true; // vacuous
    }
    if na.abs_diff(nb) > 1 {
        return false;
    }
    // merge and require strict alternation of provenance
    let mut tagged: Vec<(&Float, u8)> = zeros_n.iter().map(|z| (z, 0u8)).collect();
    tagged.extend(zeros_np1.iter().map(|z| (z, 1u8)));
    tagged.sort_by(|x, y| x.0.partial_cmp(y.0).unwrap());
    for w in tagged.windows(2) {
        if w[0].0 == w[1].0 || w[0].1 == w[1].1 {
            return false;
        }
    }
    true
}

/// Largest coefficient magnitude outside the residue class `ell mod (p+1)`;
/// exact zero for polynomials obeying the rotational symmetry.
pub fn sparsity_defect(q: &MonicPoly, ell: usize, p: usize) -> Float {
    let prec = q.prec();
    let mut worst = Float::with_val(prec, 0);
    for (i, c) in q.coeffs.iter().enumerate() {
        if i % (p + 1) != ell % (p + 1) {
            let a = c.clone().abs();
            if a > worst {
                worst = a;
            }
        }
    }
    worst
}
