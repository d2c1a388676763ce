//! Dense polynomials with extended-precision coefficients, plus the small
//! linear-algebra and root-finding kernels shared by the other modules.

use rug::{Complex, Float};

use crate::error::{Error, Result};

/// Polynomial with ascending real coefficients at a fixed binary precision.
///
/// `MonicPoly` is used for every polynomial in the crate; the leading
/// coefficient is exactly 1 for the multi-orthogonal family, but the type also
/// carries non-monic polynomials (Hermite-Padé numerators, residuals) where
/// the name is only historical baggage of the dominant use.
#[derive(Debug, Clone)]
pub struct MonicPoly {
    pub coeffs: Vec<Float>,
}

impl MonicPoly {
    pub fn new(coeffs: Vec<Float>) -> Self {
        assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn zero(prec: u32) -> Self {
        Self::new(vec![Float::with_val(prec, 0)])
    }

    pub fn one(prec: u32) -> Self {
        Self::new(vec![Float::with_val(prec, 1)])
    }

    /// x^k
    pub fn monomial(prec: u32, k: usize) -> Self {
        let mut coeffs = vec![Float::with_val(prec, 0); k + 1];
        coeffs[k] = Float::with_val(prec, 1);
        Self::new(coeffs)
    }

    pub fn prec(&self) -> u32 {
        self.coeffs[0].prec()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(prec: u32, roots: &[Float]) -> Self {
        let mut coeffs = vec![Float::with_val(prec, 1)];
        for r in roots {
            let mut next = vec![Float::with_val(prec, 0); coeffs.len() + 1];
            for (i, c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= Float::with_val(prec, c * r);
            }
            coeffs = next;
        }
        coeffs.reverse();
        Self::new(coeffs)
    }

    pub fn eval(&self, x: &Float) -> Float {
        let prec = self.prec();
        let mut acc = Float::with_val(prec, 0);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_complex(&self, z: &Complex) -> Complex {
        let prec = z.prec().0;
        let mut acc = Complex::with_val(prec, (0, 0));
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> MonicPoly {
        let prec = self.prec();
        if self.coeffs.len() == 1 {
            return MonicPoly::zero(prec);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| Float::with_val(prec, c * i as u32))
            .collect();
        MonicPoly::new(coeffs)
    }

    /// z * self
    pub fn shift_up(&self) -> MonicPoly {
        let prec = self.prec();
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(Float::with_val(prec, 0));
        coeffs.extend(self.coeffs.iter().cloned());
        MonicPoly::new(coeffs)
    }

    pub fn sub(&self, other: &MonicPoly) -> MonicPoly {
        let prec = self.prec();
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![Float::with_val(prec, 0); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] -= c;
        }
        MonicPoly::new(coeffs)
    }

    pub fn scale(&self, s: &Float) -> MonicPoly {
        let prec = self.prec();
        MonicPoly::new(
            self.coeffs
                .iter()
                .map(|c| Float::with_val(prec, c * s))
                .collect(),
        )
    }

    pub fn max_coeff_abs(&self) -> Float {
        let prec = self.prec();
        let mut m = Float::with_val(prec, 0);
        for c in &self.coeffs {
            let a = c.clone().abs();
            if a > m {
                m = a;
            }
        }
        m
    }

    /// Largest |difference| of coefficients, padding with zeros.
    pub fn coeff_distance(&self, other: &MonicPoly) -> Float {
        self.sub(other).max_coeff_abs()
    }
}

/// Modulus of a complex value as a `Float`.
pub fn cabs(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

/// First-kind Chebyshev values T_0(x), ..., T_m(x).
pub fn chebyshev_values(x: &Float, m: usize) -> Vec<Float> {
    let prec = x.prec();
    let mut vals = Vec::with_capacity(m + 1);
    vals.push(Float::with_val(prec, 1));
    if m == 0 {
        return vals;
    }
    vals.push(x.clone());
    for k in 2..=m {
        let t = Float::with_val(prec, x * &vals[k - 1]) * 2u32 - &vals[k - 2];
        vals.push(t);
    }
    vals
}

/// Coefficients of T_k as monomials, for converting Chebyshev expansions on a
/// mapped interval back to the monomial basis.
pub fn chebyshev_monomial_coeffs(prec: u32, m: usize) -> Vec<Vec<Float>> {
    let mut rows: Vec<Vec<Float>> = Vec::with_capacity(m + 1);
    rows.push(vec![Float::with_val(prec, 1)]);
    if m >= 1 {
        rows.push(vec![Float::with_val(prec, 0), Float::with_val(prec, 1)]);
    }
    for k in 2..=m {
        let mut next = vec![Float::with_val(prec, 0); k + 1];
        for (i, c) in rows[k - 1].iter().enumerate() {
            next[i + 1] += Float::with_val(prec, 2 * c);
        }
        for (i, c) in rows[k - 2].iter().enumerate() {
            next[i] -= c;
        }
        rows.push(next);
    }
    rows
}

/// Solve A x = b by partial-pivot LU, destroying the inputs.
///
/// Returns `(x, pivot_ratio)` where `pivot_ratio` is the smallest pivot
/// magnitude relative to the largest initial row norm; callers use it as a
/// singularity proxy.
pub fn lu_solve(mut a: Vec<Vec<Float>>, mut b: Vec<Float>) -> (Vec<Float>, f64) {
    let n = a.len();
    if n == 0 {
        return (Vec::new(), 1.0);
    }
    let prec = b[0].prec();
    let mut scale = Float::with_val(prec, 0);
    for row in &a {
        for c in row {
            let v = c.clone().abs();
            if v > scale {
                scale = v;
            }
        }
    }
    if scale == 0 {
        return (b, 0.0);
    }
    let mut min_ratio = f64::INFINITY;
    for col in 0..n {
        let mut best = col;
        let mut best_mag = a[col][col].clone().abs();
        for row in col + 1..n {
            let mag = a[row][col].clone().abs();
            if mag > best_mag {
                best_mag = mag;
                best = row;
            }
        }
        a.swap(col, best);
        b.swap(col, best);
        let ratio = Float::with_val(prec, &best_mag / &scale).to_f64();
        if ratio < min_ratio {
            min_ratio = ratio;
        }
        if best_mag == 0 {
            return (b, 0.0);
        }
        let pivot = a[col][col].clone();
        for row in col + 1..n {
            let factor = Float::with_val(prec, &a[row][col] / &pivot);
            if factor == 0 {
                continue;
            }
            for k in col..n {
                let t = Float::with_val(prec, &factor * &a[col][k]);
                a[row][k] -= t;
            }
            let t = Float::with_val(prec, &factor * &b[col]);
            b[row] -= t;
        }
    }
    let mut x = vec![Float::with_val(prec, 0); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc -= Float::with_val(prec, &a[row][k] * &x[k]);
        }
        x[row] = acc / &a[row][row];
    }
    (x, min_ratio)
}

/// Determinant by partial-pivot LU.
pub fn lu_det(mut a: Vec<Vec<Float>>) -> Float {
    let n = a.len();
    let prec = a[0][0].prec();
    let mut det = Float::with_val(prec, 1);
    for col in 0..n {
        let mut best = col;
        let mut best_mag = a[col][col].clone().abs();
        for row in col + 1..n {
            let mag = a[row][col].clone().abs();
            if mag > best_mag {
                best_mag = mag;
                best = row;
            }
        }
        if best != col {
            a.swap(col, best);
            det = -det;
        }
        if best_mag == 0 {
            return Float::with_val(prec, 0);
        }
        let pivot = a[col][col].clone();
        det *= &pivot;
        for row in col + 1..n {
            let factor = Float::with_val(prec, &a[row][col] / &pivot);
            if factor == 0 {
                continue;
            }
            for k in col..n {
                let t = Float::with_val(prec, &factor * &a[col][k]);
                a[row][k] -= t;
            }
        }
    }
    det
}

/// Newton-form interpolation through `(points[i], values[i])`, returned as
/// monomial coefficients.
pub fn interpolate(points: &[Float], values: &[Float]) -> Vec<Float> {
    let n = points.len();
    let prec = points[0].prec();
    // divided differences
    let mut dd: Vec<Float> = values.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            let num = Float::with_val(prec, &dd[i] - &dd[i - 1]);
            let den = Float::with_val(prec, &points[i] - &points[i - level]);
            dd[i] = num / den;
        }
    }
    // expand the Newton form
    let mut coeffs = vec![Float::with_val(prec, 0); n];
    let mut basis = vec![Float::with_val(prec, 0); n];
    basis[0] = Float::with_val(prec, 1);
    let mut basis_len = 1;
    coeffs[0] = dd[0].clone();
    for i in 1..n {
        // basis *= (x - points[i-1])
        let mut next = vec![Float::with_val(prec, 0); basis_len + 1];
        for k in 0..basis_len {
            next[k + 1] += &basis[k];
            next[k] -= Float::with_val(prec, &basis[k] * &points[i - 1]);
        }
        basis_len += 1;
        basis[..basis_len].clone_from_slice(&next);
        for k in 0..basis_len {
            coeffs[k] += Float::with_val(prec, &dd[i] * &basis[k]);
        }
    }
    coeffs
}

/// Locate exactly `expected` simple real zeros of `f` in the open interval
/// `(a, b)` by a Chebyshev-grid sign scan, bisection, and Newton polishing
/// with the supplied derivative.
pub fn find_simple_roots<F, D>(
    f: F,
    df: D,
    a: &Float,
    b: &Float,
    expected: usize,
    what: &str,
) -> Result<Vec<Float>>
where
    F: Fn(&Float) -> Float,
    D: Fn(&Float) -> Float,
{
    let prec = a.prec();
    if expected == 0 {
        return Ok(Vec::new());
    }
    let center = Float::with_val(prec, a + b) / 2u32;
    let half = Float::with_val(prec, b - a) / 2u32;

    let mut grid_n = (8 * expected).max(33);
    for attempt in 0..3 {
        let mut xs: Vec<Float> = Vec::with_capacity(grid_n);
        for i in 0..grid_n {
            // closed Chebyshev points, sorted ascending
            let theta = Float::with_val(prec, std::f64::consts::PI)
                * Float::with_val(prec, (grid_n - 1 - i) as u32)
                / Float::with_val(prec, (grid_n - 1) as u32);
            let x = Float::with_val(prec, &center + Float::with_val(prec, &half * theta.cos()));
            xs.push(x);
        }
        // stay strictly inside the open interval
        let inset = Float::with_val(prec, &half) * Float::with_val(prec, 1e-12);
        xs[0] += &inset;
        let last = grid_n - 1;
        xs[last] -= &inset;

        let vals: Vec<Float> = xs.iter().map(&f).collect();
        let mut brackets: Vec<(Float, Float, Float, Float)> = Vec::new();
        for i in 0..grid_n - 1 {
            let s0 = vals[i].is_sign_positive();
            let s1 = vals[i + 1].is_sign_positive();
            if vals[i] == 0 {
                continue;
            }
            if s0 != s1 {
                brackets.push((
                    xs[i].clone(),
                    xs[i + 1].clone(),
                    vals[i].clone(),
                    vals[i + 1].clone(),
                ));
            }
        }
        if brackets.len() != expected {
            if attempt < 2 {
                grid_n *= 4;
                continue;
            }
            return Err(Error::StructuralFailure(format!(
                "{what}: found {} sign changes, expected {expected}",
                brackets.len()
            )));
        }

        let mut roots = Vec::with_capacity(expected);
        for (mut lo, mut hi, mut flo, _fhi) in brackets {
            // bisection to get a tight, safe bracket
            for _ in 0..48 {
                let mid = Float::with_val(prec, &lo + &hi) / 2u32;
                let fm = f(&mid);
                if fm == 0 {
                    lo = mid.clone();
                    hi = mid;
                    break;
                }
                if fm.is_sign_positive() == flo.is_sign_positive() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            // Newton to working precision
            let mut x = Float::with_val(prec, &lo + &hi) / 2u32;
            let tol = Float::with_val(prec, &half) >> (prec - 6);
            for _ in 0..64 {
                let fx = f(&x);
                let dfx = df(&x);
                if dfx == 0 {
                    break;
                }
                let step = Float::with_val(prec, &fx / &dfx);
                let next = Float::with_val(prec, &x - &step);
                let done = step.clone().abs() < tol;
                if next < lo || next > hi {
                    // fall back to the bracket midpoint
                    x = Float::with_val(prec, &lo + &hi) / 2u32;
                    break;
                }
                x = next;
                if done {
                    break;
                }
            }
            roots.push(x);
        }
        for w in roots.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::StructuralFailure(format!(
                    "{what}: refined roots not strictly increasing"
                )));
            }
        }
        if roots[0] <= *a || roots[expected - 1] >= *b {
            return Err(Error::StructuralFailure(format!(
                "{what}: root escaped the open interval"
            )));
        }
        return Ok(roots);
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f64s(v: &[f64], prec: u32) -> Vec<Float> {
        v.iter().map(|&x| Float::with_val(prec, x)).collect()
    }

    #[test]
    fn from_roots_expands_products() {
        let prec = 128;
        let p = MonicPoly::from_roots(prec, &f64s(&[1.0, 2.0], prec));
        // (x-1)(x-2) = x^2 - 3x + 2
        assert_eq!(p.coeffs[2], 1);
        assert_eq!(p.coeffs[1], -3);
        assert_eq!(p.coeffs[0], 2);
    }

    #[test]
    fn lu_solve_small_system() {
        let prec = 128;
        let a = vec![f64s(&[2.0, 1.0], prec), f64s(&[1.0, 3.0], prec)];
        let b = f64s(&[5.0, 10.0], prec);
        let (x, ratio) = lu_solve(a, b);
        assert!((x[0].to_f64() - 1.0).abs() < 1e-30);
        assert!((x[1].to_f64() - 3.0).abs() < 1e-30);
        assert!(ratio > 0.3);
    }

    #[test]
    fn interpolation_recovers_cubic() {
        let prec = 192;
        let pts = f64s(&[-1.0, 0.5, 2.0, 3.5], prec);
        let p = MonicPoly::new(f64s(&[1.0, -2.0, 0.0, 4.0], prec));
        let vals: Vec<Float> = pts.iter().map(|x| p.eval(x)).collect();
        let coeffs = interpolate(&pts, &vals);
        for (c, e) in coeffs.iter().zip(&p.coeffs) {
            let d = Float::with_val(prec, c - e).abs();
            assert!(d.to_f64() < 1e-50);
        }
    }

    #[test]
    fn root_scan_finds_legendre_roots() {
        let prec = 256;
        // monic shifted-Legendre of degree 2 on [0,1]: x^2 - x + 1/6
        let p = MonicPoly::new(f64s(&[1.0 / 6.0, -1.0, 1.0], prec));
        let dp = p.derivative();
        let a = Float::with_val(prec, 0);
        let b = Float::with_val(prec, 1);
        let roots =
            find_simple_roots(|x| p.eval(x), |x| dp.eval(x), &a, &b, 2, "legendre2").unwrap();
        let expect = 0.5 - 1.0 / (2.0 * 3.0f64.sqrt());
        assert!((roots[0].to_f64() - expect).abs() < 1e-15);
        assert!((roots[1].to_f64() - (1.0 - expect)).abs() < 1e-15);
    }
}
