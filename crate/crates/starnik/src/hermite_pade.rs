//! Hermite-Padé approximants to the Cauchy transforms of the system.
//!
//! The common denominator of the diagonal-family approximant of norm n is
//! Q_n itself; the numerators come coefficientwise from the star moment
//! sequences (supported on one residue class each). The remainder has two
//! independent evaluation routes: through the numerators, and through the
//! alternating second-kind representation of Φ_{n,j+1}; both are computed and
//! compared wherever the approximant is probed.

use rug::{Complex, Float};

use crate::equilibrium::EquilibriumResult;
use crate::error::{Error, Result};
use crate::indexcomb::hp_multiindex;
use crate::mop::QnRecord;
use crate::poly::{cabs, MonicPoly};
use crate::secondkind::SecondKindSet;
use crate::star::{complex_pow, s_hat, star_moment, Hierarchy, StarSystem};

/// The approximant data at index n: denominator Q_n and the p numerators.
#[derive(Debug)]
pub struct HPApproximant {
    pub n: usize,
    pub multiindex: Vec<i64>,
    pub denominator: MonicPoly,
    pub numerators: Vec<MonicPoly>,
}

/// Numerators Q_{n,j}(z) = ∫ (Q_n(z) - Q_n(t))/(z - t) ds_j(t), assembled
/// coefficientwise from the star moments of s_j.
pub fn numerators(sys: &StarSystem, hier: &Hierarchy, rec: &QnRecord) -> Vec<MonicPoly> {
    let prec = sys.prec;
    let p = sys.p;
    let n = rec.n;
    let qn = rec.qn_poly(p);
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        // c_v = ∫ t^v ds_j, zero off the residue class j mod (p+1)
        let cv: Vec<Float> = (0..n.max(1))
            .map(|v| star_moment(sys, hier, j, v as u32))
            .collect();
        let mut coeffs = vec![Float::with_val(prec, 0); n.max(1)];
        for (u, c) in coeffs.iter_mut().enumerate().take(n) {
            let mut acc = Float::with_val(prec, 0);
            for v in 0..n - u {
                let q = &qn.coeffs[u + 1 + v];
                if *q == 0 || cv[v] == 0 {
                    continue;
                }
                acc += Float::with_val(prec, q * &cv[v]);
            }
            *c = acc;
        }
        out.push(MonicPoly::new(coeffs));
    }
    out
}

pub fn build(sys: &StarSystem, hier: &Hierarchy, rec: &QnRecord) -> HPApproximant {
    HPApproximant {
        n: rec.n,
        multiindex: hp_multiindex(rec.n, sys.p),
        denominator: rec.qn_poly(sys.p),
        numerators: numerators(sys, hier, rec),
    }
}

/// Laurent-order audit at infinity, symbolic in the moments: the coefficient
/// of z^{-u} in Q_n ŝ_j - Q_{n,j} is Σ_m q_m c_{m+u-1}, which must vanish for
/// u = 1..n_j. Returns the worst relative defect over that range and the
/// magnitude of the first coefficient past it.
pub fn order_defect(
    sys: &StarSystem,
    hier: &Hierarchy,
    rec: &QnRecord,
    j: usize,
) -> (f64, f64) {
    let prec = sys.prec;
    let n = rec.n;
    let nj = hp_multiindex(n, sys.p)[j] as usize;
    let qn = rec.qn_poly(sys.p);
    let coeff = |u: usize| -> (Float, Float) {
        let mut acc = Float::with_val(prec, 0);
        let mut scale = Float::with_val(prec, 0);
        for (m, q) in qn.coeffs.iter().enumerate() {
            if *q == 0 {
                continue;
            }
            let c = star_moment(sys, hier, j, (m + u - 1) as u32);
            if c == 0 {
                continue;
            }
            let term = Float::with_val(prec, q * &c);
            scale += term.clone().abs();
            acc += term;
        }
        (acc, scale)
    };
    let mut worst = 0f64;
    for u in 1..=nj {
        let (acc, scale) = coeff(u);
        if scale == 0 {
            continue;
        }
        let rel = (acc / scale).abs().to_f64();
        worst = worst.max(rel);
    }
    let (first_beyond, scale) = coeff(nj + 1);
    let beyond = if scale == 0 { 0.0 } else { (first_beyond / scale).abs().to_f64() };
    (worst, beyond)
}

/// Φ_{n,k}(z) through the alternating second-kind representation:
/// Σ_{i=1}^{k} (-1)^{i-1} ŝ_{i,k-1}(z) Ψ_{n,i}(z), with ŝ_{k,k-1} = 1 and
/// Ψ_{n,i}(z) = z^{ℓ-i} ψ_{n,i}(z^{p+1}).
pub fn phi_eval(
    sys: &StarSystem,
    hier: &Hierarchy,
    set: &SecondKindSet,
    k: usize,
    z: &Complex,
) -> Result<Complex> {
    assert!((1..=sys.p).contains(&k));
    let prec = sys.prec;
    let ell = set.rec.ell as i64;
    let zp1 = complex_pow(z, sys.p as u32 + 1);
    let mut acc = Complex::with_val(prec, (0, 0));
    for i in 1..=k {
        let psi = set.psi_complex(i, &zp1)?;
        let shift = ell - i as i64;
        let cap = if shift >= 0 {
            complex_pow(z, shift as u32) * psi
        } else {
            psi / complex_pow(z, (-shift) as u32)
        };
        let weight = if i == k {
            Complex::with_val(prec, (1, 0))
        } else {
            s_hat(sys, hier, i, k - 1, z)?
        };
        let term = weight * cap;
        if i % 2 == 1 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

/// Direct per-ray pullback of Φ_{n,j+1}(z) = ∫ Q_n(t)/(z-t) ds_j(t): the ray
/// restriction of s_j is x^{-j}/(p+1) times the pullback of μ_{0,j}.
pub fn phi_direct(
    sys: &StarSystem,
    hier: &Hierarchy,
    rec: &QnRecord,
    j: usize,
    z: &Complex,
) -> Result<Complex> {
    let prec = sys.prec;
    let p = sys.p;
    let p1 = p as u32 + 1;
    let qn = rec.qn_poly(p);
    let mu = hier.get(0, j);
    let guard = Float::with_val(prec, &mu.interval.1 - &mu.interval.0).abs()
        * Float::with_val(prec, 1e-8);
    let mut acc = Complex::with_val(prec, (0, 0));
    for (tau, w) in mu.nodes.iter().zip(&mu.weights) {
        let x = tau.clone().root(p1);
        let mut xpj = Float::with_val(prec, 1);
        for _ in 0..j {
            xpj *= &x;
        }
        let wray = Float::with_val(prec, w / &xpj);
        for m in 0..=p {
            let t = Complex::with_val(prec, (&x, Float::with_val(prec, 0))) * sys.omega_pow(m as i64);
            let dz = z.clone() - &t;
            if cabs(&dz) < guard {
                return Err(Error::PoleProximity {
                    min_dist: cabs(&dz).to_f64(),
                    guard: guard.to_f64(),
                });
            }
            let rot = sys.omega_pow(-(j as i64) * m as i64);
            acc += rot * qn.eval_complex(&t) / dz * Complex::with_val(prec, (&wray, 0));
        }
    }
    Ok(acc / Complex::with_val(prec, (p1, 0)))
}

/// Both evaluation routes of the remainder δ_{n,j}(z): through the numerator
/// (ŝ_j - Q_{n,j}/Q_n) and through Φ_{n,j+1}/Q_n. The difference is the
/// caller's cross-check. Points inside the guard disk around any zero of Q_n
/// are rejected.
pub fn remainder(
    sys: &StarSystem,
    hier: &Hierarchy,
    set: &SecondKindSet,
    numer: &HPApproximant,
    j: usize,
    z: &Complex,
) -> Result<(Complex, Complex)> {
    let prec = sys.prec;
    let rec = set.rec;
    let (a0, b0) = &sys.intervals[0];
    let scale = Float::with_val(prec, b0 - a0).root(sys.p as u32 + 1)
        * Float::with_val(prec, 1e-3);
    for zero in &rec.star_zeros {
        let d = cabs(&(z.clone() - zero));
        if d < scale {
            return Err(Error::PoleProximity { min_dist: d.to_f64(), guard: scale.to_f64() });
        }
    }
    let qn_z = numer.denominator.eval_complex(z);
    let shat = s_hat(sys, hier, 0, j, z)?;
    let delta1 = shat - numer.numerators[j].eval_complex(z) / &qn_z;
    let phi = phi_eval(sys, hier, set, j + 1, z)?;
    let delta2 = phi / qn_z;
    Ok((delta1, delta2))
}

/// Theorem-side prediction of lim |δ_{n,j}(z)|^{1/n}:
/// exp(-U^{μ̃_1}(z) + 2 U^{μ̃_0}(z) - 2 w_0/(p+1)).
pub fn delta_nthroot_prediction(
    eq: &EquilibriumResult,
    p: usize,
    zr: f64,
    zi: f64,
) -> f64 {
    use crate::asymptotics::StarMeasure;
    let u0 = StarMeasure { base: eq.measures[0].clone(), p }.potential_complex(zr, zi);
    let u1 = if p >= 2 {
        StarMeasure { base: eq.measures[1].clone(), p }.potential_complex(zr, zi)
    } else {
        0.0
    };
    (-u1 + 2.0 * u0 - 2.0 * eq.constants[0] / (p as f64 + 1.0)).exp()
}

/// Deterministic star-plane probes on two circles beyond every star, with
/// angles kept away from all star rays (and therefore from every Γ_i, so one
/// generator serves all j).
pub fn star_probes(sys: &StarSystem, count: usize) -> Vec<Complex> {
    let prec = sys.prec;
    let p1 = sys.p as f64 + 1.0;
    let mut rmax = 0f64;
    for (a, b) in &sys.intervals {
        rmax = rmax.max(a.to_f64().abs()).max(b.to_f64().abs());
    }
    let base = rmax.powf(1.0 / p1);
    let mut out = Vec::new();
    for (ci, rf) in [1.55, 2.6].iter().enumerate() {
        let r = rf * base;
        for i in 0..count {
            let theta = 2.0 * std::f64::consts::PI * (i as f64 + 0.29 + 0.13 * ci as f64)
                / count as f64;
            // stay clear of every ray of angle k π/(p+1)
            let ray_step = std::f64::consts::PI / p1;
            let frac = (theta / ray_step).fract().abs();
            if frac < 0.12 || frac > 0.88 {
                continue;
            }
            out.push(Complex::with_val(prec, (r * theta.cos(), r * theta.sin())));
        }
    }
    out
}
