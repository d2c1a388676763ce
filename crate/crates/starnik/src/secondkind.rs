//! Functions of the second kind ψ_{n,k}, their zero polynomials P_{n,k}, and
//! the normalization constants of the orthonormal picture.
//!
//! ψ_{n,0} = 𝒬_d, and each level is a weighted Cauchy transform of the
//! previous one against σ_{n,k-1} (the base measure, τ-weighted when the
//! residue ℓ exceeds the level). Evaluation tabulates each level at the Gauss
//! nodes of its own interval, so a point evaluation at level k costs one
//! quadrature sum. The zero polynomial P_{n,k} collects the Z(n,k) simple
//! zeros of ψ_{n,k} in (a_k, b_k); an argument-principle contour count serves
//! as the independent auditor.

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::indexcomb::{decay_order, z_closed_alpha, IndexData};
use crate::mop::QnRecord;
use crate::poly::{self, cabs, MonicPoly};
use crate::quad;
use crate::star::{Hierarchy, StarSystem};

/// Per-(n,k) data of the normalized picture.
#[derive(Debug, Clone)]
pub struct SecondKindBundle {
    pub n: usize,
    pub k: usize,
    pub pnk: MonicPoly,
    pub knk: Float,
    pub kappank: Float,
    pub eps_nk: i32,
}

/// Evaluators and constants for one index n across all levels.
pub struct SecondKindSet<'a> {
    pub sys: &'a StarSystem,
    pub hier: &'a Hierarchy,
    pub rec: &'a QnRecord,
    /// tables[m][i] = ψ_{n,m} at node i of the σ*_m rule, m = 0..p-1
    tables: Vec<Vec<Float>>,
    /// P_{n,k} for k = 0..p-1
    pub pnk: Vec<MonicPoly>,
    /// K_{n,k} for k = 0..p-1
    pub knk: Vec<Float>,
    /// κ_{n,k} = K_{n,k}/K_{n,k-1} for k = 0..p
    pub kappank: Vec<Float>,
    /// ε_{n,k} for k = 0..p-1
    pub eps: Vec<i32>,
}

/// Whether the level-k integrand carries the τ weight (σ_{n,k} = τ σ*_k).
fn twisted(ell: usize, k: usize) -> bool {
    k < ell
}

/// Whether ψ_{n,k} carries the leading z factor (ℓ < k).
fn prefactored(ell: usize, k: usize) -> bool {
    ell < k
}

impl<'a> SecondKindSet<'a> {
    pub fn build(sys: &'a StarSystem, hier: &'a Hierarchy, rec: &'a QnRecord) -> Result<Self> {
        let prec = sys.prec;
        let p = sys.p;
        let ell = rec.ell;

        // tabulate ψ_{n,m} at the nodes of its own interval
        let mut tables: Vec<Vec<Float>> = Vec::with_capacity(p);
        let base0 = hier.base(0);
        tables.push(base0.nodes.iter().map(|t| rec.qd.eval(t)).collect());
        for m in 1..p {
            let src = hier.base(m - 1);
            let dst = hier.base(m);
            let tw = twisted(ell, m - 1);
            let pf = prefactored(ell, m);
            let mut vals = Vec::with_capacity(dst.nodes.len());
            for x in &dst.nodes {
                let mut acc = Float::with_val(prec, 0);
                for ((t, w), f) in src.nodes.iter().zip(&src.weights).zip(&tables[m - 1]) {
                    let mut term = Float::with_val(prec, w * f);
                    if tw {
                        term *= t;
                    }
                    acc += term / Float::with_val(prec, x - t);
                }
                if pf {
                    acc *= x;
                }
                vals.push(acc);
            }
            tables.push(vals);
        }

        let mut set = SecondKindSet {
            sys,
            hier,
            rec,
            tables,
            pnk: Vec::new(),
            knk: Vec::new(),
            kappank: Vec::new(),
            eps: Vec::new(),
        };

        // zero polynomials
        let mut pnk = Vec::with_capacity(p);
        pnk.push(rec.qd.clone());
        for k in 1..p {
            pnk.push(set.find_pnk_inner(k)?);
        }
        set.pnk = pnk;

        // normalization constants and signs
        let mut knk = Vec::with_capacity(p);
        let mut eps = Vec::with_capacity(p);
        for k in 0..p {
            let (s, sign_ok) = set.k_integral(k, hier.base(k))?;
            if s == 0 || !sign_ok {
                return Err(Error::StructuralFailure(format!(
                    "norm integrand for K at n={} k={k} is not single-signed",
                    rec.n
                )));
            }
            let k_val = Float::with_val(prec, 1) / s.clone().abs().sqrt();
            knk.push(k_val);
            eps.push(set.measure_sign(k)?);
        }
        let mut kappank = Vec::with_capacity(p + 1);
        for k in 0..=p {
            let num = if k < p { knk[k].clone() } else { Float::with_val(prec, 1) };
            let den = if k == 0 { Float::with_val(prec, 1) } else { knk[k - 1].clone() };
            kappank.push(num / den);
        }
        set.knk = knk;
        set.kappank = kappank;
        Ok(set)
    }

    pub fn n(&self) -> usize {
        self.rec.n
    }

    /// P_{n,k} with the conventions P_{n,-1} = P_{n,p} = 1.
    pub fn pnk_conv(&self, k: i64) -> MonicPoly {
        if k < 0 || k >= self.sys.p as i64 {
            MonicPoly::one(self.sys.prec)
        } else {
            self.pnk[k as usize].clone()
        }
    }

    pub fn bundle(&self, k: usize) -> SecondKindBundle {
        SecondKindBundle {
            n: self.rec.n,
            k,
            pnk: self.pnk[k].clone(),
            knk: self.knk[k].clone(),
            kappank: self.kappank[k].clone(),
            eps_nk: self.eps[k],
        }
    }

    fn guard_for(&self, level: usize) -> Float {
        let prec = self.sys.prec;
        let (a, b) = &self.sys.intervals[level];
        Float::with_val(prec, b - a).abs() * Float::with_val(prec, 1e-8)
    }

    /// ψ_{n,k} at a real point off [a_{k-1}, b_{k-1}].
    pub fn psi_real(&self, k: usize, x: &Float) -> Result<Float> {
        assert!(k <= self.sys.p);
        if k == 0 {
            return Ok(self.rec.qd.eval(x));
        }
        let prec = self.sys.prec;
        let src = self.hier.base(k - 1);
        let tw = twisted(self.rec.ell, k - 1);
        let pf = prefactored(self.rec.ell, k);
        let guard = self.guard_for(k - 1);
        let mut acc = Float::with_val(prec, 0);
        for ((t, w), f) in src.nodes.iter().zip(&src.weights).zip(&self.tables[k - 1]) {
            let dx = Float::with_val(prec, x - t);
            if dx.clone().abs() < guard {
                return Err(Error::PoleProximity {
                    min_dist: dx.abs().to_f64().abs(),
                    guard: guard.to_f64(),
                });
            }
            let mut term = Float::with_val(prec, w * f);
            if tw {
                term *= t;
            }
            acc += term / dx;
        }
        if pf {
            acc *= x;
        }
        Ok(acc)
    }

    /// d/dx ψ_{n,k} at a real point.
    pub fn psi_deriv_real(&self, k: usize, x: &Float) -> Result<Float> {
        assert!(k <= self.sys.p);
        let prec = self.sys.prec;
        if k == 0 {
            return Ok(self.rec.qd.derivative().eval(x));
        }
        let src = self.hier.base(k - 1);
        let tw = twisted(self.rec.ell, k - 1);
        let pf = prefactored(self.rec.ell, k);
        let guard = self.guard_for(k - 1);
        let mut i0 = Float::with_val(prec, 0);
        let mut i1 = Float::with_val(prec, 0);
        for ((t, w), f) in src.nodes.iter().zip(&src.weights).zip(&self.tables[k - 1]) {
            let dx = Float::with_val(prec, x - t);
            if dx.clone().abs() < guard {
                return Err(Error::PoleProximity {
                    min_dist: dx.abs().to_f64().abs(),
                    guard: guard.to_f64(),
                });
            }
            let mut term = Float::with_val(prec, w * f);
            if tw {
                term *= t;
            }
            i0 += Float::with_val(prec, &term / &dx);
            i1 -= term / dx.square();
        }
        Ok(if pf { i0 + Float::with_val(prec, x * &i1) } else { i1 })
    }

    /// ψ_{n,k} at a complex point off [a_{k-1}, b_{k-1}].
    pub fn psi_complex(&self, k: usize, z: &Complex) -> Result<Complex> {
        assert!(k <= self.sys.p);
        let prec = self.sys.prec;
        if k == 0 {
            return Ok(self.rec.qd.eval_complex(z));
        }
        let src = self.hier.base(k - 1);
        let tw = twisted(self.rec.ell, k - 1);
        let pf = prefactored(self.rec.ell, k);
        let guard = self.guard_for(k - 1);
        let mut acc = Complex::with_val(prec, (0, 0));
        for ((t, w), f) in src.nodes.iter().zip(&src.weights).zip(&self.tables[k - 1]) {
            let dz = z.clone() - t;
            if cabs(&dz) < guard {
                return Err(Error::PoleProximity {
                    min_dist: cabs(&dz).to_f64(),
                    guard: guard.to_f64(),
                });
            }
            let mut term = Float::with_val(prec, w * f);
            if tw {
                term *= t;
            }
            acc += Complex::with_val(prec, (term, Float::with_val(prec, 0))) / dz;
        }
        if pf {
            acc *= z;
        }
        Ok(acc)
    }

    /// d/dz ψ_{n,k} at a complex point.
    pub fn psi_deriv_complex(&self, k: usize, z: &Complex) -> Result<Complex> {
        assert!(k <= self.sys.p);
        let prec = self.sys.prec;
        if k == 0 {
            return Ok(self.rec.qd.derivative().eval_complex(z));
        }
        let src = self.hier.base(k - 1);
        let tw = twisted(self.rec.ell, k - 1);
        let pf = prefactored(self.rec.ell, k);
        let guard = self.guard_for(k - 1);
        let mut i0 = Complex::with_val(prec, (0, 0));
        let mut i1 = Complex::with_val(prec, (0, 0));
        for ((t, w), f) in src.nodes.iter().zip(&src.weights).zip(&self.tables[k - 1]) {
            let dz = z.clone() - t;
            if cabs(&dz) < guard {
                return Err(Error::PoleProximity {
                    min_dist: cabs(&dz).to_f64(),
                    guard: guard.to_f64(),
                });
            }
            let mut term = Float::with_val(prec, w * f);
            if tw {
                term *= t;
            }
            let tc = Complex::with_val(prec, (&term, Float::with_val(prec, 0)));
            i0 += tc.clone() / &dz;
            i1 -= tc / dz.square();
        }
        Ok(if pf { i0 + z.clone() * i1 } else { i1 })
    }

    /// H_{n,k}(z) = P_{n,k-1}(z) ψ_{n,k}(z) / P_{n,k}(z); H_{n,0} = 1.
    pub fn hnk_real(&self, k: usize, x: &Float) -> Result<Float> {
        if k == 0 {
            return Ok(Float::with_val(self.sys.prec, 1));
        }
        let psi = self.psi_real(k, x)?;
        let num = self.pnk_conv(k as i64 - 1).eval(x) * psi;
        Ok(num / self.pnk_conv(k as i64).eval(x))
    }

    pub fn hnk_complex(&self, k: usize, z: &Complex) -> Result<Complex> {
        let prec = self.sys.prec;
        if k == 0 {
            return Ok(Complex::with_val(prec, (1, 0)));
        }
        let psi = self.psi_complex(k, z)?;
        let pm1 = self.pnk_conv(k as i64 - 1).eval_complex(z);
        let pk = self.pnk_conv(k as i64).eval_complex(z);
        Ok(pm1 * psi / pk)
    }

    /// h_{n,k} = K_{n,k-1}^2 H_{n,k}
    pub fn hnk_small_real(&self, k: usize, x: &Float) -> Result<Float> {
        let prec = self.sys.prec;
        let kk = if k == 0 {
            Float::with_val(prec, 1)
        } else {
            self.knk[k - 1].clone()
        };
        Ok(self.hnk_real(k, x)? * kk.square())
    }

    fn find_pnk_inner(&self, k: usize) -> Result<MonicPoly> {
        let prec = self.sys.prec;
        let expected = z_closed_alpha(self.rec.n, k, self.sys.p) as usize;
        let (a, b) = &self.sys.intervals[k];
        let a = Float::with_val(prec, a);
        let b = Float::with_val(prec, b);
        let roots = poly::find_simple_roots(
            |x| self.psi_real(k, x).expect("pole guard inside own interval"),
            |x| self.psi_deriv_real(k, x).expect("pole guard inside own interval"),
            &a,
            &b,
            expected,
            &format!("psi zeros at n={} k={k}", self.rec.n),
        )?;
        Ok(MonicPoly::from_roots(prec, &roots))
    }

    /// Monic polynomial of the zeros of ψ_{n,k} in (a_k, b_k); degree Z(n,k).
    pub fn find_pnk(&self, k: usize) -> Result<MonicPoly> {
        if k == 0 {
            return Ok(self.rec.qd.clone());
        }
        Ok(self.pnk[k].clone())
    }

    /// Signed value of ∫ P_{n,k} ψ_{n,k} / P_{n,k+1} dσ_{n,k} on the given
    /// rule (the K integrand after cancelling H against its factors), plus a
    /// single-sign certificate for the node contributions.
    fn k_integral(&self, k: usize, rule: &crate::star::DiscreteMeasure) -> Result<(Float, bool)> {
        let prec = self.sys.prec;
        let tw = twisted(self.rec.ell, k);
        let pk = &self.pnk[k];
        let pk1 = self.pnk_conv(k as i64 + 1);
        let mut acc = Float::with_val(prec, 0);
        let mut pos = Float::with_val(prec, 0);
        let mut neg = Float::with_val(prec, 0);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let psi = if k == 0 { self.rec.qd.eval(t) } else { self.psi_real(k, t)? };
            let mut term = Float::with_val(prec, w * psi);
            if tw {
                term *= t;
            }
            term *= pk.eval(t);
            term /= pk1.eval(t);
            if term > 0 {
                pos += &term;
            } else {
                neg += term.clone().abs();
            }
            acc += term;
        }
        let total = Float::with_val(prec, &pos + &neg);
        let minority = pos.min(&neg);
        let sign_ok = total == 0 || (minority / total).to_f64() < 1e-18;
        Ok((acc, sign_ok))
    }

    /// Sign ε_{n,k} of the measure ν_{n,k}, read at the barycenter and
    /// representative of the whole interval since the measure has constant
    /// sign.
    fn measure_sign(&self, k: usize) -> Result<i32> {
        let prec = self.sys.prec;
        let rule = self.hier.base(k);
        let bary = rule.moment(1) / rule.mass();
        // avoid landing exactly on a zero of P_{n,k}
        let mut x = bary;
        let probe_shift = Float::with_val(prec, &self.sys.intervals[k].1 - &self.sys.intervals[k].0)
            * Float::with_val(prec, 1e-3);
        for _ in 0..8 {
            let pk = self.pnk[k].eval(&x);
            if pk.clone().abs().to_f64() > 1e-18 {
                break;
            }
            x += &probe_shift;
        }
        let h = self.hnk_real(k, &x)?;
        let mut s = if h > 0 { 1i32 } else { -1 };
        if twisted(self.rec.ell, k) && x < 0 {
            s = -s;
        }
        let pm1 = self.pnk_conv(k as i64 - 1).eval(&x);
        let pp1 = self.pnk_conv(k as i64 + 1).eval(&x);
        if Float::with_val(prec, pm1 * pp1) < 0 {
            s = -s;
        }
        Ok(s)
    }

    /// Residuals of the varying orthogonality (against σ_{n,k}/P_{n,k+1}) and
    /// of the plain short-range conditions, both relative to the summed
    /// magnitudes.
    pub fn orthogonality_audit(&self, k: usize) -> Result<(f64, f64)> {
        let prec = self.sys.prec;
        let p = self.sys.p;
        let rule = self.hier.base(k);
        let tw = twisted(self.rec.ell, k);
        let pk1 = self.pnk_conv(k as i64 + 1);
        let zk = z_closed_alpha(self.rec.n, k, p);
        let zk1 = if k + 1 >= p { 0 } else { z_closed_alpha(self.rec.n, k + 1, p) };

        let psi_vals: Vec<Float> = if k == 0 {
            self.tables[0].clone()
        } else {
            self.tables[k].clone()
        };

        let mut worst_vary = 0f64;
        for s in 0..zk {
            let mut acc = Float::with_val(prec, 0);
            let mut scale = Float::with_val(prec, 0);
            for ((t, w), f) in rule.nodes.iter().zip(&rule.weights).zip(&psi_vals) {
                let mut term = Float::with_val(prec, w * f);
                if tw {
                    term *= t;
                }
                for _ in 0..s {
                    term *= t;
                }
                term /= pk1.eval(t);
                scale += term.clone().abs();
                acc += term;
            }
            if scale == 0 {
                continue;
            }
            let rel = (acc / scale).abs().to_f64();
            worst_vary = worst_vary.max(rel);
        }

        let mut worst_plain = 0f64;
        for s in 0..zk - zk1 {
            let mut acc = Float::with_val(prec, 0);
            let mut scale = Float::with_val(prec, 0);
            for ((t, w), f) in rule.nodes.iter().zip(&rule.weights).zip(&psi_vals) {
                let mut term = Float::with_val(prec, w * f);
                if tw {
                    term *= t;
                }
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
            worst_plain = worst_plain.max(rel);
        }
        Ok((worst_vary, worst_plain))
    }

    /// ∫ p_{n,k}^2 d|ν_{n,k}| evaluated on an independent rule of different
    /// order; equals 1 up to quadrature consistency.
    pub fn orthonorm_residual(&self, k: usize) -> Result<f64> {
        let prec = self.sys.prec;
        let (a, b) = &self.sys.intervals[k];
        let alt = crate::star::segment_quadrature(
            &self.sys.densities[k],
            (a, b),
            self.hier.order + 17,
            prec,
        )?;
        let (s_alt, _) = self.k_integral(k, &alt)?;
        let v = Float::with_val(prec, self.knk[k].clone().square() * s_alt.abs());
        Ok((v.to_f64() - 1.0).abs())
    }

    /// Argument-principle zero count of ψ_{n,k} on a rectangle hugging
    /// (a_k, b_k) while excluding the origin and the level-(k-1) cut.
    /// Returns the rounded count and the deviation from the nearest integer.
    pub fn argument_count(&self, k: usize) -> Result<(i64, f64)> {
        let (a, b) = &self.sys.intervals[k];
        let a_f = a.to_f64();
        let b_f = b.to_f64();
        let len = b_f - a_f;

        // margins: stay clear of 0 and of the previous interval
        let mut margin = 0.45 * len;
        if k >= 1 {
            let (pa, pb) = &self.sys.intervals[k - 1];
            let gap_cut = if a_f >= 0.0 {
                a_f - pb.to_f64()
            } else {
                pa.to_f64() - b_f
            }
            .abs()
            .max(a_f.abs().min(b_f.abs()));
            let d0 = distance_to_zero(a_f, b_f);
            if d0 > 0.0 {
                margin = margin.min(0.45 * d0);
            }
            margin = margin.min(0.45 * gap_cut);
        }

        let zeros: Vec<f64> = if k == 0 {
            self.rec.segment_zeros.iter().map(|z| z.to_f64()).collect()
        } else {
            zeros_of(&self.pnk[k], a_f, b_f)
        };

        let mut lo = a_f - margin;
        let mut hi = b_f + margin;
        // if the interval touches the origin, retreat to half the innermost zero
        if a_f == 0.0 {
            let inner = zeros.first().copied().unwrap_or(len * 0.5);
            lo = 0.5 * inner;
        }
        if b_f == 0.0 {
            let inner = zeros.last().copied().unwrap_or(-len * 0.5);
            hi = 0.5 * inner;
        }
        let height = margin.max(1e-3 * len);

        let val = self.winding_integral(k, lo, hi, height)?;
        let rounded = val.round();
        Ok((rounded as i64, (val - rounded).abs()))
    }

    fn winding_integral(&self, k: usize, lo: f64, hi: f64, h: f64) -> Result<f64> {
        let prec = self.sys.prec;
        let order = 96;
        let (gx, gw) = quad::gauss_legendre(order, prec);
        let corners = [
            (Complex::with_val(prec, (lo, -h)), Complex::with_val(prec, (hi, -h))),
            (Complex::with_val(prec, (hi, -h)), Complex::with_val(prec, (hi, h))),
            (Complex::with_val(prec, (hi, h)), Complex::with_val(prec, (lo, h))),
            (Complex::with_val(prec, (lo, h)), Complex::with_val(prec, (lo, -h))),
        ];
        let mut total = Complex::with_val(prec, (0, 0));
        for (za, zb) in corners {
            let dir = zb.clone() - &za;
            let mid = (za.clone() + &zb) / Complex::with_val(prec, (2, 0));
            for (x, w) in gx.iter().zip(&gw) {
                let half = dir.clone() / Complex::with_val(prec, (2, 0));
                let z = mid.clone() + half.clone() * Complex::with_val(prec, (x, 0));
                let f = self.psi_complex(k, &z)?;
                let df = self.psi_deriv_complex(k, &z)?;
                total += df / f * half * Complex::with_val(prec, (w, 0));
            }
        }
        let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
        // divide by 2πi: count = Im(total)/(2π) for the real part
        Ok((total.imag().clone() / two_pi).to_f64())
    }

    /// Least-squares slope of log|ψ_{n,k}| along a ray of large radii;
    /// matches -N(n,k) for a correct construction.
    pub fn decay_slope(&self, k: usize) -> Result<f64> {
        let prec = self.sys.prec;
        let _ = prec;
        let theta = 0.37; // fixed angle off every cut
        let mut pts = Vec::new();
        let radii = [1e3, 3.162e3, 1e4, 3.162e4, 1e5, 3.162e5, 1e6];
        for r in radii {
            let z = Complex::with_val(prec, (r * f64::cos(theta), r * f64::sin(theta)));
            let v = self.psi_complex(k, &z)?;
            let lv = cabs(&v).ln().to_f64();
            pts.push((f64::ln(r), lv));
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
    }
}

fn distance_to_zero(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        a
    } else if b < 0.0 {
        -b
    } else {
        0.0
    }
}

/// Coarse f64 roots of a polynomial known to have all its zeros in [a, b];
/// used only for contour-placement geometry.
fn zeros_of(p: &MonicPoly, a: f64, b: f64) -> Vec<f64> {
    let d = p.degree();
    if d == 0 {
        return Vec::new();
    }
    let m = (64 * d).max(1024);
    let mut out = Vec::new();
    let mut prev_x = a;
    let mut prev_v = eval_f64(p, prev_x);
    for i in 1..=m {
        let x = a + (b - a) * (i as f64) / (m as f64);
        let v = eval_f64(p, x);
        if prev_v == 0.0 {
            out.push(prev_x);
        } else if prev_v.signum() != v.signum() {
            let (mut lo, mut hi, mut flo) = (prev_x, x, prev_v);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = eval_f64(p, mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_v = v;
    }
    out
}

fn eval_f64(p: &MonicPoly, x: f64) -> f64 {
    let mut acc = 0.0;
    for c in p.coeffs.iter().rev() {
        acc = acc * x + c.to_f64();
    }
    acc
}

/// Relative residual of the second-kind recurrence at level k over the given
/// test points: `ψ_{n,k} = ψ_{n+1,k} + a_n ψ_{n-p,k}` when ℓ(n) < p, with the
/// extra z factor on the left when ℓ(n) = p.
pub fn secondkind_recurrence_residual(
    set_nmp: &SecondKindSet,
    set_n: &SecondKindSet,
    set_np1: &SecondKindSet,
    a_n: &Float,
    k: usize,
    points: &[Complex],
) -> Result<f64> {
    let prec = set_n.sys.prec;
    let ell = set_n.rec.ell;
    let p = set_n.sys.p;
    let mut worst = 0f64;
    for z in points {
        let v_n = set_n.psi_complex(k, z)?;
        let v_np1 = set_np1.psi_complex(k, z)?;
        let v_nmp = set_nmp.psi_complex(k, z)?;
        let lhs = if ell == p { z.clone() * &v_n } else { v_n };
        let rhs = v_np1.clone() + Complex::with_val(prec, (a_n, Float::with_val(prec, 0))) * &v_nmp;
        let scale = cabs(&lhs)
            .max(&cabs(&v_np1))
            .max(&cabs(&(Complex::with_val(prec, (a_n, Float::with_val(prec, 0))) * v_nmp)));
        if scale == 0 {
            continue;
        }
        let rel = (cabs(&(lhs - rhs)) / scale).to_f64();
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Shifted-moment identity used in the positivity bookkeeping: with
/// k = n mod p, the ψ_{n+1,k} moment of order Z(n,k)-Z(n,k+1) (minus one when
/// ℓ(n) = p) against σ_{n,k} vanishes. Returns the relative residual.
pub fn lemma33_residual(set_np1: &SecondKindSet, n: usize) -> Result<f64> {
    let sys = set_np1.sys;
    let prec = sys.prec;
    let p = sys.p;
    assert!(n >= p);
    assert_eq!(set_np1.rec.n, n + 1);
    let k = n % p;
    let idx = IndexData::new(n, p);
    let ell = idx.ell as usize;
    let zk = z_closed_alpha(n, k, p);
    let zk1 = if k + 1 >= p { 0 } else { z_closed_alpha(n, k + 1, p) };
    let e = zk - zk1 - if ell == p { 1 } else { 0 };
    assert!(e >= 0);

    let rule = set_np1.hier.base(k);
    let tw = twisted(ell, k); // σ_{n,k} uses ℓ(n)
    let mut acc = Float::with_val(prec, 0);
    let mut scale = Float::with_val(prec, 0);
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        let psi = set_np1.psi_real(k, t)?;
        let mut term = Float::with_val(prec, w * psi);
        if tw {
            term *= t;
        }
        for _ in 0..e {
            term *= t;
        }
        scale += term.clone().abs();
        acc += term;
    }
    if scale == 0 {
        return Ok(0.0);
    }
    Ok((acc / scale).abs().to_f64())
}

/// Expected decay order of ψ_{n,k}; re-exported for test convenience.
pub fn expected_decay(n: usize, k: usize, p: usize) -> i64 {
    decay_order(n, k, p)
}

/// Direct evaluation of the star-side second-kind functions Ψ_{n,k} by nested
/// star quadrature (the rotational decomposition of σ_k into p+1 ray copies
/// of σ*_k). Independent of the segment-side reduction, so it serves as a
/// cross-check of `z^{k-ℓ} Ψ_{n,k}(z) = ψ_{n,k}(z^{p+1})`.
pub struct StarPsi<'a> {
    sys: &'a StarSystem,
    hier: &'a Hierarchy,
    rec: &'a QnRecord,
    /// star_tables[m][j*N + i] = Ψ_{n,m} at ray-j node i of Γ_m
    star_tables: Vec<Vec<Complex>>,
    star_nodes: Vec<Vec<Complex>>,
    star_weights: Vec<Vec<Float>>,
}

impl<'a> StarPsi<'a> {
    pub fn build(sys: &'a StarSystem, hier: &'a Hierarchy, rec: &'a QnRecord) -> Result<Self> {
        let prec = sys.prec;
        let p = sys.p;
        let p1 = p as u32 + 1;

        let mut star_nodes: Vec<Vec<Complex>> = Vec::with_capacity(p);
        let mut star_weights: Vec<Vec<Float>> = Vec::with_capacity(p);
        for m in 0..p {
            let base = hier.base(m);
            let mut nodes = Vec::with_capacity(base.nodes.len() * (p + 1));
            let mut weights = Vec::with_capacity(base.nodes.len() * (p + 1));
            for j in 0..=p {
                for (t, w) in base.nodes.iter().zip(&base.weights) {
                    let r = t.clone().abs().root(p1);
                    let angle = if m % 2 == 0 {
                        2.0 * std::f64::consts::PI * j as f64 / p1 as f64
                    } else {
                        std::f64::consts::PI * (2 * j + 1) as f64 / p1 as f64
                    };
                    let dir = Complex::with_val(prec, (angle.cos(), angle.sin()));
                    nodes.push(dir * Complex::with_val(prec, (&r, Float::with_val(prec, 0))));
                    weights.push(Float::with_val(prec, w / Float::with_val(prec, p1)));
                }
            }
            star_nodes.push(nodes);
            star_weights.push(weights);
        }

        // Ψ_{n,0} = Q_n at the Γ_0 star nodes
        let qn = rec.qn_poly(p);
        let mut star_tables: Vec<Vec<Complex>> = Vec::with_capacity(p);
        star_tables.push(star_nodes[0].iter().map(|z| qn.eval_complex(z)).collect());
        for m in 1..p {
            let mut vals = Vec::with_capacity(star_nodes[m].len());
            for z in &star_nodes[m] {
                let mut acc = Complex::with_val(prec, (0, 0));
                for ((t, w), f) in star_nodes[m - 1]
                    .iter()
                    .zip(&star_weights[m - 1])
                    .zip(&star_tables[m - 1])
                {
                    let dz = z.clone() - t;
                    acc += Complex::with_val(prec, (w, 0)) * f / dz;
                }
                vals.push(acc);
            }
            star_tables.push(vals);
        }
        Ok(StarPsi { sys, hier, rec, star_tables, star_nodes, star_weights })
    }

    /// Ψ_{n,k}(z), 0 <= k <= p, with Ψ_{n,0} = Q_n.
    pub fn eval(&self, k: usize, z: &Complex) -> Result<Complex> {
        let prec = self.sys.prec;
        assert!(k <= self.sys.p);
        if k == 0 {
            return Ok(self.rec.qn_poly(self.sys.p).eval_complex(z));
        }
        let m = k - 1;
        let guard = {
            let (a, b) = &self.sys.intervals[m];
            Float::with_val(prec, b - a).abs() * Float::with_val(prec, 1e-8)
        };
        let mut acc = Complex::with_val(prec, (0, 0));
        for ((t, w), f) in self.star_nodes[m]
            .iter()
            .zip(&self.star_weights[m])
            .zip(&self.star_tables[m])
        {
            let dz = z.clone() - t;
            if cabs(&dz) < guard {
                return Err(Error::PoleProximity {
                    min_dist: cabs(&dz).to_f64(),
                    guard: guard.to_f64(),
                });
            }
            acc += Complex::with_val(prec, (w, 0)) * f / dz;
        }
        Ok(acc)
    }

    pub fn hier(&self) -> &Hierarchy {
        self.hier
    }
}

/// Deterministic complex probe points on two circles, avoiding the real axis
/// (where all cuts live) and the origin.
pub fn probe_points(sys: &StarSystem, per_circle: usize) -> Vec<Complex> {
    let prec = sys.prec;
    let mut scale = 0f64;
    for (a, b) in &sys.intervals {
        scale = scale.max(a.to_f64().abs()).max(b.to_f64().abs());
    }
    let radii = [1.7 * scale, 3.1 * scale];
    let mut out = Vec::with_capacity(2 * per_circle);
    for (ci, r) in radii.iter().enumerate() {
        for i in 0..per_circle {
            let theta = std::f64::consts::PI * (0.18 + ci as f64 * 0.07)
                + 2.0 * std::f64::consts::PI * i as f64 / per_circle as f64
                + 0.23;
            let (s, c) = theta.sin_cos();
            if s.abs() < 0.05 {
                continue;
            }
            out.push(Complex::with_val(prec, (r * c, r * s)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mop::solve_qd;
    use crate::star::{build_mu_hierarchy, complex_pow, validate_system, DensitySpec};

    fn fl(prec: u32, x: f64) -> Float {
        Float::with_val(prec, x)
    }

    fn paper_p2(prec: u32) -> (StarSystem, Hierarchy) {
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
        let h = build_mu_hierarchy(&sys, 56).unwrap();
        (sys, h)
    }

    #[test]
    fn base_case_psi01_is_weighted_cauchy() {
        let prec = 256;
        let sys = validate_system(StarSystem::new(
            1,
            vec![(fl(prec, 0.0), fl(prec, 1.0))],
            vec![DensitySpec::Power { gamma: fl(prec, 0.0) }],
            prec,
        ))
        .unwrap();
        let h = build_mu_hierarchy(&sys, 32).unwrap();
        let rec = solve_qd(&sys, &h, 0).unwrap();
        let set = SecondKindSet::build(&sys, &h, &rec).unwrap();
        let z = fl(prec, 3.5);
        let psi = set.psi_real(1, &z).unwrap();
        // ell = 0 < k = 1: psi = z * mu_hat(z)
        let expect = h.get(0, 0).cauchy_real(&z).unwrap() * &z;
        assert!((psi - expect).abs().to_f64() < 1e-70);
    }

    #[test]
    fn psi_conjugation_symmetry() {
        let prec = 256;
        let (sys, h) = paper_p2(prec);
        let rec = solve_qd(&sys, &h, 7).unwrap();
        let set = SecondKindSet::build(&sys, &h, &rec).unwrap();
        let z = Complex::with_val(prec, (0.4, 1.3));
        let zbar = Complex::with_val(prec, (0.4, -1.3));
        for k in 1..=2usize {
            let v = set.psi_complex(k, &z).unwrap();
            let vbar = set.psi_complex(k, &zbar).unwrap();
            let d1 = (v.real().clone() - vbar.real()).abs().to_f64();
            let d2 = (v.imag().clone() + vbar.imag()).abs().to_f64();
            assert!(d1 < 1e-60 && d2 < 1e-60, "k={k}");
        }
    }

    #[test]
    fn modified_psi_identity_against_star_quadrature() {
        let prec = 256;
        let (sys, h) = paper_p2(prec);
        for n in [5usize, 9, 12] {
            let rec = solve_qd(&sys, &h, n).unwrap();
            let set = SecondKindSet::build(&sys, &h, &rec).unwrap();
            let star = StarPsi::build(&sys, &h, &rec).unwrap();
            let z = Complex::with_val(prec, (1.21, 0.83));
            let zp1 = complex_pow(&z, 3);
            for k in 1..=2usize {
                // z^{k-l} Psi_{n,k}(z) = psi_{n,k}(z^{p+1})
                let psi = set.psi_complex(k, &zp1).unwrap();
                let cap = star.eval(k, &z).unwrap();
                let shift = k as i64 - rec.ell as i64;
                let lhs = if shift >= 0 {
                    complex_pow(&z, shift as u32) * cap
                } else {
                    cap / complex_pow(&z, (-shift) as u32)
                };
                let rel = (cabs(&(lhs.clone() - &psi)) / cabs(&psi)).to_f64();
                assert!(rel < 1e-45, "n={n} k={k} rel={rel:e}");
            }
        }
    }

    #[test]
    fn star_psi_rotation_symmetry() {
        let prec = 256;
        let (sys, h) = paper_p2(prec);
        let rec = solve_qd(&sys, &h, 8).unwrap();
        let star = StarPsi::build(&sys, &h, &rec).unwrap();
        let z = Complex::with_val(prec, (0.9, 1.1));
        for k in 0..=2usize {
            let lhs = star.eval(k, &(sys.omega().clone() * &z)).unwrap();
            let rot = sys.omega_pow(rec.n as i64 - k as i64);
            let rhs = rot * star.eval(k, &z).unwrap();
            let rel = (cabs(&(lhs.clone() - &rhs)) / cabs(&rhs)).to_f64();
            assert!(rel < 1e-45, "k={k} rel={rel:e}");
        }
    }

    #[test]
    fn pnk_zero_counts_small() {
        let prec = 256;
        let (sys, h) = paper_p2(prec);
        for n in [6usize, 10, 15] {
            let rec = solve_qd(&sys, &h, n).unwrap();
            let set = SecondKindSet::build(&sys, &h, &rec).unwrap();
            for k in 0..2usize {
                let z = z_closed_alpha(n, k, 2) as usize;
                assert_eq!(set.find_pnk(k).unwrap().degree(), z, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn argument_principle_agrees() {
        let prec = 256;
        let (sys, h) = paper_p2(prec);
        let rec = solve_qd(&sys, &h, 12).unwrap();
        let set = SecondKindSet::build(&sys, &h, &rec).unwrap();
        for k in 0..2usize {
            let (count, dev) = set.argument_count(k).unwrap();
            assert!(dev < 0.01, "k={k} dev={dev}");
            assert_eq!(count, z_closed_alpha(12, k, 2), "k={k}");
        }
    }

    #[test]
    fn decay_slope_matches_counting() {
        let prec = 256;
        let (sys, h) = paper_p2(prec);
        let rec = solve_qd(&sys, &h, 9).unwrap();
        let set = SecondKindSet::build(&sys, &h, &rec).unwrap();
        for k in 1..=2usize {
            let slope = set.decay_slope(k).unwrap();
            let expect = -expected_decay(9, k, 2) as f64;
            assert!((slope - expect).abs() < 0.05, "k={k} slope={slope} expect={expect}");
        }
    }

    #[test]
    fn h_sign_ledger_small() {
        let prec = 256;
        let (sys, h) = paper_p2(prec);
        // Lemma about sign(H_{n,j}) applies for j <= k where n = mp + k
        for n in [7usize, 10, 13] {
            let rec = solve_qd(&sys, &h, n).unwrap();
            let set = SecondKindSet::build(&sys, &h, &rec).unwrap();
            let kcap = n % 2;
            for j in 1..=kcap {
                let rule = h.base(j);
                let bary = rule.moment(1) / rule.mass();
                let hv = set.hnk_real(j, &bary).unwrap();
                let expect_neg = (j <= rec.ell) && (j % 2 == 1);
                assert_eq!(hv < 0, expect_neg, "n={n} j={j} h={hv}");
            }
        }
    }
}
