//! Star geometry, generating measures, the nested measure hierarchy, and
//! Cauchy-transform evaluation on segments.
//!
//! The system is described entirely in the segment variable `τ = z^{p+1}`:
//! interval `k` carries the push-forward measure `σ*_k` given by a density on
//! `[a_k, b_k]`. Even-indexed intervals sit on the positive axis, odd-indexed
//! ones on the negative axis, so consecutive supports can only meet at the
//! origin, which validation forbids.
//!
//! The triangular hierarchy `μ_{k,j}` is built inductively: `μ_{k,k} = σ*_k`
//! and `dμ_{k,j}(τ) = τ μ̂_{k+1,j}(τ) dσ*_k(τ)`, realized by reweighting the
//! Gauss rule of `σ*_k` with cached Cauchy transforms of the previous level.

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::quad;

/// Density of a generating measure in the segment variable.
#[derive(Debug, Clone)]
pub enum DensitySpec {
    /// |τ|^gamma
    Power { gamma: Float },
    /// (τ - a)^alpha (b - τ)^beta
    Jacobi { alpha: Float, beta: Float },
    /// piecewise-linear density through the given samples
    Tabulated { abscissae: Vec<Float>, values: Vec<Float> },
}

/// Sign classification of a discrete measure's weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    Mixed,
}

/// Quadrature-node representation of a (signed) measure on a real interval.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub interval: (Float, Float),
    pub nodes: Vec<Float>,
    pub weights: Vec<Float>,
    pub declared_sign: Sign,
}

impl DiscreteMeasure {
    pub fn new(interval: (Float, Float), nodes: Vec<Float>, weights: Vec<Float>) -> Self {
        let declared_sign = detect_sign(&weights);
        Self { interval, nodes, weights, declared_sign }
    }

    pub fn prec(&self) -> u32 {
        self.interval.0.prec()
    }

    pub fn mass(&self) -> Float {
        let mut acc = Float::with_val(self.prec(), 0);
        for w in &self.weights {
            acc += w;
        }
        acc
    }

    /// Σ w_i τ_i^s
    pub fn moment(&self, s: u32) -> Float {
        let prec = self.prec();
        let mut acc = Float::with_val(prec, 0);
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            let mut term = w.clone();
            for _ in 0..s {
                term *= t;
            }
            acc += term;
        }
        acc
    }

    /// Integrate an arbitrary function against the measure.
    pub fn integrate<F: Fn(&Float) -> Float>(&self, f: F) -> Float {
        let prec = self.prec();
        let mut acc = Float::with_val(prec, 0);
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            acc += Float::with_val(prec, w * f(t));
        }
        acc
    }

    fn guard(&self) -> Float {
        let prec = self.prec();
        Float::with_val(prec, &self.interval.1 - &self.interval.0).abs()
            * Float::with_val(prec, 1e-8)
    }

    /// Cauchy transform Σ w_i / (z - τ_i) at a complex point.
    pub fn cauchy(&self, z: &Complex) -> Result<Complex> {
        let prec = self.prec();
        let guard = self.guard();
        let mut acc = Complex::with_val(prec, (0, 0));
        let mut min_dist = Float::with_val(prec, f64::INFINITY);
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            let dz = z.clone() - t;
            let dist = Float::with_val(prec, dz.abs_ref());
            if dist < min_dist {
                min_dist = dist.clone();
            }
            acc += Complex::with_val(prec, (w, 0)) / dz;
        }
        if min_dist < guard {
            return Err(Error::PoleProximity {
                min_dist: min_dist.to_f64(),
                guard: guard.to_f64(),
            });
        }
        Ok(acc)
    }

    /// Cauchy transform at a real point off the support.
    pub fn cauchy_real(&self, x: &Float) -> Result<Float> {
        let prec = self.prec();
        let guard = self.guard();
        let mut acc = Float::with_val(prec, 0);
        let mut min_dist = Float::with_val(prec, f64::INFINITY);
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            let dx = Float::with_val(prec, x - t);
            let dist = dx.clone().abs();
            if dist < min_dist {
                min_dist = dist.clone();
            }
            acc += Float::with_val(prec, w / &dx);
        }
        if min_dist < guard {
            return Err(Error::PoleProximity {
                min_dist: min_dist.to_f64(),
                guard: guard.to_f64(),
            });
        }
        Ok(acc)
    }
}

fn detect_sign(weights: &[Float]) -> Sign {
    let mut pos = false;
    let mut neg = false;
    for w in weights {
        if *w > 0 {
            pos = true;
        } else if *w < 0 {
            neg = true;
        }
    }
    match (pos, neg) {
        (true, false) => Sign::Positive,
        (false, true) => Sign::Negative,
        _ => Sign::Mixed,
    }
}

/// The star system: p generating interval/density pairs plus cached geometry.
#[derive(Debug, Clone)]
pub struct StarSystem {
    pub p: usize,
    pub intervals: Vec<(Float, Float)>,
    pub densities: Vec<DensitySpec>,
    pub prec: u32,
    omega: Complex,
}

impl StarSystem {
    /// Assemble without validation; use [`validate_system`] to check the
    /// geometric and density invariants.
    pub fn new(
        p: usize,
        intervals: Vec<(Float, Float)>,
        densities: Vec<DensitySpec>,
        prec: u32,
    ) -> Self {
        let angle = Float::with_val(prec, rug::float::Constant::Pi) * 2u32
            / Float::with_val(prec, (p + 1) as u32);
        let omega = Complex::with_val(prec, (angle.clone().cos(), angle.sin()));
        Self { p, intervals, densities, prec, omega }
    }

    /// exp(2πi/(p+1))
    pub fn omega(&self) -> &Complex {
        &self.omega
    }

    /// ω^m as a fresh complex value.
    pub fn omega_pow(&self, m: i64) -> Complex {
        let prec = self.prec;
        let e = m.rem_euclid(self.p as i64 + 1);
        let mut acc = Complex::with_val(prec, (1, 0));
        for _ in 0..e {
            acc *= &self.omega;
        }
        acc
    }
}

/// Check all system invariants, returning the system unchanged on success.
/// The error names the first violated constraint.
pub fn validate_system(sys: StarSystem) -> Result<StarSystem> {
    if sys.p < 1 {
        return Err(Error::InvalidSystem("p must be a positive integer".into()));
    }
    if sys.intervals.len() != sys.p || sys.densities.len() != sys.p {
        return Err(Error::InvalidSystem(format!(
            "expected {} interval/density pairs, got {}/{}",
            sys.p,
            sys.intervals.len(),
            sys.densities.len()
        )));
    }
    for (k, (a, b)) in sys.intervals.iter().enumerate() {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidSystem(format!("interval {k} has non-finite endpoint")));
        }
        if a >= b {
            return Err(Error::InvalidSystem(format!("interval {k}: endpoints not increasing")));
        }
        if k % 2 == 0 && *a < 0 {
            return Err(Error::InvalidSystem(format!(
                "interval {k} is even-indexed and must satisfy 0 <= a < b"
            )));
        }
        if k % 2 == 1 && *b > 0 {
            return Err(Error::InvalidSystem(format!(
                "interval {k} is odd-indexed and must satisfy a < b <= 0"
            )));
        }
    }
    for k in 0..sys.p.saturating_sub(1) {
        let touches = |i: usize| -> bool {
            let (a, b) = &sys.intervals[i];
            if i % 2 == 0 {
                *a == 0
            } else {
                *b == 0
            }
        };
        if touches(k) && touches(k + 1) {
            return Err(Error::InvalidSystem(format!(
                "consecutive intervals {k} and {} both contain the origin",
                k + 1
            )));
        }
    }
    for (k, d) in sys.densities.iter().enumerate() {
        match d {
            DensitySpec::Power { gamma } => {
                if *gamma <= -1 {
                    return Err(Error::InvalidSystem(format!(
                        "density {k}: power exponent must exceed -1"
                    )));
                }
            }
            DensitySpec::Jacobi { alpha, beta } => {
                if *alpha <= -1 || *beta <= -1 {
                    return Err(Error::InvalidSystem(format!(
                        "density {k}: jacobi exponents must exceed -1"
                    )));
                }
            }
            DensitySpec::Tabulated { abscissae, values } => {
                if abscissae.len() < 2 || abscissae.len() != values.len() {
                    return Err(Error::InvalidSystem(format!(
                        "density {k}: tabulated data needs matching abscissae/values, at least 2"
                    )));
                }
                for w in abscissae.windows(2) {
                    if w[0] >= w[1] {
                        return Err(Error::InvalidSystem(format!(
                            "density {k}: tabulated abscissae must be strictly increasing"
                        )));
                    }
                }
                let mut any_pos = false;
                for v in values {
                    if *v < 0 {
                        return Err(Error::InvalidSystem(format!(
                            "density {k}: tabulated values must be nonnegative"
                        )));
                    }
                    if *v > 0 {
                        any_pos = true;
                    }
                }
                if !any_pos {
                    return Err(Error::InvalidSystem(format!(
                        "density {k}: tabulated density is identically zero"
                    )));
                }
            }
        }
    }
    Ok(sys)
}

/// Gauss-type rule of the given order for the density on the interval:
/// exact for polynomials of degree <= 2*order - 1 against power and jacobi
/// densities; composite Gauss-Legendre over the sample cells for tabulated
/// densities.
pub fn segment_quadrature(
    density: &DensitySpec,
    interval: (&Float, &Float),
    order: usize,
    prec: u32,
) -> Result<DiscreteMeasure> {
    assert!(order >= 1);
    let (a, b) = interval;
    if *b <= 0 {
        // mirror to the positive axis, build there, mirror back
        let ma = Float::with_val(prec, -b);
        let mb = Float::with_val(prec, -a);
        let mirrored = match density {
            DensitySpec::Power { gamma } => DensitySpec::Power { gamma: gamma.clone() },
            DensitySpec::Jacobi { alpha, beta } => {
                DensitySpec::Jacobi { alpha: beta.clone(), beta: alpha.clone() }
            }
            DensitySpec::Tabulated { abscissae, values } => {
                let mut xs: Vec<Float> =
                    abscissae.iter().map(|x| Float::with_val(prec, -x)).collect();
                let mut vs = values.clone();
                xs.reverse();
                vs.reverse();
                DensitySpec::Tabulated { abscissae: xs, values: vs }
            }
        };
        let m = segment_quadrature(&mirrored, (&ma, &mb), order, prec)?;
        let mut nodes: Vec<Float> = m.nodes.iter().map(|x| Float::with_val(prec, -x)).collect();
        let mut weights = m.weights;
        nodes.reverse();
        weights.reverse();
        return Ok(DiscreteMeasure::new((a.clone(), b.clone()), nodes, weights));
    }

    match density {
        DensitySpec::Power { gamma } => {
            if *a == 0 {
                // τ^γ on [0,b] is Jacobi with weight (1+x)^γ after mapping
                let zero = Float::with_val(prec, 0);
                let rec = quad::jacobi_recurrence(&zero, gamma, order, prec);
                let (xs, ws) = quad::gauss_from_recurrence(&rec, order, prec);
                let half = Float::with_val(prec, b) / 2u32;
                // dτ = (b/2) dx and τ^γ = (b/2)^γ (1+x)^γ
                let scale = {
                    let lnh = half.clone().ln();
                    (Float::with_val(prec, gamma * &lnh) + lnh).exp()
                };
                let nodes = xs
                    .iter()
                    .map(|x| Float::with_val(prec, &half * Float::with_val(prec, x + 1u32)))
                    .collect();
                let weights =
                    ws.iter().map(|w| Float::with_val(prec, w * &scale)).collect();
                Ok(DiscreteMeasure::new((a.clone(), b.clone()), nodes, weights))
            } else {
                // analytic weight on a positive interval
                let g = gamma.clone();
                let rec = quad::stieltjes_recurrence(
                    move |x: &Float| {
                        Float::with_val(x.prec(), &g * x.clone().ln()).exp()
                    },
                    a,
                    b,
                    order,
                    prec,
                );
                let (nodes, weights) = quad::gauss_from_recurrence(&rec, order, prec);
                Ok(DiscreteMeasure::new((a.clone(), b.clone()), nodes, weights))
            }
        }
        DensitySpec::Jacobi { alpha, beta } => {
            // (τ-a)^α (b-τ)^β maps to (1-x)^β (1+x)^α on [-1,1]
            let rec = quad::jacobi_recurrence(beta, alpha, order, prec);
            let (xs, ws) = quad::gauss_from_recurrence(&rec, order, prec);
            let half = Float::with_val(prec, b - a) / 2u32;
            let scale = {
                let lnh = half.clone().ln();
                let e = Float::with_val(prec, alpha + beta) + 1u32;
                Float::with_val(prec, &e * &lnh).exp()
            };
            let mid = Float::with_val(prec, a + b) / 2u32;
            let nodes = xs
                .iter()
                .map(|x| Float::with_val(prec, &mid + Float::with_val(prec, &half * x)))
                .collect();
            let weights = ws.iter().map(|w| Float::with_val(prec, w * &scale)).collect();
            Ok(DiscreteMeasure::new((a.clone(), b.clone()), nodes, weights))
        }
        DensitySpec::Tabulated { abscissae, values } => {
            let ncells = abscissae.len() - 1;
            let per_cell = (2 * order).div_ceil(ncells).max(3);
            let (x01, w01) = quad::gauss_legendre(per_cell, prec);
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for c in 0..ncells {
                let (lo, hi) = (&abscissae[c], &abscissae[c + 1]);
                let (vlo, vhi) = (&values[c], &values[c + 1]);
                let len = Float::with_val(prec, hi - lo);
                let (cx, cw) = quad::map_to_interval(&x01, &w01, lo, hi);
                for (x, w) in cx.into_iter().zip(cw) {
                    let t = Float::with_val(prec, &x - lo) / &len;
                    let dens = Float::with_val(prec, vlo * Float::with_val(prec, 1 - &t))
                        + Float::with_val(prec, vhi * &t);
                    nodes.push(x);
                    weights.push(w * dens);
                }
            }
            Ok(DiscreteMeasure::new((a.clone(), b.clone()), nodes, weights))
        }
    }
}

/// The triangular table μ_{k,j}, 0 <= k <= j <= p-1, immutable once built.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub p: usize,
    pub order: usize,
    /// rows[k][j-k] = μ_{k,j}
    rows: Vec<Vec<DiscreteMeasure>>,
}

impl Hierarchy {
    pub fn get(&self, k: usize, j: usize) -> &DiscreteMeasure {
        assert!(k <= j && j < self.p);
        &self.rows[k][j - k]
    }

    /// The base rule of σ*_k.
    pub fn base(&self, k: usize) -> &DiscreteMeasure {
        self.get(k, k)
    }
}

/// Build the hierarchy by reweighting the σ*_k rules with cached Cauchy
/// transforms of the previous level.
pub fn build_mu_hierarchy(sys: &StarSystem, quad_order: usize) -> Result<Hierarchy> {
    let prec = sys.prec;
    let p = sys.p;
    let mut rows: Vec<Vec<DiscreteMeasure>> = vec![Vec::new(); p];
    for k in (0..p).rev() {
        let (a, b) = &sys.intervals[k];
        let base = segment_quadrature(&sys.densities[k], (a, b), quad_order, prec)?;
        let mut row = vec![base];
        for j in k + 1..p {
            let prev = &rows[k + 1][j - k - 1];
            let base = &row[0];
            let mut weights = Vec::with_capacity(base.nodes.len());
            for (t, w) in base.nodes.iter().zip(&base.weights) {
                let ct = prev.cauchy_real(t)?;
                weights.push(Float::with_val(prec, w * t) * ct);
            }
            row.push(DiscreteMeasure::new(
                base.interval.clone(),
                base.nodes.clone(),
                weights,
            ));
        }
        rows[k] = row;
    }
    Ok(Hierarchy { p, order: quad_order, rows })
}

/// ŝ_{k,j}(z) = z^{p+k-j} μ̂_{k,j}(z^{p+1})
pub fn s_hat(
    sys: &StarSystem,
    hier: &Hierarchy,
    k: usize,
    j: usize,
    z: &Complex,
) -> Result<Complex> {
    let zp1 = complex_pow(z, sys.p as u32 + 1);
    let mu = hier.get(k, j).cauchy(&zp1)?;
    let e = (sys.p + k - j) as u32;
    Ok(complex_pow(z, e) * mu)
}

pub fn complex_pow(z: &Complex, e: u32) -> Complex {
    let prec = z.prec().0;
    let mut acc = Complex::with_val(prec, (1, 0));
    let mut base = z.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        base = base.clone().square();
        e >>= 1;
    }
    acc
}

/// Star moment ∫ t^{j + i(p+1)} ds_j(t), computed as ∫ τ^i dμ_{0,j}(τ).
/// Moments of s_j in exponents not congruent to j mod (p+1) vanish by
/// rotational symmetry.
pub fn ray_moment(hier: &Hierarchy, j: usize, i: u32) -> Float {
    hier.get(0, j).moment(i)
}

/// ∫ t^l ds_j(t) for arbitrary l >= 0 (zero off the residue class).
pub fn star_moment(sys: &StarSystem, hier: &Hierarchy, j: usize, l: u32) -> Float {
    let p1 = sys.p as u32 + 1;
    if l % p1 != (j as u32) % p1 {
        return Float::with_val(sys.prec, 0);
    }
    ray_moment(hier, j, (l - j as u32) / p1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fl(prec: u32, x: f64) -> Float {
        Float::with_val(prec, x)
    }

    fn paper_p2(prec: u32) -> StarSystem {
        StarSystem::new(
            2,
            vec![(fl(prec, 0.0), fl(prec, 1.0)), (fl(prec, -2.0), fl(prec, -1.0))],
            vec![
                DensitySpec::Power { gamma: fl(prec, 2.0) },
                DensitySpec::Power { gamma: fl(prec, 2.0) },
            ],
            prec,
        )
    }

    #[test]
    fn validation_accepts_paper_system() {
        assert!(validate_system(paper_p2(128)).is_ok());
    }

    #[test]
    fn validation_rejects_origin_clash() {
        let prec = 128;
        let sys = StarSystem::new(
            2,
            vec![(fl(prec, 0.0), fl(prec, 1.0)), (fl(prec, -1.0), fl(prec, 0.0))],
            vec![
                DensitySpec::Power { gamma: fl(prec, 0.0) },
                DensitySpec::Power { gamma: fl(prec, 0.0) },
            ],
            prec,
        );
        let err = validate_system(sys).unwrap_err();
        assert!(err.to_string().contains("origin"));
    }

    #[test]
    fn validation_accepts_chebyshev_density() {
        let prec = 128;
        let sys = StarSystem::new(
            1,
            vec![(fl(prec, 0.0), fl(prec, 1.0))],
            vec![DensitySpec::Jacobi { alpha: fl(prec, -0.5), beta: fl(prec, -0.5) }],
            prec,
        );
        assert!(validate_system(sys).is_ok());
    }

    #[test]
    fn validation_rejects_bad_exponent() {
        let prec = 128;
        let sys = StarSystem::new(
            1,
            vec![(fl(prec, 0.0), fl(prec, 1.0))],
            vec![DensitySpec::Power { gamma: fl(prec, -1.5) }],
            prec,
        );
        assert!(validate_system(sys).is_err());
    }

    #[test]
    fn quadrature_lebesgue_first_moment() {
        let prec = 256;
        let m = segment_quadrature(
            &DensitySpec::Power { gamma: fl(prec, 0.0) },
            (&fl(prec, 0.0), &fl(prec, 1.0)),
            2,
            prec,
        )
        .unwrap();
        let err = (m.moment(1) - fl(prec, 0.5)).abs().to_f64();
        assert!(err < 1e-70, "err={err:e}");
    }

    #[test]
    fn quadrature_power_density_moment() {
        let prec = 256;
        // ∫_0^1 τ^2 |τ|^2 dτ = 1/5
        let m = segment_quadrature(
            &DensitySpec::Power { gamma: fl(prec, 2.0) },
            (&fl(prec, 0.0), &fl(prec, 1.0)),
            8,
            prec,
        )
        .unwrap();
        let expect = Float::with_val(prec, 1) / 5u32;
        let err = (m.moment(2) - expect).abs().to_f64();
        assert!(err < 1e-70, "err={err:e}");
    }

    #[test]
    fn quadrature_jacobi_mass_is_pi() {
        let prec = 256;
        let m = segment_quadrature(
            &DensitySpec::Jacobi { alpha: fl(prec, -0.5), beta: fl(prec, -0.5) },
            (&fl(prec, 0.0), &fl(prec, 1.0)),
            16,
            prec,
        )
        .unwrap();
        let pi = Float::with_val(prec, rug::float::Constant::Pi);
        let err = (m.mass() - pi).abs().to_f64();
        assert!(err < 1e-70, "err={err:e}");
    }

    #[test]
    fn quadrature_mirrors_negative_intervals() {
        let prec = 256;
        // ∫_{-2}^{-1} τ^2 |τ|^2 dτ = (2^5 - 1)/5
        let m = segment_quadrature(
            &DensitySpec::Power { gamma: fl(prec, 2.0) },
            (&fl(prec, -2.0), &fl(prec, -1.0)),
            8,
            prec,
        )
        .unwrap();
        let expect = Float::with_val(prec, 31) / 5u32;
        let err = (m.moment(2) - expect).abs().to_f64();
        assert!(err < 1e-70, "err={err:e}");
        assert!(m.nodes.iter().all(|t| *t < 0));
        assert_eq!(m.declared_sign, Sign::Positive);
    }

    #[test]
    fn cauchy_single_atom() {
        let prec = 128;
        let m = DiscreteMeasure::new(
            (fl(prec, -0.5), fl(prec, 0.5)),
            vec![fl(prec, 0.0)],
            vec![fl(prec, 1.0)],
        );
        let z = Complex::with_val(prec, (2, 0));
        let v = m.cauchy(&z).unwrap();
        assert!((v.real().to_f64() - 0.5).abs() < 1e-30);
    }

    #[test]
    fn cauchy_arcsine_stieltjes_transform() {
        let prec = 256;
        let raw = segment_quadrature(
            &DensitySpec::Jacobi { alpha: fl(prec, -0.5), beta: fl(prec, -0.5) },
            (&fl(prec, -1.0), &fl(prec, 1.0)),
            48,
            prec,
        )
        .unwrap();
        let pi = Float::with_val(prec, rug::float::Constant::Pi);
        let weights = raw.weights.iter().map(|w| Float::with_val(prec, w / &pi)).collect();
        let arcsine = DiscreteMeasure::new(raw.interval.clone(), raw.nodes.clone(), weights);
        for zr in [1.5f64, 2.0, 3.0] {
            let v = arcsine.cauchy_real(&fl(prec, zr)).unwrap();
            let expect = 1.0 / (zr * zr - 1.0).sqrt();
            assert!((v.to_f64() - expect).abs() < 1e-40, "z={zr}");
        }
    }

    #[test]
    fn cauchy_leading_laurent_term() {
        let prec = 256;
        let m = segment_quadrature(
            &DensitySpec::Power { gamma: fl(prec, 2.0) },
            (&fl(prec, 0.0), &fl(prec, 1.0)),
            12,
            prec,
        )
        .unwrap();
        let z = Complex::with_val(prec, (1e9, 3e8));
        let v = m.cauchy(&z).unwrap();
        let lead = Complex::with_val(prec, (m.mass(), 0)) / z.clone();
        let diff = crate::poly::cabs(&(v - lead)).to_f64();
        assert!(diff < 1e-18, "diff={diff:e}");
    }

    #[test]
    fn cauchy_pole_guard_triggers() {
        let prec = 128;
        let m = segment_quadrature(
            &DensitySpec::Power { gamma: fl(prec, 0.0) },
            (&fl(prec, 0.0), &fl(prec, 1.0)),
            8,
            prec,
        )
        .unwrap();
        let z = Complex::with_val(prec, (&m.nodes[3], fl(prec, 0.0)));
        assert!(matches!(m.cauchy(&z), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn hierarchy_p1_is_single_measure() {
        let prec = 128;
        let sys = validate_system(StarSystem::new(
            1,
            vec![(fl(prec, 0.0), fl(prec, 1.0))],
            vec![DensitySpec::Power { gamma: fl(prec, 0.0) }],
            prec,
        ))
        .unwrap();
        let h = build_mu_hierarchy(&sys, 16).unwrap();
        assert_eq!(h.p, 1);
        let err = (h.get(0, 0).mass() - fl(prec, 1.0)).abs().to_f64();
        assert!(err < 1e-30);
    }

    #[test]
    fn hierarchy_off_diagonal_has_constant_sign() {
        let prec = 256;
        let sys = validate_system(paper_p2(prec)).unwrap();
        let h = build_mu_hierarchy(&sys, 32).unwrap();
        // μ̂_{1,1}(τ) > 0 for τ > 0 to the right of supp μ_{1,1} ⊂ [-2,-1],
        // and the extra τ factor keeps it positive
        assert_eq!(h.get(0, 1).declared_sign, Sign::Positive);
        // base masses match the density integrals: ∫_0^1 τ^2 = 1/3
        let third = Float::with_val(prec, 1) / 3u32;
        assert!((h.get(0, 0).mass() - third).abs().to_f64() < 1e-70);
        // ∫_{-2}^{-1} τ^2 dτ = 7/3
        let sev = Float::with_val(prec, 7) / 3u32;
        assert!((h.get(1, 1).mass() - sev).abs().to_f64() < 1e-70);
    }

    #[test]
    fn s_hat_rotation_and_laurent() {
        let prec = 256;
        let sys = validate_system(paper_p2(prec)).unwrap();
        let h = build_mu_hierarchy(&sys, 32).unwrap();
        let z = Complex::with_val(prec, (0.7, 0.9));
        for k in 0..2usize {
            for j in k..2usize {
                let lhs = s_hat(&sys, &h, k, j, &(sys.omega().clone() * &z)).unwrap();
                let rot = sys.omega_pow(k as i64 - j as i64 - 1);
                let rhs = rot * s_hat(&sys, &h, k, j, &z).unwrap();
                let diff = crate::poly::cabs(&(lhs - rhs)).to_f64();
                assert!(diff < 1e-60, "k={k} j={j} diff={diff:e}");
            }
        }
        // ŝ_{k,j}(z) ~ mass * z^{k-j-1}
        let big = Complex::with_val(prec, (4e7, 1e7));
        let v = s_hat(&sys, &h, 0, 1, &big).unwrap();
        let zb = complex_pow(&big, 2);
        let lead = Complex::with_val(prec, (h.get(0, 1).mass(), 0)) / zb;
        let rel = crate::poly::cabs(&(v.clone() - &lead)).to_f64() / crate::poly::cabs(&v).to_f64();
        assert!(rel.abs() < 1e-6, "rel={rel:e}");
    }

    #[test]
    fn ray_moment_matches_hierarchy_weights() {
        let prec = 256;
        let sys = validate_system(paper_p2(prec)).unwrap();
        let h = build_mu_hierarchy(&sys, 32).unwrap();
        let m = ray_moment(&h, 1, 0);
        let direct = h.get(0, 1).mass();
        assert!((m - direct).abs().to_f64() < 1e-70);
        // residue-class selection rule
        let z = star_moment(&sys, &h, 1, 3);
        assert_eq!(z, 0);
        let nz = star_moment(&sys, &h, 1, 4);
        assert!(nz.to_f64().abs() > 0.0);
    }

    #[test]
    fn lebesgue_total_mass_one() {
        let prec = 128;
        let sys = validate_system(StarSystem::new(
            2,
            vec![(fl(prec, 0.0), fl(prec, 1.0)), (fl(prec, -2.0), fl(prec, -1.0))],
            vec![
                DensitySpec::Power { gamma: fl(prec, 0.0) },
                DensitySpec::Power { gamma: fl(prec, 0.0) },
            ],
            prec,
        ))
        .unwrap();
        let h = build_mu_hierarchy(&sys, 16).unwrap();
        assert!((ray_moment(&h, 0, 0) - fl(prec, 1.0)).abs().to_f64() < 1e-30);
    }
}
