//! Finite-n objects against their potential-theoretic limits: zero counting
//! measures against the equilibrium components, nth roots of the second-kind
//! functions against exponentials of the combined potentials, and geometric
//! means of the recurrence coefficients against the equilibrium constants.
//!
//! Weak-star convergence is operationalized as Kolmogorov distance between
//! cumulative distributions; nth-root comparisons are made in log space.

use rug::Float;

use crate::equilibrium::{EquilibriumResult, GridMeasure};
use crate::error::Result;
use crate::indexcomb::z_closed_alpha;
use crate::mop::QnRecord;
use crate::poly::cabs;
use crate::secondkind::SecondKindSet;
use crate::star::StarSystem;

/// Normalized zero-counting measure: sorted atoms with equal mass.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(mut atoms: Vec<f64>) -> Self {
        atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self { atoms }
    }

    pub fn from_floats(v: &[Float]) -> Self {
        Self::new(v.iter().map(|x| x.to_f64()).collect())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.atoms.len();
        if n == 0 {
            return 0.0;
        }
        let count = self.atoms.partition_point(|a| *a <= x);
        count as f64 / n as f64
    }
}

/// Rotationally symmetric lift of a segment measure to the star: each of the
/// p+1 rays carries mass 1/(p+1) of the base.
#[derive(Debug, Clone)]
pub struct StarMeasure {
    pub base: GridMeasure,
    pub p: usize,
}

impl StarMeasure {
    /// Mass on one ray up to radius r (the segment CDF at r^{p+1}, split
    /// evenly across rays).
    pub fn ray_cdf(&self, r: f64) -> f64 {
        let tau = r.abs().powi(self.p as i32 + 1);
        self.base.cdf(tau) / (self.p as f64 + 1.0)
    }

    /// Radial CDF: total mass within |z| <= r.
    pub fn radial_cdf(&self, r: f64) -> f64 {
        (self.p as f64 + 1.0) * self.ray_cdf(r)
    }

    /// U^{μ̃}(z) = U^{μ}(z^{p+1}) / (p+1)
    pub fn potential_complex(&self, zr: f64, zi: f64) -> f64 {
        let p1 = self.p as f64 + 1.0;
        let r = (zr * zr + zi * zi).sqrt().powf(p1);
        let th = zi.atan2(zr) * p1;
        self.base.potential_complex(r * th.cos(), r * th.sin()) / p1
    }
}

/// Kolmogorov (sup-norm CDF) distance between an empirical measure and a
/// unit-mass grid measure on the same interval.
pub fn weakstar_distance(emp: &EmpiricalMeasure, target: &GridMeasure) -> f64 {
    let scale = if target.mass == 0.0 { 1.0 } else { target.mass };
    let mut worst = 0.0f64;
    let mut check = |x: f64| {
        let d = (emp.cdf(x) - target.cdf(x) / scale).abs();
        if d > worst {
            worst = d;
        }
    };
    for &a in &emp.atoms {
        check(a);
        check(a - 1e-14 * (1.0 + a.abs()));
    }
    for &b in &target.bounds {
        check(b);
    }
    worst
}

/// Kolmogorov distance between the zero-counting measure of P_{n,k} and the
/// unit-normalized equilibrium component (p/(p-k)) μ_k.
pub fn check_zero_distribution(
    zeros: &[Float],
    eq: &EquilibriumResult,
    k: usize,
) -> f64 {
    let emp = EmpiricalMeasure::from_floats(zeros);
    weakstar_distance(&emp, &eq.measures[k])
}

/// Radial Kolmogorov distance between the star zero-counting measure of Q_n
/// and the lifted equilibrium component μ̃_0.
pub fn check_star_zero_distribution(rec: &QnRecord, eq: &EquilibriumResult, p: usize) -> f64 {
    let lift = StarMeasure { base: eq.measures[0].clone(), p };
    let n = rec.n as f64;
    let radii: Vec<f64> = rec
        .segment_zeros
        .iter()
        .map(|t| t.to_f64().powf(1.0 / (p as f64 + 1.0)))
        .collect();
    let mut worst = 0.0f64;
    let mut check = |r: f64| {
        let count = radii.partition_point(|x| *x <= r);
        let emp = (rec.ell as f64 + (p as f64 + 1.0) * count as f64) / n;
        let d = (emp - lift.radial_cdf(r)).abs();
        if d > worst {
            worst = d;
        }
    };
    for &r in &radii {
        check(r);
        check(r - 1e-14 * (1.0 + r.abs()));
    }
    for b in &eq.measures[0].bounds {
        check(b.powf(1.0 / (p as f64 + 1.0)));
    }
    worst
}

/// Max log-scale error of |ψ_{n,k}(z)|^{1/Z(n,0)} against the predicted
/// exponential e^{-U^{μ_k} + U^{μ_{k-1}} - 2 Σ_{j<k} w_j} over the probes.
pub fn check_nthroot_psi(
    set: &SecondKindSet,
    eq: &EquilibriumResult,
    k: usize,
    probes: &[rug::Complex],
) -> Result<f64> {
    let p = set.sys.p;
    let n = set.rec.n;
    let z0 = z_closed_alpha(n, 0, p) as f64;
    let wsum: f64 = eq.constants.iter().take(k).sum();
    let mut worst = 0.0f64;
    for z in probes {
        let v = set.psi_complex(k, z)?;
        let log_psi = cabs(&v).ln().to_f64() / z0;
        let (zr, zi) = (z.real().to_f64(), z.imag().to_f64());
        let mut predicted = -2.0 * wsum;
        if k < p {
            predicted -= eq.measures[k].potential_complex(zr, zi);
        }
        if k >= 1 {
            predicted += eq.measures[k - 1].potential_complex(zr, zi);
        }
        let err = (log_psi - predicted).abs();
        worst = worst.max(err);
    }
    Ok(worst)
}

/// log-scale error of K_{n,k}^{1/Z(n,0)} against e^{Σ_{j<=k} w_j}.
pub fn check_knk_limit(set: &SecondKindSet, eq: &EquilibriumResult, k: usize) -> f64 {
    let p = set.sys.p;
    let z0 = z_closed_alpha(set.rec.n, 0, p) as f64;
    let wsum: f64 = eq.constants.iter().take(k + 1).sum();
    let log_k = set.knk[k].clone().ln().to_f64() / z0;
    (log_k - wsum).abs()
}

/// Geometric mean of the residue-class-k recurrence coefficients against the
/// predicted limit e^{-(2p/(p+1)) Σ_{j<=k} w_j}. Returns (mean, prediction,
/// relative error).
pub fn check_an_geometric_mean(
    a: &[(usize, f64)],
    k: usize,
    p: usize,
    eq: &EquilibriumResult,
    m: usize,
) -> (f64, f64, f64) {
    let mut log_sum = 0.0;
    let mut used = 0usize;
    for j in 1..=m {
        let idx = p * j + k;
        if let Some((_, v)) = a.iter().find(|(n, _)| *n == idx) {
            log_sum += v.ln();
            used += 1;
        }
    }
    let gm = (log_sum / used.max(1) as f64).exp();
    let wsum: f64 = eq.constants.iter().take(k + 1).sum();
    let pred = (-(2.0 * p as f64) / (p as f64 + 1.0) * wsum).exp();
    (gm, pred, ((gm - pred) / pred).abs())
}

/// Rotation invariance in modulus of the nth-root prediction on the star:
/// |prediction(ωz)| = |prediction(z)|.
pub fn prediction_rotation_invariant(
    sys: &StarSystem,
    eq: &EquilibriumResult,
    k: usize,
    zr: f64,
    zi: f64,
) -> (f64, f64) {
    let p = sys.p;
    let pred = |xr: f64, xi: f64| -> f64 {
        let mut v = 0.0;
        if k < p {
            v -= StarMeasure { base: eq.measures[k].clone(), p }.potential_complex(xr, xi);
        }
        if k >= 1 {
            v += StarMeasure { base: eq.measures[k - 1].clone(), p }.potential_complex(xr, xi);
        }
        v
    };
    let angle = 2.0 * std::f64::consts::PI / (p as f64 + 1.0);
    let (s, c) = angle.sin_cos();
    (pred(zr, zi), pred(zr * c - zi * s, zr * s + zi * c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::scalar_equilibrium_with_field;

    #[test]
    fn identical_discretizations_have_zero_distance() {
        let g = GridMeasure::uniform((0.0, 1.0), 32, 1.0);
        // atoms at the cell midpoints weighted evenly approximate the grid
        let emp = EmpiricalMeasure::new(g.midpoints());
        let d = weakstar_distance(&emp, &g);
        assert!(d <= 1.0 / 32.0 + 1e-12, "d={d}");
    }

    #[test]
    fn uniform_atoms_vs_uniform_density_staircase_bound() {
        for n in [10usize, 50, 200] {
            let atoms: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
            let emp = EmpiricalMeasure::new(atoms);
            let g = GridMeasure::uniform((0.0, 1.0), 400, 1.0);
            let d = weakstar_distance(&emp, &g);
            assert!(d <= 1.0 / n as f64 + 1e-2, "n={n} d={d}");
        }
    }

    #[test]
    fn chebyshev_atoms_approach_arcsine() {
        let (g, _) = scalar_equilibrium_with_field((-1.0, 1.0), |_| 0.0, 512, 1e-8).unwrap();
        let mut prev = f64::INFINITY;
        for n in [8usize, 32, 128] {
            let atoms: Vec<f64> = (1..=n)
                .map(|k| (std::f64::consts::PI * (2 * k - 1) as f64 / (2 * n) as f64).cos())
                .collect();
            let emp = EmpiricalMeasure::new(atoms);
            let d = weakstar_distance(&emp, &g);
            assert!(d < prev, "n={n} d={d} prev={prev}");
            prev = d;
        }
        assert!(prev < 0.02);
    }

    #[test]
    fn ray_cdf_is_fraction_of_segment_cdf() {
        let g = GridMeasure::uniform((0.0, 1.0), 64, 1.0);
        let lift = StarMeasure { base: g.clone(), p: 2 };
        for r in [0.3f64, 0.7, 0.95] {
            let lhs = lift.ray_cdf(r);
            let rhs = g.cdf(r.powi(3)) / 3.0;
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn potential_lift_identity() {
        // U^{μ}(z^{p+1}) = (p+1) U^{μ̃}(z)
        let g = GridMeasure::uniform((0.2, 1.0), 128, 1.0);
        let lift = StarMeasure { base: g.clone(), p: 2 };
        let (zr, zi) = (0.9f64, 1.2f64);
        let p1 = 3.0f64;
        let r = (zr * zr + zi * zi).sqrt().powf(p1);
        let th = zi.atan2(zr) * p1;
        let lhs = g.potential_complex(r * th.cos(), r * th.sin());
        let rhs = p1 * lift.potential_complex(zr, zi);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn complex_potential_matches_midpoint_sum() {
        let g = GridMeasure::uniform((0.0, 1.0), 256, 1.0);
        let (zr, zi) = (0.4, 0.8);
        let exact = g.potential_complex(zr, zi);
        let mut approx = 0.0;
        for (i, w) in g.weights.iter().enumerate() {
            let m = 0.5 * (g.bounds[i] + g.bounds[i + 1]);
            approx += w * (-0.5 * ((zr - m).powi(2) + zi * zi).ln());
        }
        assert!((exact - approx).abs() < 1e-4, "exact={exact} approx={approx}");
    }
}
