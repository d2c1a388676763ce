//! Vector equilibrium problem for the Nikishin interaction.
//!
//! Minimizes `J(ν) = Σ I(ν_k) - Σ I(ν_k, ν_{k+1})` over vectors of positive
//! measures with masses `1 - k/p` on the prescribed compacts, discretized as
//! piecewise-constant densities on Chebyshev-spaced cells (denser near the
//! endpoints, where equilibrium densities blow up like inverse square roots).
//! All cell-cell log-kernel integrals use the exact closed form, so the
//! diagonal singularity never appears. The minimizer runs spectral projected
//! gradient with a nonmonotone line search; everything here is `f64`.

use crate::error::{Error, Result};

/// Piecewise-constant measure on contiguous cells of an interval.
#[derive(Debug, Clone)]
pub struct GridMeasure {
    pub interval: (f64, f64),
    /// cell boundaries, len = cells + 1
    pub bounds: Vec<f64>,
    /// mass per cell
    pub weights: Vec<f64>,
    pub mass: f64,
}

impl GridMeasure {
    /// Chebyshev-spaced cells with a uniform mass start.
    pub fn uniform(interval: (f64, f64), cells: usize, mass: f64) -> Self {
        let (a, b) = interval;
        let bounds: Vec<f64> = (0..=cells)
            .map(|j| {
                let t = (std::f64::consts::PI * j as f64 / cells as f64).cos();
                a + (b - a) * 0.5 * (1.0 - t)
            })
            .collect();
        let weights = vec![mass / cells as f64; cells];
        GridMeasure { interval, bounds, weights, mass }
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.bounds.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Logarithmic potential U(x) = ∫ log 1/|x-t| dν(t), exact per cell.
    pub fn potential(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let (c, d) = (self.bounds[i], self.bounds[i + 1]);
            acc += w * avg_neg_log_dist_point(x, c, d);
        }
        acc
    }

    /// Logarithmic potential at a complex point, exact per cell:
    /// Re ∫ -log(z - y) dy via the antiderivative ξ - ξ log ξ.
    pub fn potential_complex(&self, zr: f64, zi: f64) -> f64 {
        if zi == 0.0 {
            return self.potential(zr);
        }
        let re_phi1 = |xr: f64, xi: f64| -> f64 {
            // Re(ξ - ξ Log ξ) with ξ = xr + i xi
            let ln_abs = 0.5 * (xr * xr + xi * xi).ln();
            let arg = xi.atan2(xr);
            xr - (xr * ln_abs - xi * arg)
        };
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let (c, d) = (self.bounds[i], self.bounds[i + 1]);
            acc += w * (re_phi1(zr - c, zi) - re_phi1(zr - d, zi)) / (d - c);
        }
        acc
    }

    /// CDF evaluated at x (piecewise linear).
    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            let (c, d) = (self.bounds[i], self.bounds[i + 1]);
            if x >= d {
                acc += w;
            } else if x > c {
                acc += w * (x - c) / (d - c);
            } else {
                break;
            }
        }
        acc
    }
}

/// antiderivative machinery for the exact log-kernel integrals:
/// Φ(t) = (3/4) t^2 - (t^2/2) log|t| has Φ'' = -log|t|
fn phi2(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        0.75 * t * t - 0.5 * t * t * t.abs().ln()
    }
}

/// φ(t) = t - t log|t| has φ' = -log|t|
fn phi1(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t - t * t.abs().ln()
    }
}

/// average over [c,d] of -log|x - y| dy, normalized by the cell length
fn avg_neg_log_dist_point(x: f64, c: f64, d: f64) -> f64 {
    (phi1(x - c) - phi1(x - d)) / (d - c)
}

/// average over [c,d] x [e,f] of -log|x-y|, normalized by both lengths
fn avg_neg_log_dist_cells(c: f64, d: f64, e: f64, f: f64) -> f64 {
    (phi2(d - e) + phi2(c - f) - phi2(c - e) - phi2(d - f)) / ((d - c) * (f - e))
}

/// Dense symmetric kernel matrix of averaged -log distances between the cells
/// of two grids (the same grid for self-energy).
fn kernel_matrix(ga: &GridMeasure, gb: &GridMeasure) -> Vec<Vec<f64>> {
    let (na, nb) = (ga.cells(), gb.cells());
    let mut m = vec![vec![0.0; nb]; na];
    for i in 0..na {
        let (c, d) = (ga.bounds[i], ga.bounds[i + 1]);
        for j in 0..nb {
            let (e, f) = (gb.bounds[j], gb.bounds[j + 1]);
            m[i][j] = avg_neg_log_dist_cells(c, d, e, f);
        }
    }
    m
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Total energy J of a vector of grid measures with the Nikishin coupling.
pub fn energy(measures: &[GridMeasure]) -> Result<f64> {
    for pair in measures.windows(2) {
        let (a0, b0) = pair[0].interval;
        let (a1, b1) = pair[1].interval;
        if b0.min(b1) > a0.max(a1) && !(b1 <= a0 || b0 <= a1) {
            return Err(Error::InvalidSystem(
                "consecutive equilibrium supports overlap".into(),
            ));
        }
    }
    let mut j = 0.0;
    for (k, g) in measures.iter().enumerate() {
        let kk = kernel_matrix(g, g);
        let gv = matvec(&kk, &g.weights);
        j += g.weights.iter().zip(&gv).map(|(a, b)| a * b).sum::<f64>();
        if k + 1 < measures.len() {
            let kx = kernel_matrix(g, &measures[k + 1]);
            let cv = matvec(&kx, &measures[k + 1].weights);
            j -= g.weights.iter().zip(&cv).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    Ok(j)
}

/// Result of the vector equilibrium solve.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub measures: Vec<GridMeasure>,
    pub constants: Vec<f64>,
    /// per-component spread (max - min) of the combined potential over the
    /// cells carrying mass; an error bar on the constants
    pub constant_spread: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
}

impl EquilibriumResult {
    /// W_k(x) = U^{μ_k}(x) - (1/2) U^{μ_{k-1}}(x) - (1/2) U^{μ_{k+1}}(x)
    pub fn combined_potential(&self, k: usize, x: f64) -> f64 {
        let mut w = self.measures[k].potential(x);
        if k >= 1 {
            w -= 0.5 * self.measures[k - 1].potential(x);
        }
        if k + 1 < self.measures.len() {
            w -= 0.5 * self.measures[k + 1].potential(x);
        }
        w
    }

    /// Strict exterior inequality: 2U^{μ_k} - U^{μ_{k-1}} - U^{μ_{k+1}} - 2w_k
    pub fn exterior_defect(&self, k: usize, x: f64) -> f64 {
        2.0 * self.combined_potential(k, x) - 2.0 * self.constants[k]
    }
}

/// projection onto the scaled simplex { w >= 0, sum w = mass }
fn project_simplex(w: &mut [f64], mass: f64) {
    let n = w.len();
    let mut u: Vec<f64> = w.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - mass) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            rho = i;
            theta = t;
        }
    }
    let _ = rho;
    for x in w.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    // clean tiny drift
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        let c = mass / s;
        for x in w.iter_mut() {
            *x *= c;
        }
    } else {
        for x in w.iter_mut() {
            *x = mass / n as f64;
        }
    }
}

struct Quadratic {
    /// self-kernels per component
    selfk: Vec<Vec<Vec<f64>>>,
    /// cross-kernels between consecutive components
    crossk: Vec<Vec<Vec<f64>>>,
    /// per-cell external field (linear term), or empty
    field: Vec<Vec<f64>>,
}

impl Quadratic {
    fn value(&self, w: &[Vec<f64>]) -> f64 {
        let mut j = 0.0;
        for (k, wk) in w.iter().enumerate() {
            let gv = matvec(&self.selfk[k], wk);
            j += wk.iter().zip(&gv).map(|(a, b)| a * b).sum::<f64>();
            if k + 1 < w.len() {
                let cv = matvec(&self.crossk[k], &w[k + 1]);
                j -= wk.iter().zip(&cv).map(|(a, b)| a * b).sum::<f64>();
            }
            if !self.field[k].is_empty() {
                j += wk.iter().zip(&self.field[k]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        j
    }

    fn gradient(&self, w: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let p = w.len();
        let mut g: Vec<Vec<f64>> = Vec::with_capacity(p);
        for k in 0..p {
            let mut gk: Vec<f64> = matvec(&self.selfk[k], &w[k]).iter().map(|v| 2.0 * v).collect();
            if k + 1 < p {
                let cv = matvec(&self.crossk[k], &w[k + 1]);
                for (a, b) in gk.iter_mut().zip(&cv) {
                    *a -= b;
                }
            }
            if k >= 1 {
                // transpose product: rows of crossk[k-1] index component k-1
                let ck = &self.crossk[k - 1];
                for (j, a) in gk.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for (i, wi) in w[k - 1].iter().enumerate() {
                        s += ck[i][j] * wi;
                    }
                    *a -= s;
                }
            }
            if !self.field[k].is_empty() {
                for (a, b) in gk.iter_mut().zip(&self.field[k]) {
                    *a += b;
                }
            }
            g.push(gk);
        }
        g
    }
}

fn spg_minimize(
    q: &Quadratic,
    w0: Vec<Vec<f64>>,
    masses: &[f64],
    max_iter: usize,
    rel_tol: f64,
) -> (Vec<Vec<f64>>, f64, usize) {
    let mut w = w0;
    for (wk, m) in w.iter_mut().zip(masses) {
        project_simplex(wk, *m);
    }
    let mut j = q.value(&w);
    let mut g = q.gradient(&w);
    let mut step = 1.0;
    let mut history = vec![j];
    let mut window_best = j;
    let mut window_count = 0usize;
    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        // trial point with projected gradient step
        let mut trial: Vec<Vec<f64>> = w
            .iter()
            .zip(&g)
            .map(|(wk, gk)| wk.iter().zip(gk).map(|(a, b)| a - step * b).collect())
            .collect();
        for (tk, m) in trial.iter_mut().zip(masses) {
            project_simplex(tk, *m);
        }
        // nonmonotone Armijo on the last 10 values
        let fmax = history.iter().rev().take(10).cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut dginner = 0.0;
        for (k, tk) in trial.iter().enumerate() {
            for (i, t) in tk.iter().enumerate() {
                dginner += g[k][i] * (t - w[k][i]);
            }
        }
        let mut lambda = 1.0;
        let mut jt;
        loop {
            let cand: Vec<Vec<f64>> = w
                .iter()
                .zip(&trial)
                .map(|(wk, tk)| {
                    wk.iter().zip(tk).map(|(a, b)| a + lambda * (b - a)).collect()
                })
                .collect();
            jt = q.value(&cand);
            if jt <= fmax + 1e-4 * lambda * dginner || lambda < 1e-10 {
                // accept cand
                let gt = q.gradient(&cand);
                // BB step from the accepted move
                let mut ss = 0.0;
                let mut sy = 0.0;
                for (k, ck) in cand.iter().enumerate() {
                    for (i, c) in ck.iter().enumerate() {
                        let s = c - w[k][i];
                        let y = gt[k][i] - g[k][i];
                        ss += s * s;
                        sy += s * y;
                    }
                }
                step = if sy > 1e-30 { (ss / sy).clamp(1e-10, 1e10) } else { 1.0 };
                w = cand;
                g = gt;
                break;
            }
            lambda *= 0.5;
        }
        j = jt;
        history.push(j);
        if history.len() > 64 {
            history.remove(0);
        }
        // windowed convergence: relative decrease below tol over 50 iters
        window_count += 1;
        if window_count >= 50 {
            let rel = (window_best - j) / j.abs().max(1e-300);
            if rel.abs() < rel_tol {
                break;
            }
            window_best = j;
            window_count = 0;
        }
    }
    (w, j, iter)
}

/// Solve the vector equilibrium problem on the intervals `e` with component
/// masses `1 - k/p`, via spectral projected gradient from a uniform start.
/// Deterministic; the convexity of the discretized energy is certified by a
/// Cholesky pass before descending.
pub fn solve_vector_equilibrium(
    e: &[(f64, f64)],
    cells: usize,
    tol: f64,
) -> Result<EquilibriumResult> {
    let p = e.len();
    if p == 0 {
        return Err(Error::InvalidSystem("empty system".into()));
    }
    for pair in e.windows(2) {
        let (a0, b0) = pair[0];
        let (a1, b1) = pair[1];
        if !(b0 <= a1 || b1 <= a0) {
            return Err(Error::InvalidSystem(
                "consecutive equilibrium supports overlap".into(),
            ));
        }
    }
    let masses: Vec<f64> = (0..p).map(|k| 1.0 - k as f64 / p as f64).collect();
    let grids: Vec<GridMeasure> = e
        .iter()
        .zip(&masses)
        .map(|(iv, m)| GridMeasure::uniform(*iv, cells, *m))
        .collect();

    let selfk: Vec<Vec<Vec<f64>>> = grids.iter().map(|g| kernel_matrix(g, g)).collect();
    let mut crossk = Vec::new();
    for k in 0..p.saturating_sub(1) {
        crossk.push(kernel_matrix(&grids[k], &grids[k + 1]));
    }
    certify_convexity(&selfk, &crossk)?;
    let q = Quadratic { selfk, crossk, field: vec![Vec::new(); p] };

    let w0: Vec<Vec<f64>> = grids.iter().map(|g| g.weights.clone()).collect();
    let (w, j, iters) = spg_minimize(&q, w0, &masses, 100_000, 1e-12);
    if iters >= 100_000 {
        return Err(Error::NoConvergence { iters, residual: f64::NAN });
    }

    let mut measures = grids;
    for (g, wk) in measures.iter_mut().zip(&w) {
        g.weights = wk.clone();
    }
    finish_equilibrium(measures, j, iters, tol)
}

fn finish_equilibrium(
    measures: Vec<GridMeasure>,
    energy: f64,
    iterations: usize,
    _tol: f64,
) -> Result<EquilibriumResult> {
    let p = measures.len();
    let mut constants = Vec::with_capacity(p);
    let mut spreads = Vec::with_capacity(p);
    for k in 0..p {
        let g = &measures[k];
        let mids = g.midpoints();
        let cutoff = g.mass / (2.0 * g.cells() as f64);
        let mut acc = 0.0;
        let mut wsum = 0.0;
        let mut wmin = f64::INFINITY;
        let mut wmax = f64::NEG_INFINITY;
        for (i, &wi) in g.weights.iter().enumerate() {
            if wi <= cutoff {
                continue;
            }
            let mut v = g.potential(mids[i]);
            if k >= 1 {
                v -= 0.5 * measures[k - 1].potential(mids[i]);
            }
            if k + 1 < p {
                v -= 0.5 * measures[k + 1].potential(mids[i]);
            }
            acc += wi * v;
            wsum += wi;
            wmin = wmin.min(v);
            wmax = wmax.max(v);
        }
        constants.push(acc / wsum);
        spreads.push(wmax - wmin);
    }
    Ok(EquilibriumResult { measures, constants, constant_spread: spreads, energy, iterations })
}

/// Positive-definiteness certificate of the discretized Hessian (2 selfk on
/// the diagonal blocks, -crossk on the neighbors) by Cholesky.
fn certify_convexity(selfk: &[Vec<Vec<f64>>], crossk: &[Vec<Vec<f64>>]) -> Result<()> {
    let p = selfk.len();
    let sizes: Vec<usize> = selfk.iter().map(|m| m.len()).collect();
    let total: usize = sizes.iter().sum();
    // assemble dense block matrix
    let mut h = vec![vec![0.0f64; total]; total];
    let mut offs = vec![0usize; p + 1];
    for k in 0..p {
        offs[k + 1] = offs[k] + sizes[k];
    }
    for k in 0..p {
        for i in 0..sizes[k] {
            for j in 0..sizes[k] {
                h[offs[k] + i][offs[k] + j] = 2.0 * selfk[k][i][j];
            }
        }
        if k + 1 < p {
            for i in 0..sizes[k] {
                for j in 0..sizes[k + 1] {
                    h[offs[k] + i][offs[k + 1] + j] = -crossk[k][i][j];
                    h[offs[k + 1] + j][offs[k] + i] = -crossk[k][i][j];
                }
            }
        }
    }
    // Cholesky
    for i in 0..total {
        for j in 0..=i {
            let mut s = h[i][j];
            for k in 0..j {
                s -= h[i][k] * h[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::StructuralFailure(format!(
                        "discretized interaction Hessian not positive definite at pivot {i}"
                    )));
                }
                h[i][j] = s.sqrt();
            } else {
                h[i][j] = s / h[j][j];
            }
        }
    }
    Ok(())
}

/// Scalar equilibrium problem with continuous external field on one interval:
/// minimize I(μ) + ∫ φ dμ over probability measures.
pub fn scalar_equilibrium_with_field<F: Fn(f64) -> f64>(
    e: (f64, f64),
    field: F,
    cells: usize,
    _tol: f64,
) -> Result<(GridMeasure, f64)> {
    let grid = GridMeasure::uniform(e, cells, 1.0);
    let selfk = vec![kernel_matrix(&grid, &grid)];
    let fvals: Vec<f64> = grid.midpoints().iter().map(|&x| field(x)).collect();
    let q = Quadratic { selfk, crossk: Vec::new(), field: vec![fvals.clone()] };
    let (w, _, iters) = spg_minimize(&q, vec![grid.weights.clone()], &[1.0], 100_000, 1e-12);
    if iters >= 100_000 {
        return Err(Error::NoConvergence { iters, residual: f64::NAN });
    }
    let mut g = grid;
    g.weights = w.into_iter().next().unwrap();
    // constant: mass-weighted average of U + φ over loaded cells
    let mids = g.midpoints();
    let cutoff = g.mass / (2.0 * g.cells() as f64);
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for (i, &wi) in g.weights.iter().enumerate() {
        if wi <= cutoff {
            continue;
        }
        acc += wi * (g.potential(mids[i]) + fvals[i]);
        wsum += wi;
    }
    let w_const = acc / wsum;
    Ok((g, w_const))
}
