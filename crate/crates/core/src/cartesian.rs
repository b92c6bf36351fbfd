//! Small 3-d Cartesian boxes for the profile-decomposition engine and the
//! translated-bump witness.
//!
//! Cells are centered at x_i = -L + (i + 1/2) h with h = 2L/n and n even, so
//! the origin is never a sample point and |x|^{-2} stays finite by the
//! half-cell offset. The grid is non-periodic; stencils treat the outside as
//! zero and translations zero-fill.

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use num_complex::Complex64;
use std::sync::Arc;

/// 6th-order centered first-derivative stencil weights (divided by h).
const D1_W: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];

#[derive(Debug, Clone, PartialEq)]
pub struct CartesianGrid {
    params: ProblemParams,
    n: usize,
    half: f64,
    h: f64,
}

impl CartesianGrid {
    pub fn build(params: ProblemParams, half_extent: f64, n: usize) -> Result<Arc<Self>> {
        params.validate()?;
        if params.d != 3 {
            return Err(Error::InvalidParams {
                reason: format!("Cartesian grids are 3-d only, got d = {}", params.d),
            });
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::InvalidParams {
                reason: format!("half extent {half_extent} must be positive"),
            });
        }
        if !(8..=128).contains(&n) || !n.is_multiple_of(2) {
            return Err(Error::Resolution { needed: 8, got: n });
        }
        let h = 2.0 * half_extent / n as f64;
        Ok(Arc::new(Self {
            params,
            n,
            half: half_extent,
            h,
        }))
    }

    pub fn params(&self) -> ProblemParams {
        self.params
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn half_extent(&self) -> f64 {
        self.half
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn cell_count(&self) -> usize {
        self.n * self.n * self.n
    }
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half + (i as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    pub fn sample(&self, f: impl Fn([f64; 3]) -> Complex64) -> Vec<Complex64> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.cell_count());
        for ix in 0..n {
            let x = self.coord(ix);
            for iy in 0..n {
                let y = self.coord(iy);
                for iz in 0..n {
                    out.push(f([x, y, self.coord(iz)]));
                }
            }
        }
        out
    }

    /// Snap a shift vector to the cell lattice; errors if it is not on it.
    pub fn lattice_offset(&self, shift: [f64; 3]) -> Result<[i64; 3]> {
        let mut out = [0i64; 3];
        for k in 0..3 {
            let cells = shift[k] / self.h;
            let snapped = cells.round();
            if (cells - snapped).abs() > 1e-6 {
                return Err(Error::Generation {
                    reason: format!(
                        "shift component {} = {} is not a lattice multiple of h = {}",
                        k, shift[k], self.h
                    ),
                });
            }
            out[k] = snapped as i64;
        }
        Ok(out)
    }
}

/// Complex samples on a Cartesian grid.
#[derive(Debug, Clone)]
pub struct CartesianField {
    grid: Arc<CartesianGrid>,
    values: Vec<Complex64>,
}

impl CartesianField {
    pub fn new(grid: Arc<CartesianGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::Mismatch {
                reason: format!(
                    "sample count {} does not match cell count {}",
                    values.len(),
                    grid.cell_count()
                ),
            });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Mismatch {
                reason: "non-finite Cartesian sample".into(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn sample(grid: Arc<CartesianGrid>, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let values = grid.as_ref().sample(f);
        Self { grid, values }
    }

    pub fn zero(grid: Arc<CartesianGrid>) -> Self {
        let n = grid.cell_count();
        Self {
            grid,
            values: vec![Complex64::ZERO; n],
        }
    }

    pub fn grid(&self) -> &Arc<CartesianGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn ledger(&self, params: ProblemParams) -> CartesianLedger {
        cartesian_functionals(&self.grid, &self.values, params)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        l2_norm_sq(&self.grid, &self.values)
    }

    pub fn translated(&self, offset: [i64; 3]) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: translate_lattice(&self.grid, &self.values, offset),
        }
    }

    /// Largest Chebyshev distance from `center` of any cell whose magnitude
    /// exceeds `rel` times the peak.
    pub fn support_radius_from(&self, center: [f64; 3], rel: f64) -> f64 {
        let peak = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let thr = rel * peak;
        let n = self.grid.n();
        let mut out: f64 = 0.0;
        for ix in 0..n {
            let x = self.grid.coord(ix);
            for iy in 0..n {
                let y = self.grid.coord(iy);
                for iz in 0..n {
                    let i = self.grid.idx(ix, iy, iz);
                    if self.values[i].norm() > thr {
                        let z = self.grid.coord(iz);
                        out = out
                            .max((x - center[0]).abs())
                            .max((y - center[1]).abs())
                            .max((z - center[2]).abs());
                    }
                }
            }
        }
        out
    }
}

/// Functionals of a Cartesian sample vector; same conventions as the radial
/// ledger. Gradients use 6th-order centered differences with zero padding.
#[derive(Debug, Clone, Copy)]
pub struct CartesianLedger {
    pub mass: f64,
    pub gradient_sq: f64,
    pub hardy: f64,
    pub h1c_sq: f64,
    pub lq_crit: f64,
}

pub fn cartesian_functionals(
    grid: &CartesianGrid,
    values: &[Complex64],
    params: ProblemParams,
) -> CartesianLedger {
    let q = params.critical_exponent();
    let vol = grid.cell_volume();
    let n = grid.n();

    let mut mass = 0.0;
    let mut hardy = 0.0;
    let mut lq = 0.0;
    for ix in 0..n {
        let x = grid.coord(ix);
        for iy in 0..n {
            let y = grid.coord(iy);
            for iz in 0..n {
                let z = grid.coord(iz);
                let a2 = values[grid.idx(ix, iy, iz)].norm_sqr();
                mass += a2;
                hardy += a2 / (x * x + y * y + z * z);
                lq += a2.powf(q / 2.0);
            }
        }
    }
    mass *= vol;
    hardy *= vol;
    lq *= vol;

    let gradient_sq = gradient_energy(grid, values) ;
    CartesianLedger {
        mass,
        gradient_sq,
        hardy,
        h1c_sq: gradient_sq - params.c * hardy,
        lq_crit: lq,
    }
}

/// ∫ |∇u|² dx by 6th-order centered differences (zero outside the box).
pub fn gradient_energy(grid: &CartesianGrid, values: &[Complex64]) -> f64 {
    let n = grid.n();
    let inv_h = 1.0 / grid.spacing();
    let mut acc = 0.0;
    let get = |ix: i64, iy: i64, iz: i64| -> Complex64 {
        if ix < 0 || iy < 0 || iz < 0 || ix >= n as i64 || iy >= n as i64 || iz >= n as i64 {
            Complex64::ZERO
        } else {
            values[grid.idx(ix as usize, iy as usize, iz as usize)]
        }
    };
    for ix in 0..n as i64 {
        for iy in 0..n as i64 {
            for iz in 0..n as i64 {
                let mut dx = Complex64::ZERO;
                let mut dy = Complex64::ZERO;
                let mut dz = Complex64::ZERO;
                for (k, wk) in D1_W.iter().enumerate() {
                    let o = k as i64 + 1;
                    dx += wk * (get(ix + o, iy, iz) - get(ix - o, iy, iz));
                    dy += wk * (get(ix, iy + o, iz) - get(ix, iy - o, iz));
                    dz += wk * (get(ix, iy, iz + o) - get(ix, iy, iz - o));
                }
                acc += dx.norm_sqr() + dy.norm_sqr() + dz.norm_sqr();
            }
        }
    }
    acc * inv_h * inv_h * grid.cell_volume()
}

/// Pointwise |∇u|² density (same stencils), used by the windowed-content scan.
pub fn gradient_density(grid: &CartesianGrid, values: &[Complex64]) -> Vec<f64> {
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let mut out = vec![0.0; values.len()];
    let get = |ix: i64, iy: i64, iz: i64| -> Complex64 {
        if ix < 0 || iy < 0 || iz < 0 || ix >= n as i64 || iy >= n as i64 || iz >= n as i64 {
            Complex64::ZERO
        } else {
            values[grid.idx(ix as usize, iy as usize, iz as usize)]
        }
    };
    for ix in 0..n as i64 {
        for iy in 0..n as i64 {
            for iz in 0..n as i64 {
                let mut dx = Complex64::ZERO;
                let mut dy = Complex64::ZERO;
                let mut dz = Complex64::ZERO;
                for (k, wk) in D1_W.iter().enumerate() {
                    let o = k as i64 + 1;
                    dx += wk * (get(ix + o, iy, iz) - get(ix - o, iy, iz));
                    dy += wk * (get(ix, iy + o, iz) - get(ix, iy - o, iz));
                    dz += wk * (get(ix, iy, iz + o) - get(ix, iy, iz - o));
                }
                out[grid.idx(ix as usize, iy as usize, iz as usize)] =
                    (dx.norm_sqr() + dy.norm_sqr() + dz.norm_sqr()) * inv_h2;
            }
        }
    }
    out
}

pub fn l2_norm_sq(grid: &CartesianGrid, values: &[Complex64]) -> f64 {
    grid.cell_volume() * values.iter().map(|v| v.norm_sqr()).sum::<f64>()
}

pub fn inner(grid: &CartesianGrid, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    grid.cell_volume()
        * a.iter()
            .zip(b)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
}

pub fn lq_norm_pow(grid: &CartesianGrid, values: &[Complex64], q: f64) -> f64 {
    grid.cell_volume()
        * values
            .iter()
            .map(|v| v.norm_sqr().powf(q / 2.0))
            .sum::<f64>()
}

/// Translate by whole cells, zero-filling what enters from outside.
pub fn translate_lattice(
    grid: &CartesianGrid,
    values: &[Complex64],
    offset: [i64; 3],
) -> Vec<Complex64> {
    let n = grid.n() as i64;
    let mut out = vec![Complex64::ZERO; values.len()];
    for ix in 0..n {
        let sx = ix - offset[0];
        if sx < 0 || sx >= n {
            continue;
        }
        for iy in 0..n {
            let sy = iy - offset[1];
            if sy < 0 || sy >= n {
                continue;
            }
            for iz in 0..n {
                let sz = iz - offset[2];
                if sz < 0 || sz >= n {
                    continue;
                }
                out[grid.idx(ix as usize, iy as usize, iz as usize)] =
                    values[grid.idx(sx as usize, sy as usize, sz as usize)];
            }
        }
    }
    out
}

/// ∫ |x|^{-2} V(x - shift) w̄(x) dx on the grid; the half-cell offset keeps
/// the weight finite. `shift` must lie on the cell lattice.
pub fn hardy_cross_integral(
    grid: &CartesianGrid,
    v: &[Complex64],
    w: &[Complex64],
    shift: [f64; 3],
) -> Result<Complex64> {
    let off = grid.lattice_offset(shift)?;
    let vt = translate_lattice(grid, v, off);
    let n = grid.n();
    let mut acc = Complex64::ZERO;
    for ix in 0..n {
        let x = grid.coord(ix);
        for iy in 0..n {
            let y = grid.coord(iy);
            for iz in 0..n {
                let z = grid.coord(iz);
                let i = grid.idx(ix, iy, iz);
                acc += vt[i] * w[i].conj() / (x * x + y * y + z * z);
            }
        }
    }
    Ok(acc * grid.cell_volume())
}

/// Magnitude of the Hardy cross term; the quantity whose decay underlies the
/// Ḣ¹_c norm expansion (escaping translates, Case 1; shrinking shifts against
/// weakly-null oscillation, Case 2).
pub fn hardy_cross_term(
    grid: &CartesianGrid,
    v: &[Complex64],
    w: &[Complex64],
    shift: [f64; 3],
) -> Result<f64> {
    Ok(hardy_cross_integral(grid, v, w, shift)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<CartesianGrid> {
        let p = ProblemParams::new(3, 0.125).unwrap();
        CartesianGrid::build(p, 8.0, 32).unwrap()
    }

    #[test]
    fn build_rejects_bad_sizes() {
        let p = ProblemParams::new(3, 0.0).unwrap();
        assert!(CartesianGrid::build(p, 8.0, 33).is_err());
        assert!(CartesianGrid::build(p, 8.0, 4).is_err());
        assert!(CartesianGrid::build(p, 8.0, 256).is_err());
        let p4 = ProblemParams::new(4, 0.0).unwrap();
        assert!(CartesianGrid::build(p4, 8.0, 32).is_err());
    }

    #[test]
    fn origin_is_never_sampled() {
        let g = grid();
        let mut min_r2 = f64::INFINITY;
        for i in 0..g.n() {
            let x = g.coord(i);
            min_r2 = min_r2.min(x.abs());
        }
        assert!(min_r2 >= 0.5 * g.spacing() - 1e-12);
    }

    #[test]
    fn gaussian_functionals_match_closed_forms() {
        let g = grid();
        let a = 0.35;
        let u = g.sample(|x| {
            Complex64::new((-a * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), 0.0)
        });
        let led = cartesian_functionals(&g, &u, g.params());
        // ∫ e^{-2a|x|²} = (π/2a)^{3/2}; ∫ |∇e^{-a|x|²}|² = 3a (π/2a)^{3/2}
        let pi = std::f64::consts::PI;
        let mass_exact = (pi / (2.0 * a)).powf(1.5);
        let grad_exact = 3.0 * a * mass_exact;
        assert!(((led.mass - mass_exact) / mass_exact).abs() < 1e-6);
        assert!(
            ((led.gradient_sq - grad_exact) / grad_exact).abs() < 2e-3,
            "grad {} vs {}",
            led.gradient_sq,
            grad_exact
        );
        assert_eq!(led.h1c_sq, led.gradient_sq - 0.125 * led.hardy);
    }

    #[test]
    fn lattice_translation_is_exact() {
        let g = grid();
        let u = g.sample(|x| {
            Complex64::new(
                (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(),
                0.1 * x[0],
            )
        });
        let h = g.spacing();
        let off = g.lattice_offset([4.0 * h, 0.0, -2.0 * h]).unwrap();
        assert_eq!(off, [4, 0, -2]);
        let v = translate_lattice(&g, &u, off);
        let direct = g.sample(|x| {
            let y = [x[0] - 4.0 * h, x[1], x[2] + 2.0 * h];
            if y.iter().any(|c| c.abs() > g.half_extent()) {
                Complex64::ZERO
            } else {
                Complex64::new((-(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])).exp(), 0.1 * y[0])
            }
        });
        for (a, b) in v.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(g.lattice_offset([0.3 * h, 0.0, 0.0]).is_err());
    }

    #[test]
    fn hardy_cross_zero_against_zero_field() {
        let g = grid();
        let v = g.sample(|x| Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), 0.0));
        let w = vec![Complex64::ZERO; g.cell_count()];
        let c = hardy_cross_term(&g, &v, &w, [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(c, 0.0);
    }
}
