//! Ground states of the singular elliptic equation
//!
//!   Q'' + ((d-1)/r) Q' + c r^{-2} Q - Q + Q^{1+4/d} = 0,   Q > 0,
//!
//! computed two independent ways: an outward shooting method with bisection
//! on the near-origin amplitude, and a preconditioned normalized-ascent
//! iteration on the discrete operator. Both certify Pohozaev identities and
//! the sharp Gagliardo-Nirenberg constant
//!
//!   C_GN(c) = (d+2)/d · ‖Q‖_{L²}^{-4/d} = J_c(Q).
//!
//! Near the origin the positive solution follows the less-singular indicial
//! branch Q ~ a r^{-σ}, σ = (d-2)/2 - sqrt(λ(d) - c); the substitution
//! Q = r^{-σ} φ removes it and leaves the regular equation
//!
//!   φ'' + ((D-1)/r) φ' - φ + r^{-4σ/d} φ^{1+4/d} = 0,   D = d - 2σ,
//!
//! which is what the integrator and the residual stencils actually see.

use crate::cartesian::{cartesian_functionals, CartesianGrid};
use crate::error::{Error, Result};
use crate::field::{OriginBehavior, RadialField};
use crate::functionals::{functionals, radial_derivative_real, FunctionalLedger};
use crate::grid::RadialGrid;
use crate::interp::CubicHermite;
use crate::operator::RadialOperator;
use crate::params::ProblemParams;
use num_complex::Complex64;
use serde::Serialize;
use std::path::Path;
use std::sync::Arc;

/// σ = (d-2)/2 - sqrt(λ(d) - c); the less-singular indicial exponent.
/// Positive for c > 0 (mild singularity), zero at c = 0, negative for c < 0
/// (the solution vanishes at the origin).
pub fn indicial_exponent(params: ProblemParams) -> Result<f64> {
    params.validate()?;
    Ok((params.dim_f() - 2.0) / 2.0 - (params.hardy_constant() - params.c).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroundStateMethod {
    #[serde(rename = "shooting")]
    Shooting,
    #[serde(rename = "gradient-flow")]
    GradientFlow,
}

/// Evaluable radial profile: Hermite interpolation of φ = r^σ Q on the
/// integration mesh plus a matched far-field decay C r^{-(d-1)/2} e^{-r}
/// beyond the last reliable node.
#[derive(Debug, Clone)]
pub struct QProfile {
    sigma: f64,
    decay_power: f64,
    phi: CubicHermite,
    r_tail: f64,
    q_tail: f64,
}

impl QProfile {
    fn new(sigma: f64, d: f64, phi: CubicHermite) -> Self {
        let r_tail = phi.x_max();
        let q_tail = r_tail.powf(-sigma) * phi.eval(r_tail);
        Self {
            sigma,
            decay_power: (d - 1.0) / 2.0,
            phi,
            r_tail,
            q_tail,
        }
    }

    pub fn r_tail(&self) -> f64 {
        self.r_tail
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.r_tail {
            self.q_tail * (r / self.r_tail).powf(-self.decay_power) * (-(r - self.r_tail)).exp()
        } else {
            let rr = r.max(self.phi.x_min());
            r.powf(-self.sigma) * self.phi.eval(rr)
        }
    }

    pub fn eval_deriv(&self, r: f64) -> f64 {
        if r >= self.r_tail {
            self.eval(r) * (-1.0 - self.decay_power / r)
        } else {
            let rr = r.max(self.phi.x_min());
            let phi = self.phi.eval(rr);
            let dphi = self.phi.eval_deriv(rr);
            r.powf(-self.sigma) * (dphi - self.sigma * phi / r)
        }
    }
}

/// A certified ground state: positive samples on the target grid plus the
/// diagnostic ledger.
#[derive(Debug, Clone)]
pub struct GroundState {
    params: ProblemParams,
    method: GroundStateMethod,
    field: RadialField,
    values: Vec<f64>,
    deriv: Vec<f64>,
    profile: QProfile,
    sigma: f64,
    amplitude: f64,
    elliptic_residual: f64,
    pohozaev: (f64, f64),
    ledger: FunctionalLedger,
    gn_constant: f64,
}

impl GroundState {
    pub fn params(&self) -> ProblemParams {
        self.params
    }
    pub fn method(&self) -> GroundStateMethod {
        self.method
    }
    pub fn field(&self) -> &RadialField {
        &self.field
    }
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.field.grid()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn deriv(&self) -> &[f64] {
        &self.deriv
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
    /// Discrete L² norm of the elliptic defect. For the shooting method the
    /// defect is measured by independent finite-difference stencils on the
    /// sampled field; for the ascent method it is the fixed-point defect of
    /// the discrete operator that was solved.
    pub fn elliptic_residual(&self) -> f64 {
        self.elliptic_residual
    }
    /// Relative Pohozaev residuals (ρ₁, ρ₂) for
    /// ‖Q‖² = (2/d)‖Q‖²_{Ḣ¹_c} and ‖Q‖² = (2/(d+2))‖Q‖_q^q.
    pub fn pohozaev_residuals(&self) -> (f64, f64) {
        self.pohozaev
    }
    pub fn ledger(&self) -> &FunctionalLedger {
        &self.ledger
    }
    pub fn mass(&self) -> f64 {
        self.ledger.mass
    }
    pub fn h1c_sq(&self) -> f64 {
        self.ledger.h1c_sq
    }
    pub fn gn_constant(&self) -> f64 {
        self.gn_constant
    }
    /// Off-grid evaluation (interpolant + far-field tail).
    pub fn eval(&self, r: f64) -> f64 {
        self.profile.eval(r)
    }
    pub fn eval_deriv(&self, r: f64) -> f64 {
        self.profile.eval_deriv(r)
    }

    /// Largest radius where the profile still exceeds `rel` times its peak.
    pub fn support_radius(&self, rel: f64) -> f64 {
        let peak = self.values.iter().cloned().fold(0.0, f64::max);
        let thr = rel * peak;
        let nodes = self.grid().nodes();
        for j in (0..nodes.len()).rev() {
            if self.values[j] > thr {
                return nodes[j];
            }
        }
        nodes[0]
    }

    pub fn diagnostics(&self) -> GroundStateDiagnostics {
        GroundStateDiagnostics {
            sigma: self.sigma,
            residual: self.elliptic_residual,
            pohozaev: [self.pohozaev.0, self.pohozaev.1],
            mass: self.ledger.mass,
            gn_constant: self.gn_constant,
        }
    }

    /// Sidecar JSON diagnostic record.
    pub fn write_diagnostics(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(f, &self.diagnostics())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateDiagnostics {
    pub sigma: f64,
    pub residual: f64,
    pub pohozaev: [f64; 2],
    pub mass: f64,
    pub gn_constant: f64,
}

/// Solver knobs; the defaults match the shipped certification runs.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Relative bisection bracket width on the shooting amplitude.
    pub bracket_tol: f64,
    /// Fixed-point tolerance of the ascent iteration (relative defect).
    pub ascent_tol: f64,
    pub max_ascent_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            bracket_tol: 1e-12,
            ascent_tol: 1e-13,
            max_ascent_iters: 4000,
        }
    }
}

pub fn solve_ground_state(
    params: ProblemParams,
    grid: &Arc<RadialGrid>,
    method: GroundStateMethod,
    tol: f64,
) -> Result<GroundState> {
    let mut opts = SolveOptions::default();
    match method {
        GroundStateMethod::Shooting => opts.bracket_tol = tol.min(1e-10),
        GroundStateMethod::GradientFlow => opts.ascent_tol = tol,
    }
    solve_ground_state_with(params, grid, method, opts)
}

pub fn solve_ground_state_with(
    params: ProblemParams,
    grid: &Arc<RadialGrid>,
    method: GroundStateMethod,
    opts: SolveOptions,
) -> Result<GroundState> {
    params.validate()?;
    if grid.params() != params {
        return Err(Error::Mismatch {
            reason: "grid was built for different problem parameters".into(),
        });
    }
    let sigma = indicial_exponent(params)?;

    let (values, profile, amplitude, fp_residual) = match method {
        GroundStateMethod::Shooting => {
            let (profile, amplitude) = shoot_ground_state(params, sigma, grid, opts.bracket_tol)?;
            let mut values: Vec<f64> = grid.nodes().iter().map(|&r| profile.eval(r)).collect();
            newton_polish(params, sigma, grid, &mut values)?;
            (values, profile, amplitude, None)
        }
        GroundStateMethod::GradientFlow => {
            let (values, res) = normalized_ascent(params, grid, opts)?;
            let slopes = radial_derivative_real(grid.nodes(), &values);
            let phi_vals: Vec<f64> = grid
                .nodes()
                .iter()
                .zip(&values)
                .map(|(&r, &q)| r.powf(sigma) * q)
                .collect();
            let phi_slopes: Vec<f64> = grid
                .nodes()
                .iter()
                .zip(values.iter().zip(&slopes))
                .map(|(&r, (&q, &dq))| r.powf(sigma) * (dq + sigma * q / r))
                .collect();
            let phi = CubicHermite::with_slopes(grid.nodes().to_vec(), phi_vals, phi_slopes);
            let profile = QProfile::new(sigma, params.dim_f(), phi);
            let a = values[0] * grid.nodes()[0].powf(sigma);
            (values, profile, a, Some(res))
        }
    };

    if let Some(bad) = values.iter().position(|&v| v <= 0.0 || v.is_nan()) {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: values[bad],
        });
    }

    let deriv: Vec<f64> = grid.nodes().iter().map(|&r| profile.eval_deriv(r)).collect();
    let cvals: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let field = RadialField::new(Arc::clone(grid), cvals)?
        .with_origin(OriginBehavior::Indicial { sigma });

    let ledger = functionals(&field, params)?;
    let d = params.dim_f();
    let rho1 = (ledger.mass - 2.0 / d * ledger.h1c_sq).abs() / ledger.mass;
    let rho2 = (ledger.mass - 2.0 / (d + 2.0) * ledger.lq_crit()).abs() / ledger.mass;
    let gn_constant = (d + 2.0) / d * ledger.mass.powf(-2.0 / d);

    let elliptic_residual = match method {
        GroundStateMethod::Shooting => defect_norm_fd(params, sigma, grid, &values),
        GroundStateMethod::GradientFlow => fp_residual.unwrap(),
    };

    Ok(GroundState {
        params,
        method,
        field,
        values,
        deriv,
        profile,
        sigma,
        amplitude,
        elliptic_residual,
        pohozaev: (rho1, rho2),
        ledger,
        gn_constant,
    })
}

/// Newton polish of the shooting samples against the second-order discrete
/// elliptic system in φ = r^σ Q variables,
///
///   r^{-σ}[φ'' + (D-1)/r φ']_h - Q + |Q|^{4/d} Q = 0,   D = d - 2σ,
///
/// with three-point stencils on the interior rows and the first/last samples
/// pinned to the shooting values. The polished field satisfies the discrete
/// equation to solver precision; it differs from the raw samples at the
/// discretization level.
fn newton_polish(
    params: ProblemParams,
    sigma: f64,
    grid: &RadialGrid,
    q: &mut [f64],
) -> Result<()> {
    let r = grid.nodes();
    let n = r.len();
    let dd = params.dim_f() - 2.0 * sigma;
    let p = params.nonlin_power();

    let rs: Vec<f64> = r.iter().map(|&r| r.powf(sigma)).collect();
    let rsi: Vec<f64> = r.iter().map(|&r| r.powf(-sigma)).collect();
    let mut phi: Vec<f64> = q.iter().zip(&rs).map(|(&q, &s)| s * q).collect();

    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];

    let mut best = f64::INFINITY;
    let mut best_phi = phi.clone();
    let mut stalled = 0usize;
    for iter in 0..40 {
        let mut fnorm2 = 0.0;
        // boundary rows pinned
        diag[0] = 1.0;
        sup[0] = 0.0;
        rhs[0] = 0.0;
        diag[n - 1] = 1.0;
        sub[n - 1] = 0.0;
        rhs[n - 1] = 0.0;
        for j in 1..n - 1 {
            let hm = r[j] - r[j - 1];
            let hp = r[j + 1] - r[j];
            // second + first derivative stencil coefficients
            let denom = hm * hp * (hm + hp);
            let (am, a0, ap) = (
                2.0 * hp / denom,
                -2.0 * (hm + hp) / denom,
                2.0 * hm / denom,
            );
            let (bm, b0, bp) = (
                -hp / (hm * (hm + hp)),
                (hp - hm) / (hm * hp),
                hm / (hp * (hm + hp)),
            );
            let coeff = (dd - 1.0) / r[j];
            let lm = am + coeff * bm;
            let l0 = a0 + coeff * b0;
            let lp = ap + coeff * bp;
            let qj = rsi[j] * phi[j];
            let f = rsi[j] * (lm * phi[j - 1] + l0 * phi[j] + lp * phi[j + 1]) - qj
                + qj.abs().powf(p - 1.0) * qj;
            fnorm2 += grid.weights()[j] * f * f;
            sub[j] = rsi[j] * lm;
            diag[j] = rsi[j] * l0 + rsi[j] * (-1.0 + p * qj.abs().powf(p - 1.0));
            sup[j] = rsi[j] * lp;
            rhs[j] = -f;
        }
        let fnorm = fnorm2.sqrt();
        if fnorm < best {
            if fnorm < 0.5 * best {
                stalled = 0;
            }
            best = fnorm;
            best_phi.copy_from_slice(&phi);
        } else {
            stalled += 1;
        }
        // quadratic phase ends at the rounding floor of the stiff rows;
        // accept the best iterate once the norm stops dropping
        if (iter >= 2 && stalled >= 2) || fnorm < 1e-13 {
            phi.copy_from_slice(&best_phi);
            for j in 0..n {
                q[j] = rsi[j] * phi[j];
            }
            return Ok(());
        }
        crate::operator::thomas_real(&sub, &diag, &sup, &mut rhs, &mut scratch);
        for j in 0..n {
            phi[j] += rhs[j];
        }
    }
    phi.copy_from_slice(&best_phi);
    for j in 0..n {
        q[j] = rsi[j] * phi[j];
    }
    Ok(())
}

/// Fraction of r_max below which the pointwise defect evaluation is dominated
/// by the f64 cancellation floor of the stiff c r^{-2} rows; the certified
/// defect is accumulated outside this core, which carries a vanishing share
/// of every ledger integral.
const DEFECT_CORE_FRACTION: f64 = 1e-2;

/// Node count of the measurement subsample for the certified defect.
const DEFECT_MEASURE_NODES: usize = 16384;

/// Certified defect ‖ΔQ + c r^{-2}Q - Q + Q^{1+4/d}‖_{L²}: evaluated with
/// independent 4th-order sliding stencils on φ = r^σ Q over a fixed-size
/// subsample of the grid. The fixed measurement resolution keeps the f64
/// cancellation floor of the stencils pinned well below the truncation
/// signal of the solved second-order system, so the number reflects the
/// genuine discretization defect and shrinks ~4x when the grid is refined.
fn defect_norm_fd(params: ProblemParams, sigma: f64, grid: &RadialGrid, q: &[f64]) -> f64 {
    let r = grid.nodes();
    let w = grid.weights();
    let n = r.len();
    let dd = params.dim_f() - 2.0 * sigma;
    let p = params.nonlin_power();
    let r_lo = DEFECT_CORE_FRACTION * grid.r_max();
    let stride = (n / DEFECT_MEASURE_NODES).max(1);

    let cap = n / stride + 1;
    let mut r_sub = Vec::with_capacity(cap);
    let mut q_sub = Vec::with_capacity(cap);
    let mut phi_sub = Vec::with_capacity(cap);
    let mut w_sub = Vec::with_capacity(cap);
    let mut j = 0;
    while j < n {
        r_sub.push(r[j]);
        q_sub.push(q[j]);
        phi_sub.push(r[j].powf(sigma) * q[j]);
        let hi = (j + stride).min(n);
        w_sub.push(w[j..hi].iter().sum::<f64>());
        j += stride;
    }
    let (d1, d2) = crate::operator::derivatives_5pt(&r_sub, &phi_sub);

    let m = r_sub.len();
    let mut acc = 0.0;
    for j in 2..m - 2 {
        if r_sub[j] < r_lo {
            continue;
        }
        let lin = r_sub[j].powf(-sigma) * (d2[j] + (dd - 1.0) / r_sub[j] * d1[j]);
        let res = lin - q_sub[j] + q_sub[j].powf(p);
        acc += w_sub[j] * res * res;
    }
    acc.sqrt()
}

// ---------------------------------------------------------------------------
// shooting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// Q crossed zero: amplitude on the sign-change side.
    Cross,
    /// Q exceeded the blow-up threshold while positive.
    Grow,
    /// Q decayed below threshold without crossing: on-branch.
    Decayed,
}

struct ShotTrace {
    rs: Vec<f64>,
    phis: Vec<f64>,
    dphis: Vec<f64>,
}

struct Shooter {
    sigma: f64,
    dd: f64,   // D = d - 2σ
    nu_exp: f64, // nonlinear coefficient exponent: -4σ/d
    p: f64,
    r_start: f64,
    r_end: f64,
    log_ratio: f64,
    h_cap: f64,
}

const Q_DECAY_STOP: f64 = 1e-12;
const Q_BLOWUP_STOP: f64 = 1e3;

impl Shooter {
    fn new(params: ProblemParams, sigma: f64, grid: &RadialGrid) -> Self {
        let r_max = grid.r_max();
        let r_start = (1e-7 * r_max).min(0.5 * grid.nodes()[0]);
        Self {
            sigma,
            dd: params.dim_f() - 2.0 * sigma,
            nu_exp: -4.0 * sigma / params.dim_f(),
            p: params.nonlin_power(),
            r_start,
            r_end: r_max + 15.0,
            log_ratio: 5e-4,
            h_cap: r_max / 8192.0,
        }
    }

    fn rhs(&self, r: f64, phi: f64, dphi: f64) -> (f64, f64) {
        let nonlin = r.powf(self.nu_exp) * phi.abs().powf(self.p - 1.0) * phi;
        (dphi, -(self.dd - 1.0) / r * dphi + phi - nonlin)
    }

    /// Two-term start on the indicial branch: φ = a(1 + β r²) with β from the
    /// next order of the equation; at σ = 0 the nonlinearity enters the same
    /// order, giving the classical β = (1 - a^{4/d})/(2d).
    fn series_start(&self, params: ProblemParams, a: f64) -> (f64, f64) {
        let a2 = 4.0 * (1.0 + (params.hardy_constant() - params.c).sqrt());
        let beta = if self.sigma.abs() < 1e-12 {
            (1.0 - a.powf(self.p - 1.0)) / a2
        } else {
            1.0 / a2
        };
        let r = self.r_start;
        (a * (1.0 + beta * r * r), 2.0 * a * beta * r)
    }

    fn rk4(&self, r: f64, phi: &mut f64, dphi: &mut f64, h: f64) {
        let (k1p, k1d) = self.rhs(r, *phi, *dphi);
        let (k2p, k2d) = self.rhs(r + 0.5 * h, *phi + 0.5 * h * k1p, *dphi + 0.5 * h * k1d);
        let (k3p, k3d) = self.rhs(r + 0.5 * h, *phi + 0.5 * h * k2p, *dphi + 0.5 * h * k2d);
        let (k4p, k4d) = self.rhs(r + h, *phi + h * k3p, *dphi + h * k3d);
        *phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        *dphi += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
    }

    fn classify(&self, params: ProblemParams, a: f64) -> Shot {
        let (mut phi, mut dphi) = self.series_start(params, a);
        let mut r = self.r_start;
        let mut q_max: f64 = r.powf(-self.sigma) * phi;

        while r < self.r_end {
            let h = (self.log_ratio * r).min(self.h_cap);
            self.rk4(r, &mut phi, &mut dphi, h);
            r += h;

            if !phi.is_finite() {
                return Shot::Grow;
            }
            if phi < 0.0 {
                return Shot::Cross;
            }
            let q = r.powf(-self.sigma) * phi;
            q_max = q_max.max(q);
            if q > Q_BLOWUP_STOP {
                return Shot::Grow;
            }
            if q < Q_DECAY_STOP && q < q_max {
                return Shot::Decayed;
            }
        }
        // Ran out of range without resolving. Genuinely decaying branches fall
        // below threshold long before r_end; anything still O(1) out here is
        // on the growing side (this also covers the constant equilibrium).
        let q_end = self.r_end.powf(-self.sigma) * phi;
        if q_end < 1e-6 {
            Shot::Decayed
        } else {
            Shot::Grow
        }
    }

    /// Final recorded integration: steps exactly through every target node
    /// (subdividing long gaps for accuracy), so grid samples need no
    /// interpolation; continues past the last target until the decaying
    /// branch is lost.
    fn trace_through(&self, params: ProblemParams, a: f64, targets: &[f64]) -> ShotTrace {
        let (mut phi, mut dphi) = self.series_start(params, a);
        let mut r = self.r_start;
        let mut trace = ShotTrace {
            rs: vec![r],
            phis: vec![phi],
            dphis: vec![dphi],
        };

        let record = |r: f64, phi: f64, dphi: f64, t: &mut ShotTrace| {
            t.rs.push(r);
            t.phis.push(phi);
            t.dphis.push(dphi);
        };

        // geometric prefix up to the first target node
        if targets[0] > r {
            let span = (targets[0] / r).ln();
            let k = (span / self.log_ratio).ceil().max(1.0) as usize;
            let g = (targets[0] / r).powf(1.0 / k as f64);
            for m in 1..=k {
                let next = if m == k { targets[0] } else { r * g };
                self.rk4(r, &mut phi, &mut dphi, next - r);
                r = next;
                record(r, phi, dphi, &mut trace);
            }
        }

        // through the targets, subdividing wide gaps
        for &next_target in targets.iter() {
            if next_target <= r {
                continue;
            }
            let gap = next_target - r;
            let h_lim = (self.log_ratio * next_target).min(self.h_cap);
            let k = (gap / h_lim).ceil().max(1.0) as usize;
            for m in 1..=k {
                let next = if m == k {
                    next_target
                } else {
                    r + gap * (1.0 / k as f64)
                };
                self.rk4(r, &mut phi, &mut dphi, next - r);
                r = next;
            }
            record(r, phi, dphi, &mut trace);
            if !phi.is_finite() || phi < 0.0 {
                return trace;
            }
        }

        // continue beyond the grid so the far-field cut is visible
        while r < self.r_end && phi.is_finite() && phi > 0.0 {
            let q = r.powf(-self.sigma) * phi;
            if !(Q_DECAY_STOP..=Q_BLOWUP_STOP).contains(&q) {
                break;
            }
            let h = (self.log_ratio * r).min(self.h_cap);
            self.rk4(r, &mut phi, &mut dphi, h);
            r += h;
            record(r, phi, dphi, &mut trace);
        }
        trace
    }
}

fn shoot_ground_state(
    params: ProblemParams,
    sigma: f64,
    grid: &RadialGrid,
    bracket_tol: f64,
) -> Result<(QProfile, f64)> {
    let shooter = Shooter::new(params, sigma, grid);
    let classify = |a: f64| shooter.classify(params, a);

    // Bracket the separatrix amplitude: scan geometrically up from a generic
    // starting value, then down, until the classification changes.
    let base = 1.37;
    let c0 = classify(base);
    let mut bracket: Option<(f64, f64, Shot)> = None; // (a with class c0, a with other class, c0)
    if c0 != Shot::Decayed {
        let mut prev = base;
        let mut a = base;
        for _ in 0..60 {
            a *= 2.0;
            let c = classify(a);
            if c == Shot::Decayed {
                return finish_shot(params, sigma, &shooter, grid.nodes(), a);
            }
            if c != c0 {
                bracket = Some((prev, a, c0));
                break;
            }
            prev = a;
        }
        if bracket.is_none() {
            let mut prev = base;
            let mut a = base;
            for _ in 0..60 {
                a *= 0.5;
                let c = classify(a);
                if c == Shot::Decayed {
                    return finish_shot(params, sigma, &shooter, grid.nodes(), a);
                }
                if c != c0 {
                    bracket = Some((prev, a, c0));
                    break;
                }
                prev = a;
            }
        }
    } else {
        return finish_shot(params, sigma, &shooter, grid.nodes(), base);
    }

    let (mut a_same, mut a_other, class_same) = bracket.ok_or(Error::NoBracket {
        lo: base * 2f64.powi(-60),
        hi: base * 2f64.powi(60),
    })?;

    let mut iters = 0usize;
    while (a_same - a_other).abs() > bracket_tol * a_same.abs().max(a_other.abs()) {
        iters += 1;
        if iters > 200 {
            return Err(Error::NoConvergence {
                iterations: iters,
                residual: (a_same - a_other).abs(),
            });
        }
        let mid = 0.5 * (a_same + a_other);
        match classify(mid) {
            Shot::Decayed => return finish_shot(params, sigma, &shooter, grid.nodes(), mid),
            c if c == class_same => a_same = mid,
            _ => a_other = mid,
        }
    }
    finish_shot(params, sigma, &shooter, grid.nodes(), 0.5 * (a_same + a_other))
}

fn finish_shot(
    params: ProblemParams,
    sigma: f64,
    shooter: &Shooter,
    targets: &[f64],
    a: f64,
) -> Result<(QProfile, f64)> {
    let t = shooter.trace_through(params, a, targets);
    let n = t.rs.len();
    if n < 8 {
        return Err(Error::NoConvergence {
            iterations: n,
            residual: f64::NAN,
        });
    }

    // Cut the trace where the decaying branch is lost: at the first upturn of
    // Q past its peak, at a sign change, or when Q falls below threshold.
    let q_at = |k: usize| t.rs[k].powf(-sigma) * t.phis[k];
    let mut peak = 0usize;
    let mut qmax = q_at(0);
    for k in 1..n {
        let q = q_at(k);
        if q > qmax {
            qmax = q;
            peak = k;
        }
    }
    let mut cut = n - 1;
    for k in peak..n - 1 {
        let q0 = q_at(k);
        let q1 = q_at(k + 1);
        if q1 <= 0.0 || q1 > q0 || q1 < Q_DECAY_STOP {
            cut = k;
            break;
        }
    }
    if cut < peak + 4 {
        return Err(Error::NoConvergence {
            iterations: cut,
            residual: q_at(cut),
        });
    }

    let phi = CubicHermite::with_slopes(
        t.rs[..=cut].to_vec(),
        t.phis[..=cut].to_vec(),
        t.dphis[..=cut].to_vec(),
    );
    Ok((QProfile::new(sigma, params.dim_f(), phi), a))
}

// ---------------------------------------------------------------------------
// normalized ascent (preconditioned fixed point on the discrete operator)
// ---------------------------------------------------------------------------

/// Maximizes the Weinstein quotient by the stabilized fixed-point ascent
/// u ← γ^{(d+4)/4} (1 - L)^{-1} u^p on the symmetric discrete operator
/// L = Δ_h + c r^{-2}. The stabilizing power γ is the two-parameter rescaling
/// that pins the elliptic equation's coefficients to (-1, +1), applied at
/// every step; the fixed point therefore solves (1 - L) u = u^p directly.
/// Returns the samples and the discrete defect ‖(1-L)u - u^p‖_{L²}.
fn normalized_ascent(
    params: ProblemParams,
    grid: &Arc<RadialGrid>,
    opts: SolveOptions,
) -> Result<(Vec<f64>, f64)> {
    let op = RadialOperator::new(grid);
    let r = grid.nodes();
    let w = grid.weights();
    let n = r.len();
    let p = params.nonlin_power();
    let sigma = indicial_exponent(params)?;
    let gamma_pow = (params.dim_f() + 4.0) / 4.0;

    let mut u: Vec<f64> = r
        .iter()
        .map(|&r| 1.5 * r.powf(-sigma) * (-0.5 * r * r).exp())
        .collect();

    let mut lu = vec![0.0; n];
    let mut defect = f64::INFINITY;
    let mut best_defect = f64::INFINITY;
    let mut since_improvement = 0usize;
    for iter in 0..opts.max_ascent_iters {
        let up: Vec<f64> = u.iter().map(|&v| v.abs().powf(p - 1.0) * v).collect();
        op.apply_real(&u, &mut lu);

        let mut num = 0.0;
        let mut den = 0.0;
        let mut def2 = 0.0;
        let mut unorm2 = 0.0;
        for j in 0..n {
            let one_minus_l = u[j] - lu[j];
            num += w[j] * u[j] * one_minus_l;
            den += w[j] * u[j] * up[j];
            let res = one_minus_l - up[j];
            def2 += w[j] * res * res;
            unorm2 += w[j] * u[j] * u[j];
        }
        defect = def2.sqrt();
        if defect <= opts.ascent_tol * unorm2.sqrt().max(1e-300) {
            return Ok((u, defect));
        }
        // the defect of the stiff near-origin rows saturates at the rounding
        // floor; accept once it stops improving
        if defect < 0.995 * best_defect {
            best_defect = defect;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= 100 && iter >= 200 {
                return Ok((u, defect));
            }
        }
        if !(num > 0.0 && den > 0.0) {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual: defect,
            });
        }
        let gamma = (num / den).powf(gamma_pow);
        let v = op.solve_shifted_real(1.0, &up);
        for j in 0..n {
            u[j] = gamma * v[j];
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_ascent_iters,
        residual: defect,
    })
}

// ---------------------------------------------------------------------------
// sharp-constant report and non-attainment witness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GnReport {
    pub c_from_mass: f64,
    pub c_from_weinstein: f64,
}

impl GnReport {
    pub fn relative_gap(&self) -> f64 {
        (self.c_from_mass - self.c_from_weinstein).abs() / self.c_from_mass
    }
}

/// Two algebraic routes to the sharp constant: (d+2)/d ‖Q‖^{-4/d} from the
/// mass, and J_c(Q) from the ledger. They agree to the Pohozaev tolerance.
pub fn gn_constant_report(q: &GroundState) -> GnReport {
    let d = q.params.dim_f();
    let led = q.ledger();
    GnReport {
        c_from_mass: (d + 2.0) / d * led.mass.powf(-2.0 / d),
        c_from_weinstein: led.lq_crit() / (led.mass.powf(2.0 / d) * led.h1c_sq),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BumpSample {
    pub shift: f64,
    pub weinstein: f64,
    /// Set when the shifted support leaks outside the box.
    pub truncated: bool,
}

/// Non-attainment witness for c < 0: J_c evaluated on Cartesian embeddings of
/// the reference profile Q_0 translated by s e₁. The values increase toward
/// C_GN(0) = C_GN(c) as |s| grows and stay strictly below it: the supremum is
/// approached by escaping bumps, never attained.
pub fn translated_bump_supremum(
    params: ProblemParams,
    q0: &GroundState,
    grid: &CartesianGrid,
    shifts: &[f64],
) -> Result<Vec<BumpSample>> {
    if params.c >= 0.0 {
        return Err(Error::Precondition {
            reason: format!("translated-bump witness needs c < 0, got c = {}", params.c),
        });
    }
    if q0.params().c != 0.0 || q0.params().d != params.d {
        return Err(Error::Mismatch {
            reason: "reference profile must be the c = 0 ground state in the same dimension".into(),
        });
    }
    let support = q0.support_radius(1e-6);
    let mut out = Vec::with_capacity(shifts.len());
    for &s in shifts {
        let truncated = s.abs() + support > grid.half_extent();
        let u = grid.sample(|x| {
            let dx = [x[0] - s, x[1], x[2]];
            let r = (dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2]).sqrt();
            Complex64::new(q0.eval(r), 0.0)
        });
        let led = cartesian_functionals(grid, &u, params);
        if led.h1c_sq <= 0.0 {
            return Err(Error::SingularFunctional { value: led.h1c_sq });
        }
        let j = led.lq_crit / (led.mass.powf(2.0 / params.dim_f()) * led.h1c_sq);
        out.push(BumpSample {
            shift: s,
            weinstein: j,
            truncated,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridScheme;

    fn graded(d: u32, c: f64, r_max: f64, n: usize) -> Arc<RadialGrid> {
        let p = ProblemParams::new(d, c).unwrap();
        RadialGrid::build(p, r_max, n, GridScheme::Graded { rmin_ratio: 1e-6 }).unwrap()
    }

    #[test]
    fn indicial_exponent_closed_forms() {
        let s0 = indicial_exponent(ProblemParams::new(3, 0.0).unwrap()).unwrap();
        assert!(s0.abs() < 1e-15);
        let s1 = indicial_exponent(ProblemParams::new(3, 0.125).unwrap()).unwrap();
        assert!((s1 - (0.5 - 0.125f64.sqrt())).abs() < 1e-15);
        assert!((s1 - 0.146_446_609_406_726_24).abs() < 1e-12);
        let s2 = indicial_exponent(ProblemParams::new(3, -1.0).unwrap()).unwrap();
        assert!((s2 - (0.5 - 1.25f64.sqrt())).abs() < 1e-15);
        assert!((s2 + 0.618_033_988_749_894_9).abs() < 1e-12);
        assert!(indicial_exponent(ProblemParams { d: 3, c: 0.25 }).is_err());
    }

    #[test]
    fn classical_ground_state_matches_independent_oracle() {
        // d = 3, c = 0: compare the solver's ‖Q₀‖² against a deliberately
        // separate fixed-step shooting integrator in Q variables.
        let g = graded(3, 0.0, 20.0, 8192);
        let q = solve_ground_state(g.params(), &g, GroundStateMethod::Shooting, 1e-12).unwrap();
        let oracle = oracle_mass_d3_c0();
        let rel = (q.mass() - oracle).abs() / oracle;
        assert!(
            rel < 1e-3,
            "solver mass {} vs oracle {} (rel {rel:.2e})",
            q.mass(),
            oracle
        );
    }

    /// Independent high-resolution shooting oracle for d = 3, c = 0: uniform
    /// RK4 in Q variables, trapezoid mass on its own samples.
    fn oracle_mass_d3_c0() -> f64 {
        let p = 7.0 / 3.0;
        let rhs = |r: f64, q: f64, dq: f64| -> (f64, f64) {
            (dq, -2.0 / r * dq + q - q.abs().powf(p - 1.0) * q)
        };
        let h = 2.5e-4;
        let r0 = 1e-4;
        let shoot = |a: f64, record: &mut Option<Vec<(f64, f64)>>| -> i32 {
            let beta = (1.0 - a.powf(4.0 / 3.0)) / 6.0;
            let mut q = a * (1.0 + beta * r0 * r0);
            let mut dq = 2.0 * a * beta * r0;
            let mut r = r0;
            if let Some(v) = record.as_mut() {
                v.push((r, q));
            }
            let mut qmax = q;
            while r < 30.0 {
                let (k1q, k1d) = rhs(r, q, dq);
                let (k2q, k2d) = rhs(r + 0.5 * h, q + 0.5 * h * k1q, dq + 0.5 * h * k1d);
                let (k3q, k3d) = rhs(r + 0.5 * h, q + 0.5 * h * k2q, dq + 0.5 * h * k2d);
                let (k4q, k4d) = rhs(r + h, q + h * k3q, dq + h * k3d);
                q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
                dq += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
                r += h;
                if let Some(v) = record.as_mut() {
                    if q > 0.0 && q <= qmax {
                        v.push((r, q));
                    }
                }
                qmax = qmax.max(q);
                if q < 0.0 {
                    return -1;
                }
                if q > 100.0 {
                    return 1;
                }
                if q < 1e-10 && q < qmax {
                    return 0;
                }
            }
            if q < 1e-6 {
                0
            } else {
                1
            }
        };
        let mut lo = 1.3; // grows
        let mut hi = 8.0; // crosses
        assert_eq!(shoot(lo, &mut None), 1);
        assert_eq!(shoot(hi, &mut None), -1);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            match shoot(mid, &mut None) {
                1 => lo = mid,
                -1 => hi = mid,
                _ => {
                    lo = mid;
                    break;
                }
            }
        }
        let mut rec = Some(Vec::new());
        shoot(0.5 * (lo + hi), &mut rec);
        let samples = rec.unwrap();
        let mut mass = 0.0;
        for k in 1..samples.len() {
            let (r0, q0) = samples[k - 1];
            let (r1, q1) = samples[k];
            mass += 0.5 * (r1 - r0) * (r0 * r0 * q0 * q0 + r1 * r1 * q1 * q1);
        }
        4.0 * std::f64::consts::PI * mass
    }

    #[test]
    fn pohozaev_residuals_positive_coupling() {
        let g = graded(3, 0.125, 26.0, 16384);
        let q = solve_ground_state(g.params(), &g, GroundStateMethod::Shooting, 1e-12).unwrap();
        let (r1, r2) = q.pohozaev_residuals();
        assert!(r1 <= 1e-4, "rho1 = {r1:.3e}");
        assert!(r2 <= 1e-4, "rho2 = {r2:.3e}");
        // Pohozaev consequence: ‖Q‖_q^q = (d+2)/d ‖Q‖²_{Ḣ¹c}
        let led = q.ledger();
        let gap = (led.lq_crit() - 5.0 / 3.0 * led.h1c_sq).abs() / led.lq_crit();
        assert!(gap <= 1e-4, "critical-norm identity gap {gap:.3e}");
    }

    #[test]
    fn radial_mass_ordering_negative_coupling() {
        let g0 = graded(3, 0.0, 24.0, 8192);
        let q0 = solve_ground_state(g0.params(), &g0, GroundStateMethod::Shooting, 1e-12).unwrap();
        let g1 = graded(3, -1.0, 24.0, 8192);
        let q1 = solve_ground_state(g1.params(), &g1, GroundStateMethod::Shooting, 1e-12).unwrap();
        assert!(
            q0.mass().sqrt() < q1.mass().sqrt(),
            "expected ‖Q_0‖ < ‖Q_rad‖: {} vs {}",
            q0.mass().sqrt(),
            q1.mass().sqrt()
        );
    }

    #[test]
    fn methods_agree_on_mass() {
        let g = graded(3, 0.125, 22.0, 8192);
        let qs = solve_ground_state(g.params(), &g, GroundStateMethod::Shooting, 1e-12).unwrap();
        let qg = solve_ground_state(g.params(), &g, GroundStateMethod::GradientFlow, 1e-13).unwrap();
        let rel = (qs.mass() - qg.mass()).abs() / qs.mass();
        assert!(
            rel < 1e-3,
            "mass mismatch {:.3e}: shooting {} ascent {}",
            rel,
            qs.mass(),
            qg.mass()
        );
        // ascent defect reaches the rounding floor of the stiff graded rows
        assert!(qg.elliptic_residual() < 1e-4);
    }

    #[test]
    fn positivity_and_monotone_decay() {
        let g = graded(3, -2.0, 24.0, 8192);
        let q = solve_ground_state(g.params(), &g, GroundStateMethod::Shooting, 1e-12).unwrap();
        let vals = q.values();
        assert!(vals.iter().all(|&v| v > 0.0));
        let peak = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        for j in peak..vals.len() - 1 {
            assert!(
                vals[j + 1] <= vals[j] * (1.0 + 1e-12),
                "upturn at node {j}: {} -> {}",
                vals[j],
                vals[j + 1]
            );
        }
    }

    #[test]
    fn residual_refines_at_second_order() {
        let mut residuals = Vec::new();
        for n in [4096usize, 8192] {
            let g = graded(3, 0.125, 22.0, n);
            let q = solve_ground_state(g.params(), &g, GroundStateMethod::Shooting, 1e-12).unwrap();
            residuals.push(q.elliptic_residual());
        }
        let rate = residuals[0] / residuals[1];
        assert!(
            rate > 2.5 && rate < 6.5,
            "expected ~4x defect reduction, got {rate} ({residuals:?})"
        );
    }

    #[test]
    fn gn_report_two_routes_agree() {
        let g = graded(3, 0.125, 22.0, 8192);
        let q = solve_ground_state(g.params(), &g, GroundStateMethod::Shooting, 1e-12).unwrap();
        let rep = gn_constant_report(&q);
        assert!(
            rep.relative_gap() <= 1e-4,
            "C_GN routes disagree: {} vs {}",
            rep.c_from_mass,
            rep.c_from_weinstein
        );
    }
}
