//! Exact pseudo-conformal minimal-mass blow-up solutions and the diagnostics
//! built around them: mass-concentration scans, blow-up-rate fits, virial
//! identities, the minimal-mass momentum bound, and the renormalized
//! limiting-profile experiment.
//!
//! The exact solution with blow-up time T, phase θ and scale λ is
//!
//!   S(t,x) = e^{iθ} e^{iλ²/(T-t)} e^{-i|x|²/(4(T-t))} μ^{d/2} Q(μ x),
//!   μ = λ/(T-t),
//!
//! built on a computed ground state Q. Its mass is t-independent, its energy
//! is ‖|y|Q‖²/(8λ²) > 0, and ‖∇S(t)‖ (T-t) → λ‖∇Q‖ as t ↑ T.

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::functionals::{functionals, h1_inner, radial_derivative, radial_momentum, virial};
use crate::grid::RadialGrid;
use crate::ground_state::GroundState;
use crate::interp::CubicHermite;
use crate::params::ProblemParams;
use crate::evolution::{Snapshot, StopReason, Trajectory};
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

/// Parameters (Q, T, θ, λ) of the exact blow-up solution.
#[derive(Clone)]
pub struct PseudoConformalParams {
    pub ground: Arc<GroundState>,
    pub t_blowup: f64,
    pub theta: f64,
    pub scale: f64,
}

impl PseudoConformalParams {
    pub fn new(ground: Arc<GroundState>, t_blowup: f64, theta: f64, scale: f64) -> Result<Self> {
        if !(t_blowup > 0.0 && t_blowup.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParams {
                reason: format!("need T > 0 and λ > 0, got T = {t_blowup}, λ = {scale}"),
            });
        }
        if !theta.is_finite() {
            return Err(Error::InvalidParams {
                reason: "phase θ must be finite".into(),
            });
        }
        Ok(Self {
            ground,
            t_blowup,
            theta,
            scale,
        })
    }

    pub fn params(&self) -> ProblemParams {
        self.ground.params()
    }

    fn focusing_scale(&self, t: f64) -> f64 {
        self.scale / (self.t_blowup - t)
    }

    /// ‖∇S(t)‖²: μ² ‖∇Q‖² + ‖|y|Q‖²/(4λ²) by the change of variables.
    pub fn analytic_gradient_sq(&self, t: f64) -> f64 {
        let mu = self.focusing_scale(t);
        let vq = virial(self.ground.field());
        mu * mu * self.ground.ledger().gradient_sq + vq / (4.0 * self.scale * self.scale)
    }

    /// ∫ |x|² |S(t)|² = ((T-t)/λ)² ‖|y|Q‖².
    pub fn analytic_virial(&self, t: f64) -> f64 {
        let s = (self.t_blowup - t) / self.scale;
        s * s * virial(self.ground.field())
    }
}

/// Sample S(t, ·) on the grid. Mass is t-independent; the gradient norm grows
/// like λ‖∇Q‖/(T-t) as t ↑ T.
pub fn pseudo_conformal_field(
    p: &PseudoConformalParams,
    t: f64,
    grid: &Arc<RadialGrid>,
) -> Result<RadialField> {
    if !(0.0..p.t_blowup).contains(&t) {
        return Err(Error::Domain {
            reason: format!("time t = {t} must satisfy 0 <= t < T = {}", p.t_blowup),
        });
    }
    if grid.params() != p.params() {
        return Err(Error::Mismatch {
            reason: "sampling grid carries different problem parameters".into(),
        });
    }
    let tau = p.t_blowup - t;
    let mu = p.scale / tau;
    let amp = mu.powf(p.params().dim_f() / 2.0);
    let phase0 = p.theta + p.scale * p.scale / tau;
    let vals = grid
        .nodes()
        .iter()
        .map(|&r| {
            let q = p.ground.eval(mu * r);
            Complex64::from_polar(amp * q, phase0 - r * r / (4.0 * tau))
        })
        .collect();
    RadialField::new(Arc::clone(grid), vals)
}

/// The minimal-mass initial datum u_0 = S(0, ·): ‖u_0‖ equals the ground-state
/// mass and E(e^{i|x|²/4T} u_0) = 0 up to discretization.
pub fn minimal_mass_initial(p: &PseudoConformalParams, grid: &Arc<RadialGrid>) -> Result<RadialField> {
    pseudo_conformal_field(p, 0.0, grid)
}

/// Weighted-L² defect of S(t) plugged into the equation with discrete
/// spatial operators and the analytic time derivative. The spatial part uses
/// the indicial-regularized stencils (the substitution u = r^{-σ} w), which
/// stay uniformly consistent on the singular branch, so the defect is second
/// order in the grid spacing.
pub fn pseudo_conformal_residual(
    p: &PseudoConformalParams,
    t: f64,
    grid: &Arc<RadialGrid>,
) -> Result<f64> {
    let s = pseudo_conformal_field(p, t, grid)?;
    let ls = crate::functionals::indicial_laplacian(
        p.params(),
        p.ground.sigma(),
        grid.nodes(),
        s.values(),
    );

    let tau = p.t_blowup - t;
    let mu = p.scale / tau;
    let d = p.params().dim_f();
    let amp = mu.powf(d / 2.0);
    let mu_dot = p.scale / (tau * tau);
    let phase0 = p.theta + p.scale * p.scale / tau;
    let pw = 4.0 / d;

    let mut acc = 0.0;
    for (j, &r) in grid.nodes().iter().enumerate() {
        let q = p.ground.eval(mu * r);
        let dq = p.ground.eval_deriv(mu * r);
        let phase = Complex64::from_polar(1.0, phase0 - r * r / (4.0 * tau));
        let dphi_dt = (p.scale * p.scale - 0.25 * r * r) / (tau * tau);
        let damp_dt = mu_dot * amp / mu * (0.5 * d * q + mu * r * dq);
        let st = phase * (Complex64::new(0.0, dphi_dt) * (amp * q) + damp_dt);
        let sval = s.values()[j];
        let res = Complex64::new(0.0, 1.0) * st + ls[j] + sval.norm().powf(pw) * sval;
        acc += grid.weights()[j] * res.norm_sqr();
    }
    Ok(acc.sqrt())
}

// ---------------------------------------------------------------------------
// virial series
// ---------------------------------------------------------------------------

/// Quadratic structure of the virial series ∫|x|²|u(t)|²:
/// d²/dt² = 16 E(u_0), and the integrated form has coefficients
/// (virial(0), -4·momentum(u_0), 8 E(u_0)).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VirialFit {
    /// Central second difference of the retained series.
    pub second_difference: f64,
    /// Least-squares coefficients [c0, c1, c2] of c0 + c1 t + c2 t².
    pub fit_quadratic: [f64; 3],
    /// ∫ x · Im(u_0 ∇ū_0) dx by quadrature.
    pub momentum_term: f64,
    pub energy_u0: f64,
    pub virial0: f64,
}

impl VirialFit {
    pub fn fit_at(&self, t: f64) -> f64 {
        self.fit_quadratic[0] + self.fit_quadratic[1] * t + self.fit_quadratic[2] * t * t
    }
}

pub fn virial_series_check(traj: &Trajectory) -> Result<VirialFit> {
    let snaps = &traj.snapshots;
    if snaps.len() < 5 {
        return Err(Error::InsufficientData {
            needed: 5,
            got: snaps.len(),
        });
    }
    let ts: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let vs: Vec<f64> = snaps.iter().map(|s| s.virial).collect();

    // central second difference at an evenly spaced interior triple nearest
    // the middle of the series
    let mut pick = None;
    let mid = snaps.len() / 2;
    for off in 0..snaps.len() {
        for &k in &[mid.saturating_sub(off), (mid + off).min(snaps.len() - 2)] {
            if k == 0 || k + 1 >= snaps.len() {
                continue;
            }
            let hl = ts[k] - ts[k - 1];
            let hr = ts[k + 1] - ts[k];
            if (hl - hr).abs() < 1e-9 * hl.max(hr) {
                pick = Some(k);
                break;
            }
        }
        if pick.is_some() {
            break;
        }
    }
    let k = pick.ok_or(Error::InsufficientData {
        needed: 3,
        got: 0,
    })?;
    let h = ts[k] - ts[k - 1];
    let second_difference = (vs[k + 1] - 2.0 * vs[k] + vs[k - 1]) / (h * h);

    let fit_quadratic = quadratic_lsq(&ts, &vs);
    let momentum_term = radial_momentum(&snaps[0].field);

    Ok(VirialFit {
        second_difference,
        fit_quadratic,
        momentum_term,
        energy_u0: snaps[0].ledger.energy,
        virial0: snaps[0].virial,
    })
}

fn quadratic_lsq(ts: &[f64], vs: &[f64]) -> [f64; 3] {
    // normal equations for [1, t, t²]
    let mut m = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for (&t, &v) in ts.iter().zip(vs) {
        let basis = [1.0, t, t * t];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            b[i] += basis[i] * v;
        }
    }
    solve3(m, b)
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&a, &c| m[a][col].abs().partial_cmp(&m[c][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (mk, pk) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *mk -= f * pk;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x
}

// ---------------------------------------------------------------------------
// mass concentration
// ---------------------------------------------------------------------------

/// Window radius rule a(t) as a function of the remaining time T - t. All
/// shipped rules satisfy a(t)‖∇u(t)‖ → ∞ for the exact blow-up solution.
#[derive(Debug, Clone, Copy)]
pub enum WindowRule {
    /// a = sqrt(T - t)
    SqrtRemaining,
    /// a = (T - t)^{1/4}
    FourthRootRemaining,
    Custom(fn(f64) -> f64),
}

impl WindowRule {
    pub fn radius(&self, remaining: f64) -> f64 {
        match self {
            WindowRule::SqrtRemaining => remaining.sqrt(),
            WindowRule::FourthRootRemaining => remaining.powf(0.25),
            WindowRule::Custom(f) => f(remaining),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WindowRule::SqrtRemaining => "sqrt(T-t)",
            WindowRule::FourthRootRemaining => "(T-t)^(1/4)",
            WindowRule::Custom(_) => "custom",
        }
    }
}

/// Captured-mass series m_n = ∫_{|x| <= a(t_n)} |u|² against the ground-state
/// reference mass. Radial sources concentrate at the origin, so centers are
/// pinned there.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationScan {
    pub times: Vec<f64>,
    pub radii: Vec<f64>,
    pub captured: Vec<f64>,
    pub centers: Vec<f64>,
    pub reference_mass: f64,
    /// Per-time flag: window radius exceeded the grid extent.
    pub truncated: Vec<bool>,
}

impl ConcentrationScan {
    /// CSV columns: t, a, captured_mass, reference_mass.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "t,a,captured_mass,reference_mass")?;
        for k in 0..self.times.len() {
            writeln!(
                f,
                "{:.12e},{:.12e},{:.17e},{:.17e}",
                self.times[k], self.radii[k], self.captured[k], self.reference_mass
            )?;
        }
        Ok(())
    }
}

fn captured_mass(u: &RadialField, radius: f64) -> f64 {
    let nodes = u.grid().nodes();
    let w = u.grid().weights();
    let mut acc = 0.0;
    for (j, &r) in nodes.iter().enumerate() {
        if r > radius {
            break;
        }
        acc += w[j] * u.values()[j].norm_sqr();
    }
    acc
}

/// Scan the exact solution S at the given times.
pub fn concentration_scan_analytic(
    p: &PseudoConformalParams,
    times: &[f64],
    grid: &Arc<RadialGrid>,
    rule: WindowRule,
) -> Result<ConcentrationScan> {
    let mut scan = ConcentrationScan {
        times: Vec::new(),
        radii: Vec::new(),
        captured: Vec::new(),
        centers: Vec::new(),
        reference_mass: p.ground.mass(),
        truncated: Vec::new(),
    };
    for &t in times {
        let u = pseudo_conformal_field(p, t, grid)?;
        let a = rule.radius(p.t_blowup - t);
        scan.times.push(t);
        scan.radii.push(a);
        scan.captured.push(captured_mass(&u, a));
        scan.centers.push(0.0);
        scan.truncated.push(a > grid.r_max());
    }
    Ok(scan)
}

/// Scan a computed trajectory against an estimated blow-up time.
pub fn concentration_scan_trajectory(
    traj: &Trajectory,
    t_blowup: f64,
    rule: WindowRule,
    reference_mass: f64,
) -> Result<ConcentrationScan> {
    let mut scan = ConcentrationScan {
        times: Vec::new(),
        radii: Vec::new(),
        captured: Vec::new(),
        centers: Vec::new(),
        reference_mass,
        truncated: Vec::new(),
    };
    for s in &traj.snapshots {
        if s.t >= t_blowup {
            break;
        }
        let a = rule.radius(t_blowup - s.t);
        scan.times.push(s.t);
        scan.radii.push(a);
        scan.captured.push(captured_mass(&s.field, a));
        scan.centers.push(0.0);
        scan.truncated.push(a > s.field.grid().r_max());
    }
    Ok(scan)
}

// ---------------------------------------------------------------------------
// blow-up rate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    pub t_est: f64,
    /// min over the tail of ‖∇u(t)‖ sqrt(T_est - t): a lower-bound witness.
    pub c_lower: f64,
    /// mean of ‖∇u(t)‖ (T_est - t) over the tail.
    pub linear_constant: f64,
    /// (max - min)/mean of ‖∇u(t)‖ (T_est - t) over the tail.
    pub linear_spread: f64,
    pub tail_len: usize,
}

/// Estimate the blow-up time by linear extrapolation of 1/‖∇u‖ over the last
/// five snapshots (the minimal-mass regime has ‖∇u‖ ~ const/(T-t)).
pub fn estimate_blowup_time(traj: &Trajectory) -> Result<f64> {
    let n = traj.snapshots.len();
    if n < 5 {
        return Err(Error::InsufficientData { needed: 5, got: n });
    }
    let tail = &traj.snapshots[n - 5..];
    // least squares y = a + b t on y = 1/grad
    let mut st = 0.0;
    let mut sy = 0.0;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for s in tail {
        let y = 1.0 / s.grad_norm;
        st += s.t;
        sy += y;
        stt += s.t * s.t;
        sty += s.t * y;
    }
    let m = 5.0;
    let slope = (m * sty - st * sy) / (m * stt - st * st);
    let intercept = (sy - slope * st) / m;
    if slope >= 0.0 {
        return Err(Error::NotApplicable {
            reason: "gradient norm is not growing over the tail".into(),
        });
    }
    Ok(-intercept / slope)
}

/// Rate fit over a (time, gradient-norm) series; `tail_len` last samples.
pub fn blowup_rate_fit_series(
    times: &[f64],
    grads: &[f64],
    t_est: f64,
    tail_len: usize,
) -> Result<RateFit> {
    if times.len() != grads.len() || times.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: times.len().min(grads.len()),
        });
    }
    let tail_len = tail_len.clamp(2, times.len());
    let start = times.len() - tail_len;
    let mut c_lower = f64::INFINITY;
    let mut lin_min = f64::INFINITY;
    let mut lin_max = f64::NEG_INFINITY;
    let mut lin_sum = 0.0;
    for k in start..times.len() {
        let rem = t_est - times[k];
        if rem <= 0.0 {
            return Err(Error::Domain {
                reason: format!("t_est = {t_est} does not exceed sample time {}", times[k]),
            });
        }
        c_lower = c_lower.min(grads[k] * rem.sqrt());
        let lin = grads[k] * rem;
        lin_min = lin_min.min(lin);
        lin_max = lin_max.max(lin);
        lin_sum += lin;
    }
    let linear_constant = lin_sum / tail_len as f64;
    Ok(RateFit {
        t_est,
        c_lower,
        linear_constant,
        linear_spread: (lin_max - lin_min) / linear_constant,
        tail_len,
    })
}

/// Rate fit of a blow-up trajectory; refuses runs that never blew up.
pub fn blowup_rate_fit(traj: &Trajectory, t_est: f64, tail_len: usize) -> Result<RateFit> {
    if traj.stop_reason != StopReason::BlowupDetected {
        return Err(Error::NotApplicable {
            reason: format!(
                "rate fit needs a blowup-detected trajectory, got {:?}",
                traj.stop_reason
            ),
        });
    }
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    let grads: Vec<f64> = traj.snapshots.iter().map(|s| s.grad_norm).collect();
    blowup_rate_fit_series(&times, &grads, t_est, tail_len)
}

// ---------------------------------------------------------------------------
// minimal-mass momentum bound
// ---------------------------------------------------------------------------

/// Radial weight family φ_R = R² φ(·/R) built on φ(x) = |x|² for |x| < 1,
/// rising C¹ to a plateau and decaying compactly with |∇φ|² ≲ φ.
#[derive(Debug, Clone, Copy)]
pub struct ConcentrationWeight {
    pub big_r: f64,
}

impl ConcentrationWeight {
    pub fn new(big_r: f64) -> Self {
        Self { big_r }
    }

    fn base(r: f64) -> (f64, f64) {
        if r < 1.0 {
            (r * r, 2.0 * r)
        } else if r < 2.0 {
            let t = r - 1.0;
            (1.0 + 2.0 * t - t * t, 2.0 - 2.0 * t)
        } else if r < 3.0 {
            (2.0, 0.0)
        } else if r < 5.0 {
            let u = (5.0 - r) / 2.0;
            (2.0 * u * u * (3.0 - 2.0 * u), -3.0 * u * (2.0 - 2.0 * u) * 1.0)
        } else {
            (0.0, 0.0)
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.big_r * self.big_r * Self::base(r / self.big_r).0
    }

    pub fn dphi(&self, r: f64) -> f64 {
        self.big_r * Self::base(r / self.big_r).1
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentumBoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub big_r: f64,
}

impl MomentumBoundCheck {
    pub fn holds_with_slack(&self, slack: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + slack)
    }
}

/// Cauchy-Schwarz bound linking the φ-weighted momentum to the energy at
/// minimal mass:
///
///   |∫ ∇φ_R · Im(u ∇ū)| <= sqrt(2 E(u)) (∫ |∇φ_R|² |u|²)^{1/2}.
///
/// Valid for 0 < c < λ(d) at the ground-state mass and for c < 0 (radial) at
/// the radial ground-state mass; the reference configuration c = 0 is
/// rejected since the minimal-mass statement is tied to c ≠ 0 here.
pub fn momentum_bound_check(
    u: &RadialField,
    params: ProblemParams,
    reference_mass_sq: f64,
    big_r: f64,
) -> Result<MomentumBoundCheck> {
    if params.c == 0.0 {
        return Err(Error::Precondition {
            reason: "the minimal-mass momentum bound is checked only for c != 0".into(),
        });
    }
    let led = functionals(u, params)?;
    let rel = (led.mass - reference_mass_sq).abs() / reference_mass_sq;
    if rel > 0.01 {
        return Err(Error::Precondition {
            reason: format!(
                "mass {} is not within 1% of the minimal mass {} (rel {rel:.3e})",
                led.mass, reference_mass_sq
            ),
        });
    }

    let weight = ConcentrationWeight::new(big_r);
    let r = u.grid().nodes();
    let w = u.grid().weights();
    let du = radial_derivative(r, u.values());
    let mut lhs = 0.0;
    let mut rhs_int = 0.0;
    for j in 0..u.len() {
        let dphi = weight.dphi(r[j]);
        let im = (u.values()[j] * du[j].conj()).im;
        lhs += w[j] * dphi * im;
        rhs_int += w[j] * dphi * dphi * u.values()[j].norm_sqr();
    }
    let energy = led.energy.max(0.0); // clamped: the bound only tightens
    Ok(MomentumBoundCheck {
        lhs: lhs.abs(),
        rhs: (2.0 * energy).sqrt() * rhs_int.sqrt(),
        big_r,
    })
}

// ---------------------------------------------------------------------------
// renormalized snapshots (limiting profile)
// ---------------------------------------------------------------------------

/// v_n(x) = λ_n^{d/2} u(t_n, λ_n x) resampled on the reference grid, with
/// λ_n pinned so that ‖v_n‖_{Ḣ¹_c} = ‖Q‖_{Ḣ¹_c} in the discrete ledger.
#[derive(Debug, Clone)]
pub struct RenormalizedSnapshot {
    pub t: f64,
    pub lambda: f64,
    pub field: RadialField,
    pub mass: f64,
    pub h1c_sq: f64,
    pub energy: f64,
    /// min over a global phase of ‖e^{iα} v_n - Q‖_{H¹}.
    pub phase_aligned_h1_distance: f64,
}

pub fn renormalize_snapshot(
    traj: &Trajectory,
    index: usize,
    reference: &GroundState,
) -> Result<RenormalizedSnapshot> {
    let snap = traj.snapshots.get(index).ok_or(Error::InsufficientData {
        needed: index + 1,
        got: traj.snapshots.len(),
    })?;
    let initial_grad = traj.snapshots[0].grad_norm;
    if snap.grad_norm <= initial_grad {
        return Err(Error::Precondition {
            reason: format!(
                "snapshot gradient norm {} has not grown above the initial {}",
                snap.grad_norm, initial_grad
            ),
        });
    }
    renormalize_field(&snap.field, snap.t, traj.params, reference)
}

pub fn renormalize_field(
    field: &RadialField,
    t: f64,
    params: ProblemParams,
    reference: &GroundState,
) -> Result<RenormalizedSnapshot> {
    let src_led = functionals(field, params)?;
    if src_led.h1c_sq <= 0.0 {
        return Err(Error::SingularFunctional {
            value: src_led.h1c_sq,
        });
    }
    let target = reference.h1c_sq();
    let mut lambda = (target / src_led.h1c_sq).sqrt();

    let src_nodes = field.grid().nodes().to_vec();
    let re: Vec<f64> = field.values().iter().map(|v| v.re).collect();
    let im: Vec<f64> = field.values().iter().map(|v| v.im).collect();
    let re_interp = CubicHermite::from_values(src_nodes.clone(), re);
    let im_interp = CubicHermite::from_values(src_nodes, im);
    let ref_grid = reference.grid();
    let src_rmax = field.grid().r_max();
    let half_d = params.dim_f() / 2.0;

    let resample = |lambda: f64| -> Result<RadialField> {
        let outer = lambda * ref_grid.r_max();
        if outer > src_rmax * (1.0 + 1e-12) {
            return Err(Error::Regrid {
                r: outer,
                r_max: src_rmax,
            });
        }
        let amp = lambda.powf(half_d);
        let vals = ref_grid
            .nodes()
            .iter()
            .map(|&r| {
                let x = lambda * r;
                Complex64::new(amp * re_interp.eval(x), amp * im_interp.eval(x))
            })
            .collect();
        RadialField::new(Arc::clone(ref_grid), vals)
    };

    // pin the discrete Ḣ¹_c norm to the reference (the scaling is exactly
    // quadratic in λ up to interpolation, so this converges immediately)
    let mut v = resample(lambda)?;
    for _ in 0..8 {
        let cur = functionals(&v, params)?.h1c_sq;
        let adjust = (target / cur).sqrt();
        if (adjust - 1.0).abs() < 1e-12 {
            break;
        }
        lambda *= adjust;
        v = resample(lambda)?;
    }

    let led = functionals(&v, params)?;
    let qf = reference.field();
    let cross = h1_inner(&v, qf);
    let v_h1 = led.mass + led.gradient_sq;
    let q_led = reference.ledger();
    let q_h1 = q_led.mass + q_led.gradient_sq;
    let dist2 = (v_h1 + q_h1 - 2.0 * cross.norm()).max(0.0);

    Ok(RenormalizedSnapshot {
        t,
        lambda,
        field: v,
        mass: led.mass,
        h1c_sq: led.h1c_sq,
        energy: led.energy,
        phase_aligned_h1_distance: dist2.sqrt(),
    })
}

/// Assemble a diagnostic trajectory from precomputed fields (analytic
/// sources); ledgers are recomputed per snapshot as usual.
pub fn trajectory_from_fields(
    params: ProblemParams,
    fields: Vec<(f64, RadialField)>,
) -> Result<Trajectory> {
    if fields.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: fields.len(),
        });
    }
    let mut snapshots = Vec::with_capacity(fields.len());
    let mut prev = f64::NEG_INFINITY;
    let dt = fields[1].0 - fields[0].0;
    for (t, f) in fields {
        if t <= prev {
            return Err(Error::Domain {
                reason: "snapshot times must be strictly increasing".into(),
            });
        }
        prev = t;
        let ledger = functionals(&f, params)?;
        let vir = virial(&f);
        let grad_norm = ledger.grad_norm();
        snapshots.push(Snapshot {
            t,
            field: f,
            ledger,
            virial: vir,
            grad_norm,
        });
    }
    Ok(Trajectory {
        params,
        dt,
        snapshots,
        stop_reason: StopReason::Completed,
        stop_detail: "assembled from analytic fields".into(),
    })
}
