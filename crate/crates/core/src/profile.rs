//! Discrete profile extraction on Cartesian boxes: bounded sequences made of
//! translated bumps are decomposed into profiles with diverging shifts, a
//! small remainder, and Pythagorean L²/Ḣ¹_c norm expansions.
//!
//! Weak limits along translated subsequences are not computable from finitely
//! many members; the surrogate here aligns each member at its windowed-content
//! maximizer, averages the aligned tail half of the sequence, and keeps only
//! the ball where weak limits live (the locality of the limit). For
//! translates plus vanishing noise this converges to the profile.

use crate::cartesian::{cartesian_functionals, gradient_density, CartesianField, CartesianGrid};
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

// ---------------------------------------------------------------------------
// windowed content (the extraction trigger)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct EtaResult {
    /// sqrt(windowed L² mass) + sqrt(windowed gradient energy).
    pub value: f64,
    pub center: [f64; 3],
    pub center_index: [usize; 3],
}

/// Largest windowed (L² + Ḣ¹) content over all cube windows of half-width
/// `window`, and its center. Translation-equivariant away from the boundary.
pub fn eta_surrogate(field: &CartesianField, window: f64) -> Result<EtaResult> {
    let grid = field.grid();
    let h = grid.spacing();
    if window < 3.0 * h {
        return Err(Error::Domain {
            reason: format!("window {window} must be at least 3h = {}", 3.0 * h),
        });
    }
    let k = (window / h).round() as i64;
    let n = grid.n();

    let mass: Vec<f64> = field.values().iter().map(|v| v.norm_sqr()).collect();
    let grad = gradient_density(grid, field.values());
    let pmass = PrefixSum3::build(n, &mass);
    let pgrad = PrefixSum3::build(n, &grad);

    let vol = grid.cell_volume();
    let mut best = (f64::NEG_INFINITY, [0usize; 3]);
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                let lo = [
                    (ix as i64 - k).max(0) as usize,
                    (iy as i64 - k).max(0) as usize,
                    (iz as i64 - k).max(0) as usize,
                ];
                let hi = [
                    ((ix as i64 + k) as usize).min(n - 1),
                    ((iy as i64 + k) as usize).min(n - 1),
                    ((iz as i64 + k) as usize).min(n - 1),
                ];
                let m = pmass.box_sum(lo, hi) * vol;
                let g = pgrad.box_sum(lo, hi) * vol;
                let val = m.max(0.0).sqrt() + g.max(0.0).sqrt();
                if val > best.0 {
                    best = (val, [ix, iy, iz]);
                }
            }
        }
    }
    let idx = best.1;
    Ok(EtaResult {
        value: best.0,
        center: [grid.coord(idx[0]), grid.coord(idx[1]), grid.coord(idx[2])],
        center_index: idx,
    })
}

struct PrefixSum3 {
    n: usize,
    data: Vec<f64>, // (n+1)^3 inclusive-exclusive table
}

impl PrefixSum3 {
    fn build(n: usize, values: &[f64]) -> Self {
        let m = n + 1;
        let mut data = vec![0.0; m * m * m];
        let id = |x: usize, y: usize, z: usize| (x * m + y) * m + z;
        for x in 1..m {
            for y in 1..m {
                for z in 1..m {
                    let v = values[((x - 1) * n + (y - 1)) * n + (z - 1)];
                    data[id(x, y, z)] = v + data[id(x - 1, y, z)] + data[id(x, y - 1, z)]
                        + data[id(x, y, z - 1)]
                        - data[id(x - 1, y - 1, z)]
                        - data[id(x - 1, y, z - 1)]
                        - data[id(x, y - 1, z - 1)]
                        + data[id(x - 1, y - 1, z - 1)];
                }
            }
        }
        Self { n, data }
    }

    /// Inclusive box sum over [lo, hi] per axis.
    fn box_sum(&self, lo: [usize; 3], hi: [usize; 3]) -> f64 {
        let m = self.n + 1;
        let id = |x: usize, y: usize, z: usize| (x * m + y) * m + z;
        let (x0, y0, z0) = (lo[0], lo[1], lo[2]);
        let (x1, y1, z1) = (hi[0] + 1, hi[1] + 1, hi[2] + 1);
        self.data[id(x1, y1, z1)] - self.data[id(x0, y1, z1)] - self.data[id(x1, y0, z1)]
            - self.data[id(x1, y1, z0)]
            + self.data[id(x0, y0, z1)]
            + self.data[id(x0, y1, z0)]
            + self.data[id(x1, y0, z0)]
            - self.data[id(x0, y0, z0)]
    }
}

// ---------------------------------------------------------------------------
// synthetic sequences
// ---------------------------------------------------------------------------

/// Shift-sequence generator; pairwise distances grow with the member index.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule")]
pub enum ShiftRule {
    /// Profile j is shifted by ±(base + step·n) along axis (j/2) mod 3 with
    /// the sign alternating first, so consecutive profiles move apart along
    /// one axis and pairwise distances grow linearly in n.
    #[serde(rename = "axis-linear")]
    AxisLinear { base: f64, step: f64 },
    /// Explicit shifts[member][profile].
    #[serde(rename = "explicit")]
    Explicit { shifts: Vec<Vec<[f64; 3]>> },
}

impl ShiftRule {
    fn shift(&self, member: usize, profile: usize) -> Result<[f64; 3]> {
        match self {
            ShiftRule::AxisLinear { base, step } => {
                let a = base + step * (member as f64 + 1.0);
                let sign = if profile.is_multiple_of(2) { 1.0 } else { -1.0 };
                let mut v = [0.0; 3];
                v[(profile / 2) % 3] = sign * a;
                Ok(v)
            }
            ShiftRule::Explicit { shifts } => shifts
                .get(member)
                .and_then(|m| m.get(profile))
                .copied()
                .ok_or_else(|| Error::Generation {
                    reason: format!("explicit shifts missing member {member} profile {profile}"),
                }),
        }
    }
}

/// A generated sequence v_n = Σ_j V^j(· - x_n^j) + noise_n with the ground
/// truth retained for scoring only.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub members: Vec<CartesianField>,
    pub truth_profiles: Vec<CartesianField>,
    pub truth_shifts: Vec<Vec<[f64; 3]>>,
    pub noise_amplitude: f64,
}

impl SyntheticSequence {
    pub fn grid(&self) -> &Arc<CartesianGrid> {
        self.members[0].grid()
    }
}

/// Cell-centered Gaussian bump: peak on the anchor cell so that lattice
/// translates stay cell-centered and alignment is unambiguous.
pub fn gaussian_profile(grid: &Arc<CartesianGrid>, amplitude: f64, width: f64) -> CartesianField {
    let c = anchor_coord(grid);
    CartesianField::sample(Arc::clone(grid), |x| {
        let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
        Complex64::new(amplitude * (-r2 / (2.0 * width * width)).exp(), 0.0)
    })
}

fn anchor_index(grid: &CartesianGrid) -> [usize; 3] {
    let m = grid.n() / 2;
    [m, m, m]
}

fn anchor_coord(grid: &CartesianGrid) -> [f64; 3] {
    let m = grid.n() / 2;
    let c = grid.coord(m);
    [c, c, c]
}

pub fn synth_sequence(
    profiles: &[CartesianField],
    rule: &ShiftRule,
    n_members: usize,
    noise: f64,
    seed: u64,
) -> Result<SyntheticSequence> {
    if profiles.is_empty() || n_members == 0 {
        return Err(Error::Generation {
            reason: "need at least one profile and one member".into(),
        });
    }
    let grid = Arc::clone(profiles[0].grid());
    let anchor = anchor_coord(&grid);
    let supports: Vec<f64> = profiles
        .iter()
        .map(|p| p.support_radius_from(anchor, 1e-6))
        .collect();

    let mut rng = StdRng::seed_from_u64(seed);
    let mut members = Vec::with_capacity(n_members);
    let mut truth_shifts = Vec::with_capacity(n_members);

    for n in 0..n_members {
        let mut vals = vec![Complex64::ZERO; grid.cell_count()];
        let mut shifts = Vec::with_capacity(profiles.len());
        for (j, prof) in profiles.iter().enumerate() {
            let s = rule.shift(n, j)?;
            // margin >= support radius keeps translates clear of the boundary
            for axis in 0..3 {
                if s[axis].abs() + supports[j] + anchor[axis].abs() > grid.half_extent() {
                    return Err(Error::Generation {
                        reason: format!(
                            "member {n} profile {j}: shift {:?} pushes the support past the box",
                            s
                        ),
                    });
                }
            }
            let off = grid.lattice_offset(s)?;
            let translated = prof.translated(off);
            for (a, b) in vals.iter_mut().zip(translated.values()) {
                *a += b;
            }
            shifts.push(s);
        }
        if noise > 0.0 {
            add_smooth_clutter(&grid, &mut vals, noise, &mut rng);
        }
        members.push(CartesianField::new(Arc::clone(&grid), vals)?);
        truth_shifts.push(shifts);
    }

    Ok(SyntheticSequence {
        members,
        truth_profiles: profiles.to_vec(),
        truth_shifts,
        noise_amplitude: noise,
    })
}

/// Low-amplitude smooth clutter: a few broad random Gaussians with random
/// phases.
fn add_smooth_clutter(
    grid: &Arc<CartesianGrid>,
    vals: &mut [Complex64],
    amplitude: f64,
    rng: &mut StdRng,
) {
    let l = grid.half_extent();
    let blobs: Vec<(f64, [f64; 3], f64, f64)> = (0..8)
        .map(|_| {
            let amp = amplitude * rng.random_range(0.3..1.0);
            let center = [
                rng.random_range(-0.5 * l..0.5 * l),
                rng.random_range(-0.5 * l..0.5 * l),
                rng.random_range(-0.5 * l..0.5 * l),
            ];
            let width = rng.random_range(1.0..3.0);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (amp, center, width, phase)
        })
        .collect();
    let n = grid.n();
    for ix in 0..n {
        let x = grid.coord(ix);
        for iy in 0..n {
            let y = grid.coord(iy);
            for iz in 0..n {
                let z = grid.coord(iz);
                let mut acc = Complex64::ZERO;
                for (amp, c, w, ph) in &blobs {
                    let r2 = (x - c[0]).powi(2) + (y - c[1]).powi(2) + (z - c[2]).powi(2);
                    acc += Complex64::from_polar(amp * (-r2 / (2.0 * w * w)).exp(), *ph);
                }
                vals[grid.idx(ix, iy, iz)] += acc;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// decomposition
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    pub l_max: usize,
    /// Stop once the windowed content of the remainder tail drops below this.
    pub eps: f64,
    /// Window half-width for the content scan.
    pub window: f64,
    /// Keep the averaged profile only within this ball around the anchor.
    pub keep_radius: f64,
}

impl DecomposeOptions {
    pub fn new(l_max: usize, eps: f64, window: f64) -> Self {
        Self {
            l_max,
            eps,
            window,
            keep_radius: 3.0 * window,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtractedProfile {
    pub field: CartesianField,
    /// Per-member shift of this profile (anchor-relative coordinates).
    pub shifts: Vec<[f64; 3]>,
    /// Tail windowed content before this extraction.
    pub eta_before: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MemberNorms {
    pub l2_sq: f64,
    pub h1c_sq: f64,
    pub lq: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileScore {
    pub truth_index: usize,
    pub rel_l2_error: f64,
}

#[derive(Debug)]
pub struct DecompositionResult {
    pub profiles: Vec<ExtractedProfile>,
    pub remainders: Vec<CartesianField>,
    /// Tail windowed content after each extraction (starts with the input's).
    pub eta_history: Vec<f64>,
    pub member_norms: Vec<MemberNorms>,
    pub remainder_norms: Vec<MemberNorms>,
    /// Σ_j ‖V^j‖²_{L²} (translation-invariant).
    pub profile_l2_sq_sum: f64,
    /// Per member: Σ_j ‖V^j(· - x_n^j)‖²_{Ḣ¹_c} (the Hardy term sees shifts).
    pub profile_h1c_sq_sum: Vec<f64>,
    /// Ground-truth match per extracted profile, when truth is available.
    pub scores: Vec<ProfileScore>,
}

pub fn decompose(
    seq: &SyntheticSequence,
    params: ProblemParams,
    opts: DecomposeOptions,
) -> Result<DecompositionResult> {
    if opts.l_max == 0 || opts.eps <= 0.0 || opts.eps.is_nan() {
        return Err(Error::Domain {
            reason: "need l_max >= 1 and eps > 0".into(),
        });
    }
    let grid = seq.grid();
    let n_members = seq.members.len();
    let tail_start = n_members / 2;
    let anchor = anchor_index(grid);
    let anchor_xyz = anchor_coord(grid);

    let member_norms: Vec<MemberNorms> = seq
        .members
        .iter()
        .map(|m| norms_of(grid, m.values(), params))
        .collect();

    let mut work: Vec<CartesianField> = seq.members.to_vec();
    let mut profiles: Vec<ExtractedProfile> = Vec::new();

    let tail_eta = |fields: &[CartesianField]| -> Result<f64> {
        let mut best: f64 = 0.0;
        for f in &fields[tail_start..] {
            best = best.max(eta_surrogate(f, opts.window)?.value);
        }
        Ok(best)
    };

    let mut eta_now = tail_eta(&work)?;
    let mut eta_history = vec![eta_now];

    while profiles.len() < opts.l_max && eta_now >= opts.eps {
        // align every member at its content maximizer
        let mut centers = Vec::with_capacity(n_members);
        let mut aligned_tail_sum = vec![Complex64::ZERO; grid.cell_count()];
        for (n, f) in work.iter().enumerate() {
            let eta = eta_surrogate(f, opts.window)?;
            let off = [
                anchor[0] as i64 - eta.center_index[0] as i64,
                anchor[1] as i64 - eta.center_index[1] as i64,
                anchor[2] as i64 - eta.center_index[2] as i64,
            ];
            centers.push((eta.center_index, off));
            if n >= tail_start {
                let aligned = f.translated(off);
                for (a, b) in aligned_tail_sum.iter_mut().zip(aligned.values()) {
                    *a += b;
                }
            }
        }
        let tail_count = (n_members - tail_start) as f64;
        for v in aligned_tail_sum.iter_mut() {
            *v /= tail_count;
        }
        // locality of the weak limit: keep only the ball around the anchor
        let keep2 = opts.keep_radius * opts.keep_radius;
        for ix in 0..grid.n() {
            let x = grid.coord(ix) - anchor_xyz[0];
            for iy in 0..grid.n() {
                let y = grid.coord(iy) - anchor_xyz[1];
                for iz in 0..grid.n() {
                    let z = grid.coord(iz) - anchor_xyz[2];
                    if x * x + y * y + z * z > keep2 {
                        aligned_tail_sum[grid.idx(ix, iy, iz)] = Complex64::ZERO;
                    }
                }
            }
        }
        let profile = CartesianField::new(Arc::clone(grid), aligned_tail_sum)?;

        // subtract the extracted translate from every member
        let mut shifts = Vec::with_capacity(n_members);
        for (n, f) in work.iter_mut().enumerate() {
            let (center_idx, off) = centers[n];
            let back = [-off[0], -off[1], -off[2]];
            let translated = profile.translated(back);
            for (a, b) in f.values_mut().iter_mut().zip(translated.values()) {
                *a -= b;
            }
            shifts.push([
                grid.coord(center_idx[0]) - anchor_xyz[0],
                grid.coord(center_idx[1]) - anchor_xyz[1],
                grid.coord(center_idx[2]) - anchor_xyz[2],
            ]);
        }

        profiles.push(ExtractedProfile {
            field: profile,
            shifts,
            eta_before: eta_now,
        });

        let eta_next = tail_eta(&work)?;
        eta_history.push(eta_next);
        if eta_next >= eta_now {
            return Err(Error::Stagnation {
                eta_prev: eta_now,
                eta: eta_next,
            });
        }
        eta_now = eta_next;
    }

    let remainder_norms: Vec<MemberNorms> = work
        .iter()
        .map(|m| norms_of(grid, m.values(), params))
        .collect();

    let profile_l2_sq_sum: f64 = profiles.iter().map(|p| p.field.l2_norm_sq()).sum();
    let mut profile_h1c_sq_sum = vec![0.0; n_members];
    for p in &profiles {
        for (n, &s) in p.shifts.iter().enumerate() {
            let off = grid.lattice_offset(s)?;
            let tr = p.field.translated(off);
            profile_h1c_sq_sum[n] += cartesian_functionals(grid, tr.values(), params).h1c_sq;
        }
    }

    // score against ground truth (both anchor-centered by construction)
    let mut scores = Vec::new();
    for p in &profiles {
        let mut best = ProfileScore {
            truth_index: usize::MAX,
            rel_l2_error: f64::INFINITY,
        };
        for (ti, truth) in seq.truth_profiles.iter().enumerate() {
            let mut diff2 = 0.0;
            for (a, b) in p.field.values().iter().zip(truth.values()) {
                diff2 += (a - b).norm_sqr();
            }
            let rel = (diff2 * grid.cell_volume()).sqrt() / truth.l2_norm_sq().sqrt();
            if rel < best.rel_l2_error {
                best = ProfileScore {
                    truth_index: ti,
                    rel_l2_error: rel,
                };
            }
        }
        scores.push(best);
    }

    Ok(DecompositionResult {
        profiles,
        remainders: work,
        eta_history,
        member_norms,
        remainder_norms,
        profile_l2_sq_sum,
        profile_h1c_sq_sum,
        scores,
    })
}

fn norms_of(grid: &CartesianGrid, values: &[Complex64], params: ProblemParams) -> MemberNorms {
    let led = cartesian_functionals(grid, values, params);
    MemberNorms {
        l2_sq: led.mass,
        h1c_sq: led.h1c_sq,
        lq: led.lq_crit,
    }
}

// ---------------------------------------------------------------------------
// norm-expansion ledger
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    /// |‖v_n‖² - Σ‖V^j‖² - ‖v_n^l‖²| / ‖v_n‖² per member.
    pub l2_residual_rel: Vec<f64>,
    /// Same with the Ḣ¹_c norms (translated profiles).
    pub h1c_residual_rel: Vec<f64>,
    /// Remainder ∫|v_n^l|^q relative to the largest member value, q = 4/d+2.
    pub remainder_lq_rel: Vec<f64>,
}

/// Pythagorean residuals of the norm expansions; they shrink along the
/// sequence as the translates separate.
pub fn norm_expansion_check(
    result: &DecompositionResult,
    _params: ProblemParams,
) -> ExpansionReport {
    let n_members = result.member_norms.len();
    let mut l2 = Vec::with_capacity(n_members);
    let mut h1c = Vec::with_capacity(n_members);
    let mut lq = Vec::with_capacity(n_members);
    let max_member_lq = result
        .member_norms
        .iter()
        .map(|m| m.lq)
        .fold(0.0, f64::max);
    for n in 0..n_members {
        let m = &result.member_norms[n];
        let r = &result.remainder_norms[n];
        l2.push((m.l2_sq - result.profile_l2_sq_sum - r.l2_sq).abs() / m.l2_sq);
        h1c.push((m.h1c_sq - result.profile_h1c_sq_sum[n] - r.h1c_sq).abs() / m.h1c_sq);
        lq.push(r.lq / max_member_lq);
    }
    ExpansionReport {
        l2_residual_rel: l2,
        h1c_residual_rel: h1c,
        remainder_lq_rel: lq,
    }
}

// ---------------------------------------------------------------------------
// suite manifest (JSON interface)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub amplitude: f64,
    pub width: f64,
}

/// JSON manifest of a synthetic decomposition suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub d: u32,
    #[serde(default)]
    pub c: f64,
    pub n: usize,
    pub l: f64,
    pub profiles: Vec<GaussianSpec>,
    pub shift_rule: ShiftRule,
    #[serde(rename = "N")]
    pub n_members: usize,
    pub noise: f64,
    pub eps: f64,
    pub l_max: usize,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_window() -> f64 {
    3.0
}

impl SuiteManifest {
    pub fn run(&self) -> Result<(SyntheticSequence, DecompositionResult, ExpansionReport)> {
        let params = ProblemParams::new(self.d, self.c)?;
        let grid = CartesianGrid::build(params, self.l, self.n)?;
        let profiles: Vec<CartesianField> = self
            .profiles
            .iter()
            .map(|g| gaussian_profile(&grid, g.amplitude, g.width))
            .collect();
        let seq = synth_sequence(&profiles, &self.shift_rule, self.n_members, self.noise, self.seed)?;
        let result = decompose(&seq, params, DecomposeOptions::new(self.l_max, self.eps, self.window))?;
        let report = norm_expansion_check(&result, params);
        Ok((seq, result, report))
    }
}

/// JSON export of the decomposition ledgers.
#[derive(Debug, Serialize)]
pub struct DecompositionLedger {
    pub extracted: usize,
    pub eta_history: Vec<f64>,
    pub member_l2_sq: Vec<f64>,
    pub profile_l2_sq_sum: f64,
    pub remainder_l2_sq: Vec<f64>,
    pub l2_residual_rel: Vec<f64>,
    pub h1c_residual_rel: Vec<f64>,
    pub remainder_lq_rel: Vec<f64>,
    pub scores: Vec<ProfileScore>,
    pub shifts: Vec<Vec<[f64; 3]>>,
}

impl DecompositionLedger {
    pub fn assemble(result: &DecompositionResult, report: &ExpansionReport) -> Self {
        Self {
            extracted: result.profiles.len(),
            eta_history: result.eta_history.clone(),
            member_l2_sq: result.member_norms.iter().map(|m| m.l2_sq).collect(),
            profile_l2_sq_sum: result.profile_l2_sq_sum,
            remainder_l2_sq: result.remainder_norms.iter().map(|m| m.l2_sq).collect(),
            l2_residual_rel: report.l2_residual_rel.clone(),
            h1c_residual_rel: report.h1c_residual_rel.clone(),
            remainder_lq_rel: report.remainder_lq_rel.clone(),
            scores: result.scores.clone(),
            shifts: result.profiles.iter().map(|p| p.shifts.clone()).collect(),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }
}

/// Optional per-profile field export: flattened [re, im] samples.
pub fn write_profile_field(field: &CartesianField, path: &Path) -> Result<()> {
    let grid = field.grid();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "{{\"n\": {}, \"l\": {}, \"samples\": [",
        grid.n(),
        grid.half_extent()
    )?;
    let last = field.values().len() - 1;
    for (i, v) in field.values().iter().enumerate() {
        let sep = if i == last { "" } else { "," };
        writeln!(f, "[{:.17e},{:.17e}]{sep}", v.re, v.im)?;
    }
    writeln!(f, "]}}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartesian::hardy_cross_term;

    fn grid(l: f64, n: usize) -> Arc<CartesianGrid> {
        let p = ProblemParams::new(3, 0.125).unwrap();
        CartesianGrid::build(p, l, n).unwrap()
    }

    #[test]
    fn eta_of_zero_is_zero() {
        let g = grid(8.0, 32);
        let z = CartesianField::zero(Arc::clone(&g));
        let eta = eta_surrogate(&z, 2.0).unwrap();
        assert_eq!(eta.value, 0.0);
        assert!(eta_surrogate(&z, 0.5).is_err(), "window below 3h");
    }

    #[test]
    fn eta_finds_bump_and_is_translation_equivariant() {
        let g = grid(8.0, 32);
        let bump = gaussian_profile(&g, 1.0, 0.8);
        let eta0 = eta_surrogate(&bump, 2.0).unwrap();
        let c = anchor_coord(&g);
        for k in 0..3 {
            assert!(
                (eta0.center[k] - c[k]).abs() <= g.spacing() + 1e-12,
                "center {:?} should be within h of {:?}",
                eta0.center,
                c
            );
        }
        let h = g.spacing();
        let shifted = bump.translated(g.lattice_offset([4.0 * h, -6.0 * h, 2.0 * h]).unwrap());
        let eta1 = eta_surrogate(&shifted, 2.0).unwrap();
        assert!((eta1.center[0] - (eta0.center[0] + 4.0 * h)).abs() < 1e-12);
        assert!((eta1.center[1] - (eta0.center[1] - 6.0 * h)).abs() < 1e-12);
        assert!((eta1.center[2] - (eta0.center[2] + 2.0 * h)).abs() < 1e-12);
        assert!((eta1.value - eta0.value).abs() < 1e-12 * eta0.value);
    }

    #[test]
    fn synth_is_pure_translate_for_one_clean_profile() {
        let g = grid(12.0, 48);
        let bump = gaussian_profile(&g, 1.0, 0.8);
        let rule = ShiftRule::AxisLinear {
            base: 1.0,
            step: 0.5,
        };
        let seq = synth_sequence(std::slice::from_ref(&bump), &rule, 4, 0.0, 7).unwrap();
        let off = g.lattice_offset(seq.truth_shifts[2][0]).unwrap();
        let expect = bump.translated(off);
        for (a, b) in seq.members[2].values().iter().zip(expect.values()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn synth_rejects_escaping_shifts() {
        let g = grid(8.0, 32);
        let bump = gaussian_profile(&g, 1.0, 1.0);
        let rule = ShiftRule::AxisLinear {
            base: 2.0,
            step: 2.0,
        };
        assert!(matches!(
            synth_sequence(std::slice::from_ref(&bump), &rule, 8, 0.0, 7),
            Err(Error::Generation { .. })
        ));
    }

    #[test]
    fn clean_single_profile_is_recovered_exactly() {
        let g = grid(12.0, 48);
        let bump = gaussian_profile(&g, 1.0, 0.8);
        let rule = ShiftRule::AxisLinear {
            base: 1.0,
            step: 0.5,
        };
        let params = g.params();
        let seq = synth_sequence(std::slice::from_ref(&bump), &rule, 6, 0.0, 3).unwrap();
        let mut opts = DecomposeOptions::new(3, 1e-4, 2.0);
        opts.keep_radius = 6.0;
        let result = decompose(&seq, params, opts).unwrap();
        assert_eq!(result.profiles.len(), 1);
        assert!(result.scores[0].rel_l2_error < 1e-6);
        let bump_l2 = bump.l2_norm_sq().sqrt();
        for rem in &result.remainders {
            assert!(rem.l2_norm_sq().sqrt() <= 1e-6 * bump_l2);
        }
        let report = norm_expansion_check(&result, params);
        for &r in &report.l2_residual_rel {
            assert!(r <= 1e-6);
        }
    }

    #[test]
    fn two_profiles_with_noise_are_separated() {
        let g = grid(16.0, 64);
        let b1 = gaussian_profile(&g, 1.0, 1.0);
        let b2 = gaussian_profile(&g, 0.7, 1.2);
        let rule = ShiftRule::AxisLinear {
            base: 1.0,
            step: 0.5,
        };
        let params = g.params();
        let seq = synth_sequence(&[b1, b2], &rule, 16, 1e-3, 42).unwrap();
        let mut opts = DecomposeOptions::new(4, 0.05, 2.0);
        opts.keep_radius = 6.0;
        let result = decompose(&seq, params, opts).unwrap();
        assert_eq!(result.profiles.len(), 2, "eta history {:?}", result.eta_history);
        // distinct truth matches, both within 2%
        assert_ne!(result.scores[0].truth_index, result.scores[1].truth_index);
        for s in &result.scores {
            assert!(
                s.rel_l2_error < 0.02,
                "profile recovery error {} too large",
                s.rel_l2_error
            );
        }
        // pairwise divergence: |x_n^1 - x_n^2| non-decreasing along the tail
        let p0 = &result.profiles[0].shifts;
        let p1 = &result.profiles[1].shifts;
        let dist = |a: [f64; 3], b: [f64; 3]| {
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
        };
        for n in 8..15 {
            assert!(
                dist(p0[n + 1], p1[n + 1]) >= dist(p0[n], p1[n]) - 1e-12,
                "pairwise distance dropped at member {n}"
            );
        }
        // Pythagorean ledgers at the last member; o_n(1) trend vs the first
        let report = norm_expansion_check(&result, params);
        let last = *report.l2_residual_rel.last().unwrap();
        let first = report.l2_residual_rel[0];
        assert!(last <= 0.01, "L2 residual {last}");
        assert!(*report.h1c_residual_rel.last().unwrap() <= 0.01);
        assert!(last < first, "residual should shrink along the sequence");
        // remainder small in the critical Lebesgue norm
        assert!(*report.remainder_lq_rel.last().unwrap() <= 0.10);
    }

    #[test]
    fn stagnation_is_reported() {
        // two members carrying the same bump with opposite signs: the aligned
        // tail average cancels, subtraction adds content, and the windowed
        // content fails to decrease
        let g = grid(12.0, 48);
        let bump = gaussian_profile(&g, 1.0, 0.8);
        let rule = ShiftRule::AxisLinear {
            base: 1.0,
            step: 0.5,
        };
        let params = g.params();
        let mut seq = synth_sequence(std::slice::from_ref(&bump), &rule, 4, 0.0, 3).unwrap();
        let flipped: Vec<Complex64> = seq.members[3]
            .values()
            .iter()
            .map(|v| -v)
            .collect();
        seq.members[3] = CartesianField::new(Arc::clone(seq.members[3].grid()), flipped).unwrap();
        let err = decompose(&seq, params, DecomposeOptions::new(4, 1e-6, 2.0));
        assert!(matches!(err, Err(Error::Stagnation { .. })));
    }

    #[test]
    fn residual_trend_improves_with_longer_sequences() {
        // the Pythagorean residual at the last member shrinks as the
        // sequence grows: the surrogate weak limit is cleaner at larger N
        let g = grid(16.0, 64);
        let params = g.params();
        let mut last_residuals = Vec::new();
        for n_members in [8usize, 16] {
            let b1 = gaussian_profile(&g, 1.0, 1.0);
            let b2 = gaussian_profile(&g, 0.7, 1.0);
            let rule = ShiftRule::AxisLinear {
                base: 2.0,
                step: 0.5,
            };
            let seq = synth_sequence(&[b1, b2], &rule, n_members, 0.0, 5).unwrap();
            let result = decompose(&seq, params, DecomposeOptions::new(4, 0.05, 2.0)).unwrap();
            let report = norm_expansion_check(&result, params);
            last_residuals.push(*report.l2_residual_rel.last().unwrap());
        }
        assert!(
            last_residuals[1] < last_residuals[0],
            "expected the N = 16 residual below the N = 8 one: {last_residuals:?}"
        );
    }

    #[test]
    fn h1c_residual_tracks_the_hardy_cross_term() {
        // for a clean two-bump member the only non-Pythagorean content in
        // hardy(v) is the cross integral, so the ledger defect and the
        // direct cross term agree within a small factor
        let g = grid(16.0, 64);
        let params = g.params();
        let b1 = gaussian_profile(&g, 1.0, 1.0);
        let b2 = gaussian_profile(&g, 0.7, 1.2);
        let s1 = [2.0, 0.0, 0.0];
        let s2 = [-2.0, 0.0, 0.0];
        let t1 = b1.translated(g.lattice_offset(s1).unwrap());
        let t2 = b2.translated(g.lattice_offset(s2).unwrap());
        let mut v = t1.clone();
        for (a, b) in v.values_mut().iter_mut().zip(t2.values()) {
            *a += b;
        }
        let hardy_of = |f: &CartesianField| cartesian_functionals(&g, f.values(), params).hardy;
        let defect = (hardy_of(&v) - hardy_of(&t1) - hardy_of(&t2)).abs();
        let shift = [s1[0] - s2[0], 0.0, 0.0];
        let cross =
            2.0 * crate::cartesian::hardy_cross_integral(&g, b1.values(), t2.values(), s1)
                .unwrap()
                .re
                .abs();
        let _ = shift;
        assert!(defect > 0.0 && cross > 0.0);
        let ratio = defect / cross;
        assert!(
            (0.25..=4.0).contains(&ratio),
            "ledger defect {defect:.3e} vs direct cross term {cross:.3e} (ratio {ratio:.2})"
        );
    }

    #[test]
    fn hardy_cross_case1_escaping_translate() {
        let g = grid(16.0, 64);
        let v = gaussian_profile(&g, 1.0, 1.0);
        let w = gaussian_profile(&g, 1.0, 1.0);
        let mut prev = f64::INFINITY;
        for s in [4.0, 8.0, 16.0] {
            let c = hardy_cross_term(&g, v.values(), w.values(), [s, 0.0, 0.0]).unwrap();
            assert!(c < prev, "|cross| should decay with distance: {c} at s={s}");
            prev = c;
        }
    }

    #[test]
    fn hardy_cross_case2_oscillatory() {
        // fixed shift 0, weakly-null oscillatory family w_k = bump e^{ikx}
        let p = ProblemParams::new(3, 0.125).unwrap();
        let g = CartesianGrid::build(p, 6.0, 64).unwrap();
        let v = gaussian_profile(&g, 1.0, 1.0);
        let mut prev = f64::INFINITY;
        for k in [4.0, 8.0, 16.0] {
            let w = CartesianField::sample(Arc::clone(&g), |x| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                Complex64::from_polar((-r2 / 2.0).exp(), k * x[0])
            });
            let c = hardy_cross_term(&g, v.values(), w.values(), [0.0, 0.0, 0.0]).unwrap();
            assert!(c < prev, "oscillatory cross term should decay: {c} at k={k}");
            prev = c;
        }
    }
}
