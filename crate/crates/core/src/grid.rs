//! Radial grids on (0, r_max] with quadrature weights realizing the measure
//! |S^{d-1}| r^{d-1} dr for radial integrands.
//!
//! The origin is never a node: the potential c|x|^{-2} and the indicial
//! behavior a r^{-σ} of ground states are singular or degenerate at r = 0.
//! The uniform-shifted scheme places nodes at cell midpoints (j + 1/2) h;
//! the graded scheme clusters nodes geometrically near the origin to resolve
//! r^{-σ} profiles.

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const DEFAULT_GRADED_RMIN_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme")]
pub enum GridScheme {
    #[serde(rename = "uniform-shifted")]
    UniformShifted,
    #[serde(rename = "graded")]
    Graded {
        #[serde(default = "default_rmin_ratio")]
        rmin_ratio: f64,
    },
}

fn default_rmin_ratio() -> f64 {
    DEFAULT_GRADED_RMIN_RATIO
}

impl GridScheme {
    pub fn graded_default() -> Self {
        GridScheme::Graded {
            rmin_ratio: DEFAULT_GRADED_RMIN_RATIO,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GridScheme::UniformShifted => "uniform-shifted",
            GridScheme::Graded { .. } => "graded",
        }
    }
}

/// Discretization of (0, r_max]: strictly increasing positive nodes r_j, cell
/// widths Δ_j and quadrature weights w_j = |S^{d-1}| r_j^{d-1} Δ_j. The cells
/// (e_j, e_{j+1}] partition (0, r_max], with e_0 = 0 and node j inside cell j.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    params: ProblemParams,
    scheme: GridScheme,
    r_max: f64,
    nodes: Vec<f64>,
    widths: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    pub fn build(
        params: ProblemParams,
        r_max: f64,
        n: usize,
        scheme: GridScheme,
    ) -> Result<Arc<Self>> {
        params.validate()?;
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidParams {
                reason: format!("r_max = {r_max} must be positive and finite"),
            });
        }
        if n < 16 {
            return Err(Error::Resolution { needed: 16, got: n });
        }

        let nodes = match scheme {
            GridScheme::UniformShifted => {
                let h = r_max / n as f64;
                (0..n).map(|j| (j as f64 + 0.5) * h).collect::<Vec<_>>()
            }
            GridScheme::Graded { rmin_ratio } => {
                if !(rmin_ratio > 0.0 && rmin_ratio < 0.5) {
                    return Err(Error::InvalidParams {
                        reason: format!("graded rmin_ratio = {rmin_ratio} must lie in (0, 0.5)"),
                    });
                }
                let r_min = rmin_ratio * r_max;
                let g = (r_max / r_min).powf(1.0 / (n as f64 - 1.0));
                let mut nodes = Vec::with_capacity(n);
                let mut r = r_min;
                for _ in 0..n {
                    nodes.push(r);
                    r *= g;
                }
                // pin the endpoint exactly
                nodes[n - 1] = r_max;
                nodes
            }
        };

        // Cell edges at midpoints between nodes; first cell starts at the
        // origin, last cell ends at r_max.
        let mut widths = Vec::with_capacity(n);
        for j in 0..n {
            let lo = if j == 0 { 0.0 } else { 0.5 * (nodes[j - 1] + nodes[j]) };
            let hi = if j == n - 1 {
                r_max
            } else {
                0.5 * (nodes[j] + nodes[j + 1])
            };
            widths.push(hi - lo);
        }

        let area = params.sphere_area();
        let weights = nodes
            .iter()
            .zip(&widths)
            .map(|(&r, &dv)| area * r.powi(params.d as i32 - 1) * dv)
            .collect();

        Ok(Arc::new(Self {
            params,
            scheme,
            r_max,
            nodes,
            widths,
            weights,
        }))
    }

    pub fn params(&self) -> ProblemParams {
        self.params
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Smallest node spacing; enters the default time-step rule.
    pub fn min_spacing(&self) -> f64 {
        match self.scheme {
            GridScheme::UniformShifted => self.r_max / self.len() as f64,
            GridScheme::Graded { .. } => self.nodes[1] - self.nodes[0],
        }
    }

    /// Quadrature of a real sample vector against the radial measure.
    pub fn integrate(&self, samples: impl Iterator<Item = f64>) -> f64 {
        self.weights.iter().zip(samples).map(|(w, s)| w * s).sum()
    }

    /// Structural compatibility check used by field/functional operations.
    pub fn same_discretization(&self, other: &RadialGrid) -> bool {
        self.params == other.params
            && self.scheme == other.scheme
            && self.r_max == other.r_max
            && self.nodes.len() == other.nodes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> ProblemParams {
        ProblemParams::new(3, 0.0).unwrap()
    }

    #[test]
    fn uniform_shifted_matches_midpoint_rule() {
        let g = RadialGrid::build(p3(), 10.0, 1000, GridScheme::UniformShifted).unwrap();
        assert!((g.nodes()[0] - 0.005).abs() < 1e-15);
        let ball = p3().ball_volume(10.0);
        let total: f64 = g.weights().iter().sum();
        assert!(
            ((total - ball) / ball).abs() < 5e-3,
            "weight sum {total} vs ball volume {ball}"
        );
    }

    #[test]
    fn weights_use_surface_area_d4() {
        let p = ProblemParams::new(4, 0.0).unwrap();
        let g = RadialGrid::build(p, 1.0, 16, GridScheme::UniformShifted).unwrap();
        let h = 1.0 / 16.0;
        let s3 = 2.0 * std::f64::consts::PI.powi(2);
        for (j, (&r, &w)) in g.nodes().iter().zip(g.weights()).enumerate() {
            let expect = s3 * r.powi(3) * h;
            assert!(
                ((w - expect) / expect).abs() < 1e-13,
                "node {j}: weight {w} vs {expect}"
            );
        }
        let ball = p.ball_volume(1.0);
        let total: f64 = g.weights().iter().sum();
        assert!(((total - ball) / ball).abs() < 5e-3);
    }

    #[test]
    fn graded_grid_follows_geometric_recurrence() {
        let g = RadialGrid::build(p3(), 10.0, 500, GridScheme::graded_default()).unwrap();
        let nodes = g.nodes();
        assert!(nodes[0] < 1e-4, "smallest node {} too large", nodes[0]);
        // constant spacing ratio, checked against the defining recurrence
        let ratio = nodes[1] / nodes[0];
        for j in 1..nodes.len() - 1 {
            let r = nodes[j + 1] / nodes[j];
            assert!(
                (r / ratio - 1.0).abs() < 1e-9,
                "ratio drift at node {j}: {r} vs {ratio}"
            );
        }
        let recurrence: f64 = nodes[0] * ratio.powi(499);
        assert!((recurrence / nodes[499] - 1.0).abs() < 1e-9);
        let ball = p3().ball_volume(10.0);
        let total: f64 = g.weights().iter().sum();
        assert!(((total - ball) / ball).abs() < 5e-3);
    }

    #[test]
    fn polynomial_quadrature_exactness() {
        // r^k for k <= 2 integrated over the ball, default resolution.
        for (d, c) in [(3u32, 0.0), (4, 0.0)] {
            let p = ProblemParams::new(d, c).unwrap();
            for scheme in [GridScheme::UniformShifted, GridScheme::graded_default()] {
                let g = RadialGrid::build(p, 5.0, 1024, scheme).unwrap();
                for k in 0..=2u32 {
                    let exact = p.sphere_area() * 5.0f64.powi((d + k) as i32)
                        / (d as f64 + k as f64);
                    let num = g.integrate(g.nodes().iter().map(|r| r.powi(k as i32)));
                    assert!(
                        ((num - exact) / exact).abs() < 1e-3,
                        "d={d} k={k} {:?}: {num} vs {exact}",
                        scheme.name()
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_undersized_and_invalid() {
        assert!(matches!(
            RadialGrid::build(p3(), 10.0, 8, GridScheme::UniformShifted),
            Err(Error::Resolution { .. })
        ));
        let bad = ProblemParams { d: 2, c: 0.0 };
        assert!(RadialGrid::build(bad, 10.0, 32, GridScheme::UniformShifted).is_err());
        let bad_c = ProblemParams { d: 3, c: 0.5 };
        assert!(RadialGrid::build(bad_c, 10.0, 32, GridScheme::UniformShifted).is_err());
        assert!(RadialGrid::build(p3(), -1.0, 32, GridScheme::UniformShifted).is_err());
    }

    #[test]
    fn nodes_strictly_increasing_and_positive() {
        for scheme in [GridScheme::UniformShifted, GridScheme::graded_default()] {
            let g = RadialGrid::build(p3(), 7.5, 64, scheme).unwrap();
            assert!(g.nodes()[0] > 0.0);
            for j in 1..g.len() {
                assert!(g.nodes()[j] > g.nodes()[j - 1]);
            }
        }
    }
}
