//! Cubic Hermite interpolation on strictly increasing, possibly non-uniform
//! node sets. Slopes are either supplied (ODE solutions carry exact
//! derivatives) or estimated by second-order finite differences.

#[derive(Debug, Clone)]
pub struct CubicHermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl CubicHermite {
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert_eq!(xs.len(), ds.len());
        assert!(xs.len() >= 2);
        Self { xs, ys, ds }
    }

    pub fn from_values(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let ds = estimate_slopes(&xs, &ys);
        Self::with_slopes(xs, ys, ds)
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn locate(&self, x: f64) -> usize {
        // index of the interval [xs[i], xs[i+1]] containing x (clamped)
        match self
            .xs
            .binary_search_by(|probe| probe.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.xs.len() - 2),
        }
    }

    /// Evaluate at x; clamps outside the node range.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = ((x - self.xs[i]) / h).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1]
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = ((x - self.xs[i]) / h).clamp(0.0, 1.0);
        let dh00 = (6.0 * t * t - 6.0 * t) / h;
        let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
        let dh01 = (6.0 * t - 6.0 * t * t) / h;
        let dh11 = 3.0 * t * t - 2.0 * t;
        dh00 * self.ys[i] + dh10 * self.ds[i] + dh01 * self.ys[i + 1] + dh11 * self.ds[i + 1]
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

/// Second-order slope estimates on a non-uniform node set.
pub fn estimate_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    assert!(n >= 3);
    let mut ds = vec![0.0; n];
    for i in 1..n - 1 {
        let hm = xs[i] - xs[i - 1];
        let hp = xs[i + 1] - xs[i];
        ds[i] = (-hp / (hm * (hm + hp))) * ys[i - 1]
            + ((hp - hm) / (hm * hp)) * ys[i]
            + (hm / (hp * (hm + hp))) * ys[i + 1];
    }
    let h1 = xs[1] - xs[0];
    let h2 = xs[2] - xs[1];
    ds[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * ys[0] + (h1 + h2) / (h1 * h2) * ys[1]
        - h1 / (h2 * (h1 + h2)) * ys[2];
    let g1 = xs[n - 1] - xs[n - 2];
    let g2 = xs[n - 2] - xs[n - 3];
    ds[n - 1] = (2.0 * g1 + g2) / (g1 * (g1 + g2)) * ys[n - 1]
        - (g1 + g2) / (g1 * g2) * ys[n - 2]
        + g1 / (g2 * (g1 + g2)) * ys[n - 3];
    ds
}
