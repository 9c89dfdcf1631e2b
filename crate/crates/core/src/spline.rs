//! Natural cubic spline used for tabulated weights.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    /// `xs` must be strictly increasing with at least two knots.
    pub(crate) fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        debug_assert!(n >= 2 && ys.len() == n);
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for i in 1..k {
                let lower = xs[i + 1] - xs[i];
                let f = lower / diag[i - 1];
                diag[i] -= f * upper[i - 1];
                rhs[i] -= f * rhs[i - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
            }
            m[1..n - 1].copy_from_slice(&sol);
        }
        Self { xs, ys, m }
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    /// Value and first two derivatives at `x`.
    pub(crate) fn eval3(&self, x: f64) -> [f64; 3] {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        [v, d1, d2]
    }

    pub(crate) fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_and_reproduces_lines() {
        let xs = vec![0.0, 0.3, 0.5, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 1.5 * x).collect();
        let s = CubicSpline::natural(xs.clone(), ys.clone());
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.eval3(*x)[0] - y).abs() < 1e-14);
        }
        let [v, d1, d2] = s.eval3(0.77);
        assert!((v - (2.0 - 1.5 * 0.77)).abs() < 1e-14);
        assert!((d1 + 1.5).abs() < 1e-13);
        assert!(d2.abs() < 1e-12);
    }

    #[test]
    fn smooth_function_is_tracked() {
        let xs: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (1.0 - x * x).powi(2)).collect();
        let s = CubicSpline::natural(xs, ys);
        let x = 0.4321;
        assert!((s.eval3(x)[0] - (1.0 - x * x).powi(2)).abs() < 1e-8);
    }
}
