//! Shared numerical primitives: adaptive quadrature, bisection, and
//! piecewise-cubic interpolation of sampled series.

use crate::error::Error;
use crate::real::Real;
use crate::Result;

/// Adaptive Simpson quadrature of `f` on `[a, b]` to relative tolerance
/// `rel_tol` (with an absolute floor for integrals near zero).
pub fn adaptive_simpson<T: Real>(f: &dyn Fn(T) -> T, a: T, b: T, rel_tol: T) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) / T::of(2.0);
    let fm = f(m);
    for (z, v) in [(a, fa), (m, fm), (b, fb)] {
        if !v.is_finite() {
            return Err(Error::InvalidKernel {
                input: format!("integrand at {}", z.as_f64()),
            });
        }
    }
    let whole = (b - a) / T::of(6.0) * (fa + T::of(4.0) * fm + fb);
    // Scale-aware tolerance: a crude magnitude estimate guards the
    // relative criterion when the integral itself is tiny.
    let scale = whole.abs().max((b - a).abs() * fm.abs()).max(T::of(1e-300));
    simpson_recurse(f, a, b, fa, fm, fb, whole, rel_tol * scale, 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<T: Real>(
    f: &dyn Fn(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    eps: T,
    depth: u32,
) -> Result<T> {
    const MAX_DEPTH: u32 = 60;
    let m = (a + b) / T::of(2.0);
    let lm = (a + m) / T::of(2.0);
    let rm = (m + b) / T::of(2.0);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        return Err(Error::InvalidKernel {
            input: format!("integrand near {}", m.as_f64()),
        });
    }
    let h6 = (b - a) / T::of(12.0);
    let left = h6 * (fa + T::of(4.0) * flm + fm);
    let right = h6 * (fm + T::of(4.0) * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= T::of(15.0) * eps || (b - a).abs() < T::epsilon() * a.abs().max(b.abs()) {
        return Ok(left + right + delta / T::of(15.0));
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureNonConvergence(format!(
            "max refinement depth on [{}, {}]",
            a.as_f64(),
            b.as_f64()
        )));
    }
    let half = eps / T::of(2.0);
    let l = simpson_recurse(f, a, m, fa, flm, fm, left, half, depth + 1)?;
    let r = simpson_recurse(f, m, b, fm, frm, fb, right, half, depth + 1)?;
    Ok(l + r)
}

/// Bisection for a root of `f` in `[lo, hi]`; the endpoints must bracket a
/// sign change (a zero endpoint is returned directly).
pub fn bisect<T: Real>(f: &dyn Fn(T) -> T, mut lo: T, mut hi: T, x_tol: T) -> Result<T> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return Err(Error::NoEquilibrium(format!(
            "no sign change on [{}, {}]",
            lo.as_f64(),
            hi.as_f64()
        )));
    }
    // 1 bit per iteration; 200 exhausts any f64 bracket.
    for _ in 0..200 {
        let mid = (lo + hi) / T::of(2.0);
        let fmid = f(mid);
        if fmid == T::zero() {
            return Ok(mid);
        }
        if (fmid > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= x_tol {
            break;
        }
    }
    Ok((lo + hi) / T::of(2.0))
}

/// Piecewise-cubic interpolant of a sampled series.
///
/// Knot derivatives come from centered differences (one-sided at the
/// ends), i.e. a Catmull-Rom style C¹ interpolant; good enough to stay
/// below the integration error of the series it interpolates.
#[derive(Debug, Clone)]
pub struct PiecewiseCubic<T> {
    ts: Vec<T>,
    ys: Vec<T>,
    dydt: Vec<T>,
}

impl<T: Real> PiecewiseCubic<T> {
    pub fn from_samples(ts: &[T], ys: &[T]) -> Self {
        assert_eq!(ts.len(), ys.len());
        assert!(ts.len() >= 2, "need at least two samples");
        let n = ts.len();
        let mut dydt = Vec::with_capacity(n);
        for k in 0..n {
            let (i0, i1) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            dydt.push((ys[i1] - ys[i0]) / (ts[i1] - ts[i0]));
        }
        Self {
            ts: ts.to_vec(),
            ys: ys.to_vec(),
            dydt,
        }
    }

    /// Same knots with values (and slopes) scaled by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            ts: self.ts.clone(),
            ys: self.ys.iter().map(|&y| y * factor).collect(),
            dydt: self.dydt.iter().map(|&m| m * factor).collect(),
        }
    }

    pub fn t_start(&self) -> T {
        self.ts[0]
    }

    pub fn t_end(&self) -> T {
        *self.ts.last().unwrap()
    }

    /// Hermite evaluation at `t`; errors when `t` lies outside the knots
    /// (beyond a small rounding slack).
    pub fn eval(&self, t: T) -> Result<T> {
        let slack = T::of(1e-9) * (self.t_end() - self.t_start()).abs().max(T::one());
        if t < self.t_start() - slack || t > self.t_end() + slack {
            return Err(Error::HistoryTooShort {
                needed: t.as_f64(),
                have: self.t_end().as_f64(),
            });
        }
        let t = t.max(self.t_start()).min(self.t_end());
        // Knots are ordered; binary search for the enclosing interval.
        let mut lo = 0usize;
        let mut hi = self.ts.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.ts[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.ts[hi] - self.ts[lo];
        let u = (t - self.ts[lo]) / h;
        let (y0, y1) = (self.ys[lo], self.ys[hi]);
        let (m0, m1) = (self.dydt[lo] * h, self.dydt[hi] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let two = T::of(2.0);
        let three = T::of(3.0);
        Ok((two * u3 - three * u2 + T::one()) * y0
            + (u3 - two * u2 + u) * m0
            + (three * u2 - two * u3) * y1
            + (u3 - u2) * m1)
    }
}

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolant; used for
/// tabulated birth functions where overshoot would break Assumption-style
/// bounds. C¹ with an analytic derivative.
#[derive(Debug, Clone)]
pub struct MonotoneCubic<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> MonotoneCubic<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::param("samples", "need at least two (x, y) pairs"));
        }
        for w in xs.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::param("samples", "x values must strictly increase"));
            }
        }
        let n = xs.len();
        let mut secants = Vec::with_capacity(n - 1);
        for k in 0..n - 1 {
            secants.push((ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]));
        }
        let mut slopes = vec![T::zero(); n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            let (s0, s1) = (secants[k - 1], secants[k]);
            slopes[k] = if s0 * s1 <= T::zero() {
                T::zero()
            } else {
                // Harmonic mean keeps the interpolant monotone.
                T::of(2.0) * s0 * s1 / (s0 + s1)
            };
        }
        // Fritsch-Carlson clamp.
        for k in 0..n - 1 {
            let s = secants[k];
            if s == T::zero() {
                slopes[k] = T::zero();
                slopes[k + 1] = T::zero();
            } else {
                let a = slopes[k] / s;
                let b = slopes[k + 1] / s;
                let r = (a * a + b * b).sqrt();
                if r > T::of(3.0) {
                    let f = T::of(3.0) / r;
                    slopes[k] = f * a * s;
                    slopes[k + 1] = f * b * s;
                }
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    fn segment(&self, x: T) -> usize {
        let n = self.xs.len();
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    pub fn domain(&self) -> (T, T) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Value at `x`; constant extension outside the sampled range.
    pub fn eval(&self, x: T) -> T {
        if x <= self.xs[0] {
            return self.ys[0];
        }
        let n = self.xs.len();
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let u = (x - self.xs[k]) / h;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let two = T::of(2.0);
        let three = T::of(3.0);
        (two * u3 - three * u2 + T::one()) * y0
            + (u3 - two * u2 + u) * m0
            + (three * u2 - two * u3) * y1
            + (u3 - u2) * m1
    }

    /// Analytic derivative of the interpolant at `x` (zero outside).
    pub fn derivative(&self, x: T) -> T {
        let n = self.xs.len();
        if x <= self.xs[0] || x >= self.xs[n - 1] {
            return T::zero();
        }
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let u = (x - self.xs[k]) / h;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (m0, m1) = (self.slopes[k], self.slopes[k + 1]);
        let u2 = u * u;
        let six = T::of(6.0);
        let three = T::of(3.0);
        let two = T::of(2.0);
        (six * u2 - six * u) * (y0 - y1) / h
            + (three * u2 - T::of(4.0) * u + T::one()) * m0
            + (three * u2 - two * u) * m1
    }
}
