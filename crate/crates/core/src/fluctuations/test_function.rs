use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

/// Gaussians are cut at this many widths; the discarded tail is below `e^{−32} ≈ 1.3e−14`
/// of the peak.
pub const GAUSSIAN_CUTOFF: f64 = 8.0;

/// Shape of a test function before amplitude and dilation are applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `exp(−(u − center)^2 / (2 width^2))`.
    Gaussian { center: f64, width: f64 },
    /// `exp(−1 / (1 − r^2))` with `r = (u − center) / radius`, zero for `|r| ≥ 1`.
    Bump { center: f64, radius: f64 },
    /// Natural cubic spline through equally spaced samples starting at `start`;
    /// zero outside the table. The end samples must vanish.
    TableSpline { start: f64, step: f64, values: Vec<f64> },
}

/// `amplitude · profile(u / dilation)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTestFunction", into = "RawTestFunction")]
pub struct TestFunction {
    pub profile: Profile,
    pub amplitude: f64,
    pub dilation: f64,
    moments: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawTestFunction {
    #[serde(flatten)]
    profile: Profile,
    #[serde(default = "one")]
    amplitude: f64,
    #[serde(default = "one")]
    dilation: f64,
}

impl TryFrom<RawTestFunction> for TestFunction {
    type Error = crate::FepError;

    fn try_from(raw: RawTestFunction) -> Result<Self> {
        let mut f = Self {
            profile: raw.profile,
            amplitude: raw.amplitude,
            dilation: raw.dilation,
            moments: None,
        };
        f.prepare()?;
        Ok(f)
    }
}

impl From<TestFunction> for RawTestFunction {
    fn from(f: TestFunction) -> Self {
        Self {
            profile: f.profile,
            amplitude: f.amplitude,
            dilation: f.dilation,
        }
    }
}

fn one() -> f64 {
    1.0
}

impl TestFunction {
    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && center.is_finite()) {
            bail!(InvalidArgument, "gaussian needs a finite center and positive width");
        }
        Ok(Self::wrap(Profile::Gaussian { center, width }))
    }

    pub fn bump(center: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && center.is_finite()) {
            bail!(InvalidArgument, "bump needs a finite center and positive radius");
        }
        Ok(Self::wrap(Profile::Bump { center, radius }))
    }

    pub fn table_spline(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        let mut f = Self::wrap(Profile::TableSpline { start, step, values });
        f.prepare()?;
        Ok(f)
    }

    fn wrap(profile: Profile) -> Self {
        Self {
            profile,
            amplitude: 1.0,
            dilation: 1.0,
            moments: None,
        }
    }

    /// Validates parameters and precomputes spline moments.
    fn prepare(&mut self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.dilation > 0.0 && self.dilation.is_finite()) {
            bail!(InvalidArgument, "amplitude must be finite and dilation positive");
        }
        match &self.profile {
            Profile::Gaussian { center, width } => {
                Self::gaussian(*center, *width)?;
            }
            Profile::Bump { center, radius } => {
                Self::bump(*center, *radius)?;
            }
            Profile::TableSpline { start, step, values } => {
                if values.len() < 3 || !(*step > 0.0) || !start.is_finite() {
                    bail!(InvalidArgument, "spline needs at least 3 samples and a positive step");
                }
                if values.iter().any(|v| !v.is_finite()) {
                    bail!(InvalidArgument, "spline samples must be finite");
                }
                if values[0] != 0.0 || values[values.len() - 1] != 0.0 {
                    bail!(InvalidArgument, "spline samples must vanish at both ends");
                }
                self.moments = Some(natural_spline_moments(values, *step));
            }
        }
        Ok(())
    }

    pub fn dilated(&self, factor: f64, amplitude: f64) -> Self {
        let mut f = self.clone();
        f.dilation *= factor;
        f.amplitude *= amplitude;
        f
    }

    /// Centre and half-width of the (effective) support.
    pub fn support(&self) -> (f64, f64) {
        let (c, r) = match &self.profile {
            Profile::Gaussian { center, width } => (*center, GAUSSIAN_CUTOFF * width),
            Profile::Bump { center, radius } => (*center, *radius),
            Profile::TableSpline { start, step, values } => {
                let half = 0.5 * step * (values.len() - 1) as f64;
                (start + half, half)
            }
        };
        (c * self.dilation, r * self.dilation)
    }

    /// Value and first two derivatives at `u`.
    pub fn eval3(&self, u: f64) -> [f64; 3] {
        let z = u / self.dilation;
        let [g, g1, g2] = match &self.profile {
            Profile::Gaussian { center, width } => {
                let r = (z - center) / width;
                if r.abs() > GAUSSIAN_CUTOFF {
                    [0.0; 3]
                } else {
                    let g = (-0.5 * r * r).exp();
                    [g, -r / width * g, (r * r - 1.0) / (width * width) * g]
                }
            }
            Profile::Bump { center, radius } => {
                let r = (z - center) / radius;
                if r.abs() >= 1.0 {
                    [0.0; 3]
                } else {
                    let s = 1.0 - r * r;
                    let b = (-1.0 / s).exp();
                    let f1 = -2.0 * r / (s * s);
                    let f2 = -2.0 / (s * s) - 8.0 * r * r / (s * s * s);
                    [b, b * f1 / radius, b * (f1 * f1 + f2) / (radius * radius)]
                }
            }
            Profile::TableSpline { start, step, values } => {
                let m = self.moments.as_deref().expect("spline prepared before use");
                spline_eval(*start, *step, values, m, z)
            }
        };
        let a = self.amplitude;
        let d = self.dilation;
        [a * g, a * g1 / d, a * g2 / (d * d)]
    }

    pub fn value(&self, u: f64) -> f64 {
        self.eval3(u)[0]
    }

    pub fn derivative(&self, u: f64) -> f64 {
        self.eval3(u)[1]
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        self.eval3(u)[2]
    }

    /// `(amplitude, center, width)` when the function is a Gaussian.
    pub fn as_gaussian(&self) -> Option<(f64, f64, f64)> {
        match self.profile {
            Profile::Gaussian { center, width } => {
                Some((self.amplitude, center * self.dilation, width * self.dilation))
            }
            _ => None,
        }
    }

    /// Short name used in CSV output.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.profile {
            Profile::Gaussian { center, width } => write!(f, "gaussian({center};{width})")?,
            Profile::Bump { center, radius } => write!(f, "bump({center};{radius})")?,
            Profile::TableSpline { start, step, values } => {
                write!(f, "spline({start};{step};{})", values.len())?
            }
        }
        if self.amplitude != 1.0 || self.dilation != 1.0 {
            write!(f, "[x{};/{}]", self.amplitude, self.dilation)?;
        }
        Ok(())
    }
}

fn natural_spline_moments(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm for M_{i−1} + 4 M_i + M_{i+1} = 6 (y_{i−1} − 2 y_i + y_{i+1}) / h^2
    let k = n - 2;
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    for i in 0..k {
        let rhs = 6.0 * (y[i] - 2.0 * y[i + 1] + y[i + 2]) / (h * h);
        let denom = 4.0 - if i > 0 { c[i - 1] } else { 0.0 };
        c[i] = 1.0 / denom;
        d[i] = (rhs - if i > 0 { d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..k).rev() {
        m[i + 1] = d[i] - if i + 1 < k { c[i] * m[i + 2] } else { 0.0 };
    }
    m
}

fn spline_eval(start: f64, h: f64, y: &[f64], m: &[f64], z: f64) -> [f64; 3] {
    let s = (z - start) / h;
    let last = (y.len() - 1) as f64;
    if !(0.0..=last).contains(&s) {
        return [0.0; 3];
    }
    let i = (s.floor() as usize).min(y.len() - 2);
    let t = z - (start + i as f64 * h);
    let u = h - t;
    let (m0, m1, y0, y1) = (m[i], m[i + 1], y[i], y[i + 1]);
    let v = m0 * u.powi(3) / (6.0 * h) + m1 * t.powi(3) / (6.0 * h) + (y0 / h - m0 * h / 6.0) * u + (y1 / h - m1 * h / 6.0) * t;
    let d1 = -m0 * u * u / (2.0 * h) + m1 * t * t / (2.0 * h) - (y0 / h - m0 * h / 6.0) + (y1 / h - m1 * h / 6.0);
    let d2 = (m0 * u + m1 * t) / h;
    [v, d1, d2]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformDirection {
    /// `G̃(u) = (1 − rho) G(u / (1 − rho))`.
    FepToZr,
    /// `Ĝ(u) = G(u (1 − rho)) / (1 − rho)`.
    ZrToFep,
}

/// Rescales a test function between the exclusion and zero-range coordinates.
pub fn transform_test_function(g: &TestFunction, rho: f64, direction: TransformDirection) -> Result<TestFunction> {
    if !(rho > 0.5 && rho < 1.0) {
        bail!(Domain, "density {rho} outside (1/2, 1)");
    }
    let c = 1.0 - rho;
    Ok(match direction {
        TransformDirection::FepToZr => g.dilated(c, c),
        TransformDirection::ZrToFep => g.dilated(1.0 / c, 1.0 / c),
    })
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a >= b {
        return 0.0;
    }
    // split first so narrow peaks are not missed by the initial five points
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            rec(f, x0, x1, f0, fm, f1, h / 6.0 * (f0 + 4.0 * fm + f1), tol / pieces as f64, 40)
        })
        .sum()
}

pub const QUADRATURE_TOL: f64 = 1e-10;

fn gaussian_overlap(a1: f64, c1: f64, v1: f64, a2: f64, c2: f64, v2: f64) -> f64 {
    // ∫ a1 e^{−(u−c1)^2/(2 v1)} a2 e^{−(u−c2)^2/(2 v2)} du, with v the variances
    let v = v1 + v2;
    a1 * a2 * (2.0 * PI * v1 * v2 / v).sqrt() * (-(c1 - c2).powi(2) / (2.0 * v)).exp()
}

/// `⟨G, H⟩ = ∫ G H du`.
pub fn inner_product(g: &TestFunction, h: &TestFunction) -> f64 {
    if let (Some((a1, c1, w1)), Some((a2, c2, w2))) = (g.as_gaussian(), h.as_gaussian()) {
        return gaussian_overlap(a1, c1, w1 * w1, a2, c2, w2 * w2);
    }
    let (lo, hi) = overlap(g, h);
    adaptive_simpson(&|u| g.value(u) * h.value(u), lo, hi, QUADRATURE_TOL)
}

/// `‖∂G‖^2 = ∫ G'(u)^2 du`.
pub fn gradient_norm_sq(g: &TestFunction) -> f64 {
    if let Some((a, _, w)) = g.as_gaussian() {
        return a * a * PI.sqrt() / (2.0 * w);
    }
    let (c, r) = g.support();
    adaptive_simpson(&|u| g.derivative(u).powi(2), c - r, c + r, QUADRATURE_TOL)
}

fn overlap(g: &TestFunction, h: &TestFunction) -> (f64, f64) {
    let (c1, r1) = g.support();
    let (c2, r2) = h.support();
    ((c1 - r1).max(c2 - r2), (c1 + r1).min(c2 + r2))
}

/// `⟨T_t G, H⟩` for the semigroup of `D ∂_u^2`, whose kernel is the centred Gaussian
/// of variance `2 D t`.
pub fn heat_inner_product(g: &TestFunction, h: &TestFunction, d: f64, t: f64) -> (f64, bool) {
    if let (Some((a1, c1, w1)), Some((a2, c2, w2))) = (g.as_gaussian(), h.as_gaussian()) {
        // T_t G is a Gaussian of variance w1^2 + 2Dt and reduced amplitude
        let v1 = w1 * w1 + 2.0 * d * t;
        return (gaussian_overlap(a1 * w1 / v1.sqrt(), c1, v1, a2, c2, w2 * w2), true);
    }
    if t == 0.0 {
        return (inner_product(g, h), false);
    }
    let s = (2.0 * d * t).sqrt();
    let (c1, r1) = g.support();
    let (c2, r2) = h.support();
    let reach = 10.0 * s;
    let lo = (c1 - r1 - reach).max(c2 - r2);
    let hi = (c1 + r1 + reach).min(c2 + r2);
    // (T_t G)(v) = ∫ G(v + s z) φ(z) dz
    let smoothed = |v: f64| {
        let zlo = ((c1 - r1 - v) / s).max(-10.0);
        let zhi = ((c1 + r1 - v) / s).min(10.0);
        adaptive_simpson(
            &|z| g.value(v + s * z) * (-0.5 * z * z).exp() / (2.0 * PI).sqrt(),
            zlo,
            zhi,
            QUADRATURE_TOL,
        )
    };
    (adaptive_simpson(&|v| smoothed(v) * h.value(v), lo, hi, QUADRATURE_TOL), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shapes() -> Vec<TestFunction> {
        vec![
            TestFunction::gaussian(0.3, 0.7).unwrap(),
            TestFunction::bump(-0.5, 1.5).unwrap(),
            TestFunction::table_spline(-1.0, 0.25, vec![0.0, 0.1, 0.5, 1.0, 0.8, 0.4, 0.1, 0.02, 0.0]).unwrap(),
            TestFunction::gaussian(0.0, 1.0).unwrap().dilated(0.25, 0.25),
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for g in shapes() {
            let (c, r) = g.support();
            for i in 1..40 {
                let u = c - r + 2.0 * r * i as f64 / 40.0 + 1e-3;
                let h = 1e-5 * r;
                let [v, d1, d2] = g.eval3(u);
                let fd1 = (g.value(u + h) - g.value(u - h)) / (2.0 * h);
                let fd2 = (g.derivative(u + h) - g.derivative(u - h)) / (2.0 * h);
                let scale1 = d1.abs().max(v.abs()).max(1e-3);
                let scale2 = d2.abs().max(d1.abs()).max(1e-3);
                assert!((d1 - fd1).abs() <= 1e-6 * scale1, "{g} d1 at {u}: {d1} vs {fd1}");
                assert!((d2 - fd2).abs() <= 1e-6 * scale2, "{g} d2 at {u}: {d2} vs {fd2}");
            }
        }
    }

    #[test]
    fn spline_interpolates_samples() {
        let vals = vec![0.0, 0.3, 1.0, 0.3, 0.0];
        let g = TestFunction::table_spline(2.0, 0.5, vals.clone()).unwrap();
        for (i, v) in vals.iter().enumerate() {
            assert!((g.value(2.0 + 0.5 * i as f64) - v).abs() < 1e-14);
        }
        assert_eq!(g.value(1.9), 0.0);
        assert_eq!(g.support(), (3.0, 1.0));
        assert!(TestFunction::table_spline(0.0, 1.0, vec![1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gaussian_closed_forms_match_quadrature() {
        let g = TestFunction::gaussian(0.0, 1.0).unwrap();
        let h = TestFunction::gaussian(0.4, 0.6).unwrap();
        let quad = adaptive_simpson(&|u| g.value(u) * h.value(u), -8.0, 8.0, 1e-12);
        assert!((inner_product(&g, &h) - quad).abs() < 1e-10);
        assert!((inner_product(&g, &g) - PI.sqrt()).abs() < 1e-12);
        let quad = adaptive_simpson(&|u| g.derivative(u).powi(2), -8.0, 8.0, 1e-12);
        assert!((gradient_norm_sq(&g) - quad).abs() < 1e-10);
        assert!((gradient_norm_sq(&g) - PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn heat_quadrature_matches_closed_form() {
        // a Gaussian wearing a spline costume goes through the quadrature path
        let g = TestFunction::gaussian(0.0, 0.5).unwrap();
        let n = 161;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let u = -4.0 + 8.0 * i as f64 / (n - 1) as f64;
                if i == 0 || i == n - 1 { 0.0 } else { g.value(u) }
            })
            .collect();
        let spline = TestFunction::table_spline(-4.0, 8.0 / (n - 1) as f64, vals).unwrap();
        let h = TestFunction::gaussian(0.3, 0.8).unwrap();
        let (exact, closed) = heat_inner_product(&g, &h, 16.0 / 9.0, 0.05);
        let (quad, q_closed) = heat_inner_product(&spline, &h, 16.0 / 9.0, 0.05);
        assert!(closed && !q_closed);
        assert!((exact - quad).abs() < 1e-5, "{exact} vs {quad}");
    }

    #[test]
    fn transform_examples() {
        let g = TestFunction::gaussian(0.0, 1.0).unwrap();
        let gt = transform_test_function(&g, 0.75, TransformDirection::FepToZr).unwrap();
        assert_eq!(gt.as_gaussian(), Some((0.25, 0.0, 0.25)));
        for i in -20..=20 {
            let u = 0.1 * i as f64;
            assert!((gt.value(u) - 0.25 * g.value(4.0 * u)).abs() < 1e-15);
        }
        assert!(transform_test_function(&g, 0.5, TransformDirection::FepToZr).is_err());
    }

    #[test]
    fn transformed_inner_product_scales_by_cube() {
        let rho = 0.75;
        let c: f64 = 1.0 - rho;
        let g = TestFunction::bump(0.2, 1.0).unwrap();
        let h = TestFunction::gaussian(-0.1, 0.5).unwrap();
        let gt = transform_test_function(&g, rho, TransformDirection::FepToZr).unwrap();
        let ht = transform_test_function(&h, rho, TransformDirection::FepToZr).unwrap();
        let lhs = inner_product(&gt, &ht);
        let direct = adaptive_simpson(&|u| gt.value(u) * ht.value(u), -1.0, 1.0, 1e-13);
        assert!((lhs - direct).abs() < 1e-11);
        assert!((lhs - c.powi(3) * inner_product(&g, &h)).abs() < 1e-9);
    }

    #[test]
    fn serde_round_trip() {
        let text = r#"{"kind":"gaussian","center":0.5,"width":2.0}"#;
        let g: TestFunction = serde_json::from_str(text).unwrap();
        assert_eq!(g, TestFunction::gaussian(0.5, 2.0).unwrap());
        let s: TestFunction =
            serde_json::from_str(r#"{"kind":"table_spline","start":0,"step":1,"values":[0,1,0]}"#).unwrap();
        assert!((s.value(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(g.to_string(), "gaussian(0.5;2)");
        let back: TestFunction = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<TestFunction>(r#"{"kind":"bump","center":0,"radius":-1}"#).is_err());
    }

    proptest! {
        #[test]
        fn transform_round_trip(c in -3.0f64..3.0, w in 0.1f64..2.0, rho in 0.51f64..0.99, u in -5.0f64..5.0) {
            for g in [TestFunction::gaussian(c, w).unwrap(), TestFunction::bump(c, w).unwrap()] {
                let there = transform_test_function(&g, rho, TransformDirection::FepToZr).unwrap();
                let back = transform_test_function(&there, rho, TransformDirection::ZrToFep).unwrap();
                prop_assert!((back.value(u) - g.value(u)).abs() <= 1e-12);
            }
        }
    }
}
