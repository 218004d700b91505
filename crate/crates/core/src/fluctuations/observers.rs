use super::{field_eval_fep, field_eval_zr, TestFunction};
use crate::dynamics::{Event, Observer, RateSchedule};
use crate::error::{bail, FepError, Result};
use crate::lattice::FepConfig;
use crate::mapping::map_forward;
use crate::measures::{theory, window_prob};

/// Values of `f(x/N)` at every ring site, read at the minimal image of `x` around 0.
fn site_weights(len: usize, n: f64, support: (f64, f64), reach: usize, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let (c, r) = support;
    let half = len as f64 / (2.0 * n);
    if c.abs() + r + reach as f64 / n >= half {
        bail!(ValidityWindow, "support {:.3} ± {r:.3} does not fit in the half ring ±{half:.3}", c);
    }
    let mut w = vec![0.0; len];
    for x in ((c - r) * n).floor() as i64..=((c + r) * n).ceil() as i64 {
        w[x.rem_euclid(len as i64) as usize] = f(x as f64 / n);
    }
    Ok(w)
}

fn ring_len(state: &FepConfig) -> usize {
    state.len()
}

/// Records fluctuation fields at fixed times: the exclusion field of each `fep`
/// function and, optionally, the zero-range field of the mapped configuration.
pub struct FieldRecorder {
    rho: f64,
    sched: RateSchedule,
    times: Vec<f64>,
    fep: Vec<TestFunction>,
    zr: Vec<TestFunction>,
    /// `values[time][function]`, exclusion functions first
    pub values: Vec<Vec<f64>>,
    error: Option<FepError>,
}

impl FieldRecorder {
    pub fn new(rho: f64, sched: RateSchedule, times: Vec<f64>, fep: Vec<TestFunction>, zr: Vec<TestFunction>) -> Self {
        let values = vec![Vec::new(); times.len()];
        Self {
            rho,
            sched,
            times,
            fep,
            zr,
            values,
            error: None,
        }
    }

    pub fn finish(self) -> Result<Vec<Vec<f64>>> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.values),
        }
    }

    fn record(&mut self, index: usize, time: f64, state: &FepConfig) -> Result<()> {
        let mut row = Vec::with_capacity(self.fep.len() + self.zr.len());
        for g in &self.fep {
            row.push(field_eval_fep(state, g, self.rho, time, &self.sched)?.value);
        }
        if !self.zr.is_empty() {
            let omega = map_forward(state)?.omega;
            for g in &self.zr {
                row.push(field_eval_zr(&omega, g, self.rho, time, &self.sched)?.value);
            }
        }
        self.values[index] = row;
        Ok(())
    }
}

impl Observer<FepConfig> for FieldRecorder {
    fn sample_times(&self) -> Vec<f64> {
        self.times.clone()
    }

    fn on_sample(&mut self, index: usize, time: f64, state: &FepConfig) {
        if self.error.is_none() {
            if let Err(e) = self.record(index, time, state) {
                self.error = Some(e);
            }
        }
    }
}

/// Event-exact integral of a piecewise-constant functional `S(eta_s)` over time.
struct Integrator {
    value: f64,
    rate: f64,
    last: f64,
}

impl Integrator {
    fn advance(&mut self, t: f64) {
        self.value += self.rate * (t - self.last);
        self.last = t;
    }

    fn at(&self, t: f64) -> f64 {
        self.value + self.rate * (t - self.last)
    }
}

/// Accumulates the predictable quadratic variation of the field martingale,
/// `∫_0^t N^{−1} Σ_x [(p/N^2) c_{x,x+1} + (q/N^2) c_{x+1,x}] (∂^N G(x/N))^2 ds`,
/// with `∂^N G(x/N) = N (G((x+1)/N) − G(x/N))`.
pub struct QuadraticVariation {
    weights: Vec<f64>,
    p: f64,
    q: f64,
    contrib: Vec<f64>,
    acc: Integrator,
    times: Vec<f64>,
    /// QV at each requested time.
    pub samples: Vec<f64>,
    pub total: f64,
}

impl QuadraticVariation {
    pub fn new(g: &TestFunction, len: usize, sched: &RateSchedule, times: Vec<f64>) -> Result<Self> {
        let n = sched.n_f64();
        let weights = site_weights(len, n, g.support(), 2, |u| {
            let grad = n * (g.value(u + 1.0 / n) - g.value(u));
            grad * grad / n
        })?;
        let samples = vec![0.0; times.len()];
        Ok(Self {
            weights,
            p: sched.p() / (n * n),
            q: sched.q() / (n * n),
            contrib: vec![0.0; len],
            acc: Integrator {
                value: 0.0,
                rate: 0.0,
                last: 0.0,
            },
            times,
            samples,
            total: 0.0,
        })
    }

    fn edge(&self, s: &FepConfig, y: usize) -> f64 {
        let w = self.weights[y];
        if w == 0.0 {
            return 0.0;
        }
        let len = ring_len(s);
        let at = |d: usize| s.get((y + d) % len);
        let right = at(len - 1) && at(0) && !at(1);
        let left = !at(0) && at(1) && at(2);
        w * (self.p * f64::from(u8::from(right)) + self.q * f64::from(u8::from(left)))
    }
}

impl Observer<FepConfig> for QuadraticVariation {
    fn sample_times(&self) -> Vec<f64> {
        self.times.clone()
    }

    fn on_start(&mut self, s: &FepConfig) {
        for y in 0..s.len() {
            self.contrib[y] = self.edge(s, y);
        }
        self.acc.rate = self.contrib.iter().sum();
    }

    fn on_sample(&mut self, index: usize, time: f64, _s: &FepConfig) {
        self.samples[index] = self.acc.at(time);
    }

    fn before_event(&mut self, time: f64, _s: &FepConfig, _e: Event) {
        self.acc.advance(time);
    }

    fn after_event(&mut self, _time: f64, s: &FepConfig, e: Event) {
        let len = s.len();
        for d in 0..5 {
            let y = (e.bond + len + d - 2) % len;
            let c = self.edge(s, y);
            self.acc.rate += c - self.contrib[y];
            self.contrib[y] = c;
        }
    }

    fn on_finish(&mut self, t_end: f64, _s: &FepConfig) {
        self.acc.advance(t_end);
        self.total = self.acc.value;
    }
}

/// A local function `psi` of the sites `x − radius ..= x + radius` with its
/// grand-canonical mean and the derivative of that mean in `rho`.
#[derive(Clone, Debug)]
pub struct LocalFunction {
    pub name: String,
    pub radius: usize,
    pub f: fn(&[u8]) -> f64,
    pub mean: f64,
    pub slope: f64,
}

fn h_function(w: &[u8]) -> f64 {
    let (l, c, r) = (w[0] as f64, w[1] as f64, w[2] as f64);
    l * c + c * r - l * c * r
}

fn eta_zero(w: &[u8]) -> f64 {
    w[0] as f64
}

impl LocalFunction {
    /// `h = eta_{−1} eta_0 + eta_0 eta_1 − eta_{−1} eta_0 eta_1`, with mean `a(rho)` and
    /// slope `D(rho)`.
    pub fn h(rho: f64) -> Result<Self> {
        let th = theory(rho)?;
        Ok(Self {
            name: "h".into(),
            radius: 1,
            f: h_function,
            mean: th.a,
            slope: th.d,
        })
    }

    pub fn eta0(rho: f64) -> Result<Self> {
        theory(rho)?;
        Ok(Self {
            name: "eta0".into(),
            radius: 0,
            f: eta_zero,
            mean: rho,
            slope: 1.0,
        })
    }

    /// Mean by exact enumeration against the window law, slope by central differences.
    pub fn numeric(name: &str, radius: usize, f: fn(&[u8]) -> f64, rho: f64) -> Result<Self> {
        if radius > 6 {
            bail!(InvalidArgument, "numeric local functions are limited to radius 6");
        }
        let mean = |r: f64| -> Result<f64> {
            let width = 2 * radius + 1;
            let mut w = vec![0u8; width];
            let mut total = 0.0;
            for code in 0u32..1 << width {
                for (i, v) in w.iter_mut().enumerate() {
                    *v = ((code >> i) & 1) as u8;
                }
                let p = window_prob(r, &w)?;
                if p > 0.0 {
                    total += p * f(&w);
                }
            }
            Ok(total)
        };
        let h = 1e-5;
        let (lo, hi) = if rho + h <= 1.0 { (rho - h, rho + h) } else { (rho - 2.0 * h, rho) };
        Ok(Self {
            name: name.into(),
            radius,
            f,
            mean: mean(rho)?,
            slope: (mean(hi)? - mean(lo)?) / (hi - lo),
        })
    }
}

/// Accumulates `∫_0^t N^{−1/2} Σ_x G(x/N) V_psi(tau_x eta_s) ds`, where
/// `V_psi = psi − mean − slope (eta_0 − rho)`.
pub struct BgFunctional {
    psi: LocalFunction,
    rho: f64,
    weights: Vec<f64>,
    terms: Vec<f64>,
    scale: f64,
    acc: Integrator,
    window: Vec<u8>,
    pub total: f64,
}

impl BgFunctional {
    pub fn new(psi: LocalFunction, g: &TestFunction, rho: f64, len: usize, n: f64) -> Result<Self> {
        if 2 * psi.radius + 1 > len {
            bail!(InvalidArgument, "local function of radius {} is wider than the ring", psi.radius);
        }
        let weights = site_weights(len, n, g.support(), psi.radius, |u| g.value(u))
            .map_err(|e| FepError::InvalidArgument(e.to_string()))?;
        let window = vec![0; 2 * psi.radius + 1];
        Ok(Self {
            psi,
            rho,
            weights,
            terms: vec![0.0; len],
            scale: 1.0 / n.sqrt(),
            acc: Integrator {
                value: 0.0,
                rate: 0.0,
                last: 0.0,
            },
            window,
            total: 0.0,
        })
    }

    fn term(&mut self, s: &FepConfig, x: usize) -> f64 {
        let w = self.weights[x];
        if w == 0.0 {
            return 0.0;
        }
        let len = s.len();
        let r = self.psi.radius;
        for (i, v) in self.window.iter_mut().enumerate() {
            *v = u8::from(s.get((x + len + i - r) % len));
        }
        let eta0 = self.window[r] as f64;
        let v = (self.psi.f)(&self.window) - self.psi.mean - self.psi.slope * (eta0 - self.rho);
        w * v * self.scale
    }
}

impl Observer<FepConfig> for BgFunctional {
    fn on_start(&mut self, s: &FepConfig) {
        for x in 0..s.len() {
            self.terms[x] = self.term(s, x);
        }
        self.acc.rate = self.terms.iter().sum();
    }

    fn before_event(&mut self, time: f64, _s: &FepConfig, _e: Event) {
        self.acc.advance(time);
    }

    fn after_event(&mut self, _time: f64, s: &FepConfig, e: Event) {
        let len = s.len();
        let r = self.psi.radius;
        for d in 0..2 * r + 2 {
            let x = (e.bond + len + d - r) % len;
            let t = self.term(s, x);
            self.acc.rate += t - self.terms[x];
            self.terms[x] = t;
        }
    }

    fn on_finish(&mut self, t_end: f64, _s: &FepConfig) {
        self.acc.advance(t_end);
        self.total = self.acc.value;
    }
}

/// Tracks `Y_s(F) = N^{−1/2} Σ_x (eta_x − rho) F(x/N)` in the fixed frame and its
/// time integral.
pub struct FieldIntegral {
    weights: Vec<f64>,
    rho: f64,
    scale: f64,
    acc: Integrator,
    pub total: f64,
}

impl FieldIntegral {
    pub fn new(len: usize, n: f64, rho: f64, support: (f64, f64), f: impl Fn(f64) -> f64) -> Result<Self> {
        Ok(Self {
            weights: site_weights(len, n, support, 1, f)?,
            rho,
            scale: 1.0 / n.sqrt(),
            acc: Integrator {
                value: 0.0,
                rate: 0.0,
                last: 0.0,
            },
            total: 0.0,
        })
    }
}

impl Observer<FepConfig> for FieldIntegral {
    fn on_start(&mut self, s: &FepConfig) {
        self.acc.rate = (0..s.len())
            .map(|x| (f64::from(u8::from(s.get(x))) - self.rho) * self.weights[x])
            .sum::<f64>()
            * self.scale;
    }

    fn before_event(&mut self, time: f64, _s: &FepConfig, _e: Event) {
        self.acc.advance(time);
    }

    fn after_event(&mut self, _time: f64, s: &FepConfig, e: Event) {
        let x = e.bond;
        let y = (x + 1) % s.len();
        let dx = f64::from(u8::from(s.get(x))) - f64::from(u8::from(s.get(y)));
        self.acc.rate += dx * (self.weights[x] - self.weights[y]) * self.scale;
    }

    fn on_finish(&mut self, t_end: f64, _s: &FepConfig) {
        self.acc.advance(t_end);
        self.total = self.acc.value;
    }
}
