//! L2 goodness-of-fit test of `H0: f = f0` from noisy observations, built on
//! the centered pairwise U-statistic with a random threshold.
//!
//! The statistic decomposes as `T̂ - (2/n)Σ_j c_j + ‖f0‖²`, where `T̂` is the
//! quadratic-functional pair sum (shared with [`crate::deconv`]) and each
//! `c_j` is a single oscillatory cross integral against the null transform.

use num_complex::Complex64;

use crate::deconv::{bandwidth, BandwidthSpec, BandwidthVariant, QuadratureSpec};
use crate::error::{Error, Result};
use crate::models::{simulate_observations, mix_seed, NoiseModel, Sample, SignalModel};
use crate::quadrature::{integrate_gl8, needs_graded_origin, panel_edges, pairwise_sum};
use crate::selector::{select_index, SelectorConfig};

/// The hypothesized density, represented by its Fourier transform
/// `Φ^{f0}(u) = E e^{iuX}` and, when known, its squared L2 norm.
pub struct NullSpec {
    cf: Box<dyn Fn(f64) -> Complex64 + Send + Sync>,
    /// `∫ f0²` in closed form; computed by quadrature when absent.
    pub l2_sq: Option<f64>,
}

impl NullSpec {
    /// Validating constructor: the transform must be 1 at the origin and
    /// bounded by 1 in modulus.
    pub fn new(
        cf: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        l2_sq: Option<f64>,
    ) -> Result<Self> {
        let at_zero = cf(0.0);
        if (at_zero - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "null transform at u = 0 is {at_zero}, must be 1"
            )));
        }
        for &u in &[0.5, 1.0, 2.0, 5.0, 20.0] {
            let m = cf(u).norm();
            if m > 1.0 + 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "null transform modulus {m} at u = {u} exceeds 1"
                )));
            }
        }
        Ok(NullSpec { cf: Box::new(cf), l2_sq })
    }

    /// Unvalidated constructor for diagnostic substitutions (e.g. a zero
    /// transform, which is not a density).
    pub fn raw(
        cf: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        l2_sq: Option<f64>,
    ) -> Self {
        NullSpec { cf: Box::new(cf), l2_sq }
    }

    /// Null hypothesis equal to a model signal density.
    pub fn from_signal(signal: &SignalModel) -> Self {
        let s = *signal;
        NullSpec { cf: Box::new(move |u| s.cf(u)), l2_sq: signal.l2_norm_sq() }
    }

    /// Model signal density translated by `offset` (`f0(· - offset)`).
    pub fn from_signal_shifted(signal: &SignalModel, offset: f64) -> Self {
        let s = *signal;
        NullSpec {
            cf: Box::new(move |u| s.cf(u) * Complex64::from_polar(1.0, u * offset)),
            l2_sq: signal.l2_norm_sq(),
        }
    }

    pub fn cf(&self, u: f64) -> Complex64 {
        (self.cf)(u)
    }
}

/// Decision record of one test run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    /// Centered statistic `T̂⁰`.
    pub statistic: f64,
    /// Random threshold `t̂²`.
    pub threshold_sq: f64,
    pub c_star: f64,
    /// `|statistic| / threshold_sq > c_star`.
    pub reject: bool,
    pub s_hat: f64,
    pub h: f64,
}

/// Random threshold `t̂² = (log n / 2)^{-2β̄/ŝ}`.
pub fn threshold_sq(n: usize, s_hat: f64, beta_bar: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidModel(format!("need n >= 2 for the threshold, got {n}")));
    }
    if !(s_hat > 0.0 && s_hat <= 2.0) {
        return Err(Error::InvalidModel(format!("s = {s_hat} not in (0, 2]")));
    }
    Ok((0.5 * (n as f64).ln()).powf(-2.0 * beta_bar / s_hat))
}

/// `(1/π)∫_0^∞ |Φ0(u)|² du` with an adaptively extended cutoff; errors when
/// the tail cannot be certified negligible.
fn l2_from_cf(null: &NullSpec, start: f64, tol: f64) -> Result<f64> {
    let g = |u: f64| null.cf(u).norm_sqr() / std::f64::consts::PI;
    let mut cutoff = start.max(8.0);
    for _ in 0..24 {
        let value = integrate_gl8(g, &panel_edges(cutoff, 512, false));
        let g_end = g(cutoff);
        if g_end <= 1e-300 {
            return Ok(value);
        }
        let g_half = g(0.5 * cutoff);
        if g_half > 0.0 {
            let p = (g_end / g_half).ln() / std::f64::consts::LN_2;
            if p < -1.0 - 1e-9 {
                let tail = g_end * cutoff / (-1.0 - p);
                if tail <= tol * value.abs().max(1e-12) {
                    return Ok(value);
                }
            }
        }
        cutoff *= 2.0;
    }
    Err(Error::TailNotNegligible(
        "null transform decays too slowly for the L2 norm quadrature".into(),
    ))
}

/// Cross term `Σ_j c_j` with
/// `c_j = (1/π)∫_0^{1/h} e^{u^s}[Re Φ0·cos(uY_j) + Im Φ0·sin(uY_j)] du`.
fn cross_sum(sample: &Sample, null: &NullSpec, s: f64, h: f64, quad: &QuadratureSpec) -> Result<f64> {
    let upper = 1.0 / h;
    let graded = needs_graded_origin(s);
    let amp_re = |u: f64| (u.powf(s)).exp() * null.cf(u).re;
    let amp_im = |u: f64| (u.powf(s)).exp() * null.cf(u).im;
    let scale_edges = panel_edges(upper, 64, graded);
    let scale = integrate_gl8(|u| (u.powf(s)).exp(), &scale_edges) / std::f64::consts::PI;
    let tol_abs = 0.5 * quad.refine_tol * scale.abs().max(1.0);

    let y_abs_max = sample
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let probes = [0.0, y_abs_max / 3.0, y_abs_max];

    let mut panels = quad.nodes.max(128);
    let (f_re, f_im) = loop {
        let re0 = crate::quadrature::FilonPanels::build(amp_re, upper, panels, graded);
        let im0 = crate::quadrature::FilonPanels::build(amp_im, upper, panels, graded);
        let re1 = crate::quadrature::FilonPanels::build(amp_re, upper, panels * 2, graded);
        let im1 = crate::quadrature::FilonPanels::build(amp_im, upper, panels * 2, graded);
        let ok = probes.iter().all(|&d| {
            let a = re0.eval(d);
            let b = re1.eval(d);
            let c = im0.eval(d);
            let e = im1.eval(d);
            (a.0 - b.0).abs() <= tol_abs
                && (a.1 - b.1).abs() <= tol_abs
                && (c.0 - e.0).abs() <= tol_abs
                && (c.1 - e.1).abs() <= tol_abs
        });
        if ok {
            break (re1, im1);
        }
        panels *= 2;
        if panels > (1 << 14) {
            return Err(Error::QuadratureNonConvergence(
                "cross-term transform did not stabilize under panel doubling".into(),
            ));
        }
    };

    // sorted order keeps the accumulation canonical under input permutations
    let mut ys = sample.values().to_vec();
    ys.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let parts: Vec<f64> = ys
        .iter()
        .map(|&y| (f_re.eval(y).0 + f_im.eval(y).1) / std::f64::consts::PI)
        .collect();
    Ok(pairwise_sum(&parts))
}

/// Centered pairwise statistic `T̂⁰` for testing `H0: f = f0`, computed with
/// the Test-variant bandwidth.
pub fn test_statistic(
    sample: &Sample,
    null: &NullSpec,
    s_hat: f64,
    spec: &BandwidthSpec,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InvalidModel(format!("need at least 2 observations, got {n}")));
    }
    quad.validate()?;
    let h = bandwidth(spec, n, s_hat)?;
    let square = crate::deconv::pair_sum_mean(sample, s_hat, h, quad)?;
    let cross = cross_sum(sample, null, s_hat, h, quad)?;
    let l2 = match null.l2_sq {
        Some(v) => v,
        None => l2_from_cf(null, 2.0 / h, quad.refine_tol)?,
    };
    Ok(square - 2.0 * cross / n as f64 + l2)
}

/// Full test configuration: selection, bandwidth, quadrature, and the
/// decision constant.
pub struct GofConfig {
    pub selector: SelectorConfig,
    pub bandwidth: BandwidthSpec,
    pub quad: QuadratureSpec,
    pub c_star: f64,
}

impl GofConfig {
    pub fn with_c_star(c_star: f64) -> Result<Self> {
        if !(c_star > 0.0) {
            return Err(Error::InvalidConfig(format!("c_star = {c_star} must be > 0 (or +inf)")));
        }
        Ok(GofConfig {
            selector: SelectorConfig::study_defaults(),
            bandwidth: BandwidthSpec::test_default(),
            quad: QuadratureSpec::default(),
            c_star,
        })
    }
}

/// Select the index, form the statistic and threshold, and decide.
pub fn run_test(sample: &Sample, null: &NullSpec, config: &GofConfig) -> Result<TestOutcome> {
    if !(config.c_star > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "c_star = {} must be > 0 (or +inf)",
            config.c_star
        )));
    }
    if config.bandwidth.variant != BandwidthVariant::Test {
        return Err(Error::InvalidConfig(
            "goodness-of-fit testing requires the Test bandwidth variant".into(),
        ));
    }
    let selection = select_index(sample, &config.selector)?;
    let s_hat = selection.s_hat;
    let h = bandwidth(&config.bandwidth, sample.len(), s_hat)?;
    let statistic = test_statistic(sample, null, s_hat, &config.bandwidth, &config.quad)?;
    let thr = threshold_sq(sample.len(), s_hat, config.bandwidth.beta_bar)?;
    Ok(TestOutcome {
        statistic,
        threshold_sq: thr,
        c_star: config.c_star,
        reject: statistic.abs() / thr > config.c_star,
        s_hat,
        h,
    })
}

/// Empirical `(1 - level)` quantile of `|T̂⁰|/t̂²` over seeded simulations
/// under the null; the documented default decision constant.
///
/// Replications whose selected index makes the Test bandwidth infeasible
/// contribute `+∞` ratios, which keeps the quantile conservative.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_c_star(
    f0: &SignalModel,
    noise: &NoiseModel,
    selector: &SelectorConfig,
    spec: &BandwidthSpec,
    quad: &QuadratureSpec,
    n: usize,
    level: f64,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("level = {level} must be in (0, 1)")));
    }
    if reps < 50 {
        return Err(Error::InvalidConfig(format!("need at least 50 replications, got {reps}")));
    }
    let null = NullSpec::from_signal(f0);
    let mut ratios = Vec::with_capacity(reps);
    for r in 0..reps {
        let rep_seed = mix_seed(seed ^ (r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let sample = simulate_observations(f0, noise, n, rep_seed)?;
        let s_hat = select_index(&sample, selector)?.s_hat;
        let ratio = match test_statistic(&sample, &null, s_hat, spec, quad) {
            Ok(stat) => stat.abs() / threshold_sq(n, s_hat, spec.beta_bar)?,
            Err(Error::BandwidthInfeasible { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        ratios.push(ratio);
    }
    ratios.sort_unstable_by(|a, b| a.total_cmp(b));
    let idx = ((1.0 - level) * reps as f64).ceil().max(1.0) as usize;
    Ok(ratios[idx.min(reps) - 1])
}
