//! Shared quadrature engine for the oscillatory frequency-domain integrals.
//!
//! Two complementary rules are provided:
//!
//! * composite Gauss-Legendre panels, with panel widths chosen to resolve a
//!   target oscillation frequency (the reference rule used by the public
//!   per-integral operations), and
//! * a Filon-type rule that interpolates the slowly varying amplitude by a
//!   cubic on each panel and integrates `p(u)·cos(du)` / `p(u)·sin(du)`
//!   exactly, so the cost per integral is independent of the phase `d`.
//!
//! Amplitudes of the form `exp(c·u^s)` have unbounded derivatives at the
//! origin for non-integer `s`; panel grids subdivide the first cell
//! geometrically in that case.

/// 8-point Gauss-Legendre abscissae on [-1, 1].
#[allow(clippy::excessive_precision)]
const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];

/// Matching Gauss-Legendre weights.
#[allow(clippy::excessive_precision)]
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Levels of geometric subdivision applied to the first panel when the
/// integrand has a fractional-power singularity in its derivatives at 0.
const GRADE_LEVELS: u32 = 42;

/// Panel decomposition of `[0, upper]`: `base` uniform cells, the first of
/// which is optionally split geometrically towards the origin.
pub(crate) fn panel_edges(upper: f64, base: usize, graded_origin: bool) -> Vec<(f64, f64)> {
    let base = base.max(1);
    let w = upper / base as f64;
    let mut edges = Vec::with_capacity(base + if graded_origin { GRADE_LEVELS as usize } else { 0 });
    if graded_origin {
        let mut hi = w;
        let mut stack = Vec::with_capacity(GRADE_LEVELS as usize + 1);
        for _ in 0..GRADE_LEVELS {
            let lo = hi * 0.5;
            stack.push((lo, hi));
            hi = lo;
        }
        stack.push((0.0, hi));
        edges.extend(stack.into_iter().rev());
    } else {
        edges.push((0.0, w));
    }
    for p in 1..base {
        edges.push((p as f64 * w, (p + 1) as f64 * w));
    }
    edges
}

/// `true` when `exp(c·u^s)` is non-smooth at the origin.
pub(crate) fn needs_graded_origin(s: f64) -> bool {
    s != 1.0 && s != 2.0
}

/// Composite Gauss-Legendre integration of `f` over the given panels.
pub(crate) fn integrate_gl8(f: impl Fn(f64) -> f64, edges: &[(f64, f64)]) -> f64 {
    let mut parts = Vec::with_capacity(edges.len());
    for &(a, b) in edges {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let mut acc = 0.0;
        for i in 0..8 {
            acc += GL8_W[i] * f(c + r * GL8_X[i]);
        }
        parts.push(acc * r);
    }
    pairwise_sum(&parts)
}

/// Composite midpoint integration over the given panels.
pub(crate) fn integrate_midpoint(f: impl Fn(f64) -> f64, edges: &[(f64, f64)]) -> f64 {
    let mut parts = Vec::with_capacity(edges.len());
    for &(a, b) in edges {
        parts.push((b - a) * f(0.5 * (a + b)));
    }
    pairwise_sum(&parts)
}

/// Pairwise (cascade) summation; keeps rounding error at O(log n) ulps.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Moments `∫_{-1}^{1} t^k trig(θt) dt` for the Filon panel rule.
/// Returns `(mc0, mc2, ms1, ms3)`; odd cosine and even sine moments vanish.
fn filon_moments(theta: f64) -> (f64, f64, f64, f64) {
    let th = theta;
    if th.abs() < 0.25 {
        let t2 = th * th;
        let t4 = t2 * t2;
        let t6 = t4 * t2;
        let t8 = t4 * t4;
        let t10 = t8 * t2;
        let mc0 = 2.0
            * (1.0 - t2 / 6.0 + t4 / 120.0 - t6 / 5040.0 + t8 / 362_880.0 - t10 / 39_916_800.0);
        let mc2 = 2.0
            * (1.0 / 3.0 - t2 / 10.0 + t4 / 168.0 - t6 / 6480.0 + t8 / 443_520.0
                - t10 / 47_174_400.0);
        let ms1 = 2.0
            * th
            * (1.0 / 3.0 - t2 / 30.0 + t4 / 840.0 - t6 / 45_360.0 + t8 / 3_991_680.0);
        let ms3 = 2.0
            * th
            * (1.0 / 5.0 - t2 / 42.0 + t4 / 1080.0 - t6 / 55_440.0 + t8 / 4_717_440.0);
        (mc0, mc2, ms1, ms3)
    } else {
        let (s, c) = th.sin_cos();
        let t2 = th * th;
        let mc0 = 2.0 * s / th;
        let mc2 = 2.0 * ((t2 - 2.0) * s + 2.0 * th * c) / (t2 * th);
        let ms1 = 2.0 * (s - th * c) / t2;
        let ms3 = 2.0 * ((3.0 * t2 - 6.0) * s - (t2 - 6.0) * th * c) / (t2 * t2);
        (mc0, mc2, ms1, ms3)
    }
}

/// One amplitude interpolated panel-by-panel for Filon evaluation.
#[derive(Clone)]
struct PanelCubic {
    center: f64,
    half_width: f64,
    /// Coefficients of the cubic in the normalized coordinate t in [-1, 1].
    q: [f64; 4],
}

/// A Filon-type representation of `u ↦ A(u)` on `[0, upper]`, ready to
/// evaluate `∫ A(u) cos(du) du` and `∫ A(u) sin(du) du` for arbitrary `d` at
/// cost O(panels).
pub(crate) struct FilonPanels {
    panels: Vec<PanelCubic>,
    /// Index of the first panel of the uniform section (everything before it
    /// belongs to the graded origin ladder).
    uniform_start: usize,
}

impl FilonPanels {
    pub(crate) fn build(
        amplitude: impl Fn(f64) -> f64,
        upper: f64,
        base_panels: usize,
        graded_origin: bool,
    ) -> Self {
        let edges = panel_edges(upper, base_panels, graded_origin);
        // The origin ladder replaces the first uniform cell; the rotation
        // recurrence in `eval` is only valid on equally spaced panels.
        let uniform_start = if graded_origin { GRADE_LEVELS as usize + 1 } else { 0 };
        let uniform_start = uniform_start.min(edges.len());
        // Interpolation nodes t = -1, -1/3, 1/3, 1 on each panel.
        let panels = edges
            .iter()
            .map(|&(a, b)| {
                let c = 0.5 * (a + b);
                let r = 0.5 * (b - a);
                let f1 = amplitude(a);
                let f2 = amplitude(c - r / 3.0);
                let f3 = amplitude(c + r / 3.0);
                let f4 = amplitude(b);
                let q = [
                    (-f1 + 9.0 * f2 + 9.0 * f3 - f4) / 16.0,
                    (f1 - 27.0 * f2 + 27.0 * f3 - f4) / 16.0,
                    9.0 * (f1 - f2 - f3 + f4) / 16.0,
                    9.0 * (-f1 + 3.0 * f2 - 3.0 * f3 + f4) / 16.0,
                ];
                PanelCubic { center: c, half_width: r, q }
            })
            .collect();
        FilonPanels { panels, uniform_start }
    }

    /// `(∫ A(u) cos(du) du, ∫ A(u) sin(du) du)` over `[0, upper]`.
    pub(crate) fn eval(&self, d: f64) -> (f64, f64) {
        let mut cos_acc = 0.0;
        let mut sin_acc = 0.0;
        // Graded origin cells: widths differ, evaluate phases directly.
        for p in &self.panels[..self.uniform_start] {
            let (pc, ps) = Self::panel_contrib(p, d, (d * p.center).sin_cos());
            cos_acc += pc;
            sin_acc += ps;
        }
        // Uniform section: advance the phase by rotation.
        let uni = &self.panels[self.uniform_start..];
        if !uni.is_empty() {
            let w = 2.0 * uni[0].half_width;
            let (rot_s, rot_c) = (d * w).sin_cos();
            let (mut ph_s, mut ph_c) = (d * uni[0].center).sin_cos();
            let theta = d * uni[0].half_width;
            let moments = filon_moments(theta);
            for p in uni {
                let (pc, ps) = Self::panel_contrib_with(p, (ph_s, ph_c), moments);
                cos_acc += pc;
                sin_acc += ps;
                let ns = ph_s * rot_c + ph_c * rot_s;
                let nc = ph_c * rot_c - ph_s * rot_s;
                ph_s = ns;
                ph_c = nc;
            }
        }
        (cos_acc, sin_acc)
    }

    /// Convenience wrapper when only the cosine transform is needed.
    pub(crate) fn eval_cos(&self, d: f64) -> f64 {
        self.eval(d).0
    }

    fn panel_contrib(p: &PanelCubic, d: f64, phase: (f64, f64)) -> (f64, f64) {
        let theta = d * p.half_width;
        Self::panel_contrib_with(p, phase, filon_moments(theta))
    }

    fn panel_contrib_with(
        p: &PanelCubic,
        (ph_s, ph_c): (f64, f64),
        (mc0, mc2, ms1, ms3): (f64, f64, f64, f64),
    ) -> (f64, f64) {
        let even = p.q[0] * mc0 + p.q[2] * mc2;
        let odd = p.q[1] * ms1 + p.q[3] * ms3;
        let cos_part = p.half_width * (ph_c * even - ph_s * odd);
        let sin_part = p.half_width * (ph_s * even + ph_c * odd);
        (cos_part, sin_part)
    }

    pub(crate) fn panel_count(&self) -> usize {
        self.panels.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl8_exact_on_polynomials() {
        // degree 15 is integrated exactly by an 8-point rule
        let edges = panel_edges(1.0, 1, false);
        let got = integrate_gl8(|u| u.powi(15), &edges);
        assert!((got - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn gl8_composite_smooth() {
        let edges = panel_edges(2.0, 32, false);
        let got = integrate_gl8(|u| (2.0 * u).exp(), &edges);
        let want = (4.0f64.exp() - 1.0) / 2.0;
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn graded_origin_handles_sqrt_amplitude() {
        // ∫_0^1 sqrt(u) du = 2/3; plain panels converge slowly, graded nails it
        let edges = panel_edges(1.0, 64, true);
        let got = integrate_gl8(|u| u.sqrt(), &edges);
        assert!((got - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn filon_moments_match_series_and_closed_form() {
        // continuity across the series/closed-form switch
        for &th in &[0.249_999, 0.250_001] {
            let (a, b, c, d) = filon_moments(th);
            let edges = panel_edges(1.0, 64, false);
            let mc0 = 2.0 * integrate_gl8(|t| (th * t).cos(), &edges);
            let mc2 = 2.0 * integrate_gl8(|t| t * t * (th * t).cos(), &edges);
            let ms1 = 2.0 * integrate_gl8(|t| t * (th * t).sin(), &edges);
            let ms3 = 2.0 * integrate_gl8(|t| t * t * t * (th * t).sin(), &edges);
            assert!((a - mc0).abs() < 1e-12, "mc0 at {th}");
            assert!((b - mc2).abs() < 1e-12, "mc2 at {th}");
            assert!((c - ms1).abs() < 1e-12, "ms1 at {th}");
            assert!((d - ms3).abs() < 1e-12, "ms3 at {th}");
        }
    }

    #[test]
    fn filon_matches_resolved_gauss_for_large_phase() {
        // amplitude e^{2u}, phase d = 80: GL needs ~4·80·2/π ≈ 204 panels
        let upper = 2.0;
        let d = 80.0;
        let filon = FilonPanels::build(|u| (2.0 * u).exp(), upper, 256, false);
        let (fc, fs) = filon.eval(d);
        let edges = panel_edges(upper, 512, false);
        let gc = integrate_gl8(|u| (2.0 * u).exp() * (d * u).cos(), &edges);
        let gs = integrate_gl8(|u| (2.0 * u).exp() * (d * u).sin(), &edges);
        assert!((fc - gc).abs() < 1e-9, "cos: {fc} vs {gc}");
        assert!((fs - gs).abs() < 1e-9, "sin: {fs} vs {gs}");
    }

    #[test]
    fn filon_fractional_amplitude_graded() {
        // amplitude e^{2 sqrt(u)} needs the graded ladder near 0
        let upper = 2.0;
        let d = 37.5;
        let filon = FilonPanels::build(|u| (2.0 * u.sqrt()).exp(), upper, 1024, true);
        let (fc, _) = filon.eval(d);
        let edges = panel_edges(upper, 4096, true);
        let gc = integrate_gl8(|u| (2.0 * u.sqrt()).exp() * (d * u).cos(), &edges);
        assert!((fc - gc).abs() < 2e-8, "{fc} vs {gc}");
    }

    #[test]
    fn filon_zero_phase_is_plain_integral() {
        // cubic amplitude interpolation converges at fourth order
        let filon = FilonPanels::build(|u| (2.0 * u).exp(), 1.0, 512, false);
        let (c, s) = filon.eval(0.0);
        let want = (2.0f64.exp() - 1.0) / 2.0;
        assert!((c - want).abs() < 1e-10, "{c} vs {want}");
        assert_eq!(s, 0.0);
    }
}
