//! Quadrature reference for the scalar nonlinear MMSE denoiser
//! `E[r | y = phi(r, w), r ~ N_C(z1, 1/gamma1)]`.
//!
//! The pre-saturation variable `u = r + w_a` carries all the dependence of
//! `y` on `r`, and `(r, u)` is jointly Gaussian under the pseudo-prior. So
//! the posterior of `r` follows from a 2-D integral over `u` alone:
//!
//! ```text
//! u ~ N_C(z1, v_u),  v_u = 1/gamma1 + sigma_a2
//! E[r | u]   = z1 + c (u - z1),  c = (1/gamma1) / v_u
//! Var[r | u] = sigma_a2 / (gamma1 v_u)
//! ```
//!
//! and `p(u | y)` is integrated on a polar Gauss-Legendre grid clipped to the
//! intersection of the pseudo-prior box and the likelihood box.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frontend::{saturate, FrontEndParams};

/// Grid sizes and box half-width (in standard deviations).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub window: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { radial_nodes: 81, angular_nodes: 81, window: 8.0 }
    }
}

/// Posterior mean and total (complex) variance `E|r - rhat|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarPosterior {
    pub mean: Complex64,
    pub variance: f64,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    type Rule = (Vec<f64>, Vec<f64>);
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("gl cache").get(&n) {
        return hit.clone();
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    cache.lock().expect("gl cache").insert(n, (nodes.clone(), weights.clone()));
    (nodes, weights)
}

/// Angular interval `center +/- half`; `half >= PI` means the full circle.
#[derive(Debug, Clone, Copy)]
struct Arc {
    center: f64,
    half: f64,
}

impl Arc {
    const FULL: Arc = Arc { center: 0.0, half: PI };

    fn is_full(&self) -> bool {
        self.half >= PI
    }

    fn intersect(self, other: Arc) -> Option<Arc> {
        if self.is_full() {
            return Some(other);
        }
        if other.is_full() {
            return Some(self);
        }
        let d = wrap(other.center - self.center);
        let lo = (-self.half).max(d - other.half);
        let hi = self.half.min(d + other.half);
        (lo < hi).then_some(Arc { center: self.center + 0.5 * (lo + hi), half: 0.5 * (hi - lo) })
    }
}

fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Polar box `[rho_lo, rho_hi] x arc`.
#[derive(Debug, Clone, Copy)]
struct PolarBox {
    rho_lo: f64,
    rho_hi: f64,
    arc: Arc,
}

impl PolarBox {
    fn around_disk(center: Complex64, radius: f64) -> Self {
        let m = center.norm();
        let arc = if m > radius { Arc { center: center.arg(), half: (radius / m).asin() } } else { Arc::FULL };
        PolarBox { rho_lo: (m - radius).max(0.0), rho_hi: m + radius, arc }
    }

    fn intersect(self, other: PolarBox) -> Option<PolarBox> {
        let rho_lo = self.rho_lo.max(other.rho_lo);
        let rho_hi = self.rho_hi.min(other.rho_hi);
        if !(rho_lo < rho_hi) {
            return None;
        }
        Some(PolarBox { rho_lo, rho_hi, arc: self.arc.intersect(other.arc)? })
    }
}

/// Maps a rectangle of saturated outputs back to a polar box of inputs.
fn likelihood_box(rect: [f64; 4], p_sat: f64) -> PolarBox {
    let a = p_sat.sqrt();
    let [xlo, xhi, ylo, yhi] = [rect[0].max(-a), rect[1].min(a), rect[2].max(-a), rect[3].min(a)];
    let nearest = Complex64::new(0f64.clamp(xlo, xhi), 0f64.clamp(ylo, yhi));
    let corners =
        [Complex64::new(xlo, ylo), Complex64::new(xlo, yhi), Complex64::new(xhi, ylo), Complex64::new(xhi, yhi)];
    let far = corners.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let contains_origin = xlo <= 0.0 && xhi >= 0.0 && ylo <= 0.0 && yhi >= 0.0;
    let arc = if contains_origin || xlo > xhi || ylo > yhi {
        Arc::FULL
    } else {
        let mid = Complex64::new(0.5 * (xlo + xhi), 0.5 * (ylo + yhi)).arg();
        let (lo, hi) = corners
            .iter()
            .map(|c| wrap(c.arg() - mid))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        Arc { center: mid + 0.5 * (lo + hi), half: 0.5 * (hi - lo) }
    };
    // Invert the magnitude compression m = a tanh(rho / a).
    let inv = |m: f64| if m >= a { f64::INFINITY } else { a * (m / a).atanh() };
    let m_lo = if xlo > xhi || ylo > yhi { a } else { nearest.norm() };
    PolarBox { rho_lo: inv(m_lo), rho_hi: inv(far.max(m_lo)), arc }
}

fn log_normal_cell(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    // log(Phi((hi - m)/sd) - Phi((lo - m)/sd)) via complementary error functions.
    let a = (lo - mean) / (sd * std::f64::consts::SQRT_2);
    let b = (hi - mean) / (sd * std::f64::consts::SQRT_2);
    let p = if a >= 0.0 {
        0.5 * (libm::erfc(a) - libm::erfc(b))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b) - libm::erfc(-a))
    } else {
        1.0 - 0.5 * (libm::erfc(-a) + libm::erfc(b))
    };
    p.max(0.0).ln()
}

/// Posterior of `r` by quadrature with the default grid.
pub fn nonlinear_denoise_oracle(
    z1: Complex64,
    gamma1: f64,
    y: Complex64,
    fe: &FrontEndParams,
) -> Result<ScalarPosterior> {
    nonlinear_denoise_oracle_with(z1, gamma1, y, fe, &QuadratureConfig::default())
}

pub fn nonlinear_denoise_oracle_with(
    z1: Complex64,
    gamma1: f64,
    y: Complex64,
    fe: &FrontEndParams,
    cfg: &QuadratureConfig,
) -> Result<ScalarPosterior> {
    let fail = |reason: String| Error::Quadrature { z1, gamma1, y, reason };
    if !(gamma1 > 0.0 && gamma1.is_finite()) {
        return Err(fail("precision must be positive and finite".into()));
    }
    if !(fe.sigma_b2 > 0.0) {
        return Err(fail("post-saturation noise variance must be positive".into()));
    }
    let prior_var = 1.0 / gamma1;
    let v_u = prior_var + fe.sigma_a2;
    let c = prior_var / v_u;
    let var_r_given_u = prior_var * fe.sigma_a2 / v_u;

    let comp_sd = (0.5 * fe.sigma_b2).sqrt();
    let cells = fe.quantizer.map(|q| (q.cell(y.re), q.cell(y.im)));
    let log_lik = |m: Complex64| -> f64 {
        match cells {
            None => -(y - m).norm_sqr() / fe.sigma_b2,
            Some(((xlo, xhi), (ylo, yhi))) => {
                log_normal_cell(xlo, xhi, m.re, comp_sd) + log_normal_cell(ylo, yhi, m.im, comp_sd)
            }
        }
    };

    let mut window = cfg.window;
    for _attempt in 0..3 {
        let prior_box = PolarBox::around_disk(z1, window * v_u.sqrt());
        let rect = match cells {
            None => {
                let h = window * fe.sigma_b2.sqrt();
                [y.re - h, y.re + h, y.im - h, y.im + h]
            }
            Some(((xlo, xhi), (ylo, yhi))) => {
                let h = window * comp_sd;
                [xlo - h, xhi + h, ylo - h, yhi + h]
            }
        };
        let Some(region) = prior_box.intersect(likelihood_box(rect, fe.p_sat)) else {
            window *= 2.0;
            continue;
        };
        if let Some(post) = integrate(&region, z1, v_u, fe.p_sat, cfg, &log_lik) {
            let mean = z1 + c * (post.mean - z1);
            let variance = var_r_given_u + c * c * post.variance;
            if !(mean.re.is_finite() && mean.im.is_finite() && variance.is_finite()) {
                return Err(fail(format!("non-finite moments mean={mean} var={variance}")));
            }
            return Ok(ScalarPosterior { mean, variance });
        }
        window *= 2.0;
    }
    Err(fail("prior and likelihood regions do not overlap or normalizer vanished".into()))
}

fn integrate(
    region: &PolarBox,
    z1: Complex64,
    v_u: f64,
    p_sat: f64,
    cfg: &QuadratureConfig,
    log_lik: &dyn Fn(Complex64) -> f64,
) -> Option<ScalarPosterior> {
    let (rx, rw) = gauss_legendre(cfg.radial_nodes);
    let half_r = 0.5 * (region.rho_hi - region.rho_lo);
    let mid_r = 0.5 * (region.rho_hi + region.rho_lo);

    // Periodic trapezoid on the full circle, Gauss-Legendre on an arc.
    let (angles, aw): (Vec<f64>, Vec<f64>) = if region.arc.is_full() {
        let m = cfg.angular_nodes;
        let h = 2.0 * PI / m as f64;
        ((0..m).map(|k| k as f64 * h).collect(), vec![h; m])
    } else {
        let (tx, tw) = gauss_legendre(cfg.angular_nodes);
        let a = region.arc;
        (tx.iter().map(|t| a.center + a.half * t).collect(), tw.iter().map(|w| w * a.half).collect())
    };
    let dirs: Vec<Complex64> = angles.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();

    let mut nodes = Vec::with_capacity(rx.len() * dirs.len());
    let mut logw = Vec::with_capacity(nodes.capacity());
    for (x, w) in rx.iter().zip(&rw) {
        let rho = mid_r + half_r * x;
        if rho <= 0.0 {
            continue;
        }
        let lw_r = (w * half_r * rho).ln();
        for (d, wa) in dirs.iter().zip(&aw) {
            let u = d * rho;
            let lp = -(u - z1).norm_sqr() / v_u;
            let ll = log_lik(saturate(u, p_sat));
            nodes.push(u);
            logw.push(lw_r + wa.ln() + lp + ll);
        }
    }
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut total = 0.0;
    let mut first = Complex64::new(0.0, 0.0);
    for (u, lw) in nodes.iter().zip(logw.iter_mut()) {
        *lw = (*lw - max).exp();
        total += *lw;
        first += u * *lw;
    }
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    let mean = first / total;
    let second: f64 = nodes.iter().zip(&logw).map(|(u, w)| w * (u - mean).norm_sqr()).sum();
    Some(ScalarPosterior { mean, variance: second / total })
}
