//! Tilted probability measures μ_λ(dt) = e^{-λΨ(t)} dt / Z_λ.
//!
//! [`build_tilted`] computes the normalizer in the log domain, the moments
//! m_λ = 𝔼Ψ(X), σ²_λ = Var Ψ(X), the third absolute moment of the
//! standardized variable, and a CDF tabulation used for inverse-CDF sampling.
//! [`solve_lambda`] inverts λ ↦ m_λ, which is strictly decreasing
//! (dm/dλ = -Var Ψ(X) < 0), by doubling/halving to a bracket and geometric
//! bisection. [`TiltedMeasure::char_modulus`] and [`estimate_cramer`] provide
//! the Cramér-condition diagnostics (ε, δ) for the standardized summand.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::math;
use crate::quad;
use crate::rng::uniform01;
use crate::young::YoungFunction;

/// Quadrature targets for moment integrals.
const REL_TOL: f64 = 1e-12;
const ABS_FLOOR: f64 = 1e-15;
/// e^{-46} ≈ 1e-20: truncation threshold for integrands relative to peak.
const TAIL_EXPONENT: f64 = 46.0;
/// Panels per side of the CDF table (nodes = 2 panels-per-side + 1).
const CDF_PANELS_PER_SIDE: usize = 4096;
/// Quantile where the table switches from equal-mass to fixed-step-in-level
/// panels; the far tail needs level resolution, not mass resolution, because
/// exponentially tilted reweighting (importance estimators) magnifies it.
const CDF_TAIL_Q: f64 = 1.0 / 64.0;
/// Tail panel width in units of 1/λ.
const CDF_TAIL_STEP: f64 = 1.0 / 3.0;
/// Quantile mass discarded at each support end to keep the table strictly increasing.
const CDF_TAIL_TRIM: f64 = 1e-14;

/// Cramér-condition certificate: |φ_Y(t)| ≤ 1 - ε for |t| in [δ, t_max].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CramerParams {
    pub delta: f64,
    pub epsilon: f64,
}

/// Monotone-cubic (Fritsch–Carlson) interpolant data.
#[derive(Debug, Clone)]
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Pchip {
        let d = pchip_slopes(&x, &y);
        Pchip { x, y, d }
    }

    fn eval(&self, xq: f64) -> f64 {
        let n = self.x.len();
        if xq <= self.x[0] {
            return self.y[0];
        }
        if xq >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= xq) - 1;
        self.eval_segment(i.min(n - 2), xq)
    }

    #[inline]
    fn eval_segment(&self, i: usize, xq: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let t = (xq - self.x[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = alloc::vec![0.0; n];
    if n < 2 {
        return d;
    }
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| -> f64 {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 < 0.0 && math::abs(s) > 3.0 * math::abs(d0) {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d
}

const QUANTILE_LUT_BUCKETS: usize = 4096;

#[derive(Debug, Clone)]
struct CdfTable {
    /// strictly increasing sample positions
    t: Vec<f64>,
    /// CDF values at `t`, exactly 0 and 1 at the ends
    f: Vec<f64>,
    quantile: Pchip,
    forward: Pchip,
    /// for u in bucket b, the quantile segment index lies in
    /// [lut[b], lut[b+1]]: narrows the per-draw search to a few nodes
    u_lut: Vec<u32>,
}

impl CdfTable {
    fn build_lut(f: &[f64]) -> Vec<u32> {
        let mut lut = Vec::with_capacity(QUANTILE_LUT_BUCKETS + 1);
        let mut idx = 0usize;
        for b in 0..=QUANTILE_LUT_BUCKETS {
            let u = b as f64 / QUANTILE_LUT_BUCKETS as f64;
            while idx + 1 < f.len() && f[idx + 1] <= u {
                idx += 1;
            }
            lut.push(idx as u32);
        }
        lut
    }

    /// Quantile lookup: LUT bucket, then a short binary search, then the
    /// monotone-cubic segment evaluation.
    #[inline]
    fn quantile(&self, u: f64) -> f64 {
        let f = &self.f;
        let n = f.len();
        if u <= 0.0 {
            return self.t[0];
        }
        if u >= 1.0 {
            return self.t[n - 1];
        }
        let b = ((u * QUANTILE_LUT_BUCKETS as f64) as usize).min(QUANTILE_LUT_BUCKETS - 1);
        let mut lo = self.u_lut[b] as usize;
        let mut hi = (self.u_lut[b + 1] as usize + 1).min(n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if f[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.quantile.eval_segment(lo, u)
    }
}

/// The tilted measure with its moments and sampling table.
#[derive(Debug, Clone)]
pub struct TiltedMeasure {
    psi: YoungFunction,
    pub lambda: f64,
    /// ln Z_λ.
    pub log_partition: f64,
    /// m_λ = 𝔼 Ψ(X).
    pub psi_mean: f64,
    /// σ²_λ = Var Ψ(X).
    pub psi_var: f64,
    /// 𝔼|Y|³ for the standardized Y = (Ψ(X) - m)/σ; ≥ 1 by the power-mean inequality.
    pub third_abs_moment: f64,
    support: (f64, f64),
    cdf: CdfTable,
}

fn density_pieces(t_neg: f64, t_pos: f64) -> Vec<f64> {
    let mut pieces = alloc::vec![t_neg, 0.0, t_pos];
    quad::sorted_pieces(&mut pieces);
    pieces
}

/// Truncated support [t⁻, t⁺] where the integrand e^{-λΨ} falls 46+log Z
/// e-folds below its peak.
fn truncated_support(psi: &YoungFunction, lambda: f64) -> Result<(f64, f64)> {
    let a0 = TAIL_EXPONENT / lambda;
    let tp0 = psi.inverse_pos(a0);
    let tn0 = psi.inverse_neg(a0);
    let rough = quad::integrate(
        &|t| math::exp(-lambda * psi.eval(t)),
        &density_pieces(tn0, tp0),
        1e-6,
        1e-300,
    )?;
    let a = (TAIL_EXPONENT + f64::max(0.0, math::ln(rough.value[0]))) / lambda;
    Ok((psi.inverse_neg(a), psi.inverse_pos(a)))
}

/// ln Z_λ and m_λ only (used by the λ solver).
fn partition_and_mean(psi: &YoungFunction, lambda: f64) -> Result<(f64, f64, (f64, f64))> {
    let (tn, tp) = truncated_support(psi, lambda)?;
    let pieces = density_pieces(tn, tp);
    let z = quad::integrate(
        &|t| math::exp(-lambda * psi.eval(t)),
        &pieces,
        REL_TOL,
        1e-300,
    )?
    .value[0];
    let log_z = math::ln(z);
    let m = quad::integrate(
        &|t| psi.eval(t) * math::exp(-lambda * psi.eval(t) - log_z),
        &pieces,
        REL_TOL,
        ABS_FLOOR,
    )?
    .value[0];
    Ok((log_z, m, (tn, tp)))
}

/// Build the tilted measure at a given λ > 0.
pub fn build_tilted(psi: &YoungFunction, lambda: f64) -> Result<TiltedMeasure> {
    build_tilted_with(psi, lambda, REL_TOL)
}

/// As [`build_tilted`] with an explicit quadrature tolerance (consistency checks).
pub fn build_tilted_with(psi: &YoungFunction, lambda: f64, rel_tol: f64) -> Result<TiltedMeasure> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Domain(alloc::format!(
            "build_tilted needs lambda > 0, got {lambda}"
        )));
    }
    let (log_z, m, (tn, tp)) = partition_and_mean(psi, lambda)?;

    // kinks of |psi - m|^k at the mean level
    let tm_pos = psi.inverse_pos(m);
    let tm_neg = psi.inverse_neg(m);
    let mut pieces = alloc::vec![tn, tm_neg, 0.0, tm_pos, tp];
    quad::sorted_pieces(&mut pieces);

    let dens = |t: f64| math::exp(-lambda * psi.eval(t) - log_z);
    let var = quad::integrate(
        &|t| {
            let d = psi.eval(t) - m;
            d * d * dens(t)
        },
        &pieces,
        rel_tol,
        ABS_FLOOR,
    )?
    .value[0];
    let sigma = math::sqrt(var);
    let nu3 = quad::integrate(
        &|t| {
            let d = math::abs(psi.eval(t) - m);
            d * d * d * dens(t)
        },
        &pieces,
        rel_tol,
        ABS_FLOOR,
    )?
    .value[0]
        / (var * sigma);

    let cdf = build_cdf_table(psi, lambda, log_z, tn, tp)?;

    Ok(TiltedMeasure {
        psi: psi.clone(),
        lambda,
        log_partition: log_z,
        psi_mean: m,
        psi_var: var,
        third_abs_moment: nu3,
        support: (tn, tp),
        cdf,
    })
}

fn build_cdf_table(
    psi: &YoungFunction,
    lambda: f64,
    log_z: f64,
    t_neg: f64,
    t_pos: f64,
) -> Result<CdfTable> {
    let a_pos = lambda * psi.eval(t_pos);
    let a_neg = lambda * psi.eval(t_neg);
    let side_nodes = |a: f64, positive: bool| -> Vec<f64> {
        // bulk: equal-mass spacing in Ψ-level under the exponential tilt
        // (clusters nodes where the density peaks); tail: fixed steps in
        // λΨ-level so tilted reweighting stays accurate
        let s_bulk_end = (-math::ln(CDF_TAIL_Q) / lambda).min(a / lambda);
        let tail_panels = ((math::ceil((a / lambda - s_bulk_end) * lambda / CDF_TAIL_STEP))
            as usize)
            .min(CDF_PANELS_PER_SIDE / 2);
        let m = CDF_PANELS_PER_SIDE - tail_panels;
        let w = -math::expm1(-lambda * s_bulk_end);
        let mut levels = Vec::with_capacity(CDF_PANELS_PER_SIDE + 1);
        for i in 0..=m {
            let s = if i == m {
                s_bulk_end
            } else {
                -math::ln1p(-(i as f64 / m as f64) * w) / lambda
            };
            levels.push(s);
        }
        for i in 1..=tail_panels {
            let s = if i == tail_panels {
                a / lambda
            } else {
                s_bulk_end + (a / lambda - s_bulk_end) * i as f64 / tail_panels as f64
            };
            levels.push(s);
        }
        levels
            .iter()
            .map(|&s| {
                if positive {
                    psi.inverse_pos(s)
                } else {
                    psi.inverse_neg(s)
                }
            })
            .collect()
    };
    let pos = side_nodes(a_pos, true);
    let mut nodes = side_nodes(a_neg, false);
    nodes.reverse(); // t_neg .. 0
    nodes.extend_from_slice(&pos[1..]); // skip duplicate 0

    let dens = |t: f64| math::exp(-lambda * psi.eval(t) - log_z);
    let mut f = Vec::with_capacity(nodes.len());
    f.push(0.0);
    let mut acc = 0.0;
    for w in nodes.windows(2) {
        let mass = quad::integrate(&dens, &[w[0], w[1]], 1e-10, 1e-300)?.value[0];
        acc += mass;
        f.push(acc);
    }
    let total = acc;
    if total <= 0.0 || total.is_nan() {
        return Err(Error::QuadratureFailure {
            last: total,
            previous: 0.0,
        });
    }

    // trim quantile tails below the resolvable mass and renormalize
    let lo_cut = CDF_TAIL_TRIM * total;
    let hi_cut = (1.0 - CDF_TAIL_TRIM) * total;
    let mut i_lo = 0;
    while i_lo + 2 < f.len() && f[i_lo + 1] <= lo_cut {
        i_lo += 1;
    }
    let mut i_hi = f.len() - 1;
    while i_hi > i_lo + 1 && f[i_hi - 1] >= hi_cut {
        i_hi -= 1;
    }
    let span = f[i_hi] - f[i_lo];
    let base = f[i_lo];
    let mut t_keep = Vec::with_capacity(i_hi - i_lo + 1);
    let mut f_keep = Vec::with_capacity(i_hi - i_lo + 1);
    for i in i_lo..=i_hi {
        let fv = ((f[i] - base) / span).clamp(0.0, 1.0);
        if let Some(&last) = f_keep.last() {
            if fv <= last {
                continue; // drop nodes whose panel mass underflowed
            }
        }
        t_keep.push(nodes[i]);
        f_keep.push(fv);
    }
    let last = f_keep.len() - 1;
    f_keep[0] = 0.0;
    f_keep[last] = 1.0;

    let quantile = Pchip::new(f_keep.clone(), t_keep.clone());
    let forward = Pchip::new(t_keep.clone(), f_keep.clone());
    let u_lut = CdfTable::build_lut(&f_keep);
    Ok(CdfTable {
        t: t_keep,
        f: f_keep,
        quantile,
        forward,
        u_lut,
    })
}

impl TiltedMeasure {
    pub fn psi(&self) -> &YoungFunction {
        &self.psi
    }

    /// σ_λ.
    pub fn sigma(&self) -> f64 {
        math::sqrt(self.psi_var)
    }

    /// Truncated support the quadratures and the table live on.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Tabulated (t, CDF) nodes.
    pub fn cdf_nodes(&self) -> (&[f64], &[f64]) {
        (&self.cdf.t, &self.cdf.f)
    }

    /// CDF at t (monotone-cubic interpolation of the table).
    pub fn cdf(&self, t: f64) -> f64 {
        self.cdf.forward.eval(t).clamp(0.0, 1.0)
    }

    /// Quantile t(u) for u in [0, 1].
    #[inline]
    pub fn quantile(&self, u: f64) -> f64 {
        self.cdf.quantile(u)
    }

    /// One inverse-CDF draw.
    #[inline]
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(uniform01(rng))
    }

    /// `count` i.i.d. draws.
    pub fn sample_1d<R: RngCore + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.draw(rng)).collect()
    }

    /// Standardized transform Y(t) = (Ψ(t) - m)/σ.
    #[inline]
    pub fn standardized(&self, t: f64) -> f64 {
        (self.psi.eval(t) - self.psi_mean) / self.sigma()
    }

    /// |𝔼 e^{iuY}| for the standardized Y, by quadrature of both parts.
    pub fn char_modulus(&self, u: f64) -> Result<f64> {
        let lambda = self.lambda;
        let log_z = self.log_partition;
        let m = self.psi_mean;
        let sigma = self.sigma();
        let (tn, tp) = self.support;
        let psi = &self.psi;
        let f = |t: f64| {
            let pv = psi.eval(t);
            let w = math::exp(-lambda * pv - log_z);
            let phase = u * (pv - m) / sigma;
            [math::cos(phase) * w, math::sin(phase) * w]
        };
        let out = if self.psi.is_even() {
            // symmetric density: integrate one side and double
            let half = quad::integrate_vec(&f, &[0.0, tp], 3e-9, 1e-13)?;
            [2.0 * half.value[0], 2.0 * half.value[1]]
        } else {
            quad::integrate_vec(&f, &[tn, 0.0, tp], 3e-9, 1e-13)?.value
        };
        Ok(math::sqrt(out[0] * out[0] + out[1] * out[1]))
    }
}

/// Solve λ so that m_λ matches `m_target` to relative 1e-9.
pub fn solve_lambda(psi: &YoungFunction, m_target: f64) -> Result<TiltedMeasure> {
    const LAMBDA_MIN: f64 = 1e-12;
    const LAMBDA_MAX: f64 = 1e12;
    const TOL: f64 = 1e-9;

    if !m_target.is_finite() || m_target <= 0.0 {
        return Err(Error::Domain(alloc::format!(
            "solve_lambda needs a positive mean target, got {m_target}"
        )));
    }
    let mean_at = |lam: f64| -> Result<f64> { Ok(partition_and_mean(psi, lam)?.1) };

    // m_lambda is strictly decreasing; bracket by doubling/halving from 1
    let mut lo = 1.0f64; // m(lo) >= target side
    let mut hi = 1.0f64; // m(hi) <= target side
    let m1 = mean_at(1.0)?;
    if math::abs(m1 - m_target) <= TOL * m_target {
        return build_tilted(psi, 1.0);
    }
    if m1 > m_target {
        loop {
            hi *= 2.0;
            if hi > LAMBDA_MAX {
                return Err(Error::BracketFailure { target: m_target });
            }
            if mean_at(hi)? <= m_target {
                lo = hi / 2.0;
                break;
            }
        }
    } else {
        loop {
            lo *= 0.5;
            if lo < LAMBDA_MIN {
                return Err(Error::BracketFailure { target: m_target });
            }
            if mean_at(lo)? >= m_target {
                hi = lo * 2.0;
                break;
            }
        }
    }

    let mut mid = math::sqrt(lo * hi);
    for _ in 0..200 {
        mid = math::sqrt(lo * hi);
        let m_mid = mean_at(mid)?;
        if math::abs(m_mid - m_target) <= TOL * m_target {
            return build_tilted(psi, mid);
        }
        if m_mid > m_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    let m_mid = mean_at(mid)?;
    if math::abs(m_mid - m_target) <= 1e-7 * m_target {
        return build_tilted(psi, mid);
    }
    Err(Error::BracketFailure { target: m_target })
}

/// Scan |φ_Y| on [delta, t_max] (step ≤ 0.01) and certify Cramér's condition.
///
/// |φ(-u)| = |φ(u)| for any real law, so the positive half suffices.
pub fn estimate_cramer(tm: &TiltedMeasure, delta: f64, t_max: f64) -> Result<CramerParams> {
    if !delta.is_finite() || delta <= 0.0 || delta >= t_max {
        return Err(Error::Domain(alloc::format!(
            "estimate_cramer needs 0 < delta < t_max, got ({delta}, {t_max})"
        )));
    }
    let steps = math::ceil((t_max - delta) / 0.01) as usize;
    let step = (t_max - delta) / steps as f64;
    let mut max_mod = 0.0f64;
    let mut arg_max = delta;
    for i in 0..=steps {
        let u = delta + i as f64 * step;
        let m = tm.char_modulus(u)?;
        if m > max_mod {
            max_mod = m;
            arg_max = u;
        }
    }
    let epsilon = 1.0 - max_mod;
    if epsilon <= 0.0 {
        return Err(Error::NoCramer {
            at: arg_max,
            modulus: max_mod,
        });
    }
    Ok(CramerParams { delta, epsilon })
}
