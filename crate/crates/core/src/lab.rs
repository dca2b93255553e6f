//! Desk-scale experiments reproducing the limit laws: tilted CLT expectations
//! against the incomplete-gamma oracle, marginal total-variation decay,
//! the boundary-distance Exp(1) law, spectral-gap level intervals, and the
//! ψ₂ Laplace-transform chain.
//!
//! Every experiment owns its generators (ChaCha streams of an explicit seed)
//! and returns an [`ExperimentReport`] whose pass/fail thresholds are recorded
//! in the report itself, so a report is reproducible and self-describing.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::{seeded, shard_counts, LogSumExp};
use crate::sampler;
use crate::special::{gamma_tilt_log_expectation, ln_gamma};
use crate::stats::{exp_cdf, ks_distance};
use crate::tilt::{build_tilted, solve_lambda, TiltedMeasure};
use crate::volume::{asymptotic_log_value, level_cdf, BallSpec};
use crate::young::YoungFunction;

/// Named statistics plus a self-recorded verdict.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentReport {
    pub name: String,
    pub statistics: BTreeMap<String, f64>,
    pub pass: bool,
    pub sample_size: u64,
    pub seed: u64,
    pub workers: u32,
}

impl ExperimentReport {
    fn new(name: &str, seed: u64, workers: u32) -> ExperimentReport {
        ExperimentReport {
            name: String::from(name),
            statistics: BTreeMap::new(),
            pass: true,
            sample_size: 0,
            seed,
            workers,
        }
    }

    fn set(&mut self, key: &str, value: f64) {
        self.statistics.insert(String::from(key), value);
    }
}

/// Spectral-gap level interval [m₁n − σ₁(1−ε)√(2n), m₁n + σ₁(1−ε)√(2n)].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelInterval {
    pub potential: String,
    pub dim: u32,
    pub m1: f64,
    pub sigma1: f64,
    pub eps: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Validity floor n ≥ 16ℓ² + (2|α|+1)²ℓ^{-2} for the tilted-CLT expansion.
pub fn clt_validity_floor(ell: f64, alpha: f64) -> f64 {
    16.0 * ell * ell + (2.0 * math::abs(alpha) + 1.0) * (2.0 * math::abs(alpha) + 1.0) / (ell * ell)
}

/// ln 𝓙ₙ = ℓ√n α − α²/2 − ln(ℓ√(2πn)): the first-order prediction for
/// 𝔼 e^{ℓ√n Sₙ} 1{Sₙ ≤ α}.
pub fn clt_prediction_ln(ell: f64, alpha: f64, n: f64) -> f64 {
    ell * math::sqrt(n) * alpha
        - 0.5 * alpha * alpha
        - math::ln(ell * math::sqrt(2.0 * core::f64::consts::PI * n))
}

/// ln 𝓘ₙ = ln 𝔼 e^{ℓ√n Sₙ} 1{Sₙ ≤ α} for Sₙ built from Y = (Ψ(X)−m)/σ,
/// exact via Gamma tilting when Ψ = |t|^p (then ΣΨ(Xᵢ) ~ Gamma(n/p, λ)).
pub fn clt_exact_ln(tm: &TiltedMeasure, ell: f64, alpha: f64, n: u64) -> Result<f64> {
    let p = tm.psi().pow_exponent().ok_or_else(|| {
        Error::Domain(String::from(
            "exact tilted-CLT oracle needs a pure power potential",
        ))
    })?;
    let nf = n as f64;
    let sigma = tm.sigma();
    let c = ell / sigma;
    let x = tm.psi_mean * nf + alpha * sigma * math::sqrt(nf);
    Ok(-c * nf * tm.psi_mean + gamma_tilt_log_expectation(nf / p, tm.lambda, c, x)?)
}

/// Monte Carlo route for ln 𝓘ₙ: retilt to λ″ with m_{λ″} = x/n so the weight
/// e^{d(G−x)} 1{G ≤ x} is bounded by 1. Returns (ln 𝓘, standard error).
pub fn clt_mc_ln(
    tm: &TiltedMeasure,
    ell: f64,
    alpha: f64,
    n: u64,
    seed: u64,
    workers: u32,
    samples: u64,
) -> Result<(f64, f64)> {
    let nf = n as f64;
    let sigma = tm.sigma();
    let c = ell / sigma;
    let x = tm.psi_mean * nf + alpha * sigma * math::sqrt(nf);
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!(
            "truncation level x = {x} is not positive; alpha too negative"
        )));
    }
    let prop = solve_lambda(tm.psi(), x / nf)?;
    let d = prop.lambda - tm.lambda + c;
    if !d.is_finite() || d <= 0.0 {
        return Err(Error::Domain(format!(
            "importance exponent d = {d} <= 0; regime outside the bounded-weight design"
        )));
    }
    let dim = u32::try_from(n).map_err(|_| Error::Domain(String::from("n too large")))?;
    let acc = crate::volume::mc_indicator_sharded(&prop, dim, d, x, seed, workers, samples);
    if acc.hits < 30 {
        return Err(Error::AllRejected {
            hits: acc.hits,
            samples: acc.total,
        });
    }
    let (ln_mean, se) = acc.ln_mean_and_se();
    let ln_i =
        -c * nf * tm.psi_mean + nf * (prop.log_partition - tm.log_partition) + d * x + ln_mean;
    Ok((ln_i, se))
}

/// Tilted CLT expectation experiment: rₙ = 𝓘ₙ/𝓙ₙ − 1 across `n_list`.
///
/// Uses the exact Gamma-tilting oracle for power potentials (no MC noise),
/// importance MC otherwise. Pass: |rₙ|√n never exceeds 3× its value at the
/// smallest n (plus 3·SE·√n slack on MC paths). Entries below the validity
/// floor are computed and flagged; the error fires only if every n is below.
pub fn clt_exp_experiment(
    tm: &TiltedMeasure,
    ell: f64,
    alpha: f64,
    n_list: &[u64],
    seed: u64,
    workers: u32,
    mc_samples: u64,
) -> Result<ExperimentReport> {
    if !ell.is_finite() || ell <= 0.0 {
        return Err(Error::Domain(format!("ell must be positive, got {ell}")));
    }
    if n_list.is_empty() {
        return Err(Error::Domain(String::from("n_list must be nonempty")));
    }
    let floor = clt_validity_floor(ell, alpha);
    if n_list.iter().all(|&n| (n as f64) < floor) {
        return Err(Error::ValidityFloor { floor });
    }

    let mut report = ExperimentReport::new("clt_exp", seed, workers);
    report.set("ell", ell);
    report.set("alpha", alpha);
    report.set("validity_floor", floor);

    let exact = tm.psi().pow_exponent().is_some() && ell / tm.sigma() < tm.lambda;
    let mut anchor: Option<(u64, f64)> = None;
    let mut pass = true;
    let mut n_sorted: Vec<u64> = n_list.to_vec();
    n_sorted.sort_unstable();
    for &n in &n_sorted {
        let nf = n as f64;
        let ln_j = clt_prediction_ln(ell, alpha, nf);
        let (ln_i, se) = if exact {
            (clt_exact_ln(tm, ell, alpha, n)?, 0.0)
        } else {
            report.sample_size += mc_samples;
            clt_mc_ln(tm, ell, alpha, n, seed.wrapping_add(n), workers, mc_samples)?
        };
        let r = math::expm1(ln_i - ln_j);
        let b = math::abs(r) * math::sqrt(nf);
        report.set(&format!("r_{n}"), r);
        report.set(&format!("rsqrtn_{n}"), b);
        report.set(&format!("below_floor_{n}"), f64::from(nf < floor));
        if !exact {
            report.set(&format!("se_{n}"), se);
        }
        match anchor {
            None => anchor = Some((n, b)),
            Some((_, b0)) => {
                let slack = 3.0 * (1.0 + math::abs(r)) * se * math::sqrt(nf);
                if b > 3.0 * b0 + slack + 1e-12 {
                    pass = false;
                }
            }
        }
    }
    if let Some((n0, b0)) = anchor {
        report.set("band_anchor_n", n0 as f64);
        report.set("band_anchor", b0);
        report.set("band_limit_factor", 3.0);
    }
    report.pass = pass;
    Ok(report)
}

/// Marginal total-variation experiment (k coordinates of a uniform vector vs
/// μ_λ^⊗k).
///
/// Semi-analytic route: TV ≈ ∫₀^{t_cap} |Vol_ratio(t) − e^{-λt}/Z^k| dν_k(t)
/// with dν_k the k-fold level measure (convolution oracle for k ≤ 12, tilted
/// MC re-representation beyond) and both volumes from the asymptotics;
/// t_cap = n^{1/4}√k. Empirical route (when `samples > 0`): histogram TV
/// lower bound from exact uniform batches.
#[allow(clippy::too_many_arguments)]
pub fn marginal_tv_experiment(
    psi: &YoungFunction,
    lambda: f64,
    n: u32,
    k: u32,
    alpha: f64,
    seed: u64,
    workers: u32,
    samples: u64,
) -> Result<ExperimentReport> {
    if k < 1 || k >= n {
        return Err(Error::Domain(format!(
            "need 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let tm = build_tilted(psi, lambda)?;
    let nf = n as f64;
    let kf = k as f64;
    let level = tm.psi_mean * nf + alpha * tm.sigma() * math::sqrt(nf);
    let t_cap = (math::powf(nf, 0.25) * math::sqrt(kf)).min(0.5 * level);

    let sigma = tm.sigma();
    let log_z = tm.log_partition;
    let ln_den = asymptotic_log_value(nf, level, log_z, lambda, sigma, {
        (level - tm.psi_mean * nf) / (sigma * math::sqrt(nf))
    });
    // ln of Vol(B^{n-k}_{psi/(E-t)}) / Vol(B^n_{psi/E}) at fixed lambda
    let ln_ratio = |t: f64| -> f64 {
        let rest = level - t;
        let nk = nf - kf;
        let a = (rest - tm.psi_mean * nk) / (sigma * math::sqrt(nk));
        asymptotic_log_value(nk, rest, log_z, lambda, sigma, a) - ln_den
    };

    let mut report = ExperimentReport::new("marginal_tv", seed, workers);
    report.set("n", nf);
    report.set("k", kf);
    report.set("lambda", lambda);
    report.set("alpha", alpha);
    report.set("t_cap", t_cap);
    let regime_violation = kf * kf >= nf;
    report.set("regime_violation", f64::from(regime_violation));

    let tv_semi = if k <= 12 {
        let lc = level_cdf(psi, k, t_cap, 2048)?;
        let mut tv = 0.0;
        for (i, mass) in lc.cell_masses().iter().enumerate() {
            if *mass <= 0.0 {
                continue;
            }
            let t_mid = (i as f64 + 0.5) * lc.step;
            let a_ln = ln_ratio(t_mid);
            let b_ln = -lambda * t_mid - kf * log_z;
            let hi = f64::max(a_ln, b_ln);
            let diff = math::exp(hi) * (-math::expm1(-math::abs(a_ln - b_ln)));
            tv += mass * diff;
        }
        tv
    } else {
        // dν_k(t) = Z^k e^{λt} dP(G_k ≤ t) with G_k = Σ_{i≤k} Ψ(X_i), X ~ μ_λ
        let draws = samples.max(20_000);
        let mut sum = 0.0;
        let mut used = 0u64;
        for (w, &share) in shard_counts(draws, workers).iter().enumerate() {
            let mut rng = seeded(seed ^ 0x6d61_7267, w as u64);
            for _ in 0..share {
                let mut g = 0.0;
                for _ in 0..k {
                    g += psi.eval(tm.draw(&mut rng));
                }
                used += 1;
                if g <= t_cap {
                    sum += math::abs(math::expm1(ln_ratio(g) + lambda * g + kf * log_z));
                }
            }
        }
        report.sample_size += used;
        sum / used as f64
    };
    report.set("tv_semianalytic", tv_semi);

    if samples > 0 {
        let tv_emp = marginal_histogram_tv(psi, &tm, n, k, level, seed, workers, samples)?;
        report.set("tv_empirical", tv_emp);
        report.sample_size += samples;
    }

    report.set("threshold", 0.05);
    report.pass = regime_violation || tv_semi <= 0.05;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn marginal_histogram_tv(
    psi: &YoungFunction,
    tm: &TiltedMeasure,
    n: u32,
    k: u32,
    level: f64,
    seed: u64,
    workers: u32,
    samples: u64,
) -> Result<f64> {
    // box covering all but ~2e-4 of the reference product law; the tiny
    // remainder is accounted for by the out-of-box term below
    let x_max = tm.quantile(0.9999).max(-tm.quantile(0.0001)) * 1.25;
    let mut bins_per_dim: usize = if k == 1 {
        64
    } else {
        (math::powf(samples as f64 / 50.0, 1.0 / k as f64) as usize).clamp(2, 32)
    };
    while math::powu(bins_per_dim as f64, k) > (1 << 20) as f64 {
        bins_per_dim -= 1;
    }
    let bins_total = bins_per_dim.pow(k);
    let width = 2.0 * x_max / bins_per_dim as f64;

    let ball = BallSpec::new(psi.clone(), n, level)?;
    let mut counts = alloc::vec![0u64; bins_total];
    let mut out_count = 0u64;
    sampler::for_each_uniform_sample(&ball, tm, seed, workers, samples as usize, |row| {
        let mut idx = 0usize;
        let mut ok = true;
        for &x in row.iter().take(k as usize) {
            let b = ((x + x_max) / width) as isize;
            if b < 0 || b >= bins_per_dim as isize {
                ok = false;
                break;
            }
            idx = idx * bins_per_dim + b as usize;
        }
        if ok {
            counts[idx] += 1;
        } else {
            out_count += 1;
        }
    })?;

    // per-dimension reference masses under mu_lambda
    let edge_mass: Vec<f64> = (0..bins_per_dim)
        .map(|b| {
            let lo = -x_max + b as f64 * width;
            let hi = lo + width;
            (tm.cdf(hi) - tm.cdf(lo)).max(0.0)
        })
        .collect();
    let in_box: f64 = edge_mass.iter().sum();

    let mut tv = 0.0f64;
    for (idx, &c) in counts.iter().enumerate() {
        let mut q = 1.0;
        let mut rest = idx;
        for _ in 0..k {
            q *= edge_mass[rest % bins_per_dim];
            rest /= bins_per_dim;
        }
        tv += math::abs(c as f64 / samples as f64 - q);
    }
    // out-of-box masses of the two laws
    tv += math::abs(out_count as f64 / samples as f64 - (1.0 - math::powf(in_box, k as f64)));
    Ok(0.5 * tv)
}

/// Boundary-distance law: D = λ(E − ΣΨ(ξ)) against Exp(1), by KS distance.
///
/// Pass threshold 0.707/√n + 1.36/√samples: the O(n^{-1/2}) distributional
/// bias calibrated to 0.05 at n = 200, plus one KS noise width.
pub fn boundary_exp_test(
    spec: &BallSpec,
    tm: &TiltedMeasure,
    seed: u64,
    workers: u32,
    samples: u64,
) -> Result<ExperimentReport> {
    if samples < 10_000 {
        return Err(Error::Domain(format!(
            "boundary test needs >= 1e4 samples, got {samples}"
        )));
    }
    let lambda = tm.lambda;
    let level = spec.level;
    let mut d_vals: Vec<f64> = Vec::with_capacity(samples as usize);
    let mut d_min = f64::INFINITY;
    let psi = spec.psi.clone();
    sampler::for_each_uniform_sample(spec, tm, seed, workers, samples as usize, |row| {
        let s: f64 = row.iter().map(|&x| psi.eval(x)).sum();
        let d = lambda * (level - s);
        if d < d_min {
            d_min = d;
        }
        d_vals.push(d);
    })?;
    let ks = ks_distance(&d_vals, exp_cdf);
    let threshold = 0.707 / math::sqrt(spec.dim as f64) + 1.36 / math::sqrt(samples as f64);

    let mut report = ExperimentReport::new("boundary_exp", seed, workers);
    report.sample_size = samples;
    report.set("n", spec.dim as f64);
    report.set("lambda", lambda);
    report.set("ks", ks);
    report.set("threshold", threshold);
    report.set("d_min", d_min);
    report.pass = ks <= threshold && d_min >= 0.0;
    Ok(report)
}

fn normalized_potential(v: &YoungFunction) -> Result<TiltedMeasure> {
    let tm = build_tilted(v, 1.0)?;
    let z = math::exp(tm.log_partition);
    if math::abs(z - 1.0) > 1e-9 {
        return Err(Error::NotNormalized {
            integral: z,
            hint: format!(
                "rescale the argument (V(Z*t) with Z = {z:.12}) or adjust mix coefficients \
                 so that the exponential density integrates to 1"
            ),
        });
    }
    Ok(tm)
}

/// Level interval certified by the volume asymptotics:
/// [m₁n − σ₁(1−ε)√(2n), m₁n + σ₁(1−ε)√(2n)].
pub fn level_interval(v: &YoungFunction, n: u32, eps: f64) -> Result<LevelInterval> {
    if !eps.is_finite() || eps <= 0.0 || eps >= 1.0 {
        return Err(Error::Domain(format!("eps must be in (0,1), got {eps}")));
    }
    if n < 1 {
        return Err(Error::Domain(String::from("n must be >= 1")));
    }
    let tm = normalized_potential(v)?;
    let m1 = tm.psi_mean;
    let sigma1 = tm.sigma();
    let nf = n as f64;
    let half = sigma1 * (1.0 - eps) * math::sqrt(2.0 * nf);
    Ok(LevelInterval {
        potential: String::from(v.spec()),
        dim: n,
        m1,
        sigma1,
        eps,
        lo: m1 * nf - half,
        hi: m1 * nf + half,
    })
}

/// Membership of E in Level_n(V) = {E : e^{-E} Vol ≥ (1/e) nⁿe^{-n}/n!},
/// decided by the volume asymptotics with λ solved for E/n. Returns the
/// decision and the log-margin.
pub fn level_membership(v: &YoungFunction, n: u32, level: f64) -> Result<(bool, f64)> {
    let _ = normalized_potential(v)?;
    let tm = solve_lambda(v, level / n as f64)?;
    let nf = n as f64;
    let alpha = (level - tm.psi_mean * nf) / (tm.sigma() * math::sqrt(nf));
    let lv = asymptotic_log_value(nf, level, tm.log_partition, tm.lambda, tm.sigma(), alpha);
    let rhs = -1.0 + nf * math::ln(nf) - nf - ln_gamma(nf + 1.0);
    let margin = (lv - level) - rhs;
    Ok((margin >= 0.0, margin))
}

/// σ₁² = Var_{e^{-V}}(V), asserted against the variance bound σ₁² ≤ 1 that
/// holds for every probability-normalized convex potential.
pub fn nguyen_wang_check(v: &YoungFunction) -> Result<f64> {
    let tm = normalized_potential(v)?;
    let s2 = tm.psi_var;
    if s2 > 1.0 + 1e-9 {
        return Err(Error::Domain(format!(
            "variance bound violated numerically: Var(V) = {s2} > 1; check the quadrature"
        )));
    }
    Ok(s2)
}

/// Deterministic direction set for the ψ₂ chain: axis vectors and diagonal
/// directions at two scales, plus an alternating-sign diagonal.
pub fn default_directions(n: u32) -> Vec<Vec<f64>> {
    let nf = n as f64;
    let mut dirs = Vec::new();
    let mut e1 = alloc::vec![0.0; n as usize];
    e1[0] = 1.0;
    dirs.push(e1.clone());
    let mut e1x2 = e1;
    e1x2[0] = 2.0;
    dirs.push(e1x2);
    dirs.push(alloc::vec![1.0 / math::sqrt(nf); n as usize]);
    dirs.push(alloc::vec![2.0 / math::sqrt(nf); n as usize]);
    let alt: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { 1.5 } else { -1.5 } / math::sqrt(nf))
        .collect();
    dirs.push(alt);
    dirs
}

/// ψ₂ Laplace-transform chain: for each direction a,
/// 𝔼e^{⟨a,ξ⟩} ≤ (𝔼e^{(|a|/√n)ξ₁})ⁿ ≤ e^{|a|²𝔼ξ₁²/2} within MC error.
///
/// Requires an even potential passing the ψ₂ convexity test. All statistics
/// are accumulated in one streaming pass over the sample.
pub fn psi2_laplace_check(
    spec: &BallSpec,
    tm: &TiltedMeasure,
    directions: &[Vec<f64>],
    seed: u64,
    workers: u32,
    samples: u64,
) -> Result<ExperimentReport> {
    if !spec.psi.is_even() {
        return Err(Error::Domain(String::from(
            "psi2 chain needs an even potential",
        )));
    }
    let psi2 = spec.psi.psi2_test(&YoungFunction::psi2_default_grid())?;
    if !psi2.holds {
        return Err(Error::Psi2Violated {
            witness: psi2.witness.map(|w| w[1]).unwrap_or(f64::NAN),
        });
    }
    let dim = spec.dim as usize;
    for (i, a) in directions.iter().enumerate() {
        if a.len() != dim {
            return Err(Error::Domain(format!(
                "direction {i} has length {} but dim is {dim}",
                a.len()
            )));
        }
    }

    #[derive(Default, Clone)]
    struct DirAcc {
        lse_dot: LogSumExp,
        lse_dot2: LogSumExp,
        lse_m: LogSumExp,
        lse_m2: LogSumExp,
        sum_dot_sq: f64,
        sum_diff: f64,
        sum_diff_sq: f64,
    }

    let norms: Vec<f64> = directions
        .iter()
        .map(|a| math::sqrt(a.iter().map(|&x| x * x).sum::<f64>()))
        .collect();
    let nf = spec.dim as f64;
    let mut accs = alloc::vec![DirAcc::default(); directions.len()];
    let mut sum_x1_sq = 0.0f64;
    let mut sum_x1_4 = 0.0f64;

    sampler::for_each_uniform_sample(spec, tm, seed, workers, samples as usize, |row| {
        let x1 = row[0];
        sum_x1_sq += x1 * x1;
        sum_x1_4 += x1 * x1 * x1 * x1;
        for (acc, (a, &norm)) in accs.iter_mut().zip(directions.iter().zip(&norms)) {
            let dot: f64 = a.iter().zip(row).map(|(ai, xi)| ai * xi).sum();
            acc.lse_dot.push(dot);
            acc.lse_dot2.push(2.0 * dot);
            let t = norm / math::sqrt(nf);
            acc.lse_m.push(t * x1);
            acc.lse_m2.push(2.0 * t * x1);
            acc.sum_dot_sq += dot * dot;
            let diff = dot * dot - norm * norm * x1 * x1;
            acc.sum_diff += diff;
            acc.sum_diff_sq += diff * diff;
        }
    })?;

    let nsf = samples as f64;
    let ln_n = math::ln(nsf);
    let mean_x1_sq = sum_x1_sq / nsf;
    let se_x1_sq = math::sqrt((sum_x1_4 / nsf - mean_x1_sq * mean_x1_sq).max(0.0) / nsf);

    let mut report = ExperimentReport::new("psi2_laplace", seed, workers);
    report.sample_size = samples;
    report.set("n", nf);
    report.set("level", spec.level);
    report.set("mean_xi1_sq", mean_x1_sq);
    let mut pass = true;
    for (i, (acc, &norm)) in accs.iter().zip(&norms).enumerate() {
        let (ln_l, se_l) = lse_mean_and_se(&acc.lse_dot, &acc.lse_dot2, nsf, ln_n);
        let (ln_m1, se_m1) = lse_mean_and_se(&acc.lse_m, &acc.lse_m2, nsf, ln_n);
        let ln_m = nf * ln_m1;
        let se_m = nf * se_m1;
        let ln_r = 0.5 * norm * norm * mean_x1_sq;
        let se_r = 0.5 * norm * norm * se_x1_sq;
        if norm > 0.0 && se_l > 0.05 {
            return Err(Error::Domain(format!(
                "direction {i}: relative SE of E e^<a,x> is {se_l:.3} > 5%; shrink |a| or raise samples"
            )));
        }
        let se_lm = math::sqrt(se_l * se_l + se_m * se_m);
        let se_mr = math::sqrt(se_m * se_m + se_r * se_r);
        let ok1 = ln_l <= ln_m + 3.0 * se_lm + 1e-12;
        let ok2 = ln_m <= ln_r + 3.0 * se_mr + 1e-12;
        // quadratic identity E<a,x>^2 = |a|^2 E x1^2 (exchangeability)
        let mean_diff = acc.sum_diff / nsf;
        let se_diff = math::sqrt((acc.sum_diff_sq / nsf - mean_diff * mean_diff).max(0.0) / nsf);
        let ok3 = math::abs(mean_diff) <= 3.0 * se_diff + 1e-12;
        report.set(&format!("dir{i}_ln_l"), ln_l);
        report.set(&format!("dir{i}_ln_m"), ln_m);
        report.set(&format!("dir{i}_ln_r"), ln_r);
        report.set(&format!("dir{i}_se_lm"), se_lm);
        report.set(&format!("dir{i}_se_mr"), se_mr);
        report.set(&format!("dir{i}_chain_ok"), f64::from(ok1 && ok2));
        report.set(&format!("dir{i}_quad_ok"), f64::from(ok3));
        pass &= ok1 && ok2 && ok3;
    }
    report.pass = pass;
    Ok(report)
}

fn lse_mean_and_se(lse: &LogSumExp, lse2: &LogSumExp, n: f64, ln_n: f64) -> (f64, f64) {
    let ln_mean = lse.ln_sum() - ln_n;
    let ratio = lse2.ln_sum() + ln_n - 2.0 * lse.ln_sum();
    let se = math::sqrt(math::expm1(ratio).max(0.0) / n);
    (ln_mean, se)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // frozen oracle digits kept in full
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn psi(s: &str) -> YoungFunction {
        YoungFunction::parse(s).unwrap()
    }

    #[test]
    fn clt_oracle_matches_frozen_references() {
        // frozen from an independent high-precision evaluation
        let tm = build_tilted(&psi("pow:1"), 1.0).unwrap();
        let cases = [
            (0.25, 0.0, 100u64, -0.0902904287729620769757699462918),
            (0.5, -1.0, 1000, -0.0428756851472960319019431140883),
            (0.25, 1.0, 10000, 0.0330090225405793040254518097716),
        ];
        for &(ell, alpha, n, expect) in &cases {
            let r = math::expm1(
                clt_exact_ln(&tm, ell, alpha, n).unwrap() - clt_prediction_ln(ell, alpha, n as f64),
            );
            assert_relative_eq!(r, expect, max_relative = 1e-9);
        }
    }

    #[test]
    fn clt_mc_matches_exact_oracle() {
        let tm = build_tilted(&psi("pow:1"), 1.0).unwrap();
        let (ln_mc, se) = clt_mc_ln(&tm, 0.5, 0.0, 100, 11, 2, 200_000).unwrap();
        let ln_exact = clt_exact_ln(&tm, 0.5, 0.0, 100).unwrap();
        assert!(
            (ln_mc - ln_exact).abs() <= 3.0 * se,
            "mc {ln_mc} exact {ln_exact} se {se}"
        );
        // chi-square-style family too (pow:2)
        let tm = build_tilted(&psi("pow:2"), 1.0).unwrap();
        let (ln_mc, se) = clt_mc_ln(&tm, 0.5, 1.0, 64, 13, 2, 200_000).unwrap();
        let ln_exact = clt_exact_ln(&tm, 0.5, 1.0, 64).unwrap();
        assert!((ln_mc - ln_exact).abs() <= 3.0 * se);
    }

    #[test]
    fn clt_experiment_band_and_floor() {
        let tm = build_tilted(&psi("pow:1"), 1.0).unwrap();
        let rep = clt_exp_experiment(&tm, 0.25, 0.0, &[100, 1000, 10000], 0, 1, 0).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.statistics["below_floor_100"], 0.0);
        // all below floor -> hard error
        match clt_exp_experiment(&tm, 0.25, 1.0, &[10, 20], 0, 1, 0) {
            Err(Error::ValidityFloor { floor }) => assert!(floor > 20.0),
            other => panic!("expected ValidityFloor, got {other:?}"),
        }
        // n=100 below the (0.25, ±1) floor is computed and flagged
        let rep = clt_exp_experiment(&tm, 0.25, 1.0, &[100, 1000, 10000], 0, 1, 0).unwrap();
        assert_eq!(rep.statistics["below_floor_100"], 1.0);
        assert!(rep.pass);
    }

    #[test]
    fn clt_deep_tail_consistency() {
        // alpha = -10: both sides are ~e^{-555}; the log-domain oracle must
        // stay consistent with an independent high-precision evaluation
        let tm = build_tilted(&psi("pow:1"), 1.0).unwrap();
        let n = 10_000u64;
        let ln_i = clt_exact_ln(&tm, 0.5, -10.0, n).unwrap();
        let ln_j = clt_prediction_ln(0.5, -10.0, n as f64);
        assert!(ln_i.is_finite() && ln_j.is_finite());
        assert!(ln_i < -500.0 && ln_j < -500.0);
        assert_relative_eq!(ln_i, -558.531585308074256843, max_relative = 1e-12);
        let r = math::expm1(ln_i - ln_j);
        assert_relative_eq!(r, -0.97529189050114, max_relative = 1e-8);
    }

    #[test]
    fn marginal_tv_small_case() {
        // cross-polytope k=1 at moderate n: semi-analytic TV small, empirical
        // lower bound at the same order
        let rep = marginal_tv_experiment(&psi("pow:1"), 1.0, 100, 1, 0.0, 3, 2, 4000).unwrap();
        assert!(rep.pass, "{rep:?}");
        let tv = rep.statistics["tv_semianalytic"];
        assert!(tv > 0.0 && tv < 0.05, "tv = {tv}");
        let emp = rep.statistics["tv_empirical"];
        assert!(emp < 0.15, "emp = {emp}");
    }

    #[test]
    fn marginal_tv_out_of_regime_flagged() {
        let rep = marginal_tv_experiment(&psi("pow:1"), 1.0, 16, 15, 0.0, 3, 1, 0).unwrap();
        assert_eq!(rep.statistics["regime_violation"], 1.0);
        assert!(rep.statistics["tv_semianalytic"].is_finite());
    }

    #[test]
    fn level_interval_exponential_potential() {
        // V = 2|x|: Z = 1, V(X) ~ Exp(1): m1 = sigma1 = 1
        let v = psi("mix:2:pow:1");
        let li = level_interval(&v, 100, 0.2).unwrap();
        assert_relative_eq!(li.m1, 1.0, max_relative = 1e-9);
        assert_relative_eq!(li.sigma1, 1.0, max_relative = 1e-8);
        let half = 0.8 * (200.0f64).sqrt();
        assert_relative_eq!(li.lo, 100.0 - half, max_relative = 1e-7);
        assert_relative_eq!(li.hi, 100.0 + half, max_relative = 1e-7);
    }

    #[test]
    fn level_interval_gaussian_potential() {
        // V = pi x^2: normalized, m1 = 1/2, sigma1^2 = 1/2
        let v = psi(&format!("mix:{}:pow:2", core::f64::consts::PI));
        let li = level_interval(&v, 50, 0.5).unwrap();
        assert_relative_eq!(li.m1, 0.5, max_relative = 1e-9);
        assert_relative_eq!(li.sigma1 * li.sigma1, 0.5, max_relative = 1e-8);
        assert!(li.sigma1 * li.sigma1 <= 1.0 + 1e-9);
    }

    #[test]
    fn level_interval_rejects_unnormalized() {
        match level_interval(&psi("pow:2"), 10, 0.2) {
            Err(Error::NotNormalized { integral, .. }) => {
                assert_relative_eq!(integral, core::f64::consts::PI.sqrt(), max_relative = 1e-9);
            }
            other => panic!("expected NotNormalized, got {other:?}"),
        }
    }

    #[test]
    fn level_membership_margins() {
        let v = psi("mix:2:pow:1");
        let n = 200u32;
        let nf = n as f64;
        // E = n: margin ~ 1
        let (ok, margin) = level_membership(&v, n, nf).unwrap();
        assert!(ok);
        assert!((margin - 1.0).abs() < 0.05, "margin = {margin}");
        // E = n + sqrt(2n): boundary case, margin -> 0 like (2sqrt2/3)/sqrt(n)
        let (_, margin) = level_membership(&v, n, nf + (2.0 * nf).sqrt()).unwrap();
        assert!(
            margin > 0.0 && margin < 1.2 / nf.sqrt(),
            "margin = {margin}"
        );
        let (_, margin800) = level_membership(&v, 800, 800.0 + 40.0).unwrap();
        assert!(margin800 < margin, "boundary margin must shrink with n");
        // E = n + 2 sqrt(2n): decisively out; exact margin n ln(E/n) - (E-n) + 1
        let (ok, margin) = level_membership(&v, n, nf + 2.0 * (2.0 * nf).sqrt()).unwrap();
        assert!(!ok);
        let exact = nf * (1.0 + 2.0 * (2.0 / nf).sqrt()).ln() - 2.0 * (2.0 * nf).sqrt() + 1.0;
        assert_relative_eq!(margin, exact, epsilon = 0.02);
        assert!(margin < -2.0);
    }

    #[test]
    fn nguyen_wang_values() {
        assert_relative_eq!(
            nguyen_wang_check(&psi("mix:2:pow:1")).unwrap(),
            1.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            nguyen_wang_check(&psi(&format!("mix:{}:pow:2", core::f64::consts::PI))).unwrap(),
            0.5,
            max_relative = 1e-8
        );
    }

    #[test]
    fn boundary_exp_small_run() {
        let f = psi("pow:1");
        let tm = build_tilted(&f, 1.0).unwrap();
        let spec = BallSpec::new(f, 50, 50.0).unwrap();
        let rep = boundary_exp_test(&spec, &tm, 0, 2, 10_000).unwrap();
        assert!(rep.statistics["d_min"] >= 0.0);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn psi2_rejects_pow1_and_odd() {
        let f = psi("pow:1");
        let tm = solve_lambda(&f, 0.25).unwrap();
        let spec = BallSpec::new(f, 4, 1.0).unwrap();
        match psi2_laplace_check(&spec, &tm, &default_directions(4), 0, 1, 1000) {
            Err(Error::Psi2Violated { .. }) => {}
            other => panic!("expected Psi2Violated, got {other:?}"),
        }
    }

    #[test]
    fn psi2_chain_holds_small() {
        let f = psi("pow:2");
        let spec = BallSpec::new(f.clone(), 8, 2.0).unwrap();
        let tm = solve_lambda(&f, 0.25).unwrap();
        let dirs = default_directions(8);
        let rep = psi2_laplace_check(&spec, &tm, &dirs, 5, 2, 60_000).unwrap();
        assert!(rep.pass, "{rep:?}");
        // a = 0 edge: L = M = R = 1 exactly
        let zero = alloc::vec![alloc::vec![0.0; 8]];
        let rep = psi2_laplace_check(&spec, &tm, &zero, 5, 1, 2000).unwrap();
        assert_relative_eq!(rep.statistics["dir0_ln_l"], 0.0, epsilon = 1e-12);
        assert_relative_eq!(rep.statistics["dir0_ln_m"], 0.0, epsilon = 1e-12);
        assert_relative_eq!(rep.statistics["dir0_ln_r"], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reports_are_reproducible() {
        let rep1 = marginal_tv_experiment(&psi("pow:1"), 1.0, 64, 1, 0.0, 9, 3, 2000).unwrap();
        let rep2 = marginal_tv_experiment(&psi("pow:1"), 1.0, 64, 1, 0.0, 9, 3, 2000).unwrap();
        assert_eq!(rep1, rep2);
    }
}
