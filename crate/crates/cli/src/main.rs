//! Command-line front end for the Orlicz-ball volume laboratory.
//!
//! Every command prints one machine-readable report to stdout (JSON by
//! default, `--output csv` for tidy columns) and exits with
//!
//! * 0 — success / experiment passed,
//! * 1 — usage or numeric error,
//! * 2 — experiment failure (an assertion recorded in the report is unmet).
//!
//! The ball level can be specified exactly one way per run: `--e` (λ is then
//! solved so that α = 0), `--m` (λ solved for the per-coordinate mean, E = m·n),
//! or `--lambda` with optional `--alpha` (E = m_λ·n + α·σ_λ·√n).

mod output;

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use orlicz_core::lab;
use orlicz_core::sampler;
use orlicz_core::tilt::{self, TiltedMeasure};
use orlicz_core::volume;
use orlicz_core::{BallSpec, YoungFunction};

use output::{batch_to_csv, Report};

#[derive(Parser)]
#[command(
    name = "orlicz",
    about = "High-dimensional Orlicz-ball volumes, samplers and limit-law experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VolumeMethodArg {
    Asymptotic,
    Mc,
    Convolution,
    ClosedForm,
}

#[derive(Args)]
struct CommonArgs {
    /// Potential spec, e.g. pow:2, coshm1, mix:1:pow:4:0.5:pow:1
    #[arg(long)]
    psi: String,
    /// RNG seed (identical (seed, workers) give byte-identical output except duration_ms)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker shards (part of the reproducibility contract)
    #[arg(long, default_value_t = 1)]
    workers: u32,
    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    output: OutputFormat,
}

#[derive(Args)]
struct LevelArgs {
    /// Ball level E (λ is solved so that α = 0)
    #[arg(long)]
    e: Option<f64>,
    /// Per-coordinate mean target m (λ solved, E = m·n)
    #[arg(long)]
    m: Option<f64>,
    /// Explicit tilt λ (E = m_λ·n + α·σ_λ·√n)
    #[arg(long)]
    lambda: Option<f64>,
    /// Standardized level offset α (requires --lambda)
    #[arg(long)]
    alpha: Option<f64>,
}

impl LevelArgs {
    fn resolve(&self, psi: &YoungFunction, n: u32) -> Result<(TiltedMeasure, f64)> {
        let picked = [self.e.is_some(), self.m.is_some(), self.lambda.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if picked != 1 {
            bail!("specify the level exactly one way: --e, --m, or --lambda [--alpha]");
        }
        if self.alpha.is_some() && self.lambda.is_none() {
            bail!("--alpha needs --lambda");
        }
        if let Some(e) = self.e {
            let tm = tilt::solve_lambda(psi, e / n as f64)?;
            return Ok((tm, e));
        }
        if let Some(m) = self.m {
            let tm = tilt::solve_lambda(psi, m)?;
            return Ok((tm, m * n as f64));
        }
        let lambda = self.lambda.unwrap();
        let alpha = self.alpha.unwrap_or(0.0);
        let tm = tilt::build_tilted(psi, lambda)?;
        let e = tm.psi_mean * n as f64 + alpha * tm.sigma() * (n as f64).sqrt();
        if e <= 0.0 {
            bail!("resolved level E = {e} is not positive");
        }
        Ok((tm, e))
    }

    fn echo(&self, report: &mut Report) {
        if let Some(e) = self.e {
            report.param_num("e", e);
        }
        if let Some(m) = self.m {
            report.param_num("m", m);
        }
        if let Some(l) = self.lambda {
            report.param_num("lambda", l);
        }
        if let Some(a) = self.alpha {
            report.param_num("alpha", a);
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Log-volume of B^n_{psi/E} by the chosen method
    Volume {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        level: LevelArgs,
        /// Dimension n
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value_t = VolumeMethodArg::Asymptotic)]
        method: VolumeMethodArg,
        /// Monte Carlo sample count (method = mc)
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Convolution grid step (method = convolution; default E/1000)
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Solve λ so that the tilted mean E Ψ(X) matches a target
    SolveLambda {
        #[command(flatten)]
        common: CommonArgs,
        /// Mean target m
        #[arg(long)]
        m: f64,
    },
    /// Exact uniform samples from the ball
    Sample {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        level: LevelArgs,
        #[arg(long)]
        n: u32,
        /// Number of points
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Boundary-distance law: KS of λ(E − ΣΨ(ξ)) against Exp(1)
    Boundary {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        level: LevelArgs,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Marginal total-variation distance of k coordinates vs the tilted law
    Marginals {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        n: u32,
        /// Number of marginal coordinates
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// Tilt λ
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Level offset α
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        /// Sampler draws for the empirical histogram bound (0 = skip)
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Spectral-gap level interval, variance bound, optional membership
    Level {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        n: u32,
        /// Interval shrink factor ε in (0,1)
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        /// Level to test for membership (optional)
        #[arg(long)]
        e: Option<f64>,
    },
    /// Tilted CLT expectation against its first-order prediction
    Clt {
        #[command(flatten)]
        common: CommonArgs,
        /// Tilt λ
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Exponential slope ℓ > 0
        #[arg(long)]
        ell: f64,
        /// Truncation point α
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        /// Comma-separated dimensions, e.g. 100,1000,10000
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        n_list: Vec<u64>,
        /// Samples for the Monte Carlo fallback (non-power potentials)
        #[arg(long, default_value_t = 200_000)]
        samples: u64,
    },
    /// ψ₂ Laplace-transform chain over a deterministic direction set
    Psi2 {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        level: LevelArgs,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Young audit plus tilted-measure consistency checks (exit 2 on violation)
    Audit {
        #[command(flatten)]
        common: CommonArgs,
        /// Tilt λ for the consistency checks
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // usage errors exit 1 (help/version requests exit 0)
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let started = Instant::now();
    match dispatch(cli.command) {
        Ok((Some(mut report), format)) => {
            report.duration_ms = started.elapsed().as_millis() as u64;
            match format {
                OutputFormat::Json => println!("{}", report.to_json()),
                OutputFormat::Csv => print!("{}", report.to_csv()),
            }
            std::process::exit(if report.pass { 0 } else { 2 });
        }
        Ok((None, _)) => std::process::exit(0),
        Err(err) => {
            eprintln!("orlicz: error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn parse_psi(spec: &str) -> Result<YoungFunction> {
    YoungFunction::parse(spec).with_context(|| format!("invalid --psi {spec:?}"))
}

fn dispatch(command: Command) -> Result<(Option<Report>, OutputFormat)> {
    match command {
        Command::Volume {
            common,
            level,
            n,
            method,
            samples,
            grid_step,
        } => {
            let psi = parse_psi(&common.psi)?;
            eprintln!(
                "orlicz volume: psi={} n={n} seed={}",
                common.psi, common.seed
            );
            let (tm, e) = level.resolve(&psi, n)?;
            let ball = BallSpec::new(psi.clone(), n, e)?;
            let mut report = Report::new("volume", common.seed, common.workers);
            report.param_str("psi", &common.psi);
            report.param_num("n", n as f64);
            level.echo(&mut report);
            let lv = match method {
                VolumeMethodArg::Asymptotic => volume::log_volume_asymptotic(&ball, &tm),
                VolumeMethodArg::Mc => {
                    volume::log_volume_mc_seeded(&ball, &tm, common.seed, common.workers, samples)?
                }
                VolumeMethodArg::Convolution => {
                    let step = grid_step.unwrap_or(e / 1000.0);
                    volume::log_volume_convolution(&ball, step)?
                }
                VolumeMethodArg::ClosedForm => {
                    let p = psi.pow_exponent().ok_or_else(|| {
                        anyhow!("--method closed-form needs a pure pow:<p> potential")
                    })?;
                    volume::LogVolume {
                        log_value: volume::log_volume_closed_form(p, n, e),
                        method: volume::Method::ClosedForm,
                        diagnostics: volume::Diagnostics::default(),
                    }
                }
            };
            report.param_str("method", lv.method.as_str());
            report.stat("log_volume", lv.log_value);
            if lv.log_value.abs() < 700.0 {
                report.stat("volume", lv.log_value.exp());
            }
            report.stat("level", e);
            report.stat("lambda", tm.lambda);
            report.stat("alpha", ball.alpha(&tm));
            let d = lv.diagnostics;
            if let Some(v) = d.correction_order {
                report.stat("correction_order", v);
            }
            if let Some(v) = d.std_error {
                report.stat("std_error", v);
            }
            if let Some(v) = d.grid_step {
                report.stat("grid_step", v);
            }
            if let Some(v) = d.refine_delta {
                report.stat("refine_delta", v);
            }
            Ok((Some(report), common.output))
        }

        Command::SolveLambda { common, m } => {
            let psi = parse_psi(&common.psi)?;
            eprintln!("orlicz solve-lambda: psi={} m={m}", common.psi);
            let tm = tilt::solve_lambda(&psi, m)?;
            let mut report = Report::new("solve-lambda", common.seed, common.workers);
            report.param_str("psi", &common.psi);
            report.param_num("m", m);
            report.stat("lambda", tm.lambda);
            report.stat("log_partition", tm.log_partition);
            report.stat("psi_mean", tm.psi_mean);
            report.stat("psi_var", tm.psi_var);
            report.stat("third_abs_moment", tm.third_abs_moment);
            Ok((Some(report), common.output))
        }

        Command::Sample {
            common,
            level,
            n,
            count,
        } => {
            let psi = parse_psi(&common.psi)?;
            eprintln!(
                "orlicz sample: psi={} n={n} count={count} seed={} workers={}",
                common.psi, common.seed, common.workers
            );
            let (tm, e) = level.resolve(&psi, n)?;
            let ball = BallSpec::new(psi.clone(), n, e)?;
            let batch = sampler::sample_uniform_ball_seeded(
                &ball,
                &tm,
                common.seed,
                common.workers,
                count,
            )?;
            if common.output == OutputFormat::Csv {
                print!("{}", batch_to_csv(&batch));
                return Ok((None, common.output));
            }
            let mut report = Report::new("sample", common.seed, common.workers);
            report.param_str("psi", &common.psi);
            report.param_num("n", n as f64);
            report.param_num("count", count as f64);
            level.echo(&mut report);
            report.stat("level", e);
            report.stat("lambda", tm.lambda);
            report.stat("acceptance_rate", batch.acceptance_rate);
            report.stat("proposals_used", batch.proposals_used as f64);
            report.stat(
                "predicted_acceptance",
                sampler::predict_acceptance(&ball, &tm),
            );
            Ok((Some(report), common.output))
        }

        Command::Boundary {
            common,
            level,
            n,
            samples,
        } => {
            let psi = parse_psi(&common.psi)?;
            eprintln!(
                "orlicz boundary: psi={} n={n} samples={samples} seed={}",
                common.psi, common.seed
            );
            let (tm, e) = level.resolve(&psi, n)?;
            let ball = BallSpec::new(psi.clone(), n, e)?;
            let rep = lab::boundary_exp_test(&ball, &tm, common.seed, common.workers, samples)?;
            let mut report = Report::new("boundary", common.seed, common.workers);
            report.param_str("psi", &common.psi);
            report.param_num("n", n as f64);
            report.param_num("samples", samples as f64);
            level.echo(&mut report);
            report.absorb(&rep);
            Ok((Some(report), common.output))
        }

        Command::Marginals {
            common,
            n,
            k,
            lambda,
            alpha,
            samples,
        } => {
            let psi = parse_psi(&common.psi)?;
            eprintln!(
                "orlicz marginals: psi={} n={n} k={k} lambda={lambda} seed={}",
                common.psi, common.seed
            );
            let rep = lab::marginal_tv_experiment(
                &psi,
                lambda,
                n,
                k,
                alpha,
                common.seed,
                common.workers,
                samples,
            )?;
            let mut report = Report::new("marginals", common.seed, common.workers);
            report.param_str("psi", &common.psi);
            report.param_num("n", n as f64);
            report.param_num("k", k as f64);
            report.param_num("lambda", lambda);
            report.param_num("alpha", alpha);
            report.param_num("samples", samples as f64);
            report.absorb(&rep);
            Ok((Some(report), common.output))
        }

        Command::Level { common, n, eps, e } => {
            let psi = parse_psi(&common.psi)?;
            eprintln!("orlicz level: psi={} n={n} eps={eps}", common.psi);
            let li = lab::level_interval(&psi, n, eps)?;
            let s2 = lab::nguyen_wang_check(&psi)?;
            let mut report = Report::new("level", common.seed, common.workers);
            report.param_str("psi", &common.psi);
            report.param_num("n", n as f64);
            report.param_num("eps", eps);
            report.stat("m1", li.m1);
            report.stat("sigma1", li.sigma1);
            report.stat("sigma1_sq", s2);
            report.stat("lo", li.lo);
            report.stat("hi", li.hi);
            if let Some(e) = e {
                report.param_num("e", e);
                let (member, margin) = lab::level_membership(&psi, n, e)?;
                report.stat("member", f64::from(member));
                report.stat("log_margin", margin);
            }
            Ok((Some(report), common.output))
        }

        Command::Clt {
            common,
            lambda,
            ell,
            alpha,
            n_list,
            samples,
        } => {
            let psi = parse_psi(&common.psi)?;
            eprintln!(
                "orlicz clt: psi={} lambda={lambda} ell={ell} alpha={alpha} seed={}",
                common.psi, common.seed
            );
            let tm = tilt::build_tilted(&psi, lambda)?;
            let rep = lab::clt_exp_experiment(
                &tm,
                ell,
                alpha,
                &n_list,
                common.seed,
                common.workers,
                samples,
            )?;
            let mut report = Report::new("clt", common.seed, common.workers);
            report.param_str("psi", &common.psi);
            report.param_num("lambda", lambda);
            report.param_num("ell", ell);
            report.param_num("alpha", alpha);
            report.param_str(
                "n_list",
                &n_list
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            report.absorb(&rep);
            Ok((Some(report), common.output))
        }

        Command::Psi2 {
            common,
            level,
            n,
            samples,
        } => {
            let psi = parse_psi(&common.psi)?;
            eprintln!(
                "orlicz psi2: psi={} n={n} samples={samples} seed={}",
                common.psi, common.seed
            );
            let (tm, e) = level.resolve(&psi, n)?;
            let ball = BallSpec::new(psi.clone(), n, e)?;
            let dirs = lab::default_directions(n);
            let rep =
                lab::psi2_laplace_check(&ball, &tm, &dirs, common.seed, common.workers, samples)?;
            let mut report = Report::new("psi2", common.seed, common.workers);
            report.param_str("psi", &common.psi);
            report.param_num("n", n as f64);
            report.param_num("samples", samples as f64);
            level.echo(&mut report);
            report.stat("directions", dirs.len() as f64);
            report.absorb(&rep);
            Ok((Some(report), common.output))
        }

        Command::Audit { common, lambda } => {
            eprintln!("orlicz audit: psi={} lambda={lambda}", common.psi);
            let mut report = Report::new("audit", common.seed, common.workers);
            report.param_str("psi", &common.psi);
            report.param_num("lambda", lambda);
            let mut checks: BTreeMap<&str, bool> = BTreeMap::new();

            // grammar errors are usage errors; audit violations are findings
            let psi = match YoungFunction::parse(&common.psi) {
                Ok(psi) => {
                    checks.insert("young_audit", true);
                    Some(psi)
                }
                Err(orlicz_core::Error::NotYoung { reason, witness }) => {
                    eprintln!("orlicz audit: not a Young function: {reason} (witness {witness})");
                    checks.insert("young_audit", false);
                    None
                }
                Err(err) => return Err(err.into()),
            };
            if let Some(psi) = psi {
                match tilt::build_tilted(&psi, lambda) {
                    Ok(tm) => {
                        checks.insert("tilt_var_positive", tm.psi_var > 0.0);
                        checks.insert("tilt_nu3_bound", tm.third_abs_moment >= 1.0 - 1e-12);
                        let (t_nodes, f_nodes) = tm.cdf_nodes();
                        let monotone = t_nodes.windows(2).all(|w| w[1] > w[0])
                            && f_nodes.windows(2).all(|w| w[1] > w[0]);
                        let endpoints = f_nodes[0].abs() <= 1e-10
                            && (f_nodes[f_nodes.len() - 1] - 1.0).abs() <= 1e-10;
                        checks.insert("cdf_monotone", monotone);
                        checks.insert("cdf_endpoints", endpoints);
                        let tight = tilt::build_tilted_with(&psi, lambda, 1e-13)?;
                        checks.insert(
                            "quadrature_consistent",
                            (tight.psi_mean - tm.psi_mean).abs() <= 1e-9 * (1.0 + tm.psi_mean),
                        );
                        let back = tilt::solve_lambda(&psi, tm.psi_mean)?;
                        checks.insert(
                            "solve_round_trip",
                            (back.lambda - lambda).abs() <= 1e-7 * lambda,
                        );
                        report.stat("psi_mean", tm.psi_mean);
                        report.stat("psi_var", tm.psi_var);
                        report.stat("third_abs_moment", tm.third_abs_moment);
                    }
                    Err(err) => {
                        eprintln!("orlicz audit: tilted build failed: {err}");
                        checks.insert("tilt_build", false);
                    }
                }
            }
            let mut pass = true;
            for (name, ok) in checks {
                report.stat(&format!("check_{name}"), f64::from(ok));
                pass &= ok;
            }
            report.pass = pass;
            Ok((Some(report), common.output))
        }
    }
}
