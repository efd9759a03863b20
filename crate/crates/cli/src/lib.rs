//! Command-line driver: loads a run configuration, dispatches one subcommand
//! and writes a manifest followed by CSV and JSON results.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dualrail_core::channel::{build_budget, standard_budget, ErrorChannelParams};
use dualrail_core::config::is_param_key;
use dualrail_core::dispersive::*;
use dualrail_core::experiments::{continuous_drive, run, snr_vs_window, ContinuousMode, Estimate, ExperimentConfig, ExperimentKind};
use dualrail_core::trajectory::DEFAULT_DT;
use dualrail_core::{to_hz, SystemParams};
use serde::Serialize;

use config::{parse_list, RunConfig};
use output::{num, Output, RunManifest};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "DUALRAIL_OUT";

#[derive(Debug, Parser)]
#[command(name = "dualrail", version, about = "Erasure-check simulation and benchmarking for dual-rail transmon qubits")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Base seed; overrides the `seed` config key.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shots per point; overrides the `shots_per_point` config key.
    #[arg(long, global = true)]
    pub shots: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV, default_value = "dualrail-out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state readout physics and the optimal probe detuning.
    Dispersive {
        /// Target SNR for the dephasing-error figures.
        #[arg(long, default_value_t = 11.6)]
        snr: f64,
        /// Tabulate the dephasing error over detunings in [-10κ, 10κ].
        #[arg(long)]
        sweep_detuning: bool,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Empirical SNR against integration window length.
    Snr {
        /// Window lengths in seconds, comma separated.
        #[arg(long, default_value = "60e-9,120e-9,180e-9,240e-9,300e-9,360e-9,420e-9,480e-9")]
        windows: String,
        /// Set the drive so the longest window reaches this SNR.
        #[arg(long)]
        target_snr: Option<f64>,
    },
    /// Interleaved RB of the erasure check.
    Ilrb,
    /// Induced bit-flip and dephasing ladders.
    Induced,
    /// RB with continuous erasure detection.
    Continuous {
        /// Use this many discrete checks instead of continuous windows.
        #[arg(long)]
        discrete: Option<usize>,
        /// Set the drive so one window reaches this SNR.
        #[arg(long)]
        target_snr: Option<f64>,
    },
    /// Erasure lifetime with the probe off and on.
    Terasure,
    /// Residual and erasure error against circular classifier radius.
    Leaksweep {
        /// Radii in logical standard deviations, comma separated (`inf` allowed).
        #[arg(long)]
        radii: Option<String>,
    },
    /// Residual error budget of one check.
    Budget {
        /// Check duration in seconds.
        #[arg(long, default_value_t = 496e-9)]
        t_check: f64,
        #[arg(long, default_value_t = 2.8e-4)]
        p1: f64,
        #[arg(long, default_value_t = 8e-5)]
        p_phi: f64,
        /// Measured residual error per check for comparison.
        #[arg(long, default_value_t = 6.0e-4)]
        measured: f64,
    },
    /// Repeat an analysis over values of one parameter key.
    Sweep {
        /// Parameter key, as in the config file.
        #[arg(long)]
        key: String,
        /// Values in file units, comma separated.
        #[arg(long)]
        values: String,
        #[arg(long, value_enum, default_value_t = SweepTarget::Dispersive)]
        target: SweepTarget,
        /// SNR for the dispersive target.
        #[arg(long, default_value_t = 11.6)]
        snr: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SweepTarget {
    Dispersive,
    Ilrb,
    Induced,
    Continuous,
    Terasure,
    Leaksweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Dispersive { .. } => "dispersive",
            Command::Snr { .. } => "snr",
            Command::Ilrb => "ilrb",
            Command::Induced => "induced",
            Command::Continuous { .. } => "continuous",
            Command::Terasure => "terasure",
            Command::Leaksweep { .. } => "leaksweep",
            Command::Budget { .. } => "budget",
            Command::Sweep { .. } => "sweep",
        }
    }
}

/// Loads the configuration, writes the manifest and runs the command.
pub fn execute(cli: &Cli) -> Result<()> {
    let rc = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::device(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => rc.u64("seed")?.unwrap_or(0),
    };
    let out = Output::create(&cli.out)?;
    out.json("manifest.json", &RunManifest::new(cli.command.name(), cli.config.as_deref(), seed, &cli.out))?;
    let ctx = Ctx { rc, seed, shots: cli.shots, out };
    match cli.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| ctx.run(&cli.command)),
        None => ctx.run(&cli.command),
    }
}

struct Ctx {
    rc: RunConfig,
    seed: u64,
    shots: Option<usize>,
    out: Output,
}

#[derive(Serialize)]
struct DispersiveSummary {
    snr: f64,
    n_dr: f64,
    n_gg: f64,
    photon_ratio: f64,
    measurement_rate_per_s: f64,
    dephasing_rate_per_s: f64,
    induced_dephasing_error: f64,
    min_dephasing_error: f64,
    optimal_detuning_hz: f64,
    asymptotic_dephasing_error: f64,
    grid_minimum: Option<GridMinimum>,
}

#[derive(Serialize)]
struct GridMinimum {
    detuning_hz: f64,
    dephasing_error: f64,
}

/// Experiment settings from the config with command-line overrides applied.
fn experiment_config(rc: &RunConfig, kind: ExperimentKind, params: SystemParams, seed: u64, shots: Option<usize>) -> Result<ExperimentConfig> {
    let mut cfg = rc.experiment(kind)?;
    cfg.params = params;
    cfg.seed = seed;
    if let Some(n) = shots {
        cfg.shots_per_point = n;
    }
    Ok(cfg)
}

impl Ctx {
    fn run(&self, cmd: &Command) -> Result<()> {
        match cmd {
            Command::Dispersive { snr, sweep_detuning, points } => self.dispersive(*snr, *sweep_detuning, *points),
            Command::Snr { windows, target_snr } => self.snr(windows, *target_snr),
            Command::Ilrb => self.experiment("ilrb", ExperimentKind::Ilrb, self.rc.params, |_| Ok(())),
            // One run measures both the bit-flip and the echo ladder.
            Command::Induced => self.experiment("induced", ExperimentKind::InducedDephasing, self.rc.params, |_| Ok(())),
            Command::Continuous { discrete, target_snr } => {
                let mut p = self.rc.params;
                let window = self.rc.f64("window")?.unwrap_or(480e-9);
                if let Some(s) = target_snr {
                    p.drive_amp = continuous_drive(&p, window, *s)?;
                }
                self.experiment("continuous", ExperimentKind::ContinuousRb, p, |cfg| {
                    if let Some(n) = discrete {
                        cfg.continuous_mode = ContinuousMode::Discrete(*n);
                    }
                    Ok(())
                })
            }
            Command::Terasure => self.experiment("terasure", ExperimentKind::TErasureCompare, self.rc.params, |_| Ok(())),
            Command::Leaksweep { radii } => {
                if self.rc.params.mist_prob_per_check == 0.0 {
                    bail!("config key `mist_prob_per_check`: the leakage sweep needs a nonzero leakage probability");
                }
                self.experiment("leaksweep", ExperimentKind::LeakSweep, self.rc.params, |cfg| {
                    if let Some(r) = radii {
                        cfg.radii = parse_list(r).context("--radii")?;
                    }
                    Ok(())
                })
            }
            Command::Budget { t_check, p1, p_phi, measured } => self.budget(*t_check, *p1, *p_phi, *measured),
            Command::Sweep { key, values, target, snr } => self.sweep(key, values, *target, *snr),
        }
    }

    fn experiment(
        &self,
        stem: &str,
        kind: ExperimentKind,
        params: SystemParams,
        adjust: impl FnOnce(&mut ExperimentConfig) -> Result<()>,
    ) -> Result<()> {
        let mut cfg = experiment_config(&self.rc, kind, params, self.seed, self.shots)?;
        adjust(&mut cfg)?;
        let res = run(&cfg)?;
        for (name, e) in &res.derived {
            println!("{name:<36} {:>12.4e} ± {:.2e}", e.value, e.sigma);
        }
        for w in &res.warnings {
            eprintln!("warning: {w}");
        }
        self.out.experiment(stem, &res)?;
        Ok(())
    }

    fn dispersive(&self, snr: f64, sweep: bool, points: usize) -> Result<()> {
        let p = &self.rc.params;
        let s = steady_states(p);
        let min = min_dephasing_error(snr, p)?;
        let mut summary = DispersiveSummary {
            snr,
            n_dr: s.n_dr,
            n_gg: s.n_gg,
            photon_ratio: photon_ratio(p),
            measurement_rate_per_s: measurement_rate(p),
            dephasing_rate_per_s: dephasing_rate(p),
            induced_dephasing_error: induced_dephasing_error(snr, p)?,
            min_dephasing_error: min.value,
            optimal_detuning_hz: to_hz(min.optimal_detuning),
            asymptotic_dephasing_error: min.asymptotic,
            grid_minimum: None,
        };
        if sweep {
            if points < 2 {
                bail!("--points must be at least 2");
            }
            let k = p.kappa_gg;
            let rows: Vec<(f64, f64, f64)> = (0..points)
                .map(|i| {
                    let d = -10.0 * k + 20.0 * k * i as f64 / (points - 1) as f64;
                    let q = SystemParams { drive_detuning: d, ..*p };
                    Ok((d, photon_ratio(&q), induced_dephasing_error(snr, &q)?))
                })
                .collect::<Result<_>>()?;
            let best = rows.iter().min_by(|a, b| a.2.total_cmp(&b.2)).expect("at least two points");
            summary.grid_minimum = Some(GridMinimum { detuning_hz: to_hz(best.0), dephasing_error: best.2 });
            self.out.csv(
                "detuning_sweep.csv",
                &["detuning_hz", "photon_ratio", "dephasing_error"],
                rows.iter().map(|(d, r, e)| vec![num(to_hz(*d)), num(*r), num(*e)]),
            )?;
        }
        println!("photon numbers: n_dr = {:.4}, n_gg = {:.4} (ratio {:.4e})", summary.n_dr, summary.n_gg, summary.photon_ratio);
        println!("measurement rate {:.4e} /s, dephasing rate {:.4e} /s", summary.measurement_rate_per_s, summary.dephasing_rate_per_s);
        println!("dephasing error at SNR {snr}: {:.4e} here, {:.4e} at the optimal detuning {:.4e} Hz", summary.induced_dephasing_error, summary.min_dephasing_error, summary.optimal_detuning_hz);
        self.out.json("dispersive_summary.json", &summary)?;
        Ok(())
    }

    fn snr(&self, windows: &str, target: Option<f64>) -> Result<()> {
        let windows: Vec<f64> = parse_list(windows).context("--windows")?;
        if windows.is_empty() || windows.iter().any(|w| !(*w > 0.0)) {
            bail!("--windows must be positive lengths");
        }
        let mut p = self.rc.params;
        if let Some(s) = target {
            p.drive_amp = continuous_drive(&p, windows.iter().copied().fold(0.0, f64::max), s)?;
        }
        let records = self.shots.or(self.rc.usize("shots_per_point")?).unwrap_or(4000);
        let c = snr_vs_window(&p, &windows, records, DEFAULT_DT, self.seed)?;
        // Least-squares slope through the origin and R² of a free linear fit.
        let n = c.x.len() as f64;
        let slope = c.x.iter().zip(&c.y).map(|(x, y)| x * y).sum::<f64>() / c.x.iter().map(|x| x * x).sum::<f64>();
        let (mx, my) = (c.x.iter().sum::<f64>() / n, c.y.iter().sum::<f64>() / n);
        let sxy: f64 = c.x.iter().zip(&c.y).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = c.x.iter().map(|x| (x - mx).powi(2)).sum();
        let syy: f64 = c.y.iter().map(|y| (y - my).powi(2)).sum();
        let r2 = if c.x.len() > 1 { sxy * sxy / (sxx * syy) } else { f64::NAN };
        let mut rows = vec![];
        for i in 0..c.x.len() {
            let eps = separation_error(c.y[i].max(0.0))?;
            println!("window {:.3e} s  SNR {:>8.3} ± {:.3}  separation error {eps:.3e}", c.x[i], c.y[i], c.yerr[i]);
            rows.push(vec![num(c.x[i]), num(c.y[i]), num(c.yerr[i]), num(eps)]);
        }
        println!("SNR per second {slope:.4e}, R² {r2:.6}");
        self.out.csv("snr_vs_window.csv", &["window_s", "snr", "snr_sigma", "separation_error"], rows)?;
        let mut derived = BTreeMap::new();
        derived.insert("snr_per_second", slope);
        derived.insert("r_squared", r2);
        derived.insert("drive_amp_hz", to_hz(p.drive_amp));
        self.out.json("snr_summary.json", &derived)?;
        Ok(())
    }

    fn budget(&self, t_check: f64, p1: f64, p_phi: f64, measured: f64) -> Result<()> {
        let p = &self.rc.params;
        let ch = ErrorChannelParams::new(p1, p_phi)?;
        let b = build_budget(standard_budget(t_check, p.t1_logical, p.t_phi_logical, p.x90_error, &ch), Some(measured))?;
        print!("{}", b.render());
        self.out.csv(
            "budget.csv",
            &["contribution", "expression", "error"],
            b.entries.iter().map(|e| vec![e.label.clone(), e.expression.clone(), num(e.probability)]),
        )?;
        self.out.json("budget_summary.json", &b)?;
        Ok(())
    }

    fn sweep(&self, key: &str, values: &str, target: SweepTarget, snr: f64) -> Result<()> {
        if !is_param_key(key) {
            bail!("sweep key `{key}`: not a parameter key");
        }
        let values: Vec<f64> = parse_list(values).context("--values")?;
        let mut rows = vec![];
        for v in values {
            let mut map = self.rc.map.clone();
            map.insert(key.to_string(), v.to_string());
            let text = dualrail_core::config::render_kv(&map);
            let rc = RunConfig::from_text(&text).with_context(|| format!("sweep value {v}"))?;
            let derived: BTreeMap<String, Estimate> = match target {
                SweepTarget::Dispersive => {
                    let p = &rc.params;
                    let exact = |x: f64| Estimate::new(x, 0.0);
                    [
                        ("photon_ratio", exact(photon_ratio(p))),
                        ("measurement_rate_per_s", exact(measurement_rate(p))),
                        ("dephasing_rate_per_s", exact(dephasing_rate(p))),
                        ("induced_dephasing_error", exact(induced_dephasing_error(snr, p)?)),
                        ("min_dephasing_error", exact(min_dephasing_error(snr, p)?.value)),
                    ]
                    .into_iter()
                    .map(|(k, e)| (k.to_string(), e))
                    .collect()
                }
                _ => {
                    let kind = match target {
                        SweepTarget::Ilrb => ExperimentKind::Ilrb,
                        SweepTarget::Induced => ExperimentKind::InducedDephasing,
                        SweepTarget::Continuous => ExperimentKind::ContinuousRb,
                        SweepTarget::Terasure => ExperimentKind::TErasureCompare,
                        _ => ExperimentKind::LeakSweep,
                    };
                    run(&experiment_config(&rc, kind, rc.params, self.seed, self.shots)?)?.derived
                }
            };
            for (name, e) in derived {
                println!("{key} = {v}: {name} = {:.4e} ± {:.2e}", e.value, e.sigma);
                rows.push(vec![num(v), name, num(e.value), num(e.sigma)]);
            }
        }
        self.out.csv("sweep.csv", &[key, "quantity", "value", "sigma"], rows)?;
        Ok(())
    }
}
