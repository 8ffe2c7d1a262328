use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use telewalk_core::calibration::{
    calibrate, compare_user, default_grid, fit_params, runner_registry, scheme, CalibrationConfig, ObservedData,
    RunnerConfig, SyntheticQueue,
};
use telewalk_core::crowd::GateChoiceParams;
use telewalk_service::config::load_session_inputs;
use telewalk_service::headless::{run_scripted, HeadlessOptions};
use telewalk_service::log::write_json;
use telewalk_service::participant::ParticipantConfig;
use telewalk_service::replay::replay;
use telewalk_service::{server, svg, trial};

#[derive(Parser)]
#[command(name = "telewalk", version, about = "Walking telepresence workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve interactive sessions over TCP (newline-delimited JSON).
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// directory receiving one log directory per session
        #[arg(long, default_value = "sessions")]
        out: PathBuf,
    },
    /// Headless crowd trial, or a scripted-participant session with --scripted.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        peds: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// walker policy as key=value pairs: goal=x,y speed=v start=x,y,heading noise=off
        #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
        scripted: Option<Vec<String>>,
        /// cap on tracker samples in a scripted session
        #[arg(long, default_value_t = 3000)]
        max_samples: usize,
        /// keep streaming until --max-samples even after the goal is reached
        #[arg(long)]
        keep_walking: bool,
    },
    /// Calibrate anticipated gate costs and optionally fit (λ, γ).
    Calibrate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        observed: Option<PathBuf>,
        #[arg(long, default_value = "msa")]
        scheme: String,
        #[arg(long, default_value_t = 0.5)]
        w: f64,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        #[arg(long, default_value_t = 0.5)]
        tol: f64,
        /// `default`, `none`, or a list like `0.5:1,1:1`
        #[arg(long, default_value = "none")]
        grid: String,
        /// `crowd` or `synthetic`
        #[arg(long, default_value = "crowd")]
        runner: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a log and check that it reproduces bit for bit.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Render a log directory to SVG.
    ExportSvg {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_scripted(pairs: &[String], mut p: ParticipantConfig) -> anyhow::Result<ParticipantConfig> {
    let numbers = |v: &str| -> anyhow::Result<Vec<f64>> {
        v.split(',')
            .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number {x:?}")))
            .collect()
    };
    for pair in pairs {
        let Some((key, value)) = pair.split_once('=') else {
            bail!("expected key=value, got {pair:?}");
        };
        match (key, numbers(value).ok().as_deref()) {
            ("goal", Some(&[x, y])) => p.goal = [x, y],
            ("speed", Some(&[v])) => p.speed = v,
            ("start", Some(&[x, y, h])) => p.start = telewalk_core::Pose::new(x, y, h),
            ("seed", Some(&[s])) if s >= 0.0 && s.fract() == 0.0 => p.seed = s as u64,
            ("noise", _) if value == "off" => {
                p.heading_noise = 0.0;
                p.speed_noise = 0.0;
            }
            _ => bail!("cannot use scripted option {pair:?}"),
        }
    }
    Ok(p)
}

fn parse_grid(arg: &str, base: GateChoiceParams) -> anyhow::Result<Vec<GateChoiceParams>> {
    Ok(match arg {
        "default" => default_grid(),
        "none" => vec![base],
        list => list
            .split(',')
            .map(|item| {
                let (l, g) = item.split_once(':').with_context(|| format!("grid point {item:?} is not λ:γ"))?;
                Ok(GateChoiceParams {
                    lambda: l.parse()?,
                    gamma: g.parse()?,
                })
            })
            .collect::<anyhow::Result<_>>()?,
    })
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Serve {
            port,
            host,
            scenario,
            config,
            out,
        } => {
            let (scenario, config) = load_session_inputs(&scenario, config.as_deref())?;
            let addr: SocketAddr = format!("{host}:{port}").parse()?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let mut handle = server::start(addr, scenario, config, out).await?;
                tracing::info!(addr = %handle.addr, "listening");
                println!("{}", serde_json::json!({ "listening": handle.addr.to_string() }));
                loop {
                    tokio::select! {
                        done = handle.next_session() => match done {
                            Some(s) => print_json(&serde_json::json!({ "session": s.dir, "summary": s.summary }))?,
                            None => break,
                        },
                        _ = tokio::signal::ctrl_c() => break,
                    }
                }
                handle.shutdown();
                anyhow::Ok(())
            })
        }
        Command::Run {
            scenario,
            config,
            peds,
            seed,
            out,
            scripted,
            max_samples,
            keep_walking,
        } => {
            let (mut scenario, mut config) = load_session_inputs(&scenario, config.as_deref())?;
            if let Some(n) = peds {
                scenario.spawn_count = n;
            }
            match scripted {
                Some(pairs) => {
                    config.crowd_seed = seed;
                    let participant = parse_scripted(&pairs, ParticipantConfig { seed, ..Default::default() })?;
                    let outcome = run_scripted(
                        scenario,
                        config,
                        participant,
                        HeadlessOptions {
                            max_samples,
                            stop_when_done: !keep_walking,
                        },
                        &out,
                    )?;
                    print_json(&serde_json::json!({
                        "log": outcome.dir,
                        "samples": outcome.samples,
                        "arrived": outcome.arrived,
                        "summary": outcome.summary,
                    }))
                }
                None => {
                    let metrics = trial::run_trial_dir(&scenario, seed, &out)?;
                    print_json(&serde_json::json!({
                        "log": out,
                        "gate_counts": metrics.gate_counts,
                        "duration": metrics.duration,
                        "incomplete": metrics.incomplete,
                    }))
                }
            }
        }
        Command::Calibrate {
            scenario,
            observed,
            scheme: scheme_name,
            w,
            max_iter,
            tol,
            grid,
            runner,
            seed,
            out,
        } => {
            let scenario = telewalk_core::crowd::Scenario::load(&scenario)?;
            let base = scenario.gate_choice;
            let runner = runner_registry().create(
                &runner,
                &RunnerConfig {
                    scenario,
                    synthetic: SyntheticQueue::four_gate(),
                },
            )?;
            let scheme = scheme(&scheme_name, w)?;
            let config = CalibrationConfig { max_iter, tol, seed };
            std::fs::create_dir_all(&out)?;

            let report = calibrate(runner.as_ref(), &base, scheme.as_ref(), &config)?;
            let mut table = csv::Writer::from_path(out.join("iterations.csv"))?;
            table.write_record(["iteration", "gate", "cost", "measured", "share", "residual"])?;
            for (i, rec) in report.state.history.iter().enumerate() {
                println!(
                    "iter {:>3}  residual {:>9.4}  costs [{}]",
                    i + 1,
                    rec.residual,
                    rec.costs.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>().join(", ")
                );
                for g in 0..rec.costs.len() {
                    table.write_record([
                        (i + 1).to_string(),
                        g.to_string(),
                        rec.costs[g].to_string(),
                        rec.measured[g].to_string(),
                        rec.distribution[g].to_string(),
                        rec.residual.to_string(),
                    ])?;
                }
            }
            table.flush()?;
            write_json(&out.join("calibration.json"), &report.state)?;
            write_json(&out.join("trial.json"), &report.last_trial)?;

            if let Some(path) = observed {
                let observed = ObservedData::load(&path)?;
                let ids = runner.gate_ids();
                let deviation = compare_user(&observed, &report.last_trial, &ids)?;
                write_json(&out.join("deviation.json"), &deviation)?;
                let points = parse_grid(&grid, base)?;
                if grid != "none" {
                    let fit = fit_params(runner.as_ref(), &observed, &points, scheme.as_ref(), &config)?;
                    let mut rows = csv::Writer::from_path(out.join("grid.csv"))?;
                    for row in &fit.table {
                        rows.serialize(row)?;
                    }
                    rows.flush()?;
                    write_json(&out.join("fit.json"), &fit)?;
                    println!("best lambda {} gamma {} tv {:.4}", fit.best.lambda, fit.best.gamma, fit.best_tv);
                }
                println!("tv distance at base params {:.4}", deviation.tv_distance);
            }
            println!(
                "{} after {} iterations",
                if report.state.converged { "converged" } else { "not converged" },
                report.state.history.len()
            );
            Ok(())
        }
        Command::Replay { log } => {
            let report = replay(&log)?;
            print_json(&report)?;
            if !report.passed() {
                bail!("replay diverged from the log ({} mismatches)", report.mismatches);
            }
            Ok(())
        }
        Command::ExportSvg { log, out } => svg::export_svg(Path::new(&log), &out),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", serde_json::json!({ "error": first, "kind": "usage" }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}
