use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use aeromap_core::config::load_fuzzy;
use aeromap_core::fuzzy::{
    ablation, classify, crisp_classify, robustness_experiment, CrispThresholds, ExperimentResult, FuzzyConfig,
    IaqClass, InputVar,
};
use aeromap_core::mapper::{evaluate_map, locate_gas_peaks, parse_xy, ErrorReport, WallModel};
use aeromap_core::sim::{HomeOutcome, NoiseConfig, Progress, SeededMission, Species};
use aeromap_core::units::quantize;
use aeromap_core::{seeded_rng, MissionLog, Point, Pose, SimConfig};
use aeromap_telemetry::wire::{ClassificationReport, MapBatch, Status, MAP_BATCH};
use aeromap_telemetry::{decode_frame, encode_frame, EngineOptions, Frame, Payload, RobotState, ServeConfig};
use serde::Serialize;

use crate::error::CliError;
use crate::{Channel, Cli, Cmd, InputFormat, Toggle};

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    };
    match cli.command {
        Cmd::Simulate { seed, noise, out } => simulate(&cfg, seed, noise, out),
        Cmd::ExtractWalls { input, format, truth, out, report } => extract(&cfg, &input, format, truth, out, report),
        Cmd::Classify { input, fuzzy, out } => classify_log(&cfg, &input, fuzzy, out),
        Cmd::Experiment { trials, seed, noise, only_channel, json } => {
            experiment(&cfg, trials, seed, noise, only_channel, json)
        }
        Cmd::Report { seeds, first_seed, noise, json } => report(&cfg, first_seed, seeds, noise, json),
        Cmd::Serve { addr, watchdog_ms, steps_per_tick, seed, noise } => {
            serve(cfg, addr, watchdog_ms, steps_per_tick, seed, noise)
        }
        Cmd::Replay { input, out } => replay(&cfg, &input, out),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Writes `text` to `path`, or to stdout.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let res = match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.write_all(b"\n"))
        }
    };
    res.map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn load_log(path: &Path) -> Result<MissionLog, CliError> {
    MissionLog::from_json(&read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Runs the sweep and the return to dock.
pub fn run_mission(cfg: &SimConfig, seed: u64, noise: bool) -> Result<(MissionLog, HomeOutcome), CliError> {
    let mut m = SeededMission::seeded(cfg.world.clone(), cfg.plan, noise, seed)?;
    m.start();
    let mut home = None;
    loop {
        match m.advance()? {
            Progress::Homed(h) => home = Some(h),
            Progress::Finished => break,
            _ => {}
        }
    }
    let home = home.expect("a finished mission has homed");
    Ok((m.into_log(), home))
}

/// Peaks per species, as many as the world has sources of it.
fn gas_estimates(cfg: &SimConfig, log: &MissionLog) -> (Vec<Point>, Vec<Point>) {
    let mut truth = Vec::new();
    let mut est = Vec::new();
    for species in Species::ALL {
        let sources: Vec<Point> = cfg
            .world
            .gas_sources
            .iter()
            .filter(|s| s.species == species)
            .map(|s| Point::new(s.position.x + s.drift_mm.x, s.position.y + s.drift_mm.y))
            .collect();
        if sources.is_empty() {
            continue;
        }
        est.extend(locate_gas_peaks(log, species).into_iter().take(sources.len()));
        truth.extend(sources);
    }
    (truth, est)
}

fn error_report(truth_cfg: &SimConfig, model: &WallModel, log: Option<&MissionLog>) -> Result<ErrorReport, CliError> {
    let (gt, ge) = match log {
        Some(l) => gas_estimates(truth_cfg, l),
        None => (Vec::new(), Vec::new()),
    };
    let gas = (!gt.is_empty() && !ge.is_empty()).then_some((gt.as_slice(), ge.as_slice()));
    Ok(evaluate_map(model, &truth_cfg.world.room, gas.map(|g| g.0), gas.map(|g| g.1))?)
}

fn simulate(cfg: &SimConfig, seed: Option<u64>, noise: Option<Toggle>, out: Option<PathBuf>) -> Result<(), CliError> {
    let seed = seed.unwrap_or(cfg.seed);
    let noise = noise.map_or(cfg.noise_enabled, Toggle::enabled);
    let (log, home) = run_mission(cfg, seed, noise)?;
    emit(out.as_deref(), &log.to_json())?;
    let mut summary = format!(
        "seed {seed}, noise {}\nframes {}, scans {}, points {}\nhoming displacement {} mm\n",
        if noise { "on" } else { "off" },
        log.frames.len(),
        log.scans.len(),
        log.points.len(),
        quantize(home.displacement_error_mm),
    );
    match cfg.mapping.extract(&log).and_then(|m| evaluate_map(&m, &cfg.world.room, None, None)) {
        Ok(r) => summary += &format!("wall MAPE {:.3} % over {} walls\n", r.mean_wall_mape_pct, r.wall_mape_pct.len()),
        Err(e) => summary += &format!("walls not recovered: {e}\n"),
    }
    if out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

fn extract(
    cfg: &SimConfig,
    input: &Path,
    format: InputFormat,
    truth: Option<PathBuf>,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
) -> Result<(), CliError> {
    let text = read(input)?;
    let is_log = match format {
        InputFormat::Log => true,
        InputFormat::Xy => false,
        InputFormat::Auto => text.trim_start().starts_with('{'),
    };
    let (model, log) = if is_log {
        let log = MissionLog::from_json(&text).map_err(|e| CliError::Parse(format!("{}: {e}", input.display())))?;
        (cfg.mapping.extract(&log)?, Some(log))
    } else {
        let pts = parse_xy(&text).map_err(|e| CliError::Parse(format!("{}: {e}", input.display())))?;
        (aeromap_core::mapper::extract_walls(&pts, &cfg.mapping.params)?, None)
    };
    emit(out.as_deref(), &pretty(&model))?;
    if let Some(t) = truth {
        let truth_cfg = SimConfig::load(&t)?;
        let r = error_report(&truth_cfg, &model, log.as_ref())?;
        match report {
            Some(p) => emit(Some(&p), &pretty(&r))?,
            None => {
                eprintln!("mean wall MAPE {:.3} %", r.mean_wall_mape_pct);
                for (i, (e, t)) in r.wall_lengths_mm.iter().zip(&r.true_lengths_mm).enumerate() {
                    eprintln!("  wall {i}: {:.1} mm (true {t} mm, {:.3} %)", e, r.wall_mape_pct[i]);
                }
                if let Some(g) = r.gas {
                    eprintln!("gas location MAPE x {:.3} %, y {:.3} %", g.x_mape_pct, g.y_mape_pct);
                }
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FrameClass {
    timestamp: u64,
    x: f64,
    y: f64,
    class: IaqClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    crisp_score: Option<f64>,
    fallback: bool,
    crisp_class: IaqClass,
}

fn classify_log(cfg: &SimConfig, input: &Path, fuzzy: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), CliError> {
    let fcfg = match fuzzy {
        Some(p) => load_fuzzy(&p)?,
        None => cfg.fuzzy.clone(),
    };
    let thr = CrispThresholds::from_config(&fcfg);
    let log = load_log(input)?;
    let rows: Vec<FrameClass> = log
        .frames
        .iter()
        .map(|pf| {
            let crisp_class = crisp_classify(&pf.frame, &thr);
            let (class, score) = match classify(&pf.frame, &fcfg) {
                Ok(c) => (c.class, Some(quantize(c.crisp_score))),
                Err(_) => (crisp_class, None),
            };
            FrameClass {
                timestamp: pf.frame.timestamp,
                x: pf.pose.x,
                y: pf.pose.y,
                class,
                crisp_score: score,
                fallback: score.is_none(),
                crisp_class,
            }
        })
        .collect();
    emit(out.as_deref(), &pretty(&rows))?;
    let count = |c: IaqClass| rows.iter().filter(|r| r.class == c).count();
    eprintln!(
        "{} frames: {} good, {} moderate, {} poor",
        rows.len(),
        count(IaqClass::Good),
        count(IaqClass::Moderate),
        count(IaqClass::Poor)
    );
    Ok(())
}

fn input_var(c: Channel) -> InputVar {
    match c {
        Channel::Voc => InputVar::Voc,
        Channel::Co2 => InputVar::Co2,
        Channel::Smoke => InputVar::Smoke,
        Channel::Temperature => InputVar::Temperature,
        Channel::Humidity => InputVar::Humidity,
    }
}

#[derive(Serialize)]
struct ExperimentReport {
    seed: u64,
    noise: bool,
    overall: ExperimentResult,
    ablation: Vec<(InputVar, ExperimentResult)>,
    self_check: bool,
}

pub fn run_experiment(
    fcfg: &FuzzyConfig,
    noise: &NoiseConfig,
    trials: usize,
    seed: u64,
    channels: &[InputVar],
) -> Result<(ExperimentResult, Vec<(InputVar, ExperimentResult)>), CliError> {
    let thr = CrispThresholds::from_config(fcfg);
    let mut rng = seeded_rng(seed);
    let overall = robustness_experiment(fcfg, &thr, noise, trials, &mut rng).map_err(|e| CliError::Config(e.to_string()))?;
    let rows = ablation(fcfg, &thr, noise, trials, channels, &mut rng).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((overall, rows))
}

fn experiment(
    cfg: &SimConfig,
    trials: usize,
    seed: Option<u64>,
    noise: Toggle,
    only: Option<Channel>,
    json: bool,
) -> Result<(), CliError> {
    let seed = seed.unwrap_or(cfg.seed);
    let noise_cfg = if noise.enabled() { cfg.world.noise } else { NoiseConfig::zero() };
    let channels: Vec<InputVar> = match only {
        Some(c) => vec![input_var(c)],
        None => InputVar::ALL.to_vec(),
    };
    let (overall, rows) = run_experiment(&cfg.fuzzy, &noise_cfg, trials, seed, &channels)?;
    let ok = if noise.enabled() {
        overall.fuzzy_error_rate < overall.crisp_error_rate
    } else {
        overall.fuzzy_error_rate == 0.0 && overall.crisp_error_rate == 0.0
    };
    if json {
        let r = ExperimentReport { seed, noise: noise.enabled(), overall, ablation: rows, self_check: ok };
        emit(None, &pretty(&r))?;
    } else {
        let pct = |x: f64| format!("{:.2}", 100.0 * x);
        println!("trials {trials}, seed {seed}, noise {}", if noise.enabled() { "on" } else { "off" });
        println!("crisp error rate  {} %", pct(overall.crisp_error_rate));
        println!("fuzzy error rate  {} %", pct(overall.fuzzy_error_rate));
        println!("crisp vs fuzzy    {} %", pct(overall.crisp_vs_fuzzy_rate));
        println!("fallbacks         {}", overall.fallbacks);
        println!();
        println!("{:<12} {:>9} {:>9}", "noisy input", "crisp %", "fuzzy %");
        for (v, r) in &rows {
            println!("{:<12} {:>9} {:>9}", v.name(), pct(r.crisp_error_rate), pct(r.fuzzy_error_rate));
        }
    }
    if ok {
        Ok(())
    } else if noise.enabled() {
        Err(CliError::SelfCheck(format!(
            "fuzzy error rate {} is not below crisp error rate {}",
            overall.fuzzy_error_rate, overall.crisp_error_rate
        )))
    } else {
        Err(CliError::SelfCheck("error rates are not zero without noise".into()))
    }
}

#[derive(Serialize)]
struct MissionRow {
    seed: u64,
    homing_mm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_mape_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

#[derive(Serialize)]
struct BatchSummary {
    missions: usize,
    mapped: usize,
    mean_wall_mape_pct: Option<f64>,
    median_homing_mm: f64,
    rows: Vec<MissionRow>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn report(cfg: &SimConfig, first: u64, n: u64, noise: Option<Toggle>, json: bool) -> Result<(), CliError> {
    let noise = noise.map_or(cfg.noise_enabled, Toggle::enabled);
    let mut rows = Vec::new();
    for seed in first..first + n {
        let (log, home) = run_mission(cfg, seed, noise)?;
        let res = cfg.mapping.extract(&log).and_then(|m| evaluate_map(&m, &cfg.world.room, None, None));
        rows.push(MissionRow {
            seed,
            homing_mm: quantize(home.displacement_error_mm),
            wall_mape_pct: res.as_ref().ok().map(|r| r.mean_wall_mape_pct),
            failure: res.err().map(|e| e.to_string()),
        });
    }
    let mapes: Vec<f64> = rows.iter().filter_map(|r| r.wall_mape_pct).collect();
    let summary = BatchSummary {
        missions: rows.len(),
        mapped: mapes.len(),
        mean_wall_mape_pct: (!mapes.is_empty()).then(|| mapes.iter().sum::<f64>() / mapes.len() as f64),
        median_homing_mm: median(rows.iter().map(|r| r.homing_mm).collect()),
        rows,
    };
    if json {
        emit(None, &pretty(&summary))?;
    } else {
        println!("{:>6} {:>12} {:>12}", "seed", "wall MAPE %", "homing mm");
        for r in &summary.rows {
            let mape = r.wall_mape_pct.map_or_else(|| "failed".to_string(), |m| format!("{m:.3}"));
            println!("{:>6} {:>12} {:>12.3}", r.seed, mape, r.homing_mm);
        }
        println!();
        match summary.mean_wall_mape_pct {
            Some(m) => println!(
                "mean wall MAPE {m:.3} % over {} of {} missions (reference robot: 5.39 %)",
                summary.mapped, summary.missions
            ),
            None => println!("no mission produced a wall model"),
        }
        println!("median homing displacement {:.3} mm (reference robot: 90.9 mm)", summary.median_homing_mm);
    }
    if summary.mapped == 0 {
        return Err(CliError::Insufficient("no mission produced a wall model".into()));
    }
    Ok(())
}

fn serve(
    mut cfg: SimConfig,
    addr: SocketAddr,
    watchdog_ms: u64,
    steps_per_tick: usize,
    seed: Option<u64>,
    noise: Option<Toggle>,
) -> Result<(), CliError> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = noise {
        cfg.noise_enabled = n.enabled();
    }
    let mut sc = ServeConfig::new(cfg, addr);
    sc.engine = EngineOptions { watchdog_timeout_ms: watchdog_ms, steps_per_tick };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    rt.block_on(async {
        let handle = aeromap_telemetry::serve(sc).await.map_err(|e| CliError::Runtime(e.to_string()))?;
        println!("listening on http://{}  (WebSocket at /ws)", handle.local_addr());
        handle
            .run_until(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Runtime(e.to_string()))
    })
}

/// The frame sequence a live session would have streamed for `log`.
pub fn replay_frames(cfg: &SimConfig, log: &MissionLog) -> Vec<Frame> {
    let fcfg = &cfg.fuzzy;
    let thr = CrispThresholds::from_config(fcfg);
    let mut frames = Vec::new();
    let mut push = |t: u64, payload: Payload| {
        let seq = frames.len() as u64 + 1;
        frames.push(Frame::new(seq, t, payload));
    };
    let status = |robot_state, pose: Pose, t: u64, frames: usize, points: usize| {
        Payload::Status(Status { robot_state, pose, mission_ms: t, frames, points, detail: None })
    };
    push(0, status(RobotState::Sweeping, log.meta.dock, 0, 0, 0));
    let mut points_sent = 0;
    for (i, pf) in log.frames.iter().enumerate() {
        let t = pf.frame.timestamp;
        push(t, Payload::Sensor(*pf));
        let report = match classify(&pf.frame, fcfg) {
            Ok(c) => ClassificationReport {
                timestamp: t,
                class: c.class,
                crisp_score: Some(c.crisp_score),
                fallback: false,
                term_strengths: c.term_strengths,
                clamped: c.clamped,
            },
            Err(_) => ClassificationReport {
                timestamp: t,
                class: crisp_classify(&pf.frame, &thr),
                crisp_score: None,
                fallback: true,
                term_strengths: Default::default(),
                clamped: Vec::new(),
            },
        };
        push(t, Payload::Classification(report));
        // hits from scans taken before the next sample
        let until = log.frames.get(i + 1).map_or(u64::MAX, |n| n.frame.timestamp);
        let end = points_sent
            + log.points[points_sent..]
                .iter()
                .take_while(|p| log.scans[p.source_pose_id].t < until)
                .count();
        for chunk in log.points[points_sent..end].chunks(MAP_BATCH) {
            push(t, Payload::Map(MapBatch { points: chunk.to_vec() }));
        }
        points_sent = end;
    }
    let last_t = log.events.last().map_or(0, |e| e.t);
    if let Ok(m) = cfg.mapping.extract(log) {
        push(last_t, Payload::WallModel(m));
    }
    let final_pose = log.frames.last().map_or(log.meta.dock, |f| f.pose);
    push(last_t, status(RobotState::Idle, final_pose, last_t, log.frames.len(), log.points.len()));
    frames
}

fn replay(cfg: &SimConfig, input: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let log = load_log(input)?;
    let frames = replay_frames(cfg, &log);
    let mut text = String::new();
    for f in &frames {
        let line = encode_frame(f);
        let back = decode_frame(&line).map_err(|e| CliError::SelfCheck(format!("frame {} does not decode: {e}", f.seq)))?;
        if encode_frame(&back) != line {
            return Err(CliError::SelfCheck(format!("frame {} is not stable over a round trip", f.seq)));
        }
        text.push_str(&line);
        text.push('\n');
    }
    let res = match &out {
        Some(p) => fs::write(p, &text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    res.map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))?;
    let walls = frames.iter().find_map(|f| match &f.payload {
        Payload::WallModel(m) => Some(m.corners.len()),
        _ => None,
    });
    eprintln!(
        "replayed {} frames from {} samples and {} points; {}",
        frames.len(),
        log.frames.len(),
        log.points.len(),
        walls.map_or("no wall model".to_string(), |n| format!("wall model with {n} corners"))
    );
    Ok(())
}
