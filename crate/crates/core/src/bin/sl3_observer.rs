//! Command-line front end: scenario simulation, observer runs on recorded
//! frames, and the excitation check.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{Matrix3, Vector3};

use sl3_observer::camera::CameraIntrinsics;
use sl3_observer::config::{RunConfig, ScenarioName};
use sl3_observer::error::Error;
use sl3_observer::image::{build_region_samples, AnalyticImage, PixelImage, SphereImage};
use sl3_observer::io::{
    difference_image, load_image, write_metrics_csv, write_pgm, write_svg_plot, PlotSeries,
};
use sl3_observer::lie::{normalize_determinant, project_sl3, Sl3};
use sl3_observer::observer::{
    correction_delta, excitation_check, step_known_velocity, step_partial_velocity, ObserverState,
    Reduction,
};
use sl3_observer::sim::{
    build_group_velocity, reference_motion, render_frame, run_simulation, MotionProfile, Scenario,
    ScenarioKind,
};

#[derive(Parser)]
#[command(name = "sl3-observer", version, about = "Direct photometric homography observer on SL(3)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulated scenario and write metrics, plots and frames.
    Simulate(SimulateArgs),
    /// Run the observer on recorded frames with a velocity log.
    Estimate(EstimateArgs),
    /// Analyze whether a reference image excites all of sl(3).
    CheckExcitation(ExcitationArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key-value config file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reference image (PGM P5 or PNG grayscale).
    #[arg(long)]
    image: Option<PathBuf>,
    /// Region of interest as u,v,width,height (default: full frame).
    #[arg(long)]
    region: Option<String>,
    #[arg(long)]
    fu: Option<f64>,
    #[arg(long)]
    fv: Option<f64>,
    #[arg(long)]
    u0: Option<f64>,
    #[arg(long)]
    v0: Option<f64>,
    /// Pre-smooth the pixel gradient with a 3x3 binomial kernel.
    #[arg(long)]
    smooth_gradient: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// sim1 (known velocity), sim2 (partial velocity) or custom.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    k_delta: Option<f64>,
    #[arg(long)]
    k_gamma: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Dump meas_/frame_/diff_%04d.pgm plus the velocity log per step.
    #[arg(long)]
    dump_frames: bool,
    /// Fixed-order reductions and fixed RNG; byte-identical outputs.
    #[arg(long)]
    deterministic: Option<bool>,
    /// Std-dev of Gaussian noise added to the fed velocity (extension; 0 = off).
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the built-in analytic reference scene instead of an image file.
    #[arg(long)]
    analytic: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Recorded frames in time order; the first one is the reference.
    frames: Vec<PathBuf>,
    /// CSV of velocities: `t,u11..u33` (known U, row-major) or `t,wx,wy,wz`
    /// (gyro only, partial-velocity observer).
    #[arg(long)]
    velocities: PathBuf,
    #[arg(long)]
    k_delta: Option<f64>,
    #[arg(long)]
    k_gamma: Option<f64>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    deterministic: Option<bool>,
}

#[derive(Args)]
struct ExcitationArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// PASS threshold: min eigenvalue > threshold * max eigenvalue.
    #[arg(long, default_value_t = 1e-8)]
    threshold: f64,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::CheckExcitation(args) => cmd_check_excitation(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Diverged { .. } | Error::NoOverlap { .. } => 3,
                Error::Io(_) | Error::ImageDecode(_) => 4,
                _ => 2,
            })
        }
    }
}

fn init_thread_pool() {
    if let Ok(n) = std::env::var("SL3_OBSERVER_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn build_config(common: &CommonArgs) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    if let Some(p) = &common.image {
        cfg.image_path = Some(p.clone());
    }
    if let Some(r) = &common.region {
        cfg.apply_key("region", r)?;
    }
    for (key, val) in [
        ("fu", common.fu),
        ("fv", common.fv),
        ("u0", common.u0),
        ("v0", common.v0),
    ] {
        if let Some(v) = val {
            cfg.apply_key(key, &v.to_string())?;
        }
    }
    if common.smooth_gradient {
        cfg.smooth_gradient = true;
    }
    Ok(cfg)
}

/// Loads the reference image per config (pixel file or analytic scene),
/// returning it with its intrinsics.
enum Reference {
    Pixel(PixelImage),
    Analytic(AnalyticImage),
}

impl Reference {
    fn as_image(&self) -> &dyn SphereImage {
        match self {
            Reference::Pixel(p) => p,
            Reference::Analytic(a) => a,
        }
    }
}

fn load_reference(cfg: &RunConfig) -> Result<(Reference, CameraIntrinsics), Error> {
    if cfg.analytic {
        let k = cfg
            .intrinsics
            .unwrap_or_else(|| CameraIntrinsics::default_for(256, 254));
        return Ok((Reference::Analytic(AnalyticImage::textured()), k));
    }
    let path = cfg
        .image_path
        .as_ref()
        .ok_or_else(|| Error::Config("no reference image given (use --image)".into()))?;
    let mut img = load_image(path, cfg.intrinsics)?;
    if cfg.smooth_gradient {
        img = img.smoothed();
    }
    let k = *img.intrinsics();
    Ok((Reference::Pixel(img), k))
}

fn motion_from_config(cfg: &RunConfig) -> Result<MotionProfile, Error> {
    let mut profile = reference_motion();
    profile.dt = cfg.dt;
    profile.t_end = cfg.t_end;
    if let Some(h0) = cfg.h0 {
        profile.h0 = normalize_determinant(&Matrix3::from_row_slice(&h0))?;
    }
    let omega = cfg
        .omega
        .map(|a| Vector3::from_row_slice(&a))
        .unwrap_or_else(Vector3::zeros);
    if cfg.omega.is_some() || cfg.v_over_d.is_some() || cfg.eta.is_some() {
        let v_over_d = cfg
            .v_over_d
            .map(|a| Vector3::from_row_slice(&a))
            .unwrap_or_else(|| Vector3::new(-0.1, 0.1, 0.0));
        let eta = cfg
            .eta
            .map(|a| Vector3::from_row_slice(&a))
            .unwrap_or_else(Vector3::z);
        profile.u = build_group_velocity(&omega, &v_over_d, &eta)?;
        profile.omega = omega;
    }
    Ok(profile)
}

fn csv_header_lines(cfg: &RunConfig, k: &CameraIntrinsics) -> Vec<String> {
    vec![
        format!("sl3-observer v{}", env!("CARGO_PKG_VERSION")),
        format!("config_hash: {:016x}", cfg.hash()),
        format!(
            "intrinsics: fu={} fv={} u0={} v0={} width={} height={}",
            k.fu, k.fv, k.u0, k.v0, k.width, k.height
        ),
        format!(
            "gains: k_delta={} k_gamma={} dt={} t_end={}",
            cfg.k_delta, cfg.k_gamma, cfg.dt, cfg.t_end
        ),
    ]
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let mut cfg = build_config(&args.common)?;
    if let Some(s) = &args.scenario {
        cfg.scenario = s.parse()?;
    }
    for (key, val) in [
        ("k_delta", args.k_delta),
        ("k_gamma", args.k_gamma),
        ("dt", args.dt),
        ("t_end", args.t_end),
        ("noise_std", args.noise_std),
    ] {
        if let Some(v) = val {
            cfg.apply_key(key, &v.to_string())?;
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(d) = args.deterministic {
        cfg.deterministic = d;
    }
    if args.analytic {
        cfg.analytic = true;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    cfg.dump_frames |= args.dump_frames;
    cfg.validate()?;

    let (reference, k) = load_reference(&cfg)?;
    let profile = motion_from_config(&cfg)?;
    let kind = match cfg.scenario {
        ScenarioName::Sim1 | ScenarioName::Custom => ScenarioKind::Sim1,
        ScenarioName::Sim2 => ScenarioKind::Sim2,
    };
    let scenario = Scenario {
        kind,
        profile,
        gains: cfg.gains(),
        reference: reference.as_image(),
        intrinsics: k,
        region: cfg.region_rect(&k)?,
        rasterize: !cfg.analytic,
        reduction: if cfg.deterministic {
            Reduction::Sequential
        } else {
            Reduction::Parallel
        },
        noise_std: cfg.noise_std,
        seed: cfg.seed,
    };

    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut velocity_rows: Vec<String> = Vec::new();
    let ref_raster = render_frame(&reference.as_image(), &sl3_observer::lie::SL3::identity(), &k);
    let out_dir = cfg.out_dir.clone();
    let dump = cfg.dump_frames;
    let mut sink = |step: usize, meas: &PixelImage, ie: &PixelImage| {
        if !dump {
            return;
        }
        let diff = difference_image(ie, &ref_raster);
        let _ = write_pgm(&out_dir.join(format!("meas_{step:04}.pgm")), meas);
        let _ = write_pgm(&out_dir.join(format!("frame_{step:04}.pgm")), ie);
        let _ = write_pgm(&out_dir.join(format!("diff_{step:04}.pgm")), &diff);
    };
    let out = run_simulation(&scenario, Some(&mut sink))?;

    if cfg.dump_frames {
        for (i, (t, u)) in out
            .truth
            .times
            .iter()
            .zip(out.truth.u.iter())
            .enumerate()
        {
            let m = u.matrix();
            let vals: Vec<String> = (0..3)
                .flat_map(|r| (0..3).map(move |c| format!("{:.12e}", m[(r, c)])))
                .collect();
            let omega = profile.omega;
            let row = match kind {
                ScenarioKind::Sim1 => format!("{t:.6},{}", vals.join(",")),
                ScenarioKind::Sim2 => {
                    format!("{t:.6},{:.12e},{:.12e},{:.12e}", omega.x, omega.y, omega.z)
                }
            };
            let _ = i;
            velocity_rows.push(row);
        }
        let header = match kind {
            ScenarioKind::Sim1 => "t,u11,u12,u13,u21,u22,u23,u31,u32,u33",
            ScenarioKind::Sim2 => "t,wx,wy,wz",
        };
        std::fs::write(
            cfg.out_dir.join("velocities.csv"),
            format!("{header}\n{}\n", velocity_rows.join("\n")),
        )?;
    }

    write_metrics_csv(
        &cfg.out_dir.join("metrics.csv"),
        &csv_header_lines(&cfg, &k),
        &out.reports,
    )?;

    let mut series = vec![
        PlotSeries {
            label: "eps_H",
            color: "blue",
            points: out.reports.iter().map(|r| (r.t, r.eps_h)).collect(),
        },
        PlotSeries {
            label: "eps_I",
            color: "red",
            points: out.reports.iter().map(|r| (r.t, r.eps_i)).collect(),
        },
    ];
    if kind == ScenarioKind::Sim2 {
        series.push(PlotSeries {
            label: "eps_Gamma",
            color: "black",
            points: out
                .reports
                .iter()
                .filter_map(|r| r.eps_gamma.map(|g| (r.t, g)))
                .collect(),
        });
    }
    write_svg_plot(
        &cfg.out_dir.join("plot_eps.svg"),
        "estimation errors (log scale)",
        &series,
    )?;

    let last = out.reports.last().expect("at least one step");
    println!(
        "done: {} steps, eps_H {:.3e} -> {:.3e}, eps_I {:.3e} -> {:.3e}",
        out.reports.len(),
        out.reports[0].eps_h,
        last.eps_h,
        out.reports[0].eps_i,
        last.eps_i
    );
    Ok(ExitCode::SUCCESS)
}

enum VelocityLog {
    Known(Vec<(f64, Sl3)>),
    Gyro(Vec<(f64, Vector3<f64>)>),
}

fn read_velocities(path: &Path) -> Result<VelocityLog, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut known = Vec::new();
    let mut gyro = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
            continue;
        }
        let nums: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad velocity row: {line}")))
            })
            .collect::<Result<_, _>>()?;
        match nums.len() {
            10 => {
                let m = Matrix3::from_row_slice(&nums[1..10]);
                known.push((nums[0], project_sl3(&m)));
            }
            4 => gyro.push((nums[0], Vector3::new(nums[1], nums[2], nums[3]))),
            n => {
                return Err(Error::Config(format!(
                    "velocity rows must have 4 or 10 columns, found {n}"
                )))
            }
        }
    }
    if !known.is_empty() && gyro.is_empty() {
        Ok(VelocityLog::Known(known))
    } else if known.is_empty() && !gyro.is_empty() {
        Ok(VelocityLog::Gyro(gyro))
    } else {
        Err(Error::Config("velocity file is empty or mixes formats".into()))
    }
}

fn cmd_estimate(args: EstimateArgs) -> Result<ExitCode, Error> {
    let mut cfg = build_config(&args.common)?;
    for (key, val) in [("k_delta", args.k_delta), ("k_gamma", args.k_gamma)] {
        if let Some(v) = val {
            cfg.apply_key(key, &v.to_string())?;
        }
    }
    if let Some(d) = args.deterministic {
        cfg.deterministic = d;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    if args.frames.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 frames, got {}",
            args.frames.len()
        )));
    }
    let log = read_velocities(&args.velocities)?;
    let times: Vec<f64> = match &log {
        VelocityLog::Known(rows) => rows.iter().map(|r| r.0).collect(),
        VelocityLog::Gyro(rows) => rows.iter().map(|r| r.0).collect(),
    };
    if times.len() != args.frames.len() {
        return Err(Error::Config(format!(
            "{} frames but {} velocity rows",
            args.frames.len(),
            times.len()
        )));
    }

    let mut reference = load_image(&args.frames[0], cfg.intrinsics)?;
    if cfg.smooth_gradient {
        reference = reference.smoothed();
    }
    let k = *reference.intrinsics();
    let region = build_region_samples(&k, &cfg.region_rect(&k)?)?;
    let reduction = if cfg.deterministic {
        Reduction::Sequential
    } else {
        Reduction::Parallel
    };

    std::fs::create_dir_all(&cfg.out_dir)?;
    let out_path = cfg.out_dir.join("estimate.csv");
    let mut rows = Vec::new();
    let mut state = ObserverState::new(cfg.gains());
    for (i, frame_path) in args.frames.iter().enumerate() {
        let frame = load_image(frame_path, Some(k))?;
        let delta = correction_delta(
            &reference,
            &frame,
            &state.h_hat,
            &region,
            cfg.k_delta,
            reduction,
        )?;
        state.last_delta = delta;

        // per-frame residual, averaged over valid samples
        let ie = sl3_observer::image::warped_error_image(&frame, &state.h_hat);
        let mut acc = 0.0;
        let mut valid = 0usize;
        for s in region.samples() {
            if let (Some(ve), Some(v0)) = (ie.value(&s.x), reference.value(&s.x)) {
                acc += (ve - v0) * (ve - v0);
                valid += 1;
            }
        }
        let eps_i = if valid > 0 { acc / valid as f64 } else { f64::NAN };

        let m = state.h_hat.matrix();
        let hvals: Vec<String> = (0..3)
            .flat_map(|r| (0..3).map(move |c| format!("{:.12e}", m[(r, c)])))
            .collect();
        rows.push(format!(
            "{:.6},{},{:.12e},{:.12e}",
            times[i],
            hvals.join(","),
            delta.norm(),
            eps_i
        ));

        if i + 1 < args.frames.len() {
            let dt = times[i + 1] - times[i];
            if dt <= 0.0 {
                return Err(Error::Config(format!(
                    "non-increasing timestamps at row {}",
                    i + 1
                )));
            }
            state = match &log {
                VelocityLog::Known(v) => step_known_velocity(&state, &v[i].1, &delta, dt),
                VelocityLog::Gyro(v) => step_partial_velocity(&state, &v[i].1, &delta, dt),
            };
        }
    }
    let header = "t,h11,h12,h13,h21,h22,h23,h31,h32,h33,delta_norm,eps_I";
    std::fs::write(&out_path, format!("{header}\n{}\n", rows.join("\n")))?;
    println!("wrote {}", out_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_check_excitation(args: ExcitationArgs) -> Result<ExitCode, Error> {
    let cfg = build_config(&args.common)?;
    let (reference, k) = load_reference(&cfg)?;
    let region = build_region_samples(&k, &cfg.region_rect(&k)?)?;
    let report = excitation_check(&reference.as_image(), &region);
    println!("gram eigenvalues (ascending):");
    for e in report.eigenvalues {
        println!("  {e:.6e}");
    }
    let max = report.eigenvalues[7];
    let pass = max > 0.0 && report.min_eigenvalue > args.threshold * max;
    println!(
        "min/max ratio: {:.3e}",
        if max > 0.0 { report.min_eigenvalue / max } else { 0.0 }
    );
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(ExitCode::SUCCESS)
}
