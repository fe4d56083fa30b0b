//! Ground-truth trajectory generation, frame rendering, metrics, and the two
//! bundled simulation scenarios.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::camera::{pixel_to_ray, skew, sphere_project, CameraIntrinsics};
use crate::error::{Error, Result};
use crate::image::{
    warp_image, warped_error_image, PixelImage, PixelRect, RegionSamples, SphereImage,
};
use crate::lie::{exp_sl3, frobenius_norm, project_sl3, Sl3, SL3};
use crate::observer::{
    correction_delta, cost, homography_error, step_known_velocity, step_partial_velocity,
    ErrorReport, ObserverGains, ObserverState, Reduction,
};

/// Motion profile driving the ground-truth homography.
#[derive(Debug, Clone, Copy)]
pub struct MotionProfile {
    pub h0: SL3,
    /// Constant group velocity of the true homography.
    pub u: Sl3,
    /// Measured angular velocity component (fed to the partial observer).
    pub omega: Vector3<f64>,
    pub dt: f64,
    pub t_end: f64,
}

/// Ground-truth homography trajectory sampled at every step.
#[derive(Debug, Clone)]
pub struct TruthTrajectory {
    pub times: Vec<f64>,
    pub h: Vec<SL3>,
    pub u: Vec<Sl3>,
    /// Unmeasured part Gamma = U - Omega_x at each step.
    pub gamma: Vec<Sl3>,
}

/// Group velocity from camera motion: U = Omega_x + (V/d) eta' - (eta'V/3d) I.
pub fn build_group_velocity(
    omega: &Vector3<f64>,
    v_over_d: &Vector3<f64>,
    eta: &Vector3<f64>,
) -> Result<Sl3> {
    let norm = eta.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitNormal { norm });
    }
    let m = skew(omega) + v_over_d * eta.transpose()
        - Matrix3::identity() * (eta.dot(v_over_d) / 3.0);
    // traceless by construction; strip roundoff
    Ok(project_sl3(&m))
}

/// Integrates dH = H U with H[k+1] = H[k] exp(dt U[k]).
pub fn generate_truth(profile: &MotionProfile) -> Result<TruthTrajectory> {
    if profile.dt <= 0.0 || profile.t_end < profile.dt {
        return Err(Error::Config(format!(
            "bad time grid: dt = {}, T = {}",
            profile.dt, profile.t_end
        )));
    }
    let steps = (profile.t_end / profile.dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut h = Vec::with_capacity(steps + 1);
    let mut u = Vec::with_capacity(steps + 1);
    let mut gamma = Vec::with_capacity(steps + 1);
    let omega_x = Sl3::new(skew(&profile.omega)).expect("skew matrices are traceless");
    let mut cur = profile.h0;
    for k in 0..=steps {
        times.push(k as f64 * profile.dt);
        h.push(cur);
        u.push(profile.u);
        gamma.push(&profile.u - &omega_x);
        cur = cur.compose(&exp_sl3(&profile.u.scale(profile.dt)));
    }
    Ok(TruthTrajectory {
        times,
        h,
        u,
        gamma,
    })
}

/// Rasterizes Phi(H, I0) onto the pixel grid of `k`: each pixel ray x is
/// sampled from the reference at H x / |H x|. Pixels whose ray leaves the
/// reference are marked invalid.
pub fn render_frame<I: SphereImage>(i_ref: &I, h: &SL3, k: &CameraIntrinsics) -> PixelImage {
    let hm = *h.matrix();
    let rows: Vec<Vec<(f64, bool)>> = (0..k.height)
        .into_par_iter()
        .map(|v| {
            (0..k.width)
                .map(|u| {
                    let x = pixel_to_ray(k, u as f64, v as f64);
                    let y = sphere_project(&(hm * x.vector())).expect("invertible warp");
                    match i_ref.value(&y) {
                        Some(val) => (val, true),
                        None => (0.0, false),
                    }
                })
                .collect()
        })
        .collect();
    let mut data = Vec::with_capacity(k.width * k.height);
    let mut valid = Vec::with_capacity(k.width * k.height);
    for row in rows {
        for (val, ok) in row {
            data.push(val);
            valid.push(ok);
        }
    }
    PixelImage::with_mask(data, valid, *k).expect("sizes match by construction")
}

/// Error metrics against the ground truth at one time step.
pub fn compute_metrics<A: SphereImage, B: SphereImage>(
    t: f64,
    h: &SL3,
    state: &ObserverState,
    i_ref: &A,
    i_cur: &B,
    region: &RegionSamples,
    gamma_true: Option<&Sl3>,
) -> ErrorReport {
    let ie = warped_error_image(i_cur, &state.h_hat);
    let mut acc = 0.0;
    let mut valid = 0usize;
    for s in region.samples() {
        if let (Some(ve), Some(v0)) = (ie.value(&s.x), i_ref.value(&s.x)) {
            acc += (ve - v0) * (ve - v0);
            valid += 1;
        }
    }
    let eps_i = if valid > 0 { acc / valid as f64 } else { f64::NAN };
    let eps_gamma = gamma_true.map(|g| {
        let d = g.matrix() - state.gamma_hat.matrix();
        frobenius_norm(&d).powi(2)
    });
    ErrorReport {
        t,
        eps_h: homography_error(h, &state.h_hat),
        eps_i,
        eps_gamma,
        delta_norm: state.last_delta.norm(),
    }
}

/// Which observer the scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Known group velocity, observer fed the exact truth U.
    Sim1,
    /// Velocity partially known: gyro part fed, Gamma estimated.
    Sim2,
}

/// Full scenario description.
pub struct Scenario<'a> {
    pub kind: ScenarioKind,
    pub profile: MotionProfile,
    pub gains: ObserverGains,
    pub reference: &'a dyn SphereImage,
    pub intrinsics: CameraIntrinsics,
    pub region: PixelRect,
    /// Rasterize each frame through the camera before handing it to the
    /// observer (mirrors a real measurement). Analytic references can skip
    /// this to obtain interpolation-free runs.
    pub rasterize: bool,
    pub reduction: Reduction,
    /// Std-dev of zero-mean Gaussian noise added to the fed velocity; 0 = off.
    pub noise_std: f64,
    pub seed: u64,
}

/// Per-step record of a simulation run.
pub struct SimOutput {
    pub reports: Vec<ErrorReport>,
    /// Photometric cost F at each step.
    pub costs: Vec<f64>,
    /// Composite cost F + |Gamma_err|^2 / (2 k_delta k_gamma) (Sim2 only).
    pub composite_costs: Vec<f64>,
    pub truth: TruthTrajectory,
    pub final_state: ObserverState,
    /// Estimate at every step, aligned with `reports`.
    pub estimates: Vec<SL3>,
}

/// The printed first-scenario homography and velocity: constant translation
/// parallel to the scene.
pub fn reference_motion() -> MotionProfile {
    let h0 = crate::lie::normalize_determinant(&Matrix3::new(
        1.0308, 0.0507, 0.0867, //
        -0.0509, 1.0309, -0.1442, //
        0.0, 0.0, 0.9388,
    ))
    .expect("printed matrix has positive determinant");
    let u = build_group_velocity(
        &Vector3::zeros(),
        &Vector3::new(-0.1, 0.1, 0.0),
        &Vector3::new(0.0, 0.0, 1.0),
    )
    .expect("e3 is unit");
    MotionProfile {
        h0,
        u,
        omega: Vector3::zeros(),
        dt: 0.02,
        t_end: 3.0,
    }
}

/// Runs a scenario and reports metrics at every step. `frame_sink`, when
/// given, receives (step index, measured frame, warped image I^e) for dumping.
pub fn run_simulation(
    scenario: &Scenario,
    mut frame_sink: Option<&mut dyn FnMut(usize, &PixelImage, &PixelImage)>,
) -> Result<SimOutput> {
    let truth = generate_truth(&scenario.profile)?;
    let region = crate::image::build_region_samples(&scenario.intrinsics, &scenario.region)?;
    let mut state = ObserverState::new(scenario.gains);
    let mut rng = ChaCha12Rng::seed_from_u64(scenario.seed);
    let dt = scenario.profile.dt;
    let n = truth.times.len();

    let mut reports = Vec::with_capacity(n);
    let mut costs = Vec::with_capacity(n);
    let mut composite = Vec::with_capacity(n);
    let mut estimates = Vec::with_capacity(n);

    for k in 0..n {
        let h = &truth.h[k];
        // measurement: the current image, optionally rasterized
        // quantize rasterized frames to 8 bits so in-memory runs match PGM
        // round trips
        let frame = scenario
            .rasterize
            .then(|| render_frame(&scenario.reference, h, &scenario.intrinsics).quantized());
        let analytic_warp = warp_image(h, scenario.reference);
        let current: &dyn SphereImage = match &frame {
            Some(f) => f,
            None => &analytic_warp,
        };

        let delta = correction_delta(
            &scenario.reference,
            &current,
            &state.h_hat,
            &region,
            scenario.gains.k_delta,
            scenario.reduction,
        )
        .map_err(|e| match e {
            Error::NoOverlap { valid, total } => Error::Diverged {
                step: k,
                valid,
                total,
            },
            other => other,
        })?;
        state.last_delta = delta;

        let gamma_true = match scenario.kind {
            ScenarioKind::Sim1 => None,
            ScenarioKind::Sim2 => Some(&truth.gamma[k]),
        };
        reports.push(compute_metrics(
            truth.times[k],
            h,
            &state,
            &scenario.reference,
            &current,
            &region,
            gamma_true,
        ));
        let f = cost(&scenario.reference, &current, &state.h_hat, &region)?;
        costs.push(f);
        if scenario.kind == ScenarioKind::Sim2 {
            let gerr = &truth.gamma[k] - &state.gamma_hat;
            composite.push(
                f + gerr.norm().powi(2) / (2.0 * scenario.gains.k_delta * scenario.gains.k_gamma),
            );
        }
        estimates.push(state.h_hat);

        if let Some(sink) = frame_sink.as_deref_mut() {
            let meas = match &frame {
                Some(f) => f.clone(),
                None => render_frame(&current, &SL3::identity(), &scenario.intrinsics),
            };
            // rasterized warped image I^e for Fig-2-style dumps
            let ie = render_frame(
                &warped_error_image(&current, &state.h_hat),
                &SL3::identity(),
                &scenario.intrinsics,
            );
            sink(k, &meas, &ie);
        }

        if k + 1 < n {
            match scenario.kind {
                ScenarioKind::Sim1 => {
                    let u = perturbed(&truth.u[k], scenario.noise_std, &mut rng);
                    state = step_known_velocity(&state, &u, &delta, dt);
                }
                ScenarioKind::Sim2 => {
                    let omega = perturbed_vec(&scenario.profile.omega, scenario.noise_std, &mut rng);
                    state = step_partial_velocity(&state, &omega, &delta, dt);
                }
            }
        }
    }

    Ok(SimOutput {
        reports,
        costs,
        composite_costs: composite,
        truth,
        final_state: state,
        estimates,
    })
}

fn perturbed(u: &Sl3, std: f64, rng: &mut ChaCha12Rng) -> Sl3 {
    if std == 0.0 {
        return *u;
    }
    use rand::Rng;
    let mut m = *u.matrix();
    for i in 0..3 {
        for j in 0..3 {
            // Box-Muller keeps the dependency surface small
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            m[(i, j)] += std
                * (-2.0 * u1.ln()).sqrt()
                * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
    project_sl3(&m)
}

fn perturbed_vec(v: &Vector3<f64>, std: f64, rng: &mut ChaCha12Rng) -> Vector3<f64> {
    if std == 0.0 {
        return *v;
    }
    use rand::Rng;
    let mut out = *v;
    for i in 0..3 {
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        out[i] += std * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    }
    out
}
