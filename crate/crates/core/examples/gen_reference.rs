//! Regenerates `assets/reference.pgm`: a deterministic multi-scale texture
//! with gradient content in every orientation, so the excitation Gram is
//! well-conditioned over the full frame.
//!
//! Run with `cargo run -p sl3-observer --example gen_reference`.

use std::path::Path;

use sl3_observer::camera::CameraIntrinsics;
use sl3_observer::image::PixelImage;
use sl3_observer::io::write_pgm;

const WIDTH: usize = 256;
const HEIGHT: usize = 254;

fn main() {
    // plane-wave components: (cycles across the frame in u, in v, phase, amplitude).
    // The low-frequency band shapes the attraction basin; the mid-frequency
    // band carries most of the excitation energy (amp * cycles roughly
    // constant, so each component contributes equally to the Gram).
    let waves: &[(f64, f64, f64, f64)] = &[
        (1.0, 0.0, 0.3, 0.13),
        (0.0, 1.0, 1.1, 0.13),
        (1.0, 1.0, 2.0, 0.10),
        (1.0, -1.0, 0.7, 0.10),
        (2.0, 1.0, 1.9, 0.08),
        (-1.0, 2.0, 0.2, 0.08),
        (3.0, 2.0, 2.6, 0.06),
        (2.0, -3.0, 1.4, 0.06),
        (5.0, 1.0, 0.9, 0.05),
        (1.0, 5.0, 2.2, 0.05),
        (6.0, -4.0, 0.5, 0.045),
        (-4.0, 6.0, 2.9, 0.045),
        (9.0, 2.0, 1.2, 0.11),
        (2.0, 9.0, 0.4, 0.11),
        (8.0, -8.0, 2.3, 0.09),
        (-8.0, -8.0, 1.6, 0.09),
        (13.0, 5.0, 0.8, 0.075),
        (5.0, -13.0, 2.7, 0.075),
        (12.0, 12.0, 1.0, 0.06),
        (-12.0, 12.0, 0.1, 0.06),
        (18.0, 7.0, 1.5, 0.05),
        (-7.0, 18.0, 2.4, 0.05),
        (17.0, -17.0, 0.6, 0.045),
        (23.0, 9.0, 2.1, 0.04),
        (9.0, 23.0, 1.3, 0.04),
        (24.0, -24.0, 1.8, 0.035),
    ];
    let tau = std::f64::consts::TAU;
    let mut data = Vec::with_capacity(WIDTH * HEIGHT);
    for v in 0..HEIGHT {
        for u in 0..WIDTH {
            let su = u as f64 / WIDTH as f64;
            let sv = v as f64 / HEIGHT as f64;
            let mut val = 0.5;
            for &(fu, fv, phase, amp) in waves {
                val += amp * (tau * (fu * su + fv * sv) + phase).sin();
            }
            // gentle radial vignette to break the translational symmetry
            let r2 = (su - 0.5).powi(2) + (sv - 0.5).powi(2);
            val += 0.10 * (1.0 - 4.0 * r2);
            // contrast expansion: steepens gradients without adding finer
            // spatial structure
            let val = 0.5 + 0.48 * (2.5 * (val - 0.5)).tanh();
            data.push(val.clamp(0.02, 0.98));
        }
    }
    let k = CameraIntrinsics::default_for(WIDTH, HEIGHT);
    let img = PixelImage::new(data, k).expect("dimensions match");
    let out = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/reference.pgm");
    write_pgm(&out, &img).expect("write reference image");
    println!("wrote {}", out.display());
}
