//! Regenerates the sample graphs in `data/`.
//!
//!     cargo run -p rigidkit --example make_samples [out_dir]

use rigidkit::graphslam::{synth_graph, write_g2o, GraphKind, Noise};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    std::fs::create_dir_all(&out)?;
    let jobs = [
        ("circle2d", GraphKind::Circle2d, 50, Noise::new(0.05, 0.01)),
        ("grid2d", GraphKind::Grid2d, 64, Noise::new(0.05, 0.01)),
        ("sphere3d", GraphKind::Sphere3d, 30, Noise::new(0.03, 0.01)),
    ];
    for (name, kind, n, noise) in jobs {
        let (truth, noisy) = synth_graph(kind, n, noise, 1)?;
        std::fs::write(out.join(format!("{name}_truth.g2o")), write_g2o(&truth))?;
        std::fs::write(out.join(format!("{name}_noisy.g2o")), write_g2o(&noisy))?;
        println!("wrote {name} ({n} poses)");
    }
    Ok(())
}
