//! The command bodies of the `mellin-radon` binary driven from a config
//! string: validate, forward, invert and diagnose.

use std::path::Path;

use mellin_radon::cli::{cmd_diagnose, cmd_forward, cmd_invert, cmd_validate, Mode, SceneConfig};

const SCENE: &str = "
[cost]
(ces :alpha 0.5 :C 1 :a (0.5 0.5) (axis 1) (axis 2))

[grid]
lower = -12
upper = 16
points = 256

[density]
family = gamma-product
shapes = 2
rates = 1

[plane]
c = 0.9
r = 2
";

fn main() -> mellin_radon::Result<()> {
    let cfg = SceneConfig::parse(SCENE, Path::new("."))?;
    println!("validate: passed = {}", cmd_validate(&cfg).passed);
    for mode in [Mode::Radon, Mode::Profit] {
        let (g, meta) = cmd_forward(&cfg, mode)?;
        let inv = cmd_invert(&cfg, mode, &g)?;
        println!(
            "{}: forward {:.2} s, interior error {:.3e}",
            meta.operator,
            meta.timings.seconds,
            inv.report.interior_l2_error.unwrap_or(f64::NAN)
        );
    }
    let (report, _) = cmd_diagnose(&cfg, Mode::Radon)?;
    println!("diagnose: {:?}", report.verdict);
    Ok(())
}
