//! The unit-ball problem with data `-psi(sqrt((1 + Re z1) / 2))` and `f = 0`,
//! whose solution is that function itself. Prints the sup error and the
//! fitted Hölder exponent of the computed solution.
//!
//! cargo run --release --example ball_example -- [h] [linear|sqrt]

use shl_monge::config::parse_config;
use shl_monge::data::Psi;
use shl_monge::verify::example_ball;

fn main() -> shl_monge::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let h: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let psi = match args.next().as_deref() {
        Some("sqrt") => Psi::Sqrt,
        _ => Psi::Linear,
    };
    let cfg = parse_config(&format!("n = 2\ndomain.kind = ball\ngrid.h = {h}\n"))?;
    let ex = example_ball(&cfg, psi)?;
    println!("psi = {psi:?}, h = {h}");
    println!("sup error {:.3e} after {} sweeps", ex.sup_error, ex.solved.report.iterations);
    println!("exponent {:.3} over [{}, {}] (rms {:.3})", ex.fit.slope, ex.fit.t_range.0, ex.fit.t_range.1, ex.fit.residual);
    for &(t, w) in &ex.modulus.samples {
        println!("  t = {t:.3}  w = {w:.4}  exact {:.4}", psi.eval((t / 2.0).sqrt()));
    }
    Ok(())
}
