//! Truncation ladder for the unbounded density `1 / |z1|` on the unit ball:
//! successive gaps between levels and the exponent of the top level.
//!
//! cargo run --release --example lp_ladder -- [h]

use shl_monge::config::parse_config;
use shl_monge::solver::solve_lp;
use shl_monge::verify::modulus_fit;

fn main() -> shl_monge::Result<()> {
    env_logger::init();
    let h: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let cfg = parse_config(&format!(
        "n = 2\ndomain.kind = ball\ngrid.h = {h}\nphi.kind = re_z1\nf.kind = inv_abs_z1\nf.p = 1.5\nf.ladder = 1,4,16,64\n"
    ))?;
    let (u, ladder) = solve_lp(&cfg.problem()?, &cfg.f_ladder, &cfg.solver_config())?;
    for (k, gap) in ladder.gaps.iter().enumerate() {
        println!("M = {:>4} -> {:>4}: sup gap {gap:.4}", ladder.levels[k], ladder.levels[k + 1]);
    }
    let (_, fit) = modulus_fit(&u, &cfg, 2.0 * h, 1.0)?;
    println!("top level exponent {:.3} over [{}, {}]", fit.slope, fit.t_range.0, fit.t_range.1);
    Ok(())
}
