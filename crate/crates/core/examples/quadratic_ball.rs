//! Solves the unit-ball problem with `phi = 1`, `f = 1`, whose solution is
//! `|z|^2`, and prints the sup error at a few grid spacings.
//!
//! cargo run --release --example quadratic_ball -- 0.1 0.05

use shl_monge::data::{BoundaryData, Density};
use shl_monge::domain::{make_domain, DomainKind};
use shl_monge::hermitian::{build_direction_set, ladder_profiles};
use shl_monge::solver::{solve, ProblemSpec, SolverConfig};

fn main() -> shl_monge::Result<()> {
    env_logger::init();
    let hs: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let hs = if hs.is_empty() { vec![0.2, 0.1] } else { hs };
    for h in hs {
        let domain = make_domain(DomainKind::Ball { center: vec![0.0; 4], radius: 1.0 }, 2)?;
        let dirs = build_direction_set(2, 32, &ladder_profiles(2, &[1.0, 4.0, 16.0, 64.0]), 1, 2.0)?;
        let problem = ProblemSpec::new(domain, BoundaryData::AbsSq, Density::Const(1.0), dirs, h);
        let (u, rep) = solve(&problem, &SolverConfig::default())?;
        let err = u
            .grid
            .interior
            .iter()
            .map(|&i| (u.values[i] - u.grid.coords(i).iter().map(|x| x * x).sum::<f64>()).abs())
            .fold(0.0, f64::max);
        println!(
            "h = {h}: sup error {err:.3e}, {} sweeps, {:.1} s, {} interior nodes, skipped frames {}/{}, jumps {}+{}",
            rep.iterations,
            rep.wall_time_s,
            rep.interior_nodes,
            rep.skipped_frames,
            rep.skipped_frames + rep.frame_evaluations,
            rep.jumps_accepted,
            rep.jumps_rejected
        );
        if std::env::var_os("SHOW_HISTORY").is_some() {
            for (k, s) in rep.sup_update_history.iter().enumerate() {
                println!("{k} {s:.3e}");
            }
        }
    }
    Ok(())
}
