//! Sup-norm stability between two solutions: the measured difference next
//! to the bound from the data differences, for a few perturbations of
//! `|z|^2` data on the unit ball.
//!
//! cargo run --release --example stability_pairs -- [h]

use shl_monge::analysis::stability_check;
use shl_monge::config::parse_config;
use shl_monge::data::{BoundaryData, Density};

fn main() -> shl_monge::Result<()> {
    env_logger::init();
    let h: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let cfg = parse_config(&format!("n = 2\ndomain.kind = ball\ngrid.h = {h}\nphi.kind = abs_sq\nf.kind = const\nf.value = 1\n"))?;
    let base = cfg.problem()?;
    let cases = [
        ("shift phi by 0.1", BoundaryData::Sum(vec![BoundaryData::AbsSq, BoundaryData::Const(0.1)]), Density::Const(1.0)),
        ("f = 2", BoundaryData::AbsSq, Density::Const(2.0)),
        ("f = 0, phi + Re z1 / 4", BoundaryData::Sum(vec![BoundaryData::AbsSq, BoundaryData::Scaled(0.25, Box::new(BoundaryData::ReZ1))]), Density::Zero),
    ];
    for (name, phi, f) in cases {
        let r = stability_check(&base, &base.with_data(phi, f), &cfg.solver_config())?;
        println!(
            "{:4} {name}: |U1 - U2| = {:.4} <= {:.4} (phi {:.4}, f {:.4}, disc {:.1e})",
            if r.pass { "PASS" } else { "FAIL" },
            r.lhs,
            r.rhs,
            r.phi_diff,
            r.f_diff,
            r.eps_disc
        );
    }
    Ok(())
}
