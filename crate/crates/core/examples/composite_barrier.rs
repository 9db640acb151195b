//! Composite barrier `h1 + h2` through an auxiliary ball, for a bounded and
//! an unbounded density on the unit ball.
//!
//! cargo run --release --example composite_barrier -- [h]

use shl_monge::barriers::{composite_barrier_lp, sandwich, BarrierOptions};
use shl_monge::data::{BoundaryData, Density, DensityKind};
use shl_monge::domain::{make_domain, DomainKind};
use shl_monge::hermitian::{build_direction_set, ladder_profiles};
use shl_monge::solver::{solve_lp, ProblemSpec, SolverConfig};

fn main() -> shl_monge::Result<()> {
    env_logger::init();
    let h: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let domain = make_domain(DomainKind::Ball { center: vec![0.0; 4], radius: 1.0 }, 2)?;
    let dirs = build_direction_set(2, 16, &ladder_profiles(2, &[1.0, 4.0, 16.0, 64.0]), 1, 2.0)?;
    let cfg = SolverConfig::default();
    let opts = BarrierOptions::default();

    let cases = [
        ("f = 1, phi = |z|^2", BoundaryData::AbsSq, Density::Const(1.0), vec![1.0]),
        ("f = 1/|z1|, phi = Re z1", BoundaryData::ReZ1, Density::InvAbsZ1, vec![4.0, 16.0, 64.0]),
    ];
    for (name, phi, f, ladder) in cases {
        let mut problem = ProblemSpec::new(domain.clone(), phi, f, dirs.clone(), h);
        if ladder.len() > 1 {
            problem.f_kind = DensityKind::Lp { p: 1.5, singular_points: vec![] };
        }
        let t = std::time::Instant::now();
        let bundle = composite_barrier_lp(&problem, &ladder, &cfg, &opts)?;
        let (u, rep) = solve_lp(&problem, &ladder, &cfg)?;
        let s = sandwich(&bundle, &u, rep.reports.last().map_or(0.0, |r| r.tol));
        println!(
            "{name}: lower - U <= {:.3e}, U - upper <= {:.3e} ({}), ladder gaps {:?}, {:.1} s",
            s.lower_excess,
            s.upper_excess,
            if s.pass { "PASS" } else { "FAIL" },
            rep.gaps,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
