//! Builds the sub- and super-barriers for a unit-ball problem, solves it,
//! and checks that the solution sits between them.
//!
//! cargo run --release --example barrier_sandwich -- [ex47|quadratic|re_z1] [h]

use shl_monge::barriers::{barrier_bundle, sandwich, BarrierOptions};
use shl_monge::data::{BoundaryData, Density, Psi};
use shl_monge::domain::{make_domain, DomainKind};
use shl_monge::hermitian::{build_direction_set, ladder_profiles};
use shl_monge::solver::{solve_discrete, Discrete, ProblemSpec, SolverConfig};

fn main() -> shl_monge::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let which = args.first().map(String::as_str).unwrap_or("ex47");
    let h: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let (phi, f) = match which {
        "quadratic" => (BoundaryData::AbsSq, Density::Const(1.0)),
        "re_z1" => (BoundaryData::ReZ1, Density::Const(1.0)),
        _ => (BoundaryData::Example47(Psi::Linear), Density::Zero),
    };
    let domain = make_domain(DomainKind::Ball { center: vec![0.0; 4], radius: 1.0 }, 2)?;
    let dirs = build_direction_set(2, 32, &ladder_profiles(2, &[1.0, 4.0, 16.0, 64.0]), 1, 2.0)?;
    let problem = ProblemSpec::new(domain, phi, f, dirs, h);
    let disc = Discrete::new(&problem)?;
    let t = std::time::Instant::now();
    let bundle = barrier_bundle(&problem, &disc, &BarrierOptions::default())?;
    println!("barriers built in {:.1} s", t.elapsed().as_secs_f64());
    let sub = bundle.report.sub.as_ref().expect("pointwise bundle has a sub side");
    println!(
        "sub:   B = {}, K1 = {}, gamma2 = {:.4}, gamma1 in [{:.3}, {:.3}], check worst {:.3e} ({} violations)",
        sub.b, sub.k1, sub.gamma2, sub.gamma1_range.0, sub.gamma1_range.1, sub.check.worst, sub.check.violations
    );
    let sup = &bundle.report.sup;
    println!(
        "super: gamma2 = {:.4}, gamma1 in [{:.3}, {:.3}], check worst {:.3e} ({} violations)",
        sup.gamma2, sup.gamma1_range.0, sup.gamma1_range.1, sup.check.worst, sup.check.violations
    );
    let (u, rep) = solve_discrete(&disc, &SolverConfig::default())?;
    let s = sandwich(&bundle, &u, rep.tol);
    println!(
        "sandwich: lower - U <= {:.3e}, U - upper <= {:.3e}, {}",
        s.lower_excess,
        s.upper_excess,
        if s.pass { "PASS" } else { "FAIL" }
    );
    Ok(())
}
