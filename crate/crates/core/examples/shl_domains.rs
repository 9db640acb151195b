//! Sampled strong hyperconvexity check for each built-in domain kind. The
//! polydisc is included as the case that must fail.
//!
//! cargo run --release --example shl_domains

use shl_monge::domain::{make_domain, validate_shl, ConvexShape, DomainKind};
use shl_monge::hermitian::{build_direction_set, ladder_profiles};

fn main() -> shl_monge::Result<()> {
    let dirs = build_direction_set(2, 16, &ladder_profiles(2, &[1.0, 4.0, 16.0, 64.0]), 1, 2.0)?;
    let kinds = [
        DomainKind::Ball { center: vec![0.0; 4], radius: 1.0 },
        DomainKind::StrictlyConvex(ConvexShape::Ellipsoid { center: vec![0.0; 4], weights: vec![1.0, 2.0] }),
        DomainKind::IntersectionOfBalls(vec![(vec![0.3, 0.0, 0.0, 0.0], 1.0), (vec![-0.3, 0.0, 0.0, 0.0], 1.0)]),
        DomainKind::L1Ball { scale: 1.0 },
        DomainKind::Polydisc { radius: 1.0 },
    ];
    for kind in kinds {
        let domain = make_domain(kind, 2)?;
        let r = validate_shl(&domain, &dirs, 0.05, 4000, 0.1)?;
        println!(
            "{:5} {}: c = {:.4}, sampled {:.4}; lipschitz bound {:.3}, sampled {:.3} ({} points)",
            if r.pass { "PASS" } else { "FAIL" },
            domain.kind.label(),
            r.c,
            r.c_hat,
            r.lipschitz_bound,
            r.lipschitz_hat,
            r.samples
        );
    }
    Ok(())
}
