//! How well a finite direction family resolves `det(Q)^{1/n}`: the ratio of
//! the sampled infimum of `tr(HQ) / n` to the determinant root, for random
//! positive definite `Q`, as the frame count grows.
//!
//! cargo run --release --example gaveau_directions -- [n] [cond]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shl_monge::hermitian::{build_direction_set, gaveau_inf, ladder_profiles, ComplexHessian};
use shl_monge::verify::random_psd;

fn main() -> shl_monge::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let cond: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let qs: Vec<_> = (0..50).map(|_| random_psd(n, cond, &mut r).0).collect();
    for frames in [8, 32, 64, 128] {
        for ladder in [vec![1.0], vec![1.0, 4.0, 16.0, 64.0]] {
            let set = build_direction_set(n, frames, &ladder_profiles(n, &ladder), 1, 2.0)?;
            let mut ratios = Vec::with_capacity(qs.len());
            for q in &qs {
                let det_root = q.determinant().re.powf(1.0 / n as f64);
                ratios.push(gaveau_inf(&ComplexHessian::new(q.clone())?, &set)? / det_root);
            }
            ratios.sort_by(f64::total_cmp);
            println!(
                "frames {frames:4} ladder {ladder:?}: median {:.3}, max {:.3}, min {:.6}",
                ratios[ratios.len() / 2],
                ratios[ratios.len() - 1],
                ratios[0]
            );
        }
    }
    Ok(())
}
