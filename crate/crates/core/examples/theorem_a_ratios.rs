//! Ratio of the empirical modulus of a solution to the bound built from the
//! moduli of its data, over the `t` grid, for a configurable problem.
//!
//! cargo run --release --example theorem_a_ratios -- [--set key=value ...]

use shl_monge::config::parse_config;
use shl_monge::verify::theorem_a_suite;

fn main() -> shl_monge::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).filter(|a| a != "--set").collect();
    let mut cfg = parse_config("n = 2\ndomain.kind = ball\ngrid.h = 0.2\nphi.kind = example47_sqrt\nf.kind = zero\n")?;
    let pairs: Vec<(&str, &str)> = args.iter().filter_map(|a| a.split_once('=')).collect();
    cfg = cfg.with_all(&pairs)?;
    let out = theorem_a_suite(&cfg)?;
    let v = &out.theorem_a.verdict;
    for (t, r) in v.ts.iter().zip(&v.ratios) {
        println!("t = {t:.3}  ratio {r:.4}");
    }
    println!("max ratio {:.4} (cap {}), blow-up {}", v.max_ratio, v.cap, v.blow_up);
    println!("{}", out.verdict.to_text());
    Ok(())
}
