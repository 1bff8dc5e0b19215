use std::time::Instant;

use gluenet::logic::{enumerate_linkings, parse_sequent, LinComb};
use gluenet::proofnet::{is_mix_net, is_mll_net, DEFAULT_PAR_BOUND};
use gluenet::semiring::Semiring;
use gluenet::witness::{decide, Decision, Mode};
use rayon::prelude::*;

fn main() {
    let corpus = gluenet::corpus::exhaustive_corpus();
    let slice: Vec<&String> = corpus.iter().step_by(10).collect();
    println!("benchmarking on {} sequents", slice.len());
    let start = Instant::now();
    let (checked, mismatches): (usize, usize) = slice
        .par_iter()
        .map(|text| {
            let s = parse_sequent(text).unwrap();
            let linkings = enumerate_linkings(&s, 8).unwrap().linkings;
            let mut n = 0usize;
            let mut bad = 0usize;
            for l in linkings {
                let mll = is_mll_net(&s, &l, DEFAULT_PAR_BOUND).unwrap();
                let mix = is_mix_net(&s, &l, DEFAULT_PAR_BOUND).unwrap();
                let c = LinComb::single(Semiring::Nat, s.clone(), l);
                let d_mll = matches!(decide(&c, Mode::Mll).unwrap(), Decision::Accept { .. });
                let d_mix = matches!(decide(&c, Mode::Mix).unwrap(), Decision::Accept { .. });
                if d_mll != mll || d_mix != mix {
                    bad += 1;
                    eprintln!("mismatch on {text}");
                }
                n += 1;
            }
            (n, bad)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    println!(
        "{checked} pairs in {:.1}s, {mismatches} mismatches",
        start.elapsed().as_secs_f64()
    );
}
