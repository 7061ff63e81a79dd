use isac_core::baselines::{bhattacharyya, polar_construct_with_seed, zc_enumerate, DEFAULT_INTERLEAVER_SEED};

use crate::{CliError, InfoArgs};

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn run(args: &InfoArgs) -> Result<(), CliError> {
    let seed = args.interleaver_seed.unwrap_or(DEFAULT_INTERLEAVER_SEED);
    let spec = polar_construct_with_seed(2 * args.k, args.k, seed)?;
    println!("polar code ({}, {}), rate 1/2, BPSK", spec.n_bits, spec.k);
    println!("  construction: Bhattacharyya recursion on BEC(0.5), generator F^(x)n in natural order");
    println!("  decoder: successive cancellation, min-sum check-node rule");
    println!("  information set: {}", join(&spec.info_set));
    let z = bhattacharyya(spec.n_bits);
    let z: Vec<String> = z.iter().map(|v| format!("{v:.4}")).collect();
    println!("  bhattacharyya: {}", z.join(" "));
    println!("  interleaver seed: {}", spec.interleaver_seed);
    println!("  interleaver (position <- coded bit): {}", join(&spec.permutation));

    let roots: Vec<usize> = zc_enumerate(args.n)?.iter().map(|z| z.root).collect();
    println!("zadoff-chu length {}: {} roots", args.n, roots.len());
    println!("  roots: {}", join(&roots));
    Ok(())
}
