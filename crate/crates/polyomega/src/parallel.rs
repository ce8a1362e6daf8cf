//! Segment-parallel window sieving. Segments are sieved independently and
//! merged in ascending order, so results do not depend on the thread count.

use rayon::prelude::*;

use polyomega_core::asymptotics::{
    assemble_report, estimate_profile, profile_extent, window_length, TheoremParams, VerifyReport, YRule,
};
use polyomega_core::window::{JointHistogram, WindowSieve, WindowSpec};
use polyomega_core::PolySystem;

use crate::Error;

pub fn pool(threads: usize) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(Error::compute)
}

/// Joint histogram of the window and the excluded `n`, in the calling pool.
pub fn window_histogram(system: &PolySystem, spec: &WindowSpec) -> Result<(JointHistogram, Vec<u64>), Error> {
    let sieve = WindowSieve::new(system, spec).map_err(Error::compute)?;
    let blocks = WindowSieve::segments(spec)
        .into_par_iter()
        .map(|(start, len)| sieve.block(start, len, false).map(|b| (b.histogram(), b.excluded)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Error::compute)?;
    let mut h = JointHistogram::empty(system.r(), spec.x, spec.y);
    let mut excluded = Vec::new();
    for (counts, ex) in blocks {
        h.add_counts(&counts).map_err(Error::compute)?;
        excluded.extend(ex);
    }
    Ok((h, excluded))
}

/// Theorem audit over `xs` with every window sieved in parallel.
pub fn verify(
    system: &PolySystem,
    xs: &[u64],
    y_rule: YRule,
    params: &TheoremParams,
    epsilon: Option<f64>,
) -> Result<VerifyReport, Error> {
    params.validate().map_err(Error::compute)?;
    let profile = estimate_profile(system, profile_extent(xs, y_rule, params.alpha));
    let histograms = xs
        .iter()
        .map(|&x| {
            let y = window_length(y_rule, x, params.alpha);
            let spec = WindowSpec::new(system, x, y, params.alpha, epsilon).map_err(Error::compute)?;
            window_histogram(system, &spec).map(|(h, _)| h)
        })
        .collect::<Result<Vec<_>, _>>()?;
    assemble_report(system, params, y_rule, &profile, &histograms).map_err(Error::compute)
}

#[cfg(test)]
mod tests {
    use super::*;
    use polyomega_core::polyarith::{parse_system, validate_system};

    #[test]
    fn matches_sequential_for_any_thread_count() {
        let s = validate_system(parse_system("0,1;1,1").unwrap(), 0).unwrap();
        let spec = WindowSpec::new(&s, 1000, 200_000, 0.5, None).unwrap();
        let seq = polyomega_core::window::window_histogram(&s, &spec).unwrap();
        for threads in [1, 3] {
            let (par, excluded) = pool(threads).unwrap().install(|| window_histogram(&s, &spec)).unwrap();
            assert_eq!(par, seq);
            assert!(excluded.is_empty());
        }
    }

    #[test]
    fn verify_matches_core() {
        let s = validate_system(parse_system("0,1").unwrap(), 0).unwrap();
        let params = TheoremParams::defaults_for(&s);
        let ours = verify(&s, &[1000, 50_000], YRule::Full, &params, None).unwrap();
        let core = polyomega_core::asymptotics::verify_theorem(&s, &[1000, 50_000], YRule::Full, &params).unwrap();
        assert_eq!(ours, core);
    }
}
