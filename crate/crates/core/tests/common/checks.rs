//! Oracle checks shared by the property tests and the acceptance harness.
//! Each panics on the first violation and returns how many facts it checked.

use super::{orbit_fixed, pow2, prec, rat, rat_f64, Scaled};
use escape_core::config::{Literal, RunConfig};
use escape_core::engine::{run_escape, RunResult, Verdict};
use escape_core::io::{self, Format};
use escape_core::orbit::{CriticalNeighbourhood, DeltaHit, OrbitState, ParamSegment};
use escape_core::precision::{MPBound, MPInterval, Rounding};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P: u32 = 250;

/// Certified states of `seg` until the first hit, failure or `n_max`.
pub fn states(seg: &ParamSegment, nb: &CriticalNeighbourhood, n_max: u32) -> Vec<OrbitState> {
    let mut out = vec![OrbitState::init(seg)];
    while out.len() <= n_max as usize {
        let last = out.last().unwrap();
        if last.n() > 0 && nb.hit(last) == DeltaHit::Hit {
            break;
        }
        match last.step(nb) {
            Ok(s) => out.push(s),
            Err(_) => break,
        }
    }
    out
}

fn random_segment(rng: &mut ChaCha8Rng, log_width: std::ops::Range<f64>) -> ParamSegment {
    let lo: f64 = rng.gen_range(1.4..1.99);
    let width = 10f64.powf(rng.gen_range(log_width));
    ParamSegment::new(
        MPBound::from_f64(lo, prec(P), Rounding::Nearest).unwrap(),
        MPBound::from_f64(lo + width, prec(P), Rounding::Nearest).unwrap(),
        0,
    )
    .unwrap()
}

/// Random parameter of `[lo, hi]` as a 60-bit dyadic rational.
fn sample(rng: &mut ChaCha8Rng, lo: &BigRational, hi: &BigRational) -> BigRational {
    let t = BigRational::new(BigInt::from(rng.gen::<u64>() >> 4), BigInt::one() << 60u32);
    lo + (hi - lo) * t
}

fn nb(delta: &str) -> CriticalNeighbourhood {
    CriticalNeighbourhood::new(super::b(delta, P)).unwrap()
}

/// Interval `+ - × sqr` against exact rationals at a member and all corners.
pub fn interval_soundness(seed: u64, cases: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let value = |rng: &mut ChaCha8Rng| -> f64 { match rng.gen_range(0..4) {
        0 => rng.gen_range(-4.0..4.0),
        1 => rng.gen_range(-1e6..1e6),
        2 => rng.gen_range(-1e-6..1e-6),
        _ => 0.0,
    }};
    for _ in 0..cases {
        let p = prec([4u32, 11, 53, 120][rng.gen_range(0..4)]);
        let pair = |rng: &mut ChaCha8Rng| {
            let (a, b) = (value(rng), value(rng));
            let (lo, hi) = (a.min(b), a.max(b));
            let iv = MPInterval::new(
                MPBound::from_f64(lo, p, Rounding::Down).unwrap(),
                MPBound::from_f64(hi, p, Rounding::Up).unwrap(),
            )
            .unwrap();
            let t: f64 = rng.gen();
            (iv, rat_f64((lo + t * (hi - lo)).clamp(lo, hi)))
        };
        let (x, u) = pair(&mut rng);
        let (y, v) = pair(&mut rng);
        let results = [
            (x.add(&y), &u + &v, 0),
            (x.sub(&y), &u - &v, 1),
            (x.mul(&y), &u * &v, 2),
            (x.sqr(), &u * &u, 3),
        ];
        for (r, truth, op) in results {
            assert!(rat(r.lo()) <= truth && truth <= rat(r.hi()), "op {op}: {x:?} {y:?} -> {r:?}");
            for cu in [x.lo(), x.hi()] {
                for cv in [y.lo(), y.hi()] {
                    let (a, b) = (rat(cu), rat(cv));
                    let t = match op {
                        0 => &a + &b,
                        1 => &a - &b,
                        2 => &a * &b,
                        _ => &a * &a,
                    };
                    assert!(rat(r.lo()) <= t && t <= rat(r.hi()));
                }
            }
        }
    }
    cases * 4
}

/// Widening the operands never shrinks the result.
pub fn inclusion_monotone(seed: u64, cases: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = prec(53);
    let iv = |lo: f64, hi: f64| {
        MPInterval::new(MPBound::from_f64(lo, p, Rounding::Down).unwrap(), MPBound::from_f64(hi, p, Rounding::Up).unwrap())
            .unwrap()
    };
    let inside = |a: &MPInterval, b: &MPInterval| rat(b.lo()) <= rat(a.lo()) && rat(a.hi()) <= rat(b.hi());
    for _ in 0..cases {
        let (a, b): (f64, f64) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let (c, d): (f64, f64) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let (g, h): (f64, f64) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let (x, y) = (iv(a.min(b), a.max(b)), iv(c.min(d), c.max(d)));
        let (xw, yw) = (iv(a.min(b) - g, a.max(b) + h), iv(c.min(d) - h, c.max(d) + g));
        assert!(inside(&x.add(&y), &xw.add(&yw)));
        assert!(inside(&x.sub(&y), &xw.sub(&yw)));
        assert!(inside(&x.mul(&y), &xw.mul(&yw)));
        assert!(inside(&x.sqr(), &xw.sqr()));
    }
    cases * 4
}

/// Sampled parameters have reference orbits inside the hull and the endpoint
/// enclosures at every certified iterate.
pub fn orbit_containment(seed: u64, segments: usize, params: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = nb("1e-3");
    let mut checked = 0;
    for _ in 0..segments {
        let seg = random_segment(&mut rng, -7.0..-3.0);
        let sts = states(&seg, &delta, 40);
        let n_last = sts.last().unwrap().n();
        let (slo, shi) = (rat(seg.lo()), rat(seg.hi()));
        let enc: Vec<_> = sts
            .iter()
            .map(|s| {
                let (first, second) = s.ordered_endpoint_enclosures();
                let sc = |x: &MPBound| Scaled::new(&rat(x));
                (sc(s.hull().lo()), sc(s.hull().hi()), sc(first.lo()), sc(second.hi()))
            })
            .collect();
        for _ in 0..params {
            let a = sample(&mut rng, &slo, &shi);
            let orbit = orbit_fixed(&a, n_last);
            for (n, (hl, hh, el, eh)) in enc.iter().enumerate() {
                assert!(orbit[n].within(hl, hh), "c_{n}(a) outside hull");
                assert!(orbit[n].within(el, eh), "c_{n}(a) outside endpoint enclosures");
                checked += 1;
            }
        }
    }
    checked
}

/// By the mean value theorem `(c_n(a+h) - c_n(a-h)) / 2h = c_n'(ξ)` for some
/// ξ in the segment, so the quotient lies in the derivative enclosure.
pub fn derivative_quotients(seed: u64, segments: usize, points: u32, n_max: u32) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = nb("1e-3");
    let mut checked = 0;
    for _ in 0..segments {
        let seg = random_segment(&mut rng, -7.0..-4.0);
        let sts = states(&seg, &delta, n_max);
        let (slo, shi) = (rat(seg.lo()), rat(seg.hi()));
        let h = (&shi - &slo) * BigRational::new(BigInt::one(), BigInt::from(1_000_000));
        let two_h = &h * BigRational::from_integer(BigInt::from(2));
        for k in 1..=points {
            let a = &slo + (&shi - &slo) * BigRational::new(BigInt::from(k), BigInt::from(points + 1));
            let plus = orbit_fixed(&(&a + &h), n_max);
            let minus = orbit_fixed(&(&a - &h), n_max);
            for s in sts.iter().skip(1) {
                let n = s.n() as usize;
                let d_lo = Scaled::new(&(rat(s.deriv().lo()) * &two_h));
                let d_hi = Scaled::new(&(rat(s.deriv().hi()) * &two_h));
                assert!(&plus[n].lo - &minus[n].hi >= d_lo.ceil, "n = {n}");
                assert!(&plus[n].hi - &minus[n].lo <= d_hi.floor, "n = {n}");
                checked += 1;
            }
        }
    }
    checked
}

pub fn mini_config() -> RunConfig {
    RunConfig { min_width_frac: Literal::new("1e-3").unwrap(), ..RunConfig::default() }
}

/// Output segments are adjacent, start and end at Ω and sum to |Ω| exactly.
pub fn tiling(r: &RunResult) -> usize {
    let ctx = r.config.validate().unwrap();
    let segs: Vec<&ParamSegment> = r.classified.iter().map(|c| &c.segment).collect();
    assert_eq!(segs[0].lo(), ctx.omega.lo());
    assert_eq!(segs[segs.len() - 1].hi(), ctx.omega.hi());
    for w in segs.windows(2) {
        assert_eq!(w[0].hi(), w[1].lo());
    }
    let total: BigRational = segs.iter().map(|s| rat(s.hi()) - rat(s.lo())).sum();
    assert_eq!(total, rat(ctx.omega.hi()) - rat(ctx.omega.lo()));
    segs.len()
}

/// Every ESCAPED segment replays from scratch, and the reference endpoint
/// orbits are at least √δ apart at the escape time.
pub fn replay_escaped(r: &RunResult) -> usize {
    let ctx = r.config.validate().unwrap();
    let nb = &ctx.nb;
    let delta = rat(nb.delta());
    let mut escaped = 0;
    for c in r.classified.iter().filter(|c| c.verdict == Verdict::Escaped) {
        let n = c.escape_time.unwrap();
        assert!(n >= r.config.n0);
        let mut st = OrbitState::init(&c.segment);
        for _ in 0..n {
            assert_eq!(nb.hit(&st), DeltaHit::Disjoint, "early hit at {}", st.n());
            st = st.step(nb).unwrap();
        }
        assert_eq!(nb.hit(&st), DeltaHit::Hit);
        assert!(st.escape_check(nb, r.config.n0));
        assert_eq!(&st.monotone_width(), c.width_at_escape.as_ref().unwrap());
        let lo = &orbit_fixed(&rat(c.segment.lo()), n)[n as usize];
        let hi = &orbit_fixed(&rat(c.segment.hi()), n)[n as usize];
        let sep = std::cmp::max(&lo.lo - &hi.hi, &hi.lo - &lo.hi);
        assert!(sep > BigInt::zero());
        let sep = BigRational::from_integer(sep) / pow2(super::K);
        assert!(&sep * &sep >= delta);
        escaped += 1;
    }
    escaped
}

/// Results files at one and four threads are byte-identical.
pub fn thread_invariance(config: &RunConfig) -> usize {
    let bytes = |threads| {
        let r = run_escape(&RunConfig { threads, ..config.clone() }).unwrap();
        let mut out = Vec::new();
        io::write_results(&mut out, &r.classified, Format::Csv).unwrap();
        (out, r.processed, r.max_queue_depth)
    };
    let one = bytes(1);
    assert!(one == bytes(4), "outputs differ between 1 and 4 threads");
    one.0.len()
}
