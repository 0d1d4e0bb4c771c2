mod common;

use common::{b, checks, dec, pow2, rat, scaled_int, sqrt_floor, ulp_of};
use escape_core::chop::chop_at_delta;
use escape_core::config::{Literal, RunConfig};
use escape_core::engine::{run_escape, seed_queue, Verdict};
use escape_core::orbit::{CriticalNeighbourhood, DeltaHit, OrbitState, ParamSegment};
use escape_core::precision::{MPBound, Rounding};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mini(w: &str) -> RunConfig {
    RunConfig { min_width_frac: Literal::new(w).unwrap(), ..RunConfig::default() }
}

#[test]
fn mini_run_tiles_and_every_escape_replays() {
    let r = run_escape(&checks::mini_config()).unwrap();
    checks::tiling(&r);
    assert!(checks::replay_escaped(&r) > 10);
    let ctx = r.config.validate().unwrap();
    for c in &r.classified {
        match c.verdict {
            Verdict::TooSmall => assert!(c.segment.width().upper < ctx.min_width),
            Verdict::Escaped => assert!(c.escape_time.is_some() && c.width_at_escape.is_some()),
            _ => assert!(c.escape_time.is_none()),
        }
    }
}

#[test]
fn thread_count_is_invisible() {
    let cfg = RunConfig { i_max: Some(3000), ..mini("1e-5") };
    assert!(checks::thread_invariance(&cfg) > 0);
    let one = run_escape(&cfg).unwrap();
    let four = run_escape(&RunConfig { threads: 4, ..cfg }).unwrap();
    assert_eq!(one.totals, four.totals);
    assert_eq!(one.stop, four.stop);
}

#[test]
fn escaped_measure_non_increasing_in_n0() {
    let m: Vec<BigRational> = [15u32, 20, 25]
        .iter()
        .map(|&n0| rat(&run_escape(&RunConfig { n0, ..mini("1e-3") }).unwrap().escaped_measure().lower))
        .collect();
    assert!(m[0] >= m[1] && m[1] >= m[2], "{m:?}");
}

#[test]
fn split_half_bookkeeping() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = common::prec(53);
    for _ in 0..1_000_000 {
        let x: f64 = rng.gen_range(-4.0..4.0);
        let y = x + rng.gen_range(1e-12..1.0);
        let seg = ParamSegment::new(
            MPBound::from_f64(x, p, Rounding::Nearest).unwrap(),
            MPBound::from_f64(y, p, Rounding::Nearest).unwrap(),
            3,
        )
        .unwrap();
        let (l, r) = seg.split_half().unwrap();
        assert!(l.lo() == seg.lo() && l.hi() == r.lo() && r.hi() == seg.hi());
        assert!(l.lo() < l.hi() && r.lo() < r.hi());
        assert_eq!((l.certified_iter(), r.certified_iter()), (3, 3));
    }
    let s = ParamSegment::new(b("1.4", 250), b("2", 250), 0).unwrap();
    let (l, r) = s.split_half().unwrap();
    let mid = (rat(s.lo()) + rat(s.hi())) / BigRational::from_integer(BigInt::from(2));
    let err = rat(l.hi()) - &mid;
    assert!(err.clone() <= ulp_of(&mid, 250) && -err <= ulp_of(&mid, 250));
    assert_eq!(r.hi(), s.hi());
    // indivisible: adjacent representable numbers
    let one = MPBound::from_i64(1, p, Rounding::Nearest);
    let next = MPBound::parse("0x1.0000000000001p+0", p, Rounding::Nearest).unwrap();
    assert!(ParamSegment::new(one, next, 0).unwrap().split_half().is_none());
}

#[test]
fn seed_queue_fine_tiling() {
    let ctx = RunConfig::default().validate().unwrap();
    let u = 600_000u64;
    let seeds = seed_queue(&ctx.omega, u).unwrap();
    assert_eq!(seeds.len() as u64, u);
    // every endpoint is a multiple of 2^-260; compare u·width with |Ω| on integers
    let int = |x: &MPBound| scaled_int(x, 260);
    let (lo, hi) = (int(ctx.omega.lo()), int(ctx.omega.hi()));
    let span = &hi - &lo;
    let ulp = (ulp_of(&rat(ctx.omega.hi()), 250) * pow2(260)).to_integer();
    let slack = &ulp * BigInt::from(u);
    let big_u = BigInt::from(u);
    let mut total = BigInt::zero();
    let mut prev = ctx.omega.lo().clone();
    let mut prev_int = lo.clone();
    for s in &seeds {
        assert_eq!(s.lo(), &prev);
        prev = s.hi().clone();
        let next = int(s.hi());
        let w = &next - &prev_int;
        let diff = &w * &big_u - &span;
        assert!(diff <= slack && -diff <= slack);
        total += w;
        prev_int = next;
    }
    assert_eq!(prev, *ctx.omega.hi());
    assert_eq!(total, span);
}

/// Roots of `a - a² = t` on the decreasing branch, bracketed to 2⁻ᴷ.
fn root(t: &BigRational) -> (BigRational, BigRational) {
    let disc = BigRational::one() - BigRational::from_integer(BigInt::from(4)) * t;
    let s = sqrt_floor(&disc);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let lo = (BigRational::one() + &s) * &half;
    let hi = (BigRational::one() + s + pow2(common::K).recip()) * &half;
    (lo, hi)
}

#[test]
fn chop_matches_quadratic_roots() {
    let nb = CriticalNeighbourhood::new(b("0.05", 250)).unwrap();
    let seg = ParamSegment::new(b("0.9", 250), b("1.1", 250), 0).unwrap();
    let st = OrbitState::init(&seg).step(&nb).unwrap();
    assert_eq!(nb.hit(&st), DeltaHit::Hit);
    let d = rat(nb.delta());
    let (left_lo, _) = root(&d);
    let (_, right_hi) = root(&-d.clone());
    for s in [10u32, 20, 30] {
        let r = chop_at_delta(&st, &nb, s);
        let tol = dec("0.2") * pow2(s as u64).recip();
        let (ex_lo, ex_hi) = (rat(r.excluded.lo()), rat(r.excluded.hi()));
        assert!(ex_lo <= left_lo && &left_lo - &ex_lo <= tol, "s = {s}");
        assert!(right_hi <= ex_hi && &ex_hi - &right_hi <= tol, "s = {s}");
        let (l, rt) = (r.left.unwrap(), r.right.unwrap());
        assert!(l.lo() == seg.lo() && l.hi() == r.excluded.lo());
        assert!(rt.lo() == r.excluded.hi() && rt.hi() == seg.hi());
        assert_eq!((l.certified_iter(), rt.certified_iter(), r.excluded.certified_iter()), (1, 1, 0));
    }
}

#[test]
fn chop_side_pieces_are_certified() {
    // every side piece produced along a coarse run maps outside Δ at the hit iterate
    let cfg = RunConfig { subdivisions: 40, i_max: Some(400), ..mini("1e-4") };
    let ctx = cfg.validate().unwrap();
    let seeds = seed_queue(&ctx.omega, cfg.subdivisions).unwrap();
    let mut checked = 0;
    for seg in seeds {
        let mut st = OrbitState::init(&seg);
        while ctx.nb.hit(&st) == DeltaHit::Disjoint && st.n() < 60 {
            match st.step(&ctx.nb) {
                Ok(next) => st = next,
                Err(_) => break,
            }
        }
        if ctx.nb.hit(&st) != DeltaHit::Hit || st.n() == 0 {
            continue;
        }
        let r = chop_at_delta(&st, &ctx.nb, 40);
        for piece in [r.left, r.right].into_iter().flatten() {
            let mut ps = OrbitState::init(&piece);
            let mut ok = true;
            for _ in 0..st.n() {
                match ps.step(&ctx.nb) {
                    Ok(next) => ps = next,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                assert_eq!(ctx.nb.hit(&ps), DeltaHit::Disjoint);
                checked += 1;
            }
        }
    }
    assert!(checked > 10);
}
