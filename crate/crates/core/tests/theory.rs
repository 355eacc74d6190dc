use std::sync::Arc;

use gptcast::channel::{
    cesaro_average, compose, compression, fixed_set, is_idempotent, marginal_channel_a, marginal_channel_b,
    max_abs_difference, range_polytope, symmetrize, tensor_pair, AffineChannel, CESARO_MAX_ITERATIONS,
    CESARO_TOLERANCE,
};
use gptcast::composite::{max_tensor, min_tensor, CompositeSpace};
use gptcast::decide::{broadcaster_exists, extract_simplex_cover, jointly_distinguishable, StateSet, Witness};
use gptcast::polytope::Membership;
use gptcast::random::{random_endochannel, random_state};
use gptcast::scalar::{add, dot, int, kron, rat, scale, sub, vector, Scalar, Vector};
use gptcast::space::{make_classical, make_polygon, make_square_gbit, Effect, StateSpace};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn builtins() -> Vec<Arc<StateSpace>> {
    vec![
        Arc::new(make_classical(2).unwrap()),
        Arc::new(make_classical(3).unwrap()),
        Arc::new(make_square_gbit()),
        Arc::new(make_polygon(3).unwrap()),
        Arc::new(make_polygon(5).unwrap()),
    ]
}

/// Pairs small enough for fast maximal tensor products.
fn builtin_pairs() -> Vec<(Arc<StateSpace>, Arc<StateSpace>)> {
    let s = builtins();
    vec![
        (s[0].clone(), s[2].clone()),
        (s[1].clone(), s[4].clone()),
        (s[2].clone(), s[2].clone()),
        (s[2].clone(), s[0].clone()),
        (s[3].clone(), s[2].clone()),
        (s[4].clone(), s[4].clone()),
    ]
}

#[test]
fn builtin_units_and_classicality() {
    for n in 1..=8 {
        assert!(make_classical(n).unwrap().is_classical());
    }
    for n in 3..=8 {
        assert_eq!(make_polygon(n).unwrap().is_classical(), n == 3, "polygon({n})");
    }
    for s in builtins() {
        for v in s.vertices() {
            assert_eq!(dot(s.unit(), v), int(1));
        }
    }
}

#[test]
fn effect_polytopes_are_extremal_and_closed_under_complement() {
    for s in builtins() {
        let effects = s.effect_polytope_vertices();
        for e in effects {
            let values: Vec<Scalar> = s.vertices().iter().map(|v| e.eval(v)).collect();
            assert!(values.iter().all(|x| *x >= int(0) && *x <= int(1)));
            assert!(values.iter().any(|x| *x == int(0) || *x == int(1)));
            let complement = Effect(sub(s.unit(), &e.0));
            assert!(effects.contains(&complement), "{}: complement missing", s.name());
        }
    }
    assert_eq!(make_classical(3).unwrap().effect_polytope_vertices().len(), 8);
}

#[test]
fn square_polygon_matches_the_square() {
    let diamond = make_polygon(4).unwrap();
    let square = make_square_gbit();
    assert_eq!(diamond.vertices().len(), 4);
    assert_eq!(diamond.effect_polytope_vertices().len(), square.effect_polytope_vertices().len());
    assert_eq!(diamond.omega().hrep().inequalities.len(), 4);
    assert_eq!(diamond.symmetries().len(), square.symmetries().len());
}

#[test]
fn square_max_tensor_structure() {
    let s = Arc::new(make_square_gbit());
    let max = max_tensor(&s, &s);
    let min = min_tensor(&s, &s);
    assert_eq!(max.joint().vertices().len(), 24);
    let (products, entangled): (Vec<&Vector>, Vec<&Vector>) =
        max.joint().vertices().iter().partition(|v| min.joint().vertices().contains(v));
    assert_eq!(products.len(), 16);
    assert_eq!(entangled.len(), 8);
    for v in entangled {
        let Membership::Outside { separator } = min.joint().member(v).unwrap() else {
            panic!("entangled vertex inside the minimal tensor product");
        };
        let at_v = dot(&separator, v);
        assert!(min.joint().vertices().iter().all(|w| dot(&separator, w) < at_v));
        assert_eq!(max.marginal_a(v).unwrap(), s.centroid());
        assert_eq!(max.marginal_b(v).unwrap(), s.centroid());
    }
    let swap = max.swap_channel().unwrap();
    let mut permuted: Vec<Vector> = max.joint().vertices().iter().map(|v| swap.apply(v)).collect();
    permuted.sort();
    assert_eq!(permuted, max.joint().vertices());
}

#[test]
fn classical_factor_collapses_the_sandwich() {
    for (a, b) in builtin_pairs() {
        let equal = min_tensor(&a, &b).joint() == max_tensor(&a, &b).joint();
        if a.is_classical() || b.is_classical() {
            assert!(equal, "{} ⊗ {}", a.name(), b.name());
        }
    }
}

#[test]
fn pure_marginals_factorize() {
    for (a, b) in builtin_pairs() {
        let max = max_tensor(&a, &b);
        for v in max.joint().vertices() {
            let (ma, mb) = (max.marginal_a(v).unwrap(), max.marginal_b(v).unwrap());
            if a.is_pure(&ma) || b.is_pure(&mb) {
                assert_eq!(*v, kron(&ma, &mb), "{} ⊗ {}", a.name(), b.name());
            }
        }
    }
}

#[test]
fn min_inside_max_and_no_signaling() {
    for (a, b) in builtin_pairs() {
        let max = max_tensor(&a, &b);
        let min = min_tensor(&a, &b);
        for v in min.joint().vertices() {
            assert!(max.joint().contains(v));
        }
        for v in max.joint().vertices() {
            let ma = max.marginal_a(v).unwrap();
            for f in b.effect_polytope_vertices() {
                let g = Effect(sub(b.unit(), &f.0));
                for e in a.effect_polytope_vertices() {
                    let split = dot(&kron(&e.0, &f.0), v) + dot(&kron(&e.0, &g.0), v);
                    assert_eq!(split, e.eval(&ma));
                }
            }
        }
    }
}

fn check_compression(t: &AffineChannel) {
    let p = compression(t).unwrap();
    assert!(is_idempotent(&p));
    assert_eq!(range_polytope(&p).unwrap(), fixed_set(t).unwrap());
    assert_eq!(p.matrix().mul(t.matrix()), *p.matrix());
    assert_eq!(t.matrix().mul(p.matrix()), *p.matrix());
    let avg = cesaro_average(t, CESARO_TOLERANCE, CESARO_MAX_ITERATIONS);
    assert!(avg.converged);
    let gap = max_abs_difference(p.matrix(), &avg.matrix);
    assert!(gap < 1e-9, "{}: gap {gap}", t.domain().name());
}

#[test]
fn compression_of_random_endochannels() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for s in builtins() {
        for _ in 0..10 {
            let t = random_endochannel(&mut rng, &s);
            assert!(t.is_valid());
            check_compression(&t);
        }
    }
}

fn random_into_min(rng: &mut ChaCha8Rng, s: &Arc<StateSpace>, min: &CompositeSpace) -> AffineChannel {
    let t1 = random_endochannel(rng, s);
    let t2 = random_endochannel(rng, s);
    let e = s.effect_polytope_vertices()[1].clone();
    let g = Effect(sub(s.unit(), &e.0));
    let copies = [random_state(rng, s), random_state(rng, s)];
    let prep: Vec<Vector> = copies.iter().map(|c| kron(&t1.apply(c), &t2.apply(c))).collect();
    AffineChannel::measure_prepare(s, min.space(), &[e, g], &prep)
}

#[test]
fn channel_operations_preserve_validity() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let s = Arc::new(make_square_gbit());
    let min = min_tensor(&s, &s);
    let max = max_tensor(&s, &s);
    for _ in 0..10 {
        let t1 = random_endochannel(&mut rng, &s);
        let t2 = random_endochannel(&mut rng, &s);
        assert!(compose(&t2, &t1).unwrap().is_valid());
        assert!(tensor_pair(&t1, &t2, &min, &min).unwrap().is_valid());
        assert!(tensor_pair(&t1, &t2, &max, &max).unwrap().is_valid());
        let b = random_into_min(&mut rng, &s, &min);
        assert!(b.is_valid());
        let sym = symmetrize(&b).unwrap();
        assert!(sym.is_valid());
        assert_eq!(symmetrize(&sym).unwrap().matrix(), sym.matrix());
        assert_eq!(marginal_channel_a(&sym).unwrap().matrix(), marginal_channel_b(&sym).unwrap().matrix());
    }
}

#[test]
fn broadcast_set_is_convex() {
    let s = Arc::new(make_square_gbit());
    let max = max_tensor(&s, &s);
    let ss = StateSet::new(s.clone(), vec![vector(&[1, 1, 1]), vector(&[-1, -1, 1])]).unwrap();
    let Some(Witness::Channel(b)) = broadcaster_exists(&ss, &max).unwrap().witness else { panic!() };
    for k in 0..=8 {
        let w = rat(k, 8);
        let p = add(&scale(&ss.states()[0], &w), &scale(&ss.states()[1], &(int(1) - &w)));
        assert!(b.broadcasts(&p));
    }
}

/// Square boundary points hit by the line through two interior points.
fn line_endpoints(p: &[Scalar], q: &[Scalar]) -> (Vector, Vector) {
    let d = sub(q, p);
    let mut t_hi: Option<Scalar> = None;
    let mut t_lo: Option<Scalar> = None;
    for c in 0..2 {
        if d[c] == int(0) {
            continue;
        }
        for bound in [int(1), int(-1)] {
            let t = (bound - &p[c]) / &d[c];
            if t > int(0) {
                t_hi = Some(t_hi.map_or(t.clone(), |h| h.min(t.clone())));
            } else {
                t_lo = Some(t_lo.map_or(t.clone(), |l| l.max(t.clone())));
            }
        }
    }
    let at = |t: Scalar| add(p, &scale(&d, &t));
    (at(t_hi.unwrap()), at(t_lo.unwrap()))
}

fn interior_point() -> impl Strategy<Value = Vector> {
    (-5i64..=5, -5i64..=5).prop_map(|(x, y)| vec![rat(x, 6), rat(y, 6), int(1)])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, failure_persistence: None, ..ProptestConfig::default() })]

    /// Two interior square states are broadcastable exactly when the chord
    /// through them joins opposite edges.
    #[test]
    fn interior_pairs_follow_the_chord_rule(p in interior_point(), q in interior_point()) {
        prop_assume!(p != q);
        let s = Arc::new(make_square_gbit());
        let max = max_tensor(&s, &s);
        let (e1, e2) = line_endpoints(&p, &q);
        let opposite = (0..2).any(|c| &e1[c] * &e1[c] == int(1) && &e1[c] + &e2[c] == int(0));
        let ss = StateSet::new(s.clone(), vec![p, q]).unwrap();
        let report = broadcaster_exists(&ss, &max).unwrap();
        prop_assert_eq!(report.verdict, opposite);
        prop_assert!(report.reverify());
        if let Some(Witness::Channel(b)) = &report.witness {
            let cover = extract_simplex_cover(b, &ss).unwrap();
            let gens = StateSet::new(s.clone(), cover.generators.clone()).unwrap();
            prop_assert!(jointly_distinguishable(&gens).verdict);
        }
    }
}

#[test]
fn random_endochannel_matrices_have_unit_columns_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = Arc::new(make_polygon(5).unwrap());
    for _ in 0..5 {
        let t = random_endochannel(&mut rng, &s);
        let pulled: Vector = t.matrix().covec_mul(s.unit());
        assert_eq!(pulled, s.unit().to_vec());
    }
}
