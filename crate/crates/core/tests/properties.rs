use asymptolab::criteria::{coefficient_pool, eval_f_n, f_n_log2, liminf_probe};
use asymptolab::gallery::circle_grid;
use asymptolab::model::{LatticeModel, LineModel, MetricModel, Point};
use asymptolab::numeric::{detect_limit, subsequence, LogValue, Selector, Sign, ToleranceProfile};
use asymptolab::porosity::{RayRule, RaySet};
use asymptolab::porosity::{default_schedule, longest_gap, porosity_at_infinity};
use asymptolab::pretangent::{
    build_stability_graph, d_tilde, maximal_cliques, maximal_cliques_of, quotient_pool, refine_by_subsequence,
};
use asymptolab::sequence::ScalingSequence;
use proptest::prelude::*;

fn signed(neg: bool, l: f64) -> LogValue {
    LogValue::new(if neg { Sign::Neg } else { Sign::Pos }, l)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn logvalue_sub_matches_f64(la in -50.0f64..50.0, lb in -50.0f64..50.0, na: bool, nb: bool) {
        let (a, b) = (signed(na, la), signed(nb, lb));
        let want = a.to_f64() - b.to_f64();
        let got = a.sub(b).to_f64();
        let scale = want.abs();
        prop_assert!((got - want).abs() <= 1e-12 * scale, "{got} vs {want}");
    }
}

/// `v + c (-1)^n / n^p`
fn oscillating(v: f64, c: f64, p: f64, len: usize) -> Vec<f64> {
    (1..=len).map(|n| v + c * if n % 2 == 0 { 1.0 } else { -1.0 } / (n as f64).powf(p)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subsequence_limits_agree(v in -1e3f64..1e3, c in -5.0f64..5.0, p in 1.0f64..3.0, seed: u64) {
        let profile = ToleranceProfile::default();
        let terms = oscillating(v, c, p, profile.prefix_length);
        let full = detect_limit(&terms, &profile).unwrap();
        if let Some(v) = full.converged() {
            for sel in Selector::battery(seed) {
                let sub = subsequence(&terms, &sel).unwrap();
                let w = detect_limit(&sub, &profile).unwrap().converged();
                prop_assert!(w.is_some(), "{} did not converge", sel.name());
                prop_assert!((v - w.unwrap()).abs() <= 2.0 * profile.eps_rel * (v.abs() + 1.0));
            }
        }
    }

    #[test]
    fn gap_ratio_in_unit_interval_and_monotone(q in 1.1f64..9.0, hs in prop::collection::vec(0.0f64..60.0, 2..12)) {
        for set in [RaySet::geometric(q).unwrap(), RaySet::superexp(q.min(3.0)).unwrap(), RaySet::factorial()] {
            let mut hs = hs.clone();
            hs.sort_by(f64::total_cmp);
            let mut prev = LogValue::ZERO;
            for &h in &hs {
                let h = LogValue::pow2(h);
                let l = longest_gap(&set, h).unwrap();
                let r = l.ratio(h);
                prop_assert!((0.0..=1.0).contains(&r), "l/h = {r}");
                prop_assert!(prev.le(&l));
                prev = l;
            }
        }
    }

    #[test]
    fn porosity_is_scale_invariant(q in 1.2f64..8.0) {
        let profile = ToleranceProfile::default();
        let schedule = default_schedule(40.0);
        let set = RaySet::geometric(q).unwrap();
        let base = porosity_at_infinity(&set, &schedule, &profile).unwrap().value_by_gap_formula;
        for t in [0.5, 3.0] {
            let scaled = porosity_at_infinity(&set.scaled(t).unwrap(), &schedule, &profile).unwrap();
            prop_assert!((scaled.value_by_gap_formula - base).abs() <= 1e-6, "t = {t}");
        }
    }

    #[test]
    fn f_n_dilation_and_bounds(xs in prop::collection::vec(1.0f64..1e6, 2..6), neg in prop::collection::vec(any::<bool>(), 6)) {
        let line = LineModel::new(RaySet::reals(), true, "reals").unwrap();
        let tuple: Vec<Point> = xs.iter().zip(&neg).map(|(&x, &s)| Point::real(if s { -x } else { x })).collect();
        let n = tuple.len();
        let f = eval_f_n(&line, &tuple).unwrap();
        let pairs_exp = (n * (n - 1) / 2) as f64;
        let norms: Vec<LogValue> = tuple.iter().map(|x| line.norm(x)).collect();
        let (lo, hi) = norms.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v.to_f64()), b.max(v.to_f64())));
        let cap = pairs_exp.exp2();
        prop_assert!((0.0..=cap * (1.0 + 1e-12)).contains(&f));
        prop_assert!(f <= cap * lo / hi * (1.0 + 1e-12));

        let mut pairs = Vec::new();
        for (k, x) in tuple.iter().enumerate() {
            for y in &tuple[k + 1..] {
                pairs.push(line.distance(x, y));
            }
        }
        for lambda in [0.01, 1.0, 1e3] {
            let sn: Vec<LogValue> = norms.iter().map(|v| v.scale(lambda)).collect();
            let sp: Vec<LogValue> = pairs.iter().map(|v| v.scale(lambda)).collect();
            let g = f_n_log2(&sn, &sp).exp2();
            prop_assert!((g - f).abs() <= 1e-9 * f.abs(), "lambda {lambda}: {g} vs {f}");
            let scaled: Vec<Point> = tuple.iter().map(|p| match p {
                Point::Real(v) => Point::Real(v.scale(lambda)),
                other => *other,
            }).collect();
            let h = eval_f_n(&line, &scaled).unwrap();
            prop_assert!((h - f).abs() <= 1e-9 * f.abs());
        }
    }

    #[test]
    fn accepted_probes_survive_supersets(k in -6i32..20) {
        let profile = ToleranceProfile::default();
        let r = ScalingSequence::Exp2Poly { a: 0.0, b: 1.0, c: 0.0 };
        let y = (k as f64).exp2();
        let small = RaySet::geometric(2.0).unwrap();
        let bigger = [
            RaySet::new(RayRule::Union { members: vec![RayRule::Geometric { q: 2.0 }, RayRule::Factorial] }).unwrap(),
            RaySet::integers(),
            RaySet::reals(),
        ];
        let probes = [y, 3.0 * y, 0.0];
        let base = liminf_probe(&small, &r, &probes, &profile).unwrap();
        prop_assert!(base[0].accepted);
        for s in &bigger {
            let got = liminf_probe(s, &r, &probes, &profile).unwrap();
            for (a, b) in base.iter().zip(&got) {
                prop_assert!(!a.accepted || b.accepted, "{} lost on {:?}", a.y, s.rule());
            }
        }
    }
}

fn brute_force_cliques(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let is_clique = |m: u32| (0..n).all(|i| (i + 1..n).all(|j| m >> i & 1 == 0 || m >> j & 1 == 0 || adj[i][j]));
    let mut out: Vec<Vec<usize>> = (1u32..1 << n)
        .filter(|&m| is_clique(m) && (0..n).all(|v| m >> v & 1 == 1 || !is_clique(m | 1 << v)))
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cliques_match_brute_force(n in 1usize..=12, density in 0.0f64..1.0, bits in prop::collection::vec(0.0f64..1.0, 66)) {
        let mut adj = vec![vec![false; n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let e = bits[k] < density;
                adj[i][j] = e;
                adj[j][i] = e;
                k += 1;
            }
        }
        let mut got: Vec<Vec<usize>> = maximal_cliques_of(&adj).into_iter().map(|mut c| { c.sort(); c }).collect();
        got.sort();
        prop_assert_eq!(got, brute_force_cliques(&adj));
    }
}

fn pools() -> Vec<(Box<dyn MetricModel>, Vec<Vec<f64>>)> {
    let line: Vec<Vec<f64>> = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0].iter().map(|&c| vec![c]).collect();
    vec![
        (Box::new(LineModel::integers()), line),
        (Box::new(LatticeModel::new(2).unwrap()), circle_grid()),
    ]
}

#[test]
fn alpha0_is_universal_and_samples_are_metric() {
    let profile = ToleranceProfile::polynomial();
    let r = ScalingSequence::linear();
    for (model, grid) in pools() {
        let pool = coefficient_pool(&grid, &r);
        let g = build_stability_graph(model.as_ref(), &pool, &r, &profile).unwrap();
        assert!(g.vertices[0].alpha0);
        for (j, class) in g.vertices.iter().enumerate().skip(1) {
            let w = g.weight(0, j).expect("alpha0 adjacent to every vertex");
            assert!((w - class.d_tilde).abs() <= 2.0 * profile.eps_rel * (1.0 + w));
            let d = d_tilde(model.as_ref(), &class.representative, &r, &profile).unwrap().converged().unwrap();
            assert!((d - class.d_tilde).abs() <= 2.0 * profile.eps_rel * (1.0 + d));
        }
        for sample in maximal_cliques(&g).unwrap() {
            assert!(sample.contains_alpha0);
            assert_eq!(sample.metric_violation(profile.eps_rel), None);
        }
    }
}

#[test]
fn quotient_is_a_fixed_point() {
    let profile = ToleranceProfile::polynomial();
    let r = ScalingSequence::linear();
    for (model, grid) in pools() {
        // duplicate every coefficient so the first pass has merges to make
        let mut pool = coefficient_pool(&grid, &r);
        pool.extend(coefficient_pool(&grid, &r));
        let classes = quotient_pool(model.as_ref(), &pool, &r, &profile).unwrap();
        assert!(classes.len() < pool.len());
        let reps: Vec<_> = classes.iter().map(|c| c.representative.clone()).collect();
        let again = quotient_pool(model.as_ref(), &reps, &r, &profile).unwrap();
        assert_eq!(again.len(), classes.len());
        assert!(again.iter().all(|c| c.alpha0 || c.members.len() == 1));
    }
}

#[test]
fn refinement_preserves_weights() {
    let profile = ToleranceProfile::polynomial();
    let r = ScalingSequence::linear();
    for (model, grid) in pools() {
        let pool = coefficient_pool(&grid, &r);
        for sel in Selector::battery(7) {
            let rf = refine_by_subsequence(model.as_ref(), &pool, &r, &sel, &profile).unwrap();
            assert!(rf.weights_preserved, "{}: {}", sel.name(), rf.max_weight_error);
        }
    }
}
