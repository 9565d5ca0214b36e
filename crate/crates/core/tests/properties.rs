//! Property suites over randomized inputs. Each property is checked against an
//! independent computation or a closed form rather than the routine's own records.

use isolab::cayley::{self, Action, EdgeMode, GroupGraph, Vertex, VertexSet};
use isolab::profiles::{self, Budget, Normalization};
use isolab::{carnot, coarse, curlfit, spectral, wulff};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set_in_box(rng: &mut ChaCha8Rng, d: usize, side: i64) -> VertexSet {
    let p = rng.gen_range(0.15..0.8);
    let mut y = VertexSet::new();
    for x in curlfit::cells(&vec![side as usize; d]) {
        if rng.gen_bool(p) {
            y.insert(Vertex(x.into_iter().map(|v| v as i64).collect()));
        }
    }
    if y.is_empty() {
        y.insert(Vertex(vec![0; d]));
    }
    y
}

/// Endpoint of a random word of the given length.
fn random_element(g: &GroupGraph, rng: &mut ChaCha8Rng, len: usize) -> Vertex {
    let mut v = g.identity();
    for _ in 0..len {
        let s = rng.gen_range(0..g.degree());
        v = g.act(&v, s, Action::Right).unwrap();
    }
    v
}

fn families() -> Vec<GroupGraph> {
    vec![
        GroupGraph::zd_axis(2),
        GroupGraph::heisenberg(),
        GroupGraph::lamplighter(2),
        GroupGraph::semidirect(vec![vec![2, 1], vec![1, 1]]).unwrap(),
        GroupGraph::torus(2, 5),
    ]
}

/// Random `2 × 2` unimodular matrix as a product of elementary row operations.
fn unimodular(rng: &mut ChaCha8Rng) -> cayley::IntMatrix {
    let mut b = cayley::identity_matrix(2);
    for _ in 0..rng.gen_range(1..5) {
        let (i, j) = if rng.gen_bool(0.5) { (0, 1) } else { (1, 0) };
        let s = if rng.gen_bool(0.5) { 1 } else { -1 };
        for c in 0..2 {
            b[i][c] += s * b[j][c];
        }
    }
    b
}

fn brute_directed(y: &VertexSet, stencil: &[Vec<i64>]) -> u64 {
    let mut n = 0;
    for v in y.iter() {
        for s in stencil {
            let w = Vertex(v.0.iter().zip(s).map(|(a, b)| a + b).collect());
            n += u64::from(!y.contains(&w));
        }
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_steps_invert(seed in any::<u64>(), len in 0usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in families() {
            let v = random_element(&g, &mut rng, len);
            for s in 0..g.degree() {
                let inv = g.generators()[s].inverse;
                for action in [Action::Right, Action::Left] {
                    let w = g.act(&g.act(&v, s, action).unwrap(), inv, action).unwrap();
                    prop_assert_eq!(&w, &v);
                }
            }
        }
    }

    #[test]
    fn vertex_edge_sandwich(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in families() {
            let pool: Vec<Vertex> = (0..rng.gen_range(1..25)).map(|_| random_element(&g, &mut rng, 4)).collect();
            let y: VertexSet = pool.into_iter().collect();
            let vb = cayley::vertex_boundary(&g, &y).unwrap().len() as u64;
            let eb = cayley::edge_boundary(&g, &y, EdgeMode::DirectedPairs).unwrap();
            prop_assert!(vb <= eb && eb <= g.degree() as u64 * vb);
        }
    }

    #[test]
    fn directed_equals_undirected_on_simple_graphs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in [GroupGraph::zd_axis(2), GroupGraph::heisenberg(), GroupGraph::zd_axis(3)] {
            let y: VertexSet = (0..rng.gen_range(1..30)).map(|_| random_element(&g, &mut rng, 5)).collect();
            prop_assert_eq!(
                cayley::edge_boundary(&g, &y, EdgeMode::DirectedPairs).unwrap(),
                cayley::edge_boundary(&g, &y, EdgeMode::UndirectedCut).unwrap()
            );
        }
    }

    #[test]
    fn torus_complement_symmetry(seed in any::<u64>(), m in 2u32..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GroupGraph::torus(2, m);
        let all: VertexSet = curlfit::cells(&[m as usize, m as usize])
            .map(|x| Vertex(x.into_iter().map(|v| v as i64).collect()))
            .collect();
        let y = random_set_in_box(&mut rng, 2, i64::from(m));
        let yc = all.difference(&y);
        prop_assert_eq!(
            cayley::edge_boundary(&g, &y, EdgeMode::DirectedPairs).unwrap(),
            cayley::edge_boundary(&g, &yc, EdgeMode::DirectedPairs).unwrap()
        );
    }

    #[test]
    fn unimodular_change_of_basis(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = unimodular(&mut rng);
        let binv = cayley::unimodular_inverse(&b).unwrap();
        let stencil: Vec<Vec<i64>> = (0..2)
            .flat_map(|i| [1i64, -1].map(|s| vec![s * b[0][i], s * b[1][i]]))
            .collect();
        let g = GroupGraph::zd_stencil(stencil.clone()).unwrap();
        let y = random_set_in_box(&mut rng, 2, 6);
        let pulled: VertexSet = y.iter().map(|v| Vertex(cayley::mat_vec(&binv, &v.0))).collect();
        let per = cayley::edge_boundary(&g, &y, EdgeMode::DirectedPairs).unwrap();
        prop_assert_eq!(per, brute_directed(&y, &stencil));
        prop_assert_eq!(per, cayley::edge_boundary(&GroupGraph::zd_axis(2), &pulled, EdgeMode::DirectedPairs).unwrap());
    }

    #[test]
    fn fill_is_below_upward_homotopy(seed in any::<u64>(), n0 in 2usize..4, n1 in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = curlfit::GridComplex::new(vec![n0, n1]).unwrap();
        let c = curlfit::random_cochain(&grid, 1, &mut rng, 5, 3);
        let b = grid.d1(&c).unwrap();
        let fill = curlfit::fill1_exact(&grid, &b).unwrap();
        prop_assert!(fill.certified);
        prop_assert!(fill.value <= grid.h2_up(&b).unwrap().l1());
        prop_assert_eq!(grid.d1(&fill.preimage).unwrap(), b);
    }

    #[test]
    fn curl_fit_respects_operator_bound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sides: Vec<usize> = (0..rng.gen_range(2..=3)).map(|_| rng.gen_range(2..=4)).collect();
        let grid = curlfit::GridComplex::new(sides).unwrap();
        let c = curlfit::random_cochain(&grid, 1, &mut rng, 7, 4);
        prop_assert!(curlfit::curl_fit(&grid, &c).unwrap().within_bound());
    }

    #[test]
    fn vertical_count_is_twice_the_support(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stack = carnot::random_heis_stack(&mut rng, 5, 6);
        let support = stack.columns.iter().filter(|c| c.l[0] >= 1).count() as u64;
        prop_assert_eq!(carnot::vertical_count(&stack).unwrap(), 2 * support);
    }

    #[test]
    fn dirichlet_eigenvalue_drops_on_larger_boxes(a in 1usize..7, b in 1usize..7, grow in 0usize..2) {
        let g = GroupGraph::zd_axis(2);
        let small = [a, b];
        let mut big = small;
        big[grow] += 1;
        let l_small = spectral::dirichlet_lambda1(&g, &spectral::axis_box(&small)).unwrap();
        let l_big = spectral::dirichlet_lambda1(&g, &spectral::axis_box(&big)).unwrap();
        prop_assert!(l_big < l_small);
        prop_assert!((l_small - spectral::box_lambda1(&small)).abs() < 1e-9);
    }

    #[test]
    fn embedding_distance_within_bounds(t in 1usize..3000) {
        let spec = coarse::integer_dyadic_spec(8).unwrap();
        let g = GroupGraph::zd_axis(1);
        let dist = spec.distance(&g, &Vertex(vec![0]), &Vertex(vec![t as i64]), t).unwrap();
        prop_assert!(dist.within(), "{dist:?}");
        prop_assert!(dist.value * dist.value <= t as f64 * spec.lipschitz_sq() * (1.0 + 1e-12));
    }
}

#[test]
fn projection_inequalities_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = GroupGraph::zd_axis(2);
    for _ in 0..10_000 {
        let side = rng.gen_range(1..7);
        let y = random_set_in_box(&mut rng, 2, side);
        let per = cayley::edge_boundary(&g, &y, EdgeMode::DirectedPairs).unwrap();
        let proj = wulff::projection_sizes(&y, 2);
        let n = y.len() as u64;
        assert!((per * per) as f64 >= 16.0 * n as f64 - 1e-9, "Per {per} |Y| {n}");
        assert!(n <= (proj[0] * proj[1]) as u64);
        assert!(per >= 2 * (proj[0] + proj[1]) as u64);
    }
}

#[test]
fn profile_tables_are_consistent() {
    let g = GroupGraph::zd_axis(2);
    let edge = profiles::exact_profile(&g, 8, Normalization::DirectedEdge, Budget::default()).unwrap();
    let vertex = profiles::exact_profile(&g, 8, Normalization::Vertex, Budget::default()).unwrap();
    let delta = g.degree() as u64;
    for t in [&edge, &vertex] {
        assert_eq!(profiles::suffix_min(&t.minorant), t.minorant);
        for r in 1..=t.r_max() {
            let w = &t.witnesses[r - 1];
            assert_eq!(w.len(), r);
            assert_eq!(profiles::boundary_value(&g, w, t.normalization).unwrap(), t.value(r));
            for s in r..=t.r_max() {
                let (lo, hi) = (t.minorant_at(r), t.minorant_at(s));
                assert!(lo <= hi && hi - lo <= delta * (s - r) as u64);
            }
        }
    }
    for r in 1..=8 {
        assert!(vertex.value(r) <= edge.value(r) && edge.value(r) <= delta * vertex.value(r));
    }
}

#[test]
fn tempered_constants_nondecreasing_after_first_step() {
    for d in 1..=2 {
        let rows = coarse::cube_tempered_constants(d, 6).unwrap();
        let vals: Vec<f64> = rows.iter().map(|r| r.ratio.to_f64().unwrap()).collect();
        assert!(vals[1..].windows(2).all(|w| w[0] <= w[1]), "{vals:?}");
    }
}
