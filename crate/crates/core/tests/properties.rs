use proptest::prelude::*;

use pattern_forge::completion::{compose_completed, factorize_completed, hom_completed, Completion};
use pattern_forge::freemonad::{free_segal, free_segal_check};
use pattern_forge::io;
use pattern_forge::pattern::{segal_check, Pattern};
use pattern_forge::zoo::{build, graph_seed, object_named, uniform_seed};

fn pat(spec: &str) -> Pattern {
    build(spec.parse().unwrap()).unwrap()
}

fn spec_strategy() -> impl Strategy<Value = String> {
    (prop_oneof![Just("fstar"), Just("delta")], prop_oneof![Just("flat"), Just("natural")], 1usize..=3)
        .prop_map(|(fam, fl, n)| format!("{fam}:{fl}:{n}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn factorization_recomposes(spec in spec_strategy(), pick in any::<prop::sample::Index>()) {
        let p = pat(&spec);
        let c = p.cat();
        let f = pick.index(c.n_morphisms());
        let (l, r) = p.factorize(f).unwrap();
        prop_assert_eq!(c.compose(r, l), f);
        prop_assert!(p.is_inert(l) && p.is_active(r));
    }

    #[test]
    fn pattern_json_is_byte_stable(spec in spec_strategy()) {
        let text = io::save_pattern(&pat(&spec));
        prop_assert_eq!(io::save_pattern(&io::load_pattern(&text).unwrap()), text);
    }

    #[test]
    fn free_categories_on_graphs_are_segal(
        vertices in 1usize..=3,
        raw in prop::collection::vec((0usize..3, 0usize..3), 0..4),
    ) {
        let p = pat("delta:natural:3");
        let edges: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % vertices, b % vertices)).collect();
        let alg = free_segal(&p, &graph_seed(&p, vertices, &edges).unwrap()).unwrap();
        prop_assert!(free_segal_check(&alg).passed());
        // walks of length k: entries of the k-th power of the adjacency matrix
        let one = object_named(&p, "[1]").unwrap();
        let mut adj = vec![vec![0usize; vertices]; vertices];
        for &(a, b) in &edges {
            adj[a][b] += 1;
        }
        let mut power: Vec<Vec<usize>> = (0..vertices).map(|i| (0..vertices).map(|j| usize::from(i == j)).collect()).collect();
        let counts = alg.grade_counts(one);
        for (k, &count) in counts.iter().enumerate() {
            prop_assert_eq!(count, power.iter().flatten().sum::<usize>(), "length {}", k);
            power = power
                .iter()
                .map(|row| (0..vertices).map(|j| row.iter().enumerate().map(|(m, &v)| v * adj[m][j]).sum()).collect())
                .collect();
        }
    }

    #[test]
    fn free_monoid_counts_are_powers(size in 1usize..=3, bound in 1usize..=4) {
        let p = pat(&format!("delta:flat:{bound}"));
        let alg = free_segal(&p, &uniform_seed(&p, size)).unwrap();
        let counts = alg.grade_counts(object_named(&p, "[1]").unwrap());
        let expected: Vec<usize> = (0..=bound as u32).map(|k| size.pow(k)).collect();
        prop_assert_eq!(counts, expected);
    }

    #[test]
    fn free_algebras_as_functors_are_segal(spec in spec_strategy(), size in 1usize..=2) {
        let p = pat(&spec);
        let f = free_segal(&p, &uniform_seed(&p, size)).unwrap().to_graded_functor().unwrap();
        prop_assert!(f.functor.validate().passed());
        prop_assert!(segal_check(&p, &f, p.grade_bound()).passed());
    }

    #[test]
    fn completed_factorization_recomposes(spec in spec_strategy(), pick in any::<prop::sample::Index>()) {
        let p = pat(&spec);
        let cpl = Completion::new(&p);
        let homs: Vec<_> = cpl
            .objects()
            .iter()
            .flat_map(|&x| cpl.objects().iter().map(move |&y| (x, y)))
            .flat_map(|(x, y)| hom_completed(&cpl, x, y))
            .collect();
        prop_assume!(!homs.is_empty());
        let f = homs[pick.index(homs.len())];
        let (i, a) = factorize_completed(&cpl, f).unwrap();
        prop_assert_eq!(compose_completed(&cpl, i, a).unwrap(), f);
        let id = cpl.identity(f.source).unwrap();
        prop_assert_eq!(compose_completed(&cpl, id, f).unwrap(), f);
    }
}
