mod common;

use common::*;
use ontogat::gat::{
    cosine_similarity, Activation, AttentionHead, Matrix, ModelConfig, SiameseModel,
};
use ontogat::gradcheck::random_features;
use ontogat::neighborhood::{build_neighborhood, SubgraphKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn head(rng: &mut ChaCha8Rng, f: usize, fp: usize) -> AttentionHead<f64> {
    let w = Matrix::from_fn(fp, f, |_, _| rng.gen_range(-1.0..1.0));
    let a = (0..2 * fp).map(|_| rng.gen_range(-1.0..1.0)).collect();
    AttentionHead::new(w, a, 0.2).unwrap()
}

fn vectors(rng: &mut ChaCha8Rng, n: usize, f: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..f).map(|_| rng.gen_range(-scale..scale)).collect())
        .collect()
}

proptest! {
    #[test]
    fn attention_sums_to_one(seed in any::<u64>(), n in 1usize..10, f in 1usize..12, fp in 1usize..8, scale in 0.01f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = head(&mut rng, f, fp);
        let centre = vectors(&mut rng, 1, f, scale).pop().unwrap();
        let nb = vectors(&mut rng, n, f, scale);
        let alpha = h.attention_coefficients(&centre, &nb).unwrap();
        prop_assert_eq!(alpha.len(), n);
        prop_assert!((alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(alpha.iter().all(|a| (0.0..=1.0).contains(a)));
    }

    #[test]
    fn head_output_ignores_neighbor_order(seed in any::<u64>(), n in 1usize..10, f in 1usize..12, fp in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = head(&mut rng, f, fp);
        let centre = vectors(&mut rng, 1, f, 1.0).pop().unwrap();
        let nb = vectors(&mut rng, n, f, 1.0);
        let mut shuffled = nb.clone();
        shuffled.reverse();
        shuffled.rotate_left(n / 2);
        for act in [Activation::Elu, Activation::Identity, Activation::Sigmoid, Activation::Tanh] {
            let a = h.output(&centre, &nb, act).unwrap();
            let b = h.output(&centre, &shuffled, act).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn encoder_weights_are_shared(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut config = ModelConfig::new(6);
        config.hidden_dim = 4;
        config.output_dim = 5;
        let model = SiameseModel::<f64>::init(config, rng.gen()).unwrap();
        let g = random_features(&mut rng, 6, 8);
        let u = model.encode(&g).unwrap();
        let v = model.encode(&g.clone()).unwrap();
        prop_assert_eq!(&u, &v);
        let c = cosine_similarity(&u, &v).unwrap();
        prop_assert!((c - 1.0).abs() < 1e-12 || u.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn cosine_is_bounded(seed in any::<u64>(), d in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = vectors(&mut rng, 2, d, 10.0);
        let c = cosine_similarity(&v[0], &v[1]).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c));
    }

    #[test]
    fn neighborhoods_are_bounded_sorted_and_exclude_centre(
        seed in any::<u64>(),
        classes in 1usize..14,
        props in 0usize..6,
        n_max in 1usize..6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = random_ontology(&mut rng, classes, props);
        for class in o.classes() {
            let g = build_neighborhood(&o, &class.id, n_max).unwrap();
            prop_assert_eq!(g.subgraphs().len(), 5);
            for (sub, kind) in g.subgraphs().iter().zip(SubgraphKind::ALL) {
                prop_assert_eq!(sub.kind, kind);
                prop_assert!(sub.members.len() <= n_max);
                prop_assert!(!sub.members.contains(&class.id));
                prop_assert!(sub.members.windows(2).all(|w| w[0] < w[1]));
            }
            prop_assert_eq!(&g, &build_neighborhood(&o, &class.id, n_max).unwrap());
        }
    }
}
