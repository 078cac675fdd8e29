use std::collections::BTreeSet;

use lvq_committee::lvq::{prune_threshold, update_weight, vector_stddev, LvqNetwork};
use proptest::collection::vec;
use proptest::prelude::*;

fn network(weights: Vec<Vec<f64>>, classes: usize) -> LvqNetwork {
    let labels = (0..weights.len()).map(|i| i % classes).collect();
    LvqNetwork::from_weights(weights, labels).unwrap()
}

fn brute_nearest(weights: &[Vec<f64>], labels: &[usize], x: &[f64], allowed: &BTreeSet<usize>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, w) in weights.iter().enumerate() {
        if !allowed.contains(&labels[i]) {
            continue;
        }
        let d: f64 = w.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

fn weights_and_input(dim: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (vec(vec(-100i32..100, dim), 1..12), vec(-100i32..100, dim)).prop_map(|(ws, x)| {
        (
            ws.into_iter().map(|w| w.into_iter().map(f64::from).collect()).collect(),
            x.into_iter().map(f64::from).collect(),
        )
    })
}

proptest! {
    #[test]
    fn update_scales_residual(
        (w, x) in (1usize..20).prop_flat_map(|d| (vec(-300.0f64..300.0, d), vec(-300.0f64..300.0, d))),
        rate in 0.0f64..1.0,
        attract: bool,
    ) {
        let mut updated = w.clone();
        update_weight(&mut updated, &x, rate, attract);
        let factor = if attract { 1.0 - rate } else { 1.0 + rate };
        for i in 0..w.len() {
            let before = x[i] - w[i];
            let after = x[i] - updated[i];
            let expected = factor * before;
            prop_assert!((after - expected).abs() <= 1e-12 * before.abs().max(1.0));
        }
    }

    #[test]
    fn classification_is_translation_invariant(
        (ws, x) in weights_and_input(4),
        shift in vec(-50i32..50, 4),
    ) {
        let shift: Vec<f64> = shift.into_iter().map(f64::from).collect();
        let net = network(ws.clone(), 3);
        let moved = network(
            ws.iter().map(|w| w.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect(),
            3,
        );
        let y: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a + b).collect();
        prop_assert_eq!(net.nearest(&x).unwrap().index, moved.nearest(&y).unwrap().index);
    }

    #[test]
    fn restricted_matches_brute_force((ws, x) in weights_and_input(3), mask in vec(any::<bool>(), 4)) {
        let net = network(ws.clone(), 4);
        let allowed: BTreeSet<usize> = (0..4).filter(|&c| mask[c]).collect();
        let expected = brute_nearest(&ws, net.weight_classes(), &x, &allowed);
        match net.classify_restricted(&x, &allowed) {
            Ok(n) => {
                prop_assert_eq!(Some(n.index), expected);
                prop_assert!(allowed.contains(&n.class));
                prop_assert_eq!(n.comparisons, net.weight_classes().iter().filter(|c| allowed.contains(c)).count());
            }
            Err(_) => prop_assert_eq!(expected, None),
        }
    }

    #[test]
    fn restricted_to_everything_is_unrestricted((ws, x) in weights_and_input(5)) {
        let net = network(ws, 3);
        let all: BTreeSet<usize> = (0..3).collect();
        let r = net.classify_restricted(&x, &all).unwrap();
        let u = net.nearest(&x).unwrap();
        prop_assert_eq!(r.index, u.index);
        prop_assert_eq!(r.class, u.class);
    }

    #[test]
    fn prune_keeps_a_subsequence(
        ws in vec(vec(0.0f64..255.0, 6), 1..15),
        images in vec(vec(0.0f64..255.0, 6), 1..8),
    ) {
        let net = network(ws.clone(), 3);
        let tau = prune_threshold(images.iter().map(Vec::as_slice)).unwrap();
        let min = images.iter().map(|i| vector_stddev(i).unwrap()).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(tau, min / 2.0);
        let pruned = net.pruned(tau);
        let kept: Vec<usize> = (0..ws.len()).filter(|&j| vector_stddev(&ws[j]).unwrap() >= tau).collect();
        prop_assert_eq!(pruned.len(), kept.len());
        for (p, &j) in kept.iter().enumerate() {
            prop_assert_eq!(&pruned.weights()[p], &ws[j]);
            prop_assert_eq!(pruned.weight_classes()[p], net.weight_classes()[j]);
        }
    }
}
