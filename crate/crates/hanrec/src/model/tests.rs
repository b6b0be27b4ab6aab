use super::*;
use crate::connector::{discover_all, ConnectorCaps, PotentialPath};
use crate::graph::{Edge, HetGraph, NodeData, RatingScale};
use crate::nn::{AdamHyper, AdamState, Mlp};
use crate::tape::Mode;

/// Five nodes exercising every parameter group: two attributed users, two
/// genre-tagged movies, one movie with an empty genre set (node-table
/// fallback). Both attention channels see first-order and potential members.
pub(crate) fn five_node_fixture() -> HetGraph {
    let user = |i: usize, attrs: Vec<f64>| NodeData {
        external_id: format!("u{}", i),
        node_type: 0,
        attrs: Some(attrs),
        genres: None,
    };
    let movie = |i: usize, genres: Vec<u16>| NodeData {
        external_id: format!("m{}", i),
        node_type: 1,
        attrs: None,
        genres: Some(genres),
    };
    let nodes = vec![
        user(0, vec![0.9, -0.2]),
        user(1, vec![-0.4, 0.7]),
        movie(0, vec![0]),
        movie(1, vec![0, 1]),
        movie(2, vec![]),
    ];
    let s = RatingScale::movielens();
    let lv = |r: f64| s.level_of(r).unwrap() as u8;
    let edges = vec![
        Edge { a: 0, b: 2, level: lv(4.0), relation: 0 },
        Edge { a: 0, b: 3, level: lv(3.0), relation: 0 },
        Edge { a: 1, b: 2, level: lv(2.0), relation: 0 },
        Edge { a: 1, b: 4, level: lv(5.0), relation: 0 },
    ];
    HetGraph::from_parts(
        nodes,
        vec!["user".into(), "movie".into()],
        vec!["rating".into()],
        vec!["Action".into(), "Drama".into()],
        edges,
        s,
    )
    .unwrap()
}

fn fixture_model(d: usize, seed: u64) -> (HetGraph, HanrecModel<f64>, FrozenPools) {
    let g = five_node_fixture();
    let model = HanrecModel::new(&g, d, ConnectVariant::Full, AblationFlags::default(), seed);
    let nprime = discover_all(&g, ConnectorCaps::unlimited(), seed);
    let pools = FrozenPools::build(&g, &nprime, None, seed);
    (g, model, pools)
}

fn zero_mlp(model: &mut HanrecModel<f64>, which: fn(&HanrecModel<f64>) -> Mlp) {
    let mlp = which(model);
    for layer in mlp.layers {
        for pid in [layer.w, layer.b] {
            for v in model.params.get_mut(pid).data_mut() {
                *v = 0.0;
            }
        }
    }
}

#[test]
fn initial_embedding_single_genre_is_that_row() {
    let (g, model, _) = fixture_model(4, 7);
    let m0 = g.require("m0").unwrap();
    let mut tape = Tape::new();
    let h = model.initial_embedding(&mut tape, &g, m0).unwrap();
    let table = model.params.get(model.genre_table.unwrap());
    assert_eq!(tape.value(h).data(), table.row(0));
}

#[test]
fn initial_embedding_two_genres_is_mean() {
    let (g, model, _) = fixture_model(4, 7);
    let m1 = g.require("m1").unwrap();
    let mut tape = Tape::new();
    let h = model.initial_embedding(&mut tape, &g, m1).unwrap();
    let table = model.params.get(model.genre_table.unwrap());
    for (k, &v) in tape.value(h).data().iter().enumerate() {
        let want = (table.get2(0, k) + table.get2(1, k)) / 2.0;
        assert!((v - want).abs() < 1e-15);
    }
}

#[test]
fn initial_embedding_attr_projection_bias() {
    let (g, mut model, _) = fixture_model(4, 7);
    let proj = model.attr_proj.unwrap();
    for v in model.params.get_mut(proj.w).data_mut() {
        *v = 0.0;
    }
    let bias: Vec<f64> = model.params.get(proj.b).data().to_vec();
    let u0 = g.require("u0").unwrap();
    let mut tape = Tape::new();
    let h = model.initial_embedding(&mut tape, &g, u0).unwrap();
    assert_eq!(tape.value(h).data(), bias.as_slice());
}

#[test]
fn initial_embedding_empty_genre_set_falls_back_to_node_table() {
    let (g, model, _) = fixture_model(4, 7);
    let m2 = g.require("m2").unwrap();
    assert_eq!(model.embed_kind(m2), EmbedKind::PlainFallback);
    let mut tape = Tape::new();
    let h = model.initial_embedding(&mut tape, &g, m2).unwrap();
    let table = model.params.get(model.node_table);
    assert_eq!(tape.value(h).data(), table.row(m2));
}

#[test]
fn potential_interaction_output_length_d_for_all_variants() {
    let g = five_node_fixture();
    let path = PotentialPath {
        source: 0,
        via: 2,
        target: 1,
        level_first: 7,
        level_second: 3,
    };
    for variant in [
        ConnectVariant::Full,
        ConnectVariant::FeatureBased,
        ConnectVariant::RelationBased,
    ] {
        let model: HanrecModel<f64> =
            HanrecModel::new(&g, 5, variant, AblationFlags::default(), 3);
        assert_eq!(model.mlp_conn.in_dim(), variant.input_extent(5));
        let mut tape = Tape::new();
        let f = model.potential_interaction(&mut tape, &g, &path).unwrap();
        assert_eq!(tape.value(f).shape(), &[5]);
    }
}

#[test]
fn potential_interaction_zero_weights_yield_bias() {
    let g = five_node_fixture();
    let mut model: HanrecModel<f64> =
        HanrecModel::new(&g, 4, ConnectVariant::Full, AblationFlags::default(), 3);
    zero_mlp(&mut model, |m| m.mlp_conn);
    let bias = vec![0.3, -0.1, 0.8, 0.0];
    model
        .params
        .get_mut(model.mlp_conn.layers[2].b)
        .data_mut()
        .copy_from_slice(&bias);
    for path in [
        PotentialPath { source: 0, via: 2, target: 1, level_first: 7, level_second: 3 },
        PotentialPath { source: 2, via: 0, target: 3, level_first: 7, level_second: 5 },
    ] {
        let mut tape = Tape::new();
        let f = model.potential_interaction(&mut tape, &g, &path).unwrap();
        assert_eq!(tape.value(f).data(), bias.as_slice());
    }
}

#[test]
fn potential_interaction_matches_direct_transcription() {
    // f = MLP(h_k0 ⊕ e_ik ⊕ h_j0 ⊕ e_kj), evaluated independently
    let (g, model, _) = fixture_model(4, 11);
    let path = PotentialPath {
        source: 0,
        via: 2,
        target: 1,
        level_first: 7,
        level_second: 3,
    };
    let mut tape = Tape::new();
    let got = model.potential_interaction(&mut tape, &g, &path).unwrap();

    let h_k = {
        let mut t = Tape::new();
        let h = model.initial_embedding(&mut t, &g, path.via).unwrap();
        t.value(h).data().to_vec()
    };
    let h_j = {
        let mut t = Tape::new();
        let h = model.initial_embedding(&mut t, &g, path.target).unwrap();
        t.value(h).data().to_vec()
    };
    let e = model.params.get(model.rating_table);
    let mut x = h_k;
    x.extend_from_slice(e.row(path.level_first as usize));
    x.extend_from_slice(&h_j);
    x.extend_from_slice(e.row(path.level_second as usize));

    let affine = |layer: &crate::nn::Affine, x: &[f64]| -> Vec<f64> {
        let w = model.params.get(layer.w);
        let b = model.params.get(layer.b);
        (0..layer.out_dim)
            .map(|o| b.data()[o] + (0..layer.in_dim).map(|i| x[i] * w.get2(i, o)).sum::<f64>())
            .collect()
    };
    let prelu = |slope: crate::tape::ParamId, x: Vec<f64>| -> Vec<f64> {
        let s = model.params.get(slope).data()[0];
        x.into_iter().map(|v| if v > 0.0 { v } else { s * v }).collect()
    };
    let h0 = prelu(model.mlp_conn.slopes[0], affine(&model.mlp_conn.layers[0], &x));
    let h1 = prelu(model.mlp_conn.slopes[1], affine(&model.mlp_conn.layers[1], &h0));
    let want = affine(&model.mlp_conn.layers[2], &h1);
    for (a, b) in tape.value(got).data().iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn aggregate_paths_examples() {
    let (g, model, _) = fixture_model(4, 13);
    // single path: equals that path's interaction vector
    let tp = TargetPaths {
        target: 1,
        paths: vec![(2, 7, 3)],
    };
    let mut tape = Tape::new();
    let agg = model.aggregate_paths(&mut tape, &g, &tp).unwrap();
    let single = model
        .potential_interaction(
            &mut tape,
            &g,
            &PotentialPath { source: 0, via: 2, target: 1, level_first: 7, level_second: 3 },
        )
        .unwrap();
    assert_eq!(tape.value(agg).data(), tape.value(single).data());

    // duplicated path: idempotent mean
    let tp2 = TargetPaths {
        target: 1,
        paths: vec![(2, 7, 3), (2, 7, 3)],
    };
    let agg2 = model.aggregate_paths(&mut tape, &g, &tp2).unwrap();
    for (a, b) in tape.value(agg2).data().iter().zip(tape.value(agg).data()) {
        assert!((a - b).abs() < 1e-15);
    }

    // three paths: brute-force average
    let tp3 = TargetPaths {
        target: 1,
        paths: vec![(2, 7, 3), (2, 5, 1), (2, 0, 9)],
    };
    let agg3 = model.aggregate_paths(&mut tape, &g, &tp3).unwrap();
    let mut want = vec![0.0; 4];
    for &(via, l1, l2) in &tp3.paths {
        let f = model
            .potential_interaction(
                &mut tape,
                &g,
                &PotentialPath { source: 0, via, target: 1, level_first: l1, level_second: l2 },
            )
            .unwrap();
        for (w, &v) in want.iter_mut().zip(tape.value(f).data()) {
            *w += v / 3.0;
        }
    }
    for (a, b) in tape.value(agg3).data().iter().zip(&want) {
        assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }

    // empty path list violates the contract
    let empty = TargetPaths { target: 1, paths: vec![] };
    assert!(model.aggregate_paths(&mut tape, &g, &empty).is_err());
}

#[test]
fn interaction_repr_shape_bias_and_level_check() {
    let g = five_node_fixture();
    let mut model: HanrecModel<f64> =
        HanrecModel::new(&g, 4, ConnectVariant::Full, AblationFlags::default(), 5);
    let mut tape = Tape::new();
    // user -> movie goes through the heterogeneous MLP
    let f = model.interaction_repr(&mut tape, &g, 0, 2, 7).unwrap();
    assert_eq!(tape.value(f).shape(), &[4]);
    assert_eq!(model.mlp_hetero.in_dim(), 8);
    // invalid level is a contract error
    assert!(model.interaction_repr(&mut tape, &g, 0, 2, 10).is_err());
    // zero weights + bias
    zero_mlp(&mut model, |m| m.mlp_hetero);
    let bias = vec![1.0, 2.0, 3.0, 4.0];
    model
        .params
        .get_mut(model.mlp_hetero.layers[2].b)
        .data_mut()
        .copy_from_slice(&bias);
    let mut tape = Tape::new();
    let f = model.interaction_repr(&mut tape, &g, 0, 2, 7).unwrap();
    assert_eq!(tape.value(f).data(), bias.as_slice());
}

#[test]
fn attention_logit_zero_params_give_scalar_bias() {
    let g = five_node_fixture();
    let mut model: HanrecModel<f64> =
        HanrecModel::new(&g, 4, ConnectVariant::Full, AblationFlags::default(), 5);
    for pid in [
        model.attn_homo.affine1.w,
        model.attn_homo.affine1.b,
        model.attn_homo.score.w,
    ] {
        for v in model.params.get_mut(pid).data_mut() {
            *v = 0.0;
        }
    }
    model.params.get_mut(model.attn_homo.score.b).data_mut()[0] = -0.75;
    let mut tape = Tape::new();
    let logit = model
        .attention_logit(&mut tape, &g, Channel::Homogeneous, 0, 1)
        .unwrap();
    assert_eq!(tape.value(logit).data(), &[-0.75]);
}

#[test]
fn attention_logit_is_generally_asymmetric() {
    // documented non-property: swapping the endpoints may change the logit
    let (g, model, _) = fixture_model(4, 17);
    let mut tape = Tape::new();
    let ab = model
        .attention_logit(&mut tape, &g, Channel::Heterogeneous, 0, 2)
        .unwrap();
    let ba = model
        .attention_logit(&mut tape, &g, Channel::Heterogeneous, 2, 0)
        .unwrap();
    assert_ne!(tape.value(ab).data()[0], tape.value(ba).data()[0]);
}

#[test]
fn attend_and_pool_empty_singleton_and_dense_oracle() {
    let (g, model, _) = fixture_model(4, 19);
    let mut tape = Tape::new();
    let hc = model.initial_embedding(&mut tape, &g, 0).unwrap();

    // empty pool pools to the zero vector
    let empty = model
        .attend_and_pool(&mut tape, Channel::Homogeneous, hc, &[])
        .unwrap();
    assert_eq!(tape.value(empty).data(), &[0.0; 4]);

    // singleton pool: weight is exactly one
    let h1 = model.initial_embedding(&mut tape, &g, 1).unwrap();
    let f1 = tape.leaf(crate::tensor::Tensor::vector(vec![0.5, -1.0, 2.0, 0.25]));
    let single = model
        .attend_and_pool(&mut tape, Channel::Homogeneous, hc, &[(h1, f1)])
        .unwrap();
    assert_eq!(tape.value(single).data(), tape.value(f1).data());

    // three-member pool equals the brute-force softmax-weighted sum
    let h2 = model.initial_embedding(&mut tape, &g, 2).unwrap();
    let h3 = model.initial_embedding(&mut tape, &g, 3).unwrap();
    let f2 = tape.leaf(crate::tensor::Tensor::vector(vec![1.0, 0.0, -0.5, 0.1]));
    let f3 = tape.leaf(crate::tensor::Tensor::vector(vec![-0.2, 0.9, 0.4, -1.1]));
    let pooled = model
        .attend_and_pool(
            &mut tape,
            Channel::Homogeneous,
            hc,
            &[(h1, f1), (h2, f2), (h3, f3)],
        )
        .unwrap();

    let logit_of = |tape: &mut Tape<f64>, j: usize| -> f64 {
        let l = model
            .attention_logit(tape, &g, Channel::Homogeneous, 0, j)
            .unwrap();
        tape.value(l).data()[0]
    };
    let logits = [logit_of(&mut tape, 1), logit_of(&mut tape, 2), logit_of(&mut tape, 3)];
    let max = logits.iter().cloned().fold(f64::MIN, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let fs = [
        tape.value(f1).data().to_vec(),
        tape.value(f2).data().to_vec(),
        tape.value(f3).data().to_vec(),
    ];
    for k in 0..4 {
        let want: f64 = (0..3).map(|m| exps[m] / z * fs[m][k]).sum();
        assert!((tape.value(pooled).data()[k] - want).abs() < 1e-12);
    }
}

#[test]
fn final_embedding_isolated_node_uses_zero_pools() {
    // a graph with an isolated node: fusion sees h0 ⊕ 0 ⊕ 0
    let g = crate::graph::test_fixtures::bipartite_fixture();
    let model: HanrecModel<f64> =
        HanrecModel::new(&g, 4, ConnectVariant::Full, AblationFlags::default(), 23);
    let nprime = discover_all(&g, ConnectorCaps::unlimited(), 23);
    let pools = FrozenPools::build(&g, &nprime, None, 23);
    let isolated = g.require("user:3").unwrap();

    let mut tape = Tape::new();
    let p = model.final_embedding(&mut tape, &g, &pools, isolated).unwrap();
    assert_eq!(tape.value(p).shape(), &[4]);

    let h0 = model.initial_embedding(&mut tape, &g, isolated).unwrap();
    let zeros = tape.leaf(crate::tensor::Tensor::vector(vec![0.0; 8]));
    let fin = tape.concat(&[h0, zeros]).unwrap();
    let fin2 = tape.reshape(fin, vec![1, 12]).unwrap();
    let want = model.mlp_fusion.forward(&mut tape, &model.params, fin2).unwrap();
    for (a, b) in tape.value(p).data().iter().zip(tape.value(want).data()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn score_pair_contracts() {
    let (g, mut model, pools) = fixture_model(4, 29);
    let mut tape = Tape::new();
    // link mode output lies in [0, 1]
    let s = model
        .score_pair(&mut tape, &g, &pools, 0, 2, TaskMode::Link)
        .unwrap();
    let v = tape.value(s).data()[0];
    assert!((0.0..=1.0).contains(&v));
    // i == j is a contract error
    assert!(model
        .score_pair(&mut tape, &g, &pools, 1, 1, TaskMode::Rating)
        .is_err());
    // zero scoring weights + bias b -> raw = b for every pair
    zero_mlp(&mut model, |m| m.mlp_score);
    model.params.get_mut(model.mlp_score.layers[2].b).data_mut()[0] = 2.5;
    for (i, j) in [(0usize, 2usize), (1, 3), (0, 4)] {
        let mut tape = Tape::new();
        let s = model
            .score_pair(&mut tape, &g, &pools, i, j, TaskMode::Rating)
            .unwrap();
        assert_eq!(tape.value(s).data(), &[2.5]);
    }
}

#[test]
fn batch_loss_examples() {
    let mut tape: Tape<f64> = Tape::new();
    let exact = tape.leaf(crate::tensor::Tensor::vector(vec![3.0, 4.0]));
    let loss = HanrecModel::batch_loss(&mut tape, exact, exact).unwrap();
    assert_eq!(tape.value(loss).data(), &[0.0]);

    let p = tape.leaf(crate::tensor::Tensor::vector(vec![4.0]));
    let t = tape.leaf(crate::tensor::Tensor::vector(vec![3.0]));
    let loss = HanrecModel::batch_loss(&mut tape, p, t).unwrap();
    assert!((tape.value(loss).data()[0] - 0.5).abs() < 1e-15);

    let p = tape.leaf(crate::tensor::Tensor::vector(vec![4.0, 1.0]));
    let t = tape.leaf(crate::tensor::Tensor::vector(vec![3.0, 3.0]));
    let loss = HanrecModel::batch_loss(&mut tape, p, t).unwrap();
    assert!((tape.value(loss).data()[0] - 1.25).abs() < 1e-15);

    let empty = tape.leaf(crate::tensor::Tensor::vector(vec![]));
    assert!(HanrecModel::batch_loss(&mut tape, empty, empty).is_err());
}

#[test]
fn ablation_flags_are_exact() {
    let g = five_node_fixture();
    let nprime = discover_all(&g, ConnectorCaps::unlimited(), 1);
    let pools = FrozenPools::build(&g, &nprime, None, 1);
    let mut rng = crate::rng::stream_rng(0, crate::rng::Stream::Dropout);

    // disabling homogeneous aggregation forces h_B = 0 for all centers
    let m_homo: HanrecModel<f64> = HanrecModel::new(
        &g,
        4,
        ConnectVariant::Full,
        AblationFlags { disable_homo: true, ..Default::default() },
        1,
    );
    let mut tape = Tape::new();
    let fwd = m_homo
        .forward_centers(&mut tape, &g, &pools, &[0, 1, 2, 3, 4], Mode::Eval, 0.0, &mut rng)
        .unwrap();
    assert!(tape.value(fwd.h_homo).data().iter().all(|&v| v == 0.0));
    assert!(tape.value(fwd.h_hetero).data().iter().any(|&v| v != 0.0));

    // disabling the connector empties N'
    let cfg = TrainConfig {
        d: 4,
        iterations: 1,
        batch_size: 2,
        dropout: 0.0,
        flags: AblationFlags { disable_connect: true, ..Default::default() },
        ..Default::default()
    };
    let out: TrainOutput<f64> = train(&g, &cfg).unwrap();
    assert_eq!(out.nprime_pairs, 0);
    assert!(out.pools.potential.iter().all(|t| t.is_empty()));

    // disabling attention yields uniform weights that still sum to one:
    // with equal interaction vectors the pooled value equals the vector
    let m_att: HanrecModel<f64> = HanrecModel::new(
        &g,
        4,
        ConnectVariant::Full,
        AblationFlags { disable_attention: true, ..Default::default() },
        1,
    );
    let mut tape = Tape::new();
    let hc = m_att.initial_embedding(&mut tape, &g, 0).unwrap();
    let h1 = m_att.initial_embedding(&mut tape, &g, 1).unwrap();
    let h2 = m_att.initial_embedding(&mut tape, &g, 2).unwrap();
    let f = tape.leaf(crate::tensor::Tensor::vector(vec![0.4, -0.6, 1.0, 0.0]));
    let pooled = m_att
        .attend_and_pool(&mut tape, Channel::Homogeneous, hc, &[(h1, f), (h2, f)])
        .unwrap();
    for (a, b) in tape.value(pooled).data().iter().zip(tape.value(f).data()) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn train_loss_drops_on_fixture() {
    let g = five_node_fixture();
    let cfg = TrainConfig {
        d: 8,
        lr: 0.01,
        batch_size: 4,
        iterations: 200,
        dropout: 0.0,
        seed: 5,
        caps: ConnectorCaps::unlimited(),
        ..Default::default()
    };
    let out: TrainOutput<f64> = train(&g, &cfg).unwrap();
    let first = out.loss_curve.first().unwrap().1;
    let last = out.loss_curve.last().unwrap().1;
    assert!(
        last < 0.1 * first,
        "loss {} -> {} did not drop below 10%",
        first,
        last
    );
}

#[test]
fn train_is_deterministic() {
    let g = five_node_fixture();
    let cfg = TrainConfig {
        d: 6,
        lr: 0.005,
        batch_size: 3,
        iterations: 40,
        dropout: 0.3,
        seed: 9,
        caps: ConnectorCaps::unlimited(),
        ..Default::default()
    };
    let a: TrainOutput<f64> = train(&g, &cfg).unwrap();
    let b: TrainOutput<f64> = train(&g, &cfg).unwrap();
    assert_eq!(a.loss_curve, b.loss_curve);
    for (pid, _, t) in a.model.params.iter() {
        assert_eq!(t.data(), b.model.params.get(pid).data());
    }
}

#[test]
fn train_config_validation() {
    let g = five_node_fixture();
    for cfg in [
        TrainConfig { lr: 0.0, ..Default::default() },
        TrainConfig { batch_size: 0, ..Default::default() },
        TrainConfig { iterations: 0, ..Default::default() },
        TrainConfig { dropout: 1.0, ..Default::default() },
        TrainConfig { d: 0, ..Default::default() },
    ] {
        assert!(train::<f64>(&g, &cfg).is_err());
    }
    // empty training set
    let empty = g.with_edges(vec![]);
    assert!(train::<f64>(&empty, &TrainConfig::default()).is_err());
}

#[test]
fn zero_lr_adam_leaves_parameters_unchanged() {
    // the optimizer-level form of the "lr = 0 changes nothing" identity;
    // TrainConfig itself requires lr > 0
    let g = five_node_fixture();
    let model: HanrecModel<f64> =
        HanrecModel::new(&g, 4, ConnectVariant::Full, AblationFlags::default(), 2);
    let before: Vec<Vec<f64>> = model.params.iter().map(|(_, _, t)| t.data().to_vec()).collect();
    let nprime = discover_all(&g, ConnectorCaps::unlimited(), 2);
    let pools = FrozenPools::build(&g, &nprime, None, 2);
    let mut model = model;
    let mut adam = AdamState::new(&model.params, AdamHyper { lr: 0.0, ..Default::default() });
    let mut rng = crate::rng::stream_rng(0, crate::rng::Stream::Dropout);
    let mut tape = Tape::new();
    let scores = model
        .score_pairs_batch(
            &mut tape,
            &g,
            &pools,
            &[(0, 2), (1, 4)],
            TaskMode::Rating,
            Mode::Train,
            0.0,
            &mut rng,
        )
        .unwrap();
    let targets = tape.leaf(crate::tensor::Tensor::vector(vec![4.0, 5.0]));
    let loss = HanrecModel::batch_loss(&mut tape, scores, targets).unwrap();
    let grads = tape.backward(loss).unwrap();
    adam.step(&mut model.params, &grads).unwrap();
    for ((_, _, t), want) in model.params.iter().zip(&before) {
        assert_eq!(t.data(), want.as_slice());
    }
}

#[test]
fn global_mean_loses_to_trained_model_on_train_split() {
    let g = five_node_fixture();
    let cfg = TrainConfig {
        d: 8,
        lr: 0.01,
        batch_size: 4,
        iterations: 300,
        dropout: 0.0,
        seed: 5,
        caps: ConnectorCaps::unlimited(),
        ..Default::default()
    };
    let out: TrainOutput<f64> = train(&g, &cfg).unwrap();
    let triples: Vec<(usize, usize, f64)> = g
        .edges()
        .iter()
        .map(|e| (e.a, e.b, g.scale().value_of(e.level as usize)))
        .collect();
    let preds = predict_pairs(&out.model, &g, &out.pools, &triples, TaskMode::Rating).unwrap();
    let model_loss: f64 = preds
        .iter()
        .map(|p| (p.prediction - p.truth).powi(2))
        .sum::<f64>()
        / (2.0 * preds.len() as f64);
    let mean_loss: f64 = triples
        .iter()
        .map(|&(_, _, r)| (out.train_mean - r).powi(2))
        .sum::<f64>()
        / (2.0 * triples.len() as f64);
    assert!(
        model_loss < mean_loss,
        "trained loss {} should beat global-mean loss {}",
        model_loss,
        mean_loss
    );
}

#[test]
fn checkpoint_roundtrip_and_mismatch_rejection() {
    let g = five_node_fixture();
    let cfg = TrainConfig {
        d: 6,
        iterations: 20,
        batch_size: 4,
        dropout: 0.0,
        seed: 3,
        caps: ConnectorCaps::unlimited(),
        ..Default::default()
    };
    let out: TrainOutput<f64> = train(&g, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_checkpoint(&path, &out.model, &cfg, out.train_mean).unwrap();

    let (loaded, loaded_cfg, mean) = load_checkpoint::<f64>(&path, &g).unwrap();
    assert_eq!(loaded_cfg, cfg);
    assert_eq!(mean, out.train_mean);
    for (pid, _, t) in out.model.params.iter() {
        assert_eq!(t.data(), loaded.params.get(pid).data());
    }
    // predictions agree bitwise
    let triples = vec![(0usize, 3usize, 3.0)];
    let p1 = predict_pairs(&out.model, &g, &out.pools, &triples, TaskMode::Rating).unwrap();
    let p2 = predict_pairs(&loaded, &g, &out.pools, &triples, TaskMode::Rating).unwrap();
    assert_eq!(p1[0].prediction, p2[0].prediction);

    // loading against a structurally different graph is rejected
    let other = crate::graph::test_fixtures::bipartite_fixture();
    assert!(load_checkpoint::<f64>(&path, &other).is_err());
}

#[test]
fn gradients_match_finite_differences_on_fixture() {
    // central differences, h = 1e-4, 1e-4 relative tolerance with a 1e-6
    // absolute floor, over a spread of coordinates from every group
    let g = five_node_fixture();
    let model: HanrecModel<f64> =
        HanrecModel::new(&g, 6, ConnectVariant::Full, AblationFlags::default(), 3);
    let nprime = discover_all(&g, ConnectorCaps::unlimited(), 3);
    let pools = FrozenPools::build(&g, &nprime, None, 3);
    let pairs = [(0usize, 2usize), (0, 3), (1, 2), (1, 4)];
    let targets = [4.0, 3.0, 2.0, 5.0];

    let loss_of = |model: &HanrecModel<f64>| -> f64 {
        let mut rng = crate::rng::stream_rng(0, crate::rng::Stream::Dropout);
        let mut tape = Tape::new();
        let scores = model
            .score_pairs_batch(
                &mut tape,
                &g,
                &pools,
                &pairs,
                TaskMode::Rating,
                Mode::Train,
                0.0,
                &mut rng,
            )
            .unwrap();
        let t = tape.leaf(crate::tensor::Tensor::vector(targets.to_vec()));
        let loss = HanrecModel::batch_loss(&mut tape, scores, t).unwrap();
        tape.value(loss).data()[0]
    };

    let mut tape = Tape::new();
    let mut rng = crate::rng::stream_rng(0, crate::rng::Stream::Dropout);
    let scores = model
        .score_pairs_batch(
            &mut tape,
            &g,
            &pools,
            &pairs,
            TaskMode::Rating,
            Mode::Train,
            0.0,
            &mut rng,
        )
        .unwrap();
    let t = tape.leaf(crate::tensor::Tensor::vector(targets.to_vec()));
    let loss = HanrecModel::batch_loss(&mut tape, scores, t).unwrap();
    let grads = tape.backward(loss).unwrap();

    let mut model = model;
    let mut checked = 0usize;
    let n_params = model.params.len();
    let h = 1e-4;
    for pi in 0..n_params {
        let pid = crate::tape::ParamId(pi);
        let numel = model.params.get(pid).numel();
        let stride = (numel / 3).max(1);
        for k in (0..numel).step_by(stride) {
            let orig = model.params.get(pid).data()[k];
            model.params.get_mut(pid).data_mut()[k] = orig + h;
            let up = loss_of(&model);
            model.params.get_mut(pid).data_mut()[k] = orig - h;
            let down = loss_of(&model);
            model.params.get_mut(pid).data_mut()[k] = orig;
            let fd = (up - down) / (2.0 * h);
            let ad = grads.get_or_zeros(pid, model.params.get(pid).shape()).data()[k];
            let tol = 1e-4 * fd.abs().max(ad.abs()) + 1e-6;
            assert!(
                (fd - ad).abs() <= tol,
                "param {} coord {}: fd {} vs ad {}",
                model.params.name(pid),
                k,
                fd,
                ad
            );
            checked += 1;
        }
    }
    assert!(checked >= 60, "only {} coordinates checked", checked);
}
