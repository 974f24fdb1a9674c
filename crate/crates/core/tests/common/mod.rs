#![allow(dead_code)]

use degwalk::embedding::{sgns_loss_and_grad, train, EmbeddingMatrix, TokenCorpus, TrainConfig};
use degwalk::eval::{
    classify_nodes, community_match, kmeans, make_link_split, most_similar, predict_links,
    reduce_2d, EdgeOperator, Samples,
};
use degwalk::graph::{karate_club, Graph, GraphBuilder, NodeId};
use degwalk::sampling::{derive_seed, stream_rng, StreamRng};
use degwalk::walk::{generate_corpus, SamplerMode, TransitionModel, WalkConfig, WalkStrategy};
use rand::seq::SliceRandom;
use rand::Rng;

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to relative tolerance
/// `rel`, measured against a coarse composite estimate.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64) -> f64 {
    let panels = 256;
    let h = (b - a) / panels as f64;
    let coarse: f64 = (0..panels)
        .map(|i| {
            let x = a + i as f64 * h;
            h / 6.0 * (f(x) + 4.0 * f(x + 0.5 * h) + f(x + h))
        })
        .sum();
    let tol = rel * coarse.abs().max(f64::MIN_POSITIVE);
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `∫_a^b f(k) dk` through `k = e^t`, which flattens power laws.
pub fn log_quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    simpson(|t: f64| f(t.exp()) * t.exp(), a.ln(), b.ln(), tol)
}

/// Connected random graph: a path through all nodes plus Erdős–Rényi edges.
pub fn random_graph(rng: &mut StreamRng, n: usize, p: f64) -> Graph {
    let mut b = GraphBuilder::new();
    let name = |i: usize| format!("v{i}");
    for i in 0..n {
        b.node(&name(i));
    }
    for i in 1..n {
        b.edge(&name(i - 1), &name(i));
    }
    for i in 0..n {
        for j in i + 2..n {
            if rng.random::<f64>() < p {
                b.edge(&name(i), &name(j));
            }
        }
    }
    b.build().0
}

/// Node2vec weight of `next` after `prev -> current`, from the definition.
pub fn analytic_alpha(g: &Graph, prev: NodeId, next: NodeId, p: f64, q: f64) -> f64 {
    if next == prev {
        1.0 / p
    } else if g.neighbors(prev).contains(&next) {
        1.0
    } else {
        1.0 / q
    }
}

/// Largest total-variation distance between empirical step frequencies and
/// the normalised analytic weights over `cases` random states.
pub fn max_step_tv(cases: usize, draws: usize, mode: SamplerMode, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, 0);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let n = rng.random_range(4..=12);
        let g = random_graph(&mut rng, n, 0.4);
        let p = (rng.random_range(-1.5f64..1.5)).exp();
        let q = (rng.random_range(-1.5f64..1.5)).exp();
        let edges: Vec<(NodeId, NodeId)> = g.edges().collect();
        let (a, b) = edges[rng.random_range(0..edges.len())];
        let (prev, cur) = if rng.random::<bool>() { (a, b) } else { (b, a) };
        let adj = g.neighbors(cur).to_vec();
        let w: Vec<f64> = adj.iter().map(|&x| analytic_alpha(&g, prev, x, p, q)).collect();
        let total: f64 = w.iter().sum();
        let model = TransitionModel::with_mode(&g, p, q, mode).unwrap();
        let mut draw_rng = stream_rng(seed, 1 + case as u64);
        let mut counts = vec![0usize; adj.len()];
        for _ in 0..draws {
            let next = model.sample_step(prev, cur, &mut draw_rng).unwrap();
            counts[adj.iter().position(|&x| x == next).unwrap()] += 1;
        }
        let tv = 0.5
            * counts
                .iter()
                .zip(&w)
                .map(|(&c, &wi)| (c as f64 / draws as f64 - wi / total).abs())
                .sum::<f64>();
        worst = worst.max(tv);
    }
    worst
}

/// Largest norm-wise relative error between the analytic SGNS gradient and
/// central finite differences (step `eps`) over `states` random states.
pub fn max_sgns_gradient_error(states: usize, eps: f64, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..states {
        let d = rng.random_range(2..=16);
        let k = rng.random_range(1..=6);
        let vec_of = |rng: &mut StreamRng| -> Vec<f64> {
            (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let center = vec_of(&mut rng);
        let context = vec_of(&mut rng);
        let negs: Vec<Vec<f64>> = (0..k).map(|_| vec_of(&mut rng)).collect();

        let loss = |c: &[f64], x: &[f64], n: &[Vec<f64>]| {
            let refs: Vec<&[f64]> = n.iter().map(Vec::as_slice).collect();
            sgns_loss_and_grad(c, x, &refs).loss
        };
        let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let g = sgns_loss_and_grad(&center, &context, &refs);

        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        // center
        for i in 0..d {
            let (mut up, mut down) = (center.clone(), center.clone());
            up[i] += eps;
            down[i] -= eps;
            numeric.push((loss(&up, &context, &negs) - loss(&down, &context, &negs)) / (2.0 * eps));
            analytic.push(g.center[i]);
        }
        // context
        for i in 0..d {
            let (mut up, mut down) = (context.clone(), context.clone());
            up[i] += eps;
            down[i] -= eps;
            numeric.push((loss(&center, &up, &negs) - loss(&center, &down, &negs)) / (2.0 * eps));
            analytic.push(g.context[i]);
        }
        // negatives
        for j in 0..k {
            for i in 0..d {
                let (mut up, mut down) = (negs.clone(), negs.clone());
                up[j][i] += eps;
                down[j][i] -= eps;
                numeric.push((loss(&center, &context, &up) - loss(&center, &context, &down)) / (2.0 * eps));
                analytic.push(g.negatives[j][i]);
            }
        }
        let diff = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = analytic
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt())
            .max(1e-12);
        worst = worst.max(diff / scale);
    }
    worst
}

/// Largest |count - mean| / σ of first traversals per directed edge under
/// degree-based scheduling; σ = 0 edges must match exactly (reported as ∞
/// otherwise).
pub fn edge_start_worst_z(graph: &Graph, nwpd: usize, seed: u64) -> f64 {
    let cfg = WalkConfig::new(
        WalkStrategy::DegreeBased {
            walks_per_degree: nwpd,
        },
        1,
    )
    .with_seed(seed);
    let corpus = generate_corpus(graph, &cfg).unwrap();
    let mut counts = std::collections::HashMap::new();
    for w in &corpus.walks {
        *counts.entry((w[0], w[1])).or_insert(0usize) += 1;
    }
    let mut worst: f64 = 0.0;
    for v in graph.nodes() {
        let k = graph.degree(v) as f64;
        let trials = nwpd as f64 * k;
        let mean = trials / k;
        let sigma = (trials * (1.0 / k) * (1.0 - 1.0 / k)).sqrt();
        for &u in graph.neighbors(v) {
            let c = *counts.get(&(v, u)).unwrap_or(&0) as f64;
            let z = if sigma == 0.0 {
                if c == mean {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (c - mean).abs() / sigma
            };
            worst = worst.max(z);
        }
    }
    worst
}

pub struct KarateTrial {
    pub kmeans_correct: usize,
    pub neighbour_same_faction: usize,
    pub embedding: EmbeddingMatrix,
}

/// Degree-based NWPD = 5, WL = 10, d = 32, window 5 on the karate club,
/// then MDS + 2-means against the factions.
pub fn karate_trial(seed: u64) -> KarateTrial {
    let g = karate_club();
    let truth: Vec<usize> = g.labels().iter().map(|l| l.unwrap() as usize).collect();
    let cfg = WalkConfig::new(
        WalkStrategy::DegreeBased {
            walks_per_degree: 5,
        },
        10,
    )
    .with_seed(derive_seed(seed, 1));
    let corpus = generate_corpus(&g, &cfg).unwrap();
    assert_eq!(corpus.len(), 780);
    let tokens = TokenCorpus::from_walks(&corpus, &g).unwrap();
    let tc = TrainConfig {
        dim: 32,
        window: 5,
        seed: derive_seed(seed, 2),
        ..Default::default()
    };
    let emb = train(&tokens, &tc).unwrap().embedding;
    let node_of = |row: usize| g.node_id(&emb.tokens()[row]).unwrap().index();

    let mds = reduce_2d(&emb).unwrap();
    let mut pts = vec![[0.0; 2]; g.num_nodes()];
    for (row, c) in mds.coords.iter().enumerate() {
        pts[node_of(row)] = *c;
    }
    let km = kmeans(&pts, 2, derive_seed(seed, 3)).unwrap();
    let kmeans_correct = community_match(&km.assignments, &truth, 2).unwrap();

    let neighbour_same_faction = (0..emb.num_rows())
        .filter(|&r| {
            let (o, _) = most_similar(&emb, r).unwrap();
            truth[node_of(r)] == truth[node_of(o)]
        })
        .count();
    KarateTrial {
        kmeans_correct,
        neighbour_same_faction,
        embedding: emb,
    }
}

/// Largest relative error between input and MDS pairwise distances.
pub fn mds_distance_error(points: &[Vec<f64>]) -> f64 {
    let rows: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    let mds = degwalk::eval::classical_mds_2d(&rows).unwrap();
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut worst: f64 = 0.0;
    for i in 0..points.len() {
        for j in 0..i {
            let want = dist(&points[i], &points[j]);
            let got = dist(&mds.coords[i], &mds.coords[j]);
            worst = worst.max((want - got).abs() / want.max(1e-300));
        }
    }
    worst
}

/// Rank-2 point cloud in `dim` dimensions: a random planar set mapped by a
/// random linear isometry plus an offset.
pub fn planar_fixture(rng: &mut StreamRng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut e1: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n1 = e1.iter().map(|x| x * x).sum::<f64>().sqrt();
    e1.iter_mut().for_each(|x| *x /= n1);
    let mut e2: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let proj: f64 = e1.iter().zip(&e2).map(|(a, b)| a * b).sum();
    e2.iter_mut().zip(&e1).for_each(|(b, a)| *b -= proj * a);
    let n2 = e2.iter().map(|x| x * x).sum::<f64>().sqrt();
    e2.iter_mut().for_each(|x| *x /= n2);
    let offset: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
    (0..n)
        .map(|_| {
            let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            (0..dim).map(|k| offset[k] + a * e1[k] + b * e2[k]).collect()
        })
        .collect()
}

/// Standard normal draw (Box–Muller).
pub fn gaussian(rng: &mut StreamRng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Balanced random labels over `classes` on Gaussian features.
pub fn random_label_samples(seed: u64, per_class: usize, classes: usize, dim: usize) -> Samples {
    let mut rng = stream_rng(seed, 77);
    let n = per_class * classes;
    let x: Vec<f64> = (0..n * dim).map(|_| gaussian(&mut rng)).collect();
    let mut y: Vec<usize> = (0..n).map(|i| i % classes).collect();
    y.shuffle(&mut rng);
    Samples {
        x,
        dim,
        y,
        class_names: (0..classes).map(|c| format!("c{c}")).collect(),
    }
}

/// Mean node-classification accuracy on random labels over `seeds` seeds.
pub fn classification_chance(seeds: u64) -> f64 {
    let total: f64 = (0..seeds)
        .map(|s| {
            let samples = random_label_samples(s, 50, 7, 8);
            classify_nodes(&samples, 0.8, s).unwrap().accuracy
        })
        .sum();
    total / seeds as f64
}

/// Two-class samples separated with margin at least 1 along a random
/// direction, with noise in the orthogonal directions.
pub fn separable_samples(seed: u64, n: usize, dim: usize) -> Samples {
    let mut rng = stream_rng(seed, 5);
    let mut dir: Vec<f64> = (0..dim).map(|_| gaussian(&mut rng)).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    dir.iter_mut().for_each(|x| *x /= norm);
    let mut x = Vec::with_capacity(n * dim);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let mut v: Vec<f64> = (0..dim).map(|_| gaussian(&mut rng)).collect();
        let along: f64 = v.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let target = if class == 0 { 1.0 } else { -1.0 } * (0.5 + rng.random::<f64>());
        v.iter_mut().zip(&dir).for_each(|(a, d)| *a += (target - along) * d);
        x.extend(v);
        y.push(class);
    }
    Samples {
        x,
        dim,
        y,
        class_names: vec!["pos".into(), "neg".into()],
    }
}

/// Mean link-prediction accuracy of random embeddings on random graphs.
pub fn link_chance(seeds: u64) -> f64 {
    let total: f64 = (0..seeds)
        .map(|s| {
            let mut rng = stream_rng(s, 99);
            let g = random_graph(&mut rng, 150, 0.05);
            let dim = 8;
            let rows: Vec<f64> = (0..g.num_nodes() * dim).map(|_| gaussian(&mut rng)).collect();
            let emb = EmbeddingMatrix::from_rows(g.tokens().to_vec(), dim, rows).unwrap();
            let split = make_link_split(&g, 0.2, s).unwrap();
            predict_links(&emb, &split, EdgeOperator::Hadamard, s)
                .unwrap()
                .accuracy
        })
        .sum();
    total / seeds as f64
}
