//! Embeds the karate club with degree-proportional walks and prints one CSV
//! row per member: MDS coordinates, 2-means cluster, faction and the most
//! similar other member.
//!
//! `cargo run --release --example karate -- [seed]`

use degwalk::embedding::{train, TokenCorpus, TrainConfig};
use degwalk::eval::{community_match, kmeans, most_similar, reduce_2d};
use degwalk::graph::karate_club;
use degwalk::walk::{generate_corpus, WalkConfig, WalkStrategy};

fn main() -> degwalk::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let g = karate_club();
    let cfg = WalkConfig::new(
        WalkStrategy::DegreeBased {
            walks_per_degree: 5,
        },
        10,
    )
    .with_seed(seed);
    let walks = generate_corpus(&g, &cfg)?;
    let tc = TrainConfig {
        dim: 32,
        window: 5,
        seed,
        ..Default::default()
    };
    let emb = train(&TokenCorpus::from_walks(&walks, &g)?, &tc)?.embedding;

    let mds = reduce_2d(&emb)?;
    let km = kmeans(&mds.coords, 2, seed)?;
    let faction = |row: usize| g.label(g.node_id(&emb.tokens()[row]).unwrap()).unwrap() as usize;
    let truth: Vec<usize> = (0..emb.num_rows()).map(faction).collect();

    println!("member,x,y,cluster,faction,most_similar,cosine");
    for (row, [x, y]) in mds.coords.iter().enumerate() {
        let (other, cos) = most_similar(&emb, row)?;
        println!(
            "{},{x:.4},{y:.4},{},{},{},{cos:.4}",
            emb.tokens()[row],
            km.assignments[row],
            g.label_names()[truth[row]],
            emb.tokens()[other]
        );
    }
    eprintln!(
        "{} walks, {} of 34 members in the matching community",
        walks.len(),
        community_match(&km.assignments, &truth, 2)?
    );
    Ok(())
}
