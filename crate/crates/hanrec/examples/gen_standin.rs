// temp calibration probe
use hanrec::graph::{generate_movielens_like, load_movielens, MovielensLikeConfig};
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let dir = std::path::PathBuf::from("/tmp/standin");
    generate_movielens_like(&MovielensLikeConfig::default(), &dir).unwrap();
    println!("generated in {:.2}s", t0.elapsed().as_secs_f64());
    let (g, report) = load_movielens(dir.join("ratings.csv"), dir.join("movies.csv")).unwrap();
    println!("users={} movies={} edges={} genres={} rejected={} warnings={}",
        g.count_of_type("user"), g.count_of_type("movie"), g.edge_count(),
        g.genre_names().len(), report.rejected.len(), report.warnings.len());
    // rating distribution + baseline stats
    let vals: Vec<f64> = g.edges().iter().map(|e| g.scale().value_of(e.level as usize)).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let mae = vals.iter().map(|v| (v - mean).abs()).sum::<f64>() / vals.len() as f64;
    let rmse = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
    println!("global mean={:.4} | global-mean-baseline MAE={:.4} RMSE={:.4}", mean, mae, rmse);
    let mut hist = [0usize; 10];
    for e in g.edges() { hist[e.level as usize] += 1; }
    for (l, c) in hist.iter().enumerate() {
        println!("  {:>4.1}: {:>6} ({:.1}%)", 0.5 + 0.5 * l as f64, c, 100.0 * *c as f64 / vals.len() as f64);
    }
    // user/item-bias oracle MAE (what a bias-only model could reach)
    let mut user_sum = std::collections::HashMap::new();
    let mut movie_sum = std::collections::HashMap::new();
    for e in g.edges() {
        let v = g.scale().value_of(e.level as usize);
        let (a, b) = (e.a, e.b);
        let ue = user_sum.entry(a).or_insert((0.0, 0usize)); ue.0 += v; ue.1 += 1;
        let me = movie_sum.entry(b).or_insert((0.0, 0usize)); me.0 += v; me.1 += 1;
    }
    let mut se = 0.0; let mut ae = 0.0;
    for e in g.edges() {
        let v = g.scale().value_of(e.level as usize);
        let ub = user_sum[&e.a].0 / user_sum[&e.a].1 as f64 - mean;
        let mb = movie_sum[&e.b].0 / movie_sum[&e.b].1 as f64 - mean;
        let pred = (mean + ub + mb).clamp(0.5, 5.0);
        ae += (pred - v).abs(); se += (pred - v) * (pred - v);
    }
    let n = vals.len() as f64;
    println!("in-sample bias-model MAE={:.4} RMSE={:.4}", ae / n, (se / n).sqrt());
}
