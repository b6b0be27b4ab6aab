//! Synthetic graph generators.
//!
//! - [`generate_synthetic`]: planted-partition graph over two node types,
//!   used by the link-prediction harness. Same-community pairs connect with
//!   `intra` probability, cross-community pairs with `inter`; attribute
//!   vectors are noisy community indicators.
//! - [`generate_movielens_like`]: a rating corpus in the MovieLens file
//!   layout (users, genre-tagged movies, half-step ratings) with planted
//!   user/item biases, taste-community structure, and calibrated noise.
//!   Stands in for the real corpus where the harness needs one at scale.

use super::{Edge, HetGraph, NodeData, RatingScale};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthConfig {
    pub communities: usize,
    /// Nodes per node type (two types are generated).
    pub nodes_per_type: usize,
    /// Connection probability for same-community pairs.
    pub intra: f64,
    /// Connection probability for cross-community pairs; must be < intra.
    pub inter: f64,
    /// 0 → binary edges; > 0 → half-step ratings shifted up for
    /// same-community pairs and down for cross-community pairs.
    pub rating_bias: f64,
    /// Std of the Gaussian noise added to the community-indicator attributes.
    pub attr_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            communities: 2,
            nodes_per_type: 200,
            intra: 0.1,
            inter: 0.01,
            rating_bias: 0.0,
            attr_noise: 0.3,
            seed: 0,
        }
    }
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<HetGraph> {
    if cfg.communities == 0 || cfg.nodes_per_type == 0 {
        return Err(Error::Config("communities and nodes_per_type must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.intra) || !(0.0..=1.0).contains(&cfg.inter) {
        return Err(Error::Config("edge probabilities must lie in [0, 1]".into()));
    }
    if cfg.intra <= cfg.inter {
        return Err(Error::Config("intra probability must exceed inter".into()));
    }
    let mut rng = stream_rng(cfg.seed, Stream::Synthetic);
    let noise = Normal::new(0.0, cfg.attr_noise.max(1e-12)).expect("std > 0");

    let n = cfg.nodes_per_type;
    let total = 2 * n;
    let community = |v: usize| (v % n) % cfg.communities;
    let mut nodes = Vec::with_capacity(total);
    for v in 0..total {
        let c = community(v);
        let mut attrs = vec![0.0; cfg.communities];
        attrs[c] = 1.0;
        for a in attrs.iter_mut() {
            *a += noise.sample(&mut rng);
        }
        let (type_tag, local) = if v < n { (0u16, v) } else { (1u16, v - n) };
        nodes.push(NodeData {
            external_id: format!("{}{}", if type_tag == 0 { "left:" } else { "right:" }, local),
            node_type: type_tag,
            attrs: Some(attrs),
            genres: None,
        });
    }

    let scale = if cfg.rating_bias > 0.0 {
        RatingScale::movielens()
    } else {
        RatingScale::binary()
    };
    let rating_noise = Normal::new(0.0, 0.5).expect("std > 0");
    let mut edges = Vec::new();
    for a in 0..total {
        for b in (a + 1)..total {
            let p = if community(a) == community(b) {
                cfg.intra
            } else {
                cfg.inter
            };
            if rng.gen::<f64>() >= p {
                continue;
            }
            let level = if scale.is_binary() {
                0
            } else {
                let shift = if community(a) == community(b) {
                    cfg.rating_bias
                } else {
                    -cfg.rating_bias
                };
                let raw = 3.0 + shift + rating_noise.sample(&mut rng);
                let snapped = (raw / scale.step).round() * scale.step;
                scale.level_of(scale.clamp(snapped)).expect("clamped to scale") as u8
            };
            edges.push(Edge {
                a,
                b,
                level,
                relation: 0,
            });
        }
    }

    HetGraph::from_parts(
        nodes,
        vec!["left".into(), "right".into()],
        vec!["link".into()],
        vec![],
        edges,
        scale,
    )
}

/// Write a planted-partition graph as typed edge-list files
/// (`nodes.tsv` + `edges.tsv`) under `dir`.
pub fn write_synthetic_tsv(g: &HetGraph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut nf = std::fs::File::create(dir.join("nodes.tsv"))?;
    for node in g.nodes() {
        let attrs = node
            .attrs
            .as_ref()
            .map(|a| {
                a.iter()
                    .map(|v| format!("{}", v))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .unwrap_or_default();
        writeln!(
            nf,
            "{}\t{}\t{}",
            node.external_id,
            g.type_name(node.node_type),
            attrs
        )?;
    }
    let mut ef = std::fs::File::create(dir.join("edges.tsv"))?;
    for e in g.edges() {
        writeln!(
            ef,
            "{}\t{}\t{}",
            g.node(e.a).external_id,
            g.node(e.b).external_id,
            g.relation_names()[e.relation as usize]
        )?;
    }
    Ok(())
}

/// Shape and noise profile of the rating corpus emitted by
/// [`generate_movielens_like`]. Defaults reproduce the standard small-corpus
/// shape: 610 users, 9,742 listed movies of which 9,724 receive at least one
/// of the 100,836 ratings.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MovielensLikeConfig {
    pub users: usize,
    pub listed_movies: usize,
    pub rated_movies: usize,
    pub ratings: usize,
    pub seed: u64,
    /// Number of taste archetypes users cluster around.
    pub archetypes: usize,
    pub user_bias_std: f64,
    pub movie_bias_std: f64,
    /// Scale of the user-taste × movie-genre affinity term.
    pub affinity: f64,
    /// Std of the irreducible rating noise.
    pub noise_std: f64,
}

impl Default for MovielensLikeConfig {
    fn default() -> Self {
        MovielensLikeConfig {
            users: 610,
            listed_movies: 9742,
            rated_movies: 9724,
            ratings: 100_836,
            seed: 2024,
            archetypes: 8,
            user_bias_std: 0.50,
            movie_bias_std: 0.42,
            affinity: 1.1,
            noise_std: 0.80,
        }
    }
}

const GENRES: [&str; 18] = [
    "Action",
    "Adventure",
    "Animation",
    "Children",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

/// Emit `ratings.csv` and `movies.csv` under `dir` in the MovieLens layout.
pub fn generate_movielens_like(cfg: &MovielensLikeConfig, dir: impl AsRef<Path>) -> Result<()> {
    if cfg.rated_movies > cfg.listed_movies {
        return Err(Error::Config("rated_movies exceeds listed_movies".into()));
    }
    if cfg.ratings < cfg.users * 20 {
        return Err(Error::Config("need at least 20 ratings per user".into()));
    }
    if cfg.rated_movies > cfg.ratings {
        return Err(Error::Config("cannot cover rated_movies with fewer ratings".into()));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut rng = stream_rng(cfg.seed, Stream::Synthetic);
    let n_genres = GENRES.len();
    let normal = |std: f64| Normal::new(0.0, std).expect("std > 0");

    // Movie metadata: 1-3 genres each, popularity ~ Zipf over a shuffled rank.
    let genre_weights: Vec<f64> = (0..n_genres).map(|i| 1.0 / (1.0 + i as f64 * 0.35)).collect();
    let mut movie_genres: Vec<Vec<u16>> = Vec::with_capacity(cfg.listed_movies);
    for _ in 0..cfg.listed_movies {
        let count = match rng.gen::<f64>() {
            x if x < 0.45 => 1,
            x if x < 0.80 => 2,
            _ => 3,
        };
        let mut chosen: Vec<u16> = Vec::with_capacity(count);
        while chosen.len() < count {
            let total: f64 = genre_weights.iter().sum();
            let mut pick = rng.gen::<f64>() * total;
            let mut g = 0usize;
            for (i, w) in genre_weights.iter().enumerate() {
                pick -= w;
                if pick <= 0.0 {
                    g = i;
                    break;
                }
            }
            if !chosen.contains(&(g as u16)) {
                chosen.push(g as u16);
            }
        }
        chosen.sort_unstable();
        movie_genres.push(chosen);
    }

    let movie_bias_dist = normal(cfg.movie_bias_std);
    let movie_bias: Vec<f64> = (0..cfg.listed_movies)
        .map(|_| movie_bias_dist.sample(&mut rng))
        .collect();
    // popularity rank permutation -> Zipf-ish weights
    let mut rank: Vec<usize> = (0..cfg.listed_movies).collect();
    use rand::seq::SliceRandom;
    rank.shuffle(&mut rng);
    let mut popularity = vec![0.0; cfg.listed_movies];
    for (r, &m) in rank.iter().enumerate() {
        popularity[m] = 1.0 / (1.0 + r as f64).powf(0.85);
    }

    // User tastes: archetype vector + personal deviation; heavy-tailed degrees.
    let arch_dist = normal(0.6);
    let archetype: Vec<Vec<f64>> = (0..cfg.archetypes)
        .map(|_| (0..n_genres).map(|_| arch_dist.sample(&mut rng)).collect())
        .collect();
    let personal = normal(0.25);
    let user_pref: Vec<Vec<f64>> = (0..cfg.users)
        .map(|u| {
            let base = &archetype[u % cfg.archetypes];
            base.iter().map(|&v| v + personal.sample(&mut rng)).collect()
        })
        .collect();
    let user_bias_dist = normal(cfg.user_bias_std);
    let user_bias: Vec<f64> = (0..cfg.users).map(|_| user_bias_dist.sample(&mut rng)).collect();

    // Degrees: 20 + heavy tail, adjusted to hit the exact rating count.
    let mut degrees: Vec<usize> = (0..cfg.users)
        .map(|_| {
            let tail = (-rng.gen::<f64>().ln()).powf(2.2) * 55.0;
            20 + tail.min(cfg.rated_movies as f64 * 0.35) as usize
        })
        .collect();
    let mut total: isize = degrees.iter().sum::<usize>() as isize;
    let want = cfg.ratings as isize;
    let mut u = 0usize;
    while total != want {
        let d = &mut degrees[u % cfg.users];
        if total < want && *d < cfg.rated_movies {
            *d += 1;
            total += 1;
        } else if total > want && *d > 20 {
            *d -= 1;
            total -= 1;
        }
        u += 1;
    }

    // Per-user weighted sample without replacement (exponential-key top-k).
    let mut picks: Vec<Vec<usize>> = Vec::with_capacity(cfg.users);
    for &d in degrees.iter() {
        let mut keyed: Vec<(f64, usize)> = (0..cfg.listed_movies)
            .map(|m| {
                let key = rng.gen::<f64>().powf(1.0 / popularity[m]);
                (key, m)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        picks.push(keyed[..d].iter().map(|&(_, m)| m).collect());
    }

    // Force coverage of exactly `rated_movies` distinct movies.
    let mut covered = vec![false; cfg.listed_movies];
    let mut count_per_movie = vec![0usize; cfg.listed_movies];
    for set in &picks {
        for &m in set {
            covered[m] = true;
            count_per_movie[m] += 1;
        }
    }
    let mut uncovered: Vec<usize> = (0..cfg.listed_movies).filter(|&m| !covered[m]).collect();
    let allowed_uncovered = cfg.listed_movies - cfg.rated_movies;
    let mut donor = 0usize;
    while uncovered.len() > allowed_uncovered {
        // too few distinct movies rated: retarget redundant picks
        let m_new = uncovered.pop().expect("nonempty");
        loop {
            let user = donor % cfg.users;
            donor += 1;
            let set = &mut picks[user];
            let (slot, _) = set
                .iter()
                .enumerate()
                .max_by_key(|&(_, &m)| count_per_movie[m])
                .expect("user has picks");
            let m_old = set[slot];
            if count_per_movie[m_old] <= 1 || set.contains(&m_new) {
                continue;
            }
            count_per_movie[m_old] -= 1;
            count_per_movie[m_new] += 1;
            set[slot] = m_new;
            covered[m_new] = true;
            break;
        }
    }
    while uncovered.len() < allowed_uncovered {
        // too many distinct movies rated: retire the least-rated covered movie
        let m_kill = (0..cfg.listed_movies)
            .filter(|&m| covered[m])
            .min_by_key(|&m| (count_per_movie[m], m))
            .expect("some movie covered");
        for set in picks.iter_mut() {
            let Some(slot) = set.iter().position(|&m| m == m_kill) else {
                continue;
            };
            let m_new = (0..cfg.listed_movies)
                .filter(|&m| covered[m] && m != m_kill && !set.contains(&m))
                .max_by_key(|&m| (count_per_movie[m], cfg.listed_movies - m))
                .expect("replacement movie exists");
            set[slot] = m_new;
            count_per_movie[m_new] += 1;
            count_per_movie[m_kill] -= 1;
        }
        covered[m_kill] = false;
        uncovered.push(m_kill);
    }

    // Ratings: mean + biases + taste·genre affinity + noise, snapped to scale.
    let scale = RatingScale::movielens();
    let noise = normal(cfg.noise_std);
    let mut ratings_file = std::fs::File::create(dir.join("ratings.csv"))?;
    writeln!(ratings_file, "userId,movieId,rating,timestamp")?;
    let mut ts = 828_000_000i64;
    let mut buf = String::new();
    for (u, set) in picks.iter().enumerate() {
        let mut sorted = set.clone();
        sorted.sort_unstable();
        for &m in &sorted {
            let gs = &movie_genres[m];
            let aff = if gs.is_empty() {
                0.0
            } else {
                gs.iter().map(|&g| user_pref[u][g as usize]).sum::<f64>() / gs.len() as f64
            };
            let raw = 3.50
                + user_bias[u]
                + movie_bias[m]
                + cfg.affinity * aff
                + noise.sample(&mut rng);
            let snapped = scale.clamp((raw / scale.step).round() * scale.step);
            ts += 7;
            buf.push_str(&format!("{},{},{},{}\n", u + 1, m + 1, snapped, ts));
        }
    }
    ratings_file.write_all(buf.as_bytes())?;

    let mut movies_file = std::fs::File::create(dir.join("movies.csv"))?;
    writeln!(movies_file, "movieId,title,genres")?;
    let mut mbuf = String::new();
    for m in 0..cfg.listed_movies {
        let names: Vec<&str> = movie_genres[m].iter().map(|&g| GENRES[g as usize]).collect();
        mbuf.push_str(&format!(
            "{},Feature {:05} ({}),{}\n",
            m + 1,
            m + 1,
            1930 + (m % 90),
            names.join("|")
        ));
    }
    movies_file.write_all(mbuf.as_bytes())?;
    Ok(())
}
