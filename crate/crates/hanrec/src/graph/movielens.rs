//! MovieLens-format loader: `ratings.csv` (userId, movieId, rating,
//! timestamp) joined against `movies.csv` (movieId, title, pipe-separated
//! genres). Header rows are auto-detected. Movie nodes are created for the
//! movies actually referenced by accepted rating rows — the movies file may
//! list more titles than ever receive a rating.

use super::{Edge, HetGraph, NodeData, RatingScale};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::path::Path;

/// Row-level diagnostics from a load: rejected rows (with reasons) and
/// warnings such as duplicate ratings.
#[derive(Debug, Default, Clone)]
pub struct LoadReport {
    pub rejected: Vec<String>,
    pub warnings: Vec<String>,
}

struct MovieMeta {
    genres: Vec<String>,
}

fn looks_like_header(fields: &[&str]) -> bool {
    fields
        .first()
        .map(|f| f.trim().parse::<i64>().is_err())
        .unwrap_or(false)
}

fn read_movies(path: &Path) -> Result<HashMap<String, MovieMeta>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut movies = HashMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let fields: Vec<&str> = record.iter().collect();
        if i == 0 && looks_like_header(&fields) {
            continue;
        }
        if fields.len() < 3 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                msg: format!("expected movieId,title,genres; got {} fields", fields.len()),
            });
        }
        let movie_id = fields[0].trim().to_string();
        // title may itself contain commas; genres are always the last field
        let genre_field = fields[fields.len() - 1].trim();
        let genres = if genre_field.is_empty() || genre_field == "(no genres listed)" {
            Vec::new()
        } else {
            genre_field.split('|').map(|g| g.trim().to_string()).collect()
        };
        if movies.insert(movie_id.clone(), MovieMeta { genres }).is_some() {
            return Err(Error::DuplicateNode(format!("movie {}", movie_id)));
        }
    }
    Ok(movies)
}

/// Load a MovieLens-style corpus into a user/movie rating graph on the
/// 0.5..5.0 half-step scale. Off-scale ratings and malformed rows are
/// rejected with per-row diagnostics; a duplicate (user, movie) pair keeps
/// the last occurrence and warns; a rating referencing a movie absent from
/// the movies file is a hard error.
pub fn load_movielens(
    ratings_path: impl AsRef<Path>,
    movies_path: impl AsRef<Path>,
) -> Result<(HetGraph, LoadReport)> {
    let ratings_path = ratings_path.as_ref();
    let movies_path = movies_path.as_ref();
    let movies_meta = read_movies(movies_path)?;
    let scale = RatingScale::movielens();
    let mut report = LoadReport::default();

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(ratings_path)?;

    // (user, movie) -> (first-seen order, level); duplicates overwrite the level
    let mut ratings: HashMap<(String, String), (usize, u8)> = HashMap::new();
    let mut order = 0usize;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let fields: Vec<&str> = record.iter().collect();
        if i == 0 && looks_like_header(&fields) {
            continue;
        }
        let line = i + 1;
        if fields.len() < 4 {
            report.rejected.push(format!(
                "{}:{}: expected userId,movieId,rating,timestamp",
                ratings_path.display(),
                line
            ));
            continue;
        }
        let user = fields[0].trim().to_string();
        let movie = fields[1].trim().to_string();
        let rating: f64 = match fields[2].trim().parse() {
            Ok(r) => r,
            Err(_) => {
                report.rejected.push(format!(
                    "{}:{}: unparseable rating '{}'",
                    ratings_path.display(),
                    line,
                    fields[2]
                ));
                continue;
            }
        };
        // timestamps are parsed for format fidelity and then ignored
        if fields[3].trim().parse::<i64>().is_err() {
            report.rejected.push(format!(
                "{}:{}: unparseable timestamp '{}'",
                ratings_path.display(),
                line,
                fields[3]
            ));
            continue;
        }
        let level = match scale.level_of(rating) {
            Some(l) => l as u8,
            None => {
                report.rejected.push(format!(
                    "{}:{}: rating {} off the 0.5..5.0 half-step scale",
                    ratings_path.display(),
                    line,
                    rating
                ));
                continue;
            }
        };
        if !movies_meta.contains_key(&movie) {
            return Err(Error::UnknownNode(format!(
                "{}:{}: rating references movie {} absent from {}",
                ratings_path.display(),
                line,
                movie,
                movies_path.display()
            )));
        }
        match ratings.entry((user.clone(), movie.clone())) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                report.warnings.push(format!(
                    "duplicate rating for (user {}, movie {}); keeping the last",
                    user, movie
                ));
                e.get_mut().1 = level;
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert((order, level));
                order += 1;
            }
        }
    }

    // Deterministic assembly: edges in first-seen order, users and rated
    // movies indexed in that same order.
    let mut entries: Vec<(&(String, String), &(usize, u8))> = ratings.iter().collect();
    entries.sort_by_key(|(_, (ord, _))| *ord);

    // Genre vocabulary over the rated movies, sorted for stable indices.
    let mut genre_names: Vec<String> = {
        let mut set = std::collections::BTreeSet::new();
        let mut rated = std::collections::HashSet::new();
        for ((_, m), _) in &entries {
            rated.insert(m.clone());
        }
        for m in &rated {
            for g in &movies_meta[m].genres {
                set.insert(g.clone());
            }
        }
        set.into_iter().collect()
    };
    genre_names.sort();
    let genre_idx: HashMap<&str, u16> = genre_names
        .iter()
        .enumerate()
        .map(|(i, g)| (g.as_str(), i as u16))
        .collect();

    let mut nodes: Vec<NodeData> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::with_capacity(entries.len());
    for ((user, movie), (_, level)) in entries {
        let uid = format!("user:{}", user);
        let mid = format!("movie:{}", movie);
        let a = *index.entry(uid.clone()).or_insert_with(|| {
            nodes.push(NodeData {
                external_id: uid.clone(),
                node_type: 0,
                attrs: None,
                genres: None,
            });
            nodes.len() - 1
        });
        let b = *index.entry(mid.clone()).or_insert_with(|| {
            let genres = movies_meta[movie]
                .genres
                .iter()
                .map(|g| genre_idx[g.as_str()])
                .collect();
            nodes.push(NodeData {
                external_id: mid.clone(),
                node_type: 1,
                attrs: None,
                genres: Some(genres),
            });
            nodes.len() - 1
        });
        edges.push(Edge {
            a,
            b,
            level: *level,
            relation: 0,
        });
    }

    let graph = HetGraph::from_parts(
        nodes,
        vec!["user".into(), "movie".into()],
        vec!["rating".into()],
        genre_names,
        edges,
        scale,
    )?;
    if !graph.is_heterogeneous() {
        report
            .warnings
            .push("input is not heterogeneous (type(nodes) + type(edges) <= 2)".into());
    }
    for w in &report.warnings {
        log::warn!("{}", w);
    }
    Ok((graph, report))
}
