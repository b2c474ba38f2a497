//! Line-oriented text formats for networks and POIs.
//!
//! All files share the same conventions: one record per line, fields
//! separated by whitespace, `#` starts a comment, blank lines are skipped,
//! ids are base-10 integers.
//!
//! * vertices file: `id lon lat`
//! * edges file:    `u v weight`
//! * POI file:      `vertex_id keyword_id rating`
//! * tags file:     `keyword_id tag...` (rest of line, optional)

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{KatrError, Result};
use crate::graph::{normalize, IngestReport, KeywordId, RawNetwork, RoadNetwork};

pub const VERTICES_FILE: &str = "vertices.txt";
pub const EDGES_FILE: &str = "edges.txt";
pub const POIS_FILE: &str = "pois.txt";
pub const TAGS_FILE: &str = "tags.txt";

fn parse_err(file: &Path, line: usize, message: impl Into<String>) -> KatrError {
    KatrError::Parse {
        file: file.display().to_string(),
        line,
        message: message.into(),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

fn parse_fields<const N: usize>(file: &Path, lineno: usize, line: &str) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    let mut it = line.split_whitespace();
    for slot in out.iter_mut() {
        let tok = it
            .next()
            .ok_or_else(|| parse_err(file, lineno, format!("expected {N} fields")))?;
        *slot = tok
            .parse::<f64>()
            .map_err(|e| parse_err(file, lineno, format!("bad number {tok:?}: {e}")))?;
    }
    if it.next().is_some() {
        return Err(parse_err(file, lineno, format!("expected exactly {N} fields")));
    }
    Ok(out)
}

pub fn read_vertices(path: &Path) -> Result<Vec<(u64, f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    data_lines(&text)
        .map(|(lineno, line)| {
            let [id, lon, lat] = parse_fields::<3>(path, lineno, line)?;
            Ok((id as u64, lon, lat))
        })
        .collect()
}

pub fn read_edges(path: &Path) -> Result<Vec<(u64, u64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    data_lines(&text)
        .map(|(lineno, line)| {
            let [u, v, w] = parse_fields::<3>(path, lineno, line)?;
            Ok((u as u64, v as u64, w))
        })
        .collect()
}

pub fn read_pois(path: &Path) -> Result<Vec<(u64, KeywordId, f64)>> {
    let text = std::fs::read_to_string(path)?;
    data_lines(&text)
        .map(|(lineno, line)| {
            let [v, kw, r] = parse_fields::<3>(path, lineno, line)?;
            Ok((v as u64, kw as KeywordId, r))
        })
        .collect()
}

/// Optional human-readable tags for keyword ids. The tag is the rest of the
/// line and may contain spaces.
pub fn read_tags(path: &Path) -> Result<HashMap<KeywordId, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (lineno, line) in data_lines(&text) {
        let mut it = line.splitn(2, char::is_whitespace);
        let id_tok = it.next().unwrap();
        let id: KeywordId = id_tok
            .parse()
            .map_err(|e| parse_err(path, lineno, format!("bad keyword id {id_tok:?}: {e}")))?;
        let tag = it.next().unwrap_or("").trim().to_string();
        if tag.is_empty() {
            return Err(parse_err(path, lineno, "missing tag"));
        }
        map.insert(id, tag);
    }
    Ok(map)
}

/// Loads and normalizes a network from `dir`, returning the optional tag map
/// alongside it.
pub fn load_network_dir(
    dir: &Path,
) -> Result<(RoadNetwork, IngestReport, HashMap<KeywordId, String>)> {
    let raw = RawNetwork {
        vertices: read_vertices(&dir.join(VERTICES_FILE))?,
        edges: read_edges(&dir.join(EDGES_FILE))?,
        pois: read_pois(&dir.join(POIS_FILE))?,
    };
    let (net, report) = normalize(&raw)?;
    let tags_path = dir.join(TAGS_FILE);
    let tags = if tags_path.exists() {
        read_tags(&tags_path)?
    } else {
        HashMap::new()
    };
    Ok((net, report, tags))
}

pub fn write_raw_network(
    dir: &Path,
    raw: &RawNetwork,
    tags: &HashMap<KeywordId, String>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut vs = String::new();
    vs.push_str("# id lon lat\n");
    for &(id, lon, lat) in &raw.vertices {
        writeln!(vs, "{id} {lon} {lat}").unwrap();
    }
    std::fs::write(dir.join(VERTICES_FILE), vs)?;

    let mut es = String::new();
    es.push_str("# u v weight\n");
    for &(u, v, w) in &raw.edges {
        writeln!(es, "{u} {v} {w}").unwrap();
    }
    std::fs::write(dir.join(EDGES_FILE), es)?;

    let mut ps = String::new();
    ps.push_str("# vertex_id keyword_id rating\n");
    for &(v, kw, r) in &raw.pois {
        writeln!(ps, "{v} {kw} {r}").unwrap();
    }
    std::fs::write(dir.join(POIS_FILE), ps)?;

    if !tags.is_empty() {
        let mut ts = String::new();
        ts.push_str("# keyword_id tag\n");
        let mut sorted: Vec<_> = tags.iter().collect();
        sorted.sort_by_key(|(id, _)| **id);
        for (id, tag) in sorted {
            writeln!(ts, "{id} {tag}").unwrap();
        }
        std::fs::write(dir.join(TAGS_FILE), ts)?;
    }
    Ok(())
}

/// Content hash over the three network files; partition caches are keyed on
/// it so they rebuild whenever the inputs change.
pub fn network_files_hash(dir: &Path) -> Result<[u8; 32]> {
    let mut hasher = Sha256::new();
    for name in [VERTICES_FILE, EDGES_FILE, POIS_FILE] {
        let path: PathBuf = dir.join(name);
        hasher.update(name.as_bytes());
        hasher.update(std::fs::read(&path)?);
    }
    Ok(hasher.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_text_files() {
        let dir = tempfile::tempdir().unwrap();
        let raw = RawNetwork {
            vertices: vec![(0, 0.5, 0.25), (1, 1.0, 0.0), (2, 2.0, 1.0)],
            edges: vec![(0, 1, 3.5), (1, 2, 1.25)],
            pois: vec![(1, 7, 4.5), (2, 3, 9.0)],
        };
        let tags = HashMap::from([(7, "coffee".to_string()), (3, "fuel station".to_string())]);
        write_raw_network(dir.path(), &raw, &tags).unwrap();

        let (net, report, loaded_tags) = load_network_dir(dir.path()).unwrap();
        assert_eq!(net.vertex_count(), 3);
        assert_eq!(net.pois().len(), 2);
        assert_eq!(report.dropped_vertices, 0);
        assert_eq!(loaded_tags[&3], "fuel station");
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        std::fs::write(&path, "# header\n\n0 1.0 2.0   # trailing\n1 3.0 4.0\n").unwrap();
        let vs = read_vertices(&path).unwrap();
        assert_eq!(vs, vec![(0, 1.0, 2.0), (1, 3.0, 4.0)]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.txt");
        std::fs::write(&path, "0 1 2.0\n0 oops 1.0\n").unwrap();
        match read_edges(&path) {
            Err(KatrError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn hash_changes_with_content() {
        let dir = tempfile::tempdir().unwrap();
        let raw = RawNetwork {
            vertices: vec![(0, 0.0, 0.0), (1, 1.0, 0.0)],
            edges: vec![(0, 1, 1.0)],
            pois: vec![],
        };
        write_raw_network(dir.path(), &raw, &HashMap::new()).unwrap();
        let h1 = network_files_hash(dir.path()).unwrap();
        let mut raw2 = raw.clone();
        raw2.edges[0].2 = 2.0;
        write_raw_network(dir.path(), &raw2, &HashMap::new()).unwrap();
        let h2 = network_files_hash(dir.path()).unwrap();
        assert_ne!(h1, h2);
    }
}
