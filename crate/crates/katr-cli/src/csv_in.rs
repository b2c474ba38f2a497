//! Parser for the benchmark CSV this tool writes, so `report` can aggregate
//! saved runs.

use anyhow::{bail, Context, Result};

use katr_core::bench::{BenchRecord, Variant};
use katr_core::engine::PruneCounters;

pub fn parse_records(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty CSV")?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| -> Result<usize> {
        columns
            .iter()
            .position(|&c| c == name)
            .with_context(|| format!("missing column {name}"))
    };
    let has_timing = columns.contains(&"wall_ms");
    let idx_query = col("query_id")?;
    let idx_variant = col("variant")?;
    let idx_m = col("m")?;
    let idx_k = col("k")?;
    let idx_alpha = col("alpha")?;
    let idx_source = col("source")?;
    let counter_cols: Vec<usize> = [
        "n_sg_rn",
        "n_sg_sr",
        "n_sg_bp",
        "n_cps_rn",
        "n_cps_sr",
        "n_cps_bp",
        "n_cpr_sr",
        "n_cpr_edrs",
        "visited_vertices",
        "graph_distance_computations",
    ]
    .iter()
    .map(|c| col(c))
    .collect::<Result<_>>()?;
    let idx_scores = col("scores")?;
    let idx_distances = col("distances")?;
    let idx_ratings = col("rating_sums")?;

    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            bail!(
                "line {}: {} fields, expected {}",
                lineno + 2,
                fields.len(),
                columns.len()
            );
        }
        let c: Vec<u64> = counter_cols
            .iter()
            .map(|&i| fields[i].parse::<u64>().context("bad counter"))
            .collect::<Result<_>>()?;
        records.push(BenchRecord {
            query_id: fields[idx_query].parse()?,
            variant: Variant::parse(fields[idx_variant])?,
            m: fields[idx_m].parse()?,
            k: fields[idx_k].parse()?,
            alpha: fields[idx_alpha].parse()?,
            source: fields[idx_source].parse()?,
            wall_ms: if has_timing {
                fields[col("wall_ms")?].parse()?
            } else {
                0.0
            },
            counters: PruneCounters {
                n_sg_rn: c[0],
                n_sg_sr: c[1],
                n_sg_bp: c[2],
                n_cps_rn: c[3],
                n_cps_sr: c[4],
                n_cps_bp: c[5],
                n_cpr_sr: c[6],
                n_cpr_edrs: c[7],
                visited_vertices: c[8],
                graph_distance_computations: c[9],
            },
            scores: parse_floats(fields[idx_scores])?,
            distances: parse_floats(fields[idx_distances])?,
            rating_sums: parse_floats(fields[idx_ratings])?,
        });
    }
    Ok(records)
}

fn parse_floats(field: &str) -> Result<Vec<f64>> {
    if field.trim().is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|x| x.parse::<f64>().context("bad float list"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use katr_core::bench::records_to_csv;

    #[test]
    fn csv_round_trips() {
        let record = BenchRecord {
            query_id: 3,
            variant: Variant::Full,
            m: 2,
            k: 4,
            alpha: 0.5,
            source: 17,
            wall_ms: 1.25,
            counters: PruneCounters {
                n_sg_rn: 10,
                n_sg_sr: 5,
                n_sg_bp: 2,
                n_cps_rn: 100,
                n_cps_sr: 20,
                n_cps_bp: 8,
                n_cpr_sr: 40,
                n_cpr_edrs: 12,
                visited_vertices: 77,
                graph_distance_computations: 31,
            },
            scores: vec![1.5, -0.25],
            distances: vec![2.0, 3.0],
            rating_sums: vec![10.0, 9.0],
        };
        for timing in [false, true] {
            let csv = records_to_csv(std::slice::from_ref(&record), timing);
            let parsed = parse_records(&csv).unwrap();
            assert_eq!(parsed.len(), 1);
            assert_eq!(parsed[0].counters, record.counters);
            assert_eq!(parsed[0].scores, record.scores);
            assert_eq!(parsed[0].variant, Variant::Full);
        }
    }
}
