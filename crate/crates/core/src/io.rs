//! File formats: graph and problem JSON, plan JSON, trace and round-log CSV.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::DenseMatrix;
use crate::qp::{AlphaSplit, ArrowheadQp, PrivateBlock};
use crate::simnet::RoundLog;
use crate::tuning::PlanFile;

/// `{"n": int, "edges": [[i, j, w], ...]}`, 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphFile {
    pub fn from_graph(g: &WeightedGraph) -> Self {
        Self { n: g.node_count(), edges: g.edges().iter().map(|e| (e.i, e.j, e.w)).collect() }
    }

    pub fn to_graph(&self) -> Result<WeightedGraph> {
        WeightedGraph::new(self.n, self.edges.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFile {
    #[serde(rename = "Q")]
    pub q_ii: Vec<Vec<f64>>,
    #[serde(rename = "Qis")]
    pub q_is: Vec<f64>,
    #[serde(rename = "q")]
    pub q_lin: Vec<f64>,
}

/// `{"blocks": [{"Q", "Qis", "q"}], "Qss", "qs", "alphas"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub blocks: Vec<BlockFile>,
    #[serde(rename = "Qss")]
    pub q_ss: f64,
    pub qs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
}

impl ProblemFile {
    pub fn from_problem(p: &ArrowheadQp, alphas: Option<&AlphaSplit>) -> Self {
        let blocks = p
            .blocks
            .iter()
            .map(|b| BlockFile { q_ii: b.q_ii.to_rows(), q_is: b.q_is.clone(), q_lin: b.q_i.clone() })
            .collect();
        Self { blocks, q_ss: p.q_ss, qs: p.q_s, alphas: alphas.map(|a| a.as_slice().to_vec()) }
    }

    pub fn to_problem(&self) -> Result<(ArrowheadQp, Option<AlphaSplit>)> {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| PrivateBlock::new(DenseMatrix::from_rows(&b.q_ii)?, b.q_is.clone(), b.q_lin.clone(), i))
            .collect::<Result<Vec<_>>>()?;
        let problem = ArrowheadQp::new(blocks, self.q_ss, self.qs)?;
        let alphas = self.alphas.clone().map(AlphaSplit::new).transpose()?;
        if let Some(a) = &alphas {
            if a.as_slice().len() != problem.agent_count() {
                return Err(Error::InvalidAlphas(format!(
                    "{} alphas for {} agents",
                    a.as_slice().len(),
                    problem.agent_count()
                )));
            }
        }
        Ok((problem, alphas))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_graph(path: &Path) -> Result<WeightedGraph> {
    read_json::<GraphFile>(path)?.to_graph()
}

pub fn write_graph(path: &Path, g: &WeightedGraph) -> Result<()> {
    write_json(path, &GraphFile::from_graph(g))
}

pub fn read_problem(path: &Path) -> Result<(ArrowheadQp, Option<AlphaSplit>)> {
    read_json::<ProblemFile>(path)?.to_problem()
}

pub fn write_plan(path: &Path, plan: &PlanFile) -> Result<()> {
    write_json(path, plan)
}

fn x_header(prefix: &[&str], n: usize, suffix: &[&str]) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((0..n).map(|i| format!("x_{i}")))
        .chain(suffix.iter().map(|s| s.to_string()))
        .collect()
}

/// Columns `iter, x_0..x_{n−1}, dist_to_fixed_point`.
pub fn write_trace_csv<W: Write>(out: W, iterates: &[Vec<f64>], distances: &[f64]) -> Result<()> {
    if iterates.len() != distances.len() {
        return Err(Error::LengthMismatch(iterates.len(), distances.len()));
    }
    let n = iterates.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(x_header(&["iter"], n, &["dist_to_fixed_point"]))?;
    for (k, (x, d)) in iterates.iter().zip(distances).enumerate() {
        let row = std::iter::once(k.to_string()).chain(x.iter().map(f64::to_string)).chain([d.to_string()]);
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `round, messages, max_dev, x_0..x_{n−1}`.
pub fn write_round_log_csv<W: Write>(out: W, rounds: &[RoundLog]) -> Result<()> {
    let n = rounds.first().map_or(0, |r| r.x.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(x_header(&["round", "messages", "max_dev"], n, &[]))?;
    for r in rounds {
        let row = [r.round.to_string(), r.messages.to_string(), r.max_dev.to_string()]
            .into_iter()
            .chain(r.x.iter().map(f64::to_string));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes serializable rows with a header derived from the field names.
pub fn write_records_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
