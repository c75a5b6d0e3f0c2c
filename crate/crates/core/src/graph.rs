//! Pipeline execution graph: who waits on whom, and why.
//!
//! A job with no `needs` clause waits on every job of every earlier stage
//! (the stage-order product). A job with `needs` waits on exactly the listed
//! jobs — an explicit empty list waits on nothing. Edges record which rule
//! produced them, since artifact-flow reasoning treats the two differently.

use std::collections::{BTreeMap, HashMap};

use indexmap::IndexMap;
use thiserror::Error;

use crate::model::WorkflowModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Implicit waiting because the upstream job runs in an earlier stage.
    StageOrder,
    /// An explicit `needs` entry.
    Needs,
}

/// The wait-for relation over a workflow's concrete jobs.
#[derive(Debug, Clone)]
pub struct ExecutionGraph {
    /// Jobs in document order.
    nodes: Vec<String>,
    /// Stage of each node, for rendering.
    stage_of: IndexMap<String, String>,
    stages: Vec<String>,
    /// `(downstream, upstream) -> kind`: the downstream job starts only
    /// after the upstream finished.
    waits: BTreeMap<(String, String), EdgeKind>,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("jobs wait on each other in a cycle: {}", cycle.join(" -> "))]
    CyclicNeeds { cycle: Vec<String> },
}

/// Builds the execution graph. Quadratic in the number of jobs in the worst
/// case (the stage-order product is dense), deterministic in its iteration
/// order.
pub fn build_graph(model: &WorkflowModel) -> Result<ExecutionGraph, GraphError> {
    let stage_index: HashMap<&str, usize> = model
        .stages
        .iter()
        .enumerate()
        .map(|(index, stage)| (stage.as_str(), index))
        .collect();
    let mut graph = ExecutionGraph {
        nodes: model.jobs.keys().cloned().collect(),
        stage_of: model
            .jobs
            .values()
            .map(|job| (job.name.clone(), job.stage.clone()))
            .collect(),
        stages: model.stages.clone(),
        waits: BTreeMap::new(),
    };

    for job in model.jobs.values() {
        match &job.needs {
            Some(needs) => {
                for need in needs {
                    graph
                        .waits
                        .insert((job.name.clone(), need.job.clone()), EdgeKind::Needs);
                }
            }
            None => {
                let own_stage = stage_index[job.stage.as_str()];
                for upstream in model.jobs.values() {
                    if stage_index[upstream.stage.as_str()] < own_stage {
                        graph.waits.insert(
                            (job.name.clone(), upstream.name.clone()),
                            EdgeKind::StageOrder,
                        );
                    }
                }
            }
        }
    }

    if let Some(cycle) = graph.find_cycle() {
        return Err(GraphError::CyclicNeeds { cycle });
    }
    Ok(graph)
}

impl ExecutionGraph {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    /// Why (and whether) `downstream` waits on `upstream`.
    pub fn waits_on(&self, downstream: &str, upstream: &str) -> Option<EdgeKind> {
        self.waits
            .get(&(downstream.to_string(), upstream.to_string()))
            .copied()
    }

    /// All wait edges as `(downstream, upstream, kind)`, ordered.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, EdgeKind)> {
        self.waits
            .iter()
            .map(|((down, up), kind)| (down.as_str(), up.as_str(), *kind))
    }

    /// Jobs `downstream` waits on, with the edge kind.
    pub fn upstreams<'a>(
        &'a self,
        downstream: &'a str,
    ) -> impl Iterator<Item = (&'a str, EdgeKind)> {
        self.waits
            .range((downstream.to_string(), String::new())..)
            .take_while(move |((down, _), _)| down == downstream)
            .map(|((_, up), kind)| (up.as_str(), *kind))
    }

    /// DFS cycle search over the wait edges; returns one closed path when
    /// the graph is not a DAG.
    fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            InProgress,
            Done,
        }
        let mut marks: HashMap<&str, Mark> =
            self.nodes.iter().map(|n| (n.as_str(), Mark::New)).collect();
        let mut path: Vec<&str> = Vec::new();

        fn visit<'a>(
            graph: &'a ExecutionGraph,
            node: &'a str,
            marks: &mut HashMap<&'a str, Mark>,
            path: &mut Vec<&'a str>,
        ) -> Option<Vec<String>> {
            marks.insert(node, Mark::InProgress);
            path.push(node);
            for (upstream, _) in graph.upstreams(node) {
                match marks.get(upstream).copied().unwrap_or(Mark::Done) {
                    Mark::Done => {}
                    Mark::InProgress => {
                        let start = path.iter().position(|n| *n == upstream).unwrap_or(0);
                        let mut cycle: Vec<String> =
                            path[start..].iter().map(|n| n.to_string()).collect();
                        cycle.push(upstream.to_string());
                        return Some(cycle);
                    }
                    Mark::New => {
                        if let Some(cycle) = visit(graph, upstream, marks, path) {
                            return Some(cycle);
                        }
                    }
                }
            }
            path.pop();
            marks.insert(node, Mark::Done);
            None
        }

        for node in &self.nodes {
            if marks[node.as_str()] == Mark::New {
                if let Some(cycle) = visit(self, node, &mut marks, &mut path) {
                    return Some(cycle);
                }
            }
        }
        None
    }

    /// Graphviz rendering: jobs clustered by stage, needs edges solid,
    /// stage-order edges dashed, arrows pointing in execution direction.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph pipeline {\n  rankdir=LR;\n  node [shape=box];\n");
        for (index, stage) in self.stages.iter().enumerate() {
            let members: Vec<&String> = self
                .nodes
                .iter()
                .filter(|node| self.stage_of.get(*node).map(String::as_str) == Some(stage))
                .collect();
            if members.is_empty() {
                continue;
            }
            out.push_str(&format!(
                "  subgraph cluster_{index} {{\n    label={};\n",
                quote(stage)
            ));
            for node in members {
                out.push_str(&format!("    {};\n", quote(node)));
            }
            out.push_str("  }\n");
        }
        for ((down, up), kind) in &self.waits {
            let style = match kind {
                EdgeKind::Needs => "",
                EdgeKind::StageOrder => " [style=dashed]",
            };
            out.push_str(&format!("  {} -> {}{};\n", quote(up), quote(down), style));
        }
        out.push_str("}\n");
        out
    }
}

fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}
