//! Core service/task/QoS types and expression-level QoS aggregation.
//!
//! Aggregation mirrors the standard composition constructors: sequence and
//! parallel multiply reliability/availability and sum cost, response time is
//! summed in sequence and maxed in parallel, choice weights branches by
//! probability, iteration raises reliability/availability to the iteration
//! count and scales time/cost by it. DAG aggregation uses the same rules with
//! response time taken along the critical path.

use serde::{Deserialize, Serialize};

use crate::codec::{CompositionGraph, GraphNode};
use crate::error::{Error, Result};
use crate::ontology::ConceptId;

/// Non-functional attributes of a service or composite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosVector {
    /// Response time, `t >= 0`.
    #[serde(rename = "t")]
    pub time: f64,
    /// Cost, `ct >= 0`.
    #[serde(rename = "ct")]
    pub cost: f64,
    /// Reliability, in `(0, 1]`.
    #[serde(rename = "r")]
    pub reliability: f64,
    /// Availability, in `(0, 1]`.
    #[serde(rename = "a")]
    pub availability: f64,
}

impl QosVector {
    /// Identity element for aggregation: adding a service with this QoS to a
    /// path changes nothing.
    pub const NEUTRAL: QosVector = QosVector {
        time: 0.0,
        cost: 0.0,
        reliability: 1.0,
        availability: 1.0,
    };

    pub fn validate(&self, service: usize) -> Result<()> {
        let checks: [(&'static str, f64, bool); 4] = [
            ("t", self.time, self.time.is_finite() && self.time >= 0.0),
            ("ct", self.cost, self.cost.is_finite() && self.cost >= 0.0),
            (
                "r",
                self.reliability,
                self.reliability.is_finite() && self.reliability > 0.0 && self.reliability <= 1.0,
            ),
            (
                "a",
                self.availability,
                self.availability.is_finite()
                    && self.availability > 0.0
                    && self.availability <= 1.0,
            ),
        ];
        for (field, value, ok) in checks {
            if !ok {
                return Err(Error::QosOutOfRange {
                    service,
                    field,
                    value,
                });
            }
        }
        Ok(())
    }
}

/// An atomic service: input/output concept sets plus its QoS vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Service {
    pub id: usize,
    pub inputs: Vec<ConceptId>,
    pub outputs: Vec<ConceptId>,
    pub qos: QosVector,
}

/// A composition request: the provided inputs and the wanted outputs.
///
/// The `Start` sentinel produces the task inputs and the `End` sentinel
/// consumes the task outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionTask {
    pub inputs: Vec<ConceptId>,
    pub outputs: Vec<ConceptId>,
}

/// A composite service expression over sequence, parallel, choice, and
/// iteration constructors. Leaves are service ids.
#[derive(Debug, Clone)]
pub enum CompositeExpression {
    Service(usize),
    Sequence(Vec<CompositeExpression>),
    Parallel(Vec<CompositeExpression>),
    /// Branches with their probabilities; probabilities must sum to 1.
    Choice(Vec<(f64, CompositeExpression)>),
    /// Body iterated an average of `iterations >= 0` times.
    Iterate {
        body: Box<CompositeExpression>,
        iterations: f64,
    },
}

const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Aggregates the QoS of a composite expression.
pub fn aggregate_expression(expr: &CompositeExpression, services: &[Service]) -> Result<QosVector> {
    match expr {
        CompositeExpression::Service(id) => services
            .get(*id)
            .map(|s| s.qos)
            .ok_or(Error::UnknownService(*id)),
        CompositeExpression::Sequence(children) => {
            let mut acc = QosVector::NEUTRAL;
            for child in children {
                let q = aggregate_expression(child, services)?;
                acc.reliability *= q.reliability;
                acc.availability *= q.availability;
                acc.cost += q.cost;
                acc.time += q.time;
            }
            Ok(acc)
        }
        CompositeExpression::Parallel(children) => {
            let mut acc = QosVector::NEUTRAL;
            for child in children {
                let q = aggregate_expression(child, services)?;
                acc.reliability *= q.reliability;
                acc.availability *= q.availability;
                acc.cost += q.cost;
                acc.time = acc.time.max(q.time);
            }
            Ok(acc)
        }
        CompositeExpression::Choice(branches) => {
            let sum: f64 = branches.iter().map(|(p, _)| p).sum();
            if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(Error::ChoiceProbabilities(sum));
            }
            let mut acc = QosVector::NEUTRAL;
            for (p, child) in branches {
                let q = aggregate_expression(child, services)?;
                acc.reliability *= p * q.reliability;
                acc.availability *= p * q.availability;
                acc.cost += p * q.cost;
                acc.time += p * q.time;
            }
            Ok(acc)
        }
        CompositeExpression::Iterate { body, iterations } => {
            if !iterations.is_finite() || *iterations < 0.0 {
                return Err(Error::InvalidExpression(format!(
                    "iteration count must be >= 0, got {iterations}"
                )));
            }
            let q = aggregate_expression(body, services)?;
            Ok(QosVector {
                reliability: q.reliability.powf(*iterations),
                availability: q.availability.powf(*iterations),
                cost: iterations * q.cost,
                time: iterations * q.time,
            })
        }
    }
}

/// Aggregates the QoS of a decoded composition DAG.
///
/// Each component service contributes once to availability, reliability, and
/// cost regardless of fan-out; response time is the longest Start -> End path
/// weighted by node response times.
pub fn aggregate_dag(graph: &CompositionGraph, services: &[Service]) -> Result<QosVector> {
    let mut acc = QosVector::NEUTRAL;
    for (_, id) in graph.services() {
        let q = services.get(id).ok_or(Error::UnknownService(id))?.qos;
        acc.reliability *= q.reliability;
        acc.availability *= q.availability;
        acc.cost += q.cost;
    }
    acc.time = critical_path(graph, services)?;
    Ok(acc)
}

/// Longest Start -> End path where each service node costs its response time
/// and the sentinels cost nothing.
fn critical_path(graph: &CompositionGraph, services: &[Service]) -> Result<f64> {
    let node_time = |node: &GraphNode| -> Result<f64> {
        match node {
            GraphNode::Start | GraphNode::End => Ok(0.0),
            GraphNode::Service { id, .. } => services
                .get(*id)
                .map(|s| s.qos.time)
                .ok_or(Error::UnknownService(*id)),
        }
    };
    let order = graph.topological_order();
    let mut finish: std::collections::HashMap<GraphNode, f64> = std::collections::HashMap::new();
    finish.insert(GraphNode::Start, 0.0);
    for node in order {
        if node == GraphNode::Start {
            continue;
        }
        let mut best: Option<f64> = None;
        for link in graph.links() {
            if link.to == node {
                if let Some(&f) = finish.get(&link.from) {
                    best = Some(best.map_or(f, |b: f64| b.max(f)));
                }
            }
        }
        if let Some(pred) = best {
            finish.insert(node, pred + node_time(&node)?);
        }
    }
    finish
        .get(&GraphNode::End)
        .copied()
        .ok_or(Error::Disconnected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::CompositionGraph;

    fn svc(id: usize, t: f64, ct: f64, r: f64, a: f64) -> Service {
        Service {
            id,
            inputs: Vec::new(),
            outputs: Vec::new(),
            qos: QosVector {
                time: t,
                cost: ct,
                reliability: r,
                availability: a,
            },
        }
    }

    fn repo() -> Vec<Service> {
        vec![
            svc(0, 2.0, 1.0, 0.9, 0.8),
            svc(1, 3.0, 2.0, 0.7, 0.6),
            svc(2, 1.0, 4.0, 0.5, 0.95),
        ]
    }

    use CompositeExpression as E;

    #[test]
    fn sequence_sums_time_multiplies_reliability() {
        let q = aggregate_expression(&E::Sequence(vec![E::Service(0), E::Service(1)]), &repo())
            .unwrap();
        assert_eq!(q.time, 5.0);
        assert_eq!(q.cost, 3.0);
        assert!((q.reliability - 0.9 * 0.7).abs() < 1e-12);
        assert!((q.availability - 0.8 * 0.6).abs() < 1e-12);
    }

    #[test]
    fn parallel_takes_max_time() {
        let q = aggregate_expression(&E::Parallel(vec![E::Service(0), E::Service(1)]), &repo())
            .unwrap();
        assert_eq!(q.time, 3.0);
        assert_eq!(q.cost, 3.0);
        assert!((q.reliability - 0.9 * 0.7).abs() < 1e-12);
    }

    #[test]
    fn iterate_zero_is_neutral() {
        let q = aggregate_expression(
            &E::Iterate {
                body: Box::new(E::Service(0)),
                iterations: 0.0,
            },
            &repo(),
        )
        .unwrap();
        assert_eq!(q.reliability, 1.0);
        assert_eq!(q.availability, 1.0);
        assert_eq!(q.time, 0.0);
        assert_eq!(q.cost, 0.0);
    }

    #[test]
    fn choice_weights_branches() {
        let q = aggregate_expression(
            &E::Choice(vec![(0.25, E::Service(0)), (0.75, E::Service(1))]),
            &repo(),
        )
        .unwrap();
        assert!((q.time - (0.25 * 2.0 + 0.75 * 3.0)).abs() < 1e-12);
        assert!((q.cost - (0.25 * 1.0 + 0.75 * 2.0)).abs() < 1e-12);
        assert!((q.reliability - (0.25 * 0.9) * (0.75 * 0.7)).abs() < 1e-12);
    }

    #[test]
    fn choice_probabilities_must_sum_to_one() {
        let err = aggregate_expression(
            &E::Choice(vec![(0.5, E::Service(0)), (0.4, E::Service(1))]),
            &repo(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ChoiceProbabilities(_)));
    }

    #[test]
    fn unknown_leaf_errors() {
        let err = aggregate_expression(&E::Service(99), &repo()).unwrap_err();
        assert!(matches!(err, Error::UnknownService(99)));
    }

    #[test]
    fn dag_single_service_is_its_qos() {
        let g = CompositionGraph::linear_for_tests(&[0]);
        let q = aggregate_dag(&g, &repo()).unwrap();
        assert_eq!(q.time, 2.0);
        assert_eq!(q.cost, 1.0);
        assert_eq!(q.reliability, 0.9);
        assert_eq!(q.availability, 0.8);
    }

    #[test]
    fn dag_diamond_uses_critical_path() {
        // Start -> {S0 (t=2), S1 (t=5)} -> S2 (t=1) -> End
        let services = vec![
            svc(0, 2.0, 1.0, 0.9, 0.9),
            svc(1, 5.0, 1.0, 0.9, 0.9),
            svc(2, 1.0, 1.0, 0.9, 0.9),
        ];
        let g = CompositionGraph::diamond_for_tests(0, 1, 2);
        let q = aggregate_dag(&g, &services).unwrap();
        assert_eq!(q.time, 6.0);
        assert_eq!(q.cost, 3.0);
    }

    #[test]
    fn dag_branches_multiply_availability() {
        let services = vec![
            svc(0, 2.0, 1.0, 0.95, 0.9),
            svc(1, 5.0, 1.0, 0.9, 0.8),
            svc(2, 1.0, 1.0, 1.0, 1.0),
        ];
        let g = CompositionGraph::diamond_for_tests(0, 1, 2);
        let q = aggregate_dag(&g, &services).unwrap();
        assert!((q.availability - 0.9 * 0.8).abs() < 1e-12);
        assert!((q.reliability - 0.95 * 0.9).abs() < 1e-12);
    }

    #[test]
    fn neutral_node_leaves_aggregate_unchanged() {
        let services = vec![
            svc(0, 2.0, 1.0, 0.9, 0.8),
            svc(1, 0.0, 0.0, 1.0, 1.0), // neutral
        ];
        let chain = aggregate_dag(&CompositionGraph::linear_for_tests(&[0]), &services).unwrap();
        let padded =
            aggregate_dag(&CompositionGraph::linear_for_tests(&[0, 1]), &services).unwrap();
        assert_eq!(chain, padded);
    }
}
