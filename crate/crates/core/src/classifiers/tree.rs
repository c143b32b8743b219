//! Weighted binary classification trees (Gini, axis-aligned splits).
//!
//! Nodes are expanded breadth first until they are pure, no split separates
//! their rows, or the split budget is used up. Nothing is pruned.

use std::collections::VecDeque;

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        class: u8,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_splits: usize,
    /// Variables examined per split; `None` examines all of them in order.
    pub m_try: Option<usize>,
}

impl DecisionTree {
    pub fn n_splits(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }

    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> u8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

fn gini(w0: f64, w1: f64) -> f64 {
    let total = w0 + w1;
    if total <= 0.0 {
        return 0.0;
    }
    let (p0, p1) = (w0 / total, w1 / total);
    1.0 - p0 * p0 - p1 * p1
}

fn majority(w0: f64, w1: f64) -> u8 {
    u8::from(w1 > w0)
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Best split of `rows` on one feature: lowest weighted child Gini, thresholds at
/// midpoints between consecutive distinct values, ties to the lower threshold.
fn best_on_feature(
    x: ArrayView2<'_, f64>,
    labels: &[u8],
    weights: &[f64],
    rows: &mut [usize],
    feature: usize,
    totals: (f64, f64),
) -> Option<SplitChoice> {
    rows.sort_unstable_by(|&a, &b| x[[a, feature]].total_cmp(&x[[b, feature]]).then(a.cmp(&b)));
    let total = totals.0 + totals.1;
    let (mut l0, mut l1) = (0.0, 0.0);
    let mut best: Option<SplitChoice> = None;
    for pos in 0..rows.len() - 1 {
        let r = rows[pos];
        if labels[r] == 1 {
            l1 += weights[r];
        } else {
            l0 += weights[r];
        }
        let here = x[[r, feature]];
        let next = x[[rows[pos + 1], feature]];
        if next <= here {
            continue;
        }
        let (r0, r1) = (totals.0 - l0, totals.1 - l1);
        let impurity = ((l0 + l1) * gini(l0, l1) + (r0 + r1) * gini(r0, r1)) / total;
        if best.as_ref().is_none_or(|b| impurity < b.impurity) {
            let mid = 0.5 * (here + next);
            let threshold = if mid < next { mid } else { here };
            best = Some(SplitChoice {
                feature,
                threshold,
                impurity,
            });
        }
    }
    best
}

/// Grows a tree on the rows with positive weight.
///
/// With `m_try = Some(m)` the variables are visited in a random order and the
/// first `m` are scored; if none of them can split the node the search continues
/// through the remaining variables until one can.
pub fn grow<R: Rng>(
    x: ArrayView2<'_, f64>,
    labels: &[u8],
    weights: &[f64],
    params: TreeParams,
    rng: &mut R,
) -> DecisionTree {
    let n_features = x.ncols();
    let root_rows: Vec<usize> = (0..labels.len()).filter(|&r| weights[r] > 0.0).collect();
    let class_weights = |rows: &[usize]| {
        rows.iter().fold((0.0, 0.0), |(w0, w1), &r| {
            if labels[r] == 1 {
                (w0, w1 + weights[r])
            } else {
                (w0 + weights[r], w1)
            }
        })
    };

    let totals = class_weights(&root_rows);
    let mut nodes = vec![Node::Leaf {
        class: majority(totals.0, totals.1),
    }];
    let mut queue = VecDeque::from([(0usize, root_rows, totals)]);
    let mut splits = 0;
    let mut order: Vec<usize> = (0..n_features).collect();

    while let Some((id, mut rows, totals)) = queue.pop_front() {
        if splits >= params.max_splits {
            break;
        }
        if totals.0 <= 0.0 || totals.1 <= 0.0 || rows.len() < 2 {
            continue;
        }
        let budget = match params.m_try {
            Some(m) => {
                order.shuffle(rng);
                m.min(n_features)
            }
            None => n_features,
        };
        let mut best: Option<SplitChoice> = None;
        for (visited, &feature) in order.iter().enumerate() {
            if visited >= budget && best.is_some() {
                break;
            }
            if let Some(c) = best_on_feature(x, labels, weights, &mut rows, feature, totals) {
                // ties go to the lower feature index, whatever the visit order
                let better = best.as_ref().is_none_or(|b| {
                    c.impurity < b.impurity || (c.impurity == b.impurity && c.feature < b.feature)
                });
                if better {
                    best = Some(c);
                }
            }
        }
        let Some(choice) = best else { continue };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| x[[r, choice.feature]] <= choice.threshold);
        let lt = class_weights(&left_rows);
        let rt = class_weights(&right_rows);
        let left = nodes.len();
        nodes.push(Node::Leaf {
            class: majority(lt.0, lt.1),
        });
        nodes.push(Node::Leaf {
            class: majority(rt.0, rt.1),
        });
        nodes[id] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right: left + 1,
        };
        splits += 1;
        queue.push_back((left, left_rows, lt));
        queue.push_back((left + 1, right_rows, rt));
    }
    DecisionTree { nodes }
}
