//! Calderón–Zygmund decomposition `f = g + Σ b_k` at height `λ` on a grid.
//!
//! The interval system is dyadic in `x` down to intervals holding one cell's
//! worth of nodes, then splits node runs into halves of equal quadrature
//! weight down to single nodes. Every interval `Q` carries the threshold
//! `t(Q) = λ · min_child μ(child) / μ(Q)` (`t = λ` for a single node); the
//! descent selects `Q` when the `μ`-average of `|f|` over `Q` exceeds `t(Q)`.
//! An unselected parent then bounds every child average by `λ`, so selected
//! intervals satisfy `avg_Q |f| ≤ λ` and the good part satisfies `|g| ≤ λ`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::grid::{SampledFunction, GAUSS_ORDER};
use crate::measure::Interval;

/// One selected interval with its mean-zero piece `b_k = (f - avg f) 1_{I_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadPiece {
    /// `[lo, hi)`
    pub lo: f64,
    pub hi: f64,
    /// node indices `start..end`
    pub start: usize,
    pub end: usize,
    /// quadrature measure of the piece
    pub measure: f64,
    pub mean: Complex64,
    /// `‖b_k‖₁ / (λ μ(I_k))`
    pub l1_ratio: f64,
}

impl BadPiece {
    pub fn interval(&self) -> Interval {
        Interval {
            center: 0.5 * (self.lo + self.hi),
            radius: 0.5 * (self.hi - self.lo),
        }
    }
}

/// Measured constants of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CzConstants {
    /// `max |g| / λ`
    pub good_sup: f64,
    /// `max_k ‖b_k‖₁ / (λ μ(I_k))`
    pub piece_l1: f64,
    /// `λ Σ μ(I_k) / ‖f‖₁`
    pub total_measure: f64,
    /// largest number of the dilates `2I_k` containing one point
    pub overlap: usize,
    /// `‖g‖₁ / ‖f‖₁`
    pub good_l1: f64,
    /// `‖g‖₂² / (λ ‖g‖₁)`
    pub good_l2: f64,
    /// `max_k |∫ b_k dμ| / ∫_{I_k} |f| dμ`
    pub cancellation: f64,
}

#[derive(Debug, Clone)]
pub struct CzDecomposition {
    pub good: SampledFunction,
    pub pieces: Vec<BadPiece>,
    pub height: f64,
    pub constants: CzConstants,
    /// set when the whole domain was selected, i.e. `λ` is below what the grid resolves
    pub resolution_warning: bool,
    f: SampledFunction,
}

impl CzDecomposition {
    /// `b_k` on the full grid.
    pub fn piece_function(&self, k: usize) -> SampledFunction {
        let p = &self.pieces[k];
        let values = self
            .f
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if (p.start..p.end).contains(&i) {
                    v - p.mean
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        SampledFunction::from_parts(Arc::clone(self.f.grid()), values, self.f.side())
    }

    /// `max_i |f - g - Σ b_k|`.
    pub fn reassembly_defect(&self) -> f64 {
        let mut rest: Vec<Complex64> = self
            .f
            .values()
            .iter()
            .zip(self.good.values())
            .map(|(a, b)| a - b)
            .collect();
        for k in 0..self.pieces.len() {
            for (r, b) in rest.iter_mut().zip(self.piece_function(k).values()) {
                *r -= b;
            }
        }
        rest.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

struct Node {
    lo: f64,
    hi: f64,
    start: usize,
    end: usize,
}

struct Ctx<'a> {
    nodes: Vec<f64>,
    weights: &'a [f64],
    abs_prefix: Vec<f64>,
    weight_prefix: Vec<f64>,
    height: f64,
    selected: Vec<Node>,
}

impl Ctx<'_> {
    fn measure(&self, start: usize, end: usize) -> f64 {
        self.weight_prefix[end] - self.weight_prefix[start]
    }

    fn average(&self, start: usize, end: usize) -> f64 {
        (self.abs_prefix[end] - self.abs_prefix[start]) / self.measure(start, end)
    }

    /// Children of `[start, end)`: a dyadic split in `x` while the run is longer
    /// than a cell, then a split into halves of equal weight.
    fn children(&self, node: &Node) -> Vec<Node> {
        let count = node.end - node.start;
        if count <= 1 {
            return Vec::new();
        }
        let (mid_x, split) = if count > GAUSS_ORDER {
            let mid = 0.5 * (node.lo + node.hi);
            let k = node.start + self.nodes[node.start..node.end].partition_point(|&x| x < mid);
            (mid, k)
        } else {
            let half = 0.5 * self.measure(node.start, node.end);
            let mut k = node.start + 1;
            while k < node.end - 1 && self.measure(node.start, k) < half {
                k += 1;
            }
            (0.5 * (self.nodes[k - 1] + self.nodes[k]), k)
        };
        [
            Node { lo: node.lo, hi: mid_x, start: node.start, end: split },
            Node { lo: mid_x, hi: node.hi, start: split, end: node.end },
        ]
        .into_iter()
        .filter(|c| c.end > c.start)
        .collect()
    }

    fn descend(&mut self, node: Node) {
        let kids = self.children(&node);
        let own = self.measure(node.start, node.end);
        let threshold = if kids.is_empty() {
            self.height
        } else {
            let smallest = kids
                .iter()
                .map(|c| self.measure(c.start, c.end))
                .fold(f64::INFINITY, f64::min);
            self.height * smallest / own
        };
        if self.average(node.start, node.end) > threshold {
            self.selected.push(node);
            return;
        }
        for child in kids {
            self.descend(child);
        }
    }
}

/// Decomposes `f` at height `λ`.
pub fn decompose(f: &SampledFunction, height: f64) -> Result<CzDecomposition> {
    if !(height > 0.0) || !height.is_finite() {
        return Err(usage(format!("CZ height must be positive, got {height}")));
    }
    let grid = Arc::clone(f.grid());
    let weights = grid.weights();
    let n = grid.len();
    let mut abs_prefix = vec![0.0; n + 1];
    let mut weight_prefix = vec![0.0; n + 1];
    for i in 0..n {
        abs_prefix[i + 1] = abs_prefix[i] + weights[i] * f.values()[i].norm();
        weight_prefix[i + 1] = weight_prefix[i] + weights[i];
    }
    let mut ctx = Ctx {
        nodes: grid.nodes().to_vec(),
        weights,
        abs_prefix,
        weight_prefix,
        height,
        selected: Vec::new(),
    };
    ctx.descend(Node { lo: 0.0, hi: grid.radius(), start: 0, end: n });
    let resolution_warning = ctx.selected.len() == 1 && ctx.selected[0].start == 0 && ctx.selected[0].end == n;
    let mut good: Vec<Complex64> = f.values().to_vec();
    let mut pieces = Vec::with_capacity(ctx.selected.len());
    for node in &ctx.selected {
        let measure = ctx.measure(node.start, node.end);
        let integral: Complex64 = (node.start..node.end).map(|i| f.values()[i] * ctx.weights[i]).sum();
        let mean = integral / measure;
        let l1: f64 = (node.start..node.end)
            .map(|i| (f.values()[i] - mean).norm() * ctx.weights[i])
            .sum();
        for v in &mut good[node.start..node.end] {
            *v = mean;
        }
        pieces.push(BadPiece {
            lo: node.lo,
            hi: node.hi,
            start: node.start,
            end: node.end,
            measure,
            mean,
            l1_ratio: l1 / (height * measure),
        });
    }
    pieces.sort_by_key(|a| a.start);
    let good = SampledFunction::new(Arc::clone(&grid), good, f.side())?;
    let constants = measure_constants(f, &good, &pieces, height, ctx.weights);
    Ok(CzDecomposition {
        good,
        pieces,
        height,
        constants,
        resolution_warning,
        f: f.clone(),
    })
}

fn measure_constants(
    f: &SampledFunction,
    good: &SampledFunction,
    pieces: &[BadPiece],
    height: f64,
    weights: &[f64],
) -> CzConstants {
    let l1 = |v: &[Complex64]| -> f64 { v.iter().zip(weights).map(|(a, w)| a.norm() * w).sum() };
    let f_l1 = l1(f.values());
    let g_l1 = l1(good.values());
    let g_l2: f64 = good.values().iter().zip(weights).map(|(a, w)| a.norm_sqr() * w).sum();
    let cancellation = pieces
        .iter()
        .map(|p| {
            let (mut signed, mut total) = (Complex64::new(0.0, 0.0), 0.0);
            for (v, w) in f.values()[p.start..p.end].iter().zip(&weights[p.start..p.end]) {
                signed += (v - p.mean) * w;
                total += v.norm() * w;
            }
            if total == 0.0 {
                0.0
            } else {
                signed.norm() / total
            }
        })
        .fold(0.0, f64::max);
    CzConstants {
        good_sup: good.max_abs() / height,
        piece_l1: pieces.iter().map(|p| p.l1_ratio).fold(0.0, f64::max),
        total_measure: if f_l1 == 0.0 {
            0.0
        } else {
            height * pieces.iter().map(|p| p.measure).sum::<f64>() / f_l1
        },
        overlap: overlap(pieces),
        good_l1: if f_l1 == 0.0 { 0.0 } else { g_l1 / f_l1 },
        good_l2: if g_l1 == 0.0 { 0.0 } else { g_l2 / (height * g_l1) },
        cancellation,
    }
}

/// Largest number of the open dilates `2I_k` sharing a point.
fn overlap(pieces: &[BadPiece]) -> usize {
    let mut events: Vec<(f64, i32)> = pieces
        .iter()
        .flat_map(|p| {
            let i = p.interval().scaled(2.0);
            [(i.center - i.radius, 1), (i.center + i.radius, -1)]
        })
        .collect();
    // closings before openings at equal coordinates: the dilates are open
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut depth = 0;
    let mut worst = 0;
    for (_, d) in events {
        depth += d;
        worst = worst.max(depth);
    }
    worst as usize
}
