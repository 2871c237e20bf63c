//! Circle contours and trapezoidal quadrature on them.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::matcore::C64;
use crate::pairs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circle {
    #[serde(with = "pairs")]
    pub center: C64,
    pub radius: f64,
}

/// Quadrature node on a circle: position and the weight `dλ` of the
/// trapezoidal rule (so `Σ w_k f(λ_k) ≈ ∮ f(λ) dλ`).
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub z: C64,
    pub dz: C64,
}

impl Circle {
    pub fn new(center: C64, radius: f64) -> Self {
        Circle { center, radius }
    }

    pub fn contains(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// Signed distance from the circle (negative inside).
    pub fn distance(&self, z: C64) -> f64 {
        (z - self.center).norm() - self.radius
    }

    pub fn length(&self) -> f64 {
        2.0 * PI * self.radius
    }

    /// `k` equispaced nodes, counter-clockwise, with offset `phase` (in units
    /// of the node spacing) so refinements can reuse earlier nodes.
    pub fn nodes(&self, k: usize, phase: f64) -> impl Iterator<Item = Node> + '_ {
        let h = 2.0 * PI / k as f64;
        (0..k).map(move |i| {
            let theta = (i as f64 + phase) * h;
            let e = C64::from_polar(1.0, theta);
            Node {
                z: self.center + e * self.radius,
                dz: C64::i() * e * (self.radius * h),
            }
        })
    }

    pub fn intersects(&self, other: &Circle) -> bool {
        let d = (self.center - other.center).norm();
        d < self.radius + other.radius
    }
}

/// Union of disjoint, non-nested circles, all positively oriented.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CircleSet(pub Vec<Circle>);

impl CircleSet {
    pub fn single(c: Circle) -> Self {
        CircleSet(vec![c])
    }

    pub fn circles(&self) -> &[Circle] {
        &self.0
    }

    pub fn length(&self) -> f64 {
        self.0.iter().map(Circle::length).sum()
    }

    /// Total winding number around `z` (points on a circle count as inside).
    pub fn winding(&self, z: C64) -> usize {
        self.0.iter().filter(|c| c.distance(z) <= 0.0).count()
    }

    pub fn is_disjoint(&self) -> bool {
        (0..self.0.len())
            .all(|i| ((i + 1)..self.0.len()).all(|j| !self.0[i].intersects(&self.0[j])))
    }

    /// Smallest distance from `z` to any of the circles.
    pub fn distance_to(&self, z: C64) -> f64 {
        self.0
            .iter()
            .map(|c| c.distance(z).abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn nodes(&self, per_circle: usize) -> Vec<Node> {
        self.0
            .iter()
            .flat_map(|c| c.nodes(per_circle, 0.0))
            .collect()
    }
}
