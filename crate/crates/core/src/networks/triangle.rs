//! Triangular network with three single-particle sources.
//!
//! Source `S1` sits between Alice and Bob, `S2` between Bob and Claire and
//! `S3` between Claire and Alice. Each source sends one particle coherently
//! along both of its paths. Every station mixes its two input ports on a 50:50
//! beam splitter `(1/sqrt 2) [[1, 1], [1, -1]]`; detector 1 is outcome 0 and
//! detector 2 is outcome 1. Only events with one particle per station are
//! kept. Outcomes `(a, b, c)` are indexed as `4a + 2b + c`.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Post-selected quantum distribution: `1/4` on even-parity outcomes.
pub fn triangle_quantum_distribution() -> [f64; 8] {
    let mut p = [0.0; 8];
    for (idx, v) in p.iter_mut().enumerate() {
        if idx.count_ones() % 2 == 0 {
            *v = 0.25;
        }
    }
    p
}

/// Station and input port reached by each source along each of its paths.
/// Stations: Alice 0, Bob 1, Claire 2. Ports follow the source order.
const PATHS: [[(usize, usize); 2]; 3] = [
    [(0, 0), (1, 0)], // S1 -> Alice port 0 | Bob port 0
    [(1, 1), (2, 0)], // S2 -> Bob port 1 | Claire port 0
    [(2, 1), (0, 1)], // S3 -> Claire port 1 | Alice port 1
];

fn beam_splitter(detector: usize, port: usize) -> f64 {
    if detector == 1 && port == 1 {
        -FRAC_1_SQRT_2
    } else {
        FRAC_1_SQRT_2
    }
}

/// Distribution computed from the path-superposition state.
pub fn triangle_quantum_distribution_simulated() -> [f64; 8] {
    let source_amp = FRAC_1_SQRT_2.powi(3);
    let mut amps = [0.0f64; 8];
    for choice in 0..8usize {
        let mut port_at = [None; 3];
        let mut valid = true;
        for (s, paths) in PATHS.iter().enumerate() {
            let (station, port) = paths[(choice >> s) & 1];
            if port_at[station].replace(port).is_some() {
                valid = false;
            }
        }
        if !valid {
            continue;
        }
        let ports = port_at.map(|p| p.expect("one particle per station"));
        for (outcome, amp) in amps.iter_mut().enumerate() {
            let bits = [(outcome >> 2) & 1, (outcome >> 1) & 1, outcome & 1];
            let t: f64 = (0..3).map(|st| beam_splitter(bits[st], ports[st])).product();
            *amp += source_amp * t;
        }
    }
    let probs = amps.map(|a| a * a);
    let total: f64 = probs.iter().sum();
    probs.map(|p| p / total)
}

/// Classical post-selected model `gamma * p_A p_B p_C + (1 - gamma) q_A q_B q_C`
/// with Bernoulli marginals `P_X(1) = p_X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularClassicalModel {
    gamma: f64,
    p: [f64; 3],
    q: [f64; 3],
}

impl TriangularClassicalModel {
    pub fn new(gamma: f64, p: [f64; 3], q: [f64; 3]) -> Result<Self> {
        let all = std::iter::once(gamma).chain(p).chain(q);
        for v in all {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange {
                    name: "classical model parameter",
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        Ok(Self { gamma, p, q })
    }

    /// Parameters in the order `(gamma, p_A, p_B, p_C, q_A, q_B, q_C)`.
    pub fn from_params(x: &[f64; 7]) -> Result<Self> {
        Self::new(x[0], [x[1], x[2], x[3]], [x[4], x[5], x[6]])
    }

    pub fn params(&self) -> [f64; 7] {
        [
            self.gamma, self.p[0], self.p[1], self.p[2], self.q[0], self.q[1], self.q[2],
        ]
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn p(&self) -> [f64; 3] {
        self.p
    }

    pub fn q(&self) -> [f64; 3] {
        self.q
    }
}

fn product(bern: &[f64; 3], outcome: usize) -> f64 {
    (0..3)
        .map(|x| {
            let bit = (outcome >> (2 - x)) & 1;
            if bit == 1 {
                bern[x]
            } else {
                1.0 - bern[x]
            }
        })
        .product()
}

pub fn triangle_classical_distribution(model: &TriangularClassicalModel) -> [f64; 8] {
    std::array::from_fn(|o| model.gamma * product(&model.p, o) + (1.0 - model.gamma) * product(&model.q, o))
}
