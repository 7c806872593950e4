//! Shared domain types: embeddings, detections and tracklets.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::motion::MotionState;

/// Fixed-length appearance feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidEmbedding {
                reason: "empty vector".into(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding {
                reason: "non-finite component".into(),
            });
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Returns a unit-norm copy; errors when the norm is zero.
    pub fn normalized(&self) -> Result<Embedding> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNormEmbedding);
        }
        Ok(Embedding {
            values: self.values.iter().map(|v| v / n).collect(),
        })
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Cosine similarity of two embeddings.
    pub fn cosine(&self, other: &Embedding) -> f64 {
        self.dot(other) / (self.norm() * other.norm())
    }
}

/// One observation of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// 1-based frame index.
    pub frame: u32,
    pub bbox: BoundingBox,
    /// Detector confidence in [0, 1].
    pub confidence: f64,
    pub embedding: Option<Embedding>,
}

impl Detection {
    pub fn new(
        frame: u32,
        bbox: BoundingBox,
        confidence: f64,
        embedding: Option<Embedding>,
    ) -> Result<Self> {
        if frame < 1 {
            return Err(Error::InvalidBox {
                reason: format!("frame index must be >= 1, got {frame}"),
            });
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidBox {
                reason: format!("confidence must be in [0,1], got {confidence}"),
            });
        }
        Ok(Self {
            frame,
            bbox,
            confidence,
            embedding,
        })
    }
}

/// Persistent identity handed out by the tracker. Never reused within a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrackId(pub u64);

impl std::fmt::Display for TrackId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Tracklet lifecycle state.
///
/// Legal transitions: Tentative -> {Confirmed, Removed}, Confirmed -> Lost,
/// Lost -> {Confirmed, Removed}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    Tentative,
    Confirmed,
    Lost,
    Removed,
}

impl TrackState {
    pub fn can_transition(self, to: TrackState) -> bool {
        use TrackState::*;
        matches!(
            (self, to),
            (Tentative, Confirmed)
                | (Tentative, Removed)
                | (Confirmed, Lost)
                | (Lost, Confirmed)
                | (Lost, Removed)
        ) || self == to
    }
}

/// A tracked identity: motion state, appearance gallery and lifecycle counters.
#[derive(Debug, Clone)]
pub struct Tracklet {
    pub id: TrackId,
    pub state: TrackState,
    pub motion: MotionState,
    /// Unit-norm appearance embeddings, oldest first, FIFO-evicted at capacity.
    pub gallery: VecDeque<Embedding>,
    /// Box of the most recent associated detection.
    pub last_box: BoundingBox,
    /// Box of the associated detection before that; absent for new tracks.
    pub prev_box: Option<BoundingBox>,
    /// `1 - iou(prev_box, last_box)`; 1 while `prev_box` is absent.
    pub motion_level: f64,
    /// Consecutive associations (resets on a miss).
    pub hits: u32,
    /// Consecutive frames without an association.
    pub misses: u32,
}

impl Tracklet {
    /// Moves the lifecycle to `to`, panicking on an illegal transition.
    /// Transitions are driven only by the tracker, so a violation is a bug.
    pub(crate) fn set_state(&mut self, to: TrackState) {
        assert!(
            self.state.can_transition(to),
            "illegal track state transition {:?} -> {:?}",
            self.state,
            to
        );
        self.state = to;
    }
}
