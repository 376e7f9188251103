use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pipeline::LabeledSample;

/// Training queue bound: a sample count `N_q`, or unbounded (`T_q = inf`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "QueueRepr", into = "QueueRepr")]
pub enum QueueCapacity {
    Bounded(usize),
    Unbounded,
}

impl QueueCapacity {
    /// `N_q = T_q * F`; infinite `T_q` gives an unbounded queue.
    pub fn from_seconds(t_q: f64, frame_rate: f64) -> Self {
        if t_q.is_infinite() {
            QueueCapacity::Unbounded
        } else {
            QueueCapacity::Bounded((t_q * frame_rate).round() as usize)
        }
    }

    pub fn seconds(self, frame_rate: f64) -> f64 {
        match self {
            QueueCapacity::Bounded(n) => n as f64 / frame_rate,
            QueueCapacity::Unbounded => f64::INFINITY,
        }
    }
}

impl fmt::Display for QueueCapacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueueCapacity::Bounded(n) => write!(f, "{n}"),
            QueueCapacity::Unbounded => f.write_str("inf"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum QueueRepr {
    Count(usize),
    Text(String),
}

impl TryFrom<QueueRepr> for QueueCapacity {
    type Error = String;

    fn try_from(repr: QueueRepr) -> Result<Self, String> {
        match repr {
            QueueRepr::Count(0) => Err("queue capacity must be positive".into()),
            QueueRepr::Count(n) => Ok(QueueCapacity::Bounded(n)),
            QueueRepr::Text(s) if s == "inf" || s == "unbounded" => Ok(QueueCapacity::Unbounded),
            QueueRepr::Text(s) => Err(format!("queue capacity must be a count or \"inf\", got {s:?}")),
        }
    }
}

impl From<QueueCapacity> for QueueRepr {
    fn from(c: QueueCapacity) -> Self {
        match c {
            QueueCapacity::Bounded(n) => QueueRepr::Count(n),
            QueueCapacity::Unbounded => QueueRepr::Text("inf".into()),
        }
    }
}

/// FIFO of the most recent labeled samples.
#[derive(Debug, Clone)]
pub struct TrainingQueue<T> {
    capacity: QueueCapacity,
    entries: VecDeque<LabeledSample<T>>,
}

impl<T: Clone> TrainingQueue<T> {
    pub fn new(capacity: QueueCapacity) -> Self {
        TrainingQueue {
            capacity,
            entries: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> QueueCapacity {
        self.capacity
    }

    /// Appends `sample`, evicting the oldest entry when over capacity.
    pub fn push_sample(&mut self, sample: LabeledSample<T>) {
        self.entries.push_back(sample);
        if let QueueCapacity::Bounded(n) = self.capacity {
            if self.entries.len() > n {
                self.entries.pop_front();
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledSample<T>> {
        self.entries.iter()
    }

    pub fn oldest(&self) -> Option<&LabeledSample<T>> {
        self.entries.front()
    }

    /// Copy of the current contents, oldest first.
    pub fn snapshot(&self) -> Vec<LabeledSample<T>> {
        self.entries.iter().cloned().collect()
    }
}
