use crate::{Error, Result};

/// A token stream cut into `batch_size` contiguous lanes.
///
/// Lane `b` holds tokens `[b·L, (b+1)·L)` of the stream, `L = ⌊len / batch⌋`;
/// leftover tokens are dropped. Unroll windows tile each lane without
/// overlap, targets shifted by one.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchedCorpus {
    batch_size: usize,
    unroll_length: usize,
    lanes: Vec<Vec<usize>>,
}

/// One unroll window: `inputs[b][t]` is followed in the stream by
/// `targets[b][t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub inputs: Vec<Vec<usize>>,
    pub targets: Vec<Vec<usize>>,
}

impl Window {
    pub fn batch_size(&self) -> usize {
        self.inputs.len()
    }

    pub fn len(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn batchify(ids: &[usize], batch_size: usize, unroll_length: usize) -> Result<BatchedCorpus> {
    if batch_size == 0 || unroll_length == 0 {
        return Err(Error::Config("batch_size and unroll_length must be positive".into()));
    }
    if ids.len() < batch_size * (unroll_length + 1) {
        return Err(Error::InvalidInput(format!(
            "stream of {} tokens is too short for batch {batch_size} × unroll {unroll_length}",
            ids.len()
        )));
    }
    let seg = ids.len() / batch_size;
    let lanes = ids.chunks_exact(seg).take(batch_size).map(<[usize]>::to_vec).collect();
    Ok(BatchedCorpus {
        batch_size,
        unroll_length,
        lanes,
    })
}

impl BatchedCorpus {
    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn unroll_length(&self) -> usize {
        self.unroll_length
    }

    pub fn lane_length(&self) -> usize {
        self.lanes[0].len()
    }

    pub fn lanes(&self) -> &[Vec<usize>] {
        &self.lanes
    }

    /// Full windows only.
    pub fn window_count(&self) -> usize {
        (self.lane_length() - 1) / self.unroll_length
    }

    pub fn window(&self, w: usize) -> Window {
        assert!(w < self.window_count(), "window {w} out of range");
        let start = w * self.unroll_length;
        let end = start + self.unroll_length;
        Window {
            inputs: self.lanes.iter().map(|l| l[start..end].to_vec()).collect(),
            targets: self.lanes.iter().map(|l| l[start + 1..end + 1].to_vec()).collect(),
        }
    }

    pub fn windows(&self) -> impl Iterator<Item = Window> + '_ {
        (0..self.window_count()).map(|w| self.window(w))
    }

    /// Targets covered by one pass over all windows.
    pub fn targets_per_epoch(&self) -> usize {
        self.batch_size * self.unroll_length * self.window_count()
    }
}
